//! Elaborated, flattened design: every identifier resolved to a signal id and
//! every expression annotated with its evaluation width.

use crate::ast::{BinOp, Edge, UnOp};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SigId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigKind {
    Net,
    Var,
}

#[derive(Debug, Clone)]
pub struct Signal {
    /// Hierarchical name, e.g. `tb.dut.acc`.
    pub name: String,
    pub width: u32,
    /// Unpacked array length; `None` for scalars.
    pub array: Option<u32>,
    /// Low index of the unpacked range, needed to map `mem[expr]` to storage.
    pub array_lo: u128,
    pub kind: SigKind,
}

#[derive(Debug, Clone)]
pub struct RExpr {
    pub kind: RExprKind,
    /// Final evaluation width after context propagation.
    pub width: u32,
}

#[derive(Debug, Clone)]
pub enum RExprKind {
    Lit(u128),
    Sig(SigId),
    ArrElem(SigId, Box<RExpr>),
    BitSel(SigId, Box<RExpr>),
    PartSel(SigId, u32, u32), // msb, lsb relative to bit 0
    Unary(UnOp, Box<RExpr>),
    Binary(BinOp, Box<RExpr>, Box<RExpr>),
    Ternary(Box<RExpr>, Box<RExpr>, Box<RExpr>),
    Concat(Vec<RExpr>),
}

#[derive(Debug, Clone)]
pub enum RTarget {
    Sig(SigId),
    ArrElem(SigId, RExpr),
    BitSel(SigId, RExpr),
    PartSel(SigId, u32, u32),
    Concat(Vec<RTarget>),
}

impl RTarget {
    pub fn width(&self, design: &Design) -> u32 {
        match self {
            RTarget::Sig(id) | RTarget::ArrElem(id, _) => design.signals[id.0 as usize].width,
            RTarget::BitSel(..) => 1,
            RTarget::PartSel(_, msb, lsb) => msb - lsb + 1,
            RTarget::Concat(parts) => parts.iter().map(|p| p.width(design)).sum(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum RStmt {
    Block(Vec<RStmt>),
    Assign { target: RTarget, rhs: RExpr, nonblocking: bool },
    If { cond: RExpr, then_branch: Arc<RStmt>, else_branch: Option<Arc<RStmt>> },
    Case { scrutinee: RExpr, arms: Vec<(Vec<RExpr>, Arc<RStmt>)>, default: Option<Arc<RStmt>> },
    For { init: Box<RStmt>, cond: RExpr, step: Box<RStmt>, body: Arc<RStmt> },
    While { cond: RExpr, body: Arc<RStmt> },
    Repeat { count: RExpr, body: Arc<RStmt> },
    Forever { body: Arc<RStmt> },
    Delay { amount: RExpr, then: Arc<RStmt> },
    EventWait { events: Vec<(SigId, Edge)>, then: Arc<RStmt> },
    Display { newline: bool, parts: Vec<RDisplayArg> },
    Finish,
    Empty,
}

#[derive(Debug, Clone)]
pub enum RDisplayArg {
    Str(String),
    Expr(RExpr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcKind {
    Initial,
    Always,
    /// Continuous assignment or implicit port connection, evaluated once at
    /// time zero and re-evaluated on any input change.
    Comb,
}

#[derive(Debug, Clone)]
pub struct Process {
    pub kind: ProcKind,
    pub body: Arc<RStmt>,
    /// Hierarchical location, for diagnostics.
    pub site: String,
}

#[derive(Debug, Default)]
pub struct Design {
    pub signals: Vec<Signal>,
    pub processes: Vec<Process>,
    pub top: String,
}

impl Design {
    pub fn signal(&self, id: SigId) -> &Signal {
        &self.signals[id.0 as usize]
    }
}

pub fn mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}
