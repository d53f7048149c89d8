//! Syntax tree for the supported Verilog subset.

use crate::lexer::Pos;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub modules: Vec<Module>,
}

#[derive(Debug, Clone)]
pub struct Module {
    pub name: String,
    pub pos: Pos,
    pub ports: Vec<Port>,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Input,
    Output,
    Inout,
}

#[derive(Debug, Clone)]
pub struct Port {
    pub dir: Direction,
    pub is_reg: bool,
    pub range: Option<(Expr, Expr)>,
    pub name: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetKind {
    Wire,
    Reg,
    Integer,
}

#[derive(Debug, Clone)]
pub enum Item {
    Decl {
        kind: NetKind,
        range: Option<(Expr, Expr)>,
        names: Vec<(String, Option<(Expr, Expr)>, Pos)>, // name, unpacked dims
    },
    Param {
        localparam: bool,
        assigns: Vec<(String, Expr, Pos)>,
    },
    ContAssign {
        lhs: LValue,
        rhs: Expr,
        pos: Pos,
    },
    Always {
        body: Stmt,
        pos: Pos,
    },
    Initial {
        body: Stmt,
        pos: Pos,
    },
    Instance {
        module: String,
        name: String,
        conns: Vec<Connection>,
        pos: Pos,
    },
}

#[derive(Debug, Clone)]
pub enum Connection {
    Named { port: String, expr: Option<Expr>, pos: Pos },
    Ordered { expr: Expr, pos: Pos },
}

#[derive(Debug, Clone)]
pub enum LValue {
    Ident(String, Pos),
    Index(String, Box<Expr>, Pos),
    Range(String, Box<Expr>, Box<Expr>, Pos),
    Concat(Vec<LValue>, Pos),
}

impl LValue {
    pub fn pos(&self) -> Pos {
        match self {
            LValue::Ident(_, p) | LValue::Index(_, _, p) | LValue::Range(_, _, _, p) => *p,
            LValue::Concat(_, p) => *p,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Block(Vec<Stmt>),
    Assign { lhs: LValue, rhs: Expr, nonblocking: bool, pos: Pos },
    If { cond: Expr, then_branch: Arc<Stmt>, else_branch: Option<Arc<Stmt>>, pos: Pos },
    Case { scrutinee: Expr, arms: Vec<CaseArm>, default: Option<Arc<Stmt>>, pos: Pos },
    For { init: Box<Stmt>, cond: Expr, step: Box<Stmt>, body: Arc<Stmt>, pos: Pos },
    While { cond: Expr, body: Arc<Stmt>, pos: Pos },
    Repeat { count: Expr, body: Arc<Stmt>, pos: Pos },
    Forever { body: Arc<Stmt>, pos: Pos },
    Delay { amount: Expr, then: Arc<Stmt>, pos: Pos },
    EventWait { events: Vec<EventExpr>, then: Arc<Stmt>, pos: Pos },
    Display { newline: bool, args: Vec<DisplayArg>, pos: Pos },
    Finish { pos: Pos },
    Empty,
}

#[derive(Debug, Clone)]
pub struct CaseArm {
    pub labels: Vec<Expr>,
    pub body: Arc<Stmt>,
}

#[derive(Debug, Clone)]
pub enum DisplayArg {
    Str(String),
    Expr(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Pos,
    Neg,
    Any,
}

#[derive(Debug, Clone)]
pub struct EventExpr {
    pub edge: Edge,
    /// `None` means `@(*)`: sensitivity inferred from the statement body.
    pub signal: Option<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    BitAnd,
    BitOr,
    BitXor,
    BitXnor,
    LogAnd,
    LogOr,
    Eq,
    Ne,
    CaseEq,
    CaseNe,
    Lt,
    Le,
    Gt,
    Ge,
    Shl,
    Shr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Plus,
    Neg,
    Not,
    BitNot,
    RedAnd,
    RedOr,
    RedXor,
    RedNand,
    RedNor,
    RedXnor,
}

#[derive(Debug, Clone)]
pub enum Expr {
    Literal { value: u128, width: u32, sized: bool, pos: Pos },
    Ident(String, Pos),
    Index { base: String, index: Box<Expr>, pos: Pos },
    Range { base: String, msb: Box<Expr>, lsb: Box<Expr>, pos: Pos },
    Unary { op: UnOp, operand: Box<Expr>, pos: Pos },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr>, pos: Pos },
    Ternary { cond: Box<Expr>, then_val: Box<Expr>, else_val: Box<Expr>, pos: Pos },
    Concat { parts: Vec<Expr>, pos: Pos },
    Repeat { count: Box<Expr>, operand: Box<Expr>, pos: Pos },
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Literal { pos, .. }
            | Expr::Ident(_, pos)
            | Expr::Index { pos, .. }
            | Expr::Range { pos, .. }
            | Expr::Unary { pos, .. }
            | Expr::Binary { pos, .. }
            | Expr::Ternary { pos, .. }
            | Expr::Concat { pos, .. }
            | Expr::Repeat { pos, .. } => *pos,
        }
    }
}
