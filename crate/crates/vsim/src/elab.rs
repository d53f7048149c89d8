//! Elaboration: resolve names, flatten the instance hierarchy, annotate widths.

use crate::ast::*;
use crate::ir::*;
use crate::lexer::Pos;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

#[derive(Debug)]
pub struct ElabError {
    pub pos: Option<Pos>,
    pub msg: String,
}

impl fmt::Display for ElabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(p) => write!(f, "{}: {}", p, self.msg),
            None => write!(f, "{}", self.msg),
        }
    }
}

impl std::error::Error for ElabError {}

type EResult<T> = Result<T, ElabError>;

fn err_at<T>(pos: Pos, msg: impl Into<String>) -> EResult<T> {
    Err(ElabError { pos: Some(pos), msg: msg.into() })
}

const MAX_WIDTH: u32 = 128;
const MAX_DEPTH: u32 = 64;

/// Pick the simulation top: a module with no ports that is never instantiated.
/// A module named `tb` wins ties.
pub fn pick_top<'a>(unit: &'a SourceUnit) -> EResult<&'a str> {
    let mut instantiated = BTreeSet::new();
    for m in &unit.modules {
        for item in &m.items {
            if let Item::Instance { module, .. } = item {
                instantiated.insert(module.clone());
            }
        }
    }
    let roots: Vec<&Module> = unit
        .modules
        .iter()
        .filter(|m| !instantiated.contains(&m.name) && m.ports.is_empty())
        .collect();
    match roots.len() {
        0 => Err(ElabError {
            pos: None,
            msg: "no top-level module without ports found (is the testbench included?)".into(),
        }),
        1 => Ok(&roots[0].name),
        _ => {
            if let Some(tb) = roots.iter().find(|m| m.name == "tb") {
                return Ok(&tb.name);
            }
            // deterministic fallback: the last one in source order
            Ok(&roots.last().unwrap().name)
        }
    }
}

pub fn elaborate(unit: &SourceUnit, top: Option<&str>) -> EResult<Design> {
    let mut by_name: BTreeMap<&str, &Module> = BTreeMap::new();
    for m in &unit.modules {
        if by_name.insert(&m.name, m).is_some() {
            return err_at(m.pos, format!("module '{}' defined twice", m.name));
        }
    }
    let top_name = match top {
        Some(t) => {
            if !by_name.contains_key(t) {
                return Err(ElabError { pos: None, msg: format!("top module '{t}' not found") });
            }
            t.to_string()
        }
        None => pick_top(unit)?.to_string(),
    };
    let mut el = Elaborator { modules: by_name, design: Design::default() };
    el.design.top = top_name.clone();
    let top_mod = el.modules[top_name.as_str()];
    if !top_mod.ports.is_empty() {
        return err_at(top_mod.pos, format!("top module '{top_name}' must have no ports"));
    }
    el.elab_module(top_mod, top_name.clone(), &[], 0)?;
    el.check_net_drivers()?;
    Ok(el.design)
}

struct Elaborator<'a> {
    modules: BTreeMap<&'a str, &'a Module>,
    design: Design,
}

#[derive(Default)]
struct Scope {
    prefix: String,
    signals: HashMap<String, SigId>,
    params: HashMap<String, (u128, u32)>,
}

/// A resolved port connection handed down from the parent instance.
struct PortConn {
    port: String,
    /// For inputs: RHS expression in the parent scope.
    input_rhs: Option<RExpr>,
    /// For outputs: LHS target in the parent scope.
    output_lhs: Option<RTarget>,
    pos: Pos,
}

impl<'a> Elaborator<'a> {
    fn new_signal(&mut self, sig: Signal) -> SigId {
        let id = SigId(self.design.signals.len() as u32);
        self.design.signals.push(sig);
        id
    }

    fn elab_module(
        &mut self,
        m: &Module,
        prefix: String,
        conns: &[PortConn],
        depth: u32,
    ) -> EResult<()> {
        if depth > MAX_DEPTH {
            return err_at(m.pos, format!("instance hierarchy deeper than {MAX_DEPTH} levels"));
        }
        let mut scope = Scope { prefix: prefix.clone(), ..Default::default() };

        // pass 1a: parameters, in declaration order
        for item in &m.items {
            if let Item::Param { assigns, .. } = item {
                for (name, expr, pos) in assigns {
                    let v = self.eval_const(expr, &scope)?;
                    if scope.params.insert(name.clone(), v).is_some() {
                        return err_at(*pos, format!("parameter '{name}' redefined"));
                    }
                }
            }
        }

        // pass 1b: ports and declarations become signals
        for p in &m.ports {
            let width = self.range_width(&p.range, &scope)?;
            if p.dir == Direction::Inout {
                return err_at(p.pos, "inout ports are not supported");
            }
            let kind = if p.is_reg { SigKind::Var } else { SigKind::Net };
            let id = self.new_signal(Signal {
                name: format!("{prefix}.{}", p.name),
                width,
                array: None,
                array_lo: 0,
                kind,
            });
            if scope.signals.insert(p.name.clone(), id).is_some() {
                return err_at(p.pos, format!("port '{}' declared twice", p.name));
            }
        }
        for item in &m.items {
            if let Item::Decl { kind, range, names } = item {
                let width = match kind {
                    NetKind::Integer => 32,
                    _ => self.range_width(range, &scope)?,
                };
                let sk = match kind {
                    NetKind::Wire => SigKind::Net,
                    NetKind::Reg | NetKind::Integer => SigKind::Var,
                };
                for (name, dims, pos) in names {
                    let (array, array_lo) = match dims {
                        None => (None, 0),
                        Some((a, b)) => {
                            let (av, _) = self.eval_const(a, &scope)?;
                            let (bv, _) = self.eval_const(b, &scope)?;
                            let (lo, hi) = if av <= bv { (av, bv) } else { (bv, av) };
                            let len = hi - lo + 1;
                            if len > 1_000_000 {
                                return err_at(*pos, format!("array '{name}' too large"));
                            }
                            (Some(len as u32), lo)
                        }
                    };
                    let id = self.new_signal(Signal {
                        name: format!("{prefix}.{name}"),
                        width,
                        array,
                        array_lo,
                        kind: sk,
                    });
                    if scope.signals.insert(name.clone(), id).is_some() {
                        return err_at(*pos, format!("'{name}' declared twice"));
                    }
                }
            }
        }

        // parent-side port plumbing
        let mut seen_ports = BTreeSet::new();
        for conn in conns {
            let port = m.ports.iter().find(|p| p.name == conn.port).ok_or(ElabError {
                pos: Some(conn.pos),
                msg: format!("module '{}' has no port '{}'", m.name, conn.port),
            })?;
            if !seen_ports.insert(conn.port.clone()) {
                return err_at(conn.pos, format!("port '{}' connected twice", conn.port));
            }
            let child_sig = scope.signals[&port.name];
            let child_w = self.design.signal(child_sig).width;
            match port.dir {
                Direction::Input => {
                    let mut rhs = conn.input_rhs.clone().ok_or(ElabError {
                        pos: Some(conn.pos),
                        msg: format!("input port '{}' needs an expression", conn.port),
                    })?;
                    apply_ctx(&mut rhs, child_w);
                    self.push_comb(
                        RTarget::Sig(child_sig),
                        rhs,
                        format!("{prefix}.{}", port.name),
                    );
                }
                Direction::Output => {
                    let lhs = conn.output_lhs.clone().ok_or(ElabError {
                        pos: Some(conn.pos),
                        msg: format!(
                            "output port '{}' must connect to an assignable expression",
                            conn.port
                        ),
                    })?;
                    let tw = lhs.width(&self.design);
                    let mut rhs = RExpr { kind: RExprKind::Sig(child_sig), width: child_w };
                    apply_ctx(&mut rhs, tw);
                    self.push_comb(lhs, rhs, format!("{prefix}.{}", port.name));
                }
                Direction::Inout => unreachable!(),
            }
        }

        // pass 2: behavior
        for item in &m.items {
            match item {
                Item::Decl { .. } | Item::Param { .. } => {}
                Item::ContAssign { lhs, rhs, pos } => {
                    let target = self.resolve_target(lhs, &scope, false)?;
                    let tw = target.width(&self.design);
                    let mut r = self.resolve_expr(rhs, &scope)?;
                    apply_ctx(&mut r, tw);
                    let _ = pos;
                    self.push_comb(target, r, format!("{prefix}:assign"));
                }
                Item::Always { body, pos } => {
                    let rbody = self.resolve_stmt(body, &scope)?;
                    let rbody = self.desugar_always(rbody, *pos)?;
                    self.design.processes.push(Process {
                        kind: ProcKind::Always,
                        body: Arc::new(rbody),
                        site: format!("{prefix}:always"),
                    });
                }
                Item::Initial { body, .. } => {
                    let rbody = self.resolve_stmt(body, &scope)?;
                    self.design.processes.push(Process {
                        kind: ProcKind::Initial,
                        body: Arc::new(rbody),
                        site: format!("{prefix}:initial"),
                    });
                }
                Item::Instance { module, name, conns: ast_conns, pos } => {
                    let child = *self.modules.get(module.as_str()).ok_or(ElabError {
                        pos: Some(*pos),
                        msg: format!("unknown module '{module}'"),
                    })?;
                    let resolved = self.resolve_conns(child, ast_conns, &scope)?;
                    self.elab_module(child, format!("{prefix}.{name}"), &resolved, depth + 1)?;
                }
            }
        }
        Ok(())
    }

    fn resolve_conns(
        &mut self,
        child: &Module,
        conns: &[Connection],
        scope: &Scope,
    ) -> EResult<Vec<PortConn>> {
        let mut out = Vec::new();
        let ordered = conns.iter().any(|c| matches!(c, Connection::Ordered { .. }));
        if ordered && conns.iter().any(|c| matches!(c, Connection::Named { .. })) {
            let pos = match &conns[0] {
                Connection::Named { pos, .. } | Connection::Ordered { pos, .. } => *pos,
            };
            return err_at(pos, "cannot mix ordered and named port connections");
        }
        if ordered && conns.len() > child.ports.len() {
            let pos = match &conns[0] {
                Connection::Named { pos, .. } | Connection::Ordered { pos, .. } => *pos,
            };
            return err_at(
                pos,
                format!("{} connections for {} ports", conns.len(), child.ports.len()),
            );
        }
        for (i, conn) in conns.iter().enumerate() {
            let (port_name, expr, pos) = match conn {
                Connection::Named { port, expr, pos } => (port.clone(), expr.clone(), *pos),
                Connection::Ordered { expr, pos } => {
                    (child.ports[i].name.clone(), Some(expr.clone()), *pos)
                }
            };
            let Some(expr) = expr else { continue }; // explicitly unconnected
            let port = child.ports.iter().find(|p| p.name == port_name).ok_or(ElabError {
                pos: Some(pos),
                msg: format!("module '{}' has no port '{port_name}'", child.name),
            })?;
            let pc = match port.dir {
                Direction::Input => PortConn {
                    port: port_name,
                    input_rhs: Some(self.resolve_expr(&expr, scope)?),
                    output_lhs: None,
                    pos,
                },
                Direction::Output => {
                    let lv = expr_as_lvalue(&expr).ok_or(ElabError {
                        pos: Some(pos),
                        msg: format!(
                            "output port '{port_name}' must connect to a net, bit/part select, or concatenation"
                        ),
                    })?;
                    PortConn {
                        port: port_name,
                        input_rhs: None,
                        output_lhs: Some(self.resolve_target(&lv, scope, false)?),
                        pos,
                    }
                }
                Direction::Inout => return err_at(pos, "inout ports are not supported"),
            };
            out.push(pc);
        }
        Ok(out)
    }

    fn push_comb(&mut self, target: RTarget, rhs: RExpr, site: String) {
        let mut reads = BTreeSet::new();
        collect_expr_reads(&rhs, &mut reads);
        collect_target_index_reads(&target, &mut reads);
        let assign = RStmt::Assign { target, rhs, nonblocking: false };
        let body = if reads.is_empty() {
            // constant drive: evaluate once
            assign
        } else {
            let events: Vec<(SigId, Edge)> = reads.into_iter().map(|s| (s, Edge::Any)).collect();
            RStmt::Forever {
                body: Arc::new(RStmt::Block(vec![
                    assign,
                    RStmt::EventWait { events, then: Arc::new(RStmt::Empty) },
                ])),
            }
        };
        self.design.processes.push(Process { kind: ProcKind::Comb, body: Arc::new(body), site });
    }

    /// `always` bodies loop forever; `@(*)` runs once at time zero before the
    /// first wait so combinational logic settles from initial values.
    fn desugar_always(&self, body: RStmt, pos: Pos) -> EResult<RStmt> {
        match body {
            RStmt::EventWait { events, then } if events.is_empty() => {
                // @(*): inferred sensitivity over the body
                let mut reads = BTreeSet::new();
                collect_stmt_reads(&then, &mut reads);
                if reads.is_empty() {
                    return err_at(pos, "always @(*) body reads no signals");
                }
                let events: Vec<(SigId, Edge)> =
                    reads.into_iter().map(|s| (s, Edge::Any)).collect();
                Ok(RStmt::Forever {
                    body: Arc::new(RStmt::Block(vec![
                        as_owned(&then),
                        RStmt::EventWait { events, then: Arc::new(RStmt::Empty) },
                    ])),
                })
            }
            RStmt::EventWait { .. } | RStmt::Delay { .. } => {
                Ok(RStmt::Forever { body: Arc::new(body) })
            }
            _ => err_at(pos, "always body must start with @(...) or #delay"),
        }
    }

    fn range_width(&self, range: &Option<(Expr, Expr)>, scope: &Scope) -> EResult<u32> {
        match range {
            None => Ok(1),
            Some((msb, lsb)) => {
                let (m, _) = self.eval_const(msb, scope)?;
                let (l, _) = self.eval_const(lsb, scope)?;
                if l != 0 {
                    return err_at(lsb.pos(), "only [msb:0] ranges are supported");
                }
                let w = m as u32 + 1;
                if w == 0 || w > MAX_WIDTH {
                    return err_at(msb.pos(), format!("width {w} out of range 1..={MAX_WIDTH}"));
                }
                Ok(w)
            }
        }
    }

    fn eval_const(&self, e: &Expr, scope: &Scope) -> EResult<(u128, u32)> {
        let r = self.resolve_expr_inner(e, scope, true)?;
        match const_fold(&r) {
            Some(v) => Ok((v & mask(r.width), r.width)),
            None => err_at(e.pos(), "expression must be constant here"),
        }
    }

    fn resolve_expr(&self, e: &Expr, scope: &Scope) -> EResult<RExpr> {
        self.resolve_expr_inner(e, scope, false)
    }

    fn resolve_expr_inner(&self, e: &Expr, scope: &Scope, const_only: bool) -> EResult<RExpr> {
        Ok(match e {
            Expr::Literal { value, width, .. } => {
                RExpr { kind: RExprKind::Lit(*value), width: *width }
            }
            Expr::Ident(name, pos) => {
                if let Some((v, w)) = scope.params.get(name) {
                    RExpr { kind: RExprKind::Lit(*v), width: *w }
                } else if const_only {
                    return err_at(*pos, format!("'{name}' is not a parameter"));
                } else {
                    let id = self.lookup(scope, name, *pos)?;
                    let sig = self.design.signal(id);
                    if sig.array.is_some() {
                        return err_at(*pos, format!("array '{name}' needs an index"));
                    }
                    RExpr { kind: RExprKind::Sig(id), width: sig.width }
                }
            }
            Expr::Index { base, index, pos } => {
                if const_only {
                    return err_at(*pos, "select not allowed in constant expression");
                }
                let id = self.lookup(scope, base, *pos)?;
                let idx = self.resolve_expr_inner(index, scope, const_only)?;
                let sig = self.design.signal(id);
                if sig.array.is_some() {
                    RExpr { kind: RExprKind::ArrElem(id, Box::new(idx)), width: sig.width }
                } else {
                    RExpr { kind: RExprKind::BitSel(id, Box::new(idx)), width: 1 }
                }
            }
            Expr::Range { base, msb, lsb, pos } => {
                if const_only {
                    return err_at(*pos, "select not allowed in constant expression");
                }
                let id = self.lookup(scope, base, *pos)?;
                let sig = self.design.signal(id);
                if sig.array.is_some() {
                    return err_at(*pos, "part select on arrays is not supported");
                }
                let (m, _) = self.eval_const(msb, scope)?;
                let (l, _) = self.eval_const(lsb, scope)?;
                let (m, l) = (m as u32, l as u32);
                if m < l || m >= sig.width {
                    return err_at(*pos, format!("part select [{m}:{l}] out of range"));
                }
                RExpr { kind: RExprKind::PartSel(id, m, l), width: m - l + 1 }
            }
            Expr::Unary { op, operand, pos: _ } => {
                let inner = self.resolve_expr_inner(operand, scope, const_only)?;
                let width = match op {
                    UnOp::BitNot | UnOp::Neg | UnOp::Plus => inner.width,
                    _ => 1,
                };
                RExpr { kind: RExprKind::Unary(*op, Box::new(inner)), width }
            }
            Expr::Binary { op, lhs, rhs, pos: _ } => {
                let mut l = self.resolve_expr_inner(lhs, scope, const_only)?;
                let mut r = self.resolve_expr_inner(rhs, scope, const_only)?;
                let width = match op {
                    BinOp::Add
                    | BinOp::Sub
                    | BinOp::Mul
                    | BinOp::Div
                    | BinOp::Mod
                    | BinOp::BitAnd
                    | BinOp::BitOr
                    | BinOp::BitXor
                    | BinOp::BitXnor => l.width.max(r.width),
                    BinOp::Shl | BinOp::Shr => l.width,
                    BinOp::Eq
                    | BinOp::Ne
                    | BinOp::CaseEq
                    | BinOp::CaseNe
                    | BinOp::Lt
                    | BinOp::Le
                    | BinOp::Gt
                    | BinOp::Ge => {
                        let w = l.width.max(r.width);
                        apply_ctx(&mut l, w);
                        apply_ctx(&mut r, w);
                        1
                    }
                    BinOp::LogAnd | BinOp::LogOr => 1,
                };
                RExpr { kind: RExprKind::Binary(*op, Box::new(l), Box::new(r)), width }
            }
            Expr::Ternary { cond, then_val, else_val, pos: _ } => {
                let c = self.resolve_expr_inner(cond, scope, const_only)?;
                let t = self.resolve_expr_inner(then_val, scope, const_only)?;
                let f = self.resolve_expr_inner(else_val, scope, const_only)?;
                let width = t.width.max(f.width);
                RExpr { kind: RExprKind::Ternary(Box::new(c), Box::new(t), Box::new(f)), width }
            }
            Expr::Concat { parts, pos } => {
                let mut rs = Vec::new();
                let mut total = 0u32;
                for p in parts {
                    if matches!(p, Expr::Literal { sized: false, .. }) {
                        return err_at(p.pos(), "unsized literal inside concatenation");
                    }
                    let r = self.resolve_expr_inner(p, scope, const_only)?;
                    total += r.width;
                    rs.push(r);
                }
                if total == 0 || total > MAX_WIDTH {
                    return err_at(*pos, format!("concatenation width {total} out of range"));
                }
                RExpr { kind: RExprKind::Concat(rs), width: total }
            }
            Expr::Repeat { count, operand, pos } => {
                let (n, _) = self.eval_const(count, scope)?;
                if matches!(**operand, Expr::Literal { sized: false, .. }) {
                    return err_at(operand.pos(), "unsized literal inside replication");
                }
                let inner = self.resolve_expr_inner(operand, scope, const_only)?;
                let total = (n as u32).saturating_mul(inner.width);
                if n == 0 || total > MAX_WIDTH {
                    return err_at(*pos, format!("replication width {total} out of range"));
                }
                let parts = vec![inner; n as usize];
                RExpr { kind: RExprKind::Concat(parts), width: total }
            }
        })
    }

    fn lookup(&self, scope: &Scope, name: &str, pos: Pos) -> EResult<SigId> {
        scope.signals.get(name).copied().ok_or(ElabError {
            pos: Some(pos),
            msg: format!("unknown identifier '{name}'"),
        })
    }

    fn resolve_target(&self, lv: &LValue, scope: &Scope, procedural: bool) -> EResult<RTarget> {
        let t = match lv {
            LValue::Ident(name, pos) => {
                let id = self.lookup(scope, name, *pos)?;
                if self.design.signal(id).array.is_some() {
                    return err_at(*pos, format!("array '{name}' needs an index"));
                }
                RTarget::Sig(id)
            }
            LValue::Index(name, idx, pos) => {
                let id = self.lookup(scope, name, *pos)?;
                let ridx = self.resolve_expr(idx, scope)?;
                if self.design.signal(id).array.is_some() {
                    RTarget::ArrElem(id, ridx)
                } else {
                    RTarget::BitSel(id, ridx)
                }
            }
            LValue::Range(name, msb, lsb, pos) => {
                let id = self.lookup(scope, name, *pos)?;
                if self.design.signal(id).array.is_some() {
                    return err_at(*pos, "part select on arrays is not supported");
                }
                let (m, _) = self.eval_const(msb, scope)?;
                let (l, _) = self.eval_const(lsb, scope)?;
                let (m, l) = (m as u32, l as u32);
                let w = self.design.signal(id).width;
                if m < l || m >= w {
                    return err_at(*pos, format!("part select [{m}:{l}] out of range"));
                }
                RTarget::PartSel(id, m, l)
            }
            LValue::Concat(parts, _) => {
                let mut rs = Vec::new();
                for p in parts {
                    rs.push(self.resolve_target(p, scope, procedural)?);
                }
                RTarget::Concat(rs)
            }
        };
        self.check_target_kind(&t, lv.pos(), procedural)?;
        Ok(t)
    }

    fn check_target_kind(&self, t: &RTarget, pos: Pos, procedural: bool) -> EResult<()> {
        match t {
            RTarget::Sig(id) | RTarget::ArrElem(id, _) | RTarget::BitSel(id, _)
            | RTarget::PartSel(id, _, _) => {
                let sig = self.design.signal(*id);
                match (procedural, sig.kind) {
                    (true, SigKind::Net) => err_at(
                        pos,
                        format!("'{}' is a net; procedural assignment needs a reg", sig.name),
                    ),
                    (false, SigKind::Var) => err_at(
                        pos,
                        format!("'{}' is a reg; continuous assignment needs a net", sig.name),
                    ),
                    _ => Ok(()),
                }
            }
            RTarget::Concat(parts) => {
                for p in parts {
                    self.check_target_kind(p, pos, procedural)?;
                }
                Ok(())
            }
        }
    }

    fn resolve_stmt(&self, s: &Stmt, scope: &Scope) -> EResult<RStmt> {
        Ok(match s {
            Stmt::Block(stmts) => {
                let mut out = Vec::new();
                for st in stmts {
                    out.push(self.resolve_stmt(st, scope)?);
                }
                RStmt::Block(out)
            }
            Stmt::Assign { lhs, rhs, nonblocking, pos: _ } => {
                let target = self.resolve_target(lhs, scope, true)?;
                let tw = target.width(&self.design);
                let mut r = self.resolve_expr(rhs, scope)?;
                apply_ctx(&mut r, tw);
                RStmt::Assign { target, rhs: r, nonblocking: *nonblocking }
            }
            Stmt::If { cond, then_branch, else_branch, .. } => RStmt::If {
                cond: self.resolve_expr(cond, scope)?,
                then_branch: Arc::new(self.resolve_stmt(then_branch, scope)?),
                else_branch: match else_branch {
                    Some(e) => Some(Arc::new(self.resolve_stmt(e, scope)?)),
                    None => None,
                },
            },
            Stmt::Case { scrutinee, arms, default, .. } => {
                let mut scrut = self.resolve_expr(scrutinee, scope)?;
                let mut rarms = Vec::new();
                let mut maxw = scrut.width;
                let mut tmp: Vec<(Vec<RExpr>, Arc<RStmt>)> = Vec::new();
                for arm in arms {
                    let mut labels = Vec::new();
                    for l in &arm.labels {
                        let rl = self.resolve_expr(l, scope)?;
                        maxw = maxw.max(rl.width);
                        labels.push(rl);
                    }
                    tmp.push((labels, Arc::new(self.resolve_stmt(&arm.body, scope)?)));
                }
                apply_ctx(&mut scrut, maxw);
                for (labels, body) in tmp {
                    let labels = labels
                        .into_iter()
                        .map(|mut l| {
                            apply_ctx(&mut l, maxw);
                            l
                        })
                        .collect();
                    rarms.push((labels, body));
                }
                RStmt::Case {
                    scrutinee: scrut,
                    arms: rarms,
                    default: match default {
                        Some(d) => Some(Arc::new(self.resolve_stmt(d, scope)?)),
                        None => None,
                    },
                }
            }
            Stmt::For { init, cond, step, body, .. } => RStmt::For {
                init: Box::new(self.resolve_stmt(init, scope)?),
                cond: self.resolve_expr(cond, scope)?,
                step: Box::new(self.resolve_stmt(step, scope)?),
                body: Arc::new(self.resolve_stmt(body, scope)?),
            },
            Stmt::While { cond, body, .. } => RStmt::While {
                cond: self.resolve_expr(cond, scope)?,
                body: Arc::new(self.resolve_stmt(body, scope)?),
            },
            Stmt::Repeat { count, body, .. } => RStmt::Repeat {
                count: self.resolve_expr(count, scope)?,
                body: Arc::new(self.resolve_stmt(body, scope)?),
            },
            Stmt::Forever { body, .. } => {
                RStmt::Forever { body: Arc::new(self.resolve_stmt(body, scope)?) }
            }
            Stmt::Delay { amount, then, .. } => RStmt::Delay {
                amount: self.resolve_expr(amount, scope)?,
                then: Arc::new(self.resolve_stmt(then, scope)?),
            },
            Stmt::EventWait { events, then, pos } => {
                let mut revents = Vec::new();
                let mut star = false;
                for ev in events {
                    match &ev.signal {
                        None => star = true,
                        Some(name) => {
                            let id = self.lookup(scope, name, ev.pos)?;
                            revents.push((id, ev.edge));
                        }
                    }
                }
                let then = Arc::new(self.resolve_stmt(then, scope)?);
                if star {
                    if !revents.is_empty() {
                        return err_at(*pos, "cannot mix @(*) with named events");
                    }
                    // resolved during desugar_always; empty marks @(*)
                    RStmt::EventWait { events: Vec::new(), then }
                } else {
                    RStmt::EventWait { events: revents, then }
                }
            }
            Stmt::Display { newline, args, pos } => {
                let mut parts = Vec::new();
                for a in args {
                    parts.push(match a {
                        DisplayArg::Str(s) => RDisplayArg::Str(s.clone()),
                        DisplayArg::Expr(e) => RDisplayArg::Expr(self.resolve_expr(e, scope)?),
                    });
                }
                let _ = pos;
                RStmt::Display { newline: *newline, parts }
            }
            Stmt::Finish { .. } => RStmt::Finish,
            Stmt::Empty => RStmt::Empty,
        })
    }

    /// Reject overlapping continuous drivers of the same net bits.
    fn check_net_drivers(&self) -> EResult<()> {
        let mut driven: BTreeMap<SigId, Vec<(u32, u32)>> = BTreeMap::new();
        for p in &self.design.processes {
            if p.kind != ProcKind::Comb {
                continue;
            }
            let mut targets = Vec::new();
            collect_assign_targets(&p.body, &mut targets);
            for t in targets {
                add_driver_ranges(&t, &self.design, &mut driven, &p.site)?;
            }
        }
        Ok(())
    }
}

fn add_driver_ranges(
    t: &RTarget,
    design: &Design,
    driven: &mut BTreeMap<SigId, Vec<(u32, u32)>>,
    site: &str,
) -> EResult<()> {
    let (id, range) = match t {
        RTarget::Sig(id) => (*id, (design.signal(*id).width - 1, 0)),
        RTarget::PartSel(id, m, l) => (*id, (*m, *l)),
        RTarget::BitSel(..) | RTarget::ArrElem(..) => return Ok(()), // dynamic, unchecked
        RTarget::Concat(parts) => {
            for p in parts {
                add_driver_ranges(p, design, driven, site)?;
            }
            return Ok(());
        }
    };
    let ranges = driven.entry(id).or_default();
    for (m, l) in ranges.iter() {
        if range.1 <= *m && *l <= range.0 {
            return Err(ElabError {
                pos: None,
                msg: format!(
                    "net '{}' has multiple continuous drivers (near {site})",
                    design.signal(id).name
                ),
            });
        }
    }
    ranges.push(range);
    Ok(())
}

fn collect_assign_targets(s: &RStmt, out: &mut Vec<RTarget>) {
    match s {
        RStmt::Assign { target, .. } => out.push(target.clone()),
        RStmt::Block(stmts) => {
            for st in stmts {
                collect_assign_targets(st, out);
            }
        }
        RStmt::Forever { body } => collect_assign_targets(body, out),
        RStmt::EventWait { then, .. } => collect_assign_targets(then, out),
        _ => {}
    }
}

fn as_owned(s: &Arc<RStmt>) -> RStmt {
    (**s).clone()
}

/// Push a context width down context-determined operands, per the standard
/// bit-length rules for unsigned expressions.
pub fn apply_ctx(e: &mut RExpr, ctx: u32) {
    if ctx <= e.width {
        // context never shrinks an expression
        if let RExprKind::Binary(op, l, r) = &mut e.kind {
            let w = e.width;
            match op {
                BinOp::Add
                | BinOp::Sub
                | BinOp::Mul
                | BinOp::Div
                | BinOp::Mod
                | BinOp::BitAnd
                | BinOp::BitOr
                | BinOp::BitXor
                | BinOp::BitXnor => {
                    apply_ctx(l, w);
                    apply_ctx(r, w);
                }
                BinOp::Shl | BinOp::Shr => apply_ctx(l, w),
                _ => {}
            }
        } else if let RExprKind::Ternary(_, t, f) = &mut e.kind {
            let w = e.width;
            apply_ctx(t, w);
            apply_ctx(f, w);
        } else if let RExprKind::Unary(op, inner) = &mut e.kind {
            if matches!(op, UnOp::BitNot | UnOp::Neg | UnOp::Plus) {
                let w = e.width;
                apply_ctx(inner, w);
            }
        }
        return;
    }
    match &mut e.kind {
        RExprKind::Lit(_)
        | RExprKind::Sig(_)
        | RExprKind::ArrElem(..)
        | RExprKind::BitSel(..)
        | RExprKind::PartSel(..) => {
            e.width = ctx; // zero extension
        }
        RExprKind::Unary(op, inner) => {
            e.width = ctx;
            if matches!(op, UnOp::BitNot | UnOp::Neg | UnOp::Plus) {
                apply_ctx(inner, ctx);
            }
        }
        RExprKind::Binary(op, l, r) => {
            e.width = ctx;
            match op {
                BinOp::Add
                | BinOp::Sub
                | BinOp::Mul
                | BinOp::Div
                | BinOp::Mod
                | BinOp::BitAnd
                | BinOp::BitOr
                | BinOp::BitXor
                | BinOp::BitXnor => {
                    apply_ctx(l, ctx);
                    apply_ctx(r, ctx);
                }
                BinOp::Shl | BinOp::Shr => {
                    apply_ctx(l, ctx);
                }
                _ => {} // comparison/logical results zero-extend
            }
        }
        RExprKind::Ternary(_, t, f) => {
            e.width = ctx;
            apply_ctx(t, ctx);
            apply_ctx(f, ctx);
        }
        RExprKind::Concat(_) => {
            // self-determined; zero-extends in wider context
            e.width = ctx;
        }
    }
}

pub fn const_fold(e: &RExpr) -> Option<u128> {
    let v = match &e.kind {
        RExprKind::Lit(v) => *v,
        RExprKind::Unary(op, inner) => {
            let x = const_fold(inner)?;
            crate::eval::apply_unary(*op, x, inner.width)
        }
        RExprKind::Binary(op, l, r) => {
            let a = const_fold(l)?;
            let b = const_fold(r)?;
            crate::eval::apply_binary(*op, a, b, l.width.max(r.width))
        }
        RExprKind::Ternary(c, t, f) => {
            if const_fold(c)? != 0 {
                const_fold(t)?
            } else {
                const_fold(f)?
            }
        }
        RExprKind::Concat(parts) => {
            let mut acc = 0u128;
            for p in parts {
                let v = const_fold(p)?;
                acc = (acc << p.width) | (v & mask(p.width));
            }
            acc
        }
        _ => return None,
    };
    Some(v & mask(e.width))
}

pub fn collect_expr_reads(e: &RExpr, out: &mut BTreeSet<SigId>) {
    match &e.kind {
        RExprKind::Lit(_) => {}
        RExprKind::Sig(id) | RExprKind::PartSel(id, _, _) => {
            out.insert(*id);
        }
        RExprKind::ArrElem(id, idx) | RExprKind::BitSel(id, idx) => {
            out.insert(*id);
            collect_expr_reads(idx, out);
        }
        RExprKind::Unary(_, a) => collect_expr_reads(a, out),
        RExprKind::Binary(_, l, r) => {
            collect_expr_reads(l, out);
            collect_expr_reads(r, out);
        }
        RExprKind::Ternary(c, t, f) => {
            collect_expr_reads(c, out);
            collect_expr_reads(t, out);
            collect_expr_reads(f, out);
        }
        RExprKind::Concat(parts) => {
            for p in parts {
                collect_expr_reads(p, out);
            }
        }
    }
}

fn collect_target_index_reads(t: &RTarget, out: &mut BTreeSet<SigId>) {
    match t {
        RTarget::ArrElem(_, idx) | RTarget::BitSel(_, idx) => collect_expr_reads(idx, out),
        RTarget::Concat(parts) => {
            for p in parts {
                collect_target_index_reads(p, out);
            }
        }
        _ => {}
    }
}

pub fn collect_stmt_reads(s: &RStmt, out: &mut BTreeSet<SigId>) {
    match s {
        RStmt::Block(stmts) => {
            for st in stmts {
                collect_stmt_reads(st, out);
            }
        }
        RStmt::Assign { target, rhs, .. } => {
            collect_expr_reads(rhs, out);
            collect_target_index_reads(target, out);
        }
        RStmt::If { cond, then_branch, else_branch } => {
            collect_expr_reads(cond, out);
            collect_stmt_reads(then_branch, out);
            if let Some(e) = else_branch {
                collect_stmt_reads(e, out);
            }
        }
        RStmt::Case { scrutinee, arms, default } => {
            collect_expr_reads(scrutinee, out);
            for (labels, body) in arms {
                for l in labels {
                    collect_expr_reads(l, out);
                }
                collect_stmt_reads(body, out);
            }
            if let Some(d) = default {
                collect_stmt_reads(d, out);
            }
        }
        RStmt::For { init, cond, step, body } => {
            collect_stmt_reads(init, out);
            collect_expr_reads(cond, out);
            collect_stmt_reads(step, out);
            collect_stmt_reads(body, out);
        }
        RStmt::While { cond, body } => {
            collect_expr_reads(cond, out);
            collect_stmt_reads(body, out);
        }
        RStmt::Repeat { count, body } => {
            collect_expr_reads(count, out);
            collect_stmt_reads(body, out);
        }
        RStmt::Forever { body } => collect_stmt_reads(body, out),
        RStmt::Delay { amount, then } => {
            collect_expr_reads(amount, out);
            collect_stmt_reads(then, out);
        }
        RStmt::EventWait { then, .. } => collect_stmt_reads(then, out),
        RStmt::Display { parts, .. } => {
            for p in parts {
                if let RDisplayArg::Expr(e) = p {
                    collect_expr_reads(e, out);
                }
            }
        }
        RStmt::Finish | RStmt::Empty => {}
    }
}
