//! Recursive-descent parser for the supported Verilog subset.

use crate::ast::*;
use crate::lexer::{lex, number_value, Pos, Tok, Token};
use std::fmt;
use std::sync::Arc;

#[derive(Debug)]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for ParseError {}

pub fn parse(src: &str) -> Result<SourceUnit, ParseError> {
    let toks = lex(src).map_err(|e| ParseError { pos: e.pos, msg: e.msg })?;
    Parser { toks, idx: 0 }.source_unit()
}

struct Parser {
    toks: Vec<Token>,
    idx: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.idx].pos
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.idx].tok.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError { pos: self.pos(), msg: msg.into() })
    }

    fn eat_punct(&mut self, p: &str) -> PResult<()> {
        match self.peek() {
            Tok::Punct(q) if *q == p => {
                self.next();
                Ok(())
            }
            other => self.err(format!("expected '{p}', found {}", tok_name(other))),
        }
    }

    fn try_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Tok::Punct(q) if *q == p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            other => self.err(format!("expected '{kw}', found {}", tok_name(other))),
        }
    }

    fn peek_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn try_kw(&mut self, kw: &str) -> bool {
        if self.peek_kw(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                if is_keyword(&s) {
                    return self.err(format!("expected identifier, found keyword '{s}'"));
                }
                self.next();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", tok_name(&other))),
        }
    }

    fn source_unit(&mut self) -> PResult<SourceUnit> {
        let mut modules = Vec::new();
        while !matches!(self.peek(), Tok::Eof) {
            modules.push(self.module()?);
        }
        Ok(SourceUnit { modules })
    }

    fn module(&mut self) -> PResult<Module> {
        let pos = self.pos();
        self.eat_kw("module")?;
        let name = self.ident()?;
        let mut ports = Vec::new();
        if self.try_punct("(") {
            if !self.try_punct(")") {
                loop {
                    ports.push(self.port_decl()?);
                    if self.try_punct(")") {
                        break;
                    }
                    self.eat_punct(",")?;
                }
            }
        }
        self.eat_punct(";")?;
        let mut items = Vec::new();
        while !self.peek_kw("endmodule") {
            if matches!(self.peek(), Tok::Eof) {
                return self.err("unexpected end of file inside module");
            }
            items.push(self.item()?);
        }
        self.eat_kw("endmodule")?;
        Ok(Module { name, pos, ports, items })
    }

    fn port_decl(&mut self) -> PResult<Port> {
        let pos = self.pos();
        let dir = if self.try_kw("input") {
            Direction::Input
        } else if self.try_kw("output") {
            Direction::Output
        } else if self.try_kw("inout") {
            Direction::Inout
        } else {
            return self.err("expected port direction (ANSI port lists only)");
        };
        let is_reg = self.try_kw("reg");
        self.try_kw("wire");
        let range = self.opt_range()?;
        let name = self.ident()?;
        Ok(Port { dir, is_reg, range, name, pos })
    }

    fn opt_range(&mut self) -> PResult<Option<(Expr, Expr)>> {
        if self.try_punct("[") {
            let msb = self.expr()?;
            self.eat_punct(":")?;
            let lsb = self.expr()?;
            self.eat_punct("]")?;
            Ok(Some((msb, lsb)))
        } else {
            Ok(None)
        }
    }

    fn item(&mut self) -> PResult<Item> {
        let pos = self.pos();
        if self.try_kw("wire") {
            return self.decl_tail(NetKind::Wire);
        }
        if self.try_kw("reg") {
            return self.decl_tail(NetKind::Reg);
        }
        if self.try_kw("integer") {
            let mut names = Vec::new();
            loop {
                let p = self.pos();
                let n = self.ident()?;
                names.push((n, None, p));
                if !self.try_punct(",") {
                    break;
                }
            }
            self.eat_punct(";")?;
            return Ok(Item::Decl { kind: NetKind::Integer, range: None, names });
        }
        if self.peek_kw("parameter") || self.peek_kw("localparam") {
            let localparam = self.peek_kw("localparam");
            self.next();
            self.opt_range()?; // parameter ranges accepted and ignored
            let mut assigns = Vec::new();
            loop {
                let p = self.pos();
                let n = self.ident()?;
                self.eat_punct("=")?;
                let e = self.expr()?;
                assigns.push((n, e, p));
                if !self.try_punct(",") {
                    break;
                }
            }
            self.eat_punct(";")?;
            return Ok(Item::Param { localparam, assigns });
        }
        if self.try_kw("assign") {
            let lhs = self.lvalue()?;
            self.eat_punct("=")?;
            let rhs = self.expr()?;
            self.eat_punct(";")?;
            return Ok(Item::ContAssign { lhs, rhs, pos });
        }
        if self.try_kw("always") {
            let body = self.stmt()?;
            return Ok(Item::Always { body, pos });
        }
        if self.try_kw("initial") {
            let body = self.stmt()?;
            return Ok(Item::Initial { body, pos });
        }
        // module instance: IDENT IDENT ( ... ) ;
        if let Tok::Ident(m) = self.peek().clone() {
            if !is_keyword(&m) {
                let module = self.ident()?;
                if self.try_punct("#") {
                    return self.err("parameter overrides on instances are not supported");
                }
                let name = self.ident()?;
                self.eat_punct("(")?;
                let mut conns = Vec::new();
                if !self.try_punct(")") {
                    loop {
                        let cpos = self.pos();
                        if self.try_punct(".") {
                            let port = self.ident()?;
                            self.eat_punct("(")?;
                            let expr =
                                if self.try_punct(")") { None } else { Some(self.expr()?) };
                            if expr.is_some() {
                                self.eat_punct(")")?;
                            }
                            conns.push(Connection::Named { port, expr, pos: cpos });
                        } else {
                            let expr = self.expr()?;
                            conns.push(Connection::Ordered { expr, pos: cpos });
                        }
                        if self.try_punct(")") {
                            break;
                        }
                        self.eat_punct(",")?;
                    }
                }
                self.eat_punct(";")?;
                return Ok(Item::Instance { module, name, conns, pos });
            }
        }
        self.err(format!("unsupported module item starting with {}", tok_name(self.peek())))
    }

    fn decl_tail(&mut self, kind: NetKind) -> PResult<Item> {
        let range = self.opt_range()?;
        let mut names = Vec::new();
        loop {
            let p = self.pos();
            let n = self.ident()?;
            let dims = self.opt_range()?;
            names.push((n, dims, p));
            if !self.try_punct(",") {
                break;
            }
        }
        self.eat_punct(";")?;
        Ok(Item::Decl { kind, range, names })
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        let pos = self.pos();
        if self.try_punct("{") {
            let mut parts = Vec::new();
            loop {
                parts.push(self.lvalue()?);
                if self.try_punct("}") {
                    break;
                }
                self.eat_punct(",")?;
            }
            return Ok(LValue::Concat(parts, pos));
        }
        let name = self.ident()?;
        if self.try_punct("[") {
            let first = self.expr()?;
            if self.try_punct(":") {
                let lsb = self.expr()?;
                self.eat_punct("]")?;
                return Ok(LValue::Range(name, Box::new(first), Box::new(lsb), pos));
            }
            self.eat_punct("]")?;
            return Ok(LValue::Index(name, Box::new(first), pos));
        }
        Ok(LValue::Ident(name, pos))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        if self.try_punct(";") {
            return Ok(Stmt::Empty);
        }
        if self.try_kw("begin") {
            // named blocks: `begin : name`
            if self.try_punct(":") {
                self.ident()?;
            }
            let mut stmts = Vec::new();
            while !self.peek_kw("end") {
                if matches!(self.peek(), Tok::Eof) {
                    return self.err("unexpected end of file inside begin/end");
                }
                stmts.push(self.stmt()?);
            }
            self.eat_kw("end")?;
            return Ok(Stmt::Block(stmts));
        }
        if self.try_kw("if") {
            self.eat_punct("(")?;
            let cond = self.expr()?;
            self.eat_punct(")")?;
            let then_branch = Arc::new(self.stmt()?);
            let else_branch =
                if self.try_kw("else") { Some(Arc::new(self.stmt()?)) } else { None };
            return Ok(Stmt::If { cond, then_branch, else_branch, pos });
        }
        if self.try_kw("case") {
            self.eat_punct("(")?;
            let scrutinee = self.expr()?;
            self.eat_punct(")")?;
            let mut arms = Vec::new();
            let mut default = None;
            while !self.peek_kw("endcase") {
                if matches!(self.peek(), Tok::Eof) {
                    return self.err("unexpected end of file inside case");
                }
                if self.try_kw("default") {
                    self.try_punct(":");
                    default = Some(Arc::new(self.stmt()?));
                    continue;
                }
                let mut labels = vec![self.expr()?];
                while self.try_punct(",") {
                    labels.push(self.expr()?);
                }
                self.eat_punct(":")?;
                let body = Arc::new(self.stmt()?);
                arms.push(CaseArm { labels, body });
            }
            self.eat_kw("endcase")?;
            return Ok(Stmt::Case { scrutinee, arms, default, pos });
        }
        if self.try_kw("for") {
            self.eat_punct("(")?;
            let init = Box::new(self.plain_assign()?);
            self.eat_punct(";")?;
            let cond = self.expr()?;
            self.eat_punct(";")?;
            let step = Box::new(self.plain_assign()?);
            self.eat_punct(")")?;
            let body = Arc::new(self.stmt()?);
            return Ok(Stmt::For { init, cond, step, body, pos });
        }
        if self.try_kw("while") {
            self.eat_punct("(")?;
            let cond = self.expr()?;
            self.eat_punct(")")?;
            let body = Arc::new(self.stmt()?);
            return Ok(Stmt::While { cond, body, pos });
        }
        if self.try_kw("repeat") {
            self.eat_punct("(")?;
            let count = self.expr()?;
            self.eat_punct(")")?;
            let body = Arc::new(self.stmt()?);
            return Ok(Stmt::Repeat { count, body, pos });
        }
        if self.try_kw("forever") {
            let body = Arc::new(self.stmt()?);
            return Ok(Stmt::Forever { body, pos });
        }
        if self.try_punct("#") {
            let amount = match self.peek().clone() {
                Tok::Dec(v) => {
                    self.next();
                    Expr::Literal { value: v, width: 64, sized: false, pos }
                }
                Tok::Ident(_) => {
                    let n = self.ident()?;
                    Expr::Ident(n, pos)
                }
                other => return self.err(format!("expected delay amount, found {}", tok_name(&other))),
            };
            let then = Arc::new(self.stmt()?);
            return Ok(Stmt::Delay { amount, then, pos });
        }
        if self.try_punct("@") {
            let events = self.event_list()?;
            let then = Arc::new(self.stmt()?);
            return Ok(Stmt::EventWait { events, then, pos });
        }
        if let Tok::SysIdent(name) = self.peek().clone() {
            self.next();
            match name.as_str() {
                "$display" | "$write" => {
                    let mut args = Vec::new();
                    if self.try_punct("(") && !self.try_punct(")") {
                        loop {
                            match self.peek().clone() {
                                Tok::Str(s) => {
                                    self.next();
                                    args.push(DisplayArg::Str(s));
                                }
                                _ => args.push(DisplayArg::Expr(self.expr()?)),
                            }
                            if self.try_punct(")") {
                                break;
                            }
                            self.eat_punct(",")?;
                        }
                    }
                    self.eat_punct(";")?;
                    return Ok(Stmt::Display { newline: name == "$display", args, pos });
                }
                "$finish" | "$stop" => {
                    if self.try_punct("(") {
                        // optional exit code argument, ignored
                        if !self.try_punct(")") {
                            self.expr()?;
                            self.eat_punct(")")?;
                        }
                    }
                    self.eat_punct(";")?;
                    return Ok(Stmt::Finish { pos });
                }
                other => return self.err(format!("unsupported system task '{other}'")),
            }
        }
        // assignment
        let s = self.plain_assign()?;
        self.eat_punct(";")?;
        Ok(s)
    }

    /// An assignment without the trailing semicolon (shared by for-loop headers).
    fn plain_assign(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        let lhs = self.lvalue()?;
        let nonblocking = if self.try_punct("<=") {
            true
        } else if self.try_punct("=") {
            false
        } else {
            return self.err("expected '=' or '<=' in assignment");
        };
        let rhs = self.expr()?;
        Ok(Stmt::Assign { lhs, rhs, nonblocking, pos })
    }

    fn event_list(&mut self) -> PResult<Vec<EventExpr>> {
        let pos = self.pos();
        if self.try_punct("*") {
            return Ok(vec![EventExpr { edge: Edge::Any, signal: None, pos }]);
        }
        self.eat_punct("(")?;
        if self.try_punct("*") {
            self.eat_punct(")")?;
            return Ok(vec![EventExpr { edge: Edge::Any, signal: None, pos }]);
        }
        let mut events = Vec::new();
        loop {
            let epos = self.pos();
            let edge = if self.try_kw("posedge") {
                Edge::Pos
            } else if self.try_kw("negedge") {
                Edge::Neg
            } else {
                Edge::Any
            };
            let signal = self.ident()?;
            events.push(EventExpr { edge, signal: Some(signal), pos: epos });
            if self.try_punct(")") {
                break;
            }
            if self.try_kw("or") || self.try_punct(",") {
                continue;
            }
            return self.err("expected 'or', ',' or ')' in event list");
        }
        Ok(events)
    }

    // -- expressions, precedence climbing --

    fn expr(&mut self) -> PResult<Expr> {
        self.ternary()
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let cond = self.log_or()?;
        if self.try_punct("?") {
            let pos = cond.pos();
            let then_val = self.ternary()?;
            self.eat_punct(":")?;
            let else_val = self.ternary()?;
            return Ok(Expr::Ternary {
                cond: Box::new(cond),
                then_val: Box::new(then_val),
                else_val: Box::new(else_val),
                pos,
            });
        }
        Ok(cond)
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinOp)],
        next: fn(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let mut lhs = next(self)?;
        'outer: loop {
            for (p, op) in ops {
                if matches!(self.peek(), Tok::Punct(q) if q == p) {
                    let pos = self.pos();
                    self.next();
                    let rhs = next(self)?;
                    lhs = Expr::Binary { op: *op, lhs: Box::new(lhs), rhs: Box::new(rhs), pos };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn log_or(&mut self) -> PResult<Expr> {
        self.binary_level(&[("||", BinOp::LogOr)], Self::log_and)
    }

    fn log_and(&mut self) -> PResult<Expr> {
        self.binary_level(&[("&&", BinOp::LogAnd)], Self::bit_or)
    }

    fn bit_or(&mut self) -> PResult<Expr> {
        self.binary_level(&[("|", BinOp::BitOr)], Self::bit_xor)
    }

    fn bit_xor(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[("^~", BinOp::BitXnor), ("~^", BinOp::BitXnor), ("^", BinOp::BitXor)],
            Self::bit_and,
        )
    }

    fn bit_and(&mut self) -> PResult<Expr> {
        self.binary_level(&[("&", BinOp::BitAnd)], Self::equality)
    }

    fn equality(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[
                ("===", BinOp::CaseEq),
                ("!==", BinOp::CaseNe),
                ("==", BinOp::Eq),
                ("!=", BinOp::Ne),
            ],
            Self::relational,
        )
    }

    fn relational(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[("<=", BinOp::Le), (">=", BinOp::Ge), ("<", BinOp::Lt), (">", BinOp::Gt)],
            Self::shift,
        )
    }

    fn shift(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[("<<<", BinOp::Shl), (">>>", BinOp::Shr), ("<<", BinOp::Shl), (">>", BinOp::Shr)],
            Self::additive,
        )
    }

    fn additive(&mut self) -> PResult<Expr> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Self::multiplicative)
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Mod)],
            Self::unary,
        )
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Punct("!") => Some(UnOp::Not),
            Tok::Punct("~") => Some(UnOp::BitNot),
            Tok::Punct("&") => Some(UnOp::RedAnd),
            Tok::Punct("|") => Some(UnOp::RedOr),
            Tok::Punct("^") => Some(UnOp::RedXor),
            Tok::Punct("~&") => Some(UnOp::RedNand),
            Tok::Punct("~|") => Some(UnOp::RedNor),
            Tok::Punct("~^") | Tok::Punct("^~") => Some(UnOp::RedXnor),
            Tok::Punct("-") => Some(UnOp::Neg),
            Tok::Punct("+") => Some(UnOp::Plus),
            _ => None,
        };
        if let Some(op) = op {
            self.next();
            let operand = self.unary()?;
            return Ok(Expr::Unary { op, operand: Box::new(operand), pos });
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Dec(v) => {
                self.next();
                Ok(Expr::Literal { value: v, width: 32, sized: false, pos })
            }
            Tok::Number { size, base, digits } => {
                self.next();
                let (value, width) = number_value(size, base, &digits, pos)
                    .map_err(|e| ParseError { pos: e.pos, msg: e.msg })?;
                Ok(Expr::Literal { value, width, sized: size.is_some(), pos })
            }
            Tok::Punct("(") => {
                self.next();
                let e = self.expr()?;
                self.eat_punct(")")?;
                Ok(e)
            }
            Tok::Punct("{") => {
                self.next();
                let first = self.expr()?;
                // replication: {N{expr}}
                if self.try_punct("{") {
                    let operand = self.expr()?;
                    self.eat_punct("}")?;
                    self.eat_punct("}")?;
                    return Ok(Expr::Repeat {
                        count: Box::new(first),
                        operand: Box::new(operand),
                        pos,
                    });
                }
                let mut parts = vec![first];
                while self.try_punct(",") {
                    parts.push(self.expr()?);
                }
                self.eat_punct("}")?;
                Ok(Expr::Concat { parts, pos })
            }
            Tok::Ident(name) => {
                if is_keyword(&name) {
                    return self.err(format!("unexpected keyword '{name}' in expression"));
                }
                self.next();
                if self.try_punct("[") {
                    let first = self.expr()?;
                    if self.try_punct(":") {
                        let lsb = self.expr()?;
                        self.eat_punct("]")?;
                        return Ok(Expr::Range {
                            base: name,
                            msb: Box::new(first),
                            lsb: Box::new(lsb),
                            pos,
                        });
                    }
                    self.eat_punct("]")?;
                    return Ok(Expr::Index { base: name, index: Box::new(first), pos });
                }
                Ok(Expr::Ident(name, pos))
            }
            other => self.err(format!("unexpected {} in expression", tok_name(&other))),
        }
    }
}

fn tok_name(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::SysIdent(s) => format!("'{s}'"),
        Tok::Number { .. } | Tok::Dec(_) => "number".into(),
        Tok::Str(_) => "string".into(),
        Tok::Punct(p) => format!("'{p}'"),
        Tok::Eof => "end of file".into(),
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "module"
            | "endmodule"
            | "input"
            | "output"
            | "inout"
            | "wire"
            | "reg"
            | "integer"
            | "parameter"
            | "localparam"
            | "assign"
            | "always"
            | "initial"
            | "begin"
            | "end"
            | "if"
            | "else"
            | "case"
            | "casez"
            | "casex"
            | "endcase"
            | "default"
            | "for"
            | "while"
            | "repeat"
            | "forever"
            | "posedge"
            | "negedge"
            | "or"
            | "generate"
            | "endgenerate"
            | "genvar"
            | "function"
            | "endfunction"
            | "task"
            | "endtask"
            | "signed"
            | "unsigned"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_simple_module() {
        let src = "module adder(input [7:0] a, input [7:0] b, output [8:0] s);\n\
                   assign s = a + b;\nendmodule";
        let unit = parse(src).unwrap();
        assert_eq!(unit.modules.len(), 1);
        assert_eq!(unit.modules[0].name, "adder");
        assert_eq!(unit.modules[0].ports.len(), 3);
    }

    #[test]
    fn parses_always_with_nba() {
        let src = "module m(input clk, input d, output reg q);\n\
                   always @(posedge clk) q <= d;\nendmodule";
        let unit = parse(src).unwrap();
        assert!(matches!(unit.modules[0].items[0], Item::Always { .. }));
    }

    #[test]
    fn parses_instance_with_named_conns() {
        let src = "module top(input a, output b);\nwire w;\nleaf u0 (.x(a), .y(w));\n\
                   leaf u1 (.x(w), .y(b));\nendmodule";
        let unit = parse(src).unwrap();
        let n = unit.modules[0]
            .items
            .iter()
            .filter(|i| matches!(i, Item::Instance { .. }))
            .count();
        assert_eq!(n, 2);
    }

    #[test]
    fn parses_testbench_constructs() {
        let src = r#"module tb;
  reg clk;
  integer i, pass;
  initial begin
    clk = 0;
    for (i = 0; i < 4; i = i + 1) begin
      #5;
      if (i % 2 == 0) pass = pass + 1;
      else $display("TB_FAIL %0d", i);
    end
    $display("TB_SUMMARY passed=%0d total=%0d", pass, 4);
    $finish;
  end
  always #5 clk = ~clk;
endmodule"#;
        parse(src).unwrap();
    }

    #[test]
    fn reports_error_position() {
        let err = parse("module m(;").unwrap_err();
        assert_eq!(err.pos.line, 1);
        assert!(err.pos.col >= 9);
    }

    #[test]
    fn rejects_generate_blocks() {
        assert!(parse("module m; generate endgenerate endmodule").is_err());
    }

    #[test]
    fn parses_concat_and_replication() {
        let src = "module m(input [3:0] a, output [7:0] y);\n\
                   assign y = {a, {2{a[0]}}, 2'b01};\nendmodule";
        parse(src).unwrap();
    }

    #[test]
    fn parses_case_with_multiple_labels() {
        let src = "module m(input [1:0] s, output reg y);\n\
                   always @(*) case (s) 2'd0, 2'd1: y = 0; default: y = 1; endcase\nendmodule";
        parse(src).unwrap();
    }
}
