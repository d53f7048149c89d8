//! Tokenizer for the supported Verilog subset.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    SysIdent(String),
    Number { size: Option<u32>, base: Base, digits: String },
    Dec(u128),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    Bin,
    Oct,
    Dec,
    Hex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug)]
pub struct LexError {
    pub pos: Pos,
    pub msg: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.msg)
    }
}

/// Multi-character operators, longest first so maximal munch works.
const PUNCTS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "~&", "~|", "~^",
    "^~", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=", "(", ")", "[", "]",
    "{", "}", ",", ";", ":", "?", ".", "@", "#",
];

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        () => {{
            if bytes[i] == b'\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos { line, col };
        if c.is_ascii_whitespace() {
            bump!();
            continue;
        }
        // line comment
        if c == b'/' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
            while i < bytes.len() && bytes[i] != b'\n' {
                bump!();
            }
            continue;
        }
        // block comment
        if c == b'/' && i + 1 < bytes.len() && bytes[i + 1] == b'*' {
            bump!();
            bump!();
            loop {
                if i + 1 >= bytes.len() {
                    return Err(LexError { pos, msg: "unterminated block comment".into() });
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        // compiler directives (`timescale etc.) — ignored to end of line
        if c == b'`' {
            while i < bytes.len() && bytes[i] != b'\n' {
                bump!();
            }
            continue;
        }
        // string literal
        if c == b'"' {
            bump!();
            let mut s = String::new();
            loop {
                if i >= bytes.len() {
                    return Err(LexError { pos, msg: "unterminated string".into() });
                }
                match bytes[i] {
                    b'"' => {
                        bump!();
                        break;
                    }
                    b'\\' => {
                        bump!();
                        if i >= bytes.len() {
                            return Err(LexError { pos, msg: "unterminated escape".into() });
                        }
                        let e = bytes[i];
                        bump!();
                        s.push(match e {
                            b'n' => '\n',
                            b't' => '\t',
                            b'\\' => '\\',
                            b'"' => '"',
                            other => other as char,
                        });
                    }
                    b'\n' => {
                        return Err(LexError { pos, msg: "newline in string".into() });
                    }
                    other => {
                        s.push(other as char);
                        bump!();
                    }
                }
            }
            toks.push(Token { tok: Tok::Str(s), pos });
            continue;
        }
        // identifier / keyword / system task
        if c == b'$' || c == b'_' || c.is_ascii_alphabetic() {
            let is_sys = c == b'$';
            let start = i;
            bump!();
            while i < bytes.len()
                && (bytes[i] == b'_' || bytes[i] == b'$' || bytes[i].is_ascii_alphanumeric())
            {
                bump!();
            }
            let word = std::str::from_utf8(&bytes[start..i]).unwrap().to_string();
            if is_sys {
                toks.push(Token { tok: Tok::SysIdent(word), pos });
            } else {
                toks.push(Token { tok: Tok::Ident(word), pos });
            }
            continue;
        }
        // based literal without explicit size: 'b1010
        if c == b'\'' {
            let (tok, ni, ncol) = lex_based(bytes, i, pos, None, col)?;
            i = ni;
            col = ncol;
            toks.push(Token { tok, pos });
            continue;
        }
        // number: decimal, possibly the size prefix of a based literal
        if c.is_ascii_digit() {
            let start = i;
            bump!();
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                bump!();
            }
            let digits: String = std::str::from_utf8(&bytes[start..i])
                .unwrap()
                .chars()
                .filter(|c| *c != '_')
                .collect();
            let mut j = i;
            while j < bytes.len() && (bytes[j] == b' ' || bytes[j] == b'\t') {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'\'' {
                let size: u32 = digits
                    .parse()
                    .map_err(|_| LexError { pos, msg: format!("bad size '{digits}'") })?;
                col += (j - i) as u32;
                i = j;
                let (tok, ni, ncol) = lex_based(bytes, i, pos, Some(size), col)?;
                i = ni;
                col = ncol;
                toks.push(Token { tok, pos });
            } else {
                let v: u128 = digits
                    .parse()
                    .map_err(|_| LexError { pos, msg: format!("number too large '{digits}'") })?;
                toks.push(Token { tok: Tok::Dec(v), pos });
            }
            continue;
        }
        // punctuation, maximal munch
        let rest = &src[i..];
        let mut matched = None;
        for p in PUNCTS {
            if rest.starts_with(p) {
                matched = Some(*p);
                break;
            }
        }
        match matched {
            Some(p) => {
                for _ in 0..p.len() {
                    bump!();
                }
                toks.push(Token { tok: Tok::Punct(p), pos });
            }
            None => {
                return Err(LexError { pos, msg: format!("unexpected character '{}'", c as char) });
            }
        }
    }
    toks.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(toks)
}

/// Lex `'b1010` style tail starting at the quote. Returns (token, new index, new col).
fn lex_based(
    bytes: &[u8],
    mut i: usize,
    pos: Pos,
    size: Option<u32>,
    mut col: u32,
) -> Result<(Tok, usize, u32), LexError> {
    i += 1; // the quote
    col += 1;
    if i >= bytes.len() {
        return Err(LexError { pos, msg: "truncated based literal".into() });
    }
    // signed marker accepted and ignored; evaluation is unsigned two-state
    if bytes[i] == b's' || bytes[i] == b'S' {
        i += 1;
        col += 1;
    }
    let base = match bytes.get(i) {
        Some(b'b') | Some(b'B') => Base::Bin,
        Some(b'o') | Some(b'O') => Base::Oct,
        Some(b'd') | Some(b'D') => Base::Dec,
        Some(b'h') | Some(b'H') => Base::Hex,
        _ => return Err(LexError { pos, msg: "bad base in literal".into() }),
    };
    i += 1;
    col += 1;
    while i < bytes.len() && (bytes[i] == b' ' || bytes[i] == b'\t') {
        i += 1;
        col += 1;
    }
    let start = i;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
        i += 1;
        col += 1;
    }
    let raw = std::str::from_utf8(&bytes[start..i]).unwrap();
    let digits: String = raw.chars().filter(|c| *c != '_').collect();
    if digits.is_empty() {
        return Err(LexError { pos, msg: "empty digits in based literal".into() });
    }
    for d in digits.chars() {
        let ok = match base {
            Base::Bin => matches!(d, '0' | '1'),
            Base::Oct => ('0'..='7').contains(&d),
            Base::Dec => d.is_ascii_digit(),
            Base::Hex => d.is_ascii_hexdigit(),
        };
        if !ok {
            // x/z digits land here: the simulator is two-state
            return Err(LexError { pos, msg: format!("unsupported digit '{d}' in based literal") });
        }
    }
    Ok((Tok::Number { size, base, digits }, i, col))
}

pub fn number_value(
    size: Option<u32>,
    base: Base,
    digits: &str,
    pos: Pos,
) -> Result<(u128, u32), LexError> {
    let radix = match base {
        Base::Bin => 2u128,
        Base::Oct => 8,
        Base::Dec => 10,
        Base::Hex => 16,
    };
    let mut v: u128 = 0;
    for d in digits.chars() {
        let dv = d.to_digit(radix as u32).unwrap() as u128;
        v = v
            .checked_mul(radix)
            .and_then(|x| x.checked_add(dv))
            .ok_or_else(|| LexError { pos, msg: "literal exceeds 128 bits".into() })?;
    }
    let width = match size {
        Some(w) => {
            if w == 0 || w > 128 {
                return Err(LexError { pos, msg: format!("literal size {w} out of range 1..=128") });
            }
            w
        }
        None => 32,
    };
    if width < 128 {
        v &= (1u128 << width) - 1;
    }
    Ok((v, width))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_basic_tokens() {
        let toks = lex("module m; assign a = b & 4'b1010; endmodule").unwrap();
        assert!(matches!(&toks[0].tok, Tok::Ident(s) if s == "module"));
        assert!(toks
            .iter()
            .any(|t| matches!(&t.tok, Tok::Number { size: Some(4), base: Base::Bin, .. })));
    }

    #[test]
    fn maximal_munch_operators() {
        let toks = lex("a <= b === c <<< 2").unwrap();
        let ops: Vec<_> = toks
            .iter()
            .filter_map(|t| match &t.tok {
                Tok::Punct(p) => Some(*p),
                _ => None,
            })
            .collect();
        assert_eq!(ops, vec!["<=", "===", "<<<"]);
    }

    #[test]
    fn skips_comments_and_directives() {
        let toks = lex("`timescale 1ns/1ps\n// line\n/* block\n*/ module").unwrap();
        assert_eq!(toks.len(), 2); // module + eof
    }

    #[test]
    fn rejects_x_digits() {
        assert!(lex("4'bx01z").is_err());
    }

    #[test]
    fn tracks_positions() {
        let toks = lex("a\n  b").unwrap();
        assert_eq!(toks[1].pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn number_values_mask_to_width() {
        let (v, w) = number_value(Some(4), Base::Hex, "ff", Pos { line: 1, col: 1 }).unwrap();
        assert_eq!((v, w), (0xf, 4));
    }
}
