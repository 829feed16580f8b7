//! Recursive-descent parser for the pattern dialect.
//!
//! The dialect is byte oriented. Metacharacters are ASCII; any other byte
//! stands for itself. Capturing-style parentheses `(...)` are accepted and
//! read as plain groups since captures carry no meaning here.

use std::fmt;
use std::sync::Arc;

use super::{CharClass, ClassRange, Node, NodeRef, RegexAst};

/// Deepest group nesting the parser accepts.
pub const MAX_NESTING: usize = 128;
/// Largest bound allowed in `{n,m}`.
pub const MAX_REPEAT: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnbalancedGroup,
    DanglingQuantifier,
    BadClassRange,
    BadRepeatBounds,
    UnknownEscape,
    UnsupportedGroup,
    EmptyClass,
    UnterminatedClass,
    NestingTooDeep,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorKind::UnbalancedGroup => "unbalanced group",
            ParseErrorKind::DanglingQuantifier => "dangling quantifier",
            ParseErrorKind::BadClassRange => "bad class range",
            ParseErrorKind::BadRepeatBounds => "bad repeat bounds",
            ParseErrorKind::UnknownEscape => "unknown escape",
            ParseErrorKind::UnsupportedGroup => "unsupported group syntax",
            ParseErrorKind::EmptyClass => "empty class",
            ParseErrorKind::UnterminatedClass => "unterminated class",
            ParseErrorKind::NestingTooDeep => "nesting too deep",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

pub fn parse_str(text: &str) -> Result<RegexAst, ParseError> {
    parse(text.as_bytes())
}

pub fn parse(text: &[u8]) -> Result<RegexAst, ParseError> {
    let mut p = Parser { src: text, pos: 0, depth: 0 };
    let root = p.parse_alt()?;
    if p.pos < text.len() {
        // Only a stray ')' can stop the top-level alternation early.
        return Err(p.err(ParseErrorKind::UnbalancedGroup));
    }
    Ok(RegexAst::new(root))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { offset: self.pos, kind }
    }

    fn err_at(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { offset, kind }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn starts_with(&self, s: &[u8]) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn parse_alt(&mut self) -> Result<Node, ParseError> {
        let mut branches = vec![Arc::new(self.parse_concat()?)];
        while self.eat(b'|') {
            branches.push(Arc::new(self.parse_concat()?));
        }
        Ok(Node::alt(branches))
    }

    fn parse_concat(&mut self) -> Result<Node, ParseError> {
        let mut items: Vec<NodeRef> = Vec::new();
        while let Some(b) = self.peek() {
            if b == b'|' || b == b')' {
                break;
            }
            let atom = self.parse_atom()?;
            let node = self.parse_quantifiers(atom)?;
            items.push(Arc::new(node));
        }
        Ok(Node::concat(items))
    }

    fn parse_quantifiers(&mut self, atom: Node) -> Result<Node, ParseError> {
        let Some(b) = self.peek() else { return Ok(atom) };
        if !matches!(b, b'*' | b'+' | b'?' | b'{') {
            return Ok(atom);
        }
        if matches!(atom, Node::AnchorStart | Node::AnchorEnd) {
            return Err(self.err(ParseErrorKind::DanglingQuantifier));
        }
        let child = Arc::new(atom);
        let q_start = self.pos;
        self.pos += 1;
        let mut node = match b {
            b'*' => Node::Star { child, greedy: true },
            b'+' => Node::Plus { child, greedy: true },
            b'?' => Node::Optional { child, greedy: true },
            _ => {
                let (min, max) = self.parse_bounds(q_start)?;
                Node::Repeat { child, min, max, greedy: true }
            }
        };
        if self.eat(b'?') {
            match &mut node {
                Node::Star { greedy, .. }
                | Node::Plus { greedy, .. }
                | Node::Optional { greedy, .. }
                | Node::Repeat { greedy, .. } => *greedy = false,
                _ => unreachable!(),
            }
        }
        if matches!(self.peek(), Some(b'*' | b'+' | b'?' | b'{')) {
            return Err(self.err(ParseErrorKind::DanglingQuantifier));
        }
        Ok(node)
    }

    /// Parses the rest of `{n}`, `{n,}` or `{n,m}` after the opening brace.
    fn parse_bounds(&mut self, open: usize) -> Result<(u32, Option<u32>), ParseError> {
        let bad = |p: &Self| p.err_at(open, ParseErrorKind::BadRepeatBounds);
        let min = self.parse_number().ok_or_else(|| bad(self))?;
        let max = if self.eat(b',') {
            if self.peek() == Some(b'}') {
                None
            } else {
                Some(self.parse_number().ok_or_else(|| bad(self))?)
            }
        } else {
            Some(min)
        };
        if !self.eat(b'}') {
            return Err(bad(self));
        }
        if let Some(max) = max {
            if max < min {
                return Err(bad(self));
            }
        }
        Ok((min, max))
    }

    fn parse_number(&mut self) -> Option<u32> {
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(d @ b'0'..=b'9') = self.peek() {
            value = value.checked_mul(10)?.checked_add(u32::from(d - b'0'))?;
            if value > MAX_REPEAT {
                return None;
            }
            self.pos += 1;
        }
        (self.pos > start).then_some(value)
    }

    fn parse_atom(&mut self) -> Result<Node, ParseError> {
        let b = self.peek().expect("caller checked for input");
        match b {
            b'*' | b'+' | b'?' | b'{' => Err(self.err(ParseErrorKind::DanglingQuantifier)),
            b'(' => self.parse_group(),
            b'[' => self.parse_class(),
            b'.' => {
                self.pos += 1;
                Ok(Node::Dot)
            }
            b'^' => {
                self.pos += 1;
                Ok(Node::AnchorStart)
            }
            b'$' => {
                self.pos += 1;
                Ok(Node::AnchorEnd)
            }
            b'\\' => Ok(Node::Literal(self.parse_escape()?)),
            _ => {
                self.pos += 1;
                Ok(Node::Literal(b))
            }
        }
    }

    fn parse_group(&mut self) -> Result<Node, ParseError> {
        let open = self.pos;
        if self.starts_with(b"(?!)") {
            self.pos += 4;
            return Ok(Node::Fail);
        }
        if self.starts_with(b"(?:") {
            self.pos += 3;
        } else if self.starts_with(b"(?") {
            return Err(self.err(ParseErrorKind::UnsupportedGroup));
        } else {
            self.pos += 1;
        }
        if self.depth >= MAX_NESTING {
            return Err(self.err_at(open, ParseErrorKind::NestingTooDeep));
        }
        self.depth += 1;
        let inner = self.parse_alt()?;
        self.depth -= 1;
        if !self.eat(b')') {
            return Err(self.err_at(open, ParseErrorKind::UnbalancedGroup));
        }
        // An empty group is the spelling of the empty pattern itself.
        if self.pos - open == 4 && self.src[open + 1] == b'?' {
            return Ok(Node::Empty);
        }
        if matches!(inner, Node::Empty) && self.pos - open == 2 {
            return Ok(Node::Empty);
        }
        Ok(Node::Group(Arc::new(inner)))
    }

    fn parse_escape(&mut self) -> Result<u8, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let Some(c) = self.peek() else {
            return Err(self.err_at(start, ParseErrorKind::UnknownEscape));
        };
        self.pos += 1;
        let byte = match c {
            b'n' => b'\n',
            b'r' => b'\r',
            b't' => b'\t',
            b'\\' | b'|' | b'(' | b')' | b'[' | b']' | b'{' | b'}' | b'*' | b'+' | b'?' | b'.'
            | b'^' | b'$' | b'-' => c,
            b'x' => {
                let hex = self.src.get(self.pos..self.pos + 2);
                let v = hex
                    .and_then(|h| std::str::from_utf8(h).ok())
                    .and_then(|h| u8::from_str_radix(h, 16).ok())
                    .ok_or_else(|| self.err_at(start, ParseErrorKind::UnknownEscape))?;
                self.pos += 2;
                v
            }
            _ => return Err(self.err_at(start, ParseErrorKind::UnknownEscape)),
        };
        Ok(byte)
    }

    fn parse_class(&mut self) -> Result<Node, ParseError> {
        let open = self.pos;
        self.pos += 1;
        let negated = self.eat(b'^');
        let mut ranges = Vec::new();
        loop {
            let Some(b) = self.peek() else {
                return Err(self.err_at(open, ParseErrorKind::UnterminatedClass));
            };
            if b == b']' {
                if ranges.is_empty() {
                    return Err(self.err(ParseErrorKind::EmptyClass));
                }
                self.pos += 1;
                break;
            }
            let item_start = self.pos;
            let lo = self.class_byte()?;
            let is_range = self.peek() == Some(b'-')
                && self.src.get(self.pos + 1).is_some_and(|&n| n != b']');
            if is_range {
                self.pos += 1;
                let hi = self.class_byte()?;
                if lo > hi {
                    return Err(self.err_at(item_start, ParseErrorKind::BadClassRange));
                }
                ranges.push(ClassRange::new(lo, hi));
            } else {
                ranges.push(ClassRange::single(lo));
            }
        }
        Ok(Node::Class(CharClass { negated, ranges }))
    }

    fn class_byte(&mut self) -> Result<u8, ParseError> {
        match self.peek() {
            None => Err(self.err(ParseErrorKind::UnterminatedClass)),
            Some(b'\\') => self.parse_escape(),
            // A bare '[' would read POSIX classes like [[:alpha:]] wrongly.
            Some(b'[') => Err(self.err(ParseErrorKind::UnsupportedGroup)),
            Some(b) => {
                self.pos += 1;
                Ok(b)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::build::*;
    use crate::ast::serialize;

    fn kind_of(s: &str) -> ParseErrorKind {
        parse_str(s).unwrap_err().kind
    }

    #[test]
    fn basic_shapes() {
        assert_eq!(parse_str("a|b").unwrap(), RegexAst::new(alt(vec![lit(b'a'), lit(b'b')])));
        assert_eq!(parse_str("(?!)").unwrap(), RegexAst::new(fail()));
        assert_eq!(parse_str("(?:)").unwrap(), RegexAst::new(empty()));
        assert_eq!(parse_str("").unwrap(), RegexAst::new(empty()));
        assert_eq!(
            parse_str("(?:ab)*").unwrap(),
            RegexAst::new(star(group(cat(vec![lit(b'a'), lit(b'b')]))))
        );
        assert_eq!(parse_str("(ab)").unwrap(), parse_str("(?:ab)").unwrap());
        assert_eq!(parse_str("|a").unwrap(), RegexAst::new(alt(vec![empty(), lit(b'a')])));
    }

    #[test]
    fn classes_and_escapes() {
        assert_eq!(parse_str("[a-c]").unwrap(), RegexAst::new(class(false, &[(b'a', b'c')])));
        assert_eq!(
            parse_str("[^a-]").unwrap(),
            RegexAst::new(class(true, &[(b'a', b'a'), (b'-', b'-')]))
        );
        assert_eq!(parse_str(r"[\]\x41]").unwrap(), RegexAst::new(class(false, &[(b']', b']'), (b'A', b'A')])));
        assert_eq!(parse_str(r"\x7f").unwrap(), RegexAst::new(lit(0x7f)));
        assert_eq!(parse_str(r"\n").unwrap(), RegexAst::new(lit(b'\n')));
        assert_eq!(parse_str("]").unwrap(), RegexAst::new(lit(b']')));
    }

    #[test]
    fn repeat_bounds() {
        let ast = parse_str("a{2,5}?").unwrap();
        match &**ast.root() {
            Node::Repeat { min: 2, max: Some(5), greedy: false, .. } => {}
            other => panic!("unexpected {other:?}"),
        }
        match &**parse_str("a{3,}").unwrap().root() {
            Node::Repeat { min: 3, max: None, .. } => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(kind_of("a{3,1}"), ParseErrorKind::BadRepeatBounds);
        assert_eq!(kind_of("a{x}"), ParseErrorKind::BadRepeatBounds);
        assert_eq!(kind_of("a{1001}"), ParseErrorKind::BadRepeatBounds);
        assert_eq!(kind_of("a{2"), ParseErrorKind::BadRepeatBounds);
    }

    #[test]
    fn error_kinds() {
        assert_eq!(kind_of("("), ParseErrorKind::UnbalancedGroup);
        assert_eq!(kind_of("a)"), ParseErrorKind::UnbalancedGroup);
        assert_eq!(kind_of("*a"), ParseErrorKind::DanglingQuantifier);
        assert_eq!(kind_of("a**"), ParseErrorKind::DanglingQuantifier);
        assert_eq!(kind_of("a|+"), ParseErrorKind::DanglingQuantifier);
        assert_eq!(kind_of("^*"), ParseErrorKind::DanglingQuantifier);
        assert_eq!(kind_of("[z-a]"), ParseErrorKind::BadClassRange);
        assert_eq!(kind_of(r"\d"), ParseErrorKind::UnknownEscape);
        assert_eq!(kind_of(r"a\"), ParseErrorKind::UnknownEscape);
        assert_eq!(kind_of(r"\xZZ"), ParseErrorKind::UnknownEscape);
        assert_eq!(kind_of("(?=a)"), ParseErrorKind::UnsupportedGroup);
        assert_eq!(kind_of("[]"), ParseErrorKind::EmptyClass);
        assert_eq!(kind_of("[ab"), ParseErrorKind::UnterminatedClass);
        assert_eq!(kind_of("[[:alpha:]]"), ParseErrorKind::UnsupportedGroup);
    }

    #[test]
    fn error_offsets() {
        assert_eq!(parse_str("ab(cd").unwrap_err().offset, 2);
        assert_eq!(parse_str("ab{9,2}").unwrap_err().offset, 2);
    }

    #[test]
    fn nesting_limit() {
        let deep = "(".repeat(MAX_NESTING + 1) + &")".repeat(MAX_NESTING + 1);
        assert_eq!(kind_of(&deep), ParseErrorKind::NestingTooDeep);
        let ok = "(".repeat(MAX_NESTING) + "a" + &")".repeat(MAX_NESTING);
        assert!(parse_str(&ok).is_ok());
    }

    #[test]
    fn lazy_round_trip() {
        for s in ["a*?", "a+?", "a??", "a{1,2}?", "(?:a|b)*?c"] {
            let ast = parse_str(s).unwrap();
            assert_eq!(serialize(&ast), s);
        }
    }
}
