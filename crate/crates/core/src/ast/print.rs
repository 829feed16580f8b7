use super::{CharClass, Node, RegexAst};

/// Renders a tree in the pattern dialect.
///
/// Output is always ASCII. Non-canonical trees (an alternation directly
/// inside a concatenation, a quantifier directly under a quantifier, ...)
/// get the minimal `(?:...)` wrapping needed to parse again.
pub fn serialize(ast: &RegexAst) -> String {
    let mut out = String::new();
    write_node(&mut out, ast.root());
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Top,
    AltBranch,
    ConcatItem,
    QuantBody,
}

fn write_node(out: &mut String, node: &Node) {
    write_in(out, node, Slot::Top)
}

fn needs_group(node: &Node, slot: Slot) -> bool {
    match slot {
        Slot::Top | Slot::AltBranch => false,
        Slot::ConcatItem => matches!(node, Node::Alt(_)),
        Slot::QuantBody => !matches!(
            node,
            Node::Literal(_) | Node::Dot | Node::Class(_) | Node::Group(_) | Node::Empty | Node::Fail
        ),
    }
}

fn write_in(out: &mut String, node: &Node, slot: Slot) {
    if needs_group(node, slot) {
        out.push_str("(?:");
        write_in(out, node, Slot::Top);
        out.push(')');
        return;
    }
    match node {
        Node::Empty => out.push_str("(?:)"),
        Node::Fail => out.push_str("(?!)"),
        Node::Literal(b) => push_literal(out, *b),
        Node::Dot => out.push('.'),
        Node::Class(c) => push_class(out, c),
        Node::AnchorStart => out.push('^'),
        Node::AnchorEnd => out.push('$'),
        Node::Concat(cs) => {
            if cs.is_empty() {
                out.push_str("(?:)");
            }
            for c in cs {
                write_in(out, c, Slot::ConcatItem);
            }
        }
        Node::Alt(cs) => {
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push('|');
                }
                write_in(out, c, Slot::AltBranch);
            }
        }
        Node::Group(c) => {
            out.push_str("(?:");
            write_in(out, c, Slot::Top);
            out.push(')');
        }
        Node::Star { child, greedy } => {
            write_in(out, child, Slot::QuantBody);
            out.push('*');
            push_lazy(out, *greedy);
        }
        Node::Plus { child, greedy } => {
            write_in(out, child, Slot::QuantBody);
            out.push('+');
            push_lazy(out, *greedy);
        }
        Node::Optional { child, greedy } => {
            write_in(out, child, Slot::QuantBody);
            out.push('?');
            push_lazy(out, *greedy);
        }
        Node::Repeat { child, min, max, greedy } => {
            write_in(out, child, Slot::QuantBody);
            match max {
                Some(m) if m == min => out.push_str(&format!("{{{min}}}")),
                Some(m) => out.push_str(&format!("{{{min},{m}}}")),
                None => out.push_str(&format!("{{{min},}}")),
            }
            push_lazy(out, *greedy);
        }
    }
}

fn push_lazy(out: &mut String, greedy: bool) {
    if !greedy {
        out.push('?');
    }
}

fn push_escaped_byte(out: &mut String, b: u8, specials: &[u8]) {
    match b {
        b'\n' => out.push_str("\\n"),
        b'\r' => out.push_str("\\r"),
        b'\t' => out.push_str("\\t"),
        _ if specials.contains(&b) => {
            out.push('\\');
            out.push(b as char);
        }
        0x20..=0x7e => out.push(b as char),
        _ => out.push_str(&format!("\\x{b:02x}")),
    }
}

fn push_literal(out: &mut String, b: u8) {
    push_escaped_byte(out, b, b"\\|()[]{}*+?.^$")
}

fn push_class(out: &mut String, c: &CharClass) {
    const SPECIALS: &[u8] = b"\\[]^-";
    out.push('[');
    if c.negated {
        out.push('^');
    }
    for r in &c.ranges {
        push_escaped_byte(out, r.lo, SPECIALS);
        if r.hi != r.lo {
            out.push('-');
            push_escaped_byte(out, r.hi, SPECIALS);
        }
    }
    out.push(']');
}
