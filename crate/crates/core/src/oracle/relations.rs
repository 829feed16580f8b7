use std::sync::Arc;

use crate::ast::{fit_under, Node, NodeKind, NodePath, NodeRef, RegexAst};

use super::{RelationId, TransformError};

fn fit(node: NodeRef, parent: Option<NodeKind>) -> NodeRef {
    fit_under(node, parent)
}

fn mk_cat(items: Vec<NodeRef>) -> NodeRef {
    let mut flat = Vec::new();
    for it in items {
        match &*it {
            Node::Concat(cs) => flat.extend(cs.iter().cloned()),
            _ => flat.push(fit(it, Some(NodeKind::Concat))),
        }
    }
    Arc::new(Node::concat(flat))
}

fn cat_or_single(mut items: Vec<NodeRef>) -> NodeRef {
    if items.len() == 1 {
        items.pop().unwrap()
    } else {
        mk_cat(items)
    }
}

fn mk_alt(items: Vec<NodeRef>) -> NodeRef {
    Arc::new(Node::alt(items.into_iter().map(|i| fit(i, Some(NodeKind::Alt))).collect()))
}

fn mk_star(body: NodeRef, greedy: bool) -> NodeRef {
    Arc::new(Node::Star { child: fit(body, Some(NodeKind::Star)), greedy })
}

fn mk_group(n: NodeRef) -> NodeRef {
    Arc::new(Node::Group(n))
}

fn empty() -> NodeRef {
    Arc::new(Node::Empty)
}

fn fail() -> NodeRef {
    Arc::new(Node::Fail)
}

/// Children of an alternation or concatenation seen through groups.
fn alt_items(n: &Node) -> Option<&[NodeRef]> {
    match n.ungroup() {
        Node::Alt(cs) => Some(cs),
        _ => None,
    }
}

fn cat_items(n: &Node) -> Option<&[NodeRef]> {
    match n.ungroup() {
        Node::Concat(cs) => Some(cs),
        _ => None,
    }
}

/// Splits an n-ary list into its first element and the rest joined by `join`.
fn first_and_rest(items: &[NodeRef], join: fn(Vec<NodeRef>) -> NodeRef) -> (NodeRef, NodeRef) {
    (items[0].clone(), join(items[1..].to_vec()))
}

fn dist_l_index(cs: &[NodeRef]) -> Option<usize> {
    (1..cs.len()).find(|&i| alt_items(&cs[i]).is_some())
}

fn dist_r_index(cs: &[NodeRef]) -> Option<usize> {
    (0..cs.len().saturating_sub(1)).find(|&i| alt_items(&cs[i]).is_some())
}

fn greedy_star_body(n: &Node) -> Option<&NodeRef> {
    match n {
        Node::Star { child, greedy: true } => Some(child),
        _ => None,
    }
}

/// Nodes whose ancestors all force their child to occur in every match,
/// so annihilating the node empties the whole language.
fn on_mandatory_path(ast: &RegexAst, path: &NodePath) -> bool {
    let mut node = ast.root();
    for &step in &path.0 {
        let mandatory = match &**node {
            Node::Concat(_) | Node::Group(_) | Node::Plus { .. } => true,
            Node::Repeat { min, .. } => *min >= 1,
            _ => false,
        };
        if !mandatory {
            return false;
        }
        node = &node.children()[step];
    }
    true
}

/// Structural precondition at one node, before the anchor check.
fn shape_matches(id: RelationId, ast: &RegexAst, path: &NodePath, node: &Node) -> bool {
    use RelationId::*;
    match id {
        AltAssoc => match node {
            Node::Alt(cs) => cs.len() >= 3 || cs.iter().any(|c| matches!(&**c, Node::Group(_)) && alt_items(c).is_some()),
            _ => false,
        },
        AltComm => matches!(node, Node::Alt(_)),
        AltIdem | AltZero | CatOne => true,
        CatZero => on_mandatory_path(ast, path),
        CatAssoc => match node {
            Node::Concat(cs) => {
                cs.len() >= 3 || cs.iter().any(|c| matches!(&**c, Node::Group(_)) && cat_items(c).is_some())
            }
            _ => false,
        },
        DistL => matches!(node, Node::Concat(cs) if dist_l_index(cs).is_some()),
        DistR => matches!(node, Node::Concat(cs) if dist_r_index(cs).is_some()),
        StarUnrollL | StarUnrollR => matches!(node, Node::Star { .. }),
        StarCollapse => greedy_star_body(node).is_some_and(|b| greedy_star_body(b.ungroup()).is_some()),
        StarExpand => greedy_star_body(node).is_some(),
        SumstarL | SumstarR => matches!(node, Node::Star { child, .. } if alt_items(child).is_some()),
        Prodstar => matches!(node, Node::Star { child, .. } if cat_items(child).is_some()),
    }
}

/// Every anchor-free node where `id` can rewrite, in preorder.
pub fn applicable_sites(id: RelationId, ast: &RegexAst) -> Vec<NodePath> {
    let mut out = Vec::new();
    ast.walk(|path, node| {
        if node.is_kleene() && shape_matches(id, ast, path, node) {
            out.push(path.clone());
        }
    });
    out
}

fn rewrite(id: RelationId, node: &NodeRef) -> NodeRef {
    use RelationId::*;
    match (id, &**node) {
        (AltAssoc, Node::Alt(cs)) => {
            if let Some(i) = cs.iter().position(|c| matches!(&**c, Node::Group(_)) && alt_items(c).is_some()) {
                let mut items: Vec<NodeRef> = cs[..i].to_vec();
                items.extend(alt_items(&cs[i]).unwrap().iter().cloned());
                items.extend(cs[i + 1..].iter().cloned());
                mk_alt(items)
            } else {
                let mut items = vec![mk_group(mk_alt(cs[..2].to_vec()))];
                items.extend(cs[2..].iter().cloned());
                mk_alt(items)
            }
        }
        (AltComm, Node::Alt(cs)) => mk_alt(cs.iter().rev().cloned().collect()),
        (AltIdem, _) => mk_group(mk_alt(vec![node.clone(), node.clone()])),
        (AltZero, _) => mk_group(mk_alt(vec![node.clone(), fail()])),
        (CatAssoc, Node::Concat(cs)) => {
            if let Some(i) = cs.iter().position(|c| matches!(&**c, Node::Group(_)) && cat_items(c).is_some()) {
                let mut items: Vec<NodeRef> = cs[..i].to_vec();
                items.extend(cat_items(&cs[i]).unwrap().iter().cloned());
                items.extend(cs[i + 1..].iter().cloned());
                mk_cat(items)
            } else {
                let mut items = vec![mk_group(mk_cat(cs[..2].to_vec()))];
                items.extend(cs[2..].iter().cloned());
                Arc::new(Node::Concat(items))
            }
        }
        (CatOne, _) => mk_cat(vec![node.clone(), empty()]),
        (CatZero, _) => mk_cat(vec![node.clone(), fail()]),
        (DistL, Node::Concat(cs)) => {
            let i = dist_l_index(cs).expect("checked by precondition");
            let r1 = &cs[i - 1];
            let branches = alt_items(&cs[i]).unwrap().iter().map(|b| mk_cat(vec![r1.clone(), b.clone()])).collect();
            let mut items: Vec<NodeRef> = cs[..i - 1].to_vec();
            items.push(mk_alt(branches));
            items.extend(cs[i + 1..].iter().cloned());
            cat_or_single(items)
        }
        (DistR, Node::Concat(cs)) => {
            let i = dist_r_index(cs).expect("checked by precondition");
            let r3 = &cs[i + 1];
            let branches = alt_items(&cs[i]).unwrap().iter().map(|b| mk_cat(vec![b.clone(), r3.clone()])).collect();
            let mut items: Vec<NodeRef> = cs[..i].to_vec();
            items.push(mk_alt(branches));
            items.extend(cs[i + 2..].iter().cloned());
            cat_or_single(items)
        }
        (StarUnrollL, Node::Star { child, greedy }) => {
            mk_group(mk_alt(vec![empty(), mk_cat(vec![child.clone(), mk_star(child.clone(), *greedy)])]))
        }
        (StarUnrollR, Node::Star { child, greedy }) => {
            mk_group(mk_alt(vec![empty(), mk_cat(vec![mk_star(child.clone(), *greedy), child.clone()])]))
        }
        (StarCollapse, Node::Star { child, .. }) => Arc::new(child.ungroup().clone()),
        (StarExpand, Node::Star { .. }) => mk_star(mk_group(node.clone()), true),
        (SumstarL, Node::Star { child, greedy }) => {
            let (r1, r2) = first_and_rest(alt_items(child).unwrap(), mk_alt);
            let r1s = || mk_star(r1.clone(), *greedy);
            mk_cat(vec![r1s(), mk_star(mk_cat(vec![r2.clone(), r1s()]), *greedy)])
        }
        (SumstarR, Node::Star { child, greedy }) => {
            let (r1, r2) = first_and_rest(alt_items(child).unwrap(), mk_alt);
            let r1s = || mk_star(r1.clone(), *greedy);
            mk_cat(vec![mk_star(mk_cat(vec![r1s(), r2.clone()]), *greedy), r1s()])
        }
        (Prodstar, Node::Star { child, greedy }) => {
            let (r1, r2) = first_and_rest(cat_items(child).unwrap(), mk_cat);
            let loop_ = mk_star(mk_cat(vec![r2.clone(), r1.clone()]), *greedy);
            mk_group(mk_alt(vec![empty(), mk_cat(vec![r1, loop_, r2])]))
        }
        _ => unreachable!("shape checked before rewriting"),
    }
}

/// Rewrites the node at `site` from the left side of the identity to the
/// right side.
pub fn transform(id: RelationId, ast: &RegexAst, site: &NodePath) -> Result<RegexAst, TransformError> {
    let node = ast.get(site).ok_or(TransformError::InapplicableSite)?;
    if !node.is_kleene() || !shape_matches(id, ast, site, node) {
        return Err(TransformError::InapplicableSite);
    }
    ast.replace_fitted(site, rewrite(id, node)).map_err(|_| TransformError::InapplicableSite)
}
