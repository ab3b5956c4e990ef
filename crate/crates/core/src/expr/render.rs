use super::jet::{NodeOp, Tree};
use super::tree::Node;

/// Elide vector scalings beyond this many entries.
const MAX_SHOWN: usize = 4;

pub fn render(tree: &Tree, theta: &[f64], precision: usize) -> String {
    node(tree, tree.skeleton.root, theta, precision, true)
}

fn node(tree: &Tree, idx: usize, theta: &[f64], prec: usize, top: bool) -> String {
    match (&tree.skeleton.nodes[idx], &tree.ops[idx]) {
        (Node::Unary { child }, NodeOp::Unary(op)) => {
            let slot = tree.layout.slot_for_node(idx).expect("unary slot");
            let alpha = &theta[slot.offset..slot.offset + slot.scale_len];
            let beta = theta[slot.beta_index()];
            let core = match child {
                None if alpha.len() == 1 => format!("{}·{}", num(alpha[0], prec), op.apply_str("x")),
                None => {
                    let mut shown: Vec<String> = alpha.iter().take(MAX_SHOWN).map(|a| num(*a, prec)).collect();
                    if alpha.len() > MAX_SHOWN {
                        shown.push("…".into());
                    }
                    format!("⟨[{}], {}.(x)⟩", shown.join(", "), op.name())
                }
                Some(c) => {
                    let inner = node(tree, *c, theta, prec, true);
                    format!("{}·{}", num(alpha[0], prec), op.apply_str(&inner))
                }
            };
            format!("{core}{}", signed(beta, prec))
        }
        (Node::Binary { left, right }, NodeOp::Binary(op)) => {
            let l = node(tree, *left, theta, prec, false);
            let r = node(tree, *right, theta, prec, false);
            if top {
                format!("{l} {op} {r}")
            } else {
                format!("({l} {op} {r})")
            }
        }
        _ => unreachable!("operator kind checked at construction"),
    }
}

fn num(v: f64, prec: usize) -> String {
    let s = format!("{v:.prec$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn signed(v: f64, prec: usize) -> String {
    let s = num(v.abs(), prec);
    if v < 0.0 && s != "0" {
        format!("-{s}")
    } else {
        format!("+{s}")
    }
}
