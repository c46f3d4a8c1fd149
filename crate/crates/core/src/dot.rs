//! DOT emission for Bratteli diagrams. Nodes carry (kind, length, terminus)
//! labels; edges carry multiplicities.

use crate::afcore::{BratteliLevel, Label};
use crate::model::HybridModel;

fn ell(v: &[u64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

fn node_label(m: &HybridModel, label: &Label, mult: usize) -> String {
    let (kind, l, t) = label;
    format!("kind {kind}, l={}, t={}, x{mult}", ell(l), m.display_vertex(t))
}

/// Renders one floor of a Bratteli diagram as a two-rank DOT digraph.
pub fn bratteli_dot(m: &HybridModel, level: &BratteliLevel, lower: usize) -> String {
    let mut out = String::from("digraph bratteli {\n  rankdir=TB;\n  node [shape=box];\n");
    for (i, (label, mult)) in level.classes.iter().enumerate() {
        out.push_str(&format!(
            "  a{i} [label=\"{}\"];\n",
            node_label(m, label, *mult).replace('"', "'")
        ));
    }
    for (j, (label, mult)) in level.next_classes.iter().enumerate() {
        out.push_str(&format!(
            "  b{j} [label=\"{}\"];\n",
            node_label(m, label, *mult).replace('"', "'")
        ));
    }
    out.push_str(&format!(
        "  {{ rank=same; {} }}\n  {{ rank=same; {} }}\n",
        (0..level.classes.len()).map(|i| format!("a{i};")).collect::<Vec<_>>().join(" "),
        (0..level.next_classes.len()).map(|j| format!("b{j};")).collect::<Vec<_>>().join(" ")
    ));
    for (i, row) in level.edges.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            if *w > 0 {
                out.push_str(&format!("  a{i} -> b{j} [label=\"{w}\"];\n"));
            }
        }
    }
    out.push_str(&format!("  label=\"levels {lower} to {}\";\n}}\n", lower + 1));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::afcore::Truncation;

    #[test]
    fn one_floor_renders() {
        let m = crate::model::examples::two_block_bouquet();
        let t1 = Truncation::new(&m, 1).unwrap();
        let t2 = Truncation::new(&m, 2).unwrap();
        let (level, report) = t1.bratteli(&t2).unwrap();
        assert!(report.passed(), "{}", report.render());
        let dot = bratteli_dot(&m, &level, 1);
        assert!(dot.starts_with("digraph bratteli {"));
        assert!(dot.contains("a0 ->"));
        assert!(dot.contains("kind"));
    }
}
