use std::fmt::Write;

use super::fs::{FeatureStructure, NodeId};
use super::hierarchy::TypeHierarchy;

/// Indented attribute-value matrix text. Features are sorted by name and
/// shared nodes are tagged `#1`, `#2`, ... at first mention.
///
/// ```text
/// [ sign
///   LEX +
///   PHON "yon" ]
/// ```
pub fn dump(h: &TypeHierarchy, fs: &FeatureStructure) -> String {
    let deg = fs.in_degrees();
    let mut tags = vec![0usize; fs.node_count()];
    let mut next_tag = 0;
    let mut out = String::new();
    write_node(h, fs, fs.root(), 0, &deg, &mut tags, &mut next_tag, &mut out);
    out.push('\n');
    out
}

#[allow(clippy::too_many_arguments)]
fn write_node(
    h: &TypeHierarchy,
    fs: &FeatureStructure,
    n: NodeId,
    indent: usize,
    deg: &[usize],
    tags: &mut [usize],
    next_tag: &mut usize,
    out: &mut String,
) {
    if deg[n] > 1 {
        if tags[n] != 0 {
            let _ = write!(out, "#{}", tags[n]);
            return;
        }
        *next_tag += 1;
        tags[n] = *next_tag;
        let _ = write!(out, "#{} ", tags[n]);
    }
    let label = match fs.atom(n) {
        Some(a) => format!("{a:?}"),
        None => h.type_name(fs.ty(n)).to_string(),
    };
    let mut arcs: Vec<_> = fs.arcs(n).iter().map(|&(f, c)| (h.feature_name(f), c)).collect();
    if arcs.is_empty() {
        out.push_str(&label);
        return;
    }
    arcs.sort_by(|a, b| a.0.cmp(b.0));
    let _ = write!(out, "[ {label}");
    for (name, child) in arcs {
        out.push('\n');
        out.push_str(&" ".repeat(indent + 2));
        let _ = write!(out, "{name} ");
        write_node(h, fs, child, indent + 2 + name.len() + 1, deg, tags, next_tag, out);
    }
    out.push_str(" ]");
}
