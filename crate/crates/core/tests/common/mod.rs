//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use jdeep_core::grammar::Grammar;
use jdeep_core::parser::{lexical_items, Forest, Origin};
use jdeep_core::preproc::Lattice;
use jdeep_core::tfs::{FeatureStructure, TypeHierarchy, TypeId};
use proptest::prelude::*;

pub fn grammar() -> &'static Grammar {
    Grammar::bundled()
}

/// Small hierarchy with multiple inheritance, reentrancy and atoms.
pub const PROP_TYPES: &str = r#"
case := *top*.
nom := case.
acc := case.
head := *top* & [ CASE case ].
noun := head.
verb := head.
gerund := noun & verb.
val := *top*.
x := val.
y := val.
z := x & y.
sign := *top* & [ HEAD head, A val, B val, C string ].
"#;

pub fn prop_hierarchy() -> &'static TypeHierarchy {
    static H: std::sync::OnceLock<TypeHierarchy> = std::sync::OnceLock::new();
    H.get_or_init(|| TypeHierarchy::load(PROP_TYPES).expect("property hierarchy loads"))
}

const HEADS: [&str; 7] = [
    "head",
    "noun",
    "verb",
    "gerund",
    "noun & [ CASE nom ]",
    "verb & [ CASE acc ]",
    "[ CASE acc ]",
];
const VALS: [&str; 4] = ["val", "x", "y", "z"];
const ATOMS: [&str; 2] = ["\"p\"", "\"q\""];

/// Source text of a random `sign` structure.
pub fn fs_text() -> impl Strategy<Value = String> {
    (
        proptest::option::of(0..HEADS.len()),
        proptest::option::of(0..VALS.len()),
        proptest::option::of(0..VALS.len()),
        proptest::option::of(0..ATOMS.len()),
        any::<bool>(),
    )
        .prop_map(|(h, a, b, c, share)| {
            let mut parts = Vec::new();
            if let Some(h) = h {
                parts.push(format!("HEAD {}", HEADS[h]));
            }
            let a = a.map_or("val", |i| VALS[i]);
            if share {
                parts.push(format!("A #1 & {a}"));
                parts.push(format!("B #1 & {}", b.map_or("val", |i| VALS[i])));
            } else {
                parts.push(format!("A {a}"));
                if let Some(b) = b {
                    parts.push(format!("B {}", VALS[b]));
                }
            }
            if let Some(c) = c {
                parts.push(format!("C {}", ATOMS[c]));
            }
            format!("sign & [ {} ]", parts.join(", "))
        })
}

/// Meet of two types computed from the parent lists alone.
pub struct MeetOracle {
    /// For each type, the bitset of its subtypes including itself.
    down: Vec<Vec<u64>>,
    types: Vec<TypeId>,
}

fn has(set: &[u64], i: usize) -> bool {
    set[i / 64] & (1 << (i % 64)) != 0
}

impl MeetOracle {
    pub fn new(h: &TypeHierarchy) -> Self {
        let types: Vec<TypeId> = h.types().collect();
        let words = types.len().div_ceil(64);
        let mut down = vec![vec![0u64; words]; types.len()];
        for &t in &types {
            let mut seen = BTreeSet::new();
            let mut stack = vec![t];
            while let Some(s) = stack.pop() {
                if seen.insert(s) {
                    down[s.index()][t.index() / 64] |= 1 << (t.index() % 64);
                    stack.extend(h.parents(s).iter().copied());
                }
            }
        }
        MeetOracle { down, types }
    }

    pub fn below(&self, general: TypeId, specific: TypeId) -> bool {
        has(&self.down[general.index()], specific.index())
    }

    /// The unique greatest common subtype, `None` when there is no common
    /// subtype. Panics if common subtypes exist without a greatest one.
    pub fn meet(&self, a: TypeId, b: TypeId) -> Option<TypeId> {
        let common: Vec<u64> = self.down[a.index()]
            .iter()
            .zip(&self.down[b.index()])
            .map(|(x, y)| x & y)
            .collect();
        if common.iter().all(|w| *w == 0) {
            return None;
        }
        let greatest: Vec<TypeId> = self
            .types
            .iter()
            .copied()
            .filter(|g| has(&common, g.index()))
            .filter(|g| common.iter().zip(&self.down[g.index()]).all(|(c, d)| c & !d == 0))
            .collect();
        assert_eq!(greatest.len(), 1, "no unique greatest lower bound");
        Some(greatest[0])
    }

    pub fn types(&self) -> &[TypeId] {
        &self.types
    }
}

/// Verbal endings of the fragment that can follow a verb stem.
pub const ENDINGS: [&str; 6] = ["sase", "rare", "mashi", "ta", "ru", "te"];

/// Hand-written automaton for a finite clause built from an ichidan stem
/// and endings: causative, then passive/potential, then polite, then a
/// tense ending; polite forms only take the past.
pub fn ending_chain_ok(endings: &[&str]) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum S {
        Stem,
        Sase,
        Rare,
        Mashi,
        Final,
    }
    let mut s = S::Stem;
    for e in endings {
        s = match (s, *e) {
            (S::Stem, "sase") => S::Sase,
            (S::Stem | S::Sase, "rare") => S::Rare,
            (S::Stem | S::Sase | S::Rare, "mashi") => S::Mashi,
            (S::Stem | S::Sase | S::Rare | S::Mashi, "ta") => S::Final,
            (S::Stem | S::Sase | S::Rare, "ru") => S::Final,
            _ => return false,
        };
    }
    s == S::Final
}

/// All orderings without repetition of `items`, lengths 1..=max.
pub fn permutations<'a>(items: &[&'a str], max: usize) -> Vec<Vec<&'a str>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<&str>> = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for p in &frontier {
            for it in items {
                if !p.contains(it) {
                    let mut q = p.clone();
                    q.push(*it);
                    next.push(q);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// One item of the exhaustive enumeration.
#[derive(Clone)]
struct Built {
    sign: FeatureStructure,
    tree: String,
    unary: Vec<usize>,
}

/// Every (from, to, derivation) the grammar licenses over the lattice,
/// enumerated span by span with no agenda and no filtering.
pub fn brute_force(g: &Grammar, lattice: &Lattice) -> BTreeSet<(usize, usize, String)> {
    let mut cells: BTreeMap<(usize, usize), Vec<Built>> = BTreeMap::new();
    for arc in &lattice.arcs {
        for item in lexical_items(g, &arc.token) {
            let mut tree = String::new();
            for &r in item.rules.iter().rev() {
                tree.push_str(&format!("({} ", g.lexical_rules[r].name));
            }
            tree.push_str(&format!("({} {:?})", item.base_id, arc.token.surface));
            tree.push_str(&")".repeat(item.rules.len()));
            cells.entry((arc.from, arc.to)).or_default().push(Built {
                sign: item.sign,
                tree,
                unary: Vec::new(),
            });
        }
    }
    let n = lattice.nodes;
    for width in 1..n {
        for i in 0..n - width {
            let j = i + width;
            let mut here = cells.remove(&(i, j)).unwrap_or_default();
            for k in i + 1..j {
                let (Some(left), Some(right)) = (cells.get(&(i, k)), cells.get(&(k, j))) else {
                    continue;
                };
                for l in left {
                    for r in right {
                        for s in g.schemata.iter().filter(|s| s.arity == 2) {
                            if let Ok(sign) = g.apply_schema(s, &[&l.sign, &r.sign]) {
                                here.push(Built {
                                    sign,
                                    tree: format!("({} {} {})", s.name, l.tree, r.tree),
                                    unary: Vec::new(),
                                });
                            }
                        }
                    }
                }
            }
            let mut k = 0;
            while k < here.len() {
                for (si, s) in g.schemata.iter().enumerate().filter(|(_, s)| s.arity == 1) {
                    if here[k].unary.contains(&si) {
                        continue;
                    }
                    if let Ok(sign) = g.apply_schema(s, &[&here[k].sign]) {
                        let mut unary = here[k].unary.clone();
                        unary.push(si);
                        here.push(Built {
                            sign,
                            tree: format!("({} {})", s.name, here[k].tree),
                            unary,
                        });
                    }
                }
                k += 1;
            }
            if !here.is_empty() {
                cells.insert((i, j), here);
            }
        }
    }
    cells
        .into_iter()
        .flat_map(|((i, j), v)| v.into_iter().map(move |b| (i, j, b.tree)))
        .collect()
}

/// The same view of a parser forest.
pub fn chart_view(g: &Grammar, f: &Forest) -> BTreeSet<(usize, usize, String)> {
    f.edges.iter().map(|e| (e.from, e.to, f.derivation(g, e.id))).collect()
}

pub fn is_lexical(f: &Forest, id: usize) -> bool {
    matches!(f.edges[id].origin, Origin::Lexical { .. })
}

/// Strip the named columns from a profile TSV, item rows and the `@all`
/// aggregate row alike.
pub fn drop_columns(tsv: &str, names: &[&str]) -> String {
    let mut item_drop: Vec<usize> = Vec::new();
    let mut agg_drop: Vec<usize> = Vec::new();
    let pick = |cells: &[&str], shift: usize| -> Vec<usize> {
        cells
            .iter()
            .enumerate()
            .filter(|(_, c)| names.contains(&c.trim_start_matches("# ")))
            .map(|(i, _)| i + shift)
            .collect()
    };
    let none: Vec<usize> = Vec::new();
    let mut out = String::new();
    for line in tsv.lines() {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.first() == Some(&"id") {
            item_drop = pick(&cells, 0);
        } else if cells.first() == Some(&"# items") {
            agg_drop = pick(&cells, 1);
        }
        let header_drop;
        let drop = match cells.first() {
            Some(&"@all") => &agg_drop,
            Some(&"# items") => {
                header_drop = pick(&cells, 0);
                &header_drop
            }
            Some(c) if c.starts_with('#') => &none,
            _ => &item_drop,
        };
        let kept: Vec<&str> = cells
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, c)| *c)
            .collect();
        out.push_str(&kept.join("\t"));
        out.push('\n');
    }
    out
}
