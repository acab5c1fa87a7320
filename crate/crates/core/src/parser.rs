//! Agenda-driven bottom-up chart parsing over token lattices.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::fragment::{default_items, Pos};
use crate::grammar::{Grammar, LexItem, RuleKind, RuleSchema};
use crate::preproc::{Lattice, Token};
use crate::tfs::{parse_path, with_atom, FeatId, FeatureStructure, TypeHierarchy, TypeId};

pub const DEFAULT_EDGE_LIMIT: usize = 20_000;

pub const DEFAULT_QC_PATHS: &[&str] = &[
    "SYNSEM.LOCAL.HEAD",
    "SYNSEM.LOCAL.SUBCAT.SAT.SUBJ",
    "SYNSEM.LOCAL.SUBCAT.SAT.OBJ",
    "SYNSEM.LOCAL.SUBCAT.SAT.OBJ2",
    "SYNSEM.LOCAL.SUBCAT.SAT.SPR",
    "SYNSEM.LOCAL.HEAD.SPEC",
    "SYNSEM.LOCAL.HEAD.MARK",
];

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub edge_limit: usize,
    pub quick_check: bool,
    pub qc_paths: Vec<String>,
    /// Restrict readings to this root condition.
    pub root: Option<String>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            edge_limit: DEFAULT_EDGE_LIMIT,
            quick_check: true,
            qc_paths: DEFAULT_QC_PATHS.iter().map(|s| s.to_string()).collect(),
            root: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("edge limit of {0} exceeded")]
    ResourceLimitExceeded(usize),
    #[error("unknown quick-check path {0}")]
    BadQcPath(String),
    #[error("unknown root condition {0}")]
    UnknownRoot(String),
}

/// Types at a fixed list of paths; `None` where the path is absent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuickCheckVector(pub Vec<Option<TypeId>>);

#[derive(Debug, Clone)]
pub struct QuickCheck {
    paths: Vec<Vec<FeatId>>,
}

impl QuickCheck {
    pub fn new(h: &TypeHierarchy, paths: &[String]) -> Result<Self, ParseError> {
        let paths = paths
            .iter()
            .map(|p| parse_path(h, p).ok_or_else(|| ParseError::BadQcPath(p.clone())))
            .collect::<Result<_, _>>()?;
        Ok(QuickCheck { paths })
    }

    pub fn vector(&self, fs: &FeatureStructure, prefix: &[FeatId]) -> QuickCheckVector {
        let Some(start) = fs.follow(prefix) else {
            return QuickCheckVector(vec![None; self.paths.len()]);
        };
        QuickCheckVector(
            self.paths
                .iter()
                .map(|p| fs.follow_from(start, p).map(|n| fs.ty(n)))
                .collect(),
        )
    }
}

/// Incompatible only when some path has no common subtype.
pub fn quick_check(h: &TypeHierarchy, a: &QuickCheckVector, b: &QuickCheckVector) -> bool {
    a.0.iter().zip(&b.0).all(|(x, y)| match (x, y) {
        (Some(x), Some(y)) => h.glb(*x, *y).is_some(),
        _ => true,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Lexical {
        base_id: String,
        rules: Vec<String>,
        surface: String,
    },
    Rule(usize),
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub sign: FeatureStructure,
    pub origin: Origin,
    pub daughters: Vec<usize>,
    pub score: i32,
    qc: QuickCheckVector,
    /// Unary schemata applied in a row to reach this edge.
    unary_chain: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseStats {
    pub items: usize,
    /// Full unifications attempted.
    pub etasks: usize,
    /// Tasks the quick check rejected.
    pub filtered: usize,
    /// Combinations refused by the adjacency principle.
    pub adjacency: usize,
    pub edges: usize,
    pub readings: usize,
    pub first_time: Duration,
    pub total_time: Duration,
    pub space: usize,
}

impl ParseStats {
    pub fn filter_rate(&self) -> f64 {
        let tasks = self.filtered + self.etasks;
        if tasks == 0 {
            0.0
        } else {
            self.filtered as f64 / tasks as f64
        }
    }

    pub fn merge(&self, o: &ParseStats) -> ParseStats {
        ParseStats {
            items: self.items + o.items,
            etasks: self.etasks + o.etasks,
            filtered: self.filtered + o.filtered,
            adjacency: self.adjacency + o.adjacency,
            edges: self.edges + o.edges,
            readings: self.readings + o.readings,
            first_time: self.first_time + o.first_time,
            total_time: self.total_time + o.total_time,
            space: self.space + o.space,
        }
    }
}

/// The chart after parsing; `roots` are the full-span edges meeting a root condition.
#[derive(Debug, Clone)]
pub struct Forest {
    pub edges: Vec<Edge>,
    pub roots: Vec<usize>,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub edge: usize,
    pub score: i32,
    pub tree: String,
}

pub struct ParseOutcome {
    pub forest: Forest,
    pub stats: ParseStats,
}

/// Lexical items for one token: exact surface, then lowercase, then a default entry.
pub fn lexical_items(g: &Grammar, tok: &Token) -> Vec<LexItem> {
    let mut items: Vec<LexItem> = g.lexical_items(&tok.surface).into_iter().cloned().collect();
    if items.is_empty() {
        items = g
            .lexical_items(&tok.surface.to_lowercase())
            .into_iter()
            .cloned()
            .collect();
    }
    if items.is_empty() {
        let pos = if tok.pos == Pos::Placeholder {
            Pos::CommonNoun
        } else {
            tok.pos
        };
        items = default_items(g, &tok.surface.to_lowercase(), pos);
    }
    if let Some(payload) = &tok.payload {
        for it in &mut items {
            if let Ok(s) = with_atom(&g.hierarchy, &it.sign, &g.paths.carg, payload) {
                it.sign = s;
            }
        }
    }
    items
}

struct Parser<'g> {
    g: &'g Grammar,
    opts: &'g ParseOptions,
    qc: QuickCheck,
    /// Per schema, the quick-check vector of each daughter slot.
    rule_qc: Vec<Vec<QuickCheckVector>>,
    edges: Vec<Edge>,
    by_from: Vec<Vec<usize>>,
    by_to: Vec<Vec<usize>>,
    agenda: VecDeque<Edge>,
    stats: ParseStats,
    start: Instant,
    end: usize,
    roots: Vec<usize>,
}

impl<'g> Parser<'g> {
    fn push(&mut self, mut e: Edge) -> Result<(), ParseError> {
        if self.edges.len() + self.agenda.len() >= self.opts.edge_limit {
            return Err(ParseError::ResourceLimitExceeded(self.opts.edge_limit));
        }
        e.qc = self.qc.vector(&e.sign, &[]);
        self.agenda.push_back(e);
        Ok(())
    }

    fn is_root(&self, e: &Edge) -> bool {
        if e.from != 0 || e.to != self.end {
            return false;
        }
        match &self.opts.root {
            Some(name) => self
                .g
                .roots
                .iter()
                .filter(|r| &r.name == name)
                .any(|r| crate::tfs::unify(&self.g.hierarchy, &r.fs, &e.sign).is_ok()),
            None => self.g.root_match(&e.sign).is_some(),
        }
    }

    fn lbranch_bonus(&self, schema: &RuleSchema, right: usize) -> i32 {
        if !schema.lbranch {
            return 0;
        }
        match self.edges[right].origin {
            Origin::Rule(r) if self.g.schemata[r].lbranch => 0,
            _ => 1,
        }
    }

    /// Try `schema` over `dtrs` (edge ids, left to right).
    fn task(&mut self, si: usize, dtrs: &[usize]) -> Result<(), ParseError> {
        let g = self.g;
        let schema = &g.schemata[si];
        if schema.arity == 2 {
            let head = &self.edges[dtrs[schema.head]].sign;
            let nonhead = &self.edges[dtrs[1 - schema.head]].sign;
            if g.check_adjacency(schema.kind, head, Some(nonhead), schema.realized)
                .is_err()
            {
                self.stats.adjacency += 1;
                return Ok(());
            }
        }
        if self.opts.quick_check {
            let ok = dtrs
                .iter()
                .enumerate()
                .all(|(i, &d)| quick_check(&g.hierarchy, &self.rule_qc[si][i], &self.edges[d].qc));
            if !ok {
                self.stats.filtered += 1;
                return Ok(());
            }
        }
        self.stats.etasks += 1;
        let signs: Vec<&FeatureStructure> = dtrs.iter().map(|&d| &self.edges[d].sign).collect();
        let Ok(sign) = g.unify_daughters(schema, &signs) else {
            return Ok(());
        };
        let mut score = schema.weight + dtrs.iter().map(|&d| self.edges[d].score).sum::<i32>();
        if schema.arity == 2 {
            score += self.lbranch_bonus(schema, dtrs[1]);
        }
        let unary_chain = if schema.arity == 1 {
            let mut c = self.edges[dtrs[0]].unary_chain.clone();
            c.push(si);
            c
        } else {
            Vec::new()
        };
        let e = Edge {
            id: 0,
            from: self.edges[dtrs[0]].from,
            to: self.edges[*dtrs.last().expect("daughters")].to,
            sign,
            origin: Origin::Rule(si),
            daughters: dtrs.to_vec(),
            score,
            qc: QuickCheckVector(Vec::new()),
            unary_chain,
        };
        self.push(e)
    }

    fn process(&mut self, mut e: Edge) -> Result<(), ParseError> {
        let id = self.edges.len();
        e.id = id;
        let root = self.is_root(&e);
        self.by_from[e.from].push(id);
        self.by_to[e.to].push(id);
        self.edges.push(e);
        if root {
            if self.roots.is_empty() {
                self.stats.first_time = self.start.elapsed();
            }
            self.roots.push(id);
        }
        for si in 0..self.g.schemata.len() {
            let schema = &self.g.schemata[si];
            if schema.arity == 1 {
                if !self.edges[id].unary_chain.contains(&si) {
                    self.task(si, &[id])?;
                }
                continue;
            }
            let (from, to) = (self.edges[id].from, self.edges[id].to);
            let rights = self.by_from[to].clone();
            for r in rights {
                if r != id {
                    self.task(si, &[id, r])?;
                }
            }
            let lefts = self.by_to[from].clone();
            for l in lefts {
                if l != id {
                    self.task(si, &[l, id])?;
                }
            }
        }
        Ok(())
    }
}

/// Exhaustively parse a lattice.
pub fn parse(lattice: &Lattice, g: &Grammar, opts: &ParseOptions) -> Result<ParseOutcome, ParseError> {
    if lattice.nodes < 2 || lattice.arcs.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    if let Some(r) = &opts.root {
        if !g.roots.iter().any(|c| &c.name == r) {
            return Err(ParseError::UnknownRoot(r.clone()));
        }
    }
    let qc = QuickCheck::new(&g.hierarchy, &opts.qc_paths)?;
    let rule_qc = g
        .schemata
        .iter()
        .map(|s| (0..s.arity).map(|i| qc.vector(&s.fs, g.paths.dtr(i))).collect())
        .collect();
    let mut p = Parser {
        g,
        opts,
        qc,
        rule_qc,
        edges: Vec::new(),
        by_from: vec![Vec::new(); lattice.nodes],
        by_to: vec![Vec::new(); lattice.nodes],
        agenda: VecDeque::new(),
        stats: ParseStats::default(),
        start: Instant::now(),
        end: lattice.end(),
        roots: Vec::new(),
    };
    for arc in &lattice.arcs {
        for item in lexical_items(g, &arc.token) {
            let rules = item.rules.iter().map(|&r| g.lexical_rules[r].name.clone()).collect();
            p.push(Edge {
                id: 0,
                from: arc.from,
                to: arc.to,
                sign: item.sign,
                origin: Origin::Lexical {
                    base_id: item.base_id,
                    rules,
                    surface: arc.token.surface.clone(),
                },
                daughters: Vec::new(),
                score: item.weight,
                qc: QuickCheckVector(Vec::new()),
                unary_chain: Vec::new(),
            })?;
        }
    }
    while let Some(e) = p.agenda.pop_front() {
        p.process(e)?;
    }
    p.stats.items = 1;
    p.stats.edges = p.edges.len();
    p.stats.readings = p.roots.len();
    p.stats.total_time = p.start.elapsed();
    if p.roots.is_empty() {
        p.stats.first_time = p.stats.total_time;
    }
    p.stats.space = p.edges.iter().map(|e| e.sign.approx_bytes()).sum();
    Ok(ParseOutcome {
        forest: Forest {
            edges: p.edges,
            roots: p.roots,
            end: lattice.end(),
        },
        stats: p.stats,
    })
}

impl Forest {
    /// Bracketed derivation: `(rule dtr ...)`, lexical leaves `(id "surface")`
    /// wrapped by the lexical rules applied to them.
    pub fn derivation(&self, g: &Grammar, id: usize) -> String {
        let mut out = String::new();
        self.write_derivation(g, id, &mut out);
        out
    }

    fn write_derivation(&self, g: &Grammar, id: usize, out: &mut String) {
        let e = &self.edges[id];
        match &e.origin {
            Origin::Lexical {
                base_id,
                rules,
                surface,
            } => {
                for r in rules.iter().rev() {
                    let _ = write!(out, "({r} ");
                }
                let _ = write!(out, "({base_id} {surface:?})");
                out.push_str(&")".repeat(rules.len()));
            }
            Origin::Rule(r) => {
                let _ = write!(out, "({}", g.schemata[*r].name);
                for &d in &e.daughters {
                    out.push(' ');
                    self.write_derivation(g, d, out);
                }
                out.push(')');
            }
        }
    }

    /// Schema names used anywhere in the derivation of `id`.
    pub fn rules_used(&self, g: &Grammar, id: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(i) = stack.pop() {
            if let Origin::Rule(r) = self.edges[i].origin {
                out.push(g.schemata[r].name.clone());
            }
            stack.extend(&self.edges[i].daughters);
        }
        out
    }

    /// Kind of the rule that built the edge, if phrasal.
    pub fn kind(&self, g: &Grammar, id: usize) -> Option<RuleKind> {
        match self.edges[id].origin {
            Origin::Rule(r) => Some(g.schemata[r].kind),
            Origin::Lexical { .. } => None,
        }
    }

    pub fn root_signs(&self) -> impl Iterator<Item = &FeatureStructure> {
        self.roots.iter().map(|&r| &self.edges[r].sign)
    }
}

/// Readings ranked by descending score, ties to the older edge.
pub fn unpack_nbest(forest: &Forest, g: &Grammar, n: usize) -> Vec<Derivation> {
    let mut ds: Vec<Derivation> = forest
        .roots
        .iter()
        .map(|&r| Derivation {
            edge: r,
            score: forest.edges[r].score,
            tree: forest.derivation(g, r),
        })
        .collect();
    ds.sort_by(|a, b| b.score.cmp(&a.score).then(a.edge.cmp(&b.edge)));
    ds.truncate(n);
    ds
}

/// Preprocess, segment and parse a raw input string.
pub fn parse_text(text: &str, g: &Grammar, opts: &ParseOptions) -> Result<ParseOutcome, ParseError> {
    let (t, spans) = crate::preproc::preprocess(text);
    let lattice = crate::preproc::segment_with(&t, g, &spans);
    parse(&lattice, g, opts)
}
