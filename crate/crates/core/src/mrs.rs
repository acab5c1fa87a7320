//! Minimal Recursion Semantics: extraction from signs, well-formedness,
//! scope resolution and equivalence.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::grammar::Grammar;
use crate::tfs::{FeatId, FeatureStructure, NodeId};

pub const DEFAULT_PLUGGING_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Handle,
    Event,
    Instance,
    Individual,
    Unknown,
}

impl Sort {
    pub fn prefix(self) -> char {
        match self {
            Sort::Handle => 'h',
            Sort::Event => 'e',
            Sort::Instance => 'x',
            Sort::Individual => 'i',
            Sort::Unknown => 'u',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub id: u32,
    pub sort: Sort,
}

impl Var {
    pub fn new(sort: Sort, id: u32) -> Self {
        Var { id, sort }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.sort.prefix(), self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arg {
    Var(Var),
    Const(String),
}

impl Arg {
    pub fn var(&self) -> Option<Var> {
        match self {
            Arg::Var(v) => Some(*v),
            Arg::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ep {
    pub pred: String,
    pub label: Option<Var>,
    pub args: BTreeMap<String, Arg>,
}

impl Ep {
    pub fn arg(&self, role: &str) -> Option<&Arg> {
        self.args.get(role)
    }

    pub fn is_quantifier(&self) -> bool {
        self.args.contains_key("RSTR")
    }

    /// Handle-valued arguments, in role order.
    pub fn holes(&self) -> impl Iterator<Item = (&str, Var)> + '_ {
        ordered_roles(&self.args)
            .into_iter()
            .filter_map(|(r, a)| a.var().filter(|v| v.sort == Sort::Handle).map(|v| (r, v)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Qeq {
    pub hole: Var,
    pub label: Var,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Mrs {
    pub top: Option<Var>,
    pub index: Option<Var>,
    pub rels: Vec<Ep>,
    pub hcons: Vec<Qeq>,
    /// Variable properties such as tense on events.
    pub props: BTreeMap<Var, BTreeMap<String, String>>,
    /// Background relations, kept apart from the scoped semantics.
    pub context: Vec<Ep>,
}

const ROLE_ORDER: &[&str] = &["LBL", "ARG0", "ARG1", "ARG2", "ARG3", "ARG", "RSTR", "BODY", "CARG"];

fn ordered_roles(args: &BTreeMap<String, Arg>) -> Vec<(&str, &Arg)> {
    let mut v: Vec<(&str, &Arg)> = args.iter().map(|(k, a)| (k.as_str(), a)).collect();
    v.sort_by_key(|(k, _)| {
        (
            ROLE_ORDER.iter().position(|r| r == k).unwrap_or(ROLE_ORDER.len()),
            k.to_string(),
        )
    });
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MalformedSemanticsError {
    #[error("sign has no {0}")]
    Missing(&'static str),
    #[error("{0} is not a well-formed difference list")]
    BadList(&'static str),
}

struct Extractor<'a> {
    g: &'a Grammar,
    fs: &'a FeatureStructure,
    vars: HashMap<NodeId, Var>,
    next: u32,
}

impl Extractor<'_> {
    fn sort(&self, n: NodeId) -> Sort {
        let h = &self.g.hierarchy;
        let t = self.fs.ty(n);
        let is = |name: &str| h.type_id(name).is_some_and(|s| h.subsumes(s, t));
        if is("handle") {
            Sort::Handle
        } else if is("event") {
            Sort::Event
        } else if is("ref-ind") {
            Sort::Instance
        } else if is("individual") {
            Sort::Individual
        } else {
            Sort::Unknown
        }
    }

    fn var(&mut self, n: NodeId) -> Var {
        if let Some(v) = self.vars.get(&n) {
            return *v;
        }
        let v = Var::new(self.sort(n), self.next);
        self.next += 1;
        self.vars.insert(n, v);
        v
    }

    fn list(&self, at: NodeId, what: &'static str) -> Result<Vec<NodeId>, MalformedSemanticsError> {
        let h = &self.g.hierarchy;
        let f = |name| h.feature_id(name).ok_or(MalformedSemanticsError::BadList(what));
        let (list, last, first, rest) = (f("LIST")?, f("LAST")?, f("FIRST")?, f("REST")?);
        let mut node = self.fs.get(at, list).ok_or(MalformedSemanticsError::BadList(what))?;
        let end = self.fs.get(at, last).ok_or(MalformedSemanticsError::BadList(what))?;
        let mut out = Vec::new();
        while node != end {
            out.push(self.fs.get(node, first).ok_or(MalformedSemanticsError::BadList(what))?);
            node = self.fs.get(node, rest).ok_or(MalformedSemanticsError::BadList(what))?;
            if out.len() > self.fs.node_count() {
                return Err(MalformedSemanticsError::BadList(what));
            }
        }
        Ok(out)
    }

    fn ep(&mut self, n: NodeId) -> Ep {
        let h = &self.g.hierarchy;
        let mut pred = String::new();
        let mut label = None;
        let mut args = BTreeMap::new();
        let arcs: Vec<(FeatId, NodeId)> = self.fs.arcs(n).to_vec();
        for (f, v) in arcs {
            let name = h.feature_name(f);
            match name {
                "PRED" => pred = self.fs.atom(v).unwrap_or("").to_string(),
                "LBL" => label = Some(self.var(v)),
                _ => {
                    if self.fs.ty(v) == h.string_type() {
                        if let Some(a) = self.fs.atom(v) {
                            args.insert(name.to_string(), Arg::Const(a.to_string()));
                        }
                    } else {
                        let var = self.var(v);
                        args.insert(name.to_string(), Arg::Var(var));
                    }
                }
            }
        }
        Ep { pred, label, args }
    }
}

/// Read the semantics of a sign.
pub fn extract_mrs(g: &Grammar, sign: &FeatureStructure) -> Result<Mrs, MalformedSemanticsError> {
    let p = &g.paths;
    let ltop = sign
        .follow(&p.hook_ltop)
        .ok_or(MalformedSemanticsError::Missing("HOOK.LTOP"))?;
    let index = sign
        .follow(&p.hook_index)
        .ok_or(MalformedSemanticsError::Missing("HOOK.INDEX"))?;
    let rels = sign.follow(&p.rels).ok_or(MalformedSemanticsError::Missing("RELS"))?;
    let hcons = sign.follow(&p.hcons).ok_or(MalformedSemanticsError::Missing("HCONS"))?;
    let mut x = Extractor {
        g,
        fs: sign,
        vars: HashMap::new(),
        next: 1,
    };
    let top = Var::new(Sort::Handle, 0);
    let mut m = Mrs {
        top: Some(top),
        ..Mrs::default()
    };
    let ltop = x.var(ltop);
    m.index = Some(x.var(index));
    for n in x.list(rels, "RELS")? {
        let ep = x.ep(n);
        m.rels.push(ep);
    }
    m.hcons.push(Qeq { hole: top, label: ltop });
    let (harg, larg) = (g.hierarchy.feature_id("HARG"), g.hierarchy.feature_id("LARG"));
    for n in x.list(hcons, "HCONS")? {
        let hole = harg
            .and_then(|f| sign.get(n, f))
            .ok_or(MalformedSemanticsError::BadList("HCONS"))?;
        let lab = larg
            .and_then(|f| sign.get(n, f))
            .ok_or(MalformedSemanticsError::BadList("HCONS"))?;
        let q = Qeq {
            hole: x.var(hole),
            label: x.var(lab),
        };
        m.hcons.push(q);
    }
    if let Some(bg) = sign.follow(&p.background) {
        for n in x.list(bg, "BACKGROUND")? {
            let ep = x.ep(n);
            m.context.push(ep);
        }
    }
    let h = &g.hierarchy;
    let nodes: Vec<(NodeId, Var)> = x.vars.iter().map(|(n, v)| (*n, *v)).collect();
    for (n, v) in nodes {
        if v.sort == Sort::Handle {
            continue;
        }
        for &(f, val) in sign.arcs(n) {
            let t = sign.ty(val);
            if t != h.value_type(f) && sign.arcs(val).is_empty() {
                m.props
                    .entry(v)
                    .or_default()
                    .insert(h.feature_name(f).to_string(), h.type_name(t).to_string());
            }
        }
    }
    Ok(m.canonical())
}

impl Mrs {
    fn map_vars(&self, f: &mut impl FnMut(Var) -> Var) -> Mrs {
        let ep = |e: &Ep, f: &mut dyn FnMut(Var) -> Var| Ep {
            pred: e.pred.clone(),
            label: e.label.map(&mut *f),
            args: e
                .args
                .iter()
                .map(|(k, a)| {
                    (
                        k.clone(),
                        match a {
                            Arg::Var(v) => Arg::Var(f(*v)),
                            c => c.clone(),
                        },
                    )
                })
                .collect(),
        };
        Mrs {
            top: self.top.map(&mut *f),
            index: self.index.map(&mut *f),
            rels: self.rels.iter().map(|e| ep(e, f)).collect(),
            hcons: self
                .hcons
                .iter()
                .map(|q| Qeq {
                    hole: f(q.hole),
                    label: f(q.label),
                })
                .collect(),
            props: self.props.iter().map(|(v, p)| (f(*v), p.clone())).collect(),
            context: self.context.iter().map(|e| ep(e, f)).collect(),
        }
    }

    /// Variables in order of first occurrence.
    fn occurrence_order(&self) -> Vec<Var> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut see = |v: Var| {
            if seen.insert(v) {
                out.push(v);
            }
        };
        self.top.into_iter().chain(self.index).for_each(&mut see);
        for e in self.rels.iter().chain(&self.context) {
            e.label.into_iter().for_each(&mut see);
            for (_, a) in ordered_roles(&e.args) {
                a.var().into_iter().for_each(&mut see);
            }
        }
        for q in &self.hcons {
            see(q.hole);
            see(q.label);
        }
        self.props.keys().copied().for_each(see);
        out
    }

    fn renumber(&self) -> Mrs {
        let map: HashMap<Var, Var> = self
            .occurrence_order()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, Var::new(v.sort, i as u32)))
            .collect();
        self.map_vars(&mut |v| map[&v])
    }

    /// Structural colour of every variable, refined from its neighbourhood
    /// until stable, so that it does not depend on the numbering.
    fn colours(&self) -> HashMap<Var, usize> {
        let vars = self.occurrence_order();
        let mut colour: HashMap<Var, String> = vars
            .iter()
            .map(|v| (*v, format!("{}{:?}", v.sort.prefix(), self.props.get(v))))
            .collect();
        let mut classes = 0;
        for _ in 0..=vars.len() {
            let mut sig: HashMap<Var, Vec<String>> = HashMap::new();
            let mut note = |v: Var, s: String| sig.entry(v).or_default().push(s);
            for (k, e) in self
                .rels
                .iter()
                .map(|e| ("R", e))
                .chain(self.context.iter().map(|e| ("C", e)))
            {
                let mut all: Vec<(&str, Var)> = e.label.map(|l| ("LBL", l)).into_iter().collect();
                all.extend(
                    ordered_roles(&e.args)
                        .into_iter()
                        .filter_map(|(r, a)| a.var().map(|v| (r, v))),
                );
                let consts: Vec<String> = ordered_roles(&e.args)
                    .into_iter()
                    .filter_map(|(r, a)| match a {
                        Arg::Const(c) => Some(format!("{r}={c}")),
                        _ => None,
                    })
                    .collect();
                let whole: Vec<String> = all.iter().map(|(r, v)| format!("{r}:{}", colour[v])).collect();
                for (r, v) in &all {
                    note(
                        *v,
                        format!("{k}{}/{r}/{}/{}", e.pred, whole.join(","), consts.join(",")),
                    );
                }
            }
            for q in &self.hcons {
                note(q.hole, format!("qeq>{}", colour[&q.label]));
                note(q.label, format!("qeq<{}", colour[&q.hole]));
            }
            for (name, v) in [("TOP", self.top), ("INDEX", self.index)] {
                if let Some(v) = v {
                    note(v, name.to_string());
                }
            }
            let keyed: HashMap<Var, String> = vars
                .iter()
                .map(|v| {
                    let mut s = sig.remove(v).unwrap_or_default();
                    s.sort();
                    (*v, format!("{}|{}", colour[v], s.join(";")))
                })
                .collect();
            let ranks: BTreeSet<&String> = keyed.values().collect();
            let ranks: HashMap<&String, usize> = ranks.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
            let next: HashMap<Var, String> = keyed.iter().map(|(v, k)| (*v, format!("{:04}", ranks[k]))).collect();
            let n = ranks.len();
            colour = next;
            if n == classes {
                break;
            }
            classes = n;
        }
        colour.into_iter().map(|(v, c)| (v, c.parse().unwrap_or(0))).collect()
    }

    /// Sort relations by predicate and structure, then renumber variables
    /// by first occurrence.
    pub fn canonical(&self) -> Mrs {
        let colour = self.colours();
        let key = |e: &Ep| {
            let args: Vec<(String, String)> = ordered_roles(&e.args)
                .into_iter()
                .map(|(r, a)| {
                    let v = match a {
                        Arg::Var(v) => format!("{:06}", colour[v]),
                        Arg::Const(c) => format!("\"{c}"),
                    };
                    (r.to_string(), v)
                })
                .collect();
            (e.pred.clone(), e.label.map(|l| colour[&l]), args)
        };
        let mut m = self.clone();
        m.rels.sort_by_cached_key(key);
        m.context.sort_by_cached_key(key);
        m.hcons.sort_by_key(|q| (colour[&q.hole], colour[&q.label]));
        let mut m = m.renumber();
        m.hcons.sort();
        m
    }

    /// Variables that label some relation.
    pub fn labels(&self) -> BTreeSet<Var> {
        self.rels.iter().filter_map(|e| e.label).collect()
    }

    pub fn preds(&self) -> Vec<&str> {
        self.rels.iter().map(|e| e.pred.as_str()).collect()
    }

    pub fn rels_named(&self, pred: &str) -> Vec<&Ep> {
        self.rels.iter().filter(|e| e.pred == pred).collect()
    }

    pub fn prop(&self, v: Var, name: &str) -> Option<&str> {
        self.props.get(&v).and_then(|p| p.get(name)).map(|s| s.as_str())
    }

    /// The CONTEXT report, one background relation per line.
    pub fn context_report(&self) -> String {
        let mut s = String::from("CONTEXT: <");
        for e in &self.context {
            s.push(' ');
            s.push_str(&fmt_ep(e));
        }
        s.push_str(" >");
        s
    }
}

fn fmt_ep(e: &Ep) -> String {
    let mut s = format!("[ {}", e.pred);
    if let Some(l) = e.label {
        s.push_str(&format!(" LBL: {l}"));
    }
    for (r, a) in ordered_roles(&e.args) {
        match a {
            Arg::Var(v) => s.push_str(&format!(" {r}: {v}")),
            Arg::Const(c) => s.push_str(&format!(" {r}: {c:?}")),
        }
    }
    s.push_str(" ]");
    s
}

impl fmt::Display for Mrs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        if let Some(t) = self.top {
            write!(f, " TOP: {t}")?;
        }
        if let Some(i) = self.index {
            write!(f, " INDEX: {i}")?;
        }
        f.write_str(" RELS: <")?;
        for e in &self.rels {
            write!(f, " {}", fmt_ep(e))?;
        }
        f.write_str(" > HCONS: <")?;
        for q in &self.hcons {
            write!(f, " {} qeq {}", q.hole, q.label)?;
        }
        f.write_str(" >")?;
        if !self.props.is_empty() {
            f.write_str(" VARS: <")?;
            for (v, p) in &self.props {
                write!(f, " {v} [")?;
                for (k, val) in p {
                    write!(f, " {k}: {val}")?;
                }
                f.write_str(" ]")?;
            }
            f.write_str(" >")?;
        }
        f.write_str(" ]")
    }
}

/// A well-formedness problem.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Diagnostic {
    MissingLabel(String),
    UnboundHole(Var),
    UnknownQeqLabel(Var),
    HandleCycle(Var),
    HoleIsOwnLabel(Var),
    HoleLabelMismatch { holes: usize, labels: usize },
    UnresolvableTop,
    UnresolvableIndex,
    UnboundVariable(Var),
    Unscopable,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MissingLabel(p) => write!(f, "missing label on {p}"),
            Diagnostic::UnboundHole(h) => write!(f, "unbound hole {h}"),
            Diagnostic::UnknownQeqLabel(h) => write!(f, "qeq to unknown label {h}"),
            Diagnostic::HandleCycle(h) => write!(f, "handle cycle through {h}"),
            Diagnostic::HoleIsOwnLabel(h) => write!(f, "{h} is both hole and label of one relation"),
            Diagnostic::HoleLabelMismatch { holes, labels } => {
                write!(f, "{holes} holes cannot take {labels} labels")
            }
            Diagnostic::UnresolvableTop => f.write_str("unresolvable top"),
            Diagnostic::UnresolvableIndex => f.write_str("unresolvable index"),
            Diagnostic::UnboundVariable(x) => write!(f, "unbound variable {x}"),
            Diagnostic::Unscopable => f.write_str("no scope resolution"),
        }
    }
}

/// Holes to be plugged: the top plus handle arguments that are not labels.
fn holes(m: &Mrs) -> Vec<Var> {
    let labels = m.labels();
    let mut out: Vec<Var> = m.top.into_iter().collect();
    for e in &m.rels {
        for (_, h) in e.holes() {
            if !labels.contains(&h) && !out.contains(&h) {
                out.push(h);
            }
        }
    }
    for q in &m.hcons {
        if !labels.contains(&q.hole) && !out.contains(&q.hole) {
            out.push(q.hole);
        }
    }
    out
}

/// Handles each label directly dominates through its own hole arguments,
/// following qeqs and label identity.
fn outscopes(m: &Mrs) -> BTreeMap<Var, BTreeSet<Var>> {
    let labels = m.labels();
    let qeq: BTreeMap<Var, Var> = m.hcons.iter().map(|q| (q.hole, q.label)).collect();
    let mut out: BTreeMap<Var, BTreeSet<Var>> = BTreeMap::new();
    for e in &m.rels {
        let Some(l) = e.label else { continue };
        for (_, h) in e.holes() {
            let target = if labels.contains(&h) {
                Some(h)
            } else {
                qeq.get(&h).copied()
            };
            if let Some(t) = target {
                out.entry(l).or_default().insert(t);
            }
        }
    }
    out
}

fn has_cycle_from(start: Var, g: &BTreeMap<Var, BTreeSet<Var>>) -> bool {
    let mut stack: Vec<Var> = g.get(&start).into_iter().flatten().copied().collect();
    let mut seen = BTreeSet::new();
    while let Some(v) = stack.pop() {
        if v == start {
            return true;
        }
        if seen.insert(v) {
            stack.extend(g.get(&v).into_iter().flatten().copied());
        }
    }
    false
}

/// Structural checks. Scope resolvability is the remaining condition, so
/// an MRS with no diagnostics here should also resolve.
pub fn structural_diagnostics(m: &Mrs) -> Vec<Diagnostic> {
    let mut d = BTreeSet::new();
    let labels = m.labels();
    for e in &m.rels {
        match e.label {
            Some(l) if l.sort == Sort::Handle => {
                if e.holes().any(|(_, h)| h == l) {
                    d.insert(Diagnostic::HoleIsOwnLabel(l));
                }
            }
            _ => {
                d.insert(Diagnostic::MissingLabel(e.pred.clone()));
            }
        }
    }
    let args: BTreeSet<Var> = m
        .rels
        .iter()
        .flat_map(|e| e.holes().map(|(_, h)| h))
        .chain(m.top)
        .collect();
    for q in &m.hcons {
        if !args.contains(&q.hole) {
            d.insert(Diagnostic::UnboundHole(q.hole));
        }
        if !labels.contains(&q.label) {
            d.insert(Diagnostic::UnknownQeqLabel(q.label));
        }
    }
    let qeq_holes: BTreeSet<Var> = m.hcons.iter().map(|q| q.hole).collect();
    for e in &m.rels {
        for (role, h) in e.holes() {
            if role != "BODY" && !labels.contains(&h) && !qeq_holes.contains(&h) {
                d.insert(Diagnostic::UnboundHole(h));
            }
        }
    }
    let g = outscopes(m);
    for l in &labels {
        if has_cycle_from(*l, &g) {
            d.insert(Diagnostic::HandleCycle(*l));
        }
    }
    if m.top.is_none() {
        d.insert(Diagnostic::UnresolvableTop);
    }
    let arg0s: BTreeSet<Var> = m.rels.iter().filter_map(|e| e.arg("ARG0").and_then(Arg::var)).collect();
    if !m.index.is_some_and(|i| arg0s.contains(&i)) {
        d.insert(Diagnostic::UnresolvableIndex);
    }
    let hs = holes(m).len();
    if hs != labels.len() {
        d.insert(Diagnostic::HoleLabelMismatch {
            holes: hs,
            labels: labels.len(),
        });
    }
    let bound: BTreeMap<Var, usize> = m
        .rels
        .iter()
        .filter(|e| e.is_quantifier())
        .filter_map(|e| e.arg("ARG0").and_then(Arg::var))
        .fold(BTreeMap::new(), |mut acc, x| {
            *acc.entry(x).or_default() += 1;
            acc
        });
    for e in &m.rels {
        for (_, a) in ordered_roles(&e.args) {
            if let Some(x) = a.var().filter(|v| v.sort == Sort::Instance) {
                if bound.get(&x) != Some(&1) {
                    d.insert(Diagnostic::UnboundVariable(x));
                }
            }
        }
    }
    d.into_iter().collect()
}

/// Every structural check plus scope resolvability.
pub fn check_wellformed(m: &Mrs) -> Result<(), Vec<Diagnostic>> {
    let mut d = structural_diagnostics(m);
    if d.is_empty() && matches!(resolve_scopes(m, DEFAULT_PLUGGING_CAP), Ok(v) if v.is_empty()) {
        d.push(Diagnostic::Unscopable);
    }
    if d.is_empty() {
        Ok(())
    } else {
        Err(d)
    }
}

/// A full plugging: each hole with the label that fills it.
pub type ScopedForm = BTreeMap<Var, Var>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("scope resolution gave up after {0} pluggings")]
pub struct ScopeResourceLimit(pub usize);

struct Resolver<'a> {
    m: &'a Mrs,
    holes: Vec<Var>,
    labels: Vec<Var>,
    qeq: BTreeMap<Var, Var>,
    /// Holes each label owns as arguments (label identity included).
    owned: BTreeMap<Var, Vec<Var>>,
    /// Labels directly equal to an argument of another relation.
    fixed: BTreeMap<Var, Var>,
    quant_body: BTreeMap<Var, Var>,
    cap: usize,
    out: Vec<ScopedForm>,
}

impl Resolver<'_> {
    /// Labels below `l` in the plugging (including `l`).
    fn below(&self, l: Var, plug: &BTreeMap<Var, Var>, acc: &mut BTreeSet<Var>) {
        if !acc.insert(l) {
            return;
        }
        for h in self.owned.get(&l).into_iter().flatten() {
            if let Some(&c) = plug.get(h).or_else(|| self.fixed.get(h)) {
                self.below(c, plug, acc);
            }
        }
    }

    fn qeq_ok(&self, hole: Var, target: Var, plug: &BTreeMap<Var, Var>) -> bool {
        let mut cur = match plug.get(&hole) {
            Some(&l) => l,
            None => return false,
        };
        let mut steps = 0;
        loop {
            if cur == target {
                return true;
            }
            let Some(body) = self.quant_body.get(&cur) else {
                return false;
            };
            cur = match plug.get(body) {
                Some(&l) => l,
                None => return false,
            };
            steps += 1;
            if steps > self.labels.len() {
                return false;
            }
        }
    }

    fn valid(&self, plug: &BTreeMap<Var, Var>) -> bool {
        let Some(top) = self.m.top else { return false };
        let Some(&root) = plug.get(&top) else { return false };
        let mut reach = BTreeSet::new();
        self.below(root, plug, &mut reach);
        if reach.len() != self.labels.len() {
            return false;
        }
        if !self.qeq.iter().all(|(h, l)| self.qeq_ok(*h, *l, plug)) {
            return false;
        }
        // every use of a quantified variable lies in its quantifier's scope
        for q in self.m.rels.iter().filter(|e| e.is_quantifier()) {
            let (Some(ql), Some(x)) = (q.label, q.arg("ARG0").and_then(Arg::var)) else {
                continue;
            };
            let mut scope = BTreeSet::new();
            self.below(ql, plug, &mut scope);
            for e in &self.m.rels {
                if std::ptr::eq(e, q) {
                    continue;
                }
                if e.args.values().any(|a| a.var() == Some(x)) && !e.label.is_some_and(|l| scope.contains(&l)) {
                    return false;
                }
            }
        }
        true
    }

    fn acyclic_so_far(&self, plug: &BTreeMap<Var, Var>, l: Var) -> bool {
        let mut acc = BTreeSet::new();
        let mut stack = vec![l];
        while let Some(x) = stack.pop() {
            for h in self.owned.get(&x).into_iter().flatten() {
                if let Some(&c) = plug.get(h).or_else(|| self.fixed.get(h)) {
                    if c == l {
                        return false;
                    }
                    if acc.insert(c) {
                        stack.push(c);
                    }
                }
            }
        }
        true
    }

    fn go(
        &mut self,
        i: usize,
        plug: &mut BTreeMap<Var, Var>,
        used: &mut BTreeSet<Var>,
    ) -> Result<(), ScopeResourceLimit> {
        if i == self.holes.len() {
            if self.valid(plug) {
                if self.out.len() >= self.cap {
                    return Err(ScopeResourceLimit(self.cap));
                }
                self.out.push(plug.clone());
            }
            return Ok(());
        }
        let h = self.holes[i];
        for l in self.labels.clone() {
            if used.contains(&l) {
                continue;
            }
            if let Some(&target) = self.qeq.get(&h) {
                if l != target && !self.quant_body.contains_key(&l) {
                    continue;
                }
            }
            plug.insert(h, l);
            if self.acyclic_so_far(plug, l) {
                used.insert(l);
                self.go(i + 1, plug, used)?;
                used.remove(&l);
            }
            plug.remove(&h);
        }
        Ok(())
    }
}

/// All pluggings of holes by labels that form a tree from the top,
/// respect every qeq and keep quantified variables in scope.
pub fn resolve_scopes(m: &Mrs, cap: usize) -> Result<Vec<ScopedForm>, ScopeResourceLimit> {
    let labels: Vec<Var> = m.labels().into_iter().collect();
    let arg0s: BTreeSet<Var> = m.rels.iter().filter_map(|e| e.arg("ARG0").and_then(Arg::var)).collect();
    if m.top.is_none() || !m.index.is_some_and(|i| arg0s.contains(&i)) || m.rels.iter().any(|e| e.label.is_none()) {
        return Ok(Vec::new());
    }
    let holes = holes(m);
    if holes.len() != labels.len() {
        return Ok(Vec::new());
    }
    let label_set = m.labels();
    let mut owned: BTreeMap<Var, Vec<Var>> = BTreeMap::new();
    let mut fixed = BTreeMap::new();
    let mut quant_body = BTreeMap::new();
    for e in &m.rels {
        let l = e.label.expect("checked above");
        for (role, h) in e.holes() {
            owned.entry(l).or_default().push(h);
            if label_set.contains(&h) {
                fixed.insert(h, h);
            }
            if role == "BODY" {
                quant_body.insert(l, h);
            }
        }
    }
    let mut r = Resolver {
        m,
        holes,
        labels,
        qeq: m.hcons.iter().map(|q| (q.hole, q.label)).collect(),
        owned,
        fixed,
        quant_body,
        cap,
        out: Vec::new(),
    };
    r.go(0, &mut BTreeMap::new(), &mut BTreeSet::new())?;
    Ok(r.out)
}

/// Isomorphism under renaming of variables, with relations as bags.
pub fn mrs_equal(a: &Mrs, b: &Mrs) -> bool {
    if a.rels.len() != b.rels.len()
        || a.hcons.len() != b.hcons.len()
        || a.context.len() != b.context.len()
        || a.top.is_some() != b.top.is_some()
        || a.index.is_some() != b.index.is_some()
    {
        return false;
    }
    let mut map = BTreeMap::new();
    let mut inv = BTreeMap::new();
    if !bind(a.top, b.top, &mut map, &mut inv) || !bind(a.index, b.index, &mut map, &mut inv) {
        return false;
    }
    let a_eps: Vec<&Ep> = a.rels.iter().chain(&a.context).collect();
    let b_eps: Vec<&Ep> = b.rels.iter().chain(&b.context).collect();
    let split = a.rels.len();
    match_eps(
        &a_eps,
        &b_eps,
        split,
        0,
        &mut vec![false; b_eps.len()],
        &mut map,
        &mut inv,
        &|map| {
            let hc: BTreeSet<(Var, Var)> = a.hcons.iter().map(|q| (map[&q.hole], map[&q.label])).collect();
            let hb: BTreeSet<(Var, Var)> = b.hcons.iter().map(|q| (q.hole, q.label)).collect();
            if a.hcons
                .iter()
                .any(|q| !map.contains_key(&q.hole) || !map.contains_key(&q.label))
            {
                return false;
            }
            hc == hb
                && a.props.len() == b.props.len()
                && a.props
                    .iter()
                    .all(|(v, p)| map.get(v).is_some_and(|w| b.props.get(w) == Some(p)))
        },
    )
}

fn bind(x: Option<Var>, y: Option<Var>, map: &mut BTreeMap<Var, Var>, inv: &mut BTreeMap<Var, Var>) -> bool {
    match (x, y) {
        (None, None) => true,
        (Some(x), Some(y)) => {
            if x.sort != y.sort {
                return false;
            }
            match (map.get(&x), inv.get(&y)) {
                (Some(m), _) => *m == y,
                (None, Some(_)) => false,
                (None, None) => {
                    map.insert(x, y);
                    inv.insert(y, x);
                    true
                }
            }
        }
        _ => false,
    }
}

#[allow(clippy::too_many_arguments)]
fn match_eps(
    a: &[&Ep],
    b: &[&Ep],
    split: usize,
    i: usize,
    used: &mut Vec<bool>,
    map: &mut BTreeMap<Var, Var>,
    inv: &mut BTreeMap<Var, Var>,
    done: &dyn Fn(&BTreeMap<Var, Var>) -> bool,
) -> bool {
    if i == a.len() {
        return done(map);
    }
    let range = if i < split { 0..split } else { split..b.len() };
    for j in range {
        if used[j] || a[i].pred != b[j].pred || a[i].args.len() != b[j].args.len() {
            continue;
        }
        let (saved, saved_inv) = (map.clone(), inv.clone());
        let mut ok = bind(a[i].label, b[j].label, map, inv);
        for (role, x) in &a[i].args {
            if !ok {
                break;
            }
            ok = match (x, b[j].args.get(role)) {
                (Arg::Var(x), Some(Arg::Var(y))) => bind(Some(*x), Some(*y), map, inv),
                (Arg::Const(c), Some(Arg::Const(d))) => c == d,
                _ => false,
            };
        }
        if ok {
            used[j] = true;
            if match_eps(a, b, split, i + 1, used, map, inv, done) {
                return true;
            }
            used[j] = false;
        }
        *map = saved;
        *inv = saved_inv;
    }
    false
}


#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad MRS text near token {pos}: {msg}")]
pub struct MrsSyntaxError {
    pub pos: usize,
    pub msg: String,
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut t = String::from("\"");
            while let Some(c) = chars.next() {
                match c {
                    '\\' => t.extend(chars.next()),
                    '"' => break,
                    c => t.push(c),
                }
            }
            out.push(t);
        } else if "[]<>".contains(c) {
            chars.next();
            out.push(c.to_string());
        } else {
            let mut t = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || "[]<>\"".contains(c) {
                    break;
                }
                t.push(c);
                chars.next();
            }
            out.push(t);
        }
    }
    out
}

struct Reader {
    toks: Vec<String>,
    pos: usize,
}

impl Reader {
    fn err(&self, msg: impl Into<String>) -> MrsSyntaxError {
        MrsSyntaxError {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|s| s.as_str())
    }

    fn next(&mut self) -> Result<String, MrsSyntaxError> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err("unexpected end"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: &str) -> Result<(), MrsSyntaxError> {
        let t = self.next()?;
        if t == want {
            Ok(())
        } else {
            Err(self.err(format!("expected `{want}`, found `{t}`")))
        }
    }

    fn var(&mut self) -> Result<Var, MrsSyntaxError> {
        let t = self.next()?;
        parse_var(&t).ok_or_else(|| self.err(format!("bad variable `{t}`")))
    }

    fn ep(&mut self) -> Result<Ep, MrsSyntaxError> {
        self.expect("[")?;
        let pred = self.next()?;
        let mut ep = Ep {
            pred,
            label: None,
            args: BTreeMap::new(),
        };
        while self.peek() != Some("]") {
            let role = self.next()?;
            let role = role
                .strip_suffix(':')
                .ok_or_else(|| self.err("expected role"))?
                .to_string();
            let v = self.next()?;
            if role == "LBL" {
                ep.label = Some(parse_var(&v).ok_or_else(|| self.err("bad label"))?);
            } else if let Some(c) = v.strip_prefix('"') {
                ep.args.insert(role, Arg::Const(c.to_string()));
            } else {
                ep.args
                    .insert(role, Arg::Var(parse_var(&v).ok_or_else(|| self.err("bad variable"))?));
            }
        }
        self.expect("]")?;
        Ok(ep)
    }

    fn eps(&mut self) -> Result<Vec<Ep>, MrsSyntaxError> {
        self.expect("<")?;
        let mut out = Vec::new();
        while self.peek() != Some(">") {
            out.push(self.ep()?);
        }
        self.expect(">")?;
        Ok(out)
    }
}

fn parse_var(s: &str) -> Option<Var> {
    let mut cs = s.chars();
    let sort = match cs.next()? {
        'h' => Sort::Handle,
        'e' => Sort::Event,
        'x' => Sort::Instance,
        'i' => Sort::Individual,
        'u' => Sort::Unknown,
        _ => return None,
    };
    Some(Var::new(sort, cs.as_str().parse().ok()?))
}

impl std::str::FromStr for Mrs {
    type Err = MrsSyntaxError;

    /// Reads the serialized form, optionally followed by a CONTEXT section.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut r = Reader {
            toks: tokenize(s),
            pos: 0,
        };
        let mut m = Mrs::default();
        r.expect("[")?;
        while r.peek() != Some("]") {
            match r.next()?.as_str() {
                "TOP:" => m.top = Some(r.var()?),
                "INDEX:" => m.index = Some(r.var()?),
                "RELS:" => m.rels = r.eps()?,
                "HCONS:" => {
                    r.expect("<")?;
                    while r.peek() != Some(">") {
                        let hole = r.var()?;
                        r.expect("qeq")?;
                        let label = r.var()?;
                        m.hcons.push(Qeq { hole, label });
                    }
                    r.expect(">")?;
                }
                "VARS:" => {
                    r.expect("<")?;
                    while r.peek() != Some(">") {
                        let v = r.var()?;
                        r.expect("[")?;
                        while r.peek() != Some("]") {
                            let k = r.next()?;
                            let k = k
                                .strip_suffix(':')
                                .ok_or_else(|| r.err("expected property"))?
                                .to_string();
                            let val = r.next()?;
                            m.props.entry(v).or_default().insert(k, val);
                        }
                        r.expect("]")?;
                    }
                    r.expect(">")?;
                }
                t => return Err(r.err(format!("unknown section `{t}`"))),
            }
        }
        r.expect("]")?;
        if r.peek() == Some("CONTEXT:") {
            r.next()?;
            m.context = r.eps()?;
        }
        if let Some(t) = r.peek() {
            return Err(r.err(format!("trailing `{t}`")));
        }
        Ok(m)
    }
}

/// Damaged copies of a well-formed MRS, each breaking one structural
/// condition. Used to probe the well-formedness checks.
pub fn negative_variants(m: &Mrs) -> Vec<Mrs> {
    let mut out = Vec::new();
    let fresh = m.occurrence_order().iter().map(|v| v.id + 1).max().unwrap_or(0);
    let h = |k: u32| Var::new(Sort::Handle, fresh + k);
    // dangling qeq hole
    let mut d = m.clone();
    d.hcons.push(Qeq {
        hole: h(0),
        label: m.labels().into_iter().next().unwrap_or(h(1)),
    });
    out.push(d);
    // qeq to a label nobody carries
    if let Some(i) = m.hcons.iter().position(|q| Some(q.hole) != m.top) {
        let mut d = m.clone();
        d.hcons[i].label = h(0);
        out.push(d);
    }
    // no top
    let mut d = m.clone();
    d.top = None;
    d.hcons.retain(|q| Some(q.hole) != m.top);
    out.push(d);
    // unknown index
    let mut d = m.clone();
    d.index = Some(Var::new(Sort::Event, fresh));
    out.push(d);
    for (i, e) in m.rels.iter().enumerate() {
        // relation without a label
        let mut d = m.clone();
        d.rels[i].label = None;
        out.push(d);
        if e.is_quantifier() {
            // restriction scoping over its own quantifier
            let mut d = m.clone();
            if let (Some(r), Some(l)) = (e.arg("RSTR").and_then(Arg::var), e.label) {
                for q in d.hcons.iter_mut().filter(|q| q.hole == r) {
                    q.label = l;
                }
                out.push(d);
            }
            // quantifier removed, leaving its variable unbound
            let mut d = m.clone();
            let r = e.arg("RSTR").and_then(Arg::var);
            d.rels.remove(i);
            d.hcons.retain(|q| Some(q.hole) != r);
            out.push(d);
        } else {
            // a second, unconnected copy of the relation
            let mut d = m.clone();
            let mut c = e.clone();
            c.label = Some(h(1));
            d.rels.push(c);
            out.push(d);
        }
    }
    out
}
