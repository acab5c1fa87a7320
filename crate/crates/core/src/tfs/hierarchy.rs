//! Multiple-inheritance type hierarchy with a precomputed meet table,
//! feature appropriateness and expanded type constraints.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::fs::FeatureStructure;
use super::unify::Workspace;
use super::UnifyFailure;
use crate::grammar::source::{self, Conj, Definition, ParseError, Term};

/// Name of the unique most general type.
pub const TOP: &str = "*top*";
/// Built-in type whose nodes may carry string atoms.
pub const STRING: &str = "string";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub(crate) u32);

impl TypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatId(pub(crate) u32);

impl FeatId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("type `{0}` defined twice")]
    DuplicateType(String),
    #[error("undefined type `{name}` (line {line})")]
    UndefinedType { name: String, line: usize },
    #[error("undefined feature `{name}` (line {line})")]
    UndefinedFeature { name: String, line: usize },
    #[error("cycle in the supertype graph through {}", .0.join(" < "))]
    Cycle(Vec<String>),
    #[error("types `{0}` and `{1}` have no unique greatest lower bound")]
    AmbiguousGlb(String, String),
    #[error("feature `{feature}` introduced by both `{first}` and `{second}`")]
    FeatureReintroduction {
        feature: String,
        first: String,
        second: String,
    },
    #[error("constraint of `{ty}` cannot be expanded: {failure}")]
    ConstraintClash { ty: String, failure: UnifyFailure },
    #[error("constraint of `{0}` is recursive")]
    RecursiveConstraint(String),
}

/// Dense bit set over type ids.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }
    fn or_with(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }
    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }
    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(w, &bits)| (0..64).filter(move |b| bits & (1 << b) != 0).map(move |b| w * 64 + b))
    }
}

const NO_GLB: u32 = u32::MAX;

/// An immutable, validated type hierarchy.
#[derive(Debug, Clone)]
pub struct TypeHierarchy {
    names: Vec<String>,
    index: HashMap<String, TypeId>,
    parents: Vec<Vec<TypeId>>,
    descendants: Vec<Bits>,
    glb: Vec<u32>,
    features: Vec<String>,
    feat_index: HashMap<String, FeatId>,
    introduced_by: Vec<TypeId>,
    value_type: Vec<TypeId>,
    constraints: Vec<Option<Arc<FeatureStructure>>>,
}

impl fmt::Display for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

impl TypeHierarchy {
    /// Load a hierarchy from grammar-source text. Every definition is a type.
    pub fn load(src: &str) -> Result<Self, HierarchyError> {
        let defs = source::parse_source(src)?;
        Self::from_definitions(&defs)
    }

    pub fn from_definitions(defs: &[Definition]) -> Result<Self, HierarchyError> {
        let mut names = vec![TOP.to_string()];
        let mut index = HashMap::new();
        index.insert(TOP.to_string(), TypeId(0));
        let declares_string = defs.iter().any(|d| d.name == STRING);
        if !declares_string {
            index.insert(STRING.to_string(), TypeId(1));
            names.push(STRING.to_string());
        }
        let mut bodies: Vec<Option<&Definition>> = vec![None; names.len()];
        for d in defs {
            if index.contains_key(&d.name) {
                return Err(HierarchyError::DuplicateType(d.name.clone()));
            }
            index.insert(d.name.clone(), TypeId(names.len() as u32));
            names.push(d.name.clone());
            bodies.push(Some(d));
        }
        let n = names.len();

        let mut parents = vec![Vec::new(); n];
        for (i, body) in bodies.iter().enumerate().skip(1) {
            let mut ps = Vec::new();
            if let Some(d) = body {
                for p in d.parents() {
                    let id = *index.get(p).ok_or_else(|| HierarchyError::UndefinedType {
                        name: p.to_string(),
                        line: d.line,
                    })?;
                    if !ps.contains(&id) {
                        ps.push(id);
                    }
                }
            }
            if ps.is_empty() {
                ps.push(TypeId(0));
            }
            parents[i] = ps;
        }

        let order = topo_order(&names, &parents)?;

        let mut children = vec![Vec::new(); n];
        for (c, ps) in parents.iter().enumerate() {
            for p in ps {
                children[p.index()].push(c);
            }
        }
        let mut descendants = vec![Bits::new(n); n];
        for &t in order.iter().rev() {
            let mut b = Bits::new(n);
            b.set(t);
            for &c in &children[t] {
                let cb = descendants[c].clone();
                b.or_with(&cb);
            }
            descendants[t] = b;
        }

        let glb = compute_glb_table(&names, &descendants)?;

        // Feature introduction: top-level features of a type's own description.
        let mut features = Vec::new();
        let mut feat_index = HashMap::new();
        let mut introduced_by: Vec<TypeId> = Vec::new();
        for &t in &order {
            let Some(d) = bodies[t] else { continue };
            for term in &d.body.0 {
                let Term::Avm(feats) = term else { continue };
                for (path, _) in feats {
                    let f = &path[0];
                    match feat_index.get(f) {
                        None => {
                            feat_index.insert(f.clone(), FeatId(features.len() as u32));
                            features.push(f.clone());
                            introduced_by.push(TypeId(t as u32));
                        }
                        Some(&fid) => {
                            let intro: TypeId = introduced_by[fid.index()];
                            if !descendants[intro.index()].get(t) {
                                return Err(HierarchyError::FeatureReintroduction {
                                    feature: f.clone(),
                                    first: names[intro.index()].clone(),
                                    second: names[t].clone(),
                                });
                            }
                        }
                    }
                }
            }
        }

        let mut h = TypeHierarchy {
            names,
            index,
            parents,
            descendants,
            glb,
            value_type: vec![TypeId(0); features.len()],
            features,
            feat_index,
            introduced_by,
            constraints: vec![None; n],
        };

        let expander = Expander {
            h: &h,
            bodies: &bodies,
            memo: RefCell::new(vec![Memo::Todo; n]),
        };
        let mut constraints = vec![None; n];
        for &t in &order {
            constraints[t] = expander.full(TypeId(t as u32))?;
        }
        drop(expander);
        h.constraints = constraints;
        for (i, &intro) in h.introduced_by.iter().enumerate() {
            let f = FeatId(i as u32);
            let c = h.constraints[intro.index()]
                .as_ref()
                .expect("a type introducing features has a constraint");
            let node = c.get(c.root(), f).expect("introduced feature present in constraint");
            h.value_type[i] = c.ty(node);
        }
        Ok(h)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn top(&self) -> TypeId {
        TypeId(0)
    }

    pub fn string_type(&self) -> TypeId {
        self.index[STRING]
    }

    pub fn types(&self) -> impl Iterator<Item = TypeId> {
        (0..self.names.len() as u32).map(TypeId)
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.index.get(name).copied()
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.names[t.index()]
    }

    pub fn parents(&self, t: TypeId) -> &[TypeId] {
        &self.parents[t.index()]
    }

    pub fn feature_id(&self, name: &str) -> Option<FeatId> {
        self.feat_index.get(&name.to_uppercase()).copied()
    }

    pub fn feature_name(&self, f: FeatId) -> &str {
        &self.features[f.index()]
    }

    pub fn features(&self) -> impl Iterator<Item = FeatId> {
        (0..self.features.len() as u32).map(FeatId)
    }

    /// The type that introduces `f`.
    pub fn introduced_by(&self, f: FeatId) -> TypeId {
        self.introduced_by[f.index()]
    }

    /// The most general value type allowed under `f`.
    pub fn value_type(&self, f: FeatId) -> TypeId {
        self.value_type[f.index()]
    }

    /// Features appropriate for `t`, in feature-id order.
    pub fn appropriate_features(&self, t: TypeId) -> Vec<FeatId> {
        self.features()
            .filter(|&f| self.subsumes(self.introduced_by(f), t))
            .collect()
    }

    /// `general ⊒ specific`.
    pub fn subsumes(&self, general: TypeId, specific: TypeId) -> bool {
        self.descendants[general.index()].get(specific.index())
    }

    /// Greatest lower bound; `None` is bottom.
    pub fn glb(&self, a: TypeId, b: TypeId) -> Option<TypeId> {
        let v = self.glb[a.index() * self.names.len() + b.index()];
        (v != NO_GLB).then_some(TypeId(v))
    }

    /// Name-level glb. `Err` carries the unknown name.
    pub fn glb_by_name(&self, a: &str, b: &str) -> Result<Option<&str>, String> {
        let ta = self.type_id(a).ok_or_else(|| a.to_string())?;
        let tb = self.type_id(b).ok_or_else(|| b.to_string())?;
        Ok(self.glb(ta, tb).map(|t| self.type_name(t)))
    }

    /// Expanded constraint of `t`, or `None` when it is just a bare node.
    pub fn constraint(&self, t: TypeId) -> Option<&FeatureStructure> {
        self.constraints[t.index()].as_deref()
    }

    pub(crate) fn constraint_arc(&self, t: TypeId) -> Option<Arc<FeatureStructure>> {
        self.constraints[t.index()].clone()
    }

    /// Build and expand a feature structure from a value description.
    pub fn build(&self, conj: &Conj) -> Result<FeatureStructure, BuildError> {
        let mut ws = Workspace::new(self);
        let mut tags = HashMap::new();
        let root = ws.build_conj(conj, &mut tags)?;
        ws.infer_types(root).map_err(BuildError::Unify)?;
        ws.expand(root, &|t| Ok(self.constraint_arc(t))).map_err(|e| match e {
            ExpandError::Clash(c) => BuildError::Unify(c),
            ExpandError::Hierarchy(h) => BuildError::Hierarchy(h),
        })?;
        ws.extract(root, &[]).map_err(BuildError::Unify)
    }

    /// Convenience: parse and build a value description.
    pub fn fs(&self, text: &str) -> Result<FeatureStructure, BuildError> {
        let conj = source::parse_conj(text)?;
        self.build(&conj)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("undefined type `{0}`")]
    UndefinedType(String),
    #[error("undefined feature `{0}`")]
    UndefinedFeature(String),
    #[error("inconsistent description: {0}")]
    Unify(UnifyFailure),
    #[error("{0}")]
    Hierarchy(HierarchyError),
}

pub(crate) enum ExpandError {
    Clash(UnifyFailure),
    Hierarchy(HierarchyError),
}

fn topo_order(names: &[String], parents: &[Vec<TypeId>]) -> Result<Vec<usize>, HierarchyError> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let n = names.len();
    let mut state = vec![0u8; n];
    let mut order = Vec::with_capacity(n);
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        state[start] = 1;
        while let Some(&mut (t, ref mut i)) = stack.last_mut() {
            if *i < parents[t].len() {
                let p = parents[t][*i].index();
                *i += 1;
                match state[p] {
                    0 => {
                        state[p] = 1;
                        stack.push((p, 0));
                    }
                    1 => {
                        let mut cyc: Vec<String> = stack
                            .iter()
                            .map(|&(x, _)| x)
                            .skip_while(|&x| x != p)
                            .map(|x| names[x].clone())
                            .collect();
                        cyc.push(names[p].clone());
                        return Err(HierarchyError::Cycle(cyc));
                    }
                    _ => {}
                }
            } else {
                state[t] = 2;
                order.push(t);
                stack.pop();
            }
        }
    }
    Ok(order)
}

fn compute_glb_table(names: &[String], desc: &[Bits]) -> Result<Vec<u32>, HierarchyError> {
    let n = names.len();
    let mut table = vec![NO_GLB; n * n];
    for a in 0..n {
        for b in a..n {
            let g = if desc[a].get(b) {
                Some(b)
            } else if desc[b].get(a) {
                Some(a)
            } else {
                let common = desc[a].and(&desc[b]);
                let members: Vec<usize> = common.ones().collect();
                let maximal: Vec<usize> = members
                    .iter()
                    .copied()
                    .filter(|&m| !members.iter().any(|&o| o != m && desc[o].get(m)))
                    .collect();
                match maximal.len() {
                    0 => None,
                    1 => Some(maximal[0]),
                    _ => return Err(HierarchyError::AmbiguousGlb(names[a].clone(), names[b].clone())),
                }
            };
            if let Some(g) = g {
                table[a * n + b] = g as u32;
                table[b * n + a] = g as u32;
            }
        }
    }
    Ok(table)
}

#[derive(Clone)]
enum Memo {
    Todo,
    InProgress,
    Done(Option<Arc<FeatureStructure>>),
}

/// Computes fully expanded type constraints during load.
struct Expander<'a> {
    h: &'a TypeHierarchy,
    bodies: &'a [Option<&'a Definition>],
    memo: RefCell<Vec<Memo>>,
}

impl Expander<'_> {
    fn full(&self, t: TypeId) -> Result<Option<Arc<FeatureStructure>>, HierarchyError> {
        match &self.memo.borrow()[t.index()] {
            Memo::Done(c) => return Ok(c.clone()),
            Memo::InProgress => return Err(HierarchyError::RecursiveConstraint(self.h.type_name(t).to_string())),
            Memo::Todo => {}
        }
        self.memo.borrow_mut()[t.index()] = Memo::InProgress;
        let result = self.compute(t)?;
        self.memo.borrow_mut()[t.index()] = Memo::Done(result.clone());
        Ok(result)
    }

    fn compute(&self, t: TypeId) -> Result<Option<Arc<FeatureStructure>>, HierarchyError> {
        let h = self.h;
        let name = h.type_name(t).to_string();
        let clash = |failure: UnifyFailure| HierarchyError::ConstraintClash {
            ty: name.clone(),
            failure,
        };
        let mut parent_cs = Vec::new();
        for &p in h.parents(t) {
            if let Some(c) = self.full(p)? {
                parent_cs.push(c);
            }
        }
        let own_avm: Vec<&Term> = self.bodies[t.index()]
            .map(|d| d.body.0.iter().filter(|x| matches!(x, Term::Avm(_))).collect())
            .unwrap_or_default();
        if parent_cs.is_empty() && own_avm.is_empty() {
            return Ok(None);
        }
        let mut ws = Workspace::new(h);
        let mut tags = HashMap::new();
        let root = ws.new_node(t);
        for term in own_avm {
            let n = ws
                .build_conj(&Conj(vec![term.clone()]), &mut tags)
                .map_err(|e| match e {
                    BuildError::UndefinedType(n) => HierarchyError::UndefinedType {
                        name: n,
                        line: self.bodies[t.index()].map(|d| d.line).unwrap_or(0),
                    },
                    BuildError::UndefinedFeature(n) => HierarchyError::UndefinedFeature {
                        name: n,
                        line: self.bodies[t.index()].map(|d| d.line).unwrap_or(0),
                    },
                    BuildError::Unify(f) => clash(f),
                    BuildError::Hierarchy(e) => e,
                    BuildError::Parse(p) => HierarchyError::Parse(p),
                })?;
            ws.unify(root, n).map_err(|c| clash(ws.failure(root, n, c)))?;
        }
        ws.infer_types(root).map_err(clash)?;
        for c in parent_cs {
            let croot = ws.add(&c, true);
            ws.unify(root, croot).map_err(|c| clash(ws.failure(root, root, c)))?;
        }
        ws.mark_expanded(root);
        let lookup = |u: TypeId| self.full(u);
        ws.expand(root, &lookup).map_err(|e| match e {
            ExpandError::Clash(f) => clash(f),
            ExpandError::Hierarchy(h) => h,
        })?;
        let fs = ws.extract(root, &[]).map_err(clash)?;
        Ok(Some(Arc::new(fs)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(src: &str) -> TypeHierarchy {
        TypeHierarchy::load(src).unwrap()
    }

    #[test]
    fn reflexive_glb() {
        let h = h("a := *top*.");
        assert_eq!(h.glb_by_name("a", "a").unwrap(), Some("a"));
        assert_eq!(h.glb_by_name(TOP, "a").unwrap(), Some("a"));
    }

    #[test]
    fn diamond_meet() {
        let h = h("a := *top*. b := a. c := a. d := b & c.");
        assert_eq!(h.glb_by_name("b", "c").unwrap(), Some("d"));
        assert_eq!(h.glb_by_name("d", "a").unwrap(), Some("d"));
    }

    #[test]
    fn ambiguous_meet_is_a_load_error() {
        let err = TypeHierarchy::load("a := *top*. b := a. c := a. d := b & c. e := b & c.").unwrap_err();
        assert_eq!(err, HierarchyError::AmbiguousGlb("b".into(), "c".into()));
    }

    #[test]
    fn cycle_is_detected() {
        let err = TypeHierarchy::load("a := c. b := a. c := b.").unwrap_err();
        assert!(matches!(err, HierarchyError::Cycle(_)), "{err:?}");
    }

    #[test]
    fn feature_reintroduction() {
        let err = TypeHierarchy::load("a := *top* & [ F *top* ]. b := *top* & [ F *top* ].").unwrap_err();
        assert!(matches!(err, HierarchyError::FeatureReintroduction { .. }), "{err:?}");
    }

    #[test]
    fn constraint_clash_at_load() {
        let err = TypeHierarchy::load("x := *top*. y := *top*. a := *top* & [ F x ]. b := a & [ F y ].").unwrap_err();
        assert!(matches!(err, HierarchyError::ConstraintClash { .. }), "{err:?}");
    }

    #[test]
    fn undefined_parent() {
        let err = TypeHierarchy::load("a := vebr-head.").unwrap_err();
        assert!(matches!(err, HierarchyError::UndefinedType { .. }));
    }

    #[test]
    fn constraints_inherit_and_expand_nested_types() {
        let h = h("v := *top*. w := v. \
             inner := *top* & [ G v ]. \
             outer := *top* & [ F inner ]. \
             sub := outer & [ F.G w ].");
        let c = h.constraint(h.type_id("sub").unwrap()).unwrap();
        let f = c.get(c.root(), h.feature_id("F").unwrap()).unwrap();
        let g = c.get(f, h.feature_id("G").unwrap()).unwrap();
        assert_eq!(h.type_name(c.ty(g)), "w");
        // A bare `inner` node under a feature gets its own constraint.
        let o = h.constraint(h.type_id("outer").unwrap()).unwrap();
        let f = o.get(o.root(), h.feature_id("F").unwrap()).unwrap();
        assert!(o.get(f, h.feature_id("G").unwrap()).is_some());
    }

    #[test]
    fn recursive_constraint_rejected() {
        let err = TypeHierarchy::load("l := *top* & [ REST l ].").unwrap_err();
        assert!(matches!(err, HierarchyError::RecursiveConstraint(_)), "{err:?}");
    }
}
