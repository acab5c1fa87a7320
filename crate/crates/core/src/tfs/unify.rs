//! Scratch space for destructive union-find unification. Inputs are copied
//! in, merged, then read back out into a fresh canonical structure, so the
//! public operations stay pure.

use std::collections::HashMap;
use std::sync::Arc;

use super::fs::{FeatureStructure, Node};
use super::hierarchy::{BuildError, ExpandError, FeatId, HierarchyError, TypeHierarchy, TypeId};
use super::{FailReason, UnifyFailure};
use crate::grammar::source::{Conj, Term};

#[derive(Debug, Clone)]
struct WNode {
    ty: TypeId,
    atom: Option<Arc<str>>,
    arcs: Vec<(FeatId, usize)>,
    fwd: usize,
    /// The type whose constraint is already folded into this node.
    expanded: Option<TypeId>,
}

/// Where and why a merge failed, relative to the starting pair.
#[derive(Debug, Clone)]
pub(crate) struct Clash {
    path: Vec<FeatId>,
    kind: ClashKind,
}

#[derive(Debug, Clone)]
enum ClashKind {
    Types(TypeId, TypeId),
    Atoms(Arc<str>, Arc<str>),
    AtomOnNonString(TypeId),
}

impl Clash {
    pub(crate) fn describe(&self, h: &TypeHierarchy) -> UnifyFailure {
        let path = self.path.iter().map(|&f| h.feature_name(f).to_string()).collect();
        let reason = match &self.kind {
            ClashKind::Types(a, b) => FailReason::TypeClash(h.type_name(*a).to_string(), h.type_name(*b).to_string()),
            ClashKind::Atoms(a, b) => FailReason::AtomClash(a.to_string(), b.to_string()),
            ClashKind::AtomOnNonString(t) => {
                FailReason::TypeClash(h.type_name(*t).to_string(), super::hierarchy::STRING.to_string())
            }
        };
        UnifyFailure { path, reason }
    }
}

pub(crate) type ConstraintLookup<'a> = dyn Fn(TypeId) -> Result<Option<Arc<FeatureStructure>>, HierarchyError> + 'a;

pub(crate) struct Workspace<'h> {
    h: &'h TypeHierarchy,
    nodes: Vec<WNode>,
}

impl<'h> Workspace<'h> {
    pub(crate) fn new(h: &'h TypeHierarchy) -> Self {
        Workspace { h, nodes: Vec::new() }
    }

    pub(crate) fn new_node(&mut self, ty: TypeId) -> usize {
        let i = self.nodes.len();
        self.nodes.push(WNode {
            ty,
            atom: None,
            arcs: Vec::new(),
            fwd: i,
            expanded: None,
        });
        i
    }

    /// Copy a structure in; returns its root. `expanded` marks every copied
    /// node as already satisfying its type's constraint.
    pub(crate) fn add(&mut self, fs: &FeatureStructure, expanded: bool) -> usize {
        let base = self.nodes.len();
        for (i, n) in fs.nodes.iter().enumerate() {
            self.nodes.push(WNode {
                ty: n.ty,
                atom: n.atom.clone(),
                arcs: n.arcs.iter().map(|&(f, t)| (f, t + base)).collect(),
                fwd: base + i,
                expanded: expanded.then_some(n.ty),
            });
        }
        base + fs.root()
    }

    pub(crate) fn mark_expanded(&mut self, n: usize) {
        let r = self.find(n);
        self.nodes[r].expanded = Some(self.nodes[r].ty);
    }

    fn find(&mut self, mut i: usize) -> usize {
        let mut root = i;
        while self.nodes[root].fwd != root {
            root = self.nodes[root].fwd;
        }
        while self.nodes[i].fwd != root {
            let next = self.nodes[i].fwd;
            self.nodes[i].fwd = root;
            i = next;
        }
        root
    }

    fn arc(&self, n: usize, f: FeatId) -> Option<usize> {
        self.nodes[n].arcs.iter().find(|a| a.0 == f).map(|a| a.1)
    }

    /// Walk `path` from `start`, creating nodes typed by each feature's
    /// value restriction where arcs are missing.
    pub(crate) fn ensure_path(&mut self, start: usize, path: &[FeatId]) -> Result<usize, Clash> {
        let mut cur = self.find(start);
        for (depth, &f) in path.iter().enumerate() {
            let next = match self.arc(cur, f) {
                Some(n) => self.find(n),
                None => {
                    let intro = self.h.introduced_by(f);
                    let ty = self.nodes[cur].ty;
                    let Some(g) = self.h.glb(ty, intro) else {
                        return Err(Clash {
                            path: path[..depth].to_vec(),
                            kind: ClashKind::Types(ty, intro),
                        });
                    };
                    self.nodes[cur].ty = g;
                    let n = self.new_node(self.h.value_type(f));
                    self.nodes[cur].arcs.push((f, n));
                    n
                }
            };
            cur = next;
        }
        Ok(cur)
    }

    /// Destructively merge the classes of `a` and `b`.
    pub(crate) fn unify(&mut self, a: usize, b: usize) -> Result<(), Clash> {
        let mut stack: Vec<(usize, usize, Vec<FeatId>)> = vec![(a, b, Vec::new())];
        while let Some((x, y, path)) = stack.pop() {
            let rx = self.find(x);
            let ry = self.find(y);
            if rx == ry {
                continue;
            }
            let (tx, ty) = (self.nodes[rx].ty, self.nodes[ry].ty);
            let Some(t) = self.h.glb(tx, ty) else {
                return Err(Clash {
                    path,
                    kind: ClashKind::Types(tx, ty),
                });
            };
            let atom = match (self.nodes[rx].atom.clone(), self.nodes[ry].atom.clone()) {
                (Some(p), Some(q)) if p != q => {
                    return Err(Clash {
                        path,
                        kind: ClashKind::Atoms(p, q),
                    });
                }
                (Some(p), _) | (None, Some(p)) => Some(p),
                (None, None) => None,
            };
            if atom.is_some() && !self.h.subsumes(self.h.string_type(), t) {
                return Err(Clash {
                    path,
                    kind: ClashKind::AtomOnNonString(t),
                });
            }
            let expanded = [rx, ry]
                .iter()
                .filter_map(|&r| self.nodes[r].expanded)
                .find(|&e| e == t);
            self.nodes[ry].fwd = rx;
            let moved = std::mem::take(&mut self.nodes[ry].arcs);
            let node = &mut self.nodes[rx];
            node.ty = t;
            node.atom = atom;
            node.expanded = expanded;
            for (f, target) in moved {
                match self.nodes[rx].arcs.iter().find(|a| a.0 == f).map(|a| a.1) {
                    Some(existing) => {
                        let mut p = path.clone();
                        p.push(f);
                        stack.push((existing, target, p));
                    }
                    None => self.nodes[rx].arcs.push((f, target)),
                }
            }
        }
        Ok(())
    }

    /// Turn a clash found while unifying from `start` into a failure with a
    /// path from `root`.
    pub(crate) fn failure(&mut self, root: usize, start: usize, c: Clash) -> UnifyFailure {
        let mut f = c.describe(self.h);
        if root != start {
            if let Some(prefix) = self.path_to(root, start) {
                let mut p: Vec<String> = prefix.iter().map(|&x| self.h.feature_name(x).to_string()).collect();
                p.append(&mut f.path);
                f.path = p;
            }
        }
        f
    }

    fn path_to(&mut self, root: usize, target: usize) -> Option<Vec<FeatId>> {
        let root = self.find(root);
        let target = self.find(target);
        let mut seen = HashMap::new();
        let mut queue = std::collections::VecDeque::new();
        seen.insert(root, Vec::new());
        queue.push_back(root);
        while let Some(n) = queue.pop_front() {
            if n == target {
                return seen.get(&n).cloned();
            }
            let mut arcs = self.nodes[n].arcs.clone();
            arcs.sort_by_key(|a| a.0);
            for (f, c) in arcs {
                let c = self.find(c);
                if !seen.contains_key(&c) {
                    let mut p = seen[&n].clone();
                    p.push(f);
                    seen.insert(c, p);
                    queue.push_back(c);
                }
            }
        }
        None
    }

    fn reachable(&mut self, root: usize) -> Vec<usize> {
        let root = self.find(root);
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            let n = self.find(n);
            if seen[n] {
                continue;
            }
            seen[n] = true;
            out.push(n);
            let targets: Vec<usize> = self.nodes[n].arcs.iter().map(|a| a.1).collect();
            stack.extend(targets);
        }
        out
    }

    /// Fold type constraints into every node whose type changed, until fixpoint.
    pub(crate) fn expand(&mut self, root: usize, lookup: &ConstraintLookup<'_>) -> Result<(), ExpandError> {
        loop {
            let pending: Vec<usize> = self
                .reachable(root)
                .into_iter()
                .filter(|&n| self.nodes[n].expanded != Some(self.nodes[n].ty))
                .collect();
            if pending.is_empty() {
                return Ok(());
            }
            for n in pending {
                let n = self.find(n);
                let t = self.nodes[n].ty;
                if self.nodes[n].expanded == Some(t) {
                    continue;
                }
                match lookup(t).map_err(ExpandError::Hierarchy)? {
                    Some(c) => {
                        let croot = self.add(&c, true);
                        if let Err(clash) = self.unify(n, croot) {
                            return Err(ExpandError::Clash(self.failure(root, n, clash)));
                        }
                        let r = self.find(n);
                        if self.nodes[r].ty == t {
                            self.nodes[r].expanded = Some(t);
                        }
                    }
                    None => self.nodes[n].expanded = Some(t),
                }
            }
        }
    }

    /// Raise each node's type to at least the introducing type of its features.
    pub(crate) fn infer_types(&mut self, root: usize) -> Result<(), UnifyFailure> {
        loop {
            let mut changed = false;
            for n in self.reachable(root) {
                let feats: Vec<FeatId> = self.nodes[n].arcs.iter().map(|a| a.0).collect();
                for f in feats {
                    let intro = self.h.introduced_by(f);
                    let ty = self.nodes[n].ty;
                    match self.h.glb(ty, intro) {
                        Some(g) if g == ty => {}
                        Some(g) => {
                            self.nodes[n].ty = g;
                            changed = true;
                        }
                        None => {
                            let c = Clash {
                                path: Vec::new(),
                                kind: ClashKind::Types(ty, intro),
                            };
                            return Err(self.failure(root, n, c));
                        }
                    }
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }

    /// Build nodes for a value description; tags are shared via `tags`.
    pub(crate) fn build_conj(&mut self, conj: &Conj, tags: &mut HashMap<String, usize>) -> Result<usize, BuildError> {
        let node = self.new_node(self.h.top());
        for term in &conj.0 {
            match term {
                Term::Type(name) => {
                    let t = self
                        .h
                        .type_id(name)
                        .ok_or_else(|| BuildError::UndefinedType(name.clone()))?;
                    let other = self.new_node(t);
                    self.unify(node, other)
                        .map_err(|c| BuildError::Unify(c.describe(self.h)))?;
                }
                Term::Str(s) => {
                    let other = self.new_node(self.h.string_type());
                    self.nodes[other].atom = Some(Arc::from(s.as_str()));
                    self.unify(node, other)
                        .map_err(|c| BuildError::Unify(c.describe(self.h)))?;
                }
                Term::Tag(tag) => match tags.get(tag) {
                    Some(&other) => self
                        .unify(node, other)
                        .map_err(|c| BuildError::Unify(c.describe(self.h)))?,
                    None => {
                        tags.insert(tag.clone(), node);
                    }
                },
                Term::List(items) => {
                    let list = self.build_list(items, None, tags)?;
                    self.unify(node, list)
                        .map_err(|c| BuildError::Unify(c.describe(self.h)))?;
                }
                Term::DiffList(items) => {
                    let (list_t, last_f, list_f) = (
                        self.type_named("diff-list")?,
                        self.feat_named("LAST")?,
                        self.feat_named("LIST")?,
                    );
                    let tail = self.new_node(self.type_named("list")?);
                    let list = self.build_list(items, Some(tail), tags)?;
                    let d = self.new_node(list_t);
                    self.nodes[d].arcs.push((list_f, list));
                    self.nodes[d].arcs.push((last_f, tail));
                    self.unify(node, d).map_err(|c| BuildError::Unify(c.describe(self.h)))?;
                }
                Term::Avm(feats) => {
                    for (path, value) in feats {
                        let mut cur = self.find(node);
                        for f in path {
                            let fid = self
                                .h
                                .feature_id(f)
                                .ok_or_else(|| BuildError::UndefinedFeature(f.clone()))?;
                            cur = match self.arc(cur, fid) {
                                Some(n) => self.find(n),
                                None => {
                                    let n = self.new_node(self.h.top());
                                    self.nodes[cur].arcs.push((fid, n));
                                    n
                                }
                            };
                        }
                        let v = self.build_conj(value, tags)?;
                        self.unify(cur, v).map_err(|c| BuildError::Unify(c.describe(self.h)))?;
                    }
                }
            }
        }
        Ok(node)
    }

    fn type_named(&self, name: &str) -> Result<TypeId, BuildError> {
        self.h
            .type_id(name)
            .ok_or_else(|| BuildError::UndefinedType(name.to_string()))
    }

    fn feat_named(&self, name: &str) -> Result<FeatId, BuildError> {
        self.h
            .feature_id(name)
            .ok_or_else(|| BuildError::UndefinedFeature(name.to_string()))
    }

    /// `cons` cells for `items`, ending in `tail` or a fresh `null`.
    fn build_list(
        &mut self,
        items: &[Conj],
        tail: Option<usize>,
        tags: &mut HashMap<String, usize>,
    ) -> Result<usize, BuildError> {
        let (cons, first, rest) = (
            self.type_named("cons")?,
            self.feat_named("FIRST")?,
            self.feat_named("REST")?,
        );
        let mut cur = match tail {
            Some(t) => t,
            None => self.new_node(self.type_named("null")?),
        };
        for item in items.iter().rev() {
            let value = self.build_conj(item, tags)?;
            let cell = self.new_node(cons);
            self.nodes[cell].arcs.push((first, value));
            self.nodes[cell].arcs.push((rest, cur));
            cur = cell;
        }
        Ok(cur)
    }

    /// Read out the structure under `root` in canonical order, dropping
    /// `drop` features at the root. Fails on cycles.
    pub(crate) fn extract(&mut self, root: usize, drop: &[FeatId]) -> Result<FeatureStructure, UnifyFailure> {
        let root = self.find(root);
        let mut ids: HashMap<usize, usize> = HashMap::new();
        let mut out: Vec<Node> = Vec::new();
        // Iterative DFS with an explicit on-stack set for cycle detection.
        enum Step {
            Enter(usize, Vec<FeatId>),
            Leave(usize),
        }
        let mut on_stack = vec![false; self.nodes.len()];
        let mut stack = vec![Step::Enter(root, Vec::new())];
        while let Some(step) = stack.pop() {
            match step {
                Step::Leave(n) => on_stack[n] = false,
                Step::Enter(n, path) => {
                    let n = self.find(n);
                    if on_stack[n] {
                        return Err(UnifyFailure {
                            path: path.iter().map(|&f| self.h.feature_name(f).to_string()).collect(),
                            reason: FailReason::Cycle,
                        });
                    }
                    if ids.contains_key(&n) {
                        continue;
                    }
                    ids.insert(n, out.len());
                    let mut arcs: Vec<(FeatId, usize)> = self.nodes[n]
                        .arcs
                        .iter()
                        .filter(|a| n != root || !drop.contains(&a.0))
                        .map(|&(f, t)| (f, t))
                        .collect();
                    arcs.sort_by_key(|a| a.0);
                    for a in arcs.iter_mut() {
                        a.1 = self.find(a.1);
                    }
                    out.push(Node {
                        ty: self.nodes[n].ty,
                        atom: self.nodes[n].atom.clone(),
                        arcs: arcs.clone(),
                    });
                    on_stack[n] = true;
                    stack.push(Step::Leave(n));
                    for &(f, t) in arcs.iter().rev() {
                        let mut p = path.clone();
                        p.push(f);
                        stack.push(Step::Enter(t, p));
                    }
                }
            }
        }
        for node in out.iter_mut() {
            for a in node.arcs.iter_mut() {
                a.1 = ids[&a.1];
            }
        }
        Ok(FeatureStructure { nodes: out })
    }
}
