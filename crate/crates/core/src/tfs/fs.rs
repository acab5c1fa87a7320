//! Rooted, typed, possibly reentrant feature structures.
//!
//! Structures are always stored in canonical order: nodes are numbered by a
//! depth-first walk from the root visiting arcs in feature-id order. Two
//! structures are therefore isomorphic exactly when they are `==`.

use std::sync::Arc;

use super::hierarchy::{FeatId, TypeHierarchy, TypeId};
use super::unify::{Clash, Workspace};
use super::UnifyFailure;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct Node {
    pub(crate) ty: TypeId,
    pub(crate) atom: Option<Arc<str>>,
    pub(crate) arcs: Vec<(FeatId, NodeId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureStructure {
    pub(crate) nodes: Vec<Node>,
}

impl FeatureStructure {
    /// The most general structure: a single `*top*` node.
    pub fn top(h: &TypeHierarchy) -> Self {
        Self::atomic(h.top())
    }

    /// A single node of type `t` without features.
    pub fn atomic(t: TypeId) -> Self {
        FeatureStructure {
            nodes: vec![Node {
                ty: t,
                atom: None,
                arcs: Vec::new(),
            }],
        }
    }

    /// A single `string` node carrying `atom`.
    pub fn string(h: &TypeHierarchy, atom: &str) -> Self {
        FeatureStructure {
            nodes: vec![Node {
                ty: h.string_type(),
                atom: Some(Arc::from(atom)),
                arcs: Vec::new(),
            }],
        }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Rough heap footprint in bytes.
    pub fn approx_bytes(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| std::mem::size_of::<Node>() + n.arcs.len() * std::mem::size_of::<(FeatId, NodeId)>())
            .sum()
    }

    pub fn ty(&self, n: NodeId) -> TypeId {
        self.nodes[n].ty
    }

    pub fn atom(&self, n: NodeId) -> Option<&str> {
        self.nodes[n].atom.as_deref()
    }

    pub fn arcs(&self, n: NodeId) -> &[(FeatId, NodeId)] {
        &self.nodes[n].arcs
    }

    pub fn get(&self, n: NodeId, f: FeatId) -> Option<NodeId> {
        let arcs = &self.nodes[n].arcs;
        arcs.binary_search_by_key(&f, |a| a.0).ok().map(|i| arcs[i].1)
    }

    pub fn follow(&self, path: &[FeatId]) -> Option<NodeId> {
        self.follow_from(self.root(), path)
    }

    pub fn follow_from(&self, start: NodeId, path: &[FeatId]) -> Option<NodeId> {
        path.iter().try_fold(start, |n, &f| self.get(n, f))
    }

    /// Resolve a dotted path like `SYNSEM.LOCAL.HEAD` against the hierarchy's features.
    pub fn follow_str(&self, h: &TypeHierarchy, path: &str) -> Option<NodeId> {
        let fids = parse_path(h, path)?;
        self.follow(&fids)
    }

    /// Type name at a dotted path, if the path exists.
    pub fn type_at<'h>(&self, h: &'h TypeHierarchy, path: &str) -> Option<&'h str> {
        let n = self.follow_str(h, path)?;
        Some(h.type_name(self.ty(n)))
    }

    pub fn atom_at(&self, h: &TypeHierarchy, path: &str) -> Option<&str> {
        let n = self.follow_str(h, path)?;
        self.atom(n)
    }

    /// A copy of the substructure rooted at `n`.
    pub fn substructure(&self, h: &TypeHierarchy, n: NodeId) -> FeatureStructure {
        let mut ws = Workspace::new(h);
        let base = ws.add(self, true);
        ws.extract(base + n, &[]).expect("substructure of an acyclic structure")
    }

    /// Copy with the given features removed from the root.
    pub fn restrict(&self, h: &TypeHierarchy, drop: &[FeatId]) -> FeatureStructure {
        let mut ws = Workspace::new(h);
        let root = ws.add(self, true);
        ws.extract(root, drop).expect("restriction of an acyclic structure")
    }

    /// Whether two paths lead to the same node.
    pub fn shares(&self, a: &[FeatId], b: &[FeatId]) -> bool {
        match (self.follow(a), self.follow(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    /// Number of distinct paths reaching each node, used to spot reentrancy.
    pub(crate) fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for n in &self.nodes {
            for &(_, t) in &n.arcs {
                deg[t] += 1;
            }
        }
        deg
    }
}

/// Parse a dotted feature path; `None` if any feature is unknown.
pub fn parse_path(h: &TypeHierarchy, path: &str) -> Option<Vec<FeatId>> {
    if path.is_empty() {
        return Some(Vec::new());
    }
    path.split('.').map(|f| h.feature_id(f)).collect()
}

/// Unify two structures. Both inputs are left untouched.
pub fn unify(h: &TypeHierarchy, a: &FeatureStructure, b: &FeatureStructure) -> Result<FeatureStructure, UnifyFailure> {
    unify_at(h, a, &[], b)
}

/// Unify `sub` into `host` at `path`, creating the path if absent.
pub fn unify_at(
    h: &TypeHierarchy,
    host: &FeatureStructure,
    path: &[FeatId],
    sub: &FeatureStructure,
) -> Result<FeatureStructure, UnifyFailure> {
    unify_many_and_restrict(h, host, &[(path, sub)], &[])
}

/// Unify several daughters into a host at their paths, then drop `drop`
/// features from the root. Used for rule application.
pub fn unify_many_and_restrict(
    h: &TypeHierarchy,
    host: &FeatureStructure,
    parts: &[(&[FeatId], &FeatureStructure)],
    drop: &[FeatId],
) -> Result<FeatureStructure, UnifyFailure> {
    let mut ws = Workspace::new(h);
    let root = ws.add(host, true);
    for (path, sub) in parts {
        let target = ws.ensure_path(root, path).map_err(|c| c.describe(h))?;
        let sroot = ws.add(sub, true);
        ws.unify(target, sroot).map_err(|c: Clash| {
            let mut f = c.describe(h);
            let mut full: Vec<String> = path.iter().map(|&p| h.feature_name(p).to_string()).collect();
            full.append(&mut f.path);
            f.path = full;
            f
        })?;
    }
    ws.expand(root, &|t| Ok(h.constraint_arc(t))).map_err(|e| match e {
        super::hierarchy::ExpandError::Clash(f) => f,
        super::hierarchy::ExpandError::Hierarchy(e) => UnifyFailure {
            path: Vec::new(),
            reason: super::FailReason::Constraint(e.to_string()),
        },
    })?;
    ws.extract(root, drop)
}

/// Set a string atom at `path` (creating it) by unification.
pub fn with_atom(
    h: &TypeHierarchy,
    fs: &FeatureStructure,
    path: &[FeatId],
    atom: &str,
) -> Result<FeatureStructure, UnifyFailure> {
    unify_at(h, fs, path, &FeatureStructure::string(h, atom))
}

/// `general ⊑`-check: every path value, atom and reentrancy of `general`
/// also holds in `specific`.
pub fn subsumes(h: &TypeHierarchy, general: &FeatureStructure, specific: &FeatureStructure) -> bool {
    let mut map: Vec<Option<NodeId>> = vec![None; general.nodes.len()];
    let mut stack = vec![(general.root(), Some(specific.root()))];
    while let Some((g, s)) = stack.pop() {
        let gn = &general.nodes[g];
        let Some(s) = s else {
            // Path absent in `specific`: only an unconstrained leaf is implied.
            if gn.ty != h.top() || gn.atom.is_some() || !gn.arcs.is_empty() {
                return false;
            }
            continue;
        };
        match map[g] {
            Some(prev) if prev != s => return false,
            Some(_) => continue,
            None => map[g] = Some(s),
        }
        let sn = &specific.nodes[s];
        if !h.subsumes(gn.ty, sn.ty) {
            return false;
        }
        if let Some(a) = &gn.atom {
            if sn.atom.as_deref() != Some(&**a) {
                return false;
            }
        }
        for &(f, gc) in &gn.arcs {
            stack.push((gc, specific.get(s, f)));
        }
    }
    // An unconstrained leaf reached through two paths in `general` is still
    // a reentrancy fact.
    let deg = general.in_degrees();
    for (g, d) in deg.iter().enumerate() {
        if *d > 1 && map[g].is_none() {
            return false;
        }
    }
    true
}
