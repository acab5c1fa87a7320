//! Rule application and the adjacency principle.

use std::fmt;

use thiserror::Error;

use crate::tfs::{unify_many_and_restrict, FeatureStructure, TypeHierarchy, UnifyFailure};

use super::{Grammar, LexicalRule, RuleSchema, SignPaths};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Subj = 0,
    Obj = 1,
    Obj2 = 2,
    Spr = 3,
}

impl Slot {
    pub const ALL: [Slot; 4] = [Slot::Subj, Slot::Obj, Slot::Obj2, Slot::Spr];

    pub fn feature(self) -> &'static str {
        match self {
            Slot::Subj => "SUBJ",
            Slot::Obj => "OBJ",
            Slot::Obj2 => "OBJ2",
            Slot::Spr => "SPR",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.feature())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    HeadComplement,
    HeadSpecifier,
    HeadMarker,
    HeadAdjunct,
    Coordination,
    NumberName,
    Quotation,
    Fragment,
    Unary,
}

impl RuleKind {
    /// Kinds that realise one of the head's arguments.
    pub fn realizes_argument(self) -> bool {
        matches!(
            self,
            RuleKind::HeadComplement | RuleKind::HeadSpecifier | RuleKind::HeadMarker
        )
    }
}

/// Ancestor types that fix a schema's kind, most specific first.
const KIND_TYPES: &[(&str, RuleKind)] = &[
    ("head-comp-phrase", RuleKind::HeadComplement),
    ("head-spec-phrase", RuleKind::HeadSpecifier),
    ("head-marker-phrase", RuleKind::HeadMarker),
    ("head-adj-phrase", RuleKind::HeadAdjunct),
    ("coord-phrase", RuleKind::Coordination),
    ("num-mult-phrase", RuleKind::NumberName),
    ("num-add-phrase", RuleKind::NumberName),
    ("quote-phrase", RuleKind::Quotation),
    ("frag-phrase", RuleKind::Fragment),
    ("unary-phrase", RuleKind::Unary),
];

const LBRANCH_TYPE: &str = "lbranch-head-adj";

/// The three clauses of the adjacency principle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjClause {
    /// A non-head daughter keeps an adjacent requirement.
    NonHead,
    /// An argument-realising rule skips an adjacent requirement of the head.
    OtherSlot,
    /// An adjunct attaches to a head with an adjacent requirement.
    Adjunct,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("adjacency violation ({clause:?}): {slot} is unsat-adjacent")]
pub struct AdjacencyViolation {
    pub clause: AdjClause,
    pub slot: Slot,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaFailure {
    #[error("rule takes {expected} daughters, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Adjacency(#[from] AdjacencyViolation),
    #[error("unification clash: {0}")]
    Unification(UnifyFailure),
}

impl SchemaFailure {
    pub fn reason(&self) -> &'static str {
        match self {
            SchemaFailure::Arity { .. } => "arity",
            SchemaFailure::Adjacency(_) => "adjacency-violation",
            SchemaFailure::Unification(_) => "unification-clash",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexRuleFailure {
    #[error("input is not lexical")]
    NotLexical,
    #[error("no orthographic pattern matches {0:?}")]
    NoOrthMatch(String),
    #[error("unification clash: {0}")]
    Unification(UnifyFailure),
}

pub(super) fn classify(
    h: &TypeHierarchy,
    paths: &SignPaths,
    name: &str,
    fs: FeatureStructure,
    weight: i32,
) -> Result<RuleSchema, String> {
    let root_ty = fs.ty(fs.root());
    let is_a = |t: &str| h.type_id(t).is_some_and(|t| h.subsumes(t, root_ty));
    let kind = KIND_TYPES
        .iter()
        .find(|(t, _)| is_a(t))
        .map(|&(_, k)| k)
        .ok_or_else(|| format!("type {} is not a known phrase kind", h.type_name(root_ty)))?;
    let arity = if fs.follow(&paths.dtr2).is_some() { 2 } else { 1 };
    if (kind == RuleKind::Unary) != (arity == 1) {
        return Err("arity does not match rule kind".into());
    }
    let hd = fs.follow(&paths.hd_dtr).ok_or("no HD-DTR")?;
    let head = (0..arity)
        .find(|&i| fs.follow(paths.dtr(i)) == Some(hd))
        .ok_or("HD-DTR is not one of the daughters")?;
    let realized = if kind.realizes_argument() {
        let unsat = h.type_id("unsat").ok_or("no type unsat")?;
        let sat = h.type_id("sat").ok_or("no type sat")?;
        let found: Vec<_> = crate::grammar::Slot::ALL
            .into_iter()
            .filter(|&s| {
                let mother = fs.follow(paths.sat(s)).map(|n| fs.ty(n));
                let dtr = fs
                    .follow(&[paths.hd_dtr.as_slice(), paths.sat(s)].concat())
                    .map(|n| fs.ty(n));
                mother == Some(sat) && dtr.is_some_and(|t| h.subsumes(unsat, t))
            })
            .collect();
        match found.as_slice() {
            [s] => Some(*s),
            _ => return Err(format!("cannot tell which slot is realised ({found:?})")),
        }
    } else {
        None
    };
    Ok(RuleSchema {
        name: name.to_string(),
        fs,
        kind,
        arity,
        head,
        realized,
        weight,
        lbranch: is_a(LBRANCH_TYPE),
    })
}

impl Grammar {
    /// Slots of `sign` whose status is unsat-adjacent.
    pub fn adjacent_slots(&self, sign: &FeatureStructure) -> Vec<Slot> {
        Slot::ALL
            .into_iter()
            .filter(|&s| {
                sign.follow(self.paths.sat(s))
                    .is_some_and(|n| self.hierarchy.subsumes(self.unsat_adjacent, sign.ty(n)))
            })
            .collect()
    }

    /// The adjacency principle for a binary combination.
    pub fn check_adjacency(
        &self,
        kind: RuleKind,
        head: &FeatureStructure,
        nonhead: Option<&FeatureStructure>,
        realized: Option<Slot>,
    ) -> Result<(), AdjacencyViolation> {
        if let Some(nh) = nonhead {
            if let Some(&slot) = self.adjacent_slots(nh).first() {
                return Err(AdjacencyViolation {
                    clause: AdjClause::NonHead,
                    slot,
                });
            }
        }
        let head_adj = self.adjacent_slots(head);
        if kind.realizes_argument() {
            if let Some(&slot) = head_adj.iter().find(|&&s| Some(s) != realized) {
                return Err(AdjacencyViolation {
                    clause: AdjClause::OtherSlot,
                    slot,
                });
            }
        } else if kind == RuleKind::HeadAdjunct {
            if let Some(&slot) = head_adj.first() {
                return Err(AdjacencyViolation {
                    clause: AdjClause::Adjunct,
                    slot,
                });
            }
        }
        Ok(())
    }

    /// Combine daughters under a schema. Daughters are passed left to right.
    pub fn apply_schema(
        &self,
        schema: &RuleSchema,
        dtrs: &[&FeatureStructure],
    ) -> Result<FeatureStructure, SchemaFailure> {
        if dtrs.len() != schema.arity {
            return Err(SchemaFailure::Arity {
                expected: schema.arity,
                got: dtrs.len(),
            });
        }
        if schema.arity == 2 {
            let nonhead = dtrs[1 - schema.head];
            self.check_adjacency(schema.kind, dtrs[schema.head], Some(nonhead), schema.realized)?;
        }
        self.unify_daughters(schema, dtrs).map_err(SchemaFailure::Unification)
    }

    /// Unification step of [`Grammar::apply_schema`] without the adjacency check.
    pub(crate) fn unify_daughters(
        &self,
        schema: &RuleSchema,
        dtrs: &[&FeatureStructure],
    ) -> Result<FeatureStructure, UnifyFailure> {
        let parts: Vec<(&[_], &FeatureStructure)> =
            dtrs.iter().enumerate().map(|(i, d)| (self.paths.dtr(i), *d)).collect();
        unify_many_and_restrict(&self.hierarchy, &schema.fs, &parts, &self.paths.rule_only)
    }

    /// Apply a lexical rule to a lexical sign.
    pub fn apply_lexical_rule(
        &self,
        sign: &FeatureStructure,
        rule: &LexicalRule,
    ) -> Result<FeatureStructure, LexRuleFailure> {
        if !sign.follow(&self.paths.lex).is_some_and(|n| sign.ty(n) == self.plus) {
            return Err(LexRuleFailure::NotLexical);
        }
        let phon = self.phon(sign).unwrap_or_default();
        let out = match &rule.orth {
            Some(o) => o
                .apply(phon)
                .ok_or_else(|| LexRuleFailure::NoOrthMatch(phon.to_string()))?,
            None => phon.to_string(),
        };
        let phon_fs = FeatureStructure::string(&self.hierarchy, &out);
        unify_many_and_restrict(
            &self.hierarchy,
            &rule.fs,
            &[(&self.paths.dtr1, sign), (&self.paths.phon, &phon_fs)],
            &self.paths.rule_only,
        )
        .map_err(LexRuleFailure::Unification)
    }
}
