use crate::tfs::{parse_path, FeatId, TypeHierarchy};

use super::{GrammarError, Slot};

/// Feature paths the engine relies on, resolved once per grammar.
#[derive(Debug, Clone)]
pub struct SignPaths {
    pub phon: Vec<FeatId>,
    pub lex: Vec<FeatId>,
    pub inflected: Vec<FeatId>,
    pub local: Vec<FeatId>,
    pub head: Vec<FeatId>,
    pub spec: Vec<FeatId>,
    pub mark: Vec<FeatId>,
    pub rmorph: Vec<FeatId>,
    sat: [Vec<FeatId>; 4],
    val: [Vec<FeatId>; 4],
    pub hook_ltop: Vec<FeatId>,
    pub hook_index: Vec<FeatId>,
    pub rels: Vec<FeatId>,
    pub hcons: Vec<FeatId>,
    pub background: Vec<FeatId>,
    pub empathy: Vec<FeatId>,
    pub keyrel: Vec<FeatId>,
    pub carg: Vec<FeatId>,
    pub dtr1: Vec<FeatId>,
    pub dtr2: Vec<FeatId>,
    pub hd_dtr: Vec<FeatId>,
    /// Features removed from a rule to leave the mother.
    pub rule_only: Vec<FeatId>,
}

impl SignPaths {
    pub fn new(h: &TypeHierarchy) -> Result<Self, GrammarError> {
        let p = |s: &str| parse_path(h, s).ok_or_else(|| GrammarError::MissingPath(s.to_string()));
        let slot = |base: &str, s: Slot| p(&format!("{base}.{}", s.feature()));
        let sat = "SYNSEM.LOCAL.SUBCAT.SAT";
        let val = "SYNSEM.LOCAL.SUBCAT.VAL";
        let rule_only = ["DTR1", "DTR2", "HD-DTR", "C-CONT", "C-BG"]
            .iter()
            .map(|f| h.feature_id(f).ok_or_else(|| GrammarError::MissingPath(f.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SignPaths {
            phon: p("PHON")?,
            lex: p("LEX")?,
            inflected: p("INFLECTED")?,
            local: p("SYNSEM.LOCAL")?,
            head: p("SYNSEM.LOCAL.HEAD")?,
            spec: p("SYNSEM.LOCAL.HEAD.SPEC")?,
            mark: p("SYNSEM.LOCAL.HEAD.MARK")?,
            rmorph: p("SYNSEM.LOCAL.RMORPH-BIND-TYPE")?,
            sat: [
                slot(sat, Slot::Subj)?,
                slot(sat, Slot::Obj)?,
                slot(sat, Slot::Obj2)?,
                slot(sat, Slot::Spr)?,
            ],
            val: [
                slot(val, Slot::Subj)?,
                slot(val, Slot::Obj)?,
                slot(val, Slot::Obj2)?,
                slot(val, Slot::Spr)?,
            ],
            hook_ltop: p("SYNSEM.LOCAL.CONT.HOOK.LTOP")?,
            hook_index: p("SYNSEM.LOCAL.CONT.HOOK.INDEX")?,
            rels: p("SYNSEM.LOCAL.CONT.RELS")?,
            hcons: p("SYNSEM.LOCAL.CONT.HCONS")?,
            background: p("SYNSEM.LOCAL.CONTEXT.BACKGROUND")?,
            empathy: p("SYNSEM.LOCAL.CONTEXT.EMPATHY")?,
            keyrel: p("SYNSEM.LKEYS.KEYREL")?,
            carg: p("SYNSEM.LKEYS.KEYREL.CARG")?,
            dtr1: p("DTR1")?,
            dtr2: p("DTR2")?,
            hd_dtr: p("HD-DTR")?,
            rule_only,
        })
    }

    pub fn sat(&self, s: Slot) -> &[FeatId] {
        &self.sat[s as usize]
    }

    pub fn val(&self, s: Slot) -> &[FeatId] {
        &self.val[s as usize]
    }

    pub fn dtr(&self, i: usize) -> &[FeatId] {
        if i == 0 {
            &self.dtr1
        } else {
            &self.dtr2
        }
    }
}
