//! Grammar formalism: source format, lexical rules and phrase schemata.
//!
//! A grammar is five source files: `types.gs` (the hierarchy), `lexicon.gs`,
//! `lexrules.gs`, `schemata.gs` and `roots.gs`. Everything except the types
//! is an instance built against the hierarchy.

mod kernel;
mod paths;
pub mod source;

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;

use crate::tfs::{BuildError, FeatureStructure, HierarchyError, TypeHierarchy, TypeId};
use source::{Annotation, Definition, ParseError};

pub use kernel::{AdjClause, AdjacencyViolation, LexRuleFailure, RuleKind, SchemaFailure, Slot};
pub use paths::SignPaths;

/// How deep lexical-rule closure goes when building full forms.
pub const CLOSURE_DEPTH: usize = 5;

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("{file}.gs:{err}")]
    Parse { file: &'static str, err: ParseError },
    #[error("types.gs: {0}")]
    Hierarchy(#[from] HierarchyError),
    #[error("{file}.gs:{line}: `{name}` uses undeclared type `{ty}`")]
    UndefinedType {
        file: &'static str,
        line: usize,
        name: String,
        ty: String,
    },
    #[error("{file}.gs:{line}: `{name}`: {err}")]
    Build {
        file: &'static str,
        line: usize,
        name: String,
        err: Box<BuildError>,
    },
    #[error("{file}.gs:{line}: `{name}`: {msg}")]
    Invalid {
        file: &'static str,
        line: usize,
        name: String,
        msg: String,
    },
    #[error("grammar lacks the feature path {0}")]
    MissingPath(String),
    #[error("reading {path}: {err}")]
    Io { path: String, err: std::io::Error },
}

/// The text of the five grammar files.
#[derive(Debug, Clone)]
pub struct GrammarSources {
    pub types: String,
    pub lexicon: String,
    pub lexrules: String,
    pub schemata: String,
    pub roots: String,
}

impl GrammarSources {
    /// The fragment shipped with the crate.
    pub fn bundled() -> Self {
        GrammarSources {
            types: include_str!("../../grammar/types.gs").to_string(),
            lexicon: include_str!("../../grammar/lexicon.gs").to_string(),
            lexrules: include_str!("../../grammar/lexrules.gs").to_string(),
            schemata: include_str!("../../grammar/schemata.gs").to_string(),
            roots: include_str!("../../grammar/roots.gs").to_string(),
        }
    }

    pub fn from_dir(dir: &Path) -> Result<Self, GrammarError> {
        let read = |name: &str| {
            let p = dir.join(format!("{name}.gs"));
            std::fs::read_to_string(&p).map_err(|err| GrammarError::Io {
                path: p.display().to_string(),
                err,
            })
        };
        Ok(GrammarSources {
            types: read("types")?,
            lexicon: read("lexicon")?,
            lexrules: read("lexrules")?,
            schemata: read("schemata")?,
            roots: read("roots")?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LexEntry {
    /// `orth@lextype`, with `#n` appended if that is not unique.
    pub id: String,
    pub orth: String,
    pub lextype: String,
    pub sign: FeatureStructure,
    pub weight: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Affix {
    Suffix,
    Prefix,
}

/// Ordered orthographic rewrites; the first matching pair applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orthography {
    pub affix: Affix,
    pub patterns: Vec<(String, String)>,
}

impl Orthography {
    pub fn apply(&self, form: &str) -> Option<String> {
        for (from, to) in &self.patterns {
            let from = if from == "*" { "" } else { from.as_str() };
            let to = if to == "*" { "" } else { to.as_str() };
            match self.affix {
                Affix::Suffix => {
                    if let Some(stem) = form.strip_suffix(from) {
                        return Some(format!("{stem}{to}"));
                    }
                }
                Affix::Prefix => {
                    if let Some(rest) = form.strip_prefix(from) {
                        return Some(format!("{to}{rest}"));
                    }
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone)]
pub struct LexicalRule {
    pub name: String,
    pub fs: FeatureStructure,
    pub orth: Option<Orthography>,
    /// The binding type the rule assigns, when it sets one of its own.
    pub morph_bind: Option<String>,
    pub weight: i32,
}

#[derive(Debug, Clone)]
pub struct RuleSchema {
    pub name: String,
    pub fs: FeatureStructure,
    pub kind: RuleKind,
    pub arity: usize,
    /// Index of the head daughter.
    pub head: usize,
    /// The valence slot this rule saturates, for argument-realising kinds.
    pub realized: Option<Slot>,
    pub weight: i32,
    /// Member of the left-branching-preferring family.
    pub lbranch: bool,
}

#[derive(Debug, Clone)]
pub struct RootCondition {
    pub name: String,
    pub fs: FeatureStructure,
}

/// A lexical entry after zero or more lexical rules.
#[derive(Debug, Clone)]
pub struct LexItem {
    pub base_id: String,
    pub rules: Vec<usize>,
    pub phon: String,
    pub sign: FeatureStructure,
    pub weight: i32,
}

#[derive(Debug, Default)]
struct FullForms {
    items: Vec<LexItem>,
    by_phon: HashMap<String, Vec<usize>>,
}

#[derive(Debug)]
pub struct Grammar {
    pub hierarchy: TypeHierarchy,
    pub lexicon: Vec<LexEntry>,
    pub lexical_rules: Vec<LexicalRule>,
    pub schemata: Vec<RuleSchema>,
    pub roots: Vec<RootCondition>,
    pub paths: SignPaths,
    by_orth: HashMap<String, Vec<usize>>,
    full_forms: OnceLock<FullForms>,
    pub(crate) unsat_adjacent: TypeId,
    pub(crate) plus: TypeId,
}

fn parse(file: &'static str, text: &str) -> Result<Vec<Definition>, GrammarError> {
    source::parse_source(text).map_err(|err| GrammarError::Parse { file, err })
}

fn build(h: &TypeHierarchy, file: &'static str, d: &Definition) -> Result<FeatureStructure, GrammarError> {
    h.build(&d.body).map_err(|err| match err {
        BuildError::UndefinedType(ty) => GrammarError::UndefinedType {
            file,
            line: d.line,
            name: d.name.clone(),
            ty,
        },
        err => GrammarError::Build {
            file,
            line: d.line,
            name: d.name.clone(),
            err: Box::new(err),
        },
    })
}

fn invalid(file: &'static str, d: &Definition, msg: impl Into<String>) -> GrammarError {
    GrammarError::Invalid {
        file,
        line: d.line,
        name: d.name.clone(),
        msg: msg.into(),
    }
}

/// Load a grammar from its sources.
pub fn load_grammar(src: &GrammarSources) -> Result<Grammar, GrammarError> {
    let hierarchy = TypeHierarchy::from_definitions(&parse("types", &src.types)?)?;
    let paths = SignPaths::new(&hierarchy)?;
    let need = |name: &str| {
        hierarchy
            .type_id(name)
            .ok_or_else(|| GrammarError::MissingPath(format!("type {name}")))
    };
    let unsat_adjacent = need("unsat-adjacent")?;
    let plus = need("+")?;

    let mut lexicon = Vec::new();
    let mut by_orth: HashMap<String, Vec<usize>> = HashMap::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    for d in parse("lexicon", &src.lexicon)? {
        let sign = build(&hierarchy, "lexicon", &d)?;
        let sign = crate::tfs::with_atom(&hierarchy, &sign, &paths.phon, &d.name)
            .map_err(|e| invalid("lexicon", &d, format!("cannot set PHON: {e}")))?;
        if !sign.follow(&paths.lex).is_some_and(|n| sign.ty(n) == plus) {
            return Err(invalid("lexicon", &d, "entry is not a word (LEX +)"));
        }
        let lextype = d
            .parents()
            .first()
            .map(|s| s.to_string())
            .unwrap_or_else(|| "*top*".into());
        let mut id = format!("{}@{}", d.name, lextype);
        let n = ids.entry(id.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            id = format!("{id}#{n}");
        }
        by_orth.entry(d.name.clone()).or_default().push(lexicon.len());
        lexicon.push(LexEntry {
            id,
            orth: d.name.clone(),
            lextype,
            sign,
            weight: d.weight(),
        });
    }

    let mut lexical_rules = Vec::new();
    for d in parse("lexrules", &src.lexrules)? {
        let fs = build(&hierarchy, "lexrules", &d)?;
        if fs.follow(&paths.dtr1).is_none() {
            return Err(invalid("lexrules", &d, "lexical rule has no DTR1"));
        }
        let orth = d.annotations.iter().find_map(|a| match a {
            Annotation::Suffix(p) => Some(Orthography {
                affix: Affix::Suffix,
                patterns: p.clone(),
            }),
            Annotation::Prefix(p) => Some(Orthography {
                affix: Affix::Prefix,
                patterns: p.clone(),
            }),
            Annotation::Weight(_) => None,
        });
        let morph_bind = {
            let mine = fs.follow(&paths.rmorph);
            let input = fs.follow(&[paths.dtr1.as_slice(), &paths.rmorph].concat());
            match mine {
                Some(n) if Some(n) != input && hierarchy.type_name(fs.ty(n)) != "rmorph" => {
                    Some(hierarchy.type_name(fs.ty(n)).to_string())
                }
                _ => None,
            }
        };
        lexical_rules.push(LexicalRule {
            name: d.name.clone(),
            fs,
            orth,
            morph_bind,
            weight: d.weight(),
        });
    }

    let mut schemata = Vec::new();
    for d in parse("schemata", &src.schemata)? {
        let fs = build(&hierarchy, "schemata", &d)?;
        let schema =
            kernel::classify(&hierarchy, &paths, &d.name, fs, d.weight()).map_err(|m| invalid("schemata", &d, m))?;
        schemata.push(schema);
    }

    let mut roots = Vec::new();
    for d in parse("roots", &src.roots)? {
        let fs = build(&hierarchy, "roots", &d)?;
        roots.push(RootCondition {
            name: d.name.clone(),
            fs,
        });
    }

    Ok(Grammar {
        hierarchy,
        lexicon,
        lexical_rules,
        schemata,
        roots,
        paths,
        by_orth,
        full_forms: OnceLock::new(),
        unsat_adjacent,
        plus,
    })
}

static BUNDLED: OnceLock<Grammar> = OnceLock::new();

impl Grammar {
    pub fn load(src: &GrammarSources) -> Result<Self, GrammarError> {
        load_grammar(src)
    }

    /// The bundled fragment, loaded once per process.
    pub fn bundled() -> &'static Grammar {
        BUNDLED.get_or_init(|| load_grammar(&GrammarSources::bundled()).expect("bundled grammar loads"))
    }

    /// Entries whose orthography is exactly `orth`.
    pub fn entries(&self, orth: &str) -> impl Iterator<Item = &LexEntry> {
        self.by_orth.get(orth).into_iter().flatten().map(|&i| &self.lexicon[i])
    }

    pub fn entry(&self, id: &str) -> Option<&LexEntry> {
        self.lexicon.iter().find(|e| e.id == id)
    }

    pub fn schema(&self, name: &str) -> Option<&RuleSchema> {
        self.schemata.iter().find(|s| s.name == name)
    }

    pub fn lexical_rule(&self, name: &str) -> Option<&LexicalRule> {
        self.lexical_rules.iter().find(|r| r.name == name)
    }

    /// PHON of a sign.
    pub fn phon<'a>(&self, sign: &'a FeatureStructure) -> Option<&'a str> {
        sign.follow(&self.paths.phon).and_then(|n| sign.atom(n))
    }

    /// Whether a sign is ready for syntax (INFLECTED +).
    pub fn is_inflected(&self, sign: &FeatureStructure) -> bool {
        sign.follow(&self.paths.inflected)
            .is_some_and(|n| sign.ty(n) == self.plus)
    }

    /// `item` together with everything reachable from it by up to `depth`
    /// lexical-rule applications, in breadth-first order.
    pub fn closure(&self, item: LexItem, depth: usize) -> Vec<LexItem> {
        let mut all = vec![item];
        let mut frontier = 0..1;
        for _ in 0..depth {
            let start = all.len();
            for i in frontier.clone() {
                for (ri, rule) in self.lexical_rules.iter().enumerate() {
                    if let Ok(sign) = self.apply_lexical_rule(&all[i].sign, rule) {
                        let mut rules = all[i].rules.clone();
                        rules.push(ri);
                        let phon = self.phon(&sign).unwrap_or_default().to_string();
                        all.push(LexItem {
                            base_id: all[i].base_id.clone(),
                            rules,
                            phon,
                            sign,
                            weight: all[i].weight + rule.weight,
                        });
                    }
                }
            }
            if all.len() == start {
                break;
            }
            frontier = start..all.len();
        }
        all
    }

    pub fn entry_item(&self, e: &LexEntry) -> LexItem {
        LexItem {
            base_id: e.id.clone(),
            rules: Vec::new(),
            phon: e.orth.clone(),
            sign: e.sign.clone(),
            weight: e.weight,
        }
    }

    fn full_forms(&self) -> &FullForms {
        self.full_forms.get_or_init(|| {
            let mut ff = FullForms::default();
            for e in &self.lexicon {
                for item in self.closure(self.entry_item(e), CLOSURE_DEPTH) {
                    if self.is_inflected(&item.sign) {
                        ff.by_phon.entry(item.phon.clone()).or_default().push(ff.items.len());
                        ff.items.push(item);
                    }
                }
            }
            ff
        })
    }

    /// Inflected forms known to the grammar, with their signs.
    pub fn lexical_items(&self, surface: &str) -> Vec<&LexItem> {
        let ff = self.full_forms();
        ff.by_phon
            .get(surface)
            .into_iter()
            .flatten()
            .map(|&i| &ff.items[i])
            .collect()
    }

    /// Every surface string the lexicon and its rules can produce.
    pub fn surface_forms(&self) -> impl Iterator<Item = &str> {
        self.full_forms().by_phon.keys().map(|s| s.as_str())
    }

    /// Name of the first root condition the sign satisfies.
    pub fn root_match(&self, sign: &FeatureStructure) -> Option<&str> {
        self.roots
            .iter()
            .find(|r| crate::tfs::unify(&self.hierarchy, &r.fs, sign).is_ok())
            .map(|r| r.name.as_str())
    }

    /// Name of the given type, for convenience in diagnostics.
    pub fn type_name(&self, t: TypeId) -> &str {
        self.hierarchy.type_name(t)
    }
}

#[cfg(test)]
mod tests;
