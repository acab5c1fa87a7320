//! Lookups over the bundled fragment: stem entries, POS-triggered default
//! entries and the packaged regression items.

use std::fmt;
use std::str::FromStr;

use crate::grammar::{Grammar, LexItem};
use crate::harness::{parse_suite, TestItem};
use crate::tfs::{with_atom, FeatureStructure};

/// The segmenter's part-of-speech tagset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pos {
    ProperNoun,
    CommonNoun,
    VerbalNoun,
    Verb,
    Adjective,
    Adverb,
    Interjection,
    Particle,
    Ending,
    Auxiliary,
    Numeral,
    Classifier,
    Punctuation,
    Placeholder,
    Unknown,
}

impl Pos {
    pub const ALL: [Pos; 15] = [
        Pos::ProperNoun,
        Pos::CommonNoun,
        Pos::VerbalNoun,
        Pos::Verb,
        Pos::Adjective,
        Pos::Adverb,
        Pos::Interjection,
        Pos::Particle,
        Pos::Ending,
        Pos::Auxiliary,
        Pos::Numeral,
        Pos::Classifier,
        Pos::Punctuation,
        Pos::Placeholder,
        Pos::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::ProperNoun => "proper-noun",
            Pos::CommonNoun => "common-noun",
            Pos::VerbalNoun => "verbal-noun",
            Pos::Verb => "verb",
            Pos::Adjective => "adjective",
            Pos::Adverb => "adverb",
            Pos::Interjection => "interjection",
            Pos::Particle => "particle",
            Pos::Ending => "ending",
            Pos::Auxiliary => "auxiliary",
            Pos::Numeral => "numeral",
            Pos::Classifier => "classifier",
            Pos::Punctuation => "punctuation",
            Pos::Placeholder => "placeholder",
            Pos::Unknown => "unknown",
        }
    }

    /// Default lexical type for open classes.
    pub fn default_lextype(self) -> Option<&'static str> {
        match self {
            Pos::ProperNoun => Some("name-le"),
            Pos::CommonNoun | Pos::Unknown => Some("noun-le"),
            Pos::VerbalNoun => Some("vn-trans-le"),
            Pos::Adverb => Some("adverb-le"),
            Pos::Interjection => Some("interj-le"),
            _ => None,
        }
    }

    /// POS of a grammar lexical type, for tagging known words.
    pub fn of_lextype(lextype: &str) -> Pos {
        let table: &[(&str, Pos)] = &[
            ("name-le", Pos::ProperNoun),
            ("carg-noun-le", Pos::Placeholder),
            ("digits-le", Pos::Placeholder),
            ("vn-", Pos::VerbalNoun),
            ("light-verb-le", Pos::Verb),
            ("aux-le", Pos::Auxiliary),
            ("ending-le", Pos::Ending),
            ("verb-le", Pos::Verb),
            ("trans-le", Pos::Verb),
            ("intrans-le", Pos::Verb),
            ("say-le", Pos::Verb),
            ("adj-le", Pos::Adjective),
            ("adverb-le", Pos::Adverb),
            ("interj-le", Pos::Interjection),
            ("word-le", Pos::Numeral),
            ("cl-le", Pos::Classifier),
            ("quote-le", Pos::Punctuation),
            ("ques-le", Pos::Punctuation),
            ("label-le", Pos::Punctuation),
            ("noun-le", Pos::CommonNoun),
            ("pron-le", Pos::CommonNoun),
        ];
        table
            .iter()
            .find(|(k, _)| lextype.starts_with(k) || lextype.ends_with(k))
            .map(|&(_, p)| p)
            .unwrap_or(Pos::Particle)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pos::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown POS tag `{s}`"))
    }
}

/// Stem entries with this exact orthography.
pub fn lookup(g: &Grammar, surface: &str) -> Vec<FeatureStructure> {
    g.entries(surface).map(|e| e.sign.clone()).collect()
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn pred_stem(surface: &str) -> String {
    surface
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

/// A generic sign for an unknown word of an open class, with PHON set.
/// Closed classes get nothing.
pub fn default_entry(g: &Grammar, surface: &str, pos: Pos) -> Option<FeatureStructure> {
    let lextype = pos.default_lextype()?;
    let stem = pred_stem(surface);
    let body = match pos {
        Pos::ProperNoun => format!(
            "{lextype} & [ SYNSEM.LKEYS.KEYREL.CARG {} ]",
            quote(&surface.to_lowercase())
        ),
        Pos::VerbalNoun => format!(
            "{lextype} & [ SYNSEM.LKEYS.KEYREL.PRED {} ]",
            quote(&format!("_{stem}_v_rel"))
        ),
        Pos::Adverb => format!(
            "{lextype} & [ SYNSEM.LKEYS.KEYREL.PRED {} ]",
            quote(&format!("_{stem}_a_rel"))
        ),
        Pos::Interjection => {
            format!(
                "{lextype} & [ SYNSEM.LKEYS.KEYREL.PRED {} ]",
                quote(&format!("_{stem}_interj_rel"))
            )
        }
        _ => format!(
            "{lextype} & [ SYNSEM.LKEYS.KEYREL.PRED {} ]",
            quote(&format!("_{stem}_n_rel"))
        ),
    };
    let fs = g.hierarchy.fs(&body).ok()?;
    with_atom(&g.hierarchy, &fs, &g.paths.phon, surface).ok()
}

/// Default entry plus its inflected lexical-rule closure, ready for the chart.
pub fn default_items(g: &Grammar, surface: &str, pos: Pos) -> Vec<LexItem> {
    let Some(sign) = default_entry(g, surface, pos) else {
        return Vec::new();
    };
    let base = LexItem {
        base_id: format!("{surface}@{}", pos.default_lextype().unwrap_or_default()),
        rules: Vec::new(),
        phon: surface.to_string(),
        sign,
        weight: 0,
    };
    g.closure(base, crate::grammar::CLOSURE_DEPTH)
        .into_iter()
        .filter(|i| g.is_inflected(&i.sign) && i.phon == surface)
        .collect()
}

const REGRESSION: &str = include_str!("../grammar/regression.tsv");

/// The fragment's packaged regression suite.
pub fn fragment_regression_items() -> Vec<TestItem> {
    parse_suite(REGRESSION).expect("bundled regression suite is well formed")
}
