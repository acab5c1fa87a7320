//! Front end: placeholder substitution, dictionary segmentation into a token
//! lattice, and inflection-label mapping.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::fragment::Pos;
use crate::grammar::Grammar;

const PLACEHOLDER_TABLE: &str = include_str!("../grammar/placeholders.tsv");
const INFLECTION_TABLE: &str = include_str!("../grammar/inflections.tsv");
const POS_TABLE: &str = include_str!("../grammar/pos.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlaceholderKind {
    Number,
    Date,
    Address,
    Email,
    Url,
    Phone,
    Currency,
}

impl PlaceholderKind {
    pub const ALL: [PlaceholderKind; 7] = [
        PlaceholderKind::Number,
        PlaceholderKind::Date,
        PlaceholderKind::Address,
        PlaceholderKind::Email,
        PlaceholderKind::Url,
        PlaceholderKind::Phone,
        PlaceholderKind::Currency,
    ];

    pub fn token(self) -> &'static str {
        match self {
            PlaceholderKind::Number => "⟦NUM⟧",
            PlaceholderKind::Date => "⟦DATE⟧",
            PlaceholderKind::Address => "⟦ADDR⟧",
            PlaceholderKind::Email => "⟦EMAIL⟧",
            PlaceholderKind::Url => "⟦URL⟧",
            PlaceholderKind::Phone => "⟦PHONE⟧",
            PlaceholderKind::Currency => "⟦CUR⟧",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "number" => PlaceholderKind::Number,
            "date" => PlaceholderKind::Date,
            "address" => PlaceholderKind::Address,
            "email" => PlaceholderKind::Email,
            "url" => PlaceholderKind::Url,
            "phone" => PlaceholderKind::Phone,
            "currency" => PlaceholderKind::Currency,
            _ => return None,
        })
    }

    pub fn from_token(t: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.token() == t)
    }

    fn normalize(self, s: &str) -> String {
        match self {
            PlaceholderKind::Number => s.replace(',', ""),
            PlaceholderKind::Phone => s.chars().filter(char::is_ascii_digit).collect(),
            PlaceholderKind::Currency => s.chars().filter(|c| !c.is_whitespace() && *c != ',').collect(),
            PlaceholderKind::Date => {
                let parts: Vec<&str> = s.split(['/', '-']).collect();
                match parts.as_slice() {
                    [y, m, d] => format!("{y}-{:0>2}-{:0>2}", m, d),
                    [m, d] => format!("XXXX-{:0>2}-{:0>2}", m, d),
                    _ => s.to_string(),
                }
            }
            PlaceholderKind::Email | PlaceholderKind::Url => s.to_lowercase(),
            PlaceholderKind::Address => s.to_string(),
        }
    }
}

impl fmt::Display for PlaceholderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(format!("{self:?}").to_lowercase().as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceholderSpan {
    pub kind: PlaceholderKind,
    pub original: String,
    pub placeholder_token: String,
    pub payload: String,
    /// Byte offset of the placeholder in the preprocessed text.
    pub start: usize,
}

fn patterns() -> &'static [(PlaceholderKind, Regex)] {
    static P: OnceLock<Vec<(PlaceholderKind, Regex)>> = OnceLock::new();
    P.get_or_init(|| {
        PLACEHOLDER_TABLE
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| {
                let (kind, pat) = l.split_once('\t').expect("kind<TAB>pattern");
                let kind = PlaceholderKind::from_name(kind).expect("known placeholder kind");
                (
                    kind,
                    Regex::new(&format!("^(?:{pat})")).expect("valid placeholder pattern"),
                )
            })
            .collect()
    })
}

/// Replace recognised expressions by placeholder tokens, leftmost-longest.
/// Matches never start inside a word.
pub fn preprocess(text: &str) -> (String, Vec<PlaceholderSpan>) {
    let mut out = String::with_capacity(text.len());
    let mut spans = Vec::new();
    let mut pos = 0;
    let mut prev: Option<char> = None;
    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().expect("non-empty");
        let at_boundary = !prev.is_some_and(|p| p.is_alphanumeric());
        let best = if at_boundary {
            patterns()
                .iter()
                .filter_map(|(k, re)| re.find(rest).map(|m| (*k, m.end())))
                .fold(None, |best: Option<(PlaceholderKind, usize)>, (k, len)| match best {
                    Some((_, b)) if b >= len => best,
                    _ => Some((k, len)),
                })
        } else {
            None
        };
        match best {
            Some((kind, len)) if len > 0 => {
                let original = &rest[..len];
                spans.push(PlaceholderSpan {
                    kind,
                    original: original.to_string(),
                    placeholder_token: kind.token().to_string(),
                    payload: kind.normalize(original),
                    start: out.len(),
                });
                out.push_str(kind.token());
                prev = original.chars().last();
                pos += len;
            }
            _ => {
                out.push(c);
                prev = Some(c);
                pos += c.len_utf8();
            }
        }
    }
    (out, spans)
}

/// Undo [`preprocess`].
pub fn restore(text: &str, spans: &[PlaceholderSpan]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for s in spans {
        out.push_str(&text[pos..s.start]);
        out.push_str(&s.original);
        pos = s.start + s.placeholder_token.len();
    }
    out.push_str(&text[pos..]);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    /// Character offsets into the preprocessed text.
    pub span: (usize, usize),
    pub pos: Pos,
    pub lemma: String,
    pub inflection_type: Option<String>,
    /// Normalised value for placeholder tokens.
    pub payload: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub token: Token,
}

/// Token lattice; node 0 is the start and `nodes - 1` the end.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lattice {
    pub nodes: usize,
    pub arcs: Vec<Arc>,
}

impl Lattice {
    pub fn end(&self) -> usize {
        self.nodes.saturating_sub(1)
    }

    /// Every node lies on a path from start to end.
    pub fn is_connected(&self) -> bool {
        if self.nodes == 0 {
            return true;
        }
        let mut fwd = vec![false; self.nodes];
        let mut bwd = vec![false; self.nodes];
        fwd[0] = true;
        bwd[self.end()] = true;
        let mut arcs: Vec<&Arc> = self.arcs.iter().collect();
        arcs.sort_by_key(|a| a.from);
        for a in &arcs {
            if fwd[a.from] {
                fwd[a.to] = true;
            }
        }
        for a in arcs.iter().rev() {
            if bwd[a.to] {
                bwd[a.from] = true;
            }
        }
        fwd.iter().zip(&bwd).all(|(f, b)| *f && *b)
    }

    /// All token sequences from start to end.
    pub fn paths(&self) -> Vec<Vec<&Token>> {
        fn go<'a>(l: &'a Lattice, n: usize, cur: &mut Vec<&'a Token>, out: &mut Vec<Vec<&'a Token>>) {
            if n == l.end() {
                out.push(cur.clone());
                return;
            }
            for a in l.arcs.iter().filter(|a| a.from == n) {
                cur.push(&a.token);
                go(l, a.to, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if self.nodes > 0 {
            go(self, 0, &mut Vec::new(), &mut out);
        }
        out
    }

    /// A single-path lattice over pre-split tokens.
    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        let nodes = tokens.len() + 1;
        let arcs = tokens
            .into_iter()
            .enumerate()
            .map(|(i, token)| Arc {
                from: i,
                to: i + 1,
                token,
            })
            .collect();
        Lattice { nodes, arcs }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no arc covers characters {0}..{1}")]
pub struct SegmentationGapError(pub usize, pub usize);

#[derive(Debug, Clone)]
struct DictWord {
    pos: Pos,
    lemma: String,
    inflection: Option<String>,
}

fn pos_dictionary() -> &'static HashMap<String, DictWord> {
    static D: OnceLock<HashMap<String, DictWord>> = OnceLock::new();
    D.get_or_init(|| {
        POS_TABLE
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| {
                let c: Vec<&str> = l.split('\t').collect();
                let pos = c[1].parse().expect("known POS tag");
                let inflection = c.get(3).filter(|s| !s.is_empty()).map(|s| s.to_string());
                (
                    c[0].to_string(),
                    DictWord {
                        pos,
                        lemma: c[2].to_string(),
                        inflection,
                    },
                )
            })
            .collect()
    })
}

/// Words the segmenter knows: grammar surface forms plus its own dictionary.
struct Dictionary<'g> {
    grammar: &'g Grammar,
    forms: HashSet<&'g str>,
    max_chars: usize,
}

impl<'g> Dictionary<'g> {
    fn new(grammar: &'g Grammar) -> Self {
        let mut forms: HashSet<&str> = grammar.surface_forms().collect();
        forms.extend(pos_dictionary().keys().map(|s| s.as_str()));
        let max_chars = forms.iter().map(|f| f.chars().count()).max().unwrap_or(1);
        Dictionary {
            grammar,
            forms,
            max_chars,
        }
    }

    fn token(&self, surface: &str, lower: &str, span: (usize, usize)) -> Token {
        let dict = pos_dictionary().get(lower);
        let items = self.grammar.lexical_items(lower);
        let (pos, lemma) = match (items.first(), dict) {
            (Some(item), _) => {
                let e = self.grammar.entry(&item.base_id).expect("item from lexicon");
                (Pos::of_lextype(&e.lextype), e.orth.clone())
            }
            (None, Some(d)) => (d.pos, d.lemma.clone()),
            (None, None) => (Pos::Unknown, lower.to_string()),
        };
        Token {
            surface: surface.to_string(),
            span,
            pos,
            lemma,
            inflection_type: dict.and_then(|d| d.inflection.clone()),
            payload: None,
        }
    }
}

fn unknown_pos(surface: &str) -> Pos {
    if surface.chars().next().is_some_and(char::is_uppercase) {
        Pos::ProperNoun
    } else {
        Pos::CommonNoun
    }
}

/// Split a preprocessed string into a token lattice. Whitespace and `-` are
/// hard boundaries; inside a chunk every dictionary segmentation is kept.
pub fn segment(text: &str, grammar: &Grammar) -> Lattice {
    segment_with(text, grammar, &[])
}

/// [`segment`], attaching placeholder payloads to their tokens.
pub fn segment_with(text: &str, grammar: &Grammar, spans: &[PlaceholderSpan]) -> Lattice {
    let dict = Dictionary::new(grammar);
    let payloads: HashMap<usize, &PlaceholderSpan> = spans.iter().map(|s| (s.start, s)).collect();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut lattice = Lattice {
        nodes: 1,
        arcs: Vec::new(),
    };
    let mut i = 0;
    while i < chars.len() {
        if chars[i].1.is_whitespace() || chars[i].1 == '-' {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].1.is_whitespace() && chars[i].1 != '-' {
            i += 1;
        }
        segment_chunk(text, &chars, start, i, &dict, &payloads, &mut lattice);
    }
    if lattice.arcs.is_empty() {
        lattice.nodes = 0;
    }
    lattice
}

fn segment_chunk(
    text: &str,
    chars: &[(usize, char)],
    start: usize,
    end: usize,
    dict: &Dictionary<'_>,
    payloads: &HashMap<usize, &PlaceholderSpan>,
    lattice: &mut Lattice,
) {
    let byte = |c: usize| if c < chars.len() { chars[c].0 } else { text.len() };
    let len = end - start;
    let mut arcs: Vec<(usize, usize, Token)> = Vec::new();
    for a in 0..len {
        for b in a + 1..=len.min(a + dict.max_chars) {
            let surface = &text[byte(start + a)..byte(start + b)];
            let lower = if dict.forms.contains(surface) {
                surface.to_string()
            } else {
                surface.to_lowercase()
            };
            if dict.forms.contains(lower.as_str()) {
                let mut tok = dict.token(surface, &lower, (start + a, start + b));
                if let Some(p) = payloads.get(&byte(start + a)) {
                    if p.placeholder_token == surface {
                        tok.pos = Pos::Placeholder;
                        tok.payload = Some(p.payload.clone());
                    }
                }
                arcs.push((a, b, tok));
            }
        }
    }
    let coverable_from = |arcs: &[(usize, usize, Token)]| {
        let mut ok = vec![false; len + 1];
        ok[len] = true;
        for k in (0..len).rev() {
            ok[k] = arcs.iter().any(|(a, b, _)| *a == k && ok[*b]);
        }
        ok
    };
    if !coverable_from(&arcs)[0] {
        // shortest unknown prefix whose remainder is clitics the dictionary covers
        let clitics: Vec<(usize, usize, Token)> = arcs
            .iter()
            .filter(|(_, _, t)| matches!(t.pos, Pos::Particle | Pos::Punctuation | Pos::Placeholder))
            .cloned()
            .collect();
        let ok = coverable_from(&clitics);
        let k = (1..=len).find(|&k| ok[k]).expect("the empty suffix is coverable");
        let surface = &text[byte(start)..byte(start + k)];
        let lower = surface.to_lowercase();
        let mut tok = dict.token(surface, &lower, (start, start + k));
        tok.pos = unknown_pos(surface);
        arcs.retain(|(a, _, _)| *a >= k);
        arcs.push((0, k, tok));
    }
    let bwd = coverable_from(&arcs);
    let mut fwd = vec![false; len + 1];
    fwd[0] = true;
    for k in 0..len {
        if fwd[k] {
            for (a, b, _) in &arcs {
                if *a == k {
                    fwd[*b] = true;
                }
            }
        }
    }
    arcs.retain(|(a, b, _)| fwd[*a] && bwd[*b]);
    let positions: BTreeSet<usize> = arcs.iter().flat_map(|(a, b, _)| [*a, *b]).collect();
    let base = lattice.nodes - 1;
    let ids: BTreeMap<usize, usize> = positions.iter().enumerate().map(|(i, &p)| (p, base + i)).collect();
    arcs.sort_by_key(|x| (x.0, x.1));
    for (a, b, token) in arcs {
        lattice.arcs.push(Arc {
            from: ids[&a],
            to: ids[&b],
            token,
        });
    }
    lattice.nodes = base + positions.len();
}

/// Check lattice soundness against the text it was built from.
pub fn check_lattice(text: &str, lattice: &Lattice) -> Result<(), SegmentationGapError> {
    let chars: Vec<char> = text.chars().collect();
    for a in &lattice.arcs {
        let s: String = chars[a.token.span.0..a.token.span.1].iter().collect();
        if s != a.token.surface {
            return Err(SegmentationGapError(a.token.span.0, a.token.span.1));
        }
    }
    if !lattice.is_connected() {
        return Err(SegmentationGapError(0, chars.len()));
    }
    Ok(())
}

fn inflection_table() -> &'static HashMap<String, String> {
    static T: OnceLock<HashMap<String, String>> = OnceLock::new();
    T.get_or_init(|| {
        INFLECTION_TABLE
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once('\t'))
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    })
}

/// Map a segmenter inflection label to the grammar's binding type.
/// Unknown labels yield `None` and a diagnostic.
pub fn map_inflection(token: &Token) -> (Option<String>, Option<String>) {
    let Some(label) = &token.inflection_type else {
        return (None, None);
    };
    match inflection_table().get(label) {
        Some(t) => (Some(t.clone()), None),
        None => (
            None,
            Some(format!("unknown inflection label `{label}` on `{}`", token.surface)),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g() -> &'static Grammar {
        Grammar::bundled()
    }

    fn surfaces(l: &Lattice) -> Vec<Vec<String>> {
        l.paths()
            .iter()
            .map(|p| p.iter().map(|t| t.surface.clone()).collect())
            .collect()
    }

    #[test]
    fn number_placeholder() {
        let (t, spans) = preprocess("bangou: 1265");
        assert_eq!(t, "bangou: ⟦NUM⟧");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].kind, PlaceholderKind::Number);
        assert_eq!(spans[0].payload, "1265");
    }

    #[test]
    fn url_placeholder() {
        let (t, spans) = preprocess("http://example.jp wo mite");
        assert_eq!(t, "⟦URL⟧ wo mite");
        assert_eq!(spans[0].original, "http://example.jp");
    }

    #[test]
    fn empty_input() {
        assert_eq!(preprocess(""), (String::new(), vec![]));
        assert_eq!(segment("", g()).nodes, 0);
    }

    #[test]
    fn longest_match_wins() {
        let (t, s) = preprocess("03-1234-5678 ni denwa");
        assert_eq!(t, "⟦PHONE⟧ ni denwa");
        assert_eq!(s[0].payload, "0312345678");
        let (t, s) = preprocess("2002/08/24 ni");
        assert_eq!(t, "⟦DATE⟧ ni");
        assert_eq!(s[0].payload, "2002-08-24");
        let (t, _) = preprocess("mail tanaka@example.co.jp");
        assert_eq!(t, "mail ⟦EMAIL⟧");
        let (t, s) = preprocess("¥1,500 desu");
        assert_eq!((t.as_str(), s[0].payload.as_str()), ("⟦CUR⟧ desu", "¥1500"));
    }

    #[test]
    fn no_match_inside_words() {
        assert_eq!(preprocess("abc123").0, "abc123");
    }

    #[test]
    fn spaced_input_is_one_path() {
        let l = segment("keeki wo tabete iru", g());
        assert_eq!(surfaces(&l), vec![vec!["keeki", "wo", "tabe", "te", "i", "ru"]]);
    }

    #[test]
    fn unspaced_input_keeps_all_splits() {
        let l = segment("benkyoushita", g());
        assert!(surfaces(&l).contains(&vec!["benkyou".into(), "shi".into(), "ta".into()]));
        check_lattice("benkyoushita", &l).unwrap();
    }

    #[test]
    fn placeholder_is_one_token() {
        let (t, spans) = preprocess("1265");
        let l = segment_with(&t, g(), &spans);
        assert_eq!(l.arcs.len(), 1);
        assert_eq!(l.arcs[0].token.pos, Pos::Placeholder);
        assert_eq!(l.arcs[0].token.payload.as_deref(), Some("1265"));
    }

    #[test]
    fn unknown_words_get_default_pos() {
        let l = segment("Tanakasan ga", g());
        let p = l.paths();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0][0].pos, Pos::ProperNoun);
        let l = segment("tanaka ga", g());
        assert_eq!(l.paths()[0][0].pos, Pos::ProperNoun);
        let l = segment("kaigi", g());
        assert_eq!(surfaces(&l), vec![vec!["kaigi"]]);
        let l = segment("zzzga", g());
        assert_eq!(surfaces(&l), vec![vec!["zzz", "ga"]]);
    }

    #[test]
    fn punctuation_splits_off() {
        let l = segment("bangou:", g());
        assert_eq!(surfaces(&l), vec![vec!["bangou", ":"]]);
    }

    #[test]
    fn inflection_mapping() {
        let mut t = segment("yon", g()).arcs[0].token.clone();
        assert_eq!(t.inflection_type.as_deref(), Some("godan-nd"));
        assert_eq!(map_inflection(&t), (Some("nd-morph".into()), None));
        t.inflection_type = None;
        assert_eq!(map_inflection(&t), (None, None));
        t.inflection_type = Some("x-form".into());
        let (m, diag) = map_inflection(&t);
        assert!(m.is_none() && diag.unwrap().contains("x-form"));
    }

    proptest! {
        #[test]
        fn placeholders_round_trip(s in "[a-z0-9 :/@.,¥-]{0,30}") {
            let (t, spans) = preprocess(&s);
            prop_assert_eq!(restore(&t, &spans), s);
        }

        #[test]
        fn lattices_are_sound(words in proptest::collection::vec("(neko|ga|tabe|te|ta|zz|q|shi|benkyou|:)", 1..6), spaced in any::<bool>()) {
            let text = words.join(if spaced { " " } else { "" });
            let l = segment(&text, g());
            prop_assert!(check_lattice(&text, &l).is_ok());
            prop_assert_eq!(l, segment(&text, g()));
        }
    }
}
