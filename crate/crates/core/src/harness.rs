//! Test suites, batch profiles and profile comparison.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::time::Duration;

use rayon::prelude::*;
use thiserror::Error;

use crate::grammar::Grammar;
use crate::parser::{parse_text, Origin, ParseOptions, ParseStats};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestItem {
    pub id: String,
    pub input: String,
    pub grammatical: bool,
    /// Expected number of readings, `-1` when unknown.
    pub expected: i64,
    pub phenomenon: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuiteError {
    #[error("line {line}: expected 5 tab-separated columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: flag must be `g` or `*`, found `{flag}`")]
    Flag { line: usize, flag: String },
    #[error("line {line}: bad reading count `{value}`")]
    Count { line: usize, value: String },
    #[error("line {line}: duplicate item id `{id}`")]
    Duplicate { line: usize, id: String },
    #[error("profiles cover different items: {0}")]
    Mismatch(String),
    #[error("profile line {line}: {msg}")]
    Profile { line: usize, msg: String },
}

/// Parse a suite: `id, input, flag (g|*), expected readings, phenomenon`,
/// tab-separated. Blank lines and lines starting with `#` are skipped.
pub fn parse_suite(text: &str) -> Result<Vec<TestItem>, SuiteError> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 5 {
            return Err(SuiteError::Columns {
                line,
                found: cols.len(),
            });
        }
        let grammatical = match cols[2] {
            "g" => true,
            "*" => false,
            f => {
                return Err(SuiteError::Flag {
                    line,
                    flag: f.to_string(),
                })
            }
        };
        let expected = cols[3].trim().parse().map_err(|_| SuiteError::Count {
            line,
            value: cols[3].to_string(),
        })?;
        let id = cols[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(SuiteError::Duplicate { line, id });
        }
        items.push(TestItem {
            id,
            input: cols[1].to_string(),
            grammatical,
            expected,
            phenomenon: cols[4].to_string(),
        });
    }
    Ok(items)
}

/// One parsed suite item.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemResult {
    pub item: TestItem,
    pub readings: usize,
    pub lexical: usize,
    pub stats: ParseStats,
    pub error: Option<String>,
}

impl ItemResult {
    /// Counts toward coverage: a positive item with at least one reading,
    /// and a known expected count of at least one.
    pub fn covered(&self) -> bool {
        self.item.grammatical && self.readings >= 1 && (self.item.expected < 0 || self.item.expected >= 1)
    }
}

/// Suite-level averages; `None` where the average is undefined.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Aggregates {
    pub items: usize,
    pub positive: usize,
    pub etasks: Option<f64>,
    pub filter: Option<f64>,
    pub edges: Option<f64>,
    pub first_ms: Option<f64>,
    pub total_ms: Option<f64>,
    pub space: Option<f64>,
    pub lexical: Option<f64>,
    pub analyses: Option<f64>,
    pub results: usize,
    pub coverage: Option<f64>,
}

pub const COVERAGE_FORMULA: &str =
    "coverage % = 100 * positive items with >= 1 reading (and expected readings unknown or >= 1) / positive items";

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| sum / n as f64)
}

/// Milliseconds, rounded to whole microseconds as written to TSV.
fn ms(d: Duration) -> f64 {
    (d.as_secs_f64() * 1e6).round() / 1000.0
}

impl Aggregates {
    pub fn of(rows: &[ItemResult]) -> Aggregates {
        let ok: Vec<&ItemResult> = rows.iter().filter(|r| r.error.is_none()).collect();
        let total = ok.iter().fold(ParseStats::default(), |a, r| a.merge(&r.stats));
        let tasks = total.etasks + total.filtered;
        let positive = rows.iter().filter(|r| r.item.grammatical).count();
        let covered = rows.iter().filter(|r| r.covered()).count();
        Aggregates {
            items: rows.len(),
            positive,
            etasks: mean(ok.iter().map(|r| r.stats.etasks as f64)),
            filter: (tasks > 0).then(|| 100.0 * total.filtered as f64 / tasks as f64),
            edges: mean(ok.iter().map(|r| r.stats.edges as f64)),
            first_ms: mean(ok.iter().filter(|r| r.readings > 0).map(|r| ms(r.stats.first_time))),
            total_ms: mean(ok.iter().map(|r| ms(r.stats.total_time))),
            space: mean(ok.iter().map(|r| r.stats.space as f64 / 1024.0)),
            lexical: mean(rows.iter().map(|r| r.lexical as f64)),
            analyses: mean(rows.iter().filter(|r| r.readings > 0).map(|r| r.readings as f64)),
            results: rows.iter().map(|r| r.readings).sum(),
            coverage: (positive > 0).then(|| 100.0 * covered as f64 / positive as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Profile {
    pub rows: Vec<ItemResult>,
    pub aggregates: Aggregates,
}

fn run_item(item: &TestItem, g: &Grammar, opts: &ParseOptions) -> ItemResult {
    match parse_text(&item.input, g, opts) {
        Ok(o) => ItemResult {
            item: item.clone(),
            readings: o.forest.roots.len(),
            lexical: o
                .forest
                .edges
                .iter()
                .filter(|e| matches!(e.origin, Origin::Lexical { .. }))
                .count(),
            stats: o.stats,
            error: None,
        },
        Err(e) => ItemResult {
            item: item.clone(),
            readings: 0,
            lexical: 0,
            stats: ParseStats {
                items: 1,
                ..ParseStats::default()
            },
            error: Some(e.to_string()),
        },
    }
}

/// Parse every item in parallel; rows stay in suite order.
pub fn run_profile(suite: &[TestItem], g: &Grammar, opts: &ParseOptions) -> Profile {
    let rows: Vec<ItemResult> = suite.par_iter().map(|i| run_item(i, g, opts)).collect();
    Profile {
        aggregates: Aggregates::of(&rows),
        rows,
    }
}

fn fmt_opt(x: Option<f64>, prec: usize) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.prec$}"))
}

pub const TSV_COLUMNS: [&str; 14] = [
    "id",
    "input",
    "flag",
    "expected",
    "phenomenon",
    "readings",
    "lexical",
    "etasks",
    "filtered",
    "edges",
    "space",
    "first_ms",
    "total_ms",
    "error",
];

/// Columns that vary from run to run.
pub const TIMING_COLUMNS: [&str; 2] = ["first_ms", "total_ms"];

const AGG_COLUMNS: [&str; 12] = [
    "items",
    "positive",
    "etasks",
    "filter%",
    "edges",
    "first",
    "total",
    "space",
    "lexical",
    "analyses",
    "results",
    "coverage%",
];

impl Aggregates {
    fn cells(&self) -> Vec<String> {
        vec![
            self.items.to_string(),
            self.positive.to_string(),
            fmt_opt(self.etasks, 2),
            fmt_opt(self.filter, 1),
            fmt_opt(self.edges, 2),
            fmt_opt(self.first_ms, 2),
            fmt_opt(self.total_ms, 2),
            fmt_opt(self.space, 1),
            fmt_opt(self.lexical, 2),
            fmt_opt(self.analyses, 2),
            self.results.to_string(),
            fmt_opt(self.coverage, 1),
        ]
    }
}

impl Profile {
    /// Machine-readable form: comment header, one row per item, then the
    /// aggregate row prefixed with `@all`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {COVERAGE_FORMULA}");
        let _ = writeln!(s, "{}", TSV_COLUMNS.join("\t"));
        for r in &self.rows {
            let cells = [
                r.item.id.clone(),
                r.item.input.clone(),
                if r.item.grammatical { "g" } else { "*" }.to_string(),
                r.item.expected.to_string(),
                r.item.phenomenon.clone(),
                r.readings.to_string(),
                r.lexical.to_string(),
                r.stats.etasks.to_string(),
                r.stats.filtered.to_string(),
                r.stats.edges.to_string(),
                r.stats.space.to_string(),
                format!("{:.3}", ms(r.stats.first_time)),
                format!("{:.3}", ms(r.stats.total_time)),
                r.error.clone().unwrap_or_default(),
            ];
            let _ = writeln!(s, "{}", cells.join("\t"));
        }
        let _ = writeln!(s, "# {}", AGG_COLUMNS.join("\t"));
        let _ = writeln!(s, "@all\t{}", self.aggregates.cells().join("\t"));
        s
    }

    /// Same TSV with the timing columns and timing aggregates blanked.
    pub fn to_tsv_untimed(&self) -> String {
        let mut p = self.clone();
        for r in &mut p.rows {
            r.stats.first_time = Duration::ZERO;
            r.stats.total_time = Duration::ZERO;
        }
        p.aggregates.first_ms = None;
        p.aggregates.total_ms = None;
        p.to_tsv()
    }

    /// Aligned table for reading.
    pub fn to_table(&self) -> String {
        let header = [
            "id", "flag", "readings", "lexical", "etasks", "filter%", "edges", "first ms", "total ms", "space kb",
        ];
        let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            let tasks = r.stats.etasks + r.stats.filtered;
            rows.push(vec![
                r.item.id.clone(),
                if r.item.grammatical { "g" } else { "*" }.to_string(),
                match &r.error {
                    Some(_) => "error".to_string(),
                    None => r.readings.to_string(),
                },
                r.lexical.to_string(),
                r.stats.etasks.to_string(),
                fmt_opt((tasks > 0).then(|| 100.0 * r.stats.filtered as f64 / tasks as f64), 1),
                r.stats.edges.to_string(),
                format!("{:.2}", ms(r.stats.first_time)),
                format!("{:.2}", ms(r.stats.total_time)),
                format!("{:.1}", r.stats.space as f64 / 1024.0),
            ]);
        }
        let agg_header = [
            "items #",
            "positive #",
            "etasks ∅",
            "filter %",
            "edges ∅",
            "first ∅",
            "total ∅",
            "space ∅",
            "lexical items ∅",
            "parser analyses ∅",
            "total results",
            "overall coverage %",
        ];
        let mut out = align(&rows);
        out.push('\n');
        out.push_str(&align(&[
            agg_header.iter().map(|s| s.to_string()).collect(),
            self.aggregates.cells(),
        ]));
        let _ = writeln!(out, "\n{COVERAGE_FORMULA}");
        out
    }

    /// Read a profile written by [`Profile::to_tsv`].
    pub fn from_tsv(text: &str) -> Result<Profile, SuiteError> {
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: &str| SuiteError::Profile {
                line: line_no,
                msg: msg.to_string(),
            };
            if line.starts_with('#') || line.starts_with("@all") || line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                if line.split('\t').collect::<Vec<_>>() != TSV_COLUMNS {
                    return Err(err("missing column header"));
                }
                header_seen = true;
                continue;
            }
            let c: Vec<&str> = line.split('\t').collect();
            if c.len() != TSV_COLUMNS.len() {
                return Err(err("wrong number of columns"));
            }
            let n = |k: usize| c[k].parse::<usize>().map_err(|_| err("bad number"));
            let t = |k: usize| {
                c[k].parse::<f64>()
                    .map(|v| Duration::from_secs_f64(v / 1000.0))
                    .map_err(|_| err("bad time"))
            };
            let readings = n(5)?;
            rows.push(ItemResult {
                item: TestItem {
                    id: c[0].to_string(),
                    input: c[1].to_string(),
                    grammatical: c[2] == "g",
                    expected: c[3].parse().map_err(|_| err("bad expected count"))?,
                    phenomenon: c[4].to_string(),
                },
                readings,
                lexical: n(6)?,
                stats: ParseStats {
                    items: 1,
                    etasks: n(7)?,
                    filtered: n(8)?,
                    adjacency: 0,
                    edges: n(9)?,
                    readings,
                    first_time: t(11)?,
                    total_time: t(12)?,
                    space: n(10)?,
                },
                error: (!c[13].is_empty()).then(|| c[13].to_string()),
            });
        }
        Ok(Profile {
            aggregates: Aggregates::of(&rows),
            rows,
        })
    }
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let width: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:>w$}", w = width[c]))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Flag {
    CoverageLost(String),
    CoverageGained(String),
    ReadingsChanged { id: String, old: usize, new: usize },
    Missing(String),
}

impl std::fmt::Display for Flag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Flag::CoverageLost(id) => write!(f, "coverage lost: {id}"),
            Flag::CoverageGained(id) => write!(f, "coverage gained: {id}"),
            Flag::ReadingsChanged { id, old, new } => write!(f, "readings changed: {id} {old} -> {new}"),
            Flag::Missing(id) => write!(f, "missing from new profile: {id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemDelta {
    pub id: String,
    pub readings: (usize, usize),
    pub edges: (usize, usize),
    pub etasks: (usize, usize),
    pub total_ms: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub deltas: Vec<ItemDelta>,
    pub flags: Vec<Flag>,
    /// Aggregate columns whose values differ, old and new.
    pub aggregates: Vec<(String, String, String)>,
}

impl Report {
    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty() && self.flags.is_empty() && self.aggregates.is_empty()
    }
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for fl in &self.flags {
            writeln!(f, "{fl}")?;
        }
        for d in &self.deltas {
            writeln!(
                f,
                "{}\treadings {} -> {}\tedges {} -> {}\tetasks {} -> {}\ttotal {:.2} -> {:.2} ms",
                d.id,
                d.readings.0,
                d.readings.1,
                d.edges.0,
                d.edges.1,
                d.etasks.0,
                d.etasks.1,
                d.total_ms.0,
                d.total_ms.1
            )?;
        }
        for (k, a, b) in &self.aggregates {
            writeln!(f, "{k}\t{a} -> {b}")?;
        }
        Ok(())
    }
}

/// Per-item and aggregate differences between two runs of one suite.
/// Timing alone never produces a delta.
pub fn compare_profiles(old: &Profile, new: &Profile) -> Result<Report, SuiteError> {
    let new_rows: BTreeMap<&str, &ItemResult> = new.rows.iter().map(|r| (r.item.id.as_str(), r)).collect();
    let old_ids: HashSet<&str> = old.rows.iter().map(|r| r.item.id.as_str()).collect();
    if let Some(extra) = new.rows.iter().find(|r| !old_ids.contains(r.item.id.as_str())) {
        return Err(SuiteError::Mismatch(format!(
            "`{}` is not in the old profile",
            extra.item.id
        )));
    }
    let mut rep = Report::default();
    for o in &old.rows {
        let Some(n) = new_rows.get(o.item.id.as_str()) else {
            rep.flags.push(if o.covered() {
                Flag::CoverageLost(o.item.id.clone())
            } else {
                Flag::Missing(o.item.id.clone())
            });
            continue;
        };
        if o.item.input != n.item.input {
            return Err(SuiteError::Mismatch(format!("`{}` has a different input", o.item.id)));
        }
        match (o.covered(), n.covered()) {
            (true, false) => rep.flags.push(Flag::CoverageLost(o.item.id.clone())),
            (false, true) => rep.flags.push(Flag::CoverageGained(o.item.id.clone())),
            _ => {}
        }
        if o.readings != n.readings {
            rep.flags.push(Flag::ReadingsChanged {
                id: o.item.id.clone(),
                old: o.readings,
                new: n.readings,
            });
        }
        if o.readings != n.readings || o.stats.edges != n.stats.edges || o.stats.etasks != n.stats.etasks {
            rep.deltas.push(ItemDelta {
                id: o.item.id.clone(),
                readings: (o.readings, n.readings),
                edges: (o.stats.edges, n.stats.edges),
                etasks: (o.stats.etasks, n.stats.etasks),
                total_ms: (ms(o.stats.total_time), ms(n.stats.total_time)),
            });
        }
    }
    let (a, b) = (old.aggregates.cells(), new.aggregates.cells());
    for (i, k) in AGG_COLUMNS.iter().enumerate() {
        if !matches!(*k, "first" | "total") && a[i] != b[i] {
            rep.aggregates.push((k.to_string(), a[i].clone(), b[i].clone()));
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_suite_rows() {
        let s = "# comment\n1\tneko ga kita\tg\t-1\tbasic\n2\tjuu neko\t*\t0\tnum\n";
        let items = parse_suite(s).unwrap();
        assert_eq!(items.len(), 2);
        assert!(items[0].grammatical);
        assert_eq!(items[1].expected, 0);
    }

    #[test]
    fn rejects_bad_rows() {
        assert_eq!(
            parse_suite("1\ta\tx\t0\tp"),
            Err(SuiteError::Flag {
                line: 1,
                flag: "x".into()
            })
        );
        assert_eq!(parse_suite("1\ta"), Err(SuiteError::Columns { line: 1, found: 2 }));
        assert!(matches!(
            parse_suite("1\ta\tg\t0\tp\n1\tb\tg\t0\tp"),
            Err(SuiteError::Duplicate { .. })
        ));
    }

    fn item(id: &str, input: &str, g: bool) -> TestItem {
        TestItem {
            id: id.into(),
            input: input.into(),
            grammatical: g,
            expected: -1,
            phenomenon: "t".into(),
        }
    }

    fn grammar() -> &'static Grammar {
        Grammar::bundled()
    }

    #[test]
    fn empty_suite_has_undefined_averages() {
        let p = run_profile(&[], grammar(), &ParseOptions::default());
        assert_eq!(p.aggregates.items, 0);
        assert_eq!(p.aggregates.etasks, None);
        assert_eq!(p.aggregates.coverage, None);
        assert!(p.to_tsv().contains("@all\t0\t0\t-"));
    }

    #[test]
    fn unparseable_item_has_zero_coverage() {
        let p = run_profile(&[item("x", "ga ga", true)], grammar(), &ParseOptions::default());
        assert_eq!(p.aggregates.items, 1);
        assert_eq!(p.aggregates.coverage, Some(0.0));
    }

    #[test]
    fn errors_are_recorded_not_fatal() {
        let p = run_profile(
            &[item("e", "", true), item("n", "neko ga ki-ta", true)],
            grammar(),
            &ParseOptions::default(),
        );
        assert!(p.rows[0].error.is_some());
        assert_eq!(p.aggregates.coverage, Some(50.0));
    }

    #[test]
    fn tsv_round_trips_and_aggregates_recompute() {
        let suite = [
            item("a", "neko ga ki-ta", true),
            item("b", "juu neko", false),
            item("c", "tanaka", true),
        ];
        let p = run_profile(&suite, grammar(), &ParseOptions::default());
        let tsv = p.to_tsv();
        let back = Profile::from_tsv(&tsv).unwrap();
        assert_eq!(back.to_tsv(), tsv);
        let emitted = tsv.lines().find(|l| l.starts_with("@all")).unwrap();
        let recomputed = Aggregates::of(&back.rows).cells().join("\t");
        assert_eq!(emitted, format!("@all\t{recomputed}"));
        assert!(p.to_table().contains("overall coverage %"));
    }

    #[test]
    fn comparing_a_profile_with_itself_is_empty() {
        let p = run_profile(&[item("a", "neko ga ki-ta", true)], grammar(), &ParseOptions::default());
        assert!(compare_profiles(&p, &p).unwrap().is_empty());
    }

    #[test]
    fn missing_covered_item_is_flagged() {
        let p = run_profile(
            &[item("a", "neko ga ki-ta", true), item("b", "tanaka", true)],
            grammar(),
            &ParseOptions::default(),
        );
        let mut q = p.clone();
        q.rows.pop();
        q.aggregates = Aggregates::of(&q.rows);
        let rep = compare_profiles(&p, &q).unwrap();
        assert_eq!(rep.flags, vec![Flag::CoverageLost("b".into())]);
        assert!(matches!(compare_profiles(&q, &p), Err(SuiteError::Mismatch(_))));
    }

    #[test]
    fn quick_check_changes_stats_not_readings() {
        let suite = [
            item("a", "neko ga hon wo yon-da", true),
            item("b", "sensei wa watashi ni hon wo katte kure-ta", true),
        ];
        let on = run_profile(&suite, grammar(), &ParseOptions::default());
        let off = run_profile(
            &suite,
            grammar(),
            &ParseOptions {
                quick_check: false,
                ..ParseOptions::default()
            },
        );
        let rep = compare_profiles(&off, &on).unwrap();
        assert!(rep.flags.is_empty());
        assert!(rep
            .deltas
            .iter()
            .all(|d| d.readings.0 == d.readings.1 && d.etasks.1 < d.etasks.0));
        assert!(!rep.deltas.is_empty());
    }
}
