use std::path::PathBuf;
use std::process::{Command, Output};

fn jdeep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jdeep"))
        .args(args)
        .output()
        .expect("runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("jdeep-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn lint_bundled_grammar() {
    let o = jdeep(&["lint"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok:"));
}

#[test]
fn missing_grammar_dir_is_a_load_error() {
    let o = jdeep(&["--grammar", "/definitely/not/here", "lint"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn broken_grammar_is_a_load_error() {
    let dir = tmp("broken");
    std::fs::create_dir_all(&dir).unwrap();
    let src = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/grammar");
    for f in ["types", "lexicon", "lexrules", "schemata", "roots"] {
        std::fs::copy(format!("{src}/{f}.gs"), dir.join(format!("{f}.gs"))).unwrap();
    }
    std::fs::write(dir.join("lexicon.gs"), "oops := vebr-head & [ ].\n").unwrap();
    let o = jdeep(&["--grammar", dir.to_str().unwrap(), "lint"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("vebr-head"));
}

#[test]
fn malformed_suite_is_a_suite_error() {
    let p = tmp("bad-suite.tsv");
    std::fs::write(&p, "only\ttwo\n").unwrap();
    let o = jdeep(&["batch", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn parse_prints_derivation_and_mrs() {
    let o = jdeep(&["parse", "neko ga ki-ta", "--mrs", "--nbest", "1"]);
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("(hc-subj"), "{out}");
    assert!(out.contains("_kuru_v_rel") && out.contains("CONTEXT:"), "{out}");
}

#[test]
fn batch_then_diff_reports_no_differences() {
    let suite = tmp("suite.tsv");
    std::fs::write(&suite, "a\tneko ga ki-ta\tg\t-1\tbasic\nb\tga ga\t*\t0\tbad\n").unwrap();
    let (p1, p2) = (tmp("p1.tsv"), tmp("p2.tsv"));
    for (p, qc) in [(&p1, "on"), (&p2, "off")] {
        let o = jdeep(&[
            "--qc",
            qc,
            "batch",
            suite.to_str().unwrap(),
            "--profile",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert!(String::from_utf8_lossy(&o.stdout).contains("overall coverage %"));
    }
    let o = jdeep(&["diff", p1.to_str().unwrap(), p1.to_str().unwrap()]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "no differences");
    let o = jdeep(&["diff", p2.to_str().unwrap(), p1.to_str().unwrap()]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success());
    assert!(
        !out.contains("readings changed") && !out.contains("coverage lost"),
        "{out}"
    );
}

/// Blank out timing cells. The `@all` row is one cell wider than its header.
fn untimed(tsv: &str) -> String {
    let mut timing: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for line in tsv.lines() {
        let mut cols: Vec<&str> = line.split('\t').collect();
        let shift = match cols[0] {
            "id" => Some(0),
            "# items" => Some(1),
            _ => None,
        };
        if let Some(shift) = shift {
            timing = cols
                .iter()
                .enumerate()
                .filter(|(_, c)| ["first_ms", "total_ms", "first", "total"].contains(c))
                .map(|(i, _)| i + shift)
                .collect();
        } else if !line.starts_with('#') {
            for &i in &timing {
                if let Some(c) = cols.get_mut(i) {
                    *c = "";
                }
            }
        }
        out.push(cols.join("\t"));
    }
    out.join("\n")
}

#[test]
fn repeated_batch_runs_agree_without_timing() {
    let (p1, p2) = (tmp("r1.tsv"), tmp("r2.tsv"));
    for p in [&p1, &p2] {
        assert!(jdeep(&["batch", "--profile", p.to_str().unwrap()]).status.success());
    }
    let (a, b) = (
        std::fs::read_to_string(&p1).unwrap(),
        std::fs::read_to_string(&p2).unwrap(),
    );
    assert_ne!(untimed(&a), a);
    assert_eq!(untimed(&a), untimed(&b));
}
