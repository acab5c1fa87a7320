mod common;

use common::{brute_force, chart_view, ending_chain_ok, grammar, permutations, ENDINGS};
use jdeep_core::fragment::fragment_regression_items;
use jdeep_core::parser::{parse, parse_text, quick_check, unpack_nbest, Origin, ParseError, ParseOptions, QuickCheck};
use jdeep_core::preproc::{preprocess, segment_with};

fn lattice(text: &str) -> jdeep_core::preproc::Lattice {
    let (t, spans) = preprocess(text);
    segment_with(&t, grammar(), &spans)
}

fn readings(text: &str) -> usize {
    parse_text(text, grammar(), &ParseOptions::default())
        .map(|o| o.forest.roots.len())
        .unwrap_or(0)
}

#[test]
fn chart_matches_brute_force_on_short_items() {
    let g = grammar();
    let mut checked = 0;
    for item in fragment_regression_items() {
        let l = lattice(&item.input);
        if l.paths().iter().map(|p| p.len()).max().unwrap_or(0) > 5 {
            continue;
        }
        let out = parse(&l, g, &ParseOptions::default()).unwrap();
        assert_eq!(chart_view(g, &out.forest), brute_force(g, &l), "{}", item.id);
        checked += 1;
    }
    assert!(checked >= 15, "{checked}");
}

#[test]
fn ending_chains_match_automaton() {
    let mut accepted = 0;
    for seq in permutations(&ENDINGS, 4) {
        let text = format!("tabe-{}", seq.join("-"));
        let ok = readings(&text) > 0;
        assert_eq!(ok, ending_chain_ok(&seq), "{text}");
        accepted += ok as usize;
    }
    assert!(accepted >= 10);
}

#[test]
fn quick_check_keeps_roots() {
    let g = grammar();
    let off = ParseOptions {
        quick_check: false,
        ..ParseOptions::default()
    };
    for item in fragment_regression_items() {
        let a = parse_text(&item.input, g, &ParseOptions::default()).unwrap();
        let b = parse_text(&item.input, g, &off).unwrap();
        let ra: Vec<String> = a.forest.roots.iter().map(|&r| a.forest.derivation(g, r)).collect();
        let rb: Vec<String> = b.forest.roots.iter().map(|&r| b.forest.derivation(g, r)).collect();
        assert_eq!(ra, rb, "{}", item.id);
        assert_eq!(b.stats.filtered, 0);
        assert!(a.stats.etasks <= b.stats.etasks);
    }
}

#[test]
fn nbest_is_deterministic_and_sorted() {
    let g = grammar();
    for text in [
        "sensei wa watashi ni hon wo katte kure-ta",
        "watashi no toukyou no imouto",
        "ginkou kouza bangou",
    ] {
        let a = unpack_nbest(&parse_text(text, g, &ParseOptions::default()).unwrap().forest, g, 10);
        let b = unpack_nbest(&parse_text(text, g, &ParseOptions::default()).unwrap().forest, g, 10);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].score >= w[1].score));
    }
}

#[test]
fn binary_edges_respect_adjacency() {
    let g = grammar();
    for item in fragment_regression_items() {
        let out = parse_text(&item.input, g, &ParseOptions::default()).unwrap();
        for e in &out.forest.edges {
            let Origin::Rule(r) = e.origin else { continue };
            let s = &g.schemata[r];
            if s.arity == 2 {
                let head = &out.forest.edges[e.daughters[s.head]].sign;
                let nonhead = &out.forest.edges[e.daughters[1 - s.head]].sign;
                assert!(
                    g.check_adjacency(s.kind, head, Some(nonhead), s.realized).is_ok(),
                    "{}",
                    item.id
                );
            }
        }
    }
}

#[test]
fn edge_limit_is_an_error() {
    let opts = ParseOptions {
        edge_limit: 5,
        ..ParseOptions::default()
    };
    let r = parse_text("sensei wa watashi ni hon wo katte kure-ta", grammar(), &opts);
    assert!(matches!(r, Err(ParseError::ResourceLimitExceeded(5))));
}

#[test]
fn empty_input_is_an_error() {
    assert!(matches!(
        parse_text("  ", grammar(), &ParseOptions::default()),
        Err(ParseError::EmptyInput)
    ));
}

#[test]
fn unknown_root_is_an_error() {
    let opts = ParseOptions {
        root: Some("nope".into()),
        ..ParseOptions::default()
    };
    assert!(matches!(
        parse_text("neko ga ki-ta", grammar(), &opts),
        Err(ParseError::UnknownRoot(_))
    ));
    let frag = ParseOptions {
        root: Some("root-frag".into()),
        ..ParseOptions::default()
    };
    assert_eq!(
        parse_text("neko ga ki-ta", grammar(), &frag)
            .unwrap()
            .forest
            .roots
            .len(),
        0
    );
}

#[test]
fn quick_check_vectors() {
    let g = grammar();
    let h = &g.hierarchy;
    let qc = QuickCheck::new(h, &["SYNSEM.LOCAL.HEAD".to_string()]).unwrap();
    let noun = h.fs("sign & [ SYNSEM.LOCAL.HEAD noun-head ]").unwrap();
    let verb = h.fs("sign & [ SYNSEM.LOCAL.HEAD verb-head ]").unwrap();
    let any = h.fs("sign").unwrap();
    let (vn, vv, va) = (qc.vector(&noun, &[]), qc.vector(&verb, &[]), qc.vector(&any, &[]));
    assert!(!quick_check(h, &vn, &vv));
    assert!(quick_check(h, &vn, &va));
    assert!(quick_check(h, &vv, &vv));
    assert!(QuickCheck::new(h, &["NO.SUCH.PATH".to_string()]).is_err());
}

#[test]
fn starred_items_fail_and_grammatical_parse() {
    for item in fragment_regression_items() {
        let n = readings(&item.input);
        assert_eq!(n > 0, item.grammatical, "{} {}", item.id, item.input);
        if item.expected >= 0 {
            assert_eq!(n as i64, item.expected, "{}", item.id);
        }
    }
}
