mod common;

use common::grammar;
use jdeep_core::grammar::{
    AdjClause, Grammar, GrammarError, GrammarSources, LexRuleFailure, RuleKind, SchemaFailure, Slot,
};
use jdeep_core::parser::{parse_text, Forest, Origin, ParseOptions};
use jdeep_core::tfs::{subsumes, FeatureStructure};

fn item_sign(g: &Grammar, id: &str) -> FeatureStructure {
    g.entry_item(g.entry(id).unwrap_or_else(|| panic!("no entry {id}")))
        .sign
}

fn type_at(g: &Grammar, fs: &FeatureStructure, path: &[jdeep_core::tfs::FeatId]) -> String {
    let n = fs.follow(path).expect("path present");
    g.type_name(fs.ty(n)).to_string()
}

fn forest(text: &str) -> Forest {
    parse_text(text, grammar(), &ParseOptions::default())
        .expect("parses")
        .forest
}

fn rule_edge<'f>(f: &'f Forest, schema: &str) -> &'f jdeep_core::parser::Edge {
    let g = grammar();
    f.edges
        .iter()
        .find(|e| matches!(e.origin, Origin::Rule(r) if g.schemata[r].name == schema))
        .unwrap_or_else(|| panic!("no {schema} edge"))
}

#[test]
fn bundled_inventory() {
    let g = grammar();
    assert!(g.schemata.len() >= 12, "{} schemata", g.schemata.len());
    assert!(g.lexical_rules.len() >= 8);
    assert!(g.schemata.iter().filter(|s| s.arity == 2).all(|s| s.head < 2));
    let h = &g.hierarchy;
    let (marker, light) = (
        h.type_id("head-marker-phrase").unwrap(),
        h.type_id("vn-light-phrase").unwrap(),
    );
    assert!(h.subsumes(marker, light));
    assert_eq!(g.schema("vn-light").unwrap().kind, RuleKind::HeadMarker);
}

#[test]
fn undeclared_type_is_reported() {
    let mut src = GrammarSources::bundled();
    src.lexicon.push_str("\nfoo := vebr-head.\n");
    match Grammar::load(&src) {
        Err(GrammarError::UndefinedType { ty, name, .. }) => {
            assert_eq!(ty, "vebr-head");
            assert_eq!(name, "foo");
        }
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("loaded"),
    }
}

#[test]
fn single_entry_grammar() {
    let b = GrammarSources::bundled();
    let src = GrammarSources {
        lexicon: "akai := adj-le & [ SYNSEM.LKEYS.KEYREL.PRED \"_akai_a_rel\" ].\n".into(),
        lexrules: String::new(),
        schemata: String::new(),
        ..b
    };
    let g = Grammar::load(&src).unwrap();
    assert_eq!(g.lexicon.len(), 1);
    assert!(g.schemata.is_empty() && g.lexical_rules.is_empty());
    let opts = ParseOptions::default();
    assert_eq!(parse_text("akai", &g, &opts).unwrap().forest.roots.len(), 1);
    assert_eq!(parse_text("akai akai", &g, &opts).unwrap().forest.roots.len(), 0);
}

#[test]
fn past_stem_of_yomu() {
    let g = grammar();
    let out = g
        .apply_lexical_rule(
            &item_sign(g, "yomu@godan-trans-le"),
            g.lexical_rule("godan-nd-stem").unwrap(),
        )
        .unwrap();
    assert_eq!(g.phon(&out), Some("yon"));
    assert_eq!(type_at(g, &out, &g.paths.rmorph), "nd-morph");
}

#[test]
fn rule_for_adjectives_rejects_yomu() {
    let mut src = GrammarSources::bundled();
    src.lexrules
        .push_str("\n%suffix (mu me) (i ku)\nadv-form := lex-infl-base & [ DTR1.SYNSEM.LOCAL.HEAD adj-head ].\n");
    let g = Grammar::load(&src).unwrap();
    let rule = g.lexical_rule("adv-form").unwrap();
    let yomu = item_sign(&g, "yomu@godan-trans-le");
    assert!(matches!(
        g.apply_lexical_rule(&yomu, rule),
        Err(LexRuleFailure::Unification(_))
    ));
    let akai = g.apply_lexical_rule(&item_sign(&g, "akai@adj-le"), rule).unwrap();
    assert_eq!(g.phon(&akai), Some("akaku"));
}

#[test]
fn no_pattern_no_output() {
    let g = grammar();
    let tabe = item_sign(g, "tabe@ichidan-trans-le");
    assert!(matches!(
        g.apply_lexical_rule(&tabe, g.lexical_rule("godan-nd-stem").unwrap()),
        Err(LexRuleFailure::NoOrthMatch(_)) | Err(LexRuleFailure::Unification(_))
    ));
}

#[test]
fn contraction_rule_output() {
    let g = grammar();
    let out = g
        .apply_lexical_rule(
            &item_sign(g, "tabe@ichidan-trans-le"),
            g.lexical_rule("chatta").unwrap(),
        )
        .unwrap();
    assert_eq!(g.phon(&out), Some("tabechatta"));
    let idx: Vec<_> = g.paths.hook_index.clone();
    let f = |feat: &str| {
        let mut p = idx.clone();
        p.push(g.hierarchy.feature_id(feat).unwrap());
        type_at(g, &out, &p)
    };
    assert_eq!(f("TENSE"), "past");
    assert_eq!(f("ASPECT"), "completive");
}

#[test]
fn head_complement_saturates_object() {
    let g = grammar();
    let f = forest("hon wo yon-da");
    let e = rule_edge(&f, "hc-obj");
    let hc = g.schema("hc-obj").unwrap();
    let dtrs: Vec<&FeatureStructure> = e.daughters.iter().map(|&d| &f.edges[d].sign).collect();
    let head = dtrs[hc.head];
    assert!(type_at(g, head, g.paths.sat(Slot::Obj)).starts_with("unsat"));
    let m = g.apply_schema(hc, &dtrs).unwrap();
    assert_eq!(type_at(g, &m, g.paths.sat(Slot::Obj)), "sat");
    assert_eq!(type_at(g, &m, g.paths.val(Slot::Obj)), "none");
    assert_eq!(m, e.sign);
    let again: Vec<&FeatureStructure> = if hc.head == 1 {
        vec![dtrs[0], &m]
    } else {
        vec![&m, dtrs[1]]
    };
    assert!(g.apply_schema(hc, &again).is_err());
}

#[test]
fn adjunct_on_head_with_adjacent_argument() {
    let g = grammar();
    let hadj = g.schema("hadj").unwrap();
    let ta = item_sign(g, "ta@past-ending-le");
    let adv = item_sign(g, "yukkuri@adverb-le");
    let dtrs = if hadj.head == 1 { [&adv, &ta] } else { [&ta, &adv] };
    match g.apply_schema(hadj, &dtrs) {
        Err(SchemaFailure::Adjacency(v)) => {
            assert_eq!(v.clause, AdjClause::Adjunct);
            assert_eq!(v.slot, Slot::Spr);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn nonhead_with_adjacent_argument() {
    let g = grammar();
    let hc = g.schema("hc-obj").unwrap();
    let ta = item_sign(g, "ta@past-ending-le");
    let yomu = item_sign(g, "yomu@godan-trans-le");
    let dtrs = if hc.head == 1 { [&ta, &yomu] } else { [&yomu, &ta] };
    match g.apply_schema(hc, &dtrs) {
        Err(SchemaFailure::Adjacency(v)) => assert_eq!(v.clause, AdjClause::NonHead),
        other => panic!("{other:?}"),
    }
}

#[test]
fn adjacency_clauses() {
    let g = grammar();
    let ta = item_sign(g, "ta@past-ending-le");
    let tabe = item_sign(g, "tabe@ichidan-trans-le");
    let akai = item_sign(g, "akai@adj-le");
    assert!(g
        .check_adjacency(RuleKind::HeadSpecifier, &ta, Some(&tabe), Some(Slot::Spr))
        .is_ok());
    let v = g
        .check_adjacency(RuleKind::HeadComplement, &ta, Some(&tabe), Some(Slot::Obj))
        .unwrap_err();
    assert_eq!(v.clause, AdjClause::OtherSlot);
    for kind in [RuleKind::HeadComplement, RuleKind::HeadAdjunct, RuleKind::Coordination] {
        assert!(g.check_adjacency(kind, &akai, Some(&tabe), None).is_ok());
    }
}

#[test]
fn schema_results_on_suite() {
    let g = grammar();
    let sat = g.hierarchy.type_id("sat").unwrap();
    for it in jdeep_core::fragment::fragment_regression_items()
        .iter()
        .filter(|i| i.grammatical)
    {
        let f = forest(&it.input);
        for e in &f.edges {
            let Origin::Rule(r) = e.origin else { continue };
            let s = &g.schemata[r];
            let mother = s.fs.restrict(&g.hierarchy, &g.paths.rule_only);
            assert!(subsumes(&g.hierarchy, &mother, &e.sign), "{} in {}", s.name, it.id);
            let head = &f.edges[e.daughters[s.head.min(e.daughters.len() - 1)]].sign;
            for slot in Slot::ALL {
                let was = head.follow(g.paths.sat(slot)).map(|n| head.ty(n));
                if was == Some(sat) {
                    let now = e.sign.follow(g.paths.sat(slot)).map(|n| e.sign.ty(n));
                    assert_eq!(now, Some(sat), "{} un-saturates {slot:?} in {}", s.name, it.id);
                }
            }
        }
    }
}

#[test]
fn orthographemics_are_functional() {
    let g = grammar();
    let mut seen = std::collections::BTreeMap::new();
    for form in g.surface_forms() {
        for item in g.lexical_items(form) {
            let key = (item.base_id.clone(), item.rules.clone());
            let prev = seen.insert(key.clone(), item.phon.clone());
            assert!(prev.is_none_or(|p| p == item.phon), "{key:?}");
        }
    }
    assert!(!seen.is_empty());
}
