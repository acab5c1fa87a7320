use super::*;

fn g() -> &'static Grammar {
    Grammar::bundled()
}

#[test]
fn bundled_types_load() {
    let src = GrammarSources::bundled();
    TypeHierarchy::from_definitions(&source::parse_source(&src.types).unwrap()).unwrap();
}

#[test]
fn bundled_grammar_loads() {
    match load_grammar(&GrammarSources::bundled()) {
        Ok(g) => assert!(g.lexicon.len() > 50),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn lookups() {
    assert_eq!(g().entries("to").count(), 3);
    assert_eq!(g().entries("no").count(), 2);
    assert!(g().schema("hc-obj").is_some());
    assert!(g().lexical_rule("chatta").is_some());
    assert_eq!(g().entries("zzz").count(), 0);
}

#[test]
#[ignore]
fn dump_surface_forms() {
    let t = std::time::Instant::now();
    let mut v: Vec<_> = g().surface_forms().collect();
    v.sort();
    eprintln!("{:?} {} forms", t.elapsed(), v.len());
    for s in v {
        let items = g().lexical_items(s);
        let d: Vec<String> = items
            .iter()
            .map(|i| {
                let rules: Vec<&str> = i.rules.iter().map(|&r| g().lexical_rules[r].name.as_str()).collect();
                format!("{}{:?}", i.base_id, rules)
            })
            .collect();
        eprintln!("{s}\t{}", d.join(" "));
    }
}
