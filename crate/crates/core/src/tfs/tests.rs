use super::*;

const HIER: &str = r#"
head := *top* & [ CASE case ].
noun-head := head.
verb-head := head.
case := *top*.
nom := case.
acc := case.
val := *top*.
x := val.
y := val.
sign := *top* & [ HEAD head, A val, B val ].
"#;

fn h() -> TypeHierarchy {
    TypeHierarchy::load(HIER).unwrap()
}

#[test]
fn top_is_unit() {
    let h = h();
    let f = h.fs("[ HEAD noun-head, A x ]").unwrap();
    let t = FeatureStructure::top(&h);
    assert_eq!(unify(&h, &f, &t).unwrap(), f);
    assert_eq!(unify(&h, &t, &f).unwrap(), f);
}

#[test]
fn head_clash_reports_path() {
    let h = h();
    let a = h.fs("[ HEAD noun-head ]").unwrap();
    let b = h.fs("[ HEAD verb-head ]").unwrap();
    let err = unify(&h, &a, &b).unwrap_err();
    assert_eq!(err.path, vec!["HEAD".to_string()]);
    assert_eq!(
        err.reason,
        FailReason::TypeClash("noun-head".into(), "verb-head".into())
    );
}

#[test]
fn reentrancy_propagates() {
    let h = h();
    let a = h.fs("[ A #1, B #1 ]").unwrap();
    let b = h.fs("[ A x ]").unwrap();
    let r = unify(&h, &a, &b).unwrap();
    assert_eq!(r.type_at(&h, "B"), Some("x"));
    let pa = parse_path(&h, "A").unwrap();
    let pb = parse_path(&h, "B").unwrap();
    assert!(r.shares(&pa, &pb));
    // inputs untouched
    assert_eq!(a, h.fs("[ A #1, B #1 ]").unwrap());
}

#[test]
fn well_typed_unification_adds_constraints() {
    let h = h();
    // `sign` is inferred from A, and its constraint brings HEAD with CASE.
    let f = h.fs("[ A x ]").unwrap();
    assert_eq!(f.type_at(&h, ""), Some("sign"));
    assert_eq!(f.type_at(&h, "HEAD.CASE"), Some("case"));
}

#[test]
fn subsumption_facts() {
    let h = h();
    let f = h.fs("[ A x, B x ]").unwrap();
    let r = h.fs("[ A #1 & x, B #1 ]").unwrap();
    assert!(subsumes(&h, &f, &f));
    assert!(subsumes(&h, &FeatureStructure::top(&h), &f));
    assert!(!subsumes(&h, &r, &f));
    assert!(subsumes(&h, &f, &r));
}

#[test]
fn atoms_unify_only_when_equal() {
    let h = TypeHierarchy::load("w := *top* & [ PHON string ].").unwrap();
    let a = h.fs("[ PHON \"yon\" ]").unwrap();
    let b = h.fs("[ PHON \"yon\" ]").unwrap();
    let c = h.fs("[ PHON \"yomu\" ]").unwrap();
    assert!(unify(&h, &a, &b).is_ok());
    let err = unify(&h, &a, &c).unwrap_err();
    assert!(matches!(err.reason, FailReason::AtomClash(..)));
}

#[test]
fn cyclic_result_fails() {
    let h = TypeHierarchy::load("n := *top* & [ F *top* ].").unwrap();
    let err = h.fs("[ F #1 & [ F #1 ] ]").unwrap_err();
    assert!(
        matches!(
            err,
            BuildError::Unify(UnifyFailure {
                reason: FailReason::Cycle,
                ..
            })
        ),
        "{err:?}"
    );
}

#[test]
fn dump_is_stable() {
    let h = h();
    let f = h.fs("[ A #1 & x, B #1, HEAD noun-head ]").unwrap();
    let text = dump(&h, &f);
    assert_eq!(
        text,
        "[ sign\n  A #1 x\n  B #1\n  HEAD [ noun-head\n         CASE case ] ]\n"
    );
}
