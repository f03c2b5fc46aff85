use strposet::bits::IdxSet;
use strposet::poset::Labels;
use strposet::structure::{dominates_via, str_leq, StrNode};
use strposet::PosetFragment;

/// Curves `a, b, c` below both `d` and `e`, and `f` below `d` only.
fn four_curves() -> PosetFragment {
    PosetFragment::new(
        4,
        2,
        [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1), (3, 0)],
    )
    .unwrap()
    .with_labels(Labels {
        h1: ["a", "b", "c", "f"].map(String::from).to_vec(),
        h2: ["d", "e"].map(String::from).to_vec(),
    })
    .unwrap()
}

#[test]
fn witness_may_lie_inside_the_lower_node() {
    let f = four_curves();
    let d = IdxSet::from([0, 1]);
    let a = IdxSet::from([0, 1, 2]);
    assert!(f.mub_is(&a, &d));
    let single = StrNode::Finite { a: IdxSet::singleton(0), b: d };
    let whole = StrNode::Finite { a, b: d };
    let bigger = StrNode::Finite { a: IdxSet::from([0, 1, 2, 3]), b: d };
    assert!(dominates_via(&f, &whole, &single, &a).unwrap());
    assert!(dominates_via(&f, &bigger, &whole, &a).unwrap());
    assert!(str_leq(&f, &single, &whole).unwrap());
    assert!(str_leq(&f, &whole, &bigger).unwrap());
    assert!(!str_leq(&f, &bigger, &whole).unwrap());
}

#[test]
fn membership_needs_one_curve_below_everything() {
    let f = four_curves();
    let parse = |s: &str| StrNode::parse(&f, s).unwrap();
    assert!(parse("a,f|d,e").is_member(&f));
    assert!(!parse("f|d,e").is_member(&f));
    assert!(parse("f|d").is_member(&f));
}
