use std::collections::BTreeSet;

use proptest::prelude::*;

use strposet::bits::{subsets_by_size, IdxSet};
use strposet::io::{fragment_to_string, parse_fragment};
use strposet::poset::{relabel_with, ElementSet};
use strposet::reconstruction::{
    build_rho, induce_str_iso, roundtrip, verify_factorization, Caps, Domain, FiberSpec,
    RoundTripOptions,
};
use strposet::small_poset::SmallPoset;
use strposet::structure::{
    counting_formula, enumerate_fiber, fiber_height_positive, parity_mub_check, str_leq,
    str_leq_bruteforce, StrNode,
};
use strposet::{relabel, Exec, Limits, PosetFragment};

/// Fragments with up to 7 curves and 4 points; every point gets a curve.
fn fragment() -> impl Strategy<Value = PosetFragment> {
    (1usize..=7, 1usize..=4)
        .prop_flat_map(|(n1, n2)| (Just(n1), Just(n2), prop::collection::vec(any::<bool>(), n1 * n2)))
        .prop_map(|(n1, n2, bits)| {
            let mut inc: Vec<(usize, usize)> = (0..n1)
                .flat_map(|x| (0..n2).map(move |m| (x, m)))
                .filter(|&(x, m)| bits[x * n2 + m])
                .collect();
            for m in 0..n2 {
                if !inc.iter().any(|&(_, j)| j == m) {
                    inc.push((m % n1, m));
                }
            }
            PosetFragment::new(n1, n2, inc).unwrap()
        })
}

fn perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn generated_fragments_validate(f in fragment()) {
        prop_assert!(f.validate().is_valid());
    }

    #[test]
    fn order_axioms(f in fragment()) {
        let els = f.all_elements();
        for &x in &els {
            prop_assert!(f.leq(x, x).unwrap());
            for &y in &els {
                if x != y {
                    prop_assert!(!(f.leq(x, y).unwrap() && f.leq(y, x).unwrap()));
                }
                for &z in &els {
                    if f.leq(x, y).unwrap() && f.leq(y, z).unwrap() {
                        prop_assert!(f.leq(x, z).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn mub_is_an_antichain_of_upper_bounds(f in fragment(), mask in any::<u64>()) {
        let els = f.all_elements();
        let a = ElementSet::from_ids(
            els.iter().enumerate().filter(|(i, _)| mask >> (i % 64) & 1 == 1).map(|(_, &x)| x),
        );
        prop_assume!(!a.is_empty());
        let mub = f.mub(&a).unwrap();
        let ids: Vec<_> = mub.ids().collect();
        for &u in &ids {
            for x in a.ids() {
                prop_assert!(f.leq(x, u).unwrap());
            }
            for &v in &ids {
                if u != v {
                    prop_assert!(!f.leq(u, v).unwrap());
                }
            }
        }
        // every upper bound sits above some member of mub
        let upper = f.upper_set(&a).unwrap();
        for u in upper.ids() {
            prop_assert!(ids.iter().any(|&m| f.leq(m, u).unwrap()));
        }
    }

    #[test]
    fn heights_match_chain_enumeration(f in fragment()) {
        let p = SmallPoset::from_fragment(&f);
        let hs = p.heights();
        for (i, &x) in f.all_elements().iter().enumerate() {
            prop_assert_eq!(f.height(x).unwrap(), hs[i]);
        }
        prop_assert_eq!(f.dim(), p.dim());
    }

    #[test]
    fn relabel_round_trip(f in fragment(), seed in any::<u64>()) {
        let (g, map) = relabel(&f, seed);
        prop_assert!(map.check(&f, &g).is_ok());
        prop_assert_eq!(relabel_with(&g, &map.inverse()).unwrap(), f.clone());
        prop_assert_eq!(g.incidence_count(), f.incidence_count());
    }

    #[test]
    fn explicit_relabel_preserves_incidence(
        (f, h1, h2) in fragment().prop_flat_map(|f| {
            let (n1, n2) = (f.n1(), f.n2());
            (Just(f), perm(n1), perm(n2))
        })
    ) {
        let map = strposet::IsoMap { h1, h2 };
        let g = relabel_with(&f, &map).unwrap();
        for x in 0..f.n1() {
            for m in 0..f.n2() {
                prop_assert_eq!(f.incident(x, m), g.incident(map.h1[x], map.h2[m]));
            }
        }
    }

    #[test]
    fn file_format_round_trip(f in fragment()) {
        let text = fragment_to_string(&f);
        let back = parse_fragment(&text, Limits::default()).unwrap();
        prop_assert_eq!(fragment_to_string(&back), text);
        prop_assert_eq!(back, f);
    }

    #[test]
    fn counting_and_parity(f in fragment()) {
        for b in subsets_by_size(&f.points(), 1, 2) {
            let view = enumerate_fiber(&f, &b, &f.curves(), 5, Exec::Sequential).unwrap();
            for a in &view.nodes {
                if !fiber_height_positive(&f, a, &b).unwrap() {
                    continue;
                }
                let (predicted, actual) = counting_formula(&f, a, &b).unwrap();
                prop_assert_eq!(predicted, actual);
                prop_assert_eq!(parity_mub_check(&f, a, &b).unwrap(), actual % 2 == 1);
            }
        }
    }

    #[test]
    fn structure_order_is_partial_and_w_max_complete(f in fragment()) {
        for b in subsets_by_size(&f.points(), 1, 2) {
            let view = enumerate_fiber(&f, &b, &f.curves(), 4, Exec::Sequential).unwrap();
            prop_assert!(view.order_violation().is_none());
            let nodes: Vec<StrNode> = (0..view.len()).map(|i| view.node(i)).collect();
            for x in &nodes {
                for y in &nodes {
                    prop_assert_eq!(str_leq(&f, x, y).unwrap(), str_leq_bruteforce(&f, x, y).unwrap());
                }
            }
        }
    }

    #[test]
    fn rays_sit_below_their_finite_nodes(f in fragment()) {
        for x in 0..f.n1() {
            if f.points_above(x).is_empty() {
                continue;
            }
            let ray = StrNode::Ray(x);
            for b in subsets_by_size(f.points_above(x), 1, 2) {
                for a in subsets_by_size(&f.curves(), 1, 3) {
                    let node = StrNode::Finite { a, b };
                    if !node.is_member(&f) {
                        continue;
                    }
                    prop_assert!(!str_leq(&f, &node, &ray).unwrap() || node == ray);
                    prop_assert_eq!(str_leq(&f, &ray, &node).unwrap(), str_leq_bruteforce(&f, &ray, &node).unwrap());
                }
            }
        }
    }

    #[test]
    fn materialized_rays_are_minimal_in_their_fiber(f in fragment()) {
        for x in 0..f.n1() {
            let b = *f.points_above(x);
            if b.is_empty() || b.len() > 3 {
                continue;
            }
            let top = StrNode::Ray(x).materialize(&f);
            let view = enumerate_fiber(&f, &b, &f.curves(), 4, Exec::Sequential).unwrap();
            for i in 0..view.len() {
                let n = view.node(i);
                prop_assert!(n == top || !str_leq(&f, &n, &top).unwrap(), "{} below {}", n.display(&f), top.display(&f));
            }
        }
    }

    #[test]
    fn induced_isomorphisms_factorize(f in fragment(), seed in any::<u64>()) {
        let (g, rho) = relabel(&f, seed);
        let specs: Vec<FiberSpec> = subsets_by_size(&f.points(), 1, 2)
            .map(|b| FiberSpec { b, support: f.curves(), amax: 3 })
            .collect();
        let phi = induce_str_iso(&f, &g, &rho, Domain::from_fibers(specs)).unwrap();
        prop_assert!(phi.check_invariants(500, seed, Exec::Sequential).unwrap().is_empty());
        prop_assert!(verify_factorization(&phi, &rho, None, Exec::Sequential).unwrap().is_clean());
    }

    #[test]
    fn reconstruction_never_guesses(f in fragment(), seed in any::<u64>()) {
        let v = roundtrip(&f, &RoundTripOptions { seed, ..Default::default() }, Exec::Sequential).unwrap();
        prop_assert!(!v.silent_mismatch);
        if !v.recovered {
            prop_assert!(!v.conflicts.is_empty());
        }
    }

    #[test]
    fn conflicts_replay(f in fragment(), seed in any::<u64>()) {
        let (g, rho) = relabel(&f, seed);
        let phi = induce_str_iso(&f, &g, &rho, Domain::witness(3, false)).unwrap();
        if let Err(e) = build_rho(&phi, Caps::default(), Exec::Sequential) {
            for c in &e.trace.conflicts {
                prop_assert!(c.replay(&phi, 3), "{}", c.describe(&f, &g));
            }
        }
    }

    #[test]
    fn bitset_matches_btreeset(xs in prop::collection::vec(0usize..512, 0..40), ys in prop::collection::vec(0usize..512, 0..40)) {
        let a: IdxSet = xs.iter().copied().collect();
        let b: IdxSet = ys.iter().copied().collect();
        let sa: BTreeSet<usize> = xs.iter().copied().collect();
        let sb: BTreeSet<usize> = ys.iter().copied().collect();
        prop_assert_eq!(a.to_vec(), sa.iter().copied().collect::<Vec<_>>());
        prop_assert_eq!(a.union(&b).to_vec(), sa.union(&sb).copied().collect::<Vec<_>>());
        prop_assert_eq!(a.intersection(&b).to_vec(), sa.intersection(&sb).copied().collect::<Vec<_>>());
        prop_assert_eq!(a.difference(&b).to_vec(), sa.difference(&sb).copied().collect::<Vec<_>>());
        prop_assert_eq!(a.is_subset(&b), sa.is_subset(&sb));
        prop_assert_eq!(a.len(), sa.len());
        prop_assert_eq!(a.cmp(&b), sa.iter().cmp(sb.iter()));
    }
}
