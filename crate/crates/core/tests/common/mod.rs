#![allow(dead_code)]

use strposet::bits::{subsets_by_size, IdxSet};
use strposet::models::{affine_plane_fragment, cusp_fragment, f0, random_fragment, GeneratorParams};
use strposet::reconstruction::FiberSpec;
use strposet::PosetFragment;

pub const SUPPORT: usize = 8;
pub const AMAX: usize = 5;
/// Two-point fibers per fragment, besides every single-point fiber.
pub const PAIR_FIBERS: usize = 4;

pub struct Entry {
    pub name: String,
    pub fragment: PosetFragment,
}

pub fn planted(seed: u64) -> GeneratorParams {
    GeneratorParams {
        n1: 24,
        n2: 5,
        planted_pairs_per_point: 3,
        pairwise_cap: 3,
        seed,
        ..GeneratorParams::default()
    }
}

/// Planted random fragments, affine planes over F_2 and F_3, and the two
/// hand-built fragments.
pub fn corpus() -> Vec<Entry> {
    let mut out = Vec::new();
    for seed in 0..14 {
        out.push(Entry {
            name: format!("random(24,5,seed={seed})"),
            fragment: random_fragment(&planted(seed)).unwrap(),
        });
    }
    for seed in [7, 8] {
        out.push(Entry {
            name: format!("random(12,3,seed={seed})"),
            fragment: random_fragment(&GeneratorParams {
                seed,
                ..GeneratorParams::default()
            })
            .unwrap(),
        });
    }
    for (p, d) in [(2, 1), (2, 2), (3, 1), (3, 2)] {
        out.push(Entry {
            name: format!("affine(p={p},d={d})"),
            fragment: affine_plane_fragment(p, d).unwrap(),
        });
    }
    out.push(Entry {
        name: "f0".into(),
        fragment: f0(),
    });
    out.push(Entry {
        name: "cusp".into(),
        fragment: cusp_fragment(),
    });
    out
}

/// Support for the fiber of `b`: curves below all of `b` first, then curves
/// below part of `b`, then one unrelated curve, at most [`SUPPORT`] in all.
pub fn support_for(f: &PosetFragment, b: &IdxSet) -> IdxSet {
    let core = f.below_all(b);
    let partial = b
        .iter()
        .fold(IdxSet::empty(), |acc, m| acc.union(f.curves_below(m)))
        .difference(&core);
    let outside = f
        .curves()
        .difference(&core)
        .difference(&partial);
    let order = core
        .iter()
        .take(3)
        .chain(partial.iter().take(SUPPORT - 4))
        .chain(outside.iter().take(1))
        .chain(core.iter().skip(3))
        .chain(partial.iter().skip(SUPPORT - 4));
    order.take(SUPPORT).collect()
}

/// Single-point fibers and a few two-point fibers.
pub fn fiber_specs(f: &PosetFragment) -> Vec<FiberSpec> {
    let pts = f.points();
    let singles = subsets_by_size(&pts, 1, 1);
    let pairs = subsets_by_size(&pts, 2, 2)
        .filter(|b| !f.below_all(b).is_empty())
        .take(PAIR_FIBERS);
    singles
        .chain(pairs)
        .map(|b| FiberSpec {
            b,
            support: support_for(f, &b),
            amax: AMAX,
        })
        .collect()
}
