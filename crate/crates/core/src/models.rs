//! Fragment generators: hand-built examples, planted random fragments and
//! affine-plane fragments over small prime fields.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{IdxSet, MAX_TIER};
use crate::error::{Error, Result};
use crate::poly::{irreducibles, Poly};
use crate::poset::{Labels, PosetFragment};

fn labelled(n1: usize, n2: usize, inc: &[(usize, usize)], h1: &[&str], h2: &[&str]) -> PosetFragment {
    PosetFragment::new(n1, n2, inc.iter().copied())
        .and_then(|f| {
            f.with_labels(Labels {
                h1: h1.iter().map(|s| s.to_string()).collect(),
                h2: h2.iter().map(|s| s.to_string()).collect(),
            })
        })
        .expect("fixed fragment is well formed")
}

/// Curves `a, b, c` and points `d, e` with `a, b` below both points and `c`
/// below `d` only.
pub fn f0() -> PosetFragment {
    labelled(
        3,
        2,
        &[(0, 0), (0, 1), (1, 0), (1, 1), (2, 0)],
        &["a", "b", "c"],
        &["d", "e"],
    )
}

/// A curve `P` through `m`, `n1`, `n2` and two curves `y1`, `y2` meeting `P`
/// at `m` plus one private point each. No curve pairs with `P` to cut out
/// exactly `{m}`.
pub fn cusp_fragment() -> PosetFragment {
    labelled(
        3,
        3,
        &[(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0), (2, 2)],
        &["P", "y1", "y2"],
        &["m", "n1", "n2"],
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    pub n1: usize,
    pub n2: usize,
    /// Every non-generic curve gets at least this many points.
    pub min_updeg: usize,
    /// Disjoint curve pairs planted per point, each meeting only there.
    pub planted_pairs_per_point: usize,
    /// Curves placed below every point.
    pub generic_curves: usize,
    /// Cap on the number of points shared by two curves.
    pub pairwise_cap: usize,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n1: 12,
            n2: 3,
            min_updeg: 2,
            planted_pairs_per_point: 2,
            generic_curves: 1,
            pairwise_cap: 3,
            seed: 7,
        }
    }
}

impl GeneratorParams {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Generator(msg));
        if self.n1 == 0 || self.n2 == 0 || self.n1 > MAX_TIER || self.n2 > MAX_TIER {
            return bad(format!("tier sizes {} x {} out of range", self.n1, self.n2));
        }
        if self.planted_pairs_per_point == 0 {
            return bad("planted_pairs_per_point must be at least 1".into());
        }
        if self.pairwise_cap < 2 {
            return bad("pairwise_cap must be at least 2".into());
        }
        if self.n1 < self.generic_curves + 2 * self.planted_pairs_per_point {
            return bad(format!(
                "n1 = {} cannot hold {} generic curves and {} disjoint pairs per point",
                self.n1, self.generic_curves, self.planted_pairs_per_point
            ));
        }
        if self.generic_curves >= 2 && self.n2 > self.pairwise_cap {
            return bad(format!(
                "two generic curves share all {} points, above pairwise_cap {}",
                self.n2, self.pairwise_cap
            ));
        }
        if self.generic_curves >= 1 && self.min_updeg > self.pairwise_cap {
            return bad(format!(
                "min_updeg {} exceeds pairwise_cap {} (shared with the generic curve)",
                self.min_updeg, self.pairwise_cap
            ));
        }
        if self.min_updeg > self.n2 {
            return bad(format!("min_updeg {} exceeds n2 = {}", self.min_updeg, self.n2));
        }
        Ok(())
    }
}

/// Incidence under construction, tracking planted pairs and the shared-point cap.
struct Builder {
    up: Vec<IdxSet>,
    down: Vec<IdxSet>,
    generic: IdxSet,
    /// `(x, y, m)`: the only point above both `x` and `y` must stay `m`.
    planted: Vec<(usize, usize, usize)>,
    cap: usize,
}

impl Builder {
    fn new(n1: usize, n2: usize, generic: IdxSet, cap: usize) -> Self {
        let mut b = Builder {
            up: vec![IdxSet::empty(); n1],
            down: vec![IdxSet::empty(); n2],
            generic,
            planted: Vec::new(),
            cap,
        };
        for g in generic.iter() {
            for m in 0..n2 {
                b.add(g, m);
            }
        }
        b
    }

    fn add(&mut self, x: usize, m: usize) {
        self.up[x].insert(m);
        self.down[m].insert(x);
    }

    /// Whether adding `x < m` keeps every planted pair and the cap intact.
    fn can_add(&self, x: usize, m: usize) -> bool {
        if self.up[x].contains(m) {
            return false;
        }
        for &(u, v, _) in &self.planted {
            let partner = if u == x {
                v
            } else if v == x {
                u
            } else {
                continue;
            };
            if self.down[m].contains(partner) {
                return false;
            }
        }
        self.down[m].iter().all(|y| {
            let shared = self.up[x].intersection(&self.up[y]).len() + 1;
            shared <= self.cap
        })
    }
}

/// A random fragment with planted finite witnesses for the J-conditions.
///
/// Construction: for each point, plant disjoint curve pairs meeting only
/// there; put the generic curves below every point; top every curve up to
/// `min_updeg` points; then sprinkle a few extra incidences. Every addition
/// respects the planted pairs and `pairwise_cap`. Deterministic in `seed`.
pub fn random_fragment(params: &GeneratorParams) -> Result<PosetFragment> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..256 {
        if let Some(f) = try_generate(params, &mut rng) {
            return Ok(f);
        }
    }
    Err(Error::Generator(format!(
        "no fragment found for {params:?}; loosen the constraints"
    )))
}

fn try_generate(params: &GeneratorParams, rng: &mut ChaCha8Rng) -> Option<PosetFragment> {
    let (n1, n2) = (params.n1, params.n2);
    let generic: IdxSet = (n1 - params.generic_curves..n1).collect();
    let pool: Vec<usize> = (0..n1 - params.generic_curves).collect();
    let mut b = Builder::new(n1, n2, generic, params.pairwise_cap);

    for m in 0..n2 {
        let mut order = pool.clone();
        order.shuffle(rng);
        let mut chosen = IdxSet::empty();
        let mut pairs = Vec::new();
        let mut pending: Option<usize> = None;
        for &x in &order {
            if pairs.len() == params.planted_pairs_per_point {
                break;
            }
            if chosen.contains(x) || !b.can_add(x, m) {
                continue;
            }
            match pending {
                None => pending = Some(x),
                Some(y) => {
                    if b.up[x].is_disjoint(&b.up[y]) && x != y {
                        pairs.push((y, x));
                        chosen.insert(x);
                        chosen.insert(y);
                        pending = None;
                    }
                }
            }
        }
        if pairs.len() < params.planted_pairs_per_point {
            return None;
        }
        for &(x, y) in &pairs {
            // both members must still be addable once the other is in place
            if !b.can_add(x, m) {
                return None;
            }
            b.add(x, m);
            if !b.can_add(y, m) {
                return None;
            }
            b.add(y, m);
            b.planted.push((x, y, m));
        }
    }

    for &x in &pool {
        let mut points: Vec<usize> = (0..n2).collect();
        points.shuffle(rng);
        for m in points {
            if b.up[x].len() >= params.min_updeg {
                break;
            }
            if b.can_add(x, m) {
                b.add(x, m);
            }
        }
        if b.up[x].len() < params.min_updeg {
            return None;
        }
    }

    for _ in 0..n1 {
        let x = pool[rng.gen_range(0..pool.len())];
        let m = rng.gen_range(0..n2);
        if b.can_add(x, m) {
            b.add(x, m);
        }
    }

    debug_assert!(b.generic.iter().all(|g| b.up[g].len() == n2));
    let inc: Vec<(usize, usize)> = b
        .up
        .iter()
        .enumerate()
        .flat_map(|(x, ps)| ps.iter().map(move |m| (x, m)))
        .collect();
    PosetFragment::new(n1, n2, inc).ok()
}

/// Rational-point model of the spectrum of `F_p[x, y]`: points are `F_p²`,
/// curves are normalized irreducible polynomials of total degree at most `d`
/// with at least one rational zero, and a curve lies below the points where
/// it vanishes.
pub fn affine_plane_fragment(p: u32, d: usize) -> Result<PosetFragment> {
    affine_plane_parts(p, d).map(|(f, _)| f)
}

/// [`affine_plane_fragment`] together with the polynomial behind each curve.
pub fn affine_plane_parts(p: u32, d: usize) -> Result<(PosetFragment, Vec<Poly>)> {
    if ![2, 3, 5].contains(&p) || d == 0 || d > 3 {
        return Err(Error::Generator(format!(
            "affine model needs p in {{2, 3, 5}} and 1 <= d <= 3, got p = {p}, d = {d}"
        )));
    }
    // rough count of normalized polynomials, to refuse hopeless sizes early
    let monos = (d + 1) * (d + 2) / 2;
    if (p as f64).powi(monos as i32) / (p as f64 - 1.0) > 4.0e5 {
        return Err(Error::Generator(format!(
            "affine model with p = {p}, d = {d} is beyond desk scale"
        )));
    }
    let points: Vec<(u32, u32)> = (0..p).flat_map(|a| (0..p).map(move |b| (a, b))).collect();
    let curves: Vec<Poly> = irreducibles(p, d)
        .into_iter()
        .filter(|f| points.iter().any(|&(a, b)| f.eval(a, b) == 0))
        .collect();
    if curves.len() > MAX_TIER {
        return Err(Error::Generator(format!(
            "affine model with p = {p}, d = {d} has {} curves, above the tier limit {MAX_TIER}",
            curves.len()
        )));
    }
    let mut inc = Vec::new();
    for (i, f) in curves.iter().enumerate() {
        for (j, &(a, b)) in points.iter().enumerate() {
            if f.eval(a, b) == 0 {
                inc.push((i, j));
            }
        }
    }
    let fragment = PosetFragment::new(curves.len(), points.len(), inc)?.with_labels(Labels {
        h1: curves.iter().map(|f| f.to_string()).collect(),
        h2: points.iter().map(|(a, b)| format!("pt{a}{b}")).collect(),
    })?;
    Ok((fragment, curves))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{check_j2, check_j3, check_j4, find_j3_witness, find_p5_witness, p4_bound};
    use crate::poset::Limits;
    use crate::structure::{mu_statistic, Mu};

    #[test]
    fn fixed_fragments_validate() {
        assert!(f0().validate().is_valid());
        assert!(cusp_fragment().validate().is_valid());
    }

    #[test]
    fn cusp_mub_facts() {
        let g = cusp_fragment();
        let (p, y1, y2) = (0, 1, 2);
        assert_eq!(g.curve_mub(&IdxSet::from([p, y1])), IdxSet::from([0, 1]));
        assert_eq!(g.curve_mub(&IdxSet::from([p, y2])), IdxSet::from([0, 2]));
        assert_eq!(g.curve_mub(&IdxSet::from([y1, y2])), IdxSet::from([0]));
        let stat = mu_statistic(&g, p, 0, 4).unwrap();
        assert_eq!((stat.mu, stat.ge4), (Mu::Finite(7), true));
        assert_eq!(find_p5_witness(&g, &IdxSet::from([p]), &IdxSet::from([0])).unwrap(), None);
    }

    #[test]
    fn default_random_fragment_has_j3_witnesses() {
        let params = GeneratorParams::default();
        let f = random_fragment(&params).unwrap();
        assert!(f.validate().is_valid());
        for m in 0..f.n2() {
            assert!(find_j3_witness(&f, m, &IdxSet::empty(), 2).is_some());
        }
        assert!(check_j4(&f, f.n2()).holds);
        assert!(check_j2(&f, params.min_updeg).holds);
        assert!(p4_bound(&f) <= params.pairwise_cap);
        assert_eq!(random_fragment(&params).unwrap(), f);
    }

    #[test]
    fn random_fragments_satisfy_their_contract() {
        for seed in 0..20 {
            let params = GeneratorParams {
                n1: 24,
                n2: 5,
                planted_pairs_per_point: 3,
                pairwise_cap: 3,
                seed,
                ..Default::default()
            };
            let f = random_fragment(&params).unwrap();
            assert!(f.validate().is_valid());
            assert!(check_j2(&f, 2).holds);
            assert!(check_j3(&f, 2, 2).holds, "seed {seed}");
            assert!(check_j4(&f, 2).holds);
            assert!(p4_bound(&f) <= 3);
        }
    }

    #[test]
    fn infeasible_params_are_rejected() {
        let params = GeneratorParams {
            n1: 4,
            planted_pairs_per_point: 2,
            generic_curves: 1,
            ..Default::default()
        };
        assert!(matches!(random_fragment(&params), Err(Error::Generator(_))));
        let params = GeneratorParams {
            pairwise_cap: 1,
            ..Default::default()
        };
        assert!(random_fragment(&params).is_err());
    }

    #[test]
    fn f2_lines() {
        let f = affine_plane_fragment(2, 1).unwrap();
        assert_eq!(f.n2(), 4);
        assert_eq!(f.n1(), 6);
        for m in 0..4 {
            assert_eq!(f.curves_below(m).len(), 3);
        }
        // two lines meeting in exactly one point have that point as mub
        for x in 0..6 {
            for y in x + 1..6 {
                let common = f.curve_mub(&IdxSet::from([x, y]));
                assert!(common.len() <= 1);
            }
        }
        assert!(check_j4(&f, 2).holds);
    }

    #[test]
    fn affine_incidence_is_the_zero_set() {
        for (p, d) in [(2, 2), (3, 1), (3, 2)] {
            let (f, polys) = affine_plane_parts(p, d).unwrap();
            assert!(f.validate_with(Limits::wide()).is_valid());
            for (i, poly) in polys.iter().enumerate() {
                for a in 0..p {
                    for b in 0..p {
                        let j = (a * p + b) as usize;
                        assert_eq!(f.incident(i, j), poly.eval(a, b) == 0);
                    }
                }
            }
            // shared points of two distinct curves stay within d^2
            assert!(p4_bound(&f) <= d * d, "p = {p}, d = {d}");
        }
    }

    #[test]
    fn reducible_curves_are_excluded() {
        let (f, _) = affine_plane_parts(3, 2).unwrap();
        assert!(f.find_h1("xy").is_err());
        assert!(f.find_h1("x").is_ok());
    }

    #[test]
    fn affine_bounds() {
        assert!(affine_plane_fragment(7, 1).is_err());
        assert!(affine_plane_fragment(2, 4).is_err());
        assert!(affine_plane_fragment(5, 3).is_err());
    }
}
