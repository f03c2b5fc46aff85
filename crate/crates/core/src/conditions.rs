//! Finite-witness checkers for the P1–P5 and J1–J4 conditions.
//!
//! Clauses that ask for infinitely many elements become thresholds supplied
//! by the caller; clauses that assert finiteness are reported as numbers.
//! Every report records the thresholds it used and flags this convention.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bits::{subsets_by_size, IdxSet};
use crate::error::{Error, Result};
use crate::poset::PosetFragment;

pub const DEFAULT_THRESHOLD: usize = 2;
pub const DEFAULT_SIZE_CAP: usize = 4;

pub const THRESHOLD_SEMANTICS: &str = "finite-witness semantics: infinitude clauses are \
     replaced by caller thresholds and finiteness clauses are reported as counts; a \
     fragment is a finite window and these checks do not certify the infinite condition";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    P1,
    P2,
    P3,
    P4,
    P5,
    J1,
    J2,
    J3,
    J4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub instance: Value,
    pub witness: Option<Value>,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub params: BTreeMap<String, Value>,
    pub holds: bool,
    pub witnesses: Vec<WitnessEntry>,
    pub semantics: String,
}

impl ConditionReport {
    fn new(condition: Condition) -> Self {
        ConditionReport {
            condition,
            params: BTreeMap::new(),
            holds: true,
            witnesses: Vec::new(),
            semantics: THRESHOLD_SEMANTICS.to_string(),
        }
    }

    fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    fn fail(&mut self, instance: Value, witness: Option<Value>) {
        self.holds = false;
        self.witnesses.push(WitnessEntry {
            instance,
            witness,
            ok: false,
        });
    }

    /// Failing entries only.
    pub fn failures(&self) -> impl Iterator<Item = &WitnessEntry> {
        self.witnesses.iter().filter(|w| !w.ok)
    }
}

fn h1_json(f: &PosetFragment, s: &IdxSet) -> Value {
    Value::from(s.iter().map(|i| f.label_h1(i)).collect::<Vec<_>>())
}

fn h2_json(f: &PosetFragment, s: &IdxSet) -> Value {
    Value::from(s.iter().map(|j| f.label_h2(j)).collect::<Vec<_>>())
}

/// P1 through P4 as four reports.
pub fn check_p1_to_p4(f: &PosetFragment, k: usize) -> Vec<ConditionReport> {
    let p1 = ConditionReport::new(Condition::P1).param("unique_minimal", true);

    let mut p2 = ConditionReport::new(Condition::P2).param("dim", f.dim());
    if f.dim() != 2 {
        p2.fail(json!({ "dim": f.dim() }), None);
    }

    let mut p3 = ConditionReport::new(Condition::P3).param("k", k);
    for x in 0..f.n1() {
        let above = f.points_above(x).len();
        if above < k {
            p3.fail(json!({ "x": f.label_h1(x), "above": above }), None);
        }
    }

    let mut best: Option<(usize, usize, usize)> = None;
    for x in 0..f.n1() {
        for y in x + 1..f.n1() {
            let common = f.points_above(x).intersection(f.points_above(y)).len();
            if best.is_none_or(|(c, _, _)| common > c) {
                best = Some((common, x, y));
            }
        }
    }
    let mut p4 = ConditionReport::new(Condition::P4);
    match best {
        Some((c, x, y)) => {
            p4 = p4
                .param("max_common_upper", c)
                .param("pair", json!([f.label_h1(x), f.label_h1(y)]));
        }
        None => p4 = p4.param("max_common_upper", 0),
    }
    vec![p1, p2, p3, p4]
}

/// The largest number of points shared by two distinct curves.
pub fn p4_bound(f: &PosetFragment) -> usize {
    (0..f.n1())
        .flat_map(|x| (x + 1..f.n1()).map(move |y| (x, y)))
        .map(|(x, y)| f.points_above(x).intersection(f.points_above(y)).len())
        .max()
        .unwrap_or(0)
}

/// A curve `w` below all of `t` such that every point above both `w` and
/// some `s ∈ S` lies in `T`. `w ∈ S` never qualifies: a single curve has
/// unboundedly many points above it.
pub fn find_p5_witness(f: &PosetFragment, s: &IdxSet, t: &IdxSet) -> Result<Option<usize>> {
    if s.is_empty() || t.is_empty() {
        return Err(Error::EmptySet("P5 witness search"));
    }
    Ok(f.below_all(t).iter().find(|&w| p5_clauses_hold(f, s, t, w)))
}

fn p5_clauses_hold(f: &PosetFragment, s: &IdxSet, t: &IdxSet, w: usize) -> bool {
    !s.contains(w)
        && s
            .iter()
            .all(|x| f.points_above(x).intersection(f.points_above(w)).is_subset(t))
}

/// P5 over every instance with `|S| ≤ smax` and `|T| ≤ tmax`.
pub fn check_p5(f: &PosetFragment, smax: usize, tmax: usize) -> ConditionReport {
    let mut report = ConditionReport::new(Condition::P5)
        .param("smax", smax)
        .param("tmax", tmax);
    let mut checked = 0usize;
    for s in subsets_by_size(&f.curves(), 1, smax) {
        for t in subsets_by_size(&f.points(), 1, tmax) {
            checked += 1;
            if find_p5_witness(f, &s, &t).unwrap().is_none() {
                report.fail(json!({ "S": h1_json(f, &s), "T": h2_json(f, &t) }), None);
            }
        }
    }
    report.param("instances_checked", checked)
}

pub fn check_j1(f: &PosetFragment) -> ConditionReport {
    let mut r = ConditionReport::new(Condition::J1)
        .param("dim", f.dim())
        .param("mub_finite", true);
    if f.dim() != 2 {
        r.fail(json!({ "dim": f.dim() }), None);
    }
    r
}

pub fn check_j2(f: &PosetFragment, k: usize) -> ConditionReport {
    let mut r = ConditionReport::new(Condition::J2).param("k", k);
    for x in 0..f.n1() {
        let above = f.points_above(x).len();
        if above < k {
            r.fail(json!({ "x": f.label_h1(x), "above": above }), None);
        }
    }
    r
}

/// First `K` (by size, then lexicographically) with `K ⊆ L(m)`, `K ∩ F = ∅`,
/// `|K| ≤ size_cap` and `mub K = {m}`.
///
/// Restricting to curves below `m` loses nothing: `mub K = {m}` forces `K < m`.
pub fn find_j3_witness(f: &PosetFragment, m: usize, avoid: &IdxSet, size_cap: usize) -> Option<IdxSet> {
    let target = IdxSet::singleton(m);
    let candidates = f.curves_below(m).difference(avoid);
    subsets_by_size(&candidates, 2, size_cap).find(|k| f.common_points(k) == target)
}

/// J3 for every point and every avoided set with `|F| ≤ fmax`.
///
/// Rather than listing all `F`, the search branches on the members of each
/// witness found: an `F` disjoint from the witness for a subset of itself is
/// already served, and the witness sets only shrink as `F` grows. This visits
/// at most `1 + c + c² + …` avoided sets per point.
pub fn check_j3(f: &PosetFragment, fmax: usize, size_cap: usize) -> ConditionReport {
    let mut r = ConditionReport::new(Condition::J3)
        .param("fmax", fmax)
        .param("size_cap", size_cap);
    for m in 0..f.n2() {
        let mut stack = vec![IdxSet::empty()];
        let mut seen = std::collections::HashSet::new();
        while let Some(avoid) = stack.pop() {
            if !seen.insert(avoid) {
                continue;
            }
            let instance = json!({ "m": f.label_h2(m), "F": h1_json(f, &avoid) });
            match find_j3_witness(f, m, &avoid, size_cap) {
                None => r.fail(instance, None),
                Some(k) => {
                    if avoid.len() < fmax {
                        for x in k.iter() {
                            let mut next = avoid;
                            next.insert(x);
                            stack.push(next);
                        }
                    }
                }
            }
        }
    }
    r
}

/// Every `T` with `1 ≤ |T| ≤ tmax` has a curve below all of it.
pub fn check_j4(f: &PosetFragment, tmax: usize) -> ConditionReport {
    let mut r = ConditionReport::new(Condition::J4).param("tmax", tmax);
    let mut checked = 0usize;
    for t in subsets_by_size(&f.points(), 1, tmax) {
        checked += 1;
        if f.below_all(&t).is_empty() {
            r.fail(json!({ "T": h2_json(f, &t) }), None);
        }
    }
    r.param("instances_checked", checked)
}

/// Result of searching for `t ∉ S` below all of `T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialT {
    /// First qualifying curve by index.
    pub direct: Option<usize>,
    /// Via a point `v` above no member of `S`, then a curve below `T ∪ {v}`.
    pub recipe: Option<usize>,
    pub recipe_point: Option<usize>,
}

impl SpecialT {
    pub fn t(&self) -> Option<usize> {
        self.direct.or(self.recipe)
    }
}

pub fn find_special_t(f: &PosetFragment, s: &IdxSet, t: &IdxSet) -> Result<SpecialT> {
    if t.is_empty() {
        return Err(Error::EmptySet("special t search"));
    }
    let lower = f.below_all(t);
    let direct = lower.difference(s).first();

    let covered = s
        .iter()
        .fold(IdxSet::empty(), |acc, x| acc.union(f.points_above(x)));
    let mut recipe = None;
    let mut recipe_point = None;
    for v in f.points().difference(&covered).iter() {
        if let Some(t) = lower.intersection(f.curves_below(v)).first() {
            recipe = Some(t);
            recipe_point = Some(v);
            break;
        }
    }
    if let Some(r) = recipe {
        // anything below a point that no member of S reaches avoids S
        debug_assert!(!s.contains(r) && lower.contains(r));
    }
    Ok(SpecialT {
        direct,
        recipe,
        recipe_point,
    })
}

/// Thresholds for the pre-reconstruction witness battery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatteryParams {
    pub j2_k: usize,
    pub j3_fmax: usize,
    pub j3_size_cap: usize,
    pub j4_tmax: usize,
}

impl Default for BatteryParams {
    fn default() -> Self {
        BatteryParams {
            j2_k: 2,
            j3_fmax: 2,
            j3_size_cap: 2,
            j4_tmax: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub passed: bool,
    pub params: BatteryParams,
    pub reports: Vec<ConditionReport>,
}

impl BatteryReport {
    /// One line per failing check.
    pub fn reasons(&self) -> Vec<String> {
        self.reports
            .iter()
            .filter(|r| !r.holds)
            .map(|r| {
                let first = r
                    .failures()
                    .next()
                    .map(|w| w.instance.to_string())
                    .unwrap_or_default();
                format!(
                    "{:?} fails ({} instance(s), first {})",
                    r.condition,
                    r.failures().count(),
                    first
                )
            })
            .collect()
    }
}

pub fn run_battery(f: &PosetFragment, params: &BatteryParams) -> BatteryReport {
    let reports = vec![
        check_j2(f, params.j2_k),
        check_j3(f, params.j3_fmax, params.j3_size_cap),
        check_j4(f, params.j4_tmax),
    ];
    BatteryReport {
        passed: reports.iter().all(|r| r.holds),
        params: *params,
        reports,
    }
}

/// Every check at once, in condition order.
pub fn check_all(f: &PosetFragment, k: usize, size_cap: usize, tmax: usize) -> Vec<ConditionReport> {
    let mut out = check_p1_to_p4(f, k);
    out.push(check_p5(f, 1, 1));
    out.push(check_j1(f));
    out.push(check_j2(f, k));
    out.push(check_j3(f, 1, size_cap));
    out.push(check_j4(f, tmax));
    out
}
