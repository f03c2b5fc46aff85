//! Finite fragments of two-dimensional posets with a unique minimal node.
//!
//! A fragment is determined by its height-one elements ("curves"), its
//! height-two elements ("points") and the incidence relation between them.
//! The order is: the minimal node lies below everything, a curve lies below
//! exactly the points it is incident to, and there are no other strict
//! relations. Transitivity is therefore a property of the representation.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{IdxSet, MAX_TIER};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Min,
    H1,
    H2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementId {
    pub tier: Tier,
    pub index: usize,
}

impl ElementId {
    pub const MIN: ElementId = ElementId {
        tier: Tier::Min,
        index: 0,
    };

    pub fn h1(index: usize) -> Self {
        ElementId {
            tier: Tier::H1,
            index,
        }
    }

    pub fn h2(index: usize) -> Self {
        ElementId {
            tier: Tier::H2,
            index,
        }
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tier {
            Tier::Min => write!(f, "min"),
            Tier::H1 => write!(f, "h1[{}]", self.index),
            Tier::H2 => write!(f, "h2[{}]", self.index),
        }
    }
}

/// A subset of the whole fragment, split by tier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ElementSet {
    pub min: bool,
    pub h1: IdxSet,
    pub h2: IdxSet,
}

impl ElementSet {
    pub fn h1(h1: IdxSet) -> Self {
        ElementSet {
            h1,
            ..Default::default()
        }
    }

    pub fn h2(h2: IdxSet) -> Self {
        ElementSet {
            h2,
            ..Default::default()
        }
    }

    pub fn from_ids(ids: impl IntoIterator<Item = ElementId>) -> Self {
        let mut s = ElementSet::default();
        for id in ids {
            s.insert(id);
        }
        s
    }

    pub fn insert(&mut self, id: ElementId) {
        match id.tier {
            Tier::Min => self.min = true,
            Tier::H1 => {
                self.h1.insert(id.index);
            }
            Tier::H2 => {
                self.h2.insert(id.index);
            }
        }
    }

    pub fn contains(&self, id: ElementId) -> bool {
        match id.tier {
            Tier::Min => self.min,
            Tier::H1 => self.h1.contains(id.index),
            Tier::H2 => self.h2.contains(id.index),
        }
    }

    pub fn len(&self) -> usize {
        self.min as usize + self.h1.len() + self.h2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.min
            .then_some(ElementId::MIN)
            .into_iter()
            .chain(self.h1.iter().map(ElementId::h1))
            .chain(self.h2.iter().map(ElementId::h2))
    }

    pub fn difference(&self, other: &Self) -> Self {
        ElementSet {
            min: self.min && !other.min,
            h1: self.h1.difference(&other.h1),
            h2: self.h2.difference(&other.h2),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        (!self.min || other.min) && self.h1.is_subset(&other.h1) && self.h2.is_subset(&other.h2)
    }
}

/// Display names for curves and points. Never consulted by order computations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub h1: Vec<String>,
    pub h2: Vec<String>,
}

/// Size caps applied by validation and by the loader.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_tier: usize,
}

impl Limits {
    pub const DEFAULT_MAX_TIER: usize = 64;

    pub fn new(max_tier: usize) -> Result<Self> {
        if max_tier == 0 || max_tier > MAX_TIER {
            return Err(Error::SizeBound {
                what: "tier cap",
                got: max_tier,
                limit: MAX_TIER,
            });
        }
        Ok(Limits { max_tier })
    }

    /// The largest supported cap.
    pub fn wide() -> Self {
        Limits {
            max_tier: MAX_TIER,
        }
    }
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_tier: Self::DEFAULT_MAX_TIER,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Invalid(self.violations))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetFragment {
    n1: usize,
    n2: usize,
    /// Points above each curve.
    up: Vec<IdxSet>,
    /// Curves below each point.
    down: Vec<IdxSet>,
    labels: Option<Labels>,
}

impl PosetFragment {
    /// Build a fragment from its incidence pairs `(curve, point)`.
    ///
    /// Only index ranges are checked here; semantic invariants are left to
    /// [`PosetFragment::validate`] so that malformed fragments can still be
    /// inspected.
    pub fn new(
        n1: usize,
        n2: usize,
        incidence: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        for (what, n) in [("curve count", n1), ("point count", n2)] {
            if n > MAX_TIER {
                return Err(Error::SizeBound {
                    what,
                    got: n,
                    limit: MAX_TIER,
                });
            }
        }
        let mut up = vec![IdxSet::empty(); n1];
        let mut down = vec![IdxSet::empty(); n2];
        for (i, j) in incidence {
            if i >= n1 || j >= n2 {
                return Err(Error::Format(format!(
                    "incidence pair [{i}, {j}] out of range for n1 = {n1}, n2 = {n2}"
                )));
            }
            up[i].insert(j);
            down[j].insert(i);
        }
        Ok(PosetFragment {
            n1,
            n2,
            up,
            down,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        if labels.h1.len() != self.n1 || labels.h2.len() != self.n2 {
            return Err(Error::Label(format!(
                "expected {} curve and {} point labels, got {} and {}",
                self.n1,
                self.n2,
                labels.h1.len(),
                labels.h2.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn curves(&self) -> IdxSet {
        IdxSet::full(self.n1)
    }

    pub fn points(&self) -> IdxSet {
        IdxSet::full(self.n2)
    }

    /// Points strictly above curve `x`.
    pub fn points_above(&self, x: usize) -> &IdxSet {
        &self.up[x]
    }

    /// Curves strictly below point `m`.
    pub fn curves_below(&self, m: usize) -> &IdxSet {
        &self.down[m]
    }

    pub fn incident(&self, x: usize, m: usize) -> bool {
        self.up[x].contains(m)
    }

    /// Incidence pairs in lexicographic order.
    pub fn incidence(&self) -> Vec<(usize, usize)> {
        self.up
            .iter()
            .enumerate()
            .flat_map(|(i, ps)| ps.iter().map(move |j| (i, j)))
            .collect()
    }

    pub fn incidence_count(&self) -> usize {
        self.up.iter().map(IdxSet::len).sum()
    }

    /// Points lying above every curve of `k`. For empty `k` this is every point.
    pub fn common_points(&self, k: &IdxSet) -> IdxSet {
        k.iter()
            .fold(self.points(), |acc, x| acc.intersection(&self.up[x]))
    }

    /// Curves lying below every point of `b`. For empty `b` this is every curve.
    pub fn below_all(&self, b: &IdxSet) -> IdxSet {
        b.iter()
            .fold(self.curves(), |acc, m| acc.intersection(&self.down[m]))
    }

    /// Minimal upper bounds of a set of at least two curves, which are always
    /// points: the points above every member.
    pub fn curve_mub(&self, k: &IdxSet) -> IdxSet {
        debug_assert!(k.len() >= 2);
        self.common_points(k)
    }

    /// Whether `mub K = B` for a curve set `K` and point set `B`.
    pub fn mub_is(&self, k: &IdxSet, b: &IdxSet) -> bool {
        k.len() >= 2 && self.common_points(k) == *b
    }

    pub fn label_h1(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l.h1[i].clone(),
            None => format!("x{i}"),
        }
    }

    pub fn label_h2(&self, j: usize) -> String {
        match &self.labels {
            Some(l) => l.h2[j].clone(),
            None => format!("p{j}"),
        }
    }

    pub fn label(&self, id: ElementId) -> String {
        match id.tier {
            Tier::Min => "0".to_string(),
            Tier::H1 => self.label_h1(id.index),
            Tier::H2 => self.label_h2(id.index),
        }
    }

    pub fn format_h1_set(&self, s: &IdxSet) -> String {
        s.iter().map(|i| self.label_h1(i)).collect::<Vec<_>>().join(",")
    }

    pub fn format_h2_set(&self, s: &IdxSet) -> String {
        s.iter().map(|j| self.label_h2(j)).collect::<Vec<_>>().join(",")
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_with(Limits::default())
    }

    pub fn validate_with(&self, limits: Limits) -> ValidationReport {
        let mut violations = Vec::new();
        if self.n1 == 0 {
            violations.push("n1 must be at least 1".to_string());
        }
        if self.n2 == 0 {
            violations.push("n2 must be at least 1".to_string());
        }
        if self.n1 > limits.max_tier {
            violations.push(format!("n1 = {} exceeds tier cap {}", self.n1, limits.max_tier));
        }
        if self.n2 > limits.max_tier {
            violations.push(format!("n2 = {} exceeds tier cap {}", self.n2, limits.max_tier));
        }
        for (j, below) in self.down.iter().enumerate() {
            if below.is_empty() {
                violations.push(format!(
                    "height-2 element {} has height < 2 (no height-1 element below it)",
                    self.label_h2(j)
                ));
            }
        }
        if let Some(l) = &self.labels {
            for (tier, names) in [("h1", &l.h1), ("h2", &l.h2)] {
                let mut seen = BTreeSet::new();
                for name in names.iter() {
                    if name.is_empty() || name.contains([',', '|']) || name.trim() != name {
                        violations.push(format!("{tier} label {name:?} is not a plain name"));
                    }
                    if !seen.insert(name) {
                        violations.push(format!("{tier} label {name:?} is used twice"));
                    }
                }
            }
        }
        // The order is derived from incidence; re-check the poset axioms on
        // small fragments anyway so a representation bug cannot hide.
        if violations.is_empty() && self.n1 + self.n2 < 48 {
            let all = self.all_elements();
            for &x in &all {
                if !self.leq_unchecked(x, x) {
                    violations.push(format!("reflexivity fails at {x}"));
                }
                for &y in &all {
                    if x != y && self.leq_unchecked(x, y) && self.leq_unchecked(y, x) {
                        violations.push(format!("antisymmetry fails at {x}, {y}"));
                    }
                    for &z in &all {
                        if self.leq_unchecked(x, y)
                            && self.leq_unchecked(y, z)
                            && !self.leq_unchecked(x, z)
                        {
                            violations.push(format!("transitivity fails at {x}, {y}, {z}"));
                        }
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    pub fn all_elements(&self) -> Vec<ElementId> {
        std::iter::once(ElementId::MIN)
            .chain((0..self.n1).map(ElementId::h1))
            .chain((0..self.n2).map(ElementId::h2))
            .collect()
    }

    pub fn universe(&self) -> ElementSet {
        ElementSet {
            min: true,
            h1: self.curves(),
            h2: self.points(),
        }
    }

    fn owns(&self, x: ElementId) -> bool {
        match x.tier {
            Tier::Min => x.index == 0,
            Tier::H1 => x.index < self.n1,
            Tier::H2 => x.index < self.n2,
        }
    }

    fn check_owned(&self, x: ElementId) -> Result<()> {
        if self.owns(x) {
            Ok(())
        } else {
            Err(Error::ForeignElement(x))
        }
    }

    fn check_set(&self, s: &ElementSet) -> Result<()> {
        s.ids().try_for_each(|x| self.check_owned(x))
    }

    fn leq_unchecked(&self, x: ElementId, y: ElementId) -> bool {
        match (x.tier, y.tier) {
            (Tier::Min, _) => true,
            (Tier::H1, Tier::H1) | (Tier::H2, Tier::H2) => x.index == y.index,
            (Tier::H1, Tier::H2) => self.up[x.index].contains(y.index),
            _ => false,
        }
    }

    pub fn leq(&self, x: ElementId, y: ElementId) -> Result<bool> {
        self.check_owned(x)?;
        self.check_owned(y)?;
        Ok(self.leq_unchecked(x, y))
    }

    pub fn lt(&self, x: ElementId, y: ElementId) -> Result<bool> {
        Ok(x != y && self.leq(x, y)?)
    }

    /// `G(A)`: every element lying above all of `a`. The empty set is bounded
    /// by everything.
    pub fn upper_set(&self, a: &ElementSet) -> Result<ElementSet> {
        self.check_set(a)?;
        let mut out = ElementSet::default();
        match a.h2.len() {
            0 => {
                out.h2 = self.common_points(&a.h1);
                out.h1 = match a.h1.len() {
                    0 => self.curves(),
                    1 => a.h1,
                    _ => IdxSet::empty(),
                };
                out.min = a.h1.is_empty();
            }
            1 => {
                let m = a.h2.first().unwrap();
                if a.h1.is_subset(&self.down[m]) {
                    out.h2 = a.h2;
                }
            }
            _ => {}
        }
        Ok(out)
    }

    /// `G*(A) = G(A) \ A`.
    pub fn strict_upper_set(&self, a: &ElementSet) -> Result<ElementSet> {
        Ok(self.upper_set(a)?.difference(a))
    }

    /// `L(A)`: every element lying below all of `a`.
    pub fn lower_set(&self, a: &ElementSet) -> Result<ElementSet> {
        self.check_set(a)?;
        let mut out = ElementSet {
            min: true,
            ..Default::default()
        };
        if a.min {
            return Ok(out);
        }
        match a.h1.len() {
            0 => {
                out.h1 = self.below_all(&a.h2);
                out.h2 = match a.h2.len() {
                    0 => self.points(),
                    1 => a.h2,
                    _ => IdxSet::empty(),
                };
            }
            1 => {
                let x = a.h1.first().unwrap();
                if a.h2.is_subset(&self.up[x]) {
                    out.h1 = a.h1;
                }
            }
            _ => {}
        }
        Ok(out)
    }

    /// `L*(A) = L(A) \ A`.
    pub fn strict_lower_set(&self, a: &ElementSet) -> Result<ElementSet> {
        Ok(self.lower_set(a)?.difference(a))
    }

    /// Minimal elements of a set.
    pub fn minimal(&self, s: &ElementSet) -> ElementSet {
        if s.min {
            return ElementSet {
                min: true,
                ..Default::default()
            };
        }
        let mut out = ElementSet::h1(s.h1);
        for m in s.h2.iter() {
            if s.h1.is_disjoint(&self.down[m]) {
                out.h2.insert(m);
            }
        }
        out
    }

    /// `mub A = min G(A)`.
    pub fn mub(&self, a: &ElementSet) -> Result<ElementSet> {
        if a.is_empty() {
            return Err(Error::EmptySet("mub"));
        }
        Ok(self.minimal(&self.upper_set(a)?))
    }

    pub fn height(&self, x: ElementId) -> Result<usize> {
        self.check_owned(x)?;
        Ok(match x.tier {
            Tier::Min => 0,
            Tier::H1 => 1,
            Tier::H2 => 2,
        })
    }

    pub fn dim(&self) -> usize {
        if self.incidence_count() > 0 {
            2
        } else if self.n1 + self.n2 > 0 {
            1
        } else {
            0
        }
    }

    /// Resolve a curve label to its index.
    pub fn find_h1(&self, label: &str) -> Result<usize> {
        find_label(label, (0..self.n1).map(|i| self.label_h1(i)), "curve")
    }

    /// Resolve a point label to its index.
    pub fn find_h2(&self, label: &str) -> Result<usize> {
        find_label(label, (0..self.n2).map(|j| self.label_h2(j)), "point")
    }

    /// Parse a comma separated list of curve labels.
    pub fn parse_h1_set(&self, text: &str) -> Result<IdxSet> {
        split_labels(text)
            .map(|l| self.find_h1(l))
            .collect::<Result<IdxSet>>()
    }

    /// Parse a comma separated list of point labels.
    pub fn parse_h2_set(&self, text: &str) -> Result<IdxSet> {
        split_labels(text)
            .map(|l| self.find_h2(l))
            .collect::<Result<IdxSet>>()
    }
}

fn split_labels(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn find_label(label: &str, names: impl Iterator<Item = String>, kind: &str) -> Result<usize> {
    let hits: Vec<usize> = names
        .enumerate()
        .filter(|(_, n)| n == label)
        .map(|(i, _)| i)
        .collect();
    match hits.as_slice() {
        [i] => Ok(*i),
        [] => Err(Error::Label(format!("no {kind} labelled {label:?}"))),
        _ => Err(Error::Label(format!("{kind} label {label:?} is ambiguous"))),
    }
}

/// A tier-preserving bijection between two fragments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoMap {
    pub h1: Vec<usize>,
    pub h2: Vec<usize>,
}

impl IsoMap {
    pub fn identity(fragment: &PosetFragment) -> Self {
        IsoMap {
            h1: (0..fragment.n1).collect(),
            h2: (0..fragment.n2).collect(),
        }
    }

    pub fn map_h1(&self, s: &IdxSet) -> IdxSet {
        s.map(|i| self.h1[i])
    }

    pub fn map_h2(&self, s: &IdxSet) -> IdxSet {
        s.map(|j| self.h2[j])
    }

    pub fn map_element(&self, x: ElementId) -> ElementId {
        match x.tier {
            Tier::Min => x,
            Tier::H1 => ElementId::h1(self.h1[x.index]),
            Tier::H2 => ElementId::h2(self.h2[x.index]),
        }
    }

    pub fn inverse(&self) -> IsoMap {
        IsoMap {
            h1: invert(&self.h1),
            h2: invert(&self.h2),
        }
    }

    /// Bijectivity per tier and incidence preservation in both directions.
    pub fn check(&self, source: &PosetFragment, target: &PosetFragment) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        if self.h1.len() != source.n1 || source.n1 != target.n1 {
            problems.push(format!(
                "curve tiers disagree: map {} source {} target {}",
                self.h1.len(),
                source.n1,
                target.n1
            ));
        }
        if self.h2.len() != source.n2 || source.n2 != target.n2 {
            problems.push(format!(
                "point tiers disagree: map {} source {} target {}",
                self.h2.len(),
                source.n2,
                target.n2
            ));
        }
        if !problems.is_empty() {
            return Err(problems);
        }
        if !is_permutation(&self.h1) {
            problems.push("curve map is not a bijection".to_string());
        }
        if !is_permutation(&self.h2) {
            problems.push("point map is not a bijection".to_string());
        }
        if !problems.is_empty() {
            return Err(problems);
        }
        for x in 0..source.n1 {
            for m in 0..source.n2 {
                if source.incident(x, m) != target.incident(self.h1[x], self.h2[m]) {
                    problems.push(format!(
                        "incidence of ({}, {}) not preserved",
                        source.label_h1(x),
                        source.label_h2(m)
                    ));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }
}

fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter()
        .all(|&p| p < perm.len() && !std::mem::replace(&mut seen[p], true))
}

/// Apply explicit per-tier permutations; labels travel with their elements.
pub fn relabel_with(fragment: &PosetFragment, map: &IsoMap) -> Result<PosetFragment> {
    let n1 = fragment.n1;
    let n2 = fragment.n2;
    if map.h1.len() != n1 || map.h2.len() != n2 || !is_permutation(&map.h1) || !is_permutation(&map.h2)
    {
        return Err(Error::Format("relabeling is not a per-tier permutation".into()));
    }
    let target = PosetFragment::new(
        n1,
        n2,
        fragment
            .incidence()
            .into_iter()
            .map(|(i, j)| (map.h1[i], map.h2[j])),
    )?;
    match &fragment.labels {
        Some(l) => {
            let inv = map.inverse();
            target.with_labels(Labels {
                h1: inv.h1.iter().map(|&i| l.h1[i].clone()).collect(),
                h2: inv.h2.iter().map(|&j| l.h2[j].clone()).collect(),
            })
        }
        None => Ok(target),
    }
}

/// An isomorphic copy of `fragment` under seeded uniformly random per-tier
/// permutations, together with the witnessing map.
pub fn relabel(fragment: &PosetFragment, seed: u64) -> (PosetFragment, IsoMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h1: Vec<usize> = (0..fragment.n1).collect();
    let mut h2: Vec<usize> = (0..fragment.n2).collect();
    h1.shuffle(&mut rng);
    h2.shuffle(&mut rng);
    let map = IsoMap { h1, h2 };
    let target = relabel_with(fragment, &map).expect("shuffled maps are permutations");
    (target, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::f0;

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 0;
    const E: usize = 1;

    fn h1s(ix: &[usize]) -> ElementSet {
        ElementSet::h1(ix.iter().copied().collect())
    }

    #[test]
    fn f0_is_valid() {
        assert!(f0().validate().is_valid());
    }

    #[test]
    fn point_without_curves_is_rejected() {
        let f = PosetFragment::new(1, 2, [(0, 0)]).unwrap();
        let report = f.validate();
        assert!(!report.is_valid());
        assert!(report.violations[0].contains("height-2 element p1 has height < 2"));
    }

    #[test]
    fn empty_tier_is_rejected() {
        let f = PosetFragment::new(0, 1, []).unwrap();
        assert!(!f.validate().is_valid());
    }

    #[test]
    fn tier_cap_is_configurable() {
        let f = PosetFragment::new(70, 1, (0..70).map(|i| (i, 0))).unwrap();
        assert!(!f.validate().is_valid());
        assert!(f.validate_with(Limits::new(128).unwrap()).is_valid());
        assert!(Limits::new(513).is_err());
    }

    #[test]
    fn leq_examples() {
        let f = f0();
        assert!(f.leq(ElementId::h1(A), ElementId::h2(D)).unwrap());
        assert!(!f.leq(ElementId::h1(C), ElementId::h2(E)).unwrap());
        assert!(f.leq(ElementId::h2(D), ElementId::h2(D)).unwrap());
        assert!(f.leq(ElementId::MIN, ElementId::h2(E)).unwrap());
        assert!(!f.leq(ElementId::h2(D), ElementId::h1(A)).unwrap());
        assert!(matches!(
            f.leq(ElementId::h1(7), ElementId::h2(D)),
            Err(Error::ForeignElement(_))
        ));
    }

    #[test]
    fn upper_and_lower_sets() {
        let f = f0();
        assert_eq!(
            f.upper_set(&h1s(&[A, B])).unwrap(),
            ElementSet::h2([D, E].into())
        );
        let mut expected = ElementSet::h1([C].into());
        expected.h2.insert(D);
        assert_eq!(f.upper_set(&h1s(&[C])).unwrap(), expected);
        let lower = f.lower_set(&ElementSet::h2([D, E].into())).unwrap();
        assert_eq!(
            lower,
            ElementSet {
                min: true,
                h1: [A, B].into(),
                h2: IdxSet::empty()
            }
        );
        assert_eq!(f.upper_set(&ElementSet::default()).unwrap(), f.universe());
        assert_eq!(
            f.strict_upper_set(&h1s(&[C])).unwrap(),
            ElementSet::h2([D].into())
        );
        let strict = f.strict_lower_set(&ElementSet::h2([D].into())).unwrap();
        assert_eq!(strict.h1, IdxSet::from([A, B, C]));
        assert!(strict.min && strict.h2.is_empty());
    }

    #[test]
    fn mub_examples() {
        let f = f0();
        assert_eq!(
            f.mub(&h1s(&[A, B])).unwrap(),
            ElementSet::h2([D, E].into())
        );
        assert_eq!(f.mub(&h1s(&[A, C])).unwrap(), ElementSet::h2([D].into()));
        assert_eq!(f.mub(&h1s(&[A])).unwrap(), h1s(&[A]));
        assert!(matches!(
            f.mub(&ElementSet::default()),
            Err(Error::EmptySet(_))
        ));
    }

    #[test]
    fn heights() {
        let f = f0();
        assert_eq!(f.height(ElementId::h1(A)).unwrap(), 1);
        assert_eq!(f.height(ElementId::h2(D)).unwrap(), 2);
        assert_eq!(f.height(ElementId::MIN).unwrap(), 0);
        assert_eq!(f.dim(), 2);
    }

    #[test]
    fn relabel_identity_and_swap() {
        let f = f0();
        let id = IsoMap::identity(&f);
        assert_eq!(relabel_with(&f, &id).unwrap(), f);

        let swap = IsoMap {
            h1: vec![0, 1, 2],
            h2: vec![1, 0],
        };
        let g = relabel_with(&f, &swap).unwrap().without_labels();
        let expected = PosetFragment::new(3, 2, [(0, 1), (0, 0), (1, 1), (1, 0), (2, 1)]).unwrap();
        assert_eq!(g, expected);
        assert!(swap.check(&f, &g).is_ok());
    }

    #[test]
    fn relabel_is_seeded() {
        let f = f0();
        let (g1, m1) = relabel(&f, 11);
        let (g2, m2) = relabel(&f, 11);
        assert_eq!(g1, g2);
        assert_eq!(m1, m2);
        assert!(m1.check(&f, &g1).is_ok());
        assert_eq!(m1.inverse().inverse(), m1);
    }

    #[test]
    fn check_detects_broken_incidence() {
        let f = f0();
        let bad = IsoMap {
            h1: vec![2, 1, 0],
            h2: vec![0, 1],
        };
        assert!(bad.check(&f, &f).is_err());
    }

    #[test]
    fn labels_resolve() {
        let f = f0();
        assert_eq!(f.parse_h1_set("a, c").unwrap(), IdxSet::from([A, C]));
        assert_eq!(f.parse_h2_set("e").unwrap(), IdxSet::from([E]));
        assert!(f.parse_h1_set("z").is_err());
        let dup = PosetFragment::new(2, 1, [(0, 0), (1, 0)])
            .unwrap()
            .with_labels(Labels {
                h1: vec!["q".into(), "q".into()],
                h2: vec!["m".into()],
            })
            .unwrap();
        assert!(dup.find_h1("q").is_err());
        assert!(!dup.validate().is_valid());
    }
}
