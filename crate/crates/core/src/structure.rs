//! The structure poset of a fragment and its fibers.
//!
//! A node `(A|B)` pairs a nonempty set of curves `A` with a nonempty set of
//! points `B` such that some member of `A` lies below every point of `B`.
//! Besides these finite nodes there is one ray node per curve `x`, standing
//! for `x` together with everything above it.
//!
//! Fragments are finite windows onto infinite posets in which every curve has
//! infinitely many points above it. The domination test models this: the
//! points above a single curve are never contained in a finite second
//! ordinate, so the witness `W = {a}` for `a` in the lower node's first
//! ordinate never passes the closure clause. Points common to two or more
//! distinct curves are assumed to be fully visible in the fragment.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bits::{subsets_by_size, IdxSet};
use crate::conditions::find_j3_witness;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::poset::{IsoMap, PosetFragment};
use crate::small_poset::{small_poset_isomorphic, SmallPoset};

/// Subset enumeration over a first ordinate is limited to this many curves.
pub const MAX_ENUM: usize = 16;

pub const DEFAULT_AMAX: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrNode {
    Finite { a: IdxSet, b: IdxSet },
    /// A curve together with all points above it.
    Ray(usize),
}

impl StrNode {
    pub fn finite(a: impl Into<IdxSet>, b: impl Into<IdxSet>) -> Self {
        StrNode::Finite {
            a: a.into(),
            b: b.into(),
        }
    }

    /// First ordinate.
    pub fn first(&self) -> IdxSet {
        match *self {
            StrNode::Finite { a, .. } => a,
            StrNode::Ray(x) => IdxSet::singleton(x),
        }
    }

    /// Second ordinate of a finite node.
    pub fn second(&self) -> Option<IdxSet> {
        match *self {
            StrNode::Finite { b, .. } => Some(b),
            StrNode::Ray(_) => None,
        }
    }

    pub fn is_ray(&self) -> bool {
        matches!(self, StrNode::Ray(_))
    }

    /// Finite stand-in for a ray: the curve with the points above it that
    /// the fragment shows.
    pub fn materialize(&self, f: &PosetFragment) -> StrNode {
        match *self {
            StrNode::Ray(x) => StrNode::Finite {
                a: IdxSet::singleton(x),
                b: *f.points_above(x),
            },
            node => node,
        }
    }

    /// Image under a fragment isomorphism.
    pub fn map(&self, rho: &IsoMap) -> StrNode {
        match self {
            StrNode::Finite { a, b } => StrNode::Finite {
                a: rho.map_h1(a),
                b: rho.map_h2(b),
            },
            StrNode::Ray(x) => StrNode::Ray(rho.h1[*x]),
        }
    }

    pub fn is_member(&self, f: &PosetFragment) -> bool {
        match self {
            StrNode::Finite { a, b } => str_member(f, a, b),
            StrNode::Ray(x) => *x < f.n1() && !f.points_above(*x).is_empty(),
        }
    }

    pub fn display(&self, f: &PosetFragment) -> String {
        match self {
            StrNode::Finite { a, b } => {
                format!("({}|{})", f.format_h1_set(a), f.format_h2_set(b))
            }
            StrNode::Ray(x) => format!("({}|G({}))", f.label_h1(*x), f.label_h1(*x)),
        }
    }

    /// Parse `a,b|d,e` using fragment labels; `x|*` denotes the ray of `x`.
    pub fn parse(f: &PosetFragment, text: &str) -> Result<StrNode> {
        let (lhs, rhs) = text
            .split_once('|')
            .ok_or_else(|| Error::Label(format!("node {text:?} lacks a '|' separator")))?;
        if rhs.trim() == "*" {
            return Ok(StrNode::Ray(f.find_h1(lhs.trim())?));
        }
        Ok(StrNode::Finite {
            a: f.parse_h1_set(lhs)?,
            b: f.parse_h2_set(rhs)?,
        })
    }
}

/// Membership of a finite pair.
pub fn str_member(f: &PosetFragment, a: &IdxSet, b: &IdxSet) -> bool {
    !a.is_empty()
        && !b.is_empty()
        && a.iter().all(|x| x < f.n1())
        && b.iter().all(|m| m < f.n2())
        && a.intersects(&f.below_all(b))
}

fn require_member(f: &PosetFragment, node: &StrNode) -> Result<()> {
    if node.is_member(f) {
        Ok(())
    } else {
        Err(Error::NotMember {
            a: node.first().to_vec(),
            b: node.second().map(|b| b.to_vec()).unwrap_or_default(),
        })
    }
}

/// The largest admissible domination witness: members of `c` below all of `d`.
pub fn w_max(f: &PosetFragment, c: &IdxSet, d: &IdxSet) -> IdxSet {
    c.intersection(&f.below_all(d))
}

/// Domination test for nodes already known to be members.
fn dominates_unchecked(f: &PosetFragment, upper: &StrNode, lower: &StrNode, w: &IdxSet) -> bool {
    let StrNode::Finite { a: c, b: d } = upper else {
        // a ray's first ordinate is a singleton and cannot strictly contain
        // a nonempty set
        return false;
    };
    let a = lower.first();
    // E1
    if !(a.is_subset(c) && a != *c) {
        return false;
    }
    let d_in_b = match lower {
        StrNode::Finite { b, .. } => d.is_subset(b),
        StrNode::Ray(x) => d.is_subset(f.points_above(*x)),
    };
    if !d_in_b {
        return false;
    }
    // E2
    if w.is_empty() || !w.is_subset(c) || !w.is_subset(&f.below_all(d)) {
        return false;
    }
    // E3
    let w_points = f.common_points(w);
    a.iter().all(|x| {
        if w.only() == Some(x) {
            return false;
        }
        w_points.intersection(f.points_above(x)).is_subset(d)
    })
}

/// Whether `upper` dominates `lower` via `w`.
pub fn dominates_via(
    f: &PosetFragment,
    upper: &StrNode,
    lower: &StrNode,
    w: &IdxSet,
) -> Result<bool> {
    require_member(f, upper)?;
    require_member(f, lower)?;
    Ok(dominates_unchecked(f, upper, lower, w))
}

/// The structure order, decided with the single witness [`w_max`].
pub fn str_leq(f: &PosetFragment, lhs: &StrNode, rhs: &StrNode) -> Result<bool> {
    Ok(str_leq_witness(f, lhs, rhs)?.is_some())
}

/// Like [`str_leq`], returning the witness used: `Some(empty)` for equal
/// nodes, `Some(w_max)` for a proper domination.
pub fn str_leq_witness(f: &PosetFragment, lhs: &StrNode, rhs: &StrNode) -> Result<Option<IdxSet>> {
    require_member(f, lhs)?;
    require_member(f, rhs)?;
    Ok(leq_unchecked(f, lhs, rhs))
}

fn leq_unchecked(f: &PosetFragment, lhs: &StrNode, rhs: &StrNode) -> Option<IdxSet> {
    if lhs == rhs {
        return Some(IdxSet::empty());
    }
    let StrNode::Finite { a: c, b: d } = rhs else {
        return None;
    };
    let w = w_max(f, c, d);
    dominates_unchecked(f, rhs, lhs, &w).then_some(w)
}

/// Differential oracle for [`str_leq`]: tries every witness `W ⊆ C`.
pub fn str_leq_bruteforce(f: &PosetFragment, lhs: &StrNode, rhs: &StrNode) -> Result<bool> {
    require_member(f, lhs)?;
    require_member(f, rhs)?;
    if lhs == rhs {
        return Ok(true);
    }
    let c = rhs.first();
    if c.len() > MAX_ENUM {
        return Err(Error::SizeBound {
            what: "witness enumeration",
            got: c.len(),
            limit: MAX_ENUM,
        });
    }
    Ok((1u64..1 << c.len()).any(|mask| dominates_unchecked(f, rhs, lhs, &c.select(mask))))
}

fn require_finite_member(f: &PosetFragment, a: &IdxSet, b: &IdxSet) -> Result<()> {
    if str_member(f, a, b) {
        Ok(())
    } else {
        Err(Error::NotMember {
            a: a.to_vec(),
            b: b.to_vec(),
        })
    }
}

/// Number of members of `a` below every point of `b`.
pub fn ell(f: &PosetFragment, a: &IdxSet, b: &IdxSet) -> Result<usize> {
    require_finite_member(f, a, b)?;
    Ok(w_max(f, a, b).len())
}

/// `|A| - ell(A, B)`.
pub fn eta(f: &PosetFragment, a: &IdxSet, b: &IdxSet) -> Result<usize> {
    Ok(a.len() - ell(f, a, b)?)
}

fn check_enum_size(a: &IdxSet) -> Result<()> {
    if a.len() > MAX_ENUM {
        Err(Error::SizeBound {
            what: "subset enumeration",
            got: a.len(),
            limit: MAX_ENUM,
        })
    } else {
        Ok(())
    }
}

/// Whether `(A|B)` sits above something in its fiber, decided by searching
/// for `K ⊆ A` with `mub K = B`.
pub fn fiber_height_positive(f: &PosetFragment, a: &IdxSet, b: &IdxSet) -> Result<bool> {
    require_finite_member(f, a, b)?;
    check_enum_size(a)?;
    Ok((1u64..1 << a.len())
        .map(|mask| a.select(mask))
        .any(|k| f.mub_is(&k, b)))
}

/// An enumerated piece of a fiber `(Str X)_B` with its order relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberView {
    pub b: IdxSet,
    pub support: IdxSet,
    pub amax: usize,
    /// First ordinates, in enumeration order.
    pub nodes: Vec<IdxSet>,
    /// `order[i][j]` iff node `i` ≤ node `j`.
    order: Vec<Vec<bool>>,
}

impl FiberView {
    fn build(f: &PosetFragment, b: IdxSet, support: IdxSet, amax: usize, nodes: Vec<IdxSet>, exec: Exec) -> Self {
        let below = f.below_all(&b);
        let order = exec.map(&nodes, |lo| {
            nodes
                .iter()
                .map(|hi| fiber_leq(f, &below, &b, lo, hi))
                .collect()
        });
        FiberView {
            b,
            support,
            amax,
            nodes,
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.order[i][j]
    }

    pub fn node(&self, i: usize) -> StrNode {
        StrNode::Finite {
            a: self.nodes[i],
            b: self.b,
        }
    }

    pub fn position(&self, a: &IdxSet) -> Option<usize> {
        self.nodes.iter().position(|n| n == a)
    }

    /// Cover pairs `(lower, upper)`.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j
                    && self.order[i][j]
                    && !(0..n).any(|k| k != i && k != j && self.order[i][k] && self.order[k][j])
                {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// First violation of reflexivity, antisymmetry or transitivity.
    pub fn order_violation(&self) -> Option<String> {
        let n = self.len();
        for i in 0..n {
            if !self.order[i][i] {
                return Some(format!("not reflexive at node {i}"));
            }
            for j in 0..n {
                if i != j && self.order[i][j] && self.order[j][i] {
                    return Some(format!("not antisymmetric at nodes {i}, {j}"));
                }
                if !self.order[i][j] {
                    continue;
                }
                for k in 0..n {
                    if self.order[j][k] && !self.order[i][k] {
                        return Some(format!("not transitive at nodes {i}, {j}, {k}"));
                    }
                }
            }
        }
        None
    }

    /// The view as an abstract poset, for shape comparisons.
    pub fn to_small_poset(&self) -> Result<SmallPoset> {
        SmallPoset::from_matrix(self.order.clone())
    }

    pub fn to_doc(&self, f: &PosetFragment) -> FiberDoc {
        FiberDoc {
            version: 1,
            kind: "fiber".into(),
            b: self.b,
            support: self.support,
            amax: self.amax,
            nodes: self
                .nodes
                .iter()
                .map(|a| FiberNodeDoc {
                    a: *a,
                    label: self.label_for(f, a),
                })
                .collect(),
            covers: self
                .covers()
                .into_iter()
                .map(|(lo, hi)| CoverDoc {
                    lower: lo,
                    upper: hi,
                    via: w_max(f, &self.nodes[hi], &self.b),
                })
                .collect(),
            semantics: E3_SEMANTICS.into(),
        }
    }

    fn label_for(&self, f: &PosetFragment, a: &IdxSet) -> String {
        StrNode::Finite { a: *a, b: self.b }.display(f)
    }

    /// Hasse diagram in DOT; edges are covers, optionally labelled with the
    /// domination witness.
    pub fn to_dot(&self, f: &PosetFragment, via_labels: bool) -> String {
        let mut out = String::new();
        out.push_str("digraph fiber {\n  rankdir=BT;\n  node [shape=plaintext];\n");
        for (i, a) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "  n{i} [label=\"{}\"];", self.label_for(f, a));
        }
        for (lo, hi) in self.covers() {
            if via_labels {
                let via = w_max(f, &self.nodes[hi], &self.b);
                let _ = writeln!(
                    out,
                    "  n{lo} -> n{hi} [arrowhead=none, label=\"{{{}}}\"];",
                    f.format_h1_set(&via)
                );
            } else {
                let _ = writeln!(out, "  n{lo} -> n{hi} [arrowhead=none];");
            }
        }
        out.push_str("}\n");
        out
    }
}

pub const E3_SEMANTICS: &str = "closure clause ranges over the fragment's points; \
     the points above a single curve are treated as unbounded";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberDoc {
    pub version: u32,
    pub kind: String,
    pub b: IdxSet,
    pub support: IdxSet,
    pub amax: usize,
    pub nodes: Vec<FiberNodeDoc>,
    pub covers: Vec<CoverDoc>,
    pub semantics: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberNodeDoc {
    pub a: IdxSet,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverDoc {
    pub lower: usize,
    pub upper: usize,
    pub via: IdxSet,
}

/// Order inside one fiber; `below` is the set of curves below all of `b`.
fn fiber_leq(f: &PosetFragment, below: &IdxSet, b: &IdxSet, lo: &IdxSet, hi: &IdxSet) -> bool {
    if lo == hi {
        return true;
    }
    if !lo.is_subset(hi) {
        return false;
    }
    let w = hi.intersection(below);
    if w.is_empty() {
        return false;
    }
    let w_points = f.common_points(&w);
    lo.iter().all(|x| w.only() != Some(x) && w_points.intersection(f.points_above(x)).is_subset(b))
}

/// `L_B(A, B)`: every `(A'|B)` below `(A|B)`. Only subsets of `A` can occur.
pub fn down_set_in_fiber(f: &PosetFragment, a: &IdxSet, b: &IdxSet) -> Result<FiberView> {
    require_finite_member(f, a, b)?;
    check_enum_size(a)?;
    let below = f.below_all(b);
    let nodes: Vec<IdxSet> = subsets_by_size(a, 1, a.len())
        .filter(|s| s.intersects(&below) && fiber_leq(f, &below, b, s, a))
        .collect();
    Ok(FiberView::build(f, *b, *a, a.len(), nodes, Exec::Sequential))
}

/// Predicted `(2^ℓ - 1)·2^η` against the enumerated down-set size.
pub fn counting_formula(f: &PosetFragment, a: &IdxSet, b: &IdxSet) -> Result<(u64, u64)> {
    require_positive(f, a, b)?;
    let l = ell(f, a, b)? as u32;
    let e = eta(f, a, b)? as u32;
    let predicted = ((1u64 << l) - 1) << e;
    let actual = down_set_in_fiber(f, a, b)?.len() as u64;
    Ok((predicted, actual))
}

fn require_positive(f: &PosetFragment, a: &IdxSet, b: &IdxSet) -> Result<()> {
    if fiber_height_positive(f, a, b)? {
        Ok(())
    } else {
        Err(Error::HeightZero {
            a: a.to_vec(),
            b: b.to_vec(),
        })
    }
}

/// Whether `B = mub A`, for a node of positive height.
pub fn parity_mub_check(f: &PosetFragment, a: &IdxSet, b: &IdxSet) -> Result<bool> {
    require_positive(f, a, b)?;
    Ok(f.mub_is(a, b))
}

/// Whether the down-set of `(A|B)` has the shape `I_2`, by characterization.
pub fn detect_i2(f: &PosetFragment, a: &IdxSet, b: &IdxSet) -> Result<bool> {
    require_finite_member(f, a, b)?;
    Ok(a.len() == 2 && f.mub_is(a, b))
}

/// Shape comparison of the down-set against `I_2` by brute force.
pub fn detect_i2_bruteforce(f: &PosetFragment, a: &IdxSet, b: &IdxSet) -> Result<bool> {
    let view = down_set_in_fiber(f, a, b)?;
    if view.len() != 3 {
        return Ok(false);
    }
    small_poset_isomorphic(&view.to_small_poset()?, &SmallPoset::i_r(2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mu {
    Finite(u64),
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuStat {
    pub mu: Mu,
    /// No partner curve `y` has `mub {x, y} = {m}`.
    pub ge4: bool,
    /// A first ordinate realizing the minimum.
    pub argmin: Option<IdxSet>,
}

/// Size of the smallest positive-height down-set `L_m(A, m)` with `x ∈ A`
/// and `|A| ≤ amax`.
///
/// Candidates are drawn from the curves below `m`: dropping curves not below
/// `m` keeps the height positive and shrinks the down-set. Down-set sizes
/// for `|A| = s` lie in `[3·2^(s-2), 2^s - 1]`, so the first size admitting a
/// positive-height `A` holds the minimum.
pub fn mu_statistic(f: &PosetFragment, x: usize, m: usize, amax: usize) -> Result<MuStat> {
    if x >= f.n1() || m >= f.n2() || !f.incident(x, m) {
        return Err(Error::NotBelow { x, m });
    }
    let b = IdxSet::singleton(m);
    let ge4 = !(0..f.n1()).any(|y| y != x && f.mub_is(&IdxSet::from([x, y]), &b));
    let others = f.curves_below(m).difference(&IdxSet::singleton(x));
    for size in 2..=amax.min(MAX_ENUM) {
        let mut best: Option<(u64, IdxSet)> = None;
        for rest in subsets_by_size(&others, size - 1, size - 1) {
            let mut a = rest;
            a.insert(x);
            if !fiber_height_positive(f, &a, &b)? {
                continue;
            }
            let count = down_set_in_fiber(f, &a, &b)?.len() as u64;
            if best.is_none_or(|(c, _)| count < c) {
                best = Some((count, a));
            }
        }
        if let Some((count, a)) = best {
            return Ok(MuStat {
                mu: Mu::Finite(count),
                ge4,
                argmin: Some(a),
            });
        }
    }
    Ok(MuStat {
        mu: Mu::Infinite,
        ge4,
        argmin: None,
    })
}

/// Every member `(A|B)` with `A ⊆ support` and `|A| ≤ amax`, with its order.
pub fn enumerate_fiber(
    f: &PosetFragment,
    b: &IdxSet,
    support: &IdxSet,
    amax: usize,
    exec: Exec,
) -> Result<FiberView> {
    if amax > MAX_ENUM {
        return Err(Error::SizeBound {
            what: "fiber amax",
            got: amax,
            limit: MAX_ENUM,
        });
    }
    if b.is_empty() || b.iter().any(|m| m >= f.n2()) || support.iter().any(|x| x >= f.n1()) {
        return Err(Error::Format("fiber second ordinate or support out of range".into()));
    }
    let below = f.below_all(b);
    let nodes: Vec<IdxSet> = subsets_by_size(support, 1, amax)
        .filter(|s| s.intersects(&below))
        .collect();
    Ok(FiberView::build(f, *b, *support, amax, nodes, exec))
}

/// A common upper bound `(J|b)` of two nodes sharing the point `b`, built
/// from a witness `K` with `mub K = {b}` that avoids both first ordinates.
pub fn join_witness(
    f: &PosetFragment,
    lhs: &StrNode,
    rhs: &StrNode,
    b: usize,
    size_cap: usize,
) -> Option<(StrNode, IdxSet)> {
    let avoid = lhs.first().union(&rhs.first());
    let k = find_j3_witness(f, b, &avoid, size_cap)?;
    let j = k.union(&avoid);
    Some((
        StrNode::Finite {
            a: j,
            b: IdxSet::singleton(b),
        },
        k,
    ))
}
