//! Recovering a fragment isomorphism from an isomorphism of structure posets.
//!
//! Points are recovered fiber by fiber: all nodes `(A|{m})` must land in one
//! target fiber `{n}`, and `m ↦ n`. Curves are recovered from their K-sets:
//! the nodes `(K|{b})` with `x ∈ K` and `mub K = {b}`. Each image `(J|{n})`
//! has `J` containing the image of `x`, so the intersection of the first
//! ordinates of all images pins it down when the fragment holds enough
//! witnesses. When it does not, the result is an ambiguity, never a guess.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{subsets_by_size, IdxSet};
use crate::conditions::{run_battery, BatteryParams, BatteryReport};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::poset::{relabel, IsoMap, PosetFragment};
use crate::structure::{ell, eta, fiber_height_positive, str_leq, str_member, StrNode, MAX_ENUM};

/// Default bound on `|K|` for K-set domains.
pub const DEFAULT_KSET_CAP: usize = 3;

/// Above this many domain nodes the order check samples pairs.
pub const FULL_ORDER_CHECK: usize = 300;

/// A slice `(Str X)_B` restricted to first ordinates inside `support`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub b: IdxSet,
    pub support: IdxSet,
    pub amax: usize,
}

/// An enumerable set of structure nodes on one side of an isomorphism.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub fibers: Vec<FiberSpec>,
    /// K-sets `(K|{b})` with `2 ≤ |K| ≤ kset_cap`; 0 disables them.
    pub kset_cap: usize,
    /// Nodes `({x}|{m})` for every incident pair.
    pub incidence: bool,
    pub rays: bool,
}

impl Domain {
    /// K-sets, incidence singletons and optionally rays.
    pub fn witness(kset_cap: usize, rays: bool) -> Self {
        Domain {
            fibers: Vec::new(),
            kset_cap,
            incidence: true,
            rays,
        }
    }

    pub fn from_fibers(fibers: Vec<FiberSpec>) -> Self {
        Domain {
            fibers,
            ..Domain::default()
        }
    }

    /// The corresponding domain on the far side of `rho`.
    pub fn mapped(&self, rho: &IsoMap) -> Self {
        Domain {
            fibers: self
                .fibers
                .iter()
                .map(|s| FiberSpec {
                    b: rho.map_h2(&s.b),
                    support: rho.map_h1(&s.support),
                    amax: s.amax,
                })
                .collect(),
            ..self.clone()
        }
    }

    pub fn contains(&self, f: &PosetFragment, node: &StrNode) -> bool {
        if !node.is_member(f) {
            return false;
        }
        let (a, b) = match *node {
            StrNode::Ray(_) => return self.rays,
            StrNode::Finite { a, b } => (a, b),
        };
        if self.incidence && a.len() == 1 && b.len() == 1 {
            return true;
        }
        if self.kset_cap >= 2 && b.len() == 1 && (2..=self.kset_cap).contains(&a.len()) && f.common_points(&a) == b {
            return true;
        }
        self.fibers
            .iter()
            .any(|s| s.b == b && a.is_subset(&s.support) && a.len() <= s.amax)
    }

    /// All nodes, sorted and without repeats.
    pub fn nodes(&self, f: &PosetFragment) -> Result<Vec<StrNode>> {
        let mut out = BTreeSet::new();
        if self.incidence {
            for (x, m) in f.incidence() {
                out.insert(StrNode::finite([x], [m]));
            }
        }
        if self.kset_cap >= 2 {
            for m in 0..f.n2() {
                let b = IdxSet::singleton(m);
                for k in subsets_by_size(f.curves_below(m), 2, self.kset_cap) {
                    if f.common_points(&k) == b {
                        out.insert(StrNode::Finite { a: k, b });
                    }
                }
            }
        }
        for s in &self.fibers {
            if s.amax > MAX_ENUM {
                return Err(Error::SizeBound {
                    what: "domain fiber amax",
                    got: s.amax,
                    limit: MAX_ENUM,
                });
            }
            for a in subsets_by_size(&s.support, 1, s.amax) {
                if str_member(f, &a, &s.b) {
                    out.insert(StrNode::Finite { a, b: s.b });
                }
            }
        }
        if self.rays {
            out.extend((0..f.n1()).filter(|&x| !f.points_above(x).is_empty()).map(StrNode::Ray));
        }
        Ok(out.into_iter().collect())
    }
}

/// Source of images and preimages for a structure-poset isomorphism.
pub trait StrOracle: Send + Sync {
    fn image(&self, node: &StrNode) -> Option<StrNode>;
    fn preimage(&self, node: &StrNode) -> Option<StrNode>;
    /// Whether probes may run concurrently.
    fn concurrent(&self) -> bool {
        true
    }
}

/// `(A|B) ↦ (ρA|ρB)`, computed on demand.
struct Induced {
    rho: IsoMap,
    inv: IsoMap,
}

impl StrOracle for Induced {
    fn image(&self, node: &StrNode) -> Option<StrNode> {
        Some(node.map(&self.rho))
    }

    fn preimage(&self, node: &StrNode) -> Option<StrNode> {
        Some(node.map(&self.inv))
    }
}

/// Explicit forward and inverse tables; see [`TableDoc`] for the file form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub forward: BTreeMap<StrNode, StrNode>,
    pub inverse: BTreeMap<StrNode, StrNode>,
}

impl StrOracle for Table {
    fn image(&self, node: &StrNode) -> Option<StrNode> {
        self.forward.get(node).copied()
    }

    fn preimage(&self, node: &StrNode) -> Option<StrNode> {
        self.inverse.get(node).copied()
    }
}

/// File form of a tabulated isomorphism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDoc {
    pub version: u32,
    pub source_domain: Domain,
    pub target_domain: Domain,
    pub forward: Vec<(StrNode, StrNode)>,
    pub inverse: Vec<(StrNode, StrNode)>,
}

impl TableDoc {
    pub fn into_iso(self, source: PosetFragment, target: PosetFragment) -> StrIso {
        let table = Table {
            forward: self.forward.into_iter().collect(),
            inverse: self.inverse.into_iter().collect(),
        };
        StrIso::new(source, target, self.source_domain, self.target_domain, Arc::new(table))
    }
}

/// A base oracle with some forward images replaced.
struct Patched {
    base: Arc<dyn StrOracle>,
    overrides: BTreeMap<StrNode, StrNode>,
}

impl StrOracle for Patched {
    fn image(&self, node: &StrNode) -> Option<StrNode> {
        self.overrides.get(node).copied().or_else(|| self.base.image(node))
    }

    fn preimage(&self, node: &StrNode) -> Option<StrNode> {
        self.base.preimage(node)
    }

    fn concurrent(&self) -> bool {
        self.base.concurrent()
    }
}

/// A finite-node oracle extended to rays by a curve map.
struct WithRays {
    base: Arc<dyn StrOracle>,
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl StrOracle for WithRays {
    fn image(&self, node: &StrNode) -> Option<StrNode> {
        match *node {
            StrNode::Ray(x) => self.forward.get(x).map(|&y| StrNode::Ray(y)),
            _ => self.base.image(node),
        }
    }

    fn preimage(&self, node: &StrNode) -> Option<StrNode> {
        match *node {
            StrNode::Ray(y) => self.inverse.get(y).map(|&x| StrNode::Ray(x)),
            _ => self.base.preimage(node),
        }
    }

    fn concurrent(&self) -> bool {
        self.base.concurrent()
    }
}

/// A structure-poset isomorphism between enumerated domains of two fragments.
pub struct StrIso {
    pub source: PosetFragment,
    pub target: PosetFragment,
    pub source_domain: Domain,
    pub target_domain: Domain,
    oracle: Arc<dyn StrOracle>,
    probes: AtomicUsize,
}

impl fmt::Debug for StrIso {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrIso")
            .field("source_domain", &self.source_domain)
            .field("target_domain", &self.target_domain)
            .field("probes", &self.probes())
            .finish_non_exhaustive()
    }
}

impl StrIso {
    pub fn new(
        source: PosetFragment,
        target: PosetFragment,
        source_domain: Domain,
        target_domain: Domain,
        oracle: Arc<dyn StrOracle>,
    ) -> Self {
        StrIso {
            source,
            target,
            source_domain,
            target_domain,
            oracle,
            probes: AtomicUsize::new(0),
        }
    }

    /// Image of a source-domain node; `None` outside the domain.
    pub fn image(&self, node: &StrNode) -> Option<StrNode> {
        if !self.source_domain.contains(&self.source, node) {
            return None;
        }
        self.probes.fetch_add(1, Ordering::Relaxed);
        self.oracle.image(node)
    }

    /// Preimage of a target-domain node; `None` outside the domain.
    pub fn preimage(&self, node: &StrNode) -> Option<StrNode> {
        if !self.target_domain.contains(&self.target, node) {
            return None;
        }
        self.probes.fetch_add(1, Ordering::Relaxed);
        self.oracle.preimage(node)
    }

    pub fn probes(&self) -> usize {
        self.probes.load(Ordering::Relaxed)
    }

    /// The strategy to use for probes, honoring the oracle's declaration.
    pub fn exec(&self, requested: Exec) -> Exec {
        if self.oracle.concurrent() {
            requested
        } else {
            Exec::Sequential
        }
    }

    /// Replace the forward image of some nodes, keeping everything else.
    pub fn with_overrides(self, overrides: BTreeMap<StrNode, StrNode>) -> Self {
        StrIso {
            oracle: Arc::new(Patched {
                base: self.oracle,
                overrides,
            }),
            ..self
        }
    }

    /// Tabulate over both domains.
    pub fn to_table(&self) -> Result<Table> {
        let mut t = Table::default();
        for n in self.source_domain.nodes(&self.source)? {
            if let Some(img) = self.oracle.image(&n) {
                t.forward.insert(n, img);
            }
        }
        for n in self.target_domain.nodes(&self.target)? {
            if let Some(pre) = self.oracle.preimage(&n) {
                t.inverse.insert(n, pre);
            }
        }
        Ok(t)
    }

    pub fn to_doc(&self) -> Result<TableDoc> {
        let t = self.to_table()?;
        Ok(TableDoc {
            version: 1,
            source_domain: self.source_domain.clone(),
            target_domain: self.target_domain.clone(),
            forward: t.forward.into_iter().collect(),
            inverse: t.inverse.into_iter().collect(),
        })
    }

    /// Bijectivity between the domains and order preservation both ways.
    ///
    /// Pairs are checked exhaustively up to [`FULL_ORDER_CHECK`] nodes and
    /// otherwise on `sample` seeded random pairs.
    pub fn check_invariants(&self, sample: usize, seed: u64, exec: Exec) -> Result<Vec<String>> {
        let exec = self.exec(exec);
        let src = self.source_domain.nodes(&self.source)?;
        let tgt = self.target_domain.nodes(&self.target)?;
        let mut problems: Vec<String> = Vec::new();
        let fwd = exec.map(&src, |n| self.check_forward(n));
        problems.extend(fwd.iter().filter_map(|r| r.as_ref().err().cloned()));
        let back = exec.map(&tgt, |n| self.check_backward(n));
        problems.extend(back.into_iter().filter_map(|r| r.err()));
        if src.len() != tgt.len() {
            problems.push(format!(
                "domain sizes differ: {} source nodes, {} target nodes",
                src.len(),
                tgt.len()
            ));
        }
        if !problems.is_empty() {
            return Ok(problems);
        }
        let images: Vec<StrNode> = fwd.into_iter().map(|r| r.expect("checked")).collect();
        let pairs: Vec<(usize, usize)> = if src.len() <= FULL_ORDER_CHECK {
            (0..src.len())
                .flat_map(|i| (0..src.len()).map(move |j| (i, j)))
                .collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..sample)
                .map(|_| (rng.gen_range(0..src.len()), rng.gen_range(0..src.len())))
                .collect()
        };
        let bad = exec.map(&pairs, |&(i, j)| {
            let lhs = str_leq(&self.source, &src[i], &src[j]).ok()?;
            let rhs = str_leq(&self.target, &images[i], &images[j]).ok()?;
            (lhs != rhs).then(|| {
                format!(
                    "order not preserved: {} <= {} is {lhs} but {} <= {} is {rhs}",
                    src[i].display(&self.source),
                    src[j].display(&self.source),
                    images[i].display(&self.target),
                    images[j].display(&self.target)
                )
            })
        });
        problems.extend(bad.into_iter().flatten());
        Ok(problems)
    }

    fn check_forward(&self, n: &StrNode) -> std::result::Result<StrNode, String> {
        let show = || n.display(&self.source);
        let img = self
            .image(n)
            .ok_or_else(|| format!("{} has no image", show()))?;
        if !self.target_domain.contains(&self.target, &img) {
            return Err(format!("image of {} leaves the target domain", show()));
        }
        if self.preimage(&img) != Some(*n) {
            return Err(format!("{} does not return under the inverse", show()));
        }
        Ok(img)
    }

    fn check_backward(&self, n: &StrNode) -> std::result::Result<(), String> {
        let show = || n.display(&self.target);
        let pre = self
            .preimage(n)
            .ok_or_else(|| format!("{} has no preimage", show()))?;
        if !self.source_domain.contains(&self.source, &pre) {
            return Err(format!("preimage of {} leaves the source domain", show()));
        }
        if self.image(&pre) != Some(*n) {
            return Err(format!("{} does not return under the forward map", show()));
        }
        Ok(())
    }
}

/// The isomorphism `(A|B) ↦ (ρA|ρB)` on `domain` and its image.
pub fn induce_str_iso(
    source: &PosetFragment,
    target: &PosetFragment,
    rho: &IsoMap,
    domain: Domain,
) -> Result<StrIso> {
    rho.check(source, target).map_err(Error::Invalid)?;
    domain.nodes(source)?;
    let target_domain = domain.mapped(rho);
    Ok(StrIso::new(
        source.clone(),
        target.clone(),
        domain,
        target_domain,
        Arc::new(Induced {
            rho: rho.clone(),
            inv: rho.inverse(),
        }),
    ))
}

/// A source node paired with its image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub node: StrNode,
    pub image: StrNode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conflict {
    /// A point with no domain node in its fiber.
    MissingFiber { m: usize },
    /// A domain node without an image.
    Undefined { node: StrNode },
    /// A node of fiber `{m}` whose image is not in a single-point fiber.
    NotPointFiber { m: usize, probe: Probe },
    /// Two nodes of fiber `{m}` landing in different fibers.
    FiberSplit { m: usize, first: Probe, second: Probe },
    /// Two fibers landing in the same fiber.
    FiberCollision { m1: usize, m2: usize, first: Probe, second: Probe },
    /// A curve with no K-set in the domain.
    NoKSets { x: usize },
    /// The K-set images of `x` share more or fewer than one curve.
    Ambiguous { x: usize, candidates: IdxSet, evidence: Vec<Probe> },
    /// Two curves resolved to the same image.
    CurveCollision { x1: usize, x2: usize, y: usize },
    /// A ray whose image is not a ray.
    RayMismatch { x: usize, image: Option<StrNode> },
    /// The assembled map breaks an incidence.
    Incidence { x: usize, m: usize, y: usize, n: usize },
}

impl Conflict {
    pub fn describe(&self, source: &PosetFragment, target: &PosetFragment) -> String {
        let s = |n: &StrNode| n.display(source);
        let t = |n: &StrNode| n.display(target);
        match self {
            Conflict::MissingFiber { m } => {
                format!("point {}: no domain node in its fiber", source.label_h2(*m))
            }
            Conflict::Undefined { node } => format!("{} has no image", s(node)),
            Conflict::NotPointFiber { m, probe } => format!(
                "point {}: {} maps to {}, outside every single-point fiber",
                source.label_h2(*m),
                s(&probe.node),
                t(&probe.image)
            ),
            Conflict::FiberSplit { m, first, second } => format!(
                "point {}: fiber splits, {} -> {} but {} -> {}",
                source.label_h2(*m),
                s(&first.node),
                t(&first.image),
                s(&second.node),
                t(&second.image)
            ),
            Conflict::FiberCollision { m1, m2, first, second } => format!(
                "points {} and {} map to the same fiber via {} -> {} and {} -> {}",
                source.label_h2(*m1),
                source.label_h2(*m2),
                s(&first.node),
                t(&first.image),
                s(&second.node),
                t(&second.image)
            ),
            Conflict::NoKSets { x } => {
                format!("curve {}: no K-sets in the domain", source.label_h1(*x))
            }
            Conflict::Ambiguous { x, candidates, evidence } => format!(
                "curve {}: K-set images share {} after {} probes",
                source.label_h1(*x),
                target.format_h1_set(candidates),
                evidence.len()
            ),
            Conflict::CurveCollision { x1, x2, y } => format!(
                "curves {} and {} both resolve to {}",
                source.label_h1(*x1),
                source.label_h1(*x2),
                target.label_h1(*y)
            ),
            Conflict::RayMismatch { x, image } => format!(
                "ray of {} maps to {}",
                source.label_h1(*x),
                image.map_or("nothing".to_string(), |n| t(&n))
            ),
            Conflict::Incidence { x, m, y, n } => format!(
                "incidence of ({}, {}) differs from ({}, {})",
                source.label_h1(*x),
                source.label_h2(*m),
                target.label_h1(*y),
                target.label_h2(*n)
            ),
        }
    }

    /// Re-probe the cited nodes and confirm the conflict.
    pub fn replay(&self, iso: &StrIso, kset_cap: usize) -> bool {
        let fresh = |p: &Probe| iso.image(&p.node) == Some(p.image);
        let point_fiber = |n: &StrNode| n.second().and_then(|b| b.only());
        match self {
            Conflict::MissingFiber { m } => iso
                .source_domain
                .nodes(&iso.source)
                .map(|ns| !ns.iter().any(|n| n.second() == Some(IdxSet::singleton(*m))))
                .unwrap_or(false),
            Conflict::Undefined { node } => iso.image(node).is_none(),
            Conflict::NotPointFiber { probe, .. } => {
                fresh(probe) && point_fiber(&probe.image).is_none()
            }
            Conflict::FiberSplit { m, first, second } => {
                fresh(first)
                    && fresh(second)
                    && first.node.second() == Some(IdxSet::singleton(*m))
                    && second.node.second() == Some(IdxSet::singleton(*m))
                    && point_fiber(&first.image) != point_fiber(&second.image)
            }
            Conflict::FiberCollision { m1, m2, first, second } => {
                m1 != m2
                    && fresh(first)
                    && fresh(second)
                    && first.node.second() == Some(IdxSet::singleton(*m1))
                    && second.node.second() == Some(IdxSet::singleton(*m2))
                    && point_fiber(&first.image).is_some()
                    && point_fiber(&first.image) == point_fiber(&second.image)
            }
            Conflict::NoKSets { x } => k_sets(&iso.source, *x, kset_cap)
                .iter()
                .all(|n| !iso.source_domain.contains(&iso.source, n)),
            Conflict::Ambiguous { x, candidates, evidence } => {
                !evidence.is_empty()
                    && candidates.len() != 1
                    && evidence.iter().all(|p| fresh(p) && p.node.first().contains(*x))
                    && intersect_firsts(evidence.iter().map(|p| p.image)) == *candidates
            }
            Conflict::CurveCollision { x1, x2, y } => {
                let r1 = resolve_curve(iso, *x1, kset_cap);
                let r2 = resolve_curve(iso, *x2, kset_cap);
                x1 != x2 && r1 == Ok(*y) && r2 == Ok(*y)
            }
            Conflict::RayMismatch { x, image } => {
                let now = iso.image(&StrNode::Ray(*x));
                now == *image && !matches!(now, Some(StrNode::Ray(_)))
            }
            Conflict::Incidence { x, m, y, n } => {
                iso.source.incident(*x, *m) != iso.target.incident(*y, *n)
            }
        }
    }
}

fn intersect_firsts(images: impl Iterator<Item = StrNode>) -> IdxSet {
    images
        .map(|n| n.first())
        .reduce(|acc, j| acc.intersection(&j))
        .unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rho2Entry {
    pub m: usize,
    pub n: usize,
    pub witness: Probe,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rho1Entry {
    pub x: usize,
    pub y: usize,
    /// Probes whose first ordinates intersect to `{y}`.
    pub evidence: Vec<Probe>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionTrace {
    pub rho2_table: Vec<Rho2Entry>,
    pub rho1_table: Vec<Rho1Entry>,
    pub conflicts: Vec<Conflict>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconstructionError {
    pub trace: ReconstructionTrace,
}

impl fmt::Display for ReconstructionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "reconstruction failed with {} conflict(s)", self.trace.conflicts.len())
    }
}

impl std::error::Error for ReconstructionError {}

/// The point map read off single-point fibers.
pub fn rho2_from_phi(phi: &StrIso, exec: Exec) -> Result<(Vec<Rho2Entry>, Vec<Conflict>)> {
    let nodes = phi.source_domain.nodes(&phi.source)?;
    let mut by_point: Vec<Vec<StrNode>> = vec![Vec::new(); phi.source.n2()];
    for n in nodes {
        if let Some(m) = n.second().and_then(|b| b.only()) {
            by_point[m].push(n);
        }
    }
    let missing: Vec<usize> = (0..phi.source.n2()).filter(|&m| by_point[m].is_empty()).collect();
    if !missing.is_empty() {
        return Err(Error::Format(format!(
            "no domain node in the fiber of point(s) {}",
            phi.source.format_h2_set(&missing.into_iter().collect())
        )));
    }
    let per_point = phi.exec(exec).map_range(phi.source.n2(), |m| {
        let mut first: Option<(Probe, usize)> = None;
        for node in &by_point[m] {
            let Some(image) = phi.image(node) else {
                return Err(Conflict::Undefined { node: *node });
            };
            let probe = Probe { node: *node, image };
            let Some(n) = image.second().and_then(|b| b.only()) else {
                return Err(Conflict::NotPointFiber { m, probe });
            };
            match first {
                None => first = Some((probe, n)),
                Some((p, n0)) if n0 != n => {
                    return Err(Conflict::FiberSplit {
                        m,
                        first: p,
                        second: probe,
                    })
                }
                Some(_) => {}
            }
        }
        let (witness, n) = first.expect("fiber is nonempty");
        Ok(Rho2Entry { m, n, witness })
    });
    let mut table = Vec::new();
    let mut conflicts = Vec::new();
    for r in per_point {
        match r {
            Ok(e) => table.push(e),
            Err(c) => conflicts.push(c),
        }
    }
    let mut owner: BTreeMap<usize, &Rho2Entry> = BTreeMap::new();
    for e in &table {
        if let Some(prev) = owner.insert(e.n, e) {
            conflicts.push(Conflict::FiberCollision {
                m1: prev.m,
                m2: e.m,
                first: prev.witness,
                second: e.witness,
            });
        }
    }
    Ok((table, conflicts))
}

/// Every `(K|{b})` with `x ∈ K`, `2 ≤ |K| ≤ size_cap` and `mub K = {b}`.
pub fn k_sets(f: &PosetFragment, x: usize, size_cap: usize) -> Vec<StrNode> {
    let mut out = BTreeSet::new();
    if x >= f.n1() || size_cap < 2 {
        return Vec::new();
    }
    for b in f.points_above(x).iter() {
        let target = IdxSet::singleton(b);
        let mut others = *f.curves_below(b);
        others.remove(x);
        for rest in subsets_by_size(&others, 1, size_cap - 1) {
            let mut k = rest;
            k.insert(x);
            if f.common_points(&k) == target {
                out.insert(StrNode::Finite { a: k, b: target });
            }
        }
    }
    out.into_iter().collect()
}

fn resolve_curve(psi: &StrIso, x: usize, size_cap: usize) -> std::result::Result<usize, Conflict> {
    Ok(resolve_curve_entry(psi, x, size_cap)?.y)
}

fn resolve_curve_entry(psi: &StrIso, x: usize, size_cap: usize) -> std::result::Result<Rho1Entry, Conflict> {
    if psi.source_domain.rays {
        return match psi.image(&StrNode::Ray(x)) {
            Some(StrNode::Ray(y)) => Ok(Rho1Entry {
                x,
                y,
                evidence: vec![Probe {
                    node: StrNode::Ray(x),
                    image: StrNode::Ray(y),
                }],
            }),
            image => Err(Conflict::RayMismatch { x, image }),
        };
    }
    let ks: Vec<StrNode> = k_sets(&psi.source, x, size_cap)
        .into_iter()
        .filter(|n| psi.source_domain.contains(&psi.source, n))
        .collect();
    if ks.is_empty() {
        return Err(Conflict::NoKSets { x });
    }
    let mut current: Option<IdxSet> = None;
    let mut evidence = Vec::new();
    let mut all = Vec::new();
    for node in ks {
        let Some(image) = psi.image(&node) else {
            return Err(Conflict::Undefined { node });
        };
        let probe = Probe { node, image };
        all.push(probe);
        let j = image.first();
        let next = current.map_or(j, |c| c.intersection(&j));
        if current != Some(next) {
            evidence.push(probe);
            current = Some(next);
        }
    }
    let candidates = current.expect("at least one K-set");
    match candidates.only() {
        Some(y) => Ok(Rho1Entry { x, y, evidence }),
        None => Err(Conflict::Ambiguous {
            x,
            candidates,
            evidence: all,
        }),
    }
}

/// The curve map from K-set images, or from ray images when the domain has
/// rays.
pub fn rho1_from_psi(psi: &StrIso, size_cap: usize, exec: Exec) -> (Vec<Rho1Entry>, Vec<Conflict>) {
    let per_curve = psi
        .exec(exec)
        .map_range(psi.source.n1(), |x| resolve_curve_entry(psi, x, size_cap));
    let mut table = Vec::new();
    let mut conflicts = Vec::new();
    for r in per_curve {
        match r {
            Ok(e) => table.push(e),
            Err(c) => conflicts.push(c),
        }
    }
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &table {
        if let Some(x1) = owner.insert(e.y, e.x) {
            conflicts.push(Conflict::CurveCollision { x1, x2: e.x, y: e.y });
        }
    }
    (table, conflicts)
}

/// Bounds used while reconstructing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub kset_cap: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            kset_cap: DEFAULT_KSET_CAP,
        }
    }
}

/// Assemble the point and curve maps into a fragment isomorphism and check
/// it against both incidences.
pub fn build_rho(
    phi: &StrIso,
    caps: Caps,
    exec: Exec,
) -> std::result::Result<(IsoMap, ReconstructionTrace), ReconstructionError> {
    let mut trace = ReconstructionTrace::default();
    match rho2_from_phi(phi, exec) {
        Ok((table, conflicts)) => {
            trace.rho2_table = table;
            trace.conflicts = conflicts;
        }
        Err(_) => {
            let nodes = phi.source_domain.nodes(&phi.source).unwrap_or_default();
            trace.conflicts = (0..phi.source.n2())
                .filter(|&m| !nodes.iter().any(|n| n.second() == Some(IdxSet::singleton(m))))
                .map(|m| Conflict::MissingFiber { m })
                .collect();
        }
    }
    let (table, conflicts) = rho1_from_psi(phi, caps.kset_cap, exec);
    trace.rho1_table = table;
    trace.conflicts.extend(conflicts);
    if !trace.conflicts.is_empty()
        || trace.rho1_table.len() != phi.source.n1()
        || trace.rho2_table.len() != phi.source.n2()
    {
        return Err(ReconstructionError { trace });
    }
    let mut rho = IsoMap {
        h1: vec![0; phi.source.n1()],
        h2: vec![0; phi.source.n2()],
    };
    for e in &trace.rho1_table {
        rho.h1[e.x] = e.y;
    }
    for e in &trace.rho2_table {
        rho.h2[e.m] = e.n;
    }
    for x in 0..phi.source.n1() {
        for m in 0..phi.source.n2() {
            let (y, n) = (rho.h1[x], rho.h2[m]);
            if y >= phi.target.n1() || n >= phi.target.n2() || phi.source.incident(x, m) != phi.target.incident(y, n) {
                trace.conflicts.push(Conflict::Incidence { x, m, y, n });
            }
        }
    }
    if !trace.conflicts.is_empty() || rho.check(&phi.source, &phi.target).is_err() {
        return Err(ReconstructionError { trace });
    }
    Ok((rho, trace))
}

/// A node whose image is not `(ρA|ρB)`, with the sets the image actually
/// pulls back to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorViolation {
    pub node: StrNode,
    pub expected: StrNode,
    pub actual: Option<StrNode>,
    pub a_star: Option<IdxSet>,
    pub b_star: Option<IdxSet>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub checked: usize,
    pub violations: Vec<FactorViolation>,
}

impl FactorizationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check `φ(A|B) = (ρA|ρB)` on every domain node, or on `sample` of them.
pub fn verify_factorization(
    phi: &StrIso,
    rho: &IsoMap,
    sample: Option<(usize, u64)>,
    exec: Exec,
) -> Result<FactorizationReport> {
    let mut nodes = phi.source_domain.nodes(&phi.source)?;
    if let Some((k, seed)) = sample {
        if k < nodes.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            nodes.shuffle(&mut rng);
            nodes.truncate(k);
            nodes.sort();
        }
    }
    let inv = rho.inverse();
    let violations = phi.exec(exec).map(&nodes, |node| {
        let expected = node.map(rho);
        let actual = phi.image(node);
        if actual == Some(expected) {
            return None;
        }
        let (a_star, b_star) = match actual {
            Some(StrNode::Finite { a, b }) => (Some(inv.map_h1(&a)), Some(inv.map_h2(&b))),
            Some(StrNode::Ray(y)) => (inv.h1.get(y).map(|&x| IdxSet::singleton(x)), None),
            None => (None, None),
        };
        Some(FactorViolation {
            node: *node,
            expected,
            actual,
            a_star,
            b_star,
        })
    });
    Ok(FactorizationReport {
        checked: nodes.len(),
        violations: violations.into_iter().flatten().collect(),
    })
}

/// Extend an isomorphism of finite nodes to rays, sending the ray of `a`
/// to the ray of the curve its K-sets resolve to.
pub fn extend_psi_to_phi(
    psi: StrIso,
    caps: Caps,
    exec: Exec,
) -> std::result::Result<StrIso, ReconstructionError> {
    let (table, conflicts) = rho1_from_psi(&psi, caps.kset_cap, exec);
    if !conflicts.is_empty() || table.len() != psi.source.n1() {
        return Err(ReconstructionError {
            trace: ReconstructionTrace {
                rho1_table: table,
                conflicts,
                ..Default::default()
            },
        });
    }
    let mut forward = vec![0; psi.source.n1()];
    for e in &table {
        forward[e.x] = e.y;
    }
    let mut inverse = vec![0; psi.target.n1()];
    for (x, &y) in forward.iter().enumerate() {
        inverse[y] = x;
    }
    let mut source_domain = psi.source_domain.clone();
    let mut target_domain = psi.target_domain.clone();
    source_domain.rays = true;
    target_domain.rays = true;
    Ok(StrIso::new(
        psi.source,
        psi.target,
        source_domain,
        target_domain,
        Arc::new(WithRays {
            base: psi.oracle,
            forward,
            inverse,
        }),
    ))
}

/// Whether `ℓ` and `η` agree between each positive-height domain node and
/// its image; returns the offending nodes.
pub fn ell_eta_mismatches(phi: &StrIso) -> Result<Vec<StrNode>> {
    let mut bad = Vec::new();
    for node in phi.source_domain.nodes(&phi.source)? {
        let StrNode::Finite { a, b } = node else { continue };
        if a.len() > MAX_ENUM || !fiber_height_positive(&phi.source, &a, &b)? {
            continue;
        }
        match phi.image(&node) {
            Some(StrNode::Finite { a: ja, b: jb }) if str_member(&phi.target, &ja, &jb) => {
                if ell(&phi.source, &a, &b)? != ell(&phi.target, &ja, &jb)?
                    || eta(&phi.source, &a, &b)? != eta(&phi.target, &ja, &jb)?
                {
                    bad.push(node);
                }
            }
            _ => bad.push(node),
        }
    }
    Ok(bad)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTripOptions {
    pub seed: u64,
    pub caps: Caps,
    /// Add rays to the domain (otherwise curves come from K-sets only).
    pub rays: bool,
    /// Redirect one image into a foreign fiber before reconstructing.
    pub corrupt: bool,
    pub battery: BatteryParams,
    /// Sampled pairs for the order check on large domains.
    pub order_sample: usize,
}

impl Default for RoundTripOptions {
    fn default() -> Self {
        RoundTripOptions {
            seed: 0,
            caps: Caps::default(),
            rays: false,
            corrupt: false,
            battery: BatteryParams::default(),
            order_sample: 2000,
        }
    }
}

/// Outcome of one hidden-relabeling round trip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub recovered: bool,
    pub conflicts: Vec<String>,
    pub probes: usize,
    pub battery_passed: bool,
    pub battery_reasons: Vec<String>,
    /// A map was returned and it differs from the hidden one.
    pub silent_mismatch: bool,
    pub invariant_problems: Vec<String>,
    pub factorization_violations: usize,
    pub hidden: IsoMap,
    pub reconstructed: Option<IsoMap>,
    pub trace: ReconstructionTrace,
}

/// Relabel `f` with a hidden seeded map, induce the structure isomorphism,
/// reconstruct and compare.
pub fn roundtrip(f: &PosetFragment, opts: &RoundTripOptions, exec: Exec) -> Result<Verdict> {
    let battery: BatteryReport = run_battery(f, &opts.battery);
    let (target, hidden) = relabel(f, opts.seed);
    let domain = Domain::witness(opts.caps.kset_cap, opts.rays);
    let mut phi = induce_str_iso(f, &target, &hidden, domain)?;
    let mut invariant_problems = Vec::new();
    if opts.corrupt {
        match corruption(f, &hidden) {
            Some((node, image)) => phi = phi.with_overrides(BTreeMap::from([(node, image)])),
            None => invariant_problems.push("no node available to corrupt".to_string()),
        }
    } else {
        invariant_problems = phi.check_invariants(opts.order_sample, opts.seed, exec)?;
    }
    let result = build_rho(&phi, opts.caps, exec);
    let (reconstructed, trace) = match result {
        Ok((rho, trace)) => (Some(rho), trace),
        Err(e) => (None, e.trace),
    };
    let factorization_violations = match &reconstructed {
        Some(rho) => verify_factorization(&phi, rho, None, exec)?.violations.len(),
        None => 0,
    };
    let silent_mismatch = reconstructed.as_ref().is_some_and(|rho| *rho != hidden);
    let recovered = reconstructed.as_ref() == Some(&hidden) && factorization_violations == 0;
    Ok(Verdict {
        recovered,
        conflicts: trace
            .conflicts
            .iter()
            .map(|c| c.describe(f, &target))
            .collect(),
        probes: phi.probes(),
        battery_passed: battery.passed,
        battery_reasons: battery.reasons(),
        silent_mismatch,
        invariant_problems,
        factorization_violations,
        hidden,
        reconstructed,
        trace,
    })
}

/// An incidence singleton `({x}|{m})` redirected to `({ρx}|{ρm'})` for
/// another point `m'` above `x`.
fn corruption(f: &PosetFragment, rho: &IsoMap) -> Option<(StrNode, StrNode)> {
    f.incidence().into_iter().find_map(|(x, m)| {
        let other = f.points_above(x).iter().find(|&p| p != m)?;
        Some((
            StrNode::finite([x], [m]),
            StrNode::finite([rho.h1[x]], [rho.h2[other]]),
        ))
    })
}
