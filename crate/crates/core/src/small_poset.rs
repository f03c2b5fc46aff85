//! Tiny abstract posets and brute-force order isomorphism.

use crate::error::{Error, Result};
use crate::poset::PosetFragment;

/// Brute-force isomorphism testing is limited to this many elements.
pub const MAX_BRUTE_FORCE: usize = 12;

/// A finite poset stored as a dense `leq` matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmallPoset {
    leq: Vec<Vec<bool>>,
}

impl SmallPoset {
    /// Build from a `leq` matrix; rejects relations that are not partial orders.
    pub fn from_matrix(leq: Vec<Vec<bool>>) -> Result<Self> {
        let n = leq.len();
        if leq.iter().any(|row| row.len() != n) {
            return Err(Error::Format("order matrix is not square".into()));
        }
        let p = SmallPoset { leq };
        if let Some(why) = p.order_violation() {
            return Err(Error::Format(why));
        }
        Ok(p)
    }

    /// Build from strict relations `lo < hi`, closing transitively.
    pub fn from_relations(n: usize, lt: &[(usize, usize)]) -> Result<Self> {
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in lt {
            if a >= n || b >= n {
                return Err(Error::Format(format!("relation ({a}, {b}) out of range")));
            }
            leq[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        Self::from_matrix(leq)
    }

    pub fn chain(n: usize) -> Self {
        let rel: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_relations(n, &rel).unwrap()
    }

    /// `r` pairwise incomparable minimal nodes under a single top node.
    pub fn i_r(r: usize) -> Self {
        let rel: Vec<_> = (0..r).map(|i| (i, r)).collect();
        Self::from_relations(r + 1, &rel).unwrap()
    }

    /// The whole fragment as an abstract poset (minimal node first, then
    /// curves, then points).
    pub fn from_fragment(f: &PosetFragment) -> Self {
        let elems = f.all_elements();
        let leq = elems
            .iter()
            .map(|&x| elems.iter().map(|&y| f.leq(x, y).unwrap()).collect())
            .collect();
        SmallPoset { leq }
    }

    pub fn len(&self) -> usize {
        self.leq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leq.is_empty()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    fn order_violation(&self) -> Option<String> {
        let n = self.len();
        for a in 0..n {
            if !self.leq[a][a] {
                return Some(format!("not reflexive at {a}"));
            }
            for b in 0..n {
                if a != b && self.leq[a][b] && self.leq[b][a] {
                    return Some(format!("not antisymmetric at {a}, {b}"));
                }
                for c in 0..n {
                    if self.leq[a][b] && self.leq[b][c] && !self.leq[a][c] {
                        return Some(format!("not transitive at {a}, {b}, {c}"));
                    }
                }
            }
        }
        None
    }

    /// Number of elements strictly below each element.
    fn down_degrees(&self) -> Vec<usize> {
        (0..self.len())
            .map(|b| (0..self.len()).filter(|&a| a != b && self.leq[a][b]).count())
            .collect()
    }

    fn up_degrees(&self) -> Vec<usize> {
        (0..self.len())
            .map(|a| (0..self.len()).filter(|&b| a != b && self.leq[a][b]).count())
            .collect()
    }

    /// Length (number of strict steps) of the longest chain ending at each
    /// element, by explicit chain enumeration.
    pub fn heights(&self) -> Vec<usize> {
        let n = self.len();
        let mut best = vec![0; n];
        let mut stack: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        while let Some(chain) = stack.pop() {
            let top = *chain.last().unwrap();
            best[top] = best[top].max(chain.len() - 1);
            for next in 0..n {
                if next != top && self.leq[top][next] {
                    let mut longer = chain.clone();
                    longer.push(next);
                    stack.push(longer);
                }
            }
        }
        best
    }

    pub fn dim(&self) -> usize {
        self.heights().into_iter().max().unwrap_or(0)
    }
}

/// Order isomorphism by permutation search with degree pruning.
pub fn small_poset_isomorphic(p: &SmallPoset, q: &SmallPoset) -> Result<bool> {
    for s in [p, q] {
        if s.len() > MAX_BRUTE_FORCE {
            return Err(Error::SizeBound {
                what: "brute-force isomorphism",
                got: s.len(),
                limit: MAX_BRUTE_FORCE,
            });
        }
    }
    if p.len() != q.len() {
        return Ok(false);
    }
    let (pd, pu) = (p.down_degrees(), p.up_degrees());
    let (qd, qu) = (q.down_degrees(), q.up_degrees());
    let mut ps: Vec<_> = pd.iter().zip(&pu).collect();
    let mut qs: Vec<_> = qd.iter().zip(&qu).collect();
    ps.sort();
    qs.sort();
    if ps != qs {
        return Ok(false);
    }
    let n = p.len();
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    Ok(extend(p, q, &pd, &pu, &qd, &qu, 0, &mut image, &mut used))
}

#[allow(clippy::too_many_arguments)]
fn extend(
    p: &SmallPoset,
    q: &SmallPoset,
    pd: &[usize],
    pu: &[usize],
    qd: &[usize],
    qu: &[usize],
    i: usize,
    image: &mut [usize],
    used: &mut [bool],
) -> bool {
    let n = p.len();
    if i == n {
        return true;
    }
    for cand in 0..n {
        if used[cand] || pd[i] != qd[cand] || pu[i] != qu[cand] {
            continue;
        }
        let consistent = (0..i).all(|j| {
            p.leq(i, j) == q.leq(cand, image[j]) && p.leq(j, i) == q.leq(image[j], cand)
        });
        if !consistent {
            continue;
        }
        image[i] = cand;
        used[cand] = true;
        if extend(p, q, pd, pu, qd, qu, i + 1, image, used) {
            return true;
        }
        used[cand] = false;
    }
    false
}
