//! Fixed-width index sets.
//!
//! Every tier of a fragment holds at most [`MAX_TIER`] elements, so a set of
//! indices from one tier fits in eight machine words. All set algebra is done
//! word-wise; iteration yields indices in increasing order.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const WORDS: usize = 8;

/// Hard upper bound on the size of a single tier.
pub const MAX_TIER: usize = WORDS * 64;

/// A set of tier indices in `0..MAX_TIER`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct IdxSet {
    words: [u64; WORDS],
}

impl IdxSet {
    pub const fn empty() -> Self {
        IdxSet { words: [0; WORDS] }
    }

    /// The set `{0, 1, ..., n - 1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_TIER, "tier size {n} exceeds {MAX_TIER}");
        let mut s = Self::empty();
        for (w, word) in s.words.iter_mut().enumerate() {
            let lo = w * 64;
            if n >= lo + 64 {
                *word = u64::MAX;
            } else if n > lo {
                *word = (1u64 << (n - lo)) - 1;
            }
        }
        s
    }

    pub fn singleton(i: usize) -> Self {
        let mut s = Self::empty();
        s.insert(i);
        s
    }

    #[inline]
    pub fn insert(&mut self, i: usize) -> bool {
        assert!(i < MAX_TIER, "index {i} out of range");
        let (w, b) = (i / 64, i % 64);
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    #[inline]
    pub fn remove(&mut self, i: usize) -> bool {
        if i >= MAX_TIER {
            return false;
        }
        let (w, b) = (i / 64, i % 64);
        let present = self.words[w] & (1 << b) != 0;
        self.words[w] &= !(1 << b);
        present
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < MAX_TIER && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn union(&self, other: &Self) -> Self {
        let mut out = *self;
        for (o, w) in out.words.iter_mut().zip(other.words) {
            *o |= w;
        }
        out
    }

    #[inline]
    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = *self;
        for (o, w) in out.words.iter_mut().zip(other.words) {
            *o &= w;
        }
        out
    }

    #[inline]
    pub fn difference(&self, other: &Self) -> Self {
        let mut out = *self;
        for (o, w) in out.words.iter_mut().zip(other.words) {
            *o &= !w;
        }
        out
    }

    #[inline]
    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().zip(other.words).all(|(a, b)| a & !b == 0)
    }

    #[inline]
    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(other.words).all(|(a, b)| a & b == 0)
    }

    #[inline]
    pub fn intersects(&self, other: &Self) -> bool {
        !self.is_disjoint(other)
    }

    /// Smallest member, if any.
    pub fn first(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    /// The unique member of a one-element set.
    pub fn only(&self) -> Option<usize> {
        (self.len() == 1).then(|| self.first().unwrap())
    }

    pub fn iter(&self) -> Iter {
        Iter {
            words: self.words,
            word: 0,
        }
    }

    /// Map every member through `f`.
    pub fn map(&self, mut f: impl FnMut(usize) -> usize) -> Self {
        self.iter().map(&mut f).collect()
    }

    /// Select members of `self` by the bits of `mask`: bit `k` of `mask`
    /// picks the `k`-th smallest member.
    pub fn select(&self, mask: u64) -> Self {
        let mut out = Self::empty();
        for (k, i) in self.iter().enumerate().take(64) {
            if mask & (1 << k) != 0 {
                out.insert(i);
            }
        }
        out
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

pub struct Iter {
    words: [u64; WORDS],
    word: usize,
}

impl Iterator for Iter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.word < WORDS {
            let w = self.words[self.word];
            if w != 0 {
                let b = w.trailing_zeros() as usize;
                self.words[self.word] &= w - 1;
                return Some(self.word * 64 + b);
            }
            self.word += 1;
        }
        None
    }
}

impl IntoIterator for &IdxSet {
    type Item = usize;
    type IntoIter = Iter;

    fn into_iter(self) -> Iter {
        self.iter()
    }
}

impl FromIterator<usize> for IdxSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = Self::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl<const N: usize> From<[usize; N]> for IdxSet {
    fn from(items: [usize; N]) -> Self {
        items.into_iter().collect()
    }
}

/// Sets order by their sorted member lists, so maps keyed by `IdxSet`
/// iterate in a stable, human-readable order.
impl Ord for IdxSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for IdxSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for IdxSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for IdxSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for IdxSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let items = Vec::<usize>::deserialize(d)?;
        if let Some(bad) = items.iter().find(|&&i| i >= MAX_TIER) {
            return Err(serde::de::Error::custom(format!(
                "index {bad} exceeds tier limit {MAX_TIER}"
            )));
        }
        Ok(items.into_iter().collect())
    }
}

/// All subsets of `base` with cardinality in `lo..=hi`, in order of
/// increasing size and lexicographic within a size.
pub fn subsets_by_size(base: &IdxSet, lo: usize, hi: usize) -> impl Iterator<Item = IdxSet> {
    use itertools::Itertools;
    let members = base.to_vec();
    let hi = hi.min(members.len());
    (lo..=hi).flat_map(move |k| {
        members
            .clone()
            .into_iter()
            .combinations(k)
            .map(|c| c.into_iter().collect::<IdxSet>())
    })
}
