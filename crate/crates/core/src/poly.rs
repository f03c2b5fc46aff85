//! Bivariate polynomials over a small prime field, dense in the monomials of
//! bounded total degree.

use std::collections::HashSet;
use std::fmt;

/// Monomial exponents `(i, j)` for `x^i y^j`, grouped by total degree and,
/// within a degree, by decreasing power of `x`.
fn monomials(d: usize) -> Vec<(usize, usize)> {
    (0..=d)
        .flat_map(|k| (0..=k).rev().map(move |i| (i, k - i)))
        .collect()
}

fn monomial_index(i: usize, j: usize) -> usize {
    let k = i + j;
    k * (k + 1) / 2 + (k - i)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    p: u32,
    /// Coefficient of each monomial, indexed by [`monomial_index`].
    coeffs: Vec<u32>,
}

impl Poly {
    pub fn from_terms(p: u32, terms: &[(u32, usize, usize)]) -> Self {
        let d = terms.iter().map(|&(_, i, j)| i + j).max().unwrap_or(0);
        let mut coeffs = vec![0; (d + 1) * (d + 2) / 2];
        for &(c, i, j) in terms {
            let k = monomial_index(i, j);
            coeffs[k] = (coeffs[k] + c) % p;
        }
        Poly { p, coeffs }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0 {
            self.coeffs.pop();
        }
        self
    }

    pub fn degree(&self) -> Option<usize> {
        let mons = monomials(self.max_degree());
        self.coeffs
            .iter()
            .zip(mons)
            .filter(|(&c, _)| c != 0)
            .map(|(_, (i, j))| i + j)
            .max()
    }

    fn max_degree(&self) -> usize {
        let mut d = 0;
        while (d + 1) * (d + 2) / 2 < self.coeffs.len() {
            d += 1;
        }
        d
    }

    pub fn eval(&self, x: u32, y: u32) -> u32 {
        let p = self.p;
        let mut acc = 0;
        for (&c, (i, j)) in self.coeffs.iter().zip(monomials(self.max_degree())) {
            if c != 0 {
                acc = (acc + c * pow_mod(x, i, p) % p * pow_mod(y, j, p)) % p;
            }
        }
        acc
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let p = self.p;
        let (da, db) = (self.max_degree(), other.max_degree());
        let mut coeffs = vec![0; (da + db + 1) * (da + db + 2) / 2];
        for (&c1, (i1, j1)) in self.coeffs.iter().zip(monomials(da)) {
            if c1 == 0 {
                continue;
            }
            for (&c2, (i2, j2)) in other.coeffs.iter().zip(monomials(db)) {
                if c2 != 0 {
                    let k = monomial_index(i1 + i2, j1 + j2);
                    coeffs[k] = (coeffs[k] + c1 * c2) % p;
                }
            }
        }
        Poly { p, coeffs }.trimmed()
    }

    /// Coefficient of the leading monomial: highest total degree, then
    /// highest power of `x`.
    fn leading(&self) -> u32 {
        let d = self.degree().unwrap_or(0);
        let start = d * (d + 1) / 2;
        self.coeffs[start..]
            .iter()
            .copied()
            .find(|&c| c != 0)
            .unwrap_or(0)
    }

    pub fn is_normalized(&self) -> bool {
        self.leading() == 1
    }
}

fn pow_mod(base: u32, exp: usize, p: u32) -> u32 {
    (0..exp).fold(1, |acc, _| acc * base % p)
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (&c, (i, j)) in self.coeffs.iter().zip(monomials(self.max_degree())) {
            if c == 0 {
                continue;
            }
            let mut mono = String::new();
            for (var, e) in [("x", i), ("y", j)] {
                match e {
                    0 => {}
                    1 => mono.push_str(var),
                    _ => mono.push_str(&format!("{var}^{e}")),
                }
            }
            terms.push(match (c, mono.is_empty()) {
                (_, true) => c.to_string(),
                (1, false) => mono,
                (_, false) => format!("{c}{mono}"),
            });
        }
        if terms.is_empty() {
            return write!(f, "0");
        }
        // highest degree first
        terms.reverse();
        write!(f, "{}", terms.join("+"))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (mod {})", self.p)
    }
}

/// All normalized polynomials of total degree exactly `k`.
pub fn normalized_of_degree(p: u32, k: usize) -> Vec<Poly> {
    let size = (k + 1) * (k + 2) / 2;
    let top = k + 1;
    let lower = size - top;
    let mut out = Vec::new();
    // top-degree block: first nonzero coefficient is 1
    let mut tops = Vec::new();
    for lead in 0..top {
        let free = top - lead - 1;
        for rest in 0..(p as usize).pow(free as u32) {
            let mut block = vec![0u32; top];
            block[lead] = 1;
            let mut r = rest;
            for slot in block.iter_mut().skip(lead + 1) {
                *slot = (r % p as usize) as u32;
                r /= p as usize;
            }
            tops.push(block);
        }
    }
    for block in &tops {
        for low in 0..(p as usize).pow(lower as u32) {
            let mut coeffs = Vec::with_capacity(size);
            let mut r = low;
            for _ in 0..lower {
                coeffs.push((r % p as usize) as u32);
                r /= p as usize;
            }
            coeffs.extend_from_slice(block);
            out.push(Poly { p, coeffs }.trimmed());
        }
    }
    out
}

/// Normalized irreducible polynomials of total degree `1..=d`, decided by
/// exhaustive products of lower-degree normalized factors.
pub fn irreducibles(p: u32, d: usize) -> Vec<Poly> {
    let by_degree: Vec<Vec<Poly>> = (0..=d)
        .map(|k| if k == 0 { Vec::new() } else { normalized_of_degree(p, k) })
        .collect();
    let mut reducible = HashSet::new();
    for k in 2..=d {
        for a in 1..=k / 2 {
            let b = k - a;
            for f in &by_degree[a] {
                for g in &by_degree[b] {
                    reducible.insert(f.mul(g));
                }
            }
        }
    }
    by_degree
        .into_iter()
        .flatten()
        .filter(|f| !reducible.contains(f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_layout() {
        for (k, &(i, j)) in monomials(3).iter().enumerate() {
            assert_eq!(monomial_index(i, j), k);
        }
    }

    #[test]
    fn counts_over_f2() {
        // lines: (2^2 - 1) directions times 2 constants
        assert_eq!(normalized_of_degree(2, 1).len(), 6);
        assert_eq!(irreducibles(2, 1).len(), 6);
    }

    #[test]
    fn products_are_reducible() {
        let x = Poly::from_terms(3, &[(1, 1, 0)]);
        let y = Poly::from_terms(3, &[(1, 0, 1)]);
        let xy = x.mul(&y);
        assert_eq!(xy.to_string(), "xy");
        let irr = irreducibles(3, 2);
        assert!(!irr.contains(&xy));
        assert!(irr.contains(&x));
        // x^2 + 1 has no factor over F_3
        let q = Poly::from_terms(3, &[(1, 2, 0), (1, 0, 0)]);
        assert!(irr.contains(&q));
        // x^2 - 1 = (x - 1)(x + 1)
        let r = Poly::from_terms(3, &[(1, 2, 0), (2, 0, 0)]);
        assert!(!irr.contains(&r));
    }

    #[test]
    fn eval_and_normalize() {
        let f = Poly::from_terms(5, &[(1, 2, 0), (4, 0, 1), (3, 0, 0)]);
        assert_eq!(f.eval(2, 1), (4 + 4 + 3) % 5);
        assert!(f.is_normalized());
        assert_eq!(f.degree(), Some(2));
        assert!(normalized_of_degree(3, 2).iter().all(Poly::is_normalized));
    }
}
