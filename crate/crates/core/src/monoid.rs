//! Finite transformation monoids: maps `Q -> Q` on a dense state set, their
//! closure under composition, idempotent powers and minimal idempotents.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

/// A total map on `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transform(Vec<u32>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("monoid closure exceeded the cap of {cap} elements")]
pub struct ClosureCapExceeded {
    pub cap: usize,
}

impl Transform {
    pub fn identity(n: usize) -> Self {
        Transform((0..n as u32).collect())
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> usize) -> Self {
        Transform((0..n).map(|q| f(q) as u32).collect())
    }

    pub fn from_vec(images: Vec<u32>) -> Self {
        Transform(images)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn apply(&self, q: usize) -> usize {
        self.0[q] as usize
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }

    /// `self ∘ other`: apply `other` first.
    pub fn after(&self, other: &Transform) -> Transform {
        Transform(other.0.iter().map(|&q| self.0[q as usize]).collect())
    }

    pub fn is_idempotent(&self) -> bool {
        self.0.iter().all(|&q| self.0[q as usize] == q)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &q)| i as u32 == q)
    }

    /// Sorted image of the map.
    pub fn image(&self) -> Vec<usize> {
        let mut seen = alloc::vec![false; self.0.len()];
        for &q in &self.0 {
            seen[q as usize] = true;
        }
        seen.iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect()
    }

    /// Fixed points of the map, sorted.
    pub fn fixed_points(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &q)| (i as u32 == q).then_some(i))
            .collect()
    }

    /// `self^k` for `k >= 0`, by repeated squaring.
    pub fn pow(&self, mut k: u64) -> Transform {
        let mut acc = Transform::identity(self.len());
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = base.after(&acc);
            }
            base = base.after(&base);
            k >>= 1;
        }
        acc
    }

    /// True if the map permutes `subset` (given sorted).
    pub fn permutes(&self, subset: &[usize]) -> bool {
        let mut hit = alloc::vec![false; self.0.len()];
        for &q in subset {
            let img = self.apply(q);
            if subset.binary_search(&img).is_err() || hit[img] {
                return false;
            }
            hit[img] = true;
        }
        true
    }
}

/// Index and period of the power sequence `m, m^2, m^3, ...`, found with
/// Floyd's cycle detection. Returns `(index, period)` where `index >= 1` is
/// the first power lying on the cycle.
pub fn power_cycle(m: &Transform) -> (u64, u64) {
    let step = |x: &Transform| x.after(m);
    // Sequence x_i = m^(i+1).
    let mut tortoise = step(m);
    let mut hare = step(&step(m));
    while tortoise != hare {
        tortoise = step(&tortoise);
        hare = step(&step(&hare));
    }
    let mut mu = 0u64;
    tortoise = m.clone();
    while tortoise != hare {
        tortoise = step(&tortoise);
        hare = step(&hare);
        mu += 1;
    }
    let mut lam = 1u64;
    hare = step(&tortoise);
    while tortoise != hare {
        hare = step(&hare);
        lam += 1;
    }
    (mu + 1, lam)
}

/// The idempotent power `m^j` together with its exponent `j >= 1`.
pub fn idempotent_power(m: &Transform) -> (Transform, u64) {
    let (index, period) = power_cycle(m);
    let j = index.div_ceil(period) * period;
    let p = m.pow(j);
    debug_assert!(p.is_idempotent());
    (p, j)
}

/// Closure of `generators` (together with the identity) under composition.
///
/// Elements are returned in breadth-first order with the identity first.
pub fn closure(
    n: usize,
    generators: &[Transform],
    cap: usize,
) -> Result<Vec<Transform>, ClosureCapExceeded> {
    let mut index: BTreeMap<Transform, usize> = BTreeMap::new();
    let mut elements = alloc::vec![Transform::identity(n)];
    index.insert(elements[0].clone(), 0);
    let mut head = 0;
    while head < elements.len() {
        let current = elements[head].clone();
        head += 1;
        for g in generators {
            let next = g.after(&current);
            if !index.contains_key(&next) {
                if elements.len() >= cap {
                    return Err(ClosureCapExceeded { cap });
                }
                index.insert(next.clone(), elements.len());
                elements.push(next);
            }
        }
    }
    Ok(elements)
}

/// Product of all idempotents among `elements`: the minimal idempotent of a
/// finite commutative monoid.
pub fn product_of_idempotents(n: usize, elements: &[Transform]) -> Transform {
    elements
        .iter()
        .filter(|m| m.is_idempotent())
        .fold(Transform::identity(n), |acc, f| f.after(&acc))
}

/// Minimal idempotent of the commutative monoid generated by `generators`,
/// without enumerating the monoid: the idempotent power of the product of
/// all generators.
pub fn minimal_idempotent_of_generated(n: usize, generators: &[Transform]) -> Transform {
    let product = generators
        .iter()
        .fold(Transform::identity(n), |acc, g| g.after(&acc));
    idempotent_power(&product).0
}
