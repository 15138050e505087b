//! Exact integer linear algebra: Hermite and Smith normal forms, Bareiss
//! determinants, full-rank sublattices of `Z^n`, and rational solves.

use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::matrix::{IntMatrix, RatMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("generators span a rank {rank} subgroup of Z^{dim}; a full-rank lattice is required")]
    RankDeficient { rank: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("lattice is not contained in the claimed superlattice (column {column} is not a member)")]
    NotContained { column: usize },
    #[error("matrix is singular")]
    Singular,
}

/// Column Hermite normal form.
///
/// The result has one column per unit of rank. Pivot rows are strictly
/// increasing from left to right, each pivot is positive, entries above a
/// pivot are zero, and entries to the left of a pivot lie in `[0, pivot)`.
/// For a full-rank square input this makes the basis lower triangular.
pub fn hnf(m: &IntMatrix) -> IntMatrix {
    let (n, k) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut pc = 0;
    for i in 0..n {
        if pc == k {
            break;
        }
        // Euclid across columns pc..k in row i.
        loop {
            let best = (pc..k)
                .filter(|&j| !a[(i, j)].is_zero())
                .min_by(|&x, &y| a[(i, x)].abs().cmp(&a[(i, y)].abs()));
            let Some(j) = best else { break };
            a.swap_cols(pc, j);
            let mut done = true;
            for j in pc + 1..k {
                if a[(i, j)].is_zero() {
                    continue;
                }
                let q = a[(i, j)].div_floor(&a[(i, pc)]);
                a.col_axpy(j, pc, &q);
                if !a[(i, j)].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a[(i, pc)].is_zero() {
            continue;
        }
        if a[(i, pc)].is_negative() {
            a.negate_col(pc);
        }
        for j in 0..pc {
            let q = a[(i, j)].div_floor(&a[(i, pc)]);
            a.col_axpy(j, pc, &q);
        }
        pc += 1;
    }
    let cols: Vec<Vec<BigInt>> = (0..pc).map(|j| a.column(j)).collect();
    IntMatrix::from_columns(n, &cols)
}

/// Finitely generated abelian group `Z^free_rank x Z/d1 x ... x Z/dk` with
/// `d1 | d2 | ... | dk` and every `di >= 2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct GroupDesc {
    pub invariant_factors: Vec<BigInt>,
    pub free_rank: usize,
}

impl GroupDesc {
    pub fn trivial() -> Self {
        Self::default()
    }

    /// Normalizes an arbitrary list of cyclic orders (entries `<= 1` dropped)
    /// into invariant-factor form.
    pub fn from_cyclic_orders(orders: &[BigInt]) -> Self {
        let mut factors: Vec<BigInt> = Vec::new();
        for d in orders.iter().filter(|d| **d > BigInt::one()) {
            factors.push(d.clone());
        }
        // Repeatedly replace pairs (a, b) by (gcd, lcm) until the chain divides.
        let len = factors.len();
        for i in 0..len {
            for j in i + 1..len {
                let g = factors[i].gcd(&factors[j]);
                let l = factors[i].lcm(&factors[j]);
                factors[i] = g;
                factors[j] = l;
            }
        }
        factors.retain(|d| *d > BigInt::one());
        GroupDesc {
            invariant_factors: factors,
            free_rank: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.invariant_factors.is_empty()
    }

    /// Group order, or `None` for an infinite group.
    pub fn order(&self) -> Option<BigInt> {
        self.is_finite()
            .then(|| self.invariant_factors.iter().product())
    }

    pub fn is_divisibility_chain(&self) -> bool {
        self.invariant_factors.iter().all(|d| *d >= BigInt::from(2))
            && self
                .invariant_factors
                .windows(2)
                .all(|w| (&w[1] % &w[0]).is_zero())
    }
}

impl fmt::Display for GroupDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut first = true;
        for _ in 0..self.free_rank {
            write!(f, "{}Z", if first { "" } else { " x " })?;
            first = false;
        }
        for d in &self.invariant_factors {
            write!(f, "{}Z/{}", if first { "" } else { " x " }, d)?;
            first = false;
        }
        Ok(())
    }
}

/// Invariant factors of the cokernel `Z^rows / (column span of m)`.
///
/// Elementary row and column reduction with the smallest nonzero entry as
/// pivot, followed by a divisibility fix-up.
pub fn snf_invariant_factors(m: &IntMatrix) -> GroupDesc {
    let (n, k) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut diag: Vec<BigInt> = Vec::new();
    let mut t = 0;
    while t < n.min(k) {
        let Some((pi, pj)) = smallest_nonzero(&a, t) else {
            break;
        };
        a.swap_rows(t, pi);
        a.swap_cols(t, pj);
        loop {
            let mut clean = true;
            for i in t + 1..n {
                if !a[(i, t)].is_zero() {
                    let q = a[(i, t)].div_floor(&a[(t, t)]);
                    a.row_axpy(i, t, &q);
                    if !a[(i, t)].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in t + 1..k {
                if !a[(t, j)].is_zero() {
                    let q = a[(t, j)].div_floor(&a[(t, t)]);
                    a.col_axpy(j, t, &q);
                    if !a[(t, j)].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                // A remainder is smaller than the pivot; move it into place.
                let mut best = (t, t);
                for i in t + 1..n {
                    if !a[(i, t)].is_zero() && a[(i, t)].abs() < a[best].abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..k {
                    if !a[(t, j)].is_zero() && a[(t, j)].abs() < a[best].abs() {
                        best = (t, j);
                    }
                }
                a.swap_rows(t, best.0);
                a.swap_cols(t, best.1);
                continue;
            }
            // Row and column are clear; enforce divisibility of the remainder.
            let pivot = a[(t, t)].clone();
            let offender = (t + 1..n).find(|&i| (t + 1..k).any(|j| !(&a[(i, j)] % &pivot).is_zero()));
            match offender {
                Some(i) => {
                    let minus_one = -BigInt::one();
                    a.row_axpy(t, i, &minus_one);
                }
                None => break,
            }
        }
        diag.push(a[(t, t)].abs());
        t += 1;
    }
    let rank = diag.len();
    let mut factors: Vec<BigInt> = diag.into_iter().filter(|d| *d > BigInt::one()).collect();
    factors.sort();
    GroupDesc {
        invariant_factors: factors,
        free_rank: n - rank,
    }
}

fn smallest_nonzero(a: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in t..a.rows() {
        for j in t..a.cols() {
            if a[(i, j)].is_zero() {
                continue;
            }
            if best.is_none_or(|b| a[(i, j)].abs() < a[b].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

/// Fraction-free (Bareiss) determinant with row pivoting.
pub fn det_exact(m: &IntMatrix) -> BigInt {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.rows();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[(k, k)].is_zero() {
            match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                Some(i) => {
                    a.swap_rows(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)]) / &prev;
                a[(i, j)] = v;
            }
        }
        prev = a[(k, k)].clone();
    }
    sign * &a[(n - 1, n - 1)]
}

/// A full-rank sublattice of `Z^n`, stored by its canonical Hermite basis.
///
/// Two lattices are equal exactly when their bases are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    basis: IntMatrix,
}

impl Lattice {
    /// The lattice spanned by the columns of `generators`.
    pub fn from_generators(generators: &IntMatrix) -> Result<Self, LatticeError> {
        let basis = hnf(generators);
        if basis.cols() != generators.rows() {
            return Err(LatticeError::RankDeficient {
                rank: basis.cols(),
                dim: generators.rows(),
            });
        }
        Ok(Lattice { basis })
    }

    /// The rectangular lattice `r_1 Z x ... x r_n Z`.
    pub fn diagonal(r: &[BigInt]) -> Result<Self, LatticeError> {
        Self::from_generators(&IntMatrix::diagonal(r))
    }

    pub fn full(n: usize) -> Self {
        Lattice {
            basis: IntMatrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Hermite basis; columns are the basis vectors.
    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    /// Index `[Z^n : self]`.
    pub fn covolume(&self) -> BigInt {
        (0..self.dim()).map(|i| self.basis[(i, i)].clone()).product()
    }

    /// Integer coordinates of `v` in the Hermite basis, if `v` is a member.
    pub fn coordinates(&self, v: &[BigInt]) -> Option<Vec<BigInt>> {
        assert_eq!(v.len(), self.dim(), "vector dimension mismatch");
        let n = self.dim();
        let mut coeffs: Vec<BigInt> = Vec::with_capacity(n);
        for (i, vi) in v.iter().enumerate() {
            let mut rest = vi.clone();
            for (j, c) in coeffs.iter().enumerate() {
                rest -= &self.basis[(i, j)] * c;
            }
            let (q, r) = rest.div_rem(&self.basis[(i, i)]);
            if !r.is_zero() {
                return None;
            }
            coeffs.push(q);
        }
        Some(coeffs)
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        self.coordinates(v).is_some()
    }

    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        self.dim() == other.dim() && self.basis.columns().iter().all(|c| other.contains(c))
    }

    /// Block-diagonal product of lattices, in order.
    pub fn direct_sum(parts: &[Lattice]) -> Self {
        let n: usize = parts.iter().map(Lattice::dim).sum();
        let mut m = IntMatrix::zeros(n, n);
        let mut off = 0;
        for p in parts {
            for i in 0..p.dim() {
                for j in 0..p.dim() {
                    m[(off + i, off + j)] = p.basis[(i, j)].clone();
                }
            }
            off += p.dim();
        }
        // A block product of Hermite bases is already in Hermite form.
        Lattice { basis: m }
    }
}

/// The index `[sup : sub]`.
pub fn lattice_index(sub: &Lattice, sup: &Lattice) -> Result<BigInt, LatticeError> {
    if sub.dim() != sup.dim() {
        return Err(LatticeError::Dimension {
            expected: sup.dim(),
            found: sub.dim(),
        });
    }
    for (j, col) in sub.basis.columns().iter().enumerate() {
        if !sup.contains(col) {
            return Err(LatticeError::NotContained { column: j });
        }
    }
    Ok(sub.covolume() / sup.covolume())
}

/// Solves `m y = b` exactly.
pub fn rational_solve(m: &RatMatrix, b: &[BigRational]) -> Result<Vec<BigRational>, LatticeError> {
    let n = m.rows();
    if !m.is_square() {
        return Err(LatticeError::Dimension {
            expected: n,
            found: m.cols(),
        });
    }
    if b.len() != n {
        return Err(LatticeError::Dimension {
            expected: n,
            found: b.len(),
        });
    }
    let mut a = m.clone();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[(i, k)].is_zero()).ok_or(LatticeError::Singular)?;
        a.swap_rows(k, p);
        rhs.swap(k, p);
        let pivot = a[(k, k)].clone();
        for i in 0..n {
            if i == k || a[(i, k)].is_zero() {
                continue;
            }
            let f = &a[(i, k)] / &pivot;
            for j in k..n {
                let d = &f * &a[(k, j)];
                a[(i, j)] -= d;
            }
            let d = &f * &rhs[k];
            rhs[i] -= d;
        }
    }
    Ok((0..n).map(|i| &rhs[i] / &a[(i, i)]).collect())
}

/// Exact inverse of a square rational matrix.
pub fn rational_inverse(m: &RatMatrix) -> Result<RatMatrix, LatticeError> {
    let n = m.rows();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = alloc::vec![BigRational::zero(); n];
        e[j] = BigRational::one();
        cols.push(rational_solve(m, &e)?);
    }
    Ok(RatMatrix::from_columns(n, &cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::int_vec;
    use alloc::vec;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        int_vec(v)
    }

    fn paper_laplacian() -> IntMatrix {
        IntMatrix::from_i64_rows(&[&[2, 0, 0], &[0, 2, 0], &[-3, -1, 1]])
    }

    #[test]
    fn hnf_of_identity_and_diagonal() {
        let id = IntMatrix::identity(3);
        assert_eq!(hnf(&id), id);
        let d = IntMatrix::from_i64_rows(&[&[2, 0], &[0, 2]]);
        assert_eq!(hnf(&d), d);
    }

    #[test]
    fn hnf_of_even_sum_lattice() {
        // Columns (1,1) and (1,-1).
        let m = IntMatrix::from_columns(2, &[ints(&[1, 1]), ints(&[1, -1])]);
        let h = hnf(&m);
        assert_eq!(h.columns(), vec![ints(&[1, 1]), ints(&[0, 2])]);
        let lat = Lattice::from_generators(&m).unwrap();
        for g in m.columns() {
            assert!(lat.contains(&g));
        }
        let back = Lattice::from_generators(&h).unwrap();
        assert_eq!(back, lat);
        assert!(!lat.contains(&ints(&[1, 0])));
    }

    #[test]
    fn snf_examples() {
        let g = snf_invariant_factors(&paper_laplacian());
        assert_eq!(g.invariant_factors, ints(&[2, 2]));
        assert_eq!(g.order(), Some(BigInt::from(4)));

        let tri = IntMatrix::from_i64_rows(&[&[2, -1], &[-1, 2]]);
        assert_eq!(snf_invariant_factors(&tri).invariant_factors, ints(&[3]));

        assert!(snf_invariant_factors(&IntMatrix::identity(4)).is_trivial());
    }

    #[test]
    fn snf_reports_free_rank() {
        let sinkless = IntMatrix::from_i64_rows(&[&[1, -1], &[-1, 1]]);
        let g = snf_invariant_factors(&sinkless);
        assert_eq!(g.free_rank, 1);
        assert_eq!(g.order(), None);
    }

    #[test]
    fn snf_needs_divisibility_fixup() {
        // diag(2, 3) is Z/6, which a naive diagonal read would report as (2, 3).
        let m = IntMatrix::from_i64_rows(&[&[2, 0], &[0, 3]]);
        assert_eq!(snf_invariant_factors(&m).invariant_factors, ints(&[6]));
    }

    #[test]
    fn determinants() {
        assert_eq!(det_exact(&paper_laplacian()), BigInt::from(4));
        assert_eq!(det_exact(&IntMatrix::identity(5)), BigInt::one());
        assert_eq!(
            det_exact(&IntMatrix::from_i64_rows(&[&[2, -1], &[-1, 2]])),
            BigInt::from(3)
        );
        // Needs a row swap.
        assert_eq!(
            det_exact(&IntMatrix::from_i64_rows(&[&[0, 1], &[1, 0]])),
            BigInt::from(-1)
        );
    }

    #[test]
    fn indices() {
        let two = Lattice::diagonal(&ints(&[2, 2])).unwrap();
        let even = Lattice::from_generators(&IntMatrix::from_columns(
            2,
            &[ints(&[1, 1]), ints(&[1, -1])],
        ))
        .unwrap();
        assert_eq!(lattice_index(&two, &even).unwrap(), BigInt::from(2));
        assert_eq!(lattice_index(&even, &even).unwrap(), BigInt::one());
        let six = Lattice::diagonal(&ints(&[6])).unwrap();
        let two1 = Lattice::diagonal(&ints(&[2])).unwrap();
        assert_eq!(lattice_index(&six, &two1).unwrap(), BigInt::from(3));
        assert!(matches!(
            lattice_index(&even, &two),
            Err(LatticeError::NotContained { .. })
        ));
    }

    #[test]
    fn rank_deficient_generators_rejected() {
        let m = IntMatrix::from_columns(2, &[ints(&[1, 1]), ints(&[2, 2])]);
        assert_eq!(
            Lattice::from_generators(&m),
            Err(LatticeError::RankDeficient { rank: 1, dim: 2 })
        );
    }

    #[test]
    fn rational_solves() {
        let l = paper_laplacian().to_rational();
        let b = crate::matrix::rat_vec(&ints(&[4, 4, 0]));
        let y = rational_solve(&l, &b).unwrap();
        // Forward substitution: 2y1 = 4, 2y2 = 4, -3*2 - 2 + y3 = 0.
        assert_eq!(y, crate::matrix::rat_vec(&ints(&[2, 2, 8])));

        // (I - P) u = 1_c with P's column c zero.
        let half = |n: i64| BigRational::new(BigInt::from(n), BigInt::from(2));
        let i_minus_p = RatMatrix::from_rows(vec![
            vec![half(2), half(0), half(0)],
            vec![half(0), half(2), half(0)],
            vec![half(-3), half(-1), half(2)],
        ]);
        let e_c = crate::matrix::rat_vec(&ints(&[0, 0, 1]));
        assert_eq!(rational_solve(&i_minus_p, &e_c).unwrap(), e_c);

        let id = IntMatrix::identity(3).to_rational();
        let b = crate::matrix::rat_vec(&ints(&[5, -1, 7]));
        assert_eq!(rational_solve(&id, &b).unwrap(), b);

        let singular = IntMatrix::from_i64_rows(&[&[1, -1], &[-1, 1]]).to_rational();
        assert_eq!(
            rational_solve(&singular, &crate::matrix::rat_vec(&ints(&[1, 0]))),
            Err(LatticeError::Singular)
        );
    }

    fn small_matrix(n: usize, k: usize) -> impl Strategy<Value = IntMatrix> {
        proptest::collection::vec(-4i64..=4, n * k).prop_map(move |v| {
            let rows: Vec<Vec<BigInt>> = v.chunks(k).map(ints).collect();
            IntMatrix::from_rows(rows)
        })
    }

    /// Brute-force membership: is `v` an integer combination of `gens` with
    /// coefficients in `[-bound, bound]`?
    fn spanned_by(gens: &[Vec<BigInt>], v: &[BigInt], bound: i64) -> bool {
        fn rec(gens: &[Vec<BigInt>], acc: &mut Vec<BigInt>, v: &[BigInt], bound: i64) -> bool {
            match gens.split_first() {
                None => acc.as_slice() == v,
                Some((g, rest)) => {
                    for c in -bound..=bound {
                        let c = BigInt::from(c);
                        for (a, x) in acc.iter_mut().zip(g) {
                            *a += &c * x;
                        }
                        let hit = rec(rest, acc, v, bound);
                        for (a, x) in acc.iter_mut().zip(g) {
                            *a -= &c * x;
                        }
                        if hit {
                            return true;
                        }
                    }
                    false
                }
            }
        }
        let mut acc = vec![BigInt::zero(); v.len()];
        rec(gens, &mut acc, v, bound)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hnf_preserves_span(m in small_matrix(2, 3)) {
            let h = hnf(&m);
            // Every original generator lies in the HNF span and vice versa.
            for g in m.columns() {
                prop_assert!(spanned_by(&h.columns(), &g, 12));
            }
            if h.cols() == 2 {
                // Full rank: the spanned lattice has covolume gcd of the 2x2 minors.
                let cols = m.columns();
                let mut g = BigInt::zero();
                for i in 0..cols.len() {
                    for j in i + 1..cols.len() {
                        let minor = &cols[i][0] * &cols[j][1] - &cols[i][1] * &cols[j][0];
                        g = g.gcd(&minor);
                    }
                }
                prop_assert_eq!(&h[(0, 0)] * &h[(1, 1)], g);
            } else {
                for g in h.columns() {
                    prop_assert!(spanned_by(&m.columns(), &g, 12));
                }
            }
        }

        #[test]
        fn invariant_factor_product_is_abs_det(m in small_matrix(3, 3)) {
            let det = det_exact(&m);
            let g = snf_invariant_factors(&m);
            prop_assert!(g.is_divisibility_chain());
            if det.is_zero() {
                prop_assert!(g.free_rank > 0);
            } else {
                prop_assert_eq!(g.order().unwrap(), det.abs());
            }
        }

        #[test]
        fn snf_cokernel_matches_hnf_covolume(m in small_matrix(2, 3)) {
            let h = hnf(&m);
            if h.cols() == 2 {
                let lat = Lattice::from_generators(&m).unwrap();
                prop_assert_eq!(snf_invariant_factors(&m).order().unwrap(), lat.covolume());
            }
        }

        #[test]
        fn index_is_multiplicative(
            c in small_matrix(2, 2),
            b_extra in small_matrix(2, 2),
            a_extra in small_matrix(2, 2),
        ) {
            // Chain A ⊆ B ⊆ C built by multiplying generators.
            prop_assume!(!det_exact(&c).is_zero());
            prop_assume!(!det_exact(&b_extra).is_zero());
            prop_assume!(!det_exact(&a_extra).is_zero());
            let cl = Lattice::from_generators(&c).unwrap();
            let bm = c.mul(&b_extra);
            let bl = Lattice::from_generators(&bm).unwrap();
            let al = Lattice::from_generators(&bm.mul(&a_extra)).unwrap();
            let ab = lattice_index(&al, &bl).unwrap();
            let bc = lattice_index(&bl, &cl).unwrap();
            let ac = lattice_index(&al, &cl).unwrap();
            prop_assert_eq!(ac, ab * bc);
        }
    }
}
