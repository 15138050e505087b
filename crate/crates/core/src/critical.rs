//! Critical group, Laplacian cokernel and the recurrent-state count.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::lattice::{det_exact, lattice_index, snf_invariant_factors, GroupDesc, Lattice, LatticeError};
use crate::spectra::{ProductionData, SpectraError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CriticalError {
    #[error("network does not halt on all inputs (leading minor of size {witness} is nonpositive)")]
    NotHalting { witness: usize },
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("(I - P) maps a kernel basis vector outside Z^A")]
    NonIntegralImage,
    #[error("det L = {det} is not divisible by the index {iota}")]
    NonIntegralCount { det: BigInt, iota: BigInt },
    #[error("index of D Z^A in K is {global} but the product of local indices is {local}")]
    IndexMismatch { global: BigInt, local: BigInt },
    #[error("alphabet sizes differ: {left} and {right}")]
    AlphabetMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalReport {
    /// `Z^A / (I - P) K`.
    pub crit: GroupDesc,
    /// `Z^A / L Z^A`.
    pub laplacian_cokernel: GroupDesc,
    pub det_l: BigInt,
    /// `[K : D Z^A]`.
    pub iota: BigInt,
    pub rec_count: BigInt,
    pub rectangular: bool,
}

impl CriticalReport {
    pub fn compute(pd: &ProductionData) -> Result<Self, CriticalError> {
        let cert = pd.halting()?;
        if let Some(witness) = cert.witness {
            return Err(CriticalError::NotHalting { witness });
        }
        let crit = critical_group(pd)?;
        let laplacian_cokernel = laplacian_cokernel(pd);
        let det_l = det_exact(&pd.laplacian);
        let iota = iota(pd)?;
        let rec_count = recurrent_count(&det_l, &iota)?;
        Ok(CriticalReport {
            crit,
            laplacian_cokernel,
            det_l,
            rectangular: iota.is_one(),
            iota,
            rec_count,
        })
    }
}

/// `Z^A / (I - P) K`, presented by the images of a basis of `K`.
pub fn critical_group(pd: &ProductionData) -> Result<GroupDesc, CriticalError> {
    let n = pd.alphabet_size();
    let i_minus_p = pd.i_minus_p();
    let basis = pd.kernel.basis().to_rational();
    let image = i_minus_p.mul(&basis).to_integer().ok_or(CriticalError::NonIntegralImage)?;
    debug_assert_eq!(image.rows(), n);
    Ok(snf_invariant_factors(&image))
}

pub fn laplacian_cokernel(pd: &ProductionData) -> GroupDesc {
    snf_invariant_factors(&pd.laplacian)
}

/// `[K : D Z^A]`, cross-checked against the product of the local indices.
pub fn iota(pd: &ProductionData) -> Result<BigInt, CriticalError> {
    let global = lattice_index(&pd.d_lattice(), &pd.kernel)?;
    let mut local = BigInt::one();
    for (kv, letters) in pd.local_kernels.iter().zip(&pd.vertex_letters) {
        let diag: Vec<BigInt> = letters.iter().map(|&a| BigInt::from(pd.reset[a])).collect();
        local *= lattice_index(&Lattice::diagonal(&diag)?, kv)?;
    }
    if local != global {
        return Err(CriticalError::IndexMismatch { global, local });
    }
    Ok(global)
}

pub fn is_rectangular(pd: &ProductionData) -> bool {
    pd.kernel == pd.d_lattice()
}

/// `det L / iota`, which must be an integer.
pub fn recurrent_count(det_l: &BigInt, iota: &BigInt) -> Result<BigInt, CriticalError> {
    let (q, r) = det_l.div_rem(iota);
    if !r.is_zero() {
        return Err(CriticalError::NonIntegralCount {
            det: det_l.clone(),
            iota: iota.clone(),
        });
    }
    Ok(q)
}

/// Same total kernel and same production matrix.
pub fn homotopic(left: &ProductionData, right: &ProductionData) -> Result<bool, CriticalError> {
    if left.alphabet_size() != right.alphabet_size() {
        return Err(CriticalError::AlphabetMismatch {
            left: left.alphabet_size(),
            right: right.alphabet_size(),
        });
    }
    Ok(left.kernel.is_sublattice_of(&right.kernel)
        && right.kernel.is_sublattice_of(&left.kernel)
        && left.production == right.production)
}
