//! Burning scripts, burning elements and the burning test for recurrence.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::engine::{EngineError, NetworkSpec};
use crate::matrix::IntMatrix;
use crate::spectra::{cycle_letters, ProductionData};

/// Cap on increments in [`burning_script`] and sweeps in [`stabilize_signed`].
pub const DEFAULT_ITERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BurningError {
    #[error("Laplacian diagonal entry {letter} is not positive")]
    NonPositiveDiagonal { letter: usize },
    #[error("no solution after {iterations} iterations; the Laplacian is probably not a toppling matrix")]
    IterationCap { iterations: u64 },
    #[error("procedure and sandpilization disagree on the burning script")]
    MethodDisagreement { procedure: Vec<BigInt>, sandpilization: Vec<BigInt> },
    #[error("invalid burning certificate: {reason}")]
    InvalidCertificate { reason: &'static str },
    #[error("recurrent state reached with odometer different from k")]
    OdometerMismatch { odometer: Vec<BigInt>, k: Vec<BigInt> },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Increment `y_a` at the smallest `a` with `(Ly)_a < 0`.
    Procedure,
    /// Signed stabilization in the sandpilization.
    Sandpilization,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BurningCertificate {
    /// Burning script, `y >= 1` (or `>= 1_C` when refined).
    pub y: Vec<BigInt>,
    /// Burning odometer `D y`.
    pub k: Vec<BigInt>,
    /// Burning element `L y`.
    pub beta: Vec<BigInt>,
    pub via: Method,
    pub refined: bool,
}

impl BurningCertificate {
    /// Checks every defining constraint against the network's data.
    pub fn validate(&self, pd: &ProductionData) -> Result<(), BurningError> {
        let n = pd.alphabet_size();
        let invalid = |reason| Err(BurningError::InvalidCertificate { reason });
        if self.y.len() != n || self.k.len() != n || self.beta.len() != n {
            return invalid("dimension mismatch");
        }
        let floor = lower_bound(pd, self.refined);
        if self.y.iter().zip(&floor).any(|(y, f)| y < f) {
            return invalid("script below its lower bound");
        }
        if pd.laplacian.mul_vec(&self.y) != self.beta {
            return invalid("beta differs from L y");
        }
        if pd.d_matrix().mul_vec(&self.y) != self.k {
            return invalid("k differs from D y");
        }
        if self.beta.iter().any(Signed::is_negative) {
            return invalid("beta has a negative entry");
        }
        if !pd.kernel.contains(&self.k) {
            return invalid("k is not in the total kernel");
        }
        Ok(())
    }
}

/// `1`, or `1_C` for the letters on directed cycles of the production graph.
fn lower_bound(pd: &ProductionData, refined: bool) -> Vec<BigInt> {
    if refined {
        cycle_letters(&pd.graph)
            .into_iter()
            .map(|on_cycle| BigInt::from(on_cycle as u8))
            .collect()
    } else {
        vec![BigInt::one(); pd.alphabet_size()]
    }
}

/// Pointwise smallest `y >= start` with `L y >= 0`.
///
/// Each pass takes the smallest letter with `(Ly)_a < 0` and raises `y_a`
/// by the least amount making that coordinate nonnegative, which is the
/// same as incrementing it one step at a time.
pub fn burning_script_from(l: &IntMatrix, start: &[BigInt], cap: u64) -> Result<Vec<BigInt>, BurningError> {
    let n = l.rows();
    if let Some(a) = (0..n).find(|&a| !l[(a, a)].is_positive()) {
        return Err(BurningError::NonPositiveDiagonal { letter: a });
    }
    let mut y = start.to_vec();
    let mut ly = l.mul_vec(&y);
    let mut iterations = 0u64;
    while let Some(a) = (0..n).find(|&a| ly[a].is_negative()) {
        if iterations >= cap {
            return Err(BurningError::IterationCap { iterations });
        }
        iterations += 1;
        let step = (-&ly[a]).div_ceil(&l[(a, a)]);
        y[a] += &step;
        for b in 0..n {
            ly[b] += &step * &l[(b, a)];
        }
    }
    Ok(y)
}

/// Pointwise smallest `y >= 1` with `L y >= 0`.
pub fn burning_script(l: &IntMatrix) -> Result<Vec<BigInt>, BurningError> {
    burning_script_from(l, &vec![BigInt::one(); l.rows()], DEFAULT_ITERATION_CAP)
}

/// Signed stabilization in the sandpilization: topple `a` while
/// `chips_a >= r_a`, each toppling subtracting column `a` of `L`. Returns
/// the stable configuration and the toppling counts.
pub fn stabilize_signed(
    reset: &[u64],
    l: &IntMatrix,
    chips: &[BigInt],
    cap: u64,
) -> Result<(Vec<BigInt>, Vec<BigInt>), BurningError> {
    let n = reset.len();
    let r: Vec<BigInt> = reset.iter().map(|&x| BigInt::from(x)).collect();
    let mut chips = chips.to_vec();
    let mut topples = vec![BigInt::zero(); n];
    let mut sweeps = 0u64;
    loop {
        let mut stable = true;
        for a in 0..n {
            if chips[a] < r[a] {
                continue;
            }
            stable = false;
            // Every one of these topplings is legal, since each removes at most r_a chips from a.
            let m = chips[a].div_floor(&r[a]);
            for b in 0..n {
                chips[b] -= &m * &l[(b, a)];
            }
            topples[a] += m;
        }
        if stable {
            return Ok((chips, topples));
        }
        sweeps += 1;
        if sweeps >= cap {
            return Err(BurningError::IterationCap { iterations: sweeps });
        }
    }
}

/// A burning certificate by the chosen method. Both methods are always run
/// and must agree; `method` only records which one the caller asked for.
pub fn burning_element(pd: &ProductionData, method: Method, refine_to_cycles: bool) -> Result<BurningCertificate, BurningError> {
    let n = pd.alphabet_size();
    let l = &pd.laplacian;
    let start = lower_bound(pd, refine_to_cycles);
    let by_procedure = burning_script_from(l, &start, DEFAULT_ITERATION_CAP)?;

    // q = r - 1 - L start; beta = r - 1 - q°, and y = start + topplings.
    let l_start = l.mul_vec(&start);
    let q: Vec<BigInt> = (0..n).map(|a| BigInt::from(pd.reset[a]) - 1 - &l_start[a]).collect();
    let (q_stable, topples) = stabilize_signed(&pd.reset, l, &q, DEFAULT_ITERATION_CAP)?;
    let by_sandpile: Vec<BigInt> = start.iter().zip(&topples).map(|(s, t)| s + t).collect();
    if by_procedure != by_sandpile {
        return Err(BurningError::MethodDisagreement {
            procedure: by_procedure,
            sandpilization: by_sandpile,
        });
    }
    let y = by_procedure;
    let beta = l.mul_vec(&y);
    let via_chips: Vec<BigInt> = (0..n).map(|a| BigInt::from(pd.reset[a]) - 1 - &q_stable[a]).collect();
    if beta != via_chips {
        return Err(BurningError::MethodDisagreement {
            procedure: beta,
            sandpilization: via_chips,
        });
    }
    let cert = BurningCertificate {
        k: pd.d_matrix().mul_vec(&y),
        y,
        beta,
        via: method,
        refined: refine_to_cycles,
    };
    cert.validate(pd)?;
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceResult {
    pub recurrent: bool,
    pub odometer: Vec<BigInt>,
}

/// The burning test: `q` is recurrent iff `beta ⊳⊳ q = q`, in which case the
/// odometer of that computation is exactly `k`.
pub fn is_recurrent(
    net: &NetworkSpec,
    pd: &ProductionData,
    joint: &[usize],
    cert: &BurningCertificate,
) -> Result<RecurrenceResult, BurningError> {
    cert.validate(pd)?;
    let run = net.stabilize(&cert.beta, joint, None)?;
    let recurrent = run.final_state == joint;
    if recurrent && run.odometer != cert.k {
        return Err(BurningError::OdometerMismatch {
            odometer: run.odometer,
            k: cert.k.clone(),
        });
    }
    Ok(RecurrenceResult {
        recurrent,
        odometer: run.odometer,
    })
}
