//! Coarse algebraic data of a network: total kernel, production matrix,
//! Laplacian, halting certificate, production graph and sandpilization.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::engine::{EngineError, NetworkError, NetworkSpec};
use crate::lattice::{det_exact, Lattice};
use crate::matrix::{IntMatrix, RatMatrix};
use crate::oracle::{GlobalMonoid, OracleCaps, OracleError};
use crate::processor::{self, ProcessorError, ProcessorSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectraError {
    #[error("vertex {vertex}: {source}")]
    Processor {
        vertex: usize,
        #[source]
        source: ProcessorError,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("production of letter {letter} differs between locally recurrent states {first} and {second}")]
    BaseStateMismatch { letter: usize, first: usize, second: usize },
    #[error("Laplacian entry ({row}, {col}) is not an integer")]
    NonIntegralLaplacian { row: usize, col: usize },
    #[error("Laplacian has a positive off-diagonal entry at ({row}, {col})")]
    PositiveOffDiagonal { row: usize, col: usize },
    #[error("matrix is not square")]
    NotSquare,
    #[error("simulated production of kernel vector {column} disagrees with P k")]
    Linearity { column: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("acyclicity conditions disagree: {0:?}")]
    BatteryDisagreement(NocycleBattery),
}

/// Everything derived from the local kernels and one reset cycle per letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductionData {
    /// Total kernel `K`, a full-rank sublattice of `Z^A`.
    pub kernel: Lattice,
    /// Local kernels in vertex order, each over that vertex's letters.
    pub local_kernels: Vec<Lattice>,
    /// Letters of each vertex, in local order.
    pub vertex_letters: Vec<Vec<usize>>,
    /// Reset numbers `r_a`; the diagonal of `D`.
    pub reset: Vec<u64>,
    /// Production matrix `P`.
    pub production: RatMatrix,
    /// `L = (I - P) D`.
    pub laplacian: IntMatrix,
    /// `graph[a]` lists the letters `b` with `P_ba > 0`.
    pub graph: Vec<Vec<usize>>,
}

impl ProductionData {
    pub fn compute(net: &NetworkSpec) -> Result<Self, SpectraError> {
        let (kernel, local_kernels) = total_kernel(net)?;
        let reset = reset_vector(net)?;
        let production = production_matrix(net, &reset)?;
        let laplacian = laplacian(&production, &reset)?;
        let graph = production_graph(&production);
        Ok(ProductionData {
            kernel,
            local_kernels,
            vertex_letters: net.vertices().iter().map(|p| p.letters().to_vec()).collect(),
            reset,
            production,
            laplacian,
            graph,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.reset.len()
    }

    /// `D` as an integer matrix.
    pub fn d_matrix(&self) -> IntMatrix {
        let diag: Vec<BigInt> = self.reset.iter().map(|&r| BigInt::from(r)).collect();
        IntMatrix::diagonal(&diag)
    }

    /// The lattice `D Z^A`.
    pub fn d_lattice(&self) -> Lattice {
        Lattice::from_generators(&self.d_matrix()).expect("reset numbers are positive")
    }

    /// `I - P`.
    pub fn i_minus_p(&self) -> RatMatrix {
        RatMatrix::identity(self.alphabet_size()).sub(&self.production)
    }

    pub fn is_acyclic(&self) -> bool {
        is_acyclic(&self.graph)
    }

    pub fn halting(&self) -> Result<HaltingCertificate, SpectraError> {
        halting_check(&self.laplacian)
    }
}

fn reset_vector(net: &NetworkSpec) -> Result<Vec<u64>, SpectraError> {
    let mut r = vec![0; net.alphabet_size()];
    for (v, p) in net.vertices().iter().enumerate() {
        let rv = processor::reset_numbers(p).map_err(|source| SpectraError::Processor { vertex: v, source })?;
        for (&a, ra) in p.letters().iter().zip(rv) {
            r[a] = ra;
        }
    }
    Ok(r)
}

/// `K = prod K_v`, embedded in `Z^A`; also returns the local kernels.
pub fn total_kernel(net: &NetworkSpec) -> Result<(Lattice, Vec<Lattice>), SpectraError> {
    let n = net.alphabet_size();
    let mut gens = Vec::new();
    let mut locals = Vec::with_capacity(net.vertex_count());
    for (v, p) in net.vertices().iter().enumerate() {
        let kv = processor::local_kernel(p).map_err(|source| SpectraError::Processor { vertex: v, source })?;
        for col in kv.basis().columns() {
            let mut g = vec![BigInt::zero(); n];
            for (&a, c) in p.letters().iter().zip(col) {
                g[a] = c;
            }
            gens.push(g);
        }
        locals.push(kv);
    }
    let k = Lattice::from_generators(&IntMatrix::from_columns(n, &gens))
        .expect("local kernels have full rank");
    Ok((k, locals))
}

/// `P`, column `a` being the emission of `r_a` letters `a` divided by `r_a`.
/// Every locally recurrent state of the owner is tried and must agree.
pub fn production_matrix(net: &NetworkSpec, reset: &[u64]) -> Result<RatMatrix, SpectraError> {
    let n = net.alphabet_size();
    let rec: Vec<Vec<usize>> = net.vertices().iter().map(processor::locally_recurrent_states).collect();
    let base: Vec<usize> = rec.iter().map(|r| r[0]).collect();
    let mut columns = Vec::with_capacity(n);
    for a in 0..n {
        let v = net.owner(a);
        let mut x = vec![BigInt::zero(); n];
        x[a] = BigInt::from(reset[a]);
        let mut first: Option<Vec<BigInt>> = None;
        let mut joint = base.clone();
        for &q in &rec[v] {
            joint[v] = q;
            let out = net.local_emission(&x, &joint)?;
            match &first {
                None => first = Some(out),
                Some(f) if *f != out => {
                    return Err(SpectraError::BaseStateMismatch {
                        letter: a,
                        first: rec[v][0],
                        second: q,
                    })
                }
                Some(_) => {}
            }
        }
        let r = BigInt::from(reset[a]);
        columns.push(
            first
                .expect("at least one locally recurrent state")
                .into_iter()
                .map(|e| BigRational::new(e, r.clone()))
                .collect::<Vec<_>>(),
        );
    }
    Ok(RatMatrix::from_columns(n, &columns))
}

/// `L = (I - P) D`, checked to be an integer matrix.
pub fn laplacian(production: &RatMatrix, reset: &[u64]) -> Result<IntMatrix, SpectraError> {
    let n = reset.len();
    let mut l = IntMatrix::zeros(n, n);
    for b in 0..n {
        for a in 0..n {
            let delta = if a == b { BigRational::from_integer(1.into()) } else { BigRational::zero() };
            let v = (delta - &production[(b, a)]) * BigRational::from_integer(reset[a].into());
            if !v.is_integer() {
                return Err(SpectraError::NonIntegralLaplacian { row: b, col: a });
            }
            l[(b, a)] = v.to_integer();
        }
    }
    Ok(l)
}

/// Edges `a -> b` with `P_ba > 0`.
pub fn production_graph(production: &RatMatrix) -> Vec<Vec<usize>> {
    let n = production.rows();
    (0..n)
        .map(|a| (0..n).filter(|&b| production[(b, a)].is_positive()).collect())
        .collect()
}

/// Kahn's algorithm.
pub fn is_acyclic(graph: &[Vec<usize>]) -> bool {
    let n = graph.len();
    let mut indeg = vec![0usize; n];
    for outs in graph {
        for &b in outs {
            indeg[b] += 1;
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&a| indeg[a] == 0).collect();
    let mut removed = 0;
    while let Some(a) = queue.pop() {
        removed += 1;
        for &b in &graph[a] {
            indeg[b] -= 1;
            if indeg[b] == 0 {
                queue.push(b);
            }
        }
    }
    removed == n
}

/// Letters lying on some directed cycle of the graph.
pub fn cycle_letters(graph: &[Vec<usize>]) -> Vec<bool> {
    let n = graph.len();
    // a lies on a cycle iff a is reachable from one of its successors.
    (0..n)
        .map(|a| {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = graph[a].clone();
            while let Some(b) = stack.pop() {
                if b == a {
                    return true;
                }
                if !seen[b] {
                    seen[b] = true;
                    stack.extend(&graph[b]);
                }
            }
            false
        })
        .collect()
}

pub fn is_nilpotent(production: &RatMatrix) -> bool {
    production.pow(production.rows() as u32).is_zero()
}

/// Leading principal minors of `L`, stopping at the first nonpositive one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaltingCertificate {
    pub halts: bool,
    pub minors: Vec<BigInt>,
    /// Size of the first nonpositive leading minor.
    pub witness: Option<usize>,
}

/// For a Z-matrix, positivity of the leading principal minors is equivalent
/// to positivity of all principal minors, which certifies halting.
pub fn halting_check(l: &IntMatrix) -> Result<HaltingCertificate, SpectraError> {
    if !l.is_square() {
        return Err(SpectraError::NotSquare);
    }
    let n = l.rows();
    for i in 0..n {
        for j in 0..n {
            if i != j && l[(i, j)].is_positive() {
                return Err(SpectraError::PositiveOffDiagonal { row: i, col: j });
            }
        }
    }
    let mut minors = Vec::with_capacity(n);
    for k in 1..=n {
        let m = det_exact(&l.leading(k));
        let positive = m.is_positive();
        minors.push(m);
        if !positive {
            return Ok(HaltingCertificate {
                halts: false,
                minors,
                witness: Some(k),
            });
        }
    }
    Ok(HaltingCertificate {
        halts: true,
        minors,
        witness: None,
    })
}

/// The unary toppling network on the production graph: letter `a` gets a
/// processor with threshold `r_a` that sends `r_a P_ba` letters `b` on
/// each wraparound.
pub fn sandpilize(pd: &ProductionData) -> Result<NetworkSpec, SpectraError> {
    let n = pd.alphabet_size();
    let vertices = (0..n)
        .map(|a| {
            let ra = BigInt::from(pd.reset[a]);
            let emit: Vec<u64> = (0..n)
                .map(|b| {
                    let base = if a == b { ra.clone() } else { BigInt::zero() };
                    u64::try_from(base - &pd.laplacian[(b, a)]).expect("production is nonnegative")
                })
                .collect();
            ProcessorSpec::unary(a, n, pd.reset[a] as usize, &emit)
                .map_err(|source| SpectraError::Processor { vertex: a, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(NetworkSpec::new(vertices, n)?)
}

/// For each basis vector `k` of `K`, shifted into `N^A` by multiples of
/// `r_a 1_a`, the simulated emission at a locally recurrent state equals `P k`.
pub fn linearity_check(net: &NetworkSpec, pd: &ProductionData) -> Result<(), SpectraError> {
    let n = pd.alphabet_size();
    let joint: Vec<usize> = net
        .vertices()
        .iter()
        .map(|p| processor::locally_recurrent_states(p)[0])
        .collect();
    for (j, mut k) in pd.kernel.basis().columns().into_iter().enumerate() {
        for (a, c) in k.iter_mut().enumerate() {
            if c.is_negative() {
                let r = BigInt::from(pd.reset[a]);
                let lifts = (-c.clone() + &r - 1u8) / &r;
                *c += lifts * r;
            }
        }
        let emitted = net.local_emission(&k, &joint)?;
        let kq: Vec<BigRational> = k.iter().map(|v| BigRational::from_integer(v.clone())).collect();
        let expected = pd.production.mul_vec(&kq);
        let ok = (0..n).all(|b| BigRational::from_integer(emitted[b].clone()) == expected[b]);
        if !ok {
            return Err(SpectraError::Linearity { column: j });
        }
    }
    Ok(())
}

/// The equivalent conditions for a halting network to have an acyclic
/// production graph, each evaluated on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NocycleBattery {
    pub locally_rec_implies_rec: bool,
    pub det_l_eq_det_d: bool,
    pub all_sandpilization_states_rec: bool,
    pub zero_state_rec: bool,
    pub gamma_acyclic: bool,
    pub p_nilpotent: bool,
}

impl NocycleBattery {
    pub fn values(&self) -> [bool; 6] {
        [
            self.locally_rec_implies_rec,
            self.det_l_eq_det_d,
            self.all_sandpilization_states_rec,
            self.zero_state_rec,
            self.gamma_acyclic,
            self.p_nilpotent,
        ]
    }

    pub fn agree(&self) -> bool {
        let v = self.values();
        v.iter().all(|&b| b == v[0])
    }
}

/// Evaluates all six conditions, running the oracle on the network and on
/// its sandpilization. Returns an error if they do not agree.
pub fn nocycle_battery(net: &NetworkSpec, pd: &ProductionData, caps: OracleCaps) -> Result<NocycleBattery, SpectraError> {
    let gm = GlobalMonoid::build(net, caps)?;
    let local: Vec<Vec<usize>> = net.vertices().iter().map(processor::locally_recurrent_states).collect();
    let mut locally_rec_implies_rec = true;
    for i in 0..gm.state_count() {
        let joint = net.joint_from_index(i);
        let local_ok = joint.iter().zip(&local).all(|(q, rec)| rec.binary_search(q).is_ok());
        if local_ok && !gm.is_recurrent(i) {
            locally_rec_implies_rec = false;
            break;
        }
    }

    let det_l_eq_det_d = det_exact(&pd.laplacian) == det_exact(&pd.d_matrix());

    let sand = sandpilize(pd)?;
    let sgm = GlobalMonoid::build(&sand, caps)?;
    let all_sandpilization_states_rec = sgm.recurrent().len() == sgm.state_count();
    let zero_state_rec = sgm.is_recurrent(sand.joint_index(&sand.zero_state()));

    let battery = NocycleBattery {
        locally_rec_implies_rec,
        det_l_eq_det_d,
        all_sandpilization_states_rec,
        zero_state_rec,
        gamma_acyclic: pd.is_acyclic(),
        p_nilpotent: is_nilpotent(&pd.production),
    };
    if battery.agree() {
        Ok(battery)
    } else {
        Err(SpectraError::BatteryDisagreement(battery))
    }
}
