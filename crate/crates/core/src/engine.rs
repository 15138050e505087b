//! Executing abelian networks: single letter steps, words, the local action
//! and stabilization by parallel update.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::processor::{self, ProcessorError, ProcessorSpec, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("network has no vertices")]
    Empty,
    #[error("vertex {vertex}: {source}")]
    Processor {
        vertex: usize,
        #[source]
        source: ProcessorError,
    },
    #[error("vertex {vertex} is not abelian ({} violations, first {first:?})", violations.len())]
    NotAbelian {
        vertex: usize,
        first: Violation,
        violations: Vec<Violation>,
    },
    #[error("vertex {vertex} is not irreducible")]
    Reducible { vertex: usize },
    #[error("vertex {vertex} is indexed over an alphabet of size {found}, expected {expected}")]
    AlphabetSize {
        vertex: usize,
        expected: usize,
        found: usize,
    },
    #[error("letter {letter} is owned by vertices {first} and {second}")]
    LetterOverlap {
        letter: usize,
        first: usize,
        second: usize,
    },
    #[error("letter {letter} is not owned by any vertex")]
    UnownedLetter { letter: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("illegal step: no pending letter {letter}")]
    IllegalStep { letter: usize },
    #[error("vector has length {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("input has a negative entry at letter {letter}")]
    NegativeInput { letter: usize },
    #[error("state {state} of vertex {vertex} is out of range")]
    StateRange { vertex: usize, state: usize },
    #[error("no quiescence after {rounds} rounds of parallel update")]
    BudgetExhausted {
        rounds: u64,
        partial_odometer: Vec<BigInt>,
        state: TotalState,
    },
}

/// Pending letters `x` together with a joint state `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TotalState {
    pub pending: Vec<BigInt>,
    pub joint: Vec<usize>,
}

impl TotalState {
    pub fn new(pending: Vec<BigInt>, joint: Vec<usize>) -> Self {
        TotalState { pending, joint }
    }

    /// No pending letters at the given joint state.
    pub fn idle(alphabet_size: usize, joint: Vec<usize>) -> Self {
        TotalState {
            pending: vec![BigInt::zero(); alphabet_size],
            joint,
        }
    }

    pub fn is_quiescent(&self) -> bool {
        self.pending.iter().all(Zero::is_zero)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizationResult {
    pub final_state: Vec<usize>,
    pub odometer: Vec<BigInt>,
    pub rounds: u64,
}

/// An assembled network. The alphabet is `0..alphabet_size`, partitioned
/// among the vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    vertices: Vec<ProcessorSpec>,
    alphabet_size: usize,
    owner: Vec<usize>,
    local: Vec<usize>,
    /// `sparse[a][q]`: nonzero entries of the emission of letter `a` in state `q`.
    sparse: Vec<Vec<Vec<(usize, u64)>>>,
    max_output: u64,
}

impl NetworkSpec {
    /// Assembles a network, checking that the alphabets partition
    /// `0..alphabet_size` and that every processor is abelian and irreducible.
    pub fn new(vertices: Vec<ProcessorSpec>, alphabet_size: usize) -> Result<Self, NetworkError> {
        if vertices.is_empty() {
            return Err(NetworkError::Empty);
        }
        let mut owner = vec![usize::MAX; alphabet_size];
        let mut local = vec![0; alphabet_size];
        for (v, p) in vertices.iter().enumerate() {
            if p.alphabet_size() != alphabet_size {
                return Err(NetworkError::AlphabetSize {
                    vertex: v,
                    expected: alphabet_size,
                    found: p.alphabet_size(),
                });
            }
            for (i, &a) in p.letters().iter().enumerate() {
                if owner[a] != usize::MAX {
                    return Err(NetworkError::LetterOverlap {
                        letter: a,
                        first: owner[a],
                        second: v,
                    });
                }
                owner[a] = v;
                local[a] = i;
            }
        }
        if let Some(a) = owner.iter().position(|&v| v == usize::MAX) {
            return Err(NetworkError::UnownedLetter { letter: a });
        }
        for (v, p) in vertices.iter().enumerate() {
            let violations = processor::validate_abelian(p);
            if let Some(&first) = violations.first() {
                return Err(NetworkError::NotAbelian {
                    vertex: v,
                    first,
                    violations,
                });
            }
            if !processor::is_irreducible(p) {
                return Err(NetworkError::Reducible { vertex: v });
            }
        }
        let mut max_output = 0;
        let sparse = (0..alphabet_size)
            .map(|a| {
                let p = &vertices[owner[a]];
                (0..p.state_count())
                    .map(|q| {
                        let row = p.emission(local[a], q);
                        max_output = max_output.max(row.iter().sum());
                        row.iter()
                            .enumerate()
                            .filter(|(_, &c)| c > 0)
                            .map(|(b, &c)| (b, c))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(NetworkSpec {
            vertices,
            alphabet_size,
            owner,
            local,
            sparse,
            max_output,
        })
    }

    pub fn vertices(&self) -> &[ProcessorSpec] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Vertex owning letter `a`.
    pub fn owner(&self, a: usize) -> usize {
        self.owner[a]
    }

    /// Index of letter `a` within its owner's alphabet.
    pub fn local_index(&self, a: usize) -> usize {
        self.local[a]
    }

    /// Largest total number of letters emitted by a single step.
    pub fn max_output(&self) -> u64 {
        self.max_output
    }

    pub fn state_counts(&self) -> Vec<usize> {
        self.vertices.iter().map(ProcessorSpec::state_count).collect()
    }

    /// `|Q|`, or `None` on overflow.
    pub fn joint_state_count(&self) -> Option<usize> {
        self.vertices
            .iter()
            .try_fold(1usize, |acc, p| acc.checked_mul(p.state_count()))
    }

    /// Mixed-radix index of a joint state, vertex 0 least significant.
    pub fn joint_index(&self, joint: &[usize]) -> usize {
        joint
            .iter()
            .zip(&self.vertices)
            .rev()
            .fold(0, |acc, (&q, p)| acc * p.state_count() + q)
    }

    pub fn joint_from_index(&self, mut index: usize) -> Vec<usize> {
        self.vertices
            .iter()
            .map(|p| {
                let q = index % p.state_count();
                index /= p.state_count();
                q
            })
            .collect()
    }

    /// All-zero joint state.
    pub fn zero_state(&self) -> Vec<usize> {
        vec![0; self.vertices.len()]
    }

    /// `t_a(q_v)` for the owner `v` of `a`.
    #[inline]
    pub fn step(&self, a: usize, q: usize) -> usize {
        self.vertices[self.owner[a]].step(self.local[a], q)
    }

    /// Nonzero emissions of letter `a` processed in state `q` of its owner.
    #[inline]
    pub fn emission(&self, a: usize, q: usize) -> &[(usize, u64)] {
        &self.sparse[a][q]
    }

    pub fn check_joint(&self, joint: &[usize]) -> Result<(), EngineError> {
        if joint.len() != self.vertices.len() {
            return Err(EngineError::Dimension {
                expected: self.vertices.len(),
                found: joint.len(),
            });
        }
        for (v, (&q, p)) in joint.iter().zip(&self.vertices).enumerate() {
            if q >= p.state_count() {
                return Err(EngineError::StateRange { vertex: v, state: q });
            }
        }
        Ok(())
    }

    fn check_vector(&self, x: &[BigInt]) -> Result<(), EngineError> {
        if x.len() != self.alphabet_size {
            return Err(EngineError::Dimension {
                expected: self.alphabet_size,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_nonnegative(&self, x: &[BigInt]) -> Result<(), EngineError> {
        self.check_vector(x)?;
        match x.iter().position(Signed::is_negative) {
            Some(a) => Err(EngineError::NegativeInput { letter: a }),
            None => Ok(()),
        }
    }

    /// Processes `n` copies of letter `a` starting from state `q` of its
    /// owner, adding the emissions to `out`. Orbits of `t_a` are short, so
    /// long runs are accelerated by jumping over whole cycles.
    fn run_letter(&self, a: usize, n: &BigInt, q: usize, out: &mut [BigInt]) -> usize {
        let states = self.vertices[self.owner[a]].state_count();
        let mut q = q;
        let Some(small) = n.to_u64().filter(|&n| n <= 2 * states as u64) else {
            return self.run_letter_long(a, n, q, out);
        };
        for _ in 0..small {
            for &(b, c) in self.emission(a, q) {
                out[b] += c;
            }
            q = self.step(a, q);
        }
        q
    }

    fn run_letter_long(&self, a: usize, n: &BigInt, start: usize, out: &mut [BigInt]) -> usize {
        let states = self.vertices[self.owner[a]].state_count();
        let mut first_seen = vec![usize::MAX; states];
        let mut path = Vec::new();
        let mut q = start;
        while first_seen[q] == usize::MAX {
            first_seen[q] = path.len();
            path.push(q);
            q = self.step(a, q);
        }
        // path[..tail] is the pre-period, path[tail..] the cycle through q.
        let tail = first_seen[q];
        let cycle = &path[tail..];
        let mut remaining = n.clone();
        for &p in &path[..tail] {
            for &(b, c) in self.emission(a, p) {
                out[b] += c;
            }
        }
        remaining -= tail;
        let len = BigInt::from(cycle.len());
        let laps = &remaining / &len;
        let rest = (&remaining % &len).to_usize().expect("remainder below cycle length");
        if !laps.is_zero() {
            let mut per_lap = vec![0u64; self.alphabet_size];
            for &p in cycle {
                for &(b, c) in self.emission(a, p) {
                    per_lap[b] += c;
                }
            }
            for (o, &c) in out.iter_mut().zip(&per_lap) {
                if c > 0 {
                    *o += &laps * c;
                }
            }
        }
        for &p in &cycle[..rest] {
            for &(b, c) in self.emission(a, p) {
                out[b] += c;
            }
        }
        cycle[rest]
    }

    /// Processes one letter `a`. With `checked`, a step without a pending
    /// `a` is an error; otherwise it incurs a debt.
    pub fn process_letter(&self, state: &TotalState, a: usize, checked: bool) -> Result<TotalState, EngineError> {
        self.check_vector(&state.pending)?;
        self.check_joint(&state.joint)?;
        if checked && state.pending[a] < BigInt::one() {
            return Err(EngineError::IllegalStep { letter: a });
        }
        let mut next = state.clone();
        self.step_in_place(&mut next, a);
        Ok(next)
    }

    fn step_in_place(&self, state: &mut TotalState, a: usize) {
        let v = self.owner[a];
        let q = state.joint[v];
        state.pending[a] -= 1;
        for &(b, c) in self.emission(a, q) {
            state.pending[b] += c;
        }
        state.joint[v] = self.step(a, q);
    }

    /// Applies a word letter by letter without legality checks. The flag is
    /// true when every letter was pending at the time it was processed.
    pub fn execute_word(&self, word: &[usize], state: &TotalState) -> Result<(TotalState, bool), EngineError> {
        self.check_vector(&state.pending)?;
        self.check_joint(&state.joint)?;
        let mut s = state.clone();
        let mut legal = true;
        for &a in word {
            if a >= self.alphabet_size {
                return Err(EngineError::Dimension {
                    expected: self.alphabet_size,
                    found: a,
                });
            }
            if s.pending[a] < BigInt::one() {
                legal = false;
            }
            self.step_in_place(&mut s, a);
        }
        Ok((s, legal))
    }

    /// `x ⊳ (y.q)`: every vertex processes exactly its share of `x`;
    /// emissions are added to the pending vector but not processed.
    pub fn local_action(&self, x: &[BigInt], state: &TotalState) -> Result<TotalState, EngineError> {
        self.check_nonnegative(x)?;
        self.check_vector(&state.pending)?;
        self.check_joint(&state.joint)?;
        let mut next = state.clone();
        for (a, n) in x.iter().enumerate() {
            if n.is_zero() {
                continue;
            }
            next.pending[a] -= n;
            let v = self.owner[a];
            next.joint[v] = self.run_letter(a, n, next.joint[v], &mut next.pending);
        }
        Ok(next)
    }

    /// Emission vector of the local action of `x` at joint state `q`.
    pub fn local_emission(&self, x: &[BigInt], joint: &[usize]) -> Result<Vec<BigInt>, EngineError> {
        let mut s = self.local_action(x, &TotalState::idle(self.alphabet_size, joint.to_vec()))?;
        for (p, n) in s.pending.iter_mut().zip(x) {
            *p += n;
        }
        Ok(s.pending)
    }

    /// Joint state `t(k) q`: each vertex processes `k_a` letters `a`, emissions ignored.
    pub fn apply_counts(&self, k: &[BigInt], joint: &[usize]) -> Result<Vec<usize>, EngineError> {
        Ok(self.local_action(k, &TotalState::idle(self.alphabet_size, joint.to_vec()))?.joint)
    }

    /// Round budget used when none is given: `10 (1 + |A| maxout |x|_1)`.
    pub fn default_budget(&self, x: &[BigInt]) -> u64 {
        let norm: BigInt = x.iter().map(BigInt::abs).sum();
        let norm = norm.to_u64().unwrap_or(u64::MAX);
        (self.alphabet_size as u64)
            .saturating_mul(self.max_output.max(1))
            .saturating_mul(norm)
            .saturating_add(1)
            .saturating_mul(10)
    }

    /// `x ⊳⊳ q` by parallel update, with the odometer `[x.q]`.
    pub fn stabilize(&self, x: &[BigInt], joint: &[usize], budget: Option<u64>) -> Result<StabilizationResult, EngineError> {
        self.check_nonnegative(x)?;
        self.check_joint(joint)?;
        let budget = budget.unwrap_or_else(|| self.default_budget(x));
        let mut pending = x.to_vec();
        let mut joint = joint.to_vec();
        let mut odometer = vec![BigInt::zero(); self.alphabet_size];
        let mut rounds = 0u64;
        while pending.iter().any(|p| !p.is_zero()) {
            if rounds >= budget {
                return Err(EngineError::BudgetExhausted {
                    rounds,
                    partial_odometer: odometer,
                    state: TotalState { pending, joint },
                });
            }
            let batch = core::mem::replace(&mut pending, vec![BigInt::zero(); self.alphabet_size]);
            for (a, n) in batch.iter().enumerate() {
                if n.is_zero() {
                    continue;
                }
                let v = self.owner[a];
                joint[v] = self.run_letter(a, n, joint[v], &mut pending);
                odometer[a] += n;
            }
            rounds += 1;
        }
        Ok(StabilizationResult {
            final_state: joint,
            odometer,
            rounds,
        })
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::processor::fixtures::{cyclic, two_letter};

    /// Letters a=0, b=1 at vertex i and c=2 at the sink j.
    pub fn paper() -> NetworkSpec {
        NetworkSpec::new(vec![two_letter(1), ProcessorSpec::sink(2, 3).unwrap()], 3).unwrap()
    }

    /// Triangle sandpile: v1, v2 and sink s, all edges in both directions.
    pub fn triangle() -> NetworkSpec {
        NetworkSpec::new(
            vec![
                cyclic(0, 3, 2, &[(1, 1), (2, 1)]),
                cyclic(1, 3, 2, &[(0, 1), (2, 1)]),
                ProcessorSpec::sink(2, 3).unwrap(),
            ],
            3,
        )
        .unwrap()
    }
}
