//! A single abelian processor: a finite automaton with commuting transitions
//! whose outputs depend only on the multiset of letters processed.
//!
//! Letters are global indices into the network's total alphabet. Outputs are
//! stored as count vectors over that alphabet, which is all the downstream
//! algebra ever looks at.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use thiserror::Error;

use crate::lattice::Lattice;
use crate::matrix::IntMatrix;
use crate::monoid::{self, ClosureCapExceeded, Transform};

/// Default cap on the number of box points enumerated by [`local_kernel`].
pub const DEFAULT_KERNEL_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessorError {
    #[error("processor needs at least one state")]
    NoStates,
    #[error("transition table for letter {letter} has {found} entries, expected {expected}")]
    TransitionShape { letter: usize, expected: usize, found: usize },
    #[error("transition t_{letter}({state}) = {target} is out of range")]
    TransitionTarget { letter: usize, state: usize, target: usize },
    #[error("output for letter {letter} in state {state} has length {found}, expected alphabet size {expected}")]
    OutputShape { letter: usize, state: usize, expected: usize, found: usize },
    #[error("letter {letter} is outside the alphabet of size {alphabet}")]
    LetterRange { letter: usize, alphabet: usize },
    #[error("letter {letter} is listed twice")]
    DuplicateLetter { letter: usize },
    #[error("processor is reducible; its kernel is only defined for irreducible processors")]
    Reducible,
    #[error("kernel enumeration needs {needed} box points, over the budget of {budget}")]
    KernelBudget { needed: u128, budget: u64 },
    #[error(transparent)]
    Closure(#[from] ClosureCapExceeded),
}

/// One vertex's automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessorSpec {
    state_count: usize,
    letters: Vec<usize>,
    alphabet_size: usize,
    /// `transition[i][q]` is `t_a(q)` for `a = letters[i]`.
    transition: Vec<Vec<usize>>,
    /// `output[i][q]` is the count vector emitted when `letters[i]` is processed in state `q`.
    output: Vec<Vec<Vec<u64>>>,
}

impl ProcessorSpec {
    /// Checks the tables for shape and range. Abelianness is checked
    /// separately by [`validate_abelian`].
    pub fn new(
        state_count: usize,
        letters: Vec<usize>,
        alphabet_size: usize,
        transition: Vec<Vec<usize>>,
        output: Vec<Vec<Vec<u64>>>,
    ) -> Result<Self, ProcessorError> {
        if state_count == 0 {
            return Err(ProcessorError::NoStates);
        }
        for (i, &a) in letters.iter().enumerate() {
            if a >= alphabet_size {
                return Err(ProcessorError::LetterRange {
                    letter: a,
                    alphabet: alphabet_size,
                });
            }
            if letters[..i].contains(&a) {
                return Err(ProcessorError::DuplicateLetter { letter: a });
            }
        }
        if transition.len() != letters.len() {
            return Err(ProcessorError::TransitionShape {
                letter: letters.len(),
                expected: letters.len(),
                found: transition.len(),
            });
        }
        if output.len() != letters.len() {
            return Err(ProcessorError::OutputShape {
                letter: letters.len(),
                state: 0,
                expected: letters.len(),
                found: output.len(),
            });
        }
        for (i, &a) in letters.iter().enumerate() {
            if transition[i].len() != state_count {
                return Err(ProcessorError::TransitionShape {
                    letter: a,
                    expected: state_count,
                    found: transition[i].len(),
                });
            }
            for (q, &t) in transition[i].iter().enumerate() {
                if t >= state_count {
                    return Err(ProcessorError::TransitionTarget {
                        letter: a,
                        state: q,
                        target: t,
                    });
                }
            }
            if output[i].len() != state_count {
                return Err(ProcessorError::OutputShape {
                    letter: a,
                    state: output[i].len(),
                    expected: state_count,
                    found: output[i].len(),
                });
            }
            for (q, o) in output[i].iter().enumerate() {
                if o.len() != alphabet_size {
                    return Err(ProcessorError::OutputShape {
                        letter: a,
                        state: q,
                        expected: alphabet_size,
                        found: o.len(),
                    });
                }
            }
        }
        Ok(ProcessorSpec {
            state_count,
            letters,
            alphabet_size,
            transition,
            output,
        })
    }

    /// A one-state processor that never emits anything.
    pub fn sink(letter: usize, alphabet_size: usize) -> Result<Self, ProcessorError> {
        Self::new(
            1,
            vec![letter],
            alphabet_size,
            vec![vec![0]],
            vec![vec![vec![0; alphabet_size]]],
        )
    }

    /// Unary toppling processor: states `0..threshold`, each letter advances
    /// the state by one and the wraparound to 0 emits `emit`.
    pub fn unary(letter: usize, alphabet_size: usize, threshold: usize, emit: &[u64]) -> Result<Self, ProcessorError> {
        let transition = vec![(0..threshold).map(|q| (q + 1) % threshold).collect()];
        let output = vec![(0..threshold)
            .map(|q| {
                if q + 1 == threshold {
                    emit.to_vec()
                } else {
                    vec![0; alphabet_size]
                }
            })
            .collect()];
        Self::new(threshold, vec![letter], alphabet_size, transition, output)
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Position of global letter `a` in this processor's alphabet.
    pub fn local_index(&self, a: usize) -> Option<usize> {
        self.letters.iter().position(|&b| b == a)
    }

    /// `t_a(q)` by local letter index.
    #[inline]
    pub fn step(&self, local: usize, q: usize) -> usize {
        self.transition[local][q]
    }

    /// Emission count vector by local letter index.
    #[inline]
    pub fn emission(&self, local: usize, q: usize) -> &[u64] {
        &self.output[local][q]
    }

    pub fn transition_map(&self, local: usize) -> Transform {
        Transform::from_fn(self.state_count, |q| self.transition[local][q])
    }

    /// State reached by processing `counts[i]` copies of `letters[i]` from `q`.
    pub fn act(&self, counts: &[u64], q: usize) -> usize {
        let mut q = q;
        for (i, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                q = self.transition[i][q];
            }
        }
        q
    }
}

/// A failure of the abelian axioms at a particular letter pair and state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// `t_a t_b (q) != t_b t_a (q)`.
    NonCommuting { a: usize, b: usize, state: usize },
    /// `o(a, q) + o(b, t_a q) != o(b, q) + o(a, t_b q)`.
    OutputExchange { a: usize, b: usize, state: usize },
}

/// Every violation of pairwise commutation and output exchange.
pub fn validate_abelian(spec: &ProcessorSpec) -> Vec<Violation> {
    let mut report = Vec::new();
    let k = spec.letters.len();
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = (spec.letters[i], spec.letters[j]);
            for q in 0..spec.state_count {
                let ta = spec.step(i, q);
                let tb = spec.step(j, q);
                if spec.step(i, tb) != spec.step(j, ta) {
                    report.push(Violation::NonCommuting { a, b, state: q });
                }
                let lhs = spec.emission(i, q).iter().zip(spec.emission(j, ta));
                let rhs = spec.emission(j, q).iter().zip(spec.emission(i, tb));
                if lhs.zip(rhs).any(|((x1, x2), (y1, y2))| x1 + x2 != y1 + y2) {
                    report.push(Violation::OutputExchange { a, b, state: q });
                }
            }
        }
    }
    report
}

/// The transition monoid `<t_a>` of a processor.
#[derive(Debug, Clone)]
pub struct LocalMonoid {
    state_count: usize,
    elements: Vec<Transform>,
    generator_of: Vec<usize>,
    table: Vec<Vec<usize>>,
}

impl LocalMonoid {
    pub fn elements(&self) -> &[Transform] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    /// Element index of `t_a` by local letter index.
    pub fn generator(&self, local: usize) -> usize {
        self.generator_of[local]
    }

    /// Index of the product of elements `x` and `y`.
    pub fn product(&self, x: usize, y: usize) -> usize {
        self.table[x][y]
    }

    pub fn identity(&self) -> usize {
        0
    }
}

/// Upper bound on local monoid sizes; local processors are small.
const LOCAL_MONOID_CAP: usize = 1 << 16;

pub fn local_monoid(spec: &ProcessorSpec) -> Result<LocalMonoid, ProcessorError> {
    let n = spec.state_count;
    let gens: Vec<Transform> = (0..spec.letters.len()).map(|i| spec.transition_map(i)).collect();
    let elements = monoid::closure(n, &gens, LOCAL_MONOID_CAP)?;
    let index: BTreeMap<&Transform, usize> =
        elements.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let find = |t: &Transform| index[t];
    let generator_of = gens.iter().map(find).collect();
    let table = elements
        .iter()
        .map(|x| elements.iter().map(|y| find(&x.after(y))).collect())
        .collect();
    Ok(LocalMonoid {
        state_count: n,
        elements,
        generator_of,
        table,
    })
}

/// The minimal idempotent: the product of all idempotents of the monoid.
pub fn minimal_idempotent(m: &LocalMonoid) -> Transform {
    monoid::product_of_idempotents(m.state_count, &m.elements)
}

/// Minimal idempotent of the processor's local monoid, computed as the
/// idempotent power of the product of the generators.
pub fn local_idempotent(spec: &ProcessorSpec) -> Transform {
    let gens: Vec<Transform> = (0..spec.letters.len()).map(|i| spec.transition_map(i)).collect();
    monoid::minimal_idempotent_of_generated(spec.state_count, &gens)
}

/// `e_v Q_v`, sorted.
pub fn locally_recurrent_states(spec: &ProcessorSpec) -> Vec<usize> {
    local_idempotent(spec).image()
}

/// True when the undirected graph `q -- t_a(q)` is connected.
pub fn is_irreducible(spec: &ProcessorSpec) -> bool {
    let n = spec.state_count;
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for i in 0..spec.letters.len() {
        for q in 0..n {
            let (x, y) = (root(&mut parent, q), root(&mut parent, spec.step(i, q)));
            if x != y {
                parent[x] = y;
                components -= 1;
            }
        }
    }
    components == 1
}

/// Reset numbers `r_a`: the order of `t_a` acting on `e_v Q_v`.
pub fn reset_numbers(spec: &ProcessorSpec) -> Result<Vec<u64>, ProcessorError> {
    if !is_irreducible(spec) {
        return Err(ProcessorError::Reducible);
    }
    let rec = locally_recurrent_states(spec);
    Ok((0..spec.letters.len())
        .map(|i| permutation_order(spec, i, &rec))
        .collect())
}

/// Order of `t_a` restricted to `rec`, which it permutes.
fn permutation_order(spec: &ProcessorSpec, local: usize, rec: &[usize]) -> u64 {
    let mut order = 1u64;
    let mut seen = vec![false; spec.state_count];
    for &q in rec {
        if seen[q] {
            continue;
        }
        let mut len = 0u64;
        let mut x = q;
        while !seen[x] {
            seen[x] = true;
            x = spec.step(local, x);
            len += 1;
        }
        order = order.lcm(&len);
    }
    order
}

/// The local kernel `K_v`: inputs in `Z^{A_v}` acting trivially on `e_v Q_v`,
/// with the default enumeration budget.
pub fn local_kernel(spec: &ProcessorSpec) -> Result<Lattice, ProcessorError> {
    local_kernel_with_budget(spec, DEFAULT_KERNEL_BUDGET)
}

/// Enumerates coset representatives in the box `prod [0, r_a)` and keeps the
/// points acting trivially on every locally recurrent state; together with
/// the vectors `r_a 1_a` they generate `K_v`.
pub fn local_kernel_with_budget(spec: &ProcessorSpec, budget: u64) -> Result<Lattice, ProcessorError> {
    let r = reset_numbers(spec)?;
    let needed: u128 = r.iter().map(|&x| x as u128).product();
    if needed > budget as u128 {
        return Err(ProcessorError::KernelBudget { needed, budget });
    }
    let k = r.len();
    let rec = locally_recurrent_states(spec);
    let mut gens: Vec<Vec<BigInt>> = (0..k)
        .map(|i| {
            let mut v = vec![BigInt::from(0); k];
            v[i] = BigInt::from(r[i]);
            v
        })
        .collect();
    let mut x = vec![0u64; k];
    loop {
        if x.iter().any(|&c| c > 0) && rec.iter().all(|&q| spec.act(&x, q) == q) {
            gens.push(x.iter().map(|&c| BigInt::from(c)).collect());
        }
        // Odometer-style increment through the box.
        let mut i = 0;
        while i < k {
            x[i] += 1;
            if x[i] < r[i] {
                break;
            }
            x[i] = 0;
            i += 1;
        }
        if i == k {
            break;
        }
    }
    let m = IntMatrix::from_columns(k, &gens);
    Ok(Lattice::from_generators(&m).expect("diagonal generators give full rank"))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Unary processor with states `0..d`, `t(q) = q + 1 mod d`, emitting
    /// `emit` at the wraparound `d-1 -> 0`.
    pub fn cyclic(letter: usize, alphabet: usize, d: usize, emit: &[(usize, u64)]) -> ProcessorSpec {
        let mut o = vec![0; alphabet];
        for &(b, c) in emit {
            o[b] += c;
        }
        ProcessorSpec::unary(letter, alphabet, d, &o).unwrap()
    }

    /// The two-state, two-letter processor with outputs to letter `c`:
    /// `(a,0) -> 1, (a,1) -> 2, (b,0) -> 0, (b,1) -> b1`.
    pub fn two_letter(b1: u64) -> ProcessorSpec {
        let flip = vec![1, 0];
        let out = |n: u64| vec![0, 0, n];
        ProcessorSpec::new(
            2,
            vec![0, 1],
            3,
            vec![flip.clone(), flip],
            vec![vec![out(1), out(2)], vec![out(0), out(b1)]],
        )
        .unwrap()
    }

    /// Unary processor `0 -> 1 -> 2 -> 1` with a transient state 0.
    pub fn transient() -> ProcessorSpec {
        ProcessorSpec::new(3, vec![0], 1, vec![vec![1, 2, 1]], vec![vec![vec![0]; 3]]).unwrap()
    }
}
