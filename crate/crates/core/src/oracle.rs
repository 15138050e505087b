//! Brute-force ground truth for small networks: the global monoid, its
//! minimal idempotent and recurrent states, the critical group as a group of
//! permutations, the Markov chain on states and exact expected odometers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{EngineError, NetworkSpec};
use crate::lattice::{rational_inverse, GroupDesc, LatticeError};
use crate::monoid::{self, ClosureCapExceeded, Transform};
use crate::processor;
use crate::spectra::ProductionData;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    /// Largest `|Q|` the oracle will enumerate.
    pub max_states: usize,
    /// Largest monoid (global or group part) it will close.
    pub max_elements: usize,
    /// Largest number of stored map entries, elements times domain size.
    pub max_entries: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_states: 20_000,
            max_elements: 50_000,
            max_entries: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("network has {states} joint states, over the oracle cap of {cap}")]
    TooManyStates { states: usize, cap: usize },
    #[error(transparent)]
    Closure(#[from] ClosureCapExceeded),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("oracle invariant failed: {0}")]
    Invariant(&'static str),
    #[error("alpha is not a probability vector over the alphabet")]
    InvalidDistribution,
}

/// `τ_a : q -> 1_a ⊳⊳ q` over all joint states, and the minimal idempotent.
#[derive(Debug, Clone)]
pub struct GlobalMonoid {
    caps: OracleCaps,
    state_count: usize,
    generators: Vec<Transform>,
    idempotent: Transform,
    recurrent: Vec<usize>,
}

impl GlobalMonoid {
    pub fn build(net: &NetworkSpec, caps: OracleCaps) -> Result<Self, OracleError> {
        let states = match net.joint_state_count() {
            Some(s) if s <= caps.max_states => s,
            Some(s) => return Err(OracleError::TooManyStates { states: s, cap: caps.max_states }),
            None => return Err(OracleError::TooManyStates { states: usize::MAX, cap: caps.max_states }),
        };
        let n = net.alphabet_size();
        let mut generators = Vec::with_capacity(n);
        let mut unit = vec![BigInt::zero(); n];
        for a in 0..n {
            unit[a] = BigInt::one();
            let mut images = Vec::with_capacity(states);
            for i in 0..states {
                let run = net.stabilize(&unit, &net.joint_from_index(i), None)?;
                images.push(net.joint_index(&run.final_state) as u32);
            }
            generators.push(Transform::from_vec(images));
            unit[a] = BigInt::zero();
        }
        for (a, ta) in generators.iter().enumerate() {
            for tb in &generators[a + 1..] {
                if ta.after(tb) != tb.after(ta) {
                    return Err(OracleError::Invariant("global generators do not commute"));
                }
            }
        }
        let idempotent = monoid::minimal_idempotent_of_generated(states, &generators);
        let recurrent = idempotent.fixed_points();
        Ok(GlobalMonoid {
            caps,
            state_count: states,
            generators,
            idempotent,
            recurrent,
        })
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn generators(&self) -> &[Transform] {
        &self.generators
    }

    /// The minimal idempotent `e`.
    pub fn idempotent(&self) -> &Transform {
        &self.idempotent
    }

    /// `eQ` as sorted joint-state indices.
    pub fn recurrent(&self) -> &[usize] {
        &self.recurrent
    }

    pub fn is_recurrent(&self, index: usize) -> bool {
        self.recurrent.binary_search(&index).is_ok()
    }

    /// The whole monoid `M`, if it fits in the caps.
    pub fn closure(&self) -> Result<Vec<Transform>, OracleError> {
        let cap = self.caps.max_elements.min(self.caps.max_entries / self.state_count.max(1));
        Ok(monoid::closure(self.state_count, &self.generators, cap)?)
    }

    /// `τ(x) = prod τ_a^{x_a}` for `x >= 0`.
    pub fn tau(&self, x: &[BigInt]) -> Transform {
        let mut acc = Transform::identity(self.state_count);
        for (g, c) in self.generators.iter().zip(x) {
            // Powers of a map on n points cycle with index and period at most n.
            let k = reduce_exponent(g, c);
            acc = g.pow(k).after(&acc);
        }
        acc
    }

    /// The group `eM`, as permutations of `eQ`.
    pub fn group(&self) -> Result<CriticalGroup, OracleError> {
        CriticalGroup::build(self)
    }
}

fn reduce_exponent(g: &Transform, c: &BigInt) -> u64 {
    if let Some(k) = c.to_u64().filter(|&k| k <= 2 * g.len() as u64) {
        return k;
    }
    let (index, period) = monoid::power_cycle(g);
    let shifted = (c - BigInt::from(index)) % BigInt::from(period);
    index + shifted.to_u64().expect("remainder below period")
}

/// Strongly connected components of the transition digraph `q -> τ_a q`,
/// returned as a component id per state and a flag per component telling
/// whether it is terminal (no edges leave it).
fn components(gm: &GlobalMonoid) -> (Vec<usize>, Vec<bool>) {
    let n = gm.state_count;
    let succ = |v: usize, i: usize| gm.generators[i].apply(v);
    let k = gm.generators.len();
    // Iterative Tarjan.
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    let mut next = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < k {
                let w = succ(v, *i);
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = count;
                        if w == v {
                            break;
                        }
                    }
                    count += 1;
                }
            }
        }
    }
    let mut terminal = vec![true; count];
    for v in 0..n {
        for i in 0..k {
            if comp[succ(v, i)] != comp[v] {
                terminal[comp[v]] = false;
            }
        }
    }
    (comp, terminal)
}

/// Which of the equivalent characterizations of recurrence were checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecurrenceChecks {
    pub reachable_from_everywhere: bool,
    pub returns_from_own_orbit: bool,
    /// Only checked when the whole monoid fits in the caps.
    pub in_every_image: Option<bool>,
    pub in_image_of_e: bool,
    pub fixed_by_e: bool,
    pub locally_recurrent: bool,
}

/// The recurrent states together with the outcome of each cross-check.
/// Every check must agree with `q = e q` or an error is returned.
pub fn recurrent_states(gm: &GlobalMonoid, net: &NetworkSpec) -> Result<(Vec<usize>, RecurrenceChecks), OracleError> {
    let n = gm.state_count;
    let fixed: BTreeSet<usize> = gm.recurrent.iter().copied().collect();
    let image: BTreeSet<usize> = gm.idempotent.image().into_iter().collect();

    let (comp, terminal) = components(gm);
    let terminal_count = terminal.iter().filter(|&&t| t).count();
    let everywhere: BTreeSet<usize> = if terminal_count == 1 {
        (0..n).filter(|&q| terminal[comp[q]]).collect()
    } else {
        BTreeSet::new()
    };
    let own_orbit: BTreeSet<usize> = (0..n).filter(|&q| terminal[comp[q]]).collect();

    let every_image = match gm.closure() {
        Ok(m) => {
            let e = monoid::product_of_idempotents(n, &m);
            if e != gm.idempotent {
                return Err(OracleError::Invariant("product of idempotents differs from the generator route"));
            }
            let mut inter: BTreeSet<usize> = (0..n).collect();
            for x in &m {
                let img: BTreeSet<usize> = x.image().into_iter().collect();
                inter = inter.intersection(&img).copied().collect();
            }
            Some(inter)
        }
        Err(OracleError::Closure(_)) => None,
        Err(other) => return Err(other),
    };

    let local: Vec<Vec<usize>> = net.vertices().iter().map(processor::locally_recurrent_states).collect();
    let locally = fixed.iter().all(|&q| {
        net.joint_from_index(q)
            .iter()
            .zip(&local)
            .all(|(s, rec)| rec.binary_search(s).is_ok())
    });

    let checks = RecurrenceChecks {
        reachable_from_everywhere: everywhere == fixed,
        returns_from_own_orbit: own_orbit == fixed,
        in_every_image: every_image.map(|s| s == fixed),
        in_image_of_e: image == fixed,
        fixed_by_e: true,
        locally_recurrent: locally,
    };
    let all = checks.reachable_from_everywhere
        && checks.returns_from_own_orbit
        && checks.in_every_image.unwrap_or(true)
        && checks.in_image_of_e
        && checks.locally_recurrent;
    if !all {
        return Err(OracleError::Invariant("characterizations of recurrence disagree"));
    }
    Ok((gm.recurrent.clone(), checks))
}

/// `eM` acting on `eQ`. Elements are permutations of positions in the
/// sorted list of recurrent states; element 0 is the identity `e`.
#[derive(Debug, Clone)]
pub struct CriticalGroup {
    states: Vec<usize>,
    elements: Vec<Transform>,
    index: BTreeMap<Transform, usize>,
}

impl CriticalGroup {
    fn build(gm: &GlobalMonoid) -> Result<Self, OracleError> {
        let states = gm.recurrent.clone();
        let m = states.len();
        let position = |q: usize| states.binary_search(&q).ok();
        let mut gens = Vec::with_capacity(gm.generators.len());
        for g in &gm.generators {
            let mut images = Vec::with_capacity(m);
            for &q in &states {
                let p = position(g.apply(q)).ok_or(OracleError::Invariant("τ_a leaves the recurrent states"))?;
                images.push(p as u32);
            }
            let t = Transform::from_vec(images);
            if !t.permutes(&(0..m).collect::<Vec<_>>()) {
                return Err(OracleError::Invariant("τ_a is not a bijection of the recurrent states"));
            }
            gens.push(t);
        }
        let cap = gm.caps.max_elements.min(gm.caps.max_entries / m.max(1));
        let elements = monoid::closure(m, &gens, cap)?;
        let index = elements.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(CriticalGroup { states, elements, index })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Transform] {
        &self.elements
    }

    /// Recurrent states, as joint-state indices, in the order the permutations use.
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn product(&self, x: usize, y: usize) -> usize {
        self.index[&self.elements[x].after(&self.elements[y])]
    }

    /// Multiplicative order of element `x`.
    pub fn element_order(&self, x: usize) -> u64 {
        let g = &self.elements[x];
        let mut acc = g.clone();
        let mut k = 1;
        while !acc.is_identity() {
            acc = g.after(&acc);
            k += 1;
        }
        k
    }

    /// For all `q, q'` in `eQ` exactly one element maps `q` to `q'`.
    pub fn is_free_and_transitive(&self) -> bool {
        let m = self.states.len();
        if self.elements.len() != m {
            return false;
        }
        (0..m).all(|q| {
            let mut hit = vec![false; m];
            self.elements.iter().all(|g| !core::mem::replace(&mut hit[g.apply(q)], true))
        })
    }

    /// Invariant factors, read off from the sizes of the subgroups
    /// `G[p^j] = {g : g^{p^j} = 1}` for each prime `p`.
    pub fn invariant_factors(&self) -> GroupDesc {
        let orders: Vec<u64> = (0..self.order()).map(|x| self.element_order(x)).collect();
        invariants_from_orders(&orders)
    }
}

/// Invariant factors of a finite abelian group given the multiset of its
/// element orders. The number of cyclic factors of order at least `p^j` is
/// `log_p(|G[p^j]| / |G[p^(j-1)]|)`.
pub fn invariants_from_orders(orders: &[u64]) -> GroupDesc {
    let size = orders.len() as u64;
    let mut primes = Vec::new();
    let mut n = size;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            primes.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        primes.push(n);
    }
    // factors[i] collects the prime-power parts of the i-th largest cyclic factor.
    let mut factors: Vec<BigInt> = Vec::new();
    for p in primes {
        let mut prev = 1u64;
        let mut pj = 1u64;
        let mut at_least: Vec<usize> = Vec::new();
        loop {
            pj *= p;
            let count = orders.iter().filter(|&&o| pj.is_multiple_of(o)).count() as u64;
            if count == prev {
                break;
            }
            let mut ratio = count / prev;
            let mut k = 0;
            while ratio > 1 {
                ratio /= p;
                k += 1;
            }
            at_least.push(k);
            prev = count;
        }
        // at_least[j-1] factors have p-part >= p^j.
        let rank = at_least.first().copied().unwrap_or(0);
        if factors.len() < rank {
            factors.resize(rank, BigInt::one());
        }
        for &c in &at_least {
            for f in factors.iter_mut().take(c) {
                *f *= p;
            }
        }
    }
    factors.sort();
    GroupDesc::from_cyclic_orders(&factors)
}

/// Invariant factors of `eM`.
pub fn crit_group_oracle(gm: &GlobalMonoid) -> Result<GroupDesc, OracleError> {
    Ok(gm.group()?.invariant_factors())
}

fn sampler(alpha: &[f64], n: usize) -> Result<WeightedIndex<f64>, OracleError> {
    if alpha.len() != n || alpha.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return Err(OracleError::InvalidDistribution);
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(OracleError::InvalidDistribution);
    }
    WeightedIndex::new(alpha).map_err(|_| OracleError::InvalidDistribution)
}

/// One step `q -> 1_a ⊳⊳ q` with `a ~ alpha`, drawn from `rng`.
pub fn markov_step(net: &NetworkSpec, alpha: &[f64], joint: &[usize], rng: &mut ChaCha8Rng) -> Result<Vec<usize>, OracleError> {
    let dist = sampler(alpha, net.alphabet_size())?;
    let a = dist.sample(rng);
    let mut x = vec![BigInt::zero(); net.alphabet_size()];
    x[a] = BigInt::one();
    Ok(net.stabilize(&x, joint, None)?.final_state)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovRun {
    /// Joint-state indices `q_0, ..., q_steps`.
    pub path: Vec<usize>,
    /// Visits per joint-state index over `q_1, ..., q_steps`.
    pub visits: BTreeMap<usize, u64>,
}

/// `steps` steps of the chain from `start`, using the precomputed `τ_a`.
pub fn markov_chain(gm: &GlobalMonoid, alpha: &[f64], start: usize, steps: u64, seed: u64) -> Result<MarkovRun, OracleError> {
    let dist = sampler(alpha, gm.generators.len())?;
    let mut rng = seeded_rng(seed);
    let mut path = Vec::with_capacity(steps as usize + 1);
    let mut visits = BTreeMap::new();
    let mut q = start;
    path.push(q);
    for _ in 0..steps {
        q = gm.generators[dist.sample(&mut rng)].apply(q);
        path.push(q);
        *visits.entry(q).or_insert(0) += 1;
    }
    Ok(MarkovRun { path, visits })
}

/// States reachable from `start` using only the letters in `support`.
pub fn reachable(gm: &GlobalMonoid, start: usize, support: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; gm.state_count];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(q) = stack.pop() {
        for &a in support {
            let r = gm.generators[a].apply(q);
            if !seen[r] {
                seen[r] = true;
                stack.push(r);
            }
        }
    }
    seen
}

/// `e_α M_α = eM`: the supported generators have the same minimal
/// idempotent and generate a subgroup acting transitively on `eQ`, which
/// for a regular action means the whole group.
pub fn adequate_support(gm: &GlobalMonoid, alpha: &[f64]) -> Result<bool, OracleError> {
    if alpha.len() != gm.generators.len() {
        return Err(OracleError::InvalidDistribution);
    }
    let support: Vec<usize> = (0..alpha.len()).filter(|&a| alpha[a] > 0.0).collect();
    let gens: Vec<Transform> = support.iter().map(|&a| gm.generators[a].clone()).collect();
    let e_alpha = monoid::minimal_idempotent_of_generated(gm.state_count, &gens);
    if e_alpha != gm.idempotent {
        return Ok(false);
    }
    let Some(&q0) = gm.recurrent.first() else {
        return Ok(true);
    };
    let seen = reachable(gm, q0, &support);
    Ok(gm.recurrent.iter().all(|&q| seen[q]))
}

/// A vector `z >= x` with `τ(z) = e`: `j (x + 1)` where `j` is the
/// idempotent exponent of `τ(x + 1)`.
pub fn idempotent_witness(gm: &GlobalMonoid, x: &[BigInt]) -> Result<Vec<BigInt>, OracleError> {
    let lifted: Vec<BigInt> = x.iter().map(|v| v + 1).collect();
    let (power, j) = monoid::idempotent_power(&gm.tau(&lifted));
    if power != gm.idempotent {
        return Err(OracleError::Invariant("idempotent power of a full-support element is not e"));
    }
    Ok(lifted.into_iter().map(|v| v * j).collect())
}

/// Average odometer of `x` over all recurrent states.
pub fn expected_odometer_exact(net: &NetworkSpec, gm: &GlobalMonoid, x: &[BigInt]) -> Result<Vec<BigRational>, OracleError> {
    let mut sum = vec![BigInt::zero(); net.alphabet_size()];
    for &q in &gm.recurrent {
        let run = net.stabilize(x, &net.joint_from_index(q), None)?;
        for (s, o) in sum.iter_mut().zip(run.odometer) {
            *s += o;
        }
    }
    let count = BigInt::from(gm.recurrent.len());
    Ok(sum.into_iter().map(|s| BigRational::new(s, count.clone())).collect())
}

/// `max ||[x.q] - (I - P)^{-1} x||_inf` over the given inputs and joint states.
pub fn deviation_scan(
    net: &NetworkSpec,
    pd: &ProductionData,
    inputs: &[Vec<BigInt>],
    states: &[Vec<usize>],
) -> Result<BigRational, OracleError> {
    let green = rational_inverse(&pd.i_minus_p())?;
    let mut worst = BigRational::zero();
    for x in inputs {
        let xr: Vec<BigRational> = x.iter().map(|v| BigRational::from_integer(v.clone())).collect();
        let mean = green.mul_vec(&xr);
        for q in states {
            let run = net.stabilize(x, q, None)?;
            for (o, m) in run.odometer.iter().zip(&mean) {
                let d = (BigRational::from_integer(o.clone()) - m).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
    }
    Ok(worst)
}
