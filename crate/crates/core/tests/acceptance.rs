//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;

use abnet_core::burning::{burning_element, is_recurrent, Method};
use abnet_core::critical::{critical_group, homotopic, CriticalReport};
use abnet_core::engine::{EngineError, NetworkSpec, TotalState};
use abnet_core::lattice::{rational_solve, GroupDesc};
use abnet_core::matrix::{int_vec, IntMatrix, RatMatrix};
use abnet_core::oracle::{self, GlobalMonoid, OracleCaps};
use abnet_core::spectra::{nocycle_battery, ProductionData};
use abnet_core::zoo::{self, DigraphSpec};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: u64 = 0x5eed;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn caps() -> OracleCaps {
    OracleCaps::default()
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn pd_of(net: &NetworkSpec) -> Result<ProductionData, String> {
    ProductionData::compute(net).map_err(|e| e.to_string())
}

fn c1_paper_example() -> Outcome {
    let net = zoo::paper_example();
    let pd = pd_of(&net)?;
    let z = rat(0, 1);
    let p = RatMatrix::from_rows(vec![
        vec![z.clone(), z.clone(), z.clone()],
        vec![z.clone(), z.clone(), z.clone()],
        vec![rat(3, 2), rat(1, 2), z],
    ]);
    check(pd.production == p, || format!("P = {:?}", pd.production))?;
    let l = IntMatrix::from_i64_rows(&[&[2, 0, 0], &[0, 2, 0], &[-3, -1, 1]]);
    check(pd.laplacian == l, || format!("L = {:?}", pd.laplacian))?;
    let r = CriticalReport::compute(&pd).map_err(|e| e.to_string())?;
    let groups = |v: &[i64]| GroupDesc::from_cyclic_orders(&int_vec(v));
    check(r.laplacian_cokernel == groups(&[2, 2]), || format!("cokernel {}", r.laplacian_cokernel))?;
    check(r.crit == groups(&[2]), || format!("crit {}", r.crit))?;
    check(r.det_l == 4.into() && r.iota == 2.into() && r.rec_count == 2.into(), || {
        format!("det {} iota {} rec {}", r.det_l, r.iota, r.rec_count)
    })?;
    for method in [Method::Procedure, Method::Sandpilization] {
        let cert = burning_element(&pd, method, false).map_err(|e| e.to_string())?;
        check(cert.beta == int_vec(&[2, 2, 0]), || format!("{method:?} beta {:?}", cert.beta))?;
    }
    Ok("P, L, cokernel (2,2), crit (2), det 4, iota 2, #Rec 2, beta (2,2,0) by both methods".into())
}

fn c2_order_formula() -> Outcome {
    let battery = zoo::battery();
    for (name, net) in &battery {
        let pd = pd_of(net)?;
        let r = CriticalReport::compute(&pd).map_err(|e| format!("{name}: {e}"))?;
        let gm = GlobalMonoid::build(net, caps()).map_err(|e| format!("{name}: {e}"))?;
        let (rec, _) = oracle::recurrent_states(&gm, net).map_err(|e| format!("{name}: {e}"))?;
        let group = gm.group().map_err(|e| format!("{name}: {e}"))?;
        let rec_len = BigInt::from(rec.len());
        check(rec_len == r.rec_count && group.order() == rec.len() && group.is_free_and_transitive(), || {
            format!("{name}: |Rec| {} det/iota {} |eM| {}", rec.len(), r.rec_count, group.order())
        })?;
        let by_table = group.invariant_factors();
        check(by_table == r.crit, || format!("{name}: oracle crit {by_table} vs formula {}", r.crit))?;
    }
    Ok(format!("{} networks: |Rec| = det L / iota = |eM|, crit factors agree", battery.len()))
}

fn c3_burning_test() -> Outcome {
    let mut states = 0usize;
    let mut networks = 0usize;
    for (name, net) in zoo::battery() {
        let Some(q) = net.joint_state_count().filter(|&q| q <= 5000) else {
            continue;
        };
        let pd = pd_of(&net)?;
        let cert = burning_element(&pd, Method::Procedure, false).map_err(|e| format!("{name}: {e}"))?;
        let gm = GlobalMonoid::build(&net, caps()).map_err(|e| format!("{name}: {e}"))?;
        for i in 0..q {
            let joint = net.joint_from_index(i);
            let res = is_recurrent(&net, &pd, &joint, &cert).map_err(|e| format!("{name}: {e}"))?;
            check(res.recurrent == gm.is_recurrent(i), || format!("{name}: state {joint:?}"))?;
        }
        states += q;
        networks += 1;
    }
    Ok(format!("{states} joint states over {networks} networks agree with eQ"))
}

fn c4_homotopy() -> Outcome {
    let graphs = zoo::homotopy_graphs();
    for (name, g) in &graphs {
        let sand = pd_of(&zoo::build_sandpile(g).map_err(|e| e.to_string())?)?;
        let rotor = pd_of(&zoo::build_rotor(g).map_err(|e| e.to_string())?)?;
        check(sand.kernel == rotor.kernel && sand.production == rotor.production, || format!("{name}: (K, P) differ"))?;
        check(homotopic(&sand, &rotor).map_err(|e| e.to_string())?, || format!("{name}: not homotopic"))?;
        let (a, b) = (critical_group(&sand).map_err(|e| e.to_string())?, critical_group(&rotor).map_err(|e| e.to_string())?);
        check(a == b, || format!("{name}: crit {a} vs {b}"))?;
    }
    Ok(format!("{} graphs: identical (K, P) and crit factors", graphs.len()))
}

fn random_input(rng: &mut ChaCha8Rng, n: usize, max: i64) -> Vec<BigInt> {
    (0..n).map(|_| BigInt::from(rng.gen_range(0..=max))).collect()
}

fn c5_expected_time() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut networks = 0;
    for (name, net) in zoo::battery() {
        let gm = GlobalMonoid::build(&net, caps()).map_err(|e| format!("{name}: {e}"))?;
        if gm.recurrent().len() > 500 {
            continue;
        }
        let pd = pd_of(&net)?;
        let n = net.alphabet_size();
        let mut inputs: Vec<Vec<BigInt>> = (0..n)
            .map(|a| (0..n).map(|b| BigInt::from(u8::from(a == b))).collect())
            .collect();
        while inputs.len() < 10.max(n) {
            inputs.push(random_input(&mut rng, n, 6));
        }
        for x in &inputs {
            let avg = oracle::expected_odometer_exact(&net, &gm, x).map_err(|e| format!("{name}: {e}"))?;
            let xr: Vec<BigRational> = x.iter().map(|v| BigRational::from_integer(v.clone())).collect();
            let green = rational_solve(&pd.i_minus_p(), &xr).map_err(|e| e.to_string())?;
            check(avg == green, || format!("{name}: x {x:?}: {avg:?} vs {green:?}"))?;
        }
        networks += 1;
    }
    Ok(format!("{networks} networks x >= 10 inputs: mean odometer over Rec = (I - P)^-1 x exactly (seed {SEED})"))
}

fn c6_acyclicity() -> Outcome {
    let dag = DigraphSpec::new(&["v0", "v1", "s"], &[(0, 1), (0, 2), (1, 2)]).with_sink(2);
    let mut nets = zoo::battery();
    nets.push(("dag-sandpile", zoo::build_sandpile(&dag).map_err(|e| e.to_string())?));
    nets.push(("dag-rotor", zoo::build_rotor(&dag).map_err(|e| e.to_string())?));
    nets.push(("dag-toppling", zoo::build_toppling(&dag, &[3, 1, 1]).map_err(|e| e.to_string())?));
    let (mut acyclic, mut cyclic) = (0, 0);
    for (name, net) in &nets {
        let pd = pd_of(net)?;
        let b = nocycle_battery(net, &pd, caps()).map_err(|e| format!("{name}: {e}"))?;
        if b.gamma_acyclic {
            acyclic += 1;
        } else {
            cyclic += 1;
        }
    }
    check(acyclic >= 2 && cyclic >= 2, || format!("only {acyclic} acyclic and {cyclic} cyclic"))?;
    Ok(format!("six conditions agree on {} networks ({acyclic} acyclic, {cyclic} cyclic)", nets.len()))
}

/// Processes letters one at a time until some total state repeats with
/// letters still pending, which proves the computation never ends.
fn find_divergence(net: &NetworkSpec, x: &[BigInt], joint: &[usize], limit: usize) -> Option<usize> {
    let mut seen = BTreeSet::new();
    let mut state = TotalState::new(x.to_vec(), joint.to_vec());
    for step in 0..limit {
        if state.is_quiescent() {
            return None;
        }
        if !seen.insert((state.pending.clone(), state.joint.clone())) {
            return Some(step);
        }
        let a = state.pending.iter().position(|p| *p > BigInt::zero())?;
        state = net.process_letter(&state, a, true).ok()?;
    }
    None
}

fn c7_halting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let battery = zoo::battery();
    for (name, net) in &battery {
        let pd = pd_of(net)?;
        let cert = pd.halting().map_err(|e| e.to_string())?;
        check(cert.halts, || format!("{name}: certificate negative"))?;
        let counts = net.state_counts();
        for _ in 0..100 {
            let x = random_input(&mut rng, net.alphabet_size(), 20);
            let joint: Vec<usize> = counts.iter().map(|&c| rng.gen_range(0..c)).collect();
            net.stabilize(&x, &joint, None).map_err(|e| format!("{name}: {e}"))?;
        }
    }
    let net = zoo::two_cycle(1, 1).map_err(|e| e.to_string())?;
    let pd = pd_of(&net)?;
    let cert = pd.halting().map_err(|e| e.to_string())?;
    check(!cert.halts && cert.witness == Some(2), || format!("two-cycle (1,1): {cert:?}"))?;
    let x = int_vec(&[1, 0]);
    let exhausted = matches!(net.stabilize(&x, &[0, 0], Some(10_000)), Err(EngineError::BudgetExhausted { .. }));
    let repeat = find_divergence(&net, &x, &[0, 0], 100);
    check(exhausted && repeat.is_some(), || "two-cycle (1,1): no divergence exhibited".into())?;
    Ok(format!(
        "{} halting networks x 100 inputs terminate (seed {}); two-cycle (1,1) minor 2 is 0, input (1,0) repeats its total state after {} steps",
        battery.len(),
        SEED + 7,
        repeat.unwrap_or(0)
    ))
}

fn c8_time_to_halt() -> Outcome {
    let mut pairs = 0;
    let mut failures = Vec::new();
    for (name, net) in zoo::battery() {
        let pd = pd_of(&net)?;
        let n = net.alphabet_size();
        let states: Vec<Vec<usize>> = (0..net.joint_state_count().unwrap()).map(|i| net.joint_from_index(i)).collect();
        let mut directions: Vec<Vec<BigInt>> = vec![vec![BigInt::one(); n]];
        for a in 0..n.min(2) {
            directions.push((0..n).map(|b| BigInt::from(u8::from(a == b))).collect());
        }
        directions.push((0..n).map(|b| BigInt::from(b as u64 % 3)).collect());
        for u in &directions {
            let mut running = BigRational::zero();
            let mut last_rise = (0, BigRational::zero(), BigRational::zero());
            for k in 1..=50i64 {
                let x: Vec<BigInt> = u.iter().map(|c| c * k).collect();
                let d = oracle::deviation_scan(&net, &pd, &[x], &states).map_err(|e| format!("{name}: {e}"))?;
                if d > running {
                    last_rise = (k, running.clone(), d.clone());
                    running = d;
                }
            }
            if last_rise.0 > 30 {
                let (k, before, after) = last_rise;
                failures.push(format!("{name} u={u:?} rises {before} -> {after} at n={k}"));
            }
            pairs += 1;
        }
    }
    check(failures.is_empty(), || format!("{} of {pairs} (network, direction) pairs not flat on n in [31, 50]: {}", failures.len(), failures.join("; ")))?;
    Ok(format!("{pairs} (network, direction) pairs: running max deviation constant on n in [31, 50]"))
}

fn c9_stationarity() -> Outcome {
    let battery = zoo::battery();
    for (name, net) in &battery {
        let gm = GlobalMonoid::build(net, caps()).map_err(|e| format!("{name}: {e}"))?;
        for (a, t) in gm.generators().iter().enumerate() {
            check(t.permutes(gm.recurrent()), || format!("{name}: tau_{a} is not a bijection of Rec"))?;
        }
    }
    let net = zoo::build_sandpile(&zoo::triangle()).map_err(|e| e.to_string())?;
    let gm = GlobalMonoid::build(&net, caps()).map_err(|e| e.to_string())?;
    let steps = 100_000u64;
    let alpha = [1.0 / 3.0; 3];
    let run = oracle::markov_chain(&gm, &alpha, 0, steps, SEED + 9).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for &q in gm.recurrent() {
        let f = *run.visits.get(&q).unwrap_or(&0) as f64 / steps as f64;
        worst = worst.max((f - 1.0 / 3.0).abs());
    }
    check(gm.recurrent().len() == 3 && worst <= 0.02, || format!("triangle chain: max deviation {worst:.4}"))?;
    Ok(format!(
        "every tau_a permutes Rec on {} networks; triangle chain 1e5 steps (seed {}): max |freq - 1/3| = {worst:.4} <= 0.02",
        battery.len(),
        SEED + 9
    ))
}

fn c10_schedule_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let mut instances = 0;
    for (name, net) in zoo::battery() {
        let n = net.alphabet_size();
        let counts = net.state_counts();
        for _ in 0..3 {
            let total = rng.gen_range(1..=8);
            let mut x = vec![BigInt::zero(); n];
            for _ in 0..total {
                x[rng.gen_range(0..n)] += 1;
            }
            let joint: Vec<usize> = counts.iter().map(|&c| rng.gen_range(0..c)).collect();
            let parallel = net.stabilize(&x, &joint, None).map_err(|e| format!("{name}: {e}"))?;
            for _ in 0..200 {
                let mut state = TotalState::new(x.clone(), joint.clone());
                let mut odometer = vec![BigInt::zero(); n];
                while !state.is_quiescent() {
                    let pending: Vec<usize> = (0..n).filter(|&a| state.pending[a] > BigInt::zero()).collect();
                    let a = pending[rng.gen_range(0..pending.len())];
                    state = net.process_letter(&state, a, true).map_err(|e| format!("{name}: {e}"))?;
                    odometer[a] += 1;
                }
                check(odometer == parallel.odometer && state.joint == parallel.final_state, || {
                    format!("{name}: schedule disagrees on x {x:?} q {joint:?}")
                })?;
            }
            instances += 1;
        }
    }
    Ok(format!("{instances} instances x 200 random legal schedules match the parallel update (seed {})", SEED + 10))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("paper example reproduction", c1_paper_example),
        ("order formula", c2_order_formula),
        ("burning-test equivalence", c3_burning_test),
        ("homotopy invariance", c4_homotopy),
        ("expected time to halt", c5_expected_time),
        ("acyclicity battery", c6_acyclicity),
        ("halting certificate consistency", c7_halting),
        ("time-to-halt boundedness", c8_time_to_halt),
        ("stationarity mechanism", c9_stationarity),
        ("schedule invariance", c10_schedule_invariance),
    ];
    let mut failed = 0;
    for (i, (label, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS {label}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {label}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
