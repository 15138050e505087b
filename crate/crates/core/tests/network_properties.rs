use abnet_core::burning::{burning_element, is_recurrent, Method};
use abnet_core::critical::CriticalReport;
use abnet_core::engine::NetworkSpec;
use abnet_core::lattice::det_exact;
use abnet_core::oracle::{self, GlobalMonoid, OracleCaps};
use abnet_core::spectra::{is_acyclic, linearity_check, sandpilize, ProductionData};
use abnet_core::zoo;
use num_bigint::BigInt;
use proptest::prelude::*;
use std::sync::OnceLock;

struct Fixture {
    name: &'static str,
    net: NetworkSpec,
    pd: ProductionData,
    gm: GlobalMonoid,
}

fn fixtures() -> &'static [Fixture] {
    static CELL: OnceLock<Vec<Fixture>> = OnceLock::new();
    CELL.get_or_init(|| {
        zoo::battery()
            .into_iter()
            .map(|(name, net)| {
                let pd = ProductionData::compute(&net).unwrap();
                let gm = GlobalMonoid::build(&net, OracleCaps::default()).unwrap();
                Fixture { name, net, pd, gm }
            })
            .collect()
    })
}

fn vector(v: &[u8]) -> Vec<BigInt> {
    v.iter().map(|&c| BigInt::from(c)).collect()
}

fn instance() -> impl Strategy<Value = (usize, Vec<u8>, Vec<u8>, usize)> {
    (0..fixtures().len()).prop_flat_map(|i| {
        let f = &fixtures()[i];
        let n = f.net.alphabet_size();
        (
            Just(i),
            proptest::collection::vec(0u8..6, n),
            proptest::collection::vec(0u8..6, n),
            0..f.gm.state_count(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn stabilization_is_additive((i, x, y, q) in instance()) {
        let f = &fixtures()[i];
        let joint = f.net.joint_from_index(q);
        let (x, y) = (vector(&x), vector(&y));
        let sum: Vec<BigInt> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let whole = f.net.stabilize(&sum, &joint, None).unwrap();
        let first = f.net.stabilize(&x, &joint, None).unwrap();
        let second = f.net.stabilize(&y, &first.final_state, None).unwrap();
        prop_assert_eq!(&whole.final_state, &second.final_state);
        let odo: Vec<BigInt> = first.odometer.iter().zip(&second.odometer).map(|(a, b)| a + b).collect();
        prop_assert_eq!(whole.odometer, odo);
    }

    #[test]
    fn tau_matches_stabilization((i, x, _y, q) in instance()) {
        let f = &fixtures()[i];
        let x = vector(&x);
        let run = f.net.stabilize(&x, &f.net.joint_from_index(q), None).unwrap();
        prop_assert_eq!(f.gm.tau(&x).apply(q), f.net.joint_index(&run.final_state));
    }

    #[test]
    fn witness_dominates_and_is_idempotent((i, x, _y, _q) in instance()) {
        let f = &fixtures()[i];
        let x = vector(&x);
        let z = oracle::idempotent_witness(&f.gm, &x).unwrap();
        prop_assert!(z.iter().zip(&x).all(|(a, b)| a >= b));
        prop_assert_eq!(&f.gm.tau(&z), f.gm.idempotent());
    }

    #[test]
    fn recurrent_states_stay_recurrent((i, x, _y, r) in instance()) {
        let f = &fixtures()[i];
        let q = f.gm.recurrent()[r % f.gm.recurrent().len()];
        let run = f.net.stabilize(&vector(&x), &f.net.joint_from_index(q), None).unwrap();
        prop_assert!(f.gm.is_recurrent(f.net.joint_index(&run.final_state)));
    }
}

#[test]
fn burning_element_fixes_exactly_the_recurrent_states() {
    for f in fixtures() {
        for refine in [false, true] {
            let cert = burning_element(&f.pd, Method::Sandpilization, refine).unwrap();
            for &q in f.gm.recurrent() {
                let joint = f.net.joint_from_index(q);
                let res = is_recurrent(&f.net, &f.pd, &joint, &cert).unwrap();
                assert!(res.recurrent, "{}", f.name);
                assert_eq!(res.odometer, cert.k, "{}", f.name);
            }
        }
    }
}

#[test]
fn kernel_image_acts_trivially_on_recurrent_states() {
    for f in fixtures() {
        let cert = burning_element(&f.pd, Method::Procedure, false).unwrap();
        let twice: Vec<BigInt> = cert.beta.iter().map(|b| b * 2).collect();
        for &q in f.gm.recurrent() {
            let joint = f.net.joint_from_index(q);
            assert_eq!(f.net.stabilize(&twice, &joint, None).unwrap().final_state, joint, "{}", f.name);
        }
    }
}

#[test]
fn production_is_linear_on_the_kernel() {
    for f in fixtures() {
        linearity_check(&f.net, &f.pd).unwrap_or_else(|e| panic!("{}: {e}", f.name));
    }
}

#[test]
fn sandpilization_keeps_laplacian_and_resets() {
    for f in fixtures() {
        let s = ProductionData::compute(&sandpilize(&f.pd).unwrap()).unwrap();
        assert_eq!(s.laplacian, f.pd.laplacian, "{}", f.name);
        assert_eq!(s.reset, f.pd.reset, "{}", f.name);
        assert_eq!(det_exact(&s.d_matrix()), det_exact(&f.pd.d_matrix()));
        assert!(CriticalReport::compute(&s).unwrap().rectangular);
    }
}

#[test]
fn uniform_alpha_reaches_every_recurrent_state() {
    for f in fixtures() {
        let n = f.net.alphabet_size();
        let alpha = vec![1.0 / n as f64; n];
        assert!(oracle::adequate_support(&f.gm, &alpha).unwrap(), "{}", f.name);
        let all: Vec<usize> = (0..n).collect();
        for start in 0..f.gm.state_count() {
            let seen = oracle::reachable(&f.gm, start, &all);
            assert!(f.gm.recurrent().iter().all(|&q| seen[q]), "{}", f.name);
        }
    }
}

#[test]
fn toppling_recurrent_states_have_a_chip_on_every_cycle() {
    let nets = [
        zoo::build_sandpile(&zoo::wheel()).unwrap(),
        zoo::build_sandpile(&zoo::complete4()).unwrap(),
        zoo::two_cycle(2, 2).unwrap(),
        zoo::off_degree_toppling().unwrap(),
    ];
    for net in nets {
        let pd = ProductionData::compute(&net).unwrap();
        let gm = GlobalMonoid::build(&net, OracleCaps::default()).unwrap();
        for &q in gm.recurrent() {
            let joint = net.joint_from_index(q);
            let empty: Vec<Vec<usize>> = (0..net.alphabet_size())
                .map(|a| {
                    if joint[a] == 0 {
                        pd.graph[a].iter().copied().filter(|&b| joint[b] == 0).collect()
                    } else {
                        Vec::new()
                    }
                })
                .collect();
            assert!(is_acyclic(&empty), "state {joint:?}");
        }
    }
}

#[test]
fn rotor_recurrent_count_matches_sandpile() {
    for (_, g) in zoo::homotopy_graphs() {
        let sand = GlobalMonoid::build(&zoo::build_sandpile(&g).unwrap(), OracleCaps::default()).unwrap();
        let rotor = GlobalMonoid::build(&zoo::build_rotor(&g).unwrap(), OracleCaps::default()).unwrap();
        assert_eq!(sand.recurrent().len(), rotor.recurrent().len());
    }
}
