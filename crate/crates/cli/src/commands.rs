//! One function per subcommand. Each returns a report value and a status
//! that decides the exit code.

use std::collections::BTreeMap;

use abnet_core::burning::{burning_element, is_recurrent, BurningCertificate, Method};
use abnet_core::critical::CriticalReport;
use abnet_core::engine::EngineError;
use abnet_core::oracle::{self, GlobalMonoid, OracleCaps, OracleError};
use abnet_core::spectra::{nocycle_battery, sandpilize as sandpilization, ProductionData, SpectraError};
use num_bigint::BigInt;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::document::{DocError, Model, NetworkDocument};
use crate::report::{self, group, int, int_matrix, rat_matrix};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid document: {0}")]
    Document(#[from] DocError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("network does not halt on all inputs (leading minor of size {0} is nonpositive)")]
    NonHalting(usize),
    #[error("analysis failed: {0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Document(_) | CliError::Argument(_) => 2,
            CliError::NonHalting(_) => 3,
            CliError::Io(_) | CliError::Analysis(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NonHalting,
    BudgetExhausted,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::NonHalting => 3,
            Status::BudgetExhausted => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub report: Value,
    pub status: Status,
}

impl Output {
    fn ok(report: Value) -> Self {
        Output { report, status: Status::Ok }
    }
}

fn analysis(e: impl std::fmt::Display) -> CliError {
    CliError::Analysis(e.to_string())
}

fn production(model: &Model) -> Result<ProductionData, CliError> {
    ProductionData::compute(&model.net).map_err(analysis)
}

fn require_halting(pd: &ProductionData) -> Result<(), CliError> {
    match pd.halting().map_err(analysis)?.witness {
        Some(k) => Err(CliError::NonHalting(k)),
        None => Ok(()),
    }
}

/// Splits `name=value,name=value`.
fn assignments(text: &str) -> Result<Vec<(&str, &str)>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            item.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| CliError::Argument(format!("expected name=value, got {item:?}")))
        })
        .collect()
}

pub fn parse_pending(model: &Model, text: Option<&str>) -> Result<Vec<BigInt>, CliError> {
    let mut x = vec![BigInt::from(0); model.letter_names.len()];
    for (name, value) in assignments(text.unwrap_or(""))? {
        let a = model.letter(name).ok_or_else(|| CliError::Argument(format!("unknown letter {name:?}")))?;
        let count: u64 = value
            .parse()
            .map_err(|_| CliError::Argument(format!("letter {name:?}: count {value:?} is not a nonnegative integer")))?;
        x[a] += count;
    }
    Ok(x)
}

/// Unlisted vertices start in their first state.
pub fn parse_state(model: &Model, text: Option<&str>) -> Result<Vec<usize>, CliError> {
    let mut joint = vec![0; model.vertex_names.len()];
    for (name, value) in assignments(text.unwrap_or(""))? {
        let v = model.vertex(name).ok_or_else(|| CliError::Argument(format!("unknown vertex {name:?}")))?;
        joint[v] = model
            .state(v, value)
            .ok_or_else(|| CliError::Argument(format!("vertex {name:?} has no state {value:?}")))?;
    }
    Ok(joint)
}

/// Unlisted letters get weight 0; with no text at all, the uniform distribution.
pub fn parse_alpha(model: &Model, text: Option<&str>) -> Result<Vec<f64>, CliError> {
    let n = model.letter_names.len();
    let Some(text) = text else {
        return Ok(vec![1.0 / n as f64; n]);
    };
    let mut alpha = vec![0.0; n];
    for (name, value) in assignments(text)? {
        let a = model.letter(name).ok_or_else(|| CliError::Argument(format!("unknown letter {name:?}")))?;
        alpha[a] = value
            .parse()
            .map_err(|_| CliError::Argument(format!("letter {name:?}: weight {value:?} is not a number")))?;
    }
    Ok(alpha)
}

fn by_letter(model: &Model, v: &[BigInt]) -> Value {
    Value::Object(model.letter_names.iter().cloned().zip(v.iter().map(int)).collect())
}

fn state_value(model: &Model, joint: &[usize]) -> Value {
    json!(model.describe_joint(joint))
}

fn certificate(model: &Model, cert: &BurningCertificate) -> Value {
    json!({
        "method": match cert.via { Method::Procedure => "procedure", Method::Sandpilization => "sandpilization" },
        "refined": cert.refined,
        "script": by_letter(model, &cert.y),
        "odometer": by_letter(model, &cert.k),
        "element": by_letter(model, &cert.beta),
    })
}

pub fn analyze(model: &Model) -> Result<Output, CliError> {
    let pd = production(model)?;
    let cert = pd.halting().map_err(analysis)?;
    let mut report = Map::new();
    report.insert(
        "network".into(),
        json!({
            "vertices": model.vertex_names,
            "letters": model.letter_names,
            "joint_states": model.net.joint_state_count(),
        }),
    );
    report.insert("kernel_basis_columns".into(), Value::Array(pd.kernel.basis().columns().iter().map(|c| report::ints(c)).collect()));
    report.insert("reset".into(), json!(pd.reset));
    report.insert("production".into(), rat_matrix(&pd.production));
    report.insert("laplacian".into(), int_matrix(&pd.laplacian));
    report.insert(
        "halting".into(),
        json!({ "halts": cert.halts, "leading_minors": report::ints(&cert.minors), "witness": cert.witness }),
    );
    report.insert("production_graph_acyclic".into(), json!(pd.is_acyclic()));
    if !cert.halts {
        return Ok(Output { report: Value::Object(report), status: Status::NonHalting });
    }
    let r = CriticalReport::compute(&pd).map_err(analysis)?;
    report.insert("det_laplacian".into(), int(&r.det_l));
    report.insert("iota".into(), int(&r.iota));
    report.insert("recurrent_count".into(), int(&r.rec_count));
    report.insert("critical_group".into(), group(&r.crit));
    report.insert("laplacian_cokernel".into(), group(&r.laplacian_cokernel));
    report.insert("rectangular".into(), json!(r.rectangular));
    let battery = match nocycle_battery(&model.net, &pd, OracleCaps::default()) {
        Ok(b) => json!({
            "locally_recurrent_implies_recurrent": b.locally_rec_implies_rec,
            "det_laplacian_equals_det_reset": b.det_l_eq_det_d,
            "all_sandpilization_states_recurrent": b.all_sandpilization_states_rec,
            "sandpilization_zero_state_recurrent": b.zero_state_rec,
            "production_graph_acyclic": b.gamma_acyclic,
            "production_nilpotent": b.p_nilpotent,
        }),
        Err(SpectraError::Oracle(e @ (OracleError::TooManyStates { .. } | OracleError::Closure(_)))) => {
            json!({ "unavailable": e.to_string() })
        }
        Err(e) => return Err(analysis(e)),
    };
    report.insert("acyclicity_battery".into(), battery);
    Ok(Output::ok(Value::Object(report)))
}

pub fn simulate(model: &Model, pending: Option<&str>, state: Option<&str>, budget: Option<u64>) -> Result<Output, CliError> {
    let x = parse_pending(model, pending)?;
    let joint = parse_state(model, state)?;
    match model.net.stabilize(&x, &joint, budget) {
        Ok(run) => Ok(Output::ok(json!({
            "final_state": state_value(model, &run.final_state),
            "odometer": by_letter(model, &run.odometer),
            "rounds": run.rounds,
        }))),
        Err(EngineError::BudgetExhausted { rounds, partial_odometer, state }) => Ok(Output {
            report: json!({
                "budget_exhausted": true,
                "rounds": rounds,
                "partial_odometer": by_letter(model, &partial_odometer),
                "pending": by_letter(model, &state.pending),
                "state": state_value(model, &state.joint),
            }),
            status: Status::BudgetExhausted,
        }),
        Err(e) => Err(CliError::Argument(e.to_string())),
    }
}

pub fn recurrent(model: &Model, state: Option<&str>, refine: bool) -> Result<Output, CliError> {
    let pd = production(model)?;
    require_halting(&pd)?;
    let joint = parse_state(model, state)?;
    let cert = burning_element(&pd, Method::Procedure, refine).map_err(analysis)?;
    let res = is_recurrent(&model.net, &pd, &joint, &cert).map_err(analysis)?;
    Ok(Output::ok(json!({
        "state": state_value(model, &joint),
        "recurrent": res.recurrent,
        "odometer": by_letter(model, &res.odometer),
        "certificate": certificate(model, &cert),
    })))
}

pub fn burning(model: &Model, method: Method, refine: bool) -> Result<Output, CliError> {
    let pd = production(model)?;
    require_halting(&pd)?;
    let cert = burning_element(&pd, method, refine).map_err(analysis)?;
    Ok(Output::ok(certificate(model, &cert)))
}

fn oracle_or_notice(model: &Model) -> Result<Result<GlobalMonoid, String>, CliError> {
    match GlobalMonoid::build(&model.net, OracleCaps::default()) {
        Ok(gm) => Ok(Ok(gm)),
        Err(e @ (OracleError::TooManyStates { .. } | OracleError::Closure(_))) => Ok(Err(e.to_string())),
        Err(e) => Err(analysis(e)),
    }
}

pub fn oracle(model: &Model) -> Result<Output, CliError> {
    let pd = production(model)?;
    require_halting(&pd)?;
    let formula = CriticalReport::compute(&pd).map_err(analysis)?;
    let formulas = json!({
        "recurrent_count": int(&formula.rec_count),
        "critical_group": group(&formula.crit),
    });
    let gm = match oracle_or_notice(model)? {
        Ok(gm) => gm,
        Err(reason) => {
            return Ok(Output::ok(json!({
                "oracle": "unavailable",
                "reason": reason,
                "formulas": formulas,
            })))
        }
    };
    let (rec, checks) = oracle::recurrent_states(&gm, &model.net).map_err(analysis)?;
    let monoid_size = gm.closure().ok().map(|m| m.len());
    let permutes = gm.generators().iter().all(|t| t.permutes(gm.recurrent()));
    let (group_part, crit) = match gm.group() {
        Ok(g) => {
            let crit = g.invariant_factors();
            (
                json!({
                    "order": g.order(),
                    "free_and_transitive": g.is_free_and_transitive(),
                    "invariant_factors": group(&crit),
                }),
                Some(crit),
            )
        }
        Err(e @ OracleError::Closure(_)) => (json!({ "unavailable": e.to_string() }), None),
        Err(e) => return Err(analysis(e)),
    };
    Ok(Output::ok(json!({
        "joint_states": gm.state_count(),
        "monoid_size": monoid_size,
        "recurrent_states": rec.iter().map(|&q| state_value(model, &model.net.joint_from_index(q))).collect::<Vec<_>>(),
        "recurrent_count": rec.len(),
        "checks": {
            "reachable_from_every_state": checks.reachable_from_everywhere,
            "returns_from_own_orbit": checks.returns_from_own_orbit,
            "in_every_image": checks.in_every_image,
            "in_image_of_idempotent": checks.in_image_of_e,
            "fixed_by_idempotent": checks.fixed_by_e,
            "locally_recurrent": checks.locally_recurrent,
            "generators_permute_recurrent_states": permutes,
        },
        "group": group_part,
        "formulas": formulas,
        "agreement": {
            "recurrent_count": BigInt::from(rec.len()) == formula.rec_count,
            "critical_group": crit.map(|c| c == formula.crit),
        },
    })))
}

pub fn markov(model: &Model, alpha: Option<&str>, steps: u64, seed: u64, start: Option<&str>) -> Result<Output, CliError> {
    let pd = production(model)?;
    require_halting(&pd)?;
    let alpha = parse_alpha(model, alpha)?;
    let joint = parse_state(model, start)?;
    let gm = oracle_or_notice(model)?.map_err(CliError::Analysis)?;
    let run = oracle::markov_chain(&gm, &alpha, model.net.joint_index(&joint), steps, seed).map_err(|e| CliError::Argument(e.to_string()))?;
    let adequate = oracle::adequate_support(&gm, &alpha).map_err(analysis)?;
    const HEAD: usize = 20;
    let describe = |q: usize| state_value(model, &model.net.joint_from_index(q));
    let frequencies: Vec<Value> = gm
        .recurrent()
        .iter()
        .map(|&q| {
            let visits = run.visits.get(&q).copied().unwrap_or(0);
            json!({
                "state": describe(q),
                "visits": visits,
                "frequency": if steps == 0 { Value::Null } else { json!(visits as f64 / steps as f64) },
            })
        })
        .collect();
    let alpha_map: BTreeMap<&str, f64> = model.letter_names.iter().map(String::as_str).zip(alpha.iter().copied()).collect();
    Ok(Output::ok(json!({
        "seed": seed,
        "steps": steps,
        "alpha": alpha_map,
        "adequate_support": adequate,
        "trajectory_head": run.path.iter().take(HEAD).map(|&q| describe(q)).collect::<Vec<_>>(),
        "final_state": describe(*run.path.last().expect("path holds the start")),
        "recurrent_frequencies": frequencies,
    })))
}

/// The sandpilization as a toppling-family document on the letters.
pub fn sandpilize(model: &Model) -> Result<NetworkDocument, CliError> {
    let pd = production(model)?;
    let net = sandpilization(&pd).map_err(analysis)?;
    Ok(NetworkDocument::toppling(&model.letter_names, &net))
}
