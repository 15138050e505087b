//! The JSON network document and its conversion to and from [`NetworkSpec`].
//!
//! A document either lists processors explicitly or names a graph family:
//!
//! ```json
//! { "version": 1,
//!   "vertices": [ { "name": "i", "states": ["0", "1"], "letters": ["a", "b"],
//!                   "transitions": { "a": { "0": "1", "1": "0" }, ... },
//!                   "outputs": { "a": { "0": { "c": 1 } }, ... } } ] }
//!
//! { "version": 1,
//!   "family": { "kind": "sandpile", "vertices": ["v", "s"], "edges": [["v", "s"]], "sink": "s" } }
//! ```
//!
//! Output counts of zero, and empty output maps, are omitted.

use std::collections::{BTreeMap, BTreeSet};

use abnet_core::engine::{NetworkError, NetworkSpec};
use abnet_core::processor::{ProcessorError, ProcessorSpec, Violation};
use abnet_core::zoo::{self, DigraphSpec, ZooError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<VertexDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyDoc>,
}

pub type OutputTable = BTreeMap<String, BTreeMap<String, BTreeMap<String, u64>>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDoc {
    pub name: String,
    pub states: Vec<String>,
    pub letters: Vec<String>,
    /// letter -> state -> next state.
    pub transitions: BTreeMap<String, BTreeMap<String, String>>,
    /// letter -> state -> emitted letter -> count.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub outputs: OutputTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Sandpile,
    Rotor,
    Toppling,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub kind: FamilyKind,
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub thresholds: BTreeMap<String, usize>,
    /// vertex -> targets of its out-edges in rotor order.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rotor_order: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocError {
    #[error("unsupported document version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("document must have exactly one of \"vertices\" and \"family\"")]
    Shape,
    #[error("duplicate vertex name {0:?}")]
    DuplicateVertex(String),
    #[error("letter {0:?} is declared more than once")]
    DuplicateLetter(String),
    #[error("vertex {vertex:?}: duplicate state name {state:?}")]
    DuplicateState { vertex: String, state: String },
    #[error("vertex {0:?} has no states")]
    NoStates(String),
    #[error("vertex {vertex:?}: unknown letter {letter:?}")]
    UnknownLetter { vertex: String, letter: String },
    #[error("vertex {vertex:?}: unknown state {state:?}")]
    UnknownState { vertex: String, state: String },
    #[error("vertex {vertex:?}: no transition for letter {letter:?} in state {state:?}")]
    MissingTransition { vertex: String, letter: String, state: String },
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("toppling vertex {0:?} has no threshold")]
    MissingThreshold(String),
    #[error("{0} only applies to the {1} family")]
    MisplacedOption(&'static str, &'static str),
    #[error("vertex {0:?}: rotor order does not match its out-edges")]
    RotorOrder(String),
    #[error("vertex {vertex:?}: {message}")]
    Invalid { vertex: String, message: String },
    #[error("{0}")]
    Family(String),
}

/// A validated network together with the names used in its document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub net: NetworkSpec,
    pub vertex_names: Vec<String>,
    pub letter_names: Vec<String>,
    pub state_names: Vec<Vec<String>>,
}

fn index_of(names: &[String], name: &str) -> Option<usize> {
    names.iter().position(|n| n == name)
}

impl Model {
    pub fn from_document(doc: &NetworkDocument) -> Result<Model, DocError> {
        if doc.version != FORMAT_VERSION {
            return Err(DocError::Version(doc.version));
        }
        match (&doc.vertices, &doc.family) {
            (Some(v), None) => from_vertices(v),
            (None, Some(f)) => from_family(f),
            _ => Err(DocError::Shape),
        }
    }

    /// The explicit form of this network.
    pub fn to_document(&self) -> NetworkDocument {
        let vertices = self
            .net
            .vertices()
            .iter()
            .enumerate()
            .map(|(v, p)| {
                let states = &self.state_names[v];
                let mut transitions = BTreeMap::new();
                let mut outputs: OutputTable = BTreeMap::new();
                for (local, &a) in p.letters().iter().enumerate() {
                    let letter = self.letter_names[a].clone();
                    let row = (0..p.state_count())
                        .map(|q| (states[q].clone(), states[p.step(local, q)].clone()))
                        .collect();
                    transitions.insert(letter.clone(), row);
                    let mut by_state = BTreeMap::new();
                    for (q, name) in states.iter().enumerate().take(p.state_count()) {
                        let emitted: BTreeMap<String, u64> = p
                            .emission(local, q)
                            .iter()
                            .enumerate()
                            .filter(|(_, &c)| c > 0)
                            .map(|(b, &c)| (self.letter_names[b].clone(), c))
                            .collect();
                        if !emitted.is_empty() {
                            by_state.insert(name.clone(), emitted);
                        }
                    }
                    if !by_state.is_empty() {
                        outputs.insert(letter, by_state);
                    }
                }
                VertexDoc {
                    name: self.vertex_names[v].clone(),
                    states: states.clone(),
                    letters: p.letters().iter().map(|&a| self.letter_names[a].clone()).collect(),
                    transitions,
                    outputs,
                }
            })
            .collect();
        NetworkDocument {
            version: FORMAT_VERSION,
            vertices: Some(vertices),
            family: None,
        }
    }

    /// Names vertices `v0, v1, ...`, letters `x0, x1, ...` and states by number.
    pub fn unnamed(net: NetworkSpec) -> Model {
        Model {
            vertex_names: (0..net.vertex_count()).map(|v| format!("v{v}")).collect(),
            letter_names: (0..net.alphabet_size()).map(|a| format!("x{a}")).collect(),
            state_names: net.state_counts().iter().map(|&c| (0..c).map(|q| q.to_string()).collect()).collect(),
            net,
        }
    }

    pub fn letter(&self, name: &str) -> Option<usize> {
        index_of(&self.letter_names, name)
    }

    pub fn vertex(&self, name: &str) -> Option<usize> {
        index_of(&self.vertex_names, name)
    }

    pub fn state(&self, vertex: usize, name: &str) -> Option<usize> {
        index_of(&self.state_names[vertex], name)
    }

    /// Joint state as a map from vertex name to state name.
    pub fn describe_joint(&self, joint: &[usize]) -> BTreeMap<String, String> {
        joint
            .iter()
            .enumerate()
            .map(|(v, &q)| (self.vertex_names[v].clone(), self.state_names[v][q].clone()))
            .collect()
    }
}

fn describe_violation(letters: &[String], v: &Violation) -> String {
    match *v {
        Violation::NonCommuting { a, b, state } => {
            format!("letters {:?} and {:?} do not commute in state #{state}", letters[a], letters[b])
        }
        Violation::OutputExchange { a, b, state } => format!(
            "letters {:?} and {:?} emit different totals in state #{state} depending on order",
            letters[a], letters[b]
        ),
    }
}

fn from_vertices(docs: &[VertexDoc]) -> Result<Model, DocError> {
    let mut vertex_names: Vec<String> = Vec::new();
    let mut letter_names: Vec<String> = Vec::new();
    for d in docs {
        if vertex_names.contains(&d.name) {
            return Err(DocError::DuplicateVertex(d.name.clone()));
        }
        vertex_names.push(d.name.clone());
        for l in &d.letters {
            if letter_names.contains(l) {
                return Err(DocError::DuplicateLetter(l.clone()));
            }
            letter_names.push(l.clone());
        }
    }
    let n = letter_names.len();
    let mut vertices = Vec::with_capacity(docs.len());
    let mut state_names = Vec::with_capacity(docs.len());
    for d in docs {
        let vertex = || d.name.clone();
        if d.states.is_empty() {
            return Err(DocError::NoStates(vertex()));
        }
        let mut seen = BTreeSet::new();
        for s in &d.states {
            if !seen.insert(s) {
                return Err(DocError::DuplicateState { vertex: vertex(), state: s.clone() });
            }
        }
        let state = |name: &str| {
            index_of(&d.states, name).ok_or_else(|| DocError::UnknownState { vertex: vertex(), state: name.to_string() })
        };
        for letter in d.transitions.keys().chain(d.outputs.keys()) {
            if !d.letters.contains(letter) {
                return Err(DocError::UnknownLetter { vertex: vertex(), letter: letter.clone() });
            }
        }
        let mut transition = Vec::with_capacity(d.letters.len());
        let mut output = Vec::with_capacity(d.letters.len());
        for letter in &d.letters {
            let row = d.transitions.get(letter);
            let mut t = Vec::with_capacity(d.states.len());
            for s in &d.states {
                let target = row.and_then(|r| r.get(s)).ok_or_else(|| DocError::MissingTransition {
                    vertex: vertex(),
                    letter: letter.clone(),
                    state: s.clone(),
                })?;
                t.push(state(target)?);
            }
            if let Some(r) = row {
                if let Some(extra) = r.keys().find(|k| !d.states.contains(k)) {
                    return Err(DocError::UnknownState { vertex: vertex(), state: extra.clone() });
                }
            }
            transition.push(t);
            let mut o = vec![vec![0u64; n]; d.states.len()];
            if let Some(by_state) = d.outputs.get(letter) {
                for (s, emitted) in by_state {
                    let q = state(s)?;
                    for (b, &c) in emitted {
                        let b = index_of(&letter_names, b)
                            .ok_or_else(|| DocError::UnknownLetter { vertex: vertex(), letter: b.clone() })?;
                        o[q][b] += c;
                    }
                }
            }
            output.push(o);
        }
        let letters: Vec<usize> = d.letters.iter().map(|l| index_of(&letter_names, l).expect("declared")).collect();
        let p = ProcessorSpec::new(d.states.len(), letters, n, transition, output)
            .map_err(|e| DocError::Invalid { vertex: vertex(), message: e.to_string() })?;
        vertices.push(p);
        state_names.push(d.states.clone());
    }
    let net = NetworkSpec::new(vertices, n).map_err(|e| network_error(&vertex_names, &letter_names, e))?;
    Ok(Model {
        net,
        vertex_names,
        letter_names,
        state_names,
    })
}

fn network_error(vertex_names: &[String], letter_names: &[String], e: NetworkError) -> DocError {
    let vertex = |v: usize| vertex_names.get(v).cloned().unwrap_or_default();
    let letter = |a: usize| letter_names.get(a).cloned().unwrap_or_default();
    match e {
        NetworkError::Empty => DocError::Invalid { vertex: String::new(), message: "network has no vertices".into() },
        NetworkError::Processor { vertex: v, source } => DocError::Invalid {
            vertex: vertex(v),
            message: match source {
                ProcessorError::Reducible => "processor is not irreducible".into(),
                other => other.to_string(),
            },
        },
        NetworkError::NotAbelian { vertex: v, violations, .. } => DocError::Invalid {
            vertex: vertex(v),
            message: format!(
                "not abelian: {}",
                violations.iter().map(|x| describe_violation(letter_names, x)).collect::<Vec<_>>().join("; ")
            ),
        },
        NetworkError::Reducible { vertex: v } => DocError::Invalid {
            vertex: vertex(v),
            message: "processor is not irreducible".into(),
        },
        NetworkError::LetterOverlap { letter: a, first, second } => DocError::Invalid {
            vertex: vertex(second),
            message: format!("letter {:?} is also owned by {:?}", letter(a), vertex(first)),
        },
        other => DocError::Invalid { vertex: String::new(), message: other.to_string() },
    }
}

fn from_family(f: &FamilyDoc) -> Result<Model, DocError> {
    let names = &f.vertices;
    let mut seen = BTreeSet::new();
    for v in names {
        if !seen.insert(v) {
            return Err(DocError::DuplicateVertex(v.clone()));
        }
    }
    let find = |name: &str| index_of(names, name).ok_or_else(|| DocError::UnknownVertex(name.to_string()));
    let edges = f
        .edges
        .iter()
        .map(|(u, v)| Ok((find(u)?, find(v)?)))
        .collect::<Result<Vec<_>, DocError>>()?;
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut g = DigraphSpec::new(&refs, &edges);
    if let Some(s) = &f.sink {
        g = g.with_sink(find(s)?);
    }
    for v in f.thresholds.keys().chain(f.rotor_order.keys()) {
        find(v)?;
    }
    if f.kind != FamilyKind::Toppling && !f.thresholds.is_empty() {
        return Err(DocError::MisplacedOption("thresholds", "toppling"));
    }
    if f.kind != FamilyKind::Rotor && !f.rotor_order.is_empty() {
        return Err(DocError::MisplacedOption("rotor_order", "rotor"));
    }
    let zoo_err = |e: ZooError| DocError::Family(e.to_string());
    let net = match f.kind {
        FamilyKind::Sandpile => zoo::build_sandpile(&g).map_err(zoo_err)?,
        FamilyKind::Toppling => {
            let thresholds = (0..names.len())
                .map(|v| match f.thresholds.get(&names[v]) {
                    Some(&r) => Ok(r),
                    None if g.sink == Some(v) => Ok(1),
                    None => Err(DocError::MissingThreshold(names[v].clone())),
                })
                .collect::<Result<Vec<_>, _>>()?;
            zoo::build_toppling(&g, &thresholds).map_err(zoo_err)?
        }
        FamilyKind::Rotor => {
            if !f.rotor_order.is_empty() {
                let orders = (0..names.len())
                    .map(|v| rotor_positions(&g, v, f.rotor_order.get(&names[v]), &find))
                    .collect::<Result<Vec<_>, _>>()?;
                g = g.with_rotor_orders(orders);
            }
            zoo::build_rotor(&g).map_err(zoo_err)?
        }
    };
    let state_names = net
        .vertices()
        .iter()
        .map(|p| (0..p.state_count()).map(|q| q.to_string()).collect())
        .collect();
    Ok(Model {
        net,
        vertex_names: names.clone(),
        letter_names: names.clone(),
        state_names,
    })
}

/// Turns a list of target names into positions among the out-edges of `v`;
/// parallel edges are matched in edge-list order.
fn rotor_positions(
    g: &DigraphSpec,
    v: usize,
    order: Option<&Vec<String>>,
    find: &dyn Fn(&str) -> Result<usize, DocError>,
) -> Result<Vec<usize>, DocError> {
    let targets = g.out_targets(v);
    let Some(order) = order else {
        return Ok((0..targets.len()).collect());
    };
    if Some(v) == g.sink {
        return Ok(Vec::new());
    }
    let bad = || DocError::RotorOrder(g.names[v].clone());
    if order.len() != targets.len() {
        return Err(bad());
    }
    let mut used = vec![false; targets.len()];
    let mut positions = Vec::with_capacity(order.len());
    for name in order {
        let t = find(name)?;
        let i = (0..targets.len()).find(|&i| !used[i] && targets[i] == t).ok_or_else(bad)?;
        used[i] = true;
        positions.push(i);
    }
    Ok(positions)
}

impl NetworkDocument {
    pub fn parse(text: &str) -> Result<NetworkDocument, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    /// A toppling-family document for a unary network whose letters are named
    /// like its vertices, as produced by sandpilization.
    pub fn toppling(names: &[String], net: &NetworkSpec) -> NetworkDocument {
        let mut edges = Vec::new();
        let mut thresholds = BTreeMap::new();
        for (a, p) in net.vertices().iter().enumerate() {
            thresholds.insert(names[a].clone(), p.state_count());
            let last = p.state_count() - 1;
            for (b, &c) in p.emission(0, last).iter().enumerate() {
                for _ in 0..c {
                    edges.push((names[a].clone(), names[b].clone()));
                }
            }
        }
        NetworkDocument {
            version: FORMAT_VERSION,
            vertices: None,
            family: Some(FamilyDoc {
                kind: FamilyKind::Toppling,
                vertices: names.to_vec(),
                edges,
                sink: None,
                thresholds,
                rotor_order: BTreeMap::new(),
            }),
        }
    }
}
