//! Constructors for sandpile, rotor and toppling networks on a digraph, the
//! two-vertex non-rectangular example, and the shared test battery.
//!
//! Every vertex carries one letter, numbered like the vertex.

use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::engine::{NetworkError, NetworkSpec};
use crate::processor::{ProcessorError, ProcessorSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ZooError {
    #[error("edge {index} refers to a vertex outside the graph")]
    EdgeRange { index: usize },
    #[error("sink index is outside the graph")]
    SinkRange,
    #[error("this family needs a sink vertex")]
    MissingSink,
    #[error("vertex {vertex} has no directed path to the sink")]
    UnreachableSink { vertex: String },
    #[error("expected {expected} thresholds, got {got}")]
    ThresholdCount { expected: usize, got: usize },
    #[error("vertex {vertex} has threshold 0")]
    ZeroThreshold { vertex: String },
    #[error("vertex {vertex} has no rotor ordering")]
    MissingOrdering { vertex: String },
    #[error("rotor ordering at vertex {vertex} is not a permutation of its {degree} out-edges")]
    BadOrdering { vertex: String, degree: usize },
    #[error("vertex {vertex}: {source}")]
    Processor {
        vertex: String,
        #[source]
        source: ProcessorError,
    },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A directed multigraph with optional sink, thresholds and rotor orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigraphSpec {
    pub names: Vec<String>,
    /// Directed edges `(from, to)`; repeats are parallel edges.
    pub edges: Vec<(usize, usize)>,
    pub sink: Option<usize>,
    pub thresholds: Option<Vec<usize>>,
    /// For each vertex, a permutation of its out-edges, which are numbered
    /// `0..d_v` in edge-list order.
    pub rotor_orders: Option<Vec<Vec<usize>>>,
}

impl DigraphSpec {
    pub fn new(names: &[&str], edges: &[(usize, usize)]) -> Self {
        DigraphSpec {
            names: names.iter().map(|s| s.to_string()).collect(),
            edges: edges.to_vec(),
            sink: None,
            thresholds: None,
            rotor_orders: None,
        }
    }

    /// Each pair becomes two opposite edges.
    pub fn bidirected(names: &[&str], pairs: &[(usize, usize)]) -> Self {
        let edges: Vec<(usize, usize)> = pairs.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
        Self::new(names, &edges)
    }

    pub fn with_sink(mut self, sink: usize) -> Self {
        self.sink = Some(sink);
        self
    }

    pub fn with_thresholds(mut self, thresholds: &[usize]) -> Self {
        self.thresholds = Some(thresholds.to_vec());
        self
    }

    pub fn with_rotor_orders(mut self, orders: Vec<Vec<usize>>) -> Self {
        self.rotor_orders = Some(orders);
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    /// Targets of the out-edges of `v`, in edge-list order.
    pub fn out_targets(&self, v: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.0 == v).map(|e| e.1).collect()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v).count()
    }

    fn check(&self) -> Result<(), ZooError> {
        let n = self.vertex_count();
        if let Some(index) = self.edges.iter().position(|&(u, v)| u >= n || v >= n) {
            return Err(ZooError::EdgeRange { index });
        }
        if self.sink.is_some_and(|s| s >= n) {
            return Err(ZooError::SinkRange);
        }
        Ok(())
    }

    fn require_sink(&self) -> Result<usize, ZooError> {
        let s = self.sink.ok_or(ZooError::MissingSink)?;
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(v) = queue.pop_front() {
            for &(u, w) in &self.edges {
                if w == v && u != s && !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        match seen.iter().position(|&b| !b) {
            Some(v) => Err(ZooError::UnreachableSink { vertex: self.names[v].clone() }),
            None => Ok(s),
        }
    }

    fn processor_error(&self, v: usize) -> impl Fn(ProcessorError) -> ZooError + '_ {
        move |source| ZooError::Processor { vertex: self.names[v].clone(), source }
    }
}

fn emission(g: &DigraphSpec, v: usize) -> Vec<u64> {
    let mut out = vec![0; g.vertex_count()];
    for t in g.out_targets(v) {
        out[t] += 1;
    }
    out
}

/// Threshold-`r_v` toppling processors that send one letter along each
/// out-edge when they wrap around. A designated sink becomes a one-state
/// processor with no output and its threshold is ignored.
pub fn build_toppling(g: &DigraphSpec, thresholds: &[usize]) -> Result<NetworkSpec, ZooError> {
    g.check()?;
    let n = g.vertex_count();
    if thresholds.len() != n {
        return Err(ZooError::ThresholdCount { expected: n, got: thresholds.len() });
    }
    let mut vertices = Vec::with_capacity(n);
    for (v, &t) in thresholds.iter().enumerate() {
        let p = if g.sink == Some(v) {
            ProcessorSpec::sink(v, n)
        } else {
            if t == 0 {
                return Err(ZooError::ZeroThreshold { vertex: g.names[v].clone() });
            }
            ProcessorSpec::unary(v, n, t, &emission(g, v))
        };
        vertices.push(p.map_err(g.processor_error(v))?);
    }
    Ok(NetworkSpec::new(vertices, n)?)
}

/// `Sand(G, s)`: thresholds equal to out-degrees.
pub fn build_sandpile(g: &DigraphSpec) -> Result<NetworkSpec, ZooError> {
    g.check()?;
    g.require_sink()?;
    let degrees: Vec<usize> = (0..g.vertex_count()).map(|v| g.out_degree(v)).collect();
    build_toppling(g, &degrees)
}

/// `Rotor(G, s)`: from state `q` a letter moves the rotor to `q + 1 mod d_v`
/// and passes one letter along the `q`-th out-edge of the ordering.
/// Without explicit orderings the edge-list order is used.
pub fn build_rotor(g: &DigraphSpec) -> Result<NetworkSpec, ZooError> {
    g.check()?;
    let s = g.require_sink()?;
    let n = g.vertex_count();
    if let Some(orders) = &g.rotor_orders {
        if orders.len() != n {
            let v = orders.len().min(n - 1);
            return Err(ZooError::MissingOrdering { vertex: g.names[v].clone() });
        }
    }
    let mut vertices = Vec::with_capacity(n);
    for v in 0..n {
        if v == s {
            vertices.push(ProcessorSpec::sink(v, n).map_err(g.processor_error(v))?);
            continue;
        }
        let targets = g.out_targets(v);
        let d = targets.len();
        let order: Vec<usize> = match &g.rotor_orders {
            Some(orders) => orders[v].clone(),
            None => (0..d).collect(),
        };
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..d).collect::<Vec<_>>() {
            return Err(ZooError::BadOrdering { vertex: g.names[v].clone(), degree: d });
        }
        let transition = vec![(0..d).map(|q| (q + 1) % d).collect()];
        let output = vec![(0..d)
            .map(|q| {
                let mut out = vec![0u64; n];
                out[targets[order[q]]] = 1;
                out
            })
            .collect()];
        vertices.push(ProcessorSpec::new(d, vec![v], n, transition, output).map_err(g.processor_error(v))?);
    }
    Ok(NetworkSpec::new(vertices, n)?)
}

/// Two vertices: `i` with letters `a, b` and two states, and a sink `j`
/// with letter `c`. Both letters flip the state of `i`; `a` sends one `c`
/// from state 0 and two from state 1, `b` sends one `c` from state 1 only.
pub fn paper_example() -> NetworkSpec {
    let flip = vec![1, 0];
    let out = |k: u64| vec![0, 0, k];
    let i = ProcessorSpec::new(
        2,
        vec![0, 1],
        3,
        vec![flip.clone(), flip],
        vec![vec![out(1), out(2)], vec![out(0), out(1)]],
    )
    .expect("valid processor");
    let j = ProcessorSpec::sink(2, 3).expect("valid processor");
    NetworkSpec::new(vec![i, j], 3).expect("valid network")
}

pub const PAPER_LETTERS: [&str; 3] = ["a", "b", "c"];

/// Vertex `u` has a transient state: `0 -> 1 -> 2 -> 1`, sending a `w` on
/// leaving state 1 and an `s` on leaving state 2. `w` topples at 2 into
/// `u` and `s`.
pub fn transient_example() -> NetworkSpec {
    let u = ProcessorSpec::new(
        3,
        vec![0],
        3,
        vec![vec![1, 2, 1]],
        vec![vec![vec![0, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]],
    )
    .expect("valid processor");
    let w = ProcessorSpec::unary(1, 3, 2, &[1, 0, 1]).expect("valid processor");
    let s = ProcessorSpec::sink(2, 3).expect("valid processor");
    NetworkSpec::new(vec![u, w, s], 3).expect("valid network")
}

/// The two-letter processor of [`paper_example`] feeding a toppling vertex
/// `k` (threshold 2) that sends one letter back to `a` and one to the sink.
pub fn looped_example() -> NetworkSpec {
    let flip = vec![1, 0];
    let out = |k: u64| vec![0, 0, k, 0];
    let i = ProcessorSpec::new(
        2,
        vec![0, 1],
        4,
        vec![flip.clone(), flip],
        vec![vec![out(1), out(2)], vec![out(0), out(1)]],
    )
    .expect("valid processor");
    let k = ProcessorSpec::unary(2, 4, 2, &[1, 0, 0, 1]).expect("valid processor");
    let s = ProcessorSpec::sink(3, 4).expect("valid processor");
    NetworkSpec::new(vec![i, k, s], 4).expect("valid network")
}

/// `v0 <-> v1`, both pointing at the sink `s`.
pub fn triangle() -> DigraphSpec {
    DigraphSpec::new(&["v0", "v1", "s"], &[(0, 1), (0, 2), (1, 0), (1, 2)]).with_sink(2)
}

pub fn path() -> DigraphSpec {
    DigraphSpec::new(&["a", "b", "s"], &[(0, 1), (1, 2)]).with_sink(2)
}

pub fn complete4() -> DigraphSpec {
    DigraphSpec::bidirected(&["v0", "v1", "v2", "s"], &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).with_sink(3)
}

pub fn cycle4() -> DigraphSpec {
    DigraphSpec::bidirected(&["v0", "v1", "v2", "s"], &[(0, 1), (1, 2), (2, 3), (3, 0)]).with_sink(3)
}

/// A directed graph with a double edge and unequal in- and out-degrees.
pub fn lopsided() -> DigraphSpec {
    DigraphSpec::new(
        &["v0", "v1", "v2", "s"],
        &[(0, 1), (0, 1), (0, 2), (1, 2), (1, 0), (2, 3), (2, 0)],
    )
    .with_sink(3)
}

/// A 5-cycle with one chord, sink `s`.
pub fn pentagon() -> DigraphSpec {
    DigraphSpec::bidirected(&["v0", "v1", "v2", "v3", "s"], &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).with_sink(4)
}

/// [`pentagon`] with every rotor ordering reversed.
pub fn pentagon_reversed() -> DigraphSpec {
    let g = pentagon();
    let orders = (0..g.vertex_count())
        .map(|v| (0..g.out_degree(v)).rev().collect())
        .collect();
    g.with_rotor_orders(orders)
}

/// Hub `v0` joined to a 4-cycle `v1..v4`, with `v0, v1, v3` also joined to the sink.
pub fn wheel() -> DigraphSpec {
    DigraphSpec::bidirected(
        &["v0", "v1", "v2", "v3", "v4", "s"],
        &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (2, 3), (3, 4), (4, 1), (0, 5), (1, 5), (3, 5)],
    )
    .with_sink(5)
}

/// Sinkless 2-cycle; halts with thresholds (2, 2), not with (1, 1).
pub fn two_cycle(r0: usize, r1: usize) -> Result<NetworkSpec, ZooError> {
    build_toppling(&DigraphSpec::new(&["u", "v"], &[(0, 1), (1, 0)]), &[r0, r1])
}

/// Toppling network with a sink and thresholds away from the degrees.
pub fn off_degree_toppling() -> Result<NetworkSpec, ZooError> {
    let g = DigraphSpec::new(&["v0", "v1", "v2", "s"], &[(0, 1), (0, 3), (1, 0), (1, 2), (1, 3), (2, 0)]).with_sink(3);
    build_toppling(&g, &[3, 2, 2, 1])
}

/// Graphs on which sandpile and rotor networks are compared.
pub fn homotopy_graphs() -> Vec<(&'static str, DigraphSpec)> {
    vec![
        ("triangle", triangle()),
        ("path", path()),
        ("complete4", complete4()),
        ("cycle4", cycle4()),
        ("lopsided", lopsided()),
        ("pentagon", pentagon()),
        ("wheel", wheel()),
    ]
}

/// Halting networks of at most six vertices used across the test suites.
pub fn battery() -> Vec<(&'static str, NetworkSpec)> {
    let build = |r: Result<NetworkSpec, ZooError>| r.expect("battery network builds");
    vec![
        ("paper", paper_example()),
        ("triangle-sandpile", build(build_sandpile(&triangle()))),
        ("triangle-rotor", build(build_rotor(&triangle()))),
        ("path-sandpile", build(build_sandpile(&path()))),
        ("complete4-sandpile", build(build_sandpile(&complete4()))),
        ("complete4-rotor", build(build_rotor(&complete4()))),
        ("cycle4-sandpile", build(build_sandpile(&cycle4()))),
        ("cycle4-rotor", build(build_rotor(&cycle4()))),
        ("lopsided-sandpile", build(build_sandpile(&lopsided()))),
        ("lopsided-rotor", build(build_rotor(&lopsided()))),
        ("two-cycle-2-2", build(two_cycle(2, 2))),
        ("off-degree-toppling", build(off_degree_toppling())),
        ("pentagon-sandpile", build(build_sandpile(&pentagon()))),
        ("pentagon-rotor-reversed", build(build_rotor(&pentagon_reversed()))),
        ("wheel-sandpile", build(build_sandpile(&wheel()))),
        ("wheel-rotor", build(build_rotor(&wheel()))),
        ("transient", transient_example()),
        ("looped", looped_example()),
    ]
}
