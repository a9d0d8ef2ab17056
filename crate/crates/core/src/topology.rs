//! Coupling graphs and the snake-path data that drives routing.
//!
//! A [`TopologySpec`] names a `chain` of physical qubits along which the
//! moving target is swapped, plus a set of stationary qubits that stay put
//! and are serviced while the target sits on an adjacent chain node.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: self-loop on qubit {node}")]
    SelfLoop { line: usize, node: usize },
    #[error("edge ({a},{b}) listed twice")]
    DuplicateEdge { a: usize, b: usize },
    #[error("qubit {node} out of range for {n} qubits")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("coupling graph is disconnected ({reached} of {n} qubits reachable from 0)")]
    Disconnected { reached: usize, n: usize },
    #[error("unknown device '{0}'")]
    UnknownDevice(String),
    #[error("no valid topology spec from start {start}")]
    NoValidSpec { start: usize },
    #[error("invalid topology spec: {0}")]
    InvalidSpec(String),
}

/// Undirected, simple, connected coupling graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl CouplingGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, TopologyError> {
        let mut set = BTreeSet::new();
        for (line, (a, b)) in edges.into_iter().enumerate() {
            Self::insert_edge(&mut set, n, a, b, line + 1)?;
        }
        Self::from_set(n, set)
    }

    fn insert_edge(
        set: &mut BTreeSet<(usize, usize)>,
        n: usize,
        a: usize,
        b: usize,
        line: usize,
    ) -> Result<(), TopologyError> {
        if a == b {
            return Err(TopologyError::SelfLoop { line, node: a });
        }
        for node in [a, b] {
            if node >= n {
                return Err(TopologyError::NodeOutOfRange { node, n });
            }
        }
        if !set.insert((a.min(b), a.max(b))) {
            return Err(TopologyError::DuplicateEdge { a, b });
        }
        Ok(())
    }

    fn from_set(n: usize, edges: BTreeSet<(usize, usize)>) -> Result<Self, TopologyError> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let g = CouplingGraph { n, edges, adjacency };
        if n > 0 {
            let reached = g.distances(0).iter().filter(|d| d.is_some()).count();
            if reached != n {
                return Err(TopologyError::Disconnected { reached, n });
            }
        }
        Ok(g)
    }

    /// Path graph on `k` qubits.
    pub fn line(k: usize) -> Self {
        Self::new(k, (1..k).map(|i| (i - 1, i))).expect("path graph is valid")
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Edges as `(min, max)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// BFS hop counts from `src`.
    pub fn distances(&self, src: usize) -> Vec<Option<usize>> {
        self.distances_within(src, |_| true)
    }

    /// BFS hop counts from `src`, only passing through nodes accepted by `allowed`.
    pub fn distances_within(&self, src: usize, allowed: impl Fn(usize) -> bool) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() && allowed(v) {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// A shortest path `src ..= dst` restricted to `allowed` intermediate
    /// nodes, preferring lower-indexed neighbours on ties.
    pub fn shortest_path_within(&self, src: usize, dst: usize, allowed: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        let dist = self.distances_within(dst, |v| v == src || allowed(v));
        dist[src]?;
        let mut path = vec![src];
        let mut cur = src;
        while cur != dst {
            let d = dist[cur].unwrap();
            cur = *self.adjacency[cur]
                .iter()
                .find(|&&v| dist[v] == Some(d - 1))
                .expect("BFS predecessor");
            path.push(cur);
        }
        Some(path)
    }

    pub fn shortest_path(&self, src: usize, dst: usize) -> Option<Vec<usize>> {
        self.shortest_path_within(src, dst, |_| true)
    }

    /// Serializes in the edge-list text format accepted by [`load_custom`].
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for (a, b) in self.edges() {
            s.push_str(&format!("{a} {b}\n"));
        }
        s
    }
}

/// Parses an edge list: first line `n`, then one `u v` pair per line.
/// `#` starts a comment; blank lines are ignored.
pub fn load_custom(text: &str) -> Result<CouplingGraph, TopologyError> {
    let mut n = None;
    let mut set = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| TopologyError::Parse {
                line,
                msg: format!("expected a non-negative integer, found '{s}'"),
            })
        };
        match n {
            None => {
                if fields.len() != 1 {
                    return Err(TopologyError::Parse {
                        line,
                        msg: "expected the qubit count on its own line".into(),
                    });
                }
                n = Some(parse(fields[0])?);
            }
            Some(count) => {
                if fields.len() != 2 {
                    return Err(TopologyError::Parse {
                        line,
                        msg: format!("expected 'u v', found {} fields", fields.len()),
                    });
                }
                let (a, b) = (parse(fields[0])?, parse(fields[1])?);
                CouplingGraph::insert_edge(&mut set, count, a, b, line)?;
            }
        }
    }
    let n = n.ok_or(TopologyError::Parse {
        line: 0,
        msg: "empty edge list".into(),
    })?;
    CouplingGraph::from_set(n, set)
}

/// An off-chain qubit serviced while the target sits at `service_node`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stationary {
    pub qubit: usize,
    pub service_node: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopologySpec {
    pub graph: CouplingGraph,
    pub start: usize,
    pub chain: Vec<usize>,
    pub stationary: Vec<Stationary>,
}

impl TopologySpec {
    pub fn new(
        graph: CouplingGraph,
        chain: Vec<usize>,
        stationary: Vec<(usize, usize)>,
    ) -> Result<Self, TopologyError> {
        let spec = TopologySpec {
            start: chain.first().copied().unwrap_or(0),
            graph,
            chain,
            stationary: stationary
                .into_iter()
                .map(|(qubit, service_node)| Stationary { qubit, service_node })
                .collect(),
        };
        let problems = spec.validate();
        if problems.is_empty() {
            Ok(spec)
        } else {
            Err(TopologyError::InvalidSpec(problems.join("; ")))
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.graph.num_qubits()
    }

    /// Every violated invariant, as human-readable diagnostics.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.graph.num_qubits();
        if self.chain.first() != Some(&self.start) {
            out.push(format!("start {} is not the first chain node", self.start));
        }
        for w in self.chain.windows(2) {
            if !self.graph.has_edge(w[0], w[1]) {
                out.push(format!("chain step {}-{} is not an edge", w[0], w[1]));
            }
        }
        for s in &self.stationary {
            if !self.chain.contains(&s.service_node) {
                out.push(format!(
                    "stationary {} serviced at {}, which is not on the chain",
                    s.qubit, s.service_node
                ));
            } else if !self.graph.has_edge(s.qubit, s.service_node) {
                out.push(format!(
                    "stationary {} is not adjacent to its service node {}",
                    s.qubit, s.service_node
                ));
            }
        }
        let mut seen = vec![0usize; n];
        for v in self.chain.iter().chain(self.stationary.iter().map(|s| &s.qubit)) {
            if *v >= n {
                out.push(format!("qubit {v} out of range"));
            } else {
                seen[*v] += 1;
            }
        }
        for (v, &count) in seen.iter().enumerate() {
            match count {
                1 => {}
                0 => out.push(format!("qubit {v} is neither on the chain nor stationary")),
                _ => out.push(format!("qubit {v} appears {count} times")),
            }
        }
        out
    }

    /// Stationary qubits serviced at `node`, in declaration order.
    pub fn stationaries_at(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.stationary
            .iter()
            .filter(move |s| s.service_node == node)
            .map(|s| s.qubit)
    }

    /// Physical positions in the order a forward pass meets them: the start,
    /// its stationaries, then each later chain node followed by its own.
    pub fn service_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.num_qubits());
        for &node in &self.chain {
            order.push(node);
            order.extend(self.stationaries_at(node));
        }
        order
    }
}

pub const GUADALUPE16_EDGES: [(usize, usize); 16] = [
    (0, 1),
    (1, 2),
    (1, 4),
    (2, 3),
    (3, 5),
    (4, 7),
    (5, 8),
    (6, 7),
    (7, 10),
    (8, 9),
    (8, 11),
    (10, 12),
    (11, 14),
    (12, 13),
    (12, 15),
    (13, 14),
];

pub const FALCON27_EDGES: [(usize, usize); 28] = [
    (0, 1),
    (1, 2),
    (1, 4),
    (2, 3),
    (3, 5),
    (4, 7),
    (5, 8),
    (6, 7),
    (7, 10),
    (8, 9),
    (8, 11),
    (10, 12),
    (11, 14),
    (12, 13),
    (12, 15),
    (13, 14),
    (14, 16),
    (15, 18),
    (16, 19),
    (17, 18),
    (18, 21),
    (19, 20),
    (19, 22),
    (21, 23),
    (22, 25),
    (23, 24),
    (24, 25),
    (25, 26),
];

const GUADALUPE16_CHAIN: [usize; 10] = [1, 4, 7, 10, 12, 13, 14, 11, 8, 5];
const GUADALUPE16_STATIONARY: [(usize, usize); 6] = [(0, 1), (2, 1), (6, 7), (15, 12), (9, 8), (3, 5)];

const FALCON27_CHAIN: [usize; 18] = [1, 4, 7, 10, 12, 15, 18, 21, 23, 24, 25, 22, 19, 16, 14, 11, 8, 5];
const FALCON27_STATIONARY: [(usize, usize); 9] = [
    (0, 1),
    (2, 1),
    (6, 7),
    (13, 12),
    (17, 18),
    (26, 25),
    (20, 19),
    (9, 8),
    (3, 5),
];

/// Built-in devices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Device {
    /// 16-qubit Falcon r4p layout.
    Guadalupe16,
    /// 27-qubit Falcon 5.11 layout.
    Falcon27,
    /// Linear nearest neighbour on `k` qubits.
    Lnn(usize),
}

impl Device {
    pub fn spec(self) -> TopologySpec {
        match self {
            Device::Guadalupe16 => TopologySpec::new(
                CouplingGraph::new(16, GUADALUPE16_EDGES).expect("fixture graph"),
                GUADALUPE16_CHAIN.to_vec(),
                GUADALUPE16_STATIONARY.to_vec(),
            )
            .expect("fixture spec"),
            Device::Falcon27 => TopologySpec::new(
                CouplingGraph::new(27, FALCON27_EDGES).expect("fixture graph"),
                FALCON27_CHAIN.to_vec(),
                FALCON27_STATIONARY.to_vec(),
            )
            .expect("fixture spec"),
            Device::Lnn(k) => {
                TopologySpec::new(CouplingGraph::line(k), (0..k).collect(), Vec::new()).expect("path spec")
            }
        }
    }

    pub fn num_qubits(self) -> usize {
        match self {
            Device::Guadalupe16 => 16,
            Device::Falcon27 => 27,
            Device::Lnn(k) => k,
        }
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Device::Guadalupe16 => f.write_str("guadalupe16"),
            Device::Falcon27 => f.write_str("falcon27"),
            Device::Lnn(k) => write!(f, "lnn{k}"),
        }
    }
}

impl FromStr for Device {
    type Err = TopologyError;

    /// Accepts `guadalupe16`, `falcon27`, `lnnK` and `lnn(K)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "guadalupe16" => return Ok(Device::Guadalupe16),
            "falcon27" => return Ok(Device::Falcon27),
            _ => {}
        }
        let unknown = || TopologyError::UnknownDevice(s.to_string());
        let k = lower
            .strip_prefix("lnn")
            .map(|rest| rest.trim_start_matches('(').trim_end_matches(')'))
            .ok_or_else(unknown)?
            .parse::<usize>()
            .map_err(|_| unknown())?;
        if k < 2 {
            return Err(unknown());
        }
        Ok(Device::Lnn(k))
    }
}

/// Looks up a built-in spec by name.
pub fn builtin(name: &str) -> Result<TopologySpec, TopologyError> {
    name.parse::<Device>().map(Device::spec)
}

pub const DEFAULT_CHAIN_BUDGET: usize = 1_000_000;

/// Searches for a chain from `start` such that every other qubit is on the
/// chain or adjacent to it, keeping the longest such chain found within
/// `budget` DFS expansions.
pub fn derive_chain(g: &CouplingGraph, start: usize, budget: usize) -> Result<TopologySpec, TopologyError> {
    let n = g.num_qubits();
    if start >= n {
        return Err(TopologyError::NodeOutOfRange { node: start, n });
    }
    let mut search = ChainSearch {
        g,
        on_path: vec![false; n],
        cover: vec![0; n],
        covered: 0,
        path: Vec::with_capacity(n),
        best: None,
        expansions: 0,
        budget,
    };
    search.enter(start);
    search.dfs();

    let chain = search.best.ok_or(TopologyError::NoValidSpec { start })?;
    let mut on_chain = vec![false; n];
    for &v in &chain {
        on_chain[v] = true;
    }
    let mut stationary = Vec::new();
    for &node in &chain {
        for &v in g.neighbors(node) {
            if !on_chain[v] && !stationary.iter().any(|&(q, _)| q == v) {
                stationary.push((v, node));
            }
        }
    }
    TopologySpec::new(g.clone(), chain, stationary)
}

struct ChainSearch<'a> {
    g: &'a CouplingGraph,
    on_path: Vec<bool>,
    cover: Vec<u32>,
    covered: usize,
    path: Vec<usize>,
    best: Option<Vec<usize>>,
    expansions: usize,
    budget: usize,
}

impl ChainSearch<'_> {
    fn bump(&mut self, v: usize, up: bool) {
        if up {
            if self.cover[v] == 0 {
                self.covered += 1;
            }
            self.cover[v] += 1;
        } else {
            self.cover[v] -= 1;
            if self.cover[v] == 0 {
                self.covered -= 1;
            }
        }
    }

    fn enter(&mut self, v: usize) {
        self.on_path[v] = true;
        self.path.push(v);
        self.bump(v, true);
        for i in 0..self.g.neighbors(v).len() {
            let u = self.g.neighbors(v)[i];
            self.bump(u, true);
        }
    }

    fn leave(&mut self, v: usize) {
        self.on_path[v] = false;
        self.path.pop();
        self.bump(v, false);
        for i in 0..self.g.neighbors(v).len() {
            let u = self.g.neighbors(v)[i];
            self.bump(u, false);
        }
    }

    /// Returns `true` once the search should stop.
    fn dfs(&mut self) -> bool {
        let n = self.g.num_qubits();
        if self.covered == n && self.best.as_ref().is_none_or(|b| self.path.len() > b.len()) {
            self.best = Some(self.path.clone());
            if self.path.len() == n {
                return true;
            }
        }
        self.expansions += 1;
        if self.expansions >= self.budget {
            return true;
        }
        let tail = *self.path.last().unwrap();
        // fewest onward options first
        let mut next: Vec<(usize, usize)> = self
            .g
            .neighbors(tail)
            .iter()
            .filter(|&&v| !self.on_path[v])
            .map(|&v| {
                let onward = self.g.neighbors(v).iter().filter(|&&u| !self.on_path[u]).count();
                (onward, v)
            })
            .collect();
        next.sort_unstable();
        for (_, v) in next {
            self.enter(v);
            let stop = self.dfs();
            self.leave(v);
            if stop {
                return true;
            }
        }
        false
    }
}
