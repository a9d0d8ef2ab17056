//! Quantum Fourier transform on coupling graphs driven by repositioning
//! schedules.
//!
//! A schedule row `t` gives the placement of logical qubits at the start of
//! cascade `t` (the Hadamard on qubit `t` plus every controlled phase that
//! targets it). Between rows only the cascade target moves: it walks a simple
//! path, swapping with each qubit it passes, and every passed qubit shifts
//! one step back along the path. The executor services each control either
//! in place (2 CX) when the target neighbours it, or fused with the swap that
//! moves the target onto it (3 CX).

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::angle::Angle;
use crate::circuit::{Circuit, Gate, Layout, Space};
use crate::report::CostReport;
use crate::rewrite::decompose_fused_tagged;
use crate::sim::{self, SimError};
use crate::topology::{self, Device, TopologyError, TopologySpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QftError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid schedule: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("cascade {cascade}: control q{control} is never adjacent to the target", cascade = .cascade + 1, control = .control + 1)]
    Unserviced { cascade: usize, control: usize },
    #[error("{n} qubits do not fit on a {device}-qubit device")]
    TooManyQubits { n: usize, device: usize },
    #[error("cascade {cascade}: no unvisited route to the remaining controls", cascade = .cascade + 1)]
    GreedyStuck { cascade: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// `H(j)` then `CP(j+m, j, π/2^m)` for each `j`, without the final
/// bit-reversal swaps.
pub fn reference_qft(n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for j in 0..n {
        c.push(Gate::H(j));
        for m in 1..n - j {
            c.push(Gate::CP(j + m, j, cp_angle(m)));
        }
    }
    c
}

/// Phase between logical qubits at distance `m`.
pub fn cp_angle(m: usize) -> Angle {
    Angle::pi_over_pow2(m as u32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    /// The schedule cannot be executed.
    Error,
    /// The schedule executes, but its annotations disagree with its content.
    Note,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// 1-based row as printed in the fixture.
    pub row: usize,
    pub position: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Note => "note",
        };
        match self.position {
            Some(p) => write!(f, "{sev}: row {} position {}: {}", self.row, p, self.message),
            None => write!(f, "{sev}: row {}: {}", self.row, self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QftSchedule {
    pub n: usize,
    pub device: String,
    pub spec: TopologySpec,
    /// `rows[t][position]` is the logical qubit there at the start of cascade `t`.
    pub rows: Vec<Vec<Option<usize>>>,
    /// Cells annotated as moved during the previous cascade.
    pub marks: Vec<Vec<bool>>,
}

impl QftSchedule {
    pub fn num_positions(&self) -> usize {
        self.spec.num_qubits()
    }

    /// Logical → physical placement at the start of cascade `t`.
    pub fn positions(&self, t: usize) -> Vec<usize> {
        row_positions(&self.rows[t], self.n)
    }

    pub fn initial_layout(&self) -> Layout {
        Layout::from_vec(self.positions(0))
    }

    /// Every inconsistency between rows, graph and annotations.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let npos = self.num_positions();
        if self.n > npos {
            out.push(Diagnostic {
                severity: Severity::Error,
                row: 0,
                position: None,
                message: format!("{} qubits on {} positions", self.n, npos),
            });
            return out;
        }
        if self.rows.is_empty() {
            out.push(Diagnostic {
                severity: Severity::Error,
                row: 0,
                position: None,
                message: "no rows".into(),
            });
            return out;
        }
        let mut ok_rows = vec![true; self.rows.len()];
        for (r, row) in self.rows.iter().enumerate() {
            let mut err = |position, message: String| {
                ok_rows[r] = false;
                out.push(Diagnostic {
                    severity: Severity::Error,
                    row: r + 1,
                    position,
                    message,
                });
            };
            if row.len() != npos {
                err(None, format!("{} cells for {} positions", row.len(), npos));
                continue;
            }
            let mut seen = vec![false; self.n];
            for (p, cell) in row.iter().enumerate() {
                if let Some(q) = *cell {
                    if q >= self.n {
                        err(Some(p), format!("label q{} exceeds n = {}", q + 1, self.n));
                    } else if seen[q] {
                        err(Some(p), format!("q{} appears twice", q + 1));
                    } else {
                        seen[q] = true;
                    }
                }
            }
            for (q, s) in seen.iter().enumerate() {
                if !s {
                    err(None, format!("q{} missing", q + 1));
                }
            }
        }
        for t in 0..self.rows.len().saturating_sub(1) {
            if !(ok_rows[t] && ok_rows[t + 1]) {
                continue;
            }
            match target_path(&self.spec, &self.rows[t], &self.rows[t + 1], t) {
                Ok(_) => {
                    for p in 0..npos {
                        let moved = self.rows[t][p] != self.rows[t + 1][p];
                        let marked = self.marks.get(t + 1).and_then(|m| m.get(p)).copied().unwrap_or(false);
                        if moved != marked {
                            let message = if marked {
                                format!(
                                    "q{} marked as moved but unchanged",
                                    self.rows[t + 1][p].map_or(0, |q| q + 1)
                                )
                            } else {
                                format!("q{} moved but not marked", self.rows[t + 1][p].map_or(0, |q| q + 1))
                            };
                            out.push(Diagnostic {
                                severity: Severity::Note,
                                row: t + 2,
                                position: Some(p),
                                message,
                            });
                        }
                    }
                }
                Err((position, message)) => out.push(Diagnostic {
                    severity: Severity::Error,
                    row: t + 2,
                    position,
                    message,
                }),
            }
        }
        out
    }

    pub fn errors(&self) -> Vec<Diagnostic> {
        self.validate()
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect()
    }
}

fn row_positions(row: &[Option<usize>], n: usize) -> Vec<usize> {
    let mut pos = vec![usize::MAX; n];
    for (p, cell) in row.iter().enumerate() {
        if let Some(q) = *cell {
            pos[q] = p;
        }
    }
    pos
}

/// Recovers the walk of cascade `t`'s target between two rows: the qubit now
/// sitting where the target was came from the target's next stop.
fn target_path(
    spec: &TopologySpec,
    cur: &[Option<usize>],
    next: &[Option<usize>],
    t: usize,
) -> Result<Vec<usize>, (Option<usize>, String)> {
    let n = cur.iter().flatten().count();
    let pos = row_positions(cur, n.max(t + 1));
    let npos = row_positions(next, n.max(t + 1));
    let (start, end) = (pos[t], npos[t]);
    let mut path = vec![start];
    let mut p = start;
    while p != end {
        let Some(q) = next[p] else {
            return Err((Some(p), "target leaves an empty position behind".into()));
        };
        let step = pos[q];
        if !spec.graph.has_edge(p, step) {
            return Err((
                Some(p),
                format!("q{} arrives from position {step}, which is not adjacent", q + 1),
            ));
        }
        if path.contains(&step) {
            return Err((Some(step), "target path revisits a position".into()));
        }
        path.push(step);
        p = step;
        if path.len() > cur.len() {
            return Err((None, "target path does not terminate".into()));
        }
    }
    let mut sim = cur.to_vec();
    for w in path.windows(2) {
        sim.swap(w[0], w[1]);
    }
    if let Some(p) = (0..cur.len()).find(|&p| sim[p] != next[p]) {
        return Err((
            Some(p),
            "row differs from the previous one by more than the target's swap path".into(),
        ));
    }
    Ok(path)
}

/// Parses the schedule text format against a given device spec.
pub fn parse_schedule_with(text: &str, spec: Option<TopologySpec>) -> Result<QftSchedule, QftError> {
    let mut header: Option<(usize, String)> = None;
    let mut rows = Vec::new();
    let mut marks = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let perr = |msg: String| QftError::Parse { line, msg };
        if header.is_none() {
            let mut n = None;
            let mut device = None;
            for field in content.split_whitespace() {
                match field.split_once('=') {
                    Some(("n", v)) => n = Some(v.parse::<usize>().map_err(|_| perr(format!("bad n '{v}'")))?),
                    Some(("device", v)) => device = Some(v.to_string()),
                    _ => return Err(perr(format!("unexpected header field '{field}'"))),
                }
            }
            match (n, device) {
                (Some(n), Some(d)) => header = Some((n, d)),
                _ => return Err(perr("header needs n=<count> device=<name>".into())),
            }
            continue;
        }
        let mut row = Vec::new();
        let mut mark = Vec::new();
        for cell in content.split(',') {
            let cell = cell.trim();
            let (label, starred) = match cell.strip_suffix('*') {
                Some(rest) => (rest.trim(), true),
                None => (cell, false),
            };
            mark.push(starred);
            if label == "." {
                row.push(None);
                continue;
            }
            let q: usize = label.parse().map_err(|_| perr(format!("bad label '{cell}'")))?;
            if q == 0 {
                return Err(perr("labels are 1-based".into()));
            }
            row.push(Some(q - 1));
        }
        rows.push(row);
        marks.push(mark);
    }
    let (n, device) = header.ok_or(QftError::Parse {
        line: 0,
        msg: "missing header".into(),
    })?;
    let spec = match spec {
        Some(s) => s,
        None => topology::builtin(&device)?,
    };
    Ok(QftSchedule {
        n,
        device,
        spec,
        rows,
        marks,
    })
}

/// Parses a schedule whose header names a built-in device.
pub fn parse_schedule(text: &str) -> Result<QftSchedule, QftError> {
    parse_schedule_with(text, None)
}

/// Inverse of [`parse_schedule`], annotations included.
pub fn format_schedule(s: &QftSchedule) -> String {
    let mut out = format!("n={} device={}\n", s.n, s.device);
    for (r, row) in s.rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(p, cell)| {
                let label = cell.map_or(".".to_string(), |q| (q + 1).to_string());
                let star = s.marks.get(r).and_then(|m| m.get(p)).copied().unwrap_or(false);
                if star {
                    format!("{label}*")
                } else {
                    label
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub const GUADALUPE16_SCHEDULE: &str = include_str!("../fixtures/guadalupe16.sched");
pub const FALCON27_SCHEDULE: &str = include_str!("../fixtures/falcon27.sched");

/// The transcribed repositioning tables for the two heavy-hex devices.
pub fn builtin_schedule(device: Device) -> Option<QftSchedule> {
    let text = match device {
        Device::Guadalupe16 => GUADALUPE16_SCHEDULE,
        Device::Falcon27 => FALCON27_SCHEDULE,
        Device::Lnn(_) => return None,
    };
    Some(parse_schedule(text).expect("fixture parses"))
}

/// Validator output for a schedule, one `<device> <diagnostic>` per line.
pub fn diagnostics_report(s: &QftSchedule) -> String {
    s.validate().iter().map(|d| format!("{} {d}\n", s.device)).collect()
}

/// Shipped diagnostics for the built-in schedules.
pub const FIXTURE_DIAGNOSTICS: &str = include_str!("../fixtures/qft_diagnostics.txt");

#[derive(Clone, Debug)]
pub struct QftExecution {
    /// Hardware-basis circuit on physical wires.
    pub circuit: Circuit,
    /// `H`, `CP` and `SWAP` on physical wires, before decomposition.
    pub routed: Circuit,
    pub report: CostReport,
    pub initial: Layout,
    /// Logical → physical placement after the last cascade.
    pub layout: Layout,
    /// Placement at the start of each cascade.
    pub trace: Vec<Layout>,
}

/// Runs every cascade of a validated schedule.
pub fn execute_schedule(s: &QftSchedule) -> Result<QftExecution, QftError> {
    let errors = s.errors();
    if !errors.is_empty() {
        return Err(QftError::Invalid(errors));
    }
    let g = &s.spec.graph;
    let npos = s.num_positions();
    let mut at = s.rows[0].clone();
    let mut tagged: Vec<(Gate, usize)> = Vec::new();
    let mut trace = Vec::with_capacity(s.n);
    for t in 0..s.n {
        let pos = row_positions(&at, s.n);
        trace.push(Layout::from_vec(pos.clone()));
        let path = match s.rows.get(t + 1) {
            Some(next) => target_path(&s.spec, &at, next, t).map_err(|(position, message)| {
                QftError::Invalid(vec![Diagnostic {
                    severity: Severity::Error,
                    row: t + 2,
                    position,
                    message,
                }])
            })?,
            None => vec![pos[t]],
        };
        tagged.push((Gate::H(pos[t]), t));
        let mut serviced = vec![false; s.n];
        let is_control = |q: Option<usize>, serviced: &[bool]| q.filter(|&q| q > t && !serviced[q]);
        for (i, &p) in path.iter().enumerate() {
            let rest = &path[i + 1..];
            for &nb in g.neighbors(p) {
                if let Some(q) = is_control(at[nb], &serviced) {
                    if !rest.contains(&nb) {
                        tagged.push((Gate::CP(nb, p, cp_angle(q - t)), t));
                        serviced[q] = true;
                    }
                }
            }
            if let Some(&next) = rest.first() {
                if let Some(q) = is_control(at[next], &serviced) {
                    tagged.push((Gate::CP(next, p, cp_angle(q - t)), t));
                    serviced[q] = true;
                }
                tagged.push((Gate::Swap(p, next), t));
                at.swap(p, next);
            }
        }
        if let Some(control) = (t + 1..s.n).find(|&q| !serviced[q]) {
            return Err(QftError::Unserviced { cascade: t, control });
        }
    }

    let hardware = decompose_fused_tagged(&tagged);
    let mut per = vec![0usize; s.n];
    for (g, t) in &hardware {
        if matches!(g, Gate::CX(..)) {
            per[*t] += 1;
        }
    }
    let report = CostReport::from_breakdown(
        per.into_iter()
            .enumerate()
            .map(|(t, c)| (format!("cascade {}", t + 1), c))
            .collect(),
    );
    let layout = Layout::from_vec(row_positions(&at, s.n));
    Ok(QftExecution {
        circuit: Circuit::from_gates(npos, hardware.into_iter().map(|(g, _)| g).collect())
            .set_space(Space::Physical)
            .set_layout(layout.clone()),
        routed: Circuit::from_gates(npos, tagged.into_iter().map(|(g, _)| g).collect()).set_layout(layout.clone()),
        report,
        initial: s.initial_layout(),
        layout,
        trace,
    })
}

/// Upper envelope for greedy schedules: `3·n(n-1)/2 + 3·(n-1)`.
pub fn greedy_bound(n: usize) -> usize {
    3 * n * n.saturating_sub(1) / 2 + 3 * n.saturating_sub(1)
}

/// Walks kept per cascade when planning a greedy schedule.
const WALK_CANDIDATES: usize = 8;
/// CX a candidate walk may cost above the cheapest one.
const WALK_SLACK: usize = 6;
/// Path expansions allowed across one whole greedy search.
const SEARCH_BUDGET: usize = 2_000_000;

/// Builds a schedule for `n` qubits on the first `n` positions of the
/// spec's service order. Each cascade's target takes a cheap simple walk
/// through occupied positions that leaves every remaining control on or
/// next to it, with ties going to walks that end far from the start so
/// finished targets retire out of the way. Distance is measured along the
/// service order. If a later cascade cannot be
/// covered, or the running cost would break [`greedy_bound`], earlier walks
/// are revisited. A few label placements are tried and the cheapest
/// schedule wins; slower walk rankings are only tried when the sweep fails.
pub fn greedy_schedule(n: usize, spec: &TopologySpec) -> Result<QftSchedule, QftError> {
    let npos = spec.num_qubits();
    if n > npos {
        return Err(QftError::TooManyQubits { n, device: npos });
    }
    let mut best: Option<(usize, Vec<Vec<Option<usize>>>)> = None;
    let mut deepest = 0;
    let rank = service_rank(spec);
    for order in [WalkOrder::Sweep, WalkOrder::Farthest, WalkOrder::Cheapest] {
        for placement in placements(n, spec) {
            let mut at: Vec<Option<usize>> = vec![None; npos];
            for (q, &p) in placement.iter().enumerate() {
                at[p] = Some(q);
            }
            let mut planner = Planner {
                spec,
                n,
                rank: rank.clone(),
                bound: best.as_ref().map_or(greedy_bound(n), |(c, _)| c.saturating_sub(1)),
                expansions: 0,
                failed: HashSet::new(),
                deepest: 0,
                cost: 0,
                order,
            };
            let mut rows = vec![at.clone()];
            if planner.extend(0, at, 0, &mut rows) {
                best = Some((planner.cost, rows));
            }
            deepest = deepest.max(planner.deepest);
        }
        if best.is_some() {
            break;
        }
    }
    let Some((_, rows)) = best else {
        return Err(QftError::GreedyStuck { cascade: deepest });
    };
    let marks = std::iter::once(vec![false; npos])
        .chain(rows.windows(2).map(|w| (0..npos).map(|p| w[0][p] != w[1][p]).collect()))
        .collect();
    Ok(QftSchedule {
        n,
        device: spec_name(spec),
        spec: spec.clone(),
        rows,
        marks,
    })
}

fn service_rank(spec: &TopologySpec) -> Vec<usize> {
    let mut rank = vec![0; spec.num_qubits()];
    for (i, p) in spec.service_order().into_iter().enumerate() {
        rank[p] = i;
    }
    rank
}

/// Candidate label → position placements over the first `n` service-order
/// positions: the service order itself, and two chain-major orders that
/// hand the last labels to the stationaries away from the start.
fn placements(n: usize, spec: &TopologySpec) -> Vec<Vec<usize>> {
    let order = spec.service_order();
    let used: BTreeSet<usize> = order.iter().take(n).copied().collect();
    let chain: Vec<usize> = spec.chain.iter().copied().filter(|p| used.contains(p)).collect();
    let near: Vec<usize> = spec.stationaries_at(spec.start).filter(|p| used.contains(p)).collect();
    let far: Vec<usize> = order
        .iter()
        .rev()
        .copied()
        .filter(|p| used.contains(p) && !chain.contains(p) && !near.contains(p))
        .collect();
    let near_first: Vec<usize> = chain[..1]
        .iter()
        .chain(&near)
        .chain(&chain[1..])
        .chain(&far)
        .copied()
        .collect();
    let chain_first: Vec<usize> = chain.iter().chain(&near).chain(&far).copied().collect();
    let mut out = vec![order[..n].to_vec()];
    for p in [near_first, chain_first] {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

struct Planner<'a> {
    spec: &'a TopologySpec,
    n: usize,
    /// Index of each position in the service order.
    rank: Vec<usize>,
    bound: usize,
    expansions: usize,
    failed: HashSet<(usize, Vec<Option<usize>>)>,
    deepest: usize,
    cost: usize,
    order: WalkOrder,
}

/// How a cascade's candidate walks are ranked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum WalkOrder {
    /// Cheapest first, then farthest end.
    Cheapest,
    /// Farthest end first among walks within the slack.
    Farthest,
    /// Fewest finished targets displaced, then farthest end, among all
    /// covering walks.
    Sweep,
}

impl Planner<'_> {
    fn slack(&self) -> usize {
        match self.order {
            WalkOrder::Sweep => usize::MAX,
            _ => WALK_SLACK,
        }
    }

    /// Cheapest possible cost of cascades `t..n`.
    fn floor(&self, t: usize) -> usize {
        (t..self.n).map(|u| 2 * (self.n - 1 - u)).sum()
    }

    fn extend(&mut self, t: usize, at: Vec<Option<usize>>, spent: usize, rows: &mut Vec<Vec<Option<usize>>>) -> bool {
        self.deepest = self.deepest.max(t);
        if t + 1 >= self.n {
            self.cost = spent;
            return spent <= self.bound;
        }
        if spent + self.floor(t) > self.bound || self.expansions > SEARCH_BUDGET {
            return false;
        }
        let key = (t, at);
        if self.failed.contains(&key) {
            return false;
        }
        let at = key.1;
        for (cost, path) in self.walks(t, &at) {
            let mut next = at.clone();
            for w in path.windows(2) {
                next.swap(w[0], w[1]);
            }
            rows.push(next.clone());
            if self.extend(t + 1, next, spent + cost, rows) {
                return true;
            }
            rows.pop();
        }
        self.failed.insert((t, at));
        false
    }

    /// Candidate walks for cascade `t`, cheapest first. A walk costs 3 CX per
    /// step and 2 per control serviced in place from a position on it.
    fn walks(&mut self, t: usize, at: &[Option<usize>]) -> Vec<(usize, Vec<usize>)> {
        let npos = at.len();
        let controls: Vec<usize> = (0..npos).filter(|&p| at[p].is_some_and(|q| q > t)).collect();
        let pos = (0..npos).find(|&p| at[p] == Some(t)).expect("target is placed");
        let mut found = Vec::new();
        let mut best = usize::MAX;
        let mut path = vec![pos];
        let mut on_path = vec![false; npos];
        on_path[pos] = true;
        self.enumerate(at, &controls, &mut path, &mut on_path, &mut best, &mut found);
        let slack = self.slack();
        found.retain(|(c, _)| *c <= best.saturating_add(slack));
        let far = |p: &Vec<usize>| std::cmp::Reverse(self.rank[*p.last().unwrap()]);
        // nothing follows the last cascade with controls, so it only pays
        let order = if t + 2 >= self.n {
            WalkOrder::Cheapest
        } else {
            self.order
        };
        match order {
            WalkOrder::Cheapest => found.sort_by_key(|(c, p)| (*c, far(p), p.clone())),
            WalkOrder::Farthest => found.sort_by_key(|(c, p)| (far(p), *c, p.clone())),
            WalkOrder::Sweep => {
                let retired = |p: &Vec<usize>| p[1..].iter().filter(|&&v| at[v].is_some_and(|q| q < t)).count();
                found.sort_by_key(|(c, p)| (retired(p), far(p), *c, p.clone()))
            }
        }
        found.truncate(WALK_CANDIDATES);
        found
    }

    fn enumerate(
        &mut self,
        at: &[Option<usize>],
        controls: &[usize],
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        best: &mut usize,
        found: &mut Vec<(usize, Vec<usize>)>,
    ) {
        self.expansions += 1;
        if self.expansions > SEARCH_BUDGET {
            return;
        }
        let steps = 3 * (path.len() - 1);
        if steps > best.saturating_add(self.slack()) {
            return;
        }
        let g = &self.spec.graph;
        let mut in_place = 0;
        let mut covered = true;
        for &p in controls {
            if on_path[p] {
                continue;
            }
            if path.iter().any(|&v| g.has_edge(v, p)) {
                in_place += 1;
            } else {
                covered = false;
                break;
            }
        }
        if covered {
            let cost = steps + 2 * in_place;
            *best = (*best).min(cost);
            found.push((cost, path.clone()));
        }
        let tail = *path.last().unwrap();
        for &v in g.neighbors(tail) {
            if !on_path[v] && at[v].is_some() {
                on_path[v] = true;
                path.push(v);
                self.enumerate(at, controls, path, on_path, best, found);
                path.pop();
                on_path[v] = false;
            }
        }
    }
}

fn spec_name(spec: &TopologySpec) -> String {
    for d in [Device::Guadalupe16, Device::Falcon27, Device::Lnn(spec.num_qubits())] {
        if d.num_qubits() == spec.num_qubits() && d.spec().graph == spec.graph {
            return d.to_string();
        }
    }
    "custom".into()
}

/// Outcome of [`verify_structural`]: `diffs` is empty iff the check passed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StructuralCheck {
    pub diffs: Vec<String>,
}

impl StructuralCheck {
    pub fn passed(&self) -> bool {
        self.diffs.is_empty()
    }
}

/// Maps every gate of a routed (pre-decomposition) circuit back to logical
/// qubits through its swaps and checks it against the reference QFT: one
/// `H` per qubit, one `CP(π/2^m)` per pair at distance `m`, each applied
/// after the `H` of its lower qubit and before the `H` of its upper one.
pub fn verify_structural(routed: &Circuit, initial: &Layout, n: usize) -> StructuralCheck {
    let mut diffs = Vec::new();
    let mut at = initial.inverse(routed.width());
    let mut h_done = vec![false; n];
    let mut pairs = vec![vec![0usize; n]; n];
    let logical = |at: &[Option<usize>], p: usize| at.get(p).copied().flatten();
    for (i, g) in routed.gates().iter().enumerate() {
        match *g {
            Gate::H(p) => match logical(&at, p) {
                Some(q) if h_done[q] => diffs.push(format!("gate {i}: second H on q{}", q + 1)),
                Some(q) => h_done[q] = true,
                None => diffs.push(format!("gate {i}: H on empty position {p}")),
            },
            Gate::Swap(a, b) => at.swap(a, b),
            Gate::CP(a, b, angle) => {
                let (Some(x), Some(y)) = (logical(&at, a), logical(&at, b)) else {
                    diffs.push(format!("gate {i}: CP touches an empty position"));
                    continue;
                };
                let (lo, hi) = (x.min(y), x.max(y));
                let name = format!("(q{},q{})", lo + 1, hi + 1);
                pairs[lo][hi] += 1;
                if !angle.approx_eq(cp_angle(hi - lo)) {
                    diffs.push(format!(
                        "gate {i}: CP{name} angle {} differs from π/2^{}",
                        angle.radians(),
                        hi - lo
                    ));
                }
                if !h_done[lo] {
                    diffs.push(format!("gate {i}: CP{name} precedes H on q{}", lo + 1));
                }
                if h_done[hi] {
                    diffs.push(format!("gate {i}: CP{name} follows H on q{}", hi + 1));
                }
            }
            other => diffs.push(format!("gate {i}: unexpected {other}")),
        }
    }
    for (q, done) in h_done.iter().enumerate() {
        if !done {
            diffs.push(format!("missing H on q{}", q + 1));
        }
    }
    for (lo, row) in pairs.iter().enumerate() {
        for (hi, &count) in row.iter().enumerate().skip(lo + 1) {
            match count {
                1 => {}
                0 => diffs.push(format!("missing CP(q{},q{})", lo + 1, hi + 1)),
                k => diffs.push(format!("CP(q{},q{}) applied {k} times", lo + 1, hi + 1)),
            }
        }
    }
    StructuralCheck { diffs }
}

/// Relabels the occupied positions of an execution so that logical qubit `i`
/// starts on wire `i`, giving an `n`-wire circuit and the final wire of each
/// logical qubit.
pub fn compact(exec: &QftExecution, n: usize) -> (Circuit, Vec<usize>) {
    let width = exec.circuit.width();
    let wire_of = exec.initial.inverse(width);
    let map = |p: usize| wire_of[p].expect("circuit only touches occupied positions");
    let gates = exec.circuit.gates().iter().map(|g| g.map_wires(map)).collect();
    let perm = exec.layout.as_slice().iter().map(|&p| map(p)).collect();
    (Circuit::from_gates(n, gates), perm)
}

/// Compares the executed circuit with [`reference_qft`] up to the final
/// permutation and global phase. Needs `n` ≤ 10.
pub fn verify_unitary(exec: &QftExecution, n: usize) -> Result<bool, QftError> {
    let (c, perm) = compact(exec, n);
    let routed = sim::unitary_of(&c)?;
    let reference = sim::unitary_of(&reference_qft(n))?;
    Ok(sim::equivalent_up_to_perm_phase(&reference, &routed, &perm))
}
