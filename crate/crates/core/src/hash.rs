//! Pseudo-rotation hashing circuits for the unary language MOD_p.
//!
//! Register layout: wires `0..m-1` are controls, wire `m-1` is the target.
//! Branch `j` of the control register rotates the target by
//! `θ_j = ξ_0 + Σ_i bit_i(j)·ξ_{i+1}` per input symbol, realized as
//! `Ry(2θ_j)` so that after `l` symbols the target keeps amplitude
//! `cos(l·θ_j)` on `|0⟩`. The target is conjugated by `SX` so that each
//! `Rz` acts as an `Ry`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::angle::Angle;
use crate::circuit::{Circuit, Gate, Layout, Space};
use crate::report::CostReport;
use crate::rewrite::{cancel_cx_pairs_tagged, decompose_fused_tagged, decompose_gate, merge_crz_pair};
use crate::sim::{self, SimError};
use crate::topology::{Device, TopologySpec};

/// Largest control count for which branch sums are enumerated.
pub const MAX_CONTROLS: usize = 20;

/// Largest register the builders accept.
pub const MAX_WIDTH: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HashError {
    #[error("p = {0} is not an odd prime")]
    NotPrime(u64),
    #[error("need at least 2 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("{0} qubits exceeds the limit of {MAX_WIDTH}")]
    TooWide(usize),
    #[error("{0} controls is too many to enumerate (limit {MAX_CONTROLS})")]
    TooManyControls(usize),
    #[error("circuit needs {params} qubits but the device has {device}")]
    WidthMismatch { params: usize, device: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn check_p(p: u64) -> Result<(), HashError> {
    if p >= 3 && is_prime(p) {
        Ok(())
    } else {
        Err(HashError::NotPrime(p))
    }
}

fn check_m(m: usize) -> Result<(), HashError> {
    if m < 2 {
        Err(HashError::TooFewQubits(m))
    } else if m > MAX_WIDTH {
        Err(HashError::TooWide(m))
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HashParams {
    p: u64,
    xi: Vec<f64>,
    l: usize,
}

impl HashParams {
    /// `xi` holds ξ_0..ξ_{m-1}; its length fixes the register width `m`.
    pub fn new(p: u64, xi: Vec<f64>, l: usize) -> Result<Self, HashError> {
        check_p(p)?;
        check_m(xi.len())?;
        Ok(HashParams { p, xi, l })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> usize {
        self.xi.len()
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Number of branches `d = 2^(m-1)`.
    pub fn d(&self) -> usize {
        1 << (self.m() - 1)
    }

    pub fn with_l(&self, l: usize) -> Self {
        HashParams { l, ..self.clone() }
    }

    pub fn target(&self) -> usize {
        self.m() - 1
    }

    /// # Panics
    /// If there are more than [`MAX_CONTROLS`] controls.
    pub fn effective_k(&self) -> EffectiveK {
        EffectiveK::from_xi(&self.xi)
    }
}

/// The branch angles induced by ξ.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveK {
    pub thetas: Vec<f64>,
}

impl EffectiveK {
    pub fn from_xi(xi: &[f64]) -> Self {
        let controls = &xi[1..];
        assert!(controls.len() <= MAX_CONTROLS, "too many controls to enumerate");
        let thetas = (0..1usize << controls.len())
            .map(|j| {
                xi[0]
                    + controls
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| j >> i & 1 == 1)
                        .map(|(_, x)| x)
                        .sum::<f64>()
            })
            .collect();
        EffectiveK { thetas }
    }
}

/// `((1/d)·Σ_j cos(l·θ_j))²`. Panics like [`HashParams::effective_k`].
pub fn accept_prob(hp: &HashParams) -> f64 {
    let k = hp.effective_k();
    let l = hp.l as f64;
    let mean = k.thetas.iter().map(|t| (l * t).cos()).sum::<f64>() / k.thetas.len() as f64;
    mean * mean
}

/// Acceptance after `l1` forward and `l2` backward symbols.
pub fn accept_prob_signed(hp: &HashParams, l1: usize, l2: usize) -> f64 {
    // cos is even, so only |l1 - l2| matters
    accept_prob(&hp.with_l(l1.abs_diff(l2)))
}

fn symbol_gates(hp: &HashParams, sign: f64) -> impl Iterator<Item = Gate> + '_ {
    let t = hp.target();
    std::iter::once(Gate::Rz(t, Angle::new(sign * 2.0 * hp.xi[0])))
        .chain((0..t).map(move |i| Gate::CRz(i, t, Angle::new(sign * hp.xi[i + 1]))))
}

fn wrap_logical(hp: &HashParams, body: impl IntoIterator<Item = Gate>) -> Circuit {
    let t = hp.target();
    let mut c = Circuit::new(hp.m());
    c.extend((0..t).map(Gate::H));
    c.push(Gate::SX(t));
    c.extend(body);
    c.push(Gate::SXdg(t));
    c.extend((0..t).map(Gate::H));
    c
}

/// The unrouted circuit: per symbol one `Rz` on the target and one `CRz`
/// from each control. The accepting outcome is all zeros.
pub fn logical_pseudo_circuit(hp: &HashParams) -> Circuit {
    wrap_logical(hp, (0..hp.l).flat_map(|_| symbol_gates(hp, 1.0)))
}

/// `l1` forward symbols followed by `l2` backward ones.
pub fn equality_circuit(hp: &HashParams, l1: usize, l2: usize) -> Circuit {
    let fwd = (0..l1).flat_map(|_| symbol_gates(hp, 1.0));
    let bwd = (0..l2).flat_map(|_| symbol_gates(hp, -1.0));
    wrap_logical(hp, fwd.chain(bwd).collect::<Vec<_>>())
}

/// Compares two input lengths through their hashes: the probability that
/// the composite forward/backward circuit returns to all zeros.
pub fn equality_test(hp: &HashParams, l1: usize, l2: usize) -> Result<f64, HashError> {
    let s = sim::run(&equality_circuit(hp, l1, l2), 0)?;
    Ok(s.probability(0))
}

/// Simulated probability of the all-zeros outcome of the logical circuit.
pub fn simulate_accept(hp: &HashParams) -> Result<f64, HashError> {
    Ok(sim::run(&logical_pseudo_circuit(hp), 0)?.probability(0))
}

/// Largest acceptance over non-members `l = 1..p-1`.
pub fn max_error(p: u64, xi: &[f64]) -> f64 {
    let k = EffectiveK::from_xi(xi);
    (1..p)
        .map(|l| {
            let mean = k.thetas.iter().map(|t| (l as f64 * t).cos()).sum::<f64>() / k.thetas.len() as f64;
            mean * mean
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AngleSearch {
    pub xi: Vec<f64>,
    pub eps: f64,
    /// Index of the winning trial.
    pub trial: usize,
}

/// Randomized search over ξ on the lattice `2πk/p`, which keeps every
/// member length accepted with certainty. Returns the trial minimizing the
/// worst non-member acceptance; ties go to the earliest trial.
pub fn search_angles(p: u64, m: usize, budget: usize, seed: u64) -> Result<AngleSearch, HashError> {
    check_p(p)?;
    check_m(m)?;
    if m - 1 > MAX_CONTROLS {
        return Err(HashError::TooManyControls(m - 1));
    }
    let budget = budget.max(1);
    let pu = p as usize;
    // cos(2π·r/p) for every residue r
    let cos_table: Vec<f64> = (0..pu).map(|r| (TAU * r as f64 / p as f64).cos()).collect();
    let d = 1usize << (m - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ks = vec![0usize; m];
    let mut branch = vec![0usize; d];
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for trial in 0..budget {
        for k in ks.iter_mut() {
            *k = rng.random_range(0..pu);
        }
        for (j, b) in branch.iter_mut().enumerate() {
            *b = (0..m - 1)
                .filter(|i| j >> i & 1 == 1)
                .fold(ks[0], |acc, i| (acc + ks[i + 1]) % pu);
        }
        let mut eps: f64 = 0.0;
        for l in 1..pu {
            let mean = branch.iter().map(|&b| cos_table[b * l % pu]).sum::<f64>() / d as f64;
            eps = eps.max(mean * mean);
        }
        if best.as_ref().is_none_or(|(e, _, _)| eps < *e) {
            best = Some((eps, trial, ks.clone()));
        }
    }
    let (_, trial, ks) = best.expect("budget is at least one");
    let xi: Vec<f64> = ks.iter().map(|&k| TAU * k as f64 / p as f64).collect();
    Ok(AngleSearch {
        eps: max_error(p, &xi),
        xi,
        trial,
    })
}

/// Which symbol boundaries fold the repeated rotation into one gate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MergePolicy {
    /// One boundary for `l = 2`; every boundary but the first for `l ≥ 3`.
    #[default]
    SkipFirst,
    /// Every boundary.
    All,
    None,
}

impl MergePolicy {
    /// Whether the boundary after symbol `k` (1-based) of `l` is merged.
    pub fn merges(self, k: usize, l: usize) -> bool {
        match self {
            MergePolicy::SkipFirst => (l == 2 && k == 1) || (l >= 3 && k >= 2),
            MergePolicy::All => true,
            MergePolicy::None => false,
        }
    }
}

/// A routed circuit with its placement and per-symbol cost.
#[derive(Clone, Debug)]
pub struct RoutedHash {
    /// Hardware-basis circuit on physical wires.
    pub circuit: Circuit,
    /// Composite-gate circuit on physical wires, before decomposition.
    pub routed_logical: Circuit,
    /// Logical qubit → physical position before the first gate.
    pub initial: Layout,
    /// Logical qubit → physical position after the last gate.
    pub layout: Layout,
    pub report: CostReport,
}

impl RoutedHash {
    pub fn cnot_count(&self) -> usize {
        self.circuit.cnot_count()
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    /// Controlled rotation from a stationary control at `.0` onto the target at `.1`.
    Service(usize, usize),
    /// Rotation from the occupant of `.1` onto the target at `.0`, then a swap.
    Advance(usize, usize),
}

fn initial_placement(hp: &HashParams, spec: &TopologySpec) -> Result<Vec<usize>, HashError> {
    let n = spec.num_qubits();
    if hp.m() != n {
        return Err(HashError::WidthMismatch {
            params: hp.m(),
            device: n,
        });
    }
    let order = spec.service_order();
    let mut phys = vec![0; n];
    phys[hp.target()] = order[0];
    phys[..hp.target()].copy_from_slice(&order[1..=hp.target()]);
    Ok(phys)
}

/// Tag for gates outside every symbol.
const FRAME: usize = 0;

fn finish(
    hp: &HashParams,
    spec: &TopologySpec,
    initial: Vec<usize>,
    phys: Vec<usize>,
    tagged: Vec<(Gate, usize)>,
    hardware: Vec<(Gate, usize)>,
) -> RoutedHash {
    let n = spec.num_qubits();
    let mut counts = vec![0usize; hp.l + 1];
    for (g, tag) in &hardware {
        if matches!(g, Gate::CX(..)) {
            counts[*tag] += 1;
        }
    }
    let mut breakdown: Vec<(String, usize)> = (1..=hp.l).map(|s| (format!("symbol {s}"), counts[s])).collect();
    if counts[FRAME] > 0 {
        breakdown.insert(0, ("frame".into(), counts[FRAME]));
    }
    let layout = Layout::from_vec(phys);
    let circuit = Circuit::from_gates(n, hardware.into_iter().map(|(g, _)| g).collect())
        .set_space(Space::Physical)
        .set_layout(layout.clone());
    let routed_logical =
        Circuit::from_gates(n, tagged.into_iter().map(|(g, _)| g).collect()).set_layout(layout.clone());
    RoutedHash {
        circuit,
        routed_logical,
        initial: Layout::from_vec(initial),
        layout,
        report: CostReport::from_breakdown(breakdown),
    }
}

fn frame_open(hp: &HashParams, phys: &[usize]) -> Vec<(Gate, usize)> {
    let t = hp.target();
    let mut out: Vec<(Gate, usize)> = (0..t).map(|i| (Gate::H(phys[i]), FRAME)).collect();
    out.push((Gate::SX(phys[t]), FRAME));
    out
}

fn frame_close(hp: &HashParams, phys: &[usize]) -> Vec<(Gate, usize)> {
    let t = hp.target();
    let mut out = vec![(Gate::SXdg(phys[t]), FRAME)];
    out.extend((0..t).map(|i| (Gate::H(phys[i]), FRAME)));
    out
}

/// Snake routing: odd symbols walk the chain forward, even symbols replay
/// the exact mirror, so the target ends each pair of symbols where it began.
/// Stationary controls cost 2 CX; each chain step fuses the rotation with
/// the swap for 3 CX.
pub fn routed_hash_circuit(hp: &HashParams, spec: &TopologySpec, policy: MergePolicy) -> Result<RoutedHash, HashError> {
    let mut phys = initial_placement(hp, spec)?;
    let initial = phys.clone();
    let n = spec.num_qubits();
    let t = hp.target();
    let mut at = vec![0; n];
    for (q, &p) in phys.iter().enumerate() {
        at[p] = q;
    }

    let mut forward = Vec::new();
    for (i, &node) in spec.chain.iter().enumerate() {
        forward.extend(spec.stationaries_at(node).map(|s| Op::Service(s, node)));
        if let Some(&next) = spec.chain.get(i + 1) {
            forward.push(Op::Advance(node, next));
        }
    }
    let mirror: Vec<Op> = forward
        .iter()
        .rev()
        .map(|op| match *op {
            Op::Advance(a, b) => Op::Advance(b, a),
            s => s,
        })
        .collect();

    let half = |q: usize| Angle::new(hp.xi[q + 1]);
    let mut symbols: Vec<Vec<Gate>> = Vec::with_capacity(hp.l);
    for s in 1..=hp.l {
        let ops = if s % 2 == 1 { &forward } else { &mirror };
        let mut gates = Vec::new();
        for op in ops {
            match *op {
                Op::Service(c, node) => gates.push(Gate::CRz(c, node, half(at[c]))),
                Op::Advance(from, to) => {
                    let ctrl = at[to];
                    gates.push(Gate::CRz(to, from, half(ctrl)));
                    gates.push(Gate::Swap(to, from));
                    at.swap(from, to);
                    phys[ctrl] = from;
                    phys[t] = to;
                }
            }
        }
        symbols.push(gates);
    }

    for k in 1..hp.l {
        if !policy.merges(k, hp.l) {
            continue;
        }
        let (left, right) = symbols.split_at_mut(k);
        let (Some(last), Some(first)) = (left[k - 1].last(), right[0].first()) else {
            continue;
        };
        if let Some(merged) = merge_crz_pair(last, first) {
            *left[k - 1].last_mut().unwrap() = merged;
            right[0].remove(0);
        }
    }

    let mut tagged = frame_open(hp, &initial);
    let rz0 = Angle::new(2.0 * hp.l as f64 * hp.xi[0]);
    if !rz0.is_zero() {
        tagged.push((Gate::Rz(initial[t], rz0), FRAME));
    }
    for (s, gates) in symbols.into_iter().enumerate() {
        tagged.extend(gates.into_iter().map(|g| (g, s + 1)));
    }
    tagged.extend(frame_close(hp, &phys));

    let hardware = cancel_cx_pairs_tagged(n, &decompose_fused_tagged(&tagged));
    Ok(finish(hp, spec, initial, phys, tagged, hardware))
}

/// Baseline router: for each rotation, swap the target along a shortest path
/// until it neighbours the control, then apply the rotation. Nothing is
/// fused or cancelled. Before every symbol after the first the target
/// returns to its start position.
pub fn naive_routed_circuit(hp: &HashParams, spec: &TopologySpec) -> Result<RoutedHash, HashError> {
    let mut phys = initial_placement(hp, spec)?;
    let initial = phys.clone();
    let n = spec.num_qubits();
    let t = hp.target();
    let g = &spec.graph;
    let mut at = vec![0; n];
    for (q, &p) in phys.iter().enumerate() {
        at[p] = q;
    }

    let mut tagged = frame_open(hp, &phys);
    let step = |to: usize, at: &mut Vec<usize>, phys: &mut Vec<usize>, tagged: &mut Vec<(Gate, usize)>, s| {
        let from = phys[t];
        let other = at[to];
        tagged.push((Gate::Swap(from, to), s));
        at.swap(from, to);
        phys[other] = from;
        phys[t] = to;
    };
    for s in 1..=hp.l {
        if s > 1 {
            let path = g.shortest_path(phys[t], spec.start).expect("graph is connected");
            for &v in &path[1..] {
                step(v, &mut at, &mut phys, &mut tagged, s);
            }
        }
        tagged.push((Gate::Rz(phys[t], Angle::new(2.0 * hp.xi[0])), s));
        for q in 0..t {
            while !g.has_edge(phys[t], phys[q]) {
                let path = g.shortest_path(phys[t], phys[q]).expect("graph is connected");
                step(path[1], &mut at, &mut phys, &mut tagged, s);
            }
            tagged.push((Gate::CRz(phys[q], phys[t], Angle::new(hp.xi[q + 1])), s));
        }
    }
    tagged.extend(frame_close(hp, &phys));

    let hardware: Vec<(Gate, usize)> = tagged
        .iter()
        .flat_map(|(g, s)| decompose_gate(g).into_iter().map(move |h| (h, *s)))
        .collect();
    Ok(finish(hp, spec, initial, phys, tagged, hardware))
}

/// The closed-form routed cost on the two built-in heavy-hex devices.
pub fn cost_formula(device: Device, l: usize) -> Option<usize> {
    let (first, second, slope) = match device {
        Device::Guadalupe16 => (39, 76, 37),
        Device::Falcon27 => (69, 136, 67),
        Device::Lnn(_) => return None,
    };
    match l {
        0 => None,
        1 => Some(first),
        2 => Some(second),
        l => Some(slope * l + 4),
    }
}
