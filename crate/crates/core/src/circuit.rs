//! Gates, circuits and wire layouts.
//!
//! A [`Circuit`] is an ordered gate list over `width` wires. Circuits in the
//! [`Space::Logical`] space may use the composite kinds `CRz`, `CP` and
//! `Swap`; a [`Space::Physical`] circuit is restricted to single-qubit gates
//! and `CX` on edges of a coupling graph.

use std::fmt;

use crate::angle::Angle;
use crate::topology::CouplingGraph;

/// A single gate. Two-qubit kinds are written `(control, target)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    SX(usize),
    SXdg(usize),
    S(usize),
    Sdg(usize),
    Rz(usize, Angle),
    Ry(usize, Angle),
    CX(usize, usize),
    /// Controlled Rz holding the half-angle `θ/2`. `I ⊕ Rz(θ)` has period 4π
    /// in θ, so the half-angle is the quantity that is exact modulo 2π.
    CRz(usize, usize, Angle),
    CP(usize, usize, Angle),
    Swap(usize, usize),
}

impl Gate {
    /// `I ⊕ Rz(theta)` on `(control, target)`.
    pub fn crz(control: usize, target: usize, theta: f64) -> Gate {
        Gate::CRz(control, target, Angle::new(theta / 2.0))
    }

    /// Rotation angle in radians as it would be written in a circuit
    /// diagram; for `CRz` this lies in `[0, 4π)`.
    pub fn theta(&self) -> Option<f64> {
        match *self {
            Gate::CRz(_, _, half) => Some(2.0 * half.radians()),
            _ => self.angle().map(Angle::radians),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::SX(_) => "sx",
            Gate::SXdg(_) => "sxdg",
            Gate::S(_) => "s",
            Gate::Sdg(_) => "sdg",
            Gate::Rz(..) => "rz",
            Gate::Ry(..) => "ry",
            Gate::CX(..) => "cx",
            Gate::CRz(..) => "crz",
            Gate::CP(..) => "cp",
            Gate::Swap(..) => "swap",
        }
    }

    /// Wires in `(control, target)` order for two-qubit kinds.
    pub fn wires(&self) -> Wires {
        match *self {
            Gate::H(q)
            | Gate::X(q)
            | Gate::SX(q)
            | Gate::SXdg(q)
            | Gate::S(q)
            | Gate::Sdg(q)
            | Gate::Rz(q, _)
            | Gate::Ry(q, _) => Wires::One(q),
            Gate::CX(a, b) | Gate::CRz(a, b, _) | Gate::CP(a, b, _) | Gate::Swap(a, b) => Wires::Two(a, b),
        }
    }

    pub fn touches(&self, wire: usize) -> bool {
        self.wires().iter().any(|w| w == wire)
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self.wires(), Wires::Two(..))
    }

    /// Kinds that must be decomposed before a circuit can run on hardware.
    pub fn is_logical_only(&self) -> bool {
        matches!(self, Gate::CRz(..) | Gate::CP(..) | Gate::Swap(..))
    }

    /// Stored angle parameter (the half-angle for `CRz`).
    pub fn angle(&self) -> Option<Angle> {
        match *self {
            Gate::Rz(_, a) | Gate::Ry(_, a) | Gate::CRz(_, _, a) | Gate::CP(_, _, a) => Some(a),
            _ => None,
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::SX(q) => Gate::SXdg(q),
            Gate::SXdg(q) => Gate::SX(q),
            Gate::S(q) => Gate::Sdg(q),
            Gate::Sdg(q) => Gate::S(q),
            Gate::Rz(q, a) => Gate::Rz(q, -a),
            Gate::Ry(q, a) => Gate::Ry(q, -a),
            Gate::CRz(c, t, a) => Gate::CRz(c, t, -a),
            Gate::CP(c, t, a) => Gate::CP(c, t, -a),
            g => g,
        }
    }

    /// Relabels every wire through `f`.
    pub fn map_wires(&self, f: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::H(q) => Gate::H(f(q)),
            Gate::X(q) => Gate::X(f(q)),
            Gate::SX(q) => Gate::SX(f(q)),
            Gate::SXdg(q) => Gate::SXdg(f(q)),
            Gate::S(q) => Gate::S(f(q)),
            Gate::Sdg(q) => Gate::Sdg(f(q)),
            Gate::Rz(q, a) => Gate::Rz(f(q), a),
            Gate::Ry(q, a) => Gate::Ry(f(q), a),
            Gate::CX(c, t) => Gate::CX(f(c), f(t)),
            Gate::CRz(c, t, a) => Gate::CRz(f(c), f(t), a),
            Gate::CP(c, t, a) => Gate::CP(f(c), f(t), a),
            Gate::Swap(a, b) => Gate::Swap(f(a), f(b)),
        }
    }

    /// Structural equality with angles compared within the angle tolerance.
    pub fn approx_eq(&self, other: &Gate) -> bool {
        if std::mem::discriminant(self) != std::mem::discriminant(other) || self.wires() != other.wires() {
            return false;
        }
        match (self.angle(), other.angle()) {
            (Some(a), Some(b)) => a.approx_eq(b),
            _ => true,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.theta(), self.wires()) {
            (Some(a), Wires::One(q)) => write!(f, "{}({}) q{}", self.name(), a, q),
            (None, Wires::One(q)) => write!(f, "{} q{}", self.name(), q),
            (Some(a), Wires::Two(c, t)) => write!(f, "{}({}) q{},q{}", self.name(), a, c, t),
            (None, Wires::Two(c, t)) => write!(f, "{} q{},q{}", self.name(), c, t),
        }
    }
}

/// The one or two wires a gate acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wires {
    One(usize),
    Two(usize, usize),
}

impl Wires {
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let (a, b) = match self {
            Wires::One(q) => (q, None),
            Wires::Two(c, t) => (c, Some(t)),
        };
        std::iter::once(a).chain(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Logical,
    Physical,
}

/// Maps logical qubit `i` to physical position `self[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout(Vec<usize>);

impl Layout {
    pub fn identity(n: usize) -> Self {
        Layout((0..n).collect())
    }

    pub fn from_vec(map: Vec<usize>) -> Self {
        Layout(map)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn physical(&self, logical: usize) -> usize {
        self.0[logical]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Physical position → logical qubit, for positions in `0..width`.
    pub fn inverse(&self, width: usize) -> Vec<Option<usize>> {
        let mut inv = vec![None; width];
        for (l, &p) in self.0.iter().enumerate() {
            inv[p] = Some(l);
        }
        inv
    }

    /// Exchanges whatever logical qubits sit at physical positions `a` and `b`.
    pub fn swap_physical(&mut self, a: usize, b: usize) {
        for p in self.0.iter_mut() {
            if *p == a {
                *p = b;
            } else if *p == b {
                *p = a;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
    space: Space,
    layout: Option<Layout>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Self::with_space(width, Space::Logical)
    }

    pub fn with_space(width: usize, space: Space) -> Self {
        Circuit {
            width,
            gates: Vec::new(),
            space,
            layout: None,
        }
    }

    pub fn from_gates(width: usize, gates: Vec<Gate>) -> Self {
        Circuit {
            width,
            gates,
            space: Space::Logical,
            layout: None,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn into_gates(self) -> Vec<Gate> {
        self.gates
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn layout(&self) -> Option<&Layout> {
        self.layout.as_ref()
    }

    pub fn set_space(mut self, space: Space) -> Self {
        self.space = space;
        self
    }

    pub fn set_layout(mut self, layout: Layout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) {
        self.gates.extend(gates);
    }

    /// `self` followed by `other`. Widths must agree.
    pub fn compose(&self, other: &Circuit) -> Circuit {
        assert_eq!(self.width, other.width, "composing circuits of different width");
        let mut out = self.clone();
        out.gates.extend_from_slice(&other.gates);
        out
    }

    pub fn cnot_count(&self) -> usize {
        cnot_count(self)
    }

    pub fn inverse(&self) -> Circuit {
        inverse(self)
    }

    /// Gate-by-gate comparison with angle tolerance.
    pub fn approx_eq(&self, other: &Circuit) -> bool {
        self.width == other.width
            && self.gates.len() == other.gates.len()
            && self.gates.iter().zip(&other.gates).all(|(a, b)| a.approx_eq(b))
    }
}

/// Number of `CX` gates. Composite kinds are not counted.
pub fn cnot_count(c: &Circuit) -> usize {
    c.gates.iter().filter(|g| matches!(g, Gate::CX(..))).count()
}

pub fn inverse(c: &Circuit) -> Circuit {
    Circuit {
        width: c.width,
        gates: c.gates.iter().rev().map(Gate::inverse).collect(),
        space: c.space,
        layout: None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    WireOutOfRange { wire: usize, width: usize },
    RepeatedWire { wire: usize },
    LogicalGateInPhysical,
    NotAnEdge { a: usize, b: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub gate_index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gate {}: ", self.gate_index)?;
        match &self.kind {
            ViolationKind::WireOutOfRange { wire, width } => {
                write!(f, "wire {wire} out of range for width {width}")
            }
            ViolationKind::RepeatedWire { wire } => write!(f, "wire {wire} used twice"),
            ViolationKind::LogicalGateInPhysical => {
                write!(f, "logical-only gate in a physical circuit")
            }
            ViolationKind::NotAnEdge { a, b } => write!(f, "({a},{b}) is not a coupling edge"),
        }
    }
}

/// Checks wire invariants and, for physical circuits with a graph, coupling.
pub fn validate(c: &Circuit, graph: Option<&CouplingGraph>) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, g) in c.gates.iter().enumerate() {
        let mut push = |kind| out.push(Violation { gate_index: i, kind });
        let mut in_range = true;
        for w in g.wires().iter() {
            if w >= c.width {
                in_range = false;
                push(ViolationKind::WireOutOfRange {
                    wire: w,
                    width: c.width,
                });
            }
        }
        if let Wires::Two(a, b) = g.wires() {
            if a == b {
                push(ViolationKind::RepeatedWire { wire: a });
            } else if in_range && c.space == Space::Physical {
                if let Some(graph) = graph {
                    if !graph.has_edge(a, b) {
                        push(ViolationKind::NotAnEdge { a, b });
                    }
                }
            }
        }
        if c.space == Space::Physical && g.is_logical_only() {
            push(ViolationKind::LogicalGateInPhysical);
        }
    }
    out
}
