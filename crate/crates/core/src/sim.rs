//! Dense statevector simulation.
//!
//! Wire `i` is bit `i` of the basis index (little-endian). Logical-only kinds
//! (`CRz`, `CP`, `Swap`) are simulated directly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Circuit, Gate};

pub const DEFAULT_MAX_QUBITS: usize = 20;
pub const UNITARY_MAX_QUBITS: usize = 10;

/// Tolerance used by the equivalence helpers.
pub const EQUIV_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("{width} qubits exceeds the simulation cap of {cap}")]
    TooWide { width: usize, cap: usize },
    #[error("expected {expected} angles, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("basis index {index} out of range for {n} qubits")]
    BasisOutOfRange { index: usize, n: usize },
    #[error("wire {wire} out of range for {n} qubits")]
    WireOutOfRange { wire: usize, n: usize },
}

type C = Complex64;
type M2 = [[C; 2]; 2];
type M4 = [[C; 4]; 4];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

fn phase(x: f64) -> C {
    C::from_polar(1.0, x)
}

/// The 2×2 matrix of a single-qubit gate.
pub fn single_qubit_matrix(g: &Gate) -> Option<M2> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let m = match *g {
        Gate::H(_) => [[C::new(r, 0.0), C::new(r, 0.0)], [C::new(r, 0.0), C::new(-r, 0.0)]],
        Gate::X(_) => [[ZERO, ONE], [ONE, ZERO]],
        Gate::SX(_) => {
            let (p, q) = (C::new(0.5, 0.5), C::new(0.5, -0.5));
            [[p, q], [q, p]]
        }
        Gate::SXdg(_) => {
            let (p, q) = (C::new(0.5, -0.5), C::new(0.5, 0.5));
            [[p, q], [q, p]]
        }
        Gate::S(_) => [[ONE, ZERO], [ZERO, I]],
        Gate::Sdg(_) => [[ONE, ZERO], [ZERO, -I]],
        Gate::Rz(_, a) => {
            let t = a.radians();
            [[phase(-t / 2.0), ZERO], [ZERO, phase(t / 2.0)]]
        }
        Gate::Ry(_, a) => {
            let (s, c) = (a.radians() / 2.0).sin_cos();
            [[C::new(c, 0.0), C::new(-s, 0.0)], [C::new(s, 0.0), C::new(c, 0.0)]]
        }
        _ => return None,
    };
    Some(m)
}

/// The 4×4 matrix of a two-qubit gate in the local basis `2·b_first + b_second`,
/// where `first` is the control (or the first SWAP wire).
pub fn two_qubit_matrix(g: &Gate) -> Option<M4> {
    let mut m = [[ZERO; 4]; 4];
    match *g {
        Gate::CX(..) => {
            m[0][0] = ONE;
            m[1][1] = ONE;
            m[3][2] = ONE;
            m[2][3] = ONE;
        }
        Gate::Swap(..) => {
            m[0][0] = ONE;
            m[2][1] = ONE;
            m[1][2] = ONE;
            m[3][3] = ONE;
        }
        Gate::CRz(_, _, half) => {
            m[0][0] = ONE;
            m[1][1] = ONE;
            m[2][2] = phase(-half.radians());
            m[3][3] = phase(half.radians());
        }
        Gate::CP(_, _, a) => {
            m[0][0] = ONE;
            m[1][1] = ONE;
            m[2][2] = ONE;
            m[3][3] = phase(a.radians());
        }
        _ => return None,
    }
    Some(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C>,
}

impl StateVector {
    /// `|index⟩` on `n` qubits.
    pub fn basis(n: usize, index: usize) -> Result<Self, SimError> {
        Self::check_width(n, DEFAULT_MAX_QUBITS)?;
        if index >= 1 << n {
            return Err(SimError::BasisOutOfRange { index, n });
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Ok(StateVector { n, amps })
    }

    pub fn zero(n: usize) -> Result<Self, SimError> {
        Self::basis(n, 0)
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<C>) -> Self {
        assert!(amps.len().is_power_of_two(), "amplitude count must be 2^n");
        StateVector {
            n: amps.len().trailing_zeros() as usize,
            amps,
        }
    }

    fn check_width(n: usize, cap: usize) -> Result<(), SimError> {
        if n > cap {
            Err(SimError::TooWide { width: n, cap })
        } else {
            Ok(())
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C {
        self.amps[index]
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&mut self, g: &Gate) -> Result<(), SimError> {
        for w in g.wires().iter() {
            if w >= self.n {
                return Err(SimError::WireOutOfRange { wire: w, n: self.n });
            }
        }
        if let Some(m) = single_qubit_matrix(g) {
            let q = g.wires().iter().next().unwrap();
            self.apply_1q(q, &m);
        } else {
            let m = two_qubit_matrix(g).expect("every gate has a matrix");
            let mut ws = g.wires().iter();
            let (a, b) = (ws.next().unwrap(), ws.next().unwrap());
            self.apply_2q(a, b, &m);
        }
        Ok(())
    }

    fn apply_1q(&mut self, q: usize, m: &M2) {
        let mask = 1 << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (x, y) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * x + m[0][1] * y;
                self.amps[j] = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    fn apply_2q(&mut self, first: usize, second: usize, m: &M4) {
        let (fm, sm) = (1 << first, 1 << second);
        for i in 0..self.amps.len() {
            if i & (fm | sm) == 0 {
                let idx = [i, i | sm, i | fm, i | fm | sm];
                let v = idx.map(|k| self.amps[k]);
                for (r, &k) in idx.iter().enumerate() {
                    self.amps[k] = (0..4).map(|c| m[r][c] * v[c]).sum();
                }
            }
        }
    }

    /// Moves the content of wire `i` to wire `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> StateVector {
        let mut out = vec![ZERO; self.amps.len()];
        for (x, &a) in self.amps.iter().enumerate() {
            out[permute_index(x, perm)] = a;
        }
        StateVector { n: self.n, amps: out }
    }

    /// True if `self = e^{iφ}·other` within `tol` per amplitude.
    pub fn equal_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        self.n == other.n && vectors_equal_up_to_phase(&self.amps, &other.amps, tol)
    }
}

fn permute_index(x: usize, perm: &[usize]) -> usize {
    let mut y = 0;
    for (i, &p) in perm.iter().enumerate() {
        if x >> i & 1 == 1 {
            y |= 1 << p;
        }
    }
    y
}

fn vectors_equal_up_to_phase(a: &[C], b: &[C], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    // align on the largest entry of b to avoid dividing by noise
    let Some(k) = (0..b.len()).max_by(|&i, &j| b[i].norm().total_cmp(&b[j].norm())) else {
        return true;
    };
    if b[k].norm() < tol {
        return a.iter().all(|x| x.norm() <= tol);
    }
    if a[k].norm() < tol {
        return false;
    }
    let ph = a[k] / b[k];
    let ph = ph / ph.norm();
    a.iter().zip(b).all(|(x, y)| (x - ph * y).norm() <= tol)
}

/// Runs `c` on `|initial⟩` with the default qubit cap.
pub fn run(c: &Circuit, initial: usize) -> Result<StateVector, SimError> {
    run_with_cap(c, initial, DEFAULT_MAX_QUBITS)
}

pub fn run_with_cap(c: &Circuit, initial: usize, cap: usize) -> Result<StateVector, SimError> {
    StateVector::check_width(c.width(), cap)?;
    let mut s = StateVector::basis(c.width(), initial)?;
    run_on(c, &mut s)?;
    Ok(s)
}

/// Applies every gate of `c` to `s` in order.
pub fn run_on(c: &Circuit, s: &mut StateVector) -> Result<(), SimError> {
    for g in c.gates() {
        s.apply(g)?;
    }
    Ok(())
}

/// Uniformly controlled Ry: for each control pattern `j` (bit `i` of `j` is
/// the value of `controls[i]`), applies `Ry(angles[j])` to `target`.
pub fn apply_multiplexed_ry(
    s: &StateVector,
    controls: &[usize],
    target: usize,
    angles: &[f64],
) -> Result<StateVector, SimError> {
    let expected = 1usize << controls.len();
    if angles.len() != expected {
        return Err(SimError::LengthMismatch {
            expected,
            got: angles.len(),
        });
    }
    for &w in controls.iter().chain([&target]) {
        if w >= s.n {
            return Err(SimError::WireOutOfRange { wire: w, n: s.n });
        }
    }
    let mut out = s.clone();
    let tm = 1 << target;
    for i in 0..s.amps.len() {
        if i & tm != 0 {
            continue;
        }
        let j = controls
            .iter()
            .enumerate()
            .fold(0, |acc, (bit, &w)| acc | ((i >> w & 1) << bit));
        let (sn, cs) = (angles[j] / 2.0).sin_cos();
        let (x, y) = (s.amps[i], s.amps[i | tm]);
        out.amps[i] = x * cs - y * sn;
        out.amps[i | tm] = x * sn + y * cs;
    }
    Ok(out)
}

/// The full `2^n × 2^n` unitary, column `k` being the image of `|k⟩`.
pub fn unitary_of(c: &Circuit) -> Result<DMatrix<C>, SimError> {
    StateVector::check_width(c.width(), UNITARY_MAX_QUBITS)?;
    let dim = 1 << c.width();
    let mut u = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let s = run(c, k)?;
        u.set_column(k, &nalgebra::DVector::from_column_slice(&s.amps));
    }
    Ok(u)
}

/// Permutation matrix sending wire `i` to wire `perm[i]`.
pub fn permutation_matrix(perm: &[usize]) -> DMatrix<C> {
    let dim = 1 << perm.len();
    let mut p = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        p[(permute_index(x, perm), x)] = ONE;
    }
    p
}

/// True if `u = e^{iφ}·v` within `tol` per entry.
pub fn equal_up_to_phase(u: &DMatrix<C>, v: &DMatrix<C>, tol: f64) -> bool {
    u.shape() == v.shape() && vectors_equal_up_to_phase(u.as_slice(), v.as_slice(), tol)
}

/// True if `P(perm)·u` equals `v` up to global phase within 1e-9.
pub fn equivalent_up_to_perm_phase(u: &DMatrix<C>, v: &DMatrix<C>, perm: &[usize]) -> bool {
    if u.shape() != v.shape() || u.nrows() != 1 << perm.len() {
        return false;
    }
    equal_up_to_phase(&(permutation_matrix(perm) * u), v, EQUIV_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::Angle;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn empty_circuit_keeps_zero_state() {
        let s = run(&Circuit::new(3), 0).unwrap();
        assert_eq!(s.amplitude(0), ONE);
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hadamard_superposition() {
        let s = run(&Circuit::from_gates(1, vec![Gate::H(0)]), 0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(0) - r).norm() < 1e-15);
        assert!((s.amplitude(1) - r).norm() < 1e-15);
    }

    #[test]
    fn full_turn_returns_to_start() {
        let c = Circuit::from_gates(1, vec![Gate::Ry(0, Angle::new(2.0 * PI / 5.0)); 5]);
        assert!((run(&c, 0).unwrap().probability(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn width_cap() {
        assert!(matches!(
            run(&Circuit::new(21), 0),
            Err(SimError::TooWide { width: 21, cap: 20 })
        ));
        assert!(unitary_of(&Circuit::new(11)).is_err());
    }

    #[test]
    fn little_endian_cx() {
        let u = unitary_of(&Circuit::from_gates(2, vec![Gate::CX(0, 1)])).unwrap();
        // control is bit 0: |01⟩ (index 1) ↔ |11⟩ (index 3)
        let mut expect = DMatrix::zeros(4, 4);
        expect[(0, 0)] = ONE;
        expect[(3, 1)] = ONE;
        expect[(2, 2)] = ONE;
        expect[(1, 3)] = ONE;
        assert_eq!(u, expect);
    }

    #[test]
    fn sx_squares_to_x() {
        let c = Circuit::from_gates(1, vec![Gate::SX(0), Gate::SX(0)]);
        let x = unitary_of(&Circuit::from_gates(1, vec![Gate::X(0)])).unwrap();
        assert!((unitary_of(&c).unwrap() - x).norm() < 1e-15);
    }

    #[test]
    fn sx_conjugation_turns_rz_into_ry() {
        let t = 0.731;
        let conj = Circuit::from_gates(1, vec![Gate::SX(0), Gate::Rz(0, Angle::new(t)), Gate::SXdg(0)]);
        let ry = Circuit::from_gates(1, vec![Gate::Ry(0, Angle::new(t))]);
        assert!(equal_up_to_phase(
            &unitary_of(&conj).unwrap(),
            &unitary_of(&ry).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn multiplexed_zero_angles_is_identity() {
        let s = run(&Circuit::from_gates(3, vec![Gate::H(0), Gate::H(1), Gate::H(2)]), 0).unwrap();
        let out = apply_multiplexed_ry(&s, &[0, 1], 2, &[0.0; 4]).unwrap();
        assert_eq!(out, s);
        assert_eq!(
            apply_multiplexed_ry(&s, &[0, 1], 2, &[0.0; 3]),
            Err(SimError::LengthMismatch { expected: 4, got: 3 })
        );
    }

    #[test]
    fn multiplexed_flip_under_set_control() {
        // wire 0 control set, target wire 1 at |0⟩
        let s = StateVector::basis(2, 0b01).unwrap();
        let out = apply_multiplexed_ry(&s, &[0], 1, &[0.0, PI]).unwrap();
        assert!((out.amplitude(0b11) - ONE).norm() < 1e-12);
        assert!(out.amplitude(0b01).norm() < 1e-12);
    }

    #[test]
    fn multiplexed_matches_controlled_circuit() {
        // Ry(a) on target, then a controlled Ry(b_i) per control built from CX
        let (a, b0, b1) = (0.3, 1.1, -2.4);
        let mut c = Circuit::from_gates(3, vec![Gate::H(0), Gate::H(1), Gate::Ry(2, Angle::new(a))]);
        for (ctrl, b) in [(0, b0), (1, b1)] {
            c.extend([
                Gate::Ry(2, Angle::new(b / 2.0)),
                Gate::CX(ctrl, 2),
                Gate::Ry(2, Angle::new(-b / 2.0)),
                Gate::CX(ctrl, 2),
            ]);
        }
        let sim = run(&c, 0).unwrap();
        let prep = run(&Circuit::from_gates(3, vec![Gate::H(0), Gate::H(1)]), 0).unwrap();
        let angles = [a, a + b0, a + b1, a + b0 + b1];
        let direct = apply_multiplexed_ry(&prep, &[0, 1], 2, &angles).unwrap();
        assert!(sim.equal_up_to_phase(&direct, 1e-12));
    }

    #[test]
    fn perm_phase_equivalence() {
        let id = unitary_of(&Circuit::new(2)).unwrap();
        let swap = unitary_of(&Circuit::from_gates(2, vec![Gate::Swap(0, 1)])).unwrap();
        assert!(equivalent_up_to_perm_phase(&id, &id, &[0, 1]));
        assert!(equivalent_up_to_perm_phase(&swap, &id, &[1, 0]));
        assert!(!equivalent_up_to_perm_phase(&swap, &id, &[0, 1]));
        let z = unitary_of(&Circuit::from_gates(2, vec![Gate::Rz(0, Angle::new(PI))])).unwrap();
        assert!(!equivalent_up_to_perm_phase(&z, &id, &[0, 1]));
    }

    #[test]
    fn permuted_state_tracks_wires() {
        let s = StateVector::basis(3, 0b001).unwrap();
        assert_eq!(s.permuted(&[2, 0, 1]).probability(0b100), 1.0);
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
        let w = 0..n;
        let pair = (0..n, 0..n - 1).prop_map(|(a, b)| (a, if b >= a { b + 1 } else { b }));
        let ang = -10.0f64..10.0;
        prop_oneof![
            w.clone().prop_map(Gate::H),
            w.clone().prop_map(Gate::SX),
            w.clone().prop_map(Gate::S),
            (w.clone(), ang.clone()).prop_map(|(q, a)| Gate::Rz(q, Angle::new(a))),
            (w, ang.clone()).prop_map(|(q, a)| Gate::Ry(q, Angle::new(a))),
            pair.clone().prop_map(|(a, b)| Gate::CX(a, b)),
            (pair.clone(), ang.clone()).prop_map(|((a, b), t)| Gate::crz(a, b, t)),
            (pair.clone(), ang).prop_map(|((a, b), t)| Gate::CP(a, b, Angle::new(t))),
            pair.prop_map(|(a, b)| Gate::Swap(a, b)),
        ]
    }

    proptest! {
        #[test]
        fn unitarity(gates in prop::collection::vec(arb_gate(3), 0..30)) {
            let u = unitary_of(&Circuit::from_gates(3, gates)).unwrap();
            let err = (u.adjoint() * &u - DMatrix::<C>::identity(8, 8)).norm();
            prop_assert!(err < 1e-10);
        }

        #[test]
        fn composition_is_sequential(
            a in prop::collection::vec(arb_gate(4), 0..20),
            b in prop::collection::vec(arb_gate(4), 0..20),
            init in 0usize..16,
        ) {
            let (ca, cb) = (Circuit::from_gates(4, a), Circuit::from_gates(4, b));
            let joint = run(&ca.compose(&cb), init).unwrap();
            let mut step = run(&ca, init).unwrap();
            run_on(&cb, &mut step).unwrap();
            prop_assert!(joint.amplitudes().iter().zip(step.amplitudes()).all(|(x, y)| (x - y).norm() < 1e-10));
        }

        #[test]
        fn inverse_undoes(gates in prop::collection::vec(arb_gate(3), 20)) {
            let c = Circuit::from_gates(3, gates);
            let u = unitary_of(&c.compose(&c.inverse())).unwrap();
            prop_assert!(equal_up_to_phase(&u, &DMatrix::identity(8, 8), 1e-10));
        }
    }

    #[test]
    fn long_sequence_preserves_norm() {
        let mut c = Circuit::new(5);
        for i in 0..10_000usize {
            let q = i % 5;
            c.push(match i % 4 {
                0 => Gate::H(q),
                1 => Gate::CX(q, (q + 1) % 5),
                2 => Gate::Ry(q, Angle::new(i as f64 * 0.37)),
                _ => Gate::crz(q, (q + 2) % 5, i as f64 * 0.11),
            });
        }
        assert!((run(&c, 3).unwrap().norm() - 1.0).abs() < 1e-10);
    }
}
