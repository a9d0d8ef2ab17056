//! Exact circuit equalities used by the routers.
//!
//! Conventions: `Rz(θ) = diag(e^{-iθ/2}, e^{iθ/2})`, `CRz(θ) = I ⊕ Rz(θ)`,
//! `CP(θ) = diag(1, 1, 1, e^{iθ})`. Zero-angle `Rz` gates are never emitted.

use crate::angle::Angle;
use crate::circuit::{Circuit, Gate, Space};

fn rz(out: &mut Vec<Gate>, q: usize, a: Angle) {
    if !a.is_zero() {
        out.push(Gate::Rz(q, a));
    }
}

/// `CRz` from its stored half-angle: 2 CX, exact.
pub fn crz_from_half(control: usize, target: usize, half: Angle) -> Vec<Gate> {
    let mut out = Vec::with_capacity(4);
    rz(&mut out, target, half);
    out.push(Gate::CX(control, target));
    rz(&mut out, target, -half);
    out.push(Gate::CX(control, target));
    out
}

/// `CRz(theta)` as `Rz(θ/2) · CX · Rz(-θ/2) · CX` on the target.
pub fn decompose_crz(control: usize, target: usize, theta: f64) -> Vec<Gate> {
    crz_from_half(control, target, Angle::new(theta / 2.0))
}

pub fn decompose_swap(a: usize, b: usize) -> Vec<Gate> {
    vec![Gate::CX(a, b), Gate::CX(b, a), Gate::CX(a, b)]
}

/// `CRz` followed by `SWAP` on the same pair, 3 CX. The two wires exchange
/// their contents.
pub fn fuse_crz_half_swap(control: usize, target: usize, half: Angle) -> Vec<Gate> {
    let mut out = Vec::with_capacity(5);
    rz(&mut out, target, half);
    out.push(Gate::CX(control, target));
    rz(&mut out, target, -half);
    out.push(Gate::CX(target, control));
    out.push(Gate::CX(control, target));
    out
}

pub fn fuse_crz_swap(control: usize, target: usize, theta: f64) -> Vec<Gate> {
    fuse_crz_half_swap(control, target, Angle::new(theta / 2.0))
}

/// `CP(theta)` in place with 2 CX; exact up to global phase.
pub fn decompose_cp(control: usize, target: usize, theta: Angle) -> Vec<Gate> {
    let h = theta.half();
    let mut out = Vec::with_capacity(5);
    rz(&mut out, control, h);
    rz(&mut out, target, h);
    out.push(Gate::CX(control, target));
    rz(&mut out, target, -h);
    out.push(Gate::CX(control, target));
    out
}

/// `CP(theta)` followed by `SWAP`, 3 CX; exact up to global phase.
pub fn fuse_cp_swap(control: usize, target: usize, theta: Angle) -> Vec<Gate> {
    let h = theta.half();
    let mut out = Vec::with_capacity(6);
    rz(&mut out, control, h);
    rz(&mut out, target, h);
    out.push(Gate::CX(control, target));
    rz(&mut out, target, -h);
    out.push(Gate::CX(target, control));
    out.push(Gate::CX(control, target));
    out
}

/// Expands one gate into the hardware basis.
pub fn decompose_gate(g: &Gate) -> Vec<Gate> {
    match *g {
        Gate::CRz(c, t, half) => crz_from_half(c, t, half),
        Gate::CP(c, t, a) => decompose_cp(c, t, a),
        Gate::Swap(a, b) => decompose_swap(a, b),
        g => vec![g],
    }
}

fn same_pair(a: (usize, usize), b: (usize, usize)) -> bool {
    a == b || a == (b.1, b.0)
}

/// Expands every composite gate, fusing a `CRz`/`CP` immediately followed by
/// a `SWAP` on the same pair into the 3-CX form.
pub fn decompose_fused(gates: &[Gate]) -> Vec<Gate> {
    let tagged: Vec<(Gate, ())> = gates.iter().map(|&g| (g, ())).collect();
    decompose_fused_tagged(&tagged).into_iter().map(|(g, _)| g).collect()
}

/// [`decompose_fused`] over tagged gates; a fused pair keeps the tag of the
/// rotation.
pub fn decompose_fused_tagged<T: Clone>(items: &[(Gate, T)]) -> Vec<(Gate, T)> {
    let mut out = Vec::with_capacity(items.len() * 3);
    let mut i = 0;
    while i < items.len() {
        let next_swap = match items.get(i + 1) {
            Some(&(Gate::Swap(a, b), _)) => Some((a, b)),
            _ => None,
        };
        let (g, tag) = &items[i];
        let (expanded, used) = match (*g, next_swap) {
            (Gate::CRz(c, t, h), Some(s)) if same_pair((c, t), s) => (fuse_crz_half_swap(c, t, h), 2),
            (Gate::CP(c, t, a), Some(s)) if same_pair((c, t), s) => (fuse_cp_swap(c, t, a), 2),
            (g, _) => (decompose_gate(&g), 1),
        };
        out.extend(expanded.into_iter().map(|g| (g, tag.clone())));
        i += used;
    }
    out
}

/// [`decompose_fused`] over a whole circuit, tagging the result physical.
pub fn decompose_circuit(c: &Circuit) -> Circuit {
    let mut out = Circuit::from_gates(c.width(), decompose_fused(c.gates())).set_space(Space::Physical);
    if let Some(l) = c.layout() {
        out = out.set_layout(l.clone());
    }
    out
}

/// Merges two `CRz` gates on the same ordered pair.
pub fn merge_crz_pair(a: &Gate, b: &Gate) -> Option<Gate> {
    match (*a, *b) {
        (Gate::CRz(c1, t1, h1), Gate::CRz(c2, t2, h2)) if (c1, t1) == (c2, t2) => Some(Gate::CRz(c1, t1, h1 + h2)),
        _ => None,
    }
}

/// Single left-to-right pass with per-wire stacks of live output indices.
/// `combine(prev, next)` returns `None` to keep both, `Some(None)` to drop
/// both, or `Some(Some(g))` to replace `prev` by `g` and drop `next`.
/// Only gates that are each other's latest neighbour on every wire they
/// touch are offered, so every step is a valid local rewrite; the pass
/// reaches the same fixpoint as repeated rescanning.
fn peephole<T: Clone>(
    width: usize,
    items: &[(Gate, T)],
    combine: impl Fn(&Gate, &Gate) -> Option<Option<Gate>>,
) -> Vec<(Gate, T)> {
    let mut out: Vec<Option<(Gate, T)>> = Vec::with_capacity(items.len());
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); width];
    for (g, tag) in items {
        let wires: Vec<usize> = g.wires().iter().collect();
        let prev = stacks[wires[0]].last().copied();
        let shared = prev.filter(|&p| {
            wires.iter().all(|&w| stacks[w].last() == Some(&p))
                && out[p].as_ref().is_some_and(|(pg, _)| {
                    pg.wires().iter().count() == wires.len() && pg.wires().iter().all(|w| wires.contains(&w))
                })
        });
        if let Some(p) = shared {
            let pg = out[p].as_ref().unwrap().0;
            match combine(&pg, g) {
                Some(None) => {
                    out[p] = None;
                    for &w in &wires {
                        stacks[w].pop();
                    }
                    continue;
                }
                Some(Some(merged)) => {
                    out[p].as_mut().unwrap().0 = merged;
                    continue;
                }
                None => {}
            }
        }
        let idx = out.len();
        out.push(Some((*g, tag.clone())));
        for &w in &wires {
            stacks[w].push(idx);
        }
    }
    out.into_iter().flatten().collect()
}

/// [`cancel_cx_pairs`] over tagged gates; tags of survivors are kept.
pub fn cancel_cx_pairs_tagged<T: Clone>(width: usize, items: &[(Gate, T)]) -> Vec<(Gate, T)> {
    peephole(width, items, |a, b| match (a, b) {
        (Gate::CX(..), Gate::CX(..)) if a == b => Some(None),
        _ => None,
    })
}

/// Removes `CX(a,b) CX(a,b)` pairs with nothing on `a` or `b` in between,
/// until no such pair remains.
pub fn cancel_cx_pairs(c: &Circuit) -> Circuit {
    let tagged: Vec<(Gate, ())> = c.gates().iter().map(|&g| (g, ())).collect();
    rebuild(c, cancel_cx_pairs_tagged(c.width(), &tagged))
}

/// Merges consecutive `CRz` on the same `(control, target)` with nothing on
/// either wire in between.
pub fn merge_adjacent_crz(c: &Circuit) -> Circuit {
    let tagged: Vec<(Gate, ())> = c.gates().iter().map(|&g| (g, ())).collect();
    rebuild(c, peephole(c.width(), &tagged, |a, b| merge_crz_pair(a, b).map(Some)))
}

fn rebuild<T>(c: &Circuit, items: Vec<(Gate, T)>) -> Circuit {
    let mut out = Circuit::from_gates(c.width(), items.into_iter().map(|(g, _)| g).collect()).set_space(c.space());
    if let Some(l) = c.layout() {
        out = out.set_layout(l.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{equal_up_to_phase, unitary_of};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn u(width: usize, gates: Vec<Gate>) -> nalgebra::DMatrix<num_complex::Complex64> {
        unitary_of(&Circuit::from_gates(width, gates)).unwrap()
    }

    #[test]
    fn zero_angle_crz_is_two_cx() {
        let g = decompose_crz(0, 1, 0.0);
        assert_eq!(g, vec![Gate::CX(0, 1), Gate::CX(0, 1)]);
    }

    #[test]
    fn cx_counts() {
        let count = |v: &[Gate]| v.iter().filter(|g| matches!(g, Gate::CX(..))).count();
        for t in [0.0, 0.3, PI, 5.9] {
            assert_eq!(count(&decompose_crz(0, 1, t)), 2);
            assert_eq!(count(&fuse_crz_swap(0, 1, t)), 3);
            assert_eq!(count(&decompose_cp(0, 1, Angle::new(t))), 2);
            assert_eq!(count(&fuse_cp_swap(0, 1, Angle::new(t))), 3);
        }
        assert_eq!(count(&decompose_swap(0, 1)), 3);
    }

    #[test]
    fn zero_angle_fusions_are_plain_swaps() {
        assert_eq!(
            fuse_crz_swap(0, 1, 0.0),
            vec![Gate::CX(0, 1), Gate::CX(1, 0), Gate::CX(0, 1)]
        );
        assert_eq!(fuse_cp_swap(0, 1, Angle::ZERO), decompose_swap(0, 1));
    }

    #[test]
    fn swap_moves_basis_state() {
        let s = crate::sim::run(&Circuit::from_gates(2, decompose_swap(0, 1)), 0b01).unwrap();
        assert_eq!(s.probability(0b10), 1.0);
    }

    #[test]
    fn crz_wraps_with_period_four_pi() {
        let a = u(2, decompose_crz(0, 1, 1.0));
        let b = u(2, decompose_crz(0, 1, 1.0 + 2.0 * PI));
        assert!(!equal_up_to_phase(&a, &b, 1e-9));
        let c = u(2, decompose_crz(0, 1, 1.0 + 4.0 * PI));
        assert!(equal_up_to_phase(&a, &c, 1e-12));
    }

    #[test]
    fn fused_decomposition_of_circuit() {
        let gates = [
            Gate::crz(0, 1, 0.4),
            Gate::Swap(1, 0),
            Gate::CP(1, 2, Angle::new(0.2)),
            Gate::Swap(1, 2),
            Gate::Swap(0, 1),
        ];
        let out = decompose_fused(&gates);
        assert_eq!(out.iter().filter(|g| matches!(g, Gate::CX(..))).count(), 9);
        assert!(equal_up_to_phase(&u(3, out), &u(3, gates.to_vec()), 1e-12));
    }

    #[test]
    fn cancel_examples() {
        let th = Angle::new(0.7);
        let c = Circuit::from_gates(3, vec![Gate::CX(0, 1), Gate::CX(0, 1)]);
        assert!(cancel_cx_pairs(&c).is_empty());
        let c = Circuit::from_gates(3, vec![Gate::CX(0, 1), Gate::Rz(2, th), Gate::CX(0, 1)]);
        assert_eq!(cancel_cx_pairs(&c).gates(), &[Gate::Rz(2, th)]);
        let c = Circuit::from_gates(3, vec![Gate::CX(0, 1), Gate::Rz(1, th), Gate::CX(0, 1)]);
        assert_eq!(cancel_cx_pairs(&c).gates(), c.gates());
        let c = Circuit::from_gates(2, vec![Gate::CX(0, 1), Gate::CX(1, 0)]);
        assert_eq!(cancel_cx_pairs(&c).gates(), c.gates());
    }

    #[test]
    fn cancel_cascades() {
        let c = Circuit::from_gates(3, vec![Gate::CX(0, 1), Gate::CX(1, 2), Gate::CX(1, 2), Gate::CX(0, 1)]);
        assert!(cancel_cx_pairs(&c).is_empty());
    }

    #[test]
    fn merge_examples() {
        let (a, b) = (0.5, 1.25);
        let c = Circuit::from_gates(2, vec![Gate::crz(0, 1, a), Gate::crz(0, 1, b)]);
        let m = merge_adjacent_crz(&c);
        assert_eq!(m.len(), 1);
        assert!(m.gates()[0].approx_eq(&Gate::crz(0, 1, a + b)));

        let c = Circuit::from_gates(2, vec![Gate::crz(0, 1, a), Gate::H(0), Gate::crz(0, 1, b)]);
        assert_eq!(merge_adjacent_crz(&c).gates(), c.gates());
        let c = Circuit::from_gates(2, vec![Gate::crz(0, 1, a), Gate::crz(1, 0, b)]);
        assert_eq!(merge_adjacent_crz(&c).len(), 2);
    }

    #[test]
    fn merge_across_wrap_is_exact() {
        let (a, b) = (5.0, 4.0);
        let c = Circuit::from_gates(2, vec![Gate::crz(0, 1, a), Gate::crz(0, 1, b)]);
        let m = merge_adjacent_crz(&c);
        assert_eq!(m.len(), 1);
        assert!(equal_up_to_phase(
            &unitary_of(&m).unwrap(),
            &unitary_of(&c).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn merge_saves_two_cx_after_decomposition() {
        let c = Circuit::from_gates(2, vec![Gate::crz(0, 1, 0.3), Gate::crz(0, 1, 0.9)]);
        let before = decompose_circuit(&c).cnot_count();
        let after = decompose_circuit(&merge_adjacent_crz(&c)).cnot_count();
        assert_eq!(before - after, 2);
    }

    fn pair(n: usize) -> impl Strategy<Value = (usize, usize)> {
        (0..n, 0..n - 1).prop_map(|(a, b)| (a, if b >= a { b + 1 } else { b }))
    }

    fn arb_logical(n: usize) -> impl Strategy<Value = Gate> {
        let ang = -7.0f64..7.0;
        prop_oneof![
            (0..n).prop_map(Gate::H),
            (0..n, ang.clone()).prop_map(|(q, a)| Gate::Rz(q, Angle::new(a))),
            pair(n).prop_map(|(a, b)| Gate::CX(a, b)),
            pair(n).prop_map(|(a, b)| Gate::CX(a, b)),
            (pair(n), ang.clone()).prop_map(|((a, b), t)| Gate::crz(a, b, t)),
            (pair(n), ang.clone()).prop_map(|((a, b), t)| Gate::crz(a, b, t)),
            (pair(n), ang).prop_map(|((a, b), t)| Gate::CP(a, b, Angle::new(t))),
            pair(n).prop_map(|(a, b)| Gate::Swap(a, b)),
        ]
    }

    /// Repeated rescan until nothing changes, as a reference for the one-pass version.
    fn naive_cancel(mut gates: Vec<Gate>) -> Vec<Gate> {
        'outer: loop {
            for i in 0..gates.len() {
                let Gate::CX(a, b) = gates[i] else { continue };
                for j in i + 1..gates.len() {
                    if gates[j] == gates[i] {
                        gates.remove(j);
                        gates.remove(i);
                        continue 'outer;
                    }
                    if gates[j].touches(a) || gates[j].touches(b) {
                        break;
                    }
                }
            }
            return gates;
        }
    }

    proptest! {
        #[test]
        fn rules_match_targets(t in -20.0f64..20.0) {
            let crz = Gate::crz(0, 1, t);
            let cp = Gate::CP(0, 1, Angle::new(t));
            prop_assert!(equal_up_to_phase(&u(2, decompose_crz(0, 1, t)), &u(2, vec![crz]), 1e-12));
            prop_assert!(equal_up_to_phase(&u(2, fuse_crz_swap(0, 1, t)), &u(2, vec![crz, Gate::Swap(0, 1)]), 1e-12));
            prop_assert!(equal_up_to_phase(&u(2, decompose_cp(0, 1, Angle::new(t))), &u(2, vec![cp]), 1e-12));
            prop_assert!(equal_up_to_phase(&u(2, fuse_cp_swap(0, 1, Angle::new(t))), &u(2, vec![cp, Gate::Swap(0, 1)]), 1e-12));
        }

        #[test]
        fn fused_crz_swap_undone_with_roles_exchanged(t in -20.0f64..20.0) {
            let mut g = fuse_crz_swap(0, 1, t);
            g.extend(fuse_crz_swap(1, 0, -t));
            prop_assert!(equal_up_to_phase(&u(2, g), &u(2, vec![]), 1e-12));
        }

        #[test]
        fn peepholes_preserve_unitary(gates in prop::collection::vec(arb_logical(4), 0..40)) {
            let c = Circuit::from_gates(4, gates);
            let before = unitary_of(&c).unwrap();
            let merged = merge_adjacent_crz(&c);
            prop_assert!(equal_up_to_phase(&unitary_of(&merged).unwrap(), &before, 1e-10));
            let phys = decompose_circuit(&merged);
            let cancelled = cancel_cx_pairs(&phys);
            prop_assert!(equal_up_to_phase(&unitary_of(&cancelled).unwrap(), &before, 1e-10));
            prop_assert!(cancelled.cnot_count() <= phys.cnot_count());
            prop_assert!(phys.cnot_count() <= decompose_circuit(&c).cnot_count());
        }

        #[test]
        fn one_pass_cancel_matches_rescan(gates in prop::collection::vec(
            prop_oneof![pair(3).prop_map(|(a, b)| Gate::CX(a, b)), (0..3usize).prop_map(Gate::H)], 0..40)) {
            let c = Circuit::from_gates(3, gates.clone());
            prop_assert_eq!(cancel_cx_pairs(&c).into_gates(), naive_cancel(gates));
        }
    }
}
