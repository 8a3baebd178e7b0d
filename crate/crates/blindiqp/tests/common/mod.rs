//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_8;

use blindiqp::gf2lin::BinMatrix;
use blindiqp::graphs::ExtendedIqpGraph;
use blindiqp::protocol::Instance;
use blindiqp::qsim::{PureState, Qubit};
use blindiqp::xprog::XProgram;
use num_complex::Complex64 as C;

pub fn matrix(rows: &[&[u8]]) -> BinMatrix {
    BinMatrix::from_rows(rows).unwrap()
}

/// Two ancillas on three primaries, one ancilla touching `p0, p2`.
pub fn figure_program() -> XProgram {
    XProgram::new(matrix(&[&[1, 0, 1], &[0, 1, 0]]), FRAC_PI_8).unwrap()
}

pub fn figure_graph() -> ExtendedIqpGraph {
    ExtendedIqpGraph::new(vec![vec![-1, 0, 1], vec![0, 1, -1]]).unwrap()
}

pub fn figure_instance() -> Instance {
    Instance::new(figure_program(), figure_graph()).unwrap()
}

/// One ancilla, one primary, one bridge.
pub fn minimal_instance() -> Instance {
    let xp = XProgram::new(matrix(&[&[1]]), FRAC_PI_8).unwrap();
    Instance::new(xp, ExtendedIqpGraph::new(vec![vec![-1]]).unwrap()).unwrap()
}

/// Frozen output distribution of the figure program at π/8: the two
/// ancillas act on disjoint primaries, so the outcome factorises into
/// `cos²θ |00⟩ + sin²θ |11⟩` on `(p0, p2)` and `cos²θ |0⟩ + sin²θ |1⟩` on `p1`.
pub const FIGURE_DISTRIBUTION: [f64; 8] = [
    0.728_553_390_593_273_7,
    0.0,
    0.125,
    0.0,
    0.0,
    0.125,
    0.0,
    0.021_446_609_406_726_214,
];

/// `|⟨x| exp(iθ Σ_i X^{q_i}) |0⟩|²`, applying the commuting factors
/// `cos θ + i sin θ X^{q_i}` one row at a time to a dense vector.
pub fn dense_distribution(q: &BinMatrix, theta: f64) -> Vec<f64> {
    let dim = 1usize << q.cols();
    let mut psi = vec![C::new(0.0, 0.0); dim];
    psi[0] = C::new(1.0, 0.0);
    let (c, s) = (C::new(theta.cos(), 0.0), C::new(0.0, theta.sin()));
    for i in 0..q.rows() {
        let mask: usize = (0..q.cols()).filter(|&j| q.get(i, j)).map(|j| 1 << j).sum();
        let mut next = vec![C::new(0.0, 0.0); dim];
        for (x, &a) in psi.iter().enumerate() {
            next[x] += c * a;
            next[x ^ mask] += s * a;
        }
        psi = next;
    }
    psi.iter().map(|a| a.norm_sqr()).collect()
}

/// `P(x·s = 0)` from a probability vector indexed with bit `j` = `x_j`.
pub fn parity_bias(probs: &[f64], s_mask: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .filter(|(x, _)| (x & s_mask).count_ones() % 2 == 0)
        .map(|(_, p)| p)
        .sum()
}

/// `E_Q` applied amplitude by amplitude as a diagonal sign.
pub fn entangle_by_phase(state: &PureState, q: &BinMatrix) -> PureState {
    let labels = state.labels().to_vec();
    let pos = |target: Qubit| labels.iter().position(|&l| l == target).expect("qubit present");
    let mut pairs = Vec::new();
    for i in 0..q.rows() {
        for j in 0..q.cols() {
            if q.get(i, j) {
                pairs.push((pos(Qubit::Ancillary(i)), pos(Qubit::Primary(j))));
            }
        }
    }
    let amps: Vec<C> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(x, &a)| {
            let odd = pairs.iter().filter(|&&(u, v)| (x >> u) & (x >> v) & 1 == 1).count() % 2;
            if odd == 1 {
                -a
            } else {
                a
            }
        })
        .collect();
    PureState::from_amplitudes(labels, amps).unwrap()
}

/// Product of single-qubit states with Bloch angles `(t, φ)`.
pub fn product_state(parts: &[(Qubit, f64, f64)]) -> PureState {
    let mut out = PureState::empty();
    for &(q, t, ph) in parts {
        let one = PureState::from_amplitudes(
            vec![q],
            vec![C::new((t / 2.0).cos(), 0.0), C::from_polar((t / 2.0).sin(), ph)],
        )
        .unwrap();
        out = out.tensor(&one).unwrap();
    }
    out
}
