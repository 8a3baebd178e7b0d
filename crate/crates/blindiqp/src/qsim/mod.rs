//! Dense state-vector simulation over labelled qubits.
//!
//! A [`PureState`] stores `2^n` amplitudes; label `k` is bit `k` of the
//! amplitude index. Measurement removes the measured qubit, so a state always
//! holds exactly the qubits that are still alive.

mod register;

pub mod identities;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub use register::Register;

pub type C = Complex64;
/// A single-qubit operator, row-major.
pub type Mat2 = [[C; 2]; 2];

/// Branches with probability below this are dropped by exhaustive measurement.
pub const PRUNE: f64 = 1e-14;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Which protocol register a qubit belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Primary,
    Ancillary,
    Bridge,
}

/// Qubit labels. Indices are zero-based; display is one-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Qubit {
    Primary(usize),
    Ancillary(usize),
    Bridge(usize),
    /// The client's half of an EPR pair whose other half has the given role and index.
    ClientHalf(Role, usize),
}

impl Qubit {
    pub fn is_client_half(self) -> bool {
        matches!(self, Qubit::ClientHalf(..))
    }

    /// The client half paired with a server qubit, or the server qubit paired with a client half.
    pub fn partner(self) -> Qubit {
        match self {
            Qubit::Primary(j) => Qubit::ClientHalf(Role::Primary, j),
            Qubit::Ancillary(i) => Qubit::ClientHalf(Role::Ancillary, i),
            Qubit::Bridge(k) => Qubit::ClientHalf(Role::Bridge, k),
            Qubit::ClientHalf(Role::Primary, j) => Qubit::Primary(j),
            Qubit::ClientHalf(Role::Ancillary, i) => Qubit::Ancillary(i),
            Qubit::ClientHalf(Role::Bridge, k) => Qubit::Bridge(k),
        }
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Qubit::Primary(j) => write!(f, "p{}", j + 1),
            Qubit::Ancillary(i) => write!(f, "a{}", i + 1),
            Qubit::Bridge(k) => write!(f, "b{}", k + 1),
            Qubit::ClientHalf(_, _) => write!(f, "c:{}", self.partner()),
        }
    }
}

impl Serialize for Qubit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Fixed single-qubit gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    /// Principal square root of `Y`, `(1+i)/2 [[1,-1],[1,1]]`.
    SqrtY,
}

impl Gate {
    pub fn matrix(self) -> Mat2 {
        let h = C::new(FRAC_1_SQRT_2, 0.0);
        let r = C::new(0.5, 0.5);
        match self {
            Gate::X => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Y => [[ZERO, -I], [I, ZERO]],
            Gate::Z => [[ONE, ZERO], [ZERO, -ONE]],
            Gate::H => [[h, h], [h, -h]],
            Gate::S => [[ONE, ZERO], [ZERO, I]],
            Gate::Sdg => [[ONE, ZERO], [ZERO, -I]],
            Gate::SqrtY => [[r, -r], [r, r]],
        }
    }
}

/// `S^k` for `k` taken mod 4.
pub fn s_power(k: u8) -> Mat2 {
    [[ONE, ZERO], [ZERO, I.powu(u32::from(k % 4))]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn mat_pow(m: &Mat2, k: u32) -> Mat2 {
    let mut out = [[ONE, ZERO], [ZERO, ONE]];
    for _ in 0..k {
        out = mat_mul(&out, m);
    }
    out
}

pub fn dagger(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

fn apply_to(m: &Mat2, v: [C; 2]) -> [C; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn plus() -> [C; 2] {
    let h = C::new(FRAC_1_SQRT_2, 0.0);
    [h, h]
}

fn minus() -> [C; 2] {
    let h = C::new(FRAC_1_SQRT_2, 0.0);
    [h, -h]
}

/// Orthonormal single-qubit measurement bases. Outcome 0 is the first vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Basis {
    Computational,
    /// `{|+⟩, |−⟩}`.
    Hadamard,
    /// `{(|0⟩ + i|1⟩)/√2, (|0⟩ − i|1⟩)/√2}`.
    PauliY,
    /// `|0_θ⟩ = (e^{-iθ}|+⟩ + e^{iθ}|−⟩)/√2`, `|1_θ⟩ = (e^{-iθ}|+⟩ − e^{iθ}|−⟩)/√2`.
    Theta(f64),
    /// `S^k {|+⟩, |−⟩}`.
    SRotatedHadamard(u8),
    /// `S^k {|0_θ⟩, |1_θ⟩}`.
    SRotatedTheta(u8, f64),
    /// `(√Y)^d {|0⟩, |1⟩}`.
    SqrtYRotated(u8),
}

impl Basis {
    /// The two basis vectors in the computational basis.
    pub fn vectors(&self) -> [[C; 2]; 2] {
        match *self {
            Basis::Computational => [[ONE, ZERO], [ZERO, ONE]],
            Basis::Hadamard => [plus(), minus()],
            Basis::PauliY => {
                let h = FRAC_1_SQRT_2;
                [[C::new(h, 0.0), C::new(0.0, h)], [C::new(h, 0.0), C::new(0.0, -h)]]
            }
            Basis::Theta(t) => {
                let (c, s) = (t.cos(), t.sin());
                [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]]
            }
            Basis::SRotatedHadamard(k) => {
                let m = s_power(k);
                [apply_to(&m, plus()), apply_to(&m, minus())]
            }
            Basis::SRotatedTheta(k, t) => {
                let m = s_power(k);
                let [v0, v1] = Basis::Theta(t).vectors();
                [apply_to(&m, v0), apply_to(&m, v1)]
            }
            Basis::SqrtYRotated(d) => {
                let m = mat_pow(&Gate::SqrtY.matrix(), u32::from(d));
                [apply_to(&m, [ONE, ZERO]), apply_to(&m, [ZERO, ONE])]
            }
        }
    }

    /// The unitary taking basis vector `o` to `|o⟩`.
    fn to_computational(self) -> Mat2 {
        let [v0, v1] = self.vectors();
        [[v0[0].conj(), v0[1].conj()], [v1[0].conj(), v1[1].conj()]]
    }
}

/// Single-qubit preparations used by the protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StateSpec {
    Zero,
    One,
    Plus,
    Minus,
    PlusY,
    MinusY,
    /// `Z^z S^s |+⟩`, `s` mod 4.
    ZsPlus { z: u8, s: u8 },
    /// `Y^y (√Y)^d |0⟩`.
    YSqrtYZero { y: u8, d: u8 },
}

impl StateSpec {
    pub fn amplitudes(self) -> [C; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            StateSpec::Zero => [ONE, ZERO],
            StateSpec::One => [ZERO, ONE],
            StateSpec::Plus => plus(),
            StateSpec::Minus => minus(),
            StateSpec::PlusY => [C::new(h, 0.0), C::new(0.0, h)],
            StateSpec::MinusY => [C::new(h, 0.0), C::new(0.0, -h)],
            StateSpec::ZsPlus { z, s } => {
                let m = mat_mul(&mat_pow(&Gate::Z.matrix(), u32::from(z)), &s_power(s));
                apply_to(&m, plus())
            }
            StateSpec::YSqrtYZero { y, d } => {
                let m = mat_mul(
                    &mat_pow(&Gate::Y.matrix(), u32::from(y)),
                    &mat_pow(&Gate::SqrtY.matrix(), u32::from(d)),
                );
                apply_to(&m, [ONE, ZERO])
            }
        }
    }
}

/// One outcome of an exhaustively enumerated measurement.
#[derive(Clone, Debug)]
pub struct Branch {
    pub prob: f64,
    pub outcome: u8,
    pub state: PureState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    labels: Vec<Qubit>,
    amps: Vec<C>,
}

impl PureState {
    /// The zero-qubit state, amplitude 1.
    pub fn empty() -> Self {
        Self {
            labels: Vec::new(),
            amps: vec![ONE],
        }
    }

    /// Product state of the given single-qubit preparations.
    pub fn prepare(specs: &[(Qubit, StateSpec)]) -> Result<Self> {
        let mut out = Self::empty();
        for &(q, spec) in specs {
            let [a0, a1] = spec.amplitudes();
            out = out.tensor(&Self {
                labels: vec![q],
                amps: vec![a0, a1],
            })?;
        }
        Ok(out)
    }

    /// `(|00⟩ + |11⟩)/√2` on `(a, b)`.
    pub fn bell_pair(a: Qubit, b: Qubit) -> Result<Self> {
        if a == b {
            return Err(Error::Invalid(format!("bell pair on repeated label {a}")));
        }
        let h = C::new(FRAC_1_SQRT_2, 0.0);
        Ok(Self {
            labels: vec![a, b],
            amps: vec![h, ZERO, ZERO, h],
        })
    }

    pub fn from_amplitudes(labels: Vec<Qubit>, amps: Vec<C>) -> Result<Self> {
        if amps.len() != 1usize << labels.len() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {} qubits",
                amps.len(),
                labels.len()
            )));
        }
        check_distinct(&labels)?;
        Ok(Self { labels, amps })
    }

    pub fn labels(&self) -> &[Qubit] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn position(&self, q: Qubit) -> Option<usize> {
        self.labels.iter().position(|&l| l == q)
    }

    fn pos(&self, q: Qubit) -> Result<usize> {
        self.position(q)
            .ok_or_else(|| Error::Invalid(format!("qubit {q} is not in the state")))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `self ⊗ other`; the labels of `other` take the higher bits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        check_distinct(&labels)?;
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for b in &other.amps {
            for a in &self.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { labels, amps })
    }

    pub fn apply_matrix(&mut self, q: Qubit, m: &Mat2) -> Result<()> {
        let k = self.pos(q)?;
        self.apply_matrix_at(k, m);
        Ok(())
    }

    fn apply_matrix_at(&mut self, k: usize, m: &Mat2) {
        let bit = 1usize << k;
        for base in 0..self.amps.len() {
            if base & bit == 0 {
                let (a0, a1) = (self.amps[base], self.amps[base | bit]);
                self.amps[base] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[base | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_gate(&mut self, q: Qubit, g: Gate) -> Result<()> {
        self.apply_matrix(q, &g.matrix())
    }

    /// Controlled-Z: negate amplitudes where both qubits are 1.
    pub fn apply_cz(&mut self, a: Qubit, b: Qubit) -> Result<()> {
        let (ka, kb) = (self.pos(a)?, self.pos(b)?);
        if ka == kb {
            return Err(Error::Invalid(format!("CZ on repeated qubit {a}")));
        }
        let mask = (1usize << ka) | (1usize << kb);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// Probability of each outcome of measuring `q` in `basis`.
    pub fn outcome_probabilities(&self, q: Qubit, basis: Basis) -> Result<[f64; 2]> {
        let mut s = self.clone();
        let k = s.pos(q)?;
        s.apply_matrix_at(k, &basis.to_computational());
        let m = s.marginal(&[k]);
        Ok([m[0], m[1]])
    }

    /// Sample a measurement of `q`; the returned state no longer contains `q`.
    pub fn measure(&self, q: Qubit, basis: Basis, rng: &mut Rng) -> Result<(u8, PureState)> {
        let mut s = self.clone();
        let k = s.pos(q)?;
        s.apply_matrix_at(k, &basis.to_computational());
        let m = s.marginal(&[k]);
        let outcome = u8::from(rng.gen::<f64>() * (m[0] + m[1]) >= m[0]);
        Ok((outcome, s.project(&[k], outcome as usize)))
    }

    /// Every outcome of measuring `q` with probability at least [`PRUNE`].
    pub fn measure_branches(&self, q: Qubit, basis: Basis) -> Result<Vec<Branch>> {
        let mut s = self.clone();
        let k = s.pos(q)?;
        s.apply_matrix_at(k, &basis.to_computational());
        let m = s.marginal(&[k]);
        Ok((0..2)
            .filter(|&o| m[o] >= PRUNE)
            .map(|o| Branch {
                prob: m[o],
                outcome: o as u8,
                state: s.project(&[k], o),
            })
            .collect())
    }

    /// Rotate qubit at bit `k` so that `basis` becomes the computational basis.
    pub(crate) fn rotate_for_measurement(&mut self, k: usize, basis: Basis) {
        self.apply_matrix_at(k, &basis.to_computational());
    }

    /// Marginal probabilities of the bits at `positions`; outcome bit `t` is `positions[t]`.
    pub(crate) fn marginal(&self, positions: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << positions.len()];
        for (i, a) in self.amps.iter().enumerate() {
            out[gather(i, positions)] += a.norm_sqr();
        }
        out
    }

    /// Keep the amplitudes whose bits at `positions` equal `outcome`, drop those
    /// qubits and renormalise.
    pub(crate) fn project(&self, positions: &[usize], outcome: usize) -> PureState {
        let rest: Vec<usize> = (0..self.labels.len()).filter(|k| !positions.contains(k)).collect();
        let labels: Vec<Qubit> = rest.iter().map(|&k| self.labels[k]).collect();
        let mut fixed = 0usize;
        for (t, &k) in positions.iter().enumerate() {
            if (outcome >> t) & 1 == 1 {
                fixed |= 1 << k;
            }
        }
        let mut amps = Vec::with_capacity(1 << rest.len());
        let mut norm = 0.0;
        for r in 0..(1usize << rest.len()) {
            let a = self.amps[scatter(r, &rest) | fixed];
            norm += a.norm_sqr();
            amps.push(a);
        }
        let scale = if norm > 0.0 { 1.0 / norm.sqrt() } else { 0.0 };
        for a in &mut amps {
            *a *= scale;
        }
        PureState { labels, amps }
    }

    /// The same state with labels in the given order.
    pub fn reorder(&self, order: &[Qubit]) -> Result<PureState> {
        if order.len() != self.labels.len() {
            return Err(Error::Dimension(format!(
                "reorder to {} labels from {}",
                order.len(),
                self.labels.len()
            )));
        }
        let positions: Vec<usize> = order.iter().map(|&q| self.pos(q)).collect::<Result<_>>()?;
        check_distinct(order)?;
        let amps = (0..self.amps.len())
            .map(|i| self.amps[scatter(i, &positions)])
            .collect();
        Ok(PureState {
            labels: order.to_vec(),
            amps,
        })
    }

    /// `⟨self|other⟩` after aligning `other` to this label order.
    pub fn inner(&self, other: &PureState) -> Result<C> {
        let o = other.reorder(&self.labels)?;
        Ok(self
            .amps
            .iter()
            .zip(&o.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Density operator of the qubits in `keep`, tracing out the rest.
    /// Row index bit `t` corresponds to `keep[t]`.
    pub fn reduced_density(&self, keep: &[Qubit]) -> Result<DMatrix<C>> {
        let kp: Vec<usize> = keep.iter().map(|&q| self.pos(q)).collect::<Result<_>>()?;
        check_distinct(keep)?;
        let rest: Vec<usize> = (0..self.labels.len()).filter(|k| !kp.contains(k)).collect();
        let (dk, de) = (1usize << kp.len(), 1usize << rest.len());
        let psi = DMatrix::from_fn(dk, de, |r, e| self.amps[scatter(r, &kp) | scatter(e, &rest)]);
        Ok(&psi * psi.adjoint())
    }
}

/// `|⟨a|b⟩|²` with `b` aligned to the label order of `a`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

fn check_distinct(labels: &[Qubit]) -> Result<()> {
    for (i, q) in labels.iter().enumerate() {
        if labels[..i].contains(q) {
            return Err(Error::Invalid(format!("qubit {q} appears twice")));
        }
    }
    Ok(())
}

/// Bits of `i` at `positions`, packed low to high.
fn gather(i: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (t, &k)| acc | (((i >> k) & 1) << t))
}

/// Inverse of [`gather`]: place bit `t` of `r` at `positions[t]`.
fn scatter(r: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (t, &k)| acc | (((r >> t) & 1) << k))
}
