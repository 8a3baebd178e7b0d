//! Server views and the distances between them.
//!
//! A view is everything the server holds at a checkpoint: the classical data
//! it has seen (its own measurement outcomes and coins, the bridge report,
//! the corrections, and later its final report) and the quantum register
//! still in its hands. Views are built by exhaustive enumeration of all
//! client and server randomness, and are stored per classical key as an
//! unnormalised density operator whose trace is the probability of the key.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf2lin::BinVector;
use crate::graphs::{reductions, ExtendedIqpGraph};
use crate::par;
use crate::protocol::{
    explore, exact_output_distribution, random_bits, BridgeResponse, Checkpoint, Instance, Merge, ProtocolRun,
    Runner, ServerStrategy, MAX_EXACT_BITS,
};
use crate::qsim::{Qubit, C};
use crate::xprog::XProgram;

/// Density-operator views are limited to this many prepared qubits.
pub const MAX_VIEW_QUBITS: usize = 7;

/// The classical part of a view.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ViewKey {
    /// The server's own measurement outcomes, one entry per measurement.
    pub measurements: Vec<Vec<u8>>,
    pub coins: Vec<u64>,
    pub s_b: Vec<u8>,
    pub a: Vec<u8>,
    pub pi: Vec<u8>,
    pub s_a: Vec<u8>,
    pub s_p: Vec<u8>,
    /// The client's output, present only in joint (view, output) tables.
    pub output: Vec<u8>,
}

impl ViewKey {
    /// Outcomes of the first `n` single-qubit measurements as an index.
    fn first_outcomes(&self, n: usize) -> usize {
        self.measurements
            .iter()
            .take(n)
            .enumerate()
            .fold(0, |acc, (k, m)| acc | ((m.first().copied().unwrap_or(0) as usize) << k))
    }
}

/// Ensemble of server views: for every classical key, the sum over branches
/// of `w · ρ_branch` on [`ServerView::labels`].
#[derive(Clone, Debug, Default)]
pub struct ServerView {
    labels: Vec<Qubit>,
    blocks: BTreeMap<ViewKey, DMatrix<C>>,
}

impl Merge for ServerView {
    fn merge(&mut self, other: Self) {
        if self.labels.is_empty() {
            self.labels = other.labels;
        }
        for (k, m) in other.blocks {
            match self.blocks.get_mut(&k) {
                // The server's operations are a function of the key, so one
                // key always leaves a register of one size.
                Some(acc) => *acc += m,
                None => {
                    self.blocks.insert(k, m);
                }
            }
        }
    }
}

impl ServerView {
    /// The server-held qubits, row index bit `t` for `labels[t]`.
    pub fn labels(&self) -> &[Qubit] {
        &self.labels
    }

    pub fn keys(&self) -> impl Iterator<Item = &ViewKey> {
        self.blocks.keys()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Unnormalised block of one key.
    pub fn block(&self, key: &ViewKey) -> Option<&DMatrix<C>> {
        self.blocks.get(key)
    }

    /// Probability of each classical key.
    pub fn classical(&self) -> BTreeMap<ViewKey, f64> {
        self.blocks.iter().map(|(k, m)| (k.clone(), m.trace().re)).collect()
    }

    pub fn total(&self) -> f64 {
        self.blocks.values().map(|m| m.trace().re).sum()
    }

    /// The register averaged over all classical keys.
    pub fn avg_state(&self) -> DMatrix<C> {
        let d = 1usize << self.labels.len();
        self.blocks
            .values()
            .filter(|m| m.nrows() == d)
            .fold(DMatrix::zeros(d, d), |acc, m| acc + m)
    }

    /// The register conditioned on `key`.
    pub fn conditioned(&self, key: &ViewKey) -> Option<DMatrix<C>> {
        let m = self.blocks.get(key)?;
        let p = m.trace().re;
        (p > 0.0).then(|| m / C::new(p, 0.0))
    }

    /// Keep the keys satisfying `pred`.
    pub fn restrict(&self, pred: impl Fn(&ViewKey) -> bool) -> ServerView {
        ServerView {
            labels: self.labels.clone(),
            blocks: self
                .blocks
                .iter()
                .filter(|(k, _)| pred(k))
                .map(|(k, m)| (k.clone(), m.clone()))
                .collect(),
        }
    }

    /// Merge keys by a projection of the classical data.
    pub fn marginal(&self, project: impl Fn(&ViewKey) -> ViewKey) -> ServerView {
        let mut out = ServerView {
            labels: self.labels.clone(),
            blocks: BTreeMap::new(),
        };
        for (k, m) in &self.blocks {
            let key = project(k);
            match out.blocks.get_mut(&key) {
                Some(acc) => *acc += m,
                None => {
                    out.blocks.insert(key, m.clone());
                }
            }
        }
        out
    }

    /// Largest violations of the density-operator invariants of the average
    /// state and of the classical table: `(hermiticity, |trace − 1|, −λ_min,
    /// |Σp − 1|)`.
    pub fn validity(&self) -> (f64, f64, f64, f64) {
        let rho = self.avg_state();
        let herm = (&rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let trace = (rho.trace().re - 1.0).abs();
        let min_eig = hermitian_eigenvalues(&rho).into_iter().fold(f64::INFINITY, f64::min);
        let table = (self.classical().values().sum::<f64>() - 1.0).abs();
        (herm, trace, (-min_eig).max(0.0), table)
    }
}

/// Distances between two views. All components lie in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ViewDistance {
    /// Largest trace distance between the registers conditioned on one key
    /// that both views reach.
    pub quantum: f64,
    /// Total variation between the classical tables.
    pub classical: f64,
    /// Trace distance between the classical-quantum states.
    pub joint: f64,
    /// The largest of the above.
    pub combined: f64,
}

impl ViewDistance {
    fn finish(mut self) -> Self {
        self.classical = self.classical.clamp(0.0, 1.0);
        self.joint = self.joint.clamp(0.0, 1.0);
        self.quantum = self.quantum.clamp(0.0, 1.0);
        self.combined = self.quantum.max(self.classical).max(self.joint);
        self
    }
}

fn hermitian_eigenvalues(m: &DMatrix<C>) -> Vec<f64> {
    let h = (m + m.adjoint()) * C::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().collect()
}

/// `½‖D‖₁` for Hermitian `D`. Below the cut-off the Frobenius bound is
/// returned instead of an eigendecomposition.
pub fn half_trace_norm(d: &DMatrix<C>) -> f64 {
    let bound = 0.5 * (d.nrows() as f64).sqrt() * d.norm();
    if bound <= 1e-13 {
        return bound;
    }
    0.5 * hermitian_eigenvalues(d).iter().map(|l| l.abs()).sum::<f64>()
}

/// Trace distance between two density operators.
pub fn trace_distance(a: &DMatrix<C>, b: &DMatrix<C>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!("density operators {:?} and {:?}", a.shape(), b.shape())));
    }
    Ok(half_trace_norm(&(a - b)))
}

/// Trace distance from the maximally mixed state.
pub fn distance_from_maximally_mixed(rho: &DMatrix<C>) -> f64 {
    let d = rho.nrows();
    let id = DMatrix::<C>::identity(d, d) / C::new(d as f64, 0.0);
    half_trace_norm(&(rho - id))
}

/// Compare two views key by key.
pub fn view_distance(v1: &ServerView, v2: &ServerView) -> ViewDistance {
    let mut out = ViewDistance::default();
    let mut keys: Vec<&ViewKey> = v1.blocks.keys().chain(v2.blocks.keys()).collect();
    keys.sort();
    keys.dedup();
    for k in keys {
        match (v1.blocks.get(k), v2.blocks.get(k)) {
            (Some(m1), Some(m2)) if m1.shape() == m2.shape() => {
                let (p1, p2) = (m1.trace().re, m2.trace().re);
                out.classical += 0.5 * (p1 - p2).abs();
                out.joint += half_trace_norm(&(m1 - m2));
                if p1 > 0.0 && p2 > 0.0 {
                    let c = half_trace_norm(&(m1 / C::new(p1, 0.0) - m2 / C::new(p2, 0.0)));
                    out.quantum = out.quantum.max(c);
                }
            }
            (Some(m1), Some(m2)) => {
                let (p1, p2) = (m1.trace().re, m2.trace().re);
                out.classical += 0.5 * (p1 - p2).abs();
                out.joint += 0.5 * (p1 + p2);
                out.quantum = 1.0;
            }
            (Some(m), None) | (None, Some(m)) => {
                let p = m.trace().re;
                out.classical += 0.5 * p;
                out.joint += 0.5 * p;
            }
            (None, None) => unreachable!("key came from one of the views"),
        }
    }
    out.finish()
}

fn key_of(m: &ProtocolRun, with_output: bool) -> ViewKey {
    let t = m.transcript();
    let r = m.record();
    ViewKey {
        measurements: r.measurements.clone(),
        coins: r.coins.clone(),
        s_b: t.s_b.clone(),
        a: t.a.clone(),
        pi: t.pi.clone(),
        s_a: t.s_a.clone(),
        s_p: t.s_p.clone(),
        output: if with_output {
            m.output().map(<[u8]>::to_vec).unwrap_or_default()
        } else {
            Vec::new()
        },
    }
}

fn leaf_density(m: &ProtocolRun) -> (Vec<Qubit>, DMatrix<C>) {
    let state = m.register().to_state();
    let mut keep: Vec<Qubit> = state.labels().iter().copied().filter(|q| !q.is_client_half()).collect();
    keep.sort();
    let rho = state.reduced_density(&keep).expect("server labels are in the register");
    (keep, rho)
}

fn check_view_size(runner: Runner, inst: &Instance, server: &dyn ServerStrategy) -> Result<()> {
    crate::error::guard("prepared qubits in a density-operator view", inst.total_qubits(), MAX_VIEW_QUBITS)?;
    crate::error::guard(
        "random bits for exhaustive enumeration",
        random_bits(runner, inst, server),
        MAX_EXACT_BITS,
    )
}

fn collect(root: ProtocolRun, with_output: bool) -> Result<ServerView> {
    explore(root, move |m: &ProtocolRun, w, acc: &mut ServerView| {
        let (labels, rho) = leaf_density(m);
        let key = key_of(m, with_output);
        let scaled = rho * C::new(w, 0.0);
        if acc.labels.is_empty() {
            acc.labels = labels;
        }
        match acc.blocks.get_mut(&key) {
            Some(b) => *b += scaled,
            None => {
                acc.blocks.insert(key, scaled);
            }
        }
    })
}

/// The server's view at `phase`, enumerating all client randomness, the
/// server's own randomness and every measurement branch.
pub fn server_view(
    runner: Runner,
    inst: &Instance,
    phase: Checkpoint,
    server: &dyn ServerStrategy,
) -> Result<ServerView> {
    check_view_size(runner, inst, server)?;
    collect(ProtocolRun::new(runner, inst, server).stop_at(phase), false)
}

/// The server's view at the end of the run jointly with the client output.
pub fn final_view_with_output(runner: Runner, inst: &Instance, server: &dyn ServerStrategy) -> Result<ServerView> {
    check_view_size(runner, inst, server)?;
    collect(ProtocolRun::new(runner, inst, server), true)
}

fn check_compatible(inst1: &Instance, inst2: &Instance) -> Result<()> {
    if inst1.qt() != inst2.qt() {
        return Err(Error::Invalid("the two programs are hidden in different extended graphs".into()));
    }
    if inst1.xp().theta() != inst2.xp().theta() {
        return Err(Error::Invalid("the two programs use different angles".into()));
    }
    Ok(())
}

/// Distance between the blind-protocol views of two secret programs at the
/// moment `(A, Π)` has been delivered, against the same server.
pub fn blindness_distance(inst1: &Instance, inst2: &Instance, server: &dyn ServerStrategy) -> Result<ViewDistance> {
    check_compatible(inst1, inst2)?;
    let v1 = server_view(Runner::Blind, inst1, Checkpoint::AfterCorrections, server)?;
    let v2 = server_view(Runner::Blind, inst2, Checkpoint::AfterCorrections, server)?;
    Ok(view_distance(&v1, &v2))
}

/// Largest deviation of the `(A, Π)` table from uniform, counting missing
/// entries.
pub fn corrections_uniformity(view: &ServerView, n_a: usize, n_p: usize) -> f64 {
    let table = view.marginal(|k| ViewKey {
        a: k.a.clone(),
        pi: k.pi.clone(),
        ..ViewKey::default()
    });
    let cells = 1u64 << (2 * (n_a + n_p));
    let uniform = 1.0 / cells as f64;
    let probs = table.classical();
    let missing = if (probs.len() as u64) < cells { uniform } else { 0.0 };
    probs.values().map(|p| (p - uniform).abs()).fold(missing, f64::max)
}

/// Deterministic responses as row-to-constant indices: `f[s]` is the
/// reported string (as an index) for true outcome string `s`.
fn response_functions(n_b: usize) -> Result<Vec<Vec<usize>>> {
    let rows = 1usize << n_b;
    let bits = rows * n_b;
    crate::error::guard("bits describing a response function", bits, 16)?;
    Ok((0..1usize << bits)
        .map(|code| (0..rows).map(|s| (code >> (s * n_b)) & (rows - 1)).collect())
        .collect())
}

fn constant_response(n_b: usize, c: usize) -> BridgeResponse {
    let row = BinVector::from_index(n_b, c as u64).to_bits();
    BridgeResponse::new(n_b, vec![row; 1 << n_b]).expect("rows have n_b bits")
}

/// Result of sweeping every pair of programs reducible from one `Q̃` against
/// every deterministic bridge-response function.
#[derive(Clone, Debug, Serialize)]
pub struct BlindnessSweep {
    pub qt: ExtendedIqpGraph,
    pub theta: f64,
    pub programs: usize,
    pub pairs: usize,
    pub response_functions: usize,
    /// Largest trace distance of a sent register from `I/2^n`.
    pub after_state_mixed: f64,
    /// Largest trace distance between sent registers of two programs.
    pub after_state_pairwise: f64,
    /// Largest deviation of `(A, Π)` from uniform over programs and
    /// constant responses.
    pub corrections_uniform: f64,
    /// Largest total variation between classical tables after `(A, Π)`.
    pub classical: f64,
    /// Largest conditioned trace distance between registers after `(A, Π)`.
    pub quantum: f64,
    /// Largest classical-quantum trace distance after `(A, Π)`.
    pub joint: f64,
    /// Largest trace distance between registers after `(A, Π)` averaged
    /// over all classical data. Reported for comparison only; it hides any
    /// correlation between the register and the messages.
    pub unconditioned: f64,
}

impl BlindnessSweep {
    pub fn combined(&self) -> f64 {
        self.classical.max(self.quantum).max(self.joint)
    }
}

/// Exhaustive blindness check on the blind protocol for every program
/// reducible from `qt` at angle `theta`.
///
/// A deterministic server that reports `f(s)` for true bridge outcomes `s`
/// behaves, on the branches with outcome `s`, exactly like the server that
/// always reports `f(s)`. Views are therefore computed once per constant
/// report, split by true outcome, and reassembled for every `f`.
pub fn blindness_sweep(qt: &ExtendedIqpGraph, theta: f64) -> Result<BlindnessSweep> {
    let n_b = qt.n_b();
    let functions = response_functions(n_b)?;
    let mut insts = Vec::new();
    for (_, q) in reductions(qt)? {
        insts.push(Instance::new(XProgram::new(q, theta)?, qt.clone())?);
    }
    let rows = 1usize << n_b;

    let mut after_state = Vec::new();
    let mut after_state_mixed: f64 = 0.0;
    for inst in &insts {
        let v = server_view(Runner::Blind, inst, Checkpoint::AfterState, &crate::protocol::Honest)?;
        let rho = v.avg_state();
        after_state_mixed = after_state_mixed.max(distance_from_maximally_mixed(&rho));
        after_state.push(rho);
    }

    // views[q][c]: view after (A, Π) against the constant report c.
    let mut views: Vec<Vec<ServerView>> = Vec::new();
    let mut corrections_uniform: f64 = 0.0;
    for inst in &insts {
        let per_c: Vec<Result<ServerView>> = (0..rows)
            .map(|c| {
                server_view(
                    Runner::Blind,
                    inst,
                    Checkpoint::AfterCorrections,
                    &constant_response(n_b, c),
                )
            })
            .collect();
        let per_c: Vec<ServerView> = per_c.into_iter().collect::<Result<_>>()?;
        for v in &per_c {
            corrections_uniform = corrections_uniform.max(corrections_uniformity(v, qt.n_a(), qt.n_p()));
        }
        views.push(per_c);
    }

    let pairs: Vec<(usize, usize)> = (0..insts.len())
        .flat_map(|i| (i + 1..insts.len()).map(move |j| (i, j)))
        .collect();
    let mut after_state_pairwise: f64 = 0.0;
    for &(i, j) in &pairs {
        after_state_pairwise = after_state_pairwise.max(trace_distance(&after_state[i], &after_state[j])?);
    }

    // blocks[pair][s][c] = distance restricted to true outcome s.
    let blocks: Vec<Vec<Vec<ViewDistance>>> = par::map_vec(pairs.clone(), |(i, j)| {
        (0..rows)
            .map(|s| {
                (0..rows)
                    .map(|c| {
                        let a = views[i][c].restrict(|k| k.first_outcomes(n_b) == s);
                        let b = views[j][c].restrict(|k| k.first_outcomes(n_b) == s);
                        view_distance(&a, &b)
                    })
                    .collect()
            })
            .collect()
    });

    // averages[q][s][c]: register averaged over the keys with true outcome s.
    let averages: Vec<Vec<Vec<DMatrix<C>>>> = views
        .iter()
        .map(|per_c| {
            (0..rows)
                .map(|s| {
                    per_c
                        .iter()
                        .map(|v| v.restrict(|k| k.first_outcomes(n_b) == s).avg_state())
                        .collect()
                })
                .collect()
        })
        .collect();
    let unconditioned = par::map_vec(pairs.clone(), |(i, j)| {
        functions
            .iter()
            .map(|f| {
                let sum = |q: usize| {
                    f.iter()
                        .enumerate()
                        .map(|(s, &c)| averages[q][s][c].clone())
                        .reduce(|a, b| a + b)
                        .expect("at least one outcome string")
                };
                half_trace_norm(&(sum(i) - sum(j)))
            })
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max);

    let (mut classical, mut quantum, mut joint): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for pair in &blocks {
        for f in &functions {
            let (mut c, mut q, mut jn) = (0.0, 0.0f64, 0.0);
            for (s, &reported) in f.iter().enumerate() {
                let d = &pair[s][reported];
                c += d.classical;
                q = q.max(d.quantum);
                jn += d.joint;
            }
            classical = classical.max(c);
            quantum = quantum.max(q);
            joint = joint.max(jn);
        }
    }

    Ok(BlindnessSweep {
        qt: qt.clone(),
        theta,
        programs: insts.len(),
        pairs: pairs.len(),
        response_functions: functions.len(),
        after_state_mixed,
        after_state_pairwise,
        corrections_uniform,
        classical,
        quantum,
        joint,
        unconditioned,
    })
}

/// What [`simulator_equivalence`] compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalenceMode {
    /// Views after `(A, Π)` and the final view jointly with the output.
    Full,
    /// Client output distributions only.
    OutputOnly,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulatorEquivalence {
    pub mode: EquivalenceMode,
    pub server: String,
    /// Real against ideal world after `(A, Π)`.
    pub after_corrections: Option<ViewDistance>,
    /// Real against ideal world at the end, server view jointly with the
    /// client output.
    pub final_view: Option<ViewDistance>,
    /// Total variation between the client output distributions.
    pub output: f64,
    pub combined: f64,
}

/// Compare the blind protocol with the ideal resource composed with the
/// simulator, against the same server strategy.
pub fn simulator_equivalence(
    inst: &Instance,
    server: &dyn ServerStrategy,
    mode: EquivalenceMode,
) -> Result<SimulatorEquivalence> {
    let real = exact_output_distribution(Runner::Blind, inst, server)?;
    let ideal = exact_output_distribution(Runner::IdealSimulator, inst, server)?;
    let output = real.tv_distance(&ideal);
    let (after_corrections, final_view) = match mode {
        EquivalenceMode::OutputOnly => (None, None),
        EquivalenceMode::Full => {
            let at = |runner| server_view(runner, inst, Checkpoint::AfterCorrections, server);
            let mid = view_distance(&at(Runner::Blind)?, &at(Runner::IdealSimulator)?);
            let fin = view_distance(
                &final_view_with_output(Runner::Blind, inst, server)?,
                &final_view_with_output(Runner::IdealSimulator, inst, server)?,
            );
            (Some(mid), Some(fin))
        }
    };
    let combined = [after_corrections, final_view]
        .iter()
        .flatten()
        .map(|d| d.combined)
        .fold(output, f64::max);
    Ok(SimulatorEquivalence {
        mode,
        server: server.name(),
        after_corrections,
        final_view,
        output,
        combined,
    })
}

/// One line of a security report.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SecurityReport {
    pub check: String,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl SecurityReport {
    pub fn new(check: impl Into<String>, checks: Vec<CheckResult>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            check: check.into(),
            checks,
            pass,
        }
    }

    pub fn from_sweep(sweep: &BlindnessSweep) -> Self {
        Self::new(
            "blindness",
            vec![
                CheckResult::new("after-state register vs I/2^n", sweep.after_state_mixed, 1e-12),
                CheckResult::new("after-state register between programs", sweep.after_state_pairwise, 1e-10),
                CheckResult::new("(A, Pi) uniformity", sweep.corrections_uniform, 1e-12),
                CheckResult::new("after-corrections classical TV", sweep.classical, 1e-12),
                CheckResult::new("after-corrections conditioned register", sweep.quantum, 1e-10),
                CheckResult::new("after-corrections joint", sweep.joint, 1e-10),
                CheckResult::new("after-corrections averaged register", sweep.unconditioned, 1e-10),
            ],
        )
    }

    pub fn from_equivalence(eq: &SimulatorEquivalence) -> Self {
        let mut checks = vec![CheckResult::new("output TV", eq.output, 1e-9)];
        if let Some(d) = eq.after_corrections {
            checks.push(CheckResult::new("after-corrections view", d.combined, 1e-9));
        }
        if let Some(d) = eq.final_view {
            checks.push(CheckResult::new("final view with output", d.combined, 1e-9));
        }
        Self::new(format!("simulator[{}]", eq.server), checks)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2lin::BinMatrix;
    use crate::protocol::{EchoZeros, Honest};
    use std::f64::consts::PI;

    fn minimal() -> Instance {
        let q = BinMatrix::from_rows(&[[1u8]]).unwrap();
        Instance::new(
            XProgram::new(q, PI / 8.0).unwrap(),
            ExtendedIqpGraph::new(vec![vec![-1]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn sent_register_is_maximally_mixed() {
        let v = server_view(Runner::Blind, &minimal(), Checkpoint::AfterState, &Honest).unwrap();
        assert_eq!(v.labels().len(), 3);
        assert!(distance_from_maximally_mixed(&v.avg_state()) < 1e-12);
        let (h, t, neg, table) = v.validity();
        assert!(h < 1e-12 && t < 1e-10 && neg < 1e-10 && table < 1e-12);
    }

    #[test]
    fn identical_programs_are_at_distance_zero() {
        let d = blindness_distance(&minimal(), &minimal(), &Honest).unwrap();
        assert_eq!(d.combined, 0.0);
    }

    #[test]
    fn corrections_are_uniform() {
        let v = server_view(Runner::Blind, &minimal(), Checkpoint::AfterCorrections, &EchoZeros).unwrap();
        assert!(corrections_uniformity(&v, 1, 1) < 1e-12);
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let mut a = DMatrix::<C>::zeros(2, 2);
        let mut b = DMatrix::<C>::zeros(2, 2);
        a[(0, 0)] = C::new(1.0, 0.0);
        b[(1, 1)] = C::new(1.0, 0.0);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn response_function_count() {
        assert_eq!(response_functions(1).unwrap().len(), 4);
        assert_eq!(response_functions(2).unwrap().len(), 256);
        assert!(response_functions(3).is_err());
    }

    #[test]
    fn oversize_view_is_refused() {
        let qt = ExtendedIqpGraph::new(vec![vec![-1, 1, 1, 1], vec![1, 1, -1, 1]]).unwrap();
        let q = crate::graphs::reduce(&qt, &[1, 1]).unwrap();
        let inst = Instance::new(XProgram::new(q, 0.3).unwrap(), qt).unwrap();
        assert!(matches!(
            server_view(Runner::Blind, &inst, Checkpoint::AfterState, &Honest),
            Err(Error::Guard { .. })
        ));
    }
}
