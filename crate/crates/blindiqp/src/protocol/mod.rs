//! Protocol runners.
//!
//! Every variant is one [`ProtocolRun`] state machine driven either by seeded
//! sampling ([`explore::drive`]) or by exhaustive enumeration
//! ([`explore::explore`]). The server side is always a [`ServerStrategy`];
//! the honest server has no special path.
//!
//! Sign conventions used throughout:
//!
//! * primary and ancillary preparations are `Z^r S^{-d} |+⟩`;
//! * after the bridge measurements the register equals `S^{t}` on both ends of
//!   each position applied to `E_Q|φ⟩`, with `t = (−1)^{s+r}` for a bridge and
//!   `t = 2r` for a break ([`bridge_angle`]);
//! * the server measures primary `j` in `S^{Π_j}{|+⟩,|−⟩}` and ancilla `i` in
//!   `S^{A_i}{|0_θ⟩,|1_θ⟩}`.

pub mod explore;
mod machine;
pub mod server;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2lin::{BinMatrix, BinVector};
use crate::graphs::{plan_for, ExtendedIqpGraph};
use crate::qsim::{Qubit, StateSpec};
use crate::rng::{stream, Domain};
use crate::xprog::{OutcomeDistribution, XProgram};

pub use explore::{drive, explore, Branching, Merge, Next, Party};
pub use machine::{Checkpoint, IdealResource, ProtocolRun, Simulator};
pub use server::{
    adversary_by_name, BridgeResponse, EchoZeros, Honest, ServerOp, ServerRecord, ServerStrategy,
    UniformRandom, ADVERSARIES,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Runner {
    /// Single-party measurement-based evaluation, no bridges and no server.
    Mbqc,
    /// Delegated, bridges hidden but primaries and ancillas sent as `|+⟩`.
    Distributed,
    /// Fully padded delegated protocol.
    Blind,
    /// Padded states created by measuring halves of EPR pairs first.
    Teleport,
    /// Uniform corrections sent first; EPR halves measured afterwards.
    PreRandomness,
    /// Simulator plus ideal resource.
    #[serde(rename = "ideal-simulator")]
    IdealSimulator,
}

impl Runner {
    pub const ALL: [Runner; 6] = [
        Runner::Mbqc,
        Runner::Distributed,
        Runner::Blind,
        Runner::Teleport,
        Runner::PreRandomness,
        Runner::IdealSimulator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Runner::Mbqc => "mbqc",
            Runner::Distributed => "distributed",
            Runner::Blind => "blind",
            Runner::Teleport => "teleport",
            Runner::PreRandomness => "pre-randomness",
            Runner::IdealSimulator => "ideal-simulator",
        }
    }

    /// Uses EPR pairs rather than direct preparations.
    pub fn uses_epr(self) -> bool {
        matches!(self, Runner::Teleport | Runner::PreRandomness | Runner::IdealSimulator)
    }
}

impl fmt::Display for Runner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Runner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Runner::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Runner::ALL.iter().map(|r| r.name()).collect();
                Error::Invalid(format!("unknown runner {s:?}; available: {}", names.join(", ")))
            })
    }
}

/// The set of programs the server is told the secret is drawn from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QFamily {
    /// Any reduction of `Q̃` without zero rows.
    ReductionsOf,
    /// Quadratic-residue instances randomised by a secret direction.
    QuadraticResidue { n_a: usize },
}

/// Everything the server legitimately knows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PublicData {
    pub qt: ExtendedIqpGraph,
    pub theta: f64,
    pub family: QFamily,
}

/// A secret program together with the public structure hiding it.
#[derive(Clone, Debug)]
pub struct Instance {
    xp: XProgram,
    d_b: Vec<u8>,
    public: Arc<PublicData>,
}

impl Instance {
    pub fn new(xp: XProgram, qt: ExtendedIqpGraph) -> Result<Self> {
        Self::with_family(xp, qt, QFamily::ReductionsOf)
    }

    pub fn with_family(xp: XProgram, qt: ExtendedIqpGraph, family: QFamily) -> Result<Self> {
        let d_b = plan_for(&qt, xp.q())?;
        let public = Arc::new(PublicData {
            qt,
            theta: xp.theta(),
            family,
        });
        Ok(Self { xp, d_b, public })
    }

    /// `Q` with no bridge positions.
    pub fn plain(xp: XProgram) -> Self {
        let qt = ExtendedIqpGraph::from_q(xp.q());
        Self::new(xp, qt).expect("a program always reduces from itself")
    }

    pub fn xp(&self) -> &XProgram {
        &self.xp
    }

    pub fn q(&self) -> &BinMatrix {
        self.xp.q()
    }

    pub fn qt(&self) -> &ExtendedIqpGraph {
        &self.public.qt
    }

    pub fn d_b(&self) -> &[u8] {
        &self.d_b
    }

    pub fn public(&self) -> &Arc<PublicData> {
        &self.public
    }

    pub fn total_qubits(&self) -> usize {
        let qt = self.qt();
        qt.n_a() + qt.n_p() + qt.n_b()
    }
}

/// The client's private randomness. In the EPR variants the `r` vectors are
/// measurement outcomes; in the pre-randomness variants `d_p`, `d_a` are the
/// computed quarter-turn angles in `0..4`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClientSecrets {
    pub r_p: Vec<u8>,
    pub d_p: Vec<u8>,
    pub r_a: Vec<u8>,
    pub d_a: Vec<u8>,
    pub r_b: Vec<u8>,
    pub d_b: Vec<u8>,
}

impl ClientSecrets {
    pub fn zeros(qt: &ExtendedIqpGraph, d_b: &[u8]) -> Self {
        Self {
            r_p: vec![0; qt.n_p()],
            d_p: vec![0; qt.n_p()],
            r_a: vec![0; qt.n_a()],
            d_a: vec![0; qt.n_a()],
            r_b: vec![0; qt.n_b()],
            d_b: d_b.to_vec(),
        }
    }
}

/// What the server received for one qubit.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SentQubit {
    Prepared(StateSpec),
    EprHalf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Message {
    State,
    BridgeOutcomes,
    Corrections,
    FinalOutcomes,
}

/// All messages exchanged in one run.
#[derive(Clone, Debug, Serialize)]
pub struct Transcript {
    pub runner: Runner,
    pub public: Arc<PublicData>,
    pub sent: Vec<(Qubit, SentQubit)>,
    pub s_b: Vec<u8>,
    pub a: Vec<u8>,
    pub pi: Vec<u8>,
    pub s_a: Vec<u8>,
    pub s_p: Vec<u8>,
    pub order: Vec<Message>,
    /// Whatever the server still holds at the end. Never read by the client.
    pub retained: Vec<Qubit>,
}

impl Transcript {
    pub fn new(runner: Runner, public: Arc<PublicData>) -> Self {
        Self {
            runner,
            public,
            sent: Vec::new(),
            s_b: Vec::new(),
            a: Vec::new(),
            pi: Vec::new(),
            s_a: Vec::new(),
            s_p: Vec::new(),
            order: Vec::new(),
            retained: Vec::new(),
        }
    }

    /// True when the messages appeared in protocol order.
    pub fn well_ordered(&self) -> bool {
        const ORDER: [Message; 4] = [
            Message::State,
            Message::BridgeOutcomes,
            Message::Corrections,
            Message::FinalOutcomes,
        ];
        self.order.len() <= 4 && self.order.iter().zip(ORDER).all(|(a, b)| *a == b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serialises")
    }
}

fn check_len(what: &str, v: &[u8], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::Dimension(format!("{what} has length {}, expected {n}", v.len())));
    }
    Ok(())
}

/// Quarter turns left on both ends of position `k` after its bridge qubit is
/// measured with outcome `s`: `(−1)^{s+r}` for a bridge, `2r` for a break.
pub fn bridge_angle(d: u8, r: u8, s: u8) -> u8 {
    if d & 1 == 1 {
        if (s + r) % 2 == 0 {
            1
        } else {
            3
        }
    } else {
        2 * (r & 1)
    }
}

fn angle_sums(qt: &ExtendedIqpGraph, d_b: &[u8], r_b: &[u8], s_b: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let mut at_p = vec![0u8; qt.n_p()];
    let mut at_a = vec![0u8; qt.n_a()];
    for (k, &(i, j)) in qt.bridge_positions().iter().enumerate() {
        let t = bridge_angle(d_b[k], r_b[k], s_b[k]);
        at_p[j] = (at_p[j] + t) % 4;
        at_a[i] = (at_a[i] + t) % 4;
    }
    (at_p, at_a)
}

/// `(A, Π)` from the client's secrets and the reported bridge outcomes:
/// `Π_j = Σ_k t_k − d^p_j − 2 r^p_j (mod 4)` over the positions `k` touching
/// `p_j`, and likewise for `A_i`.
pub fn client_corrections(
    qt: &ExtendedIqpGraph,
    secrets: &ClientSecrets,
    s_b: &[u8],
) -> Result<(Vec<u8>, Vec<u8>)> {
    check_len("r_p", &secrets.r_p, qt.n_p())?;
    check_len("d_p", &secrets.d_p, qt.n_p())?;
    check_len("r_a", &secrets.r_a, qt.n_a())?;
    check_len("d_a", &secrets.d_a, qt.n_a())?;
    check_len("r_b", &secrets.r_b, qt.n_b())?;
    check_len("d_b", &secrets.d_b, qt.n_b())?;
    check_len("s_b", s_b, qt.n_b())?;
    let (at_p, at_a) = angle_sums(qt, &secrets.d_b, &secrets.r_b, s_b);
    let pack = |sum: u8, d: u8, r: u8| (sum + 8 - d % 4 - 2 * (r & 1)) % 4;
    let pi = (0..qt.n_p())
        .map(|j| pack(at_p[j], secrets.d_p[j], secrets.r_p[j]))
        .collect();
    let a = (0..qt.n_a())
        .map(|i| pack(at_a[i], secrets.d_a[i], secrets.r_a[i]))
        .collect();
    Ok((a, pi))
}

/// The quarter-turn angles that make given `(A, Π)` correct:
/// `angle_j = Σ_k t_k − Π_j (mod 4)`. Returns `(angles_a, angles_p)`.
pub fn invert_corrections(
    qt: &ExtendedIqpGraph,
    d_b: &[u8],
    r_b: &[u8],
    s_b: &[u8],
    a: &[u8],
    pi: &[u8],
) -> Result<(Vec<u8>, Vec<u8>)> {
    check_len("d_b", d_b, qt.n_b())?;
    check_len("r_b", r_b, qt.n_b())?;
    check_len("s_b", s_b, qt.n_b())?;
    check_len("A", a, qt.n_a())?;
    check_len("Π", pi, qt.n_p())?;
    let (at_p, at_a) = angle_sums(qt, d_b, r_b, s_b);
    let ang_a = (0..qt.n_a()).map(|i| (at_a[i] + 4 - a[i] % 4) % 4).collect();
    let ang_p = (0..qt.n_p()).map(|j| (at_p[j] + 4 - pi[j] % 4) % 4).collect();
    Ok((ang_a, ang_p))
}

/// `x̃_j = s^p_j + Σ_{i: Q_ij = 1} s^a_i (mod 2)`.
pub fn output_plain(q: &BinMatrix, s_a: &[u8], s_p: &[u8]) -> Vec<u8> {
    (0..q.cols())
        .map(|j| {
            let mut x = s_p[j] & 1;
            for (i, &s) in s_a.iter().enumerate() {
                if q.get(i, j) {
                    x ^= s & 1;
                }
            }
            x
        })
        .collect()
}

/// `x̃_j = (s^p_j + r^p_j) + Σ_{i: Q_ij = 1} (s^a_i + r^a_i) (mod 2)`.
pub fn output_with_pads(q: &BinMatrix, s_a: &[u8], s_p: &[u8], r_a: &[u8], r_p: &[u8]) -> Vec<u8> {
    let sa: Vec<u8> = s_a.iter().zip(r_a).map(|(s, r)| (s ^ r) & 1).collect();
    let sp: Vec<u8> = s_p.iter().zip(r_p).map(|(s, r)| (s ^ r) & 1).collect();
    output_plain(q, &sa, &sp)
}

/// Recompute the client's output from a finished transcript and its secrets.
pub fn replay_output(inst: &Instance, transcript: &Transcript, secrets: &ClientSecrets) -> Vec<u8> {
    let q = inst.q();
    match transcript.runner {
        Runner::PreRandomness | Runner::IdealSimulator => {
            output_with_pads(q, &transcript.s_a, &transcript.s_p, &secrets.r_a, &secrets.r_p)
        }
        _ => output_plain(q, &transcript.s_a, &transcript.s_p),
    }
}

/// Exhaustive enumeration is refused above this many random bits.
pub const MAX_EXACT_BITS: usize = 26;

/// Upper bound on the random bits one run of `runner` consumes.
pub fn random_bits(runner: Runner, inst: &Instance, server: &dyn ServerStrategy) -> usize {
    let qt = inst.qt();
    let (n_p, n_a, n_b) = (qt.n_p(), qt.n_a(), qt.n_b());
    let srv = server.random_bits(inst.public());
    match runner {
        Runner::Mbqc => n_a + n_p,
        Runner::Distributed => n_b + srv,
        Runner::Blind => 2 * (n_p + n_a) + n_b + srv,
        Runner::Teleport => (n_p + n_a) + (n_p + n_a + n_b) + srv,
        Runner::PreRandomness | Runner::IdealSimulator => 2 * (n_p + n_a) + (n_p + n_a + n_b) + srv,
    }
}

/// Largest register a simulated run may hold.
pub const MAX_RUN_QUBITS: usize = 22;

fn check_size(runner: Runner, inst: &Instance) -> Result<()> {
    let n = match runner {
        Runner::Mbqc => inst.q().cols() + 1,
        r if r.uses_epr() => 2 * inst.total_qubits(),
        _ => inst.total_qubits(),
    };
    crate::error::guard("qubits in one run", n, MAX_RUN_QUBITS)
}

/// One sampled run; `index` selects independent client and server streams.
pub fn run_once(
    runner: Runner,
    inst: &Instance,
    server: &dyn ServerStrategy,
    seed: u64,
    index: u64,
) -> Result<(Vec<u8>, Transcript, ClientSecrets)> {
    check_size(runner, inst)?;
    let mut m = ProtocolRun::new(runner, inst, server);
    drive(&mut m, &mut stream(seed, Domain::Client, index), &mut stream(seed, Domain::Server, index))?;
    let out = m.output().expect("finished run has an output").to_vec();
    Ok((out, m.transcript().clone(), m.secrets().clone()))
}

/// Measurement-based evaluation of `xp` on a single machine.
pub fn run_mbqc_iqp(xp: &XProgram, seed: u64) -> Result<BinVector> {
    let inst = Instance::plain(xp.clone());
    let (x, _, _) = run_once(Runner::Mbqc, &inst, &Honest, seed, 0)?;
    Ok(BinVector::from_bits(&x))
}

/// The delegated protocol without padding of primaries and ancillas.
pub fn run_distributed(inst: &Instance, seed: u64) -> Result<BinVector> {
    let (x, _, _) = run_once(Runner::Distributed, inst, &Honest, seed, 0)?;
    Ok(BinVector::from_bits(&x))
}

pub fn run_blind(inst: &Instance, seed: u64, server: &dyn ServerStrategy) -> Result<(BinVector, Transcript)> {
    let (x, t, _) = run_once(Runner::Blind, inst, server, seed, 0)?;
    Ok((BinVector::from_bits(&x), t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TeleportVariant {
    Teleport,
    PreRandomness,
}

pub fn run_teleport_variant(
    inst: &Instance,
    seed: u64,
    variant: TeleportVariant,
    server: &dyn ServerStrategy,
) -> Result<(BinVector, Transcript)> {
    let runner = match variant {
        TeleportVariant::Teleport => Runner::Teleport,
        TeleportVariant::PreRandomness => Runner::PreRandomness,
    };
    let (x, t, _) = run_once(runner, inst, server, seed, 0)?;
    Ok((BinVector::from_bits(&x), t))
}

pub fn run_ideal_with_simulator(
    inst: &Instance,
    seed: u64,
    server: &dyn ServerStrategy,
) -> Result<(BinVector, Transcript)> {
    let (x, t, _) = run_once(Runner::IdealSimulator, inst, server, seed, 0)?;
    Ok((BinVector::from_bits(&x), t))
}

/// Exact output distribution of `runner`, enumerating all client randomness,
/// server randomness and measurement branches.
pub fn exact_output_distribution(
    runner: Runner,
    inst: &Instance,
    server: &dyn ServerStrategy,
) -> Result<OutcomeDistribution> {
    check_size(runner, inst)?;
    crate::error::guard(
        "random bits for exhaustive enumeration",
        random_bits(runner, inst, server),
        MAX_EXACT_BITS,
    )?;
    let n = inst.q().cols();
    let root = ProtocolRun::new(runner, inst, server).fold_final();
    let probs: Vec<f64> = explore(root, |m: &ProtocolRun, w, acc: &mut Vec<f64>| {
        if acc.is_empty() {
            acc.resize(1 << n, 0.0);
        }
        match m.fan() {
            Some(fan) => {
                for &(p, x) in fan {
                    acc[x] += w * p;
                }
            }
            None => {
                let x = m.output().expect("finished run has an output");
                acc[BinVector::from_bits(x).to_index() as usize] += w;
            }
        }
    })?;
    let probs = if probs.is_empty() { vec![0.0; 1 << n] } else { probs };
    OutcomeDistribution::new(n, probs)
}
