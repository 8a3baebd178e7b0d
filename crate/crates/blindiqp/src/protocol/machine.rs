//! The protocol state machine shared by every runner.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf2lin::{BinMatrix, BinVector};
use crate::qsim::{Basis, PureState, Qubit, Register, Role, StateSpec, PRUNE};

use super::explore::{Branching, Next, Party};
use super::server::{ServerOp, ServerRecord, ServerStrategy};
use super::{
    client_corrections, invert_corrections, output_plain, output_with_pads, ClientSecrets, Instance,
    Message, PublicData, Runner, SentQubit, Transcript,
};

/// Points at which a run can be halted to inspect what the server holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Checkpoint {
    /// The register has just been handed to the server.
    AfterState,
    /// The server has finished its first batch of operations but not yet
    /// reported bridge outcomes.
    AfterBridgeMeasure,
    /// `(A, Π)` have just been delivered.
    AfterCorrections,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Secret {
    Rp,
    Dp,
    Ra,
    Da,
    Rb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Halves {
    Bridges,
    PrimaryAncilla,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Draw(Secret),
    PrepareProduct { padded: bool },
    PrepareEpr,
    MeasureHalves(Halves),
    Send,
    ServerReceive,
    ReportBridge,
    Corrections,
    DrawCorrections,
    InvertAngles,
    SendCorrections,
    ServerFinal,
    ReportFinal,
    Output { pads: bool },
    MbqcPrimaries,
    MbqcAncillas,
    MbqcFinal,
}

use Step::*;

const MBQC: &[Step] = &[MbqcPrimaries, MbqcAncillas, MbqcFinal, Output { pads: false }];

const DISTRIBUTED: &[Step] = &[
    Draw(Secret::Rb),
    PrepareProduct { padded: false },
    Send,
    ServerReceive,
    ReportBridge,
    Corrections,
    SendCorrections,
    ServerFinal,
    ReportFinal,
    Output { pads: false },
];

const BLIND: &[Step] = &[
    Draw(Secret::Rp),
    Draw(Secret::Dp),
    Draw(Secret::Ra),
    Draw(Secret::Da),
    Draw(Secret::Rb),
    PrepareProduct { padded: true },
    Send,
    ServerReceive,
    ReportBridge,
    Corrections,
    SendCorrections,
    ServerFinal,
    ReportFinal,
    Output { pads: false },
];

const TELEPORT: &[Step] = &[
    Draw(Secret::Dp),
    Draw(Secret::Da),
    PrepareEpr,
    MeasureHalves(Halves::All),
    Send,
    ServerReceive,
    ReportBridge,
    Corrections,
    SendCorrections,
    ServerFinal,
    ReportFinal,
    Output { pads: false },
];

const PRE_RANDOMNESS: &[Step] = &[
    DrawCorrections,
    PrepareEpr,
    MeasureHalves(Halves::Bridges),
    Send,
    ServerReceive,
    ReportBridge,
    InvertAngles,
    MeasureHalves(Halves::PrimaryAncilla),
    SendCorrections,
    ServerFinal,
    ReportFinal,
    Output { pads: true },
];

const IDEAL: &[Step] = &[
    PrepareEpr,
    Send,
    ServerReceive,
    ReportBridge,
    MeasureHalves(Halves::Bridges),
    DrawCorrections,
    InvertAngles,
    MeasureHalves(Halves::PrimaryAncilla),
    SendCorrections,
    ServerFinal,
    ReportFinal,
    Output { pads: true },
];

fn program(runner: Runner) -> &'static [Step] {
    match runner {
        Runner::Mbqc => MBQC,
        Runner::Distributed => DISTRIBUTED,
        Runner::Blind => BLIND,
        Runner::Teleport => TELEPORT,
        Runner::PreRandomness => PRE_RANDOMNESS,
        Runner::IdealSimulator => IDEAL,
    }
}

/// Uniform `(A, Π)` from one draw in `0..4^{n_a+n_p}`: quarter-turn digit `t`
/// is bits `2t, 2t+1`; the first `n_a` digits are `A`.
fn decode_corrections(n_a: usize, n_p: usize, choice: u64) -> (Vec<u8>, Vec<u8>) {
    let digit = |t: usize| ((choice >> (2 * t)) & 3) as u8;
    ((0..n_a).map(digit).collect(), (n_a..n_a + n_p).map(digit).collect())
}

/// The simulator of the ideal-world construction. It holds the public data
/// only, so nothing it sends can depend on `Q`.
#[derive(Clone, Debug)]
pub struct Simulator {
    public: Arc<PublicData>,
}

impl Simulator {
    pub fn new(public: Arc<PublicData>) -> Self {
        Self { public }
    }

    /// One EPR pair per server qubit; the server receives the second half.
    pub fn epr_pairs(&self) -> Vec<Qubit> {
        server_qubits(&self.public)
    }

    pub fn correction_choices(&self) -> u64 {
        1 << (2 * (self.public.qt.n_a() + self.public.qt.n_p()))
    }

    pub fn corrections(&self, choice: u64) -> (Vec<u8>, Vec<u8>) {
        decode_corrections(self.public.qt.n_a(), self.public.qt.n_p(), choice)
    }
}

/// The ideal resource: knows `Q` and the bridge plan, holds the client halves.
#[derive(Clone, Debug)]
pub struct IdealResource {
    q: BinMatrix,
    d_b: Vec<u8>,
}

impl IdealResource {
    pub fn new(inst: &Instance) -> Self {
        Self {
            q: inst.q().clone(),
            d_b: inst.d_b().to_vec(),
        }
    }

    pub fn d_b(&self) -> &[u8] {
        &self.d_b
    }

    pub fn output(&self, s_a: &[u8], s_p: &[u8], r_a: &[u8], r_p: &[u8]) -> Vec<u8> {
        output_with_pads(&self.q, s_a, s_p, r_a, r_p)
    }
}

fn server_qubits(public: &PublicData) -> Vec<Qubit> {
    let qt = &public.qt;
    (0..qt.n_p())
        .map(Qubit::Primary)
        .chain((0..qt.n_a()).map(Qubit::Ancillary))
        .chain((0..qt.n_b()).map(Qubit::Bridge))
        .collect()
}

#[derive(Clone, Debug)]
enum Pending {
    Secret(Secret),
    Corrections,
    Halves(Vec<(Qubit, Basis)>),
    Server(Vec<(Qubit, Basis)>),
    Coin,
    MbqcAncilla(Vec<(Qubit, Basis)>),
    MbqcPrimaries(Vec<(Qubit, Basis)>),
}

/// One execution of a protocol variant as a [`Branching`] process.
#[derive(Clone, Debug)]
pub struct ProtocolRun<'a> {
    runner: Runner,
    inst: &'a Instance,
    server: &'a dyn ServerStrategy,
    simulator: Option<Simulator>,
    ideal: Option<IdealResource>,
    steps: &'static [Step],
    pc: usize,
    stop_at: Option<Checkpoint>,
    reached: Option<Checkpoint>,
    fold: bool,
    pending: Option<Pending>,
    ops: Option<Vec<ServerOp>>,
    op_index: usize,
    mbqc_ancilla: usize,
    secrets: ClientSecrets,
    register: Register,
    record: ServerRecord,
    transcript: Transcript,
    fan: Option<Vec<(f64, usize)>>,
    output: Option<Vec<u8>>,
}

impl<'a> ProtocolRun<'a> {
    pub fn new(runner: Runner, inst: &'a Instance, server: &'a dyn ServerStrategy) -> Self {
        let ideal_world = runner == Runner::IdealSimulator;
        Self {
            runner,
            inst,
            server,
            simulator: ideal_world.then(|| Simulator::new(inst.public().clone())),
            ideal: ideal_world.then(|| IdealResource::new(inst)),
            steps: program(runner),
            pc: 0,
            stop_at: None,
            reached: None,
            fold: false,
            pending: None,
            ops: None,
            op_index: 0,
            mbqc_ancilla: 0,
            secrets: ClientSecrets::zeros(inst.qt(), inst.d_b()),
            register: Register::new(),
            record: ServerRecord::default(),
            transcript: Transcript::new(runner, inst.public().clone()),
            fan: None,
            output: None,
        }
    }

    /// Halt when `cp` is reached.
    pub fn stop_at(mut self, cp: Checkpoint) -> Self {
        self.stop_at = Some(cp);
        self
    }

    /// Replace the final joint measurement by its full outcome table, see
    /// [`ProtocolRun::fan`].
    pub fn fold_final(mut self) -> Self {
        self.fold = true;
        self
    }

    pub fn runner(&self) -> Runner {
        self.runner
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn record(&self) -> &ServerRecord {
        &self.record
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn secrets(&self) -> &ClientSecrets {
        &self.secrets
    }

    /// The checkpoint the run halted at, if any.
    pub fn reached(&self) -> Option<Checkpoint> {
        self.reached
    }

    /// With [`ProtocolRun::fold_final`]: `(probability, x̃ index)` for every
    /// outcome of the final measurement.
    pub fn fan(&self) -> Option<&[(f64, usize)]> {
        self.fan.as_deref()
    }

    pub fn output(&self) -> Option<&[u8]> {
        self.output.as_deref()
    }

    fn public(&self) -> &PublicData {
        self.inst.public()
    }

    fn n(&self) -> (usize, usize, usize) {
        let qt = self.inst.qt();
        (qt.n_p(), qt.n_a(), qt.n_b())
    }

    fn checkpoint(&mut self, cp: Checkpoint) -> bool {
        if self.stop_at == Some(cp) {
            self.reached = Some(cp);
            self.pc = self.steps.len();
            true
        } else {
            false
        }
    }

    fn finish_output(&self, s_a: &[u8], s_p: &[u8], pads: bool) -> Vec<u8> {
        if !pads {
            return output_plain(self.inst.q(), s_a, s_p);
        }
        match &self.ideal {
            Some(ideal) => ideal.output(s_a, s_p, &self.secrets.r_a, &self.secrets.r_p),
            None => output_with_pads(self.inst.q(), s_a, s_p, &self.secrets.r_a, &self.secrets.r_p),
        }
    }

    fn check_bits(what: &str, v: &[u8], n: usize) -> Result<()> {
        if v.len() != n || v.iter().any(|&b| b > 1) {
            return Err(Error::Invalid(format!("server sent {what} of {} entries, expected {n} bits", v.len())));
        }
        Ok(())
    }

    fn half_targets(&self, which: Halves) -> Vec<(Qubit, Basis)> {
        let (n_p, n_a, n_b) = self.n();
        let s = &self.secrets;
        let mut out = Vec::new();
        if which != Halves::Bridges {
            for j in 0..n_p {
                out.push((Qubit::ClientHalf(Role::Primary, j), Basis::SRotatedHadamard(s.d_p[j] % 4)));
            }
            for i in 0..n_a {
                out.push((Qubit::ClientHalf(Role::Ancillary, i), Basis::SRotatedHadamard(s.d_a[i] % 4)));
            }
        }
        if which != Halves::PrimaryAncilla {
            for k in 0..n_b {
                out.push((Qubit::ClientHalf(Role::Bridge, k), Basis::SqrtYRotated(s.d_b[k])));
            }
        }
        out
    }

    /// Ask for a joint measurement of `targets`, or fold it when it is the
    /// last random event before the output.
    fn measure(&mut self, targets: Vec<(Qubit, Basis)>, party: Party, wrap: fn(Vec<(Qubit, Basis)>) -> Pending) -> Result<Option<Next>> {
        let probs = self.register.prepare_joint(&targets)?;
        self.pending = Some(wrap(targets));
        Ok(Some(Next::Weighted { party, probs }))
    }

    /// Run deterministic work at the current step. Returns `Some` when a
    /// choice is needed, `None` after advancing.
    fn step(&mut self) -> Result<Option<Next>> {
        let (n_p, n_a, n_b) = self.n();
        match self.steps[self.pc] {
            Draw(which) => {
                let len = match which {
                    Secret::Rp | Secret::Dp => n_p,
                    Secret::Ra | Secret::Da => n_a,
                    Secret::Rb => n_b,
                };
                self.pending = Some(Pending::Secret(which));
                return Ok(Some(Next::Uniform {
                    party: Party::Client,
                    count: 1 << len,
                }));
            }
            PrepareProduct { padded } => {
                let s = &self.secrets;
                let mut specs = Vec::with_capacity(n_p + n_a + n_b);
                for j in 0..n_p {
                    specs.push((Qubit::Primary(j), pad_spec(padded, s.r_p[j], s.d_p[j])));
                }
                for i in 0..n_a {
                    specs.push((Qubit::Ancillary(i), pad_spec(padded, s.r_a[i], s.d_a[i])));
                }
                for k in 0..n_b {
                    specs.push((Qubit::Bridge(k), crate::graphs::bridge_spec(s.d_b[k], s.r_b[k])));
                }
                for (q, spec) in specs {
                    self.register.add(PureState::prepare(&[(q, spec)])?)?;
                    self.transcript.sent.push((q, SentQubit::Prepared(spec)));
                }
            }
            PrepareEpr => {
                let qubits = match &self.simulator {
                    Some(sim) => sim.epr_pairs(),
                    None => server_qubits(self.public()),
                };
                for q in qubits {
                    self.register.add(PureState::bell_pair(q.partner(), q)?)?;
                    self.transcript.sent.push((q, SentQubit::EprHalf));
                }
            }
            MeasureHalves(which) => {
                if self.pending.is_none() {
                    let targets = self.half_targets(which);
                    if !targets.is_empty() {
                        return self.measure(targets, Party::Client, Pending::Halves);
                    }
                }
            }
            Send => {
                self.transcript.order.push(Message::State);
                self.pc += 1;
                self.checkpoint(Checkpoint::AfterState);
                return Ok(None);
            }
            ServerReceive | ServerFinal => {
                let first = self.steps[self.pc] == ServerReceive;
                if self.ops.is_none() {
                    let public = self.inst.public().clone();
                    self.ops = Some(if first {
                        self.server.receive_state(&public)
                    } else {
                        self.server
                            .receive_corrections(&public, &self.record, &self.transcript.a, &self.transcript.pi)
                    });
                    self.op_index = 0;
                }
                while let Some(op) = self.ops.as_ref().and_then(|o| o.get(self.op_index)).cloned() {
                    self.op_index += 1;
                    let last = self.op_index == self.ops.as_ref().map_or(0, Vec::len);
                    match op {
                        ServerOp::Cz(a, b) => {
                            server_may_touch(a)?;
                            server_may_touch(b)?;
                            self.register.apply_cz(a, b)?;
                        }
                        ServerOp::Gate(q, g) => {
                            server_may_touch(q)?;
                            self.register.apply_gate(q, g)?;
                        }
                        ServerOp::Coin(bits) => {
                            crate::error::guard("server coin bits", bits as usize, 63)?;
                            self.pending = Some(Pending::Coin);
                            return Ok(Some(Next::Uniform {
                                party: Party::Server,
                                count: 1 << bits,
                            }));
                        }
                        ServerOp::Measure(targets) => {
                            for &(q, _) in &targets {
                                server_may_touch(q)?;
                            }
                            if !first && last && self.fold && self.ends_after_report() {
                                self.fold_server_final(&targets)?;
                                return Ok(None);
                            }
                            return self.measure(targets, Party::Server, Pending::Server);
                        }
                    }
                }
                self.ops = None;
            }
            ReportBridge => {
                if self.checkpoint(Checkpoint::AfterBridgeMeasure) {
                    return Ok(None);
                }
                let s_b = self.server.report_bridges(self.public(), &self.record);
                Self::check_bits("bridge outcomes", &s_b, n_b)?;
                self.transcript.s_b = s_b;
                self.transcript.order.push(Message::BridgeOutcomes);
            }
            Corrections => {
                let (a, pi) = client_corrections(self.inst.qt(), &self.secrets, &self.transcript.s_b)?;
                self.transcript.a = a;
                self.transcript.pi = pi;
            }
            DrawCorrections => {
                let count = match &self.simulator {
                    Some(sim) => sim.correction_choices(),
                    None => 1 << (2 * (n_a + n_p)),
                };
                self.pending = Some(Pending::Corrections);
                return Ok(Some(Next::Uniform {
                    party: Party::Client,
                    count,
                }));
            }
            InvertAngles => {
                let d_b = match &self.ideal {
                    Some(ideal) => ideal.d_b(),
                    None => &self.secrets.d_b,
                };
                let (ang_a, ang_p) = invert_corrections(
                    self.inst.qt(),
                    d_b,
                    &self.secrets.r_b,
                    &self.transcript.s_b,
                    &self.transcript.a,
                    &self.transcript.pi,
                )?;
                self.secrets.d_a = ang_a;
                self.secrets.d_p = ang_p;
            }
            SendCorrections => {
                self.transcript.order.push(Message::Corrections);
                self.pc += 1;
                self.checkpoint(Checkpoint::AfterCorrections);
                return Ok(None);
            }
            ReportFinal => {
                let (s_a, s_p) = self.server.report_outcomes(self.public(), &self.record);
                Self::check_bits("ancilla outcomes", &s_a, n_a)?;
                Self::check_bits("primary outcomes", &s_p, n_p)?;
                self.transcript.s_a = s_a;
                self.transcript.s_p = s_p;
                self.transcript.order.push(Message::FinalOutcomes);
                self.transcript.retained = self
                    .register
                    .labels()
                    .into_iter()
                    .filter(|q| !q.is_client_half())
                    .collect();
                self.transcript.retained.sort();
            }
            Output { pads } => {
                let x = self.finish_output(&self.transcript.s_a, &self.transcript.s_p, pads);
                self.output = Some(x);
            }
            MbqcPrimaries => {
                for j in 0..n_p {
                    self.register.add(PureState::prepare(&[(Qubit::Primary(j), StateSpec::Plus)])?)?;
                }
            }
            MbqcAncillas => {
                if self.mbqc_ancilla < n_a {
                    let i = self.mbqc_ancilla;
                    self.mbqc_ancilla += 1;
                    let a = Qubit::Ancillary(i);
                    self.register.add(PureState::prepare(&[(a, StateSpec::Plus)])?)?;
                    for j in 0..n_p {
                        if self.inst.q().get(i, j) {
                            self.register.apply_cz(a, Qubit::Primary(j))?;
                        }
                    }
                    let theta = self.public().theta;
                    return self.measure(vec![(a, Basis::Theta(theta))], Party::Client, Pending::MbqcAncilla);
                }
            }
            MbqcFinal => {
                let targets: Vec<(Qubit, Basis)> = (0..n_p).map(|j| (Qubit::Primary(j), Basis::Hadamard)).collect();
                if self.fold {
                    let probs = self.register.prepare_joint(&targets)?;
                    let fan = probs
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p >= PRUNE)
                        .map(|(o, &p)| {
                            let s_p: Vec<u8> = (0..n_p).map(|t| ((o >> t) & 1) as u8).collect();
                            let x = output_plain(self.inst.q(), &self.transcript.s_a, &s_p);
                            (p, BinVector::from_bits(&x).to_index() as usize)
                        })
                        .collect();
                    self.fan = Some(fan);
                    self.pc = self.steps.len();
                    return Ok(None);
                }
                return self.measure(targets, Party::Client, Pending::MbqcPrimaries);
            }
        }
        self.pc += 1;
        Ok(None)
    }

    fn ends_after_report(&self) -> bool {
        matches!(self.steps.get(self.pc + 1..), Some([ReportFinal, Output { .. }]))
    }

    fn fold_server_final(&mut self, targets: &[(Qubit, Basis)]) -> Result<()> {
        let pads = matches!(self.steps.last(), Some(Output { pads: true }));
        let probs = self.register.prepare_joint(targets)?;
        let (n_p, n_a, _) = self.n();
        let public = self.inst.public().clone();
        let mut fan = Vec::new();
        for (o, &p) in probs.iter().enumerate() {
            if p < PRUNE {
                continue;
            }
            self.record
                .measurements
                .push((0..targets.len()).map(|t| ((o >> t) & 1) as u8).collect());
            let (s_a, s_p) = self.server.report_outcomes(&public, &self.record);
            self.record.measurements.pop();
            Self::check_bits("ancilla outcomes", &s_a, n_a)?;
            Self::check_bits("primary outcomes", &s_p, n_p)?;
            let x = self.finish_output(&s_a, &s_p, pads);
            fan.push((p, BinVector::from_bits(&x).to_index() as usize));
        }
        self.fan = Some(fan);
        self.ops = None;
        self.pc = self.steps.len();
        Ok(())
    }
}

fn pad_spec(padded: bool, r: u8, d: u8) -> StateSpec {
    if padded {
        StateSpec::ZsPlus {
            z: r & 1,
            s: (4 - d % 4) % 4,
        }
    } else {
        StateSpec::Plus
    }
}

fn server_may_touch(q: Qubit) -> Result<()> {
    if q.is_client_half() {
        return Err(Error::Invalid(format!("server operation on client qubit {q}")));
    }
    Ok(())
}

fn bits_of(v: u64, n: usize) -> Vec<u8> {
    (0..n).map(|t| ((v >> t) & 1) as u8).collect()
}

impl Branching for ProtocolRun<'_> {
    fn next(&mut self) -> Result<Next> {
        loop {
            if let Some(p) = &self.pending {
                return Err(Error::Invalid(format!("choice {p:?} requested twice without resolution")));
            }
            if self.pc >= self.steps.len() {
                return Ok(Next::Done);
            }
            if let Some(next) = self.step()? {
                return Ok(next);
            }
        }
    }

    fn resolve(&mut self, choice: u64) -> Result<()> {
        let pending = self
            .pending
            .take()
            .ok_or_else(|| Error::Invalid("resolve called without a pending choice".into()))?;
        let (n_p, n_a, n_b) = self.n();
        match pending {
            Pending::Secret(which) => {
                let s = &mut self.secrets;
                match which {
                    Secret::Rp => s.r_p = bits_of(choice, n_p),
                    Secret::Dp => s.d_p = bits_of(choice, n_p),
                    Secret::Ra => s.r_a = bits_of(choice, n_a),
                    Secret::Da => s.d_a = bits_of(choice, n_a),
                    Secret::Rb => s.r_b = bits_of(choice, n_b),
                }
                self.pc += 1;
            }
            Pending::Corrections => {
                let (a, pi) = match &self.simulator {
                    Some(sim) => sim.corrections(choice),
                    None => decode_corrections(n_a, n_p, choice),
                };
                self.transcript.a = a;
                self.transcript.pi = pi;
                self.pc += 1;
            }
            Pending::Halves(targets) => {
                self.register.collapse(&targets, choice as usize)?;
                for (t, &(q, _)) in targets.iter().enumerate() {
                    let bit = ((choice >> t) & 1) as u8;
                    match q {
                        Qubit::ClientHalf(Role::Primary, j) => self.secrets.r_p[j] = bit,
                        Qubit::ClientHalf(Role::Ancillary, i) => self.secrets.r_a[i] = bit,
                        Qubit::ClientHalf(Role::Bridge, k) => self.secrets.r_b[k] = bit,
                        _ => unreachable!("half targets are client halves"),
                    }
                }
                self.pc += 1;
            }
            Pending::Server(targets) => {
                self.register.collapse(&targets, choice as usize)?;
                self.record.measurements.push(bits_of(choice, targets.len()));
            }
            Pending::Coin => self.record.coins.push(choice),
            Pending::MbqcAncilla(targets) => {
                self.register.collapse(&targets, choice as usize)?;
                self.transcript.s_a.push((choice & 1) as u8);
            }
            Pending::MbqcPrimaries(targets) => {
                self.register.collapse(&targets, choice as usize)?;
                self.transcript.s_p = bits_of(choice, n_p);
                self.pc += 1;
            }
        }
        Ok(())
    }
}
