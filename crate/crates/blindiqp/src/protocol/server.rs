//! Server strategies.
//!
//! A strategy is stateless. Its quantum actions are returned as lists of
//! [`ServerOp`], which the protocol runner executes (sampling or enumerating
//! measurement outcomes), and its messages are computed from the resulting
//! [`ServerRecord`]. The four calls follow the message order: receive the
//! state, report bridge outcomes, receive the corrections, report the final
//! outcomes.

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::gf2lin::BinVector;
use crate::qsim::{Basis, Gate, Qubit};

use super::PublicData;

#[derive(Clone, Debug, PartialEq)]
pub enum ServerOp {
    Cz(Qubit, Qubit),
    Gate(Qubit, Gate),
    /// Joint measurement of the listed qubits; outcomes are appended to the
    /// record as one entry, bit `t` for target `t`.
    Measure(Vec<(Qubit, Basis)>),
    /// Private uniform randomness of the given number of bits.
    Coin(u32),
}

/// Everything the server observed through its own operations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ServerRecord {
    pub measurements: Vec<Vec<u8>>,
    pub coins: Vec<u64>,
}

pub trait ServerStrategy: Debug + Send + Sync {
    fn name(&self) -> String;

    /// Operations on the received register before bridge outcomes are reported.
    fn receive_state(&self, public: &PublicData) -> Vec<ServerOp>;

    fn report_bridges(&self, public: &PublicData, record: &ServerRecord) -> Vec<u8>;

    /// Operations after the corrections `(A, Π)` arrive.
    fn receive_corrections(
        &self,
        public: &PublicData,
        record: &ServerRecord,
        a: &[u8],
        pi: &[u8],
    ) -> Vec<ServerOp>;

    /// `(s_a, s_p)`.
    fn report_outcomes(&self, public: &PublicData, record: &ServerRecord) -> (Vec<u8>, Vec<u8>);

    /// Upper bound on the measurement and coin bits one run consumes.
    fn random_bits(&self, public: &PublicData) -> usize {
        public.qt.n_b() + public.qt.n_a() + public.qt.n_p()
    }
}

fn honest_bridge_ops(public: &PublicData) -> Vec<ServerOp> {
    let qt = &public.qt;
    let mut ops = Vec::new();
    for (k, &(i, j)) in qt.bridge_positions().iter().enumerate() {
        ops.push(ServerOp::Cz(Qubit::Bridge(k), Qubit::Ancillary(i)));
        ops.push(ServerOp::Cz(Qubit::Bridge(k), Qubit::Primary(j)));
        ops.push(ServerOp::Measure(vec![(Qubit::Bridge(k), Basis::PauliY)]));
    }
    for (i, j) in qt.fixed_edges() {
        ops.push(ServerOp::Cz(Qubit::Primary(j), Qubit::Ancillary(i)));
    }
    ops
}

fn honest_bridge_outcomes(public: &PublicData, record: &ServerRecord) -> Vec<u8> {
    record.measurements[..public.qt.n_b()].iter().map(|m| m[0]).collect()
}

fn honest_final_ops(public: &PublicData, a: &[u8], pi: &[u8]) -> Vec<ServerOp> {
    let theta = public.theta;
    let mut targets: Vec<(Qubit, Basis)> = a
        .iter()
        .enumerate()
        .map(|(i, &ai)| (Qubit::Ancillary(i), Basis::SRotatedTheta(ai % 4, theta)))
        .collect();
    targets.extend(
        pi.iter()
            .enumerate()
            .map(|(j, &pj)| (Qubit::Primary(j), Basis::SRotatedHadamard(pj % 4))),
    );
    vec![ServerOp::Measure(targets)]
}

fn honest_final_outcomes(public: &PublicData, record: &ServerRecord) -> (Vec<u8>, Vec<u8>) {
    let last = record.measurements.last().expect("final measurement recorded");
    let n_a = public.qt.n_a();
    (last[..n_a].to_vec(), last[n_a..].to_vec())
}

/// Entangle with `E_Q̃`, measure bridges in the Y basis, then measure every
/// ancilla in `S^{A_i}`-rotated θ basis and every primary in `S^{Π_j}`-rotated
/// Hadamard basis. All outcomes are reported truthfully.
#[derive(Clone, Copy, Debug, Default)]
pub struct Honest;

impl ServerStrategy for Honest {
    fn name(&self) -> String {
        "honest".into()
    }
    fn receive_state(&self, public: &PublicData) -> Vec<ServerOp> {
        honest_bridge_ops(public)
    }
    fn report_bridges(&self, public: &PublicData, record: &ServerRecord) -> Vec<u8> {
        honest_bridge_outcomes(public, record)
    }
    fn receive_corrections(&self, public: &PublicData, _: &ServerRecord, a: &[u8], pi: &[u8]) -> Vec<ServerOp> {
        honest_final_ops(public, a, pi)
    }
    fn report_outcomes(&self, public: &PublicData, record: &ServerRecord) -> (Vec<u8>, Vec<u8>) {
        honest_final_outcomes(public, record)
    }
}

/// Does nothing to the register and reports all-zero strings. The received
/// qubits stay with the server.
#[derive(Clone, Copy, Debug, Default)]
pub struct EchoZeros;

impl ServerStrategy for EchoZeros {
    fn name(&self) -> String {
        "zeros".into()
    }
    fn random_bits(&self, _: &PublicData) -> usize {
        0
    }
    fn receive_state(&self, _: &PublicData) -> Vec<ServerOp> {
        Vec::new()
    }
    fn report_bridges(&self, public: &PublicData, _: &ServerRecord) -> Vec<u8> {
        vec![0; public.qt.n_b()]
    }
    fn receive_corrections(&self, _: &PublicData, _: &ServerRecord, _: &[u8], _: &[u8]) -> Vec<ServerOp> {
        Vec::new()
    }
    fn report_outcomes(&self, public: &PublicData, _: &ServerRecord) -> (Vec<u8>, Vec<u8>) {
        (vec![0; public.qt.n_a()], vec![0; public.qt.n_p()])
    }
}

/// Ignores the register and reports independent uniform bits.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformRandom;

fn coin_bits(v: u64, n: usize) -> Vec<u8> {
    (0..n).map(|t| ((v >> t) & 1) as u8).collect()
}

impl ServerStrategy for UniformRandom {
    fn name(&self) -> String {
        "uniform".into()
    }
    fn receive_state(&self, public: &PublicData) -> Vec<ServerOp> {
        vec![ServerOp::Coin(public.qt.n_b() as u32)]
    }
    fn report_bridges(&self, public: &PublicData, record: &ServerRecord) -> Vec<u8> {
        coin_bits(record.coins[0], public.qt.n_b())
    }
    fn receive_corrections(&self, public: &PublicData, _: &ServerRecord, _: &[u8], _: &[u8]) -> Vec<ServerOp> {
        vec![ServerOp::Coin((public.qt.n_a() + public.qt.n_p()) as u32)]
    }
    fn report_outcomes(&self, public: &PublicData, record: &ServerRecord) -> (Vec<u8>, Vec<u8>) {
        let bits = coin_bits(record.coins[1], public.qt.n_a() + public.qt.n_p());
        let n_a = public.qt.n_a();
        (bits[..n_a].to_vec(), bits[n_a..].to_vec())
    }
}

/// Behaves honestly except that the reported bridge outcomes are
/// `table[s]`, where `s` is the true Y-basis outcome string (as an index,
/// bit `k` for bridge `k`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BridgeResponse {
    table: Vec<Vec<u8>>,
}

impl BridgeResponse {
    pub fn new(n_b: usize, table: Vec<Vec<u8>>) -> Result<Self> {
        if table.len() != 1 << n_b || table.iter().any(|r| r.len() != n_b || r.iter().any(|&b| b > 1)) {
            return Err(Error::Invalid(format!(
                "response table needs {} rows of {n_b} bits",
                1usize << n_b
            )));
        }
        Ok(Self { table })
    }

    /// Always report zeros.
    pub fn zeros(n_b: usize) -> Self {
        Self {
            table: vec![vec![0; n_b]; 1 << n_b],
        }
    }

    /// Report the complement of the true outcomes.
    pub fn flipped(n_b: usize) -> Self {
        Self {
            table: (0..1u64 << n_b)
                .map(|s| coin_bits(!s, n_b))
                .collect(),
        }
    }

    /// All `(2^{n_b})^{2^{n_b}}` deterministic response tables.
    pub fn all(n_b: usize) -> Result<Vec<Self>> {
        let rows = 1usize << n_b;
        let total_bits = rows * n_b;
        crate::error::guard("response-table bits", total_bits, 16)?;
        Ok((0..1u64 << total_bits)
            .map(|code| Self {
                table: (0..rows)
                    .map(|r| coin_bits(code >> (r * n_b), n_b))
                    .collect(),
            })
            .collect())
    }

    pub fn respond(&self, truth: &[u8]) -> Vec<u8> {
        self.table[BinVector::from_bits(truth).to_index() as usize].clone()
    }

    pub fn table(&self) -> &[Vec<u8>] {
        &self.table
    }
}

impl ServerStrategy for BridgeResponse {
    fn name(&self) -> String {
        let rows: Vec<String> = self
            .table
            .iter()
            .map(|r| r.iter().map(|b| char::from(b'0' + b)).collect())
            .collect();
        format!("bridge-response[{}]", rows.join(","))
    }
    fn receive_state(&self, public: &PublicData) -> Vec<ServerOp> {
        honest_bridge_ops(public)
    }
    fn report_bridges(&self, public: &PublicData, record: &ServerRecord) -> Vec<u8> {
        self.respond(&honest_bridge_outcomes(public, record))
    }
    fn receive_corrections(&self, public: &PublicData, _: &ServerRecord, a: &[u8], pi: &[u8]) -> Vec<ServerOp> {
        honest_final_ops(public, a, pi)
    }
    fn report_outcomes(&self, public: &PublicData, record: &ServerRecord) -> (Vec<u8>, Vec<u8>) {
        honest_final_outcomes(public, record)
    }
}

/// Names accepted by [`adversary_by_name`].
pub const ADVERSARIES: &[&str] = &["honest", "zeros", "uniform", "zero-bridge", "flip-bridge"];

pub fn adversary_by_name(name: &str, n_b: usize) -> Result<Box<dyn ServerStrategy>> {
    Ok(match name {
        "honest" => Box::new(Honest),
        "zeros" => Box::new(EchoZeros),
        "uniform" => Box::new(UniformRandom),
        "zero-bridge" => Box::new(BridgeResponse::zeros(n_b)),
        "flip-bridge" => Box::new(BridgeResponse::flipped(n_b)),
        _ => {
            return Err(Error::Invalid(format!(
                "unknown adversary {name:?}; available: {}",
                ADVERSARIES.join(", ")
            )))
        }
    })
}
