//! IQP graphs, extended graphs with bridge/break positions, and the bridge
//! measurement that turns one into the other.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{guard, Error, Result};
use crate::gf2lin::{BinMatrix, BinVector};
use crate::qsim::{s_power, Basis, PureState, Qubit, StateSpec};
use crate::rng::Rng;

/// Bipartite graph between primaries (columns) and ancillas (rows) of `Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IqpGraph {
    q: BinMatrix,
}

impl IqpGraph {
    pub fn new(q: BinMatrix) -> Self {
        Self { q }
    }

    pub fn q(&self) -> &BinMatrix {
        &self.q
    }

    /// `(i, j)` for every `Q_ij = 1`, row-major.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.q.rows() {
            for j in 0..self.q.cols() {
                if self.q.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph iqp {\n");
        for j in 0..self.q.cols() {
            let _ = writeln!(s, "  p{} [shape=circle];", j + 1);
        }
        for i in 0..self.q.rows() {
            let _ = writeln!(s, "  a{} [shape=box];", i + 1);
        }
        for (i, j) in self.edges() {
            let _ = writeln!(s, "  p{} -- a{};", j + 1, i + 1);
        }
        s.push_str("}\n");
        s
    }
}

/// `Q̃ ∈ {-1, 0, 1}^{n_a × n_p}`. Each `-1` marks a bridge-or-break position;
/// positions are numbered `0..n_b` in row-major order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawExtended", into = "RawExtended")]
pub struct ExtendedIqpGraph {
    qt: Vec<Vec<i8>>,
    bridges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct RawExtended {
    qt: Vec<Vec<i8>>,
}

impl TryFrom<RawExtended> for ExtendedIqpGraph {
    type Error = Error;
    fn try_from(raw: RawExtended) -> Result<Self> {
        ExtendedIqpGraph::new(raw.qt)
    }
}

impl From<ExtendedIqpGraph> for RawExtended {
    fn from(g: ExtendedIqpGraph) -> Self {
        RawExtended { qt: g.qt }
    }
}

impl ExtendedIqpGraph {
    pub fn new(qt: Vec<Vec<i8>>) -> Result<Self> {
        let n_p = qt.first().map(Vec::len).unwrap_or(0);
        if qt.is_empty() || n_p == 0 {
            return Err(Error::Invalid("extended graph matrix must be non-empty".into()));
        }
        let mut bridges = Vec::new();
        for (i, row) in qt.iter().enumerate() {
            if row.len() != n_p {
                return Err(Error::Dimension(format!("row {i} has {} entries, expected {n_p}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    -1 => bridges.push((i, j)),
                    0 | 1 => {}
                    _ => return Err(Error::Invalid(format!("entry ({i},{j}) is {v}, not -1/0/1"))),
                }
            }
        }
        Ok(Self { qt, bridges })
    }

    /// The extended graph with no bridge positions.
    pub fn from_q(q: &BinMatrix) -> Self {
        extend(q, &[]).expect("no positions to check")
    }

    pub fn n_a(&self) -> usize {
        self.qt.len()
    }

    pub fn n_p(&self) -> usize {
        self.qt[0].len()
    }

    pub fn n_b(&self) -> usize {
        self.bridges.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> i8 {
        self.qt[i][j]
    }

    pub fn rows(&self) -> &[Vec<i8>] {
        &self.qt
    }

    /// `(i, j)` of bridge position `k`.
    pub fn bridge_positions(&self) -> &[(usize, usize)] {
        &self.bridges
    }

    /// Index of the bridge position at `(i, j)`, if any.
    pub fn g(&self, i: usize, j: usize) -> Option<usize> {
        self.bridges.iter().position(|&b| b == (i, j))
    }

    /// Positions with entry 1.
    pub fn fixed_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.qt.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// The controlled-Z pairs of `E_Q̃`: `(p_j, a_i)` for each 1, and
    /// `(b_k, a_i)`, `(b_k, p_j)` for each bridge position.
    pub fn cz_pairs(&self) -> Vec<(Qubit, Qubit)> {
        let mut out = Vec::new();
        for (i, row) in self.qt.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                match v {
                    1 => out.push((Qubit::Primary(j), Qubit::Ancillary(i))),
                    -1 => {
                        let k = self.g(i, j).expect("bridge position is indexed");
                        out.push((Qubit::Bridge(k), Qubit::Ancillary(i)));
                        out.push((Qubit::Bridge(k), Qubit::Primary(j)));
                    }
                    _ => {}
                }
            }
        }
        out
    }

    /// Bridge positions attached to primary `j`.
    pub fn bridges_at_primary(&self, j: usize) -> Vec<usize> {
        (0..self.n_b()).filter(|&k| self.bridges[k].1 == j).collect()
    }

    /// Bridge positions attached to ancilla `i`.
    pub fn bridges_at_ancilla(&self, i: usize) -> Vec<usize> {
        (0..self.n_b()).filter(|&k| self.bridges[k].0 == i).collect()
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph extended_iqp {\n");
        for j in 0..self.n_p() {
            let _ = writeln!(s, "  p{} [shape=circle];", j + 1);
        }
        for i in 0..self.n_a() {
            let _ = writeln!(s, "  a{} [shape=box];", i + 1);
        }
        for k in 0..self.n_b() {
            let _ = writeln!(s, "  b{} [shape=diamond];", k + 1);
        }
        for (a, b) in self.cz_pairs() {
            let _ = writeln!(s, "  {a} -- {b};");
        }
        s.push_str("}\n");
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialises")
    }
}

/// Replace the entries of `q` at `positions` with `-1`.
pub fn extend(q: &BinMatrix, positions: &[(usize, usize)]) -> Result<ExtendedIqpGraph> {
    let mut rows: Vec<Vec<i8>> = q
        .to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(|b| b as i8).collect())
        .collect();
    for &(i, j) in positions {
        if i >= q.rows() || j >= q.cols() {
            return Err(Error::Invalid(format!(
                "position ({i},{j}) outside {}x{}",
                q.rows(),
                q.cols()
            )));
        }
        if rows[i][j] == -1 {
            return Err(Error::Invalid(format!("position ({i},{j}) given twice")));
        }
        rows[i][j] = -1;
    }
    ExtendedIqpGraph::new(rows)
}

/// Resolve every bridge position `k` to `d_b[k]`.
pub fn reduce(qt: &ExtendedIqpGraph, d_b: &[u8]) -> Result<BinMatrix> {
    if d_b.len() != qt.n_b() {
        return Err(Error::Dimension(format!("{} plan bits for {} positions", d_b.len(), qt.n_b())));
    }
    let mut q = BinMatrix::zeros(qt.n_a(), qt.n_p());
    for i in 0..qt.n_a() {
        for j in 0..qt.n_p() {
            let bit = match qt.entry(i, j) {
                -1 => d_b[qt.g(i, j).expect("indexed")] != 0,
                v => v == 1,
            };
            q.set(i, j, bit);
        }
    }
    Ok(q)
}

/// The bridge plan that reduces `qt` to `q`: `d_b[k] = Q_ij` at position `k`.
/// Errors if `q` disagrees with `qt` away from the bridge positions.
pub fn plan_for(qt: &ExtendedIqpGraph, q: &BinMatrix) -> Result<Vec<u8>> {
    if q.rows() != qt.n_a() || q.cols() != qt.n_p() {
        return Err(Error::Dimension(format!(
            "{}x{} program for a {}x{} extended graph",
            q.rows(),
            q.cols(),
            qt.n_a(),
            qt.n_p()
        )));
    }
    for i in 0..qt.n_a() {
        for j in 0..qt.n_p() {
            let v = qt.entry(i, j);
            if v != -1 && (v == 1) != q.get(i, j) {
                return Err(Error::Invalid(format!(
                    "program entry ({i},{j}) does not match the extended graph"
                )));
            }
        }
    }
    Ok(qt.bridge_positions().iter().map(|&(i, j)| q.get(i, j) as u8).collect())
}

/// Largest `n_b` for which every reduction is listed.
pub const MAX_ENUMERATED_BRIDGES: usize = 16;

/// Every `(plan, Q)` reducible from `qt` whose `Q` has no zero row.
pub fn reductions(qt: &ExtendedIqpGraph) -> Result<Vec<(Vec<u8>, BinMatrix)>> {
    guard("bridge positions to enumerate", qt.n_b(), MAX_ENUMERATED_BRIDGES)?;
    let mut out = Vec::new();
    for idx in 0u64..(1 << qt.n_b()) {
        let plan = BinVector::from_index(qt.n_b(), idx).to_bits();
        let q = reduce(qt, &plan)?;
        if !q.has_zero_row() {
            out.push((plan, q));
        }
    }
    Ok(out)
}

/// Apply `E_Q̃` to a dense state holding all the needed qubits.
pub fn entangle(state: &mut PureState, qt: &ExtendedIqpGraph) -> Result<()> {
    for (a, b) in qt.cz_pairs() {
        state.apply_cz(a, b)?;
    }
    Ok(())
}

/// Preparation of bridge qubit with plan bit `d` and pad `r`: `Y^r (√Y)^d |0⟩`.
pub fn bridge_spec(d: u8, r: u8) -> StateSpec {
    StateSpec::YSqrtYZero { y: r, d }
}

/// A residual `S^quarter_turns` on one qubit (`2` is `Z`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Correction {
    pub qubit: Qubit,
    pub quarter_turns: u8,
}

/// Result of measuring every bridge qubit.
#[derive(Clone, Debug)]
pub struct BridgeOutcome {
    /// State on `P ∪ A`, equal to the corrections applied to `E_Q |φ⟩`.
    pub state: PureState,
    pub s_b: Vec<u8>,
    pub corrections: Vec<Correction>,
}

/// Residual rotations after bridge measurement:
/// `S^{(-1)^{s+r}}` on both ends of a bridge, `Z^r` on both ends of a break.
pub fn corrections_for(qt: &ExtendedIqpGraph, d_b: &[u8], r_b: &[u8], s_b: &[u8]) -> Vec<Correction> {
    let mut out = Vec::new();
    for (k, &(i, j)) in qt.bridge_positions().iter().enumerate() {
        let turns = if d_b[k] == 1 {
            if (s_b[k] + r_b[k]) % 2 == 0 {
                1
            } else {
                3
            }
        } else if r_b[k] == 1 {
            2
        } else {
            continue;
        };
        out.push(Correction {
            qubit: Qubit::Primary(j),
            quarter_turns: turns,
        });
        out.push(Correction {
            qubit: Qubit::Ancillary(i),
            quarter_turns: turns,
        });
    }
    out
}

/// Apply `S^{±quarter_turns}` for every correction; `undo` applies the inverse.
pub fn apply_corrections(state: &mut PureState, corrections: &[Correction], undo: bool) -> Result<()> {
    for c in corrections {
        let k = if undo { (4 - c.quarter_turns % 4) % 4 } else { c.quarter_turns };
        state.apply_matrix(c.qubit, &s_power(k))?;
    }
    Ok(())
}

fn with_bridges(phi: &PureState, qt: &ExtendedIqpGraph, d_b: &[u8], r_b: &[u8]) -> Result<PureState> {
    if d_b.len() != qt.n_b() || r_b.len() != qt.n_b() {
        return Err(Error::Dimension(format!(
            "plan of {} and pads of {} for {} bridge positions",
            d_b.len(),
            r_b.len(),
            qt.n_b()
        )));
    }
    let specs: Vec<(Qubit, StateSpec)> = (0..qt.n_b())
        .map(|k| (Qubit::Bridge(k), bridge_spec(d_b[k], r_b[k])))
        .collect();
    let mut s = phi.tensor(&PureState::prepare(&specs)?)?;
    entangle(&mut s, qt)?;
    Ok(s)
}

/// Attach bridge qubits to `phi` (a state on `P ∪ A`), apply `E_Q̃`, measure
/// every bridge in the Y basis and report the residual corrections.
pub fn bridge_break_transform(
    phi: &PureState,
    qt: &ExtendedIqpGraph,
    d_b: &[u8],
    r_b: &[u8],
    rng: &mut Rng,
) -> Result<BridgeOutcome> {
    let mut s = with_bridges(phi, qt, d_b, r_b)?;
    let mut s_b = Vec::with_capacity(qt.n_b());
    for k in 0..qt.n_b() {
        let (o, next) = s.measure(Qubit::Bridge(k), Basis::PauliY, rng)?;
        s_b.push(o);
        s = next;
    }
    let corrections = corrections_for(qt, d_b, r_b, &s_b);
    Ok(BridgeOutcome {
        state: s,
        s_b,
        corrections,
    })
}

/// Every branch of [`bridge_break_transform`] with its probability.
pub fn bridge_break_branches(
    phi: &PureState,
    qt: &ExtendedIqpGraph,
    d_b: &[u8],
    r_b: &[u8],
) -> Result<Vec<(f64, BridgeOutcome)>> {
    let mut frontier = vec![(1.0, with_bridges(phi, qt, d_b, r_b)?, Vec::new())];
    for k in 0..qt.n_b() {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for (p, s, outs) in frontier {
            for b in s.measure_branches(Qubit::Bridge(k), Basis::PauliY)? {
                let mut o: Vec<u8> = outs.clone();
                o.push(b.outcome);
                next.push((p * b.prob, b.state, o));
            }
        }
        frontier = next;
    }
    Ok(frontier
        .into_iter()
        .map(|(p, state, s_b)| {
            let corrections = corrections_for(qt, d_b, r_b, &s_b);
            (p, BridgeOutcome { state, s_b, corrections })
        })
        .collect())
}
