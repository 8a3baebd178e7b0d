//! X-programs and their output statistics.
//!
//! The program `exp(i θ Σ_i X_{q_i})` acting on `|0…0⟩` has output amplitudes
//! `2^{-n_p} Σ_p (-1)^{x·p} e^{iθ s(p)}` with `s(p) = Σ_i (-1)^{q_i·p}`. The
//! phase vector is diagonal in the Hadamard frame, so the whole distribution is
//! one Walsh-Hadamard transform of it. Nothing here touches the state-vector
//! simulator; the two are used as independent checks of each other.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{guard, Error, Result};
use crate::gf2lin::{enumerate_code, BinMatrix, BinVector, Span, CODE_MAX_RANK};
use crate::par;
use crate::rng::{self, Domain};

/// Largest `n_p` for which the full distribution is materialised.
pub const MAX_PRIMARIES: usize = 16;

/// An X-program `(Q, θ)`: `Q` has one row per program element and no zero rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProgram", into = "RawProgram")]
pub struct XProgram {
    q: BinMatrix,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawProgram {
    theta: f64,
    q: BinMatrix,
}

impl TryFrom<RawProgram> for XProgram {
    type Error = Error;
    fn try_from(raw: RawProgram) -> Result<Self> {
        XProgram::new(raw.q, raw.theta)
    }
}

impl From<XProgram> for RawProgram {
    fn from(xp: XProgram) -> Self {
        RawProgram {
            theta: xp.theta,
            q: xp.q,
        }
    }
}

impl XProgram {
    pub fn new(q: BinMatrix, theta: f64) -> Result<Self> {
        if q.rows() == 0 || q.cols() == 0 {
            return Err(Error::Invalid("program matrix must be non-empty".into()));
        }
        if q.has_zero_row() {
            return Err(Error::Invalid("program matrix has an all-zero row".into()));
        }
        if !theta.is_finite() || !(0.0..=2.0 * PI).contains(&theta) {
            return Err(Error::Invalid(format!("theta {theta} outside [0, 2π]")));
        }
        Ok(Self { q, theta })
    }

    pub fn q(&self) -> &BinMatrix {
        &self.q
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Number of program elements (ancillary qubits).
    pub fn n_a(&self) -> usize {
        self.q.rows()
    }

    /// Number of output bits (primary qubits).
    pub fn n_p(&self) -> usize {
        self.q.cols()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("program serialises")
    }

    /// Row masks as integers, bit `j` set when `Q_ij = 1`.
    pub(crate) fn row_masks(&self) -> Vec<u64> {
        (0..self.n_a())
            .map(|i| self.q.row(i).to_index())
            .collect()
    }
}

/// Probabilities over `{0,1}^n`. Index bit `j` is outcome bit `x_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1usize << n {
            return Err(Error::Dimension(format!(
                "{} probabilities for {n} bits",
                probs.len()
            )));
        }
        Ok(Self { n, probs })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            probs: vec![0.0; 1 << n],
        }
    }

    pub fn n_bits(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn probs_mut(&mut self) -> &mut [f64] {
        &mut self.probs
    }

    pub fn prob(&self, x: &BinVector) -> f64 {
        self.probs[x.to_index() as usize]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn tv_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n, "distributions over different bit counts");
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// `(bitstring, probability)` sorted by bitstring, first character is `x_1`.
    pub fn sorted_rows(&self) -> Vec<(String, f64)> {
        let mut rows: Vec<(String, f64)> = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (BinVector::from_index(self.n, i as u64).to_string(), p))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        rows
    }
}

/// The exact output distribution of `xp`, `O(2^{n_p} (n_a + n_p))`.
pub fn exact_distribution(xp: &XProgram) -> Result<OutcomeDistribution> {
    let n = xp.n_p();
    guard("primary count for exact distribution", n, MAX_PRIMARIES)?;
    let masks = xp.row_masks();
    let theta = xp.theta();
    let mut amp: Vec<Complex64> = par::map_range(1 << n, |p| {
        let odd = masks
            .iter()
            .filter(|&&m| (m & p as u64).count_ones() % 2 == 1)
            .count() as f64;
        let s = masks.len() as f64 - 2.0 * odd;
        Complex64::from_polar(1.0, theta * s)
    });
    walsh_hadamard(&mut amp);
    let norm = ((1u64 << n) as f64).powi(2);
    let probs = amp.iter().map(|a| a.norm_sqr() / norm).collect();
    OutcomeDistribution::new(n, probs)
}

fn walsh_hadamard(v: &mut [Complex64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

const SAMPLE_CHUNK: usize = 4096;

/// `count` independent draws from the output distribution of `xp`.
///
/// Draws are produced in fixed-size chunks, chunk `c` using its own stream, so
/// the result does not depend on how chunks are scheduled.
pub fn sample(xp: &XProgram, seed: u64, count: usize) -> Result<Vec<BinVector>> {
    let dist = exact_distribution(xp)?;
    Ok(sample_from(&dist, seed, count))
}

pub fn sample_from(dist: &OutcomeDistribution, seed: u64, count: usize) -> Vec<BinVector> {
    let mut cdf = Vec::with_capacity(dist.probs.len());
    let mut acc = 0.0;
    for &p in &dist.probs {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    let n = dist.n;
    par::map_range(chunks, |c| {
        let mut r = rng::stream(seed, Domain::Sampler, c as u64);
        let len = SAMPLE_CHUNK.min(count - c * SAMPLE_CHUNK);
        (0..len)
            .map(|_| {
                let u = r.gen::<f64>() * total;
                let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                BinVector::from_index(n, idx as u64)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// `P(x · s = 0 mod 2)` read off a distribution.
pub fn bias_direct(dist: &OutcomeDistribution, s: &BinVector) -> Result<f64> {
    if s.len() != dist.n {
        return Err(Error::Dimension(format!(
            "direction of length {} for {}-bit outcomes",
            s.len(),
            dist.n
        )));
    }
    let sm = s.to_index();
    Ok(dist
        .probs
        .iter()
        .enumerate()
        .filter(|(x, _)| (sm & *x as u64).count_ones() % 2 == 0)
        .map(|(_, p)| p)
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub direction: BinVector,
    /// Rows of `Q` not orthogonal to the direction.
    pub n_s: usize,
    /// Dimension of the code spanned by the columns of the selected rows.
    pub code_dimension: usize,
    pub value: f64,
    /// No row was selected, so the bias is trivially one.
    pub empty_selection: bool,
}

/// Bias along `s` as the average of `cos²(θ (n_s − 2|c|))` over the distinct
/// codewords `c` in the column span of the rows of `Q` with `q_i · s = 1`.
pub fn bias_codeword_formula(xp: &XProgram, s: &BinVector) -> Result<BiasReport> {
    if s.len() != xp.n_p() {
        return Err(Error::Dimension(format!(
            "direction of length {} for {} primaries",
            s.len(),
            xp.n_p()
        )));
    }
    let rows: Vec<usize> = (0..xp.n_a()).filter(|&i| xp.q().row(i).dot(s)).collect();
    let n_s = rows.len();
    if n_s == 0 {
        return Ok(BiasReport {
            direction: s.clone(),
            n_s,
            code_dimension: 0,
            value: 1.0,
            empty_selection: true,
        });
    }
    let qs = xp.q().select_rows(&rows);
    let rank = qs.rank();
    guard("code dimension for the bias formula", rank, CODE_MAX_RANK)?;
    let code = enumerate_code(&qs, Span::Columns)?;
    let theta = xp.theta();
    let sum: f64 = code
        .iter()
        .map(|c| {
            let arg = theta * (n_s as f64 - 2.0 * c.weight() as f64);
            arg.cos().powi(2)
        })
        .sum();
    Ok(BiasReport {
        direction: s.clone(),
        n_s,
        code_dimension: rank,
        value: sum / code.len() as f64,
        empty_selection: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_8;

    #[test]
    fn single_element_program() {
        let xp = XProgram::new(BinMatrix::from_rows(&[[1u8]]).unwrap(), 0.3).unwrap();
        let d = exact_distribution(&xp).unwrap();
        assert!((d.probs()[0] - 0.3f64.cos().powi(2)).abs() < 1e-15);
        assert!((d.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_programs() {
        let zero_row = BinMatrix::from_rows(&[[1u8, 0], [0, 0]]).unwrap();
        assert!(XProgram::new(zero_row, 0.1).is_err());
        let ok = BinMatrix::from_rows(&[[1u8]]).unwrap();
        assert!(XProgram::new(ok.clone(), -0.1).is_err());
        assert!(XProgram::new(ok, f64::NAN).is_err());
    }

    #[test]
    fn empty_selection_is_flagged() {
        let xp = XProgram::new(BinMatrix::from_rows(&[[1u8, 0]]).unwrap(), FRAC_PI_8).unwrap();
        let r = bias_codeword_formula(&xp, &BinVector::from_bits(&[0, 1])).unwrap();
        assert!(r.empty_selection);
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn json_format() {
        let xp = XProgram::from_json(r#"{"theta": 0.5, "q": [[1,0,1],[0,1,0]]}"#).unwrap();
        assert_eq!((xp.n_a(), xp.n_p()), (2, 3));
        assert_eq!(XProgram::from_json(&xp.to_json()).unwrap(), xp);
        assert!(XProgram::from_json(r#"{"theta": 0.5, "q": [[0,0]]}"#).is_err());
    }

    #[test]
    fn guard_on_primaries() {
        let q = BinMatrix::identity(MAX_PRIMARIES + 1);
        let xp = XProgram::new(q, 0.2).unwrap();
        assert!(matches!(exact_distribution(&xp), Err(Error::Guard { .. })));
    }

    #[test]
    fn sample_is_seeded() {
        let xp = XProgram::from_json(r#"{"theta": 0.7, "q": [[1,1],[0,1]]}"#).unwrap();
        let a = sample(&xp, 11, 10_000).unwrap();
        assert_eq!(a, sample(&xp, 11, 10_000).unwrap());
        assert_ne!(a, sample(&xp, 12, 10_000).unwrap());
        assert_eq!(a.len(), 10_000);
    }
}
