//! The hidden-codeword hypothesis test.
//!
//! The client takes the quadratic-residue code instance with `n_a` rows,
//! hides the distinguished direction behind a uniformly random `ŝ`, delegates
//! the resulting program through the blind protocol and accepts when the
//! fraction of outputs orthogonal to the hidden direction reaches a
//! threshold. Honest quantum servers achieve `cos²(π/8) ≈ 0.854`.

use std::f64::consts::FRAC_PI_8;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf2lin::{BinMatrix, BinVector};
use crate::graphs::ExtendedIqpGraph;
use crate::par;
use crate::protocol::{adversary_by_name, output_plain, run_once, Instance, QFamily, Runner, ServerStrategy};
use crate::rng::{stream, Domain};
use crate::xprog::{bias_codeword_formula, exact_distribution, XProgram};

/// Supported code lengths.
pub const SUPPORTED_NA: &[usize] = &[7, 23, 31];

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_THRESHOLD: f64 = 0.80;

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Nonzero squares modulo the odd prime `p`, ascending.
pub fn quadratic_residues(p: usize) -> Result<Vec<usize>> {
    if !is_prime(p) || p == 2 {
        return Err(Error::Invalid(format!("{p} is not an odd prime")));
    }
    let mut r: Vec<usize> = (1..p).map(|x| x * x % p).collect();
    r.sort_unstable();
    r.dedup();
    Ok(r)
}

fn check_na(n_a: usize) -> Result<()> {
    if !is_prime(n_a) || (n_a + 1) % 8 != 0 {
        return Err(Error::Invalid(format!(
            "n_a = {n_a} must be a prime with n_a + 1 divisible by 8"
        )));
    }
    Ok(())
}

/// `n_a × (n_p − 1)` matrix whose column `j` is the residue indicator
/// cyclically shifted down by `j`.
pub fn qr_generator_matrix(n_a: usize) -> Result<BinMatrix> {
    check_na(n_a)?;
    let n_p = n_a.div_ceil(2);
    let residues = quadratic_residues(n_a)?;
    let mut m = BinMatrix::zeros(n_a, n_p - 1);
    for j in 0..n_p - 1 {
        for &r in &residues {
            m.set((r + j) % n_a, j, true);
        }
    }
    Ok(m)
}

/// Identity with `ŝ` written into the top of the last column.
pub fn transformation_matrix(s_hat: &BinVector) -> BinMatrix {
    let n_p = s_hat.len() + 1;
    let mut a = BinMatrix::identity(n_p);
    for i in 0..s_hat.len() {
        a.set(i, n_p - 1, s_hat.get(i));
    }
    a
}

#[derive(Clone, Debug, Serialize)]
pub struct TestInstance {
    pub n_a: usize,
    pub n_p: usize,
    pub qr: BinMatrix,
    pub qs: BinMatrix,
    pub s_hat: BinVector,
    pub a: BinMatrix,
    pub q: BinMatrix,
    pub qt: ExtendedIqpGraph,
    /// `(0, …, 0, 1)`.
    pub s: BinVector,
    pub theta: f64,
}

impl TestInstance {
    /// `A^{-1} sᵀ`, the direction the outputs are tested against.
    pub fn direction(&self) -> BinVector {
        let inv = self.a.inverse().expect("A is unipotent");
        inv.mat_vec_mul(&self.s).expect("dimensions agree")
    }

    pub fn xprogram(&self) -> XProgram {
        XProgram::new(self.q.clone(), self.theta).expect("every row of Q meets the direction")
    }

    /// The program hidden in `Q̃` for the blind protocol.
    pub fn protocol_instance(&self) -> Result<Instance> {
        Instance::with_family(
            self.xprogram(),
            self.qt.clone(),
            QFamily::QuadraticResidue { n_a: self.n_a },
        )
    }
}

/// Build the instance for a given secret `ŝ`.
pub fn build_test_instance(n_a: usize, s_hat: &BinVector) -> Result<TestInstance> {
    let qr = qr_generator_matrix(n_a)?;
    let n_p = n_a.div_ceil(2);
    if s_hat.len() != n_p - 1 {
        return Err(Error::Dimension(format!(
            "ŝ has {} bits, expected {}",
            s_hat.len(),
            n_p - 1
        )));
    }
    let qs = qr.append_column(&BinVector::ones(n_a))?;
    let a = transformation_matrix(s_hat);
    let q = qs.mul(&a)?;
    let qt_rows: Vec<Vec<i8>> = qr
        .to_rows()
        .into_iter()
        .map(|row| row.into_iter().map(|b| b as i8).chain([-1]).collect())
        .collect();
    let qt = ExtendedIqpGraph::new(qt_rows)?;
    Ok(TestInstance {
        n_a,
        n_p,
        qr,
        qs,
        s_hat: s_hat.clone(),
        a,
        q,
        qt,
        s: BinVector::unit(n_p, n_p - 1),
        theta: FRAC_PI_8,
    })
}

/// Bias of the instance along its hidden direction, by the codeword formula.
pub fn expected_bias(inst: &TestInstance) -> Result<f64> {
    Ok(bias_codeword_formula(&inst.xprogram(), &inst.direction())?.value)
}

/// How each run's output is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Full blind protocol on the state-vector simulator.
    Blind,
    /// Outputs drawn from the exact distribution, or produced directly by
    /// the cheating strategy; no protocol messages are simulated.
    Direct,
}

impl Backend {
    /// Blind where the register fits, direct otherwise.
    pub fn auto(n_a: usize) -> Self {
        if n_a <= 7 {
            Backend::Blind
        } else {
            Backend::Direct
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Blind => "blind",
            Backend::Direct => "direct",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blind" => Ok(Backend::Blind),
            "direct" => Ok(Backend::Direct),
            _ => Err(Error::Invalid(format!("unknown backend {s:?}; available: blind, direct"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TestConfig {
    pub n_a: usize,
    pub samples: usize,
    pub threshold: f64,
    pub seed: u64,
    pub adversary: String,
    pub backend: Backend,
    pub reveal_secrets: bool,
}

impl TestConfig {
    pub fn new(n_a: usize, seed: u64) -> Self {
        Self {
            n_a,
            samples: DEFAULT_SAMPLES,
            threshold: DEFAULT_THRESHOLD,
            seed,
            adversary: "honest".into(),
            backend: Backend::auto(n_a),
            reveal_secrets: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Pass,
    Fail,
}

/// Secrets, included in a report only on request.
#[derive(Clone, Debug, Serialize)]
pub struct Revealed {
    pub s_hat: BinVector,
    pub q: BinMatrix,
    pub direction: BinVector,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestReport {
    pub n_a: usize,
    pub n_p: usize,
    pub qt: ExtendedIqpGraph,
    pub theta: f64,
    pub seed: u64,
    pub adversary: String,
    pub backend: Backend,
    pub samples: usize,
    pub orthogonal_count: usize,
    pub bias_estimate: f64,
    pub threshold: f64,
    pub expected_bias: f64,
    /// Hoeffding upper bound on the probability that an honest server
    /// fails at this sample size and threshold.
    pub honest_failure_bound: f64,
    pub decision: Decision,
    /// `o` per run: `1` when the output was orthogonal to the direction.
    pub o: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secrets: Option<Revealed>,
}

impl TestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Draw `ŝ` for a test from the instance stream of `seed`.
pub fn draw_s_hat(n_a: usize, seed: u64) -> BinVector {
    let n_p = n_a.div_ceil(2);
    let mut r = stream(seed, Domain::Instance, 0);
    let bits: Vec<u8> = (0..n_p - 1).map(|_| r.gen_range(0..2u8)).collect();
    BinVector::from_bits(&bits)
}

fn outputs_blind(inst: &TestInstance, server: &dyn ServerStrategy, cfg: &TestConfig) -> Result<Vec<BinVector>> {
    let pinst = inst.protocol_instance()?;
    par::map_range(cfg.samples, |r| {
        run_once(Runner::Blind, &pinst, server, cfg.seed, r as u64).map(|(x, _, _)| BinVector::from_bits(&x))
    })
    .into_iter()
    .collect()
}

fn outputs_direct(inst: &TestInstance, cfg: &TestConfig) -> Result<Vec<BinVector>> {
    let n_p = inst.n_p;
    match cfg.adversary.as_str() {
        "honest" => {
            let dist = exact_distribution(&inst.xprogram())?;
            Ok(crate::xprog::sample_from(&dist, cfg.seed, cfg.samples))
        }
        "uniform" => Ok(par::map_range(cfg.samples, |r| {
            let mut g = stream(cfg.seed, Domain::Server, r as u64);
            let bits: Vec<u8> = (0..n_p).map(|_| g.gen_range(0..2u8)).collect();
            BinVector::from_bits(&bits)
        })),
        "zeros" => {
            let x = output_plain(&inst.q, &vec![0; inst.n_a], &vec![0; n_p]);
            Ok(vec![BinVector::from_bits(&x); cfg.samples])
        }
        other => Err(Error::Invalid(format!(
            "adversary {other:?} needs the blind backend; the direct backend supports honest, uniform, zeros"
        ))),
    }
}

/// Run the whole test.
pub fn run_hypothesis_test(cfg: &TestConfig) -> Result<TestReport> {
    if cfg.samples == 0 {
        return Err(Error::Invalid("the test needs at least one sample".into()));
    }
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(Error::Invalid(format!("threshold {} outside [0, 1]", cfg.threshold)));
    }
    let s_hat = draw_s_hat(cfg.n_a, cfg.seed);
    let inst = build_test_instance(cfg.n_a, &s_hat)?;
    let server = adversary_by_name(&cfg.adversary, inst.qt.n_b())?;
    let outputs = match cfg.backend {
        Backend::Blind => outputs_blind(&inst, server.as_ref(), cfg)?,
        Backend::Direct => outputs_direct(&inst, cfg)?,
    };
    let direction = inst.direction();
    let o: String = outputs.iter().map(|x| if x.dot(&direction) { '0' } else { '1' }).collect();
    let orthogonal_count = o.bytes().filter(|&b| b == b'1').count();
    let bias_estimate = orthogonal_count as f64 / cfg.samples as f64;
    let expected = expected_bias(&inst)?;
    let gap = (expected - cfg.threshold).max(0.0);
    let honest_failure_bound = if expected > cfg.threshold {
        (-2.0 * cfg.samples as f64 * gap * gap).exp()
    } else {
        1.0
    };
    Ok(TestReport {
        n_a: cfg.n_a,
        n_p: inst.n_p,
        qt: inst.qt.clone(),
        theta: inst.theta,
        seed: cfg.seed,
        adversary: server.name(),
        backend: cfg.backend,
        samples: cfg.samples,
        orthogonal_count,
        bias_estimate,
        threshold: cfg.threshold,
        expected_bias: expected,
        honest_failure_bound,
        decision: if bias_estimate >= cfg.threshold {
            Decision::Pass
        } else {
            Decision::Fail
        },
        o,
        secrets: cfg.reveal_secrets.then(|| Revealed {
            s_hat: s_hat.clone(),
            q: inst.q.clone(),
            direction,
        }),
    })
}
