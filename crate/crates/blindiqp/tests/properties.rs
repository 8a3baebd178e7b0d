mod common;

use blindiqp::gf2lin::{enumerate_code, matroid_equivalent, BinMatrix, BinVector, Span};
use blindiqp::graphs::{bridge_break_branches, entangle, extend, reduce, ExtendedIqpGraph};
use blindiqp::protocol::{client_corrections, invert_corrections, ClientSecrets};
use blindiqp::qsim::{fidelity, Basis, Gate, PureState, Qubit};
use blindiqp::security::{trace_distance, view_distance, server_view};
use blindiqp::xprog::{bias_codeword_formula, bias_direct, exact_distribution, XProgram};
use common::*;
use proptest::prelude::*;

fn bin_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = BinMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(0u8..2, c), r)
            .prop_map(|rows| BinMatrix::from_rows(&rows).unwrap())
    })
}

/// Programs without zero rows.
fn program(max_a: usize, max_p: usize) -> impl Strategy<Value = XProgram> {
    (bin_matrix(max_a, max_p), 0.0..std::f64::consts::PI).prop_filter_map("zero row", |(q, t)| {
        if q.has_zero_row() {
            None
        } else {
            XProgram::new(q, t).ok()
        }
    })
}

fn extended(max_a: usize, max_p: usize) -> impl Strategy<Value = ExtendedIqpGraph> {
    (1..=max_a, 1..=max_p).prop_flat_map(|(a, p)| {
        prop::collection::vec(prop::collection::vec(-1i8..=1, p), a)
            .prop_map(|rows| ExtendedIqpGraph::new(rows).unwrap())
    })
}

fn bloch() -> impl Strategy<Value = (f64, f64)> {
    (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn column_echelon_is_idempotent(m in bin_matrix(6, 6)) {
        let e = m.column_echelon();
        prop_assert_eq!(e.column_echelon(), e);
    }

    #[test]
    fn inverse_is_two_sided(m in bin_matrix(6, 6).prop_filter("square", |m| m.rows() == m.cols())) {
        if let Ok(inv) = m.inverse() {
            let id = BinMatrix::identity(m.rows());
            prop_assert_eq!(inv.mul(&m).unwrap(), id.clone());
            prop_assert_eq!(m.mul(&inv).unwrap(), id);
        } else {
            prop_assert!(m.rank() < m.rows());
        }
    }

    #[test]
    fn code_size_is_two_to_the_rank(m in bin_matrix(6, 6)) {
        prop_assert_eq!(enumerate_code(&m, Span::Columns).unwrap().len(), 1 << m.rank());
        prop_assert_eq!(enumerate_code(&m, Span::Rows).unwrap().len(), 1 << m.rank());
    }

    #[test]
    fn matroid_equivalence_is_reflexive_and_symmetric(a in bin_matrix(4, 4), b in bin_matrix(4, 4)) {
        prop_assert!(matroid_equivalent(&a, &a).unwrap());
        prop_assert_eq!(matroid_equivalent(&a, &b).unwrap(), matroid_equivalent(&b, &a).unwrap());
    }

    #[test]
    fn distribution_normalises(xp in program(8, 6)) {
        let d = exact_distribution(&xp).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distribution_matches_dense_product(xp in program(5, 4)) {
        let oracle = dense_distribution(xp.q(), xp.theta());
        for (a, b) in exact_distribution(&xp).unwrap().probs().iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn row_order_does_not_matter(xp in program(5, 4), seed in any::<u64>()) {
        let n = xp.n_a();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left((seed as usize) % n);
        let shuffled = XProgram::new(xp.q().permute_rows(&perm), xp.theta()).unwrap();
        let tv = exact_distribution(&xp).unwrap().tv_distance(&exact_distribution(&shuffled).unwrap());
        prop_assert!(tv < 1e-12);
    }

    #[test]
    fn repeated_row_doubles_the_angle(xp in program(1, 5)) {
        let q = xp.q();
        let twice = BinMatrix::from_row_vectors(q.cols(), &[q.row(0), q.row(0)]).unwrap();
        let a = exact_distribution(&XProgram::new(twice, xp.theta()).unwrap()).unwrap();
        let b = exact_distribution(&XProgram::new(q.clone(), 2.0 * xp.theta()).unwrap()).unwrap();
        prop_assert!(a.tv_distance(&b) < 1e-12);
    }

    #[test]
    fn bias_formula_matches_direct(xp in program(8, 6), mask in any::<u64>()) {
        let s = BinVector::from_index(xp.n_p(), mask);
        let direct = bias_direct(&exact_distribution(&xp).unwrap(), &s).unwrap();
        let formula = bias_codeword_formula(&xp, &s).unwrap().value;
        prop_assert!((direct - formula).abs() < 1e-9);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&direct));
    }

    #[test]
    fn gates_preserve_norm(parts in prop::collection::vec(bloch(), 1..5), g in 0usize..7) {
        let labels: Vec<(Qubit, f64, f64)> =
            parts.iter().enumerate().map(|(k, &(t, p))| (Qubit::Primary(k), t, p)).collect();
        let mut s = product_state(&labels);
        let gate = [Gate::X, Gate::Y, Gate::Z, Gate::H, Gate::S, Gate::Sdg, Gate::SqrtY][g];
        s.apply_gate(Qubit::Primary(0), gate).unwrap();
        if parts.len() > 1 {
            s.apply_cz(Qubit::Primary(0), Qubit::Primary(1)).unwrap();
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cz_is_symmetric_and_self_inverse(a in bloch(), b in bloch()) {
        let s = product_state(&[(Qubit::Primary(0), a.0, a.1), (Qubit::Ancillary(0), b.0, b.1)]);
        let mut ab = s.clone();
        ab.apply_cz(Qubit::Primary(0), Qubit::Ancillary(0)).unwrap();
        let mut ba = s.clone();
        ba.apply_cz(Qubit::Ancillary(0), Qubit::Primary(0)).unwrap();
        prop_assert!((fidelity(&ab, &ba).unwrap() - 1.0).abs() < 1e-12);
        ab.apply_cz(Qubit::Primary(0), Qubit::Ancillary(0)).unwrap();
        prop_assert!((fidelity(&ab, &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_probabilities_sum_to_one(a in bloch(), k in 0u8..4, t in 0.0..1.0f64) {
        let s = product_state(&[(Qubit::Primary(0), a.0, a.1)]);
        for basis in [
            Basis::Computational,
            Basis::Hadamard,
            Basis::PauliY,
            Basis::Theta(t),
            Basis::SRotatedHadamard(k),
            Basis::SRotatedTheta(k, t),
            Basis::SqrtYRotated(k),
        ] {
            let [p0, p1] = s.outcome_probabilities(Qubit::Primary(0), basis).unwrap();
            prop_assert!((p0 + p1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reduce_inverts_extend(q in bin_matrix(3, 3), picks in prop::collection::vec(any::<bool>(), 9)) {
        let positions: Vec<(usize, usize)> = (0..q.rows())
            .flat_map(|i| (0..q.cols()).map(move |j| (i, j)))
            .filter(|&(i, j)| picks[i * 3 + j])
            .collect();
        let qt = extend(&q, &positions).unwrap();
        let plan: Vec<u8> = qt.bridge_positions().iter().map(|&(i, j)| q.get(i, j) as u8).collect();
        prop_assert_eq!(reduce(&qt, &plan).unwrap(), q);
    }

    #[test]
    fn entangling_twice_is_identity(qt in extended(3, 3), parts in prop::collection::vec(bloch(), 15)) {
        let mut labels = Vec::new();
        for j in 0..qt.n_p() { labels.push(Qubit::Primary(j)); }
        for i in 0..qt.n_a() { labels.push(Qubit::Ancillary(i)); }
        for k in 0..qt.n_b() { labels.push(Qubit::Bridge(k)); }
        let spec: Vec<(Qubit, f64, f64)> = labels.iter().zip(&parts).map(|(&q, &(t, p))| (q, t, p)).collect();
        let s = product_state(&spec);
        let mut e = s.clone();
        entangle(&mut e, &qt).unwrap();
        entangle(&mut e, &qt).unwrap();
        prop_assert!((fidelity(&e, &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bridge_corrections_restore_the_program_state(
        qt in extended(3, 3),
        plan_bits in any::<u16>(),
        pad_bits in any::<u16>(),
        parts in prop::collection::vec(bloch(), 6),
    ) {
        let n_b = qt.n_b();
        let d_b: Vec<u8> = (0..n_b).map(|k| ((plan_bits >> k) & 1) as u8).collect();
        let r_b: Vec<u8> = (0..n_b).map(|k| ((pad_bits >> k) & 1) as u8).collect();
        let q = reduce(&qt, &d_b).unwrap();
        let mut spec = Vec::new();
        for j in 0..qt.n_p() { spec.push((Qubit::Primary(j), parts[j].0, parts[j].1)); }
        for i in 0..qt.n_a() { spec.push((Qubit::Ancillary(i), parts[3 + i].0, parts[3 + i].1)); }
        let phi = product_state(&spec);
        let target = entangle_by_phase(&phi, &q);
        let mut total = 0.0;
        for (p, b) in bridge_break_branches(&phi, &qt, &d_b, &r_b).unwrap() {
            total += p;
            for c in &b.corrections {
                prop_assert!(!matches!(c.qubit, Qubit::Bridge(_)));
                prop_assert!(c.quarter_turns < 4);
            }
            let mut s = b.state.reorder(phi.labels()).unwrap();
            blindiqp::graphs::apply_corrections(&mut s, &b.corrections, true).unwrap();
            prop_assert!(fidelity(&s, &target).unwrap() >= 1.0 - 1e-10);
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corrections_invert(
        qt in extended(3, 3).prop_filter("at most three bridges", |g| g.n_b() <= 3),
        bits in prop::collection::vec(0u8..4, 32),
    ) {
        let (n_p, n_a, n_b) = (qt.n_p(), qt.n_a(), qt.n_b());
        let secrets = ClientSecrets {
            r_p: bits[0..n_p].iter().map(|b| b & 1).collect(),
            d_p: bits[3..3 + n_p].to_vec(),
            r_a: bits[6..6 + n_a].iter().map(|b| b & 1).collect(),
            d_a: bits[9..9 + n_a].to_vec(),
            r_b: bits[12..12 + n_b].iter().map(|b| b & 1).collect(),
            d_b: bits[15..15 + n_b].iter().map(|b| b & 1).collect(),
        };
        let s_b: Vec<u8> = bits[18..18 + n_b].iter().map(|b| b & 1).collect();
        let (a, pi) = client_corrections(&qt, &secrets, &s_b).unwrap();
        let (ang_a, ang_p) = invert_corrections(&qt, &secrets.d_b, &secrets.r_b, &s_b, &a, &pi).unwrap();
        for i in 0..n_a {
            prop_assert_eq!(ang_a[i], (secrets.d_a[i] + 2 * secrets.r_a[i]) % 4);
        }
        for j in 0..n_p {
            prop_assert_eq!(ang_p[j], (secrets.d_p[j] + 2 * secrets.r_p[j]) % 4);
        }
    }
}

#[test]
fn trace_distance_of_a_state_with_itself_is_zero() {
    let s = product_state(&[(Qubit::Primary(0), 0.3, 1.1), (Qubit::Primary(1), 2.0, 0.4)]);
    let rho = s.reduced_density(&[Qubit::Primary(0), Qubit::Primary(1)]).unwrap();
    assert!(trace_distance(&rho, &rho).unwrap() < 1e-15);
}

#[test]
fn view_distances_lie_in_the_unit_interval() {
    use blindiqp::protocol::{Checkpoint, EchoZeros, Honest, Runner};
    let inst = minimal_instance();
    let a = server_view(Runner::Blind, &inst, Checkpoint::AfterCorrections, &Honest).unwrap();
    let b = server_view(Runner::IdealSimulator, &inst, Checkpoint::AfterCorrections, &EchoZeros).unwrap();
    let d = view_distance(&a, &b);
    for v in [d.quantum, d.classical, d.joint, d.combined] {
        assert!((0.0..=1.0).contains(&v));
    }
    assert_eq!(view_distance(&a, &a).combined, 0.0);
}

#[test]
fn measurement_sampling_matches_branches() {
    use blindiqp::rng::{stream, Domain};
    let s = product_state(&[(Qubit::Primary(0), 1.0, 0.7)]);
    let p1: f64 = s
        .measure_branches(Qubit::Primary(0), Basis::Hadamard)
        .unwrap()
        .iter()
        .filter(|b| b.outcome == 1)
        .map(|b| b.prob)
        .sum();
    let n = 20_000;
    let mut rng = stream(1, Domain::Client, 0);
    let ones = (0..n)
        .filter(|_| s.measure(Qubit::Primary(0), Basis::Hadamard, &mut rng).unwrap().0 == 1)
        .count();
    let sigma = (n as f64 * p1 * (1.0 - p1)).sqrt();
    assert!((ones as f64 - n as f64 * p1).abs() < 5.0 * sigma);
}

#[test]
fn bases_resolve_the_identity() {
    let _ = PureState::empty();
    for basis in [
        Basis::Computational,
        Basis::Hadamard,
        Basis::PauliY,
        Basis::Theta(0.4),
        Basis::SRotatedHadamard(3),
        Basis::SRotatedTheta(1, 0.4),
        Basis::SqrtYRotated(1),
    ] {
        let v = basis.vectors();
        for r in 0..2 {
            for c in 0..2 {
                let sum = v[0][r] * v[0][c].conj() + v[1][r] * v[1][c].conj();
                let id = if r == c { 1.0 } else { 0.0 };
                assert!((sum.re - id).abs() < 1e-12 && sum.im.abs() < 1e-12, "{basis:?}");
            }
        }
    }
}

/// `U diag(λ) U†` with `U` from a QR factorisation of a random matrix.
fn conjugated(lambda: &[f64], entries: &[(f64, f64)]) -> nalgebra::DMatrix<num_complex::Complex64> {
    use nalgebra::DMatrix;
    use num_complex::Complex64 as C;
    let n = lambda.len();
    let g = DMatrix::<C>::from_fn(n, n, |r, c| {
        let (a, b) = entries[r * n + c];
        C::new(a, b)
    });
    let u = g.qr().q();
    let d = DMatrix::<C>::from_fn(n, n, |r, c| if r == c { C::new(lambda[r], 0.0) } else { C::new(0.0, 0.0) });
    &u * d * u.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn half_trace_norm_on_degenerate_spectra(
        lambda in prop::collection::vec(prop::sample::select(vec![-1.0, -0.5, 0.0, 0.5, 1.0]), 8),
        entries in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64),
    ) {
        let d = conjugated(&lambda, &entries);
        let want = 0.5 * lambda.iter().map(|l| l.abs()).sum::<f64>();
        prop_assert!((blindiqp::security::half_trace_norm(&d) - want).abs() < 1e-10);
    }
}

#[test]
fn half_trace_norm_of_a_repeated_row_hamiltonian() {
    use nalgebra::DMatrix;
    use num_complex::Complex64 as C;
    let q = matrix(&[&[0, 1, 0], &[0, 0, 1], &[1, 1, 1], &[1, 0, 0], &[1, 1, 1]]);
    let mut h = DMatrix::<C>::zeros(8, 8);
    for i in 0..q.rows() {
        let m: usize = (0..3).filter(|&j| q.get(i, j)).map(|j| 1 << j).sum();
        for x in 0..8 {
            h[(x ^ m, x)] += C::new(1.0, 0.0);
        }
    }
    // spectrum {±5, ±1 three times each}
    assert!((blindiqp::security::half_trace_norm(&h) - 8.0).abs() < 1e-10);
}
