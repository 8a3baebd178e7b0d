//! Two-qubit operator identities for controlled-Z.
//!
//! The `S`-based decompositions equal `CZ` only up to a global phase
//! `e^{±iπ/4}`, so each check reports both the literal deviation and the
//! deviation after the best global phase is removed.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use super::{dagger, Gate, Mat2, C};

pub type Mat4 = [[C; 4]; 4];

pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [[C::new(0.0, 0.0); 4]; 4];
    for r1 in 0..2 {
        for c1 in 0..2 {
            for r2 in 0..2 {
                for c2 in 0..2 {
                    out[2 * r1 + r2][2 * c1 + c2] = a[r1][c1] * b[r2][c2];
                }
            }
        }
    }
    out
}

pub fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[C::new(0.0, 0.0); 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..4).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

fn lin(terms: &[(C, Mat4)]) -> Mat4 {
    let mut out = [[C::new(0.0, 0.0); 4]; 4];
    for (w, m) in terms {
        for r in 0..4 {
            for c in 0..4 {
                out[r][c] += w * m[r][c];
            }
        }
    }
    out
}

pub fn cz() -> Mat4 {
    let mut m = [[C::new(0.0, 0.0); 4]; 4];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = C::new(if k == 3 { -1.0 } else { 1.0 }, 0.0);
    }
    m
}

fn max_dev(a: &Mat4, b: &Mat4, phase: C) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..4 {
        for c in 0..4 {
            worst = worst.max((a[r][c] - phase * b[r][c]).norm());
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    /// `max |CZ − RHS|` entrywise.
    pub literal_error: f64,
    /// Unit phase `φ` minimising `max |CZ − φ·RHS|`, as `(re, im)`.
    pub phase: (f64, f64),
    /// `max |CZ − φ·RHS|` entrywise.
    pub projective_error: f64,
}

fn check(name: &'static str, rhs: Mat4) -> IdentityCheck {
    let target = cz();
    let overlap: C = (0..4)
        .flat_map(|r| (0..4).map(move |c| (r, c)))
        .map(|(r, c)| rhs[r][c].conj() * target[r][c])
        .sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C::new(1.0, 0.0)
    };
    IdentityCheck {
        name,
        literal_error: max_dev(&target, &rhs, C::new(1.0, 0.0)),
        phase: (phase.re, phase.im),
        projective_error: max_dev(&target, &rhs, phase),
    }
}

/// The decompositions of `CZ` used to analyse bridge measurements.
pub fn cz_decompositions() -> Vec<IdentityCheck> {
    let id = [[C::new(1.0, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(1.0, 0.0)]];
    let z = Gate::Z.matrix();
    let s = Gate::S.matrix();
    let sd = dagger(&s);
    let ii = kron(&id, &id);
    let zz = kron(&z, &z);
    let zi = kron(&z, &id);
    let iz = kron(&id, &z);
    let h = FRAC_1_SQRT_2;
    vec![
        check(
            "(S⊗S)(II + iZZ)/√2",
            mul4(&kron(&s, &s), &lin(&[(C::new(h, 0.0), ii), (C::new(0.0, h), zz)])),
        ),
        check(
            "(S†⊗S†)(II − iZZ)/√2",
            mul4(&kron(&sd, &sd), &lin(&[(C::new(h, 0.0), ii), (C::new(0.0, -h), zz)])),
        ),
        check(
            "(II + ZI + IZ − ZZ)/2",
            lin(&[
                (C::new(0.5, 0.0), ii),
                (C::new(0.5, 0.0), zi),
                (C::new(0.5, 0.0), iz),
                (C::new(-0.5, 0.0), zz),
            ]),
        ),
    ]
}
