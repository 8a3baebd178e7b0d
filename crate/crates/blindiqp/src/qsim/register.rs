use crate::error::{Error, Result};

use super::{Basis, Gate, Mat2, PureState, Qubit};

/// A collection of mutually unentangled [`PureState`] factors.
///
/// Two factors are merged only when a two-qubit gate spans them, and fully
/// measured factors are dropped, so work scales with the largest entangled
/// cluster rather than with the total qubit count.
#[derive(Clone, Debug, Default)]
pub struct Register {
    parts: Vec<PureState>,
}

/// Largest number of qubits measured in one joint measurement.
const MAX_JOINT: usize = 24;

impl Register {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, state: PureState) -> Result<()> {
        for q in state.labels() {
            if self.contains(*q) {
                return Err(Error::Invalid(format!("qubit {q} is already in the register")));
            }
        }
        if state.num_qubits() > 0 {
            self.parts.push(state);
        }
        Ok(())
    }

    pub fn contains(&self, q: Qubit) -> bool {
        self.locate(q).is_some()
    }

    pub fn labels(&self) -> Vec<Qubit> {
        self.parts.iter().flat_map(|p| p.labels().iter().copied()).collect()
    }

    pub fn num_qubits(&self) -> usize {
        self.parts.iter().map(PureState::num_qubits).sum()
    }

    pub fn parts(&self) -> &[PureState] {
        &self.parts
    }

    fn locate(&self, q: Qubit) -> Option<(usize, usize)> {
        self.parts
            .iter()
            .enumerate()
            .find_map(|(c, p)| p.position(q).map(|k| (c, k)))
    }

    fn find(&self, q: Qubit) -> Result<(usize, usize)> {
        self.locate(q)
            .ok_or_else(|| Error::Invalid(format!("qubit {q} is not in the register")))
    }

    pub fn apply_matrix(&mut self, q: Qubit, m: &Mat2) -> Result<()> {
        let (c, _) = self.find(q)?;
        self.parts[c].apply_matrix(q, m)
    }

    pub fn apply_gate(&mut self, q: Qubit, g: Gate) -> Result<()> {
        self.apply_matrix(q, &g.matrix())
    }

    pub fn apply_cz(&mut self, a: Qubit, b: Qubit) -> Result<()> {
        let (ca, _) = self.find(a)?;
        let (cb, _) = self.find(b)?;
        let c = if ca == cb {
            ca
        } else {
            let (lo, hi) = (ca.min(cb), ca.max(cb));
            let upper = self.parts.swap_remove(hi);
            self.parts[lo] = self.parts[lo].tensor(&upper)?;
            lo
        };
        self.parts[c].apply_cz(a, b)
    }

    /// Rotate the measured qubits into the computational frame and return the
    /// joint outcome distribution. Outcome bit `t` belongs to `targets[t]`.
    /// Must be followed by [`Register::collapse`] with the same targets.
    pub(crate) fn prepare_joint(&mut self, targets: &[(Qubit, Basis)]) -> Result<Vec<f64>> {
        if targets.len() > MAX_JOINT {
            return Err(Error::Guard {
                what: "qubits in one joint measurement",
                value: targets.len(),
                limit: MAX_JOINT,
            });
        }
        let groups = self.group(targets)?;
        for (c, members) in &groups {
            for &(t, k) in members {
                self.parts[*c].rotate_for_measurement(k, targets[t].1);
            }
        }
        let mut joint = vec![1.0; 1 << targets.len()];
        for (c, members) in &groups {
            let positions: Vec<usize> = members.iter().map(|&(_, k)| k).collect();
            let marg = self.parts[*c].marginal(&positions);
            for (o, p) in joint.iter_mut().enumerate() {
                let local = members
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (u, &(t, _))| acc | (((o >> t) & 1) << u));
                *p *= marg[local];
            }
        }
        Ok(joint)
    }

    /// Project onto a joint outcome after [`Register::prepare_joint`].
    pub(crate) fn collapse(&mut self, targets: &[(Qubit, Basis)], outcome: usize) -> Result<()> {
        let groups = self.group(targets)?;
        let mut replaced = Vec::with_capacity(groups.len());
        for (c, members) in &groups {
            let positions: Vec<usize> = members.iter().map(|&(_, k)| k).collect();
            let local = members
                .iter()
                .enumerate()
                .fold(0usize, |acc, (u, &(t, _))| acc | (((outcome >> t) & 1) << u));
            replaced.push((*c, self.parts[*c].project(&positions, local)));
        }
        for (c, state) in replaced {
            self.parts[c] = state;
        }
        self.parts.retain(|p| p.num_qubits() > 0);
        Ok(())
    }

    /// Targets grouped by factor: `(factor, [(target index, bit position)])`.
    fn group(&self, targets: &[(Qubit, Basis)]) -> Result<Vec<(usize, Vec<(usize, usize)>)>> {
        let mut groups: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
        for (t, &(q, _)) in targets.iter().enumerate() {
            if targets[..t].iter().any(|&(p, _)| p == q) {
                return Err(Error::Invalid(format!("qubit {q} measured twice")));
            }
            let (c, k) = self.find(q)?;
            match groups.iter_mut().find(|(gc, _)| *gc == c) {
                Some((_, members)) => members.push((t, k)),
                None => groups.push((c, vec![(t, k)])),
            }
        }
        Ok(groups)
    }

    /// The full state as one vector, factors in storage order.
    pub fn to_state(&self) -> PureState {
        self.parts
            .iter()
            .fold(PureState::empty(), |acc, p| acc.tensor(p).expect("labels are distinct"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{fidelity, StateSpec};

    #[test]
    fn cz_merges_and_joint_measure_matches_dense() {
        let qs = [Qubit::Primary(0), Qubit::Ancillary(0), Qubit::Bridge(0)];
        let mut reg = Register::new();
        let mut dense = PureState::empty();
        for (q, spec) in qs.iter().zip([StateSpec::Plus, StateSpec::PlusY, StateSpec::Plus]) {
            let s = PureState::prepare(&[(*q, spec)]).unwrap();
            dense = dense.tensor(&s).unwrap();
            reg.add(s).unwrap();
        }
        reg.apply_cz(qs[0], qs[2]).unwrap();
        dense.apply_cz(qs[0], qs[2]).unwrap();
        assert_eq!(reg.parts().len(), 2);
        assert!((fidelity(&dense, &reg.to_state()).unwrap() - 1.0).abs() < 1e-14);

        let targets = [(qs[2], Basis::PauliY), (qs[1], Basis::Hadamard)];
        let probs = reg.prepare_joint(&targets).unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let b = dense.measure_branches(qs[2], Basis::PauliY).unwrap();
        let pa = dense.outcome_probabilities(qs[1], Basis::Hadamard).unwrap();
        for o in 0..4 {
            let expect = b.iter().find(|x| x.outcome as usize == (o & 1)).map_or(0.0, |x| x.prob)
                * pa[o >> 1];
            assert!((probs[o] - expect).abs() < 1e-14);
        }
        reg.collapse(&targets, 0).unwrap();
        assert_eq!(reg.labels(), vec![qs[0]]);
    }
}
