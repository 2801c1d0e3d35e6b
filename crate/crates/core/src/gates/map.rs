//! Conditional (success-heralded) maps extracted from envelope-valued outputs.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::pulse::{WavePacket, C64};

use super::metrics::{kraus_mass, CMatrix};

/// Residual norm below which a Gram–Schmidt candidate is dropped.
pub const MODE_DROP_TOLERANCE: f64 = 1e-10;

/// Largest allowed mismatch between a probe run and the linear prediction.
pub const LINEARITY_TOLERANCE: f64 = 1e-8;

/// Heralded output of one protocol run: the envelope attached to each
/// output basis index plus the probability sent to failure and loss.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub envelopes: BTreeMap<usize, WavePacket>,
    pub failure_weight: f64,
    pub loss_weight: f64,
}

impl RunOutput {
    pub fn success_mass(&self) -> f64 {
        self.envelopes.values().map(WavePacket::norm_sqr).sum()
    }

    pub(crate) fn accumulate(&mut self, index: usize, packet: WavePacket) -> Result<()> {
        match self.envelopes.get_mut(&index) {
            Some(existing) => *existing = existing.add(&packet)?,
            None => {
                self.envelopes.insert(index, packet);
            }
        }
        Ok(())
    }
}

/// Kraus representation of the success-conditioned map.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalMap {
    pub kraus_ops: Vec<CMatrix>,
    /// `tr(sum K^†K)/d`: success probability averaged over inputs.
    pub p_success_avg: f64,
    /// Smallest eigenvalue of `sum K^†K`: worst-case success probability.
    pub p_success_min: f64,
    /// Largest eigenvalue of `sum K^†K`.
    pub p_success_max: f64,
    pub herald_spec: String,
}

impl ConditionalMap {
    pub fn from_kraus(kraus_ops: Vec<CMatrix>, herald_spec: impl Into<String>) -> Result<Self> {
        let d = kraus_ops
            .first()
            .map(CMatrix::ncols)
            .ok_or(Error::ZeroMassMap)?;
        let mut effect = CMatrix::zeros(d, d);
        for k in &kraus_ops {
            effect += k.adjoint() * k;
        }
        let effect = (&effect + effect.adjoint()) * C64::new(0.5, 0.0);
        let eig = effect.symmetric_eigen().eigenvalues;
        Ok(Self {
            p_success_avg: kraus_mass(&kraus_ops) / d as f64,
            p_success_min: eig.min(),
            p_success_max: eig.max(),
            kraus_ops,
            herald_spec: herald_spec.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.kraus_ops[0].ncols()
    }

    /// `sum_k K rho K^†`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.kraus_ops[0].nrows();
        let mut out = CMatrix::zeros(d, d);
        for k in &self.kraus_ops {
            out += k * rho * k.adjoint();
        }
        out
    }
}

/// Orthonormal basis of the span of `packets` by modified Gram–Schmidt with
/// one reorthogonalization pass.
pub fn orthonormal_modes<'a>(packets: impl IntoIterator<Item = &'a WavePacket>) -> Result<Vec<WavePacket>> {
    let mut modes: Vec<WavePacket> = Vec::new();
    for p in packets {
        let mut r = p.clone();
        for _ in 0..2 {
            for e in &modes {
                let c = e.inner(&r)?;
                r = r.add_scaled(-c, e)?;
            }
        }
        let n = r.norm_sqr().max(0.0).sqrt();
        if n > MODE_DROP_TOLERANCE {
            modes.push(r.scaled(C64::new(1.0 / n, 0.0)));
        }
    }
    Ok(modes)
}

/// Builds one Kraus operator per orthonormal output mode,
/// `K_m[j][i] = <e_m | env_{i,j}>`, from the runs on the computational
/// basis inputs, and checks each probe run (input amplitudes, output)
/// against the linear prediction.
pub fn extract_conditional_map(
    basis_runs: &[RunOutput],
    probes: &[(Vec<C64>, RunOutput)],
    dim_out: usize,
    herald_spec: &str,
) -> Result<ConditionalMap> {
    let dim_in = basis_runs.len();
    let modes = orthonormal_modes(basis_runs.iter().flat_map(|r| r.envelopes.values()))?;
    if modes.is_empty() {
        return Err(Error::ZeroMassMap);
    }
    let mut kraus = Vec::with_capacity(modes.len());
    for e in &modes {
        let mut k = CMatrix::zeros(dim_out, dim_in);
        for (i, run) in basis_runs.iter().enumerate() {
            for (&j, env) in &run.envelopes {
                k[(j, i)] = e.inner(env)?;
            }
        }
        kraus.push(k);
    }

    for (amps, run) in probes {
        let mut residual = 0.0;
        for j in 0..dim_out {
            let mut predicted: Option<WavePacket> = None;
            for (i, b) in basis_runs.iter().enumerate() {
                if let Some(env) = b.envelopes.get(&j) {
                    predicted = Some(match predicted {
                        None => env.scaled(amps[i]),
                        Some(acc) => acc.add_scaled(amps[i], env)?,
                    });
                }
            }
            residual += match (predicted, run.envelopes.get(&j)) {
                (Some(p), Some(actual)) => p.sub(actual)?.norm_sqr(),
                (Some(p), None) => p.norm_sqr(),
                (None, Some(actual)) => actual.norm_sqr(),
                (None, None) => 0.0,
            };
        }
        let residual = residual.max(0.0).sqrt();
        if !(residual < LINEARITY_TOLERANCE) {
            return Err(Error::Nonlinearity { residual });
        }
    }
    ConditionalMap::from_kraus(kraus, herald_spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{make_pulse, Direction, PulseShape, TimeGrid};

    fn packets() -> (WavePacket, WavePacket) {
        let g = TimeGrid::spanning(0.0, 60.0, 1e-2).unwrap();
        let a = make_pulse(&PulseShape::half_exponential(1.0), &g, 0.0, Direction::Rightward).unwrap();
        let shape = PulseShape::Gaussian {
            sigma: 1.0,
            center: 5.0,
        };
        let b = make_pulse(&shape, &g, 0.0, Direction::Rightward).unwrap();
        (a, b)
    }

    fn run(entries: &[(usize, WavePacket)]) -> RunOutput {
        RunOutput {
            envelopes: entries.iter().cloned().collect(),
            ..Default::default()
        }
    }

    #[test]
    fn proportional_envelopes_give_one_kraus_operator() {
        let (a, _) = packets();
        let c = |x: f64| C64::new(x, 0.0);
        let runs: Vec<RunOutput> = (0..4).map(|i| run(&[(i, a.scaled(c(0.5 + i as f64 * 0.1)))])).collect();
        let map = extract_conditional_map(&runs, &[], 4, "test").unwrap();
        assert_eq!(map.kraus_ops.len(), 1);
        let k = &map.kraus_ops[0];
        for i in 0..4 {
            assert!((k[(i, i)].norm() - (0.5 + i as f64 * 0.1)).abs() < 1e-12);
        }
        assert!((map.p_success_min - 0.25).abs() < 1e-12);
        assert!((map.p_success_max - 0.64).abs() < 1e-12);
    }

    #[test]
    fn independent_envelopes_give_two_kraus_operators() {
        let (a, b) = packets();
        let runs = vec![run(&[(0, a.clone())]), run(&[(1, b.clone())]), run(&[(2, a.clone())]), run(&[(3, b)])];
        let map = extract_conditional_map(&runs, &[], 4, "test").unwrap();
        assert_eq!(map.kraus_ops.len(), 2);
        assert!((map.p_success_avg - 1.0).abs() < 1e-8);
        // sum K^†K reproduces the Gram matrix of the outputs
        let mut effect = CMatrix::zeros(4, 4);
        for k in &map.kraus_ops {
            effect += k.adjoint() * k;
        }
        let ov = runs[0].envelopes[&0].inner(&runs[1].envelopes[&1]).unwrap();
        assert!(effect[(0, 1)].norm() < 1e-12, "different output labels never interfere");
        assert!(ov.norm() > 0.01);
    }

    #[test]
    fn probes_detect_nonlinearity() {
        let (a, b) = packets();
        let c = |x: f64| C64::new(x, 0.0);
        let runs = vec![run(&[(0, a.clone())]), run(&[(1, a.clone())])];
        let good = run(&[(0, a.scaled(c(0.6))), (1, a.scaled(c(0.8)))]);
        let ok = extract_conditional_map(&runs, &[(vec![c(0.6), c(0.8)], good)], 2, "t");
        assert!(ok.is_ok());
        let bad = run(&[(0, a.scaled(c(0.6))), (1, b.scaled(c(0.8)))]);
        assert!(matches!(
            extract_conditional_map(&runs, &[(vec![c(0.6), c(0.8)], bad)], 2, "t"),
            Err(Error::Nonlinearity { .. })
        ));
    }

    #[test]
    fn empty_output_is_zero_mass() {
        let runs = vec![RunOutput::default(); 4];
        assert_eq!(
            extract_conditional_map(&runs, &[], 4, "t"),
            Err(Error::ZeroMassMap)
        );
    }
}
