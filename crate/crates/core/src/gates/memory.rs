//! Storing a photonic qubit in the emitter and reading it back out.
//!
//! Store: the emitter starts in `|+>_a`, the gate entangles it with the
//! photon, the photon is measured and an outcome-dependent correction is
//! applied to the emitter. Retrieve mirrors this with a fresh photon in
//! `|+>_p` and a measurement on the emitter.

use crate::error::{Error, Result};
use crate::joint::{Mat2, hadamard};
use crate::pulse::{WavePacket, C64};

use super::map::ConditionalMap;
use super::metrics::CMatrix;
use super::protocols::Gate;

/// Single-qubit projective measurement basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
    Y,
}

impl Basis {
    /// The two measurement vectors, outcome 0 first.
    pub fn vectors(self) -> [[C64; 2]; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (r, i, z) = (C64::new(s, 0.0), C64::new(0.0, s), C64::new(0.0, 0.0));
        let one = C64::new(1.0, 0.0);
        match self {
            Basis::Z => [[one, z], [z, one]],
            Basis::X => [[r, r], [r, -r]],
            Basis::Y => [[r, i], [r, -i]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Measured {
    Photon,
    Emitter,
}

fn plus() -> [C64; 2] {
    hadamard().map(|row| row[0])
}

fn qubit_index(measured: Measured, kept: usize, other: usize) -> usize {
    match measured {
        // photon measured, emitter kept: index 2p + a with p = other
        Measured::Photon => 2 * other + kept,
        Measured::Emitter => 2 * kept + other,
    }
}

/// `V_m[r][q]`: ideal map from the input qubit `q` to the kept qubit `r`
/// given measurement outcome `m`, with the other input in `fiducial`.
fn ideal_transfer(target: &CMatrix, measured: Measured, m: &[C64; 2], fiducial: &[C64; 2]) -> Mat2 {
    let mut v = [[C64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for q in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for s in 0..2 {
                for f in 0..2 {
                    let out = qubit_index(measured, r, s);
                    let inp = match measured {
                        Measured::Photon => 2 * q + f,
                        Measured::Emitter => 2 * f + q,
                    };
                    acc += m[s].conj() * target[(out, inp)] * fiducial[f];
                }
            }
            v[r][q] = acc;
        }
    }
    v
}

/// Unitary undoing `V = s W`: returns `W^†`.
fn correction(v: &Mat2) -> Result<Mat2> {
    let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    let scale: f64 = v.iter().flatten().map(|x| x.norm_sqr()).sum();
    if det.norm() < 1e-9 * scale {
        return Err(Error::UncorrectableMeasurement);
    }
    let s = det.norm().sqrt();
    let inv = [[v[1][1] / det, -v[0][1] / det], [-v[1][0] / det, v[0][0] / det]];
    Ok(inv.map(|row| row.map(|x| x * s)))
}

fn to_cmatrix(m: &Mat2) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| m[i][j])
}

fn pure_density(v: &[C64]) -> CMatrix {
    let col = nalgebra::DVector::from_column_slice(v);
    &col * col.adjoint()
}

/// Result of a heralded, corrected one-qubit transfer.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferResult {
    /// Normalized state of the kept qubit after correction.
    pub state: CMatrix,
    /// Probability of the success herald for this input.
    pub p_success: f64,
    /// Probability of each measurement outcome given success.
    pub outcome_probabilities: [f64; 2],
    /// Correction applied after each outcome.
    pub corrections: [Mat2; 2],
}

fn transfer(
    map: &ConditionalMap,
    target: &CMatrix,
    rho_in: &CMatrix,
    measured: Measured,
    fiducial: &[C64; 2],
    basis: Basis,
    incident_norm: f64,
) -> Result<TransferResult> {
    let rho_out = map.apply(rho_in);
    let vecs = basis.vectors();
    let mut total = CMatrix::zeros(2, 2);
    let mut probs = [0.0; 2];
    let mut corrections = [[[C64::new(0.0, 0.0); 2]; 2]; 2];
    for (k, m) in vecs.iter().enumerate() {
        let c = correction(&ideal_transfer(target, measured, m, fiducial))?;
        corrections[k] = c;
        // <m| on the measured qubit
        let kept = CMatrix::from_fn(2, 2, |r, rr| {
            let mut acc = C64::new(0.0, 0.0);
            for s in 0..2 {
                for ss in 0..2 {
                    acc += m[s].conj()
                        * rho_out[(qubit_index(measured, r, s), qubit_index(measured, rr, ss))]
                        * m[ss];
                }
            }
            acc
        });
        probs[k] = kept.trace().re;
        let cm = to_cmatrix(&c);
        total += &cm * kept * cm.adjoint();
    }
    let p = total.trace().re;
    if !(p > 0.0) {
        return Err(Error::ZeroMassMap);
    }
    Ok(TransferResult {
        state: total / C64::new(p, 0.0),
        p_success: p / incident_norm,
        outcome_probabilities: probs.map(|x| x / p),
        corrections,
    })
}

/// Stores `photon = (c0, c1)` in the emitter (initialized to `|+>_a`) and
/// measures the photon in `basis`.
pub fn memory_store(
    photon: [C64; 2],
    packet: &WavePacket,
    gate: &Gate,
    basis: Basis,
) -> Result<TransferResult> {
    let (map, _) = gate.evaluate(packet)?;
    memory_store_with_map(photon, &map, &gate.target(), basis, packet.norm_sqr())
}

pub fn memory_store_with_map(
    photon: [C64; 2],
    map: &ConditionalMap,
    target: &CMatrix,
    basis: Basis,
    incident_norm: f64,
) -> Result<TransferResult> {
    let n: f64 = photon.iter().map(|x| x.norm_sqr()).sum();
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized { norm: n.sqrt() });
    }
    let fid = plus();
    let input: Vec<C64> = (0..4).map(|i| photon[i / 2] * fid[i % 2]).collect();
    transfer(
        map,
        target,
        &pure_density(&input),
        Measured::Photon,
        &fid,
        basis,
        incident_norm,
    )
}

/// Maps the emitter state `rho` (2×2 density matrix) onto a fresh photon in
/// `|+>_p` and measures the emitter in `basis`.
pub fn memory_retrieve(
    rho: &CMatrix,
    packet: &WavePacket,
    gate: &Gate,
    basis: Basis,
) -> Result<TransferResult> {
    let (map, _) = gate.evaluate(packet)?;
    memory_retrieve_with_map(rho, &map, &gate.target(), basis, packet.norm_sqr())
}

pub fn memory_retrieve_with_map(
    rho: &CMatrix,
    map: &ConditionalMap,
    target: &CMatrix,
    basis: Basis,
    incident_norm: f64,
) -> Result<TransferResult> {
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-8 || rho.shape() != (2, 2) {
        return Err(Error::Unnormalized { norm: tr });
    }
    let fid = plus();
    let rho_in = super::metrics::kron(&pure_density(&fid), rho);
    transfer(
        map,
        target,
        &rho_in,
        Measured::Emitter,
        &fid,
        basis,
        incident_norm,
    )
}

/// `<psi| rho |psi>` for a normalized pure state `psi`.
pub fn state_fidelity(rho: &CMatrix, psi: &[C64; 2]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(psi);
    (v.adjoint() * rho * v)[(0, 0)].re
}

/// The six Pauli eigenstates `|0>, |1>, |+>, |->, |+i>, |-i>`.
pub fn pauli_eigenstates() -> [[C64; 2]; 6] {
    let [z0, z1] = Basis::Z.vectors();
    let [x0, x1] = Basis::X.vectors();
    let [y0, y1] = Basis::Y.vectors();
    [z0, z1, x0, x1, y0, y1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::protocols::Wfc;
    use crate::joint::ScatterBlock;
    use crate::pulse::{make_pulse, Direction, PulseShape, TimeGrid};
    use crate::scattering::{EmitterParams, ScatterMethod};

    fn broad(purcell: f64) -> (WavePacket, ScatterBlock) {
        let e = EmitterParams::from_purcell(1.0, purcell, 0.0).unwrap();
        let shape = PulseShape::half_exponential(1.0);
        let grid = TimeGrid::for_pulse(&shape, e.gamma_total(), 50.0).unwrap();
        (
            make_pulse(&shape, &grid, 0.0, Direction::Rightward).unwrap(),
            ScatterBlock::new(e, 1.0, ScatterMethod::EtdRecursive).unwrap(),
        )
    }

    #[test]
    fn store_zero_then_read_in_z() {
        let (psi, b) = broad(1.0);
        let gate = Gate::time_bin(b, None);
        let [z0, _] = Basis::Z.vectors();
        let r = memory_store(z0, &psi, &gate, Basis::X).unwrap();
        assert!((state_fidelity(&r.state, &z0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn store_complex_superposition() {
        let (psi, b) = broad(1.0);
        for gate in [Gate::time_bin(b, None), Gate::polarization(b, Wfc::SecondScatterer(b.emitter))] {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let phi = [C64::new(s, 0.0), C64::new(0.0, s)];
            let r = memory_store(phi, &psi, &gate, Basis::X).unwrap();
            assert!((state_fidelity(&r.state, &phi) - 1.0).abs() < 1e-9);
            assert!(r.p_success < 1.0);
        }
    }

    #[test]
    fn time_bin_corrections_are_paulis() {
        let (psi, b) = broad(1.0);
        let gate = Gate::time_bin(b, None);
        let r = memory_store(pauli_eigenstates()[2], &psi, &gate, Basis::X).unwrap();
        for c in r.corrections {
            let nonzero = c.iter().flatten().filter(|x| x.norm() > 1e-12).count();
            assert_eq!(nonzero, 2);
        }
    }

    #[test]
    fn z_measurement_cannot_be_corrected() {
        let (psi, b) = broad(1.0);
        let gate = Gate::time_bin(b, None);
        assert_eq!(
            memory_store(pauli_eigenstates()[0], &psi, &gate, Basis::Z).unwrap_err(),
            Error::UncorrectableMeasurement
        );
    }

    #[test]
    fn retrieve_from_excited_qubit() {
        let (psi, b) = broad(3.0);
        let gate = Gate::polarization(b, Wfc::SecondScatterer(b.emitter));
        let one = pauli_eigenstates()[1];
        let r = memory_retrieve(&pure_density(&one), &psi, &gate, Basis::X).unwrap();
        assert!((state_fidelity(&r.state, &one) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn round_trip_on_pauli_eigenstates() {
        let (psi, b) = broad(1.0);
        let gate = Gate::time_bin(b, None);
        let (map, _) = gate.evaluate(&psi).unwrap();
        let t = gate.target();
        for phi in pauli_eigenstates() {
            let s = memory_store_with_map(phi, &map, &t, Basis::X, 1.0).unwrap();
            let r = memory_retrieve_with_map(&s.state, &map, &t, Basis::X, 1.0).unwrap();
            assert!((state_fidelity(&r.state, &phi) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn retrieve_success_at_high_purcell_with_boost() {
        let e = EmitterParams::from_purcell(1.0, 20.0, 0.0).unwrap();
        let b = ScatterBlock::new(e, 2.0, ScatterMethod::NarrowbandLimit).unwrap();
        let psi = WavePacket::plane_wave_reference(0.0, Direction::Rightward);
        let r = memory_retrieve(&pure_density(&plus()), &psi, &Gate::time_bin(b, None), Basis::X).unwrap();
        assert!((r.p_success - (40.0f64 / 41.0).powi(2)).abs() < 1e-12);
    }
}
