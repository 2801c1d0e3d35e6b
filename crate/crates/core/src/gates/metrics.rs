//! Target unitaries and figures of merit on the emitter ⊗ photon qubit space.
//!
//! Basis index for one photon and one emitter is `2p + a`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::joint::{hadamard, mat2_mul, pauli_z, Mat2};
use crate::pulse::C64;

pub type CMatrix = DMatrix<C64>;

const NORMALIZATION_TOLERANCE: f64 = 1e-8;

pub(crate) fn mat2_to_dmatrix(m: &Mat2) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| m[i][j])
}

/// `a ⊗ b` with `a` on the more significant index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Block-diagonal controlled operation: `|0><0|_p ⊗ u0 + |1><1|_p ⊗ u1`.
pub fn photon_controlled(u0: &Mat2, u1: &Mat2) -> CMatrix {
    let mut out = CMatrix::zeros(4, 4);
    for (p, u) in [u0, u1].into_iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                out[(2 * p + i, 2 * p + j)] = u[i][j];
            }
        }
    }
    out
}

/// `|0><0|_p ⊗ H Z + |1><1|_p ⊗ Z H`.
pub fn time_bin_target() -> CMatrix {
    let (h, z) = (hadamard(), pauli_z());
    photon_controlled(&mat2_mul(&h, &z), &mat2_mul(&z, &h))
}

/// Controlled phase `diag(1, 1, 1, -1)`.
pub fn cz_target() -> CMatrix {
    let one = C64::new(1.0, 0.0);
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![one, one, one, -one]))
}

/// Total Kraus mass `sum_i tr(K_i^† K_i)`.
pub fn kraus_mass(kraus: &[CMatrix]) -> f64 {
    kraus.iter().map(|k| k.norm_squared()).sum()
}

/// Normalized-Choi overlap `sum_i |tr(U^† K_i)|^2 / (d sum_i tr(K_i^† K_i))`.
pub fn process_fidelity(kraus: &[CMatrix], target: &CMatrix) -> Result<f64> {
    let d = target.nrows() as f64;
    let mass = kraus_mass(kraus);
    if !(mass > 0.0) {
        return Err(Error::ZeroMassMap);
    }
    let overlap: f64 = kraus
        .iter()
        .map(|k| (target.adjoint() * k).trace().norm_sqr())
        .sum();
    Ok((overlap / (d * mass)).clamp(0.0, 1.0))
}

/// `(d F + 1)/(d + 1)` for a qudit of dimension `d`.
pub fn average_fidelity(process_fidelity: f64, d: usize) -> f64 {
    let d = d as f64;
    (d * process_fidelity + 1.0) / (d + 1.0)
}

/// `2|ad - bc|` for a normalized two-qubit pure state `(a, b, c, d)`.
pub fn concurrence(psi: &[C64; 4]) -> Result<f64> {
    let n: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
    if (n - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Unnormalized { norm: n.sqrt() });
    }
    Ok(2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm())
}

fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| C64::new(v.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * CMatrix::from_diagonal(&vals) * eig.eigenvectors.adjoint()
}

/// Wootters concurrence of a two-qubit density matrix (trace-normalized first).
pub fn wootters_concurrence(rho: &CMatrix) -> Result<f64> {
    let tr = rho.trace().re;
    if !(tr > 0.0) {
        return Err(Error::ZeroMassMap);
    }
    let rho = rho / C64::new(tr, 0.0);
    // square roots of the near-zero eigenvalues of a pure state cost ~1e-8,
    // so pure states take the exact formula
    let eig = rho.clone().symmetric_eigen();
    let top = eig.eigenvalues.imax();
    if eig.eigenvalues[top] > 1.0 - 1e-12 {
        let v = eig.eigenvectors.column(top);
        return Ok(2.0 * (v[0] * v[3] - v[1] * v[2]).norm());
    }
    let yy = {
        let y = mat2_to_dmatrix(&crate::joint::pauli_y());
        kron(&y, &y)
    };
    let tilde = &yy * rho.conjugate() * &yy;
    let s = hermitian_sqrt(&rho);
    let m = &s * tilde * &s;
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut lams: Vec<f64> = m
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .collect();
    lams.sort_by(|a, b| b.total_cmp(a));
    Ok((lams[0] - lams[1] - lams[2] - lams[3]).max(0.0))
}

/// Entanglement of a Kraus operator's normalized Choi vector across the
/// photon | emitter cut, as the I-concurrence `sqrt(2(1 - tr ρ_P^2))`.
/// Multi-Kraus maps report the mass-weighted average. Equals 1 for the
/// controlled phase and for any operator locally equivalent to it.
pub fn choi_concurrence(kraus: &[CMatrix]) -> Result<f64> {
    let mass = kraus_mass(kraus);
    if !(mass > 0.0) {
        return Err(Error::ZeroMassMap);
    }
    let mut acc = 0.0;
    for k in kraus {
        let w = k.norm_squared();
        if w == 0.0 {
            continue;
        }
        // rows: (p_out, p_in); columns: (a_out, a_in)
        let m = CMatrix::from_fn(4, 4, |r, c| {
            let (po, pi) = (r / 2, r % 2);
            let (ao, ai) = (c / 2, c % 2);
            k[(2 * po + ao, 2 * pi + ai)]
        }) / C64::new(w.sqrt(), 0.0);
        let rho = &m * m.adjoint();
        let purity = (&rho * &rho).trace().re;
        acc += w * (2.0 * (1.0 - purity)).max(0.0).sqrt();
    }
    Ok(acc / mass)
}
