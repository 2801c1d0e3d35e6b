//! Causal convolution with the emitter response `-c exp(lambda s)`, `s >= 0`.
//!
//! The production path treats the incident envelope as the piecewise-linear
//! interpolant of its samples, integrates the driven linear ODE
//! `B' = lambda B - c A` exactly across each step with the exponential
//! integrator functions `phi_k`, and returns the L2 projection of the exact
//! response onto the same piecewise-linear space. The projection never adds
//! norm, so the discrete scattering map stays passive.

use rayon::prelude::*;

use crate::pulse::C64;

/// `[exp(z), phi_1(z), phi_2(z), phi_3(z), phi_4(z)]` with
/// `phi_k(z) = sum_j z^j / (j + k)!`.
pub(crate) fn phi_functions(z: C64) -> [C64; 5] {
    let one = C64::new(1.0, 0.0);
    if z.norm() < 1.0 {
        let mut out = [C64::new(0.0, 0.0); 5];
        // factorials 1/(j+k)! built incrementally per k
        for (k, slot) in out.iter_mut().enumerate() {
            let mut term = one;
            for m in 1..=k {
                term /= m as f64;
            }
            let mut sum = term;
            for j in 1..32 {
                term *= z / (j + k) as f64;
                sum += term;
            }
            *slot = sum;
        }
        out
    } else {
        let e = z.exp();
        let p1 = (e - one) / z;
        let p2 = (p1 - one) / z;
        let p3 = (p2 - 0.5) / z;
        let p4 = (p3 - 1.0 / 6.0) / z;
        [e, p1, p2, p3, p4]
    }
}

/// Exact nodal response to the piecewise-linear interpolant of `input`.
#[cfg(test)]
pub(crate) fn etd_nodal(input: &[C64], dt: f64, lambda: C64, c: f64) -> Vec<C64> {
    let [e, p1, p2, ..] = phi_functions(lambda * dt);
    let mut out = Vec::with_capacity(input.len());
    let mut b = C64::new(0.0, 0.0);
    out.push(b);
    for w in input.windows(2) {
        let (a, da) = (w[0], w[1] - w[0]);
        b = e * b - c * dt * (a * p1 + da * p2);
        out.push(b);
    }
    out
}

/// L2 projection (onto hat functions) of the exact response to the
/// piecewise-linear interpolant of `input`.
pub(crate) fn etd_projected(input: &[C64], dt: f64, lambda: C64, c: f64) -> Vec<C64> {
    let n = input.len();
    let [e, p1, p2, p3, p4] = phi_functions(lambda * dt);
    let (q12, q23, q34) = (p1 - p2, p2 - p3, p3 - p4);
    let mut load = vec![C64::new(0.0, 0.0); n];
    let mut b = C64::new(0.0, 0.0);
    for k in 0..n - 1 {
        let (a, da) = (input[k], input[k + 1] - input[k]);
        // integral of B and of B*s across the step, s measured from t_k
        let i0 = dt * (b * p1 - c * dt * (a * p2 + da * p3));
        let i1 = dt * dt * (b * q12 - c * dt * (a * q23 + da * q34));
        load[k] += i0 - i1 / dt;
        load[k + 1] += i1 / dt;
        b = e * b - c * dt * (a * p1 + da * p2);
    }
    solve_mass(&load, dt)
}

/// Solves `M x = rhs` for the piecewise-linear mass matrix
/// `M = dt/6 * tridiag(1, [2, 4, ..., 4, 2], 1)`.
pub(crate) fn solve_mass(rhs: &[C64], dt: f64) -> Vec<C64> {
    let n = rhs.len();
    let scale = 6.0 / dt;
    let diag = |i: usize| if i == 0 || i == n - 1 { 2.0 } else { 4.0 };
    let mut cp = vec![0.0; n];
    let mut rp = vec![C64::new(0.0, 0.0); n];
    cp[0] = 1.0 / diag(0);
    rp[0] = rhs[0] * scale / diag(0);
    for i in 1..n {
        let m = diag(i) - cp[i - 1];
        cp[i] = 1.0 / m;
        rp[i] = (rhs[i] * scale - rp[i - 1]) / m;
    }
    let mut x = rp;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= cp[i] * next;
    }
    x
}

/// Direct O(n^2) trapezoid-rule convolution at the nodes.
pub(crate) fn trapezoid_direct(input: &[C64], dt: f64, lambda: C64, c: f64) -> Vec<C64> {
    let n = input.len();
    let kernel: Vec<C64> = (0..n).map(|m| (lambda * (m as f64 * dt)).exp()).collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return C64::new(0.0, 0.0);
            }
            let mut acc = 0.5 * (kernel[i] * input[0] + input[i]);
            for k in 1..i {
                acc += kernel[i - k] * input[k];
            }
            -c * dt * acc
        })
        .collect()
}
