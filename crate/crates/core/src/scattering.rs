//! Single-emitter scattering in a one-dimensional waveguide.
//!
//! For an incident envelope `A(tau)` the reflected envelope is
//!
//! ```text
//! B(tau) = -(Gamma_1D / 2) * integral_{tau_0}^{tau} A(s) exp((i delta - Gamma/2)(tau - s)) ds
//! ```
//!
//! and the transmitted envelope is `A + B`. The figures of merit are
//! `f = -<A|B>`, `T = ‖A + B‖²`, `R = ‖B‖²` and `kappa = 1 - T - R`.

use std::collections::BTreeMap;

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::kernel;
use crate::pulse::{Direction, WavePacket, C64};

/// Tolerance within which a probability just outside `[0, 1]` is clamped.
pub const RANGE_FLOOR: f64 = 1e-9;

/// `dt * Gamma` above which the kernel is considered under-resolved.
pub const RESOLUTION_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmitterParams {
    gamma_1d: f64,
    gamma_prime: f64,
    detuning: f64,
}

impl EmitterParams {
    /// `detuning` is the carrier of a reference packet minus the transition
    /// frequency; packets with a nonzero `carrier_detuning` add theirs on top.
    pub fn new(gamma_1d: f64, gamma_prime: f64, detuning: f64) -> Result<Self> {
        if !(gamma_1d > 0.0 && gamma_1d.is_finite()) {
            return Err(Error::param("gamma_1d", format!("must be positive, got {gamma_1d}")));
        }
        if !(gamma_prime >= 0.0 && gamma_prime.is_finite()) {
            return Err(Error::param(
                "gamma_prime",
                format!("must be >= 0, got {gamma_prime}"),
            ));
        }
        if !detuning.is_finite() {
            return Err(Error::param("detuning", "must be finite"));
        }
        Ok(Self {
            gamma_1d,
            gamma_prime,
            detuning,
        })
    }

    /// `purcell = f64::INFINITY` gives `gamma_prime = 0` exactly.
    pub fn from_purcell(gamma_1d: f64, purcell: f64, detuning: f64) -> Result<Self> {
        if !(purcell > 0.0) {
            return Err(Error::param("P", format!("must be positive, got {purcell}")));
        }
        let gamma_prime = if purcell.is_infinite() {
            0.0
        } else {
            gamma_1d / purcell
        };
        Self::new(gamma_1d, gamma_prime, detuning)
    }

    /// Lossless emitter with `Gamma_1D = 1` on resonance.
    pub fn perfect_mirror() -> Self {
        Self {
            gamma_1d: 1.0,
            gamma_prime: 0.0,
            detuning: 0.0,
        }
    }

    pub fn gamma_1d(&self) -> f64 {
        self.gamma_1d
    }

    pub fn gamma_prime(&self) -> f64 {
        self.gamma_prime
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn gamma_total(&self) -> f64 {
        self.gamma_1d + self.gamma_prime
    }

    pub fn purcell(&self) -> f64 {
        if self.gamma_prime == 0.0 {
            f64::INFINITY
        } else {
            self.gamma_1d / self.gamma_prime
        }
    }

    pub fn inverse_purcell(&self) -> f64 {
        self.gamma_prime / self.gamma_1d
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    /// Same emitter with its waveguide coupling multiplied by `boost`.
    pub fn boosted(&self, boost: f64) -> Result<Self> {
        if !(boost > 0.0 && boost.is_finite()) {
            return Err(Error::param(
                "coupling_boost",
                format!("must be positive, got {boost}"),
            ));
        }
        Self::new(self.gamma_1d * boost, self.gamma_prime, self.detuning)
    }

    fn kernel_exponent(&self, carrier_detuning: f64) -> C64 {
        C64::new(-self.gamma_total() / 2.0, self.detuning + carrier_detuning)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ScatterMethod {
    /// Exponential integrator with Galerkin projection; O(n), passive.
    #[default]
    EtdRecursive,
    /// Direct trapezoid-rule convolution; O(n^2) cross-check.
    Trapezoid,
    /// Plane-wave limit `B = -f0 A` with `f0 = (1 + 1/P - 2i delta/Gamma_1D)^-1`.
    NarrowbandLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterResult {
    pub transmitted: WavePacket,
    pub reflected: WavePacket,
    pub f: C64,
    pub transmittance: f64,
    pub reflectance: f64,
    pub loss: f64,
}

/// `(1 + 1/P + gamma/Gamma_1D - 2i delta/Gamma_1D)^-1`.
pub fn closed_form_f_half_exponential(gamma_pulse: f64, emitter: &EmitterParams) -> C64 {
    let g1 = emitter.gamma_1d();
    C64::new(
        1.0 + emitter.inverse_purcell() + gamma_pulse / g1,
        -2.0 * emitter.detuning() / g1,
    )
    .inv()
}

/// Reflection fidelity of a monochromatic photon.
pub fn narrowband_f(emitter: &EmitterParams) -> C64 {
    C64::new(1.0 + emitter.inverse_purcell(), -2.0 * emitter.detuning() / emitter.gamma_1d()).inv()
}

/// `(T, R)` from the reflection fidelity: `R = Re f/(1 + 1/P)`,
/// `T = 1 - Re f (2 - 1/(1 + 1/P))`.
pub fn tr_identities(f: C64, emitter: &EmitterParams) -> (f64, f64) {
    let q = 1.0 / (1.0 + emitter.inverse_purcell());
    (1.0 - f.re * (2.0 - q), f.re * q)
}

/// Reflected envelope only, on the incident packet's grid and carrier.
pub fn reflected_envelope(
    psi: &WavePacket,
    emitter: &EmitterParams,
    method: ScatterMethod,
) -> Result<WavePacket> {
    let lambda = emitter.kernel_exponent(psi.carrier_detuning());
    let c = emitter.gamma_1d() / 2.0;
    let dt = psi.grid().dt();
    let a = psi.amplitudes();
    let b = match method {
        ScatterMethod::EtdRecursive => {
            check_resolution(dt, emitter);
            kernel::etd_projected(a, dt, lambda, c)
        }
        ScatterMethod::Trapezoid => {
            check_resolution(dt, emitter);
            kernel::trapezoid_direct(a, dt, lambda, c)
        }
        ScatterMethod::NarrowbandLimit => {
            let f0 = C64::new(emitter.gamma_1d(), 0.0) / (-2.0 * lambda);
            a.iter().map(|x| -f0 * x).collect()
        }
    };
    WavePacket::new(*psi.grid(), b, psi.carrier_detuning(), psi.direction().flipped())
}

fn check_resolution(dt: f64, emitter: &EmitterParams) {
    let ratio = dt * emitter.gamma_total();
    if ratio > RESOLUTION_LIMIT {
        warn!("insufficient resolution: dt*Gamma = {ratio:.3} exceeds {RESOLUTION_LIMIT}");
    }
}

fn clamp_probability(value: f64, name: &str) -> f64 {
    if (-RANGE_FLOOR..0.0).contains(&value) {
        debug!("clamping {name} = {value:e} to 0");
        0.0
    } else if value > 1.0 && value <= 1.0 + RANGE_FLOOR {
        debug!("clamping {name} = {value} to 1");
        1.0
    } else {
        if !(0.0..=1.0).contains(&value) {
            warn!("{name} = {value:e} lies outside [0, 1] beyond the clamping floor");
        }
        value
    }
}

/// Scatters `psi` off a two-level emitter. Scalars are normalized by the
/// incident norm, so sub-normalized packets report the same fractions.
pub fn scatter(
    psi: &WavePacket,
    emitter: &EmitterParams,
    method: ScatterMethod,
) -> Result<ScatterResult> {
    let norm = psi.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let reflected = reflected_envelope(psi, emitter, method)?;
    let transmitted = psi.add(&reflected.clone().with_direction(psi.direction()))?;
    let f = -psi.inner(&reflected.clone().with_direction(psi.direction()))? / norm;
    let transmittance = clamp_probability(transmitted.norm_sqr() / norm, "T");
    let reflectance = clamp_probability(reflected.norm_sqr() / norm, "R");
    let loss = clamp_probability(1.0 - transmittance - reflectance, "kappa");
    Ok(ScatterResult {
        transmitted,
        reflected,
        f,
        transmittance,
        reflectance,
        loss,
    })
}

/// Levels of the three-level emitter: `s` is dark, `g` couples to the guide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomLevel {
    S,
    G,
}

#[derive(Clone, Debug)]
pub struct MirrorGateOutput {
    pub branches: BTreeMap<(AtomLevel, Direction), WavePacket>,
    /// `|<ideal|out>|^2` against `(-X_p)^mu` acting on the input.
    pub fidelity: f64,
    pub loss: f64,
}

fn check_qubit(amps: &[C64; 2]) -> Result<()> {
    let n = amps[0].norm_sqr() + amps[1].norm_sqr();
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized { norm: n.sqrt() });
    }
    Ok(())
}

/// Unheralded mirror gate: atom `{|s>, |g>}` times photon direction
/// `{R, L}`. The `g` branch reflects (direction swap, envelope `B`) and
/// transmits (same direction, `A + B`); `s` is untouched.
pub fn mirror_gate_three_level(
    psi: &WavePacket,
    emitter: &EmitterParams,
    method: ScatterMethod,
    atom: [C64; 2],
    photon: [C64; 2],
) -> Result<MirrorGateOutput> {
    check_qubit(&atom)?;
    check_qubit(&photon)?;
    let a = psi.normalized()?.with_direction(Direction::Rightward);
    let b = reflected_envelope(&a, emitter, method)?.with_direction(Direction::Rightward);
    let t = a.add(&b)?;
    let [c_s, c_g] = atom;
    let [c_r, c_l] = photon;
    let dirs = [Direction::Rightward, Direction::Leftward];

    let mut branches = BTreeMap::new();
    branches.insert((AtomLevel::S, dirs[0]), a.scaled(c_s * c_r).with_direction(dirs[0]));
    branches.insert((AtomLevel::S, dirs[1]), a.scaled(c_s * c_l).with_direction(dirs[1]));
    let g_r = t.scaled(c_r).add(&b.scaled(c_l))?.scaled(c_g);
    let g_l = t.scaled(c_l).add(&b.scaled(c_r))?.scaled(c_g);
    branches.insert((AtomLevel::G, dirs[0]), g_r.with_direction(dirs[0]));
    branches.insert((AtomLevel::G, dirs[1]), g_l.with_direction(dirs[1]));

    let minus = C64::new(-1.0, 0.0);
    let ideal = [
        ((AtomLevel::S, dirs[0]), c_s * c_r),
        ((AtomLevel::S, dirs[1]), c_s * c_l),
        ((AtomLevel::G, dirs[0]), minus * c_g * c_l),
        ((AtomLevel::G, dirs[1]), minus * c_g * c_r),
    ];
    let mut overlap = C64::new(0.0, 0.0);
    for (label, amp) in ideal {
        overlap += amp.conj() * a.inner(&branches[&label].clone().with_direction(Direction::Rightward))?;
    }
    let out_mass: f64 = branches.values().map(WavePacket::norm_sqr).sum();
    Ok(MirrorGateOutput {
        branches,
        fidelity: overlap.norm_sqr(),
        loss: 1.0 - out_mass,
    })
}
