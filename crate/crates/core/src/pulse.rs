//! Single-photon envelopes on a uniform time grid.
//!
//! Packets are stored in the co-moving frame `tau = t - z/c` with the optical
//! carrier factored out, so an envelope is a plain complex function of `tau`.
//! Samples are the nodal values of a continuous piecewise-linear function and
//! every norm or overlap is the exact integral of those interpolants (the
//! linear finite-element mass matrix). The same quadrature is used everywhere,
//! which keeps probability bookkeeping consistent across modules.

use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Mass a pulse may leave outside its grid before construction is refused.
pub const TAIL_MASS_TOLERANCE: f64 = 1e-8;

/// Time after the pulse tail that a default grid keeps so the emitter's
/// re-emission (amplitude decay rate `Gamma/2`) has died out.
pub const RINGDOWN_WINDOW: f64 = 40.0;

/// Samples per shortest time scale on a default grid.
pub const DEFAULT_RESOLUTION: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_samples: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        if !t_start.is_finite() {
            return Err(Error::InvalidGrid("t_start must be finite".into()));
        }
        if n_samples < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 samples, got {n_samples}"
            )));
        }
        Ok(Self {
            t_start,
            dt,
            n_samples,
        })
    }

    /// Smallest grid with spacing `dt` that starts at `t_start` and reaches `t_end`.
    pub fn spanning(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(t_end > t_start) {
            return Err(Error::InvalidGrid(format!(
                "empty window [{t_start}, {t_end}]"
            )));
        }
        let intervals = ((t_end - t_start) / dt - 1e-9).ceil().max(1.0) as usize;
        Self::new(t_start, dt, intervals + 1)
    }

    /// Default grid for a pulse scattering off emitters whose largest total
    /// decay rate is `gamma_total`: `dt = min(1/Gamma, 1/bandwidth)/resolution`,
    /// window from the pulse onset to [`RINGDOWN_WINDOW`]`/Gamma` past its tail.
    pub fn for_pulse(shape: &PulseShape, gamma_total: f64, resolution: f64) -> Result<Self> {
        shape.validate()?;
        if !(gamma_total > 0.0) {
            return Err(Error::param("gamma_total", "must be positive"));
        }
        if !(resolution > 0.0) {
            return Err(Error::param("resolution", "must be positive"));
        }
        let scale = (1.0 / gamma_total).min(1.0 / shape.bandwidth());
        let dt = scale / resolution;
        let (lo, hi) = shape.window();
        Self::spanning(lo, hi + RINGDOWN_WINDOW / gamma_total, dt)
    }

    /// Default grid for a pulse passing `stages` emitters in sequence; each
    /// stage adds its own ringdown to the window.
    pub fn for_cascade(
        shape: &PulseShape,
        gamma_total: f64,
        resolution: f64,
        stages: usize,
    ) -> Result<Self> {
        let single = Self::for_pulse(shape, gamma_total, resolution)?;
        let extra = RINGDOWN_WINDOW / gamma_total * stages.saturating_sub(1) as f64;
        Self::spanning(single.t_start, single.t_end() + extra, single.dt)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.n_samples - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(move |k| self.t(k))
    }

    /// Same window at half the spacing; every old node is still a node.
    pub fn refined(&self) -> Self {
        Self {
            t_start: self.t_start,
            dt: self.dt / 2.0,
            n_samples: 2 * self.n_samples - 1,
        }
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.t_start.to_bits() == other.t_start.to_bits()
            && self.dt.to_bits() == other.dt.to_bits()
            && self.n_samples == other.n_samples
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Rightward,
    Leftward,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Rightward => Direction::Leftward,
            Direction::Leftward => Direction::Rightward,
        }
    }
}

/// Pulse families used to build incident photons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseShape {
    /// Photon spontaneously emitted at `rate`: `sqrt(rate) exp(-rate (tau - start)/2)`.
    HalfExponential { rate: f64, start: f64 },
    /// `exp(-(tau - center)^2 / (2 sigma^2))` in amplitude.
    Gaussian { sigma: f64, center: f64 },
    /// Flat top of length `duration` between two `sin^2` ramps of length `edge`.
    PlaneWaveWindow { duration: f64, edge: f64, start: f64 },
}

impl PulseShape {
    pub fn half_exponential(rate: f64) -> Self {
        PulseShape::HalfExponential { rate, start: 0.0 }
    }

    pub fn gaussian(sigma: f64) -> Self {
        PulseShape::Gaussian { sigma, center: 0.0 }
    }

    pub fn flat_top(duration: f64, edge: f64) -> Self {
        PulseShape::PlaneWaveWindow {
            duration,
            edge,
            start: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PulseShape::HalfExponential { rate, start } => {
                positive("rate", rate)?;
                finite("start", start)
            }
            PulseShape::Gaussian { sigma, center } => {
                positive("sigma", sigma)?;
                finite("center", center)
            }
            PulseShape::PlaneWaveWindow {
                duration,
                edge,
                start,
            } => {
                if !(duration >= 0.0 && duration.is_finite()) {
                    return Err(Error::param("duration", "must be finite and >= 0"));
                }
                if !(edge >= 0.0 && edge.is_finite()) || duration + edge <= 0.0 {
                    return Err(Error::param("edge", "must be >= 0 with a nonempty window"));
                }
                finite("start", start)
            }
        }
    }

    /// Inverse of the shortest time scale of the envelope.
    pub fn bandwidth(&self) -> f64 {
        match *self {
            PulseShape::HalfExponential { rate, .. } => rate,
            PulseShape::Gaussian { sigma, .. } => 1.0 / sigma,
            PulseShape::PlaneWaveWindow { duration, edge, .. } => {
                if edge > 0.0 {
                    1.0 / edge
                } else {
                    1.0 / duration
                }
            }
        }
    }

    /// Interval holding all but ~1e-10 of the pulse mass.
    pub fn window(&self) -> (f64, f64) {
        match *self {
            PulseShape::HalfExponential { rate, start } => (start, start + 1e10f64.ln() / rate),
            PulseShape::Gaussian { sigma, center } => (center - 4.6 * sigma, center + 4.6 * sigma),
            PulseShape::PlaneWaveWindow {
                duration,
                edge,
                start,
            } => (start, start + duration + 2.0 * edge),
        }
    }

    /// Unit-norm continuum envelope. `snap` widens the onset of a
    /// half-exponential so that a node placed on `start` up to rounding
    /// still samples the peak.
    fn amplitude(&self, tau: f64, snap: f64) -> f64 {
        match *self {
            PulseShape::HalfExponential { rate, start } => {
                let s = tau - start;
                if s < -snap {
                    0.0
                } else {
                    rate.sqrt() * (-rate * s.max(0.0) / 2.0).exp()
                }
            }
            PulseShape::Gaussian { sigma, center } => {
                let x = tau - center;
                (std::f64::consts::PI * sigma * sigma).powf(-0.25)
                    * (-x * x / (2.0 * sigma * sigma)).exp()
            }
            PulseShape::PlaneWaveWindow {
                duration,
                edge,
                start,
            } => {
                let amp = 1.0 / (duration + 0.75 * edge).sqrt();
                let s = tau - start;
                let total = duration + 2.0 * edge;
                if s <= 0.0 || s >= total {
                    0.0
                } else if s < edge {
                    amp * (std::f64::consts::FRAC_PI_2 * s / edge).sin().powi(2)
                } else if s <= edge + duration {
                    amp
                } else {
                    amp * (std::f64::consts::FRAC_PI_2 * (total - s) / edge).sin().powi(2)
                }
            }
        }
    }

    /// Continuum probability mass before `tau`.
    fn cumulative_mass(&self, tau: f64) -> f64 {
        match *self {
            PulseShape::HalfExponential { rate, start } => {
                if tau <= start {
                    0.0
                } else {
                    -(-rate * (tau - start)).exp_m1()
                }
            }
            PulseShape::Gaussian { sigma, center } => {
                0.5 * erfc((center - tau) / sigma)
            }
            PulseShape::PlaneWaveWindow {
                duration,
                edge,
                start,
            } => {
                let norm = duration + 0.75 * edge;
                // integral of sin^4 over a ramp of length `edge` up to `u`
                let ramp = |u: f64| {
                    if edge == 0.0 {
                        return 0.0;
                    }
                    let th = std::f64::consts::FRAC_PI_2 * u / edge;
                    (2.0 * edge / std::f64::consts::PI)
                        * (3.0 * th / 8.0 - (2.0 * th).sin() / 4.0 + (4.0 * th).sin() / 32.0)
                };
                let s = tau - start;
                let total = duration + 2.0 * edge;
                let m = if s <= 0.0 {
                    0.0
                } else if s < edge {
                    ramp(s)
                } else if s <= edge + duration {
                    0.375 * edge + (s - edge)
                } else if s < total {
                    norm - ramp(total - s)
                } else {
                    norm
                };
                m / norm
            }
        }
    }

    /// Continuum mass of the pulse outside `[t_lo, t_hi]`.
    pub fn mass_outside(&self, t_lo: f64, t_hi: f64) -> f64 {
        let below = self.cumulative_mass(t_lo);
        let above = match *self {
            PulseShape::HalfExponential { rate, start } => (-rate * (t_hi - start).max(0.0)).exp(),
            PulseShape::Gaussian { sigma, center } => {
                0.5 * erfc((t_hi - center) / sigma)
            }
            PulseShape::PlaneWaveWindow { .. } => 1.0 - self.cumulative_mass(t_hi),
        };
        (below + above).max(0.0)
    }

    /// Analytic envelope values on the grid nodes, without renormalization.
    pub fn sample(&self, grid: &TimeGrid) -> Vec<C64> {
        let snap = 1e-9 * grid.dt();
        grid.times()
            .map(|t| C64::new(self.amplitude(t, snap), 0.0))
            .collect()
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be finite"))
    }
}

/// Complex envelope of one photon component.
#[derive(Clone, Debug, PartialEq)]
pub struct WavePacket {
    grid: TimeGrid,
    amplitudes: Vec<C64>,
    carrier_detuning: f64,
    direction: Direction,
}

impl WavePacket {
    pub fn new(
        grid: TimeGrid,
        amplitudes: Vec<C64>,
        carrier_detuning: f64,
        direction: Direction,
    ) -> Result<Self> {
        if amplitudes.len() != grid.n_samples() {
            return Err(Error::InvalidGrid(format!(
                "{} amplitudes for a grid of {} samples",
                amplitudes.len(),
                grid.n_samples()
            )));
        }
        Ok(Self {
            grid,
            amplitudes,
            carrier_detuning,
            direction,
        })
    }

    pub fn zeros(grid: TimeGrid, carrier_detuning: f64, direction: Direction) -> Self {
        Self {
            grid,
            amplitudes: vec![C64::new(0.0, 0.0); grid.n_samples()],
            carrier_detuning,
            direction,
        }
    }

    /// Unit-norm constant envelope on a two-node grid. Stands in for a
    /// monochromatic photon when the scattering response is taken in the
    /// plane-wave limit and the envelope shape is irrelevant.
    pub fn plane_wave_reference(carrier_detuning: f64, direction: Direction) -> Self {
        let grid = TimeGrid {
            t_start: 0.0,
            dt: 1.0,
            n_samples: 2,
        };
        Self {
            grid,
            amplitudes: vec![C64::new(1.0, 0.0); 2],
            carrier_detuning,
            direction,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn carrier_detuning(&self) -> f64 {
        self.carrier_detuning
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn compatible(&self, other: &WavePacket) -> bool {
        self.grid.same_as(&other.grid)
            && self.carrier_detuning.to_bits() == other.carrier_detuning.to_bits()
    }

    fn check_compatible(&self, other: &WavePacket) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        mass_inner(&self.amplitudes, &self.amplitudes, self.grid.dt).re
    }

    pub fn inner(&self, other: &WavePacket) -> Result<C64> {
        inner_product(self, other)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
            ..self.clone()
        }
    }

    /// `self + factor * other`, keeping this packet's direction.
    pub fn add_scaled(&self, factor: C64, other: &WavePacket) -> Result<Self> {
        self.check_compatible(other)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(Self {
            amplitudes,
            ..self.clone()
        })
    }

    pub fn add(&self, other: &WavePacket) -> Result<Self> {
        self.add_scaled(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &WavePacket) -> Result<Self> {
        self.add_scaled(C64::new(-1.0, 0.0), other)
    }

    /// Largest pointwise difference of the nodal amplitudes.
    pub fn max_abs_diff(&self, other: &WavePacket) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `‖self − other‖` in the packet norm.
    pub fn distance(&self, other: &WavePacket) -> Result<f64> {
        Ok(self.sub(other)?.norm_sqr().max(0.0).sqrt())
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(C64::new(1.0 / n.sqrt(), 0.0)))
    }
}

/// Exact overlap of two piecewise-linear interpolants with nodal values
/// `x` and `y` on a uniform grid of spacing `dt`.
pub(crate) fn mass_inner(x: &[C64], y: &[C64], dt: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (xs, ys) in x.windows(2).zip(y.windows(2)) {
        let (x0, x1) = (xs[0].conj(), xs[1].conj());
        acc += x0 * (2.0 * ys[0] + ys[1]) + x1 * (ys[0] + 2.0 * ys[1]);
    }
    acc * (dt / 6.0)
}

/// Builds a unit-norm packet of the given shape on `grid`.
pub fn make_pulse(
    shape: &PulseShape,
    grid: &TimeGrid,
    detuning: f64,
    direction: Direction,
) -> Result<WavePacket> {
    shape.validate()?;
    let tail_mass = shape.mass_outside(grid.t_start(), grid.t_end());
    if tail_mass >= TAIL_MASS_TOLERANCE {
        return Err(Error::GridTooNarrow { tail_mass });
    }
    let samples = shape.sample(grid);
    // A half-exponential jumps at its onset. When the onset sits inside the
    // grid the interpolant ramps up over the preceding step; that ramp is a
    // representation artifact and is left out of the normalization so the
    // pulse is the same wherever its onset lands.
    let onset = match *shape {
        PulseShape::HalfExponential { .. } => samples.iter().position(|a| a.re > 0.0).unwrap_or(0),
        _ => 0,
    };
    let n = mass_inner(&samples[onset..], &samples[onset..], grid.dt()).re;
    if !(n > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let scale = 1.0 / n.sqrt();
    WavePacket::new(
        *grid,
        samples.into_iter().map(|a| a * scale).collect(),
        detuning,
        direction,
    )
}

/// `<a|b>`, antilinear in the first argument.
pub fn inner_product(a: &WavePacket, b: &WavePacket) -> Result<C64> {
    a.check_compatible(b)?;
    Ok(mass_inner(&a.amplitudes, &b.amplitudes, a.grid.dt))
}

/// Multiplies by `factor` and delays by `delay` (an integer number of steps).
pub fn scale_shift(p: &WavePacket, factor: C64, delay: f64) -> Result<WavePacket> {
    let dt = p.grid.dt();
    let steps = delay / dt;
    let m = steps.round();
    if (steps - m).abs() > 1e-9 * steps.abs().max(1.0) {
        return Err(Error::NonCommensurateDelay { delay, dt });
    }
    let m = m as i64;
    let n = p.amplitudes.len() as i64;
    let zero = C64::new(0.0, 0.0);
    let shifted: Vec<C64> = (0..n)
        .map(|k| {
            let src = k - m;
            if (0..n).contains(&src) {
                p.amplitudes[src as usize]
            } else {
                zero
            }
        })
        .collect();

    // mass carried by the samples pushed off the grid, including the step
    // joining them to the last retained sample
    let dropped = if m > 0 {
        let cut = (n - m - 1).max(0) as usize;
        &p.amplitudes[cut..]
    } else if m < 0 {
        let cut = ((-m + 1).min(n)) as usize;
        &p.amplitudes[..cut]
    } else {
        &p.amplitudes[..0]
    };
    let lost_mass = mass_inner(dropped, dropped, dt).re;
    if lost_mass > TAIL_MASS_TOLERANCE * p.norm_sqr().max(f64::MIN_POSITIVE) {
        return Err(Error::SupportOverflow { lost_mass });
    }
    Ok(WavePacket {
        amplitudes: shifted.into_iter().map(|a| a * factor).collect(),
        ..p.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn grid(t0: f64, t1: f64, dt: f64) -> TimeGrid {
        TimeGrid::spanning(t0, t1, dt).unwrap()
    }

    /// Composite Simpson on a fine grid of the analytic continuum envelopes.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 0.0, 10).is_err());
        assert!(TimeGrid::new(0.0, -1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 0.1, 1).is_err());
        let g = grid(0.0, 40.0, 1e-3);
        assert_eq!(g.n_samples(), 40_001);
        assert!((g.t_end() - 40.0).abs() < 1e-9);
        let r = g.refined();
        assert_eq!(r.n_samples(), 80_001);
        assert_eq!(r.t(2 * 17), g.t(17));
    }

    #[test]
    fn half_exponential_is_unit_norm() {
        let g = grid(0.0, 40.0, 1e-3);
        let p = make_pulse(&PulseShape::half_exponential(1.0), &g, 0.0, Direction::Rightward)
            .unwrap();
        assert!((p.norm_sqr() - 1.0).abs() < 1e-8);
        assert!((inner_product(&p, &p).unwrap().re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gaussian_is_unit_norm() {
        let g = grid(0.0, 40.0, 1e-3);
        let shape = PulseShape::Gaussian {
            sigma: 2.0,
            center: 10.0,
        };
        let p = make_pulse(&shape, &g, 0.0, Direction::Rightward).unwrap();
        assert!((p.norm_sqr() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn half_exponential_peak_value() {
        let g = grid(0.0, 40.0, 1e-3);
        let p = make_pulse(&PulseShape::half_exponential(1.0), &g, 0.0, Direction::Rightward)
            .unwrap();
        let peak = p.amplitudes()[0].norm_sqr();
        assert!((peak - 1.0).abs() < 1e-6, "peak {peak}");
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let g = grid(0.0, 10.0, 1e-3);
        let err = make_pulse(&PulseShape::half_exponential(1.0), &g, 0.0, Direction::Rightward)
            .unwrap_err();
        assert!(matches!(err, Error::GridTooNarrow { .. }));
        let shape = PulseShape::Gaussian {
            sigma: 2.0,
            center: 5.0,
        };
        assert!(make_pulse(&shape, &grid(0.0, 40.0, 1e-2), 0.0, Direction::Rightward).is_err());
        let shape = PulseShape::Gaussian {
            sigma: 2.0,
            center: 10.0,
        };
        assert!(make_pulse(&shape, &grid(0.0, 16.0, 1e-2), 0.0, Direction::Rightward).is_err());
    }

    #[test]
    fn flat_top_mass_matches_window() {
        let shape = PulseShape::flat_top(10.0, 4.0);
        assert!((shape.mass_outside(0.0, 18.0)).abs() < 1e-14);
        // left ramp holds 3/8 of an edge worth of amplitude^2
        let left = 1.0 - shape.mass_outside(0.0, 4.0) - 0.0;
        let expected = 0.375 * 4.0 / (10.0 + 3.0);
        assert!((shape.cumulative_mass(4.0) - expected).abs() < 1e-14);
        assert!((left - expected).abs() < 1e-12);
        let g = grid(0.0, 18.0, 1e-3);
        let raw = WavePacket::new(g, shape.sample(&g), 0.0, Direction::Rightward).unwrap();
        assert!((raw.norm_sqr() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn overlap_sign_and_scaling() {
        let g = grid(0.0, 40.0, 1e-3);
        let p = make_pulse(&PulseShape::half_exponential(1.0), &g, 0.0, Direction::Rightward)
            .unwrap();
        let m = p.scaled(c(-1.0));
        assert!((inner_product(&p, &m).unwrap() - c(-1.0)).norm() < 1e-8);
    }

    #[test]
    fn shifted_half_exponential_overlap() {
        // Oracle: the continuum overlap by direct quadrature. The onset of the
        // later pulse sits inside the grid, which costs O(dt) in the
        // piecewise-linear representation.
        let gamma: f64 = 1.0;
        let f0 = |t: f64| gamma.sqrt() * (-gamma * t / 2.0).exp();
        let oracle = simpson(|t| f0(t) * f0(t - 1.0), 1.0, 60.0, 600_000);
        assert!((oracle - (-0.5f64).exp()).abs() < 1e-10);

        for (dt, tol) in [(1e-3, 1e-3), (1e-4, 1e-4)] {
            let g = grid(0.0, 60.0, dt);
            let a = make_pulse(&PulseShape::half_exponential(1.0), &g, 0.0, Direction::Rightward)
                .unwrap();
            let b = make_pulse(
                &PulseShape::HalfExponential {
                    rate: 1.0,
                    start: 1.0,
                },
                &g,
                0.0,
                Direction::Rightward,
            )
            .unwrap();
            let ov = inner_product(&a, &b).unwrap();
            assert!((ov.re - oracle).abs() < tol, "dt {dt}: {ov} vs {oracle}");
            assert!(ov.im.abs() < 1e-14);
        }
    }

    #[test]
    fn scale_shift_identity_and_attenuation() {
        let g = grid(0.0, 40.0, 1e-3);
        let p = make_pulse(&PulseShape::half_exponential(1.0), &g, 0.0, Direction::Rightward)
            .unwrap();
        let same = scale_shift(&p, c(1.0), 0.0).unwrap();
        assert_eq!(same, p);
        let k = C64::new(0.3, -0.4);
        let att = scale_shift(&p, k, 0.0).unwrap();
        assert!((att.norm_sqr() / p.norm_sqr() - k.norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn delayed_half_exponential_matches_direct_construction() {
        let g = grid(0.0, 40.0, 1e-3);
        let p = make_pulse(&PulseShape::half_exponential(1.0), &g, 0.0, Direction::Rightward)
            .unwrap();
        let delayed = scale_shift(&p, c(1.0), 5.0).unwrap();
        let direct = make_pulse(
            &PulseShape::HalfExponential {
                rate: 1.0,
                start: 5.0,
            },
            &g,
            0.0,
            Direction::Rightward,
        )
        .unwrap();
        assert!(delayed.max_abs_diff(&direct).unwrap() < 1e-12);
    }

    #[test]
    fn shift_errors() {
        let g = grid(0.0, 40.0, 1e-3);
        let p = make_pulse(&PulseShape::half_exponential(1.0), &g, 0.0, Direction::Rightward)
            .unwrap();
        assert!(matches!(
            scale_shift(&p, c(1.0), 0.00025),
            Err(Error::NonCommensurateDelay { .. })
        ));
        assert!(matches!(
            scale_shift(&p, c(1.0), 30.0),
            Err(Error::SupportOverflow { .. })
        ));
    }

    #[test]
    fn mismatched_packets_refuse_to_combine() {
        let g1 = grid(0.0, 40.0, 1e-3);
        let g2 = grid(0.0, 40.0, 2e-3);
        let shape = PulseShape::half_exponential(1.0);
        let a = make_pulse(&shape, &g1, 0.0, Direction::Rightward).unwrap();
        let b = make_pulse(&shape, &g2, 0.0, Direction::Rightward).unwrap();
        let d = make_pulse(&shape, &g1, 0.5, Direction::Rightward).unwrap();
        assert_eq!(inner_product(&a, &b), Err(Error::GridMismatch));
        assert_eq!(inner_product(&a, &d), Err(Error::GridMismatch));
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn norm_is_additive_for_disjoint_supports() {
        let g = grid(0.0, 80.0, 1e-2);
        let a = make_pulse(
            &PulseShape::flat_top(5.0, 2.0),
            &g,
            0.0,
            Direction::Rightward,
        )
        .unwrap();
        let b = scale_shift(&a, C64::new(0.0, 0.5), 20.0).unwrap();
        let sum = a.add(&b).unwrap();
        assert!((sum.norm_sqr() - a.norm_sqr() - b.norm_sqr()).abs() < 1e-10);
    }

    #[test]
    fn raw_norm_converges_at_second_order() {
        let shapes = [
            PulseShape::half_exponential(1.0),
            PulseShape::Gaussian {
                sigma: 2.0,
                center: 15.0,
            },
            PulseShape::half_exponential(5.0),
        ];
        for shape in shapes {
            let g = grid(0.0, 40.0, 1e-3);
            let coarse = WavePacket::new(g, shape.sample(&g), 0.0, Direction::Rightward)
                .unwrap()
                .norm_sqr();
            let r = g.refined();
            let fine = WavePacket::new(r, shape.sample(&r), 0.0, Direction::Rightward)
                .unwrap()
                .norm_sqr();
            assert!((coarse - fine).abs() < 1e-6, "{shape:?}: {coarse} vs {fine}");
        }
    }

    #[test]
    fn default_grid_covers_pulse_and_ringdown() {
        let shape = PulseShape::half_exponential(0.5);
        let g = TimeGrid::for_pulse(&shape, 1.0, DEFAULT_RESOLUTION).unwrap();
        assert_eq!(g.t_start(), 0.0);
        assert!((g.dt() - 1.0 / 50.0).abs() < 1e-15);
        assert!(g.t_end() >= 1e10f64.ln() / 0.5 + 40.0);
        assert!(make_pulse(&shape, &g, 0.0, Direction::Rightward).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn packet(seed: &[(f64, f64)]) -> WavePacket {
            let g = TimeGrid::new(-1.0, 0.37, seed.len()).unwrap();
            let amps = seed.iter().map(|&(r, i)| C64::new(r, i)).collect();
            WavePacket::new(g, amps, 0.0, Direction::Rightward).unwrap()
        }

        proptest! {
            #[test]
            fn inner_product_is_conjugate_symmetric(
                xs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 8),
                ys in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 8),
            ) {
                let a = packet(&xs);
                let b = packet(&ys);
                let ab = inner_product(&a, &b).unwrap();
                let ba = inner_product(&b, &a).unwrap();
                prop_assert!((ab - ba.conj()).norm() < 1e-14);
                let aa = inner_product(&a, &a).unwrap();
                prop_assert!(aa.re >= 0.0 && aa.im.abs() < 1e-14);
            }
        }
    }
}
