//! Flat run configuration shared by the config file and the flags, and the
//! sweep spec file.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use wqed::gates::{Basis, Gate, Wfc};
use wqed::joint::ScatterBlock;
use wqed::pulse::{
    make_pulse, Direction, PulseShape, TimeGrid, WavePacket, C64, DEFAULT_RESOLUTION,
};
use wqed::scattering::{EmitterParams, ScatterMethod};
use wqed::sweep::{
    Axis, AxisValues, Metric, OutputFormat, PulseFamily, SweepProtocol, SweepSpec, WfcChoice,
};

use crate::CliError;

/// Every key is optional; unset keys take the documented default.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Purcell factor Gamma_1D/Gamma' (`inf` for a lossless emitter) [default: inf]
    #[arg(long = "P")]
    #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
    pub purcell: Option<f64>,

    /// Waveguide decay rate; sets the unit of all rates [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_1d: Option<f64>,

    /// Carrier minus transition frequency, in units of Gamma_1D [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,

    /// Purcell factor of the second site for `remote` [default: same as --P]
    #[arg(long = "P-b")]
    #[serde(rename = "P_b", skip_serializing_if = "Option::is_none")]
    pub purcell_b: Option<f64>,

    /// half-exp, gaussian or flat-top [default: half-exp]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pulse: Option<String>,

    /// Pulse bandwidth gamma (half-exp rate, 1/sigma for gaussian) [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_pulse: Option<f64>,

    /// Gaussian amplitude width; overrides --gamma-pulse
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,

    /// Flat-top plateau length [default: 100]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flat_duration: Option<f64>,

    /// Flat-top ramp length [default: 10]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge: Option<f64>,

    /// Use the analytic plane-wave limit instead of a finite pulse
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub narrowband: Option<bool>,

    /// etd or trapezoid [default: etd]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,

    /// time-bin or polarization [default: time-bin]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<String>,

    /// none, attenuator or second-scatterer [default: second-scatterer]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wfc: Option<String>,

    /// Real part of the attenuator amplitude [default: plane-wave f]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wfc_k: Option<f64>,

    /// Imaginary part of the attenuator amplitude [default: 0 when --wfc-k is set]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wfc_k_im: Option<f64>,

    /// Multiplier on Gamma_1D inside the Z-block, 1 or 2 [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_boost: Option<f64>,

    /// Grid step override
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,

    /// Grid end override
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,

    /// Samples per shortest time scale [default: 50]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,

    /// Time-bin separation, checked against the scattered envelope width
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_separation: Option<f64>,

    /// Qubit stored by `memory`: 0, 1, +, -, +i or -i [default: +]
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photon_state: Option<String>,

    /// Measurement basis x, y or z for `memory` and `remote` [default: x]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,

    /// Write envelopes as CSV (tau, then Re/Im per packet) to this path
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_envelopes: Option<PathBuf>,

    /// csv or json [default: csv]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,

    /// Output path [default: stdout]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Keys set in `top` win.
    pub fn overlaid(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top; purcell, gamma_1d, delta, purcell_b, pulse, gamma_pulse, sigma,
            flat_duration, edge, narrowband, method, protocol, wfc, wfc_k, wfc_k_im,
            coupling_boost, dt, t_end, resolution, bin_separation, photon_state, basis,
            dump_envelopes, format, out)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn format(&self) -> Result<OutputFormat, CliError> {
        Ok(self.format.as_deref().unwrap_or("csv").parse()?)
    }

    fn method(&self) -> Result<ScatterMethod, CliError> {
        if self.narrowband == Some(true) {
            return Ok(ScatterMethod::NarrowbandLimit);
        }
        match self.method.as_deref().unwrap_or("etd") {
            "etd" => Ok(ScatterMethod::EtdRecursive),
            "trapezoid" => Ok(ScatterMethod::Trapezoid),
            other => Err(invalid("method", format!("expected etd or trapezoid, got `{other}`"))),
        }
    }

    pub fn emitter_with(&self, purcell: Option<f64>) -> Result<EmitterParams, CliError> {
        Ok(EmitterParams::from_purcell(
            self.gamma_1d.unwrap_or(1.0),
            purcell.unwrap_or(f64::INFINITY),
            self.delta.unwrap_or(0.0) * self.gamma_1d.unwrap_or(1.0),
        )?)
    }

    pub fn emitter(&self) -> Result<EmitterParams, CliError> {
        self.emitter_with(self.purcell)
    }

    pub fn shape(&self) -> Result<Option<PulseShape>, CliError> {
        if self.narrowband == Some(true) {
            return Ok(None);
        }
        let g1d = self.gamma_1d.unwrap_or(1.0);
        let gamma = self.gamma_pulse.unwrap_or(1.0) * g1d;
        let shape = match self.pulse.as_deref().unwrap_or("half-exp") {
            "half-exp" => PulseShape::half_exponential(gamma),
            "gaussian" => PulseShape::gaussian(self.sigma.unwrap_or(1.0 / gamma)),
            "flat-top" => PulseShape::flat_top(
                self.flat_duration.unwrap_or(100.0),
                self.edge.unwrap_or(10.0),
            ),
            other => {
                return Err(invalid(
                    "pulse",
                    format!("expected half-exp, gaussian or flat-top, got `{other}`"),
                ))
            }
        };
        shape.validate()?;
        Ok(Some(shape))
    }

    pub fn coupling_boost(&self) -> f64 {
        self.coupling_boost.unwrap_or(1.0)
    }

    pub fn block_for(&self, emitter: EmitterParams) -> Result<ScatterBlock, CliError> {
        Ok(ScatterBlock::new(emitter, self.coupling_boost(), self.method()?)?)
    }

    /// Incident packet on a grid resolving every emitter in `emitters`,
    /// with room for `stages` ringdowns.
    pub fn packet(&self, emitters: &[EmitterParams], stages: usize) -> Result<WavePacket, CliError> {
        let Some(shape) = self.shape()? else {
            return Ok(WavePacket::plane_wave_reference(0.0, Direction::Rightward));
        };
        let boost = self.coupling_boost();
        let mut fastest = 0.0f64;
        let mut slowest = f64::INFINITY;
        for e in emitters {
            let g = e.boosted(boost)?.gamma_total();
            fastest = fastest.max(g.max(e.gamma_total()));
            slowest = slowest.min(g.min(e.gamma_total()));
        }
        let resolution = self.resolution.unwrap_or(DEFAULT_RESOLUTION);
        let fine = TimeGrid::for_cascade(&shape, fastest, resolution, stages)?;
        let long = TimeGrid::for_cascade(&shape, slowest, resolution, stages)?;
        let dt = self.dt.unwrap_or(fine.dt());
        let t_end = self.t_end.unwrap_or(long.t_end());
        let grid = TimeGrid::spanning(fine.t_start(), t_end, dt)?;
        Ok(make_pulse(&shape, &grid, 0.0, Direction::Rightward)?)
    }

    pub fn wfc(&self, block: &ScatterBlock) -> Result<Wfc, CliError> {
        match self.wfc.as_deref().unwrap_or("second-scatterer") {
            "none" => Ok(Wfc::None),
            "attenuator" => Ok(match self.wfc_k {
                Some(re) => Wfc::Attenuator(C64::new(re, self.wfc_k_im.unwrap_or(0.0))),
                None => Wfc::default_attenuator(block),
            }),
            "second-scatterer" => Ok(Wfc::SecondScatterer(block.emitter)),
            other => Err(invalid(
                "wfc",
                format!("expected none, attenuator or second-scatterer, got `{other}`"),
            )),
        }
    }

    pub fn gate_for(&self, emitter: EmitterParams) -> Result<Gate, CliError> {
        let block = self.block_for(emitter)?;
        match self.protocol.as_deref().unwrap_or("time-bin") {
            "time-bin" => Ok(Gate::time_bin(block, self.bin_separation)),
            "polarization" => Ok(Gate::polarization(block, self.wfc(&block)?)),
            other => Err(invalid(
                "protocol",
                format!("expected time-bin or polarization, got `{other}`"),
            )),
        }
    }

    pub fn basis(&self) -> Result<Basis, CliError> {
        match self.basis.as_deref().unwrap_or("x") {
            "x" => Ok(Basis::X),
            "y" => Ok(Basis::Y),
            "z" => Ok(Basis::Z),
            other => Err(invalid("basis", format!("expected x, y or z, got `{other}`"))),
        }
    }

    pub fn photon_state(&self) -> Result<[C64; 2], CliError> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (r, i) = (|x: f64| C64::new(x, 0.0), |x: f64| C64::new(0.0, x));
        match self.photon_state.as_deref().unwrap_or("+") {
            "0" => Ok([r(1.0), r(0.0)]),
            "1" => Ok([r(0.0), r(1.0)]),
            "+" => Ok([r(s), r(s)]),
            "-" => Ok([r(s), r(-s)]),
            "+i" => Ok([r(s), i(s)]),
            "-i" => Ok([r(s), i(-s)]),
            other => Err(invalid(
                "photon_state",
                format!("expected 0, 1, +, -, +i or -i, got `{other}`"),
            )),
        }
    }
}

fn invalid(field: &str, reason: String) -> CliError {
    CliError::Config(format!("invalid `{field}`: {reason}"))
}

/// Sweep description read from a TOML file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    protocol: Option<String>,
    pulse: Option<String>,
    outputs: Option<Vec<String>>,
    resolution: Option<f64>,
    cap: Option<usize>,
    flat_duration: Option<f64>,
    edge: Option<f64>,
    #[serde(rename = "P")]
    purcell: Option<f64>,
    gamma: Option<f64>,
    delta: Option<f64>,
    coupling_boost: Option<f64>,
    wfc: Option<String>,
    #[serde(default)]
    axis: Vec<AxisEntry>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisEntry {
    name: String,
    values: Vec<toml::Value>,
}

fn numeric(field: &str, v: &toml::Value) -> Result<f64, CliError> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(n) => Ok(*n as f64),
        toml::Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        other => Err(invalid(field, format!("expected a number, got {other}"))),
    }
}

impl SpecFile {
    pub fn load(path: &Path) -> Result<SweepSpec, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let file: SpecFile = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        file.into_spec()
    }

    pub fn into_spec(self) -> Result<SweepSpec, CliError> {
        let protocol: SweepProtocol = self.protocol.as_deref().unwrap_or("scatter").parse()?;
        let pulse = match self.pulse.as_deref().unwrap_or("half-exp") {
            "half-exp" => PulseFamily::HalfExponential,
            "gaussian" => PulseFamily::Gaussian,
            "flat-top" => PulseFamily::FlatTop {
                duration: self.flat_duration.unwrap_or(100.0),
                edge: self.edge.unwrap_or(10.0),
            },
            "narrowband" => PulseFamily::Narrowband,
            other => {
                return Err(invalid(
                    "pulse",
                    format!("expected half-exp, gaussian, flat-top or narrowband, got `{other}`"),
                ))
            }
        };
        let mut spec = SweepSpec::new(protocol, pulse);
        if let Some(outputs) = self.outputs {
            spec.outputs = outputs
                .iter()
                .map(|m| m.parse::<Metric>())
                .collect::<Result<_, _>>()?;
        }
        if let Some(r) = self.resolution {
            spec.resolution = r;
        }
        if let Some(c) = self.cap {
            spec.cap = c;
        }
        let b = &mut spec.base;
        b.purcell = self.purcell.unwrap_or(b.purcell);
        b.gamma = self.gamma.unwrap_or(b.gamma);
        b.delta = self.delta.unwrap_or(b.delta);
        b.coupling_boost = self.coupling_boost.unwrap_or(b.coupling_boost);
        if let Some(w) = &self.wfc {
            b.wfc = w.parse::<WfcChoice>()?;
        }
        for (k, entry) in self.axis.iter().enumerate() {
            let field = format!("axis[{k}] ({})", entry.name);
            let axis: Axis = entry
                .name
                .parse()
                .map_err(|_| invalid(&format!("axis[{k}].name"), format!("unknown axis `{}`", entry.name)))?;
            let values = if axis == Axis::Wfc {
                AxisValues::Wfc(
                    entry
                        .values
                        .iter()
                        .map(|v| match v {
                            toml::Value::String(s) => Ok(s.parse::<WfcChoice>()?),
                            other => Err(invalid(&field, format!("expected a string, got {other}"))),
                        })
                        .collect::<Result<_, CliError>>()?,
                )
            } else {
                AxisValues::Numeric(
                    entry
                        .values
                        .iter()
                        .map(|v| numeric(&field, v))
                        .collect::<Result<_, _>>()?,
                )
            };
            spec.axes.push((axis, values));
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: RunConfig = toml::from_str("P = 2.0\ndelta = 0.5\n").unwrap();
        let flags = RunConfig {
            purcell: Some(5.0),
            ..Default::default()
        };
        let merged = file.overlaid(flags);
        assert_eq!(merged.purcell, Some(5.0));
        assert_eq!(merged.delta, Some(0.5));
    }

    #[test]
    fn dump_is_reingested_unchanged() {
        let cfg = RunConfig {
            purcell: Some(f64::INFINITY),
            pulse: Some("gaussian".into()),
            narrowband: Some(false),
            wfc_k: Some(0.5),
            out: Some("x.csv".into()),
            ..Default::default()
        };
        let back: RunConfig = toml::from_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn spec_file_axes_keep_their_order() {
        let file: SpecFile = toml::from_str(
            "pulse = \"narrowband\"\nP = 3\n[[axis]]\nname = \"delta\"\nvalues = [0, 0.5]\n\
             [[axis]]\nname = \"P\"\nvalues = [1, \"inf\"]\n",
        )
        .unwrap();
        let spec = file.into_spec().unwrap();
        assert_eq!(spec.axes[0].0, Axis::Delta);
        assert_eq!(spec.axes[1].1, AxisValues::Numeric(vec![1.0, f64::INFINITY]));
        assert_eq!(spec.base.purcell, 3.0);
        assert!(spec.pulse.is_analytic());
    }

    #[test]
    fn spec_file_rejects_wfc_numbers() {
        let file: SpecFile =
            toml::from_str("[[axis]]\nname = \"wfc\"\nvalues = [1]\n").unwrap();
        assert!(matches!(file.into_spec(), Err(CliError::Config(_))));
    }
}
