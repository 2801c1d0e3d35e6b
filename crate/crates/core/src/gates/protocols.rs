//! Time-bin and polarization entangling gates built from Z-blocks.

use crate::error::{Error, Result};
use crate::joint::{
    emitter_unitary, hadamard, z_block, EmitterLevel, JointState, Polarization, Port,
    ScatterBlock,
};
use crate::pulse::{mass_inner, WavePacket, C64};
use crate::scattering::{narrowband_f, EmitterParams, ScatterMethod};

use super::map::{extract_conditional_map, ConditionalMap, RunOutput};
use super::metrics::{
    average_fidelity, choi_concurrence, cz_target, process_fidelity, time_bin_target, CMatrix,
};

/// Largest allowed overlap between the early and late time bins.
pub const BIN_OVERLAP_TOLERANCE: f64 = 1e-8;

/// Element in the non-scattering arm of the polarization interferometer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Wfc {
    None,
    /// Scalar amplitude (and phase) `k`, `|k| <= 1`.
    Attenuator(C64),
    /// An identical Z-block whose emitter stays in `g+`.
    SecondScatterer(EmitterParams),
}

impl Wfc {
    /// Attenuator set to the plane-wave reflection amplitude of `block`.
    pub fn default_attenuator(block: &ScatterBlock) -> Self {
        Wfc::Attenuator(narrowband_f(&block.effective_emitter()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    /// `bin_separation = None` skips the overlap check and treats the bins
    /// as disjoint.
    TimeBin { bin_separation: Option<f64> },
    Polarization { wfc: Wfc },
}

/// Standard benchmark scalars for a heralded gate.
#[derive(Clone, Debug, PartialEq)]
pub struct GateReport {
    pub process_fidelity: f64,
    pub average_fidelity: f64,
    pub p_success_avg: f64,
    pub p_success_min: f64,
    pub failure_rate: f64,
    pub loss_rate: f64,
    pub entangling_power_witness: f64,
    pub kraus_rank: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub block: ScatterBlock,
}

fn basis_vector(i: usize, d: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d];
    v[i] = C64::new(1.0, 0.0);
    v
}

/// Superposition inputs used to check linearity.
fn probe_vectors() -> Vec<Vec<C64>> {
    let h = C64::new(0.5, 0.0);
    let i = C64::new(0.0, 0.5);
    vec![vec![h, h, h, h], vec![h, i, -h, -i]]
}

/// Overlap of `|x(t)|` with `|x(t - delay)|`, relative to `‖x‖²`.
pub(crate) fn shifted_magnitude_overlap(x: &WavePacket, delay: f64) -> f64 {
    let n = x.amplitudes().len();
    let m = (delay.abs() / x.grid().dt()).round() as usize;
    let norm = x.norm_sqr();
    if m >= n || !(norm > 0.0) {
        return 0.0;
    }
    let mags: Vec<C64> = x.amplitudes().iter().map(|a| C64::new(a.norm(), 0.0)).collect();
    mass_inner(&mags[m..], &mags[..n - m], x.grid().dt()).re / norm
}

fn success_envelopes(
    out: &mut RunOutput,
    state: &JointState,
    photon: usize,
) -> Result<()> {
    for (label, packet) in state.branches() {
        out.accumulate(2 * photon + label.emitter.index(), packet.clone())?;
    }
    Ok(())
}

impl Gate {
    pub fn time_bin(block: ScatterBlock, bin_separation: Option<f64>) -> Self {
        Self {
            kind: GateKind::TimeBin { bin_separation },
            block,
        }
    }

    pub fn polarization(block: ScatterBlock, wfc: Wfc) -> Self {
        Self {
            kind: GateKind::Polarization { wfc },
            block,
        }
    }

    pub fn target(&self) -> CMatrix {
        match self.kind {
            GateKind::TimeBin { .. } => time_bin_target(),
            GateKind::Polarization { .. } => cz_target(),
        }
    }

    pub fn herald_spec(&self) -> &'static str {
        match self.kind {
            GateKind::TimeBin { .. } => "v-polarized photon in either time bin",
            GateKind::Polarization { .. } => {
                "photon leaves the interferometer without an h detection at the input port"
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let GateKind::Polarization {
            wfc: Wfc::Attenuator(k),
        } = self.kind
        {
            if !(k.norm() <= 1.0) {
                return Err(Error::InvalidAttenuation(k.norm()));
            }
        }
        Ok(())
    }

    /// Runs the gate on input amplitudes over `2p + a` with incident
    /// envelope `packet` (any norm) and returns the heralded output.
    pub fn run(&self, input: &[C64], packet: &WavePacket) -> Result<RunOutput> {
        self.validate()?;
        let mut out = RunOutput::default();
        for p in 0..2 {
            let amps = [input[2 * p], input[2 * p + 1]];
            if amps.iter().all(|a| a.norm_sqr() == 0.0) {
                continue;
            }
            let state = JointState::product(amps, packet, Polarization::H, Port::Waveguide);
            let (success, failure, loss) = match (self.kind, p) {
                (GateKind::TimeBin { .. }, 0) => {
                    let h = z_block(&state, &self.block)?;
                    let s = emitter_unitary(&h.success_state, &hadamard())?;
                    (s, h.failure_weight, h.loss_weight)
                }
                (GateKind::TimeBin { .. }, _) => {
                    let h = z_block(&emitter_unitary(&state, &hadamard())?, &self.block)?;
                    (h.success_state, h.failure_weight, h.loss_weight)
                }
                (GateKind::Polarization { .. }, 1) => {
                    let h = z_block(&state, &self.block)?;
                    (h.success_state, h.failure_weight, h.loss_weight)
                }
                (GateKind::Polarization { wfc }, _) => self.wfc_arm(&state, packet, wfc)?,
            };
            success_envelopes(&mut out, &success, p)?;
            out.failure_weight += failure;
            out.loss_weight += loss;
        }
        Ok(out)
    }

    /// `|0>_p` arm of the polarization gate.
    fn wfc_arm(
        &self,
        state: &JointState,
        packet: &WavePacket,
        wfc: Wfc,
    ) -> Result<(JointState, f64, f64)> {
        let mass = state.branch_mass();
        match wfc {
            Wfc::None => Ok((state.clone(), 0.0, 0.0)),
            Wfc::Attenuator(k) => {
                let scaled = JointState::from_branches(
                    state.branches().iter().map(|(l, p)| (*l, p.scaled(k))),
                )?;
                Ok((scaled, 0.0, (1.0 - k.norm_sqr()) * mass))
            }
            Wfc::SecondScatterer(params) => {
                let aux = ScatterBlock::new(params, self.block.coupling_boost, self.block.method)?;
                let (phi_r, failure, loss) = second_scatterer_output(packet, &aux)?;
                let pi_phase = phi_r.scaled(C64::new(-1.0, 0.0));
                let scale = packet.norm_sqr();
                let mut branches = Vec::new();
                for (label, p) in state.branches() {
                    // each branch is c * packet; recover c from the overlap
                    let c = packet.inner(p)? / scale;
                    branches.push((*label, pi_phase.scaled(c)));
                }
                Ok((JointState::from_branches(branches)?, failure * mass / scale, loss * mass / scale))
            }
        }
    }

    fn check_bins(&self, packet: &WavePacket, runs: &[RunOutput]) -> Result<()> {
        let GateKind::TimeBin {
            bin_separation: Some(sep),
        } = self.kind
        else {
            return Ok(());
        };
        if !(sep > 0.0 && sep.is_finite()) {
            return Err(Error::param("bin_separation", "must be positive"));
        }
        if self.block.method == ScatterMethod::NarrowbandLimit {
            return Ok(());
        }
        let mut worst = shifted_magnitude_overlap(packet, sep);
        for run in runs {
            for env in run.envelopes.values() {
                worst = worst.max(shifted_magnitude_overlap(env, sep));
            }
        }
        if worst >= BIN_OVERLAP_TOLERANCE {
            return Err(Error::BinsOverlap { overlap: worst });
        }
        Ok(())
    }

    /// Runs the four computational inputs and two superposition probes,
    /// extracts the conditional map and scores it against the target.
    pub fn evaluate(&self, packet: &WavePacket) -> Result<(ConditionalMap, GateReport)> {
        self.validate()?;
        let basis: Vec<RunOutput> = (0..4)
            .map(|i| self.run(&basis_vector(i, 4), packet))
            .collect::<Result<_>>()?;
        self.check_bins(packet, &basis)?;
        let probes: Vec<(Vec<C64>, RunOutput)> = probe_vectors()
            .into_iter()
            .map(|v| {
                let out = self.run(&v, packet)?;
                Ok((v, out))
            })
            .collect::<Result<_>>()?;
        let map = extract_conditional_map(&basis, &probes, 4, self.herald_spec())?;
        let report = gate_report(&map, &self.target(), &basis, packet.norm_sqr())?;
        Ok((map, report))
    }
}

/// Scores `map` against `target`; failure and loss rates are averaged over
/// the basis runs and expressed relative to the incident norm.
pub fn gate_report(
    map: &ConditionalMap,
    target: &CMatrix,
    basis: &[RunOutput],
    incident_norm: f64,
) -> Result<GateReport> {
    let f = process_fidelity(&map.kraus_ops, target)?;
    let d = basis.len() as f64;
    let scale = 1.0 / incident_norm;
    Ok(GateReport {
        process_fidelity: f,
        average_fidelity: average_fidelity(f, target.nrows()),
        p_success_avg: map.p_success_avg * scale,
        p_success_min: map.p_success_min * scale,
        failure_rate: basis.iter().map(|r| r.failure_weight).sum::<f64>() / d * scale,
        loss_rate: basis.iter().map(|r| r.loss_weight).sum::<f64>() / d * scale,
        entangling_power_witness: choi_concurrence(&map.kraus_ops)?,
        kraus_rank: map.kraus_ops.len(),
    })
}

/// Time-bin gate: the early bin sees the Z-block then `H_a`, the late bin
/// `H_a` then the Z-block. Target `|0><0|_p ⊗ H Z + |1><1|_p ⊗ Z H`.
pub fn time_bin_gate(
    packet: &WavePacket,
    bin_separation: Option<f64>,
    block: &ScatterBlock,
) -> Result<(ConditionalMap, GateReport)> {
    Gate::time_bin(*block, bin_separation).evaluate(packet)
}

/// Polarization gate: `|1>_p = h` passes the Z-block, `|0>_p` passes the
/// waveform corrector. Target: controlled phase.
pub fn polarization_gate(
    packet: &WavePacket,
    block: &ScatterBlock,
    wfc: Wfc,
) -> Result<(ConditionalMap, GateReport)> {
    Gate::polarization(*block, wfc).evaluate(packet)
}

/// `(Φ_r, failure, loss)` of a Z-block whose emitter is held in `g+`.
fn second_scatterer_output(packet: &WavePacket, block: &ScatterBlock) -> Result<(WavePacket, f64, f64)> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let state = JointState::product([zero, one], packet, Polarization::H, Port::Waveguide);
    let h = z_block(&state, block)?;
    let phi_r = h
        .success_state
        .branches()
        .iter()
        .find(|(l, _)| l.emitter == EmitterLevel::GPlus)
        .map(|(_, p)| p.clone())
        .unwrap_or_else(|| WavePacket::zeros(*packet.grid(), packet.carrier_detuning(), packet.direction()));
    Ok((phi_r, h.failure_weight, h.loss_weight))
}

/// Waveform corrector made of a second Z-block with its emitter parked in
/// `g+`: returns that block's `Φ_r` for the arm envelope `packet`. The
/// emitter never entangles because it only ever sees `g+`.
pub fn wfc_second_scatterer(
    packet: &WavePacket,
    params: &EmitterParams,
    coupling_boost: f64,
    method: ScatterMethod,
) -> Result<WavePacket> {
    let block = ScatterBlock::new(*params, coupling_boost, method)?;
    Ok(second_scatterer_output(packet, &block)?.0)
}
