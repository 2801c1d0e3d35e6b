//! Emitter ⊗ photon states with envelope-valued branch amplitudes, the
//! four-level scattering map and the heralded Z-block.
//!
//! Linear polarizations are `h = (σ+ + σ-)/√2` and `v = (σ+ - σ-)/√2`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::pulse::{WavePacket, C64};
use crate::scattering::{reflected_envelope, EmitterParams, ScatterMethod};

pub type Mat2 = [[C64; 2]; 2];

const UNITARITY_TOLERANCE: f64 = 1e-12;

/// Ground sublevels; `GMinus` is `|0>_a`, `GPlus` is `|1>_a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EmitterLevel {
    GMinus,
    GPlus,
}

impl EmitterLevel {
    pub const ALL: [EmitterLevel; 2] = [EmitterLevel::GMinus, EmitterLevel::GPlus];

    pub fn index(self) -> usize {
        match self {
            EmitterLevel::GMinus => 0,
            EmitterLevel::GPlus => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    /// Circular polarization that couples to this level.
    fn coupled(self) -> Polarization {
        match self {
            EmitterLevel::GMinus => Polarization::SigmaMinus,
            EmitterLevel::GPlus => Polarization::SigmaPlus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    SigmaPlus,
    SigmaMinus,
    H,
    V,
}

impl Polarization {
    fn is_circular(self) -> bool {
        matches!(self, Polarization::SigmaPlus | Polarization::SigmaMinus)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    Waveguide,
    InterferometerArm,
    Output,
    FailurePort,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchLabel {
    pub emitter: EmitterLevel,
    pub polarization: Polarization,
    pub port: Port,
}

impl BranchLabel {
    pub fn new(emitter: EmitterLevel, polarization: Polarization, port: Port) -> Self {
        Self {
            emitter,
            polarization,
            port,
        }
    }
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{:?}/{:?}", self.emitter, self.polarization, self.port)
    }
}

/// Branches plus the probability already sent to the loss and failure sectors.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    branches: BTreeMap<BranchLabel, WavePacket>,
    loss_weight: f64,
    failure_weight: f64,
}

impl JointState {
    /// `(c0 |g-> + c1 |g+>) ⊗ packet`, all in one polarization and port.
    pub fn product(
        emitter: [C64; 2],
        packet: &WavePacket,
        polarization: Polarization,
        port: Port,
    ) -> Self {
        let mut branches = BTreeMap::new();
        for level in EmitterLevel::ALL {
            let c = emitter[level.index()];
            if c != C64::new(0.0, 0.0) {
                branches.insert(
                    BranchLabel::new(level, polarization, port),
                    packet.scaled(c),
                );
            }
        }
        Self {
            branches,
            loss_weight: 0.0,
            failure_weight: 0.0,
        }
    }

    pub fn from_branches(
        branches: impl IntoIterator<Item = (BranchLabel, WavePacket)>,
    ) -> Result<Self> {
        let mut state = Self {
            branches: BTreeMap::new(),
            loss_weight: 0.0,
            failure_weight: 0.0,
        };
        for (label, packet) in branches {
            state.accumulate(label, packet)?;
        }
        Ok(state)
    }

    /// Adds `packet` to the branch at `label`, creating it if absent.
    pub fn accumulate(&mut self, label: BranchLabel, packet: WavePacket) -> Result<()> {
        if let Some(first) = self.branches.values().next() {
            if !first.compatible(&packet) {
                return Err(Error::GridMismatch);
            }
        }
        match self.branches.get_mut(&label) {
            Some(existing) => *existing = existing.add(&packet)?,
            None => {
                self.branches.insert(label, packet);
            }
        }
        Ok(())
    }

    pub fn branches(&self) -> &BTreeMap<BranchLabel, WavePacket> {
        &self.branches
    }

    pub fn get(&self, label: &BranchLabel) -> Option<&WavePacket> {
        self.branches.get(label)
    }

    pub fn loss_weight(&self) -> f64 {
        self.loss_weight
    }

    pub fn failure_weight(&self) -> f64 {
        self.failure_weight
    }

    pub fn branch_mass(&self) -> f64 {
        self.branches.values().map(WavePacket::norm_sqr).sum()
    }

    /// Branch mass plus the loss and failure sectors.
    pub fn total_probability(&self) -> f64 {
        self.branch_mass() + self.loss_weight + self.failure_weight
    }

    fn with_sectors_of(mut self, other: &JointState) -> Self {
        self.loss_weight = other.loss_weight;
        self.failure_weight = other.failure_weight;
        self
    }

    fn rebuild<F>(&self, mut map: F) -> Result<Self>
    where
        F: FnMut(&BranchLabel, &WavePacket, &mut Vec<(BranchLabel, WavePacket)>) -> Result<()>,
    {
        let mut out = Vec::new();
        for (label, packet) in &self.branches {
            map(label, packet, &mut out)?;
        }
        Ok(Self::from_branches(out)?.with_sectors_of(self))
    }

    /// Rewrites h/v branches in the σ± basis.
    pub fn to_circular(&self) -> Result<Self> {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.rebuild(|label, packet, out| {
            let mut push = |pol, c: C64| {
                out.push((BranchLabel { polarization: pol, ..*label }, packet.scaled(c)))
            };
            match label.polarization {
                Polarization::H => {
                    push(Polarization::SigmaPlus, s);
                    push(Polarization::SigmaMinus, s);
                }
                Polarization::V => {
                    push(Polarization::SigmaPlus, s);
                    push(Polarization::SigmaMinus, -s);
                }
                _ => push(label.polarization, C64::new(1.0, 0.0)),
            }
            Ok(())
        })
    }

    /// Rewrites σ± branches in the h/v basis.
    pub fn to_linear(&self) -> Result<Self> {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.rebuild(|label, packet, out| {
            let mut push = |pol, c: C64| {
                out.push((BranchLabel { polarization: pol, ..*label }, packet.scaled(c)))
            };
            match label.polarization {
                Polarization::SigmaPlus => {
                    push(Polarization::H, s);
                    push(Polarization::V, s);
                }
                Polarization::SigmaMinus => {
                    push(Polarization::H, s);
                    push(Polarization::V, -s);
                }
                _ => push(label.polarization, C64::new(1.0, 0.0)),
            }
            Ok(())
        })
    }

    /// Moves every branch to `port`.
    pub fn routed(&self, port: Port) -> Result<Self> {
        self.rebuild(|label, packet, out| {
            out.push((BranchLabel { port, ..*label }, packet.clone()));
            Ok(())
        })
    }

    /// Drops branches whose mass is below `floor`.
    pub fn pruned(mut self, floor: f64) -> Self {
        self.branches.retain(|_, p| p.norm_sqr() > floor);
        self
    }
}

/// Result of keeping one output polarization and discarding the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldOutcome {
    /// Conditioned, unnormalized state; its sector weights match the fields below.
    pub success_state: JointState,
    pub failure_weight: f64,
    pub loss_weight: f64,
    pub p_success: f64,
}

/// One scattering block: an emitter, its waveguide-coupling boost and the
/// integrator used to evaluate it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterBlock {
    pub emitter: EmitterParams,
    pub coupling_boost: f64,
    pub method: ScatterMethod,
}

impl ScatterBlock {
    pub fn new(emitter: EmitterParams, coupling_boost: f64, method: ScatterMethod) -> Result<Self> {
        emitter.boosted(coupling_boost)?;
        Ok(Self {
            emitter,
            coupling_boost,
            method,
        })
    }

    /// Emitter with the boost folded into its waveguide coupling.
    pub fn effective_emitter(&self) -> EmitterParams {
        self.emitter
            .boosted(self.coupling_boost)
            .expect("boost validated at construction")
    }

    /// Reflected envelope `Φ_r`.
    pub fn reflected(&self, psi: &WavePacket) -> Result<WavePacket> {
        Ok(reflected_envelope(psi, &self.effective_emitter(), self.method)?
            .with_direction(psi.direction()))
    }

    /// Combined output mode `Φ = Ψ + 2Φ_r`, so that `(Ψ - Φ)/2 = -Φ_r`.
    pub fn combined_mode(&self, psi: &WavePacket) -> Result<WavePacket> {
        psi.add_scaled(C64::new(2.0, 0.0), &self.reflected(psi)?)
    }
}

/// Co-polarized waveguide branches (`g+` with `σ+`, `g-` with `σ-`) are
/// replaced by the combined mode `Φ`; every other branch passes unchanged.
/// The mass removed by scattering is added to the loss sector.
pub fn scatter_four_level(state: &JointState, block: &ScatterBlock) -> Result<JointState> {
    let mut lost = 0.0;
    let mut out = state.rebuild(|label, packet, out| {
        if !label.polarization.is_circular() {
            return Err(Error::PolarizationBasis(label.to_string()));
        }
        if label.port == Port::Waveguide && label.emitter.coupled() == label.polarization {
            let phi = block.combined_mode(packet)?;
            lost += packet.norm_sqr() - phi.norm_sqr();
            out.push((*label, phi));
        } else {
            out.push((*label, packet.clone()));
        }
        Ok(())
    })?;
    out.loss_weight += lost;
    Ok(out)
}

/// Full output of the Z-block before heralding: h and v branches at the
/// output port. The v amplitude is `±Φ_r` (`+` on `g+`, `-` on `g-`), the h
/// amplitude is `(Φ + Ψ)/2`.
pub fn z_block_output(state: &JointState, block: &ScatterBlock) -> Result<JointState> {
    for label in state.branches().keys() {
        if label.polarization != Polarization::H || label.port != Port::Waveguide {
            return Err(Error::NotHPolarized(label.to_string()));
        }
    }
    let scattered = scatter_four_level(&state.to_circular()?, block)?;
    scattered.to_linear()?.routed(Port::Output)
}

/// Z-block conditioned on a v-polarized output photon: the success state is
/// `-Z_a` on the emitter with envelope `Φ_r`.
pub fn z_block(state: &JointState, block: &ScatterBlock) -> Result<HeraldOutcome> {
    Ok(herald_filter(&z_block_output(state, block)?, Polarization::V))
}

/// Keeps branches with linear polarization `keep` (circular branches are
/// first resolved into h/v); the rest of the mass becomes failure weight.
pub fn herald_filter(state: &JointState, keep: Polarization) -> HeraldOutcome {
    let linear = if keep.is_circular() {
        state.to_circular()
    } else {
        state.to_linear()
    }
    .expect("basis change keeps the common grid");
    let mut kept = BTreeMap::new();
    let mut discarded = 0.0;
    for (label, packet) in linear.branches {
        if label.polarization == keep {
            kept.insert(label, packet);
        } else {
            discarded += packet.norm_sqr();
        }
    }
    let success_state = JointState {
        branches: kept,
        loss_weight: state.loss_weight,
        failure_weight: state.failure_weight + discarded,
    };
    HeraldOutcome {
        p_success: success_state.branch_mass(),
        failure_weight: success_state.failure_weight,
        loss_weight: success_state.loss_weight,
        success_state,
    }
}

pub fn identity2() -> Mat2 {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    [[o, z], [z, o]]
}

pub fn hadamard() -> Mat2 {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

pub fn pauli_x() -> Mat2 {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    [[z, o], [o, z]]
}

pub fn pauli_y() -> Mat2 {
    let (i, z) = (C64::new(0.0, 1.0), C64::new(0.0, 0.0));
    [[z, -i], [i, z]]
}

pub fn pauli_z() -> Mat2 {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    [[o, z], [z, -o]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn unitarity_deviation(u: &Mat2) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let g = u[0][i].conj() * u[0][j] + u[1][i].conj() * u[1][j];
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}

/// Applies `u` to the emitter qubit, mixing `g-`/`g+` branches that share
/// polarization and port.
pub fn emitter_unitary(state: &JointState, u: &Mat2) -> Result<JointState> {
    let deviation = unitarity_deviation(u);
    if !(deviation <= UNITARITY_TOLERANCE) {
        return Err(Error::NonUnitary { deviation });
    }
    state.rebuild(|label, packet, out| {
        let col = label.emitter.index();
        for level in EmitterLevel::ALL {
            let c = u[level.index()][col];
            if c != C64::new(0.0, 0.0) {
                out.push((BranchLabel { emitter: level, ..*label }, packet.scaled(c)));
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{make_pulse, Direction, PulseShape, TimeGrid};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn packet(rate: f64) -> WavePacket {
        let shape = PulseShape::half_exponential(rate);
        let grid = TimeGrid::for_pulse(&shape, 1.0, 50.0).unwrap();
        make_pulse(&shape, &grid, 0.0, Direction::Rightward).unwrap()
    }

    fn narrowband() -> WavePacket {
        WavePacket::plane_wave_reference(0.0, Direction::Rightward)
    }

    fn block(purcell: f64, delta: f64, boost: f64, method: ScatterMethod) -> ScatterBlock {
        let e = EmitterParams::from_purcell(1.0, purcell, delta).unwrap();
        ScatterBlock::new(e, boost, method).unwrap()
    }

    fn label(e: EmitterLevel, p: Polarization, port: Port) -> BranchLabel {
        BranchLabel::new(e, p, port)
    }

    #[test]
    fn decoupled_branch_is_untouched() {
        let psi = packet(1.0);
        let s = JointState::product([c(1.0), c(0.0)], &psi, Polarization::SigmaPlus, Port::Waveguide);
        let b = block(3.0, 0.2, 1.0, ScatterMethod::EtdRecursive);
        let out = scatter_four_level(&s, &b).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn perfect_mirror_folds_a_pi_phase_into_the_combined_mode() {
        let psi = narrowband();
        let s = JointState::product([c(0.0), c(1.0)], &psi, Polarization::SigmaPlus, Port::Waveguide);
        let b = block(f64::INFINITY, 0.0, 1.0, ScatterMethod::NarrowbandLimit);
        let out = scatter_four_level(&s, &b).unwrap();
        let l = label(EmitterLevel::GPlus, Polarization::SigmaPlus, Port::Waveguide);
        assert!(out.get(&l).unwrap().max_abs_diff(&psi.scaled(c(-1.0))).unwrap() < 1e-15);
        assert_eq!(out.loss_weight(), 0.0);
    }

    #[test]
    fn only_the_coupled_branch_scatters() {
        let psi = packet(1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let st = JointState::product([c(s), c(s)], &psi, Polarization::SigmaPlus, Port::Waveguide);
        let b = block(2.0, 0.0, 1.0, ScatterMethod::EtdRecursive);
        let out = scatter_four_level(&st, &b).unwrap();
        let minus = label(EmitterLevel::GMinus, Polarization::SigmaPlus, Port::Waveguide);
        let plus = label(EmitterLevel::GPlus, Polarization::SigmaPlus, Port::Waveguide);
        assert_eq!(out.get(&minus), st.get(&minus));
        assert!(out.get(&plus).unwrap().distance(st.get(&plus).unwrap()).unwrap() > 0.1);
        assert!((out.total_probability() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn linear_labels_are_rejected_by_the_four_level_map() {
        let st = JointState::product([c(1.0), c(0.0)], &packet(1.0), Polarization::H, Port::Waveguide);
        let b = block(2.0, 0.0, 1.0, ScatterMethod::EtdRecursive);
        assert!(matches!(
            scatter_four_level(&st, &b),
            Err(Error::PolarizationBasis(_))
        ));
    }

    #[test]
    fn z_block_requires_h_input() {
        let st = JointState::product([c(1.0), c(0.0)], &packet(1.0), Polarization::V, Port::Waveguide);
        let b = block(2.0, 0.0, 1.0, ScatterMethod::EtdRecursive);
        assert!(matches!(z_block(&st, &b), Err(Error::NotHPolarized(_))));
    }

    #[test]
    fn z_block_perfect_mirror() {
        let psi = narrowband();
        let a = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let st = JointState::product(a, &psi, Polarization::H, Port::Waveguide);
        let b = block(f64::INFINITY, 0.0, 1.0, ScatterMethod::NarrowbandLimit);
        let out = z_block(&st, &b).unwrap();
        assert!((out.p_success - 1.0).abs() < 1e-14);
        assert!(out.failure_weight.abs() < 1e-14 && out.loss_weight.abs() < 1e-14);
        // -Z_a (a0, a1) ⊗ (-Ψ) = (a0, -a1) ⊗ Ψ
        let m = out.success_state.get(&label(EmitterLevel::GMinus, Polarization::V, Port::Output));
        let p = out.success_state.get(&label(EmitterLevel::GPlus, Polarization::V, Port::Output));
        assert!(m.unwrap().max_abs_diff(&psi.scaled(a[0])).unwrap() < 1e-15);
        assert!(p.unwrap().max_abs_diff(&psi.scaled(-a[1])).unwrap() < 1e-15);
    }

    #[test]
    fn z_block_feasibility_values() {
        let psi = narrowband();
        let st = JointState::product([c(1.0), c(0.0)], &psi, Polarization::H, Port::Waveguide);
        let p1 = z_block(&st, &block(20.0, 0.0, 1.0, ScatterMethod::NarrowbandLimit)).unwrap();
        assert!((p1.p_success - (20.0f64 / 21.0).powi(2)).abs() < 1e-12);
        let p2 = z_block(&st, &block(20.0, 0.0, 2.0, ScatterMethod::NarrowbandLimit)).unwrap();
        assert!((p2.p_success - (40.0f64 / 41.0).powi(2)).abs() < 1e-12);
        assert!((p1.p_success + p1.failure_weight + p1.loss_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herald_filter_at_unit_purcell() {
        // Brute force: R = |f|^2 / ... with f = 1/2, Φ_r = -Ψ/2 so ‖Φ_r‖² = 1/4,
        // h-port (Φ + Ψ)/2 = Ψ/2 carries 1/4, the rest is loss.
        let psi = narrowband();
        let st = JointState::product([c(1.0), c(0.0)], &psi, Polarization::H, Port::Waveguide);
        let out = z_block_output(&st, &block(1.0, 0.0, 1.0, ScatterMethod::NarrowbandLimit)).unwrap();
        let h = herald_filter(&out, Polarization::V);
        assert!((h.p_success - 0.25).abs() < 1e-14);
        assert!((h.failure_weight - 0.25).abs() < 1e-14);
        assert!((h.loss_weight - 0.5).abs() < 1e-14);
    }

    #[test]
    fn herald_filter_trivial_cases() {
        let psi = packet(1.0);
        let v = JointState::product([c(0.6), c(0.8)], &psi, Polarization::V, Port::Output);
        let keep = herald_filter(&v, Polarization::V);
        assert!((keep.p_success - 1.0).abs() < 1e-8 && keep.failure_weight == 0.0);
        let drop = herald_filter(&v, Polarization::H);
        assert!(drop.p_success.abs() < 1e-14);
        assert!((drop.failure_weight - 1.0).abs() < 1e-8);
    }

    #[test]
    fn herald_filter_resolves_circular_branches() {
        let psi = packet(1.0);
        let st = JointState::product([c(1.0), c(0.0)], &psi, Polarization::SigmaPlus, Port::Output);
        let h = herald_filter(&st, Polarization::V);
        assert!((h.p_success - 0.5).abs() < 1e-8);
        assert!((h.failure_weight - 0.5).abs() < 1e-8);
    }

    #[test]
    fn p_success_equals_reflectance_for_any_pulse() {
        for (shape, delta) in [
            (PulseShape::half_exponential(0.7), 0.4),
            (PulseShape::gaussian(1.5), -1.0),
            (PulseShape::flat_top(3.0, 1.0), 0.0),
        ] {
            let e = EmitterParams::from_purcell(1.0, 4.0, delta).unwrap();
            let grid = TimeGrid::for_pulse(&shape, e.gamma_total(), 50.0).unwrap();
            let psi = make_pulse(&shape, &grid, 0.0, Direction::Rightward).unwrap();
            let b = ScatterBlock::new(e, 1.0, ScatterMethod::EtdRecursive).unwrap();
            let st = JointState::product([c(1.0), c(0.0)], &psi, Polarization::H, Port::Waveguide);
            let out = z_block(&st, &b).unwrap();
            let r = crate::scattering::scatter(&psi, &e, ScatterMethod::EtdRecursive).unwrap();
            assert!((out.p_success - r.reflectance).abs() < 1e-6, "{shape:?}");
            assert!((out.failure_weight - r.transmittance).abs() < 1e-6);
            assert!((out.loss_weight - r.loss).abs() < 1e-6);
        }
    }

    #[test]
    fn z_block_envelopes_factorize() {
        let psi = packet(1.3);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let st = JointState::product([c(s), C64::new(0.0, s)], &psi, Polarization::H, Port::Waveguide);
        let b = block(0.7, -0.8, 1.0, ScatterMethod::EtdRecursive);
        let out = z_block(&st, &b).unwrap().success_state;
        let m = out.get(&label(EmitterLevel::GMinus, Polarization::V, Port::Output)).unwrap();
        let p = out.get(&label(EmitterLevel::GPlus, Polarization::V, Port::Output)).unwrap();
        // g- carries -s Φ_r, g+ carries +i s Φ_r
        let back = p.scaled(C64::new(0.0, 1.0));
        assert!(m.max_abs_diff(&back).unwrap() < 1e-10);
    }

    #[test]
    fn herald_filter_is_idempotent() {
        let psi = packet(1.0);
        let st = JointState::product([c(0.6), c(0.8)], &psi, Polarization::H, Port::Waveguide);
        let b = block(2.0, 0.3, 1.0, ScatterMethod::EtdRecursive);
        let once = z_block(&st, &b).unwrap();
        let twice = herald_filter(&once.success_state, Polarization::V);
        assert_eq!(once, twice);
    }

    #[test]
    fn emitter_unitaries() {
        let psi = packet(1.0);
        let st = JointState::product([c(1.0), c(0.0)], &psi, Polarization::H, Port::Waveguide);
        assert_eq!(emitter_unitary(&st, &identity2()).unwrap(), st);
        let h = emitter_unitary(&st, &hadamard()).unwrap();
        let m = h.get(&label(EmitterLevel::GMinus, Polarization::H, Port::Waveguide)).unwrap();
        let p = h.get(&label(EmitterLevel::GPlus, Polarization::H, Port::Waveguide)).unwrap();
        assert_eq!(m, p);
        assert!((m.norm_sqr() - 0.5).abs() < 1e-8);
        let mut round = st.clone();
        for u in [pauli_z(), hadamard(), hadamard(), pauli_z()] {
            round = emitter_unitary(&round, &u).unwrap();
        }
        for (l, p) in st.branches() {
            assert!(round.get(l).unwrap().max_abs_diff(p).unwrap() < 1e-12);
        }
        let bad = [[c(1.0), c(0.1)], [c(0.0), c(1.0)]];
        assert!(matches!(emitter_unitary(&st, &bad), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn basis_changes_round_trip() {
        let psi = packet(1.0);
        let st = JointState::product([c(0.6), C64::new(0.0, 0.8)], &psi, Polarization::V, Port::Output);
        let back = st.to_circular().unwrap().to_linear().unwrap().pruned(1e-30);
        for (l, p) in st.branches() {
            assert!(back.get(l).unwrap().max_abs_diff(p).unwrap() < 1e-15);
        }
        assert_eq!(back.branches().len(), st.branches().len());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = packet(1.0);
        let b = packet(2.0);
        let l = label(EmitterLevel::GMinus, Polarization::H, Port::Waveguide);
        let m = label(EmitterLevel::GPlus, Polarization::H, Port::Waveguide);
        assert_eq!(
            JointState::from_branches([(l, a), (m, b)]),
            Err(Error::GridMismatch)
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn z_block_conserves_probability(
                purcell in 0.2f64..50.0,
                delta in -3.0f64..3.0,
                rate in 0.2f64..5.0,
                theta in 0.0f64..std::f64::consts::PI,
                phase in 0.0f64..std::f64::consts::TAU,
                boost in prop_oneof![Just(1.0), Just(2.0)],
            ) {
                let e = EmitterParams::from_purcell(1.0, purcell, delta).unwrap();
                let shape = PulseShape::half_exponential(rate);
                let grid = TimeGrid::for_pulse(&shape, e.gamma_total(), 20.0).unwrap();
                let psi = make_pulse(&shape, &grid, 0.0, Direction::Rightward).unwrap();
                let amps = [c((theta / 2.0).cos()), C64::from_polar((theta / 2.0).sin(), phase)];
                let st = JointState::product(amps, &psi, Polarization::H, Port::Waveguide);
                let b = ScatterBlock::new(e, boost, ScatterMethod::EtdRecursive).unwrap();
                let out = z_block(&st, &b).unwrap();
                prop_assert!((out.p_success + out.failure_weight + out.loss_weight - 1.0).abs() < 1e-8);
                prop_assert!(out.loss_weight >= -1e-12);
                prop_assert!((out.success_state.total_probability() - 1.0).abs() < 1e-8);
            }
        }
    }
}
