use proptest::prelude::*;

use wqed::gates::{Gate, Wfc};
use wqed::joint::{z_block, JointState, Polarization, Port, ScatterBlock};
use wqed::pulse::{make_pulse, scale_shift, Direction, PulseShape, TimeGrid, WavePacket, C64};
use wqed::scattering::{
    closed_form_f_half_exponential, narrowband_f, scatter, tr_identities, EmitterParams,
    ScatterMethod,
};

fn purcell() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(5.0), Just(20.0), Just(f64::INFINITY)]
}

fn shape() -> impl Strategy<Value = PulseShape> {
    prop_oneof![
        (0.2f64..4.0).prop_map(PulseShape::half_exponential),
        (0.3f64..3.0).prop_map(PulseShape::gaussian),
        (1.0f64..15.0, 0.5f64..4.0).prop_map(|(d, e)| PulseShape::flat_top(d, e)),
    ]
}

fn packet(shape: &PulseShape, e: &EmitterParams) -> WavePacket {
    let grid = TimeGrid::for_pulse(shape, e.gamma_total(), 50.0).unwrap();
    make_pulse(shape, &grid, 0.0, Direction::Rightward).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scattering_conserves_probability(p in purcell(), delta in -3.0f64..3.0, s in shape()) {
        let e = EmitterParams::from_purcell(1.0, p, delta).unwrap();
        let psi = packet(&s, &e);
        let r = scatter(&psi, &e, ScatterMethod::EtdRecursive).unwrap();
        prop_assert!((r.transmittance + r.reflectance + r.loss - 1.0).abs() < 1e-8);
        prop_assert!(r.loss >= 0.0 && r.reflectance <= 1.0 && r.transmittance <= 1.0);
        prop_assert!(r.transmitted.max_abs_diff(&psi.add(&r.reflected).unwrap()).unwrap() < 1e-10);
        if p.is_infinite() {
            prop_assert!(r.loss.abs() < 1e-8);
        }
    }

    #[test]
    fn transmission_and_reflection_follow_from_f(p in purcell(), delta in -3.0f64..3.0, s in shape()) {
        let e = EmitterParams::from_purcell(1.0, p, delta).unwrap();
        let psi = packet(&s, &e);
        let r = scatter(&psi, &e, ScatterMethod::EtdRecursive).unwrap();
        let (t, refl) = tr_identities(r.f, &e);
        prop_assert!((t - r.transmittance).abs() < 1e-6);
        prop_assert!((refl - r.reflectance).abs() < 1e-6);
    }

    #[test]
    fn half_exponential_matches_closed_form(
        gamma in 0.05f64..8.0,
        delta in -4.0f64..4.0,
        p in purcell(),
    ) {
        let e = EmitterParams::from_purcell(1.0, p, delta).unwrap();
        let shape = PulseShape::half_exponential(gamma);
        let grid = TimeGrid::for_pulse(&shape, e.gamma_total(), 200.0).unwrap();
        let psi = make_pulse(&shape, &grid, 0.0, Direction::Rightward).unwrap();
        let f = scatter(&psi, &e, ScatterMethod::EtdRecursive).unwrap().f;
        let exact = closed_form_f_half_exponential(gamma, &e);
        prop_assert!((f - exact).norm() / exact.norm() < 1e-6);
    }

    #[test]
    fn reflection_is_linear(
        a in (-1.0f64..1.0, -1.0f64..1.0),
        b in (-1.0f64..1.0, -1.0f64..1.0),
        delta in -2.0f64..2.0,
    ) {
        let e = EmitterParams::from_purcell(1.0, 3.0, delta).unwrap();
        let s1 = PulseShape::half_exponential(0.7);
        let grid = TimeGrid::for_pulse(&s1, e.gamma_total(), 50.0).unwrap();
        let p1 = make_pulse(&s1, &grid, 0.0, Direction::Rightward).unwrap();
        let p2 = make_pulse(&PulseShape::Gaussian { sigma: 1.0, center: 6.0 }, &grid, 0.0, Direction::Rightward).unwrap();
        let (ca, cb) = (C64::new(a.0, a.1), C64::new(b.0, b.1));
        let mixed = p1.scaled(ca).add_scaled(cb, &p2).unwrap();
        for m in [ScatterMethod::EtdRecursive, ScatterMethod::Trapezoid] {
            let r1 = scatter(&p1, &e, m).unwrap().reflected;
            let r2 = scatter(&p2, &e, m).unwrap().reflected;
            let rm = scatter(&mixed, &e, m).unwrap().reflected;
            let predicted = r1.scaled(ca).add_scaled(cb, &r2).unwrap();
            prop_assert!(rm.max_abs_diff(&predicted).unwrap() < 1e-12);
        }
    }

    #[test]
    fn delay_commutes_with_scattering(k in 1usize..400, p in purcell()) {
        let e = EmitterParams::from_purcell(1.0, p, 0.3).unwrap();
        let base = TimeGrid::for_pulse(&PulseShape::half_exponential(1.0), e.gamma_total(), 50.0).unwrap();
        let shape = PulseShape::HalfExponential { rate: 1.0, start: 20.0 * base.dt() };
        let grid = TimeGrid::new(0.0, base.dt(), base.n_samples() + 420).unwrap();
        let psi = make_pulse(&shape, &grid, 0.0, Direction::Rightward).unwrap();
        let delay = k as f64 * grid.dt();
        let shifted = scale_shift(&psi, C64::new(1.0, 0.0), delay).unwrap();
        let a = scatter(&shifted, &e, ScatterMethod::EtdRecursive).unwrap();
        let b = scatter(&psi, &e, ScatterMethod::EtdRecursive).unwrap();
        let b_shifted = scale_shift(&b.reflected, C64::new(1.0, 0.0), delay).unwrap();
        prop_assert!(a.reflected.max_abs_diff(&b_shifted).unwrap() < 1e-6);
        prop_assert!((a.f - b.f).norm() < 1e-6);
    }

    #[test]
    fn z_block_balances_probability(
        p in purcell(),
        delta in -2.0f64..2.0,
        boost in prop_oneof![Just(1.0), Just(2.0)],
        theta in 0.0f64..std::f64::consts::PI,
    ) {
        let e = EmitterParams::from_purcell(1.0, p, delta).unwrap();
        let block = ScatterBlock::new(e, boost, ScatterMethod::EtdRecursive).unwrap();
        let shape = PulseShape::half_exponential(1.0);
        let grid = TimeGrid::for_pulse(&shape, block.effective_emitter().gamma_total(), 50.0).unwrap();
        let psi = make_pulse(&shape, &grid, 0.0, Direction::Rightward).unwrap();
        let amps = [C64::new(theta.cos(), 0.0), C64::new(0.0, theta.sin())];
        let st = JointState::product(amps, &psi, Polarization::H, Port::Waveguide);
        let h = z_block(&st, &block).unwrap();
        let total = h.p_success + h.failure_weight + h.loss_weight;
        prop_assert!((total - 1.0).abs() < 1e-8);
        prop_assert!(h.p_success <= 1.0 + 1e-12);
    }

    #[test]
    fn narrowband_time_bin_gate_is_exact(p in purcell(), delta in -2.0f64..2.0, boost in 1.0f64..2.0) {
        let e = EmitterParams::from_purcell(1.0, p, delta).unwrap();
        let block = ScatterBlock::new(e, boost, ScatterMethod::NarrowbandLimit).unwrap();
        let reference = WavePacket::plane_wave_reference(0.0, Direction::Rightward);
        let (map, r) = Gate::time_bin(block, None).evaluate(&reference).unwrap();
        prop_assert!((r.process_fidelity - 1.0).abs() < 1e-10);
        prop_assert_eq!(map.kraus_ops.len(), 1);
        let f = narrowband_f(&block.effective_emitter());
        prop_assert!((r.p_success_avg - f.norm_sqr()).abs() < 1e-12);
        prop_assert!((r.p_success_min - f.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn second_scatterer_keeps_unit_fidelity(
        p in prop_oneof![Just(0.5), Just(2.0), Just(20.0)],
        delta in -1.5f64..1.5,
        gamma in 0.3f64..3.0,
    ) {
        let e = EmitterParams::from_purcell(1.0, p, delta).unwrap();
        let block = ScatterBlock::new(e, 1.0, ScatterMethod::EtdRecursive).unwrap();
        let psi = packet(&PulseShape::half_exponential(gamma), &e);
        let (_, r) = Gate::polarization(block, Wfc::SecondScatterer(e)).evaluate(&psi).unwrap();
        prop_assert!((r.process_fidelity - 1.0).abs() < 1e-6);
        prop_assert!(r.p_success_min <= r.p_success_avg + 1e-12);
    }
}
