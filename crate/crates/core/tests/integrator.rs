use efl_core::{
    backward_integrate, integrate, integrate_oracle, CurvatureSign, EventSpec, FlowConfig, IntegratorSettings,
    Termination, TerminationKind, Trajectory, Trigger,
};

const POS: CurvatureSign = CurvatureSign::Positive;
const NEG: CurvatureSign = CurvatureSign::Negative;

fn cfg(n: u32, sign: CurvatureSign, s: f64) -> FlowConfig {
    FlowConfig::with_dimension(n, sign, s).unwrap()
}

fn run(c: &FlowConfig, t_max: f64) -> Trajectory {
    integrate(c, &IntegratorSettings::with_horizon(t_max), &EventSpec::default()).unwrap()
}

fn max_state_deviation(a: &Trajectory, b: &Trajectory) -> f64 {
    assert_eq!(a.samples.len(), b.samples.len());
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(p, q)| {
            assert!((p.state.t - q.state.t).abs() < 1e-9, "{} vs {}", p.state.t, q.state.t);
            [
                p.state.x - q.state.x,
                p.state.y - q.state.y,
                p.state.xp - q.state.xp,
                p.state.yp - q.state.yp,
            ]
            .iter()
            .fold(0.0f64, |m, d| m.max(d.abs()))
        })
        .fold(0.0, f64::max)
}

#[test]
fn de_sitter_is_log_cosh() {
    for n in [2, 4, 6] {
        let traj = run(&cfg(n, POS, 1.0), 10.0);
        assert_eq!(traj.termination, Termination::ReachedHorizon);
        for s in &traj.samples {
            let exact = s.state.t.cosh().ln();
            assert!((s.state.x - exact).abs() <= 1e-8, "n={n} t={}", s.state.t);
            assert!((s.state.y - exact).abs() <= 1e-8);
            assert!((s.state.xp - s.state.t.tanh()).abs() <= 1e-8);
        }
    }
}

#[test]
fn negative_background_is_log_sinh() {
    let c0 = 1f64.asinh();
    let traj = run(&cfg(4, NEG, 1.0), 10.0);
    assert_eq!(traj.termination, Termination::ReachedHorizon);
    for s in &traj.samples {
        let t = s.state.t + c0;
        assert!((s.state.x - t.sinh().ln()).abs() <= 1e-8, "t={}", s.state.t);
        assert!((s.state.xp - 1.0 / t.tanh()).abs() <= 1e-8);
    }
}

#[test]
fn samples_are_on_the_output_grid_and_increasing() {
    let traj = run(&cfg(4, POS, 1.2), 3.0);
    assert_eq!(traj.samples.len(), 301);
    for (k, s) in traj.samples.iter().enumerate() {
        assert!((s.state.t - 0.01 * k as f64).abs() < 1e-12);
    }
    assert!(traj.samples.windows(2).all(|w| w[0].state.t < w[1].state.t));
    assert_eq!(traj.last().state.t, 3.0);
}

#[test]
fn oracle_matches_closed_form_for_n2() {
    let traj = integrate_oracle(&cfg(2, POS, 1.0), 1e-3, 5.0, 0.01, &EventSpec::default()).unwrap();
    let last = traj.last();
    assert_eq!(last.state.t, 5.0);
    assert!((last.state.x - 5f64.cosh().ln()).abs() <= 1e-8);
}

#[test]
fn adaptive_agrees_with_oracle_on_equilibrium_run() {
    let c = cfg(4, POS, 1.2);
    let adaptive = run(&c, 20.0);
    let oracle = integrate_oracle(&c, 1e-4, 20.0, 0.01, &EventSpec::default()).unwrap();
    assert!(max_state_deviation(&adaptive, &oracle) <= 1e-6);
}

#[test]
fn halving_rel_tol_does_not_increase_oracle_deviation() {
    for (sign, s) in [(POS, 1.2), (NEG, 1.3)] {
        let c = cfg(4, sign, s);
        let oracle = integrate_oracle(&c, 1e-4, 10.0, 0.01, &EventSpec::default()).unwrap();
        let mut previous = f64::INFINITY;
        for rel_tol in [1e-8, 5e-9, 2.5e-9, 1.25e-9] {
            let settings = IntegratorSettings {
                rel_tol,
                abs_tol: rel_tol * 1e-2,
                ..IntegratorSettings::with_horizon(10.0)
            };
            let dev = max_state_deviation(&integrate(&c, &settings, &EventSpec::default()).unwrap(), &oracle);
            assert!(dev <= previous, "{sign} s={s} rel_tol={rel_tol}: {dev} > {previous}");
            previous = dev;
        }
    }
}

#[test]
fn blowup_times_agree_with_oracle() {
    for s in [2.0, 3.0, 5.0] {
        let c = cfg(4, POS, s);
        let adaptive = run(&c, 50.0);
        let oracle = integrate_oracle(&c, 1e-4, 50.0, 0.01, &EventSpec::default()).unwrap();
        let (ta, to) = (
            adaptive.termination.blowup_time().unwrap(),
            oracle.termination.blowup_time().unwrap(),
        );
        assert!(ta > 0.0);
        assert!((ta - to).abs() <= 1e-5, "s={s}: {ta} vs {to}");
        assert_eq!(adaptive.last().state.t, ta);
    }
}

#[test]
fn blowup_event_fires_on_the_velocity_floor() {
    let traj = run(&cfg(4, POS, 3.0), 50.0);
    match traj.termination {
        Termination::BlowUpEvent { trigger, t_event } => {
            assert_eq!(trigger, Trigger::VelocityFloor);
            let last = traj.last().state;
            assert_eq!(last.t, t_event);
            assert!((last.xp + last.yp + 100.0).abs() < 1e-6);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn lower_family_collapses_in_x() {
    // s < (n-1)/n mirrors s/(2s-1) with the roles of x and y exchanged.
    let traj = run(&cfg(4, POS, 0.6), 50.0);
    assert_eq!(traj.termination.kind(), TerminationKind::BlowUpEvent);
    let last = traj.last().state;
    assert!(last.x < last.y);
}

#[test]
fn scale_factor_floor_fires_when_it_is_reached_first() {
    let events = EventSpec {
        y_floor: -0.5,
        velocity_floor: -100.0,
    };
    let traj = integrate(&cfg(4, POS, 3.0), &IntegratorSettings::default(), &events).unwrap();
    match traj.termination {
        Termination::BlowUpEvent { trigger, .. } => assert_eq!(trigger, Trigger::ScaleFactorFloor),
        other => panic!("{other:?}"),
    }
    assert!((traj.last().state.y + 0.5).abs() < 1e-8);
}

#[test]
fn first_integral_holds_on_equilibrium_runs() {
    for (sign, s) in [(POS, 0.8), (POS, 1.0), (POS, 1.3), (POS, 1.5), (NEG, 0.6), (NEG, 3.0)] {
        let traj = run(&cfg(4, sign, s), 50.0);
        assert_eq!(traj.termination, Termination::ReachedHorizon);
        assert!(traj.max_abs_step_first_integral() <= 1e-7, "{sign} s={s}");
    }
}

#[test]
fn swap_symmetry_at_s_one() {
    for sign in [POS, NEG] {
        let traj = run(&cfg(6, sign, 1.0), 20.0);
        for s in &traj.samples {
            assert!((s.state.x - s.state.y).abs() <= 1e-10);
        }
    }
}

#[test]
fn upper_boundary_keeps_y_at_zero() {
    for (n, s) in [(4, 1.5), (6, 1.25)] {
        let traj = run(&cfg(n, POS, s), 30.0);
        assert_eq!(traj.termination, Termination::ReachedHorizon);
        assert!(traj.samples.iter().all(|p| p.state.y.abs() <= 1e-8));
    }
}

#[test]
fn monotone_scale_factors_above_upper_threshold() {
    for s in [1.6, 2.0, 3.0] {
        let traj = run(&cfg(4, POS, s), 50.0);
        for p in traj.samples.iter().skip(1) {
            assert!(p.state.xp > 0.0 && p.state.yp < 0.0, "s={s} t={}", p.state.t);
        }
    }
}

#[test]
fn runs_are_bit_identical() {
    for (sign, s) in [(POS, 1.2), (POS, 3.0), (NEG, 0.7)] {
        let c = cfg(4, sign, s);
        assert_eq!(run(&c, 30.0), run(&c, 30.0));
    }
}

#[test]
fn backward_run_mirrors_forward_run() {
    for (n, s) in [(4, 2.0), (4, 1.0), (6, 1.1)] {
        let c = cfg(n, POS, s);
        let settings = IntegratorSettings::with_horizon(10.0);
        let fwd = integrate(&c, &settings, &EventSpec::default()).unwrap();
        let bwd = backward_integrate(&c, &settings, &EventSpec::default()).unwrap();
        assert!(bwd.samples.windows(2).all(|w| w[0].state.t > w[1].state.t));
        for (f, b) in fwd.samples.iter().zip(&bwd.samples) {
            assert!((f.state.t + b.state.t).abs() < 1e-12);
            assert!((f.state.x - b.state.x).abs() <= 1e-8);
            assert!((f.state.y - b.state.y).abs() <= 1e-8);
            assert!((f.state.xp + b.state.xp).abs() <= 1e-8);
        }
        match (fwd.termination.blowup_time(), bwd.termination.blowup_time()) {
            (Some(tf), Some(tb)) => assert!((tf + tb).abs() <= 1e-8, "{tf} vs {tb}"),
            (None, None) => {}
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn backward_de_sitter_at_minus_three() {
    let traj = backward_integrate(&cfg(4, POS, 1.0), &IntegratorSettings::with_horizon(3.0), &EventSpec::default())
        .unwrap();
    let last = traj.last().state;
    assert_eq!(last.t, -3.0);
    assert!((last.x - 3f64.cosh().ln()).abs() <= 1e-8);
}

#[test]
fn collapse_below_min_step_is_reported() {
    let settings = IntegratorSettings {
        min_step: 0.4,
        max_step: 0.5,
        ..IntegratorSettings::default()
    };
    let traj = integrate(&cfg(4, POS, 3.0), &settings, &EventSpec::default()).unwrap();
    match traj.termination {
        Termination::StepSizeCollapse { t_last } => assert_eq!(traj.last().state.t, t_last),
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_settings_are_rejected() {
    let c = cfg(4, POS, 1.0);
    let bad = IntegratorSettings {
        abs_tol: -1.0,
        ..IntegratorSettings::default()
    };
    assert!(integrate(&c, &bad, &EventSpec::default()).is_err());
    assert!(integrate_oracle(&c, 0.0, 1.0, 0.1, &EventSpec::default()).is_err());
}
