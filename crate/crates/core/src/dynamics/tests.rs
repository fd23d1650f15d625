use std::sync::OnceLock;

use super::diagnostics::*;
use super::*;
use crate::stats::loglog_slope;

fn ctx() -> &'static Context {
    static C: OnceLock<Context> = OnceLock::new();
    C.get_or_init(|| Context::with_defaults().unwrap())
}

fn noise() -> &'static NoiseModel {
    static N: OnceLock<NoiseModel> = OnceLock::new();
    N.get_or_init(|| NoiseModel::default_for(ctx().grid(), ctx().profile.peak()).unwrap())
}

fn cfg(sigma: f64, t_end: f64, dt: f64) -> SimConfig {
    SimConfig {
        sigma,
        m: 10.0,
        q: 0.0,
        t_end,
        dt,
        seed: 11,
        save_every: 1,
    }
}

fn zero_increment(ctx: &Context) -> Increment {
    Increment {
        field: vec![0.0; ctx.grid().len()],
        beta: 0.0,
    }
}

#[test]
fn config_validation() {
    assert!(SimConfig::default().validate().is_ok());
    assert!(SimConfig { sigma: 0.0, ..SimConfig::default() }.validate().is_ok());
    assert!(SimConfig { sigma: -1e-3, ..SimConfig::default() }.validate().is_err());
    assert!(SimConfig { q: 0.6, ..SimConfig::default() }.validate().is_err());
    assert!(SimConfig { q: 0.5, ..SimConfig::default() }.validate().is_err());
    assert!(SimConfig { m: 1e3, dt: 1e-3, ..SimConfig::default() }.validate().is_err());
    assert!(SimConfig { t_end: 1.0005, dt: 1e-3, ..SimConfig::default() }.validate().is_err());
    let text = toml::to_string(&SimConfig::default()).unwrap();
    let back: SimConfig = toml::from_str(&text).unwrap();
    assert_eq!(back, SimConfig::default());
    assert!(toml::from_str::<SimConfig>(&format!("{text}\nbogus = 1\n")).is_err());
}

#[test]
fn context_normalization() {
    let c = ctx();
    let g = c.grid();
    let w = c.weights();
    assert!((g.norm_h(c.d1(), w) - 1.0).abs() < 1e-12);
    assert!((g.inner_h(&c.pair.psi, c.d1(), w).unwrap() - 1.0).abs() < 1e-12);
    // the kernel vector is the profile derivative up to discretization
    assert!(g.norm_h(&c.d1().sub(&c.profile.d1), w) < 1e-3);
    let target = c.phase_diffusion_target();
    assert!(target > 0.0);
    // psi_u density pairs fields with psi exactly
    let f: Vec<f64> = g.nodes().iter().map(|x| (-(x + 140.0f64).powi(2) / 30.0).exp()).collect();
    let direct = g.inner_h(&c.pair.psi, &StateUV { u: f.clone(), v: vec![0.0; g.len()] }, w).unwrap();
    let dens: f64 = c.psi_u_density().iter().zip(&f).map(|(a, b)| a * b).sum();
    assert!((direct - dens).abs() < 1e-12 * direct.abs().max(1.0));
}

#[test]
fn deterministic_pulse_is_exact() {
    let c = cfg(0.0, 0.5, 1e-3);
    let opts = PathOptions {
        full: true,
        track_phase: true,
        refine: 1,
        ..PathOptions::default()
    };
    let rec = simulate_path(ctx(), noise(), &c, 0, &opts).unwrap();
    for r in &rec.rows {
        assert_eq!(r.x_h, 0.0);
        assert_eq!(r.phi_m, 0.0);
    }
    assert_eq!(rec.stopping, StoppingTimes::none(0.5));
    let scaled = PathOptions { reduced: true, ..opts };
    assert!(simulate_path(ctx(), noise(), &c, 0, &scaled).is_err());
}

#[test]
fn pure_shift_relaxes_the_phase() {
    let c = ctx();
    let shift = 0.05;
    let m = 10.0;
    let conf = SimConfig { m, ..cfg(0.0, 0.5, 1e-3) };
    let opts = PathOptions {
        full: true,
        track_phase: true,
        initial: Some(c.shift_difference(shift).unwrap()),
        refine: 1,
        ..PathOptions::default()
    };
    let rec = simulate_path(c, noise(), &conf, 0, &opts).unwrap();
    for r in &rec.rows {
        let want = shift * (1.0 - (-m * r.t).exp());
        assert!((r.phi_m - want).abs() < 0.02 * shift, "t={} phi={} want={want}", r.t, r.phi_m);
    }
    let last = rec.rows.last().unwrap();
    let first = rec.rows[0];
    assert!(last.xm_h < 0.05 * first.xm_h, "{} vs {}", last.xm_h, first.xm_h);
}

#[test]
fn runs_are_bit_reproducible() {
    let c = cfg(1e-3, 0.1, 1e-3);
    let a = simulate_path(ctx(), noise(), &c, 3, &PathOptions::all()).unwrap();
    let b = simulate_path(ctx(), noise(), &c, 3, &PathOptions::all()).unwrap();
    assert_eq!(a.rows, b.rows);
    let other = simulate_path(ctx(), noise(), &c, 4, &PathOptions::all()).unwrap();
    assert_ne!(a.rows, other.rows);
}

#[test]
fn reduced_phase_without_noise() {
    let c = ctx();
    let st = Stepper::new(c, noise(), 1e-3).unwrap();
    let m = 50.0;
    let c0 = 0.7;
    let x0 = c.d1().scaled(c0).interleave();
    assert!((st.coefficient(&x0) - c0).abs() < 1e-12);
    let mut s = ReducedState {
        y: x0,
        phi: 0.0,
        phi_dot: m * c0,
    };
    let zero = zero_increment(c);
    for n in 1..=200 {
        st.step_reduced(&mut s, 0.0, m, &zero).unwrap();
        let t = n as f64 * 1e-3;
        let e = (-m * t).exp();
        assert!((s.phi_dot - m * c0 * e).abs() < 1e-12 * m);
        assert!((s.phi - c0 * (1.0 - e)).abs() < 1e-12);
        // the projected part of Y0 + phi0 d1 is conserved
        assert!((st.coefficient(&s.y) + s.phi - c0).abs() < 1e-10);
    }
}

#[test]
fn reduced_phase_matches_the_mild_formula() {
    let c = ctx();
    let m = 20.0;
    let errors: Vec<f64> = [4u64, 2, 1]
        .iter()
        .map(|&r| {
            let dt = 1e-3 * r as f64;
            let st = Stepper::new(c, noise(), dt).unwrap();
            let stream = NoiseStream::new(5, 0);
            let n = (1.0 / dt).round() as u64;
            let mut s = ReducedState {
                y: vec![0.0; 2 * c.grid().len()],
                phi: 0.0,
                phi_dot: 0.0,
            };
            let mut betas = Vec::new();
            let mut stepped = vec![0.0];
            for k in 0..n {
                let inc = st.increment(&stream, k, r);
                betas.push(inc.beta);
                st.step_reduced(&mut s, k as f64 * dt, m, &inc).unwrap();
                stepped.push(s.phi);
            }
            let mild = mild_reduced_phase(0.0, m, dt, &betas);
            stepped.iter().zip(&mild).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    let slope = loglog_slope(&[4.0, 2.0, 1.0], &errors);
    assert!(slope > 0.8, "mild-formula error order {slope}, {errors:?}");
}

#[test]
fn immediate_relaxation_start_and_kernel() {
    let c = ctx();
    let g = c.grid();
    let sigma = 1e-3;
    let conf = cfg(sigma, 0.05, 1e-3);
    // X(0) in the range of Pi0 with no noise: X0^inf stays 0
    let st = Stepper::new(c, noise(), conf.dt).unwrap();
    let c0 = 0.3;
    let scaled = c.d1().scaled(c0).interleave();
    let mut s = ImmediateState {
        y: scaled.iter().zip(&st.d1).map(|(a, b)| a - c0 * b).collect(),
        phi: c0,
    };
    let zero = zero_increment(c);
    for _ in 0..20 {
        st.step_immediate(&mut s, 0.0, &zero).unwrap();
        assert!(s.y.iter().all(|v| *v == 0.0));
        assert_eq!(s.phi, c0);
    }
    // t = 0 values for a general initial field
    let x0 = StateUV {
        u: g.nodes().iter().map(|x| 1e-3 * (-(x + 118.0f64).powi(2)).exp()).collect(),
        v: vec![0.0; g.len()],
    };
    let opts = PathOptions {
        immediate: true,
        initial: Some(x0.clone()),
        refine: 1,
        ..PathOptions::default()
    };
    let rec = simulate_path(c, noise(), &conf, 0, &opts).unwrap();
    let w = c.weights();
    let want_phi = g.inner_h(&c.pair.psi, &x0.scaled(1.0 / sigma), w).unwrap();
    assert!((rec.rows[0].phi0_inf - want_phi).abs() < 1e-12 * want_phi.abs());
    let pisharp = x0.scaled(1.0 / sigma).sub(&c.d1().scaled(want_phi));
    assert!((rec.rows[0].x0inf_h - g.norm_h(&pisharp, w)).abs() < 1e-10 * rec.rows[0].x0inf_h);
    let worst = rec.rows.iter().map(|r| r.proj_x0inf.abs()).fold(0.0, f64::max);
    let size = rec.rows.iter().map(|r| r.x0inf_h).fold(0.0, f64::max);
    assert!(worst <= 1e-10 * size, "{worst} vs {size}");
}

#[test]
fn full_scheme_converges_strongly() {
    let c = ctx();
    let sigma = 1e-2;
    let t_end = 0.4;
    let dt_ref = 1.25e-3;
    let run = |r: u64| -> Vec<f64> {
        let dt = dt_ref * r as f64;
        let st = Stepper::new(c, noise(), dt).unwrap();
        let stream = NoiseStream::new(2, 0);
        let mut y = vec![0.0; 2 * c.grid().len()];
        for k in 0..(t_end / dt).round() as u64 {
            let inc = st.increment(&stream, k, r);
            st.step_full(&mut y, k as f64 * dt, sigma, &inc).unwrap();
        }
        y
    };
    let reference = StateUV::from_interleaved(&run(1));
    let g = c.grid();
    let errs: Vec<f64> = [32u64, 16, 8]
        .iter()
        .map(|&r| g.norm_h(&StateUV::from_interleaved(&run(r)).sub(&reference), c.weights()))
        .collect();
    let slope = loglog_slope(&[32.0, 16.0, 8.0], &errs);
    assert!(slope >= 0.8, "strong order {slope}, errors {errs:?}");
}

#[test]
fn stopping_times_interpolate_and_are_monotone_in_sigma() {
    let conf = SimConfig { q: 0.25, ..cfg(1e-4, 1.0, 0.1) };
    let mut tr = CrossingTracker::new(&conf);
    tr.observe(0.0, Some(0.0), Some(0.0), Some(0.0));
    tr.observe(0.1, Some(0.0), Some(5.0), Some(-20.0));
    tr.observe(0.2, Some(1.0), Some(15.0), Some(-30.0));
    let s = tr.finish();
    assert!((s.tau_m - 0.15).abs() < 1e-12);
    assert!((s.tau_inf - 0.05).abs() < 1e-12);
    assert!((s.tau - (0.1 + 0.1 * conf.x_threshold())).abs() < 1e-12);

    let opts = PathOptions {
        reduced: true,
        immediate: true,
        refine: 1,
        ..PathOptions::default()
    };
    let mut last: Option<StoppingTimes> = None;
    for sigma in [1e-2, 1e-3, 1e-4] {
        let conf = SimConfig { q: 0.25, m: 50.0, save_every: 5, ..cfg(sigma, 2.0, 1e-2) };
        let rec = simulate_path(ctx(), noise(), &conf, 1, &opts).unwrap();
        let s = rec.stopping;
        assert!(s.tau_m <= 2.0 && s.tau_inf <= 2.0);
        if let Some(p) = last {
            assert!(s.tau_m >= p.tau_m && s.tau_inf >= p.tau_inf);
        }
        last = Some(s);
    }
}

#[test]
fn sode_terms() {
    let c = ctx();
    // nothing moves without noise and without a perturbation
    let quiet = velocity_sode_diagnostic(c, noise(), &cfg(0.0, 0.01, 1e-3), 0, None).unwrap();
    assert!(quiet.iter().all(|s| s.damping == 0.0 && s.noise == 0.0 && s.remainder == 0.0));
    // a small shift: the damping term carries the change
    let start = c.shift_difference(0.02).unwrap();
    let terms = velocity_sode_diagnostic(c, noise(), &cfg(0.0, 0.05, 1e-3), 0, Some(&start)).unwrap();
    for s in &terms {
        assert!((s.damping - s.actual).abs() < 0.01 * s.actual.abs(), "{s:?}");
    }
    // with noise the three terms reproduce the observed increments
    let noisy = velocity_sode_diagnostic(c, noise(), &cfg(1e-3, 0.3, 1e-3), 0, None).unwrap();
    assert!(sode_r2(&noisy) >= 0.99, "R2 = {}", sode_r2(&noisy));
}

#[test]
fn sode_noise_term_variance() {
    let c = ctx();
    let conf = SimConfig { m: 20.0, ..cfg(1e-4, 2.0, 1e-3) };
    let terms = velocity_sode_diagnostic(c, noise(), &conf, 4, None).unwrap();
    let k = conf.m * conf.m * conf.sigma * conf.sigma * conf.dt;
    let observed: f64 = terms.iter().map(|s| s.noise * s.noise).sum();
    let expected: f64 = terms.iter().map(|s| k * c.drive_variance(noise(), s.t)).sum();
    assert!((observed / expected - 1.0).abs() < 0.1, "{}", observed / expected);
}

#[test]
fn minimality_at_an_exact_shift() {
    let c = ctx();
    let sigma = 1e-3;
    let phi = 3.0;
    let x = c.shift_difference(sigma * phi).unwrap();
    let m = minimality_diagnostic(c, &x, phi, sigma).unwrap();
    assert!(m.g1.abs() < 1e-12 * sigma * sigma);
    // <psi, D1 X_hat>_H differs from 1 by the O(h^4) gap between D1 X_hat
    // and the discrete kernel vector
    let d1 = c.profile.d1_at(sigma * phi).unwrap();
    let gap = c.grid().inner_h(&c.pair.psi, &d1, c.weights()).unwrap();
    assert!((gap - 1.0).abs() < 2e-3);
    assert!((m.g2 / (2.0 * sigma * sigma * gap * gap) - 1.0).abs() < 1e-4, "{m:?}");
    assert!((m.g2_fd / m.g2 - 1.0).abs() < 1e-3, "{m:?}");
    assert!(minimality_diagnostic(c, &x, phi, 0.0).is_err());
}

#[test]
fn coupling_table_interpolates() {
    let c = ctx();
    let table = CouplingTable::new(c, noise(), 1.0, 0.01).unwrap();
    for t in [0.0, 0.013, 0.5, 0.997] {
        let want: f64 = c.drive_variance(noise(), t);
        assert!((table.variance_rate(t) / want - 1.0).abs() < 1e-4, "t={t}");
    }
}

#[test]
fn mild_phase_oracle_matches_direct_sums() {
    let betas = [0.3, -0.1, 0.25, 0.0, -0.4];
    let (m, dt, c0) = (3.0, 0.1, 0.2);
    let out = mild_reduced_phase(c0, m, dt, &betas);
    for n in 0..=betas.len() {
        let t = n as f64 * dt;
        let direct: f64 = (1.0 - (-m * t).exp()) * c0
            + (0..n).map(|k| (1.0 - (-m * (t - k as f64 * dt)).exp()) * betas[k]).sum::<f64>();
        assert!((out[n] - direct).abs() < 1e-14);
    }
}

#[test]
fn record_csv_round_trip() {
    let conf = cfg(1e-3, 0.02, 1e-3);
    let rec = simulate_path(ctx(), noise(), &conf, 0, &PathOptions::all()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("path.csv");
    rec.write_csv(&p).unwrap();
    let back: Vec<RecordRow> = record::read_rows(&p).unwrap();
    assert_eq!(back.len(), rec.rows.len());
    for (a, b) in back.iter().zip(&rec.rows) {
        assert_eq!(a.t, b.t);
        assert_eq!(a.s_m_v, b.s_m_v);
    }
}
