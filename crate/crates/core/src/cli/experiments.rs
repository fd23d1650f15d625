//! The experiments behind the command line. Each writes its tables into a
//! [`RunOutput`]; replicas run in parallel with per-replica noise streams,
//! so results do not depend on the thread count.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Experiment, ExperimentConfig};
use super::output::RunOutput;
use crate::dynamics::diagnostics::{
    max_residual, minimality_diagnostic, moment_bound_experiment, ou_stationarity, phase_ladder,
    phase_variance_experiment, sode_r2, stopping_times, velocity_sode_diagnostic, CouplingTable, Residual,
    SodeTerms, StoppingTimes,
};
use crate::dynamics::{simulate_path, Context, PathOptions, SimConfig, TrajectoryRecord};
use crate::error::Result;
use crate::frozen::{dispersion, dispersion_max_re, spectrum, wavenumbers, FrozenOperator};
use crate::noise::NoiseModel;
use crate::profile::{cached_profile, WaveProfile};
use crate::projection::{decay_probes, fit_decay, kernel_direction, ProjectionPair};
use crate::stats::{ci95, linear_fit, loglog_slope, mean_var};

/// Objects built from the configuration before an experiment runs.
struct Setup {
    profile: WaveProfile,
    noise: NoiseModel,
}

impl Setup {
    fn new(cfg: &ExperimentConfig, cache: Option<&Path>) -> Result<Self> {
        let grid = cfg.grid.grid()?;
        let peak = cfg.grid.peak(&grid);
        let profile = cached_profile(&grid, &cfg.model.params()?, peak, cache)?;
        let noise = cfg.noise.model(&grid, peak)?;
        Ok(Self { profile, noise })
    }

    fn context(&self) -> Result<Context> {
        Context::new(self.profile.clone())
    }
}

pub fn run(cfg: &ExperimentConfig, exp: Experiment, out: &mut RunOutput, cache: Option<&Path>) -> Result<()> {
    cfg.validate()?;
    let setup = Setup::new(cfg, cache)?;
    match exp {
        Experiment::Profile => profile(&setup, out),
        Experiment::Spectrum => spectrum_run(cfg, &setup, out),
        Experiment::Track => track(cfg, &setup, out),
        Experiment::Reduce => reduce(cfg, &setup, out),
        Experiment::Scaling => scaling(cfg, &setup, out),
        Experiment::Immediate => immediate(cfg, &setup, out),
        Experiment::Moments => moments(cfg, &setup, out),
        Experiment::Minimality => minimality(cfg, &setup, out),
    }
}

#[derive(Serialize)]
struct ProfileRow {
    x: f64,
    u: f64,
    v: f64,
    d1_u: f64,
    d1_v: f64,
}

#[derive(Serialize)]
struct ProfileSummary {
    speed: f64,
    residual_u: f64,
    residual_v: f64,
    tail: f64,
    peak: f64,
    half_width: f64,
    points: usize,
    z: f64,
}

fn profile(setup: &Setup, out: &mut RunOutput) -> Result<()> {
    let p = &setup.profile;
    let rows: Vec<ProfileRow> = (0..p.grid.len())
        .map(|i| ProfileRow {
            x: p.grid.nodes()[i],
            u: p.xhat.u[i],
            v: p.xhat.v[i],
            d1_u: p.d1.u[i],
            d1_v: p.d1.v[i],
        })
        .collect();
    out.table("profile.csv", &rows)?;
    let (ru, rv) = p.bvp_residual();
    out.table(
        "profile_summary.csv",
        &[ProfileSummary {
            speed: p.s,
            residual_u: ru,
            residual_v: rv,
            tail: p.tail(),
            peak: p.peak(),
            half_width: p.grid.half_width(),
            points: p.grid.len(),
            z: p.weights.z,
        }],
    )
}

#[derive(Serialize)]
struct EigenRow {
    re: f64,
    im: f64,
    kind: &'static str,
    residual: f64,
}

#[derive(Serialize)]
struct DispersionRow {
    k: f64,
    re1: f64,
    im1: f64,
    re2: f64,
    im2: f64,
}

#[derive(Serialize)]
struct SpectrumSummary {
    lambda0_re: f64,
    lambda0_im: f64,
    lambda_star_re: f64,
    lambda_star_im: f64,
    kappa: f64,
    zero_mode_cosine: f64,
    /// `|L# d1|_H` with the kernel direction in place of `d1`.
    kernel_residual: f64,
    dispersion_max_re: f64,
    projection_norm: f64,
}

fn spectrum_run(cfg: &ExperimentConfig, setup: &Setup, out: &mut RunOutput) -> Result<()> {
    let p = &setup.profile;
    let op = FrozenOperator::assemble(p);
    let rep = spectrum(&op, p, cfg.spectrum.eigenvalues)?;
    let rows: Vec<EigenRow> = rep
        .eigenvalues
        .iter()
        .map(|e| EigenRow {
            re: e.value.re,
            im: e.value.im,
            kind: e.kind.label(),
            residual: e.residual,
        })
        .collect();
    out.table("eigenvalues.csv", &rows)?;
    let disp = dispersion(&p.params, p.s, &wavenumbers(cfg.spectrum.k_max, cfg.spectrum.k_samples));
    let rows: Vec<DispersionRow> = disp
        .iter()
        .map(|d| DispersionRow {
            k: d.k,
            re1: d.lambda1.re,
            im1: d.lambda1.im,
            re2: d.lambda2.re,
            im2: d.lambda2.im,
        })
        .collect();
    out.table("dispersion.csv", &rows)?;
    let kernel = kernel_direction(p, &rep)?;
    let kernel_residual = p.grid.norm_h(&op.apply(&kernel)?, &p.weights) / p.grid.norm_h(&kernel, &p.weights);
    let pair = ProjectionPair::spectral(p, &rep)?;
    out.table(
        "spectrum_summary.csv",
        &[SpectrumSummary {
            lambda0_re: rep.lambda0.re,
            lambda0_im: rep.lambda0.im,
            lambda_star_re: rep.lambda_star.re,
            lambda_star_im: rep.lambda_star.im,
            kappa: rep.kappa,
            zero_mode_cosine: rep.zero_mode_cosine,
            kernel_residual,
            dispersion_max_re: dispersion_max_re(&disp),
            projection_norm: pair.operator_norm(),
        }],
    )
}

#[derive(Serialize)]
struct StoppingRow {
    replica: u64,
    tau: f64,
    tau_m: f64,
    tau_inf: f64,
    t_end: f64,
}

impl StoppingRow {
    fn new(replica: u64, s: &StoppingTimes) -> Self {
        Self {
            replica,
            tau: s.tau,
            tau_m: s.tau_m,
            tau_inf: s.tau_inf,
            t_end: s.t_end,
        }
    }
}

#[derive(Serialize)]
struct SodeRow {
    t: f64,
    damping: f64,
    noise: f64,
    remainder: f64,
    predicted: f64,
    actual: f64,
}

#[derive(Serialize)]
struct SodeSummary {
    samples: usize,
    r2: f64,
}

fn path_name(replica: u64) -> String {
    format!("path_r{replica:04}.csv")
}

fn replica_ids(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.replicas as u64).collect()
}

fn run_replicas(
    ctx: &Context,
    noise: &NoiseModel,
    sim: &SimConfig,
    ids: &[u64],
    opts: &PathOptions,
) -> Result<Vec<TrajectoryRecord>> {
    ids.par_iter().map(|&r| simulate_path(ctx, noise, sim, r, opts)).collect()
}

fn track(cfg: &ExperimentConfig, setup: &Setup, out: &mut RunOutput) -> Result<()> {
    let ctx = setup.context()?;
    let sim = cfg.sim;
    // the reduced runs are scaled by 1 / sigma; without noise only the
    // deterministic full run and its phase are meaningful
    let opts = if sim.sigma > 0.0 {
        PathOptions::all()
    } else {
        PathOptions {
            full: true,
            track_phase: true,
            refine: 1,
            ..PathOptions::default()
        }
    };
    let ids = replica_ids(cfg);
    let recs = run_replicas(&ctx, &setup.noise, &sim, &ids, &opts)?;
    let mut stops = Vec::new();
    for (r, rec) in ids.iter().zip(&recs) {
        rec.write_csv(&out.path(&path_name(*r)))?;
        out.external_table(&path_name(*r))?;
        stops.push(StoppingRow::new(*r, &rec.stopping));
    }
    out.table("stopping.csv", &stops)?;
    if sim.sigma > 0.0 {
        let terms = velocity_sode_diagnostic(&ctx, &setup.noise, &sim, 0, None)?;
        let rows: Vec<SodeRow> = terms.iter().map(sode_row).collect();
        out.table("sode.csv", &rows)?;
        out.table(
            "sode_summary.csv",
            &[SodeSummary {
                samples: terms.len(),
                r2: sode_r2(&terms),
            }],
        )?;
    }
    Ok(())
}

fn sode_row(s: &SodeTerms) -> SodeRow {
    SodeRow {
        t: s.t,
        damping: s.damping,
        noise: s.noise,
        remainder: s.remainder,
        predicted: s.predicted(),
        actual: s.actual,
    }
}

#[derive(Serialize)]
struct LadderRow {
    replica: u64,
    m: f64,
    t: f64,
    phi_m: f64,
    phi_inf: f64,
}

#[derive(Serialize)]
struct GapRow {
    replica: u64,
    m: f64,
    sup_gap: f64,
}

#[derive(Serialize)]
struct OuRow {
    m: f64,
    samples: usize,
    ratio: f64,
}

fn reduce(cfg: &ExperimentConfig, setup: &Setup, out: &mut RunOutput) -> Result<()> {
    let ctx = setup.context()?;
    let noise = &setup.noise;
    let r = &cfg.reduce;
    let table = CouplingTable::new(&ctx, noise, cfg.sim.t_end.max(r.ou_t_end), r.table_spacing)?;
    // every step is kept so that the sup-gaps see the whole path; the
    // ladder table is thinned to `save_every`
    let sim = SimConfig {
        dt: r.dt,
        save_every: 1,
        ..cfg.sim
    };
    let ids = replica_ids(cfg);
    let ladders = ids
        .par_iter()
        .map(|&i| phase_ladder(&table, noise, &r.ms, &sim, i))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    for (i, lad) in ids.iter().zip(&ladders) {
        for (j, &m) in lad.m.iter().enumerate() {
            let last = lad.t.len() - 1;
            for (k, &t) in lad.t.iter().enumerate() {
                if k % r.save_every != 0 && k != last {
                    continue;
                }
                rows.push(LadderRow {
                    replica: *i,
                    m,
                    t,
                    phi_m: lad.phi_m[j][k],
                    phi_inf: lad.phi_inf[k],
                });
            }
        }
        for (&m, g) in lad.m.iter().zip(lad.sup_gaps(r.t_min)) {
            gaps.push(GapRow {
                replica: *i,
                m,
                sup_gap: g,
            });
        }
    }
    out.table("ladder.csv", &rows)?;
    out.table("ladder_summary.csv", &gaps)?;
    let ou_cfg = SimConfig {
        m: r.ou_m,
        t_end: r.ou_t_end,
        dt: r.ou_dt,
        ..cfg.sim
    };
    let ou = ou_stationarity(&table, noise, &ou_cfg, r.ou_thin, 0)?;
    out.table(
        "ou_summary.csv",
        &[OuRow {
            m: ou.m,
            samples: ou.samples,
            ratio: ou.ratio,
        }],
    )
}

#[derive(Serialize)]
struct ScalingRow {
    sigma: f64,
    q: f64,
    replica: u64,
    max_residual: f64,
    truncated: bool,
    tau_m: f64,
}

#[derive(Serialize)]
struct ScalingSummary {
    sigma: f64,
    q: f64,
    mean: f64,
    ci95: f64,
}

#[derive(Serialize)]
struct ScalingFit {
    q: f64,
    slope: f64,
    intercept: f64,
}

#[derive(Serialize)]
struct StoppingProbability {
    sigma: f64,
    q: f64,
    stopped: f64,
}

fn scaling(cfg: &ExperimentConfig, setup: &Setup, out: &mut RunOutput) -> Result<()> {
    let ctx = setup.context()?;
    let opts = PathOptions {
        full: true,
        reduced: true,
        refine: 1,
        ..PathOptions::default()
    };
    let ids = replica_ids(cfg);
    let sc = &cfg.scaling;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut probs = Vec::new();
    for &sigma in &sc.sigmas {
        // the paths do not depend on q, which only sets the stopping window
        let sim = SimConfig { sigma, ..cfg.sim };
        let recs = run_replicas(&ctx, &setup.noise, &sim, &ids, &opts)?;
        for &q in &sc.qs {
            let qcfg = SimConfig { q, ..sim };
            let mut vals = Vec::new();
            let mut stopped = 0;
            for (i, rec) in ids.iter().zip(&recs) {
                let mut rec = rec.clone();
                rec.config = qcfg;
                rec.stopping = stopping_times(&rec, &qcfg);
                let (v, truncated) = max_residual(&rec, Residual::Relaxed, q > 0.0);
                if rec.stopping.tau_m < rec.stopping.t_end {
                    stopped += 1;
                }
                vals.push(v);
                rows.push(ScalingRow {
                    sigma,
                    q,
                    replica: *i,
                    max_residual: v,
                    truncated,
                    tau_m: rec.stopping.tau_m,
                });
            }
            summary.push(ScalingSummary {
                sigma,
                q,
                mean: mean_var(&vals).0,
                ci95: ci95(&vals),
            });
            probs.push(StoppingProbability {
                sigma,
                q,
                stopped: stopped as f64 / ids.len() as f64,
            });
        }
    }
    let fits: Vec<ScalingFit> = sc
        .qs
        .iter()
        .map(|&q| {
            let pts: Vec<(f64, f64)> = summary
                .iter()
                .filter(|s| s.q == q)
                .map(|s| (s.sigma.ln(), s.mean.ln()))
                .collect();
            let (slope, intercept) = linear_fit(&pts);
            ScalingFit { q, slope, intercept }
        })
        .collect();
    out.table("scaling.csv", &rows)?;
    out.table("scaling_summary.csv", &summary)?;
    out.table("scaling_fit.csv", &fits)?;
    out.table("stopping_probability.csv", &probs)
}

#[derive(Serialize)]
struct OrthogonalityRow {
    replica: u64,
    t: f64,
    projection: f64,
    norm_h: f64,
}

fn immediate(cfg: &ExperimentConfig, setup: &Setup, out: &mut RunOutput) -> Result<()> {
    let ctx = setup.context()?;
    let opts = PathOptions {
        full: true,
        immediate: true,
        refine: 1,
        ..PathOptions::default()
    };
    let ids = replica_ids(cfg);
    let recs = run_replicas(&ctx, &setup.noise, &cfg.sim, &ids, &opts)?;
    let mut rows = Vec::new();
    let mut stops = Vec::new();
    for (r, rec) in ids.iter().zip(&recs) {
        rec.write_csv(&out.path(&path_name(*r)))?;
        out.external_table(&path_name(*r))?;
        stops.push(StoppingRow::new(*r, &rec.stopping));
        rows.extend(rec.rows.iter().map(|row| OrthogonalityRow {
            replica: *r,
            t: row.t,
            projection: row.proj_x0inf,
            norm_h: row.x0inf_h,
        }));
    }
    out.table("stopping.csv", &stops)?;
    out.table("orthogonality.csv", &rows)
}

#[derive(Serialize)]
struct DecayRow {
    t: f64,
    envelope: f64,
    fit: f64,
}

#[derive(Serialize)]
struct MomentRow {
    t: f64,
    mean: f64,
    ci95: f64,
    bound: f64,
}

#[derive(Serialize)]
struct VarianceRow {
    t: f64,
    moment: f64,
    ci95: f64,
}

#[derive(Serialize)]
struct MomentsSummary {
    theta: f64,
    c: f64,
    bound_holds: bool,
    bound_replicas: usize,
    variance_slope: f64,
    variance_intercept: f64,
    variance_target: f64,
    mode_sum_rate: f64,
    variance_replicas: usize,
    survivors: usize,
    inconclusive: bool,
}

fn moments(cfg: &ExperimentConfig, setup: &Setup, out: &mut RunOutput) -> Result<()> {
    let ctx = setup.context()?;
    let mc = &cfg.moments;
    let probes = decay_probes(ctx.grid(), mc.probe_seed);
    let (fit, envelope) = fit_decay(&ctx.operator, &ctx.pair, &probes, mc.decay_t_max, mc.decay_samples, mc.decay_dt)?;
    let rows: Vec<DecayRow> = envelope
        .iter()
        .map(|&(t, e)| DecayRow {
            t,
            envelope: e,
            fit: fit.c * (-fit.theta * t).exp(),
        })
        .collect();
    out.table("decay.csv", &rows)?;
    let bound = moment_bound_experiment(&ctx, &setup.noise, &cfg.sim, cfg.replicas, &fit)?;
    let rows: Vec<MomentRow> = (0..bound.t.len())
        .map(|i| MomentRow {
            t: bound.t[i],
            mean: bound.mean[i],
            ci95: bound.ci[i],
            bound: bound.bound[i],
        })
        .collect();
    out.table("moment_bound.csv", &rows)?;
    let qn = setup.noise.truncation(mc.modes)?;
    let vcfg = SimConfig {
        sigma: mc.variance_sigma,
        q: mc.variance_q,
        ..cfg.sim
    };
    let var = phase_variance_experiment(&ctx, &qn, &vcfg, cfg.replicas)?;
    let rows: Vec<VarianceRow> = (0..var.t.len())
        .map(|i| VarianceRow {
            t: var.t[i],
            moment: var.moment[i],
            ci95: var.ci[i],
        })
        .collect();
    out.table("phase_variance.csv", &rows)?;
    out.table(
        "moments_summary.csv",
        &[MomentsSummary {
            theta: fit.theta,
            c: fit.c,
            bound_holds: bound.holds,
            bound_replicas: bound.replicas,
            variance_slope: var.slope,
            variance_intercept: var.intercept,
            variance_target: var.target,
            mode_sum_rate: var.mode_sum_rate,
            variance_replicas: var.replicas,
            survivors: var.survivors,
            inconclusive: var.inconclusive,
        }],
    )
}

#[derive(Serialize)]
struct MinimalityRow {
    sigma: f64,
    replica: u64,
    t: f64,
    phi_inf: f64,
    s_inf_v: f64,
    g1: f64,
    g2: f64,
    g1_fd: f64,
    g2_fd: f64,
}

#[derive(Serialize)]
struct MinimalityFit {
    /// Log-log slope of `max |g1|` against sigma.
    g1_slope: f64,
    /// `max |g2 / (2 sigma^2) - 1|` over times with `|S^inf|_V <= 1`.
    g2_max_deviation: f64,
    g2_samples: usize,
}

fn minimality(cfg: &ExperimentConfig, setup: &Setup, out: &mut RunOutput) -> Result<()> {
    let ctx = setup.context()?;
    let mc = &cfg.minimality;
    let opts = PathOptions {
        full: true,
        immediate: true,
        snapshots: true,
        refine: 1,
        ..PathOptions::default()
    };
    let steps = cfg.sim.steps()?;
    let save_every = (steps / mc.samples).max(1);
    let ids = replica_ids(cfg);
    let mut rows = Vec::new();
    let mut worst = Vec::new();
    let (mut dev, mut small) = (0.0f64, 0usize);
    for &sigma in &mc.sigmas {
        let sim = SimConfig {
            sigma,
            save_every,
            ..cfg.sim
        };
        let recs = run_replicas(&ctx, &setup.noise, &sim, &ids, &opts)?;
        let mut w = 0.0f64;
        for (r, rec) in ids.iter().zip(&recs) {
            for (row, snap) in rec.rows.iter().zip(&rec.snapshots).skip(1) {
                let Some(x) = snap.full.as_ref() else { continue };
                let m = minimality_diagnostic(&ctx, x, row.phi0_inf, sigma)?;
                w = w.max(m.g1.abs());
                if row.s_inf_v <= 1.0 {
                    small += 1;
                    dev = dev.max((m.g2 / (2.0 * sigma * sigma) - 1.0).abs());
                }
                rows.push(MinimalityRow {
                    sigma,
                    replica: *r,
                    t: row.t,
                    phi_inf: row.phi0_inf,
                    s_inf_v: row.s_inf_v,
                    g1: m.g1,
                    g2: m.g2,
                    g1_fd: m.g1_fd,
                    g2_fd: m.g2_fd,
                });
            }
        }
        worst.push(w);
    }
    out.table("minimality.csv", &rows)?;
    out.table(
        "minimality_fit.csv",
        &[MinimalityFit {
            g1_slope: loglog_slope(&mc.sigmas, &worst),
            g2_max_deviation: dev,
            g2_samples: small,
        }],
    )
}
