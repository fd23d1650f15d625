//! Saved path quantities and their CSV form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::diagnostics::StoppingTimes;
use super::{ImmediateState, ReducedState, SimConfig, Stepper};
use crate::error::{Error, Result};
use crate::grid::StateUV;

/// One saved step. Quantities of runs that were not integrated are NaN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub t: f64,
    /// Phase of the full run and its derivative.
    pub phi_m: f64,
    pub phi_dot_m: f64,
    /// Reduced phase, its derivative and the immediate-relaxation phase.
    pub phi0_m: f64,
    pub phi0_dot_m: f64,
    pub phi0_inf: f64,
    /// `|X|_H`, `|X|_V` of the full perturbation.
    pub x_h: f64,
    pub x_v: f64,
    /// `<Pi0_{st} X, d1(. + st)>_H`
    pub proj_x: f64,
    /// `|X^m|_H`
    pub xm_h: f64,
    pub x0m_h: f64,
    pub x0inf_h: f64,
    /// `<Pi0_{st} X0^inf, d1(. + st)>_H`
    pub proj_x0inf: f64,
    /// `|S^m|_V`, `|S^inf|_V`
    pub s_m_v: f64,
    pub s_inf_v: f64,
}

/// States at a saved step, in the co-moving frame.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub full: Option<StateUV>,
    pub reduced: Option<StateUV>,
    pub immediate: Option<StateUV>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub config: SimConfig,
    pub rows: Vec<RecordRow>,
    pub stopping: StoppingTimes,
    pub snapshots: Vec<Snapshot>,
}

impl TrajectoryRecord {
    pub fn new(config: &SimConfig) -> Self {
        Self {
            config: *config,
            rows: Vec::new(),
            stopping: StoppingTimes::none(config.t_end),
            snapshots: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, (row, snap): (RecordRow, Option<Snapshot>)) {
        self.rows.push(row);
        if let Some(s) = snap {
            self.snapshots.push(s);
        }
    }

    pub fn column(&self, f: impl Fn(&RecordRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.column(|r| r.t)
    }

    /// Rows with `t <= t_max`.
    pub fn until(&self, t_max: f64) -> impl Iterator<Item = &RecordRow> {
        self.rows.iter().filter(move |r| r.t <= t_max + 1e-12)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, &self.rows)
    }
}

/// Writes serializable rows with a header line.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_rows`].
pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize().map(|x| x.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn observe(
    stepper: &Stepper,
    cfg: &SimConfig,
    t: f64,
    full: Option<&[f64]>,
    phase: Option<(f64, f64)>,
    reduced: Option<&ReducedState>,
    immediate: Option<&ImmediateState>,
    snapshots: bool,
) -> Result<(RecordRow, Option<Snapshot>)> {
    let ctx = stepper.context();
    let g = ctx.grid();
    let w = ctx.weights();
    let nan = f64::NAN;
    let full_uv = full.map(StateUV::from_interleaved);
    let red_uv = reduced.map(|r| StateUV::from_interleaved(&r.y));
    let imm_uv = immediate.map(|r| StateUV::from_interleaved(&r.y));
    let mut row = RecordRow {
        t,
        phi_m: nan,
        phi_dot_m: nan,
        phi0_m: reduced.map_or(nan, |r| r.phi),
        phi0_dot_m: reduced.map_or(nan, |r| r.phi_dot),
        phi0_inf: immediate.map_or(nan, |r| r.phi),
        x_h: full_uv.as_ref().map_or(nan, |y| g.norm_h(y, w)),
        x_v: full_uv.as_ref().map_or(nan, |y| g.norm_vv(y, w)),
        proj_x: full.map_or(nan, |y| stepper.coefficient(y)),
        xm_h: nan,
        x0m_h: red_uv.as_ref().map_or(nan, |y| g.norm_h(y, w)),
        x0inf_h: imm_uv.as_ref().map_or(nan, |y| g.norm_h(y, w)),
        proj_x0inf: immediate.map_or(nan, |r| stepper.coefficient(&r.y)),
        s_m_v: nan,
        s_inf_v: nan,
    };
    if let (Some(y), Some((phi, phi_dot))) = (&full_uv, phase) {
        row.phi_m = phi;
        row.phi_dot_m = phi_dot;
        row.xm_h = g.norm_h(&y.sub(&ctx.shift_difference(phi)?), w);
    }
    if let Some(y) = &full_uv {
        if let (Some(r), Some(y0)) = (reduced, &red_uv) {
            row.s_m_v = g.norm_vv(&super::diagnostics::residual(ctx, y, y0, r.phi, cfg.sigma)?, w);
        }
        if let (Some(r), Some(y0)) = (immediate, &imm_uv) {
            row.s_inf_v = g.norm_vv(&super::diagnostics::residual(ctx, y, y0, r.phi, cfg.sigma)?, w);
        }
    }
    let snap = snapshots.then_some(Snapshot {
        t,
        full: full_uv,
        reduced: red_uv,
        immediate: imm_uv,
    });
    Ok((row, snap))
}
