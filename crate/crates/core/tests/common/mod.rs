//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::sync::OnceLock;

use pulsetrack::dynamics::Context;
use pulsetrack::frozen::{spectrum, FrozenOperator, SpectrumReport};
use pulsetrack::noise::NoiseModel;
use pulsetrack::profile::{compute_profile, default_grid, default_peak, ModelParams, WaveProfile};

/// Profile on the default grid.
pub fn profile() -> &'static WaveProfile {
    static P: OnceLock<WaveProfile> = OnceLock::new();
    P.get_or_init(|| {
        let g = default_grid().unwrap();
        compute_profile(&g, &ModelParams::default(), default_peak(&g)).unwrap()
    })
}

pub fn operator() -> &'static FrozenOperator {
    static F: OnceLock<FrozenOperator> = OnceLock::new();
    F.get_or_init(|| FrozenOperator::assemble(profile()))
}

pub fn report() -> &'static SpectrumReport {
    static R: OnceLock<SpectrumReport> = OnceLock::new();
    R.get_or_init(|| spectrum(operator(), profile(), 12).unwrap())
}

/// Dynamics context on the reduced grid.
pub fn context() -> &'static Context {
    static C: OnceLock<Context> = OnceLock::new();
    C.get_or_init(|| Context::with_defaults().unwrap())
}

/// Default noise placed relative to the dynamics profile.
pub fn noise() -> &'static NoiseModel {
    static N: OnceLock<NoiseModel> = OnceLock::new();
    N.get_or_init(|| NoiseModel::default_for(context().grid(), context().profile.peak()).unwrap())
}
