//! Shared fixtures for unit tests.

use std::sync::OnceLock;

use crate::frozen::{spectrum, FrozenOperator, SpectrumReport};
use crate::profile::{compute_profile, default_grid, default_peak, ModelParams, WaveProfile};

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
