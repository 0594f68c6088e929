//! Singular series, local factors and singular integrals.

mod integral;
mod series;

pub use integral::{
    schmidt_wt, schmidt_wt_gamma, truncated_integral, IntegralConfig, IntegralEngine, IntegralReport, Sampler,
    SchmidtConfig, SchmidtEstimate,
};
pub use series::{
    check_multiplicativity, euler_product, gamma_count, local_factor, tail_fit, truncated_series, EulerProduct,
    local_factors, GammaReport, LocalFactor, MultPair, MultiplicativityReport, SeriesEngine, SingularReport, TailFit,
    TailPolicy,
};

/// Which main-term constant is being computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeriesMode {
    /// Terms `|S(q, b)|^{2s}`.
    MeanValue { s: u32 },
    /// Terms `S(q, b)^s e(-bn/q)`.
    Waring { s: u32, n: u64 },
    /// Terms `S_A(q, b)^s S(q, b)^u e(-bn/q)`.
    Mixed { s: u32, u: u32, n: u64 },
}

impl SeriesMode {
    pub fn s(&self) -> u32 {
        match *self {
            SeriesMode::MeanValue { s } | SeriesMode::Waring { s, .. } | SeriesMode::Mixed { s, .. } => s,
        }
    }

    pub fn u(&self) -> u32 {
        match *self {
            SeriesMode::Mixed { u, .. } => u,
            _ => 0,
        }
    }

    pub fn target(&self) -> Option<u64> {
        match *self {
            SeriesMode::MeanValue { .. } => None,
            SeriesMode::Waring { n, .. } | SeriesMode::Mixed { n, .. } => Some(n),
        }
    }

    /// Same mode with a different target.
    pub fn with_target(&self, n: u64) -> SeriesMode {
        match *self {
            SeriesMode::MeanValue { s } => SeriesMode::MeanValue { s },
            SeriesMode::Waring { s, .. } => SeriesMode::Waring { s, n },
            SeriesMode::Mixed { s, u, .. } => SeriesMode::Mixed { s, u, n },
        }
    }
}
