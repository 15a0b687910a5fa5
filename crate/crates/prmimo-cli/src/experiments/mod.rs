//! Experiment runners, one per figure/table of the evaluation. Each
//! runner has a typed core function (consumed by the acceptance suite)
//! and a thin wrapper that shapes the results into a `ResultTable`.
//!
//! Determinism: every realization derives its own RNG streams from
//! `(seed, realization index, stream id)`, so results are byte-identical
//! regardless of worker count or scheduling.

mod capacity;
mod hsmrt;
mod stats;

pub use capacity::{
    capacity_cdf_samples, capacity_vs_snr_curves, run_capacity_cdf, run_capacity_vs_rxangle,
    run_capacity_vs_snr, run_capacity_vs_txangle, run_joint_iteration_trace, snr_gap_db,
    CapacityCdfSamples, SnrCurve,
};
pub use hsmrt::{
    hsmrt_samples, index_matching_data, run_hsmrt_capacity_cdf, run_hsmrt_ser,
    run_index_matching, run_ser_montecarlo, ser_gap_at, ser_montecarlo_points, IndexMatchRow,
    LtSamples, SerPoint,
};
pub use stats::{run_stats_histograms, stats_summary, StatsSummary};

use crate::config::{ExperimentConfig, ExperimentKind, ResultTable};
use prmimo::channel::{effective_channel, ChannelTensor, PolarizationConfig};
use prmimo::linalg::svd;
use prmimo::polcoding::{capacity, waterfill};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG stream ids, mixed into the per-realization sub-seed.
pub(crate) const STREAM_ANGLES: u64 = 1;
pub(crate) const STREAM_NOISE: u64 = 2;
pub(crate) const STREAM_SYMBOLS: u64 = 3;

/// Independent RNG for (realization, purpose); the channel itself uses
/// the plain `sub_seed` of the generator config.
pub(crate) fn stream_rng(seed: u64, realization: u64, stream: u64) -> ChaCha8Rng {
    let mixed = prmimo::channel::sub_seed(seed, realization) ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Waterfilling capacity of the effective channel at noise power 1.
pub(crate) fn waterfilling_capacity(
    tensor: &ChannelTensor,
    config: &PolarizationConfig,
    total_power: f64,
) -> f64 {
    let eff = effective_channel(tensor, config).expect("dimensions match");
    let sv: Vec<f64> = svd(&eff.matrix)
        .expect("finite matrix")
        .singular_values
        .iter()
        .map(|s| s * s)
        .collect();
    capacity_of_modes(&sv, total_power)
}

/// Waterfilling capacity for precomputed squared singular values.
pub(crate) fn capacity_of_modes(sv_squared: &[f64], total_power: f64) -> f64 {
    if sv_squared.iter().all(|&s| s <= 0.0) {
        return 0.0;
    }
    let alloc = waterfill(sv_squared, 1.0, total_power).expect("nonzero modes");
    capacity(sv_squared, &alloc)
}

pub(crate) fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Runs one experiment on a dedicated rayon pool of `threads` workers
/// (0 = rayon default).
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> anyhow::Result<ResultTable> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(|| dispatch(cfg))
}

fn dispatch(cfg: &ExperimentConfig) -> anyhow::Result<ResultTable> {
    match cfg.experiment {
        ExperimentKind::CapacityVsTxangle => run_capacity_vs_txangle(cfg),
        ExperimentKind::CapacityVsRxangle => run_capacity_vs_rxangle(cfg),
        ExperimentKind::JointIterationTrace => run_joint_iteration_trace(cfg),
        ExperimentKind::CapacityCdf => run_capacity_cdf(cfg),
        ExperimentKind::CapacityVsSnr => run_capacity_vs_snr(cfg),
        ExperimentKind::HsmrtCapacityCdf => run_hsmrt_capacity_cdf(cfg),
        ExperimentKind::HsmrtSer => run_hsmrt_ser(cfg),
        ExperimentKind::SerMontecarlo => run_ser_montecarlo(cfg),
        ExperimentKind::StatsHistograms => run_stats_histograms(cfg),
        ExperimentKind::IndexMatching => run_index_matching(cfg),
    }
}
