//! Distribution experiments: polarization-angle histograms against the
//! arcsine-law density, and squared-envelope histograms under random
//! polarization and under hybrid selection, against chi-square references.
//!
//! Squared envelopes are reported on the `2|h|^2` scale, where the
//! random-polarization case follows the standard chi-square law with two
//! degrees of freedom exactly.

use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::{stream_rng, STREAM_ANGLES};
use crate::config::{fmt_f64, ExperimentConfig, ResultTable};
use prmimo::channel::{
    effective_channel, generate_channel, sub_seed, ChannelGenConfig, PolarizationConfig,
};
use prmimo::metrics::{
    cdf_cos_uniform, cdf_sin_uniform, chi_square_cdf, chi_square_pdf, ks_critical_value,
    ks_distance, pdf_cos_uniform, EmpiricalDistribution,
};
use prmimo::selection::{partial_effective, select_ew};

/// Number of independent angle draws for the cos/sin histograms.
pub const ANGLE_DRAWS: usize = 1_000_000;

/// Aggregate statistics backing the distribution experiment.
#[derive(Debug, Clone)]
pub struct StatsSummary {
    pub cos_ks: f64,
    pub sin_ks: f64,
    pub angle_ks_critical: f64,
    /// Sample variance of the complex effective-channel entry under
    /// random polarization (target: 1).
    pub randpol_variance: f64,
    /// KS distance of 2|h|^2 against chi-square with 2 dof.
    pub randpol_ks: f64,
    pub randpol_ks_critical: f64,
    /// Per selection size: (l_t, mean, variance) of 2|h~|^2 under EW
    /// hybrid selection.
    pub hs_moments: Vec<(usize, f64, f64)>,
}

/// Draws the angle samples and squared-envelope sample sets, computes the
/// KS statistics, and returns everything the table writer and the
/// acceptance suite need.
pub fn stats_summary(cfg: &ExperimentConfig) -> anyhow::Result<(StatsSummary, StatsSamples)> {
    // (a) Polarization-angle transforms, 1e6 draws from one stream.
    let mut rng = stream_rng(cfg.seed, 0, STREAM_ANGLES);
    let mut cos_samples = Vec::with_capacity(ANGLE_DRAWS);
    let mut sin_samples = Vec::with_capacity(ANGLE_DRAWS);
    for _ in 0..ANGLE_DRAWS {
        let theta = rng.gen_range(-PI..PI);
        cos_samples.push(theta.cos());
        sin_samples.push(theta.sin());
    }
    let cos_emp = EmpiricalDistribution::from_samples(cos_samples)?;
    let sin_emp = EmpiricalDistribution::from_samples(sin_samples)?;
    let cos_ks = ks_distance(&cos_emp, cdf_cos_uniform)?;
    let sin_ks = ks_distance(&sin_emp, cdf_sin_uniform)?;

    // (b) Squared envelopes under random polarization (2x2 blocks give
    // four samples per realization).
    let randpol: Vec<(f64, Vec<f64>)> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let tensor = generate_channel(&ChannelGenConfig {
                n_t: cfg.n_t,
                n_r: cfg.n_r,
                xpd_db: cfg.xpd_db,
                seed: sub_seed(cfg.seed, r),
            });
            let mut rng = stream_rng(cfg.seed, r, STREAM_ANGLES);
            let config = PolarizationConfig::random_uniform(cfg.n_t, cfg.n_r, &mut rng);
            let eff = effective_channel(&tensor, &config).expect("dims");
            let mut sq = Vec::with_capacity(cfg.n_r * cfg.n_t);
            let mut power = 0.0;
            for e in eff.matrix.entries() {
                sq.push(2.0 * e.norm_sqr());
                power += e.norm_sqr();
            }
            (power, sq)
        })
        .collect();
    let sample_count: usize = randpol.iter().map(|(_, v)| v.len()).sum();
    let randpol_variance =
        randpol.iter().map(|(p, _)| p).sum::<f64>() / sample_count.max(1) as f64;
    let randpol_sq: Vec<f64> = randpol.into_iter().flat_map(|(_, v)| v).collect();
    let randpol_emp = EmpiricalDistribution::from_samples(randpol_sq)?;
    let randpol_ks = ks_distance(&randpol_emp, |x| chi_square_cdf(x, 2))?;

    // (c) Squared envelopes of the selected partial channel under EW
    // hybrid selection, per selection size.
    let lt_values = cfg.lt_values(&(1..=cfg.n_t).collect::<Vec<_>>());
    let mut hs_emps = Vec::new();
    let mut hs_moments = Vec::new();
    for &l_t in &lt_values {
        let samples: Vec<Vec<f64>> = (0..cfg.realizations as u64)
            .into_par_iter()
            .map(|r| {
                let tensor = generate_channel(&ChannelGenConfig {
                    n_t: cfg.n_t,
                    n_r: cfg.n_r,
                    xpd_db: cfg.xpd_db,
                    seed: sub_seed(cfg.seed, r),
                });
                let outcome = select_ew(&tensor, l_t, cfg.iterations).expect("valid selection");
                let partial =
                    partial_effective(&tensor, &outcome.config_used, &outcome.best_subset)
                        .expect("valid subset");
                partial
                    .matrix
                    .entries()
                    .iter()
                    .map(|e| 2.0 * e.norm_sqr())
                    .collect()
            })
            .collect();
        let flat: Vec<f64> = samples.into_iter().flatten().collect();
        let emp = EmpiricalDistribution::from_samples(flat)?;
        hs_moments.push((l_t, emp.mean(), emp.variance()));
        hs_emps.push((l_t, emp));
    }

    let summary = StatsSummary {
        cos_ks,
        sin_ks,
        angle_ks_critical: ks_critical_value(ANGLE_DRAWS, 0.01),
        randpol_variance,
        randpol_ks,
        randpol_ks_critical: ks_critical_value(sample_count, 0.01),
        hs_moments,
    };
    Ok((summary, StatsSamples { cos_emp, sin_emp, randpol_emp, hs_emps }))
}

/// The empirical distributions behind the summary (for the CSV series).
pub struct StatsSamples {
    pub cos_emp: EmpiricalDistribution,
    pub sin_emp: EmpiricalDistribution,
    pub randpol_emp: EmpiricalDistribution,
    pub hs_emps: Vec<(usize, EmpiricalDistribution)>,
}

/// Long-format table: `series, x, y` rows for every histogram and
/// analytic overlay.
pub fn run_stats_histograms(cfg: &ExperimentConfig) -> anyhow::Result<ResultTable> {
    let mut table = ResultTable::new(&["series", "x", "y"], cfg);
    if cfg.realizations == 0 {
        return Ok(table); // header-only output for an empty run
    }
    let (summary, samples) = stats_summary(cfg)?;

    let mut push_hist = |table: &mut ResultTable, name: &str, emp: &EmpiricalDistribution| {
        for (x, d) in emp.density_points() {
            table.push_row(vec![name.to_string(), fmt_f64(x), fmt_f64(d)]);
        }
    };
    push_hist(&mut table, "cos_hist", &samples.cos_emp);
    push_hist(&mut table, "sin_hist", &samples.sin_emp);
    for k in 0..=200 {
        let y = -0.995 + 1.99 * k as f64 / 200.0;
        let d = pdf_cos_uniform(y).expect("inside support");
        table.push_row(vec!["angle_pdf".into(), fmt_f64(y), fmt_f64(d)]);
    }

    push_hist(&mut table, "randpol_sq_env_hist", &samples.randpol_emp);
    for (l_t, emp) in &samples.hs_emps {
        push_hist(&mut table, &format!("hs_lt{l_t}_hist"), emp);
    }
    for dof in [2u32, 4, 5, 8, 12] {
        for k in 0..=300 {
            let x = 40.0 * k as f64 / 300.0;
            table.push_row(vec![
                format!("chi2_dof{dof}_pdf"),
                fmt_f64(x),
                fmt_f64(chi_square_pdf(x, dof)),
            ]);
        }
    }

    table.meta_insert("cos_ks", serde_json::json!(summary.cos_ks));
    table.meta_insert("sin_ks", serde_json::json!(summary.sin_ks));
    table.meta_insert("angle_ks_critical", serde_json::json!(summary.angle_ks_critical));
    table.meta_insert("randpol_variance", serde_json::json!(summary.randpol_variance));
    table.meta_insert("randpol_ks", serde_json::json!(summary.randpol_ks));
    table.meta_insert(
        "randpol_ks_critical",
        serde_json::json!(summary.randpol_ks_critical),
    );
    let moments: Vec<serde_json::Value> = summary
        .hs_moments
        .iter()
        .map(|(l_t, mean, var)| {
            serde_json::json!({"l_t": l_t, "mean": mean, "variance": var})
        })
        .collect();
    table.meta_insert("hs_moments_doubled_scale", serde_json::json!(moments));
    Ok(table)
}
