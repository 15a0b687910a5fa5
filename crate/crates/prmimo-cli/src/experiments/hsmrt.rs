//! Hybrid-selection experiments: capacity cdfs and analytic SER for the
//! EW / Global / random-polarization schemes, symbol-level Monte Carlo
//! validation of the SER, and selected-index agreement tables.

use anyhow::bail;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::{db_to_linear, stream_rng, STREAM_ANGLES, STREAM_SYMBOLS};
use crate::config::{fmt_f64, ExperimentConfig, ResultTable};
use prmimo::channel::{generate_channel, sub_seed, ChannelGenConfig};
use prmimo::metrics::{average_ser, capacity_from_snr};
use prmimo::selection::{
    mrt_mrc_weights, partial_effective, select_ew, select_global, select_random_pol,
    SelectionIndexSet,
};

/// Effective-SNR samples for one selection size, aligned by realization.
#[derive(Debug, Clone)]
pub struct LtSamples {
    pub l_t: usize,
    pub ew: Vec<f64>,
    pub global: Vec<f64>,
    pub random: Vec<f64>,
    /// Eigenvalue bounds of the EW winner.
    pub ew_lower: Vec<f64>,
    pub ew_upper: Vec<f64>,
}

/// Runs the three schemes over `cfg.realizations` channels for every
/// requested selection size. The random-polarization baseline reuses one
/// angle draw per realization across sizes.
pub fn hsmrt_samples(cfg: &ExperimentConfig, lt_values: &[usize]) -> anyhow::Result<Vec<LtSamples>> {
    if lt_values.is_empty() {
        bail!("no selection sizes requested");
    }
    struct RealizationRow {
        per_lt: Vec<(f64, f64, f64, f64, f64)>, // ew, global, random, lower, upper
    }
    let rows: Vec<RealizationRow> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let tensor = generate_channel(&ChannelGenConfig {
                n_t: cfg.n_t,
                n_r: cfg.n_r,
                xpd_db: cfg.xpd_db,
                seed: sub_seed(cfg.seed, r),
            });
            let per_lt = lt_values
                .iter()
                .map(|&l_t| {
                    let ew = select_ew(&tensor, l_t, cfg.iterations).expect("valid selection");
                    let global =
                        select_global(&tensor, l_t, cfg.iterations).expect("valid selection");
                    // Fresh stream per (realization); same draw for every
                    // size so the baseline polarization state is shared.
                    let mut rng = stream_rng(cfg.seed, r, STREAM_ANGLES);
                    let random =
                        select_random_pol(&tensor, l_t, &mut rng).expect("valid selection");
                    (
                        ew.effective_snr,
                        global.effective_snr,
                        random.effective_snr,
                        ew.bounds.0,
                        ew.bounds.1,
                    )
                })
                .collect();
            RealizationRow { per_lt }
        })
        .collect();

    Ok(lt_values
        .iter()
        .enumerate()
        .map(|(k, &l_t)| {
            let mut s = LtSamples {
                l_t,
                ew: Vec::with_capacity(rows.len()),
                global: Vec::with_capacity(rows.len()),
                random: Vec::with_capacity(rows.len()),
                ew_lower: Vec::with_capacity(rows.len()),
                ew_upper: Vec::with_capacity(rows.len()),
            };
            for row in &rows {
                let (ew, global, random, lo, hi) = row.per_lt[k];
                s.ew.push(ew);
                s.global.push(global);
                s.random.push(random);
                s.ew_lower.push(lo);
                s.ew_upper.push(hi);
            }
            s
        })
        .collect())
}

/// Sorted capacity cdf columns per selection size, including the capacity
/// the SNR bounds would give.
pub fn run_hsmrt_capacity_cdf(cfg: &ExperimentConfig) -> anyhow::Result<ResultTable> {
    let lt_values = cfg.lt_values(&(1..=cfg.n_t).collect::<Vec<_>>());
    let gamma_bar = db_to_linear(cfg.snr_single()?);
    let samples = hsmrt_samples(cfg, &lt_values)?;

    let mut table = ResultTable::new(
        &[
            "l_t",
            "rank",
            "cdf_level",
            "capacity_ew",
            "capacity_global",
            "capacity_random",
            "capacity_lower_bound",
            "capacity_upper_bound",
        ],
        cfg,
    );
    for s in &samples {
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        let (ew, global, random, lo, hi) = (
            sorted(&s.ew),
            sorted(&s.global),
            sorted(&s.random),
            sorted(&s.ew_lower),
            sorted(&s.ew_upper),
        );
        let n = ew.len();
        for i in 0..n {
            table.push_row(vec![
                s.l_t.to_string(),
                (i + 1).to_string(),
                fmt_f64((i + 1) as f64 / n as f64),
                fmt_f64(capacity_from_snr(ew[i], gamma_bar)),
                fmt_f64(capacity_from_snr(global[i], gamma_bar)),
                fmt_f64(capacity_from_snr(random[i], gamma_bar)),
                fmt_f64(capacity_from_snr(lo[i], gamma_bar)),
                fmt_f64(capacity_from_snr(hi[i], gamma_bar)),
            ]);
        }
    }
    Ok(table)
}

/// Analytic average SER over a mean-SNR sweep, per scheme and size.
pub fn run_hsmrt_ser(cfg: &ExperimentConfig) -> anyhow::Result<ResultTable> {
    let lt_values = cfg.lt_values(&(1..=cfg.n_t).collect::<Vec<_>>());
    let sweep = cfg.snr_db.values();
    if sweep.is_empty() {
        bail!("hsmrt-ser needs a non-empty snr_db sweep");
    }
    let samples = hsmrt_samples(cfg, &lt_values)?;

    let mut table = ResultTable::new(
        &["l_t", "gamma_bar_db", "ser_ew", "ser_global", "ser_random"],
        cfg,
    );
    let mut gaps = Vec::new();
    for s in &samples {
        let mut ew_curve = Vec::with_capacity(sweep.len());
        let mut random_curve = Vec::with_capacity(sweep.len());
        for &db in &sweep {
            let gamma_bar = db_to_linear(db);
            let ser_ew = average_ser(&s.ew, gamma_bar).expect("non-empty");
            let ser_global = average_ser(&s.global, gamma_bar).expect("non-empty");
            let ser_random = average_ser(&s.random, gamma_bar).expect("non-empty");
            ew_curve.push(ser_ew);
            random_curve.push(ser_random);
            table.push_row(vec![
                s.l_t.to_string(),
                fmt_f64(db),
                fmt_f64(ser_ew),
                fmt_f64(ser_global),
                fmt_f64(ser_random),
            ]);
        }
        if let Some(gap) = ser_gap_at(&ew_curve, &random_curve, &sweep, 1e-3) {
            gaps.push(serde_json::json!({"l_t": s.l_t, "gain_db_at_1e-3": gap}));
        }
    }
    table.meta_insert("ser_gaps", serde_json::json!(gaps));
    Ok(table)
}

/// Horizontal dB gain of curve `a` over curve `b` at the given SER level:
/// the difference of the mean-SNR values where each (decreasing) curve
/// crosses `level`, interpolated on log10(SER). `None` when either curve
/// does not cross the level inside the sweep.
pub fn ser_gap_at(a: &[f64], b: &[f64], sweep_db: &[f64], level: f64) -> Option<f64> {
    Some(crossing_db(b, sweep_db, level)? - crossing_db(a, sweep_db, level)?)
}

fn crossing_db(curve: &[f64], sweep_db: &[f64], level: f64) -> Option<f64> {
    let log_level = level.log10();
    for k in 1..curve.len() {
        if curve[k] <= level && curve[k - 1] > level {
            let (l0, l1) = (curve[k - 1].log10(), curve[k].log10());
            let w = if l1 < l0 { (log_level - l0) / (l1 - l0) } else { 1.0 };
            return Some(sweep_db[k - 1] + w * (sweep_db[k] - sweep_db[k - 1]));
        }
    }
    None
}

/// One Monte Carlo SER point.
#[derive(Debug, Clone)]
pub struct SerPoint {
    pub l_t: usize,
    pub gamma_bar_db: f64,
    pub n_symbols: u64,
    pub errors: u64,
    pub ser_analytic: f64,
    pub ser_empirical: f64,
    /// Binomial standard error at the analytic SER.
    pub std_err: f64,
}

const SYMBOLS_PER_REALIZATION: u64 = 100;

/// Symbol-level QPSK simulation over the dominant eigenmode of the EW
/// selection, against the analytic average SER on the same realization
/// pool. Each (size, mean-SNR) point transmits
/// `100 * cfg.realizations` symbols, so the default desk scale is 1e5.
pub fn ser_montecarlo_points(cfg: &ExperimentConfig) -> anyhow::Result<Vec<SerPoint>> {
    let lt_values = cfg.lt_values(&[1, 2, 5, 8]);
    let sweep = cfg.snr_db.values();
    if sweep.is_empty() {
        bail!("ser-montecarlo needs a non-empty snr_db sweep");
    }

    let mut points = Vec::new();
    for &l_t in &lt_values {
        // Realization pool: EW selection fixes (H~, u, w, sigma) per draw.
        let pool: Vec<(Vec<Complex64>, Vec<Vec<Complex64>>, Vec<Complex64>, f64)> = (0..cfg
            .realizations as u64)
            .into_par_iter()
            .map(|r| {
                let tensor = generate_channel(&ChannelGenConfig {
                    n_t: cfg.n_t,
                    n_r: cfg.n_r,
                    xpd_db: cfg.xpd_db,
                    seed: sub_seed(cfg.seed.wrapping_add(l_t as u64), r),
                });
                let outcome = select_ew(&tensor, l_t, cfg.iterations).expect("valid selection");
                let partial =
                    partial_effective(&tensor, &outcome.config_used, &outcome.best_subset)
                        .expect("valid subset");
                let (u, w, sigma) = mrt_mrc_weights(&partial);
                let h: Vec<Vec<Complex64>> = (0..partial.matrix.rows())
                    .map(|i| partial.matrix.row(i).to_vec())
                    .collect();
                (u, h, w, sigma)
            })
            .collect();
        let gammas: Vec<f64> = pool.iter().map(|(_, _, _, s)| s * s).collect();

        for (point_idx, &db) in sweep.iter().enumerate() {
            let gamma_bar = db_to_linear(db);
            let ser_analytic = average_ser(&gammas, gamma_bar).expect("non-empty pool");
            let amp = gamma_bar.sqrt() * std::f64::consts::FRAC_1_SQRT_2;

            let errors: u64 = (0..cfg.realizations as u64)
                .into_par_iter()
                .map(|r| {
                    let (u, h, w, _) = &pool[r as usize];
                    let mut rng = stream_rng(
                        cfg.seed
                            .wrapping_add(l_t as u64)
                            .wrapping_mul(0x5851_F42D_4C95_7F2D)
                            .wrapping_add(point_idx as u64),
                        r,
                        STREAM_SYMBOLS,
                    );
                    let mut errs = 0u64;
                    for _ in 0..SYMBOLS_PER_REALIZATION {
                        // QPSK symbol with Es = gamma_bar (noise power 1).
                        let bits = (rng.gen::<bool>(), rng.gen::<bool>());
                        let s = Complex64::new(
                            if bits.0 { amp } else { -amp },
                            if bits.1 { amp } else { -amp },
                        );
                        // y = H (u s) + n, r = w^dagger y.
                        let mut combined = Complex64::new(0.0, 0.0);
                        for (i, row) in h.iter().enumerate() {
                            let mut y_i = Complex64::new(0.0, 0.0);
                            for (j, &u_j) in u.iter().enumerate() {
                                y_i += row[j] * u_j * s;
                            }
                            let noise = Complex64::new(
                                rng.sample::<f64, _>(rand_distr::StandardNormal),
                                rng.sample::<f64, _>(rand_distr::StandardNormal),
                            ) * std::f64::consts::FRAC_1_SQRT_2;
                            y_i += noise;
                            combined += w[i].conj() * y_i;
                        }
                        let decided = (combined.re > 0.0, combined.im > 0.0);
                        if decided != bits {
                            errs += 1;
                        }
                    }
                    errs
                })
                .sum();

            let n_symbols = cfg.realizations as u64 * SYMBOLS_PER_REALIZATION;
            let ser_empirical = errors as f64 / n_symbols as f64;
            let std_err = (ser_analytic * (1.0 - ser_analytic) / n_symbols as f64).sqrt();
            points.push(SerPoint {
                l_t,
                gamma_bar_db: db,
                n_symbols,
                errors,
                ser_analytic,
                ser_empirical,
                std_err,
            });
        }
    }
    Ok(points)
}

pub fn run_ser_montecarlo(cfg: &ExperimentConfig) -> anyhow::Result<ResultTable> {
    let points = ser_montecarlo_points(cfg)?;
    let mut table = ResultTable::new(
        &[
            "l_t",
            "gamma_bar_db",
            "n_symbols",
            "ser_analytic",
            "ser_empirical",
            "binomial_std_err",
        ],
        cfg,
    );
    for p in &points {
        table.push_row(vec![
            p.l_t.to_string(),
            fmt_f64(p.gamma_bar_db),
            p.n_symbols.to_string(),
            fmt_f64(p.ser_analytic),
            fmt_f64(p.ser_empirical),
            fmt_f64(p.std_err),
        ]);
    }
    Ok(table)
}

/// Selected subsets of the three schemes for one realization and size.
#[derive(Debug, Clone)]
pub struct IndexMatchRow {
    pub realization: u64,
    pub l_t: usize,
    pub random: SelectionIndexSet,
    pub global: SelectionIndexSet,
    pub ew: SelectionIndexSet,
    /// Number of indices the Global and EW selections share.
    pub match_count: usize,
}

/// Per-realization selected indices and the Global/EW match counts.
pub fn index_matching_data(
    cfg: &ExperimentConfig,
    lt_values: &[usize],
) -> anyhow::Result<Vec<IndexMatchRow>> {
    let rows: Vec<Vec<IndexMatchRow>> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let tensor = generate_channel(&ChannelGenConfig {
                n_t: cfg.n_t,
                n_r: cfg.n_r,
                xpd_db: cfg.xpd_db,
                seed: sub_seed(cfg.seed, r),
            });
            lt_values
                .iter()
                .map(|&l_t| {
                    let ew = select_ew(&tensor, l_t, cfg.iterations).expect("valid selection");
                    let global =
                        select_global(&tensor, l_t, cfg.iterations).expect("valid selection");
                    let mut rng = stream_rng(cfg.seed, r, STREAM_ANGLES);
                    let random =
                        select_random_pol(&tensor, l_t, &mut rng).expect("valid selection");
                    IndexMatchRow {
                        realization: r,
                        l_t,
                        match_count: global.best_subset.match_count(&ew.best_subset),
                        random: random.best_subset,
                        global: global.best_subset,
                        ew: ew.best_subset,
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Table-shaped output (columns Random / G / EW / Matching Index) plus
/// aggregate match rates per selection size.
pub fn run_index_matching(cfg: &ExperimentConfig) -> anyhow::Result<ResultTable> {
    let lt_values = cfg.lt_values(&[1, 4, 6]);
    let rows = index_matching_data(cfg, &lt_values)?;
    let mut table = ResultTable::new(
        &[
            "realization",
            "l_t",
            "random_indices",
            "global_indices",
            "ew_indices",
            "matching_count",
        ],
        cfg,
    );
    for row in &rows {
        table.push_row(vec![
            (row.realization + 1).to_string(),
            row.l_t.to_string(),
            row.random.format_one_based(),
            row.global.format_one_based(),
            row.ew.format_one_based(),
            row.match_count.to_string(),
        ]);
    }
    let rates: Vec<serde_json::Value> = lt_values
        .iter()
        .map(|&l_t| {
            let matching: Vec<&IndexMatchRow> = rows.iter().filter(|r| r.l_t == l_t).collect();
            let rate = matching
                .iter()
                .map(|r| r.match_count as f64 / l_t as f64)
                .sum::<f64>()
                / matching.len().max(1) as f64;
            serde_json::json!({"l_t": l_t, "mean_match_rate": rate})
        })
        .collect();
    table.meta_insert("match_rates", serde_json::json!(rates));
    Ok(table)
}
