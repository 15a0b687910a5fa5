//! Spatial-multiplexing capacity experiments: angle sweeps on deterministic
//! channels, the joint-coding iteration trace, capacity cdfs against the
//! grid-search extremes, and mean capacity vs SNR.

use anyhow::{bail, Context};
use rayon::prelude::*;

use super::{db_to_linear, stream_rng, waterfilling_capacity, STREAM_ANGLES};
use crate::config::{fmt_f64, ExperimentConfig, ResultTable, SnrSpec};
use crate::gridsearch::brute_force_joint;
use prmimo::channel::{
    effective_channel, generate_channel, sub_seed, ChannelGenConfig, ChannelTensor,
    PolarizationConfig,
};
use prmimo::linalg::{frobenius_sq, svd};
use prmimo::polcoding::{joint_coding, optimal_polarization, tx_pd_matrix};

fn base_tensor(cfg: &ExperimentConfig) -> ChannelTensor {
    generate_channel(&ChannelGenConfig {
        n_t: cfg.n_t,
        n_r: cfg.n_r,
        xpd_db: cfg.xpd_db,
        seed: cfg.seed,
    })
}

fn grid_angles_deg(step_deg: f64) -> Vec<f64> {
    let n = (180.0 / step_deg).round() as usize;
    (0..n).map(|k| k as f64 * step_deg).collect()
}

/// Capacity over the two Tx polarization angles with the Rx elements held
/// vertical, on one deterministic channel realization. Requires `n_t == 2`.
pub fn run_capacity_vs_txangle(cfg: &ExperimentConfig) -> anyhow::Result<ResultTable> {
    if cfg.n_t != 2 {
        bail!("capacity-vs-txangle sweeps two Tx angles and needs n_t = 2");
    }
    let tensor = base_tensor(cfg);
    let snr_db = cfg.snr_single()?;
    let total_power = db_to_linear(snr_db);
    let rx_angles = vec![0.0; cfg.n_r];

    let mut table = ResultTable::new(&["theta_tx1_deg", "theta_tx2_deg", "capacity_bpshz"], cfg);
    let angles = grid_angles_deg(cfg.grid_step_deg);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &t1 in &angles {
        for &t2 in &angles {
            let config = PolarizationConfig::new(
                vec![t1.to_radians(), t2.to_radians()],
                rx_angles.clone(),
            )?;
            let c = waterfilling_capacity(&tensor, &config, total_power);
            if c > best.0 {
                best = (c, t1, t2);
            }
            table.push_row(vec![fmt_f64(t1), fmt_f64(t2), fmt_f64(c)]);
        }
    }

    // Closed-form per-element optimum for the same fixed Rx state.
    let mut closed = Vec::new();
    for j in 0..2 {
        let pd = tx_pd_matrix(&tensor, &rx_angles, j)?;
        closed.push(optimal_polarization(&pd));
    }
    let closed_cap = waterfilling_capacity(
        &tensor,
        &PolarizationConfig::new(closed.clone(), rx_angles)?,
        total_power,
    );
    table.meta_insert("grid_best_capacity", serde_json::json!(best.0));
    table.meta_insert("grid_best_tx_deg", serde_json::json!([best.1, best.2]));
    table.meta_insert(
        "closed_form_tx_deg",
        serde_json::json!(closed.iter().map(|a| a.to_degrees()).collect::<Vec<_>>()),
    );
    table.meta_insert("closed_form_capacity", serde_json::json!(closed_cap));
    Ok(table)
}

/// Capacity over the two Rx polarization angles with the Tx fixed to the
/// brute-force joint optimum. Requires `n_r == 2`.
pub fn run_capacity_vs_rxangle(cfg: &ExperimentConfig) -> anyhow::Result<ResultTable> {
    if cfg.n_r != 2 {
        bail!("capacity-vs-rxangle sweeps two Rx angles and needs n_r = 2");
    }
    let tensor = base_tensor(cfg);
    let snr_db = cfg.snr_single()?;
    let total_power = db_to_linear(snr_db);
    let joint = brute_force_joint(&tensor, cfg.grid_step_deg, snr_db)
        .context("grid search for the Tx reference state")?;
    let tx = joint.best_config.tx_angles.clone();

    let mut table = ResultTable::new(&["theta_rx1_deg", "theta_rx2_deg", "capacity_bpshz"], cfg);
    let angles = grid_angles_deg(cfg.grid_step_deg);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &r1 in &angles {
        for &r2 in &angles {
            let config =
                PolarizationConfig::new(tx.clone(), vec![r1.to_radians(), r2.to_radians()])?;
            let c = waterfilling_capacity(&tensor, &config, total_power);
            lo = lo.min(c);
            hi = hi.max(c);
            table.push_row(vec![fmt_f64(r1), fmt_f64(r2), fmt_f64(c)]);
        }
    }
    table.meta_insert(
        "tx_angles_deg",
        serde_json::json!(tx.iter().map(|a| a.to_degrees()).collect::<Vec<_>>()),
    );
    table.meta_insert("capacity_swing", serde_json::json!([hi, lo]));
    table.meta_insert("grid_joint_best_capacity", serde_json::json!(joint.best_capacity));
    Ok(table)
}

/// Angles, objective, and capacity after every half-step of one joint
/// pre/post coding run, with the grid-search optimum as reference.
pub fn run_joint_iteration_trace(cfg: &ExperimentConfig) -> anyhow::Result<ResultTable> {
    let tensor = base_tensor(cfg);
    let snr_db = cfg.snr_single()?;
    let total_power = db_to_linear(snr_db);

    let mut table = ResultTable::new(
        &[
            "half_step",
            "phase",
            "iteration",
            "tx_angles_deg",
            "rx_angles_deg",
            "objective_frob_sq",
            "capacity_bpshz",
        ],
        cfg,
    );

    // Re-run the loop one iteration at a time to expose the half-step
    // states (the library reports the final state and objective trace).
    let full = joint_coding(&tensor, cfg.iterations, 0.0);
    let fmt_angles = |angles: &[f64]| {
        angles
            .iter()
            .map(|a| fmt_f64(a.to_degrees()))
            .collect::<Vec<_>>()
            .join(";")
    };
    let capacity_of = |config: &PolarizationConfig| waterfilling_capacity(&tensor, config, total_power);

    let vertical = PolarizationConfig::vertical(cfg.n_t, cfg.n_r);
    table.push_row(vec![
        "0".into(),
        "init".into(),
        "0".into(),
        fmt_angles(&vertical.tx_angles),
        fmt_angles(&vertical.rx_angles),
        fmt_f64(full.objective_trace[0]),
        fmt_f64(capacity_of(&vertical)),
    ]);

    let mut half_step = 0usize;
    for iter in 1..=full.iterations_used {
        // State after the Tx sweep of `iter`: run iter iterations on a
        // tensor... reconstruct by replaying iter-1 full iterations plus
        // the Tx half-step explicitly.
        let replay = replay_half_steps(&tensor, iter);
        for (phase, config, objective) in replay {
            half_step += 1;
            table.push_row(vec![
                half_step.to_string(),
                phase.into(),
                iter.to_string(),
                fmt_angles(&config.tx_angles),
                fmt_angles(&config.rx_angles),
                fmt_f64(objective),
                fmt_f64(capacity_of(&config)),
            ]);
        }
    }

    let grid = brute_force_joint(&tensor, cfg.grid_step_deg, snr_db)?;
    table.meta_insert("grid_best_capacity", serde_json::json!(grid.best_capacity));
    table.meta_insert("converged", serde_json::json!(full.converged));
    table.meta_insert(
        "final_capacity",
        serde_json::json!(capacity_of(&full.final_config)),
    );
    Ok(table)
}

/// The two half-step states of iteration `iter` (1-based), replayed from
/// the all-vertical start.
fn replay_half_steps(
    tensor: &ChannelTensor,
    iter: usize,
) -> Vec<(&'static str, PolarizationConfig, f64)> {
    use prmimo::polcoding::rx_pd_matrix;

    let mut tx = vec![0.0f64; tensor.n_t()];
    let mut rx = vec![0.0f64; tensor.n_r()];
    let objective = |tx: &[f64], rx: &[f64]| {
        let config = PolarizationConfig::new(tx.to_vec(), rx.to_vec()).expect("finite");
        frobenius_sq(&effective_channel(tensor, &config).expect("dims").matrix)
    };
    let mut out = Vec::new();
    for q in 1..=iter {
        for j in 0..tensor.n_t() {
            if let Ok(pd) = tx_pd_matrix(tensor, &rx, j) {
                let theta = optimal_polarization(&pd);
                // Degenerate matrices keep the previous angle; mirrors the
                // library's tie-break only on the non-degenerate path.
                if pd.matrix.entries().iter().any(|z| z.norm() > 0.0) {
                    tx[j] = theta;
                }
            }
        }
        if q == iter {
            out.push((
                "tx",
                PolarizationConfig::new(tx.clone(), rx.clone()).expect("finite"),
                objective(&tx, &rx),
            ));
        }
        for i in 0..tensor.n_r() {
            if let Ok(pd) = rx_pd_matrix(tensor, &tx, i) {
                let theta = optimal_polarization(&pd);
                if pd.matrix.entries().iter().any(|z| z.norm() > 0.0) {
                    rx[i] = theta;
                }
            }
        }
        if q == iter {
            out.push((
                "rx",
                PolarizationConfig::new(tx.clone(), rx.clone()).expect("finite"),
                objective(&tx, &rx),
            ));
        }
    }
    out
}

/// Per-realization capacities for the cdf comparison.
#[derive(Debug, Clone)]
pub struct CapacityCdfSamples {
    pub joint: Vec<f64>,
    pub random: Vec<f64>,
    pub grid_best: Vec<f64>,
    pub grid_worst: Vec<f64>,
}

/// Capacities under joint coding, random polarization, and the grid
/// extremes, per realization (unsorted).
pub fn capacity_cdf_samples(cfg: &ExperimentConfig) -> anyhow::Result<CapacityCdfSamples> {
    let snr_db = cfg.snr_single()?;
    let total_power = db_to_linear(snr_db);
    let rows: Vec<(f64, f64, f64, f64)> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let tensor = generate_channel(&ChannelGenConfig {
                n_t: cfg.n_t,
                n_r: cfg.n_r,
                xpd_db: cfg.xpd_db,
                seed: sub_seed(cfg.seed, r),
            });
            let jc = joint_coding(&tensor, cfg.iterations, 0.0);
            let c_joint = waterfilling_capacity(&tensor, &jc.final_config, total_power);

            let mut rng = stream_rng(cfg.seed, r, STREAM_ANGLES);
            let random_cfg = PolarizationConfig::random_uniform(cfg.n_t, cfg.n_r, &mut rng);
            let c_random = waterfilling_capacity(&tensor, &random_cfg, total_power);

            let grid = brute_force_joint(&tensor, cfg.grid_step_deg, snr_db)
                .expect("grid within guard");
            (c_joint, c_random, grid.best_capacity, grid.worst_capacity)
        })
        .collect();

    let mut samples = CapacityCdfSamples {
        joint: Vec::with_capacity(rows.len()),
        random: Vec::with_capacity(rows.len()),
        grid_best: Vec::with_capacity(rows.len()),
        grid_worst: Vec::with_capacity(rows.len()),
    };
    for (a, b, c, d) in rows {
        samples.joint.push(a);
        samples.random.push(b);
        samples.grid_best.push(c);
        samples.grid_worst.push(d);
    }
    Ok(samples)
}

/// Sorted capacity columns forming the empirical cdfs.
pub fn run_capacity_cdf(cfg: &ExperimentConfig) -> anyhow::Result<ResultTable> {
    let mut samples = capacity_cdf_samples(cfg)?;
    for v in [
        &mut samples.joint,
        &mut samples.random,
        &mut samples.grid_best,
        &mut samples.grid_worst,
    ] {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let n = samples.joint.len();
    let mut table = ResultTable::new(
        &[
            "rank",
            "cdf_level",
            "capacity_joint",
            "capacity_random",
            "capacity_grid_best",
            "capacity_grid_worst",
        ],
        cfg,
    );
    for i in 0..n {
        table.push_row(vec![
            (i + 1).to_string(),
            fmt_f64((i + 1) as f64 / n as f64),
            fmt_f64(samples.joint[i]),
            fmt_f64(samples.random[i]),
            fmt_f64(samples.grid_best[i]),
            fmt_f64(samples.grid_worst[i]),
        ]);
    }
    Ok(table)
}

/// Mean-capacity curve over the SNR sweep for one array size.
#[derive(Debug, Clone)]
pub struct SnrCurve {
    pub n: usize,
    pub snr_db: Vec<f64>,
    pub joint: Vec<f64>,
    pub tx_only: Vec<f64>,
    pub random: Vec<f64>,
}

/// Mean capacity vs SNR for square arrays of 2, 3 and 4 elements, under
/// joint coding, Tx-only precoding (vertical Rx), and random polarization.
pub fn capacity_vs_snr_curves(cfg: &ExperimentConfig) -> anyhow::Result<Vec<SnrCurve>> {
    let snrs = cfg.snr_db.values();
    if snrs.is_empty() {
        bail!("capacity-vs-snr needs a non-empty snr_db sweep");
    }
    let sizes = [2usize, 3, 4];
    let mut curves = Vec::new();
    for (size_idx, &n) in sizes.iter().enumerate() {
        // Distinct channel streams per size, common across SNR points.
        let size_seed = cfg.seed.wrapping_add(size_idx as u64);
        let mode_sets: Vec<[Vec<f64>; 3]> = (0..cfg.realizations as u64)
            .into_par_iter()
            .map(|r| {
                let tensor = generate_channel(&ChannelGenConfig {
                    n_t: n,
                    n_r: n,
                    xpd_db: cfg.xpd_db,
                    seed: sub_seed(size_seed, r),
                });
                let jc = joint_coding(&tensor, cfg.iterations, 0.0);
                let sv_of = |config: &PolarizationConfig| -> Vec<f64> {
                    let eff = effective_channel(&tensor, config).expect("dims");
                    svd(&eff.matrix)
                        .expect("finite")
                        .singular_values
                        .iter()
                        .map(|s| s * s)
                        .collect()
                };
                // Tx-only: per-element optimum with the Rx held vertical.
                let rx_vertical = vec![0.0; n];
                let mut tx = vec![0.0; n];
                for j in 0..n {
                    let pd = tx_pd_matrix(&tensor, &rx_vertical, j).expect("valid index");
                    tx[j] = optimal_polarization(&pd);
                }
                let tx_only_cfg =
                    PolarizationConfig::new(tx, rx_vertical).expect("finite angles");
                let mut rng = stream_rng(size_seed, r, STREAM_ANGLES);
                let random_cfg = PolarizationConfig::random_uniform(n, n, &mut rng);
                [sv_of(&jc.final_config), sv_of(&tx_only_cfg), sv_of(&random_cfg)]
            })
            .collect();

        let mut curve = SnrCurve {
            n,
            snr_db: snrs.clone(),
            joint: Vec::with_capacity(snrs.len()),
            tx_only: Vec::with_capacity(snrs.len()),
            random: Vec::with_capacity(snrs.len()),
        };
        for &snr in &snrs {
            let p = db_to_linear(snr);
            let mut sums = [0.0f64; 3];
            for modes in &mode_sets {
                for (k, sv) in modes.iter().enumerate() {
                    sums[k] += super::capacity_of_modes(sv, p);
                }
            }
            let count = mode_sets.len() as f64;
            curve.joint.push(sums[0] / count);
            curve.tx_only.push(sums[1] / count);
            curve.random.push(sums[2] / count);
        }
        curves.push(curve);
    }
    Ok(curves)
}

/// Horizontal SNR gap (dB) between two mean-capacity curves, measured at
/// the capacity level the reference curve reaches at the top of the sweep.
/// Positive when `better` reaches the level at a lower SNR.
pub fn snr_gap_db(better: &[f64], reference: &[f64], snr_db: &[f64]) -> f64 {
    let level = *reference.last().expect("non-empty curve");
    let top = *snr_db.last().expect("non-empty sweep");
    top - crossing_snr(better, snr_db, level)
}

/// Linear interpolation of the SNR at which a non-decreasing capacity
/// curve crosses `level`.
fn crossing_snr(curve: &[f64], snr_db: &[f64], level: f64) -> f64 {
    for k in 0..curve.len() {
        if curve[k] >= level {
            if k == 0 {
                return snr_db[0];
            }
            let (c0, c1) = (curve[k - 1], curve[k]);
            let (s0, s1) = (snr_db[k - 1], snr_db[k]);
            let w = if c1 > c0 { (level - c0) / (c1 - c0) } else { 1.0 };
            return s0 + w * (s1 - s0);
        }
    }
    *snr_db.last().expect("non-empty sweep")
}

pub fn run_capacity_vs_snr(cfg: &ExperimentConfig) -> anyhow::Result<ResultTable> {
    let curves = capacity_vs_snr_curves(cfg)?;
    let mut header: Vec<String> = vec!["snr_db".into()];
    for c in &curves {
        for scheme in ["joint", "txonly", "random"] {
            header.push(format!("capacity_{scheme}_{0}x{0}", c.n));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut table = ResultTable::new(&header_refs, cfg);
    let snrs = &curves[0].snr_db;
    for (k, &snr) in snrs.iter().enumerate() {
        let mut row = vec![fmt_f64(snr)];
        for c in &curves {
            row.push(fmt_f64(c.joint[k]));
            row.push(fmt_f64(c.tx_only[k]));
            row.push(fmt_f64(c.random[k]));
        }
        table.push_row(row);
    }
    let gaps: Vec<serde_json::Value> = curves
        .iter()
        .map(|c| {
            serde_json::json!({
                "size": c.n,
                "joint_vs_random_db": snr_gap_db(&c.joint, &c.random, &c.snr_db),
            })
        })
        .collect();
    table.meta_insert("high_snr_gaps", serde_json::json!(gaps));
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates_linearly() {
        let curve = [1.0, 2.0, 3.0, 4.0];
        let snrs = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(crossing_snr(&curve, &snrs, 2.5), 1.5);
        assert_eq!(crossing_snr(&curve, &snrs, 1.0), 0.0);
        assert_eq!(crossing_snr(&curve, &snrs, 99.0), 3.0);
    }

    #[test]
    fn gap_of_shifted_curves() {
        // `better` reaches every level 2 dB earlier.
        let snrs: Vec<f64> = (0..21).map(|k| k as f64 * 0.5).collect();
        let reference: Vec<f64> = snrs.iter().map(|s| 0.3 * s).collect();
        let better: Vec<f64> = snrs.iter().map(|s| 0.3 * (s + 2.0)).collect();
        let gap = snr_gap_db(&better, &reference, &snrs);
        assert!((gap - 2.0).abs() < 1e-9);
    }
}
