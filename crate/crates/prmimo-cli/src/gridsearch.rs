//! Exhaustive capacity search over all Tx/Rx polarization angles on a
//! uniform grid. The grid covers [0, 180) degrees per angle: `p` and `-p`
//! span the same line, so the optimum set is unchanged while the sweep
//! halves per dimension.
//!
//! The 2x2 case is the workhorse (up to ~1.05e9 points at the 1-degree
//! step) and gets a dedicated kernel: per grid point the waterfilling
//! capacity of a 2-mode channel depends only on the Frobenius norm `T`
//! and squared determinant `D` of the effective matrix, and `2^C` has a
//! closed form in `(T, D)` requiring no logarithm. Whole pencils of the
//! innermost angle are skipped through interval bounds on `(T, D)`.

use anyhow::bail;
use num_complex::Complex64;
use rayon::prelude::*;

use prmimo::channel::{effective_channel, ChannelTensor, PolarizationConfig};
use prmimo::linalg::svd;
use prmimo::polcoding::{capacity, waterfill};

/// Grid-size guard: admits the 1-degree 2x2 sweep (180^4 points) while
/// rejecting anything materially larger.
pub const MAX_GRID_POINTS: u128 = 2_200_000_000;

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best_config: PolarizationConfig,
    pub best_capacity: f64,
    pub worst_config: PolarizationConfig,
    pub worst_capacity: f64,
}

/// Exhaustive search returning both capacity extremes over the grid.
pub fn brute_force_joint(
    tensor: &ChannelTensor,
    step_deg: f64,
    snr_db: f64,
) -> anyhow::Result<GridSearchResult> {
    let per_turn = 180.0 / step_deg;
    if !(step_deg > 0.0) || (per_turn - per_turn.round()).abs() > 1e-9 {
        bail!("step_deg must divide 180 evenly, got {step_deg}");
    }
    let n = per_turn.round() as usize;
    let dims = (tensor.n_t() + tensor.n_r()) as u32;
    let points = (n as u128).pow(dims);
    if points > MAX_GRID_POINTS {
        let needed = (MAX_GRID_POINTS as f64).powf(1.0 / dims as f64).floor();
        let suggestion = (180.0 / needed).ceil();
        bail!(
            "grid of {points} points exceeds the {MAX_GRID_POINTS} guard; \
             use a step of at least {suggestion} degrees for this array size"
        );
    }
    let total_power = 10f64.powf(snr_db / 10.0);

    if tensor.n_t() == 2 && tensor.n_r() == 2 {
        Ok(grid_2x2(tensor, n, total_power))
    } else {
        grid_general(tensor, n, total_power)
    }
}

#[inline]
fn angle_of(k: usize, n: usize) -> f64 {
    (k as f64) * std::f64::consts::PI / (n as f64)
}

/// `2^capacity` of a two-mode channel with eigenvalue sum `t` and
/// eigenvalue product `d` (of `H H^dagger`), noise power 1, waterfilled
/// total power `p`. Both modes are active iff `(p d)^2 >= t^2 - 4 d`.
#[inline]
fn pow2_capacity(t: f64, d: f64, p: f64) -> f64 {
    let pd = p * d;
    let disc = t * t - 4.0 * d;
    if pd * pd >= disc && d > 0.0 {
        let num = pd + t;
        num * num / (4.0 * d)
    } else {
        let sigma1 = 0.5 * (t + disc.max(0.0).sqrt());
        1.0 + p * sigma1
    }
}

/// Valid upper bound of `pow2_capacity` over `T <= t_hi`, `0 <= D <= d_hi`
/// (the map is increasing in `T` and valley-shaped in `D`).
#[inline]
fn pencil_upper(t_hi: f64, d_hi: f64, p: f64) -> f64 {
    let single = 1.0 + p * t_hi;
    if d_hi > 0.0 {
        let num = p * d_hi + t_hi;
        single.max(num * num / (4.0 * d_hi))
    } else {
        single
    }
}

/// Valid lower bound over `T >= t_lo`, any `D`: the valley bottom sits at
/// `D = T / p` with value `p T`.
#[inline]
fn pencil_lower(t_lo: f64, p: f64) -> f64 {
    if t_lo * p >= 4.0 {
        p * t_lo
    } else {
        1.0
    }
}

struct Tables {
    n: usize,
    /// Per block (row-major 2x2): `x[b][r * n + t] = p(r)^T H_b p(t)`.
    x: [Vec<Complex64>; 4],
    /// Squared magnitudes of `x`.
    a: [Vec<f64>; 4],
    /// Per-row aggregates for the pencil bounds, for blocks 01 and 11.
    a01_min: Vec<f64>,
    a01_max: Vec<f64>,
    m01_max: Vec<f64>,
    a11_min: Vec<f64>,
    a11_max: Vec<f64>,
    m11_max: Vec<f64>,
}

fn build_tables(tensor: &ChannelTensor, n: usize) -> Tables {
    let vecs: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let (s, c) = angle_of(k, n).sin_cos();
            [c, s]
        })
        .collect();
    let mut x: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n * n]);
    let mut a: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n * n]);
    for (b, slot) in x.iter_mut().enumerate() {
        let block = tensor.block(b / 2, b % 2);
        for (r, pr) in vecs.iter().enumerate() {
            for (t, pt) in vecs.iter().enumerate() {
                slot[r * n + t] = block.sandwich(*pr, *pt);
            }
        }
        for (av, xv) in a[b].iter_mut().zip(slot.iter()) {
            *av = xv.norm_sqr();
        }
    }
    let row_stats = |vals: &[f64], mods: &[Complex64]| {
        let mut mins = vec![f64::INFINITY; n];
        let mut maxs = vec![f64::NEG_INFINITY; n];
        let mut mmax = vec![0.0f64; n];
        for r in 0..n {
            for t in 0..n {
                let v = vals[r * n + t];
                mins[r] = mins[r].min(v);
                maxs[r] = maxs[r].max(v);
                mmax[r] = mmax[r].max(mods[r * n + t].norm());
            }
        }
        (mins, maxs, mmax)
    };
    let (a01_min, a01_max, m01_max) = row_stats(&a[1], &x[1]);
    let (a11_min, a11_max, m11_max) = row_stats(&a[3], &x[3]);
    Tables { n, x, a, a01_min, a01_max, m01_max, a11_min, a11_max, m11_max }
}

impl Tables {
    /// Exact `2^C` at one grid point `(r1, t1, r2, t2)`.
    #[inline]
    fn value_at(&self, r1: usize, t1: usize, r2: usize, t2: usize, p: f64) -> f64 {
        let n = self.n;
        let c1 = self.x[0][r1 * n + t1];
        let c2 = self.x[2][r2 * n + t1];
        let t = self.a[0][r1 * n + t1]
            + self.a[2][r2 * n + t1]
            + self.a[1][r1 * n + t2]
            + self.a[3][r2 * n + t2];
        let det = c1 * self.x[3][r2 * n + t2] - c2 * self.x[1][r1 * n + t2];
        pow2_capacity(t, det.norm_sqr(), p)
    }
}

fn grid_2x2(tensor: &ChannelTensor, n: usize, p: f64) -> GridSearchResult {
    let tables = build_tables(tensor, n);

    // Exact coarse pass seeds both extremes so pencil pruning bites early.
    let stride = (n / 12).max(1);
    let mut seed_max = f64::NEG_INFINITY;
    let mut seed_min = f64::INFINITY;
    for r1 in (0..n).step_by(stride) {
        for t1 in (0..n).step_by(stride) {
            for r2 in (0..n).step_by(stride) {
                for t2 in (0..n).step_by(stride) {
                    let v = tables.value_at(r1, t1, r2, t2, p);
                    seed_max = seed_max.max(v);
                    seed_min = seed_min.min(v);
                }
            }
        }
    }

    let (vmax, vmin) = (0..n)
        .into_par_iter()
        .map(|r1| sweep_r1(&tables, r1, p, seed_max, seed_min))
        .reduce(|| (seed_max, seed_min), |a, b| (a.0.max(b.0), a.1.min(b.1)));

    let best = locate(&tables, p, vmax, true).expect("max is attained on the grid");
    let worst = locate(&tables, p, vmin, false).expect("min is attained on the grid");

    let config_at = |idx: [usize; 4]| {
        PolarizationConfig::new(
            vec![angle_of(idx[1], n), angle_of(idx[3], n)],
            vec![angle_of(idx[0], n), angle_of(idx[2], n)],
        )
        .expect("grid angles are finite")
    };
    GridSearchResult {
        best_config: config_at(best),
        best_capacity: vmax.log2(),
        worst_config: config_at(worst),
        worst_capacity: vmin.log2(),
    }
}

/// Full sweep of one `r1` plane, pruning `(t1, r2)` pencils whose bounds
/// cannot move either running extreme.
fn sweep_r1(tables: &Tables, r1: usize, p: f64, mut vmax: f64, mut vmin: f64) -> (f64, f64) {
    let n = tables.n;
    let x01 = &tables.x[1][r1 * n..(r1 + 1) * n];
    let a01 = &tables.a[1][r1 * n..(r1 + 1) * n];
    for t1 in 0..n {
        let c1 = tables.x[0][r1 * n + t1];
        let a1 = tables.a[0][r1 * n + t1];
        let c1_mod = c1.norm();
        for r2 in 0..n {
            let c2 = tables.x[2][r2 * n + t1];
            let base = a1 + tables.a[2][r2 * n + t1];
            let t_hi = base + tables.a01_max[r1] + tables.a11_max[r2];
            let t_lo = base + tables.a01_min[r1] + tables.a11_min[r2];
            let d_mod = c1_mod * tables.m11_max[r2] + c2.norm() * tables.m01_max[r1];
            let want_max = pencil_upper(t_hi, d_mod * d_mod, p) > vmax;
            let want_min = pencil_lower(t_lo, p) < vmin;
            if !(want_max || want_min) {
                continue;
            }
            let x11 = &tables.x[3][r2 * n..(r2 + 1) * n];
            let a11 = &tables.a[3][r2 * n..(r2 + 1) * n];
            for t2 in 0..n {
                let t = base + a01[t2] + a11[t2];
                let det = c1 * x11[t2] - c2 * x01[t2];
                let v = pow2_capacity(t, det.norm_sqr(), p);
                if v > vmax {
                    vmax = v;
                }
                if v < vmin {
                    vmin = v;
                }
            }
        }
    }
    (vmax, vmin)
}

/// First grid point (scan order r1, t1, r2, t2) attaining the extreme
/// value exactly; the scan order makes the returned config deterministic.
fn locate(tables: &Tables, p: f64, target: f64, is_max: bool) -> Option<[usize; 4]> {
    let n = tables.n;
    for r1 in 0..n {
        for t1 in 0..n {
            let c1 = tables.x[0][r1 * n + t1];
            let a1 = tables.a[0][r1 * n + t1];
            for r2 in 0..n {
                let c2 = tables.x[2][r2 * n + t1];
                let base = a1 + tables.a[2][r2 * n + t1];
                if is_max {
                    let t_hi = base + tables.a01_max[r1] + tables.a11_max[r2];
                    let d_mod = c1.norm() * tables.m11_max[r2] + c2.norm() * tables.m01_max[r1];
                    if pencil_upper(t_hi, d_mod * d_mod, p) < target {
                        continue;
                    }
                } else {
                    let t_lo = base + tables.a01_min[r1] + tables.a11_min[r2];
                    if pencil_lower(t_lo, p) > target {
                        continue;
                    }
                }
                for t2 in 0..n {
                    if tables.value_at(r1, t1, r2, t2, p) == target {
                        return Some([r1, t1, r2, t2]);
                    }
                }
            }
        }
    }
    None
}

/// Reference path for arbitrary array sizes: flat enumeration of all
/// angle-index tuples, SVD + waterfilling per point. Guarded by
/// `MAX_GRID_POINTS`, intended for coarse steps and small arrays.
fn grid_general(tensor: &ChannelTensor, n: usize, total_power: f64) -> anyhow::Result<GridSearchResult> {
    let dims = tensor.n_t() + tensor.n_r();
    let points = (n as u64).pow(dims as u32);
    let decode = |flat: u64| -> Vec<usize> {
        // Most significant digit first, so enumeration order is
        // lexicographic in (tx angles, rx angles).
        let mut idx = vec![0usize; dims];
        let mut rest = flat;
        for pos in (0..dims).rev() {
            idx[pos] = (rest % n as u64) as usize;
            rest /= n as u64;
        }
        idx
    };
    let config_of = |idx: &[usize]| {
        PolarizationConfig::new(
            idx[..tensor.n_t()].iter().map(|&k| angle_of(k, n)).collect(),
            idx[tensor.n_t()..].iter().map(|&k| angle_of(k, n)).collect(),
        )
        .expect("grid angles are finite")
    };

    let mut best: Option<(f64, u64)> = None;
    let mut worst: Option<(f64, u64)> = None;
    for flat in 0..points {
        let idx = decode(flat);
        let config = config_of(&idx);
        let eff = effective_channel(tensor, &config)?;
        let sv: Vec<f64> = svd(&eff.matrix)?
            .singular_values
            .iter()
            .map(|s| s * s)
            .collect();
        let c = if sv.iter().all(|&s| s <= 0.0) {
            0.0
        } else {
            let alloc = waterfill(&sv, 1.0, total_power)?;
            capacity(&sv, &alloc)
        };
        if best.as_ref().map_or(true, |&(b, _)| c > b) {
            best = Some((c, flat));
        }
        if worst.as_ref().map_or(true, |&(w, _)| c < w) {
            worst = Some((c, flat));
        }
    }
    let (best_capacity, best_flat) = best.expect("non-empty grid");
    let (worst_capacity, worst_flat) = worst.expect("non-empty grid");
    Ok(GridSearchResult {
        best_config: config_of(&decode(best_flat)),
        best_capacity,
        worst_config: config_of(&decode(worst_flat)),
        worst_capacity,
    })
}
