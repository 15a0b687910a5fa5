//! Hybrid Tx antenna selection with maximum-ratio transmission over
//! polarization-reconfigurable elements: exhaustive subset enumeration,
//! partial effective channels, effective-SNR maximization under
//! element-wise (per-subset) or global polarization reconfiguration, and
//! eigenvalue bounds on the achievable SNR.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{effective_channel, ChannelTensor, PolarizationConfig};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, svd, ComplexMatrix};
use crate::polcoding::joint_coding;

/// Exhaustive enumeration is capped here; the experiments use at most 8.
pub const MAX_SELECTABLE_TX: usize = 16;

/// A strictly increasing set of selected Tx element indices (0-based in
/// code; rendered 1-based in CSV output, matching the selection tables).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionIndexSet {
    indices: Vec<usize>,
}

impl SelectionIndexSet {
    pub fn new(indices: Vec<usize>, n_t: usize) -> Result<Self> {
        if indices.is_empty() || indices.len() > n_t {
            return Err(Error::InvalidInput(format!(
                "subset size must be in 1..={n_t}, got {}",
                indices.len()
            )));
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("subset indices must be strictly increasing".into()));
        }
        if *indices.last().unwrap() >= n_t {
            return Err(Error::IndexOutOfRange(format!(
                "subset index {} out of range for n_t={n_t}",
                indices.last().unwrap()
            )));
        }
        Ok(Self { indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    /// Count of common elements with another subset.
    pub fn match_count(&self, other: &Self) -> usize {
        self.indices.iter().filter(|i| other.indices.contains(i)).count()
    }

    /// 1-based, semicolon-joined rendering for CSV rows, e.g. `1;3;4`.
    pub fn format_one_based(&self) -> String {
        self.indices
            .iter()
            .map(|i| (i + 1).to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// All `C(n_t, l_t)` subsets in lexicographic order.
pub fn enumerate_subsets(n_t: usize, l_t: usize) -> Result<Vec<SelectionIndexSet>> {
    if n_t == 0 || n_t > MAX_SELECTABLE_TX {
        return Err(Error::InvalidInput(format!(
            "n_t must be in 1..={MAX_SELECTABLE_TX}, got {n_t}"
        )));
    }
    if l_t == 0 || l_t > n_t {
        return Err(Error::InvalidInput(format!(
            "l_t must be in 1..={n_t}, got {l_t}"
        )));
    }
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..l_t).collect();
    loop {
        out.push(SelectionIndexSet { indices: current.clone() });
        // Advance to the next combination in lexicographic order.
        let mut pos = l_t;
        while pos > 0 {
            pos -= 1;
            if current[pos] < n_t - (l_t - pos) {
                current[pos] += 1;
                for k in pos + 1..l_t {
                    current[k] = current[k - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return Ok(out);
            }
        }
    }
}

/// The effective channel restricted to the selected Tx columns.
#[derive(Debug, Clone)]
pub struct PartialEffectiveChannel {
    /// `n_r x l_t` matrix.
    pub matrix: ComplexMatrix,
    pub subset: SelectionIndexSet,
    pub config: PolarizationConfig,
}

/// Builds the partial effective channel by slicing the selected columns
/// out of the full effective channel for `config`.
pub fn partial_effective(
    tensor: &ChannelTensor,
    config: &PolarizationConfig,
    subset: &SelectionIndexSet,
) -> Result<PartialEffectiveChannel> {
    if subset.as_slice().last().copied().unwrap_or(0) >= tensor.n_t() {
        return Err(Error::IndexOutOfRange(format!(
            "subset does not fit a tensor with n_t={}",
            tensor.n_t()
        )));
    }
    let eff = effective_channel(tensor, config)?;
    let matrix = eff.matrix.select_columns(subset.as_slice())?;
    Ok(PartialEffectiveChannel {
        matrix,
        subset: subset.clone(),
        config: config.clone(),
    })
}

/// Largest eigenvalue of `M M^dagger` (the squared dominant singular
/// value), computed from the smaller Gram matrix; closed form when that
/// Gram is at most 2x2.
fn lambda_max(matrix: &ComplexMatrix) -> f64 {
    let (rows, cols) = (matrix.rows(), matrix.cols());
    let d = rows.min(cols);
    if d == 1 {
        return frobenius_sq(matrix);
    }
    if d == 2 {
        // Hermitian 2x2 Gram of the shorter dimension.
        let gram = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
        };
        let (r0, r1): (Vec<Complex64>, Vec<Complex64>) = if rows <= cols {
            ((0..cols).map(|j| matrix.get(0, j)).collect(), (0..cols).map(|j| matrix.get(1, j)).collect())
        } else {
            ((0..rows).map(|i| matrix.get(i, 0)).collect(), (0..rows).map(|i| matrix.get(i, 1)).collect())
        };
        let g11 = gram(&r0, &r0).re;
        let g22 = gram(&r1, &r1).re;
        let g12 = gram(&r0, &r1);
        return 0.5 * (g11 + g22 + f64::hypot(g11 - g22, 2.0 * g12.norm()));
    }
    let s = svd(matrix).expect("finite matrix");
    let top = s.singular_values[0];
    top * top
}

/// Achievable effective SNR of the selected partial channel: the largest
/// eigenvalue of `H H^dagger`, i.e. the post-MRT/MRC combining gain.
pub fn effective_snr(partial: &PartialEffectiveChannel) -> f64 {
    lambda_max(&partial.matrix)
}

/// Eigenvalue bounds on the effective SNR: the sum of the nonzero
/// eigenvalues of `H H^dagger` (= squared Frobenius norm) from above, and
/// their average `sum / min(l_t, n_r)` from below.
pub fn snr_bounds(partial: &PartialEffectiveChannel) -> (f64, f64) {
    let upper = frobenius_sq(&partial.matrix);
    let rank_cap = partial.matrix.rows().min(partial.matrix.cols()) as f64;
    (upper / rank_cap, upper)
}

/// Polarization reconfiguration strategy used for a selection outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Element-wise: polarization re-optimized per candidate subset.
    Ew,
    /// Global: polarization optimized once on the full array.
    Global,
    /// Uniform random polarization (conventional HS/MRT baseline).
    RandomPol,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Ew => write!(f, "EW"),
            Scheme::Global => write!(f, "Global"),
            Scheme::RandomPol => write!(f, "RandomPol"),
        }
    }
}

/// Result of one hybrid-selection run.
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub best_subset: SelectionIndexSet,
    /// `lambda_max` of the winning partial channel, linear scale.
    pub effective_snr: f64,
    pub scheme: Scheme,
    /// Full-array polarization state used to build the winning partial
    /// channel. For the EW scheme, unselected Tx elements keep angle 0.
    pub config_used: PolarizationConfig,
    /// `(lower, upper)` eigenvalue bounds of the winning partial channel.
    pub bounds: (f64, f64),
}

impl SelectionOutcome {
    /// CSV row per the documented layout:
    /// `realization,scheme,l_t,indices,effective_snr,lower_bound,upper_bound`.
    pub fn csv_row(&self, realization_id: u64) -> String {
        format!(
            "{},{},{},{},{:?},{:?},{:?}",
            realization_id,
            self.scheme,
            self.best_subset.len(),
            self.best_subset.format_one_based(),
            self.effective_snr,
            self.bounds.0,
            self.bounds.1
        )
    }

    pub fn csv_header() -> &'static str {
        "realization,scheme,l_t,indices,effective_snr,lower_bound,upper_bound"
    }
}

/// Scans all subsets of the columns of a fixed effective channel and
/// returns the lexicographically first maximizer of `lambda_max`.
fn best_subset_of_effective(
    eff_matrix: &ComplexMatrix,
    n_t: usize,
    l_t: usize,
) -> Result<(SelectionIndexSet, f64)> {
    let subsets = enumerate_subsets(n_t, l_t)?;
    let mut best: Option<(SelectionIndexSet, f64)> = None;
    for subset in subsets {
        let partial = eff_matrix.select_columns(subset.as_slice())?;
        let snr = lambda_max(&partial);
        match &best {
            Some((_, s)) if snr <= *s => {}
            _ => best = Some((subset, snr)),
        }
    }
    Ok(best.expect("at least one subset"))
}

/// Element-wise (per-subset) polarization reconfiguration: joint coding is
/// re-run on every candidate subset, then the subset with the largest
/// `lambda_max` wins. Ties break to the lexicographically smallest subset.
pub fn select_ew(tensor: &ChannelTensor, l_t: usize, iterations: usize) -> Result<SelectionOutcome> {
    let subsets = enumerate_subsets(tensor.n_t(), l_t)?;
    let mut best: Option<(SelectionIndexSet, f64, PolarizationConfig)> = None;
    for subset in subsets {
        let restricted = tensor.select_tx_columns(subset.as_slice())?;
        let coding = joint_coding(&restricted, iterations, 0.0);
        let eff = effective_channel(&restricted, &coding.final_config)?;
        let snr = lambda_max(&eff.matrix);
        match &best {
            Some((_, s, _)) if snr <= *s => {}
            _ => best = Some((subset, snr, coding.final_config)),
        }
    }
    let (subset, snr, sub_config) = best.expect("at least one subset");

    // Expand the per-subset angles back onto the full array.
    let mut tx_angles = vec![0.0; tensor.n_t()];
    for (pos, &j) in subset.as_slice().iter().enumerate() {
        tx_angles[j] = sub_config.tx_angles[pos];
    }
    let config = PolarizationConfig::new(tx_angles, sub_config.rx_angles.clone())?;
    let partial = partial_effective(tensor, &config, &subset)?;
    Ok(SelectionOutcome {
        bounds: snr_bounds(&partial),
        best_subset: subset,
        effective_snr: snr,
        scheme: Scheme::Ew,
        config_used: config,
    })
}

/// Global polarization reconfiguration: joint coding runs once on the full
/// array, then subsets are scanned under that single polarization state.
pub fn select_global(
    tensor: &ChannelTensor,
    l_t: usize,
    iterations: usize,
) -> Result<SelectionOutcome> {
    let coding = joint_coding(tensor, iterations, 0.0);
    select_with_config(tensor, l_t, coding.final_config, Scheme::Global)
}

/// Conventional HS/MRT baseline: uniform random polarization per element,
/// then exhaustive subset selection.
pub fn select_random_pol(
    tensor: &ChannelTensor,
    l_t: usize,
    rng: &mut impl Rng,
) -> Result<SelectionOutcome> {
    let config = PolarizationConfig::random_uniform(tensor.n_t(), tensor.n_r(), rng);
    select_with_config(tensor, l_t, config, Scheme::RandomPol)
}

fn select_with_config(
    tensor: &ChannelTensor,
    l_t: usize,
    config: PolarizationConfig,
    scheme: Scheme,
) -> Result<SelectionOutcome> {
    let eff = effective_channel(tensor, &config)?;
    let (subset, snr) = best_subset_of_effective(&eff.matrix, tensor.n_t(), l_t)?;
    let partial = partial_effective(tensor, &config, &subset)?;
    Ok(SelectionOutcome {
        bounds: snr_bounds(&partial),
        best_subset: subset,
        effective_snr: snr,
        scheme,
        config_used: config,
    })
}

/// Dominant singular triple of the partial channel: MRT weights `u`
/// (length `l_t`), MRC weights `w` (length `n_r`), and the dominant
/// singular value, with `w^dagger H u = sigma_max`.
pub fn mrt_mrc_weights(partial: &PartialEffectiveChannel) -> (Vec<Complex64>, Vec<Complex64>, f64) {
    let s = svd(&partial.matrix).expect("finite matrix");
    let sigma = s.singular_values[0];
    let w: Vec<Complex64> = (0..partial.matrix.rows()).map(|i| s.left_vectors.get(i, 0)).collect();
    let u: Vec<Complex64> = (0..partial.matrix.cols()).map(|j| s.right_vectors.get(j, 0)).collect();
    (u, w, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channel, ChannelGenConfig, PolarizationBasisMatrix};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn enumerate_3_choose_2() {
        let subsets = enumerate_subsets(3, 2).unwrap();
        let listed: Vec<&[usize]> = subsets.iter().map(|s| s.as_slice()).collect();
        assert_eq!(listed, vec![&[0, 1][..], &[0, 2][..], &[1, 2][..]]);
    }

    #[test]
    fn enumerate_full_set() {
        let subsets = enumerate_subsets(4, 4).unwrap();
        assert_eq!(subsets.len(), 1);
        assert_eq!(subsets[0].as_slice(), &[0, 1, 2, 3]);
    }

    #[test]
    fn enumerate_8_choose_4_has_binomial_count() {
        let subsets = enumerate_subsets(8, 4).unwrap();
        assert_eq!(subsets.len(), 70);
        let mut seen = std::collections::HashSet::new();
        for s in &subsets {
            assert!(seen.insert(s.as_slice().to_vec()), "duplicate subset");
        }
        // Lexicographic order.
        for w in subsets.windows(2) {
            assert!(w[0].as_slice() < w[1].as_slice());
        }
    }

    #[test]
    fn enumerate_rejects_oversized() {
        assert!(enumerate_subsets(3, 4).is_err());
        assert!(enumerate_subsets(0, 1).is_err());
        assert!(enumerate_subsets(17, 2).is_err());
    }

    #[test]
    fn partial_full_subset_equals_effective_channel() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 3, n_r: 2, xpd_db: 0.0, seed: 1 });
        let config = PolarizationConfig::vertical(3, 2);
        let subset = SelectionIndexSet::new(vec![0, 1, 2], 3).unwrap();
        let partial = partial_effective(&tensor, &config, &subset).unwrap();
        let eff = effective_channel(&tensor, &config).unwrap();
        assert_eq!(partial.matrix, eff.matrix);
    }

    #[test]
    fn partial_single_column() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 3, n_r: 2, xpd_db: 0.0, seed: 2 });
        let config = PolarizationConfig::vertical(3, 2);
        let subset = SelectionIndexSet::new(vec![1], 3).unwrap();
        let partial = partial_effective(&tensor, &config, &subset).unwrap();
        let eff = effective_channel(&tensor, &config).unwrap();
        for i in 0..2 {
            assert_eq!(partial.matrix.get(i, 0), eff.matrix.get(i, 1));
        }
    }

    #[test]
    fn partial_random_subset_matches_column_slices() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 5, n_r: 2, xpd_db: 0.0, seed: 3 });
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let config = PolarizationConfig::random_uniform(5, 2, &mut rng);
        let subset = SelectionIndexSet::new(vec![0, 2, 4], 5).unwrap();
        let partial = partial_effective(&tensor, &config, &subset).unwrap();
        let eff = effective_channel(&tensor, &config).unwrap();
        for i in 0..2 {
            for (col, &j) in [0usize, 2, 4].iter().enumerate() {
                assert_eq!(partial.matrix.get(i, col), eff.matrix.get(i, j));
            }
        }
    }

    #[test]
    fn effective_snr_scalar_case() {
        let m = ComplexMatrix::new(1, 1, vec![c(2.0, 0.0)]).unwrap();
        let partial = PartialEffectiveChannel {
            matrix: m,
            subset: SelectionIndexSet::new(vec![0], 1).unwrap(),
            config: PolarizationConfig::vertical(1, 1),
        };
        assert_abs_diff_eq!(effective_snr(&partial), 4.0, epsilon = 1e-15);
        let (lo, hi) = snr_bounds(&partial);
        assert_abs_diff_eq!(lo, 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 4.0, epsilon = 1e-15);
    }

    #[test]
    fn effective_snr_rank_one_outer_product() {
        // u v^dagger has lambda_max = |u|^2 |v|^2.
        let u = [c(1.0, 1.0), c(0.0, -2.0)];
        let v = [c(0.5, 0.0), c(1.0, -1.0), c(0.0, 0.5)];
        let m = ComplexMatrix::from_fn(2, 3, |i, j| u[i] * v[j].conj());
        let partial = PartialEffectiveChannel {
            matrix: m,
            subset: SelectionIndexSet::new(vec![0, 1, 2], 3).unwrap(),
            config: PolarizationConfig::vertical(3, 2),
        };
        let norm_u: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        let norm_v: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(effective_snr(&partial), norm_u * norm_v, epsilon = 1e-10);
    }

    #[test]
    fn effective_snr_matches_power_iteration() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 4, n_r: 2, xpd_db: 0.0, seed: 9 });
        let config = PolarizationConfig::vertical(4, 2);
        let subset = SelectionIndexSet::new(vec![0, 1, 2, 3], 4).unwrap();
        let partial = partial_effective(&tensor, &config, &subset).unwrap();

        // Power iteration on H H^dagger as an independent oracle.
        let h = &partial.matrix;
        let mut v = vec![c(1.0, 0.0); h.rows()];
        let mut lambda = 0.0;
        for _ in 0..2000 {
            // w = H^dagger v, then v' = H w.
            let mut w = vec![c(0.0, 0.0); h.cols()];
            for j in 0..h.cols() {
                for i in 0..h.rows() {
                    w[j] += h.get(i, j).conj() * v[i];
                }
            }
            let mut next = vec![c(0.0, 0.0); h.rows()];
            for i in 0..h.rows() {
                for j in 0..h.cols() {
                    next[i] += h.get(i, j) * w[j];
                }
            }
            let norm: f64 = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            lambda = norm;
            for z in &mut next {
                *z /= norm;
            }
            v = next;
        }
        assert!((effective_snr(&partial) - lambda).abs() <= 1e-9 * lambda.max(1.0));
    }

    #[test]
    fn bounds_sandwich_random_partial() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 4, n_r: 2, xpd_db: 0.0, seed: 10 });
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let config = PolarizationConfig::random_uniform(4, 2, &mut rng);
        let subset = SelectionIndexSet::new(vec![0, 1, 2, 3], 4).unwrap();
        let partial = partial_effective(&tensor, &config, &subset).unwrap();
        let snr = effective_snr(&partial);
        let (lo, hi) = snr_bounds(&partial);
        assert!(lo <= snr + 1e-9 && snr <= hi + 1e-9);
        // Cross-check the upper bound against the SVD spectrum.
        let sum_sq: f64 = svd(&partial.matrix)
            .unwrap()
            .singular_values
            .iter()
            .map(|s| s * s)
            .sum();
        assert_abs_diff_eq!(hi, sum_sq, epsilon = 1e-9 * sum_sq.max(1.0));
    }

    #[test]
    fn bounds_collapse_single_rx() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 4, n_r: 1, xpd_db: 0.0, seed: 12 });
        let config = PolarizationConfig::vertical(4, 1);
        let subset = SelectionIndexSet::new(vec![0, 2], 4).unwrap();
        let partial = partial_effective(&tensor, &config, &subset).unwrap();
        let (lo, hi) = snr_bounds(&partial);
        assert_eq!(lo, hi);
        assert!((effective_snr(&partial) - hi).abs() <= 1e-9 * hi.max(1.0));
    }

    #[test]
    fn ew_and_global_coincide_at_full_selection() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 3, n_r: 2, xpd_db: 0.0, seed: 13 });
        let ew = select_ew(&tensor, 3, 5).unwrap();
        let global = select_global(&tensor, 3, 5).unwrap();
        assert_eq!(ew.best_subset, global.best_subset);
        assert_abs_diff_eq!(ew.effective_snr, global.effective_snr, epsilon = 1e-9);
    }

    #[test]
    fn ew_selects_dominant_column() {
        // Column 2 dominates element-wise in every polarization: its block
        // entries are scaled-up copies of column 1's.
        let tensor = generate_channel(&ChannelGenConfig { n_t: 1, n_r: 2, xpd_db: 0.0, seed: 14 });
        let mut blocks = Vec::new();
        for i in 0..2 {
            let b = *tensor.block(i, 0);
            blocks.push(b);
            let scale = c(3.0, 0.0);
            blocks.push(PolarizationBasisMatrix {
                hvv: b.hvv * scale,
                hvh: b.hvh * scale,
                hhv: b.hhv * scale,
                hhh: b.hhh * scale,
            });
        }
        let two_col = ChannelTensor::new(2, 2, blocks).unwrap();
        let out = select_ew(&two_col, 1, 5).unwrap();
        assert_eq!(out.best_subset.as_slice(), &[1]);
    }

    #[test]
    fn ew_matches_exhaustive_oracle() {
        // Independent re-run of per-subset joint coding, scanning all
        // subsets explicitly.
        let tensor = generate_channel(&ChannelGenConfig { n_t: 4, n_r: 2, xpd_db: 0.0, seed: 15 });
        let l_t = 2;
        let out = select_ew(&tensor, l_t, 5).unwrap();

        let mut best_snr = f64::NEG_INFINITY;
        let mut best_subset = None;
        for subset in enumerate_subsets(4, l_t).unwrap() {
            let restricted = tensor.select_tx_columns(subset.as_slice()).unwrap();
            let coding = joint_coding(&restricted, 5, 0.0);
            let eff = effective_channel(&restricted, &coding.final_config).unwrap();
            let s = svd(&eff.matrix).unwrap();
            let snr = s.singular_values[0] * s.singular_values[0];
            if snr > best_snr {
                best_snr = snr;
                best_subset = Some(subset);
            }
        }
        assert_eq!(out.best_subset, best_subset.unwrap());
        assert_abs_diff_eq!(out.effective_snr, best_snr, epsilon = 1e-9 * best_snr);
    }

    #[test]
    fn global_matches_two_phase_oracle() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 8, n_r: 2, xpd_db: 0.0, seed: 16 });
        let l_t = 4;
        let out = select_global(&tensor, l_t, 5).unwrap();

        // Phase 1: global coding; phase 2: exhaustive scan via SVD.
        let coding = joint_coding(&tensor, 5, 0.0);
        let eff = effective_channel(&tensor, &coding.final_config).unwrap();
        let mut best_snr = f64::NEG_INFINITY;
        let mut best_subset = None;
        for subset in enumerate_subsets(8, l_t).unwrap() {
            let partial = eff.matrix.select_columns(subset.as_slice()).unwrap();
            let s = svd(&partial).unwrap();
            let snr = s.singular_values[0] * s.singular_values[0];
            if snr > best_snr {
                best_snr = snr;
                best_subset = Some(subset);
            }
        }
        assert_eq!(out.best_subset, best_subset.unwrap());
        assert_abs_diff_eq!(out.effective_snr, best_snr, epsilon = 1e-9 * best_snr);
    }

    #[test]
    fn global_single_element_case() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 1, n_r: 1, xpd_db: 0.0, seed: 17 });
        let out = select_global(&tensor, 1, 5).unwrap();
        // SNR equals |h_eff|^2 under the optimal polarization state.
        let eff = effective_channel(&tensor, &out.config_used).unwrap();
        assert_abs_diff_eq!(
            out.effective_snr,
            eff.matrix.get(0, 0).norm_sqr(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn random_pol_is_deterministic_given_seed() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 6, n_r: 2, xpd_db: 0.0, seed: 18 });
        let mut rng1 = ChaCha8Rng::seed_from_u64(100);
        let mut rng2 = ChaCha8Rng::seed_from_u64(100);
        let a = select_random_pol(&tensor, 3, &mut rng1).unwrap();
        let b = select_random_pol(&tensor, 3, &mut rng2).unwrap();
        assert_eq!(a.best_subset, b.best_subset);
        assert_eq!(a.effective_snr, b.effective_snr);
    }

    #[test]
    fn random_pol_full_selection_returns_full_set() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 4, n_r: 2, xpd_db: 0.0, seed: 19 });
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let out = select_random_pol(&tensor, 4, &mut rng).unwrap();
        assert_eq!(out.best_subset.as_slice(), &[0, 1, 2, 3]);
    }

    #[test]
    fn mrt_mrc_weights_reach_sigma_max() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 4, n_r: 2, xpd_db: 0.0, seed: 21 });
        let out = select_ew(&tensor, 2, 5).unwrap();
        let partial = partial_effective(&tensor, &out.config_used, &out.best_subset).unwrap();
        let (u, w, sigma) = mrt_mrc_weights(&partial);
        assert_abs_diff_eq!(sigma * sigma, out.effective_snr, epsilon = 1e-9 * out.effective_snr);
        // w^dagger H u = sigma.
        let mut acc = c(0.0, 0.0);
        for i in 0..partial.matrix.rows() {
            for j in 0..partial.matrix.cols() {
                acc += w[i].conj() * partial.matrix.get(i, j) * u[j];
            }
        }
        assert_abs_diff_eq!(acc.re, sigma, epsilon = 1e-9 * sigma.max(1.0));
        assert!(acc.im.abs() < 1e-9);
        let norm_u: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        let norm_w: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(norm_u, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(norm_w, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn csv_row_layout() {
        let tensor = generate_channel(&ChannelGenConfig { n_t: 3, n_r: 2, xpd_db: 0.0, seed: 22 });
        let out = select_global(&tensor, 2, 5).unwrap();
        let row = out.csv_row(7);
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[0], "7");
        assert_eq!(fields[1], "Global");
        assert_eq!(fields[2], "2");
        assert!(fields[3].split(';').all(|s| s.parse::<usize>().is_ok()));
    }
}
