//! Polarization pre/post coding: polarization-determinant matrices, the
//! closed-form per-element optimal polarization angle, SVD waterfilling
//! capacity, and the alternating joint pre/post coding loop.
//!
//! The per-element update maximizes a quadratic form `p^T M p` over real
//! unit vectors `p`, where `M` is the 2x2 Hermitian accumulation of channel
//! blocks against the opposite link end. The Frobenius norm of the
//! effective channel decomposes as a sum of such forms, one per element,
//! so a full sweep over one link end maximizes it exactly with the other
//! end held fixed.

use num_complex::Complex64;

use crate::channel::{
    effective_channel, polarization_vector, ChannelTensor, PolarizationConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{eig2_symmetric_part, frobenius_sq, ComplexMatrix};

/// Which link end a polarization-determinant matrix belongs to (0-based
/// element index).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdSide {
    Tx(usize),
    Rx(usize),
}

/// 2x2 Hermitian PSD matrix whose quadratic form gives the column-sum
/// (Tx side) or row-sum (Rx side) of squared effective-channel envelopes.
#[derive(Debug, Clone)]
pub struct PolarizationDeterminantMatrix {
    pub matrix: ComplexMatrix,
    pub side: PdSide,
}

impl PolarizationDeterminantMatrix {
    pub fn new(matrix: ComplexMatrix, side: PdSide) -> Result<Self> {
        if matrix.rows() != 2 || matrix.cols() != 2 {
            return Err(Error::InvalidDimensions(
                "polarization-determinant matrix must be 2x2".into(),
            ));
        }
        let eig = eig2_symmetric_part(&matrix)?; // also enforces Hermitian
        if eig.lambda1 < -1e-10 {
            return Err(Error::InvalidInput(format!(
                "polarization-determinant matrix must be PSD, got eigenvalue {}",
                eig.lambda1
            )));
        }
        Ok(Self { matrix, side })
    }
}

/// Accumulates `sum_i (H_ij^dagger p_rx_i)(H_ij^dagger p_rx_i)^dagger`
/// as a stack 2x2; shared by the public op and the coding loop.
fn tx_pd_accum(tensor: &ChannelTensor, rx_vecs: &[[f64; 2]], j: usize) -> [Complex64; 4] {
    let mut m = [Complex64::new(0.0, 0.0); 4]; // row-major 2x2
    for (i, p) in rx_vecs.iter().enumerate() {
        let w = tensor.block(i, j).apply_rx_conj(*p);
        m[0] += w[0] * w[0].conj();
        m[1] += w[0] * w[1].conj();
        m[2] += w[1] * w[0].conj();
        m[3] += w[1] * w[1].conj();
    }
    m
}

/// `sum_j (H_ij p_tx_j)(H_ij p_tx_j)^dagger`.
fn rx_pd_accum(tensor: &ChannelTensor, tx_vecs: &[[f64; 2]], i: usize) -> [Complex64; 4] {
    let mut m = [Complex64::new(0.0, 0.0); 4];
    for (j, p) in tx_vecs.iter().enumerate() {
        let w = tensor.block(i, j).apply_tx(*p);
        m[0] += w[0] * w[0].conj();
        m[1] += w[0] * w[1].conj();
        m[2] += w[1] * w[0].conj();
        m[3] += w[1] * w[1].conj();
    }
    m
}

/// `sum_i H_ij^dagger H_ij`: the column Gram with the Rx projector dropped.
fn tx_unprojected_accum(tensor: &ChannelTensor, j: usize) -> [Complex64; 4] {
    let mut m = [Complex64::new(0.0, 0.0); 4];
    for i in 0..tensor.n_r() {
        let b = tensor.block(i, j);
        let col_v = [b.hvv, b.hhv];
        let col_h = [b.hvh, b.hhh];
        m[0] += col_v[0].conj() * col_v[0] + col_v[1].conj() * col_v[1];
        m[1] += col_v[0].conj() * col_h[0] + col_v[1].conj() * col_h[1];
        m[2] += col_h[0].conj() * col_v[0] + col_h[1].conj() * col_v[1];
        m[3] += col_h[0].conj() * col_h[0] + col_h[1].conj() * col_h[1];
    }
    m
}

/// `sum_j H_ij H_ij^dagger`: the row Gram with the Tx projector dropped.
fn rx_unprojected_accum(tensor: &ChannelTensor, i: usize) -> [Complex64; 4] {
    let mut m = [Complex64::new(0.0, 0.0); 4];
    for j in 0..tensor.n_t() {
        let b = tensor.block(i, j);
        let row_v = [b.hvv, b.hvh];
        let row_h = [b.hhv, b.hhh];
        m[0] += row_v[0] * row_v[0].conj() + row_v[1] * row_v[1].conj();
        m[1] += row_v[0] * row_h[0].conj() + row_v[1] * row_h[1].conj();
        m[2] += row_h[0] * row_v[0].conj() + row_h[1] * row_v[1].conj();
        m[3] += row_h[0] * row_h[0].conj() + row_h[1] * row_h[1].conj();
    }
    m
}

fn pd_from_accum(m: [Complex64; 4], side: PdSide) -> PolarizationDeterminantMatrix {
    let matrix = ComplexMatrix::new(2, 2, m.to_vec()).expect("accumulated 2x2 is finite");
    PolarizationDeterminantMatrix::new(matrix, side).expect("accumulation is Hermitian PSD")
}

/// Tx-polarization-determinant matrix for Tx element `j` (0-based):
/// its quadratic form in `p_tx_j` is the column-`j` sum of `|h_eff|^2`.
pub fn tx_pd_matrix(
    tensor: &ChannelTensor,
    rx_angles: &[f64],
    j: usize,
) -> Result<PolarizationDeterminantMatrix> {
    if j >= tensor.n_t() {
        return Err(Error::IndexOutOfRange(format!(
            "tx element {j} out of range for n_t={}",
            tensor.n_t()
        )));
    }
    if rx_angles.len() != tensor.n_r() {
        return Err(Error::InvalidDimensions(format!(
            "expected {} rx angles, got {}",
            tensor.n_r(),
            rx_angles.len()
        )));
    }
    let rx_vecs: Vec<[f64; 2]> = rx_angles.iter().map(|&t| polarization_vector(t)).collect();
    Ok(pd_from_accum(tx_pd_accum(tensor, &rx_vecs, j), PdSide::Tx(j)))
}

/// Rx-polarization-determinant matrix for Rx element `i` (0-based):
/// its quadratic form in `p_rx_i` is the row-`i` sum of `|h_eff|^2`.
pub fn rx_pd_matrix(
    tensor: &ChannelTensor,
    tx_angles: &[f64],
    i: usize,
) -> Result<PolarizationDeterminantMatrix> {
    if i >= tensor.n_r() {
        return Err(Error::IndexOutOfRange(format!(
            "rx element {i} out of range for n_r={}",
            tensor.n_r()
        )));
    }
    if tx_angles.len() != tensor.n_t() {
        return Err(Error::InvalidDimensions(format!(
            "expected {} tx angles, got {}",
            tensor.n_t(),
            tx_angles.len()
        )));
    }
    let tx_vecs: Vec<[f64; 2]> = tx_angles.iter().map(|&t| polarization_vector(t)).collect();
    Ok(pd_from_accum(rx_pd_accum(tensor, &tx_vecs, i), PdSide::Rx(i)))
}

/// Dominant-eigenvector angle of the real symmetric part, or `None` when
/// the spectrum is degenerate (every unit vector is an equal maximizer).
fn dominant_angle(m: &[Complex64; 4]) -> Option<f64> {
    let a = m[0].re;
    let d = m[3].re;
    let b = 0.5 * (m[1].re + m[2].re);
    let scale = a.abs().max(d.abs()).max(b.abs()).max(1.0);
    let r = f64::hypot(0.5 * (a - d), b);
    if r <= 1e-12 * scale {
        return None;
    }
    let theta = 0.5 * f64::atan2(2.0 * b, a - d);
    Some(crate::channel::canonical_angle(theta))
}

fn optimal_angle_from_accum(m: &[Complex64; 4]) -> f64 {
    dominant_angle(m).unwrap_or(0.0)
}

/// Angle of the dominant eigenvector of `Re(pd)`, canonicalized to
/// `[-pi/2, pi/2)`. Maximizes `p^T Re(pd) p` over real unit vectors.
pub fn optimal_polarization(pd: &PolarizationDeterminantMatrix) -> f64 {
    let m = [
        pd.matrix.get(0, 0),
        pd.matrix.get(0, 1),
        pd.matrix.get(1, 0),
        pd.matrix.get(1, 1),
    ];
    optimal_angle_from_accum(&m)
}

/// Waterfilling power allocation over eigenmodes.
#[derive(Debug, Clone)]
pub struct WaterfillingAllocation {
    /// Per-mode powers, same order as the input `sv_squared`.
    pub powers: Vec<f64>,
    /// Water level epsilon: `P_k = max(0, epsilon - noise_power / sv_squared_k)`.
    pub threshold: f64,
    pub noise_power: f64,
    pub total_power: f64,
}

/// Solves the waterfilling conditions by iterative active-set removal:
/// assume all nonzero modes active, solve for the level, drop modes that
/// would receive negative power, repeat.
pub fn waterfill(
    sv_squared: &[f64],
    noise_power: f64,
    total_power: f64,
) -> Result<WaterfillingAllocation> {
    if sv_squared.is_empty() {
        return Err(Error::EmptyInput("waterfill needs at least one mode".into()));
    }
    if sv_squared.iter().any(|&s| !s.is_finite() || s < 0.0) {
        return Err(Error::InvalidInput("mode gains must be finite and non-negative".into()));
    }
    if !(noise_power > 0.0) || !(total_power > 0.0) {
        return Err(Error::InvalidInput("noise and total power must be positive".into()));
    }
    if sv_squared.iter().all(|&s| s == 0.0) {
        return Err(Error::InvalidInput("all mode gains are zero".into()));
    }

    // Candidate modes sorted by decreasing gain; the active set under
    // waterfilling is always a prefix of this order.
    let mut order: Vec<usize> = (0..sv_squared.len()).filter(|&k| sv_squared[k] > 0.0).collect();
    order.sort_by(|&a, &b| sv_squared[b].partial_cmp(&sv_squared[a]).unwrap());

    let mut active = order.len();
    let mut threshold = 0.0;
    while active > 0 {
        let inv_sum: f64 = order[..active]
            .iter()
            .map(|&k| noise_power / sv_squared[k])
            .sum();
        threshold = (total_power + inv_sum) / active as f64;
        let weakest = order[active - 1];
        if threshold - noise_power / sv_squared[weakest] >= 0.0 {
            break;
        }
        active -= 1;
    }

    let mut powers = vec![0.0; sv_squared.len()];
    for &k in &order[..active] {
        powers[k] = (threshold - noise_power / sv_squared[k]).max(0.0);
    }
    // Absorb rounding so the powers sum exactly to the constraint.
    let sum: f64 = powers.iter().sum();
    if sum > 0.0 {
        let fix = total_power / sum;
        for p in &mut powers {
            *p *= fix;
        }
    }

    Ok(WaterfillingAllocation { powers, threshold, noise_power, total_power })
}

/// `sum_k log2(1 + P_k sv_squared_k / noise_power)`.
pub fn capacity(sv_squared: &[f64], alloc: &WaterfillingAllocation) -> f64 {
    assert_eq!(
        sv_squared.len(),
        alloc.powers.len(),
        "allocation and mode arrays must have the same length"
    );
    sv_squared
        .iter()
        .zip(alloc.powers.iter())
        .map(|(&s, &p)| (1.0 + p * s / alloc.noise_power).log2())
        .sum()
}

/// High-SNR Jensen upper bound `R log2((eps/noise) sum(sv_squared) / R)`.
/// Only valid when every mode is active, which the paper assumes; an
/// inactive mode is rejected.
pub fn jensen_capacity_bound(sv_squared: &[f64], noise_power: f64, threshold: f64) -> Result<f64> {
    if sv_squared.is_empty() {
        return Err(Error::EmptyInput("jensen bound needs at least one mode".into()));
    }
    let r = sv_squared.len() as f64;
    for &s in sv_squared {
        if s <= 0.0 || threshold - noise_power / s <= 0.0 {
            return Err(Error::InvalidInput(
                "jensen bound requires all modes active (positive waterfilled power)".into(),
            ));
        }
    }
    let sum: f64 = sv_squared.iter().sum();
    Ok(r * ((threshold / noise_power) * sum / r).log2())
}

pub const DEFAULT_ITERATIONS: usize = 5;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

/// Outcome of the alternating joint polarization pre/post coding loop.
#[derive(Debug, Clone)]
pub struct JointCodingResult {
    pub final_config: PolarizationConfig,
    pub iterations_used: usize,
    /// Frobenius-squared of the effective channel: the starting value,
    /// then one entry after each half-step (Tx sweep, Rx sweep, ...).
    pub objective_trace: Vec<f64>,
    /// True when the largest angle change in a full iteration dropped
    /// below the tolerance before `max_iterations` was reached.
    pub converged: bool,
}

/// Distance between two polarization angles modulo pi (p and -p are the
/// same physical state).
pub fn angle_distance_mod_pi(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d)
}

/// Alternating per-element optimization of the effective channel's
/// Frobenius norm, starting from the all-vertical state: a full Tx sweep
/// with the Rx fixed, then a full Rx sweep with the Tx fixed, per
/// iteration. Runs `max_iterations` iterations or stops early once the
/// largest angle change in one iteration falls below `tolerance` radians
/// (pass `tolerance = 0.0` for the fixed-iteration mode).
pub fn joint_coding(tensor: &ChannelTensor, max_iterations: usize, tolerance: f64) -> JointCodingResult {
    let n_t = tensor.n_t();
    let n_r = tensor.n_r();
    let mut tx_vecs = vec![[1.0, 0.0]; n_t];
    let mut rx_vecs = vec![[1.0, 0.0]; n_r];
    let mut tx_angles = vec![0.0f64; n_t];
    let mut rx_angles = vec![0.0f64; n_r];

    let objective = |tx: &[f64], rx: &[f64]| {
        let config = PolarizationConfig::new(tx.to_vec(), rx.to_vec()).expect("finite angles");
        frobenius_sq(&effective_channel(tensor, &config).expect("dimensions match").matrix)
    };

    let mut trace = vec![objective(&tx_angles, &rx_angles)];
    let mut converged = false;
    let mut iterations_used = 0;

    for _ in 0..max_iterations {
        let mut max_delta: f64 = 0.0;

        // Columns are independent given the Rx state, so updating every Tx
        // element at once maximizes the objective over all Tx angles.
        //
        // A degenerate determinant matrix (e.g. the current Rx state sits
        // in the null space of every block) makes all angles equal
        // maximizers; the tie is broken by the element's unprojected block
        // Gram so the iteration can leave dead polarization states.
        for j in 0..n_t {
            let theta = dominant_angle(&tx_pd_accum(tensor, &rx_vecs, j))
                .or_else(|| dominant_angle(&tx_unprojected_accum(tensor, j)))
                .unwrap_or(tx_angles[j]);
            max_delta = max_delta.max(angle_distance_mod_pi(theta, tx_angles[j]));
            tx_angles[j] = theta;
            tx_vecs[j] = polarization_vector(theta);
        }
        trace.push(objective(&tx_angles, &rx_angles));

        for i in 0..n_r {
            let theta = dominant_angle(&rx_pd_accum(tensor, &tx_vecs, i))
                .or_else(|| dominant_angle(&rx_unprojected_accum(tensor, i)))
                .unwrap_or(rx_angles[i]);
            max_delta = max_delta.max(angle_distance_mod_pi(theta, rx_angles[i]));
            rx_angles[i] = theta;
            rx_vecs[i] = polarization_vector(theta);
        }
        trace.push(objective(&tx_angles, &rx_angles));

        iterations_used += 1;
        if max_delta < tolerance {
            converged = true;
            break;
        }
    }

    JointCodingResult {
        final_config: PolarizationConfig::new(tx_angles, rx_angles).expect("finite angles"),
        iterations_used,
        objective_trace: trace,
        converged,
    }
}
