//! Distributional checks on the random-polarization effective channel:
//! unit variance, the chi-square law of the squared envelope, the variance
//! chain of the four-term expansion, and the double-angle identity for the
//! squared envelope.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use prmimo::channel::{
    effective_channel, effective_element_expanded, generate_channel, polarization_vector,
    squared_envelope_expanded, sub_seed, ChannelGenConfig, PolarizationConfig,
};
use prmimo::metrics::{chi_square_cdf, ks_critical_value, ks_distance, EmpiricalDistribution};

/// Draws `n` independent effective-channel entries under uniform random
/// polarization on a unit-variance dual-polarized channel.
fn random_pol_samples(n: usize, seed: u64) -> Vec<num_complex::Complex64> {
    let mut out = Vec::with_capacity(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_real = 4; // 2x2 tensor: four independent entries per draw
    let realizations = n.div_ceil(per_real);
    for r in 0..realizations as u64 {
        let cfg = ChannelGenConfig { n_t: 2, n_r: 2, xpd_db: 0.0, seed: sub_seed(seed, r) };
        let tensor = generate_channel(&cfg);
        let config = PolarizationConfig::random_uniform(2, 2, &mut rng);
        let eff = effective_channel(&tensor, &config).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                if out.len() < n {
                    out.push(eff.matrix.get(i, j));
                }
            }
        }
    }
    out
}

#[test]
fn random_polarization_preserves_unit_variance() {
    let samples = random_pol_samples(100_000, 4001);
    let var = samples.iter().map(|h| h.norm_sqr()).sum::<f64>() / samples.len() as f64;
    assert!((var - 1.0).abs() < 0.02, "Var(h_eff) = {var}");
    // Real and imaginary parts carry half the power each.
    let var_re = samples.iter().map(|h| h.re * h.re).sum::<f64>() / samples.len() as f64;
    let var_im = samples.iter().map(|h| h.im * h.im).sum::<f64>() / samples.len() as f64;
    assert!((var_re - 0.5).abs() < 0.02);
    assert!((var_im - 0.5).abs() < 0.02);
}

#[test]
fn random_polarization_squared_envelope_is_chi_square_2dof() {
    // With unit-variance complex entries, 2|h|^2 follows the standard
    // chi-square law with 2 degrees of freedom.
    let samples: Vec<f64> = random_pol_samples(100_000, 4002)
        .iter()
        .map(|h| 2.0 * h.norm_sqr())
        .collect();
    let n = samples.len();
    let emp = EmpiricalDistribution::from_samples(samples).unwrap();
    let d = ks_distance(&emp, |x| chi_square_cdf(x, 2)).unwrap();
    let crit = ks_critical_value(n, 0.01);
    assert!(d < crit, "KS distance {d} >= critical {crit}");
}

#[test]
fn beta_term_variance_chain() {
    // Each of the four expansion terms has real/imaginary-part variance
    // 1/8 under random polarization, and the parts are uncorrelated, so
    // the total complex variance is 1.
    let n = 200_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(4003);
    let mut sum_sq = [0.0f64; 4]; // real-part second moments of beta_1..4
    let mut total = 0.0f64;
    for r in 0..n as u64 {
        let cfg = ChannelGenConfig { n_t: 1, n_r: 1, xpd_db: 0.0, seed: sub_seed(4004, r) };
        let tensor = generate_channel(&cfg);
        let b = tensor.block(0, 0);
        let tj = rng.gen_range(-PI..PI);
        let ti = rng.gen_range(-PI..PI);
        let betas = [
            b.hvv * (tj.cos() * ti.cos()),
            b.hhv * (ti.sin() * tj.cos()),
            b.hvh * (ti.cos() * tj.sin()),
            b.hhh * (tj.sin() * ti.sin()),
        ];
        for (k, beta) in betas.iter().enumerate() {
            sum_sq[k] += beta.re * beta.re;
        }
        let h: num_complex::Complex64 = betas.iter().sum();
        total += h.norm_sqr();
    }
    for (k, s) in sum_sq.iter().enumerate() {
        let var = s / n as f64;
        assert!(
            (var - 0.125).abs() / 0.125 < 0.02,
            "Var(Re beta_{}) = {var}",
            k + 1
        );
    }
    let var_total = total / n as f64;
    assert!((var_total - 1.0).abs() < 0.02, "Var(h_eff) = {var_total}");
}

#[test]
fn squared_envelope_expansion_identity() {
    // The double-angle form must reproduce |p_rx^T H p_tx|^2 exactly.
    let mut rng = ChaCha8Rng::seed_from_u64(4005);
    let mut worst = 0.0f64;
    for r in 0..10_000u64 {
        let cfg = ChannelGenConfig { n_t: 1, n_r: 1, xpd_db: 0.0, seed: sub_seed(4006, r) };
        let tensor = generate_channel(&cfg);
        let b = tensor.block(0, 0);
        let tj = rng.gen_range(-PI..PI);
        let ti = rng.gen_range(-PI..PI);
        let direct = b
            .sandwich(polarization_vector(ti), polarization_vector(tj))
            .norm_sqr();
        let expanded = squared_envelope_expanded(b, tj, ti);
        worst = worst.max((direct - expanded).abs());
    }
    assert!(worst < 1e-10, "max identity deviation {worst}");
}

#[test]
fn expansion_agrees_with_scalar_form() {
    // Cross-check against the four-term complex expansion as well.
    let mut rng = ChaCha8Rng::seed_from_u64(4007);
    for r in 0..1000u64 {
        let cfg = ChannelGenConfig { n_t: 1, n_r: 1, xpd_db: 3.0, seed: sub_seed(4008, r) };
        let tensor = generate_channel(&cfg);
        let b = tensor.block(0, 0);
        let tj = rng.gen_range(-PI..PI);
        let ti = rng.gen_range(-PI..PI);
        let scalar = effective_element_expanded(b, tj, ti).norm_sqr();
        let expanded = squared_envelope_expanded(b, tj, ti);
        assert!((scalar - expanded).abs() < 1e-12);
    }
}
