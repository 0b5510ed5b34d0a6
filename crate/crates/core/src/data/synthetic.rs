//! Seeded synthetic datasets used as stand-ins when real files are absent.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

fn class_sizes(n: usize, ir: f64) -> Result<(usize, usize)> {
    if !(ir >= 1.0) || n < 2 {
        return Err(Error::Config(format!("need n >= 2 and IR >= 1, got n={n}, IR={ir}")));
    }
    let pos = ((n as f64 / (1.0 + ir)).round() as usize).clamp(1, n - 1);
    Ok((n - pos, pos))
}

/// Two isotropic 2-D Gaussians, majority centered at the origin and minority
/// at (`separation`, `separation`), unit variance.
pub fn two_gaussians(n: usize, ir: f64, separation: f64, seed: u64) -> Result<Dataset> {
    let (neg, pos) = class_sizes(n, ir)?;
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (count, center, label) in [(neg, 0.0, 0u8), (pos, separation, 1u8)] {
        for _ in 0..count {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            rows.push(vec![center + a, center + b]);
            labels.push(label);
        }
    }
    Dataset::new("two_gaussians", Matrix::from_rows(&rows)?, labels)?
        .with_feature_names(vec!["x0".into(), "x1".into()])
}

/// Abalone-like tabular data: eight strongly collinear morphometric
/// features driven by a latent size and a latent age, with the minority
/// class drawn from the older tail. `n_pos` rows are minority.
///
/// Size grows with age but is mostly individual variation, so class signal
/// sits in small residual contrasts between the weight columns rather than
/// in the dominant size direction.
pub fn abalone_like(name: &str, n: usize, n_pos: usize, seed: u64) -> Result<Dataset> {
    if n_pos == 0 || n_pos >= n {
        return Err(Error::Config(format!("need 0 < n_pos < n, got {n_pos} of {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let normal = |rng: &mut crate::rng::Rng| -> f64 { StandardNormal.sample(rng) };
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let minority = i < n_pos;
        let age = if minority { 1.6 + 0.8 * normal(&mut rng) } else { normal(&mut rng) };
        let size = 0.35 * age + 0.9 * normal(&mut rng);
        let bulk = (0.9 * size).exp();
        let length = 0.52 + 0.09 * size + 0.01 * normal(&mut rng);
        let diameter = 0.41 + 0.075 * size + 0.01 * normal(&mut rng);
        let height = 0.14 + 0.03 * size + 0.012 * normal(&mut rng);
        let whole = 0.8 * bulk + 0.04 * normal(&mut rng);
        let shucked = (0.36 * bulk - 0.035 * age + 0.03 * normal(&mut rng)).max(0.001);
        let viscera = 0.18 * bulk + 0.015 * normal(&mut rng);
        let shell = 0.23 * bulk + 0.03 * age + 0.025 * normal(&mut rng);
        let infant_p = 1.0 / (1.0 + (2.0 * size + 0.8 * age).exp());
        let sex = if rng.random::<f64>() < infant_p {
            0.5
        } else if rng.random::<bool>() {
            0.0
        } else {
            1.0
        };
        rows.push(vec![sex, length, diameter, height, whole, shucked, viscera, shell]);
        labels.push(u8::from(minority));
    }
    // Interleave classes so file order carries no label information.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let rows: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
    let labels: Vec<u8> = order.iter().map(|&i| labels[i]).collect();
    let names = [
        "sex", "length", "diameter", "height", "whole_weight", "shucked_weight", "viscera_weight",
        "shell_weight",
    ];
    Dataset::new(name, Matrix::from_rows(&rows)?, labels)?
        .with_feature_names(names.iter().map(|s| s.to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::imbalance_ratio;

    #[test]
    fn two_gaussians_matches_requested_ir() {
        let d = two_gaussians(200, 9.0, 2.0, 1).unwrap();
        assert_eq!(d.class_counts(), (180, 20));
        assert_eq!(imbalance_ratio(&d).unwrap(), 9.0);
    }

    #[test]
    fn abalone_like_shape_and_counts() {
        let d = abalone_like("a", 731, 42, 5).unwrap();
        assert_eq!(d.len(), 731);
        assert_eq!(d.dim(), 8);
        assert_eq!(d.class_counts(), (689, 42));
        assert_eq!(d, abalone_like("a", 731, 42, 5).unwrap());
    }
}
