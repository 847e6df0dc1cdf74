//! Independent oracles for the integration suites.
//!
//! Everything here evaluates densities directly: closed-form determinants
//! and inverses for d <= 3, plain (non-log) products and sums, so the
//! log-space implementation under test is checked against genuinely
//! different arithmetic.

#![allow(dead_code)]

/// Determinant of a row-major d x d matrix, d <= 3.
pub fn det(m: &[f64], d: usize) -> f64 {
    match d {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => panic!("oracle determinant supports d <= 3"),
    }
}

/// Inverse of a row-major d x d matrix via the adjugate, d <= 3.
pub fn inverse(m: &[f64], d: usize) -> Vec<f64> {
    let determinant = det(m, d);
    assert!(determinant.abs() > 0.0, "oracle inverse needs a nonsingular matrix");
    match d {
        1 => vec![1.0 / m[0]],
        2 => {
            let s = 1.0 / determinant;
            vec![m[3] * s, -m[1] * s, -m[2] * s, m[0] * s]
        }
        3 => {
            let s = 1.0 / determinant;
            let mut inv = vec![0.0; 9];
            inv[0] = (m[4] * m[8] - m[5] * m[7]) * s;
            inv[1] = (m[2] * m[7] - m[1] * m[8]) * s;
            inv[2] = (m[1] * m[5] - m[2] * m[4]) * s;
            inv[3] = (m[5] * m[6] - m[3] * m[8]) * s;
            inv[4] = (m[0] * m[8] - m[2] * m[6]) * s;
            inv[5] = (m[2] * m[3] - m[0] * m[5]) * s;
            inv[6] = (m[3] * m[7] - m[4] * m[6]) * s;
            inv[7] = (m[1] * m[6] - m[0] * m[7]) * s;
            inv[8] = (m[0] * m[4] - m[1] * m[3]) * s;
            inv
        }
        _ => panic!("oracle inverse supports d <= 3"),
    }
}

/// Direct multivariate normal density (no logarithms).
pub fn normal_density(x: &[f64], mean: &[f64], cov: &[f64]) -> f64 {
    let d = mean.len();
    let inv = inverse(cov, d);
    let mut quad = 0.0;
    for i in 0..d {
        for j in 0..d {
            quad += (x[i] - mean[i]) * inv[i * d + j] * (x[j] - mean[j]);
        }
    }
    let norm = (2.0 * std::f64::consts::PI).powi(d as i32) * det(cov, d);
    (-0.5 * quad).exp() / norm.sqrt()
}

/// A mixture model spelled out as raw parameter lists.
pub struct RawMixture {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covs: Vec<Vec<f64>>,
}

impl RawMixture {
    pub fn density(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.covs)
            .map(|((&w, mean), cov)| w * normal_density(x, mean, cov))
            .sum()
    }
}

/// Term-by-term evaluation of the MC sum, straight from the definition.
pub fn naive_mc(mixture: &RawMixture, points: &[Vec<f64>], weights: Option<&[f64]>) -> f64 {
    let mut total = 0.0;
    let mut mass = 0.0;
    for (n, x) in points.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[n]);
        if w == 0.0 {
            continue;
        }
        let f = mixture.density(x);
        assert!(f > 0.0, "oracle requires positive mixture density");
        let mut inner = 0.0;
        for ((&pi, mean), cov) in
            mixture.weights.iter().zip(&mixture.means).zip(&mixture.covs)
        {
            let g = normal_density(x, mean, cov);
            if pi * g > 0.0 {
                inner += pi * g / f * (g / f).ln();
            }
        }
        total += w * inner;
        mass += w;
    }
    total / mass
}

/// High-resolution Simpson quadrature of the latent/observed mutual
/// information of a 1-D mixture: `Σ_k π_k ∫ g_k(x) log(g_k(x)/f(x)) dx`.
pub fn quadrature_mutual_information_1d(
    weights: &[f64],
    means: &[f64],
    variances: &[f64],
    lo: f64,
    hi: f64,
    intervals: usize,
) -> f64 {
    assert!(intervals % 2 == 0, "Simpson needs an even interval count");
    let integrand = |x: f64| -> f64 {
        let densities: Vec<f64> = means
            .iter()
            .zip(variances)
            .map(|(&m, &v)| {
                (-(x - m) * (x - m) / (2.0 * v)).exp()
                    / (2.0 * std::f64::consts::PI * v).sqrt()
            })
            .collect();
        let f: f64 = weights.iter().zip(&densities).map(|(&w, &g)| w * g).sum();
        if f <= 0.0 {
            return 0.0;
        }
        weights
            .iter()
            .zip(&densities)
            .map(|(&w, &g)| if g > 0.0 { w * g * (g / f).ln() } else { 0.0 })
            .sum()
    };
    let h = (hi - lo) / intervals as f64;
    let mut acc = integrand(lo) + integrand(hi);
    for i in 1..intervals {
        let factor = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += factor * integrand(lo + h * i as f64);
    }
    acc * h / 3.0
}
