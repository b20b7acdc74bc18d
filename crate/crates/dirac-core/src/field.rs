//! Scalar and spinor field helpers: inner products, norms, random
//! bandlimited samples.
//!
//! Reductions are deliberately sequential so that results do not depend on
//! the worker count (see `par`).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Cx = Complex64;

/// Weighted Hermitian inner product `Σ conj(a_i) b_i w_i`.
pub fn dot_w(a: &[Cx], b: &[Cx], w: &[f64]) -> Cx {
    debug_assert_eq!(a.len(), b.len());
    debug_assert_eq!(a.len(), w.len());
    let mut acc = Cx::new(0.0, 0.0);
    for i in 0..a.len() {
        acc += a[i].conj() * b[i] * w[i];
    }
    acc
}

/// Weighted norm `sqrt(Σ |a_i|² w_i)`.
pub fn norm_w(a: &[Cx], w: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i].norm_sqr() * w[i];
    }
    acc.sqrt()
}

/// Real weighted sum `Σ f_i w_i`.
pub fn sum_w(f: &[f64], w: &[f64]) -> f64 {
    f.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// `y += alpha * x`.
pub fn axpy(y: &mut [Cx], alpha: Cx, x: &[Cx]) {
    for i in 0..y.len() {
        y[i] += alpha * x[i];
    }
}

/// Deterministic RNG for a given seed; one stream per construction site.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric unit sample in [-1, 1).
/// Uniform sample in [-1, 1).
pub fn unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen::<f64>() * 2.0 - 1.0
}

/// Random real field on an `n1 x n2` periodic grid containing only Fourier
/// modes with `|k| <= band` in each direction, rescaled so its maximum
/// absolute value equals `amplitude`. Returns the zero field when
/// `amplitude == 0`.
pub fn bandlimited_real(n1: usize, n2: usize, band: i64, amplitude: f64, seed: u64) -> Vec<f64> {
    if amplitude == 0.0 {
        return vec![0.0; n1 * n2];
    }
    let mut rng = rng_from(seed);
    let mut modes = Vec::new();
    for l in -band..=band {
        for k in -band..=band {
            if k == 0 && l == 0 {
                continue;
            }
            let c = Cx::new(unit(&mut rng), unit(&mut rng));
            modes.push((k, l, c));
        }
    }
    let mut f = vec![0.0; n1 * n2];
    for iy in 0..n2 {
        for ix in 0..n1 {
            let x = ix as f64 / n1 as f64;
            let y = iy as f64 / n2 as f64;
            let mut v = 0.0;
            for &(k, l, c) in &modes {
                let ph = std::f64::consts::TAU * (k as f64 * x + l as f64 * y);
                v += c.re * ph.cos() - c.im * ph.sin();
            }
            f[iy * n1 + ix] = v;
        }
    }
    let m = f.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if m > 0.0 {
        for v in &mut f {
            *v *= amplitude / m;
        }
    }
    f
}

/// Random complex section with Fourier support `|k| <= band`, unit-scale
/// coefficients. Used for test sections and solve right-hand sides.
pub fn bandlimited_section(n1: usize, n2: usize, band: i64, seed: u64) -> Vec<Cx> {
    let mut rng = rng_from(seed);
    let mut modes = Vec::new();
    for l in -band..=band {
        for k in -band..=band {
            let c = Cx::new(unit(&mut rng), unit(&mut rng));
            modes.push((k, l, c));
        }
    }
    let mut s = vec![Cx::new(0.0, 0.0); n1 * n2];
    for iy in 0..n2 {
        for ix in 0..n1 {
            let x = ix as f64 / n1 as f64;
            let y = iy as f64 / n2 as f64;
            let mut v = Cx::new(0.0, 0.0);
            for &(k, l, c) in &modes {
                let ph = std::f64::consts::TAU * (k as f64 * x + l as f64 * y);
                v += c * Cx::new(ph.cos(), ph.sin());
            }
            s[iy * n1 + ix] = v;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandlimited_amplitude_and_determinism() {
        let f = bandlimited_real(16, 16, 2, 0.3, 7);
        let g = bandlimited_real(16, 16, 2, 0.3, 7);
        assert_eq!(f, g);
        let m = f.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!((m - 0.3).abs() < 1e-12);
    }

    #[test]
    fn different_seeds_differ() {
        let f = bandlimited_real(16, 16, 2, 0.3, 7);
        let g = bandlimited_real(16, 16, 2, 0.3, 8);
        assert_ne!(f, g);
    }

    #[test]
    fn dot_w_conjugate_symmetry() {
        let a: Vec<Cx> = (0..8).map(|i| Cx::new(i as f64, 1.0)).collect();
        let b: Vec<Cx> = (0..8).map(|i| Cx::new(1.0, -(i as f64))).collect();
        let w = vec![0.5; 8];
        let ab = dot_w(&a, &b, &w);
        let ba = dot_w(&b, &a, &w);
        assert!((ab - ba.conj()).norm() < 1e-14);
    }
}
