//! Dense complex Hermitian eigensolver (cyclic Jacobi) and a companion
//! eigendecomposition for unitary matrices.
//!
//! Used for per-site curvature endomorphisms (rank ≤ 4), Rayleigh-Ritz
//! blocks inside the iterative eigensolver, and as the reference
//! full-spectrum solver on small grids in tests. Matrices are row-major
//! `Vec<Cx>` of dimension `n x n`; eigenvectors come back as columns.

use crate::field::Cx;

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// matrix by cyclic Jacobi rotations. Consumes the input matrix. Stops when
/// the off-diagonal mass drops to rounding level relative to the norm.
pub fn hermitian_eig(n: usize, mut a: Vec<Cx>) -> (Vec<f64>, Vec<Cx>) {
    assert_eq!(a.len(), n * n);
    let mut v = vec![Cx::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Cx::new(1.0, 0.0);
    }
    let norm2: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if off <= 1e-30 * norm2 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[p * n + q];
                let absb = b.norm();
                if absb <= 1e-18 * norm2.sqrt() {
                    continue;
                }
                let phase = b / absb;
                let alpha = a[p * n + p].re;
                let beta = a[q * n + q].re;
                let theta = 0.5 * (2.0 * absb).atan2(alpha - beta);
                let (c, s) = (theta.cos(), theta.sin());
                let spc = phase.conj() * s;
                let sp = phase * s;
                // column update: A <- A J
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = aip * c + aiq * spc;
                    a[i * n + q] = aiq * c - aip * sp;
                }
                // row update: A <- J† A
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = apj * c + aqj * sp;
                    a[q * n + j] = aqj * c - apj * spc;
                }
                // eigenvector accumulation: V <- V J
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = vip * c + viq * spc;
                    v[i * n + q] = viq * c - vip * sp;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.partial_cmp(&a[j * n + j].re).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[i * n + i].re).collect();
    let mut vecs = vec![Cx::new(0.0, 0.0); n * n];
    for (newc, &oldc) in order.iter().enumerate() {
        for i in 0..n {
            vecs[i * n + newc] = v[i * n + oldc];
        }
    }
    (vals, vecs)
}

/// Eigendecomposition of a unitary matrix `w` (a normal matrix): returns
/// unit-modulus eigenvalues and an orthonormal eigenbasis. Diagonalizes the
/// Hermitian part, then the skew part within each degenerate block.
pub fn unitary_eig(n: usize, w: &[Cx]) -> (Vec<Cx>, Vec<Cx>) {
    assert_eq!(w.len(), n * n);
    let herm: Vec<Cx> = (0..n * n)
        .map(|e| {
            let (i, j) = (e / n, e % n);
            (w[i * n + j] + w[j * n + i].conj()) * 0.5
        })
        .collect();
    let (hvals, mut basis) = hermitian_eig(n, herm);
    // Group eigenvalues of the Hermitian part that coincide; inside each
    // group the skew part needs its own diagonalization.
    let scale = hvals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (hvals[end] - hvals[start]).abs() <= 1e-9 * scale {
            end += 1;
        }
        let m = end - start;
        if m > 1 {
            // B = V_g† S V_g with S = (W - W†)/(2i), Hermitian of size m.
            let mut b = vec![Cx::new(0.0, 0.0); m * m];
            for (bi, gi) in (start..end).enumerate() {
                for (bj, gj) in (start..end).enumerate() {
                    let mut acc = Cx::new(0.0, 0.0);
                    for r in 0..n {
                        for cidx in 0..n {
                            let s_rc = (w[r * n + cidx] - w[cidx * n + r].conj())
                                / Cx::new(0.0, 2.0);
                            acc += basis[r * n + gi].conj() * s_rc * basis[cidx * n + gj];
                        }
                    }
                    b[bi * m + bj] = acc;
                }
            }
            let (_, bv) = hermitian_eig(m, b);
            let mut rotated = vec![Cx::new(0.0, 0.0); n * m];
            for i in 0..n {
                for bj in 0..m {
                    let mut acc = Cx::new(0.0, 0.0);
                    for (bi, gi) in (start..end).enumerate() {
                        acc += basis[i * n + gi] * bv[bi * m + bj];
                    }
                    rotated[i * m + bj] = acc;
                }
            }
            for (bj, gj) in (start..end).enumerate() {
                for i in 0..n {
                    basis[i * n + gj] = rotated[i * m + bj];
                }
            }
        }
        start = end;
    }
    // Eigenvalues by Rayleigh quotients in the final basis.
    let mut vals = vec![Cx::new(0.0, 0.0); n];
    for j in 0..n {
        let mut acc = Cx::new(0.0, 0.0);
        for r in 0..n {
            let mut wv = Cx::new(0.0, 0.0);
            for cidx in 0..n {
                wv += w[r * n + cidx] * basis[cidx * n + j];
            }
            acc += basis[r * n + j].conj() * wv;
        }
        vals[j] = acc;
    }
    (vals, basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(n: usize, a: &[Cx], vals: &[f64], vecs: &[Cx]) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let mut av = Cx::new(0.0, 0.0);
                for k in 0..n {
                    av += a[i * n + k] * vecs[k * n + j];
                }
                worst = worst.max((av - vecs[i * n + j] * vals[j]).norm());
            }
        }
        worst
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2, i],[-i, 2]] has eigenvalues 1 and 3.
        let a = vec![
            Cx::new(2.0, 0.0),
            Cx::new(0.0, 1.0),
            Cx::new(0.0, -1.0),
            Cx::new(2.0, 0.0),
        ];
        let (vals, vecs) = hermitian_eig(2, a.clone());
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        assert!(residual(2, &a, &vals, &vecs) < 1e-12);
    }

    #[test]
    fn random_hermitian_residual_and_orthonormality() {
        use rand::Rng;
        let mut rng = crate::field::rng_from(42);
        for n in [3usize, 5, 8, 12] {
            let mut a = vec![Cx::new(0.0, 0.0); n * n];
            for i in 0..n {
                for j in i..n {
                    let z = Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                    if i == j {
                        a[i * n + i] = Cx::new(z.re, 0.0);
                    } else {
                        a[i * n + j] = z;
                        a[j * n + i] = z.conj();
                    }
                }
            }
            let (vals, vecs) = hermitian_eig(n, a.clone());
            assert!(residual(n, &a, &vals, &vecs) < 1e-11);
            for c1 in 0..n {
                for c2 in 0..n {
                    let mut dot = Cx::new(0.0, 0.0);
                    for i in 0..n {
                        dot += vecs[i * n + c1].conj() * vecs[i * n + c2];
                    }
                    let expect = if c1 == c2 { 1.0 } else { 0.0 };
                    assert!((dot - expect).norm() < 1e-12);
                }
            }
            // trace preserved
            let tr: f64 = (0..n).map(|i| a[i * n + i].re).sum();
            let sv: f64 = vals.iter().sum();
            assert!((tr - sv).abs() < 1e-10);
        }
    }

    #[test]
    fn unitary_eig_recovers_phases() {
        // Diagonal phases conjugated by a known unitary.
        let phases = [0.3f64, -1.2, 0.3];
        let n = 3;
        // build a unitary from a Hermitian via its eigenbasis
        let h = vec![
            Cx::new(1.0, 0.0),
            Cx::new(0.5, 0.2),
            Cx::new(0.0, -0.3),
            Cx::new(0.5, -0.2),
            Cx::new(-0.4, 0.0),
            Cx::new(0.1, 0.0),
            Cx::new(0.0, 0.3),
            Cx::new(0.1, 0.0),
            Cx::new(0.2, 0.0),
        ];
        let (_, q) = hermitian_eig(n, h);
        let mut w = vec![Cx::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Cx::new(0.0, 0.0);
                for k in 0..n {
                    let d = Cx::new(phases[k].cos(), phases[k].sin());
                    acc += q[i * n + k] * d * q[j * n + k].conj();
                }
                w[i * n + j] = acc;
            }
        }
        let (vals, basis) = unitary_eig(n, &w);
        let mut got: Vec<f64> = vals.iter().map(|z| z.arg()).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want = phases.to_vec();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w0) in got.iter().zip(&want) {
            assert!((g - w0).abs() < 1e-10, "phase {g} vs {w0}");
        }
        for &z in &vals {
            assert!((z.norm() - 1.0).abs() < 1e-10);
        }
        // eigen residual
        for j in 0..n {
            for i in 0..n {
                let mut wv = Cx::new(0.0, 0.0);
                for k in 0..n {
                    wv += w[i * n + k] * basis[k * n + j];
                }
                assert!((wv - basis[i * n + j] * vals[j]).norm() < 1e-9);
            }
        }
    }
}
