//! The graded Dolbeault-Dirac operator on a line bundle over a conformal
//! torus: forward covariant half operators, exact weighted adjoints,
//! connection Laplacians per grading, Clifford multiplication, and
//! Bochner-identity residuals.
//!
//! Conventions. Sections of the positive half live in the bundle itself;
//! sections of the negative half are stored in the unit antiholomorphic
//! coframe, which makes their pointwise norm the plain vector norm. In that
//! trivialization the positive half operator is
//! `D⁺ s = e^{-u} (∇_x s + i ∇_y s)` with forward covariant differences
//! `∇_d s|_i = (U_d(i) s_{i+d} - s_i)/h_d`; the negative half operator `D⁻`
//! is defined as the exact matrix adjoint of `D⁺` in the area-weighted
//! inner product, never discretized independently, so integration-by-parts
//! identities hold at machine precision and discretization error is
//! isolated in the Bochner term.

use crate::error::{Error, Result};
use crate::field::Cx;
use crate::gauge::HermitianBundle;
use crate::geometry::TorusGeometry;
use crate::par::map_sites;

/// Two-component section of the graded bundle.
#[derive(Debug, Clone, Default)]
pub struct GradedSection {
    pub plus: Vec<Cx>,
    pub minus: Vec<Cx>,
}

/// Grading selector for per-half operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grading {
    Plus,
    Minus,
}

fn check_section(geom: &TorusGeometry, s: &[Cx]) -> Result<()> {
    if s.len() != geom.len() {
        return Err(Error::InvalidParameter(format!(
            "section length {} does not match geometry site count {}",
            s.len(),
            geom.len()
        )));
    }
    Ok(())
}

/// `D⁺ s = e^{-u} (∇_x + i ∇_y) s`, positive half to negative half.
pub fn dplus_apply(geom: &TorusGeometry, bundle: &HermitianBundle, s: &[Cx]) -> Result<Vec<Cx>> {
    let (ux, uy) = bundle.line_links()?;
    check_section(geom, s)?;
    let (h1, h2) = (geom.h1(), geom.h2());
    let u = &geom.u;
    Ok(map_sites(geom.len(), |i| {
        let gx = (ux[i] * s[geom.xp(i)] - s[i]) / h1;
        let gy = (uy[i] * s[geom.yp(i)] - s[i]) / h2;
        (-u[i]).exp() * (gx + Cx::new(0.0, 1.0) * gy)
    }))
}

/// `D⁻ t`: the exact adjoint of [`dplus_apply`] in the area-weighted inner
/// product, negative half to positive half.
pub fn dminus_apply(geom: &TorusGeometry, bundle: &HermitianBundle, t: &[Cx]) -> Result<Vec<Cx>> {
    let (ux, uy) = bundle.line_links()?;
    check_section(geom, t)?;
    let (h1, h2) = (geom.h1(), geom.h2());
    let u = &geom.u;
    let w = geom.area_weights();
    Ok(map_sites(geom.len(), |j| {
        let jx = geom.xm(j);
        let jy = geom.ym(j);
        let from_x = (-u[jx]).exp() * ux[jx].conj() * w[jx] * t[jx] / h1;
        let from_y = Cx::new(0.0, -1.0) * (-u[jy]).exp() * uy[jy].conj() * w[jy] * t[jy] / h2;
        let diag = -(-u[j]).exp() * Cx::new(1.0 / h1, -1.0 / h2) * w[j] * t[j];
        (from_x + from_y + diag) / w[j]
    }))
}

/// The antiholomorphic half `∂̄ = D⁺/√2` in the unit coframe.
pub fn dbar_apply(geom: &TorusGeometry, bundle: &HermitianBundle, s: &[Cx]) -> Result<Vec<Cx>> {
    let mut out = dplus_apply(geom, bundle, s)?;
    let inv = 1.0 / 2.0f64.sqrt();
    for z in &mut out {
        *z *= inv;
    }
    Ok(out)
}

/// `D⁻ D⁺` on the positive half.
pub fn normal_plus_apply(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    s: &[Cx],
) -> Result<Vec<Cx>> {
    let mid = dplus_apply(geom, bundle, s)?;
    dminus_apply(geom, bundle, &mid)
}

/// `D⁺ D⁻` on the negative half.
pub fn normal_minus_apply(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    t: &[Cx],
) -> Result<Vec<Cx>> {
    let mid = dminus_apply(geom, bundle, t)?;
    dplus_apply(geom, bundle, &mid)
}

/// Full graded operator `D (s⁺, s⁻) = (D⁻ s⁻, D⁺ s⁺)`; Hermitian in the
/// area-weighted product on graded sections.
pub fn full_dirac_apply(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    s: &GradedSection,
) -> Result<GradedSection> {
    Ok(GradedSection {
        plus: dminus_apply(geom, bundle, &s.minus)?,
        minus: dplus_apply(geom, bundle, &s.plus)?,
    })
}

/// Transport phases that the negative half picks up from the unit-coframe
/// trivialization: `exp(i h_d β_d)` with `β_x = -∂_y u`, `β_y = +∂_x u`
/// (central differences).
pub fn coframe_phases(geom: &TorusGeometry) -> (Vec<Cx>, Vec<Cx>) {
    let (h1, h2) = (geom.h1(), geom.h2());
    let u = &geom.u;
    let bx: Vec<Cx> = (0..geom.len())
        .map(|i| {
            let b = -(u[geom.yp(i)] - u[geom.ym(i)]) / (2.0 * h2);
            Cx::from_polar(1.0, h1 * b)
        })
        .collect();
    let by: Vec<Cx> = (0..geom.len())
        .map(|i| {
            let b = (u[geom.xp(i)] - u[geom.xm(i)]) / (2.0 * h1);
            Cx::from_polar(1.0, h2 * b)
        })
        .collect();
    (bx, by)
}

/// Unitary transport on the chosen half: the bundle links as-is on the
/// positive half, multiplied by the coframe phases on the negative half.
pub fn half_links(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    grading: Grading,
) -> Result<(Vec<Cx>, Vec<Cx>)> {
    let (ux, uy) = bundle.line_links()?;
    match grading {
        Grading::Plus => Ok((ux.to_vec(), uy.to_vec())),
        Grading::Minus => {
            let (px, py) = coframe_phases(geom);
            Ok((
                ux.iter().zip(&px).map(|(a, b)| a * b).collect(),
                uy.iter().zip(&py).map(|(a, b)| a * b).collect(),
            ))
        }
    }
}

/// Connection Laplacian `∇*∇` for the given unitary transport: the magnetic
/// 5-point stencil scaled by `e^{-2u}`. Exactly self-adjoint and positive
/// semidefinite in the area-weighted product (its quadratic form is a sum
/// of squared covariant edge differences).
pub fn connection_laplacian_apply(
    geom: &TorusGeometry,
    vx: &[Cx],
    vy: &[Cx],
    s: &[Cx],
) -> Vec<Cx> {
    let (h1s, h2s) = (geom.h1() * geom.h1(), geom.h2() * geom.h2());
    let u = &geom.u;
    map_sites(geom.len(), |i| {
        let im_x = geom.xm(i);
        let im_y = geom.ym(i);
        let hop = (vx[i] * s[geom.xp(i)] + vx[im_x].conj() * s[im_x]) / h1s
            + (vy[i] * s[geom.yp(i)] + vy[im_y].conj() * s[im_y]) / h2s;
        (-2.0 * u[i]).exp() * ((2.0 / h1s + 2.0 / h2s) * s[i] - hop)
    })
}

/// `∇*∇` on the selected half of the graded bundle.
pub fn cl_half_apply(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    grading: Grading,
    s: &[Cx],
) -> Result<Vec<Cx>> {
    check_section(geom, s)?;
    let (vx, vy) = half_links(geom, bundle, grading)?;
    Ok(connection_laplacian_apply(geom, &vx, &vy, s))
}

/// Relative residual of the Bochner identity `D² = ∇*∇ + ℜ` on the given
/// half, in the area-weighted norm. Exact only in the continuum; on the
/// lattice it decays at first order for smooth sections.
pub fn bochner_residual(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    curv: &crate::gauge::CurvatureData,
    grading: Grading,
    s: &[Cx],
) -> Result<f64> {
    check_section(geom, s)?;
    let w = geom.area_weights();
    let nrm = crate::field::norm_w(s, w);
    if nrm == 0.0 {
        return Err(Error::InvalidParameter("zero section".into()));
    }
    let d2 = match grading {
        Grading::Plus => normal_plus_apply(geom, bundle, s)?,
        Grading::Minus => normal_minus_apply(geom, bundle, s)?,
    };
    let cl = cl_half_apply(geom, bundle, grading, s)?;
    let rfield = match grading {
        Grading::Plus => &curv.lambda_s_plus,
        Grading::Minus => &curv.lambda_s_minus,
    };
    let defect: Vec<Cx> = (0..geom.len())
        .map(|i| d2[i] - cl[i] - rfield[i] * s[i])
        .collect();
    Ok(crate::field::norm_w(&defect, w) / nrm)
}

/// Clifford multiplication by a real vector field given in orthonormal
/// frame components: `c(v) (s⁺, s⁻) = ((-v₁ + i v₂) s⁻, (v₁ + i v₂) s⁺)`.
/// Satisfies `c(v)² = -|v|²` and is a pointwise isometry for unit `v`.
pub fn clifford_mul(v1: &[f64], v2: &[f64], s: &GradedSection) -> GradedSection {
    let n = s.plus.len();
    let mut plus = vec![Cx::new(0.0, 0.0); n];
    let mut minus = vec![Cx::new(0.0, 0.0); n];
    for i in 0..n {
        plus[i] = Cx::new(-v1[i], v2[i]) * s.minus[i];
        minus[i] = Cx::new(v1[i], v2[i]) * s.plus[i];
    }
    GradedSection { plus, minus }
}

/// Orthonormal-frame components of the metric gradient of a scalar field
/// (central differences): `v_d = e^{-u} ∂_d f`.
pub fn frame_gradient(geom: &TorusGeometry, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (h1, h2) = (geom.h1(), geom.h2());
    let u = &geom.u;
    let v1: Vec<f64> = (0..geom.len())
        .map(|i| (-u[i]).exp() * (f[geom.xp(i)] - f[geom.xm(i)]) / (2.0 * h1))
        .collect();
    let v2: Vec<f64> = (0..geom.len())
        .map(|i| (-u[i]).exp() * (f[geom.yp(i)] - f[geom.ym(i)]) / (2.0 * h2))
        .collect();
    (v1, v2)
}

/// Exact adjoint of the full graded operator in the `e^{-φ}`-weighted
/// product: `D*_φ s = e^{φ} D(e^{-φ} s)`. Because `D` is its own
/// area-weighted adjoint, this identity is exact at assembly level.
pub fn weighted_adjoint_apply(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    phi: &[f64],
    s: &GradedSection,
) -> Result<GradedSection> {
    let n = geom.len();
    let damp = |v: &[Cx]| -> Vec<Cx> {
        (0..n).map(|i| v[i] * (-phi[i]).exp()).collect()
    };
    let scaled = GradedSection {
        plus: damp(&s.plus),
        minus: damp(&s.minus),
    };
    let mut out = full_dirac_apply(geom, bundle, &scaled)?;
    for i in 0..n {
        let e = phi[i].exp();
        out.plus[i] *= e;
        out.minus[i] *= e;
    }
    Ok(out)
}

/// The Leibniz form `Ds - c(∇φ)s` of the weighted adjoint; agrees with
/// [`weighted_adjoint_apply`] to first order in the grid spacing.
pub fn weighted_adjoint_leibniz(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    phi: &[f64],
    s: &GradedSection,
) -> Result<GradedSection> {
    let ds = full_dirac_apply(geom, bundle, s)?;
    let (v1, v2) = frame_gradient(geom, phi);
    let grad_term = clifford_mul(&v1, &v2, s);
    Ok(GradedSection {
        plus: (0..geom.len()).map(|i| ds.plus[i] - grad_term.plus[i]).collect(),
        minus: (0..geom.len())
            .map(|i| ds.minus[i] - grad_term.minus[i])
            .collect(),
    })
}

/// Half-operator weighted adjoint `(D⁺)*_φ t = e^{φ} D⁻ (e^{-φ} t)`,
/// negative half to positive half.
pub fn dplus_weighted_adjoint_apply(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    phi: &[f64],
    t: &[Cx],
) -> Result<Vec<Cx>> {
    let scaled: Vec<Cx> = (0..geom.len()).map(|i| t[i] * (-phi[i]).exp()).collect();
    let mut out = dminus_apply(geom, bundle, &scaled)?;
    for i in 0..geom.len() {
        out[i] *= phi[i].exp();
    }
    Ok(out)
}

/// Half-operator weighted adjoint `(D⁻)*_φ s = e^{φ} D⁺ (e^{-φ} s)`.
pub fn dminus_weighted_adjoint_apply(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    phi: &[f64],
    s: &[Cx],
) -> Result<Vec<Cx>> {
    let scaled: Vec<Cx> = (0..geom.len()).map(|i| s[i] * (-phi[i]).exp()).collect();
    let mut out = dplus_apply(geom, bundle, &scaled)?;
    for i in 0..geom.len() {
        out[i] *= phi[i].exp();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{bandlimited_real, bandlimited_section, dot_w, norm_w};
    use crate::gauge::{constant_curvature_bundle, random_line_bundle};
    use crate::geometry::build_torus;
    use std::f64::consts::TAU;

    fn flat(n: usize) -> TorusGeometry {
        build_torus(TAU, TAU, n, n, vec![0.0; n * n]).unwrap()
    }

    fn curved(n: usize, amp: f64, seed: u64) -> TorusGeometry {
        build_torus(TAU, TAU, n, n, bandlimited_real(n, n, 2, amp, seed)).unwrap()
    }

    fn fourier_mode(geom: &TorusGeometry, k: i64, l: i64) -> Vec<Cx> {
        (0..geom.len())
            .map(|i| {
                let (ix, iy) = geom.coords(i);
                let ph = TAU * (k as f64 * ix as f64 / geom.n1 as f64
                    + l as f64 * iy as f64 / geom.n2 as f64);
                Cx::from_polar(1.0, ph)
            })
            .collect()
    }

    /// Dense area-symmetrized matrix of a matrix-free Hermitian operator,
    /// for reference eigensolves on small grids.
    fn dense_sym(geom: &TorusGeometry, apply: impl Fn(&[Cx]) -> Vec<Cx>) -> Vec<Cx> {
        let n = geom.len();
        let w = geom.area_weights();
        let mut m = vec![Cx::new(0.0, 0.0); n * n];
        for col in 0..n {
            let mut e = vec![Cx::new(0.0, 0.0); n];
            e[col] = Cx::new(1.0 / w[col].sqrt(), 0.0);
            let out = apply(&e);
            for row in 0..n {
                m[row * n + col] = out[row] * w[row].sqrt();
            }
        }
        // enforce exact Hermiticity against rounding
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = (m[i * n + j] + m[j * n + i].conj()) * 0.5;
                m[i * n + j] = avg;
                m[j * n + i] = avg.conj();
            }
        }
        m
    }

    #[test]
    fn constants_are_holomorphic() {
        let g = flat(16);
        let b = constant_curvature_bundle(&g, 0).unwrap();
        let s = vec![Cx::new(1.0, 0.0); g.len()];
        let d = dbar_apply(&g, &b, &s).unwrap();
        assert!(d.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn flat_fourier_symbol() {
        let g = flat(16);
        let b = constant_curvature_bundle(&g, 0).unwrap();
        let h = TAU / 16.0;
        for (k, l) in [(1i64, 0i64), (0, 1), (2, 3), (-1, 4), (5, -2)] {
            let s = fourier_mode(&g, k, l);
            let d = dplus_apply(&g, &b, &s).unwrap();
            let a = (Cx::from_polar(1.0, k as f64 * h) - 1.0) / h;
            let bb = (Cx::from_polar(1.0, l as f64 * h) - 1.0) / h;
            let sym = a + Cx::new(0.0, 1.0) * bb;
            for i in 0..g.len() {
                assert!((d[i] - sym * s[i]).norm() < 1e-11);
            }
            // ∂̄ carries the 1/√2 of the unit coframe
            let db = dbar_apply(&g, &b, &s).unwrap();
            for i in 0..g.len() {
                assert!((db[i] - sym / 2.0f64.sqrt() * s[i]).norm() < 1e-11);
            }
            // normal operator symbol |a + ib|² exactly
            let nrm = normal_plus_apply(&g, &b, &s).unwrap();
            let nsym = sym.norm_sqr();
            for i in 0..g.len() {
                assert!((nrm[i] - nsym * s[i]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_graded_adjointness() {
        let g = curved(16, 0.25, 3);
        let b = random_line_bundle(&g, -2, 0.4, 7).unwrap();
        let w = g.area_weights();
        let s = bandlimited_section(16, 16, 5, 11);
        let t = bandlimited_section(16, 16, 5, 12);
        let ds = dplus_apply(&g, &b, &s).unwrap();
        let dt = dminus_apply(&g, &b, &t).unwrap();
        let lhs = dot_w(&ds, &t, w);
        let rhs = dot_w(&s, &dt, w);
        let scale = norm_w(&ds, w) * norm_w(&t, w);
        assert!((lhs - rhs).norm() < 1e-13 * scale.max(1.0));
    }

    #[test]
    fn normal_operator_is_psd() {
        let g = curved(16, 0.2, 4);
        let b = random_line_bundle(&g, 1, 0.3, 5).unwrap();
        let w = g.area_weights();
        for seed in 0..5 {
            let s = bandlimited_section(16, 16, 6, 100 + seed);
            let ns = normal_plus_apply(&g, &b, &s).unwrap();
            let q = dot_w(&s, &ns, w);
            assert!(q.im.abs() < 1e-10 * q.re.abs().max(1.0));
            assert!(q.re > -1e-10);
        }
    }

    #[test]
    fn kernel_dimension_counts_flux() {
        // Constant flux c1 > 0: both normal operators have |c1| null modes
        // (the matrices are adjoint-related, so their nullities agree); the
        // grading split of physical vs replica modes is examined in the
        // spectral module.
        let g = flat(16);
        for c1 in [1i64, 2, 3] {
            let b = constant_curvature_bundle(&g, c1).unwrap();
            let m = dense_sym(&g, |s| normal_plus_apply(&g, &b, s).unwrap());
            let (vals, _) = crate::hermeig::hermitian_eig(g.len(), m);
            let h = g.h1();
            let scale = 8.0 / (h * h);
            let count = vals.iter().filter(|&&v| v.abs() < 1e-8 * scale).count();
            assert_eq!(count as i64, c1, "c1 = {c1}: kernel {count}");
        }
    }

    #[test]
    fn plus_minus_nonzero_spectra_coincide() {
        let g = curved(12, 0.15, 9);
        let b = random_line_bundle(&g, 2, 0.3, 13).unwrap();
        let mp = dense_sym(&g, |s| normal_plus_apply(&g, &b, s).unwrap());
        let mm = dense_sym(&g, |s| normal_minus_apply(&g, &b, s).unwrap());
        let (vp, _) = crate::hermeig::hermitian_eig(g.len(), mp);
        let (vm, _) = crate::hermeig::hermitian_eig(g.len(), mm);
        let top = vp.last().unwrap().max(*vm.last().unwrap());
        let nz = |v: &[f64]| -> Vec<f64> {
            v.iter().copied().filter(|&x| x > 1e-9 * top).collect()
        };
        let (zp, zm) = (nz(&vp), nz(&vm));
        assert_eq!(zp.len(), zm.len());
        for (a, bb) in zp.iter().zip(&zm) {
            assert!((a - bb).abs() < 1e-8 * top, "{a} vs {bb}");
        }
    }

    #[test]
    fn connection_laplacian_flat_and_psd() {
        let g = flat(16);
        let b = constant_curvature_bundle(&g, 0).unwrap();
        let h = TAU / 16.0;
        for (k, l) in [(1i64, 0i64), (2, 2), (0, 3)] {
            let s = fourier_mode(&g, k, l);
            let out = cl_half_apply(&g, &b, Grading::Plus, &s).unwrap();
            let lam = (2.0 - 2.0 * (k as f64 * h).cos()) / (h * h)
                + (2.0 - 2.0 * (l as f64 * h).cos()) / (h * h);
            for i in 0..g.len() {
                assert!((out[i] - lam * s[i]).norm() < 1e-10);
            }
        }
        let g = curved(16, 0.2, 6);
        let b = random_line_bundle(&g, -2, 0.4, 7).unwrap();
        let w = g.area_weights();
        for grading in [Grading::Plus, Grading::Minus] {
            for seed in 0..4 {
                let s = bandlimited_section(16, 16, 6, 300 + seed);
                let cs = cl_half_apply(&g, &b, grading, &s).unwrap();
                let q = dot_w(&s, &cs, w);
                assert!(q.im.abs() < 1e-9 * q.re.abs().max(1.0));
                assert!(q.re > -1e-10);
            }
        }
    }

    #[test]
    fn magnetic_ground_level_refines_to_flux_density() {
        // λ_min(∇*∇) on the positive half of a constant-flux bundle
        // approaches |2π c1|/Vol as the grid refines.
        let target = 1.0 / TAU;
        let mut errs = Vec::new();
        for n in [12usize, 16, 20] {
            let g = flat(n);
            let b = constant_curvature_bundle(&g, 1).unwrap();
            let m = dense_sym(&g, |s| cl_half_apply(&g, &b, Grading::Plus, s).unwrap());
            let (vals, _) = crate::hermeig::hermitian_eig(g.len(), m);
            errs.push((vals[0] - target).abs() / target);
        }
        assert!(errs[2] < errs[0], "errors {errs:?}");
        assert!(errs[2] < 0.05, "errors {errs:?}");
    }

    #[test]
    fn bochner_identity_flat_trivial_exact() {
        // The forward-difference cross terms cancel exactly only on modes
        // with k = 0, l = 0, or k = l (where sin((l-k)h) + sin(kh) - sin(lh)
        // vanishes identically); on that family the identity is exact at
        // machine precision, and by linearity on its span.
        let g = flat(16);
        let b = constant_curvature_bundle(&g, 0).unwrap();
        let cd = crate::gauge::curvature_data(&g, &b).unwrap();
        let mut combined = vec![Cx::new(0.0, 0.0); g.len()];
        let mut coef = 1.0;
        for (k, l) in [(1i64, 0i64), (0, 2), (3, 3), (2, 0), (0, 1)] {
            let s = fourier_mode(&g, k, l);
            for grading in [Grading::Plus, Grading::Minus] {
                let r = bochner_residual(&g, &b, &cd, grading, &s).unwrap();
                assert!(r < 1e-12, "mode ({k},{l}) residual {r}");
            }
            for i in 0..g.len() {
                combined[i] += coef * s[i];
            }
            coef *= -0.6;
        }
        let r = bochner_residual(&g, &b, &cd, Grading::Plus, &combined).unwrap();
        assert!(r < 1e-12, "combined residual {r}");
        // A generic mode outside the family carries an O(h) defect instead.
        let s = fourier_mode(&g, 2, -2);
        let r = bochner_residual(&g, &b, &cd, Grading::Plus, &s).unwrap();
        assert!(r > 1e-3, "off-family residual unexpectedly small: {r}");
    }

    #[test]
    fn bochner_residual_refines_smooth_connection() {
        // Smooth curvature with a seam-free gauge (zero degree, perturbed
        // links): a fixed smooth section sees the residual shrink roughly
        // linearly in h. Degree-carrying bundles need covariantly smooth
        // test sections and are exercised with the eigensolver instead.
        let res_at = |n: usize, grading: Grading| -> f64 {
            let g = curved(n, 0.2, 17);
            let b = random_line_bundle(&g, 0, 0.3, 13).unwrap();
            let cd = crate::gauge::curvature_data(&g, &b).unwrap();
            let s = bandlimited_section(n, n, 2, 55);
            bochner_residual(&g, &b, &cd, grading, &s).unwrap()
        };
        for grading in [Grading::Plus, Grading::Minus] {
            let (r16, r32) = (res_at(16, grading), res_at(32, grading));
            let ratio = r32 / r16;
            assert!(
                ratio > 0.15 && ratio < 0.75,
                "r16={r16:.3e} r32={r32:.3e} ratio={ratio:.3}"
            );
        }
    }

    #[test]
    fn bochner_constant_section_curved_metric() {
        // On the negative half the coframe transport and the scalar
        // curvature term are both active, so even the constant section has
        // a nonzero residual that decays with refinement.
        let res_at = |n: usize| -> f64 {
            let g = curved(n, 0.25, 23);
            let b = constant_curvature_bundle(&g, 0).unwrap();
            let cd = crate::gauge::curvature_data(&g, &b).unwrap();
            let s = vec![Cx::new(1.0, 0.0); g.len()];
            bochner_residual(&g, &b, &cd, Grading::Minus, &s).unwrap()
        };
        let (r16, r32) = (res_at(16), res_at(32));
        assert!(r16 > 1e-8, "expected a nontrivial residual, got {r16:.3e}");
        assert!(r32 < 0.75 * r16, "r16={r16:.3e} r32={r32:.3e}");
    }

    #[test]
    fn clifford_relations() {
        let g = curved(16, 0.2, 8);
        let n = g.len();
        let w = g.area_weights();
        let v1 = bandlimited_real(16, 16, 2, 0.8, 61);
        let v2 = bandlimited_real(16, 16, 2, 0.8, 62);
        let s = GradedSection {
            plus: bandlimited_section(16, 16, 4, 63),
            minus: bandlimited_section(16, 16, 4, 64),
        };
        // c(v)² = -|v|²
        let cs = clifford_mul(&v1, &v2, &s);
        let ccs = clifford_mul(&v1, &v2, &cs);
        for i in 0..n {
            let vv = v1[i] * v1[i] + v2[i] * v2[i];
            assert!((ccs.plus[i] + vv * s.plus[i]).norm() < 1e-12);
            assert!((ccs.minus[i] + vv * s.minus[i]).norm() < 1e-12);
        }
        // pointwise isometry for unit v
        let ones = vec![1.0; n];
        let zeros = vec![0.0; n];
        let cu = clifford_mul(&ones, &zeros, &s);
        for i in 0..n {
            let a = cu.plus[i].norm_sqr() + cu.minus[i].norm_sqr();
            let bq = s.plus[i].norm_sqr() + s.minus[i].norm_sqr();
            assert!((a - bq).abs() < 1e-12 * bq.max(1.0));
        }
        // skew-adjointness: Re⟨s, c(v)s⟩ = 0
        let ip = dot_w(&s.plus, &cs.plus, w) + dot_w(&s.minus, &cs.minus, w);
        let scale = (norm_w(&s.plus, w) + norm_w(&s.minus, w)).powi(2);
        assert!(ip.re.abs() < 1e-12 * scale.max(1.0));
    }

    #[test]
    fn weighted_adjoint_exactness_and_leibniz() {
        let g = curved(16, 0.2, 31);
        let b = random_line_bundle(&g, 1, 0.3, 32).unwrap();
        let n = g.len();
        let w = g.area_weights();
        let phi = bandlimited_real(16, 16, 2, 0.4, 33);
        // φ const → D*_φ = D exactly
        let s = GradedSection {
            plus: bandlimited_section(16, 16, 4, 34),
            minus: bandlimited_section(16, 16, 4, 35),
        };
        let cphi = vec![0.7; n];
        let a = weighted_adjoint_apply(&g, &b, &cphi, &s).unwrap();
        let d = full_dirac_apply(&g, &b, &s).unwrap();
        for i in 0..n {
            assert!((a.plus[i] - d.plus[i]).norm() < 1e-12);
            assert!((a.minus[i] - d.minus[i]).norm() < 1e-12);
        }
        // adjointness in the weighted product: ⟨D*_φ s, t⟩_φ = ⟨s, D t⟩_φ
        let t = GradedSection {
            plus: bandlimited_section(16, 16, 4, 36),
            minus: bandlimited_section(16, 16, 4, 37),
        };
        let wphi: Vec<f64> = (0..n).map(|i| w[i] * (-phi[i]).exp()).collect();
        let astar = weighted_adjoint_apply(&g, &b, &phi, &s).unwrap();
        let dt = full_dirac_apply(&g, &b, &t).unwrap();
        let lhs = dot_w(&astar.plus, &t.plus, &wphi) + dot_w(&astar.minus, &t.minus, &wphi);
        let rhs = dot_w(&s.plus, &dt.plus, &wphi) + dot_w(&s.minus, &dt.minus, &wphi);
        let scale = (norm_w(&s.plus, &wphi) + norm_w(&s.minus, &wphi))
            * (norm_w(&dt.plus, &wphi) + norm_w(&dt.minus, &wphi));
        assert!((lhs - rhs).norm() < 1e-12 * scale.max(1.0));
        // Leibniz form agrees to first order under refinement
        let defect_at = |nn: usize| -> f64 {
            let g = curved(nn, 0.2, 31);
            let b = random_line_bundle(&g, 1, 0.3, 32).unwrap();
            let phi = bandlimited_real(nn, nn, 2, 0.4, 33);
            let s = GradedSection {
                plus: bandlimited_section(nn, nn, 2, 38),
                minus: bandlimited_section(nn, nn, 2, 39),
            };
            let w = g.area_weights();
            let a = weighted_adjoint_apply(&g, &b, &phi, &s).unwrap();
            let l = weighted_adjoint_leibniz(&g, &b, &phi, &s).unwrap();
            let dp: Vec<Cx> = (0..g.len()).map(|i| a.plus[i] - l.plus[i]).collect();
            let dm: Vec<Cx> = (0..g.len()).map(|i| a.minus[i] - l.minus[i]).collect();
            (norm_w(&dp, w) + norm_w(&dm, w))
                / (norm_w(&s.plus, w) + norm_w(&s.minus, w))
        };
        let (d16, d32) = (defect_at(16), defect_at(32));
        assert!(d32 < 0.75 * d16, "d16={d16:.3e} d32={d32:.3e}");
    }

    #[test]
    fn full_dirac_spectrum_symmetric() {
        // Eigenvalues of the graded operator come in ± pairs: equivalent to
        // the coincidence of the nonzero spectra of the two normal
        // operators, checked densely on a small grid.
        let g = flat(12);
        let b = random_line_bundle(&g, 1, 0.2, 41).unwrap();
        let w = g.area_weights();
        let s = bandlimited_section(12, 12, 4, 42);
        // sanity: ⟨Ds, Ds⟩ splits into the two halves consistently
        let gs = GradedSection {
            plus: s.clone(),
            minus: vec![Cx::new(0.0, 0.0); g.len()],
        };
        let d = full_dirac_apply(&g, &b, &gs).unwrap();
        let q = dot_w(&d.minus, &d.minus, w).re;
        let ns = normal_plus_apply(&g, &b, &s).unwrap();
        let q2 = dot_w(&s, &ns, w).re;
        assert!((q - q2).abs() < 1e-10 * q.abs().max(1.0));
    }
}
