//! Hermitian bundles over the torus as lattice gauge fields: unitary link
//! matrices, plaquette curvature, Chern number, extremal curvature
//! eigenvalue fields and the split curvature endomorphisms acting on the
//! two half-spinor summands.

use crate::error::{Error, Result};
use crate::field::Cx;
use crate::geometry::TorusGeometry;
use crate::hermeig::{hermitian_eig, unitary_eig};
use crate::par::map_sites;
use rand::Rng;

/// Unitary parallel transport along the `+x` and `+y` edges of the torus
/// grid, one `rank x rank` matrix per site (flattened row-major).
///
/// `link_x[i]` transports a fiber value at site `i + x̂` into the frame at
/// site `i`; likewise for `y`.
#[derive(Debug, Clone)]
pub struct HermitianBundle {
    pub rank: usize,
    pub link_x: Vec<Cx>,
    pub link_y: Vec<Cx>,
}

impl HermitianBundle {
    fn block(v: &[Cx], i: usize, r: usize) -> &[Cx] {
        &v[i * r * r..(i + 1) * r * r]
    }

    pub fn lx(&self, i: usize) -> &[Cx] {
        Self::block(&self.link_x, i, self.rank)
    }

    pub fn ly(&self, i: usize) -> &[Cx] {
        Self::block(&self.link_y, i, self.rank)
    }

    /// Rank-1 links as plain complex slices.
    pub fn line_links(&self) -> Result<(&[Cx], &[Cx])> {
        if self.rank != 1 {
            return Err(Error::InvalidParameter(format!(
                "operation requires a line bundle, got rank {}",
                self.rank
            )));
        }
        Ok((&self.link_x, &self.link_y))
    }

    /// Largest deviation of any link from unitarity.
    pub fn unitarity_defect(&self) -> f64 {
        let r = self.rank;
        let sites = self.link_x.len() / (r * r);
        let mut worst = 0.0f64;
        for links in [&self.link_x, &self.link_y] {
            for i in 0..sites {
                let m = Self::block(links, i, r);
                for a in 0..r {
                    for b in 0..r {
                        let mut acc = Cx::new(0.0, 0.0);
                        for k in 0..r {
                            acc += m[k * r + a].conj() * m[k * r + b];
                        }
                        let expect = if a == b { 1.0 } else { 0.0 };
                        worst = worst.max((acc - expect).norm());
                    }
                }
            }
        }
        worst
    }
}

fn matmul(r: usize, a: &[Cx], b: &[Cx]) -> Vec<Cx> {
    let mut out = vec![Cx::new(0.0, 0.0); r * r];
    for i in 0..r {
        for k in 0..r {
            let aik = a[i * r + k];
            for j in 0..r {
                out[i * r + j] += aik * b[k * r + j];
            }
        }
    }
    out
}

fn dagger(r: usize, a: &[Cx]) -> Vec<Cx> {
    let mut out = vec![Cx::new(0.0, 0.0); r * r];
    for i in 0..r {
        for j in 0..r {
            out[i * r + j] = a[j * r + i].conj();
        }
    }
    out
}

/// Holonomy around the plaquette with corner `i`:
/// `W = U_x(i) U_y(i+x̂) U_x(i+ŷ)† U_y(i)†`.
pub fn plaquette(geom: &TorusGeometry, bundle: &HermitianBundle, i: usize) -> Vec<Cx> {
    let r = bundle.rank;
    let a = matmul(r, bundle.lx(i), bundle.ly(geom.xp(i)));
    let b = matmul(r, &a, &dagger(r, bundle.lx(geom.yp(i))));
    matmul(r, &b, &dagger(r, bundle.ly(i)))
}

/// Per-plaquette curvature angle matrices: the Hermitian `Φ_i` with
/// `W_i = exp(-i Φ_i)`, eigenvalues on the principal branch `(-π, π]`.
/// For rank 1 this is the scalar `-arg(W_i)`.
fn plaquette_angles(geom: &TorusGeometry, bundle: &HermitianBundle) -> Result<Vec<Cx>> {
    let r = bundle.rank;
    let n = geom.len();
    let out: Vec<Vec<Cx>> = map_sites(n, |i| {
        let w = plaquette(geom, bundle, i);
        if r == 1 {
            vec![Cx::new(-w[0].arg(), 0.0)]
        } else {
            let (vals, basis) = unitary_eig(r, &w);
            let mut phi = vec![Cx::new(0.0, 0.0); r * r];
            for a in 0..r {
                for b in 0..r {
                    let mut acc = Cx::new(0.0, 0.0);
                    for k in 0..r {
                        acc += basis[a * r + k] * (-vals[k].arg()) * basis[b * r + k].conj();
                    }
                    phi[a * r + b] = acc;
                }
            }
            phi
        }
    });
    // branch-cut guard: angles too close to ±π are ambiguous
    for phi in &out {
        if r == 1 {
            if phi[0].re.abs() >= std::f64::consts::PI - 1e-6 {
                return Err(Error::InvalidParameter(
                    "flux too concentrated: plaquette phase on branch cut".into(),
                ));
            }
        } else {
            // eigenvalue bound via row-sum norm
            let bound: f64 = (0..r)
                .map(|a| (0..r).map(|b| phi[a * r + b].norm()).sum::<f64>())
                .fold(0.0, f64::max);
            if bound >= std::f64::consts::PI - 1e-6 {
                return Err(Error::InvalidParameter(
                    "flux too concentrated: plaquette phase near branch cut".into(),
                ));
            }
        }
    }
    Ok(out.into_iter().flatten().collect())
}

/// Identity-link bundle of the given rank.
pub fn trivial_bundle(geom: &TorusGeometry, rank: usize) -> HermitianBundle {
    let n = geom.len();
    let mut link = vec![Cx::new(0.0, 0.0); n * rank * rank];
    for i in 0..n {
        for a in 0..rank {
            link[i * rank * rank + a * rank + a] = Cx::new(1.0, 0.0);
        }
    }
    HermitianBundle {
        rank,
        link_x: link.clone(),
        link_y: link,
    }
}

/// Line bundle with constant plaquette flux summing to `2π c1`.
///
/// All links are 1 except `U_y(i) = exp(-i 2π c1 ix / (N1 N2))` and the
/// seam column `U_x(N1-1, iy) = exp(+i 2π c1 iy / N2)`; every plaquette
/// then carries the identical angle `2π c1/(N1 N2)`.
pub fn constant_curvature_bundle(geom: &TorusGeometry, c1: i64) -> Result<HermitianBundle> {
    let (n1, n2) = (geom.n1, geom.n2);
    let quarter = (n1 * n2 / 4) as i64;
    if c1.abs() > quarter {
        return Err(Error::InvalidParameter(format!(
            "flux per plaquette too large: |c1| = {} exceeds N1·N2/4 = {quarter}",
            c1.abs()
        )));
    }
    let n = geom.len();
    let theta = std::f64::consts::TAU * c1 as f64 / (n1 * n2) as f64;
    let mut ux = vec![Cx::new(1.0, 0.0); n];
    let mut uy = vec![Cx::new(1.0, 0.0); n];
    for i in 0..n {
        let (ix, iy) = geom.coords(i);
        uy[i] = Cx::from_polar(1.0, -theta * ix as f64);
        if ix == n1 - 1 {
            ux[i] = Cx::from_polar(
                1.0,
                std::f64::consts::TAU * c1 as f64 * iy as f64 / n2 as f64,
            );
        }
    }
    Ok(HermitianBundle {
        rank: 1,
        link_x: ux,
        link_y: uy,
    })
}

/// Deterministic random line bundle: constant flux `2π c1` plus a mean-zero
/// bandlimited plaquette perturbation whose largest angle is
/// `roughness · h1 h2`. The perturbation is the lattice curl of a random
/// link phase, so the total flux (and the Chern number) is exactly
/// preserved.
pub fn random_line_bundle(
    geom: &TorusGeometry,
    c1: i64,
    roughness: f64,
    seed: u64,
) -> Result<HermitianBundle> {
    if !(roughness >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "roughness must be nonnegative, got {roughness}"
        )));
    }
    let mut bundle = constant_curvature_bundle(geom, c1)?;
    if roughness == 0.0 {
        return Ok(bundle);
    }
    let n = geom.len();
    let psi = crate::field::bandlimited_real(geom.n1, geom.n2, 2, 1.0, seed);
    // link phase increments: alpha_x = -(psi(i+ŷ) - psi(i)), alpha_y = +(psi(i+x̂) - psi(i))
    let ax: Vec<f64> = (0..n).map(|i| -(psi[geom.yp(i)] - psi[i])).collect();
    let ay: Vec<f64> = (0..n).map(|i| psi[geom.xp(i)] - psi[i]).collect();
    // raw plaquette angle of the perturbation alone
    let mut raw_max = 0.0f64;
    for i in 0..n {
        let d = ax[i] + ay[geom.xp(i)] - ax[geom.yp(i)] - ay[i];
        raw_max = raw_max.max(d.abs());
    }
    if raw_max == 0.0 {
        return Ok(bundle);
    }
    let scale = roughness * geom.h1() * geom.h2() / raw_max;
    for i in 0..n {
        bundle.link_x[i] *= Cx::from_polar(1.0, scale * ax[i]);
        bundle.link_y[i] *= Cx::from_polar(1.0, scale * ay[i]);
    }
    Ok(bundle)
}

/// Deterministic random bundle of rank `r <= 4`: for rank 1 the line-bundle
/// generator; otherwise a direct sum of rank-1 random bundles whose fluxes
/// sum to `2π c1`, conjugated by one constant unitary frame rotation.
pub fn random_bundle(
    geom: &TorusGeometry,
    c1: i64,
    roughness: f64,
    seed: u64,
    rank: usize,
) -> Result<HermitianBundle> {
    if rank == 0 || rank > 4 {
        return Err(Error::InvalidParameter(format!(
            "rank must be between 1 and 4, got {rank}"
        )));
    }
    if rank == 1 {
        return random_line_bundle(geom, c1, roughness, seed);
    }
    let r = rank;
    let n = geom.len();
    // split c1 across the diagonal blocks
    let base = c1.div_euclid(r as i64);
    let rem = c1 - base * r as i64;
    let blocks: Vec<HermitianBundle> = (0..r)
        .map(|j| {
            let cj = base + if (j as i64) < rem { 1 } else { 0 };
            random_line_bundle(geom, cj, roughness, seed.wrapping_add(1 + j as u64))
        })
        .collect::<Result<_>>()?;
    let q = random_unitary(r, seed.wrapping_add(99));
    let qd = dagger(r, &q);
    let mut link_x = vec![Cx::new(0.0, 0.0); n * r * r];
    let mut link_y = vec![Cx::new(0.0, 0.0); n * r * r];
    for i in 0..n {
        let mut dx = vec![Cx::new(0.0, 0.0); r * r];
        let mut dy = vec![Cx::new(0.0, 0.0); r * r];
        for j in 0..r {
            dx[j * r + j] = blocks[j].link_x[i];
            dy[j * r + j] = blocks[j].link_y[i];
        }
        let cx = matmul(r, &qd, &matmul(r, &dx, &q));
        let cy = matmul(r, &qd, &matmul(r, &dy, &q));
        link_x[i * r * r..(i + 1) * r * r].copy_from_slice(&cx);
        link_y[i * r * r..(i + 1) * r * r].copy_from_slice(&cy);
    }
    Ok(HermitianBundle {
        rank: r,
        link_x,
        link_y,
    })
}

/// Random constant unitary matrix (Gram-Schmidt of a random complex matrix).
pub fn random_unitary(r: usize, seed: u64) -> Vec<Cx> {
    let mut rng = crate::field::rng_from(seed);
    let mut m: Vec<Cx> = (0..r * r)
        .map(|_| Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    // Gram-Schmidt on columns
    for c in 0..r {
        for prev in 0..c {
            let mut dot = Cx::new(0.0, 0.0);
            for i in 0..r {
                dot += m[i * r + prev].conj() * m[i * r + c];
            }
            for i in 0..r {
                let sub = dot * m[i * r + prev];
                m[i * r + c] -= sub;
            }
        }
        let nrm: f64 = (0..r).map(|i| m[i * r + c].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..r {
            m[i * r + c] /= nrm;
        }
    }
    m
}

/// Apply a per-site gauge transformation `g`: `U'_d(i) = g_i† U_d(i) g_{i+d}`.
pub fn gauge_transform(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    g: &[Cx],
) -> Result<HermitianBundle> {
    let r = bundle.rank;
    let n = geom.len();
    if g.len() != n * r * r {
        return Err(Error::InvalidParameter(
            "gauge field length does not match bundle".into(),
        ));
    }
    let gblock = |i: usize| &g[i * r * r..(i + 1) * r * r];
    let mut link_x = vec![Cx::new(0.0, 0.0); n * r * r];
    let mut link_y = vec![Cx::new(0.0, 0.0); n * r * r];
    for i in 0..n {
        let gd = dagger(r, gblock(i));
        let tx = matmul(r, &gd, &matmul(r, bundle.lx(i), gblock(geom.xp(i))));
        let ty = matmul(r, &gd, &matmul(r, bundle.ly(i), gblock(geom.yp(i))));
        link_x[i * r * r..(i + 1) * r * r].copy_from_slice(&tx);
        link_y[i * r * r..(i + 1) * r * r].copy_from_slice(&ty);
    }
    Ok(HermitianBundle {
        rank: r,
        link_x,
        link_y,
    })
}

/// First Chern number: the total principal-branch plaquette angle (of the
/// determinant for rank > 1) divided by 2π, verified to be an integer.
pub fn chern_number(geom: &TorusGeometry, bundle: &HermitianBundle) -> Result<i64> {
    let r = bundle.rank;
    let n = geom.len();
    let mut total = 0.0;
    for i in 0..n {
        let w = plaquette(geom, bundle, i);
        let angle = if r == 1 {
            -w[0].arg()
        } else {
            let (vals, _) = unitary_eig(r, &w);
            vals.iter().map(|z| -z.arg()).sum()
        };
        total += angle;
    }
    let c = total / std::f64::consts::TAU;
    let rounded = c.round();
    if (c - rounded).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "flux too concentrated: raw Chern sum {c} is not an integer"
        )));
    }
    Ok(rounded as i64)
}

/// Curvature fields of a bundle: the scalar (or matrix) curvature density,
/// its extremal eigenvalue fields, the split endomorphisms on the two
/// half-spinor summands, and their smallest-eigenvalue fields.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub rank: usize,
    /// Curvature density `F` (angle / metric area element), one Hermitian
    /// `r x r` block per site.
    pub f: Vec<Cx>,
    /// Smallest eigenvalue of `F` per site.
    pub theta: Vec<f64>,
    /// Largest eigenvalue of `F` per site.
    pub big_theta: Vec<f64>,
    /// Endomorphism on the positive half: `-F`.
    pub r_plus: Vec<Cx>,
    /// Endomorphism on the negative half: `F + K·Id`.
    pub r_minus: Vec<Cx>,
    /// Smallest eigenvalue of `r_plus`: `-Θ`.
    pub lambda_s_plus: Vec<f64>,
    /// Smallest eigenvalue of `r_minus`: `θ + K`.
    pub lambda_s_minus: Vec<f64>,
    /// Pointwise minimum of the two.
    pub lambda_s: Vec<f64>,
}

/// Assemble all curvature fields from plaquette holonomies and the
/// Gaussian curvature of the base metric.
pub fn curvature_data(geom: &TorusGeometry, bundle: &HermitianBundle) -> Result<CurvatureData> {
    let r = bundle.rank;
    let n = geom.len();
    let angles = plaquette_angles(geom, bundle)?;
    let karea = geom.gaussian_curvature();
    let area = geom.area_weights();
    let mut f = vec![Cx::new(0.0, 0.0); n * r * r];
    let mut theta = vec![0.0; n];
    let mut big_theta = vec![0.0; n];
    let mut r_plus = vec![Cx::new(0.0, 0.0); n * r * r];
    let mut r_minus = vec![Cx::new(0.0, 0.0); n * r * r];
    for i in 0..n {
        let dens = 1.0 / area[i];
        let block = &angles[i * r * r..(i + 1) * r * r];
        let fi: Vec<Cx> = block.iter().map(|z| z * dens).collect();
        f[i * r * r..(i + 1) * r * r].copy_from_slice(&fi);
        let (lo, hi) = if r == 1 {
            (fi[0].re, fi[0].re)
        } else {
            let (vals, _) = hermitian_eig(r, fi.clone());
            (vals[0], vals[r - 1])
        };
        theta[i] = lo;
        big_theta[i] = hi;
        for a in 0..r {
            for b in 0..r {
                let e = i * r * r + a * r + b;
                r_plus[e] = -f[e];
                r_minus[e] = f[e]
                    + if a == b {
                        Cx::new(karea[i], 0.0)
                    } else {
                        Cx::new(0.0, 0.0)
                    };
            }
        }
    }
    let lambda_s_plus: Vec<f64> = (0..n).map(|i| -big_theta[i]).collect();
    let lambda_s_minus: Vec<f64> = (0..n).map(|i| theta[i] + karea[i]).collect();
    let lambda_s: Vec<f64> = (0..n)
        .map(|i| lambda_s_plus[i].min(lambda_s_minus[i]))
        .collect();
    Ok(CurvatureData {
        rank: r,
        f,
        theta,
        big_theta,
        r_plus,
        r_minus,
        lambda_s_plus,
        lambda_s_minus,
        lambda_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_torus;
    use std::f64::consts::{PI, TAU};

    fn flat(n: usize) -> TorusGeometry {
        build_torus(TAU, TAU, n, n, vec![0.0; n * n]).unwrap()
    }

    #[test]
    fn constant_flux_chern_numbers() {
        let g = flat(32);
        for c1 in [-5i64, -1, 0, 1, 3, 5] {
            let b = constant_curvature_bundle(&g, c1).unwrap();
            assert_eq!(chern_number(&g, &b).unwrap(), c1);
            assert!(b.unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn trivial_bundle_is_identity() {
        let g = flat(16);
        let b = constant_curvature_bundle(&g, 0).unwrap();
        for z in b.link_x.iter().chain(&b.link_y) {
            assert!((z - Cx::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_curvature_density() {
        // c1 = -1 on the flat 2π x 2π torus: density = 2π c1 / Vol = -1/(2π).
        let g = flat(32);
        let b = constant_curvature_bundle(&g, -1).unwrap();
        let cd = curvature_data(&g, &b).unwrap();
        for i in 0..g.len() {
            assert!((cd.f[i].re + 1.0 / TAU).abs() < 1e-12);
            assert!((cd.lambda_s_plus[i] - 1.0 / TAU).abs() < 1e-12);
            assert!((cd.lambda_s_minus[i] + 1.0 / TAU).abs() < 1e-12);
            assert!((cd.lambda_s[i] + 1.0 / TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn flux_concentration_rejected() {
        let g = flat(8);
        assert!(constant_curvature_bundle(&g, 17).is_err());
        assert!(constant_curvature_bundle(&g, 16).is_ok());
    }

    #[test]
    fn rough_bundle_keeps_chern_and_changes_theta() {
        let g = flat(16);
        for c1 in [-2i64, 0, 3] {
            let b0 = random_line_bundle(&g, c1, 0.0, 5).unwrap();
            let bc = constant_curvature_bundle(&g, c1).unwrap();
            assert_eq!(b0.link_x, bc.link_x);
            assert_eq!(b0.link_y, bc.link_y);
            let b1 = random_line_bundle(&g, c1, 0.3, 5).unwrap();
            let b2 = random_line_bundle(&g, c1, 0.3, 6).unwrap();
            assert_eq!(chern_number(&g, &b1).unwrap(), c1);
            assert_eq!(chern_number(&g, &b2).unwrap(), c1);
            let t1 = curvature_data(&g, &b1).unwrap();
            let t2 = curvature_data(&g, &b2).unwrap();
            assert!(t1.theta != t2.theta, "different seeds must differ");
            let i1 = g.integrate(&t1.theta).unwrap();
            let i2 = g.integrate(&t2.theta).unwrap();
            assert!((i1 - i2).abs() < 1e-9, "∫θ is seed-independent for rank 1");
            assert!((i1 - TAU * c1 as f64).abs() < 1e-9);
            for i in 0..g.len() {
                assert!((t1.theta[i] - t1.big_theta[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn perturbation_amplitude_matches_roughness() {
        let g = flat(16);
        let b = random_line_bundle(&g, 2, 0.4, 9).unwrap();
        let bc = constant_curvature_bundle(&g, 2).unwrap();
        let mut worst = 0.0f64;
        for i in 0..g.len() {
            let w = plaquette(&g, &b, i)[0];
            let w0 = plaquette(&g, &bc, i)[0];
            worst = worst.max((-(w.arg()) + w0.arg()).abs());
        }
        let expect = 0.4 * g.h1() * g.h2();
        assert!((worst - expect).abs() < 1e-12 * expect.max(1.0));
    }

    #[test]
    fn gauge_invariance() {
        let g = flat(16);
        let b = random_line_bundle(&g, -2, 0.3, 11).unwrap();
        let mut rng = crate::field::rng_from(13);
        let gph: Vec<Cx> = (0..g.len())
            .map(|_| Cx::from_polar(1.0, TAU * (rng.gen::<f64>() - 0.5)))
            .collect();
        let bt = gauge_transform(&g, &b, &gph).unwrap();
        assert_eq!(chern_number(&g, &bt).unwrap(), -2);
        let t0 = curvature_data(&g, &b).unwrap();
        let t1 = curvature_data(&g, &bt).unwrap();
        for i in 0..g.len() {
            assert!((t0.theta[i] - t1.theta[i]).abs() < 1e-10);
            assert!((t0.lambda_s[i] - t1.lambda_s[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn pointwise_min_law_and_integral_monotonicity() {
        let g = build_torus(
            TAU,
            TAU,
            16,
            16,
            crate::field::bandlimited_real(16, 16, 2, 0.2, 21),
        )
        .unwrap();
        for (c1, rough, seed) in [(1i64, 0.3, 1u64), (-3, 0.5, 2), (0, 0.4, 3), (4, 0.2, 4)] {
            let b = random_line_bundle(&g, c1, rough, seed).unwrap();
            let cd = curvature_data(&g, &b).unwrap();
            for i in 0..g.len() {
                assert_eq!(cd.lambda_s[i], cd.lambda_s_plus[i].min(cd.lambda_s_minus[i]));
            }
            let is = g.integrate(&cd.lambda_s).unwrap();
            let ip = g.integrate(&cd.lambda_s_plus).unwrap();
            let im = g.integrate(&cd.lambda_s_minus).unwrap();
            assert!(is <= ip.min(im) + 1e-12);
        }
    }

    #[test]
    fn rank_two_bundle_trace_pinching() {
        let g = flat(16);
        for c1 in [-3i64, 0, 5] {
            let b = random_bundle(&g, c1, 0.3, 17, 2).unwrap();
            assert!(b.unitarity_defect() < 1e-12, "defect {}", b.unitarity_defect());
            assert_eq!(chern_number(&g, &b).unwrap(), c1);
            let cd = curvature_data(&g, &b).unwrap();
            let it = g.integrate(&cd.theta).unwrap();
            let ib = g.integrate(&cd.big_theta).unwrap();
            let mid = TAU * c1 as f64 / 2.0;
            assert!(
                it <= mid + 1e-9 && mid <= ib + 1e-9,
                "pinching failed: {it} <= {mid} <= {ib}"
            );
            for i in 0..g.len() {
                assert!(cd.theta[i] <= cd.big_theta[i] + 1e-12);
            }
        }
    }

    #[test]
    fn rank_two_gauge_invariance_of_spectral_fields() {
        let g = flat(16);
        let b = random_bundle(&g, 2, 0.2, 23, 2).unwrap();
        let r = 2usize;
        let mut gfield = vec![Cx::new(0.0, 0.0); g.len() * r * r];
        for i in 0..g.len() {
            let q = random_unitary(r, 1000 + i as u64);
            gfield[i * r * r..(i + 1) * r * r].copy_from_slice(&q);
        }
        let bt = gauge_transform(&g, &b, &gfield).unwrap();
        assert!(bt.unitarity_defect() < 1e-10);
        assert_eq!(chern_number(&g, &bt).unwrap(), 2);
        let t0 = curvature_data(&g, &b).unwrap();
        let t1 = curvature_data(&g, &bt).unwrap();
        for i in 0..g.len() {
            assert!((t0.theta[i] - t1.theta[i]).abs() < 1e-9);
            assert!((t0.big_theta[i] - t1.big_theta[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_curvature_fields_vanish() {
        let g = flat(16);
        let b = constant_curvature_bundle(&g, 0).unwrap();
        let cd = curvature_data(&g, &b).unwrap();
        for i in 0..g.len() {
            assert!(cd.r_plus[i].norm() < 1e-14);
            assert!(cd.r_minus[i].norm() < 1e-14);
            assert!(cd.lambda_s[i].abs() < 1e-14);
        }
    }

    #[test]
    fn curvature_angle_in_branch() {
        let g = flat(16);
        let b = random_line_bundle(&g, 5, 0.5, 31).unwrap();
        for i in 0..g.len() {
            let w = plaquette(&g, &b, i)[0];
            let a = -w.arg();
            assert!(a > -PI && a <= PI);
        }
    }
}
