//! Smallest-eigenpair computation for Hermitian PSD maps in weighted inner
//! products, the scalar Schrödinger comparison operators, mode
//! classification (smooth versus grid-replica branches of the forward
//! difference stencil), and the eigenvalue-bound reports.

use crate::dirac::{cl_half_apply, normal_minus_apply, normal_plus_apply, Grading};
use crate::error::{Error, Result};
use crate::field::{dot_w, norm_w, rng_from, unit, Cx};
use crate::gauge::{chern_number, curvature_data, HermitianBundle};
use crate::geometry::TorusGeometry;
use serde::{Deserialize, Serialize};

/// Default seed for eigen-iteration starting blocks.
pub const DEFAULT_EIG_SEED: u64 = 0xD1AC;

/// A Hermitian operator in a weighted inner product, applied matrix-free.
pub trait HermitianOp {
    fn dim(&self) -> usize;
    fn apply(&self, s: &[Cx]) -> Vec<Cx>;
    /// Site weights of the inner product the operator is Hermitian in.
    fn weight(&self) -> &[f64];
    /// Pointwise diagonal estimate used as a Jacobi preconditioner.
    fn diag(&self) -> Vec<f64>;
}

/// `D⁻D⁺` on the positive half.
pub struct NormalPlusOp<'a> {
    pub geom: &'a TorusGeometry,
    pub bundle: &'a HermitianBundle,
}

/// `D⁺D⁻` on the negative half.
pub struct NormalMinusOp<'a> {
    pub geom: &'a TorusGeometry,
    pub bundle: &'a HermitianBundle,
}

fn normal_diag(geom: &TorusGeometry) -> Vec<f64> {
    let (h1s, h2s) = (geom.h1() * geom.h1(), geom.h2() * geom.h2());
    let w = geom.area_weights();
    let u = &geom.u;
    (0..geom.len())
        .map(|i| {
            let (ix, iy) = (geom.xm(i), geom.ym(i));
            let own = w[i] * (-2.0 * u[i]).exp() * (1.0 / h1s + 1.0 / h2s);
            let from_x = w[ix] * (-2.0 * u[ix]).exp() / h1s;
            let from_y = w[iy] * (-2.0 * u[iy]).exp() / h2s;
            (own + from_x + from_y) / w[i]
        })
        .collect()
}

impl HermitianOp for NormalPlusOp<'_> {
    fn dim(&self) -> usize {
        self.geom.len()
    }
    fn apply(&self, s: &[Cx]) -> Vec<Cx> {
        normal_plus_apply(self.geom, self.bundle, s).expect("validated operator")
    }
    fn weight(&self) -> &[f64] {
        self.geom.area_weights()
    }
    fn diag(&self) -> Vec<f64> {
        normal_diag(self.geom)
    }
}

impl HermitianOp for NormalMinusOp<'_> {
    fn dim(&self) -> usize {
        self.geom.len()
    }
    fn apply(&self, s: &[Cx]) -> Vec<Cx> {
        normal_minus_apply(self.geom, self.bundle, s).expect("validated operator")
    }
    fn weight(&self) -> &[f64] {
        self.geom.area_weights()
    }
    fn diag(&self) -> Vec<f64> {
        normal_diag(self.geom)
    }
}

/// Connection Laplacian on the selected half.
pub struct ClHalfOp<'a> {
    pub geom: &'a TorusGeometry,
    pub bundle: &'a HermitianBundle,
    pub grading: Grading,
}

impl HermitianOp for ClHalfOp<'_> {
    fn dim(&self) -> usize {
        self.geom.len()
    }
    fn apply(&self, s: &[Cx]) -> Vec<Cx> {
        cl_half_apply(self.geom, self.bundle, self.grading, s).expect("validated operator")
    }
    fn weight(&self) -> &[f64] {
        self.geom.area_weights()
    }
    fn diag(&self) -> Vec<f64> {
        let (h1s, h2s) = (self.geom.h1() * self.geom.h1(), self.geom.h2() * self.geom.h2());
        (0..self.geom.len())
            .map(|i| (-2.0 * self.geom.u[i]).exp() * (2.0 / h1s + 2.0 / h2s))
            .collect()
    }
}

/// Scalar comparison operator `𝕃 = -c(n) Δ + λ_S` with `c(2) = 1/2` and
/// `c(n) = (n-1)/(n-2)` for `n ≥ 3`.
pub struct SchrodingerOp<'a> {
    geom: &'a TorusGeometry,
    lambda_s: Vec<f64>,
    coeff: f64,
}

impl<'a> SchrodingerOp<'a> {
    pub fn coefficient(&self) -> f64 {
        self.coeff
    }
}

/// Build the comparison operator; fails for `n < 2`.
pub fn schrodinger_l<'a>(
    geom: &'a TorusGeometry,
    lambda_s: &[f64],
    n: usize,
) -> Result<SchrodingerOp<'a>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "comparison operator needs dimension n >= 2, got {n}"
        )));
    }
    if lambda_s.len() != geom.len() {
        return Err(Error::InvalidParameter(
            "potential length does not match geometry".into(),
        ));
    }
    let coeff = if n == 2 {
        0.5
    } else {
        (n as f64 - 1.0) / (n as f64 - 2.0)
    };
    Ok(SchrodingerOp {
        geom,
        lambda_s: lambda_s.to_vec(),
        coeff,
    })
}

impl HermitianOp for SchrodingerOp<'_> {
    fn dim(&self) -> usize {
        self.geom.len()
    }
    fn apply(&self, s: &[Cx]) -> Vec<Cx> {
        let re: Vec<f64> = s.iter().map(|z| z.re).collect();
        let im: Vec<f64> = s.iter().map(|z| z.im).collect();
        let lre = self.geom.laplace_beltrami(&re).expect("validated operator");
        let lim = self.geom.laplace_beltrami(&im).expect("validated operator");
        (0..self.geom.len())
            .map(|i| {
                Cx::new(
                    -self.coeff * lre[i] + self.lambda_s[i] * s[i].re,
                    -self.coeff * lim[i] + self.lambda_s[i] * s[i].im,
                )
            })
            .collect()
    }
    fn weight(&self) -> &[f64] {
        self.geom.area_weights()
    }
    fn diag(&self) -> Vec<f64> {
        let (h1s, h2s) = (self.geom.h1() * self.geom.h1(), self.geom.h2() * self.geom.h2());
        (0..self.geom.len())
            .map(|i| {
                self.coeff * (-2.0 * self.geom.u[i]).exp() * (2.0 / h1s + 2.0 / h2s)
                    + self.lambda_s[i]
            })
            .collect()
    }
}

/// Result of a smallest-eigenpair solve.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<Cx>>,
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub tolerance: f64,
}

fn scaled_axpy(dst: &mut [Cx], c: Cx, src: &[Cx]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += c * s;
    }
}

/// Modified Gram-Schmidt in the weighted product, two passes, dropping
/// vectors whose direction is numerically contained in the earlier span
/// (relative angle test, so small-norm inputs keep their direction).
fn orthonormalize_w(mut basis: Vec<Vec<Cx>>, w: &[f64]) -> Vec<Vec<Cx>> {
    let mut kept: Vec<Vec<Cx>> = Vec::with_capacity(basis.len());
    for mut v in basis.drain(..) {
        let initial = norm_w(&v, w);
        if initial == 0.0 {
            continue;
        }
        let inv0 = 1.0 / initial;
        for z in &mut v {
            *z *= inv0;
        }
        for _pass in 0..2 {
            for q in &kept {
                let c = dot_w(q, &v, w);
                scaled_axpy(&mut v, -c, q);
            }
        }
        let n = norm_w(&v, w);
        if n > 1e-8 {
            let inv = 1.0 / n;
            for z in &mut v {
                *z *= inv;
            }
            kept.push(v);
        }
    }
    kept
}

fn random_block(n: usize, m: usize, seed: u64) -> Vec<Vec<Cx>> {
    let mut rng = rng_from(seed);
    (0..m)
        .map(|_| (0..n).map(|_| Cx::new(unit(&mut rng), unit(&mut rng))).collect())
        .collect()
}

/// Locally optimal blocked preconditioned eigen-iteration for the smallest
/// eigenpairs of a Hermitian PSD map, Rayleigh-Ritz over the block, its
/// preconditioned residuals, and the previous search directions, with full
/// reorthogonalization each step. Deterministic for a fixed seed.
pub fn smallest_eigenpairs_seeded(
    op: &dyn HermitianOp,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectralResult> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of a dimension-{n} operator"
        )));
    }
    let w = op.weight().to_vec();
    let m = (2 * k).clamp(k + 2, n);
    let diag = op.diag();
    let dmax = diag.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
    let floor = 1e-8 * dmax.max(1e-300);
    let precond: Vec<f64> = diag.iter().map(|&d| 1.0 / d.max(floor)).collect();

    let mut x = orthonormalize_w(random_block(n, m, seed), &w);
    let mut p: Vec<Vec<Cx>> = Vec::new();
    let mut best_res = f64::INFINITY;
    let mut last: Option<SpectralResult> = None;

    for iter in 1..=max_iter {
        // assemble the search basis [X, precond residuals, P]
        let ax: Vec<Vec<Cx>> = x.iter().map(|v| op.apply(v)).collect();
        let mut rayleigh: Vec<f64> = Vec::with_capacity(x.len());
        for (v, av) in x.iter().zip(&ax) {
            rayleigh.push(dot_w(v, av, &w).re);
        }
        let mut residuals: Vec<Vec<Cx>> = Vec::with_capacity(x.len());
        let mut resnorms: Vec<f64> = Vec::with_capacity(x.len());
        for j in 0..x.len() {
            let mut r: Vec<Cx> = ax[j].clone();
            scaled_axpy(&mut r, Cx::new(-rayleigh[j], 0.0), &x[j]);
            resnorms.push(norm_w(&r, &w));
            for (ri, &pc) in r.iter_mut().zip(&precond) {
                *ri *= pc;
            }
            let n = norm_w(&r, &w);
            if n > 0.0 {
                let inv = 1.0 / n;
                for ri in &mut r {
                    *ri *= inv;
                }
            }
            residuals.push(r);
        }
        let worst = resnorms
            .iter()
            .take(k.min(x.len()))
            .zip(rayleigh.iter())
            .map(|(&r, &lam)| r / lam.abs().max(1.0))
            .fold(0.0f64, f64::max);
        best_res = best_res.min(worst);

        let converged = x.len() >= k && worst <= tol;
        if converged || iter == max_iter {
            let result = SpectralResult {
                eigenvalues: rayleigh.iter().take(k).copied().collect(),
                eigenvectors: x.iter().take(k).cloned().collect(),
                residual_norms: resnorms.iter().take(k).copied().collect(),
                iterations: iter,
                tolerance: tol,
            };
            if converged {
                return Ok(result);
            }
            last = Some(result);
            break;
        }

        let mut basis: Vec<Vec<Cx>> = Vec::with_capacity(3 * m);
        basis.extend(x.iter().cloned());
        let nx = x.len();
        basis.extend(residuals);
        let nr = basis.len() - nx;
        basis.extend(p.iter().cloned());
        let basis = orthonormalize_w(basis, &w);
        let pdim = basis.len();

        // Rayleigh-Ritz on the orthonormalized basis
        let abasis: Vec<Vec<Cx>> = basis.iter().map(|v| op.apply(v)).collect();
        let mut h = vec![Cx::new(0.0, 0.0); pdim * pdim];
        for a in 0..pdim {
            for b in a..pdim {
                let v = dot_w(&basis[a], &abasis[b], &w);
                h[a * pdim + b] = v;
                h[b * pdim + a] = v.conj();
            }
        }
        let (_vals, vecs) = crate::hermeig::hermitian_eig(pdim, h);
        let take = m.min(pdim);
        let mut new_x: Vec<Vec<Cx>> = Vec::with_capacity(take);
        let mut new_p: Vec<Vec<Cx>> = Vec::with_capacity(take);
        for j in 0..take {
            let mut xj = vec![Cx::new(0.0, 0.0); n];
            let mut pj = vec![Cx::new(0.0, 0.0); n];
            for a in 0..pdim {
                let c = vecs[a * pdim + j];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                scaled_axpy(&mut xj, c, &basis[a]);
                if a >= nx && a < nx + nr || a >= nx + nr {
                    scaled_axpy(&mut pj, c, &basis[a]);
                }
            }
            new_x.push(xj);
            new_p.push(pj);
        }
        x = orthonormalize_w(new_x, &w);
        p = orthonormalize_w(new_p, &w);
        p.truncate(m);
        if x.is_empty() {
            return Err(Error::Eigensolver(
                "search block collapsed to zero rank".into(),
            ));
        }
    }
    let best = last.map(|r| {
        r.residual_norms
            .iter()
            .zip(&r.eigenvalues)
            .map(|(&rn, &lam)| rn / lam.abs().max(1.0))
            .fold(0.0f64, f64::max)
    });
    Err(Error::Eigensolver(format!(
        "no convergence within {max_iter} iterations; best residual {:.3e} (target {tol:.1e})",
        best.unwrap_or(best_res)
    )))
}

/// [`smallest_eigenpairs_seeded`] with the default deterministic seed.
pub fn smallest_eigenpairs(
    op: &dyn HermitianOp,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralResult> {
    smallest_eigenpairs_seeded(op, k, tol, max_iter, DEFAULT_EIG_SEED)
}

/// Largest-eigenvalue estimate by a fixed number of power iterations, used
/// to make kernel thresholds scale-aware.
pub fn spectral_scale(op: &dyn HermitianOp, seed: u64) -> f64 {
    let n = op.dim();
    let w = op.weight().to_vec();
    let mut v = random_block(n, 1, seed).pop().unwrap();
    let mut lam = 0.0;
    for _ in 0..10 {
        let av = op.apply(&v);
        let nrm = norm_w(&av, &w);
        if nrm == 0.0 {
            return 0.0;
        }
        lam = dot_w(&v, &av, &w).re / dot_w(&v, &v, &w).re;
        v = av;
        let inv = 1.0 / nrm;
        for z in &mut v {
            *z *= inv;
        }
    }
    lam.abs()
}

/// Dense reference eigendecomposition of a Hermitian map via symmetrization
/// by the weight; for oracle tests and small grids. Returns ascending
/// eigenvalues and eigenvectors in the original (unsymmetrized) variables.
pub fn dense_eigenpairs(op: &dyn HermitianOp) -> (Vec<f64>, Vec<Vec<Cx>>) {
    let n = op.dim();
    let w = op.weight().to_vec();
    let sqw: Vec<f64> = w.iter().map(|&x| x.sqrt()).collect();
    let mut m = vec![Cx::new(0.0, 0.0); n * n];
    for col in 0..n {
        let mut e = vec![Cx::new(0.0, 0.0); n];
        e[col] = Cx::new(1.0 / sqw[col], 0.0);
        let out = op.apply(&e);
        for row in 0..n {
            m[row * n + col] = out[row] * sqw[row];
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m[i * n + j] + m[j * n + i].conj()) * 0.5;
            m[i * n + j] = avg;
            m[j * n + i] = avg.conj();
        }
    }
    let (vals, vecs) = crate::hermeig::hermitian_eig(n, m);
    let mut out_vecs = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<Cx> = (0..n).map(|i| vecs[i * n + j] / sqw[i]).collect();
        let nrm = norm_w(&v, &w);
        let inv = 1.0 / nrm;
        for z in &mut v {
            *z *= inv;
        }
        out_vecs.push(v);
    }
    (vals, out_vecs)
}

/// Classification of computed eigenmodes into the smooth branch and the
/// grid-replica branch of the forward-difference stencil.
///
/// The one-sided stencil admits a second exact symbol zero in the interior
/// of the Brillouin zone, so low eigenvalues of the normal operators mix
/// smooth modes with replicas whose covariant energy sits at the grid
/// cutoff. Within each eigenvalue cluster the basis is rotated to
/// diagonalize the connection-Laplacian form; members with energy at most
/// `1/(h1 h2)` are the smooth ones.
#[derive(Debug, Clone)]
pub struct ModeClassification {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<Cx>>,
    pub energies: Vec<f64>,
    pub smooth: Vec<bool>,
    pub cutoff: f64,
}

/// Rotate each eigenvalue cluster to diagonalize the connection-Laplacian
/// quadratic form and flag the smooth members.
pub fn classify_modes(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    grading: Grading,
    result: &SpectralResult,
) -> Result<ModeClassification> {
    let w = geom.area_weights();
    let cutoff = 1.0 / (geom.h1() * geom.h2());
    let nmodes = result.eigenvalues.len();
    let mut eigenvalues = Vec::with_capacity(nmodes);
    let mut vectors: Vec<Vec<Cx>> = Vec::with_capacity(nmodes);
    let mut energies = Vec::with_capacity(nmodes);
    let mut smooth = Vec::with_capacity(nmodes);

    let mut start = 0;
    while start < nmodes {
        let mut end = start + 1;
        while end < nmodes {
            let gap = result.eigenvalues[end] - result.eigenvalues[end - 1];
            // wide enough to absorb the ~1e-5 lattice splitting between a
            // smooth level and its degenerate replica, far below level gaps
            if gap > 1e-4 * result.eigenvalues[end].abs().max(1.0) {
                break;
            }
            end += 1;
        }
        let cluster: Vec<Vec<Cx>> = result.eigenvectors[start..end].to_vec();
        let basis = orthonormalize_w(cluster, w);
        let p = basis.len();
        let applied: Vec<Vec<Cx>> = basis
            .iter()
            .map(|v| cl_half_apply(geom, bundle, grading, v))
            .collect::<Result<_>>()?;
        let mut h = vec![Cx::new(0.0, 0.0); p * p];
        for a in 0..p {
            for b in a..p {
                let v = dot_w(&basis[a], &applied[b], w);
                h[a * p + b] = v;
                h[b * p + a] = v.conj();
            }
        }
        let (evals, evecs) = crate::hermeig::hermitian_eig(p, h);
        for j in 0..p {
            let mut vj = vec![Cx::new(0.0, 0.0); geom.len()];
            for a in 0..p {
                scaled_axpy(&mut vj, evecs[a * p + j], &basis[a]);
            }
            eigenvalues.push(result.eigenvalues[start + j]);
            vectors.push(vj);
            energies.push(evals[j]);
            smooth.push(evals[j] <= cutoff);
        }
        start = end;
    }
    Ok(ModeClassification {
        eigenvalues,
        vectors,
        energies,
        smooth,
        cutoff,
    })
}

/// Smallest eigenvalue of the selected normal operator restricted to the
/// smooth branch, with its eigenvector.
pub fn lambda_min_smooth(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    grading: Grading,
    tol: f64,
) -> Result<(f64, Vec<Cx>)> {
    // A rough bundle hybridizes smooth modes with grid replicas whose
    // eigenvalues differ by far more than the cluster width, so a
    // per-cluster rotation cannot disentangle them. Instead, diagonalize
    // the covariant energy form over the whole computed span, keep the
    // directions below the grid cutoff, and minimize the normal form
    // within that smooth sub-span. On a branch-pure instance this reduces
    // to the smallest eigenvalue whose eigenvector is smooth. The replica
    // branch holds up to |c1| near-null modes plus its own low levels, so
    // start the block past that cluster and double it while the smooth
    // sub-span comes up empty.
    let flux = chern_number(geom, bundle)?.unsigned_abs() as usize;
    let w = geom.area_weights();
    let cutoff = 1.0 / (geom.h1() * geom.h2());
    let mut k = (8 + 2 * flux).min(geom.len());
    loop {
        let res = match grading {
            Grading::Plus => smallest_eigenpairs(&NormalPlusOp { geom, bundle }, k, tol, 600)?,
            Grading::Minus => smallest_eigenpairs(&NormalMinusOp { geom, bundle }, k, tol, 600)?,
        };
        let basis = orthonormalize_w(res.eigenvectors.clone(), w);
        let p = basis.len();
        let lap: Vec<Vec<Cx>> = basis
            .iter()
            .map(|v| cl_half_apply(geom, bundle, grading, v))
            .collect::<Result<_>>()?;
        let mut h = vec![Cx::new(0.0, 0.0); p * p];
        for a in 0..p {
            for b in a..p {
                let v = dot_w(&basis[a], &lap[b], w);
                h[a * p + b] = v;
                h[b * p + a] = v.conj();
            }
        }
        let (evals, evecs) = crate::hermeig::hermitian_eig(p, h);
        let smooth_dim = evals.iter().take_while(|&&e| e <= cutoff).count();
        if smooth_dim > 0 {
            let svecs: Vec<Vec<Cx>> = (0..smooth_dim)
                .map(|j| {
                    let mut v = vec![Cx::new(0.0, 0.0); geom.len()];
                    for a in 0..p {
                        scaled_axpy(&mut v, evecs[a * p + j], &basis[a]);
                    }
                    v
                })
                .collect();
            let applied: Vec<Vec<Cx>> = svecs
                .iter()
                .map(|v| match grading {
                    Grading::Plus => NormalPlusOp { geom, bundle }.apply(v),
                    Grading::Minus => NormalMinusOp { geom, bundle }.apply(v),
                })
                .collect();
            let q = smooth_dim;
            let mut m = vec![Cx::new(0.0, 0.0); q * q];
            for a in 0..q {
                for b in a..q {
                    let v = dot_w(&svecs[a], &applied[b], w);
                    m[a * q + b] = v;
                    m[b * q + a] = v.conj();
                }
            }
            let (mvals, mvecs) = crate::hermeig::hermitian_eig(q, m);
            let mut vec0 = vec![Cx::new(0.0, 0.0); geom.len()];
            for a in 0..q {
                scaled_axpy(&mut vec0, mvecs[a * q], &svecs[a]);
            }
            let nrm = norm_w(&vec0, w);
            if nrm > 0.0 {
                let inv = 1.0 / nrm;
                for z in &mut vec0 {
                    *z *= inv;
                }
            }
            return Ok((mvals[0], vec0));
        }
        if k >= geom.len() || k >= 64 {
            return Err(Error::Eigensolver(
                "no smooth mode among the computed eigenpairs; increase the block".into(),
            ));
        }
        k = (2 * k).min(geom.len());
    }
}

/// Dimension of the smooth kernel of the selected normal operator: count of
/// eigenvalues below `1e-8` times the power-iteration scale whose rotated
/// eigenvector lies on the smooth branch.
pub fn kernel_count(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    grading: Grading,
    budget: usize,
) -> Result<usize> {
    let k = budget.min(geom.len());
    let (res, scale) = match grading {
        Grading::Plus => {
            let op = NormalPlusOp { geom, bundle };
            (
                smallest_eigenpairs(&op, k, 1e-9, 800)?,
                spectral_scale(&op, DEFAULT_EIG_SEED + 1),
            )
        }
        Grading::Minus => {
            let op = NormalMinusOp { geom, bundle };
            (
                smallest_eigenpairs(&op, k, 1e-9, 800)?,
                spectral_scale(&op, DEFAULT_EIG_SEED + 1),
            )
        }
    };
    let threshold = 1e-8 * scale;
    if res.eigenvalues.last().copied().unwrap_or(0.0) < threshold && k < geom.len() {
        return Err(Error::Eigensolver(format!(
            "kernel may exceed the block of {k} pairs; raise the budget"
        )));
    }
    let cls = classify_modes(geom, bundle, grading, &res)?;
    Ok((0..cls.eigenvalues.len())
        .filter(|&j| cls.eigenvalues[j] < threshold && cls.smooth[j])
        .count())
}

/// One inequality line of a [`BoundReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IneqRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tol: f64,
    pub pass: bool,
}

fn record(name: &str, lhs: f64, rhs: f64, tol: f64) -> IneqRecord {
    IneqRecord {
        name: name.to_string(),
        lhs,
        rhs,
        slack: lhs - rhs,
        tol,
        pass: lhs >= rhs - tol,
    }
}

/// Eigenvalue lower bounds versus curvature integrals for one
/// geometry/bundle pair. The `lambda_min_*` fields are smooth-branch
/// minima; `raw_lambda_min_*` keep the unfiltered matrix minima for
/// diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub chern: i64,
    pub volume: f64,
    pub lambda_min_d2: f64,
    pub lambda_min_dp_dm: f64,
    pub lambda_min_dm_dp: f64,
    pub raw_lambda_min_dp_dm: f64,
    pub raw_lambda_min_dm_dp: f64,
    pub rhs_ungraded: f64,
    pub rhs_plus: f64,
    pub rhs_minus: f64,
    pub bar_bound: f64,
    pub graded_bar_bounds: [f64; 2],
    pub tol: f64,
    pub records: Vec<IneqRecord>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Assemble the eigenvalue-bound report: smooth-branch minima of the normal
/// operators on the left, curvature integrals and scalar comparison
/// eigenvalues on the right, every inequality recorded with its slack.
pub fn bound_report(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
    tol: f64,
) -> Result<BoundReport> {
    let curv = curvature_data(geom, bundle)?;
    let chern = chern_number(geom, bundle)?;
    let vol = geom.volume();
    let eig_tol = 1e-9;

    let (lam_mp, _) = lambda_min_smooth(geom, bundle, Grading::Plus, eig_tol)?;
    let (lam_pm, _) = lambda_min_smooth(geom, bundle, Grading::Minus, eig_tol)?;
    // The raw minima sit at numerical zero whenever the bundle has flux, and
    // the convergence test is absolute there; 1e-9 is unattainable on fine
    // grids while 1e-7 still pins the reported values far below any gap.
    // These two fields are diagnostics, not inputs to the inequality records.
    let raw_tol = 1e-7;
    let raw_mp = smallest_eigenpairs(&NormalPlusOp { geom, bundle }, 1, raw_tol, 600)?
        .eigenvalues[0];
    let raw_pm = smallest_eigenpairs(&NormalMinusOp { geom, bundle }, 1, raw_tol, 600)?
        .eigenvalues[0];
    let lambda_min_d2 = lam_mp.min(lam_pm);

    let rhs_ungraded = 2.0 / vol * geom.integrate(&curv.lambda_s)?;
    let rhs_plus = 2.0 / vol * geom.integrate(&curv.lambda_s_minus)?;
    let rhs_minus = 2.0 / vol * geom.integrate(&curv.lambda_s_plus)?;

    let lam_min_l = |pot: &[f64]| -> Result<f64> {
        let op = schrodinger_l(geom, pot, 2)?;
        Ok(smallest_eigenpairs(&op, 1, eig_tol, 800)?.eigenvalues[0])
    };
    let bar_bound = 2.0 * lam_min_l(&curv.lambda_s)?;
    let graded_bar_bounds = [
        2.0 * lam_min_l(&curv.lambda_s_plus)?,
        2.0 * lam_min_l(&curv.lambda_s_minus)?,
    ];

    let mut records = vec![
        record("eigen_ungraded", lambda_min_d2, rhs_ungraded, tol),
        record("eigen_graded_plus", lam_pm, rhs_plus, tol),
        record("eigen_graded_minus", lam_mp, rhs_minus, tol),
        record("bar_chain_lower", bar_bound, rhs_ungraded, tol),
        record("bar_chain_upper", lambda_min_d2, bar_bound, tol),
        record(
            "graded_improvement",
            graded_bar_bounds[0].min(graded_bar_bounds[1]),
            bar_bound,
            tol,
        ),
    ];
    if bundle.rank == 1 {
        let rhs_line = -std::f64::consts::TAU * chern as f64 / vol;
        records.push(record("line_bundle_degree", 0.5 * lam_mp, rhs_line, tol));
    }

    Ok(BoundReport {
        chern,
        volume: vol,
        lambda_min_d2,
        lambda_min_dp_dm: lam_pm,
        lambda_min_dm_dp: lam_mp,
        raw_lambda_min_dp_dm: raw_pm,
        raw_lambda_min_dm_dp: raw_mp,
        rhs_ungraded,
        rhs_plus,
        rhs_minus,
        bar_bound,
        graded_bar_bounds,
        tol,
        records,
    })
}
