//! Weight-function constructions: the Poisson weight that flattens the
//! curvature potential on compact tori, the pointwise positivity
//! functional, the Dirichlet slab ground state, and the blended
//! cylindrical-end weight with a certified margin.

use crate::error::{Error, Result};
use crate::field::{Cx};
use crate::geometry::{CylinderGrid, TorusGeometry};
use crate::spectral::{smallest_eigenpairs, HermitianOp};
use serde::{Deserialize, Serialize};

/// A scalar weight with cached first and second derivative data.
/// `laplacian` entries are `None` where the stencil would reach through a
/// truncation face (cylinder walls); on compact tori every entry is `Some`.
#[derive(Debug, Clone)]
pub struct WeightFunction {
    pub phi: Vec<f64>,
    pub grad_sq: Vec<f64>,
    pub laplacian: Vec<Option<f64>>,
}

/// Cache derivative data for a torus weight.
pub fn torus_weight(geom: &TorusGeometry, phi: Vec<f64>) -> Result<WeightFunction> {
    let grad_sq = geom.grad_sq(&phi)?;
    let laplacian = geom.laplace_beltrami(&phi)?.into_iter().map(Some).collect();
    Ok(WeightFunction {
        phi,
        grad_sq,
        laplacian,
    })
}

/// Cache derivative data for a cylinder weight.
pub fn cylinder_weight_function(cyl: &CylinderGrid, phi: Vec<f64>) -> Result<WeightFunction> {
    if phi.len() != cyl.len() {
        return Err(Error::InvalidParameter(
            "weight length does not match cylinder".into(),
        ));
    }
    let grad_sq = cyl.grad_sq(&phi);
    let laplacian = cyl.interior_laplacian(&phi);
    Ok(WeightFunction {
        phi,
        grad_sq,
        laplacian,
    })
}

/// The zero weight on a torus.
pub fn zero_weight(geom: &TorusGeometry) -> WeightFunction {
    WeightFunction {
        phi: vec![0.0; geom.len()],
        grad_sq: vec![0.0; geom.len()],
        laplacian: vec![Some(0.0); geom.len()],
    }
}

fn wdot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), ww)| x * y * ww).sum()
}

/// Solve `Δφ = mean(2λ_S) - 2λ_S` on the mean-zero subspace by conjugate
/// gradients in the area-weighted product; the result satisfies
/// `Δφ + 2λ_S = (2/Vol)∫λ_S` pointwise and has mean zero.
pub fn poisson_weight(geom: &TorusGeometry, lambda_s: &[f64]) -> Result<WeightFunction> {
    let n = geom.len();
    if lambda_s.len() != n {
        return Err(Error::InvalidParameter(
            "potential length does not match geometry".into(),
        ));
    }
    let w = geom.area_weights();
    let vol = geom.volume();
    let mean = 2.0 * geom.integrate(lambda_s)? / vol;
    // (-Δ)φ = 2λ_S - mean, right-hand side mean-zero by construction
    let b: Vec<f64> = lambda_s.iter().map(|&l| 2.0 * l - mean).collect();
    let bscale = b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let mut phi = vec![0.0; n];
    if bscale > 0.0 {
        let project = |v: &mut Vec<f64>| {
            let m = wdot(v, &vec![1.0; v.len()], w) / vol;
            for x in v.iter_mut() {
                *x -= m;
            }
        };
        let apply = |v: &[f64]| -> Vec<f64> {
            geom.laplace_beltrami(v)
                .expect("validated operator")
                .into_iter()
                .map(|x| -x)
                .collect()
        };
        let mut r = b.clone();
        project(&mut r);
        let bnorm = wdot(&r, &r, w).sqrt();
        let mut p = r.clone();
        let mut rr = wdot(&r, &r, w);
        let max_iter = 100_000;
        let mut converged = false;
        for _ in 0..max_iter {
            if rr.sqrt() <= 1e-10 * bnorm {
                converged = true;
                break;
            }
            let ap = apply(&p);
            let pap = wdot(&p, &ap, w);
            if pap <= 0.0 {
                return Err(Error::LinearSolver(
                    "curvature-potential solve broke down (indefinite step)".into(),
                ));
            }
            let alpha = rr / pap;
            for i in 0..n {
                phi[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = wdot(&r, &r, w);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        if !converged && rr.sqrt() > 1e-10 * bnorm {
            return Err(Error::LinearSolver(format!(
                "curvature-potential solve stalled at relative residual {:.3e}",
                rr.sqrt() / bnorm
            )));
        }
        project(&mut phi);
    }
    let wf = torus_weight(geom, phi)?;
    // defining-equation residual, pointwise
    let scale = bscale.max(mean.abs()).max(1.0);
    for i in 0..n {
        let resid = wf.laplacian[i].unwrap() + 2.0 * lambda_s[i] - mean;
        if resid.abs() > 1e-9 * scale {
            return Err(Error::LinearSolver(format!(
                "curvature-potential residual {resid:.3e} exceeds tolerance at site {i}"
            )));
        }
    }
    Ok(wf)
}

/// Pointwise minimum of `Δφ - (1 - 2/n)(1 + 1/ε)|∇φ|² + 2λ_S` over the
/// sites where the Laplacian is defined. At `n = 2` the gradient
/// coefficient is exactly zero.
pub fn positivity_margin(
    weight: &WeightFunction,
    lambda_s: &[f64],
    n: usize,
    eps: f64,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "positivity functional needs n >= 2, got {n}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if lambda_s.len() != weight.phi.len() {
        return Err(Error::InvalidParameter(
            "potential length does not match weight".into(),
        ));
    }
    let coeff = (1.0 - 2.0 / n as f64) * (1.0 + 1.0 / eps);
    let mut min = f64::INFINITY;
    for i in 0..weight.phi.len() {
        if let Some(lap) = weight.laplacian[i] {
            let v = lap - coeff * weight.grad_sq[i] + 2.0 * lambda_s[i];
            min = min.min(v);
        }
    }
    if min == f64::INFINITY {
        return Err(Error::InvalidParameter(
            "no site with a defined Laplacian".into(),
        ));
    }
    Ok(min)
}

/// The solvability constant `C = n/(2(n-1) + (n-2)ε)`.
pub fn c_constant(n: usize, eps: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "constant defined for n >= 2, got {n}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let nf = n as f64;
    Ok(nf / (2.0 * (nf - 1.0) + (nf - 2.0) * eps))
}

/// Dirichlet Laplacian on the first `ns` axial layers of a cylinder, with
/// cell-centered antisymmetric ghosts at both walls.
struct SlabOp<'a> {
    cyl: &'a CylinderGrid,
    ns: usize,
    weight: Vec<f64>,
}

impl SlabOp<'_> {
    fn sidx(&self, k: usize, iy: usize, ix: usize) -> usize {
        (k * self.cyl.nc + iy) * self.cyl.nc + ix
    }
}

impl HermitianOp for SlabOp<'_> {
    fn dim(&self) -> usize {
        self.ns * self.cyl.nc * self.cyl.nc
    }
    fn apply(&self, s: &[Cx]) -> Vec<Cx> {
        let nc = self.cyl.nc;
        let ht2 = self.cyl.ht() * self.cyl.ht();
        let hc2 = self.cyl.hc() * self.cyl.hc();
        let mut out = vec![Cx::new(0.0, 0.0); s.len()];
        for k in 0..self.ns {
            for iy in 0..nc {
                for ix in 0..nc {
                    let i = self.sidx(k, iy, ix);
                    let up = if k + 1 < self.ns {
                        s[self.sidx(k + 1, iy, ix)]
                    } else {
                        -s[i]
                    };
                    let dn = if k > 0 {
                        s[self.sidx(k - 1, iy, ix)]
                    } else {
                        -s[i]
                    };
                    let ax = (2.0 * s[i] - up - dn) / ht2;
                    let cy = (2.0 * s[i]
                        - s[self.sidx(k, (iy + 1) % nc, ix)]
                        - s[self.sidx(k, (iy + nc - 1) % nc, ix)])
                        / hc2;
                    let cx = (2.0 * s[i]
                        - s[self.sidx(k, iy, (ix + 1) % nc)]
                        - s[self.sidx(k, iy, (ix + nc - 1) % nc)])
                        / hc2;
                    out[i] = ax + cy + cx;
                }
            }
        }
        out
    }
    fn weight(&self) -> &[f64] {
        &self.weight
    }
    fn diag(&self) -> Vec<f64> {
        let ht2 = self.cyl.ht() * self.cyl.ht();
        let hc2 = self.cyl.hc() * self.cyl.hc();
        let nc = self.cyl.nc;
        let base = 2.0 / ht2 + 4.0 / hc2;
        (0..self.dim())
            .map(|i| {
                let k = i / (nc * nc);
                if k == 0 || k == self.ns - 1 {
                    base + 1.0 / ht2
                } else {
                    base
                }
            })
            .collect()
    }
}

/// Smallest Dirichlet eigenpair of the Laplacian on the axial slab
/// `(0, slab_len)` times the cross-section, walls between ghost and first
/// cell. The eigenfunction is returned positive, normalized to peak 1.
pub fn dirichlet_ground_state_slab(
    cyl: &CylinderGrid,
    slab_len: f64,
) -> Result<(f64, Vec<f64>)> {
    let ht = cyl.ht();
    let ns = (slab_len / ht).round() as usize;
    if ns < 4 {
        return Err(Error::InvalidParameter(
            "slab too thin for the ground-state solve".into(),
        ));
    }
    if ns > cyl.nt {
        return Err(Error::InvalidParameter(format!(
            "cylinder has {} axial layers, slab needs {ns}",
            cyl.nt
        )));
    }
    let dim = ns * cyl.nc * cyl.nc;
    let op = SlabOp {
        cyl,
        ns,
        weight: vec![cyl.cell_volume(); dim],
    };
    let res = smallest_eigenpairs(&op, 1, 1e-10, 2000)?;
    let mu = res.eigenvalues[0];
    let v = &res.eigenvectors[0];
    // rotate to a real field, fix the sign, verify positivity
    let imax = (0..dim)
        .max_by(|&a, &b| v[a].norm().partial_cmp(&v[b].norm()).unwrap())
        .unwrap();
    let phase = v[imax] / v[imax].norm();
    let mut eta: Vec<f64> = v.iter().map(|z| (z * phase.conj()).re).collect();
    let imag_leak: f64 = v
        .iter()
        .map(|z| (z * phase.conj()).im.abs())
        .fold(0.0, f64::max);
    let peak = eta.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if imag_leak > 1e-7 * peak {
        return Err(Error::Eigensolver(
            "ground state did not reduce to a real field".into(),
        ));
    }
    if eta[imax] < 0.0 {
        for x in &mut eta {
            *x = -*x;
        }
    }
    let min = eta.iter().fold(f64::INFINITY, |a, &x| a.min(x));
    if min <= 0.0 {
        return Err(Error::Eigensolver(format!(
            "ground state changed sign (min {min:.3e}); treating as solver failure"
        )));
    }
    for x in &mut eta {
        *x /= peak;
    }
    Ok((mu, eta))
}

/// [`dirichlet_ground_state_slab`] on the standard slab `(0, 3)`.
pub fn dirichlet_ground_state(cyl: &CylinderGrid) -> Result<(f64, Vec<f64>)> {
    dirichlet_ground_state_slab(cyl, 3.0)
}

/// Quintic smoothstep: 0 for `t ≤ 0`, 1 for `t ≥ 1`, monotone in between,
/// with continuous first and second derivatives at the plateau joints.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Construction parameters and certificates of a cylindrical-end weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CylinderWeightParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eps: f64,
    pub n: usize,
    pub mu: f64,
    /// `β` must stay below `γμ/(2 - 4/n)` for the construction to be
    /// guaranteed; the achieved margin is reported either way.
    pub beta_cap: f64,
    pub a_coeff: f64,
    pub margin: f64,
    pub argmin_tau: f64,
    pub argmin_in_compact_region: bool,
    #[serde(skip)]
    pub eta_slab: Vec<f64>,
    pub slab_layers: usize,
}

/// Why a cylinder weight construction failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureDiagnosis {
    /// The curvature term dominates the violation: the allowed negativity
    /// on the compact region was exceeded.
    BetaTooNegative,
    /// The structural terms dominate: blend amplitude or end slope too
    /// aggressive for this grid.
    SlopeOrBlendTooLarge,
}

/// Term-by-term account of the violating site of a failed construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightFailure {
    pub site: usize,
    pub tau: f64,
    pub in_compact_region: bool,
    pub margin: f64,
    pub laplacian_term: f64,
    pub gradient_term: f64,
    pub curvature_term: f64,
    pub diagnosis: FailureDiagnosis,
}

impl std::fmt::Display for WeightFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "margin {:.6} at site {} (tau {:.4}, {}): laplacian {:+.4}, gradient {:+.4}, curvature {:+.4}; diagnosis: {}",
            self.margin,
            self.site,
            self.tau,
            if self.in_compact_region {
                "compact region"
            } else {
                "end"
            },
            self.laplacian_term,
            self.gradient_term,
            self.curvature_term,
            match self.diagnosis {
                FailureDiagnosis::BetaTooNegative => "allowed negativity exceeded",
                FailureDiagnosis::SlopeOrBlendTooLarge => "slope or blend too large",
            }
        )
    }
}

/// Outcome of [`cylinder_weight_outcome`]: either a weight whose positivity
/// margin is certified on every interior layer, or the violating site.
#[derive(Debug, Clone)]
pub enum CylinderOutcome {
    Success {
        weight: WeightFunction,
        params: CylinderWeightParams,
    },
    Failure(WeightFailure),
}

/// Build the blended cylindrical-end weight
/// `φ = γ(1-ρ)φ̂ + ρh`, `φ̂ = -A log η`, `h = -δτ`,
/// and certify its positivity margin on the interior layers.
///
/// `λ_S ≥ α > 0` is required outside the compact region; the observed
/// negativity on the compact region defines `β`. The margin is computed
/// directly rather than assumed from the `β < γμ/(2-4/n)` sufficient
/// condition, so a `β` above the cap fails only if the margin actually
/// turns negative.
pub fn cylinder_weight_outcome(
    cyl: &CylinderGrid,
    lambda_s: &[f64],
    alpha: f64,
    n: usize,
    eps: f64,
    gamma: f64,
    delta: f64,
) -> Result<CylinderOutcome> {
    if lambda_s.len() != cyl.len() {
        return Err(Error::InvalidParameter(
            "potential length does not match cylinder".into(),
        ));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(
            "end positivity level alpha must be positive".into(),
        ));
    }
    if n < 3 {
        return Err(Error::InvalidParameter(
            "cylindrical construction needs n >= 3".into(),
        ));
    }
    if !(eps > 0.0) || !(0.0 < gamma && gamma < 1.0) || !(delta >= 0.0) {
        return Err(Error::InvalidParameter(
            "need eps > 0, gamma in (0,1), delta >= 0".into(),
        ));
    }
    let mut min_outside = f64::INFINITY;
    let mut min_inside = f64::INFINITY;
    for i in 0..cyl.len() {
        let (k, _, _) = cyl.coords(i);
        if cyl.in_compact_region(k) {
            min_inside = min_inside.min(lambda_s[i]);
        } else {
            min_outside = min_outside.min(lambda_s[i]);
        }
    }
    if min_outside < alpha - 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "curvature level {min_outside:.6} outside the compact region is below alpha = {alpha}"
        )));
    }
    let beta = (-min_inside).max(0.0);

    let (mu, eta) = dirichlet_ground_state(cyl)?;
    let ns = eta.len() / (cyl.nc * cyl.nc);
    let a_coeff = 1.0 / ((1.0 - 2.0 / n as f64) * (1.0 + 1.0 / eps));
    let beta_cap = gamma * mu / (2.0 - 4.0 / n as f64);

    let mut phi = vec![0.0; cyl.len()];
    for i in 0..cyl.len() {
        let (k, iy, ix) = cyl.coords(i);
        let tau = cyl.tau(k);
        let phi_hat = if k < ns {
            -a_coeff * eta[(k * cyl.nc + iy) * cyl.nc + ix].ln()
        } else {
            0.0
        };
        let rho = smoothstep(tau - 1.0);
        let h = -delta * tau;
        phi[i] = gamma * (1.0 - rho) * phi_hat + rho * h;
    }
    let weight = cylinder_weight_function(cyl, phi)?;

    let coeff = (1.0 - 2.0 / n as f64) * (1.0 + 1.0 / eps);
    let mut margin = f64::INFINITY;
    let mut arg = 0usize;
    for i in 0..cyl.len() {
        if let Some(lap) = weight.laplacian[i] {
            let v = lap - coeff * weight.grad_sq[i] + 2.0 * lambda_s[i];
            if v < margin {
                margin = v;
                arg = i;
            }
        }
    }
    let (k_arg, _, _) = cyl.coords(arg);
    let tau_arg = cyl.tau(k_arg);
    let in_k = cyl.in_compact_region(k_arg);

    if margin <= 0.0 {
        let lap = weight.laplacian[arg].unwrap();
        let grad_term = -coeff * weight.grad_sq[arg];
        let curv_term = 2.0 * lambda_s[arg];
        let structural = lap + grad_term;
        let diagnosis = if curv_term < 0.0 && curv_term.abs() > structural.abs() {
            FailureDiagnosis::BetaTooNegative
        } else {
            FailureDiagnosis::SlopeOrBlendTooLarge
        };
        return Ok(CylinderOutcome::Failure(WeightFailure {
            site: arg,
            tau: tau_arg,
            in_compact_region: in_k,
            margin,
            laplacian_term: lap,
            gradient_term: grad_term,
            curvature_term: curv_term,
            diagnosis,
        }));
    }

    Ok(CylinderOutcome::Success {
        weight,
        params: CylinderWeightParams {
            alpha,
            beta,
            gamma,
            delta,
            eps,
            n,
            mu,
            beta_cap,
            a_coeff,
            margin,
            argmin_tau: tau_arg,
            argmin_in_compact_region: in_k,
            eta_slab: eta,
            slab_layers: ns,
        },
    })
}

/// [`cylinder_weight_outcome`] that turns a margin failure into an error
/// carrying the violating site and term breakdown.
pub fn cylinder_weight(
    cyl: &CylinderGrid,
    lambda_s: &[f64],
    alpha: f64,
    n: usize,
    eps: f64,
    gamma: f64,
    delta: f64,
) -> Result<(WeightFunction, CylinderWeightParams)> {
    match cylinder_weight_outcome(cyl, lambda_s, alpha, n, eps, gamma, delta)? {
        CylinderOutcome::Success { weight, params } => Ok((weight, params)),
        CylinderOutcome::Failure(f) => Err(Error::Construction(f.to_string())),
    }
}

/// Weighted Sobolev norm of a section on the torus:
/// order 0 is `(Σ|s|²e^{-φ}dA)^{1/2}`; order 1 adds the squared first
/// differences (per-direction average of forward/backward, scaled by the
/// inverse conformal factor).
pub fn weighted_sobolev_norm_torus(
    geom: &TorusGeometry,
    s: &[Cx],
    weight: &WeightFunction,
    order: usize,
) -> Result<f64> {
    if s.len() != geom.len() || weight.phi.len() != geom.len() {
        return Err(Error::InvalidParameter("length mismatch".into()));
    }
    if order > 1 {
        return Err(Error::InvalidParameter(
            "only orders 0 and 1 are defined".into(),
        ));
    }
    let w = geom.area_weights();
    let (h1, h2) = (geom.h1(), geom.h2());
    let mut total = 0.0;
    for i in 0..geom.len() {
        let mut dens = s[i].norm_sqr();
        if order == 1 {
            let gx = 0.5
                * ((s[geom.xp(i)] - s[i]).norm_sqr() + (s[i] - s[geom.xm(i)]).norm_sqr())
                / (h1 * h1);
            let gy = 0.5
                * ((s[geom.yp(i)] - s[i]).norm_sqr() + (s[i] - s[geom.ym(i)]).norm_sqr())
                / (h2 * h2);
            dens += (-2.0 * geom.u[i]).exp() * (gx + gy);
        }
        total += dens * (-weight.phi[i]).exp() * w[i];
    }
    Ok(total.sqrt())
}

/// Weighted Sobolev norm of a real field on the cylinder; axial differences
/// are one-sided at the walls.
pub fn weighted_sobolev_norm_cylinder(
    cyl: &CylinderGrid,
    f: &[f64],
    weight: &WeightFunction,
    order: usize,
) -> Result<f64> {
    if f.len() != cyl.len() || weight.phi.len() != cyl.len() {
        return Err(Error::InvalidParameter("length mismatch".into()));
    }
    if order > 1 {
        return Err(Error::InvalidParameter(
            "only orders 0 and 1 are defined".into(),
        ));
    }
    let dv = cyl.cell_volume();
    let grad = if order == 1 {
        Some(cyl.grad_sq(f))
    } else {
        None
    };
    let mut total = 0.0;
    for i in 0..cyl.len() {
        let mut dens = f[i] * f[i];
        if let Some(g) = &grad {
            dens += g[i];
        }
        total += dens * (-weight.phi[i]).exp() * dv;
    }
    Ok(total.sqrt())
}
