//! Discrete model surfaces: conformally flat 2-tori and truncated 3D
//! cylinders, with metric-aware calculus (integration, gradient,
//! Laplace-Beltrami, Gaussian curvature, Gauss-Bonnet).

use crate::error::{Error, Result};
use crate::par::map_sites;

/// Flat 2-torus `[0,L1) x [0,L2)` on an `N1 x N2` grid carrying the
/// conformal metric `g = e^{2u}(dx² + dy²)`.
///
/// Site `(ix, iy)` lives at `(ix·h1, iy·h2)` and is stored at index
/// `iy·N1 + ix`; every stencil wraps periodically.
#[derive(Debug, Clone)]
pub struct TorusGeometry {
    pub l1: f64,
    pub l2: f64,
    pub n1: usize,
    pub n2: usize,
    /// Conformal factor sampled at sites.
    pub u: Vec<f64>,
    /// Cached per-site area weight `e^{2u} h1 h2`.
    area: Vec<f64>,
}

impl TorusGeometry {
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h1(&self) -> f64 {
        self.l1 / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        self.l2 / self.n2 as f64
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.n1 + ix
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.n1, i / self.n1)
    }

    /// Index of the periodic neighbor one step in `+x`.
    #[inline]
    pub fn xp(&self, i: usize) -> usize {
        let (ix, iy) = self.coords(i);
        self.idx((ix + 1) % self.n1, iy)
    }

    /// Index of the periodic neighbor one step in `-x`.
    #[inline]
    pub fn xm(&self, i: usize) -> usize {
        let (ix, iy) = self.coords(i);
        self.idx((ix + self.n1 - 1) % self.n1, iy)
    }

    /// Index of the periodic neighbor one step in `+y`.
    #[inline]
    pub fn yp(&self, i: usize) -> usize {
        let (ix, iy) = self.coords(i);
        self.idx(ix, (iy + 1) % self.n2)
    }

    /// Index of the periodic neighbor one step in `-y`.
    #[inline]
    pub fn ym(&self, i: usize) -> usize {
        let (ix, iy) = self.coords(i);
        self.idx(ix, (iy + self.n2 - 1) % self.n2)
    }

    /// Per-site area weight `e^{2u} h1 h2`.
    pub fn area_weights(&self) -> &[f64] {
        &self.area
    }

    pub fn volume(&self) -> f64 {
        self.area.iter().sum()
    }

    /// `Σ f_i · area_i`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(crate::field::sum_w(f, &self.area))
    }

    /// Flat 5-point Laplacian `Δ₀f` (no conformal factor).
    pub fn flat_laplacian(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f.len())?;
        let (h1s, h2s) = (self.h1() * self.h1(), self.h2() * self.h2());
        Ok(map_sites(self.len(), |i| {
            (f[self.xp(i)] - 2.0 * f[i] + f[self.xm(i)]) / h1s
                + (f[self.yp(i)] - 2.0 * f[i] + f[self.ym(i)]) / h2s
        }))
    }

    /// Laplace-Beltrami `Δf = e^{-2u} Δ₀ f` in the div-grad sign convention,
    /// so `-Δ` is positive semidefinite and constants are in the kernel.
    ///
    /// Self-adjointness in the area-weighted inner product is exact at
    /// assembly level: the flat stencil is symmetric and the weight
    /// `e^{2u}h1h2` cancels the `e^{-2u}` prefactor.
    pub fn laplace_beltrami(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.flat_laplacian(f)?;
        for i in 0..out.len() {
            out[i] *= (-2.0 * self.u[i]).exp();
        }
        Ok(out)
    }

    /// Squared metric gradient `|∇f|²_g = e^{-2u} |∇f|²_flat`, with the flat
    /// part evaluated per direction as the average of the squared forward
    /// differences on the two incident edges.
    pub fn grad_sq(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f.len())?;
        let (h1, h2) = (self.h1(), self.h2());
        Ok(map_sites(self.len(), |i| {
            let dxf = (f[self.xp(i)] - f[i]) / h1;
            let dxb = (f[i] - f[self.xm(i)]) / h1;
            let dyf = (f[self.yp(i)] - f[i]) / h2;
            let dyb = (f[i] - f[self.ym(i)]) / h2;
            (-2.0 * self.u[i]).exp() * (0.5 * (dxf * dxf + dxb * dxb) + 0.5 * (dyf * dyf + dyb * dyb))
        }))
    }

    /// Gaussian curvature `K = -e^{-2u} Δ₀ u`.
    pub fn gaussian_curvature(&self) -> Vec<f64> {
        let mut k = self.flat_laplacian(&self.u).expect("u length is checked at construction");
        for i in 0..k.len() {
            k[i] *= -(-2.0 * self.u[i]).exp();
        }
        k
    }

    /// `Σ K dA`; vanishes to rounding on the torus (Euler characteristic 0).
    pub fn gauss_bonnet_defect(&self) -> f64 {
        let k = self.gaussian_curvature();
        crate::field::sum_w(&k, &self.area)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::InvalidParameter(format!(
                "field length {} does not match geometry site count {}",
                len,
                self.len()
            )));
        }
        Ok(())
    }
}

/// Build a conformally flat torus. Grids below 8 sites per axis are
/// rejected: the 5-point stencil misorders the low spectrum there.
pub fn build_torus(l1: f64, l2: f64, n1: usize, n2: usize, u: Vec<f64>) -> Result<TorusGeometry> {
    if !(l1 > 0.0) || !(l2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "side lengths must be positive, got {l1} x {l2}"
        )));
    }
    if n1 < 8 || n2 < 8 {
        return Err(Error::InvalidParameter(format!(
            "grid too coarse: need at least 8 sites per axis, got {n1} x {n2}"
        )));
    }
    if u.len() != n1 * n2 {
        return Err(Error::InvalidParameter(format!(
            "conformal factor has {} samples, expected {}",
            u.len(),
            n1 * n2
        )));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "conformal factor contains non-finite samples".into(),
        ));
    }
    let h1 = l1 / n1 as f64;
    let h2 = l2 / n2 as f64;
    let area = u.iter().map(|&v| (2.0 * v).exp() * h1 * h2).collect();
    Ok(TorusGeometry {
        l1,
        l2,
        n1,
        n2,
        u,
        area,
    })
}

/// Truncated 3D cylinder `[0,T] x T²` with flat product metric.
///
/// The axial coordinate is cell-centered, `τ_k = (k + 1/2) h_t`; the
/// cross-section is a flat `nc x nc` torus of side 2π. Both axial
/// truncation faces carry homogeneous Dirichlet conditions (realized by
/// antisymmetric ghost layers), which under-approximates ground states and
/// therefore certifies positivity margins conservatively. Site `(k, iy, ix)`
/// is stored at index `(k·nc + iy)·nc + ix`.
#[derive(Debug, Clone)]
pub struct CylinderGrid {
    pub t_len: f64,
    pub nt: usize,
    pub nc: usize,
    /// Weight slope of the truncated end profile.
    pub delta: f64,
    /// Sites with `τ <= k_threshold` form the compact region K.
    pub k_threshold: f64,
}

impl CylinderGrid {
    pub fn len(&self) -> usize {
        self.nt * self.nc * self.nc
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ht(&self) -> f64 {
        self.t_len / self.nt as f64
    }

    pub fn hc(&self) -> f64 {
        std::f64::consts::TAU / self.nc as f64
    }

    pub fn tau(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.ht()
    }

    #[inline]
    pub fn idx(&self, k: usize, iy: usize, ix: usize) -> usize {
        (k * self.nc + iy) * self.nc + ix
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let ix = i % self.nc;
        let iy = (i / self.nc) % self.nc;
        let k = i / (self.nc * self.nc);
        (k, iy, ix)
    }

    /// Whether axial layer `k` belongs to the compact region K.
    pub fn in_compact_region(&self, k: usize) -> bool {
        self.tau(k) <= self.k_threshold
    }

    /// Cell volume `h_t · h_c²` (flat product metric).
    pub fn cell_volume(&self) -> f64 {
        self.ht() * self.hc() * self.hc()
    }

    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.len() {
            return Err(Error::InvalidParameter(format!(
                "field length {} does not match cylinder site count {}",
                f.len(),
                self.len()
            )));
        }
        Ok(f.iter().sum::<f64>() * self.cell_volume())
    }

    /// 7-point Laplacian (div-grad sign) at interior axial layers
    /// `1..nt-1`; entries at the first and last layer are `None` because the
    /// stencil would reach through the truncation faces, where the weight
    /// constructions are not required to certify anything.
    pub fn interior_laplacian(&self, f: &[f64]) -> Vec<Option<f64>> {
        let (nc, nt) = (self.nc, self.nt);
        let ht2 = self.ht() * self.ht();
        let hc2 = self.hc() * self.hc();
        map_sites(self.len(), |i| {
            let (k, iy, ix) = self.coords(i);
            if k == 0 || k == nt - 1 {
                return None;
            }
            let ax = (f[self.idx(k + 1, iy, ix)] - 2.0 * f[i] + f[self.idx(k - 1, iy, ix)]) / ht2;
            let cy = (f[self.idx(k, (iy + 1) % nc, ix)] - 2.0 * f[i]
                + f[self.idx(k, (iy + nc - 1) % nc, ix)])
                / hc2;
            let cx = (f[self.idx(k, iy, (ix + 1) % nc)] - 2.0 * f[i]
                + f[self.idx(k, iy, (ix + nc - 1) % nc)])
                / hc2;
            Some(ax + cy + cx)
        })
    }

    /// Squared gradient, per direction the average of squared forward
    /// differences on incident edges; one-sided at the axial walls.
    pub fn grad_sq(&self, f: &[f64]) -> Vec<f64> {
        let (nc, nt) = (self.nc, self.nt);
        let ht = self.ht();
        let hc = self.hc();
        map_sites(self.len(), |i| {
            let (k, iy, ix) = self.coords(i);
            let mut g = 0.0;
            let df = if k + 1 < nt {
                Some((f[self.idx(k + 1, iy, ix)] - f[i]) / ht)
            } else {
                None
            };
            let db = if k > 0 {
                Some((f[i] - f[self.idx(k - 1, iy, ix)]) / ht)
            } else {
                None
            };
            g += match (df, db) {
                (Some(a), Some(b)) => 0.5 * (a * a + b * b),
                (Some(a), None) => a * a,
                (None, Some(b)) => b * b,
                (None, None) => 0.0,
            };
            let a = (f[self.idx(k, (iy + 1) % nc, ix)] - f[i]) / hc;
            let b = (f[i] - f[self.idx(k, (iy + nc - 1) % nc, ix)]) / hc;
            g += 0.5 * (a * a + b * b);
            let a = (f[self.idx(k, iy, (ix + 1) % nc)] - f[i]) / hc;
            let b = (f[i] - f[self.idx(k, iy, (ix + nc - 1) % nc)]) / hc;
            g += 0.5 * (a * a + b * b);
            g
        })
    }
}

/// Build a truncated cylinder. `T < 4` is rejected: the weight construction
/// needs the regions `[0,1]`, `[1,2]`, `[2,3]` and a nonempty far zone.
pub fn build_cylinder(t_len: f64, nt: usize, nc: usize, delta: f64) -> Result<CylinderGrid> {
    if !(t_len >= 4.0) {
        return Err(Error::InvalidParameter(format!(
            "cylinder length must be at least 4 (cutoff layout), got {t_len}"
        )));
    }
    if nt < 8 || nc < 8 {
        return Err(Error::InvalidParameter(format!(
            "grid too coarse: need at least 8 sites per axis, got {nt} axial x {nc} cross"
        )));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "end slope must be nonnegative, got {delta}"
        )));
    }
    let grid = CylinderGrid {
        t_len,
        nt,
        nc,
        delta,
        k_threshold: 1.0,
    };
    if !(0..nt).any(|k| grid.in_compact_region(k)) {
        return Err(Error::InvalidParameter(
            "compact-region marker selects no sites".into(),
        ));
    }
    Ok(grid)
}
