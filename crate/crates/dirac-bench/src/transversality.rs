//! Automatic-transversality audit: compare the integrated smallest
//! curvature eigenvalue against minus the integrated Gaussian curvature.
//! The criterion is sufficient only, so the two possible verdicts are
//! "transversal" and "inconclusive", never a negative claim.

use dirac_core::error::Result;
use dirac_core::gauge::{curvature_data, HermitianBundle};
use dirac_core::geometry::TorusGeometry;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Transversal,
    Inconclusive,
}

/// Outcome of the audit. `margin = integral_theta + euler_term`; the
/// verdict is transversal exactly when the margin is strictly positive.
/// For a rank > 1 summary the curvature integral is undetermined, so the
/// numeric fields stay empty and the reason says why.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransversalityVerdict {
    pub integral_theta: Option<f64>,
    pub euler_term: f64,
    pub margin: Option<f64>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Summary-form audit from integer data alone: for a line bundle the
/// curvature integral is `2πc₁` and the Euler term `2πχ = 2π(2 - 2g)`,
/// so the comparison is exact integer arithmetic scaled by `2π`.
pub fn summary_verdict(c1: i64, rank: usize, genus: i64) -> TransversalityVerdict {
    let chi = 2 - 2 * genus;
    if rank > 1 {
        return TransversalityVerdict {
            integral_theta: None,
            euler_term: TAU * chi as f64,
            margin: None,
            verdict: Verdict::Inconclusive,
            reason: Some("θ_E not determined by c₁ for rank > 1".into()),
        };
    }
    let units = c1 + chi;
    TransversalityVerdict {
        integral_theta: Some(TAU * c1 as f64),
        euler_term: TAU * chi as f64,
        margin: Some(TAU * units as f64),
        verdict: if units > 0 {
            Verdict::Transversal
        } else {
            Verdict::Inconclusive
        },
        reason: if units > 0 {
            None
        } else {
            Some("margin not positive; the criterion is sufficient only".into())
        },
    }
}

/// Sampled-form audit: quadrature of the pointwise smallest curvature
/// eigenvalue over the discretized surface, plus the Gauss-Bonnet integral
/// of the base metric (which vanishes on tori up to roundoff).
pub fn sampled_verdict(
    geom: &TorusGeometry,
    bundle: &HermitianBundle,
) -> Result<TransversalityVerdict> {
    let curv = curvature_data(geom, bundle)?;
    let integral_theta = geom.integrate(&curv.theta)?;
    let euler_term = geom.integrate(&geom.gaussian_curvature())?;
    let margin = integral_theta + euler_term;
    // quadrature roundoff must not promote a boundary case to transversal
    let floor = 1e-9 * integral_theta.abs().max(euler_term.abs()).max(1.0);
    let positive = margin > floor;
    Ok(TransversalityVerdict {
        integral_theta: Some(integral_theta),
        euler_term,
        margin: Some(margin),
        verdict: if positive {
            Verdict::Transversal
        } else {
            Verdict::Inconclusive
        },
        reason: if positive {
            None
        } else {
            Some("margin not positive; the criterion is sufficient only".into())
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dirac_core::field::bandlimited_real;
    use dirac_core::gauge::{constant_curvature_bundle, random_line_bundle};
    use dirac_core::geometry::build_torus;

    #[test]
    fn summary_form_exact_table() {
        // classical genus-0 case: c1 = 1 gives margin 2π + 4π
        let v = summary_verdict(1, 1, 0);
        assert_eq!(v.verdict, Verdict::Transversal);
        assert!((v.margin.unwrap() - 3.0 * TAU).abs() < 1e-15);
        // boundary c1 = -χ is inconclusive at every genus, never negative
        for genus in 0..4 {
            let chi = 2 - 2 * genus;
            let v = summary_verdict(-chi, 1, genus);
            assert_eq!(v.verdict, Verdict::Inconclusive);
            assert_eq!(v.margin, Some(0.0));
            let v = summary_verdict(-chi - 3, 1, genus);
            assert_eq!(v.verdict, Verdict::Inconclusive);
            let v = summary_verdict(-chi + 1, 1, genus);
            assert_eq!(v.verdict, Verdict::Transversal);
            assert!((v.margin.unwrap() - TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_two_summary_is_inconclusive_with_reason() {
        let v = summary_verdict(3, 2, 1);
        assert_eq!(v.verdict, Verdict::Inconclusive);
        assert!(v.integral_theta.is_none());
        assert!(v.margin.is_none());
        assert!(v.reason.unwrap().contains("rank > 1"));
    }

    #[test]
    fn sampled_margin_matches_flux_quadrature() {
        let n = 24;
        let g = build_torus(
            std::f64::consts::TAU,
            std::f64::consts::TAU,
            n,
            n,
            bandlimited_real(n, n, 2, 0.2, 4),
        )
        .unwrap();
        for c1 in [-2i64, 0, 2, 3] {
            let b = constant_curvature_bundle(&g, c1).unwrap();
            let v = sampled_verdict(&g, &b).unwrap();
            let expect = TAU * c1 as f64;
            assert!(
                (v.margin.unwrap() - expect).abs() < 1e-10,
                "c1 {c1}: margin {} vs {expect}",
                v.margin.unwrap()
            );
            assert_eq!(
                v.verdict,
                if c1 > 0 {
                    Verdict::Transversal
                } else {
                    Verdict::Inconclusive
                }
            );
        }
        // roughness moves θ pointwise but not its integral
        let b = random_line_bundle(&g, 1, 0.4, 9).unwrap();
        let v = sampled_verdict(&g, &b).unwrap();
        assert!((v.margin.unwrap() - TAU).abs() < 1e-9);
    }
}
