//! Integral identities, eigenvalue and area inequalities, and the mesh scan
//! for local maxima of `psi0`.

use std::f64::consts::PI;

use serde::Serialize;

use super::{integrate, pairwise_sum, EmbeddedMesh, SpectrumResult};
use crate::error::Result;
use crate::minkowski::Vec4;

/// Relative tolerance of the integral checks against `4 pi`.
pub const INTEGRAL_TOL: f64 = 5e-3;
/// Relative slack below which an inequality counts as an equality, and above
/// `-SLACK_TOL` as holding.
pub const SLACK_TOL: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralCheck {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub rel_dev: f64,
    pub tol: f64,
    /// `None` when the check does not apply to the surface.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralSuite {
    pub level: u32,
    pub u: Vec4,
    pub area: f64,
    pub euler_characteristic: i64,
    pub checks: Vec<IntegralCheck>,
}

fn check(name: &str, value: f64, target: f64, applies: bool) -> IntegralCheck {
    let rel_dev = (value - target).abs() / target.abs();
    IntegralCheck {
        name: name.to_string(),
        value,
        target,
        rel_dev,
        tol: INTEGRAL_TOL,
        pass: applies.then_some(rel_dev <= INTEGRAL_TOL),
    }
}

/// `int K dA`, `int <H,H> dA` and `int <psi,u>^-2 dA` against `4 pi`. Only
/// Gauss-Bonnet applies off the lightcone; the others are then reported
/// without a verdict.
pub fn integral_identity_suite(em: &EmbeddedMesh) -> Result<IntegralSuite> {
    let four_pi = 4.0 * PI;
    let lc = em.lightcone;
    Ok(IntegralSuite {
        level: em.base.level,
        u: em.u,
        area: em.area(),
        euler_characteristic: em.base.euler_characteristic(),
        checks: vec![
            check("gauss_bonnet", integrate(em, "K")?, 2.0 * PI * em.base.euler_characteristic() as f64, true),
            check("willmore_h_sq", integrate(em, "H_sq")?, four_pi, lc),
            check("inverse_psi_u_sq", integrate(em, "inv_psi_u_sq")?, four_pi, lc),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    /// Statement in the form `lhs <= rhs`.
    pub statement: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `(rhs - lhs) / rhs`
    pub slack_rel: f64,
    pub holds: bool,
    pub equality: bool,
    /// `None` when the inequality is not claimed for the surface.
    pub applies: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalitySuite {
    pub level: u32,
    pub lambda1: f64,
    pub area: f64,
    pub checks: Vec<InequalityCheck>,
}

impl InequalitySuite {
    pub fn get(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn inequality(name: &str, statement: &str, lhs: f64, rhs: f64, applies: bool) -> InequalityCheck {
    let slack_rel = (rhs - lhs) / rhs;
    InequalityCheck {
        name: name.to_string(),
        statement: statement.to_string(),
        lhs,
        rhs,
        slack_rel,
        holds: slack_rel >= -SLACK_TOL,
        equality: slack_rel.abs() <= SLACK_TOL,
        applies,
    }
}

/// Hersch, the `<psi,u>` eigenvalue and area bounds, and the Reilly-form bound.
pub fn inequality_suite(em: &EmbeddedMesh, spec: &SpectrumResult) -> Result<InequalitySuite> {
    let area = em.area();
    let l1 = spec.lambda1;
    let psi_u = em.field("psi_u")?;
    let min_sq = psi_u.iter().map(|f| f * f).fold(f64::INFINITY, f64::min);
    let terms: Vec<f64> = em.vertex_mass.iter().zip(psi_u).map(|(m, f)| m * f * f).collect();
    let l2 = pairwise_sum(&terms).sqrt();
    let h_sq = integrate(em, "H_sq")?;
    let lc = em.lightcone;
    Ok(InequalitySuite {
        level: em.base.level,
        lambda1: l1,
        area,
        checks: vec![
            inequality("hersch", "lambda1 <= 8 pi / area", l1, 8.0 * PI / area, true),
            inequality("lambda1_psi_u", "lambda1 <= 2 / min <psi,u>^2", l1, 2.0 / min_sq, lc),
            inequality("area_psi_u", "area <= 2 sqrt(pi) |<psi,u>|_L2", area, 2.0 * PI.sqrt() * l2, lc),
            inequality("reilly", "lambda1 <= 2 int <H,H> / area", l1, 2.0 * h_sq / area, lc),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremumRecord {
    pub vertex: usize,
    pub psi0: f64,
    pub min_k_one_ring: f64,
    pub max_k_one_ring: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalExtremaReport {
    /// `psi0` is constant up to rounding; no maxima are reported.
    pub degenerate: bool,
    pub maxima: Vec<ExtremumRecord>,
    pub flags: usize,
}

/// Vertices where `psi0` exceeds all neighbours, flagged when `K <= 0` on the
/// whole one-ring.
pub fn local_extrema_scan(em: &EmbeddedMesh) -> Result<LocalExtremaReport> {
    local_extrema_scan_with(em, em.field("psi0")?, em.field("K")?)
}

/// [`local_extrema_scan`] with explicit fields.
pub fn local_extrema_scan_with(em: &EmbeddedMesh, psi0: &[f64], k: &[f64]) -> Result<LocalExtremaReport> {
    let (lo, hi) = psi0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return Ok(LocalExtremaReport { degenerate: true, maxima: Vec::new(), flags: 0 });
    }
    let adj = em.base.adjacency();
    let mut maxima = Vec::new();
    for (v, nbrs) in adj.iter().enumerate() {
        if nbrs.iter().all(|&w| psi0[v] > psi0[w]) {
            let ring = nbrs.iter().map(|&w| k[w]).chain([k[v]]);
            let (min_k, max_k) = ring.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            maxima.push(ExtremumRecord {
                vertex: v,
                psi0: psi0[v],
                min_k_one_ring: min_k,
                max_k_one_ring: max_k,
                flagged: max_k <= 0.0,
            });
        }
    }
    let flags = maxima.iter().filter(|m| m.flagged).count();
    Ok(LocalExtremaReport { degenerate: false, maxima, flags })
}
