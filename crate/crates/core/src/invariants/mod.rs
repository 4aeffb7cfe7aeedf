//! Pointwise geometry of a spacelike surface: induced metric, Christoffel
//! symbols, the lightlike normal frame `(xi, eta)`, shape operators, the mean
//! curvature vector and Gauss curvature by independent routes.

pub mod checks;
pub mod closed;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::ImmersionJet;
use crate::minkowski::{inner, on_future_lightcone, Vec4, DEFAULT_LIGHTCONE_TOL, E0};
use crate::surfaces::{ChartPoint, Surface};

pub use checks::{
    grid_extrema_diagnostic, identity_residuals, lightcone_certificate, normal_parallel_residual,
    ExtremaDiagnostic, IdentityResiduals, LightconeCertificate, NormalField, CERTIFICATE_TOL,
};
pub use closed::{conformal_curvature, example1_closed_forms, example2_closed_form, Example1ClosedForms, Extension};

/// Step of the finite-difference routes (five-point central stencil).
pub const FD_STEP: f64 = 1e-4;
/// Umbilicity deficits at or below this count as umbilical.
pub const UMBILICAL_TOL: f64 = 1e-6;

pub type Mat2 = [[f64; 2]; 2];

pub(crate) fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

pub(crate) fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub(crate) fn trace(a: &Mat2) -> f64 {
    a[0][0] + a[1][1]
}

/// Frobenius norm of `a - s I`.
pub(crate) fn dev_from_scalar(a: &Mat2, s: f64) -> f64 {
    ((a[0][0] - s).powi(2) + a[0][1].powi(2) + a[1][0].powi(2) + (a[1][1] - s).powi(2)).sqrt()
}

/// Five-point central derivative along chart direction `dir`:
/// `(f(-2h) - 8 f(-h) + 8 f(h) - f(2h)) / 12h`.
pub(crate) fn central_derivative<const M: usize>(
    p: &ChartPoint,
    dir: usize,
    h: f64,
    f: impl Fn(&ChartPoint) -> Result<[f64; M]>,
) -> Result<[f64; M]> {
    let at = |k: f64| {
        let q = if dir == 0 { p.with_params(p.s + k * h, p.t) } else { p.with_params(p.s, p.t + k * h) };
        f(&q)
    };
    let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
    Ok(std::array::from_fn(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h)))
}

/// Induced metric and its Levi-Civita connection in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricFrame {
    pub g: Mat2,
    pub ginv: Mat2,
    pub detg: f64,
    /// `christoffel[k][i][j] = Gamma^k_ij`
    pub christoffel: [[[f64; 2]; 2]; 2],
}

impl MetricFrame {
    /// `ginv * m`: raises the first index of a bilinear form.
    pub fn raise(&self, m: &Mat2) -> Mat2 {
        mat_mul(&self.ginv, m)
    }

    /// Norm of an endomorphism in a `g`-orthonormal frame, `sqrt(tr(E E*))`
    /// with `E* = ginv E^T g`.
    pub fn endo_norm(&self, e: &Mat2) -> f64 {
        let adj = mat_mul(&self.ginv, &mat_mul(&transpose(e), &self.g));
        trace(&mat_mul(e, &adj)).max(0.0).sqrt()
    }
}

pub fn metric_frame(jet: &ImmersionJet) -> Result<MetricFrame> {
    let d = [jet.d(0), jet.d(1)];
    let g: Mat2 = std::array::from_fn(|i| std::array::from_fn(|j| inner(&d[i], &d[j])));
    let detg = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if !(detg > 0.0 && g[0][0] > 0.0) {
        return Err(Error::NotSpacelike { detg });
    }
    let ginv = [[g[1][1] / detg, -g[0][1] / detg], [-g[1][0] / detg, g[0][0] / detg]];
    // dg[k][i][j] = d_k g_ij from the product rule on jet columns
    let dg: [Mat2; 2] = std::array::from_fn(|k| {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| inner(&jet.dd(i, k), &d[j]) + inner(&d[i], &jet.dd(j, k)))
        })
    });
    let first = |i: usize, j: usize, l: usize| 0.5 * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
    let christoffel = std::array::from_fn(|k| {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..2).map(|l| ginv[k][l] * first(i, j, l)).sum())
        })
    });
    Ok(MetricFrame { g, ginv, detg, christoffel })
}

/// Normal parts `II_ij = psi_ij - Gamma^k_ij psi_k` of the second derivatives.
pub fn second_fundamental_form(jet: &ImmersionJet, mf: &MetricFrame) -> [[Vec4; 2]; 2] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            jet.dd(i, j) - mf.christoffel[0][i][j] * jet.d(0) - mf.christoffel[1][i][j] * jet.d(1)
        })
    })
}

/// `H = 1/2 g^ij II_ij`, valid for any spacelike surface.
pub fn mean_curvature_vector(ii: &[[Vec4; 2]; 2], mf: &MetricFrame) -> Vec4 {
    let mut h = Vec4::ZERO;
    for i in 0..2 {
        for j in 0..2 {
            h = h + (0.5 * mf.ginv[i][j]) * ii[i][j];
        }
    }
    h
}

/// Gauss equation in flat `L^4`: `K = (<II_11, II_22> - <II_12, II_12>) / det g`.
pub fn gauss_equation_k(ii: &[[Vec4; 2]; 2], mf: &MetricFrame) -> f64 {
    (inner(&ii[0][0], &ii[1][1]) - inner(&ii[0][1], &ii[0][1])) / mf.detg
}

/// Squared length `g^ia g^jb <II_ij, II_ab>` by direct summation.
pub fn ii_sq_direct(ii: &[[Vec4; 2]; 2], mf: &MetricFrame) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    s += mf.ginv[i][a] * mf.ginv[j][b] * inner(&ii[i][j], &ii[a][b]);
                }
            }
        }
    }
    s
}

/// The lightlike normal frame of a surface in the future lightcone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalFrame {
    pub xi: Vec4,
    #[serde(rename = "T")]
    pub t: Vec4,
    pub eta: Vec4,
    pub psi0: f64,
    pub grad_psi0: [f64; 2],
    pub grad_psi0_normsq: f64,
    pub lap_psi0: f64,
    /// Intrinsic Hessian of `psi0` as an endomorphism.
    pub hess_psi0: Mat2,
}

pub fn normal_frame(jet: &ImmersionJet, mf: &MetricFrame, tol: f64) -> Result<NormalFrame> {
    let xi = jet.position();
    let psi0 = xi[0];
    if !on_future_lightcone(&xi, tol) {
        return Err(Error::NotOnLightcone { inner: xi.norm_sq(), psi0 });
    }
    let c0 = &jet.coords[0];
    let dpsi0 = c0.grad;
    let grad: [f64; 2] = std::array::from_fn(|i| mf.ginv[i][0] * dpsi0[0] + mf.ginv[i][1] * dpsi0[1]);
    let normsq = dpsi0[0] * grad[0] + dpsi0[1] * grad[1];
    let t = E0 + grad[0] * jet.d(0) + grad[1] * jet.d(1);
    let eta = ((1.0 + normsq) / (2.0 * psi0 * psi0)) * xi - (1.0 / psi0) * t;
    let lower: Mat2 = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            c0.hess[i][j] - mf.christoffel[0][i][j] * dpsi0[0] - mf.christoffel[1][i][j] * dpsi0[1]
        })
    });
    let hess_psi0 = mf.raise(&lower);
    Ok(NormalFrame {
        xi,
        t,
        eta,
        psi0,
        grad_psi0: grad,
        grad_psi0_normsq: normsq,
        lap_psi0: trace(&hess_psi0),
        hess_psi0,
    })
}

/// Routes to the Gauss curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KMethod {
    /// `(1 + |grad psi0|^2)/psi0^2 - lap psi0 / psi0`
    Extrinsic,
    /// `<H, H>`
    Mean,
    /// `-tr A_eta` with `A_eta` read off the second derivatives
    Trace,
    /// `-lap log psi0 + 1/psi0^2`, Laplacian by finite differences
    Log,
    /// `-lap log <psi,u> + 1/<psi,u>^2` for the probe `u`
    LogU,
    /// Curvature tensor from finite-differenced Christoffel symbols
    Brioschi,
    /// Gauss equation from the second fundamental form
    Gauss,
}

impl KMethod {
    pub const ALL: [KMethod; 7] = [
        KMethod::Extrinsic,
        KMethod::Mean,
        KMethod::Trace,
        KMethod::Log,
        KMethod::LogU,
        KMethod::Brioschi,
        KMethod::Gauss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KMethod::Extrinsic => "extrinsic",
            KMethod::Mean => "mean",
            KMethod::Trace => "trace",
            KMethod::Log => "log",
            KMethod::LogU => "log_u",
            KMethod::Brioschi => "brioschi",
            KMethod::Gauss => "gauss",
        }
    }

    /// Whether the route is exact up to rounding (no finite differences).
    pub fn is_jet_exact(self) -> bool {
        !matches!(self, KMethod::Log | KMethod::LogU | KMethod::Brioschi)
    }
}

impl fmt::Display for KMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape operators and curvature of a lightcone surface at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeData {
    pub a_xi: Mat2,
    /// `A_eta = -(1 + |grad psi0|^2)/(2 psi0^2) I + Hess psi0 / psi0`
    pub a_eta: Mat2,
    /// `A_eta` read off `ginv <psi_ij, eta>`.
    pub a_eta_direct: Mat2,
    /// Lower-index form `II_eta = -g A_eta`.
    pub ii_eta: Mat2,
    pub hess_psi0: Mat2,
    #[serde(rename = "H")]
    pub h: Vec4,
    pub h_sq: f64,
    pub k_by: BTreeMap<KMethod, f64>,
    pub umbilicity_deficit: f64,
    /// Norm of the traceless part of `A_H`.
    pub pseudo_umbilicity_deficit: f64,
    /// `<II, II> = 4 <H,H> - 2K`
    pub ii_sq: f64,
    pub ii_sq_direct: f64,
}

pub fn shape_data(jet: &ImmersionJet, mf: &MetricFrame, nf: &NormalFrame) -> ShapeData {
    let lower = |v: &Vec4| -> Mat2 {
        std::array::from_fn(|i| std::array::from_fn(|j| inner(&jet.dd(i, j), v)))
    };
    let a_xi = mf.raise(&lower(&nf.xi));
    let a_eta_direct = mf.raise(&lower(&nf.eta));
    let psi0 = nf.psi0;
    let c = (1.0 + nf.grad_psi0_normsq) / (2.0 * psi0 * psi0);
    let a_eta: Mat2 = std::array::from_fn(|i| {
        std::array::from_fn(|j| nf.hess_psi0[i][j] / psi0 - if i == j { c } else { 0.0 })
    });
    let ga = mat_mul(&mf.g, &a_eta);
    let ii_eta: Mat2 = std::array::from_fn(|i| std::array::from_fn(|j| -ga[i][j]));

    let h = (nf.lap_psi0 / (2.0 * psi0) - 2.0 * c) * nf.xi + (1.0 / psi0) * nf.t;
    let h_sq = h.norm_sq();
    let k_ext = 2.0 * c - nf.lap_psi0 / psi0;
    let k_by = BTreeMap::from([
        (KMethod::Extrinsic, k_ext),
        (KMethod::Mean, h_sq),
        (KMethod::Trace, -trace(&a_eta_direct)),
    ]);

    let half_lap = 0.5 * nf.lap_psi0;
    let traceless: Mat2 = std::array::from_fn(|i| {
        std::array::from_fn(|j| nf.hess_psi0[i][j] - if i == j { half_lap } else { 0.0 })
    });
    let a_h = mf.raise(&lower(&h));
    let half_tr = 0.5 * trace(&a_h);
    let a_h_traceless: Mat2 =
        std::array::from_fn(|i| std::array::from_fn(|j| a_h[i][j] - if i == j { half_tr } else { 0.0 }));

    let ii = second_fundamental_form(jet, mf);
    ShapeData {
        a_xi,
        a_eta,
        a_eta_direct,
        ii_eta,
        hess_psi0: nf.hess_psi0,
        h,
        h_sq,
        k_by,
        umbilicity_deficit: mf.endo_norm(&traceless),
        pseudo_umbilicity_deficit: mf.endo_norm(&a_h_traceless),
        ii_sq: 4.0 * h_sq - 2.0 * k_ext,
        ii_sq_direct: ii_sq_direct(&ii, mf),
    }
}

/// Options of [`geometry_frame`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameOptions {
    pub fd_step: f64,
    /// Unit past timelike probe of the `log_u` route.
    pub probe_u: Vec4,
    pub lightcone_tol: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions {
            fd_step: FD_STEP,
            probe_u: default_probe_u(),
            lightcone_tol: DEFAULT_LIGHTCONE_TOL,
        }
    }
}

/// `u = (-cosh 1/2, sinh 1/2, 0, 0)`, a boosted observer.
pub fn default_probe_u() -> Vec4 {
    Vec4::new(-(0.5f64).cosh(), (0.5f64).sinh(), 0.0, 0.0)
}

/// Every pointwise invariant at one chart point.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryFrame {
    pub point: ChartPoint,
    pub psi: Vec4,
    pub metric: MetricFrame,
    /// `None` off the lightcone.
    pub normal: Option<NormalFrame>,
    pub shape: Option<ShapeData>,
    /// Mean curvature vector from the second fundamental form.
    pub h_general: Vec4,
    pub h_sq_general: f64,
    pub k_by: BTreeMap<KMethod, f64>,
}

impl GeometryFrame {
    pub fn k(&self) -> f64 {
        self.k_by.get(&KMethod::Extrinsic).copied().unwrap_or(self.k_by[&KMethod::Gauss])
    }

    pub fn h_sq(&self) -> f64 {
        self.shape.as_ref().map_or(self.h_sq_general, |s| s.h_sq)
    }

    pub fn umbilicity_deficit(&self) -> Option<f64> {
        self.shape.as_ref().map(|s| s.umbilicity_deficit)
    }
}

/// Gauss curvature from the curvature tensor, with `d Gamma` by central
/// differences: `K = <R(d1,d2)d2, d1> / det g`.
pub fn brioschi_k(surface: &Surface, p: &ChartPoint, h: f64) -> Result<f64> {
    let gamma_at = |q: &ChartPoint| -> Result<[f64; 8]> {
        let mf = metric_frame(&surface.evaluate(q)?)?;
        let c = mf.christoffel;
        Ok(std::array::from_fn(|n| c[n / 4][(n / 2) % 2][n % 2]))
    };
    let mf = metric_frame(&surface.evaluate(p)?)?;
    let d = [central_derivative(p, 0, h, gamma_at)?, central_derivative(p, 1, h, gamma_at)?];
    // dgamma(m, l, j, k) = d_m Gamma^l_jk
    let dgamma = |m: usize, l: usize, j: usize, k: usize| d[m][l * 4 + j * 2 + k];
    let c = mf.christoffel;
    // R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik, with (i,j,k) = (1,2,2)
    let (i, j, k) = (0, 1, 1);
    let r: [f64; 2] = std::array::from_fn(|l| {
        dgamma(i, l, j, k) - dgamma(j, l, i, k)
            + (0..2).map(|m| c[l][i][m] * c[m][j][k] - c[l][j][m] * c[m][i][k]).sum::<f64>()
    });
    Ok((mf.g[0][0] * r[0] + mf.g[0][1] * r[1]) / mf.detg)
}

/// `-lap log <psi,u> + 1/<psi,u>^2` with the Laplacian in divergence form,
/// `lap f = (1/sqrt g) d_i (sqrt g g^ij d_j f)`, the outer derivative by
/// central differences of the flux.
pub fn log_laplacian_k(surface: &Surface, p: &ChartPoint, u: &Vec4, h: f64) -> Result<f64> {
    let height = |jet: &ImmersionJet| -> Result<f64> {
        let f = inner(&jet.position(), u);
        if f > 0.0 {
            Ok(f)
        } else {
            Err(Error::Domain { func: "log", arg: f })
        }
    };
    let flux = |q: &ChartPoint| -> Result<[f64; 2]> {
        let jet = surface.evaluate(q)?;
        let mf = metric_frame(&jet)?;
        let f = height(&jet)?;
        let dphi = [inner(&jet.d(0), u) / f, inner(&jet.d(1), u) / f];
        let sg = mf.detg.sqrt();
        Ok(std::array::from_fn(|i| sg * (mf.ginv[i][0] * dphi[0] + mf.ginv[i][1] * dphi[1])))
    };
    let jet = surface.evaluate(p)?;
    let mf = metric_frame(&jet)?;
    let f = height(&jet)?;
    let div = central_derivative(p, 0, h, flux)?[0] + central_derivative(p, 1, h, flux)?[1];
    Ok(-div / mf.detg.sqrt() + 1.0 / (f * f))
}

/// All invariants at `p`. Surfaces that claim to lie in the lightcone must
/// do so at `p`; others get the general routes only, even at points that
/// happen to be lightlike.
pub fn geometry_frame(surface: &Surface, p: &ChartPoint, opts: &FrameOptions) -> Result<GeometryFrame> {
    let jet = surface.evaluate(p)?;
    let mf = metric_frame(&jet)?;
    let ii = second_fundamental_form(&jet, &mf);
    let h_general = mean_curvature_vector(&ii, &mf);
    let mut k_by = BTreeMap::from([
        (KMethod::Gauss, gauss_equation_k(&ii, &mf)),
        (KMethod::Brioschi, brioschi_k(surface, p, opts.fd_step)?),
    ]);
    if !surface.flags.claims_lightcone {
        return Ok(GeometryFrame {
            point: *p,
            psi: jet.position(),
            metric: mf,
            normal: None,
            shape: None,
            h_general,
            h_sq_general: h_general.norm_sq(),
            k_by,
        });
    }
    let nf = normal_frame(&jet, &mf, opts.lightcone_tol)?;
    let sd = shape_data(&jet, &mf, &nf);
    k_by.extend(sd.k_by.iter().map(|(k, v)| (*k, *v)));
    k_by.insert(KMethod::Log, log_laplacian_k(surface, p, &-E0, opts.fd_step)?);
    k_by.insert(KMethod::LogU, log_laplacian_k(surface, p, &opts.probe_u, opts.fd_step)?);
    let (normal, shape) = (Some(nf), Some(sd));
    Ok(GeometryFrame {
        point: *p,
        psi: jet.position(),
        metric: mf,
        normal,
        shape,
        h_general,
        h_sq_general: h_general.norm_sq(),
        k_by,
    })
}

/// Order-preserving parallel map; the output does not depend on scheduling.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

/// [`geometry_frame`] over many points in parallel.
pub fn geometry_frames(
    surface: &Surface,
    points: &[ChartPoint],
    opts: &FrameOptions,
) -> Vec<Result<GeometryFrame>> {
    par_map(points, |p| geometry_frame(surface, p, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{instantiate, parse_sigma, round_sphere, Chart};
    use std::collections::BTreeMap;

    fn surf(name: &str, sigma: Option<&str>) -> Surface {
        let s = sigma.map(|s| parse_sigma(s).unwrap());
        instantiate(name, &BTreeMap::new(), s.as_ref()).unwrap()
    }

    fn frame(s: &Surface, p: &ChartPoint) -> GeometryFrame {
        geometry_frame(s, p, &FrameOptions::default()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn example1_base_metric_is_flat() {
        let s = surf("example1_base", None);
        for p in s.random_points(30, 1) {
            let mf = metric_frame(&s.evaluate(&p).unwrap()).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!(close(mf.g[i][j], (i == j) as u8 as f64, 1e-12));
                    for k in 0..2 {
                        assert!(mf.christoffel[k][i][j].abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn round_metric_in_stereographic_chart() {
        let s = surf("example2_sigma", Some("0"));
        for (chart, u, v) in [(Chart::Upper, 0.0, 0.0), (Chart::Upper, 0.3, -0.4), (Chart::Lower, 1.2, 0.5)] {
            let p = ChartPoint { chart, s: u, t: v };
            let mf = metric_frame(&s.evaluate(&p).unwrap()).unwrap();
            let conf = 4.0 / (1.0 + u * u + v * v).powi(2);
            assert!(close(mf.g[0][0], conf, 1e-13) && close(mf.g[1][1], conf, 1e-13));
            assert!(mf.g[0][1].abs() < 1e-13);
            // g ginv = I
            let id = mat_mul(&mf.g, &mf.ginv);
            assert!(dev_from_scalar(&id, 1.0) < 1e-12);
        }
        let r3 = round_sphere(Vec4::new(-1.0, 0.0, 0.0, 0.0), 3.0).unwrap();
        for p in s.random_points(20, 4) {
            let a = metric_frame(&s.evaluate(&p).unwrap()).unwrap();
            let b = metric_frame(&r3.evaluate(&p).unwrap()).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!(close(b.g[i][j], 9.0 * a.g[i][j], 1e-12 * b.g[i][i].abs()));
                }
            }
        }
    }

    #[test]
    fn christoffel_first_kind_matches_second_derivatives() {
        // Gamma_{ij,l} = <psi_ij, psi_l>, independent of the metric-derivative route
        let s = surf("example2_sigma", Some("0.3 * x * y + 0.2 * z^2 - 0.1 * x"));
        for p in s.random_points(40, 7) {
            let jet = s.evaluate(&p).unwrap();
            let mf = metric_frame(&jet).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!(close(mf.christoffel[0][i][j], mf.christoffel[0][j][i], 0.0));
                    for l in 0..2 {
                        let lowered: f64 = (0..2).map(|k| mf.g[l][k] * mf.christoffel[k][i][j]).sum();
                        let direct = inner(&jet.dd(i, j), &jet.d(l));
                        assert!(close(lowered, direct, 1e-11 * (1.0 + direct.abs())));
                    }
                }
            }
        }
    }

    #[test]
    fn normal_frame_invariants() {
        let cases = [
            surf("example1_base", None),
            surf("example1_sigma", Some("0.4 * sin(x) * y - 0.1 * y^2")),
            surf("example2_sigma", Some("x * y - 0.5 * z")),
            round_sphere(default_probe_u(), 2.5).unwrap(),
        ];
        for s in &cases {
            for p in s.random_points(50, 11) {
                let jet = s.evaluate(&p).unwrap();
                let mf = metric_frame(&jet).unwrap();
                let nf = normal_frame(&jet, &mf, 1e-9).unwrap();
                let scale = nf.xi.euclid_norm_sq().max(1.0);
                assert!(nf.xi.norm_sq().abs() <= 1e-9 * scale);
                assert!(nf.eta.norm_sq().abs() <= 1e-9 * (1.0 + nf.eta.euclid_norm_sq()));
                assert!(close(inner(&nf.xi, &nf.eta), 1.0, 1e-9));
                for i in 0..2 {
                    let di = jet.d(i);
                    assert!(inner(&nf.xi, &di).abs() <= 1e-9 * scale);
                    assert!(inner(&nf.eta, &di).abs() <= 1e-9 * (1.0 + di.euclid_norm()));
                }
            }
        }
    }

    #[test]
    fn example1_gradient_of_psi0() {
        let s = surf("example1_base", None);
        for p in s.random_points(20, 2) {
            let f = frame(&s, &p);
            let nf = f.normal.unwrap();
            assert!(close(nf.grad_psi0_normsq, p.s.sinh().powi(2), 1e-12 * p.s.cosh().powi(2)));
        }
    }

    #[test]
    fn round_sphere_frame() {
        for r in [0.5, 1.0, 3.0] {
            let s = round_sphere(Vec4::new(-1.0, 0.0, 0.0, 0.0), r).unwrap();
            for p in s.random_points(30, 5) {
                let f = frame(&s, &p);
                let (nf, sd) = (f.normal.unwrap(), f.shape.clone().unwrap());
                let eta = (1.0 / (2.0 * r * r)) * f.psi - (1.0 / r) * E0;
                assert!((nf.eta - eta).max_abs() < 1e-12);
                assert!(dev_from_scalar(&sd.a_eta, -1.0 / (2.0 * r * r)) < 1e-12);
                assert!(dev_from_scalar(&sd.a_xi, -1.0) < 1e-12);
                for (m, k) in &f.k_by {
                    let tol = if m.is_jet_exact() { 1e-10 } else { 1e-6 };
                    assert!(close(*k, 1.0 / (r * r), tol), "{m}: {k}");
                }
                assert!(sd.umbilicity_deficit < 1e-10);
                let res = identity_residuals(&f).unwrap();
                assert!(res.eq_h_norm < 1e-10);
            }
        }
    }

    #[test]
    fn example1_base_is_marginally_trapped() {
        let s = surf("example1_base", None);
        for p in s.random_points(30, 6) {
            let f = frame(&s, &p);
            let sd = f.shape.as_ref().unwrap();
            for (m, k) in &f.k_by {
                assert!(k.abs() < if m.is_jet_exact() { 1e-10 } else { 1e-6 }, "{m}: {k}");
            }
            assert!(sd.h_sq.abs() < 1e-10);
            assert!(sd.h.euclid_norm() > 0.5);
            // II_eta = diag(-1/2, 1/2)
            assert!(close(sd.ii_eta[0][0], -0.5, 1e-12) && close(sd.ii_eta[1][1], 0.5, 1e-12));
            assert!(sd.umbilicity_deficit > 0.5);
        }
    }

    #[test]
    fn unit_sphere_mean_curvature() {
        let s = surf("example2_sigma", Some("0"));
        for p in s.random_points(30, 8) {
            let f = frame(&s, &p);
            let sd = f.shape.clone().unwrap();
            assert!((sd.h - (E0 - f.psi)).max_abs() < 1e-12);
            assert!(close(sd.h_sq, 1.0, 1e-12));
            assert!(close(f.k(), 1.0, 1e-12));
        }
    }

    #[test]
    fn lightcone_formulas_match_general_routes() {
        let cases = [
            surf("example1_sigma", Some("0.4 * sin(x) * y - 0.1 * y^2 + 0.2 * x")),
            surf("example2_sigma", Some("x * y - 0.5 * z + 0.3 * x^3")),
            surf("example1_csch_x", None),
        ];
        for s in &cases {
            for p in s.random_points(60, 12) {
                let f = frame(s, &p);
                let sd = f.shape.as_ref().unwrap();
                let scale = 1.0 + sd.h.euclid_norm();
                assert!((sd.h - f.h_general).max_abs() <= 1e-9 * scale);
                let k = f.k();
                assert!(close(f.k_by[&KMethod::Gauss], k, 1e-9 * (1.0 + k.abs())));
                assert!(close(sd.ii_sq, sd.ii_sq_direct, 1e-8 * (1.0 + sd.ii_sq.abs())));
                // A_eta self-adjoint, trace identity, formula vs direct
                let ga = mat_mul(&f.metric.g, &sd.a_eta);
                assert!((ga[0][1] - ga[1][0]).abs() <= 1e-9 * (1.0 + ga[0][1].abs()));
                assert!(close(-trace(&sd.a_eta), k, 1e-9 * (1.0 + k.abs())));
                for i in 0..2 {
                    for j in 0..2 {
                        assert!(close(sd.a_eta[i][j], sd.a_eta_direct[i][j], 1e-9 * (1.0 + sd.a_eta[i][j].abs())));
                    }
                }
            }
        }
    }

    #[test]
    fn pseudo_umbilical_iff_umbilical() {
        let cases = [
            surf("example1_base", None),
            surf("example1_sech_x", None),
            surf("example1_sech_y", None),
            surf("example2_sigma", Some("0.2 * x * y")),
            round_sphere(default_probe_u(), 1.3).unwrap(),
        ];
        for s in &cases {
            for p in s.random_points(40, 13) {
                let sd = frame(s, &p).shape.unwrap();
                let umb = sd.umbilicity_deficit <= UMBILICAL_TOL;
                let pseudo = sd.pseudo_umbilicity_deficit <= UMBILICAL_TOL;
                assert_eq!(umb, pseudo, "{}: {} vs {}", s.name, sd.umbilicity_deficit, sd.pseudo_umbilicity_deficit);
            }
        }
    }

    #[test]
    fn chart_independence_on_overlap() {
        let s = surf("example2_sigma", Some("0.3 * x * y - 0.2 * z + 0.1 * x^2"));
        for v in [[0.8, 0.0, 0.6], [0.48, 0.64, -0.6], [0.0, 1.0, 0.0], [0.8, 0.0, -0.6]] {
            let p = ChartPoint::from_unit(v);
            let q = p.other_chart().unwrap();
            let (a, b) = (frame(&s, &p), frame(&s, &q));
            assert!((a.psi - b.psi).max_abs() < 1e-12);
            for m in KMethod::ALL {
                assert!(close(a.k_by[&m], b.k_by[&m], 1e-8), "{m}");
            }
            let (sa, sb) = (a.shape.unwrap(), b.shape.unwrap());
            assert!((sa.h - sb.h).max_abs() < 1e-8);
            assert!(close(sa.umbilicity_deficit, sb.umbilicity_deficit, 1e-8));
            assert!(close(sa.ii_sq, sb.ii_sq, 1e-8));
        }
    }

    #[test]
    fn cylinder_is_handled_by_general_routes() {
        let s = surf("counterexample_cylinder", None);
        let p = ChartPoint::from_unit([0.6, 0.0, 0.8]);
        let jet = s.evaluate(&p).unwrap();
        let mf = metric_frame(&jet).unwrap();
        assert!(matches!(normal_frame(&jet, &mf, 1e-9), Err(Error::NotOnLightcone { .. })));
        let f = frame(&s, &p);
        assert!(f.shape.is_none());
        assert!(close(f.k_by[&KMethod::Gauss], 1.0, 1e-10));
        assert!(close(f.k_by[&KMethod::Brioschi], 1.0, 1e-6));
        // 4 <H,H> = <lap psi, lap psi> = 4 - (1 - x^2)^2 on the unit sphere
        assert!(close(f.h_sq_general, 1.0 - 0.25 * (1.0 - 0.36f64).powi(2), 1e-10));
    }

    #[test]
    fn parallel_map_is_order_preserving() {
        let s = surf("example1_sech_x", None);
        let pts = s.random_points(64, 3);
        let par: Vec<f64> = geometry_frames(&s, &pts, &FrameOptions::default())
            .into_iter()
            .map(|f| f.unwrap().k_by[&KMethod::Log])
            .collect();
        let seq: Vec<f64> = pts.iter().map(|p| frame(&s, p).k_by[&KMethod::Log]).collect();
        assert_eq!(par, seq);
    }
}
