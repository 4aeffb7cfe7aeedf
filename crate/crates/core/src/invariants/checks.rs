//! Identity residuals, normal-connection flatness, the lightcone certificate
//! and the local-maximum diagnostic.

use serde::Serialize;

use super::{
    dev_from_scalar, metric_frame, normal_frame, par_map, FrameOptions, GeometryFrame,
    KMethod,
};
use crate::error::Result;
use crate::jets::{ImmersionJet, Jet2, Jet3, Scalar};
use crate::minkowski::{inner, on_future_lightcone, Vec4, DEFAULT_LIGHTCONE_TOL};
use crate::surfaces::{ChartDomain, ChartPoint, Surface};

/// Differences between the curvature routes and the structural identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `|K_m - K_extrinsic|` per method.
    pub k_diff: Vec<(KMethod, f64)>,
    /// `H + K/2 xi + eta`
    pub eq_h: Vec4,
    pub eq_h_norm: f64,
    /// Frobenius norm of `A_xi + I`.
    pub a_xi_dev: f64,
    /// `|<II,II> - direct sum|`
    pub ii_sq_diff: f64,
}

impl IdentityResiduals {
    pub fn k(&self, m: KMethod) -> f64 {
        self.k_diff.iter().find(|(k, _)| *k == m).map_or(0.0, |(_, v)| *v)
    }
}

/// `None` off the lightcone.
pub fn identity_residuals(frame: &GeometryFrame) -> Option<IdentityResiduals> {
    let (nf, sd) = (frame.normal.as_ref()?, frame.shape.as_ref()?);
    let k = frame.k_by[&KMethod::Extrinsic];
    let k_diff = frame
        .k_by
        .iter()
        .filter(|(m, _)| **m != KMethod::Extrinsic)
        .map(|(m, v)| (*m, (v - k).abs()))
        .collect();
    let eq_h = sd.h + (0.5 * k) * nf.xi + nf.eta;
    Some(IdentityResiduals {
        k_diff,
        eq_h,
        eq_h_norm: eq_h.euclid_norm(),
        a_xi_dev: dev_from_scalar(&sd.a_xi, -1.0),
        ii_sq_diff: (sd.ii_sq - sd.ii_sq_direct).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalField {
    Xi,
    Eta,
    #[serde(rename = "H")]
    H,
}

impl NormalField {
    pub fn name(self) -> &'static str {
        match self {
            NormalField::Xi => "xi",
            NormalField::Eta => "eta",
            NormalField::H => "H",
        }
    }
}

/// First-order jet: value and chart gradient. The Hessian slot is unused.
fn first_order(value: f64, grad: [f64; 2]) -> Jet2 {
    Jet2 { value, grad, hess: [[0.0; 2]; 2] }
}

type Column = [Jet2; 4];

fn dot(u: &Column, v: &Column) -> Jet2 {
    -u[0] * v[0] + u[1] * v[1] + u[2] * v[2] + u[3] * v[3]
}

/// Ambient derivatives `[D_1 X, D_2 X]` of a normal field.
///
/// Each quantity is carried as a first-order jet built from the next order
/// of `coords`: `xi` and `eta` need the 2-jet of `psi`, and `H`, through
/// `d lap psi0`, the 3-jet. No step is involved.
fn field_derivatives(coords: &[Jet3<2>; 4], field: NormalField) -> Result<[Vec4; 2]> {
    let pos: Column = coords.map(|c| first_order(c.value, c.grad));
    let tan: [Column; 2] = std::array::from_fn(|i| coords.map(|c| first_order(c.grad[i], c.hess[i])));
    let g: [[Jet2; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| dot(&tan[i], &tan[j])));
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let ginv = [
        [g[1][1].checked_div(&det)?, -g[0][1].checked_div(&det)?],
        [-g[1][0].checked_div(&det)?, g[0][0].checked_div(&det)?],
    ];
    let dpsi0 = [tan[0][0], tan[1][0]];
    let grad: [Jet2; 2] = std::array::from_fn(|i| ginv[i][0] * dpsi0[0] + ginv[i][1] * dpsi0[1]);
    let normsq = dpsi0[0] * grad[0] + dpsi0[1] * grad[1];
    let t: Column = std::array::from_fn(|a| {
        grad[0] * tan[0][a] + grad[1] * tan[1][a] + if a == 0 { 1.0 } else { 0.0 }
    });
    let inv_psi0 = pos[0].recip()?;
    let c = (normsq + 1.0) * inv_psi0 * inv_psi0;
    let value: Column = match field {
        NormalField::Xi => pos,
        NormalField::Eta => std::array::from_fn(|a| c.scale(0.5) * pos[a] - t[a] * inv_psi0),
        NormalField::H => {
            let sec: [[Column; 2]; 2] = std::array::from_fn(|i| {
                std::array::from_fn(|j| coords.map(|c| first_order(c.hess[i][j], c.third[i][j])))
            });
            // d_k g_ij
            let dg: [[[Jet2; 2]; 2]; 2] = std::array::from_fn(|k| {
                std::array::from_fn(|i| std::array::from_fn(|j| dot(&sec[k][i], &tan[j]) + dot(&tan[i], &sec[k][j])))
            });
            let mut lap = Jet2::constant(0.0);
            for i in 0..2 {
                for j in 0..2 {
                    let mut cov = sec[i][j][0];
                    for m in 0..2 {
                        for l in 0..2 {
                            let first_kind = (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]).scale(0.5);
                            cov = cov - ginv[m][l] * first_kind * dpsi0[m];
                        }
                    }
                    lap = lap + ginv[i][j] * cov;
                }
            }
            let coef = lap * inv_psi0.scale(0.5) - c;
            std::array::from_fn(|a| coef * pos[a] + t[a] * inv_psi0)
        }
    };
    Ok(std::array::from_fn(|k| Vec4(std::array::from_fn(|a| value[a].grad[k]))))
}

/// Normal part of the ambient derivative of a normal field,
/// `<D,eta> xi + <D,xi> eta`, maximised (Euclidean norm) over both chart
/// directions. `D` is exact; see [`field_derivatives`].
pub fn normal_parallel_residual(surface: &Surface, p: &ChartPoint, field: NormalField) -> Result<f64> {
    let coords = surface.evaluate3(p)?;
    let jet = ImmersionJet::new(coords.map(|c| c.truncate()));
    let mf = metric_frame(&jet)?;
    let nf = normal_frame(&jet, &mf, DEFAULT_LIGHTCONE_TOL)?;
    let mut worst = 0.0_f64;
    for d in field_derivatives(&coords, field)? {
        let normal = inner(&d, &nf.eta) * nf.xi + inner(&d, &nf.xi) * nf.eta;
        worst = worst.max(normal.euclid_norm());
    }
    Ok(worst)
}

/// Evidence at one sample of [`lightcone_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSample {
    pub point: ChartPoint,
    /// `<psi,psi> / max(1, |psi|^2)`
    pub inner_rel: f64,
    pub psi0: f64,
    pub a_xi_dev: f64,
    /// Relative to `max(1, |psi|)`.
    pub parallel_residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LightconeCertificate {
    pub pass: bool,
    pub tol: f64,
    pub samples: usize,
    pub failures: usize,
    pub max_abs_inner_rel: f64,
    pub max_a_xi_dev: f64,
    pub max_parallel_residual: f64,
    pub first_failure: Option<CertificateSample>,
}

pub const CERTIFICATE_TOL: f64 = 1e-8;

/// Numeric form of the characterization: `psi` lies in the future lightcone,
/// `A_xi = -I` for `xi = psi`, and `xi` is normal-parallel.
pub fn lightcone_certificate(surface: &Surface, points: &[ChartPoint], tol: f64) -> LightconeCertificate {
    let samples: Vec<CertificateSample> = par_map(points, |p| {
        let fail = |e: crate::error::Error| CertificateSample {
            point: *p,
            inner_rel: f64::NAN,
            psi0: f64::NAN,
            a_xi_dev: f64::NAN,
            parallel_residual: None,
            error: Some(e.to_string()),
        };
        let jet = match surface.evaluate(p) {
            Ok(j) => j,
            Err(e) => return fail(e),
        };
        let mf = match metric_frame(&jet) {
            Ok(m) => m,
            Err(e) => return fail(e),
        };
        let psi = jet.position();
        let lower: super::Mat2 =
            std::array::from_fn(|i| std::array::from_fn(|j| inner(&jet.dd(i, j), &psi)));
        let a_xi = mf.raise(&lower);
        let on = on_future_lightcone(&psi, tol);
        let parallel_residual = if on {
            normal_parallel_residual(surface, p, NormalField::Xi)
                .ok()
                .map(|r| r / psi.euclid_norm().max(1.0))
        } else {
            None
        };
        CertificateSample {
            point: *p,
            inner_rel: psi.norm_sq() / psi.euclid_norm_sq().max(1.0),
            psi0: psi[0],
            a_xi_dev: dev_from_scalar(&a_xi, -1.0),
            parallel_residual,
            error: None,
        }
    });
    let ok = |s: &CertificateSample| {
        s.error.is_none()
            && s.inner_rel.abs() <= tol
            && s.psi0 > 0.0
            && s.a_xi_dev <= tol
            && s.parallel_residual.is_some_and(|r| r <= tol)
    };
    let failures = samples.iter().filter(|s| !ok(s)).count();
    let max = |f: &dyn Fn(&CertificateSample) -> f64| samples.iter().map(f).fold(0.0_f64, |m, v| if v.is_nan() { m } else { m.max(v) });
    LightconeCertificate {
        pass: failures == 0 && !samples.is_empty(),
        tol,
        samples: samples.len(),
        failures,
        max_abs_inner_rel: max(&|s| s.inner_rel.abs()),
        max_a_xi_dev: max(&|s| s.a_xi_dev),
        max_parallel_residual: max(&|s| s.parallel_residual.unwrap_or(f64::NAN)),
        first_failure: samples.iter().find(|s| !ok(s)).cloned(),
    }
}

/// A strict local maximum of `psi0` with `K <= 0` on its whole neighbourhood.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremaFlag {
    pub point: ChartPoint,
    pub psi0: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremaDiagnostic {
    pub grid: [usize; 2],
    pub local_maxima: usize,
    pub flags: Vec<ExtremaFlag>,
}

/// Indices `(i, j)` of strict interior local maxima of `values` on a `w x h`
/// row-major grid whose 3x3 neighbourhood has `k <= 0`; `wrap` joins the
/// first and last columns. Returns `(maxima, flagged)`.
pub fn flag_extrema(values: &[f64], k: &[f64], w: usize, h: usize, wrap: bool) -> (usize, Vec<(usize, usize)>) {
    let mut maxima = 0;
    let mut flagged = Vec::new();
    let cols: Vec<usize> = if wrap { (0..w).collect() } else { (1..w.saturating_sub(1)).collect() };
    for j in 1..h.saturating_sub(1) {
        for &i in &cols {
            let c = values[j * w + i];
            let mut is_max = true;
            let mut kmax = k[j * w + i];
            for dj in [-1i64, 0, 1] {
                for di in [-1i64, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ii = (i as i64 + di).rem_euclid(w as i64) as usize;
                    let n = (j as i64 + dj) as usize * w + ii;
                    is_max &= c > values[n];
                    kmax = kmax.max(k[n]);
                }
            }
            if is_max {
                maxima += 1;
                if kmax <= 0.0 {
                    flagged.push((i, j));
                }
            }
        }
    }
    (maxima, flagged)
}

/// Scans a grid for local maxima of `psi0` where `K <= 0` around them, which
/// the lightcone geometry forbids.
pub fn grid_extrema_diagnostic(surface: &Surface, w: usize, h: usize, opts: &FrameOptions) -> Result<ExtremaDiagnostic> {
    let points = surface.grid_points(w, h);
    let data: Vec<Result<(f64, f64)>> = par_map(&points, |p| {
        let jet = surface.evaluate(p)?;
        let mf = metric_frame(&jet)?;
        let nf = normal_frame(&jet, &mf, opts.lightcone_tol)?;
        let k = (1.0 + nf.grad_psi0_normsq) / (nf.psi0 * nf.psi0) - nf.lap_psi0 / nf.psi0;
        Ok((nf.psi0, k))
    });
    let data: Vec<(f64, f64)> = data.into_iter().collect::<Result<_>>()?;
    let (values, k): (Vec<f64>, Vec<f64>) = data.into_iter().unzip();
    let wrap = matches!(surface.domain, ChartDomain::SphereAtlas);
    let (local_maxima, flagged) = flag_extrema(&values, &k, w, h, wrap);
    Ok(ExtremaDiagnostic {
        grid: [w, h],
        local_maxima,
        flags: flagged
            .into_iter()
            .map(|(i, j)| {
                let n = j * w + i;
                ExtremaFlag { point: points[n], psi0: values[n], k: k[n] }
            })
            .collect(),
    })
}
