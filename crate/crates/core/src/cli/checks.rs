//! Assembles report checks from the library routines.

use serde_json::{json, Value};

use super::report::{Check, Verdict};
use crate::compact::{
    chart_quadrature, first_eigenvalue, inequality_suite, integral_identity_suite, local_extrema_scan, EmbeddedMesh,
    QuadratureField, SpectrumOptions, SpectrumResult, INTEGRAL_TOL, SLACK_TOL,
};
use crate::invariants::{
    conformal_curvature, example1_closed_forms, example2_closed_form, geometry_frames, grid_extrema_diagnostic,
    identity_residuals, lightcone_certificate, normal_parallel_residual, par_map, Extension, FrameOptions,
    GeometryFrame, KMethod, Mat2, NormalField, UMBILICAL_TOL,
};
use crate::minkowski::inner;
use crate::surfaces::{validate_spacelike, Base, ChartDomain, ChartPoint, Surface};

/// Jet-exact curvature routes agree to this, relative to `max(1, |K|)`.
pub const K_EXACT_TOL: f64 = 1e-9;
/// Finite-difference curvature routes.
pub const K_FD_TOL: f64 = 1e-5;
pub const EQ_H_TOL: f64 = 1e-8;
pub const A_XI_TOL: f64 = 1e-10;
pub const PARALLEL_TOL: f64 = 1e-6;
/// A non-constant K must show a normal derivative of `H` at least this large.
pub const NON_PARALLEL_MIN: f64 = 1e-3;
pub const PDE_TOL: f64 = 1e-10;
pub const CLOSED_FORM_TOL: f64 = 1e-8;
pub const SPECTRUM_TOL: f64 = 1e-2;
pub const AREA_ORACLE_TOL: f64 = 1e-2;
pub const CHART_TOL: f64 = 1e-8;

fn scale(x: f64) -> f64 {
    x.abs().max(1.0)
}

fn frobenius_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += (a[i][j] - b[i][j]).powi(2);
        }
    }
    s.sqrt()
}

fn frobenius(a: &Mat2) -> f64 {
    frobenius_diff(a, &[[0.0; 2]; 2])
}

/// Max of a per-point quantity, keeping the per-point values. NaN wins.
fn max_points(values: Vec<(usize, f64)>) -> (f64, Vec<(usize, f64)>) {
    let m = values.iter().fold(0.0_f64, |acc, &(_, v)| if v.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(v) });
    (m, values)
}

fn point_json(p: &ChartPoint) -> Value {
    serde_json::to_value(p).unwrap_or(Value::Null)
}

/// Evaluated frames with their sample indices, plus an evaluation check.
pub fn frames(surface: &Surface, points: &[ChartPoint], opts: &FrameOptions) -> (Vec<(usize, GeometryFrame)>, Check) {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in geometry_frames(surface, points, opts).into_iter().enumerate() {
        match r {
            Ok(f) => ok.push((i, f)),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    let mut check = Check::new("evaluation", "every sample point evaluates")
        .value("samples", points.len())
        .value("failures", failures.len())
        .tol(0.0)
        .evidence(failures.len() as f64)
        .pass_if(failures.is_empty() && !points.is_empty());
    if let Some((i, msg)) = failures.first() {
        check = check.value("first_failure", json!({ "point": point_json(&points[*i]), "error": msg }));
    }
    (ok, check)
}

/// Pointwise checks for `verify`.
/// Passes iff the certificate verdict matches `claims_lightcone`.
pub fn certificate_check(surface: &Surface, points: &[ChartPoint], cert_tol: f64) -> Check {
    let cert = lightcone_certificate(surface, points, cert_tol);
    let claims = surface.flags.claims_lightcone;
    Check::new("lightcone_certificate", "psi in the future lightcone, A_xi = -I, xi normally parallel")
        .value("claims_lightcone", claims)
        .value("certificate_pass", cert.pass)
        .value("failures", cert.failures)
        .value("max_abs_inner_rel", cert.max_abs_inner_rel)
        .value("max_a_xi_dev", cert.max_a_xi_dev)
        .value("max_parallel_residual", cert.max_parallel_residual)
        .value("first_failure", &cert.first_failure)
        .tol(cert_tol)
        .evidence(cert.max_abs_inner_rel)
        .pass_if(cert.pass == claims)
}

pub fn verify_checks(surface: &Surface, points: &[ChartPoint], cert_tol: f64, extrema_grid: [usize; 2]) -> Vec<Check> {
    let opts = FrameOptions::default();
    let (frames, eval) = frames(surface, points, &opts);
    let mut out = vec![eval];

    let sp = validate_spacelike(surface, points, 0.0);
    out.push(
        Check::new("spacelike", "det g > 0 and g11 > 0")
            .value("min_detg", sp.min_detg)
            .evidence(sp.min_detg)
            .pass_if(sp.pass),
    );

    out.push(certificate_check(surface, points, cert_tol));
    let claims = surface.flags.claims_lightcone;

    if claims {
        out.extend(lightcone_checks(surface, points, &frames, extrema_grid, &opts));
    } else {
        let (m, pts) = max_points(
            frames
                .iter()
                .map(|(i, f)| {
                    let kg = f.k_by[&KMethod::Gauss];
                    (*i, (f.k_by[&KMethod::Brioschi] - kg).abs() / scale(kg))
                })
                .collect(),
        );
        out.push(Check::new("k_brioschi_vs_gauss", "intrinsic K = Gauss-equation K").at_most(m, K_FD_TOL).points(pts));
    }
    out.extend(expectation_checks(surface, &frames));
    if surface.domain.is_sphere() {
        out.push(chart_independence(surface, &frames, &opts));
    }
    out
}

fn lightcone_checks(
    surface: &Surface,
    points: &[ChartPoint],
    frames: &[(usize, GeometryFrame)],
    extrema_grid: [usize; 2],
    opts: &FrameOptions,
) -> Vec<Check> {
    let mut out = Vec::new();
    let res: Vec<(usize, f64, crate::invariants::IdentityResiduals)> = frames
        .iter()
        .filter_map(|(i, f)| identity_residuals(f).map(|r| (*i, f.k(), r)))
        .collect();
    let k_routes = [
        (KMethod::Mean, "k_mean", "K = <H,H>", K_EXACT_TOL),
        (KMethod::Trace, "k_trace", "K = -tr A_eta", K_EXACT_TOL),
        (KMethod::Gauss, "k_gauss", "K = (<II11,II22> - <II12,II12>) / det g", K_EXACT_TOL),
        (KMethod::Log, "k_log", "K = -lap log psi0 + 1/psi0^2", K_FD_TOL),
        (KMethod::LogU, "k_log_u", "K = -lap log <psi,u> + 1/<psi,u>^2", K_FD_TOL),
        (KMethod::Brioschi, "k_brioschi", "K from the curvature tensor of g", K_FD_TOL),
    ];
    for (m, name, anchor, tol) in k_routes {
        let (e, pts) = max_points(res.iter().map(|(i, k, r)| (*i, r.k(m) / scale(*k))).collect());
        out.push(Check::new(name, anchor).at_most(e, tol).points(pts));
    }
    let (e, pts) = max_points(
        frames
            .iter()
            .filter_map(|(i, f)| {
                let r = identity_residuals(f)?;
                Some((*i, r.eq_h_norm / scale(f.psi.euclid_norm())))
            })
            .collect(),
    );
    out.push(Check::new("eq_h", "H = -K/2 xi - eta").at_most(e, EQ_H_TOL).points(pts));
    let (e, pts) = max_points(res.iter().map(|(i, _, r)| (*i, r.a_xi_dev)).collect());
    out.push(Check::new("a_xi", "A_xi = -I").at_most(e, A_XI_TOL).points(pts));
    let (e, pts) = max_points(
        frames
            .iter()
            .filter_map(|(i, f)| {
                let s = f.shape.as_ref()?;
                Some((*i, (s.ii_sq - s.ii_sq_direct).abs() / scale(s.ii_sq)))
            })
            .collect(),
    );
    out.push(Check::new("ii_sq", "<II,II> = 4 <H,H> - 2K").at_most(e, CLOSED_FORM_TOL).points(pts));
    let (e, pts) = max_points(
        frames
            .iter()
            .filter_map(|(i, f)| {
                let s = f.shape.as_ref()?;
                Some((*i, frobenius_diff(&s.a_eta, &s.a_eta_direct) / scale(frobenius(&s.a_eta))))
            })
            .collect(),
    );
    out.push(
        Check::new("a_eta", "A_eta = -(1 + |grad psi0|^2)/(2 psi0^2) I + Hess psi0 / psi0")
            .at_most(e, CLOSED_FORM_TOL)
            .points(pts),
    );
    out.push(null_frame_check(surface, frames));

    for (field, name, anchor) in [
        (NormalField::Xi, "parallel_xi", "normal part of D xi = 0"),
        (NormalField::Eta, "parallel_eta", "normal part of D eta = 0"),
    ] {
        let (e, pts) = parallel_residuals(surface, points, frames, field);
        out.push(Check::new(name, anchor).at_most(e, PARALLEL_TOL).points(pts));
    }
    let (e, pts) = parallel_residuals(surface, points, frames, NormalField::H);
    let spread = k_spread(frames);
    let constant = surface.expected.constant_k || surface.expected.k.is_some() || spread <= 1e-8;
    let check = Check::new("parallel_h", "H normally parallel iff K constant")
        .value("k_spread", spread)
        .value("k_constant", constant)
        .points(pts);
    out.push(if constant {
        check.at_most(e, PARALLEL_TOL)
    } else if e >= NON_PARALLEL_MIN {
        check.tol(NON_PARALLEL_MIN).evidence(e).verdict(Verdict::Pass)
    } else {
        check.tol(NON_PARALLEL_MIN).evidence(e).verdict(Verdict::Skipped)
    });

    let (e, pts) = max_points(
        frames
            .iter()
            .filter_map(|(i, f)| {
                let s = f.shape.as_ref()?;
                let um = s.umbilicity_deficit <= UMBILICAL_TOL;
                let pseudo = s.pseudo_umbilicity_deficit <= UMBILICAL_TOL;
                Some((*i, if um == pseudo { 0.0 } else { 1.0 }))
            })
            .collect(),
    );
    out.push(Check::new("pseudo_umbilical_iff_umbilical", "A_H a multiple of I iff Hess psi0 a multiple of I").at_most(e, 0.0).points(pts));

    out.extend(closed_form_checks(surface, points, frames));

    let [w, h] = extrema_grid;
    out.push(match grid_extrema_diagnostic(surface, w, h, opts) {
        Ok(d) => Check::new("psi0_maxima", "no local maximum of psi0 where K <= 0")
            .value("grid", d.grid)
            .value("local_maxima", d.local_maxima)
            .value("flags", &d.flags)
            .at_most(d.flags.len() as f64, 0.0),
        Err(e) => Check::new("psi0_maxima", "no local maximum of psi0 where K <= 0")
            .value("error", e.to_string())
            .verdict(Verdict::Fail),
    });
    out
}

fn k_spread(frames: &[(usize, GeometryFrame)]) -> f64 {
    let (lo, hi) = frames.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, f)| (a.min(f.k()), b.max(f.k())));
    if frames.is_empty() {
        0.0
    } else {
        (hi - lo) / scale(hi.abs().max(lo.abs()))
    }
}

fn parallel_residuals(
    surface: &Surface,
    points: &[ChartPoint],
    frames: &[(usize, GeometryFrame)],
    field: NormalField,
) -> (f64, Vec<(usize, f64)>) {
    let vals = par_map(frames, |(i, f)| {
        let r = normal_parallel_residual(surface, &points[*i], field).unwrap_or(f64::NAN);
        (*i, r / scale(f.psi.euclid_norm()))
    });
    max_points(vals)
}

/// `xi` and `eta` are null, normal, and `<xi, eta> = 1`.
fn null_frame_check(surface: &Surface, frames: &[(usize, GeometryFrame)]) -> Check {
    let vals = par_map(frames, |(i, f)| {
        let Some(nf) = f.normal.as_ref() else { return (*i, f64::NAN) };
        let Ok(jet) = surface.evaluate(&f.point) else { return (*i, f64::NAN) };
        let s = scale(nf.xi.euclid_norm() * nf.eta.euclid_norm());
        let mut worst = (inner(&nf.eta, &nf.eta)).abs().max((inner(&nf.xi, &nf.eta) - 1.0).abs());
        for d in 0..2 {
            let t = jet.d(d);
            let tn = scale(t.euclid_norm());
            worst = worst.max(inner(&nf.xi, &t).abs() / tn).max(inner(&nf.eta, &t).abs() / tn);
        }
        (*i, worst / s)
    });
    let (e, pts) = max_points(vals);
    Check::new("null_frame", "<eta,eta> = 0, <xi,eta> = 1, xi and eta normal").at_most(e, CLOSED_FORM_TOL).points(pts)
}

fn closed_form_checks(surface: &Surface, points: &[ChartPoint], frames: &[(usize, GeometryFrame)]) -> Vec<Check> {
    let mut out = Vec::new();
    match surface.base {
        Base::Example1 => {
            let cf: Vec<_> = frames.iter().map(|(i, f)| (*i, f, example1_closed_forms(surface, &points[*i]))).collect();
            let (e, pts) = max_points(
                cf.iter()
                    .map(|(i, f, c)| match (c, &f.shape) {
                        (Ok(c), Some(s)) => (*i, frobenius_diff(&c.ii_eta, &s.ii_eta) / scale(frobenius(&s.ii_eta))),
                        _ => (*i, f64::NAN),
                    })
                    .collect(),
            );
            out.push(Check::new("ii_eta_closed_form", "II_eta of e^sigma (cosh x, sinh x, cos y, sin y)").at_most(e, K_EXACT_TOL).points(pts));
            let (e, pts) = max_points(
                cf.iter()
                    .map(|(i, f, c)| match c {
                        Ok(c) => (*i, (c.k_formula - f.k()).abs() / scale(f.k())),
                        Err(_) => (*i, f64::NAN),
                    })
                    .collect(),
            );
            let ks: Vec<f64> = cf.iter().filter_map(|(_, _, c)| c.as_ref().ok().map(|c| c.k_formula)).collect();
            let k_range = [ks.iter().copied().fold(f64::INFINITY, f64::min), ks.iter().copied().fold(f64::NEG_INFINITY, f64::max)];
            out.push(
                Check::new("k_formula", "K = -(sigma_xx + sigma_yy) e^(-2 sigma)")
                    .value("k_range", k_range)
                    .at_most(e, K_EXACT_TOL)
                    .points(pts),
            );
            let (e, pts) = max_points(
                cf.iter()
                    .map(|(i, f, c)| match (c, &f.shape) {
                        (Ok(c), Some(s)) => {
                            let r = c.pde_residual[0].abs().max(c.pde_residual[1].abs());
                            let pde = r <= CLOSED_FORM_TOL;
                            let um = s.umbilicity_deficit <= UMBILICAL_TOL;
                            (*i, if pde == um { 0.0 } else { 1.0 })
                        }
                        _ => (*i, f64::NAN),
                    })
                    .collect(),
            );
            out.push(Check::new("umbilical_iff_pde", "umbilical iff the sigma system holds").at_most(e, 0.0).points(pts));
            let res: Vec<(usize, [f64; 2])> = cf
                .iter()
                .map(|(i, _, c)| (*i, c.as_ref().map(|c| c.pde_residual).unwrap_or([f64::NAN; 2])))
                .collect();
            let (e, pts) = max_points(res.iter().map(|(i, r)| (*i, r[0].abs().max(r[1].abs()))).collect());
            let comp = |k: usize| res.iter().map(|(_, r)| r[k].abs()).fold(0.0, f64::max);
            let pde = Check::new("pde_residual", "sx^2 - sy^2 - sxx + syy = 1, sxy = sx sy")
                .value("max_abs", [comp(0), comp(1)])
                .points(pts);
            // only gated when the surface is declared umbilical
            out.push(match surface.expected.umbilical {
                Some(true) => pde.at_most(e, PDE_TOL),
                _ => pde.tol(PDE_TOL).evidence(e),
            });
            out.push(conformal_check(surface, points, frames, 0.0));
        }
        Base::UnitSphere => {
            let vals: Vec<(usize, f64, f64)> = frames
                .iter()
                .map(|(i, f)| {
                    let p = &points[*i];
                    let h = example2_closed_form(surface, p, Extension::Homogeneous);
                    let w = example2_closed_form(surface, p, Extension::AsWritten);
                    match (h, w, &f.shape) {
                        (Ok(h), Ok(w), Some(s)) => {
                            let sc = scale(frobenius(&s.ii_eta));
                            (*i, frobenius_diff(&h, &s.ii_eta) / sc, frobenius_diff(&h, &w) / sc)
                        }
                        _ => (*i, f64::NAN, f64::NAN),
                    }
                })
                .collect();
            let (e, pts) = max_points(vals.iter().map(|(i, a, _)| (*i, *a)).collect());
            out.push(Check::new("ii_eta_closed_form", "II_eta of e^sigma (1, x, y, z)").at_most(e, CLOSED_FORM_TOL).points(pts));
            let (e, pts) = max_points(vals.iter().map(|(i, _, b)| (*i, *b)).collect());
            out.push(Check::new("extension_independence", "II_eta does not depend on how sigma is extended").at_most(e, CLOSED_FORM_TOL).points(pts));
            out.push(conformal_check(surface, points, frames, 1.0));
        }
        _ => {}
    }
    out
}

fn conformal_check(surface: &Surface, points: &[ChartPoint], frames: &[(usize, GeometryFrame)], base_k: f64) -> Check {
    let (e, pts) = max_points(
        frames
            .iter()
            .map(|(i, f)| match conformal_curvature(base_k, surface, &points[*i]) {
                Ok(k) => (*i, (k - f.k()).abs() / scale(f.k())),
                Err(_) => (*i, f64::NAN),
            })
            .collect(),
    );
    Check::new("conformal_curvature", "K = (K_0 - lap_0 sigma) e^(-2 sigma)").at_most(e, K_EXACT_TOL).points(pts)
}

fn expectation_checks(surface: &Surface, frames: &[(usize, GeometryFrame)]) -> Vec<Check> {
    let ex = &surface.expected;
    let mut out = Vec::new();
    if let Some(k) = ex.k {
        let (e, pts) = max_points(frames.iter().map(|(i, f)| (*i, (f.k() - k).abs() / scale(k))).collect());
        out.push(Check::new("expected_k", "K equals its catalog value").value("k", k).at_most(e, K_EXACT_TOL).points(pts));
    } else if ex.constant_k {
        let spread = k_spread(frames);
        out.push(Check::new("constant_k", "K is constant").at_most(spread, 1e-8));
    }
    if surface.flags.claims_lightcone {
        let defs: Vec<(usize, f64)> = frames.iter().filter_map(|(i, f)| Some((*i, f.umbilicity_deficit()?))).collect();
        let (e, pts) = max_points(defs);
        match ex.umbilical {
            Some(true) => out.push(
                Check::new("umbilical", "Hess psi0 = (lap psi0 / 2) I")
                    .at_most(e, UMBILICAL_TOL)
                    .points(pts),
            ),
            Some(false) => out.push(
                Check::new("not_umbilical", "Hess psi0 has a traceless part somewhere")
                    .tol(UMBILICAL_TOL)
                    .evidence(e)
                    .pass_if(e > UMBILICAL_TOL)
                    .points(pts),
            ),
            None => out.push(
                Check::new("umbilicity_deficit", "|Hess psi0 - (lap psi0 / 2) I|")
                    .evidence(e)
                    .value("umbilical", e <= UMBILICAL_TOL)
                    .points(pts),
            ),
        }
    }
    out
}

/// Points in both sphere charts give the same invariants.
fn chart_independence(surface: &Surface, frames: &[(usize, GeometryFrame)], opts: &FrameOptions) -> Check {
    let pairs: Vec<(usize, ChartPoint, &GeometryFrame)> = frames
        .iter()
        .filter_map(|(i, f)| {
            let q = f.point.other_chart()?;
            ChartDomain::SphereAtlas.contains(&q).then_some((*i, q, f))
        })
        .collect();
    let vals = par_map(&pairs, |(i, q, f)| match crate::invariants::geometry_frame(surface, q, opts) {
        Ok(g) => {
            let dk = (g.k() - f.k()).abs() / scale(f.k());
            let dh = (g.h_sq() - f.h_sq()).abs() / scale(f.h_sq());
            let du = match (g.umbilicity_deficit(), f.umbilicity_deficit()) {
                (Some(a), Some(b)) => (a - b).abs() / scale(b),
                _ => 0.0,
            };
            let dpsi = (g.psi - f.psi).euclid_norm() / scale(f.psi.euclid_norm());
            (*i, dk.max(dh).max(du).max(dpsi))
        }
        Err(_) => (*i, f64::NAN),
    });
    let (e, pts) = max_points(vals);
    Check::new("chart_independence", "invariants agree in both stereographic charts")
        .value("overlap_points", pts.len())
        .at_most(e, CHART_TOL)
        .points(pts)
}

/// Rows of the `eval` table.
pub fn eval_rows(frames: &[(usize, GeometryFrame)]) -> Value {
    Value::Array(
        frames
            .iter()
            .map(|(i, f)| {
                json!({
                    "index": i,
                    "point": point_json(&f.point),
                    "psi": f.psi.0,
                    "detg": f.metric.detg,
                    "K": f.k(),
                    "K_by": f.k_by.iter().map(|(m, v)| (m.name().to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
                    "H_sq": f.h_sq(),
                    "umbilicity_deficit": f.umbilicity_deficit(),
                    "pseudo_umbilicity_deficit": f.shape.as_ref().map(|s| s.pseudo_umbilicity_deficit),
                    "psi0": f.normal.as_ref().map(|n| n.psi0),
                })
            })
            .collect(),
    )
}

/// Per-point field rows of `eval` as checks, for CSV.
pub fn eval_field_checks(frames: &[(usize, GeometryFrame)]) -> Vec<Check> {
    let fields: [(&str, fn(&GeometryFrame) -> f64); 3] = [
        ("K", |f| f.k()),
        ("H_sq", |f| f.h_sq()),
        ("umbilicity_deficit", |f| f.umbilicity_deficit().unwrap_or(f64::NAN)),
    ];
    fields
        .iter()
        .map(|(name, get)| {
            let pts: Vec<(usize, f64)> = frames.iter().map(|(i, f)| (*i, get(f))).collect();
            Check::new(&format!("field.{name}"), "pointwise value").points(pts).verdict(Verdict::Skipped)
        })
        .collect()
}

/// Checks of `integrate` on an embedded mesh.
pub fn integrate_checks(surface: &Surface, em: &EmbeddedMesh, spectrum: Option<&SpectrumResult>) -> Vec<Check> {
    let mut out = Vec::new();
    let chi = em.base.euler_characteristic();
    out.push(
        Check::new("euler_characteristic", "V - E + F = 2")
            .value("vertices", em.base.vertices.len())
            .value("edges", em.base.edges.len())
            .value("triangles", em.base.triangles.len())
            .tol(0.0)
            .evidence((chi - 2).abs() as f64)
            .pass_if(chi == 2),
    );
    let area = em.area();
    let area_check = Check::new("area_oracle", "chordal area = chart-quadrature area").value("chordal_area", area);
    out.push(match chart_quadrature(surface, &em.base, QuadratureField::Area) {
        Ok(q) => {
            let rel = (area - q).abs() / q;
            let c = area_check.value("quadrature_area", q).tol(AREA_ORACLE_TOL).evidence(rel);
            if em.base.level >= 4 {
                c.pass_if(rel <= AREA_ORACLE_TOL)
            } else {
                c.verdict(Verdict::Skipped)
            }
        }
        Err(e) => area_check.value("error", e.to_string()).verdict(Verdict::Fail),
    });
    match integral_identity_suite(em) {
        Ok(suite) => {
            for c in &suite.checks {
                let anchor = match c.name.as_str() {
                    "gauss_bonnet" => "int K dA = 2 pi chi",
                    "willmore_h_sq" => "int <H,H> dA = 4 pi",
                    _ => "int <psi,u>^-2 dA = 4 pi",
                };
                let check = Check::new(&c.name, anchor)
                    .value("value", c.value)
                    .value("target", c.target)
                    .tol(c.tol)
                    .evidence(c.rel_dev);
                out.push(match c.pass {
                    Some(p) => check.pass_if(p),
                    None => check.verdict(Verdict::Skipped),
                });
            }
        }
        Err(e) => out.push(Check::new("integrals", "integral identities").value("error", e.to_string()).verdict(Verdict::Fail)),
    }
    if let Some(target) = surface.expected.h_sq_integral {
        let c = Check::new("expected_h_sq_integral", "int <H,H> dA equals its catalog value").value("target", target);
        out.push(match crate::compact::integrate(em, "H_sq") {
            Ok(v) => {
                let rel = (v - target).abs() / target.abs();
                c.value("value", v).at_most(rel, INTEGRAL_TOL)
            }
            Err(e) => c.value("error", e.to_string()).verdict(Verdict::Fail),
        });
    }
    if em.lightcone {
        out.push(match local_extrema_scan(em) {
            Ok(r) => Check::new("mesh_psi0_maxima", "no local maximum of psi0 where K <= 0 on its one-ring")
                .value("degenerate", r.degenerate)
                .value("maxima", r.maxima.len())
                .at_most(r.flags as f64, 0.0),
            Err(e) => Check::new("mesh_psi0_maxima", "scan").value("error", e.to_string()).verdict(Verdict::Fail),
        });
    }
    if surface.expected.reilly_violation {
        out.push(reilly_violation(em, spectrum));
    }
    out
}

fn reilly_violation(em: &EmbeddedMesh, spectrum: Option<&SpectrumResult>) -> Check {
    let c = Check::new("reilly_violation", "lambda1 > 2 int <H,H> / area off the lightcone");
    let Some(spec) = spectrum else {
        return c.value("error", "no spectrum").verdict(Verdict::Fail);
    };
    match inequality_suite(em, spec) {
        Ok(s) => {
            let r = s.get("reilly").expect("reilly row");
            c.value("lambda1", r.lhs)
                .value("bound", r.rhs)
                .value("slack_rel", r.slack_rel)
                .tol(-SLACK_TOL)
                .evidence(r.slack_rel)
                .pass_if(r.slack_rel < -SLACK_TOL)
        }
        Err(e) => c.value("error", e.to_string()).verdict(Verdict::Fail),
    }
}

/// Solves for the spectrum, reporting failure as a check.
pub fn solve(em: &EmbeddedMesh, k: usize, seed: u64) -> std::result::Result<SpectrumResult, Check> {
    let opts = SpectrumOptions { k, seed, ..SpectrumOptions::default() };
    first_eigenvalue(em, &opts).map_err(|e| {
        Check::new("spectrum", "shift-invert subspace iteration converges").value("error", e.to_string()).verdict(Verdict::Fail)
    })
}

/// Checks of `spectrum`. `coarse` is the spectrum one level down, if any.
pub fn spectrum_checks(
    surface: &Surface,
    em: &EmbeddedMesh,
    spec: &SpectrumResult,
    coarse: Option<&SpectrumResult>,
) -> Vec<Check> {
    let mut out = Vec::new();
    let eigs = &spec.low_eigs;
    let sorted = eigs.windows(2).all(|w| w[0] <= w[1] + 1e-12 * scale(w[1]));
    let l0 = eigs.first().copied().unwrap_or(f64::NAN);
    out.push(
        Check::new("spectrum", "lambda0 = 0 with constant eigenvector, eigenvalues ascending")
            .value("lambda1", spec.lambda1)
            .value("low_eigs", eigs)
            .value("multiplicity_estimate", spec.multiplicity_estimate)
            .value("iterations", spec.iterations)
            .value("max_residual", spec.max_residual)
            .value("ground_state_cv", spec.ground_state_cv)
            .tol(1e-6)
            .evidence(l0.abs().max(spec.ground_state_cv))
            .pass_if(l0.abs() <= 1e-8 && spec.ground_state_cv <= 1e-6 && sorted),
    );
    if let Some(c) = coarse {
        let rel = (spec.lambda1 - c.lambda1).abs() / spec.lambda1;
        out.push(
            Check::new("mesh_convergence", "lambda1 stable under one refinement")
                .value("lambda1_coarse", c.lambda1)
                .at_most(rel, 2.0 * SPECTRUM_TOL),
        );
    }
    if let Some(k) = surface.expected.k.filter(|k| *k > 0.0 && surface.expected.umbilical != Some(false)) {
        let target = 2.0 * k;
        let rel = (spec.lambda1 - target).abs() / target;
        out.push(
            Check::new("lambda1_round", "lambda1 = 2K on a round sphere")
                .value("lambda1", spec.lambda1)
                .value("target", target)
                .at_most(rel, SPECTRUM_TOL),
        );
        out.push(
            Check::new("lambda1_multiplicity", "lambda1 has multiplicity 3 on a round sphere")
                .tol(0.0)
                .evidence((spec.multiplicity_estimate as f64 - 3.0).abs())
                .pass_if(spec.multiplicity_estimate == 3),
        );
    }
    let suite = match inequality_suite(em, spec) {
        Ok(s) => s,
        Err(e) => {
            out.push(Check::new("inequalities", "eigenvalue and area bounds").value("error", e.to_string()).verdict(Verdict::Fail));
            return out;
        }
    };
    for c in &suite.checks {
        let check = Check::new(&c.name, &c.statement)
            .value("lhs", c.lhs)
            .value("rhs", c.rhs)
            .value("holds", c.holds)
            .value("equality", c.equality)
            .value("applies", c.applies)
            .tol(-SLACK_TOL)
            .evidence(c.slack_rel);
        out.push(if c.applies {
            check.pass_if(c.holds)
        } else if c.name == "reilly" && surface.expected.reilly_violation {
            check.value("expected", "violated").pass_if(!c.holds)
        } else {
            check.verdict(Verdict::Skipped)
        });
    }
    if surface.expected.umbilical == Some(true) && surface.expected.k.is_some() {
        let psi_u_constant = em.field("psi_u").map(|f| {
            let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            hi - lo <= 1e-9 * scale(hi)
        });
        let psi_u_constant = psi_u_constant.unwrap_or(false);
        let mut mismatches = 0;
        let mut flags = serde_json::Map::new();
        for c in &suite.checks {
            let expect = match c.name.as_str() {
                "hersch" => Some(true),
                "lambda1_psi_u" | "area_psi_u" => Some(psi_u_constant),
                _ => None,
            };
            if let Some(x) = expect {
                flags.insert(c.name.clone(), json!({ "equality": c.equality, "expected": x }));
                if c.equality != x {
                    mismatches += 1;
                }
            }
        }
        out.push(
            Check::new("equality_case", "equality exactly on round spheres centred on u")
                .value("psi_u_constant", psi_u_constant)
                .value("flags", Value::Object(flags))
                .at_most(mismatches as f64, 0.0),
        );
    }
    out
}
