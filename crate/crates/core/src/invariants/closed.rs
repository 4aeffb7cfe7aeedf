//! Closed-form expressions for the conformal families, used as independent
//! routes against the generic jet pipeline.

use serde::Serialize;

use super::{metric_frame, Mat2};
use crate::error::{Error, Result};
use crate::jets::{Jet, Scalar};
use crate::surfaces::{sphere_jets, Base, ChartPoint, Surface};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example1ClosedForms {
    /// `II_eta` of `e^sigma (cosh x, sinh x, cos y, sin y)` in the `(x, y)` basis.
    pub ii_eta: Mat2,
    /// Umbilicity system: `(sx^2 - sy^2 - sxx + syy - 1, sxy - sx sy)`.
    pub pde_residual: [f64; 2],
    /// `K = -(sxx + syy) e^(-2 sigma)`
    pub k_formula: f64,
}

pub fn example1_closed_forms(surface: &Surface, p: &ChartPoint) -> Result<Example1ClosedForms> {
    if surface.base != Base::Example1 {
        return Err(Error::BadParameter(format!("`{}` is not an example1 surface", surface.name)));
    }
    let s = surface.sigma_jet(p)?;
    let (sx, sy) = (s.grad[0], s.grad[1]);
    let (sxx, sxy, syy) = (s.hess[0][0], s.hess[0][1], s.hess[1][1]);
    let off = sx * sy - sxy;
    Ok(Example1ClosedForms {
        ii_eta: [
            [0.5 * (sx * sx - sy * sy - 2.0 * sxx - 1.0), off],
            [off, 0.5 * (sy * sy - sx * sx - 2.0 * syy + 1.0)],
        ],
        pde_residual: [sx * sx - sy * sy - sxx + syy - 1.0, sxy - sx * sy],
        k_formula: -(sxx + syy) * (-2.0 * s.value).exp(),
    })
}

/// How a sigma written in `(x, y, z)` is extended off the unit sphere before
/// taking ambient derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// `sigma(p / |p|)`, degree-0 homogeneous, so the radial derivative vanishes.
    #[default]
    Homogeneous,
    /// The expression as written, radial derivative included.
    AsWritten,
}

/// `II_eta = 1/2 [(1 + P sigma)^2 - |grad sigma|^2] g0 - Hess sigma + d sigma (x) d sigma`
/// for `e^sigma (1, x, y, z)`, with ambient gradient and Hessian of the
/// extension, restricted to the chart basis.
pub fn example2_closed_form(surface: &Surface, p: &ChartPoint, ext: Extension) -> Result<Mat2> {
    if surface.base != Base::UnitSphere {
        return Err(Error::BadParameter(format!("`{}` is not a unit-sphere surface", surface.name)));
    }
    let xyz = sphere_jets::<Jet<2>>(p.chart, p.s, p.t)
        .ok_or_else(|| Error::OutsideChart { surface: surface.name.clone(), s: p.s, t: p.t })?;
    if !surface.domain.contains(p) {
        return Err(Error::OutsideChart { surface: surface.name.clone(), s: p.s, t: p.t });
    }
    let v = [xyz[0].value, xyz[1].value, xyz[2].value];
    let e: [[f64; 3]; 2] = std::array::from_fn(|i| std::array::from_fn(|c| xyz[c].grad[i]));

    let (grad, hess) = match &surface.sigma {
        None => ([0.0; 3], [[0.0; 3]; 3]),
        Some((sigma, _)) => {
            let vars: [Jet<3>; 3] = std::array::from_fn(|i| Jet::variable(i, v[i]));
            let inputs = match ext {
                Extension::Homogeneous => {
                    let r = (vars[0] * vars[0] + vars[1] * vars[1] + vars[2] * vars[2]).sqrt()?;
                    let inv = r.recip()?;
                    vars.map(|c| c * inv)
                }
                Extension::AsWritten => vars,
            };
            let j = sigma.eval(&inputs)?;
            (j.grad, j.hess)
        }
    };
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let radial = dot(&grad, &v);
    let c = 0.5 * ((1.0 + radial).powi(2) - dot(&grad, &grad));
    let ds = [dot(&grad, &e[0]), dot(&grad, &e[1])];
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let he: [f64; 3] = std::array::from_fn(|a| dot(&hess[a], &e[j]));
            c * dot(&e[i], &e[j]) - dot(&e[i], &he) + ds[i] * ds[j]
        })
    }))
}

/// `K_sigma = (K - lap_g sigma) / e^(2 sigma)` from the base metric and the
/// base curvature `base_k`.
pub fn conformal_curvature(base_k: f64, surface: &Surface, p: &ChartPoint) -> Result<f64> {
    let mf = metric_frame(&surface.base_jet(p)?)?;
    let s = surface.sigma_jet(p)?;
    let mut lap = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let cov = s.hess[i][j] - mf.christoffel[0][i][j] * s.grad[0] - mf.christoffel[1][i][j] * s.grad[1];
            lap += mf.ginv[i][j] * cov;
        }
    }
    Ok((base_k - lap) * (-2.0 * s.value).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{geometry_frame, FrameOptions, KMethod};
    use crate::minkowski::Vec4;
    use crate::surfaces::{instantiate, parse_sigma, round_sphere, TABLE_SURFACES};
    use std::collections::BTreeMap;

    fn with_a(name: &str, a: f64) -> Surface {
        instantiate(name, &[("a".to_string(), a)].into(), None).unwrap()
    }

    fn user(name: &str, sigma: &str) -> Surface {
        instantiate(name, &BTreeMap::new(), Some(&parse_sigma(sigma).unwrap())).unwrap()
    }

    #[test]
    fn sech_factor_solves_the_system() {
        for a in [1.0, 2.0] {
            let s = with_a("example1_sech_x", a);
            for p in s.grid_points(7, 7) {
                let cf = example1_closed_forms(&s, &p).unwrap();
                assert!(cf.pde_residual[0].abs() < 1e-12 && cf.pde_residual[1].abs() < 1e-12);
                assert!((cf.k_formula - 1.0 / (a * a)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn half_csch_factor_has_curvature_minus_four() {
        let s = with_a("example1_half_csch_x", 1.0);
        for p in s.grid_points(6, 6) {
            let cf = example1_closed_forms(&s, &p).unwrap();
            assert!((cf.k_formula + 4.0).abs() < 1e-9, "{}", cf.k_formula);
        }
    }

    #[test]
    fn swapped_sech_is_not_umbilical() {
        for a in [1.0, 2.0] {
            let s = with_a("example1_sech_y", a);
            for p in s.grid_points(5, 5) {
                let cf = example1_closed_forms(&s, &p).unwrap();
                assert!((cf.pde_residual[0] + 2.0).abs() < 1e-12);
                assert!(cf.pde_residual[1].abs() < 1e-12);
                assert!((cf.k_formula - 1.0 / (a * a)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn example1_matrix_matches_pipeline() {
        let mut cases: Vec<Surface> = TABLE_SURFACES.iter().map(|n| with_a(n, 2.0)).collect();
        cases.push(user("example1_sigma", "0.3 * sin(x + y) - 0.2 * x * y"));
        for s in &cases {
            for p in s.random_points(40, 21) {
                let cf = example1_closed_forms(s, &p).unwrap();
                let f = geometry_frame(s, &p, &FrameOptions::default()).unwrap();
                let sd = f.shape.unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        let d = (cf.ii_eta[i][j] - sd.ii_eta[i][j]).abs();
                        assert!(d <= 1e-9 * (1.0 + cf.ii_eta[i][j].abs()), "{} {d}", s.name);
                    }
                }
                let k = f.k_by[&KMethod::Extrinsic];
                assert!((cf.k_formula - k).abs() <= 1e-9 * (1.0 + k.abs()));
            }
        }
    }

    #[test]
    fn example2_trivial_and_round_cases() {
        let s = user("example2_sigma", "0");
        for p in s.random_points(20, 1) {
            let form = example2_closed_form(&s, &p, Extension::Homogeneous).unwrap();
            let g = metric_frame(&s.evaluate(&p).unwrap()).unwrap().g;
            for i in 0..2 {
                for j in 0..2 {
                    assert!((form[i][j] - 0.5 * g[i][j]).abs() < 1e-12);
                }
            }
        }
        // sigma = log r - log <u, psi>: form = g_sigma / (2 r^2)
        let r = 1.7;
        let s = round_sphere(crate::invariants::default_probe_u(), r).unwrap();
        for p in s.random_points(20, 2) {
            let form = example2_closed_form(&s, &p, Extension::Homogeneous).unwrap();
            let g = metric_frame(&s.evaluate(&p).unwrap()).unwrap().g;
            for i in 0..2 {
                for j in 0..2 {
                    assert!((form[i][j] - g[i][j] / (2.0 * r * r)).abs() < 1e-10 * (1.0 + g[i][j].abs()));
                }
            }
        }
    }

    #[test]
    fn example2_matches_pipeline_for_both_extensions() {
        let sigmas = [
            "0.3 * x * y - 0.2 * z^2 + 0.1 * x",
            "0.5 * x^3 - y * z + 0.2",
            "log(2 + x) - 0.3 * y^2 * z",
        ];
        for src in sigmas {
            let s = user("example2_sigma", src);
            for p in s.random_points(50, 3) {
                let sd = geometry_frame(&s, &p, &FrameOptions::default()).unwrap().shape.unwrap();
                let hom = example2_closed_form(&s, &p, Extension::Homogeneous).unwrap();
                let raw = example2_closed_form(&s, &p, Extension::AsWritten).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        let scale = 1.0 + sd.ii_eta[i][j].abs();
                        assert!((hom[i][j] - sd.ii_eta[i][j]).abs() <= 1e-6 * scale, "{src}");
                        assert!((raw[i][j] - hom[i][j]).abs() <= 1e-9 * scale, "{src}");
                    }
                }
            }
        }
    }

    #[test]
    fn conformal_curvature_examples() {
        let s = user("example2_sigma", "0");
        let p = ChartPoint::from_unit([0.0, 0.6, 0.8]);
        assert!((conformal_curvature(1.0, &s, &p).unwrap() - 1.0).abs() < 1e-14);
        let s = user("example2_sigma", "log(3)");
        assert!((conformal_curvature(1.0, &s, &p).unwrap() - 1.0 / 9.0).abs() < 1e-14);
        for a in [1.0, 2.0] {
            let s = with_a("example1_csch_x", a);
            for p in s.random_points(20, 5) {
                assert!((conformal_curvature(0.0, &s, &p).unwrap() + 1.0 / (a * a)).abs() < 1e-9);
            }
        }
        let s = user("example2_sigma", "0.4 * x * z - 0.3 * y");
        for p in s.random_points(30, 6) {
            let k = geometry_frame(&s, &p, &FrameOptions::default()).unwrap().k();
            assert!((conformal_curvature(1.0, &s, &p).unwrap() - k).abs() < 1e-9 * (1.0 + k.abs()));
        }
    }

    #[test]
    fn wrong_base_is_rejected() {
        let s = round_sphere(Vec4::new(-1.0, 0.0, 0.0, 0.0), 1.0).unwrap();
        assert!(example1_closed_forms(&s, &ChartPoint::from_unit([0.0, 0.0, 1.0])).is_err());
        let s = with_a("example1_sech_x", 1.0);
        assert!(example2_closed_form(&s, &ChartPoint::plane(0.0, 0.0), Extension::Homogeneous).is_err());
    }
}
