//! Compact (sphere-domain) surfaces: icosphere meshes pushed through the
//! immersion, quadrature of curvature fields, the first Laplace eigenvalue
//! and the integral and eigenvalue inequalities.

pub mod mesh;
pub mod spectrum;
pub mod suites;

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::{
    gauss_equation_k, mean_curvature_vector, metric_frame, normal_frame, second_fundamental_form, shape_data,
    KMethod,
};
use crate::jets::{Jet2, Scalar};
use crate::minkowski::{inner, is_unit_past_timelike, Vec4, DEFAULT_LIGHTCONE_TOL};
use crate::surfaces::{ChartPoint, Surface};
pub use mesh::{build_icosphere, pairwise_sum, SphereMesh, MAX_LEVEL};
pub use spectrum::{first_eigenvalue, SpectrumOptions, SpectrumResult};
pub use suites::{
    integral_identity_suite, inequality_suite, local_extrema_scan, local_extrema_scan_with, IntegralSuite,
    InequalitySuite, LocalExtremaReport, INTEGRAL_TOL, SLACK_TOL,
};

/// Default mesh level.
pub const DEFAULT_LEVEL: u32 = 5;

/// Vertex fields filled by [`embed`], in export column order.
pub const FIELDS: [&str; 5] = ["K", "H_sq", "psi0", "psi_u", "inv_psi_u_sq"];

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddedMesh {
    pub base: SphereMesh,
    pub surface: String,
    /// Every vertex passed the lightcone test.
    pub lightcone: bool,
    pub u: Vec4,
    pub positions: Vec<Vec4>,
    /// Minkowski chordal length per edge.
    pub edge_len: Vec<f64>,
    pub tri_area: Vec<f64>,
    pub vertex_mass: Vec<f64>,
    pub vertex_fields: BTreeMap<String, Vec<f64>>,
}

impl EmbeddedMesh {
    pub fn area(&self) -> f64 {
        pairwise_sum(&self.tri_area)
    }

    pub fn field(&self, name: &str) -> Result<&[f64]> {
        self.vertex_fields
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownField(name.to_string()))
    }

    /// Edge lengths `(a, b, c)` opposite the corners of triangle `t`.
    pub fn tri_lengths(&self, t: usize) -> [f64; 3] {
        self.base.tri_edges[t].map(|e| self.edge_len[e])
    }

    /// OFF-style export: `nOFF` with dimension 4, one row per vertex holding the
    /// `L^4` position followed by the [`FIELDS`] columns, then the triangles.
    pub fn write_off(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "nOFF")?;
        writeln!(out, "# surface {} level {} u {:?}", self.surface, self.base.level, self.u.0)?;
        writeln!(out, "# columns: x0 x1 x2 x3 {}", FIELDS.join(" "))?;
        writeln!(out, "4")?;
        writeln!(out, "{} {} {}", self.positions.len(), self.base.triangles.len(), self.base.edges.len())?;
        for (v, p) in self.positions.iter().enumerate() {
            let mut row: Vec<String> = p.0.iter().map(|c| format!("{c:.17e}")).collect();
            for f in FIELDS {
                row.push(format!("{:.17e}", self.vertex_fields[f][v]));
            }
            writeln!(out, "{}", row.join(" "))?;
        }
        for &[a, b, c] in &self.base.triangles {
            writeln!(out, "3 {a} {b} {c}")?;
        }
        Ok(())
    }
}

/// Area of a triangle from its side lengths (Heron, in the cancellation-safe
/// ordering `a >= b >= c`); `None` unless the triangle inequality is strict.
pub fn heron(lengths: [f64; 3]) -> Option<f64> {
    let mut l = lengths;
    l.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = l;
    if !(c > 0.0 && a < b + c) {
        return None;
    }
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    (p > 0.0).then(|| 0.25 * p.sqrt())
}

struct VertexData {
    position: Vec4,
    k: f64,
    h_sq: f64,
    lightcone: bool,
}

fn vertex_data(surface: &Surface, v: [f64; 3]) -> Result<VertexData> {
    let jet = surface.evaluate(&ChartPoint::from_unit(v))?;
    let mf = metric_frame(&jet)?;
    let frame = if surface.flags.claims_lightcone {
        normal_frame(&jet, &mf, DEFAULT_LIGHTCONE_TOL)
    } else {
        Err(Error::NotOnLightcone { inner: jet.position().norm_sq(), psi0: jet.position()[0] })
    };
    Ok(match frame {
        Ok(nf) => {
            let sd = shape_data(&jet, &mf, &nf);
            VertexData { position: jet.position(), k: sd.k_by[&KMethod::Extrinsic], h_sq: sd.h_sq, lightcone: true }
        }
        Err(Error::NotOnLightcone { .. }) => {
            let ii = second_fundamental_form(&jet, &mf);
            VertexData {
                position: jet.position(),
                k: gauss_equation_k(&ii, &mf),
                h_sq: mean_curvature_vector(&ii, &mf).norm_sq(),
                lightcone: false,
            }
        }
        Err(e) => return Err(e),
    })
}

/// Pushes `mesh` through a compact surface and fills the vertex fields.
pub fn embed(surface: &Surface, mesh: &SphereMesh, u: Vec4) -> Result<EmbeddedMesh> {
    if !surface.flags.compact || !surface.domain.is_sphere() {
        return Err(Error::NotCompact(surface.name.clone()));
    }
    if !is_unit_past_timelike(&u, 1e-9) {
        return Err(Error::BadParameter(format!("u = {:?} must satisfy <u,u> = -1 and u0 < 0", u.0)));
    }
    let data: Vec<VertexData> = mesh
        .vertices
        .par_iter()
        .map(|v| vertex_data(surface, *v))
        .collect::<Result<_>>()?;
    let positions: Vec<Vec4> = data.iter().map(|d| d.position).collect();

    let mut edge_len = Vec::with_capacity(mesh.edges.len());
    for (e, &[a, b]) in mesh.edges.iter().enumerate() {
        let len_sq = (positions[a] - positions[b]).norm_sq();
        if !(len_sq > 0.0) {
            return Err(Error::NonSpacelikeChord { edge: e, len_sq });
        }
        edge_len.push(len_sq.sqrt());
    }
    let mut tri_area = Vec::with_capacity(mesh.triangles.len());
    for (t, te) in mesh.tri_edges.iter().enumerate() {
        tri_area.push(heron(te.map(|e| edge_len[e])).ok_or(Error::DegenerateTriangle { tri: t })?);
    }
    // one third of each incident triangle, accumulated per vertex in triangle order
    let mut incident: Vec<Vec<f64>> = vec![Vec::new(); mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            incident[v].push(tri_area[t] / 3.0);
        }
    }
    let vertex_mass = incident.iter().map(|a| pairwise_sum(a)).collect();

    let psi_u: Vec<f64> = positions.iter().map(|p| inner(p, &u)).collect();
    let fields = BTreeMap::from([
        ("K".to_string(), data.iter().map(|d| d.k).collect()),
        ("H_sq".to_string(), data.iter().map(|d| d.h_sq).collect()),
        ("psi0".to_string(), positions.iter().map(|p| p[0]).collect()),
        ("inv_psi_u_sq".to_string(), psi_u.iter().map(|f| 1.0 / (f * f)).collect()),
        ("psi_u".to_string(), psi_u),
    ]);
    Ok(EmbeddedMesh {
        base: mesh.clone(),
        surface: surface.name.clone(),
        lightcone: data.iter().all(|d| d.lightcone),
        u,
        positions,
        edge_len,
        tri_area,
        vertex_mass,
        vertex_fields: fields,
    })
}

/// `sum_v mass(v) field(v)`, pairwise summed.
pub fn integrate(em: &EmbeddedMesh, field: &str) -> Result<f64> {
    let f = em.field(field)?;
    let terms: Vec<f64> = em.vertex_mass.iter().zip(f).map(|(m, x)| m * x).collect();
    Ok(pairwise_sum(&terms))
}

/// What [`chart_quadrature`] integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureField {
    Area,
    HSq,
    K,
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, four points.
fn gauss_legendre_01() -> [(f64, f64); 4] {
    let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let wa = (18.0 + 30f64.sqrt()) / 36.0;
    let wb = (18.0 - 30f64.sqrt()) / 36.0;
    [(-b, wb), (-a, wa), (a, wa), (b, wb)].map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
}

/// Integral over the surface by quadrature in each mesh triangle, the flat
/// triangle mapped radially onto the sphere and then through the immersion.
/// Independent of edge lengths and lumped masses.
pub fn chart_quadrature(surface: &Surface, mesh: &SphereMesh, field: QuadratureField) -> Result<f64> {
    let gl = gauss_legendre_01();
    let per_tri: Vec<f64> = mesh
        .triangles
        .par_iter()
        .map(|&[a, b, c]| -> Result<f64> {
            let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
            let mut acc = 0.0;
            for &(x, wx) in &gl {
                for &(y, wy) in &gl {
                    // collapsed square: alpha = x, beta = (1 - x) y, Jacobian (1 - x)
                    let (al, be) = (Jet2::variable(0, x), Jet2::variable(1, y));
                    let beta = (Jet2::constant(1.0) - al) * be;
                    let q: [Jet2; 3] =
                        std::array::from_fn(|i| al * (pb[i] - pa[i]) + beta * (pc[i] - pa[i]) + pa[i]);
                    let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt()?.recip()?;
                    let p = q.map(|qi| qi * r);
                    let jet = surface.evaluate_vars(&p)?;
                    let mf = metric_frame(&jet)?;
                    let f = match field {
                        QuadratureField::Area => 1.0,
                        QuadratureField::HSq | QuadratureField::K => {
                            let ii = second_fundamental_form(&jet, &mf);
                            if field == QuadratureField::K {
                                gauss_equation_k(&ii, &mf)
                            } else {
                                mean_curvature_vector(&ii, &mf).norm_sq()
                            }
                        }
                    };
                    acc += wx * wy * f * mf.detg.sqrt();
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&per_tri))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{instantiate, parse_sigma, round_sphere};
    use std::f64::consts::PI;

    const U0: Vec4 = Vec4([-1.0, 0.0, 0.0, 0.0]);

    fn named(name: &str, sigma: Option<&str>) -> Surface {
        let s = sigma.map(|s| parse_sigma(s).unwrap());
        instantiate(name, &BTreeMap::new(), s.as_ref()).unwrap()
    }

    #[test]
    fn heron_examples() {
        assert!((heron([3.0, 4.0, 5.0]).unwrap() - 6.0).abs() < 1e-15);
        assert!((heron([1.0, 1.0, 1.0]).unwrap() - 3f64.sqrt() / 4.0).abs() < 1e-15);
        assert_eq!(heron([1.0, 2.0, 3.0]), None);
        assert_eq!(heron([1.0, 1.0, 3.0]), None);
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_seven() {
        let gl = gauss_legendre_01();
        let s: f64 = gl.iter().map(|(x, w)| w * x.powi(7)).sum();
        assert!((s - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn round_sphere_area_converges() {
        let s = round_sphere(U0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for level in 3..=5 {
            let em = embed(&s, &build_icosphere(level).unwrap(), U0).unwrap();
            let err = (em.area() - 4.0 * PI).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev / (4.0 * PI) <= 2e-3, "{prev}");
    }

    #[test]
    fn mass_sums_to_area() {
        let s = named("example2_sigma", Some("0.3 * x"));
        let em = embed(&s, &build_icosphere(3).unwrap(), U0).unwrap();
        let m = pairwise_sum(&em.vertex_mass);
        assert!((m - em.area()).abs() <= 1e-12 * m);
        assert!(em.lightcone);
    }

    #[test]
    fn same_surface_same_edges() {
        let mesh = build_icosphere(3).unwrap();
        let a = embed(&named("example2_sigma", Some("0")), &mesh, U0).unwrap();
        let b = embed(&round_sphere(U0, 1.0).unwrap(), &mesh, U0).unwrap();
        for (x, y) in a.edge_len.iter().zip(&b.edge_len) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_fields() {
        let s = named("counterexample_cylinder", None);
        let em = embed(&s, &build_icosphere(3).unwrap(), U0).unwrap();
        assert!(!em.lightcone);
        let h = em.field("H_sq").unwrap();
        for (v, p) in em.base.vertices.iter().enumerate() {
            let x = p[0];
            assert!((h[v] - (1.0 - 0.25 * (x * x - 1.0).powi(2))).abs() < 1e-10);
            assert!((em.field("K").unwrap()[v] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn errors() {
        let mesh = build_icosphere(1).unwrap();
        let plane = named("example1_base", None);
        assert!(matches!(embed(&plane, &mesh, U0), Err(Error::NotCompact(_))));
        let s = round_sphere(U0, 1.0).unwrap();
        assert!(matches!(embed(&s, &mesh, Vec4::new(1.0, 0.0, 0.0, 0.0)), Err(Error::BadParameter(_))));
        let em = embed(&s, &mesh, U0).unwrap();
        assert!(matches!(integrate(&em, "nope"), Err(Error::UnknownField(_))));
    }

    #[test]
    fn chart_quadrature_oracle() {
        // unit round sphere: area 4 pi even on a coarse mesh (exact radial map)
        let s = round_sphere(U0, 1.0).unwrap();
        let area = chart_quadrature(&s, &build_icosphere(2).unwrap(), QuadratureField::Area).unwrap();
        assert!((area - 4.0 * PI).abs() < 1e-6, "{area}");
        // brute-force check of the cylinder moment: int (1 - (x^2 - 1)^2 / 4) = 52 pi / 15
        let c = named("counterexample_cylinder", None);
        let h = chart_quadrature(&c, &build_icosphere(3).unwrap(), QuadratureField::HSq).unwrap();
        assert!((h - 52.0 * PI / 15.0).abs() < 1e-6, "{h}");
        // Heron areas agree with the oracle at level 4
        let s = named("example2_sigma", Some("0.4 * x * y - 0.2 * z"));
        let mesh = build_icosphere(4).unwrap();
        let em = embed(&s, &mesh, U0).unwrap();
        let oracle = chart_quadrature(&s, &mesh, QuadratureField::Area).unwrap();
        assert!((em.area() - oracle).abs() <= 0.01 * oracle);
    }

    #[test]
    fn off_export_layout() {
        let s = round_sphere(U0, 2.0).unwrap();
        let em = embed(&s, &build_icosphere(0).unwrap(), U0).unwrap();
        let mut buf = Vec::new();
        em.write_off(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "nOFF");
        assert!(lines[2].starts_with("# columns: x0 x1 x2 x3 K H_sq"));
        assert_eq!(lines[4], "12 20 30");
        assert_eq!(lines[5].split_whitespace().count(), 4 + FIELDS.len());
        assert_eq!(lines.len(), 5 + 12 + 20);
    }
}
