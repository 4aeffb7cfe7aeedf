//! Spacelike surfaces: chart domains, the example catalog and conformal
//! rescalings `psi_sigma = e^sigma psi`.

pub mod definition;
pub mod expr;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::{ImmersionJet, Jet2, Jet3, Scalar};
use crate::minkowski::{is_unit_past_timelike, Vec4};
pub use expr::{parse, parse_with, BoundExpr, Expr};

/// `rho^2 = s^2 + t^2` bound of a stereographic chart; `|z| <= 0.75` on the
/// far side of the hemisphere boundary.
pub const STEREO_RHO_SQ_MAX: f64 = 7.0;
/// Half-width used for plane directions without a finite bound.
pub const UNBOUNDED_SAMPLE_HALF_WIDTH: f64 = 2.0;
/// Sample boxes stay this far inside finite chart bounds.
pub const SAMPLE_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartDomain {
    /// Open rectangle in `(x, y)`; bounds may be infinite.
    Rectangle { x: (f64, f64), y: (f64, f64) },
    /// The unit sphere covered by two stereographic charts.
    SphereAtlas,
}

impl ChartDomain {
    pub const PLANE: ChartDomain = ChartDomain::Rectangle {
        x: (f64::NEG_INFINITY, f64::INFINITY),
        y: (f64::NEG_INFINITY, f64::INFINITY),
    };

    pub fn is_sphere(&self) -> bool {
        matches!(self, ChartDomain::SphereAtlas)
    }

    /// Finite box used for grid and random sampling of a rectangle.
    pub fn sample_box(&self) -> Option<[(f64, f64); 2]> {
        match *self {
            ChartDomain::Rectangle { x, y } => Some([clamp_range(x), clamp_range(y)]),
            ChartDomain::SphereAtlas => None,
        }
    }

    pub fn contains(&self, p: &ChartPoint) -> bool {
        match (self, p.chart) {
            (ChartDomain::Rectangle { x, y }, Chart::Plane) => {
                p.s > x.0 && p.s < x.1 && p.t > y.0 && p.t < y.1
            }
            (ChartDomain::SphereAtlas, Chart::Upper | Chart::Lower) => {
                p.s * p.s + p.t * p.t <= STEREO_RHO_SQ_MAX
            }
            _ => false,
        }
    }
}

fn clamp_range((lo, hi): (f64, f64)) -> (f64, f64) {
    let lo = if lo.is_finite() { lo + SAMPLE_MARGIN } else { -UNBOUNDED_SAMPLE_HALF_WIDTH };
    let hi = if hi.is_finite() { hi - SAMPLE_MARGIN } else { UNBOUNDED_SAMPLE_HALF_WIDTH };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Plane,
    /// Stereographic chart centred at the north pole (projection from the south pole).
    Upper,
    /// Stereographic chart centred at the south pole (projection from the north pole).
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartPoint {
    pub chart: Chart,
    pub s: f64,
    pub t: f64,
}

impl ChartPoint {
    pub fn plane(x: f64, y: f64) -> Self {
        ChartPoint { chart: Chart::Plane, s: x, t: y }
    }

    pub fn with_params(&self, s: f64, t: f64) -> Self {
        ChartPoint { chart: self.chart, s, t }
    }

    /// Chart point for a unit vector, choosing the chart by the sign of `z`.
    pub fn from_unit(v: [f64; 3]) -> Self {
        let [x, y, z] = v;
        if z >= 0.0 {
            ChartPoint { chart: Chart::Upper, s: x / (1.0 + z), t: y / (1.0 + z) }
        } else {
            ChartPoint { chart: Chart::Lower, s: x / (1.0 - z), t: y / (1.0 - z) }
        }
    }

    /// The same sphere point expressed in the other stereographic chart.
    pub fn other_chart(&self) -> Option<Self> {
        let rho_sq = self.s * self.s + self.t * self.t;
        let chart = match self.chart {
            Chart::Upper => Chart::Lower,
            Chart::Lower => Chart::Upper,
            Chart::Plane => return None,
        };
        // inversion in the unit circle
        Some(ChartPoint { chart, s: self.s / rho_sq, t: self.t / rho_sq })
    }

    /// The unit vector of a sphere chart point.
    pub fn unit_vector(&self) -> Option<[f64; 3]> {
        let [x, y, z] = sphere_jets::<Jet2>(self.chart, self.s, self.t)?;
        Some([x.value, y.value, z.value])
    }
}

/// `(x, y, z)` on the unit sphere as jets of the chart parameters.
pub fn sphere_jets<T: Scalar>(chart: Chart, s: f64, t: f64) -> Option<[T; 3]> {
    let (js, jt) = (T::variable(0, s), T::variable(1, t));
    let rho_sq = js * js + jt * jt;
    let denom = (rho_sq + 1.0).recip().expect("1 + rho^2 > 0");
    let x = js * denom * 2.0;
    let y = jt * denom * 2.0;
    let z = match chart {
        Chart::Upper => (T::constant(1.0) - rho_sq) * denom,
        Chart::Lower => (rho_sq - 1.0) * denom,
        Chart::Plane => return None,
    };
    Some([x, y, z])
}

/// The immersion a surface is built on, before conformal rescaling.
#[derive(Debug, Clone, PartialEq)]
pub enum Base {
    /// `(cosh x, sinh x, cos y, sin y)` on the plane.
    Example1,
    /// `(1, x, y, z)` on the unit sphere.
    UnitSphere,
    /// `(cosh x, sinh x, y, z)` on the unit sphere; not in the lightcone.
    Cylinder,
    /// Four coordinate expressions in the chart variables.
    Custom(Box<[BoundExpr; 4]>),
}

impl Base {
    fn eval<T: Scalar>(&self, vars: &[T]) -> Result<[T; 4]> {
        Ok(match self {
            Base::Example1 => [vars[0].cosh(), vars[0].sinh(), vars[1].cos(), vars[1].sin()],
            Base::UnitSphere => [T::constant(1.0), vars[0], vars[1], vars[2]],
            Base::Cylinder => [vars[0].cosh(), vars[0].sinh(), vars[1], vars[2]],
            Base::Custom(c) => [c[0].eval(vars)?, c[1].eval(vars)?, c[2].eval(vars)?, c[3].eval(vars)?],
        })
    }
}

/// A parsed conformal factor `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactor {
    pub expr: Expr,
}

impl ConformalFactor {
    pub fn canonical(&self) -> String {
        self.expr.to_string()
    }
}

/// Parses a conformal factor `sigma` (so the rescaling is `e^sigma`).
pub fn parse_sigma(source: &str) -> Result<ConformalFactor> {
    Ok(ConformalFactor { expr: parse(source)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SurfaceFlags {
    pub claims_lightcone: bool,
    pub compact: bool,
}

/// Values the catalog expects; `None` means no claim.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Expected {
    pub k: Option<f64>,
    /// K constant over the surface without a claimed value.
    pub constant_k: bool,
    pub umbilical: Option<bool>,
    /// Expected value of the integral of `<H,H>` over a compact surface.
    pub h_sq_integral: Option<f64>,
    /// The surface is expected to violate `lambda1 <= 2 int<H,H> / area`.
    pub reilly_violation: bool,
}

#[derive(Debug, Clone)]
pub struct Surface {
    pub name: String,
    pub domain: ChartDomain,
    pub base: Base,
    /// Bound sigma together with its canonical source text.
    pub sigma: Option<(BoundExpr, String)>,
    pub params: BTreeMap<String, f64>,
    pub flags: SurfaceFlags,
    pub expected: Expected,
}

impl Surface {
    pub fn variables(&self) -> &'static [&'static str] {
        if self.domain.is_sphere() {
            &["x", "y", "z"]
        } else {
            &["x", "y"]
        }
    }

    fn check(&self, p: &ChartPoint) -> Result<()> {
        if self.domain.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideChart { surface: self.name.clone(), s: p.s, t: p.t })
        }
    }

    /// Chart-variable jets `(x, y)` or `(x, y, z)` at `p`.
    pub fn variable_jets(&self, p: &ChartPoint) -> Result<Vec<Jet2>> {
        self.chart_variables(p)
    }

    fn chart_variables<T: Scalar>(&self, p: &ChartPoint) -> Result<Vec<T>> {
        self.check(p)?;
        Ok(match p.chart {
            Chart::Plane => vec![T::variable(0, p.s), T::variable(1, p.t)],
            c => sphere_jets(c, p.s, p.t).expect("sphere chart").to_vec(),
        })
    }

    /// Coordinates of `psi_sigma` with derivatives up to third order.
    pub fn evaluate3(&self, p: &ChartPoint) -> Result<[Jet3<2>; 4]> {
        let vars: Vec<Jet3<2>> = self.chart_variables(p)?;
        let base = self.base.eval(&vars)?;
        let coords = match &self.sigma {
            Some((sigma, _)) => {
                let f = sigma.eval(&vars)?.exp();
                base.map(|c| c * f)
            }
            None => base,
        };
        match coords.iter().find(|c| !c.is_finite()) {
            Some(c) => Err(Error::Domain { func: "immersion", arg: c.value }),
            None => Ok(coords),
        }
    }

    /// Coordinates of `psi_sigma` and their first and second derivatives.
    pub fn evaluate(&self, p: &ChartPoint) -> Result<ImmersionJet> {
        let vars = self.variable_jets(p)?;
        self.evaluate_vars(&vars)
    }

    /// Evaluates with arbitrary jets for the chart variables, e.g. a sphere
    /// parametrized over a mesh triangle.
    pub fn evaluate_vars(&self, vars: &[Jet2]) -> Result<ImmersionJet> {
        let base = ImmersionJet::new(self.base.eval(vars)?);
        match &self.sigma {
            Some((sigma, _)) => Ok(base.scaled_by(&sigma.eval(vars)?.exp())),
            None => Ok(base),
        }
    }

    /// The immersion without the conformal factor.
    pub fn base_jet(&self, p: &ChartPoint) -> Result<ImmersionJet> {
        let vars = self.variable_jets(p)?;
        Ok(ImmersionJet::new(self.base.eval(&vars)?))
    }

    /// Jet of sigma in chart parameters (zero when there is no factor).
    pub fn sigma_jet(&self, p: &ChartPoint) -> Result<Jet2> {
        let vars = self.variable_jets(p)?;
        match &self.sigma {
            Some((sigma, _)) => sigma.eval(&vars),
            None => Ok(Jet2::constant(0.0)),
        }
    }

    /// Position of the surface over a unit vector of the sphere.
    pub fn position_at_unit(&self, v: [f64; 3]) -> Result<Vec4> {
        Ok(self.evaluate(&ChartPoint::from_unit(v))?.position())
    }

    pub fn sigma_source(&self) -> Option<&str> {
        self.sigma.as_ref().map(|(_, s)| s.as_str())
    }

    /// Seeded uniform sample of admissible points.
    pub fn random_points(&self, n: usize, seed: u64) -> Vec<ChartPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self.domain.sample_box() {
            Some([(x0, x1), (y0, y1)]) => (0..n)
                .map(|_| ChartPoint::plane(rng.random_range(x0..=x1), rng.random_range(y0..=y1)))
                .collect(),
            None => (0..n)
                .map(|_| {
                    let z: f64 = rng.random_range(-1.0..=1.0);
                    let phi: f64 = rng.random_range(0.0..2.0 * PI);
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    ChartPoint::from_unit([r * phi.cos(), r * phi.sin(), z])
                })
                .collect(),
        }
    }

    /// Regular `w x h` grid: the sample box for rectangles, a latitude-longitude
    /// grid (cell centres in latitude) for the sphere.
    pub fn grid_points(&self, w: usize, h: usize) -> Vec<ChartPoint> {
        let lin = |lo: f64, hi: f64, n: usize, i: usize| {
            if n == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(w * h);
        match self.domain.sample_box() {
            Some([(x0, x1), (y0, y1)]) => {
                for j in 0..h {
                    for i in 0..w {
                        out.push(ChartPoint::plane(lin(x0, x1, w, i), lin(y0, y1, h, j)));
                    }
                }
            }
            None => {
                for j in 0..h {
                    let theta = PI * (j as f64 + 0.5) / h as f64;
                    for i in 0..w {
                        let phi = 2.0 * PI * i as f64 / w as f64;
                        let v = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                        out.push(ChartPoint::from_unit(v));
                    }
                }
            }
        }
        out
    }
}

/// Static description of a catalog surface.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub domain: ChartDomain,
    #[serde(skip)]
    pub base: Base,
    /// Fixed conformal factor (table entries).
    pub sigma: Option<&'static str>,
    /// Accepts a user-supplied sigma.
    pub takes_sigma: bool,
    pub claims_lightcone: bool,
    pub compact: bool,
    /// Expected K as an expression in the parameters.
    pub expected_k: Option<&'static str>,
    pub constant_k: bool,
    pub umbilical: Option<bool>,
    pub h_sq_integral: Option<&'static str>,
    pub reilly_violation: bool,
    /// Parameters the entry reads, with defaults.
    pub params: &'static [(&'static str, f64)],
}

const A_PARAM: &[(&str, f64)] = &[("a", 1.0)];
const SPHERE_PARAMS: &[(&str, f64)] = &[("r", 1.0), ("u0", -1.0), ("u1", 0.0), ("u2", 0.0), ("u3", 0.0)];
const MARGIN: f64 = 0.05;

fn x_range(lo: f64, hi: f64) -> ChartDomain {
    ChartDomain::Rectangle { x: (lo, hi), y: (f64::NEG_INFINITY, f64::INFINITY) }
}

fn y_range(lo: f64, hi: f64) -> ChartDomain {
    ChartDomain::Rectangle { x: (f64::NEG_INFINITY, f64::INFINITY), y: (lo, hi) }
}

struct TableRow {
    sigma: &'static str,
    swapped_sigma: &'static str,
    k: &'static str,
    /// finite bound of the singular variable, if any
    bound: Option<(f64, f64)>,
    on_x: bool,
}

const TABLE: &[TableRow] = &[
    TableRow { sigma: "x", swapped_sigma: "y", k: "0", bound: None, on_x: true },
    TableRow {
        sigma: "log(a * sech(x))",
        swapped_sigma: "log(a * sech(y))",
        k: "1 / a^2",
        bound: None,
        on_x: true,
    },
    TableRow {
        sigma: "log(a * csch(x))",
        swapped_sigma: "log(a * csch(y))",
        k: "-1 / a^2",
        bound: Some((MARGIN, f64::INFINITY)),
        on_x: true,
    },
    TableRow {
        sigma: "x - log(exp(2 * x) - 1)",
        swapped_sigma: "y - log(exp(2 * y) - 1)",
        k: "-4",
        bound: Some((MARGIN, f64::INFINITY)),
        on_x: true,
    },
    TableRow {
        sigma: "log(a * sec(y))",
        swapped_sigma: "log(a * sec(x))",
        k: "-1 / a^2",
        bound: Some((-FRAC_PI_2 + MARGIN, FRAC_PI_2 - MARGIN)),
        on_x: false,
    },
    TableRow {
        sigma: "log(a * csc(y))",
        swapped_sigma: "log(a * csc(x))",
        k: "-1 / a^2",
        bound: Some((MARGIN, PI - MARGIN)),
        on_x: false,
    },
];

/// Names of the six solution-table surfaces, in table order.
pub const TABLE_SURFACES: [&str; 6] = [
    "example1_exp_x",
    "example1_sech_x",
    "example1_csch_x",
    "example1_half_csch_x",
    "example1_sec_y",
    "example1_csc_y",
];

/// Their `x <-> y` swaps.
pub const SWAPPED_SURFACES: [&str; 6] = [
    "example1_exp_y",
    "example1_sech_y",
    "example1_csch_y",
    "example1_half_csch_y",
    "example1_sec_x",
    "example1_csc_x",
];

/// All catalog surfaces.
pub fn catalog() -> Vec<CatalogEntry> {
    let mut out = vec![
        CatalogEntry {
            name: "example1_base",
            summary: "(cosh x, sinh x, cos y, sin y): flat, marginally trapped",
            domain: ChartDomain::PLANE,
            base: Base::Example1,
            sigma: None,
            takes_sigma: false,
            claims_lightcone: true,
            compact: false,
            expected_k: Some("0"),
            constant_k: true,
            umbilical: Some(false),
            h_sq_integral: None,
            reilly_violation: false,
            params: &[],
        },
        CatalogEntry {
            name: "example1_sigma",
            summary: "e^sigma (cosh x, sinh x, cos y, sin y) for a user sigma(x, y)",
            domain: ChartDomain::PLANE,
            base: Base::Example1,
            sigma: None,
            takes_sigma: true,
            claims_lightcone: true,
            compact: false,
            expected_k: None,
            constant_k: false,
            umbilical: None,
            h_sq_integral: None,
            reilly_violation: false,
            params: A_PARAM,
        },
    ];
    for (i, row) in TABLE.iter().enumerate() {
        let bounded = |on_x: bool| match row.bound {
            Some((lo, hi)) if on_x => x_range(lo, hi),
            Some((lo, hi)) => y_range(lo, hi),
            None => ChartDomain::PLANE,
        };
        out.push(CatalogEntry {
            name: TABLE_SURFACES[i],
            summary: "solution of the umbilicity system",
            domain: bounded(row.on_x),
            base: Base::Example1,
            sigma: Some(row.sigma),
            takes_sigma: false,
            claims_lightcone: true,
            compact: false,
            expected_k: Some(row.k),
            constant_k: true,
            umbilical: Some(true),
            h_sq_integral: None,
            reilly_violation: false,
            params: A_PARAM,
        });
        out.push(CatalogEntry {
            name: SWAPPED_SURFACES[i],
            summary: "x <-> y swap of a table solution: constant K, not umbilical",
            domain: bounded(!row.on_x),
            base: Base::Example1,
            sigma: Some(row.swapped_sigma),
            takes_sigma: false,
            claims_lightcone: true,
            compact: false,
            expected_k: None,
            constant_k: true,
            umbilical: Some(false),
            h_sq_integral: None,
            reilly_violation: false,
            params: A_PARAM,
        });
    }
    out.extend([
        CatalogEntry {
            name: "example2_sigma",
            summary: "e^sigma (1, x, y, z) over the unit sphere for a user sigma(x, y, z)",
            domain: ChartDomain::SphereAtlas,
            base: Base::UnitSphere,
            sigma: None,
            takes_sigma: true,
            claims_lightcone: true,
            compact: true,
            expected_k: None,
            constant_k: false,
            umbilical: None,
            h_sq_integral: Some("4 * pi"),
            reilly_violation: false,
            params: A_PARAM,
        },
        CatalogEntry {
            name: "round_sphere",
            summary: "S^2(u, r) = lightcone cut by <u, x> = r; parameters r, u0..u3",
            domain: ChartDomain::SphereAtlas,
            base: Base::UnitSphere,
            sigma: None,
            takes_sigma: false,
            claims_lightcone: true,
            compact: true,
            expected_k: Some("1 / r^2"),
            constant_k: true,
            umbilical: Some(true),
            h_sq_integral: Some("4 * pi"),
            reilly_violation: false,
            params: SPHERE_PARAMS,
        },
        CatalogEntry {
            name: "counterexample_cylinder",
            summary: "(cosh x, sinh x, y, z) over the unit sphere: isometric, not in a lightcone",
            domain: ChartDomain::SphereAtlas,
            base: Base::Cylinder,
            sigma: None,
            takes_sigma: false,
            claims_lightcone: false,
            compact: true,
            expected_k: Some("1"),
            constant_k: true,
            umbilical: Some(false),
            h_sq_integral: Some("52 * pi / 15"),
            reilly_violation: true,
            params: &[],
        },
    ]);
    out
}

pub fn catalog_entry(name: &str) -> Result<CatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownSurface(name.to_string()))
}

fn const_expr(src: &str, params: &BTreeMap<String, f64>) -> Result<f64> {
    let names: Vec<&str> = params.keys().map(String::as_str).collect();
    parse_with(src, &names)?.bind(&[], params)?.eval_f64(&[])
}

/// Builds a catalog surface with parameters (defaults fill the gaps) and an
/// optional user sigma.
pub fn instantiate(
    name: &str,
    params: &BTreeMap<String, f64>,
    sigma: Option<&ConformalFactor>,
) -> Result<Surface> {
    let entry = catalog_entry(name)?;
    let mut merged: BTreeMap<String, f64> =
        entry.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    merged.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
    for (k, v) in &merged {
        if !v.is_finite() {
            return Err(Error::BadParameter(format!("{k} = {v} is not finite")));
        }
    }
    if sigma.is_some() && !entry.takes_sigma {
        return Err(Error::BadParameter(format!("surface `{name}` does not take a conformal factor")));
    }
    let variables: &[&str] = if entry.domain.is_sphere() { &["x", "y", "z"] } else { &["x", "y"] };

    let sigma_expr: Option<Expr> = if entry.name == "round_sphere" {
        Some(round_sphere_sigma(&merged)?)
    } else if let Some(src) = entry.sigma {
        Some(parse(src)?)
    } else {
        sigma.map(|s| s.expr.clone())
    };
    if entry.params.iter().any(|(k, _)| *k == "a") && merged["a"] <= 0.0 {
        return Err(Error::BadParameter(format!("a = {} must be positive", merged["a"])));
    }
    let sigma = match sigma_expr {
        Some(e) => {
            if let Some(bad) = e.identifiers().into_iter().find(|i| {
                expr::VARIABLES.contains(&i.as_str()) && !variables.contains(&i.as_str())
            }) {
                return Err(Error::BadParameter(format!(
                    "variable `{bad}` is not a chart variable of `{name}`"
                )));
            }
            Some((e.bind(variables, &merged)?, e.to_string()))
        }
        None => None,
    };

    let expected_k = entry.expected_k.map(|k| const_expr(k, &merged)).transpose()?;
    let h_sq_integral = entry.h_sq_integral.map(|k| const_expr(k, &merged)).transpose()?;
    // A bare example2 / example1 with sigma = 0 is the base surface.
    let sigma_is_zero = sigma.as_ref().is_none_or(|(b, _)| b.is_constant() && b.eval_f64(&vec![0.0; variables.len()]).ok() == Some(0.0));
    let (expected_k, umbilical, constant_k) = match entry.name {
        "example2_sigma" if sigma_is_zero => (Some(1.0), Some(true), true),
        "example1_sigma" if sigma_is_zero => (Some(0.0), Some(false), true),
        _ => (expected_k, entry.umbilical, entry.constant_k),
    };

    Ok(Surface {
        name: entry.name.to_string(),
        domain: entry.domain,
        base: entry.base,
        sigma,
        params: merged,
        flags: SurfaceFlags { claims_lightcone: entry.claims_lightcone, compact: entry.compact },
        expected: Expected {
            k: expected_k,
            constant_k,
            umbilical,
            h_sq_integral,
            reilly_violation: entry.reilly_violation,
        },
    })
}

/// `sigma = log r - log <u, (1, x, y, z)>`, which cuts the lightcone by `<u, .> = r`.
fn round_sphere_sigma(params: &BTreeMap<String, f64>) -> Result<Expr> {
    let r = params["r"];
    let u = Vec4::new(params["u0"], params["u1"], params["u2"], params["u3"]);
    if r <= 0.0 {
        return Err(Error::BadParameter(format!("r = {r} must be positive")));
    }
    if !is_unit_past_timelike(&u, 1e-9) {
        return Err(Error::BadParameter(format!(
            "u = {:?} must satisfy <u,u> = -1 and u0 < 0",
            u.0
        )));
    }
    use expr::{BinOp, Func};
    // <u, (1, x, y, z)> = -u0 + u1 x + u2 y + u3 z
    let mut lin = Expr::num(-u[0]);
    for (i, var) in ["x", "y", "z"].iter().enumerate() {
        let c = u[i + 1];
        if c != 0.0 {
            let term = Expr::bin(BinOp::Mul, Expr::num(c.abs()), Expr::ident(var));
            lin = Expr::bin(if c > 0.0 { BinOp::Add } else { BinOp::Sub }, lin, term);
        }
    }
    Ok(Expr::bin(
        BinOp::Sub,
        Expr::call(Func::Log, Expr::num(r)),
        Expr::call(Func::Log, lin),
    ))
}

/// Helper for the common `round_sphere(u, r)` instantiation.
pub fn round_sphere(u: Vec4, r: f64) -> Result<Surface> {
    let params: BTreeMap<String, f64> = [("r", r), ("u0", u[0]), ("u1", u[1]), ("u2", u[2]), ("u3", u[3])]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    instantiate("round_sphere", &params, None)
}

/// A surface given directly by four coordinate expressions over a rectangle.
pub fn from_coordinates(
    name: &str,
    coords: [&str; 4],
    domain: ChartDomain,
    params: &BTreeMap<String, f64>,
) -> Result<Surface> {
    let variables: &[&str] = if domain.is_sphere() { &["x", "y", "z"] } else { &["x", "y"] };
    let names: Vec<&str> = params.keys().map(String::as_str).collect();
    let mut bound = Vec::with_capacity(4);
    for c in coords {
        bound.push(parse_with(c, &names)?.bind(variables, params)?);
    }
    let bound: [BoundExpr; 4] = bound.try_into().expect("four coordinates");
    Ok(Surface {
        name: name.to_string(),
        domain,
        base: Base::Custom(Box::new(bound)),
        sigma: None,
        params: params.clone(),
        flags: SurfaceFlags { claims_lightcone: false, compact: domain.is_sphere() },
        expected: Expected::default(),
    })
}

/// Per-point outcome of [`validate_spacelike`].
#[derive(Debug, Clone, Serialize)]
pub struct SpacelikeSample {
    pub point: ChartPoint,
    pub detg: f64,
    pub g11: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpacelikeReport {
    pub pass: bool,
    pub min_detg: f64,
    pub samples: Vec<SpacelikeSample>,
}

/// Checks that the induced metric is positive definite at every sample.
pub fn validate_spacelike(surface: &Surface, points: &[ChartPoint], tol: f64) -> SpacelikeReport {
    let samples: Vec<SpacelikeSample> = points
        .iter()
        .map(|p| match surface.evaluate(p) {
            Ok(j) => SpacelikeSample {
                point: *p,
                detg: j.metric_det(),
                g11: j.d(0).norm_sq(),
                error: None,
            },
            Err(e) => SpacelikeSample {
                point: *p,
                detg: f64::NAN,
                g11: f64::NAN,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let pass = samples.iter().all(|s| s.detg > tol && s.g11 > 0.0);
    let min_detg = samples.iter().map(|s| s.detg).fold(f64::INFINITY, f64::min);
    SpacelikeReport { pass, min_detg, samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::{inner, on_future_lightcone, E0};

    fn no_params() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    fn a(v: f64) -> BTreeMap<String, f64> {
        [("a".to_string(), v)].into()
    }

    #[test]
    fn catalog_contents() {
        let cat = catalog();
        let base = cat.iter().find(|e| e.name == "example1_base").unwrap();
        assert_eq!(base.domain, ChartDomain::PLANE);
        assert!(base.claims_lightcone);
        let rs = round_sphere(Vec4::new(-1.0, 0.0, 0.0, 0.0), 2.0).unwrap();
        assert_eq!(rs.expected.k, Some(0.25));
        assert_eq!(rs.expected.umbilical, Some(true));
        let cyl = cat.iter().find(|e| e.name == "counterexample_cylinder").unwrap();
        assert!(!cyl.claims_lightcone);
        for n in TABLE_SURFACES.iter().chain(SWAPPED_SURFACES.iter()) {
            assert!(cat.iter().any(|e| e.name == *n), "{n}");
        }
        assert!(cat.iter().any(|e| e.name == "example2_sigma"));
    }

    #[test]
    fn third_order_evaluation() {
        let sigma = parse_sigma("0.3 * x * y - 0.2 * z").unwrap();
        let surfaces = [
            instantiate("example1_csc_x", &a(2.0), None).unwrap(),
            instantiate("example2_sigma", &no_params(), Some(&sigma)).unwrap(),
        ];
        let h = 1e-5;
        for s in &surfaces {
            for p in s.random_points(10, 11) {
                let j3 = s.evaluate3(&p).unwrap();
                let j2 = s.evaluate(&p).unwrap();
                for a in 0..4 {
                    let t = j3[a].truncate();
                    let c = j2.coords[a];
                    let tol = 1e-12 * (1.0 + c.value.abs());
                    assert!((t.value - c.value).abs() <= tol);
                    assert!((0..2).all(|i| (t.grad[i] - c.grad[i]).abs() <= 1e2 * tol));
                    assert!((0..2).all(|i| (0..2).all(|k| (t.hess[i][k] - c.hess[i][k]).abs() <= 1e4 * tol)));
                }
                // third derivatives against central differences of the exact Hessians
                for k in 0..2 {
                    let shift = |d: f64| if k == 0 { p.with_params(p.s + d, p.t) } else { p.with_params(p.s, p.t + d) };
                    let (up, down) = (s.evaluate(&shift(h)).unwrap(), s.evaluate(&shift(-h)).unwrap());
                    for a in 0..4 {
                        for i in 0..2 {
                            for j in 0..2 {
                                let fd = (up.coords[a].hess[i][j] - down.coords[a].hess[i][j]) / (2.0 * h);
                                let exact = j3[a].third[i][j][k];
                                assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "{fd} vs {exact}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn example1_base_jets_at_origin() {
        let s = instantiate("example1_base", &no_params(), None).unwrap();
        let j = s.evaluate(&ChartPoint::plane(0.0, 0.0)).unwrap();
        assert_eq!(j.position(), Vec4::new(1.0, 0.0, 1.0, 0.0));
        assert_eq!(j.d(0), Vec4::new(0.0, 1.0, 0.0, 0.0));
        assert_eq!(j.d(1), Vec4::new(0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn example1_inner_with_e0() {
        let s = instantiate("example1_base", &no_params(), None).unwrap();
        for p in s.random_points(20, 3) {
            let psi = s.evaluate(&p).unwrap().position();
            assert!((inner(&psi, &E0) + p.s.cosh()).abs() < 1e-12);
            assert!(on_future_lightcone(&psi, 1e-9));
        }
    }

    #[test]
    fn unit_sphere_psi0_is_constant() {
        let s = instantiate("example2_sigma", &no_params(), None).unwrap();
        let j = s.evaluate(&ChartPoint { chart: Chart::Upper, s: 0.0, t: 0.0 }).unwrap();
        assert_eq!(j.coords[0], Jet2::constant(1.0));
        assert_eq!(j.position(), Vec4::new(1.0, 0.0, 0.0, 1.0));
        let sigma0 = parse_sigma("0").unwrap();
        let s0 = instantiate("example2_sigma", &no_params(), Some(&sigma0)).unwrap();
        assert_eq!(s0.expected.k, Some(1.0));
        assert_eq!(s0.evaluate(&ChartPoint { chart: Chart::Lower, s: 0.3, t: -0.2 }).unwrap(),
                   s.evaluate(&ChartPoint { chart: Chart::Lower, s: 0.3, t: -0.2 }).unwrap());
    }

    #[test]
    fn round_sphere_height() {
        let s = round_sphere(Vec4::new(-1.0, 0.0, 0.0, 0.0), 2.0).unwrap();
        for p in s.random_points(50, 1) {
            let psi = s.evaluate(&p).unwrap().position();
            assert!((psi[0] - 2.0).abs() < 1e-14);
            assert!(on_future_lightcone(&psi, 1e-9));
        }
        let u = Vec4::new(-0.5f64.cosh(), 0.5f64.sinh(), 0.0, 0.0);
        let s = round_sphere(u, 1.5).unwrap();
        for p in s.random_points(50, 2) {
            let psi = s.evaluate(&p).unwrap().position();
            assert!((inner(&u, &psi) - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_parameters() {
        assert!(matches!(round_sphere(Vec4::new(-1.0, 0.0, 0.0, 0.0), -1.0), Err(Error::BadParameter(_))));
        assert!(matches!(round_sphere(Vec4::new(1.0, 0.0, 0.0, 0.0), 1.0), Err(Error::BadParameter(_))));
        assert!(matches!(round_sphere(Vec4::new(-2.0, 0.0, 0.0, 0.0), 1.0), Err(Error::BadParameter(_))));
        assert!(matches!(instantiate("nope", &no_params(), None), Err(Error::UnknownSurface(_))));
        let z = parse_sigma("z").unwrap();
        assert!(matches!(instantiate("example1_sigma", &no_params(), Some(&z)), Err(Error::BadParameter(_))));
        assert!(matches!(instantiate("example1_sech_x", &a(0.0), None), Err(Error::BadParameter(_))));
        assert!(matches!(instantiate("example1_sech_x", &no_params(), Some(&z)), Err(Error::BadParameter(_))));
    }

    #[test]
    fn table_expected_curvature() {
        let s = instantiate("example1_sech_x", &a(1.0), None).unwrap();
        assert_eq!(s.expected.k, Some(1.0));
        let s = instantiate("example1_csch_x", &a(2.0), None).unwrap();
        assert_eq!(s.expected.k, Some(-0.25));
        let s = instantiate("example1_half_csch_x", &a(2.0), None).unwrap();
        assert_eq!(s.expected.k, Some(-4.0));
        let s = instantiate("example1_sech_y", &a(2.0), None).unwrap();
        assert_eq!(s.expected.k, None);
        assert!(s.expected.constant_k);
    }

    #[test]
    fn outside_domain_is_an_error() {
        let s = instantiate("example1_csch_x", &a(1.0), None).unwrap();
        assert!(matches!(s.evaluate(&ChartPoint::plane(-0.5, 0.0)), Err(Error::OutsideChart { .. })));
        let s = instantiate("example2_sigma", &no_params(), None).unwrap();
        assert!(s.evaluate(&ChartPoint::plane(0.0, 0.0)).is_err());
        assert!(s.evaluate(&ChartPoint { chart: Chart::Upper, s: 3.0, t: 0.0 }).is_err());
    }

    #[test]
    fn chart_overlap_maps_to_same_point() {
        for v in [[0.6, 0.0, 0.8], [0.0, -0.6, -0.8], [1.0, 0.0, 0.0]] {
            let p = ChartPoint::from_unit(v);
            let q = p.other_chart().unwrap();
            let (a, b) = (p.unit_vector().unwrap(), q.unit_vector().unwrap());
            for i in 0..3 {
                assert!((a[i] - v[i]).abs() < 1e-15 && (b[i] - v[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spacelike_validation() {
        let s = instantiate("example1_base", &no_params(), None).unwrap();
        let r = validate_spacelike(&s, &s.grid_points(20, 20), 1e-12);
        assert!(r.pass);
        assert!(r.samples.iter().all(|x| (x.detg - 1.0).abs() < 1e-12));

        let s = instantiate("example2_sigma", &no_params(), Some(&parse_sigma("0").unwrap())).unwrap();
        let r = validate_spacelike(&s, &s.random_points(100, 9), 1e-12);
        assert!(r.pass);
        for smp in &r.samples {
            let rho_sq = smp.point.s.powi(2) + smp.point.t.powi(2);
            let round = 4.0 / (1.0 + rho_sq).powi(2);
            assert!((smp.detg - round * round).abs() < 1e-12);
        }

        let degenerate = from_coordinates(
            "degenerate",
            ["x * 0 + 1", "x * 0 + 1", "y * 0", "0"],
            ChartDomain::PLANE,
            &no_params(),
        )
        .unwrap();
        let r = validate_spacelike(&degenerate, &degenerate.grid_points(5, 5), 1e-12);
        assert!(!r.pass);
    }

    #[test]
    fn conformal_metric_scaling() {
        let sigma = parse_sigma("0.3 * x * y - 0.2 * sin(x)").unwrap();
        let base = instantiate("example1_base", &no_params(), None).unwrap();
        let s = instantiate("example1_sigma", &no_params(), Some(&sigma)).unwrap();
        for p in s.random_points(200, 5) {
            let (j, b) = (s.evaluate(&p).unwrap(), base.evaluate(&p).unwrap());
            let e2s = (2.0 * s.sigma_jet(&p).unwrap().value).exp();
            for (i, k) in [(0, 0), (0, 1), (1, 1)] {
                let gs = j.d(i).inner(&j.d(k));
                let g = b.d(i).inner(&b.d(k));
                assert!((gs - e2s * g).abs() <= 1e-10 * (1.0 + gs.abs()));
            }
        }
    }
}
