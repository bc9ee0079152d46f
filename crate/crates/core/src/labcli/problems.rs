use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Result, VemError};
use crate::sfsupg::{ProblemData, ScalarFn, VectorFn};
use crate::Point;

const C2: f64 = 0.5;
const C3: f64 = 1000.0;
const C4: f64 = 1000.0 / 3.3;

fn c1() -> f64 {
    3.0 / (2.0 * PI).sqrt()
}

/// Exponent argument of the Test 1 bump and its gradient.
fn test1_q(p: Point) -> (f64, Point) {
    let (a, b) = (C2 - p.x, C2 - p.y);
    let q = C4 * a * a + C3 * b * b - C3 * a * b;
    let grad = Point::new(-2.0 * C4 * a + C3 * b, -2.0 * C3 * b + C3 * a);
    (q, grad)
}

pub fn test1_u(p: Point) -> f64 {
    let (q, _) = test1_q(p);
    c1() * p.x * p.y * (p.x - 1.0) * (p.y - 1.0) * (-C2 * q).exp()
}

pub fn test1_grad(p: Point) -> Point {
    let (q, gq) = test1_q(p);
    let (x, y) = (p.x * (p.x - 1.0), p.y * (p.y - 1.0));
    let gp = Point::new((2.0 * p.x - 1.0) * y, x * (2.0 * p.y - 1.0));
    (gp - gq * (C2 * x * y)) * (c1() * (-C2 * q).exp())
}

pub fn test1_laplacian(p: Point) -> f64 {
    let (q, gq) = test1_q(p);
    let (x, y) = (p.x * (p.x - 1.0), p.y * (p.y - 1.0));
    let pp = x * y;
    let gp = Point::new((2.0 * p.x - 1.0) * y, x * (2.0 * p.y - 1.0));
    let lap_p = 2.0 * (x + y);
    let lap_q = 2.0 * C4 + 2.0 * C3;
    c1() * (-C2 * q).exp()
        * (lap_p - 2.0 * C2 * gp.dot(&gq) - C2 * pp * lap_q + C2 * C2 * pp * gq.norm_squared())
}

fn manufactured(
    name: &str,
    kappa: f64,
    beta: Point,
    u: fn(Point) -> f64,
    grad: fn(Point) -> Point,
    lap: fn(Point) -> f64,
) -> Result<ProblemData> {
    let f: ScalarFn = Arc::new(move |p| -kappa * lap(p) + beta.dot(&grad(p)));
    let u: ScalarFn = Arc::new(u);
    let grad: VectorFn = Arc::new(grad);
    Ok(ProblemData::new(name, kappa, Arc::new(move |_| beta), f, u.clone())?.with_exact(u, grad))
}

/// Sharp interior bump, `kappa = 1e-9`, `beta = (1, 0.545)`.
pub fn problem_test1() -> ProblemData {
    problem_test1_with(1e-9).unwrap()
}

pub fn problem_test1_with(kappa: f64) -> Result<ProblemData> {
    manufactured("test1", kappa, Point::new(1.0, 0.545), test1_u, test1_grad, test1_laplacian)
}

pub const TEST2_INFLOW: &str = "inflow1";
pub const TEST2_REST: &str = "rest";

/// Internal and outflow layers: `f = 0`, `beta` at 45 degrees, `g = 1` on the
/// left side above `y = 0.2` and `0` elsewhere.
pub fn problem_test2() -> ProblemData {
    problem_test2_with(1e-6).unwrap()
}

pub fn problem_test2_with(kappa: f64) -> Result<ProblemData> {
    let b = std::f64::consts::FRAC_PI_4;
    let beta = Point::new(b.cos(), b.sin());
    let mut pd = ProblemData::new("test2", kappa, Arc::new(move |_| beta), Arc::new(|_| 0.0), Arc::new(|_| 0.0))?;
    pd.dirichlet = Arc::new(|label: &str, _| if label == TEST2_INFLOW { 1.0 } else { 0.0 });
    pd.relabel = Some(Arc::new(|mid: Point, _: &str| {
        if mid.x.abs() < 1e-12 && mid.y >= 0.2 {
            TEST2_INFLOW.to_string()
        } else {
            TEST2_REST.to_string()
        }
    }));
    pd.label_priority = vec![TEST2_INFLOW.into(), TEST2_REST.into()];
    Ok(pd)
}

fn smooth_u(p: Point) -> f64 {
    (PI * p.x).sin() * (PI * p.y).sin()
}

fn smooth_grad(p: Point) -> Point {
    Point::new(
        PI * (PI * p.x).cos() * (PI * p.y).sin(),
        PI * (PI * p.x).sin() * (PI * p.y).cos(),
    )
}

fn smooth_laplacian(p: Point) -> f64 {
    -2.0 * PI * PI * smooth_u(p)
}

/// `u = sin(pi x) sin(pi y)` with homogeneous boundary data.
pub fn problem_smooth(kappa: f64, beta: Point) -> Result<ProblemData> {
    manufactured("smooth", kappa, beta, smooth_u, smooth_grad, smooth_laplacian)
}

pub const PROBLEM_NAMES: [&str; 3] = ["test1", "test2", "smooth"];

/// Registry lookup; `kappa` overrides the default diffusivity.
pub fn problem_by_name(name: &str, kappa: Option<f64>) -> Result<ProblemData> {
    match name {
        "test1" => problem_test1_with(kappa.unwrap_or(1e-9)),
        "test2" => problem_test2_with(kappa.unwrap_or(1e-6)),
        "smooth" => problem_smooth(kappa.unwrap_or(1e-6), Point::new(1.0, 0.545)),
        other => Err(VemError::InvalidArgument(format!(
            "unknown problem '{other}' (expected one of {})",
            PROBLEM_NAMES.join(", ")
        ))),
    }
}
