//! Sampled paths in the chart and in P = M×G, tangent fields along them, path
//! families Γ(t,s) and the preset library.
//!
//! Paths store exact node velocities next to the node points. Interval
//! midpoints come from cubic Hermite interpolation, whose value and slope are
//! both fourth-order accurate, so fourth-order integrators keep their order on
//! sampled data.

use crate::error::{Error, Result};
use crate::geometry::{BundlePoint, BundleTangent, ChartDomain};
use crate::lie::{AlgebraElement, GroupElement, LieGroup};

/// Default sitting-instant fraction.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Tolerance for node-wise constancy inside the sitting margins.
pub const SITTING_TOL: f64 = 1e-12;

/// Tolerance for endpoint matching in compositions.
pub const COMPOSE_TOL: f64 = 1e-9;

/// Uniform grid on [t0, t1] with `n` intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if n == 0 || t1.partial_cmp(&t0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::GridMismatch(format!("grid [{t0}, {t1}] with {n} intervals")));
        }
        Ok(Self { t0, t1, n })
    }

    /// [0,1] with `n` intervals.
    pub fn unit(n: usize) -> Self {
        Self::new(0.0, 1.0, n).expect("unit grid")
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        (self.t1 - self.t0) / self.n as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.n {
            self.t1
        } else {
            self.t0 + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.t(i)).collect()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.n == other.n
            && (self.t0 - other.t0).abs() <= 1e-12 * (1.0 + self.t0.abs())
            && (self.t1 - other.t1).abs() <= 1e-12 * (1.0 + self.t1.abs())
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}]/{} against [{}, {}]/{}",
                self.t0, self.t1, self.n, other.t0, other.t1, other.n
            )))
        }
    }
}

fn bump_half(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

fn bump_half_deriv(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp() / (u * u)
    }
}

/// Smooth step S(u) = f(u)/(f(u)+f(1−u)), f(u) = e^{−1/u}; flat to all orders
/// at 0 and 1.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = bump_half(u);
    let b = bump_half(1.0 - u);
    a / (a + b)
}

pub fn smooth_step_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let a = bump_half(u);
    let b = bump_half(1.0 - u);
    let da = bump_half_deriv(u);
    let db = -bump_half_deriv(1.0 - u);
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

/// Reparametrization λ(u) = S((u−ε)/(1−2ε)) of [0,1] that sits still on
/// [0,ε] and [1−ε,1]. Returns (λ, λ′).
pub fn sitting(u: f64, eps: f64) -> (f64, f64) {
    let w = 1.0 - 2.0 * eps;
    let r = (u - eps) / w;
    (smooth_step(r), smooth_step_deriv(r) / w)
}

fn hermite_point(x0: &[f64], v0: &[f64], x1: &[f64], v1: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let x = x0
        .iter()
        .zip(x1)
        .zip(v0.iter().zip(v1))
        .map(|((a, b), (va, vb))| 0.5 * (a + b) + h * (va - vb) / 8.0)
        .collect();
    let v = x0
        .iter()
        .zip(x1)
        .zip(v0.iter().zip(v1))
        .map(|((a, b), (va, vb))| 1.5 * (b - a) / h - 0.25 * (va + vb))
        .collect();
    (x, v)
}

/// Midpoint value and left-trivialized velocity g⁻¹ġ of the cubic Hermite
/// interpolant through (g₀, g₀W₀) and (g₁, g₁W₁), projected to the group.
pub fn hermite_group(
    g0: &GroupElement,
    w0: &AlgebraElement,
    g1: &GroupElement,
    w1: &AlgebraElement,
    h: f64,
) -> (GroupElement, AlgebraElement) {
    let group = g0.group;
    if group.is_translation() {
        let gm = (&g0.data + &g1.data) * 0.5 + (&w0.data - &w1.data) * (h / 8.0);
        let dg = (&g1.data - &g0.data) * (1.5 / h) - (&w0.data + &w1.data) * 0.25;
        return (GroupElement { group, data: gm }, AlgebraElement { group, data: dg });
    }
    let d0 = &g0.data * &w0.data;
    let d1 = &g1.data * &w1.data;
    let gm_raw = (&g0.data + &g1.data) * 0.5 + (&d0 - &d1) * (h / 8.0);
    let dg = (&g1.data - &g0.data) * (1.5 / h) - (&d0 + &d1) * 0.25;
    let gm = group.project(&gm_raw);
    let w = group
        .algebra_from_matrix(gm.data.transpose() * dg)
        .expect("matching shapes");
    (gm, w)
}

/// Path in the chart sampled at the nodes of a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath {
    pub grid: TimeGrid,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub margin: f64,
}

impl SampledPath {
    pub fn new(grid: TimeGrid, points: Vec<Vec<f64>>, velocities: Vec<Vec<f64>>, margin: f64) -> Result<Self> {
        if points.len() != grid.len() || velocities.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} points and {} velocities on a grid of {} nodes",
                points.len(),
                velocities.len(),
                grid.len()
            )));
        }
        let d = points[0].len();
        if points.iter().chain(&velocities).any(|p| p.len() != d) {
            return Err(Error::DimensionMismatch("path samples of mixed dimension".into()));
        }
        Ok(Self {
            grid,
            points,
            velocities,
            margin,
        })
    }

    /// Samples `f(t) = (γ(t), γ′(t))` on the grid.
    pub fn from_fn<F>(grid: TimeGrid, margin: f64, f: F) -> Self
    where
        F: Fn(f64) -> (Vec<f64>, Vec<f64>),
    {
        let (points, velocities) = grid.nodes().into_iter().map(f).unzip();
        Self {
            grid,
            points,
            velocities,
            margin,
        }
    }

    /// Constant path at `x`.
    pub fn constant(grid: TimeGrid, x: &[f64]) -> Self {
        let d = x.len();
        Self::from_fn(grid, DEFAULT_MARGIN, |_| (x.to_vec(), vec![0.0; d]))
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn initial(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn terminal(&self) -> &[f64] {
        &self.points[self.points.len() - 1]
    }

    /// Point and velocity at the midpoint of interval `i`.
    pub fn midpoint(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        hermite_point(
            &self.points[i],
            &self.velocities[i],
            &self.points[i + 1],
            &self.velocities[i + 1],
            self.grid.h(),
        )
    }

    pub fn check_in_chart(&self, chart: &ChartDomain) -> Result<()> {
        for p in &self.points {
            chart.check(p, 0.0)?;
        }
        for i in 0..self.grid.n {
            chart.check(&self.midpoint(i).0, 0.0)?;
        }
        Ok(())
    }

    /// Checks node-wise constancy inside both sitting margins.
    pub fn check_margins(&self) -> Result<()> {
        check_sitting(&self.grid, self.margin, |i, j| dist(&self.points[i], &self.points[j]))
    }

    /// Shifts and scales the domain to [0,1] and verifies the sitting margins.
    pub fn normalize(&self) -> Result<Self> {
        self.check_margins()?;
        let scale = self.grid.t1 - self.grid.t0;
        Ok(Self {
            grid: TimeGrid::unit(self.grid.n),
            points: self.points.clone(),
            velocities: self
                .velocities
                .iter()
                .map(|v| v.iter().map(|c| c * scale).collect())
                .collect(),
            margin: self.margin,
        })
    }

    /// Reversed path γ(t₀+t₁−t).
    pub fn reversed(&self) -> Self {
        Self {
            grid: self.grid,
            points: self.points.iter().rev().cloned().collect(),
            velocities: self
                .velocities
                .iter()
                .rev()
                .map(|v| v.iter().map(|c| -c).collect())
                .collect(),
            margin: self.margin,
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_sitting<F>(grid: &TimeGrid, margin: f64, gap: F) -> Result<()>
where
    F: Fn(usize, usize) -> f64,
{
    let span = grid.t1 - grid.t0;
    let n = grid.n;
    for i in 0..=n {
        let t = grid.t(i);
        let (anchor, inside) = if t <= grid.t0 + margin * span + 1e-12 * span {
            (0, true)
        } else if t >= grid.t1 - margin * span - 1e-12 * span {
            (n, true)
        } else {
            (0, false)
        };
        if inside {
            let g = gap(i, anchor);
            if g > SITTING_TOL {
                return Err(Error::MarginViolation {
                    node: i,
                    detail: format!("moves by {g:.3e} inside the sitting margin {margin}"),
                });
            }
        }
    }
    Ok(())
}

/// Margin of a concatenation of paths with `n1` and `n2` intervals.
fn composite_margin(m1: f64, n1: usize, m2: f64, n2: usize) -> f64 {
    let total = (n1 + n2) as f64;
    (m1 * n1 as f64).min(m2 * n2 as f64) / total
}

fn check_spacing(g1: &TimeGrid, g2: &TimeGrid) -> Result<()> {
    let (h1, h2) = (g1.h(), g2.h());
    if (h1 - h2).abs() > 1e-12 * h1.abs().max(h2.abs()) {
        return Err(Error::GridMismatch(format!("grid spacings {h1} and {h2} differ")));
    }
    Ok(())
}

/// γ₂∘γ₁: γ₁ followed by γ₂, renormalized to [0,1].
pub fn compose_paths(p2: &SampledPath, p1: &SampledPath) -> Result<SampledPath> {
    let gap = dist(p1.terminal(), p2.initial());
    if gap > COMPOSE_TOL {
        return Err(Error::NonComposable { gap });
    }
    check_spacing(&p1.grid, &p2.grid)?;
    let n = p1.grid.n + p2.grid.n;
    let grid = TimeGrid::new(p1.grid.t0, p1.grid.t0 + n as f64 * p1.grid.h(), n)?;
    let mut points = p1.points.clone();
    points.extend(p2.points[1..].iter().cloned());
    let mut velocities = p1.velocities.clone();
    velocities.extend(p2.velocities[1..].iter().cloned());
    let margin = composite_margin(p1.margin, p1.grid.n, p2.margin, p2.grid.n);
    SampledPath::new(grid, points, velocities, margin)?.normalize()
}

/// Path in P = M×G with node velocities (v, W), the vertical part being g·W.
#[derive(Clone, Debug, PartialEq)]
pub struct BundlePath {
    pub grid: TimeGrid,
    pub points: Vec<BundlePoint>,
    pub velocities: Vec<BundleTangent>,
    pub margin: f64,
}

impl BundlePath {
    pub fn new(grid: TimeGrid, points: Vec<BundlePoint>, velocities: Vec<BundleTangent>, margin: f64) -> Result<Self> {
        if points.len() != grid.len() || velocities.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} points and {} velocities on a grid of {} nodes",
                points.len(),
                velocities.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            points,
            velocities,
            margin,
        })
    }

    pub fn group(&self) -> LieGroup {
        self.points[0].g.group
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn initial(&self) -> &BundlePoint {
        &self.points[0]
    }

    pub fn terminal(&self) -> &BundlePoint {
        &self.points[self.points.len() - 1]
    }

    /// Projection π∘ovg to the chart.
    pub fn base(&self) -> SampledPath {
        SampledPath {
            grid: self.grid,
            points: self.points.iter().map(|p| p.x.clone()).collect(),
            velocities: self.velocities.iter().map(|v| v.v.clone()).collect(),
            margin: self.margin,
        }
    }

    /// Fiber coordinates g(t).
    pub fn fiber(&self) -> Vec<GroupElement> {
        self.points.iter().map(|p| p.g.clone()).collect()
    }

    /// Right translation ovg·g₁.
    pub fn right(&self, g1: &GroupElement) -> Self {
        Self {
            grid: self.grid,
            points: self.points.iter().map(|p| p.right(g1)).collect(),
            velocities: self.velocities.iter().map(|v| v.right(g1)).collect(),
            margin: self.margin,
        }
    }

    /// Node-wise right translation by a varying element (velocities keep the
    /// base part and translate W; intended for piecewise constant factors).
    pub fn right_varying(&self, g: &[GroupElement]) -> Self {
        Self {
            grid: self.grid,
            points: self.points.iter().zip(g).map(|(p, g)| p.right(g)).collect(),
            velocities: self.velocities.iter().zip(g).map(|(v, g)| v.right(g)).collect(),
            margin: self.margin,
        }
    }

    /// Point and velocity at the midpoint of interval `i` (cubic Hermite in
    /// the chart and in the ambient matrices, projected to the group).
    pub fn midpoint(&self, i: usize) -> (BundlePoint, BundleTangent) {
        let h = self.grid.h();
        let (p0, p1) = (&self.points[i], &self.points[i + 1]);
        let (v0, v1) = (&self.velocities[i], &self.velocities[i + 1]);
        let (x, v) = hermite_point(&p0.x, &v0.v, &p1.x, &v1.v, h);
        let (g, w) = hermite_group(&p0.g, &v0.w, &p1.g, &v1.w, h);
        (BundlePoint { x, g }, BundleTangent { v, w })
    }

    pub fn check_margins(&self) -> Result<()> {
        check_sitting(&self.grid, self.margin, |i, j| {
            dist(&self.points[i].x, &self.points[j].x) + self.points[i].g.distance(&self.points[j].g)
        })
    }

    pub fn normalize(&self) -> Result<Self> {
        self.check_margins()?;
        let scale = self.grid.t1 - self.grid.t0;
        Ok(Self {
            grid: TimeGrid::unit(self.grid.n),
            points: self.points.clone(),
            velocities: self.velocities.iter().map(|v| v.scale(scale)).collect(),
            margin: self.margin,
        })
    }
}

/// ovg₂∘ovg₁ in P, renormalized to [0,1].
pub fn compose_bundle_paths(p2: &BundlePath, p1: &BundlePath) -> Result<BundlePath> {
    let (a, b) = (p1.terminal(), p2.initial());
    let gap = dist(&a.x, &b.x) + a.g.distance(&b.g);
    if gap > COMPOSE_TOL {
        return Err(Error::NonComposable { gap });
    }
    check_spacing(&p1.grid, &p2.grid)?;
    let n = p1.grid.n + p2.grid.n;
    let grid = TimeGrid::new(p1.grid.t0, p1.grid.t0 + n as f64 * p1.grid.h(), n)?;
    let mut points = p1.points.clone();
    points.extend(p2.points[1..].iter().cloned());
    let mut velocities = p1.velocities.clone();
    velocities.extend(p2.velocities[1..].iter().cloned());
    let margin = composite_margin(p1.margin, p1.grid.n, p2.margin, p2.grid.n);
    BundlePath::new(grid, points, velocities, margin)?.normalize()
}

/// Tangent field along a bundle path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathTangent {
    pub grid: TimeGrid,
    pub vectors: Vec<BundleTangent>,
}

impl PathTangent {
    pub fn new(grid: TimeGrid, vectors: Vec<BundleTangent>) -> Result<Self> {
        if vectors.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} tangent vectors on a grid of {} nodes",
                vectors.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, vectors })
    }

    /// The vertical field ovg·Y (constant Y in left-trivialized coordinates).
    pub fn vertical(path: &BundlePath, y: &AlgebraElement) -> Self {
        let d = path.points[0].x.len();
        Self {
            grid: path.grid,
            vectors: vec![BundleTangent::vertical(d, y.clone()); path.len()],
        }
    }

    pub fn initial(&self) -> &BundleTangent {
        &self.vectors[0]
    }

    pub fn terminal(&self) -> &BundleTangent {
        &self.vectors[self.vectors.len() - 1]
    }

    /// Base part.
    pub fn base(&self) -> BasePathTangent {
        BasePathTangent {
            grid: self.grid,
            vectors: self.vectors.iter().map(|v| v.v.clone()).collect(),
        }
    }

    /// Push-forward under the right action by g₁.
    pub fn right(&self, g1: &GroupElement) -> Self {
        Self {
            grid: self.grid,
            vectors: self.vectors.iter().map(|v| v.right(g1)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            vectors: self.vectors.iter().zip(&other.vectors).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            vectors: self.vectors.iter().zip(&other.vectors).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            vectors: self.vectors.iter().map(|a| a.scale(s)).collect(),
        }
    }

    /// Largest node-wise difference.
    pub fn max_distance(&self, other: &Self) -> f64 {
        self.vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| dist(&a.v, &b.v) + (&a.w - &b.w).norm())
            .fold(0.0, f64::max)
    }
}

/// Tangent field along a chart path.
#[derive(Clone, Debug, PartialEq)]
pub struct BasePathTangent {
    pub grid: TimeGrid,
    pub vectors: Vec<Vec<f64>>,
}

impl BasePathTangent {
    pub fn new(grid: TimeGrid, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} tangent vectors on a grid of {} nodes",
                vectors.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, vectors })
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            vectors: self
                .vectors
                .iter()
                .zip(&other.vectors)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }
}

/// Map Γ(t,s) sampled on a grid, with analytic ∂ₜΓ and ∂ₛΓ. Rows are indexed
/// by s, columns by t.
#[derive(Clone, Debug, PartialEq)]
pub struct PathFamily {
    pub t_grid: TimeGrid,
    pub s_grid: TimeGrid,
    pub points: Vec<Vec<Vec<f64>>>,
    pub dt: Vec<Vec<Vec<f64>>>,
    pub ds: Vec<Vec<Vec<f64>>>,
    pub margin_t: f64,
    pub margin_s: f64,
}

/// Sample of a family: (Γ, ∂ₜΓ, ∂ₛΓ).
pub type FamilySample = (Vec<f64>, Vec<f64>, Vec<f64>);

impl PathFamily {
    pub fn from_fn<F>(t_grid: TimeGrid, s_grid: TimeGrid, margin_t: f64, margin_s: f64, f: F) -> Self
    where
        F: Fn(f64, f64) -> FamilySample,
    {
        let mut points = Vec::with_capacity(s_grid.len());
        let mut dt = Vec::with_capacity(s_grid.len());
        let mut ds = Vec::with_capacity(s_grid.len());
        for s in s_grid.nodes() {
            let mut pr = Vec::with_capacity(t_grid.len());
            let mut tr = Vec::with_capacity(t_grid.len());
            let mut sr = Vec::with_capacity(t_grid.len());
            for t in t_grid.nodes() {
                let (x, xt, xs) = f(t, s);
                pr.push(x);
                tr.push(xt);
                sr.push(xs);
            }
            points.push(pr);
            dt.push(tr);
            ds.push(sr);
        }
        Self {
            t_grid,
            s_grid,
            points,
            dt,
            ds,
            margin_t,
            margin_s,
        }
    }

    pub fn dim(&self) -> usize {
        self.points[0][0].len()
    }

    /// Γ_s for the s-node `j`.
    pub fn row(&self, j: usize) -> SampledPath {
        SampledPath {
            grid: self.t_grid,
            points: self.points[j].clone(),
            velocities: self.dt[j].clone(),
            margin: self.margin_t,
        }
    }

    /// s ↦ Γ(t_i, s) for the t-node `i`.
    pub fn column(&self, i: usize) -> SampledPath {
        SampledPath {
            grid: self.s_grid,
            points: self.points.iter().map(|r| r[i].clone()).collect(),
            velocities: self.ds.iter().map(|r| r[i].clone()).collect(),
            margin: self.margin_s,
        }
    }

    /// ∂ₛΓ along the row `j`.
    pub fn s_tangent(&self, j: usize) -> BasePathTangent {
        BasePathTangent {
            grid: self.t_grid,
            vectors: self.ds[j].clone(),
        }
    }

    pub fn check_in_chart(&self, chart: &ChartDomain) -> Result<()> {
        for j in 0..self.s_grid.len() {
            self.row(j).check_in_chart(chart)?;
        }
        Ok(())
    }

    /// Stationarity near all four edges.
    pub fn check_margins(&self) -> Result<()> {
        for j in 0..self.s_grid.len() {
            self.row(j).check_margins()?;
        }
        for i in 0..self.t_grid.len() {
            self.column(i).check_margins()?;
        }
        Ok(())
    }
}

fn invalid(kind: &'static str, spec: &str, reason: impl Into<String>) -> Error {
    Error::InvalidSpec {
        kind,
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn parse_point(kind: &'static str, spec: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| invalid(kind, spec, format!("'{s}' is not a point"))))
        .collect()
}

/// Parses a path preset on the given grid:
/// `segment:<x1,..>:<y1,..>` or `square-loop:<side>` (counter-clockwise from
/// the origin with stationary corners).
pub fn parse_path(spec: &str, grid: TimeGrid, margin: f64) -> Result<SampledPath> {
    let spec = spec.trim();
    let (head, body) = spec.split_once(':').unwrap_or((spec, ""));
    let span = grid.t1 - grid.t0;
    let unit = move |t: f64| (t - grid.t0) / span;
    match head {
        "segment" => {
            let (a, b) = body
                .split_once(':')
                .ok_or_else(|| invalid("path", spec, "expected segment:<from>:<to>"))?;
            let a = parse_point("path", spec, a)?;
            let b = parse_point("path", spec, b)?;
            if a.len() != b.len() {
                return Err(invalid("path", spec, "endpoints of different dimension"));
            }
            Ok(segment(&a, &b, grid, margin))
        }
        "square-loop" => {
            let side: f64 = body
                .trim()
                .parse()
                .map_err(|_| invalid("path", spec, "expected square-loop:<side>"))?;
            Ok(SampledPath::from_fn(grid, margin, |t| {
                let (p, v) = square_loop(unit(t), side, margin);
                (p.to_vec(), v.iter().map(|c| c / span).collect())
            }))
        }
        _ => Err(Error::UnknownId {
            kind: "path preset",
            id: spec.to_string(),
        }),
    }
}

/// Straight segment a → b with sitting instants.
pub fn segment(a: &[f64], b: &[f64], grid: TimeGrid, margin: f64) -> SampledPath {
    let span = grid.t1 - grid.t0;
    SampledPath::from_fn(grid, margin, |t| {
        let (l, dl) = sitting((t - grid.t0) / span, margin);
        (
            a.iter().zip(b).map(|(x, y)| x + l * (y - x)).collect(),
            a.iter().zip(b).map(|(x, y)| dl * (y - x) / span).collect(),
        )
    })
}

/// Counter-clockwise square loop from the origin with the given side,
/// parametrized by u ∈ [0,1]. Returns (point, d/du).
pub fn square_loop(u: f64, side: f64, margin: f64) -> ([f64; 2], [f64; 2]) {
    let w = 1.0 - 2.0 * margin;
    let r = ((u - margin) / w).clamp(0.0, 1.0);
    if r <= 0.0 || r >= 1.0 {
        return ([0.0, 0.0], [0.0, 0.0]);
    }
    let q = ((4.0 * r).floor() as usize).min(3);
    let local = 4.0 * r - q as f64;
    let p = side * smooth_step(local);
    let dp = side * smooth_step_deriv(local) * 4.0 / w;
    match q {
        0 => ([p, 0.0], [dp, 0.0]),
        1 => ([side, p], [0.0, dp]),
        2 => ([side - p, side], [-dp, 0.0]),
        _ => ([0.0, side - p], [0.0, -dp]),
    }
}

/// Square loop of the given side with its lower-left corner at `corner`.
pub fn square_loop_at(corner: &[f64], side: f64, grid: TimeGrid, margin: f64) -> SampledPath {
    let span = grid.t1 - grid.t0;
    SampledPath::from_fn(grid, margin, |t| {
        let (p, v) = square_loop((t - grid.t0) / span, side, margin);
        (
            vec![corner[0] + p[0], corner[1] + p[1]],
            vec![v[0] / span, v[1] / span],
        )
    })
}

/// Parses a family preset:
/// `sheet:<cx>,<cy>:<ex>,<ey>` for Γ(t,s) = (cx + ex λ(t), cy + ey λ(s)), and
/// `wave:<amp>[:<cx>,<cy>]` for a non-product deformation of the unit sheet.
pub fn parse_family(spec: &str, t_grid: TimeGrid, s_grid: TimeGrid, margin: f64) -> Result<PathFamily> {
    let spec = spec.trim();
    let (head, body) = spec.split_once(':').unwrap_or((spec, ""));
    let tspan = t_grid.t1 - t_grid.t0;
    let sspan = s_grid.t1 - s_grid.t0;
    let (t0, s0) = (t_grid.t0, s_grid.t0);
    match head {
        "sheet" => {
            let (c, e) = body
                .split_once(':')
                .ok_or_else(|| invalid("family", spec, "expected sheet:<corner>:<extent>"))?;
            let c = parse_point("family", spec, c)?;
            let e = parse_point("family", spec, e)?;
            if c.len() != 2 || e.len() != 2 {
                return Err(invalid("family", spec, "corner and extent must be 2-D"));
            }
            Ok(PathFamily::from_fn(t_grid, s_grid, margin, margin, |t, s| {
                let (l, dl) = sitting((t - t0) / tspan, margin);
                let (m, dm) = sitting((s - s0) / sspan, margin);
                (
                    vec![c[0] + e[0] * l, c[1] + e[1] * m],
                    vec![e[0] * dl / tspan, 0.0],
                    vec![0.0, e[1] * dm / sspan],
                )
            }))
        }
        "wave" => {
            let mut parts = body.splitn(2, ':');
            let amp: f64 = parts
                .next()
                .and_then(|a| a.trim().parse().ok())
                .ok_or_else(|| invalid("family", spec, "expected wave:<amp>[:<cx>,<cy>]"))?;
            let c = match parts.next() {
                Some(c) => parse_point("family", spec, c)?,
                None => vec![0.0, 0.0],
            };
            if c.len() != 2 {
                return Err(invalid("family", spec, "offset must be 2-D"));
            }
            use std::f64::consts::PI;
            Ok(PathFamily::from_fn(t_grid, s_grid, margin, margin, |t, s| {
                let (l, dl) = sitting((t - t0) / tspan, margin);
                let (m, dm) = sitting((s - s0) / sspan, margin);
                let (dl, dm) = (dl / tspan, dm / sspan);
                let (sl, cl) = (PI * l).sin_cos();
                let (sm, cm) = (PI * m).sin_cos();
                let (s2l, c2l) = (2.0 * PI * l).sin_cos();
                let x1 = c[0] + l + 0.5 * amp * s2l * sm;
                let x2 = c[1] + m + amp * sl * sm;
                (
                    vec![x1, x2],
                    vec![dl + amp * PI * c2l * sm * dl, amp * PI * cl * sm * dl],
                    vec![0.5 * amp * s2l * PI * cm * dm, dm + amp * sl * PI * cm * dm],
                )
            }))
        }
        _ => Err(Error::UnknownId {
            kind: "family preset",
            id: spec.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_derivative_matches_fd() {
        for &u in &[0.1, 0.3, 0.5, 0.77] {
            let h = 1e-6;
            let fd = (smooth_step(u + h) - smooth_step(u - h)) / (2.0 * h);
            assert!((fd - smooth_step_deriv(u)).abs() < 1e-7);
        }
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hermite_midpoint_is_fourth_order() {
        let grid = TimeGrid::unit(20);
        let p = SampledPath::from_fn(grid, 0.0, |t| (vec![t.sin()], vec![t.cos()]));
        let (x, v) = p.midpoint(3);
        let tm: f64 = 3.5 / 20.0;
        assert!((x[0] - tm.sin()).abs() < 1e-7);
        assert!((v[0] - tm.cos()).abs() < 1e-5);
    }

    #[test]
    fn segment_sits_at_ends() {
        let p = segment(&[0.0, 0.0], &[1.0, 0.0], TimeGrid::unit(40), DEFAULT_MARGIN);
        assert!(p.check_margins().is_ok());
        assert_eq!(p.terminal(), &[1.0, 0.0]);
    }

    #[test]
    fn wave_derivatives_match_fd() {
        let n = 2000;
        let h = 1.0 / n as f64;
        let along_t = parse_family("wave:0.3", TimeGrid::unit(n), TimeGrid::unit(4), 0.05).unwrap();
        let along_s = parse_family("wave:0.3", TimeGrid::unit(4), TimeGrid::unit(n), 0.05).unwrap();
        for k in 0..2 {
            let fd_t = (along_t.points[2][801][k] - along_t.points[2][799][k]) / (2.0 * h);
            assert!((fd_t - along_t.dt[2][800][k]).abs() < 1e-4);
            let fd_s = (along_s.points[801][1][k] - along_s.points[799][1][k]) / (2.0 * h);
            assert!((fd_s - along_s.ds[800][1][k]).abs() < 1e-4);
        }
    }
}
