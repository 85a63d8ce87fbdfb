//! Chart domains, Lie-algebra valued forms on them, finite-difference exterior
//! calculus and equivariant lifts to the trivialized bundle P = M×G.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lie::{AlgebraElement, GroupElement, LieGroup};
use crate::module::{AdjointAction, FiberAction};

/// Relative finite-difference step (multiplied by the chart diameter).
pub const FD_RELATIVE_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct ChartDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ChartDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "chart bounds of lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a.partial_cmp(b) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::InvalidSpec {
                kind: "chart",
                spec: format!("{lo:?}..{hi:?}"),
                reason: "empty interior".into(),
            });
        }
        Ok(Self { lo, hi })
    }

    /// The box [lo, hi]ᵈ.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![lo; dim], vec![hi; dim]).expect("valid cube")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn fd_step(&self) -> f64 {
        FD_RELATIVE_STEP * self.diameter()
    }

    pub fn contains(&self, x: &[f64], margin: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= a + margin && *v <= b - margin)
    }

    pub fn check(&self, x: &[f64], margin: f64) -> Result<()> {
        if self.contains(x, margin) {
            Ok(())
        } else {
            Err(Error::OutOfChart { point: x.to_vec() })
        }
    }
}

type OneCoeffs = dyn Fn(&[f64]) -> Vec<AlgebraElement> + Send + Sync;

/// c_x(v) = Σᵢ vᵢ cᵢ(x); linear in v by construction.
#[derive(Clone)]
pub struct BaseOneForm {
    chart: ChartDomain,
    target: LieGroup,
    label: String,
    zero: bool,
    coeffs: Arc<OneCoeffs>,
}

impl fmt::Debug for BaseOneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BaseOneForm({} -> {})", self.label, self.target)
    }
}

impl BaseOneForm {
    pub fn new<F>(chart: ChartDomain, target: LieGroup, label: impl Into<String>, coeffs: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<AlgebraElement> + Send + Sync + 'static,
    {
        Self {
            chart,
            target,
            label: label.into(),
            zero: false,
            coeffs: Arc::new(coeffs),
        }
    }

    pub fn zero(chart: ChartDomain, target: LieGroup) -> Self {
        let d = chart.dim();
        Self {
            chart,
            target,
            label: "zero".into(),
            zero: true,
            coeffs: Arc::new(move |_x: &[f64]| vec![target.zero_algebra(); d]),
        }
    }

    pub fn chart(&self) -> &ChartDomain {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn target(&self) -> LieGroup {
        self.target
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn coefficients(&self, x: &[f64]) -> Vec<AlgebraElement> {
        (self.coeffs)(x)
    }

    pub fn eval(&self, x: &[f64], v: &[f64]) -> AlgebraElement {
        if self.zero {
            return self.target.zero_algebra();
        }
        let c = (self.coeffs)(x);
        let mut out = self.target.zero_algebra();
        for (ci, vi) in c.iter().zip(v) {
            if *vi != 0.0 {
                out.data += &ci.data * *vi;
            }
        }
        out
    }

    pub fn checked_eval(&self, x: &[f64], v: &[f64]) -> Result<AlgebraElement> {
        if x.len() != self.dim() || v.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "form on R^{} evaluated at a point of R^{} with a vector of R^{}",
                self.dim(),
                x.len(),
                v.len()
            )));
        }
        Ok(self.eval(x, v))
    }

    pub fn scaled(&self, s: f64) -> Self {
        if self.zero {
            return self.clone();
        }
        let inner = self.coeffs.clone();
        Self {
            chart: self.chart.clone(),
            target: self.target,
            label: format!("{s}*({})", self.label),
            zero: s == 0.0,
            coeffs: Arc::new(move |x: &[f64]| inner(x).into_iter().map(|c| c.scale(s)).collect()),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.target, other.target, "sum of forms with different targets");
        if other.zero {
            return self.clone();
        }
        if self.zero {
            return other.clone();
        }
        let (a, b) = (self.coeffs.clone(), other.coeffs.clone());
        Self {
            chart: self.chart.clone(),
            target: self.target,
            label: format!("{}+{}", self.label, other.label),
            zero: false,
            coeffs: Arc::new(move |x: &[f64]| {
                a(x).into_iter()
                    .zip(b(x))
                    .map(|(p, q)| p + q)
                    .collect()
            }),
        }
    }

    /// Post-composition with a linear map into another algebra, e.g. dτ.
    pub fn mapped<F>(&self, target: LieGroup, f: F) -> Self
    where
        F: Fn(&AlgebraElement) -> AlgebraElement + Send + Sync + 'static,
    {
        if self.zero {
            return Self::zero(self.chart.clone(), target);
        }
        let inner = self.coeffs.clone();
        Self {
            chart: self.chart.clone(),
            target,
            label: format!("mapped({})", self.label),
            zero: false,
            coeffs: Arc::new(move |x: &[f64]| inner(x).iter().map(&f).collect()),
        }
    }

    /// Partial derivatives ∂ₖcᵢ(x) by central differences, indexed [k][i].
    fn coefficient_gradient(&self, x: &[f64]) -> Result<Vec<Vec<AlgebraElement>>> {
        let h = self.chart.fd_step();
        self.chart.check(x, h)?;
        let mut out = Vec::with_capacity(self.dim());
        let mut xp = x.to_vec();
        for k in 0..self.dim() {
            xp[k] = x[k] + h;
            let cp = (self.coeffs)(&xp);
            xp[k] = x[k] - h;
            let cm = (self.coeffs)(&xp);
            xp[k] = x[k];
            out.push(
                cp.iter()
                    .zip(&cm)
                    .map(|(p, m)| (p - m).scale(0.5 / h))
                    .collect(),
            );
        }
        Ok(out)
    }
}

type TwoCoeffs = dyn Fn(&[f64]) -> Vec<AlgebraElement> + Send + Sync;

/// b_x(v,w) = Σ_{i<j} F_ij(x)(vᵢwⱼ − vⱼwᵢ); bilinear and antisymmetric by construction.
#[derive(Clone)]
pub struct BaseTwoForm {
    chart: ChartDomain,
    target: LieGroup,
    label: String,
    zero: bool,
    coeffs: Arc<TwoCoeffs>,
}

impl fmt::Debug for BaseTwoForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BaseTwoForm({} -> {})", self.label, self.target)
    }
}

/// Number of coordinate planes (i<j) in dimension d.
pub fn plane_count(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

/// Index of the plane (i,j), i<j, in lexicographic order.
pub fn plane_index(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < d);
    i * (2 * d - i - 1) / 2 + (j - i - 1)
}

impl BaseTwoForm {
    /// `coeffs(x)` returns F_ij for i<j in lexicographic order.
    pub fn new<F>(chart: ChartDomain, target: LieGroup, label: impl Into<String>, coeffs: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<AlgebraElement> + Send + Sync + 'static,
    {
        Self {
            chart,
            target,
            label: label.into(),
            zero: false,
            coeffs: Arc::new(coeffs),
        }
    }

    pub fn zero(chart: ChartDomain, target: LieGroup) -> Self {
        let n = plane_count(chart.dim());
        Self {
            chart,
            target,
            label: "zero".into(),
            zero: true,
            coeffs: Arc::new(move |_x: &[f64]| vec![target.zero_algebra(); n]),
        }
    }

    pub fn chart(&self) -> &ChartDomain {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn target(&self) -> LieGroup {
        self.target
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn eval(&self, x: &[f64], v: &[f64], w: &[f64]) -> AlgebraElement {
        if self.zero {
            return self.target.zero_algebra();
        }
        let d = self.dim();
        let f = (self.coeffs)(x);
        let mut out = self.target.zero_algebra();
        let mut idx = 0;
        for i in 0..d {
            for j in (i + 1)..d {
                let s = v[i] * w[j] - v[j] * w[i];
                if s != 0.0 {
                    out.data += &f[idx].data * s;
                }
                idx += 1;
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        if self.zero {
            return self.clone();
        }
        let inner = self.coeffs.clone();
        Self {
            chart: self.chart.clone(),
            target: self.target,
            label: format!("{s}*({})", self.label),
            zero: s == 0.0,
            coeffs: Arc::new(move |x: &[f64]| inner(x).into_iter().map(|c| c.scale(s)).collect()),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.target, other.target, "sum of forms with different targets");
        if other.zero {
            return self.clone();
        }
        if self.zero {
            return other.clone();
        }
        let (a, b) = (self.coeffs.clone(), other.coeffs.clone());
        Self {
            chart: self.chart.clone(),
            target: self.target,
            label: format!("{}+{}", self.label, other.label),
            zero: false,
            coeffs: Arc::new(move |x: &[f64]| {
                a(x).into_iter()
                    .zip(b(x))
                    .map(|(p, q)| p + q)
                    .collect()
            }),
        }
    }
}

/// dc(v,w) with constant-extended v, w, by central differences.
pub fn exterior_derivative(c: &BaseOneForm, x: &[f64], v: &[f64], w: &[f64]) -> Result<AlgebraElement> {
    if c.is_zero() {
        c.chart.check(x, c.chart.fd_step())?;
        return Ok(c.target.zero_algebra());
    }
    let grad = c.coefficient_gradient(x)?;
    let d = c.dim();
    let mut out = c.target.zero_algebra();
    for k in 0..d {
        for i in 0..d {
            let s = v[k] * w[i] - w[k] * v[i];
            if s != 0.0 {
                out.data += &grad[k][i].data * s;
            }
        }
    }
    Ok(out)
}

/// [c(v), c(w)].
pub fn wedge_bracket(c: &BaseOneForm, x: &[f64], v: &[f64], w: &[f64]) -> AlgebraElement {
    c.eval(x, v).bracket(&c.eval(x, w))
}

/// da(v,w) + [a(v), a(w)].
pub fn curvature(a: &BaseOneForm, x: &[f64], v: &[f64], w: &[f64]) -> Result<AlgebraElement> {
    Ok(exterior_derivative(a, x, v, w)? + wedge_bracket(a, x, v, w))
}

/// The curvature of `a` as a base two-form (finite-difference coefficients).
pub fn curvature_form(a: &BaseOneForm) -> BaseTwoForm {
    if a.is_zero() {
        return BaseTwoForm::zero(a.chart.clone(), a.target);
    }
    let a2 = a.clone();
    let d = a.dim();
    BaseTwoForm::new(a.chart.clone(), a.target, format!("F[{}]", a.label), move |x: &[f64]| {
        let mut out = Vec::with_capacity(plane_count(d));
        let mut ei = vec![0.0; d];
        let mut ej = vec![0.0; d];
        for i in 0..d {
            for j in (i + 1)..d {
                ei[i] = 1.0;
                ej[j] = 1.0;
                let f = curvature(&a2, x, &ei, &ej).unwrap_or_else(|_| a2.target.zero_algebra());
                ei[i] = 0.0;
                ej[j] = 0.0;
                out.push(f);
            }
        }
        out
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BundlePoint {
    pub x: Vec<f64>,
    pub g: GroupElement,
}

/// Tangent vector at (x,g): base part `v` and vertical part g·W.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleTangent {
    pub v: Vec<f64>,
    pub w: AlgebraElement,
}

impl BundlePoint {
    pub fn new(x: Vec<f64>, g: GroupElement) -> Self {
        Self { x, g }
    }

    /// Right action p ↦ p·g₁.
    pub fn right(&self, g1: &GroupElement) -> Self {
        Self {
            x: self.x.clone(),
            g: &self.g * g1,
        }
    }
}

impl BundleTangent {
    pub fn new(v: Vec<f64>, w: AlgebraElement) -> Self {
        Self { v, w }
    }

    pub fn vertical(dim: usize, w: AlgebraElement) -> Self {
        Self { v: vec![0.0; dim], w }
    }

    /// Push-forward under the right action by g₁.
    pub fn right(&self, g1: &GroupElement) -> Self {
        Self {
            v: self.v.clone(),
            w: g1.ad_inv(&self.w),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
            w: &self.w + &other.w,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            v: self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect(),
            w: &self.w - &other.w,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            v: self.v.iter().map(|a| a * s).collect(),
            w: self.w.scale(s),
        }
    }
}

/// Ā(v, gW) = Ad(g⁻¹)a_x(v) + W.
pub fn connection_eval(a: &BaseOneForm, p: &BundlePoint, t: &BundleTangent) -> AlgebraElement {
    let mut out = p.g.ad_inv(&a.eval(&p.x, &t.v));
    out += &t.w;
    out
}

pub fn checked_connection_eval(a: &BaseOneForm, p: &BundlePoint, t: &BundleTangent) -> Result<AlgebraElement> {
    if p.g.group != a.target() || t.w.group != a.target() {
        return Err(Error::DimensionMismatch(format!(
            "connection valued in {} evaluated at a point of {}",
            a.target(),
            p.g.group
        )));
    }
    a.checked_eval(&p.x, &t.v)?;
    Ok(connection_eval(a, p, t))
}

/// Horizontal tangent at `p` over the base vector `v`: W = −Ad(g⁻¹)a(v).
pub fn horizontal_tangent(a: &BaseOneForm, p: &BundlePoint, v: &[f64]) -> BundleTangent {
    BundleTangent {
        v: v.to_vec(),
        w: -p.g.ad_inv(&a.eval(&p.x, v)),
    }
}

/// One-form on P.
pub trait BundleOneForm: Send + Sync {
    fn target(&self) -> LieGroup;
    fn eval(&self, p: &BundlePoint, t: &BundleTangent) -> AlgebraElement;
}

/// Two-form on P.
pub trait BundleTwoForm: Send + Sync {
    fn target(&self) -> LieGroup;
    fn eval(&self, p: &BundlePoint, u: &BundleTangent, v: &BundleTangent) -> AlgebraElement;
    fn is_zero(&self) -> bool {
        false
    }
}

/// p=(x,g), t ↦ g⁻¹·c_x(v) for the given G-action on the target algebra.
#[derive(Clone)]
pub struct LiftedOneForm {
    pub base: BaseOneForm,
    action: Arc<dyn FiberAction>,
}

#[derive(Clone)]
pub struct LiftedTwoForm {
    pub base: BaseTwoForm,
    action: Arc<dyn FiberAction>,
}

pub fn equivariant_lift_1(c: &BaseOneForm, action: Arc<dyn FiberAction>) -> LiftedOneForm {
    assert_eq!(c.target(), action.target(), "lift action on a different algebra");
    LiftedOneForm {
        base: c.clone(),
        action,
    }
}

pub fn equivariant_lift_2(b: &BaseTwoForm, action: Arc<dyn FiberAction>) -> LiftedTwoForm {
    assert_eq!(b.target(), action.target(), "lift action on a different algebra");
    LiftedTwoForm {
        base: b.clone(),
        action,
    }
}

/// Lift of an L(G)-valued form with the adjoint action.
pub fn adjoint_lift_1(c: &BaseOneForm, g: LieGroup) -> LiftedOneForm {
    equivariant_lift_1(c, Arc::new(AdjointAction(g)))
}

pub fn adjoint_lift_2(b: &BaseTwoForm, g: LieGroup) -> LiftedTwoForm {
    equivariant_lift_2(b, Arc::new(AdjointAction(g)))
}

impl LiftedOneForm {
    pub fn is_zero(&self) -> bool {
        self.base.is_zero()
    }

    pub fn action(&self) -> &Arc<dyn FiberAction> {
        &self.action
    }
}

impl LiftedTwoForm {
    pub fn action(&self) -> &Arc<dyn FiberAction> {
        &self.action
    }
}

impl BundleOneForm for LiftedOneForm {
    fn target(&self) -> LieGroup {
        self.base.target()
    }
    fn eval(&self, p: &BundlePoint, t: &BundleTangent) -> AlgebraElement {
        if self.base.is_zero() {
            return self.base.target().zero_algebra();
        }
        self.action.act_inv(&p.g, &self.base.eval(&p.x, &t.v))
    }
}

impl BundleTwoForm for LiftedTwoForm {
    fn target(&self) -> LieGroup {
        self.base.target()
    }
    fn eval(&self, p: &BundlePoint, u: &BundleTangent, v: &BundleTangent) -> AlgebraElement {
        if self.base.is_zero() {
            return self.base.target().zero_algebra();
        }
        self.action.act_inv(&p.g, &self.base.eval(&p.x, &u.v, &v.v))
    }
    fn is_zero(&self) -> bool {
        self.base.is_zero()
    }
}

// ---------------------------------------------------------------------------
// Presets

/// Parses a generator such as `e2`, `-e1` or `0.5*e1+e3` in the basis of `g`.
pub fn parse_generator(g: LieGroup, spec: &str) -> Result<AlgebraElement> {
    let bad = |reason: &str| Error::InvalidSpec {
        kind: "generator",
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let basis = g.basis();
    let mut out = g.zero_algebra();
    let normalized = spec.replace('-', "+-");
    for term in normalized.split('+').map(str::trim).filter(|t| !t.is_empty()) {
        let (coef, name) = match term.split_once('*') {
            Some((c, n)) => (c.trim().parse::<f64>().map_err(|_| bad("bad coefficient"))?, n.trim()),
            None => match term.strip_prefix('-') {
                Some(n) => (-1.0, n.trim()),
                None => (1.0, term),
            },
        };
        let k: usize = name
            .strip_prefix('e')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("expected e<k>"))?;
        if k == 0 || k > basis.len() {
            return Err(bad(&format!("{} has {} generators", g, basis.len())));
        }
        out += &basis[k - 1].scale(coef);
    }
    Ok(out)
}

fn parse_kv(spec: &str, body: &str, kind: &'static str) -> Result<Vec<(String, String)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::InvalidSpec {
                    kind,
                    spec: spec.to_string(),
                    reason: format!("expected key=value, got '{kv}'"),
                })
        })
        .collect()
}

fn parse_f64(spec: &str, kind: &'static str, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::InvalidSpec {
        kind,
        spec: spec.to_string(),
        reason: format!("'{s}' is not a number"),
    })
}

/// Compactly supported bump exp(1 − 1/(1−ρ²)) for ρ<1 (value 1 at the center).
pub fn bump(rho2: f64) -> f64 {
    if rho2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - rho2)).exp()
    }
}

/// Smooth scalar profiles used by the `smooth` presets.
fn smooth_profile(p: &[f64; 5], x: &[f64]) -> f64 {
    let x1 = x.first().copied().unwrap_or(0.0);
    let x2 = x.get(1).copied().unwrap_or(0.0);
    p[0] + p[1] * x1 + p[2] * x2 + p[3] * (x1 + 2.0 * x2).sin() + p[4] * (2.0 * x1 - x2).cos()
}

fn random_profiles(seed: u64, count: usize) -> Vec<[f64; 5]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut p = [0.0; 5];
            for v in p.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            p
        })
        .collect()
}

/// Parses a one-form preset:
/// `zero`, `const:<gen>[:<axis>]`, `x1dx2:<gen>`,
/// `gauss:a=<gen>,b=<gen>,cx=..,cy=..,r=..,amp=..`, `smooth:<seed>[:<scale>]`.
pub fn parse_one_form(spec: &str, chart: &ChartDomain, target: LieGroup) -> Result<BaseOneForm> {
    let spec = spec.trim();
    let d = chart.dim();
    let bad = |reason: String| Error::InvalidSpec {
        kind: "one-form",
        spec: spec.to_string(),
        reason,
    };
    let (head, body) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "zero" => Ok(BaseOneForm::zero(chart.clone(), target)),
        "const" => {
            let (gen, axis) = match body.rsplit_once(':') {
                Some((g, a)) => (g, a.parse::<usize>().map_err(|_| bad("bad axis".into()))?),
                None => (body, 1),
            };
            if axis == 0 || axis > d {
                return Err(bad(format!("axis {axis} outside 1..={d}")));
            }
            let xi = parse_generator(target, gen)?;
            Ok(BaseOneForm::new(chart.clone(), target, spec, move |_x: &[f64]| {
                let mut c = vec![target.zero_algebra(); d];
                c[axis - 1] = xi.clone();
                c
            }))
        }
        "x1dx2" => {
            if d < 2 {
                return Err(bad("needs a chart of dimension >= 2".into()));
            }
            let xi = parse_generator(target, body)?;
            Ok(BaseOneForm::new(chart.clone(), target, spec, move |x: &[f64]| {
                let mut c = vec![target.zero_algebra(); d];
                c[1] = xi.scale(x[0]);
                c
            }))
        }
        "gauss" => {
            if d < 2 {
                return Err(bad("needs a chart of dimension >= 2".into()));
            }
            let (mut a, mut b) = (target.basis()[0].clone(), target.zero_algebra());
            let (mut cx, mut cy, mut r, mut amp) = (0.0, 0.0, 1.0, 1.0);
            for (k, v) in parse_kv(spec, body, "one-form")? {
                match k.as_str() {
                    "a" => a = parse_generator(target, &v)?,
                    "b" => b = parse_generator(target, &v)?,
                    "cx" => cx = parse_f64(spec, "one-form", &v)?,
                    "cy" => cy = parse_f64(spec, "one-form", &v)?,
                    "r" => r = parse_f64(spec, "one-form", &v)?,
                    "amp" => amp = parse_f64(spec, "one-form", &v)?,
                    _ => return Err(bad(format!("unknown key '{k}'"))),
                }
            }
            if r <= 0.0 {
                return Err(bad("radius must be positive".into()));
            }
            Ok(BaseOneForm::new(chart.clone(), target, spec, move |x: &[f64]| {
                let rho2 = ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / (r * r);
                let f = amp * bump(rho2);
                let mut c = vec![target.zero_algebra(); d];
                c[0] = a.scale(f);
                c[1] = b.scale(f);
                c
            }))
        }
        "smooth" => {
            let mut parts = body.split(':');
            let seed: u64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("expected smooth:<seed>[:<scale>]".into()))?;
            let scale = match parts.next() {
                Some(s) => parse_f64(spec, "one-form", s)?,
                None => 1.0,
            };
            let basis = target.basis();
            let profiles = random_profiles(seed, d * basis.len());
            Ok(BaseOneForm::new(chart.clone(), target, spec, move |x: &[f64]| {
                (0..d)
                    .map(|i| {
                        let mut c = target.zero_algebra();
                        for (b, e) in basis.iter().enumerate() {
                            c += &e.scale(scale * smooth_profile(&profiles[i * basis.len() + b], x));
                        }
                        c
                    })
                    .collect()
            }))
        }
        _ => Err(Error::UnknownId {
            kind: "one-form preset",
            id: spec.to_string(),
        }),
    }
}

/// Parses a two-form preset: `zero`, `area:<gen>` (ξ dx₁∧dx₂), `smooth:<seed>[:<scale>]`.
pub fn parse_two_form(spec: &str, chart: &ChartDomain, target: LieGroup) -> Result<BaseTwoForm> {
    let spec = spec.trim();
    let d = chart.dim();
    let n = plane_count(d);
    let bad = |reason: String| Error::InvalidSpec {
        kind: "two-form",
        spec: spec.to_string(),
        reason,
    };
    let (head, body) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "zero" => Ok(BaseTwoForm::zero(chart.clone(), target)),
        "area" => {
            if d < 2 {
                return Err(bad("needs a chart of dimension >= 2".into()));
            }
            let xi = parse_generator(target, body)?;
            Ok(BaseTwoForm::new(chart.clone(), target, spec, move |_x: &[f64]| {
                let mut c = vec![target.zero_algebra(); n];
                c[0] = xi.clone();
                c
            }))
        }
        "smooth" => {
            let mut parts = body.split(':');
            let seed: u64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("expected smooth:<seed>[:<scale>]".into()))?;
            let scale = match parts.next() {
                Some(s) => parse_f64(spec, "two-form", s)?,
                None => 1.0,
            };
            let basis = target.basis();
            let profiles = random_profiles(seed.wrapping_add(0x5eed), n * basis.len());
            Ok(BaseTwoForm::new(chart.clone(), target, spec, move |x: &[f64]| {
                (0..n)
                    .map(|i| {
                        let mut c = target.zero_algebra();
                        for (b, e) in basis.iter().enumerate() {
                            c += &e.scale(scale * smooth_profile(&profiles[i * basis.len() + b], x));
                        }
                        c
                    })
                    .collect()
            }))
        }
        _ => Err(Error::UnknownId {
            kind: "two-form preset",
            id: spec.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> ChartDomain {
        ChartDomain::cube(2, -2.0, 2.0)
    }

    #[test]
    fn d_of_x1dx2_is_area() {
        let c = parse_one_form("x1dx2:e3", &chart(), LieGroup::So3).unwrap();
        let dc = exterior_derivative(&c, &[0.3, -0.2], &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((dc - LieGroup::So3.basis()[2].clone()).norm() < 1e-9);
    }

    #[test]
    fn d_is_antisymmetric_exactly() {
        let c = parse_one_form("smooth:3", &chart(), LieGroup::So3).unwrap();
        let v = [0.4, -1.3];
        let dc = exterior_derivative(&c, &[0.1, 0.2], &v, &v).unwrap();
        assert_eq!(dc.norm(), 0.0);
    }

    #[test]
    fn out_of_chart_is_reported() {
        let c = parse_one_form("smooth:3", &chart(), LieGroup::So3).unwrap();
        let err = exterior_derivative(&c, &[2.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::OutOfChart { .. }));
    }

    #[test]
    fn generator_parsing() {
        let x = parse_generator(LieGroup::So3, "0.5*e1-e3").unwrap();
        assert_eq!(LieGroup::So3.coords(&x), vec![0.5, 0.0, -1.0]);
        assert!(parse_generator(LieGroup::So2, "e2").is_err());
    }

    #[test]
    fn plane_indexing() {
        let d = 4;
        let mut k = 0;
        for i in 0..d {
            for j in (i + 1)..d {
                assert_eq!(plane_index(d, i, j), k);
                k += 1;
            }
        }
        assert_eq!(k, plane_count(d));
    }
}
