//! The bundle of Ā-horizontal paths: horizontal and tangent lifts, Chen
//! integrals, the connection ω and its parallel transport of paths of paths.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formset::FormSet;
use crate::geometry::{
    connection_eval, curvature, horizontal_tangent, BaseOneForm, BundleOneForm, BundlePoint, BundleTangent,
    BundleTwoForm,
};
use crate::integrate::{cumulative, group_fd_left, simpson, solve_right, solve_right_nodes, Integrator};
use crate::lie::{AlgebraElement, GroupElement, LieGroup};
use crate::path::{BasePathTangent, BundlePath, PathFamily, PathTangent, SampledPath, TimeGrid, COMPOSE_TOL};

/// Tolerance for projection checks (π(p₀) = γ(t₀) and similar).
pub const PROJECTION_TOL: f64 = 1e-9;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Ā-horizontal lift of `gamma` starting at `p0`: ġg⁻¹ = −a(γ′).
pub fn horizontal_lift(abar: &BaseOneForm, gamma: &SampledPath, p0: &BundlePoint, integrator: Integrator) -> Result<BundlePath> {
    if gamma.dim() != abar.dim() {
        return Err(Error::DimensionMismatch(format!(
            "path in R^{} against a form on R^{}",
            gamma.dim(),
            abar.dim()
        )));
    }
    if p0.g.group != abar.target() {
        return Err(Error::DimensionMismatch(format!(
            "initial point in {} for a connection valued in {}",
            p0.g.group,
            abar.target()
        )));
    }
    let gap = dist(&p0.x, gamma.initial());
    if gap > PROJECTION_TOL {
        return Err(Error::ProjectionMismatch(format!(
            "initial point lies {gap:.3e} away from the start of the path"
        )));
    }
    gamma.check_in_chart(abar.chart())?;
    let nodes: Vec<AlgebraElement> = gamma
        .points
        .iter()
        .zip(&gamma.velocities)
        .map(|(x, v)| -abar.eval(x, v))
        .collect();
    let mids: Vec<AlgebraElement> = (0..gamma.grid.n)
        .map(|i| {
            let (x, v) = gamma.midpoint(i);
            -abar.eval(&x, &v)
        })
        .collect();
    let g = solve_right(integrator, &nodes, &mids, gamma.grid.h(), &p0.g)?;
    let velocities = gamma
        .velocities
        .iter()
        .zip(&g)
        .zip(&nodes)
        .map(|((v, g), f)| BundleTangent::new(v.clone(), g.ad_inv(f)))
        .collect();
    let points = gamma
        .points
        .iter()
        .zip(g)
        .map(|(x, g)| BundlePoint::new(x.clone(), g))
        .collect();
    BundlePath::new(gamma.grid, points, velocities, gamma.margin)
}

/// ṽʰ: the Ā-horizontal vectors over `v` along `ovg`, node by node.
pub fn horizontal_field(abar: &BaseOneForm, ovg: &BundlePath, v: &BasePathTangent) -> Result<PathTangent> {
    ovg.grid.check_same(&v.grid)?;
    let vectors = ovg
        .points
        .iter()
        .zip(&v.vectors)
        .map(|(p, v)| horizontal_tangent(abar, p, v))
        .collect();
    PathTangent::new(ovg.grid, vectors)
}

/// F^Ā(ovg′, v̄) = Ad(g⁻¹)F_x(x′, v) along the path.
fn lifted_curvature(abar: &BaseOneForm, ovg: &BundlePath, v: &[Vec<f64>]) -> Result<Vec<AlgebraElement>> {
    ovg.points
        .iter()
        .zip(&ovg.velocities)
        .zip(v)
        .map(|((p, vel), v)| Ok(p.g.ad_inv(&curvature(abar, &p.x, &vel.v, v)?)))
        .collect()
}

/// max over interior nodes of ‖∂ₜĀ(v̄) − F^Ā(ovg′, v̄)‖.
pub fn tangency_residual(abar: &BaseOneForm, ovg: &BundlePath, vbar: &PathTangent) -> Result<f64> {
    ovg.grid.check_same(&vbar.grid)?;
    let vals: Vec<AlgebraElement> = ovg
        .points
        .iter()
        .zip(&vbar.vectors)
        .map(|(p, t)| connection_eval(abar, p, t))
        .collect();
    let base: Vec<Vec<f64>> = vbar.vectors.iter().map(|t| t.v.clone()).collect();
    let f = lifted_curvature(abar, ovg, &base)?;
    let h = ovg.grid.h();
    let mut worst: f64 = 0.0;
    for i in 1..ovg.grid.n {
        let d = (&vals[i + 1] - &vals[i - 1]).scale(0.5 / h);
        worst = worst.max((d - f[i].clone()).norm());
    }
    Ok(worst)
}

/// The tangent vector along `ovg` over `v` with initial value `vbar0`:
/// v̄(t) = ṽ(t)ʰ + ovg(t)Z(t), Z(t) = Ā(v̄₀) + ∫F^Ā(ovg′, ṽ).
pub fn tangent_lift(abar: &BaseOneForm, ovg: &BundlePath, v: &BasePathTangent, vbar0: &BundleTangent) -> Result<PathTangent> {
    ovg.grid.check_same(&v.grid)?;
    let gap = dist(&vbar0.v, &v.vectors[0]);
    if gap > PROJECTION_TOL {
        return Err(Error::ProjectionMismatch(format!(
            "initial tangent projects {gap:.3e} away from v(t0)"
        )));
    }
    let group = abar.target();
    let f = lifted_curvature(abar, ovg, &v.vectors)?;
    let z0 = connection_eval(abar, &ovg.points[0], vbar0);
    let z = cumulative(&f, ovg.grid.h(), group.zero_algebra());
    let vectors = ovg
        .points
        .iter()
        .zip(&v.vectors)
        .zip(z)
        .map(|((p, v), z)| {
            let mut w = -p.g.ad_inv(&abar.eval(&p.x, v));
            w += &z;
            w += &z0;
            BundleTangent::new(v.clone(), w)
        })
        .collect();
    PathTangent::new(ovg.grid, vectors)
}

/// ∫c(ovg′(t))dt by composite Simpson.
pub fn chen_integral_1(c: &dyn BundleOneForm, ovg: &BundlePath) -> AlgebraElement {
    let vals: Vec<AlgebraElement> = ovg.points.iter().zip(&ovg.velocities).map(|(p, t)| c.eval(p, t)).collect();
    simpson(&vals, ovg.grid.h())
}

/// ∫b(v̄(t), ovg′(t))dt by composite Simpson.
pub fn chen_integral_2(b: &dyn BundleTwoForm, ovg: &BundlePath, vbar: &PathTangent) -> Result<AlgebraElement> {
    ovg.grid.check_same(&vbar.grid)?;
    if b.is_zero() {
        return Ok(b.target().zero_algebra());
    }
    let vals: Vec<AlgebraElement> = ovg
        .points
        .iter()
        .zip(&ovg.velocities)
        .zip(&vbar.vectors)
        .map(|((p, dt), u)| b.eval(p, u, dt))
        .collect();
    Ok(simpson(&vals, ovg.grid.h()))
}

/// ω(v̄) = A(v̄(t₀)) + C₀ᴿ(v̄(t₁)) − C₀ᴸ(v̄(t₀)) + ∫B₀(v̄, ovg′).
pub fn omega_eval(fs: &FormSet, ovg: &BundlePath, vbar: &PathTangent) -> Result<AlgebraElement> {
    ovg.grid.check_same(&vbar.grid)?;
    let mut out = connection_eval(&fs.a, ovg.initial(), vbar.initial());
    out += &fs.c0r_lift().eval(ovg.terminal(), vbar.terminal());
    out = out - fs.c0l_lift().eval(ovg.initial(), vbar.initial());
    out += &chen_integral_2(&fs.b0_lift(), ovg, vbar)?;
    Ok(out)
}

/// The ω-horizontal tangent along `ovg` over the base field `v`.
pub fn omega_vector_lift(fs: &FormSet, ovg: &BundlePath, v: &BasePathTangent) -> Result<PathTangent> {
    let vh = horizontal_field(&fs.abar, ovg, v)?;
    let p0 = ovg.initial();
    let v0 = &v.vectors[0];
    let mut inner = p0.g.ad_inv(&(fs.a.eval(&p0.x, v0) - fs.abar.eval(&p0.x, v0)));
    inner += &fs.c0r_lift().eval(ovg.terminal(), vh.terminal());
    inner = inner - fs.c0l_lift().eval(p0, vh.initial());
    inner += &chen_integral_2(&fs.b0_lift(), ovg, &vh)?;
    let mut w0 = -p0.g.ad_inv(&fs.abar.eval(&p0.x, v0));
    w0 = w0 - inner;
    tangent_lift(&fs.abar, ovg, v, &BundleTangent::new(v0.clone(), w0))
}

/// ∂ₛ along every row of a family of bundle paths: the base part from the
/// family, the fiber part by finite differences across rows. When
/// `initial_column` is given its exact velocities replace the t₀ column.
pub fn s_tangents(fam: &PathFamily, rows: &[BundlePath], initial_column: Option<&BundlePath>) -> Result<Vec<PathTangent>> {
    if rows.len() != fam.s_grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} rows for {} s-nodes",
            rows.len(),
            fam.s_grid.len()
        )));
    }
    let hs = fam.s_grid.h();
    let nt = fam.t_grid.len();
    (0..rows.len())
        .into_par_iter()
        .map(|j| {
            let vectors = (0..nt)
                .map(|i| {
                    let w = match (i, initial_column) {
                        (0, Some(col)) => col.velocities[j].w.clone(),
                        _ => {
                            let column: Vec<&GroupElement> = rows.iter().map(|r| &r.points[i].g).collect();
                            group_fd_left(&column, j, hs)
                        }
                    };
                    BundleTangent::new(fam.ds[j][i].clone(), w)
                })
                .collect();
            PathTangent::new(fam.t_grid, vectors)
        })
        .collect()
}

/// Output of [`omega_transport`].
#[derive(Clone, Debug)]
pub struct OmegaTransport {
    pub s_grid: TimeGrid,
    /// A-horizontal lift of the initial-point path s ↦ Γ(t₀, s).
    pub initial_path: BundlePath,
    /// ovΓ_s: Ā-horizontal lifts of the rows.
    pub ovgamma: Vec<BundlePath>,
    /// a_s with a_{s₀} = e.
    pub a: Vec<GroupElement>,
    /// Γ̃_s = ovΓ_s·a_s.
    pub tilde: Vec<BundlePath>,
}

fn check_initial(fam: &PathFamily, init: &BundlePath) -> Result<()> {
    fam.t_grid.check_same(&init.grid)?;
    let gap = init
        .points
        .iter()
        .zip(&fam.points[0])
        .map(|(p, x)| dist(&p.x, x))
        .fold(0.0, f64::max);
    if gap > PROJECTION_TOL {
        return Err(Error::ProjectionMismatch(format!(
            "initial path lies {gap:.3e} away from the first row of the family"
        )));
    }
    Ok(())
}

/// Lifts every row of `fam` Ā-horizontally from the fiber values of
/// `initial_path` (one per s-node).
pub fn lift_rows(abar: &BaseOneForm, fam: &PathFamily, initial_path: &BundlePath, integrator: Integrator) -> Result<Vec<BundlePath>> {
    (0..fam.s_grid.len())
        .into_par_iter()
        .map(|j| {
            let row = fam.row(j);
            let p0 = BundlePoint::new(row.initial().to_vec(), initial_path.points[j].g.clone());
            horizontal_lift(abar, &row, &p0, integrator)
        })
        .collect()
}

/// ω-parallel transport of `init` along the family: ȧ_s a_s⁻¹ = −ω(∂ₛovΓ_s).
pub fn omega_transport(fs: &FormSet, fam: &PathFamily, init: &BundlePath, integrator: Integrator) -> Result<OmegaTransport> {
    fs.validate()?;
    check_initial(fam, init)?;
    let column = fam.column(0);
    let start = BundlePoint::new(column.initial().to_vec(), init.initial().g.clone());
    let initial_path = horizontal_lift(&fs.a, &column, &start, integrator)?;
    let ovgamma = lift_rows(&fs.abar, fam, &initial_path, integrator)?;
    let tangents = s_tangents(fam, &ovgamma, Some(&initial_path))?;
    let coeffs: Vec<AlgebraElement> = ovgamma
        .par_iter()
        .zip(&tangents)
        .map(|(row, t)| omega_eval(fs, row, t).map(|w| -w))
        .collect::<Result<_>>()?;
    let a = solve_right_nodes(integrator, &coeffs, fam.s_grid.h(), &fs.module.g.identity())?;
    let tilde = ovgamma.iter().zip(&a).map(|(row, a)| row.right(a)).collect();
    Ok(OmegaTransport {
        s_grid: fam.s_grid,
        initial_path,
        ovgamma,
        a,
        tilde,
    })
}

/// Terminal fiber coordinate of the horizontal lift of a loop.
pub fn loop_holonomy(abar: &BaseOneForm, lp: &SampledPath, g0: &GroupElement, integrator: Integrator) -> Result<GroupElement> {
    let gap = dist(lp.initial(), lp.terminal());
    if gap > COMPOSE_TOL {
        return Err(Error::NotALoop { gap });
    }
    let lift = horizontal_lift(abar, lp, &BundlePoint::new(lp.initial().to_vec(), g0.clone()), integrator)?;
    Ok(lift.terminal().g.clone())
}

/// Ā′-horizontal lift of π∘ovg from ovg(t₀), with the node-wise ratio
/// g(t) = ovg(t)⁻¹·lift(t) in the fiber.
pub fn connection_change(
    abar: &BaseOneForm,
    abar2: &BaseOneForm,
    ovg: &BundlePath,
    integrator: Integrator,
) -> Result<(BundlePath, Vec<GroupElement>)> {
    if abar.target() != abar2.target() {
        return Err(Error::DimensionMismatch("connections valued in different algebras".into()));
    }
    let lifted = horizontal_lift(abar2, &ovg.base(), ovg.initial(), integrator)?;
    let ratio = ovg
        .points
        .iter()
        .zip(&lifted.points)
        .map(|(p, q)| &p.g.inv() * &q.g)
        .collect();
    Ok((lifted, ratio))
}

/// μ(γ, p): the Ā-horizontal lift of γ from p.
pub fn mu(abar: &BaseOneForm, gamma: &SampledPath, p: &BundlePoint, integrator: Integrator) -> Result<BundlePath> {
    horizontal_lift(abar, gamma, p, integrator)
}

/// μ⁻¹(ovg) = (π∘ovg, ovg(t₀)).
pub fn mu_inverse(ovg: &BundlePath) -> (SampledPath, BundlePoint) {
    (ovg.base(), ovg.initial().clone())
}

type Gauge = dyn Fn(&[f64]) -> GroupElement + Send + Sync;

/// Local trivialization φ(x, g) = (x, σ(x)·g) of P over the chart.
#[derive(Clone)]
pub struct Trivialization {
    group: LieGroup,
    label: String,
    gauge: Arc<Gauge>,
}

impl std::fmt::Debug for Trivialization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Trivialization({})", self.label)
    }
}

impl Trivialization {
    pub fn identity(group: LieGroup) -> Self {
        Self {
            group,
            label: "identity".into(),
            gauge: Arc::new(move |_x: &[f64]| group.identity()),
        }
    }

    /// σ ≡ c.
    pub fn constant(c: GroupElement) -> Self {
        Self {
            group: c.group,
            label: "constant".into(),
            gauge: Arc::new(move |_x: &[f64]| c.clone()),
        }
    }

    /// σ(x) = exp(Σₖ (pₖ·x + qₖ) eₖ) with seeded coefficients.
    pub fn smooth(group: LieGroup, dim: usize, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<(Vec<f64>, f64)> = (0..group.dim())
            .map(|_| {
                let p = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                (p, rng.random_range(-1.0..1.0))
            })
            .collect();
        Self {
            group,
            label: format!("smooth:{seed}"),
            gauge: Arc::new(move |x: &[f64]| {
                let c: Vec<f64> = coeffs
                    .iter()
                    .map(|(p, q)| scale * (p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + q))
                    .collect();
                group.algebra_from_coords(&c).exp()
            }),
        }
    }

    pub fn group(&self) -> LieGroup {
        self.group
    }

    pub fn gauge(&self, x: &[f64]) -> GroupElement {
        (self.gauge)(x)
    }

    pub fn apply(&self, x: &[f64], g: &GroupElement) -> BundlePoint {
        BundlePoint::new(x.to_vec(), &self.gauge(x) * g)
    }

    pub fn invert(&self, p: &BundlePoint) -> (Vec<f64>, GroupElement) {
        (p.x.clone(), &self.gauge(&p.x).inv() * &p.g)
    }
}

/// φ⁰(γ, g): the Ā-horizontal lift of γ from φ(γ(t₀), g).
pub fn local_trivialization(
    triv: &Trivialization,
    abar: &BaseOneForm,
    gamma: &SampledPath,
    g: &GroupElement,
    integrator: Integrator,
) -> Result<BundlePath> {
    abar.chart().check(gamma.initial(), 0.0)?;
    horizontal_lift(abar, gamma, &triv.apply(gamma.initial(), g), integrator)
}

/// (φ⁰)⁻¹(ovg) = (π∘ovg, fiber coordinate of ovg(t₀) in φ).
pub fn local_trivialization_inverse(triv: &Trivialization, ovg: &BundlePath) -> (SampledPath, GroupElement) {
    let (_, g) = triv.invert(ovg.initial());
    (ovg.base(), g)
}

/// θ with φ⁰(γ, g) = ψ⁰(γ, θ·g); depends on γ(t₀) only.
pub fn transition(phi: &Trivialization, psi: &Trivialization, gamma: &SampledPath) -> GroupElement {
    let x0 = gamma.initial();
    &psi.gauge(x0).inv() * &phi.gauge(x0)
}
