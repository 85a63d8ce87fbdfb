//! The decorated bundle of pairs (ovg, h): its right action by H⋊G, the
//! connection Ω and its transport, the decoration h* with the shifted
//! connection Ω̂, the second-level decoration k*, the non-abelian Stokes check
//! and the holonomy-reduction experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formset::{B1Mode, B1Spec, FormSet, HigherForms};
use crate::geometry::{connection_eval, BaseOneForm, BundleOneForm, BundlePoint, BundleTwoForm};
use crate::integrate::{
    fd_derivative, lagrange_midpoints, simpson, solve_left, solve_right, solve_right_nodes, Integrator, Linear,
};
use crate::lie::{AlgebraElement, GroupElement, LieGroup};
use crate::module::{CrossedModule, SemidirectAlgebraElement, SemidirectElement};
use crate::path::{hermite_group, BundlePath, PathFamily, PathTangent, SampledPath, TimeGrid};
use crate::pathspace::{
    horizontal_lift, lift_rows, local_trivialization, local_trivialization_inverse, omega_eval, omega_transport,
    s_tangents, OmegaTransport, Trivialization,
};

/// A horizontal bundle path with an H-decoration.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoratedPoint {
    pub ovg: BundlePath,
    pub h: GroupElement,
}

/// Tangent v̄ + X·h at (ovg, h); `x` holds X (right-translated coordinates).
#[derive(Clone, Debug, PartialEq)]
pub struct DecoratedTangent {
    pub vbar: PathTangent,
    pub x: AlgebraElement,
}

impl DecoratedTangent {
    pub fn add(&self, other: &Self) -> Self {
        Self {
            vbar: self.vbar.add(&other.vbar),
            x: &self.x + &other.x,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            vbar: self.vbar.sub(&other.vbar),
            x: &self.x - &other.x,
        }
    }

    pub fn max_distance(&self, other: &Self) -> f64 {
        self.vbar.max_distance(&other.vbar) + (&self.x - &other.x).norm()
    }
}

fn check_module(module: &CrossedModule, p: &DecoratedPoint) -> Result<()> {
    if p.h.group != module.h || p.ovg.group() != module.g {
        return Err(Error::ModuleMismatch(format!(
            "decorated point in ({}, {}) for module {module}",
            p.ovg.group(),
            p.h.group
        )));
    }
    Ok(())
}

/// (ovg, h)·(h₁, g₁) = (ovg·g₁, α(g₁⁻¹)(h h₁)).
pub fn dec_right_action(module: &CrossedModule, p: &DecoratedPoint, a: &SemidirectElement) -> Result<DecoratedPoint> {
    check_module(module, p)?;
    if a.h.group != module.h || a.g.group != module.g {
        return Err(Error::ModuleMismatch("acting element outside H⋊G".into()));
    }
    Ok(DecoratedPoint {
        ovg: p.ovg.right(&a.g),
        h: module.alpha(&a.g.inv(), &(&p.h * &a.h)),
    })
}

/// Differential of the right action on a tangent: v̄ ↦ v̄·g₁, X ↦ α(g₁⁻¹)X.
pub fn dec_right_action_tangent(module: &CrossedModule, t: &DecoratedTangent, a: &SemidirectElement) -> DecoratedTangent {
    DecoratedTangent {
        vbar: t.vbar.right(&a.g),
        x: module.dalpha_inv(&a.g, &t.x),
    }
}

/// φ^dec(γ, (h, g)) = (φ⁰(γ, g), α(g⁻¹)(h)).
pub fn dec_trivialization(
    module: &CrossedModule,
    triv: &Trivialization,
    abar: &BaseOneForm,
    gamma: &SampledPath,
    a: &SemidirectElement,
    integrator: Integrator,
) -> Result<DecoratedPoint> {
    let ovg = local_trivialization(triv, abar, gamma, &a.g, integrator)?;
    Ok(DecoratedPoint {
        ovg,
        h: module.alpha(&a.g.inv(), &a.h),
    })
}

/// Inverse of [`dec_trivialization`].
pub fn dec_trivialization_inverse(
    module: &CrossedModule,
    triv: &Trivialization,
    p: &DecoratedPoint,
) -> (SampledPath, SemidirectElement) {
    let (gamma, g) = local_trivialization_inverse(triv, &p.ovg);
    let h = module.alpha(&g, &p.h);
    (gamma, SemidirectElement { h, g })
}

/// The fundamental vector field of (Y₁, Z₁) at (ovg, h): v̄ = ovg·Z₁ and
/// X = Ad(h)(Y₁ − δ_{h⁻¹}(Z₁)).
pub fn vertical_vector(module: &CrossedModule, p: &DecoratedPoint, xi: &SemidirectAlgebraElement) -> Result<DecoratedTangent> {
    check_module(module, p)?;
    let hinv = p.h.inv();
    let x = p.h.ad(&(&xi.y - &module.delta(&hinv, &xi.z)));
    Ok(DecoratedTangent {
        vbar: PathTangent::vertical(&p.ovg, &xi.z),
        x,
    })
}

/// K(v̄) = C₁ᴿ(v̄(t₁)) − C₁ᴸ(v̄(t₀)) + ∫B₁(v̄, ovg′).
fn k_term(fs: &FormSet, ovg: &BundlePath, vbar: &PathTangent) -> Result<AlgebraElement> {
    let mut k = fs.c1r_lift().eval(ovg.terminal(), vbar.terminal());
    k = k - fs.c1l_lift().eval(ovg.initial(), vbar.initial());
    k += &crate::pathspace::chen_integral_2(fs.b1_form().as_ref(), ovg, vbar)?;
    Ok(k)
}

fn h_inverse(module: &CrossedModule, h: &GroupElement) -> SemidirectElement {
    SemidirectElement {
        h: h.inv(),
        g: module.g.identity(),
    }
}

/// Ω(v̄ + Xh) = Ad((h⁻¹, e))[(K(v̄) + X, ω(v̄))].
pub fn omega_dec_eval(fs: &FormSet, p: &DecoratedPoint, t: &DecoratedTangent) -> Result<SemidirectAlgebraElement> {
    check_module(&fs.module, p)?;
    let z = omega_eval(fs, &p.ovg, &t.vbar)?;
    let y = k_term(fs, &p.ovg, &t.vbar)? + t.x.clone();
    Ok(fs
        .module
        .sd_adjoint(&h_inverse(&fs.module, &p.h), &SemidirectAlgebraElement { y, z }))
}

/// Splits a tangent into its Ω-horizontal and vertical parts (v̂ᴴ, v̂ⱽ) with
/// v̂ⱽ the fundamental field of Ω(t).
pub fn omega_split(fs: &FormSet, p: &DecoratedPoint, t: &DecoratedTangent) -> Result<(DecoratedTangent, DecoratedTangent)> {
    let vert = vertical_vector(&fs.module, p, &omega_dec_eval(fs, p, t)?)?;
    Ok((t.sub(&vert), vert))
}

/// B₁(∂ₛ, ∂ₜ) at every node of a family of bundle paths, for any B₁ spec.
pub fn b1_family_integrand(fs: &FormSet, fam: &PathFamily, rows: &[BundlePath], tangents: &[PathTangent]) -> Result<Vec<Vec<AlgebraElement>>> {
    match &fs.b1 {
        B1Spec::Derived {
            mode: B1Mode::Pullback,
            sign,
        } => {
            let f = pullback_curvature(&fs.module, &fs.c1, fam, rows)?;
            Ok(f.into_iter()
                .map(|r| r.into_iter().map(|x| x.scale(-sign)).collect())
                .collect())
        }
        _ => {
            let b1 = fs.b1_form();
            Ok(rows
                .par_iter()
                .zip(tangents)
                .map(|(row, tan)| {
                    row.points
                        .iter()
                        .zip(&tan.vectors)
                        .zip(&row.velocities)
                        .map(|((p, u), dt)| b1.eval(p, u, dt))
                        .collect()
                })
                .collect())
        }
    }
}

/// F̃(∂ₛ,∂ₜ) = ∂ₛ[C̃(∂ₜ)] − ∂ₜ[C̃(∂ₛ)] + [C̃(∂ₛ), C̃(∂ₜ)] for C̃ = Γ̃*C₁,
/// with both derivatives by finite differences on the parameter grid.
pub fn pullback_curvature(module: &CrossedModule, c1: &BaseOneForm, fam: &PathFamily, rows: &[BundlePath]) -> Result<Vec<Vec<AlgebraElement>>> {
    if rows.len() != fam.s_grid.len() {
        return Err(Error::GridMismatch(format!("{} rows for {} s-nodes", rows.len(), fam.s_grid.len())));
    }
    let nt = fam.t_grid.len();
    let lifted = |j: usize, i: usize, v: &[f64]| {
        let p = &rows[j].points[i];
        module.dalpha_inv(&p.g, &c1.eval(&p.x, v))
    };
    let ct: Vec<Vec<AlgebraElement>> = (0..rows.len())
        .map(|j| (0..nt).map(|i| lifted(j, i, &rows[j].velocities[i].v)).collect())
        .collect();
    let cs: Vec<Vec<AlgebraElement>> = (0..rows.len())
        .map(|j| (0..nt).map(|i| lifted(j, i, &fam.ds[j][i])).collect())
        .collect();
    let (hs, ht) = (fam.s_grid.h(), fam.t_grid.h());
    Ok((0..rows.len())
        .into_par_iter()
        .map(|j| {
            (0..nt)
                .map(|i| {
                    let column: Vec<AlgebraElement> = stencil_column(&ct, i, j);
                    let ds_ct = fd_derivative(&column, stencil_index(j, ct.len()), hs);
                    let dt_cs = fd_derivative(&cs[j], i, ht);
                    ds_ct - dt_cs + cs[j][i].bracket(&ct[j][i])
                })
                .collect()
        })
        .collect())
}

/// The (at most three) column entries a second-order stencil at `j` needs.
fn stencil_column(grid: &[Vec<AlgebraElement>], i: usize, j: usize) -> Vec<AlgebraElement> {
    let n = grid.len();
    let range = if n <= 3 {
        0..n
    } else if j == 0 {
        0..3
    } else if j == n - 1 {
        n - 3..n
    } else {
        j - 1..j + 2
    };
    range.map(|k| grid[k][i].clone()).collect()
}

fn stencil_index(j: usize, n: usize) -> usize {
    if n <= 3 {
        j
    } else if j == 0 {
        0
    } else if j == n - 1 {
        2
    } else {
        1
    }
}

/// Output of [`omega_dec_transport`].
#[derive(Clone, Debug)]
pub struct DecoratedTransport {
    pub omega: OmegaTransport,
    /// ∂ₛΓ̃_s along every row.
    pub tangents: Vec<PathTangent>,
    /// h_s.
    pub h: Vec<GroupElement>,
}

impl DecoratedTransport {
    pub fn points(&self) -> Vec<DecoratedPoint> {
        self.omega
            .tilde
            .iter()
            .zip(&self.h)
            .map(|(ovg, h)| DecoratedPoint {
                ovg: ovg.clone(),
                h: h.clone(),
            })
            .collect()
    }
}

/// Ω-parallel transport: the G-part as in [`omega_transport`] and
/// ḣ_s h_s⁻¹ = −K(∂ₛΓ̃_s).
pub fn omega_dec_transport(fs: &FormSet, fam: &PathFamily, init: &DecoratedPoint, integrator: Integrator) -> Result<DecoratedTransport> {
    check_module(&fs.module, init)?;
    let omega = omega_transport(fs, fam, &init.ovg, integrator)?;
    let tangents = s_tangents(fam, &omega.tilde, None)?;
    let b1 = b1_family_integrand(fs, fam, &omega.tilde, &tangents)?;
    let ht = fam.t_grid.h();
    let (c1l, c1r) = (fs.c1l_lift(), fs.c1r_lift());
    let coeffs: Vec<AlgebraElement> = omega
        .tilde
        .iter()
        .zip(&tangents)
        .zip(&b1)
        .map(|((row, tan), b)| {
            let mut k = c1r.eval(row.terminal(), tan.terminal());
            k = k - c1l.eval(row.initial(), tan.initial());
            k += &simpson(b, ht);
            -k
        })
        .collect();
    let h = solve_right_nodes(integrator, &coeffs, fam.s_grid.h(), &init.h)?;
    Ok(DecoratedTransport { omega, tangents, h })
}

/// Running decoration along a bundle path.
#[derive(Clone, Debug)]
pub struct Decoration {
    /// h(t) with h′h⁻¹ = −α(g⁻¹)c₁(x′), h(t₀) = e.
    pub h_path: Vec<GroupElement>,
    pub h_star: GroupElement,
    /// τ(h*).
    pub g_star: GroupElement,
}

impl Decoration {
    /// Running g(t) = τ(h(t)).
    pub fn g_path(&self, module: &CrossedModule) -> Vec<GroupElement> {
        self.h_path.iter().map(|h| module.tau(h)).collect()
    }
}

/// h*(ovg): terminal value of h′h⁻¹ = −C₁(ovg′) with C₁ lifted through α.
pub fn decoration_hstar(module: &CrossedModule, c1: &BaseOneForm, ovg: &BundlePath, integrator: Integrator) -> Result<Decoration> {
    if c1.target() != module.h || ovg.group() != module.g {
        return Err(Error::ModuleMismatch(format!("decoration form in {} for module {module}", c1.target())));
    }
    let h_path = if c1.is_zero() {
        vec![module.h.identity(); ovg.len()]
    } else {
        let nodes: Vec<AlgebraElement> = ovg
            .points
            .iter()
            .zip(&ovg.velocities)
            .map(|(p, v)| -module.dalpha_inv(&p.g, &c1.eval(&p.x, &v.v)))
            .collect();
        let mids: Vec<AlgebraElement> = (0..ovg.grid.n)
            .map(|i| {
                let (p, v) = ovg.midpoint(i);
                -module.dalpha_inv(&p.g, &c1.eval(&p.x, &v.v))
            })
            .collect();
        solve_right(integrator, &nodes, &mids, ovg.grid.h(), &module.h.identity())?
    };
    let h_star = h_path[h_path.len() - 1].clone();
    let g_star = module.tau(&h_star);
    Ok(Decoration { h_path, h_star, g_star })
}

/// Distance between the terminal fiber points of the (Ā + τC₁)-horizontal
/// lift and of the Ā-horizontal lift shifted by τ(h*).
pub fn endpoint_shift_residual(
    module: &CrossedModule,
    abar: &BaseOneForm,
    c1: &BaseOneForm,
    gamma: &SampledPath,
    u: &BundlePoint,
    integrator: Integrator,
) -> Result<f64> {
    let ovg = horizontal_lift(abar, gamma, u, integrator)?;
    let m = *module;
    let ahat = abar.plus(&c1.mapped(m.g, move |y| m.dtau(y)));
    let hat = horizontal_lift(&ahat, gamma, u, integrator)?;
    let dec = decoration_hstar(module, c1, &ovg, integrator)?;
    let shifted = &ovg.terminal().g * &dec.g_star;
    Ok(hat.terminal().g.distance(&shifted))
}

/// Ω̂(v̄ + Xh) with the running decoration of ovg.
pub fn hat_omega_eval(fs: &FormSet, p: &DecoratedPoint, t: &DecoratedTangent, integrator: Integrator) -> Result<SemidirectAlgebraElement> {
    check_module(&fs.module, p)?;
    let m = &fs.module;
    let ovg = &p.ovg;
    let vbar = &t.vbar;
    ovg.grid.check_same(&vbar.grid)?;
    let dec = decoration_hstar(m, &fs.c1, ovg, integrator)?;
    let g_run = dec.g_path(m);
    let h = ovg.grid.h();
    let (b0, b1) = (fs.b0_lift(), fs.b1_form());
    let b0_vals: Vec<AlgebraElement> = (0..ovg.len())
        .map(|i| g_run[i].ad_inv(&b0.eval(&ovg.points[i], &vbar.vectors[i], &ovg.velocities[i])))
        .collect();
    let b1_vals: Vec<AlgebraElement> = (0..ovg.len())
        .map(|i| m.dalpha_inv(&g_run[i], &b1.eval(&ovg.points[i], &vbar.vectors[i], &ovg.velocities[i])))
        .collect();
    let mut z = connection_eval(&fs.abar, ovg.initial(), vbar.initial());
    z += &dec.g_star.ad_inv(&fs.c0r_lift().eval(ovg.terminal(), vbar.terminal()));
    z = z - fs.c0l_lift().eval(ovg.initial(), vbar.initial());
    z += &simpson(&b0_vals, h);
    let mut y = m.dalpha_inv(&dec.g_star, &fs.c1r_lift().eval(ovg.terminal(), vbar.terminal()));
    y = y - fs.c1l_lift().eval(ovg.initial(), vbar.initial());
    y += &simpson(&b1_vals, h);
    y += &t.x;
    Ok(m.sd_adjoint(&h_inverse(m, &p.h), &SemidirectAlgebraElement { y, z }))
}

/// Output of [`hat_omega_transport`].
#[derive(Clone, Debug)]
pub struct HatTransport {
    pub s_grid: TimeGrid,
    pub ovgamma: Vec<BundlePath>,
    pub a: Vec<GroupElement>,
    pub tilde: Vec<BundlePath>,
    /// ∂ₛΓ̃_s along every row.
    pub tangents: Vec<PathTangent>,
    /// x_s.
    pub x: Vec<GroupElement>,
}

/// Ω̂-parallel transport with A = Ā: the initial-point path and the rows are
/// Ā-horizontal, a_s solves the shifted G-equation on ovΓ_s and x_s the
/// shifted H-equation on Γ̃_s, both with running decorations.
pub fn hat_omega_transport(fs: &FormSet, fam: &PathFamily, init: &DecoratedPoint, integrator: Integrator) -> Result<HatTransport> {
    fs.validate()?;
    check_module(&fs.module, init)?;
    let m = fs.module;
    fam.t_grid.check_same(&init.ovg.grid)?;
    let column = fam.column(0);
    let start = BundlePoint::new(column.initial().to_vec(), init.ovg.initial().g.clone());
    let initial_path = horizontal_lift(&fs.abar, &column, &start, integrator)?;
    let ovgamma = lift_rows(&fs.abar, fam, &initial_path, integrator)?;
    let ov_tangents = s_tangents(fam, &ovgamma, Some(&initial_path))?;
    let ht = fam.t_grid.h();
    let b0 = fs.b0_lift();
    let (c0l, c0r) = (fs.c0l_lift(), fs.c0r_lift());
    let g_coeffs: Vec<AlgebraElement> = ovgamma
        .par_iter()
        .zip(&ov_tangents)
        .map(|(row, tan)| {
            let dec = decoration_hstar(&m, &fs.c1, row, integrator)?;
            let g_run = dec.g_path(&m);
            let vals: Vec<AlgebraElement> = (0..row.len())
                .map(|i| g_run[i].ad_inv(&b0.eval(&row.points[i], &tan.vectors[i], &row.velocities[i])))
                .collect();
            let mut z = connection_eval(&fs.abar, row.initial(), tan.initial());
            z += &dec.g_star.ad_inv(&c0r.eval(row.terminal(), tan.terminal()));
            z = z - c0l.eval(row.initial(), tan.initial());
            z += &simpson(&vals, ht);
            Ok(-z)
        })
        .collect::<Result<_>>()?;
    let a = solve_right_nodes(integrator, &g_coeffs, fam.s_grid.h(), &m.g.identity())?;
    let tilde: Vec<BundlePath> = ovgamma.iter().zip(&a).map(|(row, a)| row.right(a)).collect();
    let tangents = s_tangents(fam, &tilde, None)?;
    let b1 = b1_family_integrand(fs, fam, &tilde, &tangents)?;
    let (c1l, c1r) = (fs.c1l_lift(), fs.c1r_lift());
    let h_coeffs: Vec<AlgebraElement> = tilde
        .par_iter()
        .zip(&tangents)
        .zip(&b1)
        .map(|((row, tan), b)| {
            let dec = decoration_hstar(&m, &fs.c1, row, integrator)?;
            let g_run = dec.g_path(&m);
            let vals: Vec<AlgebraElement> = b.iter().zip(&g_run).map(|(b, g)| m.dalpha_inv(g, b)).collect();
            let mut y = m.dalpha_inv(&dec.g_star, &c1r.eval(row.terminal(), tan.terminal()));
            y = y - c1l.eval(row.initial(), tan.initial());
            y += &simpson(&vals, ht);
            Ok(-y)
        })
        .collect::<Result<_>>()?;
    let x = solve_right_nodes(integrator, &h_coeffs, fam.s_grid.h(), &init.h)?;
    Ok(HatTransport {
        s_grid: fam.s_grid,
        ovgamma,
        a,
        tilde,
        tangents,
        x,
    })
}

/// Ad(h*⁻¹)C₁(∂ₛΓ̃(t₁)) − C₁(∂ₛΓ̃(t₀)) + ∫Ad(h(u)⁻¹)F̃(∂ₛ,∂ₜ)du for every row of
/// the family `tilde`, with F̃ from [`pullback_curvature`]. This is the
/// right-trivialized s-derivative ∂ₛ(h*⁻¹)·h* of the inverse decoration.
pub fn decoration_variation(
    module: &CrossedModule,
    c1: &BaseOneForm,
    fam: &PathFamily,
    tilde: &[BundlePath],
    integrator: Integrator,
) -> Result<Vec<AlgebraElement>> {
    let tangents = s_tangents(fam, tilde, None)?;
    let f = pullback_curvature(module, c1, fam, tilde)?;
    let ht = fam.t_grid.h();
    tilde
        .par_iter()
        .zip(&tangents)
        .zip(&f)
        .map(|((row, tan), f)| {
            let dec = decoration_hstar(module, c1, row, integrator)?;
            let end = |i: usize| {
                let p = &row.points[i];
                module.dalpha_inv(&p.g, &c1.eval(&p.x, &tan.vectors[i].v))
            };
            let vals: Vec<AlgebraElement> = f.iter().zip(&dec.h_path).map(|(f, h)| h.ad_inv(f)).collect();
            let mut out = dec.h_star.ad_inv(&end(row.len() - 1));
            out = out - end(0);
            out += &simpson(&vals, ht);
            Ok(out)
        })
        .collect()
}

/// Right-trivialized s-derivative ∂ₛ(h*⁻¹)·h* of the inverse decoration of a
/// family, by central differences of the decorations (one-sided at the ends).
pub fn decoration_variation_fd(
    module: &CrossedModule,
    c1: &BaseOneForm,
    s_grid: &TimeGrid,
    tilde: &[BundlePath],
    integrator: Integrator,
) -> Result<Vec<AlgebraElement>> {
    let hinv: Vec<GroupElement> = tilde
        .par_iter()
        .map(|row| decoration_hstar(module, c1, row, integrator).map(|d| d.h_star.inv()))
        .collect::<Result<_>>()?;
    let mats: Vec<AlgebraElement> = hinv
        .iter()
        .map(|g| AlgebraElement {
            group: g.group,
            data: g.data.clone(),
        })
        .collect();
    Ok((0..hinv.len())
        .map(|j| {
            let d = fd_derivative(&mats, j, s_grid.h());
            if module.h.is_translation() {
                d
            } else {
                module
                    .h
                    .algebra_from_matrix(d.data * hinv[j].inv().data)
                    .expect("matching shapes")
            }
        })
        .collect())
}

/// Outcome of the reduction experiment on one grid.
#[derive(Clone, Debug)]
pub struct ReductionOutcome {
    /// sup over s of d(x_s, h*(Γ̃_s)⁻¹).
    pub residual: f64,
    pub per_s: Vec<f64>,
    pub transport: HatTransport,
}

/// Runs Ω̂-transport from (ovg, h*(ovg)⁻¹), where ovg is the Ā-horizontal lift
/// of the first row from `g0`, and compares x_s with h*(Γ̃_s)⁻¹.
pub fn reduction_residual(fs: &FormSet, fam: &PathFamily, g0: &GroupElement, integrator: Integrator) -> Result<ReductionOutcome> {
    let m = fs.module;
    let row = fam.row(0);
    let ovg = horizontal_lift(&fs.abar, &row, &BundlePoint::new(row.initial().to_vec(), g0.clone()), integrator)?;
    let h0 = decoration_hstar(&m, &fs.c1, &ovg, integrator)?.h_star.inv();
    let transport = hat_omega_transport(fs, fam, &DecoratedPoint { ovg, h: h0 }, integrator)?;
    let per_s: Vec<f64> = transport
        .tilde
        .par_iter()
        .zip(&transport.x)
        .map(|(row, x)| decoration_hstar(&m, &fs.c1, row, integrator).map(|d| x.distance(&d.h_star.inv())))
        .collect::<Result<_>>()?;
    let residual = per_s.iter().copied().fold(0.0, f64::max);
    Ok(ReductionOutcome {
        residual,
        per_s,
        transport,
    })
}

/// C^dec(v̄ + Xh) = α₂((h⁻¹, e))[C₂ᴿ(v̄(t₁)) − C₂ᴸ(v̄(t₀)) + ∫D(v̄, ovg′)].
pub fn cdec_eval(fs: &FormSet, p: &DecoratedPoint, t: &DecoratedTangent) -> Result<AlgebraElement> {
    let hf = higher(fs)?;
    let inner = cdec_inner(hf, &p.ovg, &t.vbar)?;
    Ok(hf.second.act_sd(&h_inverse(&fs.module, &p.h), &inner))
}

fn higher(fs: &FormSet) -> Result<&HigherForms> {
    fs.higher
        .as_ref()
        .ok_or_else(|| Error::ModuleMismatch("no second crossed module registered".into()))
}

fn cdec_inner(hf: &HigherForms, ovg: &BundlePath, vbar: &PathTangent) -> Result<AlgebraElement> {
    let mut c = hf.c2r_lift().eval(ovg.terminal(), vbar.terminal());
    c = c - hf.c2l_lift().eval(ovg.initial(), vbar.initial());
    c += &crate::pathspace::chen_integral_2(&hf.d_lift(), ovg, vbar)?;
    Ok(c)
}

/// Ω^dec = Ω + dτ₂(C^dec).
pub fn omega_decorated_eval(fs: &FormSet, p: &DecoratedPoint, t: &DecoratedTangent) -> Result<SemidirectAlgebraElement> {
    let hf = higher(fs)?;
    let omega = omega_dec_eval(fs, p, t)?;
    let c = cdec_eval(fs, p, t)?;
    Ok(omega.add(&hf.second.dtau2(&fs.module, &c)))
}

/// Second-level decoration along an Ω-horizontal trajectory.
#[derive(Clone, Debug)]
pub struct KStar {
    pub k: Vec<GroupElement>,
    pub k_star: GroupElement,
}

/// k̇_s k_s⁻¹ = −C^dec(∂ₛΓ̃_s, ḣ_s), k_{s₀} = e.
pub fn higher_decoration_kstar(fs: &FormSet, traj: &DecoratedTransport, integrator: Integrator) -> Result<KStar> {
    let hf = higher(fs)?;
    let coeffs: Vec<AlgebraElement> = traj
        .omega
        .tilde
        .iter()
        .zip(&traj.tangents)
        .zip(&traj.h)
        .map(|((row, tan), h)| {
            let inner = cdec_inner(hf, row, tan)?;
            Ok(-hf.second.act_sd(&h_inverse(&fs.module, h), &inner))
        })
        .collect::<Result<_>>()?;
    let k = solve_right_nodes(integrator, &coeffs, traj.omega.s_grid.h(), &hf.second.k.identity())?;
    let k_star = k[k.len() - 1].clone();
    Ok(KStar { k, k_star })
}

/// Smooth algebra-valued field on the parameter square:
/// E(t,s) = scale·Σₖ (p₀ + p₁t + p₂s + p₃ sin(πt + 2s) + p₄ cos(2t − πs)) eₖ.
pub fn smooth_field(group: LieGroup, seed: u64, scale: f64) -> impl Fn(f64, f64) -> AlgebraElement + Send + Sync {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<[f64; 5]> = (0..group.dim())
        .map(|_| {
            let mut p = [0.0; 5];
            for v in p.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            p
        })
        .collect();
    move |t: f64, s: f64| {
        use std::f64::consts::PI;
        let c: Vec<f64> = coeffs
            .iter()
            .map(|p| {
                scale
                    * (p[0] + p[1] * t + p[2] * s + p[3] * (PI * t + 2.0 * s).sin() + p[4] * (2.0 * t - PI * s).cos())
            })
            .collect();
        group.algebra_from_coords(&c)
    }
}

/// Residual of ḃ_s b_s⁻¹ = ∫Ad(b_s(u))Ė_s(u)du for b_s⁻¹b_s′ = E_s, b_s(t₀) = e,
/// maximized over the interior s-nodes and all t-nodes. ḃ and Ė use central
/// differences in s; the integral uses Simpson on each t-interval.
pub fn nonabelian_stokes_residual<E>(
    field: E,
    group: LieGroup,
    t_grid: TimeGrid,
    s_grid: TimeGrid,
    integrator: Integrator,
) -> Result<f64>
where
    E: Fn(f64, f64) -> AlgebraElement + Sync,
{
    if s_grid.n < 2 {
        return Err(Error::GridMismatch("the s-grid needs at least three nodes".into()));
    }
    let ht = t_grid.h();
    let hs = s_grid.h();
    let ts = t_grid.nodes();
    let ss = s_grid.nodes();
    let e_nodes: Vec<Vec<AlgebraElement>> = ss.iter().map(|&s| ts.iter().map(|&t| field(t, s)).collect()).collect();
    let e_mids: Vec<Vec<AlgebraElement>> = ss
        .iter()
        .map(|&s| ts[..t_grid.n].iter().map(|&t| field(t + 0.5 * ht, s)).collect())
        .collect();
    let b: Vec<Vec<GroupElement>> = (0..ss.len())
        .into_par_iter()
        .map(|j| solve_left(integrator, &e_nodes[j], &e_mids[j], ht, &group.identity()))
        .collect::<Result<_>>()?;
    let worst = (1..s_grid.n)
        .into_par_iter()
        .map(|j| {
            let c = 0.5 / hs;
            let de = |grid: &Vec<Vec<AlgebraElement>>, i: usize| {
                AlgebraElement::combine(&[(c, &grid[j + 1][i]), (-c, &grid[j - 1][i])])
            };
            let mut rhs = group.zero_algebra();
            let mut worst: f64 = 0.0;
            for i in 0..ts.len() {
                if i > 0 {
                    let (bm, _) = hermite_group(&b[j][i - 1], &e_nodes[j][i - 1], &b[j][i], &e_nodes[j][i], ht);
                    let f0 = b[j][i - 1].ad(&de(&e_nodes, i - 1));
                    let fm = bm.ad(&de(&e_mids, i - 1));
                    let f1 = b[j][i].ad(&de(&e_nodes, i));
                    rhs = AlgebraElement::combine(&[(1.0, &rhs), (ht / 6.0, &f0), (4.0 * ht / 6.0, &fm), (ht / 6.0, &f1)]);
                }
                let ratio = &b[j + 1][i] * &b[j - 1][i].inv();
                let lhs = ratio.log()?.scale(c);
                worst = worst.max((lhs - rhs.clone()).norm());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(worst)
}

/// Interval midpoints for coefficient samples in s, re-exported for callers
/// that assemble their own s-equations.
pub fn s_midpoints(values: &[AlgebraElement]) -> Vec<AlgebraElement> {
    lagrange_midpoints(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{parse_one_form, parse_two_form, ChartDomain};
    use crate::path::{parse_family, parse_path, DEFAULT_MARGIN};

    fn chart() -> ChartDomain {
        ChartDomain::cube(2, -2.0, 2.0)
    }

    fn lifted_point(fs: &FormSet, n: usize) -> DecoratedPoint {
        let gamma = parse_path("segment:0.1,0.2:0.9,0.6", TimeGrid::unit(n), DEFAULT_MARGIN).unwrap();
        let g0 = fs.module.g.algebra_from_coords(&vec![0.3; fs.module.g.dim()]).exp();
        let ovg = horizontal_lift(&fs.abar, &gamma, &BundlePoint::new(gamma.initial().to_vec(), g0), Integrator::Rk4Mk).unwrap();
        let h = fs.module.h.algebra_from_coords(&vec![0.2; fs.module.h.dim()]).exp();
        DecoratedPoint { ovg, h }
    }

    #[test]
    fn abelian_stokes_is_exact() {
        let g = LieGroup::Transl(2);
        let r = nonabelian_stokes_residual(smooth_field(g, 7, 1.0), g, TimeGrid::unit(40), TimeGrid::unit(30), Integrator::Rk4Mk).unwrap();
        assert!(r < 1e-11, "{r}");
    }

    #[test]
    fn endpoint_shift_is_small() {
        let m = CrossedModule::conjugation(LieGroup::So3);
        let abar = parse_one_form("smooth:1:0.4", &chart(), m.g).unwrap();
        let c1 = parse_one_form("smooth:2:0.4", &chart(), m.h).unwrap();
        let gamma = parse_path("segment:0,0:1,0.5", TimeGrid::unit(200), DEFAULT_MARGIN).unwrap();
        let u = BundlePoint::new(vec![0.0, 0.0], m.g.identity());
        let r = endpoint_shift_residual(&m, &abar, &c1, &gamma, &u, Integrator::Rk4Mk).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn vertical_vectors_are_reproduced() {
        let m = CrossedModule::conjugation(LieGroup::So3);
        let mut fs = FormSet::zero(m, chart());
        fs.abar = parse_one_form("smooth:1:0.5", &chart(), m.g).unwrap();
        fs.a = parse_one_form("smooth:3:0.5", &chart(), m.g).unwrap();
        fs.b0 = parse_two_form("smooth:4", &chart(), m.g).unwrap();
        fs.b1 = B1Spec::Form(parse_two_form("smooth:5", &chart(), m.h).unwrap());
        fs.c1l = parse_one_form("smooth:6", &chart(), m.h).unwrap();
        fs.c1r = parse_one_form("smooth:7", &chart(), m.h).unwrap();
        let p = lifted_point(&fs, 60);
        let xi = SemidirectAlgebraElement {
            y: m.h.algebra_from_coords(&[0.3, -0.1, 0.7]),
            z: m.g.algebra_from_coords(&[-0.4, 0.2, 0.5]),
        };
        let t = vertical_vector(&m, &p, &xi).unwrap();
        let back = omega_dec_eval(&fs, &p, &t).unwrap();
        assert!(back.sub(&xi).norm() < 1e-12, "{}", back.sub(&xi).norm());
        let (hor, vert) = omega_split(&fs, &p, &t).unwrap();
        assert!(hor.add(&vert).max_distance(&t) < 1e-14);
        assert!(omega_dec_eval(&fs, &p, &hor).unwrap().norm() < 1e-12);
    }

    #[test]
    fn flat_transport_collapses_to_identity() {
        let m = CrossedModule::vector(LieGroup::So2, 2).unwrap();
        let mut fs = FormSet::zero(m, chart());
        fs.abar = parse_one_form("const:e1", &chart(), m.g).unwrap();
        fs.a = fs.abar.clone();
        let fam = parse_family("sheet:0,0:1,1", TimeGrid::unit(30), TimeGrid::unit(20), DEFAULT_MARGIN).unwrap();
        let row = fam.row(0);
        let ovg = horizontal_lift(&fs.abar, &row, &BundlePoint::new(row.initial().to_vec(), m.g.identity()), Integrator::Rk4Mk).unwrap();
        let init = DecoratedPoint { ovg, h: m.h.identity() };
        let tr = omega_dec_transport(&fs, &fam, &init, Integrator::Rk4Mk).unwrap();
        for (a, h) in tr.omega.a.iter().zip(&tr.h) {
            assert!(a.distance(&m.g.identity()) < 1e-12);
            assert!(h.distance(&m.h.identity()) < 1e-12);
        }
    }
}
