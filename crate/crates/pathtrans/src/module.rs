//! Lie crossed modules (G, H, α, τ), the semidirect product H⋊G and the
//! second-level module used for K-valued decorations.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lie::{AlgebraElement, GroupElement, LieGroup};

/// How a copy of G acts on the values of a form. Equivariant lifts use it to
/// turn base forms into forms on the trivialized bundle.
pub trait FiberAction: Send + Sync {
    /// Algebra the action acts on.
    fn target(&self) -> LieGroup;
    /// Differential of the action of `g` on the target algebra.
    fn act(&self, g: &GroupElement, x: &AlgebraElement) -> AlgebraElement;
    /// Action of `g⁻¹`.
    fn act_inv(&self, g: &GroupElement, x: &AlgebraElement) -> AlgebraElement {
        self.act(&g.inv(), x)
    }
    /// Infinitesimal action of `z ∈ L(G)`.
    fn act_inf(&self, z: &AlgebraElement, x: &AlgebraElement) -> AlgebraElement;
}

/// Adjoint action of G on its own algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdjointAction(pub LieGroup);

impl FiberAction for AdjointAction {
    fn target(&self) -> LieGroup {
        self.0
    }
    fn act(&self, g: &GroupElement, x: &AlgebraElement) -> AlgebraElement {
        g.ad(x)
    }
    fn act_inv(&self, g: &GroupElement, x: &AlgebraElement) -> AlgebraElement {
        g.ad_inv(x)
    }
    fn act_inf(&self, z: &AlgebraElement, x: &AlgebraElement) -> AlgebraElement {
        z.bracket(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    /// H = G, τ = id, α = conjugation.
    Conjugation,
    /// H = ℝᵐ, τ ≡ e, α = standard representation of SO(m).
    Standard,
    /// H = ℝᵐ, τ ≡ e, α trivial.
    Trivial,
    /// Standard SO(2) action on ℝ² with τ(u) = exp(u₁J). Violates the first
    /// Peiffer identity; only meant as a negative control.
    RotationTau,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossedModule {
    pub g: LieGroup,
    pub h: LieGroup,
    kind: Kind,
}

impl CrossedModule {
    pub fn conjugation(g: LieGroup) -> Self {
        Self {
            g,
            h: g,
            kind: Kind::Conjugation,
        }
    }

    /// VectorModule(G, ρ) with H = ℝᵐ. ρ is the standard representation when
    /// G = SO(m) and the trivial one when G is a translation group.
    pub fn vector(g: LieGroup, m: usize) -> Result<Self> {
        let kind = match g {
            LieGroup::Transl(_) => Kind::Trivial,
            _ if g.ambient_dim() == m => Kind::Standard,
            _ => {
                return Err(Error::ModuleMismatch(format!(
                    "no representation of {g} on R^{m}"
                )))
            }
        };
        Ok(Self {
            g,
            h: LieGroup::Transl(m),
            kind,
        })
    }

    /// VectorModule(G, trivial) with H = ℝᵐ.
    pub fn vector_trivial(g: LieGroup, m: usize) -> Self {
        Self {
            g,
            h: LieGroup::Transl(m),
            kind: Kind::Trivial,
        }
    }

    /// SO(2) on ℝ² with the non-homomorphic boundary map τ(u) = exp(u₁J).
    /// It fails the Peiffer identities and serves as a negative control.
    pub fn broken_rotation_tau() -> Self {
        Self {
            g: LieGroup::So2,
            h: LieGroup::Transl(2),
            kind: Kind::RotationTau,
        }
    }

    /// Parses ids such as `conj:so3`, `vec:so2x2` or `vec:transl1x2`.
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim();
        let unknown = || Error::UnknownId {
            kind: "crossed module",
            id: id.to_string(),
        };
        if let Some(g) = id.strip_prefix("conj:") {
            return Ok(Self::conjugation(LieGroup::parse(g).map_err(|_| unknown())?));
        }
        if let Some(rest) = id.strip_prefix("vec:") {
            let (g, m) = rest.rsplit_once('x').ok_or_else(unknown)?;
            let g = LieGroup::parse(g).map_err(|_| unknown())?;
            let m: usize = m.parse().map_err(|_| unknown())?;
            return Self::vector(g, m);
        }
        Err(unknown())
    }

    pub fn id(&self) -> String {
        match self.kind {
            Kind::Conjugation => format!("conj:{}", self.g),
            Kind::Standard | Kind::Trivial => format!("vec:{}x{}", self.g, self.h.dim()),
            Kind::RotationTau => "broken:so2x2".into(),
        }
    }

    fn check_g(&self, g: &GroupElement) -> Result<()> {
        if g.group != self.g {
            return Err(Error::ModuleMismatch(format!(
                "expected an element of {}, got {}",
                self.g, g.group
            )));
        }
        Ok(())
    }

    fn check_h(&self, h: &GroupElement) -> Result<()> {
        if h.group != self.h {
            return Err(Error::ModuleMismatch(format!(
                "expected an element of {}, got {}",
                self.h, h.group
            )));
        }
        Ok(())
    }

    /// τ : H → G.
    pub fn tau(&self, h: &GroupElement) -> GroupElement {
        match self.kind {
            Kind::Conjugation => h.clone(),
            Kind::Standard | Kind::Trivial => self.g.identity(),
            Kind::RotationTau => self.g.algebra_from_coords(&[h.data[(0, 0)]]).exp(),
        }
    }

    /// dτ : L(H) → L(G).
    pub fn dtau(&self, y: &AlgebraElement) -> AlgebraElement {
        match self.kind {
            Kind::Conjugation => y.clone(),
            Kind::Standard | Kind::Trivial => self.g.zero_algebra(),
            Kind::RotationTau => self.g.algebra_from_coords(&[y.data[(0, 0)]]),
        }
    }

    /// α(g)(h).
    pub fn alpha(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        match self.kind {
            Kind::Conjugation => &(g * h) * &g.inv(),
            Kind::Standard | Kind::RotationTau => GroupElement {
                group: self.h,
                data: &g.data * &h.data,
            },
            Kind::Trivial => h.clone(),
        }
    }

    /// Differential of α(g) on L(H).
    pub fn dalpha(&self, g: &GroupElement, y: &AlgebraElement) -> AlgebraElement {
        match self.kind {
            Kind::Conjugation => g.ad(y),
            Kind::Standard | Kind::RotationTau => AlgebraElement {
                group: self.h,
                data: &g.data * &y.data,
            },
            Kind::Trivial => y.clone(),
        }
    }

    /// Differential of α(g⁻¹) on L(H).
    pub fn dalpha_inv(&self, g: &GroupElement, y: &AlgebraElement) -> AlgebraElement {
        match self.kind {
            Kind::Conjugation => g.ad_inv(y),
            Kind::Standard | Kind::RotationTau => AlgebraElement {
                group: self.h,
                data: g.data.transpose() * &y.data,
            },
            Kind::Trivial => y.clone(),
        }
    }

    /// Infinitesimal action Z·Y of L(G) on L(H).
    pub fn act_inf(&self, z: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
        match self.kind {
            Kind::Conjugation => z.bracket(y),
            Kind::Standard | Kind::RotationTau => AlgebraElement {
                group: self.h,
                data: &z.data * &y.data,
            },
            Kind::Trivial => self.h.zero_algebra(),
        }
    }

    /// δ_h(Z) = d/dt|₀ h·α(exp tZ)(h⁻¹), the L(H) part of Ad((h,e))(0,Z).
    pub fn delta(&self, h: &GroupElement, z: &AlgebraElement) -> AlgebraElement {
        match self.kind {
            Kind::Conjugation => &h.ad(z) - z,
            Kind::Standard | Kind::RotationTau => AlgebraElement {
                group: self.h,
                data: -(&z.data * &h.data),
            },
            Kind::Trivial => self.h.zero_algebra(),
        }
    }

    /// Residuals of the two Peiffer identities at (g, h, h2).
    pub fn residual(&self, g: &GroupElement, h: &GroupElement, h2: &GroupElement) -> (f64, f64) {
        let lhs1 = self.tau(&self.alpha(g, h));
        let rhs1 = &(g * &self.tau(h)) * &g.inv();
        let lhs2 = self.alpha(&self.tau(h), h2);
        let rhs2 = &(h * h2) * &h.inv();
        (
            (&lhs1.data - &rhs1.data).norm(),
            (&lhs2.data - &rhs2.data).norm(),
        )
    }

    /// Residual of dτ(α(g)X) = Ad(g)dτ(X).
    pub fn derivative_residual(&self, g: &GroupElement, x: &AlgebraElement) -> f64 {
        (self.dtau(&self.dalpha(g, x)) - g.ad(&self.dtau(x))).norm()
    }

    pub fn sd_identity(&self) -> SemidirectElement {
        SemidirectElement {
            h: self.h.identity(),
            g: self.g.identity(),
        }
    }

    pub fn sd_zero(&self) -> SemidirectAlgebraElement {
        SemidirectAlgebraElement {
            y: self.h.zero_algebra(),
            z: self.g.zero_algebra(),
        }
    }

    /// (h₁,g₁)(h₂,g₂) = (h₁α(g₁)(h₂), g₁g₂).
    pub fn sd_mul(&self, a: &SemidirectElement, b: &SemidirectElement) -> SemidirectElement {
        SemidirectElement {
            h: &a.h * &self.alpha(&a.g, &b.h),
            g: &a.g * &b.g,
        }
    }

    /// (h,g)⁻¹ = (α(g⁻¹)(h⁻¹), g⁻¹).
    pub fn sd_inv(&self, a: &SemidirectElement) -> SemidirectElement {
        let gi = a.g.inv();
        SemidirectElement {
            h: self.alpha(&gi, &a.h.inv()),
            g: gi,
        }
    }

    /// Ad(h,g)(Y,Z) = (Ad_H(h)α(g)Y + δ_h(Ad(g)Z), Ad(g)Z).
    pub fn sd_adjoint(
        &self,
        a: &SemidirectElement,
        xi: &SemidirectAlgebraElement,
    ) -> SemidirectAlgebraElement {
        let z = a.g.ad(&xi.z);
        let y = a.h.ad(&self.dalpha(&a.g, &xi.y)) + self.delta(&a.h, &z);
        SemidirectAlgebraElement { y, z }
    }

    /// Ad(a)ξ from the conjugation curve a·(exp tY, exp tZ)·a⁻¹ by central
    /// differences with the given step.
    pub fn sd_adjoint_fd(
        &self,
        a: &SemidirectElement,
        xi: &SemidirectAlgebraElement,
        step: f64,
    ) -> SemidirectAlgebraElement {
        let ainv = self.sd_inv(a);
        let curve = |t: f64| {
            let inner = SemidirectElement {
                h: xi.y.scale(t).exp(),
                g: xi.z.scale(t).exp(),
            };
            self.sd_mul(&self.sd_mul(a, &inner), &ainv)
        };
        let p = curve(step);
        let m = curve(-step);
        let dy: DMatrix<f64> = (&p.h.data - &m.h.data) / (2.0 * step);
        let dz: DMatrix<f64> = (&p.g.data - &m.g.data) / (2.0 * step);
        SemidirectAlgebraElement {
            y: AlgebraElement {
                group: self.h,
                data: dy,
            },
            z: AlgebraElement {
                group: self.g,
                data: dz,
            },
        }
    }

    /// ([Y₁,Y₂] + Z₁·Y₂ − Z₂·Y₁, [Z₁,Z₂]).
    pub fn sd_bracket(
        &self,
        a: &SemidirectAlgebraElement,
        b: &SemidirectAlgebraElement,
    ) -> SemidirectAlgebraElement {
        let y = a.y.bracket(&b.y) + self.act_inf(&a.z, &b.y) - self.act_inf(&b.z, &a.y);
        SemidirectAlgebraElement {
            y,
            z: a.z.bracket(&b.z),
        }
    }

    /// √(d_H² + d_G²) on components.
    pub fn sd_distance(&self, a: &SemidirectElement, b: &SemidirectElement) -> f64 {
        a.h.distance(&b.h).hypot(a.g.distance(&b.g))
    }

    pub fn checked_sd_mul(
        &self,
        a: &SemidirectElement,
        b: &SemidirectElement,
    ) -> Result<SemidirectElement> {
        for e in [a, b] {
            self.check_h(&e.h)?;
            self.check_g(&e.g)?;
        }
        Ok(self.sd_mul(a, b))
    }

    pub fn checked_sd_inv(&self, a: &SemidirectElement) -> Result<SemidirectElement> {
        self.check_h(&a.h)?;
        self.check_g(&a.g)?;
        Ok(self.sd_inv(a))
    }

    pub fn checked_residual(
        &self,
        g: &GroupElement,
        h: &GroupElement,
        h2: &GroupElement,
    ) -> Result<(f64, f64)> {
        self.check_g(g)?;
        self.check_h(h)?;
        self.check_h(h2)?;
        Ok(self.residual(g, h, h2))
    }

    /// G-action on L(H) through α, for lifting L(H)-valued forms.
    pub fn h_action(&self) -> ModuleAction {
        ModuleAction(*self)
    }
}

impl fmt::Display for CrossedModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// G acting on L(H) through the differential of α.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModuleAction(pub CrossedModule);

impl FiberAction for ModuleAction {
    fn target(&self) -> LieGroup {
        self.0.h
    }
    fn act(&self, g: &GroupElement, x: &AlgebraElement) -> AlgebraElement {
        self.0.dalpha(g, x)
    }
    fn act_inv(&self, g: &GroupElement, x: &AlgebraElement) -> AlgebraElement {
        self.0.dalpha_inv(g, x)
    }
    fn act_inf(&self, z: &AlgebraElement, x: &AlgebraElement) -> AlgebraElement {
        self.0.act_inf(z, x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemidirectElement {
    pub h: GroupElement,
    pub g: GroupElement,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemidirectAlgebraElement {
    pub y: AlgebraElement,
    pub z: AlgebraElement,
}

impl SemidirectAlgebraElement {
    pub fn norm(&self) -> f64 {
        self.y.norm().hypot(self.z.norm())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            y: &self.y + &other.y,
            z: &self.z + &other.z,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            y: &self.y - &other.y,
            z: &self.z - &other.z,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            y: self.y.scale(s),
            z: self.z.scale(s),
        }
    }
}

/// Crossed module (H⋊G, K, α₂, τ₂) with K = ℝᵐ, τ₂ ≡ e and α₂ factoring
/// through the projection H⋊G → G.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SecondModule {
    pub g: LieGroup,
    pub k: LieGroup,
    via_g: bool,
}

impl SecondModule {
    /// α₂ trivial.
    pub fn trivial(g: LieGroup, m: usize) -> Self {
        Self {
            g,
            k: LieGroup::Transl(m),
            via_g: false,
        }
    }

    /// α₂(h,g) = standard action of g ∈ SO(m) on ℝᵐ.
    pub fn via_g(g: LieGroup, m: usize) -> Result<Self> {
        if g.is_translation() || g.ambient_dim() != m {
            return Err(Error::ModuleMismatch(format!(
                "no representation of {g} on R^{m}"
            )));
        }
        Ok(Self {
            g,
            k: LieGroup::Transl(m),
            via_g: true,
        })
    }

    /// Parses `k:<m>` (trivial α₂) or `k:<m>:rep` (α₂ through G).
    pub fn parse(g: LieGroup, id: &str) -> Result<Self> {
        let unknown = || Error::UnknownId {
            kind: "second module",
            id: id.to_string(),
        };
        let rest = id.trim().strip_prefix("k:").ok_or_else(unknown)?;
        let mut parts = rest.split(':');
        let m: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .filter(|&m| m > 0)
            .ok_or_else(unknown)?;
        match parts.next() {
            None => Ok(Self::trivial(g, m)),
            Some("rep") => Self::via_g(g, m),
            Some(_) => Err(unknown()),
        }
    }

    /// Differential of α₂((h,g)) on L(K).
    pub fn act_sd(&self, a: &SemidirectElement, x: &AlgebraElement) -> AlgebraElement {
        self.act(&a.g, x)
    }

    /// τ₂ is trivial, so its differential vanishes.
    pub fn dtau2(&self, module: &CrossedModule, _x: &AlgebraElement) -> SemidirectAlgebraElement {
        module.sd_zero()
    }

    /// Peiffer residuals for (a, k, k2) with a ∈ H⋊G, measured in H⋊G and K.
    pub fn residual(
        &self,
        module: &CrossedModule,
        a: &SemidirectElement,
        k: &GroupElement,
        k2: &GroupElement,
    ) -> (f64, f64) {
        // τ₂(α₂(a)k) = e against a τ₂(k) a⁻¹.
        let conj = module.sd_mul(&module.sd_mul(a, &module.sd_identity()), &module.sd_inv(a));
        let first = module.sd_distance(&module.sd_identity(), &conj);
        // α₂(τ₂(k))k₂ against k k₂ k⁻¹.
        let lhs = self.act(&self.g.identity(), &AlgebraElement {
            group: self.k,
            data: k2.data.clone(),
        });
        let rhs = &(k * k2) * &k.inv();
        (first, (&lhs.data - &rhs.data).norm())
    }
}

impl FiberAction for SecondModule {
    fn target(&self) -> LieGroup {
        self.k
    }
    fn act(&self, g: &GroupElement, x: &AlgebraElement) -> AlgebraElement {
        if self.via_g {
            AlgebraElement {
                group: self.k,
                data: &g.data * &x.data,
            }
        } else {
            x.clone()
        }
    }
    fn act_inf(&self, z: &AlgebraElement, x: &AlgebraElement) -> AlgebraElement {
        if self.via_g {
            AlgebraElement {
                group: self.k,
                data: &z.data * &x.data,
            }
        } else {
            self.k.zero_algebra()
        }
    }
}
