//! The categorical group of a crossed module: morphisms (h, g) from g to
//! τ(h)g, vertical composition, the exchange law, and composition of
//! decorated paths.

use crate::decorated::DecoratedPoint;
use crate::error::{Error, Result};
use crate::geometry::BundlePoint;
use crate::lie::GroupElement;
use crate::module::{CrossedModule, SemidirectElement};
use crate::path::{compose_bundle_paths, COMPOSE_TOL};

/// A morphism of the categorical group, stored as (h, g) ∈ H⋊G.
#[derive(Clone, Debug, PartialEq)]
pub struct Morphism2G(pub SemidirectElement);

impl Morphism2G {
    pub fn new(h: GroupElement, g: GroupElement) -> Self {
        Self(SemidirectElement { h, g })
    }

    /// The identity morphism 1_g = (e, g).
    pub fn identity_at(module: &CrossedModule, g: GroupElement) -> Self {
        Self::new(module.h.identity(), g)
    }

    /// Horizontal composition is the semidirect product.
    pub fn horizontal(&self, module: &CrossedModule, other: &Self) -> Self {
        Self(module.sd_mul(&self.0, &other.0))
    }

    pub fn distance(&self, module: &CrossedModule, other: &Self) -> f64 {
        module.sd_distance(&self.0, &other.0)
    }
}

fn check(module: &CrossedModule, m: &Morphism2G) -> Result<()> {
    if m.0.h.group != module.h || m.0.g.group != module.g {
        return Err(Error::ModuleMismatch(format!(
            "morphism in ({}, {}) for module {module}",
            m.0.h.group, m.0.g.group
        )));
    }
    Ok(())
}

/// (s, t)(h, g) = (g, τ(h)g).
pub fn morphism_endpoints(module: &CrossedModule, m: &Morphism2G) -> Result<(GroupElement, GroupElement)> {
    check(module, m)?;
    let s = m.0.g.clone();
    let t = &module.tau(&m.0.h) * &m.0.g;
    Ok((s, t))
}

/// (h₂, g₂)∘(h₁, g₁) = (h₂h₁, g₁), defined when τ(h₁)g₁ = g₂.
pub fn vertical_compose(module: &CrossedModule, m2: &Morphism2G, m1: &Morphism2G) -> Result<Morphism2G> {
    let (_, t1) = morphism_endpoints(module, m1)?;
    check(module, m2)?;
    let gap = t1.distance(&m2.0.g);
    if gap > COMPOSE_TOL {
        return Err(Error::NotComposable { gap });
    }
    Ok(Morphism2G::new(&m2.0.h * &m1.0.h, m1.0.g.clone()))
}

/// Distance in H⋊G between (f₂′∘f₁′)(f₂∘f₁) and (f₂′f₂)∘(f₁′f₁).
pub fn exchange_residual(
    module: &CrossedModule,
    f1p: &Morphism2G,
    f1: &Morphism2G,
    f2p: &Morphism2G,
    f2: &Morphism2G,
) -> Result<f64> {
    let lhs = vertical_compose(module, f2p, f1p)?.horizontal(module, &vertical_compose(module, f2, f1)?);
    let rhs = vertical_compose(module, &f2p.horizontal(module, f2), &f1p.horizontal(module, f1))?;
    Ok(lhs.distance(module, &rhs))
}

/// A decorated path (ovg, h) read as a morphism from ovg(t₀) to ovg(t₁)τ(h).
#[derive(Clone, Debug, PartialEq)]
pub struct DecoratedMorphism(pub DecoratedPoint);

impl DecoratedMorphism {
    pub fn source(&self) -> BundlePoint {
        self.0.ovg.initial().clone()
    }

    pub fn target(&self, module: &CrossedModule) -> BundlePoint {
        self.0.ovg.terminal().right(&module.tau(&self.0.h))
    }
}

fn point_gap(a: &BundlePoint, b: &BundlePoint) -> f64 {
    let dx: f64 = a.x.iter().zip(&b.x).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    dx + a.g.distance(&b.g)
}

/// (ovg₂, h₂)∘(ovg₁, h₁) = (ovg₂·τ(h₁)⁻¹ ∘ ovg₁, h₁h₂).
pub fn decorated_compose(module: &CrossedModule, m2: &DecoratedMorphism, m1: &DecoratedMorphism) -> Result<DecoratedMorphism> {
    let shifted = m2.0.ovg.right(&module.tau(&m1.0.h).inv());
    let gap = point_gap(m1.0.ovg.terminal(), shifted.initial());
    if gap > COMPOSE_TOL {
        return Err(Error::NotComposable { gap });
    }
    let ovg = compose_bundle_paths(&shifted, &m1.0.ovg).map_err(|e| match e {
        Error::NonComposable { gap } => Error::NotComposable { gap },
        other => other,
    })?;
    Ok(DecoratedMorphism(DecoratedPoint {
        ovg,
        h: &m1.0.h * &m2.0.h,
    }))
}

/// Distance between the target of a composite and the target of its last factor.
pub fn target_coherence_residual(module: &CrossedModule, composite: &DecoratedMorphism, m2: &DecoratedMorphism) -> f64 {
    point_gap(&composite.target(module), &m2.target(module))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::LieGroup;

    #[test]
    fn identity_endpoints_coincide() {
        let m = CrossedModule::conjugation(LieGroup::So2);
        let g = m.g.algebra_from_coords(&[0.3]).exp();
        let (s, t) = morphism_endpoints(&m, &Morphism2G::identity_at(&m, g.clone())).unwrap();
        assert!(s.distance(&g) < 1e-15 && t.distance(&g) < 1e-15);
    }

    #[test]
    fn offset_pair_is_not_composable() {
        let m = CrossedModule::conjugation(LieGroup::So2);
        let g = m.g.algebra_from_coords(&[0.3]).exp();
        let off = m.g.algebra_from_coords(&[0.4]).exp();
        let m1 = Morphism2G::identity_at(&m, g);
        let m2 = Morphism2G::identity_at(&m, off);
        assert!(matches!(vertical_compose(&m, &m2, &m1), Err(Error::NotComposable { .. })));
    }

    #[test]
    fn trivial_tau_composition_adds() {
        let m = CrossedModule::vector(LieGroup::So2, 2).unwrap();
        let g = m.g.algebra_from_coords(&[0.7]).exp();
        let u1 = m.h.algebra_from_coords(&[1.0, 2.0]).exp();
        let u2 = m.h.algebra_from_coords(&[-0.5, 0.25]).exp();
        let c = vertical_compose(&m, &Morphism2G::new(u2, g.clone()), &Morphism2G::new(u1, g.clone())).unwrap();
        let expected = m.h.algebra_from_coords(&[0.5, 2.25]).exp();
        assert!(c.0.h.distance(&expected) < 1e-15);
        assert!(c.0.g.distance(&g) < 1e-15);
    }
}
