//! Property tests for the group, module, quadrature and categorical layers.

use pathtrans::categorical::{exchange_residual, morphism_endpoints, Morphism2G};
use pathtrans::decorated::{dec_right_action, DecoratedPoint};
use pathtrans::geometry::BundlePoint;
use pathtrans::integrate::{simpson, Integrator};
use pathtrans::path::{segment, TimeGrid, DEFAULT_MARGIN};
use pathtrans::pathspace::horizontal_lift;
use pathtrans::{CrossedModule, GroupElement, LieGroup, SemidirectElement};
use proptest::prelude::*;

fn coords(n: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, n)
}

fn so3(c: &[f64]) -> GroupElement {
    LieGroup::So3.algebra_from_coords(c).exp()
}

fn modules() -> [CrossedModule; 2] {
    [CrossedModule::conjugation(LieGroup::So3), CrossedModule::vector(LieGroup::So2, 2).unwrap()]
}

fn elem(g: LieGroup, c: &[f64]) -> GroupElement {
    g.algebra_from_coords(&c[..g.dim()]).exp()
}

fn sd(m: &CrossedModule, c: &[f64]) -> SemidirectElement {
    SemidirectElement {
        h: elem(m.h, &c[..3]),
        g: elem(m.g, &c[3..]),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn so3_log_inverts_exp(c in coords(3, 0.6)) {
        let x = LieGroup::So3.algebra_from_coords(&c);
        let back = x.exp().log().unwrap();
        prop_assert!((back - x).norm() < 1e-12);
    }

    #[test]
    fn adjoint_is_a_homomorphism(a in coords(3, 2.0), b in coords(3, 2.0), y in coords(3, 1.0)) {
        let (ga, gb) = (so3(&a), so3(&b));
        let y = LieGroup::So3.algebra_from_coords(&y);
        let lhs = (&ga * &gb).ad(&y);
        let rhs = ga.ad(&gb.ad(&y));
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn peiffer_identities_hold(g in coords(3, 2.0), h in coords(3, 2.0), h2 in coords(3, 2.0)) {
        for m in modules() {
            let (r1, r2) = m.residual(&elem(m.g, &g), &elem(m.h, &h), &elem(m.h, &h2));
            prop_assert!(r1.max(r2) < 1e-10);
        }
    }

    #[test]
    fn semidirect_product_is_associative(a in coords(6, 1.5), b in coords(6, 1.5), c in coords(6, 1.5)) {
        for m in modules() {
            let (a, b, c) = (sd(&m, &a), sd(&m, &b), sd(&m, &c));
            let lhs = m.sd_mul(&m.sd_mul(&a, &b), &c);
            let rhs = m.sd_mul(&a, &m.sd_mul(&b, &c));
            prop_assert!(m.sd_distance(&lhs, &rhs) < 1e-12);
            let e = m.sd_mul(&a, &m.sd_inv(&a));
            prop_assert!(m.sd_distance(&e, &m.sd_identity()) < 1e-12);
        }
    }

    #[test]
    fn endpoints_are_homomorphisms(a in coords(6, 1.5), b in coords(6, 1.5)) {
        for m in modules() {
            let (fa, fb) = (Morphism2G(sd(&m, &a)), Morphism2G(sd(&m, &b)));
            let (s, t) = morphism_endpoints(&m, &fa.horizontal(&m, &fb)).unwrap();
            let (sa, ta) = morphism_endpoints(&m, &fa).unwrap();
            let (sb, tb) = morphism_endpoints(&m, &fb).unwrap();
            prop_assert!(s.distance(&(&sa * &sb)) < 1e-12);
            prop_assert!(t.distance(&(&ta * &tb)) < 1e-12);
        }
    }

    #[test]
    fn exchange_law_holds(a in coords(6, 1.5), b in coords(3, 1.5), c in coords(6, 1.5), d in coords(3, 1.5)) {
        for m in modules() {
            let f1 = Morphism2G(sd(&m, &a));
            let f2 = Morphism2G::new(elem(m.h, &b), morphism_endpoints(&m, &f1).unwrap().1);
            let f1p = Morphism2G(sd(&m, &c));
            let f2p = Morphism2G::new(elem(m.h, &d), morphism_endpoints(&m, &f1p).unwrap().1);
            prop_assert!(exchange_residual(&m, &f1p, &f1, &f2p, &f2).unwrap() < 1e-11);
        }
    }

    #[test]
    fn simpson_is_exact_for_cubics(c in coords(4, 3.0), n in 2usize..40) {
        let h = 1.0 / (2 * n) as f64;
        let f = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
        let vals: Vec<f64> = (0..=2 * n).map(|i| f(i as f64 * h)).collect();
        let exact = c[0] + c[1] / 2.0 + c[2] / 3.0 + c[3] / 4.0;
        prop_assert!((simpson(&vals, h) - exact).abs() < 1e-12);
    }

    #[test]
    fn decorated_right_action_composes(a in coords(6, 1.5), b in coords(6, 1.5), g0 in coords(3, 1.0), h0 in coords(3, 1.0)) {
        for m in modules() {
            let gamma = segment(&[0.1, 0.2], &[0.7, -0.4], TimeGrid::unit(20), DEFAULT_MARGIN);
            let abar = pathtrans::geometry::BaseOneForm::zero(pathtrans::geometry::ChartDomain::cube(2, -2.0, 2.0), m.g);
            let ovg = horizontal_lift(&abar, &gamma, &BundlePoint::new(gamma.initial().to_vec(), elem(m.g, &g0)), Integrator::Rk4Mk).unwrap();
            let p = DecoratedPoint { ovg, h: elem(m.h, &h0) };
            let (a, b) = (sd(&m, &a), sd(&m, &b));
            let lhs = dec_right_action(&m, &dec_right_action(&m, &p, &a).unwrap(), &b).unwrap();
            let rhs = dec_right_action(&m, &p, &m.sd_mul(&a, &b)).unwrap();
            prop_assert!(lhs.h.distance(&rhs.h) < 1e-12);
            prop_assert!(lhs.ovg.terminal().g.distance(&rhs.ovg.terminal().g) < 1e-12);
        }
    }
}
