//! Fixed-step Lie-group integrators for ẏy⁻¹ = F(t) and the quadrature rules
//! shared by the Chen integrals.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lie::{dexp_inv, AlgebraElement, GroupElement, LieGroup};
use crate::module::SemidirectAlgebraElement;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Integrator {
    /// Fourth-order Munthe-Kaas Runge–Kutta with exponential updates.
    #[default]
    Rk4Mk,
    /// Classical RK4 on the ambient matrices followed by projection.
    Rk4Proj,
    /// Exponential Euler.
    Euler,
}

impl Integrator {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Rk4Mk => "rk4mk",
            Self::Rk4Proj => "rk4proj",
            Self::Euler => "euler",
        }
    }

    /// Classical order of accuracy.
    pub fn order(&self) -> u32 {
        match self {
            Self::Rk4Mk | Self::Rk4Proj => 4,
            Self::Euler => 1,
        }
    }
}

impl FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rk4mk" => Ok(Self::Rk4Mk),
            "rk4proj" => Ok(Self::Rk4Proj),
            "euler" => Ok(Self::Euler),
            other => Err(Error::UnknownId {
                kind: "integrator",
                id: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Vector-space operations needed by interpolation and quadrature.
pub trait Linear: Clone {
    fn combine(terms: &[(f64, &Self)]) -> Self;
}

impl Linear for f64 {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(c, x)| c * **x).sum()
    }
}

impl Linear for Vec<f64> {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        let mut out = vec![0.0; terms[0].1.len()];
        for (c, x) in terms {
            for (o, v) in out.iter_mut().zip(x.iter()) {
                *o += c * v;
            }
        }
        out
    }
}

impl Linear for AlgebraElement {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        let mut out = terms[0].1.group.zero_algebra();
        for (c, x) in terms {
            if *c != 0.0 {
                out.data += &x.data * *c;
            }
        }
        out
    }
}

impl Linear for SemidirectAlgebraElement {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        let ys: Vec<(f64, &AlgebraElement)> = terms.iter().map(|(c, x)| (*c, &x.y)).collect();
        let zs: Vec<(f64, &AlgebraElement)> = terms.iter().map(|(c, x)| (*c, &x.z)).collect();
        Self {
            y: AlgebraElement::combine(&ys),
            z: AlgebraElement::combine(&zs),
        }
    }
}

/// Interval midpoints of node samples by 4-point cubic Lagrange interpolation
/// (one-sided stencils on the first and last interval, linear below 4 nodes).
pub fn lagrange_midpoints<T: Linear>(values: &[T]) -> Vec<T> {
    let n = values.len();
    if n < 2 {
        return Vec::new();
    }
    if n < 4 {
        return values
            .windows(2)
            .map(|w| T::combine(&[(0.5, &w[0]), (0.5, &w[1])]))
            .collect();
    }
    (0..n - 1)
        .map(|j| {
            if j == 0 {
                T::combine(&[
                    (5.0 / 16.0, &values[0]),
                    (15.0 / 16.0, &values[1]),
                    (-5.0 / 16.0, &values[2]),
                    (1.0 / 16.0, &values[3]),
                ])
            } else if j == n - 2 {
                T::combine(&[
                    (1.0 / 16.0, &values[n - 4]),
                    (-5.0 / 16.0, &values[n - 3]),
                    (15.0 / 16.0, &values[n - 2]),
                    (5.0 / 16.0, &values[n - 1]),
                ])
            } else {
                T::combine(&[
                    (-1.0 / 16.0, &values[j - 1]),
                    (9.0 / 16.0, &values[j]),
                    (9.0 / 16.0, &values[j + 1]),
                    (-1.0 / 16.0, &values[j + 2]),
                ])
            }
        })
        .collect()
}

/// Composite Simpson weights (already multiplied by the spacing `h`), with a
/// trapezoid on the trailing interval when the interval count is odd.
pub fn simpson_weights(nodes: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; nodes];
    if nodes < 2 {
        return w;
    }
    let intervals = nodes - 1;
    let even = intervals - intervals % 2;
    for k in (0..even).step_by(2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if even < intervals {
        w[intervals - 1] += 0.5 * h;
        w[intervals] += 0.5 * h;
    }
    w
}

pub fn simpson<T: Linear>(values: &[T], h: f64) -> T {
    let w = simpson_weights(values.len(), h);
    let terms: Vec<(f64, &T)> = w.iter().copied().zip(values.iter()).collect();
    T::combine(&terms)
}

/// Running integrals ∫_{t₀}^{tᵢ} from node samples: Simpson on each interval
/// with cubic-interpolated midpoints.
pub fn cumulative<T: Linear>(values: &[T], h: f64, zero: T) -> Vec<T> {
    let mids = lagrange_midpoints(values);
    let mut out = Vec::with_capacity(values.len());
    out.push(zero);
    for (j, m) in mids.iter().enumerate() {
        let prev = out[j].clone();
        out.push(T::combine(&[
            (1.0, &prev),
            (h / 6.0, &values[j]),
            (4.0 * h / 6.0, m),
            (h / 6.0, &values[j + 1]),
        ]));
    }
    out
}

/// Cumulative trapezoid rule.
pub fn cumulative_trapezoid<T: Linear>(values: &[T], h: f64, zero: T) -> Vec<T> {
    let mut out = Vec::with_capacity(values.len());
    out.push(zero);
    for j in 1..values.len() {
        let prev = out[j - 1].clone();
        out.push(T::combine(&[(1.0, &prev), (0.5 * h, &values[j - 1]), (0.5 * h, &values[j])]));
    }
    out
}

/// Derivative at node `j` of uniformly spaced samples: central differences in
/// the interior and one-sided second-order stencils at the ends.
pub fn fd_derivative<T: Linear>(vals: &[T], j: usize, h: f64) -> T {
    let n = vals.len();
    assert!(n >= 2, "finite difference needs at least two samples");
    if n == 2 {
        return T::combine(&[(1.0 / h, &vals[1]), (-1.0 / h, &vals[0])]);
    }
    let c = 0.5 / h;
    if j == 0 {
        T::combine(&[(-3.0 * c, &vals[0]), (4.0 * c, &vals[1]), (-c, &vals[2])])
    } else if j == n - 1 {
        T::combine(&[(3.0 * c, &vals[n - 1]), (-4.0 * c, &vals[n - 2]), (c, &vals[n - 3])])
    } else {
        T::combine(&[(c, &vals[j + 1]), (-c, &vals[j - 1])])
    }
}

/// Left-trivialized derivative g⁻¹ġ at node `j` of group samples, from
/// [`fd_derivative`] on the ambient matrices.
pub fn group_fd_left(vals: &[&GroupElement], j: usize, h: f64) -> AlgebraElement {
    let group = vals[0].group;
    let n = vals.len();
    let stencil: Vec<(f64, usize)> = if n == 2 {
        vec![(1.0 / h, 1), (-1.0 / h, 0)]
    } else if j == 0 {
        vec![(-1.5 / h, 0), (2.0 / h, 1), (-0.5 / h, 2)]
    } else if j == n - 1 {
        vec![(1.5 / h, n - 1), (-2.0 / h, n - 2), (0.5 / h, n - 3)]
    } else {
        vec![(0.5 / h, j + 1), (-0.5 / h, j - 1)]
    };
    let mut d = vals[j].data.clone() * 0.0;
    for (c, k) in stencil {
        d += &vals[k].data * c;
    }
    if group.is_translation() {
        AlgebraElement { group, data: d }
    } else {
        group
            .algebra_from_matrix(vals[j].inv().data * d)
            .expect("matching shapes")
    }
}

fn finite_or(step: usize, y: GroupElement) -> Result<GroupElement> {
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::IntegratorDiverged { step })
    }
}

fn step_right(
    integrator: Integrator,
    y: &GroupElement,
    f0: &AlgebraElement,
    fm: &AlgebraElement,
    f1: &AlgebraElement,
    h: f64,
) -> GroupElement {
    let group = y.group;
    match integrator {
        Integrator::Euler => &f0.scale(h).exp() * y,
        Integrator::Rk4Mk => {
            let k1 = f0.scale(h);
            let k2 = dexp_inv(&k1.scale(0.5), fm).scale(h);
            let k3 = dexp_inv(&k2.scale(0.5), fm).scale(h);
            let k4 = dexp_inv(&k3, f1).scale(h);
            let u = AlgebraElement::combine(&[
                (1.0 / 6.0, &k1),
                (2.0 / 6.0, &k2),
                (2.0 / 6.0, &k3),
                (1.0 / 6.0, &k4),
            ]);
            &u.exp() * y
        }
        Integrator::Rk4Proj => {
            if group.is_translation() {
                let u = AlgebraElement::combine(&[(h / 6.0, f0), (4.0 * h / 6.0, fm), (h / 6.0, f1)]);
                return &u.exp() * y;
            }
            let yd = &y.data;
            let k1 = &f0.data * yd;
            let k2 = &fm.data * (yd + &k1 * (0.5 * h));
            let k3 = &fm.data * (yd + &k2 * (0.5 * h));
            let k4 = &f1.data * (yd + &k3 * h);
            let next = yd + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            group.project(&next)
        }
    }
}

fn check_lengths(nodes: usize, mids: usize) -> Result<()> {
    if nodes < 2 || mids + 1 != nodes {
        return Err(Error::GridMismatch(format!(
            "{nodes} node coefficients with {mids} midpoint coefficients"
        )));
    }
    Ok(())
}

/// Solves ẏy⁻¹ = F(t) on a uniform grid with spacing `h`, given F at the nodes
/// and at the interval midpoints.
pub fn solve_right(
    integrator: Integrator,
    nodes: &[AlgebraElement],
    mids: &[AlgebraElement],
    h: f64,
    y0: &GroupElement,
) -> Result<Vec<GroupElement>> {
    check_lengths(nodes.len(), mids.len())?;
    let mut out = Vec::with_capacity(nodes.len());
    out.push(y0.clone());
    for j in 0..mids.len() {
        let next = step_right(integrator, &out[j], &nodes[j], &mids[j], &nodes[j + 1], h);
        out.push(finite_or(j, next)?);
    }
    Ok(out)
}

/// Solves y⁻¹ẏ = E(t) through z = y⁻¹, which satisfies żz⁻¹ = −E.
pub fn solve_left(
    integrator: Integrator,
    nodes: &[AlgebraElement],
    mids: &[AlgebraElement],
    h: f64,
    y0: &GroupElement,
) -> Result<Vec<GroupElement>> {
    let neg = |v: &[AlgebraElement]| v.iter().map(|x| -x).collect::<Vec<_>>();
    let z = solve_right(integrator, &neg(nodes), &neg(mids), h, &y0.inv())?;
    Ok(z.into_iter().map(|z| z.inv()).collect())
}

/// [`solve_right`] with midpoint coefficients interpolated from the nodes.
pub fn solve_right_nodes(
    integrator: Integrator,
    nodes: &[AlgebraElement],
    h: f64,
    y0: &GroupElement,
) -> Result<Vec<GroupElement>> {
    let mids = lagrange_midpoints(nodes);
    solve_right(integrator, nodes, &mids, h, y0)
}

/// Product integral of a constant coefficient, exp(T·F)·y₀; used as an oracle.
pub fn constant_coefficient(f: &AlgebraElement, duration: f64, y0: &GroupElement) -> GroupElement {
    &f.scale(duration).exp() * y0
}

/// The group of the solution; convenience for callers that build zero
/// coefficients before any sample is known.
pub fn zero_coefficients(group: LieGroup, n: usize) -> Vec<AlgebraElement> {
    vec![group.zero_algebra(); n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_for_cubics() {
        let h = 0.1;
        let vals: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&vals, h) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn odd_interval_count_uses_trailing_trapezoid() {
        let w = simpson_weights(4, 1.0);
        assert_eq!(w, vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0 + 0.5, 0.5]);
    }

    #[test]
    fn midpoints_exact_for_cubics() {
        let f = |x: f64| 1.0 - 2.0 * x + x * x * x;
        let vals: Vec<f64> = (0..6).map(|i| f(i as f64)).collect();
        for (j, m) in lagrange_midpoints(&vals).iter().enumerate() {
            assert!((m - f(j as f64 + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_coefficient_rk4mk_is_exact() {
        let g = LieGroup::So3;
        let f = g.algebra_from_coords(&[0.3, -0.2, 0.5]);
        let n = 10;
        let nodes = vec![f.clone(); n + 1];
        let y = solve_right_nodes(Integrator::Rk4Mk, &nodes, 0.1, &g.identity()).unwrap();
        let exact = constant_coefficient(&f, 1.0, &g.identity());
        assert!(y[n].distance(&exact) < 1e-13);
    }

    #[test]
    fn left_and_right_agree_for_abelian() {
        let g = LieGroup::So2;
        let nodes: Vec<_> = (0..21).map(|i| g.algebra_from_coords(&[(i as f64 * 0.05).sin()])).collect();
        let r = solve_right_nodes(Integrator::Rk4Mk, &nodes, 0.05, &g.identity()).unwrap();
        let mids = lagrange_midpoints(&nodes);
        let l = solve_left(Integrator::Rk4Mk, &nodes, &mids, 0.05, &g.identity()).unwrap();
        assert!(r[20].distance(&l[20]) < 1e-13);
    }
}
