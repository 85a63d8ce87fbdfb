//! Matrix Lie groups SO(2), SO(3) and the translation groups ℝᵐ.
//!
//! Matrix groups store elements and algebra elements as square matrices.
//! Translation groups store both as `m × 1` columns; the group law is addition
//! and `exp`/`log` are the identity map.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Injectivity radius for `log`, measured as ‖g − I‖_F.
pub const LOG_RADIUS: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LieGroup {
    So2,
    So3,
    Transl(usize),
}

impl LieGroup {
    pub fn parse(id: &str) -> Result<Self> {
        let id = id.trim();
        match id {
            "so2" => Ok(Self::So2),
            "so3" => Ok(Self::So3),
            _ => {
                let m = id
                    .strip_prefix("transl")
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&m| m > 0);
                m.map(Self::Transl).ok_or_else(|| Error::UnknownId {
                    kind: "group",
                    id: id.to_string(),
                })
            }
        }
    }

    pub fn id(&self) -> String {
        match self {
            Self::So2 => "so2".into(),
            Self::So3 => "so3".into(),
            Self::Transl(m) => format!("transl{m}"),
        }
    }

    pub fn is_translation(&self) -> bool {
        matches!(self, Self::Transl(_))
    }

    pub fn is_abelian(&self) -> bool {
        !matches!(self, Self::So3)
    }

    /// Side length of the ambient matrix, or the vector length for ℝᵐ.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::So2 => 2,
            Self::So3 => 3,
            Self::Transl(m) => *m,
        }
    }

    /// Dimension of the Lie algebra.
    pub fn dim(&self) -> usize {
        match self {
            Self::So2 => 1,
            Self::So3 => 3,
            Self::Transl(m) => *m,
        }
    }

    fn shape(&self) -> (usize, usize) {
        match self {
            Self::Transl(m) => (*m, 1),
            _ => (self.ambient_dim(), self.ambient_dim()),
        }
    }

    pub fn identity(&self) -> GroupElement {
        let data = match self {
            Self::Transl(m) => DMatrix::zeros(*m, 1),
            _ => DMatrix::identity(self.ambient_dim(), self.ambient_dim()),
        };
        GroupElement { group: *self, data }
    }

    pub fn zero_algebra(&self) -> AlgebraElement {
        let (r, c) = self.shape();
        AlgebraElement {
            group: *self,
            data: DMatrix::zeros(r, c),
        }
    }

    /// Algebra element with the given coordinates in the basis of [`Self::basis`].
    pub fn algebra_from_coords(&self, c: &[f64]) -> AlgebraElement {
        assert_eq!(c.len(), self.dim(), "coordinate count for {}", self.id());
        let data = match self {
            Self::So2 => DMatrix::from_row_slice(2, 2, &[0.0, -c[0], c[0], 0.0]),
            Self::So3 => DMatrix::from_row_slice(
                3,
                3,
                &[0.0, -c[2], c[1], c[2], 0.0, -c[0], -c[1], c[0], 0.0],
            ),
            Self::Transl(m) => DMatrix::from_column_slice(*m, 1, c),
        };
        AlgebraElement { group: *self, data }
    }

    /// Coordinates of the orthogonal projection of `x` onto the algebra.
    pub fn coords(&self, x: &AlgebraElement) -> Vec<f64> {
        let d = &x.data;
        match self {
            Self::So2 => vec![0.5 * (d[(1, 0)] - d[(0, 1)])],
            Self::So3 => vec![
                0.5 * (d[(2, 1)] - d[(1, 2)]),
                0.5 * (d[(0, 2)] - d[(2, 0)]),
                0.5 * (d[(1, 0)] - d[(0, 1)]),
            ],
            Self::Transl(_) => d.iter().copied().collect(),
        }
    }

    pub fn basis(&self) -> Vec<AlgebraElement> {
        (0..self.dim())
            .map(|k| {
                let mut c = vec![0.0; self.dim()];
                c[k] = 1.0;
                self.algebra_from_coords(&c)
            })
            .collect()
    }

    /// Wraps a raw matrix, projecting it onto the algebra subspace.
    pub fn algebra_from_matrix(&self, m: DMatrix<f64>) -> Result<AlgebraElement> {
        let (r, c) = self.shape();
        if m.shape() != (r, c) {
            return Err(Error::DimensionMismatch(format!(
                "expected {r}x{c} for {}, got {:?}",
                self.id(),
                m.shape()
            )));
        }
        let raw = AlgebraElement {
            group: *self,
            data: m,
        };
        Ok(self.algebra_from_coords(&self.coords(&raw)))
    }

    /// Distance of a raw matrix from the algebra subspace.
    pub fn algebra_residual(&self, x: &AlgebraElement) -> f64 {
        (&x.data - &self.algebra_from_coords(&self.coords(x)).data).norm()
    }

    /// Wraps a raw matrix as a group element without projecting.
    pub fn element_from_matrix(&self, m: DMatrix<f64>) -> Result<GroupElement> {
        let (r, c) = self.shape();
        if m.shape() != (r, c) {
            return Err(Error::DimensionMismatch(format!(
                "expected {r}x{c} for {}, got {:?}",
                self.id(),
                m.shape()
            )));
        }
        Ok(GroupElement {
            group: *self,
            data: m,
        })
    }

    /// Nearest group element (polar factor for SO(n), identity map for ℝᵐ).
    pub fn project(&self, m: &DMatrix<f64>) -> GroupElement {
        match self {
            Self::Transl(_) => GroupElement {
                group: *self,
                data: m.clone(),
            },
            _ => {
                let svd = m.clone().svd(true, true);
                let u = svd.u.expect("svd u");
                let vt = svd.v_t.expect("svd v_t");
                let mut q = &u * &vt;
                if q.determinant() < 0.0 {
                    let n = q.ncols();
                    let mut u2 = u.clone();
                    for i in 0..n {
                        u2[(i, n - 1)] = -u2[(i, n - 1)];
                    }
                    q = &u2 * &vt;
                }
                GroupElement {
                    group: *self,
                    data: q,
                }
            }
        }
    }

    /// ‖gᵀg − I‖_F for SO(n) (plus the determinant defect); zero for ℝᵐ.
    pub fn constraint_residual(&self, g: &GroupElement) -> f64 {
        match self {
            Self::Transl(_) => 0.0,
            _ => {
                let n = self.ambient_dim();
                let orth = (g.data.transpose() * &g.data - DMatrix::identity(n, n)).norm();
                orth + (g.data.determinant() - 1.0).abs()
            }
        }
    }
}

impl fmt::Display for LieGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    pub group: LieGroup,
    pub data: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub group: LieGroup,
    pub data: DMatrix<f64>,
}

impl AlgebraElement {
    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            group: self.group,
            data: &self.data * s,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Matrix commutator; zero for translation algebras.
    pub fn bracket(&self, other: &Self) -> Self {
        assert_eq!(self.group, other.group, "bracket across algebras");
        match self.group {
            LieGroup::Transl(_) => self.group.zero_algebra(),
            _ => Self {
                group: self.group,
                data: &self.data * &other.data - &other.data * &self.data,
            },
        }
    }

    pub fn exp(&self) -> GroupElement {
        let g = self.group;
        let data = match g {
            LieGroup::Transl(_) => self.data.clone(),
            LieGroup::So2 => {
                let th = self.data[(1, 0)];
                let (s, c) = th.sin_cos();
                DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
            }
            LieGroup::So3 => {
                let w = g.coords(self);
                let th2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
                let th = th2.sqrt();
                let (a, b) = if th < 1e-4 {
                    (
                        1.0 - th2 / 6.0 + th2 * th2 / 120.0,
                        0.5 - th2 / 24.0 + th2 * th2 / 720.0,
                    )
                } else {
                    (th.sin() / th, (1.0 - th.cos()) / th2)
                };
                let k = &self.data;
                DMatrix::identity(3, 3) + k * a + (k * k) * b
            }
        };
        GroupElement { group: g, data }
    }
}

impl GroupElement {
    pub fn inv(&self) -> Self {
        let data = match self.group {
            LieGroup::Transl(_) => -&self.data,
            _ => self.data.transpose(),
        };
        Self {
            group: self.group,
            data,
        }
    }

    /// Ad(g)X = gXg⁻¹; the identity on translation algebras.
    pub fn ad(&self, x: &AlgebraElement) -> AlgebraElement {
        assert_eq!(self.group, x.group, "adjoint across groups");
        match self.group {
            LieGroup::Transl(_) => x.clone(),
            _ => AlgebraElement {
                group: self.group,
                data: &self.data * &x.data * self.data.transpose(),
            },
        }
    }

    /// Ad(g⁻¹)X without forming the inverse separately.
    pub fn ad_inv(&self, x: &AlgebraElement) -> AlgebraElement {
        assert_eq!(self.group, x.group, "adjoint across groups");
        match self.group {
            LieGroup::Transl(_) => x.clone(),
            _ => AlgebraElement {
                group: self.group,
                data: self.data.transpose() * &x.data * &self.data,
            },
        }
    }

    pub fn log(&self) -> Result<AlgebraElement> {
        let g = self.group;
        match g {
            LieGroup::Transl(_) => Ok(AlgebraElement {
                group: g,
                data: self.data.clone(),
            }),
            _ => {
                let n = g.ambient_dim();
                let dist = (&self.data - DMatrix::identity(n, n)).norm();
                if dist >= LOG_RADIUS || !dist.is_finite() {
                    return Err(Error::SingularLog {
                        norm: dist,
                        radius: LOG_RADIUS,
                    });
                }
                let d = &self.data;
                match g {
                    LieGroup::So2 => {
                        let th = d[(1, 0)].atan2(d[(0, 0)]);
                        Ok(g.algebra_from_coords(&[th]))
                    }
                    _ => {
                        let skew = [
                            0.5 * (d[(2, 1)] - d[(1, 2)]),
                            0.5 * (d[(0, 2)] - d[(2, 0)]),
                            0.5 * (d[(1, 0)] - d[(0, 1)]),
                        ];
                        let s = (skew[0] * skew[0] + skew[1] * skew[1] + skew[2] * skew[2]).sqrt();
                        let c = 0.5 * (d.trace() - 1.0);
                        let th = s.atan2(c);
                        let f = if th < 1e-4 {
                            1.0 + th * th / 6.0
                        } else {
                            th / th.sin()
                        };
                        Ok(g.algebra_from_coords(&[skew[0] * f, skew[1] * f, skew[2] * f]))
                    }
                }
            }
        }
    }

    /// Group distance ‖log(a⁻¹b)‖_F, falling back to ‖a − b‖_F outside the log radius.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.group, other.group, "distance across groups");
        match (&self.inv() * other).log() {
            Ok(x) => x.norm(),
            Err(_) => (&self.data - &other.data).norm(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: &GroupElement) -> GroupElement {
        assert_eq!(self.group, rhs.group, "product across groups");
        let data = match self.group {
            LieGroup::Transl(_) => &self.data + &rhs.data,
            _ => &self.data * &rhs.data,
        };
        GroupElement {
            group: self.group,
            data,
        }
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        &self * &rhs
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert_eq!(self.group, rhs.group, "sum across algebras");
        AlgebraElement {
            group: self.group,
            data: &self.data + &rhs.data,
        }
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(mut self, rhs: AlgebraElement) -> AlgebraElement {
        self += &rhs;
        self
    }
}

impl AddAssign<&AlgebraElement> for AlgebraElement {
    fn add_assign(&mut self, rhs: &AlgebraElement) {
        assert_eq!(self.group, rhs.group, "sum across algebras");
        self.data += &rhs.data;
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert_eq!(self.group, rhs.group, "difference across algebras");
        AlgebraElement {
            group: self.group,
            data: &self.data - &rhs.data,
        }
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: AlgebraElement) -> AlgebraElement {
        &self - &rhs
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(-1.0)
    }
}

impl Neg for AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, s: f64) -> AlgebraElement {
        self.scale(s)
    }
}

impl Mul<f64> for AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, s: f64) -> AlgebraElement {
        self.scale(s)
    }
}

pub fn exp_map(x: &AlgebraElement) -> Result<GroupElement> {
    check_shape(x.group, &x.data)?;
    Ok(x.exp())
}

pub fn log_map(g: &GroupElement) -> Result<AlgebraElement> {
    check_shape(g.group, &g.data)?;
    g.log()
}

pub fn algebra_bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    if x.group != y.group {
        return Err(Error::DimensionMismatch(format!(
            "bracket of {} and {}",
            x.group, y.group
        )));
    }
    Ok(x.bracket(y))
}

pub fn adjoint(g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
    if g.group != x.group {
        return Err(Error::DimensionMismatch(format!(
            "Ad of {} on {}",
            g.group, x.group
        )));
    }
    Ok(g.ad(x))
}

pub fn group_distance(a: &GroupElement, b: &GroupElement) -> Result<f64> {
    if a.group != b.group {
        return Err(Error::DimensionMismatch(format!(
            "distance between {} and {}",
            a.group, b.group
        )));
    }
    Ok(a.distance(b))
}

fn check_shape(g: LieGroup, m: &DMatrix<f64>) -> Result<()> {
    if m.shape() != g.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} is not a valid shape for {}",
            m.shape(),
            g
        )));
    }
    Ok(())
}

/// dexp⁻¹_u(v) truncated after the second bracket, enough for order-4 schemes.
pub fn dexp_inv(u: &AlgebraElement, v: &AlgebraElement) -> AlgebraElement {
    if u.group.is_abelian() {
        return v.clone();
    }
    let uv = u.bracket(v);
    let uuv = u.bracket(&uv);
    let mut out = v.clone();
    out += &uv.scale(-0.5);
    out += &uuv.scale(1.0 / 12.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn so2_quarter_turn() {
        let g = LieGroup::So2.algebra_from_coords(&[FRAC_PI_2]).exp();
        let want = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((g.data - want).norm() < 1e-15);
    }

    #[test]
    fn so3_structure_constants() {
        let b = LieGroup::So3.basis();
        assert!((b[0].bracket(&b[1]) - b[2].clone()).norm() < 1e-15);
        assert!((b[1].bracket(&b[2]) - b[0].clone()).norm() < 1e-15);
    }

    #[test]
    fn log_outside_radius_errors() {
        let g = LieGroup::So3.algebra_from_coords(&[0.0, 0.0, 2.5]).exp();
        assert!(matches!(g.log(), Err(Error::SingularLog { .. })));
    }

    #[test]
    fn so2_distance_closed_form() {
        let a = LieGroup::So2.algebra_from_coords(&[0.1]).exp();
        let b = LieGroup::So2.algebra_from_coords(&[0.3]).exp();
        assert!((a.distance(&b) - 0.2 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn group_ids_round_trip() {
        for id in ["so2", "so3", "transl1", "transl3"] {
            assert_eq!(LieGroup::parse(id).unwrap().id(), id);
        }
        assert!(LieGroup::parse("sl2").is_err());
    }
}
