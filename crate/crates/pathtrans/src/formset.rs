//! Gauge data (Ā, A, B₀, B₁, C₀ᴸ, C₀ᴿ, C₁ᴸ, C₁ᴿ) over a crossed module, the
//! decoration form C₁ and the optional K-valued forms for k*.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{
    adjoint_lift_1, adjoint_lift_2, equivariant_lift_1, equivariant_lift_2, exterior_derivative,
    BaseOneForm, BaseTwoForm, BundlePoint, BundleTangent, BundleTwoForm, ChartDomain,
    LiftedOneForm, LiftedTwoForm,
};
use crate::lie::AlgebraElement;
use crate::module::{CrossedModule, FiberAction, SecondModule};

/// How B₁ is obtained from C₁ under the reduction condition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum B1Mode {
    /// Full exterior derivative of the lifted C₁ in trivialization coordinates.
    Full,
    /// The full derivative evaluated on the Ā-horizontal parts of its arguments.
    Proj,
    /// −(d(Γ̃*C₁) + ½[Γ̃*C₁, Γ̃*C₁])(∂ₛ, ∂ₜ) computed on the parameter square.
    #[default]
    Pullback,
}

impl B1Mode {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Proj => "proj",
            Self::Pullback => "pullback",
        }
    }

    pub const ALL: [B1Mode; 3] = [B1Mode::Full, B1Mode::Proj, B1Mode::Pullback];
}

impl FromStr for B1Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(Self::Full),
            "proj" => Ok(Self::Proj),
            "pullback" => Ok(Self::Pullback),
            other => Err(Error::UnknownId {
                kind: "b1 mode",
                id: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for B1Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// The L(H)-valued two-form B₁.
#[derive(Clone, Debug)]
pub enum B1Spec {
    /// A base form lifted through α.
    Form(BaseTwoForm),
    /// `sign · (−(dC₁ + ½[C₁,C₁]))` built from the decoration form C₁.
    /// `sign = −1` is the flipped negative control.
    Derived { mode: B1Mode, sign: f64 },
}

impl B1Spec {
    pub fn derived(mode: B1Mode) -> Self {
        Self::Derived { mode, sign: 1.0 }
    }

    pub fn mode(&self) -> Option<B1Mode> {
        match self {
            Self::Form(_) => None,
            Self::Derived { mode, .. } => Some(*mode),
        }
    }
}

/// K-valued forms for the second-level decoration.
#[derive(Clone, Debug)]
pub struct HigherForms {
    pub second: SecondModule,
    pub c2l: BaseOneForm,
    pub c2r: BaseOneForm,
    pub d: BaseTwoForm,
}

impl HigherForms {
    pub fn zero(second: SecondModule, chart: &ChartDomain) -> Self {
        Self {
            second,
            c2l: BaseOneForm::zero(chart.clone(), second.k),
            c2r: BaseOneForm::zero(chart.clone(), second.k),
            d: BaseTwoForm::zero(chart.clone(), second.k),
        }
    }

    pub fn c2l_lift(&self) -> LiftedOneForm {
        equivariant_lift_1(&self.c2l, Arc::new(self.second))
    }

    pub fn c2r_lift(&self) -> LiftedOneForm {
        equivariant_lift_1(&self.c2r, Arc::new(self.second))
    }

    pub fn d_lift(&self) -> LiftedTwoForm {
        equivariant_lift_2(&self.d, Arc::new(self.second))
    }
}

/// Complete gauge data over a crossed module.
#[derive(Clone, Debug)]
pub struct FormSet {
    pub module: CrossedModule,
    pub chart: ChartDomain,
    pub abar: BaseOneForm,
    pub a: BaseOneForm,
    pub b0: BaseTwoForm,
    pub b1: B1Spec,
    pub c0l: BaseOneForm,
    pub c0r: BaseOneForm,
    pub c1l: BaseOneForm,
    pub c1r: BaseOneForm,
    /// Decoration form for h*, g* = τ(h*) and the shifted connection Ā + τC₁.
    pub c1: BaseOneForm,
    pub higher: Option<HigherForms>,
}

impl FormSet {
    /// All forms zero.
    pub fn zero(module: CrossedModule, chart: ChartDomain) -> Self {
        let (g, h) = (module.g, module.h);
        Self {
            module,
            abar: BaseOneForm::zero(chart.clone(), g),
            a: BaseOneForm::zero(chart.clone(), g),
            b0: BaseTwoForm::zero(chart.clone(), g),
            b1: B1Spec::Form(BaseTwoForm::zero(chart.clone(), h)),
            c0l: BaseOneForm::zero(chart.clone(), g),
            c0r: BaseOneForm::zero(chart.clone(), g),
            c1l: BaseOneForm::zero(chart.clone(), h),
            c1r: BaseOneForm::zero(chart.clone(), h),
            c1: BaseOneForm::zero(chart.clone(), h),
            higher: None,
            chart,
        }
    }

    /// Forms satisfying the reduction condition: C₁ᴸ = C₁ᴿ = −C₁, A = Ā and
    /// B₁ derived from C₁ in the given mode.
    pub fn reduction(module: CrossedModule, chart: ChartDomain, abar: BaseOneForm, c1: BaseOneForm, mode: B1Mode) -> Self {
        let mut fs = Self::zero(module, chart);
        fs.a = abar.clone();
        fs.abar = abar;
        fs.c1l = c1.scaled(-1.0);
        fs.c1r = c1.scaled(-1.0);
        fs.c1 = c1;
        fs.b1 = B1Spec::derived(mode);
        fs
    }

    /// Checks that every form is valued in the right algebra and lives on the
    /// same chart.
    pub fn validate(&self) -> Result<()> {
        let (g, h) = (self.module.g, self.module.h);
        let one = [
            ("abar", &self.abar, g),
            ("a", &self.a, g),
            ("c0L", &self.c0l, g),
            ("c0R", &self.c0r, g),
            ("c1L", &self.c1l, h),
            ("c1R", &self.c1r, h),
            ("c1", &self.c1, h),
        ];
        for (name, f, target) in one {
            if f.target() != target {
                return Err(Error::ModuleMismatch(format!("{name} is valued in {} instead of {target}", f.target())));
            }
            if f.chart() != &self.chart {
                return Err(Error::DimensionMismatch(format!("{name} lives on a different chart")));
            }
        }
        if self.b0.target() != g {
            return Err(Error::ModuleMismatch(format!("b0 is valued in {} instead of {g}", self.b0.target())));
        }
        if let B1Spec::Form(b1) = &self.b1 {
            if b1.target() != h {
                return Err(Error::ModuleMismatch(format!("b1 is valued in {} instead of {h}", b1.target())));
            }
        }
        if let Some(hf) = &self.higher {
            if hf.second.g != g {
                return Err(Error::ModuleMismatch("second module over a different G".into()));
            }
        }
        Ok(())
    }

    pub fn h_action(&self) -> Arc<dyn FiberAction> {
        Arc::new(self.module.h_action())
    }

    pub fn b0_lift(&self) -> LiftedTwoForm {
        adjoint_lift_2(&self.b0, self.module.g)
    }

    pub fn c0l_lift(&self) -> LiftedOneForm {
        adjoint_lift_1(&self.c0l, self.module.g)
    }

    pub fn c0r_lift(&self) -> LiftedOneForm {
        adjoint_lift_1(&self.c0r, self.module.g)
    }

    pub fn c1l_lift(&self) -> LiftedOneForm {
        equivariant_lift_1(&self.c1l, self.h_action())
    }

    pub fn c1r_lift(&self) -> LiftedOneForm {
        equivariant_lift_1(&self.c1r, self.h_action())
    }

    pub fn c1_lift(&self) -> LiftedOneForm {
        equivariant_lift_1(&self.c1, self.h_action())
    }

    /// B₁ as a two-form on P. In pullback mode a single tangent pair has no
    /// parameter square, so the full-derivative formula is used.
    pub fn b1_form(&self) -> Box<dyn BundleTwoForm> {
        match &self.b1 {
            B1Spec::Form(b) => Box::new(equivariant_lift_2(b, self.h_action())),
            B1Spec::Derived { mode, sign } => Box::new(DerivedB1 {
                module: self.module,
                c1: self.c1.clone(),
                abar: self.abar.clone(),
                project: *mode == B1Mode::Proj,
                sign: *sign,
            }),
        }
    }

    /// Â = Ā + dτ∘C₁.
    pub fn shifted_connection(&self) -> BaseOneForm {
        let m = self.module;
        self.abar.plus(&self.c1.mapped(m.g, move |y| m.dtau(y)))
    }
}

/// −sign·(dC₁ + ½[C₁,C₁]) on P with C₁ lifted through α.
#[derive(Clone, Debug)]
pub struct DerivedB1 {
    module: CrossedModule,
    c1: BaseOneForm,
    abar: BaseOneForm,
    project: bool,
    sign: f64,
}

impl DerivedB1 {
    fn horizontal(&self, p: &BundlePoint, u: &BundleTangent) -> BundleTangent {
        if self.project {
            crate::geometry::horizontal_tangent(&self.abar, p, &u.v)
        } else {
            u.clone()
        }
    }
}

impl BundleTwoForm for DerivedB1 {
    fn target(&self) -> crate::lie::LieGroup {
        self.module.h
    }

    fn eval(&self, p: &BundlePoint, u: &BundleTangent, v: &BundleTangent) -> AlgebraElement {
        let u = self.horizontal(p, u);
        let v = self.horizontal(p, v);
        let m = &self.module;
        let ginv = p.g.inv();
        let cu = m.dalpha(&ginv, &self.c1.eval(&p.x, &u.v));
        let cv = m.dalpha(&ginv, &self.c1.eval(&p.x, &v.v));
        let dc = exterior_derivative(&self.c1, &p.x, &u.v, &v.v)
            .map(|d| m.dalpha(&ginv, &d))
            .unwrap_or_else(|_| m.h.zero_algebra());
        let d_lift = dc - m.act_inf(&u.w, &cv) + m.act_inf(&v.w, &cu);
        (d_lift + cu.bracket(&cv)).scale(-self.sign)
    }

    fn is_zero(&self) -> bool {
        self.c1.is_zero()
    }
}

