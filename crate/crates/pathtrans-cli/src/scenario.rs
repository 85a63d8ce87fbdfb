//! Scenario files: a TOML document naming the crossed module, chart, form
//! presets, paths, grids and per-check tolerances.

use std::path::{Path, PathBuf};

use pathtrans::formset::{B1Mode, B1Spec, FormSet, HigherForms};
use pathtrans::geometry::{parse_generator, parse_one_form, parse_two_form, BaseOneForm, BaseTwoForm, ChartDomain};
use pathtrans::integrate::Integrator;
use pathtrans::module::SecondModule;
use pathtrans::path::{parse_family, parse_path, PathFamily, SampledPath, TimeGrid};
use pathtrans::{CrossedModule, GroupElement, LieGroup};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest accepted grid, in nodes.
pub const MIN_NODES: usize = 21;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read scenario {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("scenario field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_error(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message: message.to_string(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub module: ModuleSection,
    #[serde(default)]
    pub chart: ChartSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default = "default_integrator")]
    pub integrator: String,
    #[serde(default = "default_b1_mode")]
    pub b1_mode: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub forms: FormsSection,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub converge: ConvergeSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_integrator() -> String {
    Integrator::default().id().to_string()
}

fn default_b1_mode() -> String {
    B1Mode::default().id().to_string()
}

fn default_seed() -> u64 {
    42
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSection {
    /// `conj:<group>` or `vec:<group>x<m>`.
    pub id: String,
    /// Optional second module `k:<m>` or `k:<m>:rep` for k*.
    #[serde(default)]
    pub second: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSection {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Default for ChartSection {
    fn default() -> Self {
        Self {
            lo: vec![-2.0, -2.0],
            hi: vec![2.0, 2.0],
        }
    }
}

/// Grid sizes in nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_nodes")]
    pub t: usize,
    #[serde(default = "default_nodes")]
    pub s: usize,
}

fn default_nodes() -> usize {
    101
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            t: default_nodes(),
            s: default_nodes(),
        }
    }
}

fn zero_form() -> String {
    "zero".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormsSection {
    #[serde(default = "zero_form")]
    pub abar: String,
    /// Defaults to `abar`.
    #[serde(default)]
    pub a: Option<String>,
    #[serde(default = "zero_form")]
    pub b0: String,
    /// A two-form preset, or `derived` to build B₁ from C₁ in `b1_mode`.
    #[serde(default = "zero_form")]
    pub b1: String,
    /// Multiplies a derived B₁; `-1` is the sign-flipped negative control.
    #[serde(default = "one")]
    pub b1_sign: f64,
    #[serde(default = "zero_form")]
    pub c0l: String,
    #[serde(default = "zero_form")]
    pub c0r: String,
    #[serde(default = "zero_form")]
    pub c1l: String,
    #[serde(default = "zero_form")]
    pub c1r: String,
    #[serde(default = "zero_form")]
    pub c1: String,
    #[serde(default = "zero_form")]
    pub c2l: String,
    #[serde(default = "zero_form")]
    pub c2r: String,
    #[serde(default = "zero_form")]
    pub d: String,
    /// Impose the reduction condition: A = Ā, C₁ᴸ = C₁ᴿ = −C₁ and B₁ derived.
    #[serde(default)]
    pub reduction: bool,
}

fn one() -> f64 {
    1.0
}

impl Default for FormsSection {
    fn default() -> Self {
        Self {
            abar: zero_form(),
            a: None,
            b0: zero_form(),
            b1: zero_form(),
            b1_sign: 1.0,
            c0l: zero_form(),
            c0r: zero_form(),
            c1l: zero_form(),
            c1r: zero_form(),
            c1: zero_form(),
            c2l: zero_form(),
            c2r: zero_form(),
            d: zero_form(),
            reduction: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    #[serde(default = "default_path")]
    pub path: String,
    #[serde(default = "default_family")]
    pub family: String,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_path() -> String {
    "segment:0,0:1,1".into()
}

fn default_family() -> String {
    "sheet:0,0:1,1".into()
}

fn default_margin() -> f64 {
    pathtrans::path::DEFAULT_MARGIN
}

impl Default for PathsSection {
    fn default() -> Self {
        Self {
            path: default_path(),
            family: default_family(),
            margin: default_margin(),
        }
    }
}

/// Initial fiber data as generators, exponentiated.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub g: String,
    #[serde(default)]
    pub h: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_command")]
    pub command: String,
}

fn default_command() -> String {
    "transport".into()
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            command: default_command(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_suite")]
    pub suite: String,
    /// Random samples per algebraic check.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Random tangents per connection check.
    #[serde(default = "default_probes")]
    pub probes: usize,
}

fn default_suite() -> String {
    "all".into()
}

fn default_samples() -> usize {
    100
}

fn default_probes() -> usize {
    20
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            suite: default_suite(),
            samples: default_samples(),
            probes: default_probes(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    #[serde(default = "default_check")]
    pub check: String,
    #[serde(default = "default_refinements")]
    pub refinements: usize,
}

fn default_check() -> String {
    "stokes".into()
}

fn default_refinements() -> usize {
    3
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self {
            check: default_check(),
            refinements: default_refinements(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "tol_lie")]
    pub lie: f64,
    #[serde(default = "tol_omega")]
    pub omega: f64,
    #[serde(default = "tol_omega")]
    pub omega_dec: f64,
    #[serde(default = "tol_split")]
    pub split: f64,
    #[serde(default = "tol_lie")]
    pub categorical: f64,
    /// Transport of a translated initial point against the translated trajectory.
    #[serde(default = "tol_equivariance")]
    pub equivariance: f64,
    #[serde(default = "tol_stokes")]
    pub stokes: f64,
    #[serde(default = "tol_lie")]
    pub stokes_abelian: f64,
    #[serde(default = "tol_reduction")]
    pub reduction: f64,
    #[serde(default = "tol_shift")]
    pub endpoint_shift: f64,
    /// Allowed deviation of an observed convergence slope.
    #[serde(default = "tol_slope")]
    pub slope: f64,
}

fn tol_lie() -> f64 {
    1e-9
}
fn tol_omega() -> f64 {
    1e-10
}
fn tol_split() -> f64 {
    1e-9
}
fn tol_equivariance() -> f64 {
    1e-8
}
fn tol_stokes() -> f64 {
    1e-3
}
fn tol_reduction() -> f64 {
    1e-4
}
fn tol_shift() -> f64 {
    1e-6
}
fn tol_slope() -> f64 {
    0.4
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lie: tol_lie(),
            omega: tol_omega(),
            omega_dec: tol_omega(),
            split: tol_split(),
            categorical: tol_lie(),
            equivariance: tol_equivariance(),
            stokes: tol_stokes(),
            stokes_abelian: tol_lie(),
            reduction: tol_reduction(),
            endpoint_shift: tol_shift(),
            slope: tol_slope(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub grid_t: Option<usize>,
    pub grid_s: Option<usize>,
    pub integrator: Option<String>,
    pub b1_mode: Option<String>,
    pub refinements: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

impl Scenario {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.grid_t {
            self.grid.t = n;
        }
        if let Some(n) = o.grid_s {
            self.grid.s = n;
        }
        if let Some(i) = &o.integrator {
            self.integrator = i.clone();
        }
        if let Some(m) = &o.b1_mode {
            self.b1_mode = m.clone();
        }
        if let Some(k) = o.refinements {
            self.converge.refinements = k;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.out {
            self.output = Some(d.clone());
        }
    }

    /// Resolves every id and preset, reporting the first offending field.
    pub fn build(&self) -> Result<Setup, ConfigError> {
        let module = CrossedModule::parse(&self.module.id).map_err(|e| field_error("module.id", e))?;
        let chart = ChartDomain::new(self.chart.lo.clone(), self.chart.hi.clone()).map_err(|e| field_error("chart", e))?;
        for (field, n) in [("grid.t", self.grid.t), ("grid.s", self.grid.s)] {
            if n < MIN_NODES {
                return Err(field_error(field, format!("{n} nodes; at least {MIN_NODES} are required")));
            }
        }
        let integrator: Integrator = self.integrator.parse().map_err(|e| field_error("integrator", e))?;
        let b1_mode: B1Mode = self.b1_mode.parse().map_err(|e| field_error("b1_mode", e))?;
        if !(self.paths.margin > 0.0 && self.paths.margin < 0.5) {
            return Err(field_error("paths.margin", "must lie in (0, 0.5)"));
        }
        let one = |field: &str, spec: &str, g: LieGroup| -> Result<BaseOneForm, ConfigError> {
            parse_one_form(spec, &chart, g).map_err(|e| field_error(&format!("forms.{field}"), e))
        };
        let two = |field: &str, spec: &str, g: LieGroup| -> Result<BaseTwoForm, ConfigError> {
            parse_two_form(spec, &chart, g).map_err(|e| field_error(&format!("forms.{field}"), e))
        };
        let f = &self.forms;
        let (g, h) = (module.g, module.h);
        let abar = one("abar", &f.abar, g)?;
        let c1 = one("c1", &f.c1, h)?;
        let mut fs = if f.reduction {
            for (field, value) in [("a", f.a.as_deref()), ("c1l", Some(f.c1l.as_str())), ("c1r", Some(f.c1r.as_str()))] {
                if value.is_some_and(|v| v != "zero") {
                    return Err(field_error(&format!("forms.{field}"), "is fixed by `forms.reduction = true`"));
                }
            }
            if f.b1 != "zero" && f.b1 != "derived" {
                return Err(field_error("forms.b1", "must be `derived` under `forms.reduction = true`"));
            }
            FormSet::reduction(module, chart.clone(), abar.clone(), c1, b1_mode)
        } else {
            let mut fs = FormSet::zero(module, chart.clone());
            fs.a = match &f.a {
                Some(spec) => one("a", spec, g)?,
                None => abar.clone(),
            };
            fs.abar = abar;
            fs.c1l = one("c1l", &f.c1l, h)?;
            fs.c1r = one("c1r", &f.c1r, h)?;
            fs.c1 = c1;
            fs.b1 = if f.b1 == "derived" {
                B1Spec::derived(b1_mode)
            } else {
                B1Spec::Form(two("b1", &f.b1, h)?)
            };
            fs
        };
        if let B1Spec::Derived { sign, .. } = &mut fs.b1 {
            *sign = f.b1_sign;
        }
        fs.b0 = two("b0", &f.b0, g)?;
        fs.c0l = one("c0l", &f.c0l, g)?;
        fs.c0r = one("c0r", &f.c0r, g)?;
        if let Some(id) = &self.module.second {
            let second = SecondModule::parse(g, id).map_err(|e| field_error("module.second", e))?;
            fs.higher = Some(HigherForms {
                second,
                c2l: one("c2l", &f.c2l, second.k)?,
                c2r: one("c2r", &f.c2r, second.k)?,
                d: two("d", &f.d, second.k)?,
            });
        }
        fs.validate().map_err(|e| field_error("forms", e))?;
        let g0 = parse_generator(g, &self.initial.g).map_err(|e| field_error("initial.g", e))?.exp();
        let h0 = parse_generator(h, &self.initial.h).map_err(|e| field_error("initial.h", e))?.exp();
        let setup = Setup {
            forms: fs,
            integrator,
            b1_mode,
            g0,
            h0,
            margin: self.paths.margin,
            path_spec: self.paths.path.clone(),
            family_spec: self.paths.family.clone(),
            nt: self.grid.t,
            ns: self.grid.s,
        };
        setup.path(setup.nt).map_err(|e| field_error("paths.path", e))?;
        setup.family(setup.nt, setup.ns).map_err(|e| field_error("paths.family", e))?;
        Ok(setup)
    }
}

/// A resolved scenario.
#[derive(Clone, Debug)]
pub struct Setup {
    pub forms: FormSet,
    pub integrator: Integrator,
    pub b1_mode: B1Mode,
    pub g0: GroupElement,
    pub h0: GroupElement,
    pub margin: f64,
    pub path_spec: String,
    pub family_spec: String,
    /// Grid sizes in nodes.
    pub nt: usize,
    pub ns: usize,
}

impl Setup {
    pub fn module(&self) -> CrossedModule {
        self.forms.module
    }

    /// The scenario path on a grid of `nodes` nodes, checked against the chart.
    pub fn path(&self, nodes: usize) -> pathtrans::Result<SampledPath> {
        let p = parse_path(&self.path_spec, TimeGrid::unit(nodes - 1), self.margin)?;
        p.check_in_chart(&self.forms.chart)?;
        Ok(p)
    }

    /// The scenario family on an `nt × ns` node grid, checked against the chart.
    pub fn family(&self, nt: usize, ns: usize) -> pathtrans::Result<PathFamily> {
        let f = parse_family(&self.family_spec, TimeGrid::unit(nt - 1), TimeGrid::unit(ns - 1), self.margin)?;
        f.check_in_chart(&self.forms.chart)?;
        Ok(f)
    }
}
