//! `run`, `verify` and `converge` on a resolved scenario.

use std::path::Path;
use std::time::Instant;

use pathtrans::categorical::{
    decorated_compose, exchange_residual, morphism_endpoints, target_coherence_residual, vertical_compose, DecoratedMorphism,
    Morphism2G,
};
use pathtrans::convergence::{refinements, ConvergenceReport};
use pathtrans::decorated::{
    dec_right_action, dec_right_action_tangent, endpoint_shift_residual, hat_omega_transport, higher_decoration_kstar,
    nonabelian_stokes_residual, omega_dec_eval, omega_dec_transport, omega_decorated_eval, omega_split, reduction_residual,
    smooth_field, vertical_vector, DecoratedPoint, DecoratedTangent,
};
use pathtrans::formset::{B1Spec, FormSet};
use pathtrans::geometry::{BaseOneForm, BundlePoint, BundleTangent};
use pathtrans::path::{segment, BasePathTangent, BundlePath, PathTangent, TimeGrid};
use pathtrans::pathspace::{horizontal_lift, loop_holonomy, omega_eval, omega_transport, tangent_lift};
use pathtrans::{AlgebraElement, CrossedModule, GroupElement, LieGroup, SemidirectAlgebraElement, SemidirectElement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use thiserror::Error;

use crate::report::{group_json, write_bundle_paths, write_group_curve, Check, Convergence, Report, Timing};
use crate::scenario::{ConfigError, Scenario, Setup};

pub const RUN_COMMANDS: [&str; 5] = ["lift", "transport", "dec-transport", "hat-transport", "holonomy"];
pub const SUITES: [&str; 7] = ["lie", "omega", "Omega", "categorical", "stokes", "reduction", "all"];
pub const CONVERGENCE_CHECKS: [&str; 4] = ["stokes", "endpoint-shift", "reduction", "flat"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Numeric {
        context: String,
        #[source]
        source: pathtrans::Error,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

trait Context<T> {
    fn ctx(self, context: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for pathtrans::Result<T> {
    fn ctx(self, context: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numeric {
            context: context.to_string(),
            source,
        })
    }
}

fn io<T>(r: std::io::Result<T>, path: &Path) -> Result<T, CliError> {
    r.map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn invalid_choice(field: &str, value: &str, choices: &[&str]) -> CliError {
    CliError::Config(ConfigError::Field {
        field: field.to_string(),
        message: format!("unknown value '{value}', expected one of {}", choices.join(", ")),
    })
}

/// Deterministic per-stage random source derived from the scenario seed.
fn rng_for(seed: u64, stage: &str) -> ChaCha8Rng {
    let salt = stage.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

fn rand_alg(rng: &mut ChaCha8Rng, g: LieGroup, scale: f64) -> AlgebraElement {
    let c: Vec<f64> = (0..g.dim()).map(|_| rng.random_range(-scale..scale)).collect();
    g.algebra_from_coords(&c)
}

fn rand_elem(rng: &mut ChaCha8Rng, g: LieGroup) -> GroupElement {
    rand_alg(rng, g, 1.0).exp()
}

fn rand_sd(rng: &mut ChaCha8Rng, m: &CrossedModule) -> SemidirectElement {
    SemidirectElement {
        h: rand_elem(rng, m.h),
        g: rand_elem(rng, m.g),
    }
}

/// A valid tangent to the horizontal path space along `ovg`.
fn rand_tangent(rng: &mut ChaCha8Rng, abar: &BaseOneForm, ovg: &BundlePath) -> pathtrans::Result<PathTangent> {
    let d = ovg.initial().x.len();
    let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let r = rng.random_range(0.5..3.0);
    let vectors: Vec<Vec<f64>> = ovg
        .grid
        .nodes()
        .iter()
        .map(|&t| (0..d).map(|k| p[k] + 0.5 * (r * t + k as f64).sin()).collect())
        .collect();
    let v = BasePathTangent::new(ovg.grid, vectors)?;
    let vbar0 = BundleTangent::new(v.vectors[0].clone(), rand_alg(rng, ovg.group(), 1.0));
    tangent_lift(abar, ovg, &v, &vbar0)
}

/// A random point well inside the chart.
fn rand_point(rng: &mut ChaCha8Rng, setup: &Setup) -> Vec<f64> {
    let c = &setup.forms.chart;
    c.lo()
        .iter()
        .zip(c.hi())
        .map(|(lo, hi)| {
            let pad = 0.2 * (hi - lo);
            rng.random_range(lo + pad..hi - pad)
        })
        .collect()
}

fn constraint(values: &[&GroupElement]) -> f64 {
    values
        .iter()
        .map(|g| if g.is_finite() { g.group.constraint_residual(g) } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

fn fibers(rows: &[BundlePath]) -> Vec<&GroupElement> {
    rows.iter().flat_map(|r| r.points.iter().map(|p| &p.g)).collect()
}

fn max_fiber_gap(a: &[BundlePath], b: &[BundlePath]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.points.iter().zip(&rb.points).map(|(p, q)| p.g.distance(&q.g)))
        .fold(0.0, f64::max)
}

fn lift_first_row(setup: &Setup, g0: &GroupElement) -> Result<BundlePath, CliError> {
    let fam = setup.family(setup.nt, setup.ns).ctx("family")?;
    let row = fam.row(0);
    horizontal_lift(&setup.forms.abar, &row, &BundlePoint::new(row.initial().to_vec(), g0.clone()), setup.integrator)
        .ctx("lifting the first row of the family")
}

struct Stage {
    name: String,
    start: Instant,
}

impl Stage {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            start: Instant::now(),
        }
    }

    fn end(self, report: &mut Report) {
        report.timings.push(Timing {
            stage: self.name,
            seconds: self.start.elapsed().as_secs_f64(),
        });
    }
}

/// Writes CSVs only when an output directory is given.
struct Sink<'a> {
    dir: Option<&'a Path>,
}

impl Sink<'_> {
    fn paths(&self, report: &mut Report, name: &str, s_nodes: &[f64], rows: &[BundlePath]) -> Result<(), CliError> {
        if let Some(dir) = self.dir {
            let file = format!("trajectory_{name}.csv");
            let path = dir.join(&file);
            io(write_bundle_paths(&path, s_nodes, rows), &path)?;
            report.outputs.push(file);
        }
        Ok(())
    }

    fn curve(&self, report: &mut Report, name: &str, s_nodes: &[f64], values: &[GroupElement]) -> Result<(), CliError> {
        if let Some(dir) = self.dir {
            let file = format!("trajectory_{name}.csv");
            let path = dir.join(&file);
            io(write_group_curve(&path, name, s_nodes, values), &path)?;
            report.outputs.push(file);
        }
        Ok(())
    }
}

/// `run`: one transport computation with trajectory output.
pub fn run(sc: &Scenario, setup: &Setup, command: &str, out: Option<&Path>) -> Result<Report, CliError> {
    if !RUN_COMMANDS.contains(&command) {
        return Err(invalid_choice("run.command", command, &RUN_COMMANDS));
    }
    let mut report = Report::new("run", command, sc);
    let sink = Sink { dir: out };
    let fs = &setup.forms;
    let m = fs.module;
    let tol = &sc.tolerances;
    let stage = Stage::new(command);
    let mut rng = rng_for(sc.seed, command);
    match command {
        "lift" | "holonomy" => {
            let path = setup.path(setup.nt).ctx("path")?;
            let ovg = horizontal_lift(&fs.abar, &path, &BundlePoint::new(path.initial().to_vec(), setup.g0.clone()), setup.integrator)
                .ctx("horizontal lift")?;
            sink.paths(&mut report, "lift", &[0.0], std::slice::from_ref(&ovg))?;
            report.values.insert("terminal_g".into(), group_json(&ovg.terminal().g));
            let mut all = fibers(std::slice::from_ref(&ovg));
            let hol;
            if command == "holonomy" {
                hol = loop_holonomy(&fs.abar, &path, &setup.g0, setup.integrator).ctx("loop holonomy")?;
                let rel = &setup.g0.inv() * &hol;
                report.values.insert("holonomy".into(), group_json(&hol));
                report
                    .values
                    .insert("holonomy_distance_from_identity".into(), Value::from(rel.distance(&m.g.identity())));
                all.push(&hol);
            }
            report.checks.push(Check::below(format!("{command}.constraint"), constraint(&all), tol.lie));
        }
        "transport" => {
            let fam = setup.family(setup.nt, setup.ns).ctx("family")?;
            let init = lift_first_row(setup, &setup.g0)?;
            let tr = omega_transport(fs, &fam, &init, setup.integrator).ctx("omega transport")?;
            let s_nodes = fam.s_grid.nodes();
            sink.paths(&mut report, "transport", &s_nodes, &tr.tilde)?;
            sink.curve(&mut report, "a", &s_nodes, &tr.a)?;
            report.values.insert("a_final".into(), group_json(tr.a.last().expect("non-empty grid")));
            let g1 = rand_elem(&mut rng, m.g);
            let shifted = omega_transport(fs, &fam, &init.right(&g1), setup.integrator).ctx("shifted omega transport")?;
            let expected: Vec<BundlePath> = tr.tilde.iter().map(|r| r.right(&g1)).collect();
            let mut all = fibers(&tr.tilde);
            all.extend(&tr.a);
            report.checks.push(Check::below("transport.constraint", constraint(&all), tol.lie));
            report
                .checks
                .push(Check::below("transport.equivariance", max_fiber_gap(&shifted.tilde, &expected), tol.equivariance));
        }
        "dec-transport" => {
            let fam = setup.family(setup.nt, setup.ns).ctx("family")?;
            let init = DecoratedPoint {
                ovg: lift_first_row(setup, &setup.g0)?,
                h: setup.h0.clone(),
            };
            let tr = omega_dec_transport(fs, &fam, &init, setup.integrator).ctx("decorated transport")?;
            let s_nodes = fam.s_grid.nodes();
            sink.paths(&mut report, "transport", &s_nodes, &tr.omega.tilde)?;
            sink.curve(&mut report, "a", &s_nodes, &tr.omega.a)?;
            sink.curve(&mut report, "h", &s_nodes, &tr.h)?;
            report.values.insert("a_final".into(), group_json(tr.omega.a.last().expect("non-empty grid")));
            report.values.insert("h_final".into(), group_json(tr.h.last().expect("non-empty grid")));
            let mut all = fibers(&tr.omega.tilde);
            all.extend(&tr.omega.a);
            all.extend(&tr.h);
            let k = if fs.higher.is_some() {
                let k = higher_decoration_kstar(fs, &tr, setup.integrator).ctx("second-level decoration")?;
                sink.curve(&mut report, "k", &s_nodes, &k.k)?;
                report.values.insert("k_star".into(), group_json(&k.k_star));
                Some(k)
            } else {
                None
            };
            if let Some(k) = &k {
                all.extend(&k.k);
            }
            report.checks.push(Check::below("dec-transport.constraint", constraint(&all), tol.lie));
            let a = rand_sd(&mut rng, &m);
            let moved = dec_right_action(&m, &init, &a).ctx("right action on the initial point")?;
            let shifted = omega_dec_transport(fs, &fam, &moved, setup.integrator).ctx("shifted decorated transport")?;
            let mut gap: f64 = 0.0;
            for (p, q) in tr.points().iter().zip(shifted.points()) {
                let pa = dec_right_action(&m, p, &a).ctx("right action on the trajectory")?;
                gap = gap.max(pa.h.distance(&q.h));
                gap = gap.max(max_fiber_gap(std::slice::from_ref(&pa.ovg), std::slice::from_ref(&q.ovg)));
            }
            report.checks.push(Check::below("dec-transport.equivariance", gap, tol.equivariance));
        }
        "hat-transport" => {
            let fam = setup.family(setup.nt, setup.ns).ctx("family")?;
            let s_nodes = fam.s_grid.nodes();
            let (tr, residual) = if sc.forms.reduction {
                let out = reduction_residual(fs, &fam, &setup.g0, setup.integrator).ctx("reduction transport")?;
                (out.transport, Some(out.residual))
            } else {
                let init = DecoratedPoint {
                    ovg: lift_first_row(setup, &setup.g0)?,
                    h: setup.h0.clone(),
                };
                (hat_omega_transport(fs, &fam, &init, setup.integrator).ctx("shifted decorated transport")?, None)
            };
            sink.paths(&mut report, "transport", &s_nodes, &tr.tilde)?;
            sink.curve(&mut report, "a", &s_nodes, &tr.a)?;
            sink.curve(&mut report, "x", &s_nodes, &tr.x)?;
            report.values.insert("a_final".into(), group_json(tr.a.last().expect("non-empty grid")));
            report.values.insert("x_final".into(), group_json(tr.x.last().expect("non-empty grid")));
            let mut all = fibers(&tr.tilde);
            all.extend(&tr.a);
            all.extend(&tr.x);
            report.checks.push(Check::below("hat-transport.constraint", constraint(&all), tol.lie));
            if let Some(r) = residual {
                report.checks.push(Check::below("hat-transport.reduction", r, tol.reduction));
            }
        }
        _ => unreachable!("validated above"),
    }
    stage.end(&mut report);
    report.finish();
    Ok(report)
}

/// `verify`: randomized checks of one suite or all of them.
pub fn verify(sc: &Scenario, setup: &Setup, suite: &str) -> Result<Report, CliError> {
    if !SUITES.contains(&suite) {
        return Err(invalid_choice("verify.suite", suite, &SUITES));
    }
    let mut report = Report::new("verify", suite, sc);
    let selected: Vec<&str> = if suite == "all" { SUITES[..6].to_vec() } else { vec![suite] };
    for name in selected {
        let stage = Stage::new(name);
        let checks = match name {
            "lie" => suite_lie(sc, setup),
            "omega" => suite_omega(sc, setup)?,
            "Omega" => suite_decorated(sc, setup)?,
            "categorical" => suite_categorical(sc, setup)?,
            "stokes" => suite_stokes(sc, setup)?,
            "reduction" => vec![Check::below("reduction.residual", reduction_at(setup, setup.nt, setup.ns)?, sc.tolerances.reduction)],
            _ => unreachable!("validated above"),
        };
        report.checks.extend(checks);
        stage.end(&mut report);
    }
    report.finish();
    Ok(report)
}

fn suite_lie(sc: &Scenario, setup: &Setup) -> Vec<Check> {
    let m = setup.module();
    let mut rng = rng_for(sc.seed, "lie");
    let n = sc.verify.samples;
    let (mut peiffer, mut assoc, mut exp_log, mut adjoint) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n {
        let (g, h, h2) = (rand_elem(&mut rng, m.g), rand_elem(&mut rng, m.h), rand_elem(&mut rng, m.h));
        let (r1, r2) = m.residual(&g, &h, &h2);
        peiffer = peiffer.max(r1).max(r2);
        let (a, b, c) = (rand_sd(&mut rng, &m), rand_sd(&mut rng, &m), rand_sd(&mut rng, &m));
        let lhs = m.sd_mul(&m.sd_mul(&a, &b), &c);
        let rhs = m.sd_mul(&a, &m.sd_mul(&b, &c));
        assoc = assoc.max(m.sd_distance(&lhs, &rhs));
        assoc = assoc.max(m.sd_distance(&m.sd_mul(&a, &m.sd_inv(&a)), &m.sd_identity()));
        for group in [m.g, m.h] {
            let x = rand_alg(&mut rng, group, 0.5);
            let back = x.exp().log().map(|y| (y - x).norm()).unwrap_or(f64::INFINITY);
            exp_log = exp_log.max(back);
        }
        let (ga, gb) = (rand_elem(&mut rng, m.g), rand_elem(&mut rng, m.g));
        let y = rand_alg(&mut rng, m.g, 1.0);
        adjoint = adjoint.max(((&ga * &gb).ad(&y) - ga.ad(&gb.ad(&y))).norm());
    }
    let tol = sc.tolerances.lie;
    vec![
        Check::below("lie.peiffer", peiffer, tol),
        Check::below("lie.semidirect_associativity", assoc, tol),
        Check::below("lie.exp_log", exp_log, tol),
        Check::below("lie.adjoint_homomorphism", adjoint, tol),
    ]
}

fn probe_lift(rng: &mut ChaCha8Rng, setup: &Setup) -> Result<BundlePath, CliError> {
    let path = setup.path(setup.nt).ctx("path")?;
    let p0 = BundlePoint::new(path.initial().to_vec(), rand_elem(rng, setup.module().g));
    horizontal_lift(&setup.forms.abar, &path, &p0, setup.integrator).ctx("horizontal lift")
}

fn suite_omega(sc: &Scenario, setup: &Setup) -> Result<Vec<Check>, CliError> {
    let fs = &setup.forms;
    let m = fs.module;
    let mut rng = rng_for(sc.seed, "omega");
    let (mut vertical, mut equivariance) = (0.0f64, 0.0f64);
    for _ in 0..sc.verify.probes {
        let ovg = probe_lift(&mut rng, setup)?;
        let y = rand_alg(&mut rng, m.g, 1.0);
        let back = omega_eval(fs, &ovg, &PathTangent::vertical(&ovg, &y)).ctx("omega on a vertical tangent")?;
        vertical = vertical.max((back - y).norm());
        let vbar = rand_tangent(&mut rng, &fs.abar, &ovg).ctx("tangent lift")?;
        let g = rand_elem(&mut rng, m.g);
        let lhs = omega_eval(fs, &ovg.right(&g), &vbar.right(&g)).ctx("omega on a translated tangent")?;
        let rhs = g.ad_inv(&omega_eval(fs, &ovg, &vbar).ctx("omega")?);
        equivariance = equivariance.max((lhs - rhs).norm());
    }
    let tol = sc.tolerances.omega;
    Ok(vec![Check::below("omega.vertical", vertical, tol), Check::below("omega.equivariance", equivariance, tol)])
}

fn suite_decorated(sc: &Scenario, setup: &Setup) -> Result<Vec<Check>, CliError> {
    let fs = &setup.forms;
    let m = fs.module;
    let mut rng = rng_for(sc.seed, "Omega");
    let (mut vertical, mut equivariance, mut reassembly, mut horizontal, mut higher) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..sc.verify.probes {
        let p = DecoratedPoint {
            ovg: probe_lift(&mut rng, setup)?,
            h: rand_elem(&mut rng, m.h),
        };
        let xi = SemidirectAlgebraElement {
            y: rand_alg(&mut rng, m.h, 1.0),
            z: rand_alg(&mut rng, m.g, 1.0),
        };
        let vv = vertical_vector(&m, &p, &xi).ctx("vertical vector")?;
        vertical = vertical.max(omega_dec_eval(fs, &p, &vv).ctx("Omega on a vertical vector")?.sub(&xi).norm());
        if fs.higher.is_some() {
            let back = omega_decorated_eval(fs, &p, &vv).ctx("decorated Omega on a vertical vector")?;
            higher = higher.max(back.sub(&xi).norm());
        }
        let t = DecoratedTangent {
            vbar: rand_tangent(&mut rng, &fs.abar, &p.ovg).ctx("tangent lift")?,
            x: rand_alg(&mut rng, m.h, 1.0),
        };
        let a = rand_sd(&mut rng, &m);
        let pa = dec_right_action(&m, &p, &a).ctx("right action")?;
        let ta = dec_right_action_tangent(&m, &t, &a);
        let lhs = omega_dec_eval(fs, &pa, &ta).ctx("Omega at the translated point")?;
        let rhs = m.sd_adjoint(&m.sd_inv(&a), &omega_dec_eval(fs, &p, &t).ctx("Omega")?);
        equivariance = equivariance.max(lhs.sub(&rhs).norm());
        let (hor, vert) = omega_split(fs, &p, &t).ctx("Omega split")?;
        reassembly = reassembly.max(hor.add(&vert).max_distance(&t));
        horizontal = horizontal.max(omega_dec_eval(fs, &p, &hor).ctx("Omega on the horizontal part")?.norm());
    }
    let tol = &sc.tolerances;
    let mut checks = vec![
        Check::below("Omega.vertical", vertical, tol.omega_dec),
        Check::below("Omega.equivariance", equivariance, tol.omega_dec),
        Check::below("Omega.split_reassembly", reassembly, tol.split),
        Check::below("Omega.split_horizontal", horizontal, tol.split),
    ];
    if fs.higher.is_some() {
        checks.push(Check::below("Omega.decorated_vertical", higher, tol.omega_dec));
    }
    Ok(checks)
}

fn suite_categorical(sc: &Scenario, setup: &Setup) -> Result<Vec<Check>, CliError> {
    let m = setup.module();
    let abar = &setup.forms.abar;
    let mut rng = rng_for(sc.seed, "categorical");
    let next = |rng: &mut ChaCha8Rng, f: &Morphism2G| -> Result<Morphism2G, CliError> {
        let (_, t) = morphism_endpoints(&m, f).ctx("morphism endpoints")?;
        Ok(Morphism2G::new(rand_elem(rng, m.h), t))
    };
    let (mut exchange, mut assoc, mut endpoints, mut coherence) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let grid = TimeGrid::unit(60);
    for _ in 0..sc.verify.samples {
        let f1 = Morphism2G(rand_sd(&mut rng, &m));
        let f2 = next(&mut rng, &f1)?;
        let f1p = Morphism2G(rand_sd(&mut rng, &m));
        let f2p = next(&mut rng, &f1p)?;
        exchange = exchange.max(exchange_residual(&m, &f1p, &f1, &f2p, &f2).ctx("exchange law")?);
        let f3 = next(&mut rng, &f2)?;
        let left = vertical_compose(&m, &f3, &vertical_compose(&m, &f2, &f1).ctx("vertical composition")?).ctx("vertical composition")?;
        let right = vertical_compose(&m, &vertical_compose(&m, &f3, &f2).ctx("vertical composition")?, &f1).ctx("vertical composition")?;
        assoc = assoc.max(left.distance(&m, &right));
        let (s, t) = morphism_endpoints(&m, &f1.horizontal(&m, &f1p)).ctx("morphism endpoints")?;
        let (s1, t1) = morphism_endpoints(&m, &f1).ctx("morphism endpoints")?;
        let (s2, t2) = morphism_endpoints(&m, &f1p).ctx("morphism endpoints")?;
        endpoints = endpoints.max(s.distance(&(&s1 * &s2))).max(t.distance(&(&t1 * &t2)));

        let (a, b) = (rand_point(&mut rng, setup), rand_point(&mut rng, setup));
        let g1 = segment(&a, &b, grid, setup.margin);
        let p0 = BundlePoint::new(a, rand_elem(&mut rng, m.g));
        let m1 = DecoratedMorphism(DecoratedPoint {
            ovg: horizontal_lift(abar, &g1, &p0, setup.integrator).ctx("horizontal lift")?,
            h: rand_elem(&mut rng, m.h),
        });
        let end = m1.target(&m);
        let q = rand_point(&mut rng, setup);
        let g2 = segment(&end.x, &q, grid, setup.margin);
        let m2 = DecoratedMorphism(DecoratedPoint {
            ovg: horizontal_lift(abar, &g2, &end, setup.integrator).ctx("horizontal lift")?,
            h: rand_elem(&mut rng, m.h),
        });
        let comp = decorated_compose(&m, &m2, &m1).ctx("decorated composition")?;
        coherence = coherence.max(target_coherence_residual(&m, &comp, &m2));
    }
    let tol = sc.tolerances.categorical;
    Ok(vec![
        Check::below("categorical.exchange", exchange, tol),
        Check::below("categorical.associativity", assoc, tol),
        Check::below("categorical.endpoint_homomorphism", endpoints, tol),
        Check::below("categorical.decorated_target", coherence, tol),
    ])
}

fn stokes_at(sc: &Scenario, setup: &Setup, nt: usize, ns: usize) -> Result<f64, CliError> {
    let g = setup.module().g;
    nonabelian_stokes_residual(smooth_field(g, sc.seed, 1.0), g, TimeGrid::unit(nt - 1), TimeGrid::unit(ns - 1), setup.integrator)
        .ctx("non-abelian Stokes residual")
}

fn suite_stokes(sc: &Scenario, setup: &Setup) -> Result<Vec<Check>, CliError> {
    let r = stokes_at(sc, setup, setup.nt, setup.ns)?;
    let tol = if setup.module().g.is_abelian() { sc.tolerances.stokes_abelian } else { sc.tolerances.stokes };
    Ok(vec![Check::below("stokes.residual", r, tol)])
}

/// The scenario's forms under the reduction condition, keeping Ā, C₁, the
/// B₁ mode and its sign.
fn reduction_forms(setup: &Setup) -> FormSet {
    let fs = &setup.forms;
    let mut red = FormSet::reduction(fs.module, fs.chart.clone(), fs.abar.clone(), fs.c1.clone(), setup.b1_mode);
    if let B1Spec::Derived { sign, .. } = &fs.b1 {
        red.b1 = B1Spec::Derived {
            mode: setup.b1_mode,
            sign: *sign,
        };
    }
    red
}

fn reduction_at(setup: &Setup, nt: usize, ns: usize) -> Result<f64, CliError> {
    let fam = setup.family(nt, ns).ctx("family")?;
    Ok(reduction_residual(&reduction_forms(setup), &fam, &setup.g0, setup.integrator)
        .ctx("reduction transport")?
        .residual)
}

fn shift_at(setup: &Setup, nt: usize) -> Result<f64, CliError> {
    let fs = &setup.forms;
    let path = setup.path(nt).ctx("path")?;
    let u = BundlePoint::new(path.initial().to_vec(), setup.g0.clone());
    endpoint_shift_residual(&fs.module, &fs.abar, &fs.c1, &path, &u, setup.integrator).ctx("endpoint shift")
}

/// Largest distance from the identity of a_s, h_s, x_s and k_s.
fn flat_at(setup: &Setup, nt: usize, ns: usize) -> Result<f64, CliError> {
    let fs = &setup.forms;
    let fam = setup.family(nt, ns).ctx("family")?;
    let row = fam.row(0);
    let ovg = horizontal_lift(&fs.abar, &row, &BundlePoint::new(row.initial().to_vec(), setup.g0.clone()), setup.integrator)
        .ctx("lifting the first row")?;
    let init = DecoratedPoint {
        ovg,
        h: fs.module.h.identity(),
    };
    let dec = omega_dec_transport(fs, &fam, &init, setup.integrator).ctx("decorated transport")?;
    let hat = hat_omega_transport(fs, &fam, &init, setup.integrator).ctx("shifted decorated transport")?;
    let dist = |xs: &[GroupElement]| xs.iter().map(|x| x.distance(&x.group.identity())).fold(0.0, f64::max);
    let mut r = dist(&dec.omega.a).max(dist(&dec.h)).max(dist(&hat.x));
    if fs.higher.is_some() {
        r = r.max(dist(&higher_decoration_kstar(fs, &dec, setup.integrator).ctx("second-level decoration")?.k));
    }
    Ok(r)
}

/// `converge`: residuals at N, 2N, 4N, ... and the observed order.
pub fn converge(sc: &Scenario, setup: &Setup, check: &str) -> Result<Report, CliError> {
    if !CONVERGENCE_CHECKS.contains(&check) {
        return Err(invalid_choice("converge.check", check, &CONVERGENCE_CHECKS));
    }
    let k = sc.converge.refinements;
    if k < 3 {
        return Err(CliError::Config(ConfigError::Field {
            field: "converge.refinements".into(),
            message: format!("{k} levels; at least 3 are required for a slope"),
        }));
    }
    let mut report = Report::new("converge", check, sc);
    let nt = refinements(setup.nt - 1, k);
    let ns = refinements(setup.ns - 1, k);
    let mut residuals = Vec::with_capacity(k);
    for (&it, &is) in nt.iter().zip(&ns) {
        let stage = Stage::new(&format!("{check} N={it}"));
        residuals.push(match check {
            "stokes" => stokes_at(sc, setup, it + 1, is + 1)?,
            "endpoint-shift" => shift_at(setup, it + 1)?,
            "reduction" => reduction_at(setup, it + 1, is + 1)?,
            "flat" => flat_at(setup, it + 1, is + 1)?,
            _ => unreachable!("validated above"),
        });
        stage.end(&mut report);
    }
    let expected = match check {
        "stokes" | "reduction" => Some(2.0),
        "endpoint-shift" => Some(setup.integrator.order() as f64),
        _ => None,
    };
    report
        .convergence
        .push(Convergence::new(check, ConvergenceReport::new(nt, residuals), expected, sc.tolerances.slope));
    report.finish();
    Ok(report)
}
