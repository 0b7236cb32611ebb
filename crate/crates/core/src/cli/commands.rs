use std::io::Write;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{check_steps, grid_from, Document, RunConfig};
use super::{CliError, Common, Outcome};
use crate::calculus::{gradient_density, Slot};
use crate::dubois_reymond::{dbr_analysis, dbr_witness, random_variation, weak_form_residual};
use crate::el_solver::{self, BvpOptions, ExactCurve, Order, StudyKind};
use crate::function_space::GridVector;
use crate::io::{format_series, format_vector, num, write_csv};
use crate::timegrid::TimeSeries;
use crate::weak_integral::{integrate_dual_curve, verify_weak_property, DualCurve};

pub(super) type Exec = fn(&Document, &RunConfig, &mut Context<'_>) -> Result<Outcome, CliError>;

pub(super) struct Context<'a> {
    out: Option<PathBuf>,
    quiet: bool,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl<'a> Context<'a> {
    pub(super) fn new(
        command: &str,
        common: &Common,
        stdout: &'a mut dyn Write,
        stderr: &'a mut dyn Write,
    ) -> Result<Self, CliError> {
        if let Some(dir) = &common.out {
            std::fs::create_dir_all(dir).map_err(crate::Error::from)?;
        }
        let mut ctx = Self {
            out: common.out.clone(),
            quiet: common.quiet,
            stdout,
            stderr,
        };
        ctx.put("command", command)?;
        Ok(ctx)
    }

    fn put(&mut self, key: &str, value: impl std::fmt::Display) -> Result<(), CliError> {
        writeln!(self.stdout, "{key} = {value}").map_err(crate::Error::from)?;
        Ok(())
    }

    fn file(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let Some(dir) = &self.out else {
            return Ok(());
        };
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(crate::Error::from)?;
        if !self.quiet {
            let _ = writeln!(self.stderr, "wrote {}", path.display());
        }
        Ok(())
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        if self.out.is_none() {
            return Ok(());
        }
        let mut buf = Vec::new();
        write_csv(&mut buf, header, rows)?;
        self.file(name, &buf)
    }
}

fn header(cfg: &RunConfig, ctx: &mut Context<'_>) -> Result<(), CliError> {
    ctx.put("lagrangian", cfg.lagrangian.name())?;
    ctx.put("N", cfg.grid.n())?;
    ctx.put("m", cfg.grid.m())?;
    ctx.put("M", cfg.time.steps())?;
    Ok(())
}

fn trajectory_rows(report: &el_solver::SolveReport) -> Vec<Vec<String>> {
    let c = &report.solution;
    c.time()
        .times()
        .enumerate()
        .map(|(j, t)| {
            let mut row = vec![num(t), num(c.samples()[j].sup_norm())];
            if let Some(e) = &report.energy {
                row.push(num(e[j]));
            }
            row
        })
        .collect()
}

pub(super) fn residual(doc: &Document, cfg: &RunConfig, ctx: &mut Context<'_>) -> Result<Outcome, CliError> {
    header(cfg, ctx)?;
    let c = cfg.curve(doc)?;
    let r = el_solver::el_residual(&cfg.lagrangian, &c, &cfg.diff)?;
    ctx.put("max_residual", num(r.max_norm()))?;
    ctx.put("l2_residual", num(r.l2_norm()))?;
    let rows: Vec<Vec<String>> = r
        .nodes()
        .zip(r.values())
        .map(|(j, v)| vec![num(c.time().t(j)), num(v.sup_norm())])
        .collect();
    ctx.table("residual.csv", &["t", "residual_sup"], &rows)?;
    match cfg.tol {
        Some(tol) if r.max_norm() > tol => Ok(Outcome::Fail(format!(
            "max residual {:e} exceeds tol {tol:e}",
            r.max_norm()
        ))),
        _ => Ok(Outcome::Pass),
    }
}

pub(super) fn solve_ivp(doc: &Document, cfg: &RunConfig, ctx: &mut Context<'_>) -> Result<Outcome, CliError> {
    header(cfg, ctx)?;
    let t0 = cfg.time.start();
    let u0 = cfg.field_at(doc, "initial", "u0", t0)?;
    let v0 = cfg.field_at(doc, "initial", "v0", t0)?;
    let report = el_solver::solve_ivp(&cfg.lagrangian, &u0, &v0, &cfg.time, &cfg.diff)?;
    let energy = report.energy.as_deref().unwrap_or(&[]);
    let drift = energy.iter().map(|e| (e - energy[0]).abs()).fold(0.0, f64::max);
    ctx.put("steps", report.iterations)?;
    ctx.put("max_residual", num(report.residual.max_norm()))?;
    ctx.put("energy_initial", num(energy[0]))?;
    ctx.put("energy_max_deviation", num(drift))?;
    ctx.file("solution.txt", format_series(report.solution.series()).as_bytes())?;
    ctx.table("trajectory.csv", &["t", "u_sup", "energy"], &trajectory_rows(&report))?;
    Ok(Outcome::Pass)
}

pub(super) fn solve_bvp(doc: &Document, cfg: &RunConfig, ctx: &mut Context<'_>) -> Result<Outcome, CliError> {
    header(cfg, ctx)?;
    let ua = cfg.field_at(doc, "boundary", "ua", cfg.time.start())?;
    let ub = cfg.field_at(doc, "boundary", "ub", cfg.time.end())?;
    let mut opts = BvpOptions::default();
    if let Some(n) = doc.usize("boundary", "max_iterations")? {
        opts.max_iterations = n;
    }
    if let Some(g) = doc.positive("boundary", "gradient_tol")? {
        opts.gradient_tol = g;
    }
    let report = el_solver::solve_bvp(&cfg.lagrangian, &ua, &ub, &cfg.time, &cfg.diff, &opts)?;
    ctx.put("iterations", report.iterations)?;
    ctx.put("converged", report.converged)?;
    ctx.put("gradient_norm", num(report.gradient_norm.unwrap_or(f64::NAN)))?;
    ctx.put("action", num(report.action.unwrap_or(f64::NAN)))?;
    ctx.put("max_residual", num(report.residual.max_norm()))?;
    ctx.file("solution.txt", format_series(report.solution.series()).as_bytes())?;
    ctx.table("trajectory.csv", &["t", "u_sup"], &trajectory_rows(&report))?;
    if !report.converged {
        return Ok(Outcome::Fail(format!(
            "no convergence after {} iterations (gradient norm {:e})",
            report.iterations,
            report.gradient_norm.unwrap_or(f64::NAN)
        )));
    }
    let tol = cfg.tol.unwrap_or(1e-6);
    let check = el_solver::verify_critical(
        &cfg.lagrangian,
        &report.solution,
        cfg.variations,
        tol,
        &cfg.diff,
        &cfg.quadrature,
    )?;
    ctx.put("critical_max_normalized", num(check.max_normalized))?;
    ctx.put("critical", check.passed)?;
    if !check.passed {
        return Ok(Outcome::Fail(format!(
            "solution is not critical: {:e} > {tol:e}",
            check.max_normalized
        )));
    }
    Ok(Outcome::Pass)
}

pub(super) fn verify_critical(doc: &Document, cfg: &RunConfig, ctx: &mut Context<'_>) -> Result<Outcome, CliError> {
    header(cfg, ctx)?;
    let c = cfg.curve(doc)?;
    let tol = cfg.tol.unwrap_or(1e-6);
    let report = el_solver::verify_critical(
        &cfg.lagrangian,
        &c,
        cfg.variations,
        tol,
        &cfg.diff,
        &cfg.quadrature,
    )?;
    ctx.put("variations", report.normalized.len())?;
    ctx.put("max_normalized", num(report.max_normalized))?;
    ctx.put("worst", report.worst)?;
    ctx.put("tol", num(tol))?;
    ctx.put("passed", report.passed)?;
    let rows: Vec<Vec<String>> = report
        .normalized
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), num(*v)])
        .collect();
    ctx.table("variations.csv", &["index", "normalized_variation"], &rows)?;
    if report.passed {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::Fail(format!(
            "variation {} gives {:e} > {tol:e}",
            report.worst, report.max_normalized
        )))
    }
}

pub(super) fn weak_integral_check(
    doc: &Document,
    cfg: &RunConfig,
    ctx: &mut Context<'_>,
) -> Result<Outcome, CliError> {
    header(cfg, ctx)?;
    let f = match cfg.dual_curve_file(doc, "weak", "file")? {
        Some(f) => f,
        None => cfg.dual_curve(doc, "weak", "f")?,
    };
    let integral = integrate_dual_curve(&f, &cfg.quadrature)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let report = verify_weak_property(&f, &integral, &cfg.quadrature, cfg.probes, &mut rng)?;
    let tol = cfg.tol.unwrap_or(1e-12);
    ctx.put("integral_sup", num(integral.sup_norm()))?;
    ctx.put("probes", report.probes)?;
    ctx.put("max_abs", num(report.max_abs))?;
    ctx.put("max_rel", num(report.max_rel))?;
    ctx.put("passed", report.max_rel <= tol)?;
    ctx.file("integral.txt", format_vector(&integral).as_bytes())?;
    if report.max_rel <= tol {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::Fail(format!("relative defect {:e} > {tol:e}", report.max_rel)))
    }
}

fn densities_along(doc: &Document, cfg: &RunConfig) -> Result<(DualCurve, DualCurve), CliError> {
    let c = cfg.curve(doc)?;
    let along = |slot| -> crate::Result<DualCurve> {
        let samples = c
            .samples()
            .iter()
            .zip(c.lift())
            .map(|(u, e)| gradient_density(&cfg.lagrangian, u, e, slot, &cfg.diff))
            .collect::<crate::Result<Vec<_>>>()?;
        TimeSeries::new(*c.time(), samples)
    };
    Ok((along(Slot::Position)?, along(Slot::Velocity)?))
}

pub(super) fn dbr_check(doc: &Document, cfg: &RunConfig, ctx: &mut Context<'_>) -> Result<Outcome, CliError> {
    header(cfg, ctx)?;
    let (f, g) = if doc.has_section("dbr") {
        (cfg.dual_curve(doc, "dbr", "f")?, cfg.dual_curve(doc, "dbr", "g")?)
    } else {
        densities_along(doc, cfg)?
    };
    let analysis = dbr_analysis(&f, &g)?;
    let witness = dbr_witness(&f, &g, 0.9)?;
    let witness_residual = weak_form_residual(&f, &g, &witness, &cfg.quadrature)?;
    let witness_norm = witness.c1_norm();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut max_weak = 0.0f64;
    for _ in 0..cfg.variations {
        let mu = random_variation(&mut rng, &cfg.time, &cfg.grid)?;
        let r = weak_form_residual(&f, &g, &mu, &cfg.quadrature)?;
        max_weak = max_weak.max(r.abs() / mu.c1_norm());
    }
    ctx.put("defect", num(analysis.defect))?;
    ctx.put("mean_sup", num(analysis.mean.sup_norm()))?;
    ctx.put("witness_residual", num(witness_residual))?;
    ctx.put(
        "witness_normalized",
        num(if witness_norm > 0.0 { witness_residual / witness_norm } else { 0.0 }),
    )?;
    ctx.put("max_weak_residual", num(max_weak))?;
    ctx.file("h.txt", format_series(&analysis.h).as_bytes())?;
    match cfg.tol {
        Some(tol) if analysis.defect > tol => Ok(Outcome::Fail(format!(
            "defect {:e} exceeds tol {tol:e}",
            analysis.defect
        ))),
        _ => Ok(Outcome::Pass),
    }
}

pub(super) fn converge(doc: &Document, cfg: &RunConfig, ctx: &mut Context<'_>) -> Result<Outcome, CliError> {
    ctx.put("lagrangian", cfg.lagrangian.name())?;
    let value = |key: &str, default: f64| -> Result<f64, CliError> {
        Ok(doc.f64("ladder", key)?.unwrap_or(default))
    };
    let exact = match doc.raw("ladder", "exact") {
        Some("line") => ExactCurve::Line {
            offset: value("offset", 0.0)?,
            slope: value("slope", 1.0)?,
        },
        Some("oscillator") => ExactCurve::Oscillator {
            omega: value("omega", 1.0)?,
        },
        Some("traveling-wave") => ExactCurve::TravelingWave {
            speed: value("speed", 1.0)?,
        },
        Some(other) => {
            return Err(super::ConfigError {
                field: "ladder.exact".into(),
                detail: format!("{other:?} is not line, oscillator or traveling-wave"),
            }
            .into())
        }
        None => {
            return Err(super::ConfigError {
                field: "ladder.exact".into(),
                detail: "missing".into(),
            }
            .into())
        }
    };
    let kind = match doc.raw("ladder", "kind").unwrap_or("residual") {
        "residual" => StudyKind::Residual,
        "ivp" => StudyKind::Ivp,
        other => {
            return Err(super::ConfigError {
                field: "ladder.kind".into(),
                detail: format!("{other:?} is not residual or ivp"),
            }
            .into())
        }
    };
    let ns = doc.list("ladder", "N")?.unwrap_or_else(|| vec![cfg.grid.n()]);
    let ms = doc.list("ladder", "M")?;
    let ms = doc.require(ms, "ladder", "M")?;
    for &n in &ns {
        grid_from(n, 1, "ladder.N")?;
    }
    for &m in &ms {
        check_steps(m, &cfg.quadrature, "ladder.M")?;
    }
    let ladder = el_solver::pair_ladder(&ns, &ms).map_err(|e| super::ConfigError {
        field: "ladder.N".into(),
        detail: e.to_string(),
    })?;
    if ladder.len() < 3 {
        return Err(super::ConfigError {
            field: "ladder.M".into(),
            detail: format!("{} ladder points, at least 3 are needed", ladder.len()),
        }
        .into());
    }
    let interval = (cfg.time.start(), cfg.time.end());
    let table = el_solver::convergence_study(&cfg.lagrangian, &exact, &ladder, interval, kind, &cfg.diff)?;
    ctx.put("kind", kind.name())?;
    for (i, r) in table.rows.iter().enumerate() {
        ctx.put(&format!("row{i}"), format!("N={} M={} error={}", r.n, r.steps, num(r.error)))?;
    }
    ctx.put("order", table.order)?;
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), r.steps.to_string(), num(r.dt), num(r.h), num(r.error)])
        .collect();
    ctx.table("convergence.csv", &["N", "M", "dt", "h", "error"], &rows)?;
    match (doc.f64("ladder", "min_order")?, table.order) {
        (Some(min), Order::Fitted(order)) if order < min => Ok(Outcome::Fail(format!(
            "fitted order {order:.4} below min_order {min}"
        ))),
        _ => Ok(Outcome::Pass),
    }
}
