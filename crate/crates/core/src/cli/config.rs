use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ini::Ini;

use crate::calculus::{Backend, DiffConfig};
use crate::error::Result as CoreResult;
use crate::function_space::{DualDensity, FdOrder, GridFunction, GridVector, PeriodicGrid};
use crate::lagrangian::expr::{parse_expr, Env, Expr, FIELD_VARS};
use crate::lagrangian::{CurveInE, LagrangianKind, LagrangianSpec};
use crate::timegrid::{TimeGrid, TimeSeries};
use crate::weak_integral::{DualCurve, Quadrature};

/// A configuration problem attributed to `section.key`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub detail: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.detail)
    }
}

pub type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(field: &str, detail: impl Into<String>) -> Result<T> {
    Err(ConfigError {
        field: field.into(),
        detail: detail.into(),
    })
}

const KEYS: &[(&str, &[&str])] = &[
    ("lagrangian", &["kind", "omega", "c", "beta", "density", "stencil"]),
    ("grid", &["N", "m", "M", "a", "b"]),
    ("quadrature", &["rule", "points"]),
    ("diff", &["backend", "fd_step", "fd_floor", "fd_order"]),
    ("run", &["seed", "tol", "variations", "probes"]),
    ("curve", &["u", "file"]),
    ("initial", &["u0", "v0", "u0_file", "v0_file"]),
    ("boundary", &["ua", "ub", "ua_file", "ub_file", "max_iterations", "gradient_tol"]),
    ("weak", &["f", "file"]),
    ("dbr", &["f", "g"]),
    (
        "ladder",
        &["exact", "kind", "N", "M", "offset", "slope", "omega", "speed", "min_order"],
    ),
];

/// Parsed configuration file. Typed accessors name the offending field in
/// every error.
#[derive(Debug)]
pub struct Document {
    ini: Ini,
    base: PathBuf,
}

impl Document {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .or_else(|e| err("--config", format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: PathBuf) -> Result<Self> {
        let ini = Ini::load_from_str_noescape(text)
            .or_else(|e| err("--config", format!("line {}: {}", e.line, e.msg)))?;
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((key, _)) = props.iter().next() {
                    return err(key, "keys must appear inside a [section]");
                }
                continue;
            };
            let Some((_, allowed)) = KEYS.iter().find(|(s, _)| *s == section) else {
                return err(&format!("[{section}]"), "unknown section");
            };
            let mut seen = BTreeSet::new();
            for (key, _) in props.iter() {
                let field = format!("{section}.{key}");
                if !allowed.contains(&key) {
                    return err(&field, "unknown key");
                }
                if !seen.insert(key) {
                    return err(&field, "duplicate key");
                }
            }
        }
        Ok(Self { ini, base })
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.ini.section(Some(section)).is_some()
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.ini
            .section(Some(section))
            .and_then(|p| p.get(key))
            .map(str::trim)
    }

    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str, what: &str) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .or_else(|_| err(&format!("{section}.{key}"), format!("{v:?} is not {what}"))),
        }
    }

    /// A real number, written as a literal or a constant expression such as `2*pi`.
    pub fn f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        let Some(text) = self.raw(section, key) else {
            return Ok(None);
        };
        let field = format!("{section}.{key}");
        let value = match text.parse::<f64>() {
            Ok(v) => v,
            Err(_) => parse_expr(text, &[])
                .or_else(|e| err(&field, format!("{text:?} is not a number: {e}")))?
                .eval(&Env {
                    x: 0.0,
                    t: 0.0,
                    u: 0.0,
                    ux: 0.0,
                    e: 0.0,
                }),
        };
        if !value.is_finite() {
            return err(&field, "must be finite");
        }
        Ok(Some(value))
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.parsed(section, key, "a non-negative integer")
    }

    pub fn u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.parsed(section, key, "a non-negative integer")
    }

    pub fn positive(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.f64(section, key)? {
            Some(v) if v <= 0.0 => err(&format!("{section}.{key}"), format!("{v} must be positive")),
            other => Ok(other),
        }
    }

    pub fn list(&self, section: &str, key: &str) -> Result<Option<Vec<usize>>> {
        let Some(text) = self.raw(section, key) else {
            return Ok(None);
        };
        text.split(',')
            .map(|t| {
                t.trim().parse().or_else(|_| {
                    err(&format!("{section}.{key}"), format!("{:?} is not an integer", t.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn require<T>(&self, value: Option<T>, section: &str, key: &str) -> Result<T> {
        value.map_or_else(|| err(&format!("{section}.{key}"), "missing"), Ok)
    }

    /// Path relative to the configuration file; it must exist.
    pub fn existing_file(&self, section: &str, key: &str) -> Result<Option<PathBuf>> {
        let Some(raw) = self.raw(section, key) else {
            return Ok(None);
        };
        let path = self.base.join(raw);
        if !path.is_file() {
            return err(&format!("{section}.{key}"), format!("{} does not exist", path.display()));
        }
        Ok(Some(path))
    }

    pub fn read_file(&self, section: &str, key: &str) -> Result<Option<String>> {
        match self.existing_file(section, key)? {
            None => Ok(None),
            Some(p) => std::fs::read_to_string(&p)
                .map(Some)
                .or_else(|e| err(&format!("{section}.{key}"), format!("{}: {e}", p.display()))),
        }
    }

    /// Comma-separated expressions in `t` and `x`, one per component.
    pub fn field_exprs(&self, section: &str, key: &str, m: usize) -> Result<Option<Vec<Expr>>> {
        let Some(text) = self.raw(section, key) else {
            return Ok(None);
        };
        let field = format!("{section}.{key}");
        let exprs = text
            .split(',')
            .map(|part| {
                parse_expr(part.trim(), FIELD_VARS).or_else(|e| err(&field, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        if exprs.len() != m {
            return err(&field, format!("{} components given, m = {m}", exprs.len()));
        }
        Ok(Some(exprs))
    }
}

fn eval_field(exprs: &[Expr], t: f64, x: f64, c: usize) -> f64 {
    exprs[c].eval(&Env {
        x,
        t,
        u: 0.0,
        ux: 0.0,
        e: 0.0,
    })
}

pub fn grid_from(n: usize, m: usize, field: &str) -> Result<PeriodicGrid> {
    let g = if n == 1 {
        PeriodicGrid::point(m)
    } else {
        PeriodicGrid::new(n, m)
    };
    g.or_else(|e| err(field, e.to_string()))
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lagrangian: LagrangianSpec,
    pub grid: PeriodicGrid,
    pub time: TimeGrid,
    pub quadrature: Quadrature,
    pub diff: DiffConfig,
    pub seed: u64,
    pub tol: Option<f64>,
    pub variations: usize,
    pub probes: usize,
}

/// Steps must be even under Simpson's rule and allow a residual stencil.
pub fn check_steps(steps: usize, q: &Quadrature, field: &str) -> Result<()> {
    if steps < 10 {
        return err(field, format!("M = {steps} must be at least 10"));
    }
    if matches!(q, Quadrature::CompositeSimpson) && steps % 2 == 1 {
        return err(field, format!("M = {steps} must be even for Simpson quadrature"));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_document(doc: &Document) -> Result<Self> {
        let quadrature = match doc.raw("quadrature", "rule").unwrap_or("simpson") {
            "simpson" => {
                if doc.raw("quadrature", "points").is_some() {
                    return err("quadrature.points", "only used with rule = gauss");
                }
                Quadrature::CompositeSimpson
            }
            "gauss" => {
                let points = doc.usize("quadrature", "points")?.unwrap_or(3);
                if !(1..=8).contains(&points) {
                    return err("quadrature.points", format!("{points} outside 1..=8"));
                }
                Quadrature::GaussLegendrePerCell { points }
            }
            other => return err("quadrature.rule", format!("{other:?} is not simpson or gauss")),
        };

        let n = doc.usize("grid", "N")?.unwrap_or(16);
        let m = doc.usize("grid", "m")?.unwrap_or(1);
        let grid = grid_from(n, m, "grid.N")?;
        let steps = doc.usize("grid", "M")?.unwrap_or(128);
        check_steps(steps, &quadrature, "grid.M")?;
        let a = doc.f64("grid", "a")?.unwrap_or(0.0);
        let b = doc.f64("grid", "b")?.unwrap_or(1.0);
        if b <= a {
            return err("grid.b", format!("b = {b} must exceed a = {a}"));
        }
        let time = TimeGrid::new(a, b, steps).or_else(|e| err("grid.M", e.to_string()))?;

        let stencil = match doc.usize("lagrangian", "stencil")? {
            None => FdOrder::Fourth,
            Some(o) => {
                FdOrder::from_order(o as u32).or_else(|e| err("lagrangian.stencil", e.to_string()))?
            }
        };
        let kind_name = doc.require(doc.raw("lagrangian", "kind"), "lagrangian", "kind")?;
        let param = |key: &str, default: f64| -> Result<f64> {
            Ok(doc.f64("lagrangian", key)?.unwrap_or(default))
        };
        let kind = match kind_name {
            "free-particle" => LagrangianKind::FreeParticle,
            "harmonic" => LagrangianKind::HarmonicField {
                omega: param("omega", 1.0)?,
            },
            "wave" => LagrangianKind::Wave { c: param("c", 1.0)? },
            "sine-gordon" => LagrangianKind::SineGordon {
                c: param("c", 1.0)?,
                beta: param("beta", 1.0)?,
            },
            "density" => {
                let text = doc.require(doc.raw("lagrangian", "density"), "lagrangian", "density")?;
                match LagrangianSpec::user_density(text) {
                    Ok(spec) => spec.kind.clone(),
                    Err(e) => return err("lagrangian.density", e.to_string()),
                }
            }
            other => {
                return err(
                    "lagrangian.kind",
                    format!(
                        "{other:?} is not one of free-particle, harmonic, wave, sine-gordon, density"
                    ),
                )
            }
        };
        let lagrangian = LagrangianSpec::new(kind)
            .or_else(|e| err("lagrangian", e.to_string()))?
            .with_stencil(stencil);
        if matches!(lagrangian.kind, LagrangianKind::UserDensity(_)) && m != 1 {
            return err("grid.m", "density expressions need m = 1");
        }

        let backend = match doc.raw("diff", "backend").unwrap_or("analytic") {
            "analytic" => Backend::Analytic,
            "fd" => Backend::FiniteDifference,
            other => return err("diff.backend", format!("{other:?} is not analytic or fd")),
        };
        let mut diff = DiffConfig {
            backend,
            ..DiffConfig::default()
        };
        if let Some(v) = doc.positive("diff", "fd_step")? {
            diff.fd_step = v;
        }
        if let Some(v) = doc.positive("diff", "fd_floor")? {
            diff.fd_floor = v;
        }
        if let Some(o) = doc.usize("diff", "fd_order")? {
            diff.fd_order =
                FdOrder::from_order(o as u32).or_else(|e| err("diff.fd_order", e.to_string()))?;
        }

        let variations = doc.usize("run", "variations")?.unwrap_or(50);
        if variations == 0 {
            return err("run.variations", "must be positive");
        }
        let probes = doc.usize("run", "probes")?.unwrap_or(20);
        if probes == 0 {
            return err("run.probes", "must be positive");
        }
        Ok(Self {
            lagrangian,
            grid,
            time,
            quadrature,
            diff,
            seed: doc.u64("run", "seed")?.unwrap_or(0),
            tol: doc.positive("run", "tol")?,
            variations,
            probes,
        })
    }

    fn check_series_shape<V: GridVector>(&self, s: &TimeSeries<V>, field: &str) -> Result<()> {
        if s.grid() != &self.grid {
            return err(field, "file grid differs from [grid] N and m");
        }
        let t = s.time();
        if t.steps() != self.time.steps()
            || (t.start() - self.time.start()).abs() > 1e-12
            || (t.end() - self.time.end()).abs() > 1e-12
        {
            return err(field, "file time grid differs from [grid] M, a, b");
        }
        Ok(())
    }

    /// The curve of `[curve]`: an expression list `u` or a series `file`.
    pub fn curve(&self, doc: &Document) -> Result<CurveInE> {
        if let Some(text) = doc.read_file("curve", "file")? {
            let series = crate::io::parse_series::<GridFunction>(&text)
                .or_else(|e| err("curve.file", e.to_string()))?;
            self.check_series_shape(&series, "curve.file")?;
            return CurveInE::from_series(series).or_else(|e| err("curve.file", e.to_string()));
        }
        let exprs = doc.field_exprs("curve", "u", self.grid.m())?;
        let exprs = doc.require(exprs, "curve", "u")?;
        CurveInE::from_fn(self.time, self.grid, |t, x, c| eval_field(&exprs, t, x, c))
            .or_else(|e| err("curve.u", e.to_string()))
    }

    /// A field at a fixed time, from an expression or a grid-function file.
    pub fn field_at(
        &self,
        doc: &Document,
        section: &str,
        key: &str,
        t: f64,
    ) -> Result<GridFunction> {
        let file_key = format!("{key}_file");
        if let Some(text) = doc.read_file(section, &file_key)? {
            let field = format!("{section}.{file_key}");
            let u: GridFunction =
                crate::io::parse_vector(&text).or_else(|e| err(&field, e.to_string()))?;
            if u.grid() != &self.grid {
                return err(&field, "file grid differs from [grid] N and m");
            }
            return Ok(u);
        }
        let exprs = doc.field_exprs(section, key, self.grid.m())?;
        let exprs = doc.require(exprs, section, key)?;
        GridFunction::from_fn(self.grid, |x, c| eval_field(&exprs, t, x, c))
            .or_else(|e| err(&format!("{section}.{key}"), e.to_string()))
    }

    /// A dual curve given by density expressions.
    pub fn dual_curve(&self, doc: &Document, section: &str, key: &str) -> Result<DualCurve> {
        let exprs = doc.field_exprs(section, key, self.grid.m())?;
        let exprs = doc.require(exprs, section, key)?;
        let build = || -> CoreResult<DualCurve> {
            TimeSeries::from_fn(self.time, |t| {
                DualDensity::from_fn(self.grid, |x, c| eval_field(&exprs, t, x, c))
            })
        };
        build().or_else(|e| err(&format!("{section}.{key}"), e.to_string()))
    }

    /// A dual curve read from a series file, checked against the grids.
    pub fn dual_curve_file(&self, doc: &Document, section: &str, key: &str) -> Result<Option<DualCurve>> {
        let Some(text) = doc.read_file(section, key)? else {
            return Ok(None);
        };
        let field = format!("{section}.{key}");
        let series = crate::io::parse_series::<DualDensity>(&text)
            .or_else(|e| err(&field, e.to_string()))?;
        self.check_series_shape(&series, &field)?;
        Ok(Some(series))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Result<Document> {
        Document::parse(text, PathBuf::new())
    }

    #[test]
    fn defaults_and_overrides() {
        let d = doc("[lagrangian]\nkind = wave\nc = 2\n[grid]\nN = 32\nM = 64\nb = 2\n").unwrap();
        let cfg = RunConfig::from_document(&d).unwrap();
        assert_eq!(cfg.lagrangian, LagrangianSpec::wave(2.0).unwrap());
        assert_eq!((cfg.grid.n(), cfg.grid.m(), cfg.time.steps()), (32, 1, 64));
        assert_eq!(cfg.time.end(), 2.0);
        assert_eq!(cfg.variations, 50);
        let d = doc("[lagrangian]\nkind = wave\n[grid]\nb = 2*pi\n").unwrap();
        let cfg = RunConfig::from_document(&d).unwrap();
        assert_eq!(cfg.time.end(), 2.0 * std::f64::consts::PI);
        let d = doc("[lagrangian]\nkind = wave\n[grid]\nb = 2*t\n").unwrap();
        assert_eq!(RunConfig::from_document(&d).unwrap_err().field, "grid.b");
    }

    #[test]
    fn errors_name_fields() {
        let field = |text: &str| {
            doc(text)
                .and_then(|d| RunConfig::from_document(&d))
                .unwrap_err()
                .field
        };
        assert_eq!(field("[lagrangian]\nkind = wave\n[grid]\nM = 63\n"), "grid.M");
        assert_eq!(field("[lagrangian]\nkind = wave\n[grid]\nN = 12\n"), "grid.N");
        assert_eq!(field("[lagrangian]\nkind = string\n"), "lagrangian.kind");
        assert_eq!(field("[lagrangian]\nkind = wave\nomgea = 1\n"), "lagrangian.omgea");
        assert_eq!(field("[grid]\nN = 16\n"), "lagrangian.kind");
        assert_eq!(
            field("[lagrangian]\nkind = density\ndensity = 0.5*e^2 - - \n"),
            "lagrangian.density"
        );
        assert_eq!(field("[lagrangian]\nkind = wave\n[nope]\n"), "[nope]");
        assert_eq!(field("[lagrangian]\nkind = wave\nkind = harmonic\n"), "lagrangian.kind");
    }

    #[test]
    fn odd_steps_are_fine_under_gauss() {
        let d = doc("[lagrangian]\nkind = wave\n[grid]\nM = 63\n[quadrature]\nrule = gauss\n").unwrap();
        assert!(RunConfig::from_document(&d).is_ok());
    }

    #[test]
    fn expression_fields() {
        let d = doc("[lagrangian]\nkind = wave\n[grid]\nm = 2\nM = 16\n[curve]\nu = sin(x - t), 2\n")
            .unwrap();
        let cfg = RunConfig::from_document(&d).unwrap();
        let c = cfg.curve(&d).unwrap();
        assert_eq!(c.samples()[0].get(3, 1), 2.0);
        let bad = doc("[lagrangian]\nkind = wave\n[grid]\nm = 2\nM = 16\n[curve]\nu = sin(x)\n").unwrap();
        let cfg = RunConfig::from_document(&bad).unwrap();
        assert_eq!(cfg.curve(&bad).unwrap_err().field, "curve.u");
    }
}
