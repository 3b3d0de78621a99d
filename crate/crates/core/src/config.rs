//! Run configuration read from TOML.
//!
//! Grammar: top-level tables only, each holding scalar keys or flat arrays.
//!
//! ```toml
//! [kernel]
//! family = "riemann_liouville"   # riemann_liouville | exp_weighted | tabulated
//! alpha = 0.5
//! mu_w = 1.0                     # exp_weighted only
//! table = "k.csv"                # tabulated only: two columns t, k
//! partner_table = "l.csv"        # tabulated only: the partner l
//!
//! [space]
//! s = 0.5
//! a = -1.0
//! b = 1.0
//! nodes = 32
//!
//! [time]
//! horizon = 1.0
//! steps = 64
//!
//! [data]
//! f = "indicator"                # zero | bump | spike | indicator | path to CSV
//! f_scale = 1.0
//! u0 = "bump"
//! u0_scale = 1.0
//! signed = false
//! levels = [1, 2, 4, 8]          # optional truncation levels; simulate then also solves T_m-truncated data
//!
//! [verify]
//! entropy = true
//! weak_form = true
//! energy = true
//! levels = [1, 5]
//! ramp_width = 1.0
//! zeta_powers = [1, 2]
//! cuts = [0.25, 0.5, 0.75]
//! tolerance_scale = 1.0
//!
//! [kernels]
//! lambdas = [1.0, 0.1]
//!
//! [output]
//! dir = "out"
//!
//! [sweep]
//! alpha = [0.3, 0.5, 0.7]
//! s = [0.5]
//! steps = [64]
//! ```
//!
//! Every key is optional except `kernel.family`. Relative paths are taken
//! from the directory holding the config file.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::timestepper::Profile;

#[derive(Clone, Debug, PartialEq)]
pub enum KernelFamily {
    RiemannLiouville,
    ExpWeighted,
    Tabulated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelConfig {
    pub family: KernelFamily,
    pub alpha: f64,
    pub mu_w: f64,
    pub table: Option<PathBuf>,
    pub partner_table: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Builtin(Profile),
    Table(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub entropy: bool,
    pub weak_form: bool,
    pub energy: bool,
    pub levels: Vec<f64>,
    pub ramp_width: f64,
    pub zeta_powers: Vec<i32>,
    pub cuts: Vec<f64>,
    pub tolerance_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SweepConfig {
    pub alpha: Vec<f64>,
    pub s: Vec<f64>,
    pub steps: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub kernel: KernelConfig,
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub nodes: usize,
    pub horizon: f64,
    pub steps: usize,
    pub f: DataSource,
    pub f_scale: f64,
    pub u0: DataSource,
    pub u0_scale: f64,
    pub signed: bool,
    pub levels: Vec<f64>,
    pub verify: VerifyConfig,
    pub lambdas: Vec<f64>,
    pub out_dir: PathBuf,
    pub sweep: SweepConfig,
}

fn config_error(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("kernel", &["family", "alpha", "mu_w", "table", "partner_table"]),
    ("space", &["s", "a", "b", "nodes"]),
    ("time", &["horizon", "steps"]),
    ("data", &["f", "f_scale", "u0", "u0_scale", "signed", "levels"]),
    (
        "verify",
        &["entropy", "weak_form", "energy", "levels", "ramp_width", "zeta_powers", "cuts", "tolerance_scale"],
    ),
    ("kernels", &["lambdas"]),
    ("output", &["dir"]),
    ("sweep", &["alpha", "s", "steps"]),
];

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => as_f64(v).ok_or_else(|| config_error(&self.key(key), "expected a number")),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(config_error(&self.key(key), "expected a non-negative integer")),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(config_error(&self.key(key), "expected true or false")),
        }
    }

    fn str_opt(&self, key: &str) -> Result<Option<&'a str>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(config_error(&self.key(key), "expected a string")),
        }
    }

    fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| as_f64(v).ok_or_else(|| config_error(&self.key(key), "expected an array of numbers")))
                .collect(),
            Some(_) => Err(config_error(&self.key(key), "expected an array of numbers")),
        }
    }

    fn int_list_or(&self, key: &str, default: &[i64]) -> Result<Vec<i64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_integer().ok_or_else(|| config_error(&self.key(key), "expected an array of integers")))
                .collect(),
            Some(_) => Err(config_error(&self.key(key), "expected an array of integers")),
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn data_source(section: &Section, key: &str, default: Profile, base: &Path) -> Result<DataSource> {
    match section.str_opt(key)? {
        None => Ok(DataSource::Builtin(default)),
        Some(name) => Ok(match Profile::parse(name) {
            Some(p) => DataSource::Builtin(p),
            None => {
                let path = resolve(base, name);
                if !path.is_file() {
                    return Err(config_error(
                        &section.key(key),
                        format!("`{name}` is neither a builtin profile nor an existing file"),
                    ));
                }
                DataSource::Table(path)
            }
        }),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            Error::Parse { msg, .. } => Error::Parse {
                path: path.display().to_string(),
                msg,
            },
            other => other,
        })
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            path: "<config>".to_string(),
            msg: e.message().to_string(),
        })?;
        for (name, value) in &root {
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| s == name) else {
                return Err(config_error(name, "unknown section"));
            };
            let Value::Table(table) = value else {
                return Err(config_error(name, "expected a table"));
            };
            if let Some(k) = table.keys().find(|k| !keys.contains(&k.as_str())) {
                return Err(config_error(&format!("{name}.{k}"), "unknown key"));
            }
        }
        let section = |name: &'static str| Section {
            name,
            table: root.get(name).and_then(Value::as_table),
        };

        let kernel = section("kernel");
        let family = match kernel.str_opt("family")? {
            Some("riemann_liouville") => KernelFamily::RiemannLiouville,
            Some("exp_weighted") => KernelFamily::ExpWeighted,
            Some("tabulated") => KernelFamily::Tabulated,
            Some(other) => return Err(config_error("kernel.family", format!("unknown family `{other}`"))),
            None => return Err(config_error("kernel.family", "missing")),
        };
        let alpha = kernel.f64_or("alpha", 0.5)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(config_error("kernel.alpha", format!("must lie in (0,1), got {alpha}")));
        }
        let mu_w = kernel.f64_or("mu_w", 1.0)?;
        if family == KernelFamily::ExpWeighted && !(mu_w > 0.0 && mu_w.is_finite()) {
            return Err(config_error("kernel.mu_w", format!("must be > 0, got {mu_w}")));
        }
        let table_path = |key: &str| -> Result<Option<PathBuf>> {
            match kernel.str_opt(key)? {
                None if family == KernelFamily::Tabulated => {
                    Err(config_error(&kernel.key(key), "required for tabulated kernels"))
                }
                None => Ok(None),
                Some(p) => {
                    let path = resolve(base, p);
                    if path.is_file() {
                        Ok(Some(path))
                    } else {
                        Err(config_error(&kernel.key(key), format!("file `{p}` does not exist")))
                    }
                }
            }
        };
        let table = table_path("table")?;
        let partner_table = table_path("partner_table")?;

        let space = section("space");
        let s = space.f64_or("s", 0.5)?;
        if !(s > 0.0 && s < 1.0) {
            return Err(config_error("space.s", format!("must lie in (0,1), got {s}")));
        }
        let a = space.f64_or("a", -1.0)?;
        let b = space.f64_or("b", 1.0)?;
        if !(a < b) {
            return Err(config_error("space.b", format!("must exceed space.a ({a}), got {b}")));
        }
        let nodes = space.usize_or("nodes", 32)?;
        if nodes == 0 {
            return Err(config_error("space.nodes", "must be at least 1"));
        }

        let time = section("time");
        let horizon = time.f64_or("horizon", 1.0)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(config_error("time.horizon", format!("must be > 0, got {horizon}")));
        }
        let steps = time.usize_or("steps", 64)?;
        if steps == 0 {
            return Err(config_error("time.steps", "must be at least 1"));
        }

        let data = section("data");
        let f = data_source(&data, "f", Profile::Zero, base)?;
        let u0 = data_source(&data, "u0", Profile::Bump, base)?;
        let f_scale = data.f64_or("f_scale", 1.0)?;
        let u0_scale = data.f64_or("u0_scale", 1.0)?;
        let signed = data.bool_or("signed", false)?;
        if !signed && (f_scale < 0.0 || u0_scale < 0.0) {
            return Err(config_error("data.signed", "negative scales need signed = true"));
        }
        let levels = data.f64_list_or("levels", &[])?;
        if levels.iter().any(|m| !(*m > 0.0)) || levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_error("data.levels", "must be positive and strictly increasing"));
        }

        let v = section("verify");
        let verify = VerifyConfig {
            entropy: v.bool_or("entropy", true)?,
            weak_form: v.bool_or("weak_form", true)?,
            energy: v.bool_or("energy", true)?,
            levels: v.f64_list_or("levels", &[1.0, 5.0])?,
            ramp_width: v.f64_or("ramp_width", 1.0)?,
            zeta_powers: v
                .int_list_or("zeta_powers", &[1, 2])?
                .into_iter()
                .map(|q| {
                    if (1..=16).contains(&q) {
                        Ok(q as i32)
                    } else {
                        Err(config_error("verify.zeta_powers", format!("powers must lie in 1..=16, got {q}")))
                    }
                })
                .collect::<Result<_>>()?,
            cuts: v.f64_list_or("cuts", &[0.25, 0.5, 0.75])?,
            tolerance_scale: v.f64_or("tolerance_scale", 1.0)?,
        };
        if verify.levels.iter().any(|k| !(*k > 0.0)) {
            return Err(config_error("verify.levels", "levels must be > 0"));
        }
        if !(verify.ramp_width > 0.0) {
            return Err(config_error("verify.ramp_width", "must be > 0"));
        }
        if verify.cuts.iter().any(|c| !(*c > 0.0 && *c < 1.0)) {
            return Err(config_error("verify.cuts", "cuts are fractions of the horizon in (0,1)"));
        }
        if !(verify.tolerance_scale > 0.0) {
            return Err(config_error("verify.tolerance_scale", "must be > 0"));
        }

        let lambdas = section("kernels").f64_list_or("lambdas", &[1.0, 0.1])?;
        if lambdas.iter().any(|l| !(*l > 0.0)) {
            return Err(config_error("kernels.lambdas", "every lambda must be > 0"));
        }

        let out_dir = resolve(base, section("output").str_opt("dir")?.unwrap_or("out"));

        let sw = section("sweep");
        let sweep = SweepConfig {
            alpha: sw.f64_list_or("alpha", &[])?,
            s: sw.f64_list_or("s", &[])?,
            steps: sw
                .int_list_or("steps", &[])?
                .into_iter()
                .map(|n| {
                    if n >= 1 {
                        Ok(n as usize)
                    } else {
                        Err(config_error("sweep.steps", "steps must be >= 1"))
                    }
                })
                .collect::<Result<_>>()?,
        };
        if sweep.alpha.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(config_error("sweep.alpha", "values must lie in (0,1)"));
        }
        if sweep.s.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
            return Err(config_error("sweep.s", "values must lie in (0,1)"));
        }

        Ok(Self {
            kernel: KernelConfig {
                family,
                alpha,
                mu_w,
                table,
                partner_table,
            },
            s,
            a,
            b,
            nodes,
            horizon,
            steps,
            f,
            f_scale,
            u0,
            u0_scale,
            signed,
            levels,
            verify,
            lambdas,
            out_dir,
            sweep,
        })
    }
}
