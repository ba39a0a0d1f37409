//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Optional settings take the
//! value `auto`, which defers to the library's grid-aware defaults. Every
//! problem in a file is reported, not only the first.

use crate::defects::ClassifyOptions;
use crate::elastic::ElasticModulus;
use crate::error::{Error, Result};
use crate::fields::{FieldKind, GeneratorParams};
use crate::grid::{DomainShape, GridSpec};
use crate::manifolds::QuotientTarget;
use crate::minimizer::{MinimizeOptions, PenalizedOptions};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

/// The CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Generate,
    Minimize,
    MinimizePenalized,
    Lift,
    Analyze,
    Monotonicity,
    CheckModulus,
    Export,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Generate,
        Command::Minimize,
        Command::MinimizePenalized,
        Command::Lift,
        Command::Analyze,
        Command::Monotonicity,
        Command::CheckModulus,
        Command::Export,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Minimize => "minimize",
            Command::MinimizePenalized => "minimize-penalized",
            Command::Lift => "lift",
            Command::Analyze => "analyze",
            Command::Monotonicity => "monotonicity",
            Command::CheckModulus => "check-modulus",
            Command::Export => "export",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Keys that must be set for this subcommand.
    fn required(&self) -> &'static [&'static str] {
        match self {
            Command::Generate | Command::Minimize | Command::MinimizePenalized => &["io.out"],
            Command::Lift | Command::Analyze | Command::Monotonicity => &["io.in"],
            Command::Export => &["io.in", "io.out"],
            Command::CheckModulus => &[],
        }
    }
}

/// Every recognised key, in file order.
pub const KEYS: [&str; 31] = [
    "command",
    "target",
    "grid.dims",
    "grid.n",
    "grid.half_width",
    "grid.shape",
    "modulus.p",
    "modulus.b",
    "field.kind",
    "field.direction",
    "field.center",
    "field.support",
    "opts.max_iters",
    "opts.grad_tol",
    "opts.armijo_c",
    "opts.backtrack",
    "opts.initial_step",
    "opts.delta_grad",
    "opts.perturbation",
    "penalized.epsilon",
    "analysis.threshold",
    "analysis.centers",
    "analysis.radii",
    "analysis.r",
    "analysis.big_r",
    "io.in",
    "io.out",
    "io.format",
    "io.trace",
    "io.meta",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub target: String,
    pub dims: usize,
    pub n: usize,
    pub half_width: f64,
    pub shape: DomainShape,
    pub p: f64,
    pub b: f64,
    pub kind: String,
    pub direction: Vec<f64>,
    pub center: Option<[f64; 3]>,
    pub support: Option<f64>,
    pub max_iters: Option<usize>,
    pub grad_tol: Option<f64>,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub initial_step: Option<f64>,
    pub delta_grad: Option<f64>,
    pub perturbation: f64,
    pub epsilon: f64,
    pub threshold: Option<f64>,
    /// Analysis centres; empty means the grid default.
    pub centers: Vec<[f64; 3]>,
    /// Density radii; empty means dyadic radii.
    pub radii: Vec<f64>,
    pub inner_radius: Option<f64>,
    pub outer_radius: Option<f64>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: Option<String>,
    pub trace: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opts = MinimizeOptions::default();
        RunConfig {
            command: None,
            target: "RP2".into(),
            dims: 3,
            n: 32,
            half_width: 1.0,
            shape: DomainShape::Ball,
            p: 1.5,
            b: 0.0,
            kind: "hedgehog".into(),
            direction: vec![0.0, 0.0, 1.0],
            center: None,
            support: None,
            max_iters: None,
            grad_tol: None,
            armijo_c: opts.armijo_c,
            backtrack: opts.backtrack,
            initial_step: None,
            delta_grad: None,
            perturbation: 0.0,
            epsilon: 0.2,
            threshold: None,
            centers: Vec::new(),
            radii: Vec::new(),
            inner_radius: None,
            outer_radius: None,
            input: None,
            output: None,
            format: None,
            trace: None,
            meta: None,
            seed: 0,
        }
    }
}

const AUTO: &str = "auto";

fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("`{v}` is not a valid number"))
}

fn opt<T>(v: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Option<T>, String> {
    if v == AUTO {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(|x| num::<f64>(x.trim())).collect()
}

fn point(v: &str) -> std::result::Result<[f64; 3], String> {
    let xs = list(v)?;
    match xs.len() {
        2 => Ok([xs[0], xs[1], 0.0]),
        3 => Ok([xs[0], xs[1], xs[2]]),
        k => Err(format!("a point needs 2 or 3 coordinates, got {k}")),
    }
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn fmt_opt<T>(x: &Option<T>, f: impl Fn(&T) -> String) -> String {
    x.as_ref().map_or_else(|| AUTO.to_string(), f)
}

fn path(v: &str) -> std::result::Result<PathBuf, String> {
    if v.is_empty() {
        Err("empty path".into())
    } else {
        Ok(PathBuf::from(v))
    }
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let v = v.trim();
        match key {
            "command" => {
                self.command = if v == AUTO {
                    None
                } else {
                    Some(Command::parse(v).ok_or_else(|| format!("unknown subcommand `{v}`"))?)
                }
            }
            "target" => self.target = v.to_string(),
            "grid.dims" => self.dims = num(v)?,
            "grid.n" => self.n = num(v)?,
            "grid.half_width" => self.half_width = num(v)?,
            "grid.shape" => self.shape = DomainShape::parse(v).map_err(|e| e.to_string())?,
            "modulus.p" => self.p = num(v)?,
            "modulus.b" => self.b = num(v)?,
            "field.kind" => self.kind = v.to_string(),
            "field.direction" => self.direction = list(v)?,
            "field.center" => self.center = opt(v, point)?,
            "field.support" => self.support = opt(v, num)?,
            "opts.max_iters" => self.max_iters = opt(v, num)?,
            "opts.grad_tol" => self.grad_tol = opt(v, num)?,
            "opts.armijo_c" => self.armijo_c = num(v)?,
            "opts.backtrack" => self.backtrack = num(v)?,
            "opts.initial_step" => self.initial_step = opt(v, num)?,
            "opts.delta_grad" => self.delta_grad = opt(v, num)?,
            "opts.perturbation" => self.perturbation = num(v)?,
            "penalized.epsilon" => self.epsilon = num(v)?,
            "analysis.threshold" => self.threshold = opt(v, num)?,
            "analysis.centers" => {
                self.centers = if v == AUTO { Vec::new() } else { v.split(';').map(|s| point(s.trim())).collect::<std::result::Result<_, _>>()? }
            }
            "analysis.radii" => self.radii = if v == AUTO { Vec::new() } else { list(v)? },
            "analysis.r" => self.inner_radius = opt(v, num)?,
            "analysis.big_r" => self.outer_radius = opt(v, num)?,
            "io.in" => self.input = opt(v, path)?,
            "io.out" => self.output = opt(v, path)?,
            "io.format" => self.format = opt(v, |s| Ok(s.to_string()))?,
            "io.trace" => self.trace = opt(v, path)?,
            "io.meta" => self.meta = opt(v, path)?,
            "seed" => self.seed = num(v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Textual value of one key, as [`set`](Self::set) accepts it.
    pub fn get(&self, key: &str) -> Option<String> {
        let p = |x: &Option<PathBuf>| fmt_opt(x, |p| p.display().to_string());
        Some(match key {
            "command" => fmt_opt(&self.command, |c| c.name().to_string()),
            "target" => self.target.clone(),
            "grid.dims" => self.dims.to_string(),
            "grid.n" => self.n.to_string(),
            "grid.half_width" => format!("{:?}", self.half_width),
            "grid.shape" => self.shape.name().to_string(),
            "modulus.p" => format!("{:?}", self.p),
            "modulus.b" => format!("{:?}", self.b),
            "field.kind" => self.kind.clone(),
            "field.direction" => fmt_list(&self.direction),
            "field.center" => fmt_opt(&self.center, |c| fmt_list(c)),
            "field.support" => fmt_opt(&self.support, |x| format!("{x:?}")),
            "opts.max_iters" => fmt_opt(&self.max_iters, |x| x.to_string()),
            "opts.grad_tol" => fmt_opt(&self.grad_tol, |x| format!("{x:?}")),
            "opts.armijo_c" => format!("{:?}", self.armijo_c),
            "opts.backtrack" => format!("{:?}", self.backtrack),
            "opts.initial_step" => fmt_opt(&self.initial_step, |x| format!("{x:?}")),
            "opts.delta_grad" => fmt_opt(&self.delta_grad, |x| format!("{x:?}")),
            "opts.perturbation" => format!("{:?}", self.perturbation),
            "penalized.epsilon" => format!("{:?}", self.epsilon),
            "analysis.threshold" => fmt_opt(&self.threshold, |x| format!("{x:?}")),
            "analysis.centers" => {
                if self.centers.is_empty() {
                    AUTO.into()
                } else {
                    self.centers.iter().map(|c| fmt_list(c)).collect::<Vec<_>>().join("; ")
                }
            }
            "analysis.radii" => if self.radii.is_empty() { AUTO.into() } else { fmt_list(&self.radii) },
            "analysis.r" => fmt_opt(&self.inner_radius, |x| format!("{x:?}")),
            "analysis.big_r" => fmt_opt(&self.outer_radius, |x| format!("{x:?}")),
            "io.in" => p(&self.input),
            "io.out" => p(&self.output),
            "io.format" => fmt_opt(&self.format, |s| s.clone()),
            "io.trace" => p(&self.trace),
            "io.meta" => p(&self.meta),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// All keys as `key = value` lines; [`parse_config`] reads it back
    /// to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let _ = writeln!(s, "{key} = {}", self.get(key).expect("known key"));
        }
        s
    }

    /// Checks every value range and the keys the subcommand needs.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let target = QuotientTarget::by_name(&self.target);
        if target.is_err() {
            errs.push(format!("target: unknown target `{}` (expected RP2, S3modZ4, S2 or S3)", self.target));
        }
        if self.dims != 2 && self.dims != 3 {
            errs.push(format!("grid.dims = {} must be 2 or 3", self.dims));
        }
        if self.n < 8 {
            errs.push(format!("grid.n = {} must be at least 8", self.n));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            errs.push(format!("grid.half_width = {} must be positive", self.half_width));
        }
        if !(self.p > 1.0 && self.p < 2.0) {
            errs.push(format!("modulus.p = {} must lie in the open interval (1, 2)", self.p));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            errs.push(format!("modulus.b = {} must be nonnegative", self.b));
        }
        if let Err(e) = FieldKind::parse(&self.kind) {
            errs.push(format!("field.kind: {e}"));
        }
        if let Ok(t) = &target {
            if self.direction.len() != t.ambient_dim() {
                errs.push(format!(
                    "field.direction has {} components, target {} needs {}",
                    self.direction.len(),
                    t.name(),
                    t.ambient_dim()
                ));
            }
        }
        if !self.direction.iter().all(|x| x.is_finite()) || self.direction.iter().all(|&x| x == 0.0) {
            errs.push("field.direction must be finite and nonzero".into());
        }
        if let Some(s) = self.support {
            if !(s > 0.0) {
                errs.push(format!("field.support = {s} must be positive"));
            }
        }
        if let Err(Error::Config(e)) = self.minimize_options().validate() {
            errs.extend(e);
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            errs.push(format!("penalized.epsilon = {} must be positive", self.epsilon));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0) {
                errs.push(format!("analysis.threshold = {t} must be positive"));
            }
        }
        if self.radii.iter().any(|&r| !(r > 0.0)) {
            errs.push("analysis.radii must all be positive".into());
        }
        for (key, r) in [("analysis.r", self.inner_radius), ("analysis.big_r", self.outer_radius)] {
            if let Some(r) = r {
                if !(r > 0.0) {
                    errs.push(format!("{key} = {r} must be positive"));
                }
            }
        }
        if let (Some(r), Some(big)) = (self.inner_radius, self.outer_radius) {
            if !(r < big) {
                errs.push(format!("analysis.r = {r} must be below analysis.big_r = {big}"));
            }
        }
        if let Some(f) = &self.format {
            if let Err(e) = crate::io::Format::parse(f) {
                errs.push(format!("io.format: {e}"));
            }
        }
        if let Some(cmd) = self.command {
            for key in cmd.required() {
                if self.get(key).as_deref() == Some(AUTO) {
                    errs.push(format!("{key} is required by `{}`", cmd.name()));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn quotient_target(&self) -> Result<QuotientTarget> {
        QuotientTarget::by_name(&self.target)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::centered(self.dims, self.n, self.half_width, self.shape)
    }

    pub fn modulus(&self) -> Result<ElasticModulus> {
        ElasticModulus::power_regularized(self.p, self.b)
    }

    pub fn field_kind(&self) -> Result<FieldKind> {
        FieldKind::parse(&self.kind)
    }

    pub fn generator_params(&self) -> GeneratorParams {
        GeneratorParams { direction: self.direction.clone(), seed: self.seed, center: self.center, support: self.support }
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            armijo_c: self.armijo_c,
            backtrack: self.backtrack,
            initial_step: self.initial_step,
            delta_grad: self.delta_grad,
            seed: self.seed,
            perturbation: self.perturbation,
        }
    }

    pub fn penalized_options(&self) -> PenalizedOptions {
        PenalizedOptions { base: self.minimize_options(), ..PenalizedOptions::new(self.epsilon) }
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions { threshold: self.threshold }
    }
}

/// A config plus the keys that were set explicitly.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    pub config: RunConfig,
    pub explicit: BTreeSet<String>,
    errors: Vec<String>,
}

impl ConfigBuilder {
    /// Reads `key = value` lines, collecting every error.
    pub fn read_text(&mut self, text: &str) {
        let mut seen = BTreeSet::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                self.errors.push(format!("line {}: expected `key = value`, got `{line}`", no + 1));
                continue;
            };
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                self.errors.push(format!("line {}: duplicate key `{key}`", no + 1));
                continue;
            }
            self.apply(key, value, &format!("line {}", no + 1));
        }
    }

    /// Sets one key, recording an error if it is unknown or malformed.
    pub fn apply(&mut self, key: &str, value: &str, origin: &str) {
        match self.config.set(key, value) {
            Ok(()) => {
                self.explicit.insert(key.to_string());
            }
            Err(e) if e.starts_with("unknown key") => self.errors.push(format!("{origin}: {e}")),
            Err(e) => self.errors.push(format!("{origin}: {key}: {e}")),
        }
    }

    pub fn push_error(&mut self, message: String) {
        self.errors.push(message);
    }

    /// The validated config, or every parse and range error together.
    pub fn finish(self) -> Result<RunConfig> {
        let mut errs = self.errors;
        if let Err(Error::Config(e)) = self.config.validate() {
            errs.extend(e);
        }
        if errs.is_empty() {
            Ok(self.config)
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Keys left at their default values.
    pub fn defaulted(&self) -> Vec<&'static str> {
        KEYS.iter().copied().filter(|k| !self.explicit.contains(*k)).collect()
    }
}

/// Parses and validates a config file.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut b = ConfigBuilder::default();
    b.read_text(text);
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn errors(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Config(e)) => e,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_minimize_config_fills_defaults() {
        let c = parse_config("command = minimize\nio.out = out.dfsc # result\n").unwrap();
        let expected = RunConfig {
            command: Some(Command::Minimize),
            output: Some("out.dfsc".into()),
            ..RunConfig::default()
        };
        assert_eq!(c, expected);
        assert_eq!(c.target, "RP2");
        assert_eq!((c.p, c.b, c.n, c.dims), (1.5, 0.0, 32, 3));
        assert_eq!(c.minimize_options().grad_tol, None);
    }

    #[test]
    fn exponent_outside_range_names_the_interval() {
        let e = errors("modulus.p = 2.5\n");
        assert_eq!(e.len(), 1);
        assert!(e[0].contains("(1, 2)"), "{e:?}");
    }

    #[test]
    fn all_errors_are_reported() {
        let e = errors("modulus.p = 2.5\ngrid.n = 4\nbogus = 1\nno equals sign\ngrid.n = 9\n");
        assert_eq!(e.len(), 5, "{e:?}");
        assert!(e.iter().any(|m| m.contains("unknown key `bogus`")));
        assert!(e.iter().any(|m| m.contains("duplicate key")));
        assert!(e.iter().any(|m| m.contains("grid.n = 4")));
    }

    #[test]
    fn subcommands_require_their_paths() {
        let e = errors("command = export\n");
        assert_eq!(e.len(), 2);
        assert!(parse_config("command = check-modulus\n").is_ok());
    }

    #[test]
    fn defaulted_keys_are_listed() {
        let mut b = ConfigBuilder::default();
        b.read_text("seed = 3\ntarget = S2\n");
        let d = b.defaulted();
        assert_eq!(d.len(), KEYS.len() - 2);
        assert!(!d.contains(&"seed") && d.contains(&"grid.n"));
    }

    #[test]
    fn full_config_roundtrips() {
        let c = RunConfig {
            command: Some(Command::Monotonicity),
            centers: vec![[0.1, -0.2, 0.3], [0.0, 0.0, 1e-300]],
            radii: vec![0.5, 0.25],
            inner_radius: Some(0.1),
            outer_radius: Some(0.6),
            input: Some("a b/c.dfsc".into()),
            format: Some("json".into()),
            grad_tol: Some(1.0 / 3.0),
            ..RunConfig::default()
        };
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(
            p in 1.0001f64..1.9999, b in 0.0f64..10.0, n in 8usize..200, seed in any::<u64>(),
            tol in proptest::option::of(1e-14f64..1.0), iters in proptest::option::of(1usize..100000),
            eps in 1e-6f64..10.0, center in proptest::option::of(proptest::array::uniform3(-1.0f64..1.0)),
        ) {
            let c = RunConfig {
                p, b, n, seed, grad_tol: tol, max_iters: iters, epsilon: eps, center,
                command: Some(Command::Analyze), input: Some("x.dfsc".into()),
                ..RunConfig::default()
            };
            prop_assert_eq!(parse_config(&c.to_text()).unwrap(), c);
        }
    }
}
