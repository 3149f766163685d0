//! Flat `key = value` run configuration with dotted keys.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Unknown or duplicated keys are errors. Every error names the file line.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use stdg::diagnostics::BumpTest;
use stdg::fluxes::{FluxFunction, FluxKind};
use stdg::mesh::Pattern;
use stdg::shock_capturing::ViscosityParams;
use stdg::solver::{Boundary, InitialData, NewtonSettings, ProblemSetup};

/// Every accepted key with its default (empty = derived from other keys).
pub const KEYS: &[(&str, &str)] = &[
    ("pde", "burgers"),
    ("advection.speed", "1"),
    ("buckley.mobility", "0.5"),
    ("flux", "godunov"),
    ("q", "1"),
    ("n_x", "16"),
    ("t_final", "0.5"),
    ("slabs", ""),
    ("domain.left", "-1"),
    ("domain.right", "1"),
    ("mesh.pattern", "diagonal"),
    ("u0", "riemann(1, 0, 0)"),
    ("boundary", "farfield"),
    ("boundary.left", ""),
    ("boundary.right", ""),
    ("clamp.lo", ""),
    ("clamp.hi", ""),
    ("viscosity.enabled", "true"),
    ("viscosity.beta", "1"),
    ("viscosity.c_eps", "1"),
    ("viscosity.local_h", "false"),
    ("viscosity.temporal_jumps", "true"),
    ("newton.tol", "1e-10"),
    ("newton.max_iter", "50"),
    ("picard.sweeps", "3"),
    ("picard.tol", "1e-8"),
    ("levels", "4"),
    ("seed", "42"),
    ("output.dir", "out"),
    ("diagnostics.entropy", "true"),
    ("diagnostics.jump_threshold", "1e-8"),
    ("entropy.k", "0.25, 0.5, 0.75"),
    ("entropy.delta", "1e-3"),
    ("entropy.bump", ""),
    ("sc_lemma.q", "1, 2, 3"),
    ("sc_lemma.p", "2, 4, 6"),
    ("sc_lemma.trials", "1000"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    /// 1-based line, or `None` for problems not tied to a line.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.source, l, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Raw entries: key -> (line, value).
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    source: String,
    entries: HashMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(source: &str, text: &str) -> Result<Self, ConfigError> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| ConfigError { source: source.to_string(), line: Some(line), message };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(err(format!("expected `key = value`, found `{content}`")));
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(err("missing key before `=`".into()));
            }
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            if let Some((first, _)) = entries.get(key) {
                return Err(err(format!("duplicate key `{key}` (first set on line {first})")));
            }
            entries.insert(key.to_string(), (line, value.to_string()));
        }
        Ok(RawConfig { source: source.to_string(), entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: source.clone(),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&source, &text)
    }

    fn raw(&self, key: &str) -> (Option<usize>, &str) {
        match self.entries.get(key) {
            Some((line, v)) => (Some(*line), v.as_str()),
            None => (None, KEYS.iter().find(|(k, _)| *k == key).map_or("", |(_, d)| *d)),
        }
    }

    fn error(&self, key: &str, message: impl fmt::Display) -> ConfigError {
        ConfigError { source: self.source.clone(), line: self.raw(key).0, message: format!("`{key}`: {message}") }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let (_, v) = self.raw(key);
        v.parse().map_err(|e| self.error(key, format!("cannot parse `{v}`: {e}")))
    }

    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        if self.raw(key).1.is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let (_, v) = self.raw(key);
        v.split(',')
            .map(|s| s.trim().parse().map_err(|e| self.error(key, format!("cannot parse `{}`: {e}", s.trim()))))
            .collect()
    }

    fn choice<'a>(&self, key: &str, options: &[&'a str]) -> Result<&'a str, ConfigError> {
        let (_, v) = self.raw(key);
        options
            .iter()
            .find(|o| **o == v)
            .copied()
            .ok_or_else(|| self.error(key, format!("`{v}` is not one of {}", options.join("|"))))
    }

    fn check(&self, key: &str, ok: bool, requirement: &str) -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            Err(self.error(key, format!("value `{}` {requirement}", self.raw(key).1)))
        }
    }
}

/// `name(a, b, ...)` to a name and numeric arguments.
fn parse_call(s: &str) -> Option<(&str, Vec<f64>)> {
    let (name, rest) = s.split_once('(')?;
    let args = rest.trim_end().strip_suffix(')')?;
    let args = if args.trim().is_empty() {
        Vec::new()
    } else {
        args.split(',').map(|a| a.trim().parse().ok()).collect::<Option<Vec<f64>>>()?
    };
    Some((name.trim(), args))
}

pub fn parse_initial_data(s: &str) -> Result<InitialData, String> {
    let (name, a) = parse_call(s).ok_or_else(|| format!("`{s}` is not of the form name(args)"))?;
    let arity = |n: usize| {
        if a.len() == n {
            Ok(())
        } else {
            Err(format!("{name} takes {n} arguments, got {}", a.len()))
        }
    };
    let data = match name {
        "riemann" => {
            arity(3)?;
            InitialData::Riemann { left: a[0], right: a[1], x0: a[2] }
        }
        "bump" => {
            arity(3)?;
            if !(a[1] > 0.0) {
                return Err("bump width must be positive".into());
            }
            InitialData::Bump { center: a[0], width: a[1], height: a[2] }
        }
        "sine" => {
            arity(2)?;
            if a[1] == 0.0 {
                return Err("sine period must be nonzero".into());
            }
            InitialData::Sine { amp: a[0], period: a[1] }
        }
        "box" => {
            arity(3)?;
            if !(a[0] < a[1]) {
                return Err("box needs left < right".into());
            }
            InitialData::Box { left: a[0], right: a[1], height: a[2] }
        }
        "constant" => {
            arity(1)?;
            InitialData::Constant(a[0])
        }
        _ => return Err(format!("unknown initial data `{name}` (riemann|bump|sine|box|constant)")),
    };
    if a.iter().any(|v| !v.is_finite()) {
        return Err("arguments must be finite".into());
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pde {
    Advection,
    Burgers,
    Buckley,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub pde: Pde,
    pub setup: ProblemSetup,
    pub levels: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub entropy: bool,
    pub jump_threshold: f64,
    pub entropy_k: Vec<f64>,
    pub entropy_delta: f64,
    pub bump: BumpTest,
    pub sc_q: Vec<usize>,
    pub sc_p: Vec<usize>,
    pub sc_trials: usize,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let pde = match raw.choice("pde", &["advection", "burgers", "buckley"])? {
            "advection" => Pde::Advection,
            "burgers" => Pde::Burgers,
            _ => Pde::Buckley,
        };
        let flux_kind = match raw.choice("flux", &["godunov", "eo", "llf"])? {
            "godunov" => FluxKind::Godunov,
            "eo" => FluxKind::EngquistOsher,
            _ => FluxKind::LocalLaxFriedrichs,
        };
        if pde == Pde::Buckley && flux_kind == FluxKind::EngquistOsher {
            return Err(raw.error("flux", "Engquist-Osher requires a convex flux; use godunov or llf with buckley"));
        }

        let q: usize = raw.get("q")?;
        raw.check("q", (1..=4).contains(&q), "must lie in 1..=4")?;
        let n_x: usize = raw.get("n_x")?;
        raw.check("n_x", n_x >= 2, "must be at least 2")?;
        let t_final: f64 = raw.get("t_final")?;
        raw.check("t_final", t_final > 0.0 && t_final.is_finite(), "must be positive")?;
        let slabs: Option<usize> = raw.optional("slabs")?;
        raw.check("slabs", slabs != Some(0), "must be at least 1")?;
        let (x_left, x_right): (f64, f64) = (raw.get("domain.left")?, raw.get("domain.right")?);
        raw.check("domain.right", x_left < x_right && x_right.is_finite() && x_left.is_finite(), "must exceed domain.left")?;
        let pattern = match raw.choice("mesh.pattern", &["diagonal", "crisscross"])? {
            "diagonal" => Pattern::UniformDiagonal,
            _ => Pattern::CrissCross,
        };
        let u0 = parse_initial_data(raw.raw("u0").1).map_err(|e| raw.error("u0", e))?;

        let physical = match pde {
            Pde::Advection => {
                let c: f64 = raw.get("advection.speed")?;
                raw.check("advection.speed", c.is_finite(), "must be finite")?;
                FluxFunction::linear(c)
            }
            Pde::Burgers => FluxFunction::burgers(),
            Pde::Buckley => {
                let m: f64 = raw.get("buckley.mobility")?;
                raw.check("buckley.mobility", m > 0.0 && m.is_finite(), "must be positive")?;
                FluxFunction::buckley_leverett(m)
            }
        };
        let flux = match (raw.optional::<f64>("clamp.lo")?, raw.optional::<f64>("clamp.hi")?) {
            (None, None) => {
                let (lo, hi) = u0.range();
                physical.with_default_clamp(lo, hi)
            }
            (Some(lo), Some(hi)) => {
                raw.check("clamp.hi", lo <= hi, "must not be below clamp.lo")?;
                physical.with_clamp(lo, hi)
            }
            (Some(_), None) => return Err(raw.error("clamp.lo", "clamp.hi must be set as well")),
            (None, Some(_)) => return Err(raw.error("clamp.hi", "clamp.lo must be set as well")),
        }
        .map_err(|e| raw.error("clamp.lo", e))?;

        let boundary = match raw.choice("boundary", &["farfield", "transmissive"])? {
            "farfield" => Boundary::FarField {
                left: raw.optional("boundary.left")?.unwrap_or_else(|| u0.eval(x_left)),
                right: raw.optional("boundary.right")?.unwrap_or_else(|| u0.eval(x_right)),
            },
            _ => Boundary::Transmissive,
        };

        let viscosity = if raw.get::<bool>("viscosity.enabled")? {
            let beta: f64 = raw.get("viscosity.beta")?;
            raw.check("viscosity.beta", beta > 0.5 && beta < 2.0, "must lie strictly inside (0.5, 2)")?;
            let c_eps: f64 = raw.get("viscosity.c_eps")?;
            raw.check("viscosity.c_eps", c_eps > 0.0 && c_eps.is_finite(), "must be positive")?;
            Some(ViscosityParams {
                beta,
                c_eps,
                local_h: raw.get("viscosity.local_h")?,
                temporal_jumps: raw.get("viscosity.temporal_jumps")?,
            })
        } else {
            None
        };

        let newton = NewtonSettings {
            abs_tol: raw.get("newton.tol")?,
            max_iter: raw.get("newton.max_iter")?,
            picard_sweeps: raw.get("picard.sweeps")?,
            picard_tol: raw.get("picard.tol")?,
            ..NewtonSettings::default()
        };
        raw.check("newton.tol", newton.abs_tol > 0.0 && newton.abs_tol.is_finite(), "must be positive")?;
        raw.check("newton.max_iter", newton.max_iter >= 1, "must be at least 1")?;
        raw.check("picard.sweeps", newton.picard_sweeps >= 1, "must be at least 1")?;
        raw.check("picard.tol", newton.picard_tol >= 0.0, "must be nonnegative")?;

        let setup = ProblemSetup {
            flux,
            flux_kind,
            q,
            viscosity,
            x_left,
            x_right,
            n_x,
            t_final,
            slabs,
            pattern,
            newton,
            u0,
            boundary,
        };
        setup.validate().map_err(|e| ConfigError { source: raw.source.clone(), line: None, message: e.to_string() })?;

        let levels: usize = raw.get("levels")?;
        raw.check("levels", levels >= 1, "must be at least 1")?;
        let jump_threshold: f64 = raw.get("diagnostics.jump_threshold")?;
        raw.check("diagnostics.jump_threshold", jump_threshold >= 0.0, "must be nonnegative")?;
        let entropy_delta: f64 = raw.get("entropy.delta")?;
        raw.check("entropy.delta", entropy_delta > 0.0 && entropy_delta.is_finite(), "must be positive")?;
        let entropy_k: Vec<f64> = raw.list("entropy.k")?;

        let bump = match raw.optional::<String>("entropy.bump")? {
            None => BumpTest {
                t_center: 0.5 * t_final,
                x_center: 0.5 * (x_left + x_right),
                t_radius: 0.4 * t_final,
                x_radius: 0.3 * (x_right - x_left),
            },
            Some(_) => {
                let v: Vec<f64> = raw.list("entropy.bump")?;
                if v.len() != 4 {
                    return Err(raw.error("entropy.bump", "expects `t_center, x_center, t_radius, x_radius`"));
                }
                BumpTest { t_center: v[0], x_center: v[1], t_radius: v[2], x_radius: v[3] }
            }
        };
        let inside = bump.t_radius > 0.0
            && bump.x_radius > 0.0
            && bump.t_center - bump.t_radius >= 0.0
            && bump.t_center + bump.t_radius <= t_final
            && bump.x_center - bump.x_radius >= x_left
            && bump.x_center + bump.x_radius <= x_right;
        raw.check("entropy.bump", inside, "must have its support inside (0, t_final) x (domain.left, domain.right)")?;

        let sc_q: Vec<usize> = raw.list("sc_lemma.q")?;
        raw.check("sc_lemma.q", sc_q.iter().all(|q| (1..=4).contains(q)), "entries must lie in 1..=4")?;
        let sc_p: Vec<usize> = raw.list("sc_lemma.p")?;
        raw.check("sc_lemma.p", sc_p.iter().all(|p| *p >= 2 && p % 2 == 0), "entries must be even and at least 2")?;
        let sc_trials: usize = raw.get("sc_lemma.trials")?;
        raw.check("sc_lemma.trials", sc_trials >= 1, "must be at least 1")?;

        Ok(RunConfig {
            pde,
            setup,
            levels,
            seed: raw.get("seed")?,
            output_dir: PathBuf::from(raw.raw("output.dir").1),
            entropy: raw.get("diagnostics.entropy")?,
            jump_threshold,
            entropy_k,
            entropy_delta,
            bump,
            sc_q,
            sc_p,
            sc_trials,
        })
    }

    pub fn parse(source: &str, text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(source, text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::load(path)?)
    }

    pub fn defaults() -> Self {
        Self::parse("<defaults>", "").expect("defaults are valid")
    }

    /// `n_x` of each refinement level, coarsest first.
    pub fn ladder(&self) -> Vec<usize> {
        (0..self.levels).map(|i| self.setup.n_x << i).collect()
    }
}
