//! Flat `key = value` run configurations with dotted sections.
//!
//! One file describes one experiment.  Parsing collects every key into a
//! map, typed getters consume them, and any key left over is reported as a
//! likely typo.  Validation happens before any grid is allocated.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::background::{normalized_family, solve_jump, ShockBackground};
use crate::driver::ExperimentSpec;
use crate::error::{Error, Result};
use crate::solver::GridSpec;
use crate::wall::{WallKind, WallSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Background,
    Identities,
    Multipliers,
    Linear,
    Nonlinear,
    All,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Background => "background",
            Mode::Identities => "identities",
            Mode::Multipliers => "multipliers",
            Mode::Linear => "linear",
            Mode::Nonlinear => "nonlinear",
            Mode::All => "all",
        }
    }

    pub fn enables(self, other: Mode) -> bool {
        self == Mode::All || self == other
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "background" => Ok(Mode::Background),
            "identities" => Ok(Mode::Identities),
            "multipliers" => Ok(Mode::Multipliers),
            "linear" => Ok(Mode::Linear),
            "nonlinear" => Ok(Mode::Nonlinear),
            "all" => Ok(Mode::All),
            other => Err(Error::Config(format!(
                "run.mode: unknown mode '{other}' (expected background, identities, \
                 multipliers, linear, nonlinear or all)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the background state is specified: the normalized family (downstream
/// speed 1, densities scaled by the jump ratio) or a raw upstream pair.
#[derive(Clone, Copy, Debug)]
pub enum GasSpec {
    Normalized { lambda: f64 },
    Upstream { rho_minus: f64, q_minus: f64 },
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub name: String,
    pub mode: Mode,
    pub seed: u64,
    pub jobs: usize,
    pub gamma: f64,
    pub gas: GasSpec,
    pub wall: WallSpec,
    pub eps: f64,
    pub ramp_time: f64,
    pub pert_center1: f64,
    pub pert_width1: f64,
    pub pert_width3: f64,
    pub pert_width2: Option<f64>,
    pub grid_l: [f64; 3],
    pub grid_n: [usize; 3],
    pub dt: f64,
    pub t_final: f64,
    pub cfl_safety: f64,
    pub eta0: f64,
    pub m_max: usize,
    pub tol_fix: f64,
}

struct KeyMap {
    entries: BTreeMap<String, String>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl KeyMap {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        Ok(KeyMap { entries, used: Default::default() })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v.as_str())
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'"))),
        }
    }

    fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some("none") => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'"))),
        }
    }

    fn leftovers(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.entries.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let map = KeyMap::parse(text)?;

        let gamma = map.get("gas.gamma", 1.4)?;
        let gas = match (map.get_opt::<f64>("gas.lambda")?, map.get_opt::<f64>("gas.q_minus")?) {
            (Some(lambda), None) => GasSpec::Normalized { lambda },
            (None, Some(q_minus)) => {
                let rho_minus = map.get_opt::<f64>("gas.rho_minus")?.ok_or_else(|| {
                    Error::Config("gas.rho_minus: required alongside gas.q_minus".into())
                })?;
                GasSpec::Upstream { rho_minus, q_minus }
            }
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "gas.lambda and gas.q_minus are mutually exclusive".into(),
                ))
            }
            (None, None) => GasSpec::Normalized { lambda: 1.7 },
        };

        let wall_kind = map.raw("wall.kind").unwrap_or("flat").to_string();
        let wall = match wall_kind.as_str() {
            "flat" => WallSpec::flat(),
            "even_bump" | "ridge" => {
                let amplitude = map.get("wall.amplitude", 0.01)?;
                let center1 = map.get("wall.center1", 0.5)?;
                let width1 = map.get("wall.width1", 0.35)?;
                let width2 = map.get("wall.width2", 0.45)?;
                let kind = if wall_kind == "even_bump" {
                    WallKind::EvenBump { amplitude, center1, width1, width2 }
                } else {
                    WallKind::Ridge { amplitude, center1, width1, width2 }
                };
                WallSpec { kind }
            }
            other => {
                return Err(Error::Config(format!(
                    "wall.kind: unknown kind '{other}' (expected flat, even_bump or ridge)"
                )))
            }
        };

        let cfg = RunConfig {
            name: map.raw("run.name").unwrap_or("run").to_string(),
            mode: map.raw("run.mode").unwrap_or("all").parse()?,
            seed: map.get("run.seed", 7u64)?,
            jobs: map.get("run.jobs", 1usize)?,
            gamma,
            gas,
            wall,
            eps: map.get("perturbation.eps", 1e-3)?,
            ramp_time: map.get("perturbation.ramp_time", 0.05)?,
            pert_center1: map.get("perturbation.center1", 0.2)?,
            pert_width1: map.get("perturbation.width1", 0.5)?,
            pert_width3: map.get("perturbation.width3", 0.45)?,
            pert_width2: map.get_opt("perturbation.width2")?,
            grid_l: [
                map.get("grid.l1", 1.4)?,
                map.get("grid.l2", 0.15)?,
                map.get("grid.l3", 0.6)?,
            ],
            grid_n: [
                map.get("grid.n1", 32usize)?,
                map.get("grid.n2", 8usize)?,
                map.get("grid.n3", 32usize)?,
            ],
            dt: map.get("grid.dt", 0.0)?,
            t_final: map.get("grid.t_final", 0.2)?,
            cfl_safety: map.get("grid.cfl_safety", 0.5)?,
            eta0: map.get("energy.eta0", 1.0)?,
            m_max: map.get("iteration.m_max", 30usize)?,
            tol_fix: map.get("iteration.tol_fix", 1e-10)?,
        };

        let leftovers = map.leftovers();
        if !leftovers.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", leftovers.join(", "))));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every numeric field checked against the preconditions of the module
    /// that will consume it, with the config-file field path in the message.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, ok: bool, why: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{name}: {why}")))
            }
        };
        field("gas.gamma", self.gamma > 1.0, "adiabatic exponent must exceed 1")?;
        match self.gas {
            GasSpec::Normalized { lambda } => {
                field("gas.lambda", lambda > 1.0, "density ratio must exceed 1")?
            }
            GasSpec::Upstream { rho_minus, q_minus } => {
                field("gas.rho_minus", rho_minus > 0.0, "density must be positive")?;
                field("gas.q_minus", q_minus > 0.0, "speed must be positive")?;
            }
        }
        field("run.jobs", self.jobs >= 1, "at least one job")?;
        field("perturbation.eps", self.eps >= 0.0, "amplitude cannot be negative")?;
        field("perturbation.ramp_time", self.ramp_time >= 0.0, "ramp cannot be negative")?;
        field("perturbation.width1", self.pert_width1 > 0.0, "width must be positive")?;
        field("perturbation.width3", self.pert_width3 > 0.0, "width must be positive")?;
        if let Some(w2) = self.pert_width2 {
            field("perturbation.width2", w2 > 0.0, "width must be positive")?;
        }
        for (i, &l) in self.grid_l.iter().enumerate() {
            field(&format!("grid.l{}", i + 1), l > 0.0, "extent must be positive")?;
        }
        field("grid.n1", self.grid_n[0] >= 4, "at least 4 cells")?;
        field("grid.n2", self.grid_n[1] >= 2, "at least 2 cells")?;
        field("grid.n3", self.grid_n[2] >= 4, "at least 4 cells")?;
        field("grid.t_final", self.t_final > 0.0, "horizon must be positive")?;
        field(
            "grid.dt",
            self.dt >= 0.0 && self.dt < self.t_final,
            "step must be 0 (automatic) or positive below the horizon",
        )?;
        field(
            "grid.cfl_safety",
            self.cfl_safety > 0.0 && self.cfl_safety <= 1.0,
            "safety factor must lie in (0, 1]",
        )?;
        field("energy.eta0", self.eta0 > 0.0, "base weight must be positive")?;
        field("iteration.m_max", self.m_max >= 1, "at least one sweep")?;
        field("iteration.tol_fix", self.tol_fix > 0.0, "tolerance must be positive")?;
        Ok(())
    }

    pub fn background(&self) -> Result<ShockBackground> {
        match self.gas {
            GasSpec::Normalized { lambda } => normalized_family(self.gamma, lambda),
            GasSpec::Upstream { rho_minus, q_minus } => {
                solve_jump(self.gamma, rho_minus, q_minus)
            }
        }
    }

    pub fn grid(&self) -> GridSpec {
        let mut g = GridSpec::new(self.grid_l, self.grid_n, self.dt, self.t_final, self.eta0);
        g.cfl_safety = self.cfl_safety;
        g
    }

    /// The nonlinear experiment runs on the normalized family; a raw
    /// upstream pair has no front-slope normalization to anchor the seed.
    pub fn experiment(&self, eps: f64) -> Result<ExperimentSpec> {
        let GasSpec::Normalized { lambda } = self.gas else {
            return Err(Error::Config(
                "gas.lambda: the nonlinear mode requires the normalized family".into(),
            ));
        };
        Ok(ExperimentSpec {
            gamma: self.gamma,
            lambda,
            eps,
            grid: self.grid(),
            ramp_time: self.ramp_time,
            center1: self.pert_center1,
            width1: self.pert_width1,
            width3: self.pert_width3,
            width2: self.pert_width2,
            tol_fix: self.tol_fix,
            m_max: self.m_max,
            wall: self.wall.clone(),
        })
    }

    /// The fully-resolved flat form, defaults filled in, keys sorted: the
    /// provenance record written next to every report.
    pub fn resolved(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("run.name".into(), self.name.clone()),
            ("run.mode".into(), self.mode.to_string()),
            ("run.seed".into(), self.seed.to_string()),
            ("run.jobs".into(), self.jobs.to_string()),
            ("gas.gamma".into(), fmt_f(self.gamma)),
        ];
        match self.gas {
            GasSpec::Normalized { lambda } => rows.push(("gas.lambda".into(), fmt_f(lambda))),
            GasSpec::Upstream { rho_minus, q_minus } => {
                rows.push(("gas.rho_minus".into(), fmt_f(rho_minus)));
                rows.push(("gas.q_minus".into(), fmt_f(q_minus)));
            }
        }
        match &self.wall.kind {
            WallKind::Flat => rows.push(("wall.kind".into(), "flat".into())),
            WallKind::EvenBump { amplitude, center1, width1, width2 }
            | WallKind::Ridge { amplitude, center1, width1, width2 } => {
                let kind = if matches!(self.wall.kind, WallKind::EvenBump { .. }) {
                    "even_bump"
                } else {
                    "ridge"
                };
                rows.push(("wall.kind".into(), kind.into()));
                rows.push(("wall.amplitude".into(), fmt_f(*amplitude)));
                rows.push(("wall.center1".into(), fmt_f(*center1)));
                rows.push(("wall.width1".into(), fmt_f(*width1)));
                rows.push(("wall.width2".into(), fmt_f(*width2)));
            }
            WallKind::Profile { .. } => rows.push(("wall.kind".into(), "profile".into())),
        }
        rows.extend([
            ("perturbation.eps".into(), fmt_f(self.eps)),
            ("perturbation.ramp_time".into(), fmt_f(self.ramp_time)),
            ("perturbation.center1".into(), fmt_f(self.pert_center1)),
            ("perturbation.width1".into(), fmt_f(self.pert_width1)),
            ("perturbation.width3".into(), fmt_f(self.pert_width3)),
            (
                "perturbation.width2".into(),
                self.pert_width2.map_or("none".into(), fmt_f),
            ),
            ("grid.l1".into(), fmt_f(self.grid_l[0])),
            ("grid.l2".into(), fmt_f(self.grid_l[1])),
            ("grid.l3".into(), fmt_f(self.grid_l[2])),
            ("grid.n1".into(), self.grid_n[0].to_string()),
            ("grid.n2".into(), self.grid_n[1].to_string()),
            ("grid.n3".into(), self.grid_n[2].to_string()),
            ("grid.dt".into(), fmt_f(self.dt)),
            ("grid.t_final".into(), fmt_f(self.t_final)),
            ("grid.cfl_safety".into(), fmt_f(self.cfl_safety)),
            ("energy.eta0".into(), fmt_f(self.eta0)),
            ("iteration.m_max".into(), self.m_max.to_string()),
            ("iteration.tol_fix".into(), fmt_f(self.tol_fix)),
        ]);
        rows.sort();
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}
