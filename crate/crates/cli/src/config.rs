//! Flat `key = value` configuration, layered as
//! defaults < config file < `GUTZ_*` environment < command-line flags.
//!
//! File syntax: one `key = value` per line, `#` starts a comment, blank
//! lines are ignored. Keys are the long flag names (`g-min`, `J`, ...).
//! The environment variable for a key is `GUTZ_` plus the key upper-cased
//! with `-` replaced by `_` (`GUTZ_G_MIN`, `GUTZ_J`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use gutz_core::gutzwiller::{default_g_grid, g_grid};
use gutz_core::hadamard::BiasModel;
use gutz_core::mc::BackendKind;
use gutz_core::Lattice;

use crate::error::CliError;

pub const KEYS: [&str; 19] = [
    "lattice", "J", "U", "g", "g-min", "g-max", "g-step", "nmc", "bins", "burnin", "chains", "seed", "backend",
    "shots", "reps", "bias", "methods", "out", "threads",
];

pub fn env_var(key: &str) -> String {
    format!("GUTZ_{}", key.to_uppercase().replace('-', "_"))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    File { path: String, line: usize },
    Env(String),
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::File { path, line } => write!(f, "{path}:{line}"),
            Source::Env(v) => write!(f, "environment variable {v}"),
            Source::Flag => f.write_str("command line"),
        }
    }
}

/// Raw string settings with the layer each one came from.
#[derive(Clone, Debug, Default)]
pub struct Layers {
    values: BTreeMap<String, (String, Source)>,
}

impl Layers {
    pub fn load(file: Option<&Path>, env: impl Fn(&str) -> Option<String>, flags: &[(&str, Option<String>)]) -> Result<Self, CliError> {
        let mut l = Layers::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
            l.read_file(&text, &path.display().to_string())?;
        }
        for key in KEYS {
            let var = env_var(key);
            if let Some(v) = env(&var) {
                l.values.insert(key.to_string(), (v, Source::Env(var)));
            }
        }
        for (key, v) in flags {
            if let Some(v) = v {
                l.values.insert(key.to_string(), (v.clone(), Source::Flag));
            }
        }
        Ok(l)
    }

    fn read_file(&mut self, text: &str, path: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let at = Source::File { path: path.to_string(), line: i + 1 };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{at}: expected `key = value`, found {line:?}")))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(CliError::Config(format!("{at}: unknown key {k:?}")));
            }
            self.values.insert(k.to_string(), (v.trim().to_string(), at));
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&(String, Source)> {
        self.values.get(key)
    }

    /// Resolved `key -> value` pairs, for the metadata echo.
    pub fn explicit(&self) -> BTreeMap<String, String> {
        self.values.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect()
    }

    fn parse<T>(&self, key: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some((v, src)) => f(v).map(Some).map_err(|e| CliError::Config(format!("{src}: invalid value {v:?} for {key}: {e}"))),
        }
    }
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| e.to_string())
}

fn list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Err("empty list".into());
    }
    s.split(',').map(num::<f64>).collect()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Method {
    Mc,
    FullSum,
    ExactGutzwiller,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::FullSum => "fullsum",
            Method::ExactGutzwiller => "exact-gutzwiller",
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        match s.trim() {
            "mc" => Ok(Method::Mc),
            "fullsum" => Ok(Method::FullSum),
            "exact-gutzwiller" => Ok(Method::ExactGutzwiller),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub lattice: Option<Lattice>,
    pub j: Option<Vec<f64>>,
    pub us: Vec<f64>,
    pub g_grid: Vec<f64>,
    pub nmc: usize,
    pub bins: usize,
    pub burnin: Option<usize>,
    pub chains: usize,
    pub seed: u64,
    pub backend: BackendKind,
    pub shots: u64,
    pub reps: usize,
    pub bias: Option<BiasModel>,
    pub methods: Option<Vec<Method>>,
    pub out: Option<String>,
    pub threads: Option<usize>,
    /// Every explicitly set key, echoed into metadata.
    pub echo: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn resolve(l: &Layers) -> Result<Self, CliError> {
        let lattice = l.parse("lattice", |s| Lattice::parse(s.trim()).map_err(|e| e.to_string()))?;
        let j = l.parse("J", list)?;
        let us = l.parse("U", list)?.unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0]);
        let g_grid = match l.parse("g", list)? {
            Some(g) => g,
            None => {
                let (lo, hi, step) = (l.parse("g-min", num)?, l.parse("g-max", num)?, l.parse("g-step", num)?);
                if lo.is_none() && hi.is_none() && step.is_none() {
                    default_g_grid()
                } else {
                    let (lo, hi, step) = (lo.unwrap_or(0.0), hi.unwrap_or(2.0), step.unwrap_or(0.1));
                    if hi < lo {
                        return Err(CliError::Config(format!("empty g grid: g-max {hi} < g-min {lo}")));
                    }
                    g_grid(lo, hi, step).map_err(|e| CliError::Config(format!("g grid: {e}")))?
                }
            }
        };
        if g_grid.is_empty() {
            return Err(CliError::Config("empty g grid".into()));
        }
        if let Some(g) = g_grid.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(CliError::Config(format!("g must be finite and nonnegative, got {g}")));
        }
        let bias = l.parse("bias", |s| {
            let v = list(s)?;
            match v.as_slice() {
                [scale, phase] => BiasModel::new(*scale, *phase).map_err(|e| e.to_string()),
                _ => Err("expected `scale,phase`".into()),
            }
        })?;
        let positive = |s: &str| num::<usize>(s).and_then(|n| if n == 0 { Err("must be positive".into()) } else { Ok(n) });
        Ok(RunConfig {
            lattice,
            j,
            us,
            g_grid,
            nmc: l.parse("nmc", positive)?.unwrap_or(20_000),
            bins: l.parse("bins", positive)?.unwrap_or(20),
            burnin: l.parse("burnin", num)?,
            chains: l.parse("chains", positive)?.unwrap_or(1),
            seed: l.parse("seed", num)?.unwrap_or(1),
            backend: l.parse("backend", |s| s.trim().parse::<BackendKind>().map_err(|e| e.to_string()))?.unwrap_or(BackendKind::Determinant),
            shots: l.parse("shots", num::<u64>)?.unwrap_or(8192),
            reps: l.parse("reps", positive)?.unwrap_or(16),
            bias,
            methods: l.parse("methods", |s| s.split(',').map(Method::parse).collect())?,
            out: l.get("out").map(|(v, _)| v.clone()),
            threads: l.parse("threads", positive)?,
            echo: l.explicit(),
        })
    }

    pub fn hopping(&self) -> Result<f64, CliError> {
        match self.j.as_deref() {
            None => Ok(1.0),
            Some([j]) => Ok(*j),
            Some(_) => Err(CliError::Config("J takes a single value for this command".into())),
        }
    }

    pub fn lattice_or(&self, default: &str) -> Lattice {
        self.lattice.clone().unwrap_or_else(|| Lattice::parse(default).expect("valid default lattice"))
    }

    /// `(g, U)` points in grid order with duplicates removed.
    pub fn points(&self) -> Vec<(f64, Vec<f64>)> {
        let mut seen: Vec<(u64, u64)> = Vec::new();
        let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
        for &g in &self.g_grid {
            let mut us = Vec::new();
            for &u in &self.us {
                let key = (g.to_bits(), u.to_bits());
                if seen.contains(&key) {
                    eprintln!("warning: duplicate point g={g}, U={u} dropped");
                    continue;
                }
                seen.push(key);
                us.push(u);
            }
            if !us.is_empty() {
                out.push((g, us));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layers(file: &str, env: &[(&str, &str)], flags: &[(&str, Option<String>)]) -> Result<Layers, CliError> {
        let mut l = Layers::default();
        l.read_file(file, "run.cfg")?;
        for key in KEYS {
            if let Some((_, v)) = env.iter().find(|(k, _)| *k == env_var(key)) {
                l.values.insert(key.to_string(), (v.to_string(), Source::Env(env_var(key))));
            }
        }
        for (k, v) in flags {
            if let Some(v) = v {
                l.values.insert(k.to_string(), (v.clone(), Source::Flag));
            }
        }
        Ok(l)
    }

    #[test]
    fn precedence() {
        let l = layers("seed = 3\nnmc = 400\nbins=10 # trailing\n", &[("GUTZ_SEED", "4"), ("GUTZ_NMC", "500")], &[("nmc", Some("600".into()))]).unwrap();
        let c = RunConfig::resolve(&l).unwrap();
        assert_eq!((c.seed, c.nmc, c.bins), (4, 600, 10));
    }

    #[test]
    fn errors_carry_location() {
        let e = layers("seed = 1\n\nbogus line\n", &[], &[]).unwrap_err();
        assert!(e.to_string().contains("run.cfg:3"), "{e}");
        let e = layers("colour = red\n", &[], &[]).unwrap_err();
        assert!(e.to_string().contains("unknown key"));
        let l = layers("\nnmc = many\n", &[], &[]).unwrap();
        let e = RunConfig::resolve(&l).unwrap_err();
        assert!(e.to_string().contains("run.cfg:2") && e.to_string().contains("nmc"), "{e}");
    }

    #[test]
    fn grids_and_dedup() {
        let l = layers("g-min = 0.5\ng-max = 0.2\n", &[], &[]).unwrap();
        assert!(RunConfig::resolve(&l).is_err());
        let l = layers("g = 0.1,0.2,0.1\nU = 2,2,3\n", &[], &[]).unwrap();
        let c = RunConfig::resolve(&l).unwrap();
        assert_eq!(c.points(), vec![(0.1, vec![2.0, 3.0]), (0.2, vec![2.0, 3.0])]);
        let l = layers("bias = 0.85\n", &[], &[]).unwrap();
        assert!(RunConfig::resolve(&l).is_err());
    }
}
