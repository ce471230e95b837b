use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::circuit::{generate_deterministic_circuit, generate_random_circuit, parse_circuit, Circuit};
use crate::error::{Error, Result};

use super::Method;

/// Where a benchmark circuit comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CircuitSource {
    File(PathBuf),
    /// `gen:n:depth:fanout:seed`
    Random { num_vars: usize, depth: usize, fanout: usize, seed: u64 },
    /// `det:n:depth:seed`
    Deterministic { num_vars: usize, depth: usize, seed: u64 },
}

impl CircuitSource {
    /// Dataset identifier used in benchmark records.
    pub fn id(&self) -> String {
        match self {
            CircuitSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            other => other.to_string(),
        }
    }

    pub fn load(&self) -> Result<Circuit> {
        match self {
            CircuitSource::File(p) => {
                let text = std::fs::read_to_string(p)?;
                Ok(parse_circuit(&text)?.circuit)
            }
            CircuitSource::Random { num_vars, depth, fanout, seed } => {
                generate_random_circuit(*num_vars, *depth, *fanout, *seed)
            }
            CircuitSource::Deterministic { num_vars, depth, seed } => {
                generate_deterministic_circuit(*num_vars, *depth, *seed)
            }
        }
    }

    fn resolve(self, base: &Path) -> Self {
        match self {
            CircuitSource::File(p) if p.is_relative() => CircuitSource::File(base.join(p)),
            other => other,
        }
    }
}

impl fmt::Display for CircuitSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircuitSource::File(p) => write!(f, "{}", p.display()),
            CircuitSource::Random { num_vars, depth, fanout, seed } => {
                write!(f, "gen:{num_vars}:{depth}:{fanout}:{seed}")
            }
            CircuitSource::Deterministic { num_vars, depth, seed } => write!(f, "det:{num_vars}:{depth}:{seed}"),
        }
    }
}

impl FromStr for CircuitSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed generator spec '{s}'"));
        let num = |x: &str| x.parse::<u64>().map_err(|_| bad());
        if let Some(rest) = s.strip_prefix("gen:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let [n, d, f, seed] = parts[..] else { return Err(bad()) };
            Ok(CircuitSource::Random {
                num_vars: num(n)? as usize,
                depth: num(d)? as usize,
                fanout: num(f)? as usize,
                seed: num(seed)?,
            })
        } else if let Some(rest) = s.strip_prefix("det:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let [n, d, seed] = parts[..] else { return Err(bad()) };
            Ok(CircuitSource::Deterministic {
                num_vars: num(n)? as usize,
                depth: num(d)? as usize,
                seed: num(seed)?,
            })
        } else if s.is_empty() {
            Err(Error::Config("empty circuit entry".into()))
        } else {
            Ok(CircuitSource::File(PathBuf::from(s)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvidenceMode {
    /// Project one unconditional joint sample onto the evidence variables.
    Model,
    /// Fair coin flips, redrawn while `p(e) = 0`.
    Uniform,
}

impl FromStr for EvidenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(EvidenceMode::Model),
            "uniform" => Ok(EvidenceMode::Uniform),
            _ => Err(Error::Config(format!("unknown evidence mode '{s}'"))),
        }
    }
}

impl fmt::Display for EvidenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvidenceMode::Model => "model",
            EvidenceMode::Uniform => "uniform",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub circuits: Vec<CircuitSource>,
    pub query_proportions: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub epsilon: f64,
    pub delta: f64,
    pub sample_cap: u64,
    pub batch_size: usize,
    pub exploit_period: u64,
    pub radius: usize,
    pub seed: u64,
    pub evidence_mode: EvidenceMode,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            circuits: Vec::new(),
            query_proportions: vec![0.10, 0.25, 0.50],
            trials: 10,
            methods: Method::DEFAULT.to_vec(),
            epsilon: 0.01,
            delta: 0.01,
            sample_cap: 1_000_000,
            batch_size: 5000,
            exploit_period: 100,
            radius: 1,
            seed: 0,
            evidence_mode: EvidenceMode::Model,
        }
    }
}

fn list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, T::Err> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

impl BenchConfig {
    /// Parses `key = value` lines; `#` starts a comment. Lists are comma-separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Config(format!("line {}: invalid {key} '{value}': {what}", i + 1));
            match key {
                "circuits" => cfg.circuits = list(value)?,
                "query_proportions" => cfg.query_proportions = list(value).map_err(|_| bad("not a number list"))?,
                "trials" => cfg.trials = value.parse().map_err(|_| bad("not an integer"))?,
                "methods" => cfg.methods = list(value).map_err(|e: Error| bad(&e.to_string()))?,
                "epsilon" => cfg.epsilon = value.parse().map_err(|_| bad("not a number"))?,
                "delta" => cfg.delta = value.parse().map_err(|_| bad("not a number"))?,
                "sample_cap" => cfg.sample_cap = parse_count(value).ok_or_else(|| bad("not an integer"))?,
                "batch_size" => cfg.batch_size = parse_count(value).ok_or_else(|| bad("not an integer"))? as usize,
                "exploit_period" => cfg.exploit_period = value.parse().map_err(|_| bad("not an integer"))?,
                "radius" => cfg.radius = value.parse().map_err(|_| bad("not an integer"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("not an integer"))?,
                "evidence_mode" => cfg.evidence_mode = value.parse()?,
                _ => return Err(Error::Config(format!("line {}: unknown key '{key}'", i + 1))),
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads a config file; relative circuit paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.circuits = cfg.circuits.into_iter().map(|c| c.resolve(base)).collect();
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.circuits.is_empty() {
            return fail("no circuits configured".into());
        }
        if let Some(p) = self.query_proportions.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return fail(format!("query proportion {p} outside (0, 1)"));
        }
        if self.query_proportions.is_empty() {
            return fail("no query proportions configured".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return fail("no methods configured".into());
        }
        for (name, x) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(x > 0.0 && x < 1.0) {
                return fail(format!("{name} must lie in (0, 1), got {x}"));
            }
        }
        if self.sample_cap == 0 || self.batch_size == 0 || self.exploit_period == 0 {
            return fail("sample_cap, batch_size and exploit_period must be at least 1".into());
        }
        Ok(())
    }
}

/// Integer that may be written in scientific notation (`1e6`).
fn parse_count(s: &str) -> Option<u64> {
    if let Ok(v) = s.parse::<u64>() {
        return Some(v);
    }
    let f: f64 = s.parse().ok()?;
    (f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64).then_some(f as u64)
}
