//! Run configuration: a flat `key = value` file with optional `[section]`
//! headers. Sections only group keys; every key must be unique.
//!
//! ```text
//! [problem]
//! system = wave
//! kind = switched
//! delta = 0.6
//!
//! [grid]
//! N = 256
//! horizon = 200
//!
//! [run]
//! tasks = monodromy, spectrum, rates
//! initial = random
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{DampingRegion, Rect, RegionKind};
use crate::observability::System;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Task {
    Simulate,
    Monodromy,
    Spectrum,
    Observability,
    Rates,
    Gcc,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Simulate,
        Task::Monodromy,
        Task::Spectrum,
        Task::Observability,
        Task::Rates,
        Task::Gcc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Monodromy => "monodromy",
            Task::Spectrum => "spectrum",
            Task::Observability => "observability",
            Task::Rates => "rates",
            Task::Gcc => "gcc",
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown task '{s}'")))
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the initial state comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `random`, `ones` (transport) or `mode1` (wave).
    Builtin(String),
    /// Transport: one two-column table (s, x). Wave: two tables (s, u) on
    /// the N+1 nodes and (s, v) on the N cells.
    File(Vec<PathBuf>),
    /// `name(key=value, ...)`: `polynomial(gamma, margin)`,
    /// `superpoly(eps)` and `slow(levels)` for transport.
    Constructor { name: String, params: BTreeMap<String, f64> },
}

pub const BUILTINS: [&str; 3] = ["random", "ones", "mode1"];
pub const CONSTRUCTORS: [&str; 3] = ["polynomial", "superpoly", "slow"];

impl InitialData {
    pub fn describe(&self) -> String {
        match self {
            InitialData::Builtin(b) => b.clone(),
            InitialData::File(p) => {
                let names: Vec<String> = p.iter().map(|p| p.display().to_string()).collect();
                format!("file:{}", names.join(","))
            }
            InitialData::Constructor { name, params } => {
                let ps: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                format!("{name}({})", ps.join(", "))
            }
        }
    }

    pub fn param(&self, key: &str, default: f64) -> f64 {
        match self {
            InitialData::Constructor { params, .. } => params.get(key).copied().unwrap_or(default),
            _ => default,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub system: System,
    pub region: DampingRegion,
    pub n: usize,
    /// Time panels per period for the transport Gramian.
    pub n_t: usize,
    /// Periods.
    pub horizon: u64,
    /// Extra sampling every `stride` periods (0: log-spaced only).
    pub stride: u64,
    /// Requested tasks in dependency order, without duplicates.
    pub tasks: Vec<Task>,
    pub initial: InitialData,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

pub const N_MIN: usize = 1 << 6;
pub const N_MAX: usize = 1 << 14;
/// Dense wave monodromies are 2N × 2N.
pub const WAVE_DENSE_N_MAX: usize = 2048;

const KEYS: [&str; 14] = [
    "system",
    "kind",
    "delta",
    "amplitude",
    "rectangles",
    "period",
    "n",
    "n_t",
    "horizon",
    "stride",
    "tasks",
    "initial",
    "out",
    "seed",
];

/// Raw key/value pairs, lower-cased keys.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = strip_comment(line).trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') || line.len() < 3 {
                    return Err(Error::Config(format!("line {}: bad section header '{line}'", lineno + 1)));
                }
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value", lineno + 1)));
            };
            let key = k.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key '{}'", lineno + 1, k.trim())));
            }
            let value = unquote(v.trim()).to_string();
            if entries.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        Ok(RawConfig { entries })
    }

    /// Command-line overrides win over file values.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_ascii_lowercase(), value.into());
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn num<T: FromStr>(&self, key: &str, default: Option<T>) -> Result<T> {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'"))),
            None => default.ok_or_else(|| Error::Config(format!("missing required key '{key}'"))),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .unwrap_or(v)
}

/// `[(s0,s1,t0,t1), ...]`.
pub fn parse_rectangles(v: &str) -> Result<Vec<Rect>> {
    let bad = || Error::Config(format!("rectangles: expected [(s0,s1,t0,t1),...], got '{v}'"));
    let inner = v.trim().strip_prefix('[').and_then(|x| x.strip_suffix(']')).ok_or_else(bad)?;
    let mut rects = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let open = rest.strip_prefix('(').ok_or_else(bad)?;
        let close = open.find(')').ok_or_else(bad)?;
        let nums: Vec<f64> = open[..close]
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if nums.len() != 4 {
            return Err(bad());
        }
        rects.push(Rect::new(nums[0], nums[1], nums[2], nums[3]));
        rest = open[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
        } else if !rest.is_empty() {
            return Err(bad());
        }
    }
    Ok(rects)
}

/// `name` or `name(k=v, ...)` or `file:path[,path]`.
pub fn parse_initial(v: &str, base: &Path) -> Result<InitialData> {
    let v = v.trim();
    if let Some(paths) = v.strip_prefix("file:") {
        let mut out = Vec::new();
        for p in paths.split(',') {
            let p = PathBuf::from(p.trim());
            let p = if p.is_absolute() { p } else { base.join(p) };
            if !p.is_file() {
                return Err(Error::Config(format!("initial data file {} not found", p.display())));
            }
            out.push(p);
        }
        return Ok(InitialData::File(out));
    }
    if let Some(open) = v.find('(') {
        let name = v[..open].trim().to_string();
        let body = v[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| Error::Config(format!("initial: unbalanced parentheses in '{v}'")))?;
        if !CONSTRUCTORS.contains(&name.as_str()) {
            return Err(Error::Config(format!("initial: unknown constructor '{name}'")));
        }
        let mut params = BTreeMap::new();
        for kv in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, x) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("initial: expected key=value, got '{kv}'")))?;
            let x: f64 = x
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("initial: cannot parse '{kv}'")))?;
            params.insert(k.trim().to_string(), x);
        }
        return Ok(InitialData::Constructor { name, params });
    }
    if BUILTINS.contains(&v) {
        return Ok(InitialData::Builtin(v.to_string()));
    }
    if CONSTRUCTORS.contains(&v) {
        return Ok(InitialData::Constructor {
            name: v.to_string(),
            params: BTreeMap::new(),
        });
    }
    Err(Error::Config(format!("initial: unknown data '{v}'")))
}

pub fn parse_tasks(v: &str) -> Result<Vec<Task>> {
    let mut tasks: Vec<Task> = v
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(Task::from_str)
        .collect::<Result<_>>()?;
    tasks.sort();
    tasks.dedup();
    if tasks.is_empty() {
        return Err(Error::Config("task list is empty".into()));
    }
    Ok(tasks)
}

fn build_region(raw: &RawConfig, system: System) -> Result<DampingRegion> {
    let tau = system.period();
    let period: f64 = raw.num("period", Some(tau))?;
    if (period - tau).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "period {period} is inconsistent with the {} system (period {tau})",
            system.name()
        )));
    }
    let amplitude: f64 = raw.num("amplitude", Some(1.0))?;
    let kind = raw
        .get("kind")
        .ok_or_else(|| Error::Config("missing required key 'kind'".into()))?;
    let delta = || raw.num::<f64>("delta", None);
    let kind = match kind {
        "diamond" => RegionKind::Diamond(delta()?),
        "corner_square" => RegionKind::CornerSquare(delta()?),
        "ray_band" => RegionKind::RayBand(delta()?),
        "switched" => RegionKind::Switched(delta()?),
        "rectangles" => RegionKind::RectangleUnion(parse_rectangles(
            raw.get("rectangles")
                .ok_or_else(|| Error::Config("kind = rectangles needs a 'rectangles' key".into()))?,
        )?),
        "empty" => RegionKind::RectangleUnion(Vec::new()),
        other => return Err(Error::Config(format!("unknown region kind '{other}'"))),
    };
    DampingRegion::new(kind, period, amplitude).map_err(as_config)
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let raw = RawConfig::parse(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_raw(&raw, base)
    }

    /// Validates every key; all failures are `Error::Config`.
    pub fn from_raw(raw: &RawConfig, base: &Path) -> Result<Self> {
        let system: System = raw
            .get("system")
            .ok_or_else(|| Error::Config("missing required key 'system'".into()))?
            .parse()?;
        let region = build_region(raw, system)?;
        let n: usize = raw.num("n", Some(256))?;
        if !n.is_power_of_two() || !(N_MIN..=N_MAX).contains(&n) {
            return Err(Error::Config(format!(
                "N must be a power of two in [{N_MIN}, {N_MAX}], got {n}"
            )));
        }
        let n_t: usize = raw.num("n_t", Some(64))?;
        if n_t == 0 {
            return Err(Error::Config("N_t must be positive".into()));
        }
        let horizon: u64 = raw.num("horizon", Some(1000))?;
        if horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        let stride: u64 = raw.num("stride", Some(0))?;
        let tasks = parse_tasks(raw.get("tasks").unwrap_or(""))?;
        let initial = parse_initial(raw.get("initial").unwrap_or("random"), base)?;
        let seed: u64 = raw.num("seed", Some(0))?;
        let out = raw.get("out").map(|p| {
            let p = PathBuf::from(p);
            if p.is_absolute() { p } else { base.join(p) }
        });
        let cfg = RunConfig {
            system,
            region,
            n,
            n_t,
            horizon,
            stride,
            tasks,
            initial,
            out,
            seed,
        };
        cfg.check_compatibility()?;
        Ok(cfg)
    }

    fn check_compatibility(&self) -> Result<()> {
        let dense = self.tasks.iter().any(|t| {
            matches!(t, Task::Monodromy | Task::Spectrum | Task::Rates | Task::Observability)
        });
        if self.system == System::Wave && dense && self.n > WAVE_DENSE_N_MAX {
            return Err(Error::Config(format!(
                "wave monodromy/spectrum/rates/observability assemble dense 2N x 2N matrices; N must be at most {WAVE_DENSE_N_MAX}"
            )));
        }
        match (&self.initial, self.system) {
            (InitialData::Builtin(b), System::Transport) if b == "mode1" => {
                Err(Error::Config("initial = mode1 is a wave state".into()))
            }
            (InitialData::Builtin(b), System::Wave) if b == "ones" => {
                Err(Error::Config("initial = ones is a transport state".into()))
            }
            (InitialData::Constructor { name, .. }, System::Wave) => Err(Error::Config(format!(
                "initial constructor '{name}' is only defined for transport"
            ))),
            (InitialData::File(p), System::Transport) if p.len() != 1 => {
                Err(Error::Config("transport initial data takes one file".into()))
            }
            (InitialData::File(p), System::Wave) if p.len() != 2 => {
                Err(Error::Config("wave initial data takes two files: u table, v table".into()))
            }
            _ => Ok(()),
        }
    }

    /// Tasks actually executed: monodromy is added when spectrum or rates
    /// need it.
    pub fn effective_tasks(&self) -> Vec<Task> {
        let mut t = self.tasks.clone();
        let needs_mono = t.iter().any(|x| matches!(x, Task::Spectrum | Task::Rates));
        if needs_mono && !t.contains(&Task::Monodromy) {
            t.push(Task::Monodromy);
            t.sort();
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Result<RunConfig> {
        RunConfig::from_raw(&RawConfig::parse(text)?, Path::new("."))
    }

    #[test]
    fn parses_a_full_config() {
        let c = cfg("# demo\n[problem]\nsystem = transport\nkind = corner_square\ndelta = 0.5\n\
                     [grid]\nN = 128\nhorizon = 50\n[run]\ntasks = rates, monodromy,rates\n\
                     initial = polynomial(gamma=0.5, margin=0.1)\nseed=3\n")
            .unwrap();
        assert_eq!(c.n, 128);
        assert_eq!(c.tasks, vec![Task::Monodromy, Task::Rates]);
        assert_eq!(c.initial.param("gamma", 0.0), 0.5);
        assert_eq!(c.seed, 3);
        assert_eq!(c.region.period(), 1.0);
    }

    #[test]
    fn rectangles_and_period() {
        let r = parse_rectangles("[(0.1, 0.2, 0, 1), (0.5,0.6,1,2)]").unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].t1, 2.0);
        assert!(parse_rectangles("[(0.1,0.2,0)]").is_err());
        let c = cfg("system=wave\nkind=rectangles\nrectangles=[(0.1,0.2,0,2)]\ntasks=gcc\n").unwrap();
        assert_eq!(c.region.period(), 2.0);
        assert!(cfg("system=wave\nkind=switched\ndelta=0.5\nperiod=1\ntasks=gcc\n").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let base = "system=transport\nkind=diamond\ndelta=0.25\n";
        assert!(matches!(cfg(base), Err(Error::Config(_))));
        assert!(cfg(&format!("{base}tasks=\n")).is_err());
        assert!(cfg(&format!("{base}tasks=gcc\nN=100\n")).is_err());
        assert!(cfg(&format!("{base}tasks=gcc\nN=32\n")).is_err());
        assert!(cfg(&format!("{base}tasks=fly\n")).is_err());
        assert!(cfg(&format!("{base}tasks=gcc\ncolour=red\n")).is_err());
        assert!(cfg(&format!("{base}tasks=gcc\ninitial=file:/nonexistent/x.csv\n")).is_err());
        assert!(cfg("system=transport\nkind=diamond\ndelta=0.9\ntasks=gcc\n").is_err());
        assert!(cfg("system=wave\nkind=switched\ndelta=0.5\ntasks=spectrum\nN=4096\n").is_err());
    }

    #[test]
    fn spectrum_pulls_in_monodromy() {
        let c = cfg("system=wave\nkind=switched\ndelta=0.6\ntasks=gcc spectrum\n").unwrap();
        assert_eq!(c.effective_tasks(), vec![Task::Monodromy, Task::Spectrum, Task::Gcc]);
    }
}
