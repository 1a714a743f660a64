//! Flat `key = value` run settings shared by the config file and the CLI.
//!
//! Keys use the long CLI flag spelling without dashes (`lat-c2c-remote`,
//! `cores-per-node`, ...); underscores are accepted in place of hyphens.
//! Later assignments win, so applying the file first and the command-line
//! flags second gives flag > file > built-in defaults.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::model::{Count, Cycles, LatencyConfig, SystemConfig};
use crate::sim::Policy;
use crate::workload::{Workload, WorkloadSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub threads: Option<usize>,
    pub nodes: usize,
    pub cores_per_node: usize,
    pub quanta: usize,
    pub workload: Option<Workload>,
    pub phases: Option<usize>,
    pub c2c_intra: Count,
    pub c2c_inter: Count,
    pub dram_home: Count,
    pub dram_other: Count,
    pub seed: u64,
    pub jitter_pct: u32,
    pub pattern_offset: usize,
    pub lat_c2c_local: Cycles,
    /// One value for `run`; the sweep accepts several.
    pub lat_c2c_remote: Vec<Cycles>,
    pub lat_dram_local: Cycles,
    pub lat_dram_remote: Vec<Cycles>,
    pub affinity_lines: u64,
    pub affinity_line_latency: Cycles,
    /// Empty leaves the choice to the command.
    pub policies: Vec<Policy>,
    pub affinity: bool,
    pub trace: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sys = SystemConfig::default();
        let lat = LatencyConfig::default();
        RunConfig {
            threads: None,
            nodes: sys.n_nodes(),
            cores_per_node: sys.cores_per_node(),
            quanta: sys.n_quanta(),
            workload: None,
            phases: None,
            c2c_intra: WorkloadSpec::DEFAULT_C2C_INTRA,
            c2c_inter: WorkloadSpec::DEFAULT_C2C_INTER,
            dram_home: WorkloadSpec::DEFAULT_DRAM_HOME,
            dram_other: WorkloadSpec::DEFAULT_DRAM_OTHER,
            seed: 0,
            jitter_pct: 0,
            pattern_offset: WorkloadSpec::DEFAULT_PATTERN_OFFSET,
            lat_c2c_local: lat.c2c_local,
            lat_c2c_remote: vec![lat.c2c_remote],
            lat_dram_local: lat.dram_local,
            lat_dram_remote: vec![lat.dram_remote],
            affinity_lines: lat.affinity_lines,
            affinity_line_latency: lat.affinity_line_latency,
            policies: Vec::new(),
            affinity: false,
            trace: None,
            out: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("`{key}`: `{value}` is not a valid number")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let v = value.split(',').map(|x| num(key, x)).collect::<Result<Vec<T>>>()?;
    if v.is_empty() {
        return Err(Error::InvalidConfig(format!("`{key}` is empty")));
    }
    Ok(v)
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        v => Err(Error::InvalidConfig(format!("`{key}`: `{v}` is not on/off"))),
    }
}

impl RunConfig {
    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().replace('_', "-");
        let k = k.as_str();
        match k {
            "threads" => self.threads = Some(num(k, value)?),
            "nodes" => self.nodes = num(k, value)?,
            "cores-per-node" => self.cores_per_node = num(k, value)?,
            "quanta" => self.quanta = num(k, value)?,
            "workload" => self.workload = Some(value.trim().parse()?),
            "phases" => self.phases = Some(num(k, value)?),
            "c2c-intra" => self.c2c_intra = num(k, value)?,
            "c2c-inter" => self.c2c_inter = num(k, value)?,
            "dram-home" => self.dram_home = num(k, value)?,
            "dram-other" => self.dram_other = num(k, value)?,
            "seed" => self.seed = num(k, value)?,
            "jitter-pct" => self.jitter_pct = num(k, value)?,
            "pattern-offset" => self.pattern_offset = num(k, value)?,
            "lat-c2c-local" => self.lat_c2c_local = num(k, value)?,
            "lat-c2c-remote" => self.lat_c2c_remote = list(k, value)?,
            "lat-dram-local" => self.lat_dram_local = num(k, value)?,
            "lat-dram-remote" => self.lat_dram_remote = list(k, value)?,
            "affinity-lines" => self.affinity_lines = num(k, value)?,
            "affinity-line-latency" => self.affinity_line_latency = num(k, value)?,
            "policy" => self.policies = value.split(',').map(str::parse).collect::<Result<Vec<Policy>>>()?,
            "affinity" => self.affinity = flag(k, value)?,
            "trace" => self.trace = Some(PathBuf::from(value.trim())),
            "out" => self.out = Some(PathBuf::from(value.trim())),
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a config file: one `key = value` per line, `#` comments and
    /// blank lines ignored.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(i + 1, format!("expected `key = value`, found `{line}`")))?;
            self.set(key, value).map_err(|e| Error::format(i + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let sys = SystemConfig::balanced(self.nodes, self.cores_per_node, self.quanta)?;
        if let Some(n) = self.threads {
            if n != sys.n_threads() {
                return Err(Error::InvalidConfig(format!(
                    "threads ({n}) must equal nodes ({}) x cores per node ({})",
                    self.nodes, self.cores_per_node
                )));
            }
        }
        Ok(sys)
    }

    pub fn phases(&self) -> usize {
        self.phases.or(self.workload.map(Workload::phases)).unwrap_or(1)
    }

    pub fn workload_spec(&self) -> Result<WorkloadSpec> {
        let spec = WorkloadSpec {
            config: self.system()?,
            phases: self.phases(),
            c2c_intra: self.c2c_intra,
            c2c_inter: self.c2c_inter,
            dram_home: self.dram_home,
            dram_other: self.dram_other,
            jitter_seed: (self.jitter_pct > 0).then_some(self.seed),
            jitter_pct: self.jitter_pct,
            pattern_offset: self.pattern_offset,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn latency_with(&self, c2c_remote: Cycles, dram_remote: Cycles) -> Result<LatencyConfig> {
        let lat = LatencyConfig {
            c2c_local: self.lat_c2c_local,
            c2c_remote,
            dram_local: self.lat_dram_local,
            dram_remote,
            affinity_lines: self.affinity_lines,
            affinity_line_latency: self.affinity_line_latency,
        };
        lat.validate()?;
        Ok(lat)
    }

    /// The single latency configuration for a `run`.
    pub fn latency(&self) -> Result<LatencyConfig> {
        match (self.lat_c2c_remote.as_slice(), self.lat_dram_remote.as_slice()) {
            ([c], [d]) => self.latency_with(*c, *d),
            _ => Err(Error::InvalidConfig(
                "a single run takes one remote c2c and one remote DRAM latency".into(),
            )),
        }
    }

    /// Latency points for a sweep. Equal-length lists pair positionally;
    /// a single value on either side is broadcast. With `cross`, the full
    /// cross product is taken instead.
    pub fn latency_points(&self, cross: bool) -> Result<Vec<LatencyConfig>> {
        let c = &self.lat_c2c_remote;
        let d = &self.lat_dram_remote;
        if c.is_empty() || d.is_empty() {
            return Err(Error::InvalidConfig("empty latency grid".into()));
        }
        let pairs: Vec<(Cycles, Cycles)> = if cross {
            c.iter().flat_map(|&x| d.iter().map(move |&y| (x, y))).collect()
        } else if c.len() == d.len() {
            c.iter().copied().zip(d.iter().copied()).collect()
        } else if c.len() == 1 {
            d.iter().map(|&y| (c[0], y)).collect()
        } else if d.len() == 1 {
            c.iter().map(|&x| (x, d[0])).collect()
        } else {
            return Err(Error::InvalidConfig(format!(
                "cannot pair {} remote c2c latencies with {} remote DRAM latencies (use a cross grid)",
                c.len(),
                d.len()
            )));
        };
        pairs.into_iter().map(|(x, y)| self.latency_with(x, y)).collect()
    }
}
