//! Phase-structured synthetic workloads.
//!
//! Each phase plants one grouping with one home node per group: threads in
//! the same planted group exchange `c2c_intra` transfers per pair, all other
//! pairs `c2c_inter`; each thread makes `dram_home` accesses to its group's
//! home node and `dram_other` to every other node. Counts do not depend on
//! where threads are placed.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{C2CMatrix, Count, DramMatrix, Grouping, NodeAssignment, Schedule, SystemConfig};

/// The three named synthetic workloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Workload {
    /// One pattern for the whole run.
    Synth1,
    /// Two patterns, each for half the run.
    Synth2,
    /// Four patterns, each for a quarter of the run.
    Synth3,
}

impl Workload {
    pub const ALL: [Workload; 3] = [Workload::Synth1, Workload::Synth2, Workload::Synth3];

    pub fn phases(self) -> usize {
        match self {
            Workload::Synth1 => 1,
            Workload::Synth2 => 2,
            Workload::Synth3 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Workload::Synth1 => "synth1",
            Workload::Synth2 => "synth2",
            Workload::Synth3 => "synth3",
        }
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Workload {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synth1" => Ok(Workload::Synth1),
            "synth2" => Ok(Workload::Synth2),
            "synth3" => Ok(Workload::Synth3),
            _ => Err(Error::InvalidConfig(format!(
                "unknown workload `{s}` (expected synth1, synth2 or synth3)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorkloadSpec {
    pub config: SystemConfig,
    pub phases: usize,
    pub c2c_intra: Count,
    pub c2c_inter: Count,
    pub dram_home: Count,
    pub dram_other: Count,
    /// Seed for multiplicative jitter; `None` disables jitter.
    pub jitter_seed: Option<u64>,
    /// Jitter amplitude in percent, `0..=100`.
    pub jitter_pct: u32,
    /// Phase `w` plants pattern `w + pattern_offset`. Pattern 0 is the
    /// identity layout the baseline already uses, so it is skipped by
    /// default.
    pub pattern_offset: usize,
}

impl WorkloadSpec {
    // Calibrated so the default experiment grid tops out near 17%.
    pub const DEFAULT_C2C_INTRA: Count = 4000;
    pub const DEFAULT_C2C_INTER: Count = 40;
    pub const DEFAULT_DRAM_HOME: Count = 10_000;
    pub const DEFAULT_DRAM_OTHER: Count = 6000;
    pub const DEFAULT_PATTERN_OFFSET: usize = 2;

    pub fn new(config: SystemConfig, phases: usize) -> Self {
        WorkloadSpec {
            config,
            phases,
            c2c_intra: Self::DEFAULT_C2C_INTRA,
            c2c_inter: Self::DEFAULT_C2C_INTER,
            dram_home: Self::DEFAULT_DRAM_HOME,
            dram_other: Self::DEFAULT_DRAM_OTHER,
            jitter_seed: None,
            jitter_pct: 0,
            pattern_offset: Self::DEFAULT_PATTERN_OFFSET,
        }
    }

    /// Default magnitudes on the default 16-thread machine.
    pub fn for_workload(workload: Workload) -> Self {
        Self::new(SystemConfig::default(), workload.phases())
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.phases, 1 | 2 | 4) {
            return Err(Error::InvalidConfig(format!(
                "phases must be 1, 2 or 4, got {}",
                self.phases
            )));
        }
        if !self.config.n_quanta().is_multiple_of(self.phases) {
            return Err(Error::InvalidConfig(format!(
                "phases ({}) must divide quanta ({})",
                self.phases,
                self.config.n_quanta()
            )));
        }
        if self.c2c_intra <= self.c2c_inter {
            return Err(Error::InvalidConfig("c2c_intra must exceed c2c_inter".into()));
        }
        if self.dram_home <= self.dram_other {
            return Err(Error::InvalidConfig("dram_home must exceed dram_other".into()));
        }
        if self.jitter_pct > 100 {
            return Err(Error::InvalidConfig(format!(
                "jitter_pct must be at most 100, got {}",
                self.jitter_pct
            )));
        }
        Ok(())
    }

    /// Pattern index planted during workload phase `phase`.
    pub fn pattern_of_phase(&self, phase: usize) -> usize {
        phase + self.pattern_offset
    }

    /// The schedule that is optimal during the phase containing quantum `q`
    /// (1-based).
    pub fn planted_schedule(&self, q: usize) -> Result<Schedule> {
        let phase = phase_of_quantum(q, self)?;
        let (g, a) = planted_grouping(self.pattern_of_phase(phase), &self.config);
        Ok(Schedule::new(g, a))
    }

    fn jitter(&self) -> Option<(u64, u32)> {
        match self.jitter_seed {
            Some(seed) if self.jitter_pct > 0 => Some((seed, self.jitter_pct)),
            _ => None,
        }
    }
}

/// Quanta-long run of `(c2c, dram)` observations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trace {
    config: SystemConfig,
    quanta: Vec<Quantum>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Quantum {
    pub c2c: C2CMatrix,
    pub dram: DramMatrix,
}

impl Trace {
    pub fn new(config: SystemConfig, quanta: Vec<Quantum>) -> Result<Self> {
        if quanta.len() != config.n_quanta() {
            return Err(Error::DimensionMismatch(format!(
                "trace declares {} quanta but holds {}",
                config.n_quanta(),
                quanta.len()
            )));
        }
        for (q, quantum) in quanta.iter().enumerate() {
            if quantum.c2c.n() != config.n_threads()
                || quantum.dram.n_threads() != config.n_threads()
                || quantum.dram.n_nodes() != config.n_nodes()
            {
                return Err(Error::DimensionMismatch(format!(
                    "quantum {} does not match {config}",
                    q + 1
                )));
            }
        }
        Ok(Trace { config, quanta })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn quanta(&self) -> &[Quantum] {
        &self.quanta
    }
}

/// 0-based phase of the 1-based quantum `q`.
pub fn phase_of_quantum(q: usize, spec: &WorkloadSpec) -> Result<usize> {
    let n_quanta = spec.config.n_quanta();
    if q < 1 || q > n_quanta {
        return Err(Error::OutOfRange {
            what: "quantum",
            value: q,
            expected: format!("1..={n_quanta}"),
        });
    }
    if spec.phases == 0 || !n_quanta.is_multiple_of(spec.phases) {
        return Err(Error::InvalidConfig(format!(
            "phases ({}) must divide quanta ({n_quanta})",
            spec.phases
        )));
    }
    Ok((q - 1) / (n_quanta / spec.phases))
}

/// The identity grouping with every thread id shifted by `pattern` (mod N),
/// and group `g` homed on node `(g + pattern) mod L`.
pub fn planted_grouping(pattern: usize, config: &SystemConfig) -> (Grouping, NodeAssignment) {
    let n = config.n_threads();
    let k = config.cores_per_node();
    let l = config.n_nodes();
    let grouping = Grouping::new(
        (0..l)
            .map(|g| (0..k).map(|m| (g * k + m + pattern) % n).collect())
            .collect(),
    );
    let homes = NodeAssignment::new((0..l).map(|g| (g + pattern) % l).collect());
    (grouping, homes)
}

fn jittered(base: Count, rng: &mut Option<(ChaCha8Rng, f64)>) -> Count {
    match rng {
        None => base,
        Some((rng, amp)) => {
            let factor = 1.0 + rng.random_range(-*amp..=*amp);
            (base as f64 * factor).round().max(0.0) as Count
        }
    }
}

/// Observed counts for the 1-based quantum `q`.
pub fn synth_quantum(q: usize, spec: &WorkloadSpec) -> Result<(C2CMatrix, DramMatrix)> {
    spec.validate()?;
    let phase = phase_of_quantum(q, spec)?;
    let config = &spec.config;
    let (grouping, homes) = planted_grouping(spec.pattern_of_phase(phase), config);
    let group_of = grouping.group_of_threads(config.n_threads());
    let group = |t: usize| group_of[t].expect("planted grouping covers every thread");

    let mut rng = spec.jitter().map(|(seed, pct)| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(q as u64);
        (r, pct as f64 / 100.0)
    });

    let c2c = C2CMatrix::from_pairs(config.n_threads(), |i, j| {
        let base = if group(i) == group(j) {
            spec.c2c_intra
        } else {
            spec.c2c_inter
        };
        jittered(base, &mut rng)
    });
    let dram = DramMatrix::from_fn(config.n_threads(), config.n_nodes(), |t, n| {
        let base = if homes.node(group(t)) == n {
            spec.dram_home
        } else {
            spec.dram_other
        };
        jittered(base, &mut rng)
    });
    Ok((c2c, dram))
}

pub fn gen_trace(spec: &WorkloadSpec) -> Result<Trace> {
    spec.validate()?;
    let quanta = (1..=spec.config.n_quanta())
        .map(|q| synth_quantum(q, spec).map(|(c2c, dram)| Quantum { c2c, dram }))
        .collect::<Result<Vec<_>>>()?;
    Trace::new(spec.config, quanta)
}

/// Unstructured trace with every count drawn uniformly from `0..=max_count`.
pub fn random_trace(config: SystemConfig, seed: u64, max_count: Count) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quanta = (0..config.n_quanta())
        .map(|_| Quantum {
            c2c: C2CMatrix::from_pairs(config.n_threads(), |_, _| rng.random_range(0..=max_count)),
            dram: DramMatrix::from_fn(config.n_threads(), config.n_nodes(), |_, _| {
                rng.random_range(0..=max_count)
            }),
        })
        .collect();
    Trace { config, quanta }
}
