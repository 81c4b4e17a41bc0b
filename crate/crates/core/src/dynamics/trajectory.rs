use std::fmt::Write as _;
use std::io::{self, Write};

/// Counts recorded after one step. `t` is the clock after the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRecord {
    pub t: u64,
    pub active: u32,
    pub n_int: u32,
    pub n_ext: u32,
    pub f_int: u32,
    pub f_ext: u32,
    pub r_int: u32,
    pub r_ext: u32,
    /// Agents in a critically inactive neighborhood.
    pub critical: u32,
}

impl StepRecord {
    pub fn failures(&self) -> u32 {
        self.f_int + self.f_ext
    }

    pub fn recoveries(&self) -> u32 {
        self.r_int + self.r_ext
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    agent_count: usize,
    records: Vec<StepRecord>,
}

pub const CSV_HEADER: &str = "t,f,n_int,n_ext,F_int,F_ext,R_int,R_ext,E";

impl Trajectory {
    pub fn with_capacity(agent_count: usize, steps: usize) -> Self {
        Trajectory { agent_count, records: Vec::with_capacity(steps) }
    }

    pub fn push(&mut self, record: StepRecord) {
        self.records.push(record);
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn frac(&self, count: u32) -> f64 {
        count as f64 / self.agent_count as f64
    }

    /// Fraction of active agents per step.
    pub fn f(&self) -> Vec<f64> {
        self.records.iter().map(|r| self.frac(r.active)).collect()
    }

    pub fn n_int(&self) -> Vec<f64> {
        self.records.iter().map(|r| self.frac(r.n_int)).collect()
    }

    pub fn n_ext(&self) -> Vec<f64> {
        self.records.iter().map(|r| self.frac(r.n_ext)).collect()
    }

    /// Empirical probability of a critically inactive neighborhood.
    pub fn e(&self) -> Vec<f64> {
        self.records.iter().map(|r| self.frac(r.critical)).collect()
    }

    /// Total failures per step.
    pub fn failure_counts(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.failures() as f64).collect()
    }

    /// Mean of `f` over the last `fraction` of the steps.
    pub fn tail_mean_f(&self, fraction: f64) -> f64 {
        let k = ((self.records.len() as f64 * fraction).ceil() as usize).clamp(1, self.records.len());
        let tail = &self.records[self.records.len() - k..];
        tail.iter().map(|r| self.frac(r.active)).sum::<f64>() / k as f64
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut line = String::with_capacity(128);
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            line.clear();
            writeln!(
                line,
                "{},{},{},{},{},{},{},{},{}",
                r.t,
                self.frac(r.active),
                self.frac(r.n_int),
                self.frac(r.n_ext),
                r.f_int,
                r.f_ext,
                r.r_int,
                r.r_ext,
                self.frac(r.critical)
            )
            .unwrap();
            out.write_all(line.as_bytes())?;
        }
        out.flush()
    }
}
