use std::io::Write;

use serde::Serialize;

use super::EpisodeLog;
use crate::model::RewardTable;

/// Cumulative regret `Delta(T) = T rho* - collected(T)` at checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretSeries {
    pub rho_star: f64,
    /// `(T, Delta(T))` in increasing `T`.
    pub checkpoints: Vec<(f64, f64)>,
}

impl RegretSeries {
    pub fn final_regret(&self) -> Option<f64> {
        self.checkpoints.last().map(|&(_, d)| d)
    }

    /// Writes `T,delta` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["T", "delta"])?;
        for &(t, d) in &self.checkpoints {
            out.write_record([t.to_string(), d.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Builds a regret series episode by episode so logs can be dropped once
/// they are accounted for. Every episode end is recorded, plus every grid
/// point falling inside an episode.
#[derive(Debug, Clone)]
pub struct RegretAccumulator {
    rho_star: f64,
    grid: Vec<f64>,
    next_grid: usize,
    elapsed: f64,
    collected: f64,
    checkpoints: Vec<(f64, f64)>,
}

impl RegretAccumulator {
    pub fn new(rho_star: f64, mut grid: Vec<f64>) -> Self {
        grid.retain(|t| t.is_finite() && *t > 0.0);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        Self {
            rho_star,
            grid,
            next_grid: 0,
            elapsed: 0.0,
            collected: 0.0,
            checkpoints: Vec::new(),
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// Regret at the current end of the accounted time.
    pub fn current(&self) -> f64 {
        self.elapsed * self.rho_star - self.collected
    }

    pub fn push(&mut self, log: &EpisodeLog, table: &RewardTable) {
        let start = self.elapsed;
        let end = start + log.duration;
        let mut admissions = log.admission_rewards(table).peekable();
        while self.next_grid < self.grid.len() && self.grid[self.next_grid] < end {
            let t = self.grid[self.next_grid];
            while let Some(&(time, reward)) = admissions.peek() {
                if start + time > t {
                    break;
                }
                self.collected += reward;
                admissions.next();
            }
            self.record(t);
            self.next_grid += 1;
        }
        self.collected += admissions.map(|(_, r)| r).sum::<f64>();
        self.elapsed = end;
        self.record(end);
        // grid points equal to the boundary are covered by the boundary row
        while self.next_grid < self.grid.len() && self.grid[self.next_grid] <= end {
            self.next_grid += 1;
        }
    }

    fn record(&mut self, t: f64) {
        if self.checkpoints.last().is_some_and(|&(last, _)| last >= t) {
            return;
        }
        self.checkpoints.push((t, t * self.rho_star - self.collected));
    }

    pub fn finish(self) -> RegretSeries {
        RegretSeries {
            rho_star: self.rho_star,
            checkpoints: self.checkpoints,
        }
    }
}

/// Regret of consecutive episodes at their boundaries and at `grid`.
pub fn accumulate_regret(logs: &[EpisodeLog], rho_star: f64, table: &RewardTable, grid: &[f64]) -> RegretSeries {
    let mut acc = RegretAccumulator::new(rho_star, grid.to_vec());
    for log in logs {
        acc.push(log, table);
    }
    acc.finish()
}
