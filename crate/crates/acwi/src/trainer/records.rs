//! Per-iteration metrics records, their CSV encoding, and the clock
//! abstraction that keeps the wall-clock column reproducible under test.

use std::time::Instant;

/// Column order of every metrics CSV; producers and consumers share it.
pub const METRICS_HEADER: &str = "iteration,env_steps,ep_return_mean,ep_return_std,ep_len_mean,\
l_icm,l_corr,l_reg,beta_mean,beta_std,intr_mean,clip_frac,entropy,wallclock_s";

/// One row of training metrics. Optional fields stay empty in the CSV when
/// the stage that produces them did not run (no episode finished, or the
/// method has no curiosity / scale network).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration counter.
    pub iteration: u64,
    /// Cumulative environment steps consumed after this iteration.
    pub env_steps: u64,
    pub ep_return_mean: Option<f64>,
    pub ep_return_std: Option<f64>,
    pub ep_len_mean: Option<f64>,
    pub l_icm: Option<f64>,
    pub l_corr: Option<f64>,
    pub l_reg: Option<f64>,
    pub beta_mean: Option<f64>,
    pub beta_std: Option<f64>,
    pub intr_mean: Option<f64>,
    pub clip_frac: f64,
    pub entropy: f64,
    pub wallclock_s: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl IterationRecord {
    /// Encode as one CSV line (no trailing newline), fields in
    /// [`METRICS_HEADER`] order. Numbers use shortest round-trip formatting,
    /// so parsing a row back recovers the exact values.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.env_steps,
            opt(self.ep_return_mean),
            opt(self.ep_return_std),
            opt(self.ep_len_mean),
            opt(self.l_icm),
            opt(self.l_corr),
            opt(self.l_reg),
            opt(self.beta_mean),
            opt(self.beta_std),
            opt(self.intr_mean),
            self.clip_frac,
            self.entropy,
            self.wallclock_s,
        )
    }
}

/// Result of one greedy evaluation pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    /// Mean extrinsic episode return.
    pub mean_return: f64,
    /// Fraction of episodes ending in success.
    pub success_rate: f64,
    /// Mean episode length in steps.
    pub mean_length: f64,
}

/// Header of the evaluation CSVs.
pub const EVAL_HEADER: &str = "iteration,env_steps,mean_return,success_rate,mean_length";

/// Header of the scale-factor snapshot CSVs. `obs_hex` is the raw
/// observation byte string, so snapshots can be re-embedded later.
pub const SNAPSHOT_HEADER: &str = "iteration,obs_hash,beta,obs_hex";

/// Time source for the metrics wall-clock column.
pub trait Clock {
    /// Seconds elapsed since the clock was created.
    fn now_s(&mut self) -> f64;
}

/// Real elapsed time.
pub struct WallClock(Instant);

impl WallClock {
    pub fn new() -> Self {
        WallClock(Instant::now())
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now_s(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Deterministic clock advancing a fixed amount per reading; lets tests
/// compare metrics files byte for byte.
pub struct TickClock {
    t: f64,
    dt: f64,
}

impl TickClock {
    pub fn new(dt: f64) -> Self {
        TickClock { t: 0.0, dt }
    }
}

impl Clock for TickClock {
    fn now_s(&mut self) -> f64 {
        self.t += self.dt;
        self.t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_row_matches_the_header_arity_and_keeps_empty_fields() {
        let record = IterationRecord {
            iteration: 3,
            env_steps: 3072,
            ep_return_mean: Some(0.5),
            ep_return_std: Some(0.0),
            ep_len_mean: Some(12.5),
            l_icm: None,
            l_corr: None,
            l_reg: None,
            beta_mean: None,
            beta_std: None,
            intr_mean: None,
            clip_frac: 0.03125,
            entropy: 1.9459101090932196,
            wallclock_s: 1.5,
        };
        let row = record.to_csv_row();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), METRICS_HEADER.split(',').count());
        assert_eq!(fields[0], "3");
        assert_eq!(fields[5], "");
        assert_eq!(fields[11], "0.03125");
        // Shortest round-trip formatting parses back exactly.
        assert_eq!(fields[12].parse::<f64>().unwrap(), record.entropy);
    }

    #[test]
    fn tick_clock_is_deterministic() {
        let mut a = TickClock::new(0.25);
        let mut b = TickClock::new(0.25);
        for _ in 0..5 {
            assert_eq!(a.now_s(), b.now_s());
        }
        assert_eq!(a.now_s(), 1.5);
    }
}
