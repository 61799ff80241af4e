//! Command implementations: validated config in, staged output files out.

pub mod counterexample;
pub mod covariance;
pub mod ntk;
pub mod timecat;

use crate::config::{parse_config, CounterexampleConfig, CovarianceConfig, NtkConfig, TimecatConfig};
use crate::error::CliResult;
use crate::outputs::OutputSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Counterexample,
    Covariance,
    Ntk,
    Timecat,
}

/// Parse, apply the optional seed override, validate, and run.
pub fn run_command(
    kind: CommandKind,
    config_text: &str,
    seed_override: Option<u64>,
) -> CliResult<OutputSet> {
    match kind {
        CommandKind::Counterexample => {
            let mut cfg: CounterexampleConfig = parse_config(config_text)?;
            if let Some(seed) = seed_override {
                cfg.override_seed(seed);
            }
            counterexample::run(&cfg)
        }
        CommandKind::Covariance => {
            let mut cfg: CovarianceConfig = parse_config(config_text)?;
            if let Some(seed) = seed_override {
                cfg.override_seed(seed);
            }
            covariance::run(&cfg)
        }
        CommandKind::Ntk => {
            let mut cfg: NtkConfig = parse_config(config_text)?;
            if let Some(seed) = seed_override {
                cfg.override_seed(seed);
            }
            ntk::run(&cfg)
        }
        CommandKind::Timecat => {
            let mut cfg: TimecatConfig = parse_config(config_text)?;
            if let Some(seed) = seed_override {
                cfg.override_seed(seed);
            }
            timecat::run(&cfg)
        }
    }
}
