use std::path::{Path, PathBuf};

use cec_core::cec::CatalystSearchOptions;
use cec_core::sn::{SnEncoding, SnOptions};
use cec_core::Limits;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Caps, search settings and output location for one invocation.
///
/// Loaded from a TOML file with `--config`; command-line flags override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub max_outcomes: u64,
    pub max_pivots: u64,
    pub max_type_classes: u64,
    /// Largest copy count scanned by `find-min-n` and `cec-run`.
    pub n_max: usize,
    /// Register sizes tried by the catalyst search.
    pub schedule: Vec<usize>,
    /// Branch-and-bound nodes per register size.
    pub node_budget: u64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub encoding: SnEncoding,
    /// Reports go here as `<subcommand>.json` instead of stdout.
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let limits = Limits::default();
        let search = CatalystSearchOptions::default();
        RunConfig {
            max_outcomes: limits.max_outcomes,
            max_pivots: limits.max_pivots,
            max_type_classes: limits.max_type_classes,
            n_max: 6,
            schedule: search.schedule,
            node_budget: search.node_budget,
            seed: 0,
            threads: None,
            encoding: SnEncoding::default(),
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let caps = [
            ("max_outcomes", self.max_outcomes),
            ("max_pivots", self.max_pivots),
            ("max_type_classes", self.max_type_classes),
            ("n_max", self.n_max as u64),
            ("node_budget", self.node_budget),
        ];
        for (name, v) in caps {
            if v == 0 {
                return Err(CliError::usage(format!("{name} must be positive")));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::usage("threads must be positive"));
        }
        if self.schedule.is_empty() || self.schedule.contains(&0) {
            return Err(CliError::usage("schedule needs positive register sizes"));
        }
        Ok(())
    }

    pub fn limits(&self) -> Limits {
        Limits {
            max_outcomes: self.max_outcomes,
            max_pivots: self.max_pivots,
            max_type_classes: self.max_type_classes,
        }
    }

    pub fn sn_options(&self) -> SnOptions {
        SnOptions {
            encoding: self.encoding,
            limits: self.limits(),
        }
    }

    pub fn search_options(&self, stop_at_first: bool) -> CatalystSearchOptions {
        CatalystSearchOptions {
            schedule: self.schedule.clone(),
            node_budget: self.node_budget,
            stop_at_first,
            limits: self.limits(),
        }
    }
}
