use std::path::PathBuf;

use clap::Args;
use padic_uncertainty::{CampaignConfig, OperatorClass, Prime, Suite};
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::CliError;

/// Flags shared by `verify` and `identity`. Flags override the config file,
/// which overrides the built-in defaults.
#[derive(Args, Debug)]
pub struct CampaignArgs {
    /// JSON campaign config; any subset of the fields may be given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub primes: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Trials per (prime, dim, class) cell.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub size_bound: Option<u64>,
    /// Operator classes: symmetric, general, c0_diagonal.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    /// Orthogonal witnesses per instance for the Maccone-Pati checks.
    #[arg(long)]
    pub witnesses: Option<usize>,
    #[arg(long, default_value = "json")]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reverse every comparison; the run must then report violations.
    #[arg(long, hide = true)]
    pub mutate: bool,
}

/// Partial campaign config as read from a file. Parsed field by field so
/// that a bad value is reported against the field that holds it.
#[derive(Default)]
struct ConfigFile {
    primes: Option<Vec<Prime>>,
    dims: Option<Vec<usize>>,
    trials_per_cell: Option<usize>,
    size_bound: Option<u64>,
    operator_classes: Option<Vec<OperatorClass>>,
    witnesses_per_instance: Option<usize>,
    seed: Option<u64>,
}

fn field<T: DeserializeOwned>(name: &str, value: Value) -> Result<Option<T>, String> {
    serde_json::from_value(value).map(Some).map_err(|e| format!("field `{name}`: {e}"))
}

impl ConfigFile {
    fn parse(text: &str) -> Result<Self, String> {
        let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let Value::Object(map) = value else {
            return Err("expected a JSON object".to_string());
        };
        let mut cfg = ConfigFile::default();
        for (key, value) in map {
            match key.as_str() {
                "primes" => cfg.primes = field(&key, value)?,
                "dims" => cfg.dims = field(&key, value)?,
                "trials_per_cell" => cfg.trials_per_cell = field(&key, value)?,
                "size_bound" => cfg.size_bound = field(&key, value)?,
                "operator_classes" => cfg.operator_classes = field(&key, value)?,
                "witnesses_per_instance" => cfg.witnesses_per_instance = field(&key, value)?,
                "seed" => cfg.seed = field(&key, value)?,
                _ => return Err(format!("unknown field `{key}`")),
            }
        }
        Ok(cfg)
    }
}

fn read_config_file(path: &PathBuf) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("cannot read config {}: {e}", path.display())))?;
    ConfigFile::parse(&text).map_err(|e| CliError(format!("malformed config {}: {e}", path.display())))
}

impl CampaignArgs {
    pub fn resolve(&self, suite: Suite) -> Result<CampaignConfig, CliError> {
        let file = match &self.config {
            Some(path) => read_config_file(path)?,
            None => ConfigFile::default(),
        };
        let mut cfg = CampaignConfig { suite, mutate: self.mutate, ..CampaignConfig::default() };

        if let Some(v) = file.primes {
            cfg.primes = v;
        }
        if let Some(v) = file.dims {
            cfg.dims = v;
        }
        if let Some(v) = file.trials_per_cell {
            cfg.trials_per_cell = v;
        }
        if let Some(v) = file.size_bound {
            cfg.size_bound = v;
        }
        if let Some(v) = file.operator_classes {
            cfg.operator_classes = v;
        }
        if let Some(v) = file.witnesses_per_instance {
            cfg.witnesses_per_instance = v;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }

        if let Some(ps) = &self.primes {
            cfg.primes = ps
                .iter()
                .map(|&p| Prime::new(p).map_err(|e| CliError(format!("invalid --primes: {e}"))))
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = &self.dims {
            cfg.dims = v.clone();
        }
        if let Some(v) = self.trials {
            cfg.trials_per_cell = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.size_bound {
            cfg.size_bound = v;
        }
        if let Some(cs) = &self.classes {
            cfg.operator_classes = cs
                .iter()
                .map(|c| c.parse().map_err(|e| CliError(format!("invalid --classes: {e}"))))
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = self.witnesses {
            cfg.witnesses_per_instance = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
