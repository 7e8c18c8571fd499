//! Flat `key = value` run configuration. Lists are comma separated, `#`
//! starts a comment, and unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sepset::estimators::EstimatorKind;
use sepset::graph::EdgeRule;
use sepset::mgm::MgmConfig;
use sepset::pipeline::PipelineConfig;
use sepset::sepset::{SepsetConfig, SepsetMode, DEFAULT_PATH_CAP};
use sepset::simulate::SimConfig;

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("experiment_csv", "", "experiment CSV (estimate, graph)"),
    ("population_csv", "", "population CSV (estimate, graph)"),
    ("outcome", "Y", "outcome column"),
    ("treatment", "T", "treatment column, coded 0/1"),
    ("covariates", "", "covariate columns; empty means every other experiment column"),
    ("categorical", "", "categorical covariates as name:levels, levels coded 0..levels-1"),
    ("population_missing", "", "covariates absent from the population file"),
    ("cluster", "", "cluster column; empty means one cluster per experiment row"),
    ("strata", "", "randomization block column"),
    ("treatment_prob_column", "", "column holding the known Pr(T=1) per row"),
    ("treatment_prob", "", "known constant Pr(T=1)"),
    ("population_size", "", "target population size N; empty means n + m"),
    ("sampling_set", "", "variables that drive selection into the experiment"),
    ("heterogeneity_set", "", "effect modifiers (exact mode)"),
    ("unmeasured", "", "variables the separating set may not use"),
    ("mode", "marginal", "marginal | exact"),
    ("estimators", "ipw", "any of ipw, outcome_model, aipw, sate_dim (simulate: all)"),
    ("weight_cap", "", "upper cap on sampling weights"),
    ("bootstrap", "1000", "bootstrap replicates for estimate; 0 disables"),
    ("freeze_population", "false", "keep population rows fixed in the bootstrap"),
    ("seed", "1", "random seed"),
    ("threads", "", "worker threads; empty means all cores"),
    ("out", ".", "output directory"),
    ("rule", "and", "edge rule: and | or"),
    ("gamma", "0.25", "EBIC gamma"),
    ("n_lambda", "50", "penalty grid length"),
    ("lambda_min_ratio", "0.01", "smallest penalty as a fraction of the largest"),
    ("threshold", "0", "edge weights at or below this are dropped"),
    ("path_cap", "1000000", "maximum number of enumerated paths"),
    ("sim_sizes", "100,200,500,1000,2000,3000", "experiment sizes"),
    ("sim_reps", "500", "replicates per size"),
    ("sim_m", "10000", "population sample size"),
    ("sim_pool_factor", "8", "candidate pool size as a multiple of n"),
    ("sim_constrained", "true", "also solve with X1 declared unmeasured"),
    ("sim_export_n", "0", "also write one simulated experiment of this size as CSV"),
];

pub fn key_help() -> String {
    let width = KEYS.iter().map(|k| k.0.len()).max().unwrap_or(0);
    let mut out = String::from("Config keys (key = value, lists comma separated):\n");
    for (key, default, about) in KEYS {
        let default = if default.is_empty() { String::new() } else { format!(" [default: {default}]") };
        out.push_str(&format!("  {key:width$}  {about}{default}\n"));
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct RawConfig(BTreeMap<String, String>);

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            raw.set(k.trim(), v.trim()).map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(raw)
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if !KEYS.iter().any(|k| k.0 == key) {
            return Err(format!("unknown config key {key:?} (see --help)"));
        }
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), String> {
        let (k, v) = pair.split_once('=').ok_or_else(|| format!("--set expects key=value, got {pair:?}"))?;
        self.set(k.trim(), v.trim())
    }

    fn text(&self, key: &str) -> &str {
        match self.0.get(key) {
            Some(v) => v,
            None => KEYS.iter().find(|k| k.0 == key).map(|k| k.1).unwrap_or(""),
        }
    }

    fn opt(&self, key: &str) -> Option<&str> {
        Some(self.text(key)).filter(|v| !v.is_empty())
    }

    fn list(&self, key: &str) -> Vec<String> {
        self.text(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect()
    }

    fn num<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        self.opt(key)
            .map(|v| v.parse::<T>().map_err(|_| format!("{key}: cannot parse {v:?}")))
            .transpose()
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T, String> {
        self.num(key)?.ok_or_else(|| format!("{key} must be set"))
    }

    fn flag(&self, key: &str) -> Result<bool, String> {
        match self.text(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(format!("{key}: expected true or false, got {v:?}")),
        }
    }

    fn explicit(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }
}

#[derive(Debug, Clone)]
pub struct DataConfig {
    pub experiment_csv: PathBuf,
    pub population_csv: PathBuf,
    pub outcome: String,
    pub treatment: String,
    pub covariates: Vec<String>,
    pub categorical: Vec<(String, u32)>,
    pub population_missing: Vec<String>,
    pub cluster: Option<String>,
    pub strata: Option<String>,
    pub treatment_prob_column: Option<String>,
    pub population_size: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: Option<DataConfig>,
    pub pipeline: PipelineConfig,
    pub bootstrap: usize,
    pub freeze_population: bool,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub sim: SimConfig,
    pub sim_export_n: usize,
}

fn parse_list<T: FromStr<Err = String>>(items: &[String]) -> Result<Vec<T>, String> {
    items.iter().map(|s| s.parse()).collect()
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, String> {
        let rule = match raw.text("rule") {
            "and" => EdgeRule::And,
            "or" => EdgeRule::Or,
            v => return Err(format!("rule: expected and or or, got {v:?}")),
        };
        let mode = match raw.text("mode") {
            "marginal" => SepsetMode::Marginal,
            "exact" => SepsetMode::Exact,
            v => return Err(format!("mode: expected marginal or exact, got {v:?}")),
        };
        let mgm = MgmConfig {
            rule,
            gamma: raw.required("gamma")?,
            n_lambda: raw.required("n_lambda")?,
            lambda_min_ratio: raw.required("lambda_min_ratio")?,
            threshold: raw.required("threshold")?,
            ..MgmConfig::default()
        };
        if !(mgm.gamma >= 0.0) || mgm.n_lambda == 0 || !(mgm.lambda_min_ratio > 0.0 && mgm.lambda_min_ratio < 1.0) {
            return Err("gamma must be >= 0, n_lambda >= 1 and lambda_min_ratio in (0, 1)".into());
        }
        let sepset = SepsetConfig {
            mgm,
            path_cap: raw.num("path_cap")?.unwrap_or(DEFAULT_PATH_CAP),
        };
        let estimators: Vec<EstimatorKind> = parse_list(&raw.list("estimators"))?;
        let pipeline = PipelineConfig {
            mode,
            sampling: raw.list("sampling_set"),
            heterogeneity: raw.list("heterogeneity_set"),
            unmeasured: raw.list("unmeasured"),
            sepset,
            estimators: estimators.clone(),
            treatment_prob: raw.num("treatment_prob")?,
            weight_cap: raw.num("weight_cap")?,
            population_size: raw.num("population_size")?,
        };

        let data = match (raw.opt("experiment_csv"), raw.opt("population_csv")) {
            (Some(e), Some(p)) => {
                let categorical = raw
                    .list("categorical")
                    .iter()
                    .map(|item| {
                        let (name, levels) = item
                            .split_once(':')
                            .ok_or_else(|| format!("categorical: expected name:levels, got {item:?}"))?;
                        let levels = levels
                            .trim()
                            .parse()
                            .map_err(|_| format!("categorical: bad level count in {item:?}"))?;
                        Ok((name.trim().to_string(), levels))
                    })
                    .collect::<Result<Vec<_>, String>>()?;
                Some(DataConfig {
                    experiment_csv: e.into(),
                    population_csv: p.into(),
                    outcome: raw.text("outcome").into(),
                    treatment: raw.text("treatment").into(),
                    covariates: raw.list("covariates"),
                    categorical,
                    population_missing: raw.list("population_missing"),
                    cluster: raw.opt("cluster").map(String::from),
                    strata: raw.opt("strata").map(String::from),
                    treatment_prob_column: raw.opt("treatment_prob_column").map(String::from),
                    population_size: raw.num("population_size")?,
                })
            }
            (None, None) => None,
            _ => return Err("experiment_csv and population_csv must be given together".into()),
        };

        let sim = SimConfig {
            sizes: raw
                .list("sim_sizes")
                .iter()
                .map(|s| s.parse().map_err(|_| format!("sim_sizes: cannot parse {s:?}")))
                .collect::<Result<_, String>>()?,
            m: raw.required("sim_m")?,
            pool_factor: raw.required("sim_pool_factor")?,
            reps: raw.required("sim_reps")?,
            seed: raw.required("seed")?,
            constrained: raw.flag("sim_constrained")?,
            estimators: if raw.explicit("estimators") { estimators } else { EstimatorKind::ALL.to_vec() },
            sepset,
        };
        Ok(Self {
            data,
            pipeline,
            bootstrap: raw.required("bootstrap")?,
            freeze_population: raw.flag("freeze_population")?,
            seed: raw.required("seed")?,
            threads: raw.num("threads")?,
            out: raw.text("out").into(),
            sim,
            sim_export_n: raw.required("sim_export_n")?,
        })
    }
}
