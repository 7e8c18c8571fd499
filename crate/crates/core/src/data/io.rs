use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{DataError, Result, StackedDataset, VariableSpec};

/// Column layout of the experiment and population CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub covariates: Vec<VariableSpec>,
    pub outcome: String,
    pub treatment: String,
    pub cluster: Option<String>,
    pub strata: Option<String>,
    /// Column holding the known per-row treatment probability.
    pub treatment_prob: Option<String>,
    pub population_size: Option<f64>,
    /// Fail when no cluster column is declared (bootstrap runs need one).
    pub require_cluster: bool,
}

impl Schema {
    pub fn new(covariates: Vec<VariableSpec>, outcome: &str, treatment: &str) -> Self {
        Self {
            covariates,
            outcome: outcome.into(),
            treatment: treatment.into(),
            cluster: None,
            strata: None,
            treatment_prob: None,
            population_size: None,
            require_cluster: false,
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "na" | "NaN" | "nan")
}

fn parse_cell(cell: &str, column: &str, row: usize) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| DataError::NonNumeric {
        column: column.to_string(),
        row,
        value: cell.to_string(),
    })
}

fn header_index(headers: &csv::StringRecord) -> HashMap<String, usize> {
    headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim().to_string(), i))
        .collect()
}

fn require(index: &HashMap<String, usize>, name: &str, file: &str) -> Result<usize> {
    index
        .get(name)
        .copied()
        .ok_or_else(|| DataError::Schema(format!("column {name:?} missing from {file} file")))
}

#[derive(Default)]
struct Interner(HashMap<String, u32>);

impl Interner {
    fn id(&mut self, label: &str) -> u32 {
        let next = self.0.len() as u32;
        *self.0.entry(label.trim().to_string()).or_insert(next)
    }
}

/// Reads the experiment and population files into a validated dataset.
/// Rows with a missing entry in any required column are dropped.
pub fn load_csv(
    experiment: impl AsRef<Path>,
    population: impl AsRef<Path>,
    schema: &Schema,
) -> Result<StackedDataset> {
    let exp = File::open(experiment)?;
    let pop = File::open(population)?;
    read_csv(exp, pop, schema)
}

pub fn read_csv<R1: Read, R2: Read>(
    experiment: R1,
    population: R2,
    schema: &Schema,
) -> Result<StackedDataset> {
    if schema.require_cluster && schema.cluster.is_none() {
        return Err(DataError::MissingCluster);
    }
    let p = schema.covariates.len();

    let mut reader = csv::Reader::from_reader(experiment);
    let index = header_index(reader.headers()?);
    let cov_idx = schema
        .covariates
        .iter()
        .map(|s| require(&index, &s.name, "experiment"))
        .collect::<Result<Vec<_>>>()?;
    let y_idx = require(&index, &schema.outcome, "experiment")?;
    let t_idx = require(&index, &schema.treatment, "experiment")?;
    let cluster_idx = match &schema.cluster {
        Some(c) => Some(require(&index, c, "experiment").map_err(|_| DataError::MissingCluster)?),
        None => None,
    };
    let strata_idx = schema
        .strata
        .as_deref()
        .map(|c| require(&index, c, "experiment"))
        .transpose()?;
    let prob_idx = schema
        .treatment_prob
        .as_deref()
        .map(|c| require(&index, c, "experiment"))
        .transpose()?;

    let mut exp_values = Vec::new();
    let (mut treatment, mut outcome) = (Vec::new(), Vec::new());
    let (mut clusters, mut strata, mut probs) = (Vec::new(), Vec::new(), Vec::new());
    let (mut cluster_ids, mut strata_ids) = (Interner::default(), Interner::default());
    let mut dropped = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |i: usize| record.get(i).unwrap_or("");
        let required = cov_idx
            .iter()
            .chain([&y_idx, &t_idx])
            .chain(cluster_idx.iter())
            .chain(strata_idx.iter())
            .chain(prob_idx.iter());
        if required.into_iter().any(|&i| is_missing(cell(i))) {
            dropped += 1;
            continue;
        }
        for (spec, &i) in schema.covariates.iter().zip(&cov_idx) {
            exp_values.push(parse_cell(cell(i), &spec.name, row)?);
        }
        outcome.push(parse_cell(cell(y_idx), &schema.outcome, row)?);
        let t = parse_cell(cell(t_idx), &schema.treatment, row)?;
        treatment.push(match t {
            1.0 => true,
            0.0 => false,
            value => return Err(DataError::InvalidTreatment { value, row }),
        });
        if let Some(i) = cluster_idx {
            clusters.push(cluster_ids.id(cell(i)));
        }
        if let Some(i) = strata_idx {
            strata.push(strata_ids.id(cell(i)));
        }
        if let Some(i) = prob_idx {
            probs.push(parse_cell(cell(i), schema.treatment_prob.as_deref().unwrap(), row)?);
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} experiment rows with missing values");
    }
    let n = outcome.len();
    let experiment = DMatrix::from_row_slice(n, p, &exp_values);

    let mut reader = csv::Reader::from_reader(population);
    let index = header_index(reader.headers()?);
    for forbidden in [&schema.outcome, &schema.treatment] {
        if index.contains_key(forbidden.as_str()) {
            return Err(DataError::Schema(format!(
                "population file must not contain column {forbidden:?}"
            )));
        }
    }
    let measured: HashSet<&str> = schema
        .covariates
        .iter()
        .filter(|s| s.measured_in_population)
        .map(|s| s.name.as_str())
        .collect();
    if let Some(extra) = index.keys().find(|k| !measured.contains(k.as_str())) {
        return Err(DataError::Schema(format!(
            "population file has unexpected column {extra:?}"
        )));
    }
    let pop_idx = schema
        .covariates
        .iter()
        .map(|s| {
            s.measured_in_population
                .then(|| require(&index, &s.name, "population"))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pop_values = Vec::new();
    let mut m = 0usize;
    dropped = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |i: usize| record.get(i).unwrap_or("");
        if pop_idx.iter().flatten().any(|&i| is_missing(cell(i))) {
            dropped += 1;
            continue;
        }
        for (spec, idx) in schema.covariates.iter().zip(&pop_idx) {
            pop_values.push(match idx {
                Some(i) => parse_cell(cell(*i), &spec.name, row)?,
                None => f64::NAN,
            });
        }
        m += 1;
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} population rows with missing values");
    }
    let population = DMatrix::from_row_slice(m, p, &pop_values);

    let mut dataset = StackedDataset::new(
        schema.covariates.clone(),
        experiment,
        treatment,
        outcome,
        population,
    )?
    .with_names(schema.outcome.clone(), schema.treatment.clone());
    if cluster_idx.is_some() {
        dataset = dataset.with_clusters(clusters)?;
    }
    if strata_idx.is_some() {
        dataset = dataset.with_strata(strata)?;
    }
    if prob_idx.is_some() {
        dataset = dataset.with_treatment_prob(probs)?;
    }
    if let Some(size) = schema.population_size {
        dataset = dataset.with_population_size(size)?;
    }
    Ok(dataset)
}

/// Writes the dataset back out as an experiment file (covariates, outcome,
/// treatment and, when present, a `cluster` column) and a population file
/// holding the measured covariates.
pub fn write_csv<W1: Write, W2: Write>(
    dataset: &StackedDataset,
    experiment: W1,
    population: W2,
) -> Result<()> {
    let specs = dataset.specs();
    let mut writer = csv::Writer::from_writer(experiment);
    let mut header: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    header.push(dataset.outcome_name());
    header.push(dataset.treatment_name());
    if dataset.clusters().is_some() {
        header.push("cluster");
    }
    writer.write_record(&header)?;
    for i in 0..dataset.n_experiment() {
        let mut record: Vec<String> = (0..specs.len())
            .map(|j| dataset.covariates()[(i, j)].to_string())
            .collect();
        record.push(dataset.outcome()[i].to_string());
        record.push(u8::from(dataset.treatment()[i]).to_string());
        if let Some(c) = dataset.clusters() {
            record.push(c[i].to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;

    let measured: Vec<usize> = (0..specs.len())
        .filter(|&j| specs[j].measured_in_population)
        .collect();
    let mut writer = csv::Writer::from_writer(population);
    writer.write_record(measured.iter().map(|&j| specs[j].name.as_str()))?;
    let n = dataset.n_experiment();
    for i in 0..dataset.m_population() {
        writer.write_record(
            measured
                .iter()
                .map(|&j| dataset.covariates()[(n + i, j)].to_string()),
        )?;
    }
    writer.flush()?;
    Ok(())
}
