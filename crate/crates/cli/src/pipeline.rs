//! The full battery: fit, test and rank every family on every dataset.

use crate::ingest::Dataset;
use citysize::gof::{monte_carlo_test, GofConfig, GofReport, Verdict};
use citysize::mle::{fit_families, fit_mixture_em, standard_errors, FitConfig, FitResult};
use citysize::rng::stream_seed2;
use citysize::select::{rank_models, ModelComparison};
use citysize::Family;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PipelineError {
    #[error("no datasets given")]
    NoDatasets,
    #[error("no families requested")]
    NoFamilies,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub families: Vec<Family>,
    pub fit: FitConfig,
    pub gof: GofConfig,
    /// Skip the Monte-Carlo tests entirely.
    pub skip_tests: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { families: Family::ALL.to_vec(), fit: FitConfig::default(), gof: GofConfig::default(), skip_tests: false }
    }
}

/// EM refit of a lognormal mixture, compared with the simplex estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmCheck {
    pub log_likelihood: f64,
    pub max_param_diff: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCell {
    pub family: Family,
    pub fit: Option<FitResult>,
    pub fit_error: Option<String>,
    pub gof: Option<GofReport>,
    pub gof_error: Option<String>,
    pub em_check: Option<EmCheck>,
}

impl FamilyCell {
    /// `None` is a blank cell.
    pub fn verdict(&self) -> Option<Verdict> {
        self.gof.as_ref().map(|g| g.verdict)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub name: String,
    pub year: Option<i32>,
    pub n: usize,
    pub cells: Vec<FamilyCell>,
    pub comparison: Option<ModelComparison>,
}

impl DatasetReport {
    pub fn cell(&self, family: Family) -> Option<&FamilyCell> {
        self.cells.iter().find(|c| c.family == family)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub families: Vec<Family>,
    pub seed: u64,
    pub replicates: usize,
    pub refit: bool,
    pub significance_level: f64,
    /// Ascending by sample size.
    pub datasets: Vec<DatasetReport>,
}

/// Run the battery. Datasets are processed in parallel; the report depends
/// only on the inputs and `config.gof.seed`.
pub fn run_pipeline(datasets: &[Dataset], config: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    if datasets.is_empty() {
        return Err(PipelineError::NoDatasets);
    }
    if config.families.is_empty() {
        return Err(PipelineError::NoFamilies);
    }
    let mut families = config.families.clone();
    families.sort_by_key(|f| f.ordinal());
    families.dedup();

    let mut order: Vec<&Dataset> = datasets.iter().collect();
    order.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.name.cmp(&b.name)).then(a.year.cmp(&b.year)));

    let reports = order
        .par_iter()
        .enumerate()
        .map(|(i, d)| analyse(i as u64, d, &families, config))
        .collect();
    Ok(PipelineReport {
        families,
        seed: config.gof.seed,
        replicates: config.gof.replicates,
        refit: config.gof.refit,
        significance_level: config.gof.significance_level,
        datasets: reports,
    })
}

fn analyse(index: u64, dataset: &Dataset, families: &[Family], config: &PipelineConfig) -> DatasetReport {
    let data = &dataset.sizes;
    let fitted = match fit_families(families, data, &config.fit) {
        Ok(f) => f,
        Err(e) => families.iter().map(|&f| (f, Err(e.clone()))).collect(),
    };
    let cells: Vec<FamilyCell> = fitted
        .into_par_iter()
        .map(|(family, result)| {
            let mut cell =
                FamilyCell { family, fit: None, fit_error: None, gof: None, gof_error: None, em_check: None };
            let fit = match result {
                Ok(f) => f,
                Err(e) => {
                    cell.fit_error = Some(e.to_string());
                    return cell;
                }
            };
            let fit = if fit.converged { standard_errors(&fit, data).unwrap_or(fit) } else { fit };
            if matches!(family, Family::Ln2 | Family::Ln3) {
                if let Ok(em) = fit_mixture_em(family, data, &config.fit) {
                    let diff = em
                        .spec
                        .params()
                        .iter()
                        .zip(fit.spec.params())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    cell.em_check =
                        Some(EmCheck { log_likelihood: em.log_likelihood, max_param_diff: diff, converged: em.converged });
                }
            }
            if !fit.is_estimable() {
                cell.fit_error = Some(format!("{family} is not estimable on this dataset"));
            } else if !config.skip_tests {
                let gof = GofConfig {
                    seed: stream_seed2(config.gof.seed, index, family.ordinal() as u64),
                    ..config.gof.clone()
                };
                match monte_carlo_test(data, family, &fit, &gof) {
                    Ok(r) => cell.gof = Some(r),
                    Err(e) => cell.gof_error = Some(e.to_string()),
                }
            }
            cell.fit = Some(fit);
            cell
        })
        .collect();
    let estimable: Vec<FitResult> =
        cells.iter().filter_map(|c| c.fit.clone()).filter(FitResult::is_estimable).collect();
    let comparison = rank_models(&estimable, data.len()).ok();
    DatasetReport { name: dataset.name.clone(), year: dataset.year, n: data.len(), cells, comparison }
}
