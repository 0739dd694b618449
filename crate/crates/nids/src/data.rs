//! Where each module's initial log-likelihood pair comes from.

use std::path::Path;

use nids_core::classifier::{
    self, Class, FeatureRecord, LikelihoodPair, NaiveBayesModel, SyntheticConfig, TrainConfig,
};
use rand::Rng;

use crate::config::DataSource;
use crate::error::HarnessError;

/// Likelihood pairs of a scored dataset, split by class.
#[derive(Debug, Clone)]
pub struct ScoredDataset {
    pub model: NaiveBayesModel,
    pub attack: Vec<LikelihoodPair>,
    pub normal: Vec<LikelihoodPair>,
}

#[derive(Debug, Clone)]
pub enum LikelihoodSource {
    Synthetic(SyntheticConfig),
    Dataset(ScoredDataset),
}

impl LikelihoodSource {
    pub fn from_config(data: &DataSource) -> Result<Self, HarnessError> {
        match data {
            DataSource::Synthetic { margins } => Ok(Self::Synthetic(*margins)),
            DataSource::NslKdd {
                path,
                model,
                dos_only,
                train,
            } => {
                let mut records = read_records(path)?;
                if *dos_only {
                    records = classifier::filter_dos(records);
                }
                let model = match model {
                    Some(p) => load_model(p)?,
                    None => train_model(&records, train, path)?,
                };
                let scored = score(model, &records);
                for (pool, class) in [(&scored.attack, Class::Attack), (&scored.normal, Class::Normal)] {
                    if pool.is_empty() {
                        return Err(HarnessError::Dataset {
                            path: path.clone(),
                            source: classifier::ClassifierError::MissingClass(class),
                        });
                    }
                }
                Ok(Self::Dataset(scored))
            }
        }
    }

    /// One pair per module for a phase whose traffic is of class `truth`.
    ///
    /// Dataset records are handed out round-robin within each class, module
    /// `i` of phase `p` taking record `p * n + i`; the second value reports
    /// whether that index wrapped past the end of the class.
    pub fn assign<R: Rng + ?Sized>(
        &self,
        truth: Class,
        phase: usize,
        n: usize,
        rng: &mut R,
    ) -> (Vec<LikelihoodPair>, bool) {
        match self {
            Self::Synthetic(cfg) => ((0..n).map(|_| cfg.draw(truth, rng)).collect(), false),
            Self::Dataset(ds) => {
                let pool = match truth {
                    Class::Attack => &ds.attack,
                    Class::Normal => &ds.normal,
                };
                let first = phase * n;
                let pairs = (first..first + n).map(|k| pool[k % pool.len()]).collect();
                (pairs, first + n > pool.len())
            }
        }
    }
}

pub fn score(model: NaiveBayesModel, records: &[FeatureRecord]) -> ScoredDataset {
    let mut attack = Vec::new();
    let mut normal = Vec::new();
    for r in records {
        let pair = model.log_likelihoods(r);
        match r.class() {
            Class::Attack => attack.push(pair),
            Class::Normal => normal.push(pair),
        }
    }
    ScoredDataset { model, attack, normal }
}

pub fn read_records(path: &Path) -> Result<Vec<FeatureRecord>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
    classifier::parse_records(&text).map_err(|source| HarnessError::Dataset {
        path: path.to_path_buf(),
        source,
    })
}

pub fn train_model(records: &[FeatureRecord], cfg: &TrainConfig, path: &Path) -> Result<NaiveBayesModel, HarnessError> {
    classifier::train(records, cfg).map_err(|source| HarnessError::Dataset {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_model(model: &NaiveBayesModel, path: &Path) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(model).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, text).map_err(HarnessError::io(path))
}

pub fn load_model(path: &Path) -> Result<NaiveBayesModel, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}
