//! Naive Bayes likelihoods over NSL-KDD connection records.
//!
//! Each module scores its traffic record under both hypotheses and starts
//! consensus from the pair of log-likelihoods. Class priors are left out on
//! purpose; they can be folded into the alert threshold.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FEATURE_COUNT: usize = 41;

/// Column names of an NSL-KDD record, in file order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

/// Columns holding symbolic values: protocol, service and connection flag.
pub const CATEGORICAL_FEATURES: [usize; 3] = [1, 2, 3];

/// NSL-KDD labels in the denial-of-service family.
pub const DOS_LABELS: [&str; 6] = ["back", "land", "neptune", "pod", "smurf", "teardrop"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Class {
    Attack,
    Normal,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Attack => "attack",
            Class::Normal => "normal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FeatureValue {
    Numeric(f64),
    Categorical(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub features: Vec<FeatureValue>,
    pub label: String,
    pub difficulty: Option<u32>,
}

impl FeatureRecord {
    pub fn class(&self) -> Class {
        if self.label == "normal" {
            Class::Normal
        } else {
            Class::Attack
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierError {
    FieldCount { line: usize, found: usize },
    InvalidNumber { line: usize, field: usize, value: String },
    EmptyLabel { line: usize },
    InvalidDifficulty { line: usize, value: String },
    MissingClass(Class),
    InvalidConfig(String),
}

impl fmt::Display for ClassifierError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FieldCount { line, found } => write!(
                f,
                "line {line}: expected {} or {} fields, found {found}",
                FEATURE_COUNT + 1,
                FEATURE_COUNT + 2
            ),
            Self::InvalidNumber { line, field, value } => {
                write!(f, "line {line}: field {field} ({}) is not a number: {value:?}", FEATURE_NAMES[*field])
            }
            Self::EmptyLabel { line } => write!(f, "line {line}: empty label"),
            Self::InvalidDifficulty { line, value } => {
                write!(f, "line {line}: difficulty is not an integer: {value:?}")
            }
            Self::MissingClass(c) => write!(f, "no training records of class {}", c.as_str()),
            Self::InvalidConfig(msg) => write!(f, "invalid classifier configuration: {msg}"),
        }
    }
}

impl core::error::Error for ClassifierError {}

/// Parses one comma-separated NSL-KDD line; `line` is 1-based and only used in errors.
pub fn parse_line(text: &str, line: usize) -> Result<FeatureRecord, ClassifierError> {
    let fields: Vec<&str> = text.trim().split(',').map(str::trim).collect();
    if fields.len() != FEATURE_COUNT + 1 && fields.len() != FEATURE_COUNT + 2 {
        return Err(ClassifierError::FieldCount {
            line,
            found: fields.len(),
        });
    }
    let mut features = Vec::with_capacity(FEATURE_COUNT);
    for (idx, raw) in fields[..FEATURE_COUNT].iter().enumerate() {
        if CATEGORICAL_FEATURES.contains(&idx) {
            features.push(FeatureValue::Categorical(raw.to_string()));
        } else {
            let v: f64 = raw.parse().map_err(|_| ClassifierError::InvalidNumber {
                line,
                field: idx,
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(ClassifierError::InvalidNumber {
                    line,
                    field: idx,
                    value: raw.to_string(),
                });
            }
            features.push(FeatureValue::Numeric(v));
        }
    }
    let label = fields[FEATURE_COUNT].trim_end_matches('.');
    if label.is_empty() {
        return Err(ClassifierError::EmptyLabel { line });
    }
    let difficulty = match fields.get(FEATURE_COUNT + 1) {
        Some(raw) => Some(raw.parse().map_err(|_| ClassifierError::InvalidDifficulty {
            line,
            value: raw.to_string(),
        })?),
        None => None,
    };
    Ok(FeatureRecord {
        features,
        label: label.to_string(),
        difficulty,
    })
}

/// Parses every non-blank line, stopping at the first malformed one.
pub fn parse_records(text: &str) -> Result<Vec<FeatureRecord>, ClassifierError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(l, i + 1))
        .collect()
}

/// Parses every non-blank line, collecting malformed ones instead of stopping.
pub fn parse_records_lenient(text: &str) -> (Vec<FeatureRecord>, Vec<ClassifierError>) {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (i, l) in text.lines().enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        match parse_line(l, i + 1) {
            Ok(r) => records.push(r),
            Err(e) => errors.push(e),
        }
    }
    (records, errors)
}

/// Keeps normal traffic and attacks whose label is in `dos_labels`.
pub fn filter_dos_with(records: Vec<FeatureRecord>, dos_labels: &[&str]) -> Vec<FeatureRecord> {
    records
        .into_iter()
        .filter(|r| r.label == "normal" || dos_labels.contains(&r.label.as_str()))
        .collect()
}

/// [`filter_dos_with`] using [`DOS_LABELS`].
pub fn filter_dos(records: Vec<FeatureRecord>) -> Vec<FeatureRecord> {
    filter_dos_with(records, &DOS_LABELS)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct TrainConfig {
    /// Equal-width bins per numeric feature.
    pub bins: usize,
    /// Feature indices left out of the likelihood.
    pub exclude: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            bins: 10,
            exclude: Vec::new(),
        }
    }
}

/// Laplace-smoothed likelihood table for one feature.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FeatureTable {
    Categorical {
        attack: BTreeMap<String, usize>,
        normal: BTreeMap<String, usize>,
        /// Distinct values seen in training across both classes.
        support: usize,
    },
    Numeric {
        min: f64,
        max: f64,
        attack: Vec<usize>,
        normal: Vec<usize>,
    },
}

impl FeatureTable {
    /// `P(value | class)` with add-one smoothing. Values never seen in
    /// training get the smoothing floor; numeric values outside the training
    /// range fall into the nearest edge bin.
    pub fn probability(&self, value: &FeatureValue, class: Class, class_total: usize) -> f64 {
        match self {
            Self::Categorical {
                attack,
                normal,
                support,
            } => {
                let table = if class == Class::Attack { attack } else { normal };
                let count = match value {
                    FeatureValue::Categorical(s) => table.get(s).copied().unwrap_or(0),
                    FeatureValue::Numeric(_) => 0,
                };
                (count + 1) as f64 / (class_total + support) as f64
            }
            Self::Numeric {
                min,
                max,
                attack,
                normal,
            } => {
                let table = if class == Class::Attack { attack } else { normal };
                let count = match value {
                    FeatureValue::Numeric(v) => table[bin_index(*v, *min, *max, table.len())],
                    FeatureValue::Categorical(_) => 0,
                };
                (count + 1) as f64 / (class_total + table.len()) as f64
            }
        }
    }
}

fn bin_index(v: f64, min: f64, max: f64, bins: usize) -> usize {
    if max <= min || v <= min {
        return 0;
    }
    let pos = ((v - min) / (max - min) * bins as f64) as usize;
    pos.min(bins - 1)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NaiveBayesModel {
    /// Feature index and its table, for every feature in use.
    pub tables: Vec<(usize, FeatureTable)>,
    pub attack_count: usize,
    pub normal_count: usize,
}

/// Trains per-feature tables from labeled records.
pub fn train(records: &[FeatureRecord], cfg: &TrainConfig) -> Result<NaiveBayesModel, ClassifierError> {
    if cfg.bins == 0 {
        return Err(ClassifierError::InvalidConfig("bins must be at least 1".into()));
    }
    if let Some(&bad) = cfg.exclude.iter().find(|&&f| f >= FEATURE_COUNT) {
        return Err(ClassifierError::InvalidConfig(format!("no feature with index {bad}")));
    }
    let attack_count = records.iter().filter(|r| r.class() == Class::Attack).count();
    let normal_count = records.len() - attack_count;
    for (count, class) in [(attack_count, Class::Attack), (normal_count, Class::Normal)] {
        if count == 0 {
            return Err(ClassifierError::MissingClass(class));
        }
    }

    let mut tables = Vec::new();
    for f in (0..FEATURE_COUNT).filter(|f| !cfg.exclude.contains(f)) {
        let table = if CATEGORICAL_FEATURES.contains(&f) {
            let mut attack = BTreeMap::new();
            let mut normal = BTreeMap::new();
            for r in records {
                if let FeatureValue::Categorical(s) = &r.features[f] {
                    let side = if r.class() == Class::Attack { &mut attack } else { &mut normal };
                    *side.entry(s.clone()).or_insert(0) += 1;
                }
            }
            let support = attack.keys().chain(normal.keys()).collect::<alloc::collections::BTreeSet<_>>().len();
            FeatureTable::Categorical {
                attack,
                normal,
                support,
            }
        } else {
            let values = records.iter().filter_map(|r| match r.features[f] {
                FeatureValue::Numeric(v) => Some(v),
                FeatureValue::Categorical(_) => None,
            });
            let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let (min, max) = if min.is_finite() { (min, max) } else { (0.0, 0.0) };
            let mut attack = vec![0; cfg.bins];
            let mut normal = vec![0; cfg.bins];
            for r in records {
                if let FeatureValue::Numeric(v) = r.features[f] {
                    let side = if r.class() == Class::Attack { &mut attack } else { &mut normal };
                    side[bin_index(v, min, max, cfg.bins)] += 1;
                }
            }
            FeatureTable::Numeric {
                min,
                max,
                attack,
                normal,
            }
        };
        tables.push((f, table));
    }
    Ok(NaiveBayesModel {
        tables,
        attack_count,
        normal_count,
    })
}

/// Log-likelihoods of one record under each hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LikelihoodPair {
    pub log_pa: f64,
    pub log_pn: f64,
}

impl NaiveBayesModel {
    fn total(&self, class: Class) -> usize {
        match class {
            Class::Attack => self.attack_count,
            Class::Normal => self.normal_count,
        }
    }

    /// Per-feature `P(o_j | class)` in table order.
    pub fn feature_probabilities(&self, record: &FeatureRecord, class: Class) -> Vec<f64> {
        self.tables
            .iter()
            .map(|(f, t)| t.probability(&record.features[*f], class, self.total(class)))
            .collect()
    }

    pub fn log_likelihoods(&self, record: &FeatureRecord) -> LikelihoodPair {
        let log_sum = |class| {
            self.feature_probabilities(record, class)
                .into_iter()
                .map(libm::log)
                .sum::<f64>()
        };
        LikelihoodPair {
            log_pa: log_sum(Class::Attack),
            log_pn: log_sum(Class::Normal),
        }
    }

    /// Class with the larger likelihood; ties go to normal.
    pub fn classify(&self, record: &FeatureRecord) -> Class {
        let p = self.log_likelihoods(record);
        if p.log_pa > p.log_pn {
            Class::Attack
        } else {
            Class::Normal
        }
    }
}

pub fn log_likelihoods(model: &NaiveBayesModel, record: &FeatureRecord) -> LikelihoodPair {
    model.log_likelihoods(record)
}

/// Range synthetic log-likelihoods are drawn from.
pub const SYNTHETIC_RANGE: (f64, f64) = (-55.0, -20.0);

/// Dataset-free likelihood source.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct SyntheticConfig {
    pub margin_min: f64,
    pub margin_max: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            margin_min: 1.0,
            margin_max: 10.0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let span = SYNTHETIC_RANGE.1 - SYNTHETIC_RANGE.0;
        if !(self.margin_min > 0.0 && self.margin_min <= self.margin_max && self.margin_max < span) {
            return Err(ClassifierError::InvalidConfig(format!(
                "synthetic margins need 0 < min <= max < {span}"
            )));
        }
        Ok(())
    }

    /// A pair in the synthetic range whose ordering matches `truth`, separated
    /// by a margin drawn uniformly from `[margin_min, margin_max]`.
    pub fn draw<R: Rng + ?Sized>(&self, truth: Class, rng: &mut R) -> LikelihoodPair {
        let (lo, hi) = SYNTHETIC_RANGE;
        let margin = if self.margin_max > self.margin_min {
            rng.random_range(self.margin_min..=self.margin_max)
        } else {
            self.margin_min
        };
        let low = rng.random_range(lo..=hi - margin);
        let high = (low + margin).min(hi);
        match truth {
            Class::Attack => LikelihoodPair {
                log_pa: high,
                log_pn: low,
            },
            Class::Normal => LikelihoodPair {
                log_pa: low,
                log_pn: high,
            },
        }
    }
}

/// One synthetic pair with the default margins, reproducible per seed.
pub fn synthetic_pair(truth: Class, seed: u64) -> LikelihoodPair {
    SyntheticConfig::default().draw(truth, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::string::String;

    fn line(protocol: &str, service: &str, flag: &str, src: f64, count: f64, label: &str) -> String {
        let mut fields: Vec<String> = (0..FEATURE_COUNT).map(|_| String::from("0")).collect();
        fields[1] = protocol.into();
        fields[2] = service.into();
        fields[3] = flag.into();
        fields[4] = format!("{src}");
        fields[22] = format!("{count}");
        fields.push(label.into());
        fields.join(",")
    }

    fn record(protocol: &str, service: &str, flag: &str, src: f64, count: f64, label: &str) -> FeatureRecord {
        parse_line(&line(protocol, service, flag, src, count, label), 1).unwrap()
    }

    #[test]
    fn parses_nsl_kdd_line() {
        let text = "0,tcp,http,SF,181,5450,0,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,8,8,0.00,0.00,0.00,0.00,1.00,0.00,0.00,9,9,1.00,0.00,0.11,0.00,0.00,0.00,0.00,0.00,normal,21";
        let r = parse_line(text, 1).unwrap();
        assert_eq!(r.label, "normal");
        assert_eq!(r.difficulty, Some(21));
        assert_eq!(r.features.len(), FEATURE_COUNT);
        assert_eq!(r.features[1], FeatureValue::Categorical("tcp".into()));
        assert_eq!(r.features[2], FeatureValue::Categorical("http".into()));
        assert_eq!(r.features[4], FeatureValue::Numeric(181.0));
        assert_eq!(r.features[5], FeatureValue::Numeric(5450.0));
        assert_eq!(r.features[35], FeatureValue::Numeric(0.11));
        assert_eq!(r.class(), Class::Normal);

        let no_difficulty = text.rsplit_once(',').unwrap().0;
        assert_eq!(parse_line(no_difficulty, 1).unwrap().difficulty, None);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let good = line("tcp", "http", "SF", 1.0, 1.0, "normal");
        let text = std::format!("{good}\n0,1,2,3,4,5,6,7,8,9,10,11\n");
        assert_eq!(
            parse_records(&text),
            Err(ClassifierError::FieldCount { line: 2, found: 12 })
        );
        let bad_number = good.replacen("0,tcp", "x,tcp", 1);
        assert!(matches!(
            parse_records(&bad_number),
            Err(ClassifierError::InvalidNumber { line: 1, field: 0, .. })
        ));
        let (ok, errs) = parse_records_lenient(&text);
        assert_eq!((ok.len(), errs.len()), (1, 1));
        assert!(parse_records("").unwrap().is_empty());
    }

    #[test]
    fn dos_filter() {
        let recs = std::vec![
            record("tcp", "private", "S0", 0.0, 100.0, "neptune"),
            record("icmp", "eco_i", "SF", 8.0, 1.0, "ipsweep"),
            record("tcp", "http", "SF", 200.0, 2.0, "normal"),
            record("icmp", "ecr_i", "SF", 1032.0, 500.0, "smurf"),
        ];
        let kept: Vec<String> = filter_dos(recs).into_iter().map(|r| r.label).collect();
        assert_eq!(kept, ["neptune", "normal", "smurf"]);
    }

    #[test]
    fn laplace_smoothing_on_categorical_counts() {
        let mut recs = Vec::new();
        for proto in ["tcp", "tcp", "tcp", "udp"] {
            recs.push(record(proto, "private", "S0", 0.0, 1.0, "neptune"));
        }
        recs.push(record("tcp", "http", "SF", 10.0, 1.0, "normal"));
        let model = train(&recs, &TrainConfig::default()).unwrap();
        let (_, protocol) = &model.tables[1];
        let p = protocol.probability(&FeatureValue::Categorical("tcp".into()), Class::Attack, model.attack_count);
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
        let unseen = protocol.probability(&FeatureValue::Categorical("icmp".into()), Class::Attack, 4);
        assert!((unseen - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn single_record_classes_get_maximal_probability() {
        let recs = std::vec![
            record("tcp", "private", "S0", 0.0, 100.0, "neptune"),
            record("udp", "domain_u", "SF", 40.0, 2.0, "normal"),
        ];
        let model = train(&recs, &TrainConfig::default()).unwrap();
        for (f, table) in &model.tables {
            let own = table.probability(&recs[0].features[*f], Class::Attack, 1);
            for other in [FeatureValue::Categorical("zzz".into()), FeatureValue::Numeric(1e9)] {
                assert!(own >= table.probability(&other, Class::Attack, 1));
            }
        }
        let pair = model.log_likelihoods(&recs[1]);
        assert!(pair.log_pn > pair.log_pa);
    }

    #[test]
    fn log_likelihood_is_log_of_product() {
        let recs: Vec<FeatureRecord> = (0..40)
            .map(|k| {
                let kf = k as f64;
                if k % 2 == 0 {
                    record("tcp", "private", "S0", kf, 90.0 + kf, "neptune")
                } else {
                    record(["tcp", "udp"][k % 4 / 2], "http", "SF", 100.0 * kf, 3.0, "normal")
                }
            })
            .collect();
        // keep eight features so the explicit product stays well inside f64 range
        let cfg = TrainConfig {
            bins: 10,
            exclude: (8..FEATURE_COUNT).collect(),
        };
        let model = train(&recs, &cfg).unwrap();
        for r in &recs {
            for class in [Class::Attack, Class::Normal] {
                let product: f64 = model.feature_probabilities(r, class).iter().product();
                let pair = model.log_likelihoods(r);
                let got = if class == Class::Attack { pair.log_pa } else { pair.log_pn };
                let want = libm::log(product);
                assert!((got - want).abs() <= 1e-12 * want.abs(), "{got} vs {want}");
            }
        }
    }

    #[test]
    fn retraining_is_deterministic_and_totals_are_finite() {
        let recs = std::vec![
            record("tcp", "private", "S0", 0.0, 100.0, "neptune"),
            record("tcp", "http", "SF", 300.0, 2.0, "normal"),
            record("icmp", "ecr_i", "SF", 1032.0, 511.0, "smurf"),
        ];
        let a = train(&recs, &TrainConfig::default()).unwrap();
        assert_eq!(a, train(&recs, &TrainConfig::default()).unwrap());
        let weird = record("igmp", "nothing", "OTH", -5e12, 1e12, "normal");
        let p = a.log_likelihoods(&weird);
        assert!(p.log_pa.is_finite() && p.log_pn.is_finite());
        assert!(p.log_pa <= 0.0 && p.log_pn <= 0.0);
    }

    #[test]
    fn training_requires_both_classes() {
        let only_normal = std::vec![record("tcp", "http", "SF", 1.0, 1.0, "normal")];
        assert_eq!(
            train(&only_normal, &TrainConfig::default()),
            Err(ClassifierError::MissingClass(Class::Attack))
        );
    }

    #[test]
    fn beats_chance_on_held_out_records() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut make = |attack: bool| {
            let noisy = rng.random_bool(0.2);
            let (p, s, f) = if attack != noisy {
                ("tcp", "private", "S0")
            } else {
                ("tcp", "http", "SF")
            };
            let src = if attack { rng.random_range(0.0..50.0) } else { rng.random_range(0.0..5000.0) };
            let count = if attack { rng.random_range(50.0..511.0) } else { rng.random_range(0.0..80.0) };
            record(p, s, f, src, count, if attack { "neptune" } else { "normal" })
        };
        let data: Vec<FeatureRecord> = (0..600).map(|k| make(k % 2 == 0)).collect();
        let (train_set, held_out) = data.split_at(400);
        let model = train(train_set, &TrainConfig::default()).unwrap();
        let hits = held_out.iter().filter(|r| model.classify(r) == r.class()).count();
        assert!(hits as f64 / held_out.len() as f64 > 0.6, "{hits}/200");
    }

    #[test]
    fn synthetic_pairs_respect_contract() {
        for seed in 0..10_000u64 {
            let truth = if seed % 2 == 0 { Class::Attack } else { Class::Normal };
            let p = synthetic_pair(truth, seed);
            for v in [p.log_pa, p.log_pn] {
                assert!((-55.0..=-20.0).contains(&v), "{v}");
            }
            match truth {
                Class::Attack => assert!(p.log_pa > p.log_pn),
                Class::Normal => assert!(p.log_pn > p.log_pa),
            }
        }
        assert_eq!(synthetic_pair(Class::Attack, 7), synthetic_pair(Class::Attack, 7));
    }
}
