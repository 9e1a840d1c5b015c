//! The eight scoring algorithms behind one train/predict contract.
//!
//! Training is deterministic: every stochastic choice (bootstrap resamples,
//! feature subsets, network initialization, batch shuffling) derives from the
//! spec's seed through a fixed mixing function, and ensemble reductions are
//! summed in tree-index order, so results do not depend on thread count.

mod boost;
mod linear;
mod mlp;
mod survival;
mod tree;

pub use boost::{BoostedModel, GrowthStrategy};
pub use linear::{lasso_kkt_violation, LinearModel, Penalty};
pub use mlp::{MlpLayer, MlpNet};
pub use survival::{log_rank_statistic, StepFunction, SurvivalForestModel};
pub use tree::{train_cart, CartParams, TreeNode};

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Mixes a master seed with a salt into an independent stream seed
/// (splitmix64 finalizer). Parallel workers seed their own generators from
/// this, which keeps results independent of scheduling.
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(z)) without overflow.
pub(crate) fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Survival response for one row: years from the observation to the firm's
/// last observed year plus one, and whether the firm went bankrupt then.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPair {
    pub duration: f64,
    pub event: bool,
}

/// Per-feature location/scale computed on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardization {
    /// Means and standard deviations per column, skipping missing values.
    /// Constant (or empty) columns get unit scale so they pass through
    /// centered.
    pub fn fit(x: &Array2<f64>) -> Standardization {
        let p = x.ncols();
        let mut means = vec![0.0; p];
        let mut sds = vec![1.0; p];
        for j in 0..p {
            let col = x.column(j);
            let values: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
            if values.is_empty() {
                continue;
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            means[j] = mean;
            if values.len() > 1 {
                let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                let sd = (ss / (n - 1.0)).sqrt();
                if sd > 0.0 {
                    sds[j] = sd;
                }
            }
        }
        Standardization { means, sds }
    }

    pub fn apply_row(&self, row: ArrayView1<f64>) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| (v - self.means[j]) / self.sds[j])
            .collect()
    }
}

/// Rows ready for training or scoring: features in schema order, labels,
/// optional survival pairs, and the training standardization statistics.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<u8>,
    pub survival: Option<Vec<SurvivalPair>>,
    pub feature_names: Vec<String>,
    pub standardization: Standardization,
}

impl Dataset {
    /// Builds a training dataset; standardization is fitted on these rows.
    pub fn from_training(
        x: Array2<f64>,
        y: Vec<u8>,
        survival: Option<Vec<SurvivalPair>>,
        feature_names: Vec<String>,
    ) -> Result<Dataset> {
        let standardization = Standardization::fit(&x);
        Dataset::with_standardization(x, y, survival, feature_names, standardization)
    }

    /// Builds an evaluation dataset carrying the training statistics.
    pub fn with_standardization(
        x: Array2<f64>,
        y: Vec<u8>,
        survival: Option<Vec<SurvivalPair>>,
        feature_names: Vec<String>,
        standardization: Standardization,
    ) -> Result<Dataset> {
        if x.nrows() != y.len() {
            return Err(Error::Data(format!(
                "{} rows of features vs {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if x.ncols() != feature_names.len() {
            return Err(Error::Data(format!(
                "{} feature columns vs {} names",
                x.ncols(),
                feature_names.len()
            )));
        }
        if let Some(surv) = &survival {
            if surv.len() != y.len() {
                return Err(Error::Data("survival pairs do not match row count".into()));
            }
            if surv.iter().any(|s| !(s.duration > 0.0) || !s.duration.is_finite()) {
                return Err(Error::Data("survival durations must be positive".into()));
            }
        }
        if y.iter().any(|&v| v > 1) {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        if x.iter().any(|v| v.is_infinite()) {
            return Err(Error::Data("infinite feature value".into()));
        }
        if standardization.means.len() != x.ncols() {
            return Err(Error::Data("standardization width mismatch".into()));
        }
        Ok(Dataset {
            x,
            y,
            survival,
            feature_names,
            standardization,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn has_missing(&self) -> bool {
        self.x.iter().any(|v| v.is_nan())
    }

    pub fn base_rate(&self) -> f64 {
        self.y.iter().map(|&v| f64::from(v)).sum::<f64>() / self.y.len() as f64
    }

    pub fn fingerprint(&self) -> u64 {
        schema_fingerprint(&self.feature_names)
    }
}

/// Stable 64-bit digest of the ordered feature names.
pub fn schema_fingerprint(names: &[String]) -> u64 {
    let mut hasher = Sha256::new();
    for name in names {
        hasher.update(name.as_bytes());
        hasher.update([0x1f]);
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// The eight algorithm families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Lasso,
    Ridge,
    RandomForest,
    XgbLike,
    LgbmLike,
    SurvivalForest,
    Nn3,
    Nn5,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 8] = [
        ModelFamily::Lasso,
        ModelFamily::Ridge,
        ModelFamily::RandomForest,
        ModelFamily::XgbLike,
        ModelFamily::LgbmLike,
        ModelFamily::SurvivalForest,
        ModelFamily::Nn3,
        ModelFamily::Nn5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Lasso => "lasso",
            ModelFamily::Ridge => "ridge",
            ModelFamily::RandomForest => "random_forest",
            ModelFamily::XgbLike => "xgb_like",
            ModelFamily::LgbmLike => "lgbm_like",
            ModelFamily::SurvivalForest => "survival_forest",
            ModelFamily::Nn3 => "nn3",
            ModelFamily::Nn5 => "nn5",
        }
    }

    /// Tree families route missing values left instead of rejecting them.
    pub fn tolerates_missing(self) -> bool {
        matches!(
            self,
            ModelFamily::RandomForest
                | ModelFamily::XgbLike
                | ModelFamily::LgbmLike
                | ModelFamily::SurvivalForest
        )
    }

    pub fn needs_survival(self) -> bool {
        self == ModelFamily::SurvivalForest
    }

    /// Valid hyperparameter names and their defaults.
    fn parameter_defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            ModelFamily::Lasso | ModelFamily::Ridge => &[("lambda", 0.0)],
            ModelFamily::RandomForest => &[
                ("trees", 100.0),
                ("mtry", 0.0),
                ("max_depth", 0.0),
                ("min_leaf", 1.0),
                ("bootstrap", 1.0),
            ],
            ModelFamily::SurvivalForest => &[("trees", 100.0), ("mtry", 0.0), ("min_leaf", 15.0)],
            ModelFamily::XgbLike => &[
                ("rounds", 100.0),
                ("learning_rate", 0.1),
                ("max_depth", 3.0),
                ("l2_reg", 1.0),
            ],
            ModelFamily::LgbmLike => &[
                ("rounds", 100.0),
                ("learning_rate", 0.1),
                ("max_leaves", 15.0),
                ("l2_reg", 1.0),
            ],
            ModelFamily::Nn3 | ModelFamily::Nn5 => &[
                ("epochs", 30.0),
                ("learning_rate", 0.01),
                ("batch_size", 64.0),
            ],
        }
    }

    /// Hidden layer widths for the network families.
    pub fn hidden_layers(self) -> Option<&'static [usize]> {
        match self {
            ModelFamily::Nn3 => Some(&[32, 16, 8]),
            ModelFamily::Nn5 => Some(&[64, 32, 16, 8, 4]),
            _ => None,
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelFamily> {
        ModelFamily::ALL
            .iter()
            .find(|f| f.as_str() == s)
            .copied()
            .ok_or_else(|| Error::Manifest(format!("unknown model family `{s}`")))
    }
}

/// A concrete training configuration: family, hyperparameters, seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, seed: u64) -> ModelSpec {
        ModelSpec {
            family,
            params: BTreeMap::new(),
            seed,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> ModelSpec {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let allowed = self.family.parameter_defaults();
        for name in self.params.keys() {
            if !allowed.iter().any(|(n, _)| n == name) {
                return Err(Error::Manifest(format!(
                    "hyperparameter `{name}` is not valid for {}",
                    self.family.as_str()
                )));
            }
        }
        for (name, value) in &self.params {
            if !value.is_finite() {
                return Err(Error::Manifest(format!("hyperparameter `{name}` not finite")));
            }
        }
        if let Some(lr) = self.params.get("learning_rate") {
            if !(*lr > 0.0 && *lr <= 1.0) {
                return Err(Error::Manifest(format!(
                    "learning_rate {lr} outside (0, 1]"
                )));
            }
        }
        if let Some(lambda) = self.params.get("lambda") {
            if *lambda < 0.0 {
                return Err(Error::Manifest(format!("lambda {lambda} negative")));
            }
        }
        for count_key in ["trees", "rounds", "epochs", "batch_size", "min_leaf"] {
            if let Some(v) = self.params.get(count_key) {
                if *v < 1.0 {
                    return Err(Error::Manifest(format!("{count_key} {v} below 1")));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> f64 {
        if let Some(v) = self.params.get(name) {
            return *v;
        }
        self.family
            .parameter_defaults()
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, d)| *d)
            .unwrap_or_else(|| panic!("unknown parameter `{name}` for {}", self.family.as_str()))
    }

    pub fn get_usize(&self, name: &str) -> usize {
        self.get(name).round().max(0.0) as usize
    }

    /// mtry resolution: 0 means ceil(sqrt(p)).
    pub fn resolve_mtry(&self, p: usize) -> usize {
        let raw = self.get_usize("mtry");
        if raw == 0 {
            (p as f64).sqrt().ceil() as usize
        } else {
            raw.min(p)
        }
    }
}

/// Fitted scorer for any family. Immutable; prediction checks the schema
/// fingerprint of incoming data against the training schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    pub fingerprint: u64,
    pub artifact: ModelArtifact,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ModelArtifact {
    Linear(LinearModel),
    Forest(ForestModel),
    Survival(SurvivalForestModel),
    Boosted(BoostedModel),
    Mlp(MlpNet),
}

/// Random forest artifact: classification trees averaged in index order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode<f64>>,
}

/// Trains a model per the spec.
pub fn train(spec: &ModelSpec, data: &Dataset) -> Result<TrainedModel> {
    spec.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::Data("empty training data".into()));
    }
    if !spec.family.tolerates_missing() && data.has_missing() {
        return Err(Error::Data(format!(
            "{} requires fully imputed inputs but the data has missing values",
            spec.family.as_str()
        )));
    }
    if spec.family.needs_survival() && data.survival.is_none() {
        return Err(Error::Data("survival_forest needs survival pairs".into()));
    }
    let artifact = match spec.family {
        ModelFamily::Lasso => ModelArtifact::Linear(linear::train_penalized_hazard(
            data,
            Penalty::L1,
            spec.get("lambda"),
        )?),
        ModelFamily::Ridge => ModelArtifact::Linear(linear::train_penalized_hazard(
            data,
            Penalty::L2,
            spec.get("lambda"),
        )?),
        ModelFamily::RandomForest => ModelArtifact::Forest(forest::train_random_forest(
            data,
            spec.get_usize("trees"),
            spec.resolve_mtry(data.n_features()),
            match spec.get_usize("max_depth") {
                0 => None,
                d => Some(d),
            },
            spec.get_usize("min_leaf"),
            spec.get("bootstrap") != 0.0,
            spec.seed,
        )?),
        ModelFamily::SurvivalForest => ModelArtifact::Survival(survival::train_survival_forest(
            data,
            spec.get_usize("trees"),
            spec.resolve_mtry(data.n_features()),
            spec.get_usize("min_leaf"),
            spec.seed,
        )?),
        ModelFamily::XgbLike => ModelArtifact::Boosted(boost::train_gbt(
            data,
            GrowthStrategy::LevelWise {
                max_depth: spec.get_usize("max_depth").max(1),
            },
            spec.get_usize("rounds"),
            spec.get("learning_rate"),
            spec.get("l2_reg"),
        )?),
        ModelFamily::LgbmLike => ModelArtifact::Boosted(boost::train_gbt(
            data,
            GrowthStrategy::LeafWise {
                max_leaves: spec.get_usize("max_leaves").max(2),
            },
            spec.get_usize("rounds"),
            spec.get("learning_rate"),
            spec.get("l2_reg"),
        )?),
        ModelFamily::Nn3 | ModelFamily::Nn5 => ModelArtifact::Mlp(mlp::train_mlp(
            data,
            spec.family.hidden_layers().unwrap(),
            spec.get_usize("epochs"),
            spec.get("learning_rate"),
            spec.get_usize("batch_size").max(1),
            spec.seed,
        )?),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        feature_names: data.feature_names.clone(),
        fingerprint: data.fingerprint(),
        artifact,
    })
}

impl TrainedModel {
    /// Scores every row; higher means riskier. Probability-scaled for all
    /// families except the survival forest, whose score is an ensemble
    /// cumulative hazard (a monotone risk ranking, not a probability).
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.fingerprint() != self.fingerprint {
            return Err(Error::Data(format!(
                "schema fingerprint mismatch: model trained on {} features ({:016x}), input has {} ({:016x})",
                self.feature_names.len(),
                self.fingerprint,
                data.feature_names.len(),
                data.fingerprint()
            )));
        }
        if !self.spec.family.tolerates_missing() && data.has_missing() {
            return Err(Error::Data(format!(
                "{} cannot score rows with missing features",
                self.spec.family.as_str()
            )));
        }
        let scores = match &self.artifact {
            ModelArtifact::Linear(m) => m.predict(&data.x),
            ModelArtifact::Forest(m) => forest::predict(m, &data.x),
            ModelArtifact::Survival(m) => m.predict(&data.x),
            ModelArtifact::Boosted(m) => m.predict(&data.x),
            ModelArtifact::Mlp(m) => m.predict(&data.x),
        };
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numeric("non-finite score produced".into()));
        }
        Ok(scores)
    }

    /// Serializes as a versioned self-describing JSON container.
    pub fn save<W: std::io::Write>(&self, out: W) -> Result<()> {
        let container = serde_json::json!({
            "format": "distress-model",
            "format_version": 1,
            "model": self,
        });
        serde_json::to_writer(out, &container)
            .map_err(|e| Error::Data(format!("serialize model: {e}")))
    }

    pub fn load<R: std::io::Read>(input: R) -> Result<TrainedModel> {
        let container: serde_json::Value =
            serde_json::from_reader(input).map_err(|e| Error::Data(format!("parse model: {e}")))?;
        if container["format"] != "distress-model" {
            return Err(Error::Data("not a model container".into()));
        }
        if container["format_version"] != 1 {
            return Err(Error::Data(format!(
                "unsupported model format version {}",
                container["format_version"]
            )));
        }
        serde_json::from_value(container["model"].clone())
            .map_err(|e| Error::Data(format!("decode model: {e}")))
    }
}

pub mod forest {
    //! Bagged classification trees.

    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rayon::prelude::*;

    use super::tree::{train_cart_on_rows, CartParams, TreeNode};
    use super::{mix_seed, Dataset, ForestModel};
    use crate::error::Result;

    /// Fits `trees` CART trees on bootstrap resamples; the forest score is
    /// the plain average of leaf fractions, summed in tree-index order.
    pub fn train_random_forest(
        data: &Dataset,
        trees: usize,
        mtry: usize,
        max_depth: Option<usize>,
        min_leaf: usize,
        bootstrap: bool,
        seed: u64,
    ) -> Result<ForestModel> {
        let n = data.n_rows();
        let params = CartParams {
            max_depth,
            min_leaf,
            mtry,
        };
        let fitted: Vec<TreeNode<f64>> = (0..trees)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, b as u64));
                let rows: Vec<usize> = if bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                train_cart_on_rows(&data.x, &data.y, &rows, &params, &mut rng)
            })
            .collect();
        Ok(ForestModel { trees: fitted })
    }

    pub fn predict(model: &ForestModel, x: &Array2<f64>) -> Vec<f64> {
        let b = model.trees.len() as f64;
        (0..x.nrows())
            .map(|i| {
                let row = x.row(i);
                model.trees.iter().map(|t| t.evaluate(row)).sum::<f64>() / b
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy_dataset() -> Dataset {
        let x = array![[0.0, 1.0], [1.0, 0.5], [2.0, -1.0], [3.0, 0.0]];
        Dataset::from_training(x, vec![0, 0, 1, 1], None, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn fingerprint_is_order_sensitive_and_stable() {
        let a = schema_fingerprint(&["x".into(), "y".into()]);
        let b = schema_fingerprint(&["y".into(), "x".into()]);
        assert_ne!(a, b);
        assert_eq!(a, schema_fingerprint(&["x".into(), "y".into()]));
    }

    #[test]
    fn predict_rejects_mismatched_schema() {
        let data = toy_dataset();
        let spec = ModelSpec::new(ModelFamily::RandomForest, 1).with("trees", 3.0);
        let model = train(&spec, &data).unwrap();
        let x = array![[0.0, 1.0]];
        let other = Dataset::from_training(x, vec![0], None, vec!["a".into(), "c".into()]).unwrap();
        assert!(model.predict(&other).is_err());
    }

    #[test]
    fn unknown_hyperparameter_rejected() {
        let spec = ModelSpec::new(ModelFamily::Lasso, 0).with("depth", 3.0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn linear_family_rejects_missing_values() {
        let x = array![[f64::NAN, 1.0], [1.0, 0.5], [2.0, -1.0], [3.0, 0.0]];
        let data =
            Dataset::from_training(x, vec![0, 0, 1, 1], None, vec!["a".into(), "b".into()])
                .unwrap();
        let spec = ModelSpec::new(ModelFamily::Lasso, 0);
        assert!(train(&spec, &data).is_err());
    }

    #[test]
    fn standardization_skips_missing_and_handles_constants() {
        let x = array![[1.0, 5.0], [f64::NAN, 5.0], [3.0, 5.0]];
        let stats = Standardization::fit(&x);
        assert_eq!(stats.means[0], 2.0);
        assert_eq!(stats.means[1], 5.0);
        assert_eq!(stats.sds[1], 1.0, "constant column keeps unit scale");
    }

    #[test]
    fn model_save_load_round_trips_predictions() {
        let data = toy_dataset();
        let spec = ModelSpec::new(ModelFamily::XgbLike, 3).with("rounds", 5.0);
        let model = train(&spec, &data).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let reloaded = TrainedModel::load(buf.as_slice()).unwrap();
        assert_eq!(model.predict(&data).unwrap(), reloaded.predict(&data).unwrap());
    }

    #[test]
    fn permuting_rows_permutes_scores() {
        let data = toy_dataset();
        let spec = ModelSpec::new(ModelFamily::Ridge, 0).with("lambda", 0.1);
        let model = train(&spec, &data).unwrap();
        let scores = model.predict(&data).unwrap();
        let xr = array![[3.0, 0.0], [2.0, -1.0], [1.0, 0.5], [0.0, 1.0]];
        let reversed = Dataset::with_standardization(
            xr,
            vec![1, 1, 0, 0],
            None,
            data.feature_names.clone(),
            data.standardization.clone(),
        )
        .unwrap();
        let rev_scores = model.predict(&reversed).unwrap();
        let mut expect = scores.clone();
        expect.reverse();
        assert_eq!(rev_scores, expect);
    }
}
