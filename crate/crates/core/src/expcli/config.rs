use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::tinynet::{FilterHyper, LatentHyper, RealOptimizerConfig};

/// The tunables of the latent-weight view, as config keys.
pub const LATENT_TUNABLES: [&str; 7] = [
    "latent.epsilon",
    "latent.epsilon_decay",
    "latent.w0_scale",
    "latent.gamma",
    "latent.lambda",
    "latent.scaling",
    "latent.clipping",
];

/// The tunables of the gradient-filtering view, as config keys.
pub const FILTERED_TUNABLES: [&str; 3] = ["filtered.alpha", "filtered.alpha_decay", "filtered.gamma"];

/// Every other accepted key, with a one-line description.
pub const RUN_KEYS: &[(&str, &str)] = &[
    ("experiment", "experiment kind"),
    ("view", "binary optimizer view: latent | filtered"),
    ("name", "prefix for run log names"),
    ("seed", "run seed"),
    ("out", "output directory"),
    ("jobs", "parallel runs within a sweep"),
    ("dataset.kind", "blobs | csv"),
    ("dataset.n_per_class", "blob samples per class"),
    ("dataset.n_classes", "blob classes"),
    ("dataset.dim", "blob feature dimension"),
    ("dataset.noise", "blob noise standard deviation"),
    ("dataset.seed", "blob generator seed"),
    ("dataset.path", "csv file"),
    ("dataset.label_column", "csv label column"),
    ("dataset.test_fraction", "trailing csv fraction used for testing"),
    ("train.hidden", "hidden widths; the first hidden layer is real, the rest binary"),
    ("train.epochs", "training epochs"),
    ("train.batch_size", "minibatch size"),
    ("real.lr", "learning rate of the real-valued parameters"),
    ("real.momentum", "SGD momentum of the real-valued parameters"),
    ("real.weight_decay", "weight decay of the real-valued parameters"),
    ("real.decay", "learning rate schedule of the real-valued parameters"),
    ("sweep.epsilons", "learning rates for lr-sensitivity"),
    ("sweep.alphas", "alphas for alpha-sweep"),
    ("sweep.scales", "scale factors for lr-vs-init"),
    ("trace.layer", "binary layer of the tracked weight"),
    ("trace.weight", "flat index of the tracked weight"),
    ("trace.epoch", "1-based epoch whose gradients are filtered"),
    ("trace.alpha", "discount of both filters applied to the trace"),
    ("trace.synthetic", "use a sinusoid plus white noise instead of training"),
    ("trace.steps", "synthetic stream length"),
    ("trace.amplitude", "synthetic sinusoid amplitude"),
    ("trace.period", "synthetic sinusoid period in steps"),
    ("trace.noise", "synthetic noise standard deviation"),
    ("equivalence.stream_steps", "steps of the random-stream comparison"),
    ("equivalence.stream_weights", "weights of the random-stream comparison"),
    ("hpsearch.trials", "trials per search"),
    ("hpsearch.repeats", "independent searches per view"),
    ("hpsearch.epochs", "training epochs per trial"),
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: expected {expected}")]
    Type { key: String, expected: &'static str },
    #[error("config key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Equivalence,
    FilterResponse,
    LrVsInit,
    LrSensitivity,
    AlphaSweep,
    AlphaDecay,
    HpSearch,
    Train,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Equivalence,
        ExperimentKind::FilterResponse,
        ExperimentKind::LrVsInit,
        ExperimentKind::LrSensitivity,
        ExperimentKind::AlphaSweep,
        ExperimentKind::AlphaDecay,
        ExperimentKind::HpSearch,
        ExperimentKind::Train,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Equivalence => "equivalence",
            ExperimentKind::FilterResponse => "filter-response",
            ExperimentKind::LrVsInit => "lr-vs-init",
            ExperimentKind::LrSensitivity => "lr-sensitivity",
            ExperimentKind::AlphaSweep => "alpha-sweep",
            ExperimentKind::AlphaDecay => "alpha-decay",
            ExperimentKind::HpSearch => "hpsearch",
            ExperimentKind::Train => "train",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Latent,
    Filtered,
}

impl View {
    pub fn as_str(self) -> &'static str {
        match self {
            View::Latent => "latent",
            View::Filtered => "filtered",
        }
    }

    /// Config keys that are hyperparameters of this view.
    pub fn tunables(self) -> &'static [&'static str] {
        match self {
            View::Latent => &LATENT_TUNABLES,
            View::Filtered => &FILTERED_TUNABLES,
        }
    }
}

impl FromStr for View {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "latent" => Ok(View::Latent),
            "filtered" => Ok(View::Filtered),
            other => Err(format!("unknown view `{other}` (expected latent or filtered)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Blobs {
        n_per_class: usize,
        n_classes: usize,
        dim: usize,
        noise: f64,
        seed: u64,
    },
    Csv {
        path: PathBuf,
        label_column: String,
        test_fraction: f64,
    },
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Blobs {
            n_per_class: 500,
            n_classes: 4,
            dim: 16,
            noise: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpec {
    pub layer: usize,
    pub weight: usize,
    pub epoch: usize,
    pub alpha: f64,
    pub synthetic: bool,
    pub steps: usize,
    pub amplitude: f64,
    pub period: f64,
    pub noise: f64,
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self {
            layer: 0,
            weight: 0,
            epoch: 1,
            alpha: 0.1,
            synthetic: false,
            steps: 1000,
            amplitude: 1.0,
            period: 200.0,
            noise: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub epsilons: Vec<f64>,
    pub alphas: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-2, 1e-1, 1.0, 10.0, 100.0],
            alphas: vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            scales: vec![1e-3, 1e-1, 1.0, 10.0, 1e3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpSearchSpec {
    pub trials: usize,
    pub repeats: usize,
    pub epochs: usize,
}

impl Default for HpSearchSpec {
    fn default() -> Self {
        Self {
            trials: 25,
            repeats: 4,
            epochs: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceSpec {
    pub stream_steps: usize,
    pub stream_weights: usize,
}

impl Default for EquivalenceSpec {
    fn default() -> Self {
        Self {
            stream_steps: 10_000,
            stream_weights: 1000,
        }
    }
}

/// Everything an experiment needs. `Default` is the desk-scale task with
/// the `train` experiment and the filtered view.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub view: View,
    pub name: Option<String>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub dataset: DatasetSpec,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub real: RealOptimizerConfig,
    pub latent: LatentHyper,
    pub filtered: FilterHyper,
    pub sweep: SweepSpec,
    pub trace: TraceSpec,
    pub equivalence: EquivalenceSpec,
    pub hpsearch: HpSearchSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Train,
            view: View::Filtered,
            name: None,
            seed: 0,
            out: None,
            jobs: 1,
            dataset: DatasetSpec::default(),
            hidden: vec![64, 64, 64],
            epochs: 50,
            batch_size: 64,
            real: RealOptimizerConfig::default(),
            latent: LatentHyper::default(),
            filtered: FilterHyper::default(),
            sweep: SweepSpec::default(),
            trace: TraceSpec::default(),
            equivalence: EquivalenceSpec::default(),
            hpsearch: HpSearchSpec::default(),
        }
    }
}

/// Whether `key` is accepted by the config parser.
pub fn is_known_key(key: &str) -> bool {
    LATENT_TUNABLES.contains(&key) || FILTERED_TUNABLES.contains(&key) || RUN_KEYS.iter().any(|(k, _)| *k == key)
}

#[derive(Debug, Clone)]
enum Value {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    List(Vec<Value>),
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Value>) -> Result<(), ConfigError> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out)?,
            other => {
                let v = convert(&key, other)?;
                out.insert(key, v);
            }
        }
    }
    Ok(())
}

fn convert(key: &str, v: toml::Value) -> Result<Value, ConfigError> {
    Ok(match v {
        toml::Value::String(s) => Value::Str(s),
        toml::Value::Integer(i) => Value::Int(i),
        toml::Value::Float(f) => Value::Float(f),
        toml::Value::Boolean(b) => Value::Bool(b),
        toml::Value::Array(a) => Value::List(a.into_iter().map(|x| convert(key, x)).collect::<Result<_, _>>()?),
        toml::Value::Datetime(_) | toml::Value::Table(_) => {
            return Err(ConfigError::Type {
                key: key.to_string(),
                expected: "a string, number, boolean or list",
            })
        }
    })
}

struct Fields(BTreeMap<String, Value>);

impl Fields {
    fn take(&mut self, key: &str) -> Option<(String, Value)> {
        self.0.remove_entry(key)
    }

    fn f64(&mut self, key: &str, slot: &mut f64) -> Result<(), ConfigError> {
        if let Some((k, v)) = self.take(key) {
            *slot = as_f64(&k, &v)?;
        }
        Ok(())
    }

    fn usize(&mut self, key: &str, slot: &mut usize) -> Result<(), ConfigError> {
        if let Some((k, v)) = self.take(key) {
            *slot = as_usize(&k, &v)?;
        }
        Ok(())
    }

    fn u64(&mut self, key: &str, slot: &mut u64) -> Result<(), ConfigError> {
        if let Some((k, v)) = self.take(key) {
            *slot = match v {
                Value::Int(i) if i >= 0 => i as u64,
                _ => return Err(ConfigError::Type { key: k, expected: "a non-negative integer" }),
            };
        }
        Ok(())
    }

    fn bool(&mut self, key: &str, slot: &mut bool) -> Result<(), ConfigError> {
        if let Some((k, v)) = self.take(key) {
            *slot = match v {
                Value::Bool(b) => b,
                Value::Str(s) if s == "on" => true,
                Value::Str(s) if s == "off" => false,
                _ => return Err(ConfigError::Type { key: k, expected: "a boolean" }),
            };
        }
        Ok(())
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((_, Value::Str(s))) => Ok(Some(s)),
            Some((k, _)) => Err(ConfigError::Type { key: k, expected: "a string" }),
        }
    }

    fn parsed<T: FromStr<Err = String>>(&mut self, key: &str, slot: &mut T) -> Result<(), ConfigError> {
        if let Some(s) = self.string(key)? {
            *slot = s.parse().map_err(|reason| ConfigError::Invalid { key: key.to_string(), reason })?;
        }
        Ok(())
    }

    fn f64_list(&mut self, key: &str, slot: &mut Vec<f64>) -> Result<(), ConfigError> {
        if let Some((k, v)) = self.take(key) {
            *slot = match v {
                Value::List(items) => items.iter().map(|x| as_f64(&k, x)).collect::<Result<_, _>>()?,
                _ => return Err(ConfigError::Type { key: k, expected: "a list of numbers" }),
            };
        }
        Ok(())
    }

    fn usize_list(&mut self, key: &str, slot: &mut Vec<usize>) -> Result<(), ConfigError> {
        if let Some((k, v)) = self.take(key) {
            *slot = match v {
                Value::List(items) => items.iter().map(|x| as_usize(&k, x)).collect::<Result<_, _>>()?,
                _ => return Err(ConfigError::Type { key: k, expected: "a list of integers" }),
            };
        }
        Ok(())
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Int(i) => Ok(*i as f64),
        _ => Err(ConfigError::Type { key: key.to_string(), expected: "a number" }),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize, ConfigError> {
    match v {
        Value::Int(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(ConfigError::Type { key: key.to_string(), expected: "a non-negative integer" }),
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines. Dotted keys and `[section]` headers are
    /// equivalent; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse()?;
        let mut flat = BTreeMap::new();
        flatten("", table, &mut flat)?;
        if let Some(key) = flat.keys().find(|k| !is_known_key(k)) {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        let mut f = Fields(flat);
        let mut c = ExperimentConfig::default();

        f.parsed("experiment", &mut c.experiment)?;
        f.parsed("view", &mut c.view)?;
        c.name = f.string("name")?;
        f.u64("seed", &mut c.seed)?;
        c.out = f.string("out")?.map(PathBuf::from);
        f.usize("jobs", &mut c.jobs)?;

        let kind = f.string("dataset.kind")?.unwrap_or_else(|| "blobs".into());
        c.dataset = match kind.as_str() {
            "blobs" => {
                let (mut n_per_class, mut n_classes, mut dim, mut noise, mut seed) = (500, 4, 16, 0.3, 0);
                f.usize("dataset.n_per_class", &mut n_per_class)?;
                f.usize("dataset.n_classes", &mut n_classes)?;
                f.usize("dataset.dim", &mut dim)?;
                f.f64("dataset.noise", &mut noise)?;
                f.u64("dataset.seed", &mut seed)?;
                DatasetSpec::Blobs { n_per_class, n_classes, dim, noise, seed }
            }
            "csv" => {
                let path = f.string("dataset.path")?.ok_or_else(|| invalid("dataset.path", "required for csv data"))?;
                let label_column = f.string("dataset.label_column")?.unwrap_or_else(|| "label".into());
                let mut test_fraction = 0.2;
                f.f64("dataset.test_fraction", &mut test_fraction)?;
                DatasetSpec::Csv { path: path.into(), label_column, test_fraction }
            }
            other => return Err(invalid("dataset.kind", format!("unknown dataset `{other}`"))),
        };

        f.usize_list("train.hidden", &mut c.hidden)?;
        f.usize("train.epochs", &mut c.epochs)?;
        f.usize("train.batch_size", &mut c.batch_size)?;
        f.f64("real.lr", &mut c.real.lr)?;
        f.f64("real.momentum", &mut c.real.momentum)?;
        f.f64("real.weight_decay", &mut c.real.weight_decay)?;
        f.parsed("real.decay", &mut c.real.decay)?;

        f.f64("latent.epsilon", &mut c.latent.epsilon)?;
        f.parsed("latent.epsilon_decay", &mut c.latent.epsilon_decay)?;
        f.f64("latent.w0_scale", &mut c.latent.w0_scale)?;
        f.f64("latent.gamma", &mut c.latent.gamma)?;
        f.f64("latent.lambda", &mut c.latent.lambda)?;
        f.bool("latent.scaling", &mut c.latent.scaling)?;
        f.bool("latent.clipping", &mut c.latent.clipping)?;

        f.f64("filtered.alpha", &mut c.filtered.alpha)?;
        f.parsed("filtered.alpha_decay", &mut c.filtered.alpha_decay)?;
        f.f64("filtered.gamma", &mut c.filtered.gamma)?;

        f.f64_list("sweep.epsilons", &mut c.sweep.epsilons)?;
        f.f64_list("sweep.alphas", &mut c.sweep.alphas)?;
        f.f64_list("sweep.scales", &mut c.sweep.scales)?;

        f.usize("trace.layer", &mut c.trace.layer)?;
        f.usize("trace.weight", &mut c.trace.weight)?;
        f.usize("trace.epoch", &mut c.trace.epoch)?;
        f.f64("trace.alpha", &mut c.trace.alpha)?;
        f.bool("trace.synthetic", &mut c.trace.synthetic)?;
        f.usize("trace.steps", &mut c.trace.steps)?;
        f.f64("trace.amplitude", &mut c.trace.amplitude)?;
        f.f64("trace.period", &mut c.trace.period)?;
        f.f64("trace.noise", &mut c.trace.noise)?;

        f.usize("equivalence.stream_steps", &mut c.equivalence.stream_steps)?;
        f.usize("equivalence.stream_weights", &mut c.equivalence.stream_weights)?;

        f.usize("hpsearch.trials", &mut c.hpsearch.trials)?;
        f.usize("hpsearch.repeats", &mut c.hpsearch.repeats)?;
        f.usize("hpsearch.epochs", &mut c.hpsearch.epochs)?;

        if let Some(key) = f.0.keys().next() {
            // Known but only valid for the other dataset kind.
            return Err(invalid(key, format!("not used with dataset.kind = {kind}")));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.jobs == 0 {
            return Err(invalid("jobs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(invalid("train.batch_size", "must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(invalid("train.hidden", "widths must be positive"));
        }
        let discount = |key: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("{v} must lie in (0, 1]")))
            }
        };
        discount("latent.gamma", self.latent.gamma)?;
        discount("filtered.gamma", self.filtered.gamma)?;
        discount("filtered.alpha", self.filtered.alpha)?;
        discount("trace.alpha", self.trace.alpha)?;
        if !(self.latent.epsilon > 0.0) {
            return Err(invalid("latent.epsilon", "must be positive"));
        }
        if !(self.latent.lambda >= 0.0) {
            return Err(invalid("latent.lambda", "must be non-negative"));
        }
        if !(self.latent.w0_scale >= 0.0) {
            return Err(invalid("latent.w0_scale", "must be non-negative"));
        }
        if let Some(bad) = self.sweep.epsilons.iter().find(|&&e| !(e > 0.0)) {
            return Err(invalid("sweep.epsilons", format!("{bad} is not positive")));
        }
        if let Some(bad) = self.sweep.scales.iter().find(|&&s| !(s > 0.0)) {
            return Err(invalid("sweep.scales", format!("{bad} is not positive")));
        }
        for &a in &self.sweep.alphas {
            discount("sweep.alphas", a)?;
        }
        if let DatasetSpec::Blobs { n_per_class, n_classes, dim, noise, .. } = self.dataset {
            if n_per_class == 0 || n_classes == 0 || dim == 0 || !(noise >= 0.0) {
                return Err(invalid("dataset", "blob counts must be positive and noise >= 0"));
            }
        }
        if self.trace.epoch == 0 {
            return Err(invalid("trace.epoch", "epochs are numbered from 1"));
        }
        if !(self.trace.period > 0.0) {
            return Err(invalid("trace.period", "must be positive"));
        }
        Ok(())
    }

    pub fn run_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.as_str().to_string())
    }

    /// Flat `key = value` echo of the whole configuration, in schema order.
    pub fn echo(&self) -> Vec<(String, String)> {
        fn list<T: fmt::Display>(v: &[T]) -> String {
            let items: Vec<String> = v.iter().map(T::to_string).collect();
            format!("[{}]", items.join(", "))
        }
        let mut e: Vec<(&str, String)> = vec![
            ("experiment", self.experiment.to_string()),
            ("view", self.view.as_str().into()),
            ("name", self.run_name()),
            ("seed", self.seed.to_string()),
            ("jobs", self.jobs.to_string()),
        ];
        match &self.dataset {
            DatasetSpec::Blobs { n_per_class, n_classes, dim, noise, seed } => e.extend([
                ("dataset.kind", "blobs".into()),
                ("dataset.n_per_class", n_per_class.to_string()),
                ("dataset.n_classes", n_classes.to_string()),
                ("dataset.dim", dim.to_string()),
                ("dataset.noise", noise.to_string()),
                ("dataset.seed", seed.to_string()),
            ]),
            DatasetSpec::Csv { path, label_column, test_fraction } => e.extend([
                ("dataset.kind", "csv".into()),
                ("dataset.path", path.display().to_string()),
                ("dataset.label_column", label_column.clone()),
                ("dataset.test_fraction", test_fraction.to_string()),
            ]),
        }
        let l = &self.latent;
        let fl = &self.filtered;
        e.extend([
            ("train.hidden", list(&self.hidden)),
            ("train.epochs", self.epochs.to_string()),
            ("train.batch_size", self.batch_size.to_string()),
            ("real.lr", self.real.lr.to_string()),
            ("real.momentum", self.real.momentum.to_string()),
            ("real.weight_decay", self.real.weight_decay.to_string()),
            ("real.decay", self.real.decay.to_string()),
            ("latent.epsilon", l.epsilon.to_string()),
            ("latent.epsilon_decay", l.epsilon_decay.to_string()),
            ("latent.w0_scale", l.w0_scale.to_string()),
            ("latent.gamma", l.gamma.to_string()),
            ("latent.lambda", l.lambda.to_string()),
            ("latent.scaling", l.scaling.to_string()),
            ("latent.clipping", l.clipping.to_string()),
            ("filtered.alpha", fl.alpha.to_string()),
            ("filtered.alpha_decay", fl.alpha_decay.to_string()),
            ("filtered.gamma", fl.gamma.to_string()),
            ("sweep.epsilons", list(&self.sweep.epsilons)),
            ("sweep.alphas", list(&self.sweep.alphas)),
            ("sweep.scales", list(&self.sweep.scales)),
            ("trace.layer", self.trace.layer.to_string()),
            ("trace.weight", self.trace.weight.to_string()),
            ("trace.epoch", self.trace.epoch.to_string()),
            ("trace.alpha", self.trace.alpha.to_string()),
            ("trace.synthetic", self.trace.synthetic.to_string()),
            ("trace.steps", self.trace.steps.to_string()),
            ("trace.amplitude", self.trace.amplitude.to_string()),
            ("trace.period", self.trace.period.to_string()),
            ("trace.noise", self.trace.noise.to_string()),
            ("equivalence.stream_steps", self.equivalence.stream_steps.to_string()),
            ("equivalence.stream_weights", self.equivalence.stream_weights.to_string()),
            ("hpsearch.trials", self.hpsearch.trials.to_string()),
            ("hpsearch.repeats", self.hpsearch.repeats.to_string()),
            ("hpsearch.epochs", self.hpsearch.epochs.to_string()),
        ]);
        e.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binopt::ScheduleKind;

    #[test]
    fn defaults_from_empty_text() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn dotted_keys_and_sections_agree() {
        let a = ExperimentConfig::parse("experiment = \"alpha-decay\"\nfiltered.alpha = 0.01\nfiltered.alpha_decay = \"linear\"").unwrap();
        let b = ExperimentConfig::parse("experiment = \"alpha-decay\"\n[filtered]\nalpha = 0.01\nalpha_decay = \"linear\"").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.filtered.alpha, 0.01);
        assert_eq!(a.filtered.alpha_decay, ScheduleKind::Linear);
        assert_eq!(a.experiment, ExperimentKind::AlphaDecay);
    }

    #[test]
    fn type_and_value_errors_name_the_key() {
        let e = ExperimentConfig::parse("latent.gamma = \"fast\"").unwrap_err();
        assert!(e.to_string().contains("latent.gamma"), "{e}");
        let e = ExperimentConfig::parse("filtered.alpha = 1.5").unwrap_err();
        assert!(e.to_string().contains("filtered.alpha"), "{e}");
        let e = ExperimentConfig::parse("experiment = \"fig9\"").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { .. }));
        let e = ExperimentConfig::parse("sweep.scales = [1.0, -2.0]").unwrap_err();
        assert!(e.to_string().contains("sweep.scales"), "{e}");
        let e = ExperimentConfig::parse("dataset.path = \"x.csv\"").unwrap_err();
        assert!(e.to_string().contains("dataset.path"), "{e}");
        assert!(matches!(ExperimentConfig::parse("seed = "), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn csv_dataset() {
        let c = ExperimentConfig::parse("dataset.kind = \"csv\"\ndataset.path = \"d.csv\"\ndataset.label_column = \"y\"").unwrap();
        assert_eq!(
            c.dataset,
            DatasetSpec::Csv { path: "d.csv".into(), label_column: "y".into(), test_fraction: 0.2 }
        );
        assert!(ExperimentConfig::parse("dataset.kind = \"csv\"").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = ExperimentConfig::parse("experiment = \"lr-vs-init\"\nlatent.scaling = true\nsweep.scales = [0.5, 2]").unwrap();
        c.out = None;
        let text: String = c
            .echo()
            .into_iter()
            .map(|(k, v)| {
                let quoted = v.parse::<f64>().is_err() && v != "true" && v != "false" && !v.starts_with('[');
                if quoted { format!("{k} = \"{v}\"\n") } else { format!("{k} = {v}\n") }
            })
            .collect();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), ExperimentConfig { name: Some("lr-vs-init".into()), ..c });
    }
}
