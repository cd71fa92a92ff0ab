use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as {expected}")]
    Parse {
        row: usize,
        column: String,
        value: String,
        expected: &'static str,
    },
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("row {row} has {got} fields, header has {expected}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("invalid dataset parameters: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Blobs {
        n_per_class: usize,
        n_classes: usize,
        dim: usize,
        noise_sigma: f64,
        seed: u64,
    },
    Csv {
        path: String,
        label_column: String,
    },
}

/// Row-major features with class labels, split into train and test parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub n_classes: usize,
    pub train_x: Vec<f64>,
    pub train_y: Vec<usize>,
    pub test_x: Vec<f64>,
    pub test_y: Vec<usize>,
    pub feature_names: Vec<String>,
    pub source: DataSource,
}

impl Dataset {
    pub fn n_train(&self) -> usize {
        self.train_y.len()
    }

    pub fn n_test(&self) -> usize {
        self.test_y.len()
    }

    pub fn train_row(&self, i: usize) -> &[f64] {
        &self.train_x[i * self.dim..(i + 1) * self.dim]
    }

    /// Writes all rows (train first, then test) with a header and a trailing label column.
    pub fn save_csv(&self, path: impl AsRef<Path>, label_column: &str) -> Result<(), DataError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(file);
        let mut header = self.feature_names.clone();
        header.push(label_column.to_string());
        w.write_record(&header)?;
        let rows = self
            .train_x
            .chunks(self.dim)
            .zip(&self.train_y)
            .chain(self.test_x.chunks(self.dim).zip(&self.test_y));
        for (x, y) in rows {
            let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(())
    }
}

fn feature_names(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

/// Gaussian clusters around random unit-norm centers; 80% of the shuffled
/// samples go to the training split.
pub fn make_blobs(
    n_per_class: usize,
    n_classes: usize,
    dim: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if n_per_class == 0 || n_classes == 0 || dim == 0 {
        return Err(DataError::Invalid("counts and dimension must be positive".into()));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(DataError::Invalid(format!("noise sigma {noise_sigma} must be finite and >= 0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect();

    let mut samples: Vec<(Vec<f64>, usize)> = Vec::with_capacity(n_per_class * n_classes);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..n_per_class {
            let x = center
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + noise_sigma * z
                })
                .collect();
            samples.push((x, c));
        }
    }
    samples.shuffle(&mut rng);
    let n_train = (samples.len() * 4) / 5;
    let (train, test) = samples.split_at(n_train);
    let flatten = |part: &[(Vec<f64>, usize)]| -> (Vec<f64>, Vec<usize>) {
        (
            part.iter().flat_map(|(x, _)| x.iter().copied()).collect(),
            part.iter().map(|(_, y)| *y).collect(),
        )
    };
    let (train_x, train_y) = flatten(train);
    let (test_x, test_y) = flatten(test);
    Ok(Dataset {
        dim,
        n_classes,
        train_x,
        train_y,
        test_x,
        test_y,
        feature_names: feature_names(dim),
        source: DataSource::Blobs {
            n_per_class,
            n_classes,
            dim,
            noise_sigma,
            seed,
        },
    })
}

/// Reads a headed CSV of numeric features plus one integer label column.
///
/// Row order is preserved; the trailing `test_fraction` of rows becomes the
/// test split. Row numbers in errors count data rows from 1.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, test_fraction: f64) -> Result<Dataset, DataError> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(DataError::Invalid(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| DataError::MissingLabelColumn(label_column.to_string()))?;
    let dim = header.len() - 1;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        if rec.len() != header.len() {
            return Err(DataError::RaggedRow {
                row,
                expected: header.len(),
                got: rec.len(),
            });
        }
        for (c, field) in rec.iter().enumerate() {
            if c == label_idx {
                let y: usize = field.parse().map_err(|_| DataError::Parse {
                    row,
                    column: header[c].clone(),
                    value: field.to_string(),
                    expected: "a non-negative integer label",
                })?;
                ys.push(y);
            } else {
                let v: f64 = field.parse().map_err(|_| DataError::Parse {
                    row,
                    column: header[c].clone(),
                    value: field.to_string(),
                    expected: "a number",
                })?;
                xs.push(v);
            }
        }
    }
    if ys.is_empty() {
        return Err(DataError::Empty);
    }
    let n = ys.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    let n_train = n - n_test;
    let test_x = xs.split_off(n_train * dim);
    let test_y = ys.split_off(n_train);
    let n_classes = ys.iter().chain(&test_y).max().map_or(0, |m| m + 1);
    let mut names = header;
    names.remove(label_idx);
    Ok(Dataset {
        dim,
        n_classes,
        train_x: xs,
        train_y: ys,
        test_x,
        test_y,
        feature_names: names,
        source: DataSource::Csv {
            path: path.display().to_string(),
            label_column: label_column.to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn noiseless_blobs_are_separable_by_nearest_centroid() {
        let d = make_blobs(20, 4, 16, 0.0, 3).unwrap();
        let mut centroids = vec![vec![0.0; 16]; 4];
        let mut counts = vec![0.0; 4];
        for i in 0..d.n_train() {
            counts[d.train_y[i]] += 1.0;
            for (c, x) in centroids[d.train_y[i]].iter_mut().zip(d.train_row(i)) {
                *c += x;
            }
        }
        for (c, n) in centroids.iter_mut().zip(&counts) {
            c.iter_mut().for_each(|v| *v /= n);
        }
        for (x, &y) in d.test_x.chunks(16).zip(&d.test_y) {
            let dist = |c: &Vec<f64>| c.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let best = (0..4).min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b]))).unwrap();
            assert_eq!(best, y);
        }
    }

    #[test]
    fn blobs_deterministic_and_split() {
        let a = make_blobs(50, 3, 5, 0.3, 9).unwrap();
        let b = make_blobs(50, 3, 5, 0.3, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_train(), 120);
        assert_eq!(a.n_test(), 30);
        assert_ne!(a, make_blobs(50, 3, 5, 0.3, 10).unwrap());
        assert!(make_blobs(0, 3, 5, 0.3, 9).is_err());
    }

    #[test]
    fn toy_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("toy.csv");
        let mut f = File::create(&p).unwrap();
        writeln!(f, "a,label,b\n1.5,0,2\n-3,1,0.25\n7,2,8").unwrap();
        let d = load_csv(&p, "label", 0.0).unwrap();
        assert_eq!(d.dim, 2);
        assert_eq!(d.train_x, vec![1.5, 2.0, -3.0, 0.25, 7.0, 8.0]);
        assert_eq!(d.train_y, vec![0, 1, 2]);
        assert_eq!(d.n_classes, 3);
        assert_eq!(d.feature_names, vec!["a", "b"]);
        let split = load_csv(&p, "label", 0.34).unwrap();
        assert_eq!(split.test_y, vec![2]);
        assert_eq!(split.test_x, vec![7.0, 8.0]);
    }

    #[test]
    fn csv_errors_name_location() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "a,b,y\n1,2,0\n3,oops,1\n").unwrap();
        match load_csv(&p, "y", 0.0) {
            Err(DataError::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
        let msg = load_csv(&p, "y", 0.0).unwrap_err().to_string();
        assert!(msg.contains("row 2") && msg.contains("`b`"), "{msg}");
        assert!(matches!(load_csv(&p, "label", 0.0), Err(DataError::MissingLabelColumn(_))));
        assert!(matches!(load_csv(dir.path().join("nope.csv"), "y", 0.0), Err(DataError::Io { .. })));
        std::fs::write(&p, "a,y\n1,0.5\n").unwrap();
        assert!(matches!(load_csv(&p, "y", 0.0), Err(DataError::Parse { .. })));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("blobs.csv");
        let d = make_blobs(10, 3, 4, 0.7, 1).unwrap();
        d.save_csv(&p, "label").unwrap();
        let back = load_csv(&p, "label", 0.2).unwrap();
        assert_eq!(back.train_x, d.train_x);
        assert_eq!(back.test_x, d.test_x);
        assert_eq!(back.train_y, d.train_y);
        assert_eq!(back.test_y, d.test_y);
    }
}
