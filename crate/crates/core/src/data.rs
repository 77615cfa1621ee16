//! Datasets: loading, validation, feature normalization, stratified splits,
//! and the constructive stochastic-block-model generator.
//!
//! All randomness in this module flows through a single seeded
//! [`ChaCha8Rng`] (a counter-based 64-bit-seedable stream) so splits and
//! generated datasets replay exactly for a given seed.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-normalized sample features (each nonzero row sums to 1 in L1).
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    values: Array2<f64>,
    zero_rows: Vec<usize>,
}

impl FeatureMatrix {
    /// Wrap values without normalizing. The caller asserts the invariants
    /// (useful for already-normalized data and geometric test fixtures);
    /// everything loaded from disk goes through [`l1_normalize`].
    pub fn from_values_unchecked(values: Array2<f64>) -> Self {
        FeatureMatrix {
            values,
            zero_rows: Vec::new(),
        }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    /// Rows that were all-zero in the raw input; they stay all-zero.
    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }
}

/// 0-1 class membership, stored as one label per sample.
#[derive(Debug, Clone)]
pub struct MembershipMatrix {
    labels: Vec<u32>,
    n_classes: usize,
}

impl MembershipMatrix {
    /// `labels[i]` in `[0, n_classes)`; every class must be in range.
    pub fn new(labels: Vec<u32>, n_classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= n_classes) {
            return Err(Error::Format(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(MembershipMatrix { labels, n_classes })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Dense N×C indicator matrix Y (exactly one 1 per row).
    pub fn indicator(&self) -> Array2<f64> {
        let mut y = Array2::zeros((self.labels.len(), self.n_classes));
        for (i, &l) in self.labels.iter().enumerate() {
            y[[i, l as usize]] = 1.0;
        }
        y
    }

    /// Per-class sample counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }
}

/// Disjoint train/validation/test index sets covering `0..n`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Validate disjointness and coverage of `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self
            .train
            .iter()
            .chain(&self.validation)
            .chain(&self.test)
        {
            if i >= n {
                return Err(Error::Format(format!("split index {i} out of range for n={n}")));
            }
            if seen[i] {
                return Err(Error::Format(format!("split index {i} appears twice")));
            }
            seen[i] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::Format(format!("sample {missing} missing from split")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub features: FeatureMatrix,
    pub labels: MembershipMatrix,
    pub split: Split,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.features.n_samples()
    }
}

/// L1 row-normalization. Zero rows are kept as zeros and reported in
/// [`FeatureMatrix::zero_rows`]; NaN/Inf entries are rejected.
pub fn l1_normalize(raw: Array2<f64>) -> Result<FeatureMatrix> {
    if let Some(((i, j), _)) = raw.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Format(format!(
            "non-finite feature value at row {i}, column {j}"
        )));
    }
    let mut values = raw;
    let mut zero_rows = Vec::new();
    for (i, mut row) in values.rows_mut().into_iter().enumerate() {
        let norm: f64 = row.iter().map(|v| v.abs()).sum();
        if norm == 0.0 {
            zero_rows.push(i);
        } else {
            row.mapv_inplace(|v| v / norm);
        }
    }
    Ok(FeatureMatrix { values, zero_rows })
}

/// Options for [`load_dataset`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Skip a header row in the features CSV.
    pub has_header: bool,
    /// Expected class count; inferred as `max label + 1` when `None`
    /// (all classes in `0..C` must then be populated).
    pub n_classes: Option<usize>,
    /// Dataset identifier; defaults to the features file stem.
    pub name: Option<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            has_header: false,
            n_classes: None,
            name: None,
        }
    }
}

/// Load features (CSV of floats), labels (CSV of one integer per row) and an
/// optional split JSON. Features are L1 row-normalized on load; when no
/// split file is given, a stratified 5/10/85 split is generated from `seed`.
pub fn load_dataset(
    features_path: &Path,
    labels_path: &Path,
    split_path: Option<&Path>,
    opts: &LoadOptions,
    seed: u64,
) -> Result<Dataset> {
    let raw = read_features_csv(features_path, opts.has_header)?;
    let labels = read_labels_csv(labels_path)?;
    if labels.len() != raw.nrows() {
        return Err(Error::Format(format!(
            "{} samples in {} but {} labels in {}",
            raw.nrows(),
            features_path.display(),
            labels.len(),
            labels_path.display()
        )));
    }

    let n_classes = match opts.n_classes {
        Some(c) => c,
        None => {
            let c = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
            // With an inferred C, a gap in the label range almost always
            // means a mislabeled file.
            let mut present = vec![false; c];
            for &l in &labels {
                present[l as usize] = true;
            }
            if let Some(gap) = present.iter().position(|&p| !p) {
                return Err(Error::Format(format!(
                    "no samples labeled {gap} (labels must cover 0..{c})"
                )));
            }
            c
        }
    };
    let labels = MembershipMatrix::new(labels, n_classes)?;
    let features = l1_normalize(raw)?;

    let split = match split_path {
        Some(p) => {
            let split = read_split_json(p)?;
            split.validate(features.n_samples())?;
            split
        }
        None => stratified_split(&labels, 0.05, 0.10, seed)?,
    };

    let name = opts.name.clone().unwrap_or_else(|| {
        features_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    });

    Ok(Dataset {
        name,
        features,
        labels,
        split,
    })
}

/// Constructive dataset: a stochastic block model over features. Sample `i`
/// of cluster `c` has each feature of cluster `c`'s block with probability
/// `p_in` and each feature of other blocks with probability `p_out`.
/// Bernoulli draws are made row-major (sample, then feature).
pub fn generate_constructive(
    n_clusters: usize,
    features_per_cluster: usize,
    p_in: f64,
    p_out: f64,
    samples_per_cluster: usize,
    seed: u64,
) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_out > p_in {
        return Err(Error::Param(format!(
            "need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}"
        )));
    }
    if n_clusters == 0 || features_per_cluster == 0 || samples_per_cluster == 0 {
        return Err(Error::Param("constructive dataset dimensions must be positive".into()));
    }
    let n = n_clusters * samples_per_cluster;
    let f = n_clusters * features_per_cluster;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = Array2::zeros((n, f));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let cluster = i / samples_per_cluster;
        labels.push(cluster as u32);
        for j in 0..f {
            let p = if j / features_per_cluster == cluster {
                p_in
            } else {
                p_out
            };
            if rng.random_bool(p) {
                raw[[i, j]] = 1.0;
            }
        }
    }
    let labels = MembershipMatrix::new(labels, n_clusters)?;
    let split = stratified_split(&labels, 0.05, 0.10, seed)?;
    Ok(Dataset {
        name: "constructive".to_string(),
        features: l1_normalize(raw)?,
        labels,
        split,
    })
}

/// Deterministic stratified split. Train quotas are as even as possible
/// across classes (remainders to ascending class ids); validation quotas are
/// proportional to the class sizes remaining after the train draw. Index
/// sets come out sorted.
pub fn stratified_split(
    labels: &MembershipMatrix,
    train_frac: f64,
    val_frac: f64,
    seed: u64,
) -> Result<Split> {
    if !(0.0..1.0).contains(&train_frac) || !(0.0..1.0).contains(&val_frac) {
        return Err(Error::Param("split fractions must lie in [0, 1)".into()));
    }
    if train_frac + val_frac >= 1.0 {
        return Err(Error::Param(format!(
            "train_frac + val_frac must be < 1, got {train_frac} + {val_frac}"
        )));
    }
    let n = labels.n_samples();
    let c = labels.n_classes();
    let counts = labels.class_counts();
    if let Some(empty) = counts.iter().position(|&k| k == 0) {
        return Err(Error::Param(format!("class {empty} has no samples")));
    }

    // Shuffle each class's indices once; quotas then take prefixes.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &l) in labels.labels().iter().enumerate() {
        per_class[l as usize].push(i);
    }
    for class in per_class.iter_mut() {
        class.shuffle(&mut rng);
    }

    let n_train = (train_frac * n as f64).round() as usize;
    let base = n_train / c;
    let rem = n_train % c;
    let mut train = Vec::with_capacity(n_train);
    let mut taken = vec![0usize; c];
    for (cls, class) in per_class.iter().enumerate() {
        let quota = (base + usize::from(cls < rem)).min(class.len());
        train.extend_from_slice(&class[..quota]);
        taken[cls] = quota;
    }

    // Validation: proportional to remaining class sizes, leftovers one each
    // to ascending class ids with capacity.
    let n_val = (val_frac * n as f64).round() as usize;
    let remaining: Vec<usize> = (0..c).map(|cls| per_class[cls].len() - taken[cls]).collect();
    let rem_total: usize = remaining.iter().sum();
    let n_val = n_val.min(rem_total);
    let mut val_quota: Vec<usize> = (0..c)
        .map(|cls| n_val * remaining[cls] / rem_total.max(1))
        .collect();
    let mut leftover = n_val - val_quota.iter().sum::<usize>();
    let mut cls = 0;
    while leftover > 0 {
        if val_quota[cls] < remaining[cls] {
            val_quota[cls] += 1;
            leftover -= 1;
        }
        cls = (cls + 1) % c;
    }
    let mut validation = Vec::with_capacity(n_val);
    let mut test = Vec::new();
    for (cls, class) in per_class.iter().enumerate() {
        let start = taken[cls];
        let end = start + val_quota[cls];
        validation.extend_from_slice(&class[start..end]);
        test.extend_from_slice(&class[end..]);
    }

    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train,
        validation,
        test,
    })
}

/// Write features.csv, labels.csv and split.json under `dir`. Floats use the
/// shortest representation that round-trips, so load -> save -> load is
/// bit-identical.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let fpath = dir.join("features.csv");
    let mut w = BufWriter::new(fs::File::create(&fpath).map_err(|e| Error::io(&fpath, e))?);
    for row in dataset.features.values().rows() {
        let line = row
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}").map_err(|e| Error::io(&fpath, e))?;
    }
    w.flush().map_err(|e| Error::io(&fpath, e))?;

    let lpath = dir.join("labels.csv");
    let mut w = BufWriter::new(fs::File::create(&lpath).map_err(|e| Error::io(&lpath, e))?);
    for &l in dataset.labels.labels() {
        writeln!(w, "{l}").map_err(|e| Error::io(&lpath, e))?;
    }
    w.flush().map_err(|e| Error::io(&lpath, e))?;

    write_split_json(&dataset.split, &dir.join("split.json"))
}

pub fn write_split_json(split: &Split, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(split).expect("split serializes");
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn read_split_json(path: &Path) -> Result<Split> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: invalid split JSON: {e}", path.display())))
}

fn read_features_csv(path: &Path, has_header: bool) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<f64> = Vec::new();
    let mut n_cols = None;
    let mut n_rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let cols = n_cols.get_or_insert(record.len());
        if record.len() != *cols {
            return Err(Error::Format(format!(
                "{}: row {i} has {} columns, expected {}",
                path.display(),
                record.len(),
                cols
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Format(format!(
                    "{}: non-numeric cell '{field}' at row {i}, column {j}",
                    path.display()
                ))
            })?;
            rows.push(v);
        }
        n_rows += 1;
    }
    let n_cols = n_cols.unwrap_or(0);
    if n_rows == 0 || n_cols == 0 {
        return Err(Error::Format(format!("{}: empty feature matrix", path.display())));
    }
    Array2::from_shape_vec((n_rows, n_cols), rows)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn read_labels_csv(path: &Path) -> Result<Vec<u32>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let l: u32 = line.parse().map_err(|_| {
            Error::Format(format!(
                "{}: non-integer label '{line}' at row {i}",
                path.display()
            ))
        })?;
        labels.push(l);
    }
    Ok(labels)
}

/// Convenience paths for a dataset directory laid out by [`save_dataset`].
pub fn dataset_dir_paths(dir: &Path) -> (PathBuf, PathBuf, Option<PathBuf>) {
    let split = dir.join("split.json");
    (
        dir.join("features.csv"),
        dir.join("labels.csv"),
        split.exists().then_some(split),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn l1_normalize_forces_unit_rows() {
        let fm = l1_normalize(array![[2.0, 2.0], [1.0, 0.0], [0.0, 3.0]]).unwrap();
        assert_eq!(fm.values(), &array![[0.5, 0.5], [1.0, 0.0], [0.0, 1.0]]);
        assert!(fm.zero_rows().is_empty());
    }

    #[test]
    fn l1_normalize_keeps_zero_rows() {
        let fm = l1_normalize(array![[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert_eq!(fm.zero_rows(), &[0]);
        assert_eq!(fm.values().row(0).sum(), 0.0);
    }

    #[test]
    fn l1_normalize_rejects_nan() {
        assert!(matches!(
            l1_normalize(array![[f64::NAN, 1.0]]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn l1_normalize_row_sums_match_scalar_division_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw = Array2::from_shape_fn((20, 5), |_| rng.random::<f64>());
        let expected = raw.clone();
        let fm = l1_normalize(raw).unwrap();
        for (i, row) in fm.values().rows().into_iter().enumerate() {
            let sum: f64 = row.sum();
            assert!((sum - 1.0).abs() < 1e-9, "row {i} sums to {sum}");
            // direct per-row scalar-division oracle
            let norm: f64 = expected.row(i).iter().map(|v| v.abs()).sum();
            for (a, b) in row.iter().zip(expected.row(i)) {
                assert!((a - b / norm).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn membership_rejects_out_of_range() {
        assert!(matches!(
            MembershipMatrix::new(vec![0, 10], 10),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn stratified_split_counts_and_determinism() {
        let labels = MembershipMatrix::new(
            (0..100).map(|i| (i % 10) as u32).collect(),
            10,
        )
        .unwrap();
        let a = stratified_split(&labels, 0.05, 0.10, 3).unwrap();
        let b = stratified_split(&labels, 0.05, 0.10, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.len(), 5);
        assert_eq!(a.validation.len(), 10);
        assert_eq!(a.test.len(), 85);
        a.validate(100).unwrap();
        // per-class train counts differ by at most 1
        let mut per_class = vec![0usize; 10];
        for &i in &a.train {
            per_class[labels.label(i) as usize] += 1;
        }
        assert!(per_class.iter().all(|&k| k == 0 || k == 1));
    }

    #[test]
    fn stratified_split_rejects_bad_fractions() {
        let labels = MembershipMatrix::new(vec![0, 1, 0, 1], 2).unwrap();
        assert!(matches!(
            stratified_split(&labels, 0.6, 0.5, 0),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn constructive_shapes_and_block_structure() {
        let ds = generate_constructive(10, 50, 0.07, 0.007, 100, 7).unwrap();
        assert_eq!(ds.features.n_samples(), 1000);
        assert_eq!(ds.features.n_features(), 500);
        assert_eq!(ds.labels.n_classes(), 10);
        assert_eq!(ds.split.train.len(), 50);
        assert_eq!(ds.split.validation.len(), 100);
        assert_eq!(ds.split.test.len(), 850);
        let mut per_class = vec![0usize; 10];
        for &i in &ds.split.train {
            per_class[ds.labels.label(i) as usize] += 1;
        }
        assert!(per_class.iter().all(|&k| k == 5));
    }

    #[test]
    fn constructive_degenerate_probabilities_give_block_indicator() {
        let ds = generate_constructive(3, 2, 1.0, 0.0, 2, 0).unwrap();
        for i in 0..6 {
            let cluster = i / 2;
            for j in 0..6 {
                let expected = if j / 2 == cluster { 0.5 } else { 0.0 };
                assert_eq!(ds.features.values()[[i, j]], expected);
            }
        }
    }

    #[test]
    fn constructive_is_reproducible() {
        let a = generate_constructive(4, 3, 0.5, 0.1, 5, 99).unwrap();
        let b = generate_constructive(4, 3, 0.5, 0.1, 5, 99).unwrap();
        assert_eq!(a.features.values(), b.features.values());
        assert_eq!(a.split, b.split);
    }

    #[test]
    fn constructive_rejects_bad_probabilities() {
        assert!(matches!(
            generate_constructive(2, 2, 0.5, 0.9, 2, 0),
            Err(Error::Param(_))
        ));
        assert!(matches!(
            generate_constructive(2, 2, 1.2, 0.1, 2, 0),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn constructive_mean_row_sum_matches_binomial_expectation() {
        // E[nnz per row] = 50 p_in + 450 p_out = 6.65, se = sqrt(var/N)
        let ds = generate_constructive(10, 50, 0.07, 0.007, 100, 123).unwrap();
        let mut total = 0.0;
        for i in 0..1000 {
            let nnz = ds
                .features
                .values()
                .row(i)
                .iter()
                .filter(|&&v| v > 0.0)
                .count();
            total += nnz as f64;
        }
        let mean = total / 1000.0;
        let expect = 50.0 * 0.07 + 450.0 * 0.007;
        let var = 50.0 * 0.07 * 0.93 + 450.0 * 0.007 * 0.993;
        let se = (var / 1000.0f64).sqrt();
        assert!(
            (mean - expect).abs() < 4.0 * se,
            "mean {mean} vs expected {expect} (se {se})"
        );
    }

    #[test]
    fn load_rejects_label_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("f.csv");
        let l = dir.path().join("l.csv");
        fs::write(&f, "1,2\n3,4\n").unwrap();
        fs::write(&l, "0\n10\n").unwrap();
        let opts = LoadOptions {
            n_classes: Some(10),
            ..LoadOptions::default()
        };
        assert!(matches!(
            load_dataset(&f, &l, None, &opts, 0),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn load_normalizes_and_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("f.csv");
        let l = dir.path().join("l.csv");
        fs::write(&f, "2,2\n1,0\n0,3\n").unwrap();
        fs::write(&l, "0\n1\n0\n").unwrap();
        let ds = load_dataset(&f, &l, None, &LoadOptions::default(), 7).unwrap();
        assert_eq!(
            ds.features.values(),
            &array![[0.5, 0.5], [1.0, 0.0], [0.0, 1.0]]
        );

        let out = dir.path().join("saved");
        save_dataset(&ds, &out).unwrap();
        let (fp, lp, sp) = dataset_dir_paths(&out);
        let ds2 = load_dataset(&fp, &lp, sp.as_deref(), &LoadOptions::default(), 7).unwrap();
        assert_eq!(ds.features.values(), ds2.features.values());
        assert_eq!(ds.labels.labels(), ds2.labels.labels());
        assert_eq!(ds.split, ds2.split);
    }

    #[test]
    fn load_rejects_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("f.csv");
        let l = dir.path().join("l.csv");
        fs::write(&f, "1,2\n3\n").unwrap();
        fs::write(&l, "0\n1\n").unwrap();
        assert!(matches!(
            load_dataset(&f, &l, None, &LoadOptions::default(), 0),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn load_rejects_non_numeric_cell() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("f.csv");
        let l = dir.path().join("l.csv");
        fs::write(&f, "1,x\n3,4\n").unwrap();
        fs::write(&l, "0\n1\n").unwrap();
        assert!(matches!(
            load_dataset(&f, &l, None, &LoadOptions::default(), 0),
            Err(Error::Format(_))
        ));
    }
}
