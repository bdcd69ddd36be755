//! Synthetic binary datasets, per-collaborator feature views and instance splits.
//!
//! Each class is a mixture of two Gaussian clusters centered on antipodal
//! vertices of the `{-class_sep, +class_sep}` hypercube over the informative
//! axes, so paired centroids sit `2 * class_sep` apart along every informative
//! axis. The four clusters share one seeded covariance. Because both class
//! mixtures are symmetric about the origin, every linear projection of the
//! informative block has identical class means: linear models see (almost) no
//! signal, while the vertex parity structure leaves plenty for nonlinear
//! ones. Redundant features are random linear combinations of the informative
//! ones and the rest is standard-normal noise. Everything here is a pure
//! function of its seed.

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Instance identifier: row index into the generated dataset.
pub type InstanceId = u32;

/// Parameters of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub n_instances: usize,
    pub n_features: usize,
    #[serde(default = "default_informative")]
    pub n_informative: usize,
    #[serde(default = "default_redundant")]
    pub n_redundant: usize,
    pub class_sep: f64,
    pub seed: u64,
}

fn default_informative() -> usize {
    5
}

fn default_redundant() -> usize {
    5
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_instances == 0 || self.n_instances % 2 != 0 {
            return Err(Error::InvalidSpec(format!(
                "n_instances must be even and positive, got {}",
                self.n_instances
            )));
        }
        if self.n_features == 0 {
            return Err(Error::InvalidSpec("n_features must be positive".into()));
        }
        if self.n_informative + self.n_redundant > self.n_features {
            return Err(Error::InvalidSpec(format!(
                "n_informative ({}) + n_redundant ({}) exceeds n_features ({})",
                self.n_informative, self.n_redundant, self.n_features
            )));
        }
        if !self.class_sep.is_finite() || self.class_sep < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "class_sep must be a non-negative real, got {}",
                self.class_sep
            )));
        }
        Ok(())
    }
}

/// A generated dataset. Instance ids are the row indices `0..n_instances`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn n_instances(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn label(&self, id: InstanceId) -> Result<u8> {
        self.labels
            .get(id as usize)
            .copied()
            .ok_or(Error::UnknownInstance(id))
    }

    /// Write the dataset as CSV with header `id,label,f0..f{m-1}`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let m = self.n_features();
        let mut header = String::from("id,label");
        for j in 0..m {
            header.push_str(&format!(",f{j}"));
        }
        writeln!(out, "{header}")?;
        for (id, (row, label)) in self.features.iter().zip(&self.labels).enumerate() {
            let mut line = format!("{id},{label}");
            for value in row {
                line.push_str(&format!(",{value}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Read a dataset back from the CSV form produced by [`Dataset::write_csv`].
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Dataset> {
        let mut csv_reader = csv::Reader::from_reader(reader);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for record in csv_reader.records() {
            let record = record?;
            let mut fields = record.iter();
            let _id = fields.next();
            let label: u8 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::ReportInput("bad label field in dataset csv".into()))?;
            let row: std::result::Result<Vec<f64>, _> =
                fields.map(|s| s.parse::<f64>()).collect();
            let row =
                row.map_err(|e| Error::ReportInput(format!("bad feature field: {e}")))?;
            labels.push(label);
            features.push(row);
        }
        Ok(Dataset { features, labels })
    }

    /// SHA-256 over the CSV serialization, used to fingerprint a session's data.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        crate::util::sha256_hex(&buf)
    }
}

/// Assignment of feature columns to the common pool and per-collaborator
/// private views. Index lists are kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePartition {
    pub common: Vec<usize>,
    pub private: Vec<Vec<usize>>,
}

impl FeaturePartition {
    pub fn k(&self) -> usize {
        self.private.len()
    }

    /// Columns visible to `collaborator`: common plus private, ascending.
    pub fn view_columns(&self, collaborator: usize) -> Result<Vec<usize>> {
        let private = self.private.get(collaborator).ok_or_else(|| {
            Error::InvalidConfig(format!("no collaborator {collaborator} in partition"))
        })?;
        let mut columns: Vec<usize> = self.common.iter().chain(private).copied().collect();
        columns.sort_unstable();
        Ok(columns)
    }
}

/// Disjoint instance-id sets: per-collaborator warm starts, the shared
/// unlabeled pool, and the observer's held-out test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub warm_start: Vec<Vec<InstanceId>>,
    pub pool: Vec<InstanceId>,
    pub test: Vec<InstanceId>,
}

/// Base per-axis standard deviation of the informative clusters. Tighter
/// than the ambient noise so that two-feature submodels can realize the full
/// range of AUC bands at moderate `class_sep`.
const CLUSTER_SCALE: f64 = 0.45;

/// Relative spread difference between the two classes' clusters at
/// `class_sep >= 1` (class 0 broad, class 1 tight). Both class mixtures stay
/// symmetric about the origin, so linear scores remain uninformative, but
/// single columns become separable by variance-sensitive models. The
/// difference fades linearly to zero with `class_sep`, so a zero-separation
/// dataset carries no class signal at all.
const VAR_SPREAD: f64 = 0.7;

/// Generate a balanced synthetic binary dataset.
///
/// Rows `0..n/2` carry label 0, rows `n/2..n` label 1; downstream splits
/// shuffle ids, so row order never leaks into the protocol. Column layout is
/// `[informative | redundant | noise]`. Within a class, instances alternate
/// between the class's two antipodal clusters.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_instances;
    let half = n / 2;
    let d = spec.n_informative;
    let n_noise = spec.n_features - d - spec.n_redundant;

    // Centroid sign patterns: class 0 uses +/- pattern_zero, class 1 uses
    // +/- pattern_one. Class 1 flips half the axes (rounded down, at least
    // one for d >= 2), which maximizes the number of informative axis pairs
    // whose parity differs between the classes.
    let pattern_zero: Vec<f64> = (0..d)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let mut pattern_one = pattern_zero.clone();
    if d >= 2 {
        let flips = (d / 2).max(1);
        let mut axes: Vec<usize> = (0..d).collect();
        axes.shuffle(&mut rng);
        for &axis in axes.iter().take(flips) {
            pattern_one[axis] = -pattern_one[axis];
        }
    }

    // Shared cluster covariance factor: informative value = centroid +
    // CLUSTER_SCALE * (C z) with z standard normal. Drawn once per dataset.
    let covariance: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            (0..d)
                .map(|_| standard_normal(&mut rng) / (d as f64).sqrt())
                .collect()
        })
        .collect();

    // Mixing weights for redundant columns, drawn once per dataset.
    let mixing: Vec<Vec<f64>> = (0..spec.n_redundant)
        .map(|_| (0..d).map(|_| standard_normal(&mut rng)).collect())
        .collect();

    let spread_delta = VAR_SPREAD * spec.class_sep.min(1.0);
    let class_scale = [
        CLUSTER_SCALE * (1.0 + spread_delta),
        CLUSTER_SCALE * (1.0 - spread_delta),
    ];

    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = u8::from(i >= half);
        let pattern = if label == 1 {
            &pattern_one
        } else {
            &pattern_zero
        };
        let cluster_sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let scale = class_scale[label as usize];

        let z: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        let informative: Vec<f64> = (0..d)
            .map(|axis| {
                let spread: f64 = covariance[axis]
                    .iter()
                    .zip(&z)
                    .map(|(c, zv)| c * zv)
                    .sum();
                cluster_sign * pattern[axis] * spec.class_sep + scale * spread
            })
            .collect();

        let mut row = Vec::with_capacity(spec.n_features);
        row.extend_from_slice(&informative);
        for weights in &mixing {
            let value: f64 = weights
                .iter()
                .zip(&informative)
                .map(|(w, x)| w * x)
                .sum();
            row.push(value);
        }
        for _ in 0..n_noise {
            row.push(standard_normal(&mut rng));
        }
        features.push(row);
        labels.push(label);
    }
    Ok(Dataset { features, labels })
}

/// Box-Muller, driven only by `gen::<f64>()` so the stream stays stable
/// across `rand` versions of the distribution machinery.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Partition feature columns into a common set plus `k` disjoint private views.
///
/// Columns are shuffled by seed, the first `common_count` become common and
/// the remainder are dealt round-robin so view sizes differ by at most one.
pub fn partition_features(
    n_features: usize,
    k: usize,
    common_count: usize,
    seed: u64,
) -> Result<FeaturePartition> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if common_count + k > n_features {
        return Err(Error::InvalidConfig(format!(
            "need common_count + k <= n_features so every collaborator gets a \
             private feature; got {common_count} + {k} > {n_features}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<usize> = (0..n_features).collect();
    columns.shuffle(&mut rng);

    let mut common: Vec<usize> = columns[..common_count].to_vec();
    common.sort_unstable();
    let mut private: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (turn, &column) in columns[common_count..].iter().enumerate() {
        private[turn % k].push(column);
    }
    for view in &mut private {
        view.sort_unstable();
    }
    Ok(FeaturePartition { common, private })
}

/// Split instance ids into test, `k` warm-start sets and the pool.
///
/// Ids are shuffled by seed; the test set is carved first with per-class caps
/// so its class balance is exact, then each warm-start set takes `warm_size`
/// ids, and whatever remains is the pool.
pub fn split_dataset(
    dataset: &Dataset,
    k: usize,
    warm_size: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<Splits> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must lie in [0, 1), got {test_fraction}"
        )));
    }
    let n = dataset.n_instances();
    let test_size = (test_fraction * n as f64).ceil() as usize;
    if k * warm_size + test_size >= n {
        return Err(Error::InvalidConfig(format!(
            "splits infeasible: {k} x {warm_size} warm + {test_size} test \
             leaves no pool out of {n}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<InstanceId> = (0..n as InstanceId).collect();
    ids.shuffle(&mut rng);

    let cap_one = test_size / 2;
    let cap_zero = test_size - cap_one;
    let mut test = Vec::with_capacity(test_size);
    let mut rest = Vec::with_capacity(n - test_size);
    let (mut took_zero, mut took_one) = (0usize, 0usize);
    for id in ids {
        let label = dataset.labels[id as usize];
        let take = if label == 0 {
            took_zero < cap_zero
        } else {
            took_one < cap_one
        };
        if take && test.len() < test_size {
            if label == 0 {
                took_zero += 1;
            } else {
                took_one += 1;
            }
            test.push(id);
        } else {
            rest.push(id);
        }
    }

    let mut warm_start = Vec::with_capacity(k);
    let mut cursor = 0usize;
    for _ in 0..k {
        let mut warm: Vec<InstanceId> = rest[cursor..cursor + warm_size].to_vec();
        warm.sort_unstable();
        warm_start.push(warm);
        cursor += warm_size;
    }
    let mut pool: Vec<InstanceId> = rest[cursor..].to_vec();
    pool.sort_unstable();
    test.sort_unstable();

    Ok(Splits {
        warm_start,
        pool,
        test,
    })
}

/// Access-guarded view of a collaborator's permitted feature columns.
///
/// All feature reads in the protocol go through this accessor; requesting a
/// column outside the owner's view is a trust-boundary violation and errors.
#[derive(Debug, Clone, Copy)]
pub struct View<'a> {
    dataset: &'a Dataset,
    partition: &'a FeaturePartition,
    collaborator: usize,
}

impl<'a> View<'a> {
    pub fn new(
        dataset: &'a Dataset,
        partition: &'a FeaturePartition,
        collaborator: usize,
    ) -> Result<Self> {
        if collaborator >= partition.k() {
            return Err(Error::InvalidConfig(format!(
                "collaborator {collaborator} out of range, k = {}",
                partition.k()
            )));
        }
        Ok(View {
            dataset,
            partition,
            collaborator,
        })
    }

    pub fn collaborator(&self) -> usize {
        self.collaborator
    }

    /// Permitted columns, ascending absolute feature index.
    pub fn columns(&self) -> Vec<usize> {
        self.partition
            .view_columns(self.collaborator)
            .expect("collaborator validated at construction")
    }

    pub fn width(&self) -> usize {
        self.columns().len()
    }

    /// Rows restricted to every permitted column.
    pub fn rows(&self, ids: &[InstanceId]) -> Result<Vec<Vec<f64>>> {
        let columns = self.columns();
        self.rows_at(ids, &columns)
    }

    /// Rows restricted to an explicit column subset. Columns are absolute
    /// feature indices and must all be permitted.
    pub fn rows_at(&self, ids: &[InstanceId], columns: &[usize]) -> Result<Vec<Vec<f64>>> {
        let allowed: BTreeSet<usize> = self.columns().into_iter().collect();
        for &column in columns {
            if !allowed.contains(&column) {
                return Err(Error::ForeignFeature {
                    collaborator: self.collaborator,
                    feature: column,
                });
            }
        }
        let mut rows = Vec::with_capacity(ids.len());
        for &id in ids {
            let row = self
                .dataset
                .features
                .get(id as usize)
                .ok_or(Error::UnknownInstance(id))?;
            rows.push(columns.iter().map(|&c| row[c]).collect());
        }
        Ok(rows)
    }
}

/// Feature matrix for `collaborator` restricted to its permitted columns.
pub fn view(
    dataset: &Dataset,
    partition: &FeaturePartition,
    collaborator: usize,
    ids: &[InstanceId],
) -> Result<Vec<Vec<f64>>> {
    View::new(dataset, partition, collaborator)?.rows(ids)
}
