//! Pairwise Euclidean distances and k-th nearest-neighbor lookups.
//!
//! Dense N×N storage; the data sets this targets stay in the low thousands
//! of samples, where exact brute-force construction is cheap and removes
//! any approximation concerns from the graph builders.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Symmetric pairwise Euclidean distance matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    values: Array2<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Wrap a precomputed matrix; callers must provide a valid symmetric
    /// zero-diagonal distance matrix (used by tests and graph IO).
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Shape("distance matrix must be square".into()));
        }
        Ok(DistanceMatrix { values })
    }
}

/// Pairwise distances d(i,j) = ‖X_i − X_j‖₂. Each unordered pair is
/// computed once, so the matrix is exactly symmetric. Rows are filled in
/// parallel; the output does not depend on the thread schedule.
pub fn distance_matrix(features: &FeatureMatrix) -> Result<DistanceMatrix> {
    let n = features.n_samples();
    if n < 2 {
        return Err(Error::Param(format!("need at least 2 samples, got {n}")));
    }
    let x = features.values();
    let xs = x.as_slice().expect("contiguous features");
    let f = features.n_features();

    // Upper triangle by row, then mirrored.
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &xs[i * f..(i + 1) * f];
            ((i + 1)..n)
                .map(|j| {
                    let xj = &xs[j * f..(j + 1) * f];
                    xi.iter()
                        .zip(xj)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();

    let mut values = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, d) in row.into_iter().enumerate() {
            let j = i + 1 + offset;
            values[[i, j]] = d;
            values[[j, i]] = d;
        }
    }
    Ok(DistanceMatrix { values })
}

/// Per-node neighbor ordering by ascending (distance, node index).
///
/// `order[i]` lists the other N−1 nodes; `kth_distance(i, k)` is the
/// distance from `i` to its k-th nearest neighbor (k is 1-based, ties
/// broken by node index).
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    order: Vec<Vec<u32>>,
    sorted_dist: Vec<Vec<f64>>,
}

impl NeighborIndex {
    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self, i: usize) -> &[u32] {
        &self.order[i]
    }

    /// Distance from `i` to its k-th nearest neighbor, k in 1..=N−1.
    pub fn kth_distance(&self, i: usize, k: usize) -> f64 {
        self.sorted_dist[i][k - 1]
    }
}

pub fn neighbor_index(d: &DistanceMatrix) -> NeighborIndex {
    let n = d.n();
    let pairs: Vec<(Vec<u32>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut others: Vec<u32> = (0..n as u32).filter(|&j| j as usize != i).collect();
            others.sort_by(|&a, &b| {
                let da = d.get(i, a as usize);
                let db = d.get(i, b as usize);
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            });
            let dist = others.iter().map(|&j| d.get(i, j as usize)).collect();
            (others, dist)
        })
        .collect();
    let (order, sorted_dist) = pairs.into_iter().unzip();
    NeighborIndex { order, sorted_dist }
}

/// Dump a distance matrix as an 8-byte little-endian node count followed by
/// the row-major float64 entries.
pub fn save_distances(d: &DistanceMatrix, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(&(d.n() as u64).to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    for &v in d.values().iter() {
        w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::l1_normalize;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_four_five_triangle() {
        let fm = FeatureMatrix::from_values_unchecked(array![[0.0, 0.0], [0.6, 0.8]]);
        let d = distance_matrix(&fm).unwrap();
        assert!((d.get(0, 1) - 1.0).abs() < 1e-15);
        assert_eq!(d.get(0, 1), d.get(1, 0));
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn identical_rows_give_zero_matrix() {
        let fm = FeatureMatrix::from_values_unchecked(array![
            [1.0, 1.0],
            [1.0, 1.0],
            [1.0, 1.0]
        ]);
        let d = distance_matrix(&fm).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_single_sample() {
        let fm = FeatureMatrix::from_values_unchecked(array![[1.0]]);
        assert!(matches!(distance_matrix(&fm), Err(Error::Param(_))));
    }

    #[test]
    fn matches_naive_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let raw = Array2::from_shape_fn((12, 4), |_| rng.random::<f64>());
        let fm = l1_normalize(raw).unwrap();
        let d = distance_matrix(&fm).unwrap();
        let x = fm.values();
        for i in 0..12 {
            for j in 0..12 {
                let mut s = 0.0;
                for t in 0..4 {
                    s += (x[[i, t]] - x[[j, t]]).powi(2);
                }
                assert!((d.get(i, j) - s.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let raw = Array2::from_shape_fn((8, 3), |_| rng.random::<f64>());
        let fm = l1_normalize(raw.clone()).unwrap();
        let d = distance_matrix(&fm).unwrap();
        // swap rows 2 and 5
        let mut perm = raw;
        for t in 0..3 {
            perm.swap([2, t], [5, t]);
        }
        let dp = distance_matrix(&l1_normalize(perm).unwrap()).unwrap();
        let map = |i: usize| match i {
            2 => 5,
            5 => 2,
            other => other,
        };
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(d.get(i, j), dp.get(map(i), map(j)));
            }
        }
    }

    fn line_points(coords: &[f64]) -> DistanceMatrix {
        let n = coords.len();
        let values = Array2::from_shape_fn((n, n), |(i, j)| (coords[i] - coords[j]).abs());
        DistanceMatrix::from_values(values).unwrap()
    }

    #[test]
    fn neighbor_order_on_a_line() {
        let d = line_points(&[0.0, 1.0, 10.0]);
        let nbr = neighbor_index(&d);
        assert_eq!(nbr.order(0), &[1, 2]);
        assert_eq!(nbr.kth_distance(0, 1), 1.0);
        assert_eq!(nbr.order(2), &[1, 0]);
    }

    #[test]
    fn ties_break_by_node_index() {
        let d = line_points(&[0.0, 1.0, -1.0]);
        let nbr = neighbor_index(&d);
        // nodes 1 and 2 both at distance 1 from node 0
        assert_eq!(nbr.order(0), &[1, 2]);
    }

    #[test]
    fn order_matches_full_sort_oracle_and_kth_distance_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let raw = Array2::from_shape_fn((15, 3), |_| rng.random::<f64>());
        let fm = l1_normalize(raw).unwrap();
        let d = distance_matrix(&fm).unwrap();
        let nbr = neighbor_index(&d);
        for i in 0..15 {
            let mut oracle: Vec<u32> = (0..15u32).filter(|&j| j as usize != i).collect();
            oracle.sort_by(|&a, &b| {
                d.get(i, a as usize)
                    .partial_cmp(&d.get(i, b as usize))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            assert_eq!(nbr.order(i), oracle.as_slice());
            for k in 1..15 {
                assert_eq!(nbr.kth_distance(i, k), d.get(i, nbr.order(i)[k - 1] as usize));
                if k > 1 {
                    assert!(nbr.kth_distance(i, k) >= nbr.kth_distance(i, k - 1));
                }
            }
        }
    }

    #[test]
    fn save_distances_binary_layout() {
        let d = line_points(&[0.0, 2.0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.bin");
        save_distances(&d, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 8 + 4 * 8);
        assert_eq!(u64::from_le_bytes(bytes[..8].try_into().unwrap()), 2);
        let entry = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
        assert_eq!(entry, 2.0);
    }
}
