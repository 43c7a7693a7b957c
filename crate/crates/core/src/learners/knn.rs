use alloc::vec::Vec;

use crate::autodiff::Tensor;
use crate::error::{invalid, Result};
use crate::kernels::sqdist;

/// A neighbor: row index in the index set and Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// Exact `k` nearest rows of `index` to `query`, nearest first, ties by row
/// order. `exclude` removes one row (the query itself when it is a member).
pub fn knn_neighbors(index: &Tensor, query: &[f64], k: usize, exclude: Option<usize>) -> Result<Vec<Neighbor>> {
    if index.rows() == 0 {
        return Err(invalid!("nearest-neighbor index is empty"));
    }
    if query.len() != index.cols() {
        return Err(invalid!("query has {} coordinates, index rows have {}", query.len(), index.cols()));
    }
    let available = index.rows() - usize::from(exclude.is_some_and(|e| e < index.rows()));
    if k > available {
        return Err(invalid!("asked for {k} neighbors among {available} points"));
    }
    let mut cand: Vec<(f64, usize)> =
        (0..index.rows()).filter(|&i| Some(i) != exclude).map(|i| (sqdist(index.row(i), query), i)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() && k > 0 {
        cand.select_nth_unstable_by(k - 1, cmp);
    }
    cand.truncate(k);
    cand.sort_by(cmp);
    Ok(cand.into_iter().map(|(d2, i)| Neighbor { index: i, distance: libm::sqrt(d2) }).collect())
}

/// Distance from each query row to its nearest row of `index`.
pub fn nearest_distances(index: &Tensor, queries: &Tensor) -> Result<Vec<f64>> {
    (0..queries.rows()).map(|i| Ok(knn_neighbors(index, queries.row(i), 1, None)?[0].distance)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;
    use rand::Rng as _;

    #[test]
    fn small_examples() {
        let idx = Tensor::new(2, 1, vec![0.0, 10.0]).unwrap();
        assert_eq!(knn_neighbors(&idx, &[1.0], 1, None).unwrap(), vec![Neighbor { index: 0, distance: 1.0 }]);
        let all = knn_neighbors(&idx, &[8.0], 2, None).unwrap();
        assert_eq!(all.iter().map(|n| n.index).collect::<Vec<_>>(), vec![1, 0]);
        assert!(knn_neighbors(&idx, &[1.0], 3, None).is_err());
        assert!(knn_neighbors(&Tensor::zeros(0, 1), &[1.0], 1, None).is_err());
        // Equidistant points come back in row order; self-exclusion drops the query row.
        let idx = Tensor::new(3, 1, vec![2.0, 0.0, 2.0]).unwrap();
        let n = knn_neighbors(&idx, &[1.0], 3, None).unwrap();
        assert_eq!(n.iter().map(|n| n.index).collect::<Vec<_>>(), vec![0, 1, 2]);
        let n = knn_neighbors(&idx, &[2.0], 2, Some(0)).unwrap();
        assert_eq!(n.iter().map(|n| n.index).collect::<Vec<_>>(), vec![2, 1]);
    }

    #[test]
    fn matches_exhaustive_scan() {
        let mut r = rng::seeded(6);
        let idx = Tensor::from_fn(100, 4, |_, _| r.random_range(-1.0..1.0));
        for _ in 0..20 {
            let q: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
            let k = r.random_range(1..=100);
            let got = knn_neighbors(&idx, &q, k, None).unwrap();
            let mut all: Vec<(f64, usize)> = (0..100)
                .map(|i| (libm::sqrt(idx.row(i).iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum()), i))
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let expect: Vec<usize> = all[..k].iter().map(|p| p.1).collect();
            assert_eq!(got.iter().map(|n| n.index).collect::<Vec<_>>(), expect);
            for (n, p) in got.iter().zip(&all) {
                assert!((n.distance - p.0).abs() < 1e-12);
            }
        }
    }
}
