use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{AccuracyMatrix, AnalysisError};

/// One agglomeration step. Cluster ids follow the usual linkage convention:
/// leaves are `0..n`, the cluster born at step `s` is `n + s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Leaf → cluster assignment after undoing the last `k − 1` merges,
    /// relabelled to `0..k` in order of first appearance.
    pub fn cut(&self, k: usize) -> Vec<usize> {
        assert!(
            k >= 1 && k <= self.n_leaves,
            "cut into {k} clusters impossible with {} leaves",
            self.n_leaves
        );
        let mut parent: Vec<usize> = (0..self.n_leaves + self.merges.len()).collect();
        for (step, merge) in self.merges.iter().take(self.n_leaves - k).enumerate() {
            let born = self.n_leaves + step;
            let root_a = find(&mut parent, merge.a);
            parent[root_a] = born;
            let root_b = find(&mut parent, merge.b);
            parent[root_b] = born;
        }
        let mut next = 0;
        let mut labels = std::collections::HashMap::new();
        (0..self.n_leaves)
            .map(|leaf| {
                let root = find(&mut parent, leaf);
                *labels.entry(root).or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<(), AnalysisError> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Dendrogram, AnalysisError> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(file)?)
    }
}

fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Agglomerates rows bottom-up, each step merging the pair whose union
/// raises the within-cluster sum of squares the least. Distances follow the
/// convention `d² = 2·ΔESS`, so two singletons merge at their Euclidean
/// distance. Ties go to the earliest-born pair, which keeps the procedure
/// deterministic.
pub fn ward_cluster(m: &AccuracyMatrix) -> Result<Dendrogram, AnalysisError> {
    let n = m.rows();
    if n < 2 {
        return Err(AnalysisError::TooFewRows(n));
    }

    // Active clusters indexed by linkage id; `None` once absorbed.
    let mut size: Vec<Option<usize>> = (0..n).map(|_| Some(1)).collect();
    let mut dist2 = vec![vec![f64::NAN; 2 * n - 1]; 2 * n - 1];
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 =
                m.row(i).iter().zip(m.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            dist2[i][j] = d2;
            dist2[j][i] = d2;
        }
    }
    size.resize(2 * n - 1, None);

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let live: Vec<usize> =
            (0..n + step).filter(|&i| size[i].is_some()).collect();
        let mut best = (live[0], live[1]);
        let mut best_d2 = f64::INFINITY;
        for (pos, &i) in live.iter().enumerate() {
            for &j in &live[pos + 1..] {
                if dist2[i][j] < best_d2 {
                    best_d2 = dist2[i][j];
                    best = (i, j);
                }
            }
        }

        let (a, b) = best;
        let (na, nb) = (size[a].unwrap() as f64, size[b].unwrap() as f64);
        let born = n + step;
        for &k in &live {
            if k == a || k == b {
                continue;
            }
            let nk = size[k].unwrap() as f64;
            let updated = ((na + nk) * dist2[a][k] + (nb + nk) * dist2[b][k]
                - nk * best_d2)
                / (na + nb + nk);
            dist2[born][k] = updated;
            dist2[k][born] = updated;
        }
        size[born] = Some((na + nb) as usize);
        size[a] = None;
        size[b] = None;
        merges.push(Merge { a, b, distance: best_d2.max(0.0).sqrt(), size: (na + nb) as usize });
    }

    Ok(Dendrogram { n_leaves: n, merges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> AccuracyMatrix {
        let r = rows.len();
        let c = rows[0].len();
        AccuracyMatrix::new(
            (0..r).map(|i| format!("t{i}")).collect(),
            (0..c).map(|j| format!("c{j}")).collect(),
            rows,
        )
        .unwrap()
    }

    #[test]
    fn identical_rows_merge_first_at_distance_zero() {
        let d = ward_cluster(&matrix(vec![
            vec![0.9, 0.1],
            vec![0.2, 0.8],
            vec![0.9, 0.1],
        ]))
        .unwrap();
        let first = &d.merges[0];
        assert_eq!((first.a, first.b), (0, 2));
        assert_eq!(first.distance, 0.0);
    }

    #[test]
    fn singleton_pairs_merge_at_their_euclidean_distance() {
        let d = ward_cluster(&matrix(vec![vec![0.0, 0.0], vec![0.3, 0.4]])).unwrap();
        assert!((d.merges[0].distance - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_row_is_rejected() {
        let err = ward_cluster(&matrix(vec![vec![0.5]])).unwrap_err();
        assert!(matches!(err, AnalysisError::TooFewRows(1)));
    }

    #[test]
    fn cut_into_one_cluster_labels_everything_alike() {
        let d = ward_cluster(&matrix(vec![
            vec![0.1],
            vec![0.9],
            vec![0.15],
            vec![0.85],
        ]))
        .unwrap();
        assert_eq!(d.cut(1), vec![0, 0, 0, 0]);
        assert_eq!(d.cut(4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn json_round_trip() {
        let d = ward_cluster(&matrix(vec![vec![0.1], vec![0.9], vec![0.2]])).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dendrogram.json");
        d.write_json(&path).unwrap();
        assert_eq!(Dendrogram::read_json(&path).unwrap(), d);
    }
}
