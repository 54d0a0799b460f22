use crate::{AccuracyMatrix, AnalysisError};

#[derive(Debug, Clone)]
pub struct Pca {
    /// Top-k principal axes, one row per component, each of column length.
    pub components: Vec<Vec<f64>>,
    /// Fraction of total variance along each kept axis.
    pub explained: Vec<f64>,
    /// Centered rows expressed in the component basis, n × k.
    pub projections: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

/// Principal components of the row cloud via the column covariance matrix.
///
/// Components come out orthonormal and variance-sorted; each one's sign is
/// fixed so its largest-magnitude entry is positive. A zero-variance matrix
/// yields all-zero explained ratios rather than an error.
pub fn pca(m: &AccuracyMatrix, k: usize) -> Result<Pca, AnalysisError> {
    let (n, d) = (m.rows(), m.cols());
    if k > n.min(d) {
        return Err(AnalysisError::TooManyComponents { k, max: n.min(d) });
    }
    if n < 2 {
        return Err(AnalysisError::TooFewRows(n));
    }

    let mean: Vec<f64> =
        (0..d).map(|j| (0..n).map(|i| m.value(i, j)).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..d).map(|j| m.value(i, j) - mean[j]).collect())
        .collect();

    let mut cov = vec![vec![0.0; d]; d];
    for row in &centered {
        for p in 0..d {
            for q in p..d {
                cov[p][q] += row[p] * row[q];
            }
        }
    }
    for p in 0..d {
        for q in p..d {
            cov[p][q] /= (n - 1) as f64;
            cov[q][p] = cov[p][q];
        }
    }

    let (eigenvalues, vectors) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigenvalues[b].partial_cmp(&eigenvalues[a]).unwrap());

    let total: f64 = eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    let explained: Vec<f64> = order
        .iter()
        .take(k)
        .map(|&i| if total > 0.0 { eigenvalues[i].max(0.0) / total } else { 0.0 })
        .collect();

    let components: Vec<Vec<f64>> = order
        .iter()
        .take(k)
        .map(|&i| {
            let mut axis: Vec<f64> = (0..d).map(|r| vectors[r][i]).collect();
            let lead = axis
                .iter()
                .cloned()
                .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                .unwrap();
            if lead < 0.0 {
                for v in &mut axis {
                    *v = -*v;
                }
            }
            axis
        })
        .collect();

    let projections: Vec<Vec<f64>> = centered
        .iter()
        .map(|row| {
            components
                .iter()
                .map(|axis| row.iter().zip(axis).map(|(x, a)| x * a).sum())
                .collect()
        })
        .collect();

    Ok(Pca { components, explained, projections, mean })
}

/// Cyclic Jacobi diagonalization of a symmetric matrix. Returns the
/// eigenvalues and the matrix whose columns are the matching eigenvectors.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    for _ in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|p| ((p + 1)..d).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off.sqrt() <= 1e-12 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..d {
                    let (arp, arq) = (a[r][p], a[r][q]);
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for col in 0..d {
                    let (apc, aqc) = (a[p][col], a[q][col]);
                    a[p][col] = c * apc - s * aqc;
                    a[q][col] = s * apc + c * aqc;
                }
                for r in 0..d {
                    let (vrp, vrq) = (v[r][p], v[r][q]);
                    v[r][p] = c * vrp - s * vrq;
                    v[r][q] = s * vrp + c * vrq;
                }
            }
        }
    }

    ((0..d).map(|i| a[i][i]).collect(), v)
}
