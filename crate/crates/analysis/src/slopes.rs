use crate::{AccuracyMatrix, AnalysisError};

/// Per-task slope of the attention-benefit ratio against log₁₀ dataset size.
///
/// Each task's points are (log₁₀ sizes[j], variant[j] / base[j]); the
/// returned slope is the least-squares line through them, so a positive
/// value means the variant pulls further ahead as data grows.
pub fn improvement_slopes(
    variant: &AccuracyMatrix,
    base: &AccuracyMatrix,
    sizes: &[f64],
) -> Result<Vec<f64>, AnalysisError> {
    if variant.rows() != base.rows() || variant.cols() != base.cols() {
        return Err(AnalysisError::ShapeMismatch {
            a: (variant.rows(), variant.cols()),
            b: (base.rows(), base.cols()),
        });
    }
    if sizes.len() != variant.cols() {
        return Err(AnalysisError::LengthMismatch { x: sizes.len(), y: variant.cols() });
    }
    if sizes.iter().any(|&s| !s.is_finite() || s <= 0.0) {
        return Err(AnalysisError::BadSize);
    }
    let xs: Vec<f64> = sizes.iter().map(|s| s.log10()).collect();
    let x_mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let x_var: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    if x_var == 0.0 {
        return Err(AnalysisError::BadSize);
    }

    (0..variant.rows())
        .map(|i| {
            let ratios: Vec<f64> = (0..variant.cols())
                .map(|j| {
                    let b = base.value(i, j);
                    if b <= 0.0 {
                        return Err(AnalysisError::ZeroBase { row: i, col: j });
                    }
                    Ok(variant.value(i, j) / b)
                })
                .collect::<Result<_, _>>()?;
            let y_mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let cov: f64 =
                xs.iter().zip(&ratios).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
            Ok(cov / x_var)
        })
        .collect()
}

/// Parses condition labels as sample counts, accepting either bare numbers
/// or a `name x N` suffix form.
pub fn sizes_from_labels(m: &AccuracyMatrix) -> Result<Vec<f64>, AnalysisError> {
    m.col_labels()
        .iter()
        .map(|label| {
            let tail = label.rsplit(['x', ' ']).next().unwrap_or(label).trim();
            tail.parse::<f64>().map_err(|_| AnalysisError::BadNumber(label.clone()))
        })
        .collect()
}
