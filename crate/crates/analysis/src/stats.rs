use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::AnalysisError;

/// Sample Pearson correlation with a two-sided p-value from the
/// t-distribution on n − 2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64), AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch { x: x.len(), y: y.len() });
    }
    let n = x.len();
    if n < 3 {
        return Err(AnalysisError::ShortSeries(n));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::OutOfRange(f64::NAN));
    }

    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }

    let r = (cov / (vx * vy).sqrt()).clamp(-1.0, 1.0);
    Ok((r, p_two_sided(r, n)))
}

/// Two-sided p-value for an observed correlation at sample size n.
pub fn p_two_sided(r: f64, n: usize) -> f64 {
    let dof = (n - 2) as f64;
    if 1.0 - r * r <= f64::EPSILON {
        return 0.0;
    }
    let t = r * (dof / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, dof).expect("dof >= 1");
    2.0 * (1.0 - dist.cdf(t.abs()))
}
