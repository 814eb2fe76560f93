//! Weighted least-squares line fits used by every log-log regression.

/// Result of a weighted affine fit `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Weighted coefficient of determination; 1 for an exact fit.
    pub r_squared: f64,
}

/// Weighted least squares. Returns `None` with fewer than two points, with
/// non-positive total weight, or when all abscissae coincide.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Option<LineFit> {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), w.len());
    if x.len() < 2 {
        return None;
    }
    let sw: f64 = w.iter().sum();
    if sw <= 0.0 || !sw.is_finite() {
        return None;
    }
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).min(1.0)
    } else {
        1.0
    };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Unweighted convenience wrapper.
pub fn line_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let w = vec![1.0; x.len()];
    weighted_line_fit(x, y, &w)
}
