//! Least-squares line fits used by every exponent estimator.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual over the fitted points.
    pub max_residual: f64,
}

/// Weighted least-squares fit of `y = slope * x + intercept`.
///
/// Returns `None` with fewer than two points or when all `x` coincide.
pub fn weighted_line_fit(xs: &[f64], ys: &[f64], ws: &[f64]) -> Option<LineFit> {
    assert_eq!(xs.len(), ys.len());
    assert_eq!(xs.len(), ws.len());
    if xs.len() < 2 {
        return None;
    }
    let sw: f64 = ws.iter().sum();
    if sw <= 0.0 {
        return None;
    }
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
    }
    if sxx <= f64::EPSILON * sw * (1.0 + mx * mx) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    Some(LineFit { slope, intercept, max_residual })
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    weighted_line_fit(xs, ys, &vec![1.0; xs.len()])
}

/// Common slope of several weighted point groups, each with its own intercept.
///
/// Groups with fewer than two points carry no slope information and are skipped.
pub fn grouped_slope(groups: &[(Vec<f64>, Vec<f64>, Vec<f64>)]) -> Option<f64> {
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xs, ys, ws) in groups.iter().filter(|g| g.0.len() >= 2) {
        let sw: f64 = ws.iter().sum();
        if sw <= 0.0 {
            continue;
        }
        let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
        let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
        for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
            sxx += w * (x - mx) * (x - mx);
            sxy += w * (x - mx) * (y - my);
        }
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let f = line_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert!(f.max_residual < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(line_fit(&[1.0], &[2.0]).is_none());
        assert!(line_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }

    #[test]
    fn weights_pull_the_fit() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 1.0, 10.0];
        let heavy_last = weighted_line_fit(&xs, &ys, &[1.0, 1.0, 1e-9]).unwrap();
        assert!((heavy_last.slope - 1.0).abs() < 1e-6);
    }

    #[test]
    fn grouped_slope_ignores_offsets() {
        let g = |c: f64| (vec![0.0, 1.0, 2.0], vec![c, c + 2.0, c + 4.0], vec![1.0; 3]);
        let s = grouped_slope(&[g(0.0), g(10.0), (vec![5.0], vec![1.0], vec![1.0])]).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(grouped_slope(&[]).is_none());
    }
}
