use crate::{Error, Result};

/// Least-squares fit of `log(value)` against `log(gamma)`.
///
/// Returns `(slope, r²)`. Needs at least four points with positive
/// `gamma` and `value`; a zero value usually means exact cancellation and
/// must be handled by the caller.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 4 {
        return Err(Error::arg(format!("slope fit needs at least 4 points, got {}", points.len())));
    }
    if let Some(&(g, v)) = points.iter().find(|(g, v)| !(*g > 0.0 && *v > 0.0 && g.is_finite() && v.is_finite())) {
        return Err(Error::arg(format!("slope fit needs positive finite values, got ({g}, {v})")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("slope fit needs at least two distinct step sizes"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, r2))
}

/// Drops points whose value is below `100 · ε · scale`, where rounding
/// noise would dominate the measurement.
pub fn resolvable_points(points: &[(f64, f64)], scale: f64) -> Vec<(f64, f64)> {
    let floor = 100.0 * f64::EPSILON * scale.abs();
    points.iter().copied().filter(|&(_, v)| v > floor).collect()
}
