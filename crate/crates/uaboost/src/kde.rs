//! Gaussian kernel density estimation with the Silverman rule-of-thumb
//! bandwidth.

/// Silverman bandwidth: 0.9 * min(sample std, IQR / 1.34) * n^(-1/5).
/// Degenerate spreads fall back to a small positive bandwidth so the density
/// stays well-defined.
pub fn silverman_bandwidth(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 1e-9;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    let std = var.sqrt();

    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| {
        let pos = q * (n as f64 - 1.0);
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    let iqr = quantile(0.75) - quantile(0.25);

    let spread = match (std > 0.0, iqr > 0.0) {
        (true, true) => std.min(iqr / 1.34),
        (true, false) => std,
        (false, true) => iqr / 1.34,
        (false, false) => return (mean.abs() * 1e-9).max(1e-9),
    };
    0.9 * spread * (n as f64).powf(-0.2)
}

/// Evaluates a Gaussian KDE on `n_grid` equally spaced points spanning
/// [min - 3h, max + 3h]. Returns (grid, density).
pub fn gaussian_kde(xs: &[f64], n_grid: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(!xs.is_empty() && n_grid >= 2);
    let h = silverman_bandwidth(xs);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (n_grid as f64 - 1.0);
    let norm = 1.0 / (xs.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..n_grid).map(|i| lo + step * i as f64).collect();
    let density: Vec<f64> = grid
        .iter()
        .map(|&g| {
            norm * xs
                .iter()
                .map(|&x| {
                    let t = (g - x) / h;
                    (-0.5 * t * t).exp()
                })
                .sum::<f64>()
        })
        .collect();
    (grid, density)
}

/// Trapezoid-rule integral over an equally spaced grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| (g[1] - g[0]) * (v[0] + v[1]) / 2.0)
        .sum()
}
