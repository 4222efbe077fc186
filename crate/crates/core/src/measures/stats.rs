use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(estimate: f64, std_error: f64) -> Self {
        Self { estimate, std_error }
    }
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate::new(0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Estimate::new(mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Estimate::new(mean, (var / n as f64).sqrt())
}

/// Self-normalized estimate `Σa / Σb` with its delta-method standard error.
pub fn ratio_estimate(a: &[f64], b: &[f64]) -> Estimate {
    let n = a.len() as f64;
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if sb == 0.0 {
        return Estimate::new(0.0, 0.0);
    }
    let r = sa / sb;
    let bbar = sb / n;
    let resid: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - r * y).collect();
    let var = if a.len() > 1 { resid.iter().map(|e| e * e).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Estimate::new(r, (var / n).sqrt() / bbar)
}

/// `(x - y) / sqrt(se_x² + se_y²)`, zero when both the difference and the
/// error vanish.
pub fn z_score(x: Estimate, y: Estimate) -> f64 {
    let diff = x.estimate - y.estimate;
    let se = x.std_error.hypot(y.std_error);
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

/// Least-squares line `y = a + b x`, returning `(a, b, se_b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let se = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (a, b, se)
}
