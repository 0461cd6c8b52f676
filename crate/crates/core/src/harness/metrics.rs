use crate::error::{Error, Result};
use crate::scalar::Real;

/// `‖x_true − x_est‖² / ‖x_true‖²`
pub fn rmse<T: Real>(x_true: &[T], x_est: &[T]) -> Result<f64> {
    if x_true.len() != x_est.len() {
        return Err(Error::InvalidDimension(format!(
            "true signal has {} entries, estimate {}",
            x_true.len(),
            x_est.len()
        )));
    }
    let (mut err, mut energy) = (0.0f64, 0.0f64);
    for (&a, &b) in x_true.iter().zip(x_est) {
        let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
        err += (a - b) * (a - b);
        energy += a * a;
    }
    if energy == 0.0 {
        return Err(Error::UndefinedMetric);
    }
    Ok(err / energy)
}

/// Number of trailing steps in the steady-state window: the final 20%,
/// at least one.
pub fn steady_window(len: usize) -> usize {
    (len as f64 * 0.2).ceil().max(1.0) as usize
}

/// Mean of the final 20% of a per-step series.
pub fn steady_state(series: &[f64]) -> f64 {
    if series.is_empty() {
        return f64::NAN;
    }
    let w = steady_window(series.len()).min(series.len());
    mean(&series[series.len() - w..])
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len() / 2;
    if s.len() % 2 == 1 {
        s[k]
    } else {
        0.5 * (s[k - 1] + s[k])
    }
}

/// Sample standard deviation over `√len`; zero for fewer than two values.
pub fn std_error(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}

/// Equal-width histogram over `[lo, hi]`; values outside are clamped into the
/// end bins.
pub fn histogram(v: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins.max(1)];
    let width = (hi - lo) / counts.len() as f64;
    for &x in v {
        let k = if width > 0.0 {
            ((x - lo) / width).floor().max(0.0) as usize
        } else {
            0
        };
        let last = counts.len() - 1;
        counts[k.min(last)] += 1;
    }
    counts
}
