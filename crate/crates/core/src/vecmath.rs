//! Small dense-vector helpers shared across modules.

/// Squared Euclidean norm.
pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}

/// Dot product; callers guarantee equal lengths.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared Euclidean distance.
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `a - b` elementwise.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + b` elementwise.
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `a * s` elementwise.
pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `acc += s * v` in place.
pub fn axpy(acc: &mut [f64], s: f64, v: &[f64]) {
    debug_assert_eq!(acc.len(), v.len());
    for (a, x) in acc.iter_mut().zip(v) {
        *a += s * x;
    }
}

/// True when every entry is finite.
pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Sample mean of scalars.
pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance of scalars.
pub fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Per-dimension mean of a sample set.
pub fn mean_vec(samples: &[Vec<f64>]) -> Vec<f64> {
    let dim = samples.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for s in samples {
        axpy(&mut out, 1.0, s);
    }
    let n = samples.len().max(1) as f64;
    out.iter_mut().for_each(|x| *x /= n);
    out
}

/// Per-dimension unbiased variance of a sample set.
pub fn variance_vec(samples: &[Vec<f64>]) -> Vec<f64> {
    let dim = samples.first().map_or(0, Vec::len);
    if samples.len() < 2 {
        return vec![0.0; dim];
    }
    let m = mean_vec(samples);
    let mut out = vec![0.0; dim];
    for s in samples {
        for (o, (x, mu)) in out.iter_mut().zip(s.iter().zip(&m)) {
            *o += (x - mu) * (x - mu);
        }
    }
    let denom = (samples.len() - 1) as f64;
    out.iter_mut().for_each(|x| *x /= denom);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        assert_eq!(norm_sq(&[3.0, 4.0]), 25.0);
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert_eq!(dist_sq(&[0.0, 0.0], &[1.0, 1.0]), 2.0);
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(variance(&[1.0, 2.0, 3.0]), 1.0);
    }
}
