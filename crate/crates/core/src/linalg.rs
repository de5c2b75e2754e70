//! Small dense-vector helpers. Problem dimensions here are modest, so plain
//! `Vec<f64>` / slices are used throughout.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &mut [f64], s: f64) {
    for x in a {
        *x *= s;
    }
}

/// Euclidean projection onto the closed ball `B(center, radius)`.
///
/// The result is re-checked after scaling; if rounding leaves it outside the
/// ball the scale factor is nudged down until the point is inside.
pub fn project_ball(w: &mut [f64], center: &[f64], radius: f64) -> bool {
    let d = dist(w, center);
    if d <= radius {
        return false;
    }
    let mut factor = radius / d;
    loop {
        for (wi, ci) in w.iter_mut().zip(center) {
            *wi = ci + (*wi - ci) * factor;
        }
        if dist(w, center) <= radius {
            return true;
        }
        // only reached through rounding; shrink by a few ulps and retry
        let nd = dist(w, center);
        factor = radius / nd * (1.0 - 4.0 * f64::EPSILON);
    }
}
