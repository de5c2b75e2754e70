//! Low-discrepancy sample points for the certifiers.

use super::Region;

pub const DEFAULT_SAMPLE_SIZE: usize = 512;

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

fn nth_prime(k: usize) -> u64 {
    if k < PRIMES.len() {
        return PRIMES[k];
    }
    let mut count = PRIMES.len();
    let mut p = *PRIMES.last().unwrap();
    while count <= k {
        p += 2;
        if (3..).step_by(2).take_while(|q| q * q <= p).all(|q| p % q != 0) {
            count += 1;
        }
    }
    p
}

/// `count` Halton points mapped into `B(center, radius)`.
///
/// Coordinates in `[−1, 1]^d` are radially rescaled so that the sup-norm
/// shell at level `s` lands on the Euclidean shell at radius `s·radius`.
pub fn halton_ball(center: &[f64], radius: f64, count: usize) -> Vec<Vec<f64>> {
    let d = center.len();
    let bases: Vec<u64> = (0..d).map(nth_prime).collect();
    (1..=count as u64)
        .map(|i| {
            let cube: Vec<f64> = bases
                .iter()
                .map(|b| 2.0 * radical_inverse(i, *b) - 1.0)
                .collect();
            let sup = cube.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let euc = cube.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = if euc > 0.0 { sup / euc } else { 0.0 };
            center
                .iter()
                .zip(&cube)
                .map(|(c, x)| c + radius * scale * x)
                .collect()
        })
        .collect()
}

/// Certifier sample for `region`: the anchor, the known minimizer (if any)
/// and low-discrepancy fill. Level sets and unbounded regions are filled on
/// the unit ball around `anchor`.
pub fn region_sample(
    region: &Region,
    anchor: &[f64],
    w_star: Option<&[f64]>,
    size: usize,
) -> Vec<Vec<f64>> {
    let mut out = vec![anchor.to_vec()];
    if let Some(w) = w_star {
        out.push(w.to_vec());
    }
    let fill = size.saturating_sub(out.len());
    let pts = match region {
        Region::Ball { center, radius } => halton_ball(center, *radius, fill),
        _ => halton_ball(anchor, 1.0, fill),
    };
    out.extend(pts);
    out.truncate(size.max(1));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn points_inside_ball() {
        let c = [1.0, -2.0, 0.5, 3.0];
        for p in halton_ball(&c, 0.7, 300) {
            assert!(linalg::dist(&p, &c) <= 0.7 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn primes_extend_past_table() {
        assert_eq!(nth_prime(31), 131);
        assert_eq!(nth_prime(32), 137);
        assert_eq!(nth_prime(33), 139);
    }

    #[test]
    fn sample_has_requested_size_and_anchors() {
        let region = Region::Ball {
            center: vec![0.0, 0.0],
            radius: 2.0,
        };
        let s = region_sample(&region, &[0.0, 0.0], Some(&[0.5, 0.5]), 512);
        assert_eq!(s.len(), 512);
        assert_eq!(s[1], vec![0.5, 0.5]);
        let mut uniq = s.clone();
        uniq.sort_by(|a, b| a.partial_cmp(b).unwrap());
        uniq.dedup();
        assert_eq!(uniq.len(), 512);
    }
}
