//! Empirical replace-one sensitivity of gradient statistics.

use rand::Rng;

use super::{DataPoint, EmpiricalObjective, LossError};
use crate::linalg;

fn neighbour<R, D>(
    obj: &EmpiricalObjective,
    draw: &mut D,
    rng: &mut R,
) -> Result<EmpiricalObjective, LossError>
where
    R: Rng + ?Sized,
    D: FnMut(&mut R) -> DataPoint,
{
    let index = rng.random_range(0..obj.n());
    let point = draw(rng);
    Ok(obj.with_dataset(obj.dataset().replaced(index, point)?))
}

/// Largest `‖∇F(w;S) − ∇F(w;S′)‖` over `trials` random neighbours `S′`,
/// each obtained by replacing a uniformly chosen example with `draw(rng)`.
pub fn gradient_sensitivity_probe<R, D>(
    obj: &EmpiricalObjective,
    w: &[f64],
    trials: usize,
    mut draw: D,
    rng: &mut R,
) -> Result<f64, LossError>
where
    R: Rng + ?Sized,
    D: FnMut(&mut R) -> DataPoint,
{
    if trials == 0 {
        return Err(LossError::Domain("trials must be at least 1".into()));
    }
    let base = obj.gradient(w)?;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let other = neighbour(obj, &mut draw, rng)?;
        worst = worst.max(linalg::dist(&base, &other.gradient(w)?));
    }
    Ok(worst)
}

/// Largest sensitivity of the gradient difference `∇F(w + step) − ∇F(w)`
/// over `trials` random neighbours.
pub fn spider_difference_probe<R, D>(
    obj: &EmpiricalObjective,
    w: &[f64],
    step: &[f64],
    trials: usize,
    mut draw: D,
    rng: &mut R,
) -> Result<f64, LossError>
where
    R: Rng + ?Sized,
    D: FnMut(&mut R) -> DataPoint,
{
    if trials == 0 {
        return Err(LossError::Domain("trials must be at least 1".into()));
    }
    let mut next = w.to_vec();
    linalg::axpy(1.0, step, &mut next);
    let diff = |o: &EmpiricalObjective| -> Result<Vec<f64>, LossError> {
        Ok(linalg::sub(&o.gradient(&next)?, &o.gradient(w)?))
    };
    let base = diff(obj)?;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let other = neighbour(obj, &mut draw, rng)?;
        worst = worst.max(linalg::dist(&base, &diff(&other)?));
    }
    Ok(worst)
}
