//! Synthetic instances with known structure.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    ClosedForm, DataPoint, Dataset, EmpiricalObjective, GrowthSpec, KLSpec, Loss, LossError,
    ObjectiveMeta, Region,
};
use crate::linalg;

/// Serializable description of a per-example loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LossSpec {
    SquaredDistance { mu: f64 },
    HuberizedQuadratic { mu: f64, clip: f64 },
    Linear,
    LinearHuber { lambda: f64, radius: f64 },
    Growth { a: f64, tau: f64 },
    Proximal {
        inner: Box<LossSpec>,
        center: Vec<f64>,
        weight: f64,
    },
}

impl LossSpec {
    pub fn build(&self) -> Result<Arc<dyn Loss>, LossError> {
        Ok(match self {
            LossSpec::SquaredDistance { mu } => Arc::new(SquaredDistance::new(*mu)?),
            LossSpec::HuberizedQuadratic { mu, clip } => {
                Arc::new(HuberizedQuadratic::new(*mu, *clip)?)
            }
            LossSpec::Linear => Arc::new(Linear),
            LossSpec::LinearHuber { lambda, radius } => {
                Arc::new(LinearHuber::new(*lambda, *radius)?)
            }
            LossSpec::Growth { a, tau } => Arc::new(GrowthPiecewise::new(*a, *tau)?),
            LossSpec::Proximal {
                inner,
                center,
                weight,
            } => Arc::new(Proximal::new(inner.build()?, center.clone(), *weight)?),
        })
    }
}

fn max_distance(data: &Dataset, center: &[f64]) -> f64 {
    data.points()
        .iter()
        .map(|p| linalg::dist(p.as_vector(), center))
        .fold(0.0, f64::max)
}

/// `f(w;x) = (μ/2)‖w − x‖²`.
#[derive(Debug, Clone)]
pub struct SquaredDistance {
    mu: f64,
}

impl SquaredDistance {
    pub fn new(mu: f64) -> Result<Self, LossError> {
        if !(mu > 0.0) {
            return Err(LossError::Domain(format!("mu must be positive, got {mu}")));
        }
        Ok(Self { mu })
    }
}

impl Loss for SquaredDistance {
    fn value(&self, w: &[f64], x: &DataPoint) -> f64 {
        0.5 * self.mu * linalg::dist(w, x.as_vector()).powi(2)
    }

    fn gradient(&self, w: &[f64], x: &DataPoint, out: &mut [f64]) {
        for ((o, wi), xi) in out.iter_mut().zip(w).zip(x.as_vector()) {
            *o = self.mu * (wi - xi);
        }
    }

    fn closed_form(&self, data: &Dataset) -> Option<ClosedForm> {
        let mean = data.mean_vector();
        let spread: f64 = data
            .points()
            .iter()
            .map(|p| linalg::dist(p.as_vector(), &mean).powi(2))
            .sum::<f64>()
            / data.len() as f64;
        Some(ClosedForm::Centered {
            curvature: self.mu,
            center: mean,
            min_value: 0.5 * self.mu * spread,
        })
    }

    fn lipschitz_on_ball(&self, data: &Dataset, center: &[f64], radius: f64) -> Option<f64> {
        Some(self.mu * (radius + max_distance(data, center)))
    }

    fn spec(&self) -> LossSpec {
        LossSpec::SquaredDistance { mu: self.mu }
    }
}

/// Squared distance with the gradient norm clipped at `clip`: quadratic while
/// `μ‖w − x‖ ≤ clip`, linear beyond. Globally `clip`-Lipschitz and `μ`-smooth.
#[derive(Debug, Clone)]
pub struct HuberizedQuadratic {
    mu: f64,
    clip: f64,
}

impl HuberizedQuadratic {
    pub fn new(mu: f64, clip: f64) -> Result<Self, LossError> {
        if !(mu > 0.0 && clip > 0.0) {
            return Err(LossError::Domain(format!(
                "mu and clip must be positive, got {mu}, {clip}"
            )));
        }
        Ok(Self { mu, clip })
    }

    fn knot(&self) -> f64 {
        self.clip / self.mu
    }
}

impl Loss for HuberizedQuadratic {
    fn value(&self, w: &[f64], x: &DataPoint) -> f64 {
        let r = linalg::dist(w, x.as_vector());
        if r <= self.knot() {
            0.5 * self.mu * r * r
        } else {
            self.clip * r - 0.5 * self.clip * self.knot()
        }
    }

    fn gradient(&self, w: &[f64], x: &DataPoint, out: &mut [f64]) {
        let xv = x.as_vector();
        let r = linalg::dist(w, xv);
        let s = if r <= self.knot() { self.mu } else { self.clip / r };
        for ((o, wi), xi) in out.iter_mut().zip(w).zip(xv) {
            *o = s * (wi - xi);
        }
    }

    fn lipschitz_on_ball(&self, data: &Dataset, center: &[f64], radius: f64) -> Option<f64> {
        Some((self.mu * (radius + max_distance(data, center))).min(self.clip))
    }

    fn spec(&self) -> LossSpec {
        LossSpec::HuberizedQuadratic {
            mu: self.mu,
            clip: self.clip,
        }
    }
}

/// `f(w;x) = ⟨w, x⟩`.
#[derive(Debug, Clone, Copy)]
pub struct Linear;

impl Loss for Linear {
    fn value(&self, w: &[f64], x: &DataPoint) -> f64 {
        linalg::dot(w, x.as_vector())
    }

    fn gradient(&self, _w: &[f64], x: &DataPoint, out: &mut [f64]) {
        out.copy_from_slice(x.as_vector());
    }

    fn closed_form(&self, data: &Dataset) -> Option<ClosedForm> {
        Some(ClosedForm::Affine {
            slope: data.mean_vector(),
            offset: 0.0,
        })
    }

    fn lipschitz_on_ball(&self, data: &Dataset, _center: &[f64], _radius: f64) -> Option<f64> {
        Some(
            data.points()
                .iter()
                .map(|p| linalg::norm(p.as_vector()))
                .fold(0.0, f64::max),
        )
    }

    fn spec(&self) -> LossSpec {
        LossSpec::Linear
    }
}

/// `f(w;x) = ⟨w, x⟩ + λ H(w)` with the Huber regulariser
/// `H(w) = ‖w‖²` for `‖w‖ ≤ 4D` and `4D‖w‖` outside.
#[derive(Debug, Clone)]
pub struct LinearHuber {
    lambda: f64,
    radius: f64,
}

impl LinearHuber {
    pub fn new(lambda: f64, radius: f64) -> Result<Self, LossError> {
        if !(lambda > 0.0 && radius > 0.0) {
            return Err(LossError::Domain(format!(
                "lambda and radius must be positive, got {lambda}, {radius}"
            )));
        }
        Ok(Self { lambda, radius })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn huber(&self, w: &[f64]) -> f64 {
        let r = linalg::norm(w);
        if r <= 4.0 * self.radius {
            r * r
        } else {
            4.0 * self.radius * r
        }
    }
}

impl Loss for LinearHuber {
    fn value(&self, w: &[f64], x: &DataPoint) -> f64 {
        linalg::dot(w, x.as_vector()) + self.lambda * self.huber(w)
    }

    fn gradient(&self, w: &[f64], x: &DataPoint, out: &mut [f64]) {
        let r = linalg::norm(w);
        let s = if r <= 4.0 * self.radius {
            2.0
        } else {
            4.0 * self.radius / r
        };
        for ((o, wi), xi) in out.iter_mut().zip(w).zip(x.as_vector()) {
            *o = xi + self.lambda * s * wi;
        }
    }

    fn lipschitz_on_ball(&self, data: &Dataset, center: &[f64], radius: f64) -> Option<f64> {
        let xmax = Linear.lipschitz_on_ball(data, center, radius)?;
        let reg = (2.0 * (linalg::norm(center) + radius)).min(4.0 * self.radius);
        Some(xmax + self.lambda * reg)
    }

    fn spec(&self) -> LossSpec {
        LossSpec::LinearHuber {
            lambda: self.lambda,
            radius: self.radius,
        }
    }
}

/// One-dimensional piecewise loss over sign tokens:
///
/// ```text
/// f(w; +1) = |w − a|      (w ≤ a),   |w − a|^τ   (w > a)
/// f(w; −1) = |w + a|^τ    (w ≤ −a),  |w + a|     (w > −a)
/// ```
///
/// At the kinks the gradient is the one-sided derivative of the power branch
/// (zero).
#[derive(Debug, Clone)]
pub struct GrowthPiecewise {
    a: f64,
    tau: f64,
}

impl GrowthPiecewise {
    pub fn new(a: f64, tau: f64) -> Result<Self, LossError> {
        if !(a > 0.0) {
            return Err(LossError::Domain(format!("a must be positive, got {a}")));
        }
        if !(tau > 1.0 && tau <= 2.0) {
            return Err(LossError::Domain(format!("tau must lie in (1,2], got {tau}")));
        }
        Ok(Self { a, tau })
    }

    fn plus(&self, w: f64) -> (f64, f64) {
        let u = w - self.a;
        if u <= 0.0 {
            if u == 0.0 {
                (0.0, 0.0)
            } else {
                (-u, -1.0)
            }
        } else {
            (u.powf(self.tau), self.tau * u.powf(self.tau - 1.0))
        }
    }

    fn minus(&self, w: f64) -> (f64, f64) {
        let u = w + self.a;
        if u <= 0.0 {
            (
                (-u).powf(self.tau),
                -self.tau * (-u).powf(self.tau - 1.0),
            )
        } else {
            (u, 1.0)
        }
    }

    fn eval(&self, w: f64, sign: i8) -> (f64, f64) {
        if sign > 0 {
            self.plus(w)
        } else {
            self.minus(w)
        }
    }
}

impl Loss for GrowthPiecewise {
    fn value(&self, w: &[f64], x: &DataPoint) -> f64 {
        self.eval(w[0], x.as_sign()).0
    }

    fn gradient(&self, w: &[f64], x: &DataPoint, out: &mut [f64]) {
        out[0] = self.eval(w[0], x.as_sign()).1;
    }

    fn lipschitz_on_ball(&self, _data: &Dataset, center: &[f64], radius: f64) -> Option<f64> {
        let reach = center[0].abs() + radius + self.a;
        Some(1f64.max(self.tau * reach.powf(self.tau - 1.0)))
    }

    fn spec(&self) -> LossSpec {
        LossSpec::Growth {
            a: self.a,
            tau: self.tau,
        }
    }
}

/// `f(w;x) + weight·‖w − center‖²`.
#[derive(Debug, Clone)]
pub struct Proximal {
    inner: Arc<dyn Loss>,
    center: Vec<f64>,
    weight: f64,
}

impl Proximal {
    pub fn new(inner: Arc<dyn Loss>, center: Vec<f64>, weight: f64) -> Result<Self, LossError> {
        if !(weight > 0.0) {
            return Err(LossError::Domain(format!(
                "proximal weight must be positive, got {weight}"
            )));
        }
        Ok(Self {
            inner,
            center,
            weight,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

impl Loss for Proximal {
    fn value(&self, w: &[f64], x: &DataPoint) -> f64 {
        self.inner.value(w, x) + self.weight * linalg::dist(w, &self.center).powi(2)
    }

    fn gradient(&self, w: &[f64], x: &DataPoint, out: &mut [f64]) {
        self.inner.gradient(w, x, out);
        for ((o, wi), ci) in out.iter_mut().zip(w).zip(&self.center) {
            *o += 2.0 * self.weight * (wi - ci);
        }
    }

    fn closed_form(&self, data: &Dataset) -> Option<ClosedForm> {
        self.inner
            .closed_form(data)
            .map(|cf| cf.add_proximal(&self.center, self.weight))
    }

    fn lipschitz_on_ball(&self, data: &Dataset, center: &[f64], radius: f64) -> Option<f64> {
        let inner = self.inner.lipschitz_on_ball(data, center, radius)?;
        Some(inner + 2.0 * self.weight * (linalg::dist(center, &self.center) + radius))
    }

    fn spec(&self) -> LossSpec {
        LossSpec::Proximal {
            inner: Box::new(self.inner.spec()),
            center: self.center.clone(),
            weight: self.weight,
        }
    }
}

/// `n` centres drawn i.i.d. from `N(0, scale² I_d)`.
pub fn gaussian_centers<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    scale: f64,
    rng: &mut R,
) -> Result<Dataset, LossError> {
    let rows = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    Dataset::from_vectors(rows)
}

/// A vector with uniformly random coordinates `±scale/√d` (norm `scale`).
pub fn sign_vectors<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    let c = scale / (d as f64).sqrt();
    (0..d)
        .map(|_| if rng.random::<bool>() { c } else { -c })
        .collect()
}

/// Canonical PL instance `f(w;x) = (μ/2)‖w − x‖²`.
///
/// `F` is `μ`-strongly convex, so it is `(1/√(2μ), 2)`-KL everywhere and has
/// `(√(μ/2), 2)`-growth. The declared Lipschitz constant covers the ball
/// around the minimizer that contains every centre; callers running
/// optimizers should redeclare it with
/// [`EmpiricalObjective::declare_lipschitz_region`].
pub fn make_quadratic_pl(mu: f64, centers: Dataset) -> Result<EmpiricalObjective, LossError> {
    if centers.is_signs() {
        return Err(LossError::Domain("quadratic instance needs vector centres".into()));
    }
    let loss = Arc::new(SquaredDistance::new(mu)?);
    let cf = loss.closed_form(&centers).expect("squared distance has a closed form");
    let w_star = cf.minimizer().unwrap().to_vec();
    let data_radius = max_distance(&centers, &w_star);
    let meta = ObjectiveMeta {
        lipschitz: loss
            .lipschitz_on_ball(&centers, &w_star, data_radius)
            .unwrap(),
        smoothness: Some(mu),
        weak_convexity: Some(0.0),
        f_star: cf.min_value(),
        kl_spec: Some(KLSpec {
            gamma: 1.0 / (2.0 * mu).sqrt(),
            kappa: 2.0,
            region: Region::Everywhere,
        }),
        growth_spec: Some(GrowthSpec {
            lambda: (mu / 2.0).sqrt(),
            tau: 2.0,
        }),
        w_star: Some(w_star),
        notes: Default::default(),
    };
    Ok(EmpiricalObjective::new(loss, centers, meta))
}

/// Clipped quadratic over the given centres; see [`HuberizedQuadratic`].
pub fn make_huberized_quadratic(
    mu: f64,
    clip: f64,
    centers: Dataset,
) -> Result<EmpiricalObjective, LossError> {
    let loss = Arc::new(HuberizedQuadratic::new(mu, clip)?);
    let mean = centers.mean_vector();
    let mut meta = ObjectiveMeta {
        lipschitz: clip,
        smoothness: Some(mu),
        weak_convexity: Some(0.0),
        ..Default::default()
    };
    // when every example is in its quadratic piece at the mean, the mean is
    // the minimizer and F agrees with the plain quadratic nearby
    if mu * max_distance(&centers, &mean) <= clip {
        let quad = SquaredDistance::new(mu)?.closed_form(&centers).unwrap();
        meta.f_star = quad.min_value();
        meta.w_star = Some(mean);
    }
    Ok(EmpiricalObjective::new(loss, centers, meta))
}

/// `F(w) = ⟨mean(x), w⟩`; unbounded below, used for accounting tests where
/// the gradient never shrinks.
pub fn make_linear(points: Dataset) -> Result<EmpiricalObjective, LossError> {
    let loss: Arc<dyn Loss> = Arc::new(Linear);
    let l0 = loss
        .lipschitz_on_ball(&points, &vec![0.0; points.dim()], 0.0)
        .unwrap();
    let meta = ObjectiveMeta {
        lipschitz: l0,
        smoothness: Some(0.0),
        weak_convexity: Some(0.0),
        ..Default::default()
    };
    Ok(EmpiricalObjective::new(loss, points, meta))
}

/// One-dimensional growth instance over sign tokens.
///
/// The dataset holds `⌈n(1+ρ)/2⌉` tokens of the majority sign (`+1`, or `−1`
/// when `mirrored`). The realised proportion `ρ_eff = (n₊ − n₋)/n` is
/// recorded under `notes["effective_rho"]`; the minimizer is `±a` with value
/// `(1 − ρ_eff)·a`.
pub fn make_growth_instance(
    a: f64,
    tau: f64,
    rho_frac: f64,
    n: usize,
    mirrored: bool,
) -> Result<EmpiricalObjective, LossError> {
    if !(rho_frac > 0.0 && rho_frac < 1.0) {
        return Err(LossError::Domain(format!(
            "rho_frac must lie in (0,1), got {rho_frac}"
        )));
    }
    if n == 0 {
        return Err(LossError::Domain("n must be at least 1".into()));
    }
    let loss = Arc::new(GrowthPiecewise::new(a, tau)?);
    let majority = ((n as f64) * (1.0 + rho_frac) / 2.0).ceil() as usize;
    let majority = majority.min(n);
    let minority = n - majority;
    let effective = (majority as f64 - minority as f64) / n as f64;
    let (maj, min) = if mirrored { (-1i8, 1i8) } else { (1i8, -1i8) };
    let mut signs = vec![maj; majority];
    signs.extend(std::iter::repeat_n(min, minority));
    let data = Dataset::from_signs(signs)?;
    let w_star = if mirrored { -a } else { a };
    let mut notes = std::collections::BTreeMap::new();
    notes.insert("effective_rho".to_string(), effective);
    notes.insert("a".to_string(), a);
    let meta = ObjectiveMeta {
        lipschitz: 1.0,
        smoothness: None,
        weak_convexity: Some(0.0),
        f_star: Some((1.0 - effective) * a),
        w_star: Some(vec![w_star]),
        kl_spec: None,
        growth_spec: Some(GrowthSpec { lambda: 1.0, tau }),
        notes,
    };
    Ok(EmpiricalObjective::new(loss, data, meta))
}

/// Linear-plus-Huber instance: `nonzero` rows are uniform sign vectors with
/// norm `l0`, the remaining `n − nonzero` rows are zero.
pub fn make_linear_huber<R: Rng + ?Sized>(
    d: usize,
    n: usize,
    l0: f64,
    radius: f64,
    nonzero: usize,
    rng: &mut R,
) -> Result<EmpiricalObjective, LossError> {
    if nonzero == 0 || nonzero > n {
        return Err(LossError::Domain(format!(
            "need 1 <= nonzero <= n, got nonzero = {nonzero}, n = {n}"
        )));
    }
    if d == 0 {
        return Err(LossError::Domain("d must be at least 1".into()));
    }
    let mut rows: Vec<Vec<f64>> = (0..nonzero).map(|_| sign_vectors(d, l0, rng)).collect();
    rows.extend((nonzero..n).map(|_| vec![0.0; d]));
    linear_huber_from_rows(rows, l0, radius)
}

/// Linear-plus-Huber instance over explicit rows. `λ = N·L₀/(2nD)` where `N`
/// counts the non-zero rows, which places the minimizer
/// `w* = −Σx_i/(2nλ)` inside `B(0, D)`.
pub fn linear_huber_from_rows(
    rows: Vec<Vec<f64>>,
    l0: f64,
    radius: f64,
) -> Result<EmpiricalObjective, LossError> {
    if !(l0 > 0.0 && radius > 0.0) {
        return Err(LossError::Domain(format!(
            "l0 and radius must be positive, got {l0}, {radius}"
        )));
    }
    let data = Dataset::from_vectors(rows)?;
    let n = data.len() as f64;
    let nonzero = data
        .points()
        .iter()
        .filter(|p| p.as_vector().iter().any(|x| *x != 0.0))
        .count();
    if nonzero == 0 {
        return Err(LossError::Domain("at least one row must be non-zero".into()));
    }
    if let Some(p) = data
        .points()
        .iter()
        .find(|p| linalg::norm(p.as_vector()) > l0 * (1.0 + 1e-12))
    {
        return Err(LossError::Domain(format!(
            "row norm {} exceeds l0 = {l0}",
            linalg::norm(p.as_vector())
        )));
    }
    let lambda = nonzero as f64 * l0 / (2.0 * n * radius);
    let loss = Arc::new(LinearHuber::new(lambda, radius)?);
    let sum: Vec<f64> = {
        let mut s = data.mean_vector();
        linalg::scale(&mut s, n);
        s
    };
    let w_star: Vec<f64> = sum.iter().map(|s| -s / (2.0 * n * lambda)).collect();
    let probe = EmpiricalObjective::new(loss.clone(), data.clone(), ObjectiveMeta::default());
    let f_star = probe.summed_value(&w_star);
    let meta = ObjectiveMeta {
        lipschitz: l0 + 4.0 * lambda * radius,
        smoothness: Some(2.0 * lambda),
        weak_convexity: Some(0.0),
        f_star: Some(f_star),
        kl_spec: Some(KLSpec {
            gamma: 1.0 / (2.0 * lambda.sqrt()),
            kappa: 2.0,
            region: Region::Ball {
                center: vec![0.0; data.dim()],
                radius: 4.0 * radius,
            },
        }),
        growth_spec: Some(GrowthSpec {
            lambda: lambda.sqrt(),
            tau: 2.0,
        }),
        w_star: Some(w_star),
        notes: [("lambda".to_string(), lambda), ("nonzero".to_string(), nonzero as f64)]
            .into_iter()
            .collect(),
    };
    Ok(EmpiricalObjective::new(loss, data, meta))
}

/// `F_c(w) = F(w) + weight·‖w − center‖²`.
///
/// If `F` is `weight`-weakly convex the result is `weight`-strongly convex.
/// The declared Lipschitz constant is inherited: the regulariser is
/// data-independent and does not change gradient sensitivity.
pub fn prox_regularize(
    obj: &EmpiricalObjective,
    center: &[f64],
    weight: f64,
) -> Result<EmpiricalObjective, LossError> {
    if center.len() != obj.dim() {
        return Err(LossError::DimensionMismatch {
            expected: obj.dim(),
            got: center.len(),
        });
    }
    let loss = Arc::new(Proximal::new(obj.loss().clone(), center.to_vec(), weight)?);
    let base = obj.meta();
    let mut notes = std::collections::BTreeMap::new();
    if base.weak_convexity.is_some_and(|wc| wc <= weight) {
        notes.insert("strong_convexity".to_string(), weight);
    }
    let mut meta = ObjectiveMeta {
        lipschitz: base.lipschitz,
        smoothness: base.smoothness.map(|s| s + 2.0 * weight),
        weak_convexity: None,
        notes,
        ..Default::default()
    };
    let out = EmpiricalObjective::new(loss, obj.dataset().clone(), meta.clone());
    if let Some(cf) = out.closed_form() {
        meta.w_star = cf.minimizer().map(<[f64]>::to_vec);
        meta.f_star = cf.min_value();
        let mut out = out;
        *out.meta_mut() = meta;
        return Ok(out);
    }
    Ok(out)
}
