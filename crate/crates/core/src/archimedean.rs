//! The singular integral `σ∞(w; F) = lim_{δ→0} ∫ w(u) K(-F(u); δ) du`, its
//! biquadratic analogue `𝔗`, the triangle kernel `K(u; δ) = δ^{-2}(δ - |u|)⁺`,
//! and the box/annular weight functions that select the counting region.
//!
//! Each δ-level integral is estimated by Monte Carlo over the support box of
//! the weight, with one independent, seeded PRNG stream per δ so runs are
//! reproducible sample for sample. The δ-limit is taken by linear
//! extrapolation of the last two schedule points; a run whose final two
//! δ-levels disagree by more than five combined standard errors is refused
//! as non-convergent rather than extrapolated.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::forms::{BiquadraticForm, FormError, QuadraticForm};
use crate::padic::{singular_series, DensityEstimate, PadicError};

/// Geometric default δ schedule; the linear-in-δ extrapolation uses the
/// final two entries.
pub const DEFAULT_DELTAS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

#[derive(Debug, Error)]
pub enum ArchError {
    #[error("{0}")]
    InvalidParams(String),
    #[error("final delta pair differs by {gap:.3e}, more than 5 x combined stderr {stderr:.3e}")]
    NonConvergent { gap: f64, stderr: f64 },
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

/// `K(u; δ) = δ^{-2}(δ - |u|)` for `|u| ≤ δ`, else 0. Unit mass for every δ,
/// and `K(tu; δ) = t^{-1} K(u; δ/t)` for `t > 0`.
pub fn kernel_k(u: f64, delta: f64) -> f64 {
    assert!(delta > 0.0, "kernel needs delta > 0, got {delta}");
    let slack = delta - u.abs();
    if slack <= 0.0 {
        0.0
    } else {
        slack / (delta * delta)
    }
}

/// `exp(-1/t)`-based transition: 0 for `t ≤ 0`, 1 for `t ≥ 1`, strictly
/// increasing and smooth in between.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// A weight on `ℝ^n`, evaluated in the sup-norm radius `ρ(u) = max |u_i|`.
///
/// `box_w0(κ)` is the sharp indicator of `ρ ≤ κ`. The annular pair brackets
/// the unit box away from the origin: `annular_w1(η)` is supported in
/// `η ≤ ρ ≤ 1` with plateau `[2η, 1-η]`, `annular_w2(η)` is supported in
/// `η ≤ ρ ≤ 1+η` with plateau `[2η, 1]`, so pointwise
/// `w1 ≤ w0 ≤ w2 + w0(u/2η)`.
#[derive(Debug, Clone, Copy)]
pub enum WeightFunction {
    Box { kappa: f64 },
    AnnularInner { eta: f64 },
    AnnularOuter { eta: f64 },
    Custom { f: fn(&[f64]) -> f64, halfwidth: f64 },
}

fn check_eta(eta: f64) -> Result<f64, ArchError> {
    if !(eta > 0.0 && eta < 0.25) {
        return Err(ArchError::InvalidParams(format!(
            "annular weights need eta in (0, 1/4), got {eta}"
        )));
    }
    Ok(eta)
}

impl WeightFunction {
    pub fn box_w0(kappa: f64) -> Result<Self, ArchError> {
        if kappa <= 0.0 {
            return Err(ArchError::InvalidParams(format!("box weight needs kappa > 0, got {kappa}")));
        }
        Ok(WeightFunction::Box { kappa })
    }

    pub fn annular_w1(eta: f64) -> Result<Self, ArchError> {
        Ok(WeightFunction::AnnularInner { eta: check_eta(eta)? })
    }

    pub fn annular_w2(eta: f64) -> Result<Self, ArchError> {
        Ok(WeightFunction::AnnularOuter { eta: check_eta(eta)? })
    }

    pub fn custom(f: fn(&[f64]) -> f64, halfwidth: f64) -> Self {
        WeightFunction::Custom { f, halfwidth }
    }

    /// Sup-norm half-width of the support box; the MC sampler draws from
    /// `[-h, h]^n` with this `h`.
    pub fn support_halfwidth(&self) -> f64 {
        match self {
            WeightFunction::Box { kappa } => *kappa,
            WeightFunction::AnnularInner { .. } => 1.0,
            WeightFunction::AnnularOuter { eta } => 1.0 + eta,
            WeightFunction::Custom { halfwidth, .. } => *halfwidth,
        }
    }

    pub fn evaluate(&self, u: &[f64]) -> f64 {
        let rho = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        match self {
            WeightFunction::Box { kappa } => {
                if rho <= *kappa {
                    1.0
                } else {
                    0.0
                }
            }
            WeightFunction::AnnularInner { eta } => {
                let up = smooth_step((rho - eta) / eta);
                let down = smooth_step((1.0 - rho) / eta);
                up.min(down)
            }
            WeightFunction::AnnularOuter { eta } => {
                let up = smooth_step((rho - eta) / eta);
                let down = smooth_step((1.0 + eta - rho) / eta);
                up.min(down)
            }
            WeightFunction::Custom { f, .. } => f(u),
        }
    }
}

/// One δ-level of a kernel-smoothed integral.
#[derive(Debug, Clone, Copy)]
pub struct DeltaPoint {
    pub delta: f64,
    pub estimate: f64,
    pub stderr: f64,
}

/// A Monte Carlo kernel-integral estimate: the δ→0 extrapolation together
/// with the per-δ sequence it came from.
#[derive(Debug, Clone)]
pub struct IntegralEstimate {
    pub value: f64,
    pub mc_stderr: f64,
    pub delta_schedule: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub per_delta: Vec<DeltaPoint>,
}

fn check_schedule(schedule: &[f64]) -> Result<(), ArchError> {
    if schedule.is_empty() {
        return Err(ArchError::InvalidParams("delta schedule must be nonempty".into()));
    }
    for w in schedule.windows(2) {
        if w[1] >= w[0] {
            return Err(ArchError::InvalidParams(format!(
                "delta schedule must be strictly decreasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    if *schedule.last().unwrap() <= 0.0 {
        return Err(ArchError::InvalidParams("deltas must be positive".into()));
    }
    Ok(())
}

const CHUNK: u64 = 65_536;

/// MC estimate of `∫_{[-h,h]^dim} g(u, δ) du` for each δ, then linear
/// extrapolation of the final two points to δ = 0. One ChaCha8 stream per
/// δ index; samples are drawn and reduced in fixed chunk order.
fn mc_schedule(
    dim: usize,
    halfwidth: f64,
    schedule: &[f64],
    samples: u64,
    seed: u64,
    g: impl Fn(&[f64], f64) -> f64,
) -> Result<IntegralEstimate, ArchError> {
    check_schedule(schedule)?;
    if samples == 0 {
        return Err(ArchError::InvalidParams("samples must be positive".into()));
    }
    let vol = (2.0 * halfwidth).powi(dim as i32);
    let mut per_delta = Vec::with_capacity(schedule.len());
    let mut u = vec![0.0f64; dim];
    for (k, &delta) in schedule.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64 + 1);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut left = samples;
        while left > 0 {
            let take = left.min(CHUNK);
            let mut csum = 0.0;
            let mut csumsq = 0.0;
            for _ in 0..take {
                for ui in u.iter_mut() {
                    *ui = (2.0 * rng.random::<f64>() - 1.0) * halfwidth;
                }
                let v = g(&u, delta) * vol;
                csum += v;
                csumsq += v * v;
            }
            sum += csum;
            sumsq += csumsq;
            left -= take;
        }
        let mean = sum / samples as f64;
        let var = (sumsq / samples as f64 - mean * mean).max(0.0);
        per_delta.push(DeltaPoint {
            delta,
            estimate: mean,
            stderr: (var / samples as f64).sqrt(),
        });
    }
    let (value, mc_stderr) = if per_delta.len() == 1 {
        (per_delta[0].estimate, per_delta[0].stderr)
    } else {
        let a = per_delta[per_delta.len() - 2];
        let b = per_delta[per_delta.len() - 1];
        let combined = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
        let gap = (b.estimate - a.estimate).abs();
        if gap > 5.0 * combined {
            return Err(ArchError::NonConvergent { gap, stderr: combined });
        }
        // Linear model I(δ) = I(0) + cδ through the last two points.
        let c = b.delta / (a.delta - b.delta);
        let value = (1.0 + c) * b.estimate - c * a.estimate;
        let var = (1.0 + c) * (1.0 + c) * b.stderr * b.stderr + c * c * a.stderr * a.stderr;
        (value, var.sqrt())
    };
    Ok(IntegralEstimate {
        value,
        mc_stderr,
        delta_schedule: schedule.to_vec(),
        samples,
        seed,
        per_delta,
    })
}

fn gram_f64(f: &QuadraticForm) -> Result<Vec<Vec<f64>>, ArchError> {
    Ok(f.gram_i64()?
        .into_iter()
        .map(|row| row.into_iter().map(|v| v as f64).collect())
        .collect())
}

fn eval_gram(gram: &[Vec<f64>], u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, row) in gram.iter().enumerate() {
        let mut r = 0.0;
        for (j, &g) in row.iter().enumerate() {
            r += g * u[j];
        }
        acc += r * u[i];
    }
    acc
}

/// `σ∞(w; F)`: MC estimates of `σ^{(δ)} = ∫ w(u) K(-F(u); δ) du` along the
/// schedule, extrapolated to δ = 0.
pub fn sigma_infinity(
    f: &QuadraticForm,
    w: &WeightFunction,
    schedule: &[f64],
    samples: u64,
    seed: u64,
) -> Result<IntegralEstimate, ArchError> {
    if f.discriminant().is_zero() {
        return Err(FormError::SingularForm.into());
    }
    let gram = gram_f64(f)?;
    let h = w.support_halfwidth();
    mc_schedule(f.n(), h, schedule, samples, seed, |u, delta| {
        let wu = w.evaluate(u);
        if wu == 0.0 {
            return 0.0;
        }
        wu * kernel_k(-eval_gram(&gram, u), delta)
    })
}

/// `𝔗`: the same kernel limit for a biquadratic form over `[-1,1]^{2n}`,
/// sampling `(x, y)` jointly.
pub fn joint_singular_integral(
    form: &BiquadraticForm,
    schedule: &[f64],
    samples: u64,
    seed: u64,
) -> Result<IntegralEstimate, ArchError> {
    let n = form.n();
    let coeffs: Vec<(usize, usize, usize, usize, f64)> = form
        .coeffs_i64()?
        .into_iter()
        .map(|(i, j, k, l, c)| (i, j, k, l, c as f64))
        .collect();
    mc_schedule(2 * n, 1.0, schedule, samples, seed, |u, delta| {
        let (x, y) = u.split_at(n);
        let mut fv = 0.0;
        for &(i, j, k, l, c) in &coeffs {
            fv += c * x[i] * x[j] * y[k] * y[l];
        }
        kernel_k(-fv, delta)
    })
}

/// The predicted count `σ∞(w; F) · 𝔖(F) · B^{n-2}` with an uncertainty that
/// combines the MC standard error and the singular series tail bound.
#[derive(Debug, Clone)]
pub struct PredictedMainTerm {
    pub value: f64,
    pub uncertainty: f64,
    pub sigma: IntegralEstimate,
    pub series: DensityEstimate,
}

#[allow(clippy::too_many_arguments)]
pub fn predicted_main_term(
    f: &QuadraticForm,
    w: &WeightFunction,
    b: f64,
    q_max: u64,
    p_max: u64,
    schedule: &[f64],
    samples: u64,
    seed: u64,
    budget: u64,
) -> Result<PredictedMainTerm, ArchError> {
    let n = f.n();
    if n < 5 {
        return Err(ArchError::InvalidParams(format!(
            "the main-term prediction needs n >= 5, got n = {n}"
        )));
    }
    if b < 1.0 {
        return Err(ArchError::InvalidParams(format!("height bound must be >= 1, got {b}")));
    }
    let sigma = sigma_infinity(f, w, schedule, samples, seed)?;
    let series = singular_series(f, q_max, p_max, budget)?;
    let growth = b.powi(n as i32 - 2);
    let value = sigma.value * series.value * growth;
    let uncertainty = (sigma.value.abs() * series.tail_bound
        + series.value.abs() * sigma.mc_stderr
        + sigma.mc_stderr * series.tail_bound)
        * growth;
    Ok(PredictedMainTerm { value, uncertainty, sigma, series })
}
