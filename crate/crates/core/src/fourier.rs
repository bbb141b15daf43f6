//! The Fourier transform `T(F)(t) = E(e^{−iX_t} F)` of functionals of
//! two-sided Brownian motion, its Monte Carlo estimator, and closed forms.
//!
//! `H_n` below is the sign-alternating Hermite variant defined by
//! `(d/dξ)ⁿ e^{−ξ²/2} = H_n(ξ) e^{−ξ²/2}`, i.e. `H_n = (−1)ⁿ He_n` where `He_n`
//! is the usual probabilists' polynomial.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{Estimate, PathEnsemble};

/// Functional evaluated on one path: receives the grid and the path values.
pub type PathCallback = dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync;

#[derive(Clone)]
pub enum FunctionalKind {
    /// `ω ↦ e^{iX_s(ω)}`.
    ExpI { s: f64 },
    /// `ω ↦ X_s(ω)ⁿ`.
    Monomial { s: f64, n: u32 },
    /// An arbitrary rule over one path.
    Custom { label: String, f: Arc<PathCallback> },
}

/// A path functional with an optional adaptedness tag: `adapted_to = Some(s)`
/// asserts that the value depends only on the path up to time `s`. The tag of
/// a custom functional is taken on trust.
#[derive(Clone)]
pub struct PathFunctional {
    pub kind: FunctionalKind,
    pub adapted_to: Option<f64>,
}

impl fmt::Debug for PathFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            FunctionalKind::ExpI { s } => format!("ExpI({s})"),
            FunctionalKind::Monomial { s, n } => format!("Monomial({s}, {n})"),
            FunctionalKind::Custom { label, .. } => format!("Custom({label})"),
        };
        f.debug_struct("PathFunctional").field("kind", &kind).field("adapted_to", &self.adapted_to).finish()
    }
}

impl PathFunctional {
    pub fn exp_i(s: f64) -> Self {
        PathFunctional { kind: FunctionalKind::ExpI { s }, adapted_to: Some(s.max(0.0)) }
    }

    pub fn monomial(s: f64, n: u32) -> Self {
        PathFunctional { kind: FunctionalKind::Monomial { s, n }, adapted_to: Some(s.max(0.0)) }
    }

    pub fn custom<F>(label: &str, adapted_to: Option<f64>, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    {
        PathFunctional {
            kind: FunctionalKind::Custom { label: label.to_string(), f: Arc::new(f) },
            adapted_to,
        }
    }

    /// The constant functional 1.
    pub fn one() -> Self {
        Self::exp_i(0.0)
    }

    pub fn untagged(mut self) -> Self {
        self.adapted_to = None;
        self
    }

    fn bind(&self, grid: &[f64]) -> Result<Bound> {
        let locate = |s: f64| {
            crate::gaussian::grid_index(grid, s)
                .map_err(|_| Error::NonEvaluable(format!("time {s} is not on the simulation grid")))
        };
        Ok(match &self.kind {
            FunctionalKind::ExpI { s } => Bound::ExpI(locate(*s)?),
            FunctionalKind::Monomial { s, n } => Bound::Monomial(locate(*s)?, *n),
            FunctionalKind::Custom { f, .. } => Bound::Custom(f.clone()),
        })
    }
}

enum Bound {
    ExpI(usize),
    Monomial(usize, u32),
    Custom(Arc<PathCallback>),
}

impl Bound {
    /// `e^{−iX_t} F` on one path. For `ExpI` the phases are combined before
    /// exponentiating so that `s = t` gives exactly 1.
    fn weighted(&self, grid: &[f64], path: &[f64], jt: usize) -> Complex64 {
        let xt = path[jt];
        match self {
            Bound::ExpI(js) => Complex64::cis(path[*js] - xt),
            Bound::Monomial(js, n) => Complex64::cis(-xt) * path[*js].powi(*n as i32),
            Bound::Custom(f) => Complex64::cis(-xt) * f(grid, path),
        }
    }
}

/// A complex Monte Carlo mean with componentwise standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub re: Estimate,
    pub im: Estimate,
}

impl ComplexEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.mean, self.im.mean)
    }

    /// The larger of the two componentwise standard errors.
    pub fn stderr(&self) -> f64 {
        self.re.stderr.max(self.im.stderr)
    }

    /// `|value − target| / stderr`, zero when the value is exact.
    pub fn sigmas(&self, target: Complex64) -> f64 {
        let dev = (self.value() - target).norm();
        if dev == 0.0 {
            0.0
        } else {
            dev / self.stderr()
        }
    }

    pub fn within(&self, target: Complex64, k: f64) -> bool {
        self.sigmas(target) <= k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformEstimate {
    pub times: Vec<f64>,
    pub estimates: Vec<ComplexEstimate>,
    pub m: usize,
    pub seed: u64,
}

impl TransformEstimate {
    pub fn values(&self) -> Vec<Complex64> {
        self.estimates.iter().map(ComplexEstimate::value).collect()
    }

    pub fn stderr(&self) -> Vec<f64> {
        self.estimates.iter().map(ComplexEstimate::stderr).collect()
    }

    pub fn at(&self, t: f64) -> Result<&ComplexEstimate> {
        self.times
            .iter()
            .position(|&x| (x - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .map(|j| &self.estimates[j])
            .ok_or(Error::OffGrid(t))
    }
}

/// `(1/M) Σ_paths e^{−iX_t} F(path)` for each `t` in `times`.
pub fn transform_mc(pe: &PathEnsemble, f: &PathFunctional, times: &[f64]) -> Result<TransformEstimate> {
    let bound = f.bind(pe.grid())?;
    let grid = pe.grid();
    let mut estimates = Vec::with_capacity(times.len());
    for &t in times {
        let jt = pe.index_of(t)?;
        let re = pe.statistic(|p| bound.weighted(grid, p, jt).re);
        let im = pe.statistic(|p| bound.weighted(grid, p, jt).im);
        estimates.push(ComplexEstimate {
            re: Estimate::from_samples(&re),
            im: Estimate::from_samples(&im),
        });
    }
    Ok(TransformEstimate { times: times.to_vec(), estimates, m: pe.len(), seed: pe.source().seed })
}

/// `E(e^{iX_s} · conj(e^{iX_t})) = E(e^{i(X_s − X_t)})`, the `L²(P)` inner
/// product of the adjoint images of `K_s` and `K_t`.
pub fn mc_inner(pe: &PathEnsemble, s: f64, t: f64) -> Result<ComplexEstimate> {
    let est = transform_mc(pe, &adjoint_symbol(s), &[t])?;
    Ok(est.estimates[0])
}

/// Monte Carlo `E(e^{ixX_τ})`.
pub fn empirical_char(pe: &PathEnsemble, x: f64, tau: f64) -> Result<ComplexEstimate> {
    let j = pe.index_of(tau)?;
    let re = pe.statistic(|p| (x * p[j]).cos());
    let im = pe.statistic(|p| (x * p[j]).sin());
    Ok(ComplexEstimate { re: Estimate::from_samples(&re), im: Estimate::from_samples(&im) })
}

/// `K(s, t) = e^{−|s−t|/2}`.
pub fn oracle_covariance(s: f64, t: f64) -> f64 {
    (-0.5 * (s - t).abs()).exp()
}

/// `H_n(ξ)` via `H_{n+1} = −ξ H_n − n H_{n−1}`, `H_0 = 1`, `H_1 = −ξ`.
pub fn hermite_signed(n: u32, xi: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = -xi * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `T(X_sⁿ)(t) = iⁿ e^{−t/2} s^{n/2} H_n(√s)` for `0 < s < t`.
pub fn oracle_monomial_transform(n: u32, s: f64, t: f64) -> Result<Complex64> {
    if !(0.0 < s && s < t) {
        return Err(Error::Order { s, t });
    }
    let mag = (-0.5 * t).exp() * s.powf(0.5 * n as f64) * hermite_signed(n, s.sqrt());
    Ok(Complex64::i().powu(n) * mag)
}

/// `T(F)(t) = e^{−(t−s)/2} T(F)(s)` for `F` adapted to time `s ≤ t`.
pub fn semigroup_factor(
    estimate_at_s: Complex64,
    s: f64,
    t: f64,
    f: &PathFunctional,
) -> Result<Complex64> {
    match f.adapted_to {
        Some(a) if a <= s + 1e-12 * (1.0 + s.abs()) => {}
        _ => return Err(Error::Adaptedness(s)),
    }
    if t < s {
        return Err(Error::Order { s, t });
    }
    Ok(estimate_at_s * (-0.5 * (t - s)).exp())
}

/// `(2n−1)!! = (2n−1)(2n−3)⋯3·1`, with `(−1)!! = 1`.
pub fn double_factorial(n: u32) -> Result<u128> {
    (1..=n).try_fold(1u128, |acc, k| {
        acc.checked_mul(2 * k as u128 - 1)
            .ok_or_else(|| Error::Overflow(format!("(2·{n}−1)!! exceeds 128 bits")))
    })
}

/// `(2n)! / (2ⁿ n!)`, the same number through factorials.
pub fn double_factorial_ratio(n: u32) -> Result<u128> {
    let overflow = || Error::Overflow(format!("(2·{n})! exceeds 128 bits"));
    let num = (1..=2 * n as u128).try_fold(1u128, |a, k| a.checked_mul(k)).ok_or_else(overflow)?;
    let den = (1..=n as u128).try_fold(1u128, |a, k| a.checked_mul(2 * k)).ok_or_else(overflow)?;
    Ok(num / den)
}

/// `E(X_t^{2n}) = (2n−1)!! |t|ⁿ`.
pub fn oracle_moment(n: u32, t: f64) -> f64 {
    let df: f64 = (1..=n).map(|k| (2 * k - 1) as f64).product();
    df * t.abs().powi(n as i32)
}

/// `E(e^{ixX_{1/t}}) = e^{−x²/(2t)}`.
pub fn oracle_gauss_char(x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain { kernel: "gauss-char".into(), point: t });
    }
    Ok((-x * x / (2.0 * t)).exp())
}

/// `E(e^{ixX_{1/t}} e^{−iyX_{1/t}}) = e^{−(x−y)²/(2t)}`.
pub fn oracle_gauss_char_pair(x: f64, y: f64, t: f64) -> Result<f64> {
    oracle_gauss_char(x - y, t)
}

/// `T*(K_t) = e^{iX_t}`.
pub fn adjoint_symbol(t: f64) -> PathFunctional {
    PathFunctional::exp_i(t)
}

/// `Σ_{n≤N} (−1)ⁿ (2n−1)!! dⁿ / (2n)!`, which tends to `e^{−d/2}`.
pub fn telescoping_partial_sum(d: f64, order: u32) -> f64 {
    let mut sum = 0.0;
    let mut df = 1.0;
    let mut fact = 1.0;
    for n in 0..=order {
        if n > 0 {
            df *= (2 * n - 1) as f64;
            fact *= (2 * n - 1) as f64 * (2 * n) as f64;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * df * d.powi(n as i32) / fact;
    }
    sum
}
