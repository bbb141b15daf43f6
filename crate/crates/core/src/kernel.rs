//! Positive-definite kernels on the real line, Gram matrices and a numerical
//! positive-definiteness certificate.
//!
//! Four kernels are provided:
//!
//! | token          | kernel                      | domain     |
//! |----------------|-----------------------------|------------|
//! | `ou`           | `exp(-|s - t| / 2)`         | ℝ          |
//! | `brownian`     | `min(s, t)`                 | `[0, 1]`   |
//! | `szego`        | `1 / (1 - s t)`             | `(-1, 1)`  |
//! | `gauss:tau=τ`  | `exp(-(s - t)² / (2 τ))`    | ℝ          |
//!
//! Points outside a kernel's domain are rejected, never clamped: the Szegő
//! kernel blows up as `s t → 1`, and a silent clamp would corrupt norms.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for [`check_pd`].
pub const DEFAULT_PD_TOL: f64 = 1e-8;

/// A real symmetric positive-definite kernel on points of type `P`.
pub trait PdKernel<P: ?Sized> {
    fn eval(&self, s: &P, t: &P) -> Result<f64>;

    /// Short human-readable name, used in error messages and reports.
    fn name(&self) -> String;
}

/// The real-line kernels. The set-intersection kernel lives in
/// [`crate::measure::SetKernel`] since its points are subsets, not reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Kernel {
    OrnsteinUhlenbeck,
    BrownianMin,
    Szego,
    GaussianRbf { tau: f64 },
}

impl Kernel {
    pub fn gaussian(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Parse(format!("gaussian scale must be positive, got {tau}")));
        }
        Ok(Kernel::GaussianRbf { tau })
    }

    /// True when `p` is inside the kernel's domain.
    pub fn contains(&self, p: f64) -> bool {
        if !p.is_finite() {
            return false;
        }
        match self {
            Kernel::OrnsteinUhlenbeck | Kernel::GaussianRbf { .. } => true,
            Kernel::BrownianMin => (0.0..=1.0).contains(&p),
            Kernel::Szego => p.abs() < 1.0,
        }
    }

    pub fn check_domain(&self, p: f64) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::Domain { kernel: self.to_string(), point: p })
        }
    }

    /// Closed-form value `K(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        self.check_domain(s)?;
        self.check_domain(t)?;
        Ok(self.eval_unchecked(s, t))
    }

    /// Closed-form value without the domain check. Callers must have
    /// validated both points.
    #[inline]
    pub(crate) fn eval_unchecked(&self, s: f64, t: f64) -> f64 {
        match *self {
            Kernel::OrnsteinUhlenbeck => (-0.5 * (s - t).abs()).exp(),
            Kernel::BrownianMin => s.min(t),
            Kernel::Szego => 1.0 / (1.0 - s * t),
            Kernel::GaussianRbf { tau } => {
                let d = s - t;
                (-(d * d) / (2.0 * tau)).exp()
            }
        }
    }

    pub fn token(&self) -> String {
        self.to_string()
    }
}

impl PdKernel<f64> for Kernel {
    fn eval(&self, s: &f64, t: &f64) -> Result<f64> {
        Kernel::eval(self, *s, *t)
    }

    fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::OrnsteinUhlenbeck => f.write_str("ou"),
            Kernel::BrownianMin => f.write_str("brownian"),
            Kernel::Szego => f.write_str("szego"),
            Kernel::GaussianRbf { tau } => write!(f, "gauss:tau={tau}"),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "ou" => Ok(Kernel::OrnsteinUhlenbeck),
            "brownian" => Ok(Kernel::BrownianMin),
            "szego" => Ok(Kernel::Szego),
            _ => {
                let tau = s
                    .strip_prefix("gauss:tau=")
                    .ok_or_else(|| Error::Parse(format!("unknown kernel token {s:?}")))?;
                let tau: f64 = tau
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad gaussian scale {tau:?}")))?;
                Kernel::gaussian(tau)
            }
        }
    }
}

impl TryFrom<String> for Kernel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Kernel> for String {
    fn from(k: Kernel) -> String {
        k.to_string()
    }
}

/// Dense Gram matrix `entries[i][j] = K(points[i], points[j])`.
#[derive(Debug, Clone)]
pub struct GramMatrix<P = f64> {
    pub points: Vec<P>,
    pub entries: DMatrix<f64>,
    pub kernel: String,
}

impl<P> GramMatrix<P> {
    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    pub fn check_pd(&self, pd_tol: f64) -> PdReport {
        check_pd(&self.entries, pd_tol)
    }
}

/// Assembles the Gram matrix of `k` over `points`. Only the upper triangle is
/// evaluated; the lower triangle is mirrored so the result is exactly symmetric.
pub fn gram<P: Clone, K: PdKernel<P> + ?Sized>(k: &K, points: &[P]) -> Result<GramMatrix<P>> {
    let n = points.len();
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = k.eval(&points[i], &points[j])?;
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(GramMatrix { points: points.to_vec(), entries, kernel: k.name() })
}

/// Outcome of a positive-definiteness check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub spectral_radius: f64,
    pub cholesky_ok: bool,
    pub pd_tol: f64,
    pub pass: bool,
}

/// Certifies `g` as numerically positive semi-definite: passes when the
/// smallest eigenvalue is at least `-pd_tol` times the spectral radius.
pub fn check_pd(g: &DMatrix<f64>, pd_tol: f64) -> PdReport {
    if g.nrows() == 0 {
        return PdReport {
            min_eigenvalue: 0.0,
            max_eigenvalue: 0.0,
            spectral_radius: 0.0,
            cholesky_ok: true,
            pd_tol,
            pass: true,
        };
    }
    // symmetric_eigen reads only one triangle; average both.
    let sym = (g + g.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    let radius = eig.eigenvalues.amax();
    let cholesky_ok = sym.cholesky().is_some();
    PdReport {
        min_eigenvalue: min,
        max_eigenvalue: max,
        spectral_radius: radius,
        cholesky_ok,
        pd_tol,
        pass: min >= -pd_tol * radius,
    }
}

/// The kernel-induced distance `‖K_s − K_t‖` in the RKHS.
pub fn induced_metric(k: &Kernel, s: f64, t: f64) -> Result<f64> {
    let kss = k.eval(s, s)?;
    let ktt = k.eval(t, t)?;
    let kst = k.eval(s, t)?;
    let radicand = kss + ktt - 2.0 * kst;
    let tol = 1e-12 * (kss.abs() + ktt.abs()).max(f64::MIN_POSITIVE);
    if radicand < -tol {
        return Err(Error::Internal(format!(
            "negative squared distance {radicand:e} between {s} and {t}"
        )));
    }
    Ok(radicand.max(0.0).sqrt())
}
