//! Products of orthogonal projections in a finite-dimensional Hilbert space.
//!
//! For projections `P_0, P_1, …` the defect operators are
//! `T_n = (I − P_n)⋯(I − P_0)` and the frame operators are
//! `Q_n = P_n T_{n−1}` with `Q_0 = P_0`. For every `x` and `n`,
//!
//! ```text
//! ‖x‖² = ‖T_n x‖² + Σ_{k≤n} ‖Q_k x‖²
//! ```
//!
//! so `T_n → 0` strongly exactly when `x ↦ (Q_k x)` is isometric, i.e. when
//! `Σ Q_kᵀ Q_k = I`. A sequence with that property is called *effective*.
//!
//! Projections are stored by an orthonormal basis `B` of their range and
//! applied as `B (Bᵀ x)`; no operator product is ever formed.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq, normalize, orthonormalize};

/// Default relative tolerance for [`is_effective`].
pub const DEFAULT_EFFECTIVE_TOL: f64 = 1e-12;

const ORTHONORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Use each generator once; past the end every projection is zero.
    Finite,
    /// Repeat the generator list indefinitely.
    Cyclic,
}

impl std::str::FromStr for Schedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "finite" => Ok(Schedule::Finite),
            "cyclic" => Ok(Schedule::Cyclic),
            _ => Err(Error::Parse(format!("unknown schedule {s:?}"))),
        }
    }
}

/// An orthogonal projection `P = B Bᵀ` given by an orthonormal range basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    basis: Vec<Vec<f64>>,
}

impl Projection {
    /// Projection onto `span(vectors)`. The spanning set is re-orthonormalized
    /// with modified Gram–Schmidt; linearly dependent vectors are dropped.
    pub fn onto_span(dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        for v in vectors {
            if v.len() != dim {
                return Err(Error::Dimension { expected: dim, got: v.len() });
            }
        }
        let basis = orthonormalize(vectors, 1e-10);
        let p = Projection { basis };
        let err = p.orthonormality_error();
        if err > ORTHONORMAL_TOL {
            return Err(Error::Internal(format!("range basis not orthonormal: {err:e}")));
        }
        Ok(p)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// `max |BᵀB − I|`; `P² = P` and `Pᵀ = P` hold to this accuracy.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - target).abs());
            }
        }
        worst
    }

    /// `P x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        let mut first = true;
        for b in &self.basis {
            let c = dot(b, x);
            for (o, bi) in out.iter_mut().zip(b) {
                if first {
                    *o = c * bi;
                } else {
                    *o += c * bi;
                }
            }
            first = false;
        }
        out
    }

    /// Replaces `y` with `(I − P) y` and returns the removed part `P y`.
    fn remove_from(&self, y: &mut [f64]) -> Vec<f64> {
        let q = self.apply(y);
        for (yi, qi) in y.iter_mut().zip(&q) {
            *yi -= qi;
        }
        q
    }

    /// Dense matrix `B Bᵀ`; only used for checking against the iterative path.
    pub fn to_matrix(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        for b in &self.basis {
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] += b[i] * b[j];
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSequence {
    dim: usize,
    generators: Vec<Projection>,
    schedule: Schedule,
}

impl ProjectionSequence {
    pub fn new(dim: usize, generators: Vec<Projection>, schedule: Schedule) -> Result<Self> {
        for g in &generators {
            if let Some(b) = g.basis.first() {
                if b.len() != dim {
                    return Err(Error::Dimension { expected: dim, got: b.len() });
                }
            }
        }
        Ok(ProjectionSequence { dim, generators, schedule })
    }

    /// Builds each generator from a list of spanning vectors.
    pub fn from_spans(dim: usize, spans: &[Vec<Vec<f64>>], schedule: Schedule) -> Result<Self> {
        let generators =
            spans.iter().map(|s| Projection::onto_span(dim, s)).collect::<Result<Vec<_>>>()?;
        Self::new(dim, generators, schedule)
    }

    /// Projections onto the coordinate axes `e_0, …, e_{dim−1}`.
    pub fn coordinate(dim: usize, schedule: Schedule) -> Self {
        let generators = (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                Projection { basis: vec![e] }
            })
            .collect();
        ProjectionSequence { dim, generators, schedule }
    }

    /// Generators with ranges spanned by standard-normal vectors of the given ranks.
    pub fn random<R: Rng + ?Sized>(
        dim: usize,
        ranks: &[usize],
        schedule: Schedule,
        rng: &mut R,
    ) -> Result<Self> {
        let spans: Vec<Vec<Vec<f64>>> = ranks
            .iter()
            .map(|&r| {
                (0..r)
                    .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
                    .collect()
            })
            .collect();
        Self::from_spans(dim, &spans, schedule)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Projection] {
        &self.generators
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    /// Default horizon `10 · dim · len(generators)`.
    pub fn default_horizon(&self) -> usize {
        10 * self.dim * self.generators.len().max(1)
    }

    /// `P_n`, or `None` where the projection is zero.
    pub fn projection(&self, n: usize) -> Option<&Projection> {
        if self.generators.is_empty() {
            return None;
        }
        match self.schedule {
            Schedule::Finite => self.generators.get(n),
            Schedule::Cyclic => Some(&self.generators[n % self.generators.len()]),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Walks `y_{-1} = x`, `y_n = (I − P_n) y_{n−1}`, handing `(n, Q_n x, T_n x)`
    /// to `visit` until it returns `false` or `n_max` is reached.
    fn walk<F>(&self, x: &[f64], n_max: usize, mut visit: F)
    where
        F: FnMut(usize, &[f64], &[f64]) -> bool,
    {
        let mut y = x.to_vec();
        let zero = vec![0.0; self.dim];
        for n in 0..=n_max {
            let q = match self.projection(n) {
                Some(p) => p.remove_from(&mut y),
                None => zero.clone(),
            };
            if !visit(n, &q, &y) {
                break;
            }
        }
    }

    /// `T_n x`.
    pub fn apply_defect(&self, x: &[f64], n: usize) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut y = x.to_vec();
        for k in 0..=n {
            if let Some(p) = self.projection(k) {
                p.remove_from(&mut y);
            }
        }
        Ok(y)
    }

    /// `Q_n x = P_n T_{n−1} x`.
    pub fn apply_q(&self, x: &[f64], n: usize) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; self.dim];
        self.walk(x, n, |k, q, _| {
            if k == n {
                out.copy_from_slice(q);
            }
            true
        });
        Ok(out)
    }

    pub fn energy_ledger(&self, x: &[f64], n_max: usize) -> Result<EnergyLedger> {
        self.check_dim(x)?;
        let total = norm_sq(x);
        let mut defect_norms = Vec::with_capacity(n_max + 1);
        let mut q_norms = Vec::with_capacity(n_max + 1);
        let mut residual_identity = Vec::with_capacity(n_max + 1);
        let mut cumulative = 0.0;
        self.walk(x, n_max, |_, q, t| {
            let qn = norm_sq(q);
            let tn = norm_sq(t);
            cumulative += qn;
            defect_norms.push(tn);
            q_norms.push(qn);
            residual_identity.push((total - tn - cumulative).abs());
            true
        });
        Ok(EnergyLedger { x0: x.to_vec(), defect_norms, q_norms, residual_identity })
    }

    /// `(Q_0 x, …, Q_{n_max} x)`.
    pub fn analysis(&self, x: &[f64], n_max: usize) -> Result<Vec<Vec<f64>>> {
        self.check_dim(x)?;
        let mut out = Vec::with_capacity(n_max + 1);
        self.walk(x, n_max, |_, q, _| {
            out.push(q.to_vec());
            true
        });
        Ok(out)
    }

    /// `Σ_j Q_jᵀ ξ_j`, evaluated right to left as
    /// `S_j = P_j ξ_j + (I − P_j) S_{j+1}`.
    pub fn synthesis(&self, xi: &[Vec<f64>]) -> Result<Vec<f64>> {
        for v in xi {
            self.check_dim(v)?;
        }
        let mut acc = vec![0.0; self.dim];
        for (j, v) in xi.iter().enumerate().rev() {
            if let Some(p) = self.projection(j) {
                p.remove_from(&mut acc);
                let pv = p.apply(v);
                for (a, b) in acc.iter_mut().zip(&pv) {
                    *a += b;
                }
            }
        }
        Ok(acc)
    }

    /// Whether `‖T_n x‖² ≤ tol ‖x‖²` is reached for every trial within `n_max`
    /// steps. For cyclic schedules this is a semi-decision at a finite horizon.
    pub fn is_effective(
        &self,
        trials: &[Vec<f64>],
        tol: f64,
        n_max: usize,
    ) -> Result<EffectivenessReport> {
        let mut per_trial = Vec::with_capacity(trials.len());
        for x in trials {
            self.check_dim(x)?;
            let total = norm_sq(x);
            if total == 0.0 {
                per_trial.push(TrialCurve { final_defect: 0.0, steps: 0, curve: Vec::new() });
                continue;
            }
            let mut curve = Vec::new();
            let mut converged = false;
            self.walk(x, n_max, |_, _, t| {
                let rel = norm_sq(t) / total;
                curve.push(rel);
                converged = rel <= tol;
                !converged
            });
            per_trial.push(TrialCurve {
                final_defect: *curve.last().unwrap_or(&1.0),
                steps: curve.len(),
                curve,
            });
        }
        let effective = per_trial.iter().all(|t| t.final_defect <= tol);
        Ok(EffectivenessReport { effective, per_trial })
    }

    /// The Parseval criterion on the trials: `|Σ_{j≤n_max} ‖Q_j x‖² − ‖x‖²| ≤ tol ‖x‖²`.
    /// Uses only the analysis operator, not the defect iterates.
    pub fn parseval_holds(&self, trials: &[Vec<f64>], tol: f64, n_max: usize) -> Result<bool> {
        for x in trials {
            let total = norm_sq(x);
            let captured: f64 = self.analysis(x, n_max)?.iter().map(|q| norm_sq(q)).sum();
            if (captured - total).abs() > tol * total {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The sequence `U P_n Uᵀ` on `ℝ^m` for an isometry `U: ℝ^dim → ℝ^m`.
    pub fn conjugate(&self, u: &DMatrix<f64>) -> Result<ProjectionSequence> {
        if u.ncols() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: u.ncols() });
        }
        let defect = u.transpose() * u - DMatrix::identity(self.dim, self.dim);
        let err = defect.amax();
        if err > 1e-10 {
            return Err(Error::NotIsometry(err));
        }
        let m = u.nrows();
        let generators = self
            .generators
            .iter()
            .map(|p| Projection {
                basis: p
                    .basis
                    .iter()
                    .map(|b| {
                        let v = u * nalgebra::DVector::from_column_slice(b);
                        v.as_slice().to_vec()
                    })
                    .collect(),
            })
            .collect();
        Ok(ProjectionSequence { dim: m, generators, schedule: self.schedule })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub x0: Vec<f64>,
    /// `‖T_n x‖²`
    pub defect_norms: Vec<f64>,
    /// `‖Q_n x‖²`
    pub q_norms: Vec<f64>,
    /// `|‖x‖² − ‖T_n x‖² − Σ_{k≤n} ‖Q_k x‖²|`
    pub residual_identity: Vec<f64>,
}

impl EnergyLedger {
    pub fn max_residual(&self) -> f64 {
        self.residual_identity.iter().copied().fold(0.0, f64::max)
    }

    pub fn cumulative_q(&self) -> Vec<f64> {
        self.q_norms
            .iter()
            .scan(0.0, |acc, q| {
                *acc += q;
                Some(*acc)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialCurve {
    /// `‖T_n x‖² / ‖x‖²` at the last step taken.
    pub final_defect: f64,
    pub steps: usize,
    pub curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectivenessReport {
    pub effective: bool,
    pub per_trial: Vec<TrialCurve>,
}

pub fn apply_defect(ps: &ProjectionSequence, x: &[f64], n: usize) -> Result<Vec<f64>> {
    ps.apply_defect(x, n)
}

pub fn apply_q(ps: &ProjectionSequence, x: &[f64], n: usize) -> Result<Vec<f64>> {
    ps.apply_q(x, n)
}

pub fn energy_ledger(ps: &ProjectionSequence, x: &[f64], n_max: usize) -> Result<EnergyLedger> {
    ps.energy_ledger(x, n_max)
}

pub fn is_effective(
    ps: &ProjectionSequence,
    trials: &[Vec<f64>],
    tol: f64,
    n_max: usize,
) -> Result<EffectivenessReport> {
    ps.is_effective(trials, tol, n_max)
}

pub fn analysis(ps: &ProjectionSequence, x: &[f64], n_max: usize) -> Result<Vec<Vec<f64>>> {
    ps.analysis(x, n_max)
}

pub fn synthesis(ps: &ProjectionSequence, xi: &[Vec<f64>]) -> Result<Vec<f64>> {
    ps.synthesis(xi)
}

pub fn conjugate(ps: &ProjectionSequence, u: &DMatrix<f64>) -> Result<ProjectionSequence> {
    ps.conjugate(u)
}

/// Cyclic Kaczmarz sweeps `x ← x + (bᵢ − ⟨aᵢ, x⟩)/‖aᵢ‖² · aᵢ`.
///
/// The update is carried out with the unit row `uᵢ = aᵢ/‖aᵢ‖` as
/// `x ← x + (bᵢ/‖aᵢ‖ − ⟨uᵢ, x⟩) uᵢ`, so with `b = 0` every iterate equals the
/// corresponding [`ProjectionSequence::apply_defect`] iterate bit for bit.
pub fn kaczmarz_solve(
    rows: &[Vec<f64>],
    rhs: &[f64],
    x0: &[f64],
    sweeps: usize,
) -> Result<Vec<f64>> {
    if rows.len() != rhs.len() {
        return Err(Error::Dimension { expected: rows.len(), got: rhs.len() });
    }
    let dim = x0.len();
    let mut units = Vec::with_capacity(rows.len());
    for (i, a) in rows.iter().enumerate() {
        if a.len() != dim {
            return Err(Error::Dimension { expected: dim, got: a.len() });
        }
        let nrm = norm_sq(a).sqrt();
        let u = normalize(a).ok_or(Error::ZeroRow(i))?;
        units.push((u, rhs[i] / nrm));
    }
    let mut x = x0.to_vec();
    for _ in 0..sweeps {
        for (u, beta) in &units {
            let step = beta - dot(u, &x);
            for (xi, ui) in x.iter_mut().zip(u) {
                *xi += step * ui;
            }
        }
    }
    Ok(x)
}
