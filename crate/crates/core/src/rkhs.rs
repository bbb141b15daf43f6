//! Finite sections of a reproducing kernel Hilbert space.
//!
//! An [`RkhsElement`] is a finite combination `Σ cᵢ K(sᵢ, ·)` of kernel
//! sections. For the Szegő kernel `1/(1 − st)` the monomials `eₙ(t) = tⁿ`
//! form an orthonormal basis, and an element may additionally carry
//! coefficients on that basis; this is how functionals that are not
//! measures (derivatives at a point) are represented.
//!
//! All inner products follow from `⟨K_s, K_t⟩ = K(s, t)`,
//! `⟨K_s, eₙ⟩ = eₙ(s) = sⁿ` and `⟨eₙ, eₘ⟩ = δₙₘ`.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gram, Kernel};
use crate::linalg::symmetric_pinv;

/// Default relative singular-value cutoff for [`interpolate`].
pub const DEFAULT_RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RkhsElement {
    kernel: Kernel,
    nodes: Vec<f64>,
    coeffs: Vec<f64>,
    /// Coefficients on the monomial basis; only non-empty for the Szegő kernel.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    basis: Vec<f64>,
}

impl RkhsElement {
    pub fn zero(kernel: Kernel) -> Self {
        RkhsElement { kernel, nodes: Vec::new(), coeffs: Vec::new(), basis: Vec::new() }
    }

    pub fn new(kernel: Kernel, nodes: Vec<f64>, coeffs: Vec<f64>) -> Result<Self> {
        if nodes.len() != coeffs.len() {
            return Err(Error::Dimension { expected: nodes.len(), got: coeffs.len() });
        }
        for &s in &nodes {
            kernel.check_domain(s)?;
        }
        Ok(RkhsElement { kernel, nodes, coeffs, basis: Vec::new() })
    }

    /// The kernel section `K(s, ·)`.
    pub fn section(kernel: Kernel, s: f64) -> Result<Self> {
        Self::new(kernel, vec![s], vec![1.0])
    }

    /// `Σ aₙ eₙ` for the Szegő kernel's monomial basis.
    pub fn from_basis(kernel: Kernel, coeffs: Vec<f64>) -> Result<Self> {
        require_szego(&kernel)?;
        Ok(RkhsElement { kernel, nodes: Vec::new(), coeffs: Vec::new(), basis: coeffs })
    }

    /// The basis vector `eₙ(t) = tⁿ` of the Szegő space.
    pub fn monomial(kernel: Kernel, n: usize) -> Result<Self> {
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0;
        Self::from_basis(kernel, c)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis_coeffs(&self) -> &[f64] {
        &self.basis
    }

    fn same_kernel(&self, other: &Self) -> Result<()> {
        if self.kernel != other.kernel {
            return Err(Error::KernelMismatch(self.kernel.to_string(), other.kernel.to_string()));
        }
        Ok(())
    }

    /// `⟨self, other⟩` in the RKHS.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.same_kernel(other)?;
        Ok(self.inner_unchecked(other))
    }

    fn inner_unchecked(&self, other: &Self) -> f64 {
        let k = self.kernel;
        let mut acc = 0.0;
        for (&s, &c) in self.nodes.iter().zip(&self.coeffs) {
            let mut row = 0.0;
            for (&t, &d) in other.nodes.iter().zip(&other.coeffs) {
                row += d * k.eval_unchecked(s, t);
            }
            acc += c * row;
        }
        if !self.basis.is_empty() || !other.basis.is_empty() {
            // ⟨K_s, eₙ⟩ = sⁿ
            for (&s, &c) in self.nodes.iter().zip(&self.coeffs) {
                acc += c * power_series(&other.basis, s);
            }
            for (&t, &d) in other.nodes.iter().zip(&other.coeffs) {
                acc += d * power_series(&self.basis, t);
            }
            acc += self.basis.iter().zip(&other.basis).map(|(a, b)| a * b).sum::<f64>();
        }
        acc
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner_unchecked(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().max(0.0).sqrt()
    }

    /// `F(t) = Σ cᵢ K(sᵢ, t) + Σ aₙ tⁿ`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        self.kernel.check_domain(t)?;
        let k = self.kernel;
        let sections: f64 =
            self.nodes.iter().zip(&self.coeffs).map(|(&s, &c)| c * k.eval_unchecked(s, t)).sum();
        Ok(sections + power_series(&self.basis, t))
    }

    /// `α·self + β·other` with the node lists concatenated.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.same_kernel(other)?;
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes);
        let mut coeffs: Vec<f64> = self.coeffs.iter().map(|c| alpha * c).collect();
        coeffs.extend(other.coeffs.iter().map(|c| beta * c));
        let len = self.basis.len().max(other.basis.len());
        let basis = (0..len)
            .map(|n| {
                alpha * self.basis.get(n).copied().unwrap_or(0.0)
                    + beta * other.basis.get(n).copied().unwrap_or(0.0)
            })
            .collect();
        Ok(RkhsElement { kernel: self.kernel, nodes, coeffs, basis })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        RkhsElement {
            kernel: self.kernel,
            nodes: self.nodes.clone(),
            coeffs: self.coeffs.iter().map(|c| alpha * c).collect(),
            basis: self.basis.iter().map(|c| alpha * c).collect(),
        }
    }

    /// Merges repeated nodes (bitwise-equal) by summing their coefficients and
    /// drops nodes whose merged coefficient is exactly zero.
    pub fn compact(&self) -> Self {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[a].total_cmp(&self.nodes[b]));
        let mut nodes: Vec<f64> = Vec::new();
        let mut coeffs: Vec<f64> = Vec::new();
        for i in order {
            let s = self.nodes[i];
            match nodes.last() {
                Some(&last) if last.to_bits() == s.to_bits() => {
                    *coeffs.last_mut().unwrap() += self.coeffs[i];
                }
                _ => {
                    nodes.push(s);
                    coeffs.push(self.coeffs[i]);
                }
            }
        }
        let (nodes, coeffs) = nodes.into_iter().zip(coeffs).filter(|&(_, c)| c != 0.0).unzip();
        let mut basis = self.basis.clone();
        while basis.last() == Some(&0.0) {
            basis.pop();
        }
        RkhsElement { kernel: self.kernel, nodes, coeffs, basis }
    }

    /// `⟨self, eₙ⟩ = Σ cᵢ sᵢⁿ + aₙ` (Szegő only).
    pub fn basis_coefficient(&self, n: usize) -> Result<f64> {
        require_szego(&self.kernel)?;
        let sections: f64 = self
            .nodes
            .iter()
            .zip(&self.coeffs)
            .map(|(&s, &c)| c * s.powi(n as i32))
            .sum();
        Ok(sections + self.basis.get(n).copied().unwrap_or(0.0))
    }

    /// Flat text record: one `key=value` line each for the kernel token,
    /// nodes, coefficients and (if present) basis coefficients. Numbers are
    /// written in shortest round-trip form.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kernel={}", self.kernel);
        let _ = writeln!(out, "nodes={}", join_floats(&self.nodes));
        let _ = writeln!(out, "coeffs={}", join_floats(&self.coeffs));
        if !self.basis.is_empty() {
            let _ = writeln!(out, "basis={}", join_floats(&self.basis));
        }
        out
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut kernel = None;
        let mut nodes = Vec::new();
        let mut coeffs = Vec::new();
        let mut basis = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {line:?}")))?;
            match key {
                "kernel" => kernel = Some(value.parse::<Kernel>()?),
                "nodes" => nodes = parse_floats(value)?,
                "coeffs" => coeffs = parse_floats(value)?,
                "basis" => basis = parse_floats(value)?,
                _ => return Err(Error::Parse(format!("unknown record key {key:?}"))),
            }
        }
        let kernel = kernel.ok_or_else(|| Error::Parse("record has no kernel".into()))?;
        let mut el = RkhsElement::new(kernel, nodes, coeffs)?;
        if !basis.is_empty() {
            require_szego(&kernel)?;
            el.basis = basis;
        }
        Ok(el)
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {x:?}"))))
        .collect()
}

fn require_szego(k: &Kernel) -> Result<()> {
    if *k != Kernel::Szego {
        return Err(Error::UnsupportedFunctional(format!(
            "monomial basis is only orthonormal for the szego kernel, not {k}"
        )));
    }
    Ok(())
}

/// Horner evaluation of `Σ aₙ xⁿ`.
fn power_series(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `⟨F, G⟩`; fails if the elements live over different kernels.
pub fn rkhs_inner(f: &RkhsElement, g: &RkhsElement) -> Result<f64> {
    f.inner(g)
}

pub fn evaluate(f: &RkhsElement, t: f64) -> Result<f64> {
    f.evaluate(t)
}

/// Minimum-norm interpolant through `(points, values)`: the coefficients are
/// `G⁺ y`, with eigenvalues of the Gram matrix below `rank_cutoff · λ_max`
/// discarded.
pub fn interpolate(
    kernel: Kernel,
    points: &[f64],
    values: &[f64],
    rank_cutoff: f64,
) -> Result<RkhsElement> {
    if points.len() != values.len() {
        return Err(Error::Dimension { expected: points.len(), got: values.len() });
    }
    let g = gram(&kernel, points)?;
    let (pinv, _) = symmetric_pinv(&g.entries, rank_cutoff);
    let c = pinv * DVector::from_column_slice(values);
    RkhsElement::new(kernel, points.to_vec(), c.as_slice().to_vec())
}

/// The truncated orthonormal expansion `eₙ(t) = tⁿ`, `n = 0..=order`, of the
/// Szegő kernel `1/(1 − st) = Σ sⁿ tⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameExpansion {
    pub order: usize,
}

impl FrameExpansion {
    pub fn new(order: usize) -> Self {
        FrameExpansion { order }
    }

    pub fn kernel(&self) -> Kernel {
        Kernel::Szego
    }

    /// `eₙ(t)`.
    pub fn basis_value(&self, n: usize, t: f64) -> f64 {
        t.powi(n as i32)
    }

    /// Truncated kernel `Σ_{n≤N} sⁿ tⁿ`.
    pub fn truncated_kernel(&self, s: f64, t: f64) -> f64 {
        let x = s * t;
        (0..=self.order).rev().fold(0.0, |acc, _| acc * x + 1.0)
    }

    pub fn coefficients(&self, f: &RkhsElement) -> Result<Vec<f64>> {
        (0..=self.order).map(|n| f.basis_coefficient(n)).collect()
    }

    /// `Σ_{n≤N} ⟨F, eₙ⟩ eₙ(t)`.
    pub fn reconstruct(&self, f: &RkhsElement, t: f64) -> Result<f64> {
        Kernel::Szego.check_domain(t)?;
        let c = self.coefficients(f)?;
        Ok(power_series(&c, t))
    }

    /// `Σ_{n≤N} |⟨F, eₙ⟩|²`.
    pub fn parseval_norm(&self, f: &RkhsElement) -> Result<f64> {
        Ok(self.coefficients(f)?.iter().map(|c| c * c).sum())
    }
}

pub fn frame_reconstruct(fe: &FrameExpansion, f: &RkhsElement, t: f64) -> Result<f64> {
    fe.reconstruct(f, t)
}

pub fn parseval_norm(fe: &FrameExpansion, f: &RkhsElement) -> Result<f64> {
    fe.parseval_norm(f)
}

/// Orthonormal system for an arbitrary kernel obtained from the
/// eigendecomposition of a Gram matrix over `points`:
/// `e_k = λ_k^{-1/2} Σᵢ v_{ik} K(sᵢ, ·)`.
///
/// This spans only `span{K(sᵢ, ·)}`, so it is a Parseval frame for that
/// finite section and an approximation of one for the whole space.
#[derive(Debug, Clone)]
pub struct EigenFrame {
    pub elements: Vec<RkhsElement>,
    pub eigenvalues: Vec<f64>,
}

impl EigenFrame {
    pub fn from_points(kernel: Kernel, points: &[f64], rank_cutoff: f64) -> Result<Self> {
        let g = gram(&kernel, points)?;
        let eig = g.entries.symmetric_eigen();
        let radius = eig.eigenvalues.amax();
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut elements = Vec::new();
        let mut eigenvalues = Vec::new();
        for k in idx {
            let lambda = eig.eigenvalues[k];
            if radius == 0.0 || lambda <= rank_cutoff * radius {
                continue;
            }
            let scale = lambda.sqrt().recip();
            let coeffs = eig.eigenvectors.column(k).iter().map(|v| v * scale).collect();
            elements.push(RkhsElement::new(kernel, points.to_vec(), coeffs)?);
            eigenvalues.push(lambda);
        }
        Ok(EigenFrame { elements, eigenvalues })
    }

    pub fn coefficients(&self, f: &RkhsElement) -> Result<Vec<f64>> {
        self.elements.iter().map(|e| f.inner(e)).collect()
    }

    pub fn parseval_norm(&self, f: &RkhsElement) -> Result<f64> {
        Ok(self.coefficients(f)?.iter().map(|c| c * c).sum())
    }
}

/// A linear functional given by its values `l(eₙ)` on the monomial basis,
/// truncated at `n = values.len() − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalCoeffs {
    pub values: Vec<f64>,
}

/// Growth diagnostic for a truncated coefficient sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Diagnostic {
    pub norm: f64,
    /// Fraction of `Σ |l(eₙ)|²` carried by the upper half of the indices.
    /// Square-summable sequences drive this to zero as the truncation grows.
    pub tail_fraction: f64,
}

impl FunctionalCoeffs {
    pub fn new(values: Vec<f64>) -> Self {
        FunctionalCoeffs { values }
    }

    pub fn zero(order: usize) -> Self {
        FunctionalCoeffs { values: vec![0.0; order + 1] }
    }

    /// Point evaluation at `x0`: `l(eₙ) = x0ⁿ`.
    pub fn point_evaluation(x0: f64, order: usize) -> Result<Self> {
        Kernel::Szego.check_domain(x0)?;
        Ok(FunctionalCoeffs { values: (0..=order).map(|n| x0.powi(n as i32)).collect() })
    }

    pub fn order(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn diagnostic(&self) -> L2Diagnostic {
        let total: f64 = self.values.iter().map(|v| v * v).sum();
        let half = self.values.len() / 2;
        let tail: f64 = self.values[half..].iter().map(|v| v * v).sum();
        L2Diagnostic {
            norm: total.sqrt(),
            tail_fraction: if total > 0.0 { tail / total } else { 0.0 },
        }
    }

    /// `l(G) = Σ ⟨G, eₙ⟩ l(eₙ)` over the truncation.
    pub fn apply(&self, g: &RkhsElement) -> Result<f64> {
        let mut acc = 0.0;
        for (n, &v) in self.values.iter().enumerate() {
            acc += v * g.basis_coefficient(n)?;
        }
        Ok(acc)
    }
}

pub fn functional_norm(lc: &FunctionalCoeffs) -> f64 {
    lc.norm()
}

/// Discrete Dirichlet energy `Σ ((F_{i+1} − F_i)/h)² h` of a function sampled
/// on a uniform grid starting at 0 with `F(0) = 0`; this is the squared norm
/// of the RKHS of `min(s, t)` on `[0, 1]`.
pub fn cameron_martin_norm_sq(values: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Constraint(format!("grid step must be positive, got {h}")));
    }
    let Some(&first) = values.first() else {
        return Ok(0.0);
    };
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if first.abs() > 1e-12 * scale {
        return Err(Error::Constraint(format!("F(0) must vanish, got {first}")));
    }
    Ok(values
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]) / h;
            d * d * h
        })
        .sum())
}
