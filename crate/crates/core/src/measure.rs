//! Measures, functionals and the transform `T_K μ = ∫ μ(ds) K(s, ·)`.
//!
//! Three tiers of "measure" are supported:
//!
//! * atoms `Σ cᵢ δ_{sᵢ}`, handled exactly;
//! * densities sampled on a uniform grid and integrated by a quadrature rule;
//! * functionals given by their values on the monomial basis of the Szegő
//!   space, which covers derivatives at a point.
//!
//! The module also carries the set-intersection kernel `K(A, B) = ν(A ∩ B)`
//! on a finite measure space and the isometry `Ψ: K(·, A) ↦ χ_A` onto `L²(ν)`.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{Kernel, PdKernel};
use crate::rkhs::{FrameExpansion, FunctionalCoeffs, RkhsElement};

// ---------------------------------------------------------------------------
// Finite measure spaces and the set-intersection kernel
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasureSpace {
    labels: Vec<String>,
    weights: Vec<f64>,
}

/// A subset of a [`FiniteMeasureSpace`], stored as point indices.
pub type Subset = BTreeSet<usize>;

impl FiniteMeasureSpace {
    pub fn new(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if labels.len() != weights.len() {
            return Err(Error::Dimension { expected: labels.len(), got: weights.len() });
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Constraint(format!("point weights must be finite and >= 0, got {w}")));
        }
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::Constraint("point labels must be distinct".into()));
        }
        Ok(FiniteMeasureSpace { labels, weights })
    }

    /// Counting measure on the given labels.
    pub fn counting(labels: &[&str]) -> Self {
        FiniteMeasureSpace {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            weights: vec![1.0; labels.len()],
        }
    }

    /// Points labelled `x0, x1, …` with the given weights.
    pub fn indexed(weights: Vec<f64>) -> Result<Self> {
        let labels = (0..weights.len()).map(|i| format!("x{i}")).collect();
        Self::new(labels, weights)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn subset(&self, labels: &[&str]) -> Result<Subset> {
        labels
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::UnknownPoint(l.to_string()))
            })
            .collect()
    }

    pub fn subset_from_indices(&self, idx: impl IntoIterator<Item = usize>) -> Result<Subset> {
        idx.into_iter()
            .map(|i| if i < self.len() { Ok(i) } else { Err(Error::UnknownPoint(format!("#{i}"))) })
            .collect()
    }

    fn check(&self, a: &Subset) -> Result<()> {
        match a.iter().find(|&&i| i >= self.len()) {
            Some(i) => Err(Error::UnknownPoint(format!("#{i}"))),
            None => Ok(()),
        }
    }

    /// `ν(A)`.
    pub fn measure(&self, a: &Subset) -> Result<f64> {
        self.check(a)?;
        Ok(a.iter().map(|&i| self.weights[i]).sum())
    }

    /// `ν(A ∩ B)`.
    pub fn set_kernel(&self, a: &Subset, b: &Subset) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(a.intersection(b).map(|&i| self.weights[i]).sum())
    }

    /// `⟨f, g⟩_{L²(ν)} = Σ f(x) g(x) ν({x})`.
    pub fn l2_inner(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_density(f)?;
        self.check_density(g)?;
        Ok(f.iter().zip(g).zip(&self.weights).map(|((a, b), w)| a * b * w).sum())
    }

    fn check_density(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: f.len() });
        }
        Ok(())
    }

    /// The indicator `χ_A` as a vector over the points.
    pub fn indicator(&self, a: &Subset) -> Result<Vec<f64>> {
        self.check(a)?;
        Ok((0..self.len()).map(|i| if a.contains(&i) { 1.0 } else { 0.0 }).collect())
    }
}

/// The kernel `K(A, B) = ν(A ∩ B)` on subsets of a finite measure space.
#[derive(Debug, Clone, Copy)]
pub struct SetKernel<'a> {
    pub space: &'a FiniteMeasureSpace,
}

impl PdKernel<Subset> for SetKernel<'_> {
    fn eval(&self, a: &Subset, b: &Subset) -> Result<f64> {
        self.space.set_kernel(a, b)
    }

    fn name(&self) -> String {
        "set-intersection".into()
    }
}

pub fn set_kernel(sp: &FiniteMeasureSpace, a: &Subset, b: &Subset) -> Result<f64> {
    sp.set_kernel(a, b)
}

/// A finite combination `Σ αᵢ K(·, Aᵢ)` of set-kernel sections. Read through
/// `Ψ` the same coefficients describe the simple function `Σ αᵢ χ_{Aᵢ}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SetCombination {
    pub terms: Vec<(f64, Subset)>,
}

impl SetCombination {
    pub fn new(terms: Vec<(f64, Subset)>) -> Self {
        SetCombination { terms }
    }

    pub fn section(a: Subset) -> Self {
        SetCombination { terms: vec![(1.0, a)] }
    }

    /// Inner product in the RKHS of the set kernel, from the Gram matrix:
    /// `ΣΣ αᵢ βⱼ ν(Aᵢ ∩ Bⱼ)`.
    pub fn inner(&self, sp: &FiniteMeasureSpace, other: &Self) -> Result<f64> {
        let mut acc = 0.0;
        for (a, sa) in &self.terms {
            for (b, sb) in &other.terms {
                acc += a * b * sp.set_kernel(sa, sb)?;
            }
        }
        Ok(acc)
    }

    /// `F(B) = Σ αᵢ ν(Aᵢ ∩ B)`.
    pub fn eval(&self, sp: &FiniteMeasureSpace, b: &Subset) -> Result<f64> {
        self.terms.iter().map(|(a, sa)| Ok(a * sp.set_kernel(sa, b)?)).sum()
    }

    /// `Ψ(F) = Σ αᵢ χ_{Aᵢ}` as an element of `L²(ν)`.
    pub fn psi(&self, sp: &FiniteMeasureSpace) -> Result<Vec<f64>> {
        let mut f = vec![0.0; sp.len()];
        for (a, s) in &self.terms {
            sp.check(s)?;
            for &i in s {
                f[i] += a;
            }
        }
        Ok(f)
    }

    /// `∫ |Σ αᵢ χ_{Aᵢ}|² dν` computed pointwise.
    pub fn l2_norm_sq(&self, sp: &FiniteMeasureSpace) -> Result<f64> {
        let f = self.psi(sp)?;
        sp.l2_inner(&f, &f)
    }
}

/// `Ψ`: the density of a set-kernel combination.
pub fn psi(sp: &FiniteMeasureSpace, f: &SetCombination) -> Result<Vec<f64>> {
    f.psi(sp)
}

/// The set function `F_f(A) = ∫_A f dν` of a density `f ∈ L²(ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetFunction {
    density: Vec<f64>,
}

impl SetFunction {
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn eval(&self, sp: &FiniteMeasureSpace, a: &Subset) -> Result<f64> {
        sp.check(a)?;
        Ok(a.iter().map(|&i| self.density[i] * sp.weights[i]).sum())
    }

    /// `⟨F_f, F_g⟩ = ⟨f, g⟩_{L²(ν)}`.
    pub fn inner(&self, sp: &FiniteMeasureSpace, other: &Self) -> Result<f64> {
        sp.l2_inner(&self.density, &other.density)
    }

    /// `Σ |F(Aᵢ)|² / ν(Aᵢ)` over the blocks of a partition; blocks of zero
    /// measure are skipped. Singleton blocks attain the supremum `‖f‖²`.
    pub fn partition_quotient(&self, sp: &FiniteMeasureSpace, blocks: &[Subset]) -> Result<f64> {
        let mut seen = Subset::new();
        let mut acc = 0.0;
        for b in blocks {
            if !seen.is_disjoint(b) {
                return Err(Error::BadPartition("blocks overlap".into()));
            }
            seen.extend(b.iter().copied());
            let m = sp.measure(b)?;
            if m > 0.0 {
                let v = self.eval(sp, b)?;
                acc += v * v / m;
            }
        }
        Ok(acc)
    }
}

pub fn represent(sp: &FiniteMeasureSpace, f: &[f64]) -> Result<SetFunction> {
    sp.check_density(f)?;
    Ok(SetFunction { density: f.to_vec() })
}

// ---------------------------------------------------------------------------
// Signed measures on the line
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// `cells + 1` nodes including both endpoints; end weights `h/2`.
    Trapezoid,
    /// One node at the centre of each cell, weight `h`.
    Midpoint,
}

/// A density sampled on a uniform grid over `[lo, hi]` split into `cells` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPart {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
    pub rule: QuadratureRule,
    /// Density values at [`DensityPart::nodes`].
    pub values: Vec<f64>,
}

impl DensityPart {
    pub fn from_fn(
        lo: f64,
        hi: f64,
        cells: usize,
        rule: QuadratureRule,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(lo < hi) || cells == 0 {
            return Err(Error::Constraint(format!(
                "density needs lo < hi and at least one cell, got [{lo}, {hi}] with {cells}"
            )));
        }
        let mut d = DensityPart { lo, hi, cells, rule, values: Vec::new() };
        d.values = d.nodes().into_iter().map(f).collect();
        Ok(d)
    }

    /// Lebesgue measure on `[lo, hi]`.
    pub fn lebesgue(lo: f64, hi: f64, cells: usize, rule: QuadratureRule) -> Result<Self> {
        Self::from_fn(lo, hi, cells, rule, |_| 1.0)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        match self.rule {
            QuadratureRule::Trapezoid => (0..=self.cells)
                .map(|i| if i == self.cells { self.hi } else { self.lo + i as f64 * h })
                .collect(),
            QuadratureRule::Midpoint => {
                (0..self.cells).map(|i| self.lo + (i as f64 + 0.5) * h).collect()
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        match self.rule {
            QuadratureRule::Trapezoid => (0..=self.cells)
                .map(|i| if i == 0 || i == self.cells { 0.5 * h } else { h })
                .collect(),
            QuadratureRule::Midpoint => vec![h; self.cells],
        }
    }

    /// Mass of `[a, b]`, integrating the density's interpolant exactly:
    /// piecewise linear between trapezoid nodes, piecewise constant on
    /// midpoint cells. Over the full interval this equals the quadrature sum.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if !(a < b) {
            return 0.0;
        }
        let h = self.step();
        let mut total = 0.0;
        for c in 0..self.cells {
            let c_lo = self.lo + c as f64 * h;
            let c_hi = if c + 1 == self.cells { self.hi } else { self.lo + (c + 1) as f64 * h };
            let x0 = a.max(c_lo);
            let x1 = b.min(c_hi);
            if !(x0 < x1) {
                continue;
            }
            match self.rule {
                QuadratureRule::Midpoint => total += self.values[c] * (x1 - x0),
                QuadratureRule::Trapezoid => {
                    let (v0, v1) = (self.values[c], self.values[c + 1]);
                    let interp = |x: f64| v0 + (v1 - v0) * (x - c_lo) / (c_hi - c_lo);
                    total += 0.5 * (interp(x0) + interp(x1)) * (x1 - x0);
                }
            }
        }
        total
    }
}

/// Atoms plus an optional gridded density.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignedMeasure {
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<DensityPart>,
}

impl SignedMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(s: f64) -> Self {
        SignedMeasure { atoms: vec![(s, 1.0)], density: None }
    }

    pub fn atomic(atoms: Vec<(f64, f64)>) -> Self {
        SignedMeasure { atoms, density: None }
    }

    pub fn with_density(density: DensityPart) -> Self {
        SignedMeasure { atoms: Vec::new(), density: Some(density) }
    }

    /// Every point the measure charges, with its (quadrature) weight: the
    /// atoms first, then the density nodes weighted by `w_j f(x_j)`.
    pub fn quadrature_nodes(&self) -> Vec<(f64, f64)> {
        let mut out = self.atoms.clone();
        if let Some(d) = &self.density {
            out.extend(
                d.nodes().into_iter().zip(d.weights()).zip(&d.values).map(|((x, w), v)| (x, w * v)),
            );
        }
        out
    }

    /// `μ([a, b])` with the density mass integrated via [`DensityPart::mass_between`].
    pub fn mass_of(&self, a: f64, b: f64, include_hi: bool) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|(s, _)| *s >= a && (*s < b || (include_hi && *s == b)))
            .map(|(_, w)| w)
            .sum();
        atoms + self.density.as_ref().map_or(0.0, |d| d.mass_between(a, b))
    }

    pub fn total_mass(&self) -> f64 {
        self.quadrature_nodes().iter().map(|(_, w)| w).sum()
    }

    /// Parses `atoms: s1:w1, s2:w2; density: [a,b]:n=<cells>:<expr>[:rule]`.
    /// `expr` is `one`, `linear` or `file=<path>` (two-column CSV `s,value`,
    /// linearly interpolated onto the grid); `rule` is `trapezoid` (default)
    /// or `midpoint`. Either clause may be omitted.
    pub fn parse(input: &str) -> Result<Self> {
        let mut m = SignedMeasure::zero();
        for clause in input.split(';').map(str::trim).filter(|c| !c.is_empty()) {
            if let Some(rest) = clause.strip_prefix("atoms:") {
                for item in rest.split(',').map(str::trim).filter(|i| !i.is_empty()) {
                    let (s, w) = item
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("atom {item:?} is not s:w")))?;
                    m.atoms.push((parse_f64(s)?, parse_f64(w)?));
                }
            } else if let Some(rest) = clause.strip_prefix("density:") {
                m.density = Some(parse_density(rest.trim())?);
            } else {
                return Err(Error::Parse(format!("unknown measure clause {clause:?}")));
            }
        }
        Ok(m)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

fn parse_density(s: &str) -> Result<DensityPart> {
    let close = s.find(']').ok_or_else(|| Error::Parse(format!("density {s:?} lacks [a,b]")))?;
    let interval = s[..close]
        .strip_prefix('[')
        .ok_or_else(|| Error::Parse(format!("density {s:?} lacks [a,b]")))?;
    let (lo, hi) = interval
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("bad interval {interval:?}")))?;
    let (lo, hi) = (parse_f64(lo)?, parse_f64(hi)?);
    let rest = s[close + 1..].trim_start_matches(':');
    let mut parts = rest.splitn(3, ':');
    let cells = parts
        .next()
        .and_then(|p| p.trim().strip_prefix("n="))
        .ok_or_else(|| Error::Parse(format!("density {s:?} lacks n=<cells>")))?;
    let cells: usize =
        cells.trim().parse().map_err(|_| Error::Parse(format!("bad cell count {cells:?}")))?;
    let expr = parts.next().unwrap_or("one").trim();
    // A file path may itself contain ':', so the rule is only split off the end.
    let tail = parts.next().map(str::trim);
    let (expr, rule) = match tail {
        None => (expr.to_string(), QuadratureRule::Trapezoid),
        Some("trapezoid") => (expr.to_string(), QuadratureRule::Trapezoid),
        Some("midpoint") => (expr.to_string(), QuadratureRule::Midpoint),
        Some(other) => (format!("{expr}:{other}"), QuadratureRule::Trapezoid),
    };
    match expr.as_str() {
        "one" => DensityPart::lebesgue(lo, hi, cells, rule),
        "linear" => DensityPart::from_fn(lo, hi, cells, rule, |x| x),
        _ => {
            let path = expr
                .strip_prefix("file=")
                .ok_or_else(|| Error::Parse(format!("unknown density expression {expr:?}")))?;
            let table = load_density_csv(Path::new(path))?;
            let probe = DensityPart::lebesgue(lo, hi, cells, rule)?;
            let values =
                probe.nodes().into_iter().map(|x| interpolate_table(&table, x)).collect::<Result<_>>()?;
            Ok(DensityPart { values, ..probe })
        }
    }
}

/// Reads a two-column `s,value` CSV. A non-numeric first row is taken as a header.
pub fn load_density_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() < 2 {
            return Err(Error::Parse(format!("row {i} has fewer than two columns")));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(s), Ok(v)) => rows.push((s, v)),
            _ if i == 0 => continue,
            _ => return Err(Error::Parse(format!("row {i} is not numeric"))),
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if rows.is_empty() {
        return Err(Error::Parse("density file has no rows".into()));
    }
    Ok(rows)
}

fn interpolate_table(table: &[(f64, f64)], x: f64) -> Result<f64> {
    let tol = 1e-12 * (1.0 + x.abs());
    let (first, last) = (table[0], table[table.len() - 1]);
    if x < first.0 - tol || x > last.0 + tol {
        return Err(Error::GridMismatch(format!(
            "grid node {x} outside the tabulated range [{}, {}]",
            first.0, last.0
        )));
    }
    if x <= first.0 {
        return Ok(first.1);
    }
    if x >= last.0 {
        return Ok(last.1);
    }
    let j = table.partition_point(|(s, _)| *s <= x);
    let (s0, v0) = table[j - 1];
    let (s1, v1) = table[j];
    if s1 == s0 {
        return Ok(v1);
    }
    Ok(v0 + (v1 - v0) * (x - s0) / (s1 - s0))
}

fn check_support(k: &Kernel, mu: &SignedMeasure) -> Result<()> {
    for (s, _) in &mu.atoms {
        k.check_domain(*s)?;
    }
    if let Some(d) = &mu.density {
        k.check_domain(d.lo)?;
        k.check_domain(d.hi)?;
    }
    Ok(())
}

/// `T_K μ`: atoms map to kernel sections exactly, the density to its
/// quadrature-weighted grid nodes.
pub fn tk(k: Kernel, mu: &SignedMeasure) -> Result<RkhsElement> {
    check_support(&k, mu)?;
    let (nodes, coeffs) = mu.quadrature_nodes().into_iter().unzip();
    RkhsElement::new(k, nodes, coeffs)
}

/// `∬ μ(ds) K(s, t) ν(dt)` over the quadrature nodes of both measures.
/// Rows are summed in parallel, then combined in a fixed order.
pub fn m2_inner<K: PdKernel<f64> + Sync + ?Sized>(
    k: &K,
    mu: &SignedMeasure,
    nu: &SignedMeasure,
) -> Result<f64> {
    let a = mu.quadrature_nodes();
    let b = nu.quadrature_nodes();
    let rows: Vec<f64> = a
        .par_iter()
        .map(|(s, c)| {
            let mut row = 0.0;
            for (t, d) in &b {
                row += d * k.eval(s, t)?;
            }
            Ok(c * row)
        })
        .collect::<Result<_>>()?;
    Ok(rows.iter().sum())
}

/// `‖μ‖²_{M₂(K)} = μKμ`.
pub fn m2_norm<K: PdKernel<f64> + Sync + ?Sized>(k: &K, mu: &SignedMeasure) -> Result<f64> {
    m2_inner(k, mu, mu)
}

/// `∫ G dμ` by atoms plus quadrature.
pub fn pairing(mu: &SignedMeasure, g: &RkhsElement) -> Result<f64> {
    check_support(&g.kernel(), mu)?;
    mu.quadrature_nodes().iter().map(|(s, w)| Ok(w * g.evaluate(*s)?)).sum()
}

/// A partition cell `[lo, hi)` with a tag point inside it. The last cell of a
/// partition is closed on the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub tag: f64,
}

/// `2^depth` equal cells over `[lo, hi]`, tagged at their midpoints.
pub fn dyadic_partition(lo: f64, hi: f64, depth: u32) -> Vec<Cell> {
    let n = 1usize << depth;
    let h = (hi - lo) / n as f64;
    (0..n)
        .map(|i| {
            let a = lo + i as f64 * h;
            let b = if i + 1 == n { hi } else { lo + (i + 1) as f64 * h };
            Cell { lo: a, hi: b, tag: 0.5 * (a + b) }
        })
        .collect()
}

/// The Riemann-type element `T(P) = Σᵢ μ(Eᵢ) K(sᵢ, ·)`.
pub fn partition_transform(k: Kernel, mu: &SignedMeasure, cells: &[Cell]) -> Result<RkhsElement> {
    let (first, last) = match (cells.first(), cells.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::BadPartition("no cells".into())),
    };
    for (i, c) in cells.iter().enumerate() {
        if !(c.lo < c.hi) {
            return Err(Error::BadPartition(format!("cell {i} is empty: [{}, {}]", c.lo, c.hi)));
        }
        if !(c.lo <= c.tag && c.tag <= c.hi) {
            return Err(Error::BadPartition(format!("tag {} outside cell {i}", c.tag)));
        }
        if let Some(next) = cells.get(i + 1) {
            if next.lo != c.hi {
                let what = if next.lo < c.hi { "overlap" } else { "gap" };
                return Err(Error::BadPartition(format!("{what} between cells {i} and {}", i + 1)));
            }
        }
    }
    let (lo, hi) = (first.lo, last.hi);
    if let Some(d) = &mu.density {
        if d.lo < lo || d.hi > hi {
            return Err(Error::BadPartition("partition does not cover the density support".into()));
        }
    }
    if let Some((s, _)) = mu.atoms.iter().find(|(s, _)| *s < lo || *s > hi) {
        return Err(Error::BadPartition(format!("atom at {s} is not covered")));
    }
    let n = cells.len();
    let mut nodes = Vec::with_capacity(n);
    let mut coeffs = Vec::with_capacity(n);
    for (i, c) in cells.iter().enumerate() {
        nodes.push(c.tag);
        coeffs.push(mu.mass_of(c.lo, c.hi, i + 1 == n));
    }
    RkhsElement::new(k, nodes, coeffs)
}

// ---------------------------------------------------------------------------
// Functionals on the Szegő space
// ---------------------------------------------------------------------------

/// `l = (1/n!) δ₀⁽ⁿ⁾`, normalized so that `l(G)` is the `n`-th Taylor
/// coefficient of `G` at 0. Defined only for the Szegő kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivFunctional {
    pub order: usize,
}

impl DerivFunctional {
    pub fn new(kernel: Kernel, order: usize) -> Result<Self> {
        if kernel != Kernel::Szego {
            return Err(Error::UnsupportedFunctional(format!(
                "derivative functionals are only defined for szego, not {kernel}"
            )));
        }
        Ok(DerivFunctional { order })
    }

    /// Values `l(e_k) = δ_{k,n}` for `k = 0..=truncation`.
    pub fn coeffs(&self, truncation: usize) -> FunctionalCoeffs {
        let mut v = vec![0.0; truncation.max(self.order) + 1];
        v[self.order] = 1.0;
        FunctionalCoeffs::new(v)
    }

    /// `G⁽ⁿ⁾(0)/n!`.
    pub fn apply(&self, g: &RkhsElement) -> Result<f64> {
        g.basis_coefficient(self.order)
    }
}

/// `T_K l = Σ l(eₙ) eₙ`.
pub fn tk_functional(fe: &FrameExpansion, l: &FunctionalCoeffs) -> Result<RkhsElement> {
    let mut v = l.values.clone();
    v.truncate(fe.order + 1);
    RkhsElement::from_basis(fe.kernel(), v)
}

/// Largest deviation over `t ∈ [−0.9, 0.9]` between `Σ_{n≤N} x0ⁿ tⁿ` and
/// `1/(1 − x0 t)`.
pub fn delta_expansion_check(x0: f64, order: usize) -> Result<f64> {
    Kernel::Szego.check_domain(x0)?;
    let fe = FrameExpansion::new(order);
    let worst = (0..=180)
        .map(|i| {
            let t = -0.9 + 0.01 * i as f64;
            (fe.truncated_kernel(x0, t) - Kernel::Szego.eval_unchecked(x0, t)).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Factorized kernels
// ---------------------------------------------------------------------------

/// A kernel given through a factorization `K(s, t) = Σ_x ψ(s, x) ψ(t, x) M(x)`,
/// tabulated on an s-grid (rows) and an x-grid (columns).
#[derive(Debug, Clone)]
pub struct Factorization {
    pub s_grid: Vec<f64>,
    pub x_weights: Vec<f64>,
    pub table: DMatrix<f64>,
}

impl Factorization {
    pub fn new(s_grid: Vec<f64>, x_weights: Vec<f64>, table: DMatrix<f64>) -> Result<Self> {
        if table.nrows() != s_grid.len() || table.ncols() != x_weights.len() {
            return Err(Error::GridMismatch(format!(
                "table is {}x{}, grids are {}x{}",
                table.nrows(),
                table.ncols(),
                s_grid.len(),
                x_weights.len()
            )));
        }
        Ok(Factorization { s_grid, x_weights, table })
    }

    /// `ψ(s, n) = sⁿ` with counting measure on `{0, …, order}`: the
    /// truncated Szegő kernel.
    pub fn monomial(s_grid: Vec<f64>, order: usize) -> Self {
        let table =
            DMatrix::from_fn(s_grid.len(), order + 1, |i, n| s_grid[i].powi(n as i32));
        Factorization { s_grid, x_weights: vec![1.0; order + 1], table }
    }

    fn row_of(&self, s: f64) -> Result<usize> {
        self.s_grid
            .iter()
            .position(|&g| (g - s).abs() <= 1e-12 * (1.0 + s.abs()))
            .ok_or_else(|| Error::GridMismatch(format!("point {s} is not on the s-grid")))
    }

    /// `(T_μ ψ)(x) = ∫ μ(ds) ψ(s, x)`.
    pub fn transform(&self, mu: &SignedMeasure) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.x_weights.len()];
        for (s, w) in mu.quadrature_nodes() {
            let r = self.row_of(s)?;
            for (o, v) in out.iter_mut().zip(self.table.row(r).iter()) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// `∫ |T_μ ψ|² dM`.
    pub fn norm_sq(&self, mu: &SignedMeasure) -> Result<f64> {
        let t = self.transform(mu)?;
        Ok(t.iter().zip(&self.x_weights).map(|(v, m)| v * v * m).sum())
    }
}

impl PdKernel<f64> for Factorization {
    fn eval(&self, s: &f64, t: &f64) -> Result<f64> {
        let (i, j) = (self.row_of(*s)?, self.row_of(*t)?);
        Ok(self
            .table
            .row(i)
            .iter()
            .zip(self.table.row(j).iter())
            .zip(&self.x_weights)
            .map(|((a, b), m)| a * b * m)
            .sum())
    }

    fn name(&self) -> String {
        "factorized".into()
    }
}

pub fn factorization_norm(f: &Factorization, mu: &SignedMeasure) -> Result<f64> {
    f.norm_sq(mu)
}
