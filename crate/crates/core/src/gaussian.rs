//! Seeded Gaussian sampling: finite-index processes from a covariance,
//! two-sided Brownian paths, set-indexed white noise, and the operator-valued
//! field `W = Σ Z_n Q_n`.
//!
//! Every draw comes from a [`RngStream`]: a ChaCha8 generator keyed by a seed
//! and a stream id. Path `p` of an ensemble always reads from substream `p`, so
//! the result does not depend on how paths are split across threads.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::effective::ProjectionSequence;
use crate::error::{Error, Result};
use crate::kernel::{check_pd, GramMatrix};
use crate::linalg::dot;
use crate::measure::{FiniteMeasureSpace, SetCombination, Subset};

/// Relative eigenvalue floor below which a covariance direction is dropped.
pub const EIGEN_CLIP: f64 = 1e-12;

const GRID_TOL: f64 = 1e-12;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn from_seed(seed: u64) -> Self {
        RngStream { seed, stream: 0 }
    }

    /// A child stream determined by `(seed, stream, index)` alone.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream: splitmix64(splitmix64(self.stream) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93)),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// A Monte Carlo mean with its standard error `sd / √M`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    /// Sums in slice order so the result is reproducible.
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let m = xs.len();
        if m == 0 {
            return Estimate { mean: f64::NAN, stderr: f64::NAN, samples: 0 };
        }
        let mean = xs.iter().sum::<f64>() / m as f64;
        let stderr = if m > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1) as f64;
            (var / m as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr, samples: m }
    }

    /// `|mean − target| / stderr`; zero when both numerator and stderr vanish.
    pub fn sigmas(&self, target: f64) -> f64 {
        let dev = (self.mean - target).abs();
        if dev == 0.0 {
            0.0
        } else {
            dev / self.stderr
        }
    }

    pub fn within(&self, target: f64, k: f64) -> bool {
        self.sigmas(target) <= k
    }
}

// ---------------------------------------------------------------------------
// Finite-index Gaussian vectors
// ---------------------------------------------------------------------------

/// Draws `L z` with `L Lᵀ = G`. Cholesky is tried first; on failure the
/// eigendecomposition is used with eigenvalues below `EIGEN_CLIP · λ_max`
/// set to zero.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
    clipped: bool,
}

impl GaussianSampler {
    pub fn new(g: &DMatrix<f64>, pd_tol: f64) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::Dimension { expected: g.nrows(), got: g.ncols() });
        }
        if let Some(ch) = g.clone().cholesky() {
            return Ok(GaussianSampler { factor: ch.l(), clipped: false });
        }
        let report = check_pd(g, pd_tol);
        if !report.pass {
            return Err(Error::NotPd { min: report.min_eigenvalue, max: report.max_eigenvalue });
        }
        let sym = (g + g.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let floor = EIGEN_CLIP * eig.eigenvalues.amax();
        let mut factor = eig.eigenvectors.clone();
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            let scale = if lambda > floor { lambda.sqrt() } else { 0.0 };
            factor.column_mut(k).scale_mut(scale);
        }
        Ok(GaussianSampler { factor, clipped: true })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Whether the eigenvalue fallback was needed.
    pub fn clipped(&self) -> bool {
        self.clipped
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn sample(&self, rng: &RngStream) -> Vec<f64> {
        let mut r = rng.rng();
        let z: Vec<f64> = (0..self.dim()).map(|_| normal(&mut r)).collect();
        (0..self.dim())
            .map(|i| self.factor.row(i).iter().zip(&z).map(|(l, z)| l * z).sum())
            .collect()
    }

    /// `m` draws; draw `i` uses substream `i`.
    pub fn sample_many(&self, m: usize, rng: &RngStream) -> Vec<Vec<f64>> {
        (0..m).into_par_iter().map(|i| self.sample(&rng.substream(i as u64))).collect()
    }
}

pub fn sample_gaussian_vector<P>(g: &GramMatrix<P>, rng: &RngStream) -> Result<Vec<f64>> {
    Ok(GaussianSampler::new(&g.entries, crate::kernel::DEFAULT_PD_TOL)?.sample(rng))
}

/// Empirical `E(v_i v_j)` over a set of draws.
pub fn sample_covariance(draws: &[Vec<f64>], i: usize, j: usize) -> Estimate {
    let xs: Vec<f64> = draws.iter().map(|d| d[i] * d[j]).collect();
    Estimate::from_samples(&xs)
}

// ---------------------------------------------------------------------------
// Brownian paths
// ---------------------------------------------------------------------------

/// `n` evenly spaced points from `a` to `b` inclusive, written as
/// `(a(n−1−i) + b i)/(n−1)` so that the endpoints and a centred zero are exact.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let d = (n - 1) as f64;
            (0..n).map(|i| (a * (d - i as f64) + b * i as f64) / d).collect()
        }
    }
}

/// Parses `a:b:n` into `n` points.
pub fn parse_grid(input: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = input.split(':').map(str::trim).collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(Error::Parse(format!("grid {input:?} is not a:b:n")));
    };
    let a: f64 = a.parse().map_err(|_| Error::Parse(format!("bad grid start {a:?}")))?;
    let b: f64 = b.parse().map_err(|_| Error::Parse(format!("bad grid end {b:?}")))?;
    let n: usize = n.parse().map_err(|_| Error::Parse(format!("bad grid size {n:?}")))?;
    if n == 0 || (n > 1 && !(a < b)) {
        return Err(Error::BadGrid(format!("grid {input:?} needs a < b and n >= 1")));
    }
    Ok(linspace(a, b, n))
}

/// Index of `t` in a sorted grid, matched up to a relative `1e-12`.
pub fn grid_index(grid: &[f64], t: f64) -> Result<usize> {
    let j = grid.partition_point(|&g| g < t);
    [j.checked_sub(1), Some(j)]
        .into_iter()
        .flatten()
        .filter(|&i| i < grid.len())
        .find(|&i| (grid[i] - t).abs() <= GRID_TOL * (1.0 + t.abs()))
        .ok_or(Error::OffGrid(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimOptions {
    /// Number of contiguous path blocks generated in parallel; 0 lets rayon decide.
    pub shards: usize,
    /// Pair path `2k + 1` with the mirror image of path `2k`.
    pub antithetic: bool,
}

/// `M` Brownian paths sampled on a grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: Vec<f64>,
    paths: Vec<f64>,
    m: usize,
    source: RngStream,
    antithetic: bool,
}

pub fn simulate_brownian(grid: &[f64], m: usize, rng: &RngStream) -> Result<PathEnsemble> {
    simulate_brownian_with(grid, m, rng, SimOptions::default())
}

pub fn simulate_brownian_with(
    grid: &[f64],
    m: usize,
    rng: &RngStream,
    opts: SimOptions,
) -> Result<PathEnsemble> {
    if grid.is_empty() {
        return Err(Error::BadGrid("empty grid".into()));
    }
    if let Some(w) = grid.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(Error::BadGrid(format!("grid not strictly increasing at {} -> {}", w[0], w[1])));
    }
    let zero = grid.iter().position(|&t| t == 0.0).ok_or_else(|| {
        Error::BadGrid("grid must contain 0".into())
    })?;
    let n = grid.len();
    let mut paths = vec![0.0; m * n];
    if n > 0 && m > 0 {
        let fill = |p: usize, row: &mut [f64]| {
            if opts.antithetic && p % 2 == 1 {
                let mut prev = vec![0.0; n];
                brownian_path(grid, zero, &rng.substream((p - 1) as u64), &mut prev);
                for (r, v) in row.iter_mut().zip(prev) {
                    *r = -v;
                }
            } else {
                brownian_path(grid, zero, &rng.substream(p as u64), row);
            }
        };
        if opts.shards == 0 {
            paths.par_chunks_mut(n).enumerate().for_each(|(p, row)| fill(p, row));
        } else {
            let per = m.div_ceil(opts.shards);
            paths.par_chunks_mut(per * n).enumerate().for_each(|(s, block)| {
                for (k, row) in block.chunks_mut(n).enumerate() {
                    fill(s * per + k, row);
                }
            });
        }
    }
    Ok(PathEnsemble { grid: grid.to_vec(), paths, m, source: *rng, antithetic: opts.antithetic })
}

/// Two independent one-sided walks glued at 0: substream 0 drives `t > 0`,
/// substream 1 drives `t < 0`.
fn brownian_path(grid: &[f64], zero: usize, path: &RngStream, row: &mut [f64]) {
    row[zero] = 0.0;
    let mut fwd = path.substream(0).rng();
    let mut x = 0.0;
    for i in zero + 1..grid.len() {
        x += (grid[i] - grid[i - 1]).sqrt() * normal(&mut fwd);
        row[i] = x;
    }
    let mut back = path.substream(1).rng();
    let mut x = 0.0;
    for i in (0..zero).rev() {
        x += (grid[i + 1] - grid[i]).sqrt() * normal(&mut back);
        row[i] = x;
    }
}

const MAGIC: &[u8; 8] = b"RKHSPATH";
const FORMAT_VERSION: u32 = 1;

impl PathEnsemble {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn source(&self) -> RngStream {
        self.source
    }

    pub fn antithetic(&self) -> bool {
        self.antithetic
    }

    pub fn path(&self, p: usize) -> &[f64] {
        let n = self.grid.len();
        &self.paths[p * n..(p + 1) * n]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.paths.chunks(self.grid.len().max(1)).take(self.m)
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        grid_index(&self.grid, t)
    }

    pub fn values_at(&self, t: f64) -> Result<Vec<f64>> {
        let j = self.index_of(t)?;
        Ok(self.paths().map(|p| p[j]).collect())
    }

    /// Per-path statistic values, averaged over antithetic pairs when the
    /// ensemble was generated that way so the samples stay independent.
    pub fn statistic<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let n = self.grid.len().max(1);
        let vals: Vec<f64> = self.paths.par_chunks(n).take(self.m).map(&f).collect();
        if self.antithetic {
            vals.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
        } else {
            vals
        }
    }

    pub fn estimate<F>(&self, f: F) -> Estimate
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        Estimate::from_samples(&self.statistic(f))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&u32::from(self.antithetic).to_le_bytes())?;
        for v in [self.m as u64, self.grid.len() as u64, self.source.seed, self.source.stream] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.grid.iter().chain(&self.paths) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a path ensemble file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported ensemble version {version}")));
        }
        r.read_exact(&mut b4)?;
        let antithetic = u32::from_le_bytes(b4) & 1 == 1;
        let mut b8 = [0u8; 8];
        let mut u64s = [0u64; 4];
        for v in &mut u64s {
            r.read_exact(&mut b8)?;
            *v = u64::from_le_bytes(b8);
        }
        let [m, n, seed, stream] = u64s;
        let (m, n) = (m as usize, n as usize);
        let total = m
            .checked_mul(n)
            .and_then(|x| x.checked_add(n))
            .ok_or_else(|| Error::Parse("ensemble size overflows".into()))?;
        let mut floats = Vec::with_capacity(total);
        for _ in 0..total {
            r.read_exact(&mut b8)?;
            floats.push(f64::from_le_bytes(b8));
        }
        let paths = floats.split_off(n);
        Ok(PathEnsemble { grid: floats, paths, m, source: RngStream { seed, stream }, antithetic })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

/// Sample mean of `X_s X_t` and its standard error.
pub fn empirical_covariance(pe: &PathEnsemble, s: f64, t: f64) -> Result<Estimate> {
    let (i, j) = (pe.index_of(s)?, pe.index_of(t)?);
    Ok(pe.estimate(|p| p[i] * p[j]))
}

/// Sample mean of `X_t^k`.
pub fn empirical_moment(pe: &PathEnsemble, t: f64, k: u32) -> Result<Estimate> {
    let j = pe.index_of(t)?;
    Ok(pe.estimate(|p| p[j].powi(k as i32)))
}

/// Sample mean of `|X_t − X_s|²`.
pub fn empirical_increment(pe: &PathEnsemble, s: f64, t: f64) -> Result<Estimate> {
    let (i, j) = (pe.index_of(s)?, pe.index_of(t)?);
    Ok(pe.estimate(|p| (p[j] - p[i]).powi(2)))
}

/// `E(X_s X_t)`: `|s| ∧ |t|` for times of the same sign, 0 otherwise.
pub fn brownian_covariance(s: f64, t: f64) -> f64 {
    if s * t <= 0.0 {
        0.0
    } else {
        s.abs().min(t.abs())
    }
}

// ---------------------------------------------------------------------------
// Set-indexed white noise
// ---------------------------------------------------------------------------

/// One draw of the Wiener field over a finite measure space:
/// `W_A = Σ_{x∈A} √ν({x}) z_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetWienerSample {
    z: Vec<f64>,
    increments: Vec<f64>,
}

impl SetWienerSample {
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn w(&self, a: &Subset) -> Result<f64> {
        a.iter()
            .map(|&i| self.increments.get(i).copied().ok_or_else(|| Error::UnknownPoint(format!("#{i}"))))
            .sum()
    }
}

/// `m` independent samples; sample `i` uses substream `i`.
pub fn wiener_set_field(sp: &FiniteMeasureSpace, m: usize, rng: &RngStream) -> Vec<SetWienerSample> {
    let roots: Vec<f64> = sp.weights().iter().map(|w| w.sqrt()).collect();
    (0..m)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.substream(i as u64).rng();
            let z: Vec<f64> = (0..roots.len()).map(|_| normal(&mut r)).collect();
            let increments = z.iter().zip(&roots).map(|(z, s)| z * s).collect();
            SetWienerSample { z, increments }
        })
        .collect()
}

/// `W_f = Σ αᵢ W_{Aᵢ}` for a simple function `f = Σ αᵢ χ_{Aᵢ}`.
pub fn ito_simple(f: &SetCombination, sample: &SetWienerSample) -> Result<f64> {
    f.terms.iter().map(|(a, s)| Ok(a * sample.w(s)?)).sum()
}

// ---------------------------------------------------------------------------
// Operator-valued Gaussian field
// ---------------------------------------------------------------------------

/// `W = Σ_{n ≤ n_max} Z_n Q_n` for one fixed sequence. The vectors `Q_n u`
/// are computed once; each realization only draws the `Z_n`.
#[derive(Debug, Clone)]
pub struct OperatorGaussian {
    n_max: usize,
    /// `q[k][n] = Q_n u_k`.
    q: Vec<Vec<Vec<f64>>>,
}

impl OperatorGaussian {
    pub fn new(ps: &ProjectionSequence, vectors: &[Vec<f64>], n_max: usize) -> Result<Self> {
        let q = vectors.iter().map(|u| ps.analysis(u, n_max)).collect::<Result<_>>()?;
        Ok(OperatorGaussian { n_max, q })
    }

    /// `(W u_1, …, W u_k)` for one draw of `Z_0, …, Z_{n_max}`.
    pub fn realize(&self, rng: &RngStream) -> Vec<Vec<f64>> {
        let mut r = rng.rng();
        let z: Vec<f64> = (0..=self.n_max).map(|_| normal(&mut r)).collect();
        self.q
            .iter()
            .map(|qs| {
                let dim = qs.first().map_or(0, Vec::len);
                let mut w = vec![0.0; dim];
                for (zn, qn) in z.iter().zip(qs) {
                    for (wi, qi) in w.iter_mut().zip(qn) {
                        *wi += zn * qi;
                    }
                }
                w
            })
            .collect()
    }

    /// `Σ_n ⟨Q_n u_a, Q_n u_b⟩`, the exact expectation of `⟨W u_a, W u_b⟩`.
    pub fn expected_inner(&self, a: usize, b: usize) -> f64 {
        self.q[a].iter().zip(&self.q[b]).map(|(x, y)| dot(x, y)).sum()
    }

    /// Monte Carlo estimate of `E⟨W u_a, W u_b⟩` over `m` realizations.
    pub fn empirical_inner(&self, a: usize, b: usize, m: usize, rng: &RngStream) -> Estimate {
        let xs: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| {
                let w = self.realize(&rng.substream(i as u64));
                dot(&w[a], &w[b])
            })
            .collect();
        Estimate::from_samples(&xs)
    }
}

pub fn operator_gaussian(
    ps: &ProjectionSequence,
    u: &[f64],
    n_max: usize,
    rng: &RngStream,
) -> Result<Vec<f64>> {
    let og = OperatorGaussian::new(ps, &[u.to_vec()], n_max)?;
    Ok(og.realize(rng).pop().unwrap_or_default())
}

/// The embedding `f ↦ √ν f` of `L²(ν)` into Euclidean space, under which the
/// set kernel becomes an ordinary inner product: `⟨e(χ_A), e(χ_B)⟩ = ν(A ∩ B)`.
pub fn set_embedding(sp: &FiniteMeasureSpace, a: &Subset) -> Result<Vec<f64>> {
    let chi = sp.indicator(a)?;
    Ok(chi.iter().zip(sp.weights()).map(|(c, w)| c * w.sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::Schedule;
    use crate::kernel::{gram, Kernel};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = RngStream::new(42, 0);
        let a: Vec<f64> = (0..5).map({
            let mut r = s.rng();
            move |_| normal(&mut r)
        }).collect();
        let b: Vec<f64> = (0..5).map({
            let mut r = s.rng();
            move |_| normal(&mut r)
        }).collect();
        assert_eq!(a, b);
        assert_ne!(s.substream(0), s.substream(1));
        assert_ne!(s.substream(3).substream(0), s.substream(0).substream(3));
        let mut r1 = s.substream(1).rng();
        let mut r2 = s.substream(2).rng();
        assert_ne!(normal(&mut r1), normal(&mut r2));
    }

    #[test]
    fn scalar_normal_mean() {
        let g = DMatrix::from_element(1, 1, 1.0);
        let sampler = GaussianSampler::new(&g, 1e-8).unwrap();
        let draws = sampler.sample_many(100_000, &RngStream::from_seed(3));
        let xs: Vec<f64> = draws.iter().map(|d| d[0]).collect();
        let e = Estimate::from_samples(&xs);
        assert!(e.mean.abs() <= 4.0 / (1e5f64).sqrt());
    }

    #[test]
    fn identity_covariance() {
        let sampler = GaussianSampler::new(&DMatrix::identity(3, 3), 1e-8).unwrap();
        let draws = sampler.sample_many(100_000, &RngStream::from_seed(11));
        for i in 0..3 {
            for j in 0..3 {
                let e = sample_covariance(&draws, i, j);
                assert!(e.within(if i == j { 1.0 } else { 0.0 }, 4.0), "{i},{j}: {e:?}");
            }
        }
    }

    #[test]
    fn ou_covariance() {
        let g = gram(&Kernel::OrnsteinUhlenbeck, &[0.0, 1.0, 2.0]).unwrap();
        let sampler = GaussianSampler::new(&g.entries, 1e-8).unwrap();
        let draws = sampler.sample_many(100_000, &RngStream::from_seed(5));
        for i in 0..3 {
            for j in 0..3 {
                let target = (-0.5 * (i as f64 - j as f64).abs()).exp();
                let e = sample_covariance(&draws, i, j);
                assert!(e.within(target, 4.0), "{i},{j}: {e:?}");
            }
        }
    }

    #[test]
    fn near_singular_gram_falls_back_to_eigen() {
        let pts = [0.5, 0.5 + 1e-14, 0.9];
        let g = gram(&Kernel::BrownianMin, &pts).unwrap();
        let s = GaussianSampler::new(&g.entries, 1e-8).unwrap();
        let l = s.factor();
        let back = l * l.transpose();
        assert!((back - &g.entries).amax() < 1e-10);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(GaussianSampler::new(&bad, 1e-8), Err(Error::NotPd { .. })));
    }

    #[test]
    fn brownian_grid_validation() {
        let r = RngStream::from_seed(1);
        assert!(matches!(simulate_brownian(&[0.0, 2.0, 1.0], 3, &r), Err(Error::BadGrid(_))));
        assert!(matches!(simulate_brownian(&[0.5, 1.0], 3, &r), Err(Error::BadGrid(_))));
        let pe = simulate_brownian(&[0.0], 10, &r).unwrap();
        assert!(pe.paths().all(|p| p == [0.0]));
    }

    #[test]
    fn brownian_covariances() {
        let grid = linspace(-2.0, 2.0, 9);
        let pe = simulate_brownian(&grid, 100_000, &RngStream::from_seed(2024)).unwrap();
        assert!(pe.paths().all(|p| p[4] == 0.0));
        let e = empirical_covariance(&pe, 0.0, 0.0).unwrap();
        assert_eq!((e.mean, e.stderr), (0.0, 0.0));
        for (s, t) in [(-1.0, 1.0), (-0.5, 0.5), (0.5, 1.5), (-1.5, -0.5), (1.0, 1.0), (2.0, 2.0)] {
            let e = empirical_covariance(&pe, s, t).unwrap();
            assert!(e.within(brownian_covariance(s, t), 4.0), "({s},{t}): {e:?}");
        }
        assert!(matches!(empirical_covariance(&pe, 0.3, 1.0), Err(Error::OffGrid(_))));
    }

    #[test]
    fn shard_layout_does_not_change_paths() {
        let grid = linspace(-1.0, 1.0, 5);
        let r = RngStream::new(9, 4);
        let a = simulate_brownian_with(&grid, 37, &r, SimOptions { shards: 1, antithetic: false })
            .unwrap();
        for shards in [0, 2, 3, 8, 64] {
            let b = simulate_brownian_with(&grid, 37, &r, SimOptions { shards, antithetic: false })
                .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn antithetic_pairs_mirror() {
        let grid = linspace(0.0, 1.0, 3);
        let opts = SimOptions { shards: 0, antithetic: true };
        let pe = simulate_brownian_with(&grid, 6, &RngStream::from_seed(1), opts).unwrap();
        for k in 0..3 {
            let (a, b) = (pe.path(2 * k), pe.path(2 * k + 1));
            assert!(a.iter().zip(b).all(|(x, y)| *x == -*y));
        }
        assert_eq!(pe.statistic(|p| p[2]).len(), 3);
    }

    #[test]
    fn ensemble_binary_round_trip() {
        let grid = linspace(-1.0, 2.0, 7);
        let pe = simulate_brownian(&grid, 11, &RngStream::new(77, 3)).unwrap();
        let mut buf = Vec::new();
        pe.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 4 + 32 + 8 * (7 + 77));
        let back = PathEnsemble::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, pe);
        buf[0] = b'X';
        assert!(PathEnsemble::read_from(buf.as_slice()).is_err());
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_grid("-1:1:21").unwrap();
        assert_eq!(g[10], 0.0);
        assert_eq!(grid_index(&g, 0.3).unwrap(), 13);
        assert!(parse_grid("1:0:3").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn set_field_examples() {
        let sp = FiniteMeasureSpace::counting(&["a", "b", "c"]);
        let samples = wiener_set_field(&sp, 100_000, &RngStream::from_seed(8));
        assert!(samples.iter().all(|s| s.w(&Subset::new()).unwrap() == 0.0));
        let a = sp.subset(&["a", "b"]).unwrap();
        let b = sp.subset(&["b", "c"]).unwrap();
        let xs: Vec<f64> = samples.iter().map(|s| s.w(&a).unwrap() * s.w(&b).unwrap()).collect();
        assert!(Estimate::from_samples(&xs).within(1.0, 4.0));
        let single = sp.subset(&["a"]).unwrap();
        let xs: Vec<f64> = samples.iter().map(|s| s.w(&single).unwrap().powi(2)).collect();
        assert!(Estimate::from_samples(&xs).within(1.0, 4.0));
    }

    #[test]
    fn ito_simple_examples() {
        let sp = FiniteMeasureSpace::indexed(vec![0.5, 2.0, 1.0]).unwrap();
        let samples = wiener_set_field(&sp, 10, &RngStream::from_seed(1));
        let a = Subset::from([0, 2]);
        let chi = SetCombination::section(a.clone());
        let cancel = SetCombination::new(vec![(1.0, a.clone()), (-1.0, a.clone())]);
        for s in &samples {
            assert_eq!(ito_simple(&chi, s).unwrap(), s.w(&a).unwrap());
            assert_eq!(ito_simple(&cancel, s).unwrap(), 0.0);
        }
        let f = SetCombination::new(vec![(1.0, Subset::from([0, 1])), (1.0, Subset::from([1, 2]))]);
        assert_eq!(f.inner(&sp, &f).unwrap(), f.l2_norm_sq(&sp).unwrap());
        let bad = SetCombination::section(Subset::from([7]));
        assert!(matches!(ito_simple(&bad, &samples[0]), Err(Error::UnknownPoint(_))));
    }

    #[test]
    fn operator_gaussian_examples() {
        let ps = ProjectionSequence::coordinate(2, Schedule::Finite);
        let u = vec![3.0, 4.0];
        let og = OperatorGaussian::new(&ps, std::slice::from_ref(&u), 4).unwrap();
        assert!((og.expected_inner(0, 0) - 25.0).abs() < 1e-12);
        let e = og.empirical_inner(0, 0, 100_000, &RngStream::from_seed(12));
        assert!(e.within(25.0, 4.0), "{e:?}");
        let z = operator_gaussian(&ps, &[0.0, 0.0], 4, &RngStream::from_seed(1)).unwrap();
        assert_eq!(z, vec![0.0, 0.0]);
        assert!(operator_gaussian(&ps, &[1.0], 4, &RngStream::from_seed(1)).is_err());
    }

    #[test]
    fn operator_gaussian_reproduces_set_kernel() {
        let sp = FiniteMeasureSpace::indexed(vec![0.5, 2.0, 1.0, 0.25]).unwrap();
        let ps = ProjectionSequence::coordinate(sp.len(), Schedule::Finite);
        let a = Subset::from([0, 1, 3]);
        let b = Subset::from([1, 2, 3]);
        let vs = vec![set_embedding(&sp, &a).unwrap(), set_embedding(&sp, &b).unwrap()];
        let og = OperatorGaussian::new(&ps, &vs, sp.len()).unwrap();
        let target = sp.set_kernel(&a, &b).unwrap();
        assert!((og.expected_inner(0, 1) - target).abs() < 1e-14);
        let e = og.empirical_inner(0, 1, 100_000, &RngStream::from_seed(21));
        assert!(e.within(target, 4.0), "{e:?}");
    }
}
