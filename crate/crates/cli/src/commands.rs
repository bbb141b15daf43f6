//! One function per subcommand. Each turns settings into a [`Report`].

use num_complex::Complex64;
use rkhs_transform::effective::{ProjectionSequence, Schedule};
use rkhs_transform::fourier::{
    double_factorial, double_factorial_ratio, hermite_signed, oracle_covariance,
    oracle_gauss_char, oracle_gauss_char_pair, oracle_moment, oracle_monomial_transform,
    semigroup_factor, telescoping_partial_sum, transform_mc, ComplexEstimate, PathFunctional,
};
use rkhs_transform::gaussian::{
    brownian_covariance, empirical_covariance, empirical_moment, linspace, parse_grid,
    simulate_brownian_with, wiener_set_field, Estimate, GaussianSampler, PathEnsemble, RngStream,
    SimOptions,
};
use rkhs_transform::measure::{
    delta_expansion_check, m2_norm, pairing, tk, tk_functional, DerivFunctional,
    FiniteMeasureSpace, SetCombination, SignedMeasure, Subset,
};
use rkhs_transform::rkhs::FrameExpansion;
use rkhs_transform::{Kernel, RkhsElement};

use crate::report::{num, Check, GateKind, Report, Table};
use crate::settings::{ConfigError, Settings};

type Result<T> = std::result::Result<T, ConfigError>;

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn seed(s: &Settings) -> Result<u64> {
    s.get_or("seed", 1)
}

fn sim_options(s: &Settings) -> Result<SimOptions> {
    Ok(SimOptions { shards: s.get_or("shards", 0)?, antithetic: s.flag("antithetic")? })
}

fn simulate(s: &Settings, grid: &[f64]) -> Result<PathEnsemble> {
    let m: usize = s.get_or("paths", 100_000)?;
    if m < 2 {
        return Err(invalid("--paths must be at least 2"));
    }
    let pe = simulate_brownian_with(grid, m, &RngStream::from_seed(seed(s)?), sim_options(s)?)?;
    if let Some(path) = s.raw("save-paths") {
        pe.save(std::path::Path::new(path))?;
    }
    Ok(pe)
}

fn sigma_check(name: String, est: &Estimate, target: f64, gate: f64) -> Check {
    Check::sigmas(name, est.mean, target, est.stderr, gate)
}

fn complex_check(name: String, est: &ComplexEstimate, target: Complex64, gate: f64) -> Check {
    let deviation = est.sigmas(target);
    Check {
        name,
        value: est.value().re,
        target: target.re,
        deviation,
        gate,
        kind: GateKind::Sigmas,
        pass: deviation <= gate,
    }
}

// ---------------------------------------------------------------------------

pub fn effective(s: &Settings) -> Result<Report> {
    let dim: usize = s.get_or("dim", 4)?;
    if dim == 0 {
        return Err(invalid("--dim must be positive"));
    }
    let ranks: Vec<usize> = s.list("ranks")?.unwrap_or_else(|| vec![1; dim]);
    if let Some(r) = ranks.iter().find(|&&r| r == 0 || r > dim) {
        return Err(invalid(format!("rank {r} outside 1..={dim}")));
    }
    let schedule: Schedule = s.get_or("schedule", Schedule::Cyclic)?;
    let n_trials: usize = s.get_or("trials", 5)?;
    let horizon: usize = s.get_or("horizon", 20_000)?;
    let expect: Option<bool> = s.get("expect")?;
    let tol = s.gate("effective", 1e-12);

    let root = RngStream::from_seed(seed(s)?);
    let ps = ProjectionSequence::random(dim, &ranks, schedule, &mut root.substream(0).rng())?;
    let normal = GaussianSampler::new(&nalgebra::DMatrix::identity(dim, dim), 0.0)?;
    let trials: Vec<Vec<f64>> =
        (0..n_trials).map(|i| normal.sample(&root.substream(1).substream(i as u64))).collect();

    let eff = ps.is_effective(&trials, tol, horizon)?;
    let parseval = ps.parseval_holds(&trials, tol, horizon)?;

    let mut table = Table::new("effective.csv", &["trial", "n", "defect_rel", "q_rel", "residual_rel"]);
    let mut worst = 0.0f64;
    for (i, (x, curve)) in trials.iter().zip(&eff.per_trial).enumerate() {
        let total: f64 = x.iter().map(|v| v * v).sum();
        if curve.steps == 0 {
            continue;
        }
        let led = ps.energy_ledger(x, curve.steps - 1)?;
        for n in 0..led.defect_norms.len() {
            table.push(vec![
                i.to_string(),
                n.to_string(),
                num(led.defect_norms[n] / total),
                num(led.q_norms[n] / total),
                num(led.residual_identity[n] / total),
            ]);
        }
        worst = worst.max(led.max_residual() / total);
    }

    let mut r = Report::new("effective");
    r.tables.push(table);
    r.checks.push(Check::absolute("energy", worst, 0.0, s.gate("energy", 1e-10)));
    r.checks.push(Check::boolean("parseval-agreement", eff.effective == parseval));
    if let Some(want) = expect {
        r.checks.push(Check::boolean("effective", eff.effective == want));
    }
    let steps: Vec<String> = eff.per_trial.iter().map(|t| t.steps.to_string()).collect();
    r.notes.push(format!("effective: {}", eff.effective));
    r.notes.push(format!("parseval: {parseval}"));
    r.notes.push(format!("steps per trial: {}", steps.join(",")));
    Ok(r)
}

// ---------------------------------------------------------------------------

const DEFAULT_MEASURE: &str = "density:[0,1]:n=1000:one";

fn is_unit_lebesgue(mu: &SignedMeasure) -> bool {
    mu.atoms.is_empty()
        && mu.density.as_ref().is_some_and(|d| {
            d.lo == 0.0 && d.hi == 1.0 && d.values.iter().all(|&v| v == 1.0)
        })
}

pub fn transform_tk(s: &Settings) -> Result<Report> {
    let kernel: Kernel = s.get_or("kernel", Kernel::BrownianMin)?;
    let mu = SignedMeasure::parse(s.raw("measure").unwrap_or(DEFAULT_MEASURE))?;
    let grid = match s.raw("grid") {
        Some(g) => parse_grid(g)?,
        None => match (&mu.density, mu.atoms.is_empty()) {
            (Some(d), _) => linspace(d.lo, d.hi, 1001),
            (None, false) => {
                let lo = mu.atoms.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
                let hi = mu.atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
                if lo < hi { linspace(lo, hi, 101) } else { vec![lo] }
            }
            (None, true) => return Err(invalid("the measure is empty")),
        },
    };

    let f = tk(kernel, &mu)?;
    let m2 = m2_norm(&kernel, &mu)?;
    let h2 = f.norm_sq();
    let scale = 1.0f64.max(m2.abs());

    let oracle = (kernel == Kernel::BrownianMin && is_unit_lebesgue(&mu))
        .then_some(|t: f64| t - t * t / 2.0);
    let mut table = Table::new("transform-tk.csv", &["t", "value", "oracle"]);
    let mut worst = 0.0f64;
    for &t in &grid {
        let v = f.evaluate(t)?;
        let o = oracle.map(|o| o(t));
        if let Some(o) = o {
            worst = worst.max((v - o).abs());
        }
        table.push(vec![num(t), num(v), o.map(num).unwrap_or_default()]);
    }

    let mut r = Report::new("transform-tk");
    r.tables.push(table);
    r.checks.push(Check::relative("isometry", m2, h2, s.gate("isometry", 1e-10), scale));
    r.checks.push(Check::relative("pairing", pairing(&mu, &f)?, h2, s.gate("pairing", 1e-10), scale));
    if oracle.is_some() {
        r.checks.push(Check::absolute("norm", m2, 1.0 / 3.0, s.gate("norm", 5e-6)));
        r.checks.push(Check::absolute("profile", worst, 0.0, s.gate("profile", 5e-6)));
    }
    r.notes.push(format!("kernel: {kernel}"));
    r.notes.push(format!("norm^2 (measure side): {}", num(m2)));
    r.notes.push(format!("norm^2 (transform side): {}", num(h2)));
    Ok(r)
}

// ---------------------------------------------------------------------------

fn parse_space(input: &str) -> Result<FiniteMeasureSpace> {
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    for item in input.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (l, w) = item.split_once(':').unwrap_or((item, "1"));
        labels.push(l.trim().to_string());
        weights.push(w.trim().parse().map_err(|_| invalid(format!("bad weight in {item:?}")))?);
    }
    Ok(FiniteMeasureSpace::new(labels, weights)?)
}

fn parse_sets(sp: &FiniteMeasureSpace, input: &str) -> Result<Vec<(String, Subset)>> {
    input.split(';')
        .map(str::trim)
        .map(|set| {
            let labels: Vec<&str> =
                set.split(',').map(str::trim).filter(|x| !x.is_empty() && *x != "-").collect();
            Ok((labels.join(" "), sp.subset(&labels)?))
        })
        .collect()
}

pub fn set_kernel(s: &Settings) -> Result<Report> {
    let sp = parse_space(s.raw("weights").unwrap_or("a:1,b:1,c:1"))?;
    let sets = parse_sets(&sp, s.raw("sets").unwrap_or("a,b;b,c;a"))?;
    let m: usize = s.get_or("paths", 100_000)?;
    if m < 2 {
        return Err(invalid("--paths must be at least 2"));
    }
    let samples = wiener_set_field(&sp, m, &RngStream::from_seed(seed(s)?));
    let gate = s.gate("wiener", 4.0);

    let mut r = Report::new("set-kernel");
    let mut table =
        Table::new("set-kernel.csv", &["i", "j", "kernel", "empirical", "stderr", "sigmas"]);
    let mut psi_exact = true;
    for (i, (li, a)) in sets.iter().enumerate() {
        for (j, (lj, b)) in sets.iter().enumerate().skip(i) {
            let k = sp.set_kernel(a, b)?;
            let via_sections = SetCombination::section(a.clone())
                .inner(&sp, &SetCombination::section(b.clone()))?;
            let via_indicators = sp.l2_inner(&sp.indicator(a)?, &sp.indicator(b)?)?;
            psi_exact &= via_sections == k && via_indicators == k;

            let xs: Vec<f64> = samples.iter().map(|w| w.w(a).unwrap() * w.w(b).unwrap()).collect();
            let e = Estimate::from_samples(&xs);
            let c = sigma_check(format!("wiener {{{li}}} x {{{lj}}}"), &e, k, gate);
            table.push(vec![
                i.to_string(),
                j.to_string(),
                num(k),
                num(e.mean),
                num(e.stderr),
                num(c.deviation),
            ]);
            r.checks.push(c);
        }
    }
    r.checks.push(Check::boolean("psi-isometry", psi_exact));

    let f = SetCombination::new(sets.iter().map(|(_, a)| (1.0, a.clone())).collect());
    let quad = f.inner(&sp, &f)?;
    let l2 = f.l2_norm_sq(&sp)?;
    r.checks.push(Check::absolute("ito-identity", quad, l2, 0.0));
    let xs: Vec<f64> = samples
        .iter()
        .map(|w| rkhs_transform::gaussian::ito_simple(&f, w).map(|v| v * v))
        .collect::<std::result::Result<_, _>>()?;
    let e = Estimate::from_samples(&xs);
    r.checks.push(sigma_check("ito".into(), &e, l2, s.gate("ito", 4.0)));

    r.tables.push(table);
    r.notes.push(format!("points: {}, sets: {}, samples: {m}", sp.len(), sets.len()));
    r.notes.push(format!("sum of sets: quadratic form {} = L2 norm {}", num(quad), num(l2)));
    Ok(r)
}

// ---------------------------------------------------------------------------

pub fn brownian_moments(s: &Settings) -> Result<Report> {
    let grid = parse_grid(s.raw("grid").unwrap_or("-2:2:9"))?;
    let pe = simulate(s, &grid)?;

    let mut r = Report::new("brownian-moments");
    let gate = s.gate("moments", 5.0);
    let mut table =
        Table::new("brownian-moments.csv", &["n", "t", "empirical", "oracle", "stderr", "sigmas"]);
    for &t in grid.iter().filter(|t| **t != 0.0) {
        for n in 1..=3u32 {
            let e = empirical_moment(&pe, t, 2 * n)?;
            let o = oracle_moment(n, t);
            let c = sigma_check(format!("moment 2n={} t={}", 2 * n, num(t)), &e, o, gate);
            table.push(vec![n.to_string(), num(t), num(e.mean), num(o), num(e.stderr), num(c.deviation)]);
            r.checks.push(c);
        }
    }
    r.tables.push(table);

    let gate = s.gate("covariance", 4.0);
    let mut table = Table::new(
        "brownian-covariance.csv",
        &["s", "t", "empirical", "oracle", "stderr", "sigmas"],
    );
    for (i, &a) in grid.iter().enumerate() {
        for &b in &grid[i..] {
            let e = empirical_covariance(&pe, a, b)?;
            let o = brownian_covariance(a, b);
            let c = sigma_check(format!("covariance s={} t={}", num(a), num(b)), &e, o, gate);
            table.push(vec![num(a), num(b), num(e.mean), num(o), num(e.stderr), num(c.deviation)]);
            r.checks.push(c);
        }
    }
    r.tables.push(table);
    r.notes.push(format!("paths: {}, grid points: {}", pe.len(), grid.len()));
    Ok(r)
}

// ---------------------------------------------------------------------------

fn parse_functional(input: &str, s: f64) -> Result<PathFunctional> {
    match input {
        "exp" => Ok(PathFunctional::exp_i(s)),
        "one" => Ok(PathFunctional::one()),
        _ => {
            let n = input
                .strip_prefix("monomial:")
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| invalid(format!("unknown functional {input:?}; use exp, one or monomial:N")))?;
            Ok(PathFunctional::monomial(s, n))
        }
    }
}

pub fn inf_fourier(st: &Settings) -> Result<Report> {
    let s: f64 = st.get_or("s", 1.0)?;
    let ts: Vec<f64> = st.list("t")?.unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0, 3.0]);
    let input = st.raw("functional").unwrap_or("exp").to_string();
    let f = parse_functional(&input, s)?;
    let anchor = f.adapted_to.unwrap_or(0.0);

    let grid = match st.raw("grid") {
        Some(g) => parse_grid(g)?,
        None => {
            let mut g: Vec<f64> = ts.iter().copied().chain([0.0, s, anchor]).collect();
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        }
    };
    let pe = simulate(st, &grid)?;
    let est = transform_mc(&pe, &f, &ts)?;

    let oracle = |t: f64| -> Option<Complex64> {
        match input.as_str() {
            "exp" => Some(Complex64::new(oracle_covariance(s, t), 0.0)),
            "one" => Some(Complex64::new(oracle_covariance(0.0, t), 0.0)),
            _ => match &f.kind {
                rkhs_transform::fourier::FunctionalKind::Monomial { n, .. } => {
                    oracle_monomial_transform(*n, s, t).ok()
                }
                _ => None,
            },
        }
    };

    let mut r = Report::new("inf-fourier");
    let gate = st.gate("transform", 4.0);
    let mut table = Table::new(
        "inf-fourier.csv",
        &["t", "re", "im", "stderr", "oracle_re", "oracle_im", "sigmas"],
    );
    for (&t, e) in ts.iter().zip(&est.estimates) {
        let o = oracle(t);
        let sig = o.map(|o| e.sigmas(o));
        table.push(vec![
            num(t),
            num(e.value().re),
            num(e.value().im),
            num(e.stderr()),
            o.map(|o| num(o.re)).unwrap_or_default(),
            o.map(|o| num(o.im)).unwrap_or_default(),
            sig.map(num).unwrap_or_default(),
        ]);
        if let Some(o) = o {
            r.checks.push(complex_check(format!("transform t={}", num(t)), e, o, gate));
        }
        r.notes.push(format!(
            "t={}: {} {:+}i (stderr {}){}",
            num(t),
            num(e.value().re),
            e.value().im,
            num(e.stderr()),
            o.map(|o| format!(" oracle {} {:+}i", num(o.re), o.im)).unwrap_or_default()
        ));
    }
    r.tables.push(table);

    let gate = st.gate("semigroup", 6.0);
    let base = transform_mc(&pe, &f, &[anchor])?.estimates[0];
    for (&t, e) in ts.iter().zip(&est.estimates) {
        if t <= anchor {
            continue;
        }
        let pred = semigroup_factor(base.value(), anchor, t, &f)?;
        let combined = e.stderr() + (-0.5 * (t - anchor)).exp() * base.stderr();
        let dev = (pred - e.value()).norm();
        let deviation = if dev == 0.0 { 0.0 } else { dev / combined };
        r.checks.push(Check {
            name: format!("semigroup t={}", num(t)),
            value: e.value().re,
            target: pred.re,
            deviation,
            gate,
            kind: GateKind::Sigmas,
            pass: deviation <= gate,
        });
    }
    Ok(r)
}

// ---------------------------------------------------------------------------

/// Closed-form identities that need no sampling.
fn closed_forms(s: &Settings) -> Result<Report> {
    let mut r = Report::new("closed-forms");
    let g = |x: f64| (-0.5 * x * x).exp();
    let h = 1e-2;
    let mut worst = 0.0f64;
    for xi in [-1.5, -0.3, 0.0, 0.8, 1.6] {
        let d2 = (g(xi + h) - 2.0 * g(xi) + g(xi - h)) / (h * h);
        let d1 = (g(xi + h) - g(xi - h)) / (2.0 * h);
        worst = worst.max((hermite_signed(1, xi) * g(xi) - d1).abs());
        worst = worst.max((hermite_signed(2, xi) * g(xi) - d2).abs());
    }
    r.checks.push(Check::absolute("hermite-derivatives", worst, 0.0, s.gate("hermite", 1e-3)));

    let mut agree = true;
    for n in 0..=17 {
        agree &= double_factorial(n)? == double_factorial_ratio(n)?;
    }
    r.checks.push(Check::boolean("double-factorial-forms", agree));
    r.checks.push(Check::absolute("double-factorial-5", double_factorial(5)? as f64, 945.0, 0.0));
    r.checks.push(Check::absolute("moment n=2 t=2", oracle_moment(2, 2.0), 12.0, 0.0));

    let mut worst = 0.0f64;
    for d in [0.0, 0.5, 1.0, 2.0, 4.0] {
        worst = worst.max((telescoping_partial_sum(d, 30) - (-0.5 * d).exp()).abs());
    }
    r.checks.push(Check::absolute("telescoping-series", worst, 0.0, s.gate("telescoping", 1e-12)));

    r.checks.push(Check::absolute(
        "gauss-char-pair",
        oracle_gauss_char_pair(2.0, 1.0, 2.0)?,
        (-0.25f64).exp(),
        1e-15,
    ));
    r.checks.push(Check::absolute("gauss-char", oracle_gauss_char(1.0, 1.0)?, (-0.5f64).exp(), 1e-15));
    let mono = oracle_monomial_transform(1, 1.0, 2.0)?;
    r.checks.push(Check::absolute("monomial-transform-im", mono.im, -(-1.0f64).exp(), 1e-15));

    let fe = FrameExpansion::new(60);
    let k05 = RkhsElement::section(Kernel::Szego, 0.5)?;
    r.checks.push(Check::absolute(
        "szego-parseval",
        fe.parseval_norm(&k05)?,
        4.0 / 3.0,
        s.gate("parseval", 1e-12),
    ));
    let fe12 = FrameExpansion::new(12);
    let mut worst = 0.0f64;
    for n in 0..=10 {
        let d = DerivFunctional::new(Kernel::Szego, n)?;
        worst = worst.max((tk_functional(&fe12, &d.coeffs(12))?.norm_sq() - 1.0).abs());
    }
    r.checks.push(Check::absolute("derivative-functionals", worst, 0.0, 0.0));
    let bound = 0.45f64.powi(41) / 0.55;
    let e = delta_expansion_check(0.5, 40)?;
    r.checks.push(Check { pass: e <= bound, ..Check::absolute("delta-expansion", e, 0.0, bound) });
    Ok(r)
}

type Suite = fn(&Settings) -> Result<Report>;

/// Every suite with its own defaults; only seed, path count, sharding,
/// antithetic sampling and tolerances carry over.
pub fn all_oracles(s: &Settings) -> Result<Report> {
    let sub = s.restricted(&["seed", "paths", "shards", "antithetic"]);
    let mut all = Report::new("all-oracles");
    let mut table = Table::new(
        "all-oracles.csv",
        &["suite", "check", "value", "target", "deviation", "gate", "pass"],
    );
    let suites: [(&str, Suite); 6] = [
        ("closed-forms", closed_forms),
        ("effective", effective),
        ("transform-tk", transform_tk),
        ("set-kernel", set_kernel),
        ("brownian-moments", brownian_moments),
        ("inf-fourier", inf_fourier),
    ];
    for (name, run) in suites {
        let rep = run(&sub)?;
        for c in &rep.checks {
            table.push(vec![
                name.to_string(),
                c.name.clone(),
                num(c.value),
                num(c.target),
                num(c.deviation),
                num(c.gate),
                c.pass.to_string(),
            ]);
        }
        let passed = rep.checks.iter().filter(|c| c.pass).count();
        all.notes.push(format!("{name}: {passed}/{} checks passed", rep.checks.len()));
        all.merge(Report { notes: Vec::new(), ..rep });
    }
    s.absorb_used(&sub);
    all.tables.insert(0, table);
    Ok(all)
}
