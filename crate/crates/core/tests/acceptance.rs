//! Release gate: eleven numbered criteria, one verdict line each, exit 1 if
//! any fails. Expected values are closed forms computed in place; tolerances
//! are pinned next to each check. Criteria that share an ensemble reuse it
//! explicitly rather than re-simulating.

use ergolab::diagnostics::{onedim_distribution_curve, path_distribution_curve, WindowSpec};
use ergolab::empirical::{
    bl_distance, bl_distance_dense, bl_distance_oracle, EmpiricalMeasure, MetricKind,
};
use ergolab::experiments::{run_experiment, ExperimentConfig};
use ergolab::functions::{FunctionSpec, SampledFunction};
use ergolab::measures::{ergodic_mean, WeightMeasure};
use ergolab::processes::{broadcast_value, simulate_ou, OuParams, PathEnsemble, TimeGrid};
use ergolab::rng::CounterRng;
use ergolab::sde::{
    contraction_rate, gronwall_bound_check, theta, validate_constants, CoefExpr, SdeModel,
};
use ergolab::seminorms::{seminorm, seminorm_ordering_check, ScanConfig, SeminormKind};
use std::path::PathBuf;
use std::time::Instant;

struct Gate {
    failures: usize,
    count: usize,
}

impl Gate {
    fn report(&mut self, name: &str, outcome: Result<String, String>) {
        self.count += 1;
        match outcome {
            Ok(detail) => println!("ACCEPTANCE {} {name}: PASS - {detail}", self.count),
            Err(detail) => {
                self.failures += 1;
                println!("ACCEPTANCE {} {name}: FAIL - {detail}", self.count);
            }
        }
    }
}

fn workspace_config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn err<T>(e: impl std::fmt::Display) -> Result<T, String> {
    Err(e.to_string())
}

fn main() {
    let mut gate = Gate { failures: 0, count: 0 };

    gate.report("stationary-covariance", covariance());

    // criteria 2-4 share one stationary ensemble
    let grid = TimeGrid::new(0.0, 0.25, 120).expect("grid");
    let shared = simulate_ou(&OuParams { alpha: 1.0, sigma: 1.0 }, &grid, 100_000, 2024)
        .expect("shared ensemble");
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    gate.report("long-run-square-gap", square_gap(&shared, &mut gaps));
    gate.report("path-curve-flat-while-gap-stays", path_flat_vs_gap(&shared, &gaps));
    gate.report("anchored-sum-variance", anchored_variance(&shared));

    gate.report("bl-distance-exactness", bl_exactness());
    gate.report("ergodic-mean-closed-form", ergodic_oracle());
    gate.report("seminorm-catalog", seminorm_catalog());
    gate.report("integral-inequality-checker", gronwall_instances());
    gate.report("picard-contraction", picard());
    gate.report("two-model-decomposition", decomposition());
    gate.report("byte-reproducibility", reproducibility());

    println!(
        "ACCEPTANCE SUMMARY: {}/{} criteria passed",
        gate.count - gate.failures,
        gate.count
    );
    if gate.failures > 0 {
        std::process::exit(1);
    }
}

/// Monte Carlo covariance of the stationary process against sigma^2
/// e^{-alpha tau}, within 3 standard errors at 1e5 paths, under 30 s.
fn covariance() -> Result<String, String> {
    let start = Instant::now();
    let mut worst_z = 0.0f64;
    for (alpha, sigma, tau) in [(1.0, 1.0, 0.5), (0.5, 2.0, 1.0)] {
        let grid = TimeGrid::new(0.0, 0.25, 4).map_err(|e| e.to_string())?;
        let ens = simulate_ou(&OuParams { alpha, sigma }, &grid, 100_000, 811)
            .map_err(|e| e.to_string())?;
        let j = grid.index_of(tau).map_err(|e| e.to_string())?;
        let n = ens.paths as f64;
        // stationary mean is zero, so the product moment is the covariance
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for m in 0..ens.paths {
            let p = ens.value(m, 0, 0) * ens.value(m, j, 0);
            sum += p;
            sumsq += p * p;
        }
        let est = sum / n;
        let se = ((sumsq / n - est * est) / (n - 1.0)).sqrt();
        let target = sigma * sigma * (-alpha * tau).exp();
        let z = (est - target).abs() / se;
        worst_z = worst_z.max(z);
        if z > 3.0 {
            return Err(format!(
                "case (alpha {alpha}, sigma {sigma}, tau {tau}): estimate {est} vs {target} is {z:.2} SE away"
            ));
        }
    }
    let dt = start.elapsed().as_secs_f64();
    if dt > 30.0 {
        return Err(format!("took {dt:.1} s, budget 30 s"));
    }
    Ok(format!("both cases within 3 SE (worst {worst_z:.2} SE) in {dt:.1} s"))
}

/// Time-averaged E|X(t+d) - X(t)|^2 within 5% of 2 sigma^2 (1 - e^{-alpha d})
/// and above sigma^2 for d >= 1 (the averages do not go to zero), under 60 s.
/// The simulation of the shared ensemble is excluded; budget the estimator.
fn square_gap(ens: &PathEnsemble, gaps: &mut Vec<(f64, f64)>) -> Result<String, String> {
    let start = Instant::now();
    let points = ens.grid.points();
    let mut details = Vec::new();
    for delta in [0.5, 2.0, 5.0] {
        let k = (delta / ens.grid.step).round() as usize;
        let n_lags = points - k;
        let mut total = 0.0;
        for m in 0..ens.paths {
            let mut acc = 0.0;
            for j in 0..n_lags {
                let d = ens.value(m, j + k, 0) - ens.value(m, j, 0);
                acc += d * d;
            }
            total += acc / n_lags as f64;
        }
        let est = total / ens.paths as f64;
        let target = 2.0 * (1.0 - (-delta).exp());
        let rel = (est - target).abs() / target;
        gaps.push((delta, est));
        if rel > 0.05 {
            return Err(format!("gap at d={delta}: {est} vs {target}, rel err {rel:.4} > 5%"));
        }
        if delta >= 1.0 && est <= 1.0 {
            return Err(format!("gap at d={delta} is {est}, not above sigma^2 = 1"));
        }
        details.push(format!("d={delta}: {est:.4} (target {target:.4})"));
    }
    let dt = start.elapsed().as_secs_f64();
    if dt > 60.0 {
        return Err(format!("took {dt:.1} s, budget 60 s"));
    }
    Ok(format!("{} in {dt:.1} s", details.join(", ")))
}

/// On the same ensemble whose square gap stays large, the path-space
/// distribution curve is flat: ratio to the split-half floor <= 2 for every
/// shift 1..20, while the square gap stays above sigma^2 / 2.
fn path_flat_vs_gap(ens: &PathEnsemble, gaps: &[(f64, f64)]) -> Result<String, String> {
    if gaps.len() < 3 {
        return Err("square-gap values unavailable (criterion 2 failed early)".into());
    }
    for &(delta, est) in gaps {
        if est <= 0.5 {
            return Err(format!("square gap at d={delta} is {est}, not above 0.5"));
        }
    }
    let shifts: Vec<f64> = (1..=20).map(|s| s as f64).collect();
    let spec = WindowSpec { k_max: 3, base_time: 4.0 };
    let curve = path_distribution_curve(ens, &spec, &shifts).map_err(|e| e.to_string())?;
    let max_ratio = curve.max_ratio();
    if !(max_ratio <= 2.0) {
        return Err(format!("path curve ratio reached {max_ratio}, bound 2"));
    }
    Ok(format!(
        "max path-curve ratio {max_ratio:.3} over shifts 1..20 (floor {:.4}) with all gaps > 0.5",
        curve.noise_floor
    ))
}

/// Var of Z(t) = X(t) + X(0) against 2 sigma^2 (1 + e^{-alpha |t|}) within
/// 3 SE, and the one-dimensional curve of Z refutes flatness (ratio > 5).
fn anchored_variance(x: &PathEnsemble) -> Result<String, String> {
    let z = broadcast_value(x, 0.0).map_err(|e| e.to_string())?;
    let n = z.paths as f64;
    let mut worst_z = 0.0f64;
    for t in [0.0, 1.0, 5.0, 20.0] {
        let j = z.grid.index_of(t).map_err(|e| e.to_string())?;
        let mean: f64 = (0..z.paths).map(|m| z.value(m, j, 0)).sum::<f64>() / n;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for m in 0..z.paths {
            let d = z.value(m, j, 0) - mean;
            sum += d * d;
            sumsq += d * d * d * d;
        }
        let var = sum / (n - 1.0);
        // asymptotic SE of the mean of squared deviations
        let se = ((sumsq / n - (sum / n) * (sum / n)) / (n - 1.0)).sqrt();
        let target = 2.0 * (1.0 + (-t.abs()).exp());
        let dev = (var - target).abs() / se;
        worst_z = worst_z.max(dev);
        if dev > 3.0 {
            return Err(format!("Var Z({t}) = {var} vs {target}: {dev:.2} SE away"));
        }
    }
    let curve = onedim_distribution_curve(&z, &[0.0], &[20.0]).map_err(|e| e.to_string())?;
    let ratio = curve.ratios[0];
    if !(ratio > 5.0) {
        return Err(format!("onedim curve ratio {ratio} fails to refute flatness (need > 5)"));
    }
    Ok(format!("variances within 3 SE (worst {worst_z:.2}), refutation ratio {ratio:.2} > 5"))
}

fn delta_measure(points: Vec<f64>) -> Result<EmpiricalMeasure, String> {
    EmpiricalMeasure::uniform(1, points, MetricKind::Euclidean).map_err(|e| e.to_string())
}

/// Exact-solution cases for the distance solver against the brute-force
/// oracle and closed forms, then metric axioms on random 4-atom measures.
fn bl_exactness() -> Result<String, String> {
    let zero = delta_measure(vec![0.0])?;
    let one = delta_measure(vec![1.0])?;
    let three = delta_measure(vec![3.0])?;
    let mixture = EmpiricalMeasure::new(1, vec![0.0, 1.0], vec![0.5, 0.5], MetricKind::Euclidean)
        .map_err(|e| e.to_string())?;
    let cases: [(&EmpiricalMeasure, &EmpiricalMeasure, f64, &str); 3] = [
        (&zero, &one, 1.0, "unit point masses"),
        (&zero, &mixture, 0.5, "point mass vs even mixture"),
        (&zero, &three, 2.0, "saturated point masses"),
    ];
    for (mu, nu, want, label) in cases {
        let lp = bl_distance(mu, nu).map_err(|e| e.to_string())?.value;
        let dense = bl_distance_dense(mu, nu).map_err(|e| e.to_string())?.value;
        let oracle = bl_distance_oracle(mu, nu).map_err(|e| e.to_string())?.value;
        for (got, how) in [(lp, "solver"), (dense, "dense solver"), (oracle, "oracle")] {
            if (got - want).abs() > 2e-3 {
                return Err(format!("{label}: {how} gave {got}, want {want} within 2e-3"));
            }
        }
        if (lp - oracle).abs() > 2e-3 {
            return Err(format!("{label}: solver {lp} vs oracle {oracle} differ beyond 2e-3"));
        }
    }

    let mut rng = CounterRng::from_parts(7, 0, "bl-axioms");
    let random_measure = |rng: &mut CounterRng| -> Result<EmpiricalMeasure, String> {
        let pts: Vec<f64> = (0..8).map(|_| 4.0 * (rng.uniform() - 0.5)).collect();
        EmpiricalMeasure::uniform(2, pts, MetricKind::Euclidean).map_err(|e| e.to_string())
    };
    for i in 0..100 {
        let mu = random_measure(&mut rng)?;
        let nu = random_measure(&mut rng)?;
        let rho = random_measure(&mut rng)?;
        let d = |a: &EmpiricalMeasure, b: &EmpiricalMeasure| -> Result<f64, String> {
            Ok(bl_distance(a, b).map_err(|e| e.to_string())?.value)
        };
        let self_d = d(&mu, &mu)?;
        if self_d.abs() > 1e-8 {
            return Err(format!("instance {i}: d(mu, mu) = {self_d}"));
        }
        let (ab, ba) = (d(&mu, &nu)?, d(&nu, &mu)?);
        if (ab - ba).abs() > 1e-8 {
            return Err(format!("instance {i}: asymmetric ({ab} vs {ba})"));
        }
        let (bc, ac) = (d(&nu, &rho)?, d(&mu, &rho)?);
        if ac > ab + bc + 1e-8 {
            return Err(format!("instance {i}: triangle broken ({ac} > {ab} + {bc})"));
        }
    }
    Ok("3 closed-form cases match solver, dense route, and oracle; axioms hold on 100 random 4-atom instances".into())
}

/// Lebesgue ergodic mean of 1/(1+t^2) equals arctan(r)/r to 1e-6.
fn ergodic_oracle() -> Result<String, String> {
    let f = SampledFunction::Expr(FunctionSpec::erg1());
    let radii = [10.0, 100.0, 1000.0];
    let curve = ergodic_mean(&f, &WeightMeasure::lebesgue(), &radii, false)
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (r, v) in curve.radii.iter().zip(&curve.values) {
        let want = r.atan() / r;
        let e = (v - want).abs();
        worst = worst.max(e);
        if e > 1e-6 {
            return Err(format!("r={r}: mean {v} vs arctan(r)/r = {want}, err {e:.2e}"));
        }
    }
    Ok(format!("arctan(r)/r matched at r = 10/100/1000, worst err {worst:.2e}"))
}

/// Window seminorms: the quadratic Weyl and Besicovitch values of sin are
/// sqrt(1/2); the sliding sup dominates the Weyl value on the whole catalog;
/// a decaying function keeps a positive sliding sup while both growing-window
/// kinds fall inside their own ladder slack.
fn seminorm_catalog() -> Result<String, String> {
    let scan = ScanConfig::default();
    let sin = SampledFunction::Expr(
        FunctionSpec::from_catalog("sin", &[]).map_err(|e| e.to_string())?,
    );
    let want = 0.5f64.sqrt();
    for kind in [SeminormKind::Weyl, SeminormKind::Besicovitch] {
        let res = seminorm(&sin, kind, 2.0, &scan, None, false).map_err(|e| e.to_string())?;
        if (res.value - want).abs() > 1e-3 {
            return Err(format!("{kind:?} of sin: {} vs {want} beyond 1e-3", res.value));
        }
    }

    let catalog: Vec<(&str, SampledFunction)> = vec![
        ("ap2", SampledFunction::Expr(FunctionSpec::ap2(1.0, std::f64::consts::SQRT_2))),
        ("levitan", SampledFunction::Expr(FunctionSpec::levitan())),
        ("erg1", SampledFunction::Expr(FunctionSpec::erg1())),
        ("erg2", SampledFunction::Expr(FunctionSpec::erg2())),
        ("const", SampledFunction::constant(0.7)),
        ("sin", sin.clone()),
    ];
    for (name, h) in &catalog {
        let rep = seminorm_ordering_check(h, 2.0, &scan).map_err(|e| e.to_string())?;
        if !rep.pass || rep.stepanov + 1e-6 < rep.weyl {
            return Err(format!(
                "{name}: ordering S >= W failed (S {} W {} B {})",
                rep.stepanov, rep.weyl, rep.besicovitch
            ));
        }
    }

    let decaying = SampledFunction::Expr(FunctionSpec::erg2());
    let s = seminorm(&decaying, SeminormKind::Stepanov, 2.0, &scan, None, false)
        .map_err(|e| e.to_string())?;
    // closed form for the unit window centered at 0: sqrt(1 - e^{-1}) ~ 0.795
    if !(s.value * s.value > 0.3) {
        return Err(format!("sliding sup of e^-|t| too small: {}", s.value));
    }
    for kind in [SeminormKind::Weyl, SeminormKind::Besicovitch] {
        let res = seminorm(&decaying, kind, 2.0, &scan, None, false).map_err(|e| e.to_string())?;
        // total mass 1 spread over the last rung's window 2r = 2048 caps the
        // true rung near sqrt(1/2048) ~ 0.022; the ladder slack covers it
        if res.value > res.ladder_tolerance() || res.value > 0.05 {
            return Err(format!(
                "{kind:?} of e^-|t|: value {} above ladder tolerance {}",
                res.value,
                res.ladder_tolerance()
            ));
        }
    }
    Ok("sin matches sqrt(1/2) to 1e-3; S >= W on all 6 catalog entries; decaying tail vanishes in both growing-window kinds".into())
}

/// The constant-coefficient integral-inequality checker accepts exactly the
/// instances satisfying g <= alpha delta / (delta - beta): 50 randomized
/// holds-instances validate, 50 violations are flagged.
fn gronwall_instances() -> Result<String, String> {
    let mut rng = CounterRng::from_parts(11, 0, "gronwall-instances");
    for i in 0..100 {
        let should_hold = i < 50;
        let alpha = 0.5 + 1.5 * rng.uniform();
        let delta = 0.5 + 1.5 * rng.uniform();
        let beta = delta * (0.1 + 0.5 * rng.uniform());
        let gamma = 0.9 * (delta - beta);
        let bound = alpha * delta / (delta - beta);
        // margins of at least 10% keep quadrature error out of the verdict
        let g = bound * if should_hold { 0.1 + 0.8 * rng.uniform() } else { 1.1 + 0.9 * rng.uniform() };
        let rep = gronwall_bound_check(
            &SampledFunction::constant(alpha),
            &[beta],
            &[delta],
            gamma,
            &SampledFunction::constant(g),
            (0.0, 20.0),
        )
        .map_err(|e| e.to_string())?;
        if should_hold {
            let ok = rep.hypothesis_holds
                && rep.conclusion_checked
                && rep.conclusion_holds
                && rep.constant_alpha_holds == Some(true);
            if !ok {
                return Err(format!(
                    "instance {i} (g {g:.3} <= bound {bound:.3}) rejected: hypothesis {} conclusion {:?}",
                    rep.hypothesis_holds, rep.constant_alpha_holds
                ));
            }
        } else {
            let flagged = !rep.hypothesis_holds && rep.constant_alpha_holds == Some(false);
            if !flagged {
                return Err(format!(
                    "instance {i} (g {g:.3} > bound {bound:.3}) not flagged: hypothesis {} conclusion {:?}",
                    rep.hypothesis_holds, rep.constant_alpha_holds
                ));
            }
        }
    }
    Ok("50 satisfying instances validated, 50 violations flagged".into())
}

fn sin_time(scale: f64) -> CoefExpr {
    CoefExpr::scale(
        scale,
        CoefExpr::Time(SampledFunction::Expr(
            FunctionSpec::from_catalog("sin", &[]).expect("catalog sin"),
        )),
    )
}

/// Fixed-point iteration contraction at the declared rates: a drift-only
/// model with K = 0.3, delta = 1 contracts at (K/delta)^2 = 0.09 per sweep
/// (20% slack allowed), and a model pinned at theta = 0.5 stays below 0.6.
/// 1e4 paths, step 0.01, under 5 minutes.
fn picard() -> Result<String, String> {
    let start = Instant::now();
    let grid = TimeGrid::new(0.0, 0.01, 200).map_err(|e| e.to_string())?;

    let drift_only = SdeModel {
        dim: 1,
        deltas: vec![1.0],
        drift: CoefExpr::add(sin_time(0.05), CoefExpr::scale(0.3, CoefExpr::TanhState)),
        diffusion: CoefExpr::Const(0.0),
        trace_split: vec![0.0],
        k_growth: 0.3,
        k_lip: 0.3,
    };
    validate_constants(&drift_only, 2000, 5).map_err(|e| e.to_string())?;
    let rep = contraction_rate(&drift_only, &grid, 10_000, 5, 8).map_err(|e| e.to_string())?;
    let tail = rep.max_tail_ratio.unwrap_or(0.0);
    if !(tail <= 0.09 * 1.2) {
        return Err(format!("drift-only tail ratio {tail} exceeds 0.108"));
    }

    // theta = (k^2/delta)(1/(2 delta) + q) = 0.5 * (0.5 + 0.5) = 0.5 exactly
    let half = SdeModel {
        dim: 1,
        deltas: vec![1.0],
        drift: CoefExpr::add(sin_time(0.2), CoefExpr::scale(0.5, CoefExpr::TanhState)),
        diffusion: CoefExpr::add(CoefExpr::Const(0.15), CoefExpr::scale(0.2, CoefExpr::ClipState)),
        trace_split: vec![0.5],
        k_growth: std::f64::consts::FRAC_1_SQRT_2,
        k_lip: std::f64::consts::FRAC_1_SQRT_2,
    };
    validate_constants(&half, 2000, 6).map_err(|e| e.to_string())?;
    let th = theta(&half);
    if (th - 0.5).abs() > 1e-12 {
        return Err(format!("model intended at theta = 0.5 has theta = {th}"));
    }
    let rep2 = contraction_rate(&half, &grid, 10_000, 6, 8).map_err(|e| e.to_string())?;
    let tail2 = rep2.max_tail_ratio.unwrap_or(0.0);
    if !(tail2 <= 0.6) {
        return Err(format!("theta = 0.5 model tail ratio {tail2} exceeds 0.6"));
    }

    let dt = start.elapsed().as_secs_f64();
    if dt > 300.0 {
        return Err(format!("took {dt:.1} s, budget 300 s"));
    }
    Ok(format!(
        "drift-only tail ratio {tail:.4} <= 0.108, theta-half tail ratio {tail2:.4} <= 0.6, in {dt:.1} s"
    ))
}

/// Desk-scale run of the coupled-pair scenario from the shipped config: the
/// quadratic-mean residual at r = 400 sits below a quarter of its r = 25
/// value and the reduced solution's path curve stays flat.
fn decomposition() -> Result<String, String> {
    let cfg = ExperimentConfig::load(&workspace_config("decomposition.toml"))
        .map_err(|e| e.to_string())?;
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return err(e),
    };
    let verdicts = run_experiment(&cfg, dir.path()).map_err(|e| e.to_string())?;
    let row = |name: &str| {
        verdicts
            .checks
            .iter()
            .find(|c| c.check == name)
            .ok_or_else(|| format!("bundle is missing the {name} check"))
    };
    let decay = row("residual-decay")?;
    if !decay.pass {
        return Err(format!(
            "residual at the widest radius is {} (bound {}): no quadratic-mean decay",
            decay.value, decay.bound
        ));
    }
    let flat = row("y-path-flatness")?;
    if !flat.pass {
        return Err(format!("reduced-model path curve ratio {} exceeds {}", flat.value, flat.bound));
    }
    if !verdicts.all_pass {
        let bad: Vec<&str> = verdicts.failures.iter().map(String::as_str).collect();
        return Err(format!("shipped config has failing checks: {}", bad.join(", ")));
    }
    Ok(format!(
        "residual {} at r=400 vs bound {} (quarter of r=25), path ratio {:.3} <= {}",
        decay.value, decay.bound, flat.value, flat.bound
    ))
}

/// The fixture config rerun into fresh bundles, once on the ambient thread
/// pool and once each inside 1-thread and 3-thread pools, must produce
/// byte-identical files.
fn reproducibility() -> Result<String, String> {
    let cfg = ExperimentConfig::load(&workspace_config("ou-small.toml"))
        .map_err(|e| e.to_string())?;
    let run_in_pool = |threads: Option<usize>| -> Result<tempfile::TempDir, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        match threads {
            None => {
                run_experiment(&cfg, dir.path()).map_err(|e| e.to_string())?;
            }
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| e.to_string())?;
                pool.install(|| run_experiment(&cfg, dir.path()))
                    .map_err(|e| e.to_string())?;
            }
        }
        Ok(dir)
    };
    let ambient = run_in_pool(None)?;
    let single = run_in_pool(Some(1))?;
    let triple = run_in_pool(Some(3))?;

    let mut names = vec!["resolved_config.toml".to_string(), "verdicts.json".to_string()];
    let tables = std::fs::read_dir(ambient.path().join("tables")).map_err(|e| e.to_string())?;
    for entry in tables {
        let entry = entry.map_err(|e| e.to_string())?;
        names.push(format!("tables/{}", entry.file_name().to_string_lossy()));
    }
    names.sort();
    let mut compared = 0;
    for name in &names {
        let a = std::fs::read(ambient.path().join(name)).map_err(|e| e.to_string())?;
        for (label, dir) in [("1-thread", &single), ("3-thread", &triple)] {
            let b = std::fs::read(dir.path().join(name))
                .map_err(|e| format!("{label} bundle lacks {name}: {e}"))?;
            if a != b {
                return Err(format!("{name} differs between ambient and {label} runs"));
            }
        }
        compared += 1;
    }
    Ok(format!("{compared} bundle files byte-identical across ambient, 1-thread, and 3-thread pools"))
}
