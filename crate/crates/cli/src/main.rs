use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use liouville::catalog;
use liouville::generalized::{
    blowup_bounds, detect_blowup, integrate_general, IntegratorConfig, Nonlinearity, Scenario, DEFAULT_SLACK,
};
use liouville::grid::uniform_nodes;
use liouville::io::{write_csv_file, write_field, write_json};
use liouville::problem::{build_g, build_psi0, BoundaryIntegral, ProblemSpec, Psi0Profile};
use liouville::regularity::{classify, fit_cusp, lp_asymptotic_constant, lp_norm, Norm, RegularityReport, Verdict};
use liouville::solver::{evaluate_field, singular_curve};
use liouville::verification::{
    gamma_identity, r_invariance, residual_convergence, schwarzian, schwarzian_samples,
};

/// Thread count for the parallel field evaluation. `RAYON_NUM_THREADS` is honored as well.
const THREADS_VAR: &str = "LIOUVILLE_THREADS";

#[derive(Parser)]
#[command(name = "liouville", version, about = "Closed-form solutions, blow-up analysis and simulation for ∂_{αt} ln u = f u")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the solution as global or blowing up and write the report.
    Classify(Common),
    /// Evaluate u on a grid and write it as CSV.
    Solve(Common),
    /// Sample the curve on which the denominator vanishes.
    SingularCurve(Common),
    /// Tabulate ‖u(·,t)‖_p against t.
    LpScan(Common),
    /// Integrate the generalized equation and check the envelope bounds.
    Simulate(Common),
    /// Run the verification checks and write a pass/fail summary.
    Verify(Common),
    /// Regenerate the four worked examples.
    ReproduceExamples(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Problem spec (JSON).
    #[arg(long, conflicts_with = "example")]
    spec: Option<PathBuf>,
    /// Built-in example 1-4 instead of a spec file.
    #[arg(long)]
    example: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    n_alpha: Option<usize>,
    /// Number of time samples.
    #[arg(long, default_value_t = 201)]
    n_t: usize,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Comma-separated norm exponents, `inf` allowed.
    #[arg(long, value_delimiter = ',', default_values_t = vec![Norm::P(1.0), Norm::P(2.0), Norm::Infinity])]
    p: Vec<Norm>,
    /// Replace g by the singular boundary data (1 - t)^{-(1+β)}.
    #[arg(long)]
    beta: Option<f64>,
    /// Blow-up cap on max u for `simulate`.
    #[arg(long)]
    cap: Option<f64>,
    /// Exponent of F(u) = u^p for `simulate` (overrides the spec scenario).
    #[arg(long)]
    power: Option<f64>,
    /// Also write gnuplot scripts.
    #[arg(long)]
    plot: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Ok(n) = std::env::var(THREADS_VAR) {
        let n: usize = n.parse().with_context(|| format!("{THREADS_VAR} must be a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Classify(c) => cmd_classify(&c),
        Command::Solve(c) => cmd_solve(&c),
        Command::SingularCurve(c) => cmd_singular_curve(&c),
        Command::LpScan(c) => cmd_lp_scan(&c),
        Command::Simulate(c) => cmd_simulate(&c),
        Command::Verify(c) => cmd_verify(&c),
        Command::ReproduceExamples(c) => cmd_reproduce(&c),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn load_spec(c: &Common) -> Result<ProblemSpec> {
    let mut spec = match (&c.spec, c.example) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ProblemSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(k)) => catalog::example(k, 513).with_context(|| format!("no example {k}; choose 1-4"))?,
        (None, None) => bail!("either --spec or --example is required"),
    };
    if let Some(beta) = c.beta {
        let general = spec.general.clone();
        spec = catalog::with_singular_boundary(&spec, beta)?;
        if let Some(g) = general {
            spec = spec.with_general(g);
        }
    }
    if let Some(n) = c.n_alpha {
        if n < 3 {
            bail!("--n-alpha must be at least 3, got {n}");
        }
        spec = spec.with_n_alpha(n);
    }
    if c.n_t == 0 {
        bail!("--n-t must be positive");
    }
    Ok(spec)
}

fn out_dir(c: &Common) -> Result<&Path> {
    fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
    Ok(&c.out)
}

struct Setup {
    spec: ProblemSpec,
    profile: Psi0Profile,
    b: BoundaryIntegral,
    report: RegularityReport,
    /// Right end of the time window: `--t-max`, else just below the blow-up time or 10.
    t_end: f64,
}

fn setup(c: &Common) -> Result<Setup> {
    let spec = load_spec(c)?;
    let profile = build_psi0(&spec)?;
    let horizon = c.t_max.unwrap_or(10.0);
    let limit = spec.g.blowup_point().map_or(horizon, |tb| horizon.min(0.999 * tb));
    let b = build_g(&spec, limit)?;
    let report = classify(&profile, &b, &spec)?;
    let t_end = match (c.t_max, report.t_star, report.boundary_blowup_time) {
        (Some(t), _, _) => t,
        (None, Some(ts), _) => 0.999 * ts,
        (None, None, Some(tb)) => 0.999 * tb,
        _ => 10.0,
    };
    if !(t_end >= 0.0 && t_end.is_finite()) {
        bail!("--t-max must be a non-negative finite time, got {t_end}");
    }
    Ok(Setup {
        spec,
        profile,
        b,
        report,
        t_end,
    })
}

fn time_grid(t_end: f64, n_t: usize) -> Result<Vec<f64>> {
    if n_t == 1 || t_end == 0.0 {
        return Ok(vec![0.0]);
    }
    Ok(uniform_nodes(0.0, t_end, n_t)?)
}

fn cmd_classify(c: &Common) -> Result<()> {
    let s = setup(c)?;
    let dir = out_dir(c)?;
    write_json(&dir.join("classify.json"), &s.report)?;
    println!("{}", summary(&s.report));
    Ok(())
}

fn summary(r: &RegularityReport) -> String {
    let when = match (r.verdict, r.t_star, r.boundary_blowup_time) {
        (Verdict::BoundaryInducedBlowup, _, Some(tb)) => format!(" t_b = {tb}"),
        (_, Some(t), _) => format!(" t* = {t}"),
        _ => String::new(),
    };
    let est = if r.estimate { " (estimate)" } else { "" };
    format!("{:?}{when}{est} M0 = {} locations {:?}", r.verdict, r.m0, r.blowup_locations)
}

fn cmd_solve(c: &Common) -> Result<()> {
    let s = setup(c)?;
    let dir = out_dir(c)?;
    let t = time_grid(s.t_end, c.n_t)?;
    let field = evaluate_field(&s.profile, &s.b, &s.spec, &s.spec.alpha_nodes(), &t);
    write_field(dir, "field", &s.spec, &field, c.plot)?;
    println!(
        "wrote {} ({} x {} samples, {} masked)",
        dir.join("field.csv").display(),
        field.n_t(),
        field.n_alpha(),
        field.masked_count()
    );
    Ok(())
}

fn cmd_singular_curve(c: &Common) -> Result<()> {
    let s = setup(c)?;
    let dir = out_dir(c)?;
    let curve = singular_curve(&s.profile, &s.b)?;
    write_csv_file(&dir.join("singular_curve.csv"), &s.spec, &[], |w| curve.write_csv(w))?;
    if let Some((a, t)) = curve.earliest() {
        println!("{} samples, earliest t = {t} at alpha = {a}", curve.alpha.len());
    }
    Ok(())
}

fn cmd_lp_scan(c: &Common) -> Result<()> {
    let s = setup(c)?;
    let dir = out_dir(c)?;
    let t = time_grid(s.t_end, c.n_t)?;
    let field = evaluate_field(&s.profile, &s.b, &s.spec, &s.spec.alpha_nodes(), &t);
    let g_star = s.report.t_star.map(|_| 2.0 / s.report.m0);
    let mut rows = Vec::with_capacity(t.len());
    for &ti in &t {
        let mut row = vec![ti, g_star.map_or(f64::NAN, |gs| gs - s.b.value(ti))];
        for &p in &c.p {
            row.push(lp_norm(&field, p, ti).unwrap_or(f64::NAN));
        }
        rows.push(row);
    }
    let header: Vec<String> = ["t".to_string(), "eps".to_string()]
        .into_iter()
        .chain(c.p.iter().map(|p| format!("norm_{p}")))
        .collect();
    let ps: Vec<String> = c.p.iter().map(|p| p.to_string()).collect();
    let extra = [("n_t", t.len().to_string()), ("p", ps.join(";"))];
    write_csv_file(&dir.join("lp_scan.csv"), &s.spec, &extra, |w| {
        writeln!(w, "{}", header.join(","))?;
        for row in &rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    })?;
    if s.report.verdict == Verdict::FiniteBlowup {
        if let Some(m) = fit_cusp(&s.profile)?.first() {
            let a = lp_asymptotic_constant(s.report.m0, m.c1, m.q)?;
            write_json(&dir.join("lp_asymptotic.json"), &json!({ "cusp": m, "asymptotic": a }))?;
            println!("q = {:.4}, ‖u‖₁ ~ g u0 C eps^-{:.4} with C = {:.6}", m.q, a.exponent, a.constant);
        }
    }
    println!("wrote {}", dir.join("lp_scan.csv").display());
    Ok(())
}

fn cmd_simulate(c: &Common) -> Result<()> {
    let spec = load_spec(c)?;
    let dir = out_dir(c)?;
    let scenario = spec.general.clone().unwrap_or(Scenario {
        nonlinearity: Nonlinearity::Identity,
        config: IntegratorConfig::new(1e-3, 1.0),
    });
    let nl = c.power.map_or(scenario.nonlinearity, Nonlinearity::power);
    let mut config = scenario.config;
    if let Some(dt) = c.dt {
        config.dt = dt;
    }
    if let Some(t) = c.t_max {
        config.t_end = t;
    }
    if let Some(cap) = c.cap {
        config.blowup_cap = cap;
    }
    let traj = integrate_general(&spec, &nl, &config)?;
    let detection = detect_blowup(&traj, traj.cap);
    let bounds = blowup_bounds(&spec, &traj, DEFAULT_SLACK)?;
    let extra = [("dt", config.dt.to_string()), ("cap", config.blowup_cap.to_string())];
    write_csv_file(&dir.join("trajectory.csv"), &spec, &extra, |w| traj.write_csv(w))?;
    write_json(&dir.join("bounds.json"), &bounds)?;
    write_json(
        &dir.join("detection.json"),
        &json!({ "detection": detection, "warnings": traj.warnings, "max_relative_drift": traj.max_relative_drift }),
    )?;
    match detection.t_numeric {
        Some(t) => println!("cap {} reached at t = {t}, bound {}", traj.cap, bounds.t_star_bound),
        None => println!("no blow-up up to t = {}", traj.last().t),
    }
    println!(
        "predicted {:?}, {} envelope violations, min lower margin {:e}",
        bounds.predicted,
        bounds.violations.len(),
        bounds.min_lower_margin
    );
    Ok(())
}

fn cmd_verify(c: &Common) -> Result<()> {
    let s = setup(c)?;
    let dir = out_dir(c)?;
    let t_hi = match (s.report.t_star, s.report.boundary_blowup_time) {
        (Some(t), _) | (None, Some(t)) => 0.9 * t,
        _ => s.t_end.min(2.0),
    };
    let mut checks = Vec::new();
    let mut record = |name: &str, pass: bool, value: serde_json::Value| {
        info!("{name}: {}", if pass { "pass" } else { "fail" });
        checks.push(json!({ "check": name, "pass": pass, "value": value }));
    };

    let residual = residual_convergence(&s.spec, (0.1, 0.9), (0.05 * t_hi, t_hi), 128, 4)?;
    let order = residual.convergence_order.unwrap_or(f64::NAN);
    record("residual_order", (1.8..=2.2).contains(&order), json!(residual));

    let b = &s.b;
    let samples = schwarzian_samples(|t| b.value(t), 0.05 * t_hi, 0.95 * t_hi)?;
    let sch = schwarzian(&samples)?;
    // finite-difference cross-check; its own truncation error grows near a pole of G
    let diagnostics = json!({
        "schwarzian_max_abs": sch.estimate.max_abs(),
        "schwarzian_five_point_disagreement": sch.max_disagreement,
    });
    if s.spec.singular_boundary().is_some_and(|(beta, _)| beta == 1.0) {
        // G is fractional linear, so S(G) vanishes identically
        record("schwarzian_vanishes", sch.estimate.max_abs() <= 1e-6, json!(sch.estimate.max_abs()));
    }

    let alpha = s.spec.alpha_nodes();
    let t_mid = 0.5 * t_hi;
    let mut disc = Vec::new();
    for h in [0.04, 0.02, 0.01].map(|h| h * t_hi) {
        let field = evaluate_field(&s.profile, b, &s.spec, &alpha, &[t_mid - h, t_mid, t_mid + h]);
        disc.push(r_invariance(&field, &[0.25, 0.5, 0.75], t_mid)?.max_discrepancy);
    }
    let tiny = disc.iter().all(|&d| d < 1e-9);
    let ratios: Vec<f64> = disc.windows(2).map(|w| w[0] / w[1]).collect();
    record(
        "r_invariance_second_order",
        tiny || ratios.iter().all(|r| (3.5..=4.5).contains(r)),
        json!({ "discrepancies": disc, "ratios": ratios }),
    );

    for q in [0.6, 1.0, 2.0, 5.0] {
        let g = gamma_identity(q)?;
        record(&format!("gamma_identity_q{q}"), g.diff.abs() <= 1e-8, json!(g));
    }

    let passed = checks.iter().all(|c| c["pass"] == true);
    write_json(&dir.join("verify.json"), &json!({ "passed": passed, "checks": checks, "diagnostics": diagnostics }))?;
    for c in &checks {
        println!("{} {}", if c["pass"] == true { "PASS" } else { "FAIL" }, c["check"].as_str().unwrap_or(""));
    }
    if !passed {
        bail!("verification failed");
    }
    Ok(())
}

fn cmd_reproduce(c: &Common) -> Result<()> {
    let dir = out_dir(c)?;
    let n_alpha = c.n_alpha.unwrap_or(129);
    for k in 1..=4 {
        let spec = catalog::example(k, n_alpha).expect("examples 1-4 exist");
        let profile = build_psi0(&spec)?;
        let horizon = spec.g.blowup_point().map_or(10.0, |tb| 0.999 * tb);
        let b = build_g(&spec, horizon)?;
        let report = classify(&profile, &b, &spec)?;
        let t_end = match (report.t_star, report.boundary_blowup_time) {
            (Some(t), _) | (None, Some(t)) => 0.999 * t,
            _ => horizon,
        };
        let t = time_grid(t_end, c.n_t)?;
        let field = evaluate_field(&profile, &b, &spec, &spec.alpha_nodes(), &t);
        let stem = format!("example{k}");
        write_field(dir, &format!("{stem}_field"), &spec, &field, c.plot)?;
        write_json(&dir.join(format!("{stem}_report.json")), &report)?;

        let samples: Vec<(f64, f64)> = (0..20)
            .map(|i| 0.025 + 0.05 * i as f64)
            .filter_map(|a| report.final_profile_at(&profile, &spec, a).map(|v| (a, v)))
            .collect();
        write_csv_file(&dir.join(format!("{stem}_final_profile.csv")), &spec, &[], |w| {
            writeln!(w, "alpha,limit")?;
            for (a, v) in &samples {
                writeln!(w, "{a},{v}")?;
            }
            Ok(())
        })?;
        println!("example {k}: {}", summary(&report));
        for (a, v) in samples.iter().take(3) {
            println!("  limit u({a}) = {v}");
        }
    }
    Ok(())
}
