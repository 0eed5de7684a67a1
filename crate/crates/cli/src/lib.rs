//! Command-line front end: argument parsing, cache management, and
//! machine-readable JSON/CSV output for every toolkit operation.

pub mod config;
pub mod report;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use hamsys_core::bubble::{self, BubbleSolution};
use hamsys_core::cache::{self, BubbleCache};
use hamsys_core::constants::EnergyConstants;
use hamsys_core::geometry::BoundarySurface;
use hamsys_core::halfspace::{self, CorrectorKind, QuadricBoundaryData};
use hamsys_core::hyperbola;
use hamsys_core::quad::QuadratureSpec;
use hamsys_core::reduced::{self, ThetaLandscape};
use hamsys_core::{Error, Result};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "hamsys",
    version,
    about = "Critical Lane-Emden bubbles, boundary correctors and blow-up prediction",
    disable_help_subcommand = true
)]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cache directory (overrides config file and HAMSYS_CACHE_DIR).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Verbose progress notes on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Criticality, decay exponent and the remainder-exponent ledger.
    Hyperbola(HyperbolaArgs),
    /// Ground-state bubbles: solve by shooting, or show a cached solution.
    #[command(subcommand)]
    Bubble(BubbleCommand),
    /// Energy-expansion constants from a bubble file.
    Constants(ConstantsArgs),
    /// Full identity/positivity verification suite.
    Verify(VerifyArgs),
    /// Half-space boundary corrector fields.
    Corrector(CorrectorArgs),
    /// Boundary-surface curvature and critical points.
    #[command(subcommand)]
    Geometry(GeometryCommand),
    /// Blow-up prediction on a surface.
    Predict(PredictArgs),
    /// Reduced-energy landscape as CSV.
    Landscape(LandscapeArgs),
}

#[derive(Args, Debug)]
struct HyperbolaArgs {
    #[arg(long = "N")]
    n: u32,
    #[arg(long)]
    p: f64,
    /// Solved from the critical relation when omitted.
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum BubbleCommand {
    /// Shoot for the ground state (cached by input hash).
    Solve(BubbleSolveArgs),
    /// Print tail diagnostics of a bubble file.
    Show { file: PathBuf },
}

#[derive(Args, Debug)]
struct BubbleSolveArgs {
    #[arg(long = "N")]
    n: u32,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    /// Also write the bubble file here (in addition to the cache).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[arg(long)]
    bubble: PathBuf,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    bubble: PathBuf,
}

#[derive(Args, Debug)]
struct CorrectorArgs {
    #[arg(long)]
    bubble: PathBuf,
    /// Comma-separated quadric coefficients rho_1,...,rho_{N-1}.
    #[arg(long)]
    rho: String,
    #[arg(long, value_parser = ["phi0", "psi0"])]
    kind: String,
    /// JSON file with an array of evaluation points.
    #[arg(long)]
    probes: PathBuf,
}

#[derive(Subcommand, Debug)]
enum GeometryCommand {
    /// Curvature report at a point (projected onto the surface).
    Curvature(CurvatureArgs),
    /// Critical points of the mean curvature.
    Critical(CriticalArgs),
}

#[derive(Args, Debug)]
struct CurvatureArgs {
    #[arg(long)]
    surface: PathBuf,
    /// Comma-separated coordinates.
    #[arg(long)]
    point: String,
}

#[derive(Args, Debug)]
struct CriticalArgs {
    #[arg(long)]
    surface: PathBuf,
    /// Optional JSON file with seed points.
    #[arg(long)]
    seeds: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    surface: PathBuf,
    #[arg(long)]
    bubble: PathBuf,
    /// Comma-separated list of eps values.
    #[arg(long)]
    eps: String,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct LandscapeArgs {
    #[arg(long)]
    surface: PathBuf,
    #[arg(long)]
    bubble: PathBuf,
    /// d grid as lo:hi:count (log-spaced).
    #[arg(long = "d-range")]
    d_range: String,
    /// Chart spec as x1,...,xN:radius:points_per_arm.
    #[arg(long)]
    chart: String,
    #[arg(long)]
    lambda: Option<f64>,
}

/// Stable top-level output schema.
#[derive(Serialize)]
struct Envelope<R: Serialize> {
    command: String,
    inputs: serde_json::Value,
    results: R,
    diagnostics: Vec<String>,
    version: String,
}

fn emit<R: Serialize>(
    command: &str,
    inputs: serde_json::Value,
    results: R,
    diagnostics: Vec<String>,
) -> Result<()> {
    let envelope = Envelope {
        command: command.to_string(),
        inputs,
        results,
        diagnostics,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    println!("{}", cache::to_canonical_json(&envelope)?);
    Ok(())
}

pub fn run_from_env() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    run(&args)
}

/// Parse and dispatch. Exit codes: 0 success, 1 usage, 2 domain error,
/// 3 accuracy failure, 4 refusal (blow-up hypotheses not satisfiable).
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    let mut diagnostics = Vec::new();
    let mut config = match &cli.config {
        Some(path) => match RunConfig::from_file(path) {
            Ok((config, warnings)) => {
                diagnostics.extend(warnings);
                config
            }
            Err(e) => {
                eprintln!("{e}");
                return e.exit_code();
            }
        },
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.cache_dir {
        config.cache_dir = dir.clone();
    }
    config.verbosity = config.verbosity.max(cli.verbose);
    if let Err(e) = config.validate() {
        eprintln!("{e}");
        return e.exit_code();
    }
    match dispatch(cli.command, &config, diagnostics) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, config: &RunConfig, diagnostics: Vec<String>) -> Result<()> {
    match command {
        Command::Hyperbola(args) => cmd_hyperbola(args, diagnostics),
        Command::Bubble(BubbleCommand::Solve(args)) => cmd_bubble_solve(args, config, diagnostics),
        Command::Bubble(BubbleCommand::Show { file }) => cmd_bubble_show(&file, diagnostics),
        Command::Constants(args) => cmd_constants(args, config, diagnostics),
        Command::Verify(args) => cmd_verify(args, config, diagnostics),
        Command::Corrector(args) => cmd_corrector(args, diagnostics),
        Command::Geometry(GeometryCommand::Curvature(args)) => cmd_curvature(args, diagnostics),
        Command::Geometry(GeometryCommand::Critical(args)) => {
            cmd_critical(args, config, diagnostics)
        }
        Command::Predict(args) => cmd_predict(args, config, diagnostics),
        Command::Landscape(args) => cmd_landscape(args, config, diagnostics),
    }
}

fn parse_float_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("bad {what} entry: {part}")))
        })
        .collect()
}

fn cmd_hyperbola(args: HyperbolaArgs, diagnostics: Vec<String>) -> Result<()> {
    let q = match args.q {
        Some(q) => q,
        None => hyperbola::q_from_p(args.n, args.p)?,
    };
    let pair = hyperbola::classify(args.n, args.p, q)?;
    let mut results = json!({
        "N": pair.n,
        "p": pair.p,
        "q": pair.q,
        "criticality": pair.criticality,
        "swapped": pair.swapped,
        "hyperbola_residual": hyperbola::hyperbola_residual(pair.n, pair.p, pair.q),
    });
    if pair.criticality == hyperbola::Criticality::Critical {
        let decay = hyperbola::decay_exponent(&pair)?;
        results["regime"] = serde_json::to_value(decay.regime).unwrap();
        results["gamma"] = json!(decay.gamma);
        if decay.regime != hyperbola::Regime::QLog {
            let ledger = hyperbola::remainder_ledger(&pair)?;
            let (a, b) = pair.scaling_exponents()?;
            results["scaling_exponents"] = json!({ "a": a, "b": b });
            results["ledger"] = serde_json::to_value(&ledger).unwrap();
        }
    }
    emit(
        "hyperbola",
        json!({"N": args.n, "p": args.p, "q": args.q}),
        results,
        diagnostics,
    )
}

fn cmd_bubble_solve(
    args: BubbleSolveArgs,
    config: &RunConfig,
    mut diagnostics: Vec<String>,
) -> Result<()> {
    let q = match args.q {
        Some(q) => q,
        None => hyperbola::q_from_p(args.n, args.p)?,
    };
    let (n, p) = (args.n, args.p);
    let tol = args.tol.unwrap_or(config.ode_tol);
    let rmax = args.rmax.unwrap_or(bubble::DEFAULT_R_MAX);
    let key = cache::cache_key(n, p, q, tol, rmax);
    let file_name = format!("bubble_{key}.json");
    let cache_path = config.cache_dir.join(&file_name);
    let mut from_cache = false;
    let solution: BubbleSolution = match std::fs::read_to_string(&cache_path) {
        Ok(text) => match BubbleCache::from_json(&text).and_then(BubbleCache::into_solution) {
            Ok(sol) => {
                from_cache = true;
                sol
            }
            Err(e) => {
                diagnostics.push(format!("cache ignored ({e}); recomputing"));
                solve_and_store(n, p, q, tol, rmax, config, &file_name)?
            }
        },
        Err(_) => solve_and_store(n, p, q, tol, rmax, config, &file_name)?,
    };
    if let Some(out) = &args.out {
        let json = BubbleCache::from_solution(&solution).to_json()?;
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::Domain(format!("cannot create {parent:?}: {e}")))?;
        }
        std::fs::write(out, json)
            .map_err(|e| Error::Domain(format!("cannot write {out:?}: {e}")))?;
    }
    let results = json!({
        "beta_star": solution.beta_star,
        "tail": serde_json::to_value(&solution.tail).unwrap(),
        "ode_residual": solution.ode_residual,
        "cache_key": key,
        "cache_path": cache_path.to_string_lossy(),
        "from_cache": from_cache,
    });
    emit(
        "bubble solve",
        json!({"N": n, "p": p, "q": q, "tol": tol, "rmax": rmax}),
        results,
        diagnostics,
    )
}

fn solve_and_store(
    n: u32,
    p: f64,
    q: f64,
    tol: f64,
    rmax: f64,
    config: &RunConfig,
    file_name: &str,
) -> Result<BubbleSolution> {
    let pair = hyperbola::classify(n, p, q)?;
    let solution = bubble::solve_ground_state(&pair, tol, rmax)?;
    let json = BubbleCache::from_solution(&solution).to_json()?;
    cache::write_atomic(&config.cache_dir, file_name, json.as_bytes())?;
    Ok(solution)
}

fn load_bubble(path: &Path) -> Result<Arc<BubbleSolution>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read bubble file {path:?}: {e}")))?;
    Ok(Arc::new(BubbleCache::from_json(&text)?.into_solution()?))
}

fn cmd_bubble_show(file: &Path, diagnostics: Vec<String>) -> Result<()> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| Error::Domain(format!("cannot read bubble file {file:?}: {e}")))?;
    let cache = BubbleCache::from_json(&text)?;
    let results = json!({
        "meta": serde_json::to_value(&cache.meta).unwrap(),
        "tail": serde_json::to_value(&cache.tail).unwrap(),
        "residual": serde_json::to_value(&cache.residual).unwrap(),
        "grid_points": cache.grid.len(),
    });
    emit(
        "bubble show",
        json!({"file": file.to_string_lossy()}),
        results,
        diagnostics,
    )
}

fn cmd_constants(args: ConstantsArgs, config: &RunConfig, diagnostics: Vec<String>) -> Result<()> {
    let sol = load_bubble(&args.bubble)?;
    let spec = QuadratureSpec::new(sol.pair.n, 1e-12, config.quad_rel_tol);
    let ec = EnergyConstants::compute_with(&sol, args.lambda, spec)?;
    let results = json!({
        "S_pow": ec.s_pow,
        "C1": ec.c1_boundary,
        "C2": ec.c2_boundary,
        "C3": ec.c3_boundary,
        "C4": ec.c4_boundary,
        "C5": ec.c5_log,
        "C6": ec.c6_log,
        "c1": ec.frak_c1,
        "c2": ec.frak_c2,
        "c3": ec.frak_c3,
        "c4": ec.frak_c4,
        "identity_residual": ec.identity_residual,
        "lambda_used": ec.lambda_used,
    });
    emit(
        "constants",
        json!({"bubble": args.bubble.to_string_lossy(), "lambda": args.lambda}),
        results,
        diagnostics,
    )
}

fn cmd_verify(args: VerifyArgs, config: &RunConfig, diagnostics: Vec<String>) -> Result<()> {
    let sol = load_bubble(&args.bubble)?;
    let report = report::verify(&sol, config.quad_rel_tol)?;
    let pass = report.overall_pass;
    emit(
        "verify",
        json!({"bubble": args.bubble.to_string_lossy()}),
        serde_json::to_value(&report).unwrap(),
        diagnostics,
    )?;
    if pass {
        Ok(())
    } else {
        Err(Error::Accuracy("verification suite failed".into()))
    }
}

fn cmd_corrector(args: CorrectorArgs, mut diagnostics: Vec<String>) -> Result<()> {
    let sol = load_bubble(&args.bubble)?;
    let rho = QuadricBoundaryData::new(parse_float_list(&args.rho, "rho")?);
    let kind = if args.kind == "phi0" {
        CorrectorKind::Phi0
    } else {
        CorrectorKind::Psi0
    };
    let field = halfspace::build_corrector(&sol, rho.clone(), kind)?;
    if field.gamma_warning {
        diagnostics
            .push("gamma < 1: corrector built, but the two-term expansion is refused".into());
    }
    let text = std::fs::read_to_string(&args.probes)
        .map_err(|e| Error::Domain(format!("cannot read probes {:?}: {e}", args.probes)))?;
    let probes: Vec<Vec<f64>> = serde_json::from_str(&text)
        .map_err(|e| Error::Domain(format!("probes must be a JSON array of points: {e}")))?;
    let mut values = Vec::with_capacity(probes.len());
    for probe in &probes {
        values.push(json!({"x": probe, "value": field.eval(probe)?}));
    }
    let n = sol.pair.n as usize;
    let boundary_probes: Vec<Vec<f64>> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&s| {
            let mut x = vec![0.0; n];
            x[0] = s;
            x
        })
        .collect();
    let neumann = halfspace::neumann_residual(&field, &boundary_probes)?;
    let decay = halfspace::decay_fit(&field)?;
    let order_flags = match halfspace::expansion_order(&sol) {
        Ok(order) => serde_json::to_value(order).unwrap(),
        Err(_) => serde_json::Value::Null,
    };
    let results = json!({
        "values": values,
        "neumann_residual": neumann,
        "decay_slope": decay.slope,
        "decay_window": decay.window,
        "order_flags": order_flags,
    });
    emit(
        "corrector",
        json!({
            "bubble": args.bubble.to_string_lossy(),
            "rho": rho.rho,
            "kind": args.kind,
            "probes": args.probes.to_string_lossy(),
        }),
        results,
        diagnostics,
    )
}

/// Surface spec file: {"family": ..., "dimension": N, "params": {...}} with
/// optional "complement", "rotation", "translation".
#[derive(Deserialize)]
struct SurfaceSpecFile {
    family: String,
    dimension: usize,
    #[serde(default)]
    params: serde_json::Value,
    #[serde(default)]
    complement: bool,
    #[serde(default)]
    rotation: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    translation: Option<Vec<f64>>,
}

fn load_surface(path: &Path) -> Result<BoundarySurface> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read surface file {path:?}: {e}")))?;
    let spec: SurfaceSpecFile = serde_json::from_str(&text)
        .map_err(|e| Error::Domain(format!("bad surface file: {e}")))?;
    let dim = spec.dimension;
    let get_f64 = |key: &str| -> Result<f64> {
        spec.params
            .get(key)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::Domain(format!("surface params missing number {key}")))
    };
    let get_vec = |key: &str| -> Result<Vec<f64>> {
        spec.params
            .get(key)
            .and_then(|v| v.as_array())
            .map(|a| a.iter().filter_map(|x| x.as_f64()).collect::<Vec<f64>>())
            .ok_or_else(|| Error::Domain(format!("surface params missing array {key}")))
    };
    let center = || -> Vec<f64> {
        spec.params
            .get("center")
            .and_then(|v| v.as_array())
            .map(|a| a.iter().filter_map(|x| x.as_f64()).collect())
            .unwrap_or_else(|| vec![0.0; dim])
    };
    let mut surface = match spec.family.as_str() {
        "sphere" => BoundarySurface::sphere(dim, center(), get_f64("radius")?)?,
        "shell" => BoundarySurface::shell(dim, get_f64("r_inner")?, get_f64("r_outer")?)?,
        "ellipsoid" => BoundarySurface::ellipsoid(dim, center(), get_vec("semi_axes")?)?,
        "ellipsoidal_hole" => {
            BoundarySurface::ellipsoidal_hole(dim, get_f64("ball_radius")?, get_vec("semi_axes")?)?
        }
        "custom" => {
            return Err(Error::Domain(
                "custom surfaces are library-only; the CLI accepts the named families".into(),
            ))
        }
        other => return Err(Error::Domain(format!("unknown surface family {other}"))),
    };
    if spec.complement {
        surface = surface.complement();
    }
    if spec.rotation.is_some() || spec.translation.is_some() {
        let rot = spec.rotation.unwrap_or_else(|| {
            (0..dim)
                .map(|i| {
                    let mut row = vec![0.0; dim];
                    row[i] = 1.0;
                    row
                })
                .collect()
        });
        let t = spec.translation.unwrap_or_else(|| vec![0.0; dim]);
        surface = surface.with_motion(rot, t)?;
    }
    Ok(surface)
}

fn cmd_curvature(args: CurvatureArgs, diagnostics: Vec<String>) -> Result<()> {
    let surface = load_surface(&args.surface)?;
    let point = parse_float_list(&args.point, "point")?;
    if point.len() != surface.dim {
        return Err(Error::Domain(format!(
            "point has {} coordinates, surface dimension is {}",
            point.len(),
            surface.dim
        )));
    }
    let report = surface.mean_curvature(&point)?;
    emit(
        "geometry curvature",
        json!({"surface": args.surface.to_string_lossy(), "point": point}),
        serde_json::to_value(&report).unwrap(),
        diagnostics,
    )
}

fn cmd_critical(
    args: CriticalArgs,
    config: &RunConfig,
    mut diagnostics: Vec<String>,
) -> Result<()> {
    let surface = load_surface(&args.surface)?;
    let seeds: Option<Vec<Vec<f64>>> = match &args.seeds {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Domain(format!("cannot read seeds {path:?}: {e}")))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| Error::Domain(format!("seeds must be a JSON array: {e}")))?,
            )
        }
        None => None,
    };
    let found = surface.find_critical_points_with(seeds.as_deref(), config.geometry_tol)?;
    if found.is_empty() {
        diagnostics.push(
            "no critical point converged from the seed set; try supplying --seeds".into(),
        );
    }
    emit(
        "geometry critical",
        json!({
            "surface": args.surface.to_string_lossy(),
            "seeds": args.seeds.as_ref().map(|p| p.to_string_lossy().to_string()),
        }),
        serde_json::to_value(&found).unwrap(),
        diagnostics,
    )
}

fn cmd_predict(args: PredictArgs, config: &RunConfig, diagnostics: Vec<String>) -> Result<()> {
    let surface = load_surface(&args.surface)?;
    let sol = load_bubble(&args.bubble)?;
    let eps_list = parse_float_list(&args.eps, "eps")?;
    let spec = QuadratureSpec::new(sol.pair.n, 1e-12, config.quad_rel_tol);
    let ec = EnergyConstants::compute_with(&sol, args.lambda, spec)?;
    let prediction = reduced::predict_blowup(&surface, &ec, &sol, &eps_list, args.mu)?;
    emit(
        "predict",
        json!({
            "surface": args.surface.to_string_lossy(),
            "bubble": args.bubble.to_string_lossy(),
            "eps": eps_list,
            "mu": args.mu,
        }),
        serde_json::to_value(&prediction).unwrap(),
        diagnostics,
    )
}

fn cmd_landscape(args: LandscapeArgs, config: &RunConfig, _diagnostics: Vec<String>) -> Result<()> {
    let surface = load_surface(&args.surface)?;
    let sol = load_bubble(&args.bubble)?;
    let spec = QuadratureSpec::new(sol.pair.n, 1e-12, config.quad_rel_tol);
    let ec = EnergyConstants::compute_with(&sol, args.lambda, spec)?;

    let range: Vec<&str> = args.d_range.split(':').collect();
    if range.len() != 3 {
        return Err(Error::Domain("d-range must be lo:hi:count".into()));
    }
    let d_lo: f64 = range[0]
        .parse()
        .map_err(|_| Error::Domain("bad d-range low".into()))?;
    let d_hi: f64 = range[1]
        .parse()
        .map_err(|_| Error::Domain("bad d-range high".into()))?;
    let d_count: usize = range[2]
        .parse()
        .map_err(|_| Error::Domain("bad d-range count".into()))?;

    let chart: Vec<&str> = args.chart.split(':').collect();
    if chart.len() != 3 {
        return Err(Error::Domain(
            "chart must be x1,...,xN:radius:points_per_arm".into(),
        ));
    }
    let center = parse_float_list(chart[0], "chart center")?;
    let radius: f64 = chart[1]
        .parse()
        .map_err(|_| Error::Domain("bad chart radius".into()))?;
    let arm_points: usize = chart[2]
        .parse()
        .map_err(|_| Error::Domain("bad chart point count".into()))?;

    let landscape =
        ThetaLandscape::build(&ec, &surface, &center, radius, arm_points, d_lo, d_hi, d_count)?;
    // CSV: one row per (d, chart sample); columns documented in the README.
    let dim = surface.dim;
    let mut header = String::from("d,direction,offset");
    for i in 1..=dim {
        header.push_str(&format!(",x{i}"));
    }
    header.push_str(",H,theta");
    println!("{header}");
    for (i, &d) in landscape.d_grid.iter().enumerate() {
        for (j, sample) in landscape.chart.iter().enumerate() {
            let mut row = format!("{d:.16e},{},{:.16e}", sample.direction, sample.offset);
            for x in &sample.point {
                row.push_str(&format!(",{x:.16e}"));
            }
            row.push_str(&format!(",{:.16e},{:.16e}", sample.h, landscape.theta[i][j]));
            println!("{row}");
        }
    }
    Ok(())
}
