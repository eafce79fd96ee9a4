mod config;
mod export;

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use corrint_core::analysis::{
    expansion_check, length_comparison, obstruction_verdict, GeodesicModel,
};
use corrint_core::convexint::{
    check_embedding, do_stage, homotopy_bounds, iterate, probes_for, step_homotopy, IterateParams, RunStatus, StageOutcome,
    StageParams,
};
use corrint_core::corrugation::{gamma, gamma_dt};
use corrint_core::decomposition::{decompose_fixed, reconstruct, sample_grid, DecomposeOptions, TermRule};
use corrint_core::evaluation::{defect_field, LayerSpec};
use corrint_core::geomcore::{sym_norm, Pt, Sym};
use corrint_core::models::{
    model_by_name, model_obstruction_metric, psi_normal_data, short_map_from_normal_data, ModelParams, ModelSpec,
    Side, MODEL_NAMES,
};

use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "corrint", version, about = "One-sided isometric C1 extensions by convex integration")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ModelFlags {
    /// Model name (see `corrint model --list`).
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    eps_geom: Option<f64>,
    #[arg(long)]
    side: Option<String>,
    #[arg(long)]
    theta_max: Option<f64>,
    /// Coin axis ratio.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    eps_band: Option<f64>,
    #[arg(long)]
    psi1: Option<f64>,
}

impl ModelFlags {
    fn apply(&self, p: &mut ModelParams) -> Result<(), ConfigError> {
        if let Some(v) = self.eps_geom {
            p.eps_geom = v;
        }
        if let Some(s) = &self.side {
            p.side = match s.as_str() {
                "north" | "+" => Side::North,
                "south" | "-" => Side::South,
                _ => return Err(ConfigError { path: "config.model_params.side".into(), message: format!("unknown side {s:?}") }),
            };
        }
        if let Some(v) = self.theta_max {
            p.theta_max = v;
        }
        if let Some(v) = self.a {
            p.a = v;
        }
        if let Some(v) = self.eps_band {
            p.eps_band = v;
        }
        if let Some(v) = self.psi1 {
            p.psi1 = v;
        }
        Ok(())
    }

    fn build(&self) -> Result<ModelSpec> {
        let Some(name) = &self.model else { bail!(ConfigError { path: "config.model".into(), message: "missing required key".into() }) };
        let mut p = ModelParams::default();
        self.apply(&mut p)?;
        Ok(model_by_name(name, &p)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the corrugation Γ and ∂tΓ.
    #[command(allow_negative_numbers = true)]
    Profile {
        #[arg(long, default_value_t = 2.0)]
        s_max: f64,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        /// CSV output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decompose a model's defect into primitive metrics.
    #[command(allow_negative_numbers = true)]
    Decompose {
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long)]
        pre_rotate: bool,
    },
    /// List models or validate one.
    #[command(allow_negative_numbers = true)]
    Model {
        #[arg(long)]
        list: bool,
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        params: ModelFlags,
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 65)]
        grid: usize,
    },
    /// Run the iteration on a model.
    #[command(allow_negative_numbers = true)]
    Extend(ExtendArgs),
    /// Evaluate the homotopy of a model's first step at one τ.
    #[command(allow_negative_numbers = true)]
    Homotopy {
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        obj: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Numerical checks of the geodesic expansion and the obstruction.
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
    /// Export a model's base map, or corrugated circles.
    #[command(allow_negative_numbers = true)]
    Export {
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        obj: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Comma-separated frequencies of single full steps (curves only).
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
    },
}

#[derive(Args)]
struct ExtendArgs {
    /// JSON run configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `margin` or `tolerance-aware`.
    #[arg(long)]
    delta_rule: Option<String>,
    #[arg(long)]
    samples_per_period: Option<f64>,
    #[arg(long)]
    probe_budget: Option<usize>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    obj: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// `geodesic`.
    #[arg(long)]
    lemma: Option<String>,
    /// `sphere` or `plane`.
    #[arg(long, default_value = "sphere")]
    model: String,
    /// Polar angle of the latitude circle.
    #[arg(long, default_value_t = 0.6)]
    rho: f64,
    /// Radius of the Euclidean circle.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Largest t of the ladder.
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    obstruction: bool,
    #[arg(long, default_value_t = 3.0)]
    psi1: f64,
    #[arg(long, default_value_t = 2)]
    n: usize,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn extend_config(a: &ExtendArgs) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| ConfigError { path: "config".into(), message: format!("{}: {e}", p.display()) })?;
            RunConfig::from_json(&text)?
        }
        None => match &a.model.model {
            Some(m) => RunConfig::defaults(m.clone()),
            None => return Err(ConfigError { path: "config.model".into(), message: "missing required key".into() }),
        },
    };
    if let Some(m) = &a.model.model {
        cfg.model = m.clone();
    }
    a.model.apply(&mut cfg.model_params)?;
    macro_rules! set {
        ($src:expr, $dst:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    set!(a.eps, cfg.eps);
    set!(a.tol, cfg.tol);
    set!(a.stages, cfg.max_stages);
    set!(a.seed, cfg.seed);
    set!(a.samples_per_period, cfg.search.samples_per_period);
    set!(a.probe_budget, cfg.search.probe_budget);
    set!(a.lambda_max, cfg.search.lambda_max);
    set!(a.grid, cfg.export_grid);
    if a.report.is_some() {
        cfg.report = a.report.clone();
    }
    if a.obj.is_some() {
        cfg.obj = a.obj.clone();
    }
    if a.csv.is_some() {
        cfg.csv = a.csv.clone();
    }
    if let Some(r) = &a.delta_rule {
        cfg.delta_rule = serde_json::from_value(serde_json::Value::String(r.clone()))
            .map_err(|e| ConfigError { path: "config.delta_rule".into(), message: e.to_string() })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_extend(a: &ExtendArgs) -> Result<ExitCode> {
    let cfg = match extend_config(a) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(1));
        }
    };
    let model = match model_by_name(&cfg.model, &cfg.model_params) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: config.model: {e}");
            return Ok(ExitCode::from(1));
        }
    };
    if cfg.model == "psi" {
        let bd = psi_normal_data(cfg.model_params.psi1);
        let v = obstruction_verdict(&bd, &[(0.0, 1.0), (TAU / 3.0, 1.0)]);
        eprintln!("obstruction check: {}", if v.obstructed { "C1-extension obstructed" } else { "not obstructed" });
    }
    let params = IterateParams {
        model: cfg.model.clone(),
        eps: cfg.eps,
        tol: cfg.tol,
        max_stages: cfg.max_stages,
        delta_rule: cfg.delta_rule,
        pre_rotate: false,
        search: cfg.effective_search(),
    };
    let u0 = model.layered();
    let (report, map, code) = match iterate(&u0, &model.metric, &params) {
        Ok(r) => (r.report, r.map, 0),
        Err(f) => {
            eprintln!("run stopped: {}", f.error);
            (f.partial.report, f.partial.map, 2)
        }
    };
    if let Some(p) = &cfg.report {
        write_file(p, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    if let Some(p) = &cfg.obj {
        write_file(p, &export::obj_string(&map, cfg.export_grid, &cfg.model)?)?;
    }
    if let Some(p) = &cfg.csv {
        write_file(p, &export::csv_string(&map, &model.metric, cfg.export_grid)?)?;
    }
    let status = match report.status {
        RunStatus::Converged => "converged",
        RunStatus::NotConverged => "not-converged",
        RunStatus::Failed => "failed",
    };
    println!("status: {status}");
    println!("stages: {}", report.stages.len());
    if let Some(it) = &report.iteration {
        println!("initial defect sup: {:e}", it.initial_defect_sup);
        println!("final defect sup: {:e}", it.final_defect_sup);
        println!("final defect min eigenvalue: {:e}", it.final_defect_min_eig);
        println!("C0 distance to base: {:e}", it.c0_distance_to_base);
        if let Some(b) = it.boundary_exact {
            println!("boundary trace exact: {b}");
        }
    }
    if code == 0 && map.n() == 1 {
        let d = &map.domain;
        let (lo, w) = (d.lo[0], d.width(0));
        let l = length_comparison(&map, &model.metric, &|t| (Pt::new(lo + w * t, 0.0), Pt::new(w, 0.0)), 1 << 20)?;
        println!("length: intrinsic {:.12} extrinsic {:.12}", l.intrinsic, l.extrinsic);
    }
    if code == 0 && map.n() == 2 {
        let e = check_embedding(&map, 0.1, 48)?;
        println!("embedding check: near {:.6} far {:.6} pass {}", e.near_min, e.far_min, e.pass);
    }
    Ok(ExitCode::from(code))
}

fn run_profile(s_max: f64, grid: usize, out: Option<PathBuf>) -> Result<()> {
    let grid = grid.max(2);
    let mut text = String::from("s,t,gamma1,gamma2,dt_gamma1,dt_gamma2\n");
    for i in 0..grid {
        let s = s_max * i as f64 / (grid - 1) as f64;
        for j in 0..grid {
            let t = TAU * j as f64 / (grid - 1) as f64;
            let g = gamma(s, t);
            let d = gamma_dt(s, t);
            text += &format!("{s:.17e},{t:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n", g[0], g[1], d[0], d[1]);
        }
    }
    match out {
        Some(p) => write_file(&p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_decompose(model: &ModelFlags, grid: usize, pre_rotate: bool) -> Result<()> {
    let m = model.build()?;
    let defect = m.defect.clone().unwrap_or_else(|| defect_field(&m.layered(), &m.metric));
    let samples = sample_grid(&m.domain, grid);
    let dec = decompose_fixed(&defect, &samples, DecomposeOptions { pre_rotate })?;
    println!("model: {}", m.name);
    println!("terms: {} (m0 bound {}, sign change {})", dec.m, dec.m0_bound, dec.sign_change);
    for (k, t) in dec.terms.iter().enumerate() {
        let sup = samples.iter().map(|x| t.coeff_sq(x)).fold(0.0, f64::max);
        println!("  term {k}: direction ({:.6}, {:.6}), sup a^2 {:.6e}", t.direction[0], t.direction[1], sup);
    }
    let res = samples.iter().map(|x| sym_norm(&(reconstruct(&dec, x) - defect.eval(x)), m.n())).fold(0.0, f64::max);
    println!("max reconstruction residual: {res:e}");
    Ok(())
}

fn run_model(list: bool, name: Option<String>, params: &ModelFlags, check: bool, grid: usize) -> Result<()> {
    if list || name.is_none() {
        for n in MODEL_NAMES {
            println!("{n}");
        }
        return Ok(());
    }
    let flags = ModelFlags { model: name, ..params.clone() };
    let m = flags.build()?;
    println!("model: {}", m.name);
    println!("dimension: {}", m.n());
    println!("domain: lo {:?} hi {:?} boundary axis {:?}", m.domain.lo, m.domain.hi, m.domain.boundary_axis);
    if check {
        let c = m.check(grid);
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
        println!("{:<28} {}", "samples", c.samples);
        println!("{:<28} {:.3e}", "defect sup", c.defect_sup);
        println!("{:<28} {:.3e}", "defect min eigenvalue", c.defect_min_eig);
        println!("{:<28} {}", "boundary defect sup", opt(c.boundary_defect_sup));
        println!("{:<28} {:.3e}", "interior min eigenvalue", c.interior_min_eig);
        println!("{:<28} {}", "boundary trace error", opt(c.trace_error));
        println!("{:<28} {}", "closed-form defect error", opt(c.closed_form_error));
        println!("{:<28} {}", "pass", c.pass);
    }
    Ok(())
}

fn first_step(model: &ModelSpec, eps: f64, tol: f64, seed: u64) -> Result<(StageParams, StageOutcome)> {
    let mut sp = StageParams::new(eps, tol);
    sp.search.seed = seed;
    let out = do_stage(&model.layered(), &model.metric, &sp, 1, 0)?;
    Ok((sp, out))
}

#[allow(clippy::too_many_arguments)]
fn run_homotopy(
    model: &ModelFlags,
    tau: f64,
    eps: f64,
    tol: f64,
    seed: u64,
    obj: Option<PathBuf>,
    csv: Option<PathBuf>,
    grid: usize,
) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        bail!("tau must lie in [0, 1]");
    }
    let flags = ModelFlags { model: Some(model.model.clone().unwrap_or_else(|| "circle".into())), ..model.clone() };
    let m = flags.build()?;
    let (sp, out) = first_step(&m, eps, tol, seed)?;
    let Some((prev, layer)) = out.last_step else { bail!("the model's defect vanishes; there is no step") };
    let h = step_homotopy(&prev, &layer, tau);
    let probes = probes_for(&out.map, &sp.search, 0x4077);
    let s = homotopy_bounds(&prev, &layer, &m.metric, &[tau], &probes)?;
    println!("{}", serde_json::to_string_pretty(&s[0])?);
    if let Some(p) = obj {
        write_file(&p, &export::obj_string(&h, grid, &format!("{}-tau", m.name))?)?;
    }
    if let Some(p) = csv {
        write_file(&p, &export::csv_string(&h, &m.metric, grid)?)?;
    }
    Ok(())
}

type CurveFn = Box<dyn Fn(f64) -> (Pt, Pt)>;

fn run_verify(v: &VerifyArgs) -> Result<()> {
    match (v.lemma.as_deref(), v.obstruction) {
        (Some("geodesic"), _) => {
            let (gm, curve, k): (GeodesicModel, CurveFn, f64) = match v.model.as_str() {
                "sphere" => {
                    let rho = v.rho;
                    if !(rho > 0.0 && rho < std::f64::consts::PI) {
                        bail!("rho must lie in (0, π)");
                    }
                    let c = move |t: f64| (Pt::new(rho, t / rho.sin()), Pt::new(0.0, 1.0 / rho.sin()));
                    (GeodesicModel::round_sphere(), Box::new(c), 1.0 / rho.tan())
                }
                "plane" => {
                    let r = v.radius;
                    if r.is_nan() || r <= 0.0 {
                        bail!("radius must be positive");
                    }
                    let c = move |t: f64| {
                        let a = t / r;
                        (Pt::new(r * a.sin(), r - r * a.cos()), Pt::new(a.cos(), a.sin()))
                    };
                    (GeodesicModel::euclidean(), Box::new(c), 1.0 / r)
                }
                other => bail!("unknown geodesic model {other:?} (use sphere or plane)"),
            };
            let t_max = v.t_max.unwrap_or(if v.model == "plane" { 0.02 * v.radius } else { 0.05 });
            let fit = expansion_check(&gm, &*curve, t_max)?;
            let oracle = -k * k / 24.0;
            let rel = ((fit.c3 - oracle) / oracle).abs();
            println!("k_g: {k:.12}");
            println!("fitted c3: {:.12e}", fit.c3);
            println!("-k_g^2/24: {oracle:.12e}");
            println!("relative error: {rel:.3e}");
            println!("pass: {}", rel <= 0.02);
        }
        (Some(other), _) => bail!("unknown lemma {other:?}"),
        (None, true) => {
            let r = model_obstruction_metric(v.psi1, v.n);
            println!("{}", serde_json::to_string_pretty(&r)?);
            let bd = psi_normal_data(v.psi1);
            let verdict = obstruction_verdict(&bd, &[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]);
            println!("boundary-data verdict: obstructed {}", verdict.obstructed);
            match short_map_from_normal_data(&bd, 0.5) {
                Ok(m) => println!("adapted short map: found with band width {}", m.eps_band),
                Err(e) => println!("adapted short map: {e}"),
            }
        }
        (None, false) => bail!("nothing to verify: pass --lemma geodesic or --obstruction"),
    }
    Ok(())
}

fn run_export(model: &ModelFlags, obj: Option<PathBuf>, csv: Option<PathBuf>, grid: usize, lambdas: &[f64]) -> Result<()> {
    let m = model.build()?;
    let base = m.layered();
    if lambdas.is_empty() {
        if let Some(p) = obj {
            write_file(&p, &export::obj_string(&base, grid, &m.name)?)?;
        }
        if let Some(p) = csv {
            write_file(&p, &export::csv_string(&base, &m.metric, grid)?)?;
        }
        return Ok(());
    }
    if m.n() != 1 {
        bail!("--lambdas needs a curve model");
    }
    let mut curves = Vec::new();
    let mut rows = String::from("lambda,x,u0,u1,u2\n");
    for &lambda in lambdas {
        let spec = LayerSpec {
            lambda,
            nu: Pt::new(1.0, 0.0),
            delta: 0.0,
            cutoff: None,
            rule: TermRule { dim: 1, index: 0, rot: Sym::identity() },
            stage_depth: 0,
            metric: m.metric.clone(),
        };
        let lm = base.with_layer(spec)?;
        let pts: Vec<_> = (0..grid)
            .map(|k| {
                let x = Pt::new(m.domain.lo[0] + m.domain.width(0) * k as f64 / grid as f64, 0.0);
                lm.eval_map(&x).map(|u| (x[0], u))
            })
            .collect::<Result<_, _>>()?;
        for (x, u) in &pts {
            rows += &format!("{lambda},{x:.17e},{:.17e},{:.17e},{:.17e}\n", u[0], u[1], u[2]);
        }
        curves.push((format!("lambda-{lambda}"), pts.into_iter().map(|(_, u)| u).collect()));
    }
    if let Some(p) = obj {
        write_file(&p, &export::obj_curves(&curves))?;
    }
    if let Some(p) = csv {
        write_file(&p, &rows)?;
    }
    Ok(())
}

fn configure_threads() {
    if let Some(n) = std::env::var("CORRINT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.command {
        Command::Extend(a) => run_extend(&a),
        Command::Profile { s_max, grid, out } => run_profile(s_max, grid, out).map(|_| ExitCode::SUCCESS),
        Command::Decompose { model, grid, pre_rotate } => run_decompose(&model, grid, pre_rotate).map(|_| ExitCode::SUCCESS),
        Command::Model { list, name, params, check, grid } => {
            run_model(list, name, &params, check, grid).map(|_| ExitCode::SUCCESS)
        }
        Command::Homotopy { model, tau, eps, tol, seed, obj, csv, grid } => {
            run_homotopy(&model, tau, eps, tol, seed, obj, csv, grid).map(|_| ExitCode::SUCCESS)
        }
        Command::Verify(v) => run_verify(&v).map(|_| ExitCode::SUCCESS),
        Command::Export { model, obj, csv, grid, lambdas } => {
            run_export(&model, obj, csv, grid, &lambdas).map(|_| ExitCode::SUCCESS)
        }
    };
    match res {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
