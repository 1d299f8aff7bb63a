//! `lheat`: command-line driver for the lightning heat solver.

mod output;
mod pool;
mod scene;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lightning_heat::asym::asym_flux_series;
use lightning_heat::geometry::{Scene, Source};
use lightning_heat::heat::{flux_series, particular_transform, solve_heat, EvalGrid, FluxRule, SolveParams, DEFAULT_POLES};
use lightning_heat::helmholtz::{convergence_sweep_with, evaluate, solve_transform};
use lightning_heat::ltinv::{convergence_profile, profile_slope, DEFAULT_EVALUATIONS};
use lightning_heat::specfun::Frequency;
use lightning_heat::{c64, Complex64};
use log::{info, warn};
use serde_json::{json, Value};

use output::{emit, Format, Table};
use pool::Pool;
use scene::SceneFile;

// Aliases keep clap from treating a parsed list as a repeated argument.
type Floats = Vec<f64>;
type Counts = Vec<usize>;

type TransformPair = (&'static str, fn(Complex64) -> Complex64);

#[derive(Parser)]
#[command(name = "lheat", version, about = "Heat equation outside polygonal absorbers by the lightning method")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scene description (JSON).
    #[arg(long)]
    scene: PathBuf,
    /// Newman poles per corner.
    #[arg(long, default_value_t = DEFAULT_POLES)]
    m: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Transformed field û(z; s) at one complex s.
    Transform {
        #[command(flatten)]
        common: Common,
        /// Laplace variable as `RE` or `RE,IM`.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        s: Complex64,
        /// Lattice `X0,X1,Y0,Y1,NX,NY`.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: EvalGrid,
    },
    /// Time-domain field u(z, t).
    Heat {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: f64,
        /// Talbot evaluations.
        #[arg(long = "M", default_value_t = DEFAULT_EVALUATIONS)]
        evaluations: usize,
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: EvalGrid,
    },
    /// Capture rates j_k(t) and cumulative captures c_k(t) per body.
    Flux {
        #[command(flatten)]
        common: Common,
        /// Increasing times `T1,T2,…`.
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        times: Floats,
        #[arg(long = "M", default_value_t = DEFAULT_EVALUATIONS)]
        evaluations: usize,
    },
    /// Matched-asymptotics fluxes for tagged bodies.
    Asym {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        times: Floats,
        #[arg(long = "M", default_value_t = DEFAULT_EVALUATIONS)]
        evaluations: usize,
    },
    /// E∞[û] against m at one s.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        s: Complex64,
        /// Increasing pole counts; defaults to 4, 9, …, 81, 90.
        #[arg(long, value_parser = parse_usize_list)]
        ms: Option<Counts>,
    },
    /// Talbot convergence on built-in transform pairs.
    TalbotSelftest {
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Largest M in the profile.
        #[arg(long = "M", default_value_t = DEFAULT_EVALUATIONS)]
        evaluations: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

fn parse_complex(text: &str) -> Result<Complex64, String> {
    match parse_list(text)?.as_slice() {
        [re] => Ok(c64(*re, 0.0)),
        [re, im] => Ok(c64(*re, *im)),
        _ => Err("expected RE or RE,IM".into()),
    }
}

fn parse_grid(text: &str) -> Result<EvalGrid, String> {
    let v = parse_list(text)?;
    if v.len() != 6 {
        return Err("expected X0,X1,Y0,Y1,NX,NY".into());
    }
    let count = |x: f64| -> Result<usize, String> {
        if x >= 1.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(format!("grid counts must be positive integers, got {x}"))
        }
    };
    EvalGrid::new(v[0], v[1], v[2], v[3], count(v[4])?, count(v[5])?).map_err(|e| e.to_string())
}

/// Pipeline stage named in error messages and mapped to the exit code.
#[derive(Debug, Clone, Copy)]
enum Stage {
    Setup,
    Scene,
    Solve,
    Output,
}

impl Stage {
    fn code(self) -> u8 {
        match self {
            Stage::Setup => 3,
            Stage::Scene => 4,
            Stage::Solve => 5,
            Stage::Output => 6,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Setup => "setup",
            Stage::Scene => "scene",
            Stage::Solve => "solve",
            Stage::Output => "output",
        })
    }
}

struct Failure {
    stage: Stage,
    error: anyhow::Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            stage,
            error: e.into(),
        })
    }
}

struct Loaded {
    file: SceneFile,
    scene: Scene,
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let file = SceneFile::load(path).at(Stage::Scene)?;
    let scene = file.scene().at(Stage::Scene)?;
    info!(
        "scene: {} bodies, {} vertices, h_min = {:.3e}",
        scene.bodies().len(),
        scene.vertex_count(),
        scene.h_min()
    );
    Ok(Loaded { file, scene })
}

fn params(loaded: &Loaded, m: usize, evaluations: usize) -> SolveParams {
    let p = SolveParams::new(m, evaluations);
    match loaded.file.runge_centers() {
        Some(c) => p.with_centers(c),
        None => p,
    }
}

fn complex_meta(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn finish(table: &Table, common: &Common) -> Result<(), Failure> {
    emit(table, common.format, common.out.as_deref()).at(Stage::Output)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let pool = Pool::from_env().at(Stage::Setup)?;
    info!("using {} worker thread(s)", pool.threads());
    match cli.command {
        Command::Transform { common, s, grid } => {
            let loaded = load(&common.scene)?;
            let scene = &loaded.scene;
            let freq = Frequency::new(s, scene.diffusivity()).at(Stage::Solve)?;
            let centers = loaded.file.runge_centers();
            let exp = solve_transform(scene, &freq, common.m, centers.as_deref()).at(Stage::Solve)?;
            if exp.plan().pruned() > 0 {
                warn!("{} poles pruned at the vertices; larger m will not help", exp.plan().pruned());
            }
            let points = grid.points();
            let homogeneous = evaluate(&exp, scene, &points);
            let mut table = Table::new("transform", vec!["x", "y", "re", "im", "mask"]);
            table
                .meta("s", complex_meta(s))
                .meta("m", common.m)
                .meta("basis_size", exp.plan().basis_size())
                .meta("pruned", exp.plan().pruned())
                .meta("boundary_error", exp.boundary_error().value)
                .meta("boundary_error_relative", exp.boundary_error().relative);
            for (z, h) in points.iter().zip(homogeneous) {
                let at_source = matches!(scene.source(), Source::Delta(z0) if z0 == z);
                let value = match h {
                    Some(h) if !at_source => Some(h + particular_transform(scene, &freq, &[*z]).at(Stage::Solve)?[0]),
                    _ => None,
                };
                table.push(match value {
                    Some(v) => vec![json!(z.re), json!(z.im), json!(v.re), json!(v.im), json!(false)],
                    None => vec![json!(z.re), json!(z.im), Value::Null, Value::Null, json!(true)],
                });
            }
            finish(&table, &common)
        }
        Command::Heat {
            common,
            t,
            evaluations,
            grid,
        } => {
            let loaded = load(&common.scene)?;
            let field = solve_heat(&loaded.scene, t, &grid, &params(&loaded, common.m, evaluations), &pool).at(Stage::Solve)?;
            for (j, e) in field.node_errors.iter().enumerate() {
                info!("node {j}: E_inf[u^] = {:.3e}", e.value);
            }
            info!("imaginary residue {:.3e}", field.imaginary_residue);
            let mut table = Table::new("heat", vec!["x", "y", "value", "mask"]);
            table
                .meta("t", t)
                .meta("m", field.m)
                .meta("M", field.evaluations)
                .meta("boundary_error", field.boundary_error.map(|e| e.value))
                .meta("imaginary_residue", field.imaginary_residue);
            for (z, v) in grid.points().iter().zip(&field.values) {
                table.push(vec![json!(z.re), json!(z.im), json!(v), json!(v.is_none())]);
            }
            finish(&table, &common)
        }
        Command::Flux {
            common,
            times,
            evaluations,
        } => {
            let loaded = load(&common.scene)?;
            let p = params(&loaded, common.m, evaluations);
            let series = flux_series(&loaded.scene, &times, &p, &FluxRule::default(), &pool).at(Stage::Solve)?;
            let mut table = flux_table("flux", &series);
            table.meta("m", common.m).meta("M", evaluations);
            finish(&table, &common)
        }
        Command::Asym {
            common,
            times,
            evaluations,
        } => {
            let loaded = load(&common.scene)?;
            let model = loaded.file.asym_model(&loaded.scene).at(Stage::Scene)?;
            for (k, (l, nu)) in model.capacitances().iter().zip(model.nu()).enumerate() {
                info!("body {k}: capacity {l:.5e}, nu {nu:.5}");
            }
            let series = asym_flux_series(&model, &times, evaluations, &pool).at(Stage::Solve)?;
            let mut table = flux_table("asym", &series);
            table.meta("M", evaluations).meta("capacities", json!(model.capacitances()));
            finish(&table, &common)
        }
        Command::Converge { common, s, ms } => {
            let loaded = load(&common.scene)?;
            let freq = Frequency::new(s, loaded.scene.diffusivity()).at(Stage::Solve)?;
            let ms = ms.unwrap_or_else(|| vec![4, 9, 16, 25, 36, 49, 64, 81, 90]);
            let centers = loaded.file.runge_centers();
            let sweep = convergence_sweep_with(&loaded.scene, &freq, &ms, centers.as_deref(), |row| {
                info!("m = {}: N = {}, E_inf = {:.3e}", row.m, row.basis_size, row.error);
            })
            .at(Stage::Solve)?;
            let mut table = Table::new("converge", vec!["m", "N", "error", "pruned"]);
            table.meta("s", complex_meta(s)).meta("stagnated_at", sweep.stagnated_at.map(|i| sweep.rows[i].m));
            if let Some(fit) = sweep.fit() {
                table.meta("slope_sqrt_n", fit.slope).meta("correlation", fit.correlation);
            }
            for r in &sweep.rows {
                table.push(vec![json!(r.m), json!(r.basis_size), json!(r.error), json!(r.pruned)]);
            }
            finish(&table, &common)
        }
        Command::TalbotSelftest {
            t,
            evaluations,
            out,
            format,
        } => {
            if evaluations < 2 {
                return Err(anyhow::anyhow!("the self-test needs M >= 2")).at(Stage::Setup);
            }
            let sizes: Vec<usize> = (1..=evaluations).collect();
            let mut table = Table::new("talbot-selftest", vec!["pair", "M", "value", "error"]);
            table.meta("t", t);
            let pairs: [TransformPair; 4] = [
                ("1/s", |s| s.inv()),
                ("1/(s+1)", |s| (s + 1.0).inv()),
                ("1/s^2", |s| (s * s).inv()),
                ("1/(s^2+1)", |s| (s * s + 1.0).inv()),
            ];
            for (name, f) in pairs {
                let rows = convergence_profile(f, t, &sizes).at(Stage::Solve)?;
                if let Some(fit) = profile_slope(&rows) {
                    table.meta(&format!("slope {name}"), fit.slope);
                }
                for r in rows {
                    table.push(vec![json!(name), json!(r.evaluations), json!(r.value), json!(r.error)]);
                }
            }
            emit(&table, format, out.as_deref()).at(Stage::Output)
        }
    }
}

fn flux_table(command: &str, series: &lightning_heat::heat::FluxSeries) -> Table {
    let mut table = Table::new(command, vec!["t", "body", "j", "c"]);
    for (i, t) in series.times.iter().enumerate() {
        for k in 0..series.j.len() {
            table.push(vec![json!(t), json!(k), json!(series.j[k][i]), json!(series.c[k][i])]);
        }
    }
    let totals = series.total_captured();
    if let Some(last) = totals.last() {
        table.meta("total_captured_final", *last);
    }
    table
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { stage, error }) => {
            eprintln!("lheat: {stage} failed: {error:#}");
            ExitCode::from(stage.code())
        }
    }
}
