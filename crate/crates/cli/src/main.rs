mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use gbbm::bbm::{self, SimParams};
use gbbm::env::PeriodicField;
use gbbm::fkpp::{self, FkppParams, InitialCondition, McKeanFunction};
use gbbm::spectral::{self, SolverOptions};
use gbbm::speed::{self, RateEvaluator};
use gbbm::tilted;
use gbbm::verify::{self, VerifyOptions};
use gbbm::wulff;
use gbbm::Exec;
use serde_json::json;
use sha2::{Digest, Sha256};

use config::{Config, McKeanKind, Side};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] gbbm::Error),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0} of {1} criteria failed")]
    Verify(usize, usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "gbbm", version, about = "Branching Brownian motion in periodic environments")]
struct Cli {
    /// TOML configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV/JSON artifacts and `manifest.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    dump: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Principal eigenvalue gamma(e, lambda) over a lambda grid.
    Eigen,
    /// Minimal speeds c*(e) over a direction grid.
    Speed,
    /// Rate function I_e on a zeta grid.
    Rate,
    /// Wulff shape of the speed profile.
    Wulff,
    /// Particle counts and extents of BBM replicas.
    Simulate,
    /// Half-space event probabilities.
    Halfspace,
    /// Hausdorff distance of the normalized hull to the Wulff shape.
    Shape,
    /// Tilted-path law of large numbers and cumulants.
    Tilted,
    /// F-KPP front and its speed.
    Fkpp,
    /// McKean representation check.
    Mckean,
    /// Run all acceptance criteria.
    VerifyAll,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Speed => "speed",
            Command::Rate => "rate",
            Command::Wulff => "wulff",
            Command::Simulate => "simulate",
            Command::Halfspace => "halfspace",
            Command::Shape => "shape",
            Command::Tilted => "tilted",
            Command::Fkpp => "fkpp",
            Command::Mckean => "mckean",
            Command::VerifyAll => "verify-all",
        }
    }
}

struct Artifact {
    file: String,
    contents: String,
}

impl Artifact {
    fn new(file: impl Into<String>, contents: String) -> Self {
        Artifact { file: file.into(), contents }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gbbm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.dump {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let exec = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be positive".into())),
        Some(1) => Exec::Sequential,
        Some(n) => {
            std::env::set_var("RAYON_NUM_THREADS", n.to_string());
            Exec::Parallel
        }
        None => Exec::Parallel,
    };
    let field = cfg.field.build()?;
    let start = Instant::now();
    let (artifacts, failure) = dispatch(cli.command, &cfg, &field, exec)?;
    let wall = start.elapsed().as_secs_f64();
    match &cli.out {
        Some(dir) => write_outputs(dir, cli.command, &cfg, &artifacts, wall)?,
        None => {
            for a in &artifacts {
                print!("{}", a.contents);
            }
        }
    }
    failure.map_or(Ok(()), Err)
}

fn field_hash(cfg: &Config) -> String {
    let text = toml::to_string(&cfg.field).expect("field serializes");
    Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_outputs(dir: &Path, command: Command, cfg: &Config, artifacts: &[Artifact], wall: f64) -> Result<(), CliError> {
    let io = |p: &Path, e| CliError::Io(p.to_path_buf(), e);
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    for a in artifacts {
        let p = dir.join(&a.file);
        std::fs::write(&p, &a.contents).map_err(|e| io(&p, e))?;
    }
    let manifest = json!({
        "command": command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "field_sha256": field_hash(cfg),
        "config": cfg,
        "outputs": artifacts.iter().map(|a| a.file.as_str()).collect::<Vec<_>>(),
        "wall_seconds": wall,
    });
    let p = dir.join("manifest.json");
    std::fs::write(&p, serde_json::to_string_pretty(&manifest).expect("json") + "\n").map_err(|e| io(&p, e))
}

fn unit(v: &[f64]) -> Result<Vec<f64>, CliError> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0) {
        return Err(CliError::Config("direction must be nonzero".into()));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

fn sim_params(cfg: &Config) -> Result<SimParams, CliError> {
    SimParams::new(cfg.sim.dt, cfg.sim.cap).map_err(|e| CliError::Config(format!("sim: {e}")))
}

/// Artifacts of a command, plus a deferred failure raised after they are written.
fn dispatch(command: Command, cfg: &Config, g: &PeriodicField, exec: Exec) -> Result<(Vec<Artifact>, Option<CliError>), CliError> {
    if command == Command::VerifyAll {
        let reports = verify::run_all(&VerifyOptions { seed: cfg.seed, exec }, |r| eprintln!("{r}"));
        let failed = reports.iter().filter(|r| !r.passed).count();
        let json = serde_json::to_string_pretty(&reports).expect("json") + "\n";
        let failure = (failed > 0).then(|| CliError::Verify(failed, reports.len()));
        return Ok((vec![Artifact::new("verify.json", json)], failure));
    }
    Ok((run_command(command, cfg, g, exec)?, None))
}

fn run_command(command: Command, cfg: &Config, g: &PeriodicField, exec: Exec) -> Result<Vec<Artifact>, CliError> {
    let seed = cfg.seed;
    match command {
        Command::Eigen => {
            let e = unit(&cfg.eigen.direction)?;
            let mut opts = SolverOptions::for_dim(g.dim());
            if let Some(n) = cfg.eigen.truncation {
                opts = opts.with_truncation(n);
            }
            let mut csv = String::from("lambda,gamma\n");
            for &l in &cfg.eigen.lambda {
                let gamma = spectral::principal_eigenvalue(g.polynomial(), &e, l, &opts)?;
                writeln!(csv, "{l},{gamma}").unwrap();
            }
            Ok(vec![Artifact::new("eigen.csv", csv)])
        }
        Command::Speed => {
            let p = speed::speed_profile(g, cfg.speed.directions, exec)?;
            Ok(vec![Artifact::new("speed.csv", p.to_csv())])
        }
        Command::Rate => {
            let e = unit(&cfg.rate.direction)?;
            let entry = speed::find_lambda_e(g, &e)?;
            let grid = cfg.rate.zeta.clone().unwrap_or_else(|| speed::default_zeta_grid(entry.c_star));
            let rf = speed::rate_function(g, &entry, &grid, exec)?;
            Ok(vec![Artifact::new("rate.csv", rf.to_csv())])
        }
        Command::Wulff => {
            let w = wulff::build_wulff(&speed::speed_profile(g, cfg.speed.directions, exec)?)?;
            Ok(vec![Artifact::new("wulff.json", serde_json::to_string_pretty(&w.to_json()).expect("json") + "\n")])
        }
        Command::Simulate => {
            let s = &cfg.simulate;
            let runs = bbm::simulate_replicas(g, &s.x0, &s.times, sim_params(cfg)?, s.reps, seed, exec)?;
            let mut csv = String::from("replica,t,count,thinned,max_x1\n");
            for (r, snaps) in runs.iter().enumerate() {
                for snap in snaps {
                    let e1: Vec<f64> = (0..g.dim()).map(|i| f64::from(u8::from(i == 0))).collect();
                    writeln!(csv, "{r},{},{},{},{}", snap.time, snap.count(), snap.thinned, snap.max_projection(&e1)).unwrap();
                }
            }
            Ok(vec![Artifact::new("simulate.csv", csv)])
        }
        Command::Halfspace => {
            let h = &cfg.halfspace;
            let entry = speed::find_lambda_e(g, &unit(&h.direction)?)?;
            let x0 = vec![0.0; g.dim()];
            let f = match h.side {
                Side::Upper => bbm::halfspace_upper_stat,
                Side::Lower => bbm::halfspace_lower_stat,
            };
            let table = f(g, &entry, &x0, h.epsilon, &h.t_list, h.reps, sim_params(cfg)?, seed, exec)?;
            Ok(vec![Artifact::new("halfspace.csv", table.to_csv())])
        }
        Command::Shape => {
            let s = &cfg.shape;
            let w = wulff::build_wulff(&speed::speed_profile(g, s.directions, exec)?)?;
            let x0 = vec![0.0; g.dim()];
            let table = bbm::shape_error(g, &w, &x0, &s.t_list, s.epsilon, s.reps, sim_params(cfg)?, seed, exec)?;
            Ok(vec![Artifact::new("shape.csv", table.to_csv())])
        }
        Command::Tilted => {
            let t = &cfg.tilted;
            let e = unit(&t.direction)?;
            let entry = speed::find_lambda_e(g, &e)?;
            let eig = spectral::principal_eigen(g, &e, entry.lambda_e, SolverOptions::for_dim(g.dim()).truncation)?;
            let drift = tilted::drift_field(&eig);
            let x0 = vec![0.0; g.dim()];
            let paths = tilted::simulate_tilted(&drift, &x0, &[t.t], t.dt, t.reps, seed, exec)?;
            let y = tilted::y_hat_estimate(&paths, 0, &x0, &e);
            let disp: Vec<f64> = paths.iter().map(|p| t.t * p.y_hat(0, &x0, &e)).collect();
            let eval = RateEvaluator::new(g, entry.clone());
            let mut csv = String::from("quantity,eta,estimate,se,reference\n");
            writeln!(csv, "y_hat,,{},{},{}", y.mean, y.se, entry.c_star).unwrap();
            for &eta in &t.eta {
                let c = tilted::cumulant_from_displacements(&disp, eta, t.t);
                writeln!(csv, "cumulant,{eta},{},{},{}", c.value, c.se, eval.cumulant(eta)?).unwrap();
            }
            Ok(vec![Artifact::new("tilted.csv", csv)])
        }
        Command::Fkpp => {
            let f = &cfg.fkpp;
            let (init, sign) = match f.orientation {
                1 => (InitialCondition::Heaviside, 1.0),
                -1 => (InitialCondition::Mirrored, -1.0),
                o => return Err(CliError::Config(format!("fkpp.orientation must be 1 or -1, got {o}"))),
            };
            if g.dim() != 1 {
                return Err(CliError::Config("fkpp needs a one-dimensional field".into()));
            }
            let entry = speed::find_lambda_e(g, &[sign])?;
            let half_width = f.half_width.unwrap_or(entry.c_star * f.t_end + 10.0);
            let run = fkpp::solve_fkpp(g, init, FkppParams::stable(half_width, f.dx, f.t_end, 0.9))?;
            let front = fkpp::front_speed_estimate(&run)?;
            let summary = json!({ "front_speed": front.speed, "c_star": entry.c_star, "r_squared": front.fit.r_squared });
            Ok(vec![
                Artifact::new("fkpp_frames.csv", run.to_csv()),
                Artifact::new("fkpp_front.json", serde_json::to_string_pretty(&summary).expect("json") + "\n"),
            ])
        }
        Command::Mckean => {
            let m = &cfg.mckean;
            let f = match m.function {
                McKeanKind::Indicator => McKeanFunction::Indicator,
                McKeanKind::Sigmoid { scale } => McKeanFunction::Sigmoid { scale },
                McKeanKind::Constant { value } => McKeanFunction::Constant(value),
            };
            let rows = fkpp::mckean_check(g, f, m.t, &m.probes, m.reps, sim_params(cfg)?, m.pde_dx, seed, exec)?;
            let mut csv = String::from("x,pde_q,mc_q,mc_se,z\n");
            for r in rows {
                writeln!(csv, "{},{},{},{},{}", r.x, r.pde_q, r.mc_q.mean, r.mc_q.se, r.z).unwrap();
            }
            Ok(vec![Artifact::new("mckean.csv", csv)])
        }
        Command::VerifyAll => unreachable!("handled by dispatch"),
    }
}
