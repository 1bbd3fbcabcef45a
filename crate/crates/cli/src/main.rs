use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use disindy::dynamics::{generate_trajectory, read_dataset, write_dataset, Dataset, Manifest};
use disindy::expr::ParseContext;
use disindy::harness::{
    discover_from_dataset, error_norm, long_term_mse, render_report, run_experiment, success,
    ExperimentConfig,
};
use disindy::invariants::{catalog_set, verify_set, VerifyOptions};
use disindy::regress::SparseModel;
use disindy::system::SystemId;

type BoxError = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(name = "disindy", version, about = "Symmetry-informed sparse equation discovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the training trajectories of run 0 of an experiment config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Discover an equation from a stored dataset.
    Discover {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every configured run end to end and write the report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a catalog invariant set; exits 0 on PASS.
    Verify {
        #[arg(long)]
        system: SystemId,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Score stored models against a dataset by long-term prediction.
    Evaluate {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    /// Recompute summary table and plot of a report directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, BoxError> {
    match cmd {
        Command::Generate { config, out } => generate(&config, &out)?,
        Command::Discover { config, data, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let ds = read_dataset(&data)?;
            let report = discover_from_dataset(&cfg, &ds)?;
            report.write(&out)?;
            match report.runs[0].model.as_ref() {
                Some(m) => println!("{} = {}", m.target, m.rhs()),
                None => println!("no model: {}", report.runs[0].failure.as_deref().unwrap_or("")),
            }
            println!("{}", report.summary_line());
        }
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = out
                .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
                .ok_or("no --out and no output_dir in the config")?;
            let report = run_experiment(&cfg)?;
            report.write(&out)?;
            println!("{}", report.summary_line());
        }
        Command::Verify { system, samples, seed } => {
            let set = catalog_set(system)?;
            let report = verify_set(&set, samples, seed, &VerifyOptions::default());
            println!("{}", report.summary());
            if !report.pass {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Evaluate { models, data, out, steps } => evaluate(&models, &data, &out, steps)?,
        Command::Report { input } => print!("{}", render_report(&input)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn generate(config: &Path, out: &Path) -> Result<(), BoxError> {
    let cfg = ExperimentConfig::load(config)?;
    let solver = cfg.solver_config();
    let (ic_seeds, noise_seeds) = cfg.train_seeds(0);
    let trajectories = ic_seeds
        .iter()
        .zip(&noise_seeds)
        .map(|(&ic, &ns)| generate_trajectory(cfg.system, &solver, ic, cfg.noise_sigma, ns))
        .collect::<Result<Vec<_>, _>>()?;
    let ds = Dataset {
        manifest: Manifest {
            system: cfg.system,
            solver,
            noise_sigma: cfg.noise_sigma,
            ic_seeds,
            noise_seeds,
        },
        trajectories,
    };
    write_dataset(out, &ds)?;
    println!("wrote {} trajectories to {}", ds.trajectories.len(), out.display());
    Ok(())
}

fn evaluate(models: &Path, data: &Path, out: &Path, steps: usize) -> Result<(), BoxError> {
    let ds = read_dataset(data)?;
    let system = ds.manifest.system;
    let ctx = ParseContext::from(&system.jet_space());
    let constants = disindy::invariants::constants_binding(&ds.manifest.solver.params);
    let truth = [models.join("truth.toml"), models.join("../truth.toml")]
        .into_iter()
        .find(|p| p.exists())
        .map(|p| SparseModel::load(&p, &ctx))
        .transpose()?;

    let mut paths: Vec<PathBuf> = std::fs::read_dir(models)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml") && !p.ends_with("truth.toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(format!("no model files in {}", models.display()).into());
    }

    std::fs::create_dir_all(out)?;
    let mut table = String::from("model,active_terms,success,error_norm,blown_up,final_mse\n");
    let mut curves = Vec::new();
    for p in &paths {
        let m = SparseModel::load(p, &ctx)?;
        let lt = long_term_mse(&m, &ds.trajectories, steps, &constants);
        let name = p.file_stem().unwrap_or_default().to_string_lossy().to_string();
        let (ok, err) = match &truth {
            Some(t) if t.features == m.features => (success(&m, t).to_string(), format!("{:e}", error_norm(&m, t))),
            _ => ("N/A".into(), "N/A".into()),
        };
        let last = lt.mse.last().map_or("N/A".into(), |v| format!("{v:e}"));
        table.push_str(&format!("{name},{},{ok},{err},{},{last}\n", m.active(), lt.blown_up));
        println!("{name}: {} = {}  (final MSE {last})", m.target, m.rhs());
        curves.push((name, lt.mse));
    }
    std::fs::write(out.join("evaluation.csv"), table)?;

    let mut lt = String::from("step");
    for (n, _) in &curves {
        lt.push(',');
        lt.push_str(n);
    }
    lt.push('\n');
    for k in 0..=steps {
        lt.push_str(&k.to_string());
        for (_, c) in &curves {
            lt.push(',');
            lt.push_str(&c.get(k).map_or("N/A".into(), |v| format!("{v:e}")));
        }
        lt.push('\n');
    }
    std::fs::write(out.join("long_term.csv"), lt)?;
    Ok(())
}
