use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use csebt2_core::harness::{
    self, reference_on_grid, run_convergence, run_stability, write_convergence_csv, ExperimentPreset,
    ReferenceKind, StabilityOptions,
};
use csebt2_core::oracles::l1_error;
use csebt2_core::stability::RegionAxes;
use csebt2_core::{BalanceLaw, Error};

#[derive(Parser)]
#[command(name = "csebt2", version, about = "Semi-implicit central schemes for stiff relaxation systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write the final solution as CSV.
    Run(Setup),
    /// Run a grid-refinement study and write errors and orders as CSV.
    Convergence(Setup),
    /// Export stability-region masks.
    Stability(StabilityArgs),
    /// List the experiment presets, or print one as a config file.
    Presets {
        /// Print this preset in config-file form.
        #[arg(long)]
        show: Option<String>,
    },
}

/// Experiment selection. The config file (or preset) is read first; every
/// flag given on the command line overrides it.
#[derive(Args, Debug, Default)]
struct Setup {
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// `key=value` config file; it may name its own `preset=`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    ic: Option<String>,
    #[arg(long = "N")]
    n: Option<usize>,
    /// CFL number; fractions such as `1/3` are accepted.
    #[arg(long)]
    cfl: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long = "t-final")]
    t_final: Option<String>,
    /// periodic | transmissive
    #[arg(long)]
    bc: Option<String>,
    /// alternate | every-step
    #[arg(long)]
    projection: Option<String>,
    /// exact | imex:NFINE | none
    #[arg(long)]
    reference: Option<String>,
    /// Comma-separated grid sizes (convergence).
    #[arg(long)]
    grids: Option<String>,
    /// Comma-separated relaxation parameters (convergence).
    #[arg(long = "eps-list")]
    eps_list: Option<String>,
    /// Extra `key=value` overrides, e.g. `--set a=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StabilityArgs {
    /// Output directory.
    #[arg(long, default_value = "stability")]
    out: PathBuf,
    #[arg(long, default_value_t = 61)]
    n_re: usize,
    #[arg(long, default_value_t = 81)]
    n_im: usize,
    #[arg(long, default_value_t = csebt2_core::stability::DEFAULT_Y_MAX)]
    y_max: f64,
    #[arg(long, default_value_t = csebt2_core::stability::DEFAULT_N_Y)]
    n_y: usize,
    /// Also export the region of the IMEX reference scheme.
    #[arg(long)]
    imex: bool,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 4,
        e if e.is_solver_failure() => 3,
        _ => 2,
    }
}

impl Setup {
    fn resolve(&self) -> csebt2_core::Result<ExperimentPreset> {
        let mut p = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentPreset::from_config_file(path)?,
            (None, Some(id)) => harness::preset(id)?,
            (None, None) => ExperimentPreset::from_config_str("")?,
        };
        let flags = [
            ("model", self.model.clone()),
            ("ic", self.ic.clone()),
            ("N", self.n.map(|n| n.to_string())),
            ("cfl", self.cfl.clone()),
            ("eps", self.eps.clone()),
            ("t_final", self.t_final.clone()),
            ("bc", self.bc.clone()),
            ("projection", self.projection.clone()),
            ("reference", self.reference.clone()),
            ("grids", self.grids.clone()),
            ("eps_list", self.eps_list.clone()),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                p.apply_setting(key, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            p.apply_setting(k, v)?;
        }
        if self.eps.is_some() && self.eps_list.is_none() {
            p.eps_list = vec![p.eps];
        }
        p.scheme_config(p.eps)?;
        Ok(p)
    }
}

fn cmd_run(setup: &Setup) -> csebt2_core::Result<()> {
    let p = setup.resolve()?;
    let out = setup.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}_N{}.csv", p.id, p.n_cells)));
    let result = harness::run_to_csv(&p, &out)?;
    let s = &result.summary;
    println!(
        "{} N={} eps={} cfl={}: {} steps (dt {:.3e}..{:.3e}, {} halved), max Newton iterations {}, wall {:.3?}",
        p.id,
        p.n_cells,
        p.eps,
        p.cfl,
        s.steps,
        s.dt_min,
        s.dt_max,
        s.halved_steps,
        s.newton_iters_max,
        result.wall
    );
    if p.reference != ReferenceKind::None {
        let start = Instant::now();
        let reference = reference_on_grid(&p, p.n_cells, p.eps, None)?;
        let err = l1_error(&s.field, &reference)?;
        let names = p.model.component_names();
        let parts: Vec<String> = names.iter().zip(&err).map(|(n, e)| format!("{n} {e:.6e}")).collect();
        println!("L1 error vs {} reference: {} ({:.3?})", p.reference, parts.join(", "), start.elapsed());
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_convergence(setup: &Setup) -> csebt2_core::Result<()> {
    let p = setup.resolve()?;
    if p.reference == ReferenceKind::None {
        return Err(Error::InvalidParameter(format!("preset {} has no reference; pass --reference", p.id)));
    }
    let eps_list = if p.eps_list.is_empty() { vec![p.eps] } else { p.eps_list.clone() };
    let start = Instant::now();
    let tables = run_convergence(&p, &p.grids, &eps_list)?;
    for t in &tables {
        println!("eps = {}", t.eps);
        let mut header = format!("{:>6}", "N");
        for c in &t.components {
            header.push_str(&format!(" {:>13} {:>7}", format!("err_{c}"), "order"));
        }
        println!("{header}");
        for (g, n) in t.grids.iter().enumerate() {
            let mut row = format!("{n:>6}");
            for k in 0..t.components.len() {
                let o = t.orders[g][k];
                let o = if o.is_nan() { "-".to_string() } else { format!("{o:.4}") };
                row.push_str(&format!(" {:>13.6e} {:>7}", t.errors[g][k], o));
            }
            println!("{row}");
        }
    }
    let out = setup.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}_convergence.csv", p.id)));
    let mut meta = p.csv_meta(p.n_cells, p.eps, "cs-ebt2");
    meta.retain(|(k, _)| k != "N" && k != "eps");
    meta.push(("reference".into(), p.reference.to_string()));
    write_convergence_csv(&out, &tables, &meta)?;
    println!("wall {:.3?}; wrote {}", start.elapsed(), out.display());
    Ok(())
}

fn cmd_stability(args: &StabilityArgs) -> csebt2_core::Result<()> {
    let options = StabilityOptions {
        axes: RegionAxes {
            n_re: args.n_re,
            n_im: args.n_im,
            ..RegionAxes::default()
        },
        y_max: args.y_max,
        n_y: args.n_y,
        include_imex: args.imex,
    };
    let start = Instant::now();
    for path in run_stability(&options, &args.out)? {
        println!("wrote {}", path.display());
    }
    println!("wall {:.3?}", start.elapsed());
    Ok(())
}

fn cmd_presets(show: Option<&str>) -> csebt2_core::Result<()> {
    match show {
        Some(id) => print!("{}", harness::preset(id)?.to_config_string()),
        None => {
            for p in harness::all_presets() {
                println!("{:<26} {:<16} N={:<5} T={:<5} cfl={:.4} ic={}", p.id, p.model.id(), p.n_cells, p.t_final, p.cfl, p.ic);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(setup) => cmd_run(setup),
        Command::Convergence(setup) => cmd_convergence(setup),
        Command::Stability(args) => cmd_stability(args),
        Command::Presets { show } => cmd_presets(show.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
