mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use wqed::gates::{
    memory_retrieve_with_map, memory_store_with_map, remote_entangle, state_fidelity,
};
use wqed::pulse::{WavePacket, C64};
use wqed::scattering::{
    closed_form_f_half_exponential, narrowband_f, scatter, tr_identities, ScatterMethod,
};
use wqed::sweep::{
    f_vs_gamma_preset, feasibility_table, fmt_g12, run_sweep_to, Cell, OutputFormat, Table,
};

use config::{RunConfig, SpecFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] wqed::error::Error),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(wqed::error::Error::Io(_)) => 1,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "wqed", version, about = "Waveguide-QED pulse scattering and heralded gate simulator")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Flat TOML file with run keys; flags override it
    #[arg(long)]
    config: Option<PathBuf>,

    /// Print the merged configuration as TOML and exit
    #[arg(long)]
    dump_config: bool,

    /// Accepted for scripts; every run is deterministic
    #[arg(long)]
    seedless: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scatter one photon off a single emitter
    #[command(allow_negative_numbers = true)]
    Scatter {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunConfig,
    },
    /// Evaluate a heralded gate
    #[command(allow_negative_numbers = true)]
    Gate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunConfig,
    },
    /// Store a photonic qubit in the emitter and read it back out
    #[command(allow_negative_numbers = true)]
    Memory {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunConfig,
    },
    /// Entangle two distant emitters with one photon
    #[command(allow_negative_numbers = true)]
    Remote {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunConfig,
    },
    /// Run a parameter sweep from a preset or a TOML spec file
    Sweep {
        /// feasibility or f-vs-gamma
        #[arg(long, conflicts_with = "spec")]
        preset: Option<String>,
        /// TOML sweep spec
        #[arg(long)]
        spec: Option<PathBuf>,
        /// csv or json [default: csv]
        #[arg(long)]
        format: Option<String>,
        /// Output path [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Accepted for scripts; every run is deterministic
        #[arg(long)]
        seedless: bool,
    },
}

fn merged(common: &Common, run: RunConfig) -> Result<RunConfig, CliError> {
    let base = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    Ok(base.overlaid(run))
}

fn open_out(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(table: &Table, cfg: &RunConfig) -> Result<(), CliError> {
    let format = cfg.format()?;
    let out = open_out(cfg.out.as_ref())?;
    table.write(out, format)?;
    Ok(())
}

fn single_row(pairs: Vec<(&str, Cell)>) -> Table {
    let (columns, row): (Vec<String>, Vec<Cell>) =
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).unzip();
    Table {
        columns,
        rows: vec![row],
    }
}

fn num(x: f64) -> Cell {
    Cell::Num(x)
}

fn dump_envelopes(path: &PathBuf, packets: &[(&str, &WavePacket)]) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut header = vec!["tau".to_string()];
    for (name, _) in packets {
        header.push(format!("{name}_re"));
        header.push(format!("{name}_im"));
    }
    writeln!(out, "{}", header.join(","))?;
    let grid = packets[0].1.grid();
    for k in 0..grid.n_samples() {
        let mut line = vec![fmt_g12(grid.t(k))];
        for (_, p) in packets {
            let a = p.amplitudes()[k];
            line.push(fmt_g12(a.re));
            line.push(fmt_g12(a.im));
        }
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_scatter(cfg: &RunConfig) -> Result<(), CliError> {
    let block = cfg.block_for(cfg.emitter()?)?;
    let emitter = block.effective_emitter();
    let psi = cfg.packet(&[block.emitter], 1)?;
    let r = scatter(&psi, &emitter, block.method)?;
    let oracle = match (block.method, cfg.shape()?) {
        (ScatterMethod::NarrowbandLimit, _) => Some(narrowband_f(&emitter)),
        (_, Some(wqed::pulse::PulseShape::HalfExponential { rate, .. })) => {
            Some(closed_form_f_half_exponential(rate, &emitter))
        }
        _ => None,
    };
    let (t_id, r_id) = tr_identities(r.f, &emitter);
    let nan = C64::new(f64::NAN, f64::NAN);
    let f_closed = oracle.unwrap_or(nan);
    let table = single_row(vec![
        ("f_re", num(r.f.re)),
        ("f_im", num(r.f.im)),
        ("T", num(r.transmittance)),
        ("R", num(r.reflectance)),
        ("kappa", num(r.loss)),
        ("f_closed_re", num(f_closed.re)),
        ("f_closed_im", num(f_closed.im)),
        ("f_oracle_delta", num((r.f - f_closed).norm())),
        ("T_identity_delta", num(r.transmittance - t_id)),
        ("R_identity_delta", num(r.reflectance - r_id)),
        ("method", Cell::Text(method_name(block.method).into())),
    ]);
    if let Some(path) = &cfg.dump_envelopes {
        dump_envelopes(
            path,
            &[("incident", &psi), ("reflected", &r.reflected), ("transmitted", &r.transmitted)],
        )?;
        info!("envelopes written to {}", path.display());
    }
    emit(&table, cfg)
}

fn method_name(m: ScatterMethod) -> &'static str {
    match m {
        ScatterMethod::EtdRecursive => "etd",
        ScatterMethod::Trapezoid => "trapezoid",
        ScatterMethod::NarrowbandLimit => "analytic",
    }
}

fn cmd_gate(cfg: &RunConfig) -> Result<(), CliError> {
    let gate = cfg.gate_for(cfg.emitter()?)?;
    let psi = cfg.packet(&[gate.block.emitter], 2)?;
    let (map, r) = gate.evaluate(&psi)?;
    let table = single_row(vec![
        ("process_fidelity", num(r.process_fidelity)),
        ("average_fidelity", num(r.average_fidelity)),
        ("p_success_avg", num(r.p_success_avg)),
        ("p_success_min", num(r.p_success_min)),
        ("p_success_max", num(map.p_success_max / psi.norm_sqr())),
        ("failure_rate", num(r.failure_rate)),
        ("loss_rate", num(r.loss_rate)),
        ("entangling_power_witness", num(r.entangling_power_witness)),
        ("kraus_rank", num(r.kraus_rank as f64)),
        ("herald", Cell::Text(map.herald_spec.clone())),
    ]);
    emit(&table, cfg)
}

fn cmd_memory(cfg: &RunConfig) -> Result<(), CliError> {
    let gate = cfg.gate_for(cfg.emitter()?)?;
    let psi = cfg.packet(&[gate.block.emitter], 2)?;
    let phi = cfg.photon_state()?;
    let basis = cfg.basis()?;
    let (map, _) = gate.evaluate(&psi)?;
    let target = gate.target();
    let norm = psi.norm_sqr();
    let stored = memory_store_with_map(phi, &map, &target, basis, norm)?;
    let read = memory_retrieve_with_map(&stored.state, &map, &target, basis, norm)?;
    let table = single_row(vec![
        ("store_fidelity", num(state_fidelity(&stored.state, &phi))),
        ("store_p_success", num(stored.p_success)),
        ("store_outcome_0", num(stored.outcome_probabilities[0])),
        ("store_outcome_1", num(stored.outcome_probabilities[1])),
        ("retrieve_fidelity", num(state_fidelity(&read.state, &phi))),
        ("retrieve_p_success", num(read.p_success)),
        ("retrieve_outcome_0", num(read.outcome_probabilities[0])),
        ("retrieve_outcome_1", num(read.outcome_probabilities[1])),
    ]);
    emit(&table, cfg)
}

fn cmd_remote(cfg: &RunConfig) -> Result<(), CliError> {
    let a = cfg.gate_for(cfg.emitter()?)?;
    let b = cfg.gate_for(cfg.emitter_with(cfg.purcell_b.or(cfg.purcell))?)?;
    let psi = cfg.packet(&[a.block.emitter, b.block.emitter], 4)?;
    let r = remote_entangle(&a, &b, &psi, cfg.basis()?)?;
    let table = single_row(vec![
        ("concurrence", num(r.concurrence)),
        ("p_success", num(r.p_success)),
        ("site_a_p_success", num(r.site_p_success[0])),
        ("site_b_p_success", num(r.site_p_success[1])),
    ]);
    emit(&table, cfg)
}

fn cmd_sweep(
    preset: Option<&str>,
    spec: Option<&PathBuf>,
    format: Option<&str>,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    let format: OutputFormat = format.unwrap_or("csv").parse()?;
    match (preset, spec) {
        (Some("feasibility"), None) => {
            let table = feasibility_table()?;
            table.write(open_out(out)?, format)?;
        }
        (Some("f-vs-gamma"), None) => {
            run_sweep_to(&f_vs_gamma_preset(), open_out(out)?, format)?;
        }
        (Some(other), _) => {
            return Err(CliError::Config(format!(
                "unknown preset `{other}`; expected feasibility or f-vs-gamma"
            )))
        }
        (None, Some(path)) => {
            let spec = SpecFile::load(path)?;
            run_sweep_to(&spec, open_out(out)?, format)?;
        }
        (None, None) => {
            return Err(CliError::Config("sweep needs --preset or --spec".into()));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, run, which) = match cli.command {
        Command::Sweep {
            preset,
            spec,
            format,
            out,
            seedless: _,
        } => return cmd_sweep(preset.as_deref(), spec.as_ref(), format.as_deref(), out.as_ref()),
        Command::Scatter { common, run } => (common, run, cmd_scatter as fn(&RunConfig) -> _),
        Command::Gate { common, run } => (common, run, cmd_gate as fn(&RunConfig) -> _),
        Command::Memory { common, run } => (common, run, cmd_memory as fn(&RunConfig) -> _),
        Command::Remote { common, run } => (common, run, cmd_remote as fn(&RunConfig) -> _),
    };
    let cfg = merged(&common, run)?;
    if common.dump_config {
        let text = cfg.to_toml()?;
        let mut out = open_out(cfg.out.as_ref())?;
        out.write_all(text.as_bytes())?;
        out.flush()?;
        return Ok(());
    }
    which(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
