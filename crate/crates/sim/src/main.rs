use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybrid_polar::trial::run_trial;
use hybrid_polar::{CodeConfig, CodeParams, ConstructionMethod, Estimator, Scheme, TrialOptions};
use hybrid_polar_sim::{
    default_workers, run_sweep_with, snr_grid, ResultsDocument, RunManifest, SimError, SweepSpec,
    MIN_ERRORS_ADVISORY, WORKERS_ENV,
};

#[derive(Parser)]
#[command(name = "hpolar", version, about = "Hybrid polar codes over Rayleigh block fading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code configuration and write it as JSON.
    Construct(ConstructArgs),
    /// Send one frame end to end and report what happened.
    Roundtrip(RoundtripArgs),
    /// Sweep SNR and write FER/BER statistics as CSV.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Hybrid,
    #[value(alias = "ns-perfect-csi")]
    NsPerfect,
    NsCdi,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Hybrid => Scheme::Hybrid,
            SchemeArg::NsPerfect => Scheme::NsPerfectCsi,
            SchemeArg::NsCdi => Scheme::NsCdi,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Ls,
    Lmmse,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Ls => Estimator::LeastSquares,
            EstimatorArg::Lmmse => Estimator::Lmmse,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructionArg {
    Ga,
    Bhattacharyya,
}

#[derive(Args)]
struct ConstructArgs {
    /// Start from this config instead of the built-in reference code.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tc: Option<usize>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    pilots_per_block: Option<usize>,
    #[arg(long)]
    me: Option<usize>,
    #[arg(long)]
    md: Option<usize>,
    #[arg(long)]
    list_e: Option<usize>,
    #[arg(long)]
    list_d: Option<usize>,
    /// Design SNR in dB.
    #[arg(long)]
    design_snr: Option<f64>,
    #[arg(long)]
    construction: Option<ConstructionArg>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ListOverrides {
    /// Phase-1 list size, overriding the config.
    #[arg(long)]
    list_e: Option<usize>,
    /// Phase-2 (and baseline) list size, overriding the config.
    #[arg(long)]
    list_d: Option<usize>,
}

#[derive(Args)]
struct RoundtripArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "hybrid")]
    scheme: SchemeArg,
    /// SNR in dB.
    #[arg(long, default_value_t = 4.0)]
    snr: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Frame index within the seed's streams.
    #[arg(long, default_value_t = 0)]
    frame: u64,
    /// Draw the noise but do not add it.
    #[arg(long)]
    noiseless: bool,
    #[arg(long, value_enum, default_value = "ls")]
    estimator: EstimatorArg,
    #[command(flatten)]
    lists: ListOverrides,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 0.0)]
    snr_start: f64,
    #[arg(long, default_value_t = 8.0)]
    snr_stop: f64,
    #[arg(long, default_value_t = 1.0)]
    snr_step: f64,
    /// Frames per SNR point.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    frames: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "ls")]
    estimator: EstimatorArg,
    /// Also decode every hybrid frame with oracle pilots.
    #[arg(long)]
    genie_pilots: bool,
    /// Replace every fading gain by this constant.
    #[arg(long)]
    fixed_gain: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write a JSON document with the manifest and the rows.
    #[arg(long)]
    json: bool,
    /// Worker threads.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[command(flatten)]
    lists: ListOverrides,
}

fn read_config(path: &Path) -> Result<CodeConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn apply_lists(cfg: CodeConfig, lists: &ListOverrides, source: &Path) -> Result<CodeConfig, String> {
    if lists.list_e.is_none() && lists.list_d.is_none() {
        return Ok(cfg);
    }
    let p = cfg.params();
    let (le, ld) = (lists.list_e.unwrap_or(p.list_pilot), lists.list_d.unwrap_or(p.list_message));
    eprintln!(
        "note: command-line list sizes override {} (L_e {} -> {le}, L_d {} -> {ld})",
        source.display(),
        p.list_pilot,
        p.list_message
    );
    cfg.with_lists(le, ld).map_err(|e| e.to_string())
}

fn construct(args: ConstructArgs) -> Result<(), String> {
    let mut params = match &args.config {
        Some(path) => *read_config(path)?.params(),
        None => CodeParams::reference_t64(),
    };
    let mut overridden = Vec::new();
    let mut set = |name: &'static str, slot: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *slot = v;
            overridden.push(name);
        }
    };
    set("N", &mut params.n, args.n);
    set("K", &mut params.k, args.k);
    set("T_c", &mut params.coherence_time, args.tc);
    set("B", &mut params.blocks, args.blocks);
    set("p", &mut params.pilots_per_block, args.pilots_per_block);
    set("m_e", &mut params.crc_pilot, args.me);
    set("m_d", &mut params.crc_message, args.md);
    set("L_e", &mut params.list_pilot, args.list_e);
    set("L_d", &mut params.list_message, args.list_d);
    if let Some(d) = args.design_snr {
        params.design_snr_db = d;
        overridden.push("design_snr_db");
    }
    if let Some(c) = args.construction {
        params.construction = match c {
            ConstructionArg::Ga => ConstructionMethod::GaussianApproximation,
            ConstructionArg::Bhattacharyya => ConstructionMethod::Bhattacharyya,
        };
        overridden.push("construction");
    }
    if params.pilots_per_block == 0 && args.me.is_none() && params.crc_pilot > 0 {
        eprintln!("note: no pilots; the {}-bit pilot CRC joins the message CRC", params.crc_pilot);
        params = params.baseline();
    }
    if let Some(path) = &args.config {
        if !overridden.is_empty() {
            eprintln!(
                "note: command-line flags override {} from {}; the partition is rebuilt",
                overridden.join(", "),
                path.display()
            );
        }
    }
    let cfg = CodeConfig::build(params).map_err(|e| format!("invalid configuration: {e}"))?;
    let json = serde_json::to_string_pretty(&cfg).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => fs::write(path, json + "\n").map_err(|e| format!("{}: {e}", path.display()))?,
        None => println!("{json}"),
    }
    let sizes = format!(
        "|F| = {}, |I_ns| = {}, |I_s| = {}",
        cfg.frozen().len(),
        cfg.non_systematic().len(),
        cfg.systematic().len()
    );
    if args.out.is_some() {
        println!("{sizes}");
    } else {
        eprintln!("{sizes}");
    }
    Ok(())
}

fn bits(b: &[u8]) -> String {
    b.iter().map(|&x| char::from(b'0' + x)).collect()
}

fn floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

fn roundtrip(args: RoundtripArgs) -> Result<(), String> {
    let cfg = apply_lists(read_config(&args.config)?, &args.lists, &args.config)?;
    let scheme = Scheme::from(args.scheme);
    let opts = TrialOptions {
        estimator: args.estimator.into(),
        noiseless: args.noiseless,
        ..TrialOptions::new(args.snr, args.seed)
    };
    let o = run_trial(&cfg, scheme, opts, args.frame).map_err(|e| e.to_string())?;
    println!("scheme: {scheme}");
    println!("snr_db: {}", args.snr);
    println!("seed: {} frame: {}", args.seed, args.frame);
    println!("message: {}", bits(&o.s));
    println!("decoded: {}", bits(&o.s_hat));
    println!("status: {}", serde_json::to_value(o.status).map_err(|e| e.to_string())?.as_str().unwrap_or("?"));
    println!("bit_errors: {}", o.bit_errors);
    if scheme == Scheme::Hybrid {
        println!("pilots: {}", if o.pilot_error { "wrong" } else { "correct" });
        println!("h_hat: {}", floats(&o.h_hat));
    }
    println!("h_true: {}", floats(&o.gains));
    Ok(())
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn simulate(args: SimulateArgs) -> Result<(), String> {
    let cfg = apply_lists(read_config(&args.config)?, &args.lists, &args.config)?;
    let scheme = Scheme::from(args.scheme);
    let grid = snr_grid(args.snr_start, args.snr_stop, args.snr_step).map_err(|e| e.to_string())?;
    let spec = SweepSpec {
        estimator: args.estimator.into(),
        genie_pilots: args.genie_pilots,
        fixed_gain: args.fixed_gain,
        ..SweepSpec::new(scheme, grid, args.frames, args.seed)
    };
    let workers = args.workers.filter(|&w| w > 0).unwrap_or_else(default_workers);
    let stats = run_sweep_with(&spec, &cfg, workers, |p| {
        let s = &p.stats;
        eprintln!(
            "{} {:>6} dB: {}/{} frame errors, fer {:.3e}",
            p.scheme,
            p.snr_db,
            s.frame_errors,
            s.frames,
            s.fer()
        );
        if s.frame_errors < MIN_ERRORS_ADVISORY {
            eprintln!(
                "  advisory: fewer than {MIN_ERRORS_ADVISORY} frame errors; the FER estimate is coarse"
            );
        }
        if let Some(b) = p.bound() {
            eprintln!(
                "  bound: fer {:.3e} vs {:.3e} + slack {:.3e} -> {}",
                b.fer,
                b.bound,
                b.slack,
                if b.pass { "pass" } else { "FAIL" }
            );
        }
    })
    .map_err(|e: SimError| e.to_string())?;

    let io = |p: &Path, e: std::io::Error| format!("{}: {e}", p.display());
    let csv = stats.to_csv_string().map_err(|e| e.to_string())?;
    fs::write(&args.out, csv).map_err(|e| io(&args.out, e))?;
    let manifest = RunManifest::new(cfg, spec);
    let mpath = sibling(&args.out, ".manifest.json");
    let mjson = serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())?;
    fs::write(&mpath, mjson + "\n").map_err(|e| io(&mpath, e))?;
    if args.json {
        let jpath = sibling(&args.out, ".json");
        let doc = ResultsDocument {
            manifest,
            rows: stats.rows(),
        };
        let text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
        fs::write(&jpath, text + "\n").map_err(|e| io(&jpath, e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Construct(a) => construct(a),
        Command::Roundtrip(a) => roundtrip(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
