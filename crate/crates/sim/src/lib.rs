//! Parallel Monte Carlo sweeps over SNR and the result files written by the
//! `hpolar` command line.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use hybrid_polar::stats::{fer_bound_check, BoundReport};
use hybrid_polar::trial::TrialRunner;
use hybrid_polar::{CodeConfig, Estimator, PointStats, Scheme, TrialOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Environment variable read for the default worker count.
pub const WORKERS_ENV: &str = "HPOLAR_WORKERS";

/// Points below this many frame errors get an advisory.
pub const MIN_ERRORS_ADVISORY: u64 = 20;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Code(#[from] hybrid_polar::Error),
    #[error("invalid sweep: {0}")]
    Spec(&'static str),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub scheme: Scheme,
    pub snr_db: Vec<f64>,
    pub frames: u64,
    pub master_seed: u64,
    pub estimator: Estimator,
    /// Decode hybrid frames a second time with oracle pilots.
    pub genie_pilots: bool,
    pub fixed_gain: Option<f64>,
    pub noiseless: bool,
}

impl SweepSpec {
    pub fn new(scheme: Scheme, snr_db: Vec<f64>, frames: u64, master_seed: u64) -> Self {
        Self {
            scheme,
            snr_db,
            frames,
            master_seed,
            estimator: Estimator::LeastSquares,
            genie_pilots: false,
            fixed_gain: None,
            noiseless: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(SimError::Spec("frames must be at least 1"));
        }
        if self.snr_db.is_empty() {
            return Err(SimError::Spec("the SNR grid is empty"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(SimError::Spec("SNR values must be finite"));
        }
        if self.genie_pilots && self.scheme != Scheme::Hybrid {
            return Err(SimError::Spec("oracle pilots apply only to the hybrid scheme"));
        }
        Ok(())
    }

    fn options(&self, snr_db: f64) -> TrialOptions {
        TrialOptions {
            snr_db,
            master_seed: self.master_seed,
            estimator: self.estimator,
            genie_pilots: self.genie_pilots,
            fixed_gain: self.fixed_gain,
            noiseless: self.noiseless,
        }
    }
}

/// `start, start + step, …` up to and including `stop` (within rounding).
pub fn snr_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(SimError::Spec("SNR step must be positive and the ends finite"));
    }
    if stop < start {
        return Err(SimError::Spec("SNR stop is below start"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // Round to 1e-9 dB so that 0.1-style steps print cleanly.
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub stats: PointStats,
}

impl SweepPoint {
    pub fn bound(&self) -> Option<BoundReport> {
        fer_bound_check(&self.stats).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub points: Vec<SweepPoint>,
}

/// Worker count from [`WORKERS_ENV`], else the machine's parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs one point: frames `0..frames` on `workers` threads.
pub fn run_point(spec: &SweepSpec, cfg: &CodeConfig, snr_db: f64, workers: usize) -> Result<SweepPoint> {
    spec.validate()?;
    let proto = TrialRunner::new(cfg, spec.scheme, spec.options(snr_db))?;
    let k = proto.code().config().k();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let stats = pool.install(|| {
        (0..spec.frames)
            .into_par_iter()
            .map_init(|| proto.clone(), |runner, i| runner.run(i))
            .try_fold(
                || PointStats::new(k),
                |mut acc, outcome| {
                    acc.record(&outcome?);
                    Ok::<_, hybrid_polar::Error>(acc)
                },
            )
            .try_reduce(|| PointStats::new(k), |a, b| Ok(a.merge(b)))
    })?;
    Ok(SweepPoint {
        scheme: spec.scheme,
        snr_db,
        stats,
    })
}

/// Runs every point of `spec`. Counters are integers merged by addition, so
/// the result does not depend on `workers`.
pub fn run_sweep(spec: &SweepSpec, cfg: &CodeConfig, workers: usize) -> Result<SweepStats> {
    run_sweep_with(spec, cfg, workers, |_| {})
}

/// [`run_sweep`] with a callback after each finished point.
pub fn run_sweep_with<F>(spec: &SweepSpec, cfg: &CodeConfig, workers: usize, mut on_point: F) -> Result<SweepStats>
where
    F: FnMut(&SweepPoint),
{
    spec.validate()?;
    let mut points = Vec::with_capacity(spec.snr_db.len());
    for &snr in &spec.snr_db {
        let p = run_point(spec, cfg, snr, workers)?;
        on_point(&p);
        points.push(p);
    }
    Ok(SweepStats { points })
}

/// One CSV row. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub fer_ci_lo: f64,
    pub fer_ci_hi: f64,
    pub bit_errors: u64,
    pub ber: f64,
    pub pilot_errors: u64,
    pub pilot_er: f64,
    /// Empty when oracle pilots were not run.
    pub genie_message_fer: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "scheme",
    "snr_db",
    "frames",
    "frame_errors",
    "fer",
    "fer_ci_lo",
    "fer_ci_hi",
    "bit_errors",
    "ber",
    "pilot_errors",
    "pilot_er",
    "genie_message_fer",
];

impl From<&SweepPoint> for CsvRow {
    fn from(p: &SweepPoint) -> Self {
        let s = &p.stats;
        let ci = s.fer_ci();
        Self {
            scheme: p.scheme,
            snr_db: p.snr_db,
            frames: s.frames,
            frame_errors: s.frame_errors,
            fer: s.fer(),
            fer_ci_lo: ci.lo,
            fer_ci_hi: ci.hi,
            bit_errors: s.bit_errors,
            ber: s.ber(),
            pilot_errors: s.pilot_errors,
            pilot_er: s.pilot_er(),
            genie_message_fer: s.genie_message_fer(),
        }
    }
}

impl SweepStats {
    pub fn rows(&self) -> Vec<CsvRow> {
        self.points.iter().map(CsvRow::from).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Everything needed to reproduce a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: CodeConfig,
    pub sweep: SweepSpec,
    pub master_seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(config: CodeConfig, sweep: SweepSpec) -> Self {
        Self {
            tool: "hpolar".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed: sweep.master_seed,
            config,
            sweep,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }
}

/// JSON results document: the manifest plus the CSV rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub manifest: RunManifest,
    pub rows: Vec<CsvRow>,
}
