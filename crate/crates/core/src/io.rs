//! Configuration files, time series, field snapshots and the three
//! command-line operations built on them.
//!
//! All writes go through a temporary file and a rename, so a reader never
//! sees a half-written artifact. While a command runs, its output directory
//! carries an `.incomplete` marker that is removed only on success.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crc::{Crc, CRC_64_XZ};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coefficients::{ellipticity, CoefficientEngine, KernelKind};
use crate::error::{Error, Result};
use crate::experiments::{
    run_entropy_identity, run_interpolation, run_maximum_principle, run_maxwellian_propagation,
    run_moment_propagation, run_weak_strong, ExperimentConfig, ExperimentKind, GridConfig,
};
use crate::functionals::{
    entropy, entropy_dissipation_with, good_bad_report, hellinger_sq, log_derivative_envelopes,
    maxwellian_envelope, pinsker_gap, relative_entropy, weighted_relative_fisher,
};
use crate::grid::{conserved_moments, integrate, ScalarField};
#[cfg(test)]
use crate::grid::GridSpec;
use crate::solver::{rhs, Stepper};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;
pub const INCOMPLETE_MARKER: &str = ".incomplete";

pub const TIMESERIES_HEADER: [&str; 20] = [
    "t",
    "mass",
    "mom_x",
    "mom_y",
    "mom_z",
    "energy",
    "entropy",
    "dissipation",
    "rel_entropy",
    "good_term",
    "bad_term",
    "K1",
    "K2",
    "K3",
    "lambda_hat",
    "Lambda_hat",
    "c0_hat",
    "env_klo",
    "env_Khi",
    "clip_count",
];

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

pub fn crc64(bytes: &[u8]) -> u64 {
    CRC64.checksum(bytes)
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parse errors carry the line and column and, for unknown or missing keys,
/// the key name.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Pretty JSON of the config with every default filled in. Struct field
/// order is fixed, so equal configs give equal bytes.
pub fn canonical_json(config: &ExperimentConfig) -> String {
    let mut s = serde_json::to_string_pretty(config).expect("config serialises");
    s.push('\n');
    s
}

/// Hex SHA-256 of the canonical form.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let digest = Sha256::digest(canonical_json(config).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = temp_path(path);
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// One time-series row. Disabled diagnostics are `NaN` and print as `nan`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
    pub entropy: f64,
    pub dissipation: f64,
    pub rel_entropy: f64,
    pub good_term: f64,
    pub bad_term: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub lambda_hat: f64,
    pub big_lambda_hat: f64,
    pub c0_hat: f64,
    pub env_klo: f64,
    pub env_khi: f64,
    pub clip_count: u64,
}

impl TimeSeriesRow {
    fn values(&self) -> [f64; 19] {
        [
            self.t,
            self.mass,
            self.momentum[0],
            self.momentum[1],
            self.momentum[2],
            self.energy,
            self.entropy,
            self.dissipation,
            self.rel_entropy,
            self.good_term,
            self.bad_term,
            self.k1,
            self.k2,
            self.k3,
            self.lambda_hat,
            self.big_lambda_hat,
            self.c0_hat,
            self.env_klo,
            self.env_khi,
        ]
    }

    fn from_values(v: &[f64; 19], clip_count: u64) -> Self {
        TimeSeriesRow {
            t: v[0],
            mass: v[1],
            momentum: [v[2], v[3], v[4]],
            energy: v[5],
            entropy: v[6],
            dissipation: v[7],
            rel_entropy: v[8],
            good_term: v[9],
            bad_term: v[10],
            k1: v[11],
            k2: v[12],
            k3: v[13],
            lambda_hat: v[14],
            big_lambda_hat: v[15],
            c0_hat: v[16],
            env_klo: v[17],
            env_khi: v[18],
            clip_count,
        }
    }

    /// Bit-level equality, treating all NaNs as equal.
    pub fn same_bits(&self, other: &Self) -> bool {
        let (a, b) = (self.values(), other.values());
        self.clip_count == other.clip_count
            && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
    }
}

/// 17 significant digits, which round-trip every double.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn timeseries_csv(rows: &[TimeSeriesRow]) -> Result<Vec<u8>> {
    for w in rows.windows(2) {
        if !(w[1].t > w[0].t) {
            return Err(Error::InvalidInput(format!(
                "time-series rows out of order: {} then {}",
                w[0].t, w[1].t
            )));
        }
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv encoding: {e}"));
    writer.write_record(TIMESERIES_HEADER).map_err(csv_err)?;
    for row in rows {
        let mut record: Vec<String> = row.values().iter().map(|&x| format_value(x)).collect();
        record.push(row.clip_count.to_string());
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.into_inner().map_err(|e| Error::InvalidInput(format!("csv encoding: {e}")))
}

pub fn write_timeseries(path: &Path, rows: &[TimeSeriesRow]) -> Result<()> {
    atomic_write(path, &timeseries_csv(rows)?)
}

pub fn read_timeseries(path: &Path) -> Result<Vec<TimeSeriesRow>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::InvalidInput(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(TIMESERIES_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != TIMESERIES_HEADER.len() {
            return Err(bad(format!("row {} has {} fields", line + 1, record.len())));
        }
        let mut values = [0.0; 19];
        for (k, v) in values.iter_mut().enumerate() {
            *v = record[k]
                .parse()
                .map_err(|_| bad(format!("row {}: bad value {:?}", line + 1, &record[k])))?;
        }
        let clips = record[19]
            .parse()
            .map_err(|_| bad(format!("row {}: bad clip count {:?}", line + 1, &record[19])))?;
        rows.push(TimeSeriesRow::from_values(&values, clips));
    }
    Ok(rows)
}

/// Sidecar of a raw field file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotMeta {
    pub format_version: u32,
    pub grid: GridConfig,
    pub time: f64,
    /// File name of the raw array, relative to the sidecar.
    pub data_file: String,
    /// Number of stored values, `N^3`.
    pub values: usize,
    /// CRC-64/XZ of the raw bytes, hex.
    pub checksum: String,
}

/// Writes `<stem>.json` and `<stem>.f64` into `dir`; returns the sidecar path.
pub fn write_snapshot(dir: &Path, stem: &str, field: &ScalarField, time: f64) -> Result<PathBuf> {
    let grid = field.grid();
    let bytes: Vec<u8> = field.values().iter().flat_map(|x| x.to_le_bytes()).collect();
    let data_file = format!("{stem}.f64");
    let meta = SnapshotMeta {
        format_version: SNAPSHOT_FORMAT_VERSION,
        grid: GridConfig {
            half_width: grid.half_width(),
            points_per_axis: grid.points_per_axis(),
            gamma: grid.gamma(),
        },
        time,
        data_file: data_file.clone(),
        values: grid.len(),
        checksum: format!("{:016x}", crc64(&bytes)),
    };
    atomic_write(&dir.join(&data_file), &bytes)?;
    let sidecar = dir.join(format!("{stem}.json"));
    let mut json = serde_json::to_string_pretty(&meta).expect("metadata serialises");
    json.push('\n');
    atomic_write(&sidecar, json.as_bytes())?;
    Ok(sidecar)
}

/// Loads a snapshot from its sidecar. The checksum is verified first, so a
/// truncated or corrupted array is a checksum error; an intact array whose
/// length disagrees with the sidecar grid is a grid mismatch.
pub fn read_snapshot(sidecar: &Path) -> Result<(ScalarField, SnapshotMeta)> {
    let text = fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?;
    let meta: SnapshotMeta = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", sidecar.display())))?;
    if meta.format_version != SNAPSHOT_FORMAT_VERSION {
        return Err(Error::InvalidInput(format!(
            "{}: unsupported format version {}",
            sidecar.display(),
            meta.format_version
        )));
    }
    let expected = u64::from_str_radix(&meta.checksum, 16)
        .map_err(|_| Error::InvalidInput(format!("{}: bad checksum field", sidecar.display())))?;
    let data_path = sidecar.parent().unwrap_or(Path::new(".")).join(&meta.data_file);
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let found = crc64(&bytes);
    if found != expected {
        return Err(Error::Checksum {
            path: data_path,
            expected,
            found,
        });
    }
    let grid = meta.grid.spec()?;
    if bytes.len() != 8 * grid.len() || meta.values != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{}: {} bytes for an N = {} grid ({} values declared)",
            data_path.display(),
            bytes.len(),
            grid.points_per_axis(),
            meta.values
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((ScalarField::from_values(grid, values)?, meta))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs `body` with the `.incomplete` marker present in `dir`; the marker is
/// removed only when `body` succeeds.
fn with_marker<T>(dir: &Path, body: impl FnOnce() -> Result<T>) -> Result<T> {
    create_dir(dir)?;
    let marker = dir.join(INCOMPLETE_MARKER);
    fs::write(&marker, b"").map_err(|e| Error::io(&marker, e))?;
    let out = body()?;
    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(out)
}

fn write_config(dir: &Path, config: &ExperimentConfig) -> Result<()> {
    atomic_write(&dir.join("config.json"), canonical_json(config).as_bytes())
}

/// Output directory: the override if given, else `output.dir`.
pub fn output_dir(config: &ExperimentConfig, out: Option<&Path>) -> Result<PathBuf> {
    match (out, &config.output.dir) {
        (Some(p), _) => Ok(p.to_path_buf()),
        (None, Some(d)) => Ok(PathBuf::from(d)),
        (None, None) => Err(Error::Config("no output directory: pass --out or set output.dir".into())),
    }
}

/// Diagnostics of one sample; `f` defaults to `g` when only one density
/// is evolved.
pub fn timeseries_row(
    engine: &CoefficientEngine,
    config: &ExperimentConfig,
    t: f64,
    g: &ScalarField,
    f: &ScalarField,
    clips: u64,
) -> Result<TimeSeriesRow> {
    let on = |c: &str| config.output.enabled(c);
    let nan = f64::NAN;
    let c = conserved_moments(g);
    let mut row = TimeSeriesRow {
        t,
        mass: c[0],
        momentum: [c[1], c[2], c[3]],
        energy: c[4],
        entropy: if on("entropy") { entropy(g) } else { nan },
        dissipation: if on("dissipation") { entropy_dissipation_with(engine, g) } else { nan },
        rel_entropy: if on("rel_entropy") { relative_entropy(f, g) } else { nan },
        good_term: nan,
        bad_term: nan,
        k1: nan,
        k2: nan,
        k3: nan,
        lambda_hat: nan,
        big_lambda_hat: nan,
        c0_hat: nan,
        env_klo: nan,
        env_khi: nan,
        clip_count: clips,
    };
    let exps = config.exponents.exponents();
    let wants_env = ["K1", "K2", "K3", "good_term", "bad_term", "c0_hat"].iter().any(|c| on(c));
    if wants_env {
        let dt_g = if on("K2") { Some(rhs(engine, g)) } else { None };
        let env = log_derivative_envelopes(g, exps, dt_g.as_ref())?;
        row.k1 = if on("K1") { env.k1 } else { nan };
        row.k2 = if on("K2") { env.k2 } else { nan };
        row.k3 = if on("K3") { env.k3 } else { nan };
        if ["good_term", "bad_term", "c0_hat"].iter().any(|c| on(c)) {
            let r = good_bad_report(engine, f, g, &env, config.moment_order());
            row.good_term = if on("good_term") { r.good } else { nan };
            row.bad_term = if on("bad_term") { r.bad } else { nan };
            row.c0_hat = if on("c0_hat") { r.c0 } else { nan };
        }
    }
    if on("lambda_hat") || on("Lambda_hat") {
        let e = ellipticity(&engine.a_bar(g, KernelKind::Full)?);
        row.lambda_hat = if on("lambda_hat") { e.lambda_hat } else { nan };
        row.big_lambda_hat = if on("Lambda_hat") { e.big_lambda_hat } else { nan };
    }
    if on("env_klo") || on("env_Khi") {
        let m = maxwellian_envelope(g, config.envelope_mu())?;
        row.env_klo = if on("env_klo") { m.k_lo } else { nan };
        row.env_khi = if on("env_Khi") { m.k_hi } else { nan };
    }
    Ok(row)
}

/// What a simulate run produced.
#[derive(Clone, Debug)]
pub struct SimulateOutput {
    pub dir: PathBuf,
    pub rows: Vec<TimeSeriesRow>,
    pub snapshots: Vec<PathBuf>,
}

/// Evolves `g0` (and `f0` when configured) to `T`, writing `timeseries.csv`
/// at the sample cadence, snapshots at the configured times (the final time
/// by default) and the canonical config.
pub fn cmd_simulate(config: &ExperimentConfig, out: Option<&Path>) -> Result<SimulateOutput> {
    let dir = output_dir(config, out)?;
    with_marker(&dir, || {
        write_config(&dir, config)?;
        let grid = config.grid_spec()?;
        let engine = CoefficientEngine::new(grid);
        let (g0, f0) = config.initial_states(grid)?;
        let paired = config.initial.f0.is_some();
        let states = if paired { vec![g0, f0] } else { vec![g0] };
        let mut stepper = Stepper::new(&engine, config.solver.solver_config(), states)?;

        let samples = config.sample_times();
        let mut snap_times = config.output.snapshot_times.clone();
        if snap_times.is_empty() {
            snap_times.push(config.solver.t_final);
        }
        let mut stops: Vec<f64> = samples.iter().chain(&snap_times).copied().collect();
        stops.sort_by(f64::total_cmp);
        stops.dedup();

        let mut rows = Vec::new();
        let mut snapshots = Vec::new();
        let mut clips: u64 = 0;
        for &t in &stops {
            if t > stepper.time() {
                stepper.advance_to(t, |r| clips += r.iter().map(|x| x.clipped as u64).sum::<u64>())?;
            }
            let g = stepper.state(0);
            let f = stepper.state(if paired { 1 } else { 0 });
            if samples.contains(&t) {
                rows.push(timeseries_row(&engine, config, t, g, f, clips)?);
                clips = 0;
            }
            if snap_times.contains(&t) {
                let k = snapshots.len() / if paired { 2 } else { 1 };
                snapshots.push(write_snapshot(&dir, &format!("g_{k:03}"), g, t)?);
                if paired {
                    snapshots.push(write_snapshot(&dir, &format!("f_{k:03}"), f, t)?);
                }
            }
        }
        write_timeseries(&dir.join("timeseries.csv"), &rows)?;
        Ok(SimulateOutput {
            dir: dir.clone(),
            rows,
            snapshots,
        })
    })
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config_hash: &'a str,
    experiment: &'a str,
    pass: bool,
    report: &'a T,
}

fn report_json<T: Serialize>(hash: &str, kind: ExperimentKind, pass: bool, report: &T) -> Vec<u8> {
    let doc = Envelope {
        config_hash: hash,
        experiment: kind.name(),
        pass,
        report,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serialises");
    s.push('\n');
    s.into_bytes()
}

/// Runs one experiment and returns its pass flag with the JSON document.
pub fn run_experiment(config: &ExperimentConfig, kind: ExperimentKind) -> Result<(bool, Vec<u8>)> {
    let hash = config_hash(config);
    Ok(match kind {
        ExperimentKind::WeakStrong => {
            let r = run_weak_strong(config)?;
            (r.pass, report_json(&hash, kind, r.pass, &r))
        }
        ExperimentKind::EntropyIdentity => {
            let r = run_entropy_identity(config)?;
            (r.pass, report_json(&hash, kind, r.pass, &r))
        }
        ExperimentKind::MaxwellianPropagation => {
            let r = run_maxwellian_propagation(config)?;
            (r.pass, report_json(&hash, kind, r.pass, &r))
        }
        ExperimentKind::MomentPropagation => {
            let r = run_moment_propagation(config)?;
            (r.pass, report_json(&hash, kind, r.pass, &r))
        }
        ExperimentKind::MaximumPrinciple => {
            let r = run_maximum_principle(config)?;
            (r.pass, report_json(&hash, kind, r.pass, &r))
        }
        ExperimentKind::Interpolation => {
            let r = run_interpolation(config)?;
            (r.pass, report_json(&hash, kind, r.pass, &r))
        }
    })
}

/// Runs every listed experiment, writing `<name>.json` per experiment and a
/// `summary.json`. Returns `(name, pass)` pairs.
pub fn cmd_experiment(config: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<(String, bool)>> {
    if config.experiments.is_empty() {
        return Err(Error::Config("no experiments listed".into()));
    }
    let dir = output_dir(config, out)?;
    with_marker(&dir, || {
        write_config(&dir, config)?;
        let mut results = Vec::new();
        for &kind in &config.experiments {
            let (pass, doc) = run_experiment(config, kind)?;
            atomic_write(&dir.join(format!("{}.json", kind.name())), &doc)?;
            results.push((kind.name().to_string(), pass));
        }
        let summary = serde_json::json!({
            "config_hash": config_hash(config),
            "results": results.iter().map(|(n, p)| serde_json::json!({"experiment": n, "pass": p})).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&summary).expect("summary serialises");
        s.push('\n');
        atomic_write(&dir.join("summary.json"), s.as_bytes())?;
        Ok(results)
    })
}

/// Names accepted by `diagnose`.
pub const DIAGNOSE_FUNCTIONALS: [&str; 13] = [
    "mass",
    "energy",
    "entropy",
    "dissipation",
    "rel_entropy",
    "hellinger_sq",
    "pinsker_gap",
    "good_term",
    "bad_term",
    "fisher_rel",
    "c0_hat",
    "lambda_hat",
    "Lambda_hat",
];

const PAIR_FUNCTIONALS: [&str; 6] = ["rel_entropy", "hellinger_sq", "pinsker_gap", "good_term", "bad_term", "fisher_rel"];

/// Evaluates the requested functionals on `f` (and `g` for the pair ones).
pub fn diagnose(f: &ScalarField, g: Option<&ScalarField>, names: &[String]) -> Result<Vec<(String, f64)>> {
    if let Some(g) = g {
        f.grid().check_compatible(g.grid())?;
    }
    let engine = CoefficientEngine::new(*f.grid());
    let mut out = Vec::new();
    for name in names {
        if !DIAGNOSE_FUNCTIONALS.contains(&name.as_str()) {
            return Err(Error::Config(format!(
                "unknown functional \"{name}\"; expected one of {}",
                DIAGNOSE_FUNCTIONALS.join(", ")
            )));
        }
        let pair = || {
            g.ok_or_else(|| Error::Config(format!("functional \"{name}\" needs a second snapshot (--g)")))
        };
        let value = match name.as_str() {
            "mass" => integrate(f),
            "energy" => conserved_moments(f)[4],
            "entropy" => entropy(f),
            "dissipation" => entropy_dissipation_with(&engine, f),
            "rel_entropy" => relative_entropy(f, pair()?),
            "hellinger_sq" => hellinger_sq(f, pair()?),
            "pinsker_gap" => pinsker_gap(f, pair()?)?,
            "good_term" => crate::functionals::good_term_with(&engine, f, pair()?),
            "bad_term" => crate::functionals::bad_term_with(&engine, f, pair()?),
            "fisher_rel" => weighted_relative_fisher(f, pair()?),
            "c0_hat" => crate::coefficients::coercivity_c0_with(&engine, f).c0,
            "lambda_hat" => ellipticity(&engine.a_bar(f, KernelKind::Full)?).lambda_hat,
            "Lambda_hat" => ellipticity(&engine.a_bar(f, KernelKind::Full)?).big_lambda_hat,
            _ => unreachable!("checked above"),
        };
        out.push((name.clone(), value));
    }
    Ok(out)
}

/// Loads the snapshots, evaluates the functionals and, with `out` set,
/// also writes `diagnose.json` there. Returns the rows for printing.
pub fn cmd_diagnose(
    f_path: &Path,
    g_path: Option<&Path>,
    names: &[String],
    out: Option<&Path>,
) -> Result<Vec<(String, f64)>> {
    let (f, _) = read_snapshot(f_path)?;
    let g = g_path.map(read_snapshot).transpose()?.map(|(g, _)| g);
    let names: Vec<String> = if names.is_empty() {
        let all = DIAGNOSE_FUNCTIONALS.iter();
        all.filter(|n| g.is_some() || !PAIR_FUNCTIONALS.contains(n)).map(|n| n.to_string()).collect()
    } else {
        names.to_vec()
    };
    let rows = diagnose(&f, g.as_ref(), &names)?;
    if let Some(dir) = out {
        with_marker(dir, || {
            let map: serde_json::Map<String, serde_json::Value> = rows
                .iter()
                .map(|(n, v)| (n.clone(), serde_json::Value::String(format_value(*v))))
                .collect();
            let mut s = serde_json::to_string_pretty(&map).expect("table serialises");
            s.push('\n');
            atomic_write(&dir.join("diagnose.json"), s.as_bytes())
        })?;
    }
    Ok(rows)
}

/// Two-column text table.
pub fn format_table(rows: &[(String, f64)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("functional".len());
    let mut s = format!("{:<width$}  value\n", "functional");
    for (n, v) in rows {
        s.push_str(&format!("{n:<width$}  {}\n", format_value(*v)));
    }
    s
}
