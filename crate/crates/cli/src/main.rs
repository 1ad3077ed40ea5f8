//! `taxiguard`: batch entry points over the core library.
//!
//! Machine-readable output goes to stdout or `--out`; the human summary goes
//! to stderr. Exit codes: 0 ok, 1 invalid input, 2 I/O, 3 computation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use taxiguard_core::airportmodel::{load_map, MapError};
use taxiguard_core::calibration::{
    build_calibration, classify_time_band, constraint_report, ks_gaussian_test, CalibrationConfig, CalibrationMode,
    CalibrationSet, DayWindow, FleetTable, TimeBand,
};
use taxiguard_core::conflict::{
    detect_commands, offset_sweep, sweep_csv, ConflictConfig, ConflictReport, OffsetSpec, WarningThresholds,
};
use taxiguard_core::deduction::{deduce_timeline, seconds_between, timeline_midpoint_deviation, DeductionError};
use taxiguard_core::synth::{generate, SynthProfile};
use taxiguard_core::trackdata::{
    assign_to_segments, build_aircraft_table, filter_speed_outliers, read_track_file, write_rejections,
    write_track_csv, IngestError, Registry, SegmentFix, TrackRecord,
};
use taxiguard_core::units::MAX_TAXI_SPEED_KMH;
use taxiguard_core::{AirportMap, TaxiCommand};

#[derive(Debug)]
enum CliError {
    Validation(String),
    Io(String),
    Computation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Computation(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Io(m) => write!(f, "i/o: {m}"),
            CliError::Computation(m) => write!(f, "cannot compute: {m}"),
        }
    }
}

impl From<DeductionError> for CliError {
    fn from(e: DeductionError) -> Self {
        match e {
            DeductionError::InvalidCommand(v) => {
                let list: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                CliError::Validation(format!("command violates the map: {}", list.join("; ")))
            }
            DeductionError::LengthMismatch { .. } | DeductionError::NonPositiveObservation(_) => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Computation(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "taxiguard", version, about = "Taxi conflict early warning: calibrate, deduce, detect")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a calibration set from track files.
    Calibrate(CalibrateArgs),
    /// Deduce arrival intervals for one route.
    Deduce(DeduceArgs),
    /// Detect conflicts between two commands.
    Detect(DetectArgs),
    /// Shift the second command through a range of start offsets.
    Sweep(SweepArgs),
    /// Generate synthetic track fixes.
    Synth(SynthArgs),
    /// Taxi-speed constraint report from track files.
    Report(ReportArgs),
}

#[derive(Args)]
struct MapArg {
    /// Airport map JSON; the bundled map when omitted.
    #[arg(long)]
    map: Option<PathBuf>,
}

#[derive(Args)]
struct WindowArgs {
    /// Local daytime window.
    #[arg(long, value_name = "HH:MM-HH:MM")]
    day_window: Option<DayWindow>,
    /// Airport local time offset from UTC.
    #[arg(long, value_name = "MINUTES", default_value_t = 0, allow_hyphen_values = true)]
    utc_offset: i32,
}

impl WindowArgs {
    fn window(&self) -> DayWindow {
        self.day_window.unwrap_or_default().with_offset(self.utc_offset)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    TimeBanded,
    Pauta,
}

impl From<Mode> for CalibrationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::TimeBanded => CalibrationMode::TimeBanded,
            Mode::Pauta => CalibrationMode::Pauta,
        }
    }
}

#[derive(Args)]
struct CalArgs {
    #[arg(long)]
    cal: PathBuf,
    #[command(flatten)]
    map: MapArg,
    #[arg(long, value_enum, default_value = "time-banded")]
    mode: Mode,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, num_args = 1.., required = true)]
    tracks: Vec<PathBuf>,
    #[command(flatten)]
    map: MapArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    min_samples: usize,
    #[command(flatten)]
    window: WindowArgs,
    /// Write rejected input lines here as JSON lines.
    #[arg(long)]
    rejections: Option<PathBuf>,
}

#[derive(Args)]
struct DeduceArgs {
    #[command(flatten)]
    cal: CalArgs,
    /// Comma-separated taxiway ids.
    #[arg(long, value_delimiter = ',', required = true)]
    route: Vec<String>,
    #[arg(long)]
    start: DateTime<Utc>,
    #[arg(long)]
    entry_node: Option<String>,
    #[arg(long, default_value = "cmd")]
    id: String,
    #[arg(long, default_value = "000001")]
    icao24: String,
    /// CSV `node,arrival` with ISO-8601 times or elapsed seconds.
    #[arg(long)]
    observed: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PairArgs {
    #[command(flatten)]
    cal: CalArgs,
    #[arg(long)]
    cmd_a: PathBuf,
    #[arg(long)]
    cmd_b: PathBuf,
    #[arg(long, default_value_t = WarningThresholds::default().a())]
    warn_a: f64,
    #[arg(long, default_value_t = WarningThresholds::default().b())]
    warn_b: f64,
}

impl PairArgs {
    fn config(&self) -> Result<ConflictConfig> {
        let warning = WarningThresholds::new(self.warn_a, self.warn_b).map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(ConflictConfig { warning, ..ConflictConfig::default() })
    }
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, default_value = "0:100:5")]
    offsets: OffsetSpec,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    map: MapArg,
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    tracks: Vec<PathBuf>,
    #[command(flatten)]
    map: MapArg,
    /// Aircraft registry JSON (icao24, airline, type, registration).
    #[arg(long)]
    registry: Option<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    /// Markdown output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    // clap's own usage errors exit 2, which is the I/O code here.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.cmd {
        Cmd::Calibrate(a) => calibrate(a),
        Cmd::Deduce(a) => deduce(a),
        Cmd::Detect(a) => detect(a),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Synth(a) => synth(a),
        Cmd::Report(a) => report(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    emit(out, s.as_bytes())
}

fn map_of(arg: &MapArg) -> Result<AirportMap> {
    let Some(path) = &arg.map else { return Ok(AirportMap::bundled()) };
    load_map(path).map_err(|e| match e {
        MapError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        MapError::Invalid(v) => {
            for x in &v {
                eprintln!("  {x}");
            }
            CliError::Validation(format!("{}: map has {} violation(s)", path.display(), v.len()))
        }
        other => CliError::Validation(format!("{}: {other}", path.display())),
    })
}

fn cal_of(args: &CalArgs, map: &AirportMap) -> Result<CalibrationSet> {
    let cal: CalibrationSet = read_json(&args.cal)?;
    if let Err(issues) = cal.validate(map) {
        for i in &issues {
            eprintln!("  {i}");
        }
        return Err(CliError::Validation(format!("{}: calibration does not fit the map", args.cal.display())));
    }
    Ok(cal)
}

fn ingest_err(path: &Path, e: IngestError) -> CliError {
    match e {
        IngestError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::Validation(format!("{}: {other}", path.display())),
    }
}

/// Read, filter and assign every track file.
fn load_fixes(paths: &[PathBuf], map: &AirportMap, rejections: Option<&Path>) -> Result<(Vec<TrackRecord>, Vec<SegmentFix>)> {
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for p in paths {
        let parsed = read_track_file(p).map_err(|e| ingest_err(p, e))?;
        eprintln!("{}: {} fixes, {} rejected lines", p.display(), parsed.records.len(), parsed.rejected.len());
        records.extend(parsed.records);
        rejected.extend(parsed.rejected);
    }
    if let Some(path) = rejections {
        let mut buf = Vec::new();
        write_rejections(&mut buf, &rejected).map_err(|e| CliError::Io(e.to_string()))?;
        emit(Some(path), &buf)?;
    }
    let total = records.len();
    let kept = filter_speed_outliers(records, MAX_TAXI_SPEED_KMH);
    let assigned = assign_to_segments(&kept, map);
    eprintln!(
        "{} over the speed cap, {} outside geofences, {} ambiguous, {} assigned",
        total - kept.len(),
        assigned.outside,
        assigned.ambiguous,
        assigned.fixes.len()
    );
    Ok((kept, assigned.fixes))
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let map = map_of(&a.map)?;
    let (_, fixes) = load_fixes(&a.tracks, &map, a.rejections.as_deref())?;
    let config = CalibrationConfig { min_samples: a.min_samples, day_window: a.window.window(), ..Default::default() };
    let cal = build_calibration(&fixes, &map, &config);

    let mut samples: BTreeMap<&str, BTreeMap<TimeBand, Vec<f64>>> = BTreeMap::new();
    for f in &fixes {
        let band = classify_time_band(f.timestamp, &config.day_window);
        samples.entry(&f.taxiway_id).or_default().entry(band).or_default().push(f.ground_speed_kn);
    }
    eprintln!("{:<8} {:<5} {:>6} {:^16} {:>9}  k-s", "taxiway", "band", "n", "interval kn", "note");
    for (id, entry) in &cal.taxiways {
        if entry.uncalibrated {
            continue;
        }
        for band in TimeBand::ALL {
            let Some(iv) = entry.bands.get(&band) else { continue };
            let data = samples.get(id.as_str()).and_then(|m| m.get(&band)).map_or(&[][..], Vec::as_slice);
            let ks = match ks_gaussian_test(data, 0.05) {
                Ok(r) => format!("D={:.4} crit={:.4} {}", r.statistic, r.critical_value, if r.pass { "pass" } else { "reject" }),
                Err(e) => e.to_string(),
            };
            let note = if entry.fallback.contains(&band) { "pauta" } else { "" };
            eprintln!(
                "{:<8} {:<5} {:>6} {:>7.2}..{:<7.2} {:>9}  {ks}",
                id, band, data.len(), iv.v_lo_kn, iv.v_hi_kn, note
            );
        }
    }
    let uncal: Vec<&str> = cal.uncalibrated_taxiways().collect();
    if uncal.len() == cal.taxiways.len() {
        eprintln!("warning: no taxiway has enough data; every taxiway is uncalibrated");
    } else {
        for id in uncal {
            eprintln!("warning: taxiway {id} is uncalibrated");
        }
    }
    emit_json(a.out.as_deref(), &cal)
}

fn read_observed(path: &Path, start: DateTime<Utc>) -> Result<BTreeMap<String, f64>> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let (Some(node), Some(t)) = (row.get(0), row.get(1)) else {
            return Err(CliError::Validation(format!("{}: expected node,arrival", path.display())));
        };
        let elapsed = match t.parse::<f64>() {
            Ok(s) => s,
            Err(_) => {
                let ts: DateTime<Utc> = t
                    .parse()
                    .map_err(|_| CliError::Validation(format!("{}: bad arrival {t:?}", path.display())))?;
                seconds_between(start, ts)
            }
        };
        out.insert(node.to_owned(), elapsed);
    }
    Ok(out)
}

fn deduce(a: DeduceArgs) -> Result<()> {
    let map = map_of(&a.cal.map)?;
    let cal = cal_of(&a.cal, &map)?;
    let icao24 = a.icao24.parse().map_err(|e| CliError::Validation(format!("{e}")))?;
    let cmd = TaxiCommand { command_id: a.id, icao24, route: a.route, start_time: a.start, entry_node: a.entry_node };
    let tl = deduce_timeline(&cmd, &cal, &map, a.cal.mode.into())?;

    eprintln!("band {} from start {}, start node {}", tl.band, tl.start_time, tl.start_node);
    eprintln!("{:<8} {:<8} {:>9} {:>10} {:>10}", "taxiway", "node", "length m", "lo s", "hi s");
    for e in &tl.entries {
        let flag = if e.fallback { " (pauta fallback)" } else { "" };
        eprintln!(
            "{:<8} {:<8} {:>9.1} {:>10.2} {:>10.2}{flag}",
            e.taxiway_id, e.node_id, e.length_m, e.arrival.lo_s, e.arrival.hi_s
        );
    }

    let Some(obs_path) = a.observed else { return emit_json(a.out.as_deref(), &tl) };
    let observed = read_observed(&obs_path, tl.start_time)?;
    let times: Vec<f64> = tl
        .entries
        .iter()
        .map(|e| {
            observed
                .get(&e.node_id)
                .copied()
                .ok_or_else(|| CliError::Validation(format!("no observed arrival for node {}", e.node_id)))
        })
        .collect::<Result<_>>()?;
    let summary = timeline_midpoint_deviation(&tl, &times)?;
    let rows: Vec<_> = tl
        .entries
        .iter()
        .zip(&times)
        .map(|(e, &t)| {
            let inside = e.arrival.contains(t);
            eprintln!("{:<8} observed {:>9.2} s  {}", e.node_id, t, if inside { "inside" } else { "OUTSIDE" });
            json!({"node": e.node_id, "observed_s": t, "lo_s": e.arrival.lo_s, "hi_s": e.arrival.hi_s, "contained": inside})
        })
        .collect();
    if summary.contained == summary.n {
        eprintln!("contained: all");
    } else {
        eprintln!("contained: {}/{}", summary.contained, summary.n);
    }
    eprintln!("average deviation {:.2}%", summary.avg_deviation_pct);
    match summary.correlation {
        Some(r) => eprintln!("correlation r = {r:.4}"),
        None => eprintln!("correlation undefined"),
    }
    emit_json(a.out.as_deref(), &json!({"timeline": tl, "observed": rows, "summary": summary}))
}

fn load_pair(p: &PairArgs) -> Result<(AirportMap, CalibrationSet, TaxiCommand, TaxiCommand, ConflictConfig)> {
    let map = map_of(&p.cal.map)?;
    let cal = cal_of(&p.cal, &map)?;
    let a: TaxiCommand = read_json(&p.cmd_a)?;
    let b: TaxiCommand = read_json(&p.cmd_b)?;
    Ok((map, cal, a, b, p.config()?))
}

fn print_report(r: &ConflictReport) {
    eprintln!("{} vs {}", r.pair[0], r.pair[1]);
    if r.features.is_empty() {
        eprintln!("  no shared node or segment");
    }
    for f in &r.features {
        eprintln!(
            "  {:<14} {:<13} gap {:>7.2}..{:<7.2} t_no {:.1} s  p = {:.4}",
            f.feature.to_string(),
            f.relation.to_string(),
            f.gap.t_min_s,
            f.gap.t_max_s,
            f.t_no,
            f.p
        );
    }
    eprintln!("overall p = {:.4}: {} warning, {}", r.overall.p, r.overall.level, r.overall.action.text);
}

fn detect(a: DetectArgs) -> Result<()> {
    let (map, cal, ca, cb, cfg) = load_pair(&a.pair)?;
    let report = detect_commands(&ca, &cb, &cal, &map, a.pair.cal.mode.into(), &cfg)?;
    print_report(&report);
    emit_json(a.out.as_deref(), &report)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let (map, cal, ca, cb, cfg) = load_pair(&a.pair)?;
    let rows = offset_sweep(&ca, &cb, &cal, &map, a.pair.cal.mode.into(), &cfg, &a.offsets)?;
    for r in &rows {
        eprintln!("{:>7} s  {:>7.2}%  {}", r.offset_s, 100.0 * r.probability, r.level);
    }
    emit(a.out.as_deref(), sweep_csv(&rows).as_bytes())
}

fn synth(a: SynthArgs) -> Result<()> {
    let map = map_of(&a.map)?;
    let profile: SynthProfile = read_json(&a.profile)?;
    let records = generate(&map, &profile, a.seed).map_err(|e| CliError::Validation(e.to_string()))?;
    eprintln!("{} fixes over {} day(s), seed {}", records.len(), profile.days, a.seed);
    let mut buf = Vec::new();
    if !records.is_empty() {
        write_track_csv(&mut buf, &records).map_err(|e| CliError::Io(e.to_string()))?;
    }
    emit(a.out.as_deref(), &buf)
}

fn report(a: ReportArgs) -> Result<()> {
    let map = map_of(&a.map)?;
    let registry = match &a.registry {
        Some(p) => Registry::load(p).map_err(|e| ingest_err(p, e))?,
        None => Registry::default(),
    };
    let (records, fixes) = load_fixes(&a.tracks, &map, None)?;
    let aircraft = build_aircraft_table(&records, &registry);
    let rep = constraint_report(&fixes, &map, &aircraft, &FleetTable::bundled(), &a.window.window());
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(p) = &a.csv {
        emit(Some(p), rep.to_csv().as_bytes())?;
    }
    emit(a.out.as_deref(), rep.to_markdown().as_bytes())
}
