use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use canopy::io::{self, csv_string, FeatureSet, FeatureWriter, RunConfig};
use canopy::mapstats::{altitude_histogram, density_grid};
use canopy::matching::{evaluate_scene, ConfusionCounts, Metric};
use canopy::metrics::{classify_size, evaluate_by_size, ReportRow, SizeClass};
use canopy::pipeline::{run_pipeline, DetectorPort, FileDetector, ProcessDetector, ScoreField};
use canopy::validation::{build_site_series, error_stats, SeriesKind};
use canopy::{BBox, Error, Region, Result};

#[derive(Parser, Debug)]
#[command(name = "canopy", version, about = "Evaluate and post-process shrub segmentation maps")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scene metrics as a one-row report (TP/FP/FN/P/R/F1).
    Evaluate(EvalArgs),
    /// Per-size-class report, one row per class plus All.
    EvaluateBySize(EvalArgs),
    /// Metrics across score thresholds 0, step, ..., 1.
    Sweep {
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Altitude filter, detection, dissolve, area filter and threshold.
    Postprocess(PostArgs),
    /// Detection centroids per hectare.
    Density {
        #[arg(long)]
        map: PathBuf,
        /// xmin,ymin,xmax,ymax; defaults to the map's bounding box.
        #[arg(long, value_parser = parse_extent, allow_hyphen_values = true)]
        extent: Option<BBox>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the grid cells as polygons.
        #[arg(long)]
        geojson: Option<PathBuf>,
    },
    /// Shrubs per 100 m altitude band, from the DEM value at each centroid.
    Histogram {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        dem: PathBuf,
        #[arg(long)]
        by_size: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-stratum median altitude.
        #[arg(long)]
        medians: Option<PathBuf>,
    },
    /// Observed vs predicted statistics over validation sites.
    Validate {
        /// Feature file with `site` features.
        #[arg(long)]
        sites: PathBuf,
        /// Observed ground truth.
        #[arg(long)]
        gts: PathBuf,
        /// Predicted map.
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value = "count", value_parser = parse_from_str::<SeriesKind>)]
        kind: SeriesKind,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-site pairs.
        #[arg(long)]
        scatter: Option<PathBuf>,
    },
    /// Size class of areas given directly or of every feature in a file.
    Classify {
        #[arg(long, conflicts_with = "areas")]
        features: Option<PathBuf>,
        #[arg(required_unless_present = "features")]
        areas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    dets: PathBuf,
    #[arg(long)]
    gts: PathBuf,
    /// Flat key = value run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_from_str::<Metric>)]
    metric: Option<Metric>,
    /// Overlap threshold in (0, 1].
    #[arg(long)]
    thr: Option<f64>,
    /// Score threshold in [0, 1].
    #[arg(long)]
    theta: Option<f64>,
    /// Value of the `data` column.
    #[arg(long, default_value = "scene")]
    data: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PostArgs {
    #[arg(long)]
    tiles: PathBuf,
    #[arg(long)]
    dem: PathBuf,
    /// Directory holding `<tile_id>.geojson` detector outputs.
    #[arg(long, conflicts_with = "detector_cmd")]
    detections_dir: Option<PathBuf>,
    /// External detector program, run once per tile.
    #[arg(long, required_unless_present = "detections_dir")]
    detector_cmd: Option<PathBuf>,
    /// Extra leading argument for the detector program (repeatable).
    #[arg(long = "detector-arg", allow_hyphen_values = true)]
    detector_args: Vec<String>,
    /// Scratch directory for detector outputs.
    #[arg(long)]
    work_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    min_alt: Option<f64>,
    #[arg(long)]
    min_area: Option<f64>,
    #[arg(long, value_parser = parse_from_str::<ScoreField>)]
    score_field: Option<ScoreField>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// CRS name written into the map.
    #[arg(long)]
    crs: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Run summary as key,value CSV.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_from_str<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_extent(s: &str) -> std::result::Result<BBox, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [a, b, c, d] if a < c && b < d && v.iter().all(|x| x.is_finite()) => Ok(BBox::new(a, b, c, d)),
        _ => Err("extent must be xmin,ymin,xmax,ymax with xmin < xmax and ymin < ymax".into()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) if p != Path::new("-") => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        _ => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map(RunConfig::read).transpose().map(Option::unwrap_or_default)
}

fn load_pair(eval: &EvalArgs) -> Result<(FeatureSet, FeatureSet)> {
    let d = io::read_features(&eval.dets)?;
    let g = if eval.gts == eval.dets {
        d.clone()
    } else {
        io::read_features(&eval.gts)?
    };
    d.check_crs(&g)?;
    Ok((d, g))
}

fn eval_config(eval: &EvalArgs) -> Result<RunConfig> {
    let mut cfg = load_config(eval.config.as_deref())?;
    if let Some(m) = eval.metric {
        cfg.metric = m;
    }
    if let Some(t) = eval.thr {
        cfg.overlap_threshold = t;
    }
    if let Some(t) = eval.theta {
        cfg.theta = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_evaluate(eval: &EvalArgs) -> Result<()> {
    let cfg = eval_config(eval)?;
    let (d, g) = load_pair(eval)?;
    let m = cfg.match_config()?;
    let res = evaluate_scene(&d.detections, &g.groundtruths, &m);
    let row = ReportRow::new(&eval.data, m.metric, m.overlap_threshold, "All", &res.counts);
    emit(eval.out.as_deref(), &csv_string(&[row])?)
}

fn cmd_evaluate_by_size(eval: &EvalArgs) -> Result<()> {
    let cfg = eval_config(eval)?;
    let (d, g) = load_pair(eval)?;
    let m = cfg.match_config()?;
    let b = evaluate_by_size(&d.detections, &g.groundtruths, &m)?;
    let mut rows: Vec<ReportRow> = SizeClass::ALL
        .iter()
        .map(|c| {
            let counts = b.by_class.get(c).copied().unwrap_or_default();
            ReportRow::new(&eval.data, m.metric, m.overlap_threshold, c.name(), &counts)
        })
        .collect();
    rows.push(ReportRow::new(&eval.data, m.metric, m.overlap_threshold, "All", &b.all));
    emit(eval.out.as_deref(), &csv_string(&rows)?)
}

#[derive(Serialize)]
struct SweepRow {
    theta: String,
    metric: String,
    threshold: String,
    #[serde(rename = "TP")]
    tp: u64,
    #[serde(rename = "FP")]
    fp: u64,
    #[serde(rename = "FN")]
    fn_: u64,
    #[serde(rename = "P")]
    precision: String,
    #[serde(rename = "R")]
    recall: String,
    #[serde(rename = "F1")]
    f1: String,
}

fn cmd_sweep(eval: &EvalArgs, step: f64) -> Result<()> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidArgument(format!("step must be in (0, 1], got {step}")));
    }
    let n = (1.0 / step).round() as usize;
    if ((n as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("step {step} does not divide 1")));
    }
    let cfg = eval_config(eval)?;
    let (d, g) = load_pair(eval)?;
    let mut rows = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let theta = i as f64 / n as f64;
        let mut m = cfg.match_config()?;
        m.score_threshold = theta;
        let c: ConfusionCounts = evaluate_scene(&d.detections, &g.groundtruths, &m).counts;
        let base = ReportRow::new(&eval.data, m.metric, m.overlap_threshold, "All", &c);
        rows.push(SweepRow {
            theta: format!("{theta:.2}"),
            metric: base.metric,
            threshold: base.threshold,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision: base.precision,
            recall: base.recall,
            f1: base.f1,
        });
    }
    emit(eval.out.as_deref(), &csv_string(&rows)?)
}

#[derive(Serialize)]
struct KeyValue {
    key: String,
    value: String,
}

fn kv(key: &str, value: impl ToString) -> KeyValue {
    KeyValue {
        key: key.into(),
        value: value.to_string(),
    }
}

fn cmd_postprocess(a: &PostArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(v) = a.min_alt {
        cfg.min_altitude = v;
    }
    if let Some(v) = a.min_area {
        cfg.min_area = v;
    }
    if let Some(v) = a.score_field {
        cfg.score_field = Some(v);
    }
    if let Some(v) = a.theta {
        cfg.theta = v;
    }
    cfg.validate()?;
    let workers = if a.workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        a.workers
    };
    let pc = cfg.pipeline_config(workers)?;
    let tiles = io::read_manifest(&a.tiles)?;
    let dem = io::read_dem(&a.dem)?;
    let detector: Box<dyn DetectorPort> = match (&a.detections_dir, &a.detector_cmd) {
        (Some(dir), _) => Box::new(FileDetector::new(dir)),
        (None, Some(prog)) => {
            let work = a.work_dir.clone().unwrap_or_else(|| std::env::temp_dir().join("canopy-detector"));
            std::fs::create_dir_all(&work).map_err(|e| Error::io(&work, e))?;
            let mut p = ProcessDetector::new(prog, work);
            p.args = a.detector_args.clone();
            Box::new(p)
        }
        (None, None) => unreachable!("clap requires a detector"),
    };
    let out = run_pipeline(&tiles, &dem, detector.as_ref(), &pc)?;
    for (tile, why) in &out.report.detector_failures {
        log::warn!("tile {tile} skipped: {why}");
    }
    let mut w = FeatureWriter::new(a.crs.as_deref());
    for (i, d) in out.map.iter().enumerate() {
        w.push_dissolved(d, &format!("shrub-{i}"), d.score(pc.score_field));
    }
    io::features::write_text(&a.out, &w.finish())?;
    if let Some(path) = &a.report {
        let r = &out.report;
        let rows = vec![
            kv("tiles_total", r.tiles_total),
            kv("tiles_kept", r.altitude.kept.len()),
            kv("tiles_below_altitude", r.altitude.below.len()),
            kv("tiles_without_dem", r.altitude.no_coverage.len()),
            kv("tiles_failed", r.detector_failures.len()),
            kv("raw_detections", r.raw_detections),
            kv("dissolved", r.dissolved),
            kv("removed_by_area", r.removed_by_area),
            kv("removed_by_score", r.removed_by_score),
            kv("final", out.map.len()),
            kv("score_field", pc.score_field),
        ];
        io::write_csv(path, &rows)?;
    }
    log::info!("wrote {} shrubs to {}", out.map.len(), a.out.display());
    Ok(())
}

fn map_regions(path: &Path) -> Result<(Option<String>, Vec<Region>)> {
    let fs = io::read_features(path)?;
    let regions = fs.detections.into_iter().map(|d| d.region).collect();
    Ok((fs.crs, regions))
}

fn cmd_density(map: &Path, extent: Option<BBox>, out: Option<&Path>, geojson: Option<&Path>) -> Result<()> {
    let (crs, regions) = map_regions(map)?;
    let extent = match extent {
        Some(e) => e,
        None => regions
            .iter()
            .filter_map(Region::bbox)
            .reduce(|a, b| a.union(&b))
            .ok_or_else(|| Error::InvalidArgument("map is empty; pass --extent".into()))?,
    };
    let grid = density_grid(&regions, extent);
    if grid.outside > 0 {
        log::warn!("{} shrubs lie outside the extent", grid.outside);
    }
    if let Some(p) = geojson {
        io::features::write_text(p, &grid.to_geojson(crs.as_deref()))?;
    }
    emit(out, &csv_string(&grid.rows())?)
}

fn cmd_histogram(map: &Path, dem: &Path, by_size: bool, out: Option<&Path>, medians: Option<&Path>) -> Result<()> {
    let (_, regions) = map_regions(map)?;
    let dem = io::read_dem(dem)?;
    let h = altitude_histogram(&regions, &dem, by_size);
    if let Some(p) = medians {
        io::write_csv(p, &h.median_rows())?;
    }
    emit(out, &csv_string(&h.rows())?)
}

#[derive(Serialize)]
struct StatsRow {
    unit: String,
    n: usize,
    rmse: f64,
    mae: f64,
    mbe: f64,
    r2_identity: Option<f64>,
    r2_fit: Option<f64>,
    pearson_r: Option<f64>,
}

fn cmd_validate(
    sites: &Path,
    gts: &Path,
    map: &Path,
    kind: SeriesKind,
    out: Option<&Path>,
    scatter: Option<&Path>,
) -> Result<()> {
    let s = io::read_features(sites)?;
    let g = io::read_features(gts)?;
    let m = io::read_features(map)?;
    s.check_crs(&g)?;
    s.check_crs(&m)?;
    g.check_crs(&m)?;
    if s.sites.is_empty() {
        return Err(Error::Parse {
            path: sites.to_path_buf(),
            message: "no `site` features".into(),
        });
    }
    let predicted: Vec<Region> = m.detections.into_iter().map(|d| d.region).collect();
    let series = build_site_series(&s.sites, &g.groundtruths, &predicted, kind)?;
    let e = error_stats(&series)?;
    if let Some(p) = scatter {
        io::write_csv(p, &series.scatter_rows())?;
    }
    let row = StatsRow {
        unit: series.unit.to_string(),
        n: e.n,
        rmse: e.rmse,
        mae: e.mae,
        mbe: e.mbe,
        r2_identity: e.r2_identity,
        r2_fit: e.r2_fit,
        pearson_r: e.pearson_r,
    };
    emit(out, &csv_string(&[row])?)
}

#[derive(Serialize)]
struct ClassRow {
    id: String,
    area_m2: f64,
    size: String,
}

fn cmd_classify(features: Option<&Path>, areas: &[f64], out: Option<&Path>) -> Result<()> {
    let items: Vec<(String, f64)> = match features {
        Some(p) => {
            let fs = io::read_features(p)?;
            let dets = fs
                .detection_ids
                .iter()
                .cloned()
                .zip(fs.detections.iter().map(|d| d.region.area()));
            let gts = fs.groundtruths.iter().map(|g| (g.id.clone(), g.region.area()));
            dets.chain(gts).collect()
        }
        None => areas.iter().enumerate().map(|(i, &a)| (i.to_string(), a)).collect(),
    };
    let rows = items
        .into_iter()
        .map(|(id, area)| {
            let class = classify_size(area)?;
            Ok(ClassRow {
                id,
                area_m2: area,
                size: class.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    emit(out, &csv_string(&rows)?)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Command::Evaluate(e) => cmd_evaluate(e),
        Command::EvaluateBySize(e) => cmd_evaluate_by_size(e),
        Command::Sweep { eval, step } => cmd_sweep(eval, *step),
        Command::Postprocess(p) => cmd_postprocess(p),
        Command::Density {
            map,
            extent,
            out,
            geojson,
        } => cmd_density(map, *extent, out.as_deref(), geojson.as_deref()),
        Command::Histogram {
            map,
            dem,
            by_size,
            out,
            medians,
        } => cmd_histogram(map, dem, *by_size, out.as_deref(), medians.as_deref()),
        Command::Validate {
            sites,
            gts,
            map,
            kind,
            out,
            scatter,
        } => cmd_validate(sites, gts, map, *kind, out.as_deref(), scatter.as_deref()),
        Command::Classify { features, areas, out } => cmd_classify(features.as_deref(), areas, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
