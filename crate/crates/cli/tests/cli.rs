use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use canopy::io::FeatureWriter;
use canopy::pipeline::{build_tile_grid, DemGrid};
use canopy::{BBox, Detection, GroundTruth, Point, Region, Site, Source};
use tempfile::TempDir;

fn canopy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_canopy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// One label covered by two predictions that each spill outside it.
fn split_scene(dir: &Path) -> (PathBuf, PathBuf) {
    let mut d = FeatureWriter::new(Some("EPSG:25830"));
    d.push_detection(&Detection::new(Region::rect(-0.5, 0.0, 1.0, 1.0), 0.9).unwrap(), "p0");
    d.push_detection(&Detection::new(Region::rect(1.0, 0.0, 2.5, 1.0), 0.7).unwrap(), "p1");
    let mut g = FeatureWriter::new(Some("EPSG:25830"));
    g.push_groundtruth(&GroundTruth::new(Region::rect(0.0, 0.0, 2.0, 1.0), "l0", Source::PI));
    (write(dir, "d.geojson", &d.finish()), write(dir, "g.geojson", &g.finish()))
}

#[test]
fn evaluate_prints_report_row() {
    let tmp = TempDir::new().unwrap();
    let (d, g) = split_scene(tmp.path());
    let o = canopy(&["evaluate", "--dets", s(&d), "--gts", s(&g), "--metric", "siou", "--thr", "0.5", "--theta", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "data,metric,threshold,size,TP,FP,FN,P,R,F1\nscene,S-IoU,50,All,2,0,0,100.00,100.00,100.00\n"
    );
    let o = canopy(&["evaluate", "--dets", s(&d), "--gts", s(&g), "--metric", "iou"]);
    assert_eq!(stdout(&o).lines().nth(1), Some("scene,IoU,50,All,0,2,1,0.00,0.00,0.00"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let tmp = TempDir::new().unwrap();
    let (d, g) = split_scene(tmp.path());
    let cfg = write(tmp.path(), "run.cfg", "# classical matching\nmetric = iou\noverlap_threshold = 0.75\n");
    let o = canopy(&["evaluate", "--dets", s(&d), "--gts", s(&g), "--config", s(&cfg)]);
    assert_eq!(stdout(&o).lines().nth(1), Some("scene,IoU,75,All,0,2,1,0.00,0.00,0.00"));
    let o = canopy(&["evaluate", "--dets", s(&d), "--gts", s(&g), "--config", s(&cfg), "--metric", "siou", "--thr", "0.5"]);
    assert_eq!(stdout(&o).lines().nth(1), Some("scene,S-IoU,50,All,2,0,0,100.00,100.00,100.00"));
    let bad = write(tmp.path(), "bad.cfg", "metrik = iou\n");
    let o = canopy(&["evaluate", "--dets", s(&d), "--gts", s(&g), "--config", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("metrik"));
}

#[test]
fn evaluate_by_size_lists_every_class() {
    let tmp = TempDir::new().unwrap();
    let (d, g) = split_scene(tmp.path());
    let o = canopy(&["evaluate-by-size", "--dets", s(&d), "--gts", s(&g), "--data", "PI"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let sizes: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(sizes, ["XS", "S", "M", "L", "XL", "XXL", "All"]);
    // the 2 m² label is class S
    assert!(out.contains("PI,S-IoU,50,S,2,0,0,"));
}

#[test]
fn sweep_is_monotone() {
    let tmp = TempDir::new().unwrap();
    let mut d = FeatureWriter::new(None);
    let mut g = FeatureWriter::new(None);
    for i in 0..12 {
        let x = 3.0 * i as f64;
        g.push_groundtruth(&GroundTruth::new(Region::rect(x, 0.0, x + 1.5, 1.5), format!("g{i}"), Source::FW));
        let shift = if i % 3 == 0 { 0.9 } else { 0.1 };
        let score = (i as f64 * 0.083 + 0.02) % 1.0;
        let det = Detection::new(Region::rect(x + shift, 0.1, x + shift + 1.5, 1.6), score).unwrap();
        d.push_detection(&det, &format!("d{i}"));
    }
    let dp = write(tmp.path(), "d.geojson", &d.finish());
    let gp = write(tmp.path(), "g.geojson", &g.finish());
    let o = canopy(&["sweep", "--dets", s(&dp), "--gts", s(&gp), "--metric", "iou"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<Vec<String>> = out.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[0][0], "0.00");
    assert_eq!(rows[20][0], "1.00");
    let n = |r: &Vec<String>, i: usize| r[i].parse::<u64>().unwrap();
    for w in rows.windows(2) {
        assert!(n(&w[1], 3) + n(&w[1], 4) <= n(&w[0], 3) + n(&w[0], 4));
        assert!(n(&w[1], 5) >= n(&w[0], 5));
    }
}

#[test]
fn usage_errors_exit_1() {
    let o = canopy(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    let o = canopy(&["evaluate", "--dets", "x.geojson"]);
    assert_eq!(o.status.code(), Some(1));
    let tmp = TempDir::new().unwrap();
    let (d, g) = split_scene(tmp.path());
    let o = canopy(&["evaluate", "--dets", s(&d), "--gts", s(&g), "--thr", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let o = canopy(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for cmd in ["evaluate", "evaluate-by-size", "sweep", "postprocess", "density", "histogram", "validate", "classify"] {
        assert!(stdout(&o).contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn data_errors_exit_2_and_name_the_feature() {
    let tmp = TempDir::new().unwrap();
    let (_, g) = split_scene(tmp.path());
    let bad = write(
        tmp.path(),
        "bad.geojson",
        r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]},"properties":{"role":"detection","score":0.5}},
            {"type":"Feature","geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]},"properties":{"role":"detection"}}]}"#,
    );
    let o = canopy(&["evaluate", "--dets", s(&bad), "--gts", s(&g)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("feature 1"), "{}", stderr(&o));
    assert!(stderr(&o).contains("bad.geojson"));

    let o = canopy(&["evaluate", "--dets", s(&tmp.path().join("missing.geojson")), "--gts", s(&g)]);
    assert_eq!(o.status.code(), Some(2));

    let junk = write(tmp.path(), "junk.geojson", "{not json");
    let o = canopy(&["evaluate", "--dets", s(&junk), "--gts", s(&g)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn crs_mismatch_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let (d, _) = split_scene(tmp.path());
    let mut g = FeatureWriter::new(Some("EPSG:4326"));
    g.push_groundtruth(&GroundTruth::new(Region::rect(0.0, 0.0, 2.0, 1.0), "l0", Source::PI));
    let g = write(tmp.path(), "g84.geojson", &g.finish());
    let o = canopy(&["evaluate", "--dets", s(&d), "--gts", s(&g)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CRS"));
}

#[test]
fn classify_areas_and_features() {
    let o = canopy(&["classify", "1.0", "1.72", "41.06", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "id,area_m2,size\n0,1.0,XS\n1,1.72,S\n2,41.06,XXL\n3,100.0,XXL\n");
    let o = canopy(&["classify", "--", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let tmp = TempDir::new().unwrap();
    let (d, _) = split_scene(tmp.path());
    let o = canopy(&["classify", "--features", s(&d)]);
    assert_eq!(stdout(&o), "id,area_m2,size\np0,1.5,XS\np1,1.5,XS\n");
}

/// Two tiles side by side above a ramp; the left one sits below 1900 m at
/// its southern edge but reaches above it, the scene is small enough to
/// check by eye.
struct PostScene {
    _tmp: TempDir,
    manifest: PathBuf,
    dem: PathBuf,
    dets: PathBuf,
}

fn post_scene() -> PostScene {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let grid = build_tile_grid(BBox::new(1000.0, 2000.0, 1100.0, 2050.0), 448, 0.13).unwrap();
    let tiles = grid.tiles();
    assert_eq!(tiles.len(), 2);
    let manifest = write(dir, "tiles.csv", &canopy::io::manifest::format_manifest(&tiles).unwrap());
    // altitude rises west to east: left tile tops out at 1880, right one at 2000
    let dem = DemGrid::from_fn(60, 30, 1000.0, 2000.0, 2.0, |x, _| if x < 1060.0 { 1880.0 } else { 2000.0 });
    let dem = write(dir, "dem.asc", &canopy::io::dem::format_dem(&dem));
    let dets = dir.join("dets");
    std::fs::create_dir(&dets).unwrap();
    let px = |t: &canopy::pipeline::Tile, x0: f64, y0: f64, x1: f64, y1: f64, score: f64| {
        let a = t.world_to_pixel(Point::new(x0, y0));
        let b = t.world_to_pixel(Point::new(x1, y1));
        Detection::new(Region::rect(a.x, b.y, b.x, a.y), score).unwrap()
    };
    let (left, right) = (&tiles[0], &tiles[1]);
    let mut w = FeatureWriter::new(None);
    w.push_detection(&px(left, 1010.0, 2010.0, 1012.0, 2012.0, 0.9), "a");
    write(&dets, "r0_c0.geojson", &w.finish());
    let mut w = FeatureWriter::new(None);
    // kept, large
    w.push_detection(&px(right, 1070.0, 2010.0, 1072.0, 2012.0, 0.9), "b");
    // too small
    w.push_detection(&px(right, 1080.0, 2010.0, 1081.0, 2011.0, 0.9), "c");
    // low score
    w.push_detection(&px(right, 1090.0, 2010.0, 1092.0, 2012.0, 0.2), "d");
    // two overlapping masks of one shrub
    w.push_detection(&px(right, 1070.0, 2030.0, 1072.0, 2032.0, 0.4), "e1");
    w.push_detection(&px(right, 1071.0, 2030.0, 1073.0, 2032.0, 0.8), "e2");
    write(&dets, "r0_c1.geojson", &w.finish());
    PostScene {
        manifest,
        dem,
        dets,
        _tmp: tmp,
    }
}

#[test]
fn postprocess_end_to_end_and_deterministic() {
    let sc = post_scene();
    let out1 = sc.dets.parent().unwrap().join("map1.geojson");
    let out2 = sc.dets.parent().unwrap().join("map2.geojson");
    let report = sc.dets.parent().unwrap().join("report.csv");
    let run = |out: &Path, workers: &str| {
        canopy(&[
            "postprocess",
            "--tiles",
            s(&sc.manifest),
            "--dem",
            s(&sc.dem),
            "--detections-dir",
            s(&sc.dets),
            "--min-alt",
            "1900",
            "--min-area",
            "1.04",
            "--score-field",
            "max",
            "--theta",
            "0.5",
            "--workers",
            workers,
            "--out",
            s(out),
            "--report",
            s(&report),
        ])
    };
    let o = run(&out1, "1");
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&out2, "4");
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(&out1).unwrap();
    assert_eq!(a, std::fs::read(&out2).unwrap());

    let map = canopy::io::read_features(&out1).unwrap();
    assert_eq!(map.detections.len(), 2);
    let areas: Vec<f64> = map.detections.iter().map(|d| d.region.area()).collect();
    assert!((areas[0] - 4.0).abs() < 1e-6 && (areas[1] - 6.0).abs() < 1e-6, "{areas:?}");
    assert_eq!(map.detections[1].score, 0.8);
    let rep = std::fs::read_to_string(&report).unwrap();
    assert!(rep.contains("tiles_below_altitude,1\n"));
    assert!(rep.contains("removed_by_area,1\n"));
    assert!(rep.contains("removed_by_score,1\n"));
    assert!(rep.contains("final,2\n"));

    // avg of the merged shrub is 0.6; thresholding on avg at 0.65 drops it
    let o = canopy(&[
        "postprocess", "--tiles", s(&sc.manifest), "--dem", s(&sc.dem), "--detections-dir", s(&sc.dets),
        "--score-field", "avg", "--theta", "0.65", "--out", s(&out2),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(canopy::io::read_features(&out2).unwrap().detections.len(), 1);
}

#[test]
fn postprocess_missing_detector_dir_is_data_error() {
    let sc = post_scene();
    let out = sc.dets.parent().unwrap().join("map.geojson");
    let o = canopy(&[
        "postprocess", "--tiles", s(&sc.manifest), "--dem", s(&sc.dem), "--detections-dir", "/nonexistent/dir", "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = canopy(&["postprocess", "--tiles", s(&sc.manifest), "--dem", s(&sc.dem), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

fn map_file(dir: &Path, regions: &[Region]) -> PathBuf {
    let mut w = FeatureWriter::new(None);
    for (i, r) in regions.iter().enumerate() {
        w.push_detection(&Detection::new(r.clone(), 0.9).unwrap(), &format!("m{i}"));
    }
    write(dir, "map.geojson", &w.finish())
}

#[test]
fn density_histogram_and_geojson() {
    let tmp = TempDir::new().unwrap();
    let regions = vec![
        Region::rect(10.0, 10.0, 11.0, 11.0),
        Region::rect(20.0, 20.0, 21.0, 21.0),
        Region::rect(150.0, 20.0, 152.0, 22.0),
    ];
    let map = map_file(tmp.path(), &regions);
    let gj = tmp.path().join("grid.geojson");
    let o = canopy(&["density", "--map", s(&map), "--extent", "0,0,199,99", "--geojson", s(&gj)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "col,row,x_min,y_min,count\n0,0,0.0,0.0,2\n1,0,100.0,0.0,1\n");
    assert!(std::fs::read_to_string(&gj).unwrap().contains("\"count\":2"));

    let dem = DemGrid::from_fn(100, 50, 0.0, 0.0, 2.0, |x, _| 2000.0 + x);
    let dem = write(tmp.path(), "dem.asc", &canopy::io::dem::format_dem(&dem));
    let med = tmp.path().join("med.csv");
    let o = canopy(&["histogram", "--map", s(&map), "--dem", s(&dem), "--by-size", "--medians", s(&med)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("stratum,bin,lo,hi,count\nAll,<1900,,1900.0,0\n"));
    // sampled at cell centres x = 11, 21 and 151
    assert!(out.contains("All,2000-2100,2000.0,2100.0,2\n"), "{out}");
    assert!(out.contains("All,2100-2200,2100.0,2200.0,1\n"));
    assert!(out.contains("XS,2000-2100,2000.0,2100.0,2\n"));
    assert!(out.contains("M,2100-2200,2100.0,2200.0,1\n"));
    let med = std::fs::read_to_string(med).unwrap();
    assert!(med.contains("All,3,2021.0\n"), "{med}");
    assert!(med.contains("M,1,2151.0\n"), "{med}");
}

#[test]
fn validate_reports_stats_and_scatter() {
    let tmp = TempDir::new().unwrap();
    let mut sites = FeatureWriter::new(None);
    let mut gts = FeatureWriter::new(None);
    let mut preds = Vec::new();
    for k in 0..3 {
        let x = 200.0 * k as f64;
        // 50 m x 50 m: a quarter hectare
        sites.push_site(&Site {
            id: format!("s{k}"),
            region: Region::rect(x, 0.0, x + 50.0, 50.0),
        });
        for i in 0..(k + 1) {
            let gx = x + 5.0 + 5.0 * i as f64;
            gts.push_groundtruth(&GroundTruth::new(Region::rect(gx, 5.0, gx + 1.0, 6.0), format!("g{k}_{i}"), Source::FW));
        }
        for i in 0..(k + 2) {
            let gx = x + 5.0 + 5.0 * i as f64;
            preds.push(Region::rect(gx, 20.0, gx + 1.0, 21.0));
        }
    }
    let sp = write(tmp.path(), "sites.geojson", &sites.finish());
    let gp = write(tmp.path(), "gts.geojson", &gts.finish());
    let mp = map_file(tmp.path(), &preds);
    let sc = tmp.path().join("scatter.csv");
    let o = canopy(&["validate", "--sites", s(&sp), "--gts", s(&gp), "--map", s(&mp), "--kind", "count", "--scatter", s(&sc)]);
    assert!(o.status.success(), "{}", stderr(&o));
    // one extra shrub per quarter hectare everywhere: +4 per ha, and
    // r2 against the 1:1 line is 1 - 48/32
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..6], ["count_per_ha", "3", "4.0", "4.0", "4.0", "-0.5"]);
    assert!((row[6].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert!((row[7].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(
        std::fs::read_to_string(sc).unwrap(),
        "site_id,observed,predicted,unit\ns0,4.0,8.0,count_per_ha\ns1,8.0,12.0,count_per_ha\ns2,12.0,16.0,count_per_ha\n"
    );
    let o = canopy(&["validate", "--sites", s(&gp), "--gts", s(&gp), "--map", s(&mp)]);
    assert_eq!(o.status.code(), Some(2));
}
