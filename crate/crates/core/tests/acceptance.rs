//! Acceptance criteria. Prints one `[PASS]` / `[FAIL]` line per criterion
//! and fails at the end if any criterion failed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parkwise_core::geo::distance_matrix;
use parkwise_core::occupancy::{LotCount, OccupancySnapshot, OccupancyState, ParkingLot, Registry, TrackState, TrackerConfig};
use parkwise_core::perception::{iou, BBox};
use parkwise_core::recommender::{best_lot_index, recommend, RecommendationRequest};
use parkwise_core::service::{http, replay_log, Engine, ServiceConfig};
use parkwise_core::sim::{build_recommendation_grid, generate_stream, stream_to_string, Origins, Scenario, StreamSpec};
use parkwise_core::{haversine_km, GeoPoint};
use rand::Rng;

type Outcome = Result<String, String>;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_criterion(n: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let result = result.and_then(|detail| {
        if elapsed <= limit {
            Ok(detail)
        } else {
            Err(format!("took {elapsed:.2?}, limit {limit:?}"))
        }
    });
    match &result {
        Ok(detail) => println!("[PASS] {n}. {name} ({elapsed:.2?}): {detail}"),
        Err(why) => println!("[FAIL] {n}. {name} ({elapsed:.2?}): {why}"),
    }
    result.is_ok()
}

fn point(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

fn c1_haversine() -> Outcome {
    let mut rng = common::rng(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (la, lo) = common::random_point(&mut rng);
        let (lb, lob) = common::random_point(&mut rng);
        let want = common::great_circle_km(la, lo, lb, lob);
        let got = haversine_km(point(la, lo), point(lb, lob));
        let rel = if want == 0.0 { got.abs() } else { (got - want).abs() / want };
        worst = worst.max(rel);
    }
    ensure(worst < 1e-12, || format!("worst relative error {worst:e}"))?;

    let mut planar_worst = 0.0f64;
    let mut n = 0;
    while n < 100 {
        let lat = rng.random_range(-60.0..60.0);
        let lon = rng.random_range(-179.0..179.0);
        let (lb, lob) = (lat + rng.random_range(-0.03..0.03), lon + rng.random_range(-0.03..0.03));
        let d = haversine_km(point(lat, lon), point(lb, lob));
        if d >= 5.0 || d == 0.0 {
            continue;
        }
        n += 1;
        let planar = common::equirectangular_km(lat, lon, lb, lob);
        planar_worst = planar_worst.max((d - planar).abs() / d);
    }
    ensure(planar_worst < 0.005, || format!("planar disagreement {planar_worst:e}"))?;
    Ok(format!("max rel err {worst:.1e}; short-range planar diff {planar_worst:.1e}"))
}

fn c2_iou() -> Outcome {
    let mut rng = common::rng(2);
    let to_box = |v: [i64; 4]| BBox::new(v[0] as f64, v[1] as f64, v[2] as f64, v[3] as f64).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let a = common::random_int_box(&mut rng, 40);
        let b = common::random_int_box(&mut rng, 40);
        let (inter, union) = common::raster_iou(a, b);
        worst = worst.max((iou(&to_box(a), &to_box(b)) - inter as f64 / union as f64).abs());
    }
    ensure(worst < 1e-12, || format!("raster disagreement {worst:e}"))?;

    for _ in 0..2000 {
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
            let (x, y) = (rng.random_range(0.0..300.0), rng.random_range(0.0..300.0));
            BBox::new(x, y, x + rng.random_range(0.5..150.0), y + rng.random_range(0.5..150.0)).unwrap()
        };
        let (a, b) = (mk(&mut rng), mk(&mut rng));
        let v = iou(&a, &b);
        ensure(v == iou(&b, &a), || format!("asymmetric on {a:?} {b:?}"))?;
        ensure((0.0..=1.0).contains(&v), || format!("out of bounds {v}"))?;
        ensure(iou(&a, &a) == 1.0, || format!("identity fails on {a:?}"))?;
        let inner = BBox::new(
            a.x_min() + a.width() / 4.0,
            a.y_min() + a.height() / 4.0,
            a.x_max() - a.width() / 4.0,
            a.y_max() - a.height() / 4.0,
        )
        .unwrap();
        let ratio = inner.area() / a.area();
        ensure((iou(&a, &inner) - ratio).abs() < 1e-12, || format!("containment fails on {a:?}"))?;
    }
    Ok(format!("500 integer pairs, max diff {worst:.1e}; 2000-case property sweep"))
}

const VERIFIED_CELLS: [(f64, &str, &str); 16] = [
    (0.1, "Bushhill", "5"),
    (0.1, "Waterval Ct", "6"),
    (0.25, "Waterval Ct", "6"),
    (0.25, "Eldoraigne", "5"),
    (0.5, "Bushhill", "3"),
    (0.5, "Dobsonville", "2"),
    (0.75, "Bushhill", "3"),
    (0.75, "Waterval Ct", "4"),
    (0.9, "Bushhill", "3"),
    (0.9, "Waterval Ct", "4"),
    (0.9, "Dobsonville", "2"),
    (0.9, "Eldoraigne", "3"),
    (0.999, "Bushhill", "3"),
    (0.999, "Waterval Ct", "7"),
    (0.999, "Dobsonville", "2"),
    (0.999, "Eldoraigne", "3"),
];

fn c3_fixed_grid() -> Outcome {
    let scenario = Scenario::load(&data("scenarios/johannesburg_fixed.json")).map_err(|e| e.to_string())?;
    let grid = build_recommendation_grid(&scenario).map_err(|e| e.to_string())?;
    for (alpha, origin, lot) in VERIFIED_CELLS {
        let got = grid.cell(alpha, origin);
        ensure(got == Some(lot), || format!("({alpha}, {origin}) = {got:?}, want {lot}"))?;
    }
    let Origins::Fixed(matrix) = &scenario.origins else {
        return Err("scenario is not a fixed-matrix scenario".into());
    };
    let lots = scenario.lot_ids();
    let spots: Vec<u32> = [3, 5, 8, 3, 10, 7, 1].to_vec();
    ensure(grid.spots.values().copied().collect::<Vec<_>>() == spots, || format!("spots {:?}", grid.spots))?;
    let mut checked = 0;
    for (ai, &alpha) in grid.alphas.iter().enumerate() {
        for (oi, origin) in grid.origins.iter().enumerate() {
            let d: Vec<f64> = lots.iter().map(|l| matrix[origin][l]).collect();
            let want = common::brute_force_best(&d, &spots, alpha).map(|i| lots[i].clone());
            ensure(grid.cells[ai][oi] == want, || format!("({alpha}, {origin}) = {:?}, oracle {want:?}", grid.cells[ai][oi]))?;
            checked += 1;
        }
    }
    ensure(checked == 40, || format!("grid has {checked} cells"))?;
    Ok(format!("16 verified cells exact; all {checked} cells equal the brute-force oracle"))
}

fn c4_equivalence() -> Outcome {
    let mut rng = common::rng(4);
    let alphas = [0.001, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999];
    let mut checked = 0;
    for r in 0..3 {
        let n = rng.random_range(4..12);
        let lots: Vec<ParkingLot> = (0..n)
            .map(|i| {
                let loc = point(rng.random_range(-26.4..-25.8), rng.random_range(27.7..28.4));
                ParkingLot::new(format!("r{r}-{i}"), format!("lot {i}"), loc, vec![format!("r{r}-cam{i}")])
            })
            .collect();
        let spots: Vec<u32> = (0..n).map(|_| if rng.random_bool(0.25) { 0 } else { rng.random_range(1..15) }).collect();
        let snapshot = OccupancySnapshot {
            version: 1,
            as_of_ms: None,
            lots: lots
                .iter()
                .zip(&spots)
                .map(|(l, &m)| LotCount { lot_id: l.lot_id.clone(), available: m, last_update_ms: None })
                .collect(),
            cameras: vec![],
        };
        let origins: Vec<GeoPoint> = (0..5)
            .map(|_| point(rng.random_range(-26.4..-25.8), rng.random_range(27.7..28.4)))
            .collect();
        let matrix = distance_matrix(&origins, &lots).map_err(|e| e.to_string())?;
        for &alpha in &alphas {
            for (o, origin) in origins.iter().enumerate() {
                let want = common::brute_force_best(&matrix[o], &spots, alpha);
                let single = best_lot_index(&snapshot, &lots, *origin, alpha).ok();
                let req = RecommendationRequest::new(*origin, alpha, None).map_err(|e| e.to_string())?;
                let ranked = recommend(&snapshot, &lots, &req).ok().map(|r| r.best().index);
                ensure(single == want && ranked == want, || {
                    format!("registry {r}, alpha {alpha}, origin {o}: single {single:?}, ranked {ranked:?}, oracle {want:?}")
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (alpha, origin, registry) cases identical"))
}

fn c5_tracker(dir: &Path) -> Outcome {
    let spec = StreamSpec::load(&data("streams/three_spots.json")).map_err(|e| e.to_string())?;
    ensure(spec.seed == 42 && spec.frames == 200 && spec.dropout == 0.1 && spec.cameras[0].spots.len() == 3, || {
        "three_spots.json does not describe the criterion's stream".into()
    })?;
    let config = TrackerConfig::default();
    let events = generate_stream(&spec).map_err(|e| e.to_string())?;
    let truth = &spec.cameras[0].spots;
    for e in &events {
        for d in &e.detections {
            let best = truth.iter().map(|t| iou(t, &d.bbox)).fold(0.0, f64::max);
            ensure(best >= config.tau_match, || format!("frame {} jitter drops IoU to {best}", e.frame_index))?;
        }
    }

    let mut state = OccupancyState::new(Registry::johannesburg(), config.clone()).map_err(|e| e.to_string())?;
    for e in &events {
        state.apply_event(e).map_err(|err| err.to_string())?;
        let cam = state.camera(&e.camera_id).ok_or("camera missing")?;
        let active: Vec<_> = cam.tracks.iter().filter(|t| t.state == TrackState::Active).collect();
        ensure(active.len() <= 3, || format!("frame {}: {} active tracks", e.frame_index, active.len()))?;
        for (i, a) in active.iter().enumerate() {
            for b in &active[i + 1..] {
                let v = iou(&a.smoothed_bbox, &b.smoothed_bbox);
                ensure(v < config.tau_match, || format!("frame {}: tracks {} and {} overlap at {v}", e.frame_index, a.track_id, b.track_id))?;
            }
        }
    }
    let live = state.snapshot();
    ensure(live.available("3") == 3, || format!("final count {}", live.available("3")))?;

    let log = dir.join("three_spots.jsonl");
    std::fs::write(&log, stream_to_string(&events)).map_err(|e| e.to_string())?;
    let mut a = replay_log(&log, Registry::johannesburg(), config.clone()).map_err(|e| e.to_string())?;
    let mut b = replay_log(&log, Registry::johannesburg(), config).map_err(|e| e.to_string())?;
    let (ja, jb) = (a.state.snapshot().canonical_json(), b.state.snapshot().canonical_json());
    ensure(ja == jb, || "replays differ".into())?;
    ensure(ja == live.canonical_json(), || format!("replay {ja}\nlive   {}", live.canonical_json()))?;
    Ok(format!("final count 3 after {} frames; replay byte-identical ({} bytes)", events.len(), ja.len()))
}

fn c6_service(dir: &Path) -> Outcome {
    let spec = StreamSpec::load(&data("streams/johannesburg.json")).map_err(|e| e.to_string())?;
    let events = generate_stream(&spec).map_err(|e| e.to_string())?;
    let stream_path = dir.join("johannesburg.jsonl");
    std::fs::write(&stream_path, stream_to_string(&events)).map_err(|e| e.to_string())?;

    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data("scenarios/johannesburg_streams.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    doc["streams"] = serde_json::json!([stream_path]);
    doc["alphas"] = serde_json::json!([0.5]);
    let scenario = Scenario::from_json(&doc.to_string(), dir).map_err(|e| e.to_string())?;
    let offline = build_recommendation_grid(&scenario).map_err(|e| e.to_string())?;
    let Origins::Points(origins) = &scenario.origins else {
        return Err("scenario has no coordinates".into());
    };
    ensure(origins.len() == 5, || format!("{} origins", origins.len()))?;

    let log_path = dir.join("service.log");
    let config = ServiceConfig {
        log_path: log_path.clone(),
        tracker: scenario.tracker.clone(),
        ..ServiceConfig::default()
    };
    let engine = Arc::new(Engine::open(&config).map_err(|e| e.to_string())?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let issued: Vec<(String, String)> = rt.block_on(async {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
        let base = format!("http://{}", listener.local_addr().map_err(|e| e.to_string())?);
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let server = tokio::spawn(http::serve(engine.clone(), listener, async {
            let _ = stopped.await;
        }));
        let client = reqwest::Client::new();

        for e in &events {
            let resp = client
                .post(format!("{base}/v1/events"))
                .body(e.to_wire())
                .send()
                .await
                .map_err(|e| e.to_string())?;
            if !resp.status().is_success() {
                return Err(format!("ingest frame {} on {}: {}", e.frame_index, e.camera_id, resp.status()));
            }
        }

        let mut issued = Vec::new();
        for (o, origin) in origins.iter().enumerate() {
            let url = format!(
                "{base}/v1/recommend?lat={}&lon={}&alpha=0.5",
                origin.location.lat_deg(),
                origin.location.lon_deg()
            );
            let body: serde_json::Value = client.get(url).send().await.map_err(|e| e.to_string())?.json().await.map_err(|e| e.to_string())?;
            let lot = body["best"]["lot_id"].as_str().ok_or_else(|| format!("no best lot in {body}"))?.to_string();
            let want = offline.cells[0][o].clone();
            if want.as_deref() != Some(lot.as_str()) {
                return Err(format!("{}: service {lot}, simulator {want:?}", origin.name));
            }
            let id = body["recommendation_id"].as_str().ok_or("no recommendation_id")?.to_string();
            issued.push((id, lot));
        }

        for (id, lot) in &issued {
            let resp = client
                .post(format!("{base}/v1/feedback"))
                .json(&serde_json::json!({"recommendation_id": id, "accepted": true, "chosen_lot_id": lot}))
                .send()
                .await
                .map_err(|e| e.to_string())?;
            if !resp.status().is_success() {
                return Err(format!("feedback for {id}: {}", resp.status()));
            }
        }
        let _ = stop.send(());
        server.await.map_err(|e| e.to_string())?.map_err(|e| e.to_string())?;
        Ok(issued)
    })?;
    drop(engine);

    let replay = replay_log(&log_path, Registry::johannesburg(), scenario.tracker.clone()).map_err(|e| e.to_string())?;
    ensure(replay.detections == events.len(), || format!("replayed {} of {} detections", replay.detections, events.len()))?;
    for (id, lot) in &issued {
        ensure(replay.issued.get(id) == Some(lot), || format!("{id} not recovered as issued"))?;
        let fb = replay.feedback.get(id).ok_or_else(|| format!("feedback for {id} lost"))?;
        ensure(fb.len() == 1 && fb[0].accepted && fb[0].chosen_lot_id.as_deref() == Some(lot.as_str()), || {
            format!("feedback for {id} recovered as {fb:?}")
        })?;
    }
    let lots: Vec<&str> = issued.iter().map(|(_, l)| l.as_str()).collect();
    Ok(format!("{} events ingested over HTTP; lots {lots:?} match the simulator; {} feedback records replayed", events.len(), issued.len()))
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let c5_dir = dir.path().join("c5");
    let c6_dir = dir.path().join("c6");
    std::fs::create_dir_all(&c5_dir).unwrap();
    std::fs::create_dir_all(&c6_dir).unwrap();

    let results = [
        run_criterion(1, "haversine oracle agreement", Duration::from_secs(1), c1_haversine),
        run_criterion(2, "IoU oracle agreement", Duration::from_secs(5), c2_iou),
        run_criterion(3, "fixed-matrix grid reproduction", Duration::from_secs(1), c3_fixed_grid),
        run_criterion(4, "single-pass and brute-force equivalence", Duration::from_secs(1), c4_equivalence),
        run_criterion(5, "tracker correctness", Duration::from_secs(10), || c5_tracker(&c5_dir)),
        run_criterion(6, "end-to-end service agreement", Duration::from_secs(30), || c6_service(&c6_dir)),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
