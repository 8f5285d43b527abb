use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use parkwise_core::occupancy::{Registry, TrackerConfig};
use parkwise_core::perception::parse_annotations;
use parkwise_core::recommender::{recommend_with_fixed_distances, RecommendError, DEFAULT_ALPHA};
use parkwise_core::service::config::Overrides;
use parkwise_core::service::{http, Engine, ServiceConfig};
use parkwise_core::sim::{
    self, build_distance_table, build_recommendation_grid, generate_stream, render_distances, render_grid,
    render_scores, resolve_spots, write_stream, Scenario, SimError, StreamSpec,
};
use parkwise_core::{haversine_km, GeoPoint};

#[derive(Parser)]
#[command(name = "parkwise", version, about = "Parking occupancy tracking and lot recommendation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Distance table, recommendation grid and score dump for a scenario.
    Simulate {
        scenario: PathBuf,
        /// Write distances.csv, grid.csv, scores.csv and report.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Origin-to-lot distance table.
    Distances {
        scenario: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Best lot for every (alpha, origin) pair.
    Grid {
        scenario: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Generate a synthetic detection stream.
    GenStream {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Replay an event log and print the final free-spot count per lot.
    Track {
        eventlog: PathBuf,
        #[arg(long)]
        registry: Option<PathBuf>,
        /// Tracker configuration (JSON).
        #[arg(long)]
        tracker: Option<PathBuf>,
    },
    /// One-shot offline recommendation.
    Recommend {
        #[arg(long, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long, allow_hyphen_values = true)]
        lon: f64,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        registry: Option<PathBuf>,
        /// Free spots per lot, e.g. `1=3,2=5`.
        #[arg(long, conflicts_with = "events")]
        spots: Option<String>,
        /// Event log to derive free spots from.
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Convert a COCO-style annotation file into wire-format events.
    ConvertAnnotations {
        annotations: PathBuf,
        #[arg(long)]
        lot: String,
        #[arg(long)]
        camera: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

enum CliError {
    /// Bad input: exit 1.
    Validation(String),
    /// Valid input with no answer: exit 2.
    Computation(String),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Recommend(r) => CliError::Computation(r.to_string()),
            SimError::NothingToCompute => CliError::Computation(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Computation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn load_registry(path: Option<&Path>) -> Result<Registry, CliError> {
    match path {
        Some(p) => Registry::load(p).map_err(validation),
        None => Ok(Registry::johannesburg()),
    }
}

fn load_tracker(path: Option<&Path>) -> Result<TrackerConfig, CliError> {
    let Some(p) = path else {
        return Ok(TrackerConfig::default());
    };
    let text = std::fs::read_to_string(p).map_err(|e| validation(format!("{}: {e}", p.display())))?;
    let cfg: TrackerConfig = serde_json::from_str(&text).map_err(|e| validation(format!("{}: {e}", p.display())))?;
    cfg.validate().map_err(validation)?;
    Ok(cfg)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Serve {
            config,
            listen,
            registry,
            log,
        } => serve(config, Overrides {
            listen,
            registry_path: registry,
            log_path: log,
        }),
        Command::Simulate { scenario, out } => simulate(&scenario, out.as_deref()),
        Command::Distances { scenario, csv } => {
            let s = Scenario::load(&scenario)?;
            let table = build_distance_table(&s)?;
            let r = render_distances(&table, None);
            print!("{}", if csv { r.csv } else { r.text });
            Ok(())
        }
        Command::Grid { scenario, csv } => {
            let s = Scenario::load(&scenario)?;
            let grid = build_recommendation_grid(&s)?;
            let r = render_grid(&grid);
            print!("{}", if csv { r.csv } else { r.text });
            Ok(())
        }
        Command::GenStream { spec, output } => {
            let spec = StreamSpec::load(&spec)?;
            let events = generate_stream(&spec)?;
            write_stream(&events, &output)?;
            eprintln!("wrote {} events to {}", events.len(), output.display());
            Ok(())
        }
        Command::Track {
            eventlog,
            registry,
            tracker,
        } => {
            let registry = load_registry(registry.as_deref())?;
            let tracker = load_tracker(tracker.as_deref())?;
            let snap = sim::track_log(&eventlog, registry.clone(), tracker)?;
            for (lot, count) in registry.lots().iter().zip(&snap.lots) {
                println!("{}\t{}\t{}", lot.lot_id, count.available, lot.name);
            }
            Ok(())
        }
        Command::Recommend {
            lat,
            lon,
            alpha,
            registry,
            spots,
            events,
            k,
        } => one_shot(lat, lon, alpha, registry.as_deref(), spots.as_deref(), events.as_deref(), k),
        Command::ConvertAnnotations {
            annotations,
            lot,
            camera,
            output,
        } => {
            let text = std::fs::read_to_string(&annotations).map_err(|e| validation(format!("{}: {e}", annotations.display())))?;
            let events = parse_annotations(&text, &lot, &camera).map_err(validation)?;
            write_stream(&events, &output)?;
            eprintln!("wrote {} events to {}", events.len(), output.display());
            Ok(())
        }
    }
}

fn simulate(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let scenario = Scenario::load(path)?;
    let spots = resolve_spots(&scenario)?;
    let mut report = String::new();
    let distances = match build_distance_table(&scenario) {
        Ok(t) => Some(render_distances(&t, Some(&spots))),
        Err(SimError::NothingToCompute) => None,
        Err(e) => return Err(e.into()),
    };
    if let Some(d) = &distances {
        report.push_str("Distances (km) and open spots\n\n");
        report.push_str(&d.text);
        report.push('\n');
    }
    let grid = build_recommendation_grid(&scenario)?;
    let rendered = render_grid(&grid);
    report.push_str("Recommended lot by alpha and origin\n\n");
    report.push_str(&rendered.text);
    print!("{report}");

    if let Some(dir) = out {
        let write = |name: &str, body: &str| {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| validation(format!("{}: {e}", p.display())))
        };
        std::fs::create_dir_all(dir).map_err(|e| validation(format!("{}: {e}", dir.display())))?;
        if let Some(d) = &distances {
            write("distances.csv", &d.csv)?;
        }
        write("grid.csv", &rendered.csv)?;
        write("scores.csv", &render_scores(&grid))?;
        write("report.txt", &report)?;
    }
    Ok(())
}

fn parse_spots(text: &str) -> Result<HashMap<String, u32>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| validation(format!("expected lot=count, got `{pair}`")))?;
            let v: u32 = v.trim().parse().map_err(|_| validation(format!("bad count in `{pair}`")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn one_shot(
    lat: f64,
    lon: f64,
    alpha: f64,
    registry: Option<&Path>,
    spots: Option<&str>,
    events: Option<&Path>,
    k: Option<usize>,
) -> Result<(), CliError> {
    let origin = GeoPoint::new(lat, lon).map_err(validation)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(validation(RecommendError::Alpha(alpha)));
    }
    let registry = load_registry(registry)?;
    let mut counts: HashMap<String, u32> = match (spots, events) {
        (Some(s), _) => parse_spots(s)?,
        (None, Some(log)) => {
            let snap = sim::track_log(log, registry.clone(), TrackerConfig::default())?;
            snap.lots.into_iter().map(|l| (l.lot_id, l.available)).collect()
        }
        (None, None) => HashMap::new(),
    };
    if let Some(unknown) = counts.keys().find(|id| registry.get(id).is_none()) {
        return Err(validation(format!("unknown lot `{unknown}`")));
    }
    let distances: Vec<(String, f64)> = registry
        .lots()
        .iter()
        .map(|l| (l.lot_id.clone(), haversine_km(origin, l.location)))
        .collect();
    for (id, _) in &distances {
        counts.entry(id.clone()).or_insert(0);
    }
    let top_k = match k {
        Some(k) => Some(std::num::NonZeroUsize::new(k).ok_or_else(|| validation("k must be positive"))?),
        None => None,
    };
    let ranking = recommend_with_fixed_distances(&distances, &counts, alpha, top_k).map_err(|e| match e {
        RecommendError::NoAvailability => CliError::Computation(e.to_string()),
        other => validation(other),
    })?;
    println!("rank\tlot\tdistance_km\tspots\tobjective\tname");
    for (i, s) in ranking.ranked.iter().enumerate() {
        let name = registry.get(&s.lot_id).map_or("", |l| l.name.as_str());
        println!("{}\t{}\t{:.4}\t{}\t{:.6}\t{}", i + 1, s.lot_id, s.distance_km, s.spots, s.objective, name);
    }
    Ok(())
}

fn serve(config: Option<PathBuf>, flags: Overrides) -> Result<(), CliError> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let base = match &config {
        Some(p) => ServiceConfig::load(p).map_err(validation)?,
        None => ServiceConfig::default(),
    };
    let cfg = base.with_overrides(&flags, &Overrides::from_env());
    let engine = Arc::new(Engine::open(&cfg).map_err(validation)?);
    let runtime = tokio::runtime::Runtime::new().map_err(validation)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&cfg.listen)
            .await
            .map_err(|e| validation(format!("bind {}: {e}", cfg.listen)))?;
        tracing::info!(
            "listening on {} (log {})",
            listener.local_addr().map_err(validation)?,
            cfg.log_path.display()
        );
        http::serve(engine, listener, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(validation)
    })
}
