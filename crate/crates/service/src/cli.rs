use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use statlink_core::catalog::CatalogEntry;
use statlink_core::ingest::{ingest_bytes, IngestOptions, ProviderHints};
use statlink_core::link::ItemRef;
use statlink_core::sources::transport::SystemClock;
use statlink_core::sources::{ingest_source, CacheStore, Fetcher, SourceDescriptor, CACHE_DIR_ENV};
use statlink_core::{fixtures, slice, Provider, Scalar};

use crate::transport::HttpTransport;
use crate::{build_selection, AppState, DATA_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "statlink", version, about = "Statistical data dashboards with linked views")]
pub struct Cli {
    /// Catalog, dashboards and user visualizations live here.
    #[arg(long, global = true, env = DATA_DIR_ENV, default_value = "statlink-data")]
    pub data_dir: PathBuf,
    /// HTTP cache for remote sources [default: <data-dir>/cache]
    #[arg(long, global = true, env = CACHE_DIR_ENV)]
    pub cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a data file, or a source descriptor (JSON object or list), into the catalog.
    Ingest {
        source: PathBuf,
        #[arg(long)]
        provider: Option<Provider>,
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        unit: Option<String>,
        /// Numbers use `,` as the decimal separator.
        #[arg(long)]
        decimal_comma: bool,
        /// Areas to request from a SPARQL endpoint (comma separated).
        #[arg(long, value_delimiter = ',')]
        areas: Vec<String>,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        /// Dimension choice for SPARQL sources, `name=member`.
        #[arg(long = "dim", value_parser = parse_pair)]
        dims: Vec<(String, String)>,
    },
    /// List catalog entries.
    Catalog {
        #[arg(long)]
        provider: Option<Provider>,
        #[arg(long)]
        search: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Print one slice of a cube.
    Slice {
        cube_id: String,
        #[arg(long, value_delimiter = ',')]
        areas: Vec<String>,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long = "dim", value_parser = parse_pair)]
        dims: Vec<(String, String)>,
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Items highlighted when hovering one item of a dashboard.
    Resolve {
        dashboard: String,
        viz: String,
        item: String,
        #[arg(long)]
        json: bool,
    },
    /// Register the case-study fixture cubes.
    Fixtures,
}

fn parse_pair(text: &str) -> Result<(String, String), String> {
    text.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .ok_or_else(|| format!("expected name=member, got `{text}`"))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let data_dir = cli.data_dir;
    match cli.command {
        Command::Ingest { source, provider, id, title, unit, decimal_comma, areas, from, to, dims } => {
            let state = open(&data_dir)?;
            let hints = ProviderHints { id, title, unit, provider, decimal_comma, ..Default::default() };
            let options = IngestOptions::with_hints(hints);
            let cubes = match read_descriptors(&source)? {
                Some(descriptors) => {
                    let cache = cli.cache_dir.unwrap_or_else(|| data_dir.join("cache"));
                    let transport = HttpTransport::new(Duration::from_secs(60))?;
                    let fetcher = Fetcher::new(CacheStore::new(cache), Arc::new(transport), Arc::new(SystemClock));
                    let mut cubes = Vec::new();
                    for desc in descriptors {
                        let sel = sparql_selection(&desc, &areas, from.as_deref(), to.as_deref(), &dims)?;
                        cubes.extend(ingest_source(&fetcher, &desc, sel.as_ref(), &options)?);
                    }
                    cubes
                }
                None => {
                    let bytes = std::fs::read(&source).with_context(|| format!("reading {}", source.display()))?;
                    ingest_bytes::<f64>(&bytes, &source.to_string_lossy(), &options)?
                }
            };
            for cube in cubes {
                let entry = state.catalog.register(cube)?;
                writeln!(out, "registered {}", entry_line(&entry))?;
            }
        }
        Command::Catalog { provider, search, json } => {
            let state = open(&data_dir)?;
            let entries = state.catalog.query(provider, search.as_deref());
            if json {
                serde_json::to_writer_pretty(&mut *out, &entries)?;
                writeln!(out)?;
            } else {
                for entry in &entries {
                    writeln!(out, "{}", entry_line(entry))?;
                }
            }
        }
        Command::Slice { cube_id, areas, from, to, dims, json } => {
            let state = open(&data_dir)?;
            let cube = state.catalog.load_cube(&cube_id)?;
            let sel = build_selection(&cube, &areas, from.as_deref(), to.as_deref(), &dims)?;
            let set = slice(&cube, &sel)?;
            if json {
                serde_json::to_writer_pretty(&mut *out, &set)?;
                writeln!(out)?;
            } else {
                writeln!(out, "area\ttime\tvalue\tflags")?;
                for series in &set.series {
                    for point in &series.points {
                        let value = point.observation.value.map(|v| v.to_decimal()).unwrap_or_default();
                        let flags = point.observation.flags.to_string();
                        writeln!(out, "{}\t{}\t{value}\t{flags}", series.area, point.time)?;
                    }
                }
            }
        }
        Command::Serve { port, host } => {
            let state = open(&data_dir)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                writeln!(out, "listening on http://{}", listener.local_addr()?)?;
                out.flush()?;
                crate::api::serve(listener, state).await?;
                anyhow::Ok(())
            })?;
        }
        Command::Resolve { dashboard, viz, item, json } => {
            let state = open(&data_dir)?;
            let set = state.store.resolve(&dashboard, &ItemRef::new(&viz, &item))?;
            if json {
                serde_json::to_writer_pretty(&mut *out, &set)?;
                writeln!(out)?;
            } else {
                let a = &set.anchor;
                writeln!(out, "anchor\t{}\t{}\t{}", a.viz_id, a.local_id, a.display_value)?;
                for e in &set.items {
                    writeln!(out, "{}\t{}\t{}", e.viz_id, e.local_id, e.display_value)?;
                }
            }
        }
        Command::Fixtures => {
            let state = open(&data_dir)?;
            for cube in fixtures::fixture_cubes() {
                let entry = state.catalog.register(cube)?;
                writeln!(out, "registered {}", entry_line(&entry))?;
            }
        }
    }
    Ok(())
}

fn open(data_dir: &Path) -> anyhow::Result<AppState> {
    AppState::open(data_dir).with_context(|| format!("opening data directory {}", data_dir.display()))
}

fn entry_line(e: &CatalogEntry) -> String {
    let span = e.time_span.map(|(a, b)| format!("{a}..{b}")).unwrap_or_else(|| "-".into());
    format!("{}\t{}\t{}\t{}\t{}\t{} areas", e.cube_id, e.provider.as_str(), e.title, e.unit, span, e.area_count)
}

/// `Some` when the file is a JSON descriptor or a list of them.
fn read_descriptors(path: &Path) -> anyhow::Result<Option<Vec<SourceDescriptor>>> {
    if path.extension().and_then(|e| e.to_str()) != Some("json") {
        return Ok(None);
    }
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)?;
    let looks_like_descriptor = |v: &serde_json::Value| v.get("access").is_some() && v.get("location").is_some();
    let descriptors = match &value {
        serde_json::Value::Array(items) if !items.is_empty() && items.iter().all(looks_like_descriptor) => {
            serde_json::from_value(value)?
        }
        v if looks_like_descriptor(v) => vec![serde_json::from_value(value)?],
        _ => return Ok(None),
    };
    Ok(Some(descriptors))
}

fn sparql_selection(
    desc: &SourceDescriptor,
    areas: &[String],
    from: Option<&str>,
    to: Option<&str>,
    dims: &[(String, String)],
) -> anyhow::Result<Option<statlink_core::Selection>> {
    use statlink_core::sources::Access;
    if desc.access != Access::SparqlEndpoint {
        return Ok(None);
    }
    let (Some(from), Some(to)) = (from, to) else {
        bail!("{}: SPARQL sources need --areas, --from and --to", desc.dataset_id);
    };
    if areas.is_empty() {
        bail!("{}: SPARQL sources need --areas", desc.dataset_id);
    }
    let time = |t: &str| statlink_core::parse_time_key(t).with_context(|| format!("bad time `{t}`"));
    Ok(Some(statlink_core::Selection {
        dimension_choice: dims.iter().cloned().collect(),
        areas: areas.to_vec(),
        time_from: time(from)?,
        time_to: time(to)?,
    }))
}
