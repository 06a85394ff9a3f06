use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use geolex_core::analytics::{facet_map, word_map, CategoryCache, Facet};
use geolex_core::choropleth::{self, bin_quantile};
use geolex_core::index::{load_index, save_index, CorpusIndex};
use geolex_core::ingest::IndustryLabels;
use geolex_core::pipeline::{ingest_files, IngestOptions};
use geolex_core::states::state_table_csv;
use geolex_core::stats::{compare_maps, correlation_extremes, parse_state_csv, spearman};
use geolex_server::catalog::{load_lexicon, Catalog, CategoryRef, LoadedLexicon};
use geolex_server::{app, AppState};

#[derive(Parser)]
#[command(
    name = "geolex",
    version,
    about = "Per-state word and category maps over a geolocated blog corpus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from profile and post JSONL files.
    Ingest {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        posts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; the index is identical for any value.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        shards: u16,
        /// Industry labels, one per line, replacing the built-in list.
        #[arg(long)]
        industries: Option<PathBuf>,
    },
    /// Render one map as JSON, CSV or SVG.
    #[command(group(ArgGroup::new("query").required(true).args(["word", "category", "facet", "density"])))]
    Map {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        word: Option<String>,
        /// LEXICON:CATEGORY
        #[arg(long)]
        category: Option<CategoryRef>,
        /// gender=male|female or industry=LABEL
        #[arg(long)]
        facet: Option<Facet>,
        /// Users per state.
        #[arg(long)]
        density: bool,
        #[arg(long, default_value = "lexicons")]
        lexicons: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, default_value_t = choropleth::DEFAULT_BINS)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spearman correlation of two category maps, or of an external state
    /// vector against user density.
    #[command(group(ArgGroup::new("pair").required(true).args(["a", "external"])))]
    Correlate {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, requires = "b")]
        a: Option<CategoryRef>,
        #[arg(long, requires = "a")]
        b: Option<CategoryRef>,
        /// CSV of `usps,value` rows.
        #[arg(long, conflicts_with_all = ["a", "b"])]
        external: Option<PathBuf>,
        #[arg(long, default_value = "lexicons")]
        lexicons: PathBuf,
    },
    /// Most and least correlated category pairs of one lexicon.
    Extremes {
        #[arg(long)]
        index: PathBuf,
        /// Lexicon name under --lexicons, or a path to a .dic file or theme directory.
        #[arg(long)]
        lexicon: String,
        #[arg(short, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long, default_value = "lexicons")]
        lexicons: PathBuf,
    },
    /// Serve the JSON API and, optionally, a static UI.
    Serve {
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        lexicons: Option<PathBuf>,
        #[arg(long, env = "GEOLEX_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        #[arg(long, default_value_t = choropleth::DEFAULT_BINS)]
        bins: usize,
    },
    /// Print the state table (`usps,name`) in index order.
    States,
}

/// Failures after argument parsing. Usage errors map to exit code 1, data
/// errors to 2.
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure::Data(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

fn open_index(path: &Path) -> Result<CorpusIndex> {
    load_index(path).with_context(|| format!("loading index {}", path.display()))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn resolve_lexicon(spec: &str, dir: &Path) -> Result<LoadedLexicon> {
    let path = Path::new(spec);
    if path.exists() {
        return Ok(LoadedLexicon::new(load_lexicon(path)?));
    }
    let catalog = Catalog::load_dir(dir)?;
    catalog
        .get(spec)
        .cloned()
        .ok_or_else(|| anyhow!("unknown lexicon `{spec}` in {}", dir.display()))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Ingest {
            profiles,
            posts,
            out,
            shards,
            industries,
        } => {
            let industries = match industries {
                Some(path) => IndustryLabels::parse(
                    &fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?,
                ),
                None => IndustryLabels::default(),
            };
            let options = IngestOptions {
                shards: shards as usize,
                industries,
            };
            let (index, report) = ingest_files(&profiles, &posts, &options)?;
            save_index(&index, &out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("{}", serde_json::to_string(&report)?);
            Ok(())
        }
        Command::Map {
            index,
            word,
            category,
            facet,
            density,
            lexicons,
            format,
            bins,
            out,
        } => {
            if bins < 2 {
                return Err(usage("--bins must be at least 2"));
            }
            let index = open_index(&index)?;
            let (title, vector): (String, choropleth::MapVector) = if let Some(word) = word {
                (format!("word: {word}"), word_map(&index, &word).into())
            } else if let Some(r) = category {
                let catalog = Catalog::load_dir(&lexicons)?;
                let (loaded, id, name) = catalog.resolve(&r)?;
                let cache = CategoryCache::new();
                let v = cache.category_map(&index, &loaded.matcher, id)?;
                (format!("category: {}:{name}", r.lexicon), v.into())
            } else if let Some(facet) = facet {
                let v = facet_map(&index, &facet)?;
                (format!("facet: {facet}"), v.into())
            } else {
                debug_assert!(density);
                (
                    "users per state".to_string(),
                    geolex_core::analytics::density_map(&index).into(),
                )
            };
            let spec = bin_quantile(vector, bins)?;
            let text = match format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&spec)?;
                    s.push('\n');
                    s
                }
                Format::Csv => choropleth::to_csv(&spec),
                Format::Svg => choropleth::to_svg(&spec, &title),
            };
            write_output(out.as_deref(), &text)?;
            Ok(())
        }
        Command::Correlate {
            index,
            a,
            b,
            external,
            lexicons,
        } => {
            let index = open_index(&index)?;
            let result = if let Some(path) = external {
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let ext = parse_state_csv(&text)
                    .with_context(|| format!("parsing {}", path.display()))?;
                let density = geolex_core::analytics::density_map(&index).map(|&n| Some(n as f64));
                spearman(ext.as_slice(), density.as_slice())?
            } else {
                let (a, b) = (a.expect("clap requires a"), b.expect("clap requires b"));
                let catalog = Catalog::load_dir(&lexicons)?;
                let cache = CategoryCache::new();
                let mut maps = Vec::new();
                for r in [&a, &b] {
                    let (loaded, id, _) = catalog.resolve(r)?;
                    maps.push(cache.category_map(&index, &loaded.matcher, id)?);
                }
                let vb = maps.pop().expect("two maps");
                let va = maps.pop().expect("two maps");
                compare_maps(va, vb)?.correlation
            };
            let mut s = serde_json::to_string_pretty(&result)?;
            s.push('\n');
            write_output(None, &s)?;
            Ok(())
        }
        Command::Extremes {
            index,
            lexicon,
            k,
            lexicons,
        } => {
            let index = open_index(&index)?;
            let loaded = resolve_lexicon(&lexicon, &lexicons)?;
            let report = correlation_extremes(&index, &loaded.matcher, k as usize)?;
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            write_output(None, &s)?;
            Ok(())
        }
        Command::Serve {
            index,
            lexicons,
            port,
            host,
            ui_dir,
            bins,
        } => {
            if bins < 2 {
                return Err(usage("--bins must be at least 2"));
            }
            let (loaded, last_modified) = match &index {
                Some(path) => {
                    let modified = fs::metadata(path)
                        .and_then(|m| m.modified())
                        .ok()
                        .map(httpdate::fmt_http_date);
                    (Some(open_index(path)?), modified)
                }
                None => (None, None),
            };
            let catalog = match &lexicons {
                Some(dir) => Catalog::load_dir(dir)?,
                None => Catalog::default(),
            };
            let mut state = AppState::new(loaded, catalog);
            state.bins = bins;
            state.last_modified = last_modified;
            serve(app(state, ui_dir), SocketAddr::new(host, port))?;
            Ok(())
        }
        Command::States => {
            write_output(None, &state_table_csv())?;
            Ok(())
        }
    }
}

fn serve(router: axum::Router, addr: SocketAddr) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        tracing::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
