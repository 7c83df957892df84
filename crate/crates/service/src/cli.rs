//! Command-line interface. Exit status: 0 on success, 1 on a domain error,
//! 2 on a usage error.

use std::ffi::OsString;
use std::io::{self, Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ontokms_core::ingest::IngestFormat;
use ontokms_core::kb::{DataDir, KnowledgeBase};
use ontokms_core::navigation;
use ontokms_core::ontology::DEFAULT_BASE;
use ontokms_core::sparql;
use ontokms_core::text::DocKind;
use ontokms_core::turtle::{self, RdfFormat};
use ontokms_core::Error;

use crate::api;
use crate::state::AppState;

#[derive(Debug, Parser)]
#[command(name = "ontokms", version, about = "Ontology knowledge base: triple store, search and HTTP service")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Directory holding the snapshot, change log and record catalog.
    #[arg(long, env = "ONTOKMS_DATA_DIR", default_value = "ontokms-data", global = true)]
    pub data_dir: PathBuf,
    /// Namespace for concept local names.
    #[arg(long, env = "ONTOKMS_BASE_IRI", default_value = DEFAULT_BASE, global = true)]
    pub base_iri: String,
    /// Language for labels when a request does not name one.
    #[arg(long, env = "ONTOKMS_DEFAULT_LANG", default_value = "en", global = true)]
    pub default_lang: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "ONTOKMS_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "ONTOKMS_BIND", default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Install the bundled ontology before serving (the store must be empty).
        #[arg(long)]
        seed: bool,
    },
    /// Install the bundled ontology into an empty data directory.
    Seed,
    /// Merge an RDF file into the store.
    Import {
        file: PathBuf,
        /// turtle or ntriples; inferred from the extension when omitted.
        #[arg(long)]
        format: Option<RdfFormat>,
    },
    /// Write the store to a file (`-` for standard output).
    Export {
        file: PathBuf,
        #[arg(long)]
        format: Option<RdfFormat>,
    },
    /// Check hierarchy and annotation consistency.
    Validate,
    /// Full-text search over annotations and records.
    Search {
        query: String,
        #[arg(long)]
        lang: Option<String>,
        #[arg(long, default_value_t = api::DEFAULT_SEARCH_K)]
        k: usize,
    },
    /// Run a query read from a file (`-` for standard input).
    Query { file: PathBuf },
    /// Load clinical text records from a JSON-lines or CSV file.
    Ingest {
        file: PathBuf,
        #[arg(long)]
        format: Option<IngestFormat>,
    },
    /// Print change records as JSON lines.
    Changes {
        #[arg(long, default_value_t = 0)]
        since: u64,
    },
}

/// Parses `args` and runs the command, writing normal output to `out` and
/// diagnostics to standard error. Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load(global: &GlobalOpts) -> Result<(KnowledgeBase, DataDir), Error> {
    let mut data = DataDir::new(&global.data_dir);
    let kb = data.load(&global.base_iri)?;
    Ok((kb, data))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, Error> {
    let g = &cli.global;
    let write_err = |e: io::Error| Error::io("<stdout>", e);
    match cli.command {
        Command::Serve { port, bind, seed } => {
            serve(g, SocketAddr::new(bind, port), seed)?;
        }
        Command::Seed => {
            let (mut kb, mut data) = load(g)?;
            seed_into(&mut kb, &mut data)?;
            writeln!(out, "seeded {} concepts into {}", kb.ontology().concepts().len(), g.data_dir.display())
                .map_err(write_err)?;
        }
        Command::Import { file, format } => {
            let format = format.or_else(|| RdfFormat::from_path(&file)).ok_or_else(|| {
                Error::Validation(format!("cannot infer RDF format of {}; pass --format", file.display()))
            })?;
            let (mut kb, mut data) = load(g)?;
            let text = std::fs::read_to_string(&file).map_err(io_err(&file))?;
            let added = kb.import_text(&text, format, &file.display().to_string())?;
            data.save(&kb)?;
            writeln!(out, "imported {added} new triples ({} total)", kb.store().len()).map_err(write_err)?;
        }
        Command::Export { file, format } => {
            let format = format.or_else(|| RdfFormat::from_path(&file)).unwrap_or(RdfFormat::Turtle);
            let (kb, _) = load(g)?;
            let text = turtle::serialize(kb.store(), format);
            if file.as_os_str() == "-" {
                out.write_all(text.as_bytes()).map_err(write_err)?;
            } else {
                std::fs::write(&file, text).map_err(io_err(&file))?;
            }
        }
        Command::Validate => {
            let (kb, _) = load(g)?;
            let report = kb.ontology().validate();
            out.write_all(report.summary().as_bytes()).map_err(write_err)?;
            if !report.is_valid() {
                return Ok(1);
            }
        }
        Command::Search { query, lang, k } => {
            if k == 0 {
                return Err(Error::Validation("--k must be at least 1".into()));
            }
            let (kb, _) = load(g)?;
            let hits = kb.search(&query, lang.as_deref(), k);
            let display = lang.unwrap_or_else(|| g.default_lang.clone());
            if hits.is_empty() {
                writeln!(out, "no results for {query:?}").map_err(write_err)?;
                write_suggestions(&kb, &query, out).map_err(write_err)?;
            }
            for hit in hits {
                let what = match hit.doc.kind {
                    DocKind::Record => format!("record {}", hit.doc.owner),
                    kind => format!(
                        "{} {} [{}] {}",
                        if kind == DocKind::ConceptLabel { "label" } else { "comment" },
                        hit.doc.owner,
                        hit.doc.lang.as_deref().unwrap_or(""),
                        navigation::display_label(kb.ontology(), &hit.doc.owner, &display)
                    ),
                };
                writeln!(out, "{:.6}\t{what}\t{}", hit.score, hit.snippet).map_err(write_err)?;
            }
        }
        Command::Query { file } => {
            let text = if file.as_os_str() == "-" {
                let mut s = String::new();
                io::stdin().read_to_string(&mut s).map_err(io_err(&file))?;
                s
            } else {
                std::fs::read_to_string(&file).map_err(io_err(&file))?
            };
            let query = sparql::parse_query(&text)?;
            let (kb, _) = load(g)?;
            let vars = query.projection();
            writeln!(out, "{}", vars.iter().map(|v| format!("?{v}")).collect::<Vec<_>>().join("\t"))
                .map_err(write_err)?;
            for row in sparql::evaluate(kb.store(), &query) {
                let cells: Vec<String> =
                    vars.iter().map(|v| row.get(v).map(|t| t.canonical()).unwrap_or_default()).collect();
                writeln!(out, "{}", cells.join("\t")).map_err(write_err)?;
            }
        }
        Command::Ingest { file, format } => {
            let format = format.or_else(|| IngestFormat::from_path(&file)).ok_or_else(|| {
                Error::Validation(format!("cannot infer record format of {}; pass --format", file.display()))
            })?;
            let (mut kb, mut data) = load(g)?;
            let report = kb.ingest_file(&file, format)?;
            data.save(&kb)?;
            writeln!(out, "accepted {}, rejected {}", report.accepted, report.rejected).map_err(write_err)?;
            for r in &report.reasons {
                writeln!(out, "  row {}: {}", r.row, r.reason).map_err(write_err)?;
            }
        }
        Command::Changes { since } => {
            let (kb, _) = load(g)?;
            for record in kb.change_log(since) {
                let line = serde_json::to_string(record).expect("change records serialize");
                writeln!(out, "{line}").map_err(write_err)?;
            }
        }
    }
    Ok(0)
}

fn seed_into(kb: &mut KnowledgeBase, data: &mut DataDir) -> Result<(), Error> {
    if !kb.store().is_empty() {
        return Err(Error::Conflict(format!(
            "refusing to seed: {} already holds {} triples",
            data.root().display(),
            kb.store().len()
        )));
    }
    kb.install_seed()?;
    data.save(kb)?;
    data.write_seed_file(kb.store())
}

fn write_suggestions(kb: &KnowledgeBase, query: &str, out: &mut dyn Write) -> io::Result<()> {
    let suggestions = kb.suggest(query);
    writeln!(out, "suggestions:")?;
    if suggestions.is_empty() {
        writeln!(out, "  (none)")?;
    }
    for token in suggestions.tokens.iter().filter(|t| !t.suggestions.is_empty()) {
        let list: Vec<String> = token.suggestions.iter().map(|s| format!("{} ({})", s.token, s.distance)).collect();
        writeln!(out, "  {}: {}", token.token, list.join(", "))?;
    }
    Ok(())
}

/// Fails unless `dir` exists (or can be created) and accepts new files.
fn check_writable(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"").map_err(io_err(&probe))?;
    std::fs::remove_file(&probe).map_err(io_err(&probe))
}

fn serve(g: &GlobalOpts, addr: SocketAddr, seed: bool) -> Result<(), Error> {
    check_writable(&g.data_dir)?;
    let (mut kb, mut data) = load(g)?;
    if seed {
        seed_into(&mut kb, &mut data)?;
    }
    let state = AppState::persistent(kb, data, g.default_lang.clone());
    let runtime =
        tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| Error::io("<runtime>", e))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::io(addr.to_string(), e))?;
        let local = listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?;
        tracing::info!(%local, data_dir = %g.data_dir.display(), "listening");
        println!("listening on http://{local}");
        axum::serve(listener, api::router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Error::io(local.to_string(), e))
    })
}
