use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use enthymeme::dataset::{augment, binarize, load_dataset, write_jsonl, BinaryInstance, DatasetItem, Format, StepType};
use enthymeme::graph::{build_argument_graph, export_dot};
use enthymeme::pipeline::{evaluate, run_instance, DecodingTrace, RunConfig};
use enthymeme::providers::cache::DiskCache;
use enthymeme::providers::http::{
    HttpClient, HttpConfig, HttpEmbedder, HttpGenerator, HttpNli, HttpParser, ENV_EMBED_URL, ENV_GEN_URL, ENV_NLI_URL,
    ENV_PARSE_URL, ENV_TIMEOUT_SECS,
};
use enthymeme::providers::stub::Fixtures;
use enthymeme::providers::{AmrParser, EmbeddingSimilarity, PremiseGenerator, Providers};
use enthymeme::sweep::{parse_grid, render_svg, sweep, write_csv};
use enthymeme_core::relax::ConflictPolicy;
use enthymeme_core::BinaryLabel;

const EXIT_USAGE: u8 = 1;
const EXIT_PROVIDER: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(name = "enthymeme", version, about = "Decode implicit premises with AMR and neuro-symbolic reasoning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode one premise/claim pair and print the label and trace.
    Decode {
        #[command(flatten)]
        input: SentenceArgs,
        /// Write the trace as JSON here instead of stdout.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a dataset and print the report.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        /// Label file: id, gold, predicted, verdict per line.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// JSONL decoding traces.
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a grid of thresholds and step types.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        /// `start:end:step` or a comma list.
        #[arg(long, default_value = "0.5:0.8:0.05")]
        tau_m_grid: String,
        #[arg(long, default_value = "80,90,100")]
        tau_c_grid: String,
        #[arg(long, default_value = "original,1,2,3", value_delimiter = ',')]
        step_types: Vec<StepType>,
        /// CSV output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Accuracy chart.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Build the argument graph for a premise, implicit premises and a claim.
    Graph {
        #[command(flatten)]
        input: SentenceArgs,
        /// DOT output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate helpful and unhelpful chains and write JSONL.
    Augment {
        #[command(flatten)]
        data: DataArgs,
        /// Chain lengths to generate.
        #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
        chain_steps: Vec<u8>,
        /// JSONL output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct SentenceArgs {
    #[arg(long)]
    premise: String,
    /// Implicit premise; repeat for several.
    #[arg(long)]
    implicit: Vec<String>,
    #[arg(long)]
    claim: String,
    /// JSON object mapping sentences to PENMAN text.
    #[arg(long)]
    amr: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// arct, anli or jsonl.
    #[arg(long, default_value = "jsonl")]
    format: Format,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0.6)]
    tau_m: f64,
    #[arg(long, default_value_t = 80.0)]
    tau_c: f64,
    /// none, original, 1, 2 or 3.
    #[arg(long, default_value = "original")]
    steps: StepType,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long, env = ENV_EMBED_URL)]
    embed_url: Option<String>,
    #[arg(long, env = ENV_NLI_URL)]
    nli_url: Option<String>,
    #[arg(long, env = ENV_GEN_URL)]
    gen_url: Option<String>,
    #[arg(long, env = ENV_PARSE_URL)]
    parse_url: Option<String>,
    /// Serve every provider from this fixture file instead of HTTP.
    #[arg(long)]
    stub_fixtures: Option<PathBuf>,
    /// Keep modifier-qualified nouns as one constant ("large insect").
    #[arg(long)]
    compound_constants: bool,
    /// Write the CNFs behind each verdict to this directory.
    #[arg(long)]
    dimacs_dump: Option<PathBuf>,
    /// Skip contradiction edges that conflict with the matching classes.
    #[arg(long)]
    drop_conflicts: bool,
    /// Leave errored instances out of the metrics.
    #[arg(long)]
    exclude_errored: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// HTTP timeout in seconds.
    #[arg(long, env = ENV_TIMEOUT_SECS, default_value_t = 30)]
    timeout: u64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Provider(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Provider(_) => EXIT_PROVIDER,
            Failure::Data(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Provider(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

impl Common {
    fn config(&self) -> Result<RunConfig, Failure> {
        let config = RunConfig {
            tau_m: self.tau_m,
            tau_c: self.tau_c,
            step_type: self.steps,
            seed: self.seed,
            compound_constants: self.compound_constants,
            conflict_policy: if self.drop_conflicts {
                ConflictPolicy::DropContradict
            } else {
                ConflictPolicy::Error
            },
            exclude_errored: self.exclude_errored,
            ..RunConfig::default()
        };
        config.validate().map_err(Failure::Usage)?;
        Ok(config)
    }

    fn providers(&self) -> Result<Providers, Failure> {
        let providers = match &self.stub_fixtures {
            Some(path) => Fixtures::load(path).map_err(data_err)?.providers(),
            None => {
                let http = HttpConfig {
                    timeout: Duration::from_secs(self.timeout),
                    ..HttpConfig::default()
                };
                let client = |url: &Option<String>, name: &str| {
                    url.as_ref()
                        .map(|u| HttpClient::new(u.clone(), http.clone()))
                        .ok_or_else(|| Failure::Usage(format!("--{name} (or --stub-fixtures) is required")))
                };
                Providers {
                    similarity: Box::new(EmbeddingSimilarity(HttpEmbedder::new(client(&self.embed_url, "embed-url")?))),
                    nli: Box::new(HttpNli::new(client(&self.nli_url, "nli-url")?)),
                    generator: self
                        .gen_url
                        .as_ref()
                        .map(|u| Box::new(HttpGenerator::new(HttpClient::new(u.clone(), http.clone()))) as Box<dyn PremiseGenerator>),
                    parser: self
                        .parse_url
                        .as_ref()
                        .map(|u| Box::new(HttpParser::new(HttpClient::new(u.clone(), http.clone()))) as Box<dyn AmrParser>),
                }
            }
        };
        Ok(match &self.cache_dir {
            Some(dir) => providers.cached(Arc::new(DiskCache::open(dir).map_err(data_err)?)),
            None => providers,
        })
    }

    fn threads(&self) -> Result<(), Failure> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::Usage(e.to_string()))?;
        }
        Ok(())
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| data_err(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_amr(path: &Option<PathBuf>) -> Result<BTreeMap<String, String>, Failure> {
    let Some(path) = path else { return Ok(BTreeMap::new()) };
    let text = fs::read_to_string(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| data_err(format!("{}: {e}", path.display())))
}

fn load(data: &DataArgs) -> Result<Vec<DatasetItem>, Failure> {
    let loaded = load_dataset(&data.data, data.format).map_err(data_err)?;
    for v in &loaded.violations {
        log::warn!("{}: {}", data.data.display(), v);
    }
    Ok(loaded.items)
}

fn dump_dimacs(dir: &Path, traces: &[DecodingTrace]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(data_err)?;
    for t in traces {
        let Some(r) = &t.reasoning else { continue };
        let stem: String = t.id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
        for (suffix, cnf) in [
            ("premise", &r.premise),
            ("entail", &r.entailment_check),
            ("contra", &r.contradiction_check),
        ] {
            fs::write(dir.join(format!("{stem}.{suffix}.cnf")), cnf.to_dimacs()).map_err(data_err)?;
        }
    }
    Ok(())
}

fn provider_failed(traces: &[DecodingTrace]) -> bool {
    traces.iter().any(|t| t.error.as_ref().is_some_and(|e| e.provider_failure))
}

fn io_err(e: io::Error) -> Failure {
    data_err(e)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Decode { input, trace, common } => {
            common.threads()?;
            let config = common.config()?;
            let providers = common.providers()?;
            let instance = BinaryInstance {
                id: "input".into(),
                premise: input.premise,
                implicit: input.implicit,
                claim: input.claim,
                gold: BinaryLabel::Entailment,
                amr: read_amr(&input.amr)?,
            };
            let t = run_instance(&instance, &config, &providers);
            if let Some(dir) = &common.dimacs_dump {
                dump_dimacs(dir, std::slice::from_ref(&t))?;
            }
            let json = serde_json::to_string_pretty(&t).map_err(data_err)?;
            let mut out = io::stdout().lock();
            match &trace {
                Some(p) => fs::write(p, json + "\n").map_err(io_err)?,
                None => writeln!(out, "{json}").map_err(io_err)?,
            }
            let verdict = t.label_line().rsplit('\t').next().unwrap_or_default().to_string();
            writeln!(out, "{verdict}").map_err(io_err)?;
            if let Some(e) = &t.error {
                let msg = format!("{} failed: {}", e.stage, e.message);
                return Err(if e.provider_failure { Failure::Provider(msg) } else { Failure::Data(msg) });
            }
            Ok(())
        }
        Command::Eval {
            data,
            labels,
            traces,
            report,
            common,
        } => {
            common.threads()?;
            let config = common.config()?;
            let providers = common.providers()?;
            let items = load(&data)?;
            let mut instances = Vec::new();
            for item in &items {
                if let Some(reason) = &item.flagged {
                    log::warn!("skipping flagged item {}: {reason}", item.id);
                    continue;
                }
                instances.extend(binarize(item, config.step_type).map_err(data_err)?);
            }
            let (rep, ts) = evaluate(&instances, &config, &providers);
            if let Some(p) = &labels {
                let mut w = output(&Some(p.clone()))?;
                for t in &ts {
                    writeln!(w, "{}", t.label_line()).map_err(io_err)?;
                }
                w.flush().map_err(io_err)?;
            }
            if let Some(p) = &traces {
                let mut w = output(&Some(p.clone()))?;
                for t in &ts {
                    writeln!(w, "{}", serde_json::to_string(t).map_err(data_err)?).map_err(io_err)?;
                }
                w.flush().map_err(io_err)?;
            }
            if let Some(dir) = &common.dimacs_dump {
                dump_dimacs(dir, &ts)?;
            }
            let json = serde_json::to_string_pretty(&rep).map_err(data_err)?;
            let mut w = output(&report)?;
            writeln!(w, "{json}").map_err(io_err)?;
            w.flush().map_err(io_err)?;
            if provider_failed(&ts) {
                return Err(Failure::Provider(format!("{} of {} instances errored", rep.errored, rep.instances)));
            }
            Ok(())
        }
        Command::Sweep {
            data,
            tau_m_grid,
            tau_c_grid,
            step_types,
            out,
            svg,
            common,
        } => {
            common.threads()?;
            let config = common.config()?;
            let tau_m = parse_grid(&tau_m_grid).map_err(|e| Failure::Usage(e.to_string()))?;
            let tau_c = parse_grid(&tau_c_grid).map_err(|e| Failure::Usage(e.to_string()))?;
            for &m in &tau_m {
                RunConfig { tau_m: m, ..config.clone() }.validate().map_err(Failure::Usage)?;
            }
            for &c in &tau_c {
                RunConfig { tau_c: c, ..config.clone() }.validate().map_err(Failure::Usage)?;
            }
            let providers = common.providers()?;
            let items = load(&data)?;
            let rows = sweep(&items, &tau_m, &tau_c, &step_types, &config, &providers).map_err(data_err)?;
            let mut w = output(&out)?;
            write_csv(&rows, &mut w).map_err(data_err)?;
            w.flush().map_err(io_err)?;
            if let Some(p) = &svg {
                fs::write(p, render_svg(&rows)).map_err(io_err)?;
            }
            Ok(())
        }
        Command::Graph { input, out, common } => {
            let config = common.config()?;
            let providers = common.providers()?;
            let amr = read_amr(&input.amr)?;
            let graph = build_argument_graph(&input.premise, &input.implicit, &input.claim, &amr, &config, &providers)
                .map_err(|e| if e.is_provider_failure() { Failure::Provider(e.to_string()) } else { data_err(e) })?;
            let mut w = output(&out)?;
            w.write_all(export_dot(&graph).as_bytes()).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        Command::Augment {
            data,
            chain_steps,
            out,
            common,
        } => {
            common.threads()?;
            if let Some(s) = chain_steps.iter().find(|s| !(1..=3).contains(*s)) {
                return Err(Failure::Usage(format!("chain steps must be 1, 2 or 3, not {s}")));
            }
            let providers = common.providers()?;
            let generator = providers
                .generator
                .as_deref()
                .ok_or_else(|| Failure::Usage("augment needs --gen-url or --stub-fixtures".into()))?;
            let items = augment(&load(&data)?, generator, &chain_steps);
            for item in items.iter().filter(|i| i.flagged.is_some()) {
                log::warn!("flagged {}: {}", item.id, item.flagged.as_deref().unwrap_or_default());
            }
            let mut w = output(&out)?;
            write_jsonl(&items, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
