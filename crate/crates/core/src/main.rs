use std::collections::BTreeSet;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use polyeval::inference::conformance::check_backend;
use polyeval::inference::stub::{StubFaults, StubServer, StubSpec};
use polyeval::inference::{Clock, BACKEND_URL_ENV};
use polyeval::langid::{write_report, LanguageTag};
use polyeval::orchestrator::{emit_reports, load_aligned_registry, run, Overrides, RunConfig};
use polyeval::promptlib::{
    merge_propagation, propagate_template, HttpTranslator, PromptLibrary, PromptStrategy, PropagateOptions,
};
use polyeval::registry::{DirectionMode, TaskKind};

#[derive(Parser)]
#[command(name = "polyeval", version, about = "Multilingual benchmark evaluation against a model server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate selected benchmarks and languages.
    Run(RunArgs),
    /// Print the language alignment report of one benchmark as JSON lines.
    Align {
        #[arg(long)]
        benchmark: String,
        #[command(flatten)]
        source: RegistrySource,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Prompt library maintenance.
    Prompts {
        #[command(subcommand)]
        command: PromptsCommand,
    },
    /// Serve the toy-model stub backend until interrupted.
    ServeStub {
        /// `echo`, `uniform:<V>` or `fixed:<json object>`
        #[arg(long, default_value = "echo")]
        mode: String,
        #[arg(long, default_value = "127.0.0.1:8000")]
        bind: String,
    },
    /// Check a backend against the wire protocol.
    CheckBackend {
        #[arg(long, env = BACKEND_URL_ENV)]
        backend_url: String,
    },
}

#[derive(Subcommand)]
enum PromptsCommand {
    /// Machine-translate one template into other languages.
    Propagate {
        #[arg(long)]
        task: String,
        #[arg(long)]
        from: LanguageTag,
        /// Comma-separated tags, or `all` for every tag aligned in the registry.
        #[arg(long)]
        to: String,
        #[command(flatten)]
        source: RegistrySource,
        #[arg(long)]
        prompt_dir: Option<PathBuf>,
        #[arg(long)]
        translator_url: Option<String>,
        /// Replace existing templates instead of keeping them.
        #[arg(long)]
        overwrite: bool,
    },
}

#[derive(Args)]
struct RegistrySource {
    /// Run config whose registry and prompt directories are used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark descriptor directory (overrides the config's).
    #[arg(long)]
    registry: Option<PathBuf>,
}

impl RegistrySource {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig { base_dir: std::env::current_dir()?, ..Default::default() },
        };
        if let Some(r) = &self.registry {
            c.registry_dir = std::env::current_dir()?.join(r);
        }
        Ok(c)
    }
}

fn comma_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    benchmarks: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    langs: Option<Vec<String>>,
    /// `single` or `multi`
    #[arg(long)]
    prompt_strategy: Option<String>,
    /// Template language for the single strategy.
    #[arg(long)]
    prompt_lang: Option<LanguageTag>,
    #[arg(long)]
    pivot: Option<LanguageTag>,
    #[arg(long, value_parser = |s: &str| DirectionMode::parse(s).ok_or(format!("unknown direction mode {s:?}")))]
    direction_mode: Option<DirectionMode>,
    #[arg(long)]
    n_shot: Option<usize>,
    #[arg(long)]
    sample_limit: Option<usize>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    store_details: bool,
    #[arg(long)]
    backend_url: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report deterministic per-request and per-token costs instead of
    /// measured wall time.
    #[arg(long)]
    virtual_clock: bool,
}

impl RunArgs {
    fn overrides(self) -> Result<Overrides> {
        let prompt_strategy = match (self.prompt_strategy.as_deref(), self.prompt_lang) {
            (None, None) => None,
            (Some("multi"), None) => Some(PromptStrategy::multi()),
            (Some("multi"), Some(_)) => bail!("--prompt-lang only applies to --prompt-strategy single"),
            (Some("single") | None, Some(tag)) => Some(PromptStrategy::single(tag)),
            (Some("single"), None) => bail!("--prompt-strategy single needs --prompt-lang"),
            (Some(other), _) => bail!("unknown prompt strategy {other:?}"),
        };
        Ok(Overrides {
            benchmarks: self.benchmarks,
            langs: self.langs,
            prompt_strategy,
            pivot: self.pivot,
            direction_mode: self.direction_mode,
            n_shot: self.n_shot,
            sample_limit: self.sample_limit,
            parallelism: self.parallelism,
            store_details: self.store_details,
            backend_url: self.backend_url,
            seed: self.seed,
            output_dir: self.out,
            clock: self.virtual_clock.then_some(Clock::DEFAULT_VIRTUAL),
        })
    }
}

async fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut config = RunConfig::from_file(&args.config)?;
    config.apply(args.overrides()?, std::env::var(BACKEND_URL_ENV).ok());
    let outcome = run(&config).await?;
    let out_dir = config.resolve(&config.output_dir);
    for path in emit_reports(&outcome, &out_dir, config.store_details)? {
        eprintln!("wrote {}", path.display());
    }
    for b in &outcome.summary.benchmarks {
        for e in &b.errors {
            eprintln!("{}: {e}", b.id);
        }
    }
    Ok(if outcome.summary.all_ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_align(benchmark: &str, source: &RegistrySource, seed: u64) -> Result<ExitCode> {
    let config = source.config()?;
    let registry = load_aligned_registry(&config.resolve(&config.registry_dir), seed)?;
    let report = registry.reports.get(benchmark).ok_or_else(|| anyhow!("unknown benchmark id {benchmark:?}"))?;
    write_report(io::stdout().lock(), report)?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
async fn cmd_propagate(
    task: &str,
    from: LanguageTag,
    to: &str,
    source: &RegistrySource,
    prompt_dir: Option<PathBuf>,
    translator_url: Option<String>,
    overwrite: bool,
) -> Result<ExitCode> {
    let config = source.config()?;
    let task = TaskKind::parse(task).ok_or_else(|| anyhow!("unknown task kind {task:?}"))?;
    let dir = match prompt_dir {
        Some(d) => d,
        None => config.resolve(&config.prompt_dir),
    };
    let mut library = PromptLibrary::load_dir(&dir)?;
    let template = library
        .get(task, from)
        .cloned()
        .ok_or_else(|| anyhow!("no {task} template for {from} in {}", dir.display()))?;
    let targets: Vec<LanguageTag> = if to == "all" {
        let registry = load_aligned_registry(&config.resolve(&config.registry_dir), config.seed)?;
        let tags: BTreeSet<LanguageTag> = registry.benchmarks.iter().flat_map(|b| b.aligned_tags()).collect();
        tags.into_iter().collect()
    } else {
        comma_list(to).iter().map(|t| LanguageTag::parse(t)).collect::<Result<_, _>>()?
    };
    let url = translator_url
        .or(config.translator_url.clone())
        .context("no translator URL (use --translator-url or translator_url in the config)")?;
    let translator = HttpTranslator::new(&url, Duration::from_secs(config.timeout_secs))?;
    let propagation = propagate_template(&template, &targets, &translator, PropagateOptions::default()).await?;
    let written = merge_propagation(&mut library, &propagation, overwrite);
    let path = library.save_task(&dir, task)?;
    let skipped: Vec<LanguageTag> = propagation
        .templates
        .iter()
        .map(|(t, _)| *t)
        .filter(|t| !written.contains(t))
        .collect();
    let report = serde_json::json!({
        "file": path.display().to_string(),
        "written": written,
        "kept_existing": skipped,
        "failures": propagation.failures,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

async fn cmd_check_backend(url: &str) -> Result<ExitCode> {
    let checks = check_backend(url).await;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if checks.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

async fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => cmd_run(args).await,
        Command::Align { benchmark, source, seed } => cmd_align(&benchmark, &source, seed),
        Command::Prompts { command: PromptsCommand::Propagate { task, from, to, source, prompt_dir, translator_url, overwrite } } => {
            cmd_propagate(&task, from, &to, &source, prompt_dir, translator_url, overwrite).await
        }
        Command::ServeStub { mode, bind } => {
            let spec = StubSpec::parse(&mode).map_err(|e| anyhow!(e))?;
            let server = StubServer::spawn_with(spec, StubFaults::default(), &bind)
                .await
                .with_context(|| format!("cannot bind {bind}"))?;
            eprintln!("stub serving on {}", server.url());
            server.wait().await;
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckBackend { backend_url } => cmd_check_backend(&backend_url).await,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match rt.block_on(dispatch(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
