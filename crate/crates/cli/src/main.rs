use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use breplay::harness::{run_grid, run_online_cl, write_run_artifacts, GridConfig, Method, ScoreChoice};
use breplay::{ModelKind, Strategy};
use clap::{Args, Parser, Subcommand};

/// Online continual learning with uncertainty-driven replay memory.
#[derive(Parser)]
#[command(name = "breplay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configuration for each seed.
    Run(Overrides),
    /// Run every score x strategy x memory combination plus the ER baseline.
    Grid(Overrides),
    /// Print the default configuration file.
    DefaultConfig,
}

#[derive(Args)]
struct Overrides {
    /// TOML config file; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// lc, sm, rc, en, rm, bi or er-random.
    #[arg(long, value_delimiter = ',')]
    score: Option<Vec<ScoreChoice>>,
    /// top, step or bottom.
    #[arg(long, value_delimiter = ',')]
    strategy: Option<Vec<Strategy>>,
    /// Memory capacity in samples.
    #[arg(long, value_delimiter = ',')]
    memory: Option<Vec<usize>>,
    /// logreg or mlp.
    #[arg(long)]
    model: Option<ModelKind>,
    /// Hidden width for the mlp.
    #[arg(long)]
    hidden: Option<usize>,
    /// Number of test-time views (including the clean one).
    #[arg(long)]
    tta_views: Option<usize>,
    /// Standard deviation of the test-time noise.
    #[arg(long)]
    tta_sigma: Option<f64>,
}

impl Overrides {
    fn resolve(&self) -> Result<GridConfig> {
        let mut cfg = match &self.config {
            Some(path) => GridConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?,
            None => GridConfig::default(),
        };
        if let Some(v) = &self.seeds {
            cfg.seeds = v.clone();
        }
        if let Some(v) = &self.score {
            cfg.scores = v.clone();
        }
        if let Some(v) = &self.strategy {
            cfg.strategies = v.clone();
        }
        if let Some(v) = &self.memory {
            cfg.memory = v.clone();
        }
        if let Some(v) = self.model {
            cfg.model = v;
        }
        if let Some(v) = self.hidden {
            cfg.hidden = v;
        }
        if let Some(v) = self.tta_views {
            cfg.tta_views = v;
        }
        if let Some(v) = self.tta_sigma {
            cfg.tta_sigma = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

struct Log(fs::File);

impl Log {
    fn open(out: &Path) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let path = out.join("run.log");
        let file = fs::OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Log(file))
    }

    fn line(&mut self, msg: &str) {
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let _ = writeln!(self.0, "[{ts}] {msg}");
        eprintln!("{msg}");
    }
}

fn single_method(cfg: &GridConfig) -> Result<Method> {
    if cfg.memory.len() != 1 {
        bail!("run needs exactly one memory size, got {:?}", cfg.memory);
    }
    let [score] = cfg.scores[..] else {
        bail!("run needs exactly one score (use --score)");
    };
    Ok(match score {
        ScoreChoice::ErRandom => Method::ErRandom,
        ScoreChoice::Score(score) => {
            let [strategy] = cfg.strategies[..] else {
                bail!("run needs exactly one strategy (use --strategy)");
            };
            Method::Uncertainty { score, strategy }
        }
    })
}

fn cmd_run(o: &Overrides) -> Result<()> {
    let cfg = o.resolve()?;
    let method = single_method(&cfg)?;
    let exp = cfg.experiment(cfg.memory[0], method);
    let mut log = Log::open(&o.out)?;
    fs::write(o.out.join("config.toml"), cfg.to_toml())?;
    log.line(&format!("run {method} memory={} fingerprint={}", exp.memory_capacity, exp.fingerprint()));
    for &seed in &cfg.seeds {
        let outcome = run_online_cl(&exp, seed).with_context(|| format!("seed {seed}"))?;
        let files = write_run_artifacts(&o.out.join("runs"), &outcome)?;
        let s = &outcome.summary;
        let f = s.last_forgetting.map_or("n/a".to_string(), |f| format!("{:.2}", 100.0 * f));
        log.line(&format!("seed {seed}: A={:.2}% F={f}% -> {}", 100.0 * s.last_accuracy, files.summary_json.display()));
        println!("{seed}\t{:.6}\t{}", s.last_accuracy, s.last_forgetting.map_or("-".into(), |f| format!("{f:.6}")));
    }
    Ok(())
}

fn cmd_grid(o: &Overrides) -> Result<()> {
    let cfg = o.resolve()?;
    let mut log = Log::open(&o.out)?;
    fs::write(o.out.join("config.toml"), cfg.to_toml())?;
    let cells = cfg.memory.len() * cfg.methods().len();
    log.line(&format!("grid: {cells} cells x {} seeds", cfg.seeds.len()));
    let report = run_grid(&cfg, Some(&o.out.join("runs")))?;
    let table = o.out.join("grid.csv");
    report.write_csv(fs::File::create(&table)?)?;
    let mut failed = 0;
    for cell in &report.cells {
        for (seed, err) in &cell.failures {
            failed += 1;
            log.line(&format!("FAILED {} memory={} seed={seed}: {err}", cell.method, cell.memory));
        }
    }
    log.line(&format!("wrote {}", table.display()));
    if failed > 0 {
        bail!("{failed} run(s) failed; see {}", o.out.join("run.log").display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(o) => cmd_run(o),
        Command::Grid(o) => cmd_grid(o),
        Command::DefaultConfig => {
            print!("{}", GridConfig::default().to_toml());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
