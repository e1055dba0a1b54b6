use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncmax::harness::{self, Experiment, ExperimentConfig, LambdaSpec};

#[derive(Parser)]
#[command(name = "ncmax", version, about = "Seeded verification campaigns for noncommutative maximal inequalities")]
struct Cli {
    /// Print the experiment catalog and exit.
    #[arg(long)]
    list: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run any experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    Cuculescu(Common),
    StrongMaximal(Common),
    JmzTensorMartingale(Common),
    ErgodicTensor(Common),
    Limsup(Common),
    SteinIntegral(Common),
    Remark23Divergence(Common),
    FreegroupSigma(Common),
    FreegroupDiagram(Common),
    /// Free group checks with word-level output.
    Freegroup {
        #[arg(long, default_value_t = 10)]
        max_len: usize,
        /// Poisson time; repeat for several values.
        #[arg(long = "t", default_values_t = [0.1, 1.0])]
        t: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Check::Sigma)]
        check: Check,
        #[arg(long, default_value_t = 20_240_601)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        corpus_size: usize,
        #[arg(long, default_value = "freegroup.csv")]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Sigma,
    Diagram,
    Growth,
}

#[derive(Args)]
struct Common {
    /// JSON config; inline flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    corpus_size: Option<usize>,
    #[arg(long)]
    r_min: Option<i32>,
    #[arg(long)]
    r_max: Option<i32>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    phi_alpha: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Common {
    fn config(self, experiment: Experiment) -> Result<ExperimentConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).map_err(|e| e.to_string())?,
            None => ExperimentConfig::preset(experiment, PathBuf::from(format!("{}.csv", experiment.name()))),
        };
        if cfg.experiment != experiment {
            return Err(format!("config is for {}, not {}", cfg.experiment.name(), experiment.name()));
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = self.dims {
            cfg.dims = d;
        }
        if let Some(n) = self.corpus_size {
            cfg.corpus_size = n;
        }
        if self.r_min.is_some() || self.r_max.is_some() {
            let (lo, hi) = match cfg.lambda_spec {
                Some(LambdaSpec::Range { r_min, r_max }) => (r_min, r_max),
                _ => (0, 8),
            };
            cfg.lambda_spec = Some(LambdaSpec::Range { r_min: self.r_min.unwrap_or(lo), r_max: self.r_max.unwrap_or(hi) });
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon = Some(e);
        }
        if let Some(a) = self.phi_alpha {
            cfg.phi_alpha = Some(a);
        }
        if let Some(o) = self.output {
            cfg.output = o;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn execute(cfg: &ExperimentConfig) -> ExitCode {
    match harness::run(cfg) {
        Ok(out) => {
            let s = &out.summary;
            println!(
                "{}: {} rows, {} pass, {} fail -> {} ({})",
                cfg.experiment.name(),
                s.rows,
                s.pass_count,
                s.fail_count,
                out.csv_path.display(),
                out.summary_path.display()
            );
            for (k, v) in &s.max_ratios {
                println!("  max {k} = {v:.6e}");
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(ncmax::Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn word_table(max_len: usize, output: &std::path::Path) -> ExitCode {
    match harness::write_word_table(max_len, output) {
        Ok(0) => {
            println!("freegroup sigma: no counterexamples up to length {max_len} -> {}", output.display());
            ExitCode::SUCCESS
        }
        Ok(n) => {
            println!("freegroup sigma: {n} counterexamples up to length {max_len} -> {}", output.display());
            ExitCode::from(1)
        }
        Err(ncmax::Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list {
        for e in Experiment::ALL {
            println!("{:<22} {}", e.name(), e.description());
        }
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("no subcommand given; see --help or --list");
        return ExitCode::from(2);
    };
    let cfg = match command {
        Command::Run { config } => ExperimentConfig::load(&config).map_err(|e| e.to_string()),
        Command::Cuculescu(c) => c.config(Experiment::Cuculescu),
        Command::StrongMaximal(c) => c.config(Experiment::StrongMaximal),
        Command::JmzTensorMartingale(c) => c.config(Experiment::JmzTensorMartingale),
        Command::ErgodicTensor(c) => c.config(Experiment::ErgodicTensor),
        Command::Limsup(c) => c.config(Experiment::Limsup),
        Command::SteinIntegral(c) => c.config(Experiment::SteinIntegral),
        Command::Remark23Divergence(c) => c.config(Experiment::Remark23Divergence),
        Command::FreegroupSigma(c) => c.config(Experiment::FreegroupSigma),
        Command::FreegroupDiagram(c) => c.config(Experiment::FreegroupDiagram),
        Command::Freegroup { max_len, t, check, seed, corpus_size, output } => {
            let experiment = match check {
                Check::Sigma => return word_table(max_len, &output),
                Check::Growth => Experiment::FreegroupSigma,
                Check::Diagram => Experiment::FreegroupDiagram,
            };
            let mut cfg = ExperimentConfig::preset(experiment, output);
            cfg.seed = seed;
            cfg.max_len = Some(max_len);
            cfg.t_values = Some(t);
            if experiment == Experiment::FreegroupDiagram {
                cfg.corpus_size = corpus_size;
            }
            cfg.validate().map(|_| cfg).map_err(|e| e.to_string())
        }
    };
    match cfg {
        Ok(cfg) => execute(&cfg),
        Err(msg) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
