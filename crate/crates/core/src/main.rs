use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qectg::dataset::{generate_dataset, Dataset};
use qectg::harness::{self, AnyDecoder, DecoderKind, TrainOptions};
use qectg::lattice::{CheckKind, Lattice};
use qectg::neural::TrainConfig;
use qectg::simple::SimpleDecoder;
use qectg::tiles::make_tiles;

#[derive(Parser)]
#[command(
    name = "qectg",
    version,
    about = "Rotated surface code decoding experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print lattice, tile and network input sizes.
    Info {
        #[arg(long)]
        d: usize,
    },
    /// Sample a training dataset labelled by the simple decoder's residual class.
    GenData {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit tile tables and train the networks.
    Train(TrainArgs),
    /// Monte Carlo logical error rate of one decoder.
    Eval {
        #[arg(long)]
        decoder: DecoderKind,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, env = "QECTG_WORKERS")]
        workers: Option<usize>,
    },
    /// Evaluate several decoders over a grid of error rates and write CSV.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "simple,mwpm")]
        decoders: Vec<DecoderKind>,
        #[arg(long)]
        d: usize,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.01,0.02,0.04,0.06,0.08,0.1,0.15"
        )]
        p_grid: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, env = "QECTG_WORKERS")]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Distributed,
    Gated,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_prefix: PathBuf,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "128,64")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().momentum)]
    momentum: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    batch: usize,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().l2_penalty)]
    l2: f64,
    #[arg(long, default_value_t = TrainConfig::default().seed)]
    seed: u64,
    /// Laplace smoothing of the tile tables.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

fn workers(w: Option<usize>) -> usize {
    w.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn info(d: usize) -> Result<()> {
    let lat = Lattice::new(d)?;
    let tiles = make_tiles(&lat);
    println!("distance            {d}");
    println!("data qubits         {}", lat.data_count());
    println!("parity checks       {}", lat.check_count());
    println!(
        "  Z-type            {}",
        lat.checks_of(CheckKind::Z).count()
    );
    println!(
        "  X-type            {}",
        lat.checks_of(CheckKind::X).count()
    );
    println!("logical X support   {:?}", lat.logical_x_support());
    println!("logical Z support   {:?}", lat.logical_z_support());
    println!("tiles               {}", tiles.len());
    println!("sliced bits         {}", 8 * tiles.len());
    println!("network inputs      {}", 4 * tiles.len());
    println!("gate inputs         {}", lat.check_count());
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let data =
        Dataset::load(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
    let lat = Lattice::new(data.d)?;
    let opts = TrainOptions {
        hidden: args.hidden,
        alpha: args.alpha,
        config: TrainConfig {
            learning_rate: args.lr,
            momentum: args.momentum,
            batch_size: args.batch,
            epochs: args.epochs,
            l2_penalty: args.l2,
            seed: args.seed,
        },
    };
    let summary = match args.mode {
        Mode::Distributed => {
            let (model, summary) = harness::train_distributed(&data, &lat, &opts)?;
            model.save(&args.out_prefix)?;
            summary
        }
        Mode::Gated => {
            let (model, summary) = harness::train_gated(&data, &lat, &opts)?;
            model.save(&args.out_prefix)?;
            summary
        }
    };
    if !summary.missing_classes.is_empty() {
        eprintln!(
            "warning: classes {:?} never occur in the training targets",
            summary.missing_classes
        );
    }
    println!("records for 4-class net: {}", summary.net_records);
    for (i, l) in summary.net_losses.iter().enumerate() {
        println!("net  epoch {i:>3} loss {l:.6}");
    }
    for (i, l) in summary.gate_losses.iter().enumerate() {
        println!("gate epoch {i:>3} loss {l:.6}");
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Info { d } => info(d)?,
        Command::GenData { d, p, n, seed, out } => {
            if n == 0 {
                bail!("--n must be at least 1");
            }
            let lat = Lattice::new(d)?;
            let data = generate_dataset(&lat, &SimpleDecoder::new(&lat)?, p, n, seed)?;
            data.save(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            let f = data.class_fractions();
            println!(
                "wrote {n} records to {} (I {:.4} X {:.4} Z {:.4} Y {:.4})",
                out.display(),
                f[0],
                f[1],
                f[2],
                f[3]
            );
        }
        Command::Train(args) => train(args)?,
        Command::Eval {
            decoder,
            d,
            p,
            trials,
            seed,
            models,
            workers: w,
        } => {
            let lat = Lattice::new(d)?;
            let dec = AnyDecoder::build(decoder, &lat, models.as_deref())?;
            let r = harness::evaluate(decoder.as_str(), &dec, &lat, p, trials, seed, workers(w))?;
            let mut out = csv::Writer::from_writer(std::io::stdout());
            out.serialize(&r)?;
            out.flush()?;
        }
        Command::Sweep {
            decoders,
            d,
            p_grid,
            trials,
            seed,
            csv,
            models,
            workers: w,
        } => {
            let lat = Lattice::new(d)?;
            let decs = decoders
                .iter()
                .map(|&k| AnyDecoder::build(k, &lat, models.as_deref()))
                .collect::<qectg::Result<Vec<_>>>()?;
            let rows = harness::sweep(&decs, &lat, &p_grid, trials, seed, workers(w), &csv)?;
            for r in rows {
                println!(
                    "{:<12} p={:<6} ler={:.6} [{:.6}, {:.6}]",
                    r.decoder, r.p, r.ler, r.ci_low, r.ci_high
                );
            }
        }
    }
    Ok(())
}
