//! Partition-time benchmarks over text length, token frequency or sketch size.
//!
//! CSV columns: `axis,value,mode,n,f,k,runs,windows,partition_seconds,dispersion_seconds`.
//! `windows` is the mean window count per run, `partition_seconds` the median
//! wall time per run and `dispersion_seconds` the median absolute deviation.

use std::io::{self, BufWriter, Write};
use std::time::Instant;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use walign_core::hashing::{HashFamily, HashKind};
use walign_core::oracle::{hard_case_text, random_text};
use walign_core::partition::{monotonic_partitioning, Mode};
use walign_core::weights::WeightScheme;
use walign_core::Text;

pub const CSV_HEADER: &str =
    "axis,value,mode,n,f,k,runs,windows,partition_seconds,dispersion_seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    N,
    F,
    K,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TextKind {
    /// Blocks of `f` copies of fresh tokens.
    Hard,
    /// Uniform tokens over an alphabet of `n / f` symbols.
    Random,
}

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated values for the chosen axis.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub f: usize,
    #[arg(long, short, default_value_t = 1)]
    pub k: usize,
    /// Keys visited while partitioning: active or all.
    #[arg(long, default_value = "active")]
    pub mode: String,
    /// Runs per grid point (at least 10).
    #[arg(long, default_value_t = 11)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "hard")]
    pub text: TextKind,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn make_text(kind: TextKind, n: usize, f: usize, seed: u64) -> Result<Text> {
    Ok(match kind {
        TextKind::Hard => hard_case_text(0, n, f)?,
        TextKind::Random => {
            let alphabet = (n / f.max(1)).max(1) as u32;
            random_text(&mut ChaCha8Rng::seed_from_u64(seed), 0, n, alphabet)
        }
    })
}

pub fn run(args: &BenchArgs) -> Result<()> {
    super::echo(args);
    if args.runs < 10 {
        bail!("--runs must be at least 10, got {}", args.runs);
    }
    let mode: Mode = args.mode.parse()?;
    let scheme = WeightScheme::raw_count();
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "{CSV_HEADER}")?;
    for &value in &args.grid {
        let (n, f, k) = match args.axis {
            Axis::N => (value, args.f, args.k),
            Axis::F => (args.n, value, args.k),
            Axis::K => (args.n, args.f, value),
        };
        let mut times = Vec::with_capacity(args.runs);
        let mut windows = 0usize;
        for r in 0..args.runs {
            let run_seed = args.seed.wrapping_add(r as u64);
            let text = make_text(args.text, n, f, run_seed)?;
            let family = HashFamily::sample(HashKind::Universal, k, run_seed)?;
            let start = Instant::now();
            for i in 0..k {
                let p = monotonic_partitioning(&text, &family.bind(i, &scheme), i as u32, mode)?;
                windows += p.len();
            }
            times.push(start.elapsed().as_secs_f64());
        }
        let med = median(&mut times);
        let mut dev: Vec<f64> = times.iter().map(|t| (t - med).abs()).collect();
        let mad = median(&mut dev);
        writeln!(
            out,
            "{},{value},{mode},{n},{f},{k},{},{:.1},{med:.6},{mad:.6}",
            serde_json::to_value(args.axis)?.as_str().unwrap_or("?"),
            args.runs,
            windows as f64 / args.runs as f64,
        )?;
        out.flush()?;
    }
    Ok(())
}
