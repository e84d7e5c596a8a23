//! Oracle suites: running example, partitions against brute-force grids,
//! queries against brute-force scoring, and estimator convergence.

use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use walign_core::hashing::{HashFamily, HashKind, HashValue, MinHasher};
use walign_core::index::InvertedIndex;
use walign_core::oracle::{
    brute_force_query, check_partition, grid, random_text, running_example, weighted_jaccard,
};
use walign_core::partition::{monotonic_partitioning, Mode};
use walign_core::query::query;
use walign_core::weights::{Idf, Tf, WeightScheme};
use walign_core::Text;

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random texts in the partition suite.
    #[arg(long, default_value_t = 200)]
    pub texts: usize,
    /// Maximum random text length.
    #[arg(long, default_value_t = 60)]
    pub max_n: usize,
    #[arg(long, default_value_t = 6)]
    pub alphabet: u32,
    /// Random instances in the query suite.
    #[arg(long, default_value_t = 50)]
    pub queries: usize,
    /// Largest text the brute-force grid accepts.
    #[arg(long, default_value_t = 512)]
    pub cap: usize,
    /// Shift one window edge by one before checking (negative control).
    #[arg(long)]
    pub inject_fault: bool,
}

type Suite = std::result::Result<String, String>;

fn golden() -> Suite {
    let (t, h) = running_example();
    let p = monotonic_partitioning(&t, &h, 0, Mode::ActiveKeys).map_err(|e| e.to_string())?;
    let g = grid(&t, &h, 512).map_err(|e| e.to_string())?;
    check_partition(&p, &g).map_err(|d| d.to_string())?;
    let has = |v, r| p.windows.iter().any(|w| w.v == HashValue::Universal(v) && w.rect() == r);
    if p.len() != 13 || !has(1, (1, 2, 8, 10)) || !has(2, (4, 5, 5, 10)) {
        return Err(format!("{} windows:\n{}", p.len(), p.dump()));
    }
    Ok("13 windows, grid agrees".into())
}

fn partitions(args: &VerifyArgs) -> Result<Suite> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut checked = 0;
    for i in 0..args.texts {
        let n = rng.random_range(1..=args.max_n);
        let text = random_text(&mut rng, i as u32, n, args.alphabet.max(1));
        let fn_seed: u64 = rng.random();
        let (family, scheme) = if i % 2 == 0 {
            (HashFamily::sample(HashKind::Universal, 1, fn_seed)?, WeightScheme::raw_count())
        } else {
            let tf = Tf::ALL[i / 2 % Tf::ALL.len()];
            (HashFamily::sample(HashKind::Icws, 1, fn_seed)?, WeightScheme::new(tf, Idf::Unary, None)?)
        };
        let h = family.bind(0, &scheme);
        let g = grid(&text, &h, args.cap)?;
        let all = monotonic_partitioning(&text, &h, 0, Mode::AllKeys)?;
        let mut act = monotonic_partitioning(&text, &h, 0, Mode::ActiveKeys)?;
        if args.inject_fault && i == 0 {
            let w = &mut act.windows[0];
            if w.d > w.c {
                w.d -= 1;
            } else {
                w.d += 1;
            }
        }
        if let Err(d) = check_partition(&act, &g) {
            return Ok(Err(format!("text {i} (n = {n}): {d}")));
        }
        if all.sorted_windows() != act.sorted_windows() {
            return Ok(Err(format!("text {i}: all-keys and active-keys windows differ")));
        }
        checked += 1;
    }
    Ok(Ok(format!("{checked} texts, both modes, universal and weighted hashes")))
}

fn queries(args: &VerifyArgs) -> Result<Suite> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x5157);
    for inst in 0..args.queries {
        let texts: Vec<Text> = (0..rng.random_range(1..4))
            .map(|id| {
                let n = rng.random_range(1..=args.max_n.min(40));
                random_text(&mut rng, id, n, args.alphabet.max(1))
            })
            .collect();
        let qn = rng.random_range(1..8);
        let q = random_text(&mut rng, 99, qn, args.alphabet.max(1));
        let k = rng.random_range(1..=16);
        let theta = [0.25, 0.5, 0.75, 1.0][inst % 4];
        let (family, scheme) = if inst % 2 == 0 {
            (HashFamily::sample(HashKind::Universal, k, inst as u64)?, WeightScheme::raw_count())
        } else {
            (HashFamily::sample(HashKind::Icws, k, inst as u64)?, WeightScheme::raw_count())
        };
        let expect = brute_force_query(&texts, &q, theta, &family, &scheme, args.cap)?;
        let (idx, _) = InvertedIndex::build_texts(&texts, family, scheme, Mode::ActiveKeys)?;
        let got = query(&idx, &q, theta)?.cells(1 << 22)?;
        if got != expect {
            let diff: Vec<_> = got.symmetric_difference(&expect).take(5).collect();
            return Ok(Err(format!("instance {inst}: cells differ, e.g. {diff:?}")));
        }
    }
    Ok(Ok(format!("{} instances equal brute force", args.queries)))
}

fn estimator(args: &VerifyArgs) -> Result<Suite> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0xe57);
    let k = 1000;
    let family = HashFamily::sample(HashKind::Icws, k, args.seed)?;
    let scheme = WeightScheme::raw_count();
    let mut within = 0;
    let pairs = 20;
    for _ in 0..pairs {
        let na = rng.random_range(5..30);
        let a = random_text(&mut rng, 0, na, 6);
        let b = random_text(&mut rng, 1, 20, 6);
        let j = weighted_jaccard(&a.tokens, &b.tokens, &scheme);
        let (ca, cb) = (a.counts(), b.counts());
        let hits = (0..k)
            .filter(|&i| {
                let h = family.bind(i, &scheme);
                h.min_hash(&ca) == h.min_hash(&cb)
            })
            .count();
        let est = hits as f64 / k as f64;
        if (est - j).abs() <= 3.0 * (j * (1.0 - j) / k as f64).sqrt() + 1e-12 {
            within += 1;
        }
    }
    Ok(if within >= pairs - 1 {
        Ok(format!("{within}/{pairs} estimates within 3 sigma"))
    } else {
        Err(format!("only {within}/{pairs} estimates within 3 sigma"))
    })
}

pub fn run(args: &VerifyArgs) -> Result<ExitCode> {
    super::echo(args);
    if args.max_n == 0 {
        bail!("--max-n must be at least 1");
    }
    let results = [
        ("running-example", golden()),
        ("partition-vs-grid", partitions(args)?),
        ("query-vs-brute-force", queries(args)?),
        ("estimator-convergence", estimator(args)?),
    ];
    let mut failed = false;
    for (name, r) in &results {
        match r {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed = true;
                println!("FAIL {name}: {d}");
            }
        }
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
