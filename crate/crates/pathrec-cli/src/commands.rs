//! The six subcommands: ingest, analyze, train, eval, ablate, sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use pathrec::bundle::{
    load_bundle, load_checkpoint, save_bundle, save_checkpoint, Checkpoint, DatasetBundle,
};
use pathrec::evaluation::{ndcg_at_k, rank_for_split, recall_at_k, EvalSplit};
use pathrec::hetgraph::{
    filter_min_interactions, load_relations, split_interactions, subsample_interactions,
    HeteroGraph, InteractionSplit, Schema,
};
use pathrec::metapath::{commuting_matrix, correlation_report, link_score, MetaPath};
use pathrec::trainer::{
    fit, forward, init_params, EpochRecord, ModelParams, TrainConfig, TrainContext, Variant,
};

use crate::config::{config_from_pairs, config_pairs, resolved_text, ConfigFlags};

/// Shortest round-trippable decimal form, so CSVs are byte-stable and
/// re-parseable.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let mut out = Vec::new();
    for tok in s.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        out.push(tok.parse::<T>().map_err(|e| anyhow!("bad {what} `{tok}`: {e}"))?);
    }
    ensure!(!out.is_empty(), "empty {what} list");
    Ok(out)
}

fn parse_ks(s: &str) -> Result<Vec<usize>> {
    let ks: Vec<usize> = parse_list(s, "ranking depth")?;
    ensure!(ks.iter().all(|&k| k >= 1), "ranking depths must be at least 1");
    Ok(ks)
}

fn parse_split(s: &str) -> Result<EvalSplit> {
    match s {
        "test" => Ok(EvalSplit::Test),
        "valid" | "validation" => Ok(EvalSplit::Validation),
        other => bail!("unknown split `{other}` (expected test|valid)"),
    }
}

fn split_name(which: EvalSplit) -> &'static str {
    match which {
        EvalSplit::Validation => "valid",
        EvalSplit::Test => "test",
    }
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Recall@k and NDCG@k rows for one parameter set on one protocol stage.
fn metric_rows(
    params: &ModelParams,
    ctx: &TrainContext,
    cfg: &TrainConfig,
    split: &InteractionSplit,
    which: EvalSplit,
    ks: &[usize],
) -> Result<Vec<(&'static str, usize, f64)>> {
    let k_max = *ks.iter().max().expect("ks is validated nonempty");
    let fwd = forward(params, ctx, cfg, None)?;
    let h = params.h_rec.as_slice().expect("h_rec is contiguous");
    let r = rank_for_split(&fwd.z_rec, h, split, which, k_max)?;
    let mut rows = Vec::with_capacity(2 * ks.len());
    for &k in ks {
        rows.push(("recall", k, recall_at_k(&r, k)?));
    }
    for &k in ks {
        rows.push(("ndcg", k, ndcg_at_k(&r, k)?));
    }
    Ok(rows)
}

fn load_context(bundle: &DatasetBundle, cfg: &TrainConfig) -> Result<TrainContext> {
    Ok(TrainContext::new(
        &bundle.graph,
        &bundle.split.train,
        &cfg.meta_path,
        cfg.layers,
        cfg.encoder,
    )?)
}

// ---------------------------------------------------------------------------
// ingest

#[derive(Debug, clap::Args)]
pub struct IngestArgs {
    /// Directory holding the relation files and (by default) schema.txt.
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Schema file (default: <data-dir>/schema.txt).
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Output bundle path.
    #[arg(long)]
    pub out: PathBuf,
    /// Stats report path (default: <out>.stats.txt).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Drop users/items with fewer interactions than this (0 disables).
    #[arg(long, default_value_t = 5)]
    pub min_interactions: usize,
    /// Apply the interaction filter once instead of iterating to the
    /// fixed point that guarantees the bound on the surviving graph.
    #[arg(long)]
    pub filter_once: bool,
    /// Keep this fraction of interactions before filtering (reduced-scale runs).
    #[arg(long, default_value_t = 1.0)]
    pub subsample: f64,
    /// Seed for the subsample and the 80/10/10 split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn density_pct(nnz: usize, rows: usize, cols: usize) -> f64 {
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    100.0 * nnz as f64 / (rows as f64 * cols as f64)
}

fn graph_block(out: &mut String, g: &HeteroGraph, label: &str) {
    let _ = writeln!(out, "{label}");
    let _ = writeln!(out, "  node types:");
    for nt in &g.node_types {
        let _ = writeln!(out, "    {} ({}): {}", nt.name, nt.code, nt.count());
    }
    let _ = writeln!(out, "  relations:");
    for (i, rel) in g.relations.iter().enumerate() {
        let _ = writeln!(
            out,
            "    {}: {} -> {}, {} edges{}",
            rel.name,
            g.node_types[rel.src].name,
            g.node_types[rel.dst].name,
            rel.matrix.nnz(),
            if i == g.user_item { "  [interactions]" } else { "" }
        );
    }
    let ui = g.interactions();
    let _ = writeln!(
        out,
        "  interaction density: {:.4}% ({} / {}x{})",
        density_pct(ui.nnz(), g.n_users(), g.n_items()),
        ui.nnz(),
        g.n_users(),
        g.n_items()
    );
}

fn stats_report(args: &IngestArgs, raw: &HeteroGraph, g: &HeteroGraph, split: &InteractionSplit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ingest report: {}", args.data_dir.display());
    let _ = writeln!(out);
    graph_block(&mut out, raw, "raw graph");
    let _ = writeln!(out);
    if args.subsample < 1.0 {
        let _ = writeln!(
            out,
            "subsample: kept {:.1}% of interactions (seed {})",
            100.0 * args.subsample,
            args.seed
        );
        let _ = writeln!(out);
    }
    let mode = if args.filter_once { "single pass" } else { "iterated" };
    graph_block(
        &mut out,
        g,
        &format!("filtered graph (min interactions {}, {mode})", args.min_interactions),
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "split 80/10/10 (seed {})", args.seed);
    let _ = writeln!(out, "  train: {} interactions", split.train.nnz());
    let _ = writeln!(out, "  valid: {} pairs", split.valid.len());
    let _ = writeln!(out, "  test:  {} pairs", split.test.len());
    out
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let schema_path = args.schema.clone().unwrap_or_else(|| args.data_dir.join("schema.txt"));
    let schema_text = fs::read_to_string(&schema_path)
        .with_context(|| format!("reading schema {}", schema_path.display()))?;
    let schema = Schema::parse(&schema_text, &schema_path.display().to_string())?;
    let raw = load_relations(&args.data_dir, &schema)?;
    let sampled = if args.subsample < 1.0 {
        subsample_interactions(&raw, args.subsample, args.seed)?
    } else {
        ensure!(
            args.subsample == 1.0,
            "subsample fraction {} outside (0, 1]",
            args.subsample
        );
        raw.clone()
    };
    let filtered = filter_min_interactions(&sampled, args.min_interactions, !args.filter_once)?;
    let split = split_interactions(&filtered, args.seed);

    let mut provenance = String::new();
    let _ = writeln!(provenance, "data_dir = {}", args.data_dir.display());
    let _ = writeln!(provenance, "schema = {}", schema_path.display());
    let _ = writeln!(provenance, "min_interactions = {}", args.min_interactions);
    let _ = writeln!(provenance, "filter = {}", if args.filter_once { "single" } else { "iterated" });
    let _ = writeln!(provenance, "subsample = {}", num(args.subsample));
    let _ = writeln!(provenance, "seed = {}", args.seed);

    let report = stats_report(&args, &raw, &filtered, &split);
    let bundle = DatasetBundle { graph: filtered, split, schema_text, provenance };
    save_bundle(&args.out, &bundle)?;

    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.stats.txt", args.out.display())));
    fs::write(&report_path, &report)
        .with_context(|| format!("writing report {}", report_path.display()))?;

    print!("{report}");
    println!();
    println!("bundle written to {}", args.out.display());
    println!("report written to {}", report_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    /// Ingested dataset bundle.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Meta-path over node-type codes, e.g. UUA.
    #[arg(long)]
    pub meta_path: String,
    /// Number of equal-width link-score bins over (0, 1].
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn analyze(args: AnalyzeArgs) -> Result<()> {
    let b = load_bundle(&args.bundle)?;
    let path = MetaPath::parse(&b.graph, &args.meta_path)?;
    let c = commuting_matrix(&b.graph, &path)?;
    let m = link_score(&c, &path.label)?;
    let report = correlation_report(&m, b.graph.interactions(), args.bins)?;

    println!("interaction probability by {} link score ({} bins)", path.label, args.bins);
    for bin in &report {
        if bin.lo == 0.0 && bin.hi == 0.0 {
            println!(
                "  score 0 (no path):     p = {:.6}  support = {}",
                bin.probability, bin.support
            );
        } else {
            println!(
                "  score ({:.2}, {:.2}]:   p = {:.6}  support = {}",
                bin.lo, bin.hi, bin.probability, bin.support
            );
        }
    }

    let rows: Vec<Vec<String>> = report
        .iter()
        .skip(1)
        .map(|bin| vec![num(bin.lo), num(bin.hi), num(bin.probability), bin.support.to_string()])
        .collect();
    write_csv(&args.out, &header(&["bin_lo", "bin_hi", "probability", "support"]), &rows)?;
    println!("correlation table written to {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// train

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    /// Ingested dataset bundle.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Output directory for checkpoint.bin, history.csv, config.resolved.
    #[arg(long)]
    pub out: PathBuf,
    /// Continue training from an existing checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[command(flatten)]
    pub cfg: ConfigFlags,
}

fn history_header(eval_k: usize) -> Vec<String> {
    vec![
        "epoch".into(),
        "loss_rec".into(),
        "loss_pre".into(),
        "loss_con".into(),
        format!("val_recall{eval_k}"),
        format!("val_ndcg{eval_k}"),
    ]
}

fn history_row(r: &EpochRecord) -> Vec<String> {
    vec![
        r.epoch.to_string(),
        num(r.loss_rec),
        num(r.loss_pre),
        num(r.loss_con),
        num(r.val_recall),
        num(r.val_ndcg),
    ]
}

pub fn train(args: TrainArgs) -> Result<()> {
    let cfg = args.cfg.resolve()?;
    let bundle = load_bundle(&args.bundle)?;
    let ctx = load_context(&bundle, &cfg)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let config_path = args.out.join("config.resolved");
    fs::write(&config_path, resolved_text(&cfg))
        .with_context(|| format!("writing {}", config_path.display()))?;

    let (params, start_epoch, resumed_best) = match &args.resume {
        Some(path) => {
            let ck = load_checkpoint(path)?;
            ensure!(
                ck.n_users as usize == ctx.n_users && ck.n_items as usize == ctx.n_items,
                "checkpoint is for {}x{} users x items but the bundle has {}x{}",
                ck.n_users,
                ck.n_items,
                ctx.n_users,
                ctx.n_items
            );
            ensure!(
                ck.params.dim() == cfg.dim,
                "checkpoint dim {} != configured dim {}",
                ck.params.dim(),
                cfg.dim
            );
            (ck.params, ck.epochs_done as usize, Some((ck.best_epoch, ck.best_recall)))
        }
        None => (init_params(&cfg, ctx.n_nodes())?, 0, None),
    };

    let hist_path = args.out.join("history.csv");
    let fresh_history = !(args.resume.is_some() && hist_path.exists());
    let file = fs::OpenOptions::new()
        .create(true)
        .append(!fresh_history)
        .write(true)
        .truncate(fresh_history)
        .open(&hist_path)
        .with_context(|| format!("opening {}", hist_path.display()))?;
    let mut hist = csv::Writer::from_writer(file);
    if fresh_history {
        hist.write_record(&history_header(cfg.eval_k))?;
        hist.flush()?;
    }

    let ckpt_path = args.out.join("checkpoint.bin");
    if cfg.max_epochs <= start_epoch {
        let (best_epoch, best_recall) = resumed_best.unwrap_or((0, 0.0));
        let ck = Checkpoint {
            config: config_pairs(&cfg),
            epochs_done: start_epoch as u64,
            n_users: ctx.n_users as u64,
            n_items: ctx.n_items as u64,
            best_epoch,
            best_recall,
            params,
        };
        save_checkpoint(&ckpt_path, &ck)?;
        println!(
            "no epochs to run (max_epochs {} <= {} done); checkpoint written to {}",
            cfg.max_epochs,
            start_epoch,
            ckpt_path.display()
        );
        return Ok(());
    }

    println!(
        "training {} users x {} items, meta-path {}, dim {}, epochs {}..{}",
        ctx.n_users, ctx.n_items, cfg.meta_path, cfg.dim, start_epoch, cfg.max_epochs
    );
    let mut csv_err: Option<anyhow::Error> = None;
    let result = fit(params, &ctx, &bundle.split, &cfg, start_epoch, |r| {
        println!(
            "epoch {:>4}  loss rec {:.6} pre {:.6} con {:.6}  val recall@{} {:.6} ndcg@{} {:.6}",
            r.epoch, r.loss_rec, r.loss_pre, r.loss_con, cfg.eval_k, r.val_recall, cfg.eval_k, r.val_ndcg
        );
        if csv_err.is_none() {
            let write = hist
                .write_record(&history_row(r))
                .map_err(anyhow::Error::from)
                .and_then(|()| hist.flush().map_err(anyhow::Error::from));
            if let Err(e) = write {
                csv_err = Some(e);
            }
        }
    })?;
    if let Some(e) = csv_err {
        return Err(e.context(format!("writing {}", hist_path.display())));
    }

    let epochs_done = result.history.last().map(|r| r.epoch + 1).unwrap_or(start_epoch);
    let ck = Checkpoint {
        config: config_pairs(&cfg),
        epochs_done: epochs_done as u64,
        n_users: ctx.n_users as u64,
        n_items: ctx.n_items as u64,
        best_epoch: result.best_epoch as u64,
        best_recall: result.best_recall,
        params: result.params,
    };
    save_checkpoint(&ckpt_path, &ck)?;
    println!(
        "best epoch {} (val recall@{} {:.6}); {} epochs done",
        result.best_epoch, cfg.eval_k, result.best_recall, epochs_done
    );
    println!("checkpoint written to {}", ckpt_path.display());
    println!("history written to {}", hist_path.display());
    println!("resolved config written to {}", config_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Trained checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Bundle the checkpoint was trained on.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Which held-out pairs to judge: test | valid.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Comma-separated ranking depths.
    #[arg(long, default_value = "5,10,15,20")]
    pub ks: String,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let which = parse_split(&args.split)?;
    let ks = parse_ks(&args.ks)?;
    let ck = load_checkpoint(&args.checkpoint)?;
    let cfg = config_from_pairs(&ck.config)?;
    let bundle = load_bundle(&args.bundle)?;
    ensure!(
        ck.n_users as usize == bundle.split.n_users()
            && ck.n_items as usize == bundle.split.n_items(),
        "checkpoint is for {}x{} users x items but the bundle has {}x{}",
        ck.n_users,
        ck.n_items,
        bundle.split.n_users(),
        bundle.split.n_items()
    );
    let ctx = load_context(&bundle, &cfg)?;
    let rows = metric_rows(&ck.params, &ctx, &cfg, &bundle.split, which, &ks)?;

    println!(
        "{} metrics after {} epochs (best epoch {}):",
        split_name(which),
        ck.epochs_done,
        ck.best_epoch
    );
    for (metric, k, v) in &rows {
        println!("  {metric}@{k}: {v:.6}");
    }
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(metric, k, v)| vec![metric.to_string(), k.to_string(), num(*v)])
        .collect();
    write_csv(&args.out, &header(&["metric", "k", "value"]), &csv_rows)?;
    println!("metrics written to {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// ablate

#[derive(Debug, clap::Args)]
pub struct AblateArgs {
    /// Ingested dataset bundle.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated seeds; each variant trains once per seed.
    #[arg(long, default_value = "0,1,2")]
    pub seeds: String,
    /// Comma-separated subset of: full, no-contrastive, rec-only.
    #[arg(long, default_value = "full,no-contrastive,rec-only")]
    pub variants: String,
    /// Which held-out pairs to judge: test | valid.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Comma-separated ranking depths.
    #[arg(long, default_value = "20")]
    pub ks: String,
    #[command(flatten)]
    pub cfg: ConfigFlags,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn progress_logger(eval_k: usize) -> impl FnMut(&EpochRecord) {
    move |r: &EpochRecord| {
        if r.epoch % 10 == 0 {
            println!(
                "    epoch {:>4}  loss rec {:.6}  val recall@{} {:.6}",
                r.epoch, r.loss_rec, eval_k, r.val_recall
            );
        }
    }
}

pub fn ablate(args: AblateArgs) -> Result<()> {
    let base = args.cfg.resolve()?;
    let seeds: Vec<u64> = parse_list(&args.seeds, "seed")?;
    let variants: Vec<Variant> = {
        let names: Vec<String> = parse_list(&args.variants, "variant")?;
        names
            .iter()
            .map(|n| n.parse::<Variant>().map_err(anyhow::Error::from))
            .collect::<Result<Vec<_>>>()?
    };
    let which = parse_split(&args.split)?;
    let ks = parse_ks(&args.ks)?;
    let bundle = load_bundle(&args.bundle)?;
    let ctx = load_context(&bundle, &base)?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut summary: Vec<(String, f64, f64)> = Vec::new();
    for &variant in &variants {
        let mut headline: Vec<f64> = Vec::new();
        for &seed in &seeds {
            let mut cfg = base.clone();
            cfg.seed = seed;
            println!("ablate {} seed {seed}:", variant.label());
            let fitres = {
                let mut log = progress_logger(cfg.eval_k);
                let vcfg = {
                    let mut c = cfg.clone();
                    c.weights = variant.apply(&cfg.weights);
                    c
                };
                let params = init_params(&vcfg, ctx.n_nodes())?;
                fit(params, &ctx, &bundle.split, &vcfg, 0, &mut log)?
            };
            println!(
                "  best epoch {} (val recall@{} {:.6})",
                fitres.best_epoch, cfg.eval_k, fitres.best_recall
            );
            let metrics = metric_rows(&fitres.params, &ctx, &cfg, &bundle.split, which, &ks)?;
            for (metric, k, v) in &metrics {
                if *metric == "recall" && *k == ks[0] {
                    headline.push(*v);
                }
                rows.push(vec![
                    variant.label().to_string(),
                    seed.to_string(),
                    metric.to_string(),
                    k.to_string(),
                    num(*v),
                ]);
            }
        }
        let (mean, std) = mean_std(&headline);
        summary.push((variant.label().to_string(), mean, std));
    }

    println!("{} recall@{} across {} seeds:", split_name(which), ks[0], seeds.len());
    for (label, mean, std) in &summary {
        println!("  {label:>15}: mean {mean:.6}  std {std:.6}");
    }
    write_csv(&args.out, &header(&["variant", "seed", "metric", "k", "value"]), &rows)?;
    println!("ablation table written to {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    /// Ingested dataset bundle.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Swept axis: layers | theta-neg | meta-path.
    #[arg(long)]
    pub axis: String,
    /// Comma-separated settings for the axis.
    #[arg(long)]
    pub values: String,
    /// Which held-out pairs to judge: test | valid.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Comma-separated ranking depths.
    #[arg(long, default_value = "5,10,15,20")]
    pub ks: String,
    #[command(flatten)]
    pub cfg: ConfigFlags,
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let base = args.cfg.resolve()?;
    let values: Vec<String> = parse_list(&args.values, "setting")?;
    let which = parse_split(&args.split)?;
    let ks = parse_ks(&args.ks)?;
    ensure!(
        matches!(args.axis.as_str(), "layers" | "theta-neg" | "meta-path"),
        "unknown sweep axis `{}` (expected layers|theta-neg|meta-path)",
        args.axis
    );
    let bundle = load_bundle(&args.bundle)?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for value in &values {
        let mut cfg = base.clone();
        match args.axis.as_str() {
            "layers" => {
                cfg.layers = value
                    .parse()
                    .map_err(|e| anyhow!("bad layer count `{value}`: {e}"))?
            }
            "theta-neg" => {
                cfg.weights.theta_neg = value
                    .parse()
                    .map_err(|e| anyhow!("bad negative-score ceiling `{value}`: {e}"))?
            }
            "meta-path" => cfg.meta_path = value.clone(),
            _ => unreachable!("axis was validated above"),
        }
        cfg.validate()?;
        let ctx = load_context(&bundle, &cfg)?;
        println!("sweep {} = {value}:", args.axis);
        let params = init_params(&cfg, ctx.n_nodes())?;
        let mut log = progress_logger(cfg.eval_k);
        let fitres = fit(params, &ctx, &bundle.split, &cfg, 0, &mut log)?;
        println!(
            "  best epoch {} (val recall@{} {:.6})",
            fitres.best_epoch, cfg.eval_k, fitres.best_recall
        );
        let metrics = metric_rows(&fitres.params, &ctx, &cfg, &bundle.split, which, &ks)?;
        for (metric, k, v) in &metrics {
            rows.push(vec![
                args.axis.clone(),
                value.clone(),
                metric.to_string(),
                k.to_string(),
                num(*v),
            ]);
        }
    }
    write_csv(&args.out, &header(&["axis", "setting", "metric", "k", "value"]), &rows)?;
    println!("sweep table written to {}", args.out.display());
    Ok(())
}
