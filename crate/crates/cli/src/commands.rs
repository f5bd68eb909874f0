use std::collections::BTreeMap;
use std::path::Path;

use bcepp_core::loss::{curve_csv, loss_curve, open_unit_grid, LossConfig, Reduction};
use bcepp_core::metrics::{ConfusionMatrix, MetricsReport};
use bcepp_core::ordinal::{binarize, proximity_weights, BinaryLabel, FlareClass, ThresholdSpec};
use bcepp_core::par::Exec;
use bcepp_core::pipeline::{
    class_counts, partition_samples, prepare_splits, read_dataset, synth_dataset, write_dataset,
    BalancePlan, LabeledSample, Partition, SplitRole, StoredSample, SynthSpec, MANIFEST_FILE,
};
use bcepp_core::trainer::{
    epoch_log_csv, evaluate, grid_search, leaderboard_csv, run_benchmark, train as fit,
    BenchmarkSpec, Checkpoint, FeatureSpec, LossKind, ModelKind, ModelSpec, SearchSpace, Split,
    Standardizer, TrainConfig,
};

use crate::config::{parse_list, ConfigFile};
use crate::failure::{emit, say, CliResult, Failure};
use crate::manifest::Run;
use crate::{BenchArgs, CurvesArgs, EvalArgs, GenArgs, MetricsArgs, PrepareArgs, TrainArgs};

fn parse_counts(s: &str) -> CliResult<BTreeMap<FlareClass, usize>> {
    let mut counts = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (class, n) = part
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--counts: expected CLASS=N, got {part:?}")))?;
        let class: FlareClass = class
            .parse()
            .map_err(|e| Failure::usage(format!("--counts: {e}")))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|e| Failure::usage(format!("--counts {part:?}: {e}")))?;
        if counts.insert(class, n).is_some() {
            return Err(Failure::usage(format!("--counts lists {class} twice")));
        }
    }
    Ok(counts)
}

fn format_counts(counts: &BTreeMap<FlareClass, usize>) -> String {
    counts
        .iter()
        .map(|(c, n)| format!("{c}={n}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn label_totals(samples: &[LabeledSample]) -> (usize, usize) {
    let fl = samples
        .iter()
        .filter(|s| s.label() == BinaryLabel::FL)
        .count();
    (samples.len() - fl, fl)
}

fn split_dir(data: &Path, role: SplitRole) -> std::path::PathBuf {
    data.join(role.name())
}

fn load_split(
    data: &Path,
    role: SplitRole,
    threshold: ThresholdSpec,
) -> CliResult<Vec<LabeledSample>> {
    Ok(
        read_dataset(&split_dir(data, role), MANIFEST_FILE, threshold)?
            .into_iter()
            .map(|s| s.sample)
            .collect(),
    )
}

pub fn gen(a: &GenArgs, dry: bool) -> CliResult<()> {
    let counts = parse_counts(&a.counts)?;
    let mut run = Run::new("gen", Some(a.seed), Some(&a.out));
    run.set("counts", format_counts(&counts))
        .set("seed", a.seed)
        .set("size", a.size)
        .set("threshold", a.threshold)
        .set("out", a.out.display());
    if dry {
        return run.print_manifest();
    }
    let spec = SynthSpec {
        counts,
        image_size: a.size,
        seed: a.seed,
        threshold: a.threshold,
    };
    let samples = synth_dataset(&spec)?;
    let stored: Vec<StoredSample> = if samples.is_empty() {
        Vec::new()
    } else {
        let assignment = partition_samples(&samples)?;
        samples
            .into_iter()
            .map(|sample| StoredSample {
                partition: assignment
                    .partition(sample.region_id())
                    .expect("region assigned"),
                sample,
            })
            .collect()
    };
    let out = run.out_dir()?.to_path_buf();
    write_dataset(&out, MANIFEST_FILE, &stored)?;
    run.record_output(&out.join(MANIFEST_FILE));
    say!("wrote {} samples to {}", stored.len(), out.display());
    run.finish()
}

pub fn prepare(a: &PrepareArgs, dry: bool) -> CliResult<()> {
    let mut run = Run::new("prepare", Some(a.seed), Some(&a.out));
    run.set("in", a.input.display())
        .set("threshold", a.threshold)
        .set("balance", a.balance)
        .set("seed", a.seed)
        .set("out", a.out.display());
    run.input(&a.input.join(MANIFEST_FILE));
    if dry {
        return run.print_manifest();
    }
    let stored = read_dataset(&a.input, MANIFEST_FILE, a.threshold)?;
    let partitions: BTreeMap<u64, Partition> = stored
        .iter()
        .map(|s| (s.sample.region_id(), s.partition))
        .collect();
    let plan = BalancePlan::default();
    let splits = prepare_splits(&stored, a.threshold, a.balance.then_some((&plan, a.seed)))?;
    let out = run.out_dir()?.to_path_buf();
    for (role, samples) in splits.roles() {
        let rows: Vec<StoredSample> = samples
            .iter()
            .map(|s| StoredSample {
                sample: s.clone(),
                partition: partitions[&s.region_id()],
            })
            .collect();
        let dir = split_dir(&out, role);
        write_dataset(&dir, MANIFEST_FILE, &rows)?;
        run.record_output(&dir.join(MANIFEST_FILE));
        let (nf, fl) = label_totals(samples);
        let counts = class_counts(samples);
        say!(
            "{}: {} NF={nf} FL={fl}",
            role.name(),
            format_counts(&counts)
        );
    }
    run.finish()
}

const TRAIN_KEYS: &[&str] = &[
    "loss",
    "alpha",
    "lr",
    "weight-decay",
    "batch-size",
    "epochs",
    "seed",
    "threshold",
    "model",
    "hidden",
    "pool",
    "grid-lr",
    "grid-weight-decay",
    "grid-batch-size",
    "grid-alpha",
];

const DEFAULT_SEED: u64 = 42;
const DEFAULT_MLP_HIDDEN: &str = "32";

pub fn train(a: &TrainArgs, dry: bool) -> CliResult<()> {
    let file = match &a.config {
        Some(p) => ConfigFile::load(p, TRAIN_KEYS)?,
        None => ConfigFile::default(),
    };
    let loss_kind = file.resolve(a.loss, "loss", LossKind::BcePp)?;
    let d = TrainConfig::defaults(loss_kind);
    let cfg = TrainConfig {
        loss_kind,
        initial_lr: file.resolve(a.lr, "lr", d.initial_lr)?,
        weight_decay: file.resolve(a.weight_decay, "weight-decay", d.weight_decay)?,
        batch_size: file.resolve(a.batch_size, "batch-size", d.batch_size)?,
        alpha: file.resolve(a.alpha, "alpha", d.alpha)?,
        epochs: file.resolve(a.epochs, "epochs", d.epochs)?,
        seed: file.resolve(a.seed, "seed", DEFAULT_SEED)?,
        threshold: file.resolve(a.threshold, "threshold", d.threshold)?,
    };
    let model_kind = file.resolve(a.model, "model", ModelKind::Linear)?;
    let features = FeatureSpec {
        pool: file.resolve(a.pool, "pool", FeatureSpec::default().pool)?,
    };
    let hidden = match model_kind {
        ModelKind::Linear => Vec::new(),
        ModelKind::Mlp => parse_list(
            "hidden",
            &file
                .resolve_opt(a.hidden.clone(), "hidden")
                .unwrap_or_else(|| DEFAULT_MLP_HIDDEN.into()),
        )?,
    };
    let spec = ModelSpec {
        kind: model_kind,
        hidden_sizes: hidden.clone(),
        input_dim: features.dim(),
    };
    spec.validate()?;
    cfg.validate()?;

    let grid_axes = [
        ("grid-lr", file.resolve_opt(a.grid_lr.clone(), "grid-lr")),
        (
            "grid-weight-decay",
            file.resolve_opt(a.grid_weight_decay.clone(), "grid-weight-decay"),
        ),
        (
            "grid-batch-size",
            file.resolve_opt(a.grid_batch_size.clone(), "grid-batch-size"),
        ),
        (
            "grid-alpha",
            file.resolve_opt(a.grid_alpha.clone(), "grid-alpha"),
        ),
    ];
    let grid = if grid_axes.iter().any(|(_, v)| v.is_some()) {
        let point = SearchSpace::point(&cfg);
        let axis = |i: usize| grid_axes[i].1.as_deref();
        Some(SearchSpace {
            learning_rates: axis(0)
                .map_or(Ok(point.learning_rates), |s| parse_list("grid-lr", s))?,
            weight_decays: axis(1).map_or(Ok(point.weight_decays), |s| {
                parse_list("grid-weight-decay", s)
            })?,
            batch_sizes: axis(2)
                .map_or(Ok(point.batch_sizes), |s| parse_list("grid-batch-size", s))?,
            alphas: axis(3).map_or(Ok(point.alphas), |s| parse_list("grid-alpha", s))?,
        })
    } else {
        None
    };

    let mut run = Run::new("train", Some(cfg.seed), Some(&a.out));
    run.set("data", a.data.display())
        .set("loss", cfg.loss_kind)
        .set("lr", cfg.initial_lr)
        .set("weight-decay", cfg.weight_decay)
        .set("batch-size", cfg.batch_size)
        .set("alpha", cfg.alpha)
        .set("epochs", cfg.epochs)
        .set("seed", cfg.seed)
        .set("threshold", cfg.threshold)
        .set("model", model_kind)
        .set("pool", features.pool)
        .set("out", a.out.display());
    if model_kind == ModelKind::Mlp {
        run.set(
            "hidden",
            hidden
                .iter()
                .map(|h| h.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    if let Some(space) = &grid {
        let join = |v: Vec<String>| v.join(",");
        run.set(
            "grid-lr",
            join(space.learning_rates.iter().map(f64::to_string).collect()),
        )
        .set(
            "grid-weight-decay",
            join(space.weight_decays.iter().map(f64::to_string).collect()),
        )
        .set(
            "grid-batch-size",
            join(space.batch_sizes.iter().map(usize::to_string).collect()),
        )
        .set(
            "grid-alpha",
            join(space.alphas.iter().map(f64::to_string).collect()),
        );
    }
    for role in [SplitRole::Train, SplitRole::Validation] {
        run.input(&split_dir(&a.data, role).join(MANIFEST_FILE));
    }
    if dry {
        // surfaces the out-of-range alpha warning without training
        cfg.loss_config(Reduction::Mean)?;
        return run.print_manifest();
    }

    let exec = Exec::default();
    let mut train_split = Split::from_samples(
        &load_split(&a.data, SplitRole::Train, cfg.threshold)?,
        features,
        exec,
    );
    let mut val_split = Split::from_samples(
        &load_split(&a.data, SplitRole::Validation, cfg.threshold)?,
        features,
        exec,
    );
    let scaler = Standardizer::fit(&train_split.features);
    scaler.apply_all(&mut train_split.features);
    scaler.apply_all(&mut val_split.features);

    if let Some(space) = grid {
        let board = grid_search(&space, &cfg, &spec, &train_split, &val_split, exec)?;
        run.write("leaderboard.csv", &leaderboard_csv(&board))?;
        let best = &board[0];
        say!(
            "{} grid points; best lr={} weight_decay={} batch_size={} alpha={} css={:.4}",
            board.len(),
            best.config.initial_lr,
            best.config.weight_decay,
            best.config.batch_size,
            best.config.alpha,
            best.scores.css
        );
        return run.finish();
    }

    let outcome = fit(&train_split, &val_split, spec, &cfg, exec)?;
    let checkpoint = Checkpoint {
        model: outcome.model,
        features,
        scaler,
        config: cfg,
    };
    run.write("checkpoint.txt", &checkpoint.to_text())?;
    run.write("epoch_log.csv", &epoch_log_csv(&outcome.history))?;
    if let Some(last) = outcome.history.last() {
        say!(
            "epoch {}: train_loss={:.6} val_loss={:.6} val_css={:.4} lr={}",
            last.epoch,
            last.train_loss,
            last.val_loss,
            last.val_scores.css,
            last.lr
        );
    }
    run.finish()
}

pub fn eval(a: &EvalArgs, dry: bool) -> CliResult<()> {
    let mut run = Run::new("eval", None, a.out.as_deref());
    run.set("checkpoint", a.checkpoint.display())
        .set("data", a.data.display())
        .set("split", a.split.name())
        .set("cutoff", a.cutoff);
    if let Some(out) = &a.out {
        run.set("out", out.display());
    }
    run.input(&a.checkpoint)
        .input(&split_dir(&a.data, a.split).join(MANIFEST_FILE));
    if dry {
        return run.print_manifest();
    }
    let ck = Checkpoint::read(&a.checkpoint)?;
    let samples = load_split(&a.data, a.split, ck.config.threshold)?;
    let mut split = Split::from_samples(&samples, ck.features, Exec::default());
    ck.scaler.apply_all(&mut split.features);
    if split.dim() != Some(ck.model.spec().input_dim) {
        return Err(Failure::usage(format!(
            "split features have dimension {:?}, checkpoint expects {}",
            split.dim(),
            ck.model.spec().input_dim
        )));
    }
    let (confusion, scores) = evaluate(&ck.model, &split, a.cutoff, Exec::default())?;
    let report = MetricsReport { confusion, scores };
    emit(&report.to_string())?;
    if a.out.is_some() {
        run.write(
            &format!("metrics_{}.txt", a.split.name()),
            &report.to_string(),
        )?;
    }
    run.finish()
}

pub fn metrics(a: &MetricsArgs, dry: bool) -> CliResult<()> {
    let mut run = Run::new("metrics", None, a.out.as_deref());
    run.set("tp", a.tp)
        .set("fp", a.fp)
        .set("tn", a.tn)
        .set("fn", a.fn_);
    if let Some(out) = &a.out {
        run.set("out", out.display());
    }
    if dry {
        return run.print_manifest();
    }
    let report = MetricsReport::new(ConfusionMatrix::new(a.tp, a.fp, a.tn, a.fn_))?;
    emit(&report.to_string())?;
    if a.out.is_some() {
        run.write("metrics.txt", &report.to_string())?;
    }
    run.finish()
}

/// File name for one curve, e.g. `curve_M_fl_alpha0.25.csv`.
pub fn curve_file_name(class: FlareClass, target: BinaryLabel, alpha: f64) -> String {
    format!(
        "curve_{class}_{}_alpha{alpha}.csv",
        target.to_string().to_lowercase()
    )
}

pub fn curves(a: &CurvesArgs, dry: bool) -> CliResult<()> {
    let alphas: Vec<f64> = parse_list("alpha", &a.alpha)?;
    if alphas.is_empty() {
        return Err(Failure::usage("--alpha needs at least one value"));
    }
    if a.grid < 2 {
        return Err(Failure::usage(format!(
            "--grid must be at least 2, got {}",
            a.grid
        )));
    }
    let mut run = Run::new("curves", None, Some(&a.out));
    run.set(
        "alpha",
        alphas
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(","),
    )
    .set("threshold", a.threshold)
    .set("grid", a.grid)
    .set("out", a.out.display());
    let configs = alphas
        .iter()
        .map(|&alpha| LossConfig::new(alpha, proximity_weights(a.threshold), Reduction::Mean))
        .collect::<bcepp_core::Result<Vec<_>>>()?;
    if dry {
        return run.print_manifest();
    }
    let grid = open_unit_grid(a.grid);
    for (alpha, cfg) in alphas.iter().zip(&configs) {
        for class in FlareClass::ALL {
            let target = binarize(class, a.threshold);
            let points = loss_curve(class, target, cfg, &grid)?;
            run.write(&curve_file_name(class, target, *alpha), &curve_csv(&points))?;
        }
    }
    say!(
        "wrote {} curve files to {}",
        alphas.len() * FlareClass::ALL.len(),
        a.out.display()
    );
    run.finish()
}

pub fn bench(a: &BenchArgs, dry: bool) -> CliResult<()> {
    if a.scale == 0 {
        return Err(Failure::usage("--scale must be positive"));
    }
    let mut run = Run::new("bench", Some(a.seed), Some(&a.out));
    run.set("seed", a.seed)
        .set("scale", a.scale)
        .set("epochs", a.epochs)
        .set("out", a.out.display());
    if dry {
        return run.print_manifest();
    }
    let spec = BenchmarkSpec {
        seed: a.seed,
        scale: a.scale,
        epochs: a.epochs,
        ..BenchmarkSpec::default()
    };
    let report = run_benchmark(&spec, Exec::default())?;
    let summary = report.summary();
    run.write("report.txt", &summary)?;
    run.write("bce_epoch_log.csv", &epoch_log_csv(&report.bce.history))?;
    run.write(
        "bce_pp_epoch_log.csv",
        &epoch_log_csv(&report.bce_pp.history),
    )?;
    emit(&summary)?;
    run.finish()
}
