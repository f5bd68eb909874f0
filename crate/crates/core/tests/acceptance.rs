//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its own PASS/FAIL line; exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use rand::Rng;

use bcepp_core::loss::{
    bce, bce_pp, bce_pp_grad, loss_curve, open_unit_grid, LossBatch, LossConfig, Reduction,
};
use bcepp_core::metrics::{ConfusionMatrix, SkillScores};
use bcepp_core::ordinal::{binarize, proximity_weights, BinaryLabel, FlareClass, ThresholdSpec};
use bcepp_core::par::Exec;
use bcepp_core::pipeline::{
    balance_training, balanced_counts, class_counts, max_flux_window, rng_for, BalancePlan,
    LabeledSample, Raster,
};
use bcepp_core::trainer::{
    batch_gradient, epoch_log_csv, run_benchmark, BenchmarkReport, BenchmarkSpec, LossKind, Model,
    ModelSpec, SchedulerState, Split, TrainConfig,
};

use FlareClass::*;

struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "1 reference confusion matrices -> skill scores",
            c1_golden_metrics,
        ),
        ("2 proximity weight table for >=M", c2_weight_table),
        ("3 BCE-PP/BCE coincidence identities", c3_coincidence),
        ("4 finite-difference gradients", c4_gradients),
        ("5 training-set balancing counts", c5_balancing),
        ("6 max-flux window vs brute force", c6_window_oracle),
        ("7 plateau scheduler trajectory", c7_scheduler),
        ("8 synthetic benchmark, BCE vs BCE-PP", c8_benchmark),
        ("9 benchmark determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let status = if out.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!("criterion {name}: {status} ({})", fmt_elapsed(elapsed));
        for n in &out.notes {
            println!("    {n}");
        }
        for f in &out.failures {
            println!("    failed: {f}");
        }
        if !out.failures.is_empty() {
            failed += 1;
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn fmt_elapsed(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

fn c1_golden_metrics() -> Outcome {
    let mut out = Outcome::new();
    let rows = [
        (
            "BCE val",
            ConfusionMatrix::new(1057, 5102, 102059, 481),
            [0.64, 0.26, 0.41],
        ),
        (
            "BCE-PP val",
            ConfusionMatrix::new(973, 2969, 104192, 565),
            [0.61, 0.34, 0.45],
        ),
        (
            "BCE test",
            ConfusionMatrix::new(1548, 5429, 105273, 625),
            [0.66, 0.31, 0.45],
        ),
        (
            "BCE-PP test",
            ConfusionMatrix::new(1446, 4460, 106242, 727),
            [0.63, 0.34, 0.46],
        ),
    ];
    for (name, cm, reference) in rows {
        let s = match SkillScores::from_confusion(&cm) {
            Ok(s) => s,
            Err(e) => {
                out.check(false, || format!("{name}: {e}"));
                continue;
            }
        };
        out.note(format!(
            "{name}: tss={:.5} hss={:.5} css={:.5}",
            s.tss, s.hss, s.css
        ));
        for (metric, got, want) in [
            ("tss", s.tss, reference[0]),
            ("hss", s.hss, reference[1]),
            ("css", s.css, reference[2]),
        ] {
            out.check((got - want).abs() <= 0.005, || {
                format!(
                    "{name} {metric} = {got:.5}, reference {want:.2} (|diff| {:.5} > 0.005)",
                    (got - want).abs()
                )
            });
        }
    }
    out
}

fn c2_weight_table() -> Outcome {
    let mut out = Outcome::new();
    let w = proximity_weights(ThresholdSpec::default());
    let expected = [(FQ, 1u32), (A, 2), (B, 3), (C, 4), (M, 4), (X, 3)];
    for (class, k) in expected {
        out.check(w.log_beta(class) == k, || {
            format!("log_beta({class}) = {}, want {k}", w.log_beta(class))
        });
        let beta = 10f64.powi(k as i32);
        out.check(w.beta(class) == beta, || {
            format!("beta({class}) = {}, want {beta}", w.beta(class))
        });
    }
    out.note(format!("log_beta = {:?}", w.log_beta_table()));
    out
}

fn c3_coincidence() -> Outcome {
    let mut out = Outcome::new();
    let threshold = ThresholdSpec::default();
    let grid = open_unit_grid(1001);
    let mut worst: f64 = 0.0;
    for (alpha, class) in [(0.25, C), (0.25, M), (1.0, FQ)] {
        let cfg = LossConfig::new(alpha, proximity_weights(threshold), Reduction::Mean).unwrap();
        for target in [BinaryLabel::NF, BinaryLabel::FL] {
            let curve = loss_curve(class, target, &cfg, &grid).unwrap();
            let max = curve
                .iter()
                .map(|p| (p.loss_bce_pp - p.loss_bce).abs())
                .fold(0.0, f64::max);
            worst = worst.max(max);
            out.check(max < 1e-12, || {
                format!("alpha={alpha} {class} target={target}: max diff {max:e}")
            });
        }
    }
    out.note(format!(
        "{} grid points, max |BCE-PP - BCE| = {worst:e}",
        grid.len()
    ));
    out
}

fn rel_err(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs());
    if denom == 0.0 {
        0.0
    } else {
        (a - b).abs() / denom
    }
}

fn c4_gradients() -> Outcome {
    let mut out = Outcome::new();
    let threshold = ThresholdSpec::default();
    let weights = proximity_weights(threshold);
    let h = 1e-5;
    let mut rng = rng_for(4, 0);

    // loss-level: 800 single-coordinate checks on random batches
    let mut worst_loss: f64 = 0.0;
    for check in 0..800 {
        let n = rng.gen_range(1..=8);
        let logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let classes: Vec<FlareClass> = (0..n)
            .map(|_| FlareClass::ALL[rng.gen_range(0..6)])
            .collect();
        let alpha = rng.gen_range(0.25..=1.0);
        let reduction = if check % 2 == 0 {
            Reduction::Mean
        } else {
            Reduction::Sum
        };
        let cfg = LossConfig::new(alpha, weights, reduction).unwrap();
        let loss_at = |z: &[f64]| {
            let b = LossBatch::from_subclasses(z.to_vec(), classes.clone(), threshold).unwrap();
            bce_pp(&b, &cfg).scalar()
        };
        let batch = LossBatch::from_subclasses(logits.clone(), classes.clone(), threshold).unwrap();
        let grad = bce_pp_grad(&batch, &cfg);
        let i = rng.gen_range(0..n);
        let (mut up, mut down) = (logits.clone(), logits.clone());
        up[i] += h;
        down[i] -= h;
        let numeric = (loss_at(&up) - loss_at(&down)) / (2.0 * h);
        let e = rel_err(grad[i], numeric);
        worst_loss = worst_loss.max(e);
        out.check(e < 1e-6, || {
            format!(
                "loss check {check}: analytic {} numeric {numeric} rel {e:e}",
                grad[i]
            )
        });
    }

    // model-level: 200 checks on a 3-parameter linear model
    let mut worst_model: f64 = 0.0;
    for check in 0..200 {
        let n = rng.gen_range(2..=16);
        let subclasses: Vec<FlareClass> = (0..n)
            .map(|_| FlareClass::ALL[rng.gen_range(0..6)])
            .collect();
        let split = Split {
            features: (0..n)
                .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
                .collect(),
            targets: subclasses.iter().map(|&c| binarize(c, threshold)).collect(),
            subclasses,
        };
        let kind = if check % 2 == 0 {
            LossKind::Bce
        } else {
            LossKind::BcePp
        };
        let mut cfg = TrainConfig::defaults(kind);
        cfg.alpha = rng.gen_range(0.25..=1.0);
        let params: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = ModelSpec::linear(2);
        let idx: Vec<usize> = (0..n).collect();
        let model = Model::from_params(spec.clone(), params.clone()).unwrap();
        let (_, grad) = batch_gradient(&model, &split, &idx, &cfg).unwrap();
        let loss_at = |p: Vec<f64>| {
            let m = Model::from_params(spec.clone(), p).unwrap();
            batch_gradient(&m, &split, &idx, &cfg).unwrap().0
        };
        for j in 0..3 {
            let (mut up, mut down) = (params.clone(), params.clone());
            up[j] += h;
            down[j] -= h;
            let numeric = (loss_at(up) - loss_at(down)) / (2.0 * h);
            let e = rel_err(grad[j], numeric);
            worst_model = worst_model.max(e);
            out.check(e < 1e-5, || format!("model check {check} ({kind}) param {j}: analytic {} numeric {numeric} rel {e:e}", grad[j]));
        }
    }
    // plain BCE should agree with the alpha=1, beta=10 case on FQ
    let b = LossBatch::from_subclasses(vec![0.3], vec![FQ], threshold).unwrap();
    let cfg = LossConfig::new(1.0, weights, Reduction::Mean).unwrap();
    out.check(
        bce(&b, Reduction::Mean).scalar() == bce_pp(&b, &cfg).scalar(),
        || "BCE != BCE-PP at unit multiplier".into(),
    );
    out.note(format!("800 loss checks, worst rel {worst_loss:.2e}; 600 model checks, worst rel {worst_model:.2e}"));
    out
}

fn table_one_train_counts() -> BTreeMap<FlareClass, usize> {
    [
        (FQ, 182_880),
        (A, 19),
        (B, 12_130),
        (C, 18_060),
        (M, 3_168),
        (X, 188),
    ]
    .into_iter()
    .collect()
}

fn c5_balancing() -> Outcome {
    let mut out = Outcome::new();
    let threshold = ThresholdSpec::default();
    let plan = BalancePlan::default();
    let expected: BTreeMap<FlareClass, usize> = [
        (FQ, 11_073),
        (A, 6),
        (B, 3_639),
        (C, 5_418),
        (M, 19_008),
        (X, 1_128),
    ]
    .into_iter()
    .collect();

    let counts = balanced_counts(&table_one_train_counts(), threshold, &plan);
    out.check(counts == expected, || format!("count-level {counts:?}"));

    // sample-level on 1x1 images
    let image = Raster::filled(1, 1, 127.5).unwrap();
    let t0 = Utc.with_ymd_and_hms(2012, 1, 1, 0, 0, 0).unwrap();
    let mut samples = Vec::new();
    for (class, n) in table_one_train_counts() {
        for _ in 0..n {
            let id = samples.len() as u64;
            samples
                .push(LabeledSample::new(id, id / 6, t0, class, threshold, image.clone()).unwrap());
        }
    }
    let balanced = balance_training(&samples, &plan, 7).unwrap();
    let got = class_counts(&balanced);
    out.check(got == expected, || format!("sample-level {got:?}"));

    let fq = got.get(&FQ).copied().unwrap_or(0) as f64;
    out.check((fq - 11_073.0).abs() <= 0.01 * 11_073.0, || {
        format!("FQ {fq} not within 1% of 11073")
    });
    let nf: usize = got
        .iter()
        .filter(|(c, _)| binarize(**c, threshold) == BinaryLabel::NF)
        .map(|(_, n)| n)
        .sum();
    let fl: usize = got
        .iter()
        .filter(|(c, _)| binarize(**c, threshold) == BinaryLabel::FL)
        .map(|(_, n)| n)
        .sum();
    out.check(nf == 20_136 && fl == 20_136, || {
        format!("NF total {nf}, FL total {fl}, want 20136 each")
    });
    out.note(format!(
        "{} input samples -> {} balanced, NF={nf} FL={fl}, FQ rate {:.6}",
        samples.len(),
        balanced.len(),
        plan.rate(FQ)
    ));
    out
}

fn brute_force_window(r: &Raster, size: usize) -> (usize, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut at = (0, 0);
    for row in 0..=r.height() - size {
        for col in 0..=r.width() - size {
            let mut s = 0.0;
            for i in row..row + size {
                for j in col..col + size {
                    s += r.get(i, j).abs();
                }
            }
            if s > best {
                best = s;
                at = (row, col);
            }
        }
    }
    at
}

fn c6_window_oracle() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = rng_for(6, 0);
    let mut mismatches = 0;
    for case in 0..200 {
        // odd cases use small integers so exact ties exercise the tie-break
        let r = if case % 2 == 0 {
            Raster::from_fn(64, 64, |_, _| rng.gen_range(-300.0..300.0)).unwrap()
        } else {
            Raster::from_fn(64, 64, |_, _| rng.gen_range(-2i32..=2) as f64).unwrap()
        };
        let fast = max_flux_window(&r, 16).unwrap();
        let slow = brute_force_window(&r, 16);
        if fast != slow {
            mismatches += 1;
            out.check(false, || {
                format!("case {case}: table {fast:?}, brute force {slow:?}")
            });
        }
    }
    out.note(format!(
        "200 rasters 64x64, window 16, {mismatches} mismatches"
    ));
    out
}

fn c7_scheduler() -> Outcome {
    let mut out = Outcome::new();
    let mut s = SchedulerState::new(0.01);
    let script = [1.0, 1.0, 1.0, 0.5, 0.6, 0.7, 0.4];
    let mut lrs = vec![s.current_lr()];
    for v in script {
        s.step(v);
        if *lrs.last().unwrap() != s.current_lr() {
            lrs.push(s.current_lr());
        }
    }
    out.check(lrs == [0.01, 0.009, 0.0081], || {
        format!("lr trajectory {lrs:?}")
    });
    out.note(format!("val losses {script:?} -> lr {lrs:?}"));
    out
}

fn benchmark(exec: Exec) -> Result<BenchmarkReport, String> {
    run_benchmark(&BenchmarkSpec::default(), exec).map_err(|e| e.to_string())
}

fn c8_benchmark() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let report = match benchmark(Exec::Sequential) {
        Ok(r) => r,
        Err(e) => {
            out.check(false, || format!("benchmark failed: {e}"));
            return out;
        }
    };
    let elapsed = start.elapsed();
    out.check(elapsed < Duration::from_secs(120), || {
        format!("took {}", fmt_elapsed(elapsed))
    });
    for run in [&report.bce, &report.bce_pp] {
        let kind = run.config.loss_kind;
        out.check(run.history.len() == 50, || {
            format!("{kind}: {} epochs", run.history.len())
        });
        let first = run.history[0].train_loss;
        let last = run.history.last().unwrap().train_loss;
        out.check(last < 0.5 * first, || {
            format!("{kind}: train loss {first} -> {last}")
        });
        out.check(run.validation.1.css > 0.0, || {
            format!("{kind}: val css {}", run.validation.1.css)
        });
        out.note(format!(
            "{kind}: train loss {first:.4} -> {last:.4} ({:.1}%), val css {:.4}, val fp={} fn={}, test fp={} fn={}",
            100.0 * last / first,
            run.validation.1.css,
            run.validation.0.fp,
            run.validation.0.fn_,
            run.test.0.fp,
            run.test.0.fn_
        ));
    }
    let (fp_bce, fp_pp) = (report.bce.validation.0.fp, report.bce_pp.validation.0.fp);
    out.check(fp_pp <= fp_bce, || {
        format!("val FP: BCE-PP {fp_pp} > BCE {fp_bce}")
    });
    out.note(format!(
        "sequential run on one thread: {}",
        fmt_elapsed(elapsed)
    ));
    out
}

fn c9_determinism() -> Outcome {
    let mut out = Outcome::new();
    let runs: Vec<BenchmarkReport> = match [Exec::Sequential, Exec::Sequential, Exec::default()]
        .into_iter()
        .map(benchmark)
        .collect()
    {
        Ok(r) => r,
        Err(e) => {
            out.check(false, || format!("benchmark failed: {e}"));
            return out;
        }
    };
    let logs = |r: &BenchmarkReport| {
        (
            epoch_log_csv(&r.bce.history),
            epoch_log_csv(&r.bce_pp.history),
        )
    };
    let reference = logs(&runs[0]);
    out.check(logs(&runs[1]) == reference, || {
        "repeat sequential run differs".into()
    });
    out.check(logs(&runs[2]) == reference, || {
        "default-executor run differs from sequential".into()
    });
    out.check(runs[1] == runs[0] && runs[2] == runs[0], || {
        "reports differ".into()
    });
    out.note(format!(
        "3 runs compared, executor default parallel={}",
        Exec::default().is_parallel()
    ));
    out
}
