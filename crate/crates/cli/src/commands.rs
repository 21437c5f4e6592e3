use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use bingsym::fitting::{fit_mle_with, FitReportJson};
use bingsym::rng::{stream_rng, streams};
use bingsym::sampler::sample_with_rng;
use bingsym::symrep::{
    flipmin_loss_quat_raw_grad, flipmin_loss_rotmat_grad, rep_loss_and_grad_with, RotationJson,
};
use bingsym::toyfield::{
    derive_seed, field_csv, gen_scene, predict_field, summarize, ConsistencyReport, RepKind,
    SceneConfig, TrainOptions,
};
use bingsym::{
    flip_rotation, percentile_theta_approx, percentile_theta_empirical, DistributionJson,
    FitOptions, NormConstQuadrature, Rotation3, SampleSet, Vec3,
};

use crate::{Cli, CliError, Command, DemoKind, GlobalOpts, KindArg, Preset};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let quad = NormConstQuadrature::new(g.quadrature())?;
    match &cli.command {
        Command::Sample { dist, n } => cmd_sample(g, &quad, dist, *n),
        Command::Normconst { lambda, grad } => cmd_normconst(g, &quad, lambda.0, *grad),
        Command::Percentile { lambda, p, empirical, n, reps } => {
            cmd_percentile(g, &quad, lambda.0, *p, empirical.then_some((*n, *reps)))
        }
        Command::Fit { samples, max_iters, tol } => {
            let opts = FitOptions { max_iters: *max_iters, tol: *tol, ..Default::default() };
            cmd_fit(g, &quad, samples, &opts)
        }
        Command::Loss { rep, gt, kind, grad, flip_check } => {
            cmd_loss(g, &quad, rep, gt, *kind, *grad, *flip_check)
        }
        Command::DemoField { scene, preset, kind, epochs, learning_rate, fixed_signs, field } => {
            let config = match scene {
                Some(path) => read_json::<SceneConfig>(path)?,
                None => match preset {
                    Preset::Box => SceneConfig::box_only(),
                    Preset::BoxCylinder => SceneConfig::box_and_cylinder(),
                },
            };
            let opts = TrainOptions {
                epochs: *epochs,
                seed: g.seed,
                learning_rate: *learning_rate,
                alternate_signs: !fixed_signs,
            };
            cmd_demo_field(g, &quad, &config, *kind, &opts, field.as_deref())
        }
    }
}

fn emit(g: &GlobalOpts, text: &str) -> Result<()> {
    match &g.out {
        Some(path) => write_file(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Runtime(format!("writing stdout: {e}")))
        }
    }
}

fn emit_json(g: &GlobalOpts, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing output: {e}")))?;
    text.push('\n');
    emit(g, &text)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn cmd_sample(g: &GlobalOpts, quad: &NormConstQuadrature, dist: &Path, n: usize) -> Result<()> {
    let d = read_json::<DistributionJson>(dist)?.to_distribution(quad)?;
    let set = bingsym::sample(&d, n, g.seed)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Runtime(format!("writing CSV: {e}"));
    w.write_record(["x", "y", "z"]).map_err(csv_err)?;
    for p in &set.points {
        w.serialize((p.x, p.y, p.z)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(format!("writing CSV: {e}")))?;
    emit(g, &String::from_utf8_lossy(&bytes))
}

fn cmd_normconst(g: &GlobalOpts, quad: &NormConstQuadrature, l: [f64; 3], grad: bool) -> Result<()> {
    let out = if grad {
        let (c, dc) = quad.value_and_grad(l)?;
        json!({ "C": c, "dC": dc })
    } else {
        json!({ "C": quad.value(l)? })
    };
    emit_json(g, &out)
}

#[derive(Serialize)]
struct AxisPercentile {
    /// Absent when the axis gap is zero or `p` is 1.
    approx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical_std: Option<f64>,
}

fn cmd_percentile(
    g: &GlobalOpts,
    quad: &NormConstQuadrature,
    l: [f64; 3],
    p: f64,
    empirical: Option<(usize, usize)>,
) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(CliError::Usage(format!("--p must lie in (0, 1], got {p}")));
    }
    let dist = bingsym::Bingham2D::analyze_with(&bingsym::Sym3::diag(l), quad)?;
    let mut estimates = [Vec::new(), Vec::new()];
    if let Some((n, reps)) = empirical {
        if reps == 0 {
            return Err(CliError::Usage("--reps must be at least 1".into()));
        }
        let mut rng = stream_rng(g.seed, streams::SAMPLER);
        for _ in 0..reps {
            let set = sample_with_rng(&dist, n, &mut rng)?;
            for axis in [1, 2] {
                estimates[axis - 1].push(percentile_theta_empirical(&set, axis, p)?);
            }
        }
    }
    let axis_entry = |axis: usize| {
        let approx = percentile_theta_approx(dist.lambda(), axis, p).ok();
        let e = &estimates[axis - 1];
        let (mean, std) = match e.len() {
            0 => (None, None),
            1 => (Some(e[0]), None),
            k => {
                let m = e.iter().sum::<f64>() / k as f64;
                let var = e.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1) as f64;
                (Some(m), Some(var.sqrt()))
            }
        };
        AxisPercentile { approx, empirical: mean, empirical_std: std }
    };
    emit_json(g, &json!({ "axis1": axis_entry(1), "axis2": axis_entry(2) }))
}

fn read_samples(path: &Path) -> Result<SampleSet> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, row) in reader.deserialize::<(f64, f64, f64)>().enumerate() {
        let (x, y, z) = row.map_err(|e| CliError::Usage(format!("{} row {}: {e}", path.display(), i + 1)))?;
        points.push(Vec3::new(x, y, z));
    }
    Ok(SampleSet::new(points, None)?)
}

fn cmd_fit(g: &GlobalOpts, quad: &NormConstQuadrature, samples: &Path, opts: &FitOptions) -> Result<()> {
    let set = read_samples(samples)?;
    let report = fit_mle_with(&set, opts, quad)?;
    emit_json(g, &FitReportJson::from(&report))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RotmatPrediction {
    ex: [f64; 3],
    ez: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuatPrediction {
    /// `[w, x, y, z]`, normalized internally.
    q: [f64; 4],
}

/// Loss value and gradient of one prediction against one ground truth.
fn loss_value(
    quad: &NormConstQuadrature,
    rep_path: &Path,
    kind: KindArg,
    gt: &Rotation3,
) -> Result<(Value, Vec<f64>, f64)> {
    Ok(match kind {
        KindArg::Ours => {
            let rep: bingsym::PlanarSymRep = read_json(rep_path)?;
            let (terms, g) = rep_loss_and_grad_with(&rep, gt, quad)?;
            let v = json!({ "cosine": terms.cosine, "bnll": terms.bnll, "total": terms.total() });
            (v, g.to_vec(), terms.total())
        }
        KindArg::Rotmat => {
            let p: RotmatPrediction = read_json(rep_path)?;
            let (l, g) = flipmin_loss_rotmat_grad(Vec3::from_array(p.ex), Vec3::from_array(p.ez), gt)?;
            (serde_json::to_value(l).expect("plain struct"), g.to_vec(), l.loss)
        }
        KindArg::Quat => {
            let p: QuatPrediction = read_json(rep_path)?;
            let q_gt = bingsym::UnitQuaternion::from_rotation(gt);
            let (l, g) = flipmin_loss_quat_raw_grad(p.q, &q_gt)?;
            (serde_json::to_value(l).expect("plain struct"), g.to_vec(), l.loss)
        }
    })
}

fn cmd_loss(
    g: &GlobalOpts,
    quad: &NormConstQuadrature,
    rep: &Path,
    gt: &Path,
    kind: KindArg,
    grad: bool,
    flip_check: bool,
) -> Result<()> {
    let r_gt = Rotation3::try_from(read_json::<RotationJson>(gt)?)?;
    let (mut out, gradient, total) = loss_value(quad, rep, kind, &r_gt)?;
    if grad {
        out["grad"] = json!(gradient);
    }
    if flip_check {
        let (_, _, flipped) = loss_value(quad, rep, kind, &flip_rotation(&r_gt))?;
        out["flip_check"] = json!({
            "loss": total,
            "flipped_gt_loss": flipped,
            "abs_diff": (total - flipped).abs(),
        });
    }
    emit_json(g, &out)
}

#[derive(Serialize)]
struct DemoOutput {
    seed: u64,
    epochs: usize,
    final_loss: Option<f64>,
    #[serde(flatten)]
    report: ConsistencyReport,
}

fn run_demo(
    quad: &NormConstQuadrature,
    config: &SceneConfig,
    kind: RepKind,
    opts: &TrainOptions,
) -> Result<(DemoOutput, String)> {
    let scene = gen_scene(config)?;
    let out = bingsym::toyfield::train_toy_with(&scene, kind, opts, quad)?;
    let preds = predict_field(&out.model, &scene)?;
    let report = summarize(&scene, kind, &preds);
    let demo = DemoOutput {
        seed: opts.seed,
        epochs: opts.epochs,
        final_loss: out.epoch_losses.last().copied(),
        report,
    };
    Ok((demo, field_csv(&preds)))
}

fn suffixed(path: &Path, kind: RepKind) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_{}{ext}", kind.name()))
}

fn cmd_demo_field(
    g: &GlobalOpts,
    quad: &NormConstQuadrature,
    config: &SceneConfig,
    kind: DemoKind,
    opts: &TrainOptions,
    field: Option<&Path>,
) -> Result<()> {
    let single = match kind {
        DemoKind::Ours => Some(RepKind::Ours),
        DemoKind::Rotmat => Some(RepKind::Rotmat),
        DemoKind::Quat => Some(RepKind::Quat),
        DemoKind::All => None,
    };
    if let Some(kind) = single {
        let (demo, csv) = run_demo(quad, config, kind, opts)?;
        if let Some(path) = field {
            write_file(path, &csv)?;
        }
        return emit_json(g, &demo);
    }

    // Independent runs share nothing but the read-only quadrature.
    let results: Vec<Result<(DemoOutput, String)>> = std::thread::scope(|s| {
        let handles: Vec<_> = RepKind::ALL
            .iter()
            .map(|&k| {
                let opts = TrainOptions { seed: derive_seed(opts.seed, k), ..*opts };
                s.spawn(move || run_demo(quad, config, k, &opts))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Runtime("worker panicked".into()))))
            .collect()
    });
    let mut reports = Vec::new();
    for (k, r) in RepKind::ALL.iter().zip(results) {
        let (demo, csv) = r?;
        if let Some(path) = field {
            write_file(&suffixed(path, *k), &csv)?;
        }
        reports.push(demo);
    }
    emit_json(g, &reports)
}
