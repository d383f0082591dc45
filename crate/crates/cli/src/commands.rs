use std::fs;
use std::path::{Path, PathBuf};

use holofit::body_model::{default_skeleton, CameraIntrinsics, MotionSequence, SkeletonModel};
use holofit::keypoints::{
    fill_missing, fuse_confidence_guided, parse_keypoints, write_keypoints, GroupLayout, KeypointSequence,
    DEFAULT_THRESHOLD,
};
use holofit::metrics::{
    diversity, dtw_mje, fid, mm_dist, mr_precision, multimodality, r_precision, strip_lower_body, upper_body_indices,
    FeatureSet, JointSequence,
};
use holofit::objective::{default_limits, BiomechanicalLimits};
use holofit::optimizer::{fit_sequence, OptimizerKind, StageReport, StepRecord};
use holofit::synth::{synth_clip, SynthOptions};
use holofit::validate::{mean_reprojection_error, validate_motion, ValidationReport};
use serde::Serialize;

use crate::args::{FitArgs, FuseArgs, MetricsCommand, OptimizerArg, SynthArgs, ValidateArgs};
use crate::config::{require_existing, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::Report;

pub const DEFAULT_MAX_VIOLATIONS: f64 = 0.01;
const DEFAULT_FPS: f64 = 30.0;

/// What a command hands back to `main`.
pub struct Outcome {
    pub report: Report,
    /// False when a threshold check failed (exit code 1).
    pub passed: bool,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Outcome { report, passed: true }
    }
}

fn load_model(path: Option<&Path>) -> CliResult<SkeletonModel> {
    Ok(match path {
        Some(p) => SkeletonModel::load(p)?,
        None => default_skeleton(),
    })
}

fn load_limits(path: Option<&Path>, model: &SkeletonModel) -> CliResult<BiomechanicalLimits> {
    Ok(match path {
        Some(p) => BiomechanicalLimits::load(p)?,
        None => default_limits(model),
    })
}

fn load_layout(path: Option<&Path>) -> CliResult<GroupLayout> {
    Ok(match path {
        Some(p) => GroupLayout::load(p)?,
        None => GroupLayout::holistic(),
    })
}

fn check_threshold(t: f64) -> CliResult<f64> {
    if (0.0..=1.0).contains(&t) {
        Ok(t)
    } else {
        Err(CliError::Usage(format!("threshold must be in [0, 1], got {t}")))
    }
}

fn fuse_files(paths: &[PathBuf], layout: &GroupLayout, threshold: f64, fill: bool) -> CliResult<KeypointSequence> {
    let sources = paths
        .iter()
        .map(|p| parse_keypoints(p, layout.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let fused = fuse_confidence_guided(&sources, threshold)?;
    Ok(if fill { fill_missing(&fused) } else { fused })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    Ok(holofit::io::write_json(path, value)?)
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|source| {
        CliError::Input(holofit::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

/// Serialized fit report: the optimizer record without the motion itself.
#[derive(Serialize)]
struct FitSummary<'a> {
    seed: u64,
    frames: usize,
    iterations: usize,
    initial: &'a StepRecord,
    final_record: &'a StepRecord,
    frozen_shape: &'a Option<Vec<f64>>,
    mean_reprojection_px: f64,
    stages: &'a [StageReport],
}

pub fn fit(args: FitArgs, cfg: RunConfig, seed: Option<u64>) -> CliResult<Outcome> {
    let keypoints = if args.keypoints.is_empty() {
        cfg.keypoints.clone()
    } else {
        args.keypoints
    };
    if keypoints.is_empty() {
        return Err(CliError::Usage("no keypoint files given (--keypoints)".into()));
    }
    let camera = args
        .camera
        .or(cfg.camera.clone())
        .ok_or_else(|| CliError::Usage("no camera file given (--camera)".into()))?;
    let out = args
        .out
        .or(cfg.output.clone())
        .ok_or_else(|| CliError::Usage("no output file given (--out)".into()))?;
    let model_path = args.model.or(cfg.model.clone());
    let limits_path = args.limits.or(cfg.limits.clone());
    let layout_path = args.layout.or(cfg.layout.clone());
    let init_path = args.init.or(cfg.init.clone());
    let report_path = args.report.or(cfg.report.clone());
    require_existing(
        keypoints
            .iter()
            .chain([&camera])
            .chain(model_path.iter())
            .chain(limits_path.iter())
            .chain(layout_path.iter())
            .chain(init_path.iter()),
    )?;

    let mut config = cfg.fit.clone();
    if let Some(steps) = args.steps {
        config = config.with_total_steps(steps);
    }
    if let Some(o) = args.optimizer {
        config.optimizer = match o {
            OptimizerArg::Adam => OptimizerKind::Adam,
            OptimizerArg::Lbfgs => OptimizerKind::Lbfgs,
        };
    }
    config.seed = seed.or(cfg.seed).unwrap_or(config.seed);
    cfg.weights.check()?;
    config.check()?;

    let model = load_model(model_path.as_deref())?;
    let limits = load_limits(limits_path.as_deref(), &model)?;
    let layout = load_layout(layout_path.as_deref())?;
    let cam = CameraIntrinsics::load(&camera)?;
    let threshold = check_threshold(args.threshold.or(cfg.threshold).unwrap_or(DEFAULT_THRESHOLD))?;
    let kp = fuse_files(&keypoints, &layout, threshold, true)?;
    let init = init_path.as_deref().map(MotionSequence::load).transpose()?;
    let fps = args
        .fps
        .or(cfg.fps)
        .or(init.as_ref().map(|m| m.fps))
        .unwrap_or(DEFAULT_FPS);

    let fit = fit_sequence(
        &model,
        &cam,
        &kp,
        &cfg.weights,
        Some(&limits),
        &config,
        init.as_ref(),
        fps,
    )?;
    fit.motion.save(&out)?;
    let reproj = mean_reprojection_error(&model, &cam, &fit.motion, &kp)?;
    if let Some(path) = &report_path {
        write_json(
            path,
            &FitSummary {
                seed: fit.seed,
                frames: fit.motion.len(),
                iterations: fit.iterations,
                initial: &fit.initial,
                final_record: &fit.final_record,
                frozen_shape: &fit.frozen_shape,
                mean_reprojection_px: reproj,
                stages: &fit.stages,
            },
        )?;
    }
    log::info!("fit took {:.2?}", fit.wall_time);

    let mut r = Report::new();
    r.put("output", out.display().to_string())
        .put("seed", fit.seed)
        .put("frames", fit.motion.len())
        .put("iterations", fit.iterations)
        .put("initial_total", fit.initial.total)
        .put("final_total", fit.final_record.total)
        .put("mean_reprojection_px", reproj);
    for (i, s) in fit.stages.iter().enumerate() {
        let last = s.trace.last().map_or(f64::NAN, |t| t.total);
        r.line(format!(
            "stage {}: w_body={} w_hand={} shape={} steps={}/{} total={last:.6e}",
            i + 1,
            s.w_body,
            s.w_hand,
            s.optimize_shape,
            s.steps_run,
            s.planned_steps
        ));
    }
    r.put("w_hand", fit.stages.iter().map(|s| s.w_hand).collect::<Vec<_>>());
    Ok(Outcome::ok(r))
}

pub fn fuse(args: FuseArgs, cfg: RunConfig) -> CliResult<Outcome> {
    let layout_path = args.layout.or(cfg.layout.clone());
    require_existing(args.inputs.iter().chain(layout_path.iter()))?;
    let layout = load_layout(layout_path.as_deref())?;
    let threshold = check_threshold(args.threshold.or(cfg.threshold).unwrap_or(DEFAULT_THRESHOLD))?;
    let fused = fuse_files(&args.inputs, &layout, threshold, !args.no_fill)?;
    write_keypoints(&fused, &args.out)?;
    let mut r = Report::new();
    r.put("output", args.out.display().to_string())
        .put("sources", args.inputs.len())
        .put("frames", fused.len())
        .put("threshold", threshold);
    Ok(Outcome::ok(r))
}

fn check_row(c: &holofit::validate::Check) -> String {
    let value: Vec<String> = c.value.iter().map(|v| format!("{v:.6}")).collect();
    format!(
        "{:>5} {:<22} {:<24} {:<20} {}",
        c.frame,
        format!("{:?}", c.kind),
        c.name,
        value.join(","),
        if c.pass { "pass" } else { "FAIL" }
    )
}

pub fn validate(args: ValidateArgs, cfg: RunConfig) -> CliResult<Outcome> {
    let model_path = args.model.or(cfg.model.clone());
    let limits_path = args.limits.or(cfg.limits.clone());
    require_existing(
        [&args.motion]
            .into_iter()
            .chain(model_path.iter())
            .chain(limits_path.iter()),
    )?;
    let max = args
        .max_violations
        .or(cfg.max_violations)
        .unwrap_or(DEFAULT_MAX_VIOLATIONS);
    if !(0.0..=1.0).contains(&max) {
        return Err(CliError::Usage(format!(
            "--max-violations must be in [0, 1], got {max}"
        )));
    }
    let model = load_model(model_path.as_deref())?;
    let limits = load_limits(limits_path.as_deref(), &model)?;
    let motion = MotionSequence::load(&args.motion)?;
    let v: ValidationReport = validate_motion(&model, &motion, &limits)?;
    if let Some(path) = &args.report {
        write_json(path, &v)?;
    }
    let mut r = Report::new();
    if !v.checks.is_empty() {
        r.line(format!(
            "{:>5} {:<22} {:<24} {:<20} result",
            "frame", "check", "joint", "value"
        ));
    }
    for c in v.checks.iter().filter(|c| args.all || !c.pass) {
        r.line(check_row(c));
    }
    let passed = v.violation_rate <= max;
    r.put("checks", v.total)
        .put("violations", v.violations)
        .put("violation_rate", v.violation_rate)
        .put("max_violations", max)
        .put("passed", passed);
    Ok(Outcome { report: r, passed })
}

fn rates_report(r: &mut Report, name: &str, rates: &std::collections::BTreeMap<usize, f64>) {
    for (k, v) in rates {
        r.put(format!("{name}@{k}"), *v);
    }
}

pub fn metrics(cmd: MetricsCommand, seed: u64) -> CliResult<Outcome> {
    let mut r = Report::new();
    match cmd {
        MetricsCommand::Fid { real, gen } => {
            require_existing([&real, &gen])?;
            r.put("fid", fid(&FeatureSet::load(&real)?, &FeatureSet::load(&gen)?)?);
        }
        MetricsCommand::Diversity { features, nd } => {
            require_existing([&features])?;
            let set = FeatureSet::load(&features)?;
            r.put("diversity", diversity(&set.motions(), nd, seed)?)
                .put("seed", seed);
        }
        MetricsCommand::Multimodality { features, nm } => {
            require_existing([&features])?;
            let set = FeatureSet::load(&features)?;
            r.put("multimodality", multimodality(&set.groups()?, nm, seed)?)
                .put("seed", seed);
        }
        MetricsCommand::MmDist { features } => {
            require_existing([&features])?;
            r.put("mm_dist", mm_dist(&FeatureSet::load(&features)?)?);
        }
        MetricsCommand::RPrecision { features, pool, k } => {
            require_existing([&features])?;
            let rates = r_precision(&FeatureSet::load(&features)?, &k, pool, seed)?;
            rates_report(&mut r, "r_precision", &rates);
            r.put("pool", pool).put("seed", seed);
        }
        MetricsCommand::MrPrecision { gen, dataset, pool, k } => {
            require_existing([&gen, &dataset])?;
            let rates = mr_precision(&FeatureSet::load(&gen)?, &FeatureSet::load(&dataset)?, &k, pool, seed)?;
            rates_report(&mut r, "mr_precision", &rates);
            r.put("pool", pool).put("seed", seed);
        }
        MetricsCommand::DtwMje {
            reference,
            hypothesis,
            upper_body,
            subset,
        } => {
            require_existing([&reference, &hypothesis])?;
            let (mut a, mut b) = (JointSequence::load(&reference)?, JointSequence::load(&hypothesis)?);
            let keep = match (upper_body, subset) {
                (true, _) => Some(upper_body_indices(&a.joints)),
                (false, s) => s,
            };
            if let Some(keep) = keep {
                a = strip_lower_body(&a, &keep)?;
                b = strip_lower_body(&b, &keep)?;
            }
            r.put("dtw_mje", dtw_mje(&a, &b)?).put("joints", a.joint_count());
        }
    }
    Ok(Outcome::ok(r))
}

pub fn synth(args: SynthArgs, cfg: RunConfig, seed: u64) -> CliResult<Outcome> {
    let model_path = args.model.or(cfg.model.clone());
    require_existing(model_path.iter())?;
    let model = load_model(model_path.as_deref())?;
    if args.frames == 0 {
        return Err(CliError::Usage("--frames must be positive".into()));
    }
    let opts = SynthOptions {
        frames: args.frames,
        fps: args.fps,
        noise_px: args.noise,
        depth: args.depth,
        init_noise: args.init_noise,
        ..SynthOptions::default()
    };
    let clip = synth_clip(&model, &opts, seed)?;
    let dir = &args.out_dir;
    create_dir(dir)?;
    clip.motion.save(dir.join("motion.json"))?;
    clip.init.save(dir.join("init.json"))?;
    clip.camera.save(dir.join("camera.json"))?;
    clip.clean.layout.save(dir.join("layout.json"))?;
    write_keypoints(&clip.clean, dir.join("keypoints_clean.jsonl"))?;
    write_keypoints(&clip.noisy, dir.join("keypoints_noisy.jsonl"))?;
    JointSequence::from_motion(&model, &clip.motion)?.save(&dir.join("joints.json"))?;
    let mut r = Report::new();
    r.put("out_dir", dir.display().to_string())
        .put("seed", seed)
        .put("frames", clip.motion.len())
        .put("noise_px", args.noise)
        .put("init_noise", args.init_noise);
    Ok(Outcome::ok(r))
}
