use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use tfcw_core::bank::{compute_metrics, read_bank, write_bank, MemoryBank, Task, GAMMA_GRID};
use tfcw_core::descriptors::DescriptorKind;
use tfcw_core::experiment::{
    classification_features, run_ablation, run_classify, run_segment, select_gamma_classify, select_gamma_segment,
    Ablation, Provenance, RunResult, DEFAULT_K_GRID,
};
use tfcw_core::io::{
    config_hash, emit_results, load_off, load_off_str, load_off_tree, load_points_bin, results_csv, results_json,
    sample_mesh_surface, save_points_bin, Dataset, ExperimentConfig, OutputFormat, Report, Split,
};
use tfcw_core::robustness::{
    apply_corruption, rotation_scenario, stability_study, volume_scaling_run, CorruptionKind, CorruptionSpec,
    RotationScenario, ScalingReport, StabilityReport, STABILITY_BATCH_SIZES,
};
use tfcw_core::{synthetic, Result, TfcwError};

use crate::cli::*;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Classify(args) => {
            let ctx = Context::new(&args, true)?;
            let (train, test) = ctx.splits()?;
            let gamma = ctx.gamma(&args, |val| select_gamma_classify(&train, val, &ctx.cfg.pipeline, &GAMMA_GRID))?;
            emit(&run_classify(&train, &test, &ctx.cfg.pipeline, gamma)?, &args.common)
        }
        Command::Segment(args) => {
            let ctx = Context::new(&args, true)?;
            let (train, test) = ctx.splits()?;
            let gamma = ctx.gamma(&args, |val| select_gamma_segment(&train, val, &ctx.cfg.pipeline, &GAMMA_GRID))?;
            emit(&run_segment(&train, &test, &ctx.cfg.pipeline, gamma)?, &args.common)
        }
        Command::Ablate { run, which } => {
            let apply_k = !matches!(which, AblationArg::K);
            let ctx = Context::new(&run, apply_k)?;
            let (train, test) = ctx.splits()?;
            let gamma = ctx.gamma(&run, |val| select_gamma_classify(&train, val, &ctx.cfg.pipeline, &GAMMA_GRID))?;
            let which = match which {
                AblationArg::Diagonal => Ablation::DiagonalVariants,
                AblationArg::Normalization => Ablation::Normalization,
                AblationArg::K => Ablation::KSweep,
            };
            let grid = run.common.k.clone().unwrap_or_else(|| DEFAULT_K_GRID.to_vec());
            emit(&run_ablation(&train, &test, &ctx.cfg.pipeline, gamma, which, &grid)?, &run.common)
        }
        Command::Robustness {
            run,
            corruption,
            severity,
            rotation,
            stability,
        } => robustness(&run, corruption, severity, rotation, stability),
        Command::Scale {
            common,
            start,
            step,
            limit,
            repeats,
        } => {
            let cfg = resolve_config(&common, true)?;
            let report = volume_scaling_run(start, step, limit, repeats, &cfg.pipeline)?;
            #[derive(Serialize)]
            struct Hashed<'a> {
                pipeline: &'a tfcw_core::pipeline::PipelineConfig,
                start: usize,
                step: usize,
                limit: usize,
            }
            let out = ScaleOutput {
                config_hash: config_hash(&Hashed {
                    pipeline: &cfg.pipeline,
                    start,
                    step,
                    limit,
                }),
                seed: cfg.pipeline.seed,
                time_slope: report.time_slope(),
                report,
            };
            emit(&out, &common)
        }
        Command::Bank { action } => bank(action),
        Command::Convert {
            input,
            out,
            split,
            points,
            seed,
        } => convert(&input, &out, split_of(split), points, seed),
        Command::Synth {
            kind,
            count,
            points,
            seed,
            out,
        } => {
            let ds = match kind {
                SynthKind::SphereCube => synthetic::sphere_cube_dataset(count, points, seed, Split::Train),
                SynthKind::CappedCylinder => synthetic::capped_cylinder_dataset(count, points, seed, Split::Train),
            };
            save_points_bin(&ds, &out)?;
            eprintln!("wrote {} clouds to {}", ds.len(), out.display());
            Ok(())
        }
    }
}

struct Context {
    cfg: ExperimentConfig,
}

impl Context {
    fn new(args: &RunArgs, apply_k: bool) -> Result<Self> {
        let mut cfg = resolve_config(&args.common, apply_k)?;
        if let Some(p) = &args.train {
            cfg.train = Some(p.clone());
        }
        if let Some(p) = &args.test {
            cfg.test = Some(p.clone());
        }
        if let Some(g) = args.gamma {
            if !g.is_finite() || g < 0.0 {
                return Err(TfcwError::InvalidArgument(format!("--gamma must be non-negative, got {g}")));
            }
            cfg.gamma = g;
        }
        Ok(Context { cfg })
    }

    fn load(&self, path: Option<&PathBuf>, flag: &str, split: Split) -> Result<Dataset> {
        let path = path.ok_or_else(|| TfcwError::InvalidArgument(format!("--{flag} is required")))?;
        let ds = load_points_bin(path, split)?;
        Ok(if self.cfg.normalize { ds.normalized() } else { ds })
    }

    fn splits(&self) -> Result<(Dataset, Dataset)> {
        let mut train = self.load(self.cfg.train.as_ref(), "train", Split::Train)?;
        let mut test = self.load(self.cfg.test.as_ref(), "test", Split::Test)?;
        let classes = train.num_classes.max(test.num_classes);
        train.num_classes = classes;
        test.num_classes = classes;
        Ok((train, test))
    }

    /// `--gamma` or the config value, unless a validation split is given.
    fn gamma(&self, args: &RunArgs, sweep: impl FnOnce(&Dataset) -> Result<f64>) -> Result<f64> {
        match &args.val {
            Some(p) => sweep(&self.load(Some(p), "val", Split::Val)?),
            None => Ok(self.cfg.gamma),
        }
    }
}

fn resolve_config(common: &CommonArgs, apply_k: bool) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let p = &mut cfg.pipeline;
    if let Some(s) = common.seed {
        p.seed = s;
    }
    if let Some(n) = common.stages {
        *p = p.clone().with_stages(n);
    }
    if let (true, Some(ks)) = (apply_k, &common.k) {
        match ks.len() {
            1 => *p = p.clone().with_uniform_k(ks[0]),
            n if n == p.stages => p.k_per_stage = ks.clone(),
            n => {
                return Err(TfcwError::InvalidArgument(format!(
                    "--k takes one value or one per stage ({}), got {n}",
                    p.stages
                )))
            }
        }
    }
    if let Some(a) = common.alpha {
        p.alpha = a;
    }
    if let Some(d) = common.descriptor {
        p.descriptor = match d {
            DescriptorArg::Xyz => DescriptorKind::Xyz,
            DescriptorArg::Geo => DescriptorKind::Geo,
            DescriptorArg::Risp => DescriptorKind::Risp,
        };
    }
    p.validate()?;
    Ok(cfg)
}

fn split_of(s: SplitArg) -> Split {
    match s {
        SplitArg::Train => Split::Train,
        SplitArg::Test => Split::Test,
        SplitArg::Val => Split::Val,
    }
}

fn emit<R: Report>(report: &R, common: &CommonArgs) -> Result<()> {
    let format = match common.format {
        FormatArg::Json => OutputFormat::Json,
        FormatArg::Csv => OutputFormat::Csv,
    };
    match &common.out {
        Some(path) => emit_results(report, path, format),
        None => {
            match format {
                OutputFormat::Json => print!("{}", results_json(report)?),
                OutputFormat::Csv => print!("{}", results_csv(report)),
            }
            Ok(())
        }
    }
}

fn robustness(
    args: &RunArgs,
    corruption: Option<CorruptionArg>,
    severity: u8,
    rotation: Option<RotationArg>,
    stability: bool,
) -> Result<()> {
    let ctx = Context::new(args, true)?;
    let (mut train, mut test) = ctx.splits()?;
    let seed = ctx.cfg.pipeline.seed;
    if let Some(r) = rotation {
        let scenario = match r {
            RotationArg::Zz => RotationScenario::ZZ,
            RotationArg::Zso3 => RotationScenario::ZSO3,
            RotationArg::So3so3 => RotationScenario::SO3SO3,
        };
        let (a, b) = rotation_scenario(&train.clouds, &test.clouds, scenario, seed);
        train.clouds = a;
        test.clouds = b;
    }
    if let Some(c) = corruption {
        let kind = match c {
            CorruptionArg::Jitter => CorruptionKind::Jitter,
            CorruptionArg::GlobalNoise => CorruptionKind::GlobalNoise,
        };
        test.clouds = test
            .clouds
            .iter()
            .enumerate()
            .map(|(i, cloud)| {
                let spec = CorruptionSpec::new(kind, severity, seed.wrapping_add(i as u64))?;
                Ok(apply_corruption(cloud, &spec, &ctx.cfg.corruption))
            })
            .collect::<Result<_>>()?;
    }
    let gamma = ctx.cfg.gamma;
    if stability {
        let report = stability_study(&train, &test, &STABILITY_BATCH_SIZES, &ctx.cfg.pipeline, gamma)?;
        let out = StabilityOutput {
            config_hash: config_hash(&ctx.cfg.pipeline),
            dataset: test.name.clone(),
            seed,
            report,
        };
        return emit(&out, &args.common);
    }
    let segment = train.clouds.iter().all(|c| c.point_labels().is_some())
        && train.clouds.iter().any(|c| c.class_label().is_none());
    let result = if segment {
        run_segment(&train, &test, &ctx.cfg.pipeline, gamma)?
    } else {
        run_classify(&train, &test, &ctx.cfg.pipeline, gamma)?
    };
    emit(&result, &args.common)
}

fn bank(action: BankCommand) -> Result<()> {
    match action {
        BankCommand::Export { run, bank } => {
            let ctx = Context::new(&run, true)?;
            let train = ctx.load(ctx.cfg.train.as_ref(), "train", Split::Train)?;
            let feats = classification_features(&train.clouds, &ctx.cfg.pipeline)?;
            let b = MemoryBank::build(feats.view(), &train.class_labels()?, train.num_classes, ctx.cfg.gamma)?;
            write_bank(&b, BufWriter::new(File::create(&bank).map_err(TfcwError::at_path(&bank))?))?;
            eprintln!("wrote bank of {} x {} to {}", b.len(), b.width(), bank.display());
            Ok(())
        }
        BankCommand::Import { run, bank } => {
            let ctx = Context::new(&run, true)?;
            let mut b = read_bank(BufReader::new(File::open(&bank).map_err(TfcwError::at_path(&bank))?))?;
            if let Some(g) = run.gamma {
                b = b.with_gamma(g);
            }
            let mut test = ctx.load(ctx.cfg.test.as_ref(), "test", Split::Test)?;
            test.num_classes = test.num_classes.max(b.num_classes());
            let t0 = Instant::now();
            let feats = classification_features(&test.clouds, &ctx.cfg.pipeline)?;
            let t1 = Instant::now();
            let pred = b.predict(feats.view())?.labels;
            let t2 = Instant::now();
            let pred: Vec<Vec<usize>> = pred.into_iter().map(|p| vec![p]).collect();
            let truth: Vec<Vec<usize>> = test.class_labels()?.into_iter().map(|t| vec![t]).collect();
            let metrics = compute_metrics(&pred, &truth, b.num_classes(), Task::Classification)?;
            let mut timings = BTreeMap::new();
            timings.insert("encode_test".to_string(), (t1 - t0).as_secs_f64());
            timings.insert("predict".to_string(), (t2 - t1).as_secs_f64());
            #[derive(Serialize)]
            struct Hashed<'a> {
                pipeline: &'a tfcw_core::pipeline::PipelineConfig,
                bank_gamma: f64,
                bank_size: usize,
            }
            let result = RunResult {
                task: Task::Classification,
                config_hash: config_hash(&Hashed {
                    pipeline: &ctx.cfg.pipeline,
                    bank_gamma: b.gamma(),
                    bank_size: b.len(),
                }),
                gamma: b.gamma(),
                metrics,
                throughput: test.len() as f64 / (t2 - t0).as_secs_f64().max(f64::MIN_POSITIVE),
                timings,
                provenance: Provenance {
                    dataset: test.name.clone(),
                    train_size: b.len(),
                    test_size: test.len(),
                    seed: ctx.cfg.pipeline.seed,
                },
            };
            emit(&result, &run.common)
        }
    }
}

fn convert(input: &Path, out: &Path, split: Split, points: usize, seed: u64) -> Result<()> {
    let ds = if input.is_dir() {
        if points == 0 {
            return Err(TfcwError::InvalidArgument("--points must be positive for a mesh tree".into()));
        }
        load_off_tree(input, split, points, seed)?
    } else {
        let cloud = if points == 0 {
            load_off(input)?
        } else {
            let mesh = load_off_str(&std::fs::read_to_string(input).map_err(TfcwError::at_path(input))?)?;
            sample_mesh_surface(&mesh, points, seed)?
        };
        let name = input.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
        Dataset::new(name, vec![cloud], split, 0)?
    };
    save_points_bin(&ds, out)?;
    eprintln!("wrote {} clouds ({} classes) to {}", ds.len(), ds.num_classes, out.display());
    Ok(())
}

#[derive(Serialize)]
struct ScaleOutput {
    config_hash: String,
    seed: u64,
    time_slope: Option<f64>,
    report: ScalingReport,
}

impl Report for ScaleOutput {
    fn config_hash(&self) -> &str {
        &self.config_hash
    }

    fn dataset(&self) -> &str {
        "uniform-cube"
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn metric_rows(&self) -> Vec<(String, f64)> {
        let r = &self.report;
        let mut rows = Vec::new();
        for i in 0..r.point_counts.len() {
            let n = r.point_counts[i];
            rows.push((format!("wall_time_s@{n}"), r.wall_times[i]));
            rows.push((format!("peak_memory_bytes@{n}"), r.peak_memory[i] as f64));
        }
        if let Some(s) = self.time_slope {
            rows.push(("time_slope".into(), s));
        }
        if let Some(n) = r.allocation_failure_at {
            rows.push(("allocation_failure_at".into(), n as f64));
        }
        rows
    }
}

#[derive(Serialize)]
struct StabilityOutput {
    config_hash: String,
    dataset: String,
    seed: u64,
    report: StabilityReport,
}

impl Report for StabilityOutput {
    fn config_hash(&self) -> &str {
        &self.config_hash
    }

    fn dataset(&self) -> &str {
        &self.dataset
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn metric_rows(&self) -> Vec<(String, f64)> {
        let mut rows = Vec::new();
        for r in &self.report.rows {
            let tag = format!("bs{}{}", r.batch_size, if r.shuffled { "_shuffled" } else { "" });
            rows.push((format!("{tag}/max_deviation"), r.max_deviation));
            if let Some(a) = r.accuracy {
                rows.push((format!("{tag}/accuracy"), a));
            }
        }
        rows
    }
}
