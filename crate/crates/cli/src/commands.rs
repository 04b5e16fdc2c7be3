use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use deformnet::io::{
    load_checkpoint, load_manifest, load_xyz, save_checkpoint, write_history_csv, write_obj, write_xyz, Checkpoint,
};
use deformnet::metrics::{evaluate, EvalConfig};
use deformnet::pipeline::{export_mesh, gradient_suite, reconstruct_cloud, GRAD_TOLERANCE};
use deformnet::training::{train_from, LossRecord, TrainState};
use deformnet::{PointCloud, TrainConfig};

use crate::output::{replace_atomically, Stage};
use crate::plot::render_svg;
use crate::TrainArgs;

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn gen_data(manifest: &Path, out_dir: &Path) -> Result<()> {
    let manifest = load_manifest(manifest)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut stage = Stage::default();
    for entry in &manifest.entries {
        let shape = entry.load()?;
        write_xyz(&shape.cloud, &stage.add(&out_dir.join(format!("{}.xyz", entry.id))))?;
        write_obj(&shape.mesh, &stage.add(&out_dir.join(format!("{}.obj", entry.id))))?;
    }
    stage.commit()?;
    println!("wrote {} shapes to {}", manifest.entries.len(), out_dir.display());
    Ok(())
}

/// Every `.xyz` file in `dir`, sorted by file name.
fn load_dataset(dir: &Path) -> Result<Vec<(PathBuf, PointCloud)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read data directory {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "xyz") && p.is_file());
    paths.sort();
    ensure!(!paths.is_empty(), "no .xyz files in {}", dir.display());
    paths
        .into_iter()
        .map(|p| {
            let cloud = load_xyz(&p)?;
            Ok((p, cloud))
        })
        .collect()
}

fn resolve_config(args: &TrainArgs, resumed: Option<&Checkpoint>) -> Result<TrainConfig> {
    let mut config = match (&args.config, resumed) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            TrainConfig::from_kv_text(&text).with_context(|| format!("config {}", path.display()))?
        }
        (None, Some(ckpt)) => ckpt.config.clone(),
        (None, None) => TrainConfig::default(),
    };
    for kv in &args.overrides {
        let (k, v) = kv.split_once('=').with_context(|| format!("override {kv:?} is not KEY=VALUE"))?;
        config.set(k, v)?;
    }
    if let Some(steps) = args.steps {
        config.steps = steps;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.fixed_sphere {
        config.fixed_sphere = true;
    }
    if let Some(b) = args.backward_conditioned {
        config.model.backward_conditioned = b;
    }
    config.validate()?;
    Ok(config)
}

fn describe(r: &LossRecord) -> String {
    format!(
        "step {} total {:.6e} chamfer_fwd {:.6e} deform_fwd {:.6e} chamfer_bwd {:.6e} deform_bwd {:.6e}",
        r.step, r.total, r.chamfer_fwd, r.deform_fwd, r.chamfer_bwd, r.deform_bwd
    )
}

pub fn train(args: TrainArgs) -> Result<()> {
    let resumed = args
        .resume
        .as_deref()
        .map(|p| load_checkpoint(p).with_context(|| format!("checkpoint {}", p.display())))
        .transpose()?;
    let config = resolve_config(&args, resumed.as_ref())?;
    let dataset = load_dataset(&args.data_dir)?;
    let targets: Vec<PointCloud> = dataset.into_iter().map(|(_, c)| c).collect();
    let mut state = match resumed {
        Some(ckpt) => ckpt.state,
        None => TrainState::init(&config)?,
    };
    ensure!(
        state.step() <= config.steps,
        "checkpoint is already at step {}, beyond steps = {}",
        state.step(),
        config.steps
    );

    // Train in chunks for progress output. Resuming is bit-exact, so the
    // chunking does not change the result.
    let chunk = if args.log_every == 0 { config.steps } else { args.log_every };
    let mut history: Vec<LossRecord> = Vec::new();
    while state.step() < config.steps {
        let until = (state.step() / chunk + 1).saturating_mul(chunk).min(config.steps);
        let part = TrainConfig { steps: until, ..config.clone() };
        let out = train_from(&targets, &part, state, |s| {
            let ckpt = Checkpoint { config: config.clone(), state: s.clone() };
            replace_atomically(&args.out, |tmp| save_checkpoint(tmp, &ckpt))
                .map_err(|e| deformnet::Error::InvalidArgument(format!("{e:#}")))
        })?;
        state = out.state;
        history.extend(out.history);
        if args.log_every > 0 {
            if let Some(last) = history.last() {
                eprintln!("{}", describe(last));
            }
        }
    }

    let history_path = args.history.clone().unwrap_or_else(|| with_suffix(&args.out, ".history.csv"));
    let mut stage = Stage::default();
    let ckpt = Checkpoint { config, state };
    save_checkpoint(&stage.add(&args.out), &ckpt)?;
    write_history_csv(&history, &stage.add(&history_path))?;
    stage.commit()?;
    match history.last() {
        Some(last) => println!("{}", describe(last)),
        None => println!("already at step {}; nothing to do", ckpt.state.step()),
    }
    Ok(())
}

pub fn reconstruct(
    checkpoint: &Path,
    input: &Path,
    out: &Path,
    sphere_points: Option<usize>,
    seed: u64,
) -> Result<()> {
    let ckpt = load_checkpoint(checkpoint).with_context(|| format!("checkpoint {}", checkpoint.display()))?;
    let cloud = load_xyz(input)?;
    let n = sphere_points.or(ckpt.config.sphere_points);
    let recon = reconstruct_cloud(&ckpt.state.params, &cloud, n, seed)?;
    replace_atomically(out, |tmp| write_xyz(&recon, tmp))?;
    println!("wrote {} points to {}", recon.len(), out.display());
    Ok(())
}

pub fn mesh(checkpoint: &Path, input: &Path, subdivisions: u32, out: &Path) -> Result<()> {
    let ckpt = load_checkpoint(checkpoint).with_context(|| format!("checkpoint {}", checkpoint.display()))?;
    let cloud = load_xyz(input)?;
    let mesh = export_mesh(&ckpt.state.params, &cloud, subdivisions)?;
    replace_atomically(out, |tmp| write_obj(&mesh, tmp))?;
    println!(
        "wrote {} vertices, {} faces to {}",
        mesh.vertices().len(),
        mesh.faces().len(),
        out.display()
    );
    Ok(())
}

pub fn eval(checkpoint: &Path, manifest: &Path, report: &Path, subdivisions: Option<u32>, seed: u64) -> Result<()> {
    let ckpt = load_checkpoint(checkpoint).with_context(|| format!("checkpoint {}", checkpoint.display()))?;
    let shapes = load_manifest(manifest)?.load_shapes()?;
    let config = EvalConfig {
        sphere_points: ckpt.config.sphere_points,
        seed,
        mesh_subdivisions: subdivisions,
    };
    let result = evaluate(&ckpt.state.params, &shapes, &config)?;
    let mut stage = Stage::default();
    std::fs::write(stage.add(report), result.to_text()).with_context(|| format!("cannot write {}", report.display()))?;
    let json = with_suffix(report, ".json");
    std::fs::write(stage.add(&json), result.to_json() + "\n").with_context(|| format!("cannot write {}", json.display()))?;
    stage.commit()?;
    for line in result.to_text().lines().filter(|l| !l.starts_with("shape.")) {
        println!("{line}");
    }
    Ok(())
}

pub fn gradcheck(instances: usize, seed: u64) -> Result<()> {
    let report = gradient_suite(instances, seed)?;
    for case in &report.cases {
        println!("{:<48} {:.3e}", case.name, case.max_rel_error);
    }
    let worst = report.max_rel_error();
    println!(
        "{} checks on {} instances, max relative error {:.3e} (tolerance {:.0e})",
        report.cases.len(),
        report.instances,
        worst,
        GRAD_TOLERANCE
    );
    if !report.passed() {
        bail!("gradient check failed: max relative error {worst:.3e} >= {GRAD_TOLERANCE:.0e}");
    }
    Ok(())
}

pub fn plot(inputs: &[PathBuf], out: &Path) -> Result<()> {
    let clouds = inputs
        .iter()
        .map(|p| {
            let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            Ok((name, load_xyz(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let svg = render_svg(&clouds);
    replace_atomically(out, |tmp| {
        std::fs::write(tmp, &svg).map_err(|e| deformnet::Error::Io { path: tmp.to_path_buf(), source: e })
    })?;
    println!("wrote {}", out.display());
    Ok(())
}
