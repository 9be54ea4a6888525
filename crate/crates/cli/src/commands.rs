use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use deformest::config::PipelineConfig;
use deformest::eval::{run_session, write_curve_csv, write_samples_csv, write_trials_csv, write_vtk, SessionReport};
use deformest::hash::sha256_hex;
use deformest::mesh::{load_mesh, save_mesh, TetMesh};
use deformest::nn::{train, ModelArtifact, TrainConfig, TrainingData, MODEL_FORMAT};
use deformest::sampling::{build_dataset, load_dataset, save_dataset, write_csv, Dataset};
use deformest::Vec3;

use crate::manifest::Manifest;
use crate::{Cli, Command, UsageError};

struct Ctx {
    cfg: PipelineConfig,
    profile: Option<String>,
    out: PathBuf,
}

impl Ctx {
    fn manifest(&self, command: &str) -> Manifest {
        Manifest::new(command, self.profile.clone(), self.cfg.session.seed, self.cfg.to_toml())
    }
}

fn resolve_config(cli: &Cli, required: bool) -> Result<Option<(PipelineConfig, Option<String>)>> {
    let g = &cli.global;
    let mut cfg = match (&g.config, &g.profile) {
        (Some(_), Some(_)) => return Err(UsageError("--config and --profile are mutually exclusive".into()).into()),
        (Some(path), None) => PipelineConfig::load(path)?,
        (None, Some(name)) => PipelineConfig::profile(name)?,
        (None, None) if required => {
            return Err(UsageError("this command needs --config <file> or --profile <name>".into()).into())
        }
        (None, None) => return Ok(None),
    };
    if let Some(seed) = g.seed {
        cfg.session.seed = seed;
        cfg.session.train.seed = seed;
    }
    Ok(Some((cfg, g.profile.clone())))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.global.workers {
        if n == 0 {
            return Err(UsageError("--workers must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker pool")?;
    }
    if let Command::Predict { model, observations, mesh } = &cli.command {
        let cfg = resolve_config(cli, false)?;
        create_dir(&cli.global.out)?;
        return cmd_predict(cfg, model, observations, mesh.as_deref(), &cli.global.out);
    }
    let (cfg, profile) = resolve_config(cli, true)?.expect("config is required here");
    let out = match &cli.command {
        Command::Repro => {
            let name = profile.clone().or_else(|| {
                cli.global.config.as_ref().and_then(|p| p.file_stem()).map(|s| s.to_string_lossy().into_owned())
            });
            cli.global.out.join(name.unwrap_or_else(|| "repro".into()))
        }
        _ => cli.global.out.clone(),
    };
    create_dir(&out)?;
    let ctx = Ctx { cfg, profile, out };
    match &cli.command {
        Command::Mesh => cmd_mesh(&ctx).map(drop),
        Command::Sample { csv } => cmd_sample(&ctx, *csv).map(drop),
        Command::Train { dataset } => cmd_train(&ctx, dataset).map(drop),
        Command::Eval { dataset, predictions } => cmd_eval(&ctx, dataset, *predictions).map(drop),
        Command::Repro => cmd_repro(&ctx),
        Command::Predict { .. } => unreachable!(),
    }
}

fn cmd_mesh(ctx: &Ctx) -> Result<PathBuf> {
    let mut m = ctx.manifest("mesh");
    let mesh = m.time("mesh", || ctx.cfg.build_mesh())?;
    let path = ctx.out.join("mesh.tmesh");
    save_mesh(&mesh, &path)?;
    m.output(&path)?;
    m.write(&ctx.out)?;
    println!(
        "mesh: {} vertices, {} tets, {} fixed, {} free, {} observation -> {}",
        mesh.vertex_count(),
        mesh.tets().len(),
        mesh.fixed_ids().len(),
        mesh.free_count(),
        mesh.observation_ids().len(),
        path.display()
    );
    Ok(path)
}

fn cmd_sample(ctx: &Ctx, csv: bool) -> Result<PathBuf> {
    let mut m = ctx.manifest("sample");
    let mesh = ctx.cfg.build_mesh()?;
    let d = ctx.cfg.elasticity()?;
    let (ds, report) = m.time("sample", || {
        build_dataset(&mesh, &d, &ctx.cfg.sampling, ctx.cfg.n_steps, ctx.cfg.scale, ctx.cfg.keep_forces)
    })?;
    let path = ctx.out.join("dataset.dfds");
    save_dataset(&ds, &path)?;
    m.output(&path)?;
    if csv {
        let csv_path = ctx.out.join("dataset.csv");
        write_csv(&ds, create(&csv_path)?).with_context(|| format!("writing {}", csv_path.display()))?;
        m.output(&csv_path)?;
    }
    m.write(&ctx.out)?;
    println!(
        "sample: {} of {} targets succeeded ({} failed), max contact displacement {:.3} mm -> {}",
        report.succeeded,
        report.attempted,
        report.failed,
        ds.scale.to_mm(ds.max_target_displacement()),
        path.display()
    );
    Ok(path)
}

/// Loads a dataset and checks it against the configured mesh.
fn load_checked(ctx: &Ctx, path: &Path) -> Result<(Dataset, TetMesh)> {
    let ds = load_dataset(path)?;
    let mesh = ctx.cfg.build_mesh()?;
    ds.check_mesh(&mesh).map_err(deformest::Error::from)?;
    Ok((ds, mesh))
}

fn cmd_train(ctx: &Ctx, dataset: &Path) -> Result<PathBuf> {
    let mut m = ctx.manifest("train");
    m.input(dataset)?;
    let (ds, _) = load_checked(ctx, dataset)?;
    let data = TrainingData::from_dataset(&ds);
    let all: Vec<usize> = (0..ds.len()).collect();
    let tc = TrainConfig { seed: ctx.cfg.session.train.seed, ..ctx.cfg.session.train.clone() };
    let (model, log) =
        m.time("train", || train(&data, &all, &[], ctx.cfg.session.hidden, &tc)).map_err(deformest::Error::from)?;
    let artifact = ModelArtifact {
        format: MODEL_FORMAT.into(),
        mesh_hash: ds.mesh_hash.clone(),
        dataset_hash: m.inputs[0].sha256.clone(),
        observation_ids: ds.observation_ids.clone(),
        n_free: ds.n_free,
        scale: ds.scale,
        train_config: tc,
        final_train_rmse_mm: ds.scale.to_mm(log.final_train_rmse),
        final_cost: log.cost.last().copied().unwrap_or(f64::NAN),
        updates: log.updates,
        model,
    };
    let path = ctx.out.join("model.json");
    artifact.save(&path)?;
    m.output(&path)?;
    m.write(&ctx.out)?;
    println!(
        "train: {} updates, training RMSE {:.4} mm -> {}",
        log.updates,
        artifact.final_train_rmse_mm,
        path.display()
    );
    Ok(path)
}

fn cmd_eval(ctx: &Ctx, dataset: &Path, keep_predictions: bool) -> Result<SessionReport> {
    let mut m = ctx.manifest("eval");
    m.input(dataset)?;
    let (ds, mesh) = load_checked(ctx, dataset)?;
    let session = deformest::eval::SessionConfig { keep_predictions: true, ..ctx.cfg.session.clone() };
    let mut report = m.time("eval", || run_session(&ds, &session)).map_err(deformest::Error::from)?;
    let predictions = report.predictions.take().unwrap_or_default();

    let write = |name: &str, f: &dyn Fn(BufWriter<File>) -> std::io::Result<()>| -> Result<PathBuf> {
        let path = ctx.out.join(name);
        f(create(&path)?).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    };
    let mut outputs = vec![
        write("report.json", &|mut w| {
            serde_json::to_writer_pretty(&mut w, &report)?;
            std::io::Write::flush(&mut w)
        })?,
        write("trials.csv", &|w| write_trials_csv(&report, w))?,
        write("samples.csv", &|w| write_samples_csv(&report, w))?,
        write("curve.csv", &|w| write_curve_csv(&report, w))?,
    ];

    // Estimated shape of the worst test sample of the first repeat, coloured by LPE.
    let n3 = 3 * ds.n_free;
    if let Some(worst) = report.samples.iter().filter(|s| s.repeat == 0).max_by(|a, b| a.max_mm.total_cmp(&b.max_mm)) {
        let p =
            predictions.iter().find(|p| p.repeat == worst.repeat && p.fold == worst.fold).expect("trial predictions");
        let col = p.test_idx.iter().position(|&i| i == worst.sample).expect("sample in its fold");
        let pred = &p.values[col * n3..(col + 1) * n3];
        let lpe = deformest::eval::local_positional_error(pred, &ds.samples[worst.sample].u_all, &ds.scale)
            .map_err(deformest::Error::from)?;
        let title = format!("estimated shape of sample {} (max LPE {:.3} mm)", worst.sample, lpe.max);
        outputs
            .push(write("worst_sample.vtk", &|w| write_vtk(&mesh, pred, &[("lpe_mm", &lpe.per_vertex)], &title, w))?);
    }
    if keep_predictions {
        outputs.push(write("predictions.csv", &|mut w| {
            use std::io::Write;
            writeln!(w, "repeat,fold,sample,values...")?;
            for p in &predictions {
                for (c, s) in p.test_idx.iter().enumerate() {
                    write!(w, "{},{},{s}", p.repeat, p.fold)?;
                    for v in &p.values[c * n3..(c + 1) * n3] {
                        write!(w, ",{v}")?;
                    }
                    writeln!(w)?;
                }
            }
            w.flush()
        })?);
    }
    for o in &outputs {
        m.output(o)?;
    }
    m.write(&ctx.out)?;
    println!(
        "eval: {} trials, mean RMSE {:.4} mm ({:.4}% of {:.1} mm), mean max LPE {:.4} mm ({:.4}%) -> {}",
        report.trials.len(),
        report.mean_rmse_mm,
        report.mean_rmse_pct,
        report.max_displacement_mm,
        report.mean_max_lpe_mm,
        report.mean_max_lpe_pct,
        ctx.out.join("report.json").display()
    );
    if let Some(r) = &report.reference {
        println!("reference {}: {} mm ({}%)", r.label, r.rmse_mm, r.rmse_pct);
    }
    Ok(report)
}

fn read_observations(path: &Path) -> Result<Vec<Vec3>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut obs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match values {
            Ok(v) if v.len() == 3 => obs.push(Vec3::new(v[0], v[1], v[2])),
            Err(_) if obs.is_empty() && n == 0 => continue,
            _ => {
                return Err(UsageError(format!("{}:{}: expected `x,y,z`, found {line:?}", path.display(), n + 1)).into())
            }
        }
    }
    Ok(obs)
}

fn cmd_predict(
    cfg: Option<(PipelineConfig, Option<String>)>,
    model_path: &Path,
    obs_path: &Path,
    mesh_path: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let config_text = cfg.as_ref().map(|(c, _)| c.to_toml()).unwrap_or_default();
    let mut m = Manifest::new("predict", cfg.as_ref().and_then(|(_, p)| p.clone()), 0, config_text);
    m.input(model_path)?;
    m.input(obs_path)?;
    let artifact = ModelArtifact::load(model_path)?;
    let obs = read_observations(obs_path)?;
    if obs.len() != artifact.observation_ids.len() {
        return Err(UsageError(format!(
            "model expects {} observation rows, {} has {}",
            artifact.observation_ids.len(),
            obs_path.display(),
            obs.len()
        ))
        .into());
    }
    let mesh = match (mesh_path, &cfg) {
        (Some(p), _) => {
            m.input(p)?;
            load_mesh(p)?
        }
        (None, Some((c, _))) => c.build_mesh()?,
        (None, None) => {
            return Err(
                UsageError("predict needs --mesh <file>, --config or --profile for the VTK output".into()).into()
            )
        }
    };
    artifact.check_mesh(&mesh)?;
    let field = m.time("predict", || artifact.model.predict(&obs)).map_err(deformest::Error::from)?;

    let csv_path = out.join("field.csv");
    {
        use std::io::Write;
        let mut w = create(&csv_path)?;
        writeln!(w, "vertex,ux,uy,uz")?;
        for (f, u) in field.iter().enumerate() {
            writeln!(w, "{},{},{},{}", mesh.free_vertices()[f], u.x, u.y, u.z)?;
        }
        w.flush()?;
    }
    let flat: Vec<f64> = field.iter().flat_map(|u| u.iter().copied()).collect();
    let magnitude_mm: Vec<f64> = field.iter().map(|u| artifact.scale.to_mm(u.norm())).collect();
    let vtk_path = out.join("field.vtk");
    write_vtk(&mesh, &flat, &[("displacement_mm", &magnitude_mm)], "estimated displacement field", create(&vtk_path)?)
        .with_context(|| format!("writing {}", vtk_path.display()))?;
    m.output(&csv_path)?;
    m.output(&vtk_path)?;
    m.write(out)?;
    println!("predict: {} vertices -> {}", field.len(), csv_path.display());
    Ok(())
}

fn cmd_repro(ctx: &Ctx) -> Result<()> {
    let mut m = ctx.manifest("repro");
    let mesh = m.time("mesh", || cmd_mesh(ctx))?;
    let dataset = m.time("sample", || cmd_sample(ctx, false))?;
    let report = m.time("eval", || cmd_eval(ctx, &dataset, false))?;
    let model = m.time("train", || cmd_train(ctx, &dataset))?;
    for p in [&mesh, &dataset, &ctx.out.join("report.json"), &model] {
        m.output(p)?;
    }
    m.write(&ctx.out)?;
    println!(
        "repro: mean RMSE {:.4} mm = {:.4}% of max contact displacement (dataset sha256 {})",
        report.mean_rmse_mm,
        report.mean_rmse_pct,
        &sha256_hex(&std::fs::read(&dataset)?)[..16]
    );
    Ok(())
}
