use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use smokeflow::camera::Camera;
use smokeflow::eval::compare_scenes;
use smokeflow::io::{self, JsonLines};
use smokeflow::optim::recon::{objective_and_gradient, IterationRecord};
use smokeflow::optim::{self, gradcheck, GradCheckOptions, ReconConfig, ReconOutcome, ReconProblem};
use smokeflow::potential::{self, curl, ladder, upsample, Kernel};
use smokeflow::render::{render, unproject, LightConfig, RenderOptions};
use smokeflow::synth::{gen_plume_sequence, LoadedScene, PlumeConfig, SceneManifest};
use smokeflow::transport::{advect, Scheme};
use smokeflow::{Dims, Image, ScalarGrid, VectorGrid};

use crate::{
    AblateArgs, AdvectArgs, Cli, CliError, Command, CompareUpsampleArgs, GenArgs, GradcheckArgs, MetricsArgs,
    ProjectArgs, ReconstructArgs, RenderArgs,
};

type Res<T> = Result<T, CliError>;

pub fn run(cli: &Cli) -> Res<()> {
    match &cli.command {
        Command::Gen(a) => gen(cli, a),
        Command::Render(a) => render_cmd(cli, a),
        Command::Project(a) => project(cli, a),
        Command::Advect(a) => advect_cmd(cli, a),
        Command::Reconstruct(a) => reconstruct(cli, a),
        Command::AblateViews(a) => ablate(cli, a),
        Command::Metrics(a) => metrics(cli, a),
        Command::Gradcheck(a) => gradcheck_cmd(cli, a),
        Command::CompareUpsample(a) => compare_upsample(cli, a),
    }
}

/// Print `report` as one JSON line with `--json`, else the human summary.
fn emit<T: Serialize>(cli: &Cli, report: &T, human: impl FnOnce() -> String) -> Res<()> {
    if cli.json {
        let text = serde_json::to_string(report).map_err(|e| CliError::new("json", e.to_string()))?;
        println!("{text}");
    } else {
        println!("{}", human());
    }
    Ok(())
}

fn mkdir(dir: &Path) -> Res<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::new("io", format!("cannot create {}: {e}", dir.display())))
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    base.parent().unwrap_or(Path::new(".")).join(rel)
}

fn gen(cli: &Cli, a: &GenArgs) -> Res<()> {
    let mut cfg: PlumeConfig = io::read_json(&a.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| in_file(e, &a.config))?;
    let seq = gen_plume_sequence(&cfg)?;
    mkdir(&a.out)?;
    let manifest = seq.write(&a.out, Some(cfg.seed))?;
    let mass: Vec<f64> = seq.densities.iter().map(ScalarGrid::sum).collect();
    let report = json!({
        "out": a.out,
        "frames": manifest.frames,
        "cameras": manifest.cameras.len(),
        "seed": cfg.seed,
        "mass": mass,
    });
    emit(cli, &report, || format!("wrote {} frames x {} views to {}", manifest.frames, manifest.cameras.len(), a.out.display()))
}

/// Config errors carry the file they came from.
fn in_file(e: smokeflow::Error, file: &Path) -> CliError {
    let mut c = CliError::from(e);
    c.message = format!("{}: {}", file.display(), c.message);
    c
}

/// Cameras, light, and background of a render or projection.
#[derive(Debug, Deserialize)]
struct RenderSpec {
    cameras: Vec<Camera>,
    #[serde(default)]
    light: LightConfig,
    #[serde(default = "default_step")]
    render_step: f64,
    #[serde(default)]
    background: Option<String>,
    #[serde(default)]
    res: Option<[usize; 3]>,
}

fn default_step() -> f64 {
    0.5
}

fn load_spec(path: &Path) -> Res<(RenderSpec, Option<Image>)> {
    let spec: RenderSpec = io::read_json(path)?;
    if spec.cameras.is_empty() {
        return Err(CliError::new("invalid", format!("{}: `cameras` is empty", path.display())));
    }
    for (i, c) in spec.cameras.iter().enumerate() {
        c.validate().map_err(|e| in_file(e, path)).map_err(|mut e| {
            e.message = format!("{} (cameras[{i}])", e.message);
            e
        })?;
    }
    spec.light.validate().map_err(|e| in_file(e, path))?;
    if !spec.render_step.is_finite() || spec.render_step <= 0.0 {
        return Err(CliError::new("invalid", format!("{}: `render_step` must be > 0", path.display())));
    }
    let bg = match &spec.background {
        Some(f) => Some(io::read_pfm(resolve(path, f))?),
        None => None,
    };
    Ok((spec, bg))
}

fn render_cmd(cli: &Cli, a: &RenderArgs) -> Res<()> {
    let (spec, bg) = load_spec(&a.scene)?;
    let opts = RenderOptions { step: spec.render_step, light_gradient: true };
    mkdir(&a.out)?;
    let mut files = Vec::new();
    for (t, path) in a.density.iter().enumerate() {
        let rho = io::read_scalar(path)?;
        for (c, cam) in spec.cameras.iter().enumerate() {
            let img = render(&rho, &spec.light, cam, bg.as_ref(), &opts)?;
            let name = if a.density.len() == 1 { format!("view{c}") } else { format!("view{c}_frame{t:03}") };
            io::write_pfm(a.out.join(format!("{name}.pfm")), &img)?;
            io::write_png(a.out.join(format!("{name}.png")), &img)?;
            files.push(format!("{name}.pfm"));
        }
    }
    let report = json!({ "out": a.out, "images": files });
    emit(cli, &report, || format!("wrote {} images to {}", files.len(), a.out.display()))
}

fn project(cli: &Cli, a: &ProjectArgs) -> Res<()> {
    let (spec, _) = load_spec(&a.scene)?;
    let cam = spec.cameras.get(a.view).ok_or_else(|| {
        CliError::new("invalid", format!("--view {} out of range ({} cameras)", a.view, spec.cameras.len()))
    })?;
    let res = match (&a.res, spec.res) {
        (Some(r), _) if r.len() == 3 => [r[0], r[1], r[2]],
        (Some(_), _) => return Err(CliError::new("usage", "--res needs three values nx,ny,nz")),
        (None, Some(r)) => r,
        (None, None) => return Err(CliError::new("usage", "--res is required when the scene has no `res`")),
    };
    let dims = Dims::new(res[0], res[1], res[2]);
    dims.check_nonempty()?;
    let img = io::read_pfm(&a.image)?;
    let vol = unproject(&img, cam, dims, spec.render_step)?;
    io::write_scalar(&a.out, &vol)?;
    let (lo, hi) = vol.min_max();
    let report = json!({ "out": a.out, "res": res, "min": lo, "max": hi });
    emit(cli, &report, || format!("wrote {} volume to {}", dims, a.out.display()))
}

fn parse_scheme(s: &str) -> Res<Scheme> {
    match s {
        "sl" | "semi-lagrangian" => Ok(Scheme::SemiLagrangian),
        "mc" | "mac-cormack" | "maccormack" => Ok(Scheme::MacCormack),
        _ => Err(CliError::new("usage", format!("unknown scheme `{s}` (semi-lagrangian | mac-cormack)"))),
    }
}

fn advect_cmd(cli: &Cli, a: &AdvectArgs) -> Res<()> {
    let scheme = parse_scheme(&a.scheme)?;
    if !a.dt.is_finite() {
        return Err(CliError::new("usage", "--dt must be finite"));
    }
    let mut rho = io::read_scalar(&a.density)?;
    let u = match (&a.velocity, &a.potential) {
        (Some(v), None) => io::read_vector(v)?,
        (None, Some(p)) => curl(&io::read_vector(p)?),
        _ => return Err(CliError::new("usage", "give exactly one of --velocity or --potential")),
    };
    mkdir(&a.out)?;
    let mut mass = vec![rho.sum()];
    for t in 1..=a.steps {
        rho = advect(scheme, &rho, &u, a.dt)?;
        io::write_scalar(a.out.join(format!("density_{t:03}.vgrid")), &rho)?;
        mass.push(rho.sum());
    }
    let report = json!({ "out": a.out, "steps": a.steps, "mass": mass });
    emit(cli, &report, || format!("advected {} steps into {}", a.steps, a.out.display()))
}

fn load_recon_config(cli: &Cli, path: Option<&Path>) -> Res<ReconConfig> {
    let mut cfg = match path {
        Some(p) => {
            let c: ReconConfig = io::read_json(p)?;
            c.validate().map_err(|e| in_file(e, p))?;
            c
        }
        None => ReconConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct ReconSummary<'a> {
    out: &'a Path,
    views: &'a [usize],
    status: &'a optim::Status,
    iterations: usize,
    input_rmse: &'a [f64],
    mean_input_rmse: f64,
    max_divergence: f64,
    final_max_velocity: f64,
    final_loss: Option<f64>,
}

fn reconstruct(cli: &Cli, a: &ReconstructArgs) -> Res<()> {
    let mut cfg = load_recon_config(cli, a.config.as_deref())?;
    cfg.paper_backward |= a.paper_backward;
    cfg.clamp_density |= a.clamp_density;
    cfg.cfl_per_level |= a.cfl_per_level;
    let scene = LoadedScene::load(&a.scene)?;
    let problem = ReconProblem::from_scene(&scene, &a.views)?;
    mkdir(&a.out)?;
    let log_path = a.out.join("report.jsonl");
    let file = fs::File::create(&log_path)
        .map_err(|e| CliError::new("io", format!("cannot create {}: {e}", log_path.display())))?;
    let mut log = JsonLines::new(BufWriter::new(file));
    let mut observer = |r: &IterationRecord| log.push(r);
    let outcome = optim::reconstruct_with(&problem, &cfg, &mut observer)?;
    log.flush()?;
    write_outcome(&a.out, &outcome, &scene, &cfg)?;
    io::write_json(a.out.join("config.json"), &cfg)?;

    let r = &outcome.report;
    let summary = ReconSummary {
        out: &a.out,
        views: &a.views,
        status: &r.status,
        iterations: r.iterations,
        input_rmse: &r.input_rmse,
        mean_input_rmse: r.mean_input_rmse,
        max_divergence: r.max_divergence,
        final_max_velocity: r.final_max_velocity,
        final_loss: r.records.last().map(|x| x.loss.total),
    };
    io::write_json(a.out.join("summary.json"), &summary)?;
    emit(cli, &summary, || {
        format!(
            "{:?} after {} iterations; input RMSE {:.5}; max |u_i| {:.3}; max div {:.2e}",
            r.status, r.iterations, r.mean_input_rmse, r.final_max_velocity, r.max_divergence
        )
    })
}

/// Write a reconstruction as a scene directory comparable with `metrics`.
fn write_outcome(dir: &Path, out: &ReconOutcome, scene: &LoadedScene, cfg: &ReconConfig) -> Res<()> {
    let src = &scene.manifest;
    let bg = scene.background.as_ref();
    let mut m = SceneManifest {
        res: src.res,
        frames: out.frames.len(),
        densities: Vec::new(),
        velocities: Vec::new(),
        potentials: Vec::new(),
        cameras: src.cameras.clone(),
        light: src.light.clone(),
        render_step: cfg.render_step,
        views: Vec::new(),
        background: None,
        seed: Some(cfg.seed),
    };
    for (t, d) in out.frames.iter().enumerate() {
        let name = format!("density_{t:03}.vgrid");
        io::write_scalar(dir.join(&name), d)?;
        m.densities.push(name);
    }
    for (t, u) in out.velocities.iter().enumerate() {
        let name = format!("velocity_{t:03}.vgrid");
        io::write_vector(dir.join(&name), u)?;
        m.velocities.push(name);
    }
    for (t, p) in out.potentials.iter().enumerate() {
        let composed = potential::compose_with(p, cfg.kernel)?;
        let name = format!("potential_{t:03}.vgrid");
        io::write_vector(dir.join(&name), &composed)?;
        m.potentials.push(name);
        for (l, level) in p.levels.iter().enumerate() {
            io::write_vector(dir.join(format!("potential_{t:03}_level{l}.vgrid")), level)?;
        }
    }
    let opts = RenderOptions { step: cfg.render_step, light_gradient: true };
    for (c, cam) in src.cameras.iter().enumerate() {
        let mut names = Vec::new();
        for (t, rho) in out.frames.iter().enumerate() {
            let img = render(rho, &src.light, cam, bg, &opts)?;
            let name = format!("view{c}_frame{t:03}.pfm");
            io::write_pfm(dir.join(&name), &img)?;
            io::write_png(dir.join(format!("view{c}_frame{t:03}.png")), &img)?;
            names.push(name);
        }
        m.views.push(names);
    }
    if let Some(b) = bg {
        io::write_pfm(dir.join("background.pfm"), b)?;
        m.background = Some("background.pfm".into());
    }
    io::write_json(dir.join("manifest.json"), &m)?;
    Ok(())
}

fn parse_sets(s: &str) -> Res<Vec<Vec<usize>>> {
    s.split('/')
        .map(|set| {
            set.split(',')
                .map(|v| v.trim().parse::<usize>().map_err(|_| CliError::new("usage", format!("bad camera index `{v}` in --sets"))))
                .collect()
        })
        .collect()
}

fn ablate(cli: &Cli, a: &AblateArgs) -> Res<()> {
    let cfg = load_recon_config(cli, a.config.as_deref())?;
    let sets = parse_sets(&a.sets)?;
    let scene = LoadedScene::load(&a.scene)?;
    let all: Vec<usize> = (0..scene.manifest.cameras.len()).collect();
    let problem = ReconProblem::from_scene(&scene, &all)?;
    let views = optim::ablate_views(&problem, &scene.densities, &sets, &cfg)?;
    let center = if a.center { Some(optim::ablate_center(&problem, &scene.densities, &sets[0], &cfg)?) } else { None };
    let report = json!({ "views": views, "center": center });
    if let Some(out) = &a.out {
        io::write_json(out, &report)?;
    }
    emit(cli, &report, || {
        let mut s = String::new();
        for r in &views.runs {
            s.push_str(&format!(
                "views {:?}: input RMSE {:.5}, held-out RMSE {}, volume RMSE {:.5}, centroid depth deviation {:.3}\n",
                r.views,
                r.input_rmse,
                r.held_out_rmse.map_or("-".into(), |v| format!("{v:.5}")),
                r.volume_rmse,
                r.centroid_depth_deviation
            ));
        }
        s.push_str(&format!("more views reduce volume RMSE: {}", views.trend_holds));
        if let Some(c) = &center {
            s.push_str(&format!(
                "\ncenter term: deviation {:.3} (on) vs {:.3} (off)",
                c.with_center.centroid_depth_deviation, c.without_center.centroid_depth_deviation
            ));
        }
        s
    })
}

fn metrics(cli: &Cli, a: &MetricsArgs) -> Res<()> {
    let ours = LoadedScene::load(&a.ours)?;
    let reference = LoadedScene::load(&a.reference)?;
    let table = compare_scenes(
        (&ours.densities, &ours.velocities, &ours.views),
        (&reference.densities, &reference.velocities, &reference.views),
    )?;
    emit(cli, &table, || {
        format!(
            "density RMSE {:.5}, velocity EPE {:.5}, image RMSE {:.5}",
            table.mean_density_rmse, table.mean_velocity_epe, table.mean_image_rmse
        )
    })
}

fn gradcheck_cmd(cli: &Cli, a: &GradcheckArgs) -> Res<()> {
    if a.size < 2 || !a.size.is_multiple_of(2) {
        return Err(CliError::new("usage", "--size must be even and at least 2"));
    }
    let seed = cli.seed.unwrap_or(0);
    let mut scene: PlumeConfig = io::read_json(&a.scene)?;
    let n = a.size;
    scene.res = [n, n, n];
    scene.steps = a.steps;
    scene.blob_radius = n as f64 / 4.0;
    scene.blob_center = [0.5, 0.4, 0.5];
    scene.noise_spacing = scene.noise_spacing.min(n as f64);
    scene.rig.image_res = [n + 2, n + 2];
    scene.validate().map_err(|e| in_file(e, &a.scene))?;
    let seq = gen_plume_sequence(&scene)?;
    let views: Vec<usize> = (0..seq.cameras.len()).collect();
    let mut problem = ReconProblem::from_sequence(&seq, &views)?;
    problem.prototypes = Some(seq.densities.clone());
    // Without clamping so the check also covers negative transported values.
    let cfg = ReconConfig { levels: 2, clamp_density: false, ..ReconConfig::default() };
    let ladder = ladder(problem.dims, cfg.levels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..problem.dims.len()).map(|_| -2.0 + rng.random_range(-0.5..0.5)).collect();
    for _ in 0..a.steps {
        for d in &ladder {
            x.extend((0..3 * d.len()).map(|_| rng.random_range(-0.2..0.2)));
        }
    }
    let opts = GradCheckOptions { h: a.h, samples: a.samples, seed, ..GradCheckOptions::default() };
    let f = |x: &[f64]| objective_and_gradient(&problem, &cfg, x);
    let rep = gradcheck(f, &x, &opts)?;
    let pass = rep.max_rel_error < a.tolerance;
    let report = json!({ "report": rep, "tolerance": a.tolerance, "pass": pass, "parameters": x.len() });
    emit(cli, &report, || {
        format!(
            "max relative error {:.3e} at coordinate {} ({} checked, {} kink-adjacent skipped): {}",
            rep.max_rel_error,
            rep.worst_index,
            rep.checked,
            rep.skipped_kinks,
            if pass { "pass" } else { "FAIL" }
        )
    })?;
    if pass {
        Ok(())
    } else {
        Err(CliError::new("gradcheck", format!("max relative error {:.3e} >= {:.1e}", rep.max_rel_error, a.tolerance)))
    }
}

/// Side-by-side slice image of two velocity magnitudes, shared scale.
fn slice_pair(a: &VectorGrid, b: &VectorGrid) -> Image {
    let d = a.dims;
    let z = d.nz / 2;
    let mag = |u: &VectorGrid, x: usize, y: usize| {
        let v = u.at(x, y, z);
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    };
    let mut peak: f64 = 1e-12;
    for y in 0..d.ny {
        for x in 0..d.nx {
            peak = peak.max(mag(a, x, y)).max(mag(b, x, y));
        }
    }
    let gap = 2;
    let w = 2 * d.nx + gap;
    let mut img = Image::new(w, d.ny, 1);
    for y in 0..d.ny {
        for x in 0..d.nx {
            // Image rows go top to bottom, grid y points up.
            let row = d.ny - 1 - y;
            img.data[row * w + x] = mag(a, x, y) / peak;
            img.data[row * w + d.nx + gap + x] = mag(b, x, y) / peak;
        }
    }
    img
}

fn compare_upsample(cli: &Cli, a: &CompareUpsampleArgs) -> Res<()> {
    let coarse = match &a.potential {
        Some(p) => io::read_vector(p)?,
        None => {
            if a.res.len() != 3 {
                return Err(CliError::new("usage", "--res needs three values nx,ny,nz"));
            }
            let dims = Dims::new(a.res[0], a.res[1], a.res[2]);
            dims.check_nonempty()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(0));
            VectorGrid::from_fn(dims, |_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
        }
    };
    let fine = |k: Kernel| {
        let mut p = coarse.clone();
        for _ in 0..a.times {
            p = upsample(&p, k);
        }
        curl(&p)
    };
    let (ul, ub) = (fine(Kernel::Linear), fine(Kernel::BSpline2));
    let (rl, rb) = (potential::roughness(&ul), potential::roughness(&ub));
    if let Some(out) = &a.out {
        io::write_png(out, &slice_pair(&ul, &ub))?;
    }
    let report = json!({
        "coarse_res": [coarse.dims.nx, coarse.dims.ny, coarse.dims.nz],
        "times": a.times,
        "roughness_linear": rl,
        "roughness_bspline2": rb,
        "bspline2_smoother": rb < rl,
    });
    emit(cli, &report, || format!("roughness: linear {rl:.5}, quadratic B-spline {rb:.5}"))
}
