//! Coarse-to-fine reconstruction of a density sequence and its
//! divergence-free motion from image sequences, by direct optimization.
//!
//! Free variables are a raw initial density (mapped through softplus) and one
//! multi-scale potential per transport step. Level `l` of a ladder with `L`
//! levels is stored as `theta_l` with `P_l = 2^(L-1-l) * theta_l`, so one unit
//! of `theta` moves the composed velocity by about one cell per frame at every
//! level and a single learning rate suits the whole ladder.

use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::grid::{Dims, Image, ScalarGrid, VectorGrid};
use crate::loss::{CenterSpec, LossBreakdown, LossWeights};
use crate::optim::adam::{adam_step, lr_decay, AdamState};
use crate::optim::tape::{softplus_inverse, Tape, Var};
use crate::potential::{self, ladder, Kernel, MultiScalePotential};
use crate::render::{LightConfig, RenderOptions};
use crate::transport::Scheme;

/// Observations and fixed scene parameters.
#[derive(Clone, Debug)]
pub struct ReconProblem {
    pub dims: Dims,
    /// The first camera is the input view; any others are extra views.
    pub cameras: Vec<Camera>,
    /// `targets[camera][frame]`.
    pub targets: Vec<Vec<Image>>,
    pub light: LightConfig,
    pub background: Option<Image>,
    /// Optional per-frame density estimates used as soft guidance.
    pub prototypes: Option<Vec<ScalarGrid>>,
}

impl ReconProblem {
    /// Problem fitting the given cameras of a generated sequence.
    pub fn from_sequence(seq: &crate::synth::PlumeSequence, views: &[usize]) -> Result<Self> {
        Self::assemble(seq.dims, &seq.cameras, &seq.views, &seq.light, seq.background.as_ref(), views)
    }

    /// Problem fitting the given cameras of a scene directory.
    pub fn from_scene(scene: &crate::synth::LoadedScene, views: &[usize]) -> Result<Self> {
        let m = &scene.manifest;
        Self::assemble(scene.dims(), &m.cameras, &scene.views, &m.light, scene.background.as_ref(), views)
    }

    fn assemble(
        dims: Dims,
        cameras: &[Camera],
        images: &[Vec<Image>],
        light: &LightConfig,
        background: Option<&Image>,
        views: &[usize],
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::invalid("views", "need at least one camera"));
        }
        if let Some(&bad) = views.iter().find(|&&v| v >= cameras.len() || v >= images.len()) {
            return Err(Error::invalid("views", format!("camera {bad} out of range ({} cameras)", cameras.len())));
        }
        let p = ReconProblem {
            dims,
            cameras: views.iter().map(|&v| cameras[v].clone()).collect(),
            targets: views.iter().map(|&v| images[v].clone()).collect(),
            light: light.clone(),
            background: background.cloned(),
            prototypes: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn frames(&self) -> usize {
        self.targets.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.check_nonempty()?;
        self.light.validate()?;
        if self.cameras.is_empty() || self.cameras.len() != self.targets.len() {
            return Err(Error::invalid(
                "views",
                format!("{} cameras but {} target sequences", self.cameras.len(), self.targets.len()),
            ));
        }
        let frames = self.frames();
        if frames == 0 {
            return Err(Error::invalid("views", "need at least one target frame"));
        }
        for (c, (cam, seq)) in self.cameras.iter().zip(&self.targets).enumerate() {
            cam.validate()?;
            if seq.len() != frames {
                return Err(Error::invalid(format!("views[{c}]"), format!("{} frames, expected {frames}", seq.len())));
            }
            for img in seq {
                if img.width != cam.width() || img.height != cam.height() {
                    return Err(Error::Shape(format!(
                        "view {c}: image {}x{} vs camera {}x{}",
                        img.width,
                        img.height,
                        cam.width(),
                        cam.height()
                    )));
                }
                if !img.data.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite(format!("target image of view {c}")));
                }
            }
        }
        if let Some(p) = &self.prototypes {
            if p.len() != frames || p.iter().any(|g| g.dims != self.dims) {
                return Err(Error::invalid("prototypes", format!("need {frames} volumes of {}", self.dims)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconConfig {
    /// Number of potential ladder levels.
    pub levels: usize,
    /// Weights of frames reached by transport.
    pub weights: LossWeights,
    /// Weights of the initial frame (only target and center are used).
    pub density_weights: LossWeights,
    pub lr_density: f64,
    pub lr_velocity: f64,
    pub lr_decay: f64,
    pub lr_offset: i64,
    /// Iterations fitting the initial frame alone before motion starts.
    pub density_iterations: usize,
    /// Iterations spent after each ladder level is activated.
    pub iterations_per_level: usize,
    /// `[iteration, steps]` pairs, counted from the start of the motion phase:
    /// from `iteration` on, the first `steps` transport steps are optimized.
    /// Empty means all steps from the start.
    pub frame_schedule: Vec<[usize; 2]>,
    /// Clamp densities reached by transport to be nonnegative.
    pub clamp_density: bool,
    /// Evaluate the CFL term on each residual level instead of the composed
    /// velocity.
    pub cfl_per_level: bool,
    /// Use the normalized inverse projection as the rendering gradient.
    pub paper_backward: bool,
    pub light_gradient: bool,
    pub render_step: f64,
    pub init_density: f64,
    pub use_center: bool,
    /// Depth axis for the center term; the input camera's dominant axis when
    /// absent.
    pub center_axis: Option<usize>,
    pub scheme: Scheme,
    pub kernel: Kernel,
    /// Seeds the perturbation of the initial raw density when
    /// `init_noise > 0`.
    pub seed: u64,
    pub init_noise: f64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            levels: 3,
            weights: LossWeights::VELOCITY,
            density_weights: LossWeights::DENSITY,
            lr_density: 0.05,
            lr_velocity: 0.02,
            lr_decay: 2e-4,
            lr_offset: 0,
            density_iterations: 150,
            iterations_per_level: 100,
            frame_schedule: Vec::new(),
            clamp_density: true,
            cfl_per_level: false,
            paper_backward: false,
            light_gradient: true,
            render_step: 0.5,
            init_density: 0.01,
            use_center: true,
            center_axis: None,
            scheme: Scheme::MacCormack,
            kernel: Kernel::BSpline2,
            seed: 0,
            init_noise: 0.0,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.density_weights.validate()?;
        for (name, v) in [("lr_density", self.lr_density), ("lr_velocity", self.lr_velocity)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be > 0")));
            }
        }
        if !(self.lr_decay >= 0.0) {
            return Err(Error::invalid("lr_decay", "must be >= 0"));
        }
        if !(self.render_step > 0.0) {
            return Err(Error::invalid("render_step", "must be > 0"));
        }
        if !(self.init_density > 0.0) {
            return Err(Error::invalid("init_density", "must be > 0"));
        }
        if self.init_noise < 0.0 {
            return Err(Error::invalid("init_noise", "must be >= 0"));
        }
        if self.center_axis.is_some_and(|a| a > 2) {
            return Err(Error::invalid("center_axis", "must be 0, 1, or 2"));
        }
        if self.levels == 0 {
            return Err(Error::invalid("levels", "need at least one level"));
        }
        Ok(())
    }

    pub fn total_iterations(&self) -> usize {
        self.density_iterations + self.levels * self.iterations_per_level
    }

    fn render_options(&self) -> RenderOptions {
        RenderOptions { step: self.render_step, light_gradient: self.light_gradient }
    }

    fn active_steps(&self, motion_iteration: usize, steps: usize) -> usize {
        let mut active = steps;
        for &[start, n] in &self.frame_schedule {
            if motion_iteration >= start {
                active = n.min(steps);
            }
        }
        if self.frame_schedule.first().is_some_and(|s| motion_iteration < s[0]) {
            active = self.frame_schedule[0][1].min(steps);
        }
        active
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Density,
    Motion,
}

/// One line of the optimization log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phase: Phase,
    /// Finest active ladder level.
    pub level: usize,
    pub steps: usize,
    /// Weighted terms summed over frames.
    pub loss: LossBreakdown,
    pub lr_density: f64,
    pub lr_velocity: f64,
    /// Largest interior divergence of any velocity this iteration.
    pub max_divergence: f64,
    pub max_velocity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum Status {
    Converged,
    /// The objective became non-finite; the returned state is the last
    /// finite one.
    Diverged { iteration: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconReport {
    pub status: Status,
    pub iterations: usize,
    pub records: Vec<IterationRecord>,
    /// Input-view image RMSE per frame of the returned state.
    pub input_rmse: Vec<f64>,
    pub mean_input_rmse: f64,
    /// Largest interior divergence over every velocity of every iteration.
    pub max_divergence: f64,
    pub final_max_velocity: f64,
}

#[derive(Clone, Debug)]
pub struct ReconOutcome {
    pub rho0: ScalarGrid,
    pub potentials: Vec<MultiScalePotential>,
    pub velocities: Vec<VectorGrid>,
    /// All frames including the initial one.
    pub frames: Vec<ScalarGrid>,
    pub report: ReconReport,
}

/// Free variables of the optimization.
#[derive(Clone)]
struct Params {
    raw: Vec<f64>,
    /// `theta[step][level]`; levels beyond the active count are absent.
    theta: Vec<Vec<Vec<f64>>>,
}

struct Forward {
    tape: Tape,
    root: Var,
    raw: Var,
    theta: Vec<Vec<Var>>,
    breakdown: LossBreakdown,
    velocities: Vec<Var>,
    frames: Vec<Var>,
}

struct Context<'a> {
    problem: &'a ReconProblem,
    cfg: &'a ReconConfig,
    ladder: Vec<Dims>,
    center: Option<CenterSpec>,
    opts: RenderOptions,
}

impl Context<'_> {
    fn level_scale(&self, l: usize) -> f64 {
        (1u64 << (self.ladder.len() - 1 - l)) as f64
    }

    /// Target and center terms of one frame.
    fn image_terms(&self, tape: &mut Tape, rho: Var, frame: usize, w: &LossWeights) -> (Vec<(Var, f64)>, LossBreakdown) {
        let p = self.problem;
        let mut terms = Vec::new();
        let mut raw = LossBreakdown::default();
        if w.w_tar != 0.0 {
            let per_view = w.w_tar / p.cameras.len() as f64;
            for (cam, seq) in p.cameras.iter().zip(&p.targets) {
                let v = tape.render_mse(
                    rho,
                    p.dims,
                    &seq[frame],
                    cam,
                    &p.light,
                    p.background.as_ref(),
                    self.opts,
                    self.cfg.paper_backward,
                );
                raw.target += tape.scalar(v) / p.cameras.len() as f64;
                terms.push((v, per_view));
            }
        }
        if let (Some(spec), true) = (self.center, w.w_center != 0.0) {
            let v = tape.center_loss(rho, p.dims, spec);
            raw.center = tape.scalar(v);
            terms.push((v, w.w_center));
        }
        if let (Some(protos), true) = (&p.prototypes, w.w_proxy != 0.0) {
            let v = tape.proxy_loss(rho, p.dims, &protos[frame]);
            raw.proxy = tape.scalar(v);
            terms.push((v, w.w_proxy));
        }
        (terms, raw)
    }

    fn forward(&self, params: &Params, steps: usize) -> Forward {
        let p = self.problem;
        let cfg = self.cfg;
        let mut tape = Tape::new();
        let raw = tape.leaf(params.raw.clone());
        let rho0 = tape.softplus(raw);

        let (mut terms, b0) = self.image_terms(&mut tape, rho0, 0, &cfg.density_weights);
        let mut breakdown = b0.weighted(&cfg.density_weights);
        let mut frames = vec![rho0];
        let mut velocities = Vec::new();
        let mut theta_vars = Vec::new();
        let mut rho = rho0;
        for t in 0..steps {
            let mut levels = Vec::new();
            let mut vars = Vec::new();
            let mut raw_terms = LossBreakdown::default();
            let mut vel_terms = Vec::new();
            for l in 0..self.ladder.len() {
                match params.theta[t].get(l) {
                    Some(th) => {
                        let v = tape.leaf(th.clone());
                        vars.push(v);
                        let s = self.level_scale(l);
                        levels.push(Some(tape.scale(v, s)));
                        if cfg.cfl_per_level && cfg.weights.w_cfl != 0.0 {
                            // Residual velocity in finest-cell units.
                            let ul = tape.curl(v, self.ladder[l]);
                            let c = tape.cfl_loss(ul, self.ladder[l]);
                            raw_terms.cfl += tape.scalar(c);
                            vel_terms.push((c, cfg.weights.w_cfl));
                        }
                    }
                    None => levels.push(None),
                }
            }
            let finest = *self.ladder.last().unwrap();
            let pot = tape.compose(&levels, &self.ladder, cfg.kernel);
            let u = tape.curl(pot, finest);
            if !cfg.cfl_per_level && cfg.weights.w_cfl != 0.0 {
                let c = tape.cfl_loss(u, finest);
                raw_terms.cfl += tape.scalar(c);
                vel_terms.push((c, cfg.weights.w_cfl));
            }
            if cfg.weights.w_smooth != 0.0 {
                let s = tape.smooth_loss(u, finest);
                raw_terms.smooth = tape.scalar(s);
                vel_terms.push((s, cfg.weights.w_smooth));
            }
            rho = tape.advect(cfg.scheme, rho, u, p.dims, 1.0);
            if cfg.clamp_density {
                rho = tape.relu(rho);
            }
            let (img_terms, b) = self.image_terms(&mut tape, rho, t + 1, &cfg.weights);
            raw_terms.target = b.target;
            raw_terms.center = b.center;
            raw_terms.proxy = b.proxy;
            breakdown.add(&raw_terms.weighted(&cfg.weights));
            terms.extend(img_terms);
            terms.extend(vel_terms);
            frames.push(rho);
            velocities.push(u);
            theta_vars.push(vars);
        }
        let root = tape.weighted_sum(&terms);
        breakdown.total = tape.scalar(root);
        Forward { tape, root, raw, theta: theta_vars, breakdown, velocities, frames }
    }
}

/// Optimize with default logging disabled.
pub fn reconstruct(problem: &ReconProblem, cfg: &ReconConfig) -> Result<ReconOutcome> {
    reconstruct_with(problem, cfg, &mut |_| Ok(()))
}

/// Optimize, handing every iteration record to `observer` as it is produced.
pub fn reconstruct_with(
    problem: &ReconProblem,
    cfg: &ReconConfig,
    observer: &mut dyn FnMut(&IterationRecord) -> Result<()>,
) -> Result<ReconOutcome> {
    problem.validate()?;
    cfg.validate()?;
    let ladder = ladder(problem.dims, cfg.levels)?;
    let center = cfg.use_center.then(|| {
        let axis = cfg.center_axis.unwrap_or_else(|| CenterSpec::dominant_axis(&problem.cameras[0]));
        CenterSpec::for_grid(problem.dims, axis)
    });
    let ctx = Context { problem, cfg, ladder: ladder.clone(), center, opts: cfg.render_options() };
    let steps = problem.frames() - 1;

    let raw0 = softplus_inverse(cfg.init_density);
    let mut raw = vec![raw0; problem.dims.len()];
    if cfg.init_noise > 0.0 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        for v in &mut raw {
            *v += cfg.init_noise * rng.random_range(-1.0..1.0);
        }
    }
    let mut params = Params { raw, theta: vec![Vec::new(); steps] };
    let mut adam_raw = AdamState::new("density", problem.dims.len());
    let mut adam_theta: Vec<Vec<AdamState>> = vec![Vec::new(); steps];

    let mut records = Vec::with_capacity(cfg.total_iterations());
    let mut status = Status::Converged;
    let mut max_div = 0.0f64;
    let mut iteration = 0usize;

    let schedule = (0..cfg.density_iterations)
        .map(|_| (Phase::Density, 0usize))
        .chain((0..cfg.levels).flat_map(|l| (0..cfg.iterations_per_level).map(move |_| (Phase::Motion, l))));
    let mut motion_iteration = 0usize;
    for (phase, level) in schedule {
        let active = match phase {
            Phase::Density => 0,
            Phase::Motion => cfg.active_steps(motion_iteration, steps),
        };
        if phase == Phase::Motion {
            for t in 0..steps {
                while params.theta[t].len() <= level {
                    let l = params.theta[t].len();
                    params.theta[t].push(vec![0.0; 3 * ladder[l].len()]);
                    adam_theta[t].push(AdamState::new(format!("potential[{t}][{l}]"), 3 * ladder[l].len()));
                }
            }
        }
        let fwd = ctx.forward(&params, active);
        let total = fwd.breakdown.total;
        if !total.is_finite() {
            status = Status::Diverged { iteration, reason: format!("objective is {total}") };
            break;
        }
        let mut it_div = 0.0f64;
        let mut it_vmax = 0.0f64;
        for &u in &fwd.velocities {
            let ug = VectorGrid { dims: problem.dims, data: fwd.tape.value(u).to_vec() };
            it_div = it_div.max(potential::max_interior_divergence(&ug));
            it_vmax = it_vmax.max(ug.max_abs_component());
        }
        max_div = max_div.max(it_div);

        let lr_d = lr_decay(cfg.lr_density, iteration as i64, cfg.lr_offset, cfg.lr_decay)?;
        let lr_v = lr_decay(cfg.lr_velocity, iteration as i64, cfg.lr_offset, cfg.lr_decay)?;
        let record = IterationRecord {
            iteration,
            phase,
            level,
            steps: active,
            loss: fwd.breakdown,
            lr_density: lr_d,
            lr_velocity: lr_v,
            max_divergence: it_div,
            max_velocity: it_vmax,
        };
        observer(&record)?;
        records.push(record);

        let grads = fwd.tape.backward(fwd.root);
        let before = params.clone();
        let step_result = (|| -> Result<()> {
            adam_step(&mut params.raw, &grads.get(fwd.raw), &mut adam_raw, lr_d)?;
            for (t, vars) in fwd.theta.iter().enumerate() {
                for (l, &v) in vars.iter().enumerate() {
                    adam_step(&mut params.theta[t][l], &grads.get(v), &mut adam_theta[t][l], lr_v)?;
                }
            }
            Ok(())
        })();
        if let Err(e) = step_result {
            params = before;
            status = Status::Diverged { iteration, reason: e.to_string() };
            break;
        }
        iteration += 1;
        if phase == Phase::Motion {
            motion_iteration += 1;
        }
    }

    // Evaluate the final state over the full sequence.
    for t in 0..steps {
        while params.theta[t].is_empty() {
            params.theta[t].push(vec![0.0; 3 * ladder[0].len()]);
        }
    }
    let fwd = ctx.forward(&params, steps);
    if !fwd.breakdown.total.is_finite() && status == Status::Converged {
        status = Status::Diverged { iteration, reason: "final objective is not finite".into() };
    }
    let frames: Vec<ScalarGrid> =
        fwd.frames.iter().map(|&v| ScalarGrid { dims: problem.dims, data: fwd.tape.value(v).to_vec() }).collect();
    let velocities: Vec<VectorGrid> =
        fwd.velocities.iter().map(|&v| VectorGrid { dims: problem.dims, data: fwd.tape.value(v).to_vec() }).collect();
    for u in &velocities {
        max_div = max_div.max(potential::max_interior_divergence(u));
    }
    let potentials = params
        .theta
        .iter()
        .map(|levels| {
            let mut out: Vec<VectorGrid> = Vec::with_capacity(ladder.len());
            for (l, d) in ladder.iter().enumerate() {
                let s = ctx.level_scale(l);
                let data = levels.get(l).map_or_else(|| vec![0.0; 3 * d.len()], |th| th.iter().map(|v| s * v).collect());
                out.push(VectorGrid { dims: *d, data });
            }
            MultiScalePotential { levels: out }
        })
        .collect();

    let opts = ctx.opts;
    let input_rmse = frames
        .iter()
        .zip(&problem.targets[0])
        .map(|(rho, target)| {
            let img = crate::render::render(rho, &problem.light, &problem.cameras[0], problem.background.as_ref(), &opts)?;
            crate::eval::rmse_image(&img, target)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_input_rmse = input_rmse.iter().sum::<f64>() / input_rmse.len() as f64;
    let final_max_velocity = velocities.iter().map(VectorGrid::max_abs_component).fold(0.0, f64::max);
    Ok(ReconOutcome {
        rho0: frames[0].clone(),
        potentials,
        velocities,
        frames,
        report: ReconReport {
            status,
            iterations: iteration,
            records,
            input_rmse,
            mean_input_rmse,
            max_divergence: max_div,
            final_max_velocity,
        },
    })
}

/// Objective and gradient with respect to a flat vector of all free
/// variables (raw density followed by every potential level), for gradient
/// checks of the full pipeline.
pub fn objective_and_gradient(
    problem: &ReconProblem,
    cfg: &ReconConfig,
    x: &[f64],
) -> Result<(f64, Vec<f64>)> {
    problem.validate()?;
    cfg.validate()?;
    let ladder = ladder(problem.dims, cfg.levels)?;
    let steps = problem.frames() - 1;
    let n = problem.dims.len();
    let expected = n + steps * ladder.iter().map(|d| 3 * d.len()).sum::<usize>();
    if x.len() != expected {
        return Err(Error::Shape(format!("parameter vector {} vs {expected}", x.len())));
    }
    let mut params = Params { raw: x[..n].to_vec(), theta: vec![Vec::new(); steps] };
    let mut off = n;
    for levels in &mut params.theta {
        for d in &ladder {
            levels.push(x[off..off + 3 * d.len()].to_vec());
            off += 3 * d.len();
        }
    }
    let center = cfg.use_center.then(|| {
        let axis = cfg.center_axis.unwrap_or_else(|| CenterSpec::dominant_axis(&problem.cameras[0]));
        CenterSpec::for_grid(problem.dims, axis)
    });
    let ctx = Context { problem, cfg, ladder, center, opts: cfg.render_options() };
    let fwd = ctx.forward(&params, steps);
    let grads = fwd.tape.backward(fwd.root);
    let mut g = grads.get(fwd.raw);
    for vars in &fwd.theta {
        for &v in vars {
            g.extend(grads.get(v));
        }
    }
    Ok((fwd.breakdown.total, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_schedule_grows() {
        let cfg = ReconConfig { frame_schedule: vec![[0, 1], [10, 3], [20, 5]], ..Default::default() };
        assert_eq!(cfg.active_steps(0, 4), 1);
        assert_eq!(cfg.active_steps(15, 4), 3);
        assert_eq!(cfg.active_steps(25, 4), 4);
        let late = ReconConfig { frame_schedule: vec![[5, 2]], ..Default::default() };
        assert_eq!(late.active_steps(0, 4), 2);
        assert_eq!(ReconConfig::default().active_steps(0, 4), 4);
    }

    #[test]
    fn config_rejects_bad_rates() {
        let cfg = ReconConfig { lr_velocity: 0.0, ..Default::default() };
        assert!(cfg.validate().unwrap_err().to_string().contains("lr_velocity"));
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        let err = serde_json::from_str::<ReconConfig>(r#"{"levelz": 2}"#).unwrap_err();
        assert!(err.to_string().contains("levelz"));
    }
}
