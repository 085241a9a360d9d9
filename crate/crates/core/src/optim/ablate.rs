//! View-count and center-term ablations on scenes with known ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{rmse_image, rmse_volume};
use crate::grid::ScalarGrid;
use crate::loss::CenterSpec;
use crate::optim::recon::{reconstruct, ReconConfig, ReconOutcome, ReconProblem, Status};
use crate::render::{render, RenderOptions};
use crate::synth::centroid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewSetResult {
    /// Camera indices into the full problem; the first one is the input view.
    pub views: Vec<usize>,
    pub input_rmse: f64,
    /// Mean image RMSE over cameras outside the set; absent when every
    /// camera was used.
    pub held_out_rmse: Option<f64>,
    /// Mean density RMSE over frames.
    pub volume_rmse: f64,
    /// Mean `|p - c|` of the density centroid along the input view's depth
    /// axis, with `c` the grid middle.
    pub centroid_depth_deviation: f64,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub runs: Vec<ViewSetResult>,
    /// Every run whose views strictly contain the first run's views reached
    /// a strictly smaller volume RMSE.
    pub trend_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterAblation {
    pub with_center: ViewSetResult,
    pub without_center: ViewSetResult,
    pub center_reduces_deviation: bool,
}

fn subproblem(all: &ReconProblem, views: &[usize]) -> Result<ReconProblem> {
    if views.is_empty() {
        return Err(Error::invalid("view_sets", "empty view set"));
    }
    if let Some(&bad) = views.iter().find(|&&v| v >= all.cameras.len()) {
        return Err(Error::invalid("view_sets", format!("camera {bad} out of range ({} cameras)", all.cameras.len())));
    }
    Ok(ReconProblem {
        dims: all.dims,
        cameras: views.iter().map(|&v| all.cameras[v].clone()).collect(),
        targets: views.iter().map(|&v| all.targets[v].clone()).collect(),
        light: all.light.clone(),
        background: all.background.clone(),
        prototypes: all.prototypes.clone(),
    })
}

fn score(all: &ReconProblem, truth: &[ScalarGrid], views: &[usize], out: &ReconOutcome, cfg: &ReconConfig) -> Result<ViewSetResult> {
    let opts = RenderOptions { step: cfg.render_step, light_gradient: cfg.light_gradient };
    let view_rmse = |cam: usize| -> Result<f64> {
        let mut s = 0.0;
        for (rho, target) in out.frames.iter().zip(&all.targets[cam]) {
            let img = render(rho, &all.light, &all.cameras[cam], all.background.as_ref(), &opts)?;
            s += rmse_image(&img, target)?;
        }
        Ok(s / out.frames.len() as f64)
    };
    let held: Vec<usize> = (0..all.cameras.len()).filter(|c| !views.contains(c)).collect();
    let held_out_rmse = if held.is_empty() {
        None
    } else {
        let mut s = 0.0;
        for &c in &held {
            s += view_rmse(c)?;
        }
        Some(s / held.len() as f64)
    };
    let mut vol = 0.0;
    for (a, b) in out.frames.iter().zip(truth) {
        vol += rmse_volume(a, b)?;
    }
    let axis = cfg.center_axis.unwrap_or_else(|| CenterSpec::dominant_axis(&all.cameras[views[0]]));
    let mid = all.dims.axis(axis) as f64 / 2.0;
    let dev = out.frames.iter().map(|f| (centroid(f)[axis] - mid).abs()).sum::<f64>() / out.frames.len() as f64;
    Ok(ViewSetResult {
        views: views.to_vec(),
        input_rmse: view_rmse(views[0])?,
        held_out_rmse,
        volume_rmse: vol / out.frames.len() as f64,
        centroid_depth_deviation: dev,
        status: out.report.status.clone(),
    })
}

/// Reconstruct once per view set and compare against the ground truth.
pub fn ablate_views(
    all: &ReconProblem,
    truth: &[ScalarGrid],
    view_sets: &[Vec<usize>],
    cfg: &ReconConfig,
) -> Result<AblationReport> {
    if truth.len() != all.frames() {
        return Err(Error::invalid("truth", format!("{} volumes for {} frames", truth.len(), all.frames())));
    }
    let mut runs = Vec::with_capacity(view_sets.len());
    for views in view_sets {
        let sub = subproblem(all, views)?;
        let out = reconstruct(&sub, cfg)?;
        runs.push(score(all, truth, views, &out, cfg)?);
    }
    let trend_holds = match runs.first() {
        None => true,
        Some(base) => runs[1..]
            .iter()
            .filter(|r| r.views.len() > base.views.len() && base.views.iter().all(|v| r.views.contains(v)))
            .all(|r| r.volume_rmse < base.volume_rmse),
    };
    Ok(AblationReport { runs, trend_holds })
}

/// Reconstruct from `views` with and without the center term.
pub fn ablate_center(
    all: &ReconProblem,
    truth: &[ScalarGrid],
    views: &[usize],
    cfg: &ReconConfig,
) -> Result<CenterAblation> {
    let sub = subproblem(all, views)?;
    let on = ReconConfig { use_center: true, ..cfg.clone() };
    let off = ReconConfig { use_center: false, ..cfg.clone() };
    let with_center = score(all, truth, views, &reconstruct(&sub, &on)?, &on)?;
    let without_center = score(all, truth, views, &reconstruct(&sub, &off)?, &off)?;
    let center_reduces_deviation = with_center.centroid_depth_deviation < without_center.centroid_depth_deviation;
    Ok(CenterAblation { with_center, without_center, center_reduces_deviation })
}
