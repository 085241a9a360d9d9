//! Central finite-difference comparison against analytic gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate with the largest relative error.
    pub worst_index: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub checked: usize,
    /// Coordinates skipped because the difference quotient is not stable
    /// under halving `h` (a kink lies within reach of the stencil).
    pub skipped_kinks: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckOptions {
    pub h: f64,
    /// Number of coordinates to probe; all of them when the input is smaller.
    pub samples: usize,
    pub seed: u64,
    /// Errors are measured relative to `max(|analytic|, |numeric|, floor)`
    /// with `floor = floor_fraction * max |analytic gradient|`.
    pub floor_fraction: f64,
    /// Relative disagreement between the `h` and `h/2` quotients above which
    /// the coordinate counts as kink-adjacent.
    pub kink_tolerance: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions { h: 1e-5, samples: 64, seed: 0, floor_fraction: 1e-3, kink_tolerance: 1e-4 }
    }
}

/// Compare the analytic gradient of `f` at `x` with central differences.
/// `f` returns the value and the full gradient.
pub fn gradcheck<F>(f: F, x: &[f64], opts: &GradCheckOptions) -> Result<GradCheckReport>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !(opts.h > 0.0) {
        return Err(Error::invalid("h", "must be > 0"));
    }
    let (f0, grad) = f(x)?;
    if !f0.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradcheck function value".into()));
    }
    if grad.len() != x.len() {
        return Err(Error::Shape(format!("gradient length {} vs input {}", grad.len(), x.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut coords: Vec<usize> = if x.len() <= opts.samples {
        (0..x.len()).collect()
    } else {
        sample(&mut rng, x.len(), opts.samples).into_vec()
    };
    coords.sort_unstable();

    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let floor = (opts.floor_fraction * scale).max(1e-300);
    let eval = |i: usize, step: f64| -> Result<f64> {
        let mut xp = x.to_vec();
        xp[i] += step;
        let (fp, _) = f(&xp)?;
        xp[i] = x[i] - step;
        let (fm, _) = f(&xp)?;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite(format!("function value near coordinate {i}")));
        }
        Ok((fp - fm) / (2.0 * step))
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: coords.first().copied().unwrap_or(0),
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        checked: 0,
        skipped_kinks: 0,
    };
    for &i in &coords {
        let fd = eval(i, opts.h)?;
        let fd_half = eval(i, 0.5 * opts.h)?;
        let denom_kink = fd.abs().max(fd_half.abs()).max(floor);
        if (fd - fd_half).abs() / denom_kink > opts.kink_tolerance {
            report.skipped_kinks += 1;
            continue;
        }
        let a = grad[i];
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(floor);
        report.checked += 1;
        if report.checked == 1 || rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = i;
            report.analytic_at_worst = a;
            report.numeric_at_worst = fd;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let x: Vec<f64> = (0..64).map(|i| 1.0 + 0.5 * (i as f64 * 0.37).sin()).collect();
        let f = |x: &[f64]| Ok((x.iter().map(|v| v * v).sum(), x.iter().map(|v| 2.0 * v).collect()));
        let r = gradcheck(f, &x, &GradCheckOptions::default()).unwrap();
        assert!(r.max_rel_error < 1e-9, "{r:?}");
        assert_eq!(r.checked + r.skipped_kinks, 64);
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let x = vec![0.5; 10];
        let f = |x: &[f64]| Ok((x.iter().map(|v| v * v * v).sum(), x.iter().map(|v| 2.0 * v * v).collect()));
        let r = gradcheck(f, &x, &GradCheckOptions::default()).unwrap();
        assert!(r.max_rel_error > 0.1);
    }

    #[test]
    fn worst_index_is_deterministic() {
        let x: Vec<f64> = (0..500).map(|i| (i as f64).cos()).collect();
        let f = |x: &[f64]| {
            let g = x.iter().enumerate().map(|(i, v)| 3.0 * v * v * (1.0 + 1e-7 * i as f64)).collect();
            Ok((x.iter().map(|v| v * v * v).sum(), g))
        };
        let opts = GradCheckOptions { seed: 9, ..Default::default() };
        let a = gradcheck(f, &x, &opts).unwrap();
        let b = gradcheck(f, &x, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_step() {
        let f = |_: &[f64]| Ok((0.0, vec![0.0]));
        assert!(gradcheck(f, &[0.0], &GradCheckOptions { h: 0.0, ..Default::default() }).is_err());
    }
}
