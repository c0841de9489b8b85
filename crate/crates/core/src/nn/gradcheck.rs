//! Central-difference gradient checker (64-bit).

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NnError;

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    pub eps: f64,
    /// Check only this many randomly chosen coordinates.
    pub max_coords: Option<usize>,
    pub seed: u64,
    /// Coordinates whose one-sided differences keep disagreeing by more than
    /// this (relative) sit on a kink, e.g. a ReLU at zero; they are skipped.
    pub kink_tolerance: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            eps: 1e-4,
            max_coords: None,
            seed: 0,
            kink_tolerance: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_coord: Option<usize>,
    pub checked: usize,
    pub skipped_kinks: usize,
}

/// A coordinate whose one-sided differences disagree is retried with a
/// step ten times smaller, at most this many steps in total.
const KINK_RETRIES: usize = 3;
const KINK_FLOOR: f64 = 1e-6;

/// Gradients smaller than this are compared in absolute terms; below it the
/// finite-difference rounding noise dominates.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares the analytic gradient returned by `objective` at `params`
/// against central differences.
pub fn grad_check<Fun>(objective: Fun, params: &[f64], opts: &GradCheckOptions) -> Result<GradCheckReport, NnError>
where
    Fun: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (f0, analytic) = objective(params);
    if !f0.is_finite() {
        return Err(NnError::NonFiniteLoss);
    }
    if analytic.len() != params.len() {
        return Err(NnError::DimMismatch {
            expected: params.len(),
            found: analytic.len(),
        });
    }
    let coords: Vec<usize> = match opts.max_coords {
        Some(k) if k < params.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut idx = sample(&mut rng, params.len(), k).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..params.len()).collect(),
    };

    let mut w = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_coord: None,
        checked: 0,
        skipped_kinks: 0,
    };
    let loss_at = |w: &[f64]| -> Result<f64, NnError> {
        let v = objective(w).0;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NnError::NonFiniteLoss)
        }
    };
    for i in coords {
        let orig = w[i];
        let mut numeric = None;
        let mut eps = opts.eps;
        for _ in 0..KINK_RETRIES {
            w[i] = orig + eps;
            let plus = loss_at(&w)?;
            w[i] = orig - eps;
            let minus = loss_at(&w)?;
            w[i] = orig;
            let forward = (plus - f0) / eps;
            let backward = (f0 - minus) / eps;
            let scale = forward.abs().max(backward.abs()).max(KINK_FLOOR);
            if (forward - backward).abs() <= opts.kink_tolerance * scale {
                numeric = Some((plus - minus) / (2.0 * eps));
                break;
            }
            eps /= 10.0;
        }
        let Some(numeric) = numeric else {
            report.skipped_kinks += 1;
            continue;
        };
        let err = relative_error(analytic[i], numeric);
        report.checked += 1;
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_coord = Some(i);
        }
    }
    Ok(report)
}
