use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fclass::{cover_proxy, FunctionClass};

/// Confidence radii, weight floor and epistemic multiplier actually used by
/// a run, with the covering proxies they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub beta_e: f64,
    pub beta_p: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub log_n_f: f64,
    pub log_n_v: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub scale: f64,
}

const FIXED_POINT_ITERATIONS: usize = 200;

/// Plug-in radii from the covering proxies:
///
/// * `beta_E = scale * sqrt(H log N_V)`, `beta_P = scale * sqrt(H log N_F)`,
///   both floored at 1;
/// * `alpha = 1/sqrt(H)`, `gamma = sqrt(log N_V)`.
///
/// `log N_V` depends on the radius through its bonus cover at
/// `eps / (2 beta)`, so `beta_E` is the fixed point of the first equation.
/// `delta` only enters through logarithmic factors the `scale` knob absorbs.
pub fn calibrate_betas(
    class: &FunctionClass,
    horizon: usize,
    epsilon: f64,
    delta: f64,
    scale: f64,
) -> Result<Calibration> {
    if horizon == 0 {
        return Err(Error::config("horizon must be >= 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::config(format!("scale must be > 0, got {scale}")));
    }
    let h = horizon as f64;
    let log_n_f = cover_proxy(class, epsilon, 1.0)?.log_n_f;
    let mut beta_e = 1.0;
    let mut log_n_v = cover_proxy(class, epsilon, beta_e)?.log_n_v;
    for _ in 0..FIXED_POINT_ITERATIONS {
        let next = (scale * (h * log_n_v).sqrt()).max(1.0);
        let converged = (next - beta_e).abs() <= 1e-13 * next;
        beta_e = next;
        log_n_v = cover_proxy(class, epsilon, beta_e)?.log_n_v;
        if converged {
            break;
        }
    }
    let mut c = calibrate_with_covers(horizon, log_n_f, log_n_v, epsilon, delta, scale)?;
    c.beta_e = beta_e;
    Ok(c)
}

/// The same plug-in formulas with the log covering numbers given directly
/// instead of taken from the proxies.
pub fn calibrate_with_covers(
    horizon: usize,
    log_n_f: f64,
    log_n_v: f64,
    epsilon: f64,
    delta: f64,
    scale: f64,
) -> Result<Calibration> {
    if horizon == 0 {
        return Err(Error::config("horizon must be >= 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(log_n_f >= 0.0 && log_n_v >= 0.0 && log_n_f.is_finite() && log_n_v.is_finite()) {
        return Err(Error::config(format!(
            "log covering numbers must be finite and >= 0, got {log_n_f} and {log_n_v}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::config(format!("scale must be > 0, got {scale}")));
    }
    let h = horizon as f64;
    Ok(Calibration {
        beta_e: (scale * (h * log_n_v).sqrt()).max(1.0),
        beta_p: (scale * (h * log_n_f).sqrt()).max(1.0),
        alpha: 1.0 / h.sqrt(),
        gamma: log_n_v.sqrt(),
        log_n_f,
        log_n_v,
        epsilon,
        delta,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_single_stage() {
        let class = FunctionClass::tabular(1, 1, 1.0);
        let c = calibrate_betas(&class, 1, 1.0, 0.1, 1.0).unwrap();
        assert_eq!(c.alpha, 1.0);
        assert!((c.gamma - c.log_n_v.sqrt()).abs() < 1e-15);
        assert!((c.beta_e - c.log_n_v.sqrt()).abs() < 1e-9);
        assert!((c.log_n_f - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn doubling_horizon_scales_alpha() {
        let class = FunctionClass::tabular(3, 2, 1.0);
        let a = calibrate_betas(&class, 4, 0.2, 0.1, 1.0).unwrap();
        let b = calibrate_betas(&class, 8, 0.2, 0.1, 1.0).unwrap();
        assert!((b.alpha - a.alpha / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn radii_never_drop_below_one() {
        let class = FunctionClass::tabular(1, 1, 1.0);
        let c = calibrate_betas(&class, 1, 0.9, 0.1, 1e-3).unwrap();
        assert_eq!((c.beta_e, c.beta_p), (1.0, 1.0));
    }

    #[test]
    fn manual_covers_skip_the_fixed_point() {
        let c = calibrate_with_covers(4, 2.0, 3.0, 0.1, 0.1, 1.0).unwrap();
        assert_eq!((c.beta_e, c.beta_p), (12f64.sqrt(), 8f64.sqrt()));
        assert_eq!(c.gamma, 3f64.sqrt());
        assert!(calibrate_with_covers(4, -1.0, 3.0, 0.1, 0.1, 1.0).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let class = FunctionClass::tabular(1, 1, 1.0);
        assert!(calibrate_betas(&class, 2, 0.1, 0.0, 1.0).is_err());
        assert!(calibrate_betas(&class, 2, 0.1, 0.1, 0.0).is_err());
        assert!(calibrate_betas(&class, 0, 0.1, 0.1, 1.0).is_err());
    }
}
