//! Covering-number proxies.
//!
//! These are explicit discretization bounds, not exact covering numbers:
//! a grid of step `eps` per parameter for the tabular class, and a
//! `d`-dimensional ball cover for linear parameterizations. The optimistic
//! value class composes a value cover at `eps/2` with a bonus cover at
//! `eps/(2 beta)`.

use serde::{Deserialize, Serialize};

use super::FunctionClass;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverProxy {
    /// `log N_F(eps)`.
    pub log_n_f: f64,
    /// `log N_V(eps) = log N_F(eps/2) + log N_B(eps/(2 beta))`.
    pub log_n_v: f64,
    /// `log N_B(eps/(2 beta))`.
    pub log_n_b: f64,
    pub epsilon: f64,
    pub beta: f64,
    /// Always true: these numbers are proxies.
    pub proxy: bool,
}

/// `log N(eps)` for a class with `params` free parameters, each ranging over
/// an interval of width `range`.
pub fn log_covering_number(tabular: bool, params: usize, range: f64, eps: f64) -> f64 {
    let p = params as f64;
    if tabular {
        p * (1.0 + range / eps).ln()
    } else {
        p * (1.0 + 2.0 * range * p.sqrt() / eps).ln()
    }
}

pub fn cover_proxy(class: &FunctionClass, epsilon: f64, beta: f64) -> Result<CoverProxy> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::config(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if !(beta >= 1.0 && beta.is_finite()) {
        return Err(Error::config(format!("beta must be >= 1, got {beta}")));
    }
    let tabular = matches!(class.name(), "tabular");
    let range = class.bound();
    let log_n_f = log_covering_number(tabular, class.parameter_count(), range, epsilon);
    let log_n_f_half = log_covering_number(tabular, class.parameter_count(), range, epsilon / 2.0);
    let log_n_b = log_covering_number(
        tabular,
        class.bonus_parameter_count(),
        range,
        epsilon / (2.0 * beta),
    );
    Ok(CoverProxy {
        log_n_f,
        log_n_v: log_n_f_half + log_n_b,
        log_n_b,
        epsilon,
        beta,
        proxy: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fclass::{FunctionClass, LinearFeatures};

    #[test]
    fn single_cell_two_point_cover() {
        let class = FunctionClass::tabular(1, 1, 1.0);
        let cover = cover_proxy(&class, 1.0, 1.0).unwrap();
        assert!((cover.log_n_f - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn linear_d4() {
        let class = FunctionClass::linear(LinearFeatures::one_hot(4, 1), 1.0);
        let cover = cover_proxy(&class, 0.1, 1.0).unwrap();
        assert!((cover.log_n_f - 4.0 * 41f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn value_cover_dominates() {
        let class = FunctionClass::tabular(3, 2, 1.0);
        for beta in [1.0, 3.0, 40.0] {
            let c = cover_proxy(&class, 0.3, beta).unwrap();
            assert!(c.log_n_v >= c.log_n_f);
            assert!(c.proxy);
        }
        assert!(cover_proxy(&class, 1.5, 2.0).is_err());
        assert!(cover_proxy(&class, 0.0, 2.0).is_err());
        assert!(cover_proxy(&class, 0.5, 0.5).is_err());
    }
}
