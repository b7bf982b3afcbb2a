//! Grid-search reference for the squared class width of the tabular class.
//!
//! Maximizes
//!
//! ```text
//! (f1(z) - f2(z))^2 / (sum_i w_i (f1(z_i) - f2(z_i))^2 + lambda)
//! ```
//!
//! over pairs `f1, f2` whose values live on a grid of step `grid_step` in
//! `[0, L]` and that agree outside the cells touched by the data and `z`.
//! The ratio depends on a pair only through the per-cell differences, which
//! range over multiples of `grid_step` in `[-L, L]`; every difference vector
//! is enumerated, with branch-and-bound pruning against the incumbent. This
//! never uses the closed form and exists to check it.

use super::{FunctionClass, StageDataset};
use crate::error::{Error, Result};

/// Largest number of distinct cells the enumeration accepts.
pub const MAX_CELLS: usize = 6;

pub fn brute_force_d2(
    class: &FunctionClass,
    state: usize,
    action: usize,
    data: &StageDataset,
    grid_step: f64,
) -> Result<f64> {
    if class.name() != "tabular" {
        return Err(Error::Unsupported(
            "grid-search width is only defined for the tabular class".into(),
        ));
    }
    let bound = class.bound();
    let steps = bound / grid_step;
    if !(grid_step > 0.0) || (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::config(format!(
            "grid step {grid_step} must divide L = {bound}"
        )));
    }
    if data.lambda() <= 0.0 {
        return Err(Error::config("grid-search width needs lambda > 0"));
    }
    let steps = steps.round() as i64;

    let target = state * class.num_actions() + action;
    let mut cells = vec![target];
    for e in data.entries() {
        let cell = e.state * class.num_actions() + e.action;
        if !cells.contains(&cell) {
            cells.push(cell);
        }
    }
    if cells.len() > MAX_CELLS {
        return Err(Error::config(format!(
            "{} distinct cells exceed the enumeration cap of {MAX_CELLS}",
            cells.len()
        )));
    }
    // Entry weights grouped by the position of their cell in `cells`.
    let weights: Vec<Vec<f64>> = cells
        .iter()
        .map(|&c| {
            data.entries()
                .iter()
                .filter(|e| e.state * class.num_actions() + e.action == c)
                .map(|e| e.weight())
                .collect()
        })
        .collect();

    // 0, +1, -1, +2, -2, ... so the cheapest assignment is tried first.
    let deltas: Vec<f64> = std::iter::once(0)
        .chain((1..=steps).flat_map(|k| [k, -k]))
        .map(|k| k as f64 * grid_step)
        .collect();

    let mut search = Search {
        weights: &weights,
        deltas: &deltas,
        best: 0.0,
    };
    for &dz in &deltas {
        let den = data.lambda() + weights[0].iter().map(|w| w * dz * dz).sum::<f64>();
        search.descend(1, dz * dz, den);
    }
    Ok(search.best)
}

struct Search<'a> {
    weights: &'a [Vec<f64>],
    deltas: &'a [f64],
    best: f64,
}

impl Search<'_> {
    fn descend(&mut self, depth: usize, numerator: f64, denominator: f64) {
        let ratio = numerator / denominator;
        // Remaining cells only add to the denominator.
        if ratio <= self.best {
            return;
        }
        if depth == self.weights.len() {
            self.best = ratio;
            return;
        }
        for &d in self.deltas {
            let added: f64 = self.weights[depth].iter().map(|w| w * d * d).sum();
            self.descend(depth + 1, numerator, denominator + added);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fclass::StageEntry;

    fn data(entries: &[(usize, usize, f64)]) -> StageDataset {
        let mut d = StageDataset::new(0, 1.0, 1e-3).unwrap();
        for &(s, a, sb) in entries {
            d.push(StageEntry {
                state: s,
                action: a,
                next_state: 0,
                sigma_bar: sb,
            })
            .unwrap();
        }
        d
    }

    #[test]
    fn empty_history_gives_prior() {
        let class = FunctionClass::tabular(3, 2, 1.0);
        for step in [0.5, 0.25, 1.0 / 64.0] {
            assert_eq!(brute_force_d2(&class, 1, 1, &data(&[]), step).unwrap(), 1.0);
        }
    }

    #[test]
    fn one_observation_converges_to_half() {
        let class = FunctionClass::tabular(2, 1, 1.0);
        let step = 1.0 / 64.0;
        let v = brute_force_d2(&class, 0, 0, &data(&[(0, 0, 1.0)]), step).unwrap();
        assert!((v - 0.5).abs() <= 3.0 * step);
    }

    #[test]
    fn off_cell_data_does_not_constrain() {
        let class = FunctionClass::tabular(2, 2, 1.0);
        let v = brute_force_d2(&class, 0, 0, &data(&[(1, 1, 1.0), (1, 0, 0.5)]), 0.125).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn guards() {
        let class = FunctionClass::tabular(8, 1, 1.0);
        let many: Vec<_> = (1..8).map(|s| (s, 0, 1.0)).collect();
        assert!(brute_force_d2(&class, 0, 0, &data(&many), 0.5).is_err());
        assert!(brute_force_d2(&class, 0, 0, &data(&[]), 0.3).is_err());
    }
}
