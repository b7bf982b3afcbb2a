//! Independent oracles shared by the integration tests. None of them call the
//! library's solvers or regression code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use gfarfe::fclass::{StageDataset, StageEntry};
use gfarfe::mdp::TabularMdp;
use gfarfe::rng::{substream, StreamRng};
use rand::Rng;

/// Occupancy `d[h][s][a]` of a Markov policy given by `prob(h, s, a)`.
pub fn occupancy(
    mdp: &TabularMdp,
    prob: impl Fn(usize, usize, usize) -> f64,
) -> Vec<Vec<Vec<f64>>> {
    let (n, m, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut state_dist = mdp.initial_distribution().to_vec();
    let mut out = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let mut d = vec![vec![0.0; m]; n];
        let mut next = vec![0.0; n];
        for s in 0..n {
            for a in 0..m {
                d[s][a] = state_dist[s] * prob(h, s, a);
                for (t, p) in mdp.next_distribution(h, s, a).iter().enumerate() {
                    next[t] += d[s][a] * p;
                }
            }
        }
        out.push(d);
        state_dist = next;
    }
    out
}

/// Expected return of a Markov policy by explicit enumeration of every
/// trajectory, each weighted by its probability.
pub fn enumerate_value(
    mdp: &TabularMdp,
    reward: impl Fn(usize, usize, usize) -> f64 + Copy,
    prob: impl Fn(usize, usize, usize) -> f64 + Copy,
) -> f64 {
    fn walk(
        mdp: &TabularMdp,
        h: usize,
        s: usize,
        weight: f64,
        acc: f64,
        reward: impl Fn(usize, usize, usize) -> f64 + Copy,
        prob: impl Fn(usize, usize, usize) -> f64 + Copy,
    ) -> f64 {
        if h == mdp.horizon() {
            return weight * acc;
        }
        let mut total = 0.0;
        for a in 0..mdp.num_actions() {
            let pa = prob(h, s, a);
            if pa == 0.0 {
                continue;
            }
            for (t, p) in mdp.next_distribution(h, s, a).iter().enumerate() {
                if *p > 0.0 {
                    total += walk(
                        mdp,
                        h + 1,
                        t,
                        weight * pa * p,
                        acc + reward(h, s, a),
                        reward,
                        prob,
                    );
                }
            }
        }
        total
    }
    mdp.initial_distribution()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(s, p)| walk(mdp, 0, s, *p, 0.0, reward, prob))
        .sum()
}

/// Every `(h, s, a)` reachable with positive probability under some policy.
pub fn reachable_triples(mdp: &TabularMdp) -> BTreeSet<(usize, usize, usize)> {
    let mut frontier: BTreeSet<usize> = mdp
        .initial_distribution()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(s, _)| s)
        .collect();
    let mut out = BTreeSet::new();
    for h in 0..mdp.horizon() {
        let mut next = BTreeSet::new();
        for &s in &frontier {
            for a in 0..mdp.num_actions() {
                out.insert((h, s, a));
                for (t, p) in mdp.next_distribution(h, s, a).iter().enumerate() {
                    if *p > 0.0 {
                        next.insert(t);
                    }
                }
            }
        }
        frontier = next;
    }
    out
}

/// Dense linear solve by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Random dataset over an `S x A` grid with weights in `[floor, 3]`.
pub fn random_dataset(
    rng: &mut StreamRng,
    num_states: usize,
    num_actions: usize,
    len: usize,
    lambda: f64,
    floor: f64,
) -> StageDataset {
    let mut data = StageDataset::new(0, lambda, floor).unwrap();
    for _ in 0..len {
        data.push(StageEntry {
            state: rng.random_range(0..num_states),
            action: rng.random_range(0..num_actions),
            next_state: rng.random_range(0..num_states),
            sigma_bar: rng.random_range(floor..=3.0),
        })
        .unwrap();
    }
    data
}

pub fn rng(seed: u64, purpose: &str) -> StreamRng {
    substream(seed, 0, purpose)
}

/// Spearman rank correlation, average ranks on ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Total-variation distance between two nonnegative vectors normalized to 1.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    0.5 * p
        .iter()
        .zip(q)
        .map(|(a, b)| (a / sp - b / sq).abs())
        .sum::<f64>()
}
