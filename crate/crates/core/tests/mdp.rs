mod common;

use gfarfe::mdp::*;
use gfarfe::rng::substream;
use proptest::prelude::*;

fn two_state_chain() -> TabularMdp {
    // a0 stays, a1 moves to state 1, H=2.
    let mut p = Vec::new();
    for _h in 0..2 {
        for s in 0..2 {
            p.extend(if s == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
            p.extend([0.0, 1.0]);
        }
    }
    TabularMdp::new(2, 2, 2, p, vec![1.0, 0.0]).unwrap()
}

#[test]
fn two_state_chain_optimum_by_enumeration() {
    let mdp = two_state_chain();
    let mut r = vec![0.0; 2 * 2 * 2];
    r[(2 + 1) * 2] = 1.0;
    r[(2 + 1) * 2 + 1] = 1.0;
    let reward = RewardFunction::new(2, 2, 2, r, ScaleMode::TotalBounded).unwrap();
    let vi = value_iteration(&mdp, &reward).unwrap();
    assert_eq!(vi.v(0, 0), 1.0);

    // All four deterministic policies from state 0.
    let mut best: f64 = 0.0;
    for a0 in 0..2 {
        for a1 in 0..2 {
            let v = common::enumerate_value(
                &mdp,
                |h, s, a| reward.get(h, s, a),
                |h, _, a| f64::from(u8::from(a == if h == 0 { a0 } else { a1 })),
            );
            best = best.max(v);
        }
    }
    assert_eq!(best, vi.initial_value(&mdp));
}

#[test]
fn uniform_policy_value_matches_trajectory_enumeration() {
    let mdp = two_state_chain();
    let mut rng = substream(3, 0, "test-reward");
    let reward = RewardFunction::random(&mdp, &mut rng).for_planning();
    // A product of independent uniform choices is the average over all 16
    // deterministic Markov policies.
    let uniform = common::enumerate_value(&mdp, |h, s, a| reward.get(h, s, a), |_, _, _| 0.5);
    let mut by_dp = 0.0;
    for bits in 0..16usize {
        let actions = (0..4).map(|i| (bits >> i) & 1).collect();
        let pi = Policy::new(2, 2, actions).unwrap();
        by_dp += evaluate_policy(&mdp, &reward, &pi).unwrap() / 16.0;
    }
    assert!((uniform - by_dp).abs() < 1e-12, "{uniform} vs {by_dp}");
}

#[test]
fn greedy_policy_attains_optimum() {
    for seed in 0..20 {
        let mdp = make_random_mdp(seed, 4, 3, 5, 0.7).unwrap();
        let mut rng = substream(seed, 0, "test-reward");
        let r = RewardFunction::random(&mdp, &mut rng).for_planning();
        let vi = value_iteration(&mdp, &r).unwrap();
        let v = evaluate_policy(&mdp, &r, &vi.greedy_policy()).unwrap();
        assert!((v - vi.initial_value(&mdp)).abs() < 1e-10);
    }
}

#[test]
fn zero_reward_has_zero_value() {
    let mdp = make_random_mdp(1, 3, 2, 4, 1.0).unwrap();
    let zero = RewardFunction::zeros(&mdp, ScaleMode::TotalBounded);
    let vi = value_iteration(&mdp, &zero).unwrap();
    assert!((0..=4).all(|h| vi.v_stage(h).iter().all(|v| *v == 0.0)));
    let pi = Policy::constant(&mdp, 1).unwrap();
    assert_eq!(evaluate_policy(&mdp, &zero, &pi).unwrap(), 0.0);
}

#[test]
fn saturating_reward_truncates_to_one() {
    let mdp = make_random_mdp(2, 3, 2, 4, 1.0).unwrap();
    let ones = RewardFunction::new(3, 2, 4, vec![1.0; 24], ScaleMode::PerStep).unwrap();
    let t = truncated_value_iteration(&mdp, &ones).unwrap();
    assert!(t.v_stage(0).iter().all(|v| *v == 1.0));
}

#[test]
fn concentrated_dirichlet_is_near_uniform() {
    let mdp = make_random_mdp(5, 5, 2, 3, 1e4).unwrap();
    let dev = (0..3)
        .flat_map(|h| (0..5).flat_map(move |s| (0..2).map(move |a| (h, s, a))))
        .flat_map(|(h, s, a)| mdp.next_distribution(h, s, a).to_vec())
        .map(|p| (p - 0.2).abs())
        .fold(0.0, f64::max);
    assert!(dev < 0.05, "{dev}");
}

#[test]
fn random_mdp_is_seed_deterministic() {
    let a = make_random_mdp(11, 4, 2, 3, 0.5).unwrap();
    let b = make_random_mdp(11, 4, 2, 3, 0.5).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn deterministic_chain_needs_length_minus_one_rights() {
    let mdp = make_chain_mdp(5, 6, 0.0).unwrap();
    for rights in 0..=6usize {
        // RIGHT for the first `rights` stages, LEFT afterwards.
        let actions = (0..6)
            .flat_map(|h| std::iter::repeat_n(if h < rights { RIGHT } else { LEFT }, 5))
            .collect();
        let pi = Policy::new(5, 2, actions).unwrap();
        let mut rng = substream(0, 0, "test");
        let traj = rollout(&mdp, &pi, &mut rng);
        let reached = traj.iter().any(|t| t.next_state == 4);
        assert_eq!(reached, rights >= 4, "rights={rights}");
    }
}

#[test]
fn single_state_chain_is_absorbing() {
    let mdp = make_chain_mdp(1, 3, 0.2).unwrap();
    assert!((0..3).all(|h| mdp.next_distribution(h, 0, LEFT) == [1.0]
        && mdp.next_distribution(h, 0, RIGHT) == [1.0]));
}

#[test]
fn uniform_policy_reach_probability_matches_monte_carlo() {
    let mdp = make_chain_mdp(6, 10, 0.1).unwrap();
    // Forward DP over (state, reached-end flag) under the uniform policy.
    let mut dist = vec![[0.0f64; 2]; 6];
    dist[0][0] = 1.0;
    for h in 0..10 {
        let mut next = vec![[0.0f64; 2]; 6];
        for s in 0..6 {
            for flag in 0..2 {
                for a in 0..2 {
                    for (t, p) in mdp.next_distribution(h, s, a).iter().enumerate() {
                        let f = usize::from(flag == 1 || t == 5);
                        next[t][f] += 0.5 * dist[s][flag] * p;
                    }
                }
            }
        }
        dist = next;
    }
    let exact: f64 = dist.iter().map(|d| d[1]).sum();
    let pi_rng = &mut substream(1, 0, "test-actions");
    let roll_rng = &mut substream(1, 0, "test-rollout");
    let n = 40_000;
    let mut hits = 0;
    use rand::Rng;
    for _ in 0..n {
        let mut s = sample_initial_state(&mdp, roll_rng);
        let mut reached = false;
        for h in 0..10 {
            let a = pi_rng.random_range(0..2);
            s = sample_next_state(&mdp, h, s, a, roll_rng);
            reached |= s == 5;
        }
        hits += usize::from(reached);
    }
    let mc = hits as f64 / n as f64;
    let se = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!(
        (mc - exact).abs() < 4.0 * se + 1e-3,
        "mc {mc} exact {exact}"
    );
    assert!(exact > 0.0 && exact < 0.2);
}

#[test]
fn rollout_occupancy_matches_dp() {
    let mdp = make_random_mdp(8, 4, 2, 3, 1.0).unwrap();
    let pi = Policy::new(4, 2, vec![0, 1, 1, 0, 1, 1, 0, 0, 0, 1, 0, 1]).unwrap();
    let occ = common::occupancy(&mdp, |h, s, a| f64::from(u8::from(pi.action(h, s) == a)));
    let mut counts = vec![vec![0.0; 4]; 3];
    let mut rng = substream(8, 0, "test-rollout");
    let n = 100_000;
    for _ in 0..n {
        for t in rollout(&mdp, &pi, &mut rng) {
            counts[t.stage][t.state] += 1.0;
        }
    }
    for h in 0..3 {
        let exact: Vec<f64> = occ[h].iter().map(|row| row.iter().sum()).collect();
        let tv = common::total_variation(&counts[h], &exact);
        assert!(tv < 0.01, "stage {h}: tv {tv}");
    }
}

#[test]
fn rollout_next_states_pass_chi_square() {
    let mdp = make_random_mdp(21, 5, 1, 1, 1.0).unwrap();
    let pi = Policy::constant(&mdp, 0).unwrap();
    let mut rng = substream(21, 0, "test-rollout");
    let mut counts = [[0.0f64; 5]; 5];
    let mut visits = [0.0f64; 5];
    while visits.iter().any(|v| *v < 10_000.0) {
        let t = rollout(&mdp, &pi, &mut rng)[0];
        counts[t.state][t.next_state] += 1.0;
        visits[t.state] += 1.0;
    }
    for s in 0..5 {
        let p = mdp.next_distribution(0, s, 0);
        let chi2: f64 = (0..5)
            .filter(|&t| p[t] > 0.0)
            .map(|t| {
                let e = visits[s] * p[t];
                (counts[s][t] - e).powi(2) / e
            })
            .sum();
        // 4 degrees of freedom: the 0.999 quantile is 18.47.
        assert!(chi2 < 18.47, "state {s}: chi2 {chi2}");
    }
}

#[test]
fn deterministic_rollouts_repeat() {
    let mdp = make_chain_mdp(4, 4, 0.0).unwrap();
    let pi = Policy::constant(&mdp, RIGHT).unwrap();
    let a = rollout(&mdp, &pi, &mut substream(1, 0, "x"));
    let b = rollout(&mdp, &pi, &mut substream(2, 0, "y"));
    assert_eq!(a, b);
    let one = make_chain_mdp(1, 1, 0.0).unwrap();
    assert_eq!(
        rollout(
            &one,
            &Policy::constant(&one, 0).unwrap(),
            &mut substream(0, 0, "z")
        )
        .len(),
        1
    );
}

fn arb_problem() -> impl Strategy<Value = (TabularMdp, Vec<f64>, Vec<f64>)> {
    (1usize..4, 1usize..3, 1usize..4, any::<u64>()).prop_flat_map(|(s, a, h, seed)| {
        let n = s * a * h;
        (
            Just(make_random_mdp(seed, s, a, h, 0.8).unwrap()),
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(0.0f64..1.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn value_is_monotone_in_reward((mdp, base, extra) in arb_problem()) {
        let (s, a, h) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
        let lo: Vec<f64> = base.iter().zip(&extra).map(|(x, y)| x.min(*y)).collect();
        let hi: Vec<f64> = base.iter().zip(&extra).map(|(x, y)| x.max(*y)).collect();
        let r_lo = RewardFunction::new(s, a, h, lo, ScaleMode::PerStep).unwrap().for_planning();
        let r_hi = RewardFunction::new(s, a, h, hi, ScaleMode::PerStep).unwrap().for_planning();
        let v_lo = value_iteration(&mdp, &r_lo).unwrap();
        let v_hi = value_iteration(&mdp, &r_hi).unwrap();
        for stage in 0..=h {
            for st in 0..s {
                prop_assert!(v_lo.v(stage, st) <= v_hi.v(stage, st) + 1e-12);
            }
        }
    }

    #[test]
    fn truncation_dominated_by_clipped_optimum((mdp, base, _) in arb_problem()) {
        let (s, a, h) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
        let r = RewardFunction::new(s, a, h, base.clone(), ScaleMode::PerStep).unwrap();
        let t = truncated_value_iteration(&mdp, &r).unwrap();
        let scaled = r.for_planning();
        let v = value_iteration(&mdp, &scaled).unwrap();
        for stage in 0..h {
            for st in 0..s {
                prop_assert!(t.v(stage, st) <= 1.0 + 1e-12);
                // H * V*(r/H) is the untruncated optimum of r.
                prop_assert!(t.v(stage, st) <= h as f64 * v.v(stage, st) + 1e-9);
            }
        }
    }

    #[test]
    fn greedy_evaluation_is_consistent((mdp, base, _) in arb_problem()) {
        let (s, a, h) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
        let r = RewardFunction::new(s, a, h, base, ScaleMode::PerStep).unwrap().for_planning();
        let v = value_iteration(&mdp, &r).unwrap();
        let pi = v.greedy_policy();
        prop_assert!((evaluate_policy(&mdp, &r, &pi).unwrap() - v.initial_value(&mdp)).abs() < 1e-10);
    }
}
