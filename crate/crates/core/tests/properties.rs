use proptest::prelude::*;
use refpomdp::belief::ParticleBelief;
use refpomdp::sbmp::{Bounds, Workspace};
use refpomdp::soft::{kl_divergence, kl_penalized_objective, soft_policy, soft_value};
use refpomdp::subgoals::{epsilon_wrap, normalized_entropy, sample_subgoal, HeuristicMode, SubgoalContext, DISTANCE_EPS};
use refpomdp::{rng_from_seed, State};

fn distribution(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn closed_form(p: &[f64], q: &[f64], eta: f64) -> f64 {
    p.iter().zip(q).map(|(p, q)| p * (eta * q).exp()).sum::<f64>().ln() / eta
}

fn case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (2usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec(0.01f64..1.0, n).prop_map(distribution),
            prop::collection::vec(-10.0f64..10.0, n),
            0.05f64..2.0,
        )
    })
}

proptest! {
    #[test]
    fn kl_is_nonnegative_and_zero_on_the_diagonal((p, _, _) in case(), seed in any::<u64>()) {
        prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let mut rng = rng_from_seed(seed);
        let other = distribution(p.iter().map(|_| rand::Rng::random_range(&mut rng, 0.01..1.0)).collect());
        prop_assert!(kl_divergence(&other, &p).unwrap() >= 0.0);
    }

    #[test]
    fn soft_value_is_bracketed_and_closed_form((p, q, eta) in case()) {
        let v = soft_value(&p, &q, eta).unwrap();
        let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean: f64 = p.iter().zip(&q).map(|(p, q)| p * q).sum();
        prop_assert!(v >= lo && v <= hi);
        prop_assert!(v >= mean - 1e-12);
        let exact = closed_form(&p, &q, eta);
        prop_assert!((v - exact).abs() <= 1e-9 * exact.abs().max(1.0));
    }

    #[test]
    fn soft_policy_maximizes_the_penalized_objective((p, q, eta) in case(), seed in any::<u64>()) {
        let star = soft_policy(&p, &q, eta).unwrap();
        let v = soft_value(&p, &q, eta).unwrap();
        let at_star = kl_penalized_objective(&star, &p, &q, eta).unwrap();
        prop_assert!((at_star - v).abs() <= 1e-9 * v.abs().max(1.0));
        let mut rng = rng_from_seed(seed);
        for _ in 0..20 {
            let perturbed = distribution(
                star.iter().map(|x| x * rand::Rng::random_range(&mut rng, 0.5..1.5)).collect(),
            );
            prop_assert!(kl_penalized_objective(&perturbed, &p, &q, eta).unwrap() <= at_star + 1e-9);
        }
    }

    #[test]
    fn soft_value_shifts_with_q((p, q, eta) in case(), c in -50.0f64..50.0) {
        let shifted: Vec<f64> = q.iter().map(|x| x + c).collect();
        let a = soft_value(&p, &q, eta).unwrap();
        let b = soft_value(&p, &shifted, eta).unwrap();
        prop_assert!((b - a - c).abs() <= 1e-9 * b.abs().max(1.0));
    }
}

fn states(values: &[f64]) -> Vec<State> {
    values.iter().map(|v| State::new(vec![*v])).collect()
}

#[test]
fn weighted_sampling_passes_chi_squared() {
    let w = [0.1, 0.2, 0.3, 0.4];
    let belief = ParticleBelief::weighted(states(&[0.0, 1.0, 2.0, 3.0]), w.to_vec()).unwrap();
    let mut rng = rng_from_seed(31);
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[belief.sample(&mut rng).values[0] as usize] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&w)
        .map(|(c, p)| {
            let e = p * n as f64;
            (*c as f64 - e).powi(2) / e
        })
        .sum();
    // 3 degrees of freedom, p = 0.001.
    assert!(chi2 < 16.27, "chi2 {chi2}, counts {counts:?}");
}

#[test]
fn systematic_resampling_rounds_each_weight() {
    let w = [0.1, 0.2, 0.3, 0.4];
    let belief = ParticleBelief::weighted(states(&[0.0, 1.0, 2.0, 3.0]), w.to_vec()).unwrap();
    for seed in 0..20 {
        let out = belief.resample(1000, &mut rng_from_seed(seed));
        assert!(out.is_uniform());
        for (i, p) in w.iter().enumerate() {
            let c = out.states().iter().filter(|s| s.values[0] as usize == i).count() as f64;
            assert!((c - 1000.0 * p).abs() <= 1.0, "state {i}: {c}");
        }
    }
}

const DRAWS: usize = 100_000;

fn frequency_ok(count: usize, p: f64) -> bool {
    let n = DRAWS as f64;
    (count as f64 - n * p).abs() <= 4.0 * (n * p * (1.0 - p)).sqrt()
}

fn tally(mode: HeuristicMode, ctx: &SubgoalContext<'_>, targets: &[Vec<f64>]) -> Vec<usize> {
    let mut rng = rng_from_seed(12);
    let mut counts = vec![0; targets.len()];
    for _ in 0..DRAWS {
        let g = sample_subgoal(mode, ctx, &mut rng).unwrap();
        counts[targets.iter().position(|t| *t == g).unwrap()] += 1;
    }
    counts
}

#[test]
fn subgoal_frequencies_follow_each_heuristic() {
    let bounds = Bounds::new(vec![0.0, 0.0], vec![4.0, 4.0]);
    let goals = vec![vec![4.0, 4.0]];
    let informative = vec![vec![1.0, 0.0], vec![3.0, 0.0], vec![0.0, 4.0]];
    let targets: Vec<Vec<f64>> = goals.iter().chain(&informative).cloned().collect();
    let current = [0.0, 0.0];
    // Two equally weighted cells out of 4x4 at resolution 1: entropy log 2 / log 16.
    let belief = ParticleBelief::uniform(vec![State::new(vec![0.5, 0.5]), State::new(vec![2.5, 2.5])]).unwrap();
    let ctx = SubgoalContext {
        current: &current,
        goals: &goals,
        informative: &informative,
        belief: &belief,
        goal_prob: 0.3,
        grid_resolution: 1.0,
        bounds: &bounds,
        entropy: None,
    };

    let c = tally(HeuristicMode::Uniform, &ctx, &targets);
    assert!(frequency_ok(c[0], 0.3), "{c:?}");
    for &k in &c[1..] {
        assert!(frequency_ok(k, 0.7 / 3.0), "{c:?}");
    }

    let inv: Vec<f64> = [1.0, 3.0, 4.0].iter().map(|d| 1.0 / (d + DISTANCE_EPS)).collect();
    let total: f64 = inv.iter().sum();
    let c = tally(HeuristicMode::Distance, &ctx, &targets);
    assert!(frequency_ok(c[0], 0.3), "{c:?}");
    for (k, w) in c[1..].iter().zip(&inv) {
        assert!(frequency_ok(*k, 0.7 * w / total), "{c:?}");
    }

    let h = normalized_entropy(&belief, &bounds, 1.0);
    assert!((h - 0.25).abs() < 1e-12);
    let c = tally(HeuristicMode::Entropy, &ctx, &targets);
    assert!(frequency_ok(c[0], 1.0 - h), "{c:?}");
    for (k, w) in c[1..].iter().zip(&inv) {
        assert!(frequency_ok(*k, h * w / total), "{c:?}");
    }
}

#[test]
fn epsilon_wrap_replaces_the_requested_fraction() {
    let world = Workspace::new(Bounds::new(vec![0.0, 0.0], vec![4.0, 4.0]), vec![]).unwrap();
    let fixed = vec![-1.0, -1.0];
    let mut rng = rng_from_seed(3);
    for eps in [0.0, 0.25, 1.0] {
        let free = (0..DRAWS)
            .filter(|_| epsilon_wrap(|_| Ok(fixed.clone()), eps, &world, &mut rng).unwrap() != fixed)
            .count();
        if eps == 0.0 || eps == 1.0 {
            assert_eq!(free, (eps * DRAWS as f64) as usize);
        } else {
            assert!(frequency_ok(free, eps), "{eps}: {free}");
        }
    }
}
