use eotrack::eo::{self, update_pool, Bounds, EoParams, SearchAgent};
use proptest::prelude::*;

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn agents(fits: &[(f64, f64, f64)]) -> Vec<SearchAgent> {
    fits.iter().map(|&(x, y, f)| SearchAgent::with_fitness(vec![x, y], f)).collect()
}

proptest! {
    #[test]
    fn pool_keeps_the_four_best_seen(
        batches in prop::collection::vec(
            prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, 0.0..10.0f64), 4..10),
            1..6,
        )
    ) {
        let mut pool = None;
        let mut seen: Vec<f64> = Vec::new();
        for batch in &batches {
            let next = update_pool(pool.take(), &agents(batch)).unwrap();
            seen.extend(batch.iter().map(|b| b.2));
            seen.sort_by(f64::total_cmp);
            let members = next.members();
            prop_assert_eq!(members.len(), 4);
            let fits: Vec<f64> = members.iter().map(|m| m.fitness.unwrap()).collect();
            prop_assert!(fits.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(&fits[..], &seen[..4]);
            for j in 0..2 {
                let mean = members.iter().map(|m| m.position[j]).sum::<f64>() / 4.0;
                prop_assert!((next.average()[j] - mean).abs() < 1e-12);
            }
            pool = Some(next);
        }
    }

    #[test]
    fn optimizer_stays_in_bounds_and_best_never_worsens(
        seed in any::<u64>(),
        lo in -20.0..0.0f64,
        span in 0.5..30.0f64,
        n in 5usize..20,
        iters in 1usize..12,
    ) {
        let bounds = Bounds::uniform(2, lo, lo + span).unwrap();
        let params = EoParams { population_size: n, max_iterations: iters, rng_seed: Some(seed), ..EoParams::default() };
        let mut calls = 0;
        let res = eo::optimize(|p| { calls += 1; assert!(bounds.contains(p)); sphere(p) }, &params, &bounds, &[]).unwrap();
        prop_assert_eq!(calls, n * iters);
        prop_assert_eq!(res.evaluations, n * iters);
        prop_assert!(bounds.contains(&res.best_position));
        prop_assert!(res.history.windows(2).all(|w| w[1].1 <= w[0].1));
        prop_assert_eq!(res.history.last().unwrap().1, res.best_fitness);
        prop_assert!((sphere(&res.best_position) - res.best_fitness).abs() == 0.0);
    }

    #[test]
    fn update_agent_output_is_clamped(
        x in prop::collection::vec(-100.0..100.0f64, 3),
        eq in prop::collection::vec(-100.0..100.0f64, 3),
        lambda in prop::collection::vec(0.0..1.0f64, 3),
        r in prop::collection::vec(0.0..1.0f64, 3),
        t in 0.0..1.0f64,
        r1 in 0.0..1.0f64,
        r2 in 0.0..1.0f64,
    ) {
        let bounds = Bounds::uniform(3, -10.0, 10.0).unwrap();
        let f = eo::exponential_term(&lambda, t, 2.0, &r);
        let gr = eo::generation_rate(&eq, &x, &lambda, &f, 0.5, r1, r2);
        let moved = eo::update_agent(&SearchAgent::new(x), &eq, &lambda, &f, &gr, 1.0, &bounds);
        prop_assert!(bounds.contains(&moved.position));
        prop_assert!(moved.position.iter().all(|v| v.is_finite()));
        prop_assert!(moved.fitness.is_none());
    }
}

#[test]
fn same_seed_same_result() {
    let bounds = Bounds::uniform(2, -10.0, 10.0).unwrap();
    let params = EoParams {
        rng_seed: Some(99),
        population_size: 16,
        max_iterations: 20,
        ..EoParams::default()
    };
    let a = eo::optimize(sphere, &params, &bounds, &[]).unwrap();
    let b = eo::optimize(sphere, &params, &bounds, &[]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn warm_start_at_optimum_is_kept() {
    let bounds = Bounds::uniform(2, -10.0, 10.0).unwrap();
    let params = EoParams { rng_seed: Some(3), ..EoParams::default() };
    let res = eo::optimize(sphere, &params, &bounds, &[vec![0.0, 0.0]]).unwrap();
    assert_eq!(res.best_fitness, 0.0);
    assert_eq!(res.best_position, vec![0.0, 0.0]);
}
