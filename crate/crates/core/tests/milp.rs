mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gridloop::building::{balance_residuals, solve_building};

#[test]
fn building_plans_balance_and_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for eta in [0.0, 0.25, 0.75, 1.0] {
        for _ in 0..15 {
            let p = common::random_problem(&mut rng, eta);
            let s = solve_building(&p).unwrap();
            let best = common::enumerate_building(&p).unwrap();
            let gap = (s.evaluation.objective_value - best).abs() / best.abs().max(1.0);
            assert!(gap <= 1e-9, "eta {eta}: {} vs {best}", s.evaluation.objective_value);
            let (heat, electric) = balance_residuals(&p, &s);
            assert!(heat < 1e-6 && electric < 1e-6);
            assert!(s.decision.installed().filter(|d| d.category.is_heat_supply()).count() == 1);
        }
    }
}
