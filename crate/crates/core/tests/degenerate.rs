//! Degenerate programs on which careless pivoting cycles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semicoarse::lp::{solve_with, Arithmetic, LinearProgram, LpStatus, Pricing, Relation, SolverOptions, VarBound};

fn beale() -> (LinearProgram, f64) {
    let mut lp = LinearProgram::new();
    let x: Vec<usize> = [0.75, -150.0, 0.02, -6.0]
        .iter()
        .enumerate()
        .map(|(j, &c)| lp.add_var(format!("x{j}"), VarBound::NonNegative, c))
        .collect();
    lp.add_constraint("a", [(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)], Relation::Le, 0.0);
    lp.add_constraint("b", [(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)], Relation::Le, 0.0);
    lp.add_constraint("c", [(x[2], 1.0)], Relation::Le, 1.0);
    (lp, 0.05)
}

fn klee_minty(d: usize) -> (LinearProgram, f64) {
    let mut lp = LinearProgram::new();
    for j in 0..d {
        lp.add_var(format!("x{j}"), VarBound::NonNegative, 2f64.powi((d - 1 - j) as i32));
    }
    for i in 0..d {
        let mut coeffs: Vec<(usize, f64)> = (0..i).map(|j| (j, 2f64.powi((i - j + 1) as i32))).collect();
        coeffs.push((i, 1.0));
        lp.add_constraint(format!("r{i}"), coeffs, Relation::Le, 5f64.powi(i as i32 + 1));
    }
    (lp, 5f64.powi(d as i32))
}

/// Many rows through the origin plus a cap. No closed-form optimum; the
/// solver settings must agree with each other.
fn pinned(seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = rng.gen_range(3..6);
    let mut lp = LinearProgram::new();
    for j in 0..vars {
        lp.add_var(format!("x{j}"), VarBound::NonNegative, rng.gen_range(-1.0..1.0_f64).round() + 0.5);
    }
    for r in 0..rng.gen_range(4..9) {
        let coeffs: Vec<(usize, f64)> = (0..vars).map(|j| (j, rng.gen_range(-2i32..=2) as f64)).filter(|c| c.1 != 0.0).collect();
        if !coeffs.is_empty() {
            lp.add_constraint(format!("r{r}"), coeffs.clone(), Relation::Le, 0.0);
            // duplicate rows make the vertex at the origin more degenerate
            lp.add_constraint(format!("d{r}"), coeffs, Relation::Le, 0.0);
        }
    }
    lp.add_constraint("cap", (0..vars).map(|j| (j, 1.0)), Relation::Le, 1.0);
    lp
}

#[test]
fn degenerate_library_terminates() {
    let mut library: Vec<(LinearProgram, Option<f64>)> = Vec::new();
    let (b, v) = beale();
    library.push((b, Some(v)));
    for d in 2..=7 {
        let (k, v) = klee_minty(d);
        library.push((k, Some(v)));
    }
    for seed in 0..13 {
        library.push((pinned(seed), None));
    }
    assert_eq!(library.len(), 20);

    for (k, (lp, expected)) in library.iter().enumerate() {
        let mut values = Vec::new();
        for pricing in [Pricing::Bland, Pricing::Hybrid] {
            for arithmetic in [Arithmetic::Float, Arithmetic::Exact] {
                let opts = SolverOptions { pricing, arithmetic, ..SolverOptions::default() };
                let sol = solve_with(lp, &opts).unwrap_or_else(|e| panic!("instance {k}: {e}"));
                assert_eq!(sol.status, LpStatus::Optimal, "instance {k}");
                values.push(sol.value);
            }
        }
        let reference = expected.unwrap_or(values[0]);
        for v in values {
            assert!((v - reference).abs() <= 1e-9 * reference.abs().max(1.0), "instance {k}: {v} vs {reference}");
        }
    }
}
