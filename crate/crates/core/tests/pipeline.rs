use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lrpop::polyrep::{bernstein_instance, monomial_instance, rank_two_example};
use lrpop::{
    solve_block_sdp, solve_low_rank, BlockSdp, CpPoly, PipelineOptions, RunReport, SolveStatus,
};

fn sampled_min(f: &CpPoly, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let x: Vec<f64> = (0..f.n()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        best = best.min(f.eval(&x).unwrap());
    }
    best
}

#[test]
fn optimal_bounds_are_below_sampled_values() {
    let mut cases: Vec<(CpPoly, usize)> = (0..6)
        .map(|s| (monomial_instance(2 + s % 3, 2, 1 + s % 2, s as u64), 2))
        .collect();
    cases.push((rank_two_example(), 2));
    cases.push((bernstein_instance(6, 2, 2, 1.0, 1), 2));
    let total = cases.len();
    let mut checked = 0;
    for (f, k) in cases {
        let out = solve_low_rank(&f, &PipelineOptions::with_order(k)).unwrap();
        if out.result.status != SolveStatus::Optimal {
            continue;
        }
        let min = sampled_min(&f, 10_000, 7);
        assert!(
            out.lower_bound() <= min + 1e-6,
            "{} > {min}",
            out.lower_bound()
        );
        let (_, upper) = out.candidate.clone().unwrap();
        assert!(upper >= out.lower_bound() - 1e-6);
        checked += 1;
    }
    assert!(
        2 * checked >= total,
        "only {checked} of {total} solves were optimal"
    );
}

#[test]
fn example_bound_reaches_vertex_minimum() {
    // Multilinear, so the minimum over the box is attained at a vertex.
    let f = rank_two_example();
    let min = (0..32)
        .map(|m| {
            let x: Vec<f64> = (0..5)
                .map(|i| if m >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            f.eval(&x).unwrap()
        })
        .fold(f64::INFINITY, f64::min);
    let out = solve_low_rank(&f, &PipelineOptions::with_order(2)).unwrap();
    assert!(out.result.status.has_solution());
    assert!(
        (out.lower_bound() - min).abs() < 1e-4,
        "{} vs {min}",
        out.lower_bound()
    );
}

#[test]
fn bounds_increase_with_order() {
    for seed in 0..4u64 {
        let f = monomial_instance(2 + seed as usize % 2, 2, 1 + seed as usize % 2, 100 + seed);
        let k = 2;
        let lo = solve_low_rank(&f, &PipelineOptions::with_order(k)).unwrap();
        let hi = solve_low_rank(&f, &PipelineOptions::with_order(k + 1)).unwrap();
        assert!(lo.result.status.has_solution() && hi.result.status.has_solution());
        assert!(
            lo.lower_bound() <= hi.lower_bound() + 1e-6,
            "seed {seed}: {} > {}",
            lo.lower_bound(),
            hi.lower_bound()
        );
    }
}

#[test]
fn solves_are_deterministic() {
    let f = bernstein_instance(8, 2, 2, 1.0, 3);
    let opts = PipelineOptions::with_order(2);
    let a = solve_low_rank(&f, &opts).unwrap();
    let b = solve_low_rank(&f, &opts).unwrap();
    assert_eq!(a.result.status, b.result.status);
    assert!((a.lower_bound() - b.lower_bound()).abs() <= 1e-9);
}

#[test]
fn candidate_recovers_known_minimizer() {
    for n in [5, 10] {
        let f = bernstein_instance(n, 2, 2, 1.0, 11);
        let out = solve_low_rank(&f, &PipelineOptions::with_order(2)).unwrap();
        let (x, upper) = out.candidate.clone().expect("solution available");
        assert!(x.iter().all(|v| (v + 1.0).abs() <= 0.05), "{x:?}");
        assert!((upper - 2.0).abs() <= 0.02);
        assert!((out.lower_bound() - 2.0).abs() <= 1e-3);
    }
}

#[test]
fn partial_product_bounds_keep_the_value() {
    let f = bernstein_instance(10, 2, 2, 1.0, 2);
    let opts = PipelineOptions {
        t_bounds: true,
        ..PipelineOptions::with_order(2)
    };
    let out = solve_low_rank(&f, &opts).unwrap();
    assert_eq!(out.result.status, SolveStatus::Optimal);
    assert!(
        (out.lower_bound() - 2.0).abs() <= 1e-5,
        "{}",
        out.lower_bound()
    );
}

#[test]
fn strict_degree_needs_a_larger_order() {
    let f = monomial_instance(3, 2, 1, 4);
    let strict = PipelineOptions {
        strict_degree: true,
        ..PipelineOptions::with_order(1)
    };
    assert!(solve_low_rank(&f, &strict).is_err());
    let out = solve_low_rank(&f, &PipelineOptions { order: 2, ..strict }).unwrap();
    assert!(out.result.status.has_solution());
    assert!(out.complexity.within_bounds());
}

#[test]
fn block_sdp_survives_json() {
    let f = monomial_instance(3, 2, 2, 8);
    let out = solve_low_rank(&f, &PipelineOptions::with_order(2)).unwrap();
    let text = out.relaxation.sdp.to_json().unwrap();
    let back = BlockSdp::from_json(&text).unwrap();
    assert_eq!(back, out.relaxation.sdp);
    let again = solve_block_sdp(&back, &Default::default()).unwrap();
    assert_eq!(again.lower_bound, out.result.lower_bound);
}

#[test]
fn report_round_trip_is_byte_identical() {
    let f = bernstein_instance(6, 2, 2, 1.0, 5);
    let out = solve_low_rank(&f, &PipelineOptions::with_order(2)).unwrap();
    let report = RunReport::from_output(&out, Some(5));
    let text = report.to_json();
    let back = RunReport::from_json(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.to_json(), text);
}
