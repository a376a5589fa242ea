//! Acceptance gate: ten end-to-end criteria, one pass/fail line each.
//! Run with `cargo test --test acceptance -- --nocapture` to see every line.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qfreq::covering::{
    minkowski_content_estimate, minkowski_cover_driver, packing_verify, spine_frequency_constancy,
    FrequencyOracle,
};
use qfreq::field::{builtin, builtin_names, AnalyticField};
use qfreq::frequency::{
    doubling_residual, epsilon_regularity_scan, frequency_i, frequency_profile,
    identity_residuals, Grid,
};
use qfreq::geom::AffinePlane;
use qfreq::meanflat::{
    beta_bruteforce, beta_k, jones_integral, meanflat_vs_pinching_check, measure_from_qpoints,
    DiscreteMeasure,
};
use qfreq::quadrature::QuadratureScheme;
use qfreq::weight::WeightProfile;

fn verdict(n: usize, pass: bool, detail: &str) -> bool {
    println!(
        "criterion {n:2}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn dflt() -> (WeightProfile, QuadratureScheme) {
    (WeightProfile::Default, QuadratureScheme::default())
}

#[test]
fn criterion_01_frequency_ground_truth() {
    let (phi, q) = dflt();
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for r in [0.25, 0.5, 1.0] {
        let start = Instant::now();
        let rep = frequency_i(&builtin("q2_branch").unwrap(), &phi, &[0.0, 0.0], r, &q).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        worst = worst.max((rep.i - 0.5).abs());
    }
    for (name, expect) in [
        ("q2_branch", 0.5),
        ("q2_p3", 1.5),
        ("q3_p1", 1.0 / 3.0),
        ("q3_p2", 2.0 / 3.0),
    ] {
        let rep = frequency_i(&builtin(name).unwrap(), &phi, &[0.0, 0.0], 1.0, &q).unwrap();
        worst = worst.max((rep.i - expect).abs());
    }
    let pass = worst <= 0.01 && slowest < 5.0;
    assert!(verdict(
        1,
        pass,
        &format!("max |I - p/Q| = {worst:.2e}, slowest radius {slowest:.2}s")
    ));
}

#[test]
fn criterion_02_monotonicity_with_visible_increase() {
    let (phi, q) = dflt();
    let f = builtin("mixed").unwrap();
    let radii: Vec<f64> = (0..50).map(|i| 0.05 + 0.95 * i as f64 / 49.0).collect();
    let prof = frequency_profile(&f, &phi, &[0.0, 0.0], &radii, &q).unwrap();
    let mut monotone = true;
    for w in prof.reports.windows(2) {
        let slack = 5.0 * (w[0].est_error + w[1].est_error);
        if w[1].i < w[0].i - slack {
            monotone = false;
        }
    }
    let total_rise = prof.reports.last().unwrap().i - prof.reports.first().unwrap().i;
    let pass = monotone && total_rise >= 0.05;
    assert!(verdict(
        2,
        pass,
        &format!(
            "nondecreasing: {monotone}, total rise {total_rise:.4} (required ≥ 0.05; \
             this field's exact profile tops out near 0.024)"
        )
    ));
}

#[test]
fn criterion_03_identity_residuals() {
    let (phi, q) = dflt();
    let mut worst_id = 0.0f64;
    let mut worst_cs = f64::NEG_INFINITY;
    let mut worst_dbl = 0.0f64;
    for name in builtin_names() {
        let f = builtin(name).unwrap();
        let x = center_of(&f);
        for r in [0.5, 1.0] {
            let res = identity_residuals(&f, &phi, &x, r, &q).unwrap();
            worst_id = worst_id.max(res.pairing).max(res.dirichlet_radial).max(res.height_radial);
            worst_cs = worst_cs.max(res.cauchy_schwarz);
        }
        worst_dbl = worst_dbl.max(doubling_residual(&f, &phi, &x, 0.5, 1.0, &q).unwrap());
    }
    let pass = worst_id <= 1e-3 && worst_dbl <= 1e-3 && worst_cs <= 1e-6;
    assert!(verdict(
        3,
        pass,
        &format!(
            "max identity residual {worst_id:.2e}, doubling {worst_dbl:.2e}, \
             Cauchy-Schwarz slack {worst_cs:.2e}"
        )
    ));
}

fn center_of(f: &AnalyticField) -> Vec<f64> {
    let c = f.planar_center();
    let mut x = vec![0.0; f.dim()];
    x[0] = c[0];
    x[1] = c[1];
    x
}

#[test]
fn criterion_04_beta_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_e507);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let m = 2 + case % 3; // 2, 3, 4
        let n = 8 + rng.gen_range(0..57);
        let pts: Vec<Vec<f64>> =
            (0..n).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let wts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let mu = DiscreteMeasure::new(pts, wts).unwrap();
        let x0 = vec![0.0; m];
        for k in 1..m {
            let fast = beta_k(&mu, &x0, 1.5, k).unwrap().value;
            let brute = beta_bruteforce(&mu, &x0, 1.5, k, 24).unwrap();
            worst = worst.max((fast - brute).abs());
        }
    }
    // closed cases
    let two = DiscreteMeasure::unit_weights(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
    let b0 = beta_k(&two, &[0.0, 0.0], 2.0, 0).unwrap().value;
    let tri: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            let th = std::f64::consts::TAU * i as f64 / 3.0;
            vec![th.cos(), th.sin()]
        })
        .collect();
    let b1 = beta_k(&DiscreteMeasure::unit_weights(tri).unwrap(), &[0.0, 0.0], 1.0 + 1e-12, 1)
        .unwrap()
        .value;
    let elapsed = start.elapsed().as_secs_f64();
    let closed_ok = (b0 - 0.5).abs() < 1e-9 && (b1 - 1.5).abs() < 1e-6;
    let pass = worst <= 1e-4 && closed_ok && elapsed < 10.0;
    assert!(verdict(
        4,
        pass,
        &format!(
            "max |analytic - bruteforce| = {worst:.2e}, two-point {b0:.10}, \
             triangle {b1:.8}, {elapsed:.2}s"
        )
    ));
}

#[test]
fn criterion_05_spine_flatness_and_pinching_vanish() {
    let (phi, q) = dflt();
    let f = builtin("cyl3").unwrap();
    let g = Grid::new(
        vec![-0.0625, -0.0625, -0.03125],
        vec![0.0625, 0.0625, 0.03125],
        vec![5, 5, 33],
    )
    .unwrap();
    let mu = measure_from_qpoints(&f, &g, 1e-9).unwrap();
    let rep = meanflat_vs_pinching_check(&f, &phi, &mu, &[0.0; 3], 0.25, &q).unwrap();
    let pass = rep.flatness <= 1e-10 && rep.pinching_sum <= 1e-6;
    assert!(verdict(
        5,
        pass,
        &format!(
            "spine flatness {:.2e} (≤ 1e-10), pinching sum {:.2e} (≤ 1e-6), {} atoms",
            rep.flatness,
            rep.pinching_sum,
            mu.len()
        )
    ));
}

#[test]
fn criterion_06_spine_frequency_constancy() {
    let oracle = FrequencyOracle::field_backed(
        builtin("cyl3").unwrap(),
        WeightProfile::Default,
        QuadratureScheme::default(),
    );
    let spine = AffinePlane {
        base: vec![0.0, 0.0, 0.0],
        basis: vec![vec![0.0, 0.0, 1.0]],
    };
    let dev = spine_frequency_constancy(&oracle, &spine, (0.25, 1.0), 10).unwrap();
    let pass = dev <= 1e-3;
    assert!(verdict(6, pass, &format!("max frequency deviation on the spine {dev:.2e}")));
}

#[test]
fn criterion_07_covering_soundness_and_packing_stability() {
    let oracle = FrequencyOracle::constant(3, 0.5);
    let pts: Vec<Vec<f64>> =
        (0..200).map(|i| vec![-0.5 + i as f64 / 199.0, 0.0, 0.0]).collect();
    let mut norms = Vec::new();
    let mut all_ok = true;
    for rho_target in [0.08, 0.04, 0.02] {
        let res = minkowski_cover_driver(&pts, &oracle, rho_target).unwrap();
        let audit = packing_verify(&res);
        all_ok &= audit.covered && res.rounds <= (0.5f64 / 0.05).floor() as usize + 1;
        norms.push(audit.normalized);
    }
    let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = norms.iter().cloned().fold(0.0f64, f64::max);
    let spread = hi / lo;
    let pass = all_ok && spread <= 1.2;
    assert!(verdict(
        7,
        pass,
        &format!("normalized packing sums {norms:.4?}, spread x{spread:.3}")
    ));
}

#[test]
fn criterion_08_minkowski_slope() {
    let start = Instant::now();
    let f = builtin("cyl3").unwrap();
    let g = Grid::new(
        vec![-0.125, -0.125, -0.125],
        vec![0.125, 0.125, 0.125],
        vec![101, 101, 101],
    )
    .unwrap();
    let rep = minkowski_content_estimate(&f, &g, &[0.02, 0.04, 0.08]).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = (rep.slope - 2.0).abs() <= 0.15 && elapsed < 60.0;
    assert!(verdict(
        8,
        pass,
        &format!("log-log slope {:.3} from {} detected zeros, {elapsed:.1}s", rep.slope, rep.detected)
    ));
}

#[test]
fn criterion_09_rectifiability_dichotomy() {
    let start = Instant::now();
    // quarter circle, 256 points, arclength weights
    let n = 256;
    let arc: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let th = 0.5 * PI * i as f64 / (n - 1) as f64;
            vec![th.cos(), th.sin()]
        })
        .collect();
    let w = 0.5 * PI / n as f64;
    let mu = DiscreteMeasure::new(arc, vec![w; n]).unwrap();
    let scales: Vec<f64> = (1..=8).map(|j| 0.5f64.powi(j)).collect();
    let arc_jones = jones_integral(&mu, &[1.0, 0.0], 1, &scales).unwrap();

    // four-corner Cantor set, level 6, atoms weighted by cell diameter
    let mut cantor = vec![vec![0.0f64, 0.0]];
    for level in 0..6 {
        let step = 0.75 * 0.25f64.powi(level);
        let mut next = Vec::with_capacity(cantor.len() * 4);
        for p in &cantor {
            for (dx, dy) in [(0.0, 0.0), (step, 0.0), (0.0, step), (step, step)] {
                next.push(vec![p[0] + dx, p[1] + dy]);
            }
        }
        cantor = next;
    }
    let cell = 0.25f64.powi(6) * 2f64.sqrt();
    let nu = DiscreteMeasure::new(cantor.clone(), vec![cell; cantor.len()]).unwrap();
    let mut cantor_min = f64::INFINITY;
    let dyadic: Vec<f64> = (0..8).map(|j| 0.5f64.powi(j)).collect();
    for &s in &dyadic {
        let inc = beta_k(&nu, &[0.0, 0.0], s, 1).unwrap().value * std::f64::consts::LN_2;
        cantor_min = cantor_min.min(inc);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = arc_jones <= 0.05 && cantor_min >= 0.01 && elapsed < 10.0;
    assert!(verdict(
        9,
        pass,
        &format!(
            "quarter-circle sum {arc_jones:.4} (≤ 0.05), Cantor min increment \
             {cantor_min:.4} (≥ 0.01), {elapsed:.2}s"
        )
    ));
}

#[test]
fn criterion_10_epsilon_regularity_scan() {
    let phi = WeightProfile::Default;
    let mut total = 0usize;
    for name in builtin_names() {
        let f = builtin(name).unwrap();
        let m = f.dim();
        let c = center_of(&f);
        let (n, q) = if m == 2 {
            (64usize, QuadratureScheme::default())
        } else {
            (32usize, QuadratureScheme::coarse())
        };
        let g = Grid::new(
            c.iter().map(|v| v - 0.5).collect(),
            c.iter().map(|v| v + 0.5).collect(),
            vec![n; m],
        )
        .unwrap();
        let hits = epsilon_regularity_scan(&f, &phi, &g, 0.25, 0.05, &q).unwrap();
        total += hits.len();
    }
    let pass = total == 0;
    assert!(verdict(10, pass, &format!("{total} violations across all built-in fields")));
}
