//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them).
//!
//! Expected values come from closed forms or independent enumeration
//! oracles computed inside this file, never from the code under test.

use mtsc_core::inner::{
    intersection_degeneracy_check, project_onto_intersection, AuxSizes,
};
use mtsc_core::instance::{dsbs_instance, DistortionMeasure, ProblemInstance};
use mtsc_core::lab::{brute_force_achievable, reverse_markov_check, LabCaps};
use mtsc_core::outer::default_directions;
use mtsc_core::prob::{xlog2, Alphabet, JointPmf};
use mtsc_core::region::{
    blahut_arimoto, convex_closure_frontier, region_from_triples, sandwich_check, BoundKind,
};
use mtsc_core::solver::{dirichlet_row, start_rng, SolverOptions};
use mtsc_core::sweep::trace_both;
use mtsc_core::Tolerances;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn h2(q: f64) -> f64 {
    -xlog2(q) - xlog2(1.0 - q)
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn opts(starts: usize) -> SolverOptions {
    SolverOptions {
        starts,
        ..SolverOptions::default()
    }
}

#[test]
fn criterion_1_slepian_wolf_collapse() {
    let t0 = Instant::now();
    let inst = dsbs_instance(0.25, 0.0, 0.0);
    let aux = AuxSizes::defaults_for(&inst);
    let sweep = [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    let both = trace_both(&inst, &sweep, &opts(12), aux).expect("trace");
    let expected = [h2(0.25), 1.0 + h2(0.25), h2(0.25)];
    let mut worst = 0.0f64;
    for (k, &want) in expected.iter().enumerate() {
        let inner = both.inner.entries()[k].support;
        let outer = both.outer.entries()[k].support;
        worst = worst.max((inner - want).abs()).max((outer - want).abs());
    }
    let elapsed = t0.elapsed();
    report(
        "1 (Slepian-Wolf collapse at zero distortion)",
        worst <= 1e-3 && elapsed.as_secs() < 60,
        &format!("worst deviation {worst:.2e} bits, {elapsed:.2?}"),
    );
}

fn random_instance(rng: &mut ChaCha8Rng, size: usize) -> ProblemInstance {
    let x = Alphabet::indexed("x", size).unwrap();
    let y = Alphabet::indexed("y", size).unwrap();
    let cells = size * size;
    let mut mass = dirichlet_row(rng, cells);
    let partial: f64 = mass[..cells - 1].iter().sum();
    mass[cells - 1] = 1.0 - partial;
    let source = JointPmf::new(vec![x.clone(), y.clone()], mass).unwrap();
    let rand_matrix = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..size)
            .map(|_| (0..size).map(|_| rng.gen::<f64>()).collect())
            .collect()
    };
    let d1 = DistortionMeasure::new(x.clone(), x.clone(), &rand_matrix(rng)).unwrap();
    let d2 = DistortionMeasure::new(y.clone(), y.clone(), &rand_matrix(rng)).unwrap();
    let mut inst = ProblemInstance {
        x_alphabet: x,
        y_alphabet: y,
        xhat_alphabet: inst_axis(&d1),
        yhat_alphabet: inst_axis(&d2),
        source,
        d1,
        d2,
        targets: (0.0, 0.0),
        solver: SolverOptions::default(),
    };
    let floor = inst.distortion_floor();
    let ceiling = inst.rate_zero_ceiling();
    let u1: f64 = rng.gen_range(0.1..0.9);
    let u2: f64 = rng.gen_range(0.1..0.9);
    inst.targets = (
        floor.0 + u1 * (ceiling.0 - floor.0),
        floor.1 + u2 * (ceiling.1 - floor.1),
    );
    inst
}

fn inst_axis(d: &DistortionMeasure) -> Alphabet {
    d.recon_alphabet().clone()
}

#[test]
fn criterion_2_sandwich_property() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let directions = default_directions();
    let mut worst_gap = f64::INFINITY;
    let mut worst_desc = String::new();
    let mut violations = 0usize;
    for idx in 0..20 {
        let size = if idx < 10 { 2 } else { 3 };
        let inst = random_instance(&mut rng, size);
        let aux = AuxSizes::defaults_for(&inst);
        let both = trace_both(&inst, &directions, &opts(12), aux).expect("trace");
        let sandwich = sandwich_check(&both.inner, &both.outer, &directions, 1e-3);
        for row in &sandwich.rows {
            if row.gap < worst_gap {
                worst_gap = row.gap;
                worst_desc = format!(
                    "instance {idx} ({size}x{size}, targets ({:.3}, {:.3})), mu = ({:.3}, {:.3}): outer {:.4} > inner {:.4}",
                    inst.targets.0, inst.targets.1, row.mu.0, row.mu.1,
                    row.outer_support, row.inner_support
                );
            }
            if !row.ok {
                violations += 1;
            }
        }
        println!(
            "  instance {idx:2} ({size}x{size}) targets ({:.3}, {:.3}): worst direction gap {:+.4} bits",
            inst.targets.0,
            inst.targets.1,
            sandwich.rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min)
        );
    }
    let elapsed = t0.elapsed();
    report(
        "2 (sandwich property across the corpus)",
        violations == 0 && elapsed.as_secs() < 600,
        &format!(
            "{violations} of 340 directions violated; worst gap {worst_gap:+.4} bits at {worst_desc}; {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_3_rate_distortion_anchors() {
    let t0 = Instant::now();
    let b = Alphabet::indexed("s", 2).unwrap();
    let p = JointPmf::uniform(vec![b.clone()]).unwrap();
    let d = DistortionMeasure::hamming(b);
    let r25 = blahut_arimoto(&p, &d, 0.25).unwrap();
    let r11 = blahut_arimoto(&p, &d, 0.11).unwrap();
    let dev25 = (r25 - (1.0 - h2(0.25))).abs().max((r25 - 0.188722).abs());
    let dev11 = (r11 - (1.0 - h2(0.11))).abs().max((r11 - 0.500083).abs());
    let elapsed = t0.elapsed();
    report(
        "3 (alternating-minimization R(D) anchors)",
        dev25 <= 1e-4 && dev11 <= 1e-4 && elapsed.as_secs() < 2,
        &format!("R(0.25) = {r25:.6}, R(0.11) = {r11:.6}, deviations {dev25:.2e}/{dev11:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_4_independent_sources_factorize() {
    let t0 = Instant::now();
    let mut inst = dsbs_instance(0.25, 0.11, 0.11);
    inst.source = JointPmf::uniform(inst.source.axes().to_vec()).unwrap();
    let aux = AuxSizes::defaults_for(&inst);
    let both = trace_both(&inst, &[(1.0, 1.0)], &opts(12), aux).expect("trace");
    let inner = both.inner.entries()[0].support;
    let outer = both.outer.entries()[0].support;
    let dev = (inner - 1.0).abs().max((outer - 1.0).abs());
    let elapsed = t0.elapsed();
    report(
        "4 (independent sources: sum rate splits into two R(D) terms)",
        dev <= 1e-2 && elapsed.as_secs() < 60,
        &format!("inner {inner:.4}, outer {outer:.4}, worst deviation {dev:.2e}, {elapsed:.2?}"),
    );
}

fn random_exact_chain(rng: &mut ChaCha8Rng, aligned: bool) -> JointPmf {
    let b = Alphabet::indexed("s", 2).unwrap();
    let (pz, px_given, py_given): (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) = if aligned {
        // cell masses sit on the 1/6 grid so blocklength-6 types can match
        let k = rng.gen_range(1..6u32) as f64;
        let pz = vec![k / 6.0, 1.0 - k / 6.0];
        (pz, vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ])
    } else {
        (
            dirichlet_row(rng, 2),
            (0..2).map(|_| dirichlet_row(rng, 2)).collect(),
            (0..2).map(|_| dirichlet_row(rng, 2)).collect(),
        )
    };
    let mut mass = vec![0.0; 8];
    for z in 0..2 {
        for x in 0..2 {
            for y in 0..2 {
                mass[x * 4 + z * 2 + y] = pz[z] * px_given[z][x] * py_given[z][y];
            }
        }
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    let partial: f64 = mass[..7].iter().sum();
    mass[7] = 1.0 - partial;
    JointPmf::new(vec![b.clone(), b.clone(), b], mass).unwrap()
}

#[test]
fn criterion_5_reverse_markov_suite() {
    let t0 = Instant::now();
    let caps = LabCaps::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut witnessed = 0u32;
    let mut checked = 0u32;
    for i in 0..1000 {
        let aligned = i % 7 == 0;
        let p = random_exact_chain(&mut rng, aligned);
        for eps in [0.1, 0.2] {
            let rep = reverse_markov_check(&p, 6, eps, &caps).expect("within caps");
            checked += 1;
            assert!(
                rep.l1_to_markov < 1e-9,
                "exact chains project onto themselves"
            );
            if rep.condition_holds {
                witnessed += 1;
                if rep.conclusion_holds != Some(true) {
                    report(
                        "5 (reverse Markov suite)",
                        false,
                        &format!("chain {i} at eps {eps}: witnessed but l1 = {}", rep.l1_to_markov),
                    );
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    report(
        "5 (reverse Markov suite)",
        witnessed > 0 && elapsed.as_secs() < 300,
        &format!(
            "{witnessed} of {checked} runs witnessed the product condition, conclusion held in all of them, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_6_operational_outer_bound_check() {
    let t0 = Instant::now();
    let caps = LabCaps::default();
    let epsilon = 0.2;
    let inst = dsbs_instance(0.25, 0.0, 0.0);
    let aux = AuxSizes::defaults_for(&inst);
    let both = trace_both(&inst, &default_directions(), &opts(12), aux).expect("trace");
    let outer = both.outer;
    let mut achievable_ok = 0u32;
    let mut achievable_bad = Vec::new();
    let mut zero_rate_checked = false;
    for n in [1usize, 2] {
        for nr1 in 0..=2u32 {
            for nr2 in 0..=2u32 {
                let r1 = nr1 as f64 / n as f64;
                let r2 = nr2 as f64 / n as f64;
                let out =
                    brute_force_achievable(&inst, n, r1, r2, epsilon, 0, 0, &caps).expect("caps");
                assert!(out.exhaustive, "all searched spaces are tiny");
                match out.certificate {
                    Some(true) => {
                        if outer.contains_with_slack(r1, r2, epsilon) {
                            achievable_ok += 1;
                        } else {
                            achievable_bad.push(format!("n={n} R=({r1},{r2})"));
                        }
                    }
                    Some(false) => {
                        if r1 == 0.0 && r2 == 0.0 {
                            zero_rate_checked = true;
                            if outer.contains_with_slack(0.0, 0.0, epsilon) {
                                achievable_bad
                                    .push(format!("zero-rate point inside region at n={n}"));
                            }
                        }
                    }
                    None => unreachable!("exhaustive mode certifies"),
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    report(
        "6 (operational check of the outer bound at desk scale)",
        achievable_bad.is_empty() && zero_rate_checked && elapsed.as_secs() < 600,
        &format!(
            "{achievable_ok} achievable points inside the region, zero-rate point excluded, problems: {achievable_bad:?}, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_7_intersection_degeneracy() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let axes: Vec<Alphabet> = (0..4)
        .map(|i| Alphabet::indexed(&format!("a{i}"), 2).unwrap())
        .collect();
    // brute-force projection onto both constraint sets from random joints
    let mut constructed = 0u32;
    let mut worst_residual = 0.0f64;
    for _ in 0..40 {
        let mut mass = dirichlet_row(&mut rng, 16);
        let partial: f64 = mass[..15].iter().sum();
        mass[15] = 1.0 - partial;
        let q = JointPmf::new(axes.clone(), mass).unwrap();
        if let Some(member) = project_onto_intersection(&q, 1e-11, 6000).expect("projection") {
            let residual = intersection_degeneracy_check(&member, 1e-6)
                .expect("member satisfies both chains");
            worst_residual = worst_residual.max(residual);
            constructed += 1;
        }
    }
    // fully product joints pass exactly
    let mut worst_product = 0.0f64;
    for _ in 0..20 {
        let parts: Vec<Vec<f64>> = (0..4).map(|_| dirichlet_row(&mut rng, 2)).collect();
        let mut mass = vec![0.0; 16];
        for x in 0..2 {
            for y in 0..2 {
                for u in 0..2 {
                    for v in 0..2 {
                        mass[((x * 2 + y) * 2 + u) * 2 + v] =
                            parts[0][x] * parts[1][y] * parts[2][u] * parts[3][v];
                    }
                }
            }
        }
        let total: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|m| *m /= total);
        let q = JointPmf::new(axes.clone(), mass).unwrap();
        let residual = intersection_degeneracy_check(&q, 1e-6).expect("products are members");
        worst_product = worst_product.max(residual);
    }
    let elapsed = t0.elapsed();
    report(
        "7 (intersection of the two candidate classes factorizes)",
        constructed >= 10 && worst_residual <= 1e-9 && worst_product <= 1e-12
            && elapsed.as_secs() < 60,
        &format!(
            "{constructed}/40 projections converged, worst residual {worst_residual:.2e}, products {worst_product:.2e}, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_8_invariant_suites() {
    let t0 = Instant::now();

    // probability-core invariants on 1000 seeded joints each
    let mut worst_chain = 0.0f64;
    let mut worst_idem = 0.0f64;
    let mut worst_gap = 0.0f64;
    for seed in 0..1000u64 {
        let mut rng = start_rng(1000 + seed, 0);
        let sizes = [
            rng.gen_range(2..4usize),
            rng.gen_range(2..4usize),
            rng.gen_range(2..4usize),
        ];
        let axes: Vec<Alphabet> = sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| Alphabet::indexed(&format!("a{i}"), s).unwrap())
            .collect();
        let cells: usize = sizes.iter().product();
        let mut mass = dirichlet_row(&mut rng, cells);
        let partial: f64 = mass[..cells - 1].iter().sum();
        mass[cells - 1] = 1.0 - partial;
        let p = JointPmf::new(axes, mass).unwrap();
        let chain = (p.entropy(&[0, 1, 2]).unwrap()
            - p.entropy(&[0]).unwrap()
            - p.conditional_entropy(&[1, 2], &[0]).unwrap())
        .abs();
        worst_chain = worst_chain.max(chain);
        let once = p.markov_projection(&[0], &[1], &[2]).unwrap();
        let twice = once.markov_projection(&[0], &[1], &[2]).unwrap();
        worst_idem = worst_idem.max(once.l1_distance(&twice).unwrap());
        worst_gap = worst_gap.max(once.markov_gap(&[0], &[2], &[1]).unwrap());
    }

    // region invariants: frontier convexity and R(D) monotonicity
    let mut convex_ok = true;
    for seed in 0..1000u64 {
        let mut rng = start_rng(5000 + seed, 0);
        let triples: Vec<_> = (0..rng.gen_range(2..8usize))
            .map(|k| {
                let a = rng.gen::<f64>();
                let b = rng.gen::<f64>();
                let c = a + b + rng.gen::<f64>();
                (
                    mtsc_core::outer::RateTriple {
                        r1_floor: a,
                        r2_floor: b,
                        sum_floor: c,
                    },
                    format!("t{k}"),
                )
            })
            .collect();
        let region = region_from_triples(BoundKind::Outer, &triples).unwrap();
        let hull = convex_closure_frontier(&region);
        let mut last = f64::NEG_INFINITY;
        for w in hull.windows(2) {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            if slope < last - 1e-9 {
                convex_ok = false;
            }
            last = slope;
        }
        // every frontier point passes the region's own membership test
        for &(r1, r2) in region.frontier() {
            assert!(region.contains_with_slack(r1, r2, 1e-12));
        }
    }
    let mut mono_ok = true;
    for seed in 0..1000u64 {
        let mut rng = start_rng(9000 + seed, 0);
        let size = rng.gen_range(2..4usize);
        let a = Alphabet::indexed("s", size).unwrap();
        let mut mass = dirichlet_row(&mut rng, size);
        let partial: f64 = mass[..size - 1].iter().sum();
        mass[size - 1] = 1.0 - partial;
        let p = JointPmf::new(vec![a.clone()], mass).unwrap();
        let d = DistortionMeasure::hamming(a);
        let lo: f64 = rng.gen_range(0.0..0.4);
        let hi: f64 = lo + rng.gen_range(0.0..0.4);
        let r_lo = blahut_arimoto(&p, &d, lo).unwrap();
        let r_hi = blahut_arimoto(&p, &d, hi).unwrap();
        if r_hi > r_lo + 1e-6 {
            mono_ok = false;
        }
    }

    let tol = Tolerances::default();
    let elapsed = t0.elapsed();
    report(
        "8 (invariant suites: information identities and region geometry)",
        worst_chain < 1e-9
            && worst_idem < 1e-12
            && worst_gap <= tol.normalization_tol
            && convex_ok
            && mono_ok
            && elapsed.as_secs() < 120,
        &format!(
            "chain rule {worst_chain:.1e}, idempotence {worst_idem:.1e}, projected gap {worst_gap:.1e}, hulls convex: {convex_ok}, R(D) monotone: {mono_ok}, {elapsed:.2?}"
        ),
    );
}
