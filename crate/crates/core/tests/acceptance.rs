//! Acceptance gate: one PASS/FAIL line per criterion, run in sequence so that
//! the reported runtimes are not inflated by other tests.

mod common;

use std::collections::HashSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{map11, oracle_distance, random_elements, z0};
use modsym::cusps::{choose_truncation, cusp_classes};
use modsym::growth::{
    explicit_constants, fit_log_bound, scan, random_word, seeded_rng, verify_lemma2, GrowthFit, GrowthRecord,
};
use modsym::hyperbolic::{distance, distance_gamma_i, mobius};
use modsym::reduction::{geodesic_in_truncation, reduce};
use modsym::series::{builtin_level11, CuspFormSeries, DEFAULT_ORDER};
use modsym::symbols::{build_symbol_map, direct_range, fit_period_lattice, modsym_direct, modsym_word};
use modsym::words::{psl2_index, GeneratorTable};
use modsym::{GroupElement, PointH};
use num_bigint::BigInt;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// d(i, g i) <= 2 log ||g|| + 3 log 2 on random elements of PSL2(Z).
fn distance_inequality() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for g in random_elements(1, 1_000_000, 10_000, 101) {
        let norm: f64 = g.norm().to_string().parse().unwrap();
        let rhs = 2.0 * norm.ln() + 3.0 * 2f64.ln();
        let gap = distance_gamma_i(&g) - rhs;
        worst = worst.max(gap);
        if gap > 1e-9 {
            violations += 1;
        }
    }
    check(violations == 0, format!("violations {violations}, max lhs - rhs {worst:.3e}"))
}

fn metric_cross_check() -> Outcome {
    let mut rng = seeded_rng(102);
    let mut point = || PointH::new(rng.gen_range(-10.0..10.0), rng.gen_range(-5.0f64..3.0).exp()).unwrap();
    let mut max_rel = 0.0f64;
    for _ in 0..10_000 {
        let (z, w) = (point(), point());
        let o = oracle_distance(z, w);
        max_rel = max_rel.max((distance(z, w) - o).abs() / o);
    }
    check(max_rel < 1e-10, format!("max relative error {max_rel:.3e}"))
}

/// N prod (1 + 1/p) by trial division.
fn index_oracle(n: u64) -> u64 {
    let (mut num, mut den, mut m, mut p) = (n, 1, n, 2);
    while m > 1 {
        if m % p == 0 {
            num *= p + 1;
            den *= p;
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    num / den
}

fn word_round_trip() -> Outcome {
    let table = GeneratorTable::new(11).unwrap();
    let failures = random_elements(11, 10_000, 1000, 103)
        .iter()
        .filter(|g| table.evaluate(&table.rewrite(g).unwrap()) != **g)
        .count();
    let bad_index: Vec<u64> = (1..=100)
        .filter(|&n| {
            let t = GeneratorTable::new(n).unwrap();
            t.index() as u64 != index_oracle(n) || psl2_index(n) != index_oracle(n)
        })
        .collect();
    check(
        failures == 0 && bad_index.is_empty(),
        format!("round-trip failures {failures}, index mismatches {bad_index:?}"),
    )
}

fn parabolic_vanishing() -> Outcome {
    let f = builtin_level11(DEFAULT_ORDER);
    let range = BigInt::from(direct_range(&f, 1e-10));
    let classes = cusp_classes(11);
    let mut rng = seeded_rng(104);
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 100 {
        let g = random_elements(11, 500, 1, rng.gen()).remove(0);
        let cls = &classes[rng.gen_range(0..classes.len())];
        let k = rng.gen_range(1..=5) * if rng.gen() { 1 } else { -1 };
        let p = cls.p_stab.pow(k).conjugate_by(&g);
        if p.c() > &range {
            continue;
        }
        worst = worst.max(modsym_direct(&p, &f, 1e-10).unwrap().norm());
        tested += 1;
    }
    check(worst < 1e-6, format!("{tested} parabolics, max |<p,f>| {worst:.3e}, c range {range}"))
}

fn evaluation_consistency() -> Outcome {
    let f = builtin_level11(DEFAULT_ORDER);
    let map = map11();
    let mut worst = 0.0f64;
    for g in random_elements(11, 200, 200, 105) {
        let d = modsym_direct(&g, &f, 1e-10).unwrap();
        worst = worst.max((modsym_word(&g, map).unwrap() - d).norm());
    }
    check(worst < 1e-6, format!("max |word - direct| {worst:.3e}"))
}

fn reduction_postconditions() -> Outcome {
    let map = map11();
    let trunc = choose_truncation(11, z0()).unwrap();
    let (mut increase, mut outside, mut identity, mut drift) = (0, 0, 0, 0.0f64);
    let mut max_steps = 0;
    for g in random_elements(11, 10_000, 1000, 106) {
        let r = reduce(&g, &trunc, z0()).unwrap();
        max_steps = max_steps.max(r.steps);
        if r.final_distance() > r.initial_distance() + 1e-9 {
            increase += 1;
        }
        if !geodesic_in_truncation(z0(), mobius(&r.gamma_s, z0()), &trunc).unwrap() {
            outside += 1;
        }
        let replay = r.parabolics.iter().fold(g.clone(), |acc, p| p * &acc);
        if replay != r.gamma_s {
            identity += 1;
        }
        drift = drift.max((modsym_word(&r.gamma_s, map).unwrap() - modsym_word(&g, map).unwrap()).norm());
    }
    check(
        increase == 0 && outside == 0 && identity == 0 && drift < 1e-6,
        format!(
            "distance increases {increase}, geodesics leaving H_T {outside}, identity failures {identity}, \
             max |psi drift| {drift:.3e}, max steps {max_steps}"
        ),
    )
}

/// Growth records for random words in the level 11 generators; `exclude`
/// keeps the sample disjoint from an earlier one.
fn word_sample(max_len: usize, size: usize, seed: u64, exclude: &HashSet<GroupElement>) -> Vec<GroupElement> {
    let table = map11().table();
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let g = table.evaluate(&random_word(table, max_len, &mut rng));
        if !exclude.contains(&g) {
            out.push(g);
        }
    }
    out
}

fn growth_records(sample: &[GroupElement]) -> Vec<GrowthRecord> {
    let trunc = choose_truncation(11, z0()).unwrap();
    scan(sample, map11(), &trunc, z0()).into_iter().map(|r| r.unwrap()).collect()
}

struct GrowthSamples {
    fit30: GrowthFit,
    records: Vec<GrowthRecord>,
}

fn holdout_bound(samples: &mut Option<GrowthSamples>) -> Outcome {
    let fit_sample = word_sample(30, 500, 107, &HashSet::new());
    let seen: HashSet<GroupElement> = fit_sample.iter().cloned().collect();
    let holdout_sample = word_sample(30, 500, 108, &seen);
    let long_sample = word_sample(60, 500, 109, &HashSet::new());
    let fit_rec = growth_records(&fit_sample);
    let holdout = growth_records(&holdout_sample);
    let long_rec = growth_records(&long_sample);
    let fit30 = fit_log_bound(&fit_rec);
    let fit60 = fit_log_bound(&long_rec);
    let raw = fit30.violations(&holdout, 1.0, 0.0);
    let violations = fit30.violations(&holdout, 1.05, 1e-6);
    let ratio = fit60.a / fit30.a;
    let worst = holdout
        .iter()
        .filter(|r| r.log_norm > 0.0)
        .map(|r| (r.abs_psi - fit30.b) / r.log_norm)
        .fold(0.0, f64::max);
    let mut records = fit_rec;
    records.extend(holdout);
    records.extend(long_rec);
    *samples = Some(GrowthSamples { fit30, records });
    check(
        violations == 0 && ratio < 1.5,
        format!(
            "A {:.6} B {:.6}, holdout violations {violations} (raw {raw}, largest holdout ratio {worst:.6}), \
             A60 {:.6}, A60/A30 {ratio:.4}",
            fit30.a, fit30.b, fit60.a
        ),
    )
}

fn explicit_bound(samples: &Option<GrowthSamples>) -> Outcome {
    let table1 = Arc::new(GeneratorTable::new(1).unwrap());
    let map1 = build_symbol_map(table1.clone(), &CuspFormSeries::zero(1, 10), 1e-10).unwrap();
    let c1 = explicit_constants(&table1, &choose_truncation(1, z0()).unwrap(), z0(), &map1).unwrap();
    let map = map11();
    let c11 = explicit_constants(map.table(), &choose_truncation(11, z0()).unwrap(), z0(), map).unwrap();
    let Some(s) = samples else {
        return check(false, "growth samples unavailable".into());
    };
    let rep = verify_lemma2(&s.records, &c11);
    check(
        c1.r_lower > 0.0 && c11.r_lower > 0.0 && rep.violations == 0,
        format!(
            "N=1: R {:.4} |S| {} r_lower {:.4e}; N=11: R {:.4} |S| {} r_lower {:.4e} C_S {:.4}; \
             {} records, violations {}, min slack {:.3e} (fitted A {:.4})",
            c1.radius,
            c1.ball_gens.len(),
            c1.r_lower,
            c11.radius,
            c11.ball_gens.len(),
            c11.r_lower,
            c11.c_s,
            rep.checked,
            rep.violations,
            rep.min_slack,
            s.fit30.a
        ),
    )
}

fn period_lattice() -> Outcome {
    match fit_period_lattice(map11().values(), 1e-5, 20) {
        Some(lat) => check(
            lat.max_residual < 1e-5,
            format!(
                "omega1 {:.8} omega2 {:.8}, max residual {:.3e}",
                lat.omega1, lat.omega2, lat.max_residual
            ),
        ),
        None => check(false, "no rank-2 lattice within coefficient bound 20".into()),
    }
}

fn main() {
    let mut samples = None;
    let criteria: Vec<(u32, &str, Duration, Box<dyn FnMut() -> Outcome + '_>)> = vec![
        (1, "distance inequality", Duration::from_secs(10), Box::new(distance_inequality)),
        (2, "metric cross-check", Duration::from_secs(5), Box::new(metric_cross_check)),
        (3, "word round-trip and index", Duration::from_secs(30), Box::new(word_round_trip)),
        (4, "parabolic vanishing", Duration::from_secs(60), Box::new(parabolic_vanishing)),
        (5, "evaluation consistency", Duration::from_secs(60), Box::new(evaluation_consistency)),
        (6, "reduction postconditions", Duration::from_secs(120), Box::new(reduction_postconditions)),
    ];
    let mut failed = 0;
    let mut report = |k: u32, name: &str, limit: Duration, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= limit;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {k} [{name}]: {} ({}; {:.2}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    };
    for (k, name, limit, mut run) in criteria {
        report(k, name, limit, &mut *run);
    }
    report(7, "log growth holdout", Duration::from_secs(180), &mut || holdout_bound(&mut samples));
    report(8, "explicit constants", Duration::from_secs(120), &mut || explicit_bound(&samples));
    report(9, "period lattice", Duration::from_secs(10), &mut period_lattice);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
