//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances are fixed; failures are reported, not hidden.

use std::process::ExitCode;
use std::time::Instant;

use brocot_cli::{report, ReportOptions};
use brocot::brocot_sums::{
    bounds_report, decomposition_check, enumerate_a, r0_sum, sigma_f, sigma_q, unit_fraction_sum, ExactSum, Mode,
    MomentQuery, PartitionParams, SampleValue,
};
use brocot::continuants::continuant;
use brocot::stern_brocot::{brocot_fractions, TraversalConfig};
use brocot::zeta_constants::{constants_for, totient_sum_oracle, zeta};
use num_bigint::BigUint;
use num_traits::{One, Pow};
use serde_json::Value;

struct Gate {
    failed: Vec<&'static str>,
}

impl Gate {
    fn record(&mut self, id: &'static str, pass: bool, detail: String) {
        println!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn exact_one(v: &SampleValue) -> bool {
    matches!(v, SampleValue::Exact(r) if r.is_one())
}

fn c1_exact_unity(g: &mut Gate) {
    let t = Instant::now();
    let bad: Vec<u32> = (1..=20)
        .filter(|&n| !exact_one(&sigma_f(&MomentQuery::new(1.0, n, Mode::Exact)).unwrap().value))
        .collect();
    let secs = t.elapsed().as_secs_f64();
    g.record(
        "C1 exact unity",
        bad.is_empty() && secs < 10.0,
        format!("sigma_1(F_n) = 1 for n in 1..=20, failures {bad:?}, {secs:.2} s (limit 10 s)"),
    );
}

fn c2_unit_fractions(g: &mut Gate) {
    let bad: Vec<u32> = (2..=20).filter(|&n| !unit_fraction_sum(n, false).unwrap().is_one()).collect();
    g.record(
        "C2 unit-fraction identity",
        bad.is_empty(),
        format!("sum over A_n of 1/(q q_- q_+) = 1 for n in 2..=20, failures {bad:?}"),
    );
}

fn c3_oracle_equivalence(g: &mut Gate) {
    let mut bad = Vec::new();
    for n in 2..=16u32 {
        let mut tree: Vec<u64> = brocot_fractions(n, false).unwrap().iter().map(|f| f.den()).collect();
        let mut cf = Vec::new();
        let mut direct = ExactSum::new();
        for a in enumerate_a(n, false).unwrap() {
            let q: BigUint = continuant(&a);
            direct.add_recip(&Pow::pow(&q, 4u32));
            cf.push(u64::try_from(&q).unwrap());
        }
        tree.sort_unstable();
        cf.sort_unstable();
        let traversal = sigma_q(&MomentQuery::new(2.0, n, Mode::Exact)).unwrap().value;
        let sums_agree = matches!(&traversal, SampleValue::Exact(r) if *r == direct.to_rational());
        if tree != cf || !sums_agree {
            bad.push(n);
        }
    }
    g.record(
        "C3 oracle equivalence",
        bad.is_empty(),
        format!("Q_n denominators = continuants over A_n and sigma_2(n) exact on both paths, n in 2..=16, failures {bad:?}"),
    );
}

fn c4_zeta(g: &mut Gate) {
    let pi = std::f64::consts::PI;
    let e2 = (zeta(2.0, 1e-13).unwrap() - pi * pi / 6.0).abs();
    let e4 = (zeta(4.0, 1e-13).unwrap() - pi.powi(4) / 90.0).abs();
    let t = totient_sum_oracle(2.0, 1_000_000).unwrap();
    let target = constants_for(2.0).unwrap().ratio - 1.0;
    let et = (t.value - target).abs();
    g.record(
        "C4 zeta",
        e2 < 1e-12 && e4 < 1e-12 && et < 1e-6,
        format!("|zeta(2) - pi^2/6| = {e2:.1e}, |zeta(4) - pi^4/90| = {e4:.1e} (limit 1e-12); totient sum error {et:.2e} (limit 1e-6)"),
    );
}

fn num(doc: &Value, path: &[&str]) -> f64 {
    path.iter().fold(doc, |v, k| &v[*k]).as_f64().unwrap_or(f64::NAN)
}

fn flag(doc: &Value, path: &[&str]) -> bool {
    path.iter().fold(doc, |v, k| &v[*k]).as_bool().unwrap_or(false)
}

fn c5_to_c8(g: &mut Gate) {
    let options = ReportOptions {
        config: TraversalConfig::with_workers(8),
        c0_v_max: 30,
        coeff_v_max: 24,
    };
    let two = report(2.0, 30, &options).unwrap();
    let small = report(1.25, 30, &options).unwrap();
    // Series computation and extrapolation only; the constant oracles are timed separately.
    let secs = num(&two, &["timings", "series_and_fit_seconds"]) + num(&small, &["timings", "series_and_fit_seconds"]);

    let pass5 = flag(&two, &["main_term", "pass"]) && flag(&small, &["main_term", "pass"]) && secs < 120.0;
    g.record(
        "C5 main term",
        pass5,
        format!(
            "beta 2: {:.6} vs {:.6} ({:.2}%, limit 1%); beta 1.25: {:.6} vs {:.6} ({:.2}%, limit 2%); {secs:.1} s (limit 120 s)",
            num(&two, &["main_term", "extrapolated"]),
            num(&two, &["main_term", "predicted"]),
            100.0 * num(&two, &["main_term", "relative_error"]),
            num(&small, &["main_term", "extrapolated"]),
            num(&small, &["main_term", "predicted"]),
            100.0 * num(&small, &["main_term", "relative_error"]),
        ),
    );

    g.record(
        "C6 remainder slope",
        flag(&two, &["error_slope", "pass"]),
        format!(
            "beta 2: slope {:.4} (band [-1.4, -0.6]), r^2 {:.4} (min 0.9)",
            num(&two, &["error_slope", "slope"]),
            num(&two, &["error_slope", "r_squared"]),
        ),
    );

    let c0 = &two["c0"];
    let discrepancy = if flag(c0, &["closed_form_discrepancy"]) {
        "; closed form misses by more than 5%: convention discrepancy flagged"
    } else {
        ""
    };
    g.record(
        "C7 continuant-sum limit",
        flag(c0, &["pass"]),
        format!(
            "n^4 sigma_2(n) -> {:.5}; bruteforce c0 {:.5} (gap {:.2}%, limit 5%); closed form {:.5} (gap {:.2}%); matched {}, closest {}{discrepancy}",
            num(c0, &["extrapolated"]),
            num(c0, &["bruteforce"]),
            100.0 * num(c0, &["gap_to_bruteforce"]),
            num(c0, &["closed_form"]),
            100.0 * num(c0, &["gap_to_closed_form"]),
            c0["matched"].as_str().unwrap_or("?"),
            c0["closest"].as_str().unwrap_or("?"),
        ),
    );

    let fc = &two["first_correction"];
    g.record(
        "C8 first correction",
        flag(fc, &["pass"]),
        format!(
            "fitted c_1 {:.5} vs E_1 {:.5} ({:.1}%, limit 10%); with tail {:.5} ({:.1}%)",
            num(fc, &["fitted"]),
            num(fc, &["series"]),
            100.0 * num(fc, &["relative_error"]),
            num(fc, &["series_with_tail"]),
            100.0 * num(fc, &["relative_error_with_tail"]),
        ),
    );

    let late = |doc: &Value, key: &str| num(doc, &["diagnostics", key]);
    println!(
        "       info: late-window [{}, 30] beta 2 main term {:.6}, c0 {:.5}; beta 1.25 main term {:.6}",
        two["diagnostics"]["late_window"][0],
        late(&two, "late_main_term"),
        late(&two, "late_c0"),
        late(&small, "late_main_term"),
    );
}

fn c9_bounds(g: &mut Gate) {
    let mut bound_failures = Vec::new();
    for n in 4..=16u32 {
        for beta in [1.25, 2.0, 3.0] {
            for r in [1.0, 2.0] {
                let params = PartitionParams::new(n, r, PartitionParams::default_w(n)).unwrap();
                for b in bounds_report(n, beta, &params).unwrap().hard {
                    if !b.holds {
                        bound_failures.push(format!("{} n={n} beta={beta} r={r}", b.name));
                    }
                }
            }
        }
    }
    let mut decomposition_failures = Vec::new();
    for n in 3..=14u32 {
        for w in (1..).take_while(|w| 2 * w < n as u64) {
            if !decomposition_check(n, w).unwrap().holds() {
                decomposition_failures.push((n, w));
            }
        }
    }
    let mut spread: f64 = 0.0;
    for w in [2u64, 3] {
        for beta in [1.25, 2.0, 3.0] {
            let vals: Vec<f64> = ((2 * w + 1)..=(2 * w + 4))
                .map(|n| r0_sum(n as u32, w, beta).unwrap())
                .collect();
            let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
            spread = spread.max((hi - lo) / lo);
        }
    }
    g.record(
        "C9 bound suites",
        bound_failures.is_empty() && decomposition_failures.is_empty() && spread <= 1e-12,
        format!(
            "bound failures {bound_failures:?}; decomposition failures {decomposition_failures:?}; prefix/suffix sum relative spread over n {spread:.1e} (limit 1e-12)"
        ),
    );
}

fn c10_determinism(g: &mut Gate) {
    let bits = |workers: usize| {
        let q = MomentQuery::new(2.0, 25, Mode::FastFloat).with_config(TraversalConfig::with_workers(workers));
        sigma_f(&q).unwrap().value.to_f64().to_bits()
    };
    let runs = [bits(1), bits(2), bits(8), bits(8), bits(1)];
    g.record(
        "C10 determinism",
        runs.iter().all(|&b| b == runs[0]),
        format!(
            "sigma_2(F_25) bits {:#018x} across workers 1, 2, 8 and repeat runs: {:?}",
            runs[0],
            runs.iter().map(|b| format!("{b:#018x}")).collect::<Vec<_>>()
        ),
    );
}

fn main() -> ExitCode {
    let mut gate = Gate { failed: Vec::new() };
    c1_exact_unity(&mut gate);
    c2_unit_fractions(&mut gate);
    c3_oracle_equivalence(&mut gate);
    c4_zeta(&mut gate);
    c5_to_c8(&mut gate);
    c9_bounds(&mut gate);
    c10_determinism(&mut gate);
    if gate.failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 10 criteria fail: {}", gate.failed.len(), gate.failed.join(", "));
        ExitCode::FAILURE
    }
}
