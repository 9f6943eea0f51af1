//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use morphcert::certify::{fit_logdamped, growth_verdict, CaseId};
use morphcert::numtheory::{
    count_series, diff_bound_check, lr_estimate_sieve, lr_euler_product, multiplicativity_check,
    sieve_s2_additive, sieve_s2_multiplicative, sieve_s2_nonzero,
};
use morphcert::spectral::{
    growth_class, matrix_power_count, GrowthClass, IncidenceMatrix, LetterGrowthClass,
};
use morphcert::words::{Morphism, Word};
use num_bigint::BigUint;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(detail.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(
        elapsed < limit,
        format!("took {elapsed:.2?}, limit {limit:?}"),
    )
}

fn suite() -> Vec<(&'static str, Morphism)> {
    [
        ("thue-morse", "letters: 0 1\n0 -> 0 1\n1 -> 1 0"),
        ("fibonacci", "letters: a b\na -> a b\nb -> a"),
        ("linear", "letters: a b\na -> a b\nb -> b"),
        ("chain", "letters: a b c\na -> a b\nb -> b c\nc -> c"),
        ("aab", "letters: a b\na -> a a b\nb -> b b"),
        ("swap", "letters: a b\na -> b\nb -> a"),
    ]
    .into_iter()
    .map(|(name, text)| (name, text.parse().expect("suite morphism")))
    .collect()
}

fn sieve_equivalence() -> Outcome {
    let limit = 1_000_000;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let (add, mul) = pool.install(|| (sieve_s2_additive(limit), sieve_s2_multiplicative(limit)));
    let elapsed = start.elapsed();
    let (add, mul) = (
        add.map_err(|e| e.to_string())?,
        mul.map_err(|e| e.to_string())?,
    );
    if let Some(n) = (0..=limit).find(|&n| add.get(n) != mul.get(n)) {
        return Err(format!("tables differ at n = {n}"));
    }
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("n <= {limit} bit-exact, 1 thread, {elapsed:.2?}"))
}

fn counting_oracle() -> Outcome {
    let mut checked = 0;
    for (name, m) in suite() {
        let matrix = IncidenceMatrix::from_morphism(&m);
        for a in m.alphabet().letters() {
            let mut w = Word::single(a);
            for k in 0..=12u64 {
                for b in m.alphabet().letters() {
                    let via_matrix = matrix_power_count(&matrix, k, a, b);
                    let direct = BigUint::from(w.count(b));
                    check(
                        via_matrix == direct,
                        format!(
                            "{name}: k={k} ({}, {}) matrix {via_matrix} vs {direct}",
                            m.alphabet().id(a),
                            m.alphabet().id(b)
                        ),
                    )?;
                    checked += 1;
                }
                w = m.apply(&w);
            }
        }
    }
    Ok(format!(
        "{checked} exact (k, a, b) comparisons over 6 morphisms"
    ))
}

fn growth_classes() -> Outcome {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let expected = [
        ("thue-morse", 2.0, 0, 1),
        ("fibonacci", golden, 0, 1),
        ("linear", 1.0, 1, 1),
        ("chain", 1.0, 2, 1),
    ];
    let suite = suite();
    for (name, alpha, l, t) in expected {
        let m = &suite.iter().find(|(n, _)| *n == name).expect("in suite").1;
        let start = m.alphabet().letters().next().expect("nonempty");
        let g = growth_class(m, start).map_err(|e| e.to_string())?;
        check(
            (g.alpha - alpha).abs() <= 1e-9 && g.l == l && g.period == t,
            format!(
                "{name}: got ({}, {}, {}), want ({alpha}, {l}, {t})",
                g.alpha, g.l, g.period
            ),
        )?;
    }
    Ok("thue-morse (2,0,1), fibonacci (golden,0,1), linear (1,1,1), chain (1,2,1)".into())
}

fn verdict_grid() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    for alpha in [1.0, 1.5, 2.0, 3.0] {
        for beta in [1.0, 1.5, 2.0, 3.0].into_iter().filter(|&b| b <= alpha) {
            for l in 0..=2 {
                for m in 0..=2 {
                    for g10 in 1..=9 {
                        let gamma = f64::from(g10) / 10.0;
                        let growth = GrowthClass {
                            alpha,
                            l,
                            period: 1,
                            g_estimate: None,
                        };
                        let letter = LetterGrowthClass {
                            beta,
                            m,
                            period: 1,
                            gp_estimate: None,
                            eventually_zero: false,
                        };
                        let v =
                            growth_verdict(&growth, &letter, gamma).map_err(|e| e.to_string())?;
                        let want = if beta < alpha {
                            CaseId::BetaLtAlpha
                        } else if alpha == 1.0 {
                            CaseId::UnitAlpha
                        } else {
                            CaseId::SuperUnitAlpha
                        };
                        let tag = format!("alpha={alpha} beta={beta} l={l} m={m} gamma={gamma}");
                        check(v.incompatible, format!("{tag}: not incompatible"))?;
                        check(
                            v.case_id == want,
                            format!("{tag}: case {:?}, want {want:?}", v.case_id),
                        )?;
                        cases += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "{cases} grid points incompatible with matching case, {elapsed:.2?}"
    ))
}

fn landau_ramanujan() -> Outcome {
    let start = Instant::now();
    let e = |p| {
        lr_euler_product(p)
            .map(|r| r.value)
            .map_err(|e| e.to_string())
    };
    let (k6, k7, k3) = (e(1_000_000)?, e(10_000_000)?, e(3)?);
    check(
        (k6 - k7).abs() <= 1e-5,
        format!("Euler product drifts: {k6} vs {k7}"),
    )?;
    check(
        k3 == 0.75,
        format!("Euler product at P=3 is {k3}, want 0.75"),
    )?;
    let n = 10_000_000;
    let table = sieve_s2_additive(n).map_err(|e| e.to_string())?;
    let series = count_series(&table, &[n]).map_err(|e| e.to_string())?;
    let sieve = lr_estimate_sieve(&series).map_err(|e| e.to_string())?[0].value;
    let rel = (sieve - k7).abs() / k7;
    check(
        rel <= 0.10,
        format!("sieve estimate {sieve} is {:.1}% from {k7}", rel * 100.0),
    )?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "K(1e6)={k6:.9} K(1e7)={k7:.9} K(3)={k3}; sieve K^(1e7)={sieve:.6} ({:.2}% off), {elapsed:.2?}",
        rel * 100.0
    ))
}

fn difference_bound() -> Outcome {
    let limit = 1_000_000;
    let report = diff_bound_check(limit).map_err(|e| e.to_string())?;
    check(
        report.first_violation.is_none(),
        format!("violated at n = {:?}", report.first_violation),
    )?;
    let (s2, nz) = (
        sieve_s2_additive(10).map_err(|e| e.to_string())?,
        sieve_s2_nonzero(10).map_err(|e| e.to_string())?,
    );
    let diff = s2.count_upto(10).abs_diff(nz.count_upto(10));
    check(diff == 4, format!("diff at n=10 is {diff}, want 4"))?;
    check(10u64.isqrt() + 1 == 4, "bound at n=10")?;
    Ok(format!(
        "holds for n <= {limit}; n=10 diff 4 = bound 4; {} equality cases; max diff {} at n={}",
        report.tight_count, report.max_diff, report.max_diff_at
    ))
}

fn end_to_end() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_morphcert");
    let dir = std::env::temp_dir().join(format!("morphcert-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let tm = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/thue_morse.morph");
    let runs = [
        ("s2".to_string(), "non_morphic_conditional"),
        ("s2nz".to_string(), "non_morphic_conditional"),
        (format!("morphic:{}", tm.display()), "morphic_compatible"),
    ];
    let start = Instant::now();
    let mut summary = Vec::new();
    for (i, (source, want)) in runs.iter().enumerate() {
        let out = dir.join(format!("report{i}.json"));
        let status = Command::new(bin)
            .args(["certify", "--source", source, "-N", "10000000", "-o"])
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        check(status.success(), format!("{source}: exit {status}"))?;
        let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
        let report: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let conclusion = report["conclusion"].as_str().unwrap_or("?");
        check(
            conclusion == *want,
            format!("{source}: conclusion {conclusion}, want {want}"),
        )?;
        if *want == "non_morphic_conditional" {
            let gamma = report["logdamped"]["gamma"].as_f64().unwrap_or(f64::NAN);
            let lo = report["logdamped"]["gamma_ci"][0]
                .as_f64()
                .unwrap_or(f64::NAN);
            let hi = report["logdamped"]["gamma_ci"][1]
                .as_f64()
                .unwrap_or(f64::NAN);
            check(
                lo > 0.0 && hi < 1.0,
                format!("{source}: gamma_ci [{lo}, {hi}] not inside (0, 1)"),
            )?;
            check(
                (0.4..=0.6).contains(&gamma),
                format!("{source}: gamma {gamma} outside [0.4, 0.6]"),
            )?;
            summary.push(format!("{source} gamma={gamma:.3} ci=[{lo:.3},{hi:.3}]"));
        } else {
            summary.push(format!("thue_morse {conclusion}"));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(90))?;
    Ok(format!("{}; {elapsed:.2?}", summary.join("; ")))
}

fn regression_exactness() -> Outcome {
    let (c, gamma) = (0.76, 0.5);
    let points: Vec<(f64, f64)> = (10..=24)
        .map(|e| {
            let n = f64::from(2u32.pow(e));
            (n, (c * n / n.ln().powf(gamma)).round())
        })
        .collect();
    let p = fit_logdamped(&points).map_err(|e| e.to_string())?;
    check(
        (p.gamma - gamma).abs() <= 0.01 && (p.c - c).abs() <= 0.01,
        format!("recovered C={} gamma={}", p.c, p.gamma),
    )?;
    Ok(format!("C={:.6} gamma={:.6}", p.c, p.gamma))
}

fn multiplicativity() -> Outcome {
    let bound = 300;
    let table = sieve_s2_additive(bound * bound).map_err(|e| e.to_string())?;
    let clean = multiplicativity_check(&table, bound).map_err(|e| e.to_string())?;
    check(
        clean.is_none(),
        format!("counterexample {clean:?} in the true table"),
    )?;
    let corrupted =
        multiplicativity_check(&table.with_bit_flipped(25), bound).map_err(|e| e.to_string())?;
    let Some((p, q)) = corrupted else {
        return Err("negative control (25 flipped) found no counterexample".into());
    };
    Ok(format!(
        "no counterexample for coprime p, q <= {bound}; flipped table fails at ({p}, {q})"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("sieve equivalence", sieve_equivalence),
        ("counting oracle", counting_oracle),
        ("growth classification", growth_classes),
        ("verdict totality", verdict_grid),
        ("Landau-Ramanujan cross-check", landau_ramanujan),
        ("difference bound", difference_bound),
        ("end-to-end certification", end_to_end),
        ("regression exactness", regression_exactness),
        ("multiplicativity", multiplicativity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
