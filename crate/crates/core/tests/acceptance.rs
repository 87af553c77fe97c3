//! One line per acceptance criterion, with the tolerances pinned below.
//!
//! Criterion 9 is expected to print FAIL: its `ζ_K(2s)` factorisation does not
//! hold numerically, while the `ζ_K(s)` form does. Any other failure, or a
//! tolerance drifting from its pinned value, makes this target exit nonzero.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use picard_core::cli::config::SuiteConfig;
use picard_core::cli::report::CheckReport;
use picard_core::cli::suites::{run_suite, SUITES};

/// Expected known failures: `(criterion, identity_id)`.
const KNOWN_FAILURES: [(usize, &str); 1] = [(9, "zeta_factorisation_2s")];

fn pinned_tol(id: &str) -> Option<f64> {
    Some(match id {
        "poisson_integral" => 1e-6,
        "poisson_integral_anchor" => 1e-12,
        "product_formula" => 1e-5,
        "product_formula_k" => 1e-4,
        "product_symmetry" => 1e-6,
        "trivial_functional_eq" => 1e-4,
        "trivial_functional_eq_k" => 1e-3,
        "singular_refinement" => 0.99,
        "sl2_product_formula" => 1e-6,
        "eigen_poisson" | "eigen_poisson_k" | "eigen_series_term" | "eigen_kernel_k" | "eigen_green_radial" => 1e-5,
        "eigen_poisson_richardson" | "eigen_series_term_richardson" => 0.2,
        "green_ode" | "weight_ode" | "covariance_kernel" | "covariance_poly" | "annihilation" => 1e-5,
        "casimir_d1" | "casimir_d2" => 1e-3,
        "contiguous" | "incomplete_beta" | "chart_form" | "inverse_form" => 1e-10,
        "gauss_sum" => 1e-9,
        "chebyshev" | "epstein_functional_eq" => 1e-12,
        "cocycle_chain_rule"
        | "pairing_transform"
        | "sigma_invariance"
        | "trace_formula_single"
        | "trace_formula_pair" => 1e-9,
        "normalize_pair_delta" | "cosh_distance" => 1e-8,
        "holomorphic_jacobian" => 1e-7,
        "triangle_72" => 1.0,
        "cone_involution" | "repeat_identical" | "thread_count_independent" => 0.0,
        // Tolerance is the reported truncation allowance.
        "zeta_factorisation_2s" | "zeta_factorisation_s" => return None,
        _ => return None,
    })
}

/// Wall-time ceilings from the criteria.
fn time_limit(criterion: usize) -> Option<Duration> {
    match criterion {
        1 => Some(Duration::from_secs(60)),
        2 => Some(Duration::from_secs(600)),
        5 => Some(Duration::from_secs(30)),
        _ => None,
    }
}

/// Sample sizes the criteria require, read back from the reports.
fn size_ok(r: &CheckReport) -> bool {
    let get = |k: &str| r.inputs.get(k).and_then(|v| v.parse::<u64>().ok());
    match r.identity_id.as_str() {
        "contiguous" => get("draws") >= Some(500),
        "cocycle_chain_rule"
        | "pairing_transform"
        | "sigma_invariance"
        | "trace_formula_single"
        | "trace_formula_pair"
        | "normalize_pair_delta"
        | "cosh_distance" => get("draws") >= Some(1000),
        "triangle_72" => get("draws") >= Some(100_000),
        _ => true,
    }
}

fn main() {
    let cfg = SuiteConfig::default();
    let mut unexpected = Vec::new();
    let mut full_reports = Vec::new();

    for (i, id) in SUITES.iter().enumerate() {
        let criterion = i + 1;
        let t0 = Instant::now();
        let reports = run_suite(id, &cfg).unwrap_or_else(|e| panic!("suite {id}: {e}"));
        let elapsed = t0.elapsed();
        if criterion <= 9 {
            full_reports.extend(reports.iter().cloned());
        }

        let mut notes = Vec::new();
        for r in &reports {
            if let Some(t) = pinned_tol(&r.identity_id) {
                if r.tol != t {
                    unexpected.push(format!("criterion {criterion}: {} tol {} != pinned {t}", r.identity_id, r.tol));
                }
            }
            if !size_ok(r) {
                unexpected.push(format!("criterion {criterion}: {} sample too small {:?}", r.identity_id, r.inputs));
            }
            if !r.pass {
                if KNOWN_FAILURES.contains(&(criterion, r.identity_id.as_str())) {
                    notes.push(format!(
                        "{} rel_err={:.3e} > tail {:.3e} (known)",
                        r.identity_id,
                        r.rel_err.unwrap_or(f64::NAN),
                        r.tol
                    ));
                } else {
                    unexpected.push(format!(
                        "criterion {criterion}: {} failed {:?} rel_err={:?}",
                        r.identity_id, r.inputs, r.rel_err
                    ));
                }
            }
        }
        if let Some(lim) = time_limit(criterion) {
            if elapsed > lim {
                unexpected.push(format!("criterion {criterion}: {elapsed:?} exceeds {lim:?}"));
                notes.push(format!("runtime {elapsed:?} > {lim:?}"));
            }
        }
        if criterion == 9 {
            let corrected = reports.iter().find(|r| r.identity_id == "zeta_factorisation_s");
            match corrected {
                Some(r) if r.pass => {
                    notes.push(format!("zeta_factorisation_s rel_err={:.3e} passes", r.rel_err.unwrap_or(f64::NAN)))
                }
                _ => unexpected.push("criterion 9: zeta_factorisation_s did not pass".into()),
            }
        }

        let passed = reports.iter().filter(|r| r.pass).count();
        let ok = passed == reports.len() && time_limit(criterion).is_none_or(|l| elapsed <= l);
        let verdict = if ok { "PASS" } else { "FAIL" };
        let extra = if notes.is_empty() { String::new() } else { format!(" | {}", notes.join("; ")) };
        println!(
            "criterion {criterion:>2} {verdict} [{id}] {passed}/{} checks, {:.2}s{extra}",
            reports.len(),
            elapsed.as_secs_f64()
        );
    }

    // Criterion 10 at full scale: every suite under a one-thread pool against the default pool.
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial: Vec<CheckReport> =
        one.install(|| SUITES[..9].iter().flat_map(|id| run_suite(id, &cfg).unwrap()).collect());
    let a = serde_json::to_string(&full_reports).unwrap();
    let b = serde_json::to_string(&serial).unwrap();
    let same = a == b;
    println!("criterion 10 full-scale thread independence: {} ({} bytes)", if same { "PASS" } else { "FAIL" }, a.len());
    if !same {
        unexpected.push("criterion 10: full reports differ between 1 thread and the default pool".into());
    }

    // Quick mode wall time.
    let t0 = Instant::now();
    let quick = SuiteConfig { quick: true, ..SuiteConfig::default() };
    let q = run_suite("all", &quick).unwrap();
    let qt = t0.elapsed();
    println!("verify all --quick: {} checks in {:.2}s (limit 300s)", q.len(), qt.as_secs_f64());
    if qt > Duration::from_secs(300) {
        unexpected.push("verify all --quick exceeded 5 minutes".into());
    }

    let mut by_id: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &full_reports {
        *by_id.entry(r.identity_id.as_str()).or_default() += 1;
    }
    println!("identities checked: {}", by_id.len());

    if !unexpected.is_empty() {
        for u in &unexpected {
            eprintln!("unexpected: {u}");
        }
        std::process::exit(1);
    }
}
