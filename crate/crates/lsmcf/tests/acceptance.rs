//! The acceptance gate: eleven criteria with pinned tolerances, one printed
//! pass/fail line each. Expensive trajectories are shared across criteria.

use std::time::{Duration, Instant};

use once_cell::sync::Lazy;

use lsmcf::config::{self, Mode};
use lsmcf::report::{self, RunOutcome};
use lsmcf::verifier;

struct Timed {
    outcome: RunOutcome,
    elapsed: Duration,
}

fn timed_preset(name: &str) -> Timed {
    let mut cfg = config::preset(name).expect("preset");
    cfg.output.directory = None;
    let start = Instant::now();
    let outcome = report::run_experiment(&cfg).expect(name);
    Timed { outcome, elapsed: start.elapsed() }
}

static CIRCLE_257: Lazy<Timed> = Lazy::new(|| timed_preset("shrinking_circle"));
static CIRCLE_129: Lazy<Timed> = Lazy::new(|| timed_preset("shrinking_circle_coarse"));
static NEUMANN: Lazy<Timed> = Lazy::new(|| timed_preset("neumann_half_circle"));
static NESTED: Lazy<Timed> = Lazy::new(|| timed_preset("nested_circles_comparison"));
static RELABEL: Lazy<Timed> = Lazy::new(|| timed_preset("relabel_ladder"));
static THREE_D: Lazy<Timed> = Lazy::new(|| timed_preset("epsilon_ladder_3d_small"));

/// Curvature-mass maxima of the coarse circle across the epsilon ladder.
static MASS_LADDER: Lazy<Vec<f64>> = Lazy::new(|| {
    [4.0, 2.0, 1.0]
        .iter()
        .map(|&factor| {
            let mut cfg = config::preset("shrinking_circle_coarse").unwrap();
            cfg.solver.epsilon = lsmcf::config::EpsilonSpec::HMultiple { factor };
            cfg.verifier.run_residuals = false;
            cfg.output.directory = None;
            let out = report::run_experiment(&cfg).unwrap();
            assert!(
                out.summary.checks["curvature_mass_max_rel_increase"].pass,
                "mass increased at ladder factor {factor}"
            );
            out.summary.info["curvature_mass_max"]
        })
        .collect()
});

fn verdict(num: usize, title: &str, pass: bool, detail: &str) {
    println!(
        "criterion {num:2} [{}] {title}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {num} ({title}) failed: {detail}");
}

#[test]
fn criterion_01_shrinking_circle_law() {
    let t = &*CIRCLE_257;
    let c = &t.outcome.summary.checks["radius_rel_err"];
    let within_time = t.elapsed <= Duration::from_secs(300);
    verdict(
        1,
        "shrinking circle radius law",
        c.pass && within_time,
        &format!(
            "rel err {:.5} (tol 0.02), runtime {:.1}s (limit 300s)",
            c.value,
            t.elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_viscous_dissipation() {
    let s = &CIRCLE_257.outcome.summary;
    let step = &s.checks["energy_max_step_increase"];
    let cum = &s.checks["energy_cumulative_defect_rel"];
    verdict(
        2,
        "viscous energy dissipation",
        step.pass && cum.pass,
        &format!(
            "max step increase {:.3e} (tol {:.3e}), cumulative defect {:.4} (tol 0.05)",
            step.value, step.threshold, cum.value
        ),
    );
}

#[test]
fn criterion_03_curvature_mass_monotone() {
    let presets = [
        ("shrinking_circle", &CIRCLE_257),
        ("shrinking_circle_coarse", &CIRCLE_129),
        ("neumann_half_circle", &NEUMANN),
        ("nested_circles_comparison", &NESTED),
        ("relabel_ladder", &RELABEL),
        ("epsilon_ladder_3d_small", &THREE_D),
    ];
    let mut worst = 0.0_f64;
    let mut all = true;
    for (_, t) in &presets {
        let c = &t.outcome.summary.checks["curvature_mass_max_rel_increase"];
        worst = worst.max(c.value);
        all &= c.pass;
    }
    let ladder = &*MASS_LADDER;
    let spread = ladder.iter().fold(0.0_f64, |a, &b| a.max(b))
        / ladder.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    verdict(
        3,
        "curvature mass monotonicity",
        all && spread <= 2.0,
        &format!(
            "worst per-interval increase {worst:.2e} (tol 1e-3), \
             ladder max spread factor {spread:.3} (limit 2)"
        ),
    );
}

#[test]
fn criterion_04_bv_residuals() {
    let fine = &CIRCLE_257.outcome.summary;
    let coarse = &CIRCLE_129.outcome.summary;
    let mut medians_ok = true;
    let mut worst = 0.0_f64;
    for ident in ["dist_v", "dist_mc", "level_v", "level_mc"] {
        let c = &fine.checks[&format!("residual_{ident}")];
        medians_ok &= c.pass;
        worst = worst.max(c.value);
    }
    let ratio = fine.info["residual_median_combined"] / coarse.info["residual_median_combined"];
    let ratio_ok = (0.3..=0.8).contains(&ratio);
    verdict(
        4,
        "weak form residual families",
        medians_ok && ratio_ok,
        &format!(
            "worst median {worst:.3e} (tol 0.05), \
             combined decay ratio n129->n257 {ratio:.3} (band [0.3, 0.8])"
        ),
    );
}

#[test]
fn criterion_05_per_level_dissipation() {
    let t = &*CIRCLE_257;
    let levels = &t.outcome.summary.checks["level_dissipation_max_defect_rel"];
    // exact-circle equality at the zero level over the full horizon
    let ld = verifier::level_dissipation_defect(&t.outcome.trajectory, 0.0, 0.0, 0.06)
        .expect("zero level defect");
    let drop = ld.len_t1 - ld.len_t2;
    let equality = (drop - ld.dissipated).abs() / drop;
    verdict(
        5,
        "per level sharp dissipation",
        levels.pass && equality <= 0.03,
        &format!(
            "max level defect {:.4} (tol 0.03), circle two-side gap {equality:.4} (tol 0.03)",
            levels.value
        ),
    );
}

#[test]
fn criterion_06_comparison_principle() {
    let c = &NESTED.outcome.summary.checks["comparison_max_violation"];
    verdict(
        6,
        "comparison principle",
        c.pass,
        &format!("max(u1 - u2) = {:.3e} (tol 1e-6)", c.value),
    );
}

#[test]
fn criterion_07_relabeling() {
    let s = &RELABEL.outcome.summary;
    assert!(matches!(
        config::preset("relabel_ladder").unwrap().mode,
        Mode::Relabel { .. }
    ));
    let decay = &s.checks["relabel_decay_ratio"];
    let affine = &s.checks["relabel_affine_dev"];
    verdict(
        7,
        "relabeling invariance",
        decay.pass && affine.pass,
        &format!(
            "dev(h)/dev(4h) = {:.3} (limit 0.5), affine symmetry dev {:.2e} (tol 1e-10)",
            decay.value, affine.value
        ),
    );
}

#[test]
fn criterion_08_neumann_extension() {
    let s = &NEUMANN.outcome.summary;
    let radius = &s.checks["radius_rel_err"];
    let tangential = &s.checks["residual_dist_mc"];
    verdict(
        8,
        "neumann half circle",
        radius.pass && tangential.pass,
        &format!(
            "radius rel err {:.5} (tol 0.03), tangential residual median {:.3e} (tol 0.05)",
            radius.value, tangential.value
        ),
    );
}

#[test]
fn criterion_09_l1_continuity() {
    let s = &CIRCLE_257.outcome.summary;
    let c = &s.checks["l1_continuity"];
    let lhs = s.info["l1_lhs"];
    let reference = std::f64::consts::PI * 0.12;
    let ref_gap = (lhs - reference).abs() / reference;
    verdict(
        9,
        "l1 continuity bound",
        c.pass && ref_gap <= 0.02,
        &format!(
            "lhs {lhs:.5} vs bound {:.5} (10% slack), reference gap {ref_gap:.5} (tol 0.02)",
            c.threshold
        ),
    );
}

#[test]
fn criterion_10_coarea_layer_cake() {
    let s = &CIRCLE_257.outcome.summary;
    let coarea = &s.checks["coarea_vs_contour_max_rel"];
    let cake = &s.checks["layer_cake_rel_err"];
    verdict(
        10,
        "coarea and layer cake cross checks",
        coarea.pass && cake.pass,
        &format!(
            "coarea vs contour {:.4} (tol 0.03), layer cake {:.2e} (tol 0.01)",
            coarea.value, cake.value
        ),
    );
}

#[test]
fn criterion_11_3d_smoke() {
    let t = &*THREE_D;
    let c = &t.outcome.summary.checks["radius_rel_err"];
    let within_time = t.elapsed <= Duration::from_secs(600);
    verdict(
        11,
        "3d sphere smoke test",
        c.pass && within_time,
        &format!(
            "radius rel err {:.5} (tol 0.05), runtime {:.1}s (limit 600s)",
            c.value,
            t.elapsed.as_secs_f64()
        ),
    );
}
