//! Acceptance criteria 1 to 10. Prints one `PASS criterion k` or
//! `FAIL criterion k` line each and exits non-zero if any fail.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hsdm::cli::{self, CertMode};
use hsdm::gfun::GFunction;
use hsdm::hilbert::*;
use hsdm::iterates::{cyclic_composite, iterate, resolvent_map, Scheme};
use hsdm::rates::{asy_rate, k_tower, EvalPath, MajorantFn, RateOptions, TowerOverrides};
use hsdm::spec::Problem;
use hsdm::verify::instances::*;
use hsdm::verify::*;

const SEED: u64 = 20_240_611;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn rand_point(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Point {
    pt(&(0..dim).map(|_| rng.gen_range(-r..r)).collect::<Vec<_>>())
}

fn c1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = f64::NEG_INFINITY;
    let mut combos = 0;
    for (kappa, eta) in [(1.0f64, 1.0f64), (1.5, 1.0), (2.0, 0.5), (3.0, 2.0), (5.0, 1.0)] {
        // ηI plus a skew part: η-strongly monotone, κ-Lipschitz, formula sharp
        let s = (kappa * kappa - eta * eta).max(0.0).sqrt();
        let m = Matrix::from_rows(vec![vec![eta, -s], vec![s, eta]]).unwrap();
        let f = MonotoneOpSpec::new(MonotoneMap::Affine { matrix: m, shift: pt(&[0.3, -0.7]) }, kappa, eta).unwrap();
        for frac in [0.1, 0.3, 0.5, 0.7, 0.95] {
            let mu = frac * 2.0 * eta / (kappa * kappa);
            let formula = (1.0 - mu * (2.0 * eta - mu * kappa * kappa)).sqrt();
            let g = |x: &Point| x.axpy(-mu, &f.apply(x).unwrap());
            for _ in 0..1000 {
                let x = rand_point(&mut rng, 2, 5.0);
                let y = rand_point(&mut rng, 2, 5.0);
                let ratio = g(&x).dist(&g(&y)) / x.dist(&y);
                worst = worst.max(ratio - formula);
            }
            let claimed = contraction_from_monotone(&f, mu).unwrap().tau().unwrap();
            worst = worst.max((claimed - formula).abs() - 1e-12);
            combos += 1;
        }
    }
    outcome(worst <= 1e-9, format!("{combos} (kappa, eta, mu) combinations, max ratio - formula = {worst:e}"))
}

fn c2() -> Outcome {
    let t = OperatorSpec::nonexpansive(OperatorKind::Compose {
        ops: vec![ball(&[0.0, 0.0], 1.0), halfspace(&[1.0, 1.0], 0.2)],
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst = f64::NEG_INFINITY;
    for tau in [0.0, 0.25, 0.5] {
        let g = attractor(&pt(&[0.3, -0.4]), tau).unwrap();
        for lam in [0.01, 0.1, 0.5, 1.0] {
            let bound = 1.0 - lam * (1.0 - tau);
            for _ in 0..1000 {
                let x = rand_point(&mut rng, 2, 3.0);
                let y = rand_point(&mut rng, 2, 3.0);
                let r = resolvent_map(&t, &g, lam, &x).dist(&resolvent_map(&t, &g, lam, &y)) / x.dist(&y);
                worst = worst.max(r - bound);
            }
        }
    }
    outcome(worst <= 1e-9, format!("max measured factor - (1 - lambda(1 - tau)) = {worst:e}"))
}

fn c3() -> Outcome {
    let inst = quadratic_interior();
    let a = inst.solution.clone().unwrap();
    let tr = iterate(Scheme::HsdmSingle, &[inst.t.clone()], &inst.g, &inst.schedule, &inst.start, 10_000).unwrap();
    let hit = tr.points.iter().position(|u| u.dist(&a) <= 1e-3);
    let stays = hit.is_some_and(|h| tr.points[h..].iter().all(|u| u.dist(&a) <= 1e-3));
    // projected gradient u ↦ P_B(u − μF(u)) with μ = 1/2
    let p = Problem::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../problems/quadratic_ball.json")).unwrap();
    let mut spec = p.spec.clone();
    if let hsdm::spec::ContractionSpec::Monotone { mu, .. } = &mut spec.contraction {
        *mu = 0.5;
    }
    let p2 = spec.validate().unwrap();
    let pg = iterate(Scheme::ProjGrad, &p2.ops, &p2.g, &spec.schedule, &spec.start, 200).unwrap();
    let pg_hit = pg.points.iter().position(|u| u.dist(&a) <= 1e-6);
    outcome(
        stays && pg_hit.is_some(),
        format!("HSDM within 1e-3 from step {hit:?}, projected gradient within 1e-6 at step {pg_hit:?}"),
    )
}

fn c4() -> Outcome {
    let fam = two_projection_family();
    let m = fam.schedule.moduli(fam.tau);
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in [0.5, 0.2] {
        let Ok(chi) = asy_rate(eps, &m, fam.d, fam.ops.len(), None) else {
            return outcome(false, format!("chi_hat({eps}) not finite"));
        };
        let tr = iterate(Scheme::HsdmCyclic, &fam.ops, &fam.g, &fam.schedule, &fam.start, chi as usize).unwrap();
        let n = chi as usize;
        let r = tr.points[n].dist(&cyclic_composite(&fam.ops, n, &tr.points[n]));
        ok &= r <= eps + 1e-9;
        parts.push(format!("eps = {eps}: chi_hat = {chi}, residual {r:e}"));
    }
    outcome(ok, parts.join("; "))
}

fn c5() -> Outcome {
    let rep = check_lemma(LemmaKind::Perm, 1000, SEED).unwrap();
    outcome(
        rep.violations == 0 && rep.negative_case == Some(true) && rep.premise_held > 0,
        format!(
            "{} cases, premise held {}, violations {}, negative case fails {:?}; {}",
            rep.cases, rep.premise_held, rep.violations, rep.negative_case, rep.detail
        ),
    )
}

fn c6() -> Outcome {
    let want = BigUint::from(1152921504606846976u64);
    let o = TowerOverrides { n_eps_tilde: Some(BigUint::from(2u32)), i0: Some(0), ..Default::default() };
    let mut ok = true;
    let mut got = Vec::new();
    for path in [EvalPath::Literal, EvalPath::Structural] {
        let opts = RateOptions::default().with_path(path).with_overrides(o.clone());
        let t = k_tower(&MajorantFn::Identity, 1, 0.5, 0.0, &opts).unwrap();
        ok &= t.k.value() == Some(&want);
        got.push(format!("{path:?}: {}", t.k));
    }
    outcome(ok, got.join(", "))
}

fn c7() -> Outcome {
    let insts = vec![audit_instance(0.0).unwrap(), audit_instance(0.25).unwrap()];
    let (rep, runs) = run_audit_suite(&insts, &[0.5, 1.0], 50, SEED, 1_000_000).unwrap();
    let passed = runs.iter().filter(|r| r.status == RunStatus::Passed).count();
    let exhausted = runs.iter().filter(|r| r.status == RunStatus::BudgetExceeded).count();
    outcome(
        rep.violations == 0 && passed > 0,
        format!("{} runs: {passed} audited and passed, {exhausted} out of budget, {} violations", runs.len(), rep.violations),
    )
}

fn c8() -> Outcome {
    let kinds = [
        LemmaKind::Switch,
        LemmaKind::VipModulus,
        LemmaKind::CoreSingle,
        LemmaKind::CoreSingleDiag,
        LemmaKind::Subseq,
        LemmaKind::FactSum,
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for k in kinds {
        let rep = check_lemma(k, 1000, SEED).unwrap();
        ok &= rep.violations == 0 && rep.negative_case == Some(true) && rep.premise_held > 0;
        parts.push(format!("{k}: held {}/{} viol {}", rep.premise_held, rep.cases, rep.violations));
    }
    outcome(ok, parts.join(", "))
}

fn spec_value(name: &str) -> serde_json::Value {
    let path = format!("{}/../../problems/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn with_k(mut v: serde_json::Value, k: u64) -> Problem {
    v["rates"] = serde_json::json!({ "overrides": { "k": k.to_string() } });
    Problem::from_json(&v.to_string()).unwrap()
}

/// The quadratic instance with `a = (0.7, 0.3)` outside the ball.
fn exterior() -> serde_json::Value {
    let mut v = spec_value("quadratic_ball.json");
    v["label"] = serde_json::json!("quadratic-exterior");
    v["contraction"]["monotone"]["f"]["map"]["linear"] = serde_json::json!([0.7, 0.3]);
    v["g_fixed_point"] = serde_json::json!([0.7, 0.3]);
    let n = (0.58f64).sqrt();
    v["solution"] = serde_json::json!([0.35 / n, 0.15 / n]);
    v
}

fn c9() -> Outcome {
    let g: GFunction = "n+1".parse().unwrap();
    let fam = Problem::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../problems/two_projection.json")).unwrap();
    let mut cases = Vec::new();
    for eps in [0.5, 0.2, 0.1] {
        cases.push((format!("asy eps = {eps}"), cli::certify(&fam, eps, &g, CertMode::Asy)));
    }
    for k in [1, 3, 7] {
        for (name, v) in [("interior", spec_value("quadratic_ball.json")), ("exterior", exterior())] {
            let p = with_k(v, k);
            for eps in [0.5, 0.2, 0.05] {
                cases.push((format!("single {name} k = {k} eps = {eps}"), cli::certify(&p, eps, &g, CertMode::Single)));
            }
            cases.push((format!("full {name} k = {k}"), cli::certify(&p, 0.5, &g, CertMode::Full)));
        }
        let fam = with_k(spec_value("two_projection.json"), k);
        cases.push((format!("family k = {k}"), cli::certify(&fam, 0.5, &g, CertMode::Family)));
    }
    let mut ok = true;
    let mut finite = 0;
    let mut parts = Vec::new();
    for (label, c) in cases {
        match c {
            Ok(c) if c.bound.is_finite() => match c.empirical_witness {
                Some(w) => {
                    finite += 1;
                    ok &= c.consistent();
                    parts.push(format!("{label}: {w} <= {}", c.bound));
                }
                None => parts.push(format!("{label}: bound {} too large to measure", c.bound)),
            },
            Ok(c) => parts.push(format!("{label}: bound {}", c.bound)),
            Err(e) => {
                ok = false;
                parts.push(format!("{label}: {e}"));
            }
        }
    }
    outcome(ok && finite > 0, format!("{finite} measured; {}", parts.join("; ")))
}

fn c10() -> Outcome {
    let inst = quadratic_interior();
    let tr = iterate(Scheme::HsdmSingle, &[inst.t.clone()], &inst.g, &inst.schedule, &inst.start, 10_000).unwrap();
    let w = inst.solution.clone().unwrap();
    let single = check_confinement(&ConfinementInput {
        traj: &tr,
        ops: std::slice::from_ref(&inst.t),
        g: &inst.g,
        v: &inst.witness,
        w: Some(&w),
        d: inst.d,
        mode: ConfinementMode::DiamSingle,
    })
    .unwrap();
    let fam = two_projection_family();
    let ft = iterate(Scheme::HsdmCyclic, &fam.ops, &fam.g, &fam.schedule, &fam.start, 10_000).unwrap();
    let fw = pt(&[0.1, 0.05]);
    let family = check_confinement(&ConfinementInput {
        traj: &ft,
        ops: &fam.ops,
        g: &fam.g,
        v: &fam.witness,
        w: Some(&fw),
        d: fam.d,
        mode: ConfinementMode::DiamFamily,
    })
    .unwrap();
    outcome(
        single.passed && family.passed,
        format!(
            "single: iterates {:.4}, resolvents {:.4?}, G-images {:.4}; family: iterates {:.4}, G-images {:.4} (d/2 = 0.5)",
            single.max_iterate, single.max_resolvent, single.max_g_image, family.max_iterate, family.max_g_image
        ),
    )
}

fn main() {
    let criteria: [(fn() -> Outcome, u64); 10] = [
        (c1, 1),
        (c2, 1),
        (c3, 5),
        (c4, 60),
        (c5, 10),
        (c6, 1),
        (c7, 120),
        (c8, 30),
        (c9, 60),
        (c10, 10),
    ];
    let mut failed = 0;
    for (i, (check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let in_time = took < Duration::from_secs(limit);
        let ok = o.ok && in_time;
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {} ({:.2}s of {limit}s): {}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
