//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use hpcomplex::groupoid::{
    bimodule_inner_product, bimodule_right_action, convolve, module_inner_product,
    module_right_action, morita_lambda, pi_f, random_bimodule_element, random_conv_element,
    star_theta_identity, theta_h_s, theta_h_s_adjoint, xi_composition, Arrow, DiscreteGroupoid,
    GroupoidKind, GroupoidMorphism,
};
use hpcomplex::homotopy::{
    path_endpoints_check, path_stage1, path_stage2, path_stage3, resolvent_continuity_check,
    signature_winding, validate_path, ChainMap,
};
use hpcomplex::hp::{
    check_acyclic_iff_b_invertible, lemma_q_identities, signature_unitary, validate_complex,
    validate_condition1, validate_condition2, validate_condition3, HPComplexData, UnitaryLoop,
};
use hpcomplex::models::{
    conjugation_isomorphism, random_hp_complex, subdivision_equivalence, subdivision_round_trip,
    suspension_model,
};
use hpcomplex::perm::Permutation;
use hpcomplex::smoothing::{
    chain_homotopy_identity, duality_compat_check, functoriality_check,
    phi_cohomology_identity_report, phi_commutation_report, poincare_identity_check,
    pullback_phi_independence, PullbackData, SmoothingPolynomial,
};
use hpcomplex::tol::{SampleGrid, Tolerances};
use hpcomplex::winding::winding_number;
use hpcomplex::{AlgebraKind, C64};
use rand::Rng;
use rand::SeedableRng;
use std::time::Instant;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn grid() -> SampleGrid {
    SampleGrid::new(256)
}

fn suspension_cases() -> Vec<(&'static str, usize)> {
    let sigmas = ["(1)", "(1 2)", "(1 2 3)", "(1 2)(3)"];
    let mut out = Vec::new();
    for s in sigmas {
        for k in [1usize, 2, 3] {
            out.push((s, k));
        }
    }
    out
}

fn suspension_suite() -> Vec<HPComplexData> {
    suspension_cases()
        .into_iter()
        .map(|(s, k)| {
            suspension_model(&Permutation::from_cycles_str(s, 0).unwrap(), k)
                .unwrap()
                .complex
        })
        .collect()
}

/// 10 acyclic + 10 non-acyclic random finite-dimensional complexes.
fn random_suite() -> Vec<(HPComplexData, bool)> {
    let rank_pool: [&[usize]; 5] = [
        &[1, 1],
        &[2, 2],
        &[2, 3, 3, 2],
        &[1, 2, 2, 1],
        &[2, 4, 4, 2],
    ];
    let mut out = Vec::new();
    for i in 0..10u64 {
        let ranks = rank_pool[(i % 5) as usize];
        out.push((random_hp_complex(100 + i, ranks, true).unwrap(), true));
        out.push((random_hp_complex(200 + i, ranks, false).unwrap(), false));
    }
    out
}

#[test]
fn criterion_01_hp_axiom_suite() {
    let started = Instant::now();
    let g = grid();
    let t = tol();
    let mut max12: f64 = 0.0;
    let mut models: Vec<HPComplexData> = suspension_suite();
    models.extend(random_suite().into_iter().map(|(c, _)| c));
    for c in &models {
        let r0 = validate_complex(c, &t);
        assert!(r0.pass, "b^2 = 0 failed: {:.3e}", r0.max_violation);
        let r1 = validate_condition1(c, 1e-12);
        let r2 = validate_condition2(c, 1e-12);
        assert!(
            r1.pass && r2.pass,
            "conditions (1),(2) failed: {:.3e} / {:.3e}",
            r1.max_violation,
            r2.max_violation
        );
        max12 = max12.max(r1.max_violation).max(r2.max_violation);
        let r3 = validate_condition3(c, g, &t);
        assert!(r3.pass, "condition (3) failed: {:.3e}", r3.max_violation);
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "criterion 1 exceeded 10 s: {elapsed:?}"
    );
    println!(
        "criterion 01 PASS: HP axioms on {} models, conditions (1),(2) <= {:.1e}, (3) fiberwise at 256 samples, {:.2}s",
        models.len(),
        max12,
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_02_q_lemma() {
    let g = grid();
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut models: Vec<HPComplexData> = suspension_suite();
    models.extend(random_suite().into_iter().map(|(c, _)| c));
    for c in &models {
        let rep = lemma_q_identities(c, g, &t);
        assert!(rep.pass, "Q-lemma failed: {:.3e}", rep.max_violation);
        worst = worst.max(rep.max_violation);
    }
    println!(
        "criterion 02 PASS: Q(b)^2 = 0 and Q(b+b*) = Q(b)+Q(b*) within {:.1e} <= 1e-8 on {} models",
        worst,
        models.len()
    );
}

#[test]
fn criterion_03_acyclic_iff_b_invertible() {
    let g = grid();
    let t = tol();
    let suite = random_suite();
    for (c, expect_acyclic) in &suite {
        let rep = check_acyclic_iff_b_invertible(c, g, &t);
        assert!(rep.pass, "biconditional failed fiber-exactly");
        // the generator's intent matches the fiberwise verdict
        let fc = c.fiber(0.0);
        let acyclic = fc.cohomology_dims(t.svd_threshold).iter().all(|d| *d == 0);
        assert_eq!(acyclic, *expect_acyclic, "generator contract");
    }
    println!(
        "criterion 03 PASS: acyclicity iff B invertible, fiber-exact on {} random complexes (10 acyclic + 10 not)",
        suite.len()
    );
}

#[test]
fn criterion_04_circle_closed_form() {
    let g = grid();
    let t = tol();
    let m = suspension_model(&Permutation::identity(1), 1).unwrap();
    let sig = signature_unitary(&m.complex, g, &t).unwrap();
    assert!(sig.u.validate(&t).pass);
    let mut det_dev: f64 = 0.0;
    let mut entry_dev: f64 = 0.0;
    for (theta, u) in &sig.u.samples {
        let z = C64::from_polar(1.0, *theta);
        let zb = z.conj();
        let d0 = (zb * 3.0 - C64::new(1.0, 0.0)) / (zb - C64::new(3.0, 0.0));
        let d1 = (z * 3.0 - C64::new(1.0, 0.0)) / (z - C64::new(3.0, 0.0));
        entry_dev = entry_dev
            .max((u[(0, 0)] - d0).norm())
            .max((u[(1, 1)] - d1).norm())
            .max(u[(0, 1)].norm())
            .max(u[(1, 0)].norm());
        let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
        det_dev = det_dev.max((det - C64::new(1.0, 0.0)).norm());
    }
    assert!(det_dev <= 1e-9, "det not identically 1: {det_dev:.3e}");
    assert!(entry_dev <= 1e-9, "closed form violated: {entry_dev:.3e}");
    assert_eq!(winding_number(&sig.u).unwrap().winding, 0);
    let diag_winding = |idx: usize| {
        let u = UnitaryLoop {
            kind: AlgebraKind::Loop,
            algebra_dim: 1,
            dim: 1,
            samples: sig
                .u
                .samples
                .iter()
                .map(|(th, m)| (*th, nalgebra::DMatrix::from_row_slice(1, 1, &[m[(idx, idx)]])))
                .collect(),
        };
        winding_number(&u).unwrap().winding
    };
    let (w0, w1) = (diag_winding(0), diag_winding(1));
    assert!(
        (w0 == 1 && w1 == -1) || (w0 == -1 && w1 == 1),
        "diagonal windings must be +1 and -1, got {w0}, {w1}"
    );
    println!(
        "criterion 04 PASS: circle signature unitary matches (3z-1)/(z-3) closed form (dev {:.1e}), det = 1 within {:.1e}, winding 0, diagonal windings {w0}/{w1}",
        entry_dev, det_dev
    );
}

#[test]
fn criterion_05_homsign_mechanism() {
    let started = Instant::now();
    let g = grid();
    let t = tol();
    let circle1 = suspension_model(&Permutation::identity(1), 1).unwrap();
    let circle2 = suspension_model(&Permutation::identity(1), 2).unwrap();
    let sigma = Permutation::from_cycles_str("(1 2)", 3).unwrap();
    let tau = Permutation::from_cycles_str("(2 3)", 3).unwrap();
    let sigma2 = Permutation::from_cycles_str("(1 2 3)", 0).unwrap();
    let tau2 = Permutation::from_cycles_str("(1 2)", 3).unwrap();
    let equivalences: Vec<(&str, ChainMap)> = vec![
        ("subdivision k=1->2", subdivision_equivalence(&circle1, 2).unwrap()),
        ("subdivision k=2->4", subdivision_equivalence(&circle2, 2).unwrap()),
        (
            "conjugation (1 2) by (2 3)",
            conjugation_isomorphism(&sigma, &tau, 1).unwrap(),
        ),
        (
            "conjugation (1 2 3) by (1 2)",
            conjugation_isomorphism(&sigma2, &tau2, 1).unwrap(),
        ),
    ];
    for (name, a) in &equivalences {
        // stage-by-stage: conditions (1),(2) at all 3 x 33 points <= 1e-10
        let stages = [
            path_stage1(a).unwrap(),
            path_stage2(a).unwrap(),
            path_stage3(a).unwrap(),
        ];
        for st in &stages {
            for rep in validate_path(st, 33, g, &t) {
                assert!(rep.pass, "{name}: {} failed ({:.3e})", rep.check, rep.max_violation);
                if rep.check.ends_with("condition1") || rep.check.ends_with("condition2") {
                    assert!(rep.max_violation <= 1e-10, "{name}: {}", rep.check);
                }
            }
        }
        let ep = path_endpoints_check(&stages[0], &stages[1], &stages[2], &t);
        assert!(ep.pass && ep.max_violation <= 1e-12, "{name}: endpoints");
        // direct-sum winding zero and equal endpoint windings
        let sum = a.source.direct_sum(&a.target, true).unwrap();
        assert_eq!(signature_winding(&sum, g, &t).unwrap(), 0, "{name}: sum winding");
        let w1 = signature_winding(&a.source, g, &t).unwrap();
        let w2 = signature_winding(&a.target, g, &t).unwrap();
        assert_eq!(w1, w2, "{name}: endpoint windings");
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "criterion 5 exceeded 30 s: {elapsed:?}"
    );
    println!(
        "criterion 05 PASS: 3x33 path points valid (<= 1e-10), endpoints <= 1e-12, direct-sum winding 0, endpoint windings equal on {} equivalences, {:.2}s",
        equivalences.len(),
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_06_resolvent_inequality() {
    let g = grid();
    let t = tol();
    let m = suspension_model(&Permutation::identity(1), 1).unwrap();
    let c = m.complex.clone();
    let b = c.build_b_operator();
    let s = c.build_s_operator().unwrap();
    let s_path = |x: f64| s.scale(C64::new(x, 0.0));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let s1: f64 = rng.gen_range(0.0..1.0);
        let s2: f64 = rng.gen_range(0.0..1.0);
        let mu = if i % 2 == 0 { 1.0 } else { 0.5 };
        let rep = resolvent_continuity_check(&b, &s_path, mu, s1, s2, g, &t).unwrap();
        assert!(
            rep.pass && rep.max_violation <= 1e-8,
            "resolvent failed at (s1={s1:.3}, s2={s2:.3}, mu={mu}): {:.3e}",
            rep.max_violation
        );
        worst = worst.max(rep.max_violation);
    }
    println!(
        "criterion 06 PASS: resolvent identity and bound within {worst:.1e} <= 1e-8 for 20 random (s1, s2, mu)"
    );
}

#[test]
fn criterion_07_groupoid_identities() {
    let groupoids = [
        DiscreteGroupoid::pair(2),
        DiscreteGroupoid::pair(3),
        DiscreteGroupoid::graded(Permutation::identity(1)),
    ];
    let band = 3i64;
    let mut worst: f64 = 0.0;
    for g in &groupoids {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f = GroupoidMorphism::identity(g);
        for _ in 0..20 {
            // innprod / rtact compatibility
            let x1 = random_conv_element(&mut rng, g, band);
            let x2 = random_conv_element(&mut rng, g, band);
            let h = random_conv_element(&mut rng, g, band);
            let lhs =
                module_inner_product(&x1, &module_right_action(&x2, &h).unwrap()).unwrap();
            let rhs = convolve(&module_inner_product(&x1, &x2).unwrap(), &h).unwrap();
            worst = worst.max(lhs.max_abs_diff(&rhs));

            // composition balance (the lhs/rhs bookkeeping of the bimodule product)
            let xi = random_bimodule_element(&mut rng, &f, band);
            let eta = random_bimodule_element(&mut rng, &f, band);
            let phi = random_conv_element(&mut rng, g, band);
            let l = xi_composition(&bimodule_right_action(&xi, &phi).unwrap(), &eta).unwrap();
            let r = xi_composition(&xi, &pi_f(&phi, &eta).unwrap()).unwrap();
            worst = worst.max(l.max_abs_diff(&r));

            // theta identity
            let z = random_bimodule_element(&mut rng, &f, band);
            let rep = star_theta_identity(&xi, &eta, &z, 1e-12).unwrap();
            assert!(rep.pass);
            worst = worst.max(rep.max_violation);

            // Iso inner-product law
            let prod = xi_composition(&xi, &eta).unwrap();
            let l = bimodule_inner_product(&prod, &prod).unwrap();
            let gram = bimodule_inner_product(&xi, &xi).unwrap();
            let r = bimodule_inner_product(&eta, &pi_f(&gram, &eta).unwrap()).unwrap();
            worst = worst.max(l.max_abs_diff(&r));

            // Lambda isometry with unit path data
            let units: Vec<Arrow> = (0..g.n_objects).map(|x| g.unit(x)).collect();
            let lx = morita_lambda(&xi, &units).unwrap();
            let le = morita_lambda(&eta, &units).unwrap();
            let l = module_inner_product(&lx, &le).unwrap();
            let r = bimodule_inner_product(&xi, &eta).unwrap();
            worst = worst.max(l.max_abs_diff(&r));

            // theta_h^s round trip (a shifted stage on the graded groupoid,
            // units otherwise)
            let gamma_s: Vec<Arrow> = match &g.kind {
                GroupoidKind::Graded(_) => (0..g.n_objects)
                    .map(|x| Arrow::Graded { grade: 2, source: x })
                    .collect(),
                GroupoidKind::Pair => units.clone(),
            };
            if matches!(g.kind, GroupoidKind::Graded(_)) || true {
                let xi_c = random_conv_element(&mut rng, g, band);
                let up = theta_h_s(&xi_c, &f, &gamma_s).unwrap();
                let down = theta_h_s_adjoint(&up, &gamma_s).unwrap();
                worst = worst.max(down.max_abs_diff(&xi_c));
            }
        }
    }
    assert!(worst <= 1e-12, "groupoid identities violated: {worst:.3e}");
    println!(
        "criterion 07 PASS: groupoid identities exact within {worst:.1e} <= 1e-12 on 20+ random elements per groupoid"
    );
}

#[test]
fn criterion_08_smoothing_lemma() {
    let g = grid();
    let t = tol();
    let phis = [
        SmoothingPolynomial::one_minus_x(),
        SmoothingPolynomial::one_minus_x_squared(),
        SmoothingPolynomial::one_minus_x_over_8(),
    ];
    let models = [
        suspension_model(&Permutation::identity(1), 1).unwrap().complex,
        suspension_model(&Permutation::identity(1), 2).unwrap().complex,
        suspension_model(&Permutation::from_cycles_str("(1 2)", 0).unwrap(), 1)
            .unwrap()
            .complex,
        random_hp_complex(42, &[2, 3, 3, 2], false).unwrap(),
    ];
    let mut worst_comm: f64 = 0.0;
    let mut worst_coh: f64 = 0.0;
    let mut worst_homotopy: f64 = 0.0;
    for c in &models {
        for phi in &phis {
            let rep = phi_commutation_report(phi, c, &t);
            assert!(rep.pass && rep.max_violation <= 1e-12, "commutation");
            worst_comm = worst_comm.max(rep.max_violation);
            let rep = phi_cohomology_identity_report(phi, c, g, &t);
            assert!(rep.pass && rep.max_violation <= 1e-8, "cohomology identity");
            worst_coh = worst_coh.max(rep.max_violation);
            let rep = chain_homotopy_identity(phi, c, &t);
            assert!(rep.pass && rep.max_violation <= 1e-10, "psi homotopy identity");
            worst_homotopy = worst_homotopy.max(rep.max_violation);
        }
    }
    println!(
        "criterion 08 PASS: phi(Delta) commutes within {worst_comm:.1e} <= 1e-12, induces identity within {worst_coh:.1e} <= 1e-8, psi identity within {worst_homotopy:.1e} <= 1e-10"
    );
}

#[test]
fn criterion_09_pullback_and_functoriality() {
    let g = grid();
    let t = tol();
    let coarse = suspension_model(&Permutation::identity(1), 1).unwrap();
    let mid = suspension_model(&Permutation::identity(1), 2).unwrap();
    let a1 = subdivision_equivalence(&coarse, 2).unwrap();
    let a2 = subdivision_equivalence(&mid, 2).unwrap();
    let g_data = PullbackData::from_chain_map(&a1);
    let f_data = PullbackData::from_chain_map(&a2);

    let rep = pullback_phi_independence(
        &g_data,
        &SmoothingPolynomial::one_minus_x(),
        &SmoothingPolynomial::one_minus_x_over_8(),
        g,
        &t,
    )
    .unwrap();
    assert!(rep.pass && rep.max_violation <= 1e-8, "phi independence");
    let phi_ind = rep.max_violation;

    let rep =
        functoriality_check(&f_data, &g_data, &SmoothingPolynomial::one_minus_x_over_8(), g, &t)
            .unwrap();
    assert!(rep.pass && rep.max_violation <= 1e-8, "functoriality");
    println!(
        "criterion 09 PASS: phi-independence within {phi_ind:.1e} and functoriality within {:.1e}, both <= 1e-8, on k=1->2->4",
        rep.max_violation
    );
}

#[test]
fn criterion_10_poincare_and_duality_compat() {
    let g = grid();
    let t = tol();
    let coarse = suspension_model(&Permutation::identity(1), 1).unwrap();
    let rt = subdivision_round_trip(&coarse, 2).unwrap();
    let mut worst_id: f64 = 0.0;
    let mut worst_coh: f64 = 0.0;
    for phi in [
        SmoothingPolynomial::one(),
        SmoothingPolynomial::one_minus_x(),
        SmoothingPolynomial::one_minus_x_squared(),
        SmoothingPolynomial::one_minus_x_over_8(),
    ] {
        let reps = poincare_identity_check(
            &rt.fine,
            &rt.projection,
            &phi,
            std::slice::from_ref(&rt.prism),
            g,
            &t,
        );
        assert!(reps[0].pass && reps[0].max_violation <= 1e-10, "Poincare identity");
        assert!(reps[1].pass && reps[1].max_violation <= 1e-8, "round trip on cohomology");
        worst_id = worst_id.max(reps[0].max_violation);
        worst_coh = worst_coh.max(reps[1].max_violation);
    }

    let a = subdivision_equivalence(&coarse, 2).unwrap();
    let f_data = PullbackData::from_chain_map(&a);
    let phi = SmoothingPolynomial::one_minus_x_over_8();
    let rep = duality_compat_check(&f_data, &phi, false, g, &t).unwrap();
    assert!(rep.pass && rep.max_violation <= 1e-8, "duality compatibility");
    let compat = rep.max_violation;
    let control = duality_compat_check(&f_data, &phi, true, g, &t).unwrap();
    assert!(!control.pass, "negated sign control must fail as designed");
    println!(
        "criterion 10 PASS: Poincare identity within {worst_id:.1e} <= 1e-10, duality compatibility within {compat:.1e} <= 1e-8, sign control fails as designed"
    );
}

#[test]
fn criterion_11_cli_determinism() {
    use std::process::Command;
    let started = Instant::now();
    let bin = env!("CARGO_BIN_EXE_hpcomplex");
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);

    let run = |args: &[&str]| {
        let out = Command::new(bin)
            .args(args)
            .output()
            .expect("binary runs");
        (out.status.code().unwrap_or(-1), out.stdout)
    };

    // generate inputs once
    let gen = run(&[
        "model-gen",
        "--sigma",
        "(1 2)(3)",
        "--k",
        "1",
        "--subdivide",
        "2",
        "--out",
        p("m.json").to_str().unwrap(),
        "--fine-out",
        p("fine.json").to_str().unwrap(),
        "--chainmap-out",
        p("cm.json").to_str().unwrap(),
        "--morphism-out",
        p("morph.json").to_str().unwrap(),
    ]);
    assert_eq!(gen.0, 0);
    std::fs::write(
        p("groupoid.json"),
        r#"{"objects":[0],"kind":"z-graded","sigma":[0],"transversal":[0],"weights":{}}"#,
    )
    .unwrap();
    std::fs::write(
        p("morita.json"),
        r#"{"object_map":[0],"gamma":[{"kind":"graded","grade":1,"source":0}],"gamma_s":[[{"kind":"graded","grade":0,"source":0}],[{"kind":"graded","grade":1,"source":0}]]}"#,
    )
    .unwrap();

    let full_suite = || {
        let mut transcript = Vec::new();
        for args in [
            vec!["validate", p("m.json").to_str().unwrap(), "--seed", "0"],
            vec![
                "signature",
                p("m.json").to_str().unwrap(),
                "--seed",
                "0",
                "--out",
                p("u.json").to_str().unwrap(),
            ],
            vec!["winding", p("u.json").to_str().unwrap()],
            vec![
                "homotopy-verify",
                p("m.json").to_str().unwrap(),
                p("fine.json").to_str().unwrap(),
                p("cm.json").to_str().unwrap(),
                "--seed",
                "0",
            ],
            vec![
                "pullback-verify",
                p("m.json").to_str().unwrap(),
                p("morph.json").to_str().unwrap(),
                "--seed",
                "0",
            ],
            vec![
                "morita-verify",
                p("groupoid.json").to_str().unwrap(),
                p("morita.json").to_str().unwrap(),
                "--seed",
                "0",
            ],
        ] {
            let (code, stdout) = run(&args);
            assert_eq!(code, 0, "command {args:?} failed");
            transcript.extend_from_slice(&stdout);
        }
        transcript
    };

    let first = full_suite();
    let second = full_suite();
    assert_eq!(first, second, "reports are not byte-identical across runs");
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "criterion 11 exceeded 60 s: {elapsed:?}"
    );
    println!(
        "criterion 11 PASS: two full CLI runs with --seed 0 produced byte-identical reports ({} bytes), total {:.2}s < 60s",
        first.len(),
        elapsed.as_secs_f64()
    );
}
