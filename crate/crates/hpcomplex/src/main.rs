//! Command-line front end: model generation, validation, signature and
//! winding computation, homotopy / pull-back / Morita verification.
//!
//! JSON reports go to stdout (byte-identical for identical inputs and
//! seeds); a human summary with timings goes to stderr. Exit codes: 0 all
//! checks pass, 1 a check or precondition failed, 2 unreadable input.

use clap::{Parser, Subcommand};
use hpcomplex::groupoid::{
    bimodule_inner_product, bimodule_right_action, convolve, fiber_matrix, module_inner_product,
    module_right_action, morita_lambda, pi_f, random_bimodule_element, random_conv_element,
    star_theta_identity, theta_h_s, theta_h_s_adjoint, xi_composition, Arrow, DiscreteGroupoid,
    GroupoidMorphism,
};
use hpcomplex::homotopy::{signature_invariance, signature_winding_result, ChainMap};
use hpcomplex::hp::{
    check_acyclic_iff_b_invertible, lemma_q_identities, signature_unitary, validate_complex,
    validate_duality, validate_s_properties, HPComplexData, UnitaryLoop,
};
use hpcomplex::models::{
    self, subdivision_equivalence, subdivision_round_trip, suspension_model, SuspensionModel,
};
use hpcomplex::module::ModuleMap;
use hpcomplex::perm::Permutation;
use hpcomplex::report::{inputs_digest, CheckReport, Report};
use hpcomplex::smoothing::{
    chain_homotopy_identity, duality_compat_check, functoriality_check, laplacian_report,
    phi_cohomology_identity_report, phi_commutation_report, poincare_identity_check,
    pullback_phi_independence, PullbackData, SmoothingPolynomial,
};
use hpcomplex::tol::{SampleGrid, Tolerances};
use hpcomplex::winding::winding_number;
use hpcomplex::HpError;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "hpcomplex",
    about = "HP-complex validators, signature unitaries and K1 windings on discrete foliation models",
    version
)]
struct Cli {
    /// Sample grid size (overrides HP_SIG_SAMPLES; default 256)
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Seed for all generated randomness
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Tolerance overrides, repeatable: --tol name=value
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,

    /// Write the primary artifact (model, unitary, or report) to a file
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a suspension model, optionally with chain maps and morphism
    /// bundles against refinements or relabelings
    ModelGen {
        /// Permutation in cycle notation, e.g. "(1 2)(3)"
        #[arg(long)]
        sigma: String,
        /// Vertices per fundamental domain
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Also emit the subdivision by this factor
        #[arg(long)]
        subdivide: Option<usize>,
        /// With --subdivide/--tower: write the refined model here
        #[arg(long)]
        fine_out: Option<PathBuf>,
        /// With --subdivide/--conjugate: write the chain map here
        #[arg(long)]
        chainmap_out: Option<PathBuf>,
        /// With --subdivide/--tower: write a pull-back morphism bundle here
        #[arg(long)]
        morphism_out: Option<PathBuf>,
        /// Two refinement factors for a functoriality tower
        #[arg(long, num_args = 2, value_names = ["F1", "F2"])]
        tower: Option<Vec<usize>>,
        /// Relabel the points by this permutation instead of refining
        #[arg(long)]
        conjugate: Option<String>,
        /// With --conjugate: write the relabeled model here
        #[arg(long)]
        conj_out: Option<PathBuf>,
    },
    /// Run the HP axioms on a model file
    Validate { model: PathBuf },
    /// Compute the signature unitary and its winding
    Signature { model: PathBuf },
    /// Winding number of a unitary loop file
    Winding { unitary: PathBuf },
    /// Verify a homotopy equivalence end to end: paths, endpoints, windings
    HomotopyVerify {
        model_a: PathBuf,
        model_b: PathBuf,
        chainmap: PathBuf,
    },
    /// Verify smoothing and pull-back identities for a morphism bundle
    PullbackVerify { model: PathBuf, morphism: PathBuf },
    /// Verify the groupoid bimodule identities on random elements
    MoritaVerify {
        groupoid: PathBuf,
        morphisms: PathBuf,
    },
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

/// Bundle written by model-gen: complex plus groupoid and provenance.
#[derive(Serialize, Deserialize)]
struct ModelBundle {
    sigma: Option<String>,
    k: Option<usize>,
    model: HPComplexData,
    #[serde(skip_serializing_if = "Option::is_none")]
    groupoid: Option<DiscreteGroupoid>,
}

#[derive(Serialize, Deserialize)]
struct ChainMapFile {
    blocks: Vec<ModuleMap>,
}

#[derive(Serialize, Deserialize)]
struct RoundTripFile {
    projection: Vec<ModuleMap>,
    prism: Vec<ModuleMap>,
}

#[derive(Serialize, Deserialize)]
struct TowerFile {
    model: HPComplexData,
    psi_from_mid: Vec<ModuleMap>,
    psi_mid_to: Vec<ModuleMap>,
}

/// Morphism bundle consumed by pullback-verify; the base model file supplies
/// the coarse end.
#[derive(Serialize, Deserialize)]
struct MorphismBundle {
    to_model: HPComplexData,
    psi: Vec<ModuleMap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    roundtrip: Option<RoundTripFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mid: Option<TowerFile>,
}

/// Morphism data consumed by morita-verify.
#[derive(Serialize, Deserialize)]
struct MoritaMorphisms {
    object_map: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<Vec<Arrow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_s: Option<Vec<Vec<Arrow>>>,
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Accept either a bare complex or a model bundle.
fn load_model(path: &Path) -> Result<(HPComplexData, String), CliError> {
    let text = read_to_string(path)?;
    let digest = inputs_digest(&[text.as_bytes()]);
    if let Ok(bundle) = serde_json::from_str::<ModelBundle>(&text) {
        return Ok((bundle.model, digest));
    }
    let model: HPComplexData = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    Ok((model, digest))
}

// ---------------------------------------------------------------------------
// Error / exit-code plumbing
// ---------------------------------------------------------------------------

enum CliError {
    /// Unreadable or unparseable input: exit 2
    Parse(String),
    /// A precondition or computation failed: exit 1
    Check(String),
}

impl From<HpError> for CliError {
    fn from(e: HpError) -> Self {
        match e {
            HpError::Json(_) | HpError::Io(_) => CliError::Parse(e.to_string()),
            other => CliError::Check(other.to_string()),
        }
    }
}

fn write_out(out: &Option<PathBuf>, contents: &str) -> Result<(), CliError> {
    if let Some(path) = out {
        std::fs::write(path, contents)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn emit_report(report: &Report, started: Instant, out: &Option<PathBuf>) -> Result<i32, CliError> {
    let json = report.to_json();
    println!("{json}");
    eprint!("{}", report.render_human(started.elapsed()));
    write_out(out, &json)?;
    Ok(if report.pass { 0 } else { 1 })
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();

    let samples = cli
        .samples
        .or_else(|| {
            std::env::var("HP_SIG_SAMPLES")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(SampleGrid::DEFAULT_SAMPLES);
    let grid = SampleGrid::new(samples);

    let mut tol = Tolerances::default();
    for spec in &cli.tol {
        let parsed = spec
            .split_once('=')
            .and_then(|(name, value)| value.parse::<f64>().ok().map(|v| (name.to_string(), v)));
        match parsed {
            Some((name, value)) => {
                if let Err(e) = tol.set_by_name(&name, value) {
                    eprintln!("error: {e}");
                    std::process::exit(2);
                }
            }
            None => {
                eprintln!("error: --tol expects NAME=VALUE, got `{spec}`");
                std::process::exit(2);
            }
        }
    }

    let code = match run(&cli, grid, &tol, started) {
        Ok(code) => code,
        Err(CliError::Parse(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Check(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli, grid: SampleGrid, tol: &Tolerances, started: Instant) -> Result<i32, CliError> {
    match &cli.cmd {
        Cmd::ModelGen {
            sigma,
            k,
            subdivide,
            fine_out,
            chainmap_out,
            morphism_out,
            tower,
            conjugate,
            conj_out,
        } => cmd_model_gen(ModelGenArgs {
            sigma,
            k: *k,
            subdivide: *subdivide,
            tower: tower.as_deref(),
            conjugate: conjugate.as_deref(),
            out: &cli.out,
            fine_out,
            chainmap_out,
            morphism_out,
            conj_out,
        }),
        Cmd::Validate { model } => cmd_validate(model, grid, tol, cli.seed, started, &cli.out),
        Cmd::Signature { model } => cmd_signature(model, grid, tol, cli.seed, started, &cli.out),
        Cmd::Winding { unitary } => cmd_winding(unitary, &cli.out),
        Cmd::HomotopyVerify {
            model_a,
            model_b,
            chainmap,
        } => cmd_homotopy_verify(
            model_a, model_b, chainmap, grid, tol, cli.seed, started, &cli.out,
        ),
        Cmd::PullbackVerify { model, morphism } => {
            cmd_pullback_verify(model, morphism, grid, tol, cli.seed, started, &cli.out)
        }
        Cmd::MoritaVerify {
            groupoid,
            morphisms,
        } => cmd_morita_verify(groupoid, morphisms, tol, cli.seed, started, &cli.out),
    }
}

// ---------------------------------------------------------------------------
// model-gen
// ---------------------------------------------------------------------------

struct ModelGenArgs<'a> {
    sigma: &'a str,
    k: usize,
    subdivide: Option<usize>,
    tower: Option<&'a [usize]>,
    conjugate: Option<&'a str>,
    out: &'a Option<PathBuf>,
    fine_out: &'a Option<PathBuf>,
    chainmap_out: &'a Option<PathBuf>,
    morphism_out: &'a Option<PathBuf>,
    conj_out: &'a Option<PathBuf>,
}

fn cmd_model_gen(args: ModelGenArgs) -> Result<i32, CliError> {
    let sigma = Permutation::from_cycles_str(args.sigma, 0)
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let model = suspension_model(&sigma, args.k).map_err(CliError::from)?;
    let bundle_json = bundle_json_of(&model);
    match args.out {
        Some(_) => write_out(args.out, &bundle_json)?,
        None => println!("{bundle_json}"),
    }

    if let Some(tau_str) = args.conjugate {
        let tau = Permutation::from_cycles_str(tau_str, sigma.len())
            .map_err(|e| CliError::Parse(e.to_string()))?;
        let a = models::conjugation_isomorphism(&sigma, &tau, args.k).map_err(CliError::from)?;
        let conj_model =
            suspension_model(&sigma.conjugate_by(&tau), args.k).map_err(CliError::from)?;
        write_out(args.conj_out, &bundle_json_of(&conj_model))?;
        write_out(
            args.chainmap_out,
            &serde_json::to_string_pretty(&ChainMapFile {
                blocks: a.blocks.clone(),
            })
            .expect("serializes"),
        )?;
        return Ok(0);
    }

    if let Some(factors) = args.tower {
        let (f1, f2) = (factors[0], factors[1]);
        let mid = suspension_model(&sigma, args.k * f1).map_err(CliError::from)?;
        let fine = suspension_model(&sigma, args.k * f1 * f2).map_err(CliError::from)?;
        let a1 = subdivision_equivalence(&model, f1).map_err(CliError::from)?;
        let a2 = subdivision_equivalence(&mid, f2).map_err(CliError::from)?;
        let psi_full: Vec<ModuleMap> = (0..=1)
            .map(|p| a2.blocks[p].compose(&a1.blocks[p]))
            .collect();
        let rt = subdivision_round_trip(&model, f1 * f2).map_err(CliError::from)?;
        let bundle = MorphismBundle {
            to_model: fine.scalar_complex(),
            psi: psi_full,
            roundtrip: Some(RoundTripFile {
                projection: rt.projection.clone(),
                prism: vec![rt.prism.clone()],
            }),
            mid: Some(TowerFile {
                model: mid.scalar_complex(),
                psi_from_mid: a1.blocks.clone(),
                psi_mid_to: a2.blocks.clone(),
            }),
        };
        write_out(args.fine_out, &bundle_json_of(&fine))?;
        write_out(
            args.morphism_out,
            &serde_json::to_string_pretty(&bundle).expect("serializes"),
        )?;
        return Ok(0);
    }

    if let Some(factor) = args.subdivide {
        let fine = suspension_model(&sigma, args.k * factor).map_err(CliError::from)?;
        let a = subdivision_equivalence(&model, factor).map_err(CliError::from)?;
        let rt = subdivision_round_trip(&model, factor).map_err(CliError::from)?;
        write_out(args.fine_out, &bundle_json_of(&fine))?;
        write_out(
            args.chainmap_out,
            &serde_json::to_string_pretty(&ChainMapFile {
                blocks: a.blocks.clone(),
            })
            .expect("serializes"),
        )?;
        let bundle = MorphismBundle {
            to_model: fine.scalar_complex(),
            psi: a.blocks.clone(),
            roundtrip: Some(RoundTripFile {
                projection: rt.projection.clone(),
                prism: vec![rt.prism.clone()],
            }),
            mid: None,
        };
        write_out(
            args.morphism_out,
            &serde_json::to_string_pretty(&bundle).expect("serializes"),
        )?;
    }
    Ok(0)
}

fn bundle_json_of(model: &SuspensionModel) -> String {
    serde_json::to_string_pretty(&ModelBundle {
        sigma: Some(model.sigma.to_cycles_string()),
        k: Some(model.k),
        model: model.complex.clone(),
        groupoid: Some(model.groupoid.clone()),
    })
    .expect("model serializes")
}

// ---------------------------------------------------------------------------
// validate / signature / winding
// ---------------------------------------------------------------------------

fn cmd_validate(
    path: &Path,
    grid: SampleGrid,
    tol: &Tolerances,
    seed: u64,
    started: Instant,
    out: &Option<PathBuf>,
) -> Result<i32, CliError> {
    let (model, digest) = load_model(path)?;
    let mut report = Report::new("validate", digest, seed, grid.n);
    report.push(validate_complex(&model, tol));
    report.extend(validate_duality(&model, grid, tol));
    if model.n() % 2 == 1 {
        report.push(validate_s_properties(&model, tol).map_err(CliError::from)?);
    }
    report.push(lemma_q_identities(&model, grid, tol));
    report.push(check_acyclic_iff_b_invertible(&model, grid, tol));
    emit_report(&report, started, out)
}

#[derive(Serialize)]
struct SignatureOutput {
    report: Report,
    winding: i64,
    residual: f64,
    unitary: UnitaryLoop,
}

fn cmd_signature(
    path: &Path,
    grid: SampleGrid,
    tol: &Tolerances,
    seed: u64,
    started: Instant,
    out: &Option<PathBuf>,
) -> Result<i32, CliError> {
    let (model, digest) = load_model(path)?;
    if model.n() % 2 == 0 {
        return Err(CliError::Check(format!(
            "odd dimension required, model has n = {}",
            model.n()
        )));
    }
    let sig = signature_unitary(&model, grid, tol).map_err(CliError::from)?;
    let mut report = Report::new("signature", digest, seed, grid.n);
    report.push(sig.u.validate(tol));
    let w = match winding_number(&sig.u) {
        Ok(w) => w,
        Err(HpError::LoopTooWild { .. }) => {
            signature_winding_result(&model, grid, tol).map_err(CliError::from)?
        }
        Err(e) => return Err(e.into()),
    };
    report.push(
        CheckReport::new(
            "signature.winding_residual",
            w.residual,
            tol.winding_residual,
        )
        .with_note(format!("winding = {}", w.winding)),
    );
    let output = SignatureOutput {
        report: report.clone(),
        winding: w.winding,
        residual: w.residual,
        unitary: sig.u,
    };
    let json = serde_json::to_string_pretty(&output).expect("serializes");
    println!("{json}");
    eprint!("{}", report.render_human(started.elapsed()));
    write_out(
        out,
        &serde_json::to_string_pretty(&output.unitary).expect("serializes"),
    )?;
    Ok(if report.pass { 0 } else { 1 })
}

fn cmd_winding(path: &Path, out: &Option<PathBuf>) -> Result<i32, CliError> {
    let unitary: UnitaryLoop = parse_json(path)?;
    let w = winding_number(&unitary).map_err(CliError::from)?;
    let json = serde_json::to_string_pretty(&w).expect("serializes");
    println!("{json}");
    eprintln!("winding = {} (residual {:.3e})", w.winding, w.residual);
    write_out(out, &json)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// homotopy-verify
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_homotopy_verify(
    model_a: &Path,
    model_b: &Path,
    chainmap: &Path,
    grid: SampleGrid,
    tol: &Tolerances,
    seed: u64,
    started: Instant,
    out: &Option<PathBuf>,
) -> Result<i32, CliError> {
    let a_text = read_to_string(model_a)?;
    let b_text = read_to_string(model_b)?;
    let c_text = read_to_string(chainmap)?;
    let digest = inputs_digest(&[a_text.as_bytes(), b_text.as_bytes(), c_text.as_bytes()]);
    let (source, _) = load_model(model_a)?;
    let (target, _) = load_model(model_b)?;
    let cm_file: ChainMapFile = serde_json::from_str(&c_text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", chainmap.display())))?;
    let a = ChainMap::new(
        source.rebase_to_scalars(),
        target.rebase_to_scalars(),
        cm_file.blocks,
    )
    .map_err(CliError::from)?;
    let viol = a.chain_map_violation();
    if viol > 1e-10 {
        return Err(CliError::Check(format!(
            "not a chain map: max violation {viol:.3e}"
        )));
    }
    let mut report = Report::new("homotopy-verify", digest, seed, grid.n);
    report.extend(signature_invariance(&a, 33, grid, tol).map_err(CliError::from)?);
    emit_report(&report, started, out)
}

// ---------------------------------------------------------------------------
// pullback-verify
// ---------------------------------------------------------------------------

fn cmd_pullback_verify(
    model: &Path,
    morphism: &Path,
    grid: SampleGrid,
    tol: &Tolerances,
    seed: u64,
    started: Instant,
    out: &Option<PathBuf>,
) -> Result<i32, CliError> {
    let m_text = read_to_string(model)?;
    let mo_text = read_to_string(morphism)?;
    let digest = inputs_digest(&[m_text.as_bytes(), mo_text.as_bytes()]);
    let (coarse, _) = load_model(model)?;
    let coarse = coarse.rebase_to_scalars();
    let bundle: MorphismBundle = serde_json::from_str(&mo_text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", morphism.display())))?;
    let f_data = PullbackData {
        from: coarse.clone(),
        to: bundle.to_model.clone(),
        psi: bundle.psi.clone(),
    };
    let chain_viol = f_data.chain_violation();
    if chain_viol > 1e-10 {
        return Err(CliError::Check(format!(
            "psi is not a chain map: max violation {chain_viol:.3e}"
        )));
    }

    let mut report = Report::new("pullback-verify", digest, seed, grid.n);
    report.push(CheckReport::new("pullback.psi_chain_map", chain_viol, 1e-10));

    let phis = [
        SmoothingPolynomial::one_minus_x(),
        SmoothingPolynomial::one_minus_x_squared(),
        SmoothingPolynomial::one_minus_x_over_8(),
    ];
    for c in [&f_data.from, &f_data.to] {
        report.push(laplacian_report(c, tol));
        for phi in &phis {
            report.push(phi_commutation_report(phi, c, tol));
            report.push(phi_cohomology_identity_report(phi, c, grid, tol));
            report.push(chain_homotopy_identity(phi, c, tol));
        }
    }
    report.push(
        pullback_phi_independence(&f_data, &phis[0], &phis[2], grid, tol)
            .map_err(CliError::from)?,
    );
    report
        .push(duality_compat_check(&f_data, &phis[2], false, grid, tol).map_err(CliError::from)?);
    let control =
        duality_compat_check(&f_data, &phis[2], true, grid, tol).map_err(CliError::from)?;
    let mut control_rep = CheckReport::new(
        "pullback.duality_sign_control_fails",
        if control.pass { 1.0 } else { 0.0 },
        0.5,
    );
    control_rep.pass = !control.pass;
    report.push(control_rep.with_note("the deliberately negated comparison must fail"));

    if let Some(mid) = &bundle.mid {
        let g_data = PullbackData {
            from: coarse.clone(),
            to: mid.model.clone(),
            psi: mid.psi_from_mid.clone(),
        };
        let f2_data = PullbackData {
            from: mid.model.clone(),
            to: bundle.to_model.clone(),
            psi: mid.psi_mid_to.clone(),
        };
        report.push(
            functoriality_check(&f2_data, &g_data, &phis[2], grid, tol).map_err(CliError::from)?,
        );
    }
    if let Some(rt) = &bundle.roundtrip {
        for phi in &phis {
            report.extend(poincare_identity_check(
                &bundle.to_model,
                &rt.projection,
                phi,
                &rt.prism,
                grid,
                tol,
            ));
        }
    }
    emit_report(&report, started, out)
}

// ---------------------------------------------------------------------------
// morita-verify
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GroupoidFile {
    objects: Vec<usize>,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<Vec<usize>>,
    transversal: Vec<usize>,
    #[serde(default)]
    weights: std::collections::BTreeMap<String, f64>,
}

fn load_groupoid(path: &Path) -> Result<DiscreteGroupoid, CliError> {
    let gf: GroupoidFile = parse_json(path)?;
    let m = gf.objects.len();
    let mut g = match gf.kind.as_str() {
        "finite" => DiscreteGroupoid::pair(m),
        "z-graded" => {
            let images = gf
                .sigma
                .ok_or_else(|| CliError::Parse("z-graded groupoid needs sigma".into()))?;
            let sigma =
                Permutation::from_images(images).map_err(|e| CliError::Parse(e.to_string()))?;
            DiscreteGroupoid::graded(sigma)
        }
        other => return Err(CliError::Parse(format!("unknown groupoid kind `{other}`"))),
    };
    if !gf.transversal.is_empty() {
        g.transversal = gf.transversal;
    }
    for (key, v) in gf.weights {
        let idx: usize = key
            .parse()
            .map_err(|_| CliError::Parse(format!("bad weight key `{key}`")))?;
        if idx < g.weights.len() {
            g.weights[idx] = v;
        }
    }
    Ok(g)
}

fn cmd_morita_verify(
    groupoid: &Path,
    morphisms: &Path,
    tol: &Tolerances,
    seed: u64,
    started: Instant,
    out: &Option<PathBuf>,
) -> Result<i32, CliError> {
    let g_text = read_to_string(groupoid)?;
    let m_text = read_to_string(morphisms)?;
    let digest = inputs_digest(&[g_text.as_bytes(), m_text.as_bytes()]);
    let g = load_groupoid(groupoid)?;
    let data: MoritaMorphisms = serde_json::from_str(&m_text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", morphisms.display())))?;
    let f = GroupoidMorphism::new(&g, &g, data.object_map.clone()).map_err(CliError::from)?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let band = 3i64;
    let trials = 20;
    let mut report = Report::new("morita-verify", digest, seed, 1);

    // convolution realizes as matrices
    let mut viol: f64 = 0.0;
    for _ in 0..trials {
        let a = random_conv_element(&mut rng, &g, band);
        let b = random_conv_element(&mut rng, &g, band);
        let ab = convolve(&a, &b).map_err(CliError::from)?;
        for j in 0..8 {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / 8.0;
            let lhs = fiber_matrix(&ab, theta);
            let rhs = fiber_matrix(&a, theta) * fiber_matrix(&b, theta);
            viol = viol.max((lhs - rhs).norm());
        }
    }
    report.push(CheckReport::new(
        "groupoid.convolution_matrix_realization",
        viol,
        tol.groupoid,
    ));

    // inner product vs right action
    let mut viol: f64 = 0.0;
    for _ in 0..trials {
        let x1 = random_conv_element(&mut rng, &g, band);
        let x2 = random_conv_element(&mut rng, &g, band);
        let h = random_conv_element(&mut rng, &g, band);
        let lhs =
            module_inner_product(&x1, &module_right_action(&x2, &h).map_err(CliError::from)?)
                .map_err(CliError::from)?;
        let rhs = convolve(&module_inner_product(&x1, &x2).map_err(CliError::from)?, &h)
            .map_err(CliError::from)?;
        viol = viol.max(lhs.max_abs_diff(&rhs));
    }
    report.push(CheckReport::new(
        "groupoid.innprod_rtact_compatibility",
        viol,
        tol.groupoid,
    ));

    // composition balance law
    let mut viol: f64 = 0.0;
    for _ in 0..trials {
        let xi = random_bimodule_element(&mut rng, &f, band);
        let eta = random_bimodule_element(&mut rng, &f, band);
        let phi = random_conv_element(&mut rng, &g, band);
        let lhs = xi_composition(
            &bimodule_right_action(&xi, &phi).map_err(CliError::from)?,
            &eta,
        )
        .map_err(CliError::from)?;
        let rhs = xi_composition(&xi, &pi_f(&phi, &eta).map_err(CliError::from)?)
            .map_err(CliError::from)?;
        viol = viol.max(lhs.max_abs_diff(&rhs));
    }
    report.push(CheckReport::new(
        "groupoid.composition_balance",
        viol,
        tol.groupoid,
    ));

    // theta identity
    let mut viol: f64 = 0.0;
    let mut theta_pass = true;
    for _ in 0..trials {
        let e1 = random_bimodule_element(&mut rng, &f, band);
        let e2 = random_bimodule_element(&mut rng, &f, band);
        let z = random_bimodule_element(&mut rng, &f, band);
        let rep = star_theta_identity(&e1, &e2, &z, tol.groupoid).map_err(CliError::from)?;
        viol = viol.max(rep.max_violation);
        theta_pass &= rep.pass;
    }
    let mut theta_rep = CheckReport::new("groupoid.theta_identity", viol, tol.groupoid);
    theta_rep.pass = theta_pass;
    report.push(theta_rep);

    // Iso inner-product law
    let mut viol: f64 = 0.0;
    for _ in 0..trials {
        let xi = random_bimodule_element(&mut rng, &f, band);
        let eta = random_bimodule_element(&mut rng, &f, band);
        let prod = xi_composition(&xi, &eta).map_err(CliError::from)?;
        let lhs = bimodule_inner_product(&prod, &prod).map_err(CliError::from)?;
        let gram = bimodule_inner_product(&xi, &xi).map_err(CliError::from)?;
        let rhs = bimodule_inner_product(&eta, &pi_f(&gram, &eta).map_err(CliError::from)?)
            .map_err(CliError::from)?;
        viol = viol.max(lhs.max_abs_diff(&rhs));
    }
    report.push(CheckReport::new(
        "groupoid.iso_inner_product_law",
        viol,
        tol.groupoid,
    ));

    // Lambda isometry
    if let Some(gamma) = &data.gamma {
        let mut viol: f64 = 0.0;
        for _ in 0..trials {
            let xi = random_bimodule_element(&mut rng, &f, band);
            let eta = random_bimodule_element(&mut rng, &f, band);
            let lx = morita_lambda(&xi, gamma).map_err(CliError::from)?;
            let le = morita_lambda(&eta, gamma).map_err(CliError::from)?;
            let lhs = module_inner_product(&lx, &le).map_err(CliError::from)?;
            let rhs = bimodule_inner_product(&xi, &eta).map_err(CliError::from)?;
            viol = viol.max(lhs.max_abs_diff(&rhs));
        }
        report.push(CheckReport::new(
            "groupoid.lambda_isometry",
            viol,
            tol.groupoid,
        ));
    }

    // theta_h^s round trips and equivariance, one entry per stage
    if let Some(stages) = &data.gamma_s {
        let mut viol: f64 = 0.0;
        for gamma_s in stages {
            for _ in 0..trials {
                let xi = random_conv_element(&mut rng, &g, band);
                let up = theta_h_s(&xi, &f, gamma_s).map_err(CliError::from)?;
                let down = theta_h_s_adjoint(&up, gamma_s).map_err(CliError::from)?;
                viol = viol.max(down.max_abs_diff(&xi));
                let phi = random_conv_element(&mut rng, &g, band);
                let lhs = pi_f(&phi, &up).map_err(CliError::from)?;
                let rhs = theta_h_s(&convolve(&phi, &xi).map_err(CliError::from)?, &f, gamma_s)
                    .map_err(CliError::from)?;
                viol = viol.max(lhs.max_abs_diff(&rhs));
                let eta = random_bimodule_element(&mut rng, &f, band);
                let rt = theta_h_s(
                    &theta_h_s_adjoint(&eta, gamma_s).map_err(CliError::from)?,
                    &f,
                    gamma_s,
                )
                .map_err(CliError::from)?;
                viol = viol.max(rt.max_abs_diff(&eta));
            }
        }
        report.push(CheckReport::new(
            "groupoid.theta_stage_round_trip",
            viol,
            tol.groupoid,
        ));
    }

    emit_report(&report, started, out)
}
