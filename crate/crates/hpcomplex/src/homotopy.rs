//! Homotopy equivalences of HP complexes, the three explicit operator paths
//! of the signature-invariance theorem, per-sample validation along paths,
//! and the resolvent-continuity lemma.

use crate::error::HpError;
use crate::fiber;
use crate::hp::{
    signature_unitary, validate_condition1, validate_condition2, validate_condition3,
    HPComplexData,
};
use crate::module::ModuleMap;
use crate::report::CheckReport;
use crate::tol::{SampleGrid, Tolerances};
use crate::winding::winding_number_refined;
use crate::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A chain map `A: (E, b) -> (E', b')` with one block per degree.
#[derive(Debug, Clone)]
pub struct ChainMap {
    pub source: HPComplexData,
    pub target: HPComplexData,
    pub blocks: Vec<ModuleMap>,
}

impl ChainMap {
    pub fn new(
        source: HPComplexData,
        target: HPComplexData,
        blocks: Vec<ModuleMap>,
    ) -> Result<Self, HpError> {
        source.algebra.same_as(&target.algebra)?;
        if source.n() != target.n() {
            return Err(HpError::IncompatibleShapes(
                "chain map needs complexes of equal length".into(),
            ));
        }
        if blocks.len() != source.ranks.len() {
            return Err(HpError::IncompatibleShapes(format!(
                "need {} chain map blocks, got {}",
                source.ranks.len(),
                blocks.len()
            )));
        }
        for (p, m) in blocks.iter().enumerate() {
            if m.domain_rank != source.ranks[p] || m.codomain_rank != target.ranks[p] {
                return Err(HpError::IncompatibleShapes(format!(
                    "block {p} must map rank {} to rank {}",
                    source.ranks[p], target.ranks[p]
                )));
            }
        }
        Ok(ChainMap {
            source,
            target,
            blocks,
        })
    }

    pub fn identity(c: &HPComplexData) -> Self {
        let blocks = c
            .ranks
            .iter()
            .map(|r| ModuleMap::identity(&c.algebra, *r))
            .collect();
        ChainMap {
            source: c.clone(),
            target: c.clone(),
            blocks,
        }
    }

    /// `max_p || A b - b' A ||` coefficientwise.
    pub fn chain_map_violation(&self) -> f64 {
        let n = self.source.n();
        let mut acc: f64 = 0.0;
        for p in 0..n {
            let lhs = self.blocks[p + 1].compose(&self.source.b[p]);
            let rhs = self.target.b[p].compose(&self.blocks[p]);
            acc = acc.max(lhs.max_coeff_abs_diff(&rhs));
        }
        acc
    }

    /// `A T A*` degreewise: `A_{n-p} . T_p . A_p*`.
    pub fn conjugated_duality(&self, p: usize) -> ModuleMap {
        let n = self.source.n();
        self.blocks[n - p]
            .compose(&self.source.t[p])
            .compose(&self.blocks[p].adjoint())
    }

    /// `(T A*)_p : E'_p -> E_{n-p}`.
    pub fn t_a_star(&self, p: usize) -> ModuleMap {
        self.source.t[p].compose(&self.blocks[p].adjoint())
    }

    /// `(A T)_p : E_p -> E'_{n-p}`.
    pub fn a_t(&self, p: usize) -> ModuleMap {
        let n = self.source.n();
        self.blocks[n - p].compose(&self.source.t[p])
    }
}

#[derive(Serialize, Deserialize)]
struct ChainMapWire {
    blocks: Vec<ModuleMap>,
}

impl ChainMap {
    pub fn blocks_to_json(&self) -> String {
        serde_json::to_string_pretty(&ChainMapWire {
            blocks: self.blocks.clone(),
        })
        .expect("chain map serializes")
    }

    pub fn from_blocks_json(
        source: HPComplexData,
        target: HPComplexData,
        json: &str,
    ) -> Result<Self, HpError> {
        let wire: ChainMapWire = serde_json::from_str(json)?;
        ChainMap::new(source, target, wire.blocks)
    }
}

/// Fiberwise verification that `A` is a homotopy equivalence of HP
/// complexes: chain-map identity, `A_*` iso on cohomology, and
/// `(A T A*)_* = T'_*` on harmonic representatives.
pub fn verify_homotopy_equivalence(
    a: &ChainMap,
    grid: SampleGrid,
    tol: &Tolerances,
) -> Vec<CheckReport> {
    let chain = CheckReport::new("homotopy.chain_map", a.chain_map_violation(), tol.coeff);

    let n = a.source.n();
    let fibers = a.source.fiber_count(grid);
    let mut iso_per_fiber = Vec::with_capacity(fibers);
    let mut dual_per_fiber = Vec::with_capacity(fibers);
    let mut iso_pass = true;
    for j in 0..fibers {
        let theta = grid.theta(j);
        let fs = a.source.fiber(theta);
        let ft = a.target.fiber(theta);
        let mut iso_viol: f64 = 0.0;
        let mut dual_viol: f64 = 0.0;
        for k in 0..=n {
            let harm_s = fs.harmonic(k, tol.svd_threshold);
            let harm_t = ft.harmonic(k, tol.svd_threshold);
            let ak = a.blocks[k].evaluate_total(theta);
            // A_* on cohomology
            if harm_s.ncols() != harm_t.ncols() {
                iso_pass = false;
            } else if harm_s.ncols() > 0 {
                let image = &ak * &harm_s;
                iso_viol = iso_viol.max(ft.primal_cocycle_residual(k, &image));
                let (coeffs, _) = fiber::project(&harm_t, &image);
                if fiber::min_singular_value(&coeffs) <= tol.induced_iso_min {
                    iso_pass = false;
                }
            }
            // (A T A*)_* against T'_* on H^k(E',b') -> H^{n-k}(E', b'*)
            if harm_t.ncols() > 0 {
                let harm_t_dual = ft.harmonic(n - k, tol.svd_threshold);
                let w1 = a.conjugated_duality(k).evaluate_total(theta) * &harm_t;
                let w2 = &ft.t[k] * &harm_t;
                dual_viol = dual_viol.max(ft.dual_cocycle_residual(n - k, &w1));
                dual_viol = dual_viol.max(ft.dual_cocycle_residual(n - k, &w2));
                let (c1, _) = fiber::project(&harm_t_dual, &w1);
                let (c2, _) = fiber::project(&harm_t_dual, &w2);
                dual_viol = dual_viol.max((c1 - c2).norm());
            }
        }
        iso_per_fiber.push(iso_viol);
        dual_per_fiber.push(dual_viol);
    }

    let iso_max = iso_per_fiber.iter().copied().fold(0.0, f64::max);
    let mut iso_rep = CheckReport::new(
        "homotopy.a_star_cohomology_iso",
        iso_max,
        tol.cohomology_map,
    )
    .with_per_fiber(iso_per_fiber);
    iso_rep.pass = iso_pass && iso_max <= tol.cohomology_map;

    let dual_max = dual_per_fiber.iter().copied().fold(0.0, f64::max);
    let dual_rep = CheckReport::new(
        "homotopy.ata_star_matches_t_prime",
        dual_max,
        tol.cohomology_map,
    )
    .with_per_fiber(dual_per_fiber);

    vec![chain, iso_rep, dual_rep]
}

// ---------------------------------------------------------------------------
// The three operator paths
// ---------------------------------------------------------------------------

type DualityFamily = Box<dyn Fn(f64) -> Vec<ModuleMap>>;

/// A parametrized family of duality blocks on the direct sum `E + E'` with
/// fixed differential; stages 1-3 below realize the signature-invariance
/// paths.
pub struct DualityPath {
    pub stage: u8,
    pub s_range: (f64, f64),
    base: HPComplexData,
    family: DualityFamily,
}

impl DualityPath {
    /// A custom family of duality blocks over a fixed complex; stages 1-3
    /// below are the built-in instances.
    pub fn new(
        stage: u8,
        s_range: (f64, f64),
        base: HPComplexData,
        family: impl Fn(f64) -> Vec<ModuleMap> + 'static,
    ) -> Self {
        DualityPath {
            stage,
            s_range,
            base,
            family: Box::new(family),
        }
    }

    /// HP complex at parameter `s`.
    pub fn complex_at(&self, s: f64) -> HPComplexData {
        let mut c = self.base.clone();
        c.t = (self.family)(s);
        c
    }

    pub fn sample_points(&self, n_s: usize) -> Vec<f64> {
        let (a, b) = self.s_range;
        if n_s <= 1 {
            return vec![a];
        }
        (0..n_s)
            .map(|j| a + (b - a) * (j as f64) / ((n_s - 1) as f64))
            .collect()
    }
}

fn direct_sum_shell(a: &ChainMap) -> Result<HPComplexData, HpError> {
    // duality blocks get replaced by the family; start from T + (-T')
    a.source.direct_sum(&a.target, true)
}

fn sum_block(
    a: &ChainMap,
    p: usize,
    x: Option<&ModuleMap>,
    y: Option<&ModuleMap>,
    z: Option<&ModuleMap>,
    w: Option<&ModuleMap>,
) -> ModuleMap {
    let n = a.source.n();
    ModuleMap::from_grid(
        &a.source.algebra,
        &[a.source.ranks[n - p], a.target.ranks[n - p]],
        &[a.source.ranks[p], a.target.ranks[p]],
        &[vec![x, y], vec![z, w]],
    )
}

/// Stage 1: `diag(T, (s-1) T' - s A T A*)` for `s` in `[0, 1]`, joining
/// `T + (-T')` to `T + (-A T A*)`.
pub fn path_stage1(a: &ChainMap) -> Result<DualityPath, HpError> {
    let base = direct_sum_shell(a)?;
    let a = a.clone();
    let n = a.source.n();
    let family: DualityFamily = Box::new(move |s| {
        (0..=n)
            .map(|p| {
                let w = a.target.t[p]
                    .scale(C64::new(s - 1.0, 0.0))
                    .add(&a.conjugated_duality(p).scale(C64::new(-s, 0.0)));
                sum_block(&a, p, Some(&a.source.t[p]), None, None, Some(&w))
            })
            .collect()
    });
    Ok(DualityPath {
        stage: 1,
        s_range: (0.0, 1.0),
        base,
        family,
    })
}

/// Stage 2: `[[cos(s) T, sin(s) T A*], [sin(s) A T, -cos(s) A T A*]]` for
/// `s` in `[0, pi/2]`.
pub fn path_stage2(a: &ChainMap) -> Result<DualityPath, HpError> {
    let base = direct_sum_shell(a)?;
    let a = a.clone();
    let n = a.source.n();
    let family: DualityFamily = Box::new(move |s| {
        (0..=n)
            .map(|p| {
                let x = a.source.t[p].scale(C64::new(s.cos(), 0.0));
                let y = a.t_a_star(p).scale(C64::new(s.sin(), 0.0));
                let z = a.a_t(p).scale(C64::new(s.sin(), 0.0));
                let w = a.conjugated_duality(p).scale(C64::new(-s.cos(), 0.0));
                sum_block(&a, p, Some(&x), Some(&y), Some(&z), Some(&w))
            })
            .collect()
    });
    Ok(DualityPath {
        stage: 2,
        s_range: (0.0, std::f64::consts::FRAC_PI_2),
        base,
        family,
    })
}

/// Stage 3: `[[0, e^{is} T A*], [e^{-is} A T, 0]]` for `s` in `[0, pi]`,
/// ending at the additive inverse of its start.
pub fn path_stage3(a: &ChainMap) -> Result<DualityPath, HpError> {
    let base = direct_sum_shell(a)?;
    let a = a.clone();
    let n = a.source.n();
    let family: DualityFamily = Box::new(move |s| {
        (0..=n)
            .map(|p| {
                let y = a.t_a_star(p).scale(C64::from_polar(1.0, s));
                let z = a.a_t(p).scale(C64::from_polar(1.0, -s));
                sum_block(&a, p, None, Some(&y), Some(&z), None)
            })
            .collect()
    });
    Ok(DualityPath {
        stage: 3,
        s_range: (0.0, std::f64::consts::PI),
        base,
        family,
    })
}

/// Run `validate_duality` at `n_s` parameter samples along the path, plus a
/// norm-continuity surrogate `||T_{s_{j+1}} - T_{s_j}|| <= C ds` with the
/// observed `C` reported.
pub fn validate_path(
    path: &DualityPath,
    n_s: usize,
    grid: SampleGrid,
    tol: &Tolerances,
) -> Vec<CheckReport> {
    let points = path.sample_points(n_s);
    let mut cond1: f64 = 0.0;
    let mut cond2: f64 = 0.0;
    let mut cond3: f64 = 0.0;
    let mut cond3_pass = true;
    let mut per_s = Vec::with_capacity(points.len());
    for s in &points {
        let c = path.complex_at(*s);
        let r1 = validate_condition1(&c, tol.path_cond12);
        let r2 = validate_condition2(&c, tol.path_cond12);
        let r3 = validate_condition3(&c, grid, tol);
        cond1 = cond1.max(r1.max_violation);
        cond2 = cond2.max(r2.max_violation);
        cond3 = cond3.max(r3.max_violation);
        cond3_pass &= r3.pass;
        per_s.push(r1.max_violation.max(r2.max_violation).max(r3.max_violation));
    }
    // continuity surrogate
    let mut lipschitz: f64 = 0.0;
    let fibers = path.base.fiber_count(grid);
    for w in points.windows(2) {
        let ds = (w[1] - w[0]).abs().max(f64::EPSILON);
        let t0 = path.complex_at(w[0]);
        let t1 = path.complex_at(w[1]);
        let mut step: f64 = 0.0;
        for p in 0..t0.t.len() {
            let diff = t1.t[p].sub(&t0.t[p]);
            for j in 0..fibers {
                step = step.max(fiber::spectral_norm(&diff.evaluate_total(grid.theta(j))));
            }
        }
        lipschitz = lipschitz.max(step / ds);
    }

    let stage = path.stage;
    let mut c3 = CheckReport::new(
        format!("path.stage{stage}.condition3"),
        cond3,
        tol.cohomology_map,
    )
    .with_per_fiber(per_s);
    c3.pass = cond3_pass && cond3 <= tol.cohomology_map;
    vec![
        CheckReport::new(format!("path.stage{stage}.condition1"), cond1, tol.path_cond12),
        CheckReport::new(format!("path.stage{stage}.condition2"), cond2, tol.path_cond12),
        c3,
        CheckReport::new(format!("path.stage{stage}.continuity"), 0.0, 1.0)
            .with_note(format!("norm-continuity constant C = {lipschitz:.6}")),
    ]
}

/// Endpoint contract of the concatenated three-stage path:
/// `stage1(1) = stage2(0)`, `stage2(pi/2) = stage3(0)` and
/// `stage3(pi) = -stage3(0)`, coefficientwise.
pub fn path_endpoints_check(
    s1: &DualityPath,
    s2: &DualityPath,
    s3: &DualityPath,
    tol: &Tolerances,
) -> CheckReport {
    let mut viol: f64 = 0.0;
    let end1 = s1.complex_at(s1.s_range.1);
    let start2 = s2.complex_at(s2.s_range.0);
    let end2 = s2.complex_at(s2.s_range.1);
    let start3 = s3.complex_at(s3.s_range.0);
    let end3 = s3.complex_at(s3.s_range.1);
    for p in 0..end1.t.len() {
        viol = viol.max(end1.t[p].max_coeff_abs_diff(&start2.t[p]));
        viol = viol.max(end2.t[p].max_coeff_abs_diff(&start3.t[p]));
        viol = viol.max(
            end3.t[p].max_coeff_abs_diff(&start3.t[p].scale(C64::new(-1.0, 0.0))),
        );
    }
    CheckReport::new("path.stage_endpoints", viol, tol.endpoint)
}

/// The resolvent identity of the continuity lemma, fiberwise:
/// `R(s1) - R(s2) = R(s1)(S_{s2} - S_{s1})R(s2)` for
/// `R(s) = (B + S_s + i mu)^{-1}`, plus the norm inequality it implies.
pub fn resolvent_continuity_check(
    b: &ModuleMap,
    s_path: &dyn Fn(f64) -> ModuleMap,
    mu: f64,
    s1: f64,
    s2: f64,
    grid: SampleGrid,
    tol: &Tolerances,
) -> Result<CheckReport, HpError> {
    let fibers = b.algebra.fiber_count(grid);
    let sm1 = s_path(s1);
    let sm2 = s_path(s2);
    let mut per_fiber = Vec::with_capacity(fibers);
    for j in 0..fibers {
        let theta = grid.theta(j);
        let bm = b.evaluate_total(theta);
        let eye = DMatrix::<C64>::identity(bm.nrows(), bm.ncols());
        let m1 = &bm + sm1.evaluate_total(theta) + &eye * C64::new(0.0, mu);
        let m2 = &bm + sm2.evaluate_total(theta) + &eye * C64::new(0.0, mu);
        let r1 = m1
            .clone()
            .try_inverse()
            .ok_or(HpError::SingularFiber { fiber: j, theta })?;
        let r2 = m2
            .clone()
            .try_inverse()
            .ok_or(HpError::SingularFiber { fiber: j, theta })?;
        let ds = sm2.evaluate_total(theta) - sm1.evaluate_total(theta);
        let identity_resid = fiber::spectral_norm(&(&r1 - &r2 - &r1 * &ds * &r2));
        let lhs = fiber::spectral_norm(&(&r1 - &r2));
        let bound = fiber::spectral_norm(&ds)
            * fiber::spectral_norm(&r1)
            * fiber::spectral_norm(&r2);
        let ineq_excess = (lhs - bound).max(0.0);
        per_fiber.push(identity_resid.max(ineq_excess));
    }
    let max_violation = per_fiber.iter().copied().fold(0.0, f64::max);
    Ok(
        CheckReport::new("resolvent.identity_and_bound", max_violation, tol.resolvent)
            .with_per_fiber(per_fiber),
    )
}

/// Winding of the signature unitary, with grid refinement on demand.
/// Failures of the refined signature computation (a singular fiber on a
/// finer grid) propagate instead of being mistaken for a tame loop.
pub fn signature_winding_result(
    c: &HPComplexData,
    grid: SampleGrid,
    tol: &Tolerances,
) -> Result<crate::winding::WindingResult, HpError> {
    let mut failure: Option<HpError> = None;
    let res = winding_number_refined(c.algebra.kind, grid.n, |n| {
        match signature_unitary(c, SampleGrid::new(n), tol) {
            Ok(sig) => sig.u,
            Err(e) => {
                failure = Some(e);
                // empty placeholder; the failure is surfaced below
                crate::hp::UnitaryLoop {
                    kind: c.algebra.kind,
                    algebra_dim: c.algebra.dim(),
                    dim: 0,
                    samples: vec![],
                }
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    res
}

/// Winding of the signature unitary, with grid refinement on demand.
pub fn signature_winding(
    c: &HPComplexData,
    grid: SampleGrid,
    tol: &Tolerances,
) -> Result<i64, HpError> {
    signature_winding_result(c, grid, tol).map(|w| w.winding)
}

/// The full signature-invariance verdict for a homotopy equivalence:
/// (a) the flipped direct sum has signature winding zero, (b) the endpoint
/// windings agree, (c) the concatenated three-stage path stays a valid HP
/// complex, sampled at `n_s` points per stage.
pub fn signature_invariance(
    a: &ChainMap,
    n_s: usize,
    grid: SampleGrid,
    tol: &Tolerances,
) -> Result<Vec<CheckReport>, HpError> {
    let mut out = verify_homotopy_equivalence(a, grid, tol);

    // (a) flipped direct sum winds to zero
    let sum = a.source.direct_sum(&a.target, true)?;
    let w_sum = signature_winding(&sum, grid, tol)?;
    let mut rep = CheckReport::new("invariance.direct_sum_winding_zero", w_sum.abs() as f64, 0.5);
    rep = rep.with_note(format!("winding(sigma(E + E', T + -T')) = {w_sum}"));
    out.push(rep);

    // (b) endpoint windings agree
    let w1 = signature_winding(&a.source, grid, tol)?;
    let w2 = signature_winding(&a.target, grid, tol)?;
    let mut rep = CheckReport::new(
        "invariance.endpoint_windings_equal",
        (w1 - w2).abs() as f64,
        0.5,
    );
    rep = rep.with_note(format!("windings {w1} vs {w2}"));
    out.push(rep);

    // (c) the three stages
    let st1 = path_stage1(a)?;
    let st2 = path_stage2(a)?;
    let st3 = path_stage3(a)?;
    for st in [&st1, &st2, &st3] {
        out.extend(validate_path(st, n_s, grid, tol));
    }
    out.push(path_endpoints_check(&st1, &st2, &st3, tol));
    Ok(out)
}

/// Winding additivity in the form the invariance proof uses:
/// `w(c + c'_flipped) = w(c) - w(c')`.
pub fn direct_sum_winding_check(
    c: &HPComplexData,
    c2: &HPComplexData,
    grid: SampleGrid,
    tol: &Tolerances,
) -> Result<CheckReport, HpError> {
    let sum = c.direct_sum(c2, true)?;
    let w_sum = signature_winding(&sum, grid, tol)?;
    let w1 = signature_winding(c, grid, tol)?;
    let w2 = signature_winding(c2, grid, tol)?;
    let viol = (w_sum - (w1 - w2)).abs() as f64;
    Ok(CheckReport::new("invariance.winding_additivity", viol, 0.5)
        .with_note(format!("w(sum) = {w_sum}, w1 - w2 = {}", w1 - w2)))
}

/// Winding of the signature unitary at each sampled path parameter; the
/// invariance property asks these to be constant along every stage.
pub fn path_windings(
    path: &DualityPath,
    n_s: usize,
    grid: SampleGrid,
    tol: &Tolerances,
) -> Result<Vec<i64>, HpError> {
    path.sample_points(n_s)
        .into_iter()
        .map(|s| signature_winding(&path.complex_at(s), grid, tol))
        .collect()
}

pub use crate::winding::k1_equal;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::perm::Permutation;
    use crate::tol::SampleGrid;
    use crate::winding::winding_number;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn circle_signature_unitary_closed_form() {
        let m = models::suspension_model(&Permutation::identity(1), 1).unwrap();
        let grid = SampleGrid::new(64);
        let sig = signature_unitary(&m.complex, grid, &tol()).unwrap();
        assert!(sig.u.validate(&tol()).pass);
        for (theta, u) in &sig.u.samples {
            let z = C64::from_polar(1.0, *theta);
            let zb = z.conj();
            // diag((3 zbar - 1)/(zbar - 3), (3z - 1)/(z - 3)) with det 1
            let d0 = (zb * 3.0 - C64::new(1.0, 0.0)) / (zb - C64::new(3.0, 0.0));
            let d1 = (z * 3.0 - C64::new(1.0, 0.0)) / (z - C64::new(3.0, 0.0));
            assert!((u[(0, 0)] - d0).norm() < 1e-12);
            assert!((u[(1, 1)] - d1).norm() < 1e-12);
            assert!(u[(0, 1)].norm() < 1e-13 && u[(1, 0)].norm() < 1e-13);
            let det = u[(0, 0)] * u[(1, 1)];
            assert!((det - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert_eq!(winding_number(&sig.u).unwrap().winding, 0);
        // the diagonal entries individually wind +1 and -1
        for (idx, expect) in [(0usize, -1i64), (1usize, 1i64)] {
            let entry = crate::hp::UnitaryLoop {
                kind: crate::algebra::AlgebraKind::Loop,
                algebra_dim: 1,
                dim: 1,
                samples: sig
                    .u
                    .samples
                    .iter()
                    .map(|(t, m)| {
                        (*t, nalgebra::DMatrix::from_row_slice(1, 1, &[m[(idx, idx)]]))
                    })
                    .collect(),
            };
            assert_eq!(winding_number(&entry).unwrap().winding, expect);
        }
    }

    #[test]
    fn unitary_adjoint_is_the_inverse_cayley() {
        // U* = (B - S)(B + S)^{-1} pointwise
        let m = models::suspension_model(&Permutation::identity(1), 2).unwrap();
        let grid = SampleGrid::new(64);
        let sig = signature_unitary(&m.complex, grid, &tol()).unwrap();
        for (j, (theta, u)) in sig.u.samples.iter().enumerate() {
            let bm = sig.b.evaluate_total(*theta);
            let sm = sig.s.evaluate_total(*theta);
            let rhs = (&bm - &sm)
                * (&bm + &sm).try_inverse().unwrap_or_else(|| panic!("fiber {j}"));
            assert!(
                fiber::spectral_norm(&(u.adjoint() - rhs)) <= 1e-8,
                "U* mismatch at fiber {j}"
            );
        }
    }

    #[test]
    fn flipping_s_inverts_the_unitary() {
        let m = models::suspension_model(&Permutation::identity(1), 1).unwrap();
        let grid = SampleGrid::new(32);
        let c = m.complex.clone();
        let mut flipped = c.clone();
        for t in flipped.t.iter_mut() {
            *t = t.scale(C64::new(-1.0, 0.0));
        }
        let u = signature_unitary(&c, grid, &tol()).unwrap().u;
        let v = signature_unitary(&flipped, grid, &tol()).unwrap().u;
        for ((_, a), (_, b)) in u.samples.iter().zip(&v.samples) {
            assert!(((a * b) - nalgebra::DMatrix::<C64>::identity(a.nrows(), a.ncols())).norm() < 1e-9);
        }
    }

    #[test]
    fn identity_stage1_is_constant() {
        let m = models::suspension_model(&Permutation::identity(1), 1).unwrap();
        let a = ChainMap::identity(&m.scalar_complex());
        let st1 = path_stage1(&a).unwrap();
        let c0 = st1.complex_at(0.0);
        let c_half = st1.complex_at(0.5);
        for (x, y) in c0.t.iter().zip(&c_half.t) {
            assert!(x.max_coeff_abs_diff(y) < 1e-15);
        }
    }

    #[test]
    fn stage3_ends_at_additive_inverse() {
        let m = models::suspension_model(&Permutation::identity(1), 1).unwrap();
        let a = ChainMap::identity(&m.scalar_complex());
        let st3 = path_stage3(&a).unwrap();
        let start = st3.complex_at(0.0);
        let end = st3.complex_at(std::f64::consts::PI);
        for (x, y) in start.t.iter().zip(&end.t) {
            assert!(x.scale(C64::new(-1.0, 0.0)).max_coeff_abs_diff(y) < 1e-14);
        }
    }

    #[test]
    fn constant_valid_path_passes_and_scaled_path_fails() {
        let m = models::suspension_model(&Permutation::identity(1), 1).unwrap();
        let c = m.complex.clone();
        let grid = SampleGrid::new(32);
        // constant path of a valid duality passes
        let constant = DualityPath::new(9, (0.0, 1.0), c.clone(), {
            let t = c.t.clone();
            move |_| t.clone()
        });
        for rep in validate_path(&constant, 5, grid, &tol()) {
            assert!(rep.pass, "{}", rep.check);
        }
        // T_s = s T is zero at s = 0 and fails condition (3) there
        let scaled = DualityPath::new(9, (0.0, 1.0), c.clone(), {
            let t = c.t.clone();
            move |s| t.iter().map(|m| m.scale(C64::new(s, 0.0))).collect()
        });
        let reps = validate_path(&scaled, 5, grid, &tol());
        let cond3 = reps.iter().find(|r| r.check.contains("condition3")).unwrap();
        assert!(!cond3.pass, "zero duality must fail condition (3)");
    }

    #[test]
    fn subdivision_signature_invariance_small_grid() {
        let m = models::suspension_model(&Permutation::identity(1), 1).unwrap();
        let a = models::subdivision_equivalence(&m, 2).unwrap();
        let grid = SampleGrid::new(64);
        let reps = signature_invariance(&a, 9, grid, &tol()).unwrap();
        for rep in &reps {
            assert!(rep.pass, "{} failed: {:.3e}", rep.check, rep.max_violation);
        }
    }

    #[test]
    fn conjugation_signature_invariance_small_grid() {
        let sigma = Permutation::from_cycles_str("(1 2)", 3).unwrap();
        let tau = Permutation::from_cycles_str("(2 3)", 3).unwrap();
        let a = models::conjugation_isomorphism(&sigma, &tau, 1).unwrap();
        let grid = SampleGrid::new(64);
        let reps = signature_invariance(&a, 5, grid, &tol()).unwrap();
        for rep in &reps {
            assert!(rep.pass, "{} failed: {:.3e}", rep.check, rep.max_violation);
        }
    }

    #[test]
    fn winding_constant_along_stages() {
        let m = models::suspension_model(&Permutation::identity(1), 1).unwrap();
        let a = models::subdivision_equivalence(&m, 2).unwrap();
        let grid = SampleGrid::new(64);
        for (stage, path) in [
            path_stage1(&a).unwrap(),
            path_stage2(&a).unwrap(),
            path_stage3(&a).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            let ws = path_windings(path, 33, grid, &tol()).unwrap();
            assert!(
                ws.iter().all(|w| *w == ws[0]),
                "stage {} windings vary: {ws:?}",
                stage + 1
            );
        }
    }

    #[test]
    fn acyclic_padding_keeps_winding() {
        let m = models::suspension_model(&Permutation::identity(1), 1).unwrap();
        let base = m.scalar_complex();
        let grid = SampleGrid::new(64);
        let w0 = signature_winding(&base, grid, &tol()).unwrap();
        let padded = models::acyclic_padding(&base, &[1, 1], 5).unwrap();
        let w1 = signature_winding(&padded, grid, &tol()).unwrap();
        assert_eq!(w0, w1);
    }

    #[test]
    fn winding_additivity_on_direct_sums() {
        let a = models::suspension_model(&Permutation::identity(1), 1)
            .unwrap()
            .scalar_complex();
        let b = models::suspension_model(&Permutation::identity(1), 2)
            .unwrap()
            .scalar_complex();
        let grid = SampleGrid::new(64);
        let rep = direct_sum_winding_check(&a, &b, grid, &tol()).unwrap();
        assert!(rep.pass, "{:?}", rep.notes);
    }

    // scalar sanity case for the resolvent identity: B = 0, S_s = s, mu = 1
    #[test]
    fn resolvent_scalar_case_exact() {
        let algebra = crate::algebra::Algebra::matrix(1);
        let b = ModuleMap::zeros(&algebra, 1, 1);
        let s_path = |s: f64| {
            ModuleMap::identity(&algebra, 1).scale(C64::new(s, 0.0))
        };
        let tol = Tolerances::default();
        let rep =
            resolvent_continuity_check(&b, &s_path, 1.0, 0.25, 0.75, SampleGrid::new(4), &tol)
                .unwrap();
        assert!(rep.pass, "violation {}", rep.max_violation);
        // s1 = s2 has difference zero
        let rep =
            resolvent_continuity_check(&b, &s_path, 1.0, 0.5, 0.5, SampleGrid::new(4), &tol)
                .unwrap();
        assert!(rep.max_violation < 1e-15);
    }
}
