//! Polynomial functional calculus of the Laplacian, the chain-homotopy
//! identity behind smoothing-independence, discrete pull-back maps, their
//! functoriality, the Poincare identity of the round trip, and duality
//! compatibility of pull-backs.

use crate::error::HpError;
use crate::fiber;
use crate::homotopy::ChainMap;
use crate::hp::{FiberComplex, HPComplexData};
use crate::module::ModuleMap;
use crate::report::CheckReport;
use crate::tol::{SampleGrid, Tolerances};
use crate::C64;
use nalgebra::DMatrix;

/// A smoothing polynomial with `phi(0) = 1`, together with the division
/// witness `psi(x) = (phi(x) - 1)/x`.
#[derive(Debug, Clone)]
pub struct SmoothingPolynomial {
    /// coefficients of `phi`, constant term first
    pub coeffs: Vec<f64>,
}

impl SmoothingPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, HpError> {
        if coeffs.first().copied() != Some(1.0) {
            return Err(HpError::InvalidInput("phi(0) must equal 1".into()));
        }
        Ok(SmoothingPolynomial { coeffs })
    }

    pub fn one() -> Self {
        SmoothingPolynomial { coeffs: vec![1.0] }
    }

    pub fn one_minus_x() -> Self {
        SmoothingPolynomial {
            coeffs: vec![1.0, -1.0],
        }
    }

    /// `1 - 2x + x^2`.
    pub fn one_minus_x_squared() -> Self {
        SmoothingPolynomial {
            coeffs: vec![1.0, -2.0, 1.0],
        }
    }

    /// `1 - x/8`.
    pub fn one_minus_x_over_8() -> Self {
        SmoothingPolynomial {
            coeffs: vec![1.0, -0.125],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Coefficients of `psi(x) = (phi(x) - 1)/x` (exact polynomial division).
    pub fn psi_coeffs(&self) -> Vec<f64> {
        self.coeffs[1..].to_vec()
    }

    /// Apply a real polynomial to a banded endomorphism by Horner's rule.
    pub fn apply_to(&self, m: &ModuleMap) -> ModuleMap {
        polynomial_of_map(&self.coeffs, m)
    }

    pub fn psi_of(&self, m: &ModuleMap) -> ModuleMap {
        polynomial_of_map(&self.psi_coeffs(), m)
    }
}

fn polynomial_of_map(coeffs: &[f64], m: &ModuleMap) -> ModuleMap {
    assert_eq!(m.domain_rank, m.codomain_rank, "need an endomorphism");
    let id = ModuleMap::identity(&m.algebra, m.domain_rank);
    let mut acc = ModuleMap::zeros(&m.algebra, m.domain_rank, m.domain_rank);
    for c in coeffs.iter().rev() {
        acc = m.compose(&acc).add(&id.scale(C64::new(*c, 0.0)));
    }
    acc
}

/// The Laplacian `Delta = (b + b*)^2` as a total map (block diagonal over
/// degrees).
pub fn laplacian(c: &HPComplexData) -> ModuleMap {
    let b_op = c.build_b_operator();
    b_op.compose(&b_op)
}

/// Structural checks on the Laplacian: self-adjointness and commutation with
/// b and b*, all coefficientwise.
pub fn laplacian_report(c: &HPComplexData, tol: &Tolerances) -> CheckReport {
    let delta = laplacian(c);
    let bt = c.b_total();
    let mut viol = delta.adjoint().max_coeff_abs_diff(&delta);
    viol = viol.max(
        delta
            .compose(&bt)
            .max_coeff_abs_diff(&bt.compose(&delta)),
    );
    let bts = bt.adjoint();
    viol = viol.max(
        delta
            .compose(&bts)
            .max_coeff_abs_diff(&bts.compose(&delta)),
    );
    CheckReport::new("smoothing.laplacian_structure", viol, tol.coeff)
}

/// `phi(Delta)` as a total map.
pub fn apply_phi(phi: &SmoothingPolynomial, c: &HPComplexData) -> ModuleMap {
    phi.apply_to(&laplacian(c))
}

/// Extract the degree block `(to_deg, from_deg)` of a total map.
pub fn degree_block(
    c: &HPComplexData,
    total: &ModuleMap,
    to_deg: usize,
    from_deg: usize,
) -> ModuleMap {
    let off = c.offsets();
    let blocks = c
        .algebra
        .blocks
        .iter()
        .zip(&total.blocks)
        .map(|(d, b)| {
            crate::algebra::LoopMat::from_fn(
                c.ranks[to_deg] * d,
                c.ranks[from_deg] * d,
                |i, j| b.at(off[to_deg] * d + i, off[from_deg] * d + j).clone(),
            )
        })
        .collect();
    ModuleMap::new(
        c.algebra.clone(),
        c.ranks[from_deg],
        c.ranks[to_deg],
        blocks,
    )
}

/// `phi(Delta)` commutes with b and b* coefficientwise (an exact polynomial
/// identity up to float error).
pub fn phi_commutation_report(
    phi: &SmoothingPolynomial,
    c: &HPComplexData,
    tol: &Tolerances,
) -> CheckReport {
    let pd = apply_phi(phi, c);
    let bt = c.b_total();
    let bts = bt.adjoint();
    let mut viol = pd.compose(&bt).max_coeff_abs_diff(&bt.compose(&pd));
    viol = viol.max(pd.compose(&bts).max_coeff_abs_diff(&bts.compose(&pd)));
    CheckReport::new("smoothing.phi_commutes_with_differentials", viol, tol.coeff)
}

/// Induced map of a degree-preserving fiber operator on `H^k`, with its
/// cocycle residual folded in.
fn induced_on_cohomology(
    from: &FiberComplex,
    to: &FiberComplex,
    m: &DMatrix<C64>,
    k: usize,
    svd_tol: f64,
) -> Option<(DMatrix<C64>, f64)> {
    let harm_from = from.harmonic(k, svd_tol);
    let harm_to = to.harmonic(k, svd_tol);
    if harm_from.ncols() != harm_to.ncols() {
        return None;
    }
    if harm_from.ncols() == 0 {
        return Some((DMatrix::zeros(0, 0), 0.0));
    }
    let image = m * &harm_from;
    let residual = to.primal_cocycle_residual(k, &image);
    let (coeffs, _) = fiber::project(&harm_to, &image);
    Some((coeffs, residual))
}

/// `phi(Delta)` induces the identity on fiber cohomology.
pub fn phi_cohomology_identity_report(
    phi: &SmoothingPolynomial,
    c: &HPComplexData,
    grid: SampleGrid,
    tol: &Tolerances,
) -> CheckReport {
    let pd = apply_phi(phi, c);
    let n = c.n();
    let fibers = c.fiber_count(grid);
    let mut per_fiber = Vec::with_capacity(fibers);
    let mut pass = true;
    for j in 0..fibers {
        let theta = grid.theta(j);
        let fc = c.fiber(theta);
        let mut viol: f64 = 0.0;
        for k in 0..=n {
            let blk = degree_block(c, &pd, k, k).evaluate_total(theta);
            match induced_on_cohomology(&fc, &fc, &blk, k, tol.svd_threshold) {
                Some((coeffs, residual)) => {
                    viol = viol.max(residual);
                    let eye = DMatrix::<C64>::identity(coeffs.nrows(), coeffs.ncols());
                    viol = viol.max((coeffs - eye).norm());
                }
                None => pass = false,
            }
        }
        per_fiber.push(viol);
    }
    let max_violation = per_fiber.iter().copied().fold(0.0, f64::max);
    let mut rep = CheckReport::new(
        "smoothing.phi_identity_on_cohomology",
        max_violation,
        tol.cohomology_map,
    )
    .with_per_fiber(per_fiber);
    rep.pass = pass && max_violation <= tol.cohomology_map;
    rep
}

/// The chain-homotopy identity
/// `phi(Delta) - 1 = d (psi(Delta) b*) + (psi(Delta) b*) d`
/// coefficientwise, plus the division witness
/// `phi(Delta) - 1 - Delta psi(Delta) = 0`.
pub fn chain_homotopy_identity(
    phi: &SmoothingPolynomial,
    c: &HPComplexData,
    tol: &Tolerances,
) -> CheckReport {
    let delta = laplacian(c);
    let pd = phi.apply_to(&delta);
    let psi_d = phi.psi_of(&delta);
    let id = ModuleMap::identity(&c.algebra, c.total_rank());
    let bt = c.b_total();
    let homotopy = psi_d.compose(&bt.adjoint());
    let lhs = pd.sub(&id);
    let rhs = bt.compose(&homotopy).add(&homotopy.compose(&bt));
    let viol_identity = lhs.max_coeff_abs_diff(&rhs);
    let viol_psi = lhs.max_coeff_abs_diff(&delta.compose(&psi_d));
    let rep = CheckReport::new(
        "smoothing.chain_homotopy_identity",
        viol_identity,
        tol.chain_homotopy,
    );
    if viol_psi > tol.coeff {
        return rep
            .with_note(format!("psi relation violated by {viol_psi:.3e}"))
            .failed();
    }
    rep
}

// ---------------------------------------------------------------------------
// Pull-back maps
// ---------------------------------------------------------------------------

/// Chain-level data of a leafwise map: blocks `psi[p]` carrying cochains of
/// the map's codomain model (`from`) to cochains of its domain model (`to`),
/// as the transpose of the induced leafwise map. The identification
/// `epsilon` is already folded in for the free-rank-one bimodules the models
/// produce.
#[derive(Debug, Clone)]
pub struct PullbackData {
    pub from: HPComplexData,
    pub to: HPComplexData,
    pub psi: Vec<ModuleMap>,
}

impl PullbackData {
    /// Chain maps produced by the model generators point the same way as
    /// pull-backs: out of the coarse complex, into the refined one.
    pub fn from_chain_map(a: &ChainMap) -> Self {
        PullbackData {
            from: a.source.clone(),
            to: a.target.clone(),
            psi: a.blocks.clone(),
        }
    }

    pub fn identity(c: &HPComplexData) -> Self {
        Self::from_chain_map(&ChainMap::identity(c))
    }

    pub fn chain_violation(&self) -> f64 {
        let n = self.from.n();
        let mut acc: f64 = 0.0;
        for p in 0..n {
            let lhs = self.psi[p + 1].compose(&self.from.b[p]);
            let rhs = self.to.b[p].compose(&self.psi[p]);
            acc = acc.max(lhs.max_coeff_abs_diff(&rhs));
        }
        acc
    }
}

/// The pull-back `f*_phi = psi . phi(Delta_from)`, degreewise.
pub fn pullback(
    f_data: &PullbackData,
    phi: &SmoothingPolynomial,
) -> Result<Vec<ModuleMap>, HpError> {
    let viol = f_data.chain_violation();
    if viol > 1e-10 {
        return Err(HpError::NotAChainMap { violation: viol });
    }
    let pd = apply_phi(phi, &f_data.from);
    let n = f_data.from.n();
    Ok((0..=n)
        .map(|p| f_data.psi[p].compose(&degree_block(&f_data.from, &pd, p, p)))
        .collect())
}

/// Two smoothing choices induce the same map on fiber cohomology.
pub fn pullback_phi_independence(
    f_data: &PullbackData,
    phi1: &SmoothingPolynomial,
    phi2: &SmoothingPolynomial,
    grid: SampleGrid,
    tol: &Tolerances,
) -> Result<CheckReport, HpError> {
    let p1 = pullback(f_data, phi1)?;
    let p2 = pullback(f_data, phi2)?;
    let n = f_data.from.n();
    let fibers = f_data.from.fiber_count(grid);
    let mut per_fiber = Vec::with_capacity(fibers);
    let mut pass = true;
    for j in 0..fibers {
        let theta = grid.theta(j);
        let ff = f_data.from.fiber(theta);
        let ft = f_data.to.fiber(theta);
        let mut viol: f64 = 0.0;
        for k in 0..=n {
            let m1 = p1[k].evaluate_total(theta);
            let m2 = p2[k].evaluate_total(theta);
            match (
                induced_on_cohomology(&ff, &ft, &m1, k, tol.svd_threshold),
                induced_on_cohomology(&ff, &ft, &m2, k, tol.svd_threshold),
            ) {
                (Some((c1, r1)), Some((c2, r2))) => {
                    viol = viol.max(r1).max(r2).max((c1 - c2).norm());
                }
                _ => pass = false,
            }
        }
        per_fiber.push(viol);
    }
    let max_violation = per_fiber.iter().copied().fold(0.0, f64::max);
    let mut rep = CheckReport::new(
        "pullback.phi_independence",
        max_violation,
        tol.cohomology_map,
    )
    .with_per_fiber(per_fiber);
    rep.pass = pass && max_violation <= tol.cohomology_map;
    Ok(rep)
}

/// Functoriality: the composite pull-back and the pull-back of the composite
/// induce the same map on fiber cohomology. `f_data` refines `g_data`
/// (`g_data.to` and `f_data.from` coincide).
pub fn functoriality_check(
    f_data: &PullbackData,
    g_data: &PullbackData,
    phi: &SmoothingPolynomial,
    grid: SampleGrid,
    tol: &Tolerances,
) -> Result<CheckReport, HpError> {
    if g_data.to.ranks != f_data.from.ranks {
        return Err(HpError::IncompatibleShapes(
            "pull-backs do not compose".into(),
        ));
    }
    let n = f_data.from.n();
    let g_pull = pullback(g_data, phi)?;
    let f_pull = pullback(f_data, phi)?;
    // route 1: (g . f)^*_phi = Psi_f Psi_g phi(Delta_coarse)
    let pd_coarse = apply_phi(phi, &g_data.from);
    let route1: Vec<ModuleMap> = (0..=n)
        .map(|p| {
            f_data.psi[p]
                .compose(&g_data.psi[p])
                .compose(&degree_block(&g_data.from, &pd_coarse, p, p))
        })
        .collect();
    // route 2: (f^*_phi x id) . g^*_phi
    let route2: Vec<ModuleMap> = (0..=n)
        .map(|p| f_pull[p].compose(&g_pull[p]))
        .collect();

    let fibers = g_data.from.fiber_count(grid);
    let mut per_fiber = Vec::with_capacity(fibers);
    let mut pass = true;
    for j in 0..fibers {
        let theta = grid.theta(j);
        let fc = g_data.from.fiber(theta);
        let tc = f_data.to.fiber(theta);
        let mut viol: f64 = 0.0;
        for k in 0..=n {
            let m1 = route1[k].evaluate_total(theta);
            let m2 = route2[k].evaluate_total(theta);
            match (
                induced_on_cohomology(&fc, &tc, &m1, k, tol.svd_threshold),
                induced_on_cohomology(&fc, &tc, &m2, k, tol.svd_threshold),
            ) {
                (Some((c1, r1)), Some((c2, r2))) => {
                    viol = viol.max(r1).max(r2).max((c1 - c2).norm());
                }
                _ => pass = false,
            }
        }
        per_fiber.push(viol);
    }
    let max_violation = per_fiber.iter().copied().fold(0.0, f64::max);
    let mut rep = CheckReport::new(
        "pullback.functoriality",
        max_violation,
        tol.cohomology_map,
    )
    .with_per_fiber(per_fiber);
    rep.pass = pass && max_violation <= tol.cohomology_map;
    Ok(rep)
}

/// The Poincare identity of a round trip: with `P` the chain-level
/// projection homotopic to the identity and `K` the prism operator,
/// `P phi(Delta) - phi(Delta) = K_phi d + d K_phi` with
/// `K_phi = K phi(Delta)`, coefficientwise; and `P phi(Delta)` induces the
/// identity on fiber cohomology.
pub fn poincare_identity_check(
    c: &HPComplexData,
    projection: &[ModuleMap],
    phi: &SmoothingPolynomial,
    prism: &[ModuleMap],
    grid: SampleGrid,
    tol: &Tolerances,
) -> Vec<CheckReport> {
    let n = c.n();
    let pd = apply_phi(phi, c);
    let pd_deg: Vec<ModuleMap> = (0..=n).map(|p| degree_block(c, &pd, p, p)).collect();
    let k_phi: Vec<ModuleMap> = (0..n)
        .map(|p| prism[p].compose(&pd_deg[p + 1]))
        .collect();

    let mut viol: f64 = 0.0;
    for p in 0..=n {
        let lhs = projection[p].compose(&pd_deg[p]).sub(&pd_deg[p]);
        let mut rhs = ModuleMap::zeros(&c.algebra, c.ranks[p], c.ranks[p]);
        if p < n {
            rhs = rhs.add(&k_phi[p].compose(&c.b[p]));
        }
        if p > 0 {
            rhs = rhs.add(&c.b[p - 1].compose(&k_phi[p - 1]));
        }
        viol = viol.max(lhs.max_coeff_abs_diff(&rhs));
    }
    let identity_rep =
        CheckReport::new("poincare.chain_homotopy_identity", viol, tol.chain_homotopy);

    // corollary: the smoothed round trip is the identity on cohomology
    let fibers = c.fiber_count(grid);
    let mut per_fiber = Vec::with_capacity(fibers);
    let mut pass = true;
    for j in 0..fibers {
        let theta = grid.theta(j);
        let fc = c.fiber(theta);
        let mut v: f64 = 0.0;
        for k in 0..=n {
            let m = projection[k].compose(&pd_deg[k]).evaluate_total(theta);
            match induced_on_cohomology(&fc, &fc, &m, k, tol.svd_threshold) {
                Some((coeffs, residual)) => {
                    let eye = DMatrix::<C64>::identity(coeffs.nrows(), coeffs.ncols());
                    v = v.max(residual).max((coeffs - eye).norm());
                }
                None => pass = false,
            }
        }
        per_fiber.push(v);
    }
    let max_violation = per_fiber.iter().copied().fold(0.0, f64::max);
    let mut coh_rep = CheckReport::new(
        "poincare.round_trip_identity_on_cohomology",
        max_violation,
        tol.cohomology_map,
    )
    .with_per_fiber(per_fiber);
    coh_rep.pass = pass && max_violation <= tol.cohomology_map;

    vec![identity_rep, coh_rep]
}

/// Duality compatibility of a pull-back along a homotopy equivalence:
/// `f*_phi T_from (f*_phi)^#` and `T_to` induce the same map on fiber
/// cohomology, with the proof's `(-1)^{k(p-k)}` bookkeeping. `negated`
/// flips that sign and must make the check fail; it is the designed
/// negative control.
pub fn duality_compat_check(
    f_data: &PullbackData,
    phi: &SmoothingPolynomial,
    negated: bool,
    grid: SampleGrid,
    tol: &Tolerances,
) -> Result<CheckReport, HpError> {
    let n = f_data.from.n();
    let pull = pullback(f_data, phi)?;
    let fibers = f_data.from.fiber_count(grid);
    let mut per_fiber = Vec::with_capacity(fibers);
    for j in 0..fibers {
        let theta = grid.theta(j);
        let tc = f_data.to.fiber(theta);
        let mut viol: f64 = 0.0;
        for k in 0..=n {
            // M = f*[n-k] . T_from[k] . (f*[k])^#  : to_k -> to_{n-k}
            let m = pull[n - k]
                .compose(&f_data.from.t[k])
                .compose(&pull[k].adjoint());
            let mut sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
            if negated {
                sign = -sign;
            }
            let harm_k = tc.harmonic(k, tol.svd_threshold);
            if harm_k.ncols() == 0 {
                continue;
            }
            let harm_nk = tc.harmonic(n - k, tol.svd_threshold);
            let w1 = m.evaluate_total(theta) * &harm_k;
            let w2 = (&tc.t[k] * &harm_k) * C64::new(sign, 0.0);
            viol = viol.max(tc.dual_cocycle_residual(n - k, &w1));
            viol = viol.max(tc.dual_cocycle_residual(n - k, &w2));
            let (c1, _) = fiber::project(&harm_nk, &w1);
            let (c2, _) = fiber::project(&harm_nk, &w2);
            viol = viol.max((c1 - c2).norm());
        }
        per_fiber.push(viol);
    }
    let max_violation = per_fiber.iter().copied().fold(0.0, f64::max);
    let mut rep = CheckReport::new(
        "pullback.duality_compatibility",
        max_violation,
        tol.cohomology_map,
    )
    .with_per_fiber(per_fiber);
    rep.pass = max_violation <= tol.cohomology_map;
    if negated {
        rep = rep.with_note("sign control: comparison deliberately negated");
    }
    Ok(rep)
}
