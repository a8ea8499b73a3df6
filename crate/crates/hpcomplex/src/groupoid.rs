//! Finite and Z-graded discrete groupoids, their convolution algebras,
//! transversal modules, and the bimodules attached to groupoid morphisms.
//!
//! Sums over arrow sets are always finite here because elements are finitely
//! supported; the Z-graded case stores arrows symbolically as (grade, source)
//! pairs along the orbits of a permutation.

use crate::error::HpError;
use crate::perm::Permutation;
use crate::report::CheckReport;
use crate::tol::SampleGrid;
use crate::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// An arrow of a discrete groupoid. `Finite` arrows are pair-groupoid
/// arrows `(target, source)`; `Graded` arrows go from `source` to
/// `sigma^grade(source)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Arrow {
    Finite { target: usize, source: usize },
    Graded { grade: i64, source: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GroupoidKind {
    /// Pair groupoid: exactly one arrow between any two objects.
    Pair,
    /// Arrows generated by a permutation with an integer grading;
    /// `(k, x): x -> sigma^k(x)` and `(k', sigma^k x) . (k, x) = (k + k', x)`.
    Graded(Permutation),
}

/// A discrete groupoid with a chosen transversal and per-object Haar weight
/// (counting measure by default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteGroupoid {
    pub kind: GroupoidKind,
    pub n_objects: usize,
    pub transversal: Vec<usize>,
    pub weights: Vec<f64>,
}

impl DiscreteGroupoid {
    pub fn pair(m: usize) -> Self {
        DiscreteGroupoid {
            kind: GroupoidKind::Pair,
            n_objects: m,
            transversal: (0..m).collect(),
            weights: vec![1.0; m],
        }
    }

    pub fn graded(sigma: Permutation) -> Self {
        let m = sigma.len();
        DiscreteGroupoid {
            kind: GroupoidKind::Graded(sigma),
            n_objects: m,
            transversal: (0..m).collect(),
            weights: vec![1.0; m],
        }
    }

    pub fn source(&self, a: Arrow) -> usize {
        match a {
            Arrow::Finite { source, .. } => source,
            Arrow::Graded { source, .. } => source,
        }
    }

    pub fn target(&self, a: Arrow) -> usize {
        match (&self.kind, a) {
            (_, Arrow::Finite { target, .. }) => target,
            (GroupoidKind::Graded(sigma), Arrow::Graded { grade, source }) => {
                sigma.apply_pow(source, grade)
            }
            _ => panic!("graded arrow in a finite groupoid"),
        }
    }

    pub fn unit(&self, x: usize) -> Arrow {
        match self.kind {
            GroupoidKind::Pair => Arrow::Finite {
                target: x,
                source: x,
            },
            GroupoidKind::Graded(_) => Arrow::Graded { grade: 0, source: x },
        }
    }

    pub fn inverse(&self, a: Arrow) -> Arrow {
        match a {
            Arrow::Finite { target, source } => Arrow::Finite {
                target: source,
                source: target,
            },
            Arrow::Graded { grade, .. } => Arrow::Graded {
                grade: -grade,
                source: self.target(a),
            },
        }
    }

    /// `a . b`, defined when `s(a) = r(b)`.
    pub fn compose(&self, a: Arrow, b: Arrow) -> Option<Arrow> {
        if self.source(a) != self.target(b) {
            return None;
        }
        Some(match (a, b) {
            (Arrow::Finite { target, .. }, Arrow::Finite { source, .. }) => {
                Arrow::Finite { target, source }
            }
            (Arrow::Graded { grade: k1, .. }, Arrow::Graded { grade: k2, source }) => {
                Arrow::Graded {
                    grade: k1 + k2,
                    source,
                }
            }
            _ => return None,
        })
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn in_transversal(&self, x: usize) -> bool {
        self.transversal.contains(&x)
    }

    /// Orbits of objects: one component for the pair groupoid, sigma-cycles
    /// in the graded case, each listed in canonical order.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        match &self.kind {
            GroupoidKind::Pair => {
                if self.n_objects == 0 {
                    vec![]
                } else {
                    vec![(0..self.n_objects).collect()]
                }
            }
            GroupoidKind::Graded(sigma) => sigma.cycles(),
        }
    }

    /// Arrows between two objects. Finite case only; in the graded case the
    /// set is infinite and callers solve for the grade instead.
    pub fn arrows_from_to(&self, source: usize, target: usize) -> Vec<Arrow> {
        match self.kind {
            GroupoidKind::Pair => vec![Arrow::Finite { target, source }],
            GroupoidKind::Graded(_) => {
                panic!("graded arrow sets are infinite; solve for the grade")
            }
        }
    }
}

/// A finitely supported complex function on arrows. Depending on its
/// support this realizes the convolution algebra `C_c(G_X^X)` or the
/// transversal module `C_c(G_X)`; operations validate what they need.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvElement {
    pub groupoid: DiscreteGroupoid,
    pub support: BTreeMap<Arrow, C64>,
}

impl ConvElement {
    pub fn zero(groupoid: &DiscreteGroupoid) -> Self {
        ConvElement {
            groupoid: groupoid.clone(),
            support: BTreeMap::new(),
        }
    }

    pub fn delta(groupoid: &DiscreteGroupoid, a: Arrow) -> Self {
        let mut e = Self::zero(groupoid);
        e.add_term(a, C64::new(1.0, 0.0));
        e
    }

    /// The unit of the convolution algebra: sum of unit arrows over the
    /// transversal.
    pub fn unit(groupoid: &DiscreteGroupoid) -> Self {
        let mut e = Self::zero(groupoid);
        for &x in &groupoid.transversal {
            e.add_term(groupoid.unit(x), C64::new(1.0, 0.0));
        }
        e
    }

    pub fn add_term(&mut self, a: Arrow, c: C64) {
        if c.norm() == 0.0 {
            return;
        }
        let entry = self.support.entry(a).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() == 0.0 {
            self.support.remove(&a);
        }
    }

    pub fn value(&self, a: Arrow) -> C64 {
        self.support.get(&a).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, c) in &other.support {
            out.add_term(*a, *c);
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(&self.groupoid);
        for (a, v) in &self.support {
            out.add_term(*a, v * c);
        }
        out
    }

    /// The involution `phi*(gamma) = conj(phi(gamma^{-1}))`.
    pub fn involution(&self) -> Self {
        let mut out = Self::zero(&self.groupoid);
        for (a, v) in &self.support {
            out.add_term(self.groupoid.inverse(*a), v.conj());
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut acc: f64 = 0.0;
        for a in self.support.keys().chain(other.support.keys()) {
            acc = acc.max((self.value(*a) - other.value(*a)).norm());
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.support.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_on_transversal_algebra(&self) -> bool {
        self.support.keys().all(|a| {
            self.groupoid.in_transversal(self.groupoid.source(*a))
                && self.groupoid.in_transversal(self.groupoid.target(*a))
        })
    }
}

/// Convolution product on `C_c(G_X^X)`:
/// `(phi * psi)(gamma) = sum_{gamma = alpha beta} phi(alpha) psi(beta)`.
pub fn convolve(phi: &ConvElement, psi: &ConvElement) -> Result<ConvElement, HpError> {
    if phi.groupoid != psi.groupoid {
        return Err(HpError::AlgebraMismatch("different groupoids".into()));
    }
    let g = &phi.groupoid;
    let mut out = ConvElement::zero(g);
    for (a, va) in &phi.support {
        for (b, vb) in &psi.support {
            if let Some(ab) = g.compose(*a, *b) {
                out.add_term(ab, va * vb);
            }
        }
    }
    Ok(out)
}

/// Right action of the transversal algebra on `C_c(G_X)`:
/// `(xi f)(gamma) = sum_{gamma' in G^X_{r(gamma)}} f(gamma' gamma) xi(gamma'^{-1})`.
pub fn module_right_action(xi: &ConvElement, f: &ConvElement) -> Result<ConvElement, HpError> {
    if xi.groupoid != f.groupoid {
        return Err(HpError::AlgebraMismatch("different groupoids".into()));
    }
    let g = &xi.groupoid;
    let mut out = ConvElement::zero(g);
    // reindex: gamma = a . b with a = gamma'^{-1} in supp(xi) and
    // b = gamma' gamma in supp(f)
    for (a, va) in &xi.support {
        for (b, vb) in &f.support {
            if g.target(*b) == g.source(*a) && g.in_transversal(g.source(*a)) {
                if let Some(ab) = g.compose(*a, *b) {
                    out.add_term(ab, vb * va);
                }
            }
        }
    }
    Ok(out)
}

/// Algebra-valued inner product on `C_c(G_X)`:
/// `<xi1, xi2>(u) = sum_{v in G_{r(u)}} conj(xi1(v)) xi2(vu) w(r(v))`.
pub fn module_inner_product(
    xi1: &ConvElement,
    xi2: &ConvElement,
) -> Result<ConvElement, HpError> {
    if xi1.groupoid != xi2.groupoid {
        return Err(HpError::AlgebraMismatch("different groupoids".into()));
    }
    let g = &xi1.groupoid;
    let mut out = ConvElement::zero(g);
    for (v, cv) in &xi1.support {
        for (w, cw) in &xi2.support {
            // u = v^{-1} w, defined when the targets agree
            if g.target(*v) == g.target(*w) {
                if let Some(u) = g.compose(g.inverse(*v), *w) {
                    out.add_term(u, cv.conj() * cw * g.weight(g.target(*v)));
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Morphisms and bimodules
// ---------------------------------------------------------------------------

/// A groupoid morphism determined by its object map; pair arrows map by the
/// object map on both ends, graded arrows keep their grade (which requires
/// the object map to intertwine the permutations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupoidMorphism {
    pub source: DiscreteGroupoid,
    pub target: DiscreteGroupoid,
    pub object_map: Vec<usize>,
}

impl GroupoidMorphism {
    pub fn identity(g: &DiscreteGroupoid) -> Self {
        GroupoidMorphism {
            source: g.clone(),
            target: g.clone(),
            object_map: (0..g.n_objects).collect(),
        }
    }

    pub fn new(
        source: &DiscreteGroupoid,
        target: &DiscreteGroupoid,
        object_map: Vec<usize>,
    ) -> Result<Self, HpError> {
        if object_map.len() != source.n_objects {
            return Err(HpError::InvalidInput("object map length mismatch".into()));
        }
        if object_map.iter().any(|x| *x >= target.n_objects) {
            return Err(HpError::InvalidInput("object map out of range".into()));
        }
        let f = GroupoidMorphism {
            source: source.clone(),
            target: target.clone(),
            object_map,
        };
        f.validate()?;
        Ok(f)
    }

    /// Functoriality on generators.
    pub fn validate(&self) -> Result<(), HpError> {
        match (&self.source.kind, &self.target.kind) {
            (GroupoidKind::Pair, GroupoidKind::Pair) => Ok(()),
            (GroupoidKind::Graded(sigma), GroupoidKind::Graded(sigma2)) => {
                for x in 0..self.source.n_objects {
                    if self.object_map[sigma.apply(x)] != sigma2.apply(self.object_map[x]) {
                        return Err(HpError::InvalidInput(
                            "object map does not intertwine the permutations".into(),
                        ));
                    }
                }
                Ok(())
            }
            _ => Err(HpError::InvalidInput(
                "morphisms between different groupoid kinds are not modeled".into(),
            )),
        }
    }

    pub fn apply_object(&self, x: usize) -> usize {
        self.object_map[x]
    }

    pub fn apply(&self, a: Arrow) -> Arrow {
        match a {
            Arrow::Finite { target, source } => Arrow::Finite {
                target: self.object_map[target],
                source: self.object_map[source],
            },
            Arrow::Graded { grade, source } => Arrow::Graded {
                grade,
                source: self.object_map[source],
            },
        }
    }

    /// `self . other` (apply `other` first).
    pub fn compose(&self, other: &GroupoidMorphism) -> Result<GroupoidMorphism, HpError> {
        if other.target != self.source {
            return Err(HpError::IncompatibleShapes(
                "morphisms do not compose".into(),
            ));
        }
        GroupoidMorphism::new(
            &other.source,
            &self.target,
            other
                .object_map
                .iter()
                .map(|x| self.object_map[*x])
                .collect(),
        )
    }

    /// Does the morphism model a groupoid-level homotopy equivalence?
    /// Operationally: the object map is a bijection, so arrow sets between
    /// fibers map bijectively.
    pub fn is_equivalence_model(&self) -> bool {
        if self.source.n_objects != self.target.n_objects {
            return false;
        }
        let mut seen = vec![false; self.target.n_objects];
        for &x in &self.object_map {
            if seen[x] {
                return false;
            }
            seen[x] = true;
        }
        true
    }
}

/// An element of the bimodule `C_c(G^X_{X'}(f))`: finitely supported on the
/// reduced graph of pairs `(x, gamma')` with `f(x) = r(gamma')`.
#[derive(Debug, Clone)]
pub struct BimoduleElement {
    pub morphism: GroupoidMorphism,
    pub support: BTreeMap<(usize, Arrow), C64>,
}

impl BimoduleElement {
    pub fn zero(morphism: &GroupoidMorphism) -> Self {
        BimoduleElement {
            morphism: morphism.clone(),
            support: BTreeMap::new(),
        }
    }

    pub fn delta(morphism: &GroupoidMorphism, x: usize, gamma: Arrow) -> Result<Self, HpError> {
        let mut e = Self::zero(morphism);
        e.add_term(x, gamma, C64::new(1.0, 0.0))?;
        Ok(e)
    }

    pub fn add_term(&mut self, x: usize, gamma: Arrow, c: C64) -> Result<(), HpError> {
        let tg = &self.morphism.target;
        if self.morphism.apply_object(x) != tg.target(gamma) {
            return Err(HpError::InvalidInput(format!(
                "({x}, {gamma:?}) violates f(x) = r(gamma')"
            )));
        }
        if !tg.in_transversal(tg.source(gamma)) {
            return Err(HpError::InvalidInput(
                "bimodule arrows must have source in the transversal".into(),
            ));
        }
        if c.norm() == 0.0 {
            return Ok(());
        }
        let entry = self.support.entry((x, gamma)).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() == 0.0 {
            self.support.remove(&(x, gamma));
        }
        Ok(())
    }

    pub fn value(&self, x: usize, gamma: Arrow) -> C64 {
        self.support
            .get(&(x, gamma))
            .copied()
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut acc: f64 = 0.0;
        for key in self.support.keys().chain(other.support.keys()) {
            acc = acc.max((self.value(key.0, key.1) - other.value(key.0, key.1)).norm());
        }
        acc
    }
}

/// Right action of the target algebra:
/// `(xi phi')(x, gamma') = sum_{alpha'} xi(x, gamma' alpha'^{-1}) phi'(alpha')`.
pub fn bimodule_right_action(
    xi: &BimoduleElement,
    phi: &ConvElement,
) -> Result<BimoduleElement, HpError> {
    if phi.groupoid != xi.morphism.target {
        return Err(HpError::AlgebraMismatch(
            "right action must come from the target algebra".into(),
        ));
    }
    let g = &phi.groupoid;
    let mut out = BimoduleElement::zero(&xi.morphism);
    for ((x, gamma), c) in &xi.support {
        for (alpha, ca) in &phi.support {
            if let Some(ga) = g.compose(*gamma, *alpha) {
                out.add_term(*x, ga, c * ca)?;
            }
        }
    }
    Ok(out)
}

/// Bimodule inner product with values in the target algebra:
/// `<xi, eta>(gamma') = sum conj(xi(x, g1)) eta(x, g1 gamma')`.
pub fn bimodule_inner_product(
    xi: &BimoduleElement,
    eta: &BimoduleElement,
) -> Result<ConvElement, HpError> {
    if xi.morphism != eta.morphism {
        return Err(HpError::AlgebraMismatch("different morphisms".into()));
    }
    let g = &xi.morphism.target;
    let mut out = ConvElement::zero(g);
    for ((x1, g1), c1) in &xi.support {
        for ((x2, g2), c2) in &eta.support {
            if x1 == x2 && g.target(*g1) == g.target(*g2) {
                if let Some(u) = g.compose(g.inverse(*g1), *g2) {
                    out.add_term(u, c1.conj() * c2);
                }
            }
        }
    }
    Ok(out)
}

/// Left representation of the source algebra on the bimodule:
/// `pi_f(phi) xi (x, gamma') = sum_{alpha in G_X^x} phi(alpha) xi(s(alpha), f(alpha^{-1}) gamma')`.
pub fn pi_f(phi: &ConvElement, xi: &BimoduleElement) -> Result<BimoduleElement, HpError> {
    if phi.groupoid != xi.morphism.source {
        return Err(HpError::AlgebraMismatch(
            "pi_f takes an element of the source algebra".into(),
        ));
    }
    let f = &xi.morphism;
    let gs = &f.source;
    let mut out = BimoduleElement::zero(f);
    for (alpha, ca) in &phi.support {
        if !gs.in_transversal(gs.source(*alpha)) {
            return Err(HpError::InvalidInput(
                "pi_f input must live on the transversal algebra".into(),
            ));
        }
        for ((y, beta), cb) in &xi.support {
            if *y == gs.source(*alpha) {
                // gamma' = f(alpha) beta
                if let Some(gamma) = f.target.compose(f.apply(*alpha), *beta) {
                    out.add_term(gs.target(*alpha), gamma, ca * cb)?;
                }
            }
        }
    }
    Ok(out)
}

/// Interior tensor composition `xi_f * eta_g` landing in the bimodule of the
/// composite morphism:
/// `(xi * eta)(x, a'') = sum_{a1'} xi(x, a1') eta(s(a1'), g(a1'^{-1}) a'')`.
pub fn xi_composition(
    xi_f: &BimoduleElement,
    eta_g: &BimoduleElement,
) -> Result<BimoduleElement, HpError> {
    let f = &xi_f.morphism;
    let g = &eta_g.morphism;
    if g.source != f.target {
        return Err(HpError::IncompatibleShapes(
            "bimodules do not compose".into(),
        ));
    }
    let gf = g.compose(f)?;
    let mut out = BimoduleElement::zero(&gf);
    for ((x, a1), c1) in &xi_f.support {
        for ((y, b), c2) in &eta_g.support {
            if *y == f.target.source(*a1) {
                if let Some(a2) = g.target.compose(g.apply(*a1), *b) {
                    out.add_term(*x, a2, c1 * c2)?;
                }
            }
        }
    }
    Ok(out)
}

/// The kernel `eta1 (star) eta2` on the source groupoid:
/// `(eta1 * eta2)(alpha) = sum_{a1'} eta1(r(alpha), a1') conj(eta2(s(alpha), f(alpha^{-1}) a1'))`.
pub fn star_product(
    eta1: &BimoduleElement,
    eta2: &BimoduleElement,
) -> Result<ConvElement, HpError> {
    if eta1.morphism != eta2.morphism {
        return Err(HpError::AlgebraMismatch("different morphisms".into()));
    }
    let f = &eta1.morphism;
    let gs = &f.source;
    let gt = &f.target;
    let mut out = ConvElement::zero(gs);
    for ((x, a1), c1) in &eta1.support {
        for ((y, w), c2) in &eta2.support {
            // alpha must satisfy r(alpha) = x, s(alpha) = y, f(alpha) = a1 w^{-1}
            let Some(fa) = gt.compose(*a1, gt.inverse(*w)) else {
                continue;
            };
            match (&gs.kind, &gt.kind) {
                (GroupoidKind::Pair, GroupoidKind::Pair) => {
                    for alpha in gs.arrows_from_to(*y, *x) {
                        if f.apply(alpha) == fa {
                            out.add_term(alpha, c1 * c2.conj());
                        }
                    }
                }
                (GroupoidKind::Graded(sigma), GroupoidKind::Graded(_)) => {
                    let Arrow::Graded { grade, .. } = fa else {
                        continue;
                    };
                    let alpha = Arrow::Graded { grade, source: *y };
                    if sigma.apply_pow(*y, grade) == *x && f.apply(alpha) == fa {
                        out.add_term(alpha, c1 * c2.conj());
                    }
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

/// Check the compact-operator identity
/// `theta_{eta1, eta2} zeta = pi_f(eta1 star eta2) zeta` on a given zeta.
/// Expected only when the morphism models an equivalence; otherwise the
/// report says so and fails.
pub fn star_theta_identity(
    eta1: &BimoduleElement,
    eta2: &BimoduleElement,
    zeta: &BimoduleElement,
    tol_value: f64,
) -> Result<CheckReport, HpError> {
    if !eta1.morphism.is_equivalence_model() {
        return Ok(CheckReport::new("groupoid.theta_identity", 0.0, tol_value)
            .with_note("theta-identity not expected: morphism is not an equivalence model")
            .failed());
    }
    let lhs = bimodule_right_action(eta1, &bimodule_inner_product(eta2, zeta)?)?;
    let rhs = pi_f(&star_product(eta1, eta2)?, zeta)?;
    let viol = lhs.max_abs_diff(&rhs);
    Ok(CheckReport::new("groupoid.theta_identity", viol, tol_value))
}

/// The Morita identification
/// `Lambda xi (gamma) = xi(r(gamma), gamma_{r(gamma)} gamma)` attached to
/// per-object arrows `gamma_x: x -> gf(x)`.
pub fn morita_lambda(
    xi: &BimoduleElement,
    gamma_data: &[Arrow],
) -> Result<ConvElement, HpError> {
    let gf = &xi.morphism;
    let g = &gf.source;
    if gf.target != gf.source {
        return Err(HpError::InconsistentGammaData(
            "Lambda needs an endomorphism bimodule".into(),
        ));
    }
    if gamma_data.len() != g.n_objects {
        return Err(HpError::InconsistentGammaData(
            "need one arrow per object".into(),
        ));
    }
    for (x, gx) in gamma_data.iter().enumerate() {
        if g.source(*gx) != x || g.target(*gx) != gf.apply_object(x) {
            return Err(HpError::InconsistentGammaData(format!(
                "gamma_{x} must run from {x} to {}",
                gf.apply_object(x)
            )));
        }
    }
    let mut out = ConvElement::zero(g);
    for ((x, gt), c) in &xi.support {
        // gamma = gamma_x^{-1} gt; then r(gamma) = x automatically
        if let Some(gamma) = g.compose(g.inverse(gamma_data[*x]), *gt) {
            out.add_term(gamma, *c);
        }
    }
    Ok(out)
}

/// `theta_h^s (xi)(x, gamma) = xi((gamma^s_x)^{-1} gamma)`: the isometry
/// identifying the algebra with the bimodule of the homotopy stage `h_s`.
pub fn theta_h_s(
    xi: &ConvElement,
    h_s: &GroupoidMorphism,
    gamma_s: &[Arrow],
) -> Result<BimoduleElement, HpError> {
    let g = &h_s.source;
    if *g != xi.groupoid {
        return Err(HpError::AlgebraMismatch("theta_h^s domain mismatch".into()));
    }
    if h_s.target != h_s.source {
        return Err(HpError::InconsistentGammaData(
            "homotopy stages are endomorphisms".into(),
        ));
    }
    validate_stage_data(h_s, gamma_s)?;
    let mut out = BimoduleElement::zero(h_s);
    for (a, c) in &xi.support {
        let x = g.target(*a);
        let gamma = g
            .compose(gamma_s[x], *a)
            .ok_or_else(|| HpError::InconsistentGammaData("stage arrow not composable".into()))?;
        out.add_term(x, gamma, *c)?;
    }
    Ok(out)
}

/// Adjoint of `theta_h^s`: `eta -> (gamma -> eta(r(gamma), gamma^s_{r(gamma)} gamma))`.
pub fn theta_h_s_adjoint(
    eta: &BimoduleElement,
    gamma_s: &[Arrow],
) -> Result<ConvElement, HpError> {
    let h_s = &eta.morphism;
    let g = &h_s.source;
    validate_stage_data(h_s, gamma_s)?;
    let mut out = ConvElement::zero(g);
    for ((x, gt), c) in &eta.support {
        if let Some(gamma) = g.compose(g.inverse(gamma_s[*x]), *gt) {
            out.add_term(gamma, *c);
        }
    }
    Ok(out)
}

fn validate_stage_data(h_s: &GroupoidMorphism, gamma_s: &[Arrow]) -> Result<(), HpError> {
    let g = &h_s.source;
    if gamma_s.len() != g.n_objects {
        return Err(HpError::InconsistentGammaData(
            "need one stage arrow per object".into(),
        ));
    }
    for (x, gx) in gamma_s.iter().enumerate() {
        if g.source(*gx) != x || g.target(*gx) != h_s.apply_object(x) {
            return Err(HpError::InconsistentGammaData(format!(
                "gamma^s_{x} must run from {x} to {}",
                h_s.apply_object(x)
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Seeded random elements (dyadic coefficients keep identities exact)
// ---------------------------------------------------------------------------

/// A dyadic rational complex number in `[-1, 1]^2`; sums and products of a
/// few of these stay exactly representable in doubles.
pub fn random_dyadic(rng: &mut impl rand::Rng) -> C64 {
    C64::new(
        rng.gen_range(-16..=16i32) as f64 / 16.0,
        rng.gen_range(-16..=16i32) as f64 / 16.0,
    )
}

/// Random finitely supported element: full support on a pair groupoid,
/// grades `-band..=band` per object in the graded case.
pub fn random_conv_element(
    rng: &mut impl rand::Rng,
    g: &DiscreteGroupoid,
    band: i64,
) -> ConvElement {
    let mut e = ConvElement::zero(g);
    match &g.kind {
        GroupoidKind::Pair => {
            for t in 0..g.n_objects {
                for s in 0..g.n_objects {
                    e.add_term(Arrow::Finite { target: t, source: s }, random_dyadic(rng));
                }
            }
        }
        GroupoidKind::Graded(_) => {
            for s in 0..g.n_objects {
                for k in -band..=band {
                    e.add_term(Arrow::Graded { grade: k, source: s }, random_dyadic(rng));
                }
            }
        }
    }
    e
}

/// Random bimodule element over a morphism, supported on every reduced-graph
/// pair within the band.
pub fn random_bimodule_element(
    rng: &mut impl rand::Rng,
    f: &GroupoidMorphism,
    band: i64,
) -> BimoduleElement {
    let mut e = BimoduleElement::zero(f);
    let gt = f.target.clone();
    for x in 0..f.source.n_objects {
        let fx = f.apply_object(x);
        match &gt.kind {
            GroupoidKind::Pair => {
                for s in 0..gt.n_objects {
                    e.add_term(x, Arrow::Finite { target: fx, source: s }, random_dyadic(rng))
                        .expect("reduced-graph constraint holds by construction");
                }
            }
            GroupoidKind::Graded(sigma) => {
                for k in -band..=band {
                    // an arrow of grade k ending at fx starts at sigma^{-k}(fx)
                    let s = sigma.apply_pow(fx, -k);
                    e.add_term(x, Arrow::Graded { grade: k, source: s }, random_dyadic(rng))
                        .expect("reduced-graph constraint holds by construction");
                }
            }
        }
    }
    e
}

// ---------------------------------------------------------------------------
// Fiber realization: positivity and the matrix-algebra isomorphism
// ---------------------------------------------------------------------------

/// Realize a convolution element as a block-diagonal matrix, one block per
/// orbit. Pair arrows become matrix units; graded arrows become shift
/// matrices weighted by `z^{winding}` at `z = e^{i theta}`.
pub fn fiber_matrix(phi: &ConvElement, theta: f64) -> DMatrix<C64> {
    let g = &phi.groupoid;
    let orbits = g.orbits();
    let dim: usize = orbits.iter().map(|o| o.len()).sum();
    // (global index, index within orbit, orbit length) per object
    let mut pos = vec![(0usize, 0usize, 0usize); g.n_objects];
    let mut offset = 0;
    for orbit in &orbits {
        for (j, &x) in orbit.iter().enumerate() {
            pos[x] = (offset + j, j, orbit.len());
        }
        offset += orbit.len();
    }
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (a, c) in &phi.support {
        match a {
            Arrow::Finite { target, source } => {
                m[(pos[*target].0, pos[*source].0)] += c;
            }
            Arrow::Graded { grade, source } => {
                let (col, j, cl) = pos[*source];
                let cl = cl as i64;
                let winding = (j as i64 + grade).div_euclid(cl);
                let row = col - j + ((j as i64 + grade).rem_euclid(cl)) as usize;
                m[(row, col)] += c * C64::from_polar(1.0, theta * winding as f64);
            }
        }
    }
    m
}

/// Smallest eigenvalue of the Hermitian realization of `<xi, xi>` over the
/// sample grid; certifies positivity in the completed algebra.
pub fn positivity_min_eigenvalue(xi: &ConvElement, grid: SampleGrid) -> Result<f64, HpError> {
    let gram = module_inner_product(xi, xi)?;
    let fibers = match xi.groupoid.kind {
        GroupoidKind::Pair => 1,
        GroupoidKind::Graded(_) => grid.n,
    };
    let mut min_ev = f64::INFINITY;
    for j in 0..fibers {
        let m = fiber_matrix(&gram, grid.theta(j));
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(herm);
        for ev in eig.eigenvalues.iter() {
            min_ev = min_ev.min(*ev);
        }
    }
    Ok(min_ev)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
