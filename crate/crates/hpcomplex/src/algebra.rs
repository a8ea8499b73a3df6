use crate::error::HpError;
use crate::loops::LoopScalar;
use crate::tol::SampleGrid;
use crate::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Which coefficient algebra a value lives over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraKind {
    /// Square complex matrices; every loop entry is a constant.
    Matrix,
    /// Square matrices of trigonometric polynomials on the circle.
    Loop,
}

/// A coefficient algebra: a direct sum of matrix blocks over complex scalars
/// or over loops. A plain matrix algebra has a single block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Algebra {
    pub kind: AlgebraKind,
    pub blocks: Vec<usize>,
}

impl Algebra {
    pub fn matrix(dim: usize) -> Self {
        Algebra {
            kind: AlgebraKind::Matrix,
            blocks: vec![dim],
        }
    }

    pub fn loops(dim: usize) -> Self {
        Algebra {
            kind: AlgebraKind::Loop,
            blocks: vec![dim],
        }
    }

    pub fn loop_blocks(blocks: Vec<usize>) -> Self {
        Algebra {
            kind: AlgebraKind::Loop,
            blocks,
        }
    }

    /// Total matrix dimension (sum of block sizes).
    pub fn dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Sample count that fiberwise checks actually need: matrix algebras are
    /// constant in theta, one fiber suffices.
    pub fn fiber_count(&self, grid: SampleGrid) -> usize {
        match self.kind {
            AlgebraKind::Matrix => 1,
            AlgebraKind::Loop => grid.n,
        }
    }

    pub fn same_as(&self, other: &Self) -> Result<(), HpError> {
        if self != other {
            return Err(HpError::AlgebraMismatch(format!(
                "{:?} vs {:?}",
                self, other
            )));
        }
        Ok(())
    }
}

/// Dense rectangular matrix of loop scalars; the shared arithmetic backing
/// algebra elements and module maps. Stored row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopMat {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<LoopScalar>,
}

impl LoopMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        LoopMat {
            rows,
            cols,
            entries: vec![LoopScalar::zero(); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            *m.at_mut(i, i) = LoopScalar::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> LoopScalar) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        LoopMat {
            rows,
            cols,
            entries,
        }
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<LoopScalar>) -> Self {
        assert_eq!(entries.len(), rows * cols);
        LoopMat {
            rows,
            cols,
            entries,
        }
    }

    /// Constant matrix lifted to band-zero loops.
    pub fn from_complex(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| LoopScalar::constant(m[(i, j)]))
    }

    pub fn at(&self, i: usize, j: usize) -> &LoopScalar {
        &self.entries[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut LoopScalar {
        &mut self.entries[i * self.cols + j]
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j).add(other.at(i, j)))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j).sub(other.at(i, j)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = LoopScalar::zero();
            for k in 0..self.cols {
                acc = acc.add(&self.at(i, k).mul(other.at(k, j)));
            }
            acc
        })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j).scale(c))
    }

    /// Multiply every entry by a loop scalar.
    pub fn scale_loop(&self, s: &LoopScalar) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.at(i, j).mul(s))
    }

    /// Conjugate transpose over the loop algebra.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i).adjoint())
    }

    pub fn evaluate(&self, theta: f64) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).evaluate(theta))
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_coeff_abs())
            .fold(0.0, f64::max)
    }

    pub fn max_coeff_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut acc: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc = acc.max(self.at(i, j).max_coeff_abs_diff(other.at(i, j)));
            }
        }
        acc
    }

    pub fn max_band(&self) -> usize {
        self.entries.iter().map(|e| e.band()).max().unwrap_or(0)
    }

    /// Paste `other` into `self` with its top-left corner at `(r0, c0)`.
    pub fn paste(&mut self, r0: usize, c0: usize, other: &Self) {
        for i in 0..other.rows {
            for j in 0..other.cols {
                *self.at_mut(r0 + i, c0 + j) = other.at(i, j).clone();
            }
        }
    }

    pub fn block_diag(blocks: &[&LoopMat]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(rows, cols);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            m.paste(r, c, b);
            r += b.rows;
            c += b.cols;
        }
        m
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(|e| e.is_constant())
    }
}

/// An element of the coefficient algebra: one square loop matrix per block.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    pub algebra: Algebra,
    pub blocks: Vec<LoopMat>,
}

impl AlgebraElement {
    pub fn new(algebra: Algebra, blocks: Vec<LoopMat>) -> Self {
        assert_eq!(algebra.blocks.len(), blocks.len());
        for (d, b) in algebra.blocks.iter().zip(&blocks) {
            assert_eq!((b.rows, b.cols), (*d, *d), "block must be {d}x{d}");
        }
        AlgebraElement { algebra, blocks }
    }

    pub fn zero(algebra: &Algebra) -> Self {
        let blocks = algebra.blocks.iter().map(|d| LoopMat::zeros(*d, *d)).collect();
        AlgebraElement {
            algebra: algebra.clone(),
            blocks,
        }
    }

    pub fn one(algebra: &Algebra) -> Self {
        let blocks = algebra.blocks.iter().map(|d| LoopMat::identity(*d)).collect();
        AlgebraElement {
            algebra: algebra.clone(),
            blocks,
        }
    }

    /// Single-block scalar element; the common case in tests and examples.
    pub fn scalar(kind: AlgebraKind, s: LoopScalar) -> Self {
        let algebra = Algebra {
            kind,
            blocks: vec![1],
        };
        AlgebraElement {
            algebra,
            blocks: vec![LoopMat::from_entries(1, 1, vec![s])],
        }
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, LoopMat::add)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, LoopMat::sub)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, LoopMat::mul)
    }

    fn zip(&self, other: &Self, f: impl Fn(&LoopMat, &LoopMat) -> LoopMat) -> Self {
        assert_eq!(self.algebra, other.algebra, "algebra mismatch");
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| f(a, b))
            .collect();
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks,
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
        }
    }

    /// Conjugate-transpose of the matrix, loop entries coefficient-reversed.
    pub fn adjoint(&self) -> Self {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    /// Entrywise Fourier sum at `z = e^{i theta}`, assembled block-diagonally
    /// into the full `dim x dim` complex matrix.
    pub fn evaluate(&self, theta: f64) -> DMatrix<C64> {
        let dim = self.dim();
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        let mut off = 0;
        for b in &self.blocks {
            let eb = b.evaluate(theta);
            m.view_mut((off, off), (b.rows, b.cols)).copy_from(&eb);
            off += b.rows;
        }
        m
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_coeff_abs())
            .fold(0.0, f64::max)
    }

    pub fn max_coeff_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.algebra, other.algebra);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.max_coeff_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn max_band(&self) -> usize {
        self.blocks.iter().map(|b| b.max_band()).max().unwrap_or(0)
    }
}

/// Max over equispaced samples of the spectral norm of the evaluated matrix.
/// Refuses when the grid cannot resolve the band (aliasing risk).
pub fn sup_norm_estimate(a: &AlgebraElement, n_samples: usize) -> Result<f64, HpError> {
    let needed = 2 * a.max_band() + 1;
    if n_samples < needed {
        return Err(HpError::InsufficientSamples {
            needed,
            got: n_samples,
        });
    }
    let grid = SampleGrid::new(n_samples);
    let mut sup: f64 = 0.0;
    for theta in grid.thetas() {
        sup = sup.max(spectral_norm(&a.evaluate(theta)));
    }
    Ok(sup)
}

pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// JSON wire format
//
// {"kind": "loop"|"matrix", "dim": n, "entries": [[{"band": K, "coeffs":
// [[re, im], ...]}, ...], ...]} with coefficients ordered k = -K..K. Block
// algebras additionally carry "blocks"; their entries serialize as the full
// dim x dim matrix with zeros off the diagonal blocks.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub(crate) struct AlgebraElementWire {
    kind: AlgebraKind,
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    blocks: Option<Vec<usize>>,
    entries: Vec<Vec<LoopScalar>>,
}

impl AlgebraElementWire {
    pub(crate) fn from_element(e: &AlgebraElement) -> Self {
        let dim = e.dim();
        let full = assemble_full(&e.algebra, &e.blocks);
        let entries = (0..dim)
            .map(|i| (0..dim).map(|j| full.at(i, j).clone()).collect())
            .collect();
        AlgebraElementWire {
            kind: e.algebra.kind,
            dim,
            blocks: if e.algebra.n_blocks() > 1 {
                Some(e.algebra.blocks.clone())
            } else {
                None
            },
            entries,
        }
    }

    pub(crate) fn to_element(&self) -> Result<AlgebraElement, HpError> {
        let blocks = self.blocks.clone().unwrap_or_else(|| vec![self.dim]);
        let algebra = Algebra {
            kind: self.kind,
            blocks,
        };
        if algebra.dim() != self.dim {
            return Err(HpError::InvalidInput(format!(
                "block sizes sum to {}, dim says {}",
                algebra.dim(),
                self.dim
            )));
        }
        if self.entries.len() != self.dim
            || self.entries.iter().any(|row| row.len() != self.dim)
        {
            return Err(HpError::InvalidInput("entries must be dim x dim".into()));
        }
        let full = {
            let mut m = LoopMat::zeros(self.dim, self.dim);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    *m.at_mut(i, j) = self.entries[i][j].clone();
                }
            }
            m
        };
        split_blocks(&algebra, &full).map(|blocks| AlgebraElement::new(algebra, blocks))
    }
}

pub(crate) fn assemble_full(algebra: &Algebra, blocks: &[LoopMat]) -> LoopMat {
    let refs: Vec<&LoopMat> = blocks.iter().collect();
    let _ = algebra;
    LoopMat::block_diag(&refs)
}

pub(crate) fn split_blocks(algebra: &Algebra, full: &LoopMat) -> Result<Vec<LoopMat>, HpError> {
    let mut out = Vec::new();
    let mut off = 0;
    for d in &algebra.blocks {
        out.push(LoopMat::from_fn(*d, *d, |i, j| {
            full.at(off + i, off + j).clone()
        }));
        off += d;
    }
    // everything outside the diagonal blocks must vanish
    let mut r0 = 0;
    for (bi, d) in algebra.blocks.iter().enumerate() {
        for i in 0..*d {
            for j in 0..full.cols {
                let inside = j >= r0 && j < r0 + d;
                if !inside && full.at(r0 + i, j).max_coeff_abs() > 0.0 {
                    return Err(HpError::InvalidInput(format!(
                        "entry outside diagonal block {bi} is nonzero"
                    )));
                }
            }
        }
        r0 += d;
    }
    Ok(out)
}

impl Serialize for AlgebraElement {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        AlgebraElementWire::from_element(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AlgebraElement {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = AlgebraElementWire::deserialize(deserializer)?;
        wire.to_element().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z() -> LoopScalar {
        LoopScalar::monomial(C64::new(1.0, 0.0), 1)
    }

    fn half(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn adjoint_of_identity() {
        let e = AlgebraElement::one(&Algebra::loops(3));
        assert_eq!(e.adjoint().max_coeff_abs_diff(&e), 0.0);
    }

    #[test]
    fn adjoint_of_z_is_z_inverse() {
        let e = AlgebraElement::scalar(AlgebraKind::Loop, z());
        let adj = e.adjoint();
        let zinv = AlgebraElement::scalar(AlgebraKind::Loop, LoopScalar::monomial(half(1.0), -1));
        assert_eq!(adj.max_coeff_abs_diff(&zinv), 0.0);
    }

    #[test]
    fn circle_duality_block_is_self_adjoint() {
        // [[0, (1+z^-1)/2], [(1+z)/2, 0]] equals its own adjoint.
        let a = LoopScalar::one()
            .add(&LoopScalar::monomial(half(1.0), -1))
            .scale(half(0.5));
        let b = LoopScalar::one().add(&z()).scale(half(0.5));
        let m = LoopMat::from_entries(2, 2, vec![LoopScalar::zero(), a, b, LoopScalar::zero()]);
        let e = AlgebraElement::new(Algebra::loops(2), vec![m]);
        assert!(e.adjoint().max_coeff_abs_diff(&e) < 1e-15);
    }

    #[test]
    fn evaluate_z_minus_one() {
        let e = AlgebraElement::scalar(AlgebraKind::Loop, z().sub(&LoopScalar::one()));
        assert!(e.evaluate(0.0)[(0, 0)].norm() < 1e-15);
        assert!((e.evaluate(std::f64::consts::PI)[(0, 0)] - half(-2.0)).norm() < 1e-14);
    }

    #[test]
    fn evaluate_affine_loop_at_pi() {
        // (3z - 1)/2 at theta = pi is -2.
        let s = z().scale(half(3.0)).sub(&LoopScalar::one()).scale(half(0.5));
        let e = AlgebraElement::scalar(AlgebraKind::Loop, s);
        assert!((e.evaluate(std::f64::consts::PI)[(0, 0)] - half(-2.0)).norm() < 1e-14);
    }

    #[test]
    fn sup_norm_examples() {
        let id = AlgebraElement::one(&Algebra::loops(2));
        assert!((sup_norm_estimate(&id, 16).unwrap() - 1.0).abs() < 1e-12);

        let e = AlgebraElement::scalar(AlgebraKind::Loop, z().sub(&LoopScalar::one()));
        assert!((sup_norm_estimate(&e, 256).unwrap() - 2.0).abs() < 1e-12);

        let zero = AlgebraElement::zero(&Algebra::loops(1));
        assert_eq!(sup_norm_estimate(&zero, 4).unwrap(), 0.0);
    }

    #[test]
    fn sup_norm_refuses_aliasing() {
        let s = LoopScalar::monomial(half(1.0), 3);
        let e = AlgebraElement::scalar(AlgebraKind::Loop, s);
        assert!(matches!(
            sup_norm_estimate(&e, 5),
            Err(HpError::InsufficientSamples { needed: 7, got: 5 })
        ));
    }

    #[test]
    fn json_round_trip_matches_schema() {
        let e = AlgebraElement::scalar(AlgebraKind::Loop, z().sub(&LoopScalar::one()));
        let j = serde_json::to_value(&e).unwrap();
        assert_eq!(j["kind"], "loop");
        assert_eq!(j["dim"], 1);
        assert_eq!(j["entries"][0][0]["band"], 1);
        assert_eq!(j["entries"][0][0]["coeffs"][0][0], 0.0);
        assert_eq!(j["entries"][0][0]["coeffs"][1][0], -1.0);
        assert_eq!(j["entries"][0][0]["coeffs"][2][0], 1.0);
        let back: AlgebraElement = serde_json::from_value(j).unwrap();
        assert_eq!(back.max_coeff_abs_diff(&e), 0.0);
    }

    fn arb_loop_scalar(max_band: usize) -> impl Strategy<Value = LoopScalar> {
        (0..=max_band).prop_flat_map(|band| {
            proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 2 * band + 1).prop_map(
                move |cs| {
                    LoopScalar::new(band, cs.into_iter().map(|(re, im)| C64::new(re, im)).collect())
                },
            )
        })
    }

    fn arb_element(dim: usize, max_band: usize) -> impl Strategy<Value = AlgebraElement> {
        proptest::collection::vec(arb_loop_scalar(max_band), dim * dim).prop_map(move |es| {
            AlgebraElement::new(
                Algebra::loops(dim),
                vec![LoopMat::from_entries(dim, dim, es)],
            )
        })
    }

    proptest! {
        #[test]
        fn evaluation_is_multiplicative(a in arb_element(2, 2), b in arb_element(2, 2)) {
            let prod = a.mul(&b);
            for j in 0..128usize {
                let t = 2.0 * std::f64::consts::PI * j as f64 / 128.0;
                let lhs = prod.evaluate(t);
                let rhs = a.evaluate(t) * b.evaluate(t);
                prop_assert!((lhs - rhs).norm() <= 1e-12);
            }
        }

        #[test]
        fn adjoint_is_anti_homomorphism(a in arb_element(2, 1), b in arb_element(2, 1)) {
            let lhs = a.mul(&b).adjoint();
            let rhs = b.adjoint().mul(&a.adjoint());
            prop_assert!(lhs.max_coeff_abs_diff(&rhs) <= 1e-12);
        }

        #[test]
        fn c_star_inequality_direction(a in arb_element(2, 1)) {
            let asa = a.adjoint().mul(&a);
            let lhs = sup_norm_estimate(&asa, 64).unwrap();
            let rhs = sup_norm_estimate(&a, 64).unwrap();
            prop_assert!(lhs <= rhs * rhs + 1e-9);
        }
    }
}
