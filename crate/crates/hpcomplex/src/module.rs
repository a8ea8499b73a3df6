use crate::algebra::{Algebra, AlgebraElement, LoopMat};
use crate::error::HpError;
use crate::loops::LoopScalar;
use crate::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A finitely generated free Hilbert module `A^rank` over the coefficient
/// algebra. Rank 0 admits only the zero vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeModule {
    pub algebra: Algebra,
    pub rank: usize,
}

impl FreeModule {
    pub fn new(algebra: Algebra, rank: usize) -> Self {
        FreeModule { algebra, rank }
    }
}

/// An adjointable map between free modules, stored per algebra block as a
/// flattened loop matrix of shape `(codomain_rank * d) x (domain_rank * d)`.
/// Entry `(i, j)` over the algebra is the `d x d` sub-block at rows
/// `i*d..`, columns `j*d..`.
#[derive(Debug, Clone)]
pub struct ModuleMap {
    pub algebra: Algebra,
    pub domain_rank: usize,
    pub codomain_rank: usize,
    pub blocks: Vec<LoopMat>,
}

impl ModuleMap {
    pub fn new(
        algebra: Algebra,
        domain_rank: usize,
        codomain_rank: usize,
        blocks: Vec<LoopMat>,
    ) -> Self {
        assert_eq!(algebra.blocks.len(), blocks.len());
        for (d, b) in algebra.blocks.iter().zip(&blocks) {
            assert_eq!(
                (b.rows, b.cols),
                (codomain_rank * d, domain_rank * d),
                "block shape mismatch"
            );
        }
        ModuleMap {
            algebra,
            domain_rank,
            codomain_rank,
            blocks,
        }
    }

    pub fn zeros(algebra: &Algebra, domain_rank: usize, codomain_rank: usize) -> Self {
        let blocks = algebra
            .blocks
            .iter()
            .map(|d| LoopMat::zeros(codomain_rank * d, domain_rank * d))
            .collect();
        ModuleMap {
            algebra: algebra.clone(),
            domain_rank,
            codomain_rank,
            blocks,
        }
    }

    pub fn identity(algebra: &Algebra, rank: usize) -> Self {
        let blocks = algebra
            .blocks
            .iter()
            .map(|d| LoopMat::identity(rank * d))
            .collect();
        ModuleMap {
            algebra: algebra.clone(),
            domain_rank: rank,
            codomain_rank: rank,
            blocks,
        }
    }

    /// Build from a `codomain_rank x domain_rank` grid of algebra elements.
    pub fn from_entries(
        algebra: &Algebra,
        domain_rank: usize,
        codomain_rank: usize,
        entries: &[Vec<AlgebraElement>],
    ) -> Self {
        assert_eq!(entries.len(), codomain_rank);
        let blocks = algebra
            .blocks
            .iter()
            .enumerate()
            .map(|(bi, d)| {
                let mut m = LoopMat::zeros(codomain_rank * d, domain_rank * d);
                for (i, row) in entries.iter().enumerate() {
                    assert_eq!(row.len(), domain_rank);
                    for (j, e) in row.iter().enumerate() {
                        assert_eq!(e.algebra, *algebra);
                        m.paste(i * d, j * d, &e.blocks[bi]);
                    }
                }
                m
            })
            .collect();
        ModuleMap {
            algebra: algebra.clone(),
            domain_rank,
            codomain_rank,
            blocks,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> AlgebraElement {
        let blocks = self
            .algebra
            .blocks
            .iter()
            .zip(&self.blocks)
            .map(|(d, b)| LoopMat::from_fn(*d, *d, |r, c| b.at(i * d + r, j * d + c).clone()))
            .collect();
        AlgebraElement::new(self.algebra.clone(), blocks)
    }

    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.algebra, other.algebra, "algebra mismatch");
        assert_eq!(
            self.domain_rank, other.codomain_rank,
            "composition rank mismatch"
        );
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.mul(b))
            .collect();
        ModuleMap {
            algebra: self.algebra.clone(),
            domain_rank: other.domain_rank,
            codomain_rank: self.codomain_rank,
            blocks,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, LoopMat::add)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, LoopMat::sub)
    }

    fn zip(&self, other: &Self, f: impl Fn(&LoopMat, &LoopMat) -> LoopMat) -> Self {
        assert_eq!(self.algebra, other.algebra);
        assert_eq!(self.domain_rank, other.domain_rank);
        assert_eq!(self.codomain_rank, other.codomain_rank);
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| f(a, b))
            .collect();
        ModuleMap {
            algebra: self.algebra.clone(),
            domain_rank: self.domain_rank,
            codomain_rank: self.codomain_rank,
            blocks,
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        ModuleMap {
            algebra: self.algebra.clone(),
            domain_rank: self.domain_rank,
            codomain_rank: self.codomain_rank,
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
        }
    }

    /// Adjoint with respect to the standard free-module inner product:
    /// conjugate-transpose over the algebra.
    pub fn adjoint(&self) -> Self {
        ModuleMap {
            algebra: self.algebra.clone(),
            domain_rank: self.codomain_rank,
            codomain_rank: self.domain_rank,
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    /// Evaluate one algebra block at a fiber.
    pub fn evaluate_block(&self, block: usize, theta: f64) -> DMatrix<C64> {
        self.blocks[block].evaluate(theta)
    }

    /// Evaluate all blocks at a fiber and assemble block-diagonally.
    pub fn evaluate_total(&self, theta: f64) -> DMatrix<C64> {
        let rows: usize = self.blocks.iter().map(|b| b.rows).sum();
        let cols: usize = self.blocks.iter().map(|b| b.cols).sum();
        let mut m = DMatrix::<C64>::zeros(rows, cols);
        let (mut r, mut c) = (0, 0);
        for b in &self.blocks {
            m.view_mut((r, c), (b.rows, b.cols)).copy_from(&b.evaluate(theta));
            r += b.rows;
            c += b.cols;
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

    /// Direct sum of maps: `self` on the first summand, `other` on the second.
    pub fn direct_sum(&self, other: &Self) -> Self {
        assert_eq!(self.algebra, other.algebra);
        let d = &self.algebra.blocks;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .zip(d)
            .map(|((a, b), _)| LoopMat::block_diag(&[a, b]))
            .collect();
        ModuleMap {
            algebra: self.algebra.clone(),
            domain_rank: self.domain_rank + other.domain_rank,
            codomain_rank: self.codomain_rank + other.codomain_rank,
            blocks,
        }
    }

    /// Assemble a map between direct-sum modules from a grid of optional
    /// blocks; `entries[i][j]` maps the `j`-th column summand into the
    /// `i`-th row summand, `None` meaning zero.
    pub fn from_grid(
        algebra: &Algebra,
        row_ranks: &[usize],
        col_ranks: &[usize],
        entries: &[Vec<Option<&ModuleMap>>],
    ) -> Self {
        let domain_rank: usize = col_ranks.iter().sum();
        let codomain_rank: usize = row_ranks.iter().sum();
        let mut out = ModuleMap::zeros(algebra, domain_rank, codomain_rank);
        let row_off: Vec<usize> = row_ranks
            .iter()
            .scan(0, |acc, r| {
                let v = *acc;
                *acc += r;
                Some(v)
            })
            .collect();
        let col_off: Vec<usize> = col_ranks
            .iter()
            .scan(0, |acc, r| {
                let v = *acc;
                *acc += r;
                Some(v)
            })
            .collect();
        for (i, row) in entries.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                if let Some(m) = cell {
                    assert_eq!(m.codomain_rank, row_ranks[i]);
                    assert_eq!(m.domain_rank, col_ranks[j]);
                    assert_eq!(&m.algebra, algebra);
                    for (bi, d) in algebra.blocks.iter().enumerate() {
                        out.blocks[bi].paste(row_off[i] * d, col_off[j] * d, &m.blocks[bi]);
                    }
                }
            }
        }
        out
    }

    /// Reinterpret over the scalar loop (or scalar matrix) algebra: the
    /// block structure is forgotten and ranks multiply out. The flattened
    /// matrices are unchanged, which is exactly the discrete imprimitivity
    /// identification.
    pub fn rebase_to_scalars(&self) -> Self {
        let kind = self.algebra.kind;
        let full = {
            let refs: Vec<&LoopMat> = self.blocks.iter().collect();
            LoopMat::block_diag(&refs)
        };
        let domain_rank = full.cols;
        let codomain_rank = full.rows;
        ModuleMap {
            algebra: Algebra { kind, blocks: vec![1] },
            domain_rank,
            codomain_rank,
            blocks: vec![full],
        }
    }
}

/// An element of a free module, stored per block as a stacked column of the
/// component algebra elements: shape `(rank * d) x d`.
#[derive(Debug, Clone)]
pub struct ModuleVector {
    pub algebra: Algebra,
    pub rank: usize,
    pub blocks: Vec<LoopMat>,
}

impl ModuleVector {
    pub fn zero(algebra: &Algebra, rank: usize) -> Self {
        let blocks = algebra
            .blocks
            .iter()
            .map(|d| LoopMat::zeros(rank * d, *d))
            .collect();
        ModuleVector {
            algebra: algebra.clone(),
            rank,
            blocks,
        }
    }

    /// Standard basis vector `e_i`.
    pub fn basis(algebra: &Algebra, rank: usize, i: usize) -> Self {
        let mut v = Self::zero(algebra, rank);
        for (b, d) in v.blocks.iter_mut().zip(&algebra.blocks) {
            b.paste(i * d, 0, &LoopMat::identity(*d));
        }
        v
    }

    pub fn from_components(algebra: &Algebra, components: &[AlgebraElement]) -> Self {
        let rank = components.len();
        let blocks = algebra
            .blocks
            .iter()
            .enumerate()
            .map(|(bi, d)| {
                let mut m = LoopMat::zeros(rank * d, *d);
                for (i, c) in components.iter().enumerate() {
                    assert_eq!(c.algebra, *algebra);
                    m.paste(i * d, 0, &c.blocks[bi]);
                }
                m
            })
            .collect();
        ModuleVector {
            algebra: algebra.clone(),
            rank,
            blocks,
        }
    }

    pub fn component(&self, i: usize) -> AlgebraElement {
        let blocks = self
            .algebra
            .blocks
            .iter()
            .zip(&self.blocks)
            .map(|(d, b)| LoopMat::from_fn(*d, *d, |r, c| b.at(i * d + r, c).clone()))
            .collect();
        AlgebraElement::new(self.algebra.clone(), blocks)
    }

    /// Right action `v . a`.
    pub fn right_action(&self, a: &AlgebraElement) -> Self {
        assert_eq!(self.algebra, a.algebra);
        let blocks = self
            .blocks
            .iter()
            .zip(&a.blocks)
            .map(|(v, ab)| v.mul(ab))
            .collect();
        ModuleVector {
            algebra: self.algebra.clone(),
            rank: self.rank,
            blocks,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.algebra, other.algebra);
        assert_eq!(self.rank, other.rank);
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.add(b))
            .collect();
        ModuleVector {
            algebra: self.algebra.clone(),
            rank: self.rank,
            blocks,
        }
    }

    pub fn scale_loop(&self, s: &LoopScalar) -> Self {
        ModuleVector {
            algebra: self.algebra.clone(),
            rank: self.rank,
            blocks: self.blocks.iter().map(|b| b.scale_loop(s)).collect(),
        }
    }

    pub fn max_coeff_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.max_coeff_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// `<v, w> = sum_i v_i^* w_i`, the algebra-valued inner product. Conjugate
/// linear in the first slot, A-linear in the second.
pub fn inner_product(v: &ModuleVector, w: &ModuleVector) -> Result<AlgebraElement, HpError> {
    v.algebra.same_as(&w.algebra)?;
    if v.rank != w.rank {
        return Err(HpError::RankMismatch {
            expected: v.rank,
            got: w.rank,
        });
    }
    let blocks = v
        .blocks
        .iter()
        .zip(&w.blocks)
        .map(|(vb, wb)| vb.adjoint().mul(wb))
        .collect();
    Ok(AlgebraElement::new(v.algebra.clone(), blocks))
}

/// Apply a module map to a vector.
pub fn apply(t: &ModuleMap, v: &ModuleVector) -> ModuleVector {
    assert_eq!(t.algebra, v.algebra);
    assert_eq!(t.domain_rank, v.rank);
    let blocks = t
        .blocks
        .iter()
        .zip(&v.blocks)
        .map(|(tb, vb)| tb.mul(vb))
        .collect();
    ModuleVector {
        algebra: t.algebra.clone(),
        rank: t.codomain_rank,
        blocks,
    }
}

/// The rank-one operator `theta_{v,w}(u) = v <w, u>`; its matrix is `v w^*`.
pub fn rank_one(v: &ModuleVector, w: &ModuleVector) -> ModuleMap {
    assert_eq!(v.algebra, w.algebra);
    let blocks = v
        .blocks
        .iter()
        .zip(&w.blocks)
        .map(|(vb, wb)| vb.mul(&wb.adjoint()))
        .collect();
    ModuleMap {
        algebra: v.algebra.clone(),
        domain_rank: w.rank,
        codomain_rank: v.rank,
        blocks,
    }
}

/// Fiberwise positivity of `<v, v>`: smallest eigenvalue over the sample
/// grid. Positivity of the module inner product is equivalent to fiberwise
/// positivity for loop matrices.
pub fn inner_self_min_eigenvalue(v: &ModuleVector, grid: crate::tol::SampleGrid) -> f64 {
    let g = inner_product(v, v).expect("same module");
    let mut min_ev = f64::INFINITY;
    for j in 0..v.algebra.fiber_count(grid) {
        let m = g.evaluate(grid.theta(j));
        let h = nalgebra::SymmetricEigen::new(m);
        for ev in h.eigenvalues.iter() {
            min_ev = min_ev.min(*ev);
        }
    }
    min_ev
}

// ---------------------------------------------------------------------------
// JSON: a module map is a codomain x domain grid of algebra elements.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ModuleMapWire {
    domain_rank: usize,
    codomain_rank: usize,
    entries: Vec<Vec<AlgebraElement>>,
}

impl Serialize for ModuleMap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let entries = (0..self.codomain_rank)
            .map(|i| (0..self.domain_rank).map(|j| self.entry(i, j)).collect())
            .collect();
        ModuleMapWire {
            domain_rank: self.domain_rank,
            codomain_rank: self.codomain_rank,
            entries,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ModuleMap {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = ModuleMapWire::deserialize(deserializer)?;
        if wire.codomain_rank == 0 || wire.domain_rank == 0 {
            // rank-0 maps carry no entries; algebra defaults to scalar loops
            if !wire.entries.is_empty() && wire.entries.iter().all(|r| r.is_empty()) || wire.entries.is_empty() {
                return Ok(ModuleMap::zeros(
                    &Algebra::loops(1),
                    wire.domain_rank,
                    wire.codomain_rank,
                ));
            }
        }
        let algebra = wire
            .entries
            .first()
            .and_then(|r| r.first())
            .map(|e| e.algebra.clone())
            .ok_or_else(|| D::Error::custom("module map with no entries"))?;
        if wire.entries.len() != wire.codomain_rank
            || wire.entries.iter().any(|r| r.len() != wire.domain_rank)
        {
            return Err(D::Error::custom("entries grid must be codomain x domain"));
        }
        Ok(ModuleMap::from_entries(
            &algebra,
            wire.domain_rank,
            wire.codomain_rank,
            &wire.entries,
        ))
    }
}
