//! Desk-scale model generation: suspension foliations of permutations with
//! cycle-graph leaf discretizations, subdivision and conjugation chain maps,
//! and random finite-dimensional HP complexes valid by construction.

use crate::algebra::{Algebra, AlgebraKind, LoopMat};
use crate::error::HpError;
use crate::groupoid::DiscreteGroupoid;
use crate::homotopy::ChainMap;
use crate::hp::HPComplexData;
use crate::loops::LoopScalar;
use crate::module::ModuleMap;
use crate::perm::Permutation;
use crate::C64;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// The gauged cyclic shift on `n` sites: `R[j, j+1] = 1` and `R[n-1, 0] = z`.
/// Unitary; `R - I` is the cycle-graph difference operator with the
/// wraparound weight on the last edge.
pub fn shift_block(n: usize) -> LoopMat {
    let mut r = LoopMat::zeros(n, n);
    for j in 0..n.saturating_sub(1) {
        *r.at_mut(j, j + 1) = LoopScalar::one();
    }
    if n >= 1 {
        let z = LoopScalar::monomial(one(), 1);
        if n == 1 {
            *r.at_mut(0, 0) = z;
        } else {
            *r.at_mut(n - 1, 0) = z;
        }
    }
    r
}

/// A suspension foliation model: the mapping torus of a permutation with
/// `k` vertices per fundamental domain, Fourier-transformed to loop-algebra
/// modules. One algebra block of size `cycle_length * k` per sigma-cycle.
#[derive(Debug, Clone)]
pub struct SuspensionModel {
    pub sigma: Permutation,
    pub k: usize,
    pub groupoid: DiscreteGroupoid,
    pub complex: HPComplexData,
}

impl SuspensionModel {
    /// The complex re-read over scalar loop coefficients (the Morita
    /// identification), where chain maps between different models live.
    pub fn scalar_complex(&self) -> HPComplexData {
        self.complex.rebase_to_scalars()
    }
}

/// Build the suspension model of `sigma` with `k` vertices per fundamental
/// domain. Degree 0 and 1 are both free of rank one over the block algebra;
/// the differential is `R - I` and the duality is the averaging operator
/// `T_0 = (I + R)/2`, `T_1 = (I + R*)/2` blockwise.
pub fn suspension_model(sigma: &Permutation, k: usize) -> Result<SuspensionModel, HpError> {
    if sigma.is_empty() || k == 0 {
        return Err(HpError::InvalidInput(
            "need at least one point and one vertex per domain".into(),
        ));
    }
    let cycles = sigma.cycles();
    let block_sizes: Vec<usize> = cycles.iter().map(|c| c.len() * k).collect();
    let algebra = Algebra::loop_blocks(block_sizes.clone());

    let mut b_blocks = Vec::new();
    let mut t0_blocks = Vec::new();
    let mut t1_blocks = Vec::new();
    for n in &block_sizes {
        let r = shift_block(*n);
        let i = LoopMat::identity(*n);
        b_blocks.push(r.sub(&i));
        t0_blocks.push(i.add(&r).scale(re(0.5)));
        t1_blocks.push(i.add(&r.adjoint()).scale(re(0.5)));
    }
    let b = ModuleMap::new(algebra.clone(), 1, 1, b_blocks);
    let t0 = ModuleMap::new(algebra.clone(), 1, 1, t0_blocks);
    let t1 = ModuleMap::new(algebra.clone(), 1, 1, t1_blocks);
    let complex = HPComplexData::new(algebra, vec![1, 1], vec![b], vec![t0, t1])?;

    Ok(SuspensionModel {
        sigma: sigma.clone(),
        k,
        groupoid: DiscreteGroupoid::graded(sigma.clone()),
        complex,
    })
}

/// Per-cycle vertex subdivision matrices over scalar loops.
///
/// Degree 0 interpolates linearly (original vertex values copied, new
/// vertices filled in along the edge, the wraparound leg weighted by z);
/// degree 1 splits each edge value equally over its refinements. Both
/// commute with the differentials exactly.
fn subdivision_blocks(n_coarse: usize, factor: usize) -> (LoopMat, LoopMat) {
    let nf = n_coarse * factor;
    let mut a0 = LoopMat::zeros(nf, n_coarse);
    let mut a1 = LoopMat::zeros(nf, n_coarse);
    let z = LoopScalar::monomial(one(), 1);
    for j in 0..n_coarse {
        for r in 0..factor {
            let frac = r as f64 / factor as f64;
            let row = j * factor + r;
            // vertex interpolation: (1 - r/F) f(j) + (r/F) f(j+1), wrapping with z
            *a0.at_mut(row, j) = a0.at(row, j).add(&LoopScalar::real(1.0 - frac));
            let nxt = (j + 1) % n_coarse;
            let weight = if j + 1 == n_coarse {
                z.scale(re(frac))
            } else {
                LoopScalar::real(frac)
            };
            *a0.at_mut(row, nxt) = a0.at(row, nxt).add(&weight);
            // edge split
            *a1.at_mut(row, j) = LoopScalar::real(1.0 / factor as f64);
        }
    }
    (a0, a1)
}

/// Per-cycle restriction matrices (the cochain transpose of subdivision):
/// vertices restrict to the coarse sites, edge values sum over each group.
fn restriction_blocks(n_coarse: usize, factor: usize) -> (LoopMat, LoopMat) {
    let nf = n_coarse * factor;
    let mut q0 = LoopMat::zeros(n_coarse, nf);
    let mut q1 = LoopMat::zeros(n_coarse, nf);
    for j in 0..n_coarse {
        *q0.at_mut(j, j * factor) = LoopScalar::one();
        for r in 0..factor {
            *q1.at_mut(j, j * factor + r) = LoopScalar::one();
        }
    }
    (q0, q1)
}

/// The subdivision chain map from `model(sigma, k)` to
/// `model(sigma, k * factor)`, over scalar loop coefficients.
pub fn subdivision_equivalence(
    model: &SuspensionModel,
    factor: usize,
) -> Result<ChainMap, HpError> {
    if factor == 0 {
        return Err(HpError::InvalidInput("factor must be positive".into()));
    }
    let fine = suspension_model(&model.sigma, model.k * factor)?;
    let coarse_c = model.scalar_complex();
    let fine_c = fine.scalar_complex();
    let mut a0_parts = Vec::new();
    let mut a1_parts = Vec::new();
    for cyc in model.sigma.cycles() {
        let n = cyc.len() * model.k;
        let (a0, a1) = subdivision_blocks(n, factor);
        a0_parts.push(a0);
        a1_parts.push(a1);
    }
    let algebra = coarse_c.algebra.clone();
    let stack = |parts: &[LoopMat]| {
        let refs: Vec<&LoopMat> = parts.iter().collect();
        let full = LoopMat::block_diag(&refs);
        ModuleMap::new(algebra.clone(), full.cols, full.rows, vec![full])
    };
    ChainMap::new(coarse_c, fine_c, vec![stack(&a0_parts), stack(&a1_parts)])
}

/// The restriction chain map from `model(sigma, k * factor)` down to
/// `model(sigma, k)`, over scalar loop coefficients.
pub fn restriction_map(model: &SuspensionModel, factor: usize) -> Result<ChainMap, HpError> {
    if factor == 0 {
        return Err(HpError::InvalidInput("factor must be positive".into()));
    }
    let fine = suspension_model(&model.sigma, model.k * factor)?;
    let coarse_c = model.scalar_complex();
    let fine_c = fine.scalar_complex();
    let mut q0_parts = Vec::new();
    let mut q1_parts = Vec::new();
    for cyc in model.sigma.cycles() {
        let n = cyc.len() * model.k;
        let (q0, q1) = restriction_blocks(n, factor);
        q0_parts.push(q0);
        q1_parts.push(q1);
    }
    let algebra = coarse_c.algebra.clone();
    let stack = |parts: &[LoopMat]| {
        let refs: Vec<&LoopMat> = parts.iter().collect();
        let full = LoopMat::block_diag(&refs);
        ModuleMap::new(algebra.clone(), full.cols, full.rows, vec![full])
    };
    ChainMap::new(fine_c, coarse_c, vec![stack(&q0_parts), stack(&q1_parts)])
}

/// Round-trip data on the fine model: the projection `P = A Q` (subdivide
/// after restricting) together with the prism homotopy `K: E^1 -> E^0`
/// witnessing `P - I = K d + d K` exactly.
pub struct RoundTrip {
    pub fine: HPComplexData,
    pub projection: Vec<ModuleMap>,
    pub prism: ModuleMap,
}

/// Build the subdivision round trip `k -> k*factor -> k` on the fine model.
pub fn subdivision_round_trip(
    model: &SuspensionModel,
    factor: usize,
) -> Result<RoundTrip, HpError> {
    let a = subdivision_equivalence(model, factor)?;
    let q = restriction_map(model, factor)?;
    let fine = a.target.clone();
    let projection: Vec<ModuleMap> = (0..=1)
        .map(|p| a.blocks[p].compose(&q.blocks[p]))
        .collect();

    // prism operator per cycle: K(g)(v_{jF+r}) =
    //   (r/F) sum_{s<F} g(e_{jF+s}) - sum_{s<r} g(e_{jF+s})
    let mut k_parts = Vec::new();
    for cyc in model.sigma.cycles() {
        let n = cyc.len() * model.k;
        let nf = n * factor;
        let mut km = LoopMat::zeros(nf, nf);
        for j in 0..n {
            for r in 0..factor {
                let row = j * factor + r;
                for s in 0..factor {
                    let mut coeff = r as f64 / factor as f64;
                    if s < r {
                        coeff -= 1.0;
                    }
                    if coeff != 0.0 {
                        *km.at_mut(row, j * factor + s) = LoopScalar::real(coeff);
                    }
                }
            }
        }
        k_parts.push(km);
    }
    let refs: Vec<&LoopMat> = k_parts.iter().collect();
    let full = LoopMat::block_diag(&refs);
    let prism = ModuleMap::new(fine.algebra.clone(), full.cols, full.rows, vec![full]);
    Ok(RoundTrip {
        fine,
        projection,
        prism,
    })
}

/// The relabeling isomorphism from `model(sigma, k)` to
/// `model(tau sigma tau^{-1}, k)`: a permutation of blocks composed with a
/// gauged rotation aligning each cycle with its relabeled basepoint. An
/// exact isometric isomorphism of HP complexes.
pub fn conjugation_isomorphism(
    sigma: &Permutation,
    tau: &Permutation,
    k: usize,
) -> Result<ChainMap, HpError> {
    if sigma.len() != tau.len() {
        return Err(HpError::IncompatibleShapes(
            "sigma and tau act on different point sets".into(),
        ));
    }
    let source = suspension_model(sigma, k)?;
    let sigma2 = sigma.conjugate_by(tau);
    let target = suspension_model(&sigma2, k)?;

    let src_cycles = sigma.cycles();
    let tgt_cycles = sigma2.cycles();
    // offsets of each block inside the scalar-rebased total space
    let offset_of = |cycles: &[Vec<usize>], idx: usize| -> usize {
        cycles[..idx].iter().map(|c| c.len() * k).sum()
    };

    let total: usize = sigma.len() * k;
    let mut full = LoopMat::zeros(total, total);
    for (si, cyc) in src_cycles.iter().enumerate() {
        let c = cyc.len();
        let n = c * k;
        // the image cycle and the offset of the new basepoint inside it
        let image_min = cyc.iter().map(|p| tau.apply(*p)).min().unwrap();
        let ti = tgt_cycles
            .iter()
            .position(|tc| tc[0] == image_min)
            .expect("image cycle exists");
        let d = cyc
            .iter()
            .position(|p| tau.apply(*p) == image_min)
            .expect("basepoint in cycle");
        // block map: R^{d k} on the canonical n-site cycle
        let r = shift_block(n);
        let mut rot = LoopMat::identity(n);
        for _ in 0..(d * k) {
            rot = r.mul(&rot);
        }
        full.paste(offset_of(&tgt_cycles, ti), offset_of(&src_cycles, si), &rot);
    }
    let algebra = Algebra::loops(1);
    let block = ModuleMap::new(algebra, total, total, vec![full]);
    ChainMap::new(
        source.scalar_complex(),
        target.scalar_complex(),
        vec![block.clone(), block],
    )
}

// ---------------------------------------------------------------------------
// Random finite-dimensional HP complexes
// ---------------------------------------------------------------------------

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let g = DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    g.qr().q()
}

fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    // unitary times a diagonal bounded away from zero keeps conditioning tame
    let u = random_unitary(rng, n);
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(rng.gen_range(0.5..2.0), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let v = random_unitary(rng, n);
    u * d * v
}

fn random_definite_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    &g * g.adjoint() + DMatrix::<C64>::identity(n, n) * C64::new(0.5, 0.0)
}

struct HodgeFrame {
    /// orthonormal basis per degree; columns ordered [harmonic | image | coimage]
    q: Vec<DMatrix<C64>>,
    h: Vec<usize>,
    c: Vec<usize>,
    ranks: Vec<usize>,
}

impl HodgeFrame {
    // column ranges inside Q_p
    fn harm_cols(&self, p: usize) -> std::ops::Range<usize> {
        0..self.h[p]
    }

    fn image_cols(&self, p: usize) -> std::ops::Range<usize> {
        let c_in = if p == 0 { 0 } else { self.c[p - 1] };
        self.h[p]..self.h[p] + c_in
    }

    fn coimage_cols(&self, p: usize) -> std::ops::Range<usize> {
        let c_in = if p == 0 { 0 } else { self.c[p - 1] };
        self.h[p] + c_in..self.ranks[p]
    }

    fn cols(&self, p: usize, range: std::ops::Range<usize>) -> DMatrix<C64> {
        let q = &self.q[p];
        let mut out = DMatrix::zeros(q.nrows(), range.len());
        for (o, col) in range.enumerate() {
            out.set_column(o, &q.column(col));
        }
        out
    }
}

/// Choose ranks of the differentials subject to the duality symmetry
/// `c_p = c_{n-1-p}` and the Hodge inequalities.
fn choose_chain_ranks(
    rng: &mut ChaCha8Rng,
    ranks: &[usize],
    acyclic: bool,
) -> Result<Vec<usize>, HpError> {
    let n = ranks.len() - 1;
    if n == 0 {
        return Ok(vec![]);
    }
    if acyclic {
        let mut c = vec![0usize; n];
        let mut prev = 0usize;
        for p in 0..n {
            let cp = ranks[p].checked_sub(prev).ok_or_else(|| {
                HpError::InfeasibleRanks("no acyclic complex with these ranks".into())
            })?;
            c[p] = cp;
            prev = cp;
        }
        if ranks[n] != prev {
            return Err(HpError::InfeasibleRanks(
                "acyclic Euler condition fails at the top degree".into(),
            ));
        }
        for p in 0..n {
            if c[p] != c[n - 1 - p] {
                return Err(HpError::InfeasibleRanks(
                    "acyclic chain ranks are not duality-symmetric".into(),
                ));
            }
        }
        return Ok(c);
    }
    // non-acyclic: sample symmetric c with some cohomology left
    for _ in 0..200 {
        let mut c = vec![0usize; n];
        for p in 0..n.div_ceil(2) {
            let prev = if p == 0 { 0 } else { c[p - 1] };
            let hi = ranks[p].saturating_sub(prev).min(ranks[p + 1]);
            let cp = if hi == 0 { 0 } else { rng.gen_range(0..=hi) };
            c[p] = cp;
            c[n - 1 - p] = cp;
        }
        let feasible = (0..=n).all(|p| {
            let c_in = if p == 0 { 0 } else { c[p - 1] };
            let c_out = if p == n { 0 } else { c[p] };
            c_in + c_out <= ranks[p]
        });
        if !feasible {
            continue;
        }
        let total_h: usize = (0..=n)
            .map(|p| {
                let c_in = if p == 0 { 0 } else { c[p - 1] };
                let c_out = if p == n { 0 } else { c[p] };
                ranks[p] - c_in - c_out
            })
            .sum();
        if total_h > 0 {
            return Ok(c);
        }
    }
    Err(HpError::InfeasibleRanks(
        "could not sample a non-acyclic symmetric chain profile".into(),
    ))
}

/// A random HP complex over the complex numbers, valid by construction:
/// differentials built from a Hodge frame, and the duality assembled from
/// harmonic blocks and image/coimage exchanges that satisfy conditions
/// (1)-(3) exactly.
///
/// Ranks must be duality-symmetric (`ranks[p] = ranks[n-p]`).
pub fn random_hp_complex(
    seed: u64,
    ranks: &[usize],
    acyclic: bool,
) -> Result<HPComplexData, HpError> {
    if ranks.is_empty() {
        return Err(HpError::InfeasibleRanks("need at least degree zero".into()));
    }
    let n = ranks.len() - 1;
    for p in 0..=n {
        if ranks[p] != ranks[n - p] {
            return Err(HpError::InfeasibleRanks(
                "ranks must be palindromic for a duality to exist".into(),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = choose_chain_ranks(&mut rng, ranks, acyclic)?;
    let h: Vec<usize> = (0..=n)
        .map(|p| {
            let c_in = if p == 0 { 0 } else { c[p - 1] };
            let c_out = if p == n { 0 } else { c[p] };
            ranks[p] - c_in - c_out
        })
        .collect();

    let frame = HodgeFrame {
        q: ranks.iter().map(|r| random_unitary(&mut rng, *r)).collect(),
        h,
        c: c.clone(),
        ranks: ranks.to_vec(),
    };

    // differentials: b_p maps the coimage columns of Q_p onto the image
    // columns of Q_{p+1} with singular values in [1/2, 2]
    let mut b_fibers: Vec<DMatrix<C64>> = Vec::new();
    let mut beta: Vec<DMatrix<C64>> = Vec::new(); // invertible c_p x c_p cores
    for p in 0..n {
        let cp = c[p];
        let d = DMatrix::from_fn(cp, cp, |i, j| {
            if i == j {
                C64::new(rng.gen_range(0.5..2.0), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let coim = frame.cols(p, frame.coimage_cols(p));
        let im = frame.cols(p + 1, frame.image_cols(p + 1));
        b_fibers.push(&im * &d * coim.adjoint());
        beta.push(d);
    }

    // duality cores per degree: x_p: image_p -> coimage_{n-p},
    // y_p: coimage_p -> image_{n-p}, harm_p: harmonic_p -> harmonic_{n-p}
    let mut x: Vec<Option<DMatrix<C64>>> = vec![None; n + 2];
    let mut y: Vec<Option<DMatrix<C64>>> = vec![None; n + 1];
    let sign = |e: usize| if e % 2 == 0 { 1.0 } else { -1.0 };
    for p in 0..n {
        if c[p] == 0 {
            continue;
        }
        let partner = n - 1 - p;
        if p < partner {
            let xf = random_invertible(&mut rng, c[p]);
            // y_p = (-1)^{p+1} beta_{n-p-1} x_{p+1} (beta_p^*)^{-1}
            let yb = (&beta[partner] * &xf * beta[p].adjoint().try_inverse().unwrap())
                * C64::new(sign(p + 1), 0.0);
            // mirrored blocks from condition (1)
            let xm = yb.adjoint() * C64::new(sign((n - p) * p), 0.0);
            let ym = xf.adjoint() * C64::new(sign((n - p - 1) * (p + 1)), 0.0);
            x[p + 1] = Some(xf);
            y[p] = Some(yb);
            x[n - p] = Some(xm);
            y[n - p - 1] = Some(ym);
        } else if p == partner {
            // middle piece (odd n): beta x must be (skew-)Hermitian
            let m0 = random_definite_hermitian(&mut rng, c[p]);
            let l = (n - 1) / 2;
            let m = if l % 2 == 1 {
                m0
            } else {
                m0 * C64::new(0.0, 1.0)
            };
            let xf = beta[p].clone().try_inverse().unwrap() * m;
            y[p] = Some(xf.adjoint());
            x[p + 1] = Some(xf);
        }
    }

    let mut harm: Vec<Option<DMatrix<C64>>> = vec![None; n + 1];
    for p in 0..=n {
        if frame.h[p] == 0 || harm[p].is_some() {
            continue;
        }
        if p < n - p {
            let hf = random_invertible(&mut rng, frame.h[p]);
            harm[n - p] = Some(hf.adjoint() * C64::new(sign((n - p) * p), 0.0));
            harm[p] = Some(hf);
        } else if p == n - p {
            // self-dual middle degree (even n)
            let e = p * p;
            let m = random_definite_hermitian(&mut rng, frame.h[p]);
            harm[p] = Some(if e % 2 == 0 { m } else { m * C64::new(0.0, 1.0) });
        }
    }

    // assemble T_p = Q_{n-p} [blocks] Q_p^*
    let mut t_fibers: Vec<DMatrix<C64>> = Vec::new();
    for p in 0..=n {
        let mut tf = DMatrix::<C64>::zeros(ranks[n - p], ranks[p]);
        if let Some(hf) = &harm[p] {
            let rows = frame.cols(n - p, frame.harm_cols(n - p));
            let cols = frame.cols(p, frame.harm_cols(p));
            tf += rows * hf * cols.adjoint();
        }
        if let Some(xf) = &x[p] {
            // x_p: image_p -> coimage_{n-p}
            let rows = frame.cols(n - p, frame.coimage_cols(n - p));
            let cols = frame.cols(p, frame.image_cols(p));
            tf += rows * xf * cols.adjoint();
        }
        if let Some(yf) = &y[p] {
            // y_p: coimage_p -> image_{n-p}
            let rows = frame.cols(n - p, frame.image_cols(n - p));
            let cols = frame.cols(p, frame.coimage_cols(p));
            tf += rows * yf * cols.adjoint();
        }
        t_fibers.push(tf);
    }

    let algebra = Algebra::matrix(1);
    let to_map = |m: &DMatrix<C64>| {
        ModuleMap::new(
            algebra.clone(),
            m.ncols(),
            m.nrows(),
            vec![LoopMat::from_complex(m)],
        )
    };
    HPComplexData::new(
        algebra.clone(),
        ranks.to_vec(),
        b_fibers.iter().map(&to_map).collect(),
        t_fibers.iter().map(&to_map).collect(),
    )
}

/// A rank-(1,1) acyclic complex over the complex numbers whose symmetrized
/// duality squares to `mu^2`; at `mu = 1` it feeds the Cayley-transform
/// comparison.
pub fn acyclic_pair_model(mu: f64) -> HPComplexData {
    let algebra = Algebra::matrix(1);
    let scalar = |v: C64| {
        ModuleMap::new(
            algebra.clone(),
            1,
            1,
            vec![LoopMat::from_entries(1, 1, vec![LoopScalar::constant(v)])],
        )
    };
    HPComplexData::new(
        algebra.clone(),
        vec![1, 1],
        vec![scalar(one())],
        vec![scalar(C64::new(0.0, -mu)), scalar(C64::new(0.0, mu))],
    )
    .expect("static shape")
}

/// Stabilize by a generated acyclic complex: the input is rebased to scalar
/// coefficients and summed with a random acyclic complex of the given ranks
/// (matching the original length), leaving the signature winding unchanged.
pub fn acyclic_padding(
    c: &HPComplexData,
    ranks: &[usize],
    seed: u64,
) -> Result<HPComplexData, HpError> {
    let base = c.rebase_to_scalars();
    if ranks.iter().all(|r| *r == 0) {
        return Ok(base);
    }
    if ranks.len() != base.ranks.len() {
        return Err(HpError::IncompatibleShapes(
            "padding must have the same length as the complex".into(),
        ));
    }
    let mut pad = random_hp_complex(seed, ranks, true)?;
    if base.algebra.kind == AlgebraKind::Loop {
        pad = pad.promote_to_loops();
    }
    base.direct_sum(&pad, false)
}
