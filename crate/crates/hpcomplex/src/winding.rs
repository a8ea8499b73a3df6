//! K1-class comparison of unitary loops: winding numbers of determinants,
//! and Morita transport of the class across a matrix-algebra factor.

use crate::algebra::AlgebraKind;
use crate::error::HpError;
use crate::fiber;
use crate::hp::UnitaryLoop;
use serde::{Deserialize, Serialize};

/// A K1 class over the coefficient algebra: trivial for complex matrix
/// algebras, an integer winding for loop algebras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum K1Class {
    /// K1 of a matrix algebra over the complex numbers vanishes.
    TrivialMatrixAlgebra,
    Winding(i64),
}

impl K1Class {
    pub fn winding(&self) -> i64 {
        match self {
            K1Class::TrivialMatrixAlgebra => 0,
            K1Class::Winding(w) => *w,
        }
    }
}

/// Winding number plus the rounding residual and sample count that produced
/// it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WindingResult {
    pub winding: i64,
    pub residual: f64,
    pub samples: usize,
}

const MAX_WINDING_SAMPLES: usize = 4096;

/// Accumulated argument of `det U(theta)` around the circle, divided by
/// `2 pi`. Fails when adjacent determinant phase steps reach `pi/2`; callers
/// with a resampler use [`winding_number_refined`] instead.
pub fn winding_number(u: &UnitaryLoop) -> Result<WindingResult, HpError> {
    if u.kind == AlgebraKind::Matrix {
        // constant loop over a matrix algebra: the class is trivial
        return Ok(WindingResult {
            winding: 0,
            residual: 0.0,
            samples: u.samples.len(),
        });
    }
    let n = u.samples.len();
    let dets: Vec<_> = u.samples.iter().map(|(_, m)| fiber::det(m)).collect();
    let mut total = 0.0;
    for j in 0..n {
        let a = dets[j];
        let b = dets[(j + 1) % n];
        let step = (b / a).arg();
        if step.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(HpError::LoopTooWild { samples: n });
        }
        total += step;
    }
    let turns = total / (2.0 * std::f64::consts::PI);
    let winding = turns.round() as i64;
    let residual = (turns - winding as f64).abs();
    if residual >= 0.1 {
        return Err(HpError::LoopTooWild { samples: n });
    }
    Ok(WindingResult {
        winding,
        residual,
        samples: n,
    })
}

/// Winding with automatic refinement: the sampler is asked for finer grids
/// (doubling, up to 4096 samples) until the phase steps are resolved.
pub fn winding_number_refined(
    kind: AlgebraKind,
    start_samples: usize,
    mut sampler: impl FnMut(usize) -> UnitaryLoop,
) -> Result<WindingResult, HpError> {
    if kind == AlgebraKind::Matrix {
        return Ok(WindingResult {
            winding: 0,
            residual: 0.0,
            samples: 1,
        });
    }
    let mut n = start_samples.max(2);
    loop {
        let u = sampler(n);
        match winding_number(&u) {
            Ok(res) => return Ok(res),
            Err(HpError::LoopTooWild { .. }) if n < MAX_WINDING_SAMPLES => n *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// Morita transport of a unitary loop over a block sum of matrix algebras
/// over loops down to the scalar loop algebra. The imprimitivity bimodule is
/// the standard column module, so the transported operator is the same
/// matrix read over scalars; the determinant, and with it the winding, is
/// untouched.
pub fn morita_transport(u: &UnitaryLoop, block_sizes: &[usize]) -> Result<UnitaryLoop, HpError> {
    let total: usize = block_sizes.iter().sum();
    if total != u.algebra_dim || block_sizes.is_empty() {
        return Err(HpError::IncompatibleShapes(format!(
            "bimodule blocks sum to {total}, loop algebra has dimension {}",
            u.algebra_dim
        )));
    }
    if u.dim % u.algebra_dim != 0 {
        return Err(HpError::IncompatibleShapes(format!(
            "loop dimension {} is not a multiple of the algebra dimension {}",
            u.dim, u.algebra_dim
        )));
    }
    Ok(UnitaryLoop {
        kind: u.kind,
        algebra_dim: 1,
        dim: u.dim,
        samples: u.samples.clone(),
    })
}

/// K1-class equality after stabilization. Matrix-algebra classes are always
/// equal (K1 vanishes there); loop classes compare by winding.
pub fn k1_equal(u1: &UnitaryLoop, u2: &UnitaryLoop) -> Result<bool, HpError> {
    if u1.kind != u2.kind {
        return Err(HpError::AlgebraMismatch(
            "cannot compare K1 classes over different algebra kinds".into(),
        ));
    }
    if u1.kind == AlgebraKind::Matrix {
        return Ok(true);
    }
    let w1 = winding_number(u1)?;
    let w2 = winding_number(u2)?;
    Ok(w1.winding == w2.winding)
}

pub fn k1_class(u: &UnitaryLoop) -> Result<K1Class, HpError> {
    match u.kind {
        AlgebraKind::Matrix => Ok(K1Class::TrivialMatrixAlgebra),
        AlgebraKind::Loop => Ok(K1Class::Winding(winding_number(u)?.winding)),
    }
}

/// Pointwise direct sum of two sampled loops on the same grid.
pub fn direct_sum_loops(u1: &UnitaryLoop, u2: &UnitaryLoop) -> Result<UnitaryLoop, HpError> {
    if u1.samples.len() != u2.samples.len() || u1.kind != u2.kind {
        return Err(HpError::IncompatibleShapes(
            "loops must share kind and grid".into(),
        ));
    }
    let dim = u1.dim + u2.dim;
    let samples = u1
        .samples
        .iter()
        .zip(&u2.samples)
        .map(|((theta, a), (_, b))| {
            let mut m = nalgebra::DMatrix::<crate::C64>::zeros(dim, dim);
            m.view_mut((0, 0), (u1.dim, u1.dim)).copy_from(a);
            m.view_mut((u1.dim, u1.dim), (u2.dim, u2.dim)).copy_from(b);
            (*theta, m)
        })
        .collect();
    Ok(UnitaryLoop {
        kind: u1.kind,
        algebra_dim: 1,
        dim,
        samples,
    })
}

/// Pointwise adjoint (inverse, for unitaries).
pub fn adjoint_loop(u: &UnitaryLoop) -> UnitaryLoop {
    UnitaryLoop {
        kind: u.kind,
        algebra_dim: u.algebra_dim,
        dim: u.dim,
        samples: u.samples.iter().map(|(t, m)| (*t, m.adjoint())).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loops::LoopScalar;
    use crate::tol::SampleGrid;
    use crate::C64;
    use nalgebra::DMatrix;

    fn loop_of(scalars: Vec<LoopScalar>, grid: SampleGrid) -> UnitaryLoop {
        let dim = scalars.len();
        let samples = (0..grid.n)
            .map(|j| {
                let theta = grid.theta(j);
                let m = DMatrix::from_fn(dim, dim, |i, jj| {
                    if i == jj {
                        scalars[i].evaluate(theta)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                (theta, m)
            })
            .collect();
        UnitaryLoop {
            kind: AlgebraKind::Loop,
            algebra_dim: 1,
            dim,
            samples,
        }
    }

    fn z_pow(k: i64) -> LoopScalar {
        LoopScalar::monomial(C64::new(1.0, 0.0), k)
    }

    #[test]
    fn winding_of_generator_is_one() {
        let u = loop_of(vec![z_pow(1)], SampleGrid::new(64));
        let w = winding_number(&u).unwrap();
        assert_eq!(w.winding, 1);
        assert!(w.residual < 1e-10);
    }

    #[test]
    fn winding_of_balanced_diag_is_zero() {
        let u = loop_of(vec![z_pow(1), z_pow(-1)], SampleGrid::new(64));
        assert_eq!(winding_number(&u).unwrap().winding, 0);
    }

    #[test]
    fn winding_additive_under_direct_sum() {
        let grid = SampleGrid::new(128);
        for (k1, k2) in [(1i64, 2i64), (-1, 3), (0, -2), (2, 2)] {
            let u1 = loop_of(vec![z_pow(k1)], grid);
            let u2 = loop_of(vec![z_pow(k2)], grid);
            let sum = direct_sum_loops(&u1, &u2).unwrap();
            assert_eq!(
                winding_number(&sum).unwrap().winding,
                k1 + k2,
                "winding not additive"
            );
        }
    }

    #[test]
    fn winding_negates_under_adjoint() {
        let u = loop_of(vec![z_pow(3)], SampleGrid::new(256));
        let w = winding_number(&u).unwrap().winding;
        let wa = winding_number(&adjoint_loop(&u)).unwrap().winding;
        assert_eq!(wa, -w);
    }

    #[test]
    fn winding_stable_under_grid_doubling() {
        let u256 = loop_of(vec![z_pow(2), z_pow(-1)], SampleGrid::new(256));
        let u512 = loop_of(vec![z_pow(2), z_pow(-1)], SampleGrid::new(512));
        assert_eq!(
            winding_number(&u256).unwrap().winding,
            winding_number(&u512).unwrap().winding
        );
    }

    #[test]
    fn wild_loop_refused_then_refined() {
        // z^40 at 64 samples steps by more than pi/2 per sample
        let coarse = loop_of(vec![z_pow(40)], SampleGrid::new(64));
        assert!(matches!(
            winding_number(&coarse),
            Err(HpError::LoopTooWild { .. })
        ));
        let res = winding_number_refined(AlgebraKind::Loop, 64, |n| {
            loop_of(vec![z_pow(40)], SampleGrid::new(n))
        })
        .unwrap();
        assert_eq!(res.winding, 40);
        assert!(res.samples > 64);
    }

    #[test]
    fn k1_equal_examples() {
        let grid = SampleGrid::new(128);
        let u = loop_of(vec![z_pow(1)], grid);
        let v = loop_of(vec![z_pow(2)], grid);
        assert!(k1_equal(&u, &u).unwrap());
        assert!(!k1_equal(&u, &v).unwrap());
    }

    #[test]
    fn matrix_kind_class_is_trivial() {
        let m = DMatrix::from_row_slice(1, 1, &[C64::new(0.0, 1.0)]);
        let u = UnitaryLoop {
            kind: AlgebraKind::Matrix,
            algebra_dim: 1,
            dim: 1,
            samples: vec![(0.0, m)],
        };
        assert_eq!(k1_class(&u).unwrap(), K1Class::TrivialMatrixAlgebra);
        assert_eq!(winding_number(&u).unwrap().winding, 0);
    }

    #[test]
    fn morita_transport_preserves_winding() {
        let grid = SampleGrid::new(128);
        // diag(z, 1) over M_2(loops): det = z, winding 1
        let mut u = loop_of(vec![z_pow(1), z_pow(0)], grid);
        u.algebra_dim = 2;
        let t = morita_transport(&u, &[2]).unwrap();
        assert_eq!(t.algebra_dim, 1);
        assert_eq!(winding_number(&t).unwrap().winding, 1);
        assert_eq!(
            winding_number(&u).unwrap().winding,
            winding_number(&t).unwrap().winding
        );
        // identity transports to identity
        let mut id = loop_of(vec![z_pow(0), z_pow(0)], grid);
        id.algebra_dim = 2;
        let tid = morita_transport(&id, &[1, 1]).unwrap();
        assert_eq!(winding_number(&tid).unwrap().winding, 0);
        // incompatible shapes refused
        assert!(morita_transport(&u, &[3]).is_err());
    }
}
