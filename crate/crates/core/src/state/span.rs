use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::system::SystemSignature;
use crate::tensor::{outer, ComplexOperator, ComplexVector};

use super::{build_pure_state, distinct_pairings, sector_templates};

/// Singular values at or below this count as zero.
pub const RANK_CUTOFF: f64 = 1e-8;

/// Largest total dimension accepted by [`span_dimensions`].
pub const SPAN_MAX_DIM: usize = 32;

/// Real linear dimensions of the span of product states and of all states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpanDimensions {
    pub product: usize,
    pub state: usize,
}

/// Real coordinates of a Hermitian operator: diagonal and upper-triangle real
/// parts followed by strict upper-triangle imaginary parts.
pub(crate) fn hermitian_coordinates(op: &ComplexOperator) -> Vec<f64> {
    let n = op.dim();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in i..n {
            out.push(op.get(i, j).re);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(op.get(i, j).im);
        }
    }
    out
}

/// Rank of a family of real vectors, singular-value cutoff [`RANK_CUTOFF`].
pub(crate) fn real_rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let m = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    // SVD of the thinner orientation.
    let m = if m.nrows() > m.ncols() { m.transpose() } else { m };
    m.svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_CUTOFF)
        .count()
}

/// Dimension of the real span of product states and of the whole state space.
///
/// Product states are products of classical (diagonal) local states, so their
/// span is generated by the basis projectors. Every valid pure state lies in a
/// sector subspace of some pairing, and every unit vector of a sector subspace
/// is valid, so the state span is generated by `|e_a⟩⟨e_a|`, `|e_a+e_b⟩⟨..|`
/// and `|e_a+i e_b⟩⟨..|` over each sector's basis.
pub fn span_dimensions(sig: &SystemSignature) -> Result<SpanDimensions> {
    let dim = sig.total_dim();
    if dim > SPAN_MAX_DIM {
        return Err(Error::SizeCap(format!(
            "span computation limited to total dimension {SPAN_MAX_DIM}, {sig} has {dim}"
        )));
    }
    let products: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let e = ComplexVector::basis(dim, i);
            hermitian_coordinates(&outer(&e, &e))
        })
        .collect();

    let mut family: Vec<Vec<f64>> = Vec::new();
    let i_unit = Complex64::new(0.0, 1.0);
    for perm in distinct_pairings(sig) {
        for template in sector_templates(sig, &perm) {
            let basis: Vec<ComplexVector> = super::sector_basis(&template)
                .iter()
                .map(build_pure_state)
                .collect();
            for a in 0..basis.len() {
                family.push(hermitian_coordinates(&outer(&basis[a], &basis[a])));
                for b in a + 1..basis.len() {
                    let sum = &basis[a] + &basis[b];
                    let twisted = &basis[a] + &basis[b].scale(i_unit);
                    family.push(hermitian_coordinates(&outer(&sum, &sum)));
                    family.push(hermitian_coordinates(&outer(&twisted, &twisted)));
                }
            }
        }
    }
    Ok(SpanDimensions {
        product: real_rank(&products),
        state: real_rank(&family),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_anti_bit_span_is_four_versus_eight() {
        let s = SystemSignature::new(2, 1, 1).unwrap();
        assert_eq!(span_dimensions(&s).unwrap(), SpanDimensions { product: 4, state: 8 });
    }

    #[test]
    fn classical_bit_span() {
        let s = SystemSignature::new(2, 1, 0).unwrap();
        assert_eq!(span_dimensions(&s).unwrap(), SpanDimensions { product: 2, state: 2 });
    }

    #[test]
    fn oversized_system_is_rejected() {
        let s = SystemSignature::new(3, 2, 2).unwrap();
        assert!(matches!(span_dimensions(&s), Err(Error::SizeCap(_))));
    }
}
