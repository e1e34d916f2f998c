use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{param, LdError, Result};

/// Rows of `y2` projected onto the leading eigenvectors of `y1ᵀy1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralProjection {
    /// p × r orthonormal basis
    pub basis: DMatrix<f64>,
    /// y2 · basis, one r-dimensional row per point
    pub coords: DMatrix<f64>,
}

impl SpectralProjection {
    /// Projected points back in ℝᵖ.
    pub fn ambient(&self) -> DMatrix<f64> {
        &self.coords * self.basis.transpose()
    }
}

/// Projects the rows of `y2` on the span of the top-`k` eigenvectors of
/// `y1ᵀy1`; `k ≥ p` keeps every coordinate.
pub fn spectral_project(y1: &DMatrix<f64>, y2: &DMatrix<f64>, k: usize) -> Result<SpectralProjection> {
    let p = y1.ncols();
    if y2.ncols() != p {
        return Err(LdError::Mismatch(format!("{} vs {} columns", p, y2.ncols())));
    }
    if k == 0 {
        return param("projection rank must be positive");
    }
    if k >= p {
        return Ok(SpectralProjection {
            basis: DMatrix::identity(p, p),
            coords: y2.clone(),
        });
    }
    let gram = y1.tr_mul(y1);
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(LdError::Numeric("non-finite Gram matrix".into()));
    }
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 0)
        .ok_or_else(|| LdError::Numeric("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..p).collect();
    // descending eigenvalue, lower index first on ties
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let basis = eig.eigenvectors.select_columns(order[..k].iter());
    let defect = (basis.tr_mul(&basis) - DMatrix::<f64>::identity(k, k)).amax();
    if defect > 1e-10 {
        return Err(LdError::Numeric(format!(
            "eigenvectors not orthonormal (defect {defect:e})"
        )));
    }
    Ok(SpectralProjection {
        coords: y2 * &basis,
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian, rng_from_seed};

    fn noise(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        DMatrix::from_fn(n, p, |_, _| gaussian(&mut rng))
    }

    #[test]
    fn rank_one_preserved() {
        let mut y = DMatrix::zeros(5, 4);
        y.column_mut(0).fill(1.0);
        let proj = spectral_project(&y, &y, 1).unwrap();
        assert!((proj.ambient() - &y).amax() < 1e-12);
    }

    #[test]
    fn full_rank_is_identity() {
        let y = noise(10, 4, 1);
        let proj = spectral_project(&y, &y, 4).unwrap();
        assert!((proj.ambient() - &y).amax() < 1e-8);
    }

    #[test]
    fn orthonormal_and_idempotent() {
        let y1 = noise(30, 8, 2);
        let y2 = noise(12, 8, 3);
        let proj = spectral_project(&y1, &y2, 3).unwrap();
        let b = &proj.basis;
        assert!((b.tr_mul(b) - DMatrix::<f64>::identity(3, 3)).amax() < 1e-10);
        let once = proj.ambient();
        let twice = spectral_project(&y1, &once, 3).unwrap().ambient();
        assert!((twice - once).amax() < 1e-10);
    }

    #[test]
    fn picks_dominant_direction() {
        let mut y1 = noise(200, 6, 4);
        for i in 0..200 {
            y1[(i, 2)] += if i % 2 == 0 { 10.0 } else { -10.0 };
        }
        let proj = spectral_project(&y1, &y1, 1).unwrap();
        assert!(proj.basis[(2, 0)].abs() > 0.99);
    }

    #[test]
    fn mismatch_rejected() {
        assert!(spectral_project(&noise(3, 3, 0), &noise(3, 2, 0), 1).is_err());
    }
}
