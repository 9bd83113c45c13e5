//! Dense linear algebra helpers shared by the operator modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result, C64};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;
pub type RVec = DVector<f64>;
pub type CVec = DVector<C64>;

/// `log det M` for a complex matrix via partially pivoted LU; the imaginary
/// part is the phase modulo `2π`.
pub fn log_det(m: &CMat) -> Result<C64> {
    let n = m.nrows();
    let lu = m.clone().lu();
    let u = lu.u();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        let d = u[(i, i)];
        if d.norm() == 0.0 {
            return Err(Error::Singular {
                context: "log_det".into(),
                smallest_singular: 0.0,
            });
        }
        acc += d.ln();
    }
    if lu.p().determinant::<f64>() < 0.0 {
        acc += C64::new(0.0, std::f64::consts::PI);
    }
    Ok(acc)
}

/// `log det` of a real symmetric positive definite matrix.
pub fn log_det_spd(m: &RMat) -> Result<f64> {
    let chol = m.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite {
        min_eig: min_eigenvalue(m),
    })?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

pub fn min_eigenvalue(m: &RMat) -> f64 {
    let sym = 0.5 * (m + m.transpose());
    SymmetricEigen::new(sym).eigenvalues.min()
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

pub fn smallest_singular_value(m: &CMat) -> f64 {
    singular_values(m)[0]
}

/// Inverse with a singularity report.
pub fn inverse(m: &CMat, context: &str) -> Result<CMat> {
    m.clone().try_inverse().ok_or_else(|| Error::Singular {
        context: context.into(),
        smallest_singular: smallest_singular_value(m),
    })
}

pub fn inverse_real(m: &RMat, context: &str) -> Result<RMat> {
    m.clone().try_inverse().ok_or_else(|| Error::Singular {
        context: context.into(),
        smallest_singular: m.clone().svd(false, false).singular_values.min(),
    })
}

/// Orthonormal basis (columns) of the null space of `m`, from the
/// eigenvectors of `mᵀm` whose eigenvalues fall below `rel_tol · max`.
pub fn null_space(m: &RMat, rel_tol: f64) -> RMat {
    let n = m.ncols();
    if m.nrows() == 0 {
        return RMat::identity(n, n);
    }
    let gram = m.transpose() * m;
    let eig = SymmetricEigen::new(gram);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let cols: Vec<RVec> = (0..n)
        .filter(|&i| eig.eigenvalues[i].abs() <= rel_tol * scale)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        RMat::zeros(n, 0)
    } else {
        RMat::from_columns(&cols)
    }
}

/// Numerical rank from singular values above `rel_tol · max`.
pub fn rank(m: &RMat, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let s = m.clone().svd(false, false).singular_values;
    let top = s.max();
    s.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Largest absolute entry.
pub fn max_abs<T: nalgebra::ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.clone().modulus()))
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|v| C64::new(v, 0.0))
}

/// Gauss–Hermite rule for the standard normal density (Golub–Welsch):
/// `Σ wᵢ f(xᵢ) ≈ ∫ f(x) e^{-x²/2} dx / √(2π)`, exact for degree `< 2n`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = RMat::zeros(n, n);
    for i in 1..n {
        let b = (i as f64).sqrt();
        j[(i, i - 1)] = b;
        j[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// Fit of `y ≈ C e^{-κ r}` by least squares on `log y`, together with the
/// envelope constant making the bound hold at every sample.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub amplitude: f64,
    pub envelope: f64,
    pub samples: usize,
}

pub fn fit_decay(samples: &[(f64, f64)]) -> DecayFit {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, y)| *y > 1e-300)
        .map(|&(r, y)| (r, y.ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rate = -slope;
    let envelope = pts.iter().fold(0.0f64, |a, p| a.max(p.1 + rate * p.0)).exp();
    DecayFit {
        rate,
        amplitude: (my - slope * mx).exp(),
        envelope,
        samples: pts.len(),
    }
}

/// Largest value of `y` in each distance shell, rounded to `1e-9`.
pub fn shell_maxima(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut shells: Vec<(f64, f64)> = Vec::new();
    for &(r, y) in samples {
        match shells.iter_mut().find(|s| (s.0 - r).abs() < 1e-9) {
            Some(s) => s.1 = s.1.max(y),
            None => shells.push((r, y)),
        }
    }
    shells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    shells
}
