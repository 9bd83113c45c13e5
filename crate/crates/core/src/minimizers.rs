//! Constrained gauge minimizers, the gauge fluctuation covariance and the
//! fermion fluctuation operator `Γ(A)`.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::averaging::{build_axial_trees, fermion_average, gauge_average, AveragingOp, AxialTreeSet};
use crate::dirac::wilson_dirac;
use crate::fields::GaugeField;
use crate::lattice::TorusSpec;
use crate::linalg::{
    fit_decay, inverse, log_det, log_det_spd, min_eigenvalue, null_space, rank, shell_maxima, smallest_singular_value,
    CMat, CVec, DecayFit, RMat, RVec,
};
use crate::{Error, Result, C64, SPIN_DIM};

/// Plaquette × bond matrix of `d`, entries `±1/ε`.
pub fn curl_matrix(spec: &TorusSpec) -> RMat {
    let inv = 1.0 / spec.spacing();
    let mut m = RMat::zeros(spec.plaquette_count(), spec.bond_count());
    for p in 0..spec.plaquette_count() {
        for ob in spec.plaquette_boundary(spec.plaquette(p)) {
            m[(p, spec.bond_index(ob.bond))] += ob.sign() * inv;
        }
    }
    m
}

/// Gram matrix `K` with `‖dA‖² = Aᵀ K A`.
pub fn gauge_form(spec: &TorusSpec) -> RMat {
    let d = curl_matrix(spec);
    d.transpose() * d * spec.point_weight()
}

/// Bond × site matrix of the lattice gradient `ω ↦ dω`.
pub fn gradient_matrix(spec: &TorusSpec) -> RMat {
    let inv = 1.0 / spec.spacing();
    let mut m = RMat::zeros(spec.bond_count(), spec.site_count());
    for i in 0..spec.bond_count() {
        let b = spec.bond(i);
        m[(i, spec.site_index(spec.shift(b.site, b.axis, 1)))] += inv;
        m[(i, spec.site_index(b.site))] -= inv;
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gauge {
    Axial,
    Landau,
}

/// A linear map from coarse gauge fields to fine ones.
#[derive(Clone, Debug)]
pub struct ConstrainedMinimizer {
    pub gauge: Gauge,
    pub fine: TorusSpec,
    pub coarse: TorusSpec,
    /// Fine bonds × coarse bonds.
    pub matrix: RMat,
}

impl ConstrainedMinimizer {
    pub fn apply(&self, a1: &GaugeField) -> Result<GaugeField> {
        if a1.spec != self.coarse {
            return Err(Error::SpecMismatch("minimizer applied to field on wrong torus".into()));
        }
        let v = &self.matrix * RVec::from_column_slice(&a1.values);
        GaugeField::from_values(self.fine, v.iter().copied().collect())
    }

    /// Largest entry of `𝒬^k H − 1`.
    pub fn constraint_residual(&self, q_power: &RMat) -> f64 {
        let n = self.matrix.ncols();
        (q_power * &self.matrix - RMat::identity(n, n)).amax()
    }
}

/// Minimizer of `½‖dA‖²` with `𝒬A = A_1` and `A = 0` on the axial trees,
/// from the KKT system on the non-tree coordinates.
pub fn axial_minimizer(fine: &TorusSpec) -> Result<(ConstrainedMinimizer, AxialTreeSet)> {
    let trees = build_axial_trees(fine)?;
    let q = gauge_average(fine)?;
    let k = gauge_form(fine);
    let free: Vec<usize> = (0..fine.bond_count()).filter(|&b| !trees.contains(b)).collect();
    let nf = free.len();
    let nc = q.coarse.bond_count();
    let mut kkt = RMat::zeros(nf + nc, nf + nc);
    for (i, &bi) in free.iter().enumerate() {
        for (j, &bj) in free.iter().enumerate() {
            kkt[(i, j)] = k[(bi, bj)];
        }
        for c in 0..nc {
            kkt[(nf + c, i)] = q.matrix[(c, bi)];
            kkt[(i, nf + c)] = q.matrix[(c, bi)];
        }
    }
    let mut rhs = RMat::zeros(nf + nc, nc);
    for c in 0..nc {
        rhs[(nf + c, c)] = 1.0;
    }
    let sol = kkt.clone().lu().solve(&rhs).ok_or_else(|| Error::SingularKkt {
        rank: rank(&kkt, 1e-12),
        rows: nf + nc,
    })?;
    let mut h = RMat::zeros(fine.bond_count(), nc);
    for (i, &bi) in free.iter().enumerate() {
        h.set_row(bi, &sol.row(i));
    }
    Ok((
        ConstrainedMinimizer {
            gauge: Gauge::Axial,
            fine: *fine,
            coarse: q.coarse,
            matrix: h,
        },
        trees,
    ))
}

/// Landau minimizer and the gauge parameter relating it to the axial one.
#[derive(Clone, Debug)]
pub struct LandauMinimizer {
    pub minimizer: ConstrainedMinimizer,
    /// Sites × coarse bonds: `H^x A_1 = H_0 A_1 + d(W A_1)`.
    pub witness: RMat,
}

/// Minimum-norm minimizer of `½‖dA‖²` subject only to `𝒬A = A_1`.
///
/// The flat directions are the gradients `dω` with vanishing block means of
/// `ω`; removing them from the axial minimizer leaves the minimizer whose
/// divergence is constant on every block.
pub fn landau_minimizer(fine: &TorusSpec) -> Result<LandauMinimizer> {
    let (axial, _) = axial_minimizer(fine)?;
    let coarse = fine.coarsen()?;
    let l3 = (fine.base as f64).powi(3);
    let mut mean = RMat::zeros(coarse.site_count(), fine.site_count());
    for x in 0..fine.site_count() {
        mean[(coarse.site_index(fine.block_of(fine.site(x))), x)] = 1.0 / l3;
    }
    let n = null_space(&mean, 1e-12);
    let g = gradient_matrix(fine) * &n;
    let gram = g.transpose() * &g;
    let coeff = gram
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eig: 0.0 })?
        .solve(&(g.transpose() * &axial.matrix));
    let h0 = &axial.matrix - &g * &coeff;
    Ok(LandauMinimizer {
        minimizer: ConstrainedMinimizer {
            gauge: Gauge::Landau,
            fine: *fine,
            coarse,
            matrix: h0,
        },
        witness: n * coeff,
    })
}

/// `ℋ_k = H^{(0)} H^{(1)} ⋯ H^{(k-1)}` from the scale-`k` lattice to `fine`.
pub fn iterated_minimizer(fine: &TorusSpec, k: usize, gauge: Gauge) -> Result<ConstrainedMinimizer> {
    let mut spec = *fine;
    let mut out = ConstrainedMinimizer {
        gauge,
        fine: *fine,
        coarse: *fine,
        matrix: RMat::identity(fine.bond_count(), fine.bond_count()),
    };
    for _ in 0..k {
        let step = match gauge {
            Gauge::Axial => axial_minimizer(&spec)?.0,
            Gauge::Landau => landau_minimizer(&spec)?.minimizer,
        };
        out.matrix = &out.matrix * &step.matrix;
        out.coarse = step.coarse;
        spec = step.coarse;
    }
    Ok(out)
}

/// Midpoint of a bond in fine lattice units.
fn bond_midpoint(spec: &TorusSpec, bond: usize, unit: f64) -> [f64; 3] {
    let b = spec.bond(bond);
    let mut p = b.site.map(|v| v as f64 * unit);
    p[b.axis] += 0.5 * unit;
    p
}

fn coarse_bond_midpoint(coarse: &TorusSpec, bond: usize, l: usize) -> [f64; 3] {
    let b = coarse.bond(bond);
    let off = ((l - 1) / 2) as f64;
    let mut p = b.site.map(|v| (v * l) as f64 + off);
    p[b.axis] += 0.5 * l as f64;
    p
}

fn torus_distance(side: f64, a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let d = (b[k] - a[k]).rem_euclid(side);
            d.min(side - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Fit `|H_0(b, b_c)| ≤ C e^{-κ dist}` on the shell maxima of one column.
pub fn minimizer_decay(h: &ConstrainedMinimizer, column: usize) -> DecayFit {
    let l = h.fine.base;
    let side = h.fine.side() as f64;
    let target = coarse_bond_midpoint(&h.coarse, column, l);
    let samples: Vec<(f64, f64)> = (0..h.fine.bond_count())
        .map(|b| {
            let r = torus_distance(side, bond_midpoint(&h.fine, b, 1.0), target);
            (r, h.matrix[(b, column)].abs())
        })
        .collect();
    fit_decay(&shell_maxima(&samples))
}

/// Gaussian measure on the gauge fluctuations `{𝒬Z = 0, Z axial}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FluctCovariance {
    /// Bonds × dim, orthonormal columns spanning the fluctuation subspace.
    pub basis: Vec<Vec<f64>>,
    pub dim: usize,
    /// Restriction of `‖d·‖²` to the basis.
    pub form: Vec<Vec<f64>>,
    pub covariance: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    /// `log((2π)^{dim/2} det C^{1/2})`.
    pub log_gaussian: f64,
    /// `log det(𝒬_f 𝒬_fᵀ)^{-1/2}`, the Jacobian of `δ(𝒬Z)` in the free coordinates.
    pub log_delta_jacobian: f64,
    /// `log 𝔷`: both factors.
    pub log_z: f64,
}

fn to_rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>]) -> RMat {
    let c = rows.first().map_or(0, |r| r.len());
    RMat::from_fn(rows.len(), c, |i, j| rows[i][j])
}

impl FluctCovariance {
    pub fn basis_matrix(&self) -> RMat {
        from_rows(&self.basis)
    }

    pub fn form_matrix(&self) -> RMat {
        from_rows(&self.form)
    }

    pub fn covariance_matrix(&self) -> RMat {
        from_rows(&self.covariance)
    }
}

/// Parametrize `{𝒬Z = 0, Z = 0 on trees}` and invert `‖dZ‖²` on it.
pub fn fluct_covariance(fine: &TorusSpec) -> Result<FluctCovariance> {
    let trees = build_axial_trees(fine)?;
    let q = gauge_average(fine)?;
    let k = gauge_form(fine);
    let free: Vec<usize> = (0..fine.bond_count()).filter(|&b| !trees.contains(b)).collect();
    let qf = RMat::from_fn(q.matrix.nrows(), free.len(), |r, c| q.matrix[(r, free[c])]);
    let ns = null_space(&qf, 1e-12);
    let dim = ns.ncols();
    let mut basis = RMat::zeros(fine.bond_count(), dim);
    for (i, &b) in free.iter().enumerate() {
        basis.set_row(b, &ns.row(i));
    }
    let form = basis.transpose() * &k * &basis;
    let min_eig = min_eigenvalue(&form);
    if min_eig <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    let log_det_form = log_det_spd(&form)?;
    let cov = form.clone().cholesky().expect("checked positive").inverse();
    let log_gaussian = 0.5 * dim as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det_form;
    let log_delta_jacobian = -0.5 * log_det_spd(&(&qf * qf.transpose()))?;
    Ok(FluctCovariance {
        basis: to_rows(&basis),
        dim,
        form: to_rows(&form),
        covariance: to_rows(&cov),
        min_eigenvalue: min_eig,
        log_gaussian,
        log_delta_jacobian,
        log_z: log_gaussian + log_delta_jacobian,
    })
}

/// `Γ(A) = (𝔇_e(A) + m̄ + bL^{-1} Q^T(-A) Q(A))^{-1}` and the critical-point map.
#[derive(Clone, Debug)]
pub struct FermionFluctOp {
    pub spec: TorusSpec,
    pub e: f64,
    pub mass: f64,
    pub b: f64,
    pub averaging: AveragingOp,
    pub gamma_inv: CMat,
    pub gamma: CMat,
    /// `H(A) = bL^{-1} Γ(A) Q^T(-A)`, coarse spinors to fine spinors.
    pub critical: CMat,
}

/// `Γ^{-1}(A) = 𝔇 + m̄ + bL^{-1} Q^T(−A)Q(A)` with the averaging operator.
fn fluct_inverse(a: &GaugeField, e: f64, mass: f64, b: f64) -> Result<(AveragingOp, CMat, CMat)> {
    let q = fermion_average(a, e)?;
    let l = a.spec.base as f64;
    // Q^T(-A) = L³ Q(-A)ᵀ = L³ Q(A)^†
    let qt_minus = q.matrix.adjoint() * C64::new(l.powi(3), 0.0);
    let gamma_inv = wilson_dirac(a, e).with_mass(mass) + &qt_minus * &q.matrix * C64::new(b / l, 0.0);
    Ok((q, qt_minus, gamma_inv))
}

pub fn fermion_fluct(a: &GaugeField, e: f64, mass: f64, b: f64) -> Result<FermionFluctOp> {
    let spec = a.spec;
    let l = spec.base as f64;
    let (q, qt_minus, gamma_inv) = fluct_inverse(a, e, mass, b)?;
    let gamma = inverse(&gamma_inv, "fermion fluctuation operator")?;
    let critical = &gamma * qt_minus * C64::new(b / l, 0.0);
    Ok(FermionFluctOp {
        spec,
        e,
        mass,
        b,
        averaging: q,
        gamma_inv,
        gamma,
        critical,
    })
}

impl FermionFluctOp {
    /// `ψ̄`-side critical point `bL^{-1} Γᵀ Q(A)ᵀ·L³ Ψ̄_1`.
    pub fn critical_bar(&self, psi1_bar: &CVec) -> CVec {
        let l = self.spec.base as f64;
        self.gamma.transpose() * (self.averaging.matrix.transpose() * psi1_bar) * C64::new(self.b * l * l, 0.0)
    }

    pub fn critical_point(&self, psi1: &CVec) -> CVec {
        &self.critical * psi1
    }

    /// `𝔖̃ = ⟨ψ̄,(𝔇+m̄)ψ⟩ + bL^{-1}⟨Ψ̄_1 − Q(−A)ψ̄, Ψ_1 − Q(A)ψ⟩` as a bilinear
    /// form in independent `ψ̄, ψ` with `ε³`-weighted pairings.
    pub fn quadratic_form(&self, psi1_bar: &CVec, psi1: &CVec, psi_bar: &CVec, psi: &CVec) -> C64 {
        let l = self.spec.base as f64;
        let w = self.spec.point_weight();
        let d = wilson_dirac_like(self);
        let bulk: C64 = psi_bar.dot(&(d * psi)) * w;
        let q_minus = self.averaging.matrix.map(|v| v.conj());
        let left = psi1_bar - q_minus * psi_bar;
        let right = psi1 - &self.averaging.matrix * psi;
        bulk + left.dot(&right) * (self.b / l * w * l.powi(3))
    }

    /// `det Γ^{-1}` as a logarithm.
    pub fn log_normalizer(&self) -> Result<C64> {
        log_det(&self.gamma_inv)
    }

    pub fn smallest_singular_value(&self) -> f64 {
        smallest_singular_value(&self.gamma_inv)
    }

    /// Fit of `max_{spins} |Γ(x, y)|` against `|x − y|` from site `origin`.
    pub fn decay(&self, origin: usize) -> DecayFit {
        let spec = self.spec;
        let samples: Vec<(f64, f64)> = (0..spec.site_count())
            .map(|x| {
                let mut v = 0.0f64;
                for s in 0..SPIN_DIM {
                    for t in 0..SPIN_DIM {
                        v = v.max(self.gamma[(x * SPIN_DIM + s, origin * SPIN_DIM + t)].norm());
                    }
                }
                (spec.distance(spec.site(x), spec.site(origin)), v)
            })
            .collect();
        fit_decay(&shell_maxima(&samples))
    }
}

fn wilson_dirac_like(op: &FermionFluctOp) -> CMat {
    let l = op.spec.base as f64;
    let qt_minus = op.averaging.matrix.adjoint() * C64::new(l.powi(3), 0.0);
    &op.gamma_inv - qt_minus * &op.averaging.matrix * C64::new(op.b / l, 0.0)
}

/// `log 𝔷(A) = log det Γ(A)^{-1}`.
pub fn fermion_normalizer(a: &GaugeField, e: f64, mass: f64, b: f64) -> Result<C64> {
    log_det(&fluct_inverse(a, e, mass, b)?.2)
}

/// Effective averaging strengths `b_k` of the composed transformations,
/// `b_{k+1} = b·b_k / (b/L + b_k)`, `b_1 = b`, tending to `b(1 − 1/L)`.
pub fn b_sequence(b: f64, l: usize, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k);
    let mut bk = b;
    for _ in 0..k {
        out.push(bk);
        bk = b * bk / (b / l as f64 + bk);
    }
    out
}

/// Spectrum summary of a symmetric matrix, smallest first.
pub fn symmetric_spectrum(m: &RMat) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(0.5 * (m + m.transpose())).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_is_annihilated_by_curl() {
        let spec = TorusSpec::unit(2, 1).unwrap();
        let m = curl_matrix(&spec) * gradient_matrix(&spec);
        assert!(m.amax() < 1e-14);
    }

    #[test]
    fn b_sequence_limit() {
        let s = b_sequence(1.0, 2, 60);
        assert_eq!(s[0], 1.0);
        assert!((s[59] - 0.5).abs() < 1e-12);
    }
}
