use serde::{Deserialize, Serialize};

use crate::averaging::{build_axial_trees, gauge_average, gauge_average_power};
use crate::lattice::TorusSpec;
use crate::linalg::{log_det_spd, min_eigenvalue, null_space, rank, RMat};
use crate::minimizers::gauge_form;
use crate::{Error, Result};

const LOG_TWO_PI: f64 = 1.837_877_066_409_345_5;

/// Tree bonds fixed by `δ_x` on a lattice; none when it cannot be blocked.
fn tree_bonds(spec: &TorusSpec) -> Vec<usize> {
    if spec.side() < spec.base {
        return Vec::new();
    }
    build_axial_trees(spec).map(|t| t.bonds).unwrap_or_default()
}

/// `½ xᵀ G x` integrated over `x ∈ ℝ^dim`.
fn gaussian_log(g: &RMat) -> Result<f64> {
    let min_eig = min_eigenvalue(g);
    if min_eig <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    Ok(0.5 * g.nrows() as f64 * LOG_TWO_PI - 0.5 * log_det_spd(g)?)
}

/// One block step of a Gaussian density `exp(−½ Aᵀ F A)` on a level lattice:
/// `A = H A' + Z` with `𝒬Z = 0` and `Z = 0` on the trees.
#[derive(Clone, Debug)]
pub struct BosonStep {
    pub fine: TorusSpec,
    pub coarse: TorusSpec,
    /// Fine bonds × coarse bonds.
    pub minimizer: RMat,
    /// Fine bonds × fluctuation coordinates, orthonormal columns.
    pub basis: RMat,
    pub covariance: RMat,
    /// `log ∫ δ(𝒬Z) δ_x(Z) exp(−½ Zᵀ F Z) DZ`.
    pub log_z: f64,
    /// `Hᵀ F H`, the inherited form on the coarse lattice.
    pub coarse_form: RMat,
}

impl BosonStep {
    /// Covariance of `Z` in bond coordinates.
    pub fn bond_covariance(&self) -> RMat {
        &self.basis * &self.covariance * self.basis.transpose()
    }
}

pub fn boson_step(fine: &TorusSpec, form: &RMat) -> Result<BosonStep> {
    let q = gauge_average(fine)?;
    let trees = tree_bonds(fine);
    let free: Vec<usize> = (0..fine.bond_count()).filter(|b| trees.binary_search(b).is_err()).collect();
    let nf = free.len();
    let nc = q.coarse.bond_count();
    let qf = RMat::from_fn(nc, nf, |r, c| q.matrix[(r, free[c])]);
    let ff = RMat::from_fn(nf, nf, |r, c| form[(free[r], free[c])]);
    let mut kkt = RMat::zeros(nf + nc, nf + nc);
    kkt.view_mut((0, 0), (nf, nf)).copy_from(&ff);
    kkt.view_mut((nf, 0), (nc, nf)).copy_from(&qf);
    kkt.view_mut((0, nf), (nf, nc)).copy_from(&qf.transpose());
    let mut rhs = RMat::zeros(nf + nc, nc);
    rhs.view_mut((nf, 0), (nc, nc)).fill_with_identity();
    let sol = kkt.clone().lu().solve(&rhs).ok_or_else(|| Error::SingularKkt {
        rank: rank(&kkt, 1e-12),
        rows: nf + nc,
    })?;
    let mut h = RMat::zeros(fine.bond_count(), nc);
    for (i, &b) in free.iter().enumerate() {
        h.set_row(b, &sol.row(i));
    }
    let ns = null_space(&qf, 1e-12);
    let mut basis = RMat::zeros(fine.bond_count(), ns.ncols());
    for (i, &b) in free.iter().enumerate() {
        basis.set_row(b, &ns.row(i));
    }
    let g = basis.transpose() * form * &basis;
    let log_z = gaussian_log(&g)? - 0.5 * log_det_spd(&(&qf * qf.transpose()))?;
    let covariance = g.cholesky().expect("positive checked").inverse();
    let coarse_form = h.transpose() * form * &h;
    Ok(BosonStep {
        fine: *fine,
        coarse: q.coarse,
        minimizer: h,
        basis,
        covariance,
        log_z,
        coarse_form,
    })
}

/// Both sides of the bosonic sunset identity with the observable
/// `δ_x(A_K) exp(−½ μ ‖A_K‖²)`, which removes the flat directions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BosonSunset {
    pub levels: usize,
    pub regulator: f64,
    pub constraint_rows: usize,
    pub constraint_rank: usize,
    /// `log ∫ Π_j δ_x(𝒬^j A) e^{−½‖dA‖² − ½μ‖𝒬^K A‖²} DA`.
    pub log_direct: f64,
    /// `Σ_j log 𝔷_j` followed by the final coarse Gaussian.
    pub log_chained: f64,
    pub log_z_steps: Vec<f64>,
    pub log_final: f64,
    pub ratio: f64,
    /// Largest entry of `C_direct − C_chained` for the fine field.
    pub covariance_gap: f64,
}

/// Fine-field covariances and the sunset constants.
#[derive(Clone, Debug)]
pub struct BosonRoutes {
    pub summary: BosonSunset,
    pub steps: Vec<BosonStep>,
    /// Covariance of the final field `A_K` (bonds of the level-`K` lattice).
    pub final_covariance: RMat,
    pub direct_covariance: RMat,
    pub chained_covariance: RMat,
}

pub fn boson_sunset(fine: &TorusSpec, levels: usize, regulator: f64) -> Result<BosonRoutes> {
    if regulator <= 0.0 {
        return Err(Error::Config("sunset regulator must be positive".into()));
    }
    let k = gauge_form(fine);
    let top = gauge_average_power(fine, levels)?;

    // direct route
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for j in 0..=levels {
        let q = gauge_average_power(fine, j)?;
        for b in tree_bonds(&q.coarse) {
            rows.push(q.matrix.row(b).iter().copied().collect());
        }
    }
    let n = fine.bond_count();
    let c = RMat::from_fn(rows.len(), n, |r, col| rows[r][col]);
    let c_rank = rank(&c, 1e-10);
    if c_rank < rows.len() {
        return Err(Error::SingularKkt {
            rank: c_rank,
            rows: rows.len(),
        });
    }
    let form = &k + top.matrix.transpose() * &top.matrix * regulator;
    let ns = null_space(&c, 1e-12);
    let g = ns.transpose() * &form * &ns;
    let log_direct = gaussian_log(&g)? - 0.5 * log_det_spd(&(&c * c.transpose()))?;
    let direct_covariance = &ns * g.cholesky().expect("positive checked").inverse() * ns.transpose();

    // chained route
    let mut steps = Vec::with_capacity(levels);
    let mut spec = *fine;
    let mut f = k;
    for _ in 0..levels {
        let s = boson_step(&spec, &f)?;
        spec = s.coarse;
        f = s.coarse_form.clone();
        steps.push(s);
    }
    let trees = tree_bonds(&spec);
    let free: Vec<usize> = (0..spec.bond_count()).filter(|b| trees.binary_search(b).is_err()).collect();
    let last = &f + RMat::identity(spec.bond_count(), spec.bond_count()) * regulator;
    let gf = RMat::from_fn(free.len(), free.len(), |r, col| last[(free[r], free[col])]);
    let log_final = gaussian_log(&gf)?;
    let inv = gf.cholesky().expect("positive checked").inverse();
    let mut final_covariance = RMat::zeros(spec.bond_count(), spec.bond_count());
    for (i, &bi) in free.iter().enumerate() {
        for (j, &bj) in free.iter().enumerate() {
            final_covariance[(bi, bj)] = inv[(i, j)];
        }
    }
    let mut cov = final_covariance.clone();
    for s in steps.iter().rev() {
        cov = &s.minimizer * cov * s.minimizer.transpose() + s.bond_covariance();
    }
    let log_z_steps: Vec<f64> = steps.iter().map(|s| s.log_z).collect();
    let log_chained = log_z_steps.iter().sum::<f64>() + log_final;
    let gap = (&direct_covariance - &cov).amax();
    Ok(BosonRoutes {
        summary: BosonSunset {
            levels,
            regulator,
            constraint_rows: rows.len(),
            constraint_rank: c_rank,
            log_direct,
            log_chained,
            log_z_steps,
            log_final,
            ratio: (log_chained - log_direct).exp(),
            covariance_gap: gap,
        },
        steps,
        final_covariance,
        direct_covariance,
        chained_covariance: cov,
    })
}
