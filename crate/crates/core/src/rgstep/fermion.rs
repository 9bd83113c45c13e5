use serde::{Deserialize, Serialize};

use crate::averaging::fermion_average;
use crate::dirac::{bond_entries, wilson_dirac};
use crate::fields::GaugeField;
use crate::lattice::TorusSpec;
use crate::linalg::{inverse, log_det, CMat, RMat};
use crate::minimizers::{fermion_fluct, FermionFluctOp};
use crate::{Result, C64, SPIN_DIM};

/// `β = bL^{-1} ε_c³`, the weight of the averaging term per coarse spinor.
pub fn averaging_weight(spec: &TorusSpec, b: f64) -> f64 {
    let l = spec.base as f64;
    b / l * spec.point_weight() * l.powi(3)
}

/// Coarse kernel `K = β(1 − (β/ε³) Q Γ Q^†)` left after the fine spinors are
/// integrated at their critical point.
pub fn coarse_kernel(op: &FermionFluctOp) -> CMat {
    let beta = averaging_weight(&op.spec, op.b);
    let w = op.spec.point_weight();
    let q = &op.averaging.matrix;
    let n = q.nrows();
    (CMat::identity(n, n) - q * &op.gamma * q.adjoint() * C64::new(beta / w, 0.0)) * C64::new(beta, 0.0)
}

/// The joint `(ψ, Ψ_1)` matrix, modes fine then coarse.
pub fn joint_matrix(a: &GaugeField, e: f64, mass: f64, b: f64) -> Result<CMat> {
    let spec = a.spec;
    let q = fermion_average(a, e)?.matrix;
    let (nc, nf) = (q.nrows(), q.ncols());
    let w = spec.point_weight();
    let beta = C64::new(averaging_weight(&spec, b), 0.0);
    let qa = q.adjoint();
    let mut m = CMat::zeros(nf + nc, nf + nc);
    let top = wilson_dirac(a, e).with_mass(mass) * C64::new(w, 0.0) + &qa * &q * beta;
    m.view_mut((0, 0), (nf, nf)).copy_from(&top);
    m.view_mut((0, nf), (nf, nc)).copy_from(&(qa * -beta));
    m.view_mut((nf, 0), (nc, nf)).copy_from(&(q * -beta));
    m.view_mut((nf, nf), (nc, nc)).fill_with_identity();
    let mut corner = m.view_mut((nf, nf), (nc, nc));
    corner *= beta;
    Ok(m)
}

/// `log det` of the weighted fine action `ε³(𝔇 + m̄)`.
pub fn log_det_fine(a: &GaugeField, e: f64, mass: f64) -> Result<C64> {
    log_det(&(wilson_dirac(a, e).with_mass(mass) * C64::new(a.spec.point_weight(), 0.0)))
}

/// `log det(ε³Γ^{-1}) + log det K`: fine spinors first, then coarse.
pub fn log_det_blocked(a: &GaugeField, e: f64, mass: f64, b: f64) -> Result<C64> {
    let op = fermion_fluct(a, e, mass, b)?;
    let w = C64::new(a.spec.point_weight(), 0.0);
    Ok(log_det(&(&op.gamma_inv * w))? + log_det(&coarse_kernel(&op))?)
}

/// Put the imaginary part of a log-determinant difference in `(−π, π]`.
pub fn wrap_phase(z: C64) -> C64 {
    let tau = std::f64::consts::TAU;
    let mut im = z.im.rem_euclid(tau);
    if im > std::f64::consts::PI {
        im -= tau;
    }
    C64::new(z.re, im)
}

/// Fermion integral with the averaging term, computed three ways at fixed `A`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FermionRoutes {
    pub coarse_modes: usize,
    /// `n_c log β + log det ε³(𝔇 + m̄)`: coarse spinors first.
    pub log_direct: [f64; 2],
    /// `log det` of the joint matrix.
    pub log_joint: [f64; 2],
    /// `log det ε³Γ^{-1} + log det K`.
    pub log_blocked: [f64; 2],
    /// `|exp(blocked − direct) − 1|`.
    pub blocked_error: f64,
    pub joint_error: f64,
}

pub fn fermion_routes(a: &GaugeField, e: f64, mass: f64, b: f64) -> Result<FermionRoutes> {
    let nc = SPIN_DIM * a.spec.coarsen()?.site_count();
    let beta = averaging_weight(&a.spec, b);
    let direct = log_det_fine(a, e, mass)? + C64::new(nc as f64 * beta.ln(), 0.0);
    let joint = log_det(&joint_matrix(a, e, mass, b)?)?;
    let blocked = log_det_blocked(a, e, mass, b)?;
    let err = |z: C64| (wrap_phase(z - direct).exp() - 1.0).norm();
    Ok(FermionRoutes {
        coarse_modes: nc,
        log_direct: [direct.re, direct.im],
        log_joint: [joint.re, joint.im],
        log_blocked: [blocked.re, blocked.im],
        blocked_error: err(blocked),
        joint_error: err(joint),
    })
}

/// `½ Σ_{bc} C_bc (∂_b g ∂_c g + ∂_b∂_c g)` for `g(A) = log det ε³(𝔇(A) + m̄)`
/// at `A = 0`, from the analytic first and second derivatives; this is the
/// `e²` coefficient of `log ∫ det ε³(𝔇_e(A) + m̄) dμ_C(A)`.
pub fn dirac_series_coefficient(spec: &TorusSpec, mass: f64, cov: &RMat) -> Result<C64> {
    let zero = GaugeField::zeros(*spec);
    let m = wilson_dirac(&zero, 0.0).with_mass(mass);
    let s = inverse(&m, "free Wilson operator")?;
    let eps = spec.spacing();
    let i_eps = C64::new(0.0, eps);
    let nb = spec.bond_count();
    // ∂_b M = iε (P_b − N_b), ∂_b² M = −ε² (P_b + N_b); ε³ cancels against S.
    let mut first: Vec<Vec<(usize, usize, C64)>> = Vec::with_capacity(nb);
    let mut second: Vec<Vec<(usize, usize, C64)>> = Vec::with_capacity(nb);
    for bi in 0..nb {
        let b = spec.bond(bi);
        let x = spec.site_index(b.site);
        let fwd = |r: usize| r / SPIN_DIM == x;
        let entries = bond_entries(spec, b, C64::new(1.0, 0.0));
        first.push(
            entries
                .iter()
                .map(|&(r, c, v)| (r, c, if fwd(r) { i_eps * v } else { -i_eps * v }))
                .collect(),
        );
        second.push(entries.iter().map(|&(r, c, v)| (r, c, v * -(eps * eps))).collect());
    }
    let tr = |v: &[(usize, usize, C64)]| -> C64 { v.iter().map(|&(r, c, x)| s[(c, r)] * x).sum() };
    let g1: Vec<C64> = first.iter().map(|v| tr(v)).collect();
    let mut total = C64::new(0.0, 0.0);
    for bi in 0..nb {
        for bj in 0..nb {
            let cbc = cov[(bi, bj)];
            if cbc == 0.0 {
                continue;
            }
            // tr(S V_b S V_c)
            let mut cross = C64::new(0.0, 0.0);
            for &(r1, c1, v1) in &first[bi] {
                for &(r2, c2, v2) in &first[bj] {
                    cross += s[(c2, r1)] * v1 * s[(c1, r2)] * v2;
                }
            }
            let mut g2 = -cross;
            if bi == bj {
                g2 += tr(&second[bi]);
            }
            total += (g1[bi] * g1[bj] + g2) * cbc;
        }
    }
    Ok(total * 0.5)
}

/// `½ Σ_i λ_i (φ_i'(0)² + φ_i''(0))` for `φ_i(t) = f(t v_i)` over the
/// eigenpairs of a covariance, by Richardson-extrapolated central differences.
pub fn directional_series_coefficient(
    cov: &RMat,
    step: f64,
    f: impl Fn(&[f64]) -> Result<C64>,
) -> Result<C64> {
    let eig = nalgebra::SymmetricEigen::new(0.5 * (cov + cov.transpose()));
    let n = cov.nrows();
    let f0 = f(&vec![0.0; n])?;
    let mut total = C64::new(0.0, 0.0);
    let cutoff = 1e-14 * eig.eigenvalues.amax();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= cutoff {
            continue;
        }
        let v = eig.eigenvectors.column(i);
        let at = |t: f64| -> Result<C64> {
            let x: Vec<f64> = v.iter().map(|c| c * t).collect();
            Ok(wrap_phase(f(&x)? - f0))
        };
        let (p1, m1) = (at(step)?, at(-step)?);
        let (p2, m2) = (at(0.5 * step)?, at(-0.5 * step)?);
        let d1 = |p: C64, m: C64, h: f64| (p - m) / (2.0 * h);
        let d2 = |p: C64, m: C64, h: f64| (p + m) / (h * h);
        let first = (d1(p2, m2, 0.5 * step) * 4.0 - d1(p1, m1, step)) / 3.0;
        let second = (d2(p2, m2, 0.5 * step) * 4.0 - d2(p1, m1, step)) / 3.0;
        total += (first * first + second) * lambda;
    }
    Ok(total * 0.5)
}
