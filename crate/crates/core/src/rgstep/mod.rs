//! One renormalization group step on tiny lattices: parameter rescaling, the
//! small-field transform and the partition-function preservation oracles.

mod boson;
mod fermion;

use serde::{Deserialize, Serialize};

pub use boson::{boson_step, boson_sunset, BosonRoutes, BosonStep, BosonSunset};
pub use fermion::{
    averaging_weight, coarse_kernel, dirac_series_coefficient, directional_series_coefficient, fermion_routes,
    joint_matrix, log_det_blocked, log_det_fine, wrap_phase, FermionRoutes,
};

use crate::expansion::{
    det_expand, reblock_scale, smallfield_indicator, PolymerFunction, RegionDecomposition, SmallFieldThreshold,
};
use crate::fields::GaugeField;
use crate::halfpow::{HalfPow, ScaledReal};
use crate::lattice::{CubeGrid, TorusSpec};
use crate::linalg::{CMat, CVec, RMat};
use crate::minimizers::{fermion_fluct, fluct_covariance, landau_minimizer, FermionFluctOp};
use crate::{Error, Result, C64};

/// Couplings at scale `k`, stored with their exact powers of `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub k: u32,
    pub base: u64,
    pub e: ScaledReal,
    pub mass_bar: ScaledReal,
    pub mass: ScaledReal,
    pub eps: ScaledReal,
    pub b: f64,
}

impl StepParams {
    pub fn initial(base: usize, e: f64, mass_bar: f64, mass: f64, eps: f64, b: f64) -> Self {
        let one = HalfPow::one(base as u64);
        Self {
            k: 0,
            base: base as u64,
            e: ScaledReal::new(e, one),
            mass_bar: ScaledReal::new(mass_bar, one),
            mass: ScaledReal::new(mass, one),
            eps: ScaledReal::new(eps, one),
            b,
        }
    }

    /// `e → L^{1/2}e`, `m̄ → Lm̄`, `m → L(m + m*)`, `ε → L³(ε + ε*)`.
    ///
    /// With `m* = ε* = 0` every update is a pure change of exponent.
    pub fn rescale(&self, eps_star: f64, m_star: f64) -> Self {
        let shift = |x: ScaledReal, add: f64| {
            if add == 0.0 {
                x
            } else {
                ScaledReal::new(x.coeff + add / x.pow.value(), x.pow)
            }
        };
        Self {
            k: self.k + 1,
            base: self.base,
            e: self.e.scale(HalfPow::new(self.base, 1)),
            mass_bar: self.mass_bar.scale(HalfPow::integer(self.base, 1)),
            mass: shift(self.mass, m_star).scale(HalfPow::integer(self.base, 1)),
            eps: shift(self.eps, eps_star).scale(HalfPow::integer(self.base, 3)),
            b: self.b,
        }
    }
}

/// Output of the small-field transform at fixed coarse field `A_1`.
#[derive(Clone, Debug)]
pub struct SmallFieldStep {
    /// Landau-gauge minimizer `H_0 A_1` on the fine lattice.
    pub background: GaugeField,
    /// `log 𝔷` of the gauge fluctuation integral.
    pub log_z_gauge: f64,
    /// `log det Γ(A)^{-1}`.
    pub log_z_fermion: C64,
    pub fermion: FermionFluctOp,
    /// Kernel of the coarse fermion form `⟨Ψ̄_1, K Ψ_1⟩`.
    pub coarse_kernel: CMat,
    /// Determinant polymers `E^det(X)` at the background, when enumerable.
    pub det_polymers: Option<PolymerFunction>,
    /// Second-order fluctuation constant `log ∫ 𝔷(A+Z)/𝔷(A) dμ_C(Z)`.
    pub sharp_constant: C64,
}

#[derive(Clone, Debug)]
pub enum TransformOutcome {
    Small(Box<SmallFieldStep>),
    Large(RegionDecomposition),
}

/// Small-field transform: minimizer, gauge and fermion fluctuation integrals,
/// determinant polymers and the second-order fluctuation constant.
pub fn rg_transform(
    a1: &GaugeField,
    fine: &TorusSpec,
    params: &StepParams,
    grid: &CubeGrid,
    threshold: SmallFieldThreshold,
) -> Result<TransformOutcome> {
    let landau = landau_minimizer(fine)?;
    let background = landau.minimizer.apply(a1)?;
    let e = params.e.value();
    let mass = params.mass_bar.value();
    let b = params.b;
    if e > 0.0 {
        let p = threshold.value(e)?;
        if !smallfield_indicator(&background, p, None) {
            return Ok(TransformOutcome::Large(RegionDecomposition::of_field(&background, grid, p)));
        }
    }
    let fluct = fluct_covariance(fine)?;
    let fermion = fermion_fluct(&background, e, mass, b)?;
    let log_z_fermion = fermion.log_normalizer()?;
    let kernel = coarse_kernel(&fermion);
    let det_polymers = if grid.cube_count() <= 8 {
        let all: Vec<usize> = (0..grid.cube_count()).collect();
        Some(det_expand(&background, grid, &all, e, mass, b)?.0)
    } else {
        None
    };
    let sharp_constant = if e == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        let basis = fluct.basis_matrix();
        let cov = &basis * fluct.covariance_matrix() * basis.transpose();
        directional_series_coefficient(&cov, 1e-2, |z| {
            let mut a = background.clone();
            for (v, dz) in a.values.iter_mut().zip(z) {
                *v += dz;
            }
            fermion_fluct(&a, e, mass, b)?.log_normalizer()
        })?
    };
    Ok(TransformOutcome::Small(Box::new(SmallFieldStep {
        background,
        log_z_gauge: fluct.log_z,
        log_z_fermion,
        fermion,
        coarse_kernel: kernel,
        det_polymers,
        sharp_constant,
    })))
}

impl SmallFieldStep {
    /// `|𝔖̃(Ψ, ψ_c + W) − ⟨Ψ̄_1, KΨ_1⟩ − ε³⟨W̄, Γ^{-1}W⟩|` at the given fields.
    pub fn form_split_residual(&self, psi1_bar: &CVec, psi1: &CVec, w_bar: &CVec, w: &CVec) -> f64 {
        let op = &self.fermion;
        let psi_bar = op.critical_bar(psi1_bar) + w_bar;
        let psi = op.critical_point(psi1) + w;
        let lhs = op.quadratic_form(psi1_bar, psi1, &psi_bar, &psi);
        let weight = C64::new(op.spec.point_weight(), 0.0);
        let rhs = psi1_bar.dot(&(&self.coarse_kernel * psi1)) + w_bar.dot(&(&op.gamma_inv * w)) * weight;
        (lhs - rhs).norm() / lhs.norm().max(1.0)
    }
}

/// `E_{k+1} = ℒ(ℛE_k + E^#_k + E^det_k)`.
pub fn next_energy(parts: &[&PolymerFunction]) -> Result<PolymerFunction> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| Error::Config("no polymer functions to combine".into()))?;
    let mut sum = (*first).clone();
    for p in rest {
        sum = sum.add(p)?;
    }
    reblock_scale(&sum)
}

/// Partition-function preservation report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepReport {
    pub lattice_side: usize,
    pub base: usize,
    pub levels: usize,
    pub e: f64,
    pub mass: f64,
    pub b: f64,
    pub boson: BosonSunset,
    pub fermion: Vec<FermionRoutes>,
    /// `e²` coefficient of `log Z`, fine determinant against the full
    /// fine covariance.
    pub series_direct: [f64; 2],
    /// Same coefficient from the blocked determinant against the chained
    /// covariance, split into the fluctuation part and the coarse part.
    pub series_fluct: [f64; 2],
    pub series_coarse: [f64; 2],
    pub series_relative_error: f64,
}

impl StepReport {
    pub fn boson_ratio_error(&self) -> f64 {
        (self.boson.ratio - 1.0).abs()
    }

    pub fn fermion_ratio_error(&self) -> f64 {
        self.fermion.iter().map(|f| f.blocked_error.max(f.joint_error)).fold(0.0, f64::max)
    }
}

/// Sunset oracle on a fine lattice: bosonic two-route constants over
/// `levels` steps, fermion two-route determinants at the sampled fields, and
/// the `e²` coefficient of the combined integral by both routes.
pub fn z_preservation_oracle(
    fine: &TorusSpec,
    levels: usize,
    e: f64,
    mass: f64,
    b: f64,
    samples: &[GaugeField],
) -> Result<StepReport> {
    if fine.site_count() > 64 {
        return Err(Error::InvalidSpec("sunset oracle limited to 64 fine sites".into()));
    }
    let routes = boson_sunset(fine, levels, 1.0)?;
    let fermion = samples
        .iter()
        .map(|a| fermion_routes(a, e, mass, b))
        .collect::<Result<Vec<_>>>()?;
    let direct = dirac_series_coefficient(fine, mass, &routes.direct_covariance)?;
    let blocked = |x: &[f64]| -> Result<C64> {
        let a = GaugeField::from_values(*fine, x.to_vec())?;
        log_det_blocked(&a, 1.0, mass, b)
    };
    let first = &routes.steps[0];
    let fluct = directional_series_coefficient(&first.bond_covariance(), 1e-2, blocked)?;
    let coarse_cov: RMat = &routes.chained_covariance - first.bond_covariance();
    let coarse = directional_series_coefficient(&coarse_cov, 1e-2, blocked)?;
    let total = fluct + coarse;
    Ok(StepReport {
        lattice_side: fine.side(),
        base: fine.base,
        levels,
        e,
        mass,
        b,
        boson: routes.summary,
        fermion,
        series_direct: [direct.re, direct.im],
        series_fluct: [fluct.re, fluct.im],
        series_coarse: [coarse.re, coarse.im],
        series_relative_error: (total - direct).norm() / direct.norm().max(f64::MIN_POSITIVE),
    })
}
