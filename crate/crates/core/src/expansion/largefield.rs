use num::{BigInt, BigRational, One, Zero};
use serde::{Deserialize, Serialize};

use crate::fields::GaugeField;
use crate::lattice::{CubeGrid, TorusSpec};
use crate::{Error, Result};

/// `p(e) = (−log e)^p`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SmallFieldThreshold {
    pub p_exp: u32,
}

impl Default for SmallFieldThreshold {
    fn default() -> Self {
        Self { p_exp: 2 }
    }
}

impl SmallFieldThreshold {
    pub fn value(&self, e: f64) -> Result<f64> {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::InvalidSpec(format!("coupling {e} outside (0, 1)")));
        }
        Ok((-e.ln()).powi(self.p_exp as i32))
    }
}

/// Plaquettes attributed to a cube: those whose base site lies in it.
pub fn cube_plaquettes(spec: &TorusSpec, grid: &CubeGrid, cube: usize) -> Vec<usize> {
    (0..spec.plaquette_count())
        .filter(|&p| grid.cube_of_site(spec.plaquette(p).site) == cube)
        .collect()
}

/// `χ(sup_{p∈region} |dA(p)| ≤ threshold)`; the whole torus when `region` is `None`.
pub fn smallfield_indicator(a: &GaugeField, threshold: f64, region: Option<&[usize]>) -> bool {
    let f = a.field_strength();
    match region {
        None => f.sup_abs() <= threshold,
        Some(ps) => ps.iter().all(|&p| f.values[p].abs() <= threshold),
    }
}

/// Small-field cubes `Ω` and their complement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionDecomposition {
    pub grid: CubeGrid,
    pub small: Vec<usize>,
    pub large: Vec<usize>,
}

impl RegionDecomposition {
    pub fn of_field(a: &GaugeField, grid: &CubeGrid, threshold: f64) -> Self {
        let mut small = Vec::new();
        let mut large = Vec::new();
        for c in 0..grid.cube_count() {
            if smallfield_indicator(a, threshold, Some(&cube_plaquettes(&a.spec, grid, c))) {
                small.push(c);
            } else {
                large.push(c);
            }
        }
        Self {
            grid: *grid,
            small,
            large,
        }
    }
}

/// `Σ_Ω Π_{□⊂Ω^c} ζ(□) Π_{□⊂Ω} χ(□)` in exact arithmetic, with the index of
/// the single contributing `Ω` (bit `c` set when cube `c ∈ Ω`).
pub fn partition_of_unity(a: &GaugeField, grid: &CubeGrid, threshold: f64) -> Result<(BigRational, Vec<u64>)> {
    let n = grid.cube_count();
    if n > 20 {
        return Err(Error::InvalidSpec(format!("{n} cubes is too many to enumerate regions")));
    }
    let chi: Vec<BigRational> = (0..n)
        .map(|c| {
            let small = smallfield_indicator(a, threshold, Some(&cube_plaquettes(&a.spec, grid, c)));
            if small {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
        .collect();
    let mut total = BigRational::zero();
    let mut support = Vec::new();
    for omega in 0u64..(1 << n) {
        let mut term = BigRational::one();
        for (c, x) in chi.iter().enumerate() {
            let factor = if omega >> c & 1 == 1 { x.clone() } else { BigRational::one() - x };
            term *= factor;
        }
        if !term.is_zero() {
            support.push(omega);
        }
        total += term;
    }
    Ok((total, support))
}

/// Both sides of `Σ_Ω x^{|Ω^c|} = (1 + x)^n`, enumerated exactly.
pub fn region_sum_identity(n: usize, x: &BigRational) -> (BigRational, BigRational) {
    let mut lhs = BigRational::zero();
    for omega in 0u64..(1 << n) {
        let complement = n - omega.count_ones() as usize;
        lhs += num::pow(x.clone(), complement);
    }
    let rhs = num::pow(BigRational::one() + x, n);
    (lhs, rhs)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LargeFieldAudit {
    pub cubes: usize,
    pub x: f64,
    pub region_sum: f64,
    pub product: f64,
    pub exp_bound: f64,
    pub identity_exact: bool,
    pub bound_holds: bool,
}

/// Region-sum identity with `x = e^{-c}` and the chain `(1+x)^n ≤ e^{xn}`.
///
/// The identity is checked exactly on the rational nearest `x`.
pub fn largefield_bound_audit(cubes: usize, c: f64) -> Result<LargeFieldAudit> {
    if cubes > 24 {
        return Err(Error::InvalidSpec("too many cubes to enumerate".into()));
    }
    let x = (-c).exp();
    let xr = BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()));
    let (lhs, rhs) = region_sum_identity(cubes, &xr);
    let to_f = |r: &BigRational| {
        use num::ToPrimitive;
        r.to_f64().unwrap_or(f64::NAN)
    };
    let region_sum = to_f(&lhs);
    let product = to_f(&rhs);
    let exp_bound = (x * cubes as f64).exp();
    Ok(LargeFieldAudit {
        cubes,
        x,
        region_sum,
        product,
        exp_bound,
        identity_exact: lhs == rhs,
        bound_holds: product <= exp_bound * (1.0 + 1e-15),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SwooshCheck {
    pub cube: usize,
    pub sup_strength: f64,
    pub threshold: f64,
    pub weight: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `ζ(□) e^{-¼‖dA‖²_□} ≤ e^{-¼ p(e)²}` on one cube.
pub fn swoosh_check(a: &GaugeField, grid: &CubeGrid, cube: usize, threshold: f64) -> SwooshCheck {
    let ps = cube_plaquettes(&a.spec, grid, cube);
    let f = a.field_strength();
    let w = a.spec.point_weight();
    let local: f64 = ps.iter().map(|&p| w * f.values[p] * f.values[p]).sum();
    let sup = ps.iter().fold(0.0f64, |m, &p| m.max(f.values[p].abs()));
    let zeta = if sup > threshold { 1.0 } else { 0.0 };
    let weight = zeta * (-0.25 * local).exp();
    let bound = (-0.25 * threshold * threshold).exp();
    SwooshCheck {
        cube,
        sup_strength: sup,
        threshold,
        weight,
        bound,
        holds: weight <= bound,
    }
}
