use serde::{Deserialize, Serialize};

use crate::expansion::{extract_relevant, mean_v0, reblock_scale, PolymerFunction};
use crate::fields::GaugeField;
use crate::lattice::{CubeGrid, TorusSpec};
use crate::minimizers::fluct_covariance;
use crate::Result;

/// Relevant parts of the averaged interaction at one coupling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactStep {
    pub e: f64,
    /// Volume averages of `ε*(X)` and `m*(X)`.
    pub eps_star: f64,
    pub m_star: f64,
    /// `max_X ‖(ℒℛE)(X)‖_h e^{κ d_M(X)}` at `h = e_{k+1}^{-1/4}`.
    pub e_norm_next: f64,
    #[serde(skip)]
    pub next: Option<PolymerFunction>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactTable {
    pub side: usize,
    pub m_exp: u32,
    pub kappa: f64,
    pub steps: Vec<ExactStep>,
}

/// `max_X ‖E(X)‖_h e^{κ d_M(X)}`.
fn weighted_max_norm(f: &PolymerFunction, h: f64, kappa: f64) -> f64 {
    f.iter()
        .map(|(cubes, p)| p.h_norm(h) * (kappa * f.polymer(cubes).tree_distance()).exp())
        .fold(0.0, f64::max)
}

/// For each coupling `e_k`: average the interaction `V_0` over the gauge
/// fluctuation at `A = 0`, extract `ε*`, `m*`, and reblock the remainder.
pub fn exact_response(spec: &TorusSpec, m_exp: u32, couplings: &[f64], b: f64, kappa: f64) -> Result<ExactTable> {
    let grid = CubeGrid::new(spec, m_exp)?;
    let fluct = fluct_covariance(spec)?;
    let basis = fluct.basis_matrix();
    let cov = &basis * fluct.covariance_matrix() * basis.transpose();
    let zero = GaugeField::zeros(*spec);
    let total_sites = spec.site_count() as f64;
    let l = spec.base as f64;
    let mut steps = Vec::with_capacity(couplings.len());
    for &e in couplings {
        let pieces = mean_v0(&zero, &cov, e, b, &grid)?;
        let rel = extract_relevant(&pieces.function)?;
        let weight = |cubes: &Vec<usize>| pieces.function.polymer(cubes).volume() as f64 / total_sites;
        let eps_star = rel.energy.iter().map(|(c, v)| v * weight(c)).sum();
        let m_star = rel.mass.iter().map(|(c, v)| v * weight(c)).sum();
        let next = if grid.coarsen().is_ok() {
            reblock_scale(&rel.remainder)?
        } else {
            rel.remainder
        };
        let h = (l.sqrt() * e).powf(-0.25);
        steps.push(ExactStep {
            e,
            eps_star,
            m_star,
            e_norm_next: weighted_max_norm(&next, h, kappa),
            next: Some(next),
        });
    }
    Ok(ExactTable {
        side: spec.side(),
        m_exp,
        kappa,
        steps,
    })
}

/// `‖E(X)‖_{h} ≤ e^{1/4} e^{−κ d_M(X)}` with `h = e^{-1/4}` for every polymer;
/// returns the verdict and the largest ratio of the two sides.
pub fn polymer_bound_check(f: &PolymerFunction, e: f64, kappa: f64) -> (bool, f64) {
    let ratio = weighted_max_norm(f, e.powf(-0.25), kappa) / e.powf(0.25);
    (ratio <= 1.0, ratio)
}
