use serde::{Deserialize, Serialize};

use super::polyfn::PolymerFunction;
use crate::grassmann::GrassmannPoly;
use crate::lattice::Polymer;
use crate::{Result, C64};

/// Per-polymer norm change under `ℒ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormGrowth {
    pub h: f64,
    pub mean_before: f64,
    pub mean_after: f64,
    pub factor: f64,
    pub total_before: f64,
    pub total_after: f64,
}

/// `(ℒE)(X, ψ) = Σ_{Y: Ȳ = LX} E(Y, ψ_L)`.
///
/// `E` is indexed by `M`-polymers of the fine unit lattice and its fermion
/// generators live on the blocked lattice (spacing `L`). Rescaling that
/// lattice to unit spacing relabels the generators and multiplies each
/// monomial of degree `n` by `L^{-n}` (`ψ_L(x) = L^{-1}ψ(x/L)`); `LX` is the
/// `LM`-image of `Y`, read as an `M`-polymer of the rescaled lattice.
pub fn reblock_scale(e: &PolymerFunction) -> Result<PolymerFunction> {
    let grid = e.grid;
    let coarse_grid = grid.coarsen()?;
    let scaled_grid = grid.scaled_down()?;
    let l = grid.base as f64;
    let field_spec = e.field_spec.dilate(1)?;
    let mut out = PolymerFunction::new(scaled_grid, field_spec, e.n_modes);
    for (cubes, poly) in e.iter() {
        let image = Polymer::new(grid, cubes.iter().copied()).reblock_image()?;
        debug_assert_eq!(image.grid, coarse_grid);
        let scaled = scale_generators(poly, 1.0 / l);
        out.insert(&image.cubes, scaled)?;
    }
    Ok(out)
}

/// Multiply each monomial of degree `n` by `s^n`.
fn scale_generators(p: &GrassmannPoly, s: f64) -> GrassmannPoly {
    let mut out = GrassmannPoly::zero(p.n_modes()).with_spacing(p.spacing());
    for d in 0..=p.max_degree() {
        let part = p.homogeneous(d);
        if !part.is_empty() {
            out = out
                .add(&part.scale(C64::new(s.powi(d as i32), 0.0)))
                .expect("same universe");
        }
    }
    out
}

impl NormGrowth {
    pub fn measure(before: &PolymerFunction, after: &PolymerFunction, h: f64) -> Self {
        let tb = before.total_norm(h);
        let ta = after.total_norm(h);
        let mb = tb / before.len().max(1) as f64;
        let ma = ta / after.len().max(1) as f64;
        Self {
            h,
            mean_before: mb,
            mean_after: ma,
            factor: if mb > 0.0 { ma / mb } else { 0.0 },
            total_before: tb,
            total_after: ta,
        }
    }
}
