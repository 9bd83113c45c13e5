
use super::polyfn::PolymerFunction;
use crate::grassmann::GrassmannPoly;
use crate::{Error, Result, C64, SPIN_DIM};

/// Relevant parts `ε*(X)`, `m*(X)` and the remainder `ℛE`.
#[derive(Clone, Debug)]
pub struct Relevant {
    pub energy: Vec<(Vec<usize>, f64)>,
    pub mass: Vec<(Vec<usize>, f64)>,
    pub remainder: PolymerFunction,
    /// Largest imaginary part discarded from `ε*` or `m*`.
    pub max_imaginary: f64,
}

/// Site indices of the field lattice inside the cubes.
fn polymer_sites(e: &PolymerFunction, cubes: &[usize]) -> Result<Vec<usize>> {
    let spec = e.field_spec;
    if e.grid.side_cubes * e.grid.width() != spec.side() {
        return Err(Error::SpecMismatch("cube grid does not pave the field lattice".into()));
    }
    Ok((0..spec.site_count())
        .filter(|&x| cubes.contains(&e.grid.cube_of_site(spec.site(x))))
        .collect())
}

/// `∫_X ψ̄ψ = Σ_{x∈X} ε³ Σ_α ψ̄_α(x)ψ_α(x)`.
fn local_mass_term(e: &PolymerFunction, sites: &[usize]) -> GrassmannPoly {
    let n = e.n_modes;
    let w = e.field_spec.point_weight();
    GrassmannPoly::from_terms(
        n,
        sites.iter().flat_map(|&x| {
            (0..SPIN_DIM).map(move |s| {
                let m = x * SPIN_DIM + s;
                (vec![m, n + m], C64::new(w, 0.0))
            })
        }),
    )
}

/// Write `E(X) = −ε*(X) Vol(X) − m*(X) ∫_X ψ̄ψ + ℛE(X)`.
///
/// `ε*(X)` is minus the field-free part per unit volume; `m*(X)` is minus the
/// zero-momentum, spin-traced two-point kernel averaged over the sites of `X`.
pub fn extract_relevant(e: &PolymerFunction) -> Result<Relevant> {
    let n = e.n_modes;
    let spec = e.field_spec;
    let w = spec.point_weight();
    let mut energy = Vec::new();
    let mut mass = Vec::new();
    let mut remainder = PolymerFunction::new(e.grid, spec, n);
    let mut max_imaginary = 0.0f64;
    for (cubes, poly) in e.iter() {
        let sites = polymer_sites(e, cubes)?;
        let vol = sites.len() as f64 * w;
        let c0 = poly.constant_term();
        let eps = -c0.re / vol;
        let mut two_point = C64::new(0.0, 0.0);
        if n > 0 {
            for &x in &sites {
                for s in 0..SPIN_DIM {
                    let bar = x * SPIN_DIM + s;
                    for y in 0..spec.site_count() {
                        two_point += poly.coefficient(&[bar, n + y * SPIN_DIM + s]);
                    }
                }
            }
        }
        let m = if sites.is_empty() || n == 0 {
            0.0
        } else {
            -two_point.re / (SPIN_DIM as f64 * w * sites.len() as f64)
        };
        max_imaginary = max_imaginary.max(c0.im.abs()).max(two_point.im.abs());
        let mut rest = poly.add(&GrassmannPoly::constant(n, C64::new(eps * vol, 0.0)))?;
        if n > 0 && m != 0.0 {
            rest = rest.add(&local_mass_term(e, &sites).scale(C64::new(m, 0.0)))?;
        }
        energy.push((cubes.clone(), eps));
        mass.push((cubes.clone(), m));
        remainder.insert(cubes, rest.pruned(1e-300))?;
    }
    Ok(Relevant {
        energy,
        mass,
        remainder,
        max_imaginary,
    })
}

/// `ε*(□) = Σ_{X∋□} ε*(X)` for every cube.
pub fn aggregate_energy(e: &PolymerFunction, energy: &[(Vec<usize>, f64)]) -> Vec<f64> {
    let mut out = vec![0.0; e.grid.cube_count()];
    for (cubes, v) in energy {
        for &c in cubes {
            out[c] += v;
        }
    }
    out
}
