//! Wilson–Dirac operator `𝔇 = Σ_μ γ_μ ∇_μ − (ε/2) Δ` with covariant
//! differences, assembled as a dense matrix on `site * SPIN_DIM + spin`.

use serde::{Deserialize, Serialize};

use crate::fields::{GaugeField, ScalarField};
use crate::lattice::{Bond, TorusSpec};
use crate::linalg::{max_abs, CMat};
use crate::{Error, Result, C64, SPIN_DIM};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Pauli matrices `γ_1, γ_2, γ_3`.
pub fn gamma(mu: usize) -> [[C64; 2]; 2] {
    match mu {
        0 => [[ZERO, ONE], [ONE, ZERO]],
        1 => [[ZERO, -I], [I, ZERO]],
        2 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("axis {mu} out of range"),
    }
}

/// Hop phase `exp(iεeA(b))` on every bond.
pub fn hop_phases(a: &GaugeField, e: f64) -> Vec<C64> {
    let eps = a.spec.spacing();
    a.values.iter().map(|v| C64::from_polar(1.0, eps * e * v)).collect()
}

/// One entry `(row, col, value)` of a matrix contribution.
pub type Entry = (usize, usize, C64);

/// Off-diagonal Wilson–Dirac entries carried by bond `b = (x, x+εe_μ)` with
/// hop phase `u`: `(γ_μ − 1) u / 2ε` from `x` to `x+εe_μ` and
/// `−(γ_μ + 1) ū / 2ε` back.
pub fn bond_entries(spec: &TorusSpec, b: Bond, u: C64) -> Vec<Entry> {
    let eps = spec.spacing();
    let x = spec.site_index(b.site);
    let y = spec.site_index(spec.shift(b.site, b.axis, 1));
    let g = gamma(b.axis);
    let mut out = Vec::with_capacity(8);
    for s in 0..SPIN_DIM {
        for t in 0..SPIN_DIM {
            let id = if s == t { ONE } else { ZERO };
            let fwd = (g[s][t] - id) * u / (2.0 * eps);
            let bwd = -(g[s][t] + id) * u.conj() / (2.0 * eps);
            if fwd != ZERO {
                out.push((x * SPIN_DIM + s, y * SPIN_DIM + t, fwd));
            }
            if bwd != ZERO {
                out.push((y * SPIN_DIM + s, x * SPIN_DIM + t, bwd));
            }
        }
    }
    out
}

/// Assembled operator together with the data it was built from.
#[derive(Clone, Debug)]
pub struct DiracOperator {
    pub spec: TorusSpec,
    pub e: f64,
    pub matrix: CMat,
}

impl DiracOperator {
    /// `𝔇 + m̄`.
    pub fn with_mass(&self, mass: f64) -> CMat {
        let n = self.matrix.nrows();
        &self.matrix + CMat::identity(n, n) * C64::new(mass, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn wilson_dirac(a: &GaugeField, e: f64) -> DiracOperator {
    let spec = a.spec;
    let n = SPIN_DIM * spec.site_count();
    let mut m = CMat::identity(n, n) * C64::new(3.0 / spec.spacing(), 0.0);
    for (i, u) in hop_phases(a, e).into_iter().enumerate() {
        for (r, c, v) in bond_entries(&spec, spec.bond(i), u) {
            m[(r, c)] += v;
        }
    }
    DiracOperator { spec, e, matrix: m }
}

/// `(∂_{eA,μ}ψ)(x) = ε^{-1}(e^{iεeA(x,x+εe_μ)} ψ(x+εe_μ) − ψ(x))`, spin diagonal.
pub fn covariant_forward_derivative(a: &GaugeField, e: f64, mu: usize) -> CMat {
    let spec = a.spec;
    let eps = spec.spacing();
    let n = SPIN_DIM * spec.site_count();
    let mut m = CMat::identity(n, n) * C64::new(-1.0 / eps, 0.0);
    let phases = hop_phases(a, e);
    for x in 0..spec.site_count() {
        let site = spec.site(x);
        let b = Bond { site, axis: mu };
        let y = spec.site_index(spec.shift(site, mu, 1));
        let u = phases[spec.bond_index(b)] / eps;
        for s in 0..SPIN_DIM {
            m[(x * SPIN_DIM + s, y * SPIN_DIM + s)] += u;
        }
    }
    m
}

/// Assembly from the derivative matrices, used as an independent check of
/// [`wilson_dirac`]: `Σ γ_μ ½(∂_μ − ∂_μ†) + (ε/2) Σ ∂_μ†∂_μ`.
pub fn wilson_dirac_from_derivatives(a: &GaugeField, e: f64) -> CMat {
    let spec = a.spec;
    let eps = spec.spacing();
    let n = SPIN_DIM * spec.site_count();
    let mut out = CMat::zeros(n, n);
    for mu in 0..3 {
        let f = covariant_forward_derivative(a, e, mu);
        let fa = f.adjoint();
        let nabla = (&f - &fa) * C64::new(0.5, 0.0);
        let g = gamma(mu);
        let mut gn = CMat::zeros(n, n);
        for x in 0..spec.site_count() {
            for z in 0..spec.site_count() {
                let v = nabla[(x * SPIN_DIM, z * SPIN_DIM)];
                if v == ZERO {
                    continue;
                }
                for s in 0..SPIN_DIM {
                    for t in 0..SPIN_DIM {
                        gn[(x * SPIN_DIM + s, z * SPIN_DIM + t)] = g[s][t] * v;
                    }
                }
            }
        }
        out += gn + (&fa * &f) * C64::new(0.5 * eps, 0.0);
    }
    out
}

/// `U(ω) = diag(e^{−ieω(x)})`, so that `𝔇(A + dω) = U 𝔇(A) U^{-1}`.
pub fn gauge_phase_matrix(omega: &ScalarField, e: f64) -> CMat {
    let n = SPIN_DIM * omega.spec.site_count();
    let mut m = CMat::zeros(n, n);
    for (x, w) in omega.values.iter().enumerate() {
        for s in 0..SPIN_DIM {
            m[(x * SPIN_DIM + s, x * SPIN_DIM + s)] = C64::from_polar(1.0, -e * w);
        }
    }
    m
}

/// `V = 𝔇(A + Z) − 𝔇(A)`, assembled bond by bond from
/// `e^{iεe(A+Z)} − e^{iεeA} = e^{iεeA}(e^{iεeZ} − 1)`.
pub fn interaction_split(a_ref: &GaugeField, z: &GaugeField, e: f64) -> Result<(DiracOperator, CMat)> {
    if a_ref.spec != z.spec {
        return Err(Error::SpecMismatch("interaction split on different tori".into()));
    }
    let d = wilson_dirac(a_ref, e);
    let n = d.dim();
    let mut v = CMat::zeros(n, n);
    for entries in interaction_bond_terms(a_ref, z, e) {
        for (r, c, val) in entries {
            v[(r, c)] += val;
        }
    }
    Ok((d, v))
}

/// Per-bond pieces of the interaction, in bond order.
pub fn interaction_bond_terms(a_ref: &GaugeField, z: &GaugeField, e: f64) -> Vec<Vec<Entry>> {
    let spec = a_ref.spec;
    let eps = spec.spacing();
    let base = hop_phases(a_ref, e);
    (0..spec.bond_count())
        .map(|i| {
            let du = base[i] * (C64::from_polar(1.0, eps * e * z.values[i]) - ONE);
            bond_entries(&spec, spec.bond(i), du)
        })
        .collect()
}

/// Size of the interaction against `e max|Z|`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InteractionBound {
    pub max_entry: f64,
    pub e_max_z: f64,
    pub ratio: f64,
}

pub fn interaction_bound(v: &CMat, z: &GaugeField, e: f64) -> InteractionBound {
    let max_entry = max_abs(v);
    let e_max_z = e.abs() * z.max_abs();
    InteractionBound {
        max_entry,
        e_max_z,
        ratio: if e_max_z > 0.0 { max_entry / e_max_z } else { 0.0 },
    }
}

/// Sparse triplets `row,col,re,im` of the nonzero entries.
pub fn to_triplet_csv(m: &CMat) -> String {
    let mut out = String::from("row,col,re,im\n");
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != ZERO {
                out.push_str(&format!("{r},{c},{:e},{:e}\n", v.re, v.im));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clifford_relations() {
        for mu in 0..3 {
            for nu in 0..3 {
                let (a, b) = (gamma(mu), gamma(nu));
                for s in 0..2 {
                    for t in 0..2 {
                        let ac: C64 = (0..2).map(|k| a[s][k] * b[k][t] + b[s][k] * a[k][t]).sum();
                        let want = if mu == nu && s == t { 2.0 } else { 0.0 };
                        assert!((ac - C64::new(want, 0.0)).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn single_site_torus_is_zero_at_zero_field() {
        let spec = TorusSpec::unit(2, 0).unwrap();
        let d = wilson_dirac(&GaugeField::zeros(spec), 1.0);
        assert!(max_abs(&d.matrix) < 1e-15);
    }

    #[test]
    fn two_assemblies_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for spec in [TorusSpec::unit(2, 1).unwrap(), TorusSpec::unit(3, 1).unwrap()] {
            let a = GaugeField::random(spec, 1.0, &mut rng);
            let d = wilson_dirac(&a, 0.7).matrix;
            let f = wilson_dirac_from_derivatives(&a, 0.7);
            assert!(max_abs(&(d - f)) < 1e-13);
        }
    }
}
