use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::averaging::fermion_average;
use crate::dirac::{bond_entries, hop_phases, interaction_bond_terms, Entry};
use crate::fields::GaugeField;
use crate::grassmann::GrassmannPoly;
use crate::lattice::{staircase_path, CubeGrid, Polymer, TorusSpec};
use crate::linalg::{fit_decay, CMat, DecayFit, RMat};
use crate::{Error, Result, C64, SPIN_DIM};

/// Polymer function at fixed gauge field: each cube set carries a Grassmann
/// element over the fermion modes of `field_spec`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolymerFunction {
    pub grid: CubeGrid,
    /// Lattice whose sites carry the fermion generators.
    pub field_spec: TorusSpec,
    pub n_modes: usize,
    entries: BTreeMap<Vec<usize>, GrassmannPoly>,
}

/// Per-polymer decay measurement `‖E(X)‖_h` against `d_M(X)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayAudit {
    pub h: f64,
    pub fit: DecayFit,
    /// `max_X ‖E(X)‖_h e^{κ d_M(X)}` at the fitted rate (clamped at zero).
    pub envelope: f64,
    pub rows: Vec<AuditRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditRow {
    pub cubes: Vec<usize>,
    pub tree_distance: f64,
    pub norm: f64,
}

impl PolymerFunction {
    pub fn new(grid: CubeGrid, field_spec: TorusSpec, n_modes: usize) -> Self {
        Self {
            grid,
            field_spec,
            n_modes,
            entries: BTreeMap::new(),
        }
    }

    /// Fermion modes of the lattice: `SPIN_DIM` per site.
    pub fn on_lattice(grid: CubeGrid, field_spec: TorusSpec) -> Self {
        Self::new(grid, field_spec, SPIN_DIM * field_spec.site_count())
    }

    /// Add `poly` to the value on `cubes`.
    pub fn insert(&mut self, cubes: &[usize], poly: GrassmannPoly) -> Result<()> {
        if poly.n_modes() != self.n_modes {
            return Err(Error::UniverseMismatch {
                left: self.n_modes,
                right: poly.n_modes(),
            });
        }
        let mut key = cubes.to_vec();
        key.sort_unstable();
        key.dedup();
        let slot = self
            .entries
            .entry(key)
            .or_insert_with(|| GrassmannPoly::zero(self.n_modes));
        *slot = slot.add(&poly)?;
        Ok(())
    }

    pub fn get(&self, cubes: &[usize]) -> Option<&GrassmannPoly> {
        self.entries.get(cubes)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &GrassmannPoly)> {
        self.entries.iter()
    }

    pub fn polymer(&self, cubes: &[usize]) -> Polymer {
        Polymer::new(self.grid, cubes.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drop entries whose h-norm at `h = 1` is at most `tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.entries.retain(|_, p| p.h_norm(1.0) > tol);
        self
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.entries.values().all(|p| p.h_norm(1.0) <= tol)
    }

    /// `Σ_X E(X)`.
    pub fn total(&self) -> GrassmannPoly {
        let mut acc = GrassmannPoly::zero(self.n_modes);
        for p in self.entries.values() {
            acc = acc.add(p).expect("checked universe");
        }
        acc
    }

    pub fn map(&self, f: impl Fn(&GrassmannPoly) -> GrassmannPoly) -> Self {
        Self {
            grid: self.grid,
            field_spec: self.field_spec,
            n_modes: self.n_modes,
            entries: self.entries.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|p| p.scale(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid || self.n_modes != other.n_modes {
            return Err(Error::SpecMismatch("adding polymer functions on different grids".into()));
        }
        let mut out = self.clone();
        for (k, v) in &other.entries {
            out.insert(k, v.clone())?;
        }
        Ok(out)
    }

    pub fn norms(&self, h: f64) -> Vec<(Vec<usize>, f64)> {
        self.entries.iter().map(|(k, v)| (k.clone(), v.h_norm(h))).collect()
    }

    pub fn total_norm(&self, h: f64) -> f64 {
        self.entries.values().map(|p| p.h_norm(h)).sum()
    }

    /// Fit `‖E(X)‖_h ≈ C e^{-κ' d_M(X)}` and report the envelope constant.
    pub fn decay_audit(&self, h: f64) -> DecayAudit {
        let rows: Vec<AuditRow> = self
            .entries
            .iter()
            .map(|(k, v)| AuditRow {
                cubes: k.clone(),
                tree_distance: self.polymer(k).tree_distance(),
                norm: v.h_norm(h),
            })
            .collect();
        let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.tree_distance, r.norm)).collect();
        let fit = fit_decay(&crate::linalg::shell_maxima(&samples));
        let rate = fit.rate.max(0.0);
        let envelope = rows
            .iter()
            .fold(0.0f64, |m, r| m.max(r.norm * (rate * r.tree_distance).exp()));
        DecayAudit {
            h,
            fit,
            envelope,
            rows,
        }
    }

    /// `[{cubes, h, norm, tree_distance}]`.
    pub fn to_json(&self, h: f64) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            cubes: &'a [usize],
            h: f64,
            norm: f64,
            tree_distance: f64,
        }
        let rows: Vec<Row> = self
            .entries
            .iter()
            .map(|(k, v)| Row {
                cubes: k,
                h,
                norm: v.h_norm(h),
                tree_distance: self.polymer(k).tree_distance(),
            })
            .collect();
        Ok(serde_json::to_string_pretty(&rows)?)
    }
}

/// Single-cube pieces of `V_0` as matrices on fine ⊕ coarse fermion modes,
/// together with the polymer function they define.
#[derive(Clone, Debug)]
pub struct V0Pieces {
    /// Full interaction matrix, `ψ̄_i M_ij ψ_j` with modes fine then coarse.
    pub matrix: CMat,
    pub per_cube: Vec<CMat>,
    pub function: PolymerFunction,
}

/// `V_0 = ⟨ψ̄, (𝔇(A+Z) − 𝔇(A))ψ⟩ + bL^{-1}[⟨Ψ̄_1 − Q(−A−Z)ψ̄, Ψ_1 − Q(A+Z)ψ⟩
/// − (same at Z = 0)]`, split into cubes: hop terms by the cube of the bond's
/// base site, averaging terms by the cube containing the block.
pub fn build_v0(a_ref: &GaugeField, z: &GaugeField, e: f64, b: f64, grid: &CubeGrid) -> Result<V0Pieces> {
    let q0 = fermion_average(a_ref, e)?.matrix;
    let q1 = fermion_average(&a_ref.add(z)?, e)?.matrix;
    let hops = interaction_bond_terms(a_ref, z, e);
    let dq = &q1 - &q0;
    let pair = |row: usize, x: usize, y: usize| q1[(row, x)].conj() * q1[(row, y)] - q0[(row, x)].conj() * q0[(row, y)];
    assemble_v0(a_ref.spec, grid, b, &hops, &dq, &q0, pair)
}

/// `⟨V_0⟩` under a centered Gaussian `Z` with bond covariance `cov`, exactly:
/// every entry of `V_0` is a phase `e^{ieℓ·Z}` with `ℓ` a path, whose mean is
/// `e^{−½e² ℓᵀCℓ}`.
pub fn mean_v0(a_ref: &GaugeField, cov: &RMat, e: f64, b: f64, grid: &CubeGrid) -> Result<V0Pieces> {
    let spec = a_ref.spec;
    if cov.nrows() != spec.bond_count() || cov.ncols() != spec.bond_count() {
        return Err(Error::SpecMismatch("covariance does not match the bonds".into()));
    }
    let eps = spec.spacing();
    let phases = hop_phases(a_ref, e);
    let hops: Vec<Vec<Entry>> = (0..spec.bond_count())
        .map(|i| {
            let damp = (-0.5 * e * e * eps * eps * cov[(i, i)]).exp();
            bond_entries(&spec, spec.bond(i), phases[i] * (damp - 1.0))
        })
        .collect();
    let q0 = fermion_average(a_ref, e)?.matrix;
    // path incidence of every fine spinor row: ε·sign on the staircase bonds
    let coarse = spec.coarsen()?;
    let mut paths: Vec<Vec<(usize, f64)>> = vec![Vec::new(); spec.site_count()];
    for yi in 0..coarse.site_count() {
        let y = coarse.site(yi);
        let center = spec.block_center(y);
        for x in spec.sites_in_block(y) {
            paths[spec.site_index(x)] = staircase_path(&spec, center, x)
                .iter()
                .map(|ob| (spec.bond_index(ob.bond), ob.sign() * eps))
                .collect();
        }
    }
    let variance = |l: &[(usize, f64)], r: &[(usize, f64)]| -> f64 {
        let mut v = 0.0;
        for &(i, a) in l {
            for &(j, c) in l {
                v += a * c * cov[(i, j)];
            }
            for &(j, c) in r {
                v -= 2.0 * a * c * cov[(i, j)];
            }
        }
        for &(i, a) in r {
            for &(j, c) in r {
                v += a * c * cov[(i, j)];
            }
        }
        v
    };
    let dq = CMat::from_fn(q0.nrows(), q0.ncols(), |row, col| {
        let v = q0[(row, col)];
        if v == C64::new(0.0, 0.0) {
            return v;
        }
        let l = &paths[col / SPIN_DIM];
        v * ((-0.5 * e * e * variance(l, &[])).exp() - 1.0)
    });
    let pair = |row: usize, x: usize, y: usize| {
        let base = q0[(row, x)].conj() * q0[(row, y)];
        let var = variance(&paths[y / SPIN_DIM], &paths[x / SPIN_DIM]);
        base * ((-0.5 * e * e * var).exp() - 1.0)
    };
    assemble_v0(spec, grid, b, &hops, &dq, &q0, pair)
}

/// Attribute bond terms and averaging-term changes to cubes. `pair(row, x, y)`
/// is the change of `Q̄(row, x) Q(row, y)`; `q0` fixes which entries exist.
fn assemble_v0(
    spec: TorusSpec,
    grid: &CubeGrid,
    b: f64,
    hops: &[Vec<Entry>],
    dq: &CMat,
    q0: &CMat,
    pair: impl Fn(usize, usize, usize) -> C64,
) -> Result<V0Pieces> {
    if grid.width() < spec.base || grid.side_cubes * grid.width() != spec.side() {
        return Err(Error::SpecMismatch("cubes must pave the lattice and contain whole blocks".into()));
    }
    let nf = SPIN_DIM * spec.site_count();
    let nc = q0.nrows();
    let n = nf + nc;
    let w = spec.point_weight();
    let l = spec.base as f64;
    let coef = b / l * w * l.powi(3);
    let mut per_cube = vec![CMat::zeros(n, n); grid.cube_count()];
    for (i, entries) in hops.iter().enumerate() {
        let cube = grid.cube_of_site(spec.bond(i).site);
        for &(r, c, v) in entries {
            per_cube[cube][(r, c)] += v * w;
        }
    }
    let coarse = spec.coarsen()?;
    for yi in 0..coarse.site_count() {
        let cube = grid.cube_of_site(spec.block_center(coarse.site(yi)));
        let m = &mut per_cube[cube];
        for s in 0..SPIN_DIM {
            let row = yi * SPIN_DIM + s;
            let support: Vec<usize> = (0..nf).filter(|&x| q0[(row, x)] != C64::new(0.0, 0.0)).collect();
            for &x in &support {
                // −Ψ̄_1 (Q' − Q) ψ and −ψ̄ (Q̄' − Q̄)ᵀ Ψ_1
                m[(nf + row, x)] -= dq[(row, x)] * coef;
                m[(x, nf + row)] -= dq[(row, x)].conj() * coef;
                // ψ̄ (Q̄'ᵀQ' − Q̄ᵀQ) ψ restricted to this block row
                for &y in &support {
                    m[(x, y)] += pair(row, x, y) * coef;
                }
            }
        }
    }
    let mut matrix = CMat::zeros(n, n);
    let mut function = PolymerFunction::new(*grid, spec, n);
    for (c, m) in per_cube.iter().enumerate() {
        matrix += m;
        function.insert(&[c], GrassmannPoly::bilinear(m))?;
    }
    Ok(V0Pieces {
        matrix,
        per_cube,
        function,
    })
}
