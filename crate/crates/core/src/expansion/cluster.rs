use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::polyfn::PolymerFunction;
use crate::fields::GaugeField;
use crate::grassmann::GrassmannPoly;
use crate::lattice::{CubeGrid, TorusSpec};
use crate::linalg::{gauss_hermite, CMat, RMat};
use crate::minimizers::{fermion_fluct, fluct_covariance};
use crate::{Error, Result, C64, SPIN_DIM};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Polynomial in commuting boson variables with Grassmann coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedPoly {
    pub n_bosons: usize,
    pub n_modes: usize,
    pub terms: BTreeMap<Vec<u8>, GrassmannPoly>,
}

impl MixedPoly {
    pub fn zero(n_bosons: usize, n_modes: usize) -> Self {
        Self {
            n_bosons,
            n_modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n_bosons: usize, n_modes: usize) -> Self {
        let mut p = Self::zero(n_bosons, n_modes);
        p.add_term(vec![0; n_bosons], GrassmannPoly::one(n_modes));
        p
    }

    pub fn add_term(&mut self, exps: Vec<u8>, g: GrassmannPoly) {
        let slot = self
            .terms
            .entry(exps)
            .or_insert_with(|| GrassmannPoly::zero(g.n_modes()));
        *slot = slot.add(&g).expect("same universe");
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n_bosons, self.n_modes);
        for (ea, ga) in &self.terms {
            for (eb, gb) in &other.terms {
                let e: Vec<u8> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let g = ga.mul(gb).expect("same universe");
                if !g.is_empty() {
                    out.add_term(e, g);
                }
            }
        }
        out
    }

    /// Evaluate the boson variables at `z`.
    pub fn at(&self, z: &[f64]) -> GrassmannPoly {
        let mut acc = GrassmannPoly::zero(self.n_modes);
        for (e, g) in &self.terms {
            let w: f64 = e.iter().zip(z).map(|(&k, &v)| v.powi(k as i32)).product();
            acc = acc.add(&g.scale(C64::new(w, 0.0))).expect("same universe");
        }
        acc
    }

    /// `∫∫ P dμ_C(Z) dμ_Γ(W)` with Wick/Isserlis on both sides.
    pub fn expectation(&self, c: &RMat, gamma: &CMat) -> C64 {
        let modes: Vec<usize> = (0..self.n_modes).collect();
        let mut acc = ZERO;
        for (e, g) in &self.terms {
            let fermi = g.gaussian_integrate(&modes, gamma).expect("covariance size").constant_term();
            if fermi == ZERO {
                continue;
            }
            let mut vars = Vec::new();
            for (i, &k) in e.iter().enumerate() {
                vars.extend(std::iter::repeat(i).take(k as usize));
            }
            acc += fermi * isserlis(&vars, c);
        }
        acc
    }
}

/// `E[Z_{v_1} ⋯ Z_{v_n}]` for a centered Gaussian with covariance `c`.
pub fn isserlis(vars: &[usize], c: &RMat) -> f64 {
    if vars.is_empty() {
        return 1.0;
    }
    if vars.len() % 2 == 1 {
        return 0.0;
    }
    let first = vars[0];
    let mut total = 0.0;
    for j in 1..vars.len() {
        let cov = c[(first, vars[j])];
        if cov == 0.0 {
            continue;
        }
        let rest: Vec<usize> = vars[1..]
            .iter()
            .enumerate()
            .filter(|&(k, _)| k + 1 != j)
            .map(|(_, &v)| v)
            .collect();
        total += cov * isserlis(&rest, c);
    }
    total
}

/// `E(□) = λ(α₁ Z_□ + α₂ Z_□² + β W̄_□W_□ + γ Z_□ W̄_□W_□)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CubeInteraction {
    pub lambda: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// A few cubes, one boson and one fermion mode each, with covariances taken
/// from the lattice operators.
#[derive(Clone, Debug)]
pub struct ClusterInstance {
    pub grid: CubeGrid,
    pub field_spec: TorusSpec,
    pub cubes: Vec<usize>,
    pub boson_cov: RMat,
    pub fermion_cov: CMat,
    pub interactions: Vec<CubeInteraction>,
}

impl ClusterInstance {
    /// One boson per cube (the first bond based in the cube that the
    /// fluctuation field does not pin to zero) and one fermion mode per cube
    /// (spin 0 at the cube's corner, covariance `Γ(0)`).
    pub fn from_lattice(
        spec: TorusSpec,
        grid: CubeGrid,
        cubes: &[usize],
        interactions: Vec<CubeInteraction>,
        e: f64,
        mass: f64,
        b: f64,
    ) -> Result<Self> {
        if interactions.len() != cubes.len() {
            return Err(Error::SpecMismatch("one interaction per cube".into()));
        }
        let fluct = fluct_covariance(&spec)?;
        let basis = fluct.basis_matrix();
        let full = &basis * fluct.covariance_matrix() * basis.transpose();
        let gamma = fermion_fluct(&GaugeField::zeros(spec), e, mass, b)?.gamma;
        let corner = |c: usize| {
            let w = grid.width();
            let [i, j, k] = grid.coords(c);
            [i * w, j * w, k * w]
        };
        let n = cubes.len();
        let bonds = cubes
            .iter()
            .map(|&c| {
                (0..spec.bond_count())
                    .find(|&i| grid.cube_of_site(spec.bond(i).site) == c && full[(i, i)] > 1e-8)
                    .ok_or_else(|| Error::InvalidSpec(format!("cube {c} has no free bond")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let modes: Vec<usize> = cubes
            .iter()
            .map(|&c| spec.site_index(corner(c)) * SPIN_DIM)
            .collect();
        Ok(Self {
            grid,
            field_spec: spec,
            cubes: cubes.to_vec(),
            boson_cov: RMat::from_fn(n, n, |i, j| full[(bonds[i], bonds[j])]),
            fermion_cov: CMat::from_fn(n, n, |i, j| gamma[(modes[i], modes[j])]),
            interactions,
        })
    }

    pub fn size(&self) -> usize {
        self.cubes.len()
    }

    pub fn cube_term(&self, i: usize) -> MixedPoly {
        let n = self.size();
        let it = self.interactions[i];
        let mut p = MixedPoly::zero(n, n);
        let mut e1 = vec![0u8; n];
        e1[i] = 1;
        let mut e2 = vec![0u8; n];
        e2[i] = 2;
        let pair = GrassmannPoly::from_terms(n, [(vec![i, n + i], C64::new(1.0, 0.0))]);
        p.add_term(e1.clone(), GrassmannPoly::constant(n, C64::new(it.lambda * it.alpha1, 0.0)));
        p.add_term(e2, GrassmannPoly::constant(n, C64::new(it.lambda * it.alpha2, 0.0)));
        p.add_term(vec![0; n], pair.scale(C64::new(it.lambda * it.beta, 0.0)));
        p.add_term(e1, pair.scale(C64::new(it.lambda * it.gamma, 0.0)));
        p
    }
}

#[derive(Clone, Debug)]
pub struct ClusterResult {
    /// `E^#(X)` as constants on the cube sets `X` (indices into the grid).
    pub function: PolymerFunction,
    pub log_partition: C64,
    /// Sum of the contributions of each order `1..=order_max`.
    pub per_order: Vec<C64>,
    /// Geometric-tail estimate of the truncation error.
    pub truncation_estimate: f64,
}

/// Set partitions of `0..n`.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for k in 0..n {
        let mut next = Vec::new();
        for p in out {
            for b in 0..p.len() {
                let mut q = p.clone();
                q[b].push(k);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![k]);
            next.push(q);
        }
        out = next;
    }
    out
}

/// Multisets of size `k` from `0..n`, as nondecreasing sequences.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for m in multisets(n, k - 1) {
        let start = m.last().copied().unwrap_or(0);
        for i in start..n {
            let mut q = m.clone();
            q.push(i);
            out.push(q);
        }
    }
    out
}

/// Connected (Ursell) expansion of `log ∫ e^{Σ_□ E(□)} dμ_C dμ_Γ` through
/// `order_max` factors; each joint cumulant is attributed to the set of
/// distinct cubes it involves.
pub fn cluster_expand(inst: &ClusterInstance, order_max: usize, tolerance: f64) -> Result<ClusterResult> {
    let n = inst.size();
    let terms: Vec<MixedPoly> = (0..n).map(|i| inst.cube_term(i)).collect();
    let mut moments: HashMap<Vec<usize>, C64> = HashMap::new();
    let mut moment = |idx: &[usize]| -> C64 {
        let mut key = idx.to_vec();
        key.sort_unstable();
        if let Some(v) = moments.get(&key) {
            return *v;
        }
        let mut p = MixedPoly::one(n, n);
        for &i in &key {
            p = p.mul(&terms[i]);
        }
        let v = p.expectation(&inst.boson_cov, &inst.fermion_cov);
        moments.insert(key, v);
        v
    };
    let mut function = PolymerFunction::new(inst.grid, inst.field_spec, 0);
    let mut per_order = Vec::with_capacity(order_max);
    let mut total = ZERO;
    for k in 1..=order_max {
        let parts = set_partitions(k);
        let mut order_sum = ZERO;
        for ms in multisets(n, k) {
            let mut cumulant = ZERO;
            for p in &parts {
                let blocks = p.len();
                let mut fact = 1.0;
                for j in 1..blocks {
                    fact *= j as f64;
                }
                let sign = if (blocks - 1) % 2 == 0 { 1.0 } else { -1.0 };
                let mut prod = C64::new(sign * fact, 0.0);
                for block in p {
                    let idx: Vec<usize> = block.iter().map(|&j| ms[j]).collect();
                    prod *= moment(&idx);
                }
                cumulant += prod;
            }
            let mut mult = 1.0;
            let mut run = 1;
            for j in 1..=ms.len() {
                if j < ms.len() && ms[j] == ms[j - 1] {
                    run += 1;
                } else {
                    for r in 1..=run {
                        mult *= r as f64;
                    }
                    run = 1;
                }
            }
            let value = cumulant / mult;
            let mut set: Vec<usize> = ms.iter().map(|&i| inst.cubes[i]).collect();
            set.dedup();
            function.insert(&set, GrassmannPoly::constant(0, value))?;
            order_sum += value;
        }
        per_order.push(order_sum);
        total += order_sum;
    }
    let last = per_order.last().map_or(0.0, |v| v.norm());
    let prev = if per_order.len() >= 2 {
        per_order[per_order.len() - 2].norm()
    } else {
        f64::INFINITY
    };
    let ratio = if prev > 0.0 { last / prev } else { 0.0 };
    let truncation_estimate = if ratio < 1.0 { last * ratio / (1.0 - ratio) } else { f64::INFINITY };
    if truncation_estimate > tolerance {
        return Err(Error::NonConvergence {
            change: truncation_estimate,
            tolerance,
        });
    }
    Ok(ClusterResult {
        function,
        log_partition: total,
        per_order,
        truncation_estimate,
    })
}

/// `log Ξ` by tensor Gauss–Hermite quadrature over whitened bosons times the
/// exact Grassmann integral at each node.
pub fn brute_force_log_partition(inst: &ClusterInstance, nodes: usize) -> Result<C64> {
    let n = inst.size();
    let chol = inst
        .boson_cov
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eig: 0.0 })?;
    let lower = chol.l();
    let (x, w) = gauss_hermite(nodes);
    let modes: Vec<usize> = (0..n).collect();
    let mut total = ZERO;
    let mut idx = vec![0usize; n];
    loop {
        let u: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
        let weight: f64 = idx.iter().map(|&i| w[i]).product();
        let z: Vec<f64> = (0..n).map(|r| (0..=r).map(|c| lower[(r, c)] * u[c]).sum()).collect();
        let mut action = GrassmannPoly::zero(n);
        for i in 0..n {
            let it = inst.interactions[i];
            let zi = z[i];
            let bos = it.lambda * (it.alpha1 * zi + it.alpha2 * zi * zi);
            let pair = GrassmannPoly::from_terms(n, [(vec![i, n + i], C64::new(it.lambda * (it.beta + it.gamma * zi), 0.0))]);
            action = action.add(&pair)?.add(&GrassmannPoly::constant(n, C64::new(bos, 0.0)))?;
        }
        let value = action.exp().gaussian_integrate(&modes, &inst.fermion_cov)?.constant_term();
        total += value * weight;
        let mut k = 0;
        loop {
            if k == n {
                return Ok(total.ln());
            }
            idx[k] += 1;
            if idx[k] < nodes {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
