//! Block averaging of fermions and gauge fields, axial trees and the
//! hierarchical gauge-fixing constraints.

use std::collections::VecDeque;

use crate::fields::{GaugeField, ScalarField};
use crate::lattice::{staircase_path, straight_path, Bond, Site, TorusSpec};
use crate::linalg::{rank, CMat, RMat};
use crate::{Error, Result, C64, SPIN_DIM};

/// Fermion averaging `Q(A)` from fine spinors to block spinors.
#[derive(Clone, Debug)]
pub struct AveragingOp {
    pub fine: TorusSpec,
    pub coarse: TorusSpec,
    pub matrix: CMat,
}

impl AveragingOp {
    /// `Q^T`, the transpose for the `ε³`-weighted pairings on both lattices:
    /// `L³` times the matrix transpose.
    pub fn weighted_transpose(&self) -> CMat {
        let l3 = (self.fine.base as f64).powi(3);
        self.matrix.transpose() * C64::new(l3, 0.0)
    }
}

/// `(Q(A)ψ)(y) = L^{-3} Σ_{x∈B(y)} e^{ieA(Γ(y,x))} ψ(x)`, with `Γ(y,x)` the
/// staircase from the block center to `x`.
pub fn fermion_average(a: &GaugeField, e: f64) -> Result<AveragingOp> {
    let fine = a.spec;
    let coarse = fine.coarsen()?;
    let l3 = (fine.base as f64).powi(3);
    let mut m = CMat::zeros(SPIN_DIM * coarse.site_count(), SPIN_DIM * fine.site_count());
    for yi in 0..coarse.site_count() {
        let y = coarse.site(yi);
        let center = fine.block_center(y);
        for x in fine.sites_in_block(y) {
            let phase = a.line_integral(&staircase_path(&fine, center, x));
            let v = C64::from_polar(1.0 / l3, e * phase);
            let xi = fine.site_index(x);
            for s in 0..SPIN_DIM {
                m[(yi * SPIN_DIM + s, xi * SPIN_DIM + s)] = v;
            }
        }
    }
    Ok(AveragingOp {
        fine,
        coarse,
        matrix: m,
    })
}

/// Site phases of the coarse lattice built from `ω` at the block centers.
pub fn restrict_to_centers(omega: &ScalarField) -> Result<ScalarField> {
    let coarse = omega.spec.coarsen()?;
    let values = (0..coarse.site_count())
        .map(|y| omega.at(omega.spec.block_center(coarse.site(y))))
        .collect();
    ScalarField::from_values(coarse, values)
}

/// Block means `ω̄(y) = L^{-3} Σ_{x∈B(y)} ω(x)`.
pub fn block_mean(omega: &ScalarField) -> Result<ScalarField> {
    let spec = omega.spec;
    let coarse = spec.coarsen()?;
    let l3 = (spec.base as f64).powi(3);
    let values = (0..coarse.site_count())
        .map(|y| spec.sites_in_block(coarse.site(y)).iter().map(|&x| omega.at(x)).sum::<f64>() / l3)
        .collect();
    ScalarField::from_values(coarse, values)
}

/// Gauge averaging `𝒬` as a real matrix, coarse bonds × fine bonds:
/// `(𝒬A)(y, y+Le_μ) = L^{-4} Σ_{x∈B(y)} Σ_{b∈Γ_{x,x+Le_μ}} A(b)` along straight
/// paths.
#[derive(Clone, Debug)]
pub struct GaugeAveragingOp {
    pub fine: TorusSpec,
    pub coarse: TorusSpec,
    pub matrix: RMat,
}

impl GaugeAveragingOp {
    pub fn apply(&self, a: &GaugeField) -> Result<GaugeField> {
        if a.spec != self.fine {
            return Err(Error::SpecMismatch("gauge averaging applied on wrong torus".into()));
        }
        let v = &self.matrix * crate::linalg::RVec::from_column_slice(&a.values);
        GaugeField::from_values(self.coarse, v.iter().copied().collect())
    }
}

pub fn gauge_average(fine: &TorusSpec) -> Result<GaugeAveragingOp> {
    let coarse = fine.coarsen()?;
    let l = fine.base;
    let w = (l as f64).powi(-4);
    let mut m = RMat::zeros(coarse.bond_count(), fine.bond_count());
    for ci in 0..coarse.bond_count() {
        let cb = coarse.bond(ci);
        for x in fine.sites_in_block(cb.site) {
            for ob in straight_path(fine, x, cb.axis, l) {
                m[(ci, fine.bond_index(ob.bond))] += w;
            }
        }
    }
    Ok(GaugeAveragingOp {
        fine: *fine,
        coarse,
        matrix: m,
    })
}

/// `𝒬^k` as one matrix, with the torus it lands on.
pub fn gauge_average_power(fine: &TorusSpec, k: usize) -> Result<GaugeAveragingOp> {
    let mut op = GaugeAveragingOp {
        fine: *fine,
        coarse: *fine,
        matrix: RMat::identity(fine.bond_count(), fine.bond_count()),
    };
    for _ in 0..k {
        let step = gauge_average(&op.coarse)?;
        op = GaugeAveragingOp {
            fine: *fine,
            coarse: step.coarse,
            matrix: &step.matrix * &op.matrix,
        };
    }
    Ok(op)
}

/// Comb-shaped maximal trees, one per `L`-cube.
#[derive(Clone, Debug)]
pub struct AxialTreeSet {
    pub spec: TorusSpec,
    /// Tree bond indices of each block, in block order.
    pub per_cube: Vec<Vec<usize>>,
    /// All tree bonds, sorted.
    pub bonds: Vec<usize>,
}

/// Tree in each `L`-cube: the axis-3 line through the center, axis-2 combs
/// off that line, then axis-1 teeth; only bonds internal to the cube.
pub fn build_axial_trees(spec: &TorusSpec) -> Result<AxialTreeSet> {
    let coarse = spec.coarsen()?;
    let l = spec.base;
    let o = (l - 1) / 2;
    let mut per_cube = Vec::with_capacity(coarse.site_count());
    for yi in 0..coarse.site_count() {
        let y = coarse.site(yi);
        let at = |a: usize, b: usize, c: usize| -> Site { [l * y[0] + a, l * y[1] + b, l * y[2] + c] };
        let mut tree = Vec::with_capacity(l * l * l - 1);
        for t in 0..l - 1 {
            tree.push(spec.bond_index(Bond { site: at(o, o, t), axis: 2 }));
        }
        for t in 0..l {
            for s in 0..l - 1 {
                tree.push(spec.bond_index(Bond { site: at(o, s, t), axis: 1 }));
            }
        }
        for t in 0..l {
            for s in 0..l {
                for r in 0..l - 1 {
                    tree.push(spec.bond_index(Bond { site: at(r, s, t), axis: 0 }));
                }
            }
        }
        tree.sort_unstable();
        per_cube.push(tree);
    }
    let mut bonds: Vec<usize> = per_cube.iter().flatten().copied().collect();
    bonds.sort_unstable();
    Ok(AxialTreeSet {
        spec: *spec,
        per_cube,
        bonds,
    })
}

impl AxialTreeSet {
    pub fn contains(&self, bond: usize) -> bool {
        self.bonds.binary_search(&bond).is_ok()
    }

    /// `ω` with `A + dω = 0` on every tree bond and `ω = 0` at each center,
    /// by traversal outward from the centers.
    pub fn gauge_to_axial(&self, a: &GaugeField) -> Result<ScalarField> {
        let spec = self.spec;
        if a.spec != spec {
            return Err(Error::SpecMismatch("axial gauge on wrong torus".into()));
        }
        let coarse = spec.coarsen()?;
        let eps = spec.spacing();
        let mut omega = vec![f64::NAN; spec.site_count()];
        for (yi, tree) in self.per_cube.iter().enumerate() {
            let root = spec.site_index(spec.block_center(coarse.site(yi)));
            omega[root] = 0.0;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &bi in tree {
                    let b = spec.bond(bi);
                    let lo = spec.site_index(b.site);
                    let hi = spec.site_index(spec.shift(b.site, b.axis, 1));
                    // A(b) + (ω(hi) − ω(lo))/ε = 0
                    if lo == u && omega[hi].is_nan() {
                        omega[hi] = omega[lo] - eps * a.values[bi];
                        queue.push_back(hi);
                    } else if hi == u && omega[lo].is_nan() {
                        omega[lo] = omega[hi] + eps * a.values[bi];
                        queue.push_back(lo);
                    }
                }
            }
        }
        if omega.iter().any(|v| v.is_nan()) {
            return Err(Error::OracleFailure("axial trees do not span their cubes".into()));
        }
        ScalarField::from_values(spec, omega)
    }
}

/// Linear constraints `𝒬^j A` vanishing on the scale-`j` trees, `j = 0..=k`.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    pub spec: TorusSpec,
    pub rows: RMat,
    /// Constraint count contributed by each scale.
    pub per_level: Vec<usize>,
    pub rank: usize,
}

pub fn hierarchical_constraints(spec: &TorusSpec, k: usize) -> Result<ConstraintSet> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut per_level = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let q = gauge_average_power(spec, j)?;
        let trees = build_axial_trees(&q.coarse)?;
        for &b in &trees.bonds {
            rows.push(q.matrix.row(b).iter().copied().collect());
        }
        per_level.push(trees.bonds.len());
    }
    let n = spec.bond_count();
    let m = RMat::from_fn(rows.len(), n, |r, c| rows[r][c]);
    let rank = rank(&m, 1e-10);
    Ok(ConstraintSet {
        spec: *spec,
        rows: m,
        per_level,
        rank,
    })
}

/// Sparse `row,col,value` listing of a real matrix.
pub fn sparse_csv(m: &RMat) -> String {
    let mut out = String::from("row,col,value\n");
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if m[(r, c)] != 0.0 {
                out.push_str(&format!("{r},{c},{:e}\n", m[(r, c)]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trees_have_cube_minus_one_bonds() {
        for l in [2, 3] {
            let spec = TorusSpec::unit(l, 1).unwrap();
            let t = build_axial_trees(&spec).unwrap();
            assert_eq!(t.per_cube[0].len(), l * l * l - 1);
        }
    }

    #[test]
    fn constant_axis_field_averages_to_itself() {
        let spec = TorusSpec::unit(2, 2).unwrap();
        let q = gauge_average(&spec).unwrap();
        let mut a = GaugeField::zeros(spec);
        for i in 0..spec.bond_count() {
            if spec.bond(i).axis == 1 {
                a.values[i] = 1.5;
            }
        }
        let qa = q.apply(&a).unwrap();
        for i in 0..qa.spec.bond_count() {
            let want = if qa.spec.bond(i).axis == 1 { 1.5 } else { 0.0 };
            assert!((qa.values[i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn hierarchical_counts_on_four_cubed() {
        let spec = TorusSpec::unit(2, 2).unwrap();
        let c = hierarchical_constraints(&spec, 1).unwrap();
        assert_eq!(c.per_level, vec![56, 7]);
        assert_eq!(c.rank, 63);
        assert_eq!(hierarchical_constraints(&spec, 0).unwrap().rank, 56);
    }
}
