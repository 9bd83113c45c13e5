use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default cap on the number of cells of any enumerated lattice.
pub const DEFAULT_CELL_CAP: usize = 1 << 22;

/// Coordinate planes `(μ, ν)` with `μ < ν`, in plaquette index order.
pub const PLANES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Integer site coordinates, each reduced modulo the torus side.
pub type Site = [usize; 3];

/// The torus `(L^{-n} ℤ / L^{Np} ℤ)³`.
///
/// Sites are stored by integer coordinates in units of the spacing
/// `L^{-n}`, so every axis has `L^{n+Np}` sites. Negative `n` gives the
/// coarse lattices `L^{|n|} ℤ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusSpec {
    pub base: usize,
    pub spacing_exp: i32,
    pub extent_exp: i32,
}

/// An unoriented bond `(x, x + ε e_axis)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bond {
    pub site: Site,
    pub axis: usize,
}

/// A bond with an orientation; `forward == false` runs from `x + ε e_axis` to `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OrientedBond {
    pub bond: Bond,
    pub forward: bool,
}

impl OrientedBond {
    pub fn sign(&self) -> f64 {
        if self.forward {
            1.0
        } else {
            -1.0
        }
    }

    pub fn reversed(self) -> Self {
        Self {
            bond: self.bond,
            forward: !self.forward,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Plaquette {
    pub site: Site,
    /// Index into [`PLANES`].
    pub plane: usize,
}

impl TorusSpec {
    pub fn new(base: usize, spacing_exp: i32, extent_exp: i32) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidSpec(format!("base scale {base} < 2")));
        }
        if spacing_exp + extent_exp < 0 || extent_exp < 0 {
            return Err(Error::InvalidSpec(format!(
                "spacing_exp {spacing_exp} and extent_exp {extent_exp} give a fractional torus"
            )));
        }
        let spec = Self {
            base,
            spacing_exp,
            extent_exp,
        };
        spec.checked_side()?;
        Ok(spec)
    }

    /// Unit lattice `T^0_{Np}`.
    pub fn unit(base: usize, extent_exp: i32) -> Result<Self> {
        Self::new(base, 0, extent_exp)
    }

    fn checked_side(&self) -> Result<usize> {
        let exp = (self.spacing_exp + self.extent_exp) as u32;
        self.base
            .checked_pow(exp)
            .and_then(|s| s.checked_pow(3).map(|_| s))
            .ok_or(Error::CellOverflow {
                count: usize::MAX,
                cap: DEFAULT_CELL_CAP,
            })
    }

    /// Sites per axis.
    pub fn side(&self) -> usize {
        self.base.pow((self.spacing_exp + self.extent_exp) as u32)
    }

    /// Lattice spacing `L^{-n}`.
    pub fn spacing(&self) -> f64 {
        (self.base as f64).powi(-self.spacing_exp)
    }

    /// Weight `ε³` of one lattice point in sums approximating integrals.
    pub fn point_weight(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Physical volume `L^{3 Np}`.
    pub fn volume(&self) -> f64 {
        self.site_count() as f64 * self.point_weight()
    }

    pub fn site_count(&self) -> usize {
        self.side().pow(3)
    }

    pub fn bond_count(&self) -> usize {
        3 * self.site_count()
    }

    pub fn plaquette_count(&self) -> usize {
        3 * self.site_count()
    }

    /// The `L`-blocked lattice with the same period.
    pub fn coarsen(&self) -> Result<Self> {
        if self.spacing_exp + self.extent_exp < 1 {
            return Err(Error::SpecMismatch("lattice too small to block".into()));
        }
        Self::new(self.base, self.spacing_exp - 1, self.extent_exp)
    }

    /// The lattice obtained by multiplying all lengths by `L^levels`.
    pub fn dilate(&self, levels: i32) -> Result<Self> {
        Self::new(self.base, self.spacing_exp - levels, self.extent_exp + levels)
    }

    pub fn site_index(&self, x: Site) -> usize {
        let s = self.side();
        (x[0] * s + x[1]) * s + x[2]
    }

    pub fn site(&self, index: usize) -> Site {
        let s = self.side();
        [index / (s * s), (index / s) % s, index % s]
    }

    pub fn wrap(&self, x: [i64; 3]) -> Site {
        let s = self.side() as i64;
        [
            x[0].rem_euclid(s) as usize,
            x[1].rem_euclid(s) as usize,
            x[2].rem_euclid(s) as usize,
        ]
    }

    pub fn shift(&self, x: Site, axis: usize, steps: i64) -> Site {
        let mut y = [x[0] as i64, x[1] as i64, x[2] as i64];
        y[axis] += steps;
        self.wrap(y)
    }

    pub fn bond_index(&self, b: Bond) -> usize {
        3 * self.site_index(b.site) + b.axis
    }

    pub fn bond(&self, index: usize) -> Bond {
        Bond {
            site: self.site(index / 3),
            axis: index % 3,
        }
    }

    pub fn plaquette_index(&self, p: Plaquette) -> usize {
        3 * self.site_index(p.site) + p.plane
    }

    pub fn plaquette(&self, index: usize) -> Plaquette {
        Plaquette {
            site: self.site(index / 3),
            plane: index % 3,
        }
    }

    /// The four oriented bonds of `∂p`, traversed counter-clockwise in the
    /// `(μ, ν)` plane starting at the base site.
    pub fn plaquette_boundary(&self, p: Plaquette) -> [OrientedBond; 4] {
        let (mu, nu) = PLANES[p.plane];
        let x = p.site;
        let x_mu = self.shift(x, mu, 1);
        let x_nu = self.shift(x, nu, 1);
        [
            OrientedBond {
                bond: Bond { site: x, axis: mu },
                forward: true,
            },
            OrientedBond {
                bond: Bond { site: x_mu, axis: nu },
                forward: true,
            },
            OrientedBond {
                bond: Bond { site: x_nu, axis: mu },
                forward: false,
            },
            OrientedBond {
                bond: Bond { site: x, axis: nu },
                forward: false,
            },
        ]
    }

    /// Block containing fine site `x`, as a site of [`TorusSpec::coarsen`].
    pub fn block_of(&self, x: Site) -> Site {
        let l = self.base;
        [x[0] / l, x[1] / l, x[2] / l]
    }

    /// Fine sites of the block `B(y)` in lexicographic order.
    pub fn sites_in_block(&self, y: Site) -> Vec<Site> {
        let l = self.base;
        let mut out = Vec::with_capacity(l * l * l);
        for a in 0..l {
            for b in 0..l {
                for c in 0..l {
                    out.push([l * y[0] + a, l * y[1] + b, l * y[2] + c]);
                }
            }
        }
        out
    }

    /// The fine site standing for the coarse point `y`: the site of `B(y)`
    /// nearest the geometric center, least coordinates first when `L` is even.
    pub fn block_center(&self, y: Site) -> Site {
        let off = (self.base - 1) / 2;
        let l = self.base;
        [l * y[0] + off, l * y[1] + off, l * y[2] + off]
    }

    /// Minimum-image displacement from `a` to `b` along each axis.
    pub fn displacement(&self, a: Site, b: Site) -> [i64; 3] {
        let s = self.side() as i64;
        let mut d = [0i64; 3];
        for k in 0..3 {
            let mut v = (b[k] as i64 - a[k] as i64).rem_euclid(s);
            if 2 * v > s {
                v -= s;
            }
            d[k] = v;
        }
        d
    }

    /// Euclidean torus distance in lattice units (not multiplied by `ε`).
    pub fn distance(&self, a: Site, b: Site) -> f64 {
        let d = self.displacement(a, b);
        ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64).sqrt()
    }
}

/// Complete enumeration of sites, bonds and plaquettes in index order.
#[derive(Clone, Debug)]
pub struct Cells {
    pub sites: Vec<Site>,
    pub bonds: Vec<Bond>,
    pub plaquettes: Vec<Plaquette>,
}

impl Cells {
    /// CSV with columns `index,x,y,z,kind`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x,y,z,kind\n");
        for (i, s) in self.sites.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{},{},site", s[0], s[1], s[2]);
        }
        for (i, b) in self.bonds.iter().enumerate() {
            let s = b.site;
            let _ = writeln!(out, "{i},{},{},{},bond:{}", s[0], s[1], s[2], b.axis + 1);
        }
        for (i, p) in self.plaquettes.iter().enumerate() {
            let s = p.site;
            let (mu, nu) = PLANES[p.plane];
            let _ = writeln!(
                out,
                "{i},{},{},{},plaquette:{}{}",
                s[0],
                s[1],
                s[2],
                mu + 1,
                nu + 1
            );
        }
        out
    }
}

pub fn enumerate_cells(spec: &TorusSpec, cap: usize) -> Result<Cells> {
    let n = spec.site_count();
    let total = n.saturating_mul(7);
    if total > cap {
        return Err(Error::CellOverflow { count: total, cap });
    }
    let sites: Vec<Site> = (0..n).map(|i| spec.site(i)).collect();
    let bonds = (0..3 * n).map(|i| spec.bond(i)).collect();
    let plaquettes = (0..3 * n).map(|i| spec.plaquette(i)).collect();
    Ok(Cells {
        sites,
        bonds,
        plaquettes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_counts() {
        let c = enumerate_cells(&TorusSpec::unit(2, 1).unwrap(), DEFAULT_CELL_CAP).unwrap();
        assert_eq!((c.sites.len(), c.bonds.len(), c.plaquettes.len()), (8, 24, 24));
        let c = enumerate_cells(&TorusSpec::unit(2, 0).unwrap(), DEFAULT_CELL_CAP).unwrap();
        assert_eq!((c.sites.len(), c.bonds.len(), c.plaquettes.len()), (1, 3, 3));
        let spec = TorusSpec::new(3, 1, 1).unwrap();
        assert_eq!(spec.site_count(), 729);
    }

    #[test]
    fn cell_cap_overflow() {
        let spec = TorusSpec::unit(2, 3).unwrap();
        assert!(matches!(
            enumerate_cells(&spec, 100),
            Err(Error::CellOverflow { .. })
        ));
    }

    #[test]
    fn ordering_is_lexicographic() {
        let spec = TorusSpec::unit(2, 1).unwrap();
        let c = enumerate_cells(&spec, DEFAULT_CELL_CAP).unwrap();
        assert_eq!(c.sites[1], [0, 0, 1]);
        assert_eq!(c.sites[2], [0, 1, 0]);
        assert_eq!(c.bonds[4], Bond { site: [0, 0, 1], axis: 1 });
        for (i, b) in c.bonds.iter().enumerate() {
            assert_eq!(spec.bond_index(*b), i);
        }
    }

    #[test]
    fn blocks_partition_the_fine_lattice() {
        let spec = TorusSpec::unit(2, 2).unwrap();
        let coarse = spec.coarsen().unwrap();
        let mut seen = vec![0u32; spec.site_count()];
        for yi in 0..coarse.site_count() {
            let y = coarse.site(yi);
            let block = spec.sites_in_block(y);
            assert_eq!(block.len(), 8);
            for x in block {
                assert_eq!(spec.block_of(x), y);
                seen[spec.site_index(x)] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(spec.block_of([1, 1, 0]), [0, 0, 0]);
        let single = TorusSpec::unit(2, 1).unwrap();
        assert_eq!(single.coarsen().unwrap().site_count(), 1);
        assert_eq!(single.sites_in_block([0, 0, 0]).len(), 8);
    }

    #[test]
    fn plaquette_boundary_is_closed_cycle() {
        let spec = TorusSpec::unit(3, 1).unwrap();
        for pi in 0..spec.plaquette_count() {
            let p = spec.plaquette(pi);
            let bd = spec.plaquette_boundary(p);
            let mut at = p.site;
            for ob in bd {
                let (from, to) = if ob.forward {
                    (ob.bond.site, spec.shift(ob.bond.site, ob.bond.axis, 1))
                } else {
                    (spec.shift(ob.bond.site, ob.bond.axis, 1), ob.bond.site)
                };
                assert_eq!(from, at);
                at = to;
            }
            assert_eq!(at, p.site);
        }
    }
}
