use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::torus::{Site, TorusSpec};
use crate::{Error, Result};

/// Paving of a unit-lattice torus by `M`-cubes, `M = L^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeGrid {
    pub base: usize,
    pub m_exp: u32,
    /// Cubes per axis.
    pub side_cubes: usize,
}

impl CubeGrid {
    pub fn new(spec: &TorusSpec, m_exp: u32) -> Result<Self> {
        let width = spec.base.pow(m_exp);
        if spec.side() % width != 0 || spec.side() < width {
            return Err(Error::SpecMismatch(format!(
                "cube width {width} does not pave a torus of side {}",
                spec.side()
            )));
        }
        Ok(Self {
            base: spec.base,
            m_exp,
            side_cubes: spec.side() / width,
        })
    }

    /// `M` in lattice units.
    pub fn width(&self) -> usize {
        self.base.pow(self.m_exp)
    }

    pub fn cube_count(&self) -> usize {
        self.side_cubes.pow(3)
    }

    pub fn coords(&self, cube: usize) -> [usize; 3] {
        let s = self.side_cubes;
        [cube / (s * s), (cube / s) % s, cube % s]
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        let s = self.side_cubes;
        (c[0] * s + c[1]) * s + c[2]
    }

    pub fn cube_of_site(&self, x: Site) -> usize {
        let w = self.width();
        self.index([x[0] / w, x[1] / w, x[2] / w])
    }

    /// Face neighbours on the torus, deduplicated.
    pub fn neighbors(&self, cube: usize) -> Vec<usize> {
        let c = self.coords(cube);
        let s = self.side_cubes as i64;
        let mut out = BTreeSet::new();
        for axis in 0..3 {
            for step in [-1i64, 1] {
                let mut d = [c[0] as i64, c[1] as i64, c[2] as i64];
                d[axis] = (d[axis] + step).rem_euclid(s);
                let n = self.index([d[0] as usize, d[1] as usize, d[2] as usize]);
                if n != cube {
                    out.insert(n);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Center-to-center torus distance in units of `M`.
    pub fn center_distance(&self, a: usize, b: usize) -> f64 {
        let (ca, cb) = (self.coords(a), self.coords(b));
        let s = self.side_cubes as i64;
        let mut sq = 0i64;
        for k in 0..3 {
            let mut v = (cb[k] as i64 - ca[k] as i64).rem_euclid(s);
            if 2 * v > s {
                v -= s;
            }
            sq += v * v;
        }
        (sq as f64).sqrt()
    }

    /// The grid of `LM`-cubes.
    pub fn coarsen(&self) -> Result<Self> {
        if self.side_cubes % self.base != 0 {
            return Err(Error::SpecMismatch(format!(
                "{} cubes per axis do not group into L-blocks",
                self.side_cubes
            )));
        }
        Ok(Self {
            base: self.base,
            m_exp: self.m_exp + 1,
            side_cubes: self.side_cubes / self.base,
        })
    }

    /// The same cube pattern after shrinking lengths by `L`: `LM`-cubes of
    /// this grid become `M`-cubes of the scaled torus.
    pub fn scaled_down(&self) -> Result<Self> {
        let c = self.coarsen()?;
        Ok(Self {
            m_exp: self.m_exp,
            ..c
        })
    }

    /// Every connected union of cubes drawn from `region`.
    pub fn connected_subsets(&self, region: &[usize]) -> Vec<Polymer> {
        let allowed: HashSet<usize> = region.iter().copied().collect();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut frontier: Vec<Vec<usize>> = region.iter().map(|&c| vec![c]).collect();
        for f in &frontier {
            seen.insert(f.clone());
        }
        while let Some(set) = frontier.pop() {
            for &c in &set {
                for n in self.neighbors(c) {
                    if allowed.contains(&n) && !set.contains(&n) {
                        let mut next = set.clone();
                        next.push(n);
                        next.sort_unstable();
                        if seen.insert(next.clone()) {
                            frontier.push(next);
                        }
                    }
                }
            }
        }
        let mut out: Vec<Polymer> = seen
            .into_iter()
            .map(|cubes| Polymer { grid: *self, cubes })
            .collect();
        out.sort();
        out
    }
}

/// A union of cubes of a [`CubeGrid`], stored as sorted cube indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Polymer {
    pub grid: CubeGrid,
    pub cubes: Vec<usize>,
}

impl PartialOrd for CubeGrid {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CubeGrid {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.base, self.m_exp, self.side_cubes).cmp(&(other.base, other.m_exp, other.side_cubes))
    }
}

impl Polymer {
    pub fn new(grid: CubeGrid, cubes: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = cubes.into_iter().collect();
        Self {
            grid,
            cubes: set.into_iter().collect(),
        }
    }

    pub fn single(grid: CubeGrid, cube: usize) -> Self {
        Self::new(grid, [cube])
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn contains_cube(&self, cube: usize) -> bool {
        self.cubes.binary_search(&cube).is_ok()
    }

    pub fn is_subset(&self, other: &Polymer) -> bool {
        self.cubes.iter().all(|c| other.contains_cube(*c))
    }

    pub fn is_connected(&self) -> bool {
        if self.cubes.is_empty() {
            return false;
        }
        let mut seen = vec![self.cubes[0]];
        let mut stack = vec![self.cubes[0]];
        while let Some(c) = stack.pop() {
            for n in self.grid.neighbors(c) {
                if self.contains_cube(n) && !seen.contains(&n) {
                    seen.push(n);
                    stack.push(n);
                }
            }
        }
        seen.len() == self.cubes.len()
    }

    /// Volume in unit-lattice points.
    pub fn volume(&self) -> usize {
        self.cubes.len() * self.grid.width().pow(3)
    }

    /// Unit-lattice sites covered by the polymer, in lexicographic order.
    pub fn sites(&self) -> Vec<Site> {
        let w = self.grid.width();
        let mut out = Vec::with_capacity(self.volume());
        for &c in &self.cubes {
            let o = self.grid.coords(c);
            for a in 0..w {
                for b in 0..w {
                    for d in 0..w {
                        out.push([o[0] * w + a, o[1] * w + b, o[2] * w + d]);
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// `d_M(X)`: tree length joining the cube centers, in units of `M`.
    ///
    /// Exact Steiner length for at most three cubes, minimum spanning tree
    /// length otherwise.
    pub fn tree_distance(&self) -> f64 {
        let n = self.cubes.len();
        let dist = |i: usize, j: usize| self.grid.center_distance(self.cubes[i], self.cubes[j]);
        match n {
            0 | 1 => 0.0,
            2 => dist(0, 1),
            3 => steiner3(dist(0, 1), dist(1, 2), dist(0, 2)),
            _ => minimum_spanning_length(n, dist),
        }
    }

    /// `Ȳ`: the union of all `LM`-cubes meeting the polymer, on the `LM` grid.
    pub fn reblock_image(&self) -> Result<Polymer> {
        let coarse = self.grid.coarsen()?;
        let l = self.grid.base;
        Ok(Polymer::new(
            coarse,
            self.cubes.iter().map(|&c| {
                let x = self.grid.coords(c);
                coarse.index([x[0] / l, x[1] / l, x[2] / l])
            }),
        ))
    }

    /// All connected `M`-polymers `Y` with `Ȳ = self`, where `self` lives on
    /// the `LM` grid above `fine`.
    pub fn reblock_preimages(&self, fine: &CubeGrid) -> Result<Vec<Polymer>> {
        if fine.coarsen()? != self.grid {
            return Err(Error::SpecMismatch("grid is not the L-coarsening".into()));
        }
        let l = fine.base;
        let mut region = Vec::new();
        for &c in &self.cubes {
            let o = self.grid.coords(c);
            for a in 0..l {
                for b in 0..l {
                    for d in 0..l {
                        region.push(fine.index([o[0] * l + a, o[1] * l + b, o[2] * l + d]));
                    }
                }
            }
        }
        let mut out = Vec::new();
        for y in fine.connected_subsets(&region) {
            if y.reblock_image()? == *self {
                out.push(y);
            }
        }
        Ok(out)
    }
}

fn minimum_spanning_length(n: usize, dist: impl Fn(usize, usize) -> f64) -> f64 {
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut total = 0.0;
    for _ in 0..n {
        let (mut u, mut bu) = (usize::MAX, f64::INFINITY);
        for v in 0..n {
            if !in_tree[v] && best[v] < bu {
                u = v;
                bu = best[v];
            }
        }
        in_tree[u] = true;
        total += bu;
        for v in 0..n {
            if !in_tree[v] {
                best[v] = best[v].min(dist(u, v));
            }
        }
    }
    total
}

/// Steiner length of a triangle with sides `a, b, c`.
fn steiner3(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let [p, q, r] = s;
    // largest angle is opposite r; it reaches 120° when r² ≥ p² + q² + pq
    if r * r >= p * p + q * q + p * q - 1e-12 {
        return p + q;
    }
    let semi = 0.5 * (p + q + r);
    let area = (semi * (semi - p) * (semi - q) * (semi - r)).max(0.0).sqrt();
    (0.5 * (p * p + q * q + r * r) + 2.0 * 3f64.sqrt() * area).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(side: usize) -> CubeGrid {
        CubeGrid {
            base: 2,
            m_exp: 0,
            side_cubes: side,
        }
    }

    /// Brute force over every labelled spanning tree (Prüfer sequences).
    fn brute_spanning(points: &[usize], g: &CubeGrid) -> f64 {
        let n = points.len();
        if n < 2 {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        let total = n.pow((n - 2) as u32);
        for code in 0..total {
            let mut seq = Vec::new();
            let mut c = code;
            for _ in 0..n - 2 {
                seq.push(c % n);
                c /= n;
            }
            let mut degree = vec![1usize; n];
            for &s in &seq {
                degree[s] += 1;
            }
            let mut len = 0.0;
            for &s in &seq {
                let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
                len += g.center_distance(points[leaf], points[s]);
                degree[leaf] -= 1;
                degree[s] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
            len += g.center_distance(points[rest[0]], points[rest[1]]);
            best = best.min(len);
        }
        best
    }

    #[test]
    fn tree_distance_examples() {
        let g = grid(6);
        assert_eq!(Polymer::single(g, 5).tree_distance(), 0.0);
        let two = Polymer::new(g, [g.index([0, 0, 0]), g.index([0, 0, 1])]);
        assert_eq!(two.tree_distance(), 1.0);
        let three = Polymer::new(g, [0, 1, 2].map(|z| g.index([1, 1, z])));
        assert_eq!(three.tree_distance(), 2.0);
        assert_eq!(brute_spanning(&three.cubes, &g), 2.0);
    }

    #[test]
    fn mst_matches_brute_force_trees() {
        let g = grid(5);
        let pts = [g.index([0, 0, 0]), g.index([1, 0, 0]), g.index([1, 2, 0]), g.index([3, 1, 4]), g.index([0, 4, 2])];
        let x = Polymer::new(g, pts);
        assert!((x.tree_distance() - brute_spanning(&x.cubes, &g)).abs() < 1e-12);
    }

    #[test]
    fn steiner_equilateral_beats_mst() {
        // unit right angle: Steiner point improves on the two legs
        let g = grid(6);
        let x = Polymer::new(g, [g.index([0, 0, 0]), g.index([1, 0, 0]), g.index([0, 1, 0])]);
        let d = x.tree_distance();
        assert!(d < 2.0 && d > 1.9);
    }

    #[test]
    fn connectivity_and_reblock() {
        let g = grid(4);
        let y = Polymer::single(g, g.index([1, 1, 1]));
        let img = y.reblock_image().unwrap();
        assert_eq!(img.cubes, vec![0]);
        let straddle = Polymer::new(g, [g.index([0, 0, 1]), g.index([0, 0, 2])]);
        assert!(straddle.is_connected());
        assert_eq!(straddle.reblock_image().unwrap().len(), 2);
        let apart = Polymer::new(g, [g.index([0, 0, 0]), g.index([2, 2, 2])]);
        assert!(!apart.is_connected());
    }

    #[test]
    fn preimage_count_matches_subset_enumeration() {
        let fine = grid(4);
        let coarse = fine.coarsen().unwrap();
        for x in [
            Polymer::single(coarse, 0),
            Polymer::new(coarse, [0, coarse.index([0, 0, 1])]),
        ] {
            let pre = x.reblock_preimages(&fine).unwrap();
            // oracle: test every subset of the covered M-cubes
            let region: Vec<usize> = (0..fine.cube_count())
                .filter(|&c| {
                    let k = fine.coords(c);
                    x.contains_cube(coarse.index([k[0] / 2, k[1] / 2, k[2] / 2]))
                })
                .collect();
            let mut count = 0;
            for mask in 1u32..(1 << region.len()) {
                let y = Polymer::new(fine, (0..region.len()).filter(|i| mask >> i & 1 == 1).map(|i| region[i]));
                if y.is_connected() && y.reblock_image().unwrap() == x {
                    count += 1;
                }
            }
            assert_eq!(pre.len(), count);
        }
    }
}
