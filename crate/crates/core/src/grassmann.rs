//! Finite Grassmann algebra over Dirac pairs `(ψ̄_i, ψ_i)`.
//!
//! Generators are numbered with all barred generators first: `ψ̄_i = i`,
//! `ψ_i = n_modes + i`. A monomial is stored as its strictly increasing
//! generator list, so the canonical top element is
//! `ψ̄_0 ⋯ ψ̄_{n-1} ψ_0 ⋯ ψ_{n-1}`. Berezin integration uses
//! `∫ dψ̄ dψ ψ ψ̄ = 1`, which gives `∫ e^{-⟨ψ̄,Mψ⟩} = det M`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::lattice::Site;
use crate::linalg::CMat;
use crate::{Error, Result, C64, SPIN_DIM};

pub type Monomial = SmallVec<[u16; 8]>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// A fermion generator `ψ̄_α(x)` or `ψ_α(x)` by lattice position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneratorIndex {
    pub site: usize,
    pub spin: usize,
    pub bar: bool,
}

impl GeneratorIndex {
    pub fn mode(&self) -> usize {
        self.site * SPIN_DIM + self.spin
    }

    pub fn generator(&self, n_modes: usize) -> usize {
        if self.bar {
            self.mode()
        } else {
            n_modes + self.mode()
        }
    }

    pub fn from_site(spec: &crate::lattice::TorusSpec, x: Site, spin: usize, bar: bool) -> Self {
        Self {
            site: spec.site_index(x),
            spin,
            bar,
        }
    }
}

/// Element of the algebra generated by `n_modes` Dirac pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannPoly {
    n_modes: usize,
    /// Monomials above this degree are dropped by products.
    degree_cap: usize,
    /// Lattice spacing used to read coefficients as kernels.
    spacing: f64,
    terms: BTreeMap<Monomial, C64>,
}

/// Sign of the permutation sorting `seq` (distinct entries), `0` on repeats.
pub fn sort_sign(seq: &[usize]) -> i32 {
    let mut sign = 1;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] == seq[j] {
                return 0;
            }
            if seq[i] > seq[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn merge(a: &Monomial, b: &Monomial) -> Option<(Monomial, bool)> {
    let mut out = Monomial::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut odd = false;
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            // b[j] jumps over the remaining a.len() - i generators of `a`
            if (a.len() - i) % 2 == 1 {
                odd = !odd;
            }
            out.push(b[j]);
            j += 1;
        } else {
            return None;
        }
    }
    Some((out, odd))
}

impl GrassmannPoly {
    pub fn zero(n_modes: usize) -> Self {
        Self {
            n_modes,
            degree_cap: usize::MAX,
            spacing: 1.0,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_modes: usize, c: C64) -> Self {
        let mut p = Self::zero(n_modes);
        p.add_term(Monomial::new(), c);
        p
    }

    pub fn one(n_modes: usize) -> Self {
        Self::constant(n_modes, ONE)
    }

    /// The single generator with the given number.
    pub fn generator(n_modes: usize, g: usize) -> Self {
        assert!(g < 2 * n_modes, "generator {g} outside universe");
        let mut p = Self::zero(n_modes);
        p.add_term(SmallVec::from_slice(&[g as u16]), ONE);
        p
    }

    pub fn psi_bar(n_modes: usize, mode: usize) -> Self {
        Self::generator(n_modes, mode)
    }

    pub fn psi(n_modes: usize, mode: usize) -> Self {
        Self::generator(n_modes, n_modes + mode)
    }

    /// `⟨ψ̄, M ψ⟩ = Σ_{ij} ψ̄_i M_ij ψ_j`.
    pub fn bilinear(m: &CMat) -> Self {
        let n = m.nrows();
        let mut p = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != ZERO {
                    p.add_term(SmallVec::from_slice(&[i as u16, (n + j) as u16]), m[(i, j)]);
                }
            }
        }
        p
    }

    /// Build from monomials given as arbitrary generator sequences.
    pub fn from_terms(n_modes: usize, terms: impl IntoIterator<Item = (Vec<usize>, C64)>) -> Self {
        let mut p = Self::zero(n_modes);
        for (seq, c) in terms {
            let s = sort_sign(&seq);
            if s == 0 {
                continue;
            }
            let mut mono: Monomial = seq.iter().map(|&g| g as u16).collect();
            mono.sort_unstable();
            p.add_term(mono, c * s as f64);
        }
        p
    }

    pub fn with_degree_cap(mut self, cap: usize) -> Self {
        self.degree_cap = cap;
        self.terms.retain(|m, _| m.len() <= cap);
        self
    }

    pub fn with_spacing(mut self, spacing: f64) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mono: &[usize]) -> C64 {
        let key: Monomial = mono.iter().map(|&g| g as u16).collect();
        self.terms.get(&key).copied().unwrap_or(ZERO)
    }

    pub fn constant_term(&self) -> C64 {
        self.coefficient(&[])
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(|m| m.len()).max().unwrap_or(0)
    }

    fn add_term(&mut self, mono: Monomial, c: C64) {
        if c == ZERO || mono.len() > self.degree_cap {
            return;
        }
        let slot = self.terms.entry(mono).or_insert(ZERO);
        *slot += c;
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.n_modes != other.n_modes {
            return Err(Error::UniverseMismatch {
                left: self.n_modes,
                right: other.n_modes,
            });
        }
        Ok(())
    }

    fn like(&self) -> Self {
        Self {
            n_modes: self.n_modes,
            degree_cap: self.degree_cap,
            spacing: self.spacing,
            terms: BTreeMap::new(),
        }
    }

    /// Remove coefficients with modulus at most `tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.terms.retain(|_, c| c.norm() > tol);
        self
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.like();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.like();
        out.degree_cap = self.degree_cap.min(other.degree_cap);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if a.len() + b.len() > out.degree_cap {
                    continue;
                }
                if let Some((m, odd)) = merge(a, b) {
                    let v = ca * cb;
                    out.add_term(m, if odd { -v } else { v });
                }
            }
        }
        out.terms.retain(|_, c| *c != ZERO);
        Ok(out)
    }

    /// Part of homogeneous degree `n`.
    pub fn homogeneous(&self, n: usize) -> Self {
        let mut out = self.like();
        for (m, c) in &self.terms {
            if m.len() == n {
                out.add_term(m.clone(), *c);
            }
        }
        out
    }

    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|m| m.len() % 2 == 0)
    }

    /// Left derivative `∂/∂g`.
    pub fn derivative(&self, g: usize) -> Self {
        let mut out = self.like();
        let g = g as u16;
        for (m, c) in &self.terms {
            if let Ok(pos) = m.binary_search(&g) {
                let mut rest = m.clone();
                rest.remove(pos);
                out.add_term(rest, if pos % 2 == 1 { -c } else { *c });
            }
        }
        out
    }

    /// Coefficient of the canonical top monomial.
    pub fn berezin_top(&self) -> C64 {
        let top: Vec<usize> = (0..2 * self.n_modes).collect();
        self.coefficient(&top)
    }

    /// `∫ Π_i dψ̄_i dψ_i` over the listed modes; other generators remain.
    pub fn berezin_integral(&self, modes: &[usize]) -> Self {
        let mut p = self.clone();
        for &i in modes {
            p = p.derivative(self.n_modes + i).derivative(i);
        }
        p
    }

    /// Integral over every mode.
    pub fn berezin_full(&self) -> C64 {
        let modes: Vec<usize> = (0..self.n_modes).collect();
        self.berezin_integral(&modes).constant_term()
    }

    /// `∫` of the canonical top monomial, `±1`; multiplying [`Self::berezin_top`]
    /// by it gives [`Self::berezin_full`].
    pub fn top_normalization(n_modes: usize) -> f64 {
        // ψ̄_0⋯ψ̄_{n-1}ψ_0⋯ψ_{n-1} → Π (ψ_i ψ̄_i)
        let mut seq = Vec::with_capacity(2 * n_modes);
        for i in 0..n_modes {
            seq.push(n_modes + i);
            seq.push(i);
        }
        sort_sign(&seq) as f64
    }

    /// Exponential; the series stops by nilpotency.
    pub fn exp(&self) -> Self {
        let c = self.constant_term();
        let mut nil = self.clone();
        nil.terms.remove(&Monomial::new());
        let mut out = Self::one(self.n_modes);
        out.degree_cap = self.degree_cap;
        out.spacing = self.spacing;
        let mut power = out.clone();
        let mut k = 1.0;
        loop {
            power = power.mul(&nil).expect("same universe").scale(C64::new(1.0 / k, 0.0));
            if power.is_empty() {
                break;
            }
            out = out.add(&power).expect("same universe");
            k += 1.0;
        }
        out.scale(c.exp())
    }

    /// Logarithm of an element with nonzero constant term.
    pub fn log(&self) -> Result<Self> {
        let c = self.constant_term();
        if c == ZERO {
            return Err(Error::Singular {
                context: "Grassmann log of element without body".into(),
                smallest_singular: 0.0,
            });
        }
        let mut nil = self.scale(ONE / c);
        nil.terms.remove(&Monomial::new());
        let mut out = Self::constant(self.n_modes, c.ln());
        out.degree_cap = self.degree_cap;
        out.spacing = self.spacing;
        let mut power = Self::one(self.n_modes).with_degree_cap(self.degree_cap);
        let mut k = 1.0;
        loop {
            power = power.mul(&nil)?;
            if power.is_empty() {
                break;
            }
            let sign = if (k as i64) % 2 == 1 { 1.0 } else { -1.0 };
            out = out.add(&power.scale(C64::new(sign / k, 0.0)))?;
            k += 1.0;
        }
        Ok(out)
    }

    /// `‖E‖_h = Σ_n (h^n/n!) Σ_{x_1…x_n} ε^{3n} |E_n(x_1,…,x_n)|`, which for
    /// canonical coefficients is `Σ_S h^{|S|} |c_S|`.
    pub fn h_norm(&self, h: f64) -> f64 {
        self.terms.iter().map(|(m, c)| h.powi(m.len() as i32) * c.norm()).sum()
    }

    /// Antisymmetric kernel value `E_n(g_1,…,g_n)` on an ordered tuple.
    pub fn kernel(&self, tuple: &[usize]) -> C64 {
        let s = sort_sign(tuple);
        if s == 0 {
            return ZERO;
        }
        let mut sorted = tuple.to_vec();
        sorted.sort_unstable();
        let w = self.spacing.powi(3 * tuple.len() as i32);
        self.coefficient(&sorted) * (s as f64 / w)
    }

    /// Integrate out the modes `integrated` against the normalized Gaussian
    /// measure `dμ_Γ(W)` with `∫ W_i W̄_j dμ_Γ = Γ_{ij}`; `Γ` is indexed by
    /// positions in `integrated`. Other generators pass through.
    pub fn gaussian_integrate(&self, integrated: &[usize], gamma: &CMat) -> Result<Self> {
        let k = integrated.len();
        if gamma.nrows() != k || gamma.ncols() != k {
            return Err(Error::SpecMismatch("covariance size differs from mode count".into()));
        }
        let mut pos_of = vec![usize::MAX; self.n_modes];
        for (p, &m) in integrated.iter().enumerate() {
            pos_of[m] = p;
        }
        let n = self.n_modes;
        let mut out = self.like();
        for (mono, c) in &self.terms {
            let mut outer: Vec<usize> = Vec::new();
            let mut inner: Vec<usize> = Vec::new();
            for &g in mono {
                let g = g as usize;
                let mode = if g < n { g } else { g - n };
                if pos_of[mode] == usize::MAX {
                    outer.push(g);
                } else {
                    inner.push(g);
                }
            }
            let bars: Vec<usize> = inner.iter().copied().filter(|&g| g < n).collect();
            let plain: Vec<usize> = inner.iter().copied().filter(|&g| g >= n).collect();
            if bars.len() != plain.len() {
                continue;
            }
            // mono = sign · outer · inner, inner rewritten as Π (W_{i_a} W̄_{j_a})
            let mut seq = outer.clone();
            seq.extend(&inner);
            let split_sign = sort_sign(&seq) as f64;
            let mut paired = Vec::with_capacity(inner.len());
            for (w, wb) in plain.iter().zip(&bars) {
                paired.push(*w);
                paired.push(*wb);
            }
            let pair_sign = sort_sign(&paired) as f64;
            let m = bars.len();
            let mut sub = CMat::zeros(m, m);
            for (a, &w) in plain.iter().enumerate() {
                for (b, &wb) in bars.iter().enumerate() {
                    sub[(a, b)] = gamma[(pos_of[w - n], pos_of[wb])];
                }
            }
            let det = if m == 0 { ONE } else { sub.determinant() };
            let key: Monomial = outer.iter().map(|&g| g as u16).collect();
            out.add_term(key, c * det * (split_sign * pair_sign));
        }
        out.terms.retain(|_, c| *c != ZERO);
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let table = CoefficientTable {
            n_modes: self.n_modes,
            spacing: self.spacing,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TableRow {
                    generators: m.iter().map(|&g| g as usize).collect(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        };
        Ok(serde_json::to_string(&table)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: CoefficientTable = serde_json::from_str(text)?;
        let mut p = Self::zero(table.n_modes).with_spacing(table.spacing);
        for row in table.terms {
            if row.generators.iter().any(|&g| g >= 2 * table.n_modes)
                || row.generators.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(Error::Config("coefficient table row is not canonical".into()));
            }
            p.add_term(row.generators.iter().map(|&g| g as u16).collect(), C64::new(row.re, row.im));
        }
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
struct CoefficientTable {
    n_modes: usize,
    spacing: f64,
    terms: Vec<TableRow>,
}

#[derive(Serialize, Deserialize)]
struct TableRow {
    generators: Vec<usize>,
    re: f64,
    im: f64,
}

/// `∫ e^{-⟨ψ̄,Mψ⟩}` evaluated inside the algebra without forming the full
/// exponential: `Π_i (1 - ψ̄_i L_i)` with `L_i = Σ_j M_ij ψ_j` contributes
/// only through `Π_i (-ψ̄_i L_i)`, and the barred generators are moved to the
/// front before the product of the linear forms is expanded.
pub fn gaussian_berezin(m: &CMat) -> C64 {
    let n = m.nrows();
    let mut prod = GrassmannPoly::one(n);
    for i in 0..n {
        let mut li = GrassmannPoly::zero(n);
        for j in 0..n {
            if m[(i, j)] != ZERO {
                li.add_term(SmallVec::from_slice(&[(n + j) as u16]), -m[(i, j)]);
            }
        }
        prod = prod.mul(&li).expect("same universe");
    }
    // Π_i (ψ̄_i X_i) = (-1)^{n(n-1)/2} ψ̄_0⋯ψ̄_{n-1} X_0⋯X_{n-1}
    let reorder = if (n * (n.saturating_sub(1)) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let plain: Vec<usize> = (n..2 * n).collect();
    prod.coefficient(&plain) * reorder * GrassmannPoly::top_normalization(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn nilpotent_and_anticommuting() {
        let n = 2;
        let x = GrassmannPoly::psi(n, 0);
        let y = GrassmannPoly::psi(n, 1);
        assert!(x.mul(&x).unwrap().is_empty());
        let xy = x.mul(&y).unwrap();
        let yx = y.mul(&x).unwrap();
        assert_eq!(xy, yx.scale(c(-1.0)));
    }

    #[test]
    fn product_of_sums_expands() {
        let n = 2;
        let one = GrassmannPoly::one(n);
        let x = GrassmannPoly::psi(n, 0);
        let y = GrassmannPoly::psi(n, 1);
        let lhs = one.add(&x).unwrap().mul(&one.add(&y).unwrap()).unwrap();
        let rhs = one.add(&x).unwrap().add(&y).unwrap().add(&x.mul(&y).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn h_norm_of_two_point_monomial() {
        let p = GrassmannPoly::from_terms(2, [(vec![2, 3], c(3.0))]);
        assert!((p.h_norm(0.5) - 3.0 * 0.25).abs() < 1e-15);
        assert_eq!(GrassmannPoly::constant(1, c(-2.0)).h_norm(7.0), 2.0);
    }

    #[test]
    fn single_pair_integrals() {
        let n = 1;
        let pb = GrassmannPoly::psi_bar(n, 0);
        let p = GrassmannPoly::psi(n, 0);
        assert_eq!(p.mul(&pb).unwrap().berezin_full(), c(1.0));
        assert_eq!(pb.mul(&p).unwrap().berezin_full(), c(-1.0));
        assert_eq!(GrassmannPoly::one(n).berezin_full(), c(0.0));
    }

    #[test]
    fn exp_of_single_pair() {
        let e = GrassmannPoly::from_terms(1, [(vec![0, 1], c(2.5))]);
        assert_eq!(e.exp(), GrassmannPoly::one(1).add(&e).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let p = GrassmannPoly::from_terms(3, [(vec![0, 4], C64::new(0.1, -0.3)), (vec![], c(1.0 / 3.0))]);
        assert_eq!(GrassmannPoly::from_json(&p.to_json().unwrap()).unwrap(), p);
    }

    #[test]
    fn gaussian_two_point() {
        let g = CMat::from_row_slice(1, 1, &[c(0.7)]);
        let w_wbar = GrassmannPoly::from_terms(1, [(vec![1, 0], c(1.0))]);
        assert_eq!(w_wbar.gaussian_integrate(&[0], &g).unwrap().constant_term(), c(0.7));
        assert_eq!(GrassmannPoly::one(1).gaussian_integrate(&[0], &g).unwrap().constant_term(), c(1.0));
    }
}
