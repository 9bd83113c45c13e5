//! The counterterm flow `ε_{k+1} = L³(ε_k + ε*_k)`, `m_{k+1} = L(m_k + m*_k)`,
//! its boundary-value problem and the bound ladder.

mod exact;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use exact::{exact_response, polymer_bound_check, ExactStep, ExactTable};

use crate::halfpow::{HalfPow, ScaledReal};
use crate::{Error, Result};

/// Parameters at scale `k`; `e_k = L^{-(N-k)/2} e` is kept symbolic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub k: u32,
    pub e: ScaledReal,
    pub eps: f64,
    pub mass: f64,
    /// Summary of `‖E_k‖`.
    pub e_norm: f64,
}

/// Contraction toy model with magnitudes `O(e_k p(e_k))`:
/// `ε* = c_ε e p + c_εm m²`, `m* = c_m e p + c_mm e m`,
/// `‖E_{k+1}‖ = λ_E (‖E_k‖ + c_E e p)`, with `p(e) = (−log e)^{p_exp}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyModel {
    pub c_eps: f64,
    pub c_eps_m: f64,
    pub c_m: f64,
    pub c_mm: f64,
    pub lambda_e: f64,
    pub c_e: f64,
    pub p_exp: u32,
}

impl Default for ToyModel {
    fn default() -> Self {
        Self {
            c_eps: 1.0,
            c_eps_m: 1.0,
            c_m: 0.01,
            c_mm: 1.0,
            lambda_e: 0.5,
            c_e: 1.0,
            p_exp: 2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ResponseModel {
    Zero,
    /// State-independent sources `ε*_k = a e_k`, `m*_k = b e_k`.
    Linear { a: f64, b: f64 },
    Toy(ToyModel),
    /// Relevant parts computed on a lattice, one entry per step.
    Exact(ExactTable),
}

/// What the model returns at one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub eps_star: f64,
    pub m_star: f64,
    pub e_norm_next: f64,
}

impl ResponseModel {
    pub fn respond(&self, s: &FlowState) -> Result<Response> {
        let e = s.e.value();
        Ok(match self {
            ResponseModel::Zero => Response {
                eps_star: 0.0,
                m_star: 0.0,
                e_norm_next: 0.0,
            },
            ResponseModel::Linear { a, b } => Response {
                eps_star: a * e,
                m_star: b * e,
                e_norm_next: 0.0,
            },
            ResponseModel::Toy(t) => {
                let ep = e * (-e.ln()).powi(t.p_exp as i32);
                Response {
                    eps_star: t.c_eps * ep + t.c_eps_m * s.mass * s.mass,
                    m_star: t.c_m * ep + t.c_mm * e * s.mass,
                    e_norm_next: t.lambda_e * (s.e_norm + t.c_e * ep),
                }
            }
            ResponseModel::Exact(table) => {
                let step = table
                    .steps
                    .get(s.k as usize)
                    .ok_or_else(|| Error::Config(format!("no lattice response at step {}", s.k)))?;
                Response {
                    eps_star: step.eps_star,
                    m_star: step.m_star,
                    e_norm_next: step.e_norm_next,
                }
            }
        })
    }
}

/// `N`, `K`, the final coupling `e` and the blocking factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub base: u64,
    pub n: u32,
    pub k: u32,
    pub e: f64,
}

impl FlowSpec {
    pub fn new(base: u64, n: u32, k: u32, e: f64) -> Result<Self> {
        if base < 2 || k > n || !(e > 0.0 && e < 1.0) {
            return Err(Error::Config(format!("bad flow spec L={base} N={n} K={k} e={e}")));
        }
        Ok(Self { base, n, k, e })
    }

    /// `e_k = L^{-(N-k)/2} e`.
    pub fn coupling(&self, k: u32) -> ScaledReal {
        ScaledReal::new(self.e, HalfPow::new(self.base, k as i64 - self.n as i64))
    }

    pub fn initial(&self, eps: f64, mass: f64) -> FlowState {
        FlowState {
            k: 0,
            e: self.coupling(0),
            eps,
            mass,
            e_norm: 0.0,
        }
    }
}

pub fn flow_step(s: &FlowState, model: &ResponseModel) -> Result<FlowState> {
    let r = model.respond(s)?;
    let l = s.e.pow.base as f64;
    Ok(FlowState {
        k: s.k + 1,
        e: s.e.scale(HalfPow::new(s.e.pow.base, 1)),
        eps: l * l * l * (s.eps + r.eps_star),
        mass: l * (s.mass + r.m_star),
        e_norm: r.e_norm_next,
    })
}

/// States `0..=K` from the given initial counterterms, `E_0 = 0`.
pub fn trajectory(spec: &FlowSpec, eps0: f64, m0: f64, model: &ResponseModel) -> Result<Vec<FlowState>> {
    let mut out = Vec::with_capacity(spec.k as usize + 1);
    out.push(spec.initial(eps0, m0));
    for _ in 0..spec.k {
        let next = flow_step(out.last().expect("nonempty"), model)?;
        out.push(next);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BvpSolution {
    pub eps0: f64,
    pub m0: f64,
    pub residual: [f64; 2],
    pub iterations: usize,
    pub trajectory: Vec<FlowState>,
    /// Solutions reached from the random starts.
    pub starts: Vec<[f64; 2]>,
    pub unique: bool,
}

/// Backward sweep from `ε_K = m_K = 0`, solving each step for the earlier
/// state by fixed-point iteration with `e_k` known.
fn backward_guess(spec: &FlowSpec, model: &ResponseModel) -> Result<[f64; 2]> {
    let l = spec.base as f64;
    let (mut eps, mut mass) = (0.0, 0.0);
    for k in (0..spec.k).rev() {
        let (target_eps, target_m) = (eps / (l * l * l), mass / l);
        let (mut x, mut y) = (target_eps, target_m);
        for _ in 0..200 {
            let s = FlowState {
                k,
                e: spec.coupling(k),
                eps: x,
                mass: y,
                e_norm: 0.0,
            };
            let r = model.respond(&s)?;
            let (nx, ny) = (target_eps - r.eps_star, target_m - r.m_star);
            let done = (nx - x).abs() <= 1e-300 + 1e-16 * nx.abs() && (ny - y).abs() <= 1e-300 + 1e-16 * ny.abs();
            x = nx;
            y = ny;
            if done {
                break;
            }
        }
        eps = x;
        mass = y;
    }
    Ok([eps, mass])
}

fn final_values(spec: &FlowSpec, model: &ResponseModel, x: [f64; 2]) -> Result<[f64; 2]> {
    let t = trajectory(spec, x[0], x[1], model)?;
    let last = t.last().expect("nonempty");
    Ok([last.eps, last.mass])
}

/// Newton shooting on `(ε_0, m_0) ↦ (ε_K, m_K)`.
fn newton(spec: &FlowSpec, model: &ResponseModel, start: [f64; 2], tol: f64) -> Result<([f64; 2], [f64; 2], usize)> {
    let mut x = start;
    for it in 0..60 {
        let f = final_values(spec, model, x)?;
        if !f[0].is_finite() || !f[1].is_finite() {
            return Err(Error::ShootingFailed(format!("flow overflowed at iteration {it}")));
        }
        if f[0].abs() <= tol && f[1].abs() <= tol {
            return Ok((x, f, it));
        }
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let h = 1e-7 * x[j].abs().max(1e-9);
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (final_values(spec, model, xp)?, final_values(spec, model, xm)?);
            for i in 0..2 {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::ShootingFailed("singular shooting Jacobian".into()));
        }
        let dx0 = (f[0] * jac[1][1] - f[1] * jac[0][1]) / det;
        let dx1 = (f[1] * jac[0][0] - f[0] * jac[1][0]) / det;
        x = [x[0] - dx0, x[1] - dx1];
    }
    let f = final_values(spec, model, x)?;
    Err(Error::ShootingFailed(format!(
        "residual ({:.3e}, {:.3e}) above {tol:.1e} after 60 iterations",
        f[0], f[1]
    )))
}

/// Solve for `(ε_0, m_0)` with `ε_K = m_K = 0`, then probe uniqueness from
/// `starts` random initial points in the bound box.
pub fn bvp_solve(spec: &FlowSpec, model: &ResponseModel, tol: f64, starts: usize, seed: u64) -> Result<BvpSolution> {
    let guess = backward_guess(spec, model)?;
    let (x, f, iterations) = newton(spec, model, guess, tol)?;
    let e0 = spec.coupling(0).value();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = Vec::with_capacity(starts);
    let mut unique = true;
    for _ in 0..starts {
        let s = [
            rng.gen_range(-1.0..1.0) * e0.powf(0.25),
            rng.gen_range(-1.0..1.0) * e0.powf(0.75),
        ];
        match newton(spec, model, s, tol) {
            Ok((y, _, _)) => {
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300) + 1e-15;
                unique &= close(y[0], x[0]) && close(y[1], x[1]);
                found.push(y);
            }
            Err(_) => unique = false,
        }
    }
    Ok(BvpSolution {
        eps0: x[0],
        m0: x[1],
        residual: [f[0].abs(), f[1].abs()],
        iterations,
        trajectory: trajectory(spec, x[0], x[1], model)?,
        starts: found,
        unique,
    })
}

/// `ε_0 = −Σ_k L^{-3k} a e_k`, `m_0 = −Σ_k L^{-k} b e_k` for the linear model.
pub fn linear_closed_form(spec: &FlowSpec, a: f64, b: f64) -> [f64; 2] {
    let l = spec.base as f64;
    let mut eps = 0.0;
    let mut mass = 0.0;
    for k in 0..spec.k {
        let e = spec.coupling(k).value();
        eps -= l.powi(-3 * k as i32) * a * e;
        mass -= l.powi(-(k as i32)) * b * e;
    }
    [eps, mass]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub k: u32,
    pub e: f64,
    pub eps: f64,
    pub mass: f64,
    pub e_norm: f64,
    pub eps_bound: f64,
    pub mass_bound: f64,
    pub e_norm_bound: f64,
    pub eps_ok: bool,
    pub mass_ok: bool,
    pub e_norm_ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub all_pass: bool,
    pub first_failure: Option<u32>,
}

/// `|ε_k| ≤ e_k^{1/4}`, `|m_k| ≤ e_k^{3/4}`, `‖E_k‖ ≤ e_k^{1/4}` (the polymer
/// bound at `d_M = 0`, which dominates all others in summary mode).
pub fn bound_check(traj: &[FlowState]) -> BoundReport {
    let rows: Vec<BoundRow> = traj
        .iter()
        .map(|s| {
            let e = s.e.value();
            let (eb, mb) = (e.powf(0.25), e.powf(0.75));
            BoundRow {
                k: s.k,
                e,
                eps: s.eps,
                mass: s.mass,
                e_norm: s.e_norm,
                eps_bound: eb,
                mass_bound: mb,
                e_norm_bound: eb,
                eps_ok: s.eps.abs() <= eb,
                mass_ok: s.mass.abs() <= mb,
                e_norm_ok: s.e_norm <= eb,
            }
        })
        .collect();
    let first_failure = rows
        .iter()
        .find(|r| !(r.eps_ok && r.mass_ok && r.e_norm_ok))
        .map(|r| r.k);
    BoundReport {
        all_pass: first_failure.is_none(),
        rows,
        first_failure,
    }
}

impl BoundReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,e_k,eps_k,m_k,E_norm,eps_ok,m_ok,E_ok\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{},{},{}\n",
                r.k, r.e, r.eps, r.mass, r.e_norm, r.eps_ok, r.mass_ok, r.e_norm_ok
            ));
        }
        out
    }
}
