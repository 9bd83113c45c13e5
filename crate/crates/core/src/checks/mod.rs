//! Numbered acceptance criteria, each a batch of oracle comparisons
//! recorded into a [`Report`]. The CLI subcommands and the acceptance
//! suite both run these.

mod algebra;
mod flow;
mod geometry;
mod largefield;
mod step;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, Tolerances};
use crate::report::Report;
use crate::{Error, Result};

pub use flow::bounds_check;

/// Inputs shared by every criterion.
pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub tol: Tolerances,
}

impl Context<'_> {
    /// Independent stream per criterion and purpose.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(stream);
        rng
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "Grassmann determinant oracle"),
    (2, "gauge covariance suite"),
    (3, "minimizer suite"),
    (4, "fermion effective mass"),
    (5, "cluster expansion oracle"),
    (6, "determinant expansion resummation"),
    (7, "RG partition preservation"),
    (8, "scaling laws"),
    (9, "large/small field identities"),
    (10, "flow boundary value problem"),
];

/// Criteria run by each subcommand; every criterion belongs to exactly one.
pub fn criteria_of(command: &str) -> &'static [u8] {
    match command {
        "lattice-report" => &[2, 3, 4, 8],
        "cluster-verify" => &[1, 5, 6],
        "rg-step-verify" => &[7],
        "largefield-audit" => &[9],
        "flow-solve" => &[10],
        _ => &[],
    }
}

pub fn run_criterion(n: u8, ctx: &Context, report: &mut Report) -> Result<()> {
    match n {
        1 => algebra::grassmann_determinant(ctx, report),
        2 => geometry::gauge_covariance(ctx, report),
        3 => geometry::minimizer_suite(ctx, report),
        4 => geometry::effective_mass(ctx, report),
        5 => algebra::cluster_oracle(ctx, report),
        6 => algebra::determinant_resummation(ctx, report),
        7 => step::partition_preservation(ctx, report),
        8 => geometry::scaling_laws(ctx, report),
        9 => largefield::identities(ctx, report),
        10 => flow::flow_bvp(ctx, report),
        _ => Err(Error::Config(format!("no criterion {n}"))),
    }
}

/// Relative error with an absolute floor of one.
pub(crate) fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
