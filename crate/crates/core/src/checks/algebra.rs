//! Criteria 1, 5 and 6: Berezin integrals, the cluster expansion and the
//! determinant expansion against direct evaluation.

use rand::Rng;

use super::Context;
use crate::expansion::{
    brute_force_log_partition, cluster_expand, det_expand, ClusterInstance, CubeInteraction, RegionDecomposition,
    SmallFieldThreshold,
};
use crate::fields::GaugeField;
use crate::grassmann::gaussian_berezin;
use crate::lattice::CubeGrid;
use crate::linalg::CMat;
use crate::minimizers::fermion_normalizer;
use crate::report::Report;
use crate::{Error, Result, C64};

pub(super) fn grassmann_determinant(ctx: &Context, report: &mut Report) -> Result<()> {
    let mut rng = ctx.rng(1);
    let mut worst: f64 = 0.0;
    let mut csv = String::from("trial,dim,berezin_re,berezin_im,lu_re,lu_im,rel_error\n");
    for trial in 0..50 {
        let n = 1 + trial % 16;
        let m = CMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let b = gaussian_berezin(&m);
        let det = m.determinant();
        let err = (b - det).norm() / det.norm();
        worst = worst.max(err);
        csv.push_str(&format!("{trial},{n},{:e},{:e},{:e},{:e},{err:e}\n", b.re, b.im, det.re, det.im));
    }
    report.at_most("grassmann.det_rel_error", worst, ctx.tol.grassmann);
    report.attach("grassmann.csv", csv);
    Ok(())
}

/// Every arrangement of at most three unit cubes up to lattice symmetry,
/// connected or not.
fn cluster_shapes(grid: &CubeGrid) -> Vec<(&'static str, Vec<usize>)> {
    let at = |i, j, k| grid.index([i, j, k]);
    vec![
        ("single", vec![at(1, 1, 1)]),
        ("pair", vec![at(1, 1, 1), at(2, 1, 1)]),
        ("line", vec![at(1, 1, 1), at(2, 1, 1), at(3, 1, 1)]),
        ("corner", vec![at(1, 1, 1), at(2, 1, 1), at(2, 2, 1)]),
        ("split_pair", vec![at(1, 1, 1), at(3, 1, 1)]),
        ("pair_and_single", vec![at(1, 1, 1), at(2, 1, 1), at(1, 3, 1)]),
    ]
}

pub(super) fn cluster_oracle(ctx: &Context, report: &mut Report) -> Result<()> {
    let cfg = ctx.config;
    let spec = cfg.lattice()?;
    if spec.side() < 4 {
        return Err(Error::Config("cluster instances need a side of at least 4".into()));
    }
    let grid = CubeGrid::new(&spec, 0)?;
    let mut rng = ctx.rng(5);
    let mut worst: f64 = 0.0;
    let mut csv = String::from("shape,cubes,log_xi_re,log_xi_im,sum_re,sum_im,delta,truncation\n");
    for (name, cubes) in cluster_shapes(&grid) {
        let inter = (0..cubes.len())
            .map(|_| CubeInteraction {
                lambda: cfg.cluster_coupling,
                alpha1: rng.gen_range(-1.0..1.0),
                alpha2: rng.gen_range(-1.0..1.0),
                beta: rng.gen_range(-1.0..1.0),
                gamma: rng.gen_range(-1.0..1.0),
            })
            .collect();
        let inst = ClusterInstance::from_lattice(spec, grid, &cubes, inter, cfg.e, cfg.mass_bar, cfg.b)?;
        let res = cluster_expand(&inst, cfg.order_max, ctx.tol.cluster * 1e-2)?;
        let summed: C64 = res.function.iter().map(|(_, p)| p.constant_term()).sum();
        let brute = brute_force_log_partition(&inst, 24)?;
        let delta = (brute - summed).norm();
        worst = worst.max(delta);
        csv.push_str(&format!(
            "{name},{},{:e},{:e},{:e},{:e},{delta:e},{:e}\n",
            cubes.len(),
            brute.re,
            brute.im,
            summed.re,
            summed.im,
            res.truncation_estimate
        ));
    }
    report.at_most("cluster.log_xi_delta", worst, ctx.tol.cluster);
    report.attach("cluster.csv", csv);
    Ok(())
}

pub(super) fn determinant_resummation(ctx: &Context, report: &mut Report) -> Result<()> {
    let cfg = ctx.config;
    let spec = cfg.lattice()?;
    let grid = CubeGrid::new(&spec, cfg.m_exp)?;
    if grid.cube_count() > 16 {
        return Err(Error::Config(format!("{} cubes exceed the 16 cube Möbius limit", grid.cube_count())));
    }
    let all: Vec<usize> = (0..grid.cube_count()).collect();
    let threshold = SmallFieldThreshold { p_exp: cfg.p_exp }.value(cfg.e)?;
    let base = fermion_normalizer(&GaugeField::zeros(spec), cfg.e, cfg.mass_bar, cfg.b)?;
    let mut rng = ctx.rng(6);
    let mut worst: f64 = 0.0;
    let mut csv = String::from("trial,direct_re,direct_im,summed_re,summed_im,error\n");
    let mut trial = 0;
    while trial < 20 {
        let a = GaugeField::random(spec, rng.gen_range(0.1..1.0), &mut rng);
        if !RegionDecomposition::of_field(&a, &grid, threshold).large.is_empty() {
            continue;
        }
        let (f, _) = det_expand(&a, &grid, &all, cfg.e, cfg.mass_bar, cfg.b)?;
        let direct = fermion_normalizer(&a, cfg.e, cfg.mass_bar, cfg.b)? - base;
        let summed: C64 = f.iter().map(|(_, p)| p.constant_term()).sum();
        let err = (summed - direct).norm() / direct.norm().max(1.0);
        worst = worst.max(err);
        csv.push_str(&format!("{trial},{:e},{:e},{:e},{:e},{err:e}\n", direct.re, direct.im, summed.re, summed.im));
        trial += 1;
    }
    report.at_most("determinant.mobius_error", worst, ctx.tol.determinant);
    report.attach("determinant.csv", csv);
    Ok(())
}
