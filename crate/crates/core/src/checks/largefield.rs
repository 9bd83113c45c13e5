//! Criterion 9: the partition of unity over small field regions, the region
//! sum identity and the large field suppression bound.

use num::{BigInt, BigRational, One};
use rand::Rng;

use super::Context;
use crate::expansion::{
    largefield_bound_audit, partition_of_unity, region_sum_identity, swoosh_check, RegionDecomposition,
    SmallFieldThreshold,
};
use crate::fields::GaugeField;
use crate::lattice::CubeGrid;
use crate::report::Report;
use crate::Result;

pub(super) fn identities(ctx: &Context, report: &mut Report) -> Result<()> {
    let cfg = ctx.config;
    let spec = cfg.lattice()?;
    let grid = CubeGrid::new(&spec, cfg.m_exp)?;
    let threshold = SmallFieldThreshold { p_exp: cfg.p_exp }.value(cfg.e)?;
    let mut rng = ctx.rng(9);

    let mut unity = true;
    let mut csv = String::from("trial,amplitude,large_cubes,support_size\n");
    for trial in 0..cfg.gauge_samples.max(1) {
        let amp = threshold * rng.gen_range(0.05..1.5);
        let a = GaugeField::random(spec, amp, &mut rng);
        let (total, support) = partition_of_unity(&a, &grid, threshold)?;
        let dec = RegionDecomposition::of_field(&a, &grid, threshold);
        let omega: u64 = dec.small.iter().map(|&c| 1u64 << c).sum();
        unity &= total == BigRational::one() && support == [omega];
        csv.push_str(&format!("{trial},{amp:e},{},{}\n", dec.large.len(), support.len()));
    }
    report.holds("largefield.partition_of_unity", unity);
    report.attach("partition.csv", csv);

    let mut sums = true;
    for n in 0..=12 {
        let x = BigRational::new(BigInt::from(rng.gen_range(1..100)), BigInt::from(rng.gen_range(1..100)));
        let (lhs, rhs) = region_sum_identity(n, &x);
        sums &= lhs == rhs;
    }
    let audit = largefield_bound_audit(grid.cube_count(), 0.25 * threshold * threshold)?;
    report.holds("largefield.region_sum_identity", sums && audit.identity_exact);
    report.holds("largefield.region_sum_bound", audit.bound_holds);

    // one bond per cube pushed past the threshold, on top of weak noise
    let mut swoosh = true;
    let mut violating = 0;
    let mut csv = String::from("cube,factor,sup_strength,threshold,weight,bound,holds\n");
    for cube in 0..grid.cube_count() {
        for factor in [1.1, 1.5, 3.0] {
            let mut a = GaugeField::random(spec, 0.01 * threshold, &mut rng);
            let corner = grid.coords(cube).map(|c| c * grid.width());
            let bond = spec.bond_index(crate::lattice::Bond { site: corner, axis: 0 });
            a.values[bond] += factor * threshold;
            let check = swoosh_check(&a, &grid, cube, threshold);
            if check.sup_strength > threshold {
                violating += 1;
            }
            swoosh &= check.holds;
            csv.push_str(&format!(
                "{cube},{factor},{:e},{:e},{:e},{:e},{}\n",
                check.sup_strength, check.threshold, check.weight, check.bound, check.holds
            ));
        }
    }
    report.holds("largefield.swoosh_on_violating_fields", swoosh && violating == 3 * grid.cube_count());
    report.attach("swoosh.csv", csv);
    report.put("threshold", threshold)?;
    report.put("region_audit", audit)?;
    Ok(())
}
