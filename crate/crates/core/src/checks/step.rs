//! Criterion 7: partition function preservation across block steps.

use super::Context;
use crate::fields::GaugeField;
use crate::report::Report;
use crate::rgstep::{boson_sunset, z_preservation_oracle};
use crate::{Error, Result};

pub(super) fn partition_preservation(ctx: &Context, report: &mut Report) -> Result<()> {
    let cfg = ctx.config;
    let fine = cfg.lattice()?;
    let mut rng = ctx.rng(7);
    let samples: Vec<GaugeField> = (0..cfg.fermion_samples).map(|_| GaugeField::random(fine, 1.0, &mut rng)).collect();
    let step = z_preservation_oracle(&fine, 1, cfg.e, cfg.mass_bar, cfg.b, &samples)?;

    // deeper chains, as far as the torus allows
    let mut boson_error = step.boson_ratio_error();
    let mut gap = step.boson.covariance_gap;
    let mut chains = vec![step.boson.clone()];
    let mut spec = fine.coarsen()?;
    for levels in 2..=cfg.levels.max(1) {
        if spec.side() < fine.base {
            return Err(Error::Config(format!("{levels} levels exceed the torus")));
        }
        let s = boson_sunset(&fine, levels, 1.0)?.summary;
        boson_error = boson_error.max((s.ratio - 1.0).abs());
        gap = gap.max(s.covariance_gap);
        chains.push(s);
        spec = spec.coarsen()?;
    }
    report.at_most("sunset.boson_ratio_error", boson_error, ctx.tol.sunset);
    report.at_most("sunset.boson_covariance_gap", gap, ctx.tol.sunset);
    report.at_most("sunset.fermion_ratio_error", step.fermion_ratio_error(), ctx.tol.sunset);
    report.at_most("sunset.series_relative_error", step.series_relative_error, ctx.tol.series);
    report.attach("rg_step.json", serde_json::to_string_pretty(&step)? + "\n");
    report.put("boson_chains", chains)?;
    Ok(())
}
