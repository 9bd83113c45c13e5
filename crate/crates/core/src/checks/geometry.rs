//! Criteria 2, 3, 4 and 8: gauge covariance, constrained minimizers, the
//! fluctuation mass gap and the exact scaling laws.

use rand::Rng;

use super::{rel, Context};
use crate::averaging::{block_mean, fermion_average, gauge_average, restrict_to_centers};
use crate::dirac::{gauge_phase_matrix, wilson_dirac};
use crate::fields::{rescale_gauge, GaugeField, ScalarField};
use crate::flow::FlowSpec;
use crate::halfpow::HalfPow;
use crate::lattice::TorusSpec;
use crate::linalg::{max_abs, RVec};
use crate::minimizers::{
    axial_minimizer, curl_matrix, fermion_fluct, fermion_normalizer, fluct_covariance, gauge_form, landau_minimizer,
    minimizer_decay,
};
use crate::report::Report;
use crate::rgstep::{wrap_phase, StepParams};
use crate::{Error, Result};

/// The two tori of the covariance suite, `L³` and `(L²)³`.
fn small_tori(base: usize) -> Result<[TorusSpec; 2]> {
    Ok([TorusSpec::unit(base, 1)?, TorusSpec::unit(base, 2)?])
}

pub(super) fn gauge_covariance(ctx: &Context, report: &mut Report) -> Result<()> {
    let mut rng = ctx.rng(2);
    let mut worst = [0.0f64; 5];
    for spec in small_tori(ctx.config.base_scale)? {
        let qg = gauge_average(&spec)?;
        for _ in 0..100 {
            let a = GaugeField::random(spec, 1.0, &mut rng);
            let w = ScalarField::random(spec, 3.0, &mut rng);
            let e = rng.gen_range(0.1..2.0);
            let mass = rng.gen_range(0.0..0.5);
            let at = a.gauge_transform(&w)?;
            let u = gauge_phase_matrix(&w, e);

            let d = &u * wilson_dirac(&a, e).matrix * u.adjoint() - wilson_dirac(&at, e).matrix;
            worst[0] = worst[0].max(max_abs(&d));

            let uc = gauge_phase_matrix(&restrict_to_centers(&w)?, e);
            let q = fermion_average(&a, e)?.matrix;
            let qt = fermion_average(&at, e)?.matrix;
            worst[1] = worst[1].max(max_abs(&(qt * &u - uc * q)));

            let lhs = qg.apply(&at)?;
            let rhs = qg.apply(&a)?.gauge_transform(&block_mean(&w)?)?;
            let gap = lhs.values.iter().zip(&rhs.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            worst[2] = worst[2].max(gap);

            let z = fermion_normalizer(&a, e, mass, ctx.config.b)?;
            let zt = fermion_normalizer(&at, e, mass, ctx.config.b)?;
            let diff = wrap_phase(zt - z);
            worst[3] = worst[3].max(diff.norm() / z.norm().max(1.0));

            worst[4] = worst[4].max(rel(at.strength_norm_sq(), a.strength_norm_sq()));
        }
    }
    let tol = ctx.tol.covariance;
    report.at_most("covariance.dirac", worst[0], tol);
    report.at_most("covariance.fermion_average", worst[1], tol);
    report.at_most("covariance.gauge_average", worst[2], tol);
    report.at_most("covariance.fermion_normalizer", worst[3], tol);
    report.at_most("covariance.strength_norm", worst[4], tol);
    Ok(())
}

pub(super) fn minimizer_suite(ctx: &Context, report: &mut Report) -> Result<()> {
    let base = ctx.config.base_scale;
    let mut constraint: f64 = 0.0;
    for spec in small_tori(base)? {
        let q = gauge_average(&spec)?;
        constraint = constraint.max(axial_minimizer(&spec)?.0.constraint_residual(&q.matrix));
        constraint = constraint.max(landau_minimizer(&spec)?.minimizer.constraint_residual(&q.matrix));
    }
    report.at_most("minimizer.constraint_residual", constraint, ctx.tol.minimizer);

    let spec = TorusSpec::unit(base, 2)?;
    let k = gauge_form(&spec);
    let (hx, _) = axial_minimizer(&spec)?;
    let landau = landau_minimizer(&spec)?;
    let h0 = &landau.minimizer;
    let fluct = fluct_covariance(&spec)?;
    let basis = fluct.basis_matrix();
    let energy = |v: &RVec| v.dot(&(&k * v));
    let mut rng = ctx.rng(3);
    let mut split: f64 = 0.0;
    for _ in 0..100 {
        let a1 = RVec::from_fn(hx.matrix.ncols(), |_, _| rng.gen_range(-1.0..1.0));
        let z = &basis * RVec::from_fn(fluct.dim, |_, _| rng.gen_range(-1.0..1.0));
        for h in [&hx, h0] {
            let amin = &h.matrix * &a1;
            let total = energy(&(&amin + &z));
            split = split.max(rel(total, energy(&amin) + energy(&z)));
        }
    }
    report.at_most("minimizer.energy_splitting", split, ctx.tol.splitting);

    let curl_gap = (curl_matrix(&spec) * (&hx.matrix - &h0.matrix)).amax();
    report.at_most("minimizer.axial_landau_curl_gap", curl_gap, ctx.tol.minimizer);

    let big = TorusSpec::unit(base, 3)?;
    if big.site_count() > ctx.config.site_cap {
        return Err(Error::CellOverflow {
            count: big.site_count(),
            cap: ctx.config.site_cap,
        });
    }
    let h_decay = minimizer_decay(&landau_minimizer(&big)?.minimizer, 0);
    report.at_least("minimizer.landau_decay_rate", h_decay.rate, f64::MIN_POSITIVE);
    let a = GaugeField::random(spec, 0.3, &mut rng);
    let g_decay = fermion_fluct(&a, ctx.config.e, ctx.config.mass_bar, ctx.config.b)?.decay(0);
    report.at_least("minimizer.fermion_decay_rate", g_decay.rate, f64::MIN_POSITIVE);
    report.put("landau_decay", h_decay)?;
    report.put("fermion_decay", g_decay)?;
    Ok(())
}

pub(super) fn effective_mass(ctx: &Context, report: &mut Report) -> Result<()> {
    let cfg = ctx.config;
    let spec = TorusSpec::unit(cfg.base_scale, 2)?;
    let mass = cfg.mass_bar.min(1e-6);
    let op = fermion_fluct(&GaugeField::zeros(spec), cfg.e, mass, cfg.b)?;
    let s = op.smallest_singular_value();
    report.at_least("mass.smallest_singular_value", s, 0.5 * cfg.b / cfg.base_scale as f64);
    report.put("mass_bar", mass)?;
    Ok(())
}

pub(super) fn scaling_laws(ctx: &Context, report: &mut Report) -> Result<()> {
    let cfg = ctx.config;
    let l = cfg.base_scale as u64;
    let fs = FlowSpec::new(l, cfg.n_steps, cfg.k_steps, cfg.flow_e)?;
    let coupling_exact = (0..fs.n).all(|k| fs.coupling(k + 1).exact_ratio(fs.coupling(k)) == Some(HalfPow::new(l, 1)));
    report.holds("scaling.coupling_half_power", coupling_exact);

    let mut p = StepParams::initial(cfg.base_scale, cfg.flow_e, 1e-4, 2e-2, 1e-2, cfg.b);
    let (mut eps_ok, mut m_ok) = (true, true);
    for _ in 0..fs.n {
        let q = p.rescale(0.0, 0.0);
        eps_ok &= q.eps.exact_ratio(p.eps) == Some(HalfPow::integer(l, 3));
        m_ok &= q.mass.exact_ratio(p.mass) == Some(HalfPow::integer(l, 1))
            && q.mass_bar.exact_ratio(p.mass_bar) == Some(HalfPow::integer(l, 1))
            && q.e.exact_ratio(p.e) == Some(HalfPow::new(l, 1));
        p = q;
    }
    report.holds("scaling.energy_growth_l3", eps_ok);
    report.holds("scaling.mass_growth_l", m_ok);

    // ‖dA‖² on a fine lattice against its image on the dilated lattices
    let mut rng = ctx.rng(8);
    let fine = TorusSpec::new(cfg.base_scale, 2, 0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let a = GaugeField::random(fine, 1.0, &mut rng);
        let s = a.strength_norm_sq();
        for levels in [1, 2] {
            worst = worst.max((rescale_gauge(&a, levels)?.strength_norm_sq() - s).abs() / s);
        }
    }
    report.at_most("scaling.strength_norm_invariance", worst, ctx.tol.consistency);
    Ok(())
}
