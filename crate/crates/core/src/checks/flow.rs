//! Criterion 10 and the exact-mode polymer bounds.

use super::Context;
use crate::config::FlowModelKind;
use crate::flow::{
    bound_check, bvp_solve, exact_response, linear_closed_form, polymer_bound_check, trajectory, FlowSpec,
    ResponseModel,
};
use crate::report::Report;
use crate::rgstep::StepParams;
use crate::Result;

/// Steps of the lattice response table in the consistency and bounds checks.
const EXACT_STEPS: u32 = 2;

fn configured_model(ctx: &Context, fs: &FlowSpec) -> Result<ResponseModel> {
    let cfg = ctx.config;
    Ok(match cfg.flow_model {
        FlowModelKind::Zero => ResponseModel::Zero,
        FlowModelKind::Linear => ResponseModel::Linear {
            a: cfg.linear_a,
            b: cfg.linear_b,
        },
        FlowModelKind::Toy => ResponseModel::Toy(cfg.toy),
        FlowModelKind::Exact => {
            let couplings: Vec<f64> = (0..fs.k).map(|k| fs.coupling(k).value()).collect();
            ResponseModel::Exact(exact_response(&cfg.lattice()?, cfg.m_exp, &couplings, cfg.b, cfg.kappa)?)
        }
    })
}

pub(super) fn flow_bvp(ctx: &Context, report: &mut Report) -> Result<()> {
    let cfg = ctx.config;
    let fs = cfg.flow_spec()?;
    let tol = ctx.tol.bvp;

    let model = configured_model(ctx, &fs)?;
    let sol = bvp_solve(&fs, &model, tol, cfg.multistarts, cfg.seed)?;
    let ladder = bound_check(&sol.trajectory);
    report.at_most("flow.final_eps_residual", sol.residual[0], tol);
    report.at_most("flow.final_mass_residual", sol.residual[1], tol);
    report.holds("flow.unique_solution", sol.unique);
    report.attach("trajectory.csv", ladder.to_csv());

    let toy = if matches!(cfg.flow_model, FlowModelKind::Toy) {
        ladder.clone()
    } else {
        let s = bvp_solve(&fs, &ResponseModel::Toy(cfg.toy), tol, 0, cfg.seed)?;
        report.at_most("flow.toy_residual", s.residual[0].max(s.residual[1]), tol);
        bound_check(&s.trajectory)
    };
    report.holds("flow.toy_bound_ladder", toy.all_pass);

    let linear = ResponseModel::Linear {
        a: cfg.linear_a,
        b: cfg.linear_b,
    };
    let lin = bvp_solve(&fs, &linear, tol, 0, cfg.seed)?;
    let [eps, mass] = linear_closed_form(&fs, cfg.linear_a, cfg.linear_b);
    report.at_most(
        "flow.linear_closed_form_gap",
        (lin.eps0 - eps).abs().max((lin.m0 - mass).abs()),
        tol,
    );

    let gap = exact_summary_gap(ctx)?;
    report.at_most("flow.exact_summary_consistency", gap, ctx.tol.consistency);

    report.put("eps0", sol.eps0)?;
    report.put("m0", sol.m0)?;
    report.put("iterations", sol.iterations)?;
    report.put("ladder_first_failure", ladder.first_failure)?;
    Ok(())
}

/// Largest gap over `k ≤ 1` between the summary flow fed by the lattice
/// table and the same step applied directly to the lattice parameters.
fn exact_summary_gap(ctx: &Context) -> Result<f64> {
    let cfg = ctx.config;
    let fs = FlowSpec::new(cfg.base_scale as u64, EXACT_STEPS + 1, EXACT_STEPS, cfg.e)?;
    let couplings: Vec<f64> = (0..EXACT_STEPS).map(|k| fs.coupling(k).value()).collect();
    let table = exact_response(&cfg.lattice()?, cfg.m_exp, &couplings, cfg.b, cfg.kappa)?;
    let (eps0, m0) = (1e-3, -2e-3);
    let t = trajectory(&fs, eps0, m0, &ResponseModel::Exact(table.clone()))?;
    let mut p = StepParams::initial(cfg.base_scale, couplings[0], 0.0, m0, eps0, cfg.b);
    let mut gap: f64 = 0.0;
    for (k, st) in table.steps.iter().enumerate() {
        p = p.rescale(st.eps_star, st.m_star);
        let s = &t[k + 1];
        gap = gap.max((s.mass - p.mass.value()).abs());
        gap = gap.max((s.eps - p.eps.value()).abs());
        if let Some(next) = &st.next {
            let (_, ratio) = polymer_bound_check(next, p.e.value(), table.kappa);
            gap = gap.max((ratio * p.e.value().powf(0.25) - s.e_norm).abs() / s.e_norm.max(1.0));
        }
    }
    Ok(gap)
}

/// Per-polymer bounds `‖E_k(X)‖_h ≤ e_k^{1/4} e^{−κ d_M(X)}` on the lattice
/// table, with the decay rate fitted from the same polymers.
pub fn bounds_check(ctx: &Context, report: &mut Report) -> Result<()> {
    let cfg = ctx.config;
    let fs = FlowSpec::new(cfg.base_scale as u64, cfg.n_steps, cfg.k_steps, cfg.e)?;
    let couplings: Vec<f64> = (0..EXACT_STEPS.min(fs.k)).map(|k| fs.coupling(k).value()).collect();
    let table = exact_response(&cfg.lattice()?, cfg.m_exp, &couplings, cfg.b, cfg.kappa)?;
    let mut csv = String::from("step,e,eps_star,m_star,e_norm_next,bound_ratio,fitted_kappa\n");
    let l = cfg.base_scale as f64;
    for (k, st) in table.steps.iter().enumerate() {
        let Some(next) = &st.next else { continue };
        let e_next = st.e * l.sqrt();
        let (ok, ratio) = polymer_bound_check(next, e_next, cfg.kappa);
        let fit = next.decay_audit(e_next.powf(-0.25)).fit;
        report.holds(&format!("bounds.step{k}_polymer_bound"), ok);
        csv.push_str(&format!(
            "{k},{:e},{:e},{:e},{:e},{ratio:e},{:e}\n",
            st.e, st.eps_star, st.m_star, st.e_norm_next, fit.rate
        ));
    }
    report.attach("bounds.csv", csv);
    report.put("table", &table)?;
    Ok(())
}
