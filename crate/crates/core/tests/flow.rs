use blockrg::flow::{
    bound_check, bvp_solve, exact_response, flow_step, linear_closed_form, polymer_bound_check, trajectory, FlowSpec,
    ResponseModel, ToyModel,
};
use blockrg::halfpow::HalfPow;
use blockrg::lattice::TorusSpec;
use blockrg::rgstep::StepParams;

fn spec() -> FlowSpec {
    FlowSpec::new(2, 8, 6, 1e-3).unwrap()
}

#[test]
fn zero_model_gives_zero_trajectory() {
    let s = bvp_solve(&spec(), &ResponseModel::Zero, 1e-12, 10, 1).unwrap();
    assert_eq!((s.eps0, s.m0), (0.0, 0.0));
    assert!(s.trajectory.iter().all(|t| t.eps == 0.0 && t.mass == 0.0 && t.e_norm == 0.0));
    assert!(bound_check(&s.trajectory).all_pass);
}

#[test]
fn homogeneous_flow_grows_by_exact_factors() {
    let t = trajectory(&spec(), 1e-6, 1e-5, &ResponseModel::Zero).unwrap();
    for (k, s) in t.iter().enumerate() {
        assert_eq!(s.eps, 1e-6 * 8f64.powi(k as i32));
        assert_eq!(s.mass, 1e-5 * 2f64.powi(k as i32));
    }
    for w in t.windows(2) {
        assert_eq!(w[1].e.exact_ratio(w[0].e), Some(HalfPow::new(2, 1)));
    }
    assert_eq!(t.last().unwrap().e.pow, HalfPow::new(2, -2));
}

#[test]
fn linear_model_matches_closed_form() {
    let fs = spec();
    let model = ResponseModel::Linear { a: 0.7, b: -0.3 };
    let s = bvp_solve(&fs, &model, 1e-12, 10, 2).unwrap();
    let [eps, mass] = linear_closed_form(&fs, 0.7, -0.3);
    assert!((s.eps0 - eps).abs() <= 1e-12);
    assert!((s.m0 - mass).abs() <= 1e-12);
    assert!(s.residual[0] <= 1e-12 && s.residual[1] <= 1e-12);
    assert!(s.unique);
}

#[test]
fn toy_model_satisfies_the_bound_ladder() {
    let s = bvp_solve(&spec(), &ResponseModel::Toy(ToyModel::default()), 1e-12, 10, 3).unwrap();
    assert!(s.residual[0] <= 1e-12 && s.residual[1] <= 1e-12);
    assert!(s.unique);
    let report = bound_check(&s.trajectory);
    assert!(report.all_pass, "{:?}", report.rows);
    assert_eq!(report.rows.len(), 7);
}

#[test]
fn violated_initial_counterterm_is_flagged() {
    let fs = spec();
    let e0 = fs.coupling(0).value();
    let t = trajectory(&fs, 2.0 * e0.powf(0.25), 0.0, &ResponseModel::Toy(ToyModel::default())).unwrap();
    let report = bound_check(&t);
    assert_eq!(report.first_failure, Some(0));
    assert!(!report.rows[0].eps_ok);
}

#[test]
fn perturbed_initial_data_diverge_geometrically() {
    let fs = spec();
    let model = ResponseModel::Toy(ToyModel::default());
    let s = bvp_solve(&fs, &model, 1e-12, 0, 4).unwrap();
    let delta = 1e-9;
    let t = trajectory(&fs, s.eps0 + delta, s.m0, &model).unwrap();
    for (k, (a, b)) in t.iter().zip(&s.trajectory).enumerate() {
        let growth = (a.eps - b.eps) / delta;
        let expect = 8f64.powi(k as i32);
        assert!((growth / expect - 1.0).abs() < 1e-3, "k={k} growth={growth}");
    }
}

#[test]
fn lattice_response_feeds_the_summary_flow() {
    let lattice = TorusSpec::unit(2, 2).unwrap();
    let fs = FlowSpec::new(2, 3, 2, 0.5).unwrap();
    let couplings: Vec<f64> = (0..2).map(|k| fs.coupling(k).value()).collect();
    let table = exact_response(&lattice, 1, &couplings, 1.0, 0.5).unwrap();
    assert!(table.steps.iter().all(|s| s.m_star != 0.0));
    let model = ResponseModel::Exact(table.clone());
    let (eps0, m0) = (1e-3, -2e-3);
    let t = trajectory(&fs, eps0, m0, &model).unwrap();
    let mut p = StepParams::initial(2, couplings[0], 0.0, m0, eps0, 1.0);
    for k in 0..2 {
        let st = &table.steps[k];
        p = p.rescale(st.eps_star, st.m_star);
        let s = &t[k + 1];
        assert!((s.mass - p.mass.value()).abs() <= 1e-10);
        assert!((s.eps - p.eps.value()).abs() <= 1e-10);
        assert!((s.e.value() - p.e.value()).abs() <= 1e-15);
        let next = st.next.as_ref().unwrap();
        let (_, ratio) = polymer_bound_check(next, p.e.value(), table.kappa);
        assert!((ratio * p.e.value().powf(0.25) - s.e_norm).abs() <= 1e-10 * s.e_norm.max(1.0));
    }
    let single = flow_step(&t[0], &model).unwrap();
    assert_eq!(single, t[1]);
}
