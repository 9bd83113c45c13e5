use blockrg::expansion::SmallFieldThreshold;
use blockrg::fields::{rescale_gauge, GaugeField};
use blockrg::halfpow::HalfPow;
use blockrg::lattice::{CubeGrid, TorusSpec};
use blockrg::linalg::CVec;
use blockrg::minimizers::{axial_minimizer, fluct_covariance, gauge_form};
use blockrg::rgstep::{
    boson_step, boson_sunset, fermion_routes, next_energy, rg_transform, z_preservation_oracle, StepParams,
    TransformOutcome,
};
use blockrg::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn four() -> TorusSpec {
    TorusSpec::unit(2, 2).unwrap()
}

fn random_cvec(rng: &mut impl Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

#[test]
fn first_nested_step_is_the_axial_step() {
    let spec = four();
    let s = boson_step(&spec, &gauge_form(&spec)).unwrap();
    let (hx, _) = axial_minimizer(&spec).unwrap();
    assert!((&s.minimizer - &hx.matrix).amax() < 1e-12);
    let fluct = fluct_covariance(&spec).unwrap();
    assert!((s.log_z - fluct.log_z).abs() < 1e-10);
}

#[test]
fn bosonic_sunset_two_routes_agree() {
    for (side, levels) in [(1, 1), (2, 1), (2, 2)] {
        let spec = TorusSpec::unit(2, side).unwrap();
        let r = boson_sunset(&spec, levels, 1.0).unwrap();
        let s = &r.summary;
        assert!((s.ratio - 1.0).abs() < 1e-10);
        assert!(s.covariance_gap < 1e-10);
    }
}

#[test]
fn fermion_routes_agree_at_fixed_field() {
    let spec = four();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for e in [0.0, 0.3, 1.0] {
        let a = GaugeField::random(spec, 1.0, &mut rng);
        let r = fermion_routes(&a, e, 0.1, 1.0).unwrap();
        assert!(r.blocked_error < 1e-10, "{r:?}");
        assert!(r.joint_error < 1e-10, "{r:?}");
    }
}

#[test]
fn series_coefficients_agree() {
    let spec = four();
    let r = z_preservation_oracle(&spec, 1, 0.0, 0.1, 1.0, &[]).unwrap();
    assert!(r.series_relative_error < 1e-6);
    assert!(r.series_fluct[0] > 0.0 && r.series_coarse[0] > 0.0);
}

#[test]
fn free_transform_has_no_interaction_polymers() {
    let fine = TorusSpec::unit(2, 1).unwrap();
    let coarse = fine.coarsen().unwrap();
    let grid = CubeGrid::new(&fine, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let a1 = GaugeField::random(coarse, 0.5, &mut rng);
    let params = StepParams::initial(2, 0.0, 0.05, 0.0, 0.0, 1.0);
    let TransformOutcome::Small(step) = rg_transform(&a1, &fine, &params, &grid, SmallFieldThreshold::default()).unwrap()
    else {
        panic!("free theory has no large fields");
    };
    assert_eq!(step.sharp_constant, C64::new(0.0, 0.0));
    assert!(step.det_polymers.unwrap().is_zero(1e-12));
}

#[test]
fn critical_point_splits_the_fermion_form() {
    let fine = four();
    let coarse = fine.coarsen().unwrap();
    let grid = CubeGrid::new(&fine, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let a1 = GaugeField::random(coarse, 0.05, &mut rng);
    let params = StepParams::initial(2, 0.05, 0.05, 0.0, 0.0, 1.0);
    let TransformOutcome::Small(step) = rg_transform(&a1, &fine, &params, &grid, SmallFieldThreshold::default()).unwrap()
    else {
        panic!("weak field classified as large");
    };
    let (nc, nf) = (step.coarse_kernel.nrows(), step.fermion.gamma.nrows());
    for _ in 0..5 {
        let r = step.form_split_residual(
            &random_cvec(&mut rng, nc),
            &random_cvec(&mut rng, nc),
            &random_cvec(&mut rng, nf),
            &random_cvec(&mut rng, nf),
        );
        assert!(r < 1e-10, "{r}");
    }
    assert!(step.sharp_constant.norm() > 0.0);
    let det = step.det_polymers.unwrap();
    let summed: C64 = det.iter().map(|(_, p)| p.constant_term()).sum();
    assert!(summed.norm() > 0.0);
}

#[test]
fn strong_field_takes_the_large_field_branch() {
    let fine = four();
    let coarse = fine.coarsen().unwrap();
    let grid = CubeGrid::new(&fine, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let a1 = GaugeField::random(coarse, 40.0, &mut rng);
    let params = StepParams::initial(2, 0.5, 0.05, 0.0, 0.0, 1.0);
    match rg_transform(&a1, &fine, &params, &grid, SmallFieldThreshold::default()).unwrap() {
        TransformOutcome::Large(dec) => assert!(!dec.large.is_empty()),
        TransformOutcome::Small(_) => panic!("expected large field"),
    }
}

#[test]
fn parameters_rescale_by_exact_powers() {
    let mut p = StepParams::initial(2, 1e-3, 1e-4, 0.02, 0.01, 1.0);
    for _ in 0..6 {
        let q = p.rescale(0.0, 0.0);
        assert_eq!(q.e.exact_ratio(p.e), Some(HalfPow::new(2, 1)));
        assert_eq!(q.mass.exact_ratio(p.mass), Some(HalfPow::integer(2, 1)));
        assert_eq!(q.eps.exact_ratio(p.eps), Some(HalfPow::integer(2, 3)));
        assert_eq!(q.mass_bar.exact_ratio(p.mass_bar), Some(HalfPow::integer(2, 1)));
        p = q;
    }
    let q = p.rescale(0.0, 0.5);
    assert!((q.mass.value() - 2.0 * (p.mass.value() + 0.5)).abs() < 1e-12);
}

#[test]
fn smeared_action_is_invariant_under_rescaling_and_coarse_gauge() {
    let fine = four();
    let coarse = fine.coarsen().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    let (hx, _) = axial_minimizer(&fine).unwrap();
    let a1 = GaugeField::random(coarse, 1.0, &mut rng);
    let smeared = hx.apply(&a1).unwrap();
    let action = smeared.strength_norm_sq();
    let unit = rescale_gauge(&smeared, 1).unwrap();
    assert!((unit.strength_norm_sq() - action).abs() < 1e-12 * action);
    let omega = blockrg::fields::ScalarField::random(coarse, 1.0, &mut rng);
    let moved = hx.apply(&a1.gauge_transform(&omega).unwrap()).unwrap();
    assert!((moved.strength_norm_sq() - action).abs() < 1e-10 * action);
}

#[test]
fn next_energy_reblocks_the_sum() {
    let fine = TorusSpec::unit(2, 3).unwrap();
    let grid = CubeGrid::new(&fine, 1).unwrap();
    let mut a = blockrg::expansion::PolymerFunction::new(grid, fine, 0);
    let mut b = a.clone();
    for c in 0..grid.cube_count() {
        a.insert(&[c], blockrg::grassmann::GrassmannPoly::constant(0, C64::new(1.0, 0.0))).unwrap();
        b.insert(&[c], blockrg::grassmann::GrassmannPoly::constant(0, C64::new(0.5, 0.0))).unwrap();
    }
    let next = next_energy(&[&a, &b]).unwrap();
    for (_, p) in next.iter() {
        assert!((p.constant_term().re - 12.0).abs() < 1e-13);
    }
    assert!(next_energy(&[]).is_err());
}
