use blockrg::averaging::fermion_average;
use blockrg::dirac::wilson_dirac;
use blockrg::expansion::{
    aggregate_energy, brute_force_log_partition, build_v0, cluster_expand, det_expand, extract_relevant,
    largefield_bound_audit, partition_of_unity, reblock_scale, region_sum_identity, swoosh_check, ClusterInstance,
    CubeInteraction, NormGrowth, PolymerFunction, RegionDecomposition,
};
use blockrg::fields::GaugeField;
use blockrg::grassmann::GrassmannPoly;
use blockrg::lattice::{CubeGrid, TorusSpec};
use blockrg::linalg::CMat;
use blockrg::minimizers::fermion_normalizer;
use blockrg::{C64, SPIN_DIM};
use num::{BigInt, BigRational, One};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn four() -> TorusSpec {
    TorusSpec::unit(2, 2).unwrap()
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn interaction(rng: &mut impl Rng, lambda: f64) -> CubeInteraction {
    CubeInteraction {
        lambda,
        alpha1: rng.gen_range(-1.0..1.0),
        alpha2: rng.gen_range(-1.0..1.0),
        beta: rng.gen_range(-1.0..1.0),
        gamma: rng.gen_range(-1.0..1.0),
    }
}

#[test]
fn exactly_one_region_contributes() {
    let spec = four();
    let grid = CubeGrid::new(&spec, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for amp in [0.1, 0.6, 1.0, 3.0] {
        let a = GaugeField::random(spec, amp, &mut rng);
        let (total, support) = partition_of_unity(&a, &grid, 1.0).unwrap();
        assert_eq!(total, BigRational::one());
        assert_eq!(support.len(), 1);
        let dec = RegionDecomposition::of_field(&a, &grid, 1.0);
        let omega: u64 = dec.small.iter().map(|&c| 1u64 << c).sum();
        assert_eq!(support[0], omega);
    }
}

#[test]
fn region_sum_matches_binomial_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 0..=10 {
        let x = BigRational::new(BigInt::from(rng.gen_range(1..50)), BigInt::from(rng.gen_range(1..50)));
        let (lhs, rhs) = region_sum_identity(n, &x);
        assert_eq!(lhs, rhs);
    }
    for cubes in [1, 4, 8, 12] {
        let audit = largefield_bound_audit(cubes, 2.5).unwrap();
        assert!(audit.identity_exact && audit.bound_holds);
    }
}

#[test]
fn large_field_weight_is_suppressed() {
    let spec = four();
    let grid = CubeGrid::new(&spec, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for amp in [0.5, 1.5, 4.0] {
        let a = GaugeField::random(spec, amp, &mut rng);
        for cube in 0..grid.cube_count() {
            assert!(swoosh_check(&a, &grid, cube, 1.2).holds);
        }
    }
}

/// Direct `ψ̄ M ψ` for the fine action plus averaging term, modes fine then coarse.
fn direct_action(a: &GaugeField, e: f64, b: f64) -> CMat {
    let spec = a.spec;
    let q = fermion_average(a, e).unwrap().matrix;
    let qb = q.map(|v| v.conj());
    let nf = q.ncols();
    let nc = q.nrows();
    let w = spec.point_weight();
    let l = spec.base as f64;
    let coef = c(b / l * w * l.powi(3));
    let mut m = CMat::zeros(nf + nc, nf + nc);
    let d = wilson_dirac(a, e).matrix * c(w) + qb.transpose() * &q * coef;
    m.view_mut((0, 0), (nf, nf)).copy_from(&d);
    m.view_mut((0, nf), (nf, nc)).copy_from(&(qb.transpose() * -coef));
    m.view_mut((nf, 0), (nc, nf)).copy_from(&(&q * -coef));
    m
}

#[test]
fn v0_reassembles_the_interaction() {
    let spec = TorusSpec::unit(2, 1).unwrap();
    let grid = CubeGrid::new(&spec, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (e, b) = (0.3, 1.0);
    let a = GaugeField::random(spec, 0.4, &mut rng);
    let z = GaugeField::random(spec, 0.2, &mut rng);
    let pieces = build_v0(&a, &z, e, b, &grid).unwrap();
    let expect = direct_action(&a.add(&z).unwrap(), e, b) - direct_action(&a, e, b);
    assert!(blockrg::linalg::max_abs(&(&pieces.matrix - &expect)) < 1e-13);
    let total = pieces.function.total();
    let direct = GrassmannPoly::bilinear(&expect);
    assert!(total.sub(&direct).unwrap().h_norm(1.0) < 1e-12);
}

#[test]
fn v0_pieces_are_local() {
    let spec = four();
    let grid = CubeGrid::new(&spec, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = GaugeField::random(spec, 0.3, &mut rng);
    let z = GaugeField::random(spec, 0.1, &mut rng);
    let pieces = build_v0(&a, &z, 0.2, 1.0, &grid).unwrap();
    let nf = SPIN_DIM * spec.site_count();
    let w = grid.width() as i64;
    for (cube, m) in pieces.per_cube.iter().enumerate() {
        let cc = grid.coords(cube);
        for i in 0..nf {
            for j in 0..nf {
                if m[(i, j)].norm() == 0.0 {
                    continue;
                }
                for x in [i, j] {
                    let s = spec.site(x / SPIN_DIM);
                    // each mode lies in the cube or one step past its upper faces
                    for k in 0..3 {
                        let off = (s[k] as i64 - cc[k] as i64 * w).rem_euclid(spec.side() as i64);
                        assert!(off <= w, "cube {cube} touches site {s:?}");
                    }
                }
            }
        }
    }
}

fn shapes(grid: &CubeGrid) -> Vec<Vec<usize>> {
    let at = |i, j, k| grid.index([i, j, k]);
    vec![
        vec![at(1, 1, 1)],
        vec![at(1, 1, 1), at(2, 1, 1)],
        vec![at(1, 1, 1), at(2, 1, 1), at(3, 1, 1)],
        vec![at(1, 1, 1), at(2, 1, 1), at(2, 2, 1)],
    ]
}

#[test]
fn cluster_expansion_matches_brute_force() {
    let spec = four();
    let grid = CubeGrid::new(&spec, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for cubes in shapes(&grid) {
        let inter = (0..cubes.len()).map(|_| interaction(&mut rng, 1e-3)).collect();
        let inst = ClusterInstance::from_lattice(spec, grid, &cubes, inter, 0.3, 0.0, 1.0).unwrap();
        let res = cluster_expand(&inst, 4, 1e-10).unwrap();
        let summed: C64 = res.function.iter().map(|(_, p)| p.constant_term()).sum();
        assert!((summed - res.log_partition).norm() < 1e-15);
        let brute = brute_force_log_partition(&inst, 24).unwrap();
        assert!((brute - summed).norm() < 1e-8, "{} vs {}", brute, summed);
    }
}

#[test]
fn single_cube_boson_closed_form() {
    let spec = four();
    let grid = CubeGrid::new(&spec, 0).unwrap();
    let it = CubeInteraction {
        lambda: 1e-3,
        alpha1: 0.7,
        alpha2: -0.4,
        beta: 0.0,
        gamma: 0.0,
    };
    let inst = ClusterInstance::from_lattice(spec, grid, &shapes(&grid)[0], vec![it], 0.3, 0.0, 1.0).unwrap();
    let cv = inst.boson_cov[(0, 0)];
    let s = 1.0 - 2.0 * it.lambda * it.alpha2 * cv;
    let exact = -0.5 * s.ln() + (it.lambda * it.alpha1).powi(2) * cv / (2.0 * s);
    let res = cluster_expand(&inst, 6, 1e-12).unwrap();
    assert!((res.log_partition.re - exact).abs() < 1e-14);
    assert!(res.log_partition.im.abs() < 1e-15);
}

#[test]
fn vanishing_interaction_gives_zero() {
    let spec = four();
    let grid = CubeGrid::new(&spec, 0).unwrap();
    let zero = CubeInteraction {
        lambda: 0.0,
        alpha1: 1.0,
        alpha2: 1.0,
        beta: 1.0,
        gamma: 1.0,
    };
    let inst = ClusterInstance::from_lattice(spec, grid, &shapes(&grid)[2], vec![zero; 3], 0.3, 0.0, 1.0).unwrap();
    let res = cluster_expand(&inst, 4, 1e-12).unwrap();
    assert!(res.function.is_zero(0.0));
}

#[test]
fn determinant_polymers_resum() {
    let spec = four();
    let grid = CubeGrid::new(&spec, 1).unwrap();
    let all: Vec<usize> = (0..grid.cube_count()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let (e, mass, b) = (0.5, 0.1, 1.0);
    let base = fermion_normalizer(&GaugeField::zeros(spec), e, mass, b).unwrap();
    for _ in 0..3 {
        let a = GaugeField::random(spec, 0.5, &mut rng);
        let (f, _) = det_expand(&a, &grid, &all, e, mass, b).unwrap();
        let direct = fermion_normalizer(&a, e, mass, b).unwrap() - base;
        let summed: C64 = f.iter().map(|(_, p)| p.constant_term()).sum();
        assert!((summed - direct).norm() <= 1e-10 * direct.norm().max(1.0));
    }
}

#[test]
fn determinant_polymers_vanish_off_support() {
    let spec = four();
    let grid = CubeGrid::new(&spec, 1).unwrap();
    let all: Vec<usize> = (0..grid.cube_count()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let full = GaugeField::random(spec, 0.5, &mut rng);
    let a = blockrg::expansion::restrict_to_cubes(&full, &grid, &[5]);
    let (f, _) = det_expand(&a, &grid, &all, 0.5, 0.1, 1.0).unwrap();
    for (cubes, p) in f.iter() {
        let v = p.constant_term().norm();
        if cubes.as_slice() == [5] {
            assert!(v > 1e-6);
        } else {
            assert!(v < 1e-12, "{cubes:?}: {v}");
        }
    }
}

fn random_poly(rng: &mut impl Rng, n: usize, degree: usize, count: usize) -> GrassmannPoly {
    GrassmannPoly::from_terms(
        n,
        (0..count).map(|_| {
            let mut mono: Vec<usize> = Vec::new();
            while mono.len() < degree {
                let g = rng.gen_range(0..n);
                if !mono.contains(&g) {
                    mono.push(g);
                }
            }
            (mono, c(rng.gen_range(-1.0..1.0)))
        }),
    )
}

fn random_function(rng: &mut impl Rng, grid: CubeGrid, spec: TorusSpec, n: usize, degree: usize) -> PolymerFunction {
    let mut f = PolymerFunction::new(grid, spec, n);
    for cube in 0..grid.cube_count() {
        f.insert(&[cube], random_poly(rng, n, degree, 3)).unwrap();
        let nb = grid.neighbors(cube)[0];
        f.insert(&[cube, nb], random_poly(rng, n, degree, 2)).unwrap();
    }
    f
}

#[test]
fn reblocking_is_linear_and_scales_by_degree() {
    let spec = four();
    let grid = CubeGrid::new(&spec, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let n = 6;
    let f = random_function(&mut rng, grid, spec, n, 2);
    let g = random_function(&mut rng, grid, spec, n, 4);
    let lhs = reblock_scale(&f.scale(c(2.5)).add(&g).unwrap()).unwrap();
    let rhs = reblock_scale(&f).unwrap().scale(c(2.5)).add(&reblock_scale(&g).unwrap()).unwrap();
    assert!(lhs.add(&rhs.scale(c(-1.0))).unwrap().is_zero(1e-13));

    // every image is the coarse shadow of some preimage
    let lf = reblock_scale(&f).unwrap();
    assert_eq!(lf.grid, grid.scaled_down().unwrap());
    // quartic monomials pick up L^{-4}; totals of constants are preserved
    let q = reblock_scale(&g).unwrap();
    let lt = g.total().scale(c(2f64.powi(-4)));
    assert!(q.total().sub(&lt).unwrap().h_norm(1.0) < 1e-13);
    let mut k = PolymerFunction::new(grid, spec, 0);
    for cube in 0..grid.cube_count() {
        k.insert(&[cube], GrassmannPoly::constant(0, c(1.0))).unwrap();
    }
    let lk = reblock_scale(&k).unwrap();
    assert_eq!(lk.len(), lk.grid.cube_count());
    for (_, p) in lk.iter() {
        assert!((p.constant_term() - c(8.0)).norm() < 1e-14);
    }
    let growth = NormGrowth::measure(&k, &lk, 1.0);
    assert!((growth.factor - 8.0).abs() < 1e-12);
}

#[test]
fn relevant_parts_are_recovered_and_projected_out() {
    let spec = four();
    let grid = CubeGrid::new(&spec, 1).unwrap();
    let n = SPIN_DIM * spec.site_count();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let w = spec.point_weight();
    let mut f = PolymerFunction::new(grid, spec, n);
    let mut expected = Vec::new();
    for cube in [0usize, 3] {
        let eps = rng.gen_range(-1.0..1.0);
        let m = rng.gen_range(-1.0..1.0);
        let sites: Vec<usize> = (0..spec.site_count())
            .filter(|&x| grid.cube_of_site(spec.site(x)) == cube)
            .collect();
        let vol = sites.len() as f64 * w;
        let mass_terms = sites.iter().flat_map(|&x| {
            (0..SPIN_DIM).map(move |s| (vec![x * SPIN_DIM + s, n + x * SPIN_DIM + s], c(-m * w)))
        });
        let quartic = random_poly(&mut rng, n, 4, 5);
        let p = GrassmannPoly::from_terms(n, mass_terms)
            .add(&GrassmannPoly::constant(n, c(-eps * vol)))
            .unwrap()
            .add(&quartic)
            .unwrap();
        f.insert(&[cube], p).unwrap();
        expected.push((cube, eps, m, quartic));
    }
    let r = extract_relevant(&f).unwrap();
    for (cube, eps, m, quartic) in expected {
        let (_, got_eps) = r.energy.iter().find(|(k, _)| k == &vec![cube]).unwrap();
        let (_, got_m) = r.mass.iter().find(|(k, _)| k == &vec![cube]).unwrap();
        assert!((got_eps - eps).abs() < 1e-14);
        assert!((got_m - m).abs() < 1e-14);
        let rest = r.remainder.get(&[cube]).unwrap();
        assert!(rest.sub(&quartic).unwrap().h_norm(1.0) < 1e-13);
    }
    let again = extract_relevant(&r.remainder).unwrap();
    assert!(again.energy.iter().all(|(_, v)| v.abs() < 1e-14));
    assert!(again.mass.iter().all(|(_, v)| v.abs() < 1e-14));
    let agg = aggregate_energy(&f, &r.energy);
    assert_eq!(agg.len(), grid.cube_count());
    assert_eq!(agg[1], 0.0);
}

#[test]
fn mean_interaction_matches_quadrature() {
    use blockrg::expansion::mean_v0;
    use blockrg::linalg::{gauss_hermite, RMat, RVec};
    let spec = TorusSpec::unit(2, 1).unwrap();
    let grid = CubeGrid::new(&spec, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let (e, b) = (0.7, 1.0);
    let a = GaugeField::random(spec, 0.5, &mut rng);
    let v = RVec::from_fn(spec.bond_count(), |_, _| rng.gen_range(-1.0..1.0));
    let sigma = 0.8;
    let cov: RMat = &v * v.transpose() * (sigma * sigma);
    let mean = mean_v0(&a, &cov, e, b, &grid).unwrap();
    let (x, w) = gauss_hermite(40);
    let mut quad = CMat::zeros(mean.matrix.nrows(), mean.matrix.ncols());
    for (xi, wi) in x.iter().zip(&w) {
        let z = GaugeField::from_values(spec, (&v * (sigma * xi)).iter().copied().collect()).unwrap();
        quad += build_v0(&a, &z, e, b, &grid).unwrap().matrix * c(*wi);
    }
    let gap = blockrg::linalg::max_abs(&(&mean.matrix - &quad));
    assert!(gap < 1e-12, "{gap}");
}
