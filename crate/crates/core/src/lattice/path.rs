use super::torus::{Bond, OrientedBond, Site, TorusSpec};

/// Axis-ordered staircase from `from` to `to`: all of axis 1, then axis 2,
/// then axis 3, each leg along the shorter winding (forward on ties).
pub fn staircase_path(spec: &TorusSpec, from: Site, to: Site) -> Vec<OrientedBond> {
    let s = spec.side() as i64;
    let mut path = Vec::new();
    let mut at = from;
    for axis in 0..3 {
        let d = (to[axis] as i64 - at[axis] as i64).rem_euclid(s);
        let (steps, forward) = if d <= s - d { (d, true) } else { (s - d, false) };
        for _ in 0..steps {
            if forward {
                path.push(OrientedBond {
                    bond: Bond { site: at, axis },
                    forward: true,
                });
                at = spec.shift(at, axis, 1);
            } else {
                let prev = spec.shift(at, axis, -1);
                path.push(OrientedBond {
                    bond: Bond { site: prev, axis },
                    forward: false,
                });
                at = prev;
            }
        }
    }
    debug_assert_eq!(at, to);
    path
}

/// `steps` forward bonds along `axis` starting at `x`.
pub fn straight_path(spec: &TorusSpec, x: Site, axis: usize, steps: usize) -> Vec<OrientedBond> {
    (0..steps)
        .map(|t| OrientedBond {
            bond: Bond {
                site: spec.shift(x, axis, t as i64),
                axis,
            },
            forward: true,
        })
        .collect()
}

/// `Σ_{b∈Γ} A(b)` for a field given by its values on positively oriented bonds.
pub fn line_sum(spec: &TorusSpec, values: &[f64], path: &[OrientedBond]) -> f64 {
    path.iter()
        .map(|ob| ob.sign() * values[spec.bond_index(ob.bond)])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_and_short_paths() {
        let spec = TorusSpec::unit(2, 1).unwrap();
        assert!(staircase_path(&spec, [1, 0, 1], [1, 0, 1]).is_empty());
        let p = staircase_path(&spec, [0, 0, 0], [1, 1, 0]);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].bond.axis, 0);
        assert_eq!(p[1].bond.axis, 1);
        assert!(p.iter().all(|b| b.forward));
    }

    #[test]
    fn backward_winding_when_shorter() {
        let spec = TorusSpec::unit(5, 1).unwrap();
        let p = staircase_path(&spec, [0, 0, 0], [4, 0, 0]);
        assert_eq!(p.len(), 1);
        assert!(!p[0].forward);
        assert_eq!(p[0].bond.site, [4, 0, 0]);
    }

    #[test]
    fn pure_gauge_telescopes() {
        let spec = TorusSpec::unit(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let omega: Vec<f64> = (0..spec.site_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = vec![0.0; spec.bond_count()];
        for bi in 0..spec.bond_count() {
            let b = spec.bond(bi);
            let up = spec.shift(b.site, b.axis, 1);
            a[bi] = omega[spec.site_index(up)] - omega[spec.site_index(b.site)];
        }
        for _ in 0..50 {
            let x = spec.site(rng.gen_range(0..spec.site_count()));
            let y = spec.site(rng.gen_range(0..spec.site_count()));
            let s = line_sum(&spec, &a, &staircase_path(&spec, x, y));
            let expect = omega[spec.site_index(y)] - omega[spec.site_index(x)];
            assert!((s - expect).abs() < 1e-13);
        }
    }
}
