use super::polyfn::PolymerFunction;
use crate::fields::GaugeField;
use crate::grassmann::GrassmannPoly;
use crate::lattice::CubeGrid;
use crate::minimizers::fermion_normalizer;
use crate::{Error, Result, C64};

/// `A` on bonds whose base site lies in one of `cubes`, zero elsewhere.
pub fn restrict_to_cubes(a: &GaugeField, grid: &CubeGrid, cubes: &[usize]) -> GaugeField {
    let mut out = GaugeField::zeros(a.spec);
    for i in 0..a.spec.bond_count() {
        if cubes.contains(&grid.cube_of_site(a.spec.bond(i).site)) {
            out.values[i] = a.values[i];
        }
    }
    out
}

/// Möbius localization of `log(𝔷(A)/𝔷(0))` over subsets of `support`:
/// `E^det(X) = Σ_{Y⊆X} (−1)^{|X∖Y|} log(𝔷(A|_Y)/𝔷(0))`.
///
/// Returns the polymer function (constants) and `log(𝔷(A|_support)/𝔷(0))`.
pub fn det_expand(
    a: &GaugeField,
    grid: &CubeGrid,
    support: &[usize],
    e: f64,
    mass: f64,
    b: f64,
) -> Result<(PolymerFunction, C64)> {
    let n = support.len();
    if n > 16 {
        return Err(Error::InvalidSpec(format!("{n} cubes is too many for subset enumeration")));
    }
    let base = fermion_normalizer(&GaugeField::zeros(a.spec), e, mass, b)?;
    let subset = |mask: usize| -> Vec<usize> { (0..n).filter(|i| mask >> i & 1 == 1).map(|i| support[i]).collect() };
    let mut f = vec![C64::new(0.0, 0.0); 1 << n];
    for (mask, slot) in f.iter_mut().enumerate().skip(1) {
        let ay = restrict_to_cubes(a, grid, &subset(mask));
        *slot = fermion_normalizer(&ay, e, mass, b)? - base;
    }
    let mut function = PolymerFunction::new(*grid, a.spec, 0);
    for x in 1usize..(1 << n) {
        let mut acc = C64::new(0.0, 0.0);
        // iterate over subsets y of x
        let mut y = x;
        loop {
            let sign = if (x.count_ones() - y.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
            acc += f[y] * sign;
            if y == 0 {
                break;
            }
            y = (y - 1) & x;
        }
        function.insert(&subset(x), GrassmannPoly::constant(0, acc))?;
    }
    Ok((function, f[(1 << n) - 1]))
}
