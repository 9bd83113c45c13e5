//! Gauge fields on bonds, field strengths on plaquettes, site scalars and
//! spinor test vectors, with the scale maps between lattices.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::halfpow::HalfPow;
use crate::lattice::{line_sum, Bond, OrientedBond, Plaquette, Site, TorusSpec};
use crate::{Error, Result, C64, SPIN_DIM};

/// Snapshot format tag written into JSON exports.
pub const FIELD_FORMAT: &str = "blockrg-field-v1";

/// Real abelian gauge field, one value per positively oriented bond.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeField {
    pub spec: TorusSpec,
    pub values: Vec<f64>,
}

/// `dA` on plaquettes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldStrength {
    pub spec: TorusSpec,
    pub values: Vec<f64>,
}

/// Real function on sites, e.g. a gauge parameter `ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub spec: TorusSpec,
    pub values: Vec<f64>,
}

/// Two-component spinor on sites, indexed `site * SPIN_DIM + spin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinorField {
    pub spec: TorusSpec,
    pub values: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct Snapshot<T> {
    format: String,
    #[serde(flatten)]
    field: T,
}

fn check_len(spec: &TorusSpec, got: usize, want: usize, what: &str) -> Result<()> {
    if got != want {
        return Err(Error::SpecMismatch(format!(
            "{what} has {got} values, torus of side {} needs {want}",
            spec.side()
        )));
    }
    Ok(())
}

impl GaugeField {
    pub fn zeros(spec: TorusSpec) -> Self {
        Self {
            values: vec![0.0; spec.bond_count()],
            spec,
        }
    }

    pub fn from_values(spec: TorusSpec, values: Vec<f64>) -> Result<Self> {
        check_len(&spec, values.len(), spec.bond_count(), "gauge field")?;
        Ok(Self { spec, values })
    }

    /// Independent uniform values in `[-amplitude, amplitude]`.
    pub fn random(spec: TorusSpec, amplitude: f64, rng: &mut impl Rng) -> Self {
        let values = (0..spec.bond_count())
            .map(|_| rng.gen_range(-amplitude..=amplitude))
            .collect();
        Self { spec, values }
    }

    pub fn get(&self, b: Bond) -> f64 {
        self.values[self.spec.bond_index(b)]
    }

    /// Value on an oriented bond: `A(-b) = -A(b)`.
    pub fn oriented(&self, b: OrientedBond) -> f64 {
        b.sign() * self.get(b.bond)
    }

    /// `A(Γ) = ε Σ_{b∈Γ} A(b)`, the lattice line integral.
    pub fn line_integral(&self, path: &[OrientedBond]) -> f64 {
        self.spec.spacing() * line_sum(&self.spec, &self.values, path)
    }

    pub fn field_strength(&self) -> FieldStrength {
        let inv = 1.0 / self.spec.spacing();
        let values = (0..self.spec.plaquette_count())
            .map(|i| {
                let p = self.spec.plaquette(i);
                inv * self
                    .spec
                    .plaquette_boundary(p)
                    .iter()
                    .map(|&b| self.oriented(b))
                    .sum::<f64>()
            })
            .collect();
        FieldStrength {
            spec: self.spec,
            values,
        }
    }

    /// `‖dA‖² = Σ_p ε³ |dA(p)|²`.
    pub fn strength_norm_sq(&self) -> f64 {
        self.field_strength().norm_sq()
    }

    /// `‖A‖² = Σ_b ε³ A(b)²`.
    pub fn norm_sq(&self) -> f64 {
        self.spec.point_weight() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn add(&self, other: &GaugeField) -> Result<GaugeField> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch("adding gauge fields on different tori".into()));
        }
        Ok(Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> GaugeField {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `A + dω`.
    pub fn gauge_transform(&self, omega: &ScalarField) -> Result<GaugeField> {
        self.add(&omega.gradient())
    }

    /// Rows `bond index, value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bond,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{v:e}\n"));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Snapshot {
            format: FIELD_FORMAT.into(),
            field: self,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Snapshot<GaugeField> = serde_json::from_str(text)?;
        if snap.format != FIELD_FORMAT {
            return Err(Error::Config(format!("unknown field format {}", snap.format)));
        }
        Self::from_values(snap.field.spec, snap.field.values)
    }
}

impl FieldStrength {
    pub fn get(&self, p: Plaquette) -> f64 {
        self.values[self.spec.plaquette_index(p)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.spec.point_weight() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

impl ScalarField {
    pub fn zeros(spec: TorusSpec) -> Self {
        Self {
            values: vec![0.0; spec.site_count()],
            spec,
        }
    }

    pub fn from_values(spec: TorusSpec, values: Vec<f64>) -> Result<Self> {
        check_len(&spec, values.len(), spec.site_count(), "scalar field")?;
        Ok(Self { spec, values })
    }

    pub fn random(spec: TorusSpec, amplitude: f64, rng: &mut impl Rng) -> Self {
        let values = (0..spec.site_count())
            .map(|_| rng.gen_range(-amplitude..=amplitude))
            .collect();
        Self { spec, values }
    }

    pub fn at(&self, x: Site) -> f64 {
        self.values[self.spec.site_index(x)]
    }

    /// `dω(x, x+εe_μ) = (ω(x+εe_μ) - ω(x)) / ε`.
    pub fn gradient(&self) -> GaugeField {
        let inv = 1.0 / self.spec.spacing();
        let values = (0..self.spec.bond_count())
            .map(|i| {
                let b = self.spec.bond(i);
                inv * (self.at(self.spec.shift(b.site, b.axis, 1)) - self.at(b.site))
            })
            .collect();
        GaugeField {
            spec: self.spec,
            values,
        }
    }
}

impl SpinorField {
    pub fn zeros(spec: TorusSpec) -> Self {
        Self {
            values: vec![C64::new(0.0, 0.0); SPIN_DIM * spec.site_count()],
            spec,
        }
    }

    pub fn from_values(spec: TorusSpec, values: Vec<C64>) -> Result<Self> {
        check_len(&spec, values.len(), SPIN_DIM * spec.site_count(), "spinor field")?;
        Ok(Self { spec, values })
    }

    pub fn random(spec: TorusSpec, rng: &mut impl Rng) -> Self {
        let values = (0..SPIN_DIM * spec.site_count())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Self { spec, values }
    }
}

/// Factor multiplying gauge fields when lengths are dilated by `L^levels`.
pub fn gauge_scale_factor(base: usize, levels: i32) -> HalfPow {
    HalfPow::new(base as u64, -(levels as i64))
}

/// Factor multiplying fermion fields when lengths are dilated by `L^levels`.
pub fn fermion_scale_factor(base: usize, levels: i32) -> HalfPow {
    HalfPow::integer(base as u64, -(levels as i64))
}

/// `A_{L^levels}(b) = L^{-levels/2} A(b / L^levels)` on the dilated torus.
///
/// `levels = 1` is the rescaling after one block step; `levels = -N` carries
/// a field on the `L^{-N}` lattice to the unit lattice's inverse direction.
pub fn rescale_gauge(a: &GaugeField, levels: i32) -> Result<GaugeField> {
    let spec = a.spec.dilate(levels)?;
    Ok(GaugeField {
        spec,
        values: a.scaled(gauge_scale_factor(a.spec.base, levels).value()).values,
    })
}

/// `Ψ_{L^levels}(x) = L^{-levels} Ψ(x / L^levels)` on the dilated torus.
pub fn rescale_spinor(psi: &SpinorField, levels: i32) -> Result<SpinorField> {
    let spec = psi.spec.dilate(levels)?;
    let f = fermion_scale_factor(psi.spec.base, levels).value();
    Ok(SpinorField {
        spec,
        values: psi.values.iter().map(|v| v * f).collect(),
    })
}
