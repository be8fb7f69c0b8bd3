use num_complex::Complex64;

use super::{CMat4, DiracError, GammaSet};
use crate::dedonder::interior_report;
use crate::fields::{check_grid, GridField, GridSpec, Norms, ResidualReport};

type C64 = Complex64;

/// `Ψ: 𝓜 → ℂ⁴` sampled on a 4-D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    pub components: [GridField; 4],
}

impl SpinorField {
    pub fn new(components: [GridField; 4]) -> Result<Self, DiracError> {
        let spec = &components[0].spec;
        if spec.dim() != 4 {
            return Err(DiracError::DimensionMismatch { found: spec.dim() });
        }
        if components.iter().any(|c| c.spec != *spec) {
            return Err(DiracError::SpecMismatch);
        }
        Ok(SpinorField { components })
    }

    pub fn zeros(spec: &GridSpec) -> Result<Self, DiracError> {
        Self::new([0, 1, 2, 3].map(|i| GridField::zeros(spec, format!("psi{i}"))))
    }

    pub fn from_fn(spec: &GridSpec, f: impl Fn(&[f64]) -> [C64; 4] + Sync) -> Result<Self, DiracError> {
        Self::new([0, 1, 2, 3].map(|i| GridField::from_fn(spec, format!("psi{i}"), |x| f(x)[i])))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.components[0].spec
    }
}

#[derive(Clone, Debug)]
pub struct SpinorResidual {
    pub components: [ResidualReport; 4],
}

impl SpinorResidual {
    /// Pointwise `|r|` is the Euclidean norm over the four components.
    pub fn norms(&self) -> Norms {
        let n = self.components[0].field.values.len();
        let mut max = 0.0f64;
        for k in 0..n {
            let sq: f64 = self.components.iter().map(|c| c.field.values[k].norm_sqr()).sum();
            max = max.max(sq.sqrt());
        }
        let l2 = self.components.iter().map(|c| c.l2 * c.l2).sum::<f64>().sqrt();
        Norms { max, l2 }
    }

    pub fn field(&self) -> Result<SpinorField, DiracError> {
        SpinorField::new(self.components.clone().map(|c| c.field))
    }
}

/// `i G_μ D_μ Ψ + c Ψ` on interior nodes, `D_μ` the central difference.
pub fn apply_dirac_grid(psi: &SpinorField, c: C64, gammas: &GammaSet) -> Result<SpinorResidual, DiracError> {
    let spec = psi.spec();
    check_grid(spec)?;
    let g: [CMat4; 4] = gammas.to_c64();
    let inv2h: Vec<f64> = (0..4).map(|a| 0.5 / spec.spacing(a)).collect();
    let comps = [0, 1, 2, 3].map(|i| {
        interior_report(spec, &format!("dirac[{i}]"), |k, idx| {
            let mut acc = c * psi.components[i].values[k];
            for mu in 0..4 {
                let kp = spec.neighbor(k, idx, mu, true);
                let km = spec.neighbor(k, idx, mu, false);
                for (j, comp) in psi.components.iter().enumerate() {
                    let gij = g[mu][i][j];
                    if gij != C64::new(0.0, 0.0) {
                        acc += C64::new(0.0, 1.0) * gij * (comp.values[kp] - comp.values[km]) * inv2h[mu];
                    }
                }
            }
            acc
        })
    });
    Ok(SpinorResidual { components: comps })
}

/// `i G_μ ∂_μ Ψ − m Ψ` on interior nodes.
pub fn dirac_residual(psi: &SpinorField, m: f64, gammas: &GammaSet) -> Result<SpinorResidual, DiracError> {
    apply_dirac_grid(psi, C64::new(-m, 0.0), gammas)
}
