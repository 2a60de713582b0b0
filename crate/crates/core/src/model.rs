//! Single-patch coupled mosquito/human model: stage-structured vector
//! dynamics (eggs, larvae, adults) with SI transmission in adult females and
//! SIR transmission in a constant human population.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Biological and epidemiological rates. All rates are per day.
///
/// The human birth rate `b_h` doubles as the death rate, which keeps the
/// human population constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Oviposition rate (eggs per female per day).
    pub b: f64,
    /// Egg carrying capacity of a reference surface.
    pub k_e: f64,
    /// Larva carrying capacity of a reference surface.
    pub k_l: f64,
    /// Egg to larva transfer rate.
    pub s: f64,
    /// Larva to adult transfer rate.
    pub s_l: f64,
    /// Egg mortality.
    pub d: f64,
    /// Larva mortality.
    pub d_l: f64,
    /// Adult female mortality.
    pub d_m: f64,
    /// Human birth rate, equal to the human death rate.
    pub b_h: f64,
    /// Vector to human infection rate.
    pub beta_h: f64,
    /// Human to vector infection rate.
    pub beta_m: f64,
    /// Human recovery rate.
    pub gamma_h: f64,
}

impl ModelParams {
    /// Reference values for *Aedes albopictus* and chikungunya with the given
    /// infection rates.
    pub fn reference(beta_h: f64, beta_m: f64) -> Self {
        let k_e = 1000.0;
        ModelParams {
            b: 6.0,
            k_e,
            k_l: k_e / 2.0,
            s: 1.0 / 3.0,
            s_l: 1.0 / 10.0,
            d: 1.0 / 3.0,
            d_l: 1.0 / 3.0,
            d_m: 1.0 / 14.0,
            b_h: 1.0 / (78.0 * 365.0),
            beta_h,
            beta_m,
            gamma_h: 1.0 / 7.0,
        }
    }

    /// Human death rate. Equal to the birth rate.
    #[inline]
    pub fn d_h(&self) -> f64 {
        self.b_h
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("b", self.b),
            ("k_e", self.k_e),
            ("k_l", self.k_l),
            ("s", self.s),
            ("s_l", self.s_l),
            ("d", self.d),
            ("d_l", self.d_l),
            ("d_m", self.d_m),
            ("b_h", self.b_h),
            ("beta_h", self.beta_h),
            ("beta_m", self.beta_m),
            ("gamma_h", self.gamma_h),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and non-negative, got {value}"),
                });
            }
        }
        let positive = [
            ("k_e", self.k_e),
            ("k_l", self.k_l),
            ("d_m", self.d_m),
            ("s + d", self.s + self.d),
            ("s_l + d_l", self.s_l + self.d_l),
        ];
        for (name, value) in positive {
            if value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// Parses a parameter document. Every key is required and unknown keys
    /// are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: ModelParams =
            toml::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidInput(message) => Error::Parse {
                path: path.to_owned(),
                line: 0,
                message,
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("plain struct serializes")
    }

    /// Copy with the infection rates replaced.
    pub fn with_infection_rates(&self, beta_h: f64, beta_m: f64) -> Self {
        ModelParams {
            beta_h,
            beta_m,
            ..*self
        }
    }
}

/// State of one isolated patch. `adults` tracks total adult females; the
/// split into `s_m` and `i_m` follows the same demography.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PatchState {
    pub eggs: f64,
    pub larvae: f64,
    pub adults: f64,
    pub s_m: f64,
    pub i_m: f64,
    pub s_h: f64,
    pub i_h: f64,
    pub r_h: f64,
}

impl PatchState {
    pub fn humans(&self) -> f64 {
        self.s_h + self.i_h + self.r_h
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.eggs, self.larvae, self.adults, self.s_m, self.i_m, self.s_h, self.i_h, self.r_h,
        ]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        PatchState {
            eggs: v[0],
            larvae: v[1],
            adults: v[2],
            s_m: v[3],
            i_m: v[4],
            s_h: v[5],
            i_h: v[6],
            r_h: v[7],
        }
    }
}

/// Stationary aquatic and adult mosquito counts of the vector model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VectorEquilibrium {
    pub eggs: f64,
    pub larvae: f64,
    pub adults: f64,
}

impl VectorEquilibrium {
    pub const EXTINCT: VectorEquilibrium = VectorEquilibrium {
        eggs: 0.0,
        larvae: 0.0,
        adults: 0.0,
    };
}

/// Mosquito demographic threshold: the vector population persists iff r > 1.
pub fn mosquito_threshold_r(params: &ModelParams) -> Result<f64> {
    let r = (params.b / (params.s + params.d))
        * (params.s / (params.s_l + params.d_l))
        * (params.s_l / params.d_m);
    if !r.is_finite() {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: "threshold is not finite; a rate denominator is zero".into(),
        });
    }
    Ok(r)
}

/// Basic reproduction number of the isolated patch with `n_h` humans, using
/// the capacities stored in `params`.
///
/// Only a per-patch threshold is available; there is no network-level R0.
pub fn basic_reproduction_number(params: &ModelParams, n_h: f64) -> Result<f64> {
    let r = mosquito_threshold_r(params)?;
    if r <= 1.0 {
        return Err(Error::SubcriticalVector { r });
    }
    if !(n_h > 0.0) {
        return Err(Error::EmptyPopulation(n_h));
    }
    let p = params;
    let transmission = p.beta_m * p.beta_h / (p.d_m * (p.gamma_h + p.b_h));
    let vector = (1.0 - 1.0 / r) * p.s * p.k_e * p.s_l * p.k_l
        / (p.d_m * (p.s * p.k_e + (p.s_l + p.d_l) * p.k_l));
    Ok(transmission / n_h * vector)
}

/// Positive equilibrium of the (E, L, A) subsystem for the given capacities.
pub fn vector_endemic_equilibrium(
    params: &ModelParams,
    k_e: f64,
    k_l: f64,
) -> Result<VectorEquilibrium> {
    if !(k_e > 0.0) || !(k_l > 0.0) {
        return Err(Error::InvalidParameter {
            name: "capacity",
            reason: format!("capacities must be positive, got k_e = {k_e}, k_l = {k_l}"),
        });
    }
    let r = mosquito_threshold_r(params)?;
    if r <= 1.0 {
        return Err(Error::SubcriticalVector { r });
    }
    let p = params;
    let gamma_l = 1.0 + (p.s_l + p.d_l) * k_l / (p.s * k_e);
    let larvae = (1.0 - 1.0 / r) * k_l / gamma_l;
    let adults = p.s_l * larvae / p.d_m;
    // dL/dt = 0 solved for E.
    let eggs = (p.s_l + p.d_l) * larvae / (p.s * (1.0 - larvae / k_l));
    Ok(VectorEquilibrium {
        eggs,
        larvae,
        adults,
    })
}

/// Endemic equilibrium, or the extinct state when a node has no breeding
/// habitat (zero capacity) or the vector is subcritical.
pub fn vector_equilibrium_or_extinct(
    params: &ModelParams,
    k_e: f64,
    k_l: f64,
) -> VectorEquilibrium {
    vector_endemic_equilibrium(params, k_e, k_l).unwrap_or(VectorEquilibrium::EXTINCT)
}

/// Right-hand side of the (E, L, A) subsystem.
pub fn vector_rhs(params: &ModelParams, k_e: f64, k_l: f64, v: &VectorEquilibrium) -> [f64; 3] {
    let p = params;
    [
        p.b * v.adults * (1.0 - v.eggs / k_e) - (p.s + p.d) * v.eggs,
        p.s * v.eggs * (1.0 - v.larvae / k_l) - (p.s_l + p.d_l) * v.larvae,
        p.s_l * v.larvae - p.d_m * v.adults,
    ]
}

/// Time derivative of the isolated patch model. The model is autonomous; `t`
/// is accepted for symmetry with the network engine.
pub fn single_patch_rhs(state: &PatchState, params: &ModelParams, _t: f64) -> Result<PatchState> {
    let n_h = state.humans();
    if !(n_h > 0.0) {
        return Err(Error::EmptyPopulation(n_h));
    }
    let p = params;
    let d_h = p.d_h();
    let vector_infection = p.beta_m * state.i_h / n_h * state.s_m;
    let human_infection = p.beta_h * state.i_m / n_h * state.s_h;
    Ok(PatchState {
        eggs: p.b * state.adults * (1.0 - state.eggs / p.k_e) - (p.s + p.d) * state.eggs,
        larvae: p.s * state.eggs * (1.0 - state.larvae / p.k_l) - (p.s_l + p.d_l) * state.larvae,
        adults: p.s_l * state.larvae - p.d_m * state.adults,
        s_m: p.s_l * state.larvae - p.d_m * state.s_m - vector_infection,
        i_m: vector_infection - p.d_m * state.i_m,
        s_h: -human_infection + p.b_h * n_h - d_h * state.s_h,
        i_h: human_infection - p.gamma_h * state.i_h - d_h * state.i_h,
        r_h: p.gamma_h * state.i_h - d_h * state.r_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table() -> ModelParams {
        ModelParams::reference(0.2, 0.2)
    }

    #[test]
    fn threshold_of_reference_parameters() {
        let r = mosquito_threshold_r(&table()).unwrap();
        assert!((r - 126.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_without_oviposition_is_zero() {
        let p = ModelParams { b: 0.0, ..table() };
        assert_eq!(mosquito_threshold_r(&p).unwrap(), 0.0);
    }

    #[test]
    fn threshold_boundary_is_one() {
        // b/(s+d) = 1, s/(s_l+d_l) = 1, s_l/d_m = 1
        let p = ModelParams {
            b: 1.0,
            s: 0.5,
            d: 0.5,
            s_l: 0.25,
            d_l: 0.25,
            d_m: 0.25,
            ..table()
        };
        assert_relative_eq!(mosquito_threshold_r(&p).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn threshold_rejects_zero_denominator() {
        let p = ModelParams {
            s: 0.0,
            d: 0.0,
            ..table()
        };
        assert!(mosquito_threshold_r(&p).is_err());
    }

    #[test]
    fn r0_vanishes_without_vector_infection() {
        let p = table().with_infection_rates(0.2, 0.0);
        assert_eq!(basic_reproduction_number(&p, 1000.0).unwrap(), 0.0);
    }

    #[test]
    fn r0_rejects_subcritical_vector() {
        let p = ModelParams { b: 0.1, ..table() };
        assert!(matches!(
            basic_reproduction_number(&p, 1000.0),
            Err(Error::SubcriticalVector { .. })
        ));
        assert!(basic_reproduction_number(&table(), 0.0).is_err());
    }

    #[test]
    fn r0_tends_to_zero_as_threshold_approaches_one() {
        // Scale b so that r = 1 + eps.
        let base = table();
        let r = mosquito_threshold_r(&base).unwrap();
        let mut last = f64::INFINITY;
        for eps in [1e-1, 1e-3, 1e-6] {
            let p = ModelParams {
                b: base.b * (1.0 + eps) / r,
                ..base
            };
            let r0 = basic_reproduction_number(&p, 1000.0).unwrap();
            assert!(r0 < last);
            last = r0;
        }
        // R0 is proportional to 1 - 1/r, so it vanishes linearly in eps.
        assert!(last < 2e-6);
    }

    #[test]
    fn r0_regression_fixture() {
        // Exact rational evaluation: 21018452 / 14096115.
        let r0 = basic_reproduction_number(&table(), 1000.0).unwrap();
        assert_relative_eq!(r0, 21018452.0 / 14096115.0, max_relative = 1e-13);
        assert_relative_eq!(r0, 1.491_081_195_066_867_7, max_relative = 1e-13);
    }

    #[test]
    fn r0_monotone_in_rates() {
        let p = table();
        let f = |q: &ModelParams| basic_reproduction_number(q, 1000.0).unwrap();
        let h = 1e-6;
        assert!(f(&p.with_infection_rates(p.beta_h + h, p.beta_m)) > f(&p));
        assert!(f(&p.with_infection_rates(p.beta_h, p.beta_m + h)) > f(&p));
        assert!(f(&ModelParams { d_m: p.d_m + h, ..p }) < f(&p));
    }

    #[test]
    fn r0_matches_adult_equilibrium_identity() {
        // R0 = beta_m beta_h A* / (d_m (gamma_h + b_h) N_H)
        let p = table();
        let eq = vector_endemic_equilibrium(&p, p.k_e, p.k_l).unwrap();
        let expected = p.beta_m * p.beta_h * eq.adults / (p.d_m * (p.gamma_h + p.b_h) * 1000.0);
        assert_relative_eq!(
            basic_reproduction_number(&p, 1000.0).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn equilibrium_reference_values() {
        let p = table();
        let eq = vector_endemic_equilibrium(&p, 1000.0, 500.0).unwrap();
        assert!((eq.larvae - 271.75).abs() < 0.05, "{eq:?}");
        assert!((eq.adults - 380.45).abs() < 0.05, "{eq:?}");
        assert!((eq.eggs - 773.9).abs() < 0.1, "{eq:?}");
        let res = vector_rhs(&p, 1000.0, 500.0, &eq);
        for r in res {
            assert!(r.abs() <= 1e-10 * eq.eggs, "residual {res:?}");
        }
    }

    #[test]
    fn equilibrium_is_homogeneous_in_capacities() {
        let p = table();
        let base = vector_endemic_equilibrium(&p, 1000.0, 500.0).unwrap();
        for c in [0.01, 0.5, 3.0] {
            let scaled = vector_endemic_equilibrium(&p, 1000.0 * c, 500.0 * c).unwrap();
            assert_relative_eq!(scaled.eggs, c * base.eggs, max_relative = 1e-12);
            assert_relative_eq!(scaled.larvae, c * base.larvae, max_relative = 1e-12);
            assert_relative_eq!(scaled.adults, c * base.adults, max_relative = 1e-12);
        }
    }

    #[test]
    fn equilibrium_requires_persistent_vector() {
        let p = ModelParams { b: 0.5, ..table() };
        assert!(mosquito_threshold_r(&p).unwrap() < 1.0);
        assert!(vector_endemic_equilibrium(&p, 1000.0, 500.0).is_err());
        assert_eq!(
            vector_equilibrium_or_extinct(&p, 1000.0, 500.0),
            VectorEquilibrium::EXTINCT
        );
    }

    #[test]
    fn disease_free_state_is_stationary_in_disease_compartments() {
        let p = table();
        let eq = vector_endemic_equilibrium(&p, p.k_e, p.k_l).unwrap();
        let state = PatchState {
            eggs: eq.eggs,
            larvae: eq.larvae,
            adults: eq.adults,
            s_m: eq.adults,
            i_m: 0.0,
            s_h: 1000.0,
            i_h: 0.0,
            r_h: 0.0,
        };
        let dy = single_patch_rhs(&state, &p, 0.0).unwrap();
        assert_eq!(dy.i_m, 0.0);
        assert_eq!(dy.i_h, 0.0);
        assert_eq!(dy.r_h, 0.0);
        assert!(dy.s_h.abs() < 1e-12);
    }

    #[test]
    fn empty_population_rejected() {
        let state = PatchState::default();
        assert!(single_patch_rhs(&state, &table(), 0.0).is_err());
    }

    #[test]
    fn parameter_document_is_strict() {
        let p = table();
        let text = p.to_toml_string();
        assert_eq!(ModelParams::from_toml_str(&text).unwrap(), p);

        let extra = format!("{text}\nbetaH = 0.1\n");
        assert!(ModelParams::from_toml_str(&extra).is_err());

        let missing: String = text
            .lines()
            .filter(|l| !l.starts_with("gamma_h"))
            .collect::<Vec<_>>()
            .join("\n");
        assert!(ModelParams::from_toml_str(&missing).is_err());

        let negative = text.replace("b = 6.0", "b = -6.0");
        assert!(ModelParams::from_toml_str(&negative).is_err());
    }
}
