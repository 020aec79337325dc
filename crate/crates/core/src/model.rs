//! Physical inputs, the effective single-mode couplings derived from them, and
//! the scalar formulas (Bogoliubov frequency, thermal occupation, validity
//! checks) shared by the rest of the crate.
//!
//! Every frequency is an angular frequency in rad/s.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Reduced Planck constant, J s (exact in the 2019 SI).
pub const HBAR: f64 = 6.626_070_15e-34 / (2.0 * PI);
/// Boltzmann constant, J/K (exact in the 2019 SI).
pub const K_B: f64 = 1.380_649e-23;

/// Relative bound above which the lattice-depth condition `U0 n <= 10 wR` fails.
pub const LATTICE_DEPTH_LIMIT_RECOILS: f64 = 10.0;
/// Fraction of the atom number that incoherent excitations may reach before
/// the Bogoliubov expansion is flagged.
pub const BOGOLIUBOV_FRACTION_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },
}

fn domain(field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::Domain {
        field,
        reason: reason.into(),
    }
}

/// Microscopic inputs of one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of condensate atoms.
    pub n_atoms: u64,
    /// Vacuum Rabi frequency.
    pub g0: f64,
    /// Atom-pump detuning, pump minus atomic transition frequency.
    pub delta_a: f64,
    /// Recoil frequency.
    pub omega_r: f64,
    /// s-wave scattering frequency of the atomic collisions.
    pub omega_sw: f64,
    /// Cavity amplitude decay rate.
    pub kappa: f64,
    /// Damping rate of the Bogoliubov mode.
    pub gamma: f64,
    /// Stark-shifted cavity detuning.
    pub delta_c: f64,
    /// Cavity drive rate.
    pub eta: f64,
    /// Condensate temperature in kelvin.
    pub temperature: f64,
    /// Selects `g = U0/2` (on) or `g = 0` (off).
    pub ck_enabled: bool,
}

impl SystemParams {
    /// Rb-87 in a 187 um cavity at 780 nm: N = 1e5, g0 = 2pi x 14.1 MHz,
    /// kappa = 2pi x 1.3 MHz, wR = 2.37e4 rad/s, gamma = 1e-3 kappa,
    /// T = 0.1 uK, with `omega_sw = wR`, `eta = kappa`, `delta_c = 0` and the
    /// cross-Kerr term switched on.
    pub fn experimental() -> Self {
        let kappa = 2.0 * PI * 1.3e6;
        let omega_r = 2.37e4;
        Self {
            n_atoms: 100_000,
            g0: 2.0 * PI * 14.1e6,
            // cavity resonance 2.41494e15 rad/s minus D2 line 2.41419e15 rad/s
            delta_a: 7.5e11,
            omega_r,
            omega_sw: omega_r,
            kappa,
            gamma: 1e-3 * kappa,
            delta_c: 0.0,
            eta: kappa,
            temperature: 1e-7,
            ck_enabled: true,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = [
            ("g0", self.g0),
            ("delta_a", self.delta_a),
            ("omega_R", self.omega_r),
            ("omega_sw", self.omega_sw),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("delta_c", self.delta_c),
            ("eta", self.eta),
            ("T", self.temperature),
        ];
        for (field, value) in finite {
            if !value.is_finite() {
                return Err(domain(field, format!("must be finite, got {value}")));
            }
        }
        if self.n_atoms == 0 {
            return Err(domain("N", "atom number must be at least 1"));
        }
        if self.delta_a == 0.0 {
            return Err(domain("delta_a", "atom-pump detuning must be nonzero"));
        }
        if self.kappa <= 0.0 {
            return Err(domain("kappa", format!("must be positive, got {}", self.kappa)));
        }
        if self.omega_r <= 0.0 {
            return Err(domain("omega_R", format!("must be positive, got {}", self.omega_r)));
        }
        let nonneg = [
            ("omega_sw", self.omega_sw),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("T", self.temperature),
        ];
        for (field, value) in nonneg {
            if value < 0.0 {
                return Err(domain(field, format!("must be nonnegative, got {value}")));
            }
        }
        Ok(())
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::experimental()
    }
}

/// Coefficients of the effective single-mode Hamiltonian plus the damping,
/// drive and temperature needed downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    /// Lattice depth per photon, `g0^2 / delta_a`.
    pub u0: f64,
    /// Bare Bogoliubov frequency, `4 wR + omega_sw`.
    pub omega_c: f64,
    /// Optomechanical coupling, `sqrt(2N)/4 * U0`.
    pub zeta: f64,
    /// Cross-Kerr coupling, `U0/2` when enabled.
    pub g: f64,
    pub delta_c: f64,
    pub eta: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub omega_sw: f64,
    pub omega_r: f64,
    pub temperature: f64,
    pub n_atoms: u64,
    pub ck_enabled: bool,
}

impl DerivedParams {
    /// `Omega^(+) = Omega_c + omega_sw/2 + g n`.
    pub fn omega_plus(&self, n_photon: f64) -> f64 {
        self.omega_c + 0.5 * self.omega_sw + self.g * n_photon
    }

    /// `Omega^(-) = Omega_c - omega_sw/2 + g n`.
    pub fn omega_minus(&self, n_photon: f64) -> f64 {
        self.omega_c - 0.5 * self.omega_sw + self.g * n_photon
    }

    /// Bogoliubov frequency without the cross-Kerr shift.
    pub fn bare_bogoliubov_frequency(&self) -> f64 {
        let lo = self.omega_c - 0.5 * self.omega_sw;
        let hi = self.omega_c + 0.5 * self.omega_sw;
        (lo * hi).sqrt()
    }
}

pub fn derive_params(p: &SystemParams) -> Result<DerivedParams, ModelError> {
    p.validate()?;
    let u0 = p.g0 * p.g0 / p.delta_a;
    let n = p.n_atoms as f64;
    Ok(DerivedParams {
        u0,
        omega_c: 4.0 * p.omega_r + p.omega_sw,
        zeta: (2.0 * n).sqrt() / 4.0 * u0,
        g: if p.ck_enabled { 0.5 * u0 } else { 0.0 },
        delta_c: p.delta_c,
        eta: p.eta,
        kappa: p.kappa,
        gamma: p.gamma,
        omega_sw: p.omega_sw,
        omega_r: p.omega_r,
        temperature: p.temperature,
        n_atoms: p.n_atoms,
        ck_enabled: p.ck_enabled,
    })
}

/// Drive rate `sqrt(2 P kappa / (hbar omega_p))` of a pump of power `power` (W).
pub fn pump_rate_from_power(power: f64, kappa: f64, omega_p: f64) -> Result<f64, ModelError> {
    if !(power >= 0.0) || !power.is_finite() {
        return Err(domain("P", format!("power must be finite and nonnegative, got {power}")));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(domain("kappa", format!("must be positive, got {kappa}")));
    }
    if !(omega_p > 0.0) || !omega_p.is_finite() {
        return Err(domain("omega_p", format!("must be positive, got {omega_p}")));
    }
    Ok((2.0 * power * kappa / (HBAR * omega_p)).sqrt())
}

/// Effective Bogoliubov frequency `sqrt(Omega^(+) Omega^(-))` at photon
/// number `n_photon`. Equals [`DerivedParams::bare_bogoliubov_frequency`]
/// when `g = 0`.
pub fn bogoliubov_frequency(d: &DerivedParams, n_photon: f64) -> f64 {
    (d.omega_plus(n_photon) * d.omega_minus(n_photon)).sqrt()
}

/// Bose-Einstein occupation `1 / (exp(hbar w / kB T) - 1)`; zero at `T = 0`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64, ModelError> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(domain("omega", format!("must be positive, got {omega}")));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(domain("T", format!("must be nonnegative, got {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega / (K_B * temperature);
    Ok(1.0 / x.exp_m1())
}

/// Advisory checks on the approximations behind the single-mode model. They
/// never abort a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ValidityFlags {
    /// `U0 n <= 10 wR`.
    pub lattice_depth_ok: bool,
    /// Incoherent excitations at most 1% of N; `None` when no covariance was
    /// computed.
    pub bogoliubov_ok: Option<bool>,
}

pub fn validity_flags(d: &DerivedParams, n_photon: f64, n_incoherent: Option<f64>) -> ValidityFlags {
    ValidityFlags {
        lattice_depth_ok: d.u0 * n_photon <= LATTICE_DEPTH_LIMIT_RECOILS * d.omega_r,
        bogoliubov_ok: n_incoherent
            .map(|x| x <= BOGOLIUBOV_FRACTION_LIMIT * d.n_atoms as f64),
    }
}
