//! Constitutive models: Cauchy stress evaluation and plastic return mappings
//! for the seven supported material types.
//!
//! Solids (elastic, plasticine, metal, foam, sand) use fixed-corotated
//! hyperelasticity for stress. Plastic flow is realized as a projection of
//! the trial elastic deformation gradient in Hencky (log singular value)
//! space: von Mises for plasticine/metal, a Perzyna-style viscous relaxation
//! for foam, a zero-cohesion Drucker-Prager cone for sand, and a
//! Bingham-style overstress relaxation for non-Newtonian fluid. Newtonian
//! fluid keeps only its volume ratio and takes stress from a linear equation
//! of state plus a viscous deviator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{polar_rotation, svd3, Mat3, Scalar, Vec3};

/// Internal elastic constants used by the sand model; only the friction
/// angle is exposed as an identifiable parameter.
pub const SAND_YOUNG: f64 = 1e6;
pub const SAND_POISSON: f64 = 0.3;

/// The seven supported material types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialType {
    Elastic,
    Plasticine,
    Metal,
    Foam,
    Sand,
    NewtonianFluid,
    NonNewtonianFluid,
}

impl MaterialType {
    pub const ALL: [MaterialType; 7] = [
        MaterialType::Elastic,
        MaterialType::Plasticine,
        MaterialType::Metal,
        MaterialType::Foam,
        MaterialType::Sand,
        MaterialType::NewtonianFluid,
        MaterialType::NonNewtonianFluid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MaterialType::Elastic => "elastic",
            MaterialType::Plasticine => "plasticine",
            MaterialType::Metal => "metal",
            MaterialType::Foam => "foam",
            MaterialType::Sand => "sand",
            MaterialType::NewtonianFluid => "newtonian_fluid",
            MaterialType::NonNewtonianFluid => "non_newtonian_fluid",
        }
    }

    /// The parameters that are meaningful (and identifiable) for this type.
    pub fn active_params(&self) -> &'static [ParamKey] {
        use ParamKey::*;
        match self {
            MaterialType::Elastic => &[Young, Poisson],
            MaterialType::Plasticine => &[Young, Poisson, YieldStress],
            MaterialType::Metal => &[Young, Poisson, YieldStress],
            MaterialType::Foam => &[Young, Poisson, Eta],
            MaterialType::Sand => &[FrictionAngle],
            MaterialType::NewtonianFluid => &[Mu, Kappa],
            MaterialType::NonNewtonianFluid => &[Mu, Kappa, YieldStress, Eta],
        }
    }
}

/// Keys naming the entries of [`MaterialParams`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKey {
    /// Young's modulus E [Pa].
    Young,
    /// Poisson's ratio ν.
    Poisson,
    /// Yield stress τ_Y [Pa].
    YieldStress,
    /// Plastic/fluid viscosity η [Pa·s].
    Eta,
    /// Shear modulus or fluid viscosity μ (context-dependent units).
    Mu,
    /// Bulk modulus κ [Pa].
    Kappa,
    /// Friction angle θ [degrees].
    FrictionAngle,
}

impl ParamKey {
    pub const ALL: [ParamKey; 7] = [
        ParamKey::Young,
        ParamKey::Poisson,
        ParamKey::YieldStress,
        ParamKey::Eta,
        ParamKey::Mu,
        ParamKey::Kappa,
        ParamKey::FrictionAngle,
    ];

    /// Field name used by prior/truth/report files.
    pub fn file_key(&self) -> &'static str {
        match self {
            ParamKey::Young => "E",
            ParamKey::Poisson => "nu",
            ParamKey::YieldStress => "tau_y",
            ParamKey::Eta => "eta",
            ParamKey::Mu => "mu",
            ParamKey::Kappa => "kappa",
            ParamKey::FrictionAngle => "theta_fric",
        }
    }

    pub fn from_file_key(key: &str) -> Option<ParamKey> {
        ParamKey::ALL.iter().copied().find(|k| k.file_key() == key)
    }
}

/// Material parameter block. Entries not listed by the material's
/// `active_params` are ignored by all stress evaluations.
#[derive(Clone, Copy, Debug)]
pub struct MaterialParams {
    pub young: Scalar,
    pub poisson: Scalar,
    pub yield_stress: Scalar,
    pub eta: Scalar,
    pub mu: Scalar,
    pub kappa: Scalar,
    /// Friction angle in degrees.
    pub friction_deg: Scalar,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            young: Scalar::new(1e5),
            poisson: Scalar::new(0.3),
            yield_stress: Scalar::new(1e3),
            eta: Scalar::new(10.0),
            mu: Scalar::new(1.0),
            kappa: Scalar::new(1e5),
            friction_deg: Scalar::new(30.0),
        }
    }
}

impl MaterialParams {
    pub fn get(&self, key: ParamKey) -> Scalar {
        match key {
            ParamKey::Young => self.young,
            ParamKey::Poisson => self.poisson,
            ParamKey::YieldStress => self.yield_stress,
            ParamKey::Eta => self.eta,
            ParamKey::Mu => self.mu,
            ParamKey::Kappa => self.kappa,
            ParamKey::FrictionAngle => self.friction_deg,
        }
    }

    pub fn set(&mut self, key: ParamKey, v: Scalar) {
        match key {
            ParamKey::Young => self.young = v,
            ParamKey::Poisson => self.poisson = v,
            ParamKey::YieldStress => self.yield_stress = v,
            ParamKey::Eta => self.eta = v,
            ParamKey::Mu => self.mu = v,
            ParamKey::Kappa => self.kappa = v,
            ParamKey::FrictionAngle => self.friction_deg = v,
        }
    }

    /// Validate the entries a material of type `kind` actually uses.
    pub fn validate(&self, kind: MaterialType, context: &str) -> Result<()> {
        for &key in kind.active_params() {
            let v = self.get(key).val;
            let ok = match key {
                ParamKey::Poisson => v > 0.0 && v < 0.5,
                ParamKey::FrictionAngle => v > 0.0 && v < 90.0,
                _ => v > 0.0,
            };
            if !ok {
                return Err(Error::validation(
                    format!("{context}.{}", key.file_key()),
                    format!("value {v} violates the {} constraint", key.file_key()),
                ));
            }
        }
        Ok(())
    }
}

/// A bound material: type, parameters, density.
#[derive(Clone, Copy, Debug)]
pub struct MaterialModel {
    pub kind: MaterialType,
    pub params: MaterialParams,
    /// Rest density ρ [kg/m³]. Never an optimization variable.
    pub density: f64,
}

/// Lamé coefficients (μ_L, λ_L) from Young's modulus and Poisson's ratio.
pub fn lame_coefficients(params: &MaterialParams) -> Result<(Scalar, Scalar)> {
    let e = params.young;
    let nu = params.poisson;
    if !(nu.val < 0.5) {
        return Err(Error::IncompressibleLimit { nu: nu.val });
    }
    let one = Scalar::one();
    let mu = e / ((one + nu) * 2.0);
    let lambda = e * nu / ((one + nu) * (one - nu * 2.0));
    Ok((mu, lambda))
}

fn lame_from(e: f64, nu: f64) -> (f64, f64) {
    (e / (2.0 * (1.0 + nu)), e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)))
}

/// Hencky strain of a trial deformation gradient: the SVD plus the log
/// singular values split into deviatoric part, norm, and trace.
struct Hencky {
    svd: crate::math::Svd3,
    eps: Vec3,
    dev: Vec3,
    dev_norm: Scalar,
    trace: Scalar,
}

fn hencky(f_trial: &Mat3) -> Result<Hencky> {
    let svd = svd3(f_trial)?;
    let eps = Vec3::new(svd.sigma.x.ln(), svd.sigma.y.ln(), svd.sigma.z.ln());
    let trace = eps.x + eps.y + eps.z;
    let mean = trace * (1.0 / 3.0);
    let dev = Vec3::new(eps.x - mean, eps.y - mean, eps.z - mean);
    let dev_norm = dev.norm_sq().sqrt();
    Ok(Hencky { svd, eps, dev, dev_norm, trace })
}

fn reconstruct(svd: &crate::math::Svd3, eps: Vec3) -> Mat3 {
    let sig = Vec3::new(eps.x.exp(), eps.y.exp(), eps.z.exp());
    svd.u * Mat3::from_diag(sig) * svd.v.transpose()
}

/// Cauchy stress from the elastic deformation gradient (and, for Newtonian
/// fluid, the velocity gradient). Output is symmetrized.
pub fn cauchy_stress(
    kind: MaterialType,
    params: &MaterialParams,
    f_elastic: &Mat3,
    velocity_gradient: &Mat3,
) -> Result<Mat3> {
    let j = f_elastic.determinant();
    if !(j.val > 0.0) {
        return Err(Error::InvertedElement { det: j.val });
    }
    let stress = match kind {
        MaterialType::Elastic
        | MaterialType::Plasticine
        | MaterialType::Metal
        | MaterialType::Foam => {
            let (mu, lambda) = lame_coefficients(params)?;
            fixed_corotated(f_elastic, j, mu, lambda)?
        }
        MaterialType::Sand => {
            let (mu, lambda) = lame_from(SAND_YOUNG, SAND_POISSON);
            fixed_corotated(f_elastic, j, Scalar::new(mu), Scalar::new(lambda))?
        }
        MaterialType::NewtonianFluid => {
            // Linear EOS: compressive (negative-diagonal) stress when J < 1,
            // plus the viscous deviator from the strain rate.
            let mut s = Mat3::from_diag(Vec3::splat(params.kappa * (j - 1.0)));
            let viscous = velocity_gradient.symmetric_part().deviatoric().scale(params.mu * 2.0);
            s += viscous;
            s
        }
        MaterialType::NonNewtonianFluid => {
            // Hencky elasticity: Kirchhoff stress diagonal in the principal
            // frame of F, rotated back by U and divided by J.
            let h = hencky(f_elastic)?;
            let mean = h.trace * (1.0 / 3.0);
            let tau = Vec3::new(
                (h.eps.x - mean) * params.mu * 2.0 + params.kappa * h.trace,
                (h.eps.y - mean) * params.mu * 2.0 + params.kappa * h.trace,
                (h.eps.z - mean) * params.mu * 2.0 + params.kappa * h.trace,
            );
            let rot = h.svd.u;
            (rot * Mat3::from_diag(tau) * rot.transpose()).scale(j.recip())
        }
    };
    Ok(stress.symmetric_part())
}

fn fixed_corotated(f: &Mat3, j: Scalar, mu: Scalar, lambda: Scalar) -> Result<Mat3> {
    let r = polar_rotation(f)?;
    let dev = (*f - r) * f.transpose();
    let mut s = dev.scale(mu * 2.0 / j);
    let vol = lambda * (j - 1.0);
    for i in 0..3 {
        s.m[i][i] = s.m[i][i] + vol;
    }
    Ok(s)
}

/// Project a trial elastic deformation gradient back onto the admissible set.
pub fn return_map(
    kind: MaterialType,
    params: &MaterialParams,
    f_trial: &Mat3,
    dt: f64,
) -> Result<Mat3> {
    let det = f_trial.determinant();
    if !(det.val > 0.0) {
        return Err(Error::InvertedElement { det: det.val });
    }
    match kind {
        MaterialType::Elastic => Ok(*f_trial),

        MaterialType::Plasticine | MaterialType::Metal => {
            let (mu, _) = lame_coefficients(params)?;
            let h = hencky(f_trial)?;
            let s_norm = h.dev_norm * mu * 2.0;
            let s_yield = params.yield_stress * (2.0f64 / 3.0).sqrt();
            if s_norm.val <= s_yield.val {
                return Ok(*f_trial);
            }
            // Scale the deviatoric Hencky strain back onto the yield surface.
            let target = s_yield / (mu * 2.0);
            let scale = target / h.dev_norm;
            let mean = h.trace * (1.0 / 3.0);
            let eps_new = Vec3::new(
                h.dev.x * scale + mean,
                h.dev.y * scale + mean,
                h.dev.z * scale + mean,
            );
            Ok(reconstruct(&h.svd, eps_new))
        }

        MaterialType::Foam => {
            if params.eta.val <= 0.0 {
                return Err(Error::NonPositiveViscosity { eta: params.eta.val, kind: "foam" });
            }
            let (mu, _) = lame_coefficients(params)?;
            let h = hencky(f_trial)?;
            if h.dev_norm.val == 0.0 {
                return Ok(*f_trial);
            }
            // Perzyna relaxation: the shear strain decays at rate 2μ/η,
            // clamped so one step never overshoots.
            let factor = (mu * (2.0 * dt) / params.eta).clamp(0.0, 1.0);
            let keep = Scalar::one() - factor;
            let mean = h.trace * (1.0 / 3.0);
            let eps_new = Vec3::new(
                h.dev.x * keep + mean,
                h.dev.y * keep + mean,
                h.dev.z * keep + mean,
            );
            Ok(reconstruct(&h.svd, eps_new))
        }

        MaterialType::Sand => {
            let (mu, lambda) = lame_from(SAND_YOUNG, SAND_POISSON);
            let theta = params.friction_deg * (std::f64::consts::PI / 180.0);
            let sin_t = theta.sin();
            let alpha =
                sin_t * 2.0 / (Scalar::new(3.0) - sin_t) * (2.0f64 / 3.0).sqrt();
            let h = hencky(f_trial)?;
            if h.trace.val > 0.0 {
                // Expansion: project to the cone tip (all stretch removed).
                return Ok(h.svd.u * h.svd.v.transpose());
            }
            let coeff = (3.0 * lambda + 2.0 * mu) / (2.0 * mu);
            let delta_gamma = h.dev_norm + alpha * coeff * h.trace;
            if delta_gamma.val <= 0.0 {
                return Ok(*f_trial);
            }
            let scale = (h.dev_norm - delta_gamma) / h.dev_norm;
            let mean = h.trace * (1.0 / 3.0);
            let eps_new = Vec3::new(
                h.dev.x * scale + mean,
                h.dev.y * scale + mean,
                h.dev.z * scale + mean,
            );
            Ok(reconstruct(&h.svd, eps_new))
        }

        MaterialType::NewtonianFluid => {
            // Keep only the volume ratio: F ← J^(1/3) I.
            let s = det.powf(1.0 / 3.0);
            Ok(Mat3::from_diag(Vec3::splat(s)))
        }

        MaterialType::NonNewtonianFluid => {
            if params.eta.val <= 0.0 {
                return Err(Error::NonPositiveViscosity {
                    eta: params.eta.val,
                    kind: "non_newtonian_fluid",
                });
            }
            let h = hencky(f_trial)?;
            let s_norm = h.dev_norm * params.mu * 2.0;
            let s_yield = params.yield_stress * (2.0f64 / 3.0).sqrt();
            if s_norm.val <= s_yield.val {
                return Ok(*f_trial);
            }
            // Bingham-style overstress: the excess shear relaxes with an
            // implicit step governed by η (unit flow exponent).
            let relax = Scalar::one() + params.mu * (2.0 * dt) / params.eta;
            let s_new = s_yield + (s_norm - s_yield) / relax;
            let target = s_new / (params.mu * 2.0);
            let scale = target / h.dev_norm;
            let mean = h.trace * (1.0 / 3.0);
            let eps_new = Vec3::new(
                h.dev.x * scale + mean,
                h.dev.y * scale + mean,
                h.dev.z * scale + mean,
            );
            Ok(reconstruct(&h.svd, eps_new))
        }
    }
}

/// Value of the yield function after a return mapping; used by tests and the
/// acceptance suite to confirm projected states sit on (or inside) the
/// admissible set. Returns `None` for kinds without a yield surface.
pub fn yield_function(kind: MaterialType, params: &MaterialParams, f_elastic: &Mat3) -> Option<f64> {
    let h = hencky(f_elastic).ok()?;
    match kind {
        MaterialType::Plasticine | MaterialType::Metal => {
            let (mu, _) = lame_coefficients(params).ok()?;
            let s_norm = h.dev_norm.val * 2.0 * mu.val;
            Some(s_norm - (2.0f64 / 3.0).sqrt() * params.yield_stress.val)
        }
        MaterialType::Sand => {
            let (mu, lambda) = lame_from(SAND_YOUNG, SAND_POISSON);
            let theta = params.friction_deg.val.to_radians();
            let alpha = (2.0f64 / 3.0).sqrt() * 2.0 * theta.sin() / (3.0 - theta.sin());
            let coeff = (3.0 * lambda + 2.0 * mu) / (2.0 * mu);
            Some(h.dev_norm.val + alpha * coeff * h.trace.val.min(0.0))
        }
        _ => None,
    }
}
