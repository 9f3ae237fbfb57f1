//! Tour of the seven constitutive models: stress response at a fixed
//! stretch, and what each return mapping does to a sheared trial state.
//!
//! ```bash
//! cargo run --example material_tour
//! ```

use mpm_ident::constitutive::{
    cauchy_stress, return_map, MaterialParams, MaterialType,
};
use mpm_ident::math::{Mat3, Scalar, Vec3};

fn params_for(kind: MaterialType) -> MaterialParams {
    let mut p = MaterialParams::default();
    match kind {
        MaterialType::Elastic => {
            p.young = Scalar::new(1e5);
        }
        MaterialType::Plasticine | MaterialType::Metal => {
            p.young = Scalar::new(2e5);
            p.yield_stress = Scalar::new(5e3);
        }
        MaterialType::Foam => {
            p.young = Scalar::new(5e4);
            p.eta = Scalar::new(40.0);
        }
        MaterialType::Sand => {
            p.friction_deg = Scalar::new(30.0);
        }
        MaterialType::NewtonianFluid => {
            p.mu = Scalar::new(50.0);
            p.kappa = Scalar::new(1e5);
        }
        MaterialType::NonNewtonianFluid => {
            p.mu = Scalar::new(2e4);
            p.kappa = Scalar::new(1e5);
            p.yield_stress = Scalar::new(1e3);
            p.eta = Scalar::new(30.0);
        }
    }
    p
}

fn main() {
    // 10% uniaxial stretch and a sheared, slightly compressed trial state.
    let stretch = Mat3::from_diag(Vec3::from_f64(1.1, 1.0, 1.0));
    let sheared = Mat3::from_diag(Vec3::from_f64(1.25, 0.82, 0.98));
    let rate = Mat3::zero();
    let dt = 2.5e-4;

    println!("{:<22} {:>14} {:>14} {:>16}", "material", "sigma_xx [Pa]", "sigma_yy [Pa]", "shear kept [%]");
    for kind in MaterialType::ALL {
        let p = params_for(kind);
        let stress = cauchy_stress(kind, &p, &stretch, &rate).expect("stress");

        // How much of the trial shear survives the return mapping.
        let before = hencky_shear(&sheared);
        let projected = return_map(kind, &p, &sheared, dt).expect("return map");
        let after = hencky_shear(&projected);
        let kept = if before > 0.0 { 100.0 * after / before } else { 100.0 };

        println!(
            "{:<22} {:>14.1} {:>14.1} {:>15.1}%",
            kind.name(),
            stress.m[0][0].val,
            stress.m[1][1].val,
            kept
        );
    }
    println!();
    println!("sigma at a 10% uniaxial stretch; shear retention of a sheared trial state");
    println!("(elastic keeps all shear, fluids drop or relax it, plastics cap it)");
}

fn hencky_shear(f: &Mat3) -> f64 {
    let svd = mpm_ident::math::svd3(f).expect("svd");
    let e = [
        svd.sigma.x.val.ln(),
        svd.sigma.y.val.ln(),
        svd.sigma.z.val.ln(),
    ];
    let mean = (e[0] + e[1] + e[2]) / 3.0;
    ((e[0] - mean).powi(2) + (e[1] - mean).powi(2) + (e[2] - mean).powi(2)).sqrt()
}
