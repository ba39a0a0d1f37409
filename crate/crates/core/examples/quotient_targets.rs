//! Orbits, canonical representatives and distances on the projective plane
//! and on `S³/Z₄`, and the Q-tensor picture of a director.

use defectoscope::manifolds::{covering_map, orbit_distance, project_to_target, QTensor, QuotientTarget};

fn main() -> defectoscope::Result<()> {
    let rp2 = QuotientTarget::rp2();
    let n = [-0.6, 0.0, 0.8];
    let orbit = covering_map(&n, &rp2)?;
    println!("RP2 orbit of {n:?}: {:?}, canonical {:?}", orbit.members, orbit.canonical);

    let (d, g) = orbit_distance(&[0.0, 0.0, 1.0], &[0.1, 0.0, -0.995], &rp2);
    println!("near-antipodal directors are {d:.4} apart (deck element {g})");
    let (tau, tau_prime) = rp2.resolution_thresholds();
    println!("RP2 resolution thresholds: {tau:.4} / {tau_prime:.4}");

    let z4 = QuotientTarget::s3_mod_z4();
    let orbit = covering_map(&[1.0, 2.0, 3.0, 4.0], &z4)?;
    println!("\nS3/Z4 orbit has {} members, canonical {:?}", orbit.members.len(), orbit.canonical);
    let (tau, _) = z4.resolution_thresholds();
    println!("S3/Z4 threshold: {tau:.4}");

    let q = QTensor::from_director(&n)?;
    println!("\nQ-tensor of {n:?}:\n{}", q.matrix());
    let noisy = q.matrix() + nalgebra::Matrix3::new(0.02, 0.01, 0.0, 0.01, -0.03, 0.0, 0.0, 0.0, 0.01);
    let p = project_to_target(&noisy)?;
    println!("projection of a perturbed Q recovers the director {:?}", p.director.as_slice());
    Ok(())
}
