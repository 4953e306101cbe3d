//! Timing probe for the reference spherical build.

use goas::discretization::{discretize_target, normalize_energy, SequenceKind, TargetBox};
use goas::geometry::{cap_probe_points, cap_surface_area, SphericalCap, TargetPlane};
use goas::reflector::{
    build_reflector, sphere_anchored_focal, supporting_index, BuildOptions,
};
use goas::targets::spherical_oracle_density;
use std::time::Instant;

fn main() {
    let threads: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let k: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(561);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .unwrap();

    let cap = SphericalCap::new(1.0 - 1.0 / 5f64.sqrt()).unwrap();
    let plane = TargetPlane::new(-1.0).unwrap();
    let b = TargetBox::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
    let td = discretize_target(
        |z| spherical_oracle_density(z, -1.0, &cap, 1.0),
        &b,
        k,
        SequenceKind::Hammersley,
        0,
    )
    .unwrap();
    let sigma = cap_surface_area(&cap, 2);
    let td = normalize_energy(&td, sigma).unwrap();
    let mut best = 0;
    for i in 1..td.len() {
        if td.weights()[i] > td.weights()[best] {
            best = i;
        }
    }
    let p = td.point(best);
    let a = (p[0] * p[0] + p[1] * p[1] + 1.0).sqrt();
    let opts = BuildOptions {
        epsilon: 1e-4,
        reference_focal: Some(sphere_anchored_focal(2.0, a)),
        seed: 12345,
        ..Default::default()
    };
    let t0 = Instant::now();
    match build_reflector(&td, cap, plane, &opts) {
        Ok((r, report)) => {
            let dt = t0.elapsed();
            println!(
                "K={k} rays={} iterations={} accepted={} clamps={} by={:?} time={:.1}s",
                report.rays_per_iteration,
                report.iterations,
                report.accepted_iterations,
                report.clamp_events,
                report.converged_by,
                dt.as_secs_f64()
            );
            println!(
                "residual rel={:.3e} rawQ={:.3e} oos={:.3e}",
                report.final_residual, report.final_residual_raw_q, report.out_of_sample_residual
            );
            let probes = cap_probe_points(&cap, 2, 10_000);
            let mut worst = 0.0f64;
            for x in &probes {
                let (_, rho) = supporting_index(&r, x);
                worst = worst.max((rho - 2.0).abs() / 2.0);
            }
            println!("max envelope radius deviation = {worst:.4}");
        }
        Err(e) => {
            let dt = t0.elapsed();
            println!("build failed after {:.1}s: {e}", dt.as_secs_f64());
        }
    }
}
