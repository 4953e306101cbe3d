//! Spherical geometry: unit directions, spherical caps, target planes,
//! ellipsoids of revolution, and the coordinate chart near the north pole.
//!
//! Dimension `n` is a runtime parameter; ambient vectors have length `n + 1`
//! and all formulas are written dimension-generically.

use crate::error::{Error, Result};
use crate::rng::indexed_rng;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Unit tolerance enforced by [`Direction::new`].
pub const UNIT_TOL: f64 = 1e-12;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A point on the unit sphere in ambient dimension `n + 1`; identifies a ray
/// from the source at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    coords: Vec<f64>,
}

impl Direction {
    /// Wrap a vector already known to be unit length (within [`UNIT_TOL`]).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let r = norm(&coords);
        if (r - 1.0).abs() > UNIT_TOL {
            return Err(Error::DegenerateInput(format!(
                "direction norm {r} deviates from 1 beyond {UNIT_TOL:e}"
            )));
        }
        Ok(Self { coords })
    }

    /// Ambient dimension minus one.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Last ambient component (height above the equator plane).
    pub fn last(&self) -> f64 {
        *self.coords.last().unwrap()
    }
}

impl AsRef<[f64]> for Direction {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// Normalize a nonzero vector onto the unit sphere.
pub fn normalize_to_sphere(v: &[f64]) -> Result<Direction> {
    let r = norm(v);
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "cannot normalize vector with norm {r}"
        )));
    }
    Ok(Direction {
        coords: v.iter().map(|x| x / r).collect(),
    })
}

/// Spherical cap of height `h_c` about the north pole; the source aperture.
///
/// A direction `m` belongs to the cap iff its last component is at least
/// `1 - h_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCap {
    height: f64,
}

impl SphericalCap {
    pub fn new(height: f64) -> Result<Self> {
        if !(height > 0.0 && height <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cap height must lie in (0, 1], got {height}"
            )));
        }
        Ok(Self { height })
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Smallest admissible last component of a member direction.
    pub fn min_last(&self) -> f64 {
        1.0 - self.height
    }

    pub fn contains(&self, m: &[f64]) -> bool {
        *m.last().unwrap() >= self.min_last()
    }
}

/// Horizontal plane `{z_{n+1} = h}` with `h < 0`; carries the target domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetPlane {
    height: f64,
}

impl TargetPlane {
    pub fn new(height: f64) -> Result<Self> {
        if !(height < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "target plane height must be negative, got {height}"
            )));
        }
        Ok(Self { height })
    }

    pub fn height(&self) -> f64 {
        self.height
    }
}

/// Ellipsoid of revolution with one focus at the origin and the other at a
/// target-plane point `z`, parameterized by its focal parameter `d`
/// (semi-latus rectum). Eccentricity and |z| are cached at construction; the
/// per-ray radius evaluation reuses them.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    focus: Vec<f64>,
    focus_hat: Vec<f64>,
    focus_norm: f64,
    d: f64,
    eps: f64,
}

/// Eccentricity of the ellipsoid with focal distance `|z|` and focal
/// parameter `d`: `sqrt(1 + d^2/|z|^2) - d/|z|`, always in (0, 1).
pub fn eccentricity_from_norm(z_norm: f64, d: f64) -> Result<f64> {
    if !(z_norm > 0.0) {
        return Err(Error::DegenerateInput(
            "ellipsoid focus coincides with the origin".into(),
        ));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "focal parameter must be positive, got {d}"
        )));
    }
    let s = d / z_norm;
    Ok((1.0 + s * s).sqrt() - s)
}

/// Eccentricity from the second focus position.
pub fn eccentricity(z: &[f64], d: f64) -> Result<f64> {
    eccentricity_from_norm(norm(z), d)
}

impl Ellipsoid {
    pub fn new(focus: Vec<f64>, d: f64) -> Result<Self> {
        let focus_norm = norm(&focus);
        let eps = eccentricity_from_norm(focus_norm, d)?;
        let focus_hat = focus.iter().map(|x| x / focus_norm).collect();
        Ok(Self {
            focus,
            focus_hat,
            focus_norm,
            d,
            eps,
        })
    }

    pub fn focus(&self) -> &[f64] {
        &self.focus
    }

    pub fn focus_hat(&self) -> &[f64] {
        &self.focus_hat
    }

    pub fn focus_norm(&self) -> f64 {
        self.focus_norm
    }

    pub fn focal_parameter(&self) -> f64 {
        self.d
    }

    pub fn eccentricity(&self) -> f64 {
        self.eps
    }
}

/// Polar radius of the ellipsoid along a unit direction:
/// `d / (1 - eps * (zhat . x))`.
#[inline]
pub fn radius_from_parts(d: f64, eps: f64, zhat_dot_x: f64) -> f64 {
    d / (1.0 - eps * zhat_dot_x)
}

/// Polar radius of `e` along the unit direction `x`.
pub fn ellipsoid_radius(e: &Ellipsoid, x: &Direction) -> f64 {
    radius_from_parts(e.d, e.eps, dot(&e.focus_hat, x.as_ref()))
}

/// Total surface area of `S^{n-1}` (the unit sphere in `R^n`).
fn sphere_area(n_ambient: usize) -> f64 {
    // 2 pi^{n/2} / Gamma(n/2), built by the half-integer recurrence.
    let half_n = n_ambient as f64 / 2.0;
    let gamma = if n_ambient % 2 == 0 {
        // Gamma(k) = (k-1)!
        let k = n_ambient / 2;
        (1..k).map(|j| j as f64).product::<f64>()
    } else {
        // Gamma(k + 1/2) = sqrt(pi) * (2k)! / (4^k k!)
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while x < half_n - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    };
    2.0 * std::f64::consts::PI.powf(half_n) / gamma
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    fn simpson_step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        m: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            simpson_step(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + simpson_step(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, m, b, fa, fm, fb, whole, tol, depth)
}

/// Surface measure of the cap on `S^n`.
///
/// `n = 2` uses the closed form `2 pi h_c`; `n = 1` the arc length
/// `2 arccos(1 - h_c)`; other dimensions integrate the latitude profile
/// `sin^{n-1}(theta)` adaptively to relative accuracy 1e-10.
pub fn cap_surface_area(cap: &SphericalCap, n: usize) -> f64 {
    assert!(n >= 1, "sphere dimension must be at least 1");
    let hc = cap.height;
    match n {
        1 => 2.0 * (1.0 - hc).acos(),
        2 => 2.0 * std::f64::consts::PI * hc,
        _ => {
            let theta_c = (1.0 - hc).acos();
            let p = (n - 1) as i32;
            let integrand = |theta: f64| theta.sin().powi(p);
            let integral = adaptive_simpson(&integrand, 0.0, theta_c, 1e-13, 40);
            sphere_area(n) * integral
        }
    }
}

/// Draw one cap-uniform direction from the generator stream `(seed, index)`.
///
/// Rejection from normalized standard-Gaussian vectors: exact with respect to
/// the spherical measure restricted to the cap.
pub fn cap_direction_at(cap: &SphericalCap, n: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = indexed_rng(seed, index);
    let min_last = cap.min_last();
    loop {
        let mut v = vec![0.0; n + 1];
        for c in v.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let r = norm(&v);
        if r == 0.0 || !r.is_finite() {
            continue;
        }
        for c in v.iter_mut() {
            *c /= r;
        }
        if v[n] >= min_last {
            return v;
        }
    }
}

/// `count` i.i.d. cap-uniform directions, deterministic in `seed` and
/// independent of how the index loop is scheduled.
pub fn sample_cap_uniform(cap: &SphericalCap, n: usize, count: usize, seed: u64) -> Vec<Direction> {
    sample_cap_flat(cap, n, count, seed)
        .chunks(n + 1)
        .map(|c| Direction {
            coords: c.to_vec(),
        })
        .collect()
}

/// Flat storage variant of [`sample_cap_uniform`]: `count * (n + 1)` reals in
/// ray-index order.
pub fn sample_cap_flat(cap: &SphericalCap, n: usize, count: usize, seed: u64) -> Vec<f64> {
    let w = n + 1;
    let mut out = vec![0.0; count * w];
    out.par_chunks_mut(w)
        .enumerate()
        .for_each(|(i, chunk)| chunk.copy_from_slice(&cap_direction_at(cap, n, seed, i as u64)));
    out
}

/// Lift a chart point `t` (|t| < 1) to the upper hemisphere: `(t, w)` with
/// `w = sqrt(1 - |t|^2)`.
pub fn chart_to_sphere(t: &[f64]) -> Result<Direction> {
    let r2 = dot(t, t);
    if r2 >= 1.0 {
        return Err(Error::OutOfChart { norm: r2.sqrt() });
    }
    let mut coords = t.to_vec();
    coords.push((1.0 - r2).sqrt());
    Ok(Direction { coords })
}

/// Drop the last coordinate; inverse of [`chart_to_sphere`] on the upper
/// hemisphere.
pub fn sphere_to_chart(m: &Direction) -> Vec<f64> {
    m.coords[..m.dim()].to_vec()
}

/// Deterministic well-spread probe directions on the cap.
///
/// For `n = 2` this is the area-preserving map of a Hammersley set (uniform
/// latitude in the last coordinate, radical-inverse azimuth); for other
/// dimensions it falls back to counter-based uniform sampling with a fixed
/// internal stream.
pub fn cap_probe_points(cap: &SphericalCap, n: usize, count: usize) -> Vec<Direction> {
    if n == 2 {
        (0..count)
            .map(|i| {
                let u = crate::discretization::van_der_corput((i + 1) as u64, 2).unwrap();
                let t = 1.0 - cap.height * u;
                let phi = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
                let s = (1.0 - t * t).max(0.0).sqrt();
                Direction {
                    coords: vec![s * phi.cos(), s * phi.sin(), t],
                }
            })
            .collect()
    } else {
        sample_cap_uniform(cap, n, count, 0x9e3779b97f4a7c15)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn normalize_scaling_identity() {
        let d = normalize_to_sphere(&[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(d.coords(), &[0.0, 0.0, 1.0]);
        let d = normalize_to_sphere(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.coords(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_345_triple() {
        // 3-4-5 right triangle: (3,4,0)/5 = (0.6, 0.8, 0).
        let d = normalize_to_sphere(&[3.0, 4.0, 0.0]).unwrap();
        approx(d.coords()[0], 0.6, 1e-15);
        approx(d.coords()[1], 0.8, 1e-15);
        approx(d.coords()[2], 0.0, 1e-15);
    }

    #[test]
    fn normalize_zero_vector_errors() {
        assert!(matches!(
            normalize_to_sphere(&[0.0, 0.0, 0.0]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn eccentricity_values() {
        // |z| = 1, d = 1: sqrt(2) - 1.
        approx(
            eccentricity(&[0.0, 0.0, -1.0], 1.0).unwrap(),
            std::f64::consts::SQRT_2 - 1.0,
            1e-15,
        );
        // Depends only on d/|z|.
        approx(
            eccentricity(&[0.0, 2.0, 0.0], 2.0).unwrap(),
            std::f64::consts::SQRT_2 - 1.0,
            1e-15,
        );
        // d -> 0+ approaches 1.
        approx(eccentricity(&[1.0, 0.0, 0.0], 1e-12).unwrap(), 1.0, 1e-11);
    }

    #[test]
    fn ellipsoid_radius_at_axis_points() {
        let z = vec![0.0, 0.0, -1.0];
        let e = Ellipsoid::new(z, 1.0).unwrap();
        let eps = std::f64::consts::SQRT_2 - 1.0;
        // Orthogonal direction gives the focal parameter.
        let x = Direction::new(vec![1.0, 0.0, 0.0]).unwrap();
        approx(ellipsoid_radius(&e, &x), 1.0, 1e-15);
        // Toward the focus: d / (1 - eps) = 1/(2 - sqrt 2).
        let x = Direction::new(vec![0.0, 0.0, -1.0]).unwrap();
        approx(ellipsoid_radius(&e, &x), 1.0 / (1.0 - eps), 1e-14);
        approx(ellipsoid_radius(&e, &x), 1.7071067811865475, 1e-12);
        // Away from the focus: d / (1 + eps) = 1/sqrt(2).
        let x = Direction::new(vec![0.0, 0.0, 1.0]).unwrap();
        approx(ellipsoid_radius(&e, &x), 0.7071067811865476, 1e-12);
    }

    #[test]
    fn apsis_identities() {
        // rho(zhat)(1 - eps) = d and rho(-zhat)(1 + eps) = d.
        let e = Ellipsoid::new(vec![0.3, -0.4, -1.2], 2.5).unwrap();
        let zhat = e.focus_hat().to_vec();
        let plus = Direction::new(zhat.clone()).unwrap();
        let minus = Direction::new(zhat.iter().map(|x| -x).collect()).unwrap();
        approx(
            ellipsoid_radius(&e, &plus) * (1.0 - e.eccentricity()),
            2.5,
            1e-12,
        );
        approx(
            ellipsoid_radius(&e, &minus) * (1.0 + e.eccentricity()),
            2.5,
            1e-12,
        );
    }

    #[test]
    fn cap_area_closed_forms() {
        let hemi = SphericalCap::new(1.0).unwrap();
        approx(
            cap_surface_area(&hemi, 2),
            2.0 * std::f64::consts::PI,
            1e-12,
        );
        approx(cap_surface_area(&hemi, 1), std::f64::consts::PI, 1e-12);
        // 2 pi (1 - 1/sqrt 5), computed from the closed form.
        let cap = SphericalCap::new(1.0 - 1.0 / 5f64.sqrt()).unwrap();
        approx(cap_surface_area(&cap, 2), 3.4732594147632962, 1e-10);
    }

    #[test]
    fn cap_area_quadrature_matches_closed_form() {
        // The generic quadrature path must agree with the n = 2 closed form;
        // exercise it by integrating the same latitude profile directly.
        for hc in [0.2, 0.55, 1.0] {
            let cap = SphericalCap::new(hc).unwrap();
            let theta_c = (1.0 - hc).acos();
            let q = sphere_area(2) * adaptive_simpson(&|t: f64| t.sin(), 0.0, theta_c, 1e-13, 40);
            approx(q, cap_surface_area(&cap, 2), 1e-10);
        }
        // n = 3: closed form of the solid-angle integral is
        // A_2 * (theta_c - sin(theta_c) cos(theta_c)) / 2 with A_2 = 4 pi.
        let cap = SphericalCap::new(0.4).unwrap();
        let theta_c = (1.0 - 0.4f64).acos();
        let exact =
            4.0 * std::f64::consts::PI * 0.5 * (theta_c - theta_c.sin() * theta_c.cos());
        approx(cap_surface_area(&cap, 3), exact, exact * 1e-10);
    }

    #[test]
    fn cap_samples_lie_in_cap_and_unit() {
        let cap = SphericalCap::new(0.55).unwrap();
        let pts = sample_cap_uniform(&cap, 2, 500, 11);
        assert_eq!(pts.len(), 500);
        for m in &pts {
            assert!((norm(m.coords()) - 1.0).abs() < 1e-12);
            assert!(cap.contains(m.coords()));
        }
        assert!(sample_cap_uniform(&cap, 2, 0, 11).is_empty());
    }

    #[test]
    fn cap_sampling_thread_invariant() {
        let cap = SphericalCap::new(0.7).unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample_cap_flat(&cap, 2, 2000, 99));
        let two = rayon::ThreadPoolBuilder::new()
            .num_threads(2)
            .build()
            .unwrap()
            .install(|| sample_cap_flat(&cap, 2, 2000, 99));
        assert_eq!(one, two);
    }

    #[test]
    fn hemisphere_height_mean_is_half() {
        // For n = 2 the latitude coordinate is uniform on [1 - h_c, 1], so the
        // hemisphere mean of the last coordinate is 1/2.
        let cap = SphericalCap::new(1.0).unwrap();
        let pts = sample_cap_flat(&cap, 2, 100_000, 4);
        let mean = pts.chunks(3).map(|m| m[2]).sum::<f64>() / 100_000.0;
        approx(mean, 0.5, 0.005);
    }

    #[test]
    fn azimuth_chi_square_uniformity() {
        // Chi-square goodness of fit on 36 azimuth bins at the 1% level
        // (upper critical value of chi2_35 is 57.34).
        let cap = SphericalCap::new(1.0).unwrap();
        let count = 100_000usize;
        let pts = sample_cap_flat(&cap, 2, count, 2024);
        let bins = 36usize;
        let mut hist = vec![0usize; bins];
        for m in pts.chunks(3) {
            let phi = m[1].atan2(m[0]).rem_euclid(2.0 * std::f64::consts::PI);
            let b = ((phi / (2.0 * std::f64::consts::PI) * bins as f64) as usize).min(bins - 1);
            hist[b] += 1;
        }
        let expected = count as f64 / bins as f64;
        let chi2: f64 = hist
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 57.34, "chi2 = {chi2}");
    }

    #[test]
    fn chart_round_trip_examples() {
        let north = chart_to_sphere(&[0.0, 0.0]).unwrap();
        assert_eq!(north.coords(), &[0.0, 0.0, 1.0]);
        let d = chart_to_sphere(&[0.6, 0.0]).unwrap();
        approx(d.coords()[2], 0.8, 1e-15);
        assert!(matches!(
            chart_to_sphere(&[1.0, 0.0]),
            Err(Error::OutOfChart { .. })
        ));
    }

    proptest! {
        #[test]
        fn chart_round_trip_is_identity(x in -0.7f64..0.7, y in -0.7f64..0.7) {
            let t = vec![x, y];
            let m = chart_to_sphere(&t).unwrap();
            let back = sphere_to_chart(&m);
            prop_assert!((back[0] - x).abs() <= 1e-12);
            prop_assert!((back[1] - y).abs() <= 1e-12);
        }

        #[test]
        fn ellipsoid_radius_positive_and_eps_in_range(
            zx in -3.0f64..3.0,
            zy in -3.0f64..3.0,
            d in 0.05f64..10.0,
            ax in -1.0f64..1.0,
            ay in -1.0f64..1.0,
            az in -1.0f64..1.0,
        ) {
            prop_assume!(zx.abs() + zy.abs() > 1e-3);
            prop_assume!(ax.abs() + ay.abs() + az.abs() > 1e-3);
            let e = Ellipsoid::new(vec![zx, zy, -1.0], d).unwrap();
            prop_assert!(e.eccentricity() > 0.0 && e.eccentricity() < 1.0);
            let x = normalize_to_sphere(&[ax, ay, az]).unwrap();
            prop_assert!(ellipsoid_radius(&e, &x) > 0.0);
        }
    }
}
