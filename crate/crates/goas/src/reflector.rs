//! The piecewise-ellipsoidal convex reflector: Monte Carlo evaluation of the
//! delivered measure and the supporting-ellipsoid builder.
//!
//! A reflector is determined by `K` ellipsoids of revolution sharing a focus
//! at the source; the surface is the inner envelope (pointwise minimum of the
//! polar radii). The builder iteratively shrinks focal parameters until the
//! energy delivered to each focus matches its target weight: propose a
//! decrement, revert and halve the per-coordinate step wherever a patch
//! overshoots its weight, and accept otherwise. Only the focal parameters
//! move; the target density is never re-evaluated, so a build costs exactly
//! `K` density evaluations regardless of ray or iteration count.
//!
//! Measure evaluation ray-traces a frozen batch: common random numbers make
//! the delivered measure a deterministic, per-coordinate monotone function of
//! the focal parameters, which is what the accept/halve logic relies on.

use crate::discretization::{SequenceKind, TargetDiscretization};
use crate::error::{Error, Result};
use crate::geometry::{
    cap_surface_area, dot, sample_cap_flat, Direction, Ellipsoid, SphericalCap, TargetPlane,
};
use crate::rng::child_seed;
use rayon::prelude::*;
use serde::Deserialize;
use std::io::Write;

/// Relative shave applied inside open bounds so strict inequalities survive
/// rounding.
const BOUND_SHAVE: f64 = 1e-9;

/// Ray chunk size for the parallel assignment loop. Partial sums are reduced
/// in chunk order, so results are identical at any thread count.
const RAY_CHUNK: usize = 8192;

/// Piecewise-ellipsoidal convex reflector over a spherical-cap aperture.
///
/// Immutable once built; cheap to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflector {
    n: usize,
    plane: TargetPlane,
    cap: SphericalCap,
    /// Unit directions toward the foci, flattened `K x (n+1)`.
    zhat: Vec<f64>,
    /// Distances from the source to the foci.
    z_norm: Vec<f64>,
    /// Plane coordinates of the foci, flattened `K x n`.
    foci: Vec<f64>,
    /// Target weights, energy-normalized.
    weights: Vec<f64>,
    /// Focal parameters; entry 0 is the fixed reference.
    d: Vec<f64>,
    /// Cached eccentricities, kept in sync with `d`.
    eps: Vec<f64>,
    /// max_i |z_i|
    m_max: f64,
    /// max_i max_{m in cap} m . zhat_i
    gamma: f64,
    /// Same maximum for the reference focus alone.
    gamma_ref: f64,
    alpha: f64,
    c_l: f64,
    c_r: f64,
}

impl Reflector {
    /// Number of ellipsoid patches.
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn plane(&self) -> TargetPlane {
        self.plane
    }

    pub fn cap(&self) -> SphericalCap {
        self.cap
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn focal_params(&self) -> &[f64] {
        &self.d
    }

    pub fn eccentricities(&self) -> &[f64] {
        &self.eps
    }

    pub fn focus_hats(&self) -> &[f64] {
        &self.zhat
    }

    /// Plane coordinates (length `n`) of focus `i`.
    pub fn focus(&self, i: usize) -> &[f64] {
        &self.foci[i * self.n..(i + 1) * self.n]
    }

    pub fn foci_flat(&self) -> &[f64] {
        &self.foci
    }

    pub fn ellipsoid(&self, i: usize) -> Ellipsoid {
        let mut focus = self.focus(i).to_vec();
        focus.push(self.plane.height());
        Ellipsoid::new(focus, self.d[i]).unwrap()
    }

    /// Effective `alpha = d_1 / M`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn max_focus_distance(&self) -> f64 {
        self.m_max
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Open admissible band `(c_l d_1, c_r d_1)` for the free focal
    /// parameters.
    pub fn focal_bounds(&self) -> (f64, f64) {
        (self.c_l * self.d[0], self.c_r * self.d[0])
    }

    /// Rebuild with a different focal-parameter vector (eccentricities are
    /// recomputed). Lengths must match.
    pub fn with_focal_params(&self, d: Vec<f64>) -> Result<Self> {
        if d.len() != self.d.len() {
            return Err(Error::InvalidParameter(
                "focal parameter count does not match patch count".into(),
            ));
        }
        let mut out = self.clone();
        for (i, &di) in d.iter().enumerate() {
            out.set_focal(i, di)?;
        }
        Ok(out)
    }

    fn set_focal(&mut self, i: usize, d: f64) -> Result<()> {
        self.eps[i] = crate::geometry::eccentricity_from_norm(self.z_norm[i], d)?;
        self.d[i] = d;
        Ok(())
    }

    /// Assemble a reflector from an energy-normalized discretization. The
    /// discretization order is preserved except that the maximum-weight
    /// point is swapped to index 0 (the reference patch). Free focal
    /// parameters start just inside the upper admissible bound.
    fn assemble(
        td: &TargetDiscretization,
        cap: SphericalCap,
        plane: TargetPlane,
        alpha: f64,
        reference_focal: Option<f64>,
    ) -> Result<Self> {
        let n = td.dim();
        let k = td.len();
        // reference = maximum weight, ties to the smallest index
        let mut ref_idx = 0;
        for i in 1..k {
            if td.weights()[i] > td.weights()[ref_idx] {
                ref_idx = i;
            }
        }
        let order: Vec<usize> = std::iter::once(ref_idx)
            .chain((0..k).filter(|&i| i != ref_idx))
            .collect();

        let h = plane.height();
        let mut foci = Vec::with_capacity(k * n);
        let mut weights = Vec::with_capacity(k);
        let mut zhat = Vec::with_capacity(k * (n + 1));
        let mut z_norm = Vec::with_capacity(k);
        let mut m_max = 0.0f64;
        let min_last = cap.min_last();
        let sin_cap = (1.0 - min_last * min_last).max(0.0).sqrt();
        let mut gamma = f64::NEG_INFINITY;
        let mut gamma_ref = f64::NEG_INFINITY;
        for (slot, &i) in order.iter().enumerate() {
            let p = td.point(i);
            foci.extend_from_slice(p);
            weights.push(td.weights()[i]);
            let horiz2 = dot(p, p);
            let norm = (horiz2 + h * h).sqrt();
            z_norm.push(norm);
            m_max = m_max.max(norm);
            for &c in p {
                zhat.push(c / norm);
            }
            zhat.push(h / norm);
            // max over the cap of m . zhat, attained on the cap rim since
            // the last component of zhat is negative
            let g = horiz2.sqrt() / norm * sin_cap + h / norm * min_last;
            gamma = gamma.max(g);
            if slot == 0 {
                gamma_ref = g;
            }
        }
        if !(gamma < 1.0) {
            return Err(Error::ApertureTooWide { gamma });
        }

        let d1 = reference_focal.unwrap_or(alpha * m_max);
        if !(d1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "reference focal parameter must be positive, got {d1}"
            )));
        }
        let c_l = (1.0 - gamma) / 2.0;
        let s = (1.0 + d1 * d1 / (m_max * m_max)).sqrt() - d1 / m_max;
        let c_r = 2.0 / (1.0 - gamma_ref * s);

        let mut refl = Self {
            n,
            plane,
            cap,
            zhat,
            z_norm,
            foci,
            weights,
            d: vec![0.0; k],
            eps: vec![0.0; k],
            m_max,
            gamma,
            gamma_ref,
            alpha: d1 / m_max,
            c_l,
            c_r,
        };
        refl.set_focal(0, d1)?;
        let init = c_r * d1 * (1.0 - BOUND_SHAVE);
        for i in 1..k {
            refl.set_focal(i, init)?;
        }
        Ok(refl)
    }

    /// Polar radius of the envelope along `x` together with the owning patch
    /// (smallest index on ties).
    #[inline]
    fn assign(&self, x: &[f64]) -> (usize, f64) {
        assign_ray(&self.d, &self.eps, &self.zhat, self.n + 1, x)
    }
}

#[inline]
fn dot_dyn(a: &[f64], b: &[f64], w: usize) -> f64 {
    match w {
        3 => a[0] * b[0] + a[1] * b[1] + a[2] * b[2],
        7 => {
            a[0] * b[0]
                + a[1] * b[1]
                + a[2] * b[2]
                + a[3] * b[3]
                + a[4] * b[4]
                + a[5] * b[5]
                + a[6] * b[6]
        }
        _ => a[..w].iter().zip(&b[..w]).map(|(p, q)| p * q).sum(),
    }
}

/// Innermost-patch search. The comparison is division-free: with positive
/// denominators, `d_i / denom_i < best` iff `d_i < best * denom_i`; the
/// division runs only on improvement.
#[inline]
fn assign_ray(d: &[f64], eps: &[f64], zhat: &[f64], w: usize, x: &[f64]) -> (usize, f64) {
    let denom0 = 1.0 - eps[0] * dot_dyn(&zhat[..w], x, w);
    let mut best = 0usize;
    let mut best_rho = d[0] / denom0;
    for i in 1..d.len() {
        let u = dot_dyn(&zhat[i * w..(i + 1) * w], x, w);
        let denom = 1.0 - eps[i] * u;
        if d[i] < best_rho * denom {
            best = i;
            best_rho = d[i] / denom;
        }
    }
    (best, best_rho)
}

/// Index of the ellipsoid supporting the reflector along `x` (the innermost
/// patch), with the minimizing radius. Ties go to the smallest index.
/// Meaningful for directions in the source aperture.
pub fn supporting_index(r: &Reflector, x: &Direction) -> (usize, f64) {
    r.assign(x.as_ref())
}

/// A frozen batch of source rays with their intensities.
///
/// `q` is the intensity sum in ray-index order; `sigma_gamma` the aperture
/// surface measure. Reusing one batch across builder iterations makes the
/// delivered measure a deterministic function of the focal parameters.
#[derive(Debug, Clone)]
pub struct RayBatch {
    coords: Vec<f64>,
    intensities: Vec<f64>,
    n: usize,
    q: f64,
    min_positive_intensity: f64,
    sigma_gamma: f64,
}

impl RayBatch {
    /// Draw `count` cap-uniform rays with intensity callback `intensity`.
    pub fn sample<I: Fn(&[f64]) -> f64>(
        cap: &SphericalCap,
        n: usize,
        count: usize,
        seed: u64,
        intensity: I,
    ) -> Self {
        let coords = sample_cap_flat(cap, n, count, seed);
        let intensities: Vec<f64> = coords.chunks_exact(n + 1).map(|m| intensity(m)).collect();
        let q = intensities.iter().sum();
        let min_positive_intensity = intensities
            .iter()
            .copied()
            .filter(|v| *v > 0.0)
            .fold(f64::INFINITY, f64::min);
        Self {
            coords,
            intensities,
            n,
            q,
            min_positive_intensity,
            sigma_gamma: cap_surface_area(cap, n),
        }
    }

    /// Uniform unit-intensity batch.
    pub fn uniform(cap: &SphericalCap, n: usize, count: usize, seed: u64) -> Self {
        Self::sample(cap, n, count, seed, |_| 1.0)
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn ray(&self, j: usize) -> &[f64] {
        &self.coords[j * (self.n + 1)..(j + 1) * (self.n + 1)]
    }

    pub fn total_intensity(&self) -> f64 {
        self.q
    }

    pub fn sigma_gamma(&self) -> f64 {
        self.sigma_gamma
    }

    /// Smallest measure increment a single ray can contribute to a patch.
    pub fn ray_quantum(&self) -> f64 {
        self.sigma_gamma / self.intensities.len() as f64 * self.min_positive_intensity
    }
}

/// Monte Carlo estimate of the measure delivered to each focus.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureEvaluation {
    /// Delivered energy per patch: `(sigma_gamma / N) * sum_{j in patch} I_j`.
    pub mu: Vec<f64>,
    /// Rays assigned to each patch; sums to the batch size.
    pub counts: Vec<u64>,
    pub total_rays: usize,
    /// Sum of ray intensities over the whole batch.
    pub q: f64,
    pub sigma_gamma: f64,
}

/// Assign every batch ray to its supporting patch and accumulate the
/// delivered measure. Parallel over fixed-size ray chunks; chunk partials
/// are folded in order, so the result is identical at any thread count.
pub fn evaluate_measure_on_batch(r: &Reflector, batch: &RayBatch) -> MeasureEvaluation {
    evaluate_measure_on_prefix(r, batch, batch.len())
}

/// Same as [`evaluate_measure_on_batch`] but restricted to the first `len`
/// rays (a prefix of a counter-based batch is itself a valid batch).
fn evaluate_measure_on_prefix(r: &Reflector, batch: &RayBatch, len: usize) -> MeasureEvaluation {
    let k = r.len();
    let w = r.n + 1;
    let partials: Vec<(Vec<f64>, Vec<u64>)> = batch.coords[..len * w]
        .par_chunks(RAY_CHUNK * w)
        .enumerate()
        .map(|(ci, rays)| {
            let mut sums = vec![0.0f64; k];
            let mut counts = vec![0u64; k];
            let base = ci * RAY_CHUNK;
            for (local, x) in rays.chunks_exact(w).enumerate() {
                let (i, _) = r.assign(x);
                sums[i] += batch.intensities[base + local];
                counts[i] += 1;
            }
            (sums, counts)
        })
        .collect();
    let mut sums = vec![0.0f64; k];
    let mut counts = vec![0u64; k];
    for (ps, pc) in &partials {
        for i in 0..k {
            sums[i] += ps[i];
            counts[i] += pc[i];
        }
    }
    let scale = batch.sigma_gamma / len as f64;
    let q = batch.intensities[..len].iter().sum();
    MeasureEvaluation {
        mu: sums.iter().map(|s| scale * s).collect(),
        counts,
        total_rays: len,
        q,
        sigma_gamma: batch.sigma_gamma,
    }
}

/// Draw `count` rays and evaluate the delivered measure; deterministic in
/// `(seed, count)`.
pub fn evaluate_measure<I: Fn(&[f64]) -> f64>(
    r: &Reflector,
    count: usize,
    intensity: I,
    seed: u64,
) -> MeasureEvaluation {
    let batch = RayBatch::sample(&r.cap(), r.dim(), count, seed, intensity);
    evaluate_measure_on_batch(r, &batch)
}

/// Residual between the delivered measure and the target weights, normalized
/// by the raw intensity sum `Q`: `sqrt(sum_i (mu_i - pi_i)^2) / Q`.
pub fn residual(ev: &MeasureEvaluation, weights: &[f64]) -> Result<f64> {
    if ev.mu.len() != weights.len() {
        return Err(Error::InvalidParameter(
            "weight count does not match patch count".into(),
        ));
    }
    if ev.q <= 0.0 {
        return Err(Error::DegenerateSource);
    }
    Ok(l2_diff(&ev.mu, weights) / ev.q)
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Convergence metric used by the builder: the deviation relative to the
/// total source energy, `||mu - pi||_2 / sum(pi)`. The raw-`Q` form in
/// [`residual`] differs by the constant factor `sigma_gamma / N` and is
/// reported alongside it.
pub fn relative_residual(mu: &[f64], weights: &[f64], total_energy: f64) -> f64 {
    l2_diff(mu, weights) / total_energy
}

/// Options for [`build_reflector`].
#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Convergence tolerance on the relative residual.
    pub epsilon: f64,
    /// Rays per evaluation; `None` selects `max(100_000, 200 K)`.
    pub rays: Option<usize>,
    /// Reference scale `d_1 = alpha * max_i |z_i|`.
    pub alpha: f64,
    /// Explicit reference focal parameter; overrides `alpha` when set.
    pub reference_focal: Option<f64>,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            rays: None,
            alpha: 4.0,
            reference_focal: None,
            max_iterations: 10_000,
            seed: 0,
        }
    }
}

/// Which rule ended a build.
///
/// `Residual` is the plain tolerance check. `RayResolution` fires at an
/// accepted iterate where every free patch sits within one ray quantum of
/// its acceptance ceiling: no focal-parameter move can change any patch by
/// less than a whole ray, so the iterate is a fixed point of the dynamics at
/// the batch's statistical resolution. The residual at such a point is the
/// attainable floor for the given ray count (roughly `K / 2N` relative).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergedBy {
    Residual,
    RayResolution,
}

/// Convergence record of one build.
#[derive(Debug, Clone)]
pub struct BuildReport {
    /// Proposals evaluated after the initial reflector.
    pub iterations: usize,
    /// Relative residual of every evaluated candidate, in order.
    pub residual_history: Vec<f64>,
    /// Relative residual of the returned reflector on the frozen batch.
    pub final_residual: f64,
    /// Raw-Q residual of the returned reflector on the frozen batch.
    pub final_residual_raw_q: f64,
    /// Relative residual on a fresh ray batch (out-of-sample check).
    pub out_of_sample_residual: f64,
    pub rays_per_iteration: usize,
    /// Target-density evaluations consumed by the whole build (the
    /// discretization's count, i.e. K).
    pub density_evaluations: usize,
    /// Proposals accepted into the monotone sequence.
    pub accepted_iterations: usize,
    /// Times a proposal hit the lower focal bound and was clamped.
    pub clamp_events: usize,
    /// Largest value of `mu_i - (pi_i + eps/K)` seen at any acceptance;
    /// nonpositive by construction.
    pub max_accept_violation: f64,
    /// Evaluations spent on the coarse warm-up prefixes (excluded from
    /// `iterations` and `residual_history`, which cover the full batch).
    pub warmup_iterations: usize,
    /// Which rule ended the build.
    pub converged_by: ConvergedBy,
}

/// The initial reflector: reference patch at `d_1 = alpha * max|z_i|`, every
/// other focal parameter just inside the upper bound so the reference
/// captures all energy.
pub fn initial_reflector(
    td: &TargetDiscretization,
    cap: SphericalCap,
    plane: TargetPlane,
    alpha: f64,
) -> Result<Reflector> {
    Reflector::assemble(td, cap, plane, alpha, None)
}

/// Reference focal parameter that anchors the build to a constant-radius
/// solution: the ellipsoid with focus distance `focus_norm` touching the
/// sphere of the given radius at the antipodal direction of its focus,
/// `d = 2 r (a + r) / (a + 2 r)`.
pub fn sphere_anchored_focal(radius: f64, focus_norm: f64) -> f64 {
    2.0 * radius * (focus_norm + radius) / (focus_norm + 2.0 * radius)
}

/// Per-stage state of the accept/halve iteration.
struct StageDriver<'a> {
    refl: &'a mut Reflector,
    weights: &'a [f64],
    total_energy: f64,
    epsilon: f64,
    eps_per_k: f64,
    lower_bound: f64,
    clamp_floor: f64,
    accepted: Vec<f64>,
    delta: Vec<f64>,
}

struct StageOutcome {
    converged: Option<ConvergedBy>,
    iterations: usize,
    accepted_iterations: usize,
    clamp_events: usize,
    max_accept_violation: f64,
    history: Vec<f64>,
    last_res: f64,
    last_ev: MeasureEvaluation,
}

impl StageDriver<'_> {
    /// Raise any focal parameter whose patch overshoots its ceiling on the
    /// (finer) batch prefix. Needed at stage handoffs: the monotone iteration
    /// can only lower parameters, so refinement-induced overshoots must be
    /// repaired upward before it can make progress.
    fn repair(&mut self, batch: &RayBatch, len: usize) -> Result<usize> {
        let k = self.refl.len();
        let init_cap = {
            let (_, hi) = self.refl.focal_bounds();
            hi * (1.0 - BOUND_SHAVE)
        };
        let mut passes = 0;
        loop {
            let ev = evaluate_measure_on_prefix(self.refl, batch, len);
            let violators: Vec<usize> = (1..k)
                .filter(|&i| ev.mu[i] > self.weights[i] + self.eps_per_k)
                .collect();
            if violators.is_empty() {
                break;
            }
            passes += 1;
            if passes > 400 {
                return Err(Error::NonConvergence {
                    iterations: passes,
                    last: relative_residual(&ev.mu, self.weights, self.total_energy),
                    history: Vec::new(),
                });
            }
            for &i in &violators {
                let d = (self.refl.focal_params()[i] * 1.02).min(init_cap);
                self.refl.set_focal(i, d)?;
            }
        }
        self.accepted.copy_from_slice(self.refl.focal_params());
        Ok(passes)
    }

    /// Run the accept/halve loop on the first `len` rays until the residual
    /// tolerance (only if `allow_residual_exit`), the ray-resolution fixed
    /// point, or the iteration cap.
    fn run(
        &mut self,
        batch: &RayBatch,
        len: usize,
        max_iterations: usize,
        allow_residual_exit: bool,
    ) -> Result<StageOutcome> {
        let k = self.refl.len();
        let quantum = batch.sigma_gamma / len as f64 * batch.min_positive_intensity;
        let mut out = StageOutcome {
            converged: None,
            iterations: 0,
            accepted_iterations: 0,
            clamp_events: 0,
            max_accept_violation: f64::NEG_INFINITY,
            history: Vec::new(),
            last_res: f64::NAN,
            last_ev: evaluate_measure_on_prefix(self.refl, batch, len),
        };
        let mut res = relative_residual(&out.last_ev.mu, self.weights, self.total_energy);
        out.history.push(res);

        loop {
            if allow_residual_exit && res <= self.epsilon {
                out.converged = Some(ConvergedBy::Residual);
                break;
            }
            if out.iterations >= max_iterations {
                break;
            }
            let violators: Vec<usize> = (1..k)
                .filter(|&i| out.last_ev.mu[i] > self.weights[i] + self.eps_per_k)
                .collect();
            if std::env::var_os("GOAS_BUILD_TRACE").is_some() && out.iterations % 50 == 0 {
                eprintln!(
                    "trace len={len} iter={} acc={} res={res:.3e} |J|={}",
                    out.iterations,
                    out.accepted_iterations,
                    violators.len()
                );
            }
            if violators.is_empty() {
                self.accepted.copy_from_slice(self.refl.focal_params());
                out.accepted_iterations += 1;
                let worst = (1..k)
                    .map(|i| out.last_ev.mu[i] - (self.weights[i] + self.eps_per_k))
                    .fold(f64::NEG_INFINITY, f64::max);
                out.max_accept_violation = out.max_accept_violation.max(worst);
                // Fixed point at ray resolution: every free patch would
                // overshoot its ceiling if it gained even one ray, so no
                // admissible move remains at this batch size.
                if (1..k).all(|i| out.last_ev.mu[i] + quantum > self.weights[i] + self.eps_per_k)
                {
                    out.converged = Some(ConvergedBy::RayResolution);
                    break;
                }
                // Grow each step from the size that was just accepted,
                // capped at a third of the current value. Restarting every
                // step at d/3 re-bisects each cycle from scratch (tens of
                // evaluations per accepted move); doubling keeps steps at
                // the scale where each patch's capture actually changes.
                for i in 1..k {
                    let cap_step = self.accepted[i] / 3.0;
                    self.delta[i] = if self.delta[i] > 0.0 {
                        (2.0 * self.delta[i]).min(cap_step)
                    } else {
                        cap_step
                    };
                }
            } else {
                for &i in &violators {
                    self.delta[i] *= 0.5;
                }
            }

            for i in 1..k {
                let mut proposal = self.accepted[i] - self.delta[i];
                if proposal <= self.lower_bound {
                    proposal = self.clamp_floor;
                    out.clamp_events += 1;
                }
                self.refl.set_focal(i, proposal)?;
            }

            out.last_ev = evaluate_measure_on_prefix(self.refl, batch, len);
            res = relative_residual(&out.last_ev.mu, self.weights, self.total_energy);
            out.history.push(res);
            out.iterations += 1;
        }
        if out.converged != Some(ConvergedBy::Residual) {
            // leave the reflector at the last accepted iterate, not a
            // dangling proposal (no-op for a ray-resolution exit, which
            // breaks right after an acceptance)
            let accepted = self.accepted.clone();
            for (i, &d) in accepted.iter().enumerate() {
                self.refl.set_focal(i, d)?;
            }
        }
        out.last_res = res;
        Ok(out)
    }
}

/// Construct a reflector delivering the discretized target measure.
///
/// Requires energy-normalized weights (their sum must equal the aperture
/// measure of the uniform unit-intensity source). One frozen ray batch is
/// drawn up front and reused for every evaluation, so the delivered measure
/// is a deterministic function of the focal parameters. The iteration runs
/// through a fixed schedule of batch prefixes (1/64, 1/16, 1/4, then the
/// full batch): coarse prefixes move the focal parameters through the
/// initial capture regime cheaply, and each stage hands its parameters and
/// step sizes to the next. Contract checks (acceptance ceilings, residuals,
/// the reported history) come from the full-batch stage. A final pass on a
/// fresh batch reports an out-of-sample residual.
pub fn build_reflector(
    td: &TargetDiscretization,
    cap: SphericalCap,
    plane: TargetPlane,
    opts: &BuildOptions,
) -> Result<(Reflector, BuildReport)> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            opts.epsilon
        )));
    }
    let k = td.len();
    let n = td.dim();
    let total_energy: f64 = td.weights().iter().sum();
    let sigma = cap_surface_area(&cap, n);
    if ((total_energy - sigma) / sigma).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "weights are not energy-normalized: sum {total_energy} vs aperture measure {sigma}"
        )));
    }

    let rays = opts.rays.unwrap_or_else(|| 100_000.max(200 * k));
    let batch = RayBatch::uniform(&cap, n, rays, opts.seed);

    let mut refl = Reflector::assemble(td, cap, plane, opts.alpha, opts.reference_focal)?;
    let weights = refl.weights().to_vec();
    let (lower_bound, _) = refl.focal_bounds();
    let mut driver = StageDriver {
        accepted: refl.focal_params().to_vec(),
        refl: &mut refl,
        weights: &weights,
        total_energy,
        epsilon: opts.epsilon,
        eps_per_k: opts.epsilon / k as f64,
        lower_bound,
        clamp_floor: lower_bound * (1.0 + BOUND_SHAVE),
        delta: vec![0.0f64; k],
    };

    // prefix schedule; a stage is skipped when it cannot resolve at least a
    // few rays per patch beyond the previous one
    let mut lens: Vec<usize> = [64usize, 16, 4]
        .iter()
        .map(|div| (rays / div).max(8 * k))
        .filter(|&l| l < rays)
        .collect();
    lens.dedup();
    lens.push(rays);

    let mut warmup_iterations = 0;
    let mut report = BuildReport {
        iterations: 0,
        residual_history: Vec::new(),
        final_residual: f64::NAN,
        final_residual_raw_q: f64::NAN,
        out_of_sample_residual: f64::NAN,
        rays_per_iteration: rays,
        density_evaluations: td.density_evaluations(),
        accepted_iterations: 0,
        clamp_events: 0,
        max_accept_violation: f64::NEG_INFINITY,
        warmup_iterations: 0,
        converged_by: ConvergedBy::Residual,
    };

    let stage_count = lens.len();
    let mut final_ev = None;
    for (s, &len) in lens.iter().enumerate() {
        let last = s + 1 == stage_count;
        if s > 0 {
            warmup_iterations += driver.repair(&batch, len)?;
            // quantum shrinks with the finer prefix; carried steps shrink
            // accordingly so cycles stay shallow
            for d in driver.delta.iter_mut() {
                *d *= 0.25;
            }
        }
        let out = driver.run(&batch, len, opts.max_iterations, last)?;
        if last {
            if out.converged.is_none() {
                return Err(Error::NonConvergence {
                    iterations: out.iterations,
                    last: out.last_res,
                    history: out.history,
                });
            }
            report.iterations = out.iterations;
            report.residual_history = out.history;
            report.accepted_iterations = out.accepted_iterations;
            report.clamp_events = out.clamp_events;
            report.max_accept_violation = out.max_accept_violation;
            report.converged_by = out.converged.unwrap();
            // on either exit rule the reflector matches last_ev: a residual
            // exit keeps the converged proposal, a ray-resolution exit
            // breaks right after evaluating the accepted iterate
            final_ev = Some(out.last_ev);
        } else {
            warmup_iterations += out.iterations;
        }
    }
    report.warmup_iterations = warmup_iterations;

    let ev = final_ev.expect("final stage always runs");
    report.final_residual = relative_residual(&ev.mu, &weights, total_energy);
    report.final_residual_raw_q = residual(&ev, &weights)?;
    let fresh = RayBatch::uniform(&cap, n, rays, child_seed(opts.seed, "validation"));
    let oos = evaluate_measure_on_batch(&refl, &fresh);
    report.out_of_sample_residual = relative_residual(&oos.mu, &weights, total_energy);
    Ok((refl, report))
}

/// Delivered measure of patch `index` at each focal parameter in `d_values`,
/// evaluated on one shared ray batch. With frozen rays the response is an
/// exact nonincreasing step function of the focal parameter.
pub fn monotonicity_probe(
    r: &Reflector,
    index: usize,
    d_values: &[f64],
    batch: &RayBatch,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(d_values.len());
    let mut probe = r.clone();
    for &d in d_values {
        probe.set_focal(index, d)?;
        let ev = evaluate_measure_on_batch(&probe, batch);
        out.push(ev.mu[index]);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Serialization

/// Provenance recorded next to a serialized reflector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectorProvenance {
    pub seed: u64,
    pub epsilon: f64,
    pub residual: f64,
}

fn fmt_f64(x: f64) -> String {
    // 17 significant digits; enough for bit-faithful f64 round trips.
    format!("{:.16e}", x)
}

fn write_f64_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push(']');
}

/// Serialize a reflector to the documented JSON schema. All floating-point
/// numbers carry 17 significant digits, so a load reproduces the reflector
/// bit for bit.
pub fn write_reflector<W: Write>(
    w: &mut W,
    r: &Reflector,
    prov: &ReflectorProvenance,
) -> Result<()> {
    let mut s = String::new();
    s.push_str("{\n");
    s.push_str(&format!("  \"n\": {},\n", r.n));
    s.push_str(&format!("  \"h\": {},\n", fmt_f64(r.plane.height())));
    s.push_str(&format!("  \"h_c\": {},\n", fmt_f64(r.cap.height())));
    s.push_str(&format!("  \"alpha\": {},\n", fmt_f64(r.alpha)));
    s.push_str(&format!("  \"K\": {},\n", r.len()));
    s.push_str("  \"foci\": [");
    for i in 0..r.len() {
        if i > 0 {
            s.push(',');
        }
        s.push_str("\n    ");
        write_f64_array(&mut s, r.focus(i));
    }
    s.push_str("\n  ],\n");
    s.push_str("  \"weights\": ");
    write_f64_array(&mut s, &r.weights);
    s.push_str(",\n  \"focal_params\": ");
    write_f64_array(&mut s, &r.d);
    s.push_str(&format!(",\n  \"seed\": {},\n", prov.seed));
    s.push_str(&format!("  \"epsilon\": {},\n", fmt_f64(prov.epsilon)));
    s.push_str(&format!("  \"residual\": {}\n", fmt_f64(prov.residual)));
    s.push_str("}\n");
    w.write_all(s.as_bytes())?;
    Ok(())
}

#[derive(Deserialize)]
struct ReflectorFileRaw {
    n: usize,
    h: f64,
    h_c: f64,
    #[allow(dead_code)]
    alpha: f64,
    #[serde(rename = "K")]
    k: usize,
    foci: Vec<Vec<f64>>,
    weights: Vec<f64>,
    focal_params: Vec<f64>,
    seed: u64,
    epsilon: f64,
    residual: f64,
}

fn file_err(field: &str, message: impl Into<String>) -> Error {
    Error::ReflectorFile {
        field: field.into(),
        message: message.into(),
    }
}

/// Parse a serialized reflector, validating every field.
pub fn read_reflector(text: &str) -> Result<(Reflector, ReflectorProvenance)> {
    let raw: ReflectorFileRaw =
        serde_json::from_str(text).map_err(|e| file_err("(document)", e.to_string()))?;
    if raw.n == 0 {
        return Err(file_err("n", "dimension must be positive"));
    }
    let plane = TargetPlane::new(raw.h).map_err(|e| file_err("h", e.to_string()))?;
    let cap = SphericalCap::new(raw.h_c).map_err(|e| file_err("h_c", e.to_string()))?;
    if raw.foci.len() != raw.k {
        return Err(file_err("foci", format!("expected {} rows", raw.k)));
    }
    if raw.weights.len() != raw.k {
        return Err(file_err("weights", format!("expected {} entries", raw.k)));
    }
    if raw.focal_params.len() != raw.k {
        return Err(file_err(
            "focal_params",
            format!("expected {} entries", raw.k),
        ));
    }
    if raw.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(file_err("weights", "weights must be finite and nonnegative"));
    }
    if raw.focal_params.iter().any(|d| !(*d > 0.0)) {
        return Err(file_err(
            "focal_params",
            "focal parameters must be positive",
        ));
    }
    let mut points = Vec::with_capacity(raw.k * raw.n);
    for (i, row) in raw.foci.iter().enumerate() {
        if row.len() != raw.n {
            return Err(file_err("foci", format!("row {i} has length {}", row.len())));
        }
        if row.iter().any(|c| !c.is_finite()) {
            return Err(file_err("foci", format!("row {i} has a non-finite value")));
        }
        points.extend_from_slice(row);
    }
    let td = TargetDiscretization::from_parts(points, raw.weights, raw.n, SequenceKind::Hammersley)
        .map_err(|e| file_err("weights", e.to_string()))?;
    // Weights are stored normalized; the stored order already has the
    // reference first, so assembly must not reorder anything.
    let mut refl = Reflector::assemble(&td, cap, plane, 4.0, Some(raw.focal_params[0]))
        .map_err(|e| file_err("foci", e.to_string()))?;
    if refl.focus(0) != td.point(0) {
        return Err(file_err(
            "weights",
            "reference focus (index 0) must carry the maximum weight",
        ));
    }
    for (i, &d) in raw.focal_params.iter().enumerate() {
        refl.set_focal(i, d)
            .map_err(|e| file_err("focal_params", e.to_string()))?;
    }
    Ok((
        refl,
        ReflectorProvenance {
            seed: raw.seed,
            epsilon: raw.epsilon,
            residual: raw.residual,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{discretize_target, normalize_energy, TargetBox};
    use crate::targets::spherical_oracle_density;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn unit_cap() -> SphericalCap {
        SphericalCap::new(1.0 - 1.0 / 5f64.sqrt()).unwrap()
    }

    fn plane() -> TargetPlane {
        TargetPlane::new(-1.0).unwrap()
    }

    /// Two symmetric foci with equal weights on the reference cap.
    fn two_point_target() -> TargetDiscretization {
        let points = vec![0.8, 0.0, -0.8, 0.0];
        let weights = vec![1.0, 1.0];
        let td =
            TargetDiscretization::from_parts(points, weights, 2, SequenceKind::Random).unwrap();
        let sigma = cap_surface_area(&unit_cap(), 2);
        normalize_energy(&td, sigma).unwrap()
    }

    #[test]
    fn single_patch_gets_everything() {
        let td =
            TargetDiscretization::from_parts(vec![0.1, 0.2], vec![3.0], 2, SequenceKind::Random)
                .unwrap();
        let sigma = cap_surface_area(&unit_cap(), 2);
        let td = normalize_energy(&td, sigma).unwrap();
        let r = initial_reflector(&td, unit_cap(), plane(), 4.0).unwrap();
        let ev = evaluate_measure(&r, 5_000, |_| 1.0, 7);
        assert_eq!(ev.counts, vec![5_000]);
        // all rays on one patch: mu_1 = sigma(Gamma)
        approx(ev.mu[0], sigma, 1e-12 * sigma);
        // K = 1 converges immediately
        let (_, report) = build_reflector(
            &td,
            unit_cap(),
            plane(),
            &BuildOptions {
                rays: Some(5_000),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn supporting_index_prefers_smaller_radius_and_index() {
        let td = two_point_target();
        let r = initial_reflector(&td, unit_cap(), plane(), 4.0).unwrap();
        // Shrink patch 2 drastically: along its focus direction it wins.
        let (lo, _) = r.focal_bounds();
        let d2 = lo * 1.05;
        let r2 = r.with_focal_params(vec![r.focal_params()[0], d2]).unwrap();
        let toward = crate::geometry::chart_to_sphere(&[-0.35, 0.0]).unwrap();
        let (idx, rho) = supporting_index(&r2, &toward);
        assert_eq!(idx, 1);
        assert!(rho > 0.0);
    }

    #[test]
    fn exact_ties_break_to_smallest_index() {
        // Three coincident foci, radii (2.0, 1.5, 1.5) along the probe: the
        // tie between patches 1 and 2 resolves to index 1.
        let td = TargetDiscretization::from_parts(
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![3.0, 1.0, 1.0],
            2,
            SequenceKind::Random,
        )
        .unwrap();
        let sigma = cap_surface_area(&unit_cap(), 2);
        let td = normalize_energy(&td, sigma).unwrap();
        let base = initial_reflector(&td, unit_cap(), plane(), 4.0).unwrap();
        // coincident foci share |z| = 1, so equal d gives equal radii
        let r = base
            .with_focal_params(vec![2.0, 1.5, 1.5])
            .unwrap();
        let x = Direction::new(vec![0.0, 0.0, 1.0]).unwrap();
        let (idx, rho) = supporting_index(&r, &x);
        assert_eq!(idx, 1);
        let expected = crate::geometry::ellipsoid_radius(&r.ellipsoid(1), &x);
        approx(rho, expected, 1e-15);
    }

    #[test]
    fn initial_reflector_reference_captures_all_energy() {
        let td = two_point_target();
        let r = initial_reflector(&td, unit_cap(), plane(), 4.0).unwrap();
        let ev = evaluate_measure(&r, 20_000, |_| 1.0, 3);
        assert_eq!(ev.counts[1], 0, "free patches must start starved");
        let (lo, hi) = r.focal_bounds();
        assert!(r.focal_params()[1] > lo && r.focal_params()[1] < hi);
    }

    #[test]
    fn partition_and_energy_conservation() {
        let td = two_point_target();
        let r = initial_reflector(&td, unit_cap(), plane(), 4.0).unwrap();
        let d1 = r.focal_params()[0];
        let (lo, hi) = r.focal_bounds();
        for frac in [0.2, 0.5, 0.8] {
            let d2 = lo + frac * (hi - lo);
            let rr = r.with_focal_params(vec![d1, d2]).unwrap();
            let ev = evaluate_measure(&rr, 30_000, |_| 1.0, 11);
            assert_eq!(ev.counts.iter().sum::<u64>(), 30_000);
            let total: f64 = ev.mu.iter().sum();
            let expected = ev.sigma_gamma / ev.total_rays as f64 * ev.q;
            approx(total, expected, 1e-12 * expected);
        }
    }

    #[test]
    fn symmetric_foci_split_energy_evenly() {
        let td = two_point_target();
        let r = initial_reflector(&td, unit_cap(), plane(), 4.0).unwrap();
        // equal focal parameters: symmetry gives equal patches up to MC noise
        let d1 = r.focal_params()[0];
        let rr = r.with_focal_params(vec![d1, d1]).unwrap();
        let n = 100_000;
        let ev = evaluate_measure(&rr, n, |_| 1.0, 5);
        let tol = 3.0 / (n as f64).sqrt() * ev.sigma_gamma;
        approx(ev.mu[0], ev.mu[1], tol);
    }

    #[test]
    fn residual_examples() {
        let ev = MeasureEvaluation {
            mu: vec![1.0, 2.0],
            counts: vec![10, 20],
            total_rays: 30,
            q: 30.0,
            sigma_gamma: 1.0,
        };
        assert_eq!(residual(&ev, &[1.0, 2.0]).unwrap(), 0.0);
        // mu = pi + (Q delta, 0): residual = delta
        let delta = 1e-3;
        let ev2 = MeasureEvaluation {
            mu: vec![1.0 + 30.0 * delta, 2.0],
            ..ev.clone()
        };
        approx(residual(&ev2, &[1.0, 2.0]).unwrap(), delta, 1e-15);
        let bad = MeasureEvaluation { q: 0.0, ..ev };
        assert!(matches!(
            residual(&bad, &[1.0, 2.0]),
            Err(Error::DegenerateSource)
        ));
    }

    #[test]
    fn monotone_response_with_frozen_rays() {
        let td = two_point_target();
        let r = initial_reflector(&td, unit_cap(), plane(), 4.0).unwrap();
        let batch = RayBatch::uniform(&unit_cap(), 2, 20_000, 13);
        let (lo, hi) = r.focal_bounds();
        let values: Vec<f64> = (0..25)
            .map(|j| hi * (1.0 - 1e-9) - j as f64 * (hi - lo) * 0.9 / 24.0)
            .collect();
        let mu = monotonicity_probe(&r, 1, &values, &batch).unwrap();
        // d near the upper bound starves the patch
        assert_eq!(mu[0], 0.0);
        // nonincreasing d values yield nondecreasing measures, exactly
        for w in mu.windows(2) {
            assert!(w[1] >= w[0], "frozen-ray response must be monotone: {mu:?}");
        }
    }

    #[test]
    fn two_patch_build_matches_brute_force() {
        let td = two_point_target();
        let opts = BuildOptions {
            rays: Some(20_000),
            seed: 21,
            ..Default::default()
        };
        let (built, report) = build_reflector(&td, unit_cap(), plane(), &opts).unwrap();
        assert!(report.final_residual <= opts.epsilon);
        assert!(report.max_accept_violation <= 0.0);

        // Brute force: scan d_2 on the same frozen batch for the value
        // closest in delivered measure to the target weight.
        let batch = RayBatch::uniform(&unit_cap(), 2, 20_000, 21);
        let base = initial_reflector(&td, unit_cap(), plane(), 4.0).unwrap();
        let (lo, hi) = base.focal_bounds();
        let steps = 4000;
        let grid: Vec<f64> = (0..=steps)
            .map(|j| lo * (1.0 + 1e-9) + j as f64 * (hi * (1.0 - 1e-9) - lo) / steps as f64)
            .collect();
        let mu = monotonicity_probe(&base, 1, &grid, &batch).unwrap();
        let target = td.weights()[1];
        let best = (0..grid.len())
            .min_by(|&a, &b| {
                (mu[a] - target)
                    .abs()
                    .partial_cmp(&(mu[b] - target).abs())
                    .unwrap()
            })
            .unwrap();
        let step = (hi - lo) / steps as f64;
        let d2 = built.focal_params()[1];
        assert!(
            (d2 - grid[best]).abs() <= 2.0 * step,
            "built d2 {d2} vs brute force {} (step {step})",
            grid[best]
        );
    }

    #[test]
    fn build_is_bitwise_deterministic() {
        let td = two_point_target();
        let opts = BuildOptions {
            rays: Some(10_000),
            seed: 31,
            ..Default::default()
        };
        let (a, _) = build_reflector(&td, unit_cap(), plane(), &opts).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| build_reflector(&td, unit_cap(), plane(), &opts).unwrap().0);
        assert_eq!(a.focal_params(), b.focal_params());
        assert_eq!(a, b);
    }

    #[test]
    fn sphere_anchor_closed_form() {
        // a = 1, r = 2: d = 2*2*3/5 = 2.4 solves d = r (1 + eps(d, a)).
        let d = sphere_anchored_focal(2.0, 1.0);
        approx(d, 2.4, 1e-15);
        let eps = crate::geometry::eccentricity_from_norm(1.0, d).unwrap();
        approx(d / (1.0 + eps), 2.0, 1e-12);
    }

    #[test]
    fn small_spherical_build_approximates_sphere() {
        // Coarse version of the analytic verification: K = 60 points over
        // the disk box, anchored reference; the envelope radius should stay
        // within a few percent of 2 away from the patch scale.
        let cap = unit_cap();
        let pl = plane();
        let b = TargetBox::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let td = discretize_target(
            |z| spherical_oracle_density(z, -1.0, &cap, 1.0),
            &b,
            60,
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
            epsilon: 5e-4,
            rays: Some(40_000),
            reference_focal: Some(sphere_anchored_focal(2.0, a)),
            seed: 17,
            ..Default::default()
        };
        let (r, report) = build_reflector(&td, cap, pl, &opts).unwrap();
        assert!(report.final_residual <= 5e-4);
        let probes = crate::geometry::cap_probe_points(&cap, 2, 400);
        let mut worst = 0.0f64;
        for x in &probes {
            let (_, rho) = supporting_index(&r, x);
            worst = worst.max((rho - 2.0).abs() / 2.0);
        }
        assert!(worst < 0.08, "radius deviation {worst}");
    }

    #[test]
    fn serialization_round_trip_is_bit_faithful() {
        let td = two_point_target();
        let opts = BuildOptions {
            rays: Some(10_000),
            seed: 41,
            ..Default::default()
        };
        let (r, report) = build_reflector(&td, unit_cap(), plane(), &opts).unwrap();
        let prov = ReflectorProvenance {
            seed: 41,
            epsilon: opts.epsilon,
            residual: report.final_residual,
        };
        let mut buf = Vec::new();
        write_reflector(&mut buf, &r, &prov).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let (r2, prov2) = read_reflector(&text).unwrap();
        assert_eq!(r, r2);
        assert_eq!(prov, prov2);
        // writing the loaded reflector reproduces the same bytes
        let mut buf2 = Vec::new();
        write_reflector(&mut buf2, &r2, &prov2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn reading_corrupt_files_names_the_field() {
        let err = read_reflector("{ not json").unwrap_err();
        assert!(matches!(err, Error::ReflectorFile { .. }));
        let doc = r#"{"n":2,"h":-1.0,"h_c":0.5,"alpha":4.0,"K":2,
            "foci":[[0.1,0.2],[0.3,0.4]],
            "weights":[1.0],
            "focal_params":[1.0,1.0],
            "seed":0,"epsilon":1e-4,"residual":0.0}"#;
        match read_reflector(doc).unwrap_err() {
            Error::ReflectorFile { field, .. } => assert_eq!(field, "weights"),
            other => panic!("unexpected error {other:?}"),
        }
        let doc = doc.replace("\"weights\":[1.0]", "\"weights\":[1.0,2.0]");
        let doc = doc.replace("\"focal_params\":[1.0,1.0]", "\"focal_params\":[1.0,-1.0]");
        match read_reflector(&doc).unwrap_err() {
            Error::ReflectorFile { field, .. } => assert_eq!(field, "focal_params"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn invalid_epsilon_rejected() {
        let td = two_point_target();
        let opts = BuildOptions {
            epsilon: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            build_reflector(&td, unit_cap(), plane(), &opts),
            Err(Error::InvalidParameter(_))
        ));
    }
}
