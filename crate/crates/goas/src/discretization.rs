//! Point sequences over the target box and the weighted discrete target
//! measure.
//!
//! Three sequence families discretize the target domain: tensor grids,
//! Hammersley low-discrepancy sets, and pseudo-random points. Weights are raw
//! density values; a global normalization enforces the discrete energy
//! balance against the total source energy.

use crate::error::{Error, Result};
use crate::rng::indexed_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Axis-aligned box in the first `n` coordinates of the target plane;
/// concrete carrier for the bounded target domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TargetBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidParameter(
                "box bounds must be nonempty and of equal length".into(),
            ));
        }
        for (j, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) {
                return Err(Error::InvalidParameter(format!(
                    "box axis {j}: lower {l} must be below upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j)).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| *x >= *l && *x <= *u)
    }

    /// Map a unit-cube point into the box.
    pub fn lift(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(j, v)| self.lower[j] + v * self.width(j))
            .collect()
    }
}

/// Which point family discretizes the target measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Uniform,
    Hammersley,
    Random,
}

impl std::str::FromStr for SequenceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "hammersley" => Ok(Self::Hammersley),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidParameter(format!(
                "unknown sequence kind `{other}`"
            ))),
        }
    }
}

/// Radical inverse of `index` in the given base; the 1-D building block of
/// the Hammersley set.
pub fn van_der_corput(index: u64, base: u64) -> Result<f64> {
    if base < 2 {
        return Err(Error::InvalidParameter(format!(
            "radical-inverse base must be at least 2, got {base}"
        )));
    }
    assert!(index >= 1, "radical inverse is defined for index >= 1");
    let mut i = index;
    let mut inv = 0.0;
    let mut scale = 1.0 / base as f64;
    while i > 0 {
        inv += (i % base) as f64 * scale;
        i /= base;
        scale /= base as f64;
    }
    Ok(inv)
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes.iter().all(|p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Generate `k` points of the requested family inside `target_box`, flattened
/// row-major (`k * n` reals).
///
/// * `uniform`: tensor grid of cell centers with `ceil(k^{1/n})` points per
///   axis, truncated to the first `k` in row-major order.
/// * `hammersley`: `(i/k, phi_2(i), phi_3(i), ...)` for `i = 1..k`, radical
///   inverses in the first `n - 1` prime bases, affinely mapped into the box.
/// * `random`: i.i.d. uniform, counter-based in `(seed, index)`.
pub fn generate_sequence(
    kind: SequenceKind,
    k: usize,
    n: usize,
    target_box: &TargetBox,
    seed: u64,
) -> Vec<f64> {
    assert!(k >= 1, "need at least one point");
    assert_eq!(target_box.dim(), n);
    let mut out = Vec::with_capacity(k * n);
    match kind {
        SequenceKind::Uniform => {
            let per_axis = (k as f64).powf(1.0 / n as f64).ceil().max(1.0) as usize;
            let mut idx = vec![0usize; n];
            for _ in 0..k {
                for (j, &ij) in idx.iter().enumerate() {
                    let u = (ij as f64 + 0.5) / per_axis as f64;
                    out.push(target_box.lower()[j] + u * target_box.width(j));
                }
                // row-major increment, last axis fastest
                for j in (0..n).rev() {
                    idx[j] += 1;
                    if idx[j] < per_axis {
                        break;
                    }
                    idx[j] = 0;
                }
            }
        }
        SequenceKind::Hammersley => {
            let bases = first_primes(n.saturating_sub(1));
            for i in 1..=k {
                let mut u = Vec::with_capacity(n);
                u.push(i as f64 / k as f64);
                for &b in &bases {
                    u.push(van_der_corput(i as u64, b).unwrap());
                }
                out.extend(target_box.lift(&u));
            }
        }
        SequenceKind::Random => {
            for i in 0..k {
                let mut rng = indexed_rng(seed, i as u64);
                let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
                out.extend(target_box.lift(&u));
            }
        }
    }
    out
}

/// Discrete target measure: `k` plane points (first `n` coordinates; the
/// plane height is implied) with nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDiscretization {
    points: Vec<f64>,
    weights: Vec<f64>,
    n: usize,
    kind: SequenceKind,
    /// Global normalization applied to the raw weights (1.0 before
    /// [`normalize_energy`]).
    beta: f64,
    density_evaluations: usize,
}

impl TargetDiscretization {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// How many times the target density has been evaluated to produce this
    /// discretization (always exactly `k`).
    pub fn density_evaluations(&self) -> usize {
        self.density_evaluations
    }

    /// Assemble from already-known points and weights (deserialization path).
    pub fn from_parts(points: Vec<f64>, weights: Vec<f64>, n: usize, kind: SequenceKind) -> Result<Self> {
        if n == 0 || points.len() != weights.len() * n || weights.is_empty() {
            return Err(Error::InvalidParameter(
                "inconsistent discretization shapes".into(),
            ));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::DegenerateTarget);
        }
        Ok(Self {
            points,
            weights,
            n,
            kind,
            beta: 1.0,
            density_evaluations: 0,
        })
    }
}

/// Evaluate `density` at `k` sequence points; weights are the raw density
/// values. Performs exactly `k` density evaluations.
pub fn discretize_target<F: Fn(&[f64]) -> f64>(
    density: F,
    target_box: &TargetBox,
    k: usize,
    kind: SequenceKind,
    seed: u64,
) -> Result<TargetDiscretization> {
    let n = target_box.dim();
    let points = generate_sequence(kind, k, n, target_box, seed);
    let mut weights = Vec::with_capacity(k);
    for i in 0..k {
        let value = density(&points[i * n..(i + 1) * n]);
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidDensity { index: i, value });
        }
        // Near-underflow densities are kept with weight zero so the point
        // count stays exactly k.
        weights.push(if value < 1e-300 { 0.0 } else { value });
    }
    if !weights.iter().any(|w| *w > 0.0) {
        return Err(Error::DegenerateTarget);
    }
    Ok(TargetDiscretization {
        points,
        weights,
        n,
        kind,
        beta: 1.0,
        density_evaluations: k,
    })
}

/// Rescale weights so their sum equals the total source energy (the discrete
/// energy-conservation constraint). Preserves weight ratios.
pub fn normalize_energy(
    td: &TargetDiscretization,
    total_source_energy: f64,
) -> Result<TargetDiscretization> {
    let sum: f64 = td.weights.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateTarget);
    }
    let beta = total_source_energy / sum;
    Ok(TargetDiscretization {
        points: td.points.clone(),
        weights: td.weights.iter().map(|w| beta * w).collect(),
        n: td.n,
        kind: td.kind,
        beta: td.beta * beta,
        density_evaluations: td.density_evaluations,
    })
}

/// Axis-aligned bounding box of pilot samples, inflated by `margin` of the
/// width on each side.
pub fn pilot_bounding_box(samples: &[Vec<f64>], margin: f64) -> Result<TargetBox> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidParameter("no pilot samples".into()))?;
    let n = first.len();
    let mut lower = first.clone();
    let mut upper = first.clone();
    for s in samples.iter().skip(1) {
        for j in 0..n {
            lower[j] = lower[j].min(s[j]);
            upper[j] = upper[j].max(s[j]);
        }
    }
    for j in 0..n {
        let w = upper[j] - lower[j];
        if w <= 0.0 {
            return Err(Error::DegenerateBox { axis: j });
        }
        lower[j] -= margin * w;
        upper[j] += margin * w;
    }
    TargetBox::new(lower, upper)
}
