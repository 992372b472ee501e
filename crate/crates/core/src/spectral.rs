//! Truncated Fourier representation of term position signals.
//!
//! A term occurring at positions `p` of a document with `L` tokens is modelled
//! as the characteristic function that equals 1 on every interval `[p-1, p]`
//! and 0 elsewhere on `[0, L]`. Its order-`n` expansion in the orthonormal
//! basis `1/sqrt(L)`, `sqrt(2/L) cos(2πkx/L)`, `sqrt(2/L) sin(2πkx/L)` is
//! stored as the flat vector `(a0, a1, b1, ..., an, bn)`.
//!
//! Because the basis is orthonormal, the overlap integral of two
//! reconstructions is the plain scalar product of their coefficient vectors.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest Fourier order accepted by index-level configuration.
pub const MAX_ORDER: usize = 32;

/// Default Fourier order.
pub const DEFAULT_ORDER: usize = 3;

/// Sorted, 1-based occurrence positions of one term inside one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermPositions {
    positions: Vec<u32>,
    length: u32,
}

impl TermPositions {
    /// Validates that positions are strictly increasing and lie in `1..=length`.
    pub fn new(positions: Vec<u32>, length: u32) -> Result<Self> {
        if length == 0 {
            return Err(Error::invalid("document length must be positive"));
        }
        if let Some(&first) = positions.first() {
            if first == 0 {
                return Err(Error::invalid("positions are 1-based; got 0"));
            }
        }
        if let Some(w) = positions.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "positions must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        if let Some(&last) = positions.last() {
            if last > length {
                return Err(Error::invalid(format!(
                    "position {last} exceeds document length {length}"
                )));
            }
        }
        Ok(Self { positions, length })
    }

    /// Every position of a document, i.e. a term filling the whole body.
    pub fn full(length: u32) -> Result<Self> {
        Self::new((1..=length).collect(), length)
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// How `dot`/`cosine_sim` treat vectors of different order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderPolicy {
    /// Compare on the common lower order.
    #[default]
    Truncate,
    /// Reject mismatched orders.
    Strict,
}

/// Order-`n` Fourier coefficients `(a0, a1, b1, ..., an, bn)` over `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    coeffs: Vec<f64>,
    length: f64,
}

impl SpectralVector {
    pub fn zeros(order: usize, length: f64) -> Self {
        Self {
            coeffs: vec![0.0; 2 * order + 1],
            length,
        }
    }

    /// Wraps a flat coefficient sequence. Its length must be odd and every
    /// entry finite.
    pub fn from_coeffs(coeffs: Vec<f64>, length: f64) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "coefficient count must be 2n+1, got {}",
                coeffs.len()
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid(format!(
                "interval length must be positive, got {length}"
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(Self { coeffs, length })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn a0(&self) -> f64 {
        self.coeffs[0]
    }

    /// Cosine coefficient `a_k`, `1 <= k <= order`.
    pub fn a(&self, k: usize) -> f64 {
        self.coeffs[2 * k - 1]
    }

    /// Sine coefficient `b_k`, `1 <= k <= order`.
    pub fn b(&self, k: usize) -> f64 {
        self.coeffs[2 * k]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Lower-order approximation of the same function.
    pub fn truncate(&self, order: usize) -> Self {
        let keep = (2 * order + 1).min(self.coeffs.len());
        Self {
            coeffs: self.coeffs[..keep].to_vec(),
            length: self.length,
        }
    }

    /// Adds `w * other` into `self`, in place.
    pub(crate) fn add_scaled(&mut self, other: &[f64], w: f64) {
        for (c, o) in self.coeffs.iter_mut().zip(other) {
            *c += w * o;
        }
    }
}

/// Fourier coefficients of the unit-pulse signal of `positions`.
///
/// Runs in `O(|positions| * order)`; an empty position set yields the zero
/// vector.
pub fn compute_spectral(positions: &TermPositions, order: usize) -> SpectralVector {
    let len = f64::from(positions.length);
    let mut sv = SpectralVector::zeros(order, len);
    sv.coeffs[0] = positions.len() as f64 / len.sqrt();
    let scale = (len / 2.0).sqrt();
    for k in 1..=order {
        let kf = k as f64;
        let mut sin_sum = 0.0;
        let mut cos_sum = 0.0;
        for &p in &positions.positions {
            let hi = 2.0 * PI * kf * f64::from(p) / len;
            let lo = 2.0 * PI * kf * f64::from(p - 1) / len;
            sin_sum += hi.sin() - lo.sin();
            cos_sum += hi.cos() - lo.cos();
        }
        let f = scale / (kf * PI);
        sv.coeffs[2 * k - 1] = f * sin_sum;
        sv.coeffs[2 * k] = -f * cos_sum;
    }
    sv
}

/// Fourier coefficients of the unit-height rectangle on `[u, v]` within `[0, L]`.
pub fn rect_spectral(u: f64, v: f64, length: f64, order: usize) -> Result<SpectralVector> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::invalid(format!(
            "interval length must be positive, got {length}"
        )));
    }
    if !(u.is_finite() && v.is_finite()) || u < 0.0 || v > length || u >= v {
        return Err(Error::invalid(format!(
            "rectangle [{u}, {v}] must satisfy 0 <= u < v <= {length}"
        )));
    }
    let mut sv = SpectralVector::zeros(order, length);
    sv.coeffs[0] = (v - u) / length.sqrt();
    let scale = (length / 2.0).sqrt();
    for k in 1..=order {
        let kf = k as f64;
        let hi = 2.0 * PI * kf * v / length;
        let lo = 2.0 * PI * kf * u / length;
        let f = scale / (kf * PI);
        sv.coeffs[2 * k - 1] = f * (hi.sin() - lo.sin());
        sv.coeffs[2 * k] = -f * (hi.cos() - lo.cos());
    }
    Ok(sv)
}

/// Evaluates the truncated series `f_n(x)` for `x` in `[0, L]`.
pub fn reconstruct(sv: &SpectralVector, x: f64) -> Result<f64> {
    let len = sv.length;
    if !(0.0..=len).contains(&x) {
        return Err(Error::invalid(format!("x = {x} outside [0, {len}]")));
    }
    let mut acc = 0.0;
    for k in 1..=sv.order() {
        let arg = 2.0 * PI * k as f64 * x / len;
        acc += sv.a(k) * arg.cos() + sv.b(k) * arg.sin();
    }
    Ok(sv.a0() / len.sqrt() + (2.0 / len).sqrt() * acc)
}

fn common_order(a: &SpectralVector, b: &SpectralVector, policy: OrderPolicy) -> Result<usize> {
    match policy {
        OrderPolicy::Strict if a.order() != b.order() => Err(Error::invalid(format!(
            "order mismatch: {} vs {}",
            a.order(),
            b.order()
        ))),
        _ => Ok(a.order().min(b.order())),
    }
}

fn dot_prefix(a: &SpectralVector, b: &SpectralVector, order: usize) -> f64 {
    let n = 2 * order + 1;
    a.coeffs[..n]
        .iter()
        .zip(&b.coeffs[..n])
        .map(|(x, y)| x * y)
        .sum()
}

/// Scalar product of two spectral vectors, truncating to the lower order.
///
/// For vectors over the same interval this equals the overlap integral of
/// their reconstructions.
pub fn dot(a: &SpectralVector, b: &SpectralVector) -> f64 {
    dot_prefix(a, b, a.order().min(b.order()))
}

pub fn try_dot(a: &SpectralVector, b: &SpectralVector, policy: OrderPolicy) -> Result<f64> {
    let order = common_order(a, b, policy)?;
    Ok(dot_prefix(a, b, order))
}

/// Cosine of the angle between two spectral vectors, in `[-1, 1]`.
///
/// Returns 0 when either vector is zero (no positional evidence).
pub fn cosine_sim(a: &SpectralVector, b: &SpectralVector) -> f64 {
    cosine_prefix(a, b, a.order().min(b.order()))
}

pub fn try_cosine_sim(a: &SpectralVector, b: &SpectralVector, policy: OrderPolicy) -> Result<f64> {
    let order = common_order(a, b, policy)?;
    Ok(cosine_prefix(a, b, order))
}

fn cosine_prefix(a: &SpectralVector, b: &SpectralVector, order: usize) -> f64 {
    let n = 2 * order + 1;
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.coeffs[..n].iter().zip(&b.coeffs[..n]) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    (ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
}

/// Component-wise sum. Both vectors must share order and interval length.
pub fn add(a: &SpectralVector, b: &SpectralVector) -> Result<SpectralVector> {
    if a.order() != b.order() {
        return Err(Error::invalid(format!(
            "cannot add vectors of order {} and {}",
            a.order(),
            b.order()
        )));
    }
    if a.length != b.length {
        return Err(Error::invalid(format!(
            "cannot add vectors over lengths {} and {}",
            a.length, b.length
        )));
    }
    let mut out = a.clone();
    out.add_scaled(&b.coeffs, 1.0);
    Ok(out)
}

pub fn scale(a: &SpectralVector, w: f64) -> SpectralVector {
    SpectralVector {
        coeffs: a.coeffs.iter().map(|c| c * w).collect(),
        length: a.length,
    }
}
