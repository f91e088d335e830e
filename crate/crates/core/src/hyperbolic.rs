//! Upper half plane geometry.
//!
//! Two representations of points live here. [`PointH`] is the floating
//! point workhorse used for reported distances. [`ExactPoint`] carries
//! rational coordinates; every predicate that decides something (horoball
//! entry, distance comparison between orbit points) runs on it, so that the
//! answer does not depend on how large the matrix entries have become.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{ln_bigint, GroupElement};
use crate::error::{ModsymError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointH {
    pub x: f64,
    pub y: f64,
}

impl PointH {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(ModsymError::Invalid(format!(
                "point ({x}, {y}) is not in the upper half plane"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn i() -> Self {
        Self { x: 0.0, y: 1.0 }
    }

    pub fn exact(&self) -> ExactPoint {
        ExactPoint {
            x: BigRational::from_float(self.x).expect("finite"),
            y: BigRational::from_float(self.y).expect("finite"),
        }
    }
}

/// (az + b)/(cz + d) in floating point. Accurate while the entries fit in f64
/// without cancellation; use [`ExactPoint::mobius`] beyond that.
pub fn mobius(g: &GroupElement, z: PointH) -> PointH {
    let [a, b, c, d] = g.entries_f64();
    let den = (c * z.x + d).powi(2) + (c * z.y).powi(2);
    let re = (a * c * (z.x * z.x + z.y * z.y) + (a * d + b * c) * z.x + b * d) / den;
    PointH {
        x: re,
        y: z.y / den,
    }
}

/// Hyperbolic distance from the closed form
/// `log((|z - conj w| + |z - w|) / (|z - conj w| - |z - w|))`.
///
/// The denominator is rewritten with `|z - conj w|^2 - |z - w|^2 = 4 Im z Im w`
/// and the logarithm evaluated as `ln_1p`, which keeps full relative accuracy
/// for nearby and for distant points alike.
pub fn distance(z: PointH, w: PointH) -> f64 {
    if z == w {
        return 0.0;
    }
    let dx = z.x - w.x;
    let far = dx.hypot(z.y + w.y);
    let near = dx.hypot(z.y - w.y);
    let s = (z.y * w.y).sqrt();
    // (far + near) / (2s) - 1, with far - 2s = near^2 / (far + 2s)
    let excess = (near + near * near / (far + 2.0 * s)) / (2.0 * s);
    2.0 * excess.ln_1p()
}

/// d(g i, i) from the entries, using `(b-c)^2 + (a+d)^2 - (b+c)^2 - (a-d)^2 = 4`.
pub fn distance_gamma_i(g: &GroupElement) -> f64 {
    let [a, b, c, d] = g.entries();
    let p: BigInt = (b - c).pow(2) + (a + d).pow(2);
    let q: BigInt = (b + c).pow(2) + (a - d).pow(2);
    if p.bits() < 1000 {
        let (p, q) = (p.to_f64().unwrap(), q.to_f64().unwrap());
        return 2.0 * ((p.sqrt() + q.sqrt()) / 2.0).ln();
    }
    // 2 ln(sqrt p + sqrt q) - 2 ln 2, in log space
    let lp = ln_bigint(&p);
    let ratio = ((ln_bigint(&q) - lp) / 2.0).exp();
    lp + 2.0 * ratio.ln_1p() - 2.0 * std::f64::consts::LN_2
}

/// `2 log ||g|| + 3 log 2`, an upper bound for [`distance_gamma_i`].
pub fn log_norm_bound(g: &GroupElement) -> f64 {
    2.0 * g.log_norm() + 3.0 * std::f64::consts::LN_2
}

/// Point of the upper half plane with rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactPoint {
    pub x: BigRational,
    pub y: BigRational,
}

impl ExactPoint {
    pub fn new(x: BigRational, y: BigRational) -> Self {
        debug_assert!(y.is_positive());
        Self { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Self::new(BigRational::from_integer(x.into()), BigRational::from_integer(y.into()))
    }

    pub fn to_point(&self) -> PointH {
        PointH {
            x: ratio_to_f64(&self.x),
            y: ratio_to_f64(&self.y),
        }
    }

    pub fn abs_sq(&self) -> BigRational {
        &self.x * &self.x + &self.y * &self.y
    }

    pub fn mobius(&self, g: &GroupElement) -> ExactPoint {
        let [a, b, c, d] = g.entries().map(|e| BigRational::from_integer(e.clone()));
        let cx_d = &c * &self.x + &d;
        let cy = &c * &self.y;
        let den = &cx_d * &cx_d + &cy * &cy;
        let re = (&a * &c * self.abs_sq() + (&a * &d + &b * &c) * &self.x + &b * &d) / &den;
        ExactPoint {
            x: re,
            y: &self.y / den,
        }
    }

    /// Image under z -> -1/(z - u), which sends the boundary point u to infinity
    /// and turns `Im(z) / |z - u|^2` into the height of the image.
    pub fn invert_at(&self, u: &BigRational) -> ExactPoint {
        let dx = &self.x - u;
        let den = &dx * &dx + &self.y * &self.y;
        ExactPoint {
            x: -dx / &den,
            y: &self.y / den,
        }
    }

    pub fn scale(&self, factor: &BigRational) -> ExactPoint {
        ExactPoint {
            x: &self.x * factor,
            y: &self.y * factor,
        }
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    match r.to_f64() {
        Some(v) if v.is_finite() && (v != 0.0 || r.is_zero()) => v,
        _ => {
            let ln = ratio_ln_abs(r);
            let sign = if r.is_negative() { -1.0 } else { 1.0 };
            sign * ln.exp()
        }
    }
}

/// ln|r| for a nonzero rational of any size.
pub fn ratio_ln_abs(r: &BigRational) -> f64 {
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

/// acosh(1 + x) for a rational x >= 0, staying accurate when x overflows f64.
pub fn acosh_one_plus(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let ln = ratio_ln_abs(x);
    if ln < 600.0 {
        let v = ratio_to_f64(x);
        (v + (v * (v + 2.0)).sqrt()).ln_1p()
    } else {
        // 1 + x + sqrt(x^2 + 2x) = 2x (1 + O(1/x))
        ln + std::f64::consts::LN_2
    }
}

/// cosh d(z, w) - 1 = |z - w|^2 / (2 Im z Im w), exactly.
pub fn cosh_minus_one(z: &ExactPoint, w: &ExactPoint) -> BigRational {
    let dx = &z.x - &w.x;
    let dy = &z.y - &w.y;
    (&dx * &dx + &dy * &dy) / (BigRational::from_integer(2.into()) * &z.y * &w.y)
}

pub fn distance_exact(z: &ExactPoint, w: &ExactPoint) -> f64 {
    acosh_one_plus(&cosh_minus_one(z, w))
}

/// cosh d(z0, g z0) - 1 computed from the entries of `g` without forming g z0:
/// `|c z0^2 + (d - a) z0 - b|^2 / (2 Im(z0)^2)`.
///
/// Monotone in the distance, so it orders orbit points exactly.
pub fn orbit_cosh_minus_one(g: &GroupElement, z0: &ExactPoint) -> BigRational {
    let [a, b, c, d] = g.entries().map(|e| BigRational::from_integer(e.clone()));
    let re_sq = &z0.x * &z0.x - &z0.y * &z0.y;
    let im_sq = BigRational::from_integer(2.into()) * &z0.x * &z0.y;
    let dma = &d - &a;
    let u = &c * re_sq + &dma * &z0.x - &b;
    let v = &c * im_sq + &dma * &z0.y;
    (&u * &u + &v * &v) / (BigRational::from_integer(2.into()) * &z0.y * &z0.y)
}

pub fn orbit_distance(g: &GroupElement, z0: &ExactPoint) -> f64 {
    acosh_one_plus(&orbit_cosh_minus_one(g, z0))
}

/// Whether the height `Im` exceeds `threshold` somewhere on the closed
/// geodesic segment from `p` to `q`.
///
/// The segment is either vertical, or an arc of a semicircle whose apex is
/// the maximum when it lies between the endpoints.
pub fn segment_height_exceeds(p: &ExactPoint, q: &ExactPoint, threshold: &BigRational) -> bool {
    if &p.y > threshold || &q.y > threshold {
        return true;
    }
    if p.x == q.x {
        return false;
    }
    let two = BigRational::from_integer(2.into());
    let center = (p.abs_sq() - q.abs_sq()) / (&two * (&p.x - &q.x));
    let (lo, hi) = if p.x < q.x { (&p.x, &q.x) } else { (&q.x, &p.x) };
    if &center <= lo || &center >= hi {
        return false;
    }
    let dx = &p.x - &center;
    let radius_sq = &dx * &dx + &p.y * &p.y;
    radius_sq > threshold * threshold
}

/// A geodesic segment with rational endpoints, with the data needed to bound
/// its height over vertical strips.
#[derive(Clone, Debug)]
pub struct Segment {
    pub start: ExactPoint,
    pub end: ExactPoint,
    // None for vertical segments.
    circle: Option<(BigRational, BigRational)>,
}

impl Segment {
    pub fn new(start: ExactPoint, end: ExactPoint) -> Self {
        let circle = if start.x == end.x {
            None
        } else {
            let two = BigRational::from_integer(2.into());
            let center = (start.abs_sq() - end.abs_sq()) / (&two * (&start.x - &end.x));
            let dx = &start.x - &center;
            let radius_sq = &dx * &dx + &start.y * &start.y;
            Some((center, radius_sq))
        };
        Self { start, end, circle }
    }

    pub fn x_range(&self) -> (&BigRational, &BigRational) {
        if self.start.x <= self.end.x {
            (&self.start.x, &self.end.x)
        } else {
            (&self.end.x, &self.start.x)
        }
    }

    /// Whether some point of the segment with `lo <= x <= hi` has height below
    /// `h`. Heights along an arc are concave in x, so the minimum over a
    /// sub-interval sits at one of its ends.
    pub fn dips_below(&self, lo: &BigRational, hi: &BigRational, h: &BigRational) -> bool {
        let (xmin, xmax) = self.x_range();
        let a = if lo > xmin { lo } else { xmin };
        let b = if hi < xmax { hi } else { xmax };
        if a > b {
            return false;
        }
        match &self.circle {
            None => {
                let ymin = if self.start.y < self.end.y { &self.start.y } else { &self.end.y };
                ymin < h
            }
            Some((center, radius_sq)) => {
                let h_sq = h * h;
                [a, b].into_iter().any(|x| {
                    let dx = x - center;
                    radius_sq - &dx * &dx < h_sq
                })
            }
        }
    }
}

/// Floor of a rational as an integer.
pub fn ratio_floor(r: &BigRational) -> BigInt {
    r.floor().to_integer()
}

pub fn ratio_from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| ModsymError::Invalid(format!("non-finite value {v}")))
}

pub fn one() -> BigRational {
    BigRational::one()
}
