//! Cusps of Gamma_0(N), their widths and scaling matrices, and the horoballs
//! removed to form the truncated plane H_T.
//!
//! The horoball at a finite cusp p/q (reduced, q > 0) is the open disc tangent
//! to the real line at p/q with Euclidean diameter `1 / (T h q^2)`, where
//! `h = N / gcd(q^2, N)` is the width. At infinity it is `Im z > T`. These are
//! the sets `sigma_c({Im z > T})` for the compatible choice of scaling
//! matrices `sigma_{g c} = g sigma_c`.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{matrix_with_first_column, GroupElement};
use crate::error::{ModsymError, Result};
use crate::hyperbolic::{
    ratio_floor, ratio_from_f64, segment_height_exceeds, ExactPoint, PointH, Segment,
};

/// Budget of Stern-Brocot nodes visited per horoball search.
pub const DEFAULT_NODE_CAP: usize = 2_000_000;

/// A boundary point p/q in lowest terms with q >= 0; infinity is 1/0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cusp {
    p: BigInt,
    q: BigInt,
}

impl Cusp {
    pub fn new(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<Self> {
        let (mut p, mut q) = (p.into(), q.into());
        if p.is_zero() && q.is_zero() {
            return Err(ModsymError::Invalid("0/0 is not a cusp".into()));
        }
        let g = p.gcd(&q);
        p /= &g;
        q /= &g;
        if q.is_negative() || (q.is_zero() && p.is_negative()) {
            p = -p;
            q = -q;
        }
        Ok(Self { p, q })
    }

    pub fn infinity() -> Self {
        Self {
            p: BigInt::one(),
            q: BigInt::zero(),
        }
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    pub fn q(&self) -> &BigInt {
        &self.q
    }

    pub fn is_infinity(&self) -> bool {
        self.q.is_zero()
    }

    pub fn value(&self) -> Option<BigRational> {
        (!self.is_infinity()).then(|| BigRational::new(self.p.clone(), self.q.clone()))
    }

    /// Image under a group element, computed projectively.
    pub fn act(&self, g: &GroupElement) -> Cusp {
        let p = g.a() * &self.p + g.b() * &self.q;
        let q = g.c() * &self.p + g.d() * &self.q;
        Cusp::new(p, q).expect("determinant one keeps the point nonzero")
    }

    /// An element of PSL2(Z) sending infinity to this cusp.
    pub fn scaling_element(&self) -> GroupElement {
        if self.is_infinity() {
            GroupElement::identity()
        } else {
            matrix_with_first_column(&self.p, &self.q)
        }
    }
}

impl fmt::Display for Cusp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinity() {
            write!(f, "oo")
        } else {
            write!(f, "{}/{}", self.p, self.q)
        }
    }
}

/// Width of a cusp p/q of Gamma_0(N): `N / gcd(q^2, N)`.
pub fn width(c: &Cusp, level: u64) -> u64 {
    let n = BigInt::from(level);
    let g = (c.q() * c.q()).gcd(&n);
    (n / g).to_u64().expect("divides the level")
}

/// Minimal h >= 1 with `g T^h g^-1` in Gamma_0(N), found by search. The
/// lower-left entry of that conjugate is `-q^2 h`.
pub fn width_by_search(c: &Cusp, level: u64) -> u64 {
    let n = BigInt::from(level);
    let q2 = c.q() * c.q();
    (1..=level)
        .find(|&h| (&q2 * h % &n).is_zero())
        .unwrap_or(level)
}

/// A real 2x2 matrix of determinant one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RealMatrix {
    pub fn apply(&self, z: PointH) -> PointH {
        let den = (self.c * z.x + self.d).powi(2) + (self.c * z.y).powi(2);
        let re = (self.a * self.c * (z.x * z.x + z.y * z.y)
            + (self.a * self.d + self.b * self.c) * z.x
            + self.b * self.d)
            / den;
        PointH { x: re, y: z.y / den }
    }

    pub fn inverse(&self) -> RealMatrix {
        RealMatrix {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn mul(&self, o: &RealMatrix) -> RealMatrix {
        RealMatrix {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn from_group(g: &GroupElement) -> RealMatrix {
        let [a, b, c, d] = g.entries_f64();
        RealMatrix { a, b, c, d }
    }
}

#[derive(Clone, Debug)]
pub struct CuspClass {
    pub rep: Cusp,
    pub width: u64,
    /// Sends infinity to `rep`.
    pub g_rep: GroupElement,
    /// `g_rep` composed with `diag(sqrt(width), 1/sqrt(width))`.
    pub sigma: RealMatrix,
    /// `g_rep T^width g_rep^-1`, generating the stabiliser of `rep`.
    pub p_stab: GroupElement,
}

impl CuspClass {
    pub fn new(rep: Cusp, level: u64) -> Self {
        let width = width(&rep, level);
        let g_rep = rep.scaling_element();
        let s = (width as f64).sqrt();
        let scale = RealMatrix {
            a: s,
            b: 0.0,
            c: 0.0,
            d: 1.0 / s,
        };
        let sigma = RealMatrix::from_group(&g_rep).mul(&scale);
        let p_stab = GroupElement::t_pow(width).conjugate_by(&g_rep);
        Self {
            rep,
            width,
            g_rep,
            sigma,
            p_stab,
        }
    }

    /// `Im(sigma^-1 z)`, computed as `Im(g_rep^-1 z) / width`.
    pub fn height(&self, z: &ExactPoint) -> BigRational {
        z.mobius(&self.g_rep.inverse()).y / BigRational::from_integer(self.width.into())
    }
}

/// Number of cusp classes of Gamma_0(N): sum over d | N of phi(gcd(d, N/d)).
pub fn cusp_count(level: u64) -> usize {
    let phi = |n: u64| (1..=n).filter(|k| k.gcd(&n) == 1).count();
    (1..=level)
        .filter(|d| level % d == 0)
        .map(|d| phi(d.gcd(&(level / d))))
        .sum()
}

/// An element of Gamma_0(N) sending `from` to `to`, if the cusps are equivalent.
///
/// Every element of PSL2(Z) mapping `from` to `to` is `g_to T^k g_from^-1`; its
/// lower-left entry is affine in k, so k ranging over one period mod N decides
/// equivalence exactly.
pub fn equivalence(from: &Cusp, to: &Cusp, level: u64) -> Option<GroupElement> {
    let g1 = from.scaling_element();
    let g2 = to.scaling_element();
    let n = BigInt::from(level);
    // lower-left = (q2 y1 - y2 q1) - k q1 q2
    let base = (g2.c() * g1.d() - g2.d() * g1.c()).mod_floor(&n);
    let step = (g1.c() * g2.c()).mod_floor(&n);
    let (base, step) = (base.to_u64()?, step.to_u64()?);
    let k = (0..level).find(|&k| (base + level - (k * step) % level) % level == 0)?;
    let g = &(&g2 * &GroupElement::t_pow(k)) * &g1.inverse();
    debug_assert!(g.in_gamma0(level));
    Some(g)
}

/// Congruence test for equivalence of cusps: with `p_j s_j = 1 mod q_j`, the
/// cusps are equivalent iff `s_1 q_2 = s_2 q_1 mod gcd(q_1 q_2, N)`.
pub fn equivalent_by_congruence(c1: &Cusp, c2: &Cusp, level: u64) -> bool {
    let inv_mod = |p: &BigInt, q: &BigInt| -> BigInt {
        if q.is_zero() {
            return p.clone(); // p = 1 at infinity
        }
        let e = p.extended_gcd(q);
        (e.x * e.gcd.signum()).mod_floor(q)
    };
    let s1 = inv_mod(c1.p(), c1.q());
    let s2 = inv_mod(c2.p(), c2.q());
    let m = (c1.q() * c2.q()).gcd(&BigInt::from(level));
    ((s1 * c2.q() - s2 * c1.q()) % m).is_zero()
}

/// Pairwise inequivalent representatives, infinity first, then cusps a/d for
/// divisors d of N in increasing order.
pub fn cusp_classes(level: u64) -> Vec<CuspClass> {
    let target = cusp_count(level);
    let mut reps = vec![Cusp::infinity()];
    'outer: for d in (1..level).filter(|d| level % d == 0) {
        for a in 0..level.max(d) {
            if reps.len() == target {
                break 'outer;
            }
            if a.gcd(&d) != 1 {
                continue;
            }
            let c = Cusp::new(a, d).expect("d > 0");
            if reps.iter().all(|r| equivalence(r, &c, level).is_none()) {
                reps.push(c);
            }
        }
    }
    reps.into_iter().map(|r| CuspClass::new(r, level)).collect()
}

/// Class index of `c` and an element of Gamma_0(N) taking that class
/// representative to `c`.
pub fn classify_cusp(c: &Cusp, level: u64, classes: &[CuspClass]) -> (usize, GroupElement) {
    classes
        .iter()
        .enumerate()
        .find_map(|(i, cls)| equivalence(&cls.rep, c, level).map(|g| (i, g)))
        .expect("every cusp is equivalent to a representative")
}

/// Whether the geodesic segment z..w rises above height T after `sigma^-1` of
/// the class, i.e. meets the horoball `sigma({Im > T})`.
pub fn enters_horoball(z: PointH, w: PointH, cls: &CuspClass, t: f64) -> bool {
    let inv = cls.g_rep.inverse();
    let (z, w) = (z.exact().mobius(&inv), w.exact().mobius(&inv));
    let thr = ratio_from_f64(t).expect("finite") * BigRational::from_integer(cls.width.into());
    segment_height_exceeds(&z, &w, &thr)
}

#[derive(Clone, Debug)]
pub struct TruncationParams {
    level: u64,
    t: f64,
    t_exact: BigRational,
    classes: Vec<CuspClass>,
}

/// Truncation heights tried by [`choose_truncation`]: 1.5, then 2, 3, 4, ...
fn truncation_grid() -> impl Iterator<Item = f64> {
    std::iter::once(1.5).chain((2..).map(f64::from))
}

/// Whether z0 is fixed by an elliptic element of Gamma_0(N). Such fixed
/// points are `((a - d) + i sqrt(4 - t^2)) / (2c)` with |t| <= 1 and c >= 1.
pub fn is_elliptic_fixed_point(z0: PointH, level: u64) -> bool {
    let c_max = (3f64.sqrt() / (2.0 * z0.y)).ceil() as u64 + 1;
    let mut c = level;
    while c <= c_max {
        for t in [-1i64, 0, 1] {
            let y = (4.0 - (t * t) as f64).sqrt() / (2.0 * c as f64);
            if (y - z0.y).abs() > 1e-12 * y {
                continue;
            }
            let amd = 2.0 * c as f64 * z0.x;
            if (amd - amd.round()).abs() > 1e-9 {
                continue;
            }
            let amd = amd.round() as i64;
            if (t + amd) % 2 != 0 {
                continue;
            }
            let a = (t + amd) / 2;
            let d = t - a;
            if (a * d - 1) % c as i64 == 0 {
                return true;
            }
        }
        c += level;
    }
    false
}

impl TruncationParams {
    pub fn new(level: u64, t: f64, classes: Vec<CuspClass>) -> Result<Self> {
        if !(t > 1.0) || !t.is_finite() {
            return Err(ModsymError::Invalid(format!("truncation height {t} must exceed 1")));
        }
        let params = Self {
            level,
            t,
            t_exact: ratio_from_f64(t)?,
            classes,
        };
        if !params.horoballs_disjoint(12) {
            return Err(ModsymError::Invalid(format!("horoballs at height {t} overlap")));
        }
        Ok(params)
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn classes(&self) -> &[CuspClass] {
        &self.classes
    }

    /// Euclidean diameter of the horoball at a finite cusp.
    fn diameter(&self, c: &Cusp) -> BigRational {
        let h = BigInt::from(width(c, self.level));
        let q2 = c.q() * c.q();
        BigRational::new(BigInt::one(), h * q2) / &self.t_exact
    }

    /// Checks pairwise disjointness of the horoballs at infinity and at every
    /// p/q in [0, 1] with q <= `max_den` (tangent discs at x1, x2 with
    /// diameters D1, D2 are disjoint iff (x1 - x2)^2 >= D1 D2).
    pub fn horoballs_disjoint(&self, max_den: u64) -> bool {
        let mut balls = Vec::new();
        for q in 1..=max_den {
            for p in 0..=q {
                if p.gcd(&q) == 1 {
                    let c = Cusp::new(p, q).expect("q > 0");
                    balls.push((c.value().expect("finite"), self.diameter(&c)));
                }
            }
        }
        let below_infinity = balls.iter().all(|(_, d)| d <= &self.t_exact);
        below_infinity
            && balls.iter().enumerate().all(|(i, (x1, d1))| {
                balls[i + 1..].iter().all(|(x2, d2)| {
                    let dx = x1 - x2;
                    &dx * &dx >= d1 * d2
                })
            })
    }

    /// Whether the segment meets the horoball at `c`.
    pub fn segment_enters(&self, seg: &Segment, c: &Cusp) -> bool {
        match c.value() {
            None => segment_height_exceeds(&seg.start, &seg.end, &self.t_exact),
            Some(u) => {
                let thr = BigRational::one() / self.diameter(c);
                segment_height_exceeds(&seg.start.invert_at(&u), &seg.end.invert_at(&u), &thr)
            }
        }
    }

    /// Every cusp whose horoball the closed segment meets.
    ///
    /// Integers are scanned by bisection over blocks and each unit interval by
    /// Stern-Brocot descent. A Farey interval (a/b, c/d) only holds cusps of
    /// denominator at least b + d, hence horoballs of diameter at most
    /// `1 / (T (b + d)^2)`; it is skipped when the segment stays above that
    /// height over the interval widened by half the diameter.
    pub fn entered_cusps(&self, seg: &Segment, node_cap: usize) -> Result<Vec<Cusp>> {
        let mut found = Vec::new();
        if self.segment_enters(seg, &Cusp::infinity()) {
            found.push(Cusp::infinity());
        }
        let one = BigRational::one();
        let two = BigRational::from_integer(2.into());
        let (xmin, xmax) = seg.x_range();
        let lo = ratio_floor(xmin) - 1;
        let hi = ratio_floor(xmax) + 2;
        let int = |n: &BigInt| BigRational::from_integer(n.clone());
        let dmax = &one / &self.t_exact;
        let half = &dmax / &two;

        let mut nodes = 0usize;
        let budget = |nodes: &mut usize| -> Result<()> {
            *nodes += 1;
            if *nodes > node_cap {
                return Err(ModsymError::Resource(format!(
                    "horoball search exceeded {node_cap} nodes"
                )));
            }
            Ok(())
        };

        let mut seen_ints = HashSet::new();
        let mut blocks = vec![(lo, hi)];
        let mut units = Vec::new();
        while let Some((a, b)) = blocks.pop() {
            budget(&mut nodes)?;
            if !seg.dips_below(&(int(&a) - &half), &(int(&b) + &half), &dmax) {
                continue;
            }
            if &b - &a == BigInt::one() {
                units.push(a);
                continue;
            }
            let mid: BigInt = (&a + &b) / 2;
            blocks.push((mid.clone(), b));
            blocks.push((a, mid));
        }
        units.sort();
        for n in units {
            for k in [n.clone(), &n + 1] {
                if seen_ints.insert(k.clone()) {
                    let c = Cusp::new(k, 1).expect("integer");
                    if self.segment_enters(seg, &c) {
                        found.push(c);
                    }
                }
            }
            // Stern-Brocot descent in (n/1, (n+1)/1)
            let mut stack: Vec<(BigInt, BigInt, BigInt, BigInt)> =
                vec![(n.clone(), BigInt::one(), &n + 1, BigInt::one())];
            while let Some((a, b, c, d)) = stack.pop() {
                budget(&mut nodes)?;
                let den = &b + &d;
                let dm = BigRational::new(BigInt::one(), &den * &den) / &self.t_exact;
                let hm = &dm / &two;
                let left = BigRational::new(a.clone(), b.clone()) - &hm;
                let right = BigRational::new(c.clone(), d.clone()) + &hm;
                if !seg.dips_below(&left, &right, &dm) {
                    continue;
                }
                let num = &a + &c;
                let m = Cusp::new(num.clone(), den.clone()).expect("mediant");
                if self.segment_enters(seg, &m) {
                    found.push(m);
                }
                stack.push((num.clone(), den.clone(), c, d));
                stack.push((a, b, num, den));
            }
        }
        Ok(found)
    }

    /// Whether `z` lies in an open horoball of H_T.
    pub fn in_horoball(&self, z: &ExactPoint) -> Result<bool> {
        let seg = Segment::new(z.clone(), z.clone());
        Ok(!self.entered_cusps(&seg, DEFAULT_NODE_CAP)?.is_empty())
    }
}

/// Smallest T on the grid {1.5, 2, 3, 4, ...} such that the class horoballs
/// are disjoint and `2 Im(sigma_c^-1 z0) <= T` for every class.
pub fn choose_truncation(level: u64, z0: PointH) -> Result<TruncationParams> {
    if is_elliptic_fixed_point(z0, level) {
        return Err(ModsymError::Invalid(format!(
            "base point ({}, {}) is fixed by an elliptic element",
            z0.x, z0.y
        )));
    }
    let classes = cusp_classes(level);
    let exact = z0.exact();
    let need = classes
        .iter()
        .map(|c| crate::hyperbolic::ratio_to_f64(&c.height(&exact)))
        .fold(0.0, f64::max)
        * 2.0;
    for t in truncation_grid() {
        if t < need {
            continue;
        }
        if let Ok(p) = TruncationParams::new(level, t, classes.clone()) {
            return Ok(p);
        }
        if t > 1e6 {
            break;
        }
    }
    Err(ModsymError::Resource("no admissible truncation height".into()))
}
