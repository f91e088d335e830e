//! Numerical modular symbols `<g, f> = -2 pi i int_{z0}^{g z0} f(z) dz`.
//!
//! With the Eichler antiderivative `F(z) = sum (a_n / n) e^{2 pi i n z}` one has
//! `<g, f> = F(z0) - F(g z0)`. Direct evaluation picks the base point
//! `z0 = (-d + i)/c`, whose image `g z0 = (a + i)/c` has the same height, so
//! both ends converge equally fast. Generator values are cached in a
//! [`SymbolMap`] and arbitrary elements are evaluated through their words.

use std::f64::consts::PI;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::{ext_gcd, GroupElement};
use crate::error::{ModsymError, Result};
use crate::hyperbolic::PointH;
use crate::series::CuspFormSeries;
use crate::words::{GeneratorTable, Word};

/// Default evaluation tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EichlerValue {
    pub value: Complex64,
    /// Certified bound on the omitted tail.
    pub tail: f64,
}

/// Number of terms after which the tail bound `kappa r^{K+1} / (1 - r)` drops
/// below `tol`, with `r = exp(-2 pi y)`.
fn terms_needed(f: &CuspFormSeries, y: f64, tol: f64) -> Result<(usize, f64)> {
    let kappa = f.coeff_bound();
    let order = f.order();
    if kappa == 0.0 {
        return Ok((0, 0.0));
    }
    let log_r = -2.0 * PI * y;
    let denom = -(log_r.exp_m1()); // 1 - r
    let tail_after = |k: usize| kappa * ((k as f64 + 1.0) * log_r).exp() / denom;
    if tail_after(order) > tol {
        return Err(ModsymError::Precision(format!(
            "Im z = {y:e} too small for tolerance {tol:e} with {order} coefficients"
        )));
    }
    // smallest K with tail_after(K) <= tol
    let k = ((tol * denom / kappa).ln() / log_r - 1.0).ceil().max(0.0) as usize;
    let k = k.min(order);
    Ok((k, tail_after(k)))
}

/// `F(x + iy)` where the phase of term n is `e^{2 pi i * phase(n)}`.
fn eichler_sum(
    f: &CuspFormSeries,
    y: f64,
    tol: f64,
    phase: impl Fn(u64) -> f64,
) -> Result<EichlerValue> {
    let (terms, tail) = terms_needed(f, y, tol)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for (i, a) in f.coeffs()[..terms].iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        let n = (i + 1) as u64;
        let modulus = (-2.0 * PI * n as f64 * y).exp();
        let (s, c) = (2.0 * PI * phase(n)).sin_cos();
        sum += a / n as f64 * Complex64::new(modulus * c, modulus * s);
    }
    Ok(EichlerValue { value: sum, tail })
}

/// The Eichler antiderivative at `z`, truncated once the tail bound is below `tol`.
pub fn eichler_f(z: PointH, f: &CuspFormSeries, tol: f64) -> Result<EichlerValue> {
    let x = z.x.rem_euclid(1.0);
    eichler_sum(f, z.y, tol, |n| (n as f64 * x).fract())
}

/// `F(k/c + i y)` with the phase reduced exactly in integers.
fn eichler_rational(
    f: &CuspFormSeries,
    k: &BigInt,
    c: &BigInt,
    y: f64,
    tol: f64,
) -> Result<EichlerValue> {
    let c64 = c.to_u64();
    let k = k.mod_floor(c);
    match (c64, k.to_u64()) {
        (Some(c), Some(k)) if c < (1 << 31) => {
            let cf = c as f64;
            eichler_sum(f, y, tol, |n| ((n % c) * k % c) as f64 / cf)
        }
        _ => {
            let x = BigInt::to_f64(&k).unwrap_or(0.0) / c.to_f64().unwrap_or(f64::INFINITY);
            eichler_sum(f, y, tol, |n| (n as f64 * x).fract())
        }
    }
}

/// `<g, f>` by endpoint evaluation with base point `(-d + t i)/c`, whose image
/// is `a/c + i/(c t)`. `t = 1` is the balanced choice.
pub fn modsym_with_base(g: &GroupElement, f: &CuspFormSeries, t: f64, tol: f64) -> Result<Complex64> {
    g.require_gamma0(f.level())?;
    if g.c().is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let c = g.c();
    let cf = c
        .to_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ModsymError::Precision(format!("lower-left entry of {g} too large")))?;
    let start = eichler_rational(f, &-g.d(), c, t / cf, tol / 2.0)?;
    let end = eichler_rational(f, g.a(), c, 1.0 / (cf * t), tol / 2.0)?;
    Ok(start.value - end.value)
}

/// `<g, f>` by direct numerical evaluation; zero for upper-triangular `g`.
pub fn modsym_direct(g: &GroupElement, f: &CuspFormSeries, tol: f64) -> Result<Complex64> {
    modsym_with_base(g, f, 1.0, tol)
}

/// Largest lower-left entry that [`modsym_direct`] can handle at `tol`.
pub fn direct_range(f: &CuspFormSeries, tol: f64) -> u64 {
    let mut lo = 1u64;
    let mut hi = 1u64 << 40;
    if terms_needed(f, 1.0, tol / 2.0).is_err() {
        return 0;
    }
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if terms_needed(f, 1.0 / mid as f64, tol / 2.0).is_ok() {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Symbol values on the generators of a coset table.
#[derive(Clone, Debug)]
pub struct SymbolMap {
    table: Arc<GeneratorTable>,
    values: Vec<Complex64>,
    tol: f64,
}

impl SymbolMap {
    /// Wraps precomputed values; they must be antisymmetric on inverse pairs.
    pub fn from_values(table: Arc<GeneratorTable>, values: Vec<Complex64>, tol: f64) -> Result<Self> {
        if values.len() != table.generators().len() {
            return Err(ModsymError::Mismatch(format!(
                "{} values for {} generators",
                values.len(),
                table.generators().len()
            )));
        }
        for j in 0..values.len() {
            let k = table.inverse_index(j);
            if (values[j] + values[k]).norm() > tol {
                return Err(ModsymError::Precision(format!(
                    "values of generator {j} and its inverse {k} are not opposite"
                )));
            }
        }
        Ok(Self { table, values, tol })
    }

    pub fn table(&self) -> &GeneratorTable {
        &self.table
    }

    pub fn table_arc(&self) -> Arc<GeneratorTable> {
        self.table.clone()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Sum of signed generator values along a word.
    pub fn word_value(&self, word: &Word) -> Complex64 {
        word.letters()
            .iter()
            .map(|l| f64::from(l.exp) * self.values[l.gen])
            .sum()
    }
}

/// Evaluates `<s, f>` on every generator. Values of an inverse pair are
/// computed independently, checked against each other, then replaced by their
/// antisymmetrised mean so that word sums are exactly additive.
pub fn build_symbol_map(table: Arc<GeneratorTable>, f: &CuspFormSeries, tol: f64) -> Result<SymbolMap> {
    if table.level() % f.level() != 0 {
        return Err(ModsymError::Mismatch(format!(
            "form of level {} does not live on Gamma_0({})",
            f.level(),
            table.level()
        )));
    }
    let raw = table
        .generators()
        .par_iter()
        .enumerate()
        .map(|(j, g)| {
            modsym_direct(g, f, tol).map_err(|e| match e {
                ModsymError::Precision(msg) => {
                    ModsymError::Precision(format!("generator {j} {g}: {msg}"))
                }
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = raw.clone();
    for j in 0..raw.len() {
        let k = table.inverse_index(j);
        if (raw[j] + raw[k]).norm() > 2.0 * tol {
            return Err(ModsymError::Precision(format!(
                "generator {j}: psi(s) + psi(s^-1) = {:e}",
                (raw[j] + raw[k]).norm()
            )));
        }
        values[j] = (raw[j] - raw[k]) / 2.0;
    }
    SymbolMap::from_values(table, values, tol)
}

/// `psi(g)` as the sum of generator values along the rewritten word.
pub fn modsym_word(g: &GroupElement, map: &SymbolMap) -> Result<Complex64> {
    Ok(map.word_value(&map.table().rewrite(g)?))
}

/// Two complex numbers spanning a lattice that contains a set of values.
#[derive(Clone, Debug)]
pub struct PeriodLattice {
    pub omega1: Complex64,
    pub omega2: Complex64,
    pub coords: Vec<(i64, i64)>,
    pub max_residual: f64,
}

fn cross(u: Complex64, v: Complex64) -> f64 {
    u.re * v.im - u.im * v.re
}

fn solve_coords(v: Complex64, b1: Complex64, b2: Complex64) -> (f64, f64) {
    let det = cross(b1, b2);
    (cross(v, b2) / det, cross(b1, v) / det)
}

/// Hermite normal form basis ((p, r), (0, s)) of the span of integer vectors.
fn hermite_basis(vectors: &[(i64, i64)]) -> ((i64, i64), i64) {
    let (mut p, mut r, mut s) = (0i64, 0i64, 0i64);
    for &(x, y) in vectors {
        if x == 0 {
            s = s.gcd(&y);
            continue;
        }
        if p == 0 {
            (p, r) = (x, y);
            continue;
        }
        let (g, alpha, beta) = ext_gcd(&BigInt::from(p), &BigInt::from(x));
        let (g, alpha, beta) = (g.to_i64().unwrap(), alpha.to_i64().unwrap(), beta.to_i64().unwrap());
        // combination with first coordinate zero
        let residue = (x / g) * r - (p / g) * y;
        s = s.gcd(&residue);
        (p, r) = (g, alpha * r + beta * y);
    }
    if p < 0 {
        (p, r) = (-p, -r);
    }
    if s != 0 {
        r = r.rem_euclid(s);
    }
    ((p, r), s.abs())
}

/// Tries to express every value as `m omega1 + n omega2` with integers
/// |m|, |n| <= `max_coeff` and residual below `tol`.
pub fn fit_period_lattice(values: &[Complex64], tol: f64, max_coeff: i64) -> Option<PeriodLattice> {
    let mut nonzero: Vec<Complex64> = values.iter().copied().filter(|v| v.norm() > tol).collect();
    nonzero.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let b1 = *nonzero.first()?;
    let b2 = *nonzero
        .iter()
        .find(|v| cross(b1, **v).abs() > 1e3 * tol * (b1.norm() + v.norm()))?;

    let coords: Vec<(f64, f64)> = values.iter().map(|&v| solve_coords(v, b1, b2)).collect();
    let near_int = |x: f64| (x - x.round()).abs() < 1e-6;
    let denom = (1..=60i64).find(|&d| {
        coords
            .iter()
            .all(|&(s, t)| near_int(d as f64 * s) && near_int(d as f64 * t))
    })?;
    let ints: Vec<(i64, i64)> = coords
        .iter()
        .map(|&(s, t)| ((denom as f64 * s).round() as i64, (denom as f64 * t).round() as i64))
        .collect();
    let ((p, r), s) = hermite_basis(&ints);
    if p == 0 || s == 0 {
        return None;
    }
    let d = denom as f64;
    let omega1 = (b1 * p as f64 + b2 * r as f64) / d;
    let omega2 = b2 * s as f64 / d;

    let mut out = Vec::with_capacity(values.len());
    let mut max_residual: f64 = 0.0;
    for &v in values {
        let (m, n) = solve_coords(v, omega1, omega2);
        let (m, n) = (m.round(), n.round());
        if m.abs() > max_coeff as f64 || n.abs() > max_coeff as f64 {
            return None;
        }
        let residual = (v - omega1 * m - omega2 * n).norm();
        max_residual = max_residual.max(residual);
        out.push((m as i64, n as i64));
    }
    (max_residual < tol).then_some(PeriodLattice {
        omega1,
        omega2,
        coords: out,
        max_residual,
    })
}
