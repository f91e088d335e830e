//! Sampling, growth records and the fitted and explicit bounds on |psi|.

use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arith::{ext_gcd, GroupElement};
use crate::cusps::TruncationParams;
use crate::error::{ModsymError, Result};
use crate::hyperbolic::{distance, mobius, orbit_distance, PointH};
use crate::reduction::reduce;
use crate::symbols::{modsym_word, SymbolMap};
use crate::words::{GeneratorTable, Word};

/// Cap on the number of elements a norm ball or orbit ball may hold.
pub const DEFAULT_BALL_CAP: usize = 2_000_000;
/// Rays shot from the base point to sample the boundary of F_T.
pub const BOUNDARY_SAMPLES: usize = 1000;

/// The random source used everywhere: ChaCha8 seeded from a u64.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleStrategy {
    RandomWord,
    NormBall,
}

impl FromStr for SampleStrategy {
    type Err = ModsymError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-word" => Ok(Self::RandomWord),
            "norm-ball" => Ok(Self::NormBall),
            _ => Err(ModsymError::Invalid(format!("unknown strategy `{s}`"))),
        }
    }
}

/// A random freely reduced word with letters drawn uniformly from the
/// generators; its length is drawn uniformly from `0..=max_len` before
/// cancellation.
pub fn random_word(table: &GeneratorTable, max_len: usize, rng: &mut impl Rng) -> Word {
    let len = rng.gen_range(0..=max_len);
    let n = table.generators().len();
    let mut word = Word::new();
    for _ in 0..len {
        let l = table.letter(rng.gen_range(0..n));
        word.push(l, table.is_involution(l.gen));
    }
    word
}

/// For `RandomWord` the parameter is the maximal word length and `size` the
/// number of draws. For `NormBall` the parameter is the norm bound, every
/// element of the ball is returned, and `size` caps how many there may be.
pub fn sample_elements(
    table: &GeneratorTable,
    strategy: SampleStrategy,
    size: usize,
    param: u64,
    seed: u64,
) -> Result<Vec<GroupElement>> {
    if size == 0 {
        return Err(ModsymError::Invalid("sample size must be at least 1".into()));
    }
    match strategy {
        SampleStrategy::RandomWord => {
            let mut rng = seeded_rng(seed);
            Ok((0..size)
                .map(|_| table.evaluate(&random_word(table, param as usize, &mut rng)))
                .collect())
        }
        SampleStrategy::NormBall => norm_ball(table.level(), param, size),
    }
}

/// Solutions a of `a d = 1 mod c` with |a| <= bound, as (a, b) with
/// `a d - b c = 1`.
fn completions(c: i128, d: i128, bound: i128) -> impl Iterator<Item = (i128, i128)> {
    let (_, inv, _) = ext_gcd(&BigInt::from(d), &BigInt::from(c));
    let a0 = inv.to_i128().expect("small").rem_euclid(c);
    let first = a0 - c * ((a0 + bound) / c);
    (0..)
        .map(move |j| first + j * c)
        .take_while(move |&a| a <= bound)
        .filter(move |&a| a >= -bound)
        .map(move |a| (a, (a * d - 1) / c))
}

/// Every canonical element of Gamma_0(N) with norm at most `bound`, ordered by
/// bottom row.
pub fn norm_ball(level: u64, bound: u64, cap: usize) -> Result<Vec<GroupElement>> {
    let m = bound as i128;
    let mut out = Vec::new();
    let push = |g: GroupElement, out: &mut Vec<GroupElement>| {
        out.push(g);
        if out.len() > cap {
            Err(ModsymError::Resource(format!("norm ball exceeds {cap} elements")))
        } else {
            Ok(())
        }
    };
    for b in -m..=m {
        push(GroupElement::t_pow(BigInt::from(b)), &mut out)?;
    }
    let mut c = level as i128;
    while c <= m {
        for d in -m..=m {
            if c.gcd(&d) != 1 {
                continue;
            }
            for (a, b) in completions(c, d, m) {
                if b.abs() <= m {
                    let g = GroupElement::new(a.into(), b.into(), c.into(), d.into())?;
                    push(g, &mut out)?;
                }
            }
        }
        c += level as i128;
    }
    Ok(out)
}

/// A random element of Gamma_0(N) of norm at most `max_norm`: a random
/// admissible bottom row, then a random top row completing it.
pub fn random_gamma0(level: u64, max_norm: u64, rng: &mut impl Rng) -> GroupElement {
    let m = max_norm as i128;
    loop {
        let c = level as i128 * rng.gen_range(0..=max_norm / level) as i128;
        if c == 0 {
            return GroupElement::t_pow(BigInt::from(rng.gen_range(-m..=m)));
        }
        let d = rng.gen_range(-m..=m);
        if c.gcd(&d) != 1 {
            continue;
        }
        let choices: Vec<(i128, i128)> = completions(c, d, m).filter(|(_, b)| b.abs() <= m).collect();
        if choices.is_empty() {
            continue;
        }
        let (a, b) = choices[rng.gen_range(0..choices.len())];
        return GroupElement::new(a.into(), b.into(), c.into(), d.into()).expect("determinant one");
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthRecord {
    pub norm: BigInt,
    pub log_norm: f64,
    pub word_len: usize,
    /// d(z0, g z0)
    pub dist: f64,
    /// d(z0, g_s z0) after parabolic reduction
    pub reduced_dist: f64,
    pub abs_psi: f64,
}

pub fn record(g: &GroupElement, map: &SymbolMap, trunc: &TruncationParams, z0: PointH) -> Result<GrowthRecord> {
    let word = map.table().rewrite(g)?;
    let red = reduce(g, trunc, z0)?;
    Ok(GrowthRecord {
        norm: g.norm(),
        log_norm: g.log_norm(),
        word_len: word.len(),
        dist: orbit_distance(g, &z0.exact()),
        reduced_dist: red.final_distance(),
        abs_psi: map.word_value(&word).norm(),
    })
}

/// One result per sample element, in input order; failures stay in their row.
pub fn scan(
    sample: &[GroupElement],
    map: &SymbolMap,
    trunc: &TruncationParams,
    z0: PointH,
) -> Vec<Result<GrowthRecord>> {
    sample.par_iter().map(|g| record(g, map, trunc, z0)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthFit {
    pub a: f64,
    pub b: f64,
}

impl GrowthFit {
    pub fn bound(&self, log_norm: f64) -> f64 {
        self.a * log_norm + self.b
    }

    /// Records with `abs_psi > slope_factor * A * log_norm + B + eps`.
    pub fn violations(&self, records: &[GrowthRecord], slope_factor: f64, eps: f64) -> usize {
        records
            .iter()
            .filter(|r| r.abs_psi > slope_factor * self.a * r.log_norm + self.b + eps)
            .count()
    }
}

/// B from the records of norm at most 2, then the smallest A covering the rest.
pub fn fit_log_bound(records: &[GrowthRecord]) -> GrowthFit {
    let two = BigInt::from(2);
    let b = records
        .iter()
        .filter(|r| r.norm <= two)
        .map(|r| r.abs_psi)
        .fold(0.0, f64::max);
    let a = records
        .iter()
        .filter(|r| r.norm > two)
        .map(|r| (r.abs_psi - b) / r.log_norm)
        .fold(0.0, f64::max);
    GrowthFit { a, b }
}

/// Explicit growth constants: F_T has diameter about `radius`, the elements moving
/// the ball of that radius onto itself form `ball_gens`, and `r_lower` bounds
/// the separation of the remaining translates from below.
#[derive(Clone, Debug)]
pub struct ExplicitConstants {
    pub radius: f64,
    pub boundary_samples: usize,
    pub ball_gens: Vec<GroupElement>,
    pub r_lower: f64,
    pub c_s: f64,
}

impl ExplicitConstants {
    /// Coefficient of log ||g|| in the bound.
    pub fn slope(&self) -> f64 {
        self.c_s * 2.0 / self.r_lower
    }

    pub fn intercept(&self) -> f64 {
        self.c_s * (3.0 * std::f64::consts::LN_2 / self.r_lower + 1.0)
    }

    pub fn bound(&self, log_norm: f64) -> f64 {
        self.slope() * log_norm + self.intercept()
    }
}

/// Orbit points within hyperbolic distance `rho` of z0, sorted by distance.
pub fn orbit_ball(level: u64, z0: PointH, rho: f64, cap: usize) -> Result<Vec<(GroupElement, f64)>> {
    let cosh_rho = rho.cosh();
    let e_rho = rho.exp();
    let mut out = Vec::new();
    let push = |g: GroupElement, out: &mut Vec<(GroupElement, f64)>| {
        let d = distance(z0, mobius(&g, z0));
        if d <= rho {
            out.push((g, d));
        }
        if out.len() > cap {
            Err(ModsymError::Resource(format!("orbit ball of radius {rho} exceeds {cap} elements")))
        } else {
            Ok(())
        }
    };
    let kmax = (2.0 * z0.y * z0.y * (cosh_rho - 1.0)).sqrt().floor() as i128;
    for k in -kmax..=kmax {
        push(GroupElement::t_pow(BigInt::from(k)), &mut out)?;
    }
    let cmax = (e_rho.sqrt() / z0.y).floor() as i128;
    let mut c = level as i128;
    while c <= cmax {
        let cf = c as f64;
        let room = (e_rho - cf * cf * z0.y * z0.y).max(0.0).sqrt();
        let dlo = (-cf * z0.x - room).ceil() as i128;
        let dhi = (-cf * z0.x + room).floor() as i128;
        for d in dlo..=dhi {
            if c.gcd(&d) != 1 {
                continue;
            }
            let (_, inv, _) = ext_gcd(&BigInt::from(d), &BigInt::from(c));
            let a0 = inv.to_i128().expect("small").rem_euclid(c);
            let g0 = GroupElement::new(a0.into(), ((a0 * d - 1) / c).into(), c.into(), d.into())?;
            let w = mobius(&g0, z0);
            let spread = 2.0 * w.y * z0.y * (cosh_rho - 1.0) - (w.y - z0.y).powi(2);
            if spread < 0.0 {
                continue;
            }
            let s = spread.sqrt();
            let klo = (z0.x - s - w.x).ceil() as i64;
            let khi = (z0.x + s - w.x).floor() as i64;
            for k in klo..=khi {
                push(&GroupElement::t_pow(k) * &g0, &mut out)?;
            }
        }
        c += level as i128;
    }
    out.sort_by(|x, y| x.1.total_cmp(&y.1));
    Ok(out)
}

/// Whether z lies in an open horoball of H_T, in floating point. Only cusps
/// p/q with `1 / (T q^2) > Im z` can contain z, and for each such q only the
/// nearest p.
fn in_horoball_f64(z: PointH, trunc: &TruncationParams) -> bool {
    let t = trunc.t();
    if z.y > t {
        return true;
    }
    let level = trunc.level();
    let qmax = (1.0 / (t * z.y)).sqrt().floor() as u64;
    (1..=qmax).any(|q| {
        let h = level / (q * q).gcd(&level);
        let diam = 1.0 / (t * h as f64 * (q * q) as f64);
        let p = (z.x * q as f64).round();
        let dx = z.x - p / q as f64;
        let dy = z.y - diam / 2.0;
        dx * dx + dy * dy < diam * diam / 4.0
    })
}

/// Point at distance t from z0 along the geodesic leaving in direction theta.
fn along_ray(z0: PointH, theta: f64, t: f64) -> PointH {
    let (s, c) = (theta / 2.0).sin_cos();
    let w = Complex64::new(0.0, t.exp());
    let r = (w * c + s) / (-w * s + c);
    PointH {
        x: z0.x + z0.y * r.re,
        y: z0.y * r.im,
    }
}

/// Largest distance from z0 reached on the boundary of the truncated
/// Dirichlet domain along evenly spaced rays, or None when a ray runs past
/// `rho / 2`, the range over which `orbit` certifies the Dirichlet test.
fn boundary_radius(trunc: &TruncationParams, z0: PointH, orbit: &[(GroupElement, f64)], rho: f64, rays: usize) -> Option<f64> {
    let points: Vec<(PointH, f64)> = orbit
        .iter()
        .filter(|(g, _)| !g.is_identity())
        .map(|(g, d)| (mobius(g, z0), *d))
        .collect();
    let inside = |z: PointH, t: f64| {
        if in_horoball_f64(z, trunc) {
            return false;
        }
        let own = ((z.x - z0.x).powi(2) + (z.y - z0.y).powi(2)) / z0.y;
        points
            .iter()
            .take_while(|(_, d)| *d <= 2.0 * t + 1e-9)
            .all(|(w, _)| own <= ((z.x - w.x).powi(2) + (z.y - w.y).powi(2)) / w.y)
    };
    let step = 0.25;
    let radii: Option<Vec<f64>> = (0..rays)
        .into_par_iter()
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / rays as f64;
            let mut hi = step;
            while inside(along_ray(z0, theta, hi), hi) {
                hi += step;
                if 2.0 * hi > rho {
                    return None;
                }
            }
            let mut lo = hi - step;
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if inside(along_ray(z0, theta, mid), mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(lo)
        })
        .collect();
    radii.map(|r| r.into_iter().fold(0.0, f64::max))
}

/// Diameter estimate R of F_T, the ball generators, r_lower and C_S.
pub fn explicit_constants(
    table: &GeneratorTable,
    trunc: &TruncationParams,
    z0: PointH,
    map: &SymbolMap,
) -> Result<ExplicitConstants> {
    explicit_constants_with(table, trunc, z0, map, BOUNDARY_SAMPLES, DEFAULT_BALL_CAP)
}

pub fn explicit_constants_with(
    table: &GeneratorTable,
    trunc: &TruncationParams,
    z0: PointH,
    map: &SymbolMap,
    rays: usize,
    cap: usize,
) -> Result<ExplicitConstants> {
    if table.level() != trunc.level() || map.table().level() != table.level() {
        return Err(ModsymError::Mismatch("table, truncation and symbol map levels differ".into()));
    }
    let level = table.level();
    let mut rho = 8.0;
    let radius = loop {
        let orbit = orbit_ball(level, z0, rho, cap)?;
        if let Some(r) = boundary_radius(trunc, z0, &orbit, rho, rays) {
            break r;
        }
        rho += 4.0;
    };

    let mut extra = 1.0;
    let (ball_gens, r_lower) = loop {
        let orbit = orbit_ball(level, z0, 2.0 * radius + extra, cap)?;
        let (inner, outer): (Vec<_>, Vec<_>) = orbit.into_iter().partition(|(_, d)| *d <= 2.0 * radius);
        if let Some((_, d)) = outer.first() {
            break (inner.into_iter().map(|(g, _)| g).collect::<Vec<_>>(), d - 2.0 * radius);
        }
        extra *= 2.0;
    };
    if !(r_lower > 0.0) {
        return Err(ModsymError::Precision("separation estimate is not positive".into()));
    }
    let c_s = ball_gens
        .par_iter()
        .map(|g| modsym_word(g, map).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(ExplicitConstants {
        radius,
        boundary_samples: rays,
        ball_gens,
        r_lower,
        c_s,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub checked: usize,
    pub violations: usize,
    /// Smallest and largest `bound - abs_psi`; infinite when nothing was checked.
    pub min_slack: f64,
    pub max_slack: f64,
}

pub fn verify_lemma2(records: &[GrowthRecord], consts: &ExplicitConstants) -> BoundReport {
    let mut rep = BoundReport {
        checked: records.len(),
        violations: 0,
        min_slack: f64::INFINITY,
        max_slack: f64::NEG_INFINITY,
    };
    for r in records {
        let slack = consts.bound(r.log_norm) - r.abs_psi;
        if slack < 0.0 {
            rep.violations += 1;
        }
        rep.min_slack = rep.min_slack.min(slack);
        rep.max_slack = rep.max_slack.max(slack);
    }
    rep
}

pub const CSV_HEADER: &str = "norm,log_norm,word_len,dist,reduced_dist,abs_psi";

/// 12 significant digits, positional for magnitudes in [1e-4, 1e15) and
/// scientific outside; zero prints as `0`.
pub fn format_sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..15).contains(&exp) {
        return format!("{v:.11e}");
    }
    let digits = |exp: i32| (11 - exp).max(0) as usize;
    let s = format!("{:.*}", digits(exp), v);
    // rounding may carry into a new leading digit
    let rounded: f64 = s.parse().expect("just formatted");
    if rounded.abs() >= 10f64.powi(exp + 1) {
        format!("{:.*}", digits(exp + 1), v)
    } else {
        s
    }
}

pub fn csv_row(r: &GrowthRecord) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.norm,
        format_sig12(r.log_norm),
        r.word_len,
        format_sig12(r.dist),
        format_sig12(r.reduced_dist),
        format_sig12(r.abs_psi)
    )
}

pub fn to_csv(records: &[GrowthRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(out, "{}", csv_row(r)).expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(norm: i64, abs_psi: f64) -> GrowthRecord {
        let norm = BigInt::from(norm);
        GrowthRecord {
            log_norm: crate::arith::ln_bigint(&norm),
            norm,
            word_len: 0,
            dist: 0.0,
            reduced_dist: 0.0,
            abs_psi,
        }
    }

    #[test]
    fn zero_length_words_give_identity() {
        let table = GeneratorTable::new(11).unwrap();
        let s = sample_elements(&table, SampleStrategy::RandomWord, 1, 0, 3).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s[0].is_identity());
    }

    #[test]
    fn sampling_is_deterministic() {
        let table = GeneratorTable::new(11).unwrap();
        let a = sample_elements(&table, SampleStrategy::RandomWord, 50, 20, 9).unwrap();
        let b = sample_elements(&table, SampleStrategy::RandomWord, 50, 20, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|g| g.in_gamma0(11)));
    }

    #[test]
    fn unit_norm_ball_matches_exhaustive_search() {
        let mut oracle = Vec::new();
        for a in -1..=1 {
            for b in -1..=1 {
                for c in -1..=1 {
                    for d in -1..=1 {
                        if let Ok(g) = GroupElement::from_i64(a, b, c, d) {
                            if !oracle.contains(&g) {
                                oracle.push(g);
                            }
                        }
                    }
                }
            }
        }
        let table = GeneratorTable::new(1).unwrap();
        let ball = sample_elements(&table, SampleStrategy::NormBall, 100, 1, 0).unwrap();
        assert_eq!(ball.len(), oracle.len());
        assert_eq!(ball.len(), 10);
        assert!(oracle.iter().all(|g| ball.contains(g)));
        assert!(matches!(norm_ball(1, 1, 5), Err(ModsymError::Resource(_))));
    }

    #[test]
    fn random_elements_respect_bounds() {
        let mut rng = seeded_rng(1);
        for _ in 0..200 {
            let g = random_gamma0(11, 1000, &mut rng);
            assert!(g.in_gamma0(11));
            assert!(g.norm() <= BigInt::from(1000));
        }
    }

    #[test]
    fn fitting_rule() {
        assert_eq!(fit_log_bound(&[rec(1, 0.0), rec(5, 0.0)]), GrowthFit { a: 0.0, b: 0.0 });
        assert_eq!(fit_log_bound(&[rec(1, 0.7)]), GrowthFit { a: 0.0, b: 0.7 });
        let synth: Vec<_> = [3, 10, 1000, 98765]
            .iter()
            .map(|&n| rec(n, 2.0 * (n as f64).ln()))
            .collect();
        let fit = fit_log_bound(&synth);
        assert!((fit.a - 2.0).abs() < 1e-12 && fit.b == 0.0);
        assert_eq!(fit.violations(&synth, 1.0, 1e-9), 0);
    }

    #[test]
    fn explicit_bound_trivial_cases() {
        let consts = ExplicitConstants {
            radius: 1.0,
            boundary_samples: 0,
            ball_gens: vec![],
            r_lower: 0.5,
            c_s: 2.0,
        };
        assert_eq!(verify_lemma2(&[], &consts).violations, 0);
        let rep = verify_lemma2(&[rec(1, 0.0)], &consts);
        assert_eq!(rep.violations, 0);
        assert!(rep.min_slack >= consts.c_s);
    }

    #[test]
    fn sig12_formatting() {
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(1.0), "1.00000000000");
        assert_eq!(format_sig12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(format_sig12(9.999999999999), "10.0000000000");
        assert_eq!(format_sig12(0.001234), "0.00123400000000");
        assert_eq!(format_sig12(123456789012345.0), "123456789012345");
        assert_eq!(format_sig12(-3.3306690738754696e-16), "-3.33066907388e-16");
        assert_eq!(format_sig12(2.5e20), "2.50000000000e20");
    }

    #[test]
    fn orbit_ball_matches_norm_ball_filter() {
        // every orbit point within the radius comes from a bottom row with
        // |c z0 + d|^2 <= e^rho, so a large enough norm ball contains them all
        let z0 = PointH::new(0.0, 2.0).unwrap();
        let rho = 7.0;
        let ball = orbit_ball(11, z0, rho, 100_000).unwrap();
        let oracle: Vec<_> = norm_ball(11, 300, 10_000_000)
            .unwrap()
            .into_iter()
            .filter(|g| distance(z0, mobius(g, z0)) <= rho)
            .collect();
        assert_eq!(ball.len(), oracle.len());
        assert!(oracle.iter().all(|g| ball.iter().any(|(h, _)| h == g)));
    }

    #[test]
    fn ray_parametrisation_is_unit_speed() {
        let z0 = PointH::new(0.3, 1.7).unwrap();
        for k in 0..8 {
            let theta = k as f64;
            let z = along_ray(z0, theta, 2.5);
            assert!((distance(z0, z) - 2.5).abs() < 1e-12);
        }
    }
}
