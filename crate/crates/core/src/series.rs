//! Weight-two cusp forms given by truncated q-expansions.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{ModsymError, Result};

/// Truncation order used for the built-in level 11 form.
pub const DEFAULT_ORDER: usize = 100_000;

#[derive(Clone, Debug)]
pub struct CuspFormSeries {
    level: u64,
    /// a_1, ..., a_M
    coeffs: Vec<Complex64>,
    /// kappa with |a_n| <= kappa * n for every stored n
    coeff_bound: f64,
}

impl CuspFormSeries {
    pub fn new(level: u64, coeffs: Vec<Complex64>) -> Result<Self> {
        if level == 0 {
            return Err(ModsymError::Invalid("level must be positive".into()));
        }
        if coeffs.is_empty() {
            return Err(ModsymError::Invalid("series needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(ModsymError::Invalid("non-finite coefficient".into()));
        }
        let coeff_bound = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm() / (i + 1) as f64)
            .fold(0.0, f64::max);
        Ok(Self {
            level,
            coeffs,
            coeff_bound,
        })
    }

    pub fn zero(level: u64, order: usize) -> Self {
        Self::new(level, vec![Complex64::new(0.0, 0.0); order]).expect("valid")
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn weight(&self) -> u32 {
        2
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// a_n for 1 <= n <= M.
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs[n - 1]
    }

    pub fn coeff_bound(&self) -> f64 {
        self.coeff_bound
    }
}

/// Coefficients of prod_{n >= 1} (1 - q^n) up to q^order, as sparse
/// (exponent, sign) pairs from the pentagonal number theorem.
fn euler_product_terms(order: usize) -> Vec<(usize, i64)> {
    let mut terms = vec![(0, 1)];
    for k in 1.. {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let p1 = k * (3 * k - 1) / 2;
        let p2 = k * (3 * k + 1) / 2;
        if p1 > order {
            break;
        }
        terms.push((p1, sign));
        if p2 <= order {
            terms.push((p2, sign));
        }
    }
    terms.sort_unstable();
    terms
}

fn mul_dense_sparse(dense: &[i64], sparse: &[(usize, i64)], stride: usize) -> Vec<i64> {
    let len = dense.len();
    let mut out = vec![0i64; len];
    for &(e, s) in sparse {
        let shift = e * stride;
        if shift >= len {
            continue;
        }
        for (o, &v) in out[shift..].iter_mut().zip(dense) {
            *o += s * v;
        }
    }
    out
}

/// Integer q-expansion coefficients a_1..a_order of
/// q prod (1 - q^n)^2 (1 - q^{11n})^2.
pub fn eta_level11_coefficients(order: usize) -> Vec<i64> {
    // degrees 0..order-1 of the product, shifted by the leading q
    let len = order;
    let euler = euler_product_terms(len);
    let mut unit = vec![0i64; len];
    unit[0] = 1;
    let mut acc = mul_dense_sparse(&unit, &euler, 1);
    acc = mul_dense_sparse(&acc, &euler, 1);
    acc = mul_dense_sparse(&acc, &euler, 11);
    mul_dense_sparse(&acc, &euler, 11)
}

/// The newform of level 11 from its eta-product expansion.
pub fn builtin_level11(order: usize) -> CuspFormSeries {
    let coeffs = eta_level11_coefficients(order)
        .into_iter()
        .map(|a| Complex64::new(a as f64, 0.0))
        .collect();
    CuspFormSeries::new(11, coeffs).expect("nonempty")
}

/// Parses the coefficient format: a header `N 2 M`, then `M` lines
/// `n re` or `n re im` with n = 1, 2, ..., M. Blank lines and lines starting
/// with `#` are skipped.
pub fn parse_series(text: &str) -> Result<CuspFormSeries> {
    let err = |line: usize, msg: String| ModsymError::Parse { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| err(0, "missing header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(err(hline, format!("expected `N 2 M`, found `{header}`")));
    }
    let parse_u = |s: &str, what: &str| {
        s.parse::<u64>()
            .map_err(|_| err(hline, format!("bad {what} `{s}`")))
    };
    let level = parse_u(fields[0], "level")?;
    let weight = parse_u(fields[1], "weight")?;
    let order = parse_u(fields[2], "order")? as usize;
    if level == 0 {
        return Err(err(hline, "level must be positive".into()));
    }
    if weight != 2 {
        return Err(ModsymError::Mismatch(format!("weight {weight} is not 2")));
    }
    if order == 0 {
        return Err(err(hline, "empty coefficient list".into()));
    }

    let mut coeffs = Vec::with_capacity(order);
    for (ln, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&f.len()) {
            return Err(err(ln, format!("expected `n re [im]`, found `{line}`")));
        }
        let n: usize = f[0].parse().map_err(|_| err(ln, format!("bad index `{}`", f[0])))?;
        if n != coeffs.len() + 1 {
            return Err(err(ln, format!("index {n} out of sequence")));
        }
        if n > order {
            return Err(err(ln, format!("index {n} beyond declared order {order}")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(ln, format!("bad number `{s}`")))
        };
        let re = num(f[1])?;
        let im = if f.len() == 3 { num(f[2])? } else { 0.0 };
        coeffs.push(Complex64::new(re, im));
    }
    if coeffs.len() != order {
        return Err(err(
            text.lines().count(),
            format!("found {} coefficients, header declares {order}", coeffs.len()),
        ));
    }
    CuspFormSeries::new(level, coeffs)
}

pub fn load_series(path: &Path) -> Result<CuspFormSeries> {
    parse_series(&std::fs::read_to_string(path)?)
}
