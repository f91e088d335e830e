#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use modsym::growth::{random_gamma0, seeded_rng};
use modsym::series::{builtin_level11, DEFAULT_ORDER};
use modsym::symbols::{build_symbol_map, SymbolMap, DEFAULT_TOL};
use modsym::words::GeneratorTable;
use modsym::{GroupElement, PointH};

pub fn z0() -> PointH {
    PointH::new(0.0, 2.0).unwrap()
}

/// The level 11 map at full order, built once per test binary.
pub fn map11() -> &'static SymbolMap {
    static MAP: OnceLock<SymbolMap> = OnceLock::new();
    MAP.get_or_init(|| {
        let table = Arc::new(GeneratorTable::new(11).unwrap());
        build_symbol_map(table, &builtin_level11(DEFAULT_ORDER), DEFAULT_TOL).unwrap()
    })
}

pub fn random_elements(level: u64, max_norm: u64, count: usize, seed: u64) -> Vec<GroupElement> {
    let mut rng = seeded_rng(seed);
    (0..count).map(|_| random_gamma0(level, max_norm, &mut rng)).collect()
}

/// arccosh(1 + x) written so that it stays accurate for small x.
pub fn acosh_one_plus(x: f64) -> f64 {
    (x + (x * x + 2.0 * x).sqrt()).ln_1p()
}

/// Reference distance from cosh d = 1 + |z - w|^2 / (2 Im z Im w).
pub fn oracle_distance(z: PointH, w: PointH) -> f64 {
    acosh_one_plus(((z.x - w.x).powi(2) + (z.y - w.y).powi(2)) / (2.0 * z.y * w.y))
}
