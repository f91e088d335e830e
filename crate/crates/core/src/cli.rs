//! Command line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;

use crate::arith::GroupElement;
use crate::cusps::{cusp_classes, choose_truncation, TruncationParams};
use crate::error::{ModsymError, Result};
use crate::growth::{
    explicit_constants, fit_log_bound, format_sig12, sample_elements, scan, to_csv, SampleStrategy,
};
use crate::hyperbolic::PointH;
use crate::reduction::reduce;
use crate::series::{builtin_level11, load_series, CuspFormSeries, DEFAULT_ORDER};
use crate::symbols::{build_symbol_map, modsym_direct, SymbolMap, DEFAULT_TOL};
use crate::words::{decompose_psl2z, format_psl2z_word, GeneratorTable};

pub const CACHE_ENV: &str = "MODSYM_CACHE_DIR";
pub const BUILTIN_11: &str = "builtin:11";

#[derive(Parser, Debug)]
#[command(name = "modsym", about = "Modular symbols for Gamma_0(N) and their growth")]
struct Cli {
    /// File of `key = value` lines; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Default, Clone)]
struct Common {
    /// Real part of the base point.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    /// Imaginary part of the base point.
    #[arg(long)]
    y: Option<f64>,
    /// Truncation height, overriding the automatic choice.
    #[arg(long)]
    t: Option<f64>,
    /// Coefficient file, or `builtin:11`.
    #[arg(long)]
    coeffs: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct Matrix {
    #[arg(allow_hyphen_values = true)]
    a: BigInt,
    #[arg(allow_hyphen_values = true)]
    b: BigInt,
    #[arg(allow_hyphen_values = true)]
    c: BigInt,
    #[arg(allow_hyphen_values = true)]
    d: BigInt,
}

impl Matrix {
    fn element(&self) -> Result<GroupElement> {
        GroupElement::new(self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone())
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Coset representatives and Schreier generators of Gamma_0(N).
    Gens { level: u64 },
    /// Cusp class representatives and widths.
    Cusps { level: u64 },
    /// Word in S and T for a matrix of SL_2(Z); with --level also the word
    /// in the generators of Gamma_0(N).
    Decompose {
        #[command(flatten)]
        m: Matrix,
        #[arg(long)]
        level: Option<u64>,
    },
    /// Modular symbol of a matrix: real part, imaginary part, modulus.
    Symbol {
        level: u64,
        #[command(flatten)]
        m: Matrix,
        #[command(flatten)]
        common: Common,
    },
    /// Parabolic reduction of a matrix.
    Reduce {
        level: u64,
        #[command(flatten)]
        m: Matrix,
        #[command(flatten)]
        common: Common,
    },
    /// Sample elements and write their growth records as CSV.
    Scan {
        level: u64,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        max_len: Option<u64>,
        #[arg(long)]
        norm_bound: Option<u64>,
        /// `random-word` or `norm-ball`.
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diameter, ball generators, separation and the explicit bound.
    Constants {
        level: u64,
        #[command(flatten)]
        common: Common,
    },
}

/// Everything a run depends on, after merging the config file and flags.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub level: u64,
    pub base_point: (f64, f64),
    pub truncation: Option<f64>,
    pub coeffs: String,
    pub strategy: SampleStrategy,
    pub size: usize,
    pub max_len: u64,
    pub norm_bound: u64,
    pub seed: Option<u64>,
    pub tol: f64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(level: u64) -> Self {
        Self {
            level,
            base_point: (0.0, 2.0),
            truncation: None,
            coeffs: BUILTIN_11.into(),
            strategy: SampleStrategy::RandomWord,
            size: 100,
            max_len: 30,
            norm_bound: 10,
            seed: None,
            tol: DEFAULT_TOL,
            out: None,
        }
    }

    /// Applies `key = value` lines; `#` starts a comment line.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| ModsymError::Parse { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: std::str::FromStr>(v: &str, err: impl Fn(String) -> ModsymError) -> Result<T> {
                v.parse().map_err(|_| err(format!("bad value `{v}`")))
            }
            match key {
                "x" => self.base_point.0 = num(value, err)?,
                "y" => self.base_point.1 = num(value, err)?,
                "t" => self.truncation = Some(num(value, err)?),
                "coeffs" => self.coeffs = value.to_string(),
                "tol" => self.tol = num(value, err)?,
                "size" => self.size = num(value, err)?,
                "max-len" | "max_len" => self.max_len = num(value, err)?,
                "norm-bound" | "norm_bound" => self.norm_bound = num(value, err)?,
                "strategy" => self.strategy = value.parse().map_err(|_| err(format!("bad strategy `{value}`")))?,
                "seed" => self.seed = Some(num(value, err)?),
                "out" => self.out = Some(PathBuf::from(value)),
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        Ok(())
    }

    fn apply_common(&mut self, c: &Common) {
        if let Some(x) = c.x {
            self.base_point.0 = x;
        }
        if let Some(y) = c.y {
            self.base_point.1 = y;
        }
        if c.t.is_some() {
            self.truncation = c.t;
        }
        if let Some(s) = &c.coeffs {
            self.coeffs = s.clone();
        }
        if let Some(t) = c.tol {
            self.tol = t;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.level == 0 {
            return Err(ModsymError::Invalid("level must be positive".into()));
        }
        PointH::new(self.base_point.0, self.base_point.1)?;
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(ModsymError::Invalid(format!("tolerance {} not in (0, 1)", self.tol)));
        }
        if self.strategy == SampleStrategy::RandomWord && self.seed.is_none() {
            return Err(ModsymError::Invalid("random sampling needs --seed".into()));
        }
        Ok(())
    }

    pub fn z0(&self) -> PointH {
        PointH {
            x: self.base_point.0,
            y: self.base_point.1,
        }
    }

    pub fn truncation(&self) -> Result<TruncationParams> {
        match self.truncation {
            Some(t) => TruncationParams::new(self.level, t, cusp_classes(self.level)),
            None => choose_truncation(self.level, self.z0()),
        }
    }

    pub fn series(&self) -> Result<CuspFormSeries> {
        if self.coeffs == BUILTIN_11 {
            Ok(builtin_level11(DEFAULT_ORDER))
        } else {
            load_series(Path::new(&self.coeffs))
        }
    }
}

/// Generator table for the level, read from and written to the cache
/// directory named by `MODSYM_CACHE_DIR` when it is set.
pub fn load_table(level: u64) -> Result<Arc<GeneratorTable>> {
    let Some(dir) = std::env::var_os(CACHE_ENV) else {
        return Ok(Arc::new(GeneratorTable::new(level)?));
    };
    let path = Path::new(&dir).join(format!("gamma0_{level}.bin"));
    if let Ok(bytes) = fs::read(&path) {
        if let Ok(table) = GeneratorTable::read_binary(&mut bytes.as_slice()) {
            if table.level() == level {
                return Ok(Arc::new(table));
            }
        }
    }
    let table = GeneratorTable::new(level)?;
    fs::create_dir_all(&dir)?;
    let mut buf = Vec::new();
    table.write_binary(&mut buf)?;
    fs::write(&path, buf)?;
    Ok(Arc::new(table))
}

fn symbol_map(cfg: &RunConfig) -> Result<SymbolMap> {
    let table = load_table(cfg.level)?;
    build_symbol_map(table, &cfg.series()?, cfg.tol)
}

fn base_config(level: u64, file: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(level);
    if let Some(p) = file {
        cfg.apply_file(&fs::read_to_string(p)?)?;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let file = cli.config.as_deref();
    match cli.cmd {
        Cmd::Gens { level } => {
            base_config(level, file)?.validate_level()?;
            let table = load_table(level)?;
            writeln!(out, "index {}", table.index())?;
            for (k, ((c, d), rep)) in table.cosets().iter().zip(table.transversal()).enumerate() {
                writeln!(out, "coset {k} ({c}:{d}) {rep}")?;
            }
            writeln!(out, "generators {}", table.generators().len())?;
            write!(out, "{}", table.describe())?;
        }
        Cmd::Cusps { level } => {
            base_config(level, file)?.validate_level()?;
            for cls in cusp_classes(level) {
                writeln!(out, "{} width {}", cls.rep, cls.width)?;
            }
        }
        Cmd::Decompose { m, level } => {
            let g = m.element()?;
            writeln!(out, "{}", format_psl2z_word(&decompose_psl2z(&g)))?;
            if let Some(n) = level {
                let table = load_table(n)?;
                let word = table.rewrite(&g)?;
                let idx: Vec<String> = word
                    .letters()
                    .iter()
                    .map(|&l| table.letter_generator(l).to_string())
                    .collect();
                writeln!(out, "generators [{}]", idx.join(" "))?;
            }
        }
        Cmd::Symbol { level, m, common } => {
            let mut cfg = base_config(level, file)?;
            cfg.apply_common(&common);
            cfg.validate_level()?;
            let g = m.element()?;
            g.require_gamma0(level)?;
            let f = cfg.series()?;
            if level % f.level() != 0 {
                return Err(ModsymError::Mismatch(format!(
                    "form of level {} does not live on Gamma_0({level})",
                    f.level()
                )));
            }
            let v = modsym_direct(&g, &f, cfg.tol)?;
            writeln!(out, "{} {} {}", format_sig12(v.re), format_sig12(v.im), format_sig12(v.norm()))?;
        }
        Cmd::Reduce { level, m, common } => {
            let mut cfg = base_config(level, file)?;
            cfg.apply_common(&common);
            cfg.validate_level()?;
            let g = m.element()?;
            let r = reduce(&g, &cfg.truncation()?, cfg.z0())?;
            writeln!(out, "gamma_s {}", r.gamma_s)?;
            writeln!(out, "parabolics {}", r.parabolics.len())?;
            writeln!(out, "dist_before {}", format_sig12(r.initial_distance()))?;
            writeln!(out, "dist_after {}", format_sig12(r.final_distance()))?;
        }
        Cmd::Scan {
            level,
            common,
            size,
            max_len,
            norm_bound,
            strategy,
            seed,
            out: out_path,
        } => {
            let mut cfg = base_config(level, file)?;
            cfg.apply_common(&common);
            if let Some(s) = size {
                cfg.size = s;
            }
            if let Some(l) = max_len {
                cfg.max_len = l;
            }
            if let Some(b) = norm_bound {
                cfg.norm_bound = b;
            }
            if let Some(s) = strategy {
                cfg.strategy = s.parse()?;
            }
            if seed.is_some() {
                cfg.seed = seed;
            }
            if out_path.is_some() {
                cfg.out = out_path;
            }
            cfg.validate()?;
            let map = symbol_map(&cfg)?;
            let trunc = cfg.truncation()?;
            let param = match cfg.strategy {
                SampleStrategy::RandomWord => cfg.max_len,
                SampleStrategy::NormBall => cfg.norm_bound,
            };
            let sample = sample_elements(map.table(), cfg.strategy, cfg.size, param, cfg.seed.unwrap_or(0))?;
            let mut records = Vec::new();
            let mut first_error = None;
            for (i, row) in scan(&sample, &map, &trunc, cfg.z0()).into_iter().enumerate() {
                match row {
                    Ok(r) => records.push(r),
                    Err(e) => {
                        writeln!(err, "error: row {i}: {e}")?;
                        first_error.get_or_insert(e);
                    }
                }
            }
            let csv = to_csv(&records);
            match &cfg.out {
                Some(p) => fs::write(p, csv)?,
                None => write!(out, "{csv}")?,
            }
            let fit = fit_log_bound(&records);
            let summary = format!(
                "rows {} failed {}\nfit A {} B {}\n",
                records.len(),
                sample.len() - records.len(),
                format_sig12(fit.a),
                format_sig12(fit.b)
            );
            // keep stdout pure CSV when the rows go there
            if cfg.out.is_some() {
                write!(out, "{summary}")?;
            } else {
                write!(err, "{summary}")?;
            }
            if let Some(e) = first_error {
                return Err(e);
            }
        }
        Cmd::Constants { level, common } => {
            let mut cfg = base_config(level, file)?;
            cfg.apply_common(&common);
            cfg.validate_level()?;
            let map = symbol_map(&cfg)?;
            let c = explicit_constants(map.table(), &cfg.truncation()?, cfg.z0(), &map)?;
            writeln!(out, "R {} (estimate from {} boundary rays)", format_sig12(c.radius), c.boundary_samples)?;
            writeln!(out, "S {}", c.ball_gens.len())?;
            writeln!(out, "r_lower {}", format_sig12(c.r_lower))?;
            writeln!(out, "C_S {}", format_sig12(c.c_s))?;
            writeln!(out, "bound {} * log_norm + {}", format_sig12(c.slope()), format_sig12(c.intercept()))?;
        }
    }
    Ok(())
}

impl RunConfig {
    /// The checks that apply when no sampling is involved.
    fn validate_level(&self) -> Result<()> {
        let mut probe = self.clone();
        probe.seed.get_or_insert(0);
        probe.validate()
    }
}

/// Exit status for an error: 1 for bad input, 2 for numerical or resource limits.
pub fn exit_code(e: &ModsymError) -> i32 {
    if e.is_domain() {
        1
    } else {
        2
    }
}

/// Runs the command line with explicit output streams; `argv[0]` is the
/// program name.
pub fn run_with(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_then_flags() {
        let mut cfg = RunConfig::new(11);
        cfg.apply_file("# experiment\nseed = 7\ny = 3\nstrategy = norm-ball\n").unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.base_point, (0.0, 3.0));
        assert_eq!(cfg.strategy, SampleStrategy::NormBall);
        cfg.apply_common(&Common {
            y: Some(2.5),
            ..Default::default()
        });
        assert_eq!(cfg.base_point.1, 2.5);
        match cfg.apply_file("seed = 1\nbogus = 2\n") {
            Err(ModsymError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::new(11);
        assert!(cfg.validate().is_err());
        cfg.seed = Some(1);
        cfg.validate().unwrap();
        cfg.tol = 1.0;
        assert!(cfg.validate().is_err());
        cfg.tol = 1e-8;
        cfg.base_point.1 = 0.0;
        assert!(cfg.validate().is_err());
    }
}
