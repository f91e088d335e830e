//! Words in generators, the coset table of Gamma_0(N) in PSL2(Z), and
//! Reidemeister-Schreier rewriting.
//!
//! Cosets `Gamma_0(N) g` are identified with points of the projective line
//! over Z/N through the bottom row of `g`. A breadth-first spanning tree of
//! the coset graph under S and T gives a prefix-closed transversal, and the
//! non-tree edges give the Schreier generators.

use std::collections::{HashMap, VecDeque};
use std::io::{Read, Write};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::GroupElement;
use crate::error::{ModsymError, Result};
use crate::hyperbolic::{orbit_distance, PointH};
use crate::symbols::SymbolMap;

/// Letter index of S in words over PSL2(Z).
pub const GEN_S: usize = 0;
/// Letter index of T in words over PSL2(Z).
pub const GEN_T: usize = 1;

/// Default cap on the index of Gamma_0(N).
pub const DEFAULT_INDEX_CAP: u64 = 50_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub gen: usize,
    pub exp: i8,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Appends a letter, cancelling it against the last one when they are
    /// mutually inverse. For involutions two equal letters cancel.
    pub fn push(&mut self, letter: Letter, involution: bool) {
        if let Some(last) = self.letters.last() {
            if last.gen == letter.gen && (last.exp == -letter.exp || involution) {
                self.letters.pop();
                return;
            }
        }
        self.letters.push(letter);
    }

    /// Freely reduced concatenation.
    pub fn concat(&self, other: &Word, is_involution: impl Fn(usize) -> bool) -> Word {
        let mut out = self.clone();
        for &l in &other.letters {
            out.push(l, is_involution(l.gen));
        }
        out
    }

    pub fn is_freely_reduced(&self, is_involution: impl Fn(usize) -> bool) -> bool {
        self.letters.windows(2).all(|w| {
            !(w[0].gen == w[1].gen && (w[0].exp == -w[1].exp || is_involution(w[0].gen)))
        })
    }
}

/// Writes `g` as a word in S and T by the Euclidean algorithm on the first
/// column: peel off the nearest translate `T^k`, then S, until the lower-left
/// entry vanishes.
pub fn decompose_psl2z(g: &GroupElement) -> Word {
    let mut word = Word::new();
    let mut cur = g.clone();
    let push_t = |word: &mut Word, k: &BigInt| {
        let exp = if k.is_negative() { -1 } else { 1 };
        let n = k.abs().to_u64().expect("translation length fits u64");
        for _ in 0..n {
            word.push(Letter { gen: GEN_T, exp }, false);
        }
    };
    while !cur.c().is_zero() {
        let (a, c) = (cur.a(), cur.c());
        // nearest integer to a/c, with c > 0
        let k = (BigInt::from(2) * a + c).div_floor(&(BigInt::from(2) * c));
        push_t(&mut word, &k);
        cur = &GroupElement::t_pow(-k) * &cur;
        word.push(Letter { gen: GEN_S, exp: 1 }, true);
        cur = &GroupElement::s() * &cur;
    }
    push_t(&mut word, cur.b());
    word
}

/// Product of a word over {S, T}.
pub fn evaluate_psl2z(word: &Word) -> GroupElement {
    let (s, t, ti) = (GroupElement::s(), GroupElement::t(), GroupElement::t().inverse());
    word.letters.iter().fold(GroupElement::identity(), |acc, l| {
        let m = match (l.gen, l.exp) {
            (GEN_S, _) => &s,
            (_, 1) => &t,
            _ => &ti,
        };
        &acc * m
    })
}

pub fn format_psl2z_word(word: &Word) -> String {
    if word.is_empty() {
        return "1".into();
    }
    let mut parts: Vec<String> = Vec::new();
    let mut run = 0i64;
    let flush = |run: &mut i64, parts: &mut Vec<String>| {
        match *run {
            0 => {}
            1 => parts.push("T".into()),
            k => parts.push(format!("T^{k}")),
        }
        *run = 0;
    };
    for l in &word.letters {
        if l.gen == GEN_S {
            flush(&mut run, &mut parts);
            parts.push("S".into());
        } else {
            run += i64::from(l.exp);
        }
    }
    flush(&mut run, &mut parts);
    parts.join(" ")
}

/// N * prod_{p | N} (1 + 1/p)
pub fn psl2_index(level: u64) -> u64 {
    let mut n = level;
    let mut index = level;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            index = index / p * (p + 1);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        index = index / n * (n + 1);
    }
    index
}

/// The projective line over Z/N with a lookup from every admissible pair.
#[derive(Clone, Debug)]
struct ProjectiveLine {
    level: u64,
    points: Vec<(u64, u64)>,
    lookup: Vec<u32>,
}

impl ProjectiveLine {
    fn new(level: u64) -> Self {
        let n = level as usize;
        let units: Vec<u64> = (1..=level).filter(|u| u.gcd(&level) == 1).map(|u| u % level).collect();
        let mut lookup = vec![u32::MAX; n * n];
        let mut points = Vec::new();
        for c in 0..level {
            for d in 0..level {
                let slot = (c * level + d) as usize;
                if lookup[slot] != u32::MAX || c.gcd(&d).gcd(&level) != 1 {
                    continue;
                }
                let id = points.len() as u32;
                points.push((c, d));
                for &u in &units {
                    let (uc, ud) = (u * c % level, u * d % level);
                    lookup[(uc * level + ud) as usize] = id;
                }
            }
        }
        Self { level, points, lookup }
    }

    fn index_of(&self, c: &BigInt, d: &BigInt) -> usize {
        let n = BigInt::from(self.level);
        let c = c.mod_floor(&n).to_u64().expect("reduced");
        let d = d.mod_floor(&n).to_u64().expect("reduced");
        let id = self.lookup[(c * self.level + d) as usize];
        debug_assert!(id != u32::MAX, "bottom row of a determinant-one matrix");
        id as usize
    }

    fn coset_of(&self, g: &GroupElement) -> usize {
        self.index_of(g.c(), g.d())
    }
}

/// Cosets, transversal and Schreier generators of Gamma_0(N).
#[derive(Clone, Debug)]
pub struct GeneratorTable {
    level: u64,
    line: ProjectiveLine,
    /// Coset index -> position in `line.points`.
    coset_points: Vec<usize>,
    point_to_coset: Vec<usize>,
    transversal: Vec<GroupElement>,
    generators: Vec<GroupElement>,
    inverse: Vec<usize>,
    lookup: HashMap<GroupElement, usize>,
    /// Right action of S, T, T^-1 on cosets.
    action: Vec<[usize; 3]>,
    /// Schreier generator attached to each (coset, S/T/T^-1) edge.
    edge_gen: Vec<[Option<usize>; 3]>,
}

const EDGE_S: usize = 0;
const EDGE_T: usize = 1;
const EDGE_TINV: usize = 2;

fn edge_matrices() -> [GroupElement; 3] {
    [GroupElement::s(), GroupElement::t(), GroupElement::t().inverse()]
}

impl GeneratorTable {
    pub fn new(level: u64) -> Result<Self> {
        Self::with_cap(level, DEFAULT_INDEX_CAP)
    }

    pub fn with_cap(level: u64, index_cap: u64) -> Result<Self> {
        if level == 0 {
            return Err(ModsymError::Invalid("level must be positive".into()));
        }
        let index = psl2_index(level);
        if index > index_cap {
            return Err(ModsymError::Resource(format!(
                "index {index} of Gamma_0({level}) exceeds cap {index_cap}"
            )));
        }
        let line = ProjectiveLine::new(level);
        let edges = edge_matrices();

        // breadth-first spanning tree from the identity coset
        let mut rep: Vec<Option<GroupElement>> = vec![None; line.points.len()];
        let mut order = Vec::with_capacity(line.points.len());
        let start = line.coset_of(&GroupElement::identity());
        rep[start] = Some(GroupElement::identity());
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            order.push(p);
            let r = rep[p].clone().expect("visited");
            for x in &edges {
                let next = &r * x;
                let q = line.coset_of(&next);
                if rep[q].is_none() {
                    rep[q] = Some(next);
                    queue.push_back(q);
                }
            }
        }
        let transversal: Vec<GroupElement> =
            order.iter().map(|&p| rep[p].clone().expect("connected")).collect();

        let mut generators = Vec::new();
        let mut seen = HashMap::new();
        for r in &transversal {
            for x in &edges[..2] {
                let next = r * x;
                let q = rep[line.coset_of(&next)].as_ref().expect("connected");
                let h = &next * &q.inverse();
                if h.is_identity() {
                    continue;
                }
                for m in [h.clone(), h.inverse()] {
                    if !seen.contains_key(&m) {
                        seen.insert(m.clone(), generators.len());
                        generators.push(m);
                    }
                }
            }
        }
        Self::assemble(level, line, transversal, generators)
    }

    /// Rebuilds the derived maps from a transversal and generator list.
    fn assemble(
        level: u64,
        line: ProjectiveLine,
        transversal: Vec<GroupElement>,
        generators: Vec<GroupElement>,
    ) -> Result<Self> {
        let count = line.points.len();
        if transversal.len() != count {
            return Err(ModsymError::Mismatch(format!(
                "transversal has {} elements, expected {count}",
                transversal.len()
            )));
        }
        let mut point_to_coset = vec![usize::MAX; count];
        let coset_points: Vec<usize> = transversal.iter().map(|r| line.coset_of(r)).collect();
        for (i, &p) in coset_points.iter().enumerate() {
            if point_to_coset[p] != usize::MAX {
                return Err(ModsymError::Mismatch("transversal repeats a coset".into()));
            }
            point_to_coset[p] = i;
        }
        if !transversal.first().is_some_and(|r| r.is_identity()) {
            return Err(ModsymError::Mismatch("transversal must start with the identity".into()));
        }
        let lookup: HashMap<GroupElement, usize> =
            generators.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
        let mut inverse = Vec::with_capacity(generators.len());
        for g in &generators {
            if !g.in_gamma0(level) {
                return Err(ModsymError::NotInGroup(g.to_string(), level));
            }
            let j = lookup
                .get(&g.inverse())
                .copied()
                .ok_or_else(|| ModsymError::Mismatch(format!("generator {g} has no inverse")))?;
            inverse.push(j);
        }
        let edges = edge_matrices();
        let mut action = Vec::with_capacity(count);
        let mut edge_gen = Vec::with_capacity(count);
        for r in &transversal {
            let mut act = [0; 3];
            let mut gens = [None; 3];
            for (k, x) in edges.iter().enumerate() {
                let next = r * x;
                let j = point_to_coset[line.coset_of(&next)];
                act[k] = j;
                let h = &next * &transversal[j].inverse();
                if !h.is_identity() {
                    gens[k] = Some(lookup.get(&h).copied().ok_or_else(|| {
                        ModsymError::Mismatch(format!("Schreier generator {h} missing"))
                    })?);
                }
            }
            action.push(act);
            edge_gen.push(gens);
        }
        Ok(Self {
            level,
            line,
            coset_points,
            point_to_coset,
            transversal,
            generators,
            inverse,
            lookup,
            action,
            edge_gen,
        })
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn index(&self) -> usize {
        self.transversal.len()
    }

    /// Coset labels (c : d) in transversal order.
    pub fn cosets(&self) -> Vec<(u64, u64)> {
        self.coset_points.iter().map(|&p| self.line.points[p]).collect()
    }

    pub fn transversal(&self) -> &[GroupElement] {
        &self.transversal
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn generator(&self, j: usize) -> &GroupElement {
        &self.generators[j]
    }

    pub fn inverse_index(&self, j: usize) -> usize {
        self.inverse[j]
    }

    pub fn is_involution(&self, j: usize) -> bool {
        self.inverse[j] == j
    }

    pub fn generator_index(&self, g: &GroupElement) -> Option<usize> {
        self.lookup.get(g).copied()
    }

    /// Coset index of `Gamma_0(N) g`.
    pub fn coset_of(&self, g: &GroupElement) -> usize {
        self.point_to_coset[self.line.coset_of(g)]
    }

    /// Permutation of cosets under right multiplication by S and by T.
    pub fn permutation_s(&self) -> Vec<usize> {
        self.action.iter().map(|a| a[EDGE_S]).collect()
    }

    pub fn permutation_t(&self) -> Vec<usize> {
        self.action.iter().map(|a| a[EDGE_T]).collect()
    }

    /// Letter standing for generator `j`: each inverse pair shares the smaller
    /// index, with the exponent recording which of the two is meant.
    pub fn letter(&self, j: usize) -> Letter {
        let inv = self.inverse[j];
        if inv >= j {
            Letter { gen: j, exp: 1 }
        } else {
            Letter { gen: inv, exp: -1 }
        }
    }

    fn push_generator(&self, word: &mut Word, j: usize) {
        let l = self.letter(j);
        word.push(l, self.is_involution(l.gen));
    }

    /// Generator index a letter stands for.
    pub fn letter_generator(&self, l: Letter) -> usize {
        if l.exp > 0 {
            l.gen
        } else {
            self.inverse[l.gen]
        }
    }

    pub fn evaluate(&self, word: &Word) -> GroupElement {
        word.letters()
            .iter()
            .fold(GroupElement::identity(), |acc, &l| {
                &acc * &self.generators[self.letter_generator(l)]
            })
    }

    pub fn concat(&self, u: &Word, v: &Word) -> Word {
        u.concat(v, |j| self.is_involution(j))
    }

    /// Word in the Schreier generators for an element of Gamma_0(N), obtained
    /// by lifting its S/T word through the coset graph.
    pub fn rewrite(&self, g: &GroupElement) -> Result<Word> {
        g.require_gamma0(self.level)?;
        let mut word = Word::new();
        if g.is_identity() {
            return Ok(word);
        }
        if let Some(j) = self.generator_index(g) {
            self.push_generator(&mut word, j);
            return Ok(word);
        }
        let mut coset = 0;
        for l in decompose_psl2z(g).letters() {
            let edge = match (l.gen, l.exp) {
                (GEN_S, _) => EDGE_S,
                (_, 1) => EDGE_T,
                _ => EDGE_TINV,
            };
            if let Some(j) = self.edge_gen[coset][edge] {
                self.push_generator(&mut word, j);
            }
            coset = self.action[coset][edge];
        }
        debug_assert_eq!(coset, 0, "element of Gamma_0(N) returns to the identity coset");
        Ok(word)
    }

    /// Generator list formatted one per line.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for (j, g) in self.generators.iter().enumerate() {
            out.push_str(&format!("{j} {g} inv={}\n", self.inverse[j]));
        }
        out
    }
}

/// C_S = max over generators of |psi(s)|.
pub fn word_bound_constant(map: &SymbolMap) -> f64 {
    map.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Constants of `l(g) <= lambda * d(g z0, z0) + C` fitted on a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SvarcMilnorFit {
    pub lambda: f64,
    pub cee: f64,
    pub sample_size: usize,
    pub base_point: PointH,
}

impl SvarcMilnorFit {
    pub fn bound(&self, dist: f64) -> f64 {
        self.lambda * dist + self.cee
    }
}

pub const SVARC_MILNOR_C_CAP: f64 = 50.0;
const LAMBDA_GRID_STEPS: u32 = 10_000;

/// Grid search over lambda in {1, 1.1, 1.2, ...}: the first lambda whose
/// forced intercept `max(0, max(l - lambda d))` is at most `cap` wins.
/// Returns `(lambda, C)`; if no grid point reaches the cap the last one is
/// returned with its (too large) intercept.
pub fn fit_svarc_milnor(records: &[(usize, f64)], cap: f64) -> (f64, f64) {
    let intercept = |lambda: f64| {
        records
            .iter()
            .map(|&(l, d)| l as f64 - lambda * d)
            .fold(0.0, f64::max)
    };
    let mut last = (1.0, intercept(1.0));
    for k in 0..=LAMBDA_GRID_STEPS {
        let lambda = f64::from(10 + k) / 10.0;
        let c = intercept(lambda);
        last = (lambda, c);
        if c <= cap {
            break;
        }
    }
    last
}

pub fn estimate_svarc_milnor(
    table: &GeneratorTable,
    sample: &[GroupElement],
    z0: PointH,
) -> Result<SvarcMilnorFit> {
    let exact = z0.exact();
    let records = sample
        .iter()
        .map(|g| Ok((table.rewrite(g)?.len(), orbit_distance(g, &exact))))
        .collect::<Result<Vec<_>>>()?;
    let (lambda, cee) = fit_svarc_milnor(&records, SVARC_MILNOR_C_CAP);
    Ok(SvarcMilnorFit {
        lambda,
        cee,
        sample_size: sample.len(),
        base_point: z0,
    })
}

const CACHE_MAGIC: &[u8; 4] = b"MSGT";
const CACHE_VERSION: u32 = 1;

fn write_bigint(w: &mut impl Write, x: &BigInt) -> std::io::Result<()> {
    let bytes = x.to_signed_bytes_be();
    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
    w.write_all(&bytes)
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut buf = [0; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut buf = [0; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_bigint(r: &mut impl Read) -> std::io::Result<BigInt> {
    let len = read_u32(r)? as usize;
    let mut bytes = vec![0; len];
    r.read_exact(&mut bytes)?;
    Ok(if len == 0 {
        BigInt::from_bytes_be(Sign::NoSign, &[])
    } else {
        BigInt::from_signed_bytes_be(&bytes)
    })
}

fn read_matrices(r: &mut impl Read, count: u64) -> Result<Vec<GroupElement>> {
    (0..count)
        .map(|_| {
            let [a, b, c, d] = [read_bigint(r)?, read_bigint(r)?, read_bigint(r)?, read_bigint(r)?];
            GroupElement::new(a, b, c, d)
        })
        .collect()
}

impl GeneratorTable {
    /// Binary layout: magic `MSGT`, u32 version, u64 level, u64 coset count,
    /// the transversal, u64 generator count, the generators. Matrices are four
    /// big integers, each a u32 byte length followed by signed big-endian bytes.
    /// All fixed-width integers are little-endian.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&self.level.to_le_bytes())?;
        w.write_all(&(self.transversal.len() as u64).to_le_bytes())?;
        for g in &self.transversal {
            for e in g.entries() {
                write_bigint(w, e)?;
            }
        }
        w.write_all(&(self.generators.len() as u64).to_le_bytes())?;
        for g in &self.generators {
            for e in g.entries() {
                write_bigint(w, e)?;
            }
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let bad = |msg: &str| ModsymError::Parse { line: 0, msg: msg.to_string() };
        let mut magic = [0; 4];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(bad("not a generator table file"));
        }
        if read_u32(r)? != CACHE_VERSION {
            return Err(bad("unsupported table version"));
        }
        let level = read_u64(r)?;
        if level == 0 || psl2_index(level) > DEFAULT_INDEX_CAP {
            return Err(bad("level out of range"));
        }
        let cosets = read_u64(r)?;
        if cosets != psl2_index(level) {
            return Err(bad("coset count does not match level"));
        }
        let transversal = read_matrices(r, cosets)?;
        let gens = read_u64(r)?;
        if gens > 4 * cosets + 4 {
            return Err(bad("too many generators"));
        }
        let generators = read_matrices(r, gens)?;
        Self::assemble(level, ProjectiveLine::new(level), transversal, generators)
    }
}
