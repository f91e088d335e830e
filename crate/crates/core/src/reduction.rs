//! Parabolic reduction: left-multiply by cusp stabiliser elements until the
//! geodesic from z0 to the orbit point avoids every horoball of H_T.
//!
//! Each step looks at the horoballs the current geodesic enters. For a horoball
//! at cusp u with `G infinity = u` (G = class mapping times class
//! representative), the candidates are `G T^{h j} G^-1`; after `G^-1` these
//! are horizontal translations by multiples of the width, so the best one
//! brings the real parts of `G^-1 z0` and `G^-1 g z0` together. Distances are
//! compared exactly through `cosh d - 1`, so every accepted step is a certified
//! strict decrease.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::arith::GroupElement;
use crate::cusps::{classify_cusp, Cusp, TruncationParams, DEFAULT_NODE_CAP};
use crate::error::{ModsymError, Result};
use crate::hyperbolic::{acosh_one_plus, orbit_cosh_minus_one, ratio_floor, ExactPoint, PointH, Segment};

#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub gamma_s: GroupElement,
    /// Parabolics in the order applied: `gamma_s = p_n ... p_1 gamma`.
    pub parabolics: Vec<GroupElement>,
    pub steps: usize,
    /// d(z0, g z0) for the input and after each step.
    pub distances: Vec<f64>,
}

impl ReductionResult {
    pub fn initial_distance(&self) -> f64 {
        self.distances[0]
    }

    pub fn final_distance(&self) -> f64 {
        *self.distances.last().expect("nonempty")
    }

    /// `p_n ... p_1 gamma`, recomputed from the recorded parabolics.
    pub fn replay(&self, gamma: &GroupElement) -> GroupElement {
        self.parabolics
            .iter()
            .fold(gamma.clone(), |acc, p| p * &acc)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReductionConfig {
    pub max_steps: usize,
    /// Stabiliser powers +-1 ..= +-max_power are tried besides the optimal shift.
    pub max_power: i64,
    pub node_cap: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            max_steps: 10_000,
            max_power: 8,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

pub fn reduce(gamma: &GroupElement, trunc: &TruncationParams, z0: PointH) -> Result<ReductionResult> {
    reduce_with(gamma, trunc, z0, ReductionConfig::default())
}

/// Candidate parabolics fixing `u`, with the stabiliser generator conjugated
/// into place.
fn candidates(
    u: &Cusp,
    trunc: &TruncationParams,
    z0: &ExactPoint,
    w: &ExactPoint,
    max_power: i64,
) -> Vec<GroupElement> {
    let (k, g_c) = classify_cusp(u, trunc.level(), trunc.classes());
    let cls = &trunc.classes()[k];
    let g = &g_c * &cls.g_rep;
    let g_inv = g.inverse();
    let h = BigInt::from(cls.width);
    // shift that best aligns G^-1 w with G^-1 z0
    let gap = (z0.mobius(&g_inv).x - w.mobius(&g_inv).x) / BigRational::from_integer(h.clone());
    let floor = ratio_floor(&gap);
    let mut powers: Vec<BigInt> = vec![floor.clone(), floor + 1];
    powers.extend((1..=max_power).flat_map(|j| [BigInt::from(j), BigInt::from(-j)]));
    powers.sort();
    powers.dedup();
    powers
        .into_iter()
        .filter(|j| *j != BigInt::from(0))
        .map(|j| GroupElement::t_pow(&h * j).conjugate_by(&g))
        .collect()
}

pub fn reduce_with(
    gamma: &GroupElement,
    trunc: &TruncationParams,
    z0: PointH,
    config: ReductionConfig,
) -> Result<ReductionResult> {
    gamma.require_gamma0(trunc.level())?;
    let z0e = z0.exact();
    let t = BigRational::from_float(trunc.t()).expect("finite");
    if trunc.classes().iter().any(|c| c.height(&z0e) >= t) {
        return Err(ModsymError::Invalid("base point lies in a class horoball".into()));
    }

    let mut cur = gamma.clone();
    let mut key = orbit_cosh_minus_one(&cur, &z0e);
    let mut result = ReductionResult {
        gamma_s: cur.clone(),
        parabolics: Vec::new(),
        steps: 0,
        distances: vec![acosh_one_plus(&key)],
    };
    loop {
        let w = z0e.mobius(&cur);
        let seg = Segment::new(z0e.clone(), w.clone());
        let entered = trunc.entered_cusps(&seg, config.node_cap)?;
        if entered.is_empty() {
            return Ok(result);
        }
        if result.steps >= config.max_steps {
            return Err(ModsymError::ReductionCap {
                steps: result.steps,
                best: Box::new(result),
            });
        }
        let mut best: Option<(BigRational, GroupElement, GroupElement)> = None;
        for u in &entered {
            for p in candidates(u, trunc, &z0e, &w, config.max_power) {
                let next = &p * &cur;
                let k = orbit_cosh_minus_one(&next, &z0e);
                if best.as_ref().is_none_or(|(bk, _, _)| &k < bk) {
                    best = Some((k, p, next));
                }
            }
        }
        match best {
            Some((k, p, next)) if k < key => {
                key = k;
                cur = next;
                result.distances.push(acosh_one_plus(&key));
                result.parabolics.push(p);
                result.gamma_s = cur.clone();
                result.steps += 1;
            }
            _ => {
                return Err(ModsymError::ReductionCap {
                    steps: result.steps,
                    best: Box::new(result),
                })
            }
        }
    }
}

/// True when the geodesic segment from z to w meets no horoball of H_T, in
/// which case the truncated distance equals the hyperbolic one.
pub fn geodesic_in_truncation(z: PointH, w: PointH, trunc: &TruncationParams) -> Result<bool> {
    let seg = Segment::new(z.exact(), w.exact());
    Ok(trunc.entered_cusps(&seg, DEFAULT_NODE_CAP)?.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusps::{choose_truncation, cusp_classes};
    use crate::hyperbolic::mobius;

    fn z0() -> PointH {
        PointH::new(0.0, 2.0).unwrap()
    }

    #[test]
    fn identity_is_already_reduced() {
        let trunc = choose_truncation(11, z0()).unwrap();
        let r = reduce(&GroupElement::identity(), &trunc, z0()).unwrap();
        assert!(r.gamma_s.is_identity());
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn translation_collapses() {
        // low enough that the geodesic from 2i to 5 + 2i enters the cusp
        let trunc = TruncationParams::new(1, 3.0, cusp_classes(1)).unwrap();
        let g = GroupElement::t_pow(5);
        let r = reduce(&g, &trunc, z0()).unwrap();
        assert!(r.gamma_s.is_identity());
        assert_eq!(r.parabolics, vec![GroupElement::t_pow(-5)]);
        assert_eq!(r.final_distance(), 0.0);
    }

    #[test]
    fn long_translation_in_level_eleven() {
        let trunc = choose_truncation(11, z0()).unwrap();
        let g = &GroupElement::t_pow(40) * &GroupElement::from_i64(1, 0, 11, 1).unwrap();
        let r = reduce(&g, &trunc, z0()).unwrap();
        assert_eq!(r.replay(&g), r.gamma_s);
        assert!(r.final_distance() <= r.initial_distance() + 1e-9);
        assert!(r.parabolics.iter().all(|p| p.is_parabolic() && p.in_gamma0(11)));
        let w = mobius(&r.gamma_s, z0());
        assert!(geodesic_in_truncation(z0(), w, &trunc).unwrap());
    }

    #[test]
    fn geodesic_examples() {
        let trunc = choose_truncation(1, PointH::new(0.0, 1.2).unwrap()).unwrap();
        let i = PointH::i();
        assert!(geodesic_in_truncation(i, PointH::new(0.0, 1.5).unwrap(), &trunc).unwrap());
        let t10 = TruncationParams::new(1, 10.0, trunc.classes().to_vec()).unwrap();
        assert!(!geodesic_in_truncation(i, PointH::new(0.0, 100.0).unwrap(), &t10).unwrap());
    }

    #[test]
    fn straddles_horoball_at_zero() {
        // a chord near infinity rising to height ~22.4, pulled back to cusp 0
        let trunc = TruncationParams::new(11, 2.0, cusp_classes(11)).unwrap();
        let s = GroupElement::s();
        let z = mobius(&s, PointH::new(-10.0, 20.0).unwrap());
        let w = mobius(&s, PointH::new(10.0, 20.0).unwrap());
        assert!(!trunc.in_horoball(&z.exact()).unwrap());
        assert!(!trunc.in_horoball(&w.exact()).unwrap());
        assert!(!geodesic_in_truncation(z, w, &trunc).unwrap());
        let seg = Segment::new(z.exact(), w.exact());
        assert!(trunc.segment_enters(&seg, &Cusp::new(0, 1).unwrap()));
    }

    #[test]
    fn rejects_non_members() {
        let trunc = choose_truncation(11, z0()).unwrap();
        assert!(matches!(
            reduce(&GroupElement::s(), &trunc, z0()),
            Err(ModsymError::NotInGroup(..))
        ));
    }
}
