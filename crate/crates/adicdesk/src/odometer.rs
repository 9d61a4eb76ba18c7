//! The adic integer group: carry arithmetic on eventually-periodic digit
//! streams, the adic ultrametric, translation maps as prefix rewrites, and
//! the bridge to the one-vertex-per-level Vershik diagram.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::bratteli::{cyclic_level, Diagram, Level, Periodicity};
use crate::cylmap::{CylMap, MapError, Rule};
use crate::space::{Point, SeqSpace, SpaceError, Word};

#[derive(Debug, Error)]
pub enum OdometerError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("translation carries never settle (tail of the addend is neither all-zero nor all-max)")]
    PathologicalAddend,
    #[error("carry resolution exceeded the depth budget {0}")]
    DepthBudget(usize),
}

/// An element of the adic integer group, kept in eventually-periodic normal
/// form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AdicInt {
    space: SeqSpace,
    digits: Point,
}

impl AdicInt {
    pub fn new(space: &SeqSpace, digits: Point) -> Result<Self, OdometerError> {
        digits.validate(space)?;
        Ok(AdicInt { space: space.clone(), digits })
    }

    pub fn zero(space: &SeqSpace) -> Self {
        AdicInt { space: space.clone(), digits: Point::constant(0) }
    }

    /// The group generator `1 = 1*p_{-1} + 0*p_0 + ...`.
    pub fn one(space: &SeqSpace) -> Self {
        AdicInt {
            space: space.clone(),
            digits: Point::new(vec![1], vec![0]).expect("valid point"),
        }
    }

    pub fn from_u64(space: &SeqSpace, mut n: u64) -> Self {
        let mut head = Vec::new();
        let mut i = 0;
        while n > 0 {
            let r = space.radix(i) as u64;
            head.push((n % r) as u32);
            n /= r;
            i += 1;
        }
        AdicInt {
            space: space.clone(),
            digits: Point::new(head, vec![0]).expect("valid point"),
        }
    }

    pub fn space(&self) -> &SeqSpace {
        &self.space
    }

    pub fn digits(&self) -> &Point {
        &self.digits
    }

    pub fn digit(&self, i: usize) -> u32 {
        self.digits.digit(i)
    }

    pub fn is_zero(&self) -> bool {
        self.digits == Point::constant(0)
    }

    pub fn add_one(&self) -> AdicInt {
        self.add(&AdicInt::one(&self.space))
    }

    /// Digit-wise addition with carry. The carry state over the aligned
    /// periodic tails eventually repeats, which recovers the normal form.
    pub fn add(&self, other: &AdicInt) -> AdicInt {
        assert_eq!(self.space, other.space, "adic addition needs a common space");
        let head = self
            .digits
            .head_len()
            .max(other.digits.head_len())
            .max(self.space.head_len());
        let period = num_integer::lcm(
            num_integer::lcm(self.digits.period_digits().len(), other.digits.period_digits().len()),
            self.space.period_len(),
        );
        let mut digits: Vec<u32> = Vec::new();
        let mut carry = 0u32;
        let mut seen: HashMap<(usize, u32), usize> = HashMap::new();
        let mut i = 0usize;
        loop {
            if i >= head {
                let state = ((i - head) % period, carry);
                if let Some(&j) = seen.get(&state) {
                    let tail = digits.split_off(j);
                    let digits_head = digits;
                    return AdicInt {
                        space: self.space.clone(),
                        digits: Point::new(digits_head, tail).expect("valid sum"),
                    };
                }
                seen.insert(state, i);
            }
            let r = self.space.radix(i);
            let s = self.digit(i) + other.digit(i) + carry;
            digits.push(s % r);
            carry = s / r;
            i += 1;
        }
    }

    /// The group inverse: digit complement plus one.
    pub fn neg(&self) -> AdicInt {
        if self.is_zero() {
            return self.clone();
        }
        let head_len = self.digits.head_len().max(self.space.head_len());
        let period = num_integer::lcm(self.digits.period_digits().len(), self.space.period_len());
        let comp_head: Vec<u32> = (0..head_len).map(|i| self.space.radix(i) - 1 - self.digit(i)).collect();
        let comp_period: Vec<u32> = (head_len..head_len + period)
            .map(|i| self.space.radix(i) - 1 - self.digit(i))
            .collect();
        let comp = AdicInt {
            space: self.space.clone(),
            digits: Point::new(comp_head, comp_period).expect("valid complement"),
        };
        comp.add_one()
    }

    pub fn sub(&self, other: &AdicInt) -> AdicInt {
        self.add(&other.neg())
    }
}

/// The adic metric `d(x, y) = 1/(n+1)` with `n` the first differing digit,
/// and `0` for equal points.
pub fn adic_metric(x: &AdicInt, y: &AdicInt) -> BigRational {
    match x.digits.first_difference(&y.digits) {
        None => BigRational::zero(),
        Some(n) => BigRational::new(1.into(), ((n + 1) as i64).into()),
    }
}

/// Same metric on bare points of a space.
pub fn point_metric(x: &Point, y: &Point) -> BigRational {
    match x.first_difference(y) {
        None => BigRational::zero(),
        Some(n) => BigRational::new(1.into(), ((n + 1) as i64).into()),
    }
}

/// Kind of periodic tail an addend has beyond a position; only all-zero and
/// all-max tails admit a terminating carry table.
#[derive(PartialEq, Eq, Clone, Copy, Debug)]
enum TailKind {
    Zero,
    Max,
    Mixed,
}

fn tail_kind(space: &SeqSpace, b: &AdicInt, from: usize) -> TailKind {
    let span = from
        + num_integer::lcm(b.digits().period_digits().len(), space.period_len())
        + b.digits().head_len().saturating_sub(from)
        + space.head_len().saturating_sub(from);
    let all_zero = (from..=span).all(|i| b.digit(i) == 0);
    if all_zero {
        return TailKind::Zero;
    }
    let all_max = (from..=span).all(|i| b.digit(i) == space.radix(i) - 1);
    if all_max {
        TailKind::Max
    } else {
        TailKind::Mixed
    }
}

/// True when adding `b` with carry `c` beyond position `len` leaves every
/// further digit unchanged (the self-sustaining carry states).
fn tail_settled(space: &SeqSpace, b: &AdicInt, len: usize, carry: u32) -> bool {
    match (tail_kind(space, b, len), carry) {
        (TailKind::Zero, 0) => true,
        (TailKind::Max, 1) => true,
        _ => false,
    }
}

/// The translation `x -> x + b` as a prefix-rewrite table with exceptional
/// points for unbounded carries.
pub fn translation_map(b: &AdicInt, depth_budget: usize) -> Result<CylMap, OdometerError> {
    let space = b.space().clone();
    if b.is_zero() {
        return Ok(CylMap::identity(&space));
    }
    let probe = b.digits().head_len().max(space.head_len());
    if tail_kind(&space, b, probe) == TailKind::Mixed {
        return Err(OdometerError::PathologicalAddend);
    }
    if depth_budget <= probe {
        return Err(OdometerError::DepthBudget(depth_budget));
    }
    let mut rules = Vec::new();
    let mut exceptions = Vec::new();
    let mut stack: Vec<(Word, Word, u32)> = vec![(Word::root(), Word::root(), 0)];
    while let Some((input, output, carry)) = stack.pop() {
        if !input.is_empty() && tail_settled(&space, b, input.len(), carry) {
            rules.push(Rule { input, output });
            continue;
        }
        if input.len() >= depth_budget {
            // unbounded carry: the unique never-settling continuation is the
            // exceptional point of this residual stem
            let (p, q) = sustaining_point(&space, b, &input, &output, carry)
                .ok_or(OdometerError::DepthBudget(depth_budget))?;
            exceptions.push((p, q));
            continue;
        }
        let pos = input.len();
        let r = space.radix(pos);
        for a in 0..r {
            let s = a + b.digit(pos) + carry;
            stack.push((input.child(a), output.child(s % r), s / r));
        }
    }
    Ok(CylMap::new(&space, rules, exceptions)?)
}

/// Continues a residual stem with the unique digit choice that keeps the
/// carry state unsettled forever, yielding the exceptional point and its
/// image. `None` when the continuation is not unique (stem cut inside the
/// head region) or every continuation settles.
fn sustaining_point(
    space: &SeqSpace,
    b: &AdicInt,
    input: &Word,
    output: &Word,
    carry: u32,
) -> Option<(Point, Point)> {
    let len = input.len();
    let head_end = len
        .max(b.digits().head_len())
        .max(space.head_len());
    let span = num_integer::lcm(b.digits().period_digits().len(), space.period_len());
    let mut in_digits = input.digits().to_vec();
    let mut out_digits = output.digits().to_vec();
    let mut c = carry;
    let mut seen: HashMap<(usize, u32), usize> = HashMap::new();
    let mut pos = len;
    loop {
        if pos >= head_end {
            let state = ((pos - head_end) % span, c);
            if let Some(&j) = seen.get(&state) {
                let in_period = in_digits[j..pos].to_vec();
                let out_period = out_digits[j..pos].to_vec();
                let p = Point::new(in_digits[..j].to_vec(), in_period).ok()?;
                let q = Point::new(out_digits[..j].to_vec(), out_period).ok()?;
                return Some((p, q));
            }
            seen.insert(state, pos);
        }
        let r = space.radix(pos);
        let bd = b.digit(pos);
        let mut choice = None;
        for a in 0..r {
            let s = a + bd + c;
            if !tail_settled(space, b, pos + 1, s / r) {
                if choice.is_some() {
                    return None; // ambiguous continuation
                }
                choice = Some((a, s % r, s / r));
            }
        }
        let (a, d, c2) = choice?;
        in_digits.push(a);
        out_digits.push(d);
        c = c2;
        pos += 1;
    }
}

/// `x -> x + 1` materialized to the given carry depth.
pub fn translation_one(space: &SeqSpace, depth_budget: usize) -> Result<CylMap, OdometerError> {
    translation_map(&AdicInt::one(space), depth_budget)
}

/// The one-vertex-per-level ordered diagram whose Vershik map is the
/// odometer: level `n` carries `lambda_{n-1}` parallel edges ordered by
/// digit value.
pub fn to_vershik_diagram(space: &SeqSpace, n: usize) -> Diagram {
    let levels: Vec<Level> = (0..n).map(|i| cyclic_level(space.radix(i))).collect();
    Diagram::new(levels).with_periodicity(Periodicity {
        head_levels: space.head_len(),
        period: space.period_len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylmap::diff_set;
    use crate::ratio;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dyadic() -> SeqSpace {
        SeqSpace::uniform(2)
    }

    fn pt(head: &[u32], period: &[u32]) -> Point {
        Point::new(head.to_vec(), period.to_vec()).unwrap()
    }

    fn random_adic(space: &SeqSpace, rng: &mut ChaCha8Rng) -> AdicInt {
        let head_len = rng.gen_range(0..6);
        let period_len = rng.gen_range(1..4);
        let head: Vec<u32> = (0..head_len).map(|i| rng.gen_range(0..space.radix(i))).collect();
        let period: Vec<u32> = (0..period_len)
            .map(|k| {
                // keep digits valid across the periodic alignment
                let mut d = u32::MAX;
                for j in 0..space.period_len() {
                    d = d.min(space.radix(head_len + k + j * period_len) - 1);
                }
                rng.gen_range(0..=d)
            })
            .collect();
        AdicInt::new(space, Point::new(head, period).unwrap()).unwrap()
    }

    #[test]
    fn add_one_carries() {
        let s = dyadic();
        let x = AdicInt::new(&s, pt(&[1, 1, 0], &[0])).unwrap();
        assert_eq!(x.add_one().digits(), &pt(&[0, 0, 1], &[0]));
        // the exceptional carry point wraps to zero
        let ones = AdicInt::new(&s, pt(&[], &[1])).unwrap();
        assert_eq!(ones.add_one(), AdicInt::zero(&s));
    }

    #[test]
    fn add_one_mixed_radix() {
        let s = SeqSpace::new(vec![2, 3], vec![2]).unwrap();
        let x = AdicInt::new(&s, pt(&[1, 2, 0], &[0])).unwrap();
        assert_eq!(x.add_one().digits(), &pt(&[0, 0, 1], &[0]));
    }

    #[test]
    fn group_identities() {
        let s = dyadic();
        let one = AdicInt::one(&s);
        assert_eq!(one.add(&AdicInt::zero(&s)), one);
        // 1 + 1 = 2
        let two = AdicInt::new(&s, pt(&[0, 1], &[0])).unwrap();
        assert_eq!(one.add(&one), two);
        // 0 + (-1) = -1 on periodic streams
        let minus_one = AdicInt::new(&s, pt(&[], &[1])).unwrap();
        assert_eq!(AdicInt::zero(&s).add(&minus_one), minus_one);
        assert_eq!(one.neg(), minus_one.add(&one).add(&minus_one));
        assert_eq!(one.add(&one.neg()), AdicInt::zero(&s));
    }

    #[test]
    fn group_axioms_sampled() {
        let s = SeqSpace::new(vec![2], vec![3, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_adic(&s, &mut rng);
            let b = random_adic(&s, &mut rng);
            let c = random_adic(&s, &mut rng);
            assert_eq!(a.add(&b), b.add(&a));
            assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
            assert_eq!(a.add(&a.neg()), AdicInt::zero(&s));
        }
    }

    #[test]
    fn metric_values_and_ultrametric() {
        let s = dyadic();
        let x = AdicInt::new(&s, pt(&[0, 0, 1], &[0])).unwrap();
        let y = AdicInt::zero(&s);
        assert_eq!(adic_metric(&x, &x), ratio(0, 1));
        assert_eq!(adic_metric(&x, &y), ratio(1, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = random_adic(&s, &mut rng);
            let b = random_adic(&s, &mut rng);
            let c = random_adic(&s, &mut rng);
            let ab = adic_metric(&a, &b);
            let bc = adic_metric(&b, &c);
            let ac = adic_metric(&a, &c);
            assert!(ac <= ab.clone().max(bc.clone()), "ultrametric failed");
            // translation invariance
            assert_eq!(adic_metric(&a.add(&c), &b.add(&c)), ab);
        }
    }

    #[test]
    fn translation_one_table() {
        let s = dyadic();
        let t = translation_one(&s, 10).unwrap();
        assert_eq!(t.whole_rewrite(&Word::new(vec![0])), Some(Word::new(vec![1])));
        assert_eq!(t.whole_rewrite(&Word::new(vec![1, 0])), Some(Word::new(vec![0, 1])));
        assert_eq!(
            t.whole_rewrite(&Word::new(vec![1, 1, 0])),
            Some(Word::new(vec![0, 0, 1]))
        );
        assert_eq!(t.exceptions().len(), 1);
        let (p, q) = &t.exceptions()[0];
        assert_eq!(p, &Point::constant(1));
        assert_eq!(q, &Point::constant(0));
    }

    #[test]
    fn translation_zero_is_identity() {
        let s = dyadic();
        let t = translation_map(&AdicInt::zero(&s), 8).unwrap();
        assert_eq!(t, CylMap::identity(&s));
    }

    #[test]
    fn translation_matches_pointwise_addition() {
        let s = SeqSpace::new(vec![2], vec![3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let b = AdicInt::from_u64(&s, rng.gen_range(0..200));
            let t = translation_map(&b, 24).unwrap();
            for _ in 0..10 {
                let x = random_adic(&s, &mut rng);
                match t.apply_point(x.digits()) {
                    Ok(y) => assert_eq!(&y, x.add(&b).digits()),
                    Err(_) => {
                        // budget region: the point must sit in the residual
                        assert!(t.residual_in().contains_point(x.digits()));
                    }
                }
            }
        }
    }

    #[test]
    fn translation_negative_addend() {
        let s = dyadic();
        let minus_one = AdicInt::one(&s).neg();
        let t = translation_map(&minus_one, 10).unwrap();
        assert_eq!(t.whole_rewrite(&Word::new(vec![1])), Some(Word::new(vec![0])));
        assert_eq!(t.whole_rewrite(&Word::new(vec![0, 1])), Some(Word::new(vec![1, 0])));
        let (p, q) = &t.exceptions()[0];
        assert_eq!(p, &Point::constant(0));
        assert_eq!(q, &Point::constant(1));
        // inverse of add-one is subtract-one
        let add = translation_one(&s, 10).unwrap();
        assert_eq!(add.invert(), t);
    }

    #[test]
    fn translation_group_law_on_samples() {
        let s = dyadic();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = AdicInt::from_u64(&s, 3);
        let c = AdicInt::from_u64(&s, 6);
        let tb = translation_map(&b, 20).unwrap();
        let tc = translation_map(&c, 20).unwrap();
        let tbc = translation_map(&b.add(&c), 20).unwrap();
        let composed = tb.compose(&tc).unwrap();
        for _ in 0..200 {
            let x = random_adic(&s, &mut rng);
            let via_compose = composed.apply_point(x.digits());
            let direct = tbc.apply_point(x.digits());
            if let (Ok(a), Ok(b)) = (via_compose, direct) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn translation_commutes_with_add_one() {
        let s = dyadic();
        let t = translation_one(&s, 24).unwrap();
        let b = AdicInt::from_u64(&s, 10);
        let tb = translation_map(&b, 24).unwrap();
        let left = tb.compose(&t).unwrap();
        let right = t.compose(&tb).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut checked = 0;
        for _ in 0..1000 {
            let x = random_adic(&s, &mut rng);
            if let (Ok(a), Ok(b)) = (left.apply_point(x.digits()), right.apply_point(x.digits())) {
                assert_eq!(a, b);
                checked += 1;
            }
        }
        assert!(checked > 900);
    }

    #[test]
    fn pathological_addend_rejected() {
        let s = dyadic();
        // b = ...010101 has a genuinely mixed tail
        let b = AdicInt::new(&s, pt(&[], &[1, 0])).unwrap();
        assert!(matches!(
            translation_map(&b, 12),
            Err(OdometerError::PathologicalAddend) | Err(OdometerError::DepthBudget(_))
        ));
    }

    #[test]
    fn vershik_diagram_of_dyadic_space() {
        let s = dyadic();
        let d = to_vershik_diagram(&s, 3);
        assert!(d.validate(3).is_clean());
        assert_eq!(d.incidence(1).unwrap().entries, vec![vec![2]]);
        assert_eq!(d.incidence(3).unwrap().entries, vec![vec![2]]);
        use num_bigint::BigUint;
        assert_eq!(d.height(3, 0).unwrap(), BigUint::from(8u32));
    }

    #[test]
    fn compose_translations_on_tables() {
        let s = dyadic();
        let t = translation_one(&s, 16).unwrap();
        let t2 = t.compose(&t).unwrap();
        let direct = translation_map(&AdicInt::from_u64(&s, 2), 16).unwrap();
        let report = diff_set(&t2, &direct, 4).unwrap();
        assert!(report.different.is_empty());
    }
}
