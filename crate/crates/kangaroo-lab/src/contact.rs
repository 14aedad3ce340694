//! Coefficient ideals, the cleaning iteration realizing weak maximal
//! contact, divisor compatibility and the residual order.

use crate::error::{Error, Result};
use crate::field::lucas_binom;
use crate::ideal::{initial_form, z_expansion, Ideal, OrderVal, Rat};
use crate::poly::{Poly, EXACT};

pub fn factorial(c: u32) -> u64 {
    (1..=c as u64).product()
}

/// Largest e with p^e dividing c (c > 0).
pub fn p_adic_val(c: u32, p: u64) -> u32 {
    let mut c = c as u64;
    let mut e = 0;
    while c % p == 0 {
        c /= p;
        e += 1;
    }
    e
}

/// Exponent multiplicities of the coordinate hypersurfaces V(x_i).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divisor {
    pub s: Vec<u32>,
}

impl Divisor {
    pub fn new(s: Vec<u32>) -> Divisor {
        Divisor { s }
    }

    pub fn total(&self) -> u32 {
        self.s.iter().sum()
    }

    /// Exponent vector of the defining monomial, in ring slots (z first).
    pub fn monomial_exps(&self) -> Vec<u32> {
        let mut exps = vec![0u32];
        exps.extend_from_slice(&self.s);
        exps
    }
}

/// Generators enriched with z-multiples z^β·g for 1 <= β < c. The
/// coefficient ideal is defined over all elements of J; the shifted
/// generators carry the coefficient contributions of z-multiples.
pub fn enriched_gens(j: &Ideal, c: u32) -> Vec<Poly> {
    let mut out: Vec<Poly> = j.gens().to_vec();
    if let Some(field) = j.field() {
        for g in j.gens() {
            for beta in 1..c {
                let mut exps = vec![0u32; j.nx() + 1];
                exps[0] = beta;
                out.push(g.mul(&Poly::monomial(field, j.nx(), EXACT, &exps, 1)));
            }
        }
    }
    out
}

/// Coefficient ideal K = Σ_{i<c} (f_i, f ∈ J)^{c!/(c-i)}, computed over the
/// enriched generator list. The zero ideal (with its infinite-order
/// reading) signals J ≡ (z^c) up to precision.
pub fn coefficient_ideal(j: &Ideal, c: u32) -> Ideal {
    let cf = factorial(c);
    let mut gens = Vec::new();
    for f in enriched_gens(j, c) {
        for (i, fi) in z_expansion(&f) {
            if i >= c {
                continue;
            }
            let k = (cf / (c - i) as u64) as u32;
            gens.push(fi.pow(k));
        }
    }
    Ideal::from_gens(gens, j.nx())
}

/// Order of the coefficient ideal, straight from the order formula
/// o = min_f min_{i<c} (c!/(c-i))·ord f_i, with a reliability bound from
/// the jet precisions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoeffOrder {
    pub value: OrderVal,
    pub reliable: bool,
}

pub fn coeff_order(j: &Ideal, c: u32) -> CoeffOrder {
    let cf = factorial(c);
    let mut min: Option<u64> = None;
    let mut bound: Option<u64> = None;
    for f in enriched_gens(j, c) {
        let fprec = f.precision();
        for i in 0..c {
            let k = cf / (c - i) as u64;
            let fi = f.z_coefficient(i);
            if let Some(o) = fi.ord() {
                let v = k * o as u64;
                min = Some(min.map_or(v, |m| m.min(v)));
            }
            if fprec != EXACT {
                let tail = k * fprec.saturating_sub(i) as u64;
                bound = Some(bound.map_or(tail, |b| b.min(tail)));
            }
        }
    }
    match min {
        Some(v) => CoeffOrder {
            value: OrderVal::Finite(v as u32),
            reliable: bound.map_or(true, |b| v < b),
        },
        None => CoeffOrder {
            value: OrderVal::Infinite,
            reliable: bound.is_none(),
        },
    }
}

/// Outcome of one cleaning step.
#[derive(Clone, Debug)]
pub enum CleaningOutcome {
    /// No order-increasing coordinate change of the mandated shape exists.
    Maximal,
    /// Candidate substitution z <- z - q (the homogeneous degree-w q with
    /// q^{p^e} = λ·in(f_{c-p^e})).
    Candidate(Poly),
}

/// One cleaning step for an ideal of order c with coefficient order o.
pub fn cleaning_step(j: &Ideal, c: u32, o: u32) -> Result<CleaningOutcome> {
    let witness = j
        .z_regular_witness(c)
        .ok_or(Error::NotZRegular { c })?;
    let field = j.field().expect("non-empty ideal");
    let cf = factorial(c);
    if o as u64 % cf != 0 {
        return Ok(CleaningOutcome::Maximal);
    }
    let w = (o as u64 / cf) as u32;
    let p = field.p();
    let e = p_adic_val(c, p);
    let pe = p.pow(e) as u32;
    // fast path: an index c-p^e < i < c attaining ord f_i = (c-i)·w blocks
    // any increase of the coefficient order
    for i in (c - pe + 1)..c {
        if let Some(oi) = witness.z_coefficient(i).ord() {
            if oi == (c - i) * w {
                return Ok(CleaningOutcome::Maximal);
            }
        }
    }
    let f_low = witness.z_coefficient(c - pe);
    match f_low.ord() {
        Some(ol) if ol == pe * w => {}
        _ => return Ok(CleaningOutcome::Maximal),
    }
    let binom = lucas_binom(c as u64, pe as u64, p);
    debug_assert_ne!(binom, 0, "C(c, p^e) is a unit by Lucas");
    let scale = field.neg(field.inv(binom).expect("unit binomial"));
    let g = initial_form(&f_low).mul_scalar(scale);
    match g.p_power_root(e) {
        Some(q) => Ok(CleaningOutcome::Candidate(q)),
        None => Ok(CleaningOutcome::Maximal),
    }
}

/// Substitute z <- z + q in every generator (passage to the coordinate
/// u = z - q, renamed back to z).
pub fn shift_z(j: &Ideal, q: &Poly) -> Result<Ideal> {
    let field = j.field().expect("non-empty ideal");
    let mut images = Poly::identity_images(field, j.nx(), EXACT);
    images[0] = images[0].add(q);
    let gens = j
        .gens()
        .iter()
        .map(|g| g.substitute(&images))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ideal::from_gens(gens, j.nx()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContactStatus {
    /// No further cleaning step increases the coefficient order.
    Maximal,
    /// The coefficient ideal vanished up to precision: J ≡ (u^c).
    PurePower,
    /// The coefficient order reached the reliability bound of the jets.
    PrecisionExhausted,
}

/// Result of the weak-maximal-contact iteration: the ideal rewritten in
/// the contact coordinate u = z - q_total, together with its coefficient
/// ideal and order.
#[derive(Clone, Debug)]
pub struct ContactFrame {
    /// J expressed in the coordinates where V(z) has weak maximal contact.
    pub ideal: Ideal,
    pub c: u32,
    /// Accumulated coordinate change; the contact hypersurface in the
    /// original coordinates is V(z - q_total).
    pub q_total: Poly,
    /// Coefficient ideal K with respect to the contact hypersurface.
    pub coeff: Ideal,
    pub o: OrderVal,
    pub w: Option<Rat>,
    pub status: ContactStatus,
    pub iterations: u32,
}

impl ContactFrame {
    pub fn o_finite(&self) -> Option<u32> {
        self.o.finite()
    }
}

/// Iterate cleaning steps until the coefficient order is maximal (or the
/// ideal is a pure power, or the jets run out of precision). The order
/// strictly increases across iterations.
pub fn weak_max_contact(j: &Ideal) -> Result<ContactFrame> {
    let c = match j.ord() {
        OrderVal::Finite(c) if c >= 1 => c,
        OrderVal::Finite(_) => {
            return Err(Error::Internal("unit ideal has no contact theory".into()))
        }
        OrderVal::Infinite => return Err(Error::Inconclusive("zero ideal".into())),
    };
    if c > 12 {
        return Err(Error::Internal(format!("order {c} too large (c! overflows)")));
    }
    let field = j.field().expect("non-empty ideal");
    let cf = factorial(c);
    let mut ideal = j.clone();
    let mut q_total = Poly::zero(field, j.nx(), EXACT);
    let mut last_o: Option<u32> = None;
    let mut iterations = 0u32;
    loop {
        let co = coeff_order(&ideal, c);
        let coeff = coefficient_ideal(&ideal, c);
        // standing test: the order formula matches the explicit ideal
        if co.value != coeff.ord() {
            return Err(Error::Internal(format!(
                "coefficient order formula ({}) disagrees with the ideal order ({})",
                co.value,
                coeff.ord()
            )));
        }
        let finish = |status: ContactStatus| -> Result<ContactFrame> {
            let w = co
                .value
                .finite()
                .map(|o| Rat::new(o as i64, cf as i64));
            Ok(ContactFrame {
                ideal: ideal.clone(),
                c,
                q_total: q_total.clone(),
                coeff: coeff.clone(),
                o: co.value,
                w,
                status,
                iterations,
            })
        };
        let o = match co.value {
            OrderVal::Infinite => return finish(ContactStatus::PurePower),
            OrderVal::Finite(o) => {
                if !co.reliable {
                    return finish(ContactStatus::PrecisionExhausted);
                }
                o
            }
        };
        // exact jets carry no reliability bound, but the contact
        // coordinate can be a genuine power series (already for c = 1);
        // stop once the iteration shows no sign of stabilizing
        let exact = j.precision() == EXACT;
        if (exact && (iterations >= 16 || o > 512))
            || (!exact && iterations > j.precision().saturating_add(2))
        {
            return finish(ContactStatus::PrecisionExhausted);
        }
        if let Some(prev) = last_o {
            if o <= prev {
                return Err(Error::Internal(format!(
                    "cleaning did not increase the coefficient order ({prev} -> {o})"
                )));
            }
        }
        let step = match cleaning_step(&ideal, c, o) {
            Ok(s) => s,
            Err(Error::NotZRegular { .. }) => {
                // Without a z-regular element the coefficient order is c!
                // for every hypersurface, so V(z) is already maximal.
                if o as u64 == cf {
                    return finish(ContactStatus::Maximal);
                }
                return Err(Error::Internal(
                    "coefficient order above c! without a z-regular element".into(),
                ));
            }
            Err(e) => return Err(e),
        };
        let q = match step {
            CleaningOutcome::Maximal => return finish(ContactStatus::Maximal),
            CleaningOutcome::Candidate(q) => q,
        };
        // The candidate is the only admissible shape; accept it only if it
        // actually increases the coefficient order.
        let shifted = shift_z(&ideal, &q)?;
        let co2 = coeff_order(&shifted, c);
        let increased = match co2.value {
            OrderVal::Infinite => true,
            OrderVal::Finite(o2) => o2 > o,
        };
        if !increased {
            return finish(ContactStatus::Maximal);
        }
        ideal = shifted;
        q_total = q_total.add(&q);
        last_o = Some(o);
        iterations += 1;
    }
}

/// Compatibility of the contact hypersurface with the divisor: every
/// generator of K must be divisible by the monomial of D.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompatReport {
    Compatible,
    Incompatible {
        gen_index: usize,
        gen: String,
        slot: usize,
    },
}

impl CompatReport {
    pub fn is_compatible(&self) -> bool {
        matches!(self, CompatReport::Compatible)
    }
}

pub fn check_compatibility(k: &Ideal, d: &Divisor) -> CompatReport {
    let exps = d.monomial_exps();
    for (gi, g) in k.gens().iter().enumerate() {
        if let Some(m) = g.non_divisible_witness(&exps) {
            let slot = m
                .0
                .iter()
                .zip(&exps)
                .position(|(a, b)| a < b)
                .unwrap_or(0);
            return CompatReport::Incompatible {
                gen_index: gi,
                gen: g.to_grammar(),
                slot,
            };
        }
    }
    CompatReport::Compatible
}

/// K = M·I with M the divisor monomial: the generators of I.
pub fn factor_out_divisor(k: &Ideal, d: &Divisor) -> Option<Ideal> {
    let exps = d.monomial_exps();
    let gens = k
        .gens()
        .iter()
        .map(|g| g.div_monomial(&exps))
        .collect::<Option<Vec<_>>>()?;
    Some(Ideal::from_gens(gens, k.nx()))
}

/// Residual order of the contact frame with respect to D: ord K - ord M.
#[derive(Clone, Debug)]
pub struct ResidualOrder {
    pub value: Option<u32>,
    pub compat: CompatReport,
}

pub fn residual_order(frame: &ContactFrame, d: &Divisor) -> ResidualOrder {
    let compat = check_compatibility(&frame.coeff, d);
    let value = match (&compat, frame.o) {
        (CompatReport::Compatible, OrderVal::Finite(o)) => Some(o - d.total()),
        _ => None,
    };
    ResidualOrder { value, compat }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::poly::parse_poly;
    use std::sync::Arc;

    fn f2() -> Arc<Field> {
        Field::prime(2).unwrap()
    }

    fn p2(s: &str) -> Poly {
        parse_poly(&f2(), 2, 64, s).unwrap()
    }

    fn ideal(gens: &[&str]) -> Ideal {
        Ideal::new(gens.iter().map(|s| p2(s)).collect()).unwrap()
    }

    #[test]
    fn coefficient_ideal_worked_example() {
        let j = ideal(&["z^2 + x1^3*x2 + x1*x2^3"]);
        let k = coefficient_ideal(&j, 2);
        assert!(k.gens().contains(&p2("x1^3*x2 + x1*x2^3")));
        assert_eq!(k.ord(), OrderVal::Finite(4));
        assert_eq!(coeff_order(&j, 2).value, OrderVal::Finite(4));
    }

    #[test]
    fn coefficient_ideal_second_example() {
        let j = ideal(&["z^2 + x1^2*x2^2 + x1^2*x2^3"]);
        let k = coefficient_ideal(&j, 2);
        assert!(k.gens().contains(&p2("x1^2*x2^2 + x1^2*x2^3")));
        assert_eq!(k.ord(), OrderVal::Finite(4));
    }

    #[test]
    fn coefficient_ideal_pure_power_is_zero() {
        let j = ideal(&["z^2"]);
        let k = coefficient_ideal(&j, 2);
        assert!(k.is_zero());
        assert_eq!(k.ord(), OrderVal::Infinite);
    }

    #[test]
    fn coeff_order_examples() {
        assert_eq!(
            coeff_order(&ideal(&["z^2 + x1^3"]), 2).value,
            OrderVal::Finite(3)
        );
        // a unit coefficient gives order 0
        assert_eq!(
            coeff_order(&ideal(&["z^2 + z + 1"]), 2).value,
            OrderVal::Finite(0)
        );
    }

    #[test]
    fn coeff_order_matches_ideal_on_samples() {
        for gens in [
            vec!["z^2 + x1^3*x2 + x1*x2^3"],
            vec!["z^3 + z*x1^2 + x2^5"],
            vec!["z^2 + x1^2*x2^2 + x1^2*x2^3", "z^4"],
        ] {
            let j = ideal(&gens);
            let c = j.ord().finite().unwrap();
            assert_eq!(
                coeff_order(&j, c).value,
                coefficient_ideal(&j, c).ord(),
                "{gens:?}"
            );
        }
    }

    #[test]
    fn cleaning_step_examples() {
        // g = x^3 y + x y^3 is not a square: maximal
        let j = ideal(&["z^2 + x1^3*x2 + x1*x2^3"]);
        assert!(matches!(
            cleaning_step(&j, 2, 4).unwrap(),
            CleaningOutcome::Maximal
        ));
        // g = x^2 y^2 is a square: candidate q = x y
        let j2 = ideal(&["z^2 + x1^2*x2^2 + x1^2*x2^3"]);
        match cleaning_step(&j2, 2, 4).unwrap() {
            CleaningOutcome::Candidate(q) => assert_eq!(q, p2("x1*x2")),
            other => panic!("expected candidate, got {other:?}"),
        }
        // w = 3/2 not an integer: maximal
        let j3 = ideal(&["z^2 + x1^3"]);
        assert!(matches!(
            cleaning_step(&j3, 2, 3).unwrap(),
            CleaningOutcome::Maximal
        ));
    }

    #[test]
    fn weak_max_contact_examples() {
        let f1 = weak_max_contact(&ideal(&["z^2 + x1^3*x2 + x1*x2^3"])).unwrap();
        assert!(f1.q_total.is_zero());
        assert_eq!(f1.o, OrderVal::Finite(4));
        assert_eq!(f1.status, ContactStatus::Maximal);

        let f2 = weak_max_contact(&ideal(&["z^2 + x1^2*x2^2 + x1^2*x2^3"])).unwrap();
        assert_eq!(f2.q_total, p2("x1*x2"));
        assert_eq!(f2.o, OrderVal::Finite(5));
        assert_eq!(f2.status, ContactStatus::Maximal);

        // ((z + x^2))^2 = z^2 + x^4 over F_2: pure power after one step
        let f3 = weak_max_contact(&ideal(&["z^2 + x1^4"])).unwrap();
        assert_eq!(f3.q_total, p2("x1^2"));
        assert_eq!(f3.status, ContactStatus::PurePower);
    }

    #[test]
    fn residual_order_examples() {
        let frame = weak_max_contact(&ideal(&["z^2 + x1^3*x2 + x1*x2^3"])).unwrap();
        let r = residual_order(&frame, &Divisor::new(vec![1, 1]));
        assert!(r.compat.is_compatible());
        assert_eq!(r.value, Some(2));

        // trivial divisor: residual order is o itself
        let r0 = residual_order(&frame, &Divisor::new(vec![0, 0]));
        assert_eq!(r0.value, Some(4));

        // worked pipeline example after blowup
        let frame2 = weak_max_contact(&ideal(&["z^2 + x1^2*x2^2 + x1^2*x2^3"])).unwrap();
        let r2 = residual_order(&frame2, &Divisor::new(vec![2, 0]));
        assert_eq!(r2.value, Some(3));

        // incompatibility is reported, not thrown
        let r3 = residual_order(&frame, &Divisor::new(vec![2, 0]));
        assert!(!r3.compat.is_compatible());
        assert_eq!(r3.value, None);
    }

    #[test]
    fn no_z_regular_witness_falls_back_to_maximal() {
        // order 3, no pure z^3 coefficient anywhere; o = c! = 6
        let j = ideal(&["x1^2*z^2", "x1^3"]);
        let frame = weak_max_contact(&j).unwrap();
        assert_eq!(frame.status, ContactStatus::Maximal);
        assert_eq!(frame.o, OrderVal::Finite(6));
    }
}
