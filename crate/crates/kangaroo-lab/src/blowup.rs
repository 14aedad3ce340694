//! Monomial blowup charts subordinate to a coordinate center: chart
//! substitution, weak transform, divisor transform, permissibility checks
//! and the y-coordinates that make the chart map monomial.

use crate::contact::{factor_out_divisor, factorial, ContactFrame, Divisor};
use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::ideal::{CoordPrime, Ideal, OrderVal};
use crate::poly::{Poly, EXACT};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// The x₁-chart of the blowup with center V(z, x_i : i ∈ S), with the
/// chart point moved to the origin by the translations t_i (i ∈ T\{1}).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlowupChart {
    s: BTreeSet<usize>,
    /// Translations for i in T\{1}; T = {1} ∪ keys.
    t: BTreeMap<usize, Scalar>,
}

impl BlowupChart {
    pub fn new(
        s: impl IntoIterator<Item = usize>,
        t: impl IntoIterator<Item = (usize, Scalar)>,
    ) -> Result<BlowupChart> {
        let s: BTreeSet<usize> = s.into_iter().collect();
        let t: BTreeMap<usize, Scalar> = t.into_iter().collect();
        if !s.contains(&1) {
            return Err(Error::Internal("chart requires 1 in S".into()));
        }
        if t.contains_key(&1) {
            return Err(Error::Internal("t_1 is not a chart datum".into()));
        }
        for (&i, &ti) in &t {
            if !s.contains(&i) {
                return Err(Error::Internal(format!("T not contained in S (index {i})")));
            }
            if ti == 0 {
                return Err(Error::Internal(format!("translation t_{i} must be non-zero")));
            }
        }
        Ok(BlowupChart { s, t })
    }

    pub fn s(&self) -> &BTreeSet<usize> {
        &self.s
    }

    /// T = {1} plus the translated indices.
    pub fn t_set(&self) -> BTreeSet<usize> {
        let mut t: BTreeSet<usize> = self.t.keys().copied().collect();
        t.insert(1);
        t
    }

    pub fn translation(&self, i: usize) -> Option<Scalar> {
        self.t.get(&i).copied()
    }

    /// The center prime P = (z, x_i : i ∈ S).
    pub fn center(&self) -> CoordPrime {
        CoordPrime::new(true, self.s.iter().copied()).expect("non-empty")
    }

    /// P without z, for orders of ideals in the x-variables.
    pub fn center_x(&self) -> CoordPrime {
        CoordPrime::new(false, self.s.iter().copied()).expect("non-empty")
    }

    /// Images of (z, x_1, ..., x_n) under the chart map.
    pub fn images(&self, field: &Arc<Field>, nx: usize) -> Vec<Poly> {
        let x1 = Poly::var(field, nx, EXACT, 1);
        let mut images = Poly::identity_images(field, nx, EXACT);
        images[0] = images[0].mul(&x1);
        for &i in &self.s {
            if i == 1 {
                continue;
            }
            let mut img = images[i].clone();
            if let Some(ti) = self.translation(i) {
                img = img.add(&Poly::constant(field, nx, EXACT, ti));
            }
            images[i] = img.mul(&x1);
        }
        images
    }
}

/// Pull a polynomial back along the chart map.
pub fn chart_substitution(f: &Poly, chart: &BlowupChart) -> Result<Poly> {
    f.substitute(&chart.images(f.field(), f.nx()))
}

/// Weak transform: pull back the generators and divide each by
/// x₁^{ord_P J}. Divisibility is guaranteed by the definition of ord_P.
pub fn weak_transform(j: &Ideal, chart: &BlowupChart) -> Result<Ideal> {
    let d = match j.ord_prime(&chart.center()) {
        OrderVal::Finite(d) => d,
        OrderVal::Infinite => return Err(Error::Inconclusive("zero ideal".into())),
    };
    let mut exps = vec![0u32; j.nx() + 1];
    exps[1] = d;
    let mut gens = Vec::with_capacity(j.gens().len());
    for g in j.gens() {
        let pulled = chart_substitution(g, chart)?;
        let divided = pulled.div_monomial(&exps).ok_or_else(|| {
            Error::Internal(format!(
                "pullback of {} not divisible by x1^{d}",
                g.to_grammar()
            ))
        })?;
        gens.push(divided);
    }
    Ok(Ideal::from_gens(gens, j.nx()))
}

#[derive(Clone, Debug)]
pub struct TransformResult {
    pub divisor: Divisor,
    pub lost_components: BTreeSet<usize>,
    pub exceptional_multiplicity: u32,
}

/// Transform of the divisor: the new x₁-multiplicity is
/// ord_P K - c! on the exceptional component; strict transforms of the
/// translated components miss the chart origin and are dropped.
pub fn divisor_transform(
    d: &Divisor,
    chart: &BlowupChart,
    frame: &ContactFrame,
) -> Result<TransformResult> {
    let cf = factorial(frame.c);
    let ord_k = match frame.coeff.ord_prime(&chart.center_x()) {
        OrderVal::Finite(v) => v as u64,
        OrderVal::Infinite => {
            return Err(Error::Inconclusive(
                "coefficient ideal vanished; divisor transform undefined".into(),
            ))
        }
    };
    if ord_k < cf {
        return Err(Error::Internal(format!(
            "negative exceptional multiplicity: ord_P K = {ord_k} < c! = {cf}"
        )));
    }
    let em = ord_k - cf;
    if em % cf != 0 {
        return Err(Error::Internal(format!(
            "exceptional multiplicity {em} not divisible by c! = {cf}"
        )));
    }
    let t = chart.t_set();
    let mut s_new = d.s.clone();
    let mut lost = BTreeSet::new();
    s_new[0] = em as u32;
    for i in t {
        if i == 1 {
            continue;
        }
        if d.s[i - 1] > 0 {
            lost.insert(i);
        }
        s_new[i - 1] = 0;
    }
    Ok(TransformResult {
        divisor: Divisor::new(s_new),
        lost_components: lost,
        exceptional_multiplicity: em as u32,
    })
}

/// Per-condition permissibility report for a chart.
#[derive(Clone, Debug)]
pub struct PermissibilityReport {
    /// Center lies in the equimultiple locus of J: ord_P J = ord J.
    pub equimultiple_j: bool,
    /// Center lies in the equimultiple locus of I = K/M: ord_P I = ord I.
    pub equimultiple_i: bool,
    /// Either T = {1} or every i in T carries a divisor component.
    pub chart_constraint: bool,
    /// Containment in V(u) and normal crossings with D hold by construction
    /// for coordinate data.
    pub containment_and_crossings: bool,
}

impl PermissibilityReport {
    pub fn permissible(&self) -> bool {
        self.equimultiple_j
            && self.equimultiple_i
            && self.chart_constraint
            && self.containment_and_crossings
    }
}

pub fn permissibility_check(
    d: &Divisor,
    chart: &BlowupChart,
    frame: &ContactFrame,
) -> PermissibilityReport {
    let equimultiple_j = frame.ideal.ord_prime(&chart.center()) == frame.ideal.ord();
    let equimultiple_i = match factor_out_divisor(&frame.coeff, d) {
        Some(i) if !i.is_zero() => i.ord_prime(&chart.center_x()) == i.ord(),
        _ => false,
    };
    let t = chart.t_set();
    let chart_constraint = t.len() == 1 || t.iter().all(|&i| d.s[i - 1] >= 1);
    PermissibilityReport {
        equimultiple_j,
        equimultiple_i,
        chart_constraint,
        containment_and_crossings: true,
    }
}

/// The linear change y_i = x_i - t_i x₁ (i in T\{1}) under which the chart
/// map becomes monomial. `to_y` rewrites a polynomial in the y-coordinates
/// (substitutes x_i <- x_i + t_i x₁); `y_back` is the inverse.
pub fn to_y(f: &Poly, chart: &BlowupChart) -> Result<Poly> {
    y_linear(f, chart, false)
}

pub fn y_back(f: &Poly, chart: &BlowupChart) -> Result<Poly> {
    y_linear(f, chart, true)
}

fn y_linear(f: &Poly, chart: &BlowupChart, invert: bool) -> Result<Poly> {
    let field = f.field();
    let x1 = Poly::var(field, f.nx(), EXACT, 1);
    let mut images = Poly::identity_images(field, f.nx(), EXACT);
    for (&i, &ti) in &chart.t {
        let ti = if invert { field.neg(ti) } else { ti };
        images[i] = images[i].add(&x1.mul_scalar(ti));
    }
    f.substitute(&images)
}

/// Chart map in y-coordinates: z -> x₁z, y₁ -> x₁, y_i -> x₁y_i for
/// i in S\{1}, identity elsewhere. Composition with the translation
/// reproduces `chart_substitution`; asserted in tests on random inputs.
pub fn monomial_images(chart: &BlowupChart, field: &Arc<Field>, nx: usize) -> Vec<Poly> {
    let x1 = Poly::var(field, nx, EXACT, 1);
    let mut images = Poly::identity_images(field, nx, EXACT);
    images[0] = images[0].mul(&x1);
    for &i in &chart.s {
        if i != 1 {
            images[i] = images[i].mul(&x1);
        }
    }
    images
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::weak_max_contact;
    use crate::poly::{parse_poly, Monomial};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> Arc<Field> {
        Field::prime(2).unwrap()
    }

    fn p2(s: &str) -> Poly {
        parse_poly(&f2(), 2, 64, s).unwrap()
    }

    fn ideal(gens: &[&str]) -> Ideal {
        Ideal::new(gens.iter().map(|s| p2(s)).collect()).unwrap()
    }

    fn chart_st12() -> BlowupChart {
        BlowupChart::new([1, 2], [(2, 1)]).unwrap()
    }

    #[test]
    fn chart_invariants_enforced() {
        assert!(BlowupChart::new([2], []).is_err());
        assert!(BlowupChart::new([1], [(2, 1)]).is_err());
        assert!(BlowupChart::new([1, 2], [(2, 0)]).is_err());
        assert!(BlowupChart::new([1, 2], [(2, 1)]).is_ok());
    }

    #[test]
    fn chart_substitution_examples() {
        let c = chart_st12();
        assert_eq!(chart_substitution(&p2("z^2"), &c).unwrap(), p2("x1^2*z^2"));
        assert_eq!(
            chart_substitution(&p2("x1^3*x2 + x1*x2^3"), &c).unwrap(),
            p2("x1^4*x2^3 + x1^4*x2^2")
        );
        let c2 = BlowupChart::new([1, 2], []).unwrap();
        assert_eq!(chart_substitution(&p2("x2"), &c2).unwrap(), p2("x1*x2"));
    }

    #[test]
    fn weak_transform_examples() {
        let j = ideal(&["z^2 + x1^3*x2 + x1*x2^3"]);
        let jt = weak_transform(&j, &chart_st12()).unwrap();
        assert_eq!(jt.gens(), &[p2("z^2 + x1^2*x2^3 + x1^2*x2^2")]);

        let j2 = ideal(&["z^2 + x1^3"]);
        let c1 = BlowupChart::new([1], []).unwrap();
        let jt2 = weak_transform(&j2, &c1).unwrap();
        assert_eq!(jt2.gens(), &[p2("z^2 + x1")]);
        assert_eq!(jt2.ord(), OrderVal::Finite(1));

        let j3 = ideal(&["z^3"]);
        assert_eq!(
            weak_transform(&j3, &chart_st12()).unwrap().gens(),
            &[p2("z^3")]
        );
    }

    #[test]
    fn divisor_transform_worked_example() {
        let j = ideal(&["z^2 + x1^3*x2 + x1*x2^3"]);
        let frame = weak_max_contact(&j).unwrap();
        let r = divisor_transform(&Divisor::new(vec![1, 1]), &chart_st12(), &frame).unwrap();
        assert_eq!(r.divisor, Divisor::new(vec![2, 0]));
        assert_eq!(r.exceptional_multiplicity, 2);
        assert_eq!(r.lost_components, BTreeSet::from([2]));
    }

    #[test]
    fn divisor_transform_keeps_untouched_components() {
        let j3 = Ideal::new(vec![parse_poly(&f2(), 3, 64, "z^2 + x1^3*x2 + x1*x2^3").unwrap()])
            .unwrap();
        let frame = weak_max_contact(&j3).unwrap();
        let chart = BlowupChart::new([1, 2], [(2, 1)]).unwrap();
        let r = divisor_transform(&Divisor::new(vec![1, 1, 3]), &chart, &frame).unwrap();
        assert_eq!(r.divisor.s[2], 3);
    }

    #[test]
    fn permissibility_worked_example() {
        let j = ideal(&["z^2 + x1^3*x2 + x1*x2^3"]);
        let frame = weak_max_contact(&j).unwrap();
        let rep = permissibility_check(&Divisor::new(vec![1, 1]), &chart_st12(), &frame);
        assert!(rep.permissible(), "{rep:?}");

        // missing divisor component under a translated index fails the
        // chart constraint
        let rep2 = permissibility_check(&Divisor::new(vec![1, 0]), &chart_st12(), &frame);
        assert!(!rep2.chart_constraint);
    }

    #[test]
    fn permissibility_equimultiple_i() {
        let j = ideal(&["z^2 + x1^3 + x2^3"]);
        let frame = weak_max_contact(&j).unwrap();
        // K = (x1^3 + x2^3, ...), trivial divisor: I = K, ord_P I = ord I
        let chart = BlowupChart::new([1, 2], []).unwrap();
        let rep = permissibility_check(&Divisor::new(vec![0, 0]), &chart, &frame);
        assert!(rep.equimultiple_i);
        // center = V(z, x1) only: x2^3 has order 0 along it
        let chart1 = BlowupChart::new([1], []).unwrap();
        let rep1 = permissibility_check(&Divisor::new(vec![0, 0]), &chart1, &frame);
        assert!(!rep1.equimultiple_i);
    }

    #[test]
    fn y_coordinate_example() {
        let c = chart_st12();
        // x1*x2*(x1+x2)^2 and x1*(x2+x1)*x2^2, expanded over F_2
        let f = p2("x1^3*x2 + x1*x2^3");
        let g = to_y(&f, &c).unwrap();
        assert_eq!(g, p2("x1*x2^3 + x1^2*x2^2"));
        assert_eq!(y_back(&g, &c).unwrap(), f);
    }

    #[test]
    fn y_roundtrip_and_monomial_composition_random() {
        let field = f2();
        let c = chart_st12();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let nterms = rng.gen_range(1..5);
            let f = Poly::from_terms(
                &field,
                2,
                EXACT,
                (0..nterms).map(|_| {
                    (
                        Monomial(vec![
                            rng.gen_range(0..4u32),
                            rng.gen_range(0..4u32),
                            rng.gen_range(0..4u32),
                        ]),
                        1u64,
                    )
                }),
            );
            assert_eq!(y_back(&to_y(&f, &c).unwrap(), &c).unwrap(), f);
            // chart pullback = (rewrite in y) then the monomial map
            let via_y = to_y(&f, &c)
                .unwrap()
                .substitute(&monomial_images(&c, &field, 2))
                .unwrap();
            assert_eq!(via_y, chart_substitution(&f, &c).unwrap());
        }
    }

    #[test]
    fn identity_translation_set_is_identity() {
        let c = BlowupChart::new([1, 2], []).unwrap();
        let f = p2("z^2 + x1*x2 + x2^3");
        assert_eq!(to_y(&f, &c).unwrap(), f);
    }
}
