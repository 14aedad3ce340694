//! Residual-order increase detection: the nine necessary conditions as
//! executable certificates, the auxiliary order bound, and the end-to-end
//! detector pipeline.

use crate::blowup::{
    divisor_transform, permissibility_check, to_y, weak_transform, y_back, BlowupChart,
    PermissibilityReport,
};
use crate::contact::{
    coefficient_ideal, factorial, p_adic_val, residual_order, shift_z, weak_max_contact,
    CompatReport, ContactFrame, ContactStatus, Divisor,
};
use crate::error::{Error, Result};
use crate::field::lucas_binom;
use crate::ideal::{weighted_initial_form, weighted_ord, Ideal, OrderVal, Rat};
use crate::poly::{Poly, EXACT};
use std::collections::BTreeMap;

/// The weighted tangent cone data: in_w of every minimal generator equals
/// α·(z^{p^e} + F)^m with c = m·p^e and F not a p^e-th power.
#[derive(Clone, Debug)]
pub struct WeightedCone {
    pub f: Poly,
    pub m: u32,
    pub e: u32,
    pub w: u32,
}

/// Factorization F = x^r·G with r_i = ord_{(x_i)}F for i in T.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub r: BTreeMap<usize, u32>,
    pub g: Poly,
    pub v: u32,
}

/// The residue invariants ℓ, b, r̄, v̄ entering the arithmetic conditions.
#[derive(Clone, Debug)]
pub struct Residues {
    pub l: u32,
    pub b: u32,
    pub rbar: BTreeMap<usize, u32>,
    pub vbar: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CondStatus {
    Pass,
    Fail(String),
    Skipped(String),
}

impl CondStatus {
    pub fn passed(&self) -> bool {
        matches!(self, CondStatus::Pass)
    }

    fn from_flag(flag: bool, why: &str) -> CondStatus {
        if flag {
            CondStatus::Pass
        } else {
            CondStatus::Fail(why.to_string())
        }
    }
}

impl std::fmt::Display for CondStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CondStatus::Pass => write!(f, "pass"),
            CondStatus::Fail(m) => write!(f, "fail ({m})"),
            CondStatus::Skipped(m) => write!(f, "n/a ({m})"),
        }
    }
}

/// Evaluation of the nine conditions; index 0 holds condition (1).
#[derive(Clone, Debug)]
pub struct ConditionEval {
    pub status: [CondStatus; 9],
    pub cone: Option<WeightedCone>,
    pub factorization: Option<Factorization>,
    pub residues: Option<Residues>,
    pub witness_n: Option<Poly>,
}

impl ConditionEval {
    pub fn all_pass(&self) -> bool {
        self.status.iter().all(|s| s.passed())
    }

    /// 1-based accessor matching the condition numbering.
    pub fn passed(&self, idx: usize) -> bool {
        self.status[idx - 1].passed()
    }
}

/// Extract the weighted tangent cone from a maximal-contact frame, or
/// explain which generator breaks the purely inseparable power shape.
pub fn extract_weighted_cone(
    frame: &ContactFrame,
) -> Result<std::result::Result<WeightedCone, String>> {
    let c = frame.c;
    let o = match frame.o_finite() {
        Some(o) => o,
        None => return Ok(Err("coefficient ideal vanished".into())),
    };
    let cf = factorial(c);
    if o as u64 % cf != 0 {
        return Ok(Err("condition (2) violated: o is not a multiple of c!".into()));
    }
    let w = (o as u64 / cf) as u32;
    let field = frame.ideal.field().expect("non-empty ideal");
    let p = field.p();
    let e = p_adic_val(c, p);
    let pe = p.pow(e) as u32;
    let m = c / pe;
    let target = Rat::from_integer(c as i64 * w as i64);

    let mut f_common: Option<Poly> = None;
    let mut seen_minimal = false;
    for g in frame.ideal.gens() {
        match weighted_ord(g, Rat::from_integer(w as i64)) {
            Some(v) if v == target => {}
            Some(v) if v < target => {
                return Err(Error::Internal(format!(
                    "generator {} has weighted order below c·w",
                    g.to_grammar()
                )))
            }
            _ => continue,
        }
        seen_minimal = true;
        let inw = weighted_initial_form(g, Rat::from_integer(w as i64));
        let mut zc = vec![0u32; frame.ideal.nx() + 1];
        zc[0] = c;
        let alpha = inw.coefficient(&zc);
        if alpha == 0 {
            return Ok(Err(format!(
                "generator {} breaks the shape: weighted initial form has no z^{c} term",
                g.to_grammar()
            )));
        }
        let norm = inw.mul_scalar(field.inv(alpha)?);
        let f_cand = match &f_common {
            Some(f) => f.clone(),
            None => {
                // coefficient of z^{p^e(m-1)} in (z^{p^e}+F)^m is m·F
                let lead = norm.z_coefficient(c - pe);
                let m_unit = field.embed_int(m as i64);
                if m_unit == 0 {
                    return Err(Error::Internal("m divisible by p".into()));
                }
                lead.mul_scalar(field.inv(m_unit)?)
            }
        };
        // term-by-term binomial expansion of (z^{p^e}+F)^m
        let mut expected = Poly::zero(field, frame.ideal.nx(), EXACT);
        for j in 0..=m {
            let binom = field.embed_int(lucas_binom(m as u64, j as u64, p) as i64);
            if binom == 0 {
                continue;
            }
            let mut ze = vec![0u32; frame.ideal.nx() + 1];
            ze[0] = pe * j;
            let zpow = Poly::monomial(field, frame.ideal.nx(), EXACT, &ze, binom);
            expected = expected.add(&f_cand.pow(m - j).mul(&zpow));
        }
        if expected != norm {
            return Ok(Err(format!(
                "generator {} breaks the purely inseparable power shape",
                g.to_grammar()
            )));
        }
        f_common = Some(f_cand);
    }
    if !seen_minimal {
        return Err(Error::Internal(
            "no generator of minimal weighted order".into(),
        ));
    }
    let f = f_common.expect("set on first minimal generator");
    if f.is_zero() || f.p_power_root(e).is_some() {
        return Ok(Err("F is a p^e-th power".into()));
    }
    debug_assert!(f.is_homogeneous() && f.degree() == Some(w * pe));
    Ok(Ok(WeightedCone { f, m, e, w }))
}

pub fn factorize_f(f: &Poly, chart: &BlowupChart) -> Factorization {
    let mut r = BTreeMap::new();
    let mut exps = vec![0u32; f.nx() + 1];
    for &i in &chart.t_set() {
        let ri = f.ord_in(|s| s == i).unwrap_or(0);
        r.insert(i, ri);
        exps[i] = ri;
    }
    let g = f.div_monomial(&exps).expect("r_i are divisibility orders");
    let v = g.degree().unwrap_or(0);
    Factorization { r, g, v }
}

/// Minimal total degree in (y_2, ..., y_n) of the terms of f.
fn q_t_order(f_in_y: &Poly) -> Option<u32> {
    f_in_y
        .terms()
        .map(|(m, _)| m.degree_in(|s| s >= 2))
        .min()
}

/// max over H of ord_{Q_T}(F + H^{p^e}): rewrite F in y-coordinates and
/// strip every monomial all of whose exponents are divisible by p^e (the
/// field is perfect, so p^e-th powers span exactly those monomials); the
/// answer is the Q_T-order of the remainder.
pub fn ord_mod_pe_qt(f: &Poly, chart: &BlowupChart, e: u32) -> Result<OrderVal> {
    let p = f.field().p();
    let pe = p.pow(e) as u32;
    let fy = to_y(f, chart)?;
    let stripped = Poly::from_terms(
        f.field(),
        f.nx(),
        fy.precision(),
        fy.terms()
            .filter(|(m, _)| m.0.iter().any(|&a| a % pe != 0))
            .map(|(m, c)| (m.clone(), *c)),
    );
    Ok(match q_t_order(&stripped) {
        Some(v) => OrderVal::Finite(v),
        None => OrderVal::Infinite,
    })
}

pub fn check_condition_4(f: &Poly, chart: &BlowupChart, e: u32, v: u32) -> Result<bool> {
    Ok(match ord_mod_pe_qt(f, chart, e)? {
        OrderVal::Infinite => true,
        OrderVal::Finite(o) => o > v,
    })
}

/// Condition (5): the product G((1,·)+tt)·Π_{i∈T\{1}}(x_i+t_i)^{r_i},
/// truncated at degree v, must have all exponents divisible by p^e; the
/// witness N is its p^e-th root.
pub fn check_condition_5(
    cone: &WeightedCone,
    fac: &Factorization,
    chart: &BlowupChart,
) -> Result<(bool, Option<Poly>)> {
    let field = cone.f.field();
    let nx = cone.f.nx();
    let p = field.p();
    let pe = p.pow(cone.e) as u32;
    let mut images = Poly::identity_images(field, nx, EXACT);
    images[1] = Poly::one(field, nx, EXACT);
    let mut unit = Poly::one(field, nx, EXACT);
    for &i in &chart.t_set() {
        if i == 1 {
            continue;
        }
        let ti = chart.translation(i).expect("translated index");
        let shift = Poly::constant(field, nx, EXACT, ti);
        images[i] = images[i].add(&shift);
        let factor = Poly::var(field, nx, EXACT, i).add(&shift);
        unit = unit.mul(&factor.pow(fac.r[&i]));
    }
    let dehom = fac.g.substitute(&images)?;
    let product = dehom.mul(&unit).truncate(fac.v);
    let divisible = product
        .terms()
        .all(|(m, _)| m.0.iter().all(|&a| a % pe == 0));
    if !divisible {
        return Ok((false, None));
    }
    Ok((true, product.p_power_root(cone.e)))
}

pub fn compute_l_b_residues(
    cone: &WeightedCone,
    fac: &Factorization,
) -> Residues {
    let p = cone.f.field().p();
    let l = match cone.f.max_p_power() {
        Some(l) => l.min(cone.e.saturating_sub(1)),
        None => 0,
    };
    let pl1 = p.pow(l + 1) as u32;
    let mut rbar = BTreeMap::new();
    let mut b = 0;
    for (&i, &ri) in &fac.r {
        let res = ri % pl1;
        if res != 0 {
            b += 1;
        }
        rbar.insert(i, res);
    }
    Residues {
        l,
        b,
        rbar,
        vbar: fac.v % pl1,
    }
}

/// Condition (6) in both stated forms; their equivalence is asserted.
pub fn check_condition_6(res: &Residues, p: u64) -> Result<bool> {
    let pl1 = p.pow(res.l + 1) as i64;
    let sum: i64 = res.rbar.values().map(|&r| r as i64).sum();
    let form_a = sum <= (res.b as i64 - 1) * pl1;
    let form_b = sum + res.vbar as i64 != res.b as i64 * pl1;
    if form_a != form_b {
        return Err(Error::Internal(format!(
            "the two forms of condition (6) disagree: sum={sum} vbar={} b={} p^(l+1)={pl1}",
            res.vbar, res.b
        )));
    }
    Ok(form_a)
}

/// Condition (7): x_j for j not in T appears only in p^e-th powers; the
/// refined membership also wants x_i exponents divisible by p^l for i in T.
pub fn check_condition_7(cone: &WeightedCone, chart: &BlowupChart, l: u32) -> bool {
    let p = cone.f.field().p();
    let pe = p.pow(cone.e) as u32;
    let pl = p.pow(l) as u32;
    let t = chart.t_set();
    cone.f.terms().all(|(m, _)| {
        m.0.iter().enumerate().skip(1).all(|(i, &a)| {
            if t.contains(&i) {
                a % pl == 0
            } else {
                a % pe == 0
            }
        })
    })
}

/// Condition (8): per i in T, x_i^{p^l}·∂_{x_i^{p^l}}F = x^r·H_i with H_i
/// a p^l-th power, free of y_1, and with x_k exponents divisible by p^e
/// for k not in T. A fully vanishing set of derivatives contradicts the
/// maximality of l when condition (7) holds.
pub fn check_condition_8(
    cone: &WeightedCone,
    fac: &Factorization,
    res: &Residues,
    chart: &BlowupChart,
    cond7: bool,
) -> Result<CondStatus> {
    let field = cone.f.field();
    let nx = cone.f.nx();
    let p = field.p();
    let pe = p.pow(cone.e) as u32;
    let pl = p.pow(res.l) as u32;
    let t = chart.t_set();
    let mut exps = vec![0u32; nx + 1];
    for (&i, &ri) in &fac.r {
        exps[i] = ri;
    }
    let mut any_nonzero = false;
    for &i in &t {
        let deriv = cone.f.hasse_derivative(i, pl);
        if deriv.is_zero() {
            continue;
        }
        any_nonzero = true;
        let mut xe = vec![0u32; nx + 1];
        xe[i] = pl;
        let num = deriv.mul(&Poly::monomial(field, nx, EXACT, &xe, 1));
        let h = match num.div_monomial(&exps) {
            Some(h) => h,
            None => {
                let witness = num
                    .non_divisible_witness(&exps)
                    .map(|m| format!("{m:?}"))
                    .unwrap_or_default();
                return Ok(CondStatus::Fail(format!(
                    "derivative for i={i} not divisible by x^r (term {witness})"
                )));
            }
        };
        let is_pl_power = res.l == 0
            || h.degree() == Some(0)
            || h.max_p_power().map_or(false, |k| k >= res.l);
        if !is_pl_power {
            return Ok(CondStatus::Fail(format!(
                "H_{i} is not a p^l-th power"
            )));
        }
        let hy = to_y(&h, chart)?;
        for (m, _) in hy.terms() {
            if m.0[1] != 0 {
                return Ok(CondStatus::Fail(format!("H_{i} involves x_1")));
            }
            for (k, &a) in m.0.iter().enumerate().skip(2) {
                if !t.contains(&k) && a % pe != 0 {
                    return Ok(CondStatus::Fail(format!(
                        "H_{i} has x_{k} outside p^e-th powers"
                    )));
                }
            }
        }
    }
    if !any_nonzero {
        if cond7 {
            return Err(Error::Internal(
                "all logarithmic derivatives vanish at level p^l, contradicting maximality of l"
                    .into(),
            ));
        }
        return Ok(CondStatus::Fail(
            "no index in T has a non-vanishing logarithmic derivative".into(),
        ));
    }
    Ok(CondStatus::Pass)
}

/// Condition (9): the increase of the residual order is at most c!/p.
pub fn check_moh_bound(before: u32, after: u32, c: u32, p: u64) -> bool {
    let cf = factorial(c);
    after as u64 <= before as u64 + cf / p
}

/// Evaluate all nine conditions against a maximal-contact frame and chart.
/// Conditions that cannot be evaluated (missing cone, missing residual
/// orders) are marked skipped, not failed.
pub fn evaluate_conditions(
    frame: &ContactFrame,
    chart: &BlowupChart,
    residual_before: Option<u32>,
    residual_after: Option<u32>,
) -> Result<ConditionEval> {
    let field = frame.ideal.field().expect("non-empty ideal");
    let p = field.p();
    let c = frame.c;
    let cf = factorial(c);
    let e = p_adic_val(c, p);
    let skipped = |msg: &str| CondStatus::Skipped(msg.to_string());
    let mut eval = ConditionEval {
        status: std::array::from_fn(|_| skipped("not evaluated")),
        cone: None,
        factorization: None,
        residues: None,
        witness_n: None,
    };
    eval.status[0] = CondStatus::from_flag(e >= 1, "c is prime to p");
    let o = match frame.o_finite() {
        Some(o) => o,
        None => {
            for i in 1..9 {
                eval.status[i] = skipped("coefficient ideal vanished");
            }
            return Ok(eval);
        }
    };
    let w_integral = o as u64 % cf == 0;
    let w = o as u64 / cf;
    eval.status[1] = CondStatus::from_flag(w_integral && w >= 2, "o is not w·c! with w >= 2");
    if !w_integral {
        for i in 2..8 {
            eval.status[i] = skipped("w not integral");
        }
    } else {
        match extract_weighted_cone(frame)? {
            Err(reason) => {
                eval.status[2] = CondStatus::Fail(reason);
                for i in 3..8 {
                    eval.status[i] = skipped("no weighted cone");
                }
            }
            Ok(cone) => {
                eval.status[2] = CondStatus::Pass;
                let fac = factorize_f(&cone.f, chart);
                eval.status[3] = CondStatus::from_flag(
                    check_condition_4(&cone.f, chart, cone.e, fac.v)?,
                    "ord mod p^e along Q_T does not exceed v",
                );
                let (c5, n) = check_condition_5(&cone, &fac, chart)?;
                eval.status[4] =
                    CondStatus::from_flag(c5, "truncated product is not a p^e-th power jet");
                eval.witness_n = n;
                let res = compute_l_b_residues(&cone, &fac);
                eval.status[5] =
                    CondStatus::from_flag(check_condition_6(&res, p)?, "arithmetic inequality");
                let c7 = check_condition_7(&cone, chart, res.l);
                eval.status[6] =
                    CondStatus::from_flag(c7, "a variable outside T escapes p^e-th powers");
                eval.status[7] = check_condition_8(&cone, &fac, &res, chart, c7)?;
                eval.cone = Some(cone);
                eval.factorization = Some(fac);
                eval.residues = Some(res);
            }
        }
    }
    eval.status[8] = match (residual_before, residual_after) {
        (Some(b), Some(a)) => {
            CondStatus::from_flag(check_moh_bound(b, a, c, p), "increase exceeds c!/p")
        }
        _ => skipped("residual orders not comparable"),
    };
    Ok(eval)
}

/// σ-weighted initial form: weights 2 on y_i for i in S\{1} and 1
/// otherwise, evaluated in y-coordinates and mapped back.
pub fn sigma_weighted_initial(g: &Poly, chart: &BlowupChart) -> Result<Poly> {
    let gy = to_y(g, chart)?;
    let weight = |slot: usize| -> u64 {
        if slot >= 2 && chart.s().contains(&slot) {
            2
        } else {
            1
        }
    };
    let min = gy
        .terms()
        .map(|(m, _)| {
            m.0.iter()
                .enumerate()
                .map(|(s, &a)| weight(s) * a as u64)
                .sum::<u64>()
        })
        .min();
    let min = match min {
        Some(m) => m,
        None => return Ok(g.clone()),
    };
    let kept = Poly::from_terms(
        g.field(),
        g.nx(),
        EXACT,
        gy.terms()
            .filter(|(m, _)| {
                m.0.iter()
                    .enumerate()
                    .map(|(s, &a)| weight(s) * a as u64)
                    .sum::<u64>()
                    == min
            })
            .map(|(m, c)| (m.clone(), *c)),
    );
    y_back(&kept, chart)
}

/// Right-hand side of the auxiliary order bound:
/// ord_{Q_T} in(h) - Σ_{i∉T} s_i.
pub fn auxiliary_bound(h: &Poly, chart: &BlowupChart, d: &Divisor) -> Result<i64> {
    let inh = h.initial_form();
    let hy = to_y(&inh, chart)?;
    let qt = q_t_order(&hy).ok_or_else(|| Error::Internal("zero element".into()))? as i64;
    let t = chart.t_set();
    let outside: i64 = d
        .s
        .iter()
        .enumerate()
        .filter(|(i, _)| !t.contains(&(i + 1)))
        .map(|(_, &s)| s as i64)
        .sum();
    Ok(qt - outside)
}

/// Invert the monomial chart map on x₁·g: a term x₁^a·Πx_i^{α_i} pulls
/// back to the y-monomial with β_1 = a - Σ_{i∈S,i≥2} α_i, β_i = α_i.
fn pull_back_initial(g: &Poly, chart: &BlowupChart) -> Result<Option<Poly>> {
    let field = g.field();
    let nx = g.nx();
    let mut terms = Vec::new();
    for (m, &c) in g.terms() {
        if m.z_exp() != 0 {
            return Err(Error::Internal("cleaning element involves z".into()));
        }
        let a = m.0[1] + 1;
        let in_s: u32 = m
            .0
            .iter()
            .enumerate()
            .skip(2)
            .filter(|(i, _)| chart.s().contains(i))
            .map(|(_, &x)| x)
            .sum();
        if a < in_s {
            return Ok(None);
        }
        let mut beta = m.0.clone();
        beta[1] = a - in_s;
        terms.push((crate::poly::Monomial(beta), c));
    }
    let q_y = Poly::from_terms(field, nx, EXACT, terms);
    Ok(Some(y_back(&q_y, chart)?))
}

/// The auxiliary hypersurface bound checked on a detected increase.
#[derive(Clone, Debug)]
pub struct AuxiliaryReport {
    /// Adjustment q with U = V(z - q), pulled back from the post-blowup
    /// cleaning through the monomial chart map.
    pub q: Poly,
    /// Minimal-order element of the coefficient ideal of U.
    pub h: Poly,
    pub bound: i64,
    pub residual_before: u32,
    pub residual_after: u32,
    pub chain_ok: bool,
    /// Whether the σ-weighted construction q^{p^e} = λ·in_σ(f_{c-p^e})
    /// produces the same q; reported without judgement.
    pub sigma_match: Option<bool>,
}

fn build_auxiliary(
    frame_before: &ContactFrame,
    frame_after: &ContactFrame,
    chart: &BlowupChart,
    d: &Divisor,
    residual_before: u32,
    residual_after: u32,
) -> Result<Option<AuxiliaryReport>> {
    let field = frame_before.ideal.field().expect("non-empty ideal");
    let c = frame_before.c;
    let nx = frame_before.ideal.nx();
    // the whole accumulated cleaning shift pulls back, not only its
    // initial form: later cleaning steps contribute terms of the same
    // minimal degree downstairs
    let g = frame_after.q_total.clone();
    let q = if g.is_zero() {
        Poly::zero(field, nx, EXACT)
    } else {
        match pull_back_initial(&g, chart)? {
            Some(q) => q,
            None => return Ok(None),
        }
    };
    let shifted = shift_z(&frame_before.ideal, &q)?;
    let k1 = coefficient_ideal(&shifted, c);
    let o = frame_before.o_finite().expect("finite coefficient order");
    if k1.ord() != OrderVal::Finite(o) {
        return Err(Error::Internal(format!(
            "adjusted hypersurface lost weak maximal contact: ord K_1 = {} != {o}",
            k1.ord()
        )));
    }
    let h = k1
        .gens()
        .iter()
        .find(|g| g.ord() == Some(o))
        .expect("order is attained on a generator")
        .clone();
    let bound = auxiliary_bound(&h, chart, d)?;
    let chain_ok = residual_before < residual_after && (residual_after as i64) <= bound;

    let p = field.p();
    let e = p_adic_val(c, p);
    let pe = p.pow(e) as u32;
    let sigma_match = frame_before
        .ideal
        .z_regular_witness(c)
        .map(|witness| {
            let f_low = witness.z_coefficient(c - pe);
            if f_low.is_zero() {
                return Ok(false);
            }
            let lambda = field.neg(field.inv(lucas_binom(c as u64, pe as u64, p))?);
            let q_sigma = sigma_weighted_initial(&f_low, chart)?
                .mul_scalar(lambda)
                .p_power_root(e);
            Ok(q_sigma.as_ref() == Some(&q))
        })
        .transpose()?;

    Ok(Some(AuxiliaryReport {
        q,
        h,
        bound,
        residual_before,
        residual_after,
        chain_ok,
        sigma_match,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Kangaroo,
    NoIncrease,
    OrderDropped,
    NotPermissible,
    IncompatibleDivisor,
    PurePower,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Kangaroo => "kangaroo",
            Verdict::NoIncrease => "no increase",
            Verdict::OrderDropped => "order dropped",
            Verdict::NotPermissible => "not permissible",
            Verdict::IncompatibleDivisor => "divisor incompatible",
            Verdict::PurePower => "pure power",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub verdict: Verdict,
    pub frame_before: ContactFrame,
    pub residual_before: Option<u32>,
    pub permissibility: Option<PermissibilityReport>,
    pub transformed: Option<Ideal>,
    pub ord_after: Option<OrderVal>,
    pub divisor_after: Option<Divisor>,
    pub exceptional_multiplicity: Option<u32>,
    pub frame_after: Option<ContactFrame>,
    pub residual_after: Option<u32>,
    pub conditions: Option<ConditionEval>,
    pub auxiliary: Option<AuxiliaryReport>,
    pub notes: Vec<String>,
}

/// End-to-end pipeline: weak maximal contact, residual order,
/// permissibility, transforms, residual order after, verdict; on a
/// detected increase all nine conditions and the auxiliary bound are
/// asserted to hold.
pub fn detect_kangaroo(j: &Ideal, d: &Divisor, chart: &BlowupChart) -> Result<AnalysisReport> {
    let frame = weak_max_contact(j)?;
    let mut report = AnalysisReport {
        verdict: Verdict::NoIncrease,
        frame_before: frame.clone(),
        residual_before: None,
        permissibility: None,
        transformed: None,
        ord_after: None,
        divisor_after: None,
        exceptional_multiplicity: None,
        frame_after: None,
        residual_after: None,
        conditions: None,
        auxiliary: None,
        notes: vec![],
    };
    match frame.status {
        ContactStatus::PrecisionExhausted => {
            return Err(Error::Inconclusive(
                "coefficient order hit the jet precision; raise precision".into(),
            ))
        }
        ContactStatus::PurePower => {
            report.verdict = Verdict::PurePower;
            report
                .notes
                .push("ideal is a pure power of the contact coordinate".into());
            return Ok(report);
        }
        ContactStatus::Maximal => {}
    }
    if !frame.q_total.is_zero() {
        report.notes.push(format!(
            "maximal contact at V(z - ({}))",
            frame.q_total.to_grammar()
        ));
    }
    let res_b = residual_order(&frame, d);
    if let CompatReport::Incompatible { gen, slot, .. } = &res_b.compat {
        report.verdict = Verdict::IncompatibleDivisor;
        report.notes.push(format!(
            "coefficient ideal generator {gen} not divisible along x{slot}"
        ));
        return Ok(report);
    }
    report.residual_before = res_b.value;
    let perm = permissibility_check(d, chart, &frame);
    let permissible = perm.permissible();
    report.permissibility = Some(perm);
    if !permissible {
        report.verdict = Verdict::NotPermissible;
        report.conditions = Some(evaluate_conditions(&frame, chart, res_b.value, None)?);
        return Ok(report);
    }

    let j1 = weak_transform(&frame.ideal, chart)?;
    report.transformed = Some(j1.clone());
    let c1 = j1.ord();
    report.ord_after = Some(c1);
    match c1 {
        OrderVal::Infinite => {
            return Err(Error::Internal("weak transform vanished".into()))
        }
        OrderVal::Finite(c1) if c1 > frame.c => {
            return Err(Error::Internal(format!(
                "order increased under blowup: {} -> {c1}",
                frame.c
            )))
        }
        OrderVal::Finite(c1) if c1 < frame.c => {
            report.verdict = Verdict::OrderDropped;
            report.conditions = Some(evaluate_conditions(&frame, chart, res_b.value, None)?);
            return Ok(report);
        }
        OrderVal::Finite(_) => {}
    }
    let tr = divisor_transform(d, chart, &frame)?;
    report.divisor_after = Some(tr.divisor.clone());
    report.exceptional_multiplicity = Some(tr.exceptional_multiplicity);
    if !tr.lost_components.is_empty() {
        report.notes.push(format!(
            "divisor components lost in the chart: {:?}",
            tr.lost_components
        ));
    }
    let frame1 = weak_max_contact(&j1)?;
    match frame1.status {
        ContactStatus::PrecisionExhausted => {
            return Err(Error::Inconclusive(
                "coefficient order after blowup hit the jet precision; raise precision".into(),
            ))
        }
        ContactStatus::PurePower => {
            return Err(Error::Inconclusive(
                "transform is a pure power up to precision; residual order unbounded".into(),
            ))
        }
        ContactStatus::Maximal => {}
    }
    let res_a = residual_order(&frame1, &tr.divisor);
    if !res_a.compat.is_compatible() {
        return Err(Error::Internal(
            "transformed divisor incompatible with the new coefficient ideal".into(),
        ));
    }
    report.frame_after = Some(frame1.clone());
    report.residual_after = res_a.value;

    let before = res_b.value.expect("compatible and finite");
    let after = res_a.value.expect("compatible and finite");
    report.verdict = if after > before {
        Verdict::Kangaroo
    } else {
        Verdict::NoIncrease
    };
    let eval = evaluate_conditions(&frame, chart, Some(before), Some(after))?;
    if report.verdict == Verdict::Kangaroo {
        if !eval.all_pass() {
            let failing: Vec<String> = eval
                .status
                .iter()
                .enumerate()
                .filter(|(_, s)| !s.passed())
                .map(|(i, s)| format!("({}) {s}", i + 1))
                .collect();
            return Err(Error::Internal(format!(
                "residual order increased but conditions failed: {}",
                failing.join("; ")
            )));
        }
        let prop = build_auxiliary(&frame, &frame1, chart, d, before, after)?;
        match &prop {
            Some(p) if !p.chain_ok => {
                return Err(Error::Internal(format!(
                    "order bound chain violated: {} < {} <= {} expected",
                    p.residual_before, p.residual_after, p.bound
                )))
            }
            Some(_) => {}
            None => report
                .notes
                .push("cleaning element has no monomial pullback; bound not evaluated".into()),
        }
        report.auxiliary = prop;
    }
    report.conditions = Some(eval);
    Ok(report)
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

    fn chart_st12() -> BlowupChart {
        BlowupChart::new([1, 2], [(2, 1)]).unwrap()
    }

    fn worked_frame() -> ContactFrame {
        weak_max_contact(&ideal(&["z^2 + x1^3*x2 + x1*x2^3"])).unwrap()
    }

    #[test]
    fn cone_worked_example() {
        let cone = extract_weighted_cone(&worked_frame()).unwrap().unwrap();
        assert_eq!(cone.f, p2("x1^3*x2 + x1*x2^3"));
        assert_eq!((cone.m, cone.e, cone.w), (1, 1, 2));
    }

    #[test]
    fn cone_cube_power_example() {
        // ((z^2 + F))^3 has c = 6 = 3·2, so m = 3, e = 1
        let base = parse_poly(&f2(), 2, EXACT, "z^2 + x1^3*x2 + x1*x2^3").unwrap();
        let j = Ideal::new(vec![base.pow(3)]).unwrap();
        let frame = weak_max_contact(&j).unwrap();
        assert_eq!(frame.o, OrderVal::Finite(1440));
        let cone = extract_weighted_cone(&frame).unwrap().unwrap();
        assert_eq!(cone.f, p2("x1^3*x2 + x1*x2^3"));
        assert_eq!((cone.m, cone.e, cone.w), (3, 1, 2));
    }

    #[test]
    fn cone_rejects_pe_th_power() {
        // cleaning would remove a square F, so build the frame directly
        let j = ideal(&["z^2 + x1^4"]);
        let frame = ContactFrame {
            ideal: j.clone(),
            c: 2,
            q_total: Poly::zero(&f2(), 2, EXACT),
            coeff: coefficient_ideal(&j, 2),
            o: OrderVal::Finite(4),
            w: Some(Rat::from_integer(2)),
            status: ContactStatus::Maximal,
            iterations: 0,
        };
        match extract_weighted_cone(&frame).unwrap() {
            Err(msg) => assert!(msg.contains("p^e-th power"), "{msg}"),
            Ok(_) => panic!("expected failure"),
        }
    }

    #[test]
    fn factorize_examples() {
        let cone = extract_weighted_cone(&worked_frame()).unwrap().unwrap();
        let fac = factorize_f(&cone.f, &chart_st12());
        assert_eq!(fac.r[&1], 1);
        assert_eq!(fac.r[&2], 1);
        assert_eq!(fac.g, p2("x1^2 + x2^2"));
        assert_eq!(fac.v, 2);

        let fac2 = factorize_f(&p2("x1^4"), &BlowupChart::new([1], []).unwrap());
        assert_eq!(fac2.r[&1], 4);
        assert_eq!(fac2.g, p2("1"));
        assert_eq!(fac2.v, 0);
    }

    #[test]
    fn ord_mod_examples() {
        let c = chart_st12();
        // F = xy(x+y)^2 expanded
        let f = p2("x1^3*x2 + x1*x2^3");
        assert_eq!(ord_mod_pe_qt(&f, &c, 1).unwrap(), OrderVal::Finite(3));

        let c1 = BlowupChart::new([1], []).unwrap();
        let g = p2("x1^2 + x1*x2");
        assert_eq!(ord_mod_pe_qt(&g, &c1, 1).unwrap(), OrderVal::Finite(1));

        let sq = p2("x1^2*x2^2");
        assert_eq!(ord_mod_pe_qt(&sq, &c, 1).unwrap(), OrderVal::Infinite);

        assert!(check_condition_4(&f, &c, 1, 2).unwrap());
    }

    #[test]
    fn condition_5_examples() {
        let cone = extract_weighted_cone(&worked_frame()).unwrap().unwrap();
        let fac = factorize_f(&cone.f, &chart_st12());
        let (ok, n) = check_condition_5(&cone, &fac, &chart_st12()).unwrap();
        assert!(ok);
        assert_eq!(n, Some(p2("x2")));

        // G = x1 + x2 leaves an odd monomial at degree <= v
        let cone2 = WeightedCone {
            f: parse_poly(&f2(), 2, EXACT, "x1^2*x2^2 + x1^3*x2").unwrap(),
            m: 1,
            e: 1,
            w: 2,
        };
        let fac2 = factorize_f(&cone2.f, &chart_st12());
        assert_eq!((fac2.r[&1], fac2.r[&2], fac2.v), (2, 1, 1));
        let (ok2, _) = check_condition_5(&cone2, &fac2, &chart_st12()).unwrap();
        assert!(!ok2);
    }

    #[test]
    fn residues_and_condition_6() {
        let cone = extract_weighted_cone(&worked_frame()).unwrap().unwrap();
        let fac = factorize_f(&cone.f, &chart_st12());
        let res = compute_l_b_residues(&cone, &fac);
        assert_eq!((res.l, res.b), (0, 2));
        assert_eq!(res.rbar[&1], 1);
        assert_eq!(res.rbar[&2], 1);
        assert_eq!(res.vbar, 0);
        assert!(check_condition_6(&res, 2).unwrap());

        // a single contributing component cannot pass
        let res2 = Residues {
            l: 0,
            b: 1,
            rbar: BTreeMap::from([(1, 1)]),
            vbar: 1,
        };
        assert!(!check_condition_6(&res2, 2).unwrap());
        let res3 = Residues {
            l: 0,
            b: 0,
            rbar: BTreeMap::new(),
            vbar: 0,
        };
        assert!(!check_condition_6(&res3, 2).unwrap());
    }

    #[test]
    fn l_detects_square_factor() {
        // x^2y^2(x+y)^4 is a square but not a fourth power
        let f = p2("x1^6*x2^2 + x1^2*x2^6");
        let cone = WeightedCone { f, m: 1, e: 2, w: 2 };
        let fac = factorize_f(&cone.f, &chart_st12());
        let res = compute_l_b_residues(&cone, &fac);
        assert_eq!(res.l, 1);
    }

    #[test]
    fn condition_7_examples() {
        let field = f2();
        let chart = BlowupChart::new([1, 2], [(2, 1)]).unwrap();
        let mk = |s: &str| parse_poly(&field, 3, 64, s).unwrap();
        let bad = WeightedCone { f: mk("x1^2*x3"), m: 1, e: 1, w: 1 };
        assert!(!check_condition_7(&bad, &chart, 0));
        let good = WeightedCone { f: mk("x1*x2*x3^2"), m: 1, e: 1, w: 2 };
        assert!(check_condition_7(&good, &chart, 0));
    }

    #[test]
    fn condition_8_worked_example() {
        let cone = extract_weighted_cone(&worked_frame()).unwrap().unwrap();
        let fac = factorize_f(&cone.f, &chart_st12());
        let res = compute_l_b_residues(&cone, &fac);
        let status = check_condition_8(&cone, &fac, &res, &chart_st12(), true).unwrap();
        assert_eq!(status, CondStatus::Pass);
    }

    #[test]
    fn moh_bound_examples() {
        assert!(check_moh_bound(2, 3, 2, 2));
        assert!(check_moh_bound(5, 3, 2, 2));
        assert!(!check_moh_bound(2, 4, 2, 2));
    }

    #[test]
    fn sigma_initial_examples() {
        // S = {1}: plain initial form
        let c1 = BlowupChart::new([1], []).unwrap();
        let g = p2("x2^2 + x1^3");
        assert_eq!(sigma_weighted_initial(&g, &c1).unwrap(), p2("x2^2"));
        // S = {1,2} without translation: x2 carries weight 2
        let c2 = BlowupChart::new([1, 2], []).unwrap();
        assert_eq!(sigma_weighted_initial(&g, &c2).unwrap(), p2("x1^3"));
        let h = p2("x1*x2 + x1^3");
        assert_eq!(sigma_weighted_initial(&h, &c2).unwrap(), h);
    }

    #[test]
    fn detect_worked_example_is_kangaroo() {
        let j = ideal(&["z^2 + x1^3*x2 + x1*x2^3"]);
        let d = Divisor::new(vec![1, 1]);
        let report = detect_kangaroo(&j, &d, &chart_st12()).unwrap();
        assert_eq!(report.verdict, Verdict::Kangaroo);
        assert_eq!(report.residual_before, Some(2));
        assert_eq!(report.residual_after, Some(3));
        assert_eq!(report.divisor_after, Some(Divisor::new(vec![2, 0])));
        let eval = report.conditions.unwrap();
        assert!(eval.all_pass(), "{:?}", eval.status);
        let prop = report.auxiliary.unwrap();
        assert_eq!(prop.q, p2("x1*x2 + x1^2"));
        assert_eq!(prop.bound, 3);
        assert!(prop.chain_ok);
        assert_eq!(prop.sigma_match, Some(true));
    }

    #[test]
    fn detect_untranslated_chart_is_no_increase() {
        let j = ideal(&["z^2 + x1^3*x2 + x1*x2^3"]);
        let d = Divisor::new(vec![1, 1]);
        let chart = BlowupChart::new([1, 2], []).unwrap();
        let report = detect_kangaroo(&j, &d, &chart).unwrap();
        assert_eq!(report.verdict, Verdict::NoIncrease);
        let eval = report.conditions.unwrap();
        assert!(!eval.passed(6));
    }

    #[test]
    fn detect_order_drop() {
        let j = ideal(&["z^2 + x1^3"]);
        let d = Divisor::new(vec![0, 0]);
        let chart = BlowupChart::new([1], []).unwrap();
        let report = detect_kangaroo(&j, &d, &chart).unwrap();
        assert_eq!(report.verdict, Verdict::OrderDropped);
        assert_eq!(report.ord_after, Some(OrderVal::Finite(1)));
    }
}
