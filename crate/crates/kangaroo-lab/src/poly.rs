//! Sparse multivariate polynomials over F_{p^k} with jet semantics.
//!
//! A `Poly` lives in K[z, x1, ..., xn] and represents a power-series jet:
//! every term of total degree below `precision` is exactly known, higher
//! terms have been truncated away. Arithmetic propagates the precision so
//! that each reported order is certified.
//!
//! Variable slot 0 is the distinguished parameter `z`; slots 1..=n are the
//! x-variables.

use crate::error::{Error, Result};
use crate::field::{lucas_binom, Field, Scalar};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Sentinel precision for exact polynomials (nothing was ever truncated).
pub const EXACT: u32 = u32::MAX;

/// Exponent vector; slot 0 is z, slots 1..=n are x1..xn.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn z_exp(&self) -> u32 {
        self.0[0]
    }

    /// Sum of the exponents of the selected variables.
    pub fn degree_in<F: Fn(usize) -> bool>(&self, select: F) -> u32 {
        self.0
            .iter()
            .enumerate()
            .filter(|(i, _)| select(*i))
            .map(|(_, e)| *e)
            .sum()
    }
}

// Graded lexicographic, z greatest (canonical term order of the crate).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial jet.
#[derive(Clone)]
pub struct Poly {
    field: Arc<Field>,
    /// Number of x-variables (the ring has nx + 1 variables in total).
    nx: usize,
    terms: BTreeMap<Monomial, Scalar>,
    precision: u32,
}

// Equality compares the stored terms, not the precision. Two jets that
// agree on all stored terms are treated as equal values.
impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && *self.field == *other.field && self.terms == other.terms
    }
}
impl Eq for Poly {}

fn prec_cap(p: u32) -> u32 {
    p.min(EXACT - 1)
}

/// p + d with EXACT absorbing.
fn prec_add(p: u32, d: u32) -> u32 {
    if p == EXACT {
        EXACT
    } else {
        prec_cap(p.saturating_add(d))
    }
}

impl Poly {
    pub fn zero(field: &Arc<Field>, nx: usize, precision: u32) -> Poly {
        Poly {
            field: Arc::clone(field),
            nx,
            terms: BTreeMap::new(),
            precision,
        }
    }

    pub fn constant(field: &Arc<Field>, nx: usize, precision: u32, c: Scalar) -> Poly {
        let mut p = Poly::zero(field, nx, precision);
        if c != 0 && precision > 0 {
            p.terms.insert(Monomial(vec![0; nx + 1]), c);
        }
        p
    }

    pub fn one(field: &Arc<Field>, nx: usize, precision: u32) -> Poly {
        Poly::constant(field, nx, precision, 1)
    }

    /// The variable with the given slot (0 = z, i = x_i).
    pub fn var(field: &Arc<Field>, nx: usize, precision: u32, slot: usize) -> Poly {
        let mut exps = vec![0u32; nx + 1];
        exps[slot] = 1;
        Poly::monomial(field, nx, precision, &exps, 1)
    }

    pub fn monomial(
        field: &Arc<Field>,
        nx: usize,
        precision: u32,
        exps: &[u32],
        c: Scalar,
    ) -> Poly {
        assert_eq!(exps.len(), nx + 1);
        let mut p = Poly::zero(field, nx, precision);
        let m = Monomial(exps.to_vec());
        if c != 0 && m.degree() < precision {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Scalar)>>(
        field: &Arc<Field>,
        nx: usize,
        precision: u32,
        it: I,
    ) -> Poly {
        let mut p = Poly::zero(field, nx, precision);
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c == 0 || m.degree() >= self.precision {
            return;
        }
        let f = &self.field;
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = f.add(*e.get(), c);
                if v == 0 {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn precision(&self) -> u32 {
        self.precision
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn is_exact(&self) -> bool {
        self.precision == EXACT
    }
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Scalar {
        *self.terms.get(&Monomial(exps.to_vec())).unwrap_or(&0)
    }

    /// Minimal total degree of a term, None for the zero jet.
    pub fn ord(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).min()
    }

    /// Maximal total degree of a term, None for the zero jet.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    /// Minimal sum of selected-variable exponents over all terms.
    pub fn ord_in<F: Fn(usize) -> bool>(&self, select: F) -> Option<u32> {
        self.terms.keys().map(|m| m.degree_in(&select)).min()
    }

    pub fn is_homogeneous(&self) -> bool {
        match self.ord() {
            None => true,
            Some(d) => self.terms.keys().all(|m| m.degree() == d),
        }
    }

    /// Order of the zero jet for precision propagation.
    fn ord_or_prec(&self) -> u32 {
        self.ord().unwrap_or(self.precision)
    }

    fn with_precision(mut self, precision: u32) -> Poly {
        self.precision = precision;
        self.terms.retain(|m, _| m.degree() < precision);
        self
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nx, other.nx);
        let precision = self.precision.min(other.precision);
        let mut out = Poly::zero(&self.field, self.nx, precision);
        for (m, c) in self.terms.iter().chain(other.terms.iter()) {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn neg(&self) -> Poly {
        let mut out = self.clone();
        let f = &out.field;
        let terms = out
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), f.neg(*c)))
            .collect();
        out.terms = terms;
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nx, other.nx);
        let precision = prec_add(self.precision, other.ord_or_prec())
            .min(prec_add(other.precision, self.ord_or_prec()));
        let mut out = Poly::zero(&self.field, self.nx, precision);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let exps: Vec<u32> = ma.0.iter().zip(&mb.0).map(|(a, b)| a + b).collect();
                let m = Monomial(exps);
                if m.degree() < precision {
                    out.add_term(m, self.field.mul(*ca, *cb));
                }
            }
        }
        out
    }

    pub fn mul_scalar(&self, c: Scalar) -> Poly {
        if c == 0 {
            return Poly::zero(&self.field, self.nx, self.precision);
        }
        let mut out = self.clone();
        let f = &out.field;
        out.terms = out
            .terms
            .iter()
            .map(|(m, v)| (m.clone(), f.mul(*v, c)))
            .collect();
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(&self.field, self.nx, EXACT);
        let mut base = self.clone();
        let mut e = e;
        if e == 0 {
            // 1 at the precision of self-as-context
            return Poly::one(&self.field, self.nx, EXACT);
        }
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// All terms of total degree > d removed; precision becomes
    /// min(old precision, d + 1).
    pub fn truncate(&self, d: u32) -> Poly {
        self.clone().with_precision(prec_add(d, 1).min(self.precision))
    }

    /// Terms of minimal total degree, as an exact polynomial. Zero for the
    /// zero jet. Homogeneous parts below the precision are fully known.
    pub fn initial_form(&self) -> Poly {
        match self.ord() {
            None => Poly::zero(&self.field, self.nx, self.precision),
            Some(d) => self.homogeneous_component(d),
        }
    }

    /// The degree-d homogeneous part, exact when d is below the precision.
    pub fn homogeneous_component(&self, d: u32) -> Poly {
        let precision = if d < self.precision { EXACT } else { self.precision };
        Poly::from_terms(
            &self.field,
            self.nx,
            precision,
            self.terms
                .iter()
                .filter(|(m, _)| m.degree() == d)
                .map(|(m, c)| (m.clone(), *c)),
        )
    }

    /// Coefficient of z^i as a polynomial in the x-variables (z-slot 0).
    pub fn z_coefficient(&self, i: u32) -> Poly {
        let precision = if self.precision == EXACT {
            EXACT
        } else {
            self.precision.saturating_sub(i)
        };
        Poly::from_terms(
            &self.field,
            self.nx,
            precision,
            self.terms.iter().filter(|(m, _)| m.z_exp() == i).map(|(m, c)| {
                let mut exps = m.0.clone();
                exps[0] = 0;
                (Monomial(exps), *c)
            }),
        )
    }

    /// Largest z-exponent appearing, None for the zero jet.
    pub fn z_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.z_exp()).max()
    }

    /// Term-wise Hasse derivative of order k with respect to one variable:
    /// ∂_{x^k}(x^a) = C(a, k)·x^{a-k}. The precision drops by k.
    pub fn hasse_derivative(&self, slot: usize, k: u32) -> Poly {
        let p = self.field.p();
        let precision = if self.precision == EXACT {
            EXACT
        } else {
            self.precision.saturating_sub(k)
        };
        Poly::from_terms(
            &self.field,
            self.nx,
            precision,
            self.terms.iter().filter_map(|(m, c)| {
                let a = m.0[slot];
                if a < k {
                    return None;
                }
                let binom = lucas_binom(a as u64, k as u64, p);
                if binom == 0 {
                    return None;
                }
                let mut exps = m.0.clone();
                exps[slot] = a - k;
                Some((Monomial(exps), self.field.mul(*c, binom)))
            }),
        )
    }

    /// p^l-th root when every exponent is divisible by p^l (coefficients
    /// always admit roots over a finite field). None when no root exists.
    pub fn p_power_root(&self, l: u32) -> Option<Poly> {
        if l == 0 {
            return Some(self.clone());
        }
        let p = self.field.p();
        let q = match p.checked_pow(l) {
            Some(q) => q as u32,
            None => return None,
        };
        if !self
            .terms
            .keys()
            .all(|m| m.0.iter().all(|&e| e % q == 0))
        {
            return None;
        }
        let precision = if self.precision == EXACT {
            EXACT
        } else {
            self.precision.div_ceil(q)
        };
        Some(Poly::from_terms(
            &self.field,
            self.nx,
            precision,
            self.terms.iter().map(|(m, c)| {
                let exps: Vec<u32> = m.0.iter().map(|&e| e / q).collect();
                (Monomial(exps), self.field.frobenius_root(*c, l))
            }),
        ))
    }

    /// Largest l such that the polynomial is a p^l-th power; None when the
    /// jet is zero or constant (then every l works).
    pub fn max_p_power(&self) -> Option<u32> {
        if self.terms.is_empty() || self.degree() == Some(0) {
            return None;
        }
        let mut l = 0;
        while self.p_power_root(l + 1).is_some() {
            l += 1;
        }
        Some(l)
    }

    /// Exact division by the monomial with the given exponent vector.
    /// None when some term is not divisible.
    pub fn div_monomial(&self, exps: &[u32]) -> Option<Poly> {
        assert_eq!(exps.len(), self.nx + 1);
        let mut out = Poly::zero(&self.field, self.nx, self.precision);
        for (m, c) in &self.terms {
            let mut e = Vec::with_capacity(m.0.len());
            for (a, b) in m.0.iter().zip(exps) {
                if a < b {
                    return None;
                }
                e.push(a - b);
            }
            out.terms.insert(Monomial(e), *c);
        }
        Some(out)
    }

    /// A monomial of self that is not divisible by the given monomial.
    pub fn non_divisible_witness(&self, exps: &[u32]) -> Option<Monomial> {
        self.terms
            .keys()
            .find(|m| m.0.iter().zip(exps).any(|(a, b)| a < b))
            .cloned()
    }

    /// Formal substitution: images[slot] replaces variable slot. The result
    /// is truncated to the propagated precision; an error is raised when the
    /// precision budget collapses to zero.
    pub fn substitute(&self, images: &[Poly]) -> Result<Poly> {
        assert_eq!(images.len(), self.nx + 1);
        let nx = images[0].nx;
        // Budget for the truncated tail of self under the substitution.
        let cap = if self.precision == EXACT {
            EXACT
        } else {
            let min_ord = images.iter().map(|g| g.ord_or_prec()).min().unwrap_or(0);
            let cap = (self.precision as u64).saturating_mul(min_ord as u64);
            if cap == 0 {
                return Err(Error::PrecisionUnderflow(format!(
                    "substituting an order-0 image into a jet of precision {}",
                    self.precision
                )));
            }
            cap.min((EXACT - 1) as u64) as u32
        };
        let mut out = Poly::zero(&images[0].field, nx, cap);
        // Iteratively built power tables per variable.
        let mut powers: Vec<Vec<Poly>> = images
            .iter()
            .map(|g| vec![Poly::one(&g.field, nx, EXACT)])
            .collect();
        for (m, c) in &self.terms {
            let mut acc = Poly::constant(&images[0].field, nx, EXACT, *c);
            for (slot, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let table = &mut powers[slot];
                while table.len() <= e as usize {
                    let next = table.last().unwrap().mul(&images[slot]);
                    table.push(next);
                }
                acc = acc.mul(&table[e as usize]);
            }
            out = out.add(&acc);
        }
        let p = out.precision.min(cap);
        Ok(out.with_precision(p))
    }

    /// Identity substitution images for a ring with the same shape.
    pub fn identity_images(field: &Arc<Field>, nx: usize, precision: u32) -> Vec<Poly> {
        (0..=nx).map(|s| Poly::var(field, nx, precision, s)).collect()
    }

    /// Multiplicative inverse as a jet of the given precision; the constant
    /// term must be a unit. Solved degree by degree.
    pub fn inverse_jet(&self, precision: u32) -> Result<Poly> {
        let c0 = self.coefficient(&vec![0; self.nx + 1]);
        if c0 == 0 {
            return Err(Error::ZeroInverse);
        }
        let c0_inv = self.field.inv(c0)?;
        let mut inv = Poly::constant(&self.field, self.nx, precision, c0_inv);
        // g_d = -c0^{-1} * sum_{k=1..d} f_k g_{d-k}
        for d in 1..precision {
            let mut conv = Poly::zero(&self.field, self.nx, EXACT);
            for k in 1..=d {
                let fk = self.homogeneous_component(k);
                if fk.is_zero() {
                    continue;
                }
                let g = inv.homogeneous_component(d - k);
                conv = conv.add(&fk.mul(&g));
            }
            let gd = conv.homogeneous_component(d).mul_scalar(self.field.neg(c0_inv));
            inv = inv.add(&gd.with_precision(precision));
        }
        Ok(inv.with_precision(precision))
    }

    /// Renders the polynomial in the textual grammar.
    pub fn to_grammar(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (m, c) in self.terms.iter().rev() {
            let mut factors: Vec<String> = Vec::new();
            let coeff = self.field.format_scalar(*c);
            let has_vars = m.degree() > 0;
            if !has_vars || *c != 1 {
                if coeff.contains('+') {
                    factors.push(format!("({coeff})"));
                } else {
                    factors.push(coeff);
                }
            }
            for (slot, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let name = if slot == 0 {
                    "z".to_string()
                } else {
                    format!("x{slot}")
                };
                if e == 1 {
                    factors.push(name);
                } else {
                    factors.push(format!("{name}^{e}"));
                }
            }
            parts.push(factors.join("*"));
        }
        parts.join(" + ")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_grammar())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.precision == EXACT {
            write!(f, "{}", self.to_grammar())
        } else {
            write!(f, "{} (prec {})", self.to_grammar(), self.precision)
        }
    }
}

// ------------------------------ parsing ------------------------------

/// Parse a polynomial in the textual grammar: terms joined by `+` (or `-`),
/// a term being an optional coefficient followed by `*`-separated powers
/// `z^i`, `x1^j`, ...; whitespace insignificant.
pub fn parse_poly(field: &Arc<Field>, nx: usize, precision: u32, input: &str) -> Result<Poly> {
    let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty polynomial".into(),
        });
    }
    let mut out = Poly::zero(field, nx, precision);
    for (sign, term) in split_signed_terms(&s)? {
        let (m, c) = parse_term(field, nx, term)?;
        let c = if sign { field.neg(c) } else { c };
        out.add_term(m, c);
    }
    Ok(out)
}

/// Split at top-level + and -, keeping the sign (true = negative).
fn split_signed_terms(s: &str) -> Result<Vec<(bool, &str)>> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut sign = false;
    let mut i = 0usize;
    if bytes[0] == b'+' || bytes[0] == b'-' {
        sign = bytes[0] == b'-';
        start = 1;
        i = 1;
    }
    while i < bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => {
                depth = depth.checked_sub(1).ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: "unbalanced parentheses".into(),
                })?
            }
            b'+' | b'-' if depth == 0 && i > start => {
                out.push((sign, &s[start..i]));
                sign = bytes[i] == b'-';
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    if depth != 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "unbalanced parentheses".into(),
        });
    }
    if start >= s.len() {
        return Err(Error::Parse {
            line: 0,
            msg: "dangling sign".into(),
        });
    }
    out.push((sign, &s[start..]));
    Ok(out)
}

fn parse_term(field: &Arc<Field>, nx: usize, term: &str) -> Result<(Monomial, Scalar)> {
    let mut exps = vec![0u32; nx + 1];
    let mut coeff: Scalar = 1;
    for factor in split_top_level(term, b'*') {
        if factor.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("empty factor in term '{term}'"),
            });
        }
        let b = factor.as_bytes()[0];
        match b {
            b'z' | b'x' => {
                let (slot, exp) = parse_var_power(factor, nx)?;
                exps[slot] += exp;
            }
            b'(' => {
                let inner = &factor[1..factor.len() - 1];
                coeff = field.mul(coeff, parse_scalar_expr(field, inner)?);
            }
            _ => {
                coeff = field.mul(coeff, parse_scalar_expr(field, factor)?);
            }
        }
    }
    Ok((Monomial(exps), coeff))
}

fn split_top_level(s: &str, sep: u8) -> Vec<&str> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            _ if b == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_var_power(factor: &str, nx: usize) -> Result<(usize, u32)> {
    let (name, exp) = match factor.split_once('^') {
        Some((n, e)) => {
            let e: u32 = e.parse().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("bad exponent in '{factor}'"),
            })?;
            (n, e)
        }
        None => (factor, 1),
    };
    if name == "z" {
        return Ok((0, exp));
    }
    let idx: usize = name
        .strip_prefix('x')
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("unknown variable '{name}'"),
        })?;
    if idx == 0 || idx > nx {
        return Err(Error::Parse {
            line: 0,
            msg: format!("variable x{idx} outside 1..={nx}"),
        });
    }
    Ok((idx, exp))
}

/// Parse a scalar expression: sums of products of integers and powers of
/// the extension generator `a`, e.g. `2`, `a`, `a^2+a+1`, `2*a+1`.
pub fn parse_scalar_expr(field: &Arc<Field>, s: &str) -> Result<Scalar> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty coefficient".into(),
        });
    }
    let s = if s.starts_with('(') && s.ends_with(')') {
        s[1..s.len() - 1].to_string()
    } else {
        s
    };
    let mut acc = field.zero();
    for (sign, term) in split_signed_terms(&s)? {
        let mut val = field.one();
        for factor in split_top_level(term, b'*') {
            let v = if factor == "a" {
                field.generator()
            } else if let Some(e) = factor.strip_prefix("a^") {
                let e: u64 = e.parse().map_err(|_| Error::Parse {
                    line: 0,
                    msg: format!("bad exponent in '{factor}'"),
                })?;
                field.pow(field.generator(), e)
            } else {
                let n: i64 = factor.parse().map_err(|_| Error::Parse {
                    line: 0,
                    msg: format!("bad coefficient '{factor}'"),
                })?;
                field.embed_int(n)
            };
            val = field.mul(val, v);
        }
        if sign {
            val = field.neg(val);
        }
        acc = field.add(acc, val);
    }
    Ok(acc)
}
