//! Arithmetic in the finite field F_{p^k}.
//!
//! Elements are stored as indices in `0..p^k`: the base-p digits of an index
//! are the coefficients of the element with respect to the power basis
//! `1, a, ..., a^{k-1}` of the extension. The representation is canonical, so
//! equality of scalars is equality of indices.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Canonical element index in `0..q`. Digit `j` in base `p` is the
/// coefficient of `a^j`.
pub type Scalar = u64;

/// Largest field size for which multiplication and inversion tables are
/// precomputed. Exhaustive search spaces stay well below this.
const TABLE_LIMIT: u64 = 256;

/// F_{p^k} with a fixed irreducible modulus for k > 1.
pub struct Field {
    p: u64,
    k: u32,
    /// Monic modulus of degree k over F_p, coefficients low-to-high
    /// (length k+1). For k = 1 this is `[0, 1]`, i.e. the polynomial `a`.
    modulus: Vec<u64>,
    q: u64,
    mul_table: Option<Vec<Scalar>>,
    inv_table: Option<Vec<Scalar>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k == 1 {
            write!(f, "F_{}", self.p)
        } else {
            write!(f, "F_{{{}^{}}}", self.p, self.k)
        }
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k && self.modulus == other.modulus
    }
}
impl Eq for Field {}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// --- dense polynomial helpers over F_p (little-endian coefficient vectors) ---

fn fp_trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn fp_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + ai * bj) % p;
        }
    }
    fp_trim(&mut out);
    out
}

/// Remainder of `a` modulo the monic polynomial `m`.
fn fp_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r: Vec<u64> = a.to_vec();
    fp_trim(&mut r);
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = r[r.len() - 1];
        let shift = r.len() - 1 - dm;
        for (j, &mj) in m.iter().enumerate() {
            let idx = j + shift;
            r[idx] = (r[idx] + p * p - (lead * mj) % p) % p;
        }
        fp_trim(&mut r);
    }
    r
}

/// Whether the monic polynomial `m` of degree k is irreducible over F_p,
/// by trial division against all monic polynomials of degree at most k/2.
fn fp_irreducible(m: &[u64], p: u64) -> bool {
    let k = m.len() - 1;
    if k == 0 {
        return false;
    }
    for d in 1..=(k / 2) {
        // enumerate monic polys of degree d: d free coefficients
        let count = p.pow(d as u32);
        for idx in 0..count {
            let mut cand = Vec::with_capacity(d + 1);
            let mut t = idx;
            for _ in 0..d {
                cand.push(t % p);
                t /= p;
            }
            cand.push(1);
            if fp_rem(m, &cand, p).is_empty() {
                return false;
            }
        }
    }
    true
}

impl Field {
    /// The prime field F_p.
    pub fn prime(p: u64) -> Result<Arc<Field>> {
        Field::extension(p, 1, None)
    }

    /// F_{p^k}. For k > 1 a modulus may be given as the low-to-high
    /// coefficient list of a monic degree-k polynomial over F_p; otherwise
    /// the lexicographically first irreducible one is used.
    pub fn extension(p: u64, k: u32, modulus: Option<Vec<u64>>) -> Result<Arc<Field>> {
        if !is_prime(p) {
            return Err(Error::InvalidField(format!("{p} is not prime")));
        }
        if k < 1 {
            return Err(Error::InvalidField("extension degree must be >= 1".into()));
        }
        let q = p
            .checked_pow(k)
            .filter(|&q| q < (1u64 << 40))
            .ok_or_else(|| Error::InvalidField("field too large".into()))?;
        let modulus = match modulus {
            Some(mut m) => {
                for c in m.iter_mut() {
                    *c %= p;
                }
                if m.len() != k as usize + 1 || m[k as usize] != 1 {
                    return Err(Error::InvalidField(format!(
                        "modulus must be monic of degree {k}"
                    )));
                }
                if k > 1 && !fp_irreducible(&m, p) {
                    return Err(Error::InvalidField("modulus is reducible".into()));
                }
                m
            }
            None => {
                if k == 1 {
                    vec![0, 1]
                } else {
                    Self::find_modulus(p, k)?
                }
            }
        };
        let mut field = Field {
            p,
            k,
            modulus,
            q,
            mul_table: None,
            inv_table: None,
        };
        if q <= TABLE_LIMIT {
            let mut mul = vec![0u64; (q * q) as usize];
            for a in 0..q {
                for b in 0..=a {
                    let v = field.mul_raw(a, b);
                    mul[(a * q + b) as usize] = v;
                    mul[(b * q + a) as usize] = v;
                }
            }
            field.mul_table = Some(mul);
            let mut inv = vec![0u64; q as usize];
            for a in 1..q {
                inv[a as usize] = field.pow(a, q - 2);
            }
            field.inv_table = Some(inv);
        }
        Ok(Arc::new(field))
    }

    fn find_modulus(p: u64, k: u32) -> Result<Vec<u64>> {
        let count = p.pow(k);
        for idx in 0..count {
            let mut m = Vec::with_capacity(k as usize + 1);
            let mut t = idx;
            for _ in 0..k {
                m.push(t % p);
                t /= p;
            }
            m.push(1);
            if fp_irreducible(&m, p) {
                return Ok(m);
            }
        }
        Err(Error::InvalidField(format!(
            "no irreducible modulus of degree {k} over F_{p}"
        )))
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    /// Field cardinality p^k.
    pub fn size(&self) -> u64 {
        self.q
    }
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    fn decode(&self, a: Scalar) -> Vec<u64> {
        let mut v = Vec::with_capacity(self.k as usize);
        let mut t = a;
        for _ in 0..self.k {
            v.push(t % self.p);
            t /= self.p;
        }
        fp_trim(&mut v);
        v
    }

    fn encode(&self, v: &[u64]) -> Scalar {
        let mut out = 0u64;
        for &c in v.iter().rev() {
            out = out * self.p + c;
        }
        out
    }

    pub fn zero(&self) -> Scalar {
        0
    }
    pub fn one(&self) -> Scalar {
        1
    }

    /// The extension generator `a` (only meaningful for k > 1).
    pub fn generator(&self) -> Scalar {
        self.p
    }

    /// Embed an integer residue (canonical image of Z in the prime field).
    pub fn embed_int(&self, n: i64) -> Scalar {
        let p = self.p as i64;
        (n.rem_euclid(p)) as Scalar
    }

    pub fn add(&self, a: Scalar, b: Scalar) -> Scalar {
        debug_assert!(a < self.q && b < self.q);
        // digit-wise addition mod p
        let mut out = 0u64;
        let mut mult = 1u64;
        let (mut a, mut b) = (a, b);
        for _ in 0..self.k {
            out += ((a % self.p + b % self.p) % self.p) * mult;
            a /= self.p;
            b /= self.p;
            mult *= self.p;
        }
        out
    }

    pub fn neg(&self, a: Scalar) -> Scalar {
        let mut out = 0u64;
        let mut mult = 1u64;
        let mut a = a;
        for _ in 0..self.k {
            out += ((self.p - a % self.p) % self.p) * mult;
            a /= self.p;
            mult *= self.p;
        }
        out
    }

    pub fn sub(&self, a: Scalar, b: Scalar) -> Scalar {
        self.add(a, self.neg(b))
    }

    fn mul_raw(&self, a: Scalar, b: Scalar) -> Scalar {
        let prod = fp_mul(&self.decode(a), &self.decode(b), self.p);
        self.encode(&fp_rem(&prod, &self.modulus, self.p))
    }

    pub fn mul(&self, a: Scalar, b: Scalar) -> Scalar {
        debug_assert!(a < self.q && b < self.q);
        match &self.mul_table {
            Some(t) => t[(a * self.q + b) as usize],
            None => self.mul_raw(a, b),
        }
    }

    pub fn pow(&self, a: Scalar, mut e: u64) -> Scalar {
        let mut base = a;
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: Scalar) -> Result<Scalar> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(match &self.inv_table {
            Some(t) => t[a as usize],
            None => self.pow(a, self.q - 2),
        })
    }

    /// Frobenius a -> a^p.
    pub fn frobenius(&self, a: Scalar) -> Scalar {
        self.pow(a, self.p)
    }

    /// The unique b with b^{p^e} = a. Frobenius is bijective on a finite
    /// field, so the root always exists: one inverse-Frobenius application
    /// is a -> a^{p^{k-1}}.
    pub fn frobenius_root(&self, a: Scalar, e: u32) -> Scalar {
        let mut out = a;
        for _ in 0..(e % self.k.max(1)) {
            out = self.pow(out, self.p.pow(self.k - 1));
        }
        out
    }

    /// Iterator over all field elements.
    pub fn elements(&self) -> impl Iterator<Item = Scalar> {
        0..self.q
    }

    /// Render a scalar in the polynomial grammar. Sums come back without
    /// parentheses; the polynomial printer adds them where needed.
    pub fn format_scalar(&self, a: Scalar) -> String {
        if self.k == 1 || a < self.p {
            return a.to_string();
        }
        let digits = self.decode(a);
        let mut parts = Vec::new();
        for (j, &c) in digits.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let var = match j {
                0 => c.to_string(),
                1 => {
                    if c == 1 {
                        "a".to_string()
                    } else {
                        format!("{c}*a")
                    }
                }
                _ => {
                    if c == 1 {
                        format!("a^{j}")
                    } else {
                        format!("{c}*a^{j}")
                    }
                }
            };
            parts.push(var);
        }
        parts.join("+")
    }
}

/// Binomial coefficient C(top, bottom) mod p, digit-wise in base p
/// (Lucas' theorem). Returns 0 when bottom > top.
pub fn lucas_binom(top: u64, bottom: u64, p: u64) -> u64 {
    if bottom > top {
        return 0;
    }
    let (mut t, mut b) = (top, bottom);
    let mut acc = 1u64;
    while b > 0 || t > 0 {
        let (td, bd) = (t % p, b % p);
        if bd > td {
            return 0;
        }
        acc = (acc * small_binom_mod(td, bd, p)) % p;
        t /= p;
        b /= p;
    }
    acc
}

/// C(a, b) mod p for digits a, b < p.
fn small_binom_mod(a: u64, b: u64, p: u64) -> u64 {
    let b = b.min(a - b);
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 0..b {
        num *= (a - i) as u128;
        den *= (i + 1) as u128;
    }
    // den divides num exactly; reduce afterwards
    ((num / den) % p as u128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f2_add() {
        let f = Field::prime(2).unwrap();
        assert_eq!(f.add(1, 1), 0);
    }

    #[test]
    fn f4_mul_generator() {
        // F_4 = F_2[a]/(a^2+a+1): a * a = a + 1
        let f = Field::extension(2, 2, Some(vec![1, 1, 1])).unwrap();
        let a = f.generator();
        assert_eq!(f.mul(a, a), f.add(a, 1));
    }

    #[test]
    fn f3_invert() {
        let f = Field::prime(3).unwrap();
        assert_eq!(f.inv(2).unwrap(), 2);
        assert!(f.inv(0).is_err());
    }

    #[test]
    fn frobenius_root_examples() {
        let f2 = Field::prime(2).unwrap();
        assert_eq!(f2.frobenius_root(1, 3), 1);

        let f4 = Field::extension(2, 2, Some(vec![1, 1, 1])).unwrap();
        let a = f4.generator();
        let r = f4.frobenius_root(a, 1);
        // (a+1)^2 = a^2 + 1 = a
        assert_eq!(r, f4.add(a, 1));
        assert_eq!(f4.mul(r, r), a);

        let f3 = Field::prime(3).unwrap();
        assert_eq!(f3.frobenius_root(2, 1), 2);
    }

    #[test]
    fn frobenius_root_roundtrip_all() {
        for (p, k) in [(2, 1), (2, 2), (3, 1), (2, 3), (3, 2), (5, 1)] {
            let f = Field::extension(p, k, None).unwrap();
            for e in 1..=3u32 {
                for a in f.elements() {
                    let mut v = f.frobenius_root(a, e);
                    for _ in 0..e {
                        v = f.frobenius(v);
                    }
                    assert_eq!(v, a, "p={p} k={k} e={e} a={a}");
                }
            }
        }
    }

    #[test]
    fn lucas_examples() {
        assert_eq!(lucas_binom(5, 2, 2), 0);
        assert_eq!(lucas_binom(4, 2, 2), 0);
        assert_eq!(lucas_binom(5, 1, 2), 1);
        assert_eq!(lucas_binom(2, 5, 3), 0);
    }

    #[test]
    fn lucas_top_p_power_factor() {
        // C(m*p^e, p^e) ≡ m (mod p) when gcd(m, p) = 1
        for p in [2u64, 3, 5] {
            for c in 1..=64u64 {
                for e in 0..4u32 {
                    let pe = p.pow(e);
                    if c % pe == 0 && (c / pe) % p != 0 {
                        let m = c / pe;
                        assert_eq!(lucas_binom(c, pe, p), m % p, "c={c} p={p} e={e}");
                    }
                }
            }
        }
    }

    #[test]
    fn lucas_matches_bigint_binomial() {
        use num_bigint::BigUint;
        use num_traits::ToPrimitive;
        // full Pascal triangle in exact big integers, reduced mod p
        for p in [2u64, 3, 5, 7] {
            let mut row = vec![BigUint::from(1u32)];
            for top in 0..=200u64 {
                for (bottom, v) in row.iter().enumerate() {
                    let expect = (v % p).to_u64().unwrap();
                    assert_eq!(
                        lucas_binom(top, bottom as u64, p),
                        expect,
                        "C({top},{bottom}) mod {p}"
                    );
                }
                let mut next = vec![BigUint::from(1u32)];
                for w in row.windows(2) {
                    next.push(&w[0] + &w[1]);
                }
                next.push(BigUint::from(1u32));
                row = next;
            }
        }
    }

    #[test]
    fn field_axioms_small() {
        for (p, k) in [(2u64, 2u32), (3, 1), (2, 3)] {
            let f = Field::extension(p, k, None).unwrap();
            for a in f.elements() {
                for b in f.elements() {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.add(a, f.neg(a)), 0);
                    if a != 0 {
                        assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                    }
                    for c in f.elements() {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(Field::prime(4).is_err());
        // a^2 + 1 = (a+1)^2 over F_2 is reducible
        assert!(Field::extension(2, 2, Some(vec![1, 0, 1])).is_err());
    }
}
