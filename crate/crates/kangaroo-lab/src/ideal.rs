//! Ideals as generator lists, plain and weighted orders, orders along
//! coordinate primes, initial forms and z-regularity.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::poly::{Monomial, Poly, EXACT};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::sync::Arc;

pub type Rat = Ratio<i64>;

/// Order of an element or ideal. `Infinite` means zero up to the carried
/// precision; whether that is a genuine infinity cannot be decided on jets.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OrderVal {
    Finite(u32),
    Infinite,
}

impl OrderVal {
    pub fn finite(self) -> Option<u32> {
        match self {
            OrderVal::Finite(v) => Some(v),
            OrderVal::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, OrderVal::Infinite)
    }
}

impl std::fmt::Display for OrderVal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderVal::Finite(v) => write!(f, "{v}"),
            OrderVal::Infinite => write!(f, "inf"),
        }
    }
}

/// A coordinate prime ideal (z and/or a subset of the x-variables).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordPrime {
    pub include_z: bool,
    pub s: BTreeSet<usize>,
}

impl CoordPrime {
    pub fn new(include_z: bool, s: impl IntoIterator<Item = usize>) -> Result<CoordPrime> {
        let s: BTreeSet<usize> = s.into_iter().collect();
        if !include_z && s.is_empty() {
            return Err(Error::Internal("empty coordinate prime".into()));
        }
        Ok(CoordPrime { include_z, s })
    }

    pub fn selects(&self, slot: usize) -> bool {
        (slot == 0 && self.include_z) || (slot > 0 && self.s.contains(&slot))
    }
}

/// Ideal of the (truncated) power series ring, given by finitely many
/// generators. An empty generator list is the zero ideal (used as the
/// "infinite order" outcome of coefficient-ideal extraction).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ideal {
    gens: Vec<Poly>,
    nx: usize,
}

impl Ideal {
    /// Non-zero generators only; fails on an empty or all-zero list.
    pub fn new(gens: Vec<Poly>) -> Result<Ideal> {
        let nx = gens
            .first()
            .map(|g| g.nx())
            .ok_or_else(|| Error::Internal("ideal needs at least one generator".into()))?;
        let gens: Vec<Poly> = gens.into_iter().filter(|g| !g.is_zero()).collect();
        if gens.is_empty() {
            return Err(Error::Internal("ideal has only zero generators".into()));
        }
        if gens.iter().any(|g| g.nx() != nx) {
            return Err(Error::Internal("mixed variable counts in ideal".into()));
        }
        Ok(Ideal { gens, nx })
    }

    /// The zero ideal marker.
    pub fn zero(nx: usize) -> Ideal {
        Ideal { gens: vec![], nx }
    }

    pub fn from_gens(gens: Vec<Poly>, nx: usize) -> Ideal {
        let gens = gens.into_iter().filter(|g| !g.is_zero()).collect();
        Ideal { gens, nx }
    }

    pub fn gens(&self) -> &[Poly] {
        &self.gens
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn is_zero(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn field(&self) -> Option<&Arc<Field>> {
        self.gens.first().map(|g| g.field())
    }

    /// Shared precision: the minimum over generators.
    pub fn precision(&self) -> u32 {
        self.gens.iter().map(|g| g.precision()).min().unwrap_or(EXACT)
    }

    /// Order of the ideal: minimum over generators (order is generator-
    /// detectable; a valuation floor is realized on any generating set).
    pub fn ord(&self) -> OrderVal {
        match self.gens.iter().filter_map(|g| g.ord()).min() {
            Some(v) => OrderVal::Finite(v),
            None => OrderVal::Infinite,
        }
    }

    /// Order along a coordinate prime: minimum over generators and terms of
    /// the summed exponents of the P-variables.
    pub fn ord_prime(&self, p: &CoordPrime) -> OrderVal {
        match self
            .gens
            .iter()
            .filter_map(|g| g.ord_in(|slot| p.selects(slot)))
            .min()
        {
            Some(v) => OrderVal::Finite(v),
            None => OrderVal::Infinite,
        }
    }

    /// A K-linear combination f of generators that is z-regular of order c
    /// (the pure z^c coefficient f_c(0) is a unit), normalized so that
    /// f_c(0) = 1. Searches single generators, then pairs with coefficients
    /// over the whole field for p^k <= 16 and a fixed seeded sample of 256
    /// pairs otherwise.
    pub fn z_regular_witness(&self, c: u32) -> Option<Poly> {
        let field = self.field()?;
        let mut zc = vec![0u32; self.nx + 1];
        zc[0] = c;
        let unit_coeff = |f: &Poly| f.coefficient(&zc);
        for g in &self.gens {
            let u = unit_coeff(g);
            if u != 0 {
                return Some(g.mul_scalar(field.inv(u).ok()?));
            }
        }
        // Pair search. The pure z^c coefficient is linear in the element, so
        // this pass only matters when scalar cancellations in a future
        // representation could hide a unit; kept for contract completeness.
        let lambdas: Vec<u64> = if field.size() <= 16 {
            field.elements().filter(|&l| l != 0).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x6b616e67);
            (0..256).map(|_| rng.gen_range(1..field.size())).collect()
        };
        for (i, gi) in self.gens.iter().enumerate() {
            for gj in self.gens.iter().skip(i + 1) {
                for &l in &lambdas {
                    let cand = gi.add(&gj.mul_scalar(l));
                    let u = unit_coeff(&cand);
                    if u != 0 {
                        return Some(cand.mul_scalar(field.inv(u).ok()?));
                    }
                }
            }
        }
        None
    }
}

/// z-expansion f = Σ f_i z^i; pairs (i, f_i) with f_i non-zero, over the
/// x-variables only, with precision of f_i equal to precision of f minus i.
pub fn z_expansion(f: &Poly) -> Vec<(u32, Poly)> {
    let max = match f.z_degree() {
        Some(d) => d,
        None => return vec![],
    };
    (0..=max)
        .filter_map(|i| {
            let fi = f.z_coefficient(i);
            if fi.is_zero() {
                None
            } else {
                Some((i, fi))
            }
        })
        .collect()
}

/// Weighted order with respect to the weight vector (w, 1, ..., 1):
/// min over i of w·i + ord f_i. None for the zero jet.
pub fn weighted_ord(f: &Poly, w: Rat) -> Option<Rat> {
    f.terms()
        .map(|(m, _)| term_weight(m, w))
        .min()
}

fn term_weight(m: &Monomial, w: Rat) -> Rat {
    let zi = m.z_exp() as i64;
    let xd = (m.degree() - m.z_exp()) as i64;
    w * Rat::from_integer(zi) + Rat::from_integer(xd)
}

/// Weighted initial form: Σ in(f_i)·z^i over the indices attaining the
/// minimal weighted order. Exact (the involved homogeneous parts are fully
/// known below the precision).
pub fn weighted_initial_form(f: &Poly, w: Rat) -> Poly {
    let min = match weighted_ord(f, w) {
        Some(m) => m,
        None => return Poly::zero(f.field(), f.nx(), f.precision()),
    };
    Poly::from_terms(
        f.field(),
        f.nx(),
        EXACT,
        f.terms()
            .filter(|(m, _)| term_weight(m, w) == min)
            .map(|(m, c)| (m.clone(), *c)),
    )
}

/// Plain initial form as the w = 1 case of the weighted one.
pub fn initial_form(f: &Poly) -> Poly {
    weighted_initial_form(f, Rat::from_integer(1))
}
