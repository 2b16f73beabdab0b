//! Multivariate Laurent polynomials in the fixed variable set `{t, u, v, w}`
//! with half-integer exponents and exact `BigInt` coefficients.
//!
//! Exponents are stored doubled (`twice`), so `t^{1/2}` has a stored exponent
//! of `1` and `t^2` a stored exponent of `4`. Exponent arithmetic never
//! rounds. Polynomials are kept in canonical form: zero coefficients are
//! never stored, and equality is term-map equality.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

/// The four variables every polynomial in this crate lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    U,
    V,
    W,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::T, Var::U, Var::V, Var::W];

    pub fn index(self) -> usize {
        match self {
            Var::T => 0,
            Var::U => 1,
            Var::V => 2,
            Var::W => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::U => "u",
            Var::V => "v",
            Var::W => "w",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        match s {
            "t" => Some(Var::T),
            "u" => Some(Var::U),
            "v" => Some(Var::V),
            "w" => Some(Var::W),
            _ => None,
        }
    }
}

/// A half-integer exponent, stored as twice its value so that `t^{1/2}` is
/// exact. `HalfExp { twice: 3 }` is the exponent 3/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfExp {
    pub twice: i32,
}

impl HalfExp {
    pub fn int(k: i32) -> HalfExp {
        HalfExp { twice: 2 * k }
    }

    pub fn half(twice: i32) -> HalfExp {
        HalfExp { twice }
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// Renders in lowest form: `2`, `-1`, `3/2`, `-1/2`.
    pub fn lowest_form(self) -> String {
        if self.twice % 2 == 0 {
            format!("{}", self.twice / 2)
        } else {
            format!("{}/2", self.twice)
        }
    }

    pub fn parse(s: &str) -> Option<HalfExp> {
        if let Some(num) = s.strip_suffix("/2") {
            num.trim().parse::<i32>().ok().map(|n| HalfExp { twice: n })
        } else {
            s.trim().parse::<i32>().ok().map(HalfExp::int)
        }
    }
}

impl std::ops::Add for HalfExp {
    type Output = HalfExp;
    fn add(self, rhs: HalfExp) -> HalfExp {
        HalfExp { twice: self.twice + rhs.twice }
    }
}

impl std::ops::Neg for HalfExp {
    type Output = HalfExp;
    fn neg(self) -> HalfExp {
        HalfExp { twice: -self.twice }
    }
}

impl fmt::Display for HalfExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.lowest_form())
    }
}

/// Doubled exponents for (t, u, v, w), in that order.
pub type ExpVec = [i32; 4];

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LaurentError {
    #[error("substitution image for {var} is not ± a single monomial")]
    NonMonomialImage { var: &'static str },
    #[error("substitution would need a fractional power of -1 for {var}")]
    SignedHalfPower { var: &'static str },
    #[error("substitution result has a non-half-integer exponent (from {var})")]
    FractionalExponent { var: &'static str },
    #[error("polynomial is not univariate in {var}")]
    NotUnivariate { var: &'static str },
    #[error("polynomial is not constant")]
    NotConstant,
    #[error("cannot set {var} to zero: a negative power of it occurs")]
    NegativePower { var: &'static str },
    #[error("malformed polynomial JSON: {0}")]
    Json(String),
}

/// A Laurent polynomial over ℤ in t, u, v, w with half-integer exponents.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LaurentPoly {
    terms: BTreeMap<ExpVec, BigInt>,
}

impl LaurentPoly {
    pub fn zero() -> LaurentPoly {
        LaurentPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> LaurentPoly {
        LaurentPoly::constant(BigInt::one())
    }

    pub fn constant<C: Into<BigInt>>(c: C) -> LaurentPoly {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert([0; 4], c);
        }
        LaurentPoly { terms }
    }

    /// A single term with doubled exponents `exps` and coefficient `c`.
    pub fn monomial<C: Into<BigInt>>(exps: ExpVec, c: C) -> LaurentPoly {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        LaurentPoly { terms }
    }

    /// `var^e` for a half-integer exponent.
    pub fn var_pow(var: Var, e: HalfExp) -> LaurentPoly {
        let mut exps = [0; 4];
        exps[var.index()] = e.twice;
        LaurentPoly::monomial(exps, 1)
    }

    pub fn var(var: Var) -> LaurentPoly {
        LaurentPoly::var_pow(var, HalfExp::int(1))
    }

    /// `t^{twice/2}`.
    pub fn t_half_pow(twice: i32) -> LaurentPoly {
        LaurentPoly::var_pow(Var::T, HalfExp::half(twice))
    }

    /// `(uv)^{twice/2}` — the product monomial used by mixed polynomials.
    pub fn uv_half_pow(twice: i32) -> LaurentPoly {
        LaurentPoly::monomial([0, twice, twice, 0], 1)
    }

    /// `q = t^{1/2} - t^{-1/2}`.
    pub fn q() -> LaurentPoly {
        LaurentPoly::t_half_pow(1) - LaurentPoly::t_half_pow(-1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&[0; 4]).is_some_and(|c| c.is_one())
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient at the given doubled exponent vector (zero if absent).
    pub fn coeff(&self, exps: ExpVec) -> BigInt {
        self.terms.get(&exps).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Coefficient of `var^k` (integer power) in a univariate-minded read:
    /// all other exponents zero.
    pub fn coeff_int(&self, var: Var, k: i32) -> BigInt {
        let mut exps = [0; 4];
        exps[var.index()] = 2 * k;
        self.coeff(exps)
    }

    /// Iterates terms in lexicographic exponent order (deterministic).
    pub fn terms(&self) -> impl Iterator<Item = (&ExpVec, &BigInt)> {
        self.terms.iter()
    }

    fn insert_add(terms: &mut BTreeMap<ExpVec, BigInt>, exps: ExpVec, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn negate(&self) -> LaurentPoly {
        LaurentPoly { terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect() }
    }

    pub fn scale<C: Into<BigInt>>(&self, c: C) -> LaurentPoly {
        let c = c.into();
        if c.is_zero() {
            return LaurentPoly::zero();
        }
        LaurentPoly { terms: self.terms.iter().map(|(e, k)| (*e, k * &c)).collect() }
    }

    /// Multiplies by a single monomial given as doubled exponents.
    pub fn mul_monomial(&self, shift: ExpVec) -> LaurentPoly {
        LaurentPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut f = *e;
                    for i in 0..4 {
                        f[i] += shift[i];
                    }
                    (f, c.clone())
                })
                .collect(),
        }
    }

    pub fn pow(&self, n: usize) -> LaurentPoly {
        let mut acc = LaurentPoly::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// The bar involution: every exponent vector negated.
    pub fn involute(&self) -> LaurentPoly {
        LaurentPoly {
            terms: self.terms.iter().map(|(e, c)| ([-e[0], -e[1], -e[2], -e[3]], c.clone())).collect(),
        }
    }

    /// Applies a monomial substitution. Ring homomorphism; rejects images
    /// that would produce fractional exponents or half-powers of -1.
    pub fn substitute(&self, map: &SubstMap) -> Result<LaurentPoly, LaurentError> {
        let mut terms = BTreeMap::new();
        for (exps, c) in &self.terms {
            let mut out = [0i64; 4];
            let mut coef = c.clone();
            for var in Var::ALL {
                let a = exps[var.index()]; // doubled power of this variable
                if a == 0 {
                    continue;
                }
                let image = &map.images[var.index()];
                if image.negated {
                    // (-m)^{a/2}: needs a/2 ∈ ℤ
                    if a % 2 != 0 {
                        return Err(LaurentError::SignedHalfPower { var: var.name() });
                    }
                    if (a / 2) % 2 != 0 {
                        coef = -coef;
                    }
                }
                for j in 0..4 {
                    let prod = a as i64 * image.exps[j] as i64;
                    if prod % 2 != 0 {
                        return Err(LaurentError::FractionalExponent { var: var.name() });
                    }
                    out[j] += prod / 2;
                }
            }
            let mut exps_out = [0i32; 4];
            for j in 0..4 {
                exps_out[j] = i32::try_from(out[j]).expect("exponent overflow");
            }
            Self::insert_add(&mut terms, exps_out, coef);
        }
        Ok(LaurentPoly { terms })
    }

    /// True when every term uses only `var` (constants allowed).
    pub fn is_univariate_in(&self, var: Var) -> bool {
        self.terms.keys().all(|e| {
            Var::ALL
                .iter()
                .all(|&o| o == var || e[o.index()] == 0)
        })
    }

    /// Largest doubled exponent of `var`, or None for the zero polynomial.
    pub fn max_exp(&self, var: Var) -> Option<HalfExp> {
        self.terms.keys().map(|e| e[var.index()]).max().map(HalfExp::half)
    }

    pub fn min_exp(&self, var: Var) -> Option<HalfExp> {
        self.terms.keys().map(|e| e[var.index()]).min().map(HalfExp::half)
    }

    /// Sum of doubled exponents per term, maximized — the combined degree
    /// used for top-slice extraction. None for zero.
    pub fn max_combined_exp(&self) -> Option<HalfExp> {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<i32>())
            .max()
            .map(HalfExp::half)
    }

    /// Keeps only the terms whose (doubled) exponent vector satisfies `pred`.
    pub fn filter_terms(&self, pred: impl Fn(&ExpVec) -> bool) -> LaurentPoly {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| pred(e))
            .map(|(e, c)| (*e, c.clone()))
            .collect();
        LaurentPoly { terms }
    }

    /// The coefficient of `var^e` as a polynomial in the remaining variables.
    pub fn coeff_slice(&self, var: Var, e: HalfExp) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (exps, c) in &self.terms {
            if exps[var.index()] == e.twice {
                let mut rest = *exps;
                rest[var.index()] = 0;
                out += LaurentPoly::monomial(rest, c.clone());
            }
        }
        out
    }

    /// Evaluates `var` at zero: drops every term containing a positive power
    /// of it. Fails if a negative power occurs, since that has no value at 0.
    pub fn eval_var_zero(&self, var: Var) -> Result<LaurentPoly, LaurentError> {
        if self.terms.keys().any(|e| e[var.index()] < 0) {
            return Err(LaurentError::NegativePower { var: var.name() });
        }
        Ok(self.filter_terms(|e| e[var.index()] == 0))
    }

    /// The constant value of a constant polynomial.
    pub fn constant_value(&self) -> Result<BigInt, LaurentError> {
        match self.terms.len() {
            0 => Ok(BigInt::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                if *e == [0; 4] {
                    Ok(c.clone())
                } else {
                    Err(LaurentError::NotConstant)
                }
            }
            _ => Err(LaurentError::NotConstant),
        }
    }

    /// Evaluates by sending every variable to 1.
    pub fn eval_all_ones(&self) -> BigInt {
        self.terms.values().sum()
    }

    /// Extracts the univariate coefficient sequence of `var`.
    pub fn profile(&self, var: Var) -> Result<CoeffProfile, LaurentError> {
        if !self.is_univariate_in(var) {
            return Err(LaurentError::NotUnivariate { var: var.name() });
        }
        if self.terms.is_empty() {
            return Ok(CoeffProfile { min: HalfExp::int(0), step: HalfExp::int(1), coeffs: vec![] });
        }
        let exps: Vec<i32> = self.terms.keys().map(|e| e[var.index()]).collect();
        let min2 = *exps.iter().min().unwrap();
        let max2 = *exps.iter().max().unwrap();
        // Use integer steps when the support allows it, half steps otherwise.
        let step2 = if exps.iter().all(|e| (e - min2) % 2 == 0) { 2 } else { 1 };
        let len = ((max2 - min2) / step2 + 1) as usize;
        let mut coeffs = vec![BigInt::zero(); len];
        for (e, c) in &self.terms {
            let idx = ((e[var.index()] - min2) / step2) as usize;
            coeffs[idx] = c.clone();
        }
        Ok(CoeffProfile { min: HalfExp::half(min2), step: HalfExp::half(step2), coeffs })
    }

    /// Deterministic JSON: terms in lexicographic exponent order, exponents
    /// in lowest form, coefficients as decimal strings.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut exp = serde_json::Map::new();
                for var in Var::ALL {
                    let k = e[var.index()];
                    if k != 0 {
                        exp.insert(var.name().to_string(), Value::String(HalfExp::half(k).lowest_form()));
                    }
                }
                json!({ "coef": c.to_string(), "exp": Value::Object(exp) })
            })
            .collect();
        json!({ "terms": terms })
    }

    pub fn from_json(value: &Value) -> Result<LaurentPoly, LaurentError> {
        let terms = value
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| LaurentError::Json("missing \"terms\" array".into()))?;
        let mut out = BTreeMap::new();
        for term in terms {
            let coef = term
                .get("coef")
                .and_then(Value::as_str)
                .ok_or_else(|| LaurentError::Json("term without string \"coef\"".into()))?;
            let coef: BigInt = coef
                .parse()
                .map_err(|_| LaurentError::Json(format!("bad coefficient {coef:?}")))?;
            let mut exps = [0i32; 4];
            if let Some(exp) = term.get("exp") {
                let exp = exp
                    .as_object()
                    .ok_or_else(|| LaurentError::Json("\"exp\" is not an object".into()))?;
                for (name, val) in exp {
                    let var = Var::from_name(name)
                        .ok_or_else(|| LaurentError::Json(format!("unknown variable {name:?}")))?;
                    let s = val
                        .as_str()
                        .ok_or_else(|| LaurentError::Json("exponent is not a string".into()))?;
                    let h = HalfExp::parse(s)
                        .ok_or_else(|| LaurentError::Json(format!("bad exponent {s:?}")))?;
                    exps[var.index()] = h.twice;
                }
            }
            Self::insert_add(&mut out, exps, coef);
        }
        Ok(LaurentPoly { terms: out })
    }
}

/// Substitution target: ± a single monomial per variable.
#[derive(Clone, Copy, Debug)]
pub struct MonomialImage {
    pub negated: bool,
    /// Doubled exponents of the image monomial.
    pub exps: ExpVec,
}

impl MonomialImage {
    pub fn of_var(var: Var) -> MonomialImage {
        let mut exps = [0; 4];
        exps[var.index()] = 2;
        MonomialImage { negated: false, exps }
    }

    pub fn one() -> MonomialImage {
        MonomialImage { negated: false, exps: [0; 4] }
    }

    /// Builds from integer powers of the variables, e.g. `&[(U,1),(V,-1)]`
    /// for uv⁻¹.
    pub fn product(powers: &[(Var, i32)]) -> MonomialImage {
        let mut exps = [0; 4];
        for &(var, k) in powers {
            exps[var.index()] += 2 * k;
        }
        MonomialImage { negated: false, exps }
    }

    pub fn negate(mut self) -> MonomialImage {
        self.negated = !self.negated;
        self
    }
}

/// A per-variable monomial substitution; variables not remapped stay fixed.
#[derive(Clone, Copy, Debug)]
pub struct SubstMap {
    images: [MonomialImage; 4],
}

impl SubstMap {
    pub fn identity() -> SubstMap {
        SubstMap {
            images: [
                MonomialImage::of_var(Var::T),
                MonomialImage::of_var(Var::U),
                MonomialImage::of_var(Var::V),
                MonomialImage::of_var(Var::W),
            ],
        }
    }

    pub fn map_var(mut self, var: Var, image: MonomialImage) -> SubstMap {
        self.images[var.index()] = image;
        self
    }

    /// t ↦ uv.
    pub fn t_to_uv() -> SubstMap {
        SubstMap::identity().map_var(Var::T, MonomialImage::product(&[(Var::U, 1), (Var::V, 1)]))
    }

    /// t ↦ uv⁻¹.
    pub fn t_to_u_over_v() -> SubstMap {
        SubstMap::identity().map_var(Var::T, MonomialImage::product(&[(Var::U, 1), (Var::V, -1)]))
    }

    /// t ↦ uvw².
    pub fn t_to_uvw2() -> SubstMap {
        SubstMap::identity().map_var(
            Var::T,
            MonomialImage::product(&[(Var::U, 1), (Var::V, 1), (Var::W, 2)]),
        )
    }

    /// u ↔ v.
    pub fn swap_uv() -> SubstMap {
        SubstMap::identity()
            .map_var(Var::U, MonomialImage::of_var(Var::V))
            .map_var(Var::V, MonomialImage::of_var(Var::U))
    }

    /// var ↦ 1.
    pub fn to_one(var: Var) -> SubstMap {
        SubstMap::identity().map_var(var, MonomialImage::one())
    }
}

/// The coefficient sequence of a univariate restriction, on the coarsest
/// exponent grid that carries the support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffProfile {
    pub min: HalfExp,
    pub step: HalfExp,
    pub coeffs: Vec<BigInt>,
}

impl CoeffProfile {
    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_negative())
    }

    /// Symmetry about a half-integer center: the coefficient at center+j
    /// equals the one at center−j for every j.
    pub fn is_symmetric(&self, center: HalfExp) -> bool {
        if self.coeffs.is_empty() {
            return true;
        }
        let min2 = self.min.twice;
        let max2 = min2 + self.step.twice * (self.coeffs.len() as i32 - 1);
        // Mirror of a doubled exponent e about the center is 2*center - e.
        if 2 * center.twice != min2 + max2 {
            // An asymmetric support can still be symmetric only if the
            // extreme coefficients vanish — they never do (canonical form).
            return false;
        }
        let n = self.coeffs.len();
        (0..n).all(|i| self.coeffs[i] == self.coeffs[n - 1 - i])
    }

    /// The midpoint of the support, doubled; symmetry is usually tested there.
    pub fn support_center(&self) -> HalfExp {
        if self.coeffs.is_empty() {
            return HalfExp::int(0);
        }
        let min2 = self.min.twice;
        let max2 = min2 + self.step.twice * (self.coeffs.len() as i32 - 1);
        // (min+max)/2 doubled is (min2+max2)/2; keep exactness by storing
        // the doubled value only when it is integral, else fall back to the
        // raw sum (callers compare via is_symmetric, which re-doubles).
        HalfExp::half((min2 + max2) / 2)
    }

    /// Weakly rises then weakly falls.
    pub fn is_unimodal(&self) -> bool {
        let mut i = 0;
        let n = self.coeffs.len();
        while i + 1 < n && self.coeffs[i] <= self.coeffs[i + 1] {
            i += 1;
        }
        while i + 1 < n && self.coeffs[i] >= self.coeffs[i + 1] {
            i += 1;
        }
        i + 1 >= n.max(1)
    }
}

impl std::ops::Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut terms = self.terms.clone();
        for (e, c) in &rhs.terms {
            LaurentPoly::insert_add(&mut terms, *e, c.clone());
        }
        LaurentPoly { terms }
    }
}

impl std::ops::Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut terms = self.terms.clone();
        for (e, c) in &rhs.terms {
            LaurentPoly::insert_add(&mut terms, *e, -c.clone());
        }
        LaurentPoly { terms }
    }
}

impl std::ops::Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut terms = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3]];
                LaurentPoly::insert_add(&mut terms, e, c1 * c2);
            }
        }
        LaurentPoly { terms }
    }
}

macro_rules! forward_owned_ops {
    ($($trait:ident :: $method:ident),*) => {$(
        impl std::ops::$trait for LaurentPoly {
            type Output = LaurentPoly;
            fn $method(self, rhs: LaurentPoly) -> LaurentPoly {
                (&self).$method(&rhs)
            }
        }
        impl std::ops::$trait<&LaurentPoly> for LaurentPoly {
            type Output = LaurentPoly;
            fn $method(self, rhs: &LaurentPoly) -> LaurentPoly {
                (&self).$method(rhs)
            }
        }
        impl std::ops::$trait<LaurentPoly> for &LaurentPoly {
            type Output = LaurentPoly;
            fn $method(self, rhs: LaurentPoly) -> LaurentPoly {
                self.$method(&rhs)
            }
        }
    )*};
}

forward_owned_ops!(Add::add, Sub::sub, Mul::mul);

impl std::ops::AddAssign<LaurentPoly> for LaurentPoly {
    fn add_assign(&mut self, rhs: LaurentPoly) {
        for (e, c) in rhs.terms {
            LaurentPoly::insert_add(&mut self.terms, e, c);
        }
    }
}

impl std::ops::AddAssign<&LaurentPoly> for LaurentPoly {
    fn add_assign(&mut self, rhs: &LaurentPoly) {
        for (e, c) in &rhs.terms {
            LaurentPoly::insert_add(&mut self.terms, *e, c.clone());
        }
    }
}

impl std::ops::SubAssign<LaurentPoly> for LaurentPoly {
    fn sub_assign(&mut self, rhs: LaurentPoly) {
        for (e, c) in rhs.terms {
            LaurentPoly::insert_add(&mut self.terms, e, -c);
        }
    }
}

impl std::ops::SubAssign<&LaurentPoly> for LaurentPoly {
    fn sub_assign(&mut self, rhs: &LaurentPoly) {
        for (e, c) in &rhs.terms {
            LaurentPoly::insert_add(&mut self.terms, *e, -c.clone());
        }
    }
}

impl std::ops::Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        self.negate()
    }
}

impl std::iter::Sum for LaurentPoly {
    fn sum<I: Iterator<Item = LaurentPoly>>(iter: I) -> LaurentPoly {
        let mut acc = LaurentPoly::zero();
        for p in iter {
            acc = &acc + &p;
        }
        acc
    }
}

impl fmt::Display for LaurentPoly {
    /// Terms in lexicographic exponent order: `1 + 2 * u v^2 - t^{1/2}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exps, coef) in &self.terms {
            let neg = coef.is_negative();
            let abs = coef.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut vars = String::new();
            for var in Var::ALL {
                let k = exps[var.index()];
                if k == 0 {
                    continue;
                }
                if !vars.is_empty() {
                    vars.push(' ');
                }
                vars.push_str(var.name());
                if k != 2 {
                    let h = HalfExp::half(k);
                    if h.is_integer() && h.twice > 0 {
                        vars.push_str(&format!("^{}", h.lowest_form()));
                    } else {
                        vars.push_str(&format!("^{{{}}}", h.lowest_form()));
                    }
                }
            }
            if vars.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{vars}")?;
            } else {
                write!(f, "{abs} * {vars}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t() -> LaurentPoly {
        LaurentPoly::var(Var::T)
    }

    #[test]
    fn involute_monomial() {
        assert_eq!(LaurentPoly::t_half_pow(1).involute(), LaurentPoly::t_half_pow(-1));
    }

    #[test]
    fn involute_q_is_minus_q() {
        assert_eq!(LaurentPoly::q().involute(), LaurentPoly::q().negate());
    }

    #[test]
    fn involute_linear() {
        let p = LaurentPoly::one() + t().scale(3);
        let q = LaurentPoly::one() + LaurentPoly::var_pow(Var::T, HalfExp::int(-1)).scale(3);
        assert_eq!(p.involute(), q);
    }

    #[test]
    fn substitute_t_to_uv() {
        let p = LaurentPoly::one() + t();
        let got = p.substitute(&SubstMap::t_to_uv()).unwrap();
        let want = LaurentPoly::one() + LaurentPoly::var(Var::U) * LaurentPoly::var(Var::V);
        assert_eq!(got, want);
    }

    #[test]
    fn substitute_half_power() {
        let got = LaurentPoly::t_half_pow(1).substitute(&SubstMap::t_to_u_over_v()).unwrap();
        assert_eq!(got, LaurentPoly::monomial([0, 1, -1, 0], 1)); // u^{1/2} v^{-1/2}
    }

    #[test]
    fn substitute_uvw_involution_fixes_uvw2() {
        // uvw² ↦ u⁻¹ v⁻¹ (uvw)² = uvw²
        let p = LaurentPoly::monomial([0, 2, 2, 4], 1);
        let map = SubstMap::identity()
            .map_var(Var::U, MonomialImage::product(&[(Var::U, -1)]))
            .map_var(Var::V, MonomialImage::product(&[(Var::V, -1)]))
            .map_var(Var::W, MonomialImage::product(&[(Var::U, 1), (Var::V, 1), (Var::W, 1)]));
        assert_eq!(p.substitute(&map).unwrap(), p);
    }

    #[test]
    fn substitute_rejects_fractional_sign() {
        let map = SubstMap::identity().map_var(Var::T, MonomialImage::of_var(Var::U).negate());
        let err = LaurentPoly::t_half_pow(1).substitute(&map).unwrap_err();
        assert_eq!(err, LaurentError::SignedHalfPower { var: "t" });
    }

    #[test]
    fn profile_non_unimodal_symmetric() {
        let p = LaurentPoly::monomial([4, 0, 0, 0], 1) + LaurentPoly::monomial([8, 0, 0, 0], 1);
        let prof = p.profile(Var::T).unwrap();
        assert!(prof.is_symmetric(HalfExp::int(3)));
        assert!(!prof.is_unimodal());
        assert!(prof.is_nonnegative());
    }

    #[test]
    fn profile_unimodal() {
        let p = LaurentPoly::one() + t() + t().pow(2);
        let prof = p.profile(Var::T).unwrap();
        assert!(prof.is_symmetric(HalfExp::int(1)));
        assert!(prof.is_unimodal());
    }

    #[test]
    fn profile_half_center() {
        let p = t() + t().pow(2);
        let prof = p.profile(Var::T).unwrap();
        assert!(prof.is_symmetric(HalfExp::half(3)));
        assert_eq!(prof.support_center(), HalfExp::half(3));
    }

    #[test]
    fn profile_rejects_multivariate() {
        let p = t() + LaurentPoly::var(Var::U);
        assert!(p.profile(Var::T).is_err());
    }

    #[test]
    fn canonical_cancellation() {
        let p = t().scale(5) + LaurentPoly::one();
        assert!((&p - &p).is_zero());
        assert_eq!((&p + &p.negate()).num_terms(), 0);
    }

    #[test]
    fn display_forms() {
        assert_eq!(LaurentPoly::zero().to_string(), "0");
        assert_eq!(LaurentPoly::constant(-3).to_string(), "-3");
        let p = LaurentPoly::monomial([4, 0, 0, 0], 1) + LaurentPoly::monomial([8, 0, 0, 0], 1);
        assert_eq!(p.to_string(), "t^2 + t^4");
        let q = LaurentPoly::one() - t();
        assert_eq!(q.to_string(), "1 - t");
        let r = LaurentPoly::monomial([0, 2, 4, 0], 2);
        assert_eq!(r.to_string(), "2 * u v^2");
        assert_eq!(LaurentPoly::t_half_pow(1).to_string(), "t^{1/2}");
        assert_eq!(LaurentPoly::t_half_pow(-3).to_string(), "t^{-3/2}");
        assert_eq!(LaurentPoly::q().to_string(), "-t^{-1/2} + t^{1/2}");
    }

    #[test]
    fn json_round_trip() {
        let p = LaurentPoly::q().pow(3) + LaurentPoly::var(Var::W).scale(-7);
        let back = LaurentPoly::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
    }

    fn arb_poly() -> impl Strategy<Value = LaurentPoly> {
        proptest::collection::vec(
            (
                proptest::array::uniform4(-4i32..5),
                -4i64..5,
            ),
            0..6,
        )
        .prop_map(|terms| {
            let mut p = LaurentPoly::zero();
            for (exps, c) in terms {
                p = &p + &LaurentPoly::monomial(exps, c);
            }
            p
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!((&a * &b) * &c, &a * (&b * &c));
            prop_assert_eq!(&a * (&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn involute_is_ring_hom(a in arb_poly(), b in arb_poly()) {
            prop_assert_eq!((&a * &b).involute(), &a.involute() * &b.involute());
            prop_assert_eq!((&a + &b).involute(), &a.involute() + &b.involute());
            prop_assert_eq!(a.involute().involute(), a);
        }

        #[test]
        fn substitution_is_ring_hom(a in arb_poly(), b in arb_poly()) {
            let map = SubstMap::t_to_uv();
            let lhs = (&a * &b).substitute(&map).unwrap();
            let rhs = &a.substitute(&map).unwrap() * &b.substitute(&map).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn substitution_composes(a in arb_poly()) {
            // t ↦ uv then (u,v) ↦ (1,1) equals t ↦ 1 directly.
            let via = a
                .substitute(&SubstMap::t_to_uv()).unwrap()
                .substitute(&SubstMap::to_one(Var::U)).unwrap()
                .substitute(&SubstMap::to_one(Var::V)).unwrap();
            let direct = a
                .substitute(&SubstMap::to_one(Var::T)).unwrap()
                .substitute(&SubstMap::to_one(Var::U)).unwrap()
                .substitute(&SubstMap::to_one(Var::V)).unwrap();
            prop_assert_eq!(via, direct);
        }
    }
}
