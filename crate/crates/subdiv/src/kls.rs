//! The convolution algebra of a ranked poset and its torsion-free invariants:
//! g-polynomials, h-polynomials, and the acceptability operator γ.
//!
//! For a locally Eulerian poset the incidence kernel is
//! `κ(x, y) = q^{ρ(x,y)}` with `q = t^{1/2} − t^{−1/2}`. Its distinguished
//! square root γ — lower triangular with ones on the diagonal, symmetric
//! above it — has entries `γ(x, y) = t^{−ρ(x,y)/2} · g([x, y]; t)`, where `g`
//! is defined by a top-down recursion on intervals:
//!
//! * `g([x, x]; t) = 1`, and
//! * for an interval of length `n > 0`, `g` is the unique polynomial of
//!   degree `< n/2` with
//!   `t^n g(t^{−1}) = Σ_z g([x, z]; t) (t − 1)^{n − ρ(x,z)}` (sum over the
//!   whole interval).
//!
//! Because `deg g < n/2`, the coefficients of `g` can be read off the top
//! coefficients of the partial sum that omits the top endpoint; that is how
//! [`KlsContext::g`] computes them, one memoized interval at a time. The
//! inverse of γ needs g-polynomials of *reversed* intervals, which
//! [`KlsContext::g_dual`] computes by the mirror recursion without ever
//! materializing a dual poset.
//!
//! The h-polynomial of a poset with a minimum (rank `n`) is defined by the
//! same sum taken over the whole poset:
//! `t^n h(t^{−1}) = Σ_x g([0̂, x]; t) (t − 1)^{n − ρ(0̂,x)}`. For a poset
//! that also has a maximum the two notions agree: `h = g`.

use std::cell::RefCell;
use std::collections::HashMap;

use num_traits::Zero;
use thiserror::Error;

use crate::laurent::{LaurentPoly, Var};
use crate::poset::RankedPoset;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum KlsError {
    #[error("poset is not locally Eulerian: interval [{lower}, {upper}] has {evens} element(s) at even and {odds} at odd rank distance")]
    NotLocallyEulerian {
        lower: String,
        upper: String,
        evens: usize,
        odds: usize,
    },
    #[error("poset has no minimum element")]
    NoBottom,
    #[error("poset has no maximum element")]
    NoTop,
    #[error("elements {lower} and {upper} are not comparable")]
    NotComparable { lower: String, upper: String },
}

/// Shared computation state for one poset: validates local Eulerian-ness up
/// front and memoizes g-polynomials of intervals and of reversed intervals.
#[derive(Debug)]
pub struct KlsContext<'p> {
    poset: &'p RankedPoset,
    g_memo: RefCell<HashMap<(usize, usize), LaurentPoly>>,
    g_dual_memo: RefCell<HashMap<(usize, usize), LaurentPoly>>,
    tm1_pows: RefCell<Vec<LaurentPoly>>,
}

impl<'p> KlsContext<'p> {
    /// Fails with a witness interval if the poset is not locally Eulerian.
    pub fn new(poset: &'p RankedPoset) -> Result<KlsContext<'p>, KlsError> {
        if let Some((x, y)) = locally_eulerian_witness(poset) {
            let interval = poset.interval(x, y);
            let evens = interval
                .iter()
                .filter(|&&z| (poset.rho(x, z)).rem_euclid(2) == 0)
                .count();
            return Err(KlsError::NotLocallyEulerian {
                lower: poset.id(x).to_string(),
                upper: poset.id(y).to_string(),
                evens,
                odds: interval.len() - evens,
            });
        }
        Ok(KlsContext {
            poset,
            g_memo: RefCell::new(HashMap::new()),
            g_dual_memo: RefCell::new(HashMap::new()),
            tm1_pows: RefCell::new(vec![LaurentPoly::one()]),
        })
    }

    pub fn poset(&self) -> &RankedPoset {
        self.poset
    }

    /// `(t − 1)^k`, cached.
    pub fn t_minus_one_pow(&self, k: usize) -> LaurentPoly {
        let mut pows = self.tm1_pows.borrow_mut();
        let step = LaurentPoly::var(Var::T) - LaurentPoly::one();
        while pows.len() <= k {
            let next = pows.last().unwrap() * &step;
            pows.push(next);
        }
        pows[k].clone()
    }

    /// g-polynomial `g([x, y]; t)` of the interval from `x` up to `y`.
    pub fn g(&self, x: usize, y: usize) -> Result<LaurentPoly, KlsError> {
        if !self.poset.le(x, y) {
            return Err(self.not_comparable(x, y));
        }
        if let Some(p) = self.g_memo.borrow().get(&(x, y)) {
            return Ok(p.clone());
        }
        let n = self.poset.rho(x, y);
        let mut partial = LaurentPoly::zero();
        for z in self.poset.interval(x, y) {
            if z == y {
                continue;
            }
            let term = self.g(x, z)? * self.t_minus_one_pow((n - self.poset.rho(x, z)) as usize);
            partial += term;
        }
        let g = extract_g(&partial, n);
        self.g_memo.borrow_mut().insert((x, y), g.clone());
        Ok(g)
    }

    /// g-polynomial `g([x, y]*; t)` of the order-reversed interval, whose
    /// minimum is `y`. Runs the same recursion with the roles of the
    /// endpoints swapped.
    pub fn g_dual(&self, x: usize, y: usize) -> Result<LaurentPoly, KlsError> {
        if !self.poset.le(x, y) {
            return Err(self.not_comparable(x, y));
        }
        if let Some(p) = self.g_dual_memo.borrow().get(&(x, y)) {
            return Ok(p.clone());
        }
        let n = self.poset.rho(x, y);
        let mut partial = LaurentPoly::zero();
        for z in self.poset.interval(x, y) {
            if z == x {
                continue;
            }
            let term =
                self.g_dual(z, y)? * self.t_minus_one_pow((n - self.poset.rho(z, y)) as usize);
            partial += term;
        }
        let g = extract_g(&partial, n);
        self.g_dual_memo.borrow_mut().insert((x, y), g.clone());
        Ok(g)
    }

    /// Entry `γ(x, y) = t^{−ρ(x,y)/2} g([x, y]; t)` of the acceptability
    /// operator. A Laurent polynomial in `t^{1/2}` when ρ is odd.
    pub fn gamma(&self, x: usize, y: usize) -> Result<LaurentPoly, KlsError> {
        let n = self.poset.rho(x, y);
        Ok(self.g(x, y)?.mul_monomial([-n, 0, 0, 0]))
    }

    /// Entry `γ^{−1}(x, y) = (−1)^{ρ(x,y)} t^{−ρ(x,y)/2} g([x, y]*; t)` of
    /// the inverse operator.
    pub fn gamma_inv(&self, x: usize, y: usize) -> Result<LaurentPoly, KlsError> {
        let n = self.poset.rho(x, y);
        let shifted = self.g_dual(x, y)?.mul_monomial([-n, 0, 0, 0]);
        Ok(if n % 2 == 0 { shifted } else { shifted.negate() })
    }

    /// h-polynomial of the whole poset, which must have a minimum. The rank
    /// used is the longest-chain length from that minimum.
    pub fn h(&self) -> Result<LaurentPoly, KlsError> {
        let bottom = self.poset.bottom().ok_or(KlsError::NoBottom)?;
        let n = self.poset.rank_span();
        let mut rhs = LaurentPoly::zero();
        for x in 0..self.poset.len() {
            let k = (n - self.poset.rho(bottom, x)) as usize;
            rhs += self.g(bottom, x)? * self.t_minus_one_pow(k);
        }
        // The sum equals t^n h(t^{−1}); reverse it.
        Ok(rhs.involute().mul_monomial([2 * n, 0, 0, 0]))
    }

    fn not_comparable(&self, x: usize, y: usize) -> KlsError {
        KlsError::NotComparable {
            lower: self.poset.id(x).to_string(),
            upper: self.poset.id(y).to_string(),
        }
    }
}

/// Reads the polynomial of degree `< n/2` off the top coefficients of the
/// partial defining sum (the sum over the interval minus its top endpoint).
fn extract_g(partial: &LaurentPoly, n: i32) -> LaurentPoly {
    if n == 0 {
        return LaurentPoly::one();
    }
    let mut g = LaurentPoly::zero();
    let mut i = 0;
    while 2 * i < n {
        let c = partial.coeff_int(Var::T, n - i);
        if !c.is_zero() {
            g += LaurentPoly::monomial([2 * i, 0, 0, 0], c);
        }
        i += 1;
    }
    g
}

/// First interval `[x, y]` whose even- and odd-distance element counts
/// differ, if any. `None` means the poset is locally Eulerian.
fn locally_eulerian_witness(poset: &RankedPoset) -> Option<(usize, usize)> {
    if poset.is_locally_eulerian() {
        return None;
    }
    for x in 0..poset.len() {
        for y in 0..poset.len() {
            if !poset.le(x, y) || poset.rho(x, y) < 1 {
                continue;
            }
            let balance: i64 = poset
                .interval(x, y)
                .iter()
                .map(|&z| if poset.rho(x, z) % 2 == 0 { 1 } else { -1 })
                .sum();
            if balance != 0 {
                return Some((x, y));
            }
        }
    }
    None
}

/// g-polynomial of a poset with minimum and maximum (the g-polynomial of
/// that full interval).
pub fn g_poly(poset: &RankedPoset) -> Result<LaurentPoly, KlsError> {
    let ctx = KlsContext::new(poset)?;
    let bottom = poset.bottom().ok_or(KlsError::NoBottom)?;
    let top = poset.top().ok_or(KlsError::NoTop)?;
    ctx.g(bottom, top)
}

/// h-polynomial of a poset with a minimum.
pub fn h_poly(poset: &RankedPoset) -> Result<LaurentPoly, KlsError> {
    KlsContext::new(poset)?.h()
}

/// A function on comparable pairs of a fixed poset, with values in the
/// Laurent polynomial ring. Entries that are zero are not stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IncidenceFn {
    vals: HashMap<(usize, usize), LaurentPoly>,
}

impl IncidenceFn {
    pub fn new() -> IncidenceFn {
        IncidenceFn::default()
    }

    /// Convolution identity δ.
    pub fn delta(poset: &RankedPoset) -> IncidenceFn {
        let mut f = IncidenceFn::new();
        for x in 0..poset.len() {
            f.set(x, x, LaurentPoly::one());
        }
        f
    }

    /// The kernel `κ(x, y) = q^{ρ(x,y)}` with `q = t^{1/2} − t^{−1/2}`.
    pub fn kernel(poset: &RankedPoset) -> IncidenceFn {
        let q = LaurentPoly::q();
        let mut f = IncidenceFn::new();
        for x in 0..poset.len() {
            for y in 0..poset.len() {
                if poset.le(x, y) {
                    f.set(x, y, q.pow(poset.rho(x, y) as usize));
                }
            }
        }
        f
    }

    pub fn get(&self, x: usize, y: usize) -> LaurentPoly {
        self.vals.get(&(x, y)).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, x: usize, y: usize, p: LaurentPoly) {
        if p.is_zero() {
            self.vals.remove(&(x, y));
        } else {
            self.vals.insert((x, y), p);
        }
    }

    /// `(f ∗ g)(x, y) = Σ_{x ≤ z ≤ y} f(x, z) g(z, y)`.
    pub fn convolve(&self, other: &IncidenceFn, poset: &RankedPoset) -> IncidenceFn {
        let mut out = IncidenceFn::new();
        for x in 0..poset.len() {
            for y in 0..poset.len() {
                if !poset.le(x, y) {
                    continue;
                }
                let mut sum = LaurentPoly::zero();
                for z in poset.interval(x, y) {
                    if let (Some(a), Some(b)) = (self.vals.get(&(x, z)), other.vals.get(&(z, y))) {
                        sum += a * b;
                    }
                }
                out.set(x, y, sum);
            }
        }
        out
    }

    /// Applies the bar involution (each variable to its reciprocal)
    /// entrywise.
    pub fn involute(&self) -> IncidenceFn {
        let mut out = IncidenceFn::new();
        for (&(x, y), p) in &self.vals {
            out.set(x, y, p.involute());
        }
        out
    }
}

/// The operator γ as an incidence function.
pub fn gamma_fn(ctx: &KlsContext) -> Result<IncidenceFn, KlsError> {
    let poset = ctx.poset();
    let mut f = IncidenceFn::new();
    for x in 0..poset.len() {
        for y in 0..poset.len() {
            if poset.le(x, y) {
                f.set(x, y, ctx.gamma(x, y)?);
            }
        }
    }
    Ok(f)
}

/// The operator γ^{−1} as an incidence function.
pub fn gamma_inv_fn(ctx: &KlsContext) -> Result<IncidenceFn, KlsError> {
    let poset = ctx.poset();
    let mut f = IncidenceFn::new();
    for x in 0..poset.len() {
        for y in 0..poset.len() {
            if poset.le(x, y) {
                f.set(x, y, ctx.gamma_inv(x, y)?);
            }
        }
    }
    Ok(f)
}

/// Whether `f` is a kernel: invertible with inverse `f̄`. Holds for
/// [`IncidenceFn::kernel`] exactly when the poset is locally Eulerian.
pub fn is_kernel(poset: &RankedPoset, f: &IncidenceFn) -> bool {
    let delta = IncidenceFn::delta(poset);
    let bar = f.involute();
    f.convolve(&bar, poset) == delta && bar.convolve(f, poset) == delta
}

/// The standard basis vector supported at `x`.
pub fn unit_vector(len: usize, x: usize) -> Vec<LaurentPoly> {
    let mut e = vec![LaurentPoly::zero(); len];
    e[x] = LaurentPoly::one();
    e
}

/// Right action of an incidence function on an element-indexed vector:
/// `(f ∗ g)(y) = Σ_{x ≤ y} f(x) g(x, y)`.
pub fn act(poset: &RankedPoset, f: &[LaurentPoly], g: &IncidenceFn) -> Vec<LaurentPoly> {
    let mut out = vec![LaurentPoly::zero(); poset.len()];
    for y in 0..poset.len() {
        let mut sum = LaurentPoly::zero();
        for x in poset.down_set(y) {
            if !f[x].is_zero() {
                sum += &f[x] * g.get(x, y);
            }
        }
        out[y] = sum;
    }
    out
}

pub fn involute_vec(f: &[LaurentPoly]) -> Vec<LaurentPoly> {
    f.iter().map(LaurentPoly::involute).collect()
}

/// Whether the vector `f` is acceptable for the kernel κ, i.e. `f̄ = f ∗ κ`.
pub fn is_acceptable(poset: &RankedPoset, f: &[LaurentPoly], kappa: &IncidenceFn) -> bool {
    involute_vec(f) == act(poset, f, kappa)
}

/// Whether the incidence function `f` is totally acceptable, i.e.
/// `f̄ = f ∗ κ` as incidence functions.
pub fn is_totally_acceptable(poset: &RankedPoset, f: &IncidenceFn, kappa: &IncidenceFn) -> bool {
    f.involute() == f.convolve(kappa, poset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::square_face_poset;

    fn poly(pairs: &[(i32, i64)]) -> LaurentPoly {
        pairs
            .iter()
            .map(|&(e, c)| LaurentPoly::monomial([2 * e, 0, 0, 0], c))
            .sum()
    }

    /// Face poset of the 3-cube: the empty face plus all products of {0},
    /// {1}, [0,1] across three coordinates, ordered by inclusion.
    fn cube_face_poset() -> RankedPoset {
        // 0 = {0}, 1 = {1}, 2 = [0,1] per coordinate.
        let mut ids = vec!["empty".to_string()];
        let mut ranks = vec![0i32];
        let mut faces = vec![None];
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let f = [a, b, c];
                    ids.push(format!("f{a}{b}{c}"));
                    ranks.push(1 + f.iter().filter(|&&x| x == 2).count() as i32);
                    faces.push(Some(f));
                }
            }
        }
        let below = |f: &Option<[usize; 3]>, g: &Option<[usize; 3]>| match (f, g) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(f), Some(g)) => f.iter().zip(g).all(|(&a, &b)| a == b || b == 2),
        };
        let mut covers = Vec::new();
        for i in 0..ids.len() {
            for j in 0..ids.len() {
                if i != j && below(&faces[i], &faces[j]) && ranks[j] == ranks[i] + 1 {
                    covers.push((ids[i].clone(), ids[j].clone()));
                }
            }
        }
        let rank_map = ids.iter().cloned().zip(ranks).collect();
        RankedPoset::build(ids, &covers, &rank_map).unwrap()
    }

    #[test]
    fn g_of_boolean_algebras_is_one() {
        for r in 0..5 {
            let b = RankedPoset::boolean_algebra(r);
            assert_eq!(g_poly(&b).unwrap(), LaurentPoly::one(), "rank {r}");
        }
    }

    #[test]
    fn g_of_square_face_poset() {
        // Rank 3 with four atoms: constant term 1, linear term 4 − 3 = 1.
        assert_eq!(g_poly(&square_face_poset()).unwrap(), poly(&[(0, 1), (1, 1)]));
    }

    #[test]
    fn g_of_cube_and_its_dual() {
        let cube = cube_face_poset();
        assert!(cube.is_eulerian());
        // 8 atoms at rank 4: g = 1 + 4t. The dual is the octahedron face
        // poset with 6 atoms: g* = 1 + 2t.
        assert_eq!(g_poly(&cube).unwrap(), poly(&[(0, 1), (1, 4)]));
        let ctx = KlsContext::new(&cube).unwrap();
        let (bottom, top) = (cube.bottom().unwrap(), cube.top().unwrap());
        assert_eq!(ctx.g_dual(bottom, top).unwrap(), poly(&[(0, 1), (1, 2)]));
        assert_eq!(g_poly(&cube.dual()).unwrap(), poly(&[(0, 1), (1, 2)]));
    }

    #[test]
    fn g_degree_bound_holds_on_interval_sweep() {
        let cube = cube_face_poset();
        let ctx = KlsContext::new(&cube).unwrap();
        for x in 0..cube.len() {
            for y in 0..cube.len() {
                if !cube.le(x, y) {
                    continue;
                }
                let g = ctx.g(x, y).unwrap();
                let n = cube.rho(x, y);
                if n == 0 {
                    assert!(g.is_one());
                } else if let Some(d) = g.max_exp(Var::T) {
                    // 2·deg < n, i.e. stored doubled exponent < n.
                    assert!(d.twice < n, "deg g([{x},{y}]) too big");
                }
                assert_eq!(g.coeff_int(Var::T, 0), 1.into());
            }
        }
    }

    #[test]
    fn h_equals_g_on_eulerian_posets() {
        for poset in [
            RankedPoset::boolean_algebra(3),
            square_face_poset(),
            cube_face_poset(),
        ] {
            assert_eq!(h_poly(&poset).unwrap(), g_poly(&poset).unwrap());
        }
    }

    #[test]
    fn h_of_boolean_algebra_without_top() {
        for r in 1..5u32 {
            let b = RankedPoset::boolean_algebra(r);
            let top = b.top().unwrap();
            let keep: Vec<usize> = (0..b.len()).filter(|&i| i != top).collect();
            let (trimmed, _) = b.restrict(&keep).unwrap();
            let expected = poly(&(0..r as i32).map(|i| (i, 1)).collect::<Vec<_>>());
            assert_eq!(h_poly(&trimmed).unwrap(), expected, "rank {r}");
        }
    }

    #[test]
    fn h_of_subdivided_segment() {
        // Segment split at an interior vertex: f-vector (1, 3, 2).
        let ids: Vec<String> = ["e", "v0", "v1", "v2", "e01", "e12"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let covers: Vec<(String, String)> = [
            ("e", "v0"),
            ("e", "v1"),
            ("e", "v2"),
            ("v0", "e01"),
            ("v1", "e01"),
            ("v1", "e12"),
            ("v2", "e12"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        let rank = ids
            .iter()
            .map(|id| (id.clone(), if id == "e" { 0 } else { id.len() as i32 - 1 }))
            .collect();
        let gamma = RankedPoset::build(ids, &covers, &rank).unwrap();
        assert!(gamma.is_lower_eulerian() && !gamma.is_eulerian());
        assert_eq!(h_poly(&gamma).unwrap(), poly(&[(0, 1), (1, 1)]));
    }

    #[test]
    fn removing_the_top_divides_out_one_minus_t() {
        // (1 − t) h(B ∖ {1̂}; t) = g(B; t) − t^n g(B; t^{−1}).
        for poset in [
            RankedPoset::boolean_algebra(4),
            square_face_poset(),
            cube_face_poset(),
        ] {
            let n = poset.rank_span();
            let g = g_poly(&poset).unwrap();
            let top = poset.top().unwrap();
            let keep: Vec<usize> = (0..poset.len()).filter(|&i| i != top).collect();
            let (trimmed, _) = poset.restrict(&keep).unwrap();
            let h = h_poly(&trimmed).unwrap();
            let lhs = (LaurentPoly::one() - LaurentPoly::var(Var::T)) * h;
            let rhs = &g - g.involute().mul_monomial([2 * n, 0, 0, 0]);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn kernel_recognized_exactly_on_locally_eulerian_posets() {
        let square = square_face_poset();
        assert!(is_kernel(&square, &IncidenceFn::kernel(&square)));

        // A 3-chain is ranked but not locally Eulerian.
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let covers = vec![("a".to_string(), "b".to_string()), ("b".to_string(), "c".to_string())];
        let rank = [("a", 0), ("b", 1), ("c", 2)]
            .iter()
            .map(|&(s, r)| (s.to_string(), r))
            .collect();
        let chain = RankedPoset::build(ids, &covers, &rank).unwrap();
        assert!(!is_kernel(&chain, &IncidenceFn::kernel(&chain)));
        let err = KlsContext::new(&chain).unwrap_err();
        assert!(matches!(err, KlsError::NotLocallyEulerian { .. }));
    }

    #[test]
    fn gamma_inverts_and_is_totally_acceptable() {
        for poset in [square_face_poset(), cube_face_poset()] {
            let ctx = KlsContext::new(&poset).unwrap();
            let gamma = gamma_fn(&ctx).unwrap();
            let gamma_inv = gamma_inv_fn(&ctx).unwrap();
            let delta = IncidenceFn::delta(&poset);
            assert_eq!(gamma.convolve(&gamma_inv, &poset), delta);
            assert_eq!(gamma_inv.convolve(&gamma, &poset), delta);

            let kappa = IncidenceFn::kernel(&poset);
            assert!(is_totally_acceptable(&poset, &gamma, &kappa));
        }
    }

    #[test]
    fn unit_vectors_convolved_with_gamma_are_acceptable() {
        let square = square_face_poset();
        let ctx = KlsContext::new(&square).unwrap();
        let gamma = gamma_fn(&ctx).unwrap();
        let kappa = IncidenceFn::kernel(&square);
        for x in 0..square.len() {
            let f = act(&square, &unit_vector(square.len(), x), &gamma);
            assert!(is_acceptable(&square, &f, &kappa), "basis element {x}");
        }
    }

    #[test]
    fn incomparable_pair_is_an_error() {
        let square = square_face_poset();
        let ctx = KlsContext::new(&square).unwrap();
        let atoms: Vec<usize> = (0..square.len()).filter(|&i| square.rank(i) == 1).collect();
        assert!(matches!(
            ctx.g(atoms[0], atoms[1]),
            Err(KlsError::NotComparable { .. })
        ));
    }
}
