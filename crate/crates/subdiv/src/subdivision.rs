//! Strong formal subdivisions: rank-increasing surjections σ: Γ → B whose
//! fibers satisfy an Euler-characteristic condition, together with the
//! local and mixed h-polynomials they carry.
//!
//! Both posets live on a **common rank scale**: ranks are compared raw
//! across σ, never re-normalized per poset. A map is a strong formal
//! subdivision when it is order-preserving, rank-increasing, strongly
//! surjective (every admissible pair `y ∈ Γ`, `x ≥ σ(y)` admits `y' ≥ y`
//! with `σ(y') = x` and `ρ_Γ(y') = ρ_B(x)`), and for every such pair
//!
//! ```text
//! Σ_{y' ≥ y, σ(y') = x} (−1)^{ρ_B(x) − ρ_Γ(y')} = 1.
//! ```
//!
//! An equivalent Möbius form — the same sum over `σ(y') ≤ x` equals 1 when
//! `σ(y) = x` and 0 otherwise — is validated independently; a map passing
//! one test but not the other indicates corrupted input, not a borderline
//! case, so both produce their own error.
//!
//! The invariants are computed from the up-restrictions
//! `(Γ_{≥y})_x = {y' ≥ y : σ(y') ≤ x}`, each a lower Eulerian poset of rank
//! `e(y, x) = ρ_B(x) − ρ_Γ(y)`. Their h-polynomials need no restricted
//! posets: every interval of an up-restriction is an interval of Γ, so
//! [`SfsInvariants::h_up`] evaluates the defining sum directly against the
//! memoized g-polynomials of Γ. On top of `h_up` sit the relative local
//! h-polynomial (alternating sum against dual g-polynomials of the base),
//! the two-variable mixed h-polynomial, and the pushforward of incidence
//! vectors. [`run_battery`] checks every identity these satisfy on a given
//! subdivision and reports one result per named check.

use std::cell::RefCell;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::kls::{
    act, gamma_fn, is_acceptable, unit_vector, IncidenceFn, KlsContext, KlsError,
};
use crate::laurent::{LaurentError, LaurentPoly, MonomialImage, SubstMap, Var};
use crate::poset::{PosetError, RankedPoset};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SubdivisionError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error(transparent)]
    Kls(#[from] KlsError),
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error("subdivision map assigns no image to {0}")]
    MissingImage(String),
    #[error("subdivision map references unknown element {0}")]
    UnknownElement(String),
    #[error("posets must be nonempty")]
    EmptyPoset,
    #[error("map is not order-preserving: {lower} ≤ {upper} but σ({lower}) = {image_lower} ≰ {image_upper} = σ({upper})")]
    NotOrderPreserving {
        lower: String,
        upper: String,
        image_lower: String,
        image_upper: String,
    },
    #[error("map is not rank-increasing: {element} has rank {element_rank} but σ({element}) = {image} has rank {image_rank}")]
    NotRankIncreasing {
        element: String,
        element_rank: i32,
        image: String,
        image_rank: i32,
    },
    #[error("map is not surjective: {target} has empty preimage")]
    NotSurjective { target: String },
    #[error("map is not strongly surjective: nothing above {element} maps onto {target} at rank {want}")]
    NotStronglySurjective {
        element: String,
        target: String,
        want: i32,
    },
    #[error("alternating fiber sum over ({element}, {target}) is {sum}, want 1")]
    FiberSumViolation {
        element: String,
        target: String,
        sum: i64,
    },
    #[error("Möbius form of the fiber condition fails at ({element}, {target}): sum is {sum}, want {want}")]
    MobiusFormViolation {
        element: String,
        target: String,
        sum: i64,
        want: i64,
    },
    #[error("subdivision rank is ambiguous: bottom ranks give {via_bottoms}, rank spans give {via_spans}")]
    RankMismatch { via_bottoms: i32, via_spans: i32 },
    #[error("maps are not composable: {0}")]
    NotComposable(String),
    #[error("operation needs a minimum element in the {0} poset")]
    NoBottom(&'static str),
    #[error("operation needs a maximum element in the base poset")]
    NoTop,
    #[error("({element}, {target}) is not admissible: σ({element}) ≰ {target}")]
    NotAdmissible { element: String, target: String },
    #[error("malformed subdivision JSON: {0}")]
    Json(String),
}

/// A validated strong formal subdivision σ: Γ → B.
#[derive(Clone, Debug)]
pub struct StrongFormalSubdivision {
    gamma: RankedPoset,
    base: RankedPoset,
    /// `sigma[y]` is the index in `base` of the image of `y`.
    sigma: Vec<usize>,
    /// `ρ_B(0̂_B) − ρ_Γ(0̂_Γ)` when both bottoms exist, validated against the
    /// rank-span difference.
    rank: Option<i32>,
}

impl StrongFormalSubdivision {
    /// Validates every axiom and returns the subdivision, or the first
    /// violated axiom as a dedicated error.
    pub fn new(
        gamma: RankedPoset,
        base: RankedPoset,
        sigma: Vec<usize>,
    ) -> Result<StrongFormalSubdivision, SubdivisionError> {
        if gamma.is_empty() || base.is_empty() {
            return Err(SubdivisionError::EmptyPoset);
        }
        assert_eq!(sigma.len(), gamma.len(), "one image per element");
        for &x in &sigma {
            assert!(x < base.len(), "image index out of range");
        }

        for &(a, b) in gamma.covers() {
            if !base.le(sigma[a], sigma[b]) {
                return Err(SubdivisionError::NotOrderPreserving {
                    lower: gamma.id(a).to_string(),
                    upper: gamma.id(b).to_string(),
                    image_lower: base.id(sigma[a]).to_string(),
                    image_upper: base.id(sigma[b]).to_string(),
                });
            }
        }
        for y in 0..gamma.len() {
            if gamma.rank(y) > base.rank(sigma[y]) {
                return Err(SubdivisionError::NotRankIncreasing {
                    element: gamma.id(y).to_string(),
                    element_rank: gamma.rank(y),
                    image: base.id(sigma[y]).to_string(),
                    image_rank: base.rank(sigma[y]),
                });
            }
        }

        let mut fibers: Vec<Vec<usize>> = vec![Vec::new(); base.len()];
        for (y, &x) in sigma.iter().enumerate() {
            fibers[x].push(y);
        }
        if let Some(x) = (0..base.len()).find(|&x| fibers[x].is_empty()) {
            return Err(SubdivisionError::NotSurjective {
                target: base.id(x).to_string(),
            });
        }

        for y in 0..gamma.len() {
            for x in 0..base.len() {
                if !base.le(sigma[y], x) {
                    continue;
                }
                // Strong surjectivity: a full-rank element of the fiber
                // above y.
                let want = base.rank(x);
                if !fibers[x].iter().any(|&yp| gamma.le(y, yp) && gamma.rank(yp) == want) {
                    return Err(SubdivisionError::NotStronglySurjective {
                        element: gamma.id(y).to_string(),
                        target: base.id(x).to_string(),
                        want,
                    });
                }
                let mut fiber_sum = 0i64;
                for &yp in &fibers[x] {
                    if gamma.le(y, yp) {
                        fiber_sum += if (want - gamma.rank(yp)) % 2 == 0 { 1 } else { -1 };
                    }
                }
                if fiber_sum != 1 {
                    return Err(SubdivisionError::FiberSumViolation {
                        element: gamma.id(y).to_string(),
                        target: base.id(x).to_string(),
                        sum: fiber_sum,
                    });
                }
                // Möbius form: the same sum over the whole up-restriction
                // detects the image of y itself.
                let mut full_sum = 0i64;
                for yp in 0..gamma.len() {
                    if gamma.le(y, yp) && base.le(sigma[yp], x) {
                        full_sum += if (want - gamma.rank(yp)) % 2 == 0 { 1 } else { -1 };
                    }
                }
                let expected = if sigma[y] == x { 1 } else { 0 };
                if full_sum != expected {
                    return Err(SubdivisionError::MobiusFormViolation {
                        element: gamma.id(y).to_string(),
                        target: base.id(x).to_string(),
                        sum: full_sum,
                        want: expected,
                    });
                }
            }
        }

        let rank = match (gamma.bottom(), base.bottom()) {
            (Some(bg), Some(bb)) => {
                let via_bottoms = base.rank(bb) - gamma.rank(bg);
                let via_spans = gamma.rank_span() - base.rank_span();
                if via_bottoms != via_spans {
                    return Err(SubdivisionError::RankMismatch { via_bottoms, via_spans });
                }
                Some(via_bottoms)
            }
            _ => None,
        };

        Ok(StrongFormalSubdivision { gamma, base, sigma, rank })
    }

    /// Builds from an id-to-id map, resolving names in both posets.
    pub fn from_id_map(
        gamma: RankedPoset,
        base: RankedPoset,
        map: &HashMap<String, String>,
    ) -> Result<StrongFormalSubdivision, SubdivisionError> {
        let mut sigma = Vec::with_capacity(gamma.len());
        for y in 0..gamma.len() {
            let image = map
                .get(gamma.id(y))
                .ok_or_else(|| SubdivisionError::MissingImage(gamma.id(y).to_string()))?;
            let x = base
                .index_of(image)
                .ok_or_else(|| SubdivisionError::UnknownElement(image.clone()))?;
            sigma.push(x);
        }
        StrongFormalSubdivision::new(gamma, base, sigma)
    }

    /// The identity map on a locally Eulerian poset.
    pub fn identity(poset: &RankedPoset) -> Result<StrongFormalSubdivision, SubdivisionError> {
        let sigma = (0..poset.len()).collect();
        StrongFormalSubdivision::new(poset.clone(), poset.clone(), sigma)
    }

    /// The barycentric subdivision of a lower Eulerian poset: chains
    /// through 0̂ mapping to their tops. The base is re-ranked so its bottom
    /// sits at rank 0, matching the chain ranks; the subdivision has rank 0.
    pub fn barycentric(base: &RankedPoset) -> Result<StrongFormalSubdivision, SubdivisionError> {
        let bot = base.bottom().ok_or(SubdivisionError::NoBottom("base"))?;
        let (gamma, sigma) = base.barycentric()?;
        let shift = base.rank(bot);
        let base_norm = if shift == 0 {
            base.clone()
        } else {
            let ids = (0..base.len()).map(|i| base.id(i).to_string()).collect();
            let ranks = (0..base.len()).map(|i| base.rank(i) - shift).collect();
            RankedPoset::build_indexed(ids, base.covers(), ranks)?
        };
        StrongFormalSubdivision::new(gamma, base_norm, sigma)
    }

    /// Composes σ: Γ → B with τ: Ω → Γ into στ: Ω → B. The intermediate
    /// posets are matched by element id.
    pub fn compose(
        outer: &StrongFormalSubdivision,
        inner: &StrongFormalSubdivision,
    ) -> Result<StrongFormalSubdivision, SubdivisionError> {
        let mid_to_outer = match_posets(&inner.base, &outer.gamma)?;
        let sigma = inner
            .sigma
            .iter()
            .map(|&y| outer.sigma[mid_to_outer[y]])
            .collect();
        StrongFormalSubdivision::new(inner.gamma.clone(), outer.base.clone(), sigma)
    }

    pub fn gamma(&self) -> &RankedPoset {
        &self.gamma
    }

    pub fn base(&self) -> &RankedPoset {
        &self.base
    }

    /// The image index of `y`.
    pub fn sigma(&self, y: usize) -> usize {
        self.sigma[y]
    }

    /// `rk(σ) = ρ_B(0̂_B) − ρ_Γ(0̂_Γ)`; 0 for genuine subdivisions, positive
    /// for maps that drop dimension (None when a bottom is missing).
    pub fn rank(&self) -> Option<i32> {
        self.rank
    }

    /// The excess `ρ_B(σ(y)) − ρ_Γ(y)` of an element.
    pub fn excess(&self, y: usize) -> i32 {
        self.base.rank(self.sigma[y]) - self.gamma.rank(y)
    }

    /// The rank gap `ρ_B(x) − ρ_Γ(y)` of an admissible pair, i.e. the rank
    /// of the up-restriction `(Γ_{≥y})_x` and the symmetry degree of its
    /// relative local h-polynomial.
    pub fn pair_excess(&self, y: usize, x: usize) -> i32 {
        self.base.rank(x) - self.gamma.rank(y)
    }

    pub fn fiber(&self, x: usize) -> Vec<usize> {
        (0..self.gamma.len()).filter(|&y| self.sigma[y] == x).collect()
    }

    pub fn is_admissible(&self, y: usize, x: usize) -> bool {
        self.base.le(self.sigma[y], x)
    }

    /// The elements of the up-restriction `(Γ_{≥y})_x`, in index order.
    pub fn up_restriction(&self, y: usize, x: usize) -> Vec<usize> {
        (0..self.gamma.len())
            .filter(|&yp| self.gamma.le(y, yp) && self.base.le(self.sigma[yp], x))
            .collect()
    }

    /// The restriction σ: (Γ_{≥y})_x → [σ(y), x] as a subdivision in its
    /// own right; its rank is the excess of `y`.
    pub fn sub_sfs(
        &self,
        y: usize,
        x: usize,
    ) -> Result<StrongFormalSubdivision, SubdivisionError> {
        if !self.is_admissible(y, x) {
            return Err(SubdivisionError::NotAdmissible {
                element: self.gamma.id(y).to_string(),
                target: self.base.id(x).to_string(),
            });
        }
        let keep = self.up_restriction(y, x);
        let (sub_gamma, gmap) = self.gamma.restrict(&keep)?;
        let (sub_base, bmap) = self.base.interval_poset(self.sigma[y], x)?;
        let to_new: HashMap<usize, usize> =
            bmap.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let sigma = gmap.iter().map(|&old| to_new[&self.sigma[old]]).collect();
        StrongFormalSubdivision::new(sub_gamma, sub_base, sigma)
    }

    /// The restriction Γ_x → [0̂_B, x] below a base element.
    pub fn restriction_to(&self, x: usize) -> Result<StrongFormalSubdivision, SubdivisionError> {
        let bot = self.gamma.bottom().ok_or(SubdivisionError::NoBottom("gamma"))?;
        self.sub_sfs(bot, x)
    }

    /// `β`: the number of rank-one elements of Γ mapping onto 1̂_B. Controls
    /// the linear coefficient of the local h-polynomial.
    pub fn beta(&self) -> Result<i64, SubdivisionError> {
        let top = self.base.top().ok_or(SubdivisionError::NoTop)?;
        let bot = self.gamma.bottom().ok_or(SubdivisionError::NoBottom("gamma"))?;
        Ok((0..self.gamma.len())
            .filter(|&y| self.sigma[y] == top && self.gamma.rho(bot, y) == 1)
            .count() as i64)
    }

    /// `μ`: the number of rank-one elements of Γ mapping onto a coatom of B.
    pub fn mu(&self) -> Result<i64, SubdivisionError> {
        let top = self.base.top().ok_or(SubdivisionError::NoTop)?;
        let bot = self.gamma.bottom().ok_or(SubdivisionError::NoBottom("gamma"))?;
        Ok((0..self.gamma.len())
            .filter(|&y| {
                self.gamma.rho(bot, y) == 1 && self.base.rho(self.sigma[y], top) == 1
            })
            .count() as i64)
    }

    /// `ν`: the number of atoms of B.
    pub fn nu(&self) -> Result<i64, SubdivisionError> {
        let bot = self.base.bottom().ok_or(SubdivisionError::NoBottom("base"))?;
        Ok((0..self.base.len()).filter(|&x| self.base.rho(bot, x) == 1).count() as i64)
    }

    pub fn to_json(&self) -> Value {
        let map: serde_json::Map<String, Value> = (0..self.gamma.len())
            .map(|y| {
                (
                    self.gamma.id(y).to_string(),
                    Value::String(self.base.id(self.sigma[y]).to_string()),
                )
            })
            .collect();
        json!({
            "gamma": self.gamma.to_json(),
            "base": self.base.to_json(),
            "sigma": Value::Object(map),
        })
    }

    pub fn from_json(value: &Value) -> Result<StrongFormalSubdivision, SubdivisionError> {
        let obj = value
            .as_object()
            .ok_or_else(|| SubdivisionError::Json("expected an object".into()))?;
        let gamma = RankedPoset::from_json(
            obj.get("gamma")
                .ok_or_else(|| SubdivisionError::Json("missing \"gamma\"".into()))?,
        )?;
        let base = RankedPoset::from_json(
            obj.get("base")
                .ok_or_else(|| SubdivisionError::Json("missing \"base\"".into()))?,
        )?;
        let sigma_obj = obj
            .get("sigma")
            .and_then(Value::as_object)
            .ok_or_else(|| SubdivisionError::Json("missing \"sigma\" object".into()))?;
        let mut map = HashMap::new();
        for (k, v) in sigma_obj {
            let img = v
                .as_str()
                .ok_or_else(|| SubdivisionError::Json(format!("sigma[{k}] must be a string")))?;
            map.insert(k.clone(), img.to_string());
        }
        StrongFormalSubdivision::from_id_map(gamma, base, &map)
    }
}

/// Requires two posets to agree element-for-element (ids, ranks, order) and
/// returns the index translation from `a` to `b`.
fn match_posets(a: &RankedPoset, b: &RankedPoset) -> Result<Vec<usize>, SubdivisionError> {
    if a.len() != b.len() {
        return Err(SubdivisionError::NotComposable(format!(
            "intermediate posets have {} and {} elements",
            a.len(),
            b.len()
        )));
    }
    let mut map = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let j = b.index_of(a.id(i)).ok_or_else(|| {
            SubdivisionError::NotComposable(format!("no counterpart for {}", a.id(i)))
        })?;
        if a.rank(i) != b.rank(j) {
            return Err(SubdivisionError::NotComposable(format!(
                "{} has ranks {} and {}",
                a.id(i),
                a.rank(i),
                b.rank(j)
            )));
        }
        map.push(j);
    }
    for x in 0..a.len() {
        for y in 0..a.len() {
            if a.le(x, y) != b.le(map[x], map[y]) {
                return Err(SubdivisionError::NotComposable(format!(
                    "order disagrees at ({}, {})",
                    a.id(x),
                    a.id(y)
                )));
            }
        }
    }
    Ok(map)
}

/// Memoized invariants of one subdivision: h-polynomials of up-restrictions
/// and the relative local and mixed h-polynomials built from them.
pub struct SfsInvariants<'a> {
    sfs: &'a StrongFormalSubdivision,
    gamma_ctx: KlsContext<'a>,
    base_ctx: KlsContext<'a>,
    h_up_memo: RefCell<HashMap<(usize, usize), LaurentPoly>>,
    local_memo: RefCell<HashMap<(usize, usize), LaurentPoly>>,
    mixed_memo: RefCell<HashMap<(usize, usize), LaurentPoly>>,
}

impl<'a> SfsInvariants<'a> {
    pub fn new(sfs: &'a StrongFormalSubdivision) -> Result<SfsInvariants<'a>, SubdivisionError> {
        Ok(SfsInvariants {
            sfs,
            gamma_ctx: KlsContext::new(&sfs.gamma)?,
            base_ctx: KlsContext::new(&sfs.base)?,
            h_up_memo: RefCell::new(HashMap::new()),
            local_memo: RefCell::new(HashMap::new()),
            mixed_memo: RefCell::new(HashMap::new()),
        })
    }

    pub fn sfs(&self) -> &StrongFormalSubdivision {
        self.sfs
    }

    pub fn gamma_ctx(&self) -> &KlsContext<'a> {
        &self.gamma_ctx
    }

    pub fn base_ctx(&self) -> &KlsContext<'a> {
        &self.base_ctx
    }

    /// `h((Γ_{≥y})_x; t)` for an admissible pair, of degree ≤ the pair
    /// excess `n = ρ_B(x) − ρ_Γ(y)`, from the defining sum
    /// `t^n h(t^{−1}) = Σ g_Γ([y, y']; t)(t − 1)^{n − ρ_Γ(y, y')}` over the
    /// up-restriction — no restricted poset is ever built, since every
    /// interval in sight is an interval of Γ.
    pub fn h_up(&self, y: usize, x: usize) -> Result<LaurentPoly, SubdivisionError> {
        if let Some(p) = self.h_up_memo.borrow().get(&(y, x)) {
            return Ok(p.clone());
        }
        let sfs = self.sfs;
        if !sfs.is_admissible(y, x) {
            return Err(SubdivisionError::NotAdmissible {
                element: sfs.gamma.id(y).to_string(),
                target: sfs.base.id(x).to_string(),
            });
        }
        let n = sfs.pair_excess(y, x);
        let mut rhs = LaurentPoly::zero();
        for yp in sfs.up_restriction(y, x) {
            let k = (n - sfs.gamma.rho(y, yp)) as usize;
            rhs += self.gamma_ctx.g(y, yp)? * self.gamma_ctx.t_minus_one_pow(k);
        }
        let h = rhs.involute().mul_monomial([2 * n, 0, 0, 0]);
        self.h_up_memo.borrow_mut().insert((y, x), h.clone());
        Ok(h)
    }

    /// The h-polynomial of Γ itself (rank taken from the base top).
    pub fn h_gamma(&self) -> Result<LaurentPoly, SubdivisionError> {
        Ok(self.gamma_ctx.h()?)
    }

    /// The relative local h-polynomial `l_B(Γ, x, y; t)`: zero unless
    /// `σ(y) ≤ x`, otherwise the alternating sum of up-restriction
    /// h-polynomials against dual g-polynomials of `[x', x]`. Symmetric with
    /// center `(ρ_B(x) − ρ_Γ(y))/2`.
    pub fn local_h_rel(&self, x: usize, y: usize) -> Result<LaurentPoly, SubdivisionError> {
        if !self.sfs.is_admissible(y, x) {
            return Ok(LaurentPoly::zero());
        }
        if let Some(p) = self.local_memo.borrow().get(&(x, y)) {
            return Ok(p.clone());
        }
        let base = &self.sfs.base;
        let mut sum = LaurentPoly::zero();
        for xp in base.interval(self.sfs.sigma[y], x) {
            let term = self.h_up(y, xp)? * self.base_ctx.g_dual(xp, x)?;
            if base.rho(xp, x) % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        self.local_memo.borrow_mut().insert((x, y), sum.clone());
        Ok(sum)
    }

    /// The local h-polynomial `l_B(Γ; t)` of the whole subdivision.
    pub fn local_h(&self) -> Result<LaurentPoly, SubdivisionError> {
        let (bot, top) = self.ends()?;
        self.local_h_rel(top, bot)
    }

    /// The relative mixed h-polynomial `h_B(Γ, x, y; u, v)`.
    pub fn mixed_h_rel(&self, x: usize, y: usize) -> Result<LaurentPoly, SubdivisionError> {
        if !self.sfs.is_admissible(y, x) {
            return Ok(LaurentPoly::zero());
        }
        if let Some(p) = self.mixed_memo.borrow().get(&(x, y)) {
            return Ok(p.clone());
        }
        let sfs = self.sfs;
        let mut sum = LaurentPoly::zero();
        for xp in sfs.base.interval(sfs.sigma[y], x) {
            let local = self.local_h_rel(xp, y)?.substitute(&SubstMap::t_to_u_over_v())?;
            let g_uv = self.base_ctx.g(xp, x)?.substitute(&SubstMap::t_to_uv())?;
            let v_pow = 2 * sfs.pair_excess(y, xp);
            sum += (local * g_uv).mul_monomial([0, 0, v_pow, 0]);
        }
        self.mixed_memo.borrow_mut().insert((x, y), sum.clone());
        Ok(sum)
    }

    /// The mixed h-polynomial `h_B(Γ; u, v)` of the whole subdivision.
    pub fn mixed_h(&self) -> Result<LaurentPoly, SubdivisionError> {
        let (bot, top) = self.ends()?;
        self.mixed_h_rel(top, bot)
    }

    /// `η(x, y) = t^{−e/2} h((Γ_{≥y})_x; t)`, the pushforward-side kernel
    /// entry; zero when the pair is not admissible.
    pub fn eta(&self, x: usize, y: usize) -> Result<LaurentPoly, SubdivisionError> {
        if !self.sfs.is_admissible(y, x) {
            return Ok(LaurentPoly::zero());
        }
        let e = self.sfs.pair_excess(y, x);
        Ok(self.h_up(y, x)?.mul_monomial([-e, 0, 0, 0]))
    }

    /// `λ(x, y) = t^{−e/2} l_B(Γ, x, y; t)`, the symmetric form of the
    /// relative local h-polynomial.
    pub fn lambda(&self, x: usize, y: usize) -> Result<LaurentPoly, SubdivisionError> {
        let e = self.sfs.pair_excess(y, x);
        Ok(self.local_h_rel(x, y)?.mul_monomial([-e, 0, 0, 0]))
    }

    /// `η̃(x, y) = (uv)^{−e/2} h_B(Γ, x, y; u, v)`.
    pub fn mixed_eta(&self, x: usize, y: usize) -> Result<LaurentPoly, SubdivisionError> {
        let e = self.sfs.pair_excess(y, x);
        Ok(self.mixed_h_rel(x, y)?.mul_monomial([0, -e, -e, 0]))
    }

    /// Pushes an incidence vector on Γ forward to B:
    /// `(σ_* f)(x) = Σ_{σ(y) = x} f(y) q^{ρ_B(x) − ρ_Γ(y)}`.
    pub fn pushforward(&self, f: &[LaurentPoly]) -> Vec<LaurentPoly> {
        let sfs = self.sfs;
        let mut out = vec![LaurentPoly::zero(); sfs.base.len()];
        for (y, val) in f.iter().enumerate() {
            if val.is_zero() {
                continue;
            }
            let x = sfs.sigma[y];
            let k = (sfs.base.rank(x) - sfs.gamma.rank(y)) as usize;
            out[x] += val * LaurentPoly::q().pow(k);
        }
        out
    }

    /// The excess table `f_{i,j} = #{y : ρ_Γ(0̂, y) = i, e(y) = j}` of a
    /// simplicial subdivision.
    pub fn f_table(&self) -> Result<HashMap<(i32, i32), i64>, SubdivisionError> {
        let bot = self.sfs.gamma.bottom().ok_or(SubdivisionError::NoBottom("gamma"))?;
        let mut table = HashMap::new();
        for y in 0..self.sfs.gamma.len() {
            let key = (self.sfs.gamma.rho(bot, y), self.sfs.excess(y));
            *table.entry(key).or_insert(0) += 1;
        }
        Ok(table)
    }

    /// For Γ simplicial over a Boolean base, the local h-polynomial has the
    /// closed form `Σ_y (−1)^{r − ρ_Γ(0̂,y)} t^{r − e(y)} (t − 1)^{e(y)}`.
    /// Returns None when the fast path does not apply.
    pub fn simplicial_local_h(&self) -> Result<Option<LaurentPoly>, SubdivisionError> {
        if !self.simplicial_over_boolean() {
            return Ok(None);
        }
        let (bot, top) = self.ends()?;
        let r = self.sfs.pair_excess(bot, top);
        let mut sum = LaurentPoly::zero();
        for y in 0..self.sfs.gamma.len() {
            let e = self.sfs.excess(y) as usize;
            let term = LaurentPoly::t_half_pow(2 * (r - e as i32))
                * self.gamma_ctx.t_minus_one_pow(e);
            if (r - self.sfs.gamma.rho(bot, y)) % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        Ok(Some(sum))
    }

    /// The mixed companion of [`Self::simplicial_local_h`]:
    /// `Σ_{i,j} f_{i,j} u^i (1 − u)^{r − i − j} (v − u)^j`.
    pub fn simplicial_mixed_h(&self) -> Result<Option<LaurentPoly>, SubdivisionError> {
        if !self.simplicial_over_boolean() {
            return Ok(None);
        }
        let (bot, top) = self.ends()?;
        let r = self.sfs.pair_excess(bot, top);
        let u = LaurentPoly::var(Var::U);
        let one_minus_u = LaurentPoly::one() - &u;
        let v_minus_u = LaurentPoly::var(Var::V) - &u;
        let mut sum = LaurentPoly::zero();
        for ((i, j), count) in self.f_table()? {
            let term = LaurentPoly::monomial([0, 2 * i, 0, 0], count)
                * one_minus_u.pow((r - i - j) as usize)
                * v_minus_u.pow(j as usize);
            sum += term;
        }
        Ok(Some(sum))
    }

    fn simplicial_over_boolean(&self) -> bool {
        self.sfs.gamma.is_simplicial()
            && self.sfs.base.top().is_some()
            && self.sfs.base.is_simplicial()
    }

    fn ends(&self) -> Result<(usize, usize), SubdivisionError> {
        let bot = self.sfs.gamma.bottom().ok_or(SubdivisionError::NoBottom("gamma"))?;
        let top = self.sfs.base.top().ok_or(SubdivisionError::NoTop)?;
        Ok((bot, top))
    }
}

/// Recovers the excess table of a simplicial subdivision from its mixed
/// h-polynomial `Σ c_{a,b} u^a v^b` of symmetry degree `r`: expand
/// `P = Σ c_{a,b} (1 + u)^{r − a − b} (1 + v)^b`; then
/// `f_{i,j} = [u^{r − i − j} v^j] P`.
pub fn f_table_from_mixed(
    mixed: &LaurentPoly,
    r: i32,
) -> Result<HashMap<(i32, i32), i64>, SubdivisionError> {
    let one_plus_u = LaurentPoly::one() + LaurentPoly::var(Var::U);
    let one_plus_v = LaurentPoly::one() + LaurentPoly::var(Var::V);
    let mut p = LaurentPoly::zero();
    for (exps, coeff) in mixed.terms() {
        if exps[0] != 0 || exps[3] != 0 || exps[1] % 2 != 0 || exps[2] % 2 != 0 {
            return Err(SubdivisionError::Json(
                "mixed polynomial must have integer exponents in u, v only".into(),
            ));
        }
        let (a, b) = (exps[1] / 2, exps[2] / 2);
        if a < 0 || b < 0 || a + b > r {
            return Err(SubdivisionError::Json(format!(
                "term u^{a} v^{b} exceeds symmetry degree {r}"
            )));
        }
        p += one_plus_u.pow((r - a - b) as usize)
            * one_plus_v.pow(b as usize)
            * LaurentPoly::monomial([0; 4], coeff.clone());
    }
    let mut table = HashMap::new();
    for (exps, coeff) in p.terms() {
        let (i, j) = (r - exps[1] / 2 - exps[2] / 2, exps[2] / 2);
        let count = i64::try_from(coeff.clone())
            .map_err(|_| SubdivisionError::Json("excess count overflows i64".into()))?;
        table.insert((i, j), count);
    }
    Ok(table)
}

/// The closed form of the local h-polynomial for subdivisions of symmetry
/// degree `r = n + k ≤ 3`, keyed by `(n, k)` = (base rank span, subdivision
/// rank), with `β` rank-one elements over 1̂_B. None outside the table.
pub fn small_case_local_h(n: i32, k: i32, beta: i64) -> Option<LaurentPoly> {
    let t = |e: i32, c: i64| LaurentPoly::monomial([2 * e, 0, 0, 0], c);
    let poly = match (n, k) {
        (0, 0) => t(0, 1),
        (0, 1) => t(0, 1) + t(1, 1),
        (1, 0) => LaurentPoly::zero(),
        (0, 2) => t(0, 1) + t(1, beta - 2) + t(2, 1),
        (1, 1) => t(1, beta - 1),
        (2, 0) => t(1, beta),
        (0, 3) => t(0, 1) + t(1, beta - 3) + t(2, beta - 3) + t(3, 1),
        (1, 2) => t(1, beta - 1) + t(2, beta - 1),
        (2, 1) | (3, 0) => t(1, beta) + t(2, beta),
        _ => return None,
    };
    Some(poly)
}

/// The closed form of the mixed h-polynomial for symmetry degree ≤ 3, keyed
/// like [`small_case_local_h`], with `μ` rank-one elements over coatoms and
/// `ν` atoms in the base.
pub fn small_case_mixed_h(n: i32, k: i32, beta: i64, mu: i64, nu: i64) -> Option<LaurentPoly> {
    let uv = |a: i32, b: i32, c: i64| LaurentPoly::monomial([0, 2 * a, 2 * b, 0], c);
    let poly = match (n, k) {
        (0, 0) | (1, 0) => uv(0, 0, 1),
        (0, 1) => uv(1, 0, 1) + uv(0, 1, 1),
        (0, 2) => uv(2, 0, 1) + uv(1, 1, beta - 2) + uv(0, 2, 1),
        (1, 1) => uv(1, 0, 1) + uv(0, 1, 1) + uv(1, 1, beta - 1),
        (2, 0) => uv(0, 0, 1) + uv(1, 1, beta),
        (0, 3) => uv(3, 0, 1) + uv(2, 1, beta - 3) + uv(1, 2, beta - 3) + uv(0, 3, 1),
        (1, 2) => {
            uv(2, 0, 1)
                + uv(1, 1, mu - 2)
                + uv(0, 2, 1)
                + uv(2, 1, beta - 1)
                + uv(1, 2, beta - 1)
        }
        (2, 1) => {
            uv(1, 0, 1) + uv(0, 1, 1) + uv(1, 1, mu - 2) + uv(2, 1, beta) + uv(1, 2, beta)
        }
        (3, 0) => uv(0, 0, 1) + uv(1, 1, mu + nu - 3) + uv(2, 1, beta) + uv(1, 2, beta),
        _ => return None,
    };
    Some(poly)
}

/// One named identity checked against a subdivision.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Human-readable mismatch description; empty on success.
    pub detail: String,
}

impl CheckResult {
    pub fn pass(name: &str) -> CheckResult {
        CheckResult { name: name.to_string(), passed: true, detail: String::new() }
    }

    pub fn of(name: &str, passed: bool, detail: impl FnOnce() -> String) -> CheckResult {
        if passed {
            CheckResult::pass(name)
        } else {
            CheckResult { name: name.to_string(), passed: false, detail: detail() }
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "name": self.name, "passed": self.passed, "detail": self.detail })
    }
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

fn expect_eq(name: &str, got: &LaurentPoly, want: &LaurentPoly) -> CheckResult {
    CheckResult::of(name, got == want, || format!("got {got}, want {want}"))
}

/// Runs every identity the local and mixed h-polynomials of a single
/// subdivision must satisfy. Checks that need a hypothesis the input lacks
/// (small symmetry degree, simplicial Γ over Boolean base) are omitted from
/// the report rather than reported as passes.
pub fn run_battery(inv: &SfsInvariants) -> Result<Vec<CheckResult>, SubdivisionError> {
    let sfs = inv.sfs();
    let gamma_p = sfs.gamma();
    let base = sfs.base();
    let bot_g = gamma_p.bottom().ok_or(SubdivisionError::NoBottom("gamma"))?;
    base.bottom().ok_or(SubdivisionError::NoBottom("base"))?;
    let top_b = base.top().ok_or(SubdivisionError::NoTop)?;
    let n = base.rank_span();
    let r = sfs.pair_excess(bot_g, top_b);
    let mut out = Vec::new();

    let admissible: Vec<(usize, usize)> = (0..gamma_p.len())
        .flat_map(|y| (0..base.len()).map(move |x| (y, x)))
        .filter(|&(y, x)| sfs.is_admissible(y, x))
        .collect();

    let local = inv.local_h()?;
    let mixed = inv.mixed_h()?;
    let h_gamma = inv.h_gamma()?;

    out.push(expect_eq(
        "local-h-symmetry",
        &local.involute().mul_monomial([2 * r, 0, 0, 0]),
        &local,
    ));

    // Constant and linear coefficients of the local h-polynomial, and their
    // mirror images at the top, are pinned by β alone.
    {
        let beta = sfs.beta()?;
        let c0 = if n == 0 { 1 } else { 0 };
        let c1 = match n {
            0 => beta - r as i64,
            1 => beta - 1,
            _ => beta,
        };
        let mut ok = local.coeff_int(Var::T, 0) == BigInt::from(c0)
            && local.coeff_int(Var::T, r) == BigInt::from(c0);
        if r >= 2 {
            ok = ok
                && local.coeff_int(Var::T, 1) == BigInt::from(c1)
                && local.coeff_int(Var::T, r - 1) == BigInt::from(c1);
        }
        out.push(CheckResult::of("local-h-boundary-coefficients", ok, || {
            format!("local h {local} disagrees with β = {beta} at the ends")
        }));
    }

    // h((Γ_{≥y})_x) = Σ_{x' ∈ [σ(y), x]} l_B(Γ, x', y) g([x', x]) — the
    // relative recovery of h from local h, swept over all admissible pairs.
    {
        let mut bad = None;
        for &(y, x) in &admissible {
            let mut sum = LaurentPoly::zero();
            for xp in base.interval(sfs.sigma(y), x) {
                sum += inv.local_h_rel(xp, y)? * inv.base_ctx().g(xp, x)?;
            }
            if sum != inv.h_up(y, x)? {
                bad = Some((y, x));
                break;
            }
        }
        out.push(CheckResult::of("h-from-local", bad.is_none(), || {
            let (y, x) = bad.unwrap();
            format!("recovery fails at ({}, {})", gamma_p.id(y), base.id(x))
        }));
    }

    out.push(expect_eq("h-up-matches-poset-h", &inv.h_up(bot_g, top_b)?, &h_gamma));

    // Full-rank fiber elements contribute λ = 1.
    {
        let mut bad = None;
        'outer: for x in 0..base.len() {
            for y in sfs.fiber(x) {
                if gamma_p.rank(y) == base.rank(x) && !inv.local_h_rel(x, y)?.is_one() {
                    bad = Some((y, x));
                    break 'outer;
                }
            }
        }
        out.push(CheckResult::of("full-rank-fiber-lambda", bad.is_none(), || {
            let (y, x) = bad.unwrap();
            format!("λ({}, {}) ≠ 1", base.id(x), gamma_p.id(y))
        }));
    }

    // The same h recovered from exact fibers instead of the whole
    // up-restriction: h((Γ_{≥y})_x) = Σ_{σ(y') = x} g([y, y'])(t−1)^{ρ_B(x)−ρ_Γ(y')}.
    {
        let mut bad = None;
        for &(y, x) in &admissible {
            let mut rhs = LaurentPoly::zero();
            for yp in sfs.fiber(x) {
                if gamma_p.le(y, yp) {
                    let k = (base.rank(x) - gamma_p.rank(yp)) as usize;
                    rhs += inv.gamma_ctx().g(y, yp)? * inv.gamma_ctx().t_minus_one_pow(k);
                }
            }
            if rhs != inv.h_up(y, x)? {
                bad = Some((y, x));
                break;
            }
        }
        out.push(CheckResult::of("interior-reversal", bad.is_none(), || {
            let (y, x) = bad.unwrap();
            format!("fiber sum fails at ({}, {})", gamma_p.id(y), base.id(x))
        }));
    }

    // Leading coefficients of h((Γ_{≥y})_x): top 1 and β_{x,y} − e below it
    // when σ(y) = x; degree drop with leading β_{x,y} when σ(y) < x.
    {
        let mut bad = None;
        for &(y, x) in &admissible {
            let e = sfs.pair_excess(y, x);
            let h = inv.h_up(y, x)?;
            let beta_xy: i64 = sfs
                .fiber(x)
                .into_iter()
                .filter(|&yp| gamma_p.le(y, yp) && gamma_p.rho(y, yp) == 1)
                .count() as i64;
            let ok = if sfs.sigma(y) == x {
                h.coeff_int(Var::T, e) == BigInt::one()
                    && (e == 0 || h.coeff_int(Var::T, e - 1) == BigInt::from(beta_xy - e as i64))
            } else {
                h.coeff_int(Var::T, e).is_zero()
                    && h.coeff_int(Var::T, e - 1) == BigInt::from(beta_xy)
            };
            if !ok {
                bad = Some((y, x));
                break;
            }
        }
        out.push(CheckResult::of("leading-coefficients", bad.is_none(), || {
            let (y, x) = bad.unwrap();
            format!("leading terms wrong at ({}, {})", gamma_p.id(y), base.id(x))
        }));
    }

    out.push(expect_eq("mixed-swap-symmetry", &mixed.substitute(&SubstMap::swap_uv())?, &mixed));

    out.push(expect_eq(
        "mixed-specializes-to-h",
        &mixed.substitute(&SubstMap::to_one(Var::V))?,
        &h_gamma.substitute(&SubstMap::identity().map_var(
            Var::T,
            MonomialImage::of_var(Var::U),
        ))?,
    ));

    out.push(expect_eq(
        "mixed-u-zero",
        &mixed.eval_var_zero(Var::U)?,
        &LaurentPoly::monomial([0, 0, 2 * (r - n), 0], 1),
    ));

    // Combined degree ≤ r, with the top slice carrying the local
    // h-polynomial: slice_r = v^r l(u v^{−1}).
    {
        let deg_ok = mixed
            .max_combined_exp()
            .map(|d| d.twice <= 2 * r)
            .unwrap_or(true);
        let top_slice = mixed.filter_terms(|e| e[1] + e[2] == 2 * r);
        let expected = local
            .substitute(&SubstMap::t_to_u_over_v())?
            .mul_monomial([0, 0, 2 * r, 0]);
        out.push(CheckResult::of(
            "mixed-top-slice",
            deg_ok && top_slice == expected,
            || format!("top slice {top_slice}, want {expected}"),
        ));
    }

    // Reciprocity: (uv)^r h(u^{−1}, v^{−1}) = Σ_x h_{[0̂,x]}(Γ_x)(uv − 1)^{ρ(x, 1̂)}.
    {
        let uv_minus_one =
            LaurentPoly::monomial([0, 2, 2, 0], 1) - LaurentPoly::one();
        let mut rhs = LaurentPoly::zero();
        for x in 0..base.len() {
            rhs += inv.mixed_h_rel(x, bot_g)? * uv_minus_one.pow(base.rho(x, top_b) as usize);
        }
        out.push(expect_eq(
            "mixed-reciprocity",
            &mixed.involute().mul_monomial([0, 2 * r, 2 * r, 0]),
            &rhs,
        ));
    }

    // Inversion: v^r l(u v^{−1}) = Σ_x h_{[0̂,x]}(Γ_x)(−1)^{ρ(x,1̂)} g([x,1̂]*; uv).
    {
        let mut rhs = LaurentPoly::zero();
        for x in 0..base.len() {
            let term = inv.mixed_h_rel(x, bot_g)?
                * inv.base_ctx().g_dual(x, top_b)?.substitute(&SubstMap::t_to_uv())?;
            if base.rho(x, top_b) % 2 == 0 {
                rhs += term;
            } else {
                rhs -= term;
            }
        }
        let lhs = local
            .substitute(&SubstMap::t_to_u_over_v())?
            .mul_monomial([0, 0, 2 * r, 0]);
        out.push(expect_eq("mixed-inversion", &lhs, &rhs));
    }

    if n == 0 {
        out.push(expect_eq("point-base-local-is-h", &local, &h_gamma));
    }

    if let Some(expected) = small_case_local_h(n, r - n, sfs.beta()?) {
        out.push(expect_eq("small-case-local-h", &local, &expected));
    }
    if let Some(expected) = small_case_mixed_h(n, r - n, sfs.beta()?, sfs.mu()?, sfs.nu()?) {
        out.push(expect_eq("small-case-mixed-h", &mixed, &expected));
    }

    if let Some(fast) = inv.simplicial_local_h()? {
        out.push(expect_eq("simplicial-local-h", &fast, &local));
    }
    if let Some(fast) = inv.simplicial_mixed_h()? {
        out.push(expect_eq("simplicial-mixed-h", &fast, &mixed));
        let recovered = f_table_from_mixed(&mixed, r)?;
        let mut direct = inv.f_table()?;
        direct.retain(|_, c| *c != 0);
        let mut recovered_nz = recovered;
        recovered_nz.retain(|_, c| *c != 0);
        out.push(CheckResult::of("f-table-recovery", recovered_nz == direct, || {
            format!("recovered {recovered_nz:?}, counted {direct:?}")
        }));
    }

    // Pushforwards of acceptable vectors stay acceptable: σ_*(e_y ∗ γ_Γ)
    // against the base kernel, for every y.
    {
        let kappa_b = IncidenceFn::kernel(base);
        let gamma_inc = gamma_fn(inv.gamma_ctx())?;
        let mut bad = None;
        for y in 0..gamma_p.len() {
            let vec = act(gamma_p, &unit_vector(gamma_p.len(), y), &gamma_inc);
            let pushed = inv.pushforward(&vec);
            if !is_acceptable(base, &pushed, &kappa_b) {
                bad = Some(y);
                break;
            }
        }
        out.push(CheckResult::of("pushforward-acceptability", bad.is_none(), || {
            format!("σ_*(e_{{{}}} ∗ γ) is not acceptable", gamma_p.id(bad.unwrap()))
        }));
    }

    Ok(out)
}

/// Checks the composition laws for στ: Ω → B factored as τ: Ω → Γ (inner)
/// followed by σ: Γ → B (outer). The engines may index the shared poset Γ
/// differently; elements are matched by id.
pub fn check_composition(
    outer: &SfsInvariants,
    inner: &SfsInvariants,
    composed: &SfsInvariants,
) -> Result<Vec<CheckResult>, SubdivisionError> {
    let omega = inner.sfs().gamma();
    let base = outer.sfs().base();
    let mid_to_outer = match_posets(inner.sfs().base(), outer.sfs().gamma())?;
    match_posets(composed.sfs().gamma(), omega)?;
    match_posets(composed.sfs().base(), base)?;
    let mid_len = mid_to_outer.len();
    let mut out = Vec::new();

    // l_B(Ω, x, z) = Σ_y l_B(Γ, x, y) l_Γ(Ω, y, z).
    {
        let mut bad = None;
        'pairs: for z in 0..omega.len() {
            for x in 0..base.len() {
                let mut sum = LaurentPoly::zero();
                for y in 0..mid_len {
                    let inner_l = inner.local_h_rel(y, z)?;
                    if inner_l.is_zero() {
                        continue;
                    }
                    sum += outer.local_h_rel(x, mid_to_outer[y])? * inner_l;
                }
                if sum != composed.local_h_rel(x, z)? {
                    bad = Some((z, x));
                    break 'pairs;
                }
            }
        }
        out.push(CheckResult::of("compose-local", bad.is_none(), || {
            let (z, x) = bad.unwrap();
            format!("composition fails at ({}, {})", omega.id(z), base.id(x))
        }));
    }

    // h_B(Ω, x, z; u, v) = Σ_y h_B(Γ, x, y; u, v) v^{ρ_Γ(y) − ρ_Ω(z)} l_Γ(Ω, y, z; u v^{−1}).
    {
        let mid = inner.sfs().base();
        let mut bad = None;
        'pairs: for z in 0..omega.len() {
            for x in 0..base.len() {
                let mut sum = LaurentPoly::zero();
                for y in 0..mid_len {
                    let inner_l = inner.local_h_rel(y, z)?;
                    if inner_l.is_zero() {
                        continue;
                    }
                    let v_pow = 2 * (mid.rank(y) - omega.rank(z));
                    sum += (outer.mixed_h_rel(x, mid_to_outer[y])?
                        * inner_l.substitute(&SubstMap::t_to_u_over_v())?)
                    .mul_monomial([0, 0, v_pow, 0]);
                }
                if sum != composed.mixed_h_rel(x, z)? {
                    bad = Some((z, x));
                    break 'pairs;
                }
            }
        }
        out.push(CheckResult::of("compose-mixed", bad.is_none(), || {
            let (z, x) = bad.unwrap();
            format!("composition fails at ({}, {})", omega.id(z), base.id(x))
        }));
    }

    Ok(out)
}

/// The three-variable local invariant `l_B(Ω, Γ; u, v)` of a composable
/// pair τ: Ω → Γ, σ: Γ → B:
/// `Σ_y l_{[σ(y), 1̂_B]}(Γ_{≥y}; uv) · v^{rk Ω_y} · l_{[0̂, y]}(Ω_y; u v^{−1})`.
pub fn three_var_local(
    outer: &SfsInvariants,
    inner: &SfsInvariants,
) -> Result<LaurentPoly, SubdivisionError> {
    let mid_to_outer = match_posets(inner.sfs().base(), outer.sfs().gamma())?;
    let omega = inner.sfs().gamma();
    let mid = inner.sfs().base();
    let top_b = outer.sfs().base().top().ok_or(SubdivisionError::NoTop)?;
    let bot_o = omega.bottom().ok_or(SubdivisionError::NoBottom("gamma"))?;
    let mut sum = LaurentPoly::zero();
    for y in 0..mid.len() {
        let inner_l = inner.local_h_rel(y, bot_o)?;
        if inner_l.is_zero() {
            continue;
        }
        let outer_l = outer
            .local_h_rel(top_b, mid_to_outer[y])?
            .substitute(&SubstMap::t_to_uv())?;
        let v_pow = 2 * (mid.rank(y) - omega.rank(bot_o));
        sum += (outer_l * inner_l.substitute(&SubstMap::t_to_u_over_v())?)
            .mul_monomial([0, 0, v_pow, 0]);
    }
    Ok(sum)
}

/// The three-variable mixed invariant `h_B(Ω, Γ; u, v, w)`:
/// `Σ_x w^{rk Ω_x} l_{[0̂,x]}(Ω_x, Γ_x; u, v) g([x, 1̂]; u v w²)`.
pub fn three_var_mixed(
    outer: &SfsInvariants,
    inner: &SfsInvariants,
) -> Result<LaurentPoly, SubdivisionError> {
    let mid_to_outer = match_posets(inner.sfs().base(), outer.sfs().gamma())?;
    let omega = inner.sfs().gamma();
    let mid = inner.sfs().base();
    let base = outer.sfs().base();
    let bot_o = omega.bottom().ok_or(SubdivisionError::NoBottom("gamma"))?;
    let top_b = base.top().ok_or(SubdivisionError::NoTop)?;
    let mut sum = LaurentPoly::zero();
    for x in 0..base.len() {
        let mut inner_sum = LaurentPoly::zero();
        for y in 0..mid.len() {
            let inner_l = inner.local_h_rel(y, bot_o)?;
            if inner_l.is_zero() {
                continue;
            }
            let outer_l = outer
                .local_h_rel(x, mid_to_outer[y])?
                .substitute(&SubstMap::t_to_uv())?;
            if outer_l.is_zero() {
                continue;
            }
            let v_pow = 2 * (mid.rank(y) - omega.rank(bot_o));
            inner_sum += (outer_l * inner_l.substitute(&SubstMap::t_to_u_over_v())?)
                .mul_monomial([0, 0, v_pow, 0]);
        }
        let g_uvw = outer.base_ctx().g(x, top_b)?.substitute(&SubstMap::t_to_uvw2())?;
        let w_pow = 2 * (base.rank(x) - omega.rank(bot_o));
        sum += (inner_sum * g_uvw).mul_monomial([0, 0, 0, w_pow]);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::square_face_poset;

    fn poset(ids: &[&str], covers: &[(&str, &str)], ranks: &[(&str, i32)]) -> RankedPoset {
        RankedPoset::build(
            ids.iter().map(|s| s.to_string()).collect(),
            &covers
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect::<Vec<_>>(),
            &ranks.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        )
        .unwrap()
    }

    fn t_poly(coeffs: &[(i32, i64)]) -> LaurentPoly {
        coeffs
            .iter()
            .map(|&(e, c)| LaurentPoly::monomial([2 * e, 0, 0, 0], c))
            .fold(LaurentPoly::zero(), |a, b| a + b)
    }

    fn uv_poly(terms: &[(i32, i32, i64)]) -> LaurentPoly {
        terms
            .iter()
            .map(|&(a, b, c)| LaurentPoly::monomial([0, 2 * a, 2 * b, 0], c))
            .fold(LaurentPoly::zero(), |a, b| a + b)
    }

    #[test]
    fn identity_subdivision_has_zero_local_h() {
        let square = square_face_poset();
        let sfs = StrongFormalSubdivision::identity(&square).unwrap();
        assert_eq!(sfs.rank(), Some(0));
        let inv = SfsInvariants::new(&sfs).unwrap();
        assert!(inv.local_h().unwrap().is_zero());
        // The mixed h-polynomial of the identity is g(B; uv).
        assert_eq!(inv.mixed_h().unwrap(), uv_poly(&[(0, 0, 1), (1, 1, 1)]));
        let results = run_battery(&inv).unwrap();
        assert!(all_passed(&results), "{results:?}");
    }

    #[test]
    fn barycentric_boolean_matches_permutation_statistics() {
        // Chains in B₃ biject with permutations of {1,2,3}; h collects
        // excedances, local h restricts to derangements, and the mixed
        // polynomial pairs excedances of w with those of w⁻¹.
        let sfs = StrongFormalSubdivision::barycentric(&RankedPoset::boolean_algebra(3)).unwrap();
        assert_eq!(sfs.gamma().len(), 26);
        assert_eq!(sfs.rank(), Some(0));
        let inv = SfsInvariants::new(&sfs).unwrap();
        assert_eq!(inv.h_gamma().unwrap(), t_poly(&[(0, 1), (1, 4), (2, 1)]));
        assert_eq!(inv.local_h().unwrap(), t_poly(&[(1, 1), (2, 1)]));
        assert_eq!(
            inv.mixed_h().unwrap(),
            uv_poly(&[(0, 0, 1), (1, 1, 3), (2, 1, 1), (1, 2, 1)])
        );
        let results = run_battery(&inv).unwrap();
        assert!(all_passed(&results), "{results:?}");
    }

    /// The boundary of a square collapsed to a single rank-2 point: the
    /// smallest base with a non-trivial subdivision rank.
    fn boundary_square_over_point() -> StrongFormalSubdivision {
        let square = square_face_poset();
        let top = square.top().unwrap();
        let keep: Vec<usize> = (0..square.len()).filter(|&i| i != top).collect();
        let (boundary, _) = square.restrict(&keep).unwrap();
        let point = RankedPoset::build_indexed(vec!["P".into()], &[], vec![2]).unwrap();
        let sigma = vec![0; boundary.len()];
        StrongFormalSubdivision::new(boundary, point, sigma).unwrap()
    }

    #[test]
    fn boundary_complex_over_point() {
        let sfs = boundary_square_over_point();
        assert_eq!(sfs.rank(), Some(2));
        assert_eq!(sfs.beta().unwrap(), 4);
        let inv = SfsInvariants::new(&sfs).unwrap();
        let h = t_poly(&[(0, 1), (1, 2), (2, 1)]);
        assert_eq!(inv.h_gamma().unwrap(), h);
        assert_eq!(inv.local_h().unwrap(), h);
        assert_eq!(inv.mixed_h().unwrap(), uv_poly(&[(2, 0, 1), (1, 1, 2), (0, 2, 1)]));
        assert_eq!(inv.simplicial_local_h().unwrap().unwrap(), h);
        let results = run_battery(&inv).unwrap();
        assert!(all_passed(&results), "{results:?}");
    }

    /// A segment split at an interior vertex, over the face poset of the
    /// segment: ids `e < a, m, b < am, mb` over `e < A, B < AB`.
    fn split_segment() -> StrongFormalSubdivision {
        let gamma = poset(
            &["e", "a", "m", "b", "am", "mb"],
            &[
                ("e", "a"),
                ("e", "m"),
                ("e", "b"),
                ("a", "am"),
                ("m", "am"),
                ("m", "mb"),
                ("b", "mb"),
            ],
            &[("e", 0), ("a", 1), ("m", 1), ("b", 1), ("am", 2), ("mb", 2)],
        );
        let base = poset(
            &["e", "A", "B", "AB"],
            &[("e", "A"), ("e", "B"), ("A", "AB"), ("B", "AB")],
            &[("e", 0), ("A", 1), ("B", 1), ("AB", 2)],
        );
        let map: HashMap<String, String> = [
            ("e", "e"),
            ("a", "A"),
            ("b", "B"),
            ("m", "AB"),
            ("am", "AB"),
            ("mb", "AB"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        StrongFormalSubdivision::from_id_map(gamma, base, &map).unwrap()
    }

    #[test]
    fn split_segment_invariants() {
        let sfs = split_segment();
        assert_eq!(sfs.rank(), Some(0));
        assert_eq!(sfs.beta().unwrap(), 1);
        let inv = SfsInvariants::new(&sfs).unwrap();
        assert_eq!(inv.h_gamma().unwrap(), t_poly(&[(0, 1), (1, 1)]));
        assert_eq!(inv.local_h().unwrap(), t_poly(&[(1, 1)]));
        assert_eq!(inv.mixed_h().unwrap(), uv_poly(&[(0, 0, 1), (1, 1, 1)]));
        let results = run_battery(&inv).unwrap();
        assert!(all_passed(&results), "{results:?}");
    }

    /// Two tetrahedra glued along a triangle that is pushed into the
    /// interior of a single tetrahedron: the smallest subdivision whose
    /// local h-polynomial has a negative coefficient.
    fn glued_tetrahedra() -> StrongFormalSubdivision {
        let facets: [&[u8]; 2] = [&[1, 2, 3, 4], &[1, 2, 3, 5]];
        let mut subsets: Vec<Vec<u8>> = vec![vec![]];
        for facet in facets {
            for mask in 1u32..(1 << facet.len()) {
                let s: Vec<u8> = facet
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &v)| v)
                    .collect();
                if !subsets.contains(&s) {
                    subsets.push(s);
                }
            }
        }
        subsets.sort_by_key(|s| (s.len(), s.clone()));
        let name = |s: &[u8]| {
            if s.is_empty() {
                "e".to_string()
            } else {
                s.iter().map(u8::to_string).collect::<Vec<_>>().join(".")
            }
        };
        let ids: Vec<String> = subsets.iter().map(|s| name(s)).collect();
        let ranks: Vec<i32> = subsets.iter().map(|s| s.len() as i32).collect();
        let mut covers = Vec::new();
        for (i, s) in subsets.iter().enumerate() {
            for (j, t) in subsets.iter().enumerate() {
                if t.len() == s.len() + 1 && s.iter().all(|v| t.contains(v)) {
                    covers.push((i, j));
                }
            }
        }
        let gamma = RankedPoset::build_indexed(ids, &covers, ranks).unwrap();
        assert_eq!(gamma.len(), 24);

        let base = RankedPoset::boolean_algebra(4);
        // Vertex 5 sits in the relative interior of the original facet
        // 1.2.3; the glued triangle 1.2.3 itself is pushed inside, so it and
        // everything above it map to the full simplex.
        let sigma: Vec<usize> = (0..gamma.len())
            .map(|y| {
                let id = gamma.id(y);
                let image = match id {
                    "5" | "1.5" | "2.5" | "3.5" | "1.2.5" | "1.3.5" | "2.3.5" => "1.2.3",
                    "1.2.3" | "1.2.3.4" | "1.2.3.5" => "1.2.3.4",
                    other => other,
                };
                base.index_of(image).unwrap()
            })
            .collect();
        StrongFormalSubdivision::new(gamma, base, sigma).unwrap()
    }

    #[test]
    fn glued_tetrahedra_has_negative_local_h() {
        let sfs = glued_tetrahedra();
        let inv = SfsInvariants::new(&sfs).unwrap();
        assert_eq!(inv.h_gamma().unwrap(), t_poly(&[(0, 1), (1, 1)]));
        assert_eq!(inv.local_h().unwrap(), t_poly(&[(2, -1)]));
        assert_eq!(
            inv.mixed_h().unwrap(),
            uv_poly(&[(0, 0, 1), (2, 1, 1), (1, 2, 1), (2, 2, -1)])
        );
        let results = run_battery(&inv).unwrap();
        assert!(all_passed(&results), "{results:?}");
    }

    #[test]
    fn sub_sfs_rank_is_the_excess() {
        let sfs = StrongFormalSubdivision::barycentric(&RankedPoset::boolean_algebra(3)).unwrap();
        let gamma = sfs.gamma();
        let base = sfs.base();
        for y in 0..gamma.len() {
            for x in 0..base.len() {
                if !sfs.is_admissible(y, x) {
                    continue;
                }
                let sub = sfs.sub_sfs(y, x).unwrap();
                assert_eq!(sub.rank(), Some(sfs.excess(y)));
            }
        }
    }

    #[test]
    fn composition_laws_hold_for_iterated_barycentric() {
        let square = square_face_poset();
        let outer = StrongFormalSubdivision::barycentric(&square).unwrap();
        let inner = StrongFormalSubdivision::barycentric(outer.gamma()).unwrap();
        let composed = StrongFormalSubdivision::compose(&outer, &inner).unwrap();
        let outer_inv = SfsInvariants::new(&outer).unwrap();
        let inner_inv = SfsInvariants::new(&inner).unwrap();
        let composed_inv = SfsInvariants::new(&composed).unwrap();
        let results = check_composition(&outer_inv, &inner_inv, &composed_inv).unwrap();
        assert!(all_passed(&results), "{results:?}");
    }

    #[test]
    fn three_variable_invariants_specialize_over_identity() {
        // With σ = id the pair invariants collapse to the single-map ones:
        // l_B(Ω, B; u, v) = v^{rk Ω} l_B(Ω; u v^{−1}) and
        // h_B(Ω, B; u, v, w) = h_B(Ω; uw, vw).
        let b2 = RankedPoset::boolean_algebra(2);
        let outer_sfs = StrongFormalSubdivision::identity(&b2).unwrap();
        let inner_sfs = StrongFormalSubdivision::barycentric(&b2).unwrap();
        let outer = SfsInvariants::new(&outer_sfs).unwrap();
        let inner = SfsInvariants::new(&inner_sfs).unwrap();

        let local3 = three_var_local(&outer, &inner).unwrap();
        assert_eq!(local3, uv_poly(&[(1, 1, 1)]));

        let mixed3 = three_var_mixed(&outer, &inner).unwrap();
        let expected = inner
            .mixed_h()
            .unwrap()
            .substitute(
                &SubstMap::identity()
                    .map_var(
                        Var::U,
                        MonomialImage::product(&[(Var::U, 1), (Var::W, 1)]),
                    )
                    .map_var(
                        Var::V,
                        MonomialImage::product(&[(Var::V, 1), (Var::W, 1)]),
                    ),
            )
            .unwrap();
        assert_eq!(mixed3, expected);
    }

    #[test]
    fn axiom_violations_get_distinct_errors() {
        let good = split_segment();
        let gamma = good.gamma().clone();
        let base = good.base().clone();
        let idx = |id: &str| gamma.index_of(id).unwrap();
        let bidx = |id: &str| base.index_of(id).unwrap();
        let sigma: Vec<usize> = (0..gamma.len()).map(|y| good.sigma(y)).collect();

        // Sending m to one endpoint keeps order and ranks but breaks the
        // fiber sum over (e, A).
        let mut bad = sigma.clone();
        bad[idx("m")] = bidx("A");
        match StrongFormalSubdivision::new(gamma.clone(), base.clone(), bad) {
            Err(SubdivisionError::FiberSumViolation { sum: 2, .. }) => {}
            other => panic!("want FiberSumViolation with sum 2, got {other:?}"),
        }

        // Sending a to AB breaks order preservation nowhere (a has no upper
        // covers except am → AB) but leaves A without preimage.
        let mut bad = sigma.clone();
        bad[idx("a")] = bidx("AB");
        match StrongFormalSubdivision::new(gamma.clone(), base.clone(), bad) {
            Err(SubdivisionError::NotSurjective { target }) => assert_eq!(target, "A"),
            other => panic!("want NotSurjective, got {other:?}"),
        }

        // Sending am to A reverses order against m → AB.
        let mut bad = sigma.clone();
        bad[idx("am")] = bidx("A");
        match StrongFormalSubdivision::new(gamma.clone(), base.clone(), bad) {
            Err(SubdivisionError::NotOrderPreserving { .. }) => {}
            other => panic!("want NotOrderPreserving, got {other:?}"),
        }

        // Shifting all base ranks up by one leaves order and rank montony
        // intact but starves every pair of full-rank fiber elements.
        let shifted = poset(
            &["e", "A", "B", "AB"],
            &[("e", "A"), ("e", "B"), ("A", "AB"), ("B", "AB")],
            &[("e", 1), ("A", 2), ("B", 2), ("AB", 3)],
        );
        match StrongFormalSubdivision::new(gamma, shifted, sigma) {
            Err(SubdivisionError::NotStronglySurjective { .. }) => {}
            other => panic!("want NotStronglySurjective, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip_preserves_the_map() {
        let sfs = split_segment();
        let json = sfs.to_json();
        let back = StrongFormalSubdivision::from_json(&json).unwrap();
        assert_eq!(back.gamma().len(), sfs.gamma().len());
        for y in 0..sfs.gamma().len() {
            let id = sfs.gamma().id(y);
            let y2 = back.gamma().index_of(id).unwrap();
            assert_eq!(
                back.base().id(back.sigma(y2)),
                sfs.base().id(sfs.sigma(y)),
            );
        }
        assert_eq!(json, back.to_json());
    }

    #[test]
    fn small_case_tables_agree_with_direct_computation() {
        // (n, k) = (2, 0) with β = 1: the split segment.
        assert_eq!(small_case_local_h(2, 0, 1).unwrap(), t_poly(&[(1, 1)]));
        // (n, k) = (0, 2) with β = 4: the boundary of the square.
        assert_eq!(
            small_case_mixed_h(0, 2, 4, 0, 1).unwrap(),
            uv_poly(&[(2, 0, 1), (1, 1, 2), (0, 2, 1)])
        );
        // Identity on B₃ is (3, 0) with β = μ = 0, ν = 3.
        let b3 = RankedPoset::boolean_algebra(3);
        let sfs = StrongFormalSubdivision::identity(&b3).unwrap();
        let inv = SfsInvariants::new(&sfs).unwrap();
        assert_eq!(
            small_case_mixed_h(3, 0, 0, 0, 3).unwrap(),
            inv.mixed_h().unwrap()
        );
    }
}
