//! Lattice-point invariants of polytopes and of their subdivisions.
//!
//! The one-variable side counts points: the h*-polynomial of a lattice
//! polytope, its local h*-polynomial, and the box-point oracle that
//! recomputes both for a simplex from half-open parallelepiped residues.
//! The two- and three-variable side attaches finer invariants to a
//! subdivided polytope: the mixed h*-polynomial of a single polytope, the
//! limit mixed pair of a subdivision, and its three-variable refinement,
//! together with the diamond tables that display their coefficients.
//!
//! Conventions used throughout: the empty polytope has dimension −1 and
//! h* = l* = 1; sums over the faces of a complex include the empty face;
//! one-variable polynomials live in `t`, two-variable ones in `u, v`, and
//! the refinement adds `w`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::kls::{is_acceptable, IncidenceFn, KlsContext, KlsError};
use crate::laurent::{ExpVec, HalfExp, LaurentError, LaurentPoly, MonomialImage, SubstMap, Var};
use crate::linalg::{column_hermite, invert, solve, to_rational_mat, QMat, QVec, ZMat};
use crate::polytope::{CellComplex, FaceLattice, LatticePolytope, PolytopeError};
use crate::subdivision::{CheckResult, SfsInvariants, StrongFormalSubdivision, SubdivisionError};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EhrhartError {
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Subdivision(#[from] SubdivisionError),
    #[error(transparent)]
    Kls(#[from] KlsError),
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error("expected a simplex, got {got} vertices in dimension {dim}")]
    NotSimplex { got: usize, dim: i32 },
    #[error("box decomposition too large: normalized volume {volume}")]
    BoxTooLarge { volume: BigInt },
    #[error("cell {cell} is not contained in a single cell of the coarser complex")]
    NotARefinement { cell: String },
    #[error("the two complexes do not subdivide the same polytope")]
    BaseMismatch,
    #[error("{0}")]
    Malformed(String),
}

// ---------------------------------------------------------------------------
// Point counting.

/// The h*-polynomial of a lattice polytope: the numerator of the Ehrhart
/// series `Σ_m #(mP ∩ M) t^m = h*(t) / (1−t)^{dim P + 1}`, computed from
/// the first `dim P + 1` dilate counts. The empty polytope gives 1.
pub fn hstar_polynomial(p: &LatticePolytope) -> LaurentPoly {
    if p.is_empty() {
        return LaurentPoly::one();
    }
    let d = p.dim() as usize;
    let counts: Vec<BigInt> = (0..=d as u32).map(|m| p.count_lattice_points(m)).collect();
    let mut out = LaurentPoly::zero();
    for j in 0..=d {
        let mut c = BigInt::zero();
        for (i, count) in counts[..=j].iter().rev().enumerate() {
            let term = binomial(BigInt::from(d as i64 + 1), BigInt::from(i as i64)) * count;
            if i % 2 == 0 {
                c += term;
            } else {
                c -= term;
            }
        }
        out += LaurentPoly::monomial([2 * j as i32, 0, 0, 0], c);
    }
    out
}

/// Coefficients (constant term first) of the counting polynomial
/// `m ↦ #(mP ∩ M)`, solved exactly from the dilates `0..=dim P`.
pub fn ehrhart_coefficients(p: &LatticePolytope) -> Result<QVec, EhrhartError> {
    if p.is_empty() {
        return Err(EhrhartError::Malformed(
            "the empty polytope has no counting polynomial".into(),
        ));
    }
    let d = p.dim() as usize;
    let matrix: QMat = (0..=d)
        .map(|m| {
            (0..=d)
                .map(|k| BigRational::from(BigInt::from(m as i64).pow(k as u32)))
                .collect()
        })
        .collect();
    let rhs: QVec = (0..=d)
        .map(|m| BigRational::from(p.count_lattice_points(m as u32)))
        .collect();
    solve(&matrix, &rhs)
        .ok_or_else(|| EhrhartError::Malformed("interpolation system is singular".into()))
}

/// Evaluates a counting polynomial at an integer dilate, which may be
/// negative.
pub fn ehrhart_value(coeffs: &[BigRational], m: i64) -> BigRational {
    let x = BigRational::from(BigInt::from(m));
    coeffs
        .iter()
        .rev()
        .fold(BigRational::zero(), |acc, c| acc * &x + c)
}

// ---------------------------------------------------------------------------
// Per-face data of a single polytope.

/// The h*- and local h*-polynomials of every face of a nonempty polytope,
/// indexed by its face lattice (the bottom element is the empty face, with
/// h* = l* = 1).
pub struct FaceTable {
    lattice: FaceLattice,
    polytopes: Vec<LatticePolytope>,
    hstar: Vec<LaurentPoly>,
    local: Vec<LaurentPoly>,
}

impl FaceTable {
    pub fn new(p: &LatticePolytope) -> Result<FaceTable, EhrhartError> {
        if p.is_empty() {
            return Err(EhrhartError::Malformed(
                "the empty polytope has no face table".into(),
            ));
        }
        let lattice = p.face_lattice()?;
        let polytopes: Vec<LatticePolytope> = lattice
            .face_vertices
            .iter()
            .map(|vs| p.face_polytope(vs))
            .collect::<Result<_, _>>()?;
        let hstar: Vec<LaurentPoly> = polytopes.iter().map(hstar_polynomial).collect();
        // l*(Q) = Σ_{R ≤ Q} (−1)^{ρ(R,Q)} h*(R) g([R,Q]*; t); the empty
        // face contributes its own single term l*(∅) = 1.
        let ctx = KlsContext::new(&lattice.poset)?;
        let mut local = Vec::with_capacity(polytopes.len());
        for q in 0..polytopes.len() {
            let mut sum = LaurentPoly::zero();
            for r in lattice.poset.down_set(q) {
                let term = &hstar[r] * &ctx.g_dual(r, q)?;
                if lattice.poset.rho(r, q) % 2 == 0 {
                    sum += term;
                } else {
                    sum -= term;
                }
            }
            local.push(sum);
        }
        Ok(FaceTable {
            lattice,
            polytopes,
            hstar,
            local,
        })
    }

    pub fn lattice(&self) -> &FaceLattice {
        &self.lattice
    }

    pub fn face_count(&self) -> usize {
        self.polytopes.len()
    }

    pub fn face_polytope(&self, q: usize) -> &LatticePolytope {
        &self.polytopes[q]
    }

    pub fn hstar(&self, q: usize) -> &LaurentPoly {
        &self.hstar[q]
    }

    pub fn local(&self, q: usize) -> &LaurentPoly {
        &self.local[q]
    }

    pub fn bottom(&self) -> usize {
        self.lattice.poset.bottom().expect("face lattice has a bottom")
    }

    pub fn top(&self) -> usize {
        self.lattice.poset.top().expect("face lattice has a top")
    }

    /// The mixed h*-polynomial
    /// `h*(P; u,v) = Σ_Q v^{dim Q + 1} l*(Q; u v⁻¹) g([Q,P]; uv)`.
    pub fn mixed_hstar(&self) -> Result<LaurentPoly, EhrhartError> {
        let ctx = KlsContext::new(&self.lattice.poset)?;
        let top = self.top();
        let mut total = LaurentPoly::zero();
        for q in 0..self.face_count() {
            if self.local[q].is_zero() {
                continue;
            }
            let rk = self.lattice.poset.rank(q);
            let weighted = self.local[q]
                .substitute(&SubstMap::t_to_u_over_v())?
                .mul_monomial([0, 0, 2 * rk, 0]);
            total += &weighted * &ctx.g(q, top)?.substitute(&SubstMap::t_to_uv())?;
        }
        Ok(total)
    }
}

/// The h*-family of a single polytope, bundled for callers that want all
/// three at once.
pub struct HStarData {
    pub hstar: LaurentPoly,
    pub local_hstar: LaurentPoly,
    pub mixed: LaurentPoly,
}

pub fn hstar_data(p: &LatticePolytope) -> Result<HStarData, EhrhartError> {
    if p.is_empty() {
        return Ok(HStarData {
            hstar: LaurentPoly::one(),
            local_hstar: LaurentPoly::one(),
            mixed: LaurentPoly::one(),
        });
    }
    let ft = FaceTable::new(p)?;
    let top = ft.top();
    Ok(HStarData {
        hstar: ft.hstar(top).clone(),
        local_hstar: ft.local(top).clone(),
        mixed: ft.mixed_hstar()?,
    })
}

/// The local h*-polynomial of a polytope (1 for the empty polytope).
pub fn local_hstar_polynomial(p: &LatticePolytope) -> Result<LaurentPoly, EhrhartError> {
    Ok(hstar_data(p)?.local_hstar)
}

/// The mixed h*-polynomial of a polytope (1 for the empty polytope).
pub fn mixed_hstar_polynomial(p: &LatticePolytope) -> Result<LaurentPoly, EhrhartError> {
    Ok(hstar_data(p)?.mixed)
}

// ---------------------------------------------------------------------------
// The box-point oracle for simplices.

/// The box-point decomposition of a simplex with vertices v₀, …, v_d:
/// every residue of the lattice modulo the cone generators (vᵢ, 1) lifts
/// to a unique point of the half-open parallelepiped they span, recorded
/// here by its open support I = {i : λᵢ ≠ 0} and graded by its last
/// coordinate (its height). The polynomial at key I is the local
/// h*-polynomial of the face spanned by I, and the sum over all keys is
/// h*(P; t).
pub struct BoxDecomposition {
    pub by_support: BTreeMap<Vec<usize>, LaurentPoly>,
    /// Number of residues, i.e. the normalized volume of the simplex.
    pub volume: BigInt,
}

pub fn simplex_box_decomposition(p: &LatticePolytope) -> Result<BoxDecomposition, EhrhartError> {
    let n = p.vertices().len();
    if p.is_empty() || n as i32 != p.dim() + 1 {
        return Err(EhrhartError::NotSimplex {
            got: n,
            dim: p.dim(),
        });
    }
    let d = p.dim() as usize;
    // Columns are the reduced vertices homogenized by a final 1, so the
    // last coordinate of a cone point is its height.
    let mut gens: ZMat = vec![vec![BigInt::zero(); n]; n];
    for (j, vert) in p.vertices().iter().enumerate() {
        let red = p
            .reduced_coords(vert)
            .expect("vertices lie in the affine lattice span");
        for (i, x) in red.into_iter().enumerate() {
            gens[i][j] = x;
        }
        gens[d][j] = BigInt::one();
    }
    let hermite = column_hermite(&gens);
    let volume: BigInt = (0..n).map(|i| hermite[i][i].clone()).product();
    let steps: Vec<u64> = (0..n)
        .map(|i| {
            hermite[i][i].to_u64().ok_or_else(|| EhrhartError::BoxTooLarge {
                volume: volume.clone(),
            })
        })
        .collect::<Result<_, _>>()?;
    if volume
        .to_u64()
        .is_none_or(|v| v > 1 << 24)
    {
        return Err(EhrhartError::BoxTooLarge { volume });
    }
    let inverse = invert(&to_rational_mat(&gens)).expect("simplex vertices are affinely independent");
    let mut by_support: BTreeMap<Vec<usize>, LaurentPoly> = BTreeMap::new();
    let mut residue = vec![0u64; n];
    loop {
        // λ = frac(V⁻¹ r) are the cone coordinates of the box point over
        // this residue; its height Σᵢ λᵢ is an integer because the last
        // row of V is all ones.
        let mut height = BigRational::zero();
        let mut support = Vec::new();
        for i in 0..n {
            let mut lam = BigRational::zero();
            for (k, &r) in residue.iter().enumerate() {
                if r != 0 {
                    lam += &inverse[i][k] * BigRational::from(BigInt::from(r));
                }
            }
            let frac = lam.clone() - lam.floor();
            if !frac.is_zero() {
                support.push(i);
            }
            height += frac;
        }
        debug_assert!(height.is_integer());
        let e = height
            .to_integer()
            .to_i32()
            .expect("box heights are at most dim + 1");
        *by_support.entry(support).or_insert_with(LaurentPoly::zero) +=
            LaurentPoly::monomial([2 * e, 0, 0, 0], BigInt::one());
        let mut i = 0;
        loop {
            if i == n {
                return Ok(BoxDecomposition { by_support, volume });
            }
            residue[i] += 1;
            if residue[i] < steps[i] {
                break;
            }
            residue[i] = 0;
            i += 1;
        }
    }
}

/// `(l*, h*)` of a simplex straight from its box points, independently of
/// the dilate-counting path: `l*` is the polynomial of fully supported box
/// points, `h*` the sum over all supports.
pub fn hstar_box_oracle(p: &LatticePolytope) -> Result<(LaurentPoly, LaurentPoly), EhrhartError> {
    let decomp = simplex_box_decomposition(p)?;
    let full: Vec<usize> = (0..p.vertices().len()).collect();
    let local = decomp
        .by_support
        .get(&full)
        .cloned()
        .unwrap_or_else(LaurentPoly::zero);
    let mut hstar = LaurentPoly::zero();
    for poly in decomp.by_support.values() {
        hstar += poly;
    }
    Ok((local, hstar))
}

// ---------------------------------------------------------------------------
// Subdivision-level invariants.

/// Shared data for the invariants of a subdivided polytope: the face
/// lattice of the polytope, the carrier map packaged as a strong formal
/// subdivision of it, and the h*/local h* polynomials of every cell.
pub struct ComplexData<'a> {
    complex: &'a CellComplex,
    faces: FaceTable,
    sfs: StrongFormalSubdivision,
    cell_hstar: Vec<LaurentPoly>,
    cell_local: Vec<LaurentPoly>,
}

impl<'a> ComplexData<'a> {
    pub fn new(complex: &'a CellComplex) -> Result<ComplexData<'a>, EhrhartError> {
        let faces = FaceTable::new(complex.polytope())?;
        let sigma: Vec<usize> = (0..complex.cell_count())
            .map(|i| {
                faces.lattice().index_of(&complex.carrier_face(i)).ok_or_else(|| {
                    EhrhartError::Malformed(format!(
                        "carrier of cell {} is not a face of the polytope",
                        complex.poset().id(i)
                    ))
                })
            })
            .collect::<Result<_, _>>()?;
        let sfs = StrongFormalSubdivision::new(
            complex.poset().clone(),
            faces.lattice().poset.clone(),
            sigma,
        )?;
        let mut cell_hstar = Vec::with_capacity(complex.cell_count());
        let mut cell_local = Vec::with_capacity(complex.cell_count());
        for i in 0..complex.cell_count() {
            let cell = complex.cell_polytope(i);
            if cell.is_empty() {
                cell_hstar.push(LaurentPoly::one());
                cell_local.push(LaurentPoly::one());
            } else {
                let ft = FaceTable::new(cell)?;
                cell_hstar.push(ft.hstar(ft.top()).clone());
                cell_local.push(ft.local(ft.top()).clone());
            }
        }
        Ok(ComplexData {
            complex,
            faces,
            sfs,
            cell_hstar,
            cell_local,
        })
    }

    pub fn complex(&self) -> &CellComplex {
        self.complex
    }

    pub fn faces(&self) -> &FaceTable {
        &self.faces
    }

    pub fn sfs(&self) -> &StrongFormalSubdivision {
        &self.sfs
    }

    pub fn cell_hstar(&self, i: usize) -> &LaurentPoly {
        &self.cell_hstar[i]
    }

    pub fn cell_local(&self, i: usize) -> &LaurentPoly {
        &self.cell_local[i]
    }

    /// The limit mixed pair of the subdivision: in both sums F runs over
    /// all cells including the empty one, weighted by v^{dim F + 1} and
    /// the cell's l*(F; u v⁻¹):
    ///
    /// h*(P, S; u,v) = Σ_F v^{dim F + 1} l*(F; u v⁻¹) h(lk_S F; uv),
    /// l*(P, S; u,v) = Σ_F v^{dim F + 1} l*(F; u v⁻¹) l_{[σF, P]}(lk_S F; uv).
    pub fn limit_mixed_pair(&self) -> Result<(LaurentPoly, LaurentPoly), EhrhartError> {
        let inv = SfsInvariants::new(&self.sfs)?;
        let top = self.faces.top();
        let uv = SubstMap::t_to_uv();
        let mut h = LaurentPoly::zero();
        let mut l = LaurentPoly::zero();
        for f in 0..self.complex.cell_count() {
            if self.cell_local[f].is_zero() {
                continue;
            }
            let rk = self.complex.poset().rank(f);
            let weight = self.cell_local[f]
                .substitute(&SubstMap::t_to_u_over_v())?
                .mul_monomial([0, 0, 2 * rk, 0]);
            h += &weight * &inv.h_up(f, top)?.substitute(&uv)?;
            l += &weight * &inv.local_h_rel(top, f)?.substitute(&uv)?;
        }
        Ok((h, l))
    }
}

/// The limit mixed h*-polynomial `h*(P, S; u, v)` of a subdivision.
pub fn limit_mixed_hstar(c: &CellComplex) -> Result<LaurentPoly, EhrhartError> {
    Ok(ComplexData::new(c)?.limit_mixed_pair()?.0)
}

/// The limit mixed local h*-polynomial `l*(P, S; u, v)` of a subdivision.
pub fn local_limit_mixed_hstar(c: &CellComplex) -> Result<LaurentPoly, EhrhartError> {
    Ok(ComplexData::new(c)?.limit_mixed_pair()?.1)
}

/// The refined limit mixed h*-polynomial
/// `h*(P, S; u,v,w) = Σ_Q w^{dim Q + 1} l*(Q, S|_Q; u,v) g([Q,P]; uvw²)`,
/// the sum running over all faces Q of the polytope (the empty face
/// contributes 1).
pub fn refined_limit_mixed_hstar(c: &CellComplex) -> Result<LaurentPoly, EhrhartError> {
    refined_from_data(&ComplexData::new(c)?)
}

fn refined_from_data(data: &ComplexData) -> Result<LaurentPoly, EhrhartError> {
    let lattice = data.faces.lattice();
    let ctx = KlsContext::new(&lattice.poset)?;
    let top = data.faces.top();
    let bottom = data.faces.bottom();
    let uvw2 = SubstMap::t_to_uvw2();
    let mut total = LaurentPoly::zero();
    for q in 0..lattice.poset.len() {
        let inner = if q == bottom {
            LaurentPoly::one()
        } else if q == top {
            data.limit_mixed_pair()?.1
        } else {
            local_limit_mixed_hstar(&data.complex.restrict_to(data.faces.face_polytope(q))?)?
        };
        if inner.is_zero() {
            continue;
        }
        let rk = lattice.poset.rank(q);
        total += &inner.mul_monomial([0, 0, 0, 2 * rk]) * &ctx.g(q, top)?.substitute(&uvw2)?;
    }
    Ok(total)
}

/// The strong formal subdivision induced by one complex refining another:
/// each face of the finer complex is carried to the smallest face of the
/// coarser complex containing it. Fails if the complexes do not subdivide
/// the same polytope or some fine face has no unique smallest host.
pub fn refining_sfs(
    fine: &CellComplex,
    coarse: &CellComplex,
) -> Result<StrongFormalSubdivision, EhrhartError> {
    if fine.polytope().vertices() != coarse.polytope().vertices() {
        return Err(EhrhartError::BaseMismatch);
    }
    let mut sigma = Vec::with_capacity(fine.cell_count());
    for i in 0..fine.cell_count() {
        let verts = fine.cell_polytope(i).vertices();
        let hosts: Vec<usize> = (0..coarse.cell_count())
            .filter(|&j| {
                let host = coarse.cell_polytope(j);
                verts.iter().all(|p| host.contains(p))
            })
            .collect();
        let least = hosts
            .iter()
            .copied()
            .min_by_key(|&j| coarse.poset().rank(j))
            .ok_or_else(|| EhrhartError::NotARefinement {
                cell: fine.poset().id(i).to_string(),
            })?;
        if !hosts.iter().all(|&j| coarse.poset().le(least, j)) {
            return Err(EhrhartError::NotARefinement {
                cell: fine.poset().id(i).to_string(),
            });
        }
        sigma.push(least);
    }
    Ok(StrongFormalSubdivision::new(
        fine.poset().clone(),
        coarse.poset().clone(),
        sigma,
    )?)
}

/// Whether every maximal cell is a simplex of normalized volume one. For
/// such subdivisions the h*-family collapses to the combinatorial h-family
/// of the complex.
pub fn is_unimodular_triangulation(c: &CellComplex) -> Result<bool, EhrhartError> {
    for &i in c.maximal_cells() {
        let cell = c.cell_polytope(i);
        if cell.vertices().len() as i32 != cell.dim() + 1 {
            return Ok(false);
        }
        if cell.normalized_volume()? != BigInt::one() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// In dimension at most 3 the refined polynomial is pinned down by
/// interior-point counts of cells, bucketed by own dimension and carrier
/// dimension, plus the normalized volume; this rebuilds it from those
/// counts alone. Returns `None` above dimension 3.
pub fn refined_from_interior_counts(
    c: &CellComplex,
) -> Result<Option<LaurentPoly>, EhrhartError> {
    let d = c.polytope().dim();
    if !(0..=3).contains(&d) {
        return Ok(None);
    }
    let lattice = c.polytope().face_lattice()?;
    let n = c.cell_count();
    let mut interior = Vec::with_capacity(n);
    let mut cell_rank = Vec::with_capacity(n);
    let mut carrier_rank = Vec::with_capacity(n);
    for i in 0..n {
        interior.push(c.cell_polytope(i).count_interior_points(1));
        cell_rank.push(c.poset().rank(i));
        let q = lattice.index_of(&c.carrier_face(i)).ok_or_else(|| {
            EhrhartError::Malformed("cell carrier is not a face of the polytope".into())
        })?;
        carrier_rank.push(lattice.poset.rank(q));
    }
    let total = |pred: &dyn Fn(i32, i32) -> bool| -> BigInt {
        (0..n)
            .filter(|&i| pred(cell_rank[i], carrier_rank[i]))
            .map(|i| interior[i].clone())
            .sum()
    };
    // Indexed by the diamond slot (p, q, r); symmetric slots share a sum.
    let mut entries: BTreeMap<(i32, i32, i32), BigInt> = BTreeMap::new();
    if d >= 1 {
        entries.insert(
            (0, 0, 0),
            total(&|g, b| g <= 2 && b <= 2) - BigInt::from(d + 1),
        );
    }
    for r in 1..=(d - 1) {
        let corner = total(&|g, b| g <= 2 && b == r + 2);
        entries.insert((0, 0, r), corner.clone());
        entries.insert((r, r, r), corner);
        for q in 1..=r {
            let count = total(&|g, b| g == q + 2 && b == r + 2);
            entries.insert((0, q, r), count.clone());
            entries.insert((q, 0, r), count.clone());
            entries.insert((r, r - q, r), count.clone());
            entries.insert((r - q, r, r), count);
        }
    }
    if d == 3 {
        // The single slot the counts leave open is fixed by the total:
        // all entries sum to the normalized volume minus one.
        let rest: BigInt = entries.values().sum();
        entries.insert(
            (1, 1, 2),
            c.polytope().normalized_volume()? - BigInt::one() - rest,
        );
    }
    let mut out = LaurentPoly::one();
    for ((p, q, r), value) in entries {
        out += LaurentPoly::monomial([0, 2 * (p + 1), 2 * (q + 1), 2 * (r + 2)], value);
    }
    Ok(Some(out))
}

// ---------------------------------------------------------------------------
// Diamond tables.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiamondKind {
    /// Coefficients of `1 + uv Σ h_{p,q} uᵖ vᑫ`.
    HStar,
    /// Coefficients of `uv Σ l_{p,q} uᵖ vᑫ`.
    LocalHStar,
    /// Coefficients of the w^{r+2} layer of the refined polynomial.
    RLocal(usize),
}

/// A square table of diamond coefficients. Entry (p, q) is displayed at
/// position (q − p, p + q): rows of the table are the north-west to
/// south-east diagonals of the diamond.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiamondTable {
    pub kind: DiamondKind,
    pub entries: Vec<Vec<BigInt>>,
}

impl DiamondTable {
    pub fn side(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, p: usize, q: usize) -> &BigInt {
        &self.entries[p][q]
    }

    /// Display position of entry (p, q): horizontal offset q − p,
    /// height p + q.
    pub fn position(p: usize, q: usize) -> (i64, i64) {
        (q as i64 - p as i64, (p + q) as i64)
    }

    /// Sums along fixed p. For the h*-table the p-th sum is the (p+1)-st
    /// coefficient of the one-variable h*-polynomial, and likewise for the
    /// local table.
    pub fn diagonal_sums(&self) -> Vec<BigInt> {
        self.entries.iter().map(|row| row.iter().sum()).collect()
    }

    /// Symmetry across the vertical axis: entry (p, q) = entry (q, p).
    pub fn is_vertically_symmetric(&self) -> bool {
        let s = self.side();
        (0..s).all(|p| (p..s).all(|q| self.entries[p][q] == self.entries[q][p]))
    }

    /// Symmetry across the horizontal axis: entry (p, q) equals entry
    /// (s−1−p, s−1−q). Holds for local tables and for each refined layer,
    /// not for h*-tables in general.
    pub fn is_horizontally_symmetric(&self) -> bool {
        let s = self.side();
        (0..s).all(|p| (0..s).all(|q| self.entries[p][q] == self.entries[s - 1 - p][s - 1 - q]))
    }

    pub fn to_json(&self) -> Value {
        let kind = match self.kind {
            DiamondKind::HStar => json!("hstar"),
            DiamondKind::LocalHStar => json!("local-hstar"),
            DiamondKind::RLocal(r) => json!(format!("layer-{r}")),
        };
        json!({
            "kind": kind,
            "side": self.side(),
            "entries": self
                .entries
                .iter()
                .map(|row| row.iter().map(|c| c.to_string()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

fn diamond_entries(
    poly: &LaurentPoly,
    side: usize,
    constant: i64,
    what: &str,
) -> Result<Vec<Vec<BigInt>>, EhrhartError> {
    let seen = poly.coeff([0, 0, 0, 0]);
    if seen != BigInt::from(constant) {
        return Err(EhrhartError::Malformed(format!(
            "{what}: constant term is {seen}, expected {constant}"
        )));
    }
    let mut entries = vec![vec![BigInt::zero(); side]; side];
    for (e, c) in poly.terms() {
        if *e == [0, 0, 0, 0] {
            continue;
        }
        let shaped = e[0] == 0 && e[3] == 0 && e[1] >= 2 && e[2] >= 2 && e[1] % 2 == 0 && e[2] % 2 == 0;
        if !shaped {
            return Err(EhrhartError::Malformed(format!(
                "{what}: term {} is not of the form uv·uᵖvᑫ",
                LaurentPoly::monomial(*e, c.clone())
            )));
        }
        let p = (e[1] / 2 - 1) as usize;
        let q = (e[2] / 2 - 1) as usize;
        if p >= side || q >= side {
            return Err(EhrhartError::Malformed(format!(
                "{what}: entry ({p}, {q}) falls outside a {side}×{side} table"
            )));
        }
        entries[p][q] = c.clone();
    }
    Ok(entries)
}

/// The diamond table of a mixed or limit mixed h*-polynomial of a
/// d-dimensional polytope: `h* = 1 + uv Σ_{0 ≤ p,q ≤ d−1} h_{p,q} uᵖ vᑫ`.
pub fn hstar_diamond(mixed: &LaurentPoly, dim: i32) -> Result<DiamondTable, EhrhartError> {
    let side = dim.max(0) as usize;
    Ok(DiamondTable {
        kind: DiamondKind::HStar,
        entries: diamond_entries(mixed, side, 1, "hstar diamond")?,
    })
}

/// The diamond table of a (limit) mixed local h*-polynomial:
/// `l* = uv Σ_{0 ≤ p,q ≤ d−1} l_{p,q} uᵖ vᑫ` with no constant term.
pub fn local_hstar_diamond(local: &LaurentPoly, dim: i32) -> Result<DiamondTable, EhrhartError> {
    let side = dim.max(0) as usize;
    Ok(DiamondTable {
        kind: DiamondKind::LocalHStar,
        entries: diamond_entries(local, side, 0, "local hstar diamond")?,
    })
}

/// The w-layers of a refined polynomial
/// `h* = 1 + uvw² Σ_{r} Σ_{0 ≤ p,q ≤ r} h_{p,q,r} uᵖ vᑫ wʳ`:
/// layer r is an (r+1)×(r+1) diamond table. Fails if any term falls
/// outside this shape.
pub fn r_local_diamonds(refined: &LaurentPoly, dim: i32) -> Result<Vec<DiamondTable>, EhrhartError> {
    let side = dim.max(0) as usize;
    let w_free = refined.filter_terms(|e| e[Var::W.index()] == 0);
    if !w_free.is_one() {
        return Err(EhrhartError::Malformed(format!(
            "three-variable polynomial: w-free part is {w_free}, expected 1"
        )));
    }
    let mut seen = w_free;
    let mut tables = Vec::with_capacity(side);
    for r in 0..side {
        let slice = refined.coeff_slice(Var::W, HalfExp::int(r as i32 + 2));
        let entries = diamond_entries(&slice, r + 1, 0, &format!("w-layer {r}"))?;
        seen += &slice.mul_monomial([0, 0, 0, 2 * (r as i32 + 2)]);
        tables.push(DiamondTable {
            kind: DiamondKind::RLocal(r),
            entries,
        });
    }
    if seen != *refined {
        return Err(EhrhartError::Malformed(
            "three-variable polynomial has w-terms outside layers 0..dim−1".into(),
        ));
    }
    Ok(tables)
}

// ---------------------------------------------------------------------------
// Check batteries.

fn expect_eq(name: &str, got: &LaurentPoly, want: &LaurentPoly) -> CheckResult {
    CheckResult::of(name, got == want, || format!("got {got}, want {want}"))
}

fn expect_nonneg(name: &str, poly: &LaurentPoly) -> CheckResult {
    CheckResult::of(
        name,
        poly.terms().all(|(_, c)| !c.is_negative()),
        || format!("negative coefficient in {poly}"),
    )
}

fn expect_geq(name: &str, big: &LaurentPoly, small: &LaurentPoly) -> CheckResult {
    let diff = big - small;
    let ok = diff.terms().all(|(_, c)| !c.is_negative());
    CheckResult::of(name, ok, || {
        format!("difference {diff} has a negative coefficient")
    })
}

fn monomial_minus_one_pow(shift: ExpVec, k: usize) -> LaurentPoly {
    (&LaurentPoly::monomial(shift, BigInt::one()) - &LaurentPoly::one()).pow(k)
}

fn t_renamed(var: Var) -> SubstMap {
    SubstMap::identity().map_var(Var::T, MonomialImage::of_var(var))
}

fn is_palindrome(xs: &[BigInt]) -> bool {
    xs.iter().eq(xs.iter().rev())
}

fn is_unimodal_ints(xs: &[BigInt]) -> bool {
    let mut i = 0;
    while i + 1 < xs.len() && xs[i] <= xs[i + 1] {
        i += 1;
    }
    while i + 1 < xs.len() && xs[i] >= xs[i + 1] {
        i += 1;
    }
    xs.is_empty() || i == xs.len() - 1
}

/// Identity and positivity checks for the h*-family of a single nonempty
/// polytope: coefficient interpretations, reciprocity, the local
/// decomposition, mixed specializations, the box oracle on simplices, and
/// the diamond table of the trivial subdivision.
pub fn run_polytope_battery(p: &LatticePolytope) -> Result<Vec<CheckResult>, EhrhartError> {
    let ft = FaceTable::new(p)?;
    let d = p.dim();
    let top = ft.top();
    let h = ft.hstar(top).clone();
    let l = ft.local(top).clone();
    let mixed = ft.mixed_hstar()?;
    let interior = p.count_interior_points(1);
    let points = p.count_lattice_points(1);
    let volume = p.normalized_volume()?;
    let mut out = Vec::new();

    out.push(CheckResult::of(
        "hstar: constant term is 1",
        h.coeff_int(Var::T, 0).is_one(),
        || format!("h* = {h}"),
    ));
    out.push(CheckResult::of(
        "hstar: degree at most dim",
        h.max_exp(Var::T).is_none_or(|e| e.twice <= 2 * d),
        || format!("h* = {h}"),
    ));
    out.push(CheckResult::of(
        "hstar: top coefficient counts interior points",
        h.coeff_int(Var::T, d) == interior,
        || format!("h*_dim = {}, interior = {interior}", h.coeff_int(Var::T, d)),
    ));
    out.push(CheckResult::of(
        "hstar: linear coefficient counts points minus dim minus 1",
        h.coeff_int(Var::T, 1) == &points - BigInt::from(d + 1),
        || format!("h*_1 = {}, points = {points}", h.coeff_int(Var::T, 1)),
    ));
    out.push(CheckResult::of(
        "hstar: value at 1 is the normalized volume",
        h.eval_all_ones() == volume,
        || format!("h*(1) = {}, volume = {volume}", h.eval_all_ones()),
    ));
    out.push(expect_nonneg("hstar: coefficients nonnegative", &h));

    let coeffs = ehrhart_coefficients(p)?;
    let beyond = BigRational::from(p.count_lattice_points(d as u32 + 1));
    out.push(CheckResult::of(
        "ehrhart: interpolation reproduces the count at dilate dim+1",
        ehrhart_value(&coeffs, d as i64 + 1) == beyond,
        || format!("predicted {}, counted {beyond}", ehrhart_value(&coeffs, d as i64 + 1)),
    ));
    {
        let mut ok = true;
        let mut detail = String::new();
        for m in 1..=(d as i64 + 1) {
            let value = ehrhart_value(&coeffs, -m);
            let mut expected = BigRational::from(p.count_interior_points(m as u32));
            if d % 2 != 0 {
                expected = -expected;
            }
            if value != expected {
                ok = false;
                detail = format!("at dilate −{m}: value {value}, expected {expected}");
                break;
            }
        }
        out.push(CheckResult::of(
            "ehrhart: negative dilates count interior points",
            ok,
            || detail,
        ));
    }

    out.push(expect_eq(
        "local hstar: palindromic",
        &l.involute().mul_monomial([2 * (d + 1), 0, 0, 0]),
        &l,
    ));
    out.push(CheckResult::of(
        "local hstar: constant term is 0",
        l.coeff_int(Var::T, 0).is_zero(),
        || format!("l* = {l}"),
    ));
    if d >= 1 {
        out.push(CheckResult::of(
            "local hstar: linear and top coefficients count interior points",
            l.coeff_int(Var::T, 1) == interior && l.coeff_int(Var::T, d) == interior,
            || format!("l* = {l}, interior = {interior}"),
        ));
    }
    out.push(expect_nonneg("local hstar: coefficients nonnegative", &l));
    out.push(CheckResult::of(
        "local hstar: linear coefficient is a lower bound",
        (1..=d).all(|i| l.coeff_int(Var::T, 1) <= l.coeff_int(Var::T, i)),
        || format!("l* = {l}"),
    ));
    if interior > BigInt::zero() && d >= 2 {
        out.push(CheckResult::of(
            "hstar: linear coefficient is a lower bound when interior is nonempty",
            (1..d).all(|i| h.coeff_int(Var::T, 1) <= h.coeff_int(Var::T, i)),
            || format!("h* = {h}"),
        ));
    }

    {
        let ctx = KlsContext::new(&ft.lattice().poset)?;
        let mut assembled = LaurentPoly::zero();
        for q in 0..ft.face_count() {
            assembled += &ft.local(q).clone() * &ctx.g(q, top)?;
        }
        out.push(expect_eq("hstar: assembled from face local data", &assembled, &h));
    }
    {
        let kernel = IncidenceFn::kernel(&ft.lattice().poset);
        let heart: Vec<LaurentPoly> = (0..ft.face_count())
            .map(|q| ft.hstar(q).mul_monomial([-ft.lattice().poset.rank(q), 0, 0, 0]))
            .collect();
        out.push(CheckResult::of(
            "hstar: face family is kernel-acceptable",
            is_acceptable(&ft.lattice().poset, &heart, &kernel),
            || "involution does not match the kernel action".into(),
        ));
    }

    out.push(expect_eq(
        "mixed hstar: symmetric in u and v",
        &mixed.substitute(&SubstMap::swap_uv())?,
        &mixed,
    ));
    out.push(expect_eq(
        "mixed hstar: specializes to hstar at v=1",
        &mixed.substitute(&SubstMap::to_one(Var::V))?,
        &h.substitute(&t_renamed(Var::U))?,
    ));
    out.push(CheckResult::of(
        "mixed hstar: combined degree at most dim+1",
        mixed.max_combined_exp().is_none_or(|e| e.twice <= 2 * (d + 1)),
        || format!("mixed = {mixed}"),
    ));
    out.push(expect_eq(
        "mixed hstar: top slice is the local hstar",
        &mixed.filter_terms(|e| e[1] + e[2] == 2 * (d + 1)),
        &l.substitute(&SubstMap::t_to_u_over_v())?.mul_monomial([0, 0, 2 * (d + 1), 0]),
    ));
    out.push(expect_nonneg("mixed hstar: coefficients nonnegative", &mixed));
    out.push(expect_geq("hstar dominates local hstar", &h, &l));

    if p.vertices().len() as i32 == d + 1 {
        let decomp = simplex_box_decomposition(p)?;
        out.push(CheckResult::of(
            "box: residue count is the normalized volume",
            decomp.volume == volume,
            || format!("residues {}, volume {volume}", decomp.volume),
        ));
        {
            let mut ok = true;
            let mut detail = String::new();
            for q in 0..ft.face_count() {
                let verts = &ft.lattice().face_vertices[q];
                let got = decomp
                    .by_support
                    .get(verts)
                    .cloned()
                    .unwrap_or_else(LaurentPoly::zero);
                if got != *ft.local(q) {
                    ok = false;
                    detail = format!(
                        "support {verts:?}: box points {got}, local hstar {}",
                        ft.local(q)
                    );
                    break;
                }
            }
            out.push(CheckResult::of(
                "box: supports give each face's local hstar",
                ok,
                || detail,
            ));
        }
        let (box_local, box_hstar) = hstar_box_oracle(p)?;
        out.push(expect_eq("box: oracle local hstar matches", &box_local, &l));
        out.push(expect_eq("box: oracle hstar matches", &box_hstar, &h));
    }

    let table = hstar_diamond(&mixed, d)?;
    let side = table.side();
    out.push(CheckResult::of(
        "diamond: vertically symmetric",
        table.is_vertically_symmetric(),
        || format!("table {:?}", table.entries),
    ));
    out.push(CheckResult::of(
        "diamond: diagonal sums are the hstar coefficients",
        table
            .diagonal_sums()
            .iter()
            .enumerate()
            .all(|(i, s)| *s == h.coeff_int(Var::T, i as i32 + 1)),
        || format!("sums {:?}, h* = {h}", table.diagonal_sums()),
    ));
    out.push(CheckResult::of(
        "diamond: middle strip is the local hstar",
        (0..side).all(|p_| *table.entry(p_, side - 1 - p_) == l.coeff_int(Var::T, p_ as i32 + 1)),
        || format!("table {:?}, l* = {l}", table.entries),
    ));
    out.push(CheckResult::of(
        "diamond: vanishes above the middle strip",
        (0..side).all(|p_| (0..side).all(|q| p_ + q < side || table.entry(p_, q).is_zero())),
        || format!("table {:?}", table.entries),
    ));
    out.push(CheckResult::of(
        "diamond: first column bounds its strips",
        (0..side).all(|k| (0..=k).all(|i| table.entry(k, 0) <= table.entry(k - i, i))),
        || format!("table {:?}", table.entries),
    ));

    Ok(out)
}

/// Identity checks tying the h*-family of a subdivided polytope to the
/// combinatorial invariants of the subdivision: pushforward assembly,
/// monotonicity, the limit mixed pair and its symmetries, reciprocity and
/// inversion over restrictions, the refined polynomial, and the diamond
/// tables with their counting interpretations.
pub fn run_complex_battery(c: &CellComplex) -> Result<Vec<CheckResult>, EhrhartError> {
    let data = ComplexData::new(c)?;
    let inv = SfsInvariants::new(data.sfs())?;
    let ft = data.faces();
    let lattice = ft.lattice();
    let d = c.polytope().dim();
    let top = ft.top();
    let bottom = ft.bottom();
    let n_faces = lattice.poset.len();
    let n_cells = c.cell_count();
    let hp = ft.hstar(top).clone();
    let lp = ft.local(top).clone();
    let mixed_p = ft.mixed_hstar()?;
    let (lim_h, lim_l) = data.limit_mixed_pair()?;
    let refined = refined_from_data(&data)?;
    let volume = c.polytope().normalized_volume()?;
    let uv = SubstMap::t_to_uv();
    let mut out = Vec::new();

    // Pushforward assembly: cells with carrier x recover h*(P_x).
    {
        let mut sums = vec![LaurentPoly::zero(); n_faces];
        for f in 0..n_cells {
            let x = data.sfs().sigma(f);
            let k = lattice.poset.rank(x) - c.poset().rank(f);
            sums[x] += &data.cell_hstar(f).clone() * &monomial_minus_one_pow([2, 0, 0, 0], k as usize);
        }
        let mut ok = true;
        let mut detail = String::new();
        for x in 0..n_faces {
            if sums[x] != *ft.hstar(x) {
                ok = false;
                detail = format!(
                    "face {}: assembled {}, h* = {}",
                    lattice.poset.id(x),
                    sums[x],
                    ft.hstar(x)
                );
                break;
            }
        }
        out.push(CheckResult::of(
            "pushforward: cell sums give every face hstar",
            ok,
            || detail,
        ));
        out.push(expect_eq(
            "pushforward: cell sums give the polytope hstar",
            &sums[top],
            &hp,
        ));
    }
    {
        let mut through_links = LaurentPoly::zero();
        let mut local_links = LaurentPoly::zero();
        let mut mixed_links = LaurentPoly::zero();
        for f in 0..n_cells {
            if data.cell_local(f).is_zero() {
                continue;
            }
            through_links += &data.cell_local(f).clone() * &inv.h_up(f, top)?;
            local_links += &data.cell_local(f).clone() * &inv.local_h_rel(top, f)?;
            let weight = data
                .cell_local(f)
                .substitute(&SubstMap::t_to_u_over_v())?
                .mul_monomial([0, 0, 2 * c.poset().rank(f), 0]);
            mixed_links += &weight * &inv.mixed_h_rel(top, f)?;
        }
        out.push(expect_eq(
            "pushforward: local cell data assembles hstar through links",
            &through_links,
            &hp,
        ));
        out.push(expect_eq(
            "pushforward: local cell data assembles the local hstar through links",
            &local_links,
            &lp,
        ));
        out.push(expect_eq(
            "pushforward: mixed cell data assembles the mixed hstar",
            &mixed_links,
            &mixed_p,
        ));
    }
    out.push(expect_geq(
        "hstar dominates the subdivision h",
        &hp,
        &inv.h_gamma()?,
    ));
    out.push(expect_geq(
        "local hstar dominates the subdivision local h",
        &lp,
        &inv.local_h()?,
    ));
    if is_unimodular_triangulation(c)? {
        out.push(expect_eq(
            "unimodular: hstar equals the subdivision h",
            &hp,
            &inv.h_gamma()?,
        ));
        out.push(expect_eq(
            "unimodular: local hstar equals the subdivision local h",
            &lp,
            &inv.local_h()?,
        ));
        out.push(expect_eq(
            "unimodular: mixed hstar equals the subdivision mixed h",
            &mixed_p,
            &inv.mixed_h()?,
        ));
        out.push(expect_eq(
            "unimodular: limit mixed collapses to hstar",
            &lim_h,
            &hp.substitute(&uv)?,
        ));
        out.push(expect_eq(
            "unimodular: limit local collapses to the local hstar",
            &lim_l,
            &lp.substitute(&uv)?,
        ));
    }

    // Limit mixed pair: symmetries, specializations, and sums over the
    // restrictions of the subdivision to each face of the polytope.
    out.push(expect_eq(
        "limit mixed: symmetric in u and v",
        &lim_h.substitute(&SubstMap::swap_uv())?,
        &lim_h,
    ));
    out.push(expect_eq(
        "limit local: symmetric in u and v",
        &lim_l.substitute(&SubstMap::swap_uv())?,
        &lim_l,
    ));
    out.push(expect_eq(
        "limit mixed: v=1 recovers hstar",
        &lim_h.substitute(&SubstMap::to_one(Var::V))?,
        &hp.substitute(&t_renamed(Var::U))?,
    ));
    out.push(expect_eq(
        "limit local: v=1 recovers the local hstar",
        &lim_l.substitute(&SubstMap::to_one(Var::V))?,
        &lp.substitute(&t_renamed(Var::U))?,
    ));
    out.push(expect_eq(
        "limit mixed: u=0 leaves the constant 1",
        &lim_h.eval_var_zero(Var::U)?,
        &LaurentPoly::one(),
    ));
    out.push(expect_eq(
        "limit local: vanishes at u=0",
        &lim_l.eval_var_zero(Var::U)?,
        &LaurentPoly::zero(),
    ));
    out.push(CheckResult::of(
        "limit mixed: value at all ones is the normalized volume",
        lim_h.eval_all_ones() == volume,
        || format!("value {}, volume {volume}", lim_h.eval_all_ones()),
    ));
    out.push(expect_nonneg("limit mixed: coefficients nonnegative", &lim_h));
    out.push(expect_nonneg("limit local: coefficients nonnegative", &lim_l));
    out.push(expect_geq(
        "limit mixed dominates limit local",
        &lim_h,
        &lim_l,
    ));

    let mut rest_pairs: Vec<(LaurentPoly, LaurentPoly)> = Vec::with_capacity(n_faces);
    let mut rest_refined: Vec<LaurentPoly> = Vec::with_capacity(n_faces);
    for q in 0..n_faces {
        if q == bottom {
            rest_pairs.push((LaurentPoly::one(), LaurentPoly::one()));
            rest_refined.push(LaurentPoly::one());
        } else if q == top {
            rest_pairs.push((lim_h.clone(), lim_l.clone()));
            rest_refined.push(refined.clone());
        } else {
            let sub = c.restrict_to(ft.face_polytope(q))?;
            let sub_data = ComplexData::new(&sub)?;
            rest_pairs.push(sub_data.limit_mixed_pair()?);
            rest_refined.push(refined_from_data(&sub_data)?);
        }
    }
    {
        let lhs = lim_h.involute().mul_monomial([0, 2 * (d + 1), 2 * (d + 1), 0]);
        let mut rhs = LaurentPoly::zero();
        for q in 0..n_faces {
            let k = lattice.poset.rho(q, top) as usize;
            rhs += &rest_pairs[q].0 * &monomial_minus_one_pow([0, 2, 2, 0], k);
        }
        out.push(expect_eq("limit mixed: reciprocity over restrictions", &lhs, &rhs));
    }
    out.push(expect_eq(
        "limit local: palindromic",
        &lim_l.involute().mul_monomial([0, 2 * (d + 1), 2 * (d + 1), 0]),
        &lim_l,
    ));
    {
        let ctx = KlsContext::new(&lattice.poset)?;
        let mut from_locals = LaurentPoly::zero();
        let mut alternating = LaurentPoly::zero();
        for q in 0..n_faces {
            from_locals += &rest_pairs[q].1 * &ctx.g(q, top)?.substitute(&uv)?;
            let term = &rest_pairs[q].0 * &ctx.g_dual(q, top)?.substitute(&uv)?;
            if lattice.poset.rho(q, top) % 2 == 0 {
                alternating += term;
            } else {
                alternating -= term;
            }
        }
        out.push(expect_eq(
            "limit mixed: assembled from restricted local parts",
            &from_locals,
            &lim_h,
        ));
        out.push(expect_eq(
            "limit local: alternating sum over restrictions",
            &alternating,
            &lim_l,
        ));
    }
    let trivial = c.maximal_cells().len() == 1
        && c.cell_polytope(c.maximal_cells()[0]).vertices() == c.polytope().vertices();
    if trivial {
        out.push(expect_eq(
            "trivial subdivision: limit mixed is the mixed hstar",
            &lim_h,
            &mixed_p,
        ));
        out.push(expect_eq(
            "trivial subdivision: limit local is the shifted local hstar",
            &lim_l,
            &lp.substitute(&SubstMap::t_to_u_over_v())?.mul_monomial([0, 0, 2 * (d + 1), 0]),
        ));
    }

    // Refined polynomial: symmetries, specializations, reciprocity.
    out.push(expect_eq(
        "refined: symmetric in u and v",
        &refined.substitute(&SubstMap::swap_uv())?,
        &refined,
    ));
    {
        let flip = SubstMap::identity()
            .map_var(Var::U, MonomialImage::product(&[(Var::U, -1)]))
            .map_var(Var::V, MonomialImage::product(&[(Var::V, -1)]))
            .map_var(
                Var::W,
                MonomialImage::product(&[(Var::U, 1), (Var::V, 1), (Var::W, 1)]),
            );
        out.push(expect_eq(
            "refined: invariant under folding u,v into w",
            &refined.substitute(&flip)?,
            &refined,
        ));
    }
    out.push(expect_eq(
        "refined: w=1 recovers the limit mixed",
        &refined.substitute(&SubstMap::to_one(Var::W))?,
        &lim_h,
    ));
    {
        let collapse = SubstMap::identity()
            .map_var(Var::U, MonomialImage::product(&[(Var::U, 1), (Var::W, -1)]))
            .map_var(Var::V, MonomialImage::one());
        out.push(expect_eq(
            "refined: collapses to the mixed hstar in u and w",
            &refined.substitute(&collapse)?,
            &mixed_p.substitute(&SubstMap::identity().map_var(Var::V, MonomialImage::of_var(Var::W)))?,
        ));
    }
    out.push(CheckResult::of(
        "refined: value at all ones is the normalized volume",
        refined.eval_all_ones() == volume,
        || format!("value {}, volume {volume}", refined.eval_all_ones()),
    ));
    out.push(expect_eq(
        "refined: u=0 leaves the constant 1",
        &refined.eval_var_zero(Var::U)?,
        &LaurentPoly::one(),
    ));
    out.push(expect_eq(
        "refined: w=0 leaves the constant 1",
        &refined.eval_var_zero(Var::W)?,
        &LaurentPoly::one(),
    ));
    out.push(expect_nonneg("refined: coefficients nonnegative", &refined));
    out.push(CheckResult::of(
        "refined: w-degree at most dim+1",
        refined.max_exp(Var::W).is_none_or(|e| e.twice <= 2 * (d + 1)),
        || format!("refined = {refined}"),
    ));
    out.push(expect_eq(
        "refined: top w-slice is the limit local",
        &refined.coeff_slice(Var::W, HalfExp::int(d + 1)),
        &lim_l,
    ));
    {
        let lhs = refined
            .involute()
            .mul_monomial([0, 2 * (d + 1), 2 * (d + 1), 4 * (d + 1)]);
        let mut rhs = LaurentPoly::zero();
        for q in 0..n_faces {
            let k = lattice.poset.rho(q, top) as usize;
            rhs += &rest_refined[q] * &monomial_minus_one_pow([0, 2, 2, 4], k);
        }
        out.push(expect_eq("refined: reciprocity over restrictions", &lhs, &rhs));
    }
    {
        let ctx = KlsContext::new(&lattice.poset)?;
        let uvw2 = SubstMap::t_to_uvw2();
        let mut alternating = LaurentPoly::zero();
        for q in 0..n_faces {
            let term = &rest_refined[q] * &ctx.g_dual(q, top)?.substitute(&uvw2)?;
            if lattice.poset.rho(q, top) % 2 == 0 {
                alternating += term;
            } else {
                alternating -= term;
            }
        }
        out.push(expect_eq(
            "refined: alternating sum gives the shifted limit local",
            &alternating,
            &lim_l.mul_monomial([0, 0, 0, 2 * (d + 1)]),
        ));
    }
    if trivial {
        let spread = SubstMap::identity()
            .map_var(Var::U, MonomialImage::product(&[(Var::U, 1), (Var::W, 1)]))
            .map_var(Var::V, MonomialImage::product(&[(Var::V, 1), (Var::W, 1)]));
        out.push(expect_eq(
            "trivial subdivision: refined is the mixed hstar in uw and vw",
            &refined,
            &mixed_p.substitute(&spread)?,
        ));
    }

    // Diamond tables and their counting interpretations.
    let table_h = hstar_diamond(&lim_h, d)?;
    let table_l = local_hstar_diamond(&lim_l, d)?;
    let layers = r_local_diamonds(&refined, d)?;
    let side = table_h.side();
    out.push(CheckResult::of(
        "diamond: hstar table vertically symmetric",
        table_h.is_vertically_symmetric(),
        || format!("table {:?}", table_h.entries),
    ));
    out.push(CheckResult::of(
        "diamond: local table vertically symmetric",
        table_l.is_vertically_symmetric(),
        || format!("table {:?}", table_l.entries),
    ));
    out.push(CheckResult::of(
        "diamond: local table horizontally symmetric",
        table_l.is_horizontally_symmetric(),
        || format!("table {:?}", table_l.entries),
    ));
    out.push(CheckResult::of(
        "diamond: hstar diagonal sums are the hstar coefficients",
        table_h
            .diagonal_sums()
            .iter()
            .enumerate()
            .all(|(i, s)| *s == hp.coeff_int(Var::T, i as i32 + 1)),
        || format!("sums {:?}, h* = {hp}", table_h.diagonal_sums()),
    ));
    out.push(CheckResult::of(
        "diamond: local diagonal sums are the local hstar coefficients",
        table_l
            .diagonal_sums()
            .iter()
            .enumerate()
            .all(|(i, s)| *s == lp.coeff_int(Var::T, i as i32 + 1)),
        || format!("sums {:?}, l* = {lp}", table_l.diagonal_sums()),
    ));
    if side >= 1 {
        out.push(CheckResult::of(
            "diamond: boundary row of the hstar table is the local row",
            table_h.entries[side - 1] == table_l.entries[side - 1],
            || format!("hstar row {:?}, local row {:?}", table_h.entries[side - 1], table_l.entries[side - 1]),
        ));
    }
    {
        // First-column entries count interior points of cells: h_{0,q}
        // over cells of dimension q+1, l_{0,q} over those with full
        // carrier, and the (0,0) entries absorb the vertex count.
        let int_by = |pred: &dyn Fn(usize) -> bool| -> BigInt {
            (0..n_cells)
                .filter(|&f| pred(f))
                .map(|f| c.cell_polytope(f).count_interior_points(1))
                .sum()
        };
        let mut ok = true;
        let mut detail = String::new();
        for q in 1..side {
            let h0q = int_by(&|f| c.poset().rank(f) == q as i32 + 2);
            let l0q = int_by(&|f| {
                c.poset().rank(f) == q as i32 + 2 && data.sfs().sigma(f) == top
            });
            if *table_h.entry(0, q) != h0q || *table_l.entry(0, q) != l0q {
                ok = false;
                detail = format!(
                    "column entry {q}: table ({}, {}), counts ({h0q}, {l0q})",
                    table_h.entry(0, q),
                    table_l.entry(0, q)
                );
                break;
            }
        }
        if ok && side >= 1 {
            let h00 = int_by(&|f| c.poset().rank(f) <= 2) - BigInt::from(d + 1);
            let l00 = int_by(&|f| c.poset().rank(f) <= 2 && data.sfs().sigma(f) == top);
            if *table_h.entry(0, 0) != h00 || *table_l.entry(0, 0) != l00 {
                ok = false;
                detail = format!(
                    "corner: table ({}, {}), counts ({h00}, {l00})",
                    table_h.entry(0, 0),
                    table_l.entry(0, 0)
                );
            }
        }
        out.push(CheckResult::of(
            "diamond: first column counts interior cell points",
            ok,
            || detail,
        ));
    }
    if d == 3 {
        // In dimension 3 the middle entries are also determined by counts.
        let boundary_faces: BigInt = (0..n_cells)
            .filter(|&f| c.poset().rank(f) == 3 && data.sfs().sigma(f) != top)
            .map(|f| c.cell_polytope(f).count_interior_points(1))
            .sum();
        let interior_faces: BigInt = (0..n_cells)
            .filter(|&f| c.poset().rank(f) == 3 && data.sfs().sigma(f) == top)
            .map(|f| c.cell_polytope(f).count_interior_points(1))
            .sum();
        let two = BigInt::from(2);
        out.push(CheckResult::of(
            "diamond: middle coefficients from interior counts in dim 3",
            lp.coeff_int(Var::T, 2) == table_l.entry(1, 1) + &two * &interior_faces
                && hp.coeff_int(Var::T, 2)
                    == table_h.entry(1, 1) + &two * &interior_faces + &boundary_faces,
            || {
                format!(
                    "l*_2 = {}, l_11 = {}; h*_2 = {}, h_11 = {}; interior {interior_faces}, boundary {boundary_faces}",
                    lp.coeff_int(Var::T, 2),
                    table_l.entry(1, 1),
                    hp.coeff_int(Var::T, 2),
                    table_h.entry(1, 1)
                )
            },
        ));
    }
    {
        let mut stacked = vec![vec![BigInt::zero(); side]; side];
        for layer in &layers {
            for (p_, row) in layer.entries.iter().enumerate() {
                for (q, val) in row.iter().enumerate() {
                    stacked[p_][q] += val;
                }
            }
        }
        out.push(CheckResult::of(
            "layers: stack to the hstar table",
            stacked == table_h.entries,
            || format!("stacked {stacked:?}, table {:?}", table_h.entries),
        ));
    }
    if side >= 1 {
        out.push(CheckResult::of(
            "layers: last layer is the local table",
            layers[side - 1].entries == table_l.entries,
            || format!("layer {:?}, local {:?}", layers[side - 1].entries, table_l.entries),
        ));
    }
    out.push(CheckResult::of(
        "layers: vertically and horizontally symmetric",
        layers
            .iter()
            .all(|t| t.is_vertically_symmetric() && t.is_horizontally_symmetric()),
        || "some layer breaks a diamond symmetry".into(),
    ));
    {
        let trivial_table = hstar_diamond(&mixed_p, d)?;
        let mut ok = true;
        let mut detail = String::new();
        'outer: for (r, layer) in layers.iter().enumerate() {
            for p_ in 0..=r {
                let sum: BigInt = layer.entries[p_].iter().sum();
                if sum != *trivial_table.entry(p_, r - p_) {
                    ok = false;
                    detail = format!(
                        "layer {r} diagonal {p_}: sum {sum}, trivial entry {}",
                        trivial_table.entry(p_, r - p_)
                    );
                    break 'outer;
                }
            }
        }
        out.push(CheckResult::of(
            "layers: diagonal sums match the one-polytope table",
            ok,
            || detail,
        ));
    }
    {
        let int_sigma = |gr: &dyn Fn(i32) -> bool, br: i32| -> BigInt {
            (0..n_cells)
                .filter(|&f| {
                    gr(c.poset().rank(f))
                        && lattice.poset.rank(data.sfs().sigma(f)) == br
                })
                .map(|f| c.cell_polytope(f).count_interior_points(1))
                .sum()
        };
        let mut ok = true;
        let mut detail = String::new();
        'l_outer: for (r, layer) in layers.iter().enumerate().skip(1) {
            let corner = int_sigma(&|g| g <= 2, r as i32 + 2);
            if *layer.entry(0, 0) != corner {
                ok = false;
                detail = format!("layer {r} corner: entry {}, count {corner}", layer.entry(0, 0));
                break;
            }
            for q in 1..=r {
                let count = int_sigma(&|g| g == q as i32 + 2, r as i32 + 2);
                if *layer.entry(0, q) != count {
                    ok = false;
                    detail =
                        format!("layer {r} entry (0,{q}): {}, count {count}", layer.entry(0, q));
                    break 'l_outer;
                }
            }
        }
        out.push(CheckResult::of(
            "layers: corner entries count interior points by carrier",
            ok,
            || detail,
        ));
    }
    {
        let mut ok = true;
        'b_outer: for layer in &layers {
            let r = layer.side() - 1;
            for k in 0..=r {
                for i in 0..=k {
                    if layer.entry(k, 0) > layer.entry(k - i, i) {
                        ok = false;
                        break 'b_outer;
                    }
                }
                for i in 0..=(r - k) {
                    if layer.entry(r, k) > layer.entry(r - i, k + i) {
                        ok = false;
                        break 'b_outer;
                    }
                }
            }
        }
        out.push(CheckResult::of(
            "layers: first column and last row bound their strips",
            ok,
            || "a boundary entry exceeds an inner entry of its strip".into(),
        ));
    }
    if c.is_regular() {
        let mut ok = true;
        'r_outer: for layer in &layers {
            let r = layer.side() - 1;
            for k in 0..=r {
                let strip: Vec<BigInt> =
                    (0..=(r - k)).map(|i| layer.entry(k + i, i).clone()).collect();
                if !is_palindrome(&strip) || !is_unimodal_ints(&strip) {
                    ok = false;
                    break 'r_outer;
                }
            }
        }
        out.push(CheckResult::of(
            "layers: strips symmetric and unimodal for regular subdivisions",
            ok,
            || "a vertical strip is not a symmetric unimodal sequence".into(),
        ));
    }
    if let Some(rebuilt) = refined_from_interior_counts(c)? {
        out.push(expect_eq(
            "counts: refined polynomial rebuilt from interior counts",
            &rebuilt,
            &refined,
        ));
    }

    Ok(out)
}

/// Checks for one subdivision refining another: the induced strong formal
/// subdivision, assembly of the finer limit pair from restricted data, and
/// the difference formulas with their positivity consequences.
pub fn run_refinement_battery(
    fine: &CellComplex,
    coarse: &CellComplex,
) -> Result<Vec<CheckResult>, EhrhartError> {
    let tau = refining_sfs(fine, coarse)?;
    let tau_inv = SfsInvariants::new(&tau)?;
    let coarse_data = ComplexData::new(coarse)?;
    let fine_data = ComplexData::new(fine)?;
    let coarse_inv = SfsInvariants::new(coarse_data.sfs())?;
    let fine_inv = SfsInvariants::new(fine_data.sfs())?;
    let d = coarse.polytope().dim();
    let top = coarse_data.faces().top();
    let (fine_h, fine_l) = fine_data.limit_mixed_pair()?;
    let uv = SubstMap::t_to_uv();
    let mut out = Vec::new();

    out.push(CheckResult::of(
        "refining map: carriers compose",
        (0..fine.cell_count())
            .all(|y| coarse_data.sfs().sigma(tau.sigma(y)) == fine_data.sfs().sigma(y)),
        || "composed carrier differs from the direct carrier".into(),
    ));

    // Limit pairs and combinatorial local h of the fine complex restricted
    // to each coarse cell.
    let mut rest_pairs: Vec<(LaurentPoly, LaurentPoly)> = Vec::with_capacity(coarse.cell_count());
    let mut rest_local_h: Vec<LaurentPoly> = Vec::with_capacity(coarse.cell_count());
    for f in 0..coarse.cell_count() {
        let cell = coarse.cell_polytope(f);
        if cell.is_empty() {
            rest_pairs.push((LaurentPoly::one(), LaurentPoly::one()));
            rest_local_h.push(LaurentPoly::one());
        } else {
            let sub = fine.restrict_to(cell)?;
            let sub_data = ComplexData::new(&sub)?;
            rest_pairs.push(sub_data.limit_mixed_pair()?);
            rest_local_h.push(SfsInvariants::new(sub_data.sfs())?.local_h()?);
        }
    }
    {
        let mut interior_sum = LaurentPoly::zero();
        for f in 0..coarse.cell_count() {
            if coarse_data.sfs().sigma(f) == top {
                let k = (d + 1 - coarse.poset().rank(f)) as usize;
                interior_sum += &rest_pairs[f].0 * &monomial_minus_one_pow([0, 2, 2, 0], k);
            }
        }
        out.push(expect_eq(
            "refinement: interior cells assemble the finer hstar pair",
            &interior_sum,
            &fine_h,
        ));
    }
    {
        let mut through_links = LaurentPoly::zero();
        let mut local_links = LaurentPoly::zero();
        for f in 0..coarse.cell_count() {
            through_links += &rest_pairs[f].1 * &coarse_inv.h_up(f, top)?.substitute(&uv)?;
            local_links += &rest_pairs[f].1 * &coarse_inv.local_h_rel(top, f)?.substitute(&uv)?;
        }
        out.push(expect_eq(
            "refinement: local pairs assemble the finer hstar pair through links",
            &through_links,
            &fine_h,
        ));
        out.push(expect_eq(
            "refinement: local pairs assemble the finer local pair",
            &local_links,
            &fine_l,
        ));
    }

    // Difference formulas: refining can only add to the combinatorial
    // mixed h and local h, by an explicitly local amount.
    let h_fine = fine_inv.mixed_h()?;
    let h_coarse = coarse_inv.mixed_h()?;
    let l_fine = fine_inv.local_h()?;
    let l_coarse = coarse_inv.local_h()?;
    {
        let mut mixed_diff = LaurentPoly::zero();
        let mut local_diff = LaurentPoly::zero();
        for f in 0..coarse.cell_count() {
            if coarse.cell_polytope(f).is_empty() {
                continue;
            }
            let shifted = rest_local_h[f]
                .substitute(&SubstMap::t_to_u_over_v())?
                .mul_monomial([0, 0, 2 * coarse.poset().rank(f), 0]);
            mixed_diff += &coarse_inv.mixed_h_rel(top, f)? * &shifted;
            local_diff += &coarse_inv.local_h_rel(top, f)? * &rest_local_h[f];
        }
        out.push(expect_eq(
            "refinement: mixed h difference from relative local data",
            &(&h_coarse + &mixed_diff),
            &h_fine,
        ));
        out.push(expect_eq(
            "refinement: local h difference from relative local data",
            &(&l_coarse + &local_diff),
            &l_fine,
        ));
    }
    out.push(expect_geq(
        "refinement: finer mixed h dominates",
        &h_fine,
        &h_coarse,
    ));
    out.push(expect_geq(
        "refinement: finer local h dominates",
        &l_fine,
        &l_coarse,
    ));
    if fine.is_regular() && coarse.is_regular() {
        let diff = &l_fine - &l_coarse;
        let profile = diff.profile(Var::T)?;
        out.push(CheckResult::of(
            "refinement: regular local h difference symmetric and unimodal",
            profile.is_symmetric(HalfExp::half(d + 1)) && profile.is_unimodal(),
            || format!("difference {diff}"),
        ));
    }
    out.extend(crate::subdivision::check_composition(
        &coarse_inv,
        &tau_inv,
        &fine_inv,
    )?);

    Ok(out)
}

// ---------------------------------------------------------------------------
