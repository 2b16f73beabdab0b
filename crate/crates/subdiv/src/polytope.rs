//! Lattice polytopes, their face lattices, and polyhedral cell complexes.
//!
//! A [`LatticePolytope`] is the convex hull of finitely many points of ℤ^n,
//! together with the lattice induced on its affine hull. Inputs may carry a
//! `lattice_basis`: an integer change-of-coordinates matrix with nonzero
//! determinant whose rows express the working lattice in the written
//! coordinates; it is applied once up front, after which everything runs in
//! standard coordinates.
//!
//! All geometry is exact. Facets are found by brute-force hyperplane
//! enumeration over the (coordinate-reduced) vertex set, which is entirely
//! adequate at the dimensions this crate targets (≤ 6). Counting, volume,
//! and point enumeration happen in reduced coordinates: a lattice-preserving
//! isomorphism `aff(P) ∩ ℤ^n ≅ ℤ^dim` obtained from a saturated basis of
//! the direction lattice, so lower-dimensional faces get their intrinsic
//! point counts, not the ambient ones.
//!
//! A [`CellComplex`] is a polyhedral subdivision given by its maximal
//! cells. Validation checks containment, full-dimensionality, an exact
//! volume balance, the ridge condition (interior ridges in exactly two
//! cells, boundary ridges in one), and that pairwise intersections of
//! maximal cells are common faces — exactly, by vertex enumeration of the
//! intersection, when that intersection has dimension ≤ 3, and by a
//! vertex-set test above that. [`CellComplex::to_sfs`] converts the face
//! poset with its carrier map into a [`StrongFormalSubdivision`], whose own
//! constructor re-validates the combinatorial axioms — a second, independent
//! line of defense against bad geometry.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::linalg::{
    determinant_int, integer_kernel, invert, primitive, rank_int, saturated_basis,
    to_rational_mat, to_rational_vec, QMat, ZMat, ZVec,
};
use crate::poset::{PosetError, RankedPoset};
use crate::subdivision::{StrongFormalSubdivision, SubdivisionError};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PolytopeError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error(transparent)]
    Subdivision(#[from] SubdivisionError),
    #[error("lattice basis must be a square integer matrix with nonzero determinant")]
    BadLatticeBasis,
    #[error("point has {got} coordinates, expected {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("operation is undefined for the empty polytope")]
    EmptyPolytope,
    #[error("a cell complex needs at least one nonempty cell")]
    EmptyComplex,
    #[error("heights must match points: {points} points, {heights} heights")]
    HeightsMismatch { points: usize, heights: usize },
    #[error("duplicate point in height input")]
    DuplicatePoint,
    #[error("cell {cell} is not contained in the subdivided polytope")]
    CellOutsidePolytope { cell: String },
    #[error("maximal cell {cell} has dimension {got}, expected {want}")]
    CellDimension { cell: String, got: i32, want: i32 },
    #[error("cell volumes sum to {sum}, but the subdivided polytope has volume {total}")]
    VolumeMismatch { sum: BigInt, total: BigInt },
    #[error("ridge {face} lies in {count} maximal cell(s), expected {want}")]
    RidgeCount { face: String, count: usize, want: usize },
    #[error("cells {first} and {second} do not intersect in a common face")]
    ImproperIntersection { first: String, second: String },
    #[error("malformed polytope JSON: {0}")]
    Json(String),
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[BigInt], b: &[BigInt]) -> ZVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Coordinates this small take the machine-integer counting path; dot
/// products then fit i128 with room to spare for any u32 dilation factor.
const SMALL_COORD: i64 = 1 << 40;

fn small_i64(x: &BigInt) -> Option<i64> {
    x.to_i64().filter(|v| v.abs() < SMALL_COORD)
}

/// The convex hull of lattice points, with exact facet and lattice data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePolytope {
    ambient: usize,
    /// Hull vertices in lexicographic order; empty for the empty polytope.
    vertices: Vec<ZVec>,
    dim: i32,
    /// Rows: a ℤ-basis of the saturated direction lattice (dim × ambient).
    basis: ZMat,
    /// `reduce · (x − vertices[0])` maps aff(P) ∩ ℤ^n onto ℤ^dim.
    reduce: QMat,
    reduced_vertices: Vec<ZVec>,
    /// Reduced-space facets `a · y ≤ b`, jointly primitive.
    reduced_facets: Vec<(ZVec, BigInt)>,
    /// The same facets pulled back to ambient coordinates.
    facets: Vec<(ZVec, BigInt)>,
    /// Equations `c · x = d` cutting out the affine hull.
    hull_eqs: Vec<(ZVec, BigInt)>,
    /// Machine-integer copies of the reduced data, when small enough.
    reduced_i64: Option<Vec<Vec<i64>>>,
    facets_i64: Option<Vec<(Vec<i64>, i64)>>,
}

impl LatticePolytope {
    pub fn empty(ambient: usize) -> LatticePolytope {
        LatticePolytope {
            ambient,
            vertices: Vec::new(),
            dim: -1,
            basis: Vec::new(),
            reduce: Vec::new(),
            reduced_vertices: Vec::new(),
            reduced_facets: Vec::new(),
            facets: Vec::new(),
            hull_eqs: Vec::new(),
            reduced_i64: None,
            facets_i64: None,
        }
    }

    pub fn new(points: Vec<ZVec>) -> Result<LatticePolytope, PolytopeError> {
        let ambient = match points.first() {
            Some(p) => p.len(),
            None => return Ok(LatticePolytope::empty(0)),
        };
        for p in &points {
            if p.len() != ambient {
                return Err(PolytopeError::PointDimension { expected: ambient, got: p.len() });
            }
        }
        let mut points = points;
        points.sort();
        points.dedup();

        // First pass identifies the hull vertices; the second rebuilds all
        // data from the sorted vertex list so equal polytopes are identical.
        let vertices = hull_vertices(&points);
        LatticePolytope::from_vertex_list(ambient, vertices)
    }

    /// Applies the lattice basis change `x ↦ T x` first, then takes the hull.
    pub fn with_lattice_basis(
        points: Vec<ZVec>,
        t: &ZMat,
    ) -> Result<LatticePolytope, PolytopeError> {
        let ambient = match points.first() {
            Some(p) => p.len(),
            None => return Ok(LatticePolytope::empty(0)),
        };
        if t.len() != ambient
            || t.iter().any(|row| row.len() != ambient)
            || determinant_int(t).is_zero()
        {
            return Err(PolytopeError::BadLatticeBasis);
        }
        let transformed = points
            .iter()
            .map(|p| {
                if p.len() != ambient {
                    return Err(PolytopeError::PointDimension { expected: ambient, got: p.len() });
                }
                Ok(t.iter().map(|row| dot(row, p)).collect())
            })
            .collect::<Result<Vec<ZVec>, _>>()?;
        LatticePolytope::new(transformed)
    }

    fn from_vertex_list(
        ambient: usize,
        vertices: Vec<ZVec>,
    ) -> Result<LatticePolytope, PolytopeError> {
        let base = vertices[0].clone();
        let dirs: ZMat = vertices.iter().map(|v| sub(v, &base)).collect();
        let dim = rank_int(&dirs) as i32;
        let d = dim as usize;

        // At full dimension the identity basis keeps reduced coordinates
        // equal to translated ambient ones, so enumeration boxes stay tight.
        let basis: ZMat = if d == ambient {
            (0..ambient)
                .map(|i| {
                    (0..ambient)
                        .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                        .collect()
                })
                .collect()
        } else {
            saturated_basis(&dirs)
        };
        debug_assert_eq!(basis.len(), d);

        // reduce = (B Bᵀ)⁻¹ B sends basis combinations to their coefficients.
        let reduce: QMat = if d == 0 {
            Vec::new()
        } else {
            let bq = to_rational_mat(&basis);
            let gram: QMat = (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| {
                            (0..ambient).map(|k| &bq[i][k] * &bq[j][k]).sum::<BigRational>()
                        })
                        .collect()
                })
                .collect();
            let ginv = invert(&gram).expect("Gram matrix of a basis is invertible");
            (0..d)
                .map(|i| {
                    (0..ambient)
                        .map(|j| (0..d).map(|k| &ginv[i][k] * &bq[k][j]).sum::<BigRational>())
                        .collect()
                })
                .collect()
        };

        let reduce_point = |x: &[BigInt]| -> ZVec {
            let diff = sub(x, &base);
            reduce
                .iter()
                .map(|row| {
                    let acc: BigRational = row
                        .iter()
                        .zip(&diff)
                        .map(|(r, d)| r * BigRational::from_integer(d.clone()))
                        .sum();
                    debug_assert!(acc.is_integer(), "vertex off the induced lattice");
                    acc.to_integer()
                })
                .collect()
        };
        let reduced_vertices: Vec<ZVec> = vertices.iter().map(|v| reduce_point(v)).collect();

        let reduced_facets = facets_of_full_dim(&reduced_vertices, d);

        // Pull each reduced facet a·y ≤ b back through y = reduce (x − base).
        let facets: Vec<(ZVec, BigInt)> = reduced_facets
            .iter()
            .map(|(a, b)| {
                let wq: Vec<BigRational> = (0..ambient)
                    .map(|j| {
                        a.iter()
                            .zip(&reduce)
                            .map(|(ai, row)| BigRational::from_integer(ai.clone()) * &row[j])
                            .sum()
                    })
                    .collect();
                let mut lcm = BigInt::one();
                for x in &wq {
                    lcm = lcm.lcm(x.denom());
                }
                let w: ZVec = wq.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
                let rhs = b * &lcm + dot(&w, &base);
                let mut joint = w.clone();
                joint.push(rhs);
                let joint = primitive(&to_rational_vec(&joint));
                // primitive() may flip the sign; keep the ≤ orientation.
                let flip = w
                    .iter()
                    .zip(&joint)
                    .any(|(old, new)| !old.is_zero() && old.sign() != new.sign());
                let mut normal: ZVec = joint[..ambient].to_vec();
                let mut rhs = joint[ambient].clone();
                if flip {
                    normal = normal.iter().map(|x| -x).collect();
                    rhs = -rhs;
                }
                (normal, rhs)
            })
            .collect();

        let hull_eqs: Vec<(ZVec, BigInt)> = if d == ambient {
            Vec::new()
        } else {
            let dir_rows: ZMat = if dirs.iter().all(|r| r.iter().all(|x| x.is_zero())) {
                // A single point: the kernel of "no directions" is all of ℤ^n.
                vec![vec![BigInt::zero(); ambient]]
            } else {
                dirs
            };
            integer_kernel(&dir_rows)
                .into_iter()
                .map(|c| {
                    let rhs = dot(&c, &base);
                    (c, rhs)
                })
                .collect()
        };

        let reduced_i64: Option<Vec<Vec<i64>>> = reduced_vertices
            .iter()
            .map(|v| v.iter().map(small_i64).collect())
            .collect();
        let facets_i64: Option<Vec<(Vec<i64>, i64)>> = reduced_facets
            .iter()
            .map(|(a, b)| {
                let a: Option<Vec<i64>> = a.iter().map(small_i64).collect();
                Some((a?, small_i64(b)?))
            })
            .collect();

        Ok(LatticePolytope {
            ambient,
            vertices,
            dim,
            basis,
            reduce,
            reduced_vertices,
            reduced_facets,
            facets,
            hull_eqs,
            reduced_i64,
            facets_i64,
        })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> i32 {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[ZVec] {
        &self.vertices
    }

    /// Ambient facet inequalities `a · x ≤ b`.
    pub fn facets(&self) -> &[(ZVec, BigInt)] {
        &self.facets
    }

    /// Membership in the closed polytope.
    pub fn contains(&self, x: &[BigInt]) -> bool {
        if self.is_empty() || x.len() != self.ambient {
            return false;
        }
        if self.dim == 0 {
            return x == self.vertices[0].as_slice();
        }
        self.hull_eqs.iter().all(|(c, d)| dot(c, x) == *d)
            && self.facets.iter().all(|(a, b)| dot(a, x) <= *b)
    }

    /// Membership in the relative interior.
    pub fn contains_in_relative_interior(&self, x: &[BigInt]) -> bool {
        if self.is_empty() || x.len() != self.ambient {
            return false;
        }
        if self.dim == 0 {
            return x == self.vertices[0].as_slice();
        }
        self.hull_eqs.iter().all(|(c, d)| dot(c, x) == *d)
            && self.facets.iter().all(|(a, b)| dot(a, x) < *b)
    }

    /// Reduced coordinates of a lattice point on the affine hull; None off
    /// the hull or off the induced lattice.
    pub fn reduced_coords(&self, x: &[BigInt]) -> Option<ZVec> {
        if self.is_empty() || x.len() != self.ambient {
            return None;
        }
        if !self.hull_eqs.iter().all(|(c, d)| dot(c, x) == *d) {
            return None;
        }
        let diff = sub(x, &self.vertices[0]);
        let mut out = Vec::with_capacity(self.dim as usize);
        for row in &self.reduce {
            let acc: BigRational = row
                .iter()
                .zip(&diff)
                .map(|(r, d)| r * BigRational::from_integer(d.clone()))
                .sum();
            if !acc.is_integer() {
                return None;
            }
            out.push(acc.to_integer());
        }
        Some(out)
    }

    /// Lifts reduced coordinates back to the ambient lattice.
    pub fn lift_coords(&self, y: &[BigInt]) -> ZVec {
        let mut x = self.vertices[0].clone();
        for (yi, row) in y.iter().zip(&self.basis) {
            for (xj, bj) in x.iter_mut().zip(row) {
                *xj += yi * bj;
            }
        }
        x
    }

    /// The number of lattice points in the m-th dilate.
    pub fn count_lattice_points(&self, m: u32) -> BigInt {
        self.count_dilate(m, false)
    }

    /// The number of lattice points in the relative interior of the m-th
    /// dilate.
    pub fn count_interior_points(&self, m: u32) -> BigInt {
        self.count_dilate(m, true)
    }

    fn count_dilate(&self, m: u32, interior: bool) -> BigInt {
        if self.is_empty() {
            // The zeroth dilate of anything is the single point 0.
            return if m == 0 && !interior { BigInt::one() } else { BigInt::zero() };
        }
        if self.dim == 0 {
            return BigInt::one();
        }
        if m == 0 {
            return if interior { BigInt::zero() } else { BigInt::one() };
        }
        if let (Some(rv), Some(rf)) = (&self.reduced_i64, &self.facets_i64) {
            return count_dilate_i64(rv, rf, self.dim as usize, m, interior);
        }
        count_dilate_big(
            &self.reduced_vertices,
            &self.reduced_facets,
            self.dim as usize,
            m,
            interior,
        )
    }

    /// All lattice points of the polytope itself, in ambient coordinates.
    pub fn lattice_points(&self) -> Vec<ZVec> {
        if self.is_empty() {
            return Vec::new();
        }
        if self.dim == 0 {
            return vec![self.vertices[0].clone()];
        }
        let d = self.dim as usize;
        let lo: Vec<BigInt> = (0..d)
            .map(|j| self.reduced_vertices.iter().map(|v| &v[j]).min().unwrap().clone())
            .collect();
        let hi: Vec<BigInt> = (0..d)
            .map(|j| self.reduced_vertices.iter().map(|v| &v[j]).max().unwrap().clone())
            .collect();
        let mut out = Vec::new();
        let mut y = lo.clone();
        'outer: loop {
            if self.reduced_facets.iter().all(|(a, b)| dot(a, &y) <= *b) {
                out.push(self.lift_coords(&y));
            }
            for j in 0..d {
                if y[j] < hi[j] {
                    y[j] += 1;
                    for (k, yk) in y.iter_mut().enumerate().take(j) {
                        *yk = lo[k].clone();
                    }
                    continue 'outer;
                }
            }
            break;
        }
        out.sort();
        out
    }

    /// The normalized volume: dim! times the Euclidean volume measured
    /// against the induced lattice; 1 for a point, 0 for the empty polytope.
    pub fn normalized_volume(&self) -> Result<BigInt, PolytopeError> {
        if self.is_empty() {
            return Ok(BigInt::zero());
        }
        if self.dim == 0 {
            return Ok(BigInt::one());
        }
        let mut total = BigInt::zero();
        for simplex in self.pulling_triangulation()? {
            let rows: ZMat = simplex[1..]
                .iter()
                .map(|&v| sub(&self.reduced_vertices[v], &self.reduced_vertices[simplex[0]]))
                .collect();
            total += determinant_int(&rows).abs();
        }
        Ok(total)
    }

    /// The pulling triangulation: each face is coned from its
    /// lexicographically least vertex over the triangulations of the facets
    /// of that face avoiding it. Simplices are vertex-index lists.
    pub fn pulling_triangulation(&self) -> Result<Vec<Vec<usize>>, PolytopeError> {
        if self.is_empty() {
            return Err(PolytopeError::EmptyPolytope);
        }
        let lattice = self.face_lattice()?;
        let top = lattice.poset.top().expect("face lattice has a maximum");
        let mut memo: HashMap<usize, Vec<Vec<usize>>> = HashMap::new();
        Ok(pull_face(&lattice, top, &mut memo))
    }

    /// The face lattice as a ranked poset (∅ at rank 0, P at rank dim + 1)
    /// with each face's vertex-index set.
    pub fn face_lattice(&self) -> Result<FaceLattice, PolytopeError> {
        if self.is_empty() {
            let poset = RankedPoset::build_indexed(vec!["e".into()], &[], vec![0])?;
            return Ok(FaceLattice { poset, face_vertices: vec![Vec::new()] });
        }
        let n = self.vertices.len();
        let all: BTreeSet<usize> = (0..n).collect();
        let mut faces: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
        faces.insert(all.clone());
        faces.insert(BTreeSet::new());
        let mut queue = vec![all];
        while let Some(f) = queue.pop() {
            for (a, b) in &self.reduced_facets {
                let cut: BTreeSet<usize> = f
                    .iter()
                    .copied()
                    .filter(|&v| dot(a, &self.reduced_vertices[v]) == *b)
                    .collect();
                if !faces.contains(&cut) {
                    faces.insert(cut.clone());
                    queue.push(cut);
                }
            }
        }
        let mut face_list: Vec<Vec<usize>> =
            faces.into_iter().map(|f| f.into_iter().collect::<Vec<usize>>()).collect();
        let rank_of = |f: &[usize]| -> i32 {
            if f.is_empty() {
                return 0;
            }
            let dirs: ZMat = f[1..]
                .iter()
                .map(|&v| sub(&self.vertices[v], &self.vertices[f[0]]))
                .collect();
            rank_int(&dirs) as i32 + 1
        };
        face_list.sort_by_key(|f| (rank_of(f), f.clone()));
        let ids: Vec<String> = face_list.iter().map(|f| face_id(f)).collect();
        let ranks: Vec<i32> = face_list.iter().map(|f| rank_of(f)).collect();
        let mut covers = Vec::new();
        for (i, f) in face_list.iter().enumerate() {
            for (j, g) in face_list.iter().enumerate() {
                if ranks[j] == ranks[i] + 1 && f.iter().all(|v| g.contains(v)) {
                    covers.push((i, j));
                }
            }
        }
        let poset = RankedPoset::build_indexed(ids, &covers, ranks)?;
        Ok(FaceLattice { poset, face_vertices: face_list })
    }

    /// The sub-polytope spanned by the given vertices.
    pub fn face_polytope(
        &self,
        vertex_indices: &[usize],
    ) -> Result<LatticePolytope, PolytopeError> {
        if vertex_indices.is_empty() {
            return Ok(LatticePolytope::empty(self.ambient));
        }
        LatticePolytope::new(vertex_indices.iter().map(|&v| self.vertices[v].clone()).collect())
    }

    /// The vertex set of the smallest face containing all given points;
    /// None if some point lies outside the polytope. Points may be rational.
    pub fn carrier(&self, points: &[Vec<BigRational>]) -> Option<Vec<usize>> {
        if self.is_empty() {
            return None;
        }
        let eval = |a: &[BigInt], x: &[BigRational]| -> BigRational {
            a.iter()
                .zip(x)
                .map(|(c, v)| BigRational::from_integer(c.clone()) * v)
                .sum()
        };
        for x in points {
            if x.len() != self.ambient {
                return None;
            }
            if !self
                .hull_eqs
                .iter()
                .all(|(c, d)| eval(c, x) == BigRational::from_integer(d.clone()))
            {
                return None;
            }
            if self.dim == 0 {
                if *x != to_rational_vec(&self.vertices[0]) {
                    return None;
                }
            } else if !self
                .facets
                .iter()
                .all(|(a, b)| eval(a, x) <= BigRational::from_integer(b.clone()))
            {
                return None;
            }
        }
        if points.is_empty() {
            return Some(Vec::new());
        }
        if self.dim == 0 {
            return Some(vec![0]);
        }
        let active: Vec<usize> = (0..self.facets.len())
            .filter(|&i| {
                let (a, b) = &self.facets[i];
                points.iter().all(|x| eval(a, x) == BigRational::from_integer(b.clone()))
            })
            .collect();
        Some(
            (0..self.vertices.len())
                .filter(|&v| {
                    active.iter().all(|&i| {
                        let (a, b) = &self.facets[i];
                        dot(a, &self.vertices[v]) == *b
                    })
                })
                .collect(),
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "vertices": self
                .vertices
                .iter()
                .map(|v| Value::Array(v.iter().map(json_int).collect()))
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &Value) -> Result<LatticePolytope, PolytopeError> {
        let obj = value
            .as_object()
            .ok_or_else(|| PolytopeError::Json("expected an object".into()))?;
        let points = parse_points(
            obj.get("vertices")
                .ok_or_else(|| PolytopeError::Json("missing \"vertices\"".into()))?,
        )?;
        match obj.get("lattice_basis") {
            Some(t) => LatticePolytope::with_lattice_basis(points, &parse_points(t)?),
            None => LatticePolytope::new(points),
        }
    }
}

/// Counts `{y ∈ ℤ^d : a·y ≤ m·b}` (or with strict inequalities for the
/// interior) by running an odometer over the first d − 1 coordinates and
/// bounding the last one by an interval, in machine integers.
fn count_dilate_i64(
    verts: &[Vec<i64>],
    facets: &[(Vec<i64>, i64)],
    d: usize,
    m: u32,
    interior: bool,
) -> BigInt {
    let m = i128::from(m);
    // a·y < b on integers is exactly a·y ≤ b − 1.
    let strict = i128::from(interior);
    let lo: Vec<i128> = (0..d)
        .map(|j| verts.iter().map(|v| i128::from(v[j])).min().unwrap() * m)
        .collect();
    let hi: Vec<i128> = (0..d)
        .map(|j| verts.iter().map(|v| i128::from(v[j])).max().unwrap() * m)
        .collect();
    let rhs: Vec<i128> = facets.iter().map(|(_, b)| i128::from(*b) * m - strict).collect();
    let mut count = BigInt::zero();
    let mut y: Vec<i128> = lo[..d - 1].to_vec();
    loop {
        let mut lb = lo[d - 1];
        let mut ub = hi[d - 1];
        for ((a, _), r) in facets.iter().zip(&rhs) {
            let s = r
                - a[..d - 1]
                    .iter()
                    .zip(&y)
                    .map(|(&ai, &yi)| i128::from(ai) * yi)
                    .sum::<i128>();
            let c = i128::from(a[d - 1]);
            if c == 0 {
                if s < 0 {
                    ub = lb - 1;
                    break;
                }
            } else if c > 0 {
                ub = ub.min(Integer::div_floor(&s, &c));
            } else {
                lb = lb.max(Integer::div_ceil(&s, &c));
            }
        }
        if ub >= lb {
            count += BigInt::from(ub - lb + 1);
        }
        let mut j = 0;
        loop {
            if j + 1 == d {
                return count;
            }
            if y[j] < hi[j] {
                y[j] += 1;
                for (k, yk) in y.iter_mut().enumerate().take(j) {
                    *yk = lo[k];
                }
                break;
            }
            j += 1;
        }
    }
}

/// Arbitrary-precision fallback of [`count_dilate_i64`].
fn count_dilate_big(
    verts: &[ZVec],
    facets: &[(ZVec, BigInt)],
    d: usize,
    m: u32,
    interior: bool,
) -> BigInt {
    let m = BigInt::from(m);
    let strict = BigInt::from(i32::from(interior));
    let lo: Vec<BigInt> =
        (0..d).map(|j| verts.iter().map(|v| &v[j]).min().unwrap() * &m).collect();
    let hi: Vec<BigInt> =
        (0..d).map(|j| verts.iter().map(|v| &v[j]).max().unwrap() * &m).collect();
    let rhs: Vec<BigInt> = facets.iter().map(|(_, b)| b * &m - &strict).collect();
    let mut count = BigInt::zero();
    let mut y: Vec<BigInt> = lo[..d - 1].to_vec();
    loop {
        let mut lb = lo[d - 1].clone();
        let mut ub = hi[d - 1].clone();
        for ((a, _), r) in facets.iter().zip(&rhs) {
            let s = r - a[..d - 1].iter().zip(&y).map(|(ai, yi)| ai * yi).sum::<BigInt>();
            let c = &a[d - 1];
            if c.is_zero() {
                if s.is_negative() {
                    ub = &lb - 1;
                    break;
                }
            } else if c.is_positive() {
                ub = ub.min(Integer::div_floor(&s, c));
            } else {
                lb = lb.max(Integer::div_ceil(&s, c));
            }
        }
        if ub >= lb {
            count += ub - &lb + 1;
        }
        let mut j = 0;
        loop {
            if j + 1 == d {
                return count;
            }
            if y[j] < hi[j] {
                y[j] += 1;
                for (k, yk) in y.iter_mut().enumerate().take(j) {
                    *yk = lo[k].clone();
                }
                break;
            }
            j += 1;
        }
    }
}

fn json_int(x: &BigInt) -> Value {
    Value::Number(x.to_i64().expect("coordinate fits in i64").into())
}

fn parse_points(value: &Value) -> Result<Vec<ZVec>, PolytopeError> {
    let rows = value
        .as_array()
        .ok_or_else(|| PolytopeError::Json("expected an array of points".into()))?;
    rows.iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| PolytopeError::Json("point must be an array".into()))?
                .iter()
                .map(|x| {
                    x.as_i64()
                        .map(BigInt::from)
                        .ok_or_else(|| PolytopeError::Json("coordinate must be an integer".into()))
                })
                .collect()
        })
        .collect()
}

fn face_id(vertex_set: &[usize]) -> String {
    if vertex_set.is_empty() {
        "e".to_string()
    } else {
        vertex_set.iter().map(usize::to_string).collect::<Vec<_>>().join(".")
    }
}

/// The face lattice of a polytope; poset indices align with `face_vertices`.
#[derive(Clone, Debug)]
pub struct FaceLattice {
    pub poset: RankedPoset,
    pub face_vertices: Vec<Vec<usize>>,
}

impl FaceLattice {
    /// The poset index of the face with the given (sorted) vertex set.
    pub fn index_of(&self, vertex_set: &[usize]) -> Option<usize> {
        self.poset.index_of(&face_id(vertex_set))
    }
}

fn pull_face(
    lattice: &FaceLattice,
    face: usize,
    memo: &mut HashMap<usize, Vec<Vec<usize>>>,
) -> Vec<Vec<usize>> {
    if let Some(s) = memo.get(&face) {
        return s.clone();
    }
    let verts = &lattice.face_vertices[face];
    let result = if verts.len() == 1 {
        vec![verts.clone()]
    } else {
        let apex = *verts.iter().min().unwrap();
        let mut simplices = Vec::new();
        for (g, gverts) in lattice.face_vertices.iter().enumerate() {
            let is_facet_of = lattice.poset.rank(g) + 1 == lattice.poset.rank(face)
                && lattice.poset.le(g, face);
            if !is_facet_of || gverts.is_empty() || gverts.contains(&apex) {
                continue;
            }
            for mut s in pull_face(lattice, g, memo) {
                s.push(apex);
                s.sort_unstable();
                simplices.push(s);
            }
        }
        simplices
    };
    memo.insert(face, result.clone());
    result
}

/// Hull vertices of a deduplicated point set, in lexicographic order.
fn hull_vertices(points: &[ZVec]) -> Vec<ZVec> {
    if points.len() <= 1 {
        return points.to_vec();
    }
    let base = &points[0];
    let dirs: ZMat = points.iter().map(|p| sub(p, base)).collect();
    let d = rank_int(&dirs);
    if d == 0 {
        return vec![points[0].clone()];
    }
    // Work in reduced coordinates so facet enumeration is full-dimensional.
    let basis = saturated_basis(&dirs);
    let bq = to_rational_mat(&basis);
    let ambient = base.len();
    let gram: QMat = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..ambient).map(|k| &bq[i][k] * &bq[j][k]).sum::<BigRational>())
                .collect()
        })
        .collect();
    let ginv = invert(&gram).expect("Gram matrix of a basis is invertible");
    let reduced: Vec<ZVec> = points
        .iter()
        .map(|p| {
            let diff = to_rational_vec(&sub(p, base));
            (0..d)
                .map(|i| {
                    let acc: BigRational = (0..d)
                        .map(|k| {
                            &ginv[i][k]
                                * (0..ambient).map(|j| &bq[k][j] * &diff[j]).sum::<BigRational>()
                        })
                        .sum();
                    debug_assert!(acc.is_integer());
                    acc.to_integer()
                })
                .collect()
        })
        .collect();
    let facets = facets_of_full_dim(&reduced, d);
    points
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let active: ZMat = facets
                .iter()
                .filter(|(a, b)| dot(a, &reduced[*i]) == *b)
                .map(|(a, _)| a.clone())
                .collect();
            !active.is_empty() && rank_int(&active) == d
        })
        .map(|(_, p)| p.clone())
        .collect()
}

/// Facets of a full-dimensional point configuration in ℤ^d (d ≥ 1), found
/// by enumerating hyperplanes through d-subsets of the points. Each facet
/// `(a, b)` satisfies `a·x ≤ b` for every point, with `(a, b)` jointly
/// primitive.
fn facets_of_full_dim(points: &[ZVec], d: usize) -> Vec<(ZVec, BigInt)> {
    if d == 0 {
        return Vec::new();
    }
    let mut facets: BTreeSet<(ZVec, BigInt)> = BTreeSet::new();
    for subset in (0..points.len()).combinations(d) {
        let dirs: ZMat = subset[1..]
            .iter()
            .map(|&i| sub(&points[i], &points[subset[0]]))
            .collect();
        if d > 1 && rank_int(&dirs) != d - 1 {
            continue;
        }
        let kernel = if d == 1 { vec![vec![BigInt::one()]] } else { integer_kernel(&dirs) };
        if kernel.len() != 1 {
            continue;
        }
        let mut a = primitive(&to_rational_vec(&kernel[0]));
        let mut b = dot(&a, &points[subset[0]]);
        let mut below = false;
        let mut above = false;
        for p in points {
            let v = dot(&a, p);
            if v < b {
                below = true;
            } else if v > b {
                above = true;
            }
        }
        if below && above {
            continue; // not supporting
        }
        if above {
            a = a.iter().map(|x| -x).collect();
            b = -b;
        }
        facets.insert((a, b));
    }
    facets.into_iter().collect()
}

/// A polyhedral subdivision of a lattice polytope, given by maximal cells.
#[derive(Clone, Debug)]
pub struct CellComplex {
    /// All cell vertices, deduplicated and sorted; faces reference indices.
    points: Vec<ZVec>,
    /// Hull of all points: the subdivided polytope.
    polytope: LatticePolytope,
    /// Face poset of the complex: ∅ plus every face of every maximal cell,
    /// ranked by dim + 1; ids are sorted point-index sets.
    poset: RankedPoset,
    /// Point-index sets per poset element ([] for ∅).
    cell_points: Vec<Vec<usize>>,
    /// Polytopes per poset element (the empty polytope for ∅).
    cell_polytopes: Vec<LatticePolytope>,
    /// Poset indices of the maximal cells.
    maximal: Vec<usize>,
    /// Lifting heights witnessing regularity, when known.
    heights: Option<(Vec<ZVec>, Vec<BigInt>)>,
}

impl CellComplex {
    /// Builds and validates a subdivision from its maximal cells.
    pub fn new(max_cells: Vec<Vec<ZVec>>) -> Result<CellComplex, PolytopeError> {
        CellComplex::build(max_cells, None)
    }

    /// The trivial subdivision {P} of a nonempty polytope. Regular.
    pub fn trivial(polytope: &LatticePolytope) -> Result<CellComplex, PolytopeError> {
        if polytope.is_empty() {
            return Err(PolytopeError::EmptyComplex);
        }
        let pts = polytope.vertices().to_vec();
        let heights = vec![BigInt::zero(); pts.len()];
        CellComplex::build(vec![pts.clone()], Some((pts, heights)))
    }

    /// The regular subdivision induced by lifting each point to its height
    /// and projecting the lower hull back down.
    pub fn regular_from_heights(
        points: Vec<ZVec>,
        heights: Vec<BigInt>,
    ) -> Result<CellComplex, PolytopeError> {
        if points.len() != heights.len() {
            return Err(PolytopeError::HeightsMismatch {
                points: points.len(),
                heights: heights.len(),
            });
        }
        if points.is_empty() {
            return Err(PolytopeError::EmptyComplex);
        }
        {
            let mut seen = BTreeSet::new();
            for p in &points {
                if !seen.insert(p.clone()) {
                    return Err(PolytopeError::DuplicatePoint);
                }
            }
        }
        let hull = LatticePolytope::new(points.clone())?;
        let d = hull.dim();
        let lifted: Vec<ZVec> = points
            .iter()
            .zip(&heights)
            .map(|(p, h)| {
                let mut q = p.clone();
                q.push(h.clone());
                q
            })
            .collect();
        let lifted_dirs: ZMat = lifted[1..].iter().map(|p| sub(p, &lifted[0])).collect();
        let max_cells: Vec<Vec<ZVec>> = if rank_int(&lifted_dirs) as i32 == d {
            // Affine heights lift nothing: the subdivision is trivial.
            vec![points.clone()]
        } else {
            let lifted_poly = LatticePolytope::new(lifted.clone())?;
            let last = lifted_poly.ambient() - 1;
            lifted_poly
                .facets()
                .iter()
                .filter(|(a, _)| a[last].is_negative())
                .map(|(a, b)| {
                    points
                        .iter()
                        .zip(&lifted)
                        .filter(|(_, q)| dot(a, q) == *b)
                        .map(|(p, _)| p.clone())
                        .collect()
                })
                .collect()
        };
        CellComplex::build(max_cells, Some((points, heights)))
    }

    fn build(
        max_cells: Vec<Vec<ZVec>>,
        heights: Option<(Vec<ZVec>, Vec<BigInt>)>,
    ) -> Result<CellComplex, PolytopeError> {
        if max_cells.is_empty() || max_cells.iter().any(|c| c.is_empty()) {
            return Err(PolytopeError::EmptyComplex);
        }
        let cell_polys: Vec<LatticePolytope> =
            max_cells.into_iter().map(LatticePolytope::new).collect::<Result<_, _>>()?;

        let mut points: Vec<ZVec> =
            cell_polys.iter().flat_map(|c| c.vertices().iter().cloned()).collect();
        points.sort();
        points.dedup();
        let point_index: BTreeMap<&ZVec, usize> =
            points.iter().enumerate().map(|(i, p)| (p, i)).collect();

        let polytope = LatticePolytope::new(points.clone())?;
        let dim = polytope.dim();

        // Collect every face of every maximal cell, keyed by point set.
        let mut face_sets: BTreeSet<Vec<usize>> = BTreeSet::new();
        face_sets.insert(Vec::new());
        let mut maximal_sets = Vec::new();
        for cell in &cell_polys {
            let lattice = cell.face_lattice()?;
            let to_global = |vs: &[usize]| -> Vec<usize> {
                let mut g: Vec<usize> =
                    vs.iter().map(|&v| point_index[&cell.vertices()[v]]).collect();
                g.sort_unstable();
                g
            };
            for vs in &lattice.face_vertices {
                face_sets.insert(to_global(vs));
            }
            maximal_sets.push(to_global(&(0..cell.vertices().len()).collect::<Vec<usize>>()));
        }
        maximal_sets.sort();
        maximal_sets.dedup();

        let cell_points: Vec<Vec<usize>> = {
            // Order faces by (dimension + 1, point set) for stable ids.
            let mut with_rank: Vec<(i32, Vec<usize>)> = Vec::new();
            for f in face_sets {
                let poly = LatticePolytope::new(f.iter().map(|&i| points[i].clone()).collect())?;
                with_rank.push((poly.dim() + 1, f));
            }
            with_rank.sort();
            with_rank.into_iter().map(|(_, f)| f).collect()
        };
        let cell_polytopes: Vec<LatticePolytope> = cell_points
            .iter()
            .map(|f| {
                if f.is_empty() {
                    Ok(LatticePolytope::empty(polytope.ambient()))
                } else {
                    LatticePolytope::new(f.iter().map(|&i| points[i].clone()).collect())
                }
            })
            .collect::<Result<_, _>>()?;

        let ids: Vec<String> = cell_points.iter().map(|f| face_id(f)).collect();
        let ranks: Vec<i32> = cell_polytopes.iter().map(|c| c.dim() + 1).collect();
        let mut covers = Vec::new();
        for (i, f) in cell_points.iter().enumerate() {
            for (j, g) in cell_points.iter().enumerate() {
                // Vertex containment alone is not geometric containment, so
                // a candidate cover must also be an actual face.
                if ranks[j] == ranks[i] + 1
                    && f.iter().all(|v| g.contains(v))
                    && is_face_of(&cell_polytopes[j], &cell_polytopes[i])
                {
                    covers.push((i, j));
                }
            }
        }
        let poset = RankedPoset::build_indexed(ids, &covers, ranks)?;
        let maximal: Vec<usize> = maximal_sets
            .iter()
            .map(|f| poset.index_of(&face_id(f)).expect("maximal cell present"))
            .collect();

        let complex = CellComplex {
            points,
            polytope,
            poset,
            cell_points,
            cell_polytopes,
            maximal,
            heights,
        };
        complex.validate(dim)?;
        Ok(complex)
    }

    fn validate(&self, dim: i32) -> Result<(), PolytopeError> {
        // Containment and full dimension of maximal cells.
        for &m in &self.maximal {
            let cell = &self.cell_polytopes[m];
            if cell.dim() != dim {
                return Err(PolytopeError::CellDimension {
                    cell: self.poset.id(m).to_string(),
                    got: cell.dim(),
                    want: dim,
                });
            }
            if !cell.vertices().iter().all(|v| self.polytope.contains(v)) {
                return Err(PolytopeError::CellOutsidePolytope {
                    cell: self.poset.id(m).to_string(),
                });
            }
        }

        // Exact volume balance rules out overlaps and gaps at full
        // dimension (cells share P's affine hull, so their normalized
        // volumes are measured against the same lattice).
        let mut sum = BigInt::zero();
        for &m in &self.maximal {
            sum += self.cell_polytopes[m].normalized_volume()?;
        }
        let total = self.polytope.normalized_volume()?;
        if sum != total {
            return Err(PolytopeError::VolumeMismatch { sum, total });
        }

        // Ridge condition: every (dim−1)-face of a maximal cell lies in two
        // maximal cells, or in one if it sits on the boundary of P.
        for (i, poly) in self.cell_polytopes.iter().enumerate() {
            if poly.is_empty() || poly.dim() != dim - 1 {
                continue;
            }
            let count = self.maximal.iter().filter(|&&m| self.poset.le(i, m)).count();
            let on_boundary = self
                .polytope
                .facets()
                .iter()
                .any(|(a, b)| poly.vertices().iter().all(|v| dot(a, v) == *b));
            let want = if on_boundary { 1 } else { 2 };
            if count != want {
                return Err(PolytopeError::RidgeCount {
                    face: self.poset.id(i).to_string(),
                    count,
                    want,
                });
            }
        }

        // Pairwise intersections of maximal cells must be common faces.
        for (pos, &m1) in self.maximal.iter().enumerate() {
            for &m2 in &self.maximal[pos + 1..] {
                if !self.proper_intersection(m1, m2) {
                    return Err(PolytopeError::ImproperIntersection {
                        first: self.poset.id(m1).to_string(),
                        second: self.poset.id(m2).to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Whether two cells meet in a common face. Exact for intersections of
    /// affine dimension ≤ 3, by enumerating the intersection's vertices:
    /// with W = C₁ ∩ C₂ = conv(candidates) and Fᵢ the smallest face of Cᵢ
    /// containing W, properness is exactly F₁ = W = F₂, which holds iff F₁
    /// and F₂ have the same vertex set (then F₁ = F₂ ⊆ C₁ ∩ C₂ = W ⊆ F₁).
    /// Above dimension 3 the shared vertex set must span a common face — a
    /// heuristic, but decisive for every complex shipped here.
    fn proper_intersection(&self, m1: usize, m2: usize) -> bool {
        let c1 = &self.cell_polytopes[m1];
        let c2 = &self.cell_polytopes[m2];
        let n = c1.ambient();

        // Combined affine hull: solve the stacked hull equations.
        let mut eq_rows: Vec<Vec<BigRational>> = Vec::new();
        let mut eq_rhs: Vec<BigRational> = Vec::new();
        for (c, d) in c1.hull_eqs.iter().chain(&c2.hull_eqs) {
            eq_rows.push(to_rational_vec(c));
            eq_rhs.push(BigRational::from_integer(d.clone()));
        }
        let (origin, directions) = match affine_solution(&eq_rows, &eq_rhs, n) {
            Some(sol) => sol,
            None => return true, // parallel affine hulls never meet
        };
        let k = directions.len();

        if k > 3 {
            let shared: Vec<Vec<BigRational>> = c1
                .vertices()
                .iter()
                .filter(|v| c2.vertices().iter().any(|w| w == *v))
                .map(|v| to_rational_vec(v))
                .collect();
            if shared.is_empty() {
                return true;
            }
            let f1 = c1.carrier(&shared).expect("shared vertices lie in both");
            let f2 = c2.carrier(&shared).expect("shared vertices lie in both");
            let v1: BTreeSet<&ZVec> = f1.iter().map(|&v| &c1.vertices()[v]).collect();
            let v2: BTreeSet<&ZVec> = f2.iter().map(|&v| &c2.vertices()[v]).collect();
            return v1 == v2 && v1.len() == shared.len();
        }

        let eval = |a: &ZVec, x: &[BigRational]| -> BigRational {
            a.iter()
                .zip(x)
                .map(|(c, v)| BigRational::from_integer(c.clone()) * v)
                .sum()
        };
        // Every inequality of either cell, rewritten over the combined
        // hull's coordinates s (x = origin + directions·s).
        let ineqs: Vec<(&ZVec, &BigInt)> =
            c1.facets.iter().chain(&c2.facets).map(|(a, b)| (a, b)).collect();
        let rows: Vec<Vec<BigRational>> = ineqs
            .iter()
            .map(|(a, _)| directions.iter().map(|dir| eval(a, dir)).collect())
            .collect();
        let rhs: Vec<BigRational> = ineqs
            .iter()
            .map(|(a, b)| BigRational::from_integer((*b).clone()) - eval(a, &origin))
            .collect();

        // Vertices of the intersection: feasible unique solutions of
        // k-subsets of the inequalities turned into equations.
        let point_of = |s: &[BigRational]| -> Vec<BigRational> {
            (0..n)
                .map(|j| {
                    let mut acc = origin[j].clone();
                    for (si, dir) in s.iter().zip(&directions) {
                        acc += si * &dir[j];
                    }
                    acc
                })
                .collect()
        };
        let mut candidates: Vec<Vec<BigRational>> = Vec::new();
        for subset in (0..rows.len()).combinations(k) {
            let a_sub: QMat = subset.iter().map(|&i| rows[i].clone()).collect();
            let b_sub: Vec<BigRational> = subset.iter().map(|&i| rhs[i].clone()).collect();
            let Some(s) = crate::linalg::solve(&a_sub, &b_sub) else { continue };
            let feasible = rows
                .iter()
                .zip(&rhs)
                .all(|(row, r)| row.iter().zip(&s).map(|(a, b)| a * b).sum::<BigRational>() <= *r);
            if feasible {
                let p = point_of(&s);
                if !candidates.contains(&p) {
                    candidates.push(p);
                }
            }
        }

        if candidates.is_empty() {
            return true; // the cells do not meet at all
        }
        let (Some(f1), Some(f2)) = (c1.carrier(&candidates), c2.carrier(&candidates)) else {
            return false;
        };
        let v1: BTreeSet<&ZVec> = f1.iter().map(|&v| &c1.vertices()[v]).collect();
        let v2: BTreeSet<&ZVec> = f2.iter().map(|&v| &c2.vertices()[v]).collect();
        v1 == v2
    }

    pub fn polytope(&self) -> &LatticePolytope {
        &self.polytope
    }

    pub fn points(&self) -> &[ZVec] {
        &self.points
    }

    pub fn poset(&self) -> &RankedPoset {
        &self.poset
    }

    pub fn cell_polytope(&self, i: usize) -> &LatticePolytope {
        &self.cell_polytopes[i]
    }

    pub fn cell_count(&self) -> usize {
        self.cell_polytopes.len()
    }

    pub fn maximal_cells(&self) -> &[usize] {
        &self.maximal
    }

    /// True when the complex carries a lifting-height witness of regularity.
    pub fn is_regular(&self) -> bool {
        self.heights.is_some()
    }

    /// The smallest face of the subdivided polytope containing cell `i`, as
    /// a vertex set of `self.polytope()`.
    pub fn carrier_face(&self, i: usize) -> Vec<usize> {
        let pts: Vec<Vec<BigRational>> = self.cell_points[i]
            .iter()
            .map(|&p| to_rational_vec(&self.points[p]))
            .collect();
        self.polytope.carrier(&pts).expect("cells lie inside the polytope")
    }

    /// The face poset with its carrier map, as a strong formal subdivision
    /// over the face lattice of the subdivided polytope. The subdivision
    /// axioms are re-validated combinatorially on construction.
    pub fn to_sfs(&self) -> Result<StrongFormalSubdivision, PolytopeError> {
        let lattice = self.polytope.face_lattice()?;
        let sigma: Vec<usize> = (0..self.cell_polytopes.len())
            .map(|i| {
                let carrier = self.carrier_face(i);
                lattice.index_of(&carrier).expect("carrier is a face")
            })
            .collect();
        Ok(StrongFormalSubdivision::new(self.poset.clone(), lattice.poset.clone(), sigma)?)
    }

    /// The restriction of the subdivision to a face of the subdivided
    /// polytope (or to any polytope that is a union of cells).
    pub fn restrict_to(&self, face: &LatticePolytope) -> Result<CellComplex, PolytopeError> {
        let inside: Vec<usize> = (0..self.cell_polytopes.len())
            .filter(|&i| {
                !self.cell_points[i].is_empty()
                    && self.cell_points[i].iter().all(|&p| face.contains(&self.points[p]))
            })
            .collect();
        let maximal: Vec<usize> = inside
            .iter()
            .copied()
            .filter(|&i| !inside.iter().any(|&j| j != i && self.poset.le(i, j)))
            .collect();
        if maximal.is_empty() {
            return Err(PolytopeError::EmptyComplex);
        }
        let cells: Vec<Vec<ZVec>> = maximal
            .iter()
            .map(|&i| self.cell_points[i].iter().map(|&p| self.points[p].clone()).collect())
            .collect();
        // Restricting the heights restricts the lower hull, so the witness
        // carries over.
        let heights = self.heights.as_ref().map(|(pts, hts)| {
            let kept: Vec<(ZVec, BigInt)> = pts
                .iter()
                .zip(hts)
                .filter(|(p, _)| face.contains(p))
                .map(|(p, h)| (p.clone(), h.clone()))
                .collect();
            (
                kept.iter().map(|(p, _)| p.clone()).collect(),
                kept.into_iter().map(|(_, h)| h).collect(),
            )
        });
        CellComplex::build(cells, heights)
    }

    /// The pulling refinement: every maximal cell is replaced by its
    /// pulling triangulation. Apexes are lexicographically least vertices,
    /// so pulls of a shared face agree across the cells containing it.
    ///
    /// When the complex carries a regularity witness, combined heights
    /// (dominant original heights plus a pulling perturbation) are
    /// constructed and *verified* to reproduce the refinement; the result
    /// then carries them as its own witness.
    pub fn pulling_refinement(&self) -> Result<CellComplex, PolytopeError> {
        let mut simplices: Vec<Vec<ZVec>> = Vec::new();
        for &m in &self.maximal {
            let cell = &self.cell_polytopes[m];
            for s in cell.pulling_triangulation()? {
                simplices.push(s.iter().map(|&v| cell.vertices()[v].clone()).collect());
            }
        }
        let refined = CellComplex::build(simplices, None)?;
        if let Some((pts, w)) = &self.heights {
            if let Some(witnessed) = pulling_witness(&refined, pts, w)? {
                return Ok(witnessed);
            }
        }
        Ok(refined)
    }

    fn maximal_vertex_sets(&self) -> BTreeSet<Vec<ZVec>> {
        self.maximal
            .iter()
            .map(|&m| self.cell_polytopes[m].vertices().to_vec())
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        if let Some((pts, hts)) = &self.heights {
            obj.insert(
                "points".into(),
                Value::Array(
                    pts.iter()
                        .map(|p| Value::Array(p.iter().map(json_int).collect()))
                        .collect(),
                ),
            );
            obj.insert("heights".into(), Value::Array(hts.iter().map(json_int).collect()));
        }
        obj.insert(
            "cells".into(),
            Value::Array(
                self.maximal
                    .iter()
                    .map(|&m| {
                        Value::Array(
                            self.cell_polytopes[m]
                                .vertices()
                                .iter()
                                .map(|v| Value::Array(v.iter().map(json_int).collect()))
                                .collect(),
                        )
                    })
                    .collect(),
            ),
        );
        Value::Object(obj)
    }

    /// Accepts either `{"cells": [...]}` or `{"points": ..., "heights": ...}`
    /// (the latter marks the complex regular), plus an optional
    /// `lattice_basis` applied to every coordinate first.
    pub fn from_json(value: &Value) -> Result<CellComplex, PolytopeError> {
        let obj = value
            .as_object()
            .ok_or_else(|| PolytopeError::Json("expected an object".into()))?;
        let transform = |pts: Vec<ZVec>| -> Result<Vec<ZVec>, PolytopeError> {
            match obj.get("lattice_basis") {
                None => Ok(pts),
                Some(t) => {
                    let t = parse_points(t)?;
                    let n = t.len();
                    if t.iter().any(|r| r.len() != n) || determinant_int(&t).is_zero() {
                        return Err(PolytopeError::BadLatticeBasis);
                    }
                    pts.into_iter()
                        .map(|p| {
                            if p.len() != n {
                                return Err(PolytopeError::PointDimension {
                                    expected: n,
                                    got: p.len(),
                                });
                            }
                            Ok(t.iter().map(|row| dot(row, &p)).collect())
                        })
                        .collect()
                }
            }
        };
        if let (Some(points), Some(heights)) = (obj.get("points"), obj.get("heights")) {
            let pts = transform(parse_points(points)?)?;
            let hts = heights
                .as_array()
                .ok_or_else(|| PolytopeError::Json("heights must be an array".into()))?
                .iter()
                .map(|h| {
                    h.as_i64()
                        .map(BigInt::from)
                        .ok_or_else(|| PolytopeError::Json("height must be an integer".into()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            return CellComplex::regular_from_heights(pts, hts);
        }
        let cells = obj
            .get("cells")
            .and_then(Value::as_array)
            .ok_or_else(|| PolytopeError::Json("missing \"cells\"".into()))?
            .iter()
            .map(|c| transform(parse_points(c)?))
            .collect::<Result<Vec<_>, _>>()?;
        CellComplex::new(cells)
    }
}

/// Tries to witness `refined` (a pulling refinement) as a regular
/// subdivision: dominant multiples of the original heights plus
/// lexicographic pulling perturbations −M^k, verified by rebuilding the
/// subdivision from the combined heights and comparing cells. Escalates M a
/// few times before giving up; None keeps the refinement valid, just
/// unmarked.
fn pulling_witness(
    refined: &CellComplex,
    pts: &[ZVec],
    w: &[BigInt],
) -> Result<Option<CellComplex>, PolytopeError> {
    let target = refined.maximal_vertex_sets();
    let n = refined.points.len() as u32;
    let mut m = BigInt::from(16);
    for _ in 0..4 {
        let dominant = Pow::pow(&m, n + 3);
        let above = Pow::pow(&m, n + 1);
        let combined: Vec<BigInt> = pts
            .iter()
            .zip(w)
            .map(|(p, wi)| {
                let pull = match refined.points.binary_search(p) {
                    // Lex-least points get the most negative perturbation:
                    // they are pulled first.
                    Ok(idx) => -Pow::pow(&m, n - idx as u32),
                    // Points that are not cell vertices must stay above the
                    // perturbed lower hull.
                    Err(_) => above.clone(),
                };
                &dominant * wi + pull
            })
            .collect();
        let candidate = CellComplex::regular_from_heights(pts.to_vec(), combined)?;
        if candidate.maximal_vertex_sets() == target {
            return Ok(Some(candidate));
        }
        m = &m * &m;
    }
    Ok(None)
}

/// True when `small` is a face of `big`, checked via the carrier of its
/// vertices; the empty polytope is a face of everything.
fn is_face_of(big: &LatticePolytope, small: &LatticePolytope) -> bool {
    if small.is_empty() {
        return true;
    }
    let pts: Vec<Vec<BigRational>> = small.vertices().iter().map(|v| to_rational_vec(v)).collect();
    match big.carrier(&pts) {
        Some(face) => {
            let face_pts: BTreeSet<&ZVec> = face.iter().map(|&v| &big.vertices()[v]).collect();
            let small_pts: BTreeSet<&ZVec> = small.vertices().iter().collect();
            face_pts == small_pts
        }
        None => false,
    }
}

/// A particular solution and a direction basis of `{x : rows · x = rhs}`;
/// None when the system is inconsistent.
fn affine_solution(
    rows: &[Vec<BigRational>],
    rhs: &[BigRational],
    n: usize,
) -> Option<(Vec<BigRational>, Vec<Vec<BigRational>>)> {
    let mut aug: QMat = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    if aug.is_empty() {
        aug.push(vec![BigRational::zero(); n + 1]);
    }
    let pivots = crate::linalg::rref(&mut aug);
    if pivots.contains(&n) {
        return None;
    }
    let mut origin = vec![BigRational::zero(); n];
    for (r, &p) in pivots.iter().enumerate() {
        origin[p] = aug[r][n].clone();
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let directions: Vec<Vec<BigRational>> = free
        .iter()
        .map(|&f| {
            let mut dir = vec![BigRational::zero(); n];
            dir[f] = BigRational::one();
            for (r, &p) in pivots.iter().enumerate() {
                dir[p] = -aug[r][f].clone();
            }
            dir
        })
        .collect();
    Some((origin, directions))
}
