//! Finite ranked posets with exact validation.
//!
//! A poset is built from elements, cover relations, and a supplied rank
//! function. Construction computes the transitive closure and checks that
//! every cover raises the rank by exactly one, which makes the poset locally
//! graded with `ρ(x,x') = rank(x') - rank(x)` on every interval. Rank
//! functions are supplied rather than inferred because the same underlying
//! order can carry offset ranks (intervals, links, subdivision fibers).
//!
//! The order relation is stored densely as bitset rows, which keeps interval
//! extraction and the Eulerian balance checks fast up to the ~10⁴-element
//! scale this crate targets (the barycentric subdivision of the rank-6
//! Boolean algebra has 4683 elements).

use std::collections::HashMap;
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PosetError {
    #[error("duplicate element id {0:?}")]
    DuplicateId(String),
    #[error("unknown element id {0:?}")]
    UnknownElement(String),
    #[error("cover relation on a single element {0:?}")]
    SelfCover(String),
    #[error("cover cycle through {0:?}")]
    Cycle(String),
    #[error("cover {lower:?} -> {upper:?} has rank gap {gap}, expected 1")]
    RankGap { lower: String, upper: String, gap: i64 },
    #[error("poset has no unique minimal element")]
    NoBottom,
    #[error("poset has no unique maximal element")]
    NoTop,
    #[error("elements are not comparable: {0:?} and {1:?}")]
    NotComparable(String, String),
    #[error("missing rank for element {0:?}")]
    MissingRank(String),
    #[error("malformed poset JSON: {0}")]
    Json(String),
}

/// A finite locally graded poset with a validated rank function.
#[derive(Clone, Debug)]
pub struct RankedPoset {
    ids: Vec<String>,
    rank: Vec<i32>,
    covers: Vec<(usize, usize)>,
    // up[i] holds the bitset of j with i ≤ j; down[j] the bitset of i ≤ j.
    up: Vec<Vec<u64>>,
    down: Vec<Vec<u64>>,
    words: usize,
}

fn bit_get(row: &[u64], i: usize) -> bool {
    row[i / 64] >> (i % 64) & 1 == 1
}

fn bit_set(row: &mut [u64], i: usize) {
    row[i / 64] |= 1 << (i % 64);
}

impl RankedPoset {
    /// Builds and validates a poset from indexed cover relations.
    pub fn build_indexed(
        ids: Vec<String>,
        cover_pairs: &[(usize, usize)],
        ranks: Vec<i32>,
    ) -> Result<RankedPoset, PosetError> {
        let n = ids.len();
        assert_eq!(ranks.len(), n, "one rank per element");
        {
            let mut seen = HashMap::new();
            for (i, id) in ids.iter().enumerate() {
                if seen.insert(id.clone(), i).is_some() {
                    return Err(PosetError::DuplicateId(id.clone()));
                }
            }
        }
        let mut covers: Vec<(usize, usize)> = cover_pairs.to_vec();
        covers.sort_unstable();
        covers.dedup();
        for &(a, b) in &covers {
            assert!(a < n && b < n, "cover index out of range");
            if a == b {
                return Err(PosetError::SelfCover(ids[a].clone()));
            }
        }
        // Kahn topological sort to reject cycles.
        let mut indegree = vec![0usize; n];
        let mut out = vec![Vec::new(); n];
        for &(a, b) in &covers {
            indegree[b] += 1;
            out[a].push(b);
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(i) = queue.pop() {
            topo.push(i);
            for &j in &out[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    queue.push(j);
                }
            }
        }
        if topo.len() != n {
            let culprit = (0..n).find(|&i| indegree[i] > 0).unwrap();
            return Err(PosetError::Cycle(ids[culprit].clone()));
        }
        for &(a, b) in &covers {
            let gap = i64::from(ranks[b]) - i64::from(ranks[a]);
            if gap != 1 {
                return Err(PosetError::RankGap {
                    lower: ids[a].clone(),
                    upper: ids[b].clone(),
                    gap,
                });
            }
        }
        // Transitive closure, processing in reverse topological order.
        let words = n.div_ceil(64);
        let mut up = vec![vec![0u64; words]; n];
        for &i in topo.iter().rev() {
            bit_set(&mut up[i], i);
            let row = std::mem::take(&mut up[i]);
            let mut acc = row;
            for &j in &out[i] {
                for w in 0..words {
                    acc[w] |= up[j][w];
                }
            }
            up[i] = acc;
        }
        let mut down = vec![vec![0u64; words]; n];
        for i in 0..n {
            for j in 0..n {
                if bit_get(&up[i], j) {
                    bit_set(&mut down[j], i);
                }
            }
        }
        Ok(RankedPoset { ids, rank: ranks, covers, up, down, words })
    }

    /// Builds from string ids, as in the JSON interchange format.
    pub fn build(
        elements: Vec<String>,
        covers: &[(String, String)],
        rank: &HashMap<String, i32>,
    ) -> Result<RankedPoset, PosetError> {
        let index: HashMap<&str, usize> =
            elements.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if index.len() != elements.len() {
            let mut seen = std::collections::HashSet::new();
            let dup = elements.iter().find(|e| !seen.insert(e.as_str())).unwrap();
            return Err(PosetError::DuplicateId(dup.clone()));
        }
        let mut pairs = Vec::with_capacity(covers.len());
        for (a, b) in covers {
            let &ia = index.get(a.as_str()).ok_or_else(|| PosetError::UnknownElement(a.clone()))?;
            let &ib = index.get(b.as_str()).ok_or_else(|| PosetError::UnknownElement(b.clone()))?;
            pairs.push((ia, ib));
        }
        let mut ranks = Vec::with_capacity(elements.len());
        for e in &elements {
            let r = rank.get(e).ok_or_else(|| PosetError::MissingRank(e.clone()))?;
            ranks.push(*r);
        }
        RankedPoset::build_indexed(elements, &pairs, ranks)
    }

    pub fn from_json(value: &Value) -> Result<RankedPoset, PosetError> {
        let elements: Vec<String> = value
            .get("elements")
            .and_then(Value::as_array)
            .ok_or_else(|| PosetError::Json("missing \"elements\" array".into()))?
            .iter()
            .map(|e| e.as_str().map(str::to_owned))
            .collect::<Option<_>>()
            .ok_or_else(|| PosetError::Json("elements must be strings".into()))?;
        let covers: Vec<(String, String)> = value
            .get("covers")
            .and_then(Value::as_array)
            .ok_or_else(|| PosetError::Json("missing \"covers\" array".into()))?
            .iter()
            .map(|pair| {
                let arr = pair.as_array()?;
                if arr.len() != 2 {
                    return None;
                }
                Some((arr[0].as_str()?.to_owned(), arr[1].as_str()?.to_owned()))
            })
            .collect::<Option<_>>()
            .ok_or_else(|| PosetError::Json("covers must be [lower, upper] string pairs".into()))?;
        let rank_obj = value
            .get("rank")
            .and_then(Value::as_object)
            .ok_or_else(|| PosetError::Json("missing \"rank\" object".into()))?;
        let mut rank = HashMap::new();
        for (k, v) in rank_obj {
            let r = v
                .as_i64()
                .ok_or_else(|| PosetError::Json(format!("rank of {k:?} is not an integer")))?;
            rank.insert(k.clone(), i32::try_from(r).map_err(|_| {
                PosetError::Json(format!("rank of {k:?} out of range"))
            })?);
        }
        RankedPoset::build(elements, &covers, &rank)
    }

    pub fn to_json(&self) -> Value {
        let covers: Vec<Value> = self
            .covers
            .iter()
            .map(|&(a, b)| json!([self.ids[a], self.ids[b]]))
            .collect();
        let mut rank = serde_json::Map::new();
        for (i, id) in self.ids.iter().enumerate() {
            rank.insert(id.clone(), json!(self.rank[i]));
        }
        json!({ "elements": self.ids, "covers": covers, "rank": rank })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|s| s == id)
    }

    pub fn rank(&self, i: usize) -> i32 {
        self.rank[i]
    }

    /// ρ(x, y) = rank(y) − rank(x); callers must have x ≤ y for this to be
    /// the interval length.
    pub fn rho(&self, x: usize, y: usize) -> i32 {
        self.rank[y] - self.rank[x]
    }

    pub fn le(&self, x: usize, y: usize) -> bool {
        bit_get(&self.up[x], y)
    }

    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn up_set(&self, x: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.le(x, j)).collect()
    }

    pub fn down_set(&self, y: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.le(i, y)).collect()
    }

    /// Elements of [x, y], sorted by rank (ties by index).
    pub fn interval(&self, x: usize, y: usize) -> Vec<usize> {
        let mut zs: Vec<usize> = (0..self.len())
            .filter(|&z| self.le(x, z) && self.le(z, y))
            .collect();
        zs.sort_by_key(|&z| (self.rank[z], z));
        zs
    }

    pub fn minimal_elements(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| (0..self.len()).all(|j| j == i || !self.le(j, i)))
            .collect()
    }

    pub fn maximal_elements(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| (0..self.len()).all(|j| j == i || !self.le(i, j)))
            .collect()
    }

    pub fn bottom(&self) -> Option<usize> {
        match self.minimal_elements()[..] {
            [b] => Some(b),
            _ => None,
        }
    }

    pub fn top(&self) -> Option<usize> {
        match self.maximal_elements()[..] {
            [t] => Some(t),
            _ => None,
        }
    }

    /// Length of the longest chain: max rank minus min rank. With a unique
    /// minimum this is the usual rank of the poset.
    pub fn rank_span(&self) -> i32 {
        if self.is_empty() {
            return 0;
        }
        let max = self.rank.iter().max().unwrap();
        let min = self.rank.iter().min().unwrap();
        max - min
    }

    /// Every interval of positive length has equally many elements whose
    /// rank distance from the bottom endpoint is even and odd.
    pub fn is_locally_eulerian(&self) -> bool {
        let n = self.len();
        // Parity masks over the stored rank values.
        let mut even = vec![0u64; self.words];
        let mut odd = vec![0u64; self.words];
        for i in 0..n {
            if self.rank[i].rem_euclid(2) == 0 {
                bit_set(&mut even, i);
            } else {
                bit_set(&mut odd, i);
            }
        }
        for x in 0..n {
            for y in 0..n {
                if !self.le(x, y) || self.rho(x, y) < 1 {
                    continue;
                }
                let mut same = 0u32;
                let mut diff = 0u32;
                let x_even = self.rank[x].rem_euclid(2) == 0;
                for w in 0..self.words {
                    let cell = self.up[x][w] & self.down[y][w];
                    let e = (cell & even[w]).count_ones();
                    let o = (cell & odd[w]).count_ones();
                    if x_even {
                        same += e;
                        diff += o;
                    } else {
                        same += o;
                        diff += e;
                    }
                }
                if same != diff {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_lower_eulerian(&self) -> bool {
        self.bottom().is_some() && self.is_locally_eulerian()
    }

    pub fn is_eulerian(&self) -> bool {
        self.bottom().is_some() && self.top().is_some() && self.is_locally_eulerian()
    }

    /// Möbius function of the interval [x, y].
    pub fn mobius(&self, x: usize, y: usize) -> Result<i64, PosetError> {
        if !self.le(x, y) {
            return Err(PosetError::NotComparable(self.ids[x].clone(), self.ids[y].clone()));
        }
        let zs = self.interval(x, y);
        let mut mu: HashMap<usize, i64> = HashMap::new();
        for &z in &zs {
            if z == x {
                mu.insert(z, 1);
                continue;
            }
            let mut acc = 0i64;
            for &s in &zs {
                if s != z && self.le(s, z) {
                    acc += mu[&s];
                }
            }
            mu.insert(z, -acc);
        }
        Ok(mu[&y])
    }

    /// The opposite poset; ranks are flipped as max_rank − rank.
    pub fn dual(&self) -> RankedPoset {
        let max = self.rank.iter().copied().max().unwrap_or(0);
        RankedPoset {
            ids: self.ids.clone(),
            rank: self.rank.iter().map(|r| max - r).collect(),
            covers: self.covers.iter().map(|&(a, b)| (b, a)).collect(),
            up: self.down.clone(),
            down: self.up.clone(),
            words: self.words,
        }
    }

    /// The induced sub-poset on `keep` (parent indices, any order); returns
    /// it with the map from new indices to parent indices. Fails when the
    /// induced covers skip ranks.
    pub fn restrict(&self, keep: &[usize]) -> Result<(RankedPoset, Vec<usize>), PosetError> {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let ids: Vec<String> = keep.iter().map(|&i| self.ids[i].clone()).collect();
        let ranks: Vec<i32> = keep.iter().map(|&i| self.rank[i]).collect();
        let m = keep.len();
        let mut covers = Vec::new();
        for a in 0..m {
            for b in 0..m {
                let (pa, pb) = (keep[a], keep[b]);
                if pa == pb || !self.le(pa, pb) {
                    continue;
                }
                let strictly_between = keep
                    .iter()
                    .any(|&z| z != pa && z != pb && self.le(pa, z) && self.le(z, pb));
                if !strictly_between {
                    covers.push((a, b));
                }
            }
        }
        let sub = RankedPoset::build_indexed(ids, &covers, ranks)?;
        Ok((sub, keep))
    }

    /// The interval [x, y] as its own poset (inherited ranks), with the map
    /// back to parent indices.
    pub fn interval_poset(&self, x: usize, y: usize) -> Result<(RankedPoset, Vec<usize>), PosetError> {
        if !self.le(x, y) {
            return Err(PosetError::NotComparable(self.ids[x].clone(), self.ids[y].clone()));
        }
        self.restrict(&self.interval(x, y))
    }

    /// True when every lower interval [0̂, y] is a Boolean algebra; checked
    /// by an explicit atom-set isomorphism.
    pub fn is_simplicial(&self) -> bool {
        let Some(bot) = self.bottom() else { return false };
        (0..self.len()).all(|y| self.interval_is_boolean(bot, y))
    }

    fn interval_is_boolean(&self, x: usize, y: usize) -> bool {
        if !self.le(x, y) {
            return false;
        }
        let zs = self.interval(x, y);
        let k = self.rho(x, y);
        if !(0..63).contains(&k) || zs.len() != 1usize << k {
            return false;
        }
        let atoms: Vec<usize> = zs.iter().copied().filter(|&z| self.rho(x, z) == 1).collect();
        if atoms.len() != k as usize {
            return false;
        }
        let atom_mask = |z: usize| -> u64 {
            atoms
                .iter()
                .enumerate()
                .filter(|&(_, &a)| self.le(a, z))
                .fold(0u64, |m, (i, _)| m | 1 << i)
        };
        let masks: Vec<u64> = zs.iter().map(|&z| atom_mask(z)).collect();
        let mut seen = std::collections::HashSet::new();
        for (zi, &z) in zs.iter().enumerate() {
            if masks[zi].count_ones() != self.rho(x, z) as u32 || !seen.insert(masks[zi]) {
                return false;
            }
        }
        // Order isomorphism in both directions.
        for (ai, &a) in zs.iter().enumerate() {
            for (bi, &b) in zs.iter().enumerate() {
                if self.le(a, b) != (masks[ai] & !masks[bi] == 0) {
                    return false;
                }
            }
        }
        true
    }

    /// The Boolean algebra of subsets of {1..r}, ranked by cardinality.
    /// Element ids are the subsets rendered as sorted digit strings, the
    /// empty set as "e".
    pub fn boolean_algebra(r: u32) -> RankedPoset {
        assert!(r < 20, "Boolean algebra too large");
        let n = 1usize << r;
        let id_of = |mask: usize| -> String {
            if mask == 0 {
                "e".to_string()
            } else {
                (0..r).filter(|&b| mask >> b & 1 == 1).map(|b| (b + 1).to_string()).collect::<Vec<_>>().join(".")
            }
        };
        let ids: Vec<String> = (0..n).map(id_of).collect();
        let ranks: Vec<i32> = (0..n).map(|m| m.count_ones() as i32).collect();
        let mut covers = Vec::new();
        for m in 0..n {
            for b in 0..r {
                if m >> b & 1 == 0 {
                    covers.push((m, m | 1 << b));
                }
            }
        }
        RankedPoset::build_indexed(ids, &covers, ranks).expect("Boolean algebra is valid")
    }

    /// The barycentric subdivision: elements are the chains of `self`
    /// containing 0̂, ordered by containment, ranked by their number of
    /// non-bottom entries. Also returns the map sending a chain to its top.
    pub fn barycentric(&self) -> Result<(RankedPoset, Vec<usize>), PosetError> {
        let bot = self.bottom().ok_or(PosetError::NoBottom)?;
        let mut chains: Vec<Vec<usize>> = Vec::new();
        let mut stack = vec![vec![bot]];
        while let Some(chain) = stack.pop() {
            let last = *chain.last().unwrap();
            for next in 0..self.len() {
                if next != last && self.le(last, next) {
                    let mut ext = chain.clone();
                    ext.push(next);
                    stack.push(ext);
                }
            }
            chains.push(chain);
        }
        chains.sort();
        let index: HashMap<&[usize], usize> =
            chains.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
        let ids: Vec<String> = chains
            .iter()
            .map(|c| c.iter().map(|&i| self.ids[i].clone()).collect::<Vec<_>>().join("<"))
            .collect();
        let ranks: Vec<i32> = chains.iter().map(|c| c.len() as i32 - 1).collect();
        let mut covers = Vec::new();
        for (ci, chain) in chains.iter().enumerate() {
            // Lower covers: drop one non-bottom entry.
            for drop in 1..chain.len() {
                let mut shorter = chain.clone();
                shorter.remove(drop);
                covers.push((index[shorter.as_slice()], ci));
            }
        }
        let sigma: Vec<usize> = chains.iter().map(|c| *c.last().unwrap()).collect();
        let poset = RankedPoset::build_indexed(ids, &covers, ranks)?;
        Ok((poset, sigma))
    }
}

impl fmt::Display for RankedPoset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "poset({} elements, rank span {})", self.len(), self.rank_span())
    }
}

/// The face poset of a square: ∅, four vertices, four edges, the square.
/// Shared by tests across modules.
#[cfg(test)]
pub(crate) fn square_face_poset() -> RankedPoset {
    let ids: Vec<String> = ["e", "a", "b", "c", "d", "ab", "bc", "cd", "da", "s"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let ranks = vec![0, 1, 1, 1, 1, 2, 2, 2, 2, 3];
    let covers = vec![
        (0, 1),
        (0, 2),
        (0, 3),
        (0, 4),
        (1, 5),
        (2, 5),
        (2, 6),
        (3, 6),
        (3, 7),
        (4, 7),
        (4, 8),
        (1, 8),
        (5, 9),
        (6, 9),
        (7, 9),
        (8, 9),
    ];
    RankedPoset::build_indexed(ids, &covers, ranks).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> RankedPoset {
        let ids = (0..n).map(|i| i.to_string()).collect();
        let covers: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        RankedPoset::build_indexed(ids, &covers, (0..n as i32).collect()).unwrap()
    }

    #[test]
    fn boolean_algebra_shape() {
        let b3 = RankedPoset::boolean_algebra(3);
        assert_eq!(b3.len(), 8);
        assert_eq!((0..8).filter(|&i| b3.rank(i) == 0).count(), 1);
        assert_eq!((0..8).filter(|&i| b3.rank(i) == 1).count(), 3);
        assert_eq!(b3.rank_span(), 3);
        assert!(b3.is_eulerian());

        let b0 = RankedPoset::boolean_algebra(0);
        assert_eq!(b0.len(), 1);
        assert!(b0.is_eulerian());
    }

    #[test]
    fn chain_is_valid_but_not_eulerian() {
        let c = chain(3);
        assert_eq!(c.rank_span(), 2);
        // [0,2] contains two even ranks (0 and 2) but one odd.
        assert!(!c.is_locally_eulerian());
        assert!(!c.is_eulerian());
    }

    #[test]
    fn cycle_detected() {
        let ids = vec!["x".into(), "y".into()];
        let err = RankedPoset::build_indexed(ids, &[(0, 1), (1, 0)], vec![0, 1]).unwrap_err();
        assert!(matches!(err, PosetError::Cycle(_)));
    }

    #[test]
    fn rank_gap_detected() {
        let ids = vec!["x".into(), "y".into()];
        let err = RankedPoset::build_indexed(ids, &[(0, 1)], vec![0, 2]).unwrap_err();
        assert_eq!(
            err,
            PosetError::RankGap { lower: "x".into(), upper: "y".into(), gap: 2 }
        );
    }

    #[test]
    fn square_face_poset_is_eulerian_brute_force() {
        let p = square_face_poset();
        assert!(p.is_eulerian());
        // Independent check over all 45 unordered pairs: parity balance by
        // direct enumeration, no bitsets.
        for x in 0..p.len() {
            for y in 0..p.len() {
                if !p.le(x, y) || p.rho(x, y) < 1 {
                    continue;
                }
                let mut even = 0;
                let mut odd = 0;
                for z in 0..p.len() {
                    if p.le(x, z) && p.le(z, y) {
                        if (p.rank(z) - p.rank(x)) % 2 == 0 {
                            even += 1;
                        } else {
                            odd += 1;
                        }
                    }
                }
                assert_eq!(even, odd, "interval [{}, {}]", p.id(x), p.id(y));
            }
        }
    }

    #[test]
    fn mobius_values() {
        let b3 = RankedPoset::boolean_algebra(3);
        let bot = b3.bottom().unwrap();
        let top = b3.top().unwrap();
        assert_eq!(b3.mobius(bot, bot).unwrap(), 1);
        // Inclusion–exclusion oracle: Boolean interval of rank k gives (−1)^k.
        for y in 0..b3.len() {
            let k = b3.rho(bot, y);
            assert_eq!(b3.mobius(bot, y).unwrap(), if k % 2 == 0 { 1 } else { -1 });
        }
        assert_eq!(b3.mobius(bot, top).unwrap(), -1);

        // Locally Eulerian posets: μ(x,y) = (−1)^{ρ(x,y)} everywhere.
        let sq = square_face_poset();
        for x in 0..sq.len() {
            for y in 0..sq.len() {
                if sq.le(x, y) {
                    let expect = if sq.rho(x, y) % 2 == 0 { 1 } else { -1 };
                    assert_eq!(sq.mobius(x, y).unwrap(), expect);
                }
            }
        }

        assert!(matches!(
            square_face_poset().mobius(1, 2),
            Err(PosetError::NotComparable(_, _))
        ));
    }

    #[test]
    fn dual_boolean_is_boolean() {
        let b3 = RankedPoset::boolean_algebra(3);
        let d = b3.dual();
        assert!(d.is_eulerian());
        // Complementation realizes the isomorphism B₃ ≅ B₃*.
        let comp = |i: usize| 7 - i; // ids were built in mask order
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(b3.le(i, j), d.le(comp(i), comp(j)));
            }
        }
    }

    #[test]
    fn dual_dual_identity() {
        let p = square_face_poset();
        let dd = p.dual().dual();
        for i in 0..p.len() {
            assert_eq!(p.id(i), dd.id(i));
            assert_eq!(p.rank(i), dd.rank(i));
            for j in 0..p.len() {
                assert_eq!(p.le(i, j), dd.le(i, j));
            }
        }

        let c = chain(3);
        let d = c.dual();
        assert!(d.le(2, 0) && !d.le(0, 2));
        assert_eq!(d.rank(2), 0);
    }

    #[test]
    fn eulerian_iff_dual_eulerian() {
        let p = square_face_poset();
        assert_eq!(p.is_eulerian(), p.dual().is_eulerian());
        let c = chain(3);
        assert_eq!(c.is_eulerian(), c.dual().is_eulerian());
    }

    #[test]
    fn interval_of_boolean_is_boolean() {
        let b3 = RankedPoset::boolean_algebra(3);
        let x = b3.index_of("1").unwrap();
        let y = b3.index_of("1.2.3").unwrap();
        let (sub, _) = b3.interval_poset(x, y).unwrap();
        assert_eq!(sub.len(), 4);
        assert_eq!(sub.rank_span(), 2);
        assert!(sub.is_eulerian());
        // Every interval of an Eulerian poset is Eulerian.
        for a in 0..b3.len() {
            for b in 0..b3.len() {
                if b3.le(a, b) {
                    assert!(b3.interval_poset(a, b).unwrap().0.is_eulerian());
                }
            }
        }
    }

    #[test]
    fn barycentric_point() {
        let p = RankedPoset::boolean_algebra(0);
        let (bary, sigma) = p.barycentric().unwrap();
        assert_eq!(bary.len(), 1);
        assert_eq!(sigma, vec![0]);
    }

    #[test]
    fn barycentric_b2_has_six_chains() {
        let b2 = RankedPoset::boolean_algebra(2);
        let (bary, sigma) = b2.barycentric().unwrap();
        // {0̂}, two through an atom, {0̂<1̂}, and two maximal chains.
        assert_eq!(bary.len(), 6);
        assert!(bary.is_lower_eulerian());
        assert!(bary.is_simplicial());
        let top = b2.top().unwrap();
        assert_eq!(sigma.iter().filter(|&&x| x == top).count(), 3);
        // Rank = number of non-bottom chain entries.
        assert_eq!((0..6).map(|i| bary.rank(i)).max(), Some(2));
    }

    #[test]
    fn barycentric_sizes_are_fubini_numbers() {
        for (r, expect) in [(1, 2), (2, 6), (3, 26), (4, 150)] {
            let (bary, _) = RankedPoset::boolean_algebra(r).barycentric().unwrap();
            assert_eq!(bary.len(), expect, "rank {r}");
        }
    }

    #[test]
    fn barycentric_needs_bottom() {
        let ids = vec!["x".into(), "y".into()];
        let p = RankedPoset::build_indexed(ids, &[], vec![0, 0]).unwrap();
        assert!(matches!(p.barycentric(), Err(PosetError::NoBottom)));
    }

    #[test]
    fn restrict_detects_rank_jumps() {
        let c = chain(3);
        // Keeping 0 and 2 forces a cover with gap 2.
        assert!(matches!(c.restrict(&[0, 2]), Err(PosetError::RankGap { .. })));
        let (sub, back) = c.restrict(&[0, 1]).unwrap();
        assert_eq!(sub.len(), 2);
        assert_eq!(back, vec![0, 1]);
    }

    #[test]
    fn simplicial_checks() {
        assert!(RankedPoset::boolean_algebra(3).is_simplicial());
        assert!(!square_face_poset().is_simplicial());
    }

    #[test]
    fn json_round_trip() {
        let p = square_face_poset();
        let q = RankedPoset::from_json(&p.to_json()).unwrap();
        assert_eq!(p.len(), q.len());
        for i in 0..p.len() {
            assert_eq!(p.id(i), q.id(i));
            assert_eq!(p.rank(i), q.rank(i));
            for j in 0..p.len() {
                assert_eq!(p.le(i, j), q.le(i, j));
            }
        }
    }

    #[test]
    fn json_errors() {
        let bad = json!({ "elements": ["a"], "covers": [["a", "b"]], "rank": {"a": 0} });
        assert!(matches!(RankedPoset::from_json(&bad), Err(PosetError::UnknownElement(_))));
        let missing = json!({ "elements": ["a"], "covers": [] });
        assert!(matches!(RankedPoset::from_json(&missing), Err(PosetError::Json(_))));
    }

    use serde_json::json;
}
