//! Exact combinatorics of the Farey tessellation.
//!
//! Slopes are extended rationals p/q (∞ = 1/0) naming simple closed curves;
//! unimodular pairs are tessellation edges, triples are triangles (vertices of
//! the dual trivalent tree), and closed arcs with rational endpoints describe
//! subsets of the boundary circle. Everything here is exact big-integer
//! arithmetic; floating point appears only in the diagnostic arc measure.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FareyError {
    #[error("0/0 is not a point of the circle")]
    ZeroZero,
    #[error("slopes {0} and {1} are not Farey-adjacent")]
    NotAdjacent(Slope, Slope),
    #[error("slopes do not form a Farey triangle")]
    NotATriangle,
    #[error("invalid slope literal at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// An extended rational p/q in lowest terms with q ≥ 0 and ∞ = 1/0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Slope {
    p: BigInt,
    q: BigInt,
}

impl Slope {
    pub fn new(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<Self, FareyError> {
        let (mut p, mut q) = (p.into(), q.into());
        if p.is_zero() && q.is_zero() {
            return Err(FareyError::ZeroZero);
        }
        if q.is_negative() {
            p = -p;
            q = -q;
        }
        if q.is_zero() {
            return Ok(Slope {
                p: BigInt::one(),
                q,
            });
        }
        let g = p.gcd(&q);
        Ok(Slope {
            p: p / &g,
            q: q / g,
        })
    }

    /// Panicking constructor for literals known to be valid.
    pub fn of(p: i64, q: i64) -> Self {
        Slope::new(p, q).expect("valid slope literal")
    }

    pub fn zero() -> Self {
        Slope::of(0, 1)
    }

    pub fn one() -> Self {
        Slope::of(1, 1)
    }

    pub fn infinity() -> Self {
        Slope::of(1, 0)
    }

    pub fn numer(&self) -> &BigInt {
        &self.p
    }

    pub fn denom(&self) -> &BigInt {
        &self.q
    }

    pub fn is_infinity(&self) -> bool {
        self.q.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_infinity() {
            f64::INFINITY
        } else {
            self.p.to_f64().unwrap_or(f64::NAN) / self.q.to_f64().unwrap_or(f64::NAN)
        }
    }

    /// Position on the circle under the chart t ↦ 2·arctan(t), with ∞ ↦ π.
    pub fn angle(&self) -> f64 {
        if self.is_infinity() {
            std::f64::consts::PI
        } else {
            2.0 * self.to_f64().atan()
        }
    }

    pub fn color(&self) -> ColorClass {
        ColorClass::of(self)
    }

    /// Length of the dual-tree path from the base triangle; 0 for base slopes.
    pub fn depth(&self) -> usize {
        farey_path(self).len()
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl fmt::Debug for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Slope {
    type Err = FareyError;

    /// Accepts "p/q", "p" (meaning p/1) and "inf" (meaning 1/0).
    fn from_str(s: &str) -> Result<Self, FareyError> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Slope::infinity());
        }
        let parse_int = |part: &str, pos: usize| -> Result<BigInt, FareyError> {
            part.trim().parse::<BigInt>().map_err(|e| FareyError::Parse {
                pos,
                msg: format!("expected integer, got {part:?} ({e})"),
            })
        };
        match t.find('/') {
            None => {
                let p = parse_int(t, 0)?;
                Slope::new(p, BigInt::one())
            }
            Some(i) => {
                let p = parse_int(&t[..i], 0)?;
                let q = parse_int(&t[i + 1..], i + 1)?;
                Slope::new(p, q)
            }
        }
    }
}

/// Linear order on the circle: finite slopes by value, ∞ greatest.
impl Ord for Slope {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_infinity(), other.is_infinity()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => (&self.p * &other.q).cmp(&(&other.p * &self.q)),
        }
    }
}

impl PartialOrd for Slope {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for Slope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Slope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// det(a, b) = a.p·b.q − b.p·a.q.
pub fn det(a: &Slope, b: &Slope) -> BigInt {
    &a.p * &b.q - &b.p * &a.q
}

/// Geometric intersection number one, realized as unimodularity.
pub fn is_adjacent(a: &Slope, b: &Slope) -> bool {
    det(a, b).abs().is_one()
}

/// Farey mediant of an adjacent pair.
pub fn mediant(a: &Slope, b: &Slope) -> Result<Slope, FareyError> {
    if !is_adjacent(a, b) {
        return Err(FareyError::NotAdjacent(a.clone(), b.clone()));
    }
    Slope::new(&a.p + &b.p, &a.q + &b.q)
}

/// True iff visiting a → b → c travels counterclockwise (positively) around
/// the circle. The slopes must be pairwise distinct.
pub fn ccw(a: &Slope, b: &Slope, c: &Slope) -> bool {
    (a < b && b < c) || (b < c && c < a) || (c < a && a < b)
}

/// `x` weakly precedes `y` in the counterclockwise order starting at `anchor`.
fn circ_le(anchor: &Slope, x: &Slope, y: &Slope) -> bool {
    if x == y || x == anchor {
        return true;
    }
    if y == anchor {
        return false;
    }
    ccw(anchor, x, y)
}

/// Total order by position in the counterclockwise circle walk from 0/1.
pub fn circular_cmp_from_zero(a: &Slope, b: &Slope) -> Ordering {
    if a == b {
        Ordering::Equal
    } else if circ_le(&Slope::zero(), a, b) {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// Tri-coloring of slopes by parity of (p, q); every triangle has one of each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorClass {
    R,
    G,
    B,
}

impl ColorClass {
    /// (odd, odd) → R, (even, odd) → B, (odd, even) → G; the base triple gets
    /// 0/1 → B, 1/0 → G, 1/1 → R.
    pub fn of(s: &Slope) -> ColorClass {
        match (s.p.is_odd(), s.q.is_odd()) {
            (true, true) => ColorClass::R,
            (false, true) => ColorClass::B,
            (true, false) => ColorClass::G,
            (false, false) => unreachable!("slope not in lowest terms"),
        }
    }
}

/// Unordered unimodular pair, stored with a ≤ b in the linear order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FareyPair {
    a: Slope,
    b: Slope,
}

impl FareyPair {
    pub fn new(a: Slope, b: Slope) -> Result<Self, FareyError> {
        if !is_adjacent(&a, &b) {
            return Err(FareyError::NotAdjacent(a, b));
        }
        Ok(if a <= b {
            FareyPair { a, b }
        } else {
            FareyPair { a: b, b: a }
        })
    }

    pub fn a(&self) -> &Slope {
        &self.a
    }

    pub fn b(&self) -> &Slope {
        &self.b
    }

    pub fn slopes(&self) -> [&Slope; 2] {
        [&self.a, &self.b]
    }

    pub fn contains(&self, s: &Slope) -> bool {
        &self.a == s || &self.b == s
    }

    /// The two triangle apexes completing this edge: the mediant and the
    /// Farey difference (each unimodular with both pair members).
    pub fn completions(&self) -> (Slope, Slope) {
        let m = Slope::new(&self.a.p + &self.b.p, &self.a.q + &self.b.q)
            .expect("mediant of a unimodular pair is a slope");
        let d = Slope::new(&self.a.p - &self.b.p, &self.a.q - &self.b.q)
            .expect("difference of a unimodular pair is a slope");
        (m, d)
    }

    /// The completion on the far side from `apex`.
    pub fn other_completion(&self, apex: &Slope) -> Slope {
        let (m, d) = self.completions();
        if &m == apex {
            d
        } else {
            debug_assert_eq!(&d, apex, "apex must be one of the two completions");
            m
        }
    }

    /// The color class absent from the pair.
    pub fn color(&self) -> ColorClass {
        match (self.a.color(), self.b.color()) {
            (ColorClass::G, ColorClass::B) | (ColorClass::B, ColorClass::G) => ColorClass::R,
            (ColorClass::R, ColorClass::B) | (ColorClass::B, ColorClass::R) => ColorClass::G,
            (ColorClass::R, ColorClass::G) | (ColorClass::G, ColorClass::R) => ColorClass::B,
            _ => unreachable!("unimodular pairs have distinct colors"),
        }
    }
}

/// A Farey triangle, stored in clockwise order starting from the linearly
/// smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FareyTriple {
    slopes: [Slope; 3],
}

impl FareyTriple {
    pub fn new(a: Slope, b: Slope, c: Slope) -> Result<Self, FareyError> {
        if !is_adjacent(&a, &b) || !is_adjacent(&b, &c) || !is_adjacent(&a, &c) {
            return Err(FareyError::NotATriangle);
        }
        let mut v = [a, b, c];
        v.sort();
        if v[0] == v[1] || v[1] == v[2] {
            return Err(FareyError::NotATriangle);
        }
        let [s0, s1, s2] = v;
        // ascending linear order is counterclockwise, so (s0, s2, s1) is
        // the clockwise arrangement anchored at the smallest vertex
        Ok(FareyTriple {
            slopes: [s0, s2, s1],
        })
    }

    pub fn base() -> Self {
        FareyTriple::new(Slope::zero(), Slope::infinity(), Slope::one()).unwrap()
    }

    /// Vertices in clockwise order.
    pub fn slopes(&self) -> &[Slope; 3] {
        &self.slopes
    }

    pub fn contains(&self, s: &Slope) -> bool {
        self.slopes.iter().any(|t| t == s)
    }

    /// The vertex of the given color class.
    pub fn vertex_of_color(&self, c: ColorClass) -> &Slope {
        self.slopes
            .iter()
            .find(|s| s.color() == c)
            .expect("every triangle has one vertex of each color")
    }

    /// The three edges, each with its apex (the opposite vertex).
    pub fn edges(&self) -> [(FareyPair, Slope); 3] {
        let [a, b, c] = &self.slopes;
        [
            (FareyPair::new(a.clone(), b.clone()).unwrap(), c.clone()),
            (FareyPair::new(b.clone(), c.clone()).unwrap(), a.clone()),
            (FareyPair::new(a.clone(), c.clone()).unwrap(), b.clone()),
        ]
    }

    /// The edge separating this triangle from `s`, with its apex in this
    /// triangle. `s` must not be a vertex.
    pub fn edge_toward(&self, s: &Slope) -> (FareyPair, Slope) {
        debug_assert!(!self.contains(s));
        for (pair, apex) in self.edges() {
            // the closed arc from pair.a to pair.b not containing the apex
            let arc = if Arc::new(pair.a.clone(), pair.b.clone()).contains(&apex) {
                Arc::new(pair.b.clone(), pair.a.clone())
            } else {
                Arc::new(pair.a.clone(), pair.b.clone())
            };
            if arc.contains(s) {
                return (pair, apex);
            }
        }
        unreachable!("every non-vertex slope lies behind exactly one edge")
    }
}

/// A directed tessellation edge: the pair plus the two completing regions,
/// with the arrow running from `from_slope` to `to_slope`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DirectedFareyEdge {
    pub pair: FareyPair,
    pub from_slope: Slope,
    pub to_slope: Slope,
}

impl DirectedFareyEdge {
    pub fn new(pair: FareyPair, from_slope: Slope, to_slope: Slope) -> Self {
        debug_assert!({
            let (m, d) = pair.completions();
            (m == from_slope && d == to_slope) || (d == from_slope && m == to_slope)
        });
        DirectedFareyEdge {
            pair,
            from_slope,
            to_slope,
        }
    }

    pub fn reversed(&self) -> Self {
        DirectedFareyEdge {
            pair: self.pair.clone(),
            from_slope: self.to_slope.clone(),
            to_slope: self.from_slope.clone(),
        }
    }
}

/// The minimal dual-tree path from the base triangle to a triangle having `s`
/// as a vertex. Base slopes yield the empty path; each step refines the
/// Stern–Brocot interval around `s`.
pub fn farey_path(s: &Slope) -> Vec<DirectedFareyEdge> {
    let mut path = Vec::new();
    let mut tri = FareyTriple::base();
    while !tri.contains(s) {
        let (pair, apex) = tri.edge_toward(s);
        let far = pair.other_completion(&apex);
        path.push(DirectedFareyEdge::new(pair.clone(), apex, far.clone()));
        tri = FareyTriple::new(pair.a.clone(), pair.b.clone(), far)
            .expect("descent step produces a triangle");
    }
    path
}

/// A closed arc from `lo` to `hi` going counterclockwise. `lo == hi` denotes
/// the full circle (arc measures are always positive).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub lo: Slope,
    pub hi: Slope,
}

impl Arc {
    pub fn new(lo: Slope, hi: Slope) -> Self {
        Arc { lo, hi }
    }

    pub fn full() -> Self {
        Arc::new(Slope::zero(), Slope::zero())
    }

    pub fn is_full(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, s: &Slope) -> bool {
        if self.is_full() {
            return true;
        }
        match self.lo.cmp(&self.hi) {
            Ordering::Less => &self.lo <= s && s <= &self.hi,
            Ordering::Greater => s >= &self.lo || s <= &self.hi,
            Ordering::Equal => true,
        }
    }

    /// `other` is contained in `self` as a point set.
    pub fn contains_arc(&self, other: &Arc) -> bool {
        if self.is_full() {
            return true;
        }
        if other.is_full() {
            return false;
        }
        circ_le(&self.lo, &other.lo, &other.hi) && circ_le(&self.lo, &other.hi, &self.hi)
    }

    /// Angular length under the chart t ↦ 2·arctan(t); full circle = 2π.
    /// Diagnostic only, never a branch condition.
    pub fn measure(&self) -> f64 {
        use std::f64::consts::TAU;
        if self.is_full() {
            return TAU;
        }
        let m = (self.hi.angle() - self.lo.angle()).rem_euclid(TAU);
        if m == 0.0 {
            TAU
        } else {
            m
        }
    }
}

impl fmt::Display for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

impl FromStr for Arc {
    type Err = FareyError;

    fn from_str(s: &str) -> Result<Self, FareyError> {
        let t = s.trim();
        let inner = t
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| FareyError::Parse {
                pos: 0,
                msg: "expected \"[lo,hi]\"".into(),
            })?;
        let comma = inner.find(',').ok_or_else(|| FareyError::Parse {
            pos: 1,
            msg: "expected a comma between endpoints".into(),
        })?;
        Ok(Arc::new(inner[..comma].parse()?, inner[comma + 1..].parse()?))
    }
}

/// A finite union of pairwise disjoint closed arcs in canonical circular
/// order (anchored at 0/1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ArcSet {
    arcs: Vec<Arc>,
}

impl ArcSet {
    pub fn empty() -> Self {
        ArcSet { arcs: Vec::new() }
    }

    pub fn full() -> Self {
        ArcSet {
            arcs: vec![Arc::full()],
        }
    }

    /// Canonical union of the given arcs: merges overlapping and touching
    /// arcs, sorts anchored at 0/1. Idempotent and order-independent.
    pub fn from_arcs(arcs: Vec<Arc>) -> Self {
        if arcs.iter().any(Arc::is_full) {
            return ArcSet::full();
        }
        if arcs.is_empty() {
            return ArcSet::empty();
        }
        let anchor = Slope::zero();

        // Rank every endpoint in the circular order from the anchor, then
        // merge as integer intervals on [0, n], splitting wrapping arcs.
        let mut points: Vec<Slope> = vec![anchor.clone()];
        for a in &arcs {
            points.push(a.lo.clone());
            points.push(a.hi.clone());
        }
        points.sort_by(|x, y| {
            if x == y {
                Ordering::Equal
            } else if circ_le(&anchor, x, y) {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        });
        points.dedup();
        let n = points.len();
        let rank = |s: &Slope| points.binary_search_by(|x| {
            if x == s {
                Ordering::Equal
            } else if circ_le(&anchor, x, s) {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        })
        .expect("endpoint was inserted");

        let mut intervals: Vec<(usize, usize)> = Vec::new();
        for a in &arcs {
            let (lo, hi) = (rank(&a.lo), rank(&a.hi));
            match lo.cmp(&hi) {
                Ordering::Less => intervals.push((lo, hi)),
                Ordering::Greater | Ordering::Equal if hi == 0 => intervals.push((lo, n)),
                Ordering::Greater => {
                    intervals.push((lo, n));
                    intervals.push((0, hi));
                }
                Ordering::Equal => unreachable!("full arcs were filtered"),
            }
        }
        intervals.sort_unstable();
        let mut merged: Vec<(usize, usize)> = Vec::new();
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some((_, mhi)) if lo <= *mhi => *mhi = (*mhi).max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        // stitch across the anchor: [.., n] followed by [0, ..]
        if merged.len() >= 2 {
            let wraps_end = merged.last().unwrap().1 == n;
            let starts_zero = merged[0].0 == 0;
            if wraps_end && starts_zero {
                let (lo_last, _) = merged.pop().unwrap();
                let (_, hi_first) = merged.remove(0);
                if lo_last == 0 && hi_first == n {
                    return ArcSet::full();
                }
                merged.push((lo_last, hi_first)); // wrapping arc
            }
        }
        if merged.len() == 1 && merged[0] == (0, n) {
            return ArcSet::full();
        }
        let to_slope = |r: usize| points[r % n].clone();
        let arcs = merged
            .into_iter()
            .map(|(lo, hi)| Arc::new(to_slope(lo), to_slope(hi)))
            .collect();
        ArcSet { arcs }
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.arcs.len() == 1 && self.arcs[0].is_full()
    }

    pub fn contains(&self, s: &Slope) -> bool {
        self.arcs.iter().any(|a| a.contains(s))
    }

    /// `other` ⊆ `self` as point sets.
    pub fn contains_set(&self, other: &ArcSet) -> bool {
        other
            .arcs
            .iter()
            .all(|small| self.arcs.iter().any(|big| big.contains_arc(small)))
    }

    pub fn measure(&self) -> f64 {
        self.arcs.iter().map(Arc::measure).sum()
    }
}
