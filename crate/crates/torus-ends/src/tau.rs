//! The τ-reduction walk for imaginary characters with κ < 2.
//!
//! An imaginary character is normalized so the real-valued class sits on the
//! R-colored regions (z real, x and y slots purely imaginary). For an R-class
//! edge with flanking real values z, z′ set τ(e) = −z·z′. The walk moves
//! along the boundary of the current R-region toward the τ-minimizing vertex
//! (where consecutive neighbor coefficients change sign), then flips across
//! the R-edge; the flip value decides between an attractor, an end-invariant
//! witness, or a strictly smaller |z| to recurse on.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::character::{
    act_c, apply_word, classify_type, sign_change, Character, Complex, Generator, SignPair,
};
use crate::farey::{ColorClass, FareyPair, FareyTriple, Slope};
use crate::numeric::{end_test_value, EndTest, Params, Trilean};
use crate::trace_tree::{locate, trace_at};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TauError {
    #[error("character is not imaginary")]
    NotImaginary,
    #[error("τ-reduction requires κ < 2, got {0}")]
    KappaOutOfRange(f64),
    #[error("edge is not of the R color class")]
    WrongEdgeColor,
    #[error("region is not of the R color class")]
    WrongRegionColor,
    #[error("ellipse walk needs 0 < z₀ < 2, got {0}")]
    CenterOutOfRange(f64),
    #[error("ellipse walk center vanishes (dihedral-adjacent)")]
    ZeroCenter,
    #[error("walk window exhausted")]
    WindowExhausted,
    #[error("budget must be at least 1")]
    InvalidBudget,
}

/// An imaginary character in normalized coordinates: traces are i·x, i·y on
/// the B and G classes and z on the R class, with x, y, z real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImaginaryForm {
    /// c^rotation applied to the original character
    pub character: Character,
    pub rotation: u8,
    pub normalization_word: Vec<Generator>,
    pub kappa: f64,
}

impl ImaginaryForm {
    pub fn new(ch: &Character, params: &Params) -> Result<Self, TauError> {
        let report = classify_type(ch, params.tol);
        if report.imaginary != Trilean::Yes {
            return Err(TauError::NotImaginary);
        }
        let character = apply_word(ch, &report.normalization_word);
        let rotation = report.normalization_word.len() as u8;
        Ok(ImaginaryForm {
            kappa: character.kappa().re,
            character,
            rotation,
            normalization_word: report.normalization_word,
        })
    }

    /// Real coefficients (x, y, z) of the defining triple (ix, iy, z).
    pub fn real_coeffs(&self) -> (f64, f64, f64) {
        (
            self.character.x.im,
            self.character.y.im,
            self.character.z.re,
        )
    }

    /// Translate a slope in normalized coordinates back to the original
    /// character: each c-rotation acts on slopes by p/q ↦ q/(q−p).
    pub fn to_original_slope(&self, s: &Slope) -> Slope {
        let mut out = s.clone();
        for _ in 0..self.rotation {
            out = rotate_slope(&out);
        }
        out
    }
}

/// The slope action matching one application of c: trace_{c(ρ)}(s) equals
/// trace_ρ of this image.
pub fn rotate_slope(s: &Slope) -> Slope {
    let p = s.numer().clone();
    let q = s.denom().clone();
    Slope::new(q.clone(), q - p).expect("Möbius image of a slope is a slope")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TauStepKind {
    WalkAlongBoundary,
    Flip,
}

/// One state of the reduction: the vertex, the (sign-normalized) real value
/// of its R-region, and the move that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauStep {
    pub vertex: FareyTriple,
    pub z_k: f64,
    pub kind: TauStepKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TauOutcome {
    /// τ is minimal at this vertex; the flow attractor certifies E(ρ) = ∅.
    Attractor {
        vertex: FareyTriple,
        trace: Vec<TauStep>,
    },
    /// A region adjacent to the final vertex is an end invariant.
    EndWitness {
        slope: Slope,
        value: Complex,
        trace: Vec<TauStep>,
    },
    Exhausted { trace: Vec<TauStep> },
}

impl TauOutcome {
    pub fn trace(&self) -> &[TauStep] {
        match self {
            TauOutcome::Attractor { trace, .. } => trace,
            TauOutcome::EndWitness { trace, .. } => trace,
            TauOutcome::Exhausted { trace } => trace,
        }
    }
}

/// τ(e) = −z·z′ for an R-class edge, from the real values of the two
/// flanking R-regions.
pub fn tau_of_edge(form: &ImaginaryForm, e: &FareyPair, params: &Params) -> Result<f64, TauError> {
    if e.color() != ColorClass::R {
        return Err(TauError::WrongEdgeColor);
    }
    let (c1, c2) = e.completions();
    let z1 = trace_at(&form.character, &c1, params).value.re;
    let z2 = trace_at(&form.character, &c2, params).value.re;
    Ok(-z1 * z2)
}

struct Reduction<'a> {
    ch: Character,
    kappa: f64,
    params: &'a Params,
    budget: usize,
    spent: usize,
    visited: HashSet<FareyTriple>,
    trace: Vec<TauStep>,
}

enum Flow {
    Done(TauOutcome),
    Continue {
        z: (Slope, f64),
        a: (Slope, f64),
        b: (Slope, f64),
    },
}

impl<'a> Reduction<'a> {
    fn spend(&mut self) -> bool {
        self.spent += 1;
        self.spent <= self.budget
    }

    fn record(&mut self, vertex: FareyTriple, z_k: f64, kind: TauStepKind) {
        self.trace.push(TauStep { vertex, z_k, kind });
    }

    fn exhausted(self) -> TauOutcome {
        TauOutcome::Exhausted { trace: self.trace }
    }

    /// End-invariant test of a region value in normalized coordinates; the
    /// value is i·t on B/G classes and real on R.
    fn region_end_test(&self, value: Complex) -> EndTest {
        end_test_value(
            &crate::numeric::TraceValue::exact(value),
            Complex::new(self.kappa, 0.0),
            self.params.tol,
        )
    }

    fn witness(&self, slope: &Slope, value: Complex) -> Option<TauOutcome> {
        match self.region_end_test(value) {
            EndTest::YesInterval | EndTest::YesSqrt => Some(TauOutcome::EndWitness {
                slope: slope.clone(),
                value,
                trace: self.trace.clone(),
            }),
            _ => None,
        }
    }
}

/// Run the τ-reduction from `start`. Walk steps and flips both count against
/// `budget`; per-boundary walks are additionally capped by the walk window.
pub fn tau_reduce(
    form: &ImaginaryForm,
    start: &FareyTriple,
    budget: usize,
    params: &Params,
) -> Result<TauOutcome, TauError> {
    if budget == 0 {
        return Err(TauError::InvalidBudget);
    }
    if form.kappa >= 2.0 - params.tol {
        return Err(TauError::KappaOutOfRange(form.kappa));
    }
    let mut red = Reduction {
        ch: form.character,
        kappa: form.kappa,
        params,
        budget,
        spent: 0,
        visited: HashSet::new(),
        trace: Vec::new(),
    };

    // seed values at the start vertex
    let z_slope = start.vertex_of_color(ColorClass::R).clone();
    let a_slope = start.vertex_of_color(ColorClass::B).clone();
    let b_slope = start.vertex_of_color(ColorClass::G).clone();
    let mut cur = Flow::Continue {
        z: (
            z_slope.clone(),
            trace_at(&red.ch, &z_slope, params).value.re,
        ),
        a: (
            a_slope.clone(),
            trace_at(&red.ch, &a_slope, params).value.im,
        ),
        b: (
            b_slope.clone(),
            trace_at(&red.ch, &b_slope, params).value.im,
        ),
    };

    loop {
        let (z, a, b) = match cur {
            Flow::Done(outcome) => return Ok(outcome),
            Flow::Continue { z, a, b } => (z, a, b),
        };
        cur = step(&mut red, z, a, b)?;
    }
}

/// One inductive round: witness checks, sign normalization, the boundary
/// walk to the τ-minimizing vertex, and the flip decision.
fn step(
    red: &mut Reduction,
    mut z: (Slope, f64),
    mut a: (Slope, f64),
    mut b: (Slope, f64),
) -> Result<Flow, TauError> {
    let tol = red.params.tol;
    let vertex = FareyTriple::new(z.0.clone(), a.0.clone(), b.0.clone())
        .expect("reduction state is a triangle");
    if !red.visited.insert(vertex.clone()) {
        // the algorithm never backtracks; a revisit means numeric trouble
        return Ok(Flow::Done(red_exhausted(red)));
    }

    // case (b) endings at the current vertex
    if let Some(w) = red.witness(&a.0, Complex::new(0.0, a.1)) {
        return Ok(Flow::Done(w));
    }
    if let Some(w) = red.witness(&b.0, Complex::new(0.0, b.1)) {
        return Ok(Flow::Done(w));
    }
    if let Some(w) = red.witness(&z.0, Complex::new(z.1, 0.0)) {
        return Ok(Flow::Done(w));
    }

    // the R-edge at this vertex and its other flanking region
    let r_edge = FareyPair::new(a.0.clone(), b.0.clone()).expect("triangle edge");
    let z_other_slope = r_edge.other_completion(&z.0);
    let z_other = -a.1 * b.1 - z.1;
    if let Some(w) = red.witness(&z_other_slope, Complex::new(z_other, 0.0)) {
        return Ok(Flow::Done(w));
    }
    if z.1.abs() >= 2.0 - tol && z_other.abs() >= 2.0 - tol && (z.1 * z_other) > 0.0 {
        // τ(e) < 0: minimal; the sink is on the side of the smaller |z|
        let vtx = if z.1.abs() <= z_other.abs() {
            vertex.clone()
        } else {
            FareyTriple::new(a.0.clone(), b.0.clone(), z_other_slope).expect("flip triangle")
        };
        return Ok(Flow::Done(TauOutcome::Attractor {
            vertex: vtx,
            trace: red.trace.clone(),
        }));
    }

    // sign-normalize so the walk happens at z ≥ 2 (band values count as 2)
    if z.1 < 0.0 {
        red.ch = sign_change(&red.ch, SignPair::ZX);
        z.1 = -z.1;
        let flip_b_class = |s: &Slope, t: f64| if s.color() == ColorClass::B { -t } else { t };
        a.1 = flip_b_class(&a.0, a.1);
        b.1 = flip_b_class(&b.0, b.1);
    }
    debug_assert!(z.1 >= 2.0 - tol);
    red.record(vertex.clone(), z.1, TauStepKind::WalkAlongBoundary);

    // walk ∂Z toward the sign change in consecutive neighbor coefficients
    let (mut prev, mut curn) = orient_walk(&z, &a, &b);
    let mut product = prev.1 * curn.1;
    let mut steps = 0usize;
    while product > 0.0 {
        if steps >= red.params.walk_window || !red.spend() {
            return Ok(Flow::Done(red_exhausted(red)));
        }
        steps += 1;
        let pair = FareyPair::new(z.0.clone(), curn.0.clone()).expect("fan spoke");
        let next_slope = pair.other_completion(&prev.0);
        let next_val = z.1 * curn.1 - prev.1;
        let imag_class = next_slope.color();
        debug_assert_ne!(imag_class, ColorClass::R);
        if let Some(w) = red.witness(&next_slope, Complex::new(0.0, next_val)) {
            return Ok(Flow::Done(w));
        }
        let wv = FareyTriple::new(z.0.clone(), curn.0.clone(), next_slope.clone())
            .expect("walk triangle");
        let next_product = curn.1 * next_val;
        if next_product >= product + tol * (1.0 + product.abs()) && next_product > 0.0 {
            // τ must strictly decrease until the minimizing vertex
            return Ok(Flow::Done(red_exhausted(red)));
        }
        if !red.visited.insert(wv.clone()) {
            return Ok(Flow::Done(red_exhausted(red)));
        }
        red.record(wv, z.1, TauStepKind::WalkAlongBoundary);
        prev = curn;
        curn = (next_slope, next_val);
        product = next_product;
    }

    // v_min reached: prev and curn have opposite-sign coefficients
    let min_edge = FareyPair::new(prev.0.clone(), curn.0.clone()).expect("minimizing edge");
    debug_assert_eq!(min_edge.color(), ColorClass::R);
    let z_new_slope = min_edge.other_completion(&z.0);
    let z_new = -prev.1 * curn.1 - z.1;
    let at_min = FareyTriple::new(z.0.clone(), prev.0.clone(), curn.0.clone()).unwrap();

    if z_new >= z.1 - tol {
        return Ok(Flow::Done(TauOutcome::Attractor {
            vertex: at_min,
            trace: red.trace.clone(),
        }));
    }
    // flip across the minimizing edge
    if !red.spend() {
        return Ok(Flow::Done(red_exhausted(red)));
    }
    let flipped = FareyTriple::new(prev.0.clone(), curn.0.clone(), z_new_slope.clone())
        .expect("flip triangle");
    red.record(flipped.clone(), z_new, TauStepKind::Flip);
    if z_new >= 2.0 - tol {
        return Ok(Flow::Done(TauOutcome::Attractor {
            vertex: flipped,
            trace: red.trace.clone(),
        }));
    }
    if let Some(w) = red.witness(&z_new_slope, Complex::new(z_new, 0.0)) {
        return Ok(Flow::Done(w));
    }
    if z_new > -2.0 + tol {
        // inside a ±2 band without qualifying as a witness
        return Ok(Flow::Done(red_exhausted(red)));
    }
    debug_assert!(z_new.abs() < z.1, "flip must strictly reduce |z|");
    Ok(Flow::Continue {
        z: (z_new_slope, z_new),
        a: (prev.0, prev.1),
        b: (curn.0, curn.1),
    })
}

fn red_exhausted(red: &Reduction) -> TauOutcome {
    TauOutcome::Exhausted {
        trace: red.trace.clone(),
    }
}

/// Choose the walk direction of strictly decreasing τ along ∂Z.
fn orient_walk(
    z: &(Slope, f64),
    a: &(Slope, f64),
    b: &(Slope, f64),
) -> ((Slope, f64), (Slope, f64)) {
    let p0 = a.1 * b.1;
    if p0 <= 0.0 {
        return (a.clone(), b.clone());
    }
    // next coefficient in the a→b direction and in the b→a direction
    let next_ab = z.1 * b.1 - a.1;
    let next_ba = z.1 * a.1 - b.1;
    let p_ab = b.1 * next_ab;
    let p_ba = a.1 * next_ba;
    if p_ab <= p_ba {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Walk the neighbors of an R-region with value z₀ ∈ (0, 2) until two
/// successive coefficients have opposite signs and magnitudes ≤ z₀; the
/// region opposite that pair is a new end-invariant witness.
pub fn ellipse_walk(
    form: &ImaginaryForm,
    center: &Slope,
    params: &Params,
) -> Result<(Slope, Slope), TauError> {
    if center.color() != ColorClass::R {
        return Err(TauError::WrongRegionColor);
    }
    let z0 = trace_at(&form.character, center, params).value.re;
    if z0.abs() <= params.tol {
        return Err(TauError::ZeroCenter);
    }
    if !(0.0..2.0 - params.tol).contains(&z0) {
        return Err(TauError::CenterOutOfRange(z0));
    }
    let loc = locate(&form.character, center, params);
    let starts = [
        (loc.y0.clone(), loc.y1.clone()),
        (loc.y1.clone(), loc.y0.clone()),
    ];
    for (p0, c0) in starts {
        let mut prev = (p0.0.clone(), p0.1.value.im);
        let mut cur = (c0.0.clone(), c0.1.value.im);
        for _ in 0..params.walk_window {
            if prev.1 * cur.1 < 0.0
                && prev.1.abs() <= z0 + params.tol
                && cur.1.abs() <= z0 + params.tol
            {
                return Ok((prev.0, cur.0));
            }
            let pair = FareyPair::new(center.clone(), cur.0.clone()).expect("fan spoke");
            let next_slope = pair.other_completion(&prev.0);
            let next_val = z0 * cur.1 - prev.1;
            prev = cur;
            cur = (next_slope, next_val);
        }
    }
    Err(TauError::WindowExhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn imag(x: (f64, f64), y: (f64, f64), z: (f64, f64)) -> Character {
        Character::new(C::new(x.0, x.1), C::new(y.0, y.1), C::new(z.0, z.1))
    }

    #[test]
    fn rotation_matches_trace_transport() {
        let p = Params::default();
        let ch = imag((0.3, 0.7), (-1.1, 0.4), (0.9, -0.2));
        let rotated = act_c(&ch);
        for s in [
            Slope::zero(),
            Slope::one(),
            Slope::infinity(),
            Slope::of(2, 5),
            Slope::of(-3, 2),
        ] {
            let lhs = trace_at(&rotated, &s, &p).value;
            let rhs = trace_at(&ch, &rotate_slope(&s), &p).value;
            assert!(
                (lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()),
                "slope {s}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn form_normalizes_real_slot() {
        let p = Params::default();
        let ch = imag((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)); // (0, 1, i)
        let form = ImaginaryForm::new(&ch, &p).unwrap();
        assert_eq!(form.rotation, 1);
        let (x, y, z) = form.real_coeffs();
        assert_eq!((x, y, z), (1.0, 0.0, 1.0));
        assert!((form.kappa + 2.0).abs() < 1e-12);
        // the witness slope in normalized coordinates maps back to a slope
        // with the same trace
        let back = form.to_original_slope(&Slope::infinity());
        let v = trace_at(&ch, &back, &p).value;
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn tau_of_edge_fixture() {
        let p = Params::default();
        // (2i, 2i, 1): z = 1, z′ = −(2·2) − 1 = −5, τ = 5
        let ch = imag((0.0, 2.0), (0.0, 2.0), (1.0, 0.0));
        let form = ImaginaryForm::new(&ch, &p).unwrap();
        assert_eq!(form.rotation, 0);
        let base_r_edge = FareyPair::new(Slope::zero(), Slope::infinity()).unwrap();
        let tau = tau_of_edge(&form, &base_r_edge, &p).unwrap();
        assert!((tau - 5.0).abs() < 1e-12);
        // wrong color class rejected
        let wrong = FareyPair::new(Slope::zero(), Slope::one()).unwrap();
        assert!(tau_of_edge(&form, &wrong, &p).is_err());
    }

    #[test]
    fn zero_region_gives_immediate_witness() {
        let p = Params::default();
        // (0, 3, 3i) normalizes with the zero landing on a fan region
        let ch = imag((0.0, 0.0), (3.0, 0.0), (0.0, 3.0));
        let form = ImaginaryForm::new(&ch, &p).unwrap();
        match tau_reduce(&form, &FareyTriple::base(), 1000, &p).unwrap() {
            TauOutcome::EndWitness { slope, value, .. } => {
                assert!(value.norm() <= p.tol);
                // maps back to a vanishing trace of the original character
                let orig = form.to_original_slope(&slope);
                assert!(trace_at(&ch, &orig, &p).value.norm() < 1e-12);
            }
            other => panic!("expected end witness, got {other:?}"),
        }
    }

    #[test]
    fn interval_z_gives_witness() {
        let p = Params::default();
        // (2i, 2i, 1): κ = −5, z = 1 ∈ (−2, 2)
        let ch = imag((0.0, 2.0), (0.0, 2.0), (1.0, 0.0));
        let form = ImaginaryForm::new(&ch, &p).unwrap();
        assert!((form.kappa + 5.0).abs() < 1e-12);
        match tau_reduce(&form, &FareyTriple::base(), 1000, &p).unwrap() {
            TauOutcome::EndWitness { value, .. } => {
                assert!((value.re - 1.0).abs() < 1e-12);
            }
            other => panic!("expected end witness, got {other:?}"),
        }
    }

    #[test]
    fn kappa_minus_fourteen_attracts() {
        let p = Params::default();
        let ch = imag((2.0, 0.0), (0.0, 2.0), (0.0, -2.0)); // κ = −14
        let form = ImaginaryForm::new(&ch, &p).unwrap();
        assert_eq!(form.rotation, 2);
        assert!((form.kappa + 14.0).abs() < 1e-12);
        match tau_reduce(&form, &FareyTriple::base(), 1000, &p).unwrap() {
            TauOutcome::Attractor { .. } => {}
            other => panic!("expected attractor, got {other:?}"),
        }
    }

    #[test]
    fn reduction_descends_from_depth() {
        let p = Params::default();
        let ch = imag((2.0, 0.0), (0.0, 2.0), (0.0, -2.0));
        let form = ImaginaryForm::new(&ch, &p).unwrap();
        let deep = FareyTriple::new(Slope::of(3, 5), Slope::of(2, 3), Slope::of(5, 8)).unwrap();
        let out = tau_reduce(&form, &deep, 10_000, &p).unwrap();
        match out {
            TauOutcome::Attractor { ref trace, .. } => {
                // no vertex repeats along the way
                let mut seen = std::collections::HashSet::new();
                for s in trace {
                    assert!(seen.insert(s.vertex.clone()), "revisited {:?}", s.vertex);
                }
            }
            ref other => panic!("expected attractor, got {other:?}"),
        }
    }

    #[test]
    fn flips_strictly_descend() {
        let p = Params::default();
        // a character with room for several flips: pick coefficients with a
        // large starting z
        let ch = imag((0.0, 2.5), (0.0, 1.7), (7.0, 0.0));
        let form = ImaginaryForm::new(&ch, &p).unwrap();
        assert!(form.kappa < 2.0);
        let out = tau_reduce(&form, &FareyTriple::base(), 10_000, &p).unwrap();
        let flips: Vec<f64> = out
            .trace()
            .iter()
            .filter(|s| s.kind == TauStepKind::Flip)
            .map(|s| s.z_k.abs())
            .collect();
        for w in flips.windows(2) {
            assert!(w[1] < w[0], "flip values must strictly descend: {flips:?}");
        }
        assert!(!matches!(out, TauOutcome::Exhausted { .. }));
    }

    #[test]
    fn ellipse_walk_finds_opposite_signs() {
        let p = Params::default();
        // z₀ = 1.5 on the R region at 1/1; choose imaginary coefficients on
        // the ellipse through the vertex relation
        // κ = −x² − y² + z² + xyz − 2 with (x, y, z) = (x0, y0, 1.5)
        let (x0, y0) = (3.0, 1.0);
        let ch = imag((0.0, x0), (0.0, y0), (1.5, 0.0));
        let form = ImaginaryForm::new(&ch, &p).unwrap();
        let (sa, sb) = ellipse_walk(&form, &Slope::one(), &p).unwrap();
        let va = trace_at(&form.character, &sa, &p).value.im;
        let vb = trace_at(&form.character, &sb, &p).value.im;
        assert!(va * vb < 0.0);
        assert!(va.abs() <= 1.5 + p.tol && vb.abs() <= 1.5 + p.tol);
        // the opposite region across (sa, sb) has |trace| < 2
        let pair = FareyPair::new(sa, sb).unwrap();
        let (c1, c2) = pair.completions();
        let other = if c1 == Slope::one() { c2 } else { c1 };
        let w = trace_at(&form.character, &other, &p).value;
        assert!(w.norm() < 2.0, "witness value {w}");
    }

    #[test]
    fn ellipse_walk_rejects_bad_centers() {
        let p = Params::default();
        let ch = imag((0.0, 3.0), (0.0, 1.0), (1.5, 0.0));
        let form = ImaginaryForm::new(&ch, &p).unwrap();
        assert!(matches!(
            ellipse_walk(&form, &Slope::zero(), &p),
            Err(TauError::WrongRegionColor)
        ));
        let big = imag((0.0, 3.0), (0.0, 1.0), (5.0, 0.0));
        let bigform = ImaginaryForm::new(&big, &p).unwrap();
        assert!(matches!(
            ellipse_walk(&bigform, &Slope::one(), &p),
            Err(TauError::CenterOutOfRange(_))
        ));
    }
}
