//! Characters as complex triples, κ, the mapping-class-group action, sign
//! changes, class predicates, and an independent 2×2 matrix trace oracle.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::farey::Slope;
use crate::numeric::{root_ge_one, Params, TraceValue, Trilean};

pub type Complex = Complex64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CharacterError {
    #[error("invalid complex literal at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("empty word")]
    EmptyWord,
}

/// A character (x, y, z) — the traces at slopes 0/1, 1/0, 1/1 — with its
/// cached commutator trace κ = x²+y²+z²−xyz−2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Character {
    pub x: Complex,
    pub y: Complex,
    pub z: Complex,
    kappa: Complex,
}

/// κ = x² + y² + z² − xyz − 2.
pub fn kappa_of(x: Complex, y: Complex, z: Complex) -> Complex {
    x * x + y * y + z * z - x * y * z - 2.0
}

impl Character {
    pub fn new(x: Complex, y: Complex, z: Complex) -> Self {
        Character {
            x,
            y,
            z,
            kappa: kappa_of(x, y, z),
        }
    }

    pub fn from_reals(x: f64, y: f64, z: f64) -> Self {
        Character::new(Complex::new(x, 0.0), Complex::new(y, 0.0), Complex::new(z, 0.0))
    }

    pub fn kappa(&self) -> Complex {
        self.kappa
    }

    pub fn entries(&self) -> [Complex; 3] {
        [self.x, self.y, self.z]
    }

    /// Trace at a base slope, if `s` is one of 0/1, 1/0, 1/1.
    pub fn base_value(&self, s: &Slope) -> Option<Complex> {
        if *s == Slope::zero() {
            Some(self.x)
        } else if *s == Slope::infinity() {
            Some(self.y)
        } else if *s == Slope::one() {
            Some(self.z)
        } else {
            None
        }
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{}",
            fmt_complex(self.x),
            fmt_complex(self.y),
            fmt_complex(self.z)
        )
    }
}

/// Cyclic generator c: (x, y, z) ↦ (z, x, y).
pub fn act_c(ch: &Character) -> Character {
    Character::new(ch.z, ch.x, ch.y)
}

/// Involution s: (x, y, z) ↦ (y, x, xy − z).
pub fn act_s(ch: &Character) -> Character {
    Character::new(ch.y, ch.x, ch.x * ch.y - ch.z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignPair {
    XY,
    YZ,
    ZX,
}

/// Simultaneously flip the signs of the named two coordinates.
pub fn sign_change(ch: &Character, pair: SignPair) -> Character {
    match pair {
        SignPair::XY => Character::new(-ch.x, -ch.y, ch.z),
        SignPair::YZ => Character::new(ch.x, -ch.y, -ch.z),
        SignPair::ZX => Character::new(-ch.x, ch.y, -ch.z),
    }
}

/// A generator of the action used in normalization words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    C,
    S,
    Sign(SignPair),
}

pub fn apply_generator(ch: &Character, g: Generator) -> Character {
    match g {
        Generator::C => act_c(ch),
        Generator::S => act_s(ch),
        Generator::Sign(p) => sign_change(ch, p),
    }
}

pub fn apply_word(ch: &Character, word: &[Generator]) -> Character {
    word.iter().fold(*ch, |c, &g| apply_generator(&c, g))
}

/// Class predicates of a character, three-valued where a comparison can land
/// in the ε band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub real: Trilean,
    pub imaginary: Trilean,
    pub dihedral: Trilean,
    pub su2: Trilean,
    pub reducible: Trilean,
    /// Witnesses the coordinate placement used for imaginary recognition.
    pub normalization_word: Vec<Generator>,
}

/// Classify the character: real / imaginary / dihedral / SU(2) / reducible.
///
/// Imaginary recognition tries the three cyclic placements of the real slot;
/// dihedral (two entries zero) takes precedence over imaginary by the usual
/// convention.
pub fn classify_type(ch: &Character, tol: f64) -> ClassReport {
    let entries = ch.entries();
    let zeros = entries.iter().filter(|v| v.norm() <= tol).count();
    let dihedral = if zeros >= 2 { Trilean::Yes } else { Trilean::No };

    let real = if entries.iter().all(|v| v.im.abs() <= tol) {
        Trilean::Yes
    } else {
        Trilean::No
    };

    let mut imaginary = Trilean::No;
    let mut normalization_word = Vec::new();
    if dihedral == Trilean::No {
        let mut cur = *ch;
        for k in 0..3 {
            let nonzero = cur.entries().iter().filter(|v| v.norm() > tol).count();
            if cur.x.re.abs() <= tol
                && cur.y.re.abs() <= tol
                && cur.z.im.abs() <= tol
                && nonzero >= 2
            {
                imaginary = Trilean::Yes;
                normalization_word = vec![Generator::C; k];
                break;
            }
            cur = act_c(&cur);
        }
    }

    let su2 = if real != Trilean::Yes {
        Trilean::No
    } else {
        let mut out = Trilean::Yes;
        for v in entries {
            let r = v.re.abs();
            if r > 2.0 + tol {
                out = Trilean::No;
                break;
            }
            if r > 2.0 - tol {
                out = Trilean::Boundary;
            }
        }
        if out != Trilean::No {
            let k = ch.kappa.re;
            if k > 2.0 + tol {
                out = Trilean::No;
            } else if k > 2.0 - tol && out == Trilean::Yes {
                out = Trilean::Boundary;
            }
        }
        out
    };

    let dk = (ch.kappa - 2.0).norm();
    let reducible = if dk <= tol {
        Trilean::Yes
    } else if dk <= 100.0 * tol {
        Trilean::Boundary
    } else {
        Trilean::No
    };

    ClassReport {
        real,
        imaginary,
        dihedral,
        su2,
        reducible,
        normalization_word,
    }
}

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        Mat2([
            [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
            [Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)],
        ])
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn trace(&self) -> Complex {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: Complex) -> Mat2 {
        Mat2([
            [self.0[0][0] * s, self.0[0][1] * s],
            [self.0[1][0] * s, self.0[1][1] * s],
        ])
    }

    fn max_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// The explicit representation realizing a character:
/// A = [[x, 1], [−1, 0]], B = [[0, −ζ], [ζ⁻¹, y]] with ζ + ζ⁻¹ = z, |ζ| ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixPair {
    pub a: Mat2,
    pub b: Mat2,
    pub zeta: Complex,
}

pub fn matrix_pair(ch: &Character) -> MatrixPair {
    let zeta = root_ge_one(ch.z);
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    let a = Mat2([[ch.x, one], [-one, zero]]);
    let b = Mat2([[zero, -zeta], [one / zeta, ch.y]]);
    MatrixPair { a, b, zeta }
}

/// A letter of a word in the free group on X, Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Letter {
    X,
    XInv,
    Y,
    YInv,
}

pub type Word = Vec<Letter>;

/// Trace of ρ(w) for the explicit matrices, evaluated left to right with a
/// determinant renormalization every 64 multiplications to damp drift.
/// The independent oracle for the recursive trace map.
pub fn trace_word(ch: &Character, word: &[Letter], params: &Params) -> Result<TraceValue, CharacterError> {
    if word.is_empty() {
        return Err(CharacterError::EmptyWord);
    }
    let mp = matrix_pair(ch);
    let zero = Complex::new(0.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    let a_inv = Mat2([[zero, -one], [one, ch.x]]);
    let b_inv = Mat2([[ch.y, mp.zeta], [-one / mp.zeta, zero]]);

    let mut m = Mat2::identity();
    let mut saturated = false;
    for (i, l) in word.iter().enumerate() {
        let f = match l {
            Letter::X => &mp.a,
            Letter::XInv => &a_inv,
            Letter::Y => &mp.b,
            Letter::YInv => &b_inv,
        };
        m = m.mul(f);
        if m.max_norm() > params.sat {
            saturated = true;
            let n = m.max_norm();
            m = m.scale(Complex::new(params.sat / n, 0.0));
        }
        if (i + 1) % 64 == 0 && !saturated {
            let d = m.det().sqrt();
            if d.norm() > 0.0 {
                m = m.scale(one / d);
            }
        }
    }
    let mut tv = TraceValue::new(m.trace(), params);
    tv.saturated |= saturated;
    Ok(tv)
}

/// Parse a word over {X, X⁻¹, Y, Y⁻¹}; lowercase letters denote inverses.
pub fn parse_word(s: &str) -> Result<Word, CharacterError> {
    let mut w = Vec::new();
    for (pos, c) in s.char_indices() {
        match c {
            'X' => w.push(Letter::X),
            'Y' => w.push(Letter::Y),
            'x' => w.push(Letter::XInv),
            'y' => w.push(Letter::YInv),
            c if c.is_whitespace() => {}
            _ => {
                return Err(CharacterError::Parse {
                    pos,
                    msg: format!("unexpected letter {c:?}; expected X, Y, x (=X⁻¹) or y (=Y⁻¹)"),
                })
            }
        }
    }
    if w.is_empty() {
        return Err(CharacterError::EmptyWord);
    }
    Ok(w)
}

/// A primitive word whose homology class is q[X] + p[Y] for slope p/q, built
/// by the Farey concatenation W(mediant) = W(left)·W(right) from W(0/1) = X,
/// W(1/0) = Y. Slopes in other branches use inverse letters.
pub fn primitive_word(s: &Slope) -> Word {
    use num_bigint::BigInt;
    use num_traits::Zero;

    if *s == Slope::zero() {
        return vec![Letter::X];
    }
    if *s == Slope::infinity() {
        return vec![Letter::Y];
    }
    if *s == Slope::one() {
        return vec![Letter::X, Letter::Y];
    }

    // signed Stern–Brocot over one of the three base arcs
    type V = (BigInt, BigInt);
    let cmp = |u: &V, v: &V| (&u.0 * &v.1).cmp(&(&v.0 * &u.1));
    let target: V = (s.numer().clone(), s.denom().clone());

    let (mut a, mut wa, mut b, mut wb): (V, Word, V, Word) = if s.numer().is_zero()
        || s.numer().sign() == num_bigint::Sign::Minus
    {
        // negative branch: ∞ represented as −1/0 carries Y⁻¹
        (
            (BigInt::from(-1), BigInt::from(0)),
            vec![Letter::YInv],
            (BigInt::from(0), BigInt::from(1)),
            vec![Letter::X],
        )
    } else if *s < Slope::one() {
        (
            (BigInt::from(0), BigInt::from(1)),
            vec![Letter::X],
            (BigInt::from(1), BigInt::from(1)),
            vec![Letter::X, Letter::Y],
        )
    } else {
        (
            (BigInt::from(1), BigInt::from(1)),
            vec![Letter::X, Letter::Y],
            (BigInt::from(1), BigInt::from(0)),
            vec![Letter::Y],
        )
    };

    loop {
        let m: V = (&a.0 + &b.0, &a.1 + &b.1);
        let mut wm = wa.clone();
        wm.extend_from_slice(&wb);
        match cmp(&target, &m) {
            std::cmp::Ordering::Equal => return wm,
            std::cmp::Ordering::Less => {
                b = m;
                wb = wm;
            }
            std::cmp::Ordering::Greater => {
                a = m;
                wa = wm;
            }
        }
    }
}

/// Complex literal: "a", "bi", "a+bi", "a-bi" with ASCII 'i'.
pub fn parse_complex(s: &str) -> Result<Complex, CharacterError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(CharacterError::Parse {
            pos: 0,
            msg: "empty literal".into(),
        });
    }
    let parse_f = |part: &str, pos: usize| -> Result<f64, CharacterError> {
        let p = part.trim();
        if p.is_empty() || p == "+" {
            return Ok(1.0);
        }
        if p == "-" {
            return Ok(-1.0);
        }
        p.parse::<f64>().map_err(|_| CharacterError::Parse {
            pos,
            msg: format!("expected a number, got {p:?}"),
        })
    };

    if let Some(body) = t.strip_suffix(['i', 'I']) {
        // find a '+' or '-' splitting real and imaginary parts (not at the
        // start, not following an exponent marker)
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let c = bytes[idx] as char;
            if (c == '+' || c == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                split = Some(idx);
                break;
            }
        }
        match split {
            Some(idx) => {
                let re = parse_f(&body[..idx], 0)?;
                let im_part = &body[idx..];
                let im = parse_f(im_part, idx)?;
                Ok(Complex::new(re, im))
            }
            None => Ok(Complex::new(0.0, parse_f(body, 0)?)),
        }
    } else {
        Ok(Complex::new(parse_f(t, 0)?, 0.0))
    }
}

/// Character literal "x,y,z" of three complex literals.
pub fn parse_character(s: &str) -> Result<Character, CharacterError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CharacterError::Parse {
            pos: 0,
            msg: format!("expected three comma-separated entries, got {}", parts.len()),
        });
    }
    let mut offset = 0usize;
    let mut vals = [Complex::new(0.0, 0.0); 3];
    for (i, part) in parts.iter().enumerate() {
        vals[i] = parse_complex(part).map_err(|e| match e {
            CharacterError::Parse { pos, msg } => CharacterError::Parse {
                pos: offset + pos,
                msg,
            },
            other => other,
        })?;
        offset += part.len() + 1;
    }
    Ok(Character::new(vals[0], vals[1], vals[2]))
}

pub fn fmt_complex(v: Complex) -> String {
    if v.im == 0.0 {
        format!("{}", v.re)
    } else if v.re == 0.0 {
        format!("{}i", v.im)
    } else if v.im < 0.0 {
        format!("{}{}i", v.re, v.im)
    } else {
        format!("{}+{}i", v.re, v.im)
    }
}

impl FromStr for Character {
    type Err = CharacterError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_character(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::close_abs;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn kappa_fixtures() {
        assert!(close_abs(kappa_of(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)), c(-2.0, 0.0), 1e-12));
        assert!(close_abs(
            kappa_of(c(2.0, 0.0), c(0.0, 2.0), c(0.0, -2.0)),
            c(-14.0, 0.0),
            1e-12
        ));
        assert!(close_abs(kappa_of(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)), c(-2.0, 0.0), 1e-12));
    }

    #[test]
    fn action_fixtures() {
        let ch = Character::from_reals(3.0, 3.0, 3.0);
        let s = act_s(&ch);
        assert!(close_abs(s.z, c(6.0, 0.0), 1e-12));
        let cc = act_c(&Character::from_reals(1.0, 2.0, 3.0));
        assert_eq!((cc.x.re, cc.y.re, cc.z.re), (3.0, 1.0, 2.0));
        let ch2 = Character::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
        let back = act_s(&act_s(&ch2));
        assert!(close_abs(back.x, ch2.x, 1e-12));
        assert!(close_abs(back.z, ch2.z, 1e-12));
        // c has order 3
        let thrice = act_c(&act_c(&act_c(&ch2)));
        assert_eq!(thrice, ch2);
    }

    #[test]
    fn sign_change_preserves_kappa() {
        let ch = Character::from_reals(3.0, 3.0, 3.0);
        let f = sign_change(&ch, SignPair::XY);
        assert_eq!((f.x.re, f.y.re, f.z.re), (-3.0, -3.0, 3.0));
        assert!(close_abs(f.kappa(), ch.kappa(), 1e-12));
        let g = sign_change(&Character::new(c(0.0, 0.0), c(5.0, 0.0), c(5.0, 0.0)), SignPair::YZ);
        assert_eq!((g.y.re, g.z.re), (-5.0, -5.0));
    }

    #[test]
    fn matrix_oracle_basics() {
        let ch = Character::new(c(0.3, -1.2), c(2.0, 0.4), c(-0.7, 0.9));
        let mp = matrix_pair(&ch);
        assert!(close_abs(mp.a.trace(), ch.x, 1e-12));
        assert!(close_abs(mp.b.trace(), ch.y, 1e-12));
        assert!(close_abs(mp.a.mul(&mp.b).trace(), ch.z, 1e-12));
        assert!(close_abs(mp.a.det(), c(1.0, 0.0), 1e-12));
        assert!(close_abs(mp.b.det(), c(1.0, 0.0), 1e-12));
    }

    #[test]
    fn trace_word_fixtures() {
        let p = Params::default();
        let ch = Character::from_reals(3.0, 3.0, 3.0);
        let w = parse_word("XY").unwrap();
        assert!(close_abs(trace_word(&ch, &w, &p).unwrap().value, c(3.0, 0.0), 1e-9));
        // tr A²B = x·tr AB − tr B = 3·3 − 3 = 6
        let w = parse_word("XXY").unwrap();
        assert!(close_abs(trace_word(&ch, &w, &p).unwrap().value, c(6.0, 0.0), 1e-9));
        // commutator trace equals κ
        let ch2 = Character::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
        let w = parse_word("XYxy").unwrap();
        assert!(close_abs(trace_word(&ch2, &w, &p).unwrap().value, c(-2.0, 0.0), 1e-9));
    }

    #[test]
    fn primitive_word_fixtures() {
        assert_eq!(primitive_word(&Slope::one()), vec![Letter::X, Letter::Y]);
        assert_eq!(
            primitive_word(&Slope::of(1, 2)),
            vec![Letter::X, Letter::X, Letter::Y]
        );
        assert_eq!(
            primitive_word(&Slope::of(2, 1)),
            vec![Letter::X, Letter::Y, Letter::Y]
        );
        // homology count: slope p/q gives q X's and p Y's
        let w = primitive_word(&Slope::of(2, 5));
        let xs = w.iter().filter(|l| matches!(l, Letter::X)).count();
        let ys = w.iter().filter(|l| matches!(l, Letter::Y)).count();
        assert_eq!((xs, ys), (5, 2));
        // negative slopes use inverse letters
        let w = primitive_word(&Slope::of(-1, 1));
        assert_eq!(w.len(), 2);
        assert!(w.contains(&Letter::YInv));
    }

    #[test]
    fn classify_fixtures() {
        let tol = 1e-9;
        let r = classify_type(&Character::new(c(0.0, 0.0), c(0.0, 0.0), c(5.0, 0.0)), tol);
        assert_eq!(r.dihedral, Trilean::Yes);
        assert_eq!(r.imaginary, Trilean::No);

        let r = classify_type(&Character::from_reals(1.0, 1.0, 1.0), tol);
        assert_eq!(r.su2, Trilean::Yes);
        assert_eq!(r.real, Trilean::Yes);

        let r = classify_type(&Character::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)), tol);
        assert_eq!(r.imaginary, Trilean::Yes);
        assert_eq!(r.dihedral, Trilean::No);
        assert_eq!(r.normalization_word, vec![Generator::C]);

        let r = classify_type(&Character::from_reals(2.0, 2.0, 2.0), tol);
        assert_eq!(r.reducible, Trilean::Yes);
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("3").unwrap(), c(3.0, 0.0));
        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("-2i").unwrap(), c(0.0, -2.0));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("1.5-0.5i").unwrap(), c(1.5, -0.5));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1e-3i").unwrap(), c(0.0, 1e-3));
        assert!(parse_complex("foo").is_err());
        let ch = parse_character("0,1,1i").unwrap();
        assert_eq!((ch.x, ch.y, ch.z), (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)));
    }
}
