//! Exact score arithmetic.
//!
//! Alignment scores are carried as integers scaled by a fixed denominator
//! ([`SCALE`]) so that results are platform-independent and `w/2` is exact.
//! A dedicated negative-infinity sentinel absorbs in addition and is
//! dominated by every finite score.

use std::fmt;
use std::ops::{Add, AddAssign, Neg};

use thiserror::Error;

/// Fixed denominator: scores are stored as multiples of 1/10000.
pub const SCALE: i64 = 10_000;

/// An alignment score in exact fixed-point arithmetic.
///
/// Ordering puts [`Score::NEG_INF`] below every finite score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(i64);

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ScoreParseError {
    #[error("not a decimal number: {0:?}")]
    Malformed(String),
    #[error("too many decimal places (at most 4 supported): {0:?}")]
    TooPrecise(String),
    #[error("score out of range: {0:?}")]
    OutOfRange(String),
}

impl Score {
    /// The absorbing minus-infinity sentinel.
    pub const NEG_INF: Score = Score(i64::MIN);
    pub const ZERO: Score = Score(0);

    /// Score from a whole number of score units.
    pub fn from_int(v: i64) -> Score {
        Score(v * SCALE)
    }

    /// Raw scaled value (multiples of 1/SCALE). Panics on the sentinel.
    pub fn raw(self) -> i64 {
        assert!(self.is_finite(), "raw() on -inf");
        self.0
    }

    pub fn from_raw(raw: i64) -> Score {
        assert!(raw != i64::MIN, "raw value collides with sentinel");
        Score(raw)
    }

    pub fn is_finite(self) -> bool {
        self.0 != i64::MIN
    }

    /// Exact halving. `raw` must be even; parsers enforce this for the
    /// junction weight so that `w/2` never truncates.
    pub fn half(self) -> Score {
        assert!(self.is_finite(), "half() on -inf");
        debug_assert!(self.0 % 2 == 0, "half() would truncate");
        Score(self.0 / 2)
    }

    /// Multiply by a nucleotide count (for per-nucleotide gap costs).
    pub fn times(self, n: usize) -> Score {
        assert!(self.is_finite(), "times() on -inf");
        Score(self.0 * n as i64)
    }

    /// Parse a decimal literal such as `-1`, `2.22` or `0.5`.
    pub fn parse(text: &str) -> Result<Score, ScoreParseError> {
        let s = text.trim();
        let (neg, digits) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(ScoreParseError::Malformed(text.to_string()));
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(ScoreParseError::Malformed(text.to_string()));
        }
        if frac_part.len() > 4 {
            return Err(ScoreParseError::TooPrecise(text.to_string()));
        }
        let whole: i64 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| ScoreParseError::OutOfRange(text.to_string()))?
        };
        let mut frac: i64 = 0;
        let mut unit = SCALE;
        for c in frac_part.chars() {
            unit /= 10;
            frac += (c as i64 - '0' as i64) * unit;
        }
        let magnitude = whole
            .checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(|| ScoreParseError::OutOfRange(text.to_string()))?;
        Ok(Score(if neg { -magnitude } else { magnitude }))
    }
}

impl Add for Score {
    type Output = Score;
    fn add(self, rhs: Score) -> Score {
        if !self.is_finite() || !rhs.is_finite() {
            Score::NEG_INF
        } else {
            Score(self.0 + rhs.0)
        }
    }
}

impl AddAssign for Score {
    fn add_assign(&mut self, rhs: Score) {
        *self = *self + rhs;
    }
}

impl Neg for Score {
    type Output = Score;
    fn neg(self) -> Score {
        assert!(self.is_finite(), "negating -inf");
        Score(-self.0)
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.is_finite() {
            return write!(f, "-inf");
        }
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / SCALE as u64;
        let mut frac = abs % SCALE as u64;
        if frac == 0 {
            return write!(f, "{sign}{whole}");
        }
        let mut digits = 4;
        while frac.is_multiple_of(10) {
            frac /= 10;
            digits -= 1;
        }
        write!(f, "{sign}{whole}.{frac:0width$}", width = digits)
    }
}
