//! Float-format machinery.
//!
//! Points are stored as IEEE-754 single precision. Leaves of the search tree
//! hold them in IEEE-754 half precision instead, and the evaluation path can
//! round them to any narrower sign/exponent/mantissa layout described by a
//! [`ReducedFormat`]. Conversions round to nearest, ties to even.
//!
//! For half precision the worst-case rounding error of a stored value depends
//! only on its exponent field, which lets the search precompute a 32-entry
//! table of `2·max(δ)` and `max(δ)²` (see [`ErrorTable`]).

use std::fmt;
use std::ops::Index;

use thiserror::Error;

/// Errors raised while converting between float formats.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FormatError {
    #[error("value is NaN")]
    NaN,
    #[error("value is infinite")]
    Infinite,
    #[error("value {0} overflows the target format")]
    Overflow(f32),
    #[error("invalid format: {0}")]
    InvalidFormat(&'static str),
    #[error("exponent field {0} is reserved for Inf/NaN")]
    ReservedExponent(u32),
}

/// One coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// A 3D point in meters, single precision.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[repr(C)]
pub struct Point3 {
    pub x: f32,
    pub y: f32,
    pub z: f32,
}

impl Point3 {
    pub const fn new(x: f32, y: f32, z: f32) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn coords(&self) -> [f32; 3] {
        [self.x, self.y, self.z]
    }

    /// Squared euclidean distance, evaluated in single precision as
    /// `((dx² + dy²) + dz²)`. Every full-precision classification in the
    /// crate goes through this function so that all paths agree bit for bit.
    #[inline]
    pub fn dist2(&self, other: &Point3) -> f32 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    pub fn to_le_bytes(&self) -> [u8; 12] {
        let mut out = [0u8; 12];
        out[0..4].copy_from_slice(&self.x.to_le_bytes());
        out[4..8].copy_from_slice(&self.y.to_le_bytes());
        out[8..12].copy_from_slice(&self.z.to_le_bytes());
        out
    }

    pub fn from_le_bytes(bytes: &[u8; 12]) -> Self {
        let f = |i: usize| f32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
        Point3::new(f(0), f(4), f(8))
    }
}

impl Index<Axis> for Point3 {
    type Output = f32;

    #[inline]
    fn index(&self, axis: Axis) -> &f32 {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }
}

impl From<[f32; 3]> for Point3 {
    fn from(c: [f32; 3]) -> Self {
        Point3::new(c[0], c[1], c[2])
    }
}

/// A binary floating-point layout with one sign bit, `exponent_bits` of biased
/// exponent and `mantissa_bits` of stored fraction.
///
/// Only layouts that widen losslessly into single precision are accepted
/// (`exponent_bits ≤ 8`, `mantissa_bits ≤ 23`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReducedFormat {
    exponent_bits: u32,
    mantissa_bits: u32,
}

impl ReducedFormat {
    pub const BINARY32: ReducedFormat = ReducedFormat { exponent_bits: 8, mantissa_bits: 23 };
    pub const HALF: ReducedFormat = ReducedFormat { exponent_bits: 5, mantissa_bits: 10 };
    pub const BFLOAT16: ReducedFormat = ReducedFormat { exponent_bits: 8, mantissa_bits: 7 };
    pub const CUSTOM24: ReducedFormat = ReducedFormat { exponent_bits: 5, mantissa_bits: 18 };

    pub fn new(exponent_bits: u32, mantissa_bits: u32) -> Result<Self, FormatError> {
        if exponent_bits < 2 {
            return Err(FormatError::InvalidFormat("exponent_bits must be at least 2"));
        }
        if mantissa_bits < 1 {
            return Err(FormatError::InvalidFormat("mantissa_bits must be at least 1"));
        }
        if 1 + exponent_bits + mantissa_bits > 32 {
            return Err(FormatError::InvalidFormat("format is wider than 32 bits"));
        }
        if exponent_bits > 8 || mantissa_bits > 23 {
            return Err(FormatError::InvalidFormat("format does not widen exactly into binary32"));
        }
        Ok(ReducedFormat { exponent_bits, mantissa_bits })
    }

    pub fn exponent_bits(&self) -> u32 {
        self.exponent_bits
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    pub fn total_bits(&self) -> u32 {
        1 + self.exponent_bits + self.mantissa_bits
    }

    pub fn bias(&self) -> i32 {
        (1 << (self.exponent_bits - 1)) - 1
    }

    /// Exponent field reserved for Inf/NaN.
    pub fn max_exponent_field(&self) -> u32 {
        (1 << self.exponent_bits) - 1
    }

    fn min_normal_exponent(&self) -> i32 {
        1 - self.bias()
    }

    pub fn exponent_field(&self, bits: u32) -> u32 {
        (bits >> self.mantissa_bits) & self.max_exponent_field()
    }

    pub fn mantissa_field(&self, bits: u32) -> u32 {
        bits & ((1 << self.mantissa_bits) - 1)
    }

    pub fn sign_bit(&self, bits: u32) -> u32 {
        (bits >> (self.exponent_bits + self.mantissa_bits)) & 1
    }

    /// Largest finite magnitude.
    pub fn max_finite(&self) -> f32 {
        let field = self.max_exponent_field() - 1;
        self.widen((field << self.mantissa_bits) | ((1 << self.mantissa_bits) - 1))
    }

    /// Rounds `v` to this format (nearest, ties to even) and returns the bit
    /// pattern, right-aligned in a `u32`.
    pub fn to_reduced(&self, v: f32) -> Result<u32, FormatError> {
        if v.is_nan() {
            return Err(FormatError::NaN);
        }
        if v.is_infinite() {
            return Err(FormatError::Infinite);
        }
        let bits = v.to_bits();
        let sign = bits >> 31;
        let exp_field = (bits >> 23) & 0xff;
        let frac = bits & 0x7f_ffff;
        let sign_shift = self.exponent_bits + self.mantissa_bits;

        // v = significand · 2^scale, significand an integer below 2^24.
        let (significand, scale) = if exp_field == 0 {
            (frac as u64, -149i32)
        } else {
            ((frac | 0x80_0000) as u64, exp_field as i32 - 150)
        };
        if significand == 0 {
            return Ok(sign << sign_shift);
        }

        let leading = 63 - significand.leading_zeros() as i32 + scale;
        let target_exp = leading.max(self.min_normal_exponent());
        let quantum_exp = target_exp - self.mantissa_bits as i32;
        let shift = quantum_exp - scale;

        // Number of target-format quanta, rounded to nearest even.
        let quanta = if shift <= 0 {
            significand << (-shift) as u32
        } else if shift > 40 {
            0
        } else {
            let shift = shift as u32;
            let kept = significand >> shift;
            let rem = significand & ((1u64 << shift) - 1);
            let half = 1u64 << (shift - 1);
            if rem > half || (rem == half && kept & 1 == 1) {
                kept + 1
            } else {
                kept
            }
        };

        // A mantissa carry lands naturally in the exponent field.
        let magnitude =
            (((target_exp - self.min_normal_exponent()) as u64) << self.mantissa_bits) + quanta;
        if (magnitude >> self.mantissa_bits) >= self.max_exponent_field() as u64 {
            return Err(FormatError::Overflow(v));
        }
        Ok((sign << sign_shift) | magnitude as u32)
    }

    /// Widens a finite bit pattern of this format to single precision. The
    /// conversion is exact.
    pub fn widen(&self, bits: u32) -> f32 {
        let field = self.exponent_field(bits);
        let mantissa = self.mantissa_field(bits) as f64;
        let m = self.mantissa_bits as i32;
        let magnitude = if field == 0 {
            mantissa * 2f64.powi(self.min_normal_exponent() - m)
        } else if field == self.max_exponent_field() {
            if mantissa == 0.0 {
                f64::INFINITY
            } else {
                f64::NAN
            }
        } else {
            (mantissa + 2f64.powi(m)) * 2f64.powi(field as i32 - self.bias() - m)
        };
        let value = if self.sign_bit(bits) == 1 { -magnitude } else { magnitude };
        value as f32
    }

    /// Round trip through this format.
    pub fn quantize(&self, v: f32) -> Result<f32, FormatError> {
        self.to_reduced(v).map(|bits| self.widen(bits))
    }
}

impl fmt::Display for ReducedFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(1,{},{})", self.exponent_bits, self.mantissa_bits)
    }
}

/// An IEEE-754 binary16 bit pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(transparent)]
pub struct HalfValue(pub u16);

impl HalfValue {
    pub const ZERO: HalfValue = HalfValue(0);

    /// Values at or above this magnitude round to infinity in half precision.
    pub const OVERFLOW_THRESHOLD: f32 = 65520.0;

    pub fn from_f32(v: f32) -> Result<Self, FormatError> {
        ReducedFormat::HALF.to_reduced(v).map(|b| HalfValue(b as u16))
    }

    #[inline]
    pub fn to_f32(self) -> f32 {
        widen_half(self.0)
    }

    pub fn from_bits(bits: u16) -> Self {
        HalfValue(bits)
    }

    pub fn to_bits(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn sign(self) -> u16 {
        self.0 >> 15
    }

    #[inline]
    pub fn exponent_field(self) -> u16 {
        (self.0 >> 10) & 0x1f
    }

    #[inline]
    pub fn mantissa_field(self) -> u16 {
        self.0 & 0x3ff
    }

    /// The 6-bit `⟨sign, exponent⟩` tuple that leaf compression shares.
    #[inline]
    pub fn sign_exponent(self) -> u8 {
        (self.0 >> 10) as u8
    }

    pub fn from_parts(sign_exponent: u8, mantissa: u16) -> Self {
        HalfValue(((sign_exponent as u16 & 0x3f) << 10) | (mantissa & 0x3ff))
    }

    pub fn is_finite(self) -> bool {
        self.exponent_field() != 0x1f
    }
}

/// Half to single widening by direct bit manipulation; exact for every
/// pattern.
#[inline]
fn widen_half(h: u16) -> f32 {
    let sign = ((h & 0x8000) as u32) << 16;
    let exp = ((h >> 10) & 0x1f) as u32;
    let mant = (h & 0x3ff) as u32;
    let bits = match exp {
        0 if mant == 0 => sign,
        0 => {
            // Subnormal: renormalize.
            let shift = mant.leading_zeros() - 21;
            let mant = (mant << shift) & 0x3ff;
            sign | ((113 - shift) << 23) | (mant << 13)
        }
        0x1f => sign | 0x7f80_0000 | (mant << 13),
        _ => sign | ((exp + 112) << 23) | (mant << 13),
    };
    f32::from_bits(bits)
}

const HALF_BIAS: i32 = 15;

/// Worst-case error of rounding a single-precision value to a half-precision
/// value whose exponent field is `exponent_field`.
///
/// Normal values lose at most half a unit in the last place, `2^(e-15)·2^-11`.
/// Exponent field 0 (subnormals and zero) uses the subnormal half-ULP `2^-25`.
pub fn max_rounding_error(exponent_field: u32) -> Result<f32, FormatError> {
    match exponent_field {
        0 => Ok(2f32.powi(-25)),
        1..=30 => Ok(2f32.powi(exponent_field as i32 - HALF_BIAS - 11)),
        e => Err(FormatError::ReservedExponent(e)),
    }
}

/// The 32-line lookup table used by the approximate squared-difference unit.
///
/// Entry 31 (Inf/NaN) holds infinities, so any accidental lookup makes the
/// classification inconclusive rather than wrong.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    two_delta: [f32; 32],
    delta_sq: [f32; 32],
}

impl ErrorTable {
    pub fn half() -> Self {
        let mut two_delta = [f32::INFINITY; 32];
        let mut delta_sq = [f32::INFINITY; 32];
        for e in 0..31u32 {
            let d = max_rounding_error(e).expect("exponent in range");
            two_delta[e as usize] = 2.0 * d;
            delta_sq[e as usize] = d * d;
        }
        ErrorTable { two_delta, delta_sq }
    }

    #[inline]
    pub fn two_delta(&self, exponent_field: u16) -> f32 {
        self.two_delta[exponent_field as usize & 0x1f]
    }

    #[inline]
    pub fn delta_sq(&self, exponent_field: u16) -> f32 {
        self.delta_sq[exponent_field as usize & 0x1f]
    }
}

impl Default for ErrorTable {
    fn default() -> Self {
        ErrorTable::half()
    }
}
