//! Leaf compression.
//!
//! A leaf's points are rounded to half precision and packed into a blob that
//! stores the 6-bit `⟨sign, exponent⟩` tuple of a coordinate only once when
//! every point of the leaf agrees on it. The blob layout is frozen:
//!
//! ```text
//! byte 0        header: bit0 = cX, bit1 = cY, bit2 = cZ, bits 3..7 zero
//! bit stream    (starts at byte 1, fields appended LSB-first)
//!               n × 10-bit mantissas of x, then of y, then of z
//!               one 6-bit tuple per compressed coordinate, in x, y, z order
//!               n × 6-bit tuples per uncompressed coordinate, in x, y, z order
//! padding       zero bits up to a multiple of 16 bytes
//! ```
//!
//! A tuple is the top six bits of the half pattern (`sign << 5 | exponent`).
//! The point count is not stored; the caller keeps it next to the blob.

use thiserror::Error;

use crate::geometry::{Axis, FormatError, HalfValue, Point3};

/// Maximum number of points one blob can hold.
pub const MAX_LEAF_POINTS: usize = 16;

/// Blobs are moved in 128-bit slices.
pub const SLICE_BYTES: usize = 16;

const HEADER_BITS: usize = 8;
const MANTISSA_BITS: u32 = 10;
const TUPLE_BITS: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("leaf holds {0} points, expected 1..=16")]
    BadCount(usize),
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("reserved header bits set: {0:#04x}")]
    ReservedHeaderBits(u8),
    #[error("blob is {actual} bytes, expected {expected} for this count and flags")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("padding bits are not zero")]
    NonZeroPadding,
    #[error("decoded an Inf/NaN exponent on {axis} at point {index}")]
    ReservedExponent { axis: Axis, index: usize },
    #[error("flag set on {0} but the points do not share sign and exponent")]
    FlagNotShared(Axis),
    #[error("coordinate arrays have different lengths")]
    RaggedCoordinates,
}

/// The three per-coordinate compression flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CompressionFlags(u8);

impl CompressionFlags {
    pub const NONE: CompressionFlags = CompressionFlags(0);
    pub const ALL: CompressionFlags = CompressionFlags(0b111);

    pub fn from_bits(bits: u8) -> Option<Self> {
        (bits & !0b111 == 0).then_some(CompressionFlags(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn is_set(self, axis: Axis) -> bool {
        self.0 & (1 << axis.index()) != 0
    }

    pub fn with(self, axis: Axis, on: bool) -> Self {
        if on {
            CompressionFlags(self.0 | (1 << axis.index()))
        } else {
            CompressionFlags(self.0 & !(1 << axis.index()))
        }
    }

    /// Number of compressed coordinates.
    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn any(self) -> bool {
        self.0 != 0
    }
}

/// Length in bytes of a blob holding `count` points with the given flags.
pub fn blob_size(count: usize, flags: CompressionFlags) -> usize {
    let k = flags.count();
    let bits = HEADER_BITS
        + (MANTISSA_BITS as usize) * 3 * count
        + (TUPLE_BITS as usize) * k
        + (TUPLE_BITS as usize) * count * (3 - k);
    bits.div_ceil(8 * SLICE_BYTES) * SLICE_BYTES
}

/// A leaf's points in half precision, one array per coordinate (the staging
/// buffer the compressor reads from and the decompressor writes to).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HalfLeafPoints {
    coords: [Vec<HalfValue>; 3],
}

impl HalfLeafPoints {
    pub fn new(x: Vec<HalfValue>, y: Vec<HalfValue>, z: Vec<HalfValue>) -> Result<Self, CodecError> {
        if x.len() != y.len() || y.len() != z.len() {
            return Err(CodecError::RaggedCoordinates);
        }
        if x.is_empty() || x.len() > MAX_LEAF_POINTS {
            return Err(CodecError::BadCount(x.len()));
        }
        let coords = [x, y, z];
        for axis in Axis::ALL {
            if let Some(index) = coords[axis.index()].iter().position(|h| !h.is_finite()) {
                return Err(CodecError::ReservedExponent { axis, index });
            }
        }
        Ok(HalfLeafPoints { coords })
    }

    /// Rounds each coordinate to half precision.
    pub fn from_points(points: &[Point3]) -> Result<Self, LoadError> {
        if points.is_empty() || points.len() > MAX_LEAF_POINTS {
            return Err(LoadError::Codec(CodecError::BadCount(points.len())));
        }
        let mut coords: [Vec<HalfValue>; 3] = Default::default();
        for (index, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(LoadError::Codec(CodecError::NonFinite { index }));
            }
            for axis in Axis::ALL {
                let h = HalfValue::from_f32(p[axis]).map_err(|e| match e {
                    FormatError::Overflow(_) => LoadError::Overflow { index, axis },
                    _ => LoadError::Codec(CodecError::NonFinite { index }),
                })?;
                coords[axis.index()].push(h);
            }
        }
        Ok(HalfLeafPoints { coords })
    }

    pub fn len(&self) -> usize {
        self.coords[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords[0].is_empty()
    }

    pub fn axis(&self, axis: Axis) -> &[HalfValue] {
        &self.coords[axis.index()]
    }

    pub fn point(&self, i: usize) -> [HalfValue; 3] {
        [self.coords[0][i], self.coords[1][i], self.coords[2][i]]
    }

    /// Widened single-precision view of point `i`.
    pub fn point_f32(&self, i: usize) -> Point3 {
        let [x, y, z] = self.point(i);
        Point3::new(x.to_f32(), y.to_f32(), z.to_f32())
    }

    /// Flags for every coordinate whose tuples agree across all points.
    pub fn sharing_flags(&self) -> CompressionFlags {
        Axis::ALL.iter().fold(CompressionFlags::NONE, |flags, &axis| {
            let values = self.axis(axis);
            let first = values[0].sign_exponent();
            flags.with(axis, values.iter().all(|h| h.sign_exponent() == first))
        })
    }
}

/// Why a set of points could not be loaded into the half-precision buffer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("point {index} overflows half precision on {axis}")]
    Overflow { index: usize, axis: Axis },
}

/// A compressed leaf, always a whole number of 16-byte slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedLeafBlob {
    bytes: Vec<u8>,
}

impl CompressedLeafBlob {
    /// Packs `points` using exactly `flags`. A flag may only be set on a
    /// coordinate whose tuples are shared; clearing a shareable flag is
    /// allowed and simply stores the tuples per point.
    pub fn pack(points: &HalfLeafPoints, flags: CompressionFlags) -> Result<Self, CodecError> {
        let n = points.len();
        if n == 0 || n > MAX_LEAF_POINTS {
            return Err(CodecError::BadCount(n));
        }
        let shared = points.sharing_flags();
        for axis in Axis::ALL {
            if flags.is_set(axis) && !shared.is_set(axis) {
                return Err(CodecError::FlagNotShared(axis));
            }
        }

        let mut w = BitWriter::with_capacity(blob_size(n, flags));
        w.write(flags.bits() as u32, HEADER_BITS as u32);
        for axis in Axis::ALL {
            for h in points.axis(axis) {
                w.write(h.mantissa_field() as u32, MANTISSA_BITS);
            }
        }
        for axis in Axis::ALL.into_iter().filter(|&a| flags.is_set(a)) {
            w.write(points.axis(axis)[0].sign_exponent() as u32, TUPLE_BITS);
        }
        for axis in Axis::ALL.into_iter().filter(|&a| !flags.is_set(a)) {
            for h in points.axis(axis) {
                w.write(h.sign_exponent() as u32, TUPLE_BITS);
            }
        }
        let bytes = w.finish_padded(SLICE_BYTES);
        debug_assert_eq!(bytes.len(), blob_size(n, flags));
        Ok(CompressedLeafBlob { bytes })
    }

    /// Wraps raw bytes after checking header and length against `count`.
    pub fn from_bytes(bytes: Vec<u8>, count: usize) -> Result<Self, CodecError> {
        validate(&bytes, count)?;
        Ok(CompressedLeafBlob { bytes })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn flags(&self) -> CompressionFlags {
        CompressionFlags(self.bytes[0] & 0b111)
    }

    pub fn slices(&self) -> usize {
        self.bytes.len() / SLICE_BYTES
    }
}

/// Outcome of compressing one leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeafEncoding {
    Compressed(CompressedLeafBlob),
    /// Some coordinate does not fit half precision; the leaf must be stored
    /// as raw single-precision points.
    Uncompressible,
}

/// Converts a leaf to half precision and compresses every coordinate whose
/// sign and exponent are shared by all points.
pub fn compress_leaf(points: &[Point3]) -> Result<LeafEncoding, CodecError> {
    match HalfLeafPoints::from_points(points) {
        Ok(half) => {
            let flags = half.sharing_flags();
            CompressedLeafBlob::pack(&half, flags).map(LeafEncoding::Compressed)
        }
        Err(LoadError::Overflow { .. }) => Ok(LeafEncoding::Uncompressible),
        Err(LoadError::Codec(e)) => Err(e),
    }
}

fn validate(blob: &[u8], count: usize) -> Result<CompressionFlags, CodecError> {
    if count == 0 || count > MAX_LEAF_POINTS {
        return Err(CodecError::BadCount(count));
    }
    let header = *blob.first().ok_or(CodecError::LengthMismatch {
        expected: SLICE_BYTES,
        actual: 0,
    })?;
    let flags = CompressionFlags::from_bits(header).ok_or(CodecError::ReservedHeaderBits(header))?;
    let expected = blob_size(count, flags);
    if blob.len() != expected {
        return Err(CodecError::LengthMismatch { expected, actual: blob.len() });
    }
    Ok(flags)
}

/// Per-coordinate half values of one leaf in fixed-size lanes.
pub type LeafLanes = [[HalfValue; MAX_LEAF_POINTS]; 3];

/// Restores the half-precision points of a blob holding `count` points.
pub fn decompress_leaf(blob: &[u8], count: usize) -> Result<HalfLeafPoints, CodecError> {
    let mut lanes = [[HalfValue::ZERO; MAX_LEAF_POINTS]; 3];
    decompress_into(blob, count, &mut lanes)?;
    let coords = lanes.map(|lane| lane[..count].to_vec());
    Ok(HalfLeafPoints { coords })
}

/// Like [`decompress_leaf`] but writes into caller-owned lanes; entries past
/// `count` are left untouched. Returns the header flags.
pub fn decompress_into(blob: &[u8], count: usize, lanes: &mut LeafLanes) -> Result<CompressionFlags, CodecError> {
    let flags = validate(blob, count)?;
    let mut r = BitReader::new(blob);
    r.skip(HEADER_BITS as u32);

    let mut mantissas = [[0u16; MAX_LEAF_POINTS]; 3];
    for axis in Axis::ALL {
        for m in mantissas[axis.index()].iter_mut().take(count) {
            *m = r.read(MANTISSA_BITS) as u16;
        }
    }
    let mut tuples = [[0u8; MAX_LEAF_POINTS]; 3];
    for axis in Axis::ALL.into_iter().filter(|&a| flags.is_set(a)) {
        let shared = r.read(TUPLE_BITS) as u8;
        tuples[axis.index()][..count].fill(shared);
    }
    for axis in Axis::ALL.into_iter().filter(|&a| !flags.is_set(a)) {
        for t in tuples[axis.index()].iter_mut().take(count) {
            *t = r.read(TUPLE_BITS) as u8;
        }
    }
    if !r.rest_is_zero() {
        return Err(CodecError::NonZeroPadding);
    }

    for axis in Axis::ALL {
        let a = axis.index();
        for index in 0..count {
            let h = HalfValue::from_parts(tuples[a][index], mantissas[a][index]);
            if !h.is_finite() {
                return Err(CodecError::ReservedExponent { axis, index });
            }
            lanes[a][index] = h;
        }
    }
    Ok(flags)
}

/// Appends fields LSB-first into a little-endian byte stream.
struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    fn with_capacity(cap: usize) -> Self {
        BitWriter { bytes: Vec::with_capacity(cap), acc: 0, filled: 0 }
    }

    fn write(&mut self, value: u32, width: u32) {
        debug_assert!(width <= 32 && (width == 32 || value >> width == 0));
        self.acc |= (value as u64) << self.filled;
        self.filled += width;
        while self.filled >= 8 {
            self.bytes.push(self.acc as u8);
            self.acc >>= 8;
            self.filled -= 8;
        }
    }

    fn finish_padded(mut self, multiple: usize) -> Vec<u8> {
        if self.filled > 0 {
            self.bytes.push(self.acc as u8);
        }
        let len = self.bytes.len().div_ceil(multiple) * multiple;
        self.bytes.resize(len, 0);
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    fn skip(&mut self, bits: u32) {
        self.pos += bits as usize;
    }

    fn read(&mut self, width: u32) -> u32 {
        let mut value = 0u64;
        let mut got = 0u32;
        while got < width {
            let byte = self.bytes[self.pos / 8] as u64;
            let offset = (self.pos % 8) as u32;
            let take = (8 - offset).min(width - got);
            let chunk = (byte >> offset) & ((1 << take) - 1);
            value |= chunk << got;
            got += take;
            self.pos += take as usize;
        }
        value as u32
    }

    fn rest_is_zero(&self) -> bool {
        let byte = self.pos / 8;
        let offset = self.pos % 8;
        if offset != 0 && self.bytes[byte] >> offset != 0 {
            return false;
        }
        let next = if offset == 0 { byte } else { byte + 1 };
        self.bytes[next.min(self.bytes.len())..].iter().all(|&b| b == 0)
    }
}
