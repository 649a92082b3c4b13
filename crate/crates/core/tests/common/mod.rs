//! Reference implementations shared by the integration tests. None of them
//! call into the code they are used to check.

#![allow(dead_code)]

use kd_bonsai::geometry::{ErrorTable, HalfValue, Point3};
use kd_bonsai::search::{sq_diff_with_error, ShellConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Packs half coordinates into the blob layout using a plain list of bits.
/// `flags[a]` requests a shared tuple for axis `a`.
pub fn oracle_pack(coords: &[Vec<u16>; 3], flags: [bool; 3]) -> Vec<u8> {
    let n = coords[0].len();
    let mut bits: Vec<bool> = Vec::new();
    let mut put = |v: u32, width: u32| {
        for i in 0..width {
            bits.push((v >> i) & 1 == 1);
        }
    };
    let header = flags.iter().enumerate().map(|(a, &f)| (f as u32) << a).sum();
    put(header, 8);
    for axis in coords {
        for &h in axis {
            put((h & 0x3ff) as u32, 10);
        }
    }
    for (a, axis) in coords.iter().enumerate() {
        if flags[a] {
            put((axis[0] >> 10) as u32, 6);
        }
    }
    for (a, axis) in coords.iter().enumerate() {
        if !flags[a] {
            for &h in axis {
                put((h >> 10) as u32, 6);
            }
        }
    }
    while bits.len() % 128 != 0 {
        bits.push(false);
    }
    assert!(n >= 1);
    bits.chunks(8).map(|c| c.iter().enumerate().map(|(i, &b)| (b as u8) << i).sum()).collect()
}

/// Indices of all points with `dist2(q, p) <= r²`, by linear scan with the
/// same single-precision arithmetic order as the library.
pub fn brute_force(points: &[Point3], q: &Point3, r: f32) -> Vec<u32> {
    let r2 = r * r;
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            let dx = q.x - p.x;
            let dy = q.y - p.y;
            let dz = q.z - p.z;
            dx * dx + dy * dy + dz * dz <= r2
        })
        .map(|(i, _)| i as u32)
        .collect()
}

pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of the `dist2 <= r²` graph over all pairs, each
/// sorted, ordered by smallest member.
pub fn brute_components(points: &[Point3], r: f32) -> Vec<Vec<u32>> {
    let n = points.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if brute_force(&points[j..=j], &points[i], r).len() == 1 {
                uf.union(i, j);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<u32>> = Default::default();
    for i in 0..n {
        let root = uf.find(i);
        groups.entry(root).or_default().push(i as u32);
    }
    let mut comps: Vec<Vec<u32>> = groups.into_values().collect();
    comps.sort_by_key(|c| c[0]);
    comps
}

pub fn parse_hex(s: &str) -> Vec<u8> {
    (0..s.len()).step_by(2).map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap()).collect()
}

/// One line of `tests/data/golden_blobs.txt`.
pub struct Golden {
    pub name: String,
    pub points: Vec<Point3>,
    pub blob: Vec<u8>,
}

pub fn golden_vectors() -> Vec<Golden> {
    let text = include_str!("../data/golden_blobs.txt");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|line| {
            let parts: Vec<&str> = line.split('|').map(str::trim).collect();
            let points = parts[1]
                .split(';')
                .map(|p| {
                    let c: Vec<f32> =
                        p.split_whitespace().map(|h| f32::from_bits(u32::from_str_radix(h, 16).unwrap())).collect();
                    Point3::new(c[0], c[1], c[2])
                })
                .collect();
            Golden { name: parts[0].to_string(), points, blob: parse_hex(parts[2]) }
        })
        .collect()
}

/// Half pattern of a finite value, via the `half` crate.
pub fn half_bits(v: f32) -> u16 {
    half::f16::from_f32(v).to_bits()
}

pub fn to_half(v: f32) -> HalfValue {
    HalfValue::from_bits(half_bits(v))
}

/// Checks `|(a − b')² − (a − b)²| ≤ err · safety` in double precision over
/// `n` random pairs in [-120, 120] and returns the number of violations.
pub fn error_bound_violations(n: usize, seed: u64) -> usize {
    let table = ErrorTable::half();
    let safety = ShellConfig::DEFAULT_SAFETY_FACTOR as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for i in 0..n {
        let a: f32 = rng.random_range(-120.0..=120.0);
        let b: f32 = match i % 3 {
            0 => rng.random_range(-120.0..=120.0),
            // Near `a`, where the difference is small and relative error large.
            1 => a + rng.random_range(-2.0f32..2.0),
            _ => rng.random_range(-1.0e-3f32..1.0e-3),
        };
        let b = b.clamp(-120.0, 120.0);
        let bh = to_half(b);
        let (_, err) = sq_diff_with_error(a, bh, &table);
        let (a, b, b2) = (a as f64, b as f64, bh.to_f32() as f64);
        let exact = ((a - b2) * (a - b2) - (a - b) * (a - b)).abs();
        // The double-precision evaluation is itself rounded; demanding a
        // margin of 2⁻⁴⁰ relative keeps the check on the safe side.
        if exact * (1.0 + 2f64.powi(-40)) > err as f64 * safety {
            bad += 1;
        }
    }
    bad
}

pub fn random_tuple(rng: &mut ChaCha8Rng) -> u16 {
    // Sign bit plus an exponent field other than 31.
    (rng.random_range(0..2u16) << 5) | rng.random_range(0..31u16)
}

/// Half coordinates for `n` points whose flagged axes share one tuple.
pub fn payload(rng: &mut ChaCha8Rng, n: usize, flags: [bool; 3]) -> [Vec<u16>; 3] {
    std::array::from_fn(|a| {
        let shared = random_tuple(rng);
        (0..n)
            .map(|_| {
                let t = if flags[a] { shared } else { random_tuple(rng) };
                (t << 10) | rng.random_range(0..1024u16)
            })
            .collect()
    })
}
