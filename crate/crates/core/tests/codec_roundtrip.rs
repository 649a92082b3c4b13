mod common;

use common::{golden_vectors, oracle_pack, payload, to_half};
use kd_bonsai::codec::{
    blob_size, compress_leaf, decompress_leaf, CompressedLeafBlob, CompressionFlags, HalfLeafPoints, LeafEncoding,
};
use kd_bonsai::geometry::{Axis, HalfValue};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn leaf(coords: &[Vec<u16>; 3]) -> HalfLeafPoints {
    let v = |a: usize| coords[a].iter().map(|&b| HalfValue::from_bits(b)).collect();
    HalfLeafPoints::new(v(0), v(1), v(2)).unwrap()
}

fn flag_set(flags: [bool; 3]) -> CompressionFlags {
    Axis::ALL.iter().fold(CompressionFlags::NONE, |f, &a| f.with(a, flags[a.index()]))
}

#[test]
fn exhaustive_counts_flags_and_payloads() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb10b);
    let mut blobs = 0;
    for n in 1..=16usize {
        for pattern in 0..8u8 {
            let flags = [pattern & 1 != 0, pattern & 2 != 0, pattern & 4 != 0];
            for _ in 0..100 {
                let coords = payload(&mut rng, n, flags);
                let points = leaf(&coords);
                let blob = CompressedLeafBlob::pack(&points, flag_set(flags)).unwrap();
                assert_eq!(blob.as_bytes(), oracle_pack(&coords, flags).as_slice(), "n={n} flags={pattern:03b}");
                assert_eq!(blob.len(), blob_size(n, flag_set(flags)));

                let decoded = decompress_leaf(blob.as_bytes(), n).unwrap();
                for a in Axis::ALL {
                    let got: Vec<u16> = decoded.axis(a).iter().map(|h| h.to_bits()).collect();
                    assert_eq!(got, coords[a.index()]);
                }
                let again = CompressedLeafBlob::pack(&decoded, blob.flags()).unwrap();
                assert_eq!(again.as_bytes(), blob.as_bytes());
                blobs += 1;
            }
        }
    }
    assert_eq!(blobs, 16 * 8 * 100);
}

#[test]
fn golden_vectors_are_byte_stable() {
    let vectors = golden_vectors();
    assert_eq!(vectors.len(), 10);
    for g in &vectors {
        let LeafEncoding::Compressed(blob) = compress_leaf(&g.points).unwrap() else {
            panic!("{} should compress", g.name);
        };
        assert_eq!(blob.as_bytes(), g.blob.as_slice(), "{}", g.name);
        let decoded = decompress_leaf(&g.blob, g.points.len()).unwrap();
        for (i, p) in g.points.iter().enumerate() {
            let want = p.coords().map(|c| to_half(c).to_f32().to_bits());
            assert_eq!(decoded.point_f32(i).coords().map(f32::to_bits), want, "{} point {i}", g.name);
        }
    }
}

#[test]
fn two_point_example_by_hand() {
    let g = golden_vectors().into_iter().find(|g| g.name == "two_point").unwrap();
    let decoded = decompress_leaf(&g.blob, 2).unwrap();
    let bits = |a: Axis| decoded.axis(a).iter().map(|h| h.to_bits()).collect::<Vec<_>>();
    // 8.5 = 1.0625·2³, 9.0 = 1.125·2³, -3.25 = -1.625·2¹, -3.5 = -1.75·2¹.
    assert_eq!(bits(Axis::X), [0x4840, 0x4880]);
    assert_eq!(bits(Axis::Y), [0xc280, 0xc300]);
    assert_eq!(bits(Axis::Z), [0x3c00, 0x3e00]);
    assert_eq!(g.blob.len(), 16);
    assert_eq!(g.blob[0], 0b111);
    assert_eq!(g.blob[1], 0x40);
}

#[test]
fn full_leaves_size_against_raw() {
    for g in golden_vectors() {
        match g.name.as_str() {
            "full_shared" => assert_eq!(g.blob.len(), 64),
            "full_unshared" => assert_eq!(g.blob.len(), 96),
            "single_extremes" => assert_eq!(g.blob.len(), 16),
            _ => {}
        }
    }
}

proptest! {
    #[test]
    fn compress_then_decompress_is_half_rounding(
        raw in prop::collection::vec((-65000.0f32..65000.0, -200.0f32..200.0, -1.0f32..1.0), 1..=16)
    ) {
        let points: Vec<_> = raw.iter().map(|&(x, y, z)| kd_bonsai::Point3::new(x, y, z)).collect();
        let LeafEncoding::Compressed(blob) = compress_leaf(&points).unwrap() else {
            panic!("in range");
        };
        let decoded = decompress_leaf(blob.as_bytes(), points.len()).unwrap();
        for (i, p) in points.iter().enumerate() {
            let want = p.coords().map(|c| to_half(c).to_f32());
            prop_assert_eq!(decoded.point_f32(i).coords(), want);
        }
        // Flags are set exactly on the axes whose tuples all agree.
        for a in Axis::ALL {
            let tuples: std::collections::HashSet<u8> = decoded.axis(a).iter().map(|h| h.sign_exponent()).collect();
            prop_assert_eq!(blob.flags().is_set(a), tuples.len() == 1);
        }
    }

    #[test]
    fn malformed_lengths_are_rejected(n in 1usize..=16, cut in 1usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let coords = payload(&mut rng, n, [true, false, true]);
        let bytes = oracle_pack(&coords, [true, false, true]);
        prop_assert!(decompress_leaf(&bytes[..bytes.len() - cut], n).is_err());
        let mut longer = bytes.clone();
        longer.extend_from_slice(&[0; 16]);
        prop_assert!(decompress_leaf(&longer, n).is_err());
    }
}
