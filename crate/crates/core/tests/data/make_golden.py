"""Regenerates golden_blobs.txt from the documented blob layout.

Independent of the Rust code: numpy performs the half rounding and the bit
stream is built as a list of bits. Run from this directory:

    python3 make_golden.py > golden_blobs.txt
"""
import random

import numpy as np


def half_bits(v):
    return int(np.array([v], dtype=np.float32).astype(np.float16).view(np.uint16)[0])


def f32_bits(v):
    return int(np.array([v], dtype=np.float32).view(np.uint32)[0])


def pack(points):
    n = len(points)
    h = [[half_bits(p[a]) for p in points] for a in range(3)]
    tuples = [[b >> 10 for b in h[a]] for a in range(3)]
    flags = [len(set(tuples[a])) == 1 for a in range(3)]
    bits = []

    def put(value, width):
        bits.extend((value >> i) & 1 for i in range(width))

    put(sum(1 << a for a in range(3) if flags[a]), 8)
    for a in range(3):
        for b in h[a]:
            put(b & 0x3FF, 10)
    for a in range(3):
        if flags[a]:
            put(tuples[a][0], 6)
    for a in range(3):
        if not flags[a]:
            for t in tuples[a]:
                put(t, 6)
    while len(bits) % 128:
        bits.append(0)
    out = bytearray()
    for i in range(0, len(bits), 8):
        out.append(sum(bit << k for k, bit in enumerate(bits[i:i + 8])))
    return bytes(out)


def vectors():
    yield "two_point", [(8.5, -3.25, 1.0), (9.0, -3.5, 1.5)]
    yield "no_sharing", [(1.0, -1.0, 0.5), (-2.0, 3.0, 100.0), (0.25, 0.0, -7.0)]
    yield "single_extremes", [(-0.0, 1.0e-5, 65504.0)]
    yield "full_shared", [(8.0 + i * 0.5, 2.0 + i * 0.1, -1.0 - i * 0.06) for i in range(15)]
    yield "full_unshared", [((-1) ** i * (1.5 + i), 0.01 * (i + 1) * 7, -(2.0 ** (i - 7))) for i in range(15)]
    yield "sixteen_mixed", [(3.0 + i * 0.05, (-1) ** i * (i + 1) * 0.3, 40.0 + i) for i in range(16)]
    rng = random.Random(20241015)
    for k in range(4):
        n = rng.randint(1, 16)
        pts = [tuple(float(np.float32(rng.uniform(-120, 120))) for _ in range(3)) for _ in range(n)]
        yield f"random_{k}", pts


print("# name | x y z f32 bit patterns per point, ';' separated | blob hex")
for name, pts in vectors():
    pts = [tuple(float(np.float32(c)) for c in p) for p in pts]
    coords = ";".join(" ".join(f"{f32_bits(c):08x}" for c in p) for p in pts)
    print(f"{name} | {coords} | {pack(pts).hex()}")
