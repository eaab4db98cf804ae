#!/usr/bin/env python3
"""Regenerates the bundled 8x8 toy clip under data/toy/.

The clip is a bright square sliding over a gradient background, with a
synthetic event stream along its path and a quiet lower-right corner (so the
difficulty mask has both easy and hard pixels). The voxel-grid golden is
computed here, independently of the C++ implementation: a per-pixel gather
of tent weights in float64, hot-pixel normalization by the nearest-rank 98th
percentile, cast to float32 on write.
"""

import math
import random
import struct
from pathlib import Path

H = W = 8
M = 7
OUT = Path(__file__).resolve().parent.parent / "data" / "toy"


def frame_pixels(square_x, square_y):
    rows = []
    for y in range(H):
        row = []
        for x in range(W):
            r = int(255 * x / (W - 1))
            g = int(255 * y / (H - 1))
            b = 64
            if square_x <= x < square_x + 3 and square_y <= y < square_y + 3:
                r, g, b = 250, 240, 80
            row.append((r, g, b))
        rows.append(row)
    return rows


def write_ppm(path, rows):
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (W, H))
        for row in rows:
            for r, g, b in row:
                fh.write(bytes((r, g, b)))


def make_events():
    rng = random.Random(977)
    records = []
    # Edge events along the square's slide from (1,1) to (3,2).
    for step in range(60):
        t = (step + 0.5) / 60.0
        cx = 1.0 + 2.0 * t
        cy = 1.0 + 1.0 * t
        for _ in range(3):
            x = min(W - 2, max(0, int(cx + rng.choice([0, 1, 2, 3]))))
            y = min(H - 3, max(0, int(cy + rng.choice([0, 1, 2]))))
            pol = 1 if rng.random() < 0.6 else -1
            records.append((t, x, y, pol))
    # A couple of isolated noise events away from the path (still upper-left).
    for t, x, y, pol in [(0.15, 0, 5, -1), (0.4, 5, 0, 1), (0.85, 1, 4, -1)]:
        records.append((t, x, y, pol))
    records.sort(key=lambda r: r[0])
    return records


def write_events(path, records):
    with open(path, "w") as fh:
        fh.write("%d %d 0 1\n" % (H, W))
        for t, x, y, pol in records:
            fh.write("%.17g %d %d %d\n" % (t, x, y, pol))


def voxelize_golden(records):
    bins = [[[0.0] * W for _ in range(H)] for _ in range(M + 1)]
    for b in range(M + 1):
        for y in range(H):
            for x in range(W):
                total = 0.0
                for t, ex, ey, pol in records:
                    if ex != x or ey != y:
                        continue
                    weight = max(0.0, 1.0 - abs(b - M * t))
                    total += pol * weight
                bins[b][y][x] = total
    # float32 grid values, as the engine stores them
    flat = [struct.unpack("<f", struct.pack("<f", v))[0] for layer in bins for row in layer for v in row]
    magnitudes = sorted(abs(v) for v in flat if v != 0.0)
    eta = magnitudes[math.ceil(0.98 * len(magnitudes)) - 1]
    out = []
    for v in flat:
        clamped = max(-eta, min(eta, v))
        out.append(struct.unpack("<f", struct.pack("<f", clamped / eta))[0])
    return out


def write_tns(path, shape, values):
    with open(path, "wb") as fh:
        fh.write(b"TNS1")
        fh.write(struct.pack("<I", len(shape)))
        for ext in shape:
            fh.write(struct.pack("<I", ext))
        for v in values:
            fh.write(struct.pack("<f", v))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_ppm(OUT / "frame0.ppm", frame_pixels(1, 1))
    write_ppm(OUT / "frame1.ppm", frame_pixels(3, 2))
    records = make_events()
    write_events(OUT / "events.txt", records)
    write_tns(OUT / "voxel_golden.tns", (M + 1, H, W), voxelize_golden(records))
    print("wrote %d events and golden grid to %s" % (len(records), OUT))


if __name__ == "__main__":
    main()
