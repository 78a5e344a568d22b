#!/usr/bin/env python3
"""Regenerates the synthetic scenes under data/fixtures.

Every file uses the ETH/UCY text layout: frame, pedestrian id, x, y (meters),
tab separated, frames spaced by 10 (2.5 FPS after resampling).
"""

import argparse
import math
import pathlib

import numpy as np

FRAME_STEP = 10


def write_scene(path, rows):
    rows = sorted(rows, key=lambda r: (r[0], r[1]))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for frame, ped, x, y in rows:
            f.write(f"{frame}\t{ped}\t{x:.6g}\t{y:.6g}\n")


def linear(out):
    # Three pedestrians in constant-velocity motion over one 8+12 window.
    # All coordinates are multiples of 1/8, so translations stay exact.
    starts = [(0.0, 0.0, 0.5, 0.25), (4.0, 1.0, -0.25, 0.5), (1.0, 5.0, 0.375, -0.125)]
    rows = []
    for ped, (x0, y0, vx, vy) in enumerate(starts, start=1):
        for t in range(20):
            rows.append((t * FRAME_STEP, ped, x0 + vx * t, y0 + vy * t))
    write_scene(out / "linear.txt", rows)


def crossing(out):
    # Two pedestrians crossing at right angles; the geometry is asymmetric
    # (different speeds and offsets) so pairwise attention is not symmetric.
    rows = []
    for t in range(20):
        rows.append((t * FRAME_STEP, 1, -3.0 + 0.375 * t, 0.5))
        rows.append((t * FRAME_STEP, 2, 1.0, -4.0 + 0.5 * t))
    write_scene(out / "crossing.txt", rows)


def group_merge(out):
    # Two pairs walking side by side converge into one group of four.
    rows = []
    for t in range(20):
        s = min(t / 10.0, 1.0)
        for ped, (x0, lane) in enumerate([(0.0, 3.0), (0.0, 3.6), (0.0, -3.0), (0.0, -3.6)], start=1):
            target = 0.3 if lane > 0 else -0.3
            target += 0.3 if abs(lane) > 3.3 else 0.0
            y = lane + (target * math.copysign(1.0, lane) - lane) * (3 * s * s - 2 * s * s * s)
            rows.append((t * FRAME_STEP, ped, x0 + 0.4 * t, y))
    write_scene(out / "group_merge.txt", rows)


def crowd_scene(rng, frames, n_peds, width, height, long_lived, speed=(0.3, 0.6), first_id=1):
    """Pedestrians crossing a rectangle; `long_lived` of them span every frame."""
    rows = []
    ped = first_id
    for k in range(n_peds):
        if k < long_lived:
            start, length = 0, frames
        else:
            length = int(rng.integers(20, 45))
            start = int(rng.integers(0, max(1, frames - 10)))
        heading = rng.uniform(-0.35, 0.35) + (0.0 if rng.random() < 0.5 else math.pi)
        v = rng.uniform(*speed)
        x = rng.uniform(0.2 * width, 0.8 * width)
        y = rng.uniform(0.15 * height, 0.85 * height)
        turn = rng.normal(0.0, 0.03)
        for t in range(start, min(frames, start + length)):
            rows.append((t * FRAME_STEP, ped, round(x, 2), round(y, 2)))
            heading += turn + rng.normal(0.0, 0.02)
            x += v * math.cos(heading)
            y += v * math.sin(heading) * 0.6
            # turn back at the scene border
            if not 0.0 <= x <= width:
                heading = math.pi - heading
                x = min(max(x, 0.0), width)
            if not 0.0 <= y <= height:
                heading = -heading
                y = min(max(y, 0.0), height)
        ped += 1
    return rows


def zara_subset(out, rng):
    # 119 frames at stride 1 give exactly 100 windows of 20 steps; three
    # pedestrians span all frames so no window is empty.
    write_scene(out / "zara1_subset.txt", crowd_scene(rng, 119, 14, 15.0, 12.0, long_lived=3))


def leave_one_out(out, rng):
    for name in ["eth", "hotel", "univ", "zara1", "zara2"]:
        write_scene(out / "loo" / f"{name}.txt", crowd_scene(rng, 40, 8, 15.0, 12.0, long_lived=2))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parent.parent / "data" / "fixtures")
    ap.add_argument("--seed", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    linear(args.out)
    crossing(args.out)
    group_merge(args.out)
    zara_subset(args.out, rng)
    leave_one_out(args.out, rng)


if __name__ == "__main__":
    main()
