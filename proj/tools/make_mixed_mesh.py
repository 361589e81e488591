#!/usr/bin/env python3
"""Writes a channel mesh in the plain-text `V E C` format.

The channel [-lock, length - lock] x [0, height] is cut into nx x ny quads. A chosen
number of quads, spread evenly in row-major order, get a centre vertex and four
triangles; the rest are split along one diagonal. The defaults give
(V, E, C) = (619, 1734, 1116).
"""

import argparse


def build(length, height, lock, nx, ny, crossed):
    if not 0 <= crossed <= nx * ny:
        raise SystemExit(f"crossed must lie in [0, {nx * ny}]")
    pts = [(-lock + length * i / nx, height * j / ny) for j in range(ny + 1) for i in range(nx + 1)]
    cells = []

    def vid(i, j):
        return j * (nx + 1) + i

    quads = nx * ny
    for q in range(quads):
        i, j = q % nx, q // nx
        a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
        if (q + 1) * crossed // quads > q * crossed // quads:
            x0, y0 = pts[a]
            x1, y1 = pts[c]
            pts.append((0.5 * (x0 + x1), 0.5 * (y0 + y1)))
            m = len(pts) - 1
            cells += [(a, b, m), (b, c, m), (c, d, m), (d, a, m)]
        else:
            cells += [(a, b, c), (a, c, d)]
    edges = set()
    for t in cells:
        for u, v in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            edges.add((min(u, v), max(u, v)))
    return pts, len(edges), cells


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("output")
    ap.add_argument("--length", type=float, default=13.0)
    ap.add_argument("--height", type=float, default=1.0)
    ap.add_argument("--lock", type=float, default=1.0)
    ap.add_argument("--nx", type=int, default=52)
    ap.add_argument("--ny", type=int, default=8)
    ap.add_argument("--crossed", type=int, default=142)
    a = ap.parse_args()
    pts, ne, cells = build(a.length, a.height, a.lock, a.nx, a.ny, a.crossed)
    with open(a.output, "w") as f:
        f.write(f"{len(pts)} {ne} {len(cells)}\n")
        for x, y in pts:
            f.write(f"{x!r} {y!r}\n")
        for t in cells:
            f.write(f"{t[0]} {t[1]} {t[2]}\n")
    print(f"V={len(pts)} E={ne} C={len(cells)}")


if __name__ == "__main__":
    main()
