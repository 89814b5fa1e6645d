#!/usr/bin/env python3
"""Writes golden_matrix.csv and golden_matrix.meta.json.

Synthetic 49-channel matrix on the default facets (linear input at 50 um,
7x7 output grid at 40 um, identity assignment). Off-diagonal entries are
drawn per neighbour category so that the category means and the maximum hit
the metadata values exactly; the diagonal closes each row to 1.
"""

import json
import random
from pathlib import Path

N, COLS = 49, 7
IN_PITCH, OUT_PITCH = 50.0, 40.0
UNIT = 1e-10  # entries are integer multiples of this

MAX_OFFDIAG = 0.01198
AVG_IN = 0.00232
AVG_OUT = 0.00158
AVG_REST = 0.0002
BOTH = 0.0018


def units(x):
    return round(x / UNIT)


def spread(rng, count, total, lo_frac, hi_frac, mean):
    """count positive integers summing to total, each within mean*[lo, hi]."""
    vals = [rng.randint(round(mean * lo_frac), round(mean * hi_frac)) for _ in range(count)]
    diff = total - sum(vals)
    i = 0
    while diff != 0:
        step = 1 if diff > 0 else -1
        vals[i % count] += step
        diff -= step
        i += 1
    return vals


def fnv1a64(data: bytes) -> str:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def main():
    rng = random.Random(20250101)
    in_ports = [[(k - (N - 1) / 2) * IN_PITCH, 0.0] for k in range(N)]
    out_ports = [[(s % COLS - 3) * OUT_PITCH, (3 - s // COLS) * OUT_PITCH] for s in range(N)]

    def adj_in(a, b):
        return abs(a - b) == 1

    def adj_out(a, b):
        ra, ca, rb, cb = a // COLS, a % COLS, b // COLS, b % COLS
        return abs(ra - rb) + abs(ca - cb) == 1

    both, in_only, out_only, rest = [], [], [], []
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            ni, no = adj_in(i, j), adj_out(i, j)
            (both if ni and no else in_only if ni else out_only if no else rest).append((i, j))
    assert (len(both), len(in_only), len(out_only), len(rest)) == (84, 12, 84, 2172)

    x = [[0] * N for _ in range(N)]
    for p in both:
        x[p[0]][p[1]] = units(BOTH)
    in_total = units(AVG_IN) * 96 - units(BOTH) * 84
    vals = [units(MAX_OFFDIAG)] + spread(rng, 11, in_total - units(MAX_OFFDIAG), 0.7, 1.3,
                                         (in_total - units(MAX_OFFDIAG)) / 11)
    assert max(vals) == units(MAX_OFFDIAG)
    for p, v in zip(in_only, vals):
        x[p[0]][p[1]] = v
    out_total = units(AVG_OUT) * 168 - units(BOTH) * 84
    for p, v in zip(out_only, spread(rng, 84, out_total, 0.6, 1.4, out_total / 84)):
        x[p[0]][p[1]] = v
    for p, v in zip(rest, spread(rng, 2172, units(AVG_REST) * 2172, 0.2, 1.8, units(AVG_REST))):
        x[p[0]][p[1]] = v

    rows = []
    for i in range(N):
        off = sum(x[i][j] for j in range(N) if j != i)
        row = []
        for j in range(N):
            if i == j:
                row.append("%.12g" % (1.0 - off * UNIT))
            else:
                row.append("%.12g" % (x[i][j] * UNIT))
        rows.append(",".join(row))

    here = Path(__file__).resolve().parent
    (here / "golden_matrix.csv").write_text("\n".join(rows) + "\n")

    def facet(name, pattern, pitch, r, c, ports):
        return {"facet": name, "pattern": pattern, "pitch_um": pitch, "rows": r, "cols": c, "ports": ports}

    inp = facet("input", "linear", IN_PITCH, 0, 0, in_ports)
    out = facet("output", "grid", OUT_PITCH, 7, 7, out_ports)
    assignment = list(range(N))
    layout = json.dumps({"input": inp, "output": out, "assignment": assignment}, separators=(",", ":"))
    meta = {
        "schema": "ocm.crosstalk/1",
        "n_channels": N,
        "wavelength_nm": 420.0,
        "lossy": False,
        "layout_hash": fnv1a64(layout.encode()),
        "metrics": {
            "max_offdiag": MAX_OFFDIAG,
            "avg_nearest_input": AVG_IN,
            "avg_nearest_output": AVG_OUT,
            "avg_non_nearest": AVG_REST,
        },
        "input": inp,
        "output": out,
        "assignment": assignment,
        "note": "synthetic reference matrix; category means set to the reference statistics",
    }
    (here / "golden_matrix.meta.json").write_text(json.dumps(meta, indent=2) + "\n")


if __name__ == "__main__":
    main()
