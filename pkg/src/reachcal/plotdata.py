"""Plot-ready CSV emission: zero-level boundary polylines and point lists.

Rendering is out of scope for the library; these helpers reduce 2D slices to
polylines (marching squares on a scalar field, segments chained into ordered
vertex lists) and compression sets to coordinate tables, all written as
deterministic CSV.
"""

from __future__ import annotations

from typing import List

import numpy as np

from .engine import CompressionSet
from .systems import SystemSpec, free_of

_KEY_DECIMALS = 9


def _cross(p0, f0, p1, f1) -> tuple:
    """Linear zero crossing between two grid corners of opposite class."""
    t = f0 / (f0 - f1)
    return (p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]))


# Segment table indexed by the 4-bit corner membership mask
# (bit0 = bottom-left, bit1 = bottom-right, bit2 = top-right, bit3 = top-left);
# entries name crossed edge pairs, with the two saddle cases resolved by the
# cell-center average at call time.
_EDGE_SEGMENTS = {
    0: (), 15: (),
    1: (("L", "B"),), 14: (("L", "B"),),
    2: (("B", "R"),), 13: (("B", "R"),),
    3: (("L", "R"),), 12: (("L", "R"),),
    4: (("T", "R"),), 11: (("T", "R"),),
    6: (("B", "T"),), 9: (("B", "T"),),
    7: (("L", "T"),), 8: (("L", "T"),),
}


def boundary_polylines(x_axis: np.ndarray, y_axis: np.ndarray,
                       field: np.ndarray) -> List[np.ndarray]:
    """Chain the zero level set of ``field[i, j] = f(x_i, y_j)`` into polylines.

    Membership uses the strict ``f > 0`` convention, so the emitted curves
    separate the estimated set from its complement exactly as FPR/FNR see
    them. Closed curves repeat their first vertex at the end.
    """
    x_axis = np.asarray(x_axis, dtype=float)
    y_axis = np.asarray(y_axis, dtype=float)
    field = np.asarray(field, dtype=float)
    if field.shape != (x_axis.size, y_axis.size):
        raise ValueError("field must be shaped (len(x_axis), len(y_axis))")
    segments = []
    for i in range(x_axis.size - 1):
        for j in range(y_axis.size - 1):
            f00, f10 = field[i, j], field[i + 1, j]
            f01, f11 = field[i, j + 1], field[i + 1, j + 1]
            mask = (int(f00 > 0.0) | (int(f10 > 0.0) << 1)
                    | (int(f11 > 0.0) << 2) | (int(f01 > 0.0) << 3))
            if mask in (0, 15):
                continue
            x0, x1 = x_axis[i], x_axis[i + 1]
            y0, y1 = y_axis[j], y_axis[j + 1]
            edges = {
                "B": lambda: _cross((x0, y0), f00, (x1, y0), f10),
                "T": lambda: _cross((x0, y1), f01, (x1, y1), f11),
                "L": lambda: _cross((x0, y0), f00, (x0, y1), f01),
                "R": lambda: _cross((x1, y0), f10, (x1, y1), f11),
            }
            if mask in (5, 10):
                center_in = (f00 + f10 + f01 + f11) > 0.0
                if mask == 5:  # bottom-left and top-right inside
                    pairs = ((("L", "T"), ("B", "R")) if center_in
                             else (("L", "B"), ("T", "R")))
                else:          # bottom-right and top-left inside
                    pairs = ((("L", "B"), ("T", "R")) if center_in
                             else (("B", "R"), ("L", "T")))
            else:
                pairs = _EDGE_SEGMENTS[mask]
            for a, b in pairs:
                segments.append((edges[a](), edges[b]()))
    return _chain(segments)


def _key(point: tuple) -> tuple:
    return (round(point[0], _KEY_DECIMALS), round(point[1], _KEY_DECIMALS))


def _chain(segments: list) -> List[np.ndarray]:
    adjacency: dict = {}
    coords: dict = {}
    for sid, (p, q) in enumerate(segments):
        for point in (p, q):
            k = _key(point)
            adjacency.setdefault(k, []).append(sid)
            coords.setdefault(k, point)
    used = [False] * len(segments)

    def other_end(sid: int, k: tuple) -> tuple:
        p, q = segments[sid]
        return q if _key(p) == k else p

    def walk(start_key: tuple) -> np.ndarray:
        points = [coords[start_key]]
        current = start_key
        while True:
            nxt = next((sid for sid in adjacency[current] if not used[sid]),
                       None)
            if nxt is None:
                break
            used[nxt] = True
            point = other_end(nxt, current)
            points.append(point)
            current = _key(point)
        return np.asarray(points)

    polylines = []
    for k in adjacency:  # open curves first: endpoints touched exactly once
        if len(adjacency[k]) == 1 and not used[adjacency[k][0]]:
            polylines.append(walk(k))
    for sid in range(len(segments)):  # remaining segments form closed loops
        if not used[sid]:
            polylines.append(walk(_key(segments[sid][0])))
    return polylines


def write_polylines_csv(path, polylines: List[np.ndarray]) -> None:
    """Rows of (polyline id, vertex index, x, y), chained order preserved."""
    with open(path, "w") as fh:
        fh.write("polyline,vertex,x,y\n")
        for pid, line in enumerate(polylines):
            for vid, (x, y) in enumerate(line):
                fh.write(f"{pid},{vid},{float(x)!r},{float(y)!r}\n")


def read_polylines_csv(path) -> List[np.ndarray]:
    raw = np.genfromtxt(path, delimiter=",", names=True)
    raw = np.atleast_1d(raw)
    if raw.size == 0:
        return []
    lines = []
    for pid in np.unique(raw["polyline"]):
        rows = raw[raw["polyline"] == pid]
        order = np.argsort(rows["vertex"])
        lines.append(np.column_stack([rows["x"][order], rows["y"][order]]))
    return lines


def write_q_points_csv(path, system: SystemSpec, q: CompressionSet) -> None:
    """Chosen-sample coordinates over the free dimensions, in pick order."""
    free_names = [f"x{d}" for d in system.free_dims]
    with open(path, "w") as fh:
        fh.write("iteration,source_index," + ",".join(free_names)
                 + ",value,sign\n")
        for it, (entry, src) in enumerate(zip(q.entries, q.source_indices)):
            coords = free_of(system, entry.x[None, :])[0]
            joined = ",".join(repr(float(c)) for c in coords)
            sign = 1 if entry.value > 0.0 else -1
            fh.write(f"{it},{src},{joined},{entry.value!r},{sign}\n")
