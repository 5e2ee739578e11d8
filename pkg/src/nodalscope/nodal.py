"""Nodal sets of 2-D eigenfunctions: extraction, length, singular points.

The zero set is traced by marching squares on the exact node samples, with
linear interpolation on sign-change edges, periodic stitching across the
torus seam (wrapped neighbor columns/rows, no clipping), and saddle cells
resolved by the exact sign of psi at the cell center. Singular points
(psi = |grad psi| = 0) are found by Newton iteration on grad psi from
flagged cells; the order of vanishing is read off the log-log slope of
sup-on-ball against the ball radius.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousOrderError, ResolutionError, ScaleRangeError
from .fields import nyquist_resolution
from .geometry import min_image, wrap_point
from .spectrum import (
    EigenfunctionSpec,
    evaluate,
    evaluate_gradient,
    evaluate_gradient_grid,
    evaluate_grid,
    evaluate_hessian,
)

__all__ = [
    "NodalSet",
    "SingularPoint",
    "extract_nodal",
    "nodal_length",
    "find_singular_points",
    "vanishing_order",
    "count_singular_in_balls",
    "write_segments_csv",
    "singular_points_json",
]

logger = logging.getLogger(__name__)

NUDGE = 1e-12
RESIDUAL_TOL = 1e-8

# Segment table indexed by the 4-bit positivity pattern of corners
# c0=(i,j), c1=(i+1,j), c2=(i+1,j+1), c3=(i,j+1); edges e0=c0c1, e1=c1c2,
# e2=c3c2, e3=c0c3. Saddle patterns 5 and 10 are resolved at runtime.
_SEGMENTS = {
    0: [], 15: [],
    1: [(0, 3)], 14: [(0, 3)],
    2: [(0, 1)], 13: [(0, 1)],
    3: [(1, 3)], 12: [(1, 3)],
    4: [(1, 2)], 11: [(1, 2)],
    6: [(0, 2)], 9: [(0, 2)],
    7: [(2, 3)], 8: [(2, 3)],
}


@dataclass
class NodalSet:
    polylines: list          # list of (V, 2) vertex arrays, wrapped mod 1
    resolution: int
    length: float
    convergence_estimate: float = math.nan
    segments: np.ndarray | None = None  # (S, 4): x1, y1, x2, y2


@dataclass
class SingularPoint:
    location: np.ndarray
    vanishing_order: int
    residual: float


def _edge_point(edge, i, j, vals, h, N):
    i1 = (i + 1) % N
    j1 = (j + 1) % N
    v0, v1 = vals[i, j], vals[i1, j]
    v2, v3 = vals[i1, j1], vals[i, j1]
    if edge == 0:
        t = v0 / (v0 - v1)
        return ((i + t) * h, j * h)
    if edge == 1:
        t = v1 / (v1 - v2)
        return ((i + 1) * h, (j + t) * h)
    if edge == 2:
        t = v3 / (v3 - v2)
        return ((i + t) * h, (j + 1) * h)
    t = v0 / (v0 - v3)
    return (i * h, (j + t) * h)


def extract_nodal(spec: EigenfunctionSpec, N: int) -> NodalSet:
    """Marching-squares contour of {psi = 0} with torus-periodic stitching."""
    if spec.model.dim != 2:
        raise ValueError("nodal extraction is 2-D only")
    required = 4 * nyquist_resolution(spec.m)
    if N < required:
        raise ResolutionError(N, required)
    vals = evaluate_grid(spec, N)
    zero_nodes = int(np.count_nonzero(vals == 0.0))
    if zero_nodes:
        logger.info("nudged %d exactly-zero grid nodes by +%g", zero_nodes,
                    NUDGE)
        vals = np.where(vals == 0.0, NUDGE, vals)
    h = 1.0 / N
    pos = vals > 0.0
    p0 = pos
    p1 = np.roll(pos, -1, axis=0)
    p2 = np.roll(np.roll(pos, -1, axis=0), -1, axis=1)
    p3 = np.roll(pos, -1, axis=1)
    pattern = (
        p0.astype(np.uint8)
        + 2 * p1.astype(np.uint8)
        + 4 * p2.astype(np.uint8)
        + 8 * p3.astype(np.uint8)
    )
    ii, jj = np.nonzero((pattern != 0) & (pattern != 15))
    pats = pattern[ii, jj]

    segments = []
    for i, j, pat in zip(ii.tolist(), jj.tolist(), pats.tolist()):
        if pat in (5, 10):
            center = evaluate(
                spec, np.array([(i + 0.5) * h, (j + 0.5) * h])
            )
            center_positive = center > 0.0
            if pat == 5:
                pairs = [(0, 1), (2, 3)] if center_positive else \
                    [(0, 3), (1, 2)]
            else:
                pairs = [(0, 3), (1, 2)] if center_positive else \
                    [(0, 1), (2, 3)]
        else:
            pairs = _SEGMENTS[pat]
        for ea, eb in pairs:
            pa = _edge_point(ea, i, j, vals, h, N)
            pb = _edge_point(eb, i, j, vals, h, N)
            segments.append((pa[0], pa[1], pb[0], pb[1]))

    seg_arr = np.array(segments) if segments else np.zeros((0, 4))
    length = _segments_length(seg_arr)
    polylines = _stitch(seg_arr)
    return NodalSet(polylines=polylines, resolution=N, length=length,
                    segments=seg_arr)


def _segments_length(segments: np.ndarray) -> float:
    if len(segments) == 0:
        return 0.0
    d = min_image(segments[:, 2:4] - segments[:, 0:2])
    return float(np.sum(np.linalg.norm(d, axis=-1)))


def _stitch(segments: np.ndarray) -> list:
    """Join segments into vertex chains by matching wrapped endpoints."""
    if len(segments) == 0:
        return []
    quant = 1e-12

    def key(pt):
        w = np.mod(pt, 1.0)
        return (int(round(w[0] / quant)) % int(1 / quant),
                int(round(w[1] / quant)) % int(1 / quant))

    ends = {}
    for idx in range(len(segments)):
        for side in (0, 1):
            pt = segments[idx, 2 * side:2 * side + 2]
            ends.setdefault(key(pt), []).append((idx, side))

    used = np.zeros(len(segments), dtype=bool)
    chains = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        chain = [segments[start, 0:2].copy(), segments[start, 2:4].copy()]
        for direction in (1, 0):
            while True:
                tip = chain[-1] if direction == 1 else chain[0]
                candidates = [
                    (idx, side) for idx, side in ends.get(key(tip), [])
                    if not used[idx]
                ]
                if not candidates:
                    break
                idx, side = candidates[0]
                used[idx] = True
                nxt = segments[idx, 2 * (1 - side):2 * (1 - side) + 2].copy()
                if direction == 1:
                    chain.append(nxt)
                else:
                    chain.insert(0, nxt)
        chains.append(np.mod(np.array(chain), 1.0))
    return chains


def nodal_length(ns: NodalSet) -> float:
    """Total torus-metric polyline length."""
    return ns.length


def extract_nodal_with_convergence(spec: EigenfunctionSpec,
                                   N: int) -> NodalSet:
    """Extraction at N with the relative length change from N/2 recorded."""
    coarse = extract_nodal(spec, N // 2)
    ns = extract_nodal(spec, N)
    ns.convergence_estimate = abs(ns.length - coarse.length) / ns.length
    return ns


def _sup_small_ball(spec: EigenfunctionSpec, x, s: float) -> float:
    """Dense-scan sup of |psi|^2 over a microscopic ball.

    Near a zero of order nu the ball sup scales like s^(2 nu), far below the
    global Bernstein constants, so the certified engine cannot prune there;
    these balls are tiny against the mode wavelength (s << 1/sqrt(m)), making
    a dense grid plus pattern polish exact to rounding in practice.
    """
    from .scan import RadialDomain, SquaredAmplitude, _pattern_refine

    x = np.asarray(x, dtype=float)
    dim = spec.model.dim
    per_axis = 65 if dim == 2 else 25
    axis = np.linspace(-s, s, per_axis)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    offsets = np.stack(mesh, axis=-1).reshape(-1, dim)
    offsets = offsets[np.linalg.norm(offsets, axis=-1) <= s]
    obj = SquaredAmplitude(spec, x)
    vals = obj.values(offsets)
    best = int(np.argmax(vals))
    domain = RadialDomain(0.0, s)
    _, v, _ = _pattern_refine(obj, domain, offsets[best], vals[best],
                              2.0 * s / per_axis)
    return v


def vanishing_order(spec: EigenfunctionSpec, x,
                    delta_max: float | None = None) -> int:
    """Order of vanishing from the log-log slope of sup-on-ball vs radius.

    Fits sup_{B_delta}|psi|^2 ~ delta^(2M) over a dyadic sweep
    delta in [delta_max/64, delta_max] and returns round(slope/2); raises
    AmbiguousOrderError when the slope is within 0.25 of an odd integer.
    A nonzero point yields slope ~ 0 and order 0 (precondition violation,
    logged).
    """
    x = wrap_point(x)
    if delta_max is None:
        delta_max = min(0.05, 1.0 / (8.0 * math.sqrt(spec.m)))
    deltas = [delta_max / 2**j for j in range(7)]
    sups = [_sup_small_ball(spec, x, d) for d in deltas]
    logs = np.log(np.maximum(sups, 1e-300))
    slope = float(np.polyfit(np.log(deltas), logs, 1)[0])
    nearest_odd = 2 * round((slope - 1) / 2) + 1
    if abs(slope - nearest_odd) < 0.25:
        raise AmbiguousOrderError(slope)
    order = int(round(slope / 2.0))
    if order == 0:
        logger.warning(
            "vanishing_order at %s: slope %.3f, point is not a zero of psi",
            np.array2string(x), slope,
        )
    return order


def find_singular_points(spec: EigenfunctionSpec, N: int,
                         with_orders: bool = True) -> list[SingularPoint]:
    """Common zeros of psi and grad psi by Newton iteration on grad psi.

    Candidates are sign-change cells whose corner gradient norms drop below
    theta = 4 pi sqrt(n m) h; Newton runs from cell centers and accepted
    points have |psi| and |grad psi| below 1e-8, deduplicated within h.
    """
    if spec.model.dim != 2:
        raise ValueError("singular-point search is 2-D only")
    required = 4 * nyquist_resolution(spec.m)
    if N < required:
        raise ResolutionError(N, required)
    h = 1.0 / N
    n = spec.model.dim
    vals = evaluate_grid(spec, N)
    vals = np.where(vals == 0.0, NUDGE, vals)
    grad = evaluate_gradient_grid(spec, N)
    grad_norm = np.linalg.norm(grad, axis=-1)
    theta = 4.0 * math.pi * math.sqrt(n * spec.m) * h

    pos = vals > 0.0
    same_sign = pos.copy()
    for shift in [(-1, 0), (0, -1), (-1, -1)]:
        same_sign = same_sign & np.roll(pos, shift, axis=(0, 1))
    neg = ~pos
    all_neg = neg
    for shift in [(-1, 0), (0, -1), (-1, -1)]:
        all_neg = all_neg & np.roll(neg, shift, axis=(0, 1))
    sign_change = ~(same_sign | all_neg)

    gmin = grad_norm
    for shift in [(-1, 0), (0, -1), (-1, -1)]:
        gmin = np.minimum(gmin, np.roll(grad_norm, shift, axis=(0, 1)))
    candidates = np.argwhere(sign_change & (gmin < theta))

    found = []
    for i, j in candidates:
        x = np.array([(i + 0.5) * h, (j + 0.5) * h])
        ok = False
        for _ in range(50):
            g = evaluate_gradient(spec, x)
            hess = evaluate_hessian(spec, x)
            try:
                step = np.linalg.solve(hess, -g)
            except np.linalg.LinAlgError:
                break
            x = wrap_point(x + step)
            if np.linalg.norm(step) < 1e-13:
                ok = True
                break
        if not ok:
            logger.info("Newton did not converge from cell (%d, %d)", i, j)
            continue
        resid = max(abs(evaluate(spec, x)),
                    float(np.linalg.norm(evaluate_gradient(spec, x))))
        if resid >= RESIDUAL_TOL:
            continue
        if any(
            np.linalg.norm(min_image(x - p.location)) < h for p in found
        ):
            continue
        order = vanishing_order(spec, x) if with_orders else 2
        found.append(SingularPoint(location=x, vanishing_order=order,
                                   residual=resid))
    found.sort(key=lambda p: (p.location[0], p.location[1]))
    return found


def count_singular_in_balls(points: list[SingularPoint], r: float, lam: float,
                            centers, radius_override: float | None = None
                            ) -> list[int]:
    """Per-center sum of (order - 1) over singular points within
    sqrt(r) lambda^(-1/4) (or an explicit override radius)."""
    if r < lam ** -0.5:
        raise ScaleRangeError(
            f"need r >= lambda^(-1/2) = {lam ** -0.5:.3g}, got {r}"
        )
    radius = radius_override if radius_override is not None \
        else math.sqrt(r) * lam ** -0.25
    counts = []
    for center in np.atleast_2d(np.asarray(centers, dtype=float)):
        total = 0
        for p in points:
            if np.linalg.norm(min_image(p.location - center)) <= radius:
                total += p.vanishing_order - 1
        counts.append(total)
    return counts


def write_segments_csv(ns: NodalSet, path, header_lines=()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["x1", "y1", "x2", "y2"])
        for seg in (ns.segments if ns.segments is not None else []):
            writer.writerow([f"{c:.17g}" for c in seg])


def singular_points_json(points: list[SingularPoint]) -> str:
    payload = [
        {"location": [float(c) for c in p.location],
         "vanishing_order": p.vanishing_order,
         "residual": p.residual}
        for p in points
    ]
    return json.dumps(payload, sort_keys=True)
