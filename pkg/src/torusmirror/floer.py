"""Intersection complex of a curve with the zero section.

Generators are the transversal crossings (positives in degree 0, negatives
in degree 1); the differential block from a positive to a negative point
sums direction * M over the simple arcs joining them, with
M = flat transport * exp(2*pi*area).  A second, independent route obtains
the same matrix from the distributional derivative of horizontal sections;
both are exposed and cross-checked by the callers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import exp

import numpy as np

from .geometry import IntersectionPoint, arc_area, lift_components, simple_arcs, zero_crossings
from .localsys import TwistedTransport, transport_flat, transport_twisted

#: relative singular-value cutoff; differential entries are transcendental
RANK_TOL = 1e-9


@dataclass(frozen=True)
class FloerComplex:
    """Two-term complex F0 -> F1 with block differential d.

    f0/f1 hold the positive/negative crossings in assembly order (component
    shift, then t); each contributes a block of size n."""

    f0: tuple[IntersectionPoint, ...]
    f1: tuple[IntersectionPoint, ...]
    n: int
    d: np.ndarray

    @property
    def dim_f0(self) -> int:
        return self.n * len(self.f0)

    @property
    def dim_f1(self) -> int:
        return self.n * len(self.f1)


def _sorted_crossings(tt: TwistedTransport, window: float | None):
    """Crossings and arcs of every component, in deterministic order."""
    positives: list[IntersectionPoint] = []
    negatives: list[IntersectionPoint] = []
    arcs = []
    for comp in sorted(tt.components(window), key=lambda c: c.shift):
        points = zero_crossings(comp)
        positives.extend(pt for pt in points if pt.is_positive)
        negatives.extend(pt for pt in points if not pt.is_positive)
        arcs.extend(simple_arcs(points))
    return positives, negatives, arcs


def _warn_equal_direction_pairs(arcs) -> None:
    seen: dict[tuple[int, float, float], int] = {}
    for arc in arcs:
        key = (arc.plus.component.shift, arc.plus.t0, arc.minus.t0)
        if seen.get(key) == arc.direction:
            warnings.warn(
                "two simple arcs between one crossing pair share a direction; "
                "sign convention untested here, review the scene"
            )
        seen[key] = arc.direction


def build_complex(tt: TwistedTransport, window: float | None = None) -> FloerComplex:
    """Assemble the complex from crossings, arcs, areas, and flat transports."""
    if not tt.system.is_quasi_unitary():
        warnings.warn(f"object {tt.id}: local system is not quasi-unitary; dimensions may shift")
    positives, negatives, arcs = _sorted_crossings(tt, window)
    _warn_equal_direction_pairs(arcs)
    n = tt.rank
    col = {id(pt): i for i, pt in enumerate(positives)}
    row = {id(pt): i for i, pt in enumerate(negatives)}
    d = np.zeros((n * len(negatives), n * len(positives)), dtype=complex)
    for arc in arcs:
        monodromy = transport_flat(tt.system, arc.plus.component, arc.t_plus, arc.t_minus)
        block = arc.direction * monodromy * exp(2.0 * np.pi * arc_area(arc))
        i, j = row[id(arc.minus)], col[id(arc.plus)]
        d[n * i : n * (i + 1), n * j : n * (j + 1)] += block
    return FloerComplex(tuple(positives), tuple(negatives), n, d)


def matrix_rank(d: np.ndarray, rank_tol: float = RANK_TOL) -> int:
    if d.size == 0:
        return 0
    sv = np.linalg.svd(d, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rank_tol * sv[0]))


def cohomology_dims(fc: FloerComplex, rank_tol: float = RANK_TOL) -> tuple[int, int]:
    r = matrix_rank(fc.d, rank_tol)
    return fc.dim_f0 - r, fc.dim_f1 - r


def _unwrapped_neighbors(point: IntersectionPoint, negatives_on_comp: list[IntersectionPoint]):
    """Nearest negative parameter to the left/right of a positive crossing,
    unwrapped along the component (None at an infinite end)."""
    comp = point.component
    t = point.t0
    ts = sorted(pt.t0 for pt in negatives_on_comp)
    left = max((s for s in ts if s < t), default=None)
    right = min((s for s in ts if s > t), default=None)
    if comp.kind == "circle" and ts:
        q = comp.parent.q
        if left is None:
            left = max(ts) - q
        if right is None:
            right = min(ts) + q
    return left, right


def boundary_transport_differential(tt: TwistedTransport, window: float | None = None) -> np.ndarray:
    """The differential recomputed from distributional boundary terms.

    Each basis vector at a positive point extends horizontally over the
    maximal interval free of negative points; its distributional derivative
    is supported at the interval's finite ends.  The matrix collects, per
    adjacent negative point, +transport to the right end and -transport to
    the left end (infinite ends decay and contribute nothing)."""
    positives, negatives, _ = _sorted_crossings(tt, window)
    n = tt.rank
    q = tt.graph.q
    # crossings are distinct mod q on every component, so this key is unique
    row = {(pt.component.shift, round(pt.t0 % q, 10)): i for i, pt in enumerate(negatives)}
    d = np.zeros((n * len(negatives), n * len(positives)), dtype=complex)

    def row_of(comp, t_unwrapped: float) -> int:
        return row[(comp.shift, round(t_unwrapped % q, 10))]

    for j, plus in enumerate(positives):
        comp = plus.component
        neg_here = [pt for pt in negatives if pt.component == comp]
        left, right = _unwrapped_neighbors(plus, neg_here)
        if right is not None:
            i = row_of(comp, right)
            d[n * i : n * (i + 1), n * j : n * (j + 1)] += transport_twisted(
                tt.system, comp, plus.t0, right
            )
        if left is not None:
            i = row_of(comp, left)
            d[n * i : n * (i + 1), n * j : n * (j + 1)] -= transport_twisted(
                tt.system, comp, plus.t0, left
            )
    return d


def complex_report(fc: FloerComplex, rank_tol: float = RANK_TOL) -> dict:
    h0, h1 = cohomology_dims(fc, rank_tol)
    return {
        "F0": fc.dim_f0,
        "F1": fc.dim_f1,
        "d": [[[z.real, z.imag] for z in fc.d[i]] for i in range(fc.d.shape[0])],
        "h0": h0,
        "h1": h1,
        "euler": h0 - h1,
    }
