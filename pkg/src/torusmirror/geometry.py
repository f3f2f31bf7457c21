"""Base circle, Lagrangian graphs, lifts, zero-section crossings, and areas.

Conventions used throughout the package: the base coordinate t lives on
R/Z oriented positively, the fiber coordinate y is periodic on the torus
and real on the cotangent cylinder, the symplectic form is dy^dt, and the
restriction of the canonical 1-form to a graph is Y(t) dt.  The oriented
area of an arc is A = -integral of Y dt along the traversal direction, so
that exp(2*pi*A) < 1 for an arc above the axis traversed positively.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import NumericsError, TransversalityError, ValidationError

TWO_PI = 2.0 * math.pi

LINE = "line"
CIRCLE = "circle"

#: default tolerance for locating roots of Y on a component
ROOT_TOL = 1e-12
#: |Y'(root)| at or below this value is treated as a tangential crossing
TRANSVERSALITY_TOL = 1e-6
#: |Y| at a critical point below this value flags an even-order tangency
TANGENCY_HEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class Harmonic:
    """One wiggle term a*cos(2*pi*m*t/q) + b*sin(2*pi*m*t/q)."""

    m: int
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 1:
            raise ValidationError(f"harmonic order must be a positive integer, got {self.m!r}")


def _as_harmonics(wiggle) -> tuple[Harmonic, ...]:
    out = []
    for term in wiggle:
        if isinstance(term, Harmonic):
            out.append(term)
        else:
            m, a, b = term
            out.append(Harmonic(int(m), float(a), float(b)))
    return tuple(out)


@dataclass(frozen=True)
class LagrangianGraph:
    """A closed curve transversal to the fibers, given as a graph over a q-fold
    cover of the base circle.

    The lift function is Y(t) = (p/q)*t + c + W(t) with W a finite harmonic
    sum of period q.  Closedness Y(t+q) = Y(t) + p holds by construction and
    is asserted numerically on creation.
    """

    id: str
    q: int = 1
    p: int = 0
    c: float = 0.0
    wiggle: tuple[Harmonic, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "wiggle", _as_harmonics(self.wiggle))
        if not isinstance(self.q, int) or self.q < 1:
            raise ValidationError(f"object {self.id!r}: cover degree q must be a positive integer")
        if not isinstance(self.p, int):
            raise ValidationError(f"object {self.id!r}: winding p must be an integer")
        if self.p != 0 and math.gcd(self.p, self.q) != 1:
            raise ValidationError(
                f"object {self.id!r}: gcd(p, q) = {math.gcd(self.p, self.q)} != 1 "
                f"(p={self.p}, q={self.q}); the curve would be disconnected"
            )
        for t in (0.1, 0.37, 1.7):
            if abs(self.height(t + self.q) - self.height(t) - self.p) > 1e-9:
                raise ValidationError(f"object {self.id!r}: Y(t+q) != Y(t) + p")

    # -- pointwise data ------------------------------------------------

    def height(self, t):
        """Y(t), vectorized over numpy arrays."""
        t = np.asarray(t, dtype=float)
        y = (self.p / self.q) * t + self.c
        for h in self.wiggle:
            w = TWO_PI * h.m / self.q
            y = y + h.a * np.cos(w * t) + h.b * np.sin(w * t)
        return y if y.shape else float(y)

    def slope(self, t):
        """Y'(t)."""
        t = np.asarray(t, dtype=float)
        s = np.full_like(t, self.p / self.q)
        for h in self.wiggle:
            w = TWO_PI * h.m / self.q
            s = s + w * (-h.a * np.sin(w * t) + h.b * np.cos(w * t))
        return s if s.shape else float(s)

    def slope_derivative(self, t):
        """Y''(t)."""
        t = np.asarray(t, dtype=float)
        s = np.zeros_like(t)
        for h in self.wiggle:
            w = TWO_PI * h.m / self.q
            s = s - w * w * (h.a * np.cos(w * t) + h.b * np.sin(w * t))
        return s if s.shape else float(s)

    def height_primitive(self, t):
        """Exact antiderivative of Y with height_primitive(0) = 0."""
        t = np.asarray(t, dtype=float)
        g = 0.5 * (self.p / self.q) * t * t + self.c * t
        for h in self.wiggle:
            w = TWO_PI * h.m / self.q
            g = g + (h.a * np.sin(w * t) + h.b * (1.0 - np.cos(w * t))) / w
        return g if g.shape else float(g)

    def wiggle_bound(self) -> float:
        """sup |W|, bounded by the sum of coefficient magnitudes."""
        return sum(abs(h.a) + abs(h.b) for h in self.wiggle)

    def harmonic_order_sum(self) -> int:
        return sum(h.m for h in self.wiggle)

    def default_window(self) -> float:
        return max(4.0, 2.0 + abs(self.c) + self.wiggle_bound())


@dataclass(frozen=True)
class LiftComponent:
    """One connected component of the preimage of the curve in the cotangent
    cylinder: a Line for p != 0 (shift in 0..|p|-1), a Circle for p = 0
    (any integer shift).  The branch function is Y(t) + shift."""

    parent: LagrangianGraph
    kind: str
    shift: int

    @property
    def label(self) -> str:
        return f"{self.parent.id}/r{self.shift}"

    def height(self, t):
        return self.parent.height(t) + self.shift

    def slope(self, t):
        return self.parent.slope(t)

    def slope_derivative(self, t):
        return self.parent.slope_derivative(t)

    def height_primitive(self, t):
        t_arr = np.asarray(t, dtype=float)
        g = self.parent.height_primitive(t_arr) + self.shift * t_arr
        return g if g.shape else float(g)


@dataclass(frozen=True)
class IntersectionPoint:
    """A transversal crossing of a lift component with the zero section.

    sign is +1 when the branch crosses upward (the local primitive of Y dt
    has a local minimum there) and -1 when it crosses downward.
    """

    component: LiftComponent
    t0: float
    sign: int

    @property
    def is_positive(self) -> bool:
        return self.sign > 0


@dataclass(frozen=True)
class SimpleArc:
    """An arc of a lift component running from a positive crossing to a
    negative crossing without meeting the zero section in between.

    direction is +1 when traversal from the positive to the negative point
    runs in the positive base direction.  t_plus/t_minus are unwrapped
    parameters (the wrap-around arc on a circle uses t_minus > q).
    """

    plus: IntersectionPoint
    minus: IntersectionPoint
    t_plus: float
    t_minus: float
    direction: int
    area: float


def lift_components(graph: LagrangianGraph, window: float | None = None) -> list[LiftComponent]:
    """Enumerate the components of the lift of the curve.

    For p != 0 these are the |p| lines with shifts 0..|p|-1.  For p = 0 they
    are circles, enumerated lazily: only shifts whose branch meets the band
    |y| <= window are returned.  window defaults to
    max(4, 2 + |c| + sum of wiggle coefficient magnitudes).
    """
    if window is None:
        window = graph.default_window()
    if window <= 0:
        raise ValidationError(f"window must be positive, got {window}")
    if graph.p != 0:
        return [LiftComponent(graph, LINE, r) for r in range(abs(graph.p))]
    ts = np.linspace(0.0, graph.q, 1024, endpoint=False)
    ys = graph.height(ts)
    ymin, ymax = float(np.min(ys)), float(np.max(ys))
    lo = math.ceil(-window - ymax - 1e-12)
    hi = math.floor(window - ymin + 1e-12)
    return [LiftComponent(graph, CIRCLE, r) for r in range(lo, hi + 1)]


def _scan_step(graph: LagrangianGraph) -> float:
    return min(0.01, graph.q / (64.0 * (1 + graph.harmonic_order_sum())))


def _scan_interval(comp: LiftComponent) -> tuple[float, float]:
    g = comp.parent
    if comp.kind == CIRCLE:
        return 0.0, float(g.q)
    # roots of (p/q) t + c + shift + W(t) lie where the linear part is
    # within the wiggle bound
    bound = g.wiggle_bound()
    a = g.q / g.p
    t1 = a * (-bound - g.c - comp.shift)
    t2 = a * (bound - g.c - comp.shift)
    lo, hi = min(t1, t2) - g.q, max(t1, t2) + g.q
    return lo, hi


def _refine_root(f, fprime, lo, hi, tol):
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    root = 0.5 * (lo + hi)
    # Newton polish; bisection already has us inside the basin
    for _ in range(8):
        d = fprime(root)
        if d == 0.0:
            break
        step = f(root) / d
        if not math.isfinite(step):
            break
        root -= step
        if abs(step) < tol:
            break
    return root


def zero_crossings(
    comp: LiftComponent,
    tol: float = ROOT_TOL,
    transversality_tol: float = TRANSVERSALITY_TOL,
) -> list[IntersectionPoint]:
    """All roots of the branch function on the component, sorted by t and
    classified by the sign of Y' there.

    Raises TransversalityError when a root is tangential: either |Y'| at a
    located root is at most transversality_tol, or a critical point of the
    branch sits on the zero section (an even-order touch that bracketing
    alone would miss).
    """
    f = comp.height
    fp = comp.slope
    if comp.kind == CIRCLE:
        # the harmonics drift off exact periodicity in floats (sin(2*pi*m*q)
        # is not 0), which can hide or double a root sitting on the seam;
        # evaluate periodically so f(q) == f(0) exactly
        period = comp.parent.q
        f = lambda t: comp.height(t % period)
        fp = lambda t: comp.slope(t % period)
    lo, hi = _scan_interval(comp)
    step = _scan_step(comp.parent)
    n = max(8, int(math.ceil((hi - lo) / step)))
    ts = np.linspace(lo, hi, n + 1)
    vals = f(ts)

    roots = []
    for i in range(n):
        a, b = float(vals[i]), float(vals[i + 1])
        if a == 0.0:
            roots.append(float(ts[i]))
        elif (a < 0) != (b < 0):
            roots.append(_refine_root(f, fp, float(ts[i]), float(ts[i + 1]), tol))
    if n >= 1 and float(vals[n]) == 0.0:
        roots.append(float(ts[n]))

    # critical points of the branch touching the zero section
    slopes = fp(ts)
    for i in range(n):
        a, b = float(slopes[i]), float(slopes[i + 1])
        if (a < 0) != (b < 0):
            tc = _refine_root(fp, comp.slope_derivative, float(ts[i]), float(ts[i + 1]), tol)
            if abs(f(tc)) <= TANGENCY_HEIGHT_TOL:
                raise TransversalityError(
                    f"component {comp.label}: tangential contact with the zero "
                    f"section near t = {tc:.6g}"
                )

    # dedupe (adjacent brackets can converge to one root) and wrap circles
    roots.sort()
    uniq: list[float] = []
    for r in roots:
        if comp.kind == CIRCLE:
            r = r % comp.parent.q
            # a root at the seam can refine to either side of t = q;
            # snap to 0 so both copies dedupe to one representative
            if comp.parent.q - r <= 1e-8:
                r = 0.0
        if all(abs(r - u) > 1e-8 for u in uniq):
            uniq.append(r)
    uniq.sort()

    points = []
    for r in uniq:
        d = fp(r)
        if abs(d) <= transversality_tol:
            raise TransversalityError(
                f"component {comp.label}: crossing at t = {r:.6g} has "
                f"|Y'| = {abs(d):.3g} <= {transversality_tol:g}"
            )
        points.append(IntersectionPoint(comp, float(r), +1 if d > 0 else -1))

    for prev, cur in zip(points, points[1:]):
        if prev.sign == cur.sign:
            raise NumericsError(
                f"component {comp.label}: consecutive crossings at "
                f"t = {prev.t0:.6g}, {cur.t0:.6g} have equal sign; root scan "
                "missed a crossing (reduce the scan step)"
            )
    return points


def signed_crossing_count(graph: LagrangianGraph, window: float | None = None) -> int:
    """Sum over components of (#positive - #negative) crossings; equals p."""
    total = 0
    for comp in lift_components(graph, window):
        for pt in zero_crossings(comp):
            total += pt.sign
    return total


def _signed_area(comp: LiftComponent, t_from: float, t_to: float) -> float:
    """-integral of the branch height from t_from to t_to (signed)."""
    val, err = quad(comp.height, t_from, t_to, epsabs=1e-12, epsrel=1e-12, limit=200)
    if abs(err) > 1e-9:
        warnings.warn(f"area quadrature on {comp.label} reported error {err:.2g}")
    return -val


def _make_arc(plus: IntersectionPoint, minus: IntersectionPoint, t_plus: float, t_minus: float) -> SimpleArc:
    direction = +1 if t_minus > t_plus else -1
    area = _signed_area(plus.component, t_plus, t_minus)
    return SimpleArc(plus, minus, t_plus, t_minus, direction, area)


def simple_arcs(points: list[IntersectionPoint]) -> list[SimpleArc]:
    """Arcs between adjacent (positive, negative) crossing pairs.

    points must all lie on one component and be sorted by t.  On circles the
    wrap-around pair (last point, first point + q) is included, so a circle
    with crossings [P, N] yields the two complementary arcs.
    """
    if not points:
        return []
    comp = points[0].component
    if any(pt.component != comp for pt in points):
        raise ValidationError("simple_arcs expects crossings of a single component")

    pairs = list(zip(points, points[1:], [p.t0 for p in points[1:]]))
    if comp.kind == CIRCLE and len(points) >= 2:
        pairs.append((points[-1], points[0], points[0].t0 + comp.parent.q))

    arcs = []
    for left, right, t_right in pairs:
        if left.sign == right.sign:
            # cannot occur for transversal crossings of a continuous branch
            warnings.warn(f"component {comp.label}: equal-sign adjacent crossings, skipping pair")
            continue
        if left.is_positive:
            arcs.append(_make_arc(left, right, left.t0, t_right))
        else:
            arcs.append(_make_arc(right, left, t_right, left.t0))
    return arcs


def arc_area(arc: SimpleArc) -> float:
    """Oriented area weight A of an arc, by adaptive quadrature.

    A = -integral of Y dt from the positive to the negative endpoint along
    the traversal direction; recomputed from the endpoints (arc.area holds
    the same value).
    """
    return _signed_area(arc.plus.component, arc.t_plus, arc.t_minus)
