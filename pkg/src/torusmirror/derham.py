"""De Rham cohomology of twisted rapidly-decreasing sections, two ways.

The analytic route removes the negative crossings, classifies the residual
pieces (closed circles / finite intervals / half-infinite intervals with
decaying or growing weight), and reads the dimensions off the intersection
complex through the resulting exact sequence, spot-checking surjectivity
with the explicit integral solver.  The discretized route assembles the
covariant derivative on a midpoint grid per component, with the seam
matrix inserted where the lattice meets t in q*Z, and counts kernel and
cokernel through banded eigensolves.

Case tags: case1 = closed circle (no crossings); case2 = finite interval
between two negative points; case3a = interval with an infinite end and
decaying weight (slope > 0, one positive point); case3b = infinite end
with growing weight (slope < 0, no positive point).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad
from scipy.linalg import eigvals_banded

from .errors import NumericsError, UnsupportedError, ValidationError, WindowError
from .floer import RANK_TOL, build_complex, cohomology_dims, matrix_rank
from .geometry import CIRCLE, LiftComponent, lift_components, zero_crossings
from .localsys import TwistedTransport, circle_monodromy

TWO_PI = 2.0 * math.pi

CASE1 = "case1"
CASE2 = "case2"
CASE3A = "case3a"
CASE3B = "case3b"

#: |eigenvalue - 1| cutoff for the discrete loop propagator; the propagator
#: carries an O(h^2) multiplicative defect, everything else sits a factor
#: exp(pi/2) or more away for the scene families treated here
PROPAGATOR_TOL = 1e-3

#: relative singular-value cutoff for the discretized operator: the discrete
#: kernel/cokernel vectors carry O(h^2) residuals, far above floer's 1e-9
DISCRETE_RANK_TOL = 1e-5

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class ComponentCase:
    component: LiftComponent
    case: str
    a: float
    b: float
    interval: tuple[float, float]
    positives: int
    monodromy: np.ndarray | None = None


def classify_components(tt: TwistedTransport, window: float | None = None) -> list[ComponentCase]:
    """Cut every lift component at its negative crossings and classify the
    residual pieces.  a and b are the linearized weight-exponent data:
    the twisted weight behaves like exp(-(a t^2/2 + b t)) with
    a = 2*pi*slope and b = 2*pi*offset."""
    g = tt.graph
    a = TWO_PI * g.p / g.q
    cases = []
    for comp in sorted(lift_components(g, window), key=lambda c: c.shift):
        b = TWO_PI * (g.c + comp.shift)
        points = zero_crossings(comp)
        negatives = sorted(pt.t0 for pt in points if not pt.is_positive)
        n_pos = sum(1 for pt in points if pt.is_positive)
        if comp.kind == CIRCLE:
            if not points:
                cases.append(
                    ComponentCase(comp, CASE1, 0.0, b, (0.0, g.q), 0, circle_monodromy(tt.system, comp))
                )
                continue
            # alternation forces equal counts, so negatives exist here
            for lo, hi in zip(negatives, negatives[1:] + [negatives[0] + g.q]):
                cases.append(ComponentCase(comp, CASE2, 0.0, b, (lo, hi), 1))
            continue
        ends = [-math.inf] + negatives + [math.inf]
        for lo, hi in zip(ends, ends[1:]):
            if math.isfinite(lo) and math.isfinite(hi):
                cases.append(ComponentCase(comp, CASE2, a, b, (lo, hi), 1))
            elif g.p > 0:
                cases.append(ComponentCase(comp, CASE3A, a, b, (lo, hi), 1))
            else:
                cases.append(ComponentCase(comp, CASE3B, a, b, (lo, hi), 0))
    return cases


def case1_kernel_dim(case: ComponentCase, rank_tol: float = RANK_TOL) -> int:
    m = case.monodromy
    return m.shape[0] - matrix_rank(m - np.eye(m.shape[0]), rank_tol)


def _circle_candidate_shifts(tt: TwistedTransport, window: float | None = None) -> list[int]:
    """Circle shifts that can possibly carry twisted-monodromy eigenvalue 1:
    the flat eigenvalue moduli single them out regardless of any window."""
    g = tt.graph
    shifts = set()
    for lam in np.linalg.eigvals(tt.system.monodromy):
        r_real = math.log(abs(lam)) / (TWO_PI * g.q) - g.c
        r = round(r_real)
        if abs(r_real - r) <= 1e-6:
            shifts.add(r)
    return sorted(shifts)


def case3_solve(a: float, b: float, g, C: complex, xs: np.ndarray) -> tuple[np.ndarray, bool]:
    """Solve f' + (a*t + b) f = g on the sample points xs.

    Implements f(x) = exp(-phi(x)) * (integral of g*exp(phi) + C') with
    phi(t) = a t^2/2 + b t, evaluated with all exponentials shifted so no
    intermediate exceeds 1 in magnitude: the particular part anchors at the
    weight vertex -b/a for a > 0 and at the lower limit -inf for a < 0, and
    C multiplies the peak-normalized homogeneous solution
    exp(-a (x + b/a)^2 / 2).  Returns the samples and whether the solution
    decays at the infinite end(s) of its regime (always for a > 0; exactly
    when C = 0 for a < 0).
    """
    if a == 0.0:
        raise UnsupportedError("a = 0 does not occur for p != 0 asymptotics")
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or len(xs) < 2 or np.any(np.diff(xs) <= 0):
        raise ValidationError("xs must be strictly increasing samples")
    vertex = -b / a

    def phi(t):
        return 0.5 * a * t * t + b * t

    def step(x_from: float, x_to: float, j_from: complex) -> complex:
        # J(x_to) = J(x_from) e^{phi(from)-phi(to)} + int g e^{phi(t)-phi(to)}
        mid = 0.5 * (x_from + x_to)
        half = 0.5 * (x_to - x_from)
        acc = j_from * math.exp(phi(x_from) - phi(x_to))
        for w, xi in zip(_GAUSS_W, _GAUSS_X):
            t = mid + half * xi
            acc += w * half * g(t) * math.exp(phi(t) - phi(x_to))
        return acc

    j_vals = np.zeros(len(xs), dtype=complex)
    if a > 0:
        ia = int(np.argmin(np.abs(xs - vertex)))
        for i in range(ia, len(xs) - 1):
            j_vals[i + 1] = step(xs[i], xs[i + 1], j_vals[i])
        for i in range(ia, 0, -1):
            j_vals[i - 1] = step(xs[i], xs[i - 1], j_vals[i])
    else:
        def tail(t):
            return g(t) * math.exp(phi(t) - phi(xs[0]))

        re, _ = quad(lambda t: tail(t).real, -np.inf, xs[0], epsabs=1e-12, limit=300)
        im, _ = quad(lambda t: tail(t).imag, -np.inf, xs[0], epsabs=1e-12, limit=300)
        j_vals[0] = complex(re, im)
        for i in range(len(xs) - 1):
            j_vals[i + 1] = step(xs[i], xs[i + 1], j_vals[i])

    if C != 0:
        u = xs - vertex
        exponent = -0.5 * a * u * u
        with np.errstate(over="ignore"):
            j_vals = j_vals + C * np.exp(np.minimum(exponent, 709.0))
    return j_vals, bool(a > 0 or C == 0)


def _spot_check_case3(case: ComponentCase, n_rhs: int, rng: np.random.Generator) -> None:
    a, b = case.a, case.b
    vertex = -b / a
    half_width = 4.5 * max(1.0, math.sqrt(TWO_PI / abs(a)))
    xs = np.linspace(vertex - half_width, vertex + half_width, 1281)
    h = xs[1] - xs[0]
    for _ in range(n_rhs):
        alpha, beta = rng.standard_normal(2)
        center = vertex + rng.uniform(-1.0, 1.0)

        def rhs(t):
            return (alpha + beta * (t - center)) * math.exp(-2.0 * (t - center) ** 2)

        f, _ = case3_solve(a, b, rhs, C=rng.standard_normal(), xs=xs)
        df = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
        interior = slice(2, -2)
        residual = df + (a * xs[interior] + b) * f[interior] - np.array([rhs(t) for t in xs[interior]])
        scale = max(np.max(np.abs(f)), 1e-30)
        if np.max(np.abs(residual)) / scale > 1e-6:
            raise NumericsError(
                f"component {case.component.label}: surjectivity spot check failed "
                f"(residual {np.max(np.abs(residual)) / scale:.3g})"
            )


def analytic_dims(
    tt: TwistedTransport,
    window: float | None = None,
    rank_tol: float = RANK_TOL,
    spot_check: bool = True,
) -> tuple[int, int]:
    """Cohomology dimensions by the case classification.

    Finite and half-infinite decaying pieces contribute one copy of the
    fiber per positive point; the induced map to the negative points is
    exactly the intersection complex's matrix, so its cohomology gives the
    open-piece contribution.  Closed circles add (k, k) per eigenvalue-1
    block of the twisted monodromy, located through the flat eigenvalue
    moduli rather than any fixed window.
    """
    fc = build_complex(tt, window)
    h0, h1 = cohomology_dims(fc, rank_tol)

    if tt.graph.p == 0:
        for shift in _circle_candidate_shifts(tt, window):
            comp = LiftComponent(tt.graph, CIRCLE, shift)
            if zero_crossings(comp):
                continue  # crossing circles are already in the complex
            m = circle_monodromy(tt.system, comp)
            k = m.shape[0] - matrix_rank(m - np.eye(m.shape[0]), rank_tol)
            h0 += k
            h1 += k

    if spot_check:
        rng = np.random.default_rng(1728)
        case3a = [c for c in classify_components(tt, window) if c.case == CASE3A]
        for case in case3a[:2]:
            _spot_check_case3(case, n_rhs=2, rng=rng)
    return h0, h1


# -- discretized route --------------------------------------------------


def _count_banded(gram: sp.spmatrix, bandwidth: int, threshold_sq: float) -> int:
    dim = gram.shape[0]
    band = np.zeros((bandwidth + 1, dim), dtype=complex)
    for k in range(bandwidth + 1):
        diag = gram.diagonal(-k)
        band[k, : len(diag)] = diag
    vals = eigvals_banded(band, lower=True, select="v", select_range=(-1.0, threshold_sq))
    return len(vals)


def _count_small_eigs(gram: sp.spmatrix, n: int, threshold_sq: float) -> int:
    """Number of eigenvalues of the Gram matrix at or below threshold_sq.

    At most n of them can be small (the fiber dimension bounds kernel and
    cokernel), so shift-invert for the few smallest suffices; any failure
    or a non-bracketing result falls back to the full banded count."""
    dim = gram.shape[0]
    if dim <= 1500:
        return _count_banded(gram, 2 * n - 1, threshold_sq)
    try:
        vals = spla.eigsh(
            gram.tocsc(),
            k=min(4 * n + 4, dim - 2),
            sigma=-threshold_sq,
            which="LM",
            return_eigenvectors=False,
        )
        vals = np.sort(vals.real)
        if vals[-1] <= threshold_sq:
            raise NumericsError("smallest-eigenvalue search did not bracket the threshold")
        return int(np.sum(vals <= threshold_sq))
    except (spla.ArpackError, NumericsError, RuntimeError):
        return _count_banded(gram, 2 * n - 1, threshold_sq)


def _sigma_max_bound(gram: sp.spmatrix) -> float:
    row_sums = np.abs(gram).sum(axis=1)
    return math.sqrt(float(row_sums.max()))


def _assemble_line_operator(
    comp: LiftComponent, t_mono: np.ndarray, lo: float, hi: float, hp: float, res: int
) -> sp.csr_matrix:
    """Midpoint rows for D = d/dt + 2*pi*Y~ between adjacent nodes.  Nodes
    sit at lattice midpoints, so each row's center is a lattice point; where
    that point lies on q*Z the flat seam matrix multiplies the left node.
    Growing-weight ends (p < 0) get decay rows at both truncations."""
    g = comp.parent
    n = t_mono.shape[0]
    k0 = math.floor(lo / hp)
    n_nodes = int(round((hi - lo) / hp))
    lattice = k0 + 1 + np.arange(n_nodes - 1)
    ys = comp.height(lattice * hp)
    left = -1.0 / hp + math.pi * ys
    right = 1.0 / hp + math.pi * ys
    d = sp.diags(left.astype(complex), 0, shape=(n_nodes - 1, n_nodes)) + sp.diags(
        right.astype(complex), 1, shape=(n_nodes - 1, n_nodes)
    )
    d = sp.kron(d, sp.identity(n), format="lil")
    for i in np.nonzero(lattice % (g.q * res) == 0)[0]:
        d[i * n : (i + 1) * n, i * n : (i + 1) * n] = left[i] * t_mono
    d = d.tocsr()
    if g.p < 0:
        pen_left = sp.eye(n, n_nodes * n, k=0, dtype=complex, format="csr") * (1.0 / hp)
        pen_right = sp.eye(n, n_nodes * n, k=(n_nodes - 1) * n, dtype=complex, format="csr") * (1.0 / hp)
        d = sp.vstack([pen_left, d, pen_right], format="csr")
    return d


def _validate_window(comp: LiftComponent, lo: float, hi: float) -> None:
    ts = np.linspace(lo, hi, 512)
    log_w = -TWO_PI * comp.height_primitive(ts)
    if comp.parent.p < 0:
        log_w = -log_w
    needed = -math.log(1e-12)
    peak = float(np.max(log_w))
    for end in (float(log_w[0]), float(log_w[-1])):
        if peak - end < needed:
            raise WindowError(
                f"component {comp.label}: window [{lo:.3g}, {hi:.3g}] leaves "
                f"boundary weight only exp(-{peak - end:.3g}) below peak; "
                f"need exp(-{needed:.3g})"
            )


def _line_component_dims(
    comp: LiftComponent, t_mono: np.ndarray, big_t: float, hp: float, res: int, rank_tol: float
) -> tuple[int, int]:
    g = comp.parent
    vertex = -(g.c + comp.shift) * g.q / g.p
    lo, hi = vertex - big_t, vertex + big_t
    _validate_window(comp, lo, hi)
    d = _assemble_line_operator(comp, t_mono, lo, hi, hp, res)
    n = t_mono.shape[0]
    gram_cols = (d.getH() @ d).tocsr()
    gram_rows = (d @ d.getH()).tocsr()
    threshold = rank_tol * _sigma_max_bound(gram_cols)
    ker = _count_small_eigs(gram_cols, n, threshold * threshold)
    coker = _count_small_eigs(gram_rows, n, threshold * threshold)
    if d.shape[1] - ker != d.shape[0] - coker:
        raise NumericsError(
            f"component {comp.label}: kernel/cokernel counts disagree on rank "
            f"({d.shape[1]}-{ker} vs {d.shape[0]}-{coker})"
        )
    return ker, coker


def _circle_propagator_dims(comp: LiftComponent, t_mono: np.ndarray, hp: float, res: int) -> tuple[int, int]:
    g = comp.parent
    steps = g.q * res
    mids = (np.arange(steps) + 1.0) * hp  # lattice points of one loop from node at hp/2
    ys = comp.height(mids)
    log_factor = float(np.sum(np.log1p(-hp * math.pi * ys) - np.log1p(hp * math.pi * ys)))
    propagator = t_mono * math.exp(log_factor)  # exactly one seam per loop
    eigs = np.linalg.eigvals(propagator)
    k = int(np.sum(np.abs(eigs - 1.0) <= PROPAGATOR_TOL))
    return k, k


def discretized_dims(
    tt: TwistedTransport,
    h: float = 1.0 / 512,
    big_t: float = 6.0,
    rank_tol: float = DISCRETE_RANK_TOL,
    window: float | None = None,
) -> tuple[int, int]:
    """Kernel and cokernel of the discretized covariant derivative.

    Lines live on [vertex - big_t, vertex + big_t] with nodes at lattice
    midpoints, so every seam falls exactly between two nodes; decaying ends
    need no boundary rows (p > 0), growing ends get decay rows at both
    truncations (p < 0).  Circles reduce to the discrete loop propagator,
    counting eigenvalues within PROPAGATOR_TOL of 1.
    """
    if h > 1e-2:
        raise ValidationError(f"grid step h = {h} too coarse; need h <= 1e-2")
    res = round(1.0 / h)
    hp = 1.0 / res
    t_mono = tt.system.monodromy
    h0 = h1 = 0
    if tt.graph.p != 0:
        for comp in tt.components(window):
            ker, coker = _line_component_dims(comp, t_mono, big_t, hp, res, rank_tol)
            h0 += ker
            h1 += coker
    else:
        shifts = {c.shift for c in tt.components(window)}
        shifts.update(_circle_candidate_shifts(tt))
        for shift in sorted(shifts):
            comp = LiftComponent(tt.graph, CIRCLE, shift)
            ker, coker = _circle_propagator_dims(comp, t_mono, hp, res)
            h0 += ker
            h1 += coker
    return h0, h1


def case_report(tt: TwistedTransport, window: float | None = None) -> list[dict]:
    out = []
    for case in classify_components(tt, window):
        entry = {
            "component": case.component.label,
            "case": case.case,
            "a": case.a,
            "b": case.b,
            "interval": [end if math.isfinite(end) else None for end in case.interval],
            "positives": case.positives,
        }
        if case.monodromy is not None:
            entry["eigenvalue_one_dim"] = case1_kernel_dim(case)
        out.append(entry)
    return out
