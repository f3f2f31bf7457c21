import cmath
import math

import numpy as np
import pytest

from torusmirror.errors import DecayError, UnsupportedError
from torusmirror.fourier import (
    CircleCoefficient,
    HorizontalCoefficient,
    MirrorPoint,
    ThetaSection,
    bundle_invariants,
    convolve,
    dbar_residual,
    dual_object,
    kernel,
    poincare_holonomy,
    standard_section,
    tensor_compat_check,
    theta_eval,
    unit_object,
    zero_section_of,
)
from torusmirror.geometry import lift_components
from torusmirror.localsys import LocalSystem, TwistedTransport, trivial_system

from conftest import make_graph

CANONICAL_THETA_00 = 1.0864348112133080  # sum over k of exp(-pi k^2), frozen


def canonical_object():
    return TwistedTransport(make_graph(p=1, q=1, id="canon"), trivial_system(1))


def test_kernel_values():
    assert kernel(0.0, 0.77) == pytest.approx(1.0)
    assert kernel(1.0, 0.5) == pytest.approx(-1.0)
    assert kernel(0.25, 0.5) == pytest.approx(cmath.exp(1j * math.pi / 4))


def test_mirror_point_coordinate():
    assert MirrorPoint(t=0.3, xdual=0.1).z == pytest.approx(0.1 + 0.3j)


def test_poincare_holonomy():
    assert poincare_holonomy((0, 1), (0, 1)) == pytest.approx(1.0)
    assert poincare_holonomy((0, 1), (0, 0.5)) == pytest.approx(-1.0)
    assert poincare_holonomy((0.3, 0.3), (0, 0.9)) == pytest.approx(1.0)
    # stacking two rectangles multiplies holonomies
    a = poincare_holonomy((0, 0.4), (0.1, 0.35))
    b = poincare_holonomy((0.4, 1.1), (0.1, 0.35))
    whole = poincare_holonomy((0, 1.1), (0.1, 0.35))
    assert a * b == pytest.approx(whole, abs=1e-12)


def test_canonical_theta_value():
    sec = standard_section(canonical_object())
    values, bound = theta_eval(sec, MirrorPoint(0.0, 0.0))
    # independent truncated-summation oracle
    oracle = sum(math.exp(-math.pi * k * k) for k in range(-30, 31))
    assert values.shape == (1, 1)
    assert values[0, 0] == pytest.approx(oracle, abs=1e-12)
    assert values[0, 0] == pytest.approx(CANONICAL_THETA_00, abs=1e-9)
    assert bound < 1e-9


def test_theta_quasi_periodicity(rng):
    sec = standard_section(canonical_object())
    for _ in range(20):
        t, x = rng.uniform(0.05, 0.95, size=2)
        base = theta_eval(sec, MirrorPoint(t, x)).values[0, 0]
        shifted = theta_eval(sec, MirrorPoint(t, x + 1.0)).values[0, 0]
        assert shifted == pytest.approx(cmath.exp(2j * math.pi * t) * base, abs=1e-12)


def test_theta_base_periodicity(rng):
    sec = standard_section(canonical_object())
    for _ in range(10):
        t, x = rng.uniform(0.05, 0.95, size=2)
        assert theta_eval(sec, MirrorPoint(t + 1.0, x)).values[0, 0] == pytest.approx(
            theta_eval(sec, MirrorPoint(t, x)).values[0, 0], abs=1e-12
        )


def test_theta_truncation_bound():
    tt = TwistedTransport(make_graph(p=1, q=1, c=0.2), trivial_system(1))
    for k_depth in (3, 5, 8):
        sec = ThetaSection(tt, standard_section(tt).coefficients, K=k_depth)
        sec2 = ThetaSection(tt, sec.coefficients, K=2 * k_depth)
        pt = MirrorPoint(0.3, 0.6)
        v1, bound = theta_eval(sec, pt)
        v2, _ = theta_eval(sec2, pt)
        assert abs(v2[0, 0] - v1[0, 0]) <= bound + 1e-15


def test_dbar_residual_canonical(rng):
    sec = standard_section(canonical_object())
    for _ in range(16):
        t = rng.uniform(0.1, 0.9)
        x = rng.uniform(0.0, 1.0)
        assert dbar_residual(sec, MirrorPoint(t, x), h=1e-3) <= 1e-6


def test_dbar_seam_margin():
    sec = standard_section(canonical_object())
    with pytest.raises(Exception):
        dbar_residual(sec, MirrorPoint(1e-4, 0.3), h=1e-3)


def test_dbar_richardson_rate():
    sec = standard_section(canonical_object())
    pt = MirrorPoint(0.37, 0.61)
    r1 = dbar_residual(sec, pt, h=0.02)
    r2 = dbar_residual(sec, pt, h=0.01)
    assert r1 / r2 >= 3.5  # at least second-order convergence


def test_dbar_on_cover_and_rank2(rng):
    g = make_graph(p=1, q=2, c=0.1, wiggle=[(1, 0.05, 0.0)])
    tt = TwistedTransport(g, LocalSystem([[0.0, 1.0], [1.0, 0.3]]))
    sec = standard_section(tt)
    for _ in range(4):
        t = rng.uniform(0.1, 0.9)
        x = rng.uniform(0.0, 1.0)
        assert dbar_residual(sec, MirrorPoint(t, x), h=1e-3) <= 1e-6


def test_gauge_transform_is_holomorphic(rng):
    # g := theta * exp(pi*xdual^2) depends on z alone; plain Cauchy-Riemann
    sec = standard_section(canonical_object())

    def g(t, x):
        return theta_eval(sec, MirrorPoint(t, x)).values[0, 0] * math.exp(math.pi * x * x)

    h = 1e-3
    for _ in range(16):
        t = rng.uniform(0.1, 0.9)
        x = rng.uniform(-0.5, 0.5)
        d_x = (g(t, x - 2 * h) - 8 * g(t, x - h) + 8 * g(t, x + h) - g(t, x + 2 * h)) / (12 * h)
        d_t = (g(t - 2 * h, x) - 8 * g(t - h, x) + 8 * g(t + h, x) - g(t + 2 * h, x)) / (12 * h)
        cr = 0.5 * (d_x + 1j * d_t)
        assert abs(cr) / abs(g(t, x)) <= 1e-6


def test_zero_section_residual():
    sec = zero_section_of(canonical_object())
    assert theta_eval(sec, MirrorPoint(0.3, 0.4)).values[0, 0] == 0.0
    assert dbar_residual(sec, MirrorPoint(0.3, 0.4)) == 0.0


def test_unit_object_theta_is_one():
    sec = standard_section(unit_object())
    for t, x in [(0.0, 0.0), (0.3, 0.7), (0.9, 0.2)]:
        values, bound = theta_eval(sec, MirrorPoint(t, x))
        assert values[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert bound == 0.0


def test_decay_refusals():
    down = TwistedTransport(make_graph(p=-1, q=1), trivial_system(1))
    with pytest.raises(DecayError):
        standard_section(down)
    offset_circle = make_graph(p=0, q=1, c=0.3)
    comp = [c for c in lift_components(offset_circle, 2.0) if c.shift == 0][0]
    with pytest.raises(DecayError):
        CircleCoefficient(trivial_system(1), comp, 0.0, [1.0])
    with pytest.raises(DecayError):
        HorizontalCoefficient(trivial_system(1), comp, 0.0, [1.0])


def test_bundle_invariants():
    cases = [
        ((1, 1, 1), (1, 1)),
        ((3, 2, 1), (2, 3)),
        ((-2, 1, 2), (2, -4)),
    ]
    for (p, q, n), (rank, degree) in cases:
        tt = TwistedTransport(make_graph(p=p, q=q), trivial_system(n))
        inv = bundle_invariants(tt)
        assert (inv.rank, inv.degree) == (rank, degree)
        assert inv.euler == inv.degree


def test_convolve_lines():
    a = TwistedTransport(make_graph(p=1, q=1, id="a"), trivial_system(1))
    b = TwistedTransport(make_graph(p=1, q=1, c=0.3, id="b"), trivial_system(1))
    (out,) = convolve(a, b)
    assert (out.graph.p, out.graph.q, out.graph.c) == (2, 1, 0.3)

    (cancel,) = convolve(a, dual_object(a))
    assert (cancel.graph.p, cancel.graph.c) == (0, 0.0)


def test_convolve_unit_is_identity():
    obj = TwistedTransport(
        make_graph(p=2, q=1, c=0.4, wiggle=[(1, 0.1, -0.2)], id="L"),
        LocalSystem([[0.5, 0.1], [0.0, 2.0]]),
    )
    (out,) = convolve(obj, unit_object(1))
    assert out.graph.p == obj.graph.p and out.graph.q == obj.graph.q
    assert out.graph.c == pytest.approx(obj.graph.c)
    assert out.graph.wiggle == obj.graph.wiggle
    assert np.allclose(out.system.monodromy, obj.system.monodromy)


def test_convolve_degree_additivity():
    a = TwistedTransport(make_graph(p=2, q=1, id="a"), trivial_system(2))
    b = TwistedTransport(make_graph(p=1, q=1, c=0.1, id="b"), trivial_system(3))
    (out,) = convolve(a, b)
    inv = bundle_invariants(out)
    assert inv.degree == 2 * 3 * (2 + 1)
    assert inv.rank == 6


def test_convolve_general_cover():
    a = TwistedTransport(make_graph(p=1, q=2, id="a"), LocalSystem([[2.0]]))
    b = TwistedTransport(
        make_graph(p=0, q=2, c=0.3, wiggle=[(1, 0.1, 0.04)], id="b"), LocalSystem([[3.0]])
    )
    outs = convolve(a, b)
    assert len(outs) == 2  # gcd(2, 2) orbits
    for delta, out in enumerate(outs):
        assert out.graph.q == 2 and out.graph.p == 1
        assert out.graph.c == pytest.approx(0.3)
        assert np.allclose(out.system.monodromy, [[6.0]])
        h = out.graph.wiggle[0]
        if delta == 0:
            assert (h.a, h.b) == pytest.approx((0.1, 0.04))
        else:
            # half-period shift negates the first harmonic
            assert (h.a, h.b) == pytest.approx((-0.1, -0.04))
    # degree recount through crossings
    from torusmirror.geometry import signed_crossing_count

    for out in outs:
        assert signed_crossing_count(out.graph) == out.graph.p


def test_convolve_disconnected_rejected():
    a = TwistedTransport(make_graph(p=1, q=2, id="a"), trivial_system(1))
    with pytest.raises(UnsupportedError):
        convolve(a, a)


def test_dual_object():
    obj = TwistedTransport(
        make_graph(p=2, q=1, c=0.1, wiggle=[(2, 0.3, -0.1)], id="L"), LocalSystem([[1j]])
    )
    d = dual_object(obj)
    assert (d.graph.p, d.graph.c) == (-2, -0.1)
    assert d.graph.wiggle[0].a == -0.3 and d.graph.wiggle[0].b == 0.1
    assert d.system.monodromy[0, 0] == pytest.approx(-1j)
    dd = dual_object(d)
    assert (dd.graph.p, dd.graph.q, dd.graph.c) == (obj.graph.p, obj.graph.q, obj.graph.c)
    assert dd.graph.wiggle == obj.graph.wiggle
    assert np.allclose(dd.system.monodromy, obj.system.monodromy)


def test_tensor_compat_canonical():
    a = canonical_object()
    b = TwistedTransport(make_graph(p=1, q=1, c=0.3, id="b"), trivial_system(1))
    assert tensor_compat_check(a, b, grid=(4, 4), K=30) <= 1e-8


def test_tensor_compat_unit():
    a = canonical_object()
    assert tensor_compat_check(a, unit_object(1), grid=(3, 3), K=25) <= 1e-12
    # symmetry under swapping the factors
    b = TwistedTransport(make_graph(p=1, q=1, c=0.25, id="b"), trivial_system(1))
    d1 = tensor_compat_check(a, b, grid=(3, 3), K=25)
    d2 = tensor_compat_check(b, a, grid=(3, 3), K=25)
    assert abs(d1 - d2) <= 1e-12


def test_tensor_compat_unsupported_shapes():
    a = TwistedTransport(make_graph(p=1, q=2, id="a"), trivial_system(1))
    with pytest.raises(UnsupportedError):
        tensor_compat_check(a, canonical_object())
    down = TwistedTransport(make_graph(p=-1, q=1, id="d"), trivial_system(1))
    with pytest.raises(UnsupportedError):
        tensor_compat_check(down, canonical_object())
