import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xmkt.errors import DomainError
from xmkt.valuation import (PiecewisePolynomial, argmax_polynomial, common_breakpoints,
                            cumulative_coefficients, evaluate, integrate, scale)

ONE_MINUS_T = PiecewisePolynomial.polynomial([1.0, -1.0])
STEP = PiecewisePolynomial((0.0, 0.5, 1.0), ((0.0, 2.0), (1.0,)))


@st.composite
def piecewise(draw, max_pieces=4, max_degree=4):
    """Random nonnegative piecewise polynomial: shifted products of squares stay >= 0."""
    k = draw(st.integers(1, max_pieces))
    cuts = sorted(draw(st.lists(st.floats(0.02, 0.98), min_size=k - 1, max_size=k - 1, unique=True)))
    if any(b - a < 1e-3 for a, b in zip(cuts, cuts[1:])):
        cuts = list(np.linspace(0, 1, k + 1)[1:-1])
    pieces = []
    for _ in range(k):
        deg = draw(st.integers(0, max_degree // 2))
        roots = draw(st.lists(st.floats(-1, 2), min_size=deg, max_size=deg))
        c = np.polynomial.polynomial.polyfromroots(roots) if roots else np.array([1.0])
        sq = np.polynomial.polynomial.polymul(c, c)
        sq[0] += draw(st.floats(0, 3))
        pieces.append(tuple(draw(st.floats(0.1, 5)) * sq))
    return PiecewisePolynomial((0.0, *cuts, 1.0), tuple(pieces))


def simpson(pp, a, b, panels=10_000):
    z = np.linspace(a, b, 2 * panels + 1)
    f = np.array([evaluate(pp, t) for t in z])
    h = (b - a) / (2 * panels)
    return h / 3 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum())


class TestEvaluate:
    def test_examples(self):
        assert evaluate(ONE_MINUS_T, 0.5) == 0.5
        assert evaluate(PiecewisePolynomial.constant(1.0), 0.3) == 1.0

    def test_right_piece_at_interior_breakpoint(self):
        assert evaluate(STEP, 0.5) == 1.0
        assert evaluate(STEP, 0.49) == pytest.approx(0.98)

    def test_last_piece_at_one(self):
        assert evaluate(STEP, 1.0) == 1.0

    @pytest.mark.parametrize("t", [-0.1, 1.0000001])
    def test_outside_unit_interval(self, t):
        with pytest.raises(DomainError):
            evaluate(ONE_MINUS_T, t)


class TestConstruction:
    def test_rejects_negative_piece(self):
        with pytest.raises(DomainError, match="negative"):
            PiecewisePolynomial.polynomial([0.5, -1.0])

    def test_rejects_dip_inside_piece(self):
        # (t - 0.5)^2 - 0.01 dips below zero only near the middle
        with pytest.raises(DomainError):
            PiecewisePolynomial.polynomial([0.24, -1.0, 1.0])

    @pytest.mark.parametrize("bps, pieces", [
        ((0.1, 1.0), ((1.0,),)),
        ((0.0, 0.9), ((1.0,),)),
        ((0.0, 0.5, 0.5, 1.0), ((1.0,), (1.0,), (1.0,))),
        ((0.0, 0.5, 1.0), ((1.0,),)),
    ])
    def test_rejects_bad_layout(self, bps, pieces):
        with pytest.raises(DomainError):
            PiecewisePolynomial(bps, pieces)

    def test_round_trip(self):
        d = {"breakpoints": [0, 1], "pieces": [[1, -1]]}
        assert PiecewisePolynomial.from_dict(d) == ONE_MINUS_T
        assert PiecewisePolynomial.from_dict(STEP.to_dict()) == STEP

    @settings(max_examples=50, deadline=None)
    @given(piecewise(), st.data())
    def test_nonnegative_at_random_points(self, pp, data):
        ts = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1))).random(1000)
        assert min(evaluate(pp, t) for t in ts) >= -1e-12


class TestIntegrate:
    def test_examples(self):
        assert integrate(ONE_MINUS_T, 0, 1) == 0.5
        assert integrate(ONE_MINUS_T, 0, 0.975) == pytest.approx(0.975 - 0.975**2 / 2, abs=1e-15)
        assert integrate(STEP, 0.3, 0.3) == 0.0

    def test_reversed_interval(self):
        with pytest.raises(DomainError):
            integrate(ONE_MINUS_T, 0.6, 0.4)

    @settings(max_examples=60, deadline=None)
    @given(piecewise(), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_additive(self, pp, x, y, z):
        a, c, b = sorted((x, y, z))
        assert integrate(pp, a, b) == pytest.approx(integrate(pp, a, c) + integrate(pp, c, b), abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(piecewise())
    def test_matches_composite_simpson(self, pp):
        # Simpson is exact per panel for cubics; panels straddling a breakpoint
        # are the only error source, so split there.
        pts = pp.breakpoints
        approx = sum(simpson(pp, a, b - 1e-15 if b < 1 else b, 10_000 // len(pp.pieces) + 1)
                     for a, b in zip(pts, pts[1:]))
        assert integrate(pp, 0.0, 1.0) == pytest.approx(approx, abs=1e-8)

    def test_plain_simpson_on_smooth_quartic(self):
        pp = PiecewisePolynomial.polynomial([1.0, 0.0, 0.0, 0.0, 3.0])
        assert integrate(pp, 0, 1) == pytest.approx(simpson(pp, 0, 1), abs=1e-8)


class TestScale:
    def test_examples(self):
        assert integrate(scale(ONE_MINUS_T, 300), 0, 1) == 150
        assert integrate(scale(PiecewisePolynomial.constant(1), 10), 0.975, 1) == pytest.approx(0.25)
        zero = scale(ONE_MINUS_T, 0)
        assert all(evaluate(zero, t) == 0 for t in (0, 0.3, 1))

    def test_negative_factor(self):
        with pytest.raises(DomainError):
            scale(ONE_MINUS_T, -1)

    @settings(max_examples=40, deadline=None)
    @given(piecewise(), st.floats(0, 1000), st.floats(0, 1), st.floats(0, 1))
    def test_linear(self, pp, k, x, y):
        a, b = sorted((x, y))
        assert integrate(scale(pp, k), a, b) == pytest.approx(k * integrate(pp, a, b), rel=1e-12, abs=1e-9)


class TestArgmax:
    def test_examples(self):
        t, _ = argmax_polynomial([130, 170, -150], 0, 1)
        assert t == pytest.approx(17 / 30, abs=1e-12)
        assert argmax_polynomial([4.0], 0, 1) == (0.0, 4.0)
        # 200(t - t^2/2) + 5(1 - t)
        t, _ = argmax_polynomial([5, 195, -100], 0, 1)
        assert t == pytest.approx(0.975, abs=1e-12)

    def test_empty_interval(self):
        with pytest.raises(DomainError):
            argmax_polynomial([1.0], 0.6, 0.5)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-20, 20), min_size=1, max_size=5))
    def test_dense_grid_oracle(self, coeffs):
        grid = np.linspace(0, 1, 1_000_001)
        best = np.polynomial.polynomial.polyval(grid, coeffs).max()
        t, v = argmax_polynomial(coeffs, 0, 1)
        assert v == pytest.approx(best, abs=1e-9) or v > best
        assert np.polynomial.polynomial.polyval(t, coeffs) == pytest.approx(v, abs=1e-12)


class TestCumulative:
    def test_on_refined_grid(self):
        breaks = common_breakpoints([STEP], extra=[0.25, 0.75])
        assert list(breaks) == [0.0, 0.25, 0.5, 0.75, 1.0]
        cum = cumulative_coefficients(STEP, breaks)
        for j, t in enumerate([0.1, 0.3, 0.6, 0.9]):
            assert np.polynomial.polynomial.polyval(t, cum[j]) == pytest.approx(integrate(STEP, 0, t))

    def test_rejects_coarser_grid(self):
        with pytest.raises(DomainError):
            cumulative_coefficients(STEP, np.array([0.0, 1.0]))
