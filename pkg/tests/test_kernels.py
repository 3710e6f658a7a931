import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xmkt import kernels

BACKENDS = kernels.backends()
finite = st.floats(-50, 50, allow_nan=False)


@pytest.fixture(params=sorted(BACKENDS))
def impl(request):
    return BACKENDS[request.param]


def test_compiled_backend_is_built():
    assert "compiled" in BACKENDS
    assert kernels.BACKEND in BACKENDS


def test_roots_of_known_cubic(impl):
    # (t - 0.2)(t - 0.5)(t - 0.9)
    c = np.polynomial.polynomial.polyfromroots([0.2, 0.5, 0.9])
    assert impl.poly_roots(c, 0.0, 1.0) == pytest.approx([0.2, 0.5, 0.9], abs=1e-11)
    assert impl.poly_roots(c, 0.3, 0.8) == pytest.approx([0.5], abs=1e-11)


def test_double_root_at_interval_end(impl):
    assert impl.poly_roots([0.25, -1.0, 1.0], 0.0, 0.5) == [0.5]


def test_argmax_quadratic_vertex(impl):
    t, v = impl.poly_argmax([130.0, 170.0, -150.0], 0.0, 1.0)
    assert t == pytest.approx(17 / 30, abs=1e-12)
    assert v == pytest.approx(130 + 170**2 / 600, abs=1e-9)


def test_constant_ties_to_left_end(impl):
    assert impl.poly_argmax([3.0], 0.2, 0.7) == (0.2, 3.0)


def test_degenerate_interval(impl):
    assert impl.poly_argmax([1.0, 2.0], 0.4, 0.4) == (0.4, pytest.approx(1.8))


def test_piecewise_picks_best_piece(impl):
    breaks = [0.0, 0.5, 1.0]
    # t on [0, .5), 1 - t on [.5, 1]: peak 0.5 at the breakpoint
    coefs = np.array([[0.0, 1.0], [1.0, -1.0]])
    t, v = impl.pp_argmax(breaks, coefs)
    assert (t, v) == (0.5, 0.5)


def test_degree_limit():
    impl = BACKENDS.get("compiled")
    if impl is None:
        pytest.skip("extension not built")
    with pytest.raises(ValueError):
        impl.poly_argmax([1.0] * (kernels.MAXDEG + 2), 0.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=1, max_size=6))
def test_argmax_matches_dense_grid(coeffs):
    grid = np.linspace(0.0, 1.0, 1_000_001)
    vals = np.polynomial.polynomial.polyval(grid, coeffs)
    for impl in BACKENDS.values():
        t, v = impl.poly_argmax(coeffs, 0.0, 1.0)
        assert v >= vals.max() - 1e-9
        assert np.polynomial.polynomial.polyval(t, coeffs) == pytest.approx(v, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(finite, min_size=3, max_size=3), min_size=1, max_size=4), st.data())
def test_backends_agree(rows, data):
    cuts = sorted(data.draw(st.lists(st.floats(0.01, 0.99), min_size=len(rows) - 1,
                                     max_size=len(rows) - 1, unique=True)))
    breaks = [0.0, *cuts, 1.0]
    coefs = np.array(rows)[None]
    if len(BACKENDS) < 2:
        return
    (t1,), (v1,) = BACKENDS["python"].pp_argmax_batch(breaks, coefs)
    (t2,), (v2,) = BACKENDS["compiled"].pp_argmax_batch(breaks, coefs)
    assert t1 == pytest.approx(t2, abs=1e-12)
    assert v1 == pytest.approx(v2, abs=1e-12)


def test_pure_python_fallback_end_to_end():
    import os
    import subprocess
    import sys

    code = ("from xmkt import kernels, cli\n"
            "assert kernels.BACKEND == 'python'\n"
            "raise SystemExit(cli.main(['run', '--theta', '300', '10']))\n")
    env = dict(os.environ, XMKT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert '"t_end": 0.975' in out.stdout and '"payment": 102.375' in out.stdout


def test_benchmark_runs(capsys):
    import importlib.util
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    bench.main(["--rows", "200", "--repeat", "1"])
    out = capsys.readouterr().out
    assert '"backend": "compiled"' in out and '"max_abs_t_diff": 0.0' in out
