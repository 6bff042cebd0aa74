"""Smoke test for the numbl Python bindings.

Build and stage the extension first:

    cargo build -p numbl-py --release
    cp target/release/libnumbl_py.so python/numbl_py.so
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numbl_py as nb  # noqa: E402


def main():
    assert "ab3_five_point" in nb.Scheme.builtin_names()
    ab3 = nb.Scheme.builtin("ab3_five_point", -1.0, 0.4)
    assert (ab3.r_left, ab3.p_right, ab3.k_levels) == (2, 2, 3)
    assert all(abs(v) < 1e-12 for k, v in ab3.consistency() if k != "sum_s_alpha")
    assert abs(sum(ab3.flux()) - ab3.a) < 1e-13

    an = nb.analyze(ab3)
    assert an.all_pass
    roots = sorted(re for re, _, _ in an.disk_roots)
    assert abs(roots[0] + 0.6595) < 5e-4 and abs(roots[1] - 0.0809) < 5e-4
    assert an.disk_count_poly == an.disk_count_contour == an.predicted_count == 2

    lf = nb.Scheme.builtin("leap_frog", -1.0, 0.4)
    lfa = nb.analyze(lf)
    assert not lfa.unique_circle_root
    assert any(abs(abs(t) - math.pi) < 1e-6 for t in lfa.circle_roots)

    w, wt = nb.profile(ab3, 30)
    assert len(w) == 31 and abs(w[0] + 1.0) < 1e-12 and abs(wt[0]) < 1e-12

    sim = nb.simulate(ab3, 216, 0.5)
    assert sim.n == 270
    assert sim.corrected_l2 < sim.raw_l2
    near = lambda ref: max(abs(sim.u[j] - ref[j]) for j in range(20))
    assert near(sim.u_app) <= 0.2 * near(sim.u_int)

    conv = nb.converge(ab3, 0.125, [32, 64, 128, 256])
    assert 2.7 <= conv.raw_slope <= 3.3

    upwind = nb.Scheme(1.0, 0.5, [(-1, -1.0), (0, 1.0)], [-1.0, 1.0], [1.0])
    assert nb.analyze(upwind).predicted_count == 0

    try:
        nb.Scheme.builtin("nope", 1.0, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown scheme accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
