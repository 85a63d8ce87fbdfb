"""Smoke test of the Python bindings against closed forms computed with numpy.

Build and install first:
    pip install --no-build-isolation -e crates/pathtrans-py
Then run:
    python3 python/smoke_test.py   (or pytest python/)
"""

import json
import math

import numpy as np

import pathtrans


def rot2(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rodrigues(w):
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    k = np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    if theta == 0.0:
        return np.eye(3)
    k /= theta
    return np.eye(3) + math.sin(theta) * k + (1.0 - math.cos(theta)) * k @ k


def test_exp_matches_closed_forms():
    assert np.allclose(pathtrans.exp("so2", [0.7]), rot2(0.7), atol=1e-14)
    w = [0.3, -0.2, 0.5]
    assert np.allclose(pathtrans.exp("so3", w), rodrigues(w), atol=1e-14)
    assert np.allclose(pathtrans.exp("transl2", [1.5, -2.0]), [[1.5], [-2.0]], atol=0)


def test_log_inverts_exp():
    w = [0.4, 0.1, -0.3]
    assert np.allclose(pathtrans.log("so3", rodrigues(w).tolist()), w, atol=1e-13)


def test_log_outside_radius_raises():
    try:
        pathtrans.log("so3", rodrigues([0.0, 0.0, 3.0]).tolist())
    except ValueError as e:
        assert "log" in str(e)
    else:
        raise AssertionError("expected ValueError")


def test_crossed_modules():
    assert pathtrans.crossed_module_residual("conj:so3") < 1e-9
    assert pathtrans.crossed_module_residual("vec:so2x2", samples=50, seed=7) < 1e-9


def test_constant_connection_lift():
    # A = xi dx1 with xi = e1 in so(2): along the x1-axis from 0 to 1 the
    # fiber solves g' = -A(x') g, so the terminal fiber is exp(-xi).
    t, x, g = pathtrans.horizontal_lift("so2", "const:e1:1", "segment:0,0:1,0", intervals=100)
    assert len(t) == len(x) == len(g) == 101
    assert np.allclose(x[-1], [1.0, 0.0], atol=1e-15)
    assert np.allclose(g[-1], rot2(-1.0), atol=1e-12)


def test_abelian_holonomy_is_flux():
    # A = x1 dx2 xi in so(2) has curvature xi dx1^dx2; a square of side 0.5
    # encloses flux 0.25, so the holonomy is a rotation by -0.25.
    h = pathtrans.loop_holonomy("so2", "x1dx2:e1", "square-loop:0.5")
    assert np.allclose(h, rot2(-0.25), atol=1e-10)


def test_scenario_commands():
    scenario = '[module]\nid = "conj:so3"\n\n[verify]\nsamples = 10\n'
    report = json.loads(pathtrans.verify(scenario, "lie"))
    assert report["pass"] is True
    assert {c["id"] for c in report["checks"]} >= {"lie.peiffer", "lie.exp_log"}
    sheet = '[module]\nid = "conj:transl1"\n\n[forms]\nb0 = "area:e1"\n\n[paths]\nfamily = "sheet:0,0:1,1"\n'
    run = json.loads(pathtrans.run(sheet, "transport"))
    assert abs(run["values"]["a_final"][0][0] - 1.0) < 1e-8
    try:
        pathtrans.verify('[module]\nid = "conj:so9"\n', "lie")
    except ValueError as e:
        assert "module.id" in str(e)
    else:
        raise AssertionError("expected ValueError")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok  {test.__name__}")
    print(f"{len(tests)} smoke tests passed")
