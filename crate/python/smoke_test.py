import math

import nonlocal_lab as nl


def test_corpus_and_field():
    assert "step1d" in nl.corpus_ids()
    u = nl.Field("step1d")
    assert u.dim == 1
    assert u([0.5]) == 1.0 and u([1.5]) == 0.0
    assert u.seminorm(1.0)["value"] == 2.0


def test_constants():
    assert nl.sphere_constant(1, 3.0)["value"] == 2.0
    assert abs(nl.sphere_constant(2, 2.0)["value"] - math.pi) < 1e-10


def test_oracle_matches_engine():
    lam = 0.25
    exact = nl.step_oracle(-0.5, 1.0, lam)["value"]
    est = nl.eval_functional(nl.Field("step1d"), "bsvy", 1.0, lam, gamma=-0.5)
    assert abs(est["value"] - exact) < 1e-6 * exact
    assert not est["diverged"]


def test_sweep_reaches_target():
    ladder = [0.2 * 0.5**j for j in range(6)]
    r = nl.sweep(nl.Field("gauss1d"), "bbm", 2.0, ladder)
    assert r["relative_gap"] < 0.02


def test_errors():
    try:
        nl.Field("nope")
    except KeyError:
        pass
    else:
        raise AssertionError("unknown field accepted")
    try:
        nl.eval_functional(nl.Field("step1d"), "bsvy", 1.0, 1.0, gamma=0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("gamma = 0 accepted")


if __name__ == "__main__":
    for name, f in list(globals().items()):
        if name.startswith("test_"):
            f()
    print("smoke test passed")
