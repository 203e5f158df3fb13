import numpy as np
import pytest

from concurrence_classes.concurrence import DEFAULT_POLICY, NormalizationPolicy, wootters_concurrence_2q
from concurrence_classes.states import densify, random_ensemble
from concurrence_classes.verify import VerifyContext, check_names, run_checks, wootters_oracle


def _ctx(**overrides) -> VerifyContext:
    params = dict(policy=DEFAULT_POLICY, seed=1234, restarts=16, iters=400, quick=True)
    params.update(overrides)
    return VerifyContext(**params)


def test_registered_checks():
    names = check_names()
    assert names[0] == "w3-worked-example"
    assert "wootters-equivalence" in names
    assert "optimizer-recovery" in names
    assert {"operator-listings", "ghz-mixture-q075"} <= set(names)
    assert len(names) == len(set(names))


def test_quick_suite_passes():
    results = run_checks(_ctx())
    failed = [(r.name, r.detail) for r in results if not r.passed]
    assert failed == []
    assert [r.name for r in results] == check_names()


def test_override_breaks_worked_example():
    ctx = _ctx(policy=NormalizationPolicy(w_override=1.0))
    by_name = {r.name: r for r in run_checks(ctx)}
    assert not by_name["w3-worked-example"].passed
    assert not by_name["ghz-mixture-q075"].passed
    assert by_name["operator-listings"].passed
    assert by_name["w-m-dur-value"].passed


def test_wootters_oracle_matches_library():
    for seed in range(20):
        rho = densify(random_ensemble(2, 1 + seed % 4, seed))
        assert wootters_oracle(rho.matrix) == pytest.approx(wootters_concurrence_2q(rho), abs=1e-7)


def test_wootters_oracle_on_bell():
    bell = np.zeros((4, 4))
    bell[0, 0] = bell[0, 3] = bell[3, 0] = bell[3, 3] = 0.5
    assert wootters_oracle(bell) == pytest.approx(1.0)
