import dataclasses

import numpy as np
import pytest

from epsstar.errors import DomainError
from epsstar.simulation import (
    METHODS,
    SimConfig,
    check_properties,
    is_finite_result,
    render_svg,
    rows_to_csv,
    run_identity_experiment,
    run_shift_experiment,
    true_epsilon_star_gamma,
)

SMALL = SimConfig(d_values=(0, 1), n_values=(500, 2000), repeats=2, seed=5, ecdf_grid=20_000)


def test_cardinality_and_order():
    cfg = SimConfig(d_values=(0,), n_values=(1000,), repeats=2, seed=1)
    res = run_shift_experiment(cfg)
    assert len(res.rows) == 6
    assert [r["method"] for r in res.rows[:3]] == list(METHODS)
    assert is_finite_result(res)


def test_deterministic_and_parallel_equal():
    a = rows_to_csv(run_shift_experiment(SMALL))
    b = rows_to_csv(run_shift_experiment(SMALL))
    c = rows_to_csv(run_shift_experiment(SMALL, workers=2))
    assert a == b == c


def test_true_cdf_constant_across_repeats():
    res = run_shift_experiment(SMALL)
    v = res.values(1, 500, "true_cdf")
    assert np.all(v == true_epsilon_star_gamma(2, 5, 1, 1e-5))
    assert res.std(1, 500, "true_cdf") == 0.0


def test_identity_experiment_zero_truth():
    res = run_identity_experiment(dataclasses.replace(SMALL, d_values=(0, 1)))
    assert res.config.d_values == (0,)
    assert np.all(res.values(0, 500, "true_cdf") == 0.0)


def test_config_validation():
    with pytest.raises(DomainError):
        SimConfig(delta=1.5)
    with pytest.raises(DomainError):
        SimConfig(d_values=(-1,))
    with pytest.raises(DomainError):
        SimConfig(repeats=0)
    assert SimConfig().grid_for(1000) == 200_000
    assert SimConfig().grid_for(100_000) == 2_000_000


def test_properties_and_outputs():
    res = run_shift_experiment(SMALL)
    props = check_properties(res)
    assert props["true_increasing_in_d"]
    assert all(v for k, v in props.items() if k.startswith("nonnegative"))
    assert rows_to_csv(res).splitlines()[0] == "d,n,method,repeat,epsilon_star,ecdf_grid"
    assert render_svg(res).count("<polyline") == len(METHODS) * 2
    summary = res.summary()
    assert len(summary) == 2 * 2 * 3 and all(len(s["values"]) == 2 for s in summary)
