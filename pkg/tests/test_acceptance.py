"""Acceptance criteria 1-10, each at its stated tolerance.

Every criterion prints exactly one ``[criterion N] PASS|FAIL ...`` line (shown
even under captured pytest output) and then asserts. Run directly with
``python tests/test_acceptance.py`` to get just the ten lines.
"""
import json
import math
import pathlib
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats

from epsstar.distfit import NormalParams
from epsstar.epsilon_core import epsilon_star_parametric
from epsstar.goodness_of_fit import ks_two_sample
from epsstar.landscape import StrategyPoint, pareto_frontier
from epsstar.loss_model import binary_loss, multiclass_loss
from epsstar.mechanism_audit import (
    EnsembleRates,
    ensemble_from_distributions,
    epsilon_bar,
    jensen_check,
    per_model_epsilon_star,
)
from epsstar.distfit import GammaParams, fit_normal, sample_gamma
from epsstar.epsilon_core import default_t_grid
from epsstar.loss_model import transform_losses
from epsstar.simulation import SimConfig, run_identity_experiment, run_shift_experiment, true_epsilon_star_gamma

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def report(n, ok, detail, capsys=None):
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}"
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)
    return ok


def dense_grid_sup(P, T, delta, n=10_000_000):
    """Brute-force sup of the four ratios over 10^7 thresholds.

    Uniform points across the clamp window plus log-spaced tail points of both
    distributions, plus the four window edges themselves (where the open-window
    supremum is a limit).
    """
    edges = np.array([P.ppf(delta), P.isf(delta), T.ppf(delta), T.isf(delta)])
    n_tail = n // 10
    levels = np.geomspace(delta, 0.5, n_tail // 4)
    x = np.concatenate([np.linspace(edges.min(), edges.max(), n - n_tail - 4), edges,
                        P.ppf(levels), P.isf(levels), T.ppf(levels), T.isf(levels)])
    Fp, Sp, Ft, St = P.cdf(x), P.sf(x), T.cdf(x), T.sf(x)
    s = 1e-12 * delta
    ok = (Fp >= delta - s) & (Sp >= delta - s) & (St >= delta - s) & (Ft >= delta - s)
    if not ok.any():
        return 0.0, x.size
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.maximum.reduce([(Ft - delta) / Fp, (Sp - delta) / St, (St - delta) / Sp, (Fp - delta) / Ft])
    return math.log(max(1.0, float(np.max(m[ok])))), x.size


# --- criteria -------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    bad = []
    for _ in range(20):
        p = NormalParams(rng.uniform(-10, 10), rng.uniform(0.1, 5))
        for d in (0.0, 1e-5, 1e-2):
            v = epsilon_star_parametric(p, p, d).epsilon_star
            if v != 0.0:
                bad.append((p, d, v))
    dt = time.perf_counter() - t0
    return not bad and dt < 5, f"identity exact on 60 cases, {len(bad)} nonzero, {dt:.2f}s (< 5 s)"


def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst, npts = 0.0, 0
    for _ in range(20):
        mu_t = rng.uniform(-2, 2)
        mu_p = mu_t + rng.uniform(-5, 5)
        s_p, s_t = rng.uniform(0.5, 2, 2)
        got = epsilon_star_parametric(NormalParams(mu_p, s_p), NormalParams(mu_t, s_t), 1e-5).epsilon_star
        want, npts = dense_grid_sup(stats.norm(mu_p, s_p), stats.norm(mu_t, s_t), 1e-5)
        worst = max(worst, abs(got - want))
    dt = time.perf_counter() - t0
    return worst <= 1e-6 and dt < 120, (f"20 Normal pairs vs {npts:.0e}-point dense grid, "
                                        f"max |diff| = {worst:.2e} (<= 1e-6), {dt:.1f}s (< 120 s)")


_SIM_CACHE = {}


def _identity_run():
    if "id" not in _SIM_CACHE:
        _SIM_CACHE["id"] = run_identity_experiment(SimConfig(n_values=(1_000, 10_000, 100_000), repeats=10, seed=0))
    return _SIM_CACHE["id"]


def criterion_3():
    t0 = time.perf_counter()
    res = _identity_run()
    ns = (1_000, 10_000, 100_000)
    par = [res.mean(0, n, "parametric") for n in ns]
    emp = [res.mean(0, n, "ecdf") for n in ns]
    below = all(p < e for p, e in zip(par, emp))
    dec = all(a > b for a, b in zip(par, par[1:])) and all(a > b for a, b in zip(emp, emp[1:]))
    dt = time.perf_counter() - t0
    ok = below and dec and dt < 300
    return ok, (f"parametric means {[round(v, 4) for v in par]} < ecdf means {[round(v, 4) for v in emp]}: "
                f"{below}; both strictly decreasing in n: {dec}; {dt:.1f}s (< 300 s)")


def criterion_4():
    t0 = time.perf_counter()
    cfg = SimConfig(d_values=(1, 2, 3), n_values=(100_000,), repeats=10, seed=0)
    res = run_shift_experiment(cfg)
    trues = [true_epsilon_star_gamma(2, 5, d, cfg.delta) for d in (1, 2, 3)]
    inc = all(a < b for a, b in zip(trues, trues[1:]))
    parts, order_ok = [], True
    for d, tv in zip((1, 2, 3), trues):
        e, p = res.mean(d, 100_000, "ecdf"), res.mean(d, 100_000, "parametric")
        ok = e <= p <= tv + 0.1
        order_ok &= ok
        parts.append(f"d={d}: ecdf {e:.3f} <= param {p:.3f} <= true {tv:.3f}+0.1 {'ok' if ok else 'VIOLATED'}")
    dt = time.perf_counter() - t0
    return inc and order_ok and dt < 600, f"true increasing {inc}; " + "; ".join(parts) + f"; {dt:.1f}s (< 600 s)"


def _gamma_ensemble(seed, n_models, n=1000, grid=20_000, delta=1e-5):
    fits = []
    for j in range(n_models):
        ss = np.random.SeedSequence([seed, j]).spawn(2)
        tr = sample_gamma(GammaParams(2, 5), n, ss[0])
        po = sample_gamma(GammaParams(3, 5), n, ss[1])
        a, b = transform_losses(tr, po)
        fits.append((fit_normal(b.values), fit_normal(a.values)))
    return ensemble_from_distributions(fits, default_t_grid(grid, delta))


def criterion_5():
    delta = 1e-5
    worst_gap, all_hold = -np.inf, True
    for seed in range(5):
        ens = _gamma_ensemble(seed, 50)
        per = per_model_epsilon_star(ens, delta)
        eb = epsilon_bar(ens, delta)
        bound, holds = jensen_check(per, eb)
        all_hold &= holds and eb <= bound + 1e-9
        worst_gap = max(worst_gap, eb - bound)
    worst_eq = 0.0
    for seed in range(5):
        ens = _gamma_ensemble(100 + seed, 1)
        one = EnsembleRates(ens.t_grid, ens.per_model_fnr)
        eb = epsilon_bar(one, delta)
        bound, _ = jensen_check(per_model_epsilon_star(one, delta), eb)
        worst_eq = max(worst_eq, abs(eb - bound))
    ok = all_hold and worst_eq <= 1e-12
    return ok, (f"5 x 50-instance ensembles: max(eps_bar - bound) = {worst_gap:.3e} (<= 1e-9); "
                f"single-instance |eps_bar - bound| max {worst_eq:.1e} (<= 1e-12)")


def criterion_6():
    rng = np.random.default_rng(606)
    grid = (0.0, 1e-6, 1e-4, 1e-2, 0.1)
    bad = 0
    for _ in range(50):
        P = NormalParams(rng.uniform(-5, 5), rng.uniform(0.3, 3))
        T = NormalParams(rng.uniform(-5, 5), rng.uniform(0.3, 3))
        vals = [epsilon_star_parametric(P, T, d).epsilon_star for d in grid]
        bad += any(a < b for a, b in zip(vals, vals[1:]))
    return bad == 0, f"50 random Normal configs, {bad} non-monotone over delta grid {list(grid)}"


def criterion_7():
    rng = np.random.default_rng(707)
    mismatches = 0
    for _ in range(200):
        a = rng.integers(-10, 10, rng.integers(1, 51)).astype(float)
        b = rng.integers(-10, 10, rng.integers(1, 51)).astype(float)
        pts = np.concatenate([a, b])
        fa = (a[None, :] <= pts[:, None]).sum(1) / a.size
        fb = (b[None, :] <= pts[:, None]).sum(1) / b.size
        mismatches += abs(ks_two_sample(a, b).statistic_d - np.max(np.abs(fa - fb))) > 1e-15
    frac = np.mean([ks_two_sample(rng.normal(size=200), rng.normal(size=200)).p_value < 0.05
                    for _ in range(200)])
    ok = mismatches == 0 and 0.01 <= frac <= 0.12
    return ok, f"D exact on 200 small inputs ({mismatches} mismatches); H0 fraction p<0.05 = {frac:.3f} in [0.01, 0.12]"


def criterion_8():
    rng = np.random.default_rng(808)
    dom_bad = hull_bad = 0
    for k in range(50):
        if k % 2:
            u, e = rng.integers(0, 15, 100) / 15, rng.integers(0, 15, 100) / 3
        else:
            u, e = rng.uniform(0, 1, 100), rng.uniform(0, 10, 100)
        pts = [StrategyPoint(f"p{i}", u[i], e[i], e[i], e[i]) for i in range(100)]
        f = pareto_frontier(pts)
        brute = {p.id for p in pts if not any(q.utility >= p.utility and q.eps_star_mean <= p.eps_star_mean
                                              and (q.utility > p.utility or q.eps_star_mean < p.eps_star_mean)
                                              for q in pts)}
        dom_bad += set(f.dominance_set) != brute
        by = {p.id: p for p in pts}
        hull = sorted({(by[i].eps_star_mean, by[i].utility) for i in f.hull_set})
        for i in f.dominance_set:
            x, y = by[i].eps_star_mean, by[i].utility
            for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
                if x0 <= x <= x1 and x1 > x0 and y > y0 + (y1 - y0) * (x - x0) / (x1 - x0) + 1e-12:
                    hull_bad += 1
    return dom_bad == 0 and hull_bad == 0, (f"50 random 100-point landscapes: {dom_bad} dominance mismatches, "
                                            f"{hull_bad} points above hull")


def criterion_9():
    rng = np.random.default_rng(909)
    f = rng.uniform(1e-12, 1 - 1e-12, 10_000)
    anti = sum(binary_loss(x, 0) != -binary_loss(x, 1) for x in f)
    cons = 0
    for _ in range(10_000):
        c = int(rng.integers(2, 12))
        p = rng.uniform(1e-9, 1 - 1e-9, c)
        h = int(rng.integers(0, c))
        onehot = tuple(int(j == h) for j in range(c))
        want = -(math.log(p[h]) - math.log1p(-p[h]))
        cons += multiclass_loss(tuple(p), onehot) != want
        if c == 2 and h == 1:
            cons += multiclass_loss(tuple(p), onehot) != binary_loss(p[1], 1)
    return anti == 0 and cons == 0, f"antisymmetry violations {anti}/10^4, consistency violations {cons}/10^4"


def _floats_close(a, b, tol):
    if isinstance(a, float) or isinstance(b, float):
        return isinstance(a, (int, float)) and isinstance(b, (int, float)) and abs(a - b) <= tol * max(1, abs(b))
    if isinstance(a, dict):
        return isinstance(b, dict) and a.keys() == b.keys() and all(_floats_close(a[k], b[k], tol) for k in a)
    if isinstance(a, list):
        return isinstance(b, list) and len(a) == len(b) and all(_floats_close(x, y, tol) for x, y in zip(a, b))
    return a == b


def criterion_10(tmp_dir):
    out = pathlib.Path(tmp_dir) / "golden_replay.json"
    cmd = [sys.executable, "-m", "epsstar", "audit", "--train", "gamma_train.csv", "--pop", "gamma_pop.csv",
           "--delta", "1e-5", "--out", str(out)]
    subprocess.run(cmd, cwd=DATA, check=True, capture_output=True)
    got_b, want_b = out.read_bytes(), (DATA / "golden_audit.json").read_bytes()
    got, want = json.loads(got_b), json.loads(want_b)
    diff = abs(got["epsilon_star"] - want["epsilon_star"])
    same_bytes = got_b == want_b
    # across platforms libm may move the last bits; everything else must still agree
    ok = diff <= 1e-9 and (same_bytes or _floats_close(got, want, 1e-9))
    return ok, (f"golden epsilon* {want['epsilon_star']!r}, replay {got['epsilon_star']!r}, "
                f"|diff| = {diff:.1e} (<= 1e-9), byte-identical: {same_bytes}. Headline DNN values "
                "(Purchase-100, Adult) are not desk-reproducible and are not tested")


# --- pytest wrappers ------------------------------------------------------

def _check(n, fn, capsys, *args):
    ok, detail = fn(*args)
    report(n, ok, detail, capsys)
    assert ok, detail


def test_criterion_01_identity_exact(capsys):
    _check(1, criterion_1, capsys)


def test_criterion_02_dense_grid_oracle(capsys):
    _check(2, criterion_2, capsys)


def test_criterion_03_identity_experiment(capsys):
    _check(3, criterion_3, capsys)


def test_criterion_04_shift_experiment(capsys):
    _check(4, criterion_4, capsys)


def test_criterion_05_jensen_bound(capsys):
    _check(5, criterion_5, capsys)


def test_criterion_06_delta_monotone(capsys):
    _check(6, criterion_6, capsys)


def test_criterion_07_ks(capsys):
    _check(7, criterion_7, capsys)


def test_criterion_08_pareto(capsys):
    _check(8, criterion_8, capsys)


def test_criterion_09_loss_formulas(capsys):
    _check(9, criterion_9, capsys)


def test_criterion_10_golden_audit(capsys, tmp_path):
    _check(10, criterion_10, capsys, tmp_path)


if __name__ == "__main__":
    import tempfile

    results = []
    with tempfile.TemporaryDirectory() as tmp:
        for n, fn in enumerate([criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
                                criterion_7, criterion_8, criterion_9], start=1):
            results.append(report(n, *fn()))
        results.append(report(10, *criterion_10(tmp)))
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
