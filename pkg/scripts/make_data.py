"""Regenerate the bundled sample data under data/.

Every file is seeded, so rerunning reproduces identical bytes. The golden
audit is only written after the packaged supremum agrees with a 10^7-point
dense grid over the same fitted Normals.
"""
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from epsstar import AuditConfig, GammaParams, epsilon_star_audit, sample_gamma
from epsstar.fileio import atomic_write, write_losses

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


def dense_oracle(mu_p, s_p, mu_t, s_t, delta, n=10_000_000):
    """Brute-force supremum on a 10^7-point grid plus the clamp-window edges.

    The supremum over the open window is a limit at an edge whenever the
    ratio is still climbing there, so the four edge thresholds are evaluated
    with the window closed.
    """
    P, T = stats.norm(mu_p, s_p), stats.norm(mu_t, s_t)
    edges = np.array([P.ppf(delta), P.isf(delta), T.ppf(delta), T.isf(delta)])
    x = np.concatenate([np.linspace(edges.min(), edges.max(), n), edges])
    Fp, Sp, Ft, St = P.cdf(x), P.sf(x), T.cdf(x), T.sf(x)
    slack = 1e-12 * delta
    ok = (Fp >= delta - slack) & (Sp >= delta - slack) & (St >= delta - slack) & (Ft >= delta - slack)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.maximum.reduce([(Ft - delta) / Fp, (Sp - delta) / St, (St - delta) / Sp, (Fp - delta) / Ft])
    return math.log(max(1.0, float(np.max(m[ok]))))


def gamma_pair():
    write_losses(DATA / "gamma_train.csv", sample_gamma(GammaParams(2, 5), 100_000, 101))
    write_losses(DATA / "gamma_pop.csv", sample_gamma(GammaParams(5, 5), 100_000, 202))
    out = DATA / "golden_audit.json"
    subprocess.run([sys.executable, "-m", "epsstar", "audit", "--train", str(DATA / "gamma_train.csv"),
                    "--pop", str(DATA / "gamma_pop.csv"), "--delta", "1e-5", "--out", str(out)], check=True)
    doc = json.loads(out.read_text())
    d = doc["diagnostics"]
    oracle = dense_oracle(d["fit_pop"]["mu"], d["fit_pop"]["sigma"],
                          d["fit_train"]["mu"], d["fit_train"]["sigma"], doc["delta"])
    gap = abs(oracle - doc["epsilon_star"])
    print(f"golden epsilon_star {doc['epsilon_star']!r}, dense grid {oracle!r}, gap {gap:.2e}")
    if gap > 1e-6:
        out.unlink()
        raise SystemExit("golden disagrees with the dense-grid oracle; not frozen")


def normal_sample():
    write_losses(DATA / "normal_sample.csv", np.random.default_rng(303).normal(size=5000))


def landscape_set():
    folder = DATA / "landscape"
    rng = np.random.default_rng(404)
    entries = []
    for i in range(12):
        d = 3.0 * i / 11
        dp = i % 2 == 1
        # DP-tagged strategies get half the shift: less leakage, a bit less utility
        shift = d / 2 if dp else d
        utility = round(0.6 + 0.3 * (1 - math.exp(-d)) - (0.03 if dp else 0.0)
                        + float(rng.normal(0, 0.01)), 4)
        tags = {"strategy": f"s{i:02d}", "epochs": 10 + 5 * i}
        if dp:
            tags["dp_epsilon"] = 8.0
        for r in range(2):
            seed = 1000 * i + r
            tr, po = f"s{i:02d}_r{r}_train.csv", f"s{i:02d}_r{r}_pop.csv"
            write_losses(folder / tr, sample_gamma(GammaParams(2, 5), 1000, seed))
            write_losses(folder / po, sample_gamma(GammaParams(2 + shift, 5), 1000, seed + 500))
            entries.append({"model_id": f"s{i:02d}_r{r}", "train": tr, "pop": po,
                            "utility": utility, "tags": tags})
    atomic_write(folder / "manifest.json", json.dumps({"entries": entries}, indent=2) + "\n")


def mechanism_set():
    folder = DATA / "mechanism"
    entries = []
    for j in range(5):
        tr, po = f"m{j}_train.csv", f"m{j}_pop.csv"
        write_losses(folder / tr, sample_gamma(GammaParams(2, 5), 2000, 7000 + j))
        write_losses(folder / po, sample_gamma(GammaParams(3, 5), 2000, 8000 + j))
        entries.append({"model_id": f"m{j}", "train": tr, "pop": po})
    atomic_write(folder / "manifest.json", json.dumps({"entries": entries}, indent=2) + "\n")


if __name__ == "__main__":
    DATA.mkdir(exist_ok=True)
    gamma_pair()
    normal_sample()
    landscape_set()
    mechanism_set()
