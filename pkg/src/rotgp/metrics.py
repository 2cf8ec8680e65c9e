"""Predictive-performance metrics: errors, interval coverage, calibration.

Coverage is reported two ways, matching the two conventions in common use:
``cov68``/``cov95`` count standardized residuals inside the exact central
Gaussian intervals (|z| <= Phi^-1(0.84) and |z| <= Phi^-1(0.975)), while
``cov1sigma``/``cov2sigma`` use the plain 1-sigma/2-sigma bands. All bounds
are inclusive.
"""

import csv
import json
import os
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .gp import PredictiveResult

# Central-interval half-widths in sd units for nominal 68% and 95% mass.
Z68 = float(norm.ppf(0.84))
Z95 = float(norm.ppf(0.975))

_FIELDS = ["mae", "rmse", "cov68", "cov95", "cov1sigma", "cov2sigma",
           "std_z", "n_test"]


@dataclass
class Metrics:
    mae: float
    rmse: float
    cov68: float
    cov95: float
    cov1sigma: float
    cov2sigma: float
    std_z: float
    n_test: int

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in _FIELDS}
        out["n_test"] = int(out["n_test"])
        return out


def compute_metrics(pred: PredictiveResult, truth) -> Metrics:
    """Point errors and interval coverage of predictions against truth."""
    truth = np.atleast_1d(np.asarray(truth, dtype=float))
    mean = np.atleast_1d(np.asarray(pred.mean, dtype=float))
    var = np.atleast_1d(np.asarray(pred.var, dtype=float))
    if truth.shape != mean.shape or truth.shape != var.shape:
        raise ValueError("prediction and truth lengths do not match")
    if np.any(var <= 0.0):
        raise ValueError("zero or negative predictive variance")
    resid = truth - mean
    z = resid / np.sqrt(var)
    n = truth.size
    return Metrics(
        mae=float(np.mean(np.abs(resid))),
        rmse=float(np.sqrt(np.mean(resid ** 2))),
        cov68=float(np.mean(np.abs(z) <= Z68)),
        cov95=float(np.mean(np.abs(z) <= Z95)),
        cov1sigma=float(np.mean(np.abs(z) <= 1.0)),
        cov2sigma=float(np.mean(np.abs(z) <= 2.0)),
        std_z=float(np.std(z, ddof=1)) if n > 1 else 0.0,
        n_test=n,
    )


def write_metrics_json(path, metrics: Metrics, label: str | None = None) -> None:
    doc = metrics.to_dict()
    if label is not None:
        doc["label"] = label
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def append_ledger_row(path, metrics: Metrics, label: str) -> None:
    """Append one row to the run-ledger CSV, creating it with a header."""
    new = not os.path.exists(path)
    with open(path, "a", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if new:
            writer.writerow(["label"] + _FIELDS)
        row = metrics.to_dict()
        writer.writerow([label] + [repr(row[k]) if isinstance(row[k], float)
                                   else row[k] for k in _FIELDS])
