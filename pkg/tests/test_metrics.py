import csv
import json

import numpy as np
import pytest
from scipy.stats import norm

from rotgp.gp import PredictiveResult
from rotgp.metrics import (Z68, Z95, Metrics, append_ledger_row,
                           compute_metrics, write_metrics_json)


def make_pred(mean, var):
    return PredictiveResult(mean=np.asarray(mean, float),
                            var=np.asarray(var, float))


class TestComputeMetrics:
    def test_quantile_constants(self):
        assert Z68 == pytest.approx(0.994457883209753, abs=1e-12)
        assert Z95 == pytest.approx(1.959963984540054, abs=1e-12)
        assert Z68 == norm.ppf(0.84)
        assert Z95 == norm.ppf(0.975)

    def test_perfect_predictions(self):
        truth = np.array([1.0, -2.0, 0.5])
        m = compute_metrics(make_pred(truth, [0.3, 0.3, 0.3]), truth)
        assert m.mae == 0.0 and m.rmse == 0.0 and m.std_z == 0.0
        assert m.cov68 == m.cov95 == m.cov1sigma == m.cov2sigma == 1.0
        assert m.n_test == 3

    def test_boundary_residuals_are_covered(self):
        # Residuals exactly +-1 sd: inclusive coverage counts them inside
        # both the 1-sigma and 2-sigma bands.
        sd = 0.5
        truth = np.array([1.0, 1.0, 1.0, 1.0])
        mean = truth + np.array([sd, -sd, sd, -sd])
        m = compute_metrics(make_pred(mean, np.full(4, sd ** 2)), truth)
        assert m.cov1sigma == 1.0 and m.cov2sigma == 1.0
        assert m.std_z == pytest.approx(1.0, rel=0.2)
        assert m.cov68 == 0.0  # z68 < 1, so exact unit residuals fall outside

    def test_mae_never_exceeds_rmse(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(2, 100))
            truth = rng.standard_normal(n)
            mean = truth + rng.standard_normal(n) * rng.uniform(0.01, 2)
            m = compute_metrics(make_pred(mean, rng.uniform(0.1, 2, n)), truth)
            assert m.mae <= m.rmse + 1e-12
            assert m.cov68 <= m.cov95 + 1e-12
            assert m.cov1sigma <= m.cov2sigma + 1e-12

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        truth = rng.standard_normal(40)
        mean = truth + rng.standard_normal(40) * 0.3
        var = rng.uniform(0.05, 1.0, 40)
        m1 = compute_metrics(make_pred(mean, var), truth)
        p = rng.permutation(40)
        m2 = compute_metrics(make_pred(mean[p], var[p]), truth[p])
        assert m1.to_dict() == pytest.approx(m2.to_dict())

    def test_gaussian_calibration(self):
        # Residuals drawn from the claimed predictive distribution land near
        # nominal coverage.
        rng = np.random.default_rng(2)
        n = 20_000
        var = rng.uniform(0.2, 2.0, n)
        truth = rng.standard_normal(n) * np.sqrt(var)
        m = compute_metrics(make_pred(np.zeros(n), var), truth)
        assert m.cov68 == pytest.approx(0.68, abs=0.01)
        assert m.cov95 == pytest.approx(0.95, abs=0.01)
        assert m.std_z == pytest.approx(1.0, abs=0.02)

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError):
            compute_metrics(make_pred([0.0], [0.0]), [0.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            compute_metrics(make_pred([0.0, 1.0], [0.1, 0.1]), [0.0])


class TestSerialization:
    def test_flat_json(self, tmp_path):
        m = Metrics(mae=0.1, rmse=0.2, cov68=0.7, cov95=0.95, cov1sigma=0.7,
                    cov2sigma=0.96, std_z=1.01, n_test=100)
        path = tmp_path / "metrics.json"
        write_metrics_json(path, m, label="demo")
        doc = json.loads(path.read_text())
        assert doc["mae"] == 0.1 and doc["n_test"] == 100
        assert doc["label"] == "demo"
        assert all(not isinstance(v, dict) for v in doc.values())

    def test_ledger_append(self, tmp_path):
        m = Metrics(mae=0.1, rmse=0.2, cov68=0.7, cov95=0.95, cov1sigma=0.7,
                    cov2sigma=0.96, std_z=1.01, n_test=100)
        path = tmp_path / "ledger.csv"
        append_ledger_row(path, m, "run-a")
        append_ledger_row(path, m, "run-b")
        with open(path) as f:
            rows = list(csv.reader(f))
        assert rows[0][0] == "label" and "mae" in rows[0]
        assert [r[0] for r in rows[1:]] == ["run-a", "run-b"]
        assert float(rows[1][1]) == 0.1
