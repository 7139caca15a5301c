import csv
import io
import math

import numpy as np
import pytest
from conftest import ode_oracle

from digrowth.analysis import (
    classify,
    entry_growth,
    log_perron_root,
    longrun_lyapunov,
    lyapunov,
    monodromy,
    scaled_monodromy,
    simulate,
    sweep,
    threshold_search,
)
from digrowth.errors import InvalidArgumentError, NumericFailure
from digrowth.network import SystemParams, assemble


def test_monodromy_against_ode(net33):
    params = SystemParams(0.2, 3.0)
    sys_ = assemble(net33, params)
    M = monodromy(net33, params)
    for j in range(3):
        e = np.eye(3)[j]
        assert np.allclose(M[:, j], ode_oracle(sys_.segments, e), rtol=1e-9)


def test_scaled_monodromy_consistent(net33):
    params = SystemParams(0.01, 24.0)
    M, s = scaled_monodromy(net33, params)
    assert np.allclose(M * math.exp(s), monodromy(net33, params), rtol=1e-12)


def test_scaled_monodromy_extreme_period(net33):
    # e^{T/3} overflows double precision; the log form does not
    ll = log_perron_root(net33, SystemParams(0.01, 3000.0))
    assert math.isfinite(ll) and ll > 700


@pytest.mark.parametrize(
    "m, sign",
    [(1e-4, -1), (1e-3, 1), (0.01, 1), (0.1, 1), (1.0, 1), (1.2, -1)],
)
def test_section33_signs(net33, m, sign):
    rep = lyapunov(net33, SystemParams(m, 24.0))
    assert np.sign(rep.Lyapunov) == sign
    assert rep.verdict == ("source" if sign > 0 else "sink")


def test_section33_values(net33):
    rep = lyapunov(net33, SystemParams(0.01, 24.0))
    M = monodromy(net33, SystemParams(0.01, 24.0))
    assert rep.lam == pytest.approx(max(abs(np.linalg.eigvals(M))), rel=1e-10)
    assert rep.Lyapunov == pytest.approx(math.log(rep.lam) / 24.0, rel=1e-12)
    assert rep.chi == pytest.approx(1.0)


def test_longrun_matches_spectral(net33):
    params = SystemParams(0.1, 24.0)
    assert longrun_lyapunov(net33, params) == pytest.approx(log_perron_root(net33, params) / 24.0, abs=1e-10)


def test_longrun_window_removes_period_two_oscillation(e33):
    # Eigenvalues close to +-lambda make the plain norm fit alternate.
    params = SystemParams(0.5, 30.0)
    exact = log_perron_root(e33, params) / 30.0
    plain = longrun_lyapunov(e33, params, first=1000, last=2000, window=1)
    summed = longrun_lyapunov(e33, params, first=1000, last=2000)
    assert abs(plain - exact) > 1e-6
    assert abs(summed - exact) < 1e-6


def test_longrun_validation(net33):
    with pytest.raises(InvalidArgumentError):
        longrun_lyapunov(net33, SystemParams(0.1, 5.0), first=10, last=10)
    with pytest.raises(InvalidArgumentError):
        longrun_lyapunov(net33, SystemParams(0.1, 5.0), window=0)


def test_classify():
    assert classify(0.1) == "source"
    assert classify(-0.1) == "sink"
    assert classify(1e-12) == "marginal"
    assert classify(-math.inf) == "sink"


def test_entry_growth_section44(net44):
    assert entry_growth(net44, SystemParams(5.0, 10.0), 0, 0) > 1.0
    assert entry_growth(net44, SystemParams(0.01, 1.0), 0, 0) < 1.0
    with pytest.raises(InvalidArgumentError):
        entry_growth(net44, SystemParams(1.0, 1.0), 3, 0)


def test_report_with_circuit(net33):
    rep = lyapunov(net33, SystemParams(0.1, 30.0), circuits=True)
    d = rep.as_dict()
    assert d["verdict"] == "source"
    assert d["circuits"][0]["H"] <= monodromy(net33, SystemParams(0.1, 30.0)).max()


def test_numeric_failure_carries_report(net33, monkeypatch):
    from digrowth import analysis

    original = analysis.log_perron_root
    monkeypatch.setattr(
        analysis, "log_perron_root", lambda *a, **k: original(*a, **{**k, "tol": 1e-16, "maxiter": 1})
    )
    with pytest.raises(NumericFailure) as info:
        analysis.lyapunov(net33, SystemParams(1e-6, 1.0))
    assert info.value.estimate is not None
    assert info.value.report.verdict == "failed"
    assert math.isfinite(info.value.report.Lyapunov)


def test_threshold_search_section33(net33):
    res = threshold_search(net33, 24.0, 1e-5, 2.0)
    assert 2e-4 <= res.m_star <= 1.5e-3
    assert log_perron_root(net33, SystemParams(res.m_star, 24.0)) > 0
    assert log_perron_root(net33, SystemParams(res.m_star * (1 - 1e-3), 24.0)) < 0
    assert res.upper_edge == pytest.approx(1.139, rel=1e-2)


def test_threshold_search_no_growth(birds):
    res = threshold_search(birds, 0.5, 1e-3, 1e-2)
    assert res.m_star is None


def test_sweep_csv_round_trip(net33):
    grid = sweep(net33, np.geomspace(1e-4, 1.0, 4), [10.0, 24.0], threshold=True)
    rows = list(csv.DictReader(io.StringIO(grid.to_csv())))
    assert len(rows) == 8
    for row in rows:
        a = list(grid.T_values).index(float(row["T"]))
        b = list(grid.m_values).index(float(row["m"]))
        assert float(row["Lambda"]) == grid.Lambda[a, b]
        assert row["verdict"] == grid.verdict[a, b]
    th = list(csv.DictReader(io.StringIO(grid.threshold_csv())))
    assert [float(r["T"]) for r in th] == [10.0, 24.0]


def test_sweep_validation(net33):
    with pytest.raises(InvalidArgumentError):
        sweep(net33, [], [1.0])


def test_simulate_zero_migration_slopes(net33):
    traj = simulate(net33, SystemParams(0.0, 24.0), periods=1.0, dt=1.0)
    # site 1 grows during the first third, decays afterwards
    slopes = np.diff(traj.log_x[:, 0]) / np.diff(traj.t)
    assert np.allclose(slopes[:8], 1.0) and np.allclose(slopes[8:], -1.0)
    rows = list(csv.reader(io.StringIO(traj.to_csv())))
    assert rows[0] == ["t", "log_x_1", "log_x_2", "log_x_3"]
    assert float(rows[9][1]) == traj.log_x[8, 0]


def test_simulate_matches_ode(net33):
    params = SystemParams(0.3, 6.0)
    traj = simulate(net33, params, periods=2.0, dt=6.0)
    sys_ = assemble(net33, params)
    x = ode_oracle(sys_.segments * 2, np.ones(3))
    assert np.allclose(traj.log_x[-1], np.log(x), atol=1e-9)


def test_simulate_decay_section33(net33):
    traj = simulate(net33, SystemParams(1e-4, 24.0), periods=10.0)
    per = traj.log_total[:: 100]
    assert per[-1] < per[1]
    traj = simulate(net33, SystemParams(1.2, 24.0), periods=10.0)
    assert traj.log_total[-1] < traj.log_total[100]
