# SPDX-License-Identifier: MIT
import math

import numpy as np
import pytest

import ergodic_rvi as er


def test_presets_listed():
    assert "lqg1d" in er.presets()


def test_solve_lqg1d_coarse():
    r = er.solve("lqg1d", h=0.1, controls=41)
    assert r["converged"]
    assert abs(r["rho"] - 1.0) < 0.1
    x = r["x"][:, 0]
    v = r["value"]
    assert v.shape == x.shape
    i0 = int(np.argmin(np.abs(x)))
    inner = np.abs(x) <= 2.0
    assert np.max(np.abs(v[inner] - v[i0] - x[inner] ** 2)) < 0.2


def test_evolve_rvi_forgets_constants():
    a = er.evolve("lqg1d", h=0.1, controls=41, T=2.0, snapshot_every=1.0, phi0=0.0)
    b = er.evolve("lqg1d", h=0.1, controls=41, T=2.0, snapshot_every=1.0, phi0=3.0)
    assert a["snapshots"].shape == b["snapshots"].shape
    t = a["times"][-1]
    gap = b["snapshots"][-1] - a["snapshots"][-1]
    assert np.max(np.abs(gap - 3.0 * math.exp(-t))) < 10 * a["dt"]


def test_bad_preset_raises_config_error():
    with pytest.raises(er.ConfigError):
        er.solve("nope")


def test_run_solve_writes_manifest(tmp_path):
    m = er.run({"mode": "pia", "problem": {"h": 0.1}, "out": str(tmp_path)})
    assert m["exit_code"] == 0
    assert (tmp_path / "manifest.json").exists()
    assert any(f["path"].endswith("value.csv") for f in m["files"])


def test_run_rejects_unknown_key(tmp_path):
    with pytest.raises(er.ConfigError):
        er.run({"out": str(tmp_path)}, overrides=["solve.bogus=1"])
