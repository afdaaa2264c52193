"""Paired Monte Carlo comparisons between receivers at 500 trials."""

from pathlib import Path

import numpy as np
import pytest

from tensorofdm.sim import load_config, run_sweep

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

pytestmark = pytest.mark.slow


def curves(cfg):
    return {c.receiver: c for c in run_sweep(cfg)}


@pytest.fixture(scope="module")
def uncoded_16db():
    return curves(load_config(CONFIGS / "uncoded_2x2.yaml").replace(ebn0_grid_db=(16.0,)))


@pytest.fixture(scope="module")
def matched_rate():
    kr_cfg = load_config(CONFIGS / "kr_2x2_16qam.yaml").replace(ebn0_grid_db=(12.0, 16.0, 20.0, 24.0))
    un_cfg = kr_cfg.replace(mode="uncoded", q=1, k=10, delta_k=10, constellation_order=4, receivers=("ilsp",))
    return curves(kr_cfg), curves(un_cfg)["ilsp"]


def test_ilsp_no_worse_than_zf(uncoded_16db):
    il, zf = uncoded_16db["ilsp"], uncoded_16db["zf"]
    assert il.ser()[0] <= zf.ser()[0] + 3 * il.stderr()[0]


def test_rlsp_close_to_ilsp(uncoded_16db):
    il, rl = uncoded_16db["ilsp"], uncoded_16db["rlsp"]
    assert abs(rl.ser()[0] - il.ser()[0]) <= 3 * max(rl.stderr()[0], il.stderr()[0])


def test_kr_close_to_ilsp_at_matched_rate(matched_rate):
    kr, il = matched_rate
    diff = np.abs(kr["kr"].ser() - il.ser())
    bound = 3 * np.maximum(kr["kr"].stderr(), il.stderr())
    assert np.all(diff <= bound), f"KR {kr['kr'].ser()} vs ILSP {il.ser()}"


def test_kr_ls_improves_on_kr(matched_rate):
    kr, _ = matched_rate
    assert np.all(kr["kr_ls"].ser() <= kr["kr"].ser() + 3 * kr["kr_ls"].stderr())
