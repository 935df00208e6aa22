import sys
import numpy as np
import pytest

from flmob.core import ChannelSnapshot, SimConfig, derive_stream
from flmob.scheduler import FairnessLedger, PolicyInput


def make_input(spectral_eff, comp, *, bw_mhz=None, counts=None, round_index=0, rho1=0.0, rho2=1.0,
               model_size_bits=1e6, seed=0, gains=None):
    """PolicyInput with pinned spectral efficiencies; gains default to the
    same ordering as ``spectral_eff``."""
    g = np.atleast_2d(np.asarray(spectral_eff, dtype=float))
    n, m = g.shape
    cfg = SimConfig(num_users=n, num_bs=m, rho1=rho1, rho2=rho2, model_size_bits=model_size_bits,
                    bs_bandwidth_mhz=tuple(bw_mhz) if bw_mhz is not None else None)
    gains = g if gains is None else np.asarray(gains, dtype=float)
    ledger = FairnessLedger(np.zeros(n, dtype=np.int64) if counts is None else np.asarray(counts), round_index)
    return PolicyInput(snapshot=ChannelSnapshot(gains=gains, distances=np.ones((n, m))),
                       comp_latencies=np.asarray(comp, dtype=float), ledger=ledger, config=cfg,
                       selection_stream=derive_stream(seed, "selection", 0), spectral_eff=g)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
