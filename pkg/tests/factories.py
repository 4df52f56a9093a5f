"""Small random instances shared by the tests."""
import warnings

import numpy as np

from arcticspill.core_model import (ModelConfig, ResourceType, Scenario, SpillEvent, Station, Weights,
                                    build_instance)


def random_instance(seed, n_i=3, n_o=3, n_k=2, n_r=2, n_max=2, k1=None):
    rng = np.random.default_rng(seed)
    res = [ResourceType(r, f"r{r}", float(rng.uniform(0, 3))) for r in range(n_r)]
    st = [Station(i, f"s{i}", 70 + rng.uniform(0, 0.3), -150 + rng.uniform(0, 1.5), float(rng.uniform(1, 40)),
                  rng.integers(0, 20, n_r).astype(float), float(rng.uniform(5, 30))) for i in range(n_i)]
    sp = [SpillEvent(o, 70 + rng.uniform(0, 0.3), -150 + rng.uniform(0, 1.5), float(rng.uniform(100, 5000)),
                     float(rng.integers(1, 11))) for o in range(n_o)]
    p = rng.dirichlet(np.ones(n_k))
    scs = [Scenario(k, float(p[k]), rng.uniform(100, 5000, n_o), rng.integers(1, 11, n_o).astype(float),
                    rng.integers(0, 12, (n_o, n_r)).astype(float)) for k in range(n_k)]
    k1 = float(rng.uniform(0.1, 0.9)) if k1 is None else k1
    w = Weights.from_k1(k1, rng.dirichlet(np.ones(3)))
    cfg = ModelConfig(n_max_stations=n_max, tau_max=float(rng.uniform(20, 60)), boat_speed=2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_instance(st, sp, res, scs, w, cfg)


def random_tiny(seed):
    """Random shape within |I| <= 3, |O| <= 4, |K| <= 3, |R| <= 2, sized for the oracle."""
    rng = np.random.default_rng(10_000 + seed)
    n_i = int(rng.integers(1, 4))
    n_o = int(rng.integers(1, 5 if n_i <= 2 else 4))
    n_k = int(rng.integers(1, 4 if n_o <= 3 else 3))
    n_r = int(rng.integers(1, 3))
    return random_instance(seed, n_i, n_o, n_k, n_r, n_max=int(rng.integers(1, n_i + 1)))


def one_by_one(volume=500.0, esi=5.0, inventory=(10.0,), demand=(4.0,), k1=1.0, omega=(0.3, 0.5, 0.2),
               tau_max=24.0, opening_cost=1.0):
    res = [ResourceType(0, "r0", 2.0)]
    st = [Station(0, "s0", 70.0, -150.0, opening_cost, np.array(inventory), 15.0)]
    sp = [SpillEvent(0, 70.05, -150.0, volume, esi)]
    sc = [Scenario(0, 1.0, [volume], [esi], [list(demand)])]
    return build_instance(st, sp, res, sc, Weights.from_k1(k1, omega), ModelConfig(1, tau_max))


def zero_spill_instance():
    res = [ResourceType(0, "r0", 1.0)]
    st = [Station(i, f"s{i}", 70.0 + 0.1 * i, -150.0, 5.0 + i, np.array([3.0])) for i in range(2)]
    sc = [Scenario(0, 1.0, np.zeros(0), np.zeros(0), np.zeros((0, 1)))]
    return build_instance(st, [], res, sc, Weights.from_k1(0.5, (0.4, 0.4, 0.2)), ModelConfig(2, 24.0))
