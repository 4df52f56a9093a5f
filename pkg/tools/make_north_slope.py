"""Regenerate the bundled ``north_slope`` example instance.

Stations, opening costs and inventories follow the published North Slope
table. The 17 spill records are synthetic: they are placed at fixed offsets
around the stations, with the eastern spills given low sensitivity scores and
the western ones high scores. Scenario probabilities are the published five.
This is a reconstruction, not ground-truth spill data.

    python tools/make_north_slope.py [output_dir]
"""
import math
import sys
from pathlib import Path

import numpy as np

from arcticspill.core_model import ModelConfig, ResourceType, SpillEvent, Station, Weights, build_instance
from arcticspill.io import bundled_instance_path, write_bundle
from arcticspill.scenarios import SamplingConfig, fit_exponential, generate_scenarios

RESOURCES = [
    ResourceType(1, "boom", 1.0, unit_cost=0.0, capacity_per_unit=1.0, kind="boom", setup_unit_size=100.0),
    ResourceType(2, "skimmer", 5.0, unit_cost=0.0, capacity_per_unit=200.0, kind="skimmer"),
    ResourceType(3, "dispersant", 0.5, unit_cost=0.0, capacity_per_unit=1.0, kind="dispersant"),
]
STATIONS = [
    Station(1, "Deadhorse", 70.1952, -148.4651, 41.25, np.array([200000.0, 30, 7000])),
    Station(2, "A4W1", 70.2508, -148.4696, 15.0, np.array([100000.0, 20, 12000])),
    Station(3, "Kuparuk", 70.33, -149.61, 11.25, np.array([80000.0, 15, 5000])),
    Station(4, "Alpine", 70.342, -150.947, 7.5, np.array([40000.0, 8, 2000])),
]
# anchor station index, km north, km east, volume (gal), ESI
LAYOUT = [
    (0, 8, 4, 420, 2), (0, -5, 12, 260, 1), (1, 10, -6, 180, 2), (1, 14, 8, 650, 2), (0, 3, -15, 90, 1),
    (2, 12, 0, 300, 8), (2, -6, -10, 520, 9), (2, 15, -4, 140, 7), (2, -10, -3, 880, 6), (2, 4, -18, 210, 10),
    (3, 10, 5, 350, 9), (3, -8, -8, 160, 10), (3, 14, -12, 720, 8), (3, 5, 16, 240, 9), (3, -12, 6, 1100, 7),
    (2, 20, -25, 400, 8), (1, -9, -14, 1500, 1),
]
PROBABILITIES = (0.3751, 0.2178, 0.0696, 0.1980, 0.1395)
SEED = 7


def spills() -> list[SpillEvent]:
    out = []
    for n, (a, dn, de, vol, esi) in enumerate(LAYOUT, start=1):
        st = STATIONS[a]
        lat = st.lat + dn / 111.195
        lon = st.lon + de / (111.195 * math.cos(math.radians(st.lat)))
        out.append(SpillEvent(n, round(lat, 4), round(lon, 4), float(vol), float(esi)))
    return out


def main(out: Path) -> None:
    sp = spills()
    cfg = ModelConfig(n_max_stations=2, tau_max=24.0, cost_scale=10.0)
    sampling = SamplingConfig(n_stochastic=4, rng_seed=SEED)
    ss = generate_scenarios(sp, fit_exponential([s.base_volume for s in sp]), sampling, PROBABILITIES, RESOURCES, cfg)
    inst = build_instance(STATIONS, sp, RESOURCES, ss.scenarios, Weights.from_k1(0.9, (0.1, 0.8, 0.1)), cfg)
    write_bundle(inst, out, sampling=sampling, provenance=ss.provenance, seed=SEED, explicit_pairs=False)
    print(f"wrote {out}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else bundled_instance_path())
