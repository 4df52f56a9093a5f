"""Domain types, derived cost/time matrices and instance assembly.

Units used throughout:

* distances in km, travel/prep/response times in hours (setup times and base
  delays are entered in minutes and converted),
* resource quantities in their natural unit (boom in ft, skimmers as a count,
  dispersant in gallons),
* station opening costs in the unit of the input file (M$ for the bundled
  instance); per-unit transfer and deployment rates are in plain currency and
  are divided by ``ModelConfig.money_scale`` before entering the objective;
  ``ModelConfig.cost_scale`` then divides the whole cost block.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySet,
    InfeasibleDataWarning,
    NegativeParameter,
    ProbabilityMassError,
    ValidationError,
)

EARTH_RADIUS_KM = 6371.0
PROBABILITY_TOL = 1e-6
WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class ResourceType:
    id: int
    name: str
    setup_time_per_unit: float  # minutes per setup unit
    unit_cost: float = 0.0
    capacity_per_unit: float = 1.0
    kind: str = ""
    # quantity that counts as one setup unit (boom is set up in 100 ft bundles)
    setup_unit_size: float = 1.0

    def __post_init__(self):
        if self.setup_time_per_unit < 0:
            raise NegativeParameter(f"resource {self.name}: negative setup time")
        if self.capacity_per_unit <= 0:
            raise NegativeParameter(f"resource {self.name}: capacity must be > 0")
        if self.setup_unit_size <= 0:
            raise NegativeParameter(f"resource {self.name}: setup_unit_size must be > 0")


@dataclass(frozen=True, eq=False)
class Station:
    id: int
    name: str
    lat: float
    lon: float
    opening_cost: float
    inventory: np.ndarray
    base_delay: float = 15.0  # minutes

    def __post_init__(self):
        object.__setattr__(self, "inventory", np.asarray(self.inventory, dtype=float))
        if self.opening_cost < 0:
            raise NegativeParameter(f"station {self.name}: negative opening cost")
        if np.any(self.inventory < 0):
            raise NegativeParameter(f"station {self.name}: negative inventory")
        if self.base_delay < 0:
            raise NegativeParameter(f"station {self.name}: negative base delay")
        _check_coords(self.lat, self.lon, f"station {self.name}")


@dataclass(frozen=True)
class SpillEvent:
    id: int
    lat: float
    lon: float
    base_volume: float
    base_esi: float

    def __post_init__(self):
        if not self.base_volume > 0:
            raise NegativeParameter(f"spill {self.id}: volume must be > 0")
        if self.base_esi < 0:
            raise NegativeParameter(f"spill {self.id}: negative ESI")
        _check_coords(self.lat, self.lon, f"spill {self.id}")


@dataclass(frozen=True, eq=False)
class Scenario:
    """One realisation of spill volumes, sensitivities and demands."""

    id: int
    probability: float
    spill_volume: np.ndarray  # (O,)
    spill_esi: np.ndarray  # (O,)
    demand: np.ndarray  # (O, R)

    def __post_init__(self):
        object.__setattr__(self, "spill_volume", np.asarray(self.spill_volume, dtype=float))
        object.__setattr__(self, "spill_esi", np.asarray(self.spill_esi, dtype=float))
        demand = np.asarray(self.demand, dtype=float)
        if demand.ndim == 1 and demand.size == 0:
            demand = demand.reshape(0, 0)
        object.__setattr__(self, "demand", demand)
        if not 0.0 < self.probability <= 1.0:
            raise ProbabilityMassError(f"scenario {self.id}: probability {self.probability} not in (0, 1]")
        if np.any(self.demand < 0):
            raise NegativeParameter(f"scenario {self.id}: negative demand")
        if np.any(self.spill_volume < 0) or np.any(self.spill_esi < 0):
            raise NegativeParameter(f"scenario {self.id}: negative volume or ESI")


@dataclass(frozen=True)
class Weights:
    omega1: float
    omega2: float
    omega3: float
    k1: float
    k2: float

    def __post_init__(self):
        parts = (self.omega1, self.omega2, self.omega3, self.k1, self.k2)
        if any(not (-WEIGHT_TOL <= p <= 1 + WEIGHT_TOL) for p in parts):
            raise ValidationError(f"weights must lie in [0, 1]: {parts}")
        if abs(self.omega1 + self.omega2 + self.omega3 - 1.0) > WEIGHT_TOL:
            raise ValidationError("omega1 + omega2 + omega3 must equal 1")
        if abs(self.k1 + self.k2 - 1.0) > WEIGHT_TOL:
            raise ValidationError("k1 + k2 must equal 1")

    @classmethod
    def from_k1(cls, k1: float, omega: Sequence[float]) -> "Weights":
        return cls(float(omega[0]), float(omega[1]), float(omega[2]), float(k1), round(1.0 - k1, 12))

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.k1, self.k2, self.omega1, self.omega2, self.omega3)


@dataclass(frozen=True)
class ModelConfig:
    n_max_stations: int
    tau_max: float  # hours
    boat_speed: float = 1.85  # km/h
    boom_ft_per_gal: float = 10.0
    dispersant_ratio: float = 1.0 / 50.0
    skimmer_shift_capacity: float = 200.0  # gallons per skimmer per shift
    transfer_alpha: float = 1.723  # currency per unit-km
    deployment_rate: float = 1.0  # currency per unit-km
    money_scale: float = 1.0e6  # currency per opening-cost unit
    cost_scale: float = 1.0  # divides the whole cost block of the objective
    eligibility_radius: float | None = None  # km; None means the travel-time rule
    distance_method: str = "haversine"

    def __post_init__(self):
        if self.n_max_stations < 0:
            raise NegativeParameter("n_max_stations must be >= 0")
        for name in ("tau_max", "boat_speed", "boom_ft_per_gal", "dispersant_ratio",
                     "skimmer_shift_capacity", "transfer_alpha", "money_scale", "cost_scale"):
            if not getattr(self, name) > 0:
                raise NegativeParameter(f"{name} must be > 0")
        if self.deployment_rate < 0:
            raise NegativeParameter("deployment_rate must be >= 0")
        if self.eligibility_radius is not None and not self.eligibility_radius > 0:
            raise NegativeParameter("eligibility_radius must be > 0")
        if self.distance_method not in ("haversine", "equirectangular"):
            raise ValidationError(f"unknown distance_method {self.distance_method!r}")


@dataclass(frozen=True, eq=False)
class DerivedMatrices:
    distance: np.ndarray  # (I, I) km
    distance_to_spill: np.ndarray  # (I, O) km
    travel_time: np.ndarray  # (I, O) h
    prep_time: np.ndarray  # (I, O, K) h
    transfer_cost: np.ndarray  # (I, I) currency per unit
    deploy_cost: np.ndarray  # (I, O) currency per unit


@dataclass(frozen=True)
class NormalizationStats:
    v_min: float
    v_max: float
    eta_min: float
    eta_max: float
    t_scale: float

    def __post_init__(self):
        if self.v_max < self.v_min or self.eta_max < self.eta_min:
            raise ValidationError("normalization range is inverted")
        if not self.t_scale > 0:
            raise NegativeParameter("t_scale must be > 0")


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    stations: tuple[Station, ...]
    spills: tuple[SpillEvent, ...]
    resources: tuple[ResourceType, ...]
    scenarios: tuple[Scenario, ...]
    pairs: frozenset[tuple[int, int]]  # (o, i)
    weights: Weights
    config: ModelConfig
    derived: DerivedMatrices
    normalization: NormalizationStats
    warnings: tuple[str, ...] = field(default=())

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def n_spills(self) -> int:
        return len(self.spills)

    @property
    def n_resources(self) -> int:
        return len(self.resources)

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])

    @property
    def volumes(self) -> np.ndarray:
        """(O, K) spill volumes."""
        return np.array([s.spill_volume for s in self.scenarios]).T.reshape(self.n_spills, self.n_scenarios)

    @property
    def esi(self) -> np.ndarray:
        return np.array([s.spill_esi for s in self.scenarios]).T.reshape(self.n_spills, self.n_scenarios)

    @property
    def demand(self) -> np.ndarray:
        """(O, K, R) demanded units."""
        d = np.array([s.demand for s in self.scenarios]).reshape(self.n_scenarios, self.n_spills, self.n_resources)
        return d.transpose(1, 0, 2)

    @property
    def inventory(self) -> np.ndarray:
        """(I, R) station inventories."""
        return np.array([s.inventory for s in self.stations]).reshape(self.n_stations, self.n_resources)

    @property
    def opening_costs(self) -> np.ndarray:
        return np.array([s.opening_cost for s in self.stations], dtype=float)

    def eligible_stations(self, o: int) -> list[int]:
        return sorted(i for (oo, i) in self.pairs if oo == o)

    def with_weights(self, weights: Weights) -> "ProblemInstance":
        return replace(self, weights=weights)

    def with_n_max(self, n: int) -> "ProblemInstance":
        return replace(self, config=replace(self.config, n_max_stations=n))

    def with_scenarios(self, scenarios: Sequence[Scenario]) -> "ProblemInstance":
        """Same network and normalization, different scenario set."""
        return build_instance(
            self.stations, self.spills, self.resources, scenarios, self.weights, self.config,
            pairs=self.pairs, normalization=self.normalization,
        )

    def single_scenario(self, k: int) -> "ProblemInstance":
        """Scenario ``k`` alone with probability 1, keeping the normalization."""
        s = self.scenarios[k]
        return self.with_scenarios([replace(s, id=0, probability=1.0)])


def _check_coords(lat: float, lon: float, what: str) -> None:
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise ValidationError(f"{what}: coordinates ({lat}, {lon}) out of range")


def haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance between two (lat, lon) points in degrees."""
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def equirectangular_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    x = (lon2 - lon1) * math.cos(0.5 * (lat1 + lat2))
    return EARTH_RADIUS_KM * math.hypot(x, lat2 - lat1)


def distance_matrix(a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]], method: str = "haversine") -> np.ndarray:
    fn = haversine_km if method == "haversine" else equirectangular_km
    out = np.zeros((len(a), len(b)))
    for i, p in enumerate(a):
        for j, q in enumerate(b):
            out[i, j] = fn(p, q)
    return out


def compute_transfer_costs(stations: Sequence[Station], alpha: float, method: str = "haversine") -> np.ndarray:
    """Per-unit transfer cost ``alpha * d_ij`` with a zero diagonal."""
    coords = [(s.lat, s.lon) for s in stations]
    d = distance_matrix(coords, coords, method)
    return transfer_costs_from_distance(d, alpha)


def transfer_costs_from_distance(distance: np.ndarray, alpha: float) -> np.ndarray:
    if not alpha > 0:
        raise NegativeParameter("alpha must be > 0")
    tc = alpha * np.asarray(distance, dtype=float)
    np.fill_diagonal(tc, 0.0)
    return tc


def compute_prep_time(base_delay: float, demand_units: Sequence[float], setup_times: Sequence[float]) -> float:
    """Mobilisation time in hours: base delay plus per-unit setup, both in minutes."""
    units = np.asarray(demand_units, dtype=float)
    st = np.asarray(setup_times, dtype=float)
    if base_delay < 0 or np.any(units < 0) or np.any(st < 0):
        raise NegativeParameter("prep time inputs must be >= 0")
    return (base_delay + float(units @ st)) / 60.0


def compute_travel_times(stations: Sequence[Station], spills: Sequence[SpillEvent], boat_speed: float,
                         method: str = "haversine") -> np.ndarray:
    if not boat_speed > 0:
        raise NegativeParameter("boat_speed must be > 0")
    d = distance_matrix([(s.lat, s.lon) for s in stations], [(o.lat, o.lon) for o in spills], method)
    return d / boat_speed


def normalization_stats(scenarios: Sequence[Scenario], tau_max: float) -> NormalizationStats:
    v = np.concatenate([s.spill_volume for s in scenarios]) if scenarios else np.zeros(0)
    eta = np.concatenate([s.spill_esi for s in scenarios]) if scenarios else np.zeros(0)
    if v.size == 0:
        return NormalizationStats(0.0, 0.0, 0.0, 0.0, tau_max)
    return NormalizationStats(float(v.min()), float(v.max()), float(eta.min()), float(eta.max()), tau_max)


def _minmax(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi - lo <= 0.0:
        return np.ones_like(x, dtype=float)
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def normalize_coverage_terms(instance: ProblemInstance) -> tuple[np.ndarray, np.ndarray]:
    """Min-max scaled volume and ESI, each shaped (O, K).

    Degenerate ranges map to 1.0 so a uniform population still earns coverage.
    """
    ns = instance.normalization
    return (_minmax(instance.volumes, ns.v_min, ns.v_max),
            _minmax(instance.esi, ns.eta_min, ns.eta_max))


def prep_time_tensor(stations: Sequence[Station], resources: Sequence[ResourceType],
                     scenarios: Sequence[Scenario], n_spills: int) -> np.ndarray:
    """(I, O, K) preparation hours using each spill's demand in each scenario."""
    st = np.array([r.setup_time_per_unit for r in resources], dtype=float)
    size = np.array([r.setup_unit_size for r in resources], dtype=float)
    out = np.zeros((len(stations), n_spills, len(scenarios)))
    for k, sc in enumerate(scenarios):
        setup_min = (sc.demand / size) @ st if n_spills else np.zeros(0)
        for i, s in enumerate(stations):
            out[i, :, k] = (s.base_delay + setup_min) / 60.0
    return out


def build_instance(
    stations: Sequence[Station],
    spills: Sequence[SpillEvent],
    resources: Sequence[ResourceType],
    scenarios: Sequence[Scenario],
    weights: Weights,
    config: ModelConfig,
    pairs: Sequence[tuple[int, int]] | frozenset | None = None,
    normalization: NormalizationStats | None = None,
) -> ProblemInstance:
    """Validate inputs and assemble a :class:`ProblemInstance`.

    ``pairs`` is an explicit eligibility list of ``(spill, station)`` indices;
    without it a pair is eligible when the station lies inside
    ``config.eligibility_radius`` or, if no radius is set, when the boat travel
    time does not exceed ``config.tau_max``.
    """
    stations, spills, resources, scenarios = tuple(stations), tuple(spills), tuple(resources), tuple(scenarios)
    if not stations:
        raise EmptySet("no stations")
    if not resources:
        raise EmptySet("no resource types")
    if not scenarios:
        raise EmptySet("no scenarios")
    n_i, n_o, n_r = len(stations), len(spills), len(resources)

    for s in stations:
        if s.inventory.shape != (n_r,):
            raise DimensionMismatch(f"station {s.name}: inventory has shape {s.inventory.shape}, expected ({n_r},)")
    for sc in scenarios:
        if sc.spill_volume.shape != (n_o,) or sc.spill_esi.shape != (n_o,):
            raise DimensionMismatch(f"scenario {sc.id}: spill arrays must have length {n_o}")
        if sc.demand.shape != (n_o, n_r):
            raise DimensionMismatch(f"scenario {sc.id}: demand has shape {sc.demand.shape}, expected ({n_o}, {n_r})")
    mass = sum(sc.probability for sc in scenarios)
    if abs(mass - 1.0) > PROBABILITY_TOL:
        raise ProbabilityMassError(f"scenario probabilities sum to {mass:.9f}, expected 1")

    method = config.distance_method
    st_coords = [(s.lat, s.lon) for s in stations]
    sp_coords = [(o.lat, o.lon) for o in spills]
    dist = distance_matrix(st_coords, st_coords, method)
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)
    d_spill = distance_matrix(st_coords, sp_coords, method).reshape(n_i, n_o)
    theta = d_spill / config.boat_speed
    derived = DerivedMatrices(
        distance=dist,
        distance_to_spill=d_spill,
        travel_time=theta,
        prep_time=prep_time_tensor(stations, resources, scenarios, n_o),
        transfer_cost=transfer_costs_from_distance(dist, config.transfer_alpha),
        deploy_cost=config.deployment_rate * d_spill,
    )

    if pairs is None:
        if config.eligibility_radius is not None:
            mask = d_spill <= config.eligibility_radius
        else:
            mask = theta <= config.tau_max
        pair_set = frozenset((o, i) for i in range(n_i) for o in range(n_o) if mask[i, o])
    else:
        pair_set = frozenset((int(o), int(i)) for o, i in pairs)
        bad = [(o, i) for o, i in pair_set if not (0 <= o < n_o and 0 <= i < n_i)]
        if bad:
            raise DimensionMismatch(f"eligibility pairs reference unknown indices: {sorted(bad)[:5]}")

    notes = []
    for k, sc in enumerate(scenarios):
        for o in range(n_o):
            if not np.any(sc.demand[o] > 0):
                notes.append(f"spill {spills[o].id} has zero demand in scenario {sc.id}")
    unreachable = []
    for k in range(len(scenarios)):
        for o in range(n_o):
            elig = [i for i in range(n_i) if (o, i) in pair_set]
            if not any(theta[i, o] + derived.prep_time[i, o, k] <= config.tau_max for i in elig):
                unreachable.append((o, k))
    if unreachable:
        msg = f"{len(unreachable)} spill-scenario pairs cannot be reached within tau_max"
        notes.append(msg)
        warnings.warn(msg, InfeasibleDataWarning, stacklevel=2)

    return ProblemInstance(
        stations=stations,
        spills=spills,
        resources=resources,
        scenarios=scenarios,
        pairs=pair_set,
        weights=weights,
        config=config,
        derived=derived,
        normalization=normalization or normalization_stats(scenarios, config.tau_max),
        warnings=tuple(notes),
    )

