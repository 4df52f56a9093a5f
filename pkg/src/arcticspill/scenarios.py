"""Scenario generation: exponential fit, KS check, sampling and demand sizing.

One deterministic scenario keeps the historical records; the stochastic ones
draw volumes from the fitted exponential by inverse CDF and jitter ESI scores
multiplicatively. Samples outside ``[0.5 * min, 2 * max]`` of the history are
redrawn unless truncation is switched off.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .core_model import PROBABILITY_TOL, ModelConfig, ResourceType, Scenario, SpillEvent
from .errors import InsufficientData, NonPositiveVolume, ProbabilityMassError, SchemaError, ValidationError

SCHEMA = "arcticspill.scenarios/1"
DEMAND_KINDS = ("boom", "skimmer", "dispersant")


# -- fitting ----------------------------------------------------------------

@dataclass(frozen=True)
class FittedExponential:
    rate: float  # 1/gallons
    loc: float = 0.0
    sample_size: int = 0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValidationError("exponential rate must be > 0")

    @property
    def mean(self) -> float:
        return self.loc + 1.0 / self.rate

    def cdf(self, x) -> np.ndarray:
        z = np.maximum(np.asarray(x, dtype=float) - self.loc, 0.0)
        return -np.expm1(-self.rate * z)

    def ppf(self, u) -> np.ndarray:
        return self.loc - np.log1p(-np.asarray(u, dtype=float)) / self.rate


def fit_exponential(volumes: Sequence[float], loc: float = 0.0) -> FittedExponential:
    """Maximum-likelihood fit with a fixed location."""
    v = np.asarray(volumes, dtype=float)
    if v.size < 2:
        raise InsufficientData(f"need at least 2 volumes, got {v.size}")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise NonPositiveVolume("volumes must be finite and > 0")
    excess = v - loc
    if np.any(excess < 0) or excess.mean() <= 0:
        raise NonPositiveVolume("location exceeds the data")
    return FittedExponential(rate=1.0 / float(excess.mean()), loc=float(loc), sample_size=int(v.size))


class KsResult(NamedTuple):
    statistic: float
    p_value: float
    n: int


def kolmogorov_sf(lam: float) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam < 0.1:
        return 1.0  # 1 - sf is below 1e-100 here
    if lam < 1.18:
        # theta-function form converges fast for small arguments
        s = 0.0
        for j in range(1, 40):
            s += math.exp(-((2 * j - 1) ** 2) * math.pi ** 2 / (8 * lam * lam))
        cdf = math.sqrt(2 * math.pi) / lam * s
        return min(max(1.0 - cdf, 0.0), 1.0)
    s = 0.0
    for j in range(1, 101):
        term = (-1) ** (j - 1) * math.exp(-2 * j * j * lam * lam)
        s += term
        if abs(term) < 1e-17:
            break
    return min(max(2.0 * s, 0.0), 1.0)


def ks_test(volumes: Sequence[float], fitted: FittedExponential) -> KsResult:
    """One-sample KS statistic and asymptotic p-value against ``fitted``."""
    x = np.sort(np.asarray(volumes, dtype=float))
    n = x.size
    if n < 2:
        raise InsufficientData("KS test needs at least 2 values")
    F = fitted.cdf(x)
    i = np.arange(1, n + 1)
    d = float(max((i / n - F).max(), (F - (i - 1) / n).max()))
    d = min(max(d, 0.0), 1.0)
    return KsResult(d, kolmogorov_sf(math.sqrt(n) * d), int(n))


# -- demand sizing ----------------------------------------------------------

class DemandUnits(NamedTuple):
    boom_ft: float
    skimmers: float
    dispersant_gal: float


def derive_demands(volume: float, config: ModelConfig) -> DemandUnits:
    if volume < 0:
        raise NonPositiveVolume("volume must be >= 0")
    return DemandUnits(
        boom_ft=config.boom_ft_per_gal * volume,
        skimmers=float(math.ceil(volume / config.skimmer_shift_capacity - 1e-12)) if volume > 0 else 0.0,
        # divide by the reciprocal so volume/50 comes out bit-exact
        dispersant_gal=volume / (1.0 / config.dispersant_ratio),
    )


def demand_vector(volume: float, resources: Sequence[ResourceType], config: ModelConfig) -> np.ndarray:
    """Demand in resource order, matched on ``ResourceType.kind``."""
    units = derive_demands(volume, config)
    lookup = {"boom": units.boom_ft, "skimmer": units.skimmers, "dispersant": units.dispersant_gal}
    out = np.zeros(len(resources))
    for r, res in enumerate(resources):
        if res.kind not in lookup:
            raise ValidationError(f"resource {res.name!r}: kind must be one of {DEMAND_KINDS}, got {res.kind!r}")
        out[r] = lookup[res.kind]
    return out


# -- sampling ---------------------------------------------------------------

@dataclass(frozen=True)
class SamplingConfig:
    n_stochastic: int = 4
    rng_seed: int = 0
    esi_perturbation: float = 0.1
    validation_tol: float = 0.25
    truncate: bool = True
    truncation_bounds: tuple[float, float] = (0.5, 2.0)  # multiples of historical min and max

    def __post_init__(self):
        if self.n_stochastic < 1:
            raise ValidationError("n_stochastic must be >= 1")
        if not 0 <= self.esi_perturbation <= 1:
            raise ValidationError("esi_perturbation must lie in [0, 1]")
        if not 0 < self.validation_tol <= 1:
            raise ValidationError("validation_tol must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    scenarios: tuple[Scenario, ...]
    provenance: tuple[str, ...]
    seed: int | None = None

    def __post_init__(self):
        if len(self.scenarios) != len(self.provenance):
            raise ValidationError("one provenance label per scenario")
        if sum(p == "deterministic" for p in self.provenance) != 1:
            raise ValidationError("exactly one deterministic scenario is required")
        mass = sum(s.probability for s in self.scenarios)
        if abs(mass - 1.0) > PROBABILITY_TOL:
            raise ProbabilityMassError(f"scenario probabilities sum to {mass:.9f}")

    def __len__(self) -> int:
        return len(self.scenarios)

    @property
    def deterministic(self) -> Scenario:
        return self.scenarios[self.provenance.index("deterministic")]

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "seed": self.seed,
            "scenarios": [
                {
                    "id": s.id,
                    "probability": s.probability,
                    "provenance": p,
                    "spill_volume": s.spill_volume.tolist(),
                    "spill_esi": s.spill_esi.tolist(),
                    "demand": s.demand.tolist(),
                }
                for s, p in zip(self.scenarios, self.provenance)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioSet":
        if not isinstance(doc, dict) or "scenarios" not in doc:
            raise SchemaError("scenario document needs a 'scenarios' list")
        scs, prov = [], []
        for n, item in enumerate(doc["scenarios"]):
            missing = [k for k in ("id", "probability", "spill_volume", "spill_esi", "demand") if k not in item]
            if missing:
                raise SchemaError(f"scenario #{n}: missing field(s) {', '.join(missing)}")
            vol = np.asarray(item["spill_volume"], dtype=float)
            dem = np.asarray(item["demand"], dtype=float)
            if dem.size == 0:
                dem = dem.reshape(vol.size, 0) if vol.size == 0 else dem
            scs.append(Scenario(int(item["id"]), float(item["probability"]), vol,
                                np.asarray(item["spill_esi"], dtype=float), dem))
            prov.append(str(item.get("provenance", "deterministic" if n == 0 else "sampled")))
        return cls(tuple(scs), tuple(prov), doc.get("seed"))

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSet":
        return cls.from_dict(json.loads(text))


def _sample_volumes(rng: np.random.Generator, fitted: FittedExponential, n: int,
                    bounds: tuple[float, float] | None) -> np.ndarray:
    out = fitted.ppf(rng.random(n))
    if bounds is None:
        return out
    lo, hi = bounds
    for _ in range(10_000):
        bad = (out < lo) | (out > hi)
        if not bad.any():
            return out
        out[bad] = fitted.ppf(rng.random(int(bad.sum())))
    raise ValidationError("truncation window rejects almost every sample")


def generate_scenarios(
    historical: Sequence[SpillEvent],
    fitted: FittedExponential,
    config: SamplingConfig,
    probabilities: Sequence[float],
    resources: Sequence[ResourceType],
    model_config: ModelConfig,
) -> ScenarioSet:
    probs = [float(p) for p in probabilities]
    if len(probs) != 1 + config.n_stochastic:
        raise ProbabilityMassError(f"need {1 + config.n_stochastic} probabilities, got {len(probs)}")
    if abs(sum(probs) - 1.0) > PROBABILITY_TOL or any(p <= 0 for p in probs):
        raise ProbabilityMassError(f"probabilities must be positive and sum to 1, got {sum(probs):.9f}")
    v0 = np.array([s.base_volume for s in historical], dtype=float)
    eta0 = np.array([s.base_esi for s in historical], dtype=float)
    n_o = v0.size
    bounds = None
    if config.truncate and n_o:
        bounds = (config.truncation_bounds[0] * v0.min(), config.truncation_bounds[1] * v0.max())

    def demand(vol: np.ndarray) -> np.ndarray:
        return np.array([demand_vector(v, resources, model_config) for v in vol]).reshape(n_o, len(resources))

    rng = np.random.default_rng(config.rng_seed)
    scs = [Scenario(0, probs[0], v0.copy(), eta0.copy(), demand(v0))]
    prov = ["deterministic"]
    p = config.esi_perturbation
    for k in range(1, 1 + config.n_stochastic):
        vol = _sample_volumes(rng, fitted, n_o, bounds)
        eta = eta0 * (1.0 + rng.uniform(-p, p, n_o)) if p > 0 else eta0.copy()
        scs.append(Scenario(k, probs[k], vol, eta, demand(vol)))
        prov.append(f"sampled(seed={config.rng_seed})")
    return ScenarioSet(tuple(scs), tuple(prov), config.rng_seed)


# -- validation -------------------------------------------------------------

@dataclass
class ScenarioValidation:
    deviations: dict = field(default_factory=dict)  # name -> (mean rel. dev., std rel. dev.)
    tol: float = 0.25

    @property
    def passed(self) -> bool:
        return all(m <= self.tol and s <= self.tol for m, s in self.deviations.values())

    def failures(self) -> list[str]:
        return [k for k, (m, s) in self.deviations.items() if m > self.tol or s > self.tol]


def _rel(a: float, b: float) -> float:
    if b == 0:
        return abs(a)
    return abs(a - b) / abs(b)


def validate_scenarios(scenario_set: ScenarioSet, historical: Scenario | None = None,
                       tol: float = 0.25, resource_names: Sequence[str] | None = None) -> ScenarioValidation:
    """Compare pooled stochastic moments with the historical ones."""
    hist = historical if historical is not None else scenario_set.deterministic
    stoch = [s for s, p in zip(scenario_set.scenarios, scenario_set.provenance) if p != "deterministic"]
    if len(stoch) < 2:
        raise InsufficientData("validation needs at least 2 stochastic scenarios")
    report = ScenarioValidation(tol=tol)
    params = [("volume", lambda s: s.spill_volume), ("esi", lambda s: s.spill_esi)]
    n_r = hist.demand.shape[1] if hist.demand.ndim == 2 else 0
    for r in range(n_r):
        name = resource_names[r] if resource_names else str(r)
        params.append((f"demand[{name}]", lambda s, r=r: s.demand[:, r]))
    for name, get in params:
        pooled = np.concatenate([get(s) for s in stoch])
        h = get(hist)
        if h.size == 0:
            report.deviations[name] = (0.0, 0.0)
            continue
        report.deviations[name] = (_rel(pooled.mean(), h.mean()), _rel(pooled.std(), h.std()))
    return report
