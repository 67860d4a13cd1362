"""Synthetic fixed-vs-fixed trace campaigns.

The modelled device multiplies one controlled input neuron ``x`` by the
``n_ops`` weights of the next layer. Operation ``k`` computes ``w_k * x``;
``w_0`` is the targeted weight and the remaining weights are nuisance
parameters shared by both conditions. Each operation leaks once, at its
time slot, according to the leakage model:

``hamming_weight``
    ``gain * HW(q)`` where ``q`` is the product as a Q1.7 two's complement byte.
``value``
    ``gain * w_k * x``.
``variance_only``
    Equal-mean stress case (not a model of the device): condition A leaks
    ``N(0, spread^2)``, condition B the mixture ``N(+-d, spread^2)`` with
    equal weights, so only the spread differs between the two sets.

Shuffling permutes which operation occupies which slot, jitter delays every
operation by an independent uniform integer in ``[0, jitter_bound]``, and
leaks landing on the same sample add up. Every sample gets i.i.d. Gaussian
noise around ``baseline``.

Trace ``i`` of condition ``c`` is drawn from its own stream seeded by
``(seed, c, i)``, so a campaign of ``n`` traces is a prefix of any larger
campaign with the same seed.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from adla import _backend
from adla.trace_io import TracePair, TraceSet

LEAK_MODELS = ("hamming_weight", "value", "variance_only")

_POPCOUNT = np.array([bin(v).count("1") for v in range(256)], dtype=np.float64)


class ConfigError(ValueError):
    """A scenario violates the configuration invariants."""


@dataclass(frozen=True)
class ScenarioConfig:
    n_traces: int = 1000
    n_samples: int = 64
    weight: float = 0.375
    input_a: float = 0.1
    input_b: float = 0.9
    n_ops: int = 4
    shuffle: bool = False
    jitter_bound: int = 0
    noise_sigma: float = 1.0
    leak_model: str = "hamming_weight"
    seed: int = 0
    # nuisance weights w_1 .. w_{n_ops-1}
    other_weights: tuple = (-1.0, -0.6875, 0.0625)
    slot_spacing: int = 8
    guard: int = 8
    gain: float = 2.0
    baseline: float = 0.0
    spread: float = 1.0
    mixture_offset: float = 1.0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "other_weights", tuple(float(w) for w in self.other_weights))
        # equal inputs are rejected by generate_pair unless a null experiment asks for them
        self.validate(allow_identical_inputs=True)

    def validate(self, allow_identical_inputs=False):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.n_traces >= 1, "n_traces must be >= 1")
        need(self.n_ops >= 1, "n_ops must be >= 1")
        need(self.jitter_bound >= 0, "jitter_bound must be >= 0")
        need(self.slot_spacing >= 1, "slot_spacing must be >= 1")
        need(self.guard >= 0, "guard must be >= 0")
        need(self.noise_sigma >= 0, "noise_sigma must be >= 0")
        need(self.spread >= 0, "spread must be >= 0")
        need(self.leak_model in LEAK_MODELS,
             f"leak_model must be one of {', '.join(LEAK_MODELS)}, got {self.leak_model!r}")
        need(0.0 <= self.input_a <= 1.0 and 0.0 <= self.input_b <= 1.0,
             "inputs must lie in [0, 1]")
        need(allow_identical_inputs or self.input_a != self.input_b,
             "input_a and input_b must differ")
        need(len(self.other_weights) in (0, self.n_ops - 1),
             f"other_weights needs {self.n_ops - 1} entries, got {len(self.other_weights)}")
        need(self.seed >= 0, "seed must be non-negative")
        need(self.n_samples >= self.min_samples,
             f"n_samples={self.n_samples} too small: slots, jitter and guards need {self.min_samples}")

    @property
    def slots(self) -> np.ndarray:
        """Nominal sample index of each operation slot."""
        return self.guard + self.slot_spacing * np.arange(self.n_ops)

    @property
    def min_samples(self) -> int:
        return 2 * self.guard + (self.n_ops - 1) * self.slot_spacing + 1 + self.jitter_bound

    @property
    def weights(self) -> np.ndarray:
        others = self.other_weights
        if not others and self.n_ops > 1:
            # fixed pseudo-random nuisance layer, identical for every seed
            others = np.random.default_rng(0xAD1A).uniform(-1.0, 1.0, self.n_ops - 1)
        return np.concatenate([[self.weight], np.asarray(others, dtype=np.float64)])

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


def quantize_q7(values) -> np.ndarray:
    """Products as Q1.7 two's complement bytes (round to nearest, saturate)."""
    q = np.clip(np.rint(np.asarray(values, dtype=np.float64) * 128.0), -128, 127)
    return q.astype(np.int64) & 0xFF


def leak_levels(config: ScenarioConfig, x: float) -> np.ndarray:
    """Deterministic per-operation leakage for input ``x`` (not for variance_only)."""
    products = config.weights * x
    if config.leak_model == "hamming_weight":
        return config.gain * _POPCOUNT[quantize_q7(products)]
    if config.leak_model == "value":
        return config.gain * products
    raise ConfigError("variance_only leakage is random, not a fixed level")


def _trace(config, cond, index, levels):
    rng = np.random.default_rng((config.seed, cond, index))
    k = config.n_ops
    order = rng.permutation(k) if config.shuffle else np.arange(k)
    delay = rng.integers(0, config.jitter_bound, size=k, endpoint=True) if config.jitter_bound else 0
    if config.leak_model == "variance_only":
        leaks = rng.normal(0.0, config.spread, size=k)
        if cond == 1:
            leaks += config.mixture_offset * np.where(rng.random(k) < 0.5, -1.0, 1.0)
    else:
        leaks = levels
    row = rng.normal(config.baseline, config.noise_sigma, size=config.n_samples) \
        if config.noise_sigma > 0 else np.full(config.n_samples, float(config.baseline))
    # operation j sits in slot order[j]; np.add.at so coinciding leaks sum
    np.add.at(row, config.slots[order] + delay, leaks)
    return row


def _condition(config, cond, threads):
    x = config.input_a if cond == 0 else config.input_b
    levels = None if config.leak_model == "variance_only" else leak_levels(config, x)
    out = np.empty((config.n_traces, config.n_samples))

    def fill(lo, hi):
        for i in range(lo, hi):
            out[i] = _trace(config, cond, i, levels)

    step = 256
    bounds = [(lo, min(lo + step, config.n_traces)) for lo in range(0, config.n_traces, step)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: fill(*b), bounds))
    else:
        for b in bounds:
            fill(*b)
    return out


def generate_pair(config: ScenarioConfig, allow_identical_inputs=False, threads=None) -> TracePair:
    """Simulate both fixed-input conditions of a campaign.

    ``allow_identical_inputs`` exists for null-hypothesis experiments only.
    """
    config.validate(allow_identical_inputs)
    n_threads = _backend.resolve_threads(threads)
    tag = config.label or config.leak_model
    a = TraceSet(_condition(config, 0, n_threads), f"{tag}: x={config.input_a!r}")
    b = TraceSet(_condition(config, 1, n_threads), f"{tag}: x={config.input_b!r}")
    return TracePair(a, b)


def scenario_catalog() -> dict[str, ScenarioConfig]:
    """Named presets.

    All share one four-weight layer and the input pair (0.1, 0.9), a
    representative choice. Per operation the Hamming weights are
    (2, 6, 7, 1) for input 0.1 and (4, 4, 4, 3) for 0.9: large per-slot
    differences that nearly cancel once shuffling mixes the slots.
    ``variance_only`` is an engineered stress case, not a device model.
    """
    base = ScenarioConfig()
    return {
        "unprotected": base.with_(label="unprotected"),
        "shuffled": base.with_(shuffle=True, label="shuffled"),
        "jittered": base.with_(jitter_bound=3, label="jittered"),
        "shuffled_jittered": base.with_(shuffle=True, jitter_bound=3, label="shuffled_jittered"),
        "variance_only": base.with_(leak_model="variance_only", mixture_offset=1.25,
                                    spread=0.5, noise_sigma=0.5, label="variance_only"),
    }


def preset(name: str, **changes) -> ScenarioConfig:
    catalog = scenario_catalog()
    if name not in catalog:
        raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(catalog)}")
    return catalog[name].with_(**changes) if changes else catalog[name]
