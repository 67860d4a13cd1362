"""Detection thresholds for the t-test and the Anderson-Darling test.

The Anderson-Darling threshold is the upper ``(1 - alpha)`` quantile of the
limiting null distribution

    A2_inf = sum_{j >= 1} W_j / (j (j + 1)),   W_j iid chi^2_1,

approximated by the Pearson curve that matches its first four cumulants
``kappa_r = 2^(r-1) (r-1)! sum_j (j (j + 1))^-r``. A Monte Carlo sampler of
the truncated series provides an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from adla import _backend, _ziggurat
from adla.pearson import PearsonDistribution
from adla.stats import normal_quantile

CANONICAL_ALPHA = 3.4e-6
CANONICAL_TAU_T = 4.5
REFERENCE_TAU_A = 11.99
DEFAULT_J_MAX = 1000
METHODS = ("pearson_fit", "monte_carlo", "paper_constant")


@dataclass(frozen=True)
class CumulantLedger:
    kappa: tuple[float, float, float, float]
    mu: tuple[float, float, float, float]  # mean, then central moments 2..4
    gamma1: float
    gamma2: float  # mu4 / mu2^2, not excess


@dataclass(frozen=True)
class MonteCarloCheck:
    draws: int
    j_max: int
    seed: int
    quantile: float
    discrepancy: float  # Monte Carlo quantile minus the Pearson quantile


@dataclass(frozen=True)
class ThresholdSpec:
    alpha: float
    tau_t: float
    tau_a: float
    ledger: CumulantLedger
    method: str = "pearson_fit"
    pearson_type: str | None = None
    criterion: float | None = None
    mc_check: MonteCarloCheck | None = field(default=None)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not (self.tau_t > 0 and self.tau_a > 0):
            raise ValueError("thresholds must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    def to_dict(self):
        d = asdict(self)
        d["ledger"] = {k: list(v) if isinstance(v, tuple) else v for k, v in d["ledger"].items()}
        return d

    @classmethod
    def from_dict(cls, d):
        led = d["ledger"]
        ledger = CumulantLedger(tuple(led["kappa"]), tuple(led["mu"]), led["gamma1"], led["gamma2"])
        mc = MonteCarloCheck(**d["mc_check"]) if d.get("mc_check") else None
        return cls(d["alpha"], d["tau_t"], d["tau_a"], ledger, d.get("method", "pearson_fit"),
                   d.get("pearson_type"), d.get("criterion"), mc)


def series_sum(r: int) -> float:
    """Closed form of ``sum_{j>=1} (j (j + 1))^-r`` for ``r = 1..4``."""
    pi2 = math.pi ** 2
    forms = {
        1: 1.0,
        2: pi2 / 3.0 - 3.0,
        3: 10.0 - pi2,
        4: math.pi ** 4 / 45.0 + 10.0 * pi2 / 3.0 - 35.0,
    }
    if r not in forms:
        raise ValueError(f"closed form known for r in 1..4, got {r!r}")
    return forms[r]


def cumulants() -> CumulantLedger:
    """Cumulants, moments, skewness and kurtosis of the limiting distribution."""
    kappa = tuple(2.0 ** (r - 1) * math.factorial(r - 1) * series_sum(r) for r in range(1, 5))
    k1, k2, k3, k4 = kappa
    mu = (k1, k2, k3, k4 + 3.0 * k2 * k2)
    return CumulantLedger(
        kappa=kappa,
        mu=mu,
        gamma1=mu[2] / mu[1] ** 1.5,
        gamma2=mu[3] / mu[1] ** 2,
    )


def pearson_fit(ledger: CumulantLedger) -> PearsonDistribution:
    return PearsonDistribution(ledger.mu[0], ledger.mu[1], ledger.gamma1, ledger.gamma2)


def pearson_quantile(ledger: CumulantLedger, alpha: float) -> float:
    """Upper ``(1 - alpha)`` quantile of the Pearson curve matched to ``ledger``."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5), got {alpha!r}")
    return pearson_fit(ledger).isf(alpha)


def a2_infinity_draws(n_draws, j_max=DEFAULT_J_MAX, seed=0, *, start=0, threads=None):
    """Draws ``start .. start + n_draws - 1`` of the truncated limiting series.

    Draw ``i`` comes from its own xoshiro256** stream keyed by ``(seed, i)``,
    so any slice of draws is reproducible on its own and independent of the
    thread count and backend.
    """
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    if n_draws < 0 or start < 0:
        raise ValueError("n_draws and start must be non-negative")
    key = _ziggurat.seed_key(int(seed))
    return _backend.kernels.a2inf_draws(
        int(n_draws), int(j_max), key, int(start),
        _ziggurat.KI, _ziggurat.WI, _ziggurat.FI, _ziggurat.ZIGGURAT_R,
        _backend.resolve_threads(threads),
    )


def sample_a2_infinity(j_max: int, rng_seed: int) -> float:
    """One draw of ``sum_{j<=j_max} W_j / (j (j + 1))``."""
    return float(a2_infinity_draws(1, j_max, rng_seed)[0])


def monte_carlo_quantile(alpha, n_draws, j_max=DEFAULT_J_MAX, seed=0, threads=None, draws=None):
    """Empirical upper ``(1 - alpha)`` quantile of the truncated series."""
    if draws is None:
        draws = a2_infinity_draws(n_draws, j_max, seed, threads=threads)
    return float(np.quantile(draws, 1.0 - alpha))


def _is_canonical_alpha(alpha):
    return math.isclose(alpha, CANONICAL_ALPHA, rel_tol=1e-12)


def derive_thresholds(alpha=CANONICAL_ALPHA, mc_check=None, *, method="pearson_fit",
                      j_max=DEFAULT_J_MAX, seed=0, threads=None) -> ThresholdSpec:
    """Thresholds for significance level ``alpha``.

    ``tau_t`` is the two-sided normal quantile, except that the customary
    4.5 is used at ``alpha = 3.4e-6``. With ``mc_check`` draws (and
    ``alpha >= 1e-4``) the Pearson value is compared against an empirical
    quantile of the truncated series.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5), got {alpha!r}")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")

    ledger = cumulants()
    tau_t = CANONICAL_TAU_T if _is_canonical_alpha(alpha) else normal_quantile(1.0 - alpha / 2.0)
    fit = pearson_fit(ledger)

    mc = None
    if method == "paper_constant":
        if not _is_canonical_alpha(alpha):
            raise ValueError("paper_constant thresholds exist only for alpha = 3.4e-6")
        tau_a = REFERENCE_TAU_A
    elif method == "monte_carlo":
        n = mc_check or 10 ** 6
        tau_a = monte_carlo_quantile(alpha, n, j_max, seed, threads)
    else:
        tau_a = fit.isf(alpha)

    if mc_check and alpha >= 1e-4:
        q = tau_a if method == "monte_carlo" else monte_carlo_quantile(alpha, mc_check, j_max, seed, threads)
        mc = MonteCarloCheck(int(mc_check), int(j_max), int(seed), q, q - fit.isf(alpha))

    return ThresholdSpec(alpha, tau_t, tau_a, ledger, method, fit.type, fit.criterion, mc)


def report_text(spec: ThresholdSpec) -> str:
    """Human-readable derivation report."""
    led = spec.ledger
    lines = [
        f"alpha        {spec.alpha:.6g}",
        f"tau_t        {spec.tau_t:.6f}",
        f"tau_A        {spec.tau_a:.6f}   ({spec.method})",
        "",
        "cumulants of A2_inf",
    ]
    lines += [f"  kappa_{r}    {k:.12f}" for r, k in enumerate(led.kappa, 1)]
    lines += ["moments"]
    lines += [f"  mu_{r}       {m:.12f}" for r, m in enumerate(led.mu, 1)]
    lines += [
        f"  gamma1     {led.gamma1:.12f}",
        f"  gamma2     {led.gamma2:.12f}",
        f"Pearson type {spec.pearson_type} (criterion {spec.criterion:.6f})",
    ]
    if spec.mc_check:
        mc = spec.mc_check
        lines += [
            "",
            f"Monte Carlo  {mc.draws} draws, j_max={mc.j_max}, seed={mc.seed}",
            f"  quantile   {mc.quantile:.6f}  (difference {mc.discrepancy:+.6f})",
        ]
    return "\n".join(lines) + "\n"
