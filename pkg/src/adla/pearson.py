"""Pearson-system distributions fitted from four moments.

Every Pearson density solves

    d log p / dx = -(a + x) / (c0 + c1 x + c2 x^2)

with ``x`` measured from the mean and ``a = c1``. The coefficients follow
from the variance, skewness ``gamma1`` and kurtosis ``beta2 = mu4 / mu2^2``;
the family member is picked by Pearson's criterion

    kappa = beta1 (beta2 + 3)^2 / (4 (4 beta2 - 3 beta1) (2 beta2 - 3 beta1 - 6))

(``beta1 = gamma1^2``). The log-density is integrated in closed form; the
normalizing constant, CDF and tail are computed by adaptive quadrature and
quantiles by bracketed root finding.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize

_EPS = 1e-10
_GL20 = tuple(map(tuple, np.polynomial.legendre.leggauss(20)))


class PearsonTypeError(ValueError):
    """Moments that no supported Pearson member can match."""

    def __init__(self, message, criterion):
        super().__init__(message)
        self.criterion = criterion


def criterion(beta1, beta2):
    """Pearson's kappa; ``inf`` when the denominator vanishes (Type III line).

    Symmetric curves give 0, including the normal point where the formula is 0/0.
    """
    if beta1 == 0.0:
        return 0.0
    den = 4.0 * (4.0 * beta2 - 3.0 * beta1) * (2.0 * beta2 - 3.0 * beta1 - 6.0)
    if den == 0.0:
        return math.inf
    return beta1 * (beta2 + 3.0) ** 2 / den


class PearsonDistribution:
    """Pearson curve with given mean, variance, skewness and kurtosis.

    ``kurtosis`` is the non-excess ``mu4 / mu2^2`` (3 for the normal).
    """

    def __init__(self, mean, variance, skewness, kurtosis):
        if variance <= 0:
            raise PearsonTypeError(f"variance must be positive, got {variance}", math.nan)
        self.mean = float(mean)
        self.variance = float(variance)
        self.skewness = float(skewness)
        self.kurtosis = float(kurtosis)

        beta1 = self.skewness ** 2
        beta2 = self.kurtosis
        self.criterion = criterion(beta1, beta2)
        if beta2 <= beta1 + 1.0:
            raise PearsonTypeError(
                f"impossible moments: beta2={beta2:.6g} <= beta1 + 1 = {beta1 + 1:.6g} "
                f"(criterion {self.criterion:.6g})", self.criterion)
        denom = 10.0 * beta2 - 12.0 * beta1 - 18.0
        if denom == 0.0:
            raise PearsonTypeError(
                f"degenerate Pearson coefficients (10 beta2 - 12 beta1 - 18 = 0, "
                f"criterion {self.criterion:.6g})", self.criterion)

        sd = math.sqrt(self.variance)
        self.c0 = self.variance * (4.0 * beta2 - 3.0 * beta1) / denom
        self.c1 = sd * self.skewness * (beta2 + 3.0) / denom
        self.c2 = (2.0 * beta2 - 3.0 * beta1 - 6.0) / denom
        self.type = self._classify(beta1, beta2)
        self._setup_log_density()

        mode = -self.c1
        if not self.lower < mode < self.upper:
            mode = 0.0
        self._mode = mode
        self._log_ref = self._log_kernel(mode)
        lower_mass = self._integrate(self.lower, mode)
        upper_mass = self._integrate(mode, self.upper)
        self._norm = lower_mass + upper_mass
        if not (math.isfinite(self._norm) and self._norm > 0):
            raise PearsonTypeError(
                f"Pearson type {self.type} density is not normalizable "
                f"(criterion {self.criterion:.6g})", self.criterion)
        self._mass_below_mode = lower_mass / self._norm

    # -- family selection ---------------------------------------------------

    def _classify(self, beta1, beta2):
        k = self.criterion
        if abs(self.c2) < _EPS:
            return "normal" if abs(self.c1) < _EPS else "III"
        if beta1 < _EPS:
            return "II" if beta2 < 3.0 else "VII"
        if k < 0:
            return "I"
        if abs(k - 1.0) < _EPS:
            return "V"
        if k < 1:
            return "IV"
        return "VI"

    def _setup_log_density(self):
        c0, c1, c2 = self.c0, self.c1, self.c2
        a = c1
        lo, hi = -math.inf, math.inf
        bound_exp = {}

        if self.type == "normal":
            self._require(c0 > 0, "non-normalizable normal limit")
            self._log_kernel = lambda x: -(x * x / 2.0 + a * x) / c0
        elif self.type == "III":
            # Q(x) = c0 + c1 x is linear
            root = -c0 / c1
            if root < 0:
                lo = root
            else:
                hi = root
            coef = (a - c0 / c1) / c1
            self._require(-coef > -1.0, "density not integrable at its finite bound")
            self._require((root < 0) == (c1 > 0), "density does not decay in its open tail")
            bound_exp = {root: -coef}
            self._log_kernel = lambda x: -(x / c1 + coef * math.log(abs(c0 + c1 * x)))
        else:
            disc = c1 * c1 - 4.0 * c2 * c0
            if self.type == "V" or abs(disc) < _EPS * max(1.0, c1 * c1):
                r = -c1 / (2.0 * c2)
                if r < 0:
                    lo = r
                else:
                    hi = r
                ar = a + r
                self._require(ar / c2 * (-1 if r < 0 else 1) > 0,
                              "density not integrable at its finite bound")
                self._require(0 < c2 < 1, "tail too heavy to normalize")
                self._log_kernel = lambda x: -(math.log(abs(x - r)) - ar / (x - r)) / c2
            elif disc > 0:
                sq = math.sqrt(disc)
                r1, r2 = sorted(((-c1 - sq) / (2 * c2), (-c1 + sq) / (2 * c2)))
                # support: the interval around the mean (x = 0) where Q > 0
                if r2 < 0:
                    lo = r2
                elif r1 > 0:
                    hi = r1
                else:
                    lo, hi = r1, r2
                e1 = (a + r1) / (c2 * (r1 - r2))
                e2 = (a + r2) / (c2 * (r2 - r1))
                self.roots = (r1, r2)
                self.exponents = (-e1, -e2)
                if math.isfinite(lo):
                    self._require(-(e1 if lo == r1 else e2) > -1.0, "density not integrable at its lower bound")
                if math.isfinite(hi):
                    self._require(-(e1 if hi == r1 else e2) > -1.0, "density not integrable at its upper bound")
                if math.isinf(lo) or math.isinf(hi):
                    self._require(e1 + e2 > 1.0, "tail too heavy to normalize")
                bound_exp = {r1: -e1, r2: -e2}
                self._log_kernel = lambda x: -(e1 * math.log(abs(x - r1)) + e2 * math.log(abs(x - r2)))
            else:
                h = c1 / (2.0 * c2)
                k = math.sqrt(-disc) / (2.0 * abs(c2))
                lin = (a - h) / (c2 * k)
                self._require(0 < c2 < 1, "tail too heavy to normalize")
                self._log_kernel = lambda x: -(
                    math.log((x + h) ** 2 + k * k) / (2.0 * c2)
                    + lin * math.atan((x + h) / k)
                )
        self.lower, self.upper = lo, hi
        self.support = (self.mean + lo, self.mean + hi)
        # algebraic exponent of the density at each finite support bound
        self._lower_exp = bound_exp.get(lo, 0.0) if math.isfinite(lo) else 0.0
        self._upper_exp = bound_exp.get(hi, 0.0) if math.isfinite(hi) else 0.0

    def _require(self, ok, what):
        if not ok:
            raise PearsonTypeError(
                f"unsupported Pearson moments ({what}; type {self.type}, "
                f"criterion {self.criterion:.6g})", self.criterion)

    # -- density and integrals (centred coordinates) -----------------------

    def _density(self, x):
        if not self.lower < x < self.upper:
            return 0.0
        v = self._log_kernel(x) - self._log_ref
        return math.exp(v) if v > -745.0 else 0.0

    def _integrate(self, a, b):
        if a >= b:
            return 0.0
        sd = math.sqrt(self.variance)
        total = 0.0
        # finite pieces of growing width keep quad away from long flat tails
        if math.isinf(b):
            edge, width = a, 2.0 * sd
            while True:
                nxt = edge + width
                piece = self._quad(edge, nxt)
                total += piece
                edge, width = nxt, width * 2.0
                if piece <= 1e-17 * max(total, 1e-300) and self._density(edge) * width < 1e-18 * max(total, 1e-300):
                    break
                if width > 1e12 * sd:
                    total += self._quad(edge, math.inf)
                    return total
            return total
        if math.isinf(a):
            edge, width = b, 2.0 * sd
            while True:
                nxt = edge - width
                piece = self._quad(nxt, edge)
                total += piece
                edge, width = nxt, width * 2.0
                if piece <= 1e-17 * max(total, 1e-300) and self._density(edge) * width < 1e-18 * max(total, 1e-300):
                    break
                if width > 1e12 * sd:
                    total += self._quad(-math.inf, edge)
                    return total
            return total
        return self._quad(a, b)

    def _quad(self, a, b):
        # density is 1 at the mode, so the total mass is on the order of sd
        sd = math.sqrt(self.variance)
        if b - a < 1e-8 * sd:
            # negligible sliver (usually against a support bound); quad's
            # error estimator misfires there
            nodes, weights = _GL20
            half = 0.5 * (b - a)
            return half * sum(w * self._density(a + half * (t + 1.0)) for t, w in zip(nodes, weights))
        floor = 1e-22 * sd
        wa = self._lower_exp if a == self.lower else 0.0
        wb = self._upper_exp if b == self.upper else 0.0
        if wa or wb:
            # pull the endpoint power out as a QUADPACK algebraic weight
            def smooth(x):
                # QAWS samples the endpoints themselves; the weighted-out
                # factor cancels analytically, so step one ulp inside
                if x <= a:
                    x = math.nextafter(a, b)
                elif x >= b:
                    x = math.nextafter(b, a)
                v = self._log_kernel(x) - self._log_ref
                if wa:
                    v -= wa * math.log(x - a)
                if wb:
                    v -= wb * math.log(b - x)
                return math.exp(v) if v > -745.0 else 0.0
            val, _ = integrate.quad(smooth, a, b, weight="alg", wvar=(wa, wb),
                                    epsabs=floor, epsrel=1e-10, limit=400)
            return val
        val, _ = integrate.quad(self._density, a, b, epsabs=floor, epsrel=1e-10, limit=400)
        return val

    # -- public interface (original coordinates) ---------------------------

    def pdf(self, x):
        return self._density(x - self.mean) / self._norm

    def cdf(self, x):
        u = x - self.mean
        if u <= self.lower:
            return 0.0
        if u >= self.upper:
            return 1.0
        if u <= self._mode:
            return self._integrate(self.lower, u) / self._norm
        return 1.0 - self.sf(x)

    def sf(self, x):
        """Upper-tail probability, integrated directly so small tails stay accurate."""
        u = x - self.mean
        if u <= self.lower:
            return 1.0
        if u >= self.upper:
            return 0.0
        if u <= self._mode:
            return 1.0 - self.cdf(x)
        return self._integrate(u, self.upper) / self._norm

    def isf(self, alpha, tol=1e-9):
        """Upper ``(1 - alpha)`` quantile: the ``q`` with ``sf(q) = alpha``."""
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
        sd = math.sqrt(self.variance)
        # sf is exactly 1 at a finite lower bound, so no integral is needed there
        lo = self.mean + (self.lower if math.isfinite(self.lower) else -50.0 * sd)
        hi = self.mean + sd
        while self.sf(hi) > alpha:
            lo = hi
            hi = self.mean + (hi - self.mean) * 2.0 + sd
            if hi - self.mean > 1e8 * sd:
                raise ArithmeticError("failed to bracket the quantile")
        if math.isfinite(self.upper):
            hi = min(hi, self.mean + self.upper)
        f = lambda q: self.sf(q) - alpha
        q = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
        if abs(f(q)) > tol:
            raise ArithmeticError(f"quantile residual {abs(f(q)):.3g} exceeds {tol}")
        return q

    def ppf(self, p):
        return self.isf(1.0 - p)

    def moments(self):
        """Numerical mean, variance, skewness and kurtosis of the fitted density."""
        def m(k, c=0.0):
            f = lambda u: (u - c) ** k * self._density(u)
            lo, hi, mode = self.lower, self.upper, self._mode
            floor = 1e-20 * math.sqrt(self.variance) ** (k + 1)
            return (integrate.quad(f, lo, mode, limit=400, epsabs=floor, epsrel=1e-11)[0]
                    + integrate.quad(f, mode, hi, limit=400, epsabs=floor, epsrel=1e-11)[0]) / self._norm
        mean_u = m(1)
        var = m(2, mean_u)
        return (self.mean + mean_u, var, m(3, mean_u) / var ** 1.5, m(4, mean_u) / var ** 2)

    def __repr__(self):
        return (f"PearsonDistribution(type={self.type}, mean={self.mean:.6g}, "
                f"variance={self.variance:.6g}, skewness={self.skewness:.6g}, "
                f"kurtosis={self.kurtosis:.6g})")
