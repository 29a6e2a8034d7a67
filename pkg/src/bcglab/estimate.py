"""Monte Carlo estimates with delta-method error propagation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class Estimate:
    """A Monte Carlo result: mean, standard error, sample count, seed."""

    mean: float
    stderr: float
    n_samples: int
    seed: int
    flags: list = field(default_factory=list)

    @classmethod
    def exact(cls, value: float, seed: int = 0) -> "Estimate":
        return cls(mean=float(value), stderr=0.0, n_samples=0, seed=seed)

    @property
    def rel_stderr(self) -> float:
        if self.mean == 0.0:
            return math.inf if self.stderr > 0 else 0.0
        return abs(self.stderr / self.mean)

    def scaled(self, c: float) -> "Estimate":
        return Estimate(self.mean * c, abs(c) * self.stderr, self.n_samples, self.seed,
                        list(self.flags))

    def times(self, other: "Estimate") -> "Estimate":
        """Product of independent estimates, first-order error propagation."""
        mean = self.mean * other.mean
        var = (self.stderr * other.mean) ** 2 + (other.stderr * self.mean) ** 2
        return Estimate(mean, math.sqrt(var), self.n_samples + other.n_samples,
                        self.seed, list(self.flags) + list(other.flags))

    def power(self, q: float, bias_correct: bool = True) -> "Estimate":
        """mean**q with a second-order (log-space) bias correction.

        The plug-in estimator m**q of mu**q carries a relative bias of about
        q(q-1)/2 * (sigma/mu)^2; subtracting it keeps nested fractional powers
        honest.  No-op for q in {0, 1} or exact inputs.
        """
        if self.mean <= 0.0:
            return Estimate(0.0, 0.0, self.n_samples, self.seed, list(self.flags))
        rel = self.stderr / self.mean
        mean = self.mean ** q
        if bias_correct:
            mean *= max(0.0, 1.0 - 0.5 * q * (q - 1.0) * rel * rel)
        stderr = abs(q) * mean * rel
        return Estimate(mean, stderr, self.n_samples, self.seed, list(self.flags))

    def minus(self, other: "Estimate") -> "Estimate":
        return Estimate(self.mean - other.mean,
                        math.hypot(self.stderr, other.stderr),
                        self.n_samples + other.n_samples, self.seed,
                        list(self.flags) + list(other.flags))

    def agrees_with(self, value: float, nsigma: float = 3.0) -> bool:
        return abs(self.mean - value) <= nsigma * max(self.stderr, 1e-300)

    def sigmas_from(self, value: float) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.mean == value else math.inf
        return (self.mean - value) / self.stderr


def product(estimates) -> Estimate:
    out = None
    for e in estimates:
        out = e if out is None else out.times(e)
    if out is None:
        raise ValueError("empty product")
    return out


def from_samples_moments(total: float, total_sq: float, count: int, seed: int) -> Estimate:
    """Estimate of the mean from accumulated sum and sum of squares."""
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    stderr = math.sqrt(var / max(count - 1, 1))
    return Estimate(mean, stderr, count, seed)
