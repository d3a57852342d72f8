from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / trials
    z2n = z * z / trials
    centre = (p + z2n / 2) / (1 + z2n)
    half = z * math.sqrt(p * (1 - p) / trials + z2n / (4 * trials)) / (1 + z2n)
    return max(0.0, centre - half), min(1.0, centre + half)


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


@dataclass(frozen=True)
class Estimate:
    successes: int
    trials: int
    ci_low: float
    ci_high: float
    exact: bool = False

    @property
    def value(self) -> float:
        return self.successes / self.trials if self.trials else math.nan

    @classmethod
    def from_counts(cls, successes: int, trials: int, confidence: float = 0.95) -> "Estimate":
        lo, hi = wilson_interval(successes, trials, confidence)
        # the interval must contain the point estimate even after float rounding
        if trials:
            p = successes / trials
            lo, hi = min(lo, p), max(hi, p)
        return cls(int(successes), int(trials), lo, hi)

    @classmethod
    def certain(cls, trials: int) -> "Estimate":
        """Outcome that holds with probability one by construction; no sampling width."""
        return cls(int(trials), int(trials), 1.0, 1.0, exact=True)

    def within_sigma(self, reference: float, n_sigma: float = 3.0) -> bool:
        sigma = binomial_sigma(reference, self.trials)
        return abs(self.value - reference) <= n_sigma * sigma + 1e-15
