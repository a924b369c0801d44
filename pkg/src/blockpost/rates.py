"""Contraction-rate schedule for k-block models."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class RateSchedule:
    n: int
    k: int
    eps_sq: float

    @property
    def eps(self) -> float:
        return math.sqrt(self.eps_sq)


def rate_schedule(n: int, k: int) -> RateSchedule:
    """``eps_n^2 = k^2 log(n/k) / n^2 + log(k) / n`` (natural log)."""
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    eps_sq = k * k * math.log(n / k) / (n * n) + math.log(k) / n
    return RateSchedule(n, k, eps_sq)
