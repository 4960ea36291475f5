"""Parameter schedules (k_m), (l_m) and their synthesis from a profile.

A profile ``rho`` maps ``[1, inf)`` to ``[1, inf)`` with ``rho(1) = 1`` and both
``rho`` and ``x / rho(x)`` non-decreasing.  Writing ``f(x) = x / rho(x)``, a
schedule is chosen so that the piecewise function

    fbar(x) = l_m          on [k_m l_m, k_{m+1} l_m]
    fbar(x) = x / k_{m+1}  on [k_{m+1} l_m, k_{m+1} l_{m+1}]

stays within a bounded factor of ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import HypothesisError

INF = math.inf
REL_TOL = 1e-9
_HUGE = 1e300


@dataclass(frozen=True)
class Profile:
    family: str
    alpha: float = 0.0
    func: Callable[[float], float] | None = field(default=None, compare=False)

    @classmethod
    def power(cls, alpha: float) -> "Profile":
        if alpha < 0:
            raise HypothesisError(f"power profile needs alpha >= 0, got {alpha}")
        return cls("power", float(alpha))

    @classmethod
    def identity(cls) -> "Profile":
        return cls("identity")

    @classmethod
    def custom(cls, func: Callable[[float], float], name: str = "custom") -> "Profile":
        return cls(name, func=func)

    def rho(self, x: float) -> float:
        if self.func is not None:
            return self.func(x)
        if self.family == "identity" or self.alpha == 0:
            return x
        return x ** (1.0 / (1.0 + self.alpha))

    def f(self, x: float) -> float:
        return x / self.rho(x)


def log_grid(lo: float, hi: float, points: int) -> list[float]:
    a, b = math.log(lo), math.log(hi)
    return [math.exp(a + (b - a) * i / (points - 1)) for i in range(points)]


def check_profile(profile: Profile, points: int = 1000, xmax: float = 1e12) -> None:
    """Reject profiles outside the admissible class (sampled on a log grid)."""
    if abs(profile.rho(1.0) - 1.0) > 1e-12:
        raise HypothesisError(f"profile {profile.family}: rho(1) = {profile.rho(1.0)} != 1")
    prev_r = prev_f = None
    for x in log_grid(1.0, xmax, points):
        r = profile.rho(x)
        fx = x / r
        if r < 1 - 1e-12:
            raise HypothesisError(f"profile {profile.family}: rho({x:g}) = {r} < 1")
        if prev_r is not None:
            if r < prev_r * (1 - 1e-12):
                raise HypothesisError(f"profile {profile.family}: rho decreases near x = {x:g}")
            if fx < prev_f * (1 - 1e-12):
                raise HypothesisError(f"profile {profile.family}: x/rho(x) decreases near x = {x:g}")
        prev_r, prev_f = r, fx


def is_power_of(value: int, base: int) -> bool:
    if value < 1:
        return False
    while value % base == 0:
        value //= base
    return value == 1


def _exponent(value: int, base: int) -> int:
    e = 0
    while value > 1:
        value //= base
        e += 1
    return e


@dataclass(frozen=True)
class Schedule:
    """Finite levels ``k[0] = 0 < k[1] < ... < k[M]`` with diameters ``l``.

    ``terminated`` means every later ``k`` is infinite; otherwise the schedule
    is only known up to level ``M`` and queries past it raise ``ValueError``.
    """

    kappa: int
    lam: int
    k: tuple[int, ...]
    l: tuple[int, ...]
    terminated: bool = True
    profile: Profile | None = None

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        object.__setattr__(self, "l", tuple(int(v) for v in self.l))

    @property
    def M(self) -> int:
        return len(self.k) - 1

    def validate(self) -> None:
        kappa, lam = self.kappa, self.lam
        if kappa < 2 or lam < 2:
            raise HypothesisError(f"kappa and lambda must be >= 2 (got {kappa}, {lam})")
        if not self.k or len(self.k) != len(self.l):
            raise HypothesisError("k and l must be non-empty and of equal length")
        if self.k[0] != 0:
            raise HypothesisError("hypothesis (H): k_0 must be 0")
        for m in range(1, len(self.k)):
            if not is_power_of(self.k[m], kappa):
                raise HypothesisError(f"hypothesis (H): k_{m} = {self.k[m]} is not a power of kappa = {kappa}")
            if self.k[m] < 2 * self.k[m - 1] or self.k[m] <= self.k[m - 1]:
                raise HypothesisError(f"hypothesis (H): k_{m + 1} >= 2 k_m fails at m = {m - 1}")
        for m, lm in enumerate(self.l):
            if not is_power_of(lm, lam):
                raise HypothesisError(f"hypothesis (H): l_{m} = {lm} is not a power of lambda = {lam}")
            if m and lm < self.l[m - 1]:
                raise HypothesisError(f"l must be non-decreasing (l_{m} < l_{m - 1})")

    # -- accessors -----------------------------------------------------------
    def _next_k_bound(self) -> int:
        """Lower bound on the first unknown k when not terminated."""
        return self.kappa * self.k[-1] if self.M else self.kappa

    def k_at(self, m: int) -> float:
        if m <= self.M:
            return self.k[m]
        if self.terminated:
            return INF
        raise ValueError(f"level {m} beyond materialized depth {self.M}")

    def l_at(self, m: int) -> int:
        if m <= self.M:
            return self.l[m]
        if self.terminated:
            return self.l[-1]
        raise ValueError(f"level {m} beyond materialized depth {self.M}")

    def little_l(self, n: int) -> int:
        """The level m with k_m <= n < k_{m+1}."""
        if n < 0:
            raise ValueError(f"little_l needs n >= 0, got {n}")
        if not self.terminated and n >= self._next_k_bound():
            raise ValueError(f"n = {n} beyond the materialized schedule (depth {self.M})")
        m = 0
        while m < self.M and self.k[m + 1] <= n:
            m += 1
        return m

    def big_L(self, n: int) -> int:
        return self.little_l(self.kappa ** n - 1)

    # -- piecewise approximation --------------------------------------------
    @property
    def covered_max(self) -> float:
        return INF if self.terminated else self.k[-1] * self.l[-1]

    def fbar(self, x: float) -> float:
        if x < 1:
            raise ValueError(f"fbar is defined for x >= 1, got {x}")
        for m in range(self.M):
            k1 = self.k[m + 1]
            if x <= k1 * self.l[m]:
                return float(self.l[m])
            if x <= k1 * self.l[m + 1]:
                return x / k1
        if self.terminated or x <= self.k[-1] * self.l[-1]:
            return float(self.l[-1])
        raise ValueError(f"x = {x:g} beyond covered range {self.covered_max:g}")

    def rhobar(self, x: float) -> float:
        return x / self.fbar(x)

    def rho(self, x: float) -> float:
        """The profile when known, else the piecewise surrogate rhobar."""
        return self.profile.rho(x) if self.profile is not None else self.rhobar(x)

    def rows(self, depth: int | None = None) -> list[tuple[int, float, int]]:
        depth = self.M if depth is None else depth
        if not self.terminated:
            depth = min(depth, self.M)
        return [(m, self.k_at(m), self.l_at(m)) for m in range(depth + 1)]


def _ceil_power(y: float, base: int, tol: float = REL_TOL) -> int:
    """Smallest e >= 0 with base**e >= y (1 - tol)."""
    if y <= 1:
        return 0
    e = max(0, math.floor(math.log(y) / math.log(base)) - 1)
    while base ** e < y * (1 - tol):
        e += 1
    return e


def _sup_below(f: Callable[[float], float], x0: float, level: float) -> float:
    """sup{x >= x0 : f(x) <= level} for non-decreasing f (inf if unbounded)."""
    bound = level * (1 + 1e-12)
    if f(x0) > bound:
        return x0
    lo, hi = x0, 2 * x0
    while f(hi) <= bound:
        lo, hi = hi, 2 * hi
        if hi > _HUGE:
            return INF
    while hi / lo - 1 > 1e-13:
        mid = math.sqrt(lo) * math.sqrt(hi)
        if f(mid) <= bound:
            lo = mid
        else:
            hi = mid
    return hi


def _fixed_point(f: Callable[[float], float], k: int, lo: float) -> float:
    """Root of f(k l) = l for l >= lo; f(k l) / l is non-increasing in l."""
    def excess(l: float) -> float:
        return f(k * l) / l

    if excess(lo) <= 1 + 1e-12:
        return lo
    hi = 2 * lo
    while excess(hi) > 1 + 1e-12:
        lo, hi = hi, 2 * hi
        if hi > _HUGE:
            return INF
    while hi / lo - 1 > 1e-13:
        mid = math.sqrt(lo) * math.sqrt(hi)
        if excess(mid) > 1:
            lo = mid
        else:
            hi = mid
    return hi


def synthesize(profile: Profile, kappa: int, lam: int, depth: int) -> Schedule:
    """Choose (k_m), (l_m) as subsequences of (kappa^n), (lambda^n) for ``profile``.

    Given (k_m, l_m): the plateau fbar = l_m lasts while f <= l_m; k_{m+1} is
    the smallest power of kappa covering that plateau and exceeding k_m; then
    l_{m+1} is the smallest power of lambda at or above the solution of
    l = f(k_{m+1} l).  The identity profile terminates at once (k_1 = inf).
    """
    check_profile(profile)
    if kappa < 2 or lam < 2:
        raise HypothesisError(f"kappa and lambda must be >= 2 (got {kappa}, {lam})")
    k, l = [0], [1]
    ek = el = 0
    terminated = False
    for _ in range(depth):
        km, lm = k[-1], l[-1]
        x0 = max(float(km * lm), 1.0)
        xs = _sup_below(profile.f, x0, lm)
        if xs == INF:
            # a plateau past float range is only a genuine end if f stopped growing
            terminated = profile.f(_HUGE) <= profile.f(x0) * (1 + REL_TOL)
            break
        ek = max(ek + 1, _ceil_power(xs / lm, kappa))
        kn = kappa ** ek
        ls = _fixed_point(profile.f, kn, float(lm))
        if ls == INF:
            raise HypothesisError(f"profile {profile.family}: no finite l solves l = f(k l) at k = {kn}")
        el = max(el, _ceil_power(ls, lam))
        k.append(kn)
        l.append(lam ** el)
    sched = Schedule(kappa, lam, tuple(k), tuple(l), terminated, profile)
    sched.validate()
    return sched
