"""Finite truncation of the orbit-equivalence coupling between Delta and Z.

A point is an address ``(i_0, ..., i_N)`` with ``i_n`` indexing ``Sigma_n``.  It
names the element ``sigma_N ... sigma_0`` of ``T_N`` and the integer
``sum_n i_n |T_{n-1}|`` of ``[0, |T_N| - 1]``.  Delta acts by right
multiplication on the element, Z by translation on the integer; both are
partial at finite N and report ``OUT_OF_TRUNCATION`` when they leave.
"""

from __future__ import annotations

import math
import random
from array import array
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .delta import DeltaElement, Letter
from .errors import InvariantError
from .schedule import Schedule
from .tiling import FolnerTiling

EXHAUSTIVE_LIMIT = 10**6


class _OutOfTruncation:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "OUT_OF_TRUNCATION"

    def __bool__(self) -> bool:
        return False


OUT_OF_TRUNCATION = _OutOfTruncation()


def phi_eps(x: float, rho: Callable[[float], float], eps: float) -> float:
    """rho(ln x) / ln(rho(ln x))^(1+eps), made non-decreasing below its minimum.

    The raw expression blows up as rho(ln x) -> 1; below the point
    ``rho(ln x) = e^(1+eps)`` where it is minimal we use that minimum value.
    """
    if x <= 0:
        return 0.0
    p = 1.0 + eps
    floor_y = math.exp(p)
    y = rho(math.log(x)) if x > math.e else 1.0
    if y <= floor_y:
        return floor_y / p ** p
    return y / math.log(y) ** p


def ln_phi_eps_of_ln(ln_x: float, rho: Callable[[float], float], eps: float) -> float:
    """ln phi_eps(x) given ln x, for arguments far beyond float range."""
    p = 1.0 + eps
    floor_y = math.exp(p)
    y = rho(ln_x) if ln_x > 1 else 1.0
    if y <= floor_y:
        return p - p * math.log(p)
    return math.log(y) - p * math.log(math.log(y))


class Coupling:
    """Address space of level N with the Delta and Z partial actions."""

    def __init__(self, tiling: FolnerTiling, N: int):
        self.tiling = tiling
        self.product = tiling.product
        self.N = N
        self.kappa = tiling.kappa
        self.shifts = [tiling.build_shift(n) for n in range(N + 1)]
        self.radix = [len(s) for s in self.shifts]
        self.tile_sizes = [tiling.tile_cardinality(n) for n in range(N + 1)]
        for n in range(1, N + 1):
            if len(tiling.z_shift(n)) != self.radix[n]:
                raise InvariantError(f"|Sigma_{n}| != |Sigma'_{n}|")
        self.size = self.tile_sizes[N]
        self.fn = self.kappa ** N
        self._rank_to_int: array | None = None

    # -- address maps ------------------------------------------------------------
    def _check(self, addr: Sequence[int]) -> None:
        if len(addr) != self.N + 1 or any(not 0 <= i < r for i, r in zip(addr, self.radix)):
            raise ValueError(f"address {tuple(addr)} out of range for radices {self.radix}")

    def addr_to_int(self, addr: Sequence[int]) -> int:
        self._check(addr)
        value = addr[0]
        for n in range(1, self.N + 1):
            value += addr[n] * self.tile_sizes[n - 1]
        return value

    def int_to_addr(self, value: int) -> tuple[int, ...]:
        if not 0 <= value < self.size:
            raise ValueError(f"{value} outside [0, {self.size - 1}]")
        addr = []
        for n in range(self.N, 0, -1):
            i, value = divmod(value, self.tile_sizes[n - 1])
            addr.append(i)
        addr.append(value)
        return tuple(reversed(addr))

    def addr_to_delta(self, addr: Sequence[int]) -> DeltaElement:
        self._check(addr)
        x = self.shifts[self.N][addr[self.N]]
        for n in range(self.N - 1, -1, -1):
            x = self.product.multiply(x, self.shifts[n][addr[n]])
        return x

    def delta_to_addr(self, x: DeltaElement) -> tuple[int, ...]:
        if not self.tiling.in_folner(x, self.fn):
            raise ValueError("element is not in T_N")
        addr = []
        for n in range(self.N, 0, -1):
            i, x = self.tiling.decompose(x, n)
            addr.append(i)
        i0 = self.tiling.shift_index(0).get(x)
        if i0 is None:
            raise InvariantError("bottom factor is not in T_0")
        addr.append(i0)
        return tuple(reversed(addr))

    def iter_points(self) -> Iterator[tuple[int, DeltaElement]]:
        """(integer, element) for every point, in integer order, sharing prefix products."""
        mul = self.product.multiply

        def rec(level: int, prefix: DeltaElement, base: int):
            if level < 0:
                yield base, prefix
                return
            step = self.tile_sizes[level - 1] if level else 1
            for i, sigma in enumerate(self.shifts[level]):
                yield from rec(level - 1, mul(prefix, sigma), base + i * step)

        yield from rec(self.N, self.product.identity, 0)

    @property
    def rank_to_int(self) -> array:
        """Integer coordinate indexed by Følner rank (built by one full sweep)."""
        if self._rank_to_int is None:
            table = array("q", [-1]) * self.size
            rank = self.tiling.folner_rank
            for v, x in self.iter_points():
                table[rank(x, self.fn)] = v
            if min(table) < 0:
                raise InvariantError("address map does not cover T_N")
            self._rank_to_int = table
        return self._rank_to_int

    def _int_of(self, x: DeltaElement) -> int:
        if self._rank_to_int is not None:
            return self._rank_to_int[self.tiling.folner_rank(x, self.fn)]
        return self.addr_to_int(self.delta_to_addr(x))

    # -- actions -----------------------------------------------------------------
    def act_delta(self, s: Letter, addr: Sequence[int]):
        y = self.product.mul_letter(self.addr_to_delta(addr), s)
        if not self.tiling.in_folner(y, self.fn):
            return OUT_OF_TRUNCATION
        return self.delta_to_addr(y)

    def act_z(self, d: int, addr: Sequence[int]):
        v = self.addr_to_int(addr) + d
        if not 0 <= v < self.size:
            return OUT_OF_TRUNCATION
        return self.int_to_addr(v)

    def schreier_distance_z(self, addr: Sequence[int], s: Letter):
        y = self.act_delta(s, addr)
        if y is OUT_OF_TRUNCATION:
            return y
        return abs(self.addr_to_int(y) - self.addr_to_int(addr))

    def schreier_distance_delta(self, addr: Sequence[int], d: int, node_cap: int = 100_000):
        """(metric upper bound, exact length or None) of x^-1 y where y = x + d on the Z side."""
        y = self.act_z(d, addr)
        if y is OUT_OF_TRUNCATION:
            return y
        P = self.product
        z = P.multiply(P.inverse(self.addr_to_delta(addr)), self.addr_to_delta(y))
        return P.metric_upper_bound(z), P.word_length_exact(z, node_cap=node_cap)

    # -- sweeps --------------------------------------------------------------------
    def simulate(self, samples: int | None = None, seed: int = 0) -> "Simulation":
        """Z-displacements of every Delta generator, exhaustive when |T_N| is small."""
        P = self.product
        letters = P.letters
        exhaustive = self.size <= EXHAUSTIVE_LIMIT
        samples = 10_000 if samples is None else samples
        dist: dict[Letter, list[int]] = {s: [] for s in letters}
        oot = {s: 0 for s in letters}
        injective = {s: True for s in letters}
        if exhaustive:
            table = self.rank_to_int
            rank = self.tiling.folner_rank
            images = {s: bytearray(self.size) for s in letters}
            points = self.iter_points()
            total = self.size
        else:
            rng = random.Random(seed)
            chosen = sorted(rng.randrange(self.size) for _ in range(samples))
            points = ((v, self.addr_to_delta(self.int_to_addr(v))) for v in chosen)
            total = len(chosen)
        for v, x in points:
            for s in letters:
                y = P.mul_letter(x, s)
                if not self.tiling.in_folner(y, self.fn):
                    oot[s] += 1
                    continue
                if exhaustive:
                    w = table[rank(y, self.fn)]
                    if images[s][w]:
                        injective[s] = False
                    images[s][w] = 1
                else:
                    w = self._int_of(y)
                dist[s].append(abs(w - v))
        return Simulation(self.N, total, exhaustive, seed, dist, oot, injective)


@dataclass
class Simulation:
    N: int
    points: int
    exhaustive: bool
    seed: int
    distances: dict[Letter, list[int]]
    out_of_truncation: dict[Letter, int]
    injective: dict[Letter, bool]

    def oot_frequency(self, s: Letter) -> float:
        return self.out_of_truncation[s] / self.points

    def histogram(self, s: Letter) -> dict[int, int]:
        out: dict[int, int] = {}
        for d in self.distances[s]:
            out[d] = out.get(d, 0) + 1
        return dict(sorted(out.items()))

    def moment(self, s: Letter, c: float, rho: Callable[[float], float], eps: float) -> float:
        """Mean of phi_eps(d / c) over the points where s is defined."""
        hist = self.histogram(s)
        n = sum(hist.values())
        return sum(k * phi_eps(d / c, rho, eps) for d, k in hist.items()) / n


def c_grid(max_exp: int = 20) -> list[float]:
    return [2.0 ** e for e in range(max_exp + 1)]


def stability(
    a: Simulation, b: Simulation, rho: Callable[[float], float], eps: float, grid: Sequence[float] | None = None
) -> dict[Letter, list[tuple[float, float, float, float]]]:
    """Per generator: rows (c, moment at a.N, moment at b.N, relative change)."""
    grid = c_grid() if grid is None else grid
    out = {}
    for s in a.distances:
        rows = []
        for c in grid:
            ma, mb = a.moment(s, c, rho, eps), b.moment(s, c, rho, eps)
            rows.append((c, ma, mb, abs(mb - ma) / ma))
        out[s] = rows
    return out


# -- series ------------------------------------------------------------------------


@dataclass
class SeriesRow:
    n: int
    ln_psi_term: float
    ln_phi_term: float
    phi_ratio: float
    ln_psi_partial: float = -math.inf
    phi_partial: float = 0.0


@dataclass
class IntegrabilityReport:
    eps: float
    rows: list[SeriesRow]
    constants: object
    sharpened: bool
    c_phi: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def n0(self) -> int:
        """Smallest n from which the Psi terms decrease strictly to the end of the table."""
        terms = [r.ln_psi_term for r in self.rows]
        n0 = self.rows[-1].n
        for i in range(len(terms) - 1, 0, -1):
            if terms[i] < terms[i - 1]:
                n0 = self.rows[i - 1].n
            else:
                break
        return n0

    def psi_term(self, n: int) -> float:
        for r in self.rows:
            if r.n == n:
                return math.exp(r.ln_psi_term)
        raise KeyError(n)

    def phi_bound(self, n_lo: int = 5) -> float:
        return max(r.phi_ratio for r in self.rows if r.n >= n_lo)


def series_report(
    schedule: Schedule,
    eps: float,
    n_max: int = 40,
    c1: float = 1.0,
    c2: float = 0.0,
    tiling: FolnerTiling | None = None,
) -> IntegrabilityReport:
    """Tabulate Psi(2 R_n) eps'_{n-1} and phi_eps(2 R'_n) eps_{n-1} for 2 <= n <= n_max.

    Psi = exp o rho, except for a linear profile where Psi(x) = exp(c_phi x) with
    c_phi = C_2 / (2 C_R 2^3) is used.  Terms are kept in log space.
    """
    tiling = tiling or FolnerTiling(schedule=schedule, c1=c1, c2=c2)
    consts = tiling.constants
    rho = schedule.rho
    kappa = schedule.kappa
    linear = schedule.profile is not None and (
        schedule.profile.family == "identity" or (schedule.profile.func is None and schedule.profile.alpha == 0)
    )
    c_phi = consts.C_2 / (consts.C_R * 2**3) / 2 if linear else None
    rows = []
    ln_psi_sum, phi_sum = -math.inf, 0.0
    for n in range(2, n_max + 1):
        st = tiling.quantify(n)
        ln_prev = tiling.ln_tile_cardinality(n - 1)
        x = 2 * st.R
        ln_psi = (c_phi * x if linear else rho(x)) + math.log(2) - ln_prev
        ln_phi = ln_phi_eps_of_ln(math.log(2) + st.ln_cardinality, rho, eps) + math.log(2) - (n - 1) * math.log(kappa)
        comparator = math.log(kappa) - (1 + eps) * math.log((n - 1) * math.log(kappa))
        hi, lo = max(ln_psi_sum, ln_psi), min(ln_psi_sum, ln_psi)
        ln_psi_sum = hi + math.log1p(math.exp(lo - hi)) if lo > -math.inf else hi
        phi_sum += math.exp(ln_phi)
        rows.append(SeriesRow(n, ln_psi, ln_phi, math.exp(ln_phi - comparator), ln_psi_sum, phi_sum))
    return IntegrabilityReport(eps, rows, consts, linear, c_phi)
