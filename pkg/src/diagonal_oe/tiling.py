"""Følner sets F_n, tiling shifts Sigma_n, tiles T_n = F_{kappa^n}, and the Z tiles.

``F_n`` is the set of elements whose range lies in ``[0, n-1]``:

    t in [0, n-1],  supp(g0) in [0, n-1],  supp(g'_m) in [k_m, n-1] for k_m <= n-1,

and no derived data at deeper levels.  ``T_0 = F_1`` and ``T_n = Sigma_n T_{n-1}``
where the j-th part of ``Sigma_n`` has cursor ``j kappa^(n-1)`` and lamps only off
the window that a translated copy of ``T_{n-1}`` occupies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

from .delta import Config, DeltaElement, DiagonalProduct
from .errors import CapExceeded, InvariantError

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class TileStats:
    """Quantification of level n: (R_n, eps_n) for Delta, (R'_n, eps'_n) for Z.

    ``|T_n|``, ``R'_n`` and ``eps'_n`` are kept as natural logarithms because
    they overflow floats well before n = 40; ``cardinality`` is exact when known.
    """

    n: int
    ln_cardinality: float
    R: float
    eps: float
    ln_R_prime: float
    ln_eps_prime: float
    cardinality: int | None = None
    diameter: int | None = None


@dataclass(frozen=True)
class Constants:
    C_l: float
    C_R: float
    C_1: float
    C_2: float
    C_3: float
    c1: float
    c2: float


class FolnerTiling:
    """Materialized or synthetic tiling data for a diagonal product."""

    def __init__(
        self,
        product: DiagonalProduct | None = None,
        schedule=None,
        cap: int = DEFAULT_CAP,
        c1: float = 1.0,
        c2: float = 0.0,
        ln_ab: float | None = None,
    ):
        if product is None and schedule is None:
            raise ValueError("need a diagonal product or a schedule")
        self.product = product
        self.schedule = schedule if schedule is not None else product.schedule
        self.kappa = self.schedule.kappa
        self.cap = cap
        self.c1, self.c2 = c1, c2
        if ln_ab is None:
            ln_ab = math.log(product.na * product.nb) if product else math.log(4)
        self.ln_ab = ln_ab
        self._shifts: dict[int, list[DeltaElement]] = {}
        self._shift_index: dict[int, dict[DeltaElement, int]] = {}

    # -- Følner sets ---------------------------------------------------------------
    def _active(self, n: int) -> list[int]:
        """0-based indices of levels with k_m <= n - 1."""
        P = self.product
        return [m for m in range(P.M) if P.k[m] <= n - 1]

    @cached_property
    def _derived_index(self) -> list[dict[int, int]]:
        return [{v: i for i, v in enumerate(b.derived_subgroup)} for b in self.product.levels]

    def folner_cardinality(self, n: int) -> int:
        P = self.product
        out = n * (P.na * P.nb) ** n
        for m in self._active(n):
            out *= len(P.levels[m].derived_subgroup) ** (n - P.k[m])
        return out

    def in_folner(self, x: DeltaElement, n: int) -> bool:
        if not 0 <= x.t < n:
            return False
        if x.g0 and (x.g0[0][0] < 0 or x.g0[-1][0] > n - 1):
            return False
        for km, cfg in zip(self.product.k, x.gprime):
            if cfg and (cfg[0][0] < km or cfg[-1][0] > n - 1):
                return False
        return True

    def folner_rank(self, x: DeltaElement, n: int) -> int:
        """Mixed-radix index of ``x`` in F_n; a bijection F_n -> [0, |F_n|)."""
        if not self.in_folner(x, n):
            raise InvariantError(f"element outside F_{n}: {self.product.serialize(x)}")
        P = self.product
        q = P.na * P.nb
        r = 0
        for p, v in x.g0:
            r += v * q ** p
        mult = q ** n
        for m in self._active(n):
            km = P.k[m]
            d = len(P.levels[m].derived_subgroup)
            idx = self._derived_index[m]
            for p, v in x.gprime[m]:
                r += idx[v] * mult * d ** (p - km)
            mult *= d ** (n - km)
        return x.t + n * r

    def enumerate_folner(self, n: int) -> Iterator[DeltaElement]:
        """All of F_n in rank order."""
        size = self.folner_cardinality(n)
        if size > self.cap:
            raise CapExceeded(f"|F_{n}| = {size} exceeds the cap {self.cap}")
        P = self.product
        active = self._active(n)
        q = P.na * P.nb
        empty = ((),) * P.M
        # most significant digit first, so the last site of level 0 varies slowest
        levels = [(m, P.levels[m].derived_subgroup, P.k[m]) for m in reversed(active)]
        level_digits = [list(itertools.product(vals, repeat=n - km)) for _, vals, km in levels]
        g0_digits = list(itertools.product(range(q), repeat=n))
        for combo in itertools.product(*level_digits):
            gprime = list(empty)
            for (m, _, km), vals in zip(levels, combo):
                gprime[m] = tuple((km + i, v) for i, v in enumerate(reversed(vals)) if v)
            gp = tuple(gprime)
            for vals in g0_digits:
                g0 = tuple((p, v) for p, v in enumerate(reversed(vals)) if v)
                for t in range(n):
                    yield DeltaElement(t, g0, gp)

    def boundary_count(self, n: int) -> int:
        """Edge boundary of F_n: pairs (x, s) with x in F_n and x s outside."""
        P = self.product
        return sum(
            1
            for x in self.enumerate_folner(n)
            for s in P.letters
            if not self.in_folner(P.mul_letter(x, s), n)
        )

    # -- shifts and tiles ------------------------------------------------------------
    def shift_cardinality(self, n: int) -> int:
        return self.tile_cardinality(n) // (self.tile_cardinality(n - 1) if n else 1)

    def _shift_parts(self, n: int, j: int) -> tuple[int, list[range], list[tuple[int, list[int]]]]:
        """Cursor, g0 sites and (level, sites) for the j-th part of Sigma_n."""
        kappa = self.kappa
        K = kappa ** (n - 1)
        top = kappa ** n - 1
        P = self.product
        g0_sites = list(range(0, j * K)) + list(range((j + 1) * K, top + 1))
        levels = []
        for m in range(P.M):
            km = P.k[m]
            if km <= K - 1:
                sites = list(range(km, j * K + km)) + list(range((j + 1) * K, top + 1))
                levels.append((m, sites))
            elif km <= top:
                levels.append((m, list(range(km, top + 1))))
        return j * K, g0_sites, levels

    def build_shift(self, n: int) -> list[DeltaElement]:
        """Sigma_n in canonical order (by part, then g0, then derived data)."""
        if n in self._shifts:
            return self._shifts[n]
        P = self.product
        if n == 0:
            out = sorted(self.enumerate_folner(1), key=_canonical_key)
        else:
            size = self.shift_cardinality(n)
            if size > self.cap:
                raise CapExceeded(f"|Sigma_{n}| = {size} exceeds the cap {self.cap}")
            q = P.na * P.nb
            out = []
            for j in range(self.kappa):
                t, g0_sites, levels = self._shift_parts(n, j)
                level_opts = [
                    (m, sites, P.levels[m].derived_subgroup) for m, sites in levels
                ]
                g0_list = [
                    tuple((p, v) for p, v in zip(g0_sites, vals) if v)
                    for vals in itertools.product(range(q), repeat=len(g0_sites))
                ]
                gp_list = []
                for combo in itertools.product(
                    *[itertools.product(vals, repeat=len(sites)) for _, sites, vals in level_opts]
                ):
                    gprime = [()] * P.M
                    for (m, sites, _), vals in zip(level_opts, combo):
                        gprime[m] = tuple((p, v) for p, v in zip(sites, vals) if v)
                    gp_list.append(tuple(gprime))
                part = [DeltaElement(t, g0, gp) for g0 in g0_list for gp in gp_list]
                part.sort(key=_canonical_key)
                out += part
            if len(out) != size:
                raise InvariantError(f"|Sigma_{n}| = {len(out)} but the cardinality formula gives {size}")
        self._shifts[n] = out
        self._shift_index[n] = {x: i for i, x in enumerate(out)}
        return out

    def shift_index(self, n: int) -> dict[DeltaElement, int]:
        self.build_shift(n)
        return self._shift_index[n]

    def tile_elements(self, n: int) -> Iterator[DeltaElement]:
        """T_n = Sigma_n T_{n-1}, in address order (last level outermost)."""
        if n == 0:
            yield from self.build_shift(0)
            return
        prev = list(self.tile_elements(n - 1)) if n > 1 else self.build_shift(0)
        mul = self.product.multiply
        for sigma in self.build_shift(n):
            for tau in prev:
                yield mul(sigma, tau)

    def build_tiles(self, N: int) -> list[int]:
        """Verify T_n = F_{kappa^n} as a disjoint union for n <= N; return |T_n|."""
        sizes = []
        for n in range(N + 1):
            fn = self.kappa ** n
            expected = self.folner_cardinality(fn)
            if expected > self.cap:
                raise CapExceeded(f"|T_{n}| = {expected} exceeds the cap {self.cap}")
            seen = bytearray(expected)
            count = 0
            for x in self.tile_elements(n):
                r = self.folner_rank(x, fn)
                if seen[r]:
                    raise InvariantError(f"translates in T_{n} overlap at {self.product.serialize(x)}")
                seen[r] = 1
                count += 1
            if count != expected:
                raise InvariantError(f"T_{n} has {count} elements, F_{fn} has {expected}")
            formula = self.tile_cardinality(n)
            if count != formula:
                raise InvariantError(f"|T_{n}| = {count} but the cardinality formula gives {formula}")
            sizes.append(count)
        return sizes

    def decompose(self, x: DeltaElement, n: int) -> tuple[int, DeltaElement]:
        """Split x in T_n as sigma * tau with tau in T_{n-1}; return (index of sigma, tau)."""
        P = self.product
        K = self.kappa ** (n - 1)
        j, t = divmod(x.t, K)
        lo = j * K
        g0 = tuple((p - lo, v) for p, v in x.g0 if lo <= p < lo + K)
        gprime = tuple(
            tuple((p - lo, v) for p, v in cfg if lo + km <= p < lo + K) if km <= K - 1 else ()
            for km, cfg in zip(P.k, x.gprime)
        )
        tau = DeltaElement(t, g0, gprime)
        sigma = P.multiply(x, P.inverse(tau))
        idx = self.shift_index(n).get(sigma)
        if idx is None:
            raise InvariantError(f"no shift of level {n} matches {P.serialize(x)}")
        return idx, tau

    # -- cardinalities and quantification --------------------------------------------
    def _ln_derived(self, m: int) -> float:
        """ln |Gamma'_m| for the 0-based level m."""
        if self.product is not None and m < len(self.product.levels):
            return math.log(len(self.product.levels[m].derived_subgroup))
        return max(0.0, self.c1 * self.schedule.l[m + 1] + self.c2 - self.ln_ab)

    def _top_level(self, n: int) -> int:
        return self.schedule.big_L(n)

    def tile_cardinality(self, n: int) -> int:
        """|T_n| = kappa^n (|A||B|)^(kappa^n) prod_{1 <= m <= L(n)} |Gamma'_m|^(kappa^n - k_m)."""
        P = self.product
        size = self.kappa ** n
        out = size * (P.na * P.nb) ** size
        for m in range(self._top_level(n)):
            out *= len(P.levels[m].derived_subgroup) ** (size - P.k[m])
        return out

    def ln_tile_cardinality(self, n: int) -> float:
        size = float(self.kappa) ** n
        out = n * math.log(self.kappa) + size * self.ln_ab
        for m in range(self._top_level(n)):
            out += (size - self.schedule.k[m + 1]) * self._ln_derived(m)
        return out

    @cached_property
    def constants(self) -> Constants:
        s = self.schedule
        l = s.l
        C_l = max(sum(3 * l[m] + 1 for m in range(j + 1)) / l[j] for j in range(len(l)))
        C_R = 4500 * C_l
        ln_gamma = [self.c1 * l[m] + self.c2 for m in range(len(l))]
        if len(l) > 1:
            C_1 = max(sum(ln_gamma[1 : j + 1]) / l[j] for j in range(1, len(l)))
            lemma_C2 = min((self.c1 * l[j] - self.c2 - self.ln_ab) / l[j] for j in range(1, len(l)))
        else:
            C_1, lemma_C2 = 0.0, math.inf
        if lemma_C2 <= 0:
            lemma_C2 = self._empirical_C2()
        C_2 = min(lemma_C2, self.kappa * self.ln_ab)
        C_3 = math.log(self.kappa) + self.ln_ab + C_1
        return Constants(C_l, C_R, C_1, C_2, C_3, self.c1, self.c2)

    def _empirical_C2(self, n_max: int = 40) -> float:
        s = self.schedule
        vals = []
        for n in range(1, n_max + 1):
            try:
                L = s.big_L(n)
            except ValueError:
                break
            vals.append(self.ln_tile_cardinality(n) / (self.kappa ** (n - 1) * s.l[L]))
        return min(vals)

    def log_bounds(self, n: int) -> tuple[float, float, float]:
        """(C_2 kappa^(n-1) l_L(n), ln |T_n|, C_3 kappa^n l_L(n))."""
        c = self.constants
        lL = self.schedule.l[self._top_level(n)]
        return (
            c.C_2 * float(self.kappa) ** (n - 1) * lL,
            self.ln_tile_cardinality(n),
            c.C_3 * float(self.kappa) ** n * lL,
        )

    def quantify(self, n: int, exact: bool = False, diameter: bool = False) -> TileStats:
        c = self.constants
        R = c.C_R * float(self.kappa) ** n * self.schedule.l[self._top_level(n)]
        card = self.tile_cardinality(n) if exact else None
        ln_card = math.log(card) if card is not None else self.ln_tile_cardinality(n)
        diam = self.tile_diameter(n) if diameter else None
        if diam is not None and diam > R:
            raise InvariantError(f"diam T_{n} = {diam} exceeds R_{n} = {R}")
        return TileStats(n, ln_card, R, 2 / self.kappa ** n, ln_card, math.log(2) - ln_card, card, diam)

    def tile_diameter(self, n: int, node_cap: int = 100_000) -> int:
        """max |x^-1 y| over x, y in T_n, by exact BFS (small tiles only)."""
        P = self.product
        elems = list(self.tile_elements(n))
        diffs = {P.multiply(P.inverse(x), y) for x in elems for y in elems}
        best = 0
        for z in diffs:
            d = P.word_length_exact(z, radius_cap=10**6, node_cap=node_cap)
            if d is None:
                raise CapExceeded(f"BFS node cap {node_cap} hit while measuring diam T_{n}")
            best = max(best, d)
        return best

    # -- Z side --------------------------------------------------------------------
    def z_shift(self, n: int) -> range:
        """Sigma'_n: [0, |T_0| - 1] for n = 0, else multiples of |T_{n-1}|."""
        if n == 0:
            return range(self.tile_cardinality(0))
        step = self.tile_cardinality(n - 1)
        return range(0, step * self.shift_cardinality(n), step)

    def z_tile(self, n: int) -> tuple[int, int]:
        return 0, self.tile_cardinality(n) - 1


def _canonical_key(x: DeltaElement) -> tuple[int, Config, tuple[Config, ...]]:
    return x.t, x.g0, x.gprime
