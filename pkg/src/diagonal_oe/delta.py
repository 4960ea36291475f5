"""Exact arithmetic in the diagonal product Delta.

An element is stored compactly as ``(t, g0, g'_1, ..., g'_M)``: the cursor,
the level-0 configuration valued in ``A x B`` and, for every finite level
``k_m``, the derived configuration valued in ``Gamma'_m``.  The full level
configuration is recovered as

    g_m(x) = g'_m(x) * thetaA_m(g0(x)) * thetaB_m(g0(x - k_m)).

Configurations are sorted tuples of ``(position, value)`` with no identity
values, so equal elements have equal (hashable) representations.

Words over the generating set are lists of letters ``('t', +-1)``,
``('a', i)`` and ``('b', j)``; ``i`` and ``j`` index the abstract groups A, B.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .errors import HypothesisError, InvariantError
from .groups import GroupBackend, Table, cyclic_table, product_backend
from .schedule import Schedule

Config = tuple[tuple[int, int], ...]
Letter = tuple[str, int]

_HYPOTHESIS_CHECK_LIMIT = 4096


@dataclass(frozen=True, slots=True)
class DeltaElement:
    t: int
    g0: Config = ()
    gprime: tuple[Config, ...] = ()


def _pack(d: dict[int, int]) -> Config:
    return tuple(sorted((p, v) for p, v in d.items() if v))


class DiagonalProduct:
    """The group Delta for a schedule, lamp groups A, B and level backends.

    ``levels[m - 1]`` is the backend for the m-th finite level (k_m < inf).
    """

    def __init__(
        self,
        schedule: Schedule,
        levels: Sequence[GroupBackend] = (),
        a_table: Table | None = None,
        b_table: Table | None = None,
    ):
        self.schedule = schedule
        self.a_table = [list(r) for r in (a_table or cyclic_table(2))]
        self.b_table = [list(r) for r in (b_table or cyclic_table(2))]
        self.na, self.nb = len(self.a_table), len(self.b_table)
        self.gamma0 = product_backend(self.a_table, self.b_table)
        self.M = schedule.M
        if len(levels) != self.M:
            raise HypothesisError(f"need {self.M} level backends for the schedule, got {len(levels)}")
        self.levels = list(levels)
        self.k = list(schedule.k[1:])
        for m, backend in enumerate(self.levels, start=1):
            if len(backend.a_elements) != self.na or len(backend.b_elements) != self.nb:
                raise HypothesisError(f"level {m} ({backend.name}): A_m, B_m sizes differ from A, B (H)")
            if backend.order <= _HYPOTHESIS_CHECK_LIMIT:
                backend.check_hypothesis(self.a_table, self.b_table)
        self.a_inv = [row.index(0) for row in self.a_table]
        self.b_inv = [row.index(0) for row in self.b_table]
        self.identity = DeltaElement(0, (), ((),) * self.M)

    # -- generators ------------------------------------------------------------
    @cached_property
    def letters(self) -> list[Letter]:
        out: list[Letter] = [("t", 1), ("t", -1)]
        out += [("a", i) for i in range(1, self.na)]
        out += [("b", j) for j in range(1, self.nb)]
        return out

    def generator(self, letter: Letter) -> DeltaElement:
        return self.mul_letter(self.identity, letter)

    def generators(self) -> list[tuple[Letter, DeltaElement]]:
        return [(s, self.generator(s)) for s in self.letters]

    def cursor(self, d: int) -> DeltaElement:
        return DeltaElement(d, (), self.identity.gprime)

    def invert_letter(self, letter: Letter) -> Letter:
        kind, i = letter
        if kind == "t":
            return ("t", -i)
        return (kind, self.a_inv[i] if kind == "a" else self.b_inv[i])

    def invert_word(self, word: Sequence[Letter]) -> list[Letter]:
        return [self.invert_letter(s) for s in reversed(word)]

    def mul_letter(self, x: DeltaElement, letter: Letter) -> DeltaElement:
        """Right multiplication ``x * s`` by a generator, touching O(M) sites."""
        kind, i = letter
        if kind == "t":
            return DeltaElement(x.t + i, x.g0, x.gprime)
        if i == 0:
            return x
        p = x.t
        g0 = dict(x.g0)
        old0 = g0.get(p, 0)
        nb = self.nb
        if kind == "a":
            g0[p] = self.gamma0._mul(old0, i * nb)
        else:
            g0[p] = self.gamma0._mul(old0, i)
        gprime = list(x.gprime)
        for m, backend in enumerate(self.levels):
            site = p if kind == "a" else p + self.k[m]
            cfg = dict(x.gprime[m])
            cur = self._level_value(x.g0, cfg, m, site, backend)
            gen = backend.a_elements[i] if kind == "a" else backend.b_elements[i]
            cfg[site] = backend._derived(backend._mul(cur, gen))
            gprime[m] = _pack(cfg)
        return DeltaElement(x.t, _pack(g0), tuple(gprime))

    def evaluate_word(self, word: Iterable[Letter]) -> DeltaElement:
        x = self.identity
        for s in word:
            x = self.mul_letter(x, s)
        return x

    @staticmethod
    def word_range(word: Iterable[Letter]) -> tuple[int, int]:
        """Hull of the cursor positions visited by the prefixes of ``word``."""
        pos = lo = hi = 0
        for kind, i in word:
            if kind == "t":
                pos += i
                lo, hi = min(lo, pos), max(hi, pos)
        return lo, hi

    # -- level reconstruction ----------------------------------------------------
    def _level_value(self, g0, gp: dict[int, int], m: int, pos: int, backend: GroupBackend) -> int:
        """g_{m+1}(pos) from a g0 (tuple or dict) and the level's derived dict."""
        g0d = g0 if isinstance(g0, dict) else dict(g0)
        nb = self.nb
        v = gp.get(pos, 0)
        ia = g0d.get(pos, 0) // nb
        ib = g0d.get(pos - self.k[m], 0) % nb
        if ia:
            v = backend._mul(v, backend.a_elements[ia])
        if ib:
            v = backend._mul(v, backend.b_elements[ib])
        return v

    def reconstruct_level(self, x: DeltaElement, m: int, pos: int) -> int:
        """The value g_m(pos) in Gamma_m (level 0 is A x B itself)."""
        if m == 0:
            return dict(x.g0).get(pos, 0)
        if not 1 <= m <= self.M:
            raise ValueError(f"level {m} outside 0..{self.M}")
        return self._level_value(x.g0, dict(x.gprime[m - 1]), m - 1, pos, self.levels[m - 1])

    def _level_dict(self, g0d: dict[int, int], gp: Config, m: int) -> dict[int, int]:
        backend = self.levels[m]
        gpd = dict(gp)
        km = self.k[m]
        sites = set(gpd) | set(g0d) | {p + km for p in g0d}
        out = {}
        for p in sites:
            v = self._level_value(g0d, gpd, m, p, backend)
            if v:
                out[p] = v
        return out

    def level_config(self, x: DeltaElement, m: int) -> dict[int, int]:
        """Non-identity values of the full configuration g_m."""
        if m == 0:
            return dict(x.g0)
        return self._level_dict(dict(x.g0), x.gprime[m - 1], m - 1)

    # -- group law ---------------------------------------------------------------
    def multiply(self, x: DeltaElement, y: DeltaElement) -> DeltaElement:
        if len(x.gprime) != self.M or len(y.gprime) != self.M:
            raise ValueError("elements belong to diagonal products with different schedules")
        tx = x.t
        mul0 = self.gamma0._mul
        g0 = dict(x.g0)
        for p, v in y.g0:
            q = p + tx
            g0[q] = mul0(g0.get(q, 0), v)
        if not self.M:
            return DeltaElement(tx + y.t, _pack(g0), ())
        x0, y0 = dict(x.g0), dict(y.g0)
        gprime = []
        for m, backend in enumerate(self.levels):
            xm = self._level_dict(x0, x.gprime[m], m)
            ym = self._level_dict(y0, y.gprime[m], m)
            hm = dict(xm)
            for p, v in ym.items():
                q = p + tx
                hm[q] = backend._mul(hm.get(q, 0), v)
            gprime.append(_pack({p: backend._derived(v) for p, v in hm.items()}))
        return DeltaElement(tx + y.t, _pack(g0), tuple(gprime))

    def inverse(self, x: DeltaElement) -> DeltaElement:
        t = x.t
        inv0 = self.gamma0._inv
        g0 = {p - t: inv0(v) for p, v in x.g0}
        gprime = []
        x0 = dict(x.g0)
        for m, backend in enumerate(self.levels):
            xm = self._level_dict(x0, x.gprime[m], m)
            gprime.append(_pack({p - t: backend._derived(backend._inv(v)) for p, v in xm.items()}))
        return DeltaElement(-t, _pack(g0), tuple(gprime))

    def power(self, x: DeltaElement, e: int) -> DeltaElement:
        base = x if e >= 0 else self.inverse(x)
        out = self.identity
        for _ in range(abs(e)):
            out = self.multiply(out, base)
        return out

    def is_valid(self, x: DeltaElement) -> bool:
        if len(x.gprime) != self.M:
            return False
        if any(not 0 < v < self.gamma0.order for _, v in x.g0):
            return False
        return all(
            backend.is_derived(v) and v
            for backend, cfg in zip(self.levels, x.gprime)
            for _, v in cfg
        )

    # -- range and metric ------------------------------------------------------------
    def compute_range(self, x: DeltaElement) -> tuple[int, int]:
        """Smallest interval of cursor positions a word for ``x`` must visit."""
        pts = [0, x.t]
        pts += [p for p, _ in x.g0]
        for km, cfg in zip(self.k, x.gprime):
            for p, _ in cfg:
                pts += (p, p - km)
        return min(pts), max(pts)

    def range_length(self, x: DeltaElement) -> int:
        lo, hi = self.compute_range(x)
        return hi - lo

    def level_range(self, x: DeltaElement, m: int) -> tuple[int, int]:
        """Cursor hull needed to write g_m: A-parts at x, B-parts from x - k_m."""
        pts = [0, x.t]
        if m == 0:
            pts += [p for p, _ in x.g0]
            return min(pts), max(pts)
        backend = self.levels[m - 1]
        km = self.k[m - 1]
        for p, v in self.level_config(x, m).items():
            ia, ib = backend.theta_indices(v)
            d = backend._derived(v)
            if ia or d:
                pts.append(p)
            if ib or d:
                pts.append(p - km)
        return min(pts), max(pts)

    def essential_contribution(self, x: DeltaElement, m: int) -> int:
        """k_m times the sum over half-k_m blocks met by the level range of max(|g_m| - 1, 0)."""
        if m == 0:
            return 0
        if not 1 <= m <= self.M:
            raise ValueError(f"level {m} has k_m = inf or is outside the schedule")
        km = self.k[m - 1]
        backend = self.levels[m - 1]
        lo, hi = self.level_range(x, m)
        blocks: dict[int, int] = {}
        for p, v in self.level_config(x, m).items():
            j = (2 * p) // km
            blocks[j] = max(blocks.get(j, 0), backend.word_length(v) - 1)
        jlo, jhi = (2 * lo) // km, (2 * hi) // km
        return km * sum(w for j, w in blocks.items() if jlo <= j <= jhi and w > 0)

    def metric_upper_bound(self, x: DeltaElement) -> int:
        """500 * sum over levels m <= l(range) of 9 (level range sites + E_m)."""
        if x == self.identity:
            return 0
        diam = self.range_length(x)
        top = 0
        while top < self.M and self.k[top] <= diam:
            top += 1
        total = 0
        for m in range(top + 1):
            lo, hi = self.level_range(x, m)
            total += 9 * ((hi - lo + 1) + self.essential_contribution(x, m))
        return 500 * total

    # -- exact word length ---------------------------------------------------------
    def word_length_exact(self, x: DeltaElement, radius_cap: int = 64, node_cap: int = 100_000) -> int | None:
        """Exact word length by bidirectional BFS, or ``None`` if a cap is hit."""
        if x == self.identity:
            return 0
        letters = self.letters
        mul = self.mul_letter
        seen = ({self.identity: 0}, {x: 0})
        frontier = [[self.identity], [x]]
        depth = [0, 0]
        while depth[0] + depth[1] < radius_cap:
            side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
            mine, other = seen[side], seen[1 - side]
            best = math.inf
            nxt = []
            d = depth[side] + 1
            for u in frontier[side]:
                for s in letters:
                    v = mul(u, s)
                    if v in mine:
                        continue
                    mine[v] = d
                    nxt.append(v)
                    if v in other:
                        best = min(best, d + other[v])
            depth[side] = d
            frontier[side] = nxt
            if best < math.inf:
                return int(best) if best <= radius_cap else None
            if not nxt or len(seen[0]) + len(seen[1]) > node_cap:
                return None
        return None

    # -- constructive writer -----------------------------------------------------------
    @staticmethod
    def _moves(src: int, dst: int) -> list[Letter]:
        step = 1 if dst >= src else -1
        return [("t", step)] * abs(dst - src)

    def _visit(self, pos: int, letters: Sequence[Letter]) -> list[Letter]:
        return self._moves(0, pos) + list(letters) + self._moves(pos, 0)

    def _level_word(self, m: int, pos: int, word: Sequence[Letter]) -> list[Letter]:
        """Write a Gamma_m word at (m, pos): A-letters from pos, B-letters from pos - k_m."""
        km = self.k[m]
        out: list[Letter] = []
        for kind, i in word:
            out += self._visit(pos if kind == "a" else pos - km, [(kind, i)])
        return out

    def _derived_generators(self, m: int) -> dict[int, tuple[list[Letter], Letter, Letter, int]]:
        cache = self.__dict__.setdefault("_dgen_cache", {})
        if m in cache:
            return cache[m]
        backend = self.levels[m]
        gens: dict[int, tuple[list[Letter], Letter, Letter, int]] = {}
        order = sorted(range(backend.order), key=backend.word_length)
        for i, a in enumerate(backend.a_elements):
            for j, b in enumerate(backend.b_elements):
                if not i or not j:
                    continue
                c = backend._mul(backend._mul(a, b), backend._mul(backend._inv(a), backend._inv(b)))
                for sign, cc in ((1, c), (-1, backend._inv(c))):
                    for g in order:
                        v = backend._mul(backend._mul(g, cc), backend._inv(g))
                        if v and v not in gens:
                            gens[v] = (backend.shortest_word(g), ("a", i), ("b", j), sign)
        cache[m] = gens
        return gens

    def _derived_decomposition(self, m: int, gamma: int) -> list[tuple[list[Letter], Letter, Letter, int]]:
        """Shortest product of conjugated commutators equal to ``gamma`` in Gamma'_m."""
        backend = self.levels[m]
        gens = self._derived_generators(m)
        parent: dict[int, tuple[int, int] | None] = {0: None}
        queue = deque([0])
        while queue and gamma not in parent:
            g = queue.popleft()
            for v in gens:
                h = backend._mul(g, v)
                if h not in parent:
                    parent[h] = (g, v)
                    queue.append(h)
        if gamma not in parent:
            raise InvariantError(f"level {m + 1}: value {gamma} is not in the derived subgroup")
        out = []
        g = gamma
        while parent[g] is not None:
            g, v = parent[g]
            out.append(gens[v])
        out.reverse()
        return out

    def write_word(self, x: DeltaElement) -> list[Letter]:
        """A word for ``x`` whose cursor range equals ``compute_range(x)``.

        Commutators are written at each derived site first (each piece returns
        the cursor to 0 and alters nothing else), then g0 is written site by
        site, then the cursor walks to t.
        """
        g0 = dict(x.g0)
        w0: list[Letter] = []
        if g0:
            lo, hi = min(g0), max(g0)
            pos = 0
            w0 += self._moves(pos, lo)
            for p in range(lo, hi + 1):
                if p > lo:
                    w0.append(("t", 1))
                ia, ib = divmod(g0.get(p, 0), self.nb)
                if ia:
                    w0.append(("a", ia))
                if ib:
                    w0.append(("b", ib))
            w0 += self._moves(hi, 0)
        rest = self.multiply(DeltaElement(0, x.g0, x.gprime), self.inverse(self.evaluate_word(w0)))
        if rest.t or rest.g0:
            raise InvariantError("writer: residual element has cursor or level-0 data")
        word: list[Letter] = []
        for m, cfg in enumerate(rest.gprime):
            for pos, gamma in cfg:
                for conj, a, b, sign in self._derived_decomposition(m, gamma):
                    alpha = self._visit(pos, [a])
                    beta = self._visit(pos - self.k[m], [b])
                    comm = alpha + beta + self.invert_word(alpha) + self.invert_word(beta)
                    if sign < 0:
                        comm = self.invert_word(comm)
                    wc = self._level_word(m, pos, conj)
                    word += wc + comm + self.invert_word(wc)
        return word + w0 + self._moves(0, x.t)

    # -- serialization ---------------------------------------------------------------
    @staticmethod
    def _fmt_config(cfg: Config) -> str:
        return ",".join(f"{p}:{v}" for p, v in cfg) if cfg else "-"

    def serialize(self, x: DeltaElement) -> str:
        parts = [str(x.t), self._fmt_config(x.g0)]
        parts += [f"m={m} {self._fmt_config(cfg)}" for m, cfg in enumerate(x.gprime, start=1)]
        return " | ".join(parts)

    def parse(self, line: str) -> DeltaElement:
        fields = [f.strip() for f in line.split("|")]
        if len(fields) != self.M + 2:
            raise ValueError(f"expected {self.M + 2} fields, got {len(fields)}: {line!r}")

        def cfg(text: str) -> Config:
            if text == "-":
                return ()
            return _pack({int(p): int(v) for p, v in (item.split(":") for item in text.split(","))})

        gprime = []
        for m, text in enumerate(fields[2:], start=1):
            tag, _, body = text.partition(" ")
            if tag != f"m={m}":
                raise ValueError(f"expected level tag m={m}, got {tag!r}")
            gprime.append(cfg(body.strip()))
        x = DeltaElement(int(fields[0]), cfg(fields[1]), tuple(gprime))
        if not self.is_valid(x):
            raise ValueError(f"not a valid element: {line!r}")
        return x
