"""Finite lamp groups Gamma_m with marked subgroups A_m and B_m.

Elements are canonical integer ids with ``0`` the identity.  Every backend
exposes the abelianized projection ``theta`` onto ``A_m x B_m`` and the
decomposition ``g = derived_part(g) * thetaA(g) * thetaB(g)`` where the
derived part lies in the normal closure of ``[A_m, B_m]``.

Letters of the alphabet ``A_m u B_m`` are written ``('a', i)`` / ``('b', j)``
where ``i`` (resp. ``j``) indexes the abstract group ``A`` (resp. ``B``).
"""

from __future__ import annotations

from collections import deque
from functools import cached_property
from typing import Sequence

from .errors import HypothesisError

Table = Sequence[Sequence[int]]
Letter = tuple[str, int]


def cyclic_table(n: int) -> list[list[int]]:
    """Cayley table of Z/n with ids 0..n-1."""
    if n < 1:
        raise ValueError(f"cyclic group order must be positive, got {n}")
    return [[(i + j) % n for j in range(n)] for i in range(n)]


def parse_table(text: str) -> list[list[int]]:
    """Parse a whitespace-separated square multiplication table."""
    rows = [[int(tok) for tok in line.split()] for line in text.splitlines() if line.strip()]
    check_table(rows)
    return rows


def check_table(table: Table) -> None:
    n = len(table)
    if n == 0 or any(len(row) != n for row in table):
        raise ValueError("multiplication table must be a non-empty square matrix")
    full = set(range(n))
    for i, row in enumerate(table):
        if set(row) != full:
            raise ValueError(f"row {i} of the table is not a permutation of 0..{n - 1}")
        if table[0][i] != i or row[0] != i:
            raise ValueError("element 0 must be the identity")
    for g in range(n):
        for h in range(n):
            gh = table[g][h]
            for k in range(n):
                if table[gh][k] != table[g][table[h][k]]:
                    raise ValueError(f"table is not associative at ({g}, {h}, {k})")


class GroupBackend:
    """Common machinery; subclasses provide ``_mul``, ``_inv`` and ``theta_indices``."""

    name = "group"
    order: int
    a_elements: tuple[int, ...]
    b_elements: tuple[int, ...]

    # -- group law ---------------------------------------------------------
    def _check(self, g: int) -> None:
        if not (isinstance(g, int) and 0 <= g < self.order):
            raise ValueError(f"invalid element id {g!r} for {self.name} of order {self.order}")

    def mul(self, g: int, h: int) -> int:
        self._check(g)
        self._check(h)
        return self._mul(g, h)

    def inv(self, g: int) -> int:
        self._check(g)
        return self._inv(g)

    def _mul(self, g: int, h: int) -> int:  # pragma: no cover - abstract
        raise NotImplementedError

    def _inv(self, g: int) -> int:  # pragma: no cover - abstract
        raise NotImplementedError

    def theta_indices(self, g: int) -> tuple[int, int]:  # pragma: no cover - abstract
        raise NotImplementedError

    def elements(self) -> range:
        return range(self.order)

    # -- abelianization ------------------------------------------------------
    def theta(self, g: int) -> tuple[int, int]:
        """Image of ``g`` in ``A_m x B_m``, as element ids of Gamma_m."""
        self._check(g)
        ia, ib = self.theta_indices(g)
        return self.a_elements[ia], self.b_elements[ib]

    def derived_part(self, g: int) -> int:
        self._check(g)
        return self._derived(g)

    def _derived(self, g: int) -> int:
        ia, ib = self.theta_indices(g)
        ab = self._mul(self.a_elements[ia], self.b_elements[ib])
        return self._mul(g, self._inv(ab))

    @cached_property
    def derived_subgroup(self) -> tuple[int, ...]:
        """Normal closure of [A_m, B_m], sorted."""
        comms = set()
        for a in self.a_elements[1:]:
            for b in self.b_elements[1:]:
                c = self._mul(self._mul(a, b), self._mul(self._inv(a), self._inv(b)))
                for g in range(self.order):
                    comms.add(self._mul(self._mul(g, c), self._inv(g)))
        comms.discard(0)
        return tuple(sorted(_closure([0], sorted(comms), self._mul)))

    @cached_property
    def _derived_set(self) -> frozenset[int]:
        return frozenset(self.derived_subgroup)

    def is_derived(self, g: int) -> bool:
        return g in self._derived_set

    # -- word metric ---------------------------------------------------------
    def letters(self) -> list[tuple[Letter, int]]:
        out = [(("a", i), a) for i, a in enumerate(self.a_elements) if i]
        out += [(("b", j), b) for j, b in enumerate(self.b_elements) if j]
        return out

    def letter_value(self, letter: Letter) -> int:
        kind, i = letter
        return self.a_elements[i] if kind == "a" else self.b_elements[i]

    @cached_property
    def _bfs(self) -> tuple[list[int], list[tuple[int, Letter] | None]]:
        dist = [-1] * self.order
        parent: list[tuple[int, Letter] | None] = [None] * self.order
        dist[0] = 0
        queue = deque([0])
        gens = self.letters()
        while queue:
            g = queue.popleft()
            for letter, s in gens:
                h = self._mul(g, s)
                if dist[h] < 0:
                    dist[h] = dist[g] + 1
                    parent[h] = (g, letter)
                    queue.append(h)
        return dist, parent

    def word_length(self, g: int) -> int:
        """Distance from the identity in the Cayley graph over A_m u B_m minus {e}."""
        self._check(g)
        d = self._bfs[0][g]
        if d < 0:
            raise HypothesisError(f"{self.name}: A_m u B_m does not generate element {g}")
        return d

    def shortest_word(self, g: int) -> list[Letter]:
        self._check(g)
        dist, parent = self._bfs
        if dist[g] < 0:
            raise HypothesisError(f"{self.name}: A_m u B_m does not generate element {g}")
        word: list[Letter] = []
        while g:
            g, letter = parent[g]
            word.append(letter)
        word.reverse()
        return word

    @cached_property
    def diameter(self) -> int:
        return max(self.word_length(g) for g in range(self.order))

    # -- hypothesis checks ---------------------------------------------------
    def check_hypothesis(self, a_table: Table, b_table: Table) -> None:
        """Raise HypothesisError unless the structural part of (H) holds.

        ``a_table`` and ``b_table`` are the Cayley tables of the abstract
        groups A and B; ``a_elements[i]`` must realise the abstract element i.
        """
        for label, elems, table in (("A", self.a_elements, a_table), ("B", self.b_elements, b_table)):
            if len(elems) != len(table):
                raise HypothesisError(f"{self.name}: |{label}_m| = {len(elems)} differs from |{label}| = {len(table)}")
            if elems[0] != 0 or len(set(elems)) != len(elems):
                raise HypothesisError(f"{self.name}: {label}_m must list distinct ids starting with the identity")
            for i, x in enumerate(elems):
                for j, y in enumerate(elems):
                    if self._mul(x, y) != elems[table[i][j]]:
                        raise HypothesisError(f"{self.name}: {label}_m is not a subgroup isomorphic to {label}")
        gens = [s for _, s in self.letters()]
        if len(_closure([0], gens, self._mul)) != self.order:
            raise HypothesisError(f"{self.name}: A_m u B_m does not generate the group (H)")
        na, nb = len(self.a_elements), len(self.b_elements)
        if self.order != na * nb * len(self.derived_subgroup):
            raise HypothesisError(
                f"{self.name}: hypothesis (H) fails: quotient by the normal closure of [A_m,B_m] "
                f"has order {self.order // len(self.derived_subgroup)}, expected |A||B| = {na * nb}"
            )
        seen = set()
        for i, a in enumerate(self.a_elements):
            for j, b in enumerate(self.b_elements):
                if self.theta_indices(self._mul(a, b)) != (i, j):
                    raise HypothesisError(f"{self.name}: theta does not invert A_m x B_m -> quotient (H)")
                seen.add((i, j))
        if len(seen) != na * nb:
            raise HypothesisError(f"{self.name}: A_m x B_m -> quotient is not a bijection (H)")

    def __repr__(self) -> str:
        return f"<{self.name} order={self.order}>"


def _closure(start: Sequence[int], gens: Sequence[int], mul) -> set[int]:
    seen = set(start)
    frontier = list(seen)
    while frontier:
        nxt = []
        for g in frontier:
            for s in gens:
                h = mul(g, s)
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        frontier = nxt
    return seen


class TableBackend(GroupBackend):
    """Backend given by an explicit multiplication table."""

    def __init__(self, table: Table, a_elements: Sequence[int], b_elements: Sequence[int], name: str = "table"):
        self._table = [list(row) for row in table]
        self.order = len(self._table)
        self.name = name
        self.a_elements = tuple(a_elements)
        self.b_elements = tuple(b_elements)
        for g in self.a_elements + self.b_elements:
            self._check(g)
        self._inverse = [row.index(0) for row in self._table]
        self._theta = self._coset_map()

    def _mul(self, g: int, h: int) -> int:
        return self._table[g][h]

    def _inv(self, g: int) -> int:
        return self._inverse[g]

    def _coset_map(self) -> list[tuple[int, int] | None]:
        # g lies in the coset a*b*Gamma' for exactly one (a, b) when (H) holds
        theta: list[tuple[int, int] | None] = [None] * self.order
        derived = self.derived_subgroup
        for i, a in enumerate(self.a_elements):
            for j, b in enumerate(self.b_elements):
                ab = self._mul(a, b)
                for d in derived:
                    g = self._mul(ab, d)
                    if theta[g] is None:
                        theta[g] = (i, j)
        return theta

    def theta_indices(self, g: int) -> tuple[int, int]:
        t = self._theta[g]
        if t is None:
            raise HypothesisError(f"{self.name}: element {g} is outside A_m B_m Gamma'_m (H)")
        return t


def product_backend(a_table: Table, b_table: Table) -> TableBackend:
    """Gamma_0 = A x B with id ``ia * |B| + ib``."""
    na, nb = len(a_table), len(b_table)
    table = [
        [a_table[g // nb][h // nb] * nb + b_table[g % nb][h % nb] for h in range(na * nb)]
        for g in range(na * nb)
    ]
    return TableBackend(table, [i * nb for i in range(na)], list(range(nb)), name="AxB")


class DihedralBackend(GroupBackend):
    """Dihedral group of order 2l generated by two reflections a, b with ab = r.

    The element ``r^j a^f`` has id ``2j + f``; ``b = r^{-1} a``.  The derived
    subgroup is the even rotations, so l must be even for the quotient to be
    the Klein group A x B = Z/2 x Z/2.
    """

    def __init__(self, l: int):
        if not isinstance(l, int) or l < 2:
            raise HypothesisError(f"dihedral backend needs an even rotation order >= 2, got {l!r}")
        if l % 2:
            raise HypothesisError(
                f"dihedral backend with odd l_m = {l}: the quotient by the normal closure of "
                "[A_m,B_m] is Z/2, not A_m x B_m, violating hypothesis (H)"
            )
        self.l = l
        self.order = 2 * l
        self.name = f"D{l}"
        self.a_elements = (0, 1)
        self.b_elements = (0, 2 * (l - 1) + 1)

    def _mul(self, g: int, h: int) -> int:
        j1, f1 = g >> 1, g & 1
        j2 = h >> 1
        j = j1 - j2 if f1 else j1 + j2
        return ((j % self.l) << 1) | (f1 ^ (h & 1))

    def _inv(self, g: int) -> int:
        if g & 1:
            return g
        return ((-(g >> 1)) % self.l) << 1

    def theta_indices(self, g: int) -> tuple[int, int]:
        j, f = g >> 1, g & 1
        return (j + f) & 1, j & 1

    def _derived(self, g: int) -> int:
        ia, ib = self.theta_indices(g)
        # (a^ia b^ib)^-1 = b^ib a^ia since both are involutions
        x = g
        if ib:
            x = self._mul(x, self.b_elements[1])
        if ia:
            x = self._mul(x, 1)
        return x

    @cached_property
    def derived_subgroup(self) -> tuple[int, ...]:
        return tuple(j << 1 for j in range(0, self.l, 2))

    def word_length(self, g: int) -> int:
        self._check(g)
        j, f = g >> 1, g & 1
        if f:
            return min(2 * j + 1, 2 * (self.l - j) - 1)
        return min(2 * j, 2 * (self.l - j))

    def shortest_word(self, g: int) -> list[Letter]:
        self._check(g)
        j, f = g >> 1, g & 1
        a, b = ("a", 1), ("b", 1)
        if f:
            if 2 * j + 1 <= 2 * (self.l - j) - 1:
                return [a, b] * j + [a]
            return [b, a] * (self.l - j - 1) + [b]
        if 2 * j <= 2 * (self.l - j):
            return [a, b] * j
        return [b, a] * (self.l - j)

    @cached_property
    def diameter(self) -> int:
        return self.l
