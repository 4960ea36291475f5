"""Plain ``key = value`` run configuration.

Lines starting with ``#`` are comments.  Recognised keys::

    profile.family   power | identity          (used when k is absent)
    profile.alpha    float >= 0
    kappa, lambda    integers >= 2
    depth            number of levels to synthesize
    k, l             explicit schedule, comma separated; k may end with inf
    A, B             cyclic:<n>
    backend          dihedral | table          (default for every level)
    backend.<m>      dihedral | table          (override for level m)
    backend.<m>.file multiplication table for a table backend
    backend.<m>.a    comma-separated ids realising A_m (table backends)
    backend.<m>.b    comma-separated ids realising B_m
    cap, level, eps, seed, samples, out, mode, c1, c2, bfs_cap
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .delta import DiagonalProduct
from .errors import ConfigError, HypothesisError
from .groups import DihedralBackend, GroupBackend, TableBackend, cyclic_table, parse_table
from .schedule import Profile, Schedule, synthesize

_KNOWN = {
    "profile.family", "profile.alpha", "kappa", "lambda", "depth", "k", "l", "A", "B",
    "backend", "cap", "level", "eps", "seed", "samples", "out", "mode", "c1", "c2", "bfs_cap",
}


@dataclass
class RunConfig:
    profile: Profile | None = None
    kappa: int = 2
    lam: int = 2
    depth: int = 45
    k: list[float] | None = None
    l: list[int] | None = None
    a_order: int = 2
    b_order: int = 2
    backends: dict[str, str] = field(default_factory=dict)
    cap: int = 10**6
    level: int = 1
    eps: float = 0.5
    seed: int = 0
    samples: int | None = None
    out: str = "out"
    mode: str = "materialized"
    c1: float = 1.0
    c2: float = 0.0
    bfs_cap: int = 100_000
    base_dir: Path = Path(".")

    # -- construction --------------------------------------------------------------
    def schedule(self) -> Schedule:
        if self.k is not None:
            finite = [int(v) for v in self.k if v != math.inf]
            terminated = any(v == math.inf for v in self.k)
            if self.l is None or len(self.l) != len(finite):
                raise ConfigError("l must list one diameter per finite k")
            sched = Schedule(self.kappa, self.lam, tuple(finite), tuple(self.l), terminated, self.profile)
            sched.validate()
            return sched
        if self.profile is None:
            raise ConfigError("config needs either an explicit k/l schedule or profile.family")
        return synthesize(self.profile, self.kappa, self.lam, self.depth)

    def _backend(self, m: int, lm: int) -> GroupBackend:
        kind = self.backends.get(f"backend.{m}", self.backends.get("backend", "dihedral"))
        if kind == "dihedral":
            if self.a_order != 2 or self.b_order != 2:
                raise HypothesisError(f"level {m}: the dihedral backend needs A = B = Z/2 (H)")
            return DihedralBackend(lm)
        if kind == "table":
            path = self.backends.get(f"backend.{m}.file")
            if path is None:
                raise ConfigError(f"backend.{m}.file is required for a table backend")
            table = parse_table((self.base_dir / path).read_text())
            try:
                a = [int(v) for v in self.backends[f"backend.{m}.a"].split(",")]
                b = [int(v) for v in self.backends[f"backend.{m}.b"].split(",")]
            except KeyError as exc:
                raise ConfigError(f"table backend for level {m} needs {exc.args[0]}") from None
            return TableBackend(table, a, b, name=f"level{m}")
        raise ConfigError(f"unknown backend kind {kind!r} for level {m}")

    def product(self, schedule: Schedule | None = None) -> DiagonalProduct:
        sched = schedule or self.schedule()
        levels = [self._backend(m, sched.l[m]) for m in range(1, sched.M + 1)]
        return DiagonalProduct(sched, levels, cyclic_table(self.a_order), cyclic_table(self.b_order))


def _cyclic(value: str, key: str) -> int:
    kind, _, n = value.partition(":")
    if kind != "cyclic" or not n.isdigit() or int(n) < 2:
        raise ConfigError(f"{key} must look like cyclic:<n> with n >= 2, got {value!r}")
    return int(n)


def _number_list(value: str, key: str, allow_inf: bool) -> list:
    out = []
    for tok in value.split(","):
        tok = tok.strip()
        if allow_inf and tok in ("inf", "∞"):
            out.append(math.inf)
            continue
        try:
            out.append(int(tok))
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {tok!r}") from None
    return out


def parse_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in _KNOWN and not key.startswith("backend."):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        raw[key] = value

    cfg = RunConfig(base_dir=Path(base_dir))
    try:
        family = raw.get("profile.family")
        if family == "identity":
            cfg.profile = Profile.identity()
        elif family == "power":
            cfg.profile = Profile.power(float(raw.get("profile.alpha", "0")))
        elif family is not None:
            raise ConfigError(f"unknown profile.family {family!r}")
        cfg.kappa = int(raw.get("kappa", cfg.kappa))
        cfg.lam = int(raw.get("lambda", cfg.lam))
        cfg.depth = int(raw.get("depth", cfg.depth))
        if "k" in raw:
            cfg.k = _number_list(raw["k"], "k", allow_inf=True)
        if "l" in raw:
            cfg.l = _number_list(raw["l"], "l", allow_inf=False)
        if "A" in raw:
            cfg.a_order = _cyclic(raw["A"], "A")
        if "B" in raw:
            cfg.b_order = _cyclic(raw["B"], "B")
        cfg.backends = {k: v for k, v in raw.items() if k == "backend" or k.startswith("backend.")}
        cfg.cap = int(raw.get("cap", cfg.cap))
        cfg.level = int(raw.get("level", cfg.level))
        cfg.eps = float(raw.get("eps", cfg.eps))
        cfg.seed = int(raw.get("seed", cfg.seed))
        if "samples" in raw:
            cfg.samples = int(raw["samples"])
        cfg.out = raw.get("out", cfg.out)
        cfg.mode = raw.get("mode", cfg.mode)
        cfg.c1 = float(raw.get("c1", cfg.c1))
        cfg.c2 = float(raw.get("c2", cfg.c2))
        cfg.bfs_cap = int(raw.get("bfs_cap", cfg.bfs_cap))
    except ValueError as exc:
        if isinstance(exc, (ConfigError, HypothesisError)):
            raise
        raise ConfigError(str(exc)) from None
    if cfg.mode not in ("materialized", "synthetic"):
        raise ConfigError(f"mode must be materialized or synthetic, got {cfg.mode!r}")
    if cfg.eps <= 0:
        raise ConfigError("eps must be positive")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent)
