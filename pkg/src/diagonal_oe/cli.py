"""Command-line entry point: ``diagonal-oe {synth,build,verify,simulate,report}``.

Exit codes: 0 success, 2 configuration or hypothesis error, 3 materialization
cap exceeded, 4 invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

from .config import RunConfig, load_config
from .coupling import Coupling, c_grid, series_report, stability
from .errors import CapExceeded, ConfigError, HypothesisError, InvariantError
from .tiling import FolnerTiling

log = logging.getLogger("diagonal_oe")

EXIT_CONFIG, EXIT_CAP, EXIT_INVARIANT = 2, 3, 4


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


def fmt_exp(ln_value: float) -> str:
    """exp(ln_value) in scientific notation with 12 significant digits, without overflow."""
    if ln_value < 700:
        return f"{math.exp(ln_value):.11e}"
    e10 = ln_value / math.log(10)
    exp = math.floor(e10)
    mant = 10 ** (e10 - exp)
    if mant >= 9.999999999995:
        mant, exp = 1.0, exp + 1
    return f"{mant:.11f}e+{exp}"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    write_atomic(path, buf.getvalue())
    log.info("wrote %s", path)


def letter_name(s) -> str:
    kind, i = s
    return f"cursor{i:+d}" if kind == "t" else f"{kind}{i}"


# -- commands ----------------------------------------------------------------------


def cmd_synth(cfg: RunConfig, out: Path) -> int:
    sched = cfg.schedule()
    if cfg.mode == "materialized":
        cfg.product(sched)
    depth = cfg.depth if sched.terminated else sched.M
    write_csv(out / "schedule.csv", ["m", "k_m", "l_m"], sched.rows(depth))
    log.info("schedule: M=%d finite levels, terminated=%s", sched.M, sched.terminated)
    return 0


def _stats_rows(tiling: FolnerTiling, levels, exact: bool):
    for n in levels:
        st = tiling.quantify(n, exact=exact)
        card = st.cardinality if exact else fmt_exp(st.ln_cardinality)
        eps_prime = fmt(2 / st.cardinality) if exact else fmt_exp(st.ln_eps_prime)
        yield n, card, st.R, st.eps, card, eps_prime, st.ln_cardinality


_STATS_HEADER = ["n", "T_n", "R_n", "eps_n", "Rprime_n", "epsprime_n", "ln_T_n"]


def cmd_build(cfg: RunConfig, out: Path) -> int:
    product = cfg.product()
    tiling = FolnerTiling(product, cap=cfg.cap, c1=cfg.c1, c2=cfg.c2)
    sizes = tiling.build_tiles(cfg.level)
    for n in range(cfg.level + 1):
        shift = sorted(product.serialize(x) for x in tiling.build_shift(n))
        write_atomic(out / f"shift_{n}.txt", "".join(line + "\n" for line in shift))
        tile = sorted(product.serialize(x) for x in tiling.tile_elements(n))
        write_atomic(out / f"tile_{n}.txt", "".join(line + "\n" for line in tile))
        log.info("|Sigma_%d|=%d |T_%d|=%d", n, len(shift), n, sizes[n])
    write_csv(out / "stats.csv", _STATS_HEADER, _stats_rows(tiling, range(cfg.level + 1), exact=True))
    return 0


def _check_file(path: Path, product, expected: set[str] | None, tiling: FolnerTiling, fn: int | None) -> None:
    lines = path.read_text().splitlines()
    if lines != sorted(lines):
        raise InvariantError(f"{path} is not sorted")
    if expected is not None:
        if set(lines) != expected or len(lines) != len(expected):
            raise InvariantError(f"{path} does not match the recomputed shift set")
        return
    seen = bytearray(tiling.folner_cardinality(fn))
    for line in lines:
        r = tiling.folner_rank(product.parse(line), fn)
        if seen[r]:
            raise InvariantError(f"{path}: duplicate element {line}")
        seen[r] = 1
    if len(lines) != len(seen):
        raise InvariantError(f"{path}: {len(lines)} elements, F_{fn} has {len(seen)}")


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    product = cfg.product()
    tiling = FolnerTiling(product, cap=cfg.cap, c1=cfg.c1, c2=cfg.c2)
    sizes = tiling.build_tiles(cfg.level)
    for n in range(cfg.level + 1):
        fn = tiling.kappa ** n
        for name, expected in (
            (f"shift_{n}.txt", {product.serialize(x) for x in tiling.build_shift(n)}),
            (f"tile_{n}.txt", None),
        ):
            path = out / name
            if path.exists():
                _check_file(path, product, expected, tiling, fn)
                log.info("%s matches", path)
        size = sizes[n]
        leaving = {s: 0 for s in product.letters}
        for x in tiling.tile_elements(n):
            for s in product.letters:
                if not tiling.in_folner(product.mul_letter(x, s), fn):
                    leaving[s] += 1
        for s, count in leaving.items():
            pair = count + leaving[product.invert_letter(s)] if s != product.invert_letter(s) else 2 * count
            if pair * fn > 2 * size:
                raise InvariantError(f"generator {letter_name(s)} moves too much of T_{n} out")
        cursor = leaving[("t", 1)] + leaving[("t", -1)]
        if cursor * fn != 2 * size:
            raise InvariantError(f"cursor boundary of T_{n} is {cursor}, expected 2|T_{n}|/{fn}")
        msg = f"|T_{n}|={size}, partition OK, Følner ratio {cursor * fn // size}/{fn}"
        log.info(msg)
    return 0


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    product = cfg.product()
    tiling = FolnerTiling(product, cap=cfg.cap, c1=cfg.c1, c2=cfg.c2)
    rho = product.schedule.rho
    sims = {}
    for N in sorted({max(cfg.level - 1, 0), cfg.level}):
        coupling = Coupling(tiling, N)
        sims[N] = coupling.simulate(cfg.samples, cfg.seed)
    sim = sims[cfg.level]
    letters = product.letters
    write_csv(
        out / "simulate.csv",
        ["generator", "distance", "count"],
        ((letter_name(s), d, k) for s in letters for d, k in sim.histogram(s).items()),
    )
    write_csv(
        out / "simulate_summary.csv",
        ["generator", "N", "points", "exhaustive", "seed", "out_of_truncation", "oot_frequency", "injective"],
        (
            (letter_name(s), sim.N, sim.points, sim.exhaustive, sim.seed,
             sim.out_of_truncation[s], sim.oot_frequency(s), sim.injective[s])
            for s in letters
        ),
    )
    rows = []
    if len(sims) == 2:
        prev = sims[cfg.level - 1]
        for s, table in stability(prev, sim, rho, cfg.eps).items():
            rows += [(letter_name(s), c, ma, mb, rel) for c, ma, mb, rel in table]
    else:
        rows = [(letter_name(s), c, sim.moment(s, c, rho, cfg.eps), "", "") for s in letters for c in c_grid()]
    write_csv(out / "moments.csv", ["generator", "c", "moment_prev", "moment", "relative_change"], rows)
    for s in letters:
        log.info("%s: OutOfTruncation %d/%d, injective=%s", letter_name(s), sim.out_of_truncation[s], sim.points, sim.injective[s])
    return 0


def cmd_report(cfg: RunConfig, out: Path) -> int:
    sched = cfg.schedule()
    n_max = min(cfg.level if cfg.level > 1 else 40, 40)
    if cfg.mode == "materialized":
        tiling = FolnerTiling(cfg.product(sched), cap=cfg.cap, c1=cfg.c1, c2=cfg.c2)
    else:
        tiling = FolnerTiling(schedule=sched, c1=cfg.c1, c2=cfg.c2, ln_ab=math.log(cfg.a_order * cfg.b_order))
    rep = series_report(sched, cfg.eps, n_max, tiling=tiling)
    ln10 = math.log(10)
    write_csv(
        out / "series.csv",
        ["n", "log10_psi_term", "log10_phi_term", "phi_ratio", "log10_psi_partial_sum", "phi_partial_sum"],
        ((r.n, r.ln_psi_term / ln10, r.ln_phi_term / ln10, r.phi_ratio, r.ln_psi_partial / ln10, r.phi_partial)
         for r in rep.rows),
    )
    exact = cfg.mode == "materialized"
    write_csv(out / "stats.csv", _STATS_HEADER, _stats_rows(tiling, range(0, n_max + 1), exact=exact))
    c = rep.constants
    write_csv(
        out / "constants.csv",
        ["C_l", "C_R", "C_1", "C_2", "C_3", "c1", "c2", "c_phi", "n0", "phi_bound"],
        [(c.C_l, c.C_R, c.C_1, c.C_2, c.C_3, c.c1, c.c2, rep.c_phi if rep.c_phi is not None else "", rep.n0, rep.phi_bound())],
    )
    log.info("Psi terms decrease from n0=%d; phi ratio bound %.6g", rep.n0, rep.phi_bound())
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "build": cmd_build,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diagonal-oe", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="key = value configuration file")
    parser.add_argument("--level", type=int, help="truncation level N")
    parser.add_argument("--eps", type=float)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--mode", choices=["materialized", "synthetic"])
    parser.add_argument("--out", help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        cfg = load_config(args.config)
        for key in ("level", "eps", "samples", "seed", "mode", "out"):
            value = getattr(args, key)
            if value is not None:
                setattr(cfg, key, value)
        if cfg.eps <= 0:
            raise ConfigError("eps must be positive")
        return COMMANDS[args.command](cfg, Path(cfg.out))
    except (ConfigError, HypothesisError) as exc:
        log.error("configuration rejected: %s", exc)
        return EXIT_CONFIG
    except CapExceeded as exc:
        log.error("cap exceeded: %s", exc)
        return EXIT_CAP
    except InvariantError as exc:
        log.error("invariant failure: %s", exc)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
