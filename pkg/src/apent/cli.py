"""``apent`` command line: entropy estimates, Verblunsky coefficients, simulations.

Exit codes: 0 success; 1 invalid input; 2 a valid but degenerate answer
(``-inf`` entropy or a singular prefix).  Reports go to files; stdout carries a
one-line summary per result.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import entropy as ent
from . import randrep
from .errors import ApentError, SingularMatrixError, SingularPrefixError
from .freegroup import check_letter_order, length_lex_enumeration
from .pdf import PDFSpec, spec_from_json, spec_to_json
from .verblunsky import coefficient_sequence, coefficients_from_json, coefficients_to_json, \
    reconstruct, sequence_from_partial

EXIT_OK, EXIT_INVALID, EXIT_DEGENERATE = 0, 1, 2

DEFAULT_OUT = {
    "entropy": "entropy_report.json",
    "verblunsky": "verblunsky.json",
    "simulate": "simulate_report.json",
    "mollify": "mollify_profile.csv",
}


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    spec: str | None = None
    method: str = "all"
    levels: int | None = None
    tol: float = ent.DEFAULT_TOL
    enum_order: tuple[int, ...] | None = None
    suite: tuple[str, ...] = ()
    n: int | None = None
    samples: int | None = None
    seed: int | None = None
    out: str | None = None
    csv: bool = False
    dump: bool = False
    inverse: bool = False
    roundtrip: bool = False
    coeffs: str | None = None
    t_grid: tuple[float, ...] | None = None

    def __post_init__(self):
        for name in ("levels", "n", "samples"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise UsageError(f"--{name} must be positive")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.seed is not None and self.seed < 0:
            raise UsageError("--seed must be non-negative")

    @property
    def output(self) -> Path:
        if self.out:
            return Path(self.out)
        p = Path(DEFAULT_OUT[self.command])
        return p.with_suffix(".csv") if self.csv and self.command == "entropy" else p


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="apent", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("--spec", help="spec JSON file, or inline JSON object")
        sp.add_argument("--out", help="output file")

    e = sub.add_parser("entropy", help="estimate the annealed entropy")
    common(e)
    e.add_argument("--method", default="all", choices=ent.METHODS + ("all",))
    e.add_argument("--levels", type=int, help="maximum level (default per method)")
    e.add_argument("--tol", type=float, default=ent.DEFAULT_TOL)
    e.add_argument("--enum-order", type=_ints, help="letter order, e.g. 1,-1,2,-2")
    e.add_argument("--csv", action="store_true", help="write CSV instead of JSON")

    v = sub.add_parser("verblunsky", help="extract or reconstruct Verblunsky coefficients")
    common(v)
    v.add_argument("--levels", type=int, default=2, help="enumerate the ball of this radius")
    v.add_argument("--enum-order", type=_ints)
    v.add_argument("--inverse", action="store_true", help="reconstruct from --coeffs")
    v.add_argument("--coeffs", help="coefficient JSON file for --inverse")
    v.add_argument("--roundtrip", action="store_true", help="re-derive and report the max error")

    s = sub.add_parser("simulate", help="run Monte-Carlo suites")
    common(s, spec=False)
    s.add_argument("--suite", type=lambda t: tuple(x for x in t.split(",") if x), required=True,
                   help=f"comma-separated from {', '.join(randrep.SUITES)}, or 'all'")
    s.add_argument("--n", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--dump", action="store_true", help="also write raw samples as CSV")

    m = sub.add_parser("mollify", help="entropy profile of t·φ + (1-t)·regular")
    common(m)
    m.add_argument("--t-grid", type=_floats, required=True, help="comma-separated t values in (0, 1]")
    m.add_argument("--method", default="formula1", choices=ent.METHODS)
    m.add_argument("--levels", type=int)
    m.add_argument("--tol", type=float, default=ent.DEFAULT_TOL)
    m.add_argument("--enum-order", type=_ints)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__}
    return RunConfig(**fields)


def load_spec(source: str | None) -> PDFSpec:
    if not source:
        raise UsageError("--spec is required")
    text = source if source.lstrip().startswith("{") else Path(source).read_text()
    return spec_from_json(json.loads(text))


def _write(path: Path, text: str) -> None:
    path.write_text(text)


def _fmt(x: float) -> str:
    return "-inf" if x == -math.inf else f"{x:.15g}"


def cmd_entropy(cfg: RunConfig) -> int:
    spec = load_spec(cfg.spec)
    order = check_letter_order(spec.rank, cfg.enum_order)
    methods = ("formula1", "formula2", "verblunsky", "seward") if cfg.method == "all" else (cfg.method,)
    reports = [ent.estimate_hann(spec, m, cfg.levels, cfg.tol, order) for m in methods]
    if cfg.csv:
        text = "".join(r.to_csv() if i == 0 else r.to_csv().split("\n", 1)[1]
                       for i, r in enumerate(reports))
    else:
        text = json.dumps({"spec": spec_to_json(spec), "reports": [r.to_dict() for r in reports]},
                          indent=2) + "\n"
    _write(cfg.output, text)
    for r in reports:
        status = "stabilized" if r.stabilized else "not stabilized"
        print(f"{r.method}: estimate={_fmt(r.estimate)} ({status}, levels={r.levels_computed})")
    return EXIT_DEGENERATE if any(r.estimate == -math.inf for r in reports) else EXIT_OK


def cmd_verblunsky(cfg: RunConfig) -> int:
    if cfg.inverse:
        if not cfg.coeffs:
            raise UsageError("--inverse requires --coeffs")
        coeffs, rank, k, order = coefficients_from_json(json.loads(Path(cfg.coeffs).read_text()))
        order = check_letter_order(rank, cfg.enum_order or order)
        enum = length_lex_enumeration(rank, len(coeffs) + 1, letter_order=order)
        P = reconstruct(coeffs, enum, k)
        out = {"partial": P.to_json(), "letter_order": list(order)}
        if cfg.roundtrip:
            again = sequence_from_partial(P, enum)
            out["roundtrip_max_error"] = max((float(np.max(np.abs(a - b))) if a.size else 0.0
                                              for a, b in zip(coeffs, again)), default=0.0)
        _write(cfg.output, json.dumps(out, indent=2) + "\n")
        msg = f"reconstructed {len(P.elements)} elements"
    else:
        spec = load_spec(cfg.spec)
        order = check_letter_order(spec.rank, cfg.enum_order)
        enum = length_lex_enumeration(spec.rank, radius=cfg.levels, letter_order=order)
        coeffs = coefficient_sequence(spec, enum)
        out = coefficients_to_json(coeffs, enum, spec.k)
        if cfg.roundtrip:
            P = reconstruct(coeffs, enum, spec.k)
            from .pdf import restrict

            direct = restrict(spec, enum.order).Q
            again = sequence_from_partial(P, enum)
            err = max([float(np.max(np.abs(P.Q - direct)))] +
                      [float(np.max(np.abs(a - b))) for a, b in zip(coeffs, again) if a.size])
            out["roundtrip_max_error"] = err
        _write(cfg.output, json.dumps(out, indent=2) + "\n")
        msg = f"extracted {len(coeffs)} coefficients"
    if "roundtrip_max_error" in out:
        msg += f", roundtrip max error {out['roundtrip_max_error']:.3e}"
    print(msg)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    suites = randrep.SUITES if cfg.suite == ("all",) else cfg.suite
    for name in suites:
        if name not in randrep.SUITES:
            raise UsageError(f"unknown suite {name!r}; choose from {', '.join(randrep.SUITES)}")
    seed = cfg.seed if cfg.seed is not None else randrep.new_seed()
    reports = [randrep.run_suite(name, cfg.n, cfg.samples, seed) for name in suites]
    out = cfg.output
    _write(out, json.dumps({"seed": seed, "reports": [r.to_dict() for r in reports]}, indent=2) + "\n")
    if cfg.dump:
        for r in reports:
            if r.raw:
                _write(out.with_name(f"{out.stem}_{r.test}.csv"), r.dump_csv())
    for r in reports:
        print(f"{r.test}: {'pass' if r.passed else 'FAIL'} (seed={seed})")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_INVALID


def cmd_mollify(cfg: RunConfig) -> int:
    grid = cfg.t_grid or ()
    if not grid:
        raise UsageError("--t-grid is empty")
    bad = [t for t in grid if not 0 < t <= 1]
    if bad:
        raise UsageError(f"t values must lie in (0, 1]: {bad}")
    spec = load_spec(cfg.spec)
    method = cfg.method if cfg.method != "all" else "formula1"
    profile = ent.mollified_profile(spec, grid, method, cfg.levels, cfg.tol, cfg.enum_order)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "h_ann"])
    for t, h in profile:
        w.writerow([repr(t), _fmt(h)])
    _write(cfg.output, buf.getvalue())
    print(f"profile of {len(profile)} points written to {cfg.output}")
    return EXIT_OK


COMMANDS = {"entropy": cmd_entropy, "verblunsky": cmd_verblunsky,
            "simulate": cmd_simulate, "mollify": cmd_mollify}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage; map to the invalid-input code
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except SingularPrefixError as exc:
        print(f"apent: singular prefix at step {exc.step}", file=sys.stderr)
        return EXIT_DEGENERATE
    except SingularMatrixError as exc:
        print(f"apent: singular input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ApentError, ValueError, OSError, KeyError, TypeError) as exc:
        print(f"apent: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
