"""Command-line front end: ``bubblequad compress`` and ``bubblequad study``.

Output CSVs print every float with 17 significant digits. Column orders:

* ``rule_<deg>.csv``: ``x,y,z,weight``
* ``points.csv``: ``x,y,z,weight,owner`` (owner -1 for volume samples)
* ``study.csv``: ``degree,card,E_qmc_f1,E_bu_f1,E_qmc_f2,E_bu_f2,E_qmc_f3,E_bu_f3``
* ``exactness.csv``: ``degree,trial,a,b,c,d,relative_error,log_average``

Set ``BUBBLEQUAD_THREADS`` to compress several degrees concurrently.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .compress import DEFAULT_EPS, DEFAULT_GROWTH, compress, write_rule_json
from .errors import BubbleParseError, BubbleQuadError, ResidualNotMet
from .geometry import load_bubble
from .quadrature import error_study, exactness_trials, sample

log = logging.getLogger("bubblequad")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RESIDUAL = 2


@dataclass
class RunConfig:
    input: Path
    mode: str = "volume"
    degrees: list[int] = field(default_factory=lambda: [3])
    M0: int = 50_000
    eps: float = DEFAULT_EPS
    m1: int | None = None
    growth: float = DEFAULT_GROWTH
    seed: int = 0
    out: Path = Path("out")
    format: str = "both"
    write_points: bool = False
    reference_M0: int | None = None
    trials: int = 100
    P0: list[float] | None = None

    def validate(self) -> None:
        if self.mode not in ("volume", "surface"):
            raise ValueError(f"--mode: expected 'volume' or 'surface', got {self.mode!r}")
        if not self.degrees or any(d < 0 for d in self.degrees):
            raise ValueError(f"--degree: degrees must be >= 0, got {self.degrees}")
        if not self.eps > 0:
            raise ValueError(f"--eps: must be > 0, got {self.eps}")
        if self.M0 < 1:
            raise ValueError(f"--m0: must be >= 1, got {self.M0}")
        if self.m1 is not None and self.m1 < 1:
            raise ValueError(f"--m1: must be >= 1, got {self.m1}")
        if not self.growth > 1:
            raise ValueError(f"--growth: must be > 1, got {self.growth}")
        if self.format not in ("csv", "json", "both"):
            raise ValueError(f"--format: expected csv, json or both, got {self.format!r}")
        if self.trials < 1:
            raise ValueError(f"--trials: must be >= 1, got {self.trials}")
        if self.reference_M0 is not None and self.reference_M0 <= self.M0:
            raise ValueError("--ref-m0: must exceed --m0")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BUBBLEQUAD_THREADS", "1")))
    except ValueError:
        return 1


def _compress_all(pts, cfg: RunConfig):
    """Compress every requested degree; returns {degree: (rule, report) or exception}."""

    def one(n):
        try:
            return compress(pts, n, eps=cfg.eps, m1=cfg.m1, growth=cfg.growth)
        except ResidualNotMet as exc:
            return exc

    degrees = sorted(set(cfg.degrees))
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(one, degrees))
    return dict(zip(degrees, results))


def _write_failure(out: Path, n: int, exc: ResidualNotMet) -> dict:
    diag = {"degree": n, "error": "ResidualNotMet", "message": str(exc),
            "report": exc.report.to_dict() if exc.report is not None else None}
    (out / f"failure_{n}.json").write_text(json.dumps(diag, indent=2) + "\n")
    return diag


def cmd_compress(cfg: RunConfig) -> int:
    cfg.validate()
    bubble = load_bubble(cfg.input)
    cfg.out.mkdir(parents=True, exist_ok=True)
    pts = sample(bubble, cfg.mode, cfg.M0)
    log.info("%s sample: M0=%d, M=%d, measure=%.6g", cfg.mode, pts.total_generated, len(pts),
             pts.measure_estimate)
    if cfg.write_points:
        pts.write_csv(cfg.out / "points.csv")
        pts.write_header_json(cfg.out / "points.json")

    status = EXIT_OK
    for n, result in _compress_all(pts, cfg).items():
        if isinstance(result, ResidualNotMet):
            print(json.dumps(_write_failure(cfg.out, n, result)), file=sys.stderr)
            status = EXIT_RESIDUAL
            continue
        rule, report = result
        if cfg.format in ("csv", "both"):
            rule.write_csv(cfg.out / f"rule_{n}.csv")
        if cfg.format in ("json", "both"):
            write_rule_json(cfg.out / f"rule_{n}.json", rule, extra={"sample": pts.header()})
        (cfg.out / f"report_{n}.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        log.info("degree %d: %d nodes, residual %.2e, %d iterations", n, len(rule),
                 rule.residual, len(report.iterations))
    return status


def cmd_study(cfg: RunConfig) -> int:
    cfg.validate()
    bubble = load_bubble(cfg.input)
    cfg.out.mkdir(parents=True, exist_ok=True)
    pts = sample(bubble, cfg.mode, cfg.M0)
    results = _compress_all(pts, cfg)
    failed = {n: r for n, r in results.items() if isinstance(r, ResidualNotMet)}
    for n, exc in failed.items():
        print(json.dumps(_write_failure(cfg.out, n, exc)), file=sys.stderr)
    rules = {n: r[0] for n, r in results.items() if n not in failed}
    if not rules:
        return EXIT_RESIDUAL
    degrees = sorted(rules)

    study = error_study(bubble, cfg.mode, degrees, cfg.M0, reference_M0=cfg.reference_M0,
                        P0=cfg.P0, eps=cfg.eps, pts=pts, rules=rules)
    study.write_csv(cfg.out / "study.csv")
    if cfg.format in ("json", "both"):
        study.write_json(cfg.out / "study.json")

    with open(cfg.out / "exactness.csv", "w", newline="\n") as fh:
        fh.write("degree,trial,a,b,c,d,relative_error,log_average\n")
        for n in degrees:
            ex = exactness_trials(rules[n], pts, n, trials=cfg.trials, seed=cfg.seed)
            for k, ((a, b, c, d), e) in enumerate(zip(ex.coefficients, ex.errors)):
                fh.write(f"{n},{k},{a:.17g},{b:.17g},{c:.17g},{d:.17g},{e:.17g},"
                         f"{ex.log_average:.17g}\n")
    return EXIT_RESIDUAL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bubblequad",
        description="Compressed QMC volume/surface quadrature on unions of balls.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", type=Path, help='bubble JSON: {"balls": [{"center": [x,y,z], "radius": r}, ...]}')
    common.add_argument("--mode", choices=("volume", "surface"), default="volume")
    common.add_argument("--degree", type=int, action="append", dest="degrees",
                        help="polynomial degree (repeatable, default 3)")
    common.add_argument("--m0", type=int, default=50_000, dest="M0",
                        help="box Halton points (volume) or points per sphere (surface)")
    common.add_argument("--eps", type=float, default=DEFAULT_EPS)
    common.add_argument("--m1", type=int, default=None, help="first prefix size (default 2N)")
    common.add_argument("--growth", type=float, default=DEFAULT_GROWTH)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=Path("out"))
    common.add_argument("--format", choices=("csv", "json", "both"), default="both")

    p_c = sub.add_parser("compress", parents=[common], help="compute compressed rules")
    p_c.add_argument("--write-points", action="store_true", help="also write points.csv")

    p_s = sub.add_parser("study", parents=[common], help="error and exactness study")
    p_s.add_argument("--ref-m0", type=int, default=None, dest="reference_M0",
                     help="reference QMC size (default 100 * m0)")
    p_s.add_argument("--trials", type=int, default=100)
    p_s.add_argument("--p0", type=float, nargs=3, default=None, dest="P0")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    opts = vars(args)
    command = opts.pop("command")
    opts.pop("verbose")
    if opts["degrees"] is None:
        opts["degrees"] = [3]
    cfg = RunConfig(**opts)
    try:
        return cmd_compress(cfg) if command == "compress" else cmd_study(cfg)
    except BubbleParseError as exc:
        print(f"error: {cfg.input}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BubbleQuadError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
