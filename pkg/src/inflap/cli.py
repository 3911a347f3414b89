"""``inflap`` command line.

Every subcommand reads optional JSON configuration (``--config``), lets flags
override it, writes CSV/JSON to the output directory and prints a one-line
summary.  Exit status: 0 pass, 1 inconclusive / failed / no certificate,
2 invalid usage or configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import __version__
from .barrier import BarrierError, ShiftRStar, certify_nonexistence
from .criteria import Classification, NonlinearitySpec, classify
from .examples import WitnessError, example1_witness, example2_witness, example3_witness, verify_subsolution
from .expr import ExprError, ScalarFn
from .inequalities import battery_summary, run_battery, write_battery_csv
from .minorant import MinorantError, build_minorant, verification_grid, verify_minorant

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2
OUT_ENV = "INFLAP_OUT"
DEFAULT_OUT = "inflap_out"

log = logging.getLogger("inflap")


class ConfigError(ValueError):
    pass


# name -> (type, default); flag spelling is --name with '_' -> '-'
SPEC_KEYS = {
    "lambda": (float, None),
    "s": (float, 0.0),
    "c0": (float, 1.0),
    "mu_log": (float, 0.0),
    "nu_log": (float, 0.0),
    "sigma": (float, 2.0),
    "theta": (float, 2.0),
    "r_star": (float, 1.0),
}

COMMAND_KEYS = {
    "classify": dict(SPEC_KEYS),
    "certify": dict(
        SPEC_KEYS,
        epsilon=(float, 1000.0),
        R_star=(float, None),
        delta=(float, None),
        w_cap=(float, 1e12),
        r_end=(float, 1e6),
        t_max=(float, 1e36),
        rtol=(float, 1e-11),
        atol=(float, 1e-12),
        bracket_tol=(float, 1e-6),
    ),
    "verify-example": {
        "example": (int, None),
        "lambda": (float, None),
        "s": (float, None),
        "mu": (float, None),
        "nu": (float, None),
        "c0": (float, 1.0),
        "r0": (float, None),
        "r_max": (float, None),
        "grid_points": (int, 10_000),
    },
    "minorant": {"H": (str, None), "mu": (float, math.sqrt(2.0)), "tmax": (float, 1e6), "n": (int, 4000)},
    "lemmas": {"battery": (int, 100), "seed": (int, 0)},
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inflap", description="Radial infinity-Laplacian inequality toolkit.")
    parser.add_argument("--version", action="version", version=f"inflap {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "classify": "classify a nonlinearity against the three parametric families",
        "certify": "build the barrier and bracket its blow-up radius",
        "verify-example": "check a closed-form witness as a radial subsolution",
        "minorant": "build the smooth minorant of H and verify its properties",
        "lemmas": "run the seeded battery of integral inequalities",
    }
    for cmd, keys in COMMAND_KEYS.items():
        sp = sub.add_parser(cmd, help=helps[cmd])
        sp.add_argument("--config", type=Path, help="JSON file with any of the options below")
        sp.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        for name, (typ, default) in keys.items():
            dest = name.replace("-", "_")
            sp.add_argument(_flag(name), dest=dest, type=typ, default=None, help=f"default: {default}")
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults < config file < flags."""
    keys = COMMAND_KEYS[command]
    cfg: dict = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        cfg = dict(cfg.get(command, cfg))
        unknown = set(cfg) - set(keys) - {"out"}
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
    out = {}
    for name, (typ, default) in keys.items():
        flag_val = getattr(args, name.replace("-", "_"))
        if flag_val is not None:
            out[name] = flag_val
        elif name in cfg:
            try:
                out[name] = typ(cfg[name]) if cfg[name] is not None else None
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {name}: {cfg[name]!r}") from exc
        else:
            out[name] = default
    out_dir = args.out or cfg.get("out") or os.environ.get(OUT_ENV) or DEFAULT_OUT
    out["out"] = str(out_dir)
    return out


def _require(cfg: dict, *names: str) -> None:
    missing = [n for n in names if cfg.get(n) is None]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join(_flag(n) for n in missing))


def _spec(cfg: dict) -> NonlinearitySpec:
    _require(cfg, "lambda")
    return NonlinearitySpec(
        lam=cfg["lambda"], s=cfg["s"], c0=cfg["c0"], mu_log=cfg["mu_log"], nu_log=cfg["nu_log"],
        sigma=cfg["sigma"], theta=cfg["theta"], r_star=cfg["r_star"],
    )


def _outdir(cfg: dict) -> Path:
    p = Path(cfg["out"])
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def cmd_classify(cfg: dict) -> int:
    verdict = classify(_spec(cfg))
    print(verdict.summary())
    if verdict.witness is not None and verdict.witness.formula:
        print(f"witness: {verdict.witness.formula}")
    _write_json(_outdir(cfg) / "verdict.json", verdict.to_dict())
    return EXIT_NEGATIVE if verdict.status == Classification.INCONCLUSIVE else EXIT_OK


def cmd_certify(cfg: dict) -> int:
    spec = _spec(cfg)
    out = _outdir(cfg)
    try:
        res = certify_nonexistence(
            spec, cfg["epsilon"], cfg["R_star"], delta=cfg["delta"], w_cap=cfg["w_cap"], r_end=cfg["r_end"],
            t_max=cfg["t_max"], rtol=cfg["rtol"], atol=cfg["atol"], bracket_tol=cfg["bracket_tol"],
        )
    except ShiftRStar as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except BarrierError as exc:
        print(f"error in {exc.stage}: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    res.solution.write_csv(out / "trajectory.csv")
    _write_json(out / "run_config.json", {"certify": cfg})
    print(res.summary)
    if res.certificate is None:
        return EXIT_NEGATIVE
    (out / "certificate.json").write_text(res.certificate.to_json())
    return EXIT_OK


def cmd_verify_example(cfg: dict) -> int:
    _require(cfg, "example")
    ex = cfg["example"]
    try:
        if ex == 1:
            _require(cfg, "lambda", "s")
            w = example1_witness(cfg["lambda"], cfg["s"], cfg["r0"] or 1.0, cfg["c0"])
            r_max = cfg["r_max"] or 1e4 * w.r0
        elif ex == 2:
            _require(cfg, "lambda", "mu")
            w = example2_witness(cfg["lambda"], cfg["mu"], cfg["r0"] or math.e**2, cfg["c0"])
            r_max = cfg["r_max"] or 1e4 * w.r0
        elif ex == 3:
            _require(cfg, "nu", "s")
            w = example3_witness(cfg["nu"], cfg["s"], cfg["r0"] or 1.0, cfg["c0"])
            r_max = cfg["r_max"] or 1e3 * w.r0
        else:
            raise ConfigError("--example must be 1, 2 or 3")
    except WitnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    rep = verify_subsolution(w, r_max, cfg["grid_points"])
    rep.write_csv(_outdir(cfg) / f"example{ex}_check.csv")
    print(f"Example {ex} witness {w.formula} (r0={w.r0:.12g}): {rep.summary()}")
    return EXIT_OK if rep.passed else EXIT_NEGATIVE


def cmd_minorant(cfg: dict) -> int:
    _require(cfg, "H")
    H = ScalarFn.parse(cfg["H"], lo=0.0, positive=True)
    try:
        res = build_minorant(H, cfg["mu"], cfg["tmax"])
    except MinorantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    rep = verify_minorant(res, H, cfg["mu"], n=cfg["n"])
    t = verification_grid(res.t_max, cfg["n"])
    with open(_outdir(cfg) / "minorant.csv", "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["t", "h", "H"])
        for ti, hi, Hi in zip(t, res.h.many(t), H.many(t)):
            out.writerow([f"{ti:.17g}", f"{hi:.17g}", f"{Hi:.17g}"])
    print(rep.summary())
    return EXIT_OK if rep.passed else EXIT_NEGATIVE


def cmd_lemmas(cfg: dict) -> int:
    if cfg["battery"] < 1:
        raise ConfigError("--battery must be positive")
    rows = run_battery(cfg["battery"], cfg["seed"])
    write_battery_csv(rows, _outdir(cfg) / "lemmas.csv")
    summ = battery_summary(rows)
    ok = all(v["within_bounds"] for v in summ.values())
    for lemma, v in summ.items():
        print(f"lemma {lemma}: C in [{v['C_min']:.6g}, {v['C_max']:.6g}] over {v['count']} members, spread {v['spread']:.4g}")
    print(f"{len(rows)} rows; {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NEGATIVE


COMMANDS = {
    "classify": cmd_classify,
    "certify": cmd_certify,
    "verify-example": cmd_verify_example,
    "minorant": cmd_minorant,
    "lemmas": cmd_lemmas,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args.command, args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, ExprError) as exc:
        parser.print_usage(sys.stderr)
        print(f"inflap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # invalid parameter values caught by the library's own checks
        print(f"inflap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
