"""``meanlab`` command-line runner.

Every command is fully determined by its resolved config (file values, then
flags).  Report bodies embed that config and carry no timestamps; run metadata
goes to a ``<out>.meta.json`` sidecar.  Outputs are written atomically.

Exit status: 0 success, 1 precondition / validation / verification failure,
2 internal error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import tempfile
import traceback
from datetime import datetime, timezone
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema

from . import __version__
from .construction import (
    BudgetError, ClaimPreconditionError, ScheduleError, build_block, check_claim1, check_claim2,
    default_base, first_absent_level, proof_level, schedule_from_dict, synthesize_schedule,
    theorem4_point, validate_schedule, DEFAULT_BUDGET, Theorem4Point,
)
from .density import HorizonError, IndexSet, builtin_predicate, density_report, load_index_set
from .diagnostics import (
    IdentitySampler, OccurrenceSampler, PerturbationSampler, RandomTailSampler, SamplerExhausted,
    banach_mean_scan, mean_equi_scan, mean_sens_scan, proximality_scan, _json_default,
)
from .entropy import DEFAULT_THRESHOLD, complexity_curve, entropy_report
from .systems import (
    DescriptorError, ResolutionError, ShiftSystem, generator_from_descriptor, system_from_descriptor,
)
from .words import AlphabetError, to_mlw, to_text

EXPECTED_ERRORS = (ScheduleError, BudgetError, ClaimPreconditionError, SamplerExhausted, ResolutionError,
                   DescriptorError, HorizonError, AlphabetError, FileNotFoundError)


class ConfigError(ValueError):
    """Config does not validate; the message carries the JSON path."""


DEFAULTS: dict[str, dict[str, Any]] = {
    "construct": {"levels": 4, "budget": DEFAULT_BUDGET},
    "validate": {},
    "claims": {"levels": "2..5", "claim": "both", "base_scan": 10 ** 4},
    "diagnose": {"mode": "mean-equi", "epsilon": "1/5", "delta": "1/10", "horizon": 10 ** 4,
                 "resolution": 200, "samples": 50, "seed": 0, "density_threshold": "1/20"},
    "density": {"horizon": 10 ** 6, "window_floor": 19, "ip_order": 0, "ip_bound": 1000},
    "entropy": {"length": 10 ** 4, "n_max": 20, "threshold": DEFAULT_THRESHOLD},
    "report": {},
}


# -- config ---------------------------------------------------------------------

def load_schema() -> dict:
    return json.loads(resources.files("meanlab").joinpath("config.schema.json").read_text())


def validate_config(cfg: dict) -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{e.json_path}: {e.message}")


def resolve_config(command: str, file_cfg: dict, flags: dict) -> dict:
    if file_cfg.get("command") not in (None, command):
        raise ConfigError(f"$.command: config is for {file_cfg['command']!r}, not {command!r}")
    cfg = dict(DEFAULTS[command])
    cfg.update({k: v for k, v in file_cfg.items() if k != "command"})
    cfg.update({k: v for k, v in flags.items() if v is not None})
    cfg["command"] = command
    validate_config(cfg)
    return dict(sorted(cfg.items()))


def rational(v) -> Fraction:
    return Fraction(str(v))


def level_range(v) -> tuple[int, int]:
    text = str(v)
    if ".." in text:
        a, b = text.split("..")
        return int(a), int(b)
    return int(text), int(text)


def load_descriptor(v) -> dict:
    if isinstance(v, dict):
        return v
    p = Path(v)
    if p.suffix == ".json" or p.exists():
        return json.loads(p.read_text())
    return {"kind": v}


# -- output ---------------------------------------------------------------------

def atomic_write(path: str | Path, data: bytes | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_meta(path: str | Path, body: bytes | str, argv: list[str]) -> None:
    raw = body.encode() if isinstance(body, str) else body
    meta = {
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "meanlab_version": __version__,
        "python": platform.python_version(),
        "argv": argv,
        "sha256": hashlib.sha256(raw).hexdigest(),
    }
    atomic_write(f"{path}.meta.json", json.dumps(meta, indent=2) + "\n")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def csv_text(rows: list[dict], columns: list[str], header: Optional[str] = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k)) for k in columns})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return str(v)
    return "" if v is None else v


class Outputs:
    """Collects artifacts; nothing touches disk until the command succeeds."""

    def __init__(self, argv: list[str]):
        self.argv = argv
        self.items: list[tuple[Optional[str], bytes | str, bool]] = []

    def add(self, path: Optional[str], body: bytes | str, meta: bool = True) -> None:
        self.items.append((path, body, meta))

    def flush(self) -> None:
        for path, body, meta in self.items:
            if path is None:
                sys.stdout.write(body if isinstance(body, str) else body.decode("latin-1"))
                continue
            atomic_write(path, body)
            if meta:
                write_meta(path, body, self.argv)


# -- commands -------------------------------------------------------------------

def _schedule_for(cfg: dict):
    if cfg.get("schedule"):
        d = json.loads(Path(cfg["schedule"]).read_text())
        return schedule_from_dict(d.get("schedule", d))   # construct sidecars nest it
    raise ConfigError("$.schedule: a schedule file is required")


def cmd_construct(cfg: dict, out: Outputs) -> int:
    level = level_range(cfg["levels"])[1]
    if level < 1:
        raise ConfigError("$.levels: need at least level 1")
    base = generator_from_descriptor(load_descriptor(cfg["base"])) if cfg.get("base") else default_base()
    decay = rational(cfg["decay"]) if cfg.get("decay") is not None else None
    s = synthesize_schedule(base, max(level - 1, 1), decay=decay, budget=cfg["budget"])
    block = build_block(s, level, cfg["budget"]).word
    path = cfg.get("out")
    body = to_text(block) + "\n" if path and path.endswith(".txt") else to_mlw(block)
    sched = {"config": cfg, "schedule": s.to_dict(), "lengths": s.lengths, "block_level": level,
             "block_length": len(block), "validation": validate_schedule(s).to_dict()}
    if path is None:
        out.add(None, dumps(sched))
        return 0
    out.add(path, body)
    out.add(f"{path}.schedule.json", dumps(sched))
    return 0


def cmd_validate(cfg: dict, out: Outputs) -> int:
    s = _schedule_for(cfg)
    rep = validate_schedule(s)
    out.add(cfg.get("out"), dumps({"config": cfg, "schedule": s.to_dict(), **rep.to_dict()}))
    return 0 if rep.ok else 1


CLAIM_COLUMNS = ["claim", "level_n", "level_m", "i", "j", "lhs", "rhs_num", "rhs_den", "pass"]


def cmd_claims(cfg: dict, out: Outputs) -> int:
    s = _schedule_for(cfg)
    lo, hi = level_range(cfg["levels"])
    if hi > s.levels:
        raise ConfigError(f"$.levels: schedule has only {s.levels} gaps, cannot check level {hi}")
    rows, summary = [], []
    if cfg["claim"] in ("1", "both"):
        for n in range(max(lo, 1), hi + 1):
            for m in range(n, hi + 1):
                r = check_claim1(s, n, m, cfg.get("budget", DEFAULT_BUDGET))
                rows += [{"claim": 1, **row} for row in r.rows]
                summary.append({"claim": 1, "n": n, "m": m, "checked": r.checked, "violations": len(r.violations)})
    if cfg["claim"] in ("2", "both"):
        n = first_absent_level(s, cfg["base_scan"])
        if n is None:
            raise ClaimPreconditionError("no level of the schedule is absent from the base prefix")
        L = s.block_length(min(hi, s.levels + 1))
        r = check_claim2(s, n, theorem4_point(s), L, cfg["base_scan"])
        rows += [{"claim": 2, **row} for row in r.rows]
        summary.append({"claim": 2, "n": n, "prefix_length": L, "checked": r.checked,
                        "violations": len(r.violations)})
    header = f"meanlab claims levels={lo}..{hi} gaps={list(s.gaps)} indexing=1-based-prefix-length"
    out.add(cfg.get("out"), csv_text(rows, CLAIM_COLUMNS, header))
    if cfg.get("out"):
        out.add(f"{cfg['out']}.summary.json", dumps({"config": cfg, "checks": summary}))
    return 0 if all(row["pass"] for row in rows) else 1


def _sampler(cfg: dict, sys_):
    kind = cfg.get("sampler") or ("occurrence" if isinstance(sys_, ShiftSystem) else "perturbation")
    return {
        "occurrence": lambda: OccurrenceSampler(cfg.get("scan_length")),
        "random-tail": lambda: RandomTailSampler(cfg["seed"]),
        "perturbation": lambda: PerturbationSampler(cfg["seed"]),
        "identity": IdentitySampler,
    }[kind]()


def _default_delta_grid(cfg: dict, x, eps: Fraction) -> list[Fraction]:
    if isinstance(x, Theorem4Point):
        n = proof_level(x.schedule, eps)
        if n is not None:
            return [Fraction(1, x.schedule.block_length(n))]
    return [rational(cfg["delta"])]


def cmd_diagnose(cfg: dict, out: Outputs) -> int:
    if "system" not in cfg:
        raise ConfigError("$.system: a system descriptor is required")
    sys_, x = system_from_descriptor(load_descriptor(cfg["system"]))
    N = cfg["horizon"]
    N0 = cfg.get("tail_start") or max(1, N // 10)
    K = cfg["resolution"] if isinstance(sys_, ShiftSystem) else None
    W = cfg.get("window_floor")
    mode = cfg["mode"]
    eps = rational(cfg["epsilon"])
    threads = cfg.get("threads")
    if mode in ("proximal", "banach-proximal"):
        if "other" not in cfg:
            raise ConfigError("$.other: proximality needs a second point")
        _, y = system_from_descriptor(load_descriptor(cfg["other"]))
        grid = [rational(e) for e in cfg.get("epsilon_grid", [cfg["epsilon"]])]
        rep = proximality_scan(sys_, x, y, N, K, grid, W or min(100, N), rational(cfg["density_threshold"]), mode)
    else:
        sampler = _sampler(cfg, sys_)
        if mode.endswith("equi"):
            grid = [rational(d) for d in cfg["delta_grid"]] if "delta_grid" in cfg else _default_delta_grid(cfg, x, eps)
            if mode == "mean-equi":
                rep = mean_equi_scan(sys_, x, eps, grid, N, N0, K, sampler, cfg["samples"], W, threads)
            else:
                rep = banach_mean_scan(sys_, x, "equi", eps, grid, N, W or max(1, N // 10), K, sampler,
                                       cfg["samples"], N0, threads)
        else:
            grid = [rational(e) for e in cfg.get("epsilon_grid", [cfg["epsilon"]])]
            delta = rational(cfg["delta"])
            if mode == "mean-sens":
                rep = mean_sens_scan(sys_, x, delta, grid, N, N0, K, sampler, cfg["samples"], W, threads)
            else:
                rep = banach_mean_scan(sys_, x, "sens", delta, grid, N, W or max(1, N // 10), K, sampler,
                                       cfg["samples"], N0, threads)
    out.add(cfg.get("out"), rep.to_json(cfg))
    if cfg.get("csv"):
        header = f"meanlab diagnose mode={mode} horizon={N} tail_start={N0} resolution={K} window_floor={W}"
        out.add(cfg["csv"], f"# {header}\n" + rep.to_csv())
    return 0


def cmd_density(cfg: dict, out: Outputs) -> int:
    N = cfg["horizon"]
    if cfg.get("set_file"):
        F = load_index_set(cfg["set_file"], N)
    elif cfg.get("predicate"):
        F = IndexSet.from_predicate(builtin_predicate(cfg["predicate"]), N, cfg["predicate"])
    else:
        raise ConfigError("$: one of predicate or set_file is required")
    rep = density_report(F, N, cfg["window_floor"])
    if cfg["ip_order"]:
        from .density import ip_witness
        rep["ip_witness"] = ip_witness(F, cfg["ip_order"], cfg["ip_bound"])
    out.add(cfg.get("out"), dumps({"config": cfg, **rep}))
    return 0


def cmd_entropy(cfg: dict, out: Outputs) -> int:
    if "system" not in cfg:
        raise ConfigError("$.system: a system descriptor is required")
    g = generator_from_descriptor(load_descriptor(cfg["system"]))
    curve = complexity_curve(g, cfg["length"], cfg["n_max"], cfg.get("threads"))
    header = f"meanlab entropy prefix_length={cfg['length']} n_max={cfg['n_max']}"
    out.add(cfg.get("out"), f"# {header}\n" + curve.to_csv())
    if cfg.get("csv") is None and cfg.get("out"):
        out.add(f"{cfg['out']}.summary.json", dumps({"config": cfg, **entropy_report(curve, cfg["threshold"])}))
    return 0


def cmd_report(cfg: dict, out: Outputs) -> int:
    if not cfg.get("inputs"):
        raise ConfigError("$.inputs: at least one report is required")
    rows = []
    for p in cfg["inputs"]:
        d = json.loads(Path(p).read_text())
        c = d.get("config", {})
        status = d.get("verdict", d.get("ok", ""))
        if isinstance(status, bool):
            status = "pass" if status else "fail"
        if "checks" in d and isinstance(d["checks"], list) and d["checks"] and "violations" in d["checks"][0]:
            status = "pass" if all(ch["violations"] == 0 for ch in d["checks"]) else "fail"
        params = {k: c[k] for k in ("horizon", "tail_start", "resolution", "window_floor", "epsilon") if k in c}
        rows.append({"file": Path(p).name, "command": c.get("command", "?"), "mode": d.get("mode", ""),
                     "status": status, "parameters": params})
    lines = ["| file | command | mode | status | parameters |", "|---|---|---|---|---|"]
    for r in rows:
        ps = ", ".join(f"{k}={v}" for k, v in r["parameters"].items())
        lines.append(f"| {r['file']} | {r['command']} | {r['mode']} | {r['status']} | {ps} |")
    path = cfg.get("out")
    if path and path.endswith(".json"):
        out.add(path, dumps({"config": cfg, "reports": rows}))
    else:
        out.add(path, "\n".join(lines) + "\n")
    return 0


COMMANDS = {
    "construct": cmd_construct, "validate": cmd_validate, "claims": cmd_claims, "diagnose": cmd_diagnose,
    "density": cmd_density, "entropy": cmd_entropy, "report": cmd_report,
}


# -- argument parsing -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meanlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"meanlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file (flags override it)")
        sp.add_argument("--out", help="output path (stdout if omitted)")
        sp.add_argument("--threads", type=int, help="worker cap (default: $MEANLAB_THREADS or 1)")
        return sp

    sp = common(sub.add_parser("construct", help="build an A_n block of the Theorem-4 construction"))
    sp.add_argument("--levels", help="block level n (writes A_n)")
    sp.add_argument("--base", help="base descriptor name or JSON file (default: shifted Thue-Morse)")
    sp.add_argument("--decay", help="optional decay bound for the ratio schedule, e.g. 1/200")
    sp.add_argument("--budget", type=int, help="maximum materialized length")

    sp = common(sub.add_parser("validate", help="check the schedule constraints exactly"))
    sp.add_argument("--schedule", help="schedule JSON (e.g. a construct sidecar)")

    sp = common(sub.add_parser("claims", help="exhaustive Claim 1 / Claim 2 verification"))
    sp.add_argument("--schedule")
    sp.add_argument("--levels", help="level range a..b")
    sp.add_argument("--claim", choices=["1", "2", "both"])
    sp.add_argument("--base-scan", type=int, help="base prefix scanned for the first absent level")

    sp = common(sub.add_parser("diagnose", help="mean / Banach-mean / proximality scans"))
    sp.add_argument("--mode", choices=["mean-equi", "mean-sens", "banach-mean-equi", "banach-mean-sens",
                                       "proximal", "banach-proximal"])
    sp.add_argument("--system", help="system descriptor JSON file or builtin kind")
    sp.add_argument("--other", help="second point for proximality modes")
    sp.add_argument("--epsilon")
    sp.add_argument("--delta")
    sp.add_argument("--delta-grid", type=lambda s: s.split(","), help="comma-separated rationals")
    sp.add_argument("--epsilon-grid", type=lambda s: s.split(","), help="comma-separated rationals")
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--tail-start", type=int)
    sp.add_argument("--window-floor", type=int)
    sp.add_argument("--resolution", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--sampler", choices=["occurrence", "random-tail", "perturbation", "identity"])
    sp.add_argument("--scan-length", type=int)
    sp.add_argument("--density-threshold")
    sp.add_argument("--csv", help="also write the flat per-pair CSV table here")

    sp = common(sub.add_parser("density", help="density statistics of an index set"))
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--predicate", help="builtin predicate: even, odd, multiples:K, bursts, squares, ...")
    g.add_argument("--set-file", help="sorted integers, one per line")
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--window-floor", type=int)
    sp.add_argument("--ip-order", type=int)
    sp.add_argument("--ip-bound", type=int)

    sp = common(sub.add_parser("entropy", help="block complexity and entropy estimate"))
    sp.add_argument("--system")
    sp.add_argument("--length", type=int, help="prefix length L")
    sp.add_argument("--n-max", type=int)
    sp.add_argument("--threshold", type=float)

    sp = common(sub.add_parser("report", help="tabulate verdicts from JSON reports"))
    sp.add_argument("--inputs", nargs="+")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_cfg = json.loads(Path(args.config).read_text()) if args.config else {}
        if not isinstance(file_cfg, dict):
            raise ConfigError("$: config must be a JSON object")
        validate_config(file_cfg)
        cfg = resolve_config(args.command, file_cfg, flags)
        out = Outputs(argv)
        status = COMMANDS[args.command](cfg, out)
        out.flush()
        return status
    except (ConfigError, json.JSONDecodeError) as e:
        print(f"meanlab: config error: {e}", file=sys.stderr)
        return 1
    except EXPECTED_ERRORS as e:
        print(f"meanlab: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except Exception:   # noqa: BLE001 - anything else is a bug
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
