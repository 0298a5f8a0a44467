"""``ionqec`` command line: verify, simulate, optimize, sweep.

Settings resolve as flag > ``--config`` file > built-in default.  The config
file holds ``key = value`` lines (an optional ``[run]`` header is allowed);
keys are the long flag names with dashes or underscores.

Exit status: 0 success, 1 failed verification or infeasible request,
2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, lifetime, protocol, verification
from .noise import DEFAULT_Z_MODE, Z_MODES, NoiseParams, logical_x_failure, logical_z_failure_tele
from .statevector import MAX_QUBITS, Partition, StateError


class UsageError(Exception):
    pass


# name -> (type, default); None means "no default, optional"
SHARED = {
    "eta": (float, 1e4),
    "epsilon": (float, 0.01),
    "seed": (int, 0),
    "trials": (int, 10000),
    "engine": (str, "pauli_frame"),
    "out": (str, None),
    "format": (str, "csv"),
}

COMMANDS = {
    "verify": {"max_qubits": (int, 8)},
    "simulate": {
        "mode": (str, "standard"),
        "n": (int, 130),
        "n_two": (int, 26),
        "k_tele": (float, 1.9),
        "d_tele": (float, 0.0),
        "t_start": (float, 0.0),
        "t_stop": (float, 3.0),
        "t_num": (int, 31),
        "time": (float, None),
        "records": (bool, False),
    },
    "optimize": {
        "n_two": (int, 26),
        "k_lab": (float, 3.0),
        "d_tele": (float, 0.0),
        "k_tele": (float, None),
        "z_mode": (str, DEFAULT_Z_MODE),
    },
    "sweep": {
        "var": (str, "eta"),
        "start": (float, None),
        "stop": (float, None),
        "num": (int, None),
        "step": (int, 1),
        "n_two": (int, 26),
        "z_mode": (str, DEFAULT_Z_MODE),
    },
}

CHOICES = {
    "engine": ("pauli_frame", "statevector"),
    "format": ("csv", "json"),
    "mode": ("standard", "doubled"),
    "var": ("n", "eta", "n_two", "K"),
    "z_mode": Z_MODES,
}

SWEEP_DEFAULTS = {
    "n": (3, 300, None),
    "eta": (1e2, 1e6, 17),
    "n_two": (5, 60, None),
    "K": (0.5, 5.0, 46),
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ionqec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ionqec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, opts in COMMANDS.items():
        p = sub.add_parser(cmd)
        p.add_argument("--config", default=None, help="key = value settings file")
        for name, (typ, _) in {**SHARED, **opts}.items():
            if typ is bool:
                p.add_argument(_flag(name), dest=name, action="store_true", default=argparse.SUPPRESS)
            else:
                p.add_argument(_flag(name), dest=name, type=typ, choices=CHOICES.get(name),
                               default=argparse.SUPPRESS)
    return parser


def _read_config(path: str) -> dict[str, str]:
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"cannot parse config file {path}: {exc}") from None
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            out[key.replace("-", "_")] = value
    return out


def _convert(name: str, typ, raw: str):
    if typ is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    try:
        value = typ(raw)
    except ValueError:
        raise UsageError(f"bad value for {name}: {raw!r}") from None
    if name in CHOICES and value not in CHOICES[name]:
        raise UsageError(f"{name} must be one of {CHOICES[name]}, got {value!r}")
    return value


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags, config file and defaults into one plain dict."""
    table = {**SHARED, **COMMANDS[args.command]}
    given = vars(args)
    from_file = _read_config(args.config) if args.config else {}
    unknown = set(from_file) - set(table)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = {}
    for name, (typ, default) in table.items():
        if name in given:
            cfg[name] = given[name]
        elif name in from_file:
            cfg[name] = _convert(name, typ, from_file[name])
        else:
            cfg[name] = default
    return cfg


# -- output -------------------------------------------------------------------

def _header(command: str, cfg: dict) -> dict:
    return {"tool": "ionqec", "version": __version__, "command": command,
            "config": {k: v for k, v in sorted(cfg.items())}, "seed": int(cfg["seed"])}


def _cell(v):
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def render(command: str, cfg: dict, columns: list[str], rows: list[list]) -> str:
    header = _header(command, cfg)
    if cfg["format"] == "json":
        clean = [[_json_value(v) for v in row] for row in rows]
        return json.dumps({"header": header, "columns": columns, "rows": clean}, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# ionqec {__version__}\n")
    buf.write(f"# command: {command}\n")
    buf.write(f"# seed: {header['seed']}\n")
    buf.write(f"# config: {json.dumps(header['config'], sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def emit(text: str, cfg: dict) -> None:
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------------

def cmd_verify(cfg: dict) -> int:
    try:
        results = verification.run_all(cfg["max_qubits"], cfg["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = [[r.name, r.max_deviation, r.tolerance, r.passed] for r in results]
    emit(render("verify", cfg, ["check", "max_deviation", "tolerance", "passed"], rows), cfg)
    failed = [r.name for r in results if not r.passed]
    for name in failed:
        print(f"FAILED: {name}", file=sys.stderr)
    return 1 if failed else 0


def _times(cfg: dict) -> np.ndarray:
    if cfg["time"] is not None:
        return np.array([cfg["time"]])
    if cfg["t_num"] < 1 or cfg["t_stop"] < cfg["t_start"]:
        raise UsageError("empty time range")
    return np.linspace(cfg["t_start"], cfg["t_stop"], cfg["t_num"])


def _partition(cfg: dict) -> Partition:
    if cfg["mode"] == "standard":
        if cfg["n"] < 1:
            raise UsageError("--n must be >= 1")
        return Partition(range(1, cfg["n"] + 1), (), 0)
    m = cfg["n_two"]
    if m < 1:
        raise UsageError("--n-two must be >= 1")
    return Partition(range(1, m + 1), range(m + 1, 2 * m + 1), 0)


def _point_seed(seed: int, j: int) -> int:
    return int(np.random.SeedSequence([seed, j]).generate_state(1, np.uint64)[0] >> np.uint64(1))


def cmd_simulate(cfg: dict) -> int:
    if cfg["trials"] < 1:
        raise UsageError("--trials must be >= 1")
    times = _times(cfg)
    part = _partition(cfg)
    try:
        noise = NoiseParams(eta=cfg["eta"], epsilon=cfg["epsilon"], d_tele=cfg["d_tele"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    k = cfg["k_tele"] if cfg["mode"] == "doubled" else None
    configs = []
    for j, t in enumerate(times):
        try:
            configs.append(protocol.ProtocolConfig(
                cfg["mode"], part, float(t), k, cfg["engine"], noise, cfg["trials"], _point_seed(cfg["seed"], j)))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if cfg["engine"] == "statevector" and part.num_qubits > MAX_QUBITS:
        raise UsageError(f"{part.num_qubits} qubits exceed the state-vector cap; use --engine pauli_frame")

    if cfg["records"]:
        lines = [json.dumps({"header": _header("simulate", cfg)}, sort_keys=True)]
        for c in configs:
            for i, r in enumerate(protocol.run_trials(c)):
                lines.append(json.dumps({"trial": i, "time": c.total_time, **r.to_dict()}, sort_keys=True))
        emit("\n".join(lines) + "\n", cfg)
        return 0

    rows = []
    for c in configs:
        try:
            result = protocol.run_batch(c) if c.engine == "pauli_frame" else protocol.run_trials(c)
        except StateError as exc:
            raise UsageError(str(exc)) from None
        fid, ci, shares = protocol.estimate_fidelity(result)
        if isinstance(result, protocol.BatchResult):
            counts = result.channel_counts()
        else:
            counts = {ch: sum(r.failure_channel == ch for r in result) for ch in ("X", "Z")}
        n = c.trials
        rows.append([c.total_time, fid, ci, shares.get("X", 0.0), shares.get("Z", 0.0),
                     1 - counts["X"] / n, 1 - counts["Z"] / n])
    cols = ["time", "fidelity", "ci95", "x_share", "z_share", "fidelity_x", "fidelity_z"]
    emit(render("simulate", cfg, cols, rows), cfg)
    return 0


def cmd_optimize(cfg: dict) -> int:
    if cfg["eta"] <= 1:
        raise UsageError("--eta must exceed 1")
    try:
        report = lifetime.lifetime_report(cfg["eta"], cfg["epsilon"], cfg["n_two"], cfg["k_lab"],
                                          cfg["d_tele"], cfg["k_tele"], cfg["z_mode"])
    except ValueError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    rows = []
    for key, value in report.to_dict().items():
        if key == "fit_coeffs":
            rows += [[f"fit_{name}", v] for name, v in zip("abc", value)]
        else:
            rows.append([key, value])
    emit(render("optimize", cfg, ["quantity", "value"], rows), cfg)
    return 0


def _sweep_points(cfg: dict) -> np.ndarray:
    var = cfg["var"]
    start, stop, num = SWEEP_DEFAULTS[var]
    start = cfg["start"] if cfg["start"] is not None else start
    stop = cfg["stop"] if cfg["stop"] is not None else stop
    num = cfg["num"] if cfg["num"] is not None else num
    if var in ("n", "n_two"):
        if cfg["step"] < 1:
            raise UsageError("--step must be >= 1")
        pts = np.arange(int(start), int(stop) + 1, cfg["step"])
        pts = pts[pts >= 1]
    else:
        if num is None or num < 1 or stop < start or start <= 0:
            raise UsageError("empty sweep range")
        pts = np.logspace(np.log10(start), np.log10(stop), num) if var == "eta" else np.linspace(start, stop, num)
    if pts.size == 0:
        raise UsageError("empty sweep range")
    return pts


def cmd_sweep(cfg: dict) -> int:
    pts = _sweep_points(cfg)
    eta, eps, mode = cfg["eta"], cfg["epsilon"], cfg["z_mode"]
    var = cfg["var"]
    if var == "n":
        cols = ["n", "tau_x", "tau_z", "storage_time"]
        rows = [[int(n), 2 * eta * eps / n, lifetime.tau_z(int(n), eps, mode),
                 lifetime.storage_time(int(n), eta, eps, mode)] for n in pts]
    elif var == "eta":
        n_opt = [lifetime.optimal_code_size(e, eps, mode) for e in pts]
        try:
            a, b, c = lifetime.fit_power_law_data(pts, [n for n, _ in n_opt])
        except ValueError:
            a, b, c = lifetime.fit_power_law(epsilon=eps, mode=mode)
        cols = ["eta", "n_opt", "tau1", "fit_value"]
        rows = [[e, n, t, a * e**b + c] for e, (n, t) in zip(pts, n_opt)]
    elif var == "n_two":
        kmin, kmax = lifetime.frequency_curves([int(n) for n in pts], eta, eps, mode)
        cols = ["n_two", "k_min", "k_max", "tau2"]
        rows = [[int(n), lo, hi, lifetime.tau2(int(n), eta, eps)] for n, lo, hi in zip(pts, kmin, kmax)]
    else:
        m = cfg["n_two"]
        n_opt, t1 = lifetime.optimal_code_size(eta, eps, mode)
        t2 = lifetime.tau2(m, eta, eps)
        params = NoiseParams(eta=eta, epsilon=eps)
        cols = ["K", "p_z_tele_tau1", "p_x_tau1_nopt", "p_z_tele_tau2", "p_x_tau2"]
        rows = [[k, float(logical_z_failure_tele(t1, k, m, mode)), float(logical_x_failure(t1, n_opt, params)),
                 float(logical_z_failure_tele(t2, k, m, mode)), float(logical_x_failure(t2, m, params))]
                for k in pts]
    emit(render("sweep", cfg, cols, rows), cfg)
    return 0


HANDLERS = {"verify": cmd_verify, "simulate": cmd_simulate, "optimize": cmd_optimize, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        cfg["config"] = args.config
        return HANDLERS[args.command](cfg)
    except (UsageError, FileNotFoundError) as exc:
        print(f"ionqec {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
