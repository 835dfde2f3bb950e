"""Command-line entry point: ``rwave <command> [flags]``.

Configuration is a plain ``key = value`` file; flags override file values.
Every command writes a ``record.json`` run record next to its artifacts.
Exit status is 0 on success, 1 when a check fails and 2 for usage,
configuration or precondition errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core_grid import (
    Field,
    StatePair,
    get_threads,
    make_grid,
    no_wrap_horizon,
    set_threads,
    support_radius,
    write_field,
)

# -- configuration -----------------------------------------------------------------


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending field path."""


def _grid(text: str):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 3:
        raise ValueError("expected d,n,P")
    d, n, P = (int(p) for p in parts)
    return (d, n, P)


def _grid_str(v) -> str:
    return ",".join(str(int(x)) for x in v)


def _opt_float(text):
    if text is None or str(text).strip().lower() in ("", "auto", "none"):
        return None
    return float(text)


def _opt_float_str(v) -> str:
    return "auto" if v is None else repr(float(v))


def _opt_int(text):
    if text is None or str(text).strip().lower() in ("", "auto", "none"):
        return None
    return int(text)


def _opt_int_str(v) -> str:
    return "auto" if v is None else str(int(v))


def _bool(text) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


def _threshold(text) -> int:
    v = int(text)
    if v not in (1, 4):
        raise ValueError("must be 1 or 4")
    return v


def _choice(*options):
    def parse(text):
        t = str(text).strip()
        if t not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return t

    return parse


def _functionals(text):
    from .deviation_lab import FUNCTIONALS

    names = tuple(s.strip() for s in str(text).split(",") if s.strip())
    for n in names:
        if n not in FUNCTIONALS:
            raise ValueError(f"unknown functional {n!r}")
    if not names:
        raise ValueError("empty functional list")
    return names


# key: (parser, serializer, default, description)
SCHEMA = {
    "grid": (_grid, _grid_str, (4, 16, 2), "dimension, points per axis, refinement P"),
    "seed": (int, str, 0, "unsigned 64-bit seed"),
    "threads": (_opt_int, _opt_int_str, None, "FFT/sample worker count (default from RWAVE_THREADS)"),
    "dt": (_opt_float, _opt_float_str, None, "time step (auto: 0.5 dx)"),
    "T": (_opt_float, _opt_float_str, None, "final time (auto: no-wrap horizon)"),
    "samples": (int, str, 100, "Monte Carlo sample count"),
    "threshold": (_threshold, str, 1, "dyadic high-pass threshold, 1 or 4"),
    "profile": (_choice("gaussian", "shell", "zero"), str, "gaussian", "initial data profile"),
    "width": (float, repr, 0.6, "profile width"),
    "amplitude": (float, repr, 1.0, "profile amplitude"),
    "forcing": (_choice("none", "randomized"), str, "randomized", "forcing of the solve command"),
    "forcing_scale": (float, repr, 1.0, "factor applied to the forcing"),
    "eps": (float, repr, 0.5, "target L3L6 norm per partition interval"),
    "functional": (_functionals, lambda v: ",".join(v), ("l3l6_free",), "montecarlo functionals"),
    "snap_every": (int, str, 4, "steps between stored snapshots"),
    "dealias": (_bool, lambda v: "true" if v else "false", True, "2/3-rule truncation"),
}


def default_config() -> dict:
    return {k: v[2] for k, v in SCHEMA.items()}


def parse_config(text: str, base: dict | None = None, source: str = "config") -> dict:
    """Parse ``key = value`` lines (``#`` comments) on top of ``base``."""
    cfg = dict(default_config() if base is None else base)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key] = coerce(key, value, f"{source}.{key}")
    validate(cfg)
    return cfg


def coerce(key: str, value, path: str):
    if key not in SCHEMA:
        raise ConfigError(f"{path}: unknown key (known: {', '.join(sorted(SCHEMA))})")
    try:
        return SCHEMA[key][0](value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc} (got {value!r}; {SCHEMA[key][3]})") from None


def validate(cfg: dict) -> None:
    d, n, P = cfg["grid"]
    if d < 1 or n < 4 or n % 2 or P < 1:
        raise ConfigError(f"config.grid: need d >= 1, even n >= 4 and P >= 1, got {d},{n},{P}")
    if not 0 <= cfg["seed"] < 2 ** 64:
        raise ConfigError("config.seed: must be an unsigned 64-bit integer")
    if cfg["threads"] is not None and cfg["threads"] < 1:
        raise ConfigError("config.threads: must be >= 1")
    for key in ("dt", "T"):
        if cfg[key] is not None and not cfg[key] > 0:
            raise ConfigError(f"config.{key}: must be positive")
    if cfg["samples"] < 1:
        raise ConfigError("config.samples: must be >= 1")
    if cfg["snap_every"] < 1:
        raise ConfigError("config.snap_every: must be >= 1")
    if not cfg["eps"] > 0:
        raise ConfigError("config.eps: must be positive")
    if not cfg["width"] > 0:
        raise ConfigError("config.width: must be positive")


def serialize_config(cfg: dict) -> str:
    lines = []
    for key in sorted(cfg):
        v = cfg[key]
        lines.append(f"{key} = {'auto' if v is None else SCHEMA[key][1](v)}")
    return "\n".join(lines) + "\n"


def config_digest(cfg: dict) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()


# -- run records ----------------------------------------------------------------------


@dataclass
class RunRecord:
    command: str
    config_digest: str
    seed: int
    grid: list
    thread_count: int
    version: str = __version__
    wall_time: float = 0.0
    config: str = ""
    reports: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_jsonable)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _header(rec: RunRecord) -> dict:
    return {"command": rec.command, "config_digest": rec.config_digest, "seed": rec.seed,
            "grid": rec.grid, "version": rec.version}


# -- commands ---------------------------------------------------------------------------


def _grid_of(cfg):
    return make_grid(*cfg["grid"])


def _profile(cfg, g):
    from .data import profile

    return profile(cfg["profile"], g, width=cfg["width"], amplitude=cfg["amplitude"])


def _horizon_T(cfg, g, *fields):
    radius = max([support_radius(f.physical().values, g) for f in fields] + [0.0])
    horizon = no_wrap_horizon(g, radius)
    T = cfg["T"] if cfg["T"] is not None else horizon
    if T > horizon + 1e-12:
        raise ValueError(f"T={T:g} exceeds the no-wrap horizon {horizon:g} (data radius {radius:g})")
    return T, radius


def cmd_randomize(cfg, out: Path, rec: RunRecord) -> int:
    from .multipliers import LatticeBox
    from .randomizer import randomize, sample_coeffs

    g = _grid_of(cfg)
    f = _profile(cfg, g)
    c = sample_coeffs(cfg["seed"], LatticeBox.for_grid(g))
    fw = randomize(f, c)
    write_field(out / "f_omega.rwf", fw)
    write_field(out / "f.rwf", f)
    (out / "coeffs.json").write_text(c.to_json())
    rec.artifacts += ["f_omega.rwf", "f.rwf", "coeffs.json"]
    rec.reports["randomize"] = {"l2_f": float(np.sqrt(np.sum(f.values.real ** 2) * g.cell_volume)),
                                "l2_f_omega": float(np.sqrt(np.sum(fw.values.real ** 2) * g.cell_volume))}
    return 0


def cmd_free_evolve(cfg, out: Path, rec: RunRecord) -> int:
    from .propagator import free_evolve, linear_energy

    g = _grid_of(cfg)
    f = _profile(cfg, g)
    T, _ = _horizon_T(cfg, g, f)
    u = StatePair(f, Field.zeros(g), 0.0)
    dt = cfg["dt"] or 0.5 * g.dx
    n = max(1, math.ceil(T / dt - 1e-9))
    snaps = out / "snapshots"
    snaps.mkdir(exist_ok=True)
    with open(out / "monitors.jsonl", "w") as fh:
        for j in range(n + 1):
            t = T * j / n
            s = free_evolve(u, t)
            fh.write(json.dumps({**_header(rec), "t": t, "energy": linear_energy(s)}) + "\n")
            if j % cfg["snap_every"] == 0 or j == n:
                name = f"snapshots/pos_{j:05d}.rwf"
                write_field(out / name, s.pos)
                rec.artifacts.append(name)
    rec.artifacts.append("monitors.jsonl")
    rec.reports["free_evolve"] = {"T": T, "steps": n}
    return 0


def _forcing(cfg, g, f):
    from .data import randomized_split
    from .nlw_solver import scale_forcing

    if cfg["forcing"] == "none":
        return StatePair(f, Field.zeros(g), 0.0), None
    init, forcing = randomized_split(f, None, cfg["seed"], threshold=cfg["threshold"])
    return init, scale_forcing(forcing, cfg["forcing_scale"])


def cmd_solve(cfg, out: Path, rec: RunRecord) -> int:
    from .nlw_solver import solve

    g = _grid_of(cfg)
    f = _profile(cfg, g)
    T, radius = _horizon_T(cfg, g, f)
    init, forcing = _forcing(cfg, g, f)
    with open(out / "monitors.jsonl", "w") as fh:
        class _Stream:
            def write(self, line):
                rec_line = json.loads(line)
                fh.write(json.dumps({**_header(rec), **rec_line}) + "\n")

        traj = solve(init, forcing, T=T, dt=cfg["dt"], snap_every=cfg["snap_every"],
                     dealias=cfg["dealias"], monitor_morawetz=g.dim == 4, data_radius=radius,
                     stream=_Stream())
    write_field(out / "final_pos.rwf", traj.states[-1].pos)
    write_field(out / "final_vel.rwf", traj.states[-1].vel)
    rec.artifacts += ["monitors.jsonl", "final_pos.rwf", "final_vel.rwf"]
    rep = {"T": T, "dt": traj.dt, "steps": len(traj.monitors) - 1, "blowup": traj.blowup,
           "blowup_reason": traj.blowup_reason, "forcing": traj.forcing_ref}
    if g.dim == 4 and len(traj) > 1:
        from .morawetz import bootstrap_quantities, morawetz_identity_residual

        rep["bootstrap"] = bootstrap_quantities(traj, forcing).to_json()
        res = morawetz_identity_residual(traj, forcing)
        rep["morawetz"] = {"residual": res.total, "relative": res.relative}
    rec.reports["solve"] = rep
    return 0


def cmd_montecarlo(cfg, out: Path, rec: RunRecord) -> int:
    from .deviation_lab import mc_functional, tail_estimate

    g = _grid_of(cfg)
    f = _profile(cfg, g)
    res = mc_functional(f, None, cfg["functional"], cfg["samples"], cfg["seed"], cfg["T"], cfg["dt"],
                        threshold=cfg["threshold"], threads=cfg["threads"])
    manifest = {}
    for name, r in res.items():
        np.savetxt(out / f"{name}_samples.csv", r.samples, header="value", comments="")
        rec.artifacts.append(f"{name}_samples.csv")
        m = r.manifest()
        if r.samples.size >= 1000:
            tc = tail_estimate(r.samples, functional_id=name)
            tc.to_csv(out / f"{name}_tail.csv")
            rec.artifacts.append(f"{name}_tail.csv")
            m["tail"] = tc.to_json()
        manifest[name] = m
    (out / "manifest.json").write_text(json.dumps({**_header(rec), "experiments": manifest}, indent=2))
    rec.artifacts.append("manifest.json")
    rec.reports["montecarlo"] = manifest
    return 0


def cmd_partition(cfg, out: Path, rec: RunRecord) -> int:
    from .scattering import partition_by_forcing, perturbation_gap

    g = _grid_of(cfg)
    f = _profile(cfg, g)
    T, _ = _horizon_T(cfg, g, f)
    if cfg["forcing"] == "none":
        raise ValueError("partition needs forcing = randomized")
    init, forcing = _forcing(cfg, g, f)
    dt = cfg["dt"] or 0.5 * g.dx
    n = max(2, math.ceil(T / dt - 1e-9))
    snaps = [(T * j / n, forcing(T * j / n)) for j in range(n + 1)]
    plan = partition_by_forcing(snaps, cfg["eps"], g)
    gaps = [perturbation_gap(iv, init, forcing, dt=dt, dealias=cfg["dealias"]).to_json()
            for iv in plan.intervals]
    rec.reports["partition"] = {"plan": plan.to_json(), "gaps": gaps}
    (out / "partition.json").write_text(json.dumps({**_header(rec), **rec.reports["partition"]}, indent=2))
    rec.artifacts.append("partition.json")
    return 0


def cmd_verify(cfg, out: Path, rec: RunRecord) -> int:
    from .checks import run_checks

    results = run_checks(cfg)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    rec.reports["verify"] = [asdict(r) for r in results]
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "randomize": cmd_randomize,
    "free-evolve": cmd_free_evolve,
    "solve": cmd_solve,
    "montecarlo": cmd_montecarlo,
    "verify": cmd_verify,
    "partition": cmd_partition,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rwave", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rwave {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="key = value configuration file")
        s.add_argument("--seed", help="unsigned 64-bit seed")
        s.add_argument("--threads", help="worker count (default: RWAVE_THREADS or 1)")
        s.add_argument("--out", type=Path, default=Path("rwave-out"), help="output directory")
        s.add_argument("--grid", help="d,n,P")
        s.add_argument("--dt")
        s.add_argument("--T")
        s.add_argument("--samples")
        s.add_argument("--threshold", choices=["1", "4"])
    return p


def resolve_config(args) -> dict:
    cfg = default_config()
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"--config: cannot read {args.config}: {exc.strerror}") from None
        cfg = parse_config(text, cfg, source=str(args.config))
    for key in ("seed", "threads", "grid", "dt", "T", "samples", "threshold"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = coerce(key, v, f"--{key}")
    if cfg["threads"] is None:
        cfg["threads"] = get_threads()
    validate(cfg)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"rwave: config error: {exc}", file=sys.stderr)
        return 2
    set_threads(cfg["threads"])
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    rec = RunRecord(args.command, config_digest(cfg), cfg["seed"], list(cfg["grid"]), cfg["threads"],
                    config=serialize_config(cfg))
    start = time.perf_counter()
    try:
        status = COMMANDS[args.command](cfg, out, rec)
    except ValueError as exc:
        print(f"rwave {args.command}: {exc}", file=sys.stderr)
        return 2
    rec.wall_time = time.perf_counter() - start
    (out / "record.json").write_text(rec.to_json())
    return status


if __name__ == "__main__":
    sys.exit(main())
