"""Command-line front end: ``stdg {solve,convergence,condition}``.

Runs are described by a JSON config with the sections ``problem``,
``space``, ``mesh``, ``stabilization``, ``output`` and an optional
``quadrature`` entry; see README.md for the grammar.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .analysis import convergence_rates, error_report
from .assembly import SlabAssembler, StabilizationConfig, write_matrix
from .basis import SpaceKind
from .problems import PROBLEMS, make_problem
from .solver import condition_number, solve

__all__ = ["ConfigError", "RunConfig", "parse_config", "canonical", "cmd_solve",
           "cmd_convergence", "cmd_condition", "main"]

CONVERGENCE_HEADER = ["h", "p", "space", "dofs", "dg_error", "dg_rate", "l2T_error",
                      "l2T_rate", "energy_loss", "wall_ms"]
CONDITION_HEADER = ["h", "p", "space", "kappa2"]


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class SpaceSpec:
    kind: str
    mode: str = "nonorthogonal"

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.mode}" if self.kind == SpaceKind.TREFFTZ_EXP.value else self.kind


@dataclass
class MeshSpec:
    """Either a refinement index of the problem's sequence or explicit counts."""

    refinement: int | None = None
    cells: list | None = None
    slabs: int | None = None


@dataclass
class RunConfig:
    problem: str
    problem_params: dict = field(default_factory=dict)
    spaces: list = field(default_factory=list)
    degrees: list = field(default_factory=list)
    meshes: list = field(default_factory=list)
    stabilization: dict = field(default_factory=dict)
    norm_mu: str | float | None = None
    quadrature: int | None = None
    output: dict = field(default_factory=dict)

    def stab(self, theta=1.0) -> StabilizationConfig:
        s = dict(self.stabilization)
        s.setdefault("theta", theta)
        return StabilizationConfig(**s)


_SECTIONS = {"problem", "space", "mesh", "stabilization", "output", "quadrature"}
_STAB_KEYS = {"alpha", "beta", "mu", "theta", "norm_mu"}
_OUTPUT_KEYS = {"energy_csv", "dump_matrices", "wall_time"}


def _expect(cond, where, msg):
    if not cond:
        raise ConfigError(f"{where}: {msg}")


def _rule(value, allowed, where):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        _expect(value >= 0, where, "constants must be >= 0")
        return float(value)
    _expect(value in allowed, where, f"expected one of {sorted(allowed)} or a number, got {value!r}")
    return value


def _line_of(text: str, where: str) -> int | None:
    """Line of the innermost key named in a ``a.b[2].c`` path, if found."""
    keys = [k for k in re.split(r"[.\[\]]", where) if k and not k.isdigit()]
    for key in reversed(keys):
        m = re.search(rf'"{re.escape(key)}"\s*:', text)
        if m:
            return text.count("\n", 0, m.start()) + 1
    return None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Errors name the offending key path and, where it can be located, the line.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return _validate(raw)
    except ConfigError as exc:
        where = str(exc).split(":", 1)[0]
        line = _line_of(text, where)
        if line is None:
            raise
        raise ConfigError(f"line {line}: {exc}") from None


def _validate(raw) -> RunConfig:
    _expect(isinstance(raw, dict), "config", "top level must be an object")
    unknown = set(raw) - _SECTIONS
    _expect(not unknown, "config", f"unknown sections {sorted(unknown)}")

    prob = raw.get("problem")
    if isinstance(prob, str):
        prob = {"name": prob}
    _expect(isinstance(prob, dict) and "name" in prob, "problem", "needs a name")
    _expect(prob["name"] in PROBLEMS, "problem.name",
            f"unknown problem {prob['name']!r}; choose from {sorted(PROBLEMS)}")
    params = prob.get("params", {})
    _expect(isinstance(params, dict), "problem.params", "must be an object")

    space = raw.get("space")
    _expect(isinstance(space, dict), "space", "section is required")
    kinds = space.get("kinds", [space["kind"]] if "kind" in space else None)
    _expect(kinds, "space", "needs 'kind' or 'kinds'")
    spaces = []
    for i, entry in enumerate(kinds):
        if isinstance(entry, str):
            entry = {"kind": entry}
        kind = entry.get("kind")
        _expect(kind in {k.value for k in SpaceKind}, f"space.kinds[{i}]", f"unknown kind {kind!r}")
        mode = entry.get("mode", space.get("mode", "nonorthogonal"))
        _expect(mode in ("orthogonal", "nonorthogonal"), f"space.kinds[{i}].mode",
                f"unknown mode {mode!r}")
        if kind == SpaceKind.TREFFTZ_EXP.value:
            _expect(prob["name"] == "free", f"space.kinds[{i}]",
                    "trefftz_exp needs the free problem (V = 0, d = 1)")
        spaces.append(SpaceSpec(kind, mode))
    degrees = space.get("degrees", [space["degree"]] if "degree" in space else None)
    _expect(isinstance(degrees, list) and degrees, "space", "needs 'degree' or 'degrees'")
    for i, p in enumerate(degrees):
        _expect(isinstance(p, int) and not isinstance(p, bool) and p >= 1,
                f"space.degrees[{i}]", "degrees must be integers >= 1")

    mesh = raw.get("mesh")
    _expect(isinstance(mesh, dict), "mesh", "section is required")
    entries = mesh.get("sweep")
    if entries is None and "refinements" in mesh:
        entries = [{"refinement": i} for i in mesh["refinements"]]
    _expect(isinstance(entries, list) and entries, "mesh.sweep", "needs at least one mesh entry")
    meshes = []
    for i, m in enumerate(entries):
        where = f"mesh.sweep[{i}]"
        _expect(isinstance(m, dict), where, "must be an object")
        if "refinement" in m:
            r = m["refinement"]
            _expect(isinstance(r, int) and r >= 0, where, "refinement must be an integer >= 0")
            meshes.append(MeshSpec(refinement=r))
        else:
            cells, slabs = m.get("cells"), m.get("slabs")
            cells = [cells] if isinstance(cells, int) else cells
            _expect(isinstance(cells, list) and all(isinstance(c, int) and c >= 1 for c in cells),
                    where, "cells must be a positive integer or a list of them")
            _expect(isinstance(slabs, int) and slabs >= 1, where, "slabs must be an integer >= 1")
            meshes.append(MeshSpec(cells=cells, slabs=slabs))

    stab = raw.get("stabilization", {})
    _expect(isinstance(stab, dict), "stabilization", "must be an object")
    unknown = set(stab) - _STAB_KEYS
    _expect(not unknown, "stabilization", f"unknown keys {sorted(unknown)}")
    clean = {}
    if "alpha" in stab:
        clean["alpha"] = _rule(stab["alpha"], {"reciprocal_hFx", "zero"}, "stabilization.alpha")
    if "beta" in stab:
        clean["beta"] = _rule(stab["beta"], {"hFx", "zero"}, "stabilization.beta")
    mu_rules = {"max_h", "squared_min", "squared_max", "zero"}
    if "mu" in stab:
        clean["mu"] = _rule(stab["mu"], mu_rules, "stabilization.mu")
    if "theta" in stab:
        _expect(isinstance(stab["theta"], (int, float)) and stab["theta"] > 0,
                "stabilization.theta", "must be a positive number")
        clean["theta"] = float(stab["theta"])
    norm_mu = None
    if stab.get("norm_mu") is not None:
        norm_mu = _rule(stab["norm_mu"], mu_rules, "stabilization.norm_mu")

    quad = raw.get("quadrature")
    _expect(quad is None or (isinstance(quad, int) and quad >= 1), "quadrature",
            "must be a positive integer or null")
    out = raw.get("output", {})
    _expect(isinstance(out, dict), "output", "must be an object")
    unknown = set(out) - _OUTPUT_KEYS
    _expect(not unknown, "output", f"unknown keys {sorted(unknown)}")
    output = {"energy_csv": out.get("energy_csv"), "dump_matrices": bool(out.get("dump_matrices", False)),
              "wall_time": bool(out.get("wall_time", True))}
    return RunConfig(prob["name"], params, spaces, degrees, meshes, clean, norm_mu, quad, output)


def canonical(cfg: RunConfig) -> str:
    """Canonical JSON text of a parsed config."""
    stab = dict(cfg.stabilization)
    if cfg.norm_mu is not None:
        stab["norm_mu"] = cfg.norm_mu
    meshes = [{k: v for k, v in asdict(m).items() if v is not None} for m in cfg.meshes]
    doc = {
        "problem": {"name": cfg.problem, "params": cfg.problem_params},
        "space": {"kinds": [asdict(s) for s in cfg.spaces], "degrees": list(cfg.degrees)},
        "mesh": {"sweep": meshes},
        "stabilization": stab,
        "quadrature": cfg.quadrature,
        "output": cfg.output,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _build_mesh(problem, spec: MeshSpec):
    if spec.refinement is not None:
        return problem.reference_mesh(spec.refinement)
    cells = spec.cells if len(spec.cells) > 1 else spec.cells[0]
    if problem.dim > 1 and len(spec.cells) == 1:
        cells = spec.cells * problem.dim
    return problem.mesh(cells, spec.slabs)


def _run_one(args):
    """One (space, p, mesh) solve; returns the report and the solution pieces needed."""
    cfg, space, p, mesh_spec, want_series = args
    problem = make_problem(cfg.problem, cfg.problem_params)
    mesh = _build_mesh(problem, mesh_spec)
    t0 = time.perf_counter()
    sol = solve(mesh, problem, space.kind, p, cfg.stab(problem.theta), space.mode, cfg.quadrature)
    wall = (time.perf_counter() - t0) * 1e3
    rep = error_report(sol, problem, wall, cfg.norm_mu)
    if not want_series:
        rep.energy_series = []
    if not cfg.output.get("wall_time", True):
        rep.wall_ms = 0.0
    return rep


def _map(fn, jobs, threads):
    if threads and threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def cmd_convergence(cfg: RunConfig, threads: int = 1) -> str:
    """CSV with one row per (space, p, mesh); rates are blank on the first row of each group."""
    jobs = [(cfg, s, p, m, False) for s in cfg.spaces for p in cfg.degrees for m in cfg.meshes]
    reports = _map(_run_one, jobs, threads)
    rows = []
    k = 0
    for s in cfg.spaces:
        for p in cfg.degrees:
            group = reports[k:k + len(cfg.meshes)]
            k += len(cfg.meshes)
            hs = [r.h for r in group]
            dg_rates = l2_rates = [None] * (len(group) - 1)
            if len(group) > 1 and all(a > b for a, b in zip(hs, hs[1:])):
                dg_rates = convergence_rates(hs, [r.dg_error for r in group])
                l2_rates = convergence_rates(hs, [r.l2_final for r in group])
            for i, r in enumerate(group):
                rows.append([r.h, p, s.label, r.dofs, r.dg_error, dg_rates[i - 1] if i else None,
                             r.l2_final, l2_rates[i - 1] if i else None, r.energy_loss, r.wall_ms])
    return _csv(CONVERGENCE_HEADER, rows)


def cmd_solve(cfg: RunConfig, dump_dir: Path | None = None) -> tuple[str, str | None]:
    """Single run on the first space, degree and mesh.

    Returns the report CSV and, when requested, the energy series CSV.  With
    ``dump_dir`` the first slab matrices are written there.
    """
    space, p, mspec = cfg.spaces[0], cfg.degrees[0], cfg.meshes[0]
    rep = _run_one((cfg, space, p, mspec, True))
    row = [rep.h, p, space.label, rep.dofs, rep.dg_error, None, rep.l2_final, None,
           rep.energy_loss, rep.wall_ms]
    energy = None
    if cfg.output.get("energy_csv"):
        energy = _csv(["t", "energy"], rep.energy_series)
    if dump_dir is not None:
        problem = make_problem(cfg.problem, cfg.problem_params)
        asm = SlabAssembler(_build_mesh(problem, mspec), problem, space.kind, p,
                            cfg.stab(problem.theta), space.mode, cfg.quadrature)
        dump_dir.mkdir(parents=True, exist_ok=True)
        write_matrix(dump_dir / "K1.txt", asm.matrix(0))
        if asm.mesh.num_slabs > 1:
            write_matrix(dump_dir / "R2.txt", asm.coupling(1))
    return _csv(CONVERGENCE_HEADER, [row]), energy


def _condition_one(args):
    cfg, space, p, mspec = args
    problem = make_problem(cfg.problem, cfg.problem_params)
    mesh = _build_mesh(problem, mspec)
    asm = SlabAssembler(mesh, problem, space.kind, p, cfg.stab(problem.theta), space.mode,
                        cfg.quadrature)
    return float(np.max(mesh.h_K)), condition_number(asm.matrix(0))


def cmd_condition(cfg: RunConfig, threads: int = 1) -> str:
    """CSV of the 2-condition number of the first slab matrix."""
    jobs = [(cfg, s, p, m) for s in cfg.spaces for p in cfg.degrees for m in cfg.meshes]
    results = _map(_condition_one, jobs, threads)
    rows = [[h, p, s.label, k] for (cfg_, s, p, m), (h, k) in zip(jobs, results)]
    return _csv(CONDITION_HEADER, rows)


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="stdg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "convergence", "condition"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        sp.add_argument("--out", type=Path, default=None, help="CSV output path (default stdout)")
        sp.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
        sp.add_argument("--dump-matrices", action="store_true",
                        help="write K1/R2 text dumps next to --out (solve only)")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config.read_text())
    except (OSError, ConfigError) as exc:
        parser.exit(2, f"stdg: error: {exc}\n")
    if args.command == "solve":
        dump = None
        if args.dump_matrices or cfg.output.get("dump_matrices"):
            base = args.out.parent if args.out else Path.cwd()
            dump = base / "matrices"
        text, energy = cmd_solve(cfg, dump)
        _write(text, args.out)
        if energy is not None:
            Path(cfg.output["energy_csv"]).write_text(energy)
    elif args.command == "convergence":
        _write(cmd_convergence(cfg, args.threads), args.out)
    else:
        _write(cmd_condition(cfg, args.threads), args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
