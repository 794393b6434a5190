"""Command-line interface and delimited-file formats.

Four subcommands: ``nodes`` samples a surface, ``discover`` identifies a
sparse model from sampled data, ``solve`` forward-runs a saved model,
``bench`` replays the documented end-to-end recipes.  Settings come from
an optional flat key=value config file with per-key flag overrides; the
output directory can also be set through the SURFPDE_OUT environment
variable (flag beats environment beats file).

All delimited output carries 17 significant digits so round trips are
lossless, every run drops a metadata file next to its outputs, and the
report paths render matplotlib figures alongside the CSVs.

Exit codes: 0 on success, 1 on usage or input-parsing problems, 2 on
numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
from scipy.spatial import cKDTree

from . import __version__
from .bench import run_recipe
from .discovery import (
    Snapshots,
    SparseModel,
    discover_biharmonic,
    discover_eikonal,
    discover_evolution,
    discover_stationary,
    read_model,
    write_model,
)
from .errors import SurfacePDEError
from .geometry import (
    analytic_normals,
    circle_nodes,
    implicit_surface_nodes,
    read_nodes_csv,
    sphere_nodes,
    torus_surface,
    write_nodes_csv,
)
from .kernels import KernelSpec
from .operators import build_operators
from .plots import plot_cloud, plot_coefficients, plot_error_series
from .recipes import (
    _ex1_circle_callables,
    _torus_sine_callables,
    eikonal_p_values,
)
from .solver import relative_l2, solve_evolution, solve_stationary


def _g(v) -> str:
    return f"{float(v):.17g}"


# --- configuration -------------------------------------------------------------

def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_choice(*options):
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}; got {s!r}")
        return s
    return parse


def _parse_int(minimum):
    def parse(s: str) -> int:
        v = int(s)
        if v < minimum:
            raise ValueError(f"must be >= {minimum}, got {v}")
        return v
    return parse


def _parse_float(minimum=None, strict=False):
    def parse(s: str) -> float:
        v = float(s)
        if not np.isfinite(v):
            raise ValueError(f"must be finite, got {s!r}")
        if minimum is not None and (v <= minimum if strict else v < minimum):
            op = ">" if strict else ">="
            raise ValueError(f"must be {op} {minimum}, got {v}")
        return v
    return parse


def _parse_mu(s: str):
    if s.strip().lower() == "none":
        return None
    return _parse_float(0.0)(s)


def _parse_p_values(s: str) -> list[float]:
    values = [_parse_float(1.0, strict=True)(part) for part in s.split(",")]
    if not values:
        raise ValueError("p_values must name at least one exponent")
    return values


REFERENCES = {
    "ex1-circle": lambda cloud, t: _ex1_circle_callables()[0](
        np.arctan2(cloud.nodes[:, 1], cloud.nodes[:, 0])),
    "ex1-sphere": lambda cloud, t: (lambda x, y, z: 10 * x * y * z + 5 * x * y + z)(
        *cloud.nodes.T),
    "ex2-sphere": lambda cloud, t: np.exp(cloud.nodes.sum(axis=1)) * np.exp(-t),
    "ex2-torus": lambda cloud, t: np.asarray(
        _torus_sine_callables()[0](*cloud.nodes.T), dtype=float) * np.sin(t),
}

_SCHEMA = {
    "surface": _parse_choice("circle", "sphere", "torus"),
    "n": _parse_int(3),
    "seed": _parse_int(0),
    "kind": _parse_choice("stationary", "biharmonic", "evolution", "eikonal"),
    "nodes": str,
    "data": str,
    "model": str,
    "m": _parse_int(1),
    "ell": _parse_int(1),
    "mu": _parse_mu,
    "mu1": _parse_float(0.0),
    "mu2": _parse_float(0.0),
    "sigma2": _parse_float(0.0, strict=True),
    "prune_tol": _parse_float(0.0),
    "method": _parse_choice("lasso", "sqrt_lasso"),
    "normalize": _parse_bool,
    "p_values": _parse_p_values,
    "dt": _parse_float(0.0, strict=True),
    "n_steps": _parse_int(1),
    "reference": _parse_choice(*sorted(REFERENCES)),
    "out": str,
}


def _parse_value(key: str, raw: str):
    try:
        return _SCHEMA[key](raw)
    except ValueError as exc:
        raise ValueError(f"bad value for {key}: {exc}") from None


def load_config(path) -> dict:
    """Read a flat key=value file; unknown keys and bad values are errors."""
    cfg = {}
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            cfg[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return cfg


def gather_config(args, keys) -> dict:
    """Merge the config file with flag overrides (flags win)."""
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    for key in keys:
        raw = getattr(args, key, None)
        if raw is not None:
            cfg[key] = _parse_value(key, raw) if isinstance(raw, str) else raw
    return cfg


def resolve_outdir(args, cfg) -> str:
    out = getattr(args, "out", None) or os.environ.get("SURFPDE_OUT") \
        or cfg.get("out") or "."
    os.makedirs(out, exist_ok=True)
    return out


def require(cfg: dict, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ValueError("missing required setting(s): " + ", ".join(missing))


def write_metadata(outdir, command: str, cfg: dict, outputs: list[str],
                   extra: dict | None = None) -> str:
    payload = {
        "tool": "surfpde",
        "version": __version__,
        "command": command,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "seed": cfg.get("seed"),
        "outputs": sorted(os.path.basename(p) for p in outputs),
    }
    if extra:
        payload.update(extra)
    path = os.path.join(outdir, "run.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# --- delimited field and snapshot files ------------------------------------------

def _split_csv_line(path, lineno: int, line: str, width: int) -> list[str]:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) != width:
        raise ValueError(f"{path}:{lineno}: expected {width} columns, "
                         f"got {len(parts)}")
    return parts


def write_field_csv(path, u: np.ndarray, forcing: np.ndarray | None = None):
    """node_index,u[,f] rows at 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node_index,u,f\n" if forcing is not None else "node_index,u\n")
        for i, ui in enumerate(u):
            row = f"{i},{_g(ui)}"
            if forcing is not None:
                row += f",{_g(forcing[i])}"
            fh.write(row + "\n")
    return path


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read node_index,u[,f]; row indices must cover 0..N-1 exactly once."""
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc.strerror}") from None
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if header not in (["node_index", "u"], ["node_index", "u", "f"]):
        raise ValueError(f"{path}:1: expected header node_index,u[,f], "
                         f"got {lines[0]!r}")
    has_f = len(header) == 3
    rows = {}
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = _split_csv_line(path, lineno, line, len(header))
        try:
            idx = int(parts[0])
            vals = [float(p) for p in parts[1:]]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {line!r}") from None
        if idx in rows:
            raise ValueError(f"{path}:{lineno}: duplicate node_index {idx}")
        rows[idx] = vals
    n = len(rows)
    if n == 0 or sorted(rows) != list(range(n)):
        raise ValueError(f"{path}: node_index must cover 0..N-1 exactly once")
    u = np.array([rows[i][0] for i in range(n)])
    f = np.array([rows[i][1] for i in range(n)]) if has_f else None
    return u, f


def write_snapshots_csv(path, times, values: np.ndarray, forcing: np.ndarray):
    """t,node_index,u,f rows, times outermost."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,node_index,u,f\n")
        for k, t in enumerate(times):
            for i in range(values.shape[1]):
                fh.write(f"{_g(t)},{i},{_g(values[k, i])},{_g(forcing[k, i])}\n")
    return path


def read_snapshots_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read t,node_index,u,f into (times, values, forcing)."""
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc.strerror}") from None
    if not lines or [h.strip() for h in lines[0].split(",")] != \
            ["t", "node_index", "u", "f"]:
        raise ValueError(f"{path}:1: expected header t,node_index,u,f")
    times: list[float] = []
    blocks: list[dict] = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = _split_csv_line(path, lineno, line, 4)
        try:
            t, idx, u, f = float(parts[0]), int(parts[1]), \
                float(parts[2]), float(parts[3])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {line!r}") from None
        if not times or t != times[-1]:
            times.append(t)
            blocks.append({})
        if idx in blocks[-1]:
            raise ValueError(f"{path}:{lineno}: duplicate node_index {idx} "
                             f"at t={t!r}")
        blocks[-1][idx] = (u, f)
    if not blocks:
        raise ValueError(f"{path}: no data rows")
    n = len(blocks[0])
    for k, block in enumerate(blocks):
        if sorted(block) != list(range(n)):
            raise ValueError(f"{path}: snapshot at t={times[k]!r} does not "
                             f"cover node_index 0..{n - 1} exactly once")
    values = np.array([[block[i][0] for i in range(n)] for block in blocks])
    forcing = np.array([[block[i][1] for i in range(n)] for block in blocks])
    return np.array(times), values, forcing


def write_trajectory_csv(path, cloud, times, values: np.ndarray):
    """t,node_index,x,y[,z],u rows for a full evolution run."""
    axes = "x,y" if cloud.dim == 2 else "x,y,z"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"t,node_index,{axes},u\n")
        for k, t in enumerate(times):
            for i, point in enumerate(cloud.nodes):
                coords = ",".join(_g(c) for c in point)
                fh.write(f"{_g(t)},{i},{coords},{_g(values[k, i])}\n")
    return path


def write_rows_csv(path, header: str, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\n")
    return path


# --- equation rendering ----------------------------------------------------------

_SUPER = str.maketrans("0123456789", "⁰¹²³⁴⁵"
                                     "⁶⁷⁸⁹")


def _channel_text(tag: str) -> str:
    if tag == "lap(u)":
        return "Δ_S u"
    if tag == "bih(u)":
        return "Δ_S² u"
    if tag.startswith("grad_"):
        k = int(tag[5:].split("(")[0])
        return f"[∇_S u]_{k + 1}"
    if tag.startswith("gradlap_"):
        k = int(tag[8:].split("(")[0])
        return f"[∇_S Δ_S u]_{k + 1}"
    if tag.startswith("plap_"):
        p = tag[5:].split("(")[0]
        return f"Δ_{p} u"
    return tag


def _label_text(label: str) -> str:
    factors = []
    for factor in label.split("*"):
        base, _, power = factor.partition("^")
        text = _channel_text(base)
        if power:
            text += power.translate(_SUPER)
        factors.append(text)
    return "·".join(factors)


def display_equation(model: SparseModel) -> str:
    """One-line summary: coefficients at 4 decimals, largest first."""
    terms = sorted(model.nonzero_terms(), key=lambda lc: (-abs(lc[1]), lc[0]))
    parts = []
    for label, coeff in terms:
        text = f"{abs(coeff):.4f}" if label == "1" \
            else f"{abs(coeff):.4f}·{_label_text(label)}"
        parts.append(("- " if coeff < 0 else "+ ") + text)
    rhs = " ".join(parts).lstrip("+ ") if parts else "0"
    if rhs.startswith("- "):
        rhs = "-" + rhs[2:]
    if model.kind == "evolution":
        return f"∂u/∂t = {rhs} + f"
    if model.kind == "eikonal":
        eq = f"{rhs} = 1"
        if model.source:
            top = model.source[0]
            sign = "-" if top["coefficient"] < 0 else "+"
            eq += f" {sign} {abs(top['coefficient']):.4f}·gauss@node{top['node']}"
            if len(model.source) > 1:
                eq += f" + ({len(model.source) - 1} weaker bumps)"
        return eq
    return f"{rhs} = f"


# --- subcommands ------------------------------------------------------------------

def _fill_distance_estimate(nodes: np.ndarray) -> float:
    # largest nearest-neighbor gap; a cheap stand-in for the true fill distance
    dist, _ = cKDTree(nodes).query(nodes, k=2)
    return float(dist[:, 1].max())


def cmd_nodes(args) -> int:
    cfg = gather_config(args, ("surface", "n", "seed"))
    require(cfg, "surface", "n")
    cfg.setdefault("seed", 0)
    outdir = resolve_outdir(args, cfg)
    surface, n, seed = cfg["surface"], cfg["n"], cfg["seed"]
    if surface == "circle":
        cloud = circle_nodes(n)
    elif surface == "sphere":
        cloud = sphere_nodes(n)
    else:
        shape = torus_surface()
        cloud = analytic_normals(shape, implicit_surface_nodes(shape, n, seed))
    nodes_path = os.path.join(outdir, "nodes.csv")
    write_nodes_csv(cloud, nodes_path)
    fig_path = plot_cloud(cloud, os.path.join(outdir, "nodes.png"))
    meta = write_metadata(outdir, "nodes", cfg, [nodes_path, fig_path],
                          {"n_nodes": cloud.n_nodes})
    print(f"surface: {surface}")
    print(f"N: {cloud.n_nodes}")
    print(f"fill distance estimate: {_g(_fill_distance_estimate(cloud.nodes))}")
    print(f"seed: {seed}")
    print("wrote: " + " ".join(os.path.basename(p)
                               for p in (nodes_path, fig_path, meta)))
    return 0


def _kernel_for(cloud, cfg) -> KernelSpec:
    m = cfg.get("m", 6 if cloud.dim == 2 else 4)
    return KernelSpec("matern_sobolev", ambient_dim=cloud.dim, smoothness_m=m)


def cmd_discover(args) -> int:
    cfg = gather_config(args, ("kind", "nodes", "data", "m", "ell", "mu",
                               "method", "prune_tol", "normalize", "mu1",
                               "mu2", "sigma2", "p_values"))
    require(cfg, "kind", "nodes", "data")
    outdir = resolve_outdir(args, cfg)
    cloud = read_nodes_csv(cfg["nodes"])
    kernel = _kernel_for(cloud, cfg)
    kind = cfg["kind"]
    knobs = {k: cfg[k] for k in ("ell", "mu", "method", "prune_tol", "normalize")
             if k in cfg}
    if kind in ("stationary", "biharmonic"):
        u, f = read_field_csv(cfg["data"])
        if f is None:
            raise ValueError(f"{cfg['data']}: {kind} discovery needs a forcing "
                             "column f")
        if u.shape[0] != cloud.n_nodes:
            raise ValueError(f"{cfg['data']}: {u.shape[0]} rows, but the node "
                             f"file has {cloud.n_nodes} nodes")
        run = discover_stationary if kind == "stationary" else discover_biharmonic
        model = run(cloud, u, f, kernel, **knobs)
    elif kind == "evolution":
        times, values, forcing = read_snapshots_csv(cfg["data"])
        if values.shape[1] != cloud.n_nodes:
            raise ValueError(f"{cfg['data']}: {values.shape[1]} nodes per "
                             f"snapshot, but the node file has {cloud.n_nodes}")
        model = discover_evolution(Snapshots(cloud, times, values, forcing),
                                   kernel, **knobs)
    else:
        u, _ = read_field_csv(cfg["data"])
        if u.shape[0] != cloud.n_nodes:
            raise ValueError(f"{cfg['data']}: {u.shape[0]} rows, but the node "
                             f"file has {cloud.n_nodes} nodes")
        eik = {k: cfg[k] for k in ("mu1", "mu2", "sigma2") if k in cfg}
        if "normalize" in cfg:
            eik["normalize"] = cfg["normalize"]
        model = discover_eikonal(cloud, u, kernel,
                                 cfg.get("p_values", eikonal_p_values()), **eik)

    model_path = os.path.join(outdir, "model.json")
    write_model(model, model_path)
    active = dict(model.nonzero_terms())
    coeff_rows = [(label, _g(active.get(label, 0.0)), int(label in active))
                  for label in (term.label for term in model.terms)]
    coeff_path = write_rows_csv(os.path.join(outdir, "coefficients.csv"),
                                "label,coefficient,selected", coeff_rows)
    fig_path = plot_coefficients(model, os.path.join(outdir, "coefficients.png"))
    meta = write_metadata(outdir, "discover", cfg,
                          [model_path, coeff_path, fig_path],
                          {"equation": display_equation(model),
                           "runtime": model.diagnostics.get("runtime")})
    print(display_equation(model))
    print("wrote: " + " ".join(os.path.basename(p)
                               for p in (model_path, coeff_path, fig_path, meta)))
    return 0


def cmd_solve(args) -> int:
    cfg = gather_config(args, ("model", "nodes", "data", "dt", "n_steps",
                               "reference"))
    require(cfg, "model", "nodes")
    outdir = resolve_outdir(args, cfg)
    model = read_model(cfg["model"])
    cloud = read_nodes_csv(cfg["nodes"])
    ops = build_operators(cloud, model.kernel)
    reference = REFERENCES[cfg["reference"]] if "reference" in cfg else None
    outputs = []

    if model.kind in ("stationary", "biharmonic"):
        require(cfg, "data")
        _, f = read_field_csv(cfg["data"])
        if f is None:
            raise ValueError(f"{cfg['data']}: forward solve needs a forcing "
                             "column f")
        u = solve_stationary(model, ops, f)
        outputs.append(write_field_csv(os.path.join(outdir, "solution.csv"), u))
        outputs.append(plot_cloud(cloud, os.path.join(outdir, "solution.png"), u))
        if reference is not None:
            exact = reference(cloud, 0.0)
            rel = relative_l2(u, exact)
            outputs.append(write_rows_csv(
                os.path.join(outdir, "errors.csv"), "t,relative_l2",
                [(_g(0.0), _g(rel))]))
            outputs.append(write_rows_csv(
                os.path.join(outdir, "abs_error.csv"), "node_index,abs_error",
                [(i, _g(e)) for i, e in enumerate(np.abs(u - exact))]))
            print(f"relative l2 error: {_g(rel)}")
    elif model.kind == "evolution":
        require(cfg, "data")
        times, values, forcing = read_snapshots_csv(cfg["data"])
        if values.shape[1] != cloud.n_nodes:
            raise ValueError(f"{cfg['data']}: {values.shape[1]} nodes per "
                             f"snapshot, but the node file has {cloud.n_nodes}")
        dt = cfg.get("dt", float(times[1] - times[0]))
        n_steps = cfg.get("n_steps", len(times) - 1)
        if n_steps == len(times) - 1 and np.isclose(dt, times[1] - times[0]):
            f_series = forcing
        elif not forcing.any():
            f_series = None
        else:
            raise ValueError("dt/n_steps overrides only work with zero forcing; "
                             "the data file fixes the forcing series otherwise")
        result = solve_evolution(model, ops, values[0], dt, n_steps,
                                 forcing=f_series)
        outputs.append(write_trajectory_csv(
            os.path.join(outdir, "trajectory.csv"), cloud, result.times,
            result.values))
        outputs.append(plot_cloud(cloud, os.path.join(outdir, "solution.png"),
                                  result.values[-1]))
        if reference is not None:
            rels = [relative_l2(result.values[k], reference(cloud, t))
                    for k, t in enumerate(result.times)]
            outputs.append(write_rows_csv(
                os.path.join(outdir, "errors.csv"), "t,relative_l2",
                [(_g(t), _g(r)) for t, r in zip(result.times, rels)]))
            final_exact = reference(cloud, result.times[-1])
            outputs.append(write_rows_csv(
                os.path.join(outdir, "abs_error.csv"), "node_index,abs_error",
                [(i, _g(e)) for i, e in
                 enumerate(np.abs(result.values[-1] - final_exact))]))
            outputs.append(plot_error_series(
                result.times, rels, os.path.join(outdir, "errors.png")))
            print(f"final relative l2 error: {_g(rels[-1])}")
    else:
        raise ValueError("eikonal models describe a static balance; "
                         "there is nothing to march forward")

    outputs.append(write_metadata(outdir, "solve", cfg, outputs))
    print("wrote: " + " ".join(os.path.basename(p) for p in outputs))
    return 0


def cmd_bench(args) -> int:
    cfg = gather_config(args, ("n",))
    outdir = resolve_outdir(args, cfg)
    overrides = {"n_nodes": cfg["n"]} if "n" in cfg else {}
    try:
        reports = run_recipe(args.recipe, **overrides)
    except TypeError:
        raise ValueError(f"recipe {args.recipe!r} does not take an n override") \
            from None
    outputs = []
    rows = []
    all_passed = True
    for report in reports:
        print(f"== {report.recipe} ({report.runtime:.1f} s) ==")
        for row in report.rows:
            mark = "pass" if row.passed else "FAIL"
            print(f"[{mark}] {row.name}: {row.measured}   target: {row.target}")
            rows.append((report.recipe, row.name, f"\"{row.measured}\"",
                         f"\"{row.target}\"", int(row.passed)))
            all_passed &= row.passed
        for note in report.notes:
            print(f"note: {note}")
        for key, model in report.models.items():
            tag = report.recipe.replace("/", "-")
            outputs.append(plot_coefficients(
                model, os.path.join(outdir, f"{tag}-{key}-coefficients.png")))
    safe = args.recipe.replace("/", "-")
    outputs.append(write_rows_csv(
        os.path.join(outdir, f"bench-{safe}.csv"),
        "recipe,check,measured,target,passed", rows))
    outputs.append(write_metadata(outdir, "bench", dict(cfg, recipe=args.recipe),
                                  outputs, {"passed": all_passed}))
    print("wrote: " + " ".join(os.path.basename(p) for p in outputs))
    return 0 if all_passed else 2


# --- argument parsing ------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this tool reserves 2 for
    numerical failure, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_keys(parser, *keys):
    for key in keys:
        parser.add_argument("--" + key.replace("_", "-"), dest=key,
                            metavar=key.upper())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="surfpde",
                     description="Discover and forward-solve PDEs on closed "
                                 "surfaces from scattered samples.")
    parser.add_argument("--version", action="version",
                        version=f"surfpde {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    for name, func, keys, help_text in (
        ("nodes", cmd_nodes, ("surface", "n", "seed"),
         "sample a closed surface and write the node file"),
        ("discover", cmd_discover,
         ("kind", "nodes", "data", "m", "ell", "mu", "method", "prune_tol",
          "normalize", "mu1", "mu2", "sigma2", "p_values"),
         "identify a sparse surface PDE from sampled data"),
        ("solve", cmd_solve, ("model", "nodes", "data", "dt", "n_steps",
                              "reference"),
         "forward-solve a saved model"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", metavar="PATH",
                        help="flat key=value settings file")
        sp.add_argument("--out", metavar="DIR", help="output directory")
        _add_keys(sp, *keys)
        sp.set_defaults(func=func)

    bp = sub.add_parser("bench", help="replay a documented end-to-end recipe")
    bp.add_argument("recipe", help="recipe name, e.g. ex1-circle")
    bp.add_argument("--config", metavar="PATH")
    bp.add_argument("--out", metavar="DIR")
    _add_keys(bp, "n")
    bp.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"surfpde: error: {exc}", file=sys.stderr)
        return 1
    except (SurfacePDEError, np.linalg.LinAlgError) as exc:
        print(f"surfpde: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
