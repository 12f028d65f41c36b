"""Command-line interface.

Every command builds a table (column names plus rows of scalars), writes
it as CSV or JSON, and for the plottable commands also renders a PNG next
to the output file.  Exit status: 0 success, 2 invalid input or domain
error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import exact_oracle, expansion, layers, marginal, mc_sim, rays
from .errors import DomainError, FluidModelError, ValidationError
from .model import ModelParams, derive_params

COMMANDS = ("check", "exact", "curves", "rays", "eval", "layer", "marginal",
            "simulate", "compare", "density-profile")
EXIT_IO = 4


@dataclass
class Table:
    command: str
    params: ModelParams
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, **cells):
        unknown = set(cells) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns {sorted(unknown)}")
        self.rows.append([_clean(cells.get(c)) for c in self.columns])


def _clean(v):
    """Map a cell to a finite number, string or ``None``."""
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return str(v)


# serialization ----------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def to_csv(t: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(t.columns)
    for r in t.rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def to_json_obj(t: Table) -> dict:
    obj = {
        "command": t.command,
        "params": {"N": t.params.N, "lambda": t.params.lam, "c": t.params.c},
        "columns": list(t.columns),
        "rows": [dict(zip(t.columns, r)) for r in t.rows],
    }
    if t.meta:
        obj["meta"] = t.meta
    return obj


def load_schema() -> dict:
    return json.loads(resources.files("onoff_fluid").joinpath("schema/output.schema.json").read_text())


def validate_json(obj: dict) -> None:
    import jsonschema

    jsonschema.validate(obj, load_schema())


def to_json(t: Table) -> str:
    obj = to_json_obj(t)
    validate_json(obj)
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


# commands ---------------------------------------------------------------------

def cmd_check(p: ModelParams, a) -> Table:
    """Derived constants and the algebraic identities they satisfy."""
    t = Table("check", p, ["name", "value", "residual"])
    for k, v in p.as_dict().items():
        t.add(name=k, value=v)
    t.add(name="z_star", value=p.z_star)
    r1, r2 = rays.ray_derived(p, 0.5).r1, rays.ray_derived(p, 0.5).r2
    ident = {
        "rho+phi-2gamma": p.rho + p.phi - 2 * p.gamma,
        "phi-rho-2lam(1-gamma)": p.phi - p.rho - 2 * p.lam * (1 - p.gamma),
        "phi^2-beta^2-rho^2": p.phi**2 - p.beta**2 - p.rho**2,
        "r1*r2+lam": r1 * r2 + p.lam,
        "S0+rho/(gamma(1-gamma))": p.S0 + p.rho / (p.gamma * (1 - p.gamma)),
    }
    for k, v in ident.items():
        t.add(name=k, residual=v)
    return t


def cmd_exact(p: ModelParams, a) -> Table:
    xs = _grid(a.x_grid, "x-grid", default=[0.0])
    tab = exact_oracle.solve_stationary(p, xs)
    t = Table("exact", p, ["x", "k", "F", "F_inf", "tail", "marginal"])
    for i, x in enumerate(xs):
        d = tab.deficit(float(x))
        M = tab.marginal(float(x))
        for k in _klist(a, p):
            t.add(x=x, k=k, F=tab.F[k, i], F_inf=tab.F_inf[k], tail=d[k], marginal=M)
    t.meta = {"cond": tab.cond}
    return t


def cmd_curves(p: ModelParams, a) -> Table:
    """``Y0``, ``Y1``, ``Ymax`` and rays from infinity on a ``z`` grid."""
    zs = _grid(a.z_grid, "z-grid", default=list(np.linspace(p.gamma, 0.999, 50)))
    z0s = a.yinf_z0 or [1.0]
    cols = ["z", "Y0", "Y1", "Ymax"] + [f"Yinf_{z0:g}" for z0 in z0s]
    t = Table("curves", p, cols)
    anchors = []
    for z0 in z0s:
        try:
            anchors.append((rays.curve_Y0(p, z0) if z0 > p.gamma else 0.0, z0))
        except FluidModelError:
            anchors.append(None)
    for z in zs:
        row = {"z": z,
               "Y0": _try(rays.curve_Y0, p, z),
               "Y1": _try(rays.curve_Y1, p, z),
               "Ymax": _try(lambda q, zz: rays.curve_Ymax(q, zz)[1], p, z)}
        for z0, anc in zip(z0s, anchors):
            row[f"Yinf_{z0:g}"] = None if anc is None else _try(rays.curve_Yinf, p, z, *anc)
        t.add(**row)
    return t


def cmd_rays(p: ModelParams, a) -> Table:
    ss = a.s_list or [-3.0, -1.5, p.S0, -0.5, 0.0, 0.5, 2.0]
    ts = _grid(a.t_grid, "t-grid", default=list(np.linspace(0.0, 4.0, 81)))
    t = Table("rays", p, ["s", "t", "y", "z"])
    for s in ss:
        for tt in ts:
            try:
                y, z = rays.ray_point(p, s, tt)
            except FluidModelError:
                y = z = None
            if z is not None and not 0.0 <= z <= 1.0:
                continue
            t.add(s=s, t=tt, y=y, z=z)
    return t


def cmd_eval(p: ModelParams, a) -> Table:
    ys = _grid(a.y_grid, "y-grid", default=[0.3])
    zs = _grid(a.z_grid, "z-grid", default=[0.75])
    cols = ["y", "z", "s", "t", "region", "branch", "psi", "K", "logG", "F", "layer", "error"]
    t = Table("eval", p, cols)
    for y in ys:
        for z in zs:
            try:
                ev = expansion.evaluate(p, y, z, guard=False)
                t.add(y=y, z=z, s=ev.s, t=ev.t, region=ev.region, branch=ev.branch, psi=ev.psi,
                      K=ev.K, logG=ev.logG, F=ev.F, layer=ev.layer)
            except FluidModelError as exc:
                t.add(y=y, z=z, error=type(exc).__name__)
    return t


def cmd_layer(p: ModelParams, a) -> Table:
    xs = _grid(a.x_grid, "x-grid", default=[0.0, 1.0])
    t = Table("layer", p, ["x", "k", "F", "log_F", "tail", "source", "error"])
    for x in xs:
        for k in _klist(a, p):
            try:
                ap = layers.approximate(p, k, x)
                t.add(x=x, k=k, F=ap.F, log_F=ap.log_F, tail=ap.deficit, source=ap.source)
            except FluidModelError as exc:
                t.add(x=x, k=k, error=type(exc).__name__)
    return t


def cmd_marginal(p: ModelParams, a) -> Table:
    xs = _grid(a.x_grid, "x-grid", default=[0.0, 0.05, 0.1, 0.2, 1.0, p.N / 10])
    t = Table("marginal", p, ["x", "regime", "arg", "log_M", "M", "s_saddle", "terms_used"])
    for x in xs:
        for r in marginal.marginal(p, x):
            t.add(x=x, regime=r.regime, arg=r.x, log_M=r.log_M, M=r.M, s_saddle=r.s_saddle,
                  terms_used=r.terms_used)
    return t


def cmd_simulate(p: ModelParams, a) -> Table:
    xs = _grid(a.x_grid, "x-grid", default=[0.0])
    ks = a.k_list or []
    probes = [(x, None) for x in xs] + [(x, k) for x in xs for k in ks]
    cfg = mc_sim.SimConfig(seed=a.seed, min_cycles=a.cycles, probes=tuple(probes))
    r = mc_sim.simulate(p, cfg)
    t = Table("simulate", p, ["quantity", "x", "k", "value", "se", "cycles"])
    for (x, k), (v, se, n) in r.estimates.items():
        t.add(quantity="P[X>x]" if k is None else "P[X>x,Z=k]", x=x, k=k, value=v, se=se, cycles=n)
    for k, (v, se) in enumerate(r.z_marginal):
        t.add(quantity="P[Z=k]", k=k, value=v, se=se, cycles=r.cycles)
    t.meta = {"events": r.events, "regeneration_state": r.regeneration_state, "seed": a.seed}
    return t


def sweep_c(p: ModelParams, n: int) -> float:
    """Output rate for ``n`` sources at the same ``gamma``, nudged off integers."""
    c = p.gamma * n
    if abs(c - round(c)) < 1e-9:
        c += 0.25
    return c


def _compare_one(p: ModelParams, probes, mc: dict | None) -> list[dict]:
    xs = sorted({p.N * y for y, _ in probes})
    tab = exact_oracle.solve_stationary(p, xs)
    out = []
    for y, z in probes:
        x, k = p.N * y, int(round(p.N * z))
        rec = {"N": p.N, "y": y, "z": z, "x": x, "k": k}
        d = tab.deficit(x)[k]
        try:
            ap = layers.approximate(p, k, x)
            rec["source"] = ap.source
            if ap.deficit is not None:
                rec.update(quantity="tail", exact=d, asymptotic=ap.deficit)
            else:
                rec.update(quantity="F", exact=tab.F_inf[k] - d, asymptotic=ap.F)
            rec["rel_error"] = abs(rec["asymptotic"] / rec["exact"] - 1.0)
        except FluidModelError as exc:
            rec["source"] = f"error:{type(exc).__name__}"
        # the outer formula alongside, when the point is inside a layer band
        if rec.get("source") != "Outer" and y > 0.0 and 0 < k < p.N:
            try:
                F, _, od = layers._outer(p, y, k / p.N)
                ex_q = d if od is not None else tab.F_inf[k] - d
                rec["outer"] = od if od is not None else F
                rec["outer_rel_error"] = abs(rec["outer"] / ex_q - 1.0)
            except FluidModelError:
                pass
        if mc is not None and (x, k) in mc:
            v, se, _ = mc[(x, k)]
            rec["mc"], rec["mc_se"] = v, se
        out.append(rec)
    return out


def cmd_compare(p: ModelParams, a) -> Table:
    probes = a.probe or [(0.3, 0.75), (0.01, 0.75)]
    Ns = a.sweep_N or [p.N]
    cols = ["N", "y", "z", "x", "k", "source", "quantity", "exact", "asymptotic", "rel_error",
            "outer", "outer_rel_error", "mc", "mc_se"]
    t = Table("compare", p, cols)
    trend, outer_trend = {}, {}
    for n in Ns:
        q = p if n == p.N else derive_params(n, p.lam, sweep_c(p, n))
        mc = None
        if a.mc:
            pr = tuple((q.N * y, int(round(q.N * z))) for y, z in probes)
            r = mc_sim.simulate(q, mc_sim.SimConfig(seed=a.seed, min_cycles=a.cycles, probes=pr))
            mc = r.estimates
        recs = _compare_one(q, probes, mc)
        for rec in recs:
            t.add(**rec)
        errs = [r["rel_error"] for r in recs if "rel_error" in r]
        trend[str(n)] = max(errs) if errs else None
        oerr = [r.get("outer_rel_error", r.get("rel_error") if r.get("source") == "Outer" else None)
                for r in recs]
        oerr = [e for e in oerr if e is not None]
        outer_trend[str(n)] = max(oerr) if oerr else None
    t.meta = {"max_rel_error_by_N": trend, "max_outer_rel_error_by_N": outer_trend}
    if len(Ns) > 1:
        def mono(d):
            vals = [d[str(n)] for n in sorted(Ns)]
            return all(u is not None and v is not None and v < u for u, v in zip(vals, vals[1:]))
        t.meta["monotone_decrease"] = mono(trend)
        t.meta["outer_monotone_decrease"] = mono(outer_trend)
    return t


def cmd_density_profile(p: ModelParams, a) -> Table:
    if (a.fixed_z is None) == (a.fixed_y is None):
        raise DomainError("give exactly one of --fixed-z or --fixed-y")
    if a.fixed_z is not None:
        z = a.fixed_z
        top = 2.0 * rays.curve_Y0(p, z) if z > p.gamma else 0.5
        grid = _grid(a.grid, "grid", default=list(np.linspace(top / 200, top, 200)))
        pts = [(y, z) for y in grid]
        coord = "y"
    else:
        y = a.fixed_y
        grid = _grid(a.grid, "grid", default=list(np.linspace(0.005, 0.995, 200)))
        pts = [(y, z) for z in grid]
        coord = "z"
    t = Table("density-profile", p, [coord, "log_density", "layer"])
    best, arg = -math.inf, None
    for (yy, zz), g in zip(pts, grid):
        try:
            ld, tag = expansion.log_density(p, yy, zz)
        except FluidModelError as exc:
            t.add(**{coord: g, "layer": f"error:{type(exc).__name__}"})
            continue
        t.add(**{coord: g, "log_density": ld, "layer": tag})
        if ld > best:
            best, arg = ld, g
    t.meta = {"argmax": arg, "fixed": {"z": a.fixed_z} if a.fixed_z is not None else {"y": a.fixed_y}}
    return t


HANDLERS = {
    "check": cmd_check, "exact": cmd_exact, "curves": cmd_curves, "rays": cmd_rays,
    "eval": cmd_eval, "layer": cmd_layer, "marginal": cmd_marginal, "simulate": cmd_simulate,
    "compare": cmd_compare, "density-profile": cmd_density_profile,
}


# figures --------------------------------------------------------------------------

def _column(t: Table, name: str) -> np.ndarray:
    i = t.columns.index(name)
    return np.array([np.nan if r[i] is None or isinstance(r[i], str) else r[i] for r in t.rows],
                    dtype=float)


def render_figure(t: Table, path: Path) -> bool:
    """Plot the table if the command has a natural picture; return whether it did."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    cmd = t.command
    if cmd == "curves":
        z = _column(t, "z")
        for name in t.columns[1:]:
            ax.plot(_column(t, name), z, label=name)
        ax.set_xlabel("y")
        ax.set_ylabel("z")
        ax.legend()
    elif cmd == "rays":
        s, y, z = _column(t, "s"), _column(t, "y"), _column(t, "z")
        for sv in np.unique(s):
            m = s == sv
            ax.plot(y[m], z[m], label=f"s={sv:.3g}")
        ax.axhline(t.params.gamma, color="0.6", lw=0.8)
        ax.set_xlabel("y")
        ax.set_ylabel("z")
        ax.legend(fontsize=7)
    elif cmd == "density-profile":
        coord = t.columns[0]
        ax.plot(_column(t, coord), _column(t, "log_density"))
        ax.set_xlabel(coord)
        ax.set_ylabel("log density")
    elif cmd == "marginal":
        x, lm = _column(t, "x"), _column(t, "log_M")
        reg = [r[t.columns.index("regime")] for r in t.rows]
        for tag in ("SmallX", "LargeX"):
            m = np.array([g == tag for g in reg])
            if m.any():
                ax.plot(x[m], lm[m], "o-", label=tag)
        ax.set_xlabel("x")
        ax.set_ylabel("log M")
        ax.legend()
    elif cmd == "compare" and len(t.meta.get("max_rel_error_by_N", {})) > 1:
        tr = t.meta["max_rel_error_by_N"]
        ax.loglog([int(k) for k in tr], list(tr.values()), "o-")
        ax.set_xlabel("N")
        ax.set_ylabel("max relative error")
    else:
        plt.close(fig)
        return False
    ax.set_title(f"{cmd}: N={t.params.N}, lambda={t.params.lam:g}, c={t.params.c:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


# argument handling ------------------------------------------------------------------

def _try(f, *args):
    try:
        return f(*args)
    except (FluidModelError, ValueError, ZeroDivisionError, OverflowError):
        return None


def _grid(v, name, default):
    g = default if v is None else v
    g = [float(x) for x in g]
    if any(not math.isfinite(x) for x in g):
        raise ValidationError(f"{name} must be finite")
    if any(b < a for a, b in zip(g, g[1:])):
        raise ValidationError(f"{name} must be sorted")
    return g


def _klist(a, p: ModelParams) -> list[int]:
    ks = a.k_list if a.k_list else list(range(p.N + 1))
    for k in ks:
        if not 0 <= k <= p.N:
            raise DomainError(f"k={k} outside [0, {p.N}]")
    return ks


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def _pair(s: str) -> tuple[float, float]:
    y, z = s.split(",")
    return float(y), float(z)


SPEC_KEYS = {
    "x_grid", "y_grid", "z_grid", "t_grid", "s_list", "k_list", "grid", "yinf_z0", "probe",
    "sweep_N", "fixed_z", "fixed_y", "seed", "cycles", "mc",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--N", type=int, default=None, help="number of sources")
    common.add_argument("--lambda", dest="lam", type=float, default=None, help="off->on rate")
    common.add_argument("--c", type=float, default=None, help="output rate (non-integer)")
    common.add_argument("--out", default=None, help="output file (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--spec", default=None, help="JSON run-spec; its entries override flags")
    common.add_argument("--no-figure", action="store_true", help="skip the PNG next to --out")

    ap = argparse.ArgumentParser(prog="onoff-fluid", parents=[common],
                                 description="On-off fluid buffer: asymptotics, exact solution, simulation.")
    sub = ap.add_subparsers(dest="command")
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--x-grid", dest="x_grid", type=_floats)
        sp.add_argument("--y-grid", dest="y_grid", type=_floats)
        sp.add_argument("--z-grid", dest="z_grid", type=_floats)
        sp.add_argument("--t-grid", dest="t_grid", type=_floats)
        sp.add_argument("--s-list", dest="s_list", type=_floats)
        sp.add_argument("--k-list", dest="k_list", type=_ints)
        sp.add_argument("--grid", type=_floats)
        sp.add_argument("--yinf-z0", dest="yinf_z0", type=_floats,
                        help="levels whose Y0 point anchors a ray from infinity")
        sp.add_argument("--probe", action="append", type=_pair, help="scaled probe y,z (repeatable)")
        sp.add_argument("--sweep-N", dest="sweep_N", type=_ints)
        sp.add_argument("--fixed-z", dest="fixed_z", type=float)
        sp.add_argument("--fixed-y", dest="fixed_y", type=float)
        sp.add_argument("--seed", type=int, default=20240601)
        sp.add_argument("--cycles", type=int, default=10_000)
        sp.add_argument("--mc", action="store_true", help="add simulation estimates (compare)")
    return ap


def apply_spec(a: argparse.Namespace, spec: dict) -> argparse.Namespace:
    """Overlay a run-spec on parsed flags.

    Layout: ``{"command", "model": {"N", "lambda", "c"}, "grids": {...},
    "output": {"path", "format"}, "seed", "cycles"}``; grid keys use the
    flag names with underscores.
    """
    if not isinstance(spec, dict):
        raise ValidationError("run-spec must be a JSON object")
    extra = set(spec) - {"command", "model", "grids", "output", "seed", "cycles", "options"}
    if extra:
        raise ValidationError(f"unknown run-spec keys {sorted(extra)}")
    if "command" in spec:
        if spec["command"] not in COMMANDS:
            raise ValidationError(f"unknown command {spec['command']!r}")
        a.command = spec["command"]
    model = spec.get("model", {})
    for key, dest in (("N", "N"), ("lambda", "lam"), ("c", "c")):
        if key in model:
            setattr(a, dest, model[key])
    out = spec.get("output", {})
    if "path" in out:
        a.out = out["path"]
    if "format" in out:
        if out["format"] not in ("csv", "json"):
            raise ValidationError("output.format must be csv or json")
        a.format = out["format"]
    for src in (spec.get("grids", {}), spec.get("options", {}),
                {k: spec[k] for k in ("seed", "cycles") if k in spec}):
        for k, v in src.items():
            if k not in SPEC_KEYS:
                raise ValidationError(f"unknown run-spec entry {k!r}")
            if k == "probe":
                v = [tuple(map(float, pr)) for pr in v]
            setattr(a, k, v)
    return a


_DEFAULTS = {"x_grid": None, "y_grid": None, "z_grid": None, "t_grid": None, "s_list": None,
             "k_list": None, "grid": None, "yinf_z0": None, "probe": None, "sweep_N": None,
             "fixed_z": None, "fixed_y": None, "seed": 20240601, "cycles": 10_000, "mc": False}


def run(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        for k, v in _DEFAULTS.items():
            if not hasattr(a, k):
                setattr(a, k, v)
        if a.spec:
            try:
                spec = json.loads(Path(a.spec).read_text())
            except OSError as exc:
                print(f"error: cannot read run-spec: {exc}", file=sys.stderr)
                return EXIT_IO
            except json.JSONDecodeError as exc:
                raise ValidationError(f"run-spec is not valid JSON: {exc}") from exc
            apply_spec(a, spec)
        if a.command is None:
            ap.print_usage(sys.stderr)
            print("error: no command given", file=sys.stderr)
            return 2
        if a.N is None or a.lam is None or a.c is None:
            raise ValidationError("--N, --lambda and --c are required (flags or run-spec)")
        p = derive_params(int(a.N), float(a.lam), float(a.c))
        table = HANDLERS[a.command](p, a)
        fmt = a.format or (Path(a.out).suffix.lstrip(".") if a.out and a.out.endswith((".csv", ".json")) else "csv")
        text = to_json(table) if fmt == "json" else to_csv(table)
    except FluidModelError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    try:
        if a.out:
            out = Path(a.out)
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            if not a.no_figure:
                render_figure(table, out.with_suffix(".png"))
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
