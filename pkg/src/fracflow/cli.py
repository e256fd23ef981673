"""Command-line surface.

Subcommands: classify, potential, stationary, regions, integrate.
Systems come from a small line-oriented file format or from the
built-in catalog via ``builtin:<name>``.  Exit codes: 0 success (and
"closed" for classify), 1 not closed at the requested order, 2 input
error.

System file format ('#' starts a comment):

    vars: x y z
    params: sigma=10 b=2.6666666666666665 r=24.736842105263158
    alpha: 2
    F[x] = sigma*(y-x)
    F[y] = (r-z)*x - y
    F[z] = x*y - b*z

Optional line ``phase: qp`` marks the first half of the variables as
coordinates and the second half as momenta.
"""

from __future__ import annotations

import argparse
import re
import sys as _sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .forms import check_gradient, check_hamiltonian
from .fracderiv import FracOrder
from .polyexpr import ExprError, GenPoly, SystemSpec, parse_expression, to_text
from .systems import (
    DEFAULT_CENSUS_GRID,
    NotClosedError,
    catalog,
    count_regions,
    extract_isosurface,
    reconstruct_hamiltonian,
    reconstruct_potential,
    sample_grid,
    stationary_surface,
)
from .dynamics import integrate as _integrate

__all__ = ["main", "load_system"]

_F_LINE = re.compile(r"^F\[([A-Za-z_][A-Za-z_0-9]*)\]\s*=\s*(.*)$")


class SystemFileError(ValueError):
    pass


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def load_system_text(text: str, origin: str = "<text>") -> SystemSpec:
    names: tuple[str, ...] | None = None
    params: dict[str, float] = {}
    alpha: float | None = None
    phase = False
    rhs_src: dict[str, tuple[str, int]] = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("vars:"):
            names = tuple(line[5:].split())
            if not names or len(set(names)) != len(names):
                raise SystemFileError(f"{origin}:{lineno}: vars must be distinct names")
            continue
        if line.startswith("params:"):
            for item in line[7:].split():
                if "=" not in item:
                    raise SystemFileError(f"{origin}:{lineno}: expected name=value, got {item!r}")
                key, val = item.split("=", 1)
                try:
                    params[key] = float(val)
                except ValueError:
                    raise SystemFileError(f"{origin}:{lineno}: bad number {val!r}") from None
            continue
        if line.startswith("alpha:"):
            try:
                alpha = float(line[6:].strip())
            except ValueError:
                raise SystemFileError(f"{origin}:{lineno}: bad alpha {line[6:].strip()!r}") from None
            continue
        if line.startswith("phase:"):
            if line[6:].strip() != "qp":
                raise SystemFileError(f"{origin}:{lineno}: only 'phase: qp' is supported")
            phase = True
            continue
        m = _F_LINE.match(line)
        if m:
            var, expr = m.group(1), m.group(2)
            if names is None or var not in names:
                raise SystemFileError(f"{origin}:{lineno}: F[{var}] before vars or unknown variable")
            if var in rhs_src:
                raise SystemFileError(f"{origin}:{lineno}: duplicate right-hand side for {var}")
            rhs_src[var] = (expr, lineno)
            continue
        raise SystemFileError(f"{origin}:{lineno}: unrecognized line {line!r}")

    if names is None:
        raise SystemFileError(f"{origin}: missing 'vars:' line")
    if alpha is None:
        raise SystemFileError(f"{origin}: missing 'alpha:' line")
    missing = [v for v in names if v not in rhs_src]
    if missing:
        raise SystemFileError(f"{origin}: missing right-hand side for {', '.join(missing)}")

    rhs = []
    for v in names:
        expr, lineno = rhs_src[v]
        try:
            rhs.append(parse_expression(expr, names, params))
        except ExprError as exc:
            raise SystemFileError(f"{origin}:{lineno}: column {exc.pos + 1}: {exc}") from None
    try:
        return SystemSpec(names, params, FracOrder(alpha), tuple(rhs), phase_split=phase)
    except ValueError as exc:
        raise SystemFileError(f"{origin}: {exc}") from None


def load_system(pathspec: str) -> SystemSpec:
    """Load a system from a file path or from ``builtin:<name>``."""
    if pathspec.startswith("builtin:"):
        return catalog(pathspec[len("builtin:") :])
    path = Path(pathspec)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SystemFileError(f"cannot read {pathspec!r}: {exc}") from None
    return load_system_text(text, origin=str(path))


def _parse_box(text: str, n: int) -> list[tuple[float, float]]:
    parts = text.split(",")
    if len(parts) == 1:
        parts = parts * n
    if len(parts) != n:
        raise SystemFileError(f"--box needs 1 or {n} min:max pairs")
    out = []
    for part in parts:
        try:
            lo, hi = part.split(":")
            out.append((float(lo), float(hi)))
        except ValueError:
            raise SystemFileError(f"bad --box component {part!r}, expected min:max") from None
    return out


def _parse_res(text: str, n: int) -> tuple[int, ...]:
    parts = text.split(",")
    if len(parts) == 1:
        parts = parts * n
    if len(parts) != n:
        raise SystemFileError(f"--res needs 1 or {n} integers")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise SystemFileError(f"bad --res {text!r}") from None


def _parse_constants(text: str | None, n: int) -> dict[tuple[int, ...], float]:
    """"<digits>=<value>[,...]"; short indices are zero-padded on the
    right, so 00=1 addresses the all-zeros constant of a 3-variable
    system and 1=2.5 addresses (1,0,0)."""
    if not text:
        return {}
    out: dict[tuple[int, ...], float] = {}
    for item in text.split(","):
        if "=" not in item:
            raise SystemFileError(f"bad --constants item {item!r}, expected digits=value")
        key, val = item.split("=", 1)
        key = key.strip()
        if not key.isdigit() or len(key) > n:
            raise SystemFileError(f"bad constant index {key!r} for {n} variables")
        idx = tuple(int(ch) for ch in key.ljust(n, "0"))
        try:
            out[idx] = out.get(idx, 0.0) + float(val)
        except ValueError:
            raise SystemFileError(f"bad constant value {val!r}") from None
    return out


def _default_grid(pathspec: str):
    if pathspec.startswith("builtin:"):
        return DEFAULT_CENSUS_GRID.get(pathspec[len("builtin:") :])
    return None


def _print_report(report, out=None) -> None:
    out = out or _sys.stdout
    print(f"max residual coefficient: {report.max_coeff:.17g}", file=out)


def _print_residuals(report, names) -> None:
    for cid, poly in report.residuals:
        print(f"residual {cid}: {to_text(poly, names)}")


def _reconstruct(spec: SystemSpec) -> tuple[GenPoly, str]:
    if spec.phase_split:
        return reconstruct_hamiltonian(spec), "H"
    return reconstruct_potential(spec), "V"


def cmd_classify(args) -> int:
    spec = load_system(args.system)
    order = FracOrder(args.alpha) if args.alpha is not None else spec.alpha
    kind = "Hamiltonian" if spec.phase_split else "gradient"
    report = (check_hamiltonian if spec.phase_split else check_gradient)(spec, order)
    print(f"system: {args.system} ({', '.join(spec.var_names)}) alpha={order.alpha:.17g}")
    if report.closed:
        label = kind if order.alpha == 1.0 else f"fractional {kind} (alpha={order.alpha:.17g})"
    else:
        label = f"not {kind} at alpha={order.alpha:.17g}"
    print(f"classification: {label}")
    _print_residuals(report, spec.var_names)
    _print_report(report)
    return 0 if report.closed else 1


def cmd_potential(args) -> int:
    spec = load_system(args.system)
    try:
        f, _ = _reconstruct(spec)
    except NotClosedError as exc:
        print(str(exc))
        _print_residuals(exc.report, spec.var_names)
        return 1
    print(to_text(f, spec.var_names))
    return 0


def _surface_grid(args, spec: SystemSpec, default_res: int):
    f, _ = _reconstruct(spec)
    constants = _parse_constants(args.constants, spec.nvars)
    surf = stationary_surface(f, spec.alpha, constants)
    default = _default_grid(args.system)
    if args.box is not None:
        box = _parse_box(args.box, spec.nvars)
    elif default is not None:
        box = default[0][: spec.nvars]
    else:
        raise SystemFileError("no default box for this system; pass --box min:max[,...]")
    res = _parse_res(args.res, spec.nvars) if args.res is not None else (default_res,) * spec.nvars
    return sample_grid(surf, box, res)


def cmd_stationary(args) -> int:
    spec = load_system(args.system)
    grid = _surface_grid(args, spec, default_res=101)
    out = Path(args.out)
    if out.suffix == ".csv":
        axes = grid.axes
        with open(out, "w", newline="\n") as fh:
            fh.write(",".join(spec.var_names) + ",phi\n")
            vals = grid.values
            mask = grid.mask
            for idx in np.ndindex(*grid.resolution):
                if mask[idx]:
                    continue
                coords = [axes[d][idx[d]] for d in range(len(idx))]
                fh.write(",".join(_fmt(c) for c in coords) + f",{_fmt(vals[idx])}\n")
        print(f"wrote {out}")
        return 0
    if out.suffix == ".obj":
        if spec.nvars != 3:
            raise SystemFileError("mesh export needs a 3-variable system")
        mesh = extract_isosurface(grid)
        with open(out, "w", newline="\n") as fh:
            for v in mesh.vertices:
                fh.write(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
            for t in mesh.triangles:
                fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")
        print(f"wrote {out} ({len(mesh.vertices)} vertices, {len(mesh.triangles)} faces)")
        return 0
    raise SystemFileError(f"unsupported output format {out.suffix!r}; use .csv or .obj")


def cmd_regions(args) -> int:
    spec = load_system(args.system)
    if spec.nvars != 3:
        raise SystemFileError("region census needs a 3-variable system")
    grid = _surface_grid(args, spec, default_res=201)
    rep = count_regions(grid)
    print(f"components: {rep.component_count}")
    print(f"positive-components: {rep.positive_count}")
    print(f"negative-components: {rep.negative_count}")
    print("sizes: " + " ".join(str(s) for s in rep.component_sizes))
    print("box: " + ",".join(f"{_fmt(lo)}:{_fmt(hi)}" for lo, hi in grid.box))
    print("resolution: " + ",".join(str(r) for r in grid.resolution))
    return 0


def cmd_integrate(args) -> int:
    spec = load_system(args.system)
    try:
        x0 = [float(v) for v in args.x0.split(",")]
    except ValueError:
        raise SystemFileError(f"bad --x0 {args.x0!r}") from None
    watch = {}
    if args.watch:
        f, kind = _reconstruct(spec)
        if args.watch != kind:
            raise SystemFileError(
                f"--watch {args.watch} does not apply; this system reconstructs {kind}"
            )
        watch[kind] = f
    traj = _integrate(spec, x0, args.t_end, args.h, watch=watch)
    out = Path(args.out)
    with open(out, "w", newline="\n") as fh:
        header = "t," + ",".join(spec.var_names)
        series = list(traj.diagnostics.items())
        for name, _ in series:
            header += f",{name}"
        fh.write(header + "\n")
        for i, t in enumerate(traj.times):
            row = [_fmt(t)] + [_fmt(v) for v in traj.states[i]]
            row += [_fmt(vals[i]) for _, vals in series]
            fh.write(",".join(row) + "\n")
        if traj.domain_exit is not None:
            fh.write(f"# domain-exit at t={_fmt(traj.domain_exit)}\n")
    print(f"wrote {out} ({len(traj.times)} samples)")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fracflow",
        description="fractional gradient/Hamiltonian systems: classify, "
        "reconstruct, export stationary surfaces, integrate flows",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_system(p):
        p.add_argument("system", help="system file path or builtin:<name>")

    p = sub.add_parser("classify", help="closure test and classification")
    add_system(p)
    p.add_argument("--alpha", type=float, default=None, help="override the file's order")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("potential", help="reconstruct and print V (or H)")
    add_system(p)
    p.set_defaults(fn=cmd_potential)

    p = sub.add_parser("stationary", help="sample the stationary surface to CSV or OBJ")
    add_system(p)
    p.add_argument("--constants", default=None, help="digits=value[,...], e.g. 00=1")
    p.add_argument("--box", default=None, help="min:max or per-axis min:max,min:max,...")
    p.add_argument("--res", default=None, help="samples per axis (int or comma list)")
    p.add_argument("--out", required=True, help="output path, .csv or .obj")
    p.set_defaults(fn=cmd_stationary)

    p = sub.add_parser("regions", help="connected-component census of the complement")
    add_system(p)
    p.add_argument("--constants", default=None, help="digits=value[,...]")
    p.add_argument("--box", default=None)
    p.add_argument("--res", default=None)
    p.set_defaults(fn=cmd_regions)

    p = sub.add_parser("integrate", help="RK4 trajectory to CSV")
    add_system(p)
    p.add_argument("--x0", required=True, help="comma-separated initial state")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--watch", choices=("V", "H"), default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_integrate)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except NotClosedError as exc:
        print(str(exc), file=_sys.stderr)
        for cid, poly in exc.report.residuals:
            print(f"residual {cid}", file=_sys.stderr)
        return 1
    except (SystemFileError, ExprError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
