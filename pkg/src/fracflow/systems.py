"""Reconstruction of potentials and Hamiltonians, stationary-state
surfaces, grid sampling, isosurface extraction, the region census, and
the built-in system catalog.

Reconstruction inverts D^a_{x_i} V = -F_i termwise.  For non-integer
order a single fractional integral in the first variable recovers every
term of V at once (no term is annihilated by D^a unless it lies in the
kernel, and the minimal representative carries no kernel part); for
integer order the classical successive scheme integrates the residual
coordinate by coordinate.  Both routes end with a full verification
pass against every component.

Stationary surfaces follow Phi = V - |prod x_i|^{a-m} * sum_k C_k
prod x_i^{k_i} with multi-indices 0 <= k_i <= m-1; for integer order
the prefactor is 1 and Phi is an ordinary polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import ndimage
from skimage import measure

from .forms import ClosureReport, check_gradient, check_hamiltonian
from .fracderiv import (
    FracOrder,
    _frac_integral_analytic,
    as_order,
    frac_deriv,
    frac_integral,
)
from .numerics import gamma
from .polyexpr import GenPoly, SystemSpec, coeff_distance, eval_poly_array, parse_expression

__all__ = [
    "CATALOG_NAMES",
    "DEFAULT_CENSUS_GRID",
    "Mesh",
    "NotClosedError",
    "ReconstructionError",
    "RegionReport",
    "ScalarGrid",
    "StationarySurface",
    "catalog",
    "count_regions",
    "extract_isosurface",
    "reconstruct_hamiltonian",
    "reconstruct_potential",
    "sample_grid",
    "stationary_surface",
]

#: grid-sign tolerance: |Phi| at or below this is surface, not region
SURFACE_TOL = 1e-12

#: verification tolerance for reconstructed derivative images
RECON_TOL = 1e-9


class NotClosedError(ValueError):
    """The field fails its closure test; no potential/Hamiltonian exists."""

    def __init__(self, report: ClosureReport, what: str):
        super().__init__(
            f"system is not {what} (max residual coefficient {report.max_coeff:.3e})"
        )
        self.report = report


class ReconstructionError(ValueError):
    """Construction finished but some derivative image failed to verify."""


def _solve_exact(targets: Sequence[GenPoly], order: FracOrder) -> GenPoly:
    """Return S with D^a_{x_v} S = targets[v] for every v, no kernel part."""
    n = len(targets)
    nvars = targets[0].nvars
    if order.is_integer:
        s = GenPoly.zero(nvars)
        for v in range(n):
            residual = targets[v] - frac_deriv(s, v, order)
            s = s + frac_integral(residual, v, order)
    else:
        s = _frac_integral_analytic(targets[0], 0, order)
    errs = [coeff_distance(frac_deriv(s, v, order), targets[v]) for v in range(n)]
    worst = max(errs, default=0.0)
    if worst > RECON_TOL:
        bad = ", ".join(f"#{v}: {e:.3e}" for v, e in enumerate(errs) if e > RECON_TOL)
        raise ReconstructionError(f"derivative images failed to verify ({bad})")
    return s


def reconstruct_potential(sys: SystemSpec, order: "FracOrder | float | None" = None) -> GenPoly:
    """Potential V with D^a_{x_i} V = -F_i for all i, kernel part zero.

    Raises NotClosedError when the closure test fails and
    ReconstructionError when the verification pass does.
    """
    o = as_order(order) if order is not None else sys.alpha
    report = check_gradient(sys, o)
    if not report.closed:
        raise NotClosedError(report, f"a fractional gradient system at alpha={o.alpha:g}")
    return _solve_exact([-f for f in sys.rhs], o)


def reconstruct_hamiltonian(sys: SystemSpec, order: "FracOrder | float | None" = None) -> GenPoly:
    """Hamiltonian H with G^i = D^a_{p_i} H and F^i = -D^a_{q_i} H."""
    if not sys.phase_split:
        raise ValueError("reconstruct_hamiltonian needs a phase-split system")
    o = as_order(order) if order is not None else sys.alpha
    report = check_hamiltonian(sys, o)
    if not report.closed:
        raise NotClosedError(report, f"a fractional Hamiltonian system at alpha={o.alpha:g}")
    n = sys.nvars // 2
    targets = [-sys.rhs[n + i] for i in range(n)] + [sys.rhs[i] for i in range(n)]
    return _solve_exact(targets, o)


@dataclass(frozen=True)
class StationarySurface:
    """Implicit function Phi whose zero set is the stationary manifold."""

    phi: GenPoly
    order: FracOrder
    constants: Mapping[tuple[int, ...], float]


def stationary_surface(
    v: GenPoly,
    order: "FracOrder | float",
    constants: Mapping[tuple[int, ...], float],
) -> StationarySurface:
    """Phi = V - |prod x_i|^{a-m} sum_k C_k prod x_i^{k_i}.

    Constants are indexed by multi-indices (k_1..k_n) with
    0 <= k_i <= m-1; the empty tuple is accepted as the all-zeros
    index.  For integer order the prefactor is 1 and Phi is plain
    polynomial.
    """
    o = as_order(order)
    n = v.nvars
    norm: dict[tuple[int, ...], float] = {}
    for idx, c in constants.items():
        key = tuple(int(k) for k in idx)
        if key == ():
            key = (0,) * n
        if len(key) != n:
            raise ValueError(f"constant index {idx!r} needs {n} entries")
        if any(not 0 <= k <= o.m - 1 for k in key):
            raise ValueError(f"constant index {idx!r} outside 0..m-1 with m={o.m}")
        norm[key] = norm.get(key, 0.0) + float(c)

    raw = []
    frac_part = o.alpha - o.m  # in (-1, 0) for non-integer order, else 0
    for key, c in norm.items():
        if c == 0.0:
            continue
        factors = {}
        for i, k in enumerate(key):
            if o.is_integer:
                if k:
                    factors[i] = (float(k), False)
            else:
                factors[i] = (k + frac_part, True)
        raw.append((c, factors))
    correction = GenPoly.build(raw, n)
    return StationarySurface(v - correction, o, norm)


@dataclass(frozen=True, eq=False)
class ScalarGrid:
    """Phi sampled on a box; mask marks samples outside Phi's domain."""

    box: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]
    values: np.ndarray
    mask: np.ndarray

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.linspace(lo, hi, r) for (lo, hi), r in zip(self.box, self.resolution)
        )


def _normalize_box(box, ndim: int) -> tuple[tuple[float, float], ...]:
    box = list(box)
    if len(box) == 2 and np.isscalar(box[0]):
        box = [tuple(box)] * ndim
    if len(box) != ndim:
        raise ValueError(f"box needs {ndim} (min,max) pairs")
    out = []
    for lo, hi in box:
        lo, hi = float(lo), float(hi)
        if not lo < hi:
            raise ValueError(f"degenerate box axis ({lo}, {hi})")
        out.append((lo, hi))
    return tuple(out)


def sample_grid(
    s: "StationarySurface | GenPoly",
    box,
    resolution,
    chunk: int = 8_000_000,
) -> ScalarGrid:
    """Sample Phi on a dense grid.  Domain errors become mask entries.

    Evaluation is chunked along the first axis so large grids stay
    within memory; results do not depend on the chunk size.
    """
    phi = s.phi if isinstance(s, StationarySurface) else s
    n = phi.nvars
    box = _normalize_box(box, n)
    if np.isscalar(resolution):
        resolution = (int(resolution),) * n
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != n or any(r < 2 for r in resolution):
        raise ValueError("resolution must give >= 2 samples per axis")

    axes = [np.linspace(lo, hi, r) for (lo, hi), r in zip(box, resolution)]
    values = np.empty(resolution, dtype=np.float64)
    mask = np.empty(resolution, dtype=bool)
    per_slab = int(np.prod(resolution[1:], dtype=np.int64)) if n > 1 else 1
    step = max(1, chunk // max(per_slab, 1))
    for start in range(0, resolution[0], step):
        stop = min(start + step, resolution[0])
        coords = []
        for d, ax in enumerate(axes):
            shape = [1] * n
            a = ax[start:stop] if d == 0 else ax
            shape[d] = a.size
            coords.append(a.reshape(shape))
        vals, bad = eval_poly_array(phi, coords)
        values[start:stop] = vals
        mask[start:stop] = bad
    return ScalarGrid(box, resolution, values, mask)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulated isosurface: vertices (k,3) and faces (t,3), 0-based."""

    vertices: np.ndarray
    triangles: np.ndarray

    @classmethod
    def empty(cls) -> "Mesh":
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0


def extract_isosurface(g: ScalarGrid) -> Mesh:
    """Marching-cubes triangulation of Phi = 0.

    Cells touching masked samples are skipped.  A grid that never
    crosses zero yields an empty mesh.  Degenerate triangles (area at
    or below 1e-12) are dropped.
    """
    if len(g.resolution) != 3:
        raise ValueError("isosurface extraction needs a 3-D grid")
    vol = g.values
    masked = g.mask.any()
    if masked:
        # park masked samples far from the level; spurious crossings
        # against them are confined to cells touching the mask and are
        # dropped below
        fill = 1.0 + float(np.nanmax(np.abs(vol[~g.mask]))) if (~g.mask).any() else 1.0
        vol = np.where(g.mask, fill, vol)
    spacing = tuple(
        (hi - lo) / (r - 1) for (lo, hi), r in zip(g.box, g.resolution)
    )
    try:
        verts, faces, _, _ = measure.marching_cubes(vol, level=0.0, spacing=spacing)
    except (ValueError, RuntimeError):
        return Mesh.empty()
    lows = np.array([lo for lo, _ in g.box])
    verts = verts + lows

    finite = np.isfinite(verts).all(axis=1)
    keep_face = finite[faces].all(axis=1)
    a = verts[faces[:, 1]] - verts[faces[:, 0]]
    b = verts[faces[:, 2]] - verts[faces[:, 0]]
    area2 = np.linalg.norm(np.cross(a, b), axis=1)
    keep_face &= area2 > 2.0 * 1e-12

    if masked:
        # a triangle lives inside one grid cell; reject it when any of
        # that cell's corners is masked
        cell_bad = np.zeros(tuple(r - 1 for r in g.resolution), dtype=bool)
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    cell_bad |= g.mask[
                        dx : dx + cell_bad.shape[0],
                        dy : dy + cell_bad.shape[1],
                        dz : dz + cell_bad.shape[2],
                    ]
        safe = np.where(keep_face)[0]
        cent = verts[faces[safe]].mean(axis=1)
        idx = np.floor((cent - lows) / np.array(spacing)).astype(np.int64)
        idx = np.clip(idx, 0, np.array(cell_bad.shape) - 1)
        bad = cell_bad[idx[:, 0], idx[:, 1], idx[:, 2]]
        keep_face[safe[bad]] = False

    keep = faces[keep_face].astype(np.int64)
    if len(keep) == 0:
        return Mesh.empty()
    return Mesh(verts, keep)


@dataclass(frozen=True)
class RegionReport:
    """Census of sign-uniform connected components of the complement."""

    component_count: int
    component_sizes: tuple[int, ...]
    resolution: tuple[int, ...]
    positive_count: int
    negative_count: int


def count_regions(g: ScalarGrid) -> RegionReport:
    """6-connectivity flood fill over unmasked voxels, split by sign of
    Phi; |Phi| <= 1e-12 counts as surface and joins no component."""
    vals = g.values
    defined = ~g.mask & np.isfinite(vals)
    sizes: list[int] = []
    counts = []
    for sel in ((vals > SURFACE_TOL) & defined, (vals < -SURFACE_TOL) & defined):
        labels, num = ndimage.label(sel)
        counts.append(num)
        if num:
            part = np.bincount(labels.ravel())[1:]
            sizes.extend(sorted((int(s) for s in part), reverse=True))
    return RegionReport(
        component_count=counts[0] + counts[1],
        component_sizes=tuple(sizes),
        resolution=g.resolution,
        positive_count=counts[0],
        negative_count=counts[1],
    )


CATALOG_NAMES = ("lorenz", "rossler", "example1", "example2", "fracosc")

#: documented census defaults: box per axis and grid resolution
DEFAULT_CENSUS_GRID = {
    "lorenz": (((-50.0, 50.0),) * 3, (201, 201, 201)),
    "rossler": (((-30.0, 30.0),) * 3, (201, 201, 201)),
}


def catalog(
    name: str,
    alpha: float | None = None,
    params: Mapping[str, float] | None = None,
) -> SystemSpec:
    """Built-in systems with their default parameters.

    lorenz    sigma=10, b=8/3, r=470/19; alpha defaults to 2
    rossler   c=1; alpha defaults to 2
    example1  a=1, b=1, k=alpha, c=Gamma(1-alpha)/Gamma(2-alpha)
              (alpha defaults to 0.5; pass params={"c": ...} to override)
    example2  a=b=c=1, n=m=3, k=2, l=3; alpha defaults to 2
    fracosc   a=1, b=1 oscillator H = a p^2 + b q^2; alpha defaults to 1
    """
    over = dict(params or {})
    if name == "lorenz":
        p = {"sigma": 10.0, "b": 8.0 / 3.0, "r": 470.0 / 19.0, **over}
        names = ("x", "y", "z")
        rhs = tuple(
            parse_expression(src, names, p)
            for src in ("sigma*(y-x)", "(r-z)*x - y", "x*y - b*z")
        )
        return SystemSpec(names, p, FracOrder(2.0 if alpha is None else alpha), rhs)

    if name == "rossler":
        p = {"c": 1.0, **over}
        names = ("x", "y", "z")
        rhs = tuple(
            parse_expression(src, names, p)
            for src in ("-(y+z)", "x + 0.2*y", "0.2 + (x-c)*z")
        )
        return SystemSpec(names, p, FracOrder(2.0 if alpha is None else alpha), rhs)

    if name == "example1":
        a = 0.5 if alpha is None else float(alpha)
        o = FracOrder(a)
        if o.is_integer:
            raise ValueError("example1 needs a non-integer alpha in (0, 1)")
        k = o.alpha
        p = {"a": 1.0, "b": 1.0, **over}
        p.setdefault("c", gamma(1.0 - k) / gamma(2.0 - k))
        fx = GenPoly.monomial(p["a"] * p["c"], {0: 1.0 - k}, 2) + GenPoly.monomial(
            p["b"], {0: -k}, 2
        )
        fy = GenPoly.monomial(p["a"], {0: 1.0, 1: -k}, 2) + GenPoly.monomial(
            p["b"], {1: -k}, 2
        )
        return SystemSpec(("x", "y"), p, o, (fx, fy))

    if name == "example2":
        p = {"a": 1.0, "b": 1.0, "c": 1.0, "n": 3.0, "m": 3.0, "k": 2.0, "l": 3.0, **over}
        a, b, c, en, em, ek, el = (p[s] for s in "abcnmkl")
        fx = GenPoly.monomial(a * en * (en - 1), {0: en - 2}, 2) + GenPoly.monomial(
            c * ek * (ek - 1), {0: ek - 2, 1: el}, 2
        )
        fy = GenPoly.monomial(b * em * (em - 1), {1: em - 2}, 2) + GenPoly.monomial(
            c * el * (el - 1), {0: ek, 1: el - 2}, 2
        )
        return SystemSpec(("x", "y"), p, FracOrder(2.0 if alpha is None else alpha), (fx, fy))

    if name == "fracosc":
        p = {"a": 1.0, "b": 1.0, **over}
        o = FracOrder(1.0 if alpha is None else alpha)
        h = GenPoly.monomial(p["a"], {1: 2.0}, 2) + GenPoly.monomial(p["b"], {0: 2.0}, 2)
        rhs = (frac_deriv(h, 1, o), -frac_deriv(h, 0, o))
        return SystemSpec(("q", "p"), p, o, rhs, phase_split=True)

    raise ValueError(f"unknown system {name!r}; known: {', '.join(CATALOG_NAMES)}")
