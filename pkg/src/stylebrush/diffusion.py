"""Similarity-guided anisotropic diffusion on the pixel grid.

The penetration field P evolves by an implicit backward-difference step of
the conservative 5-point scheme with zero-flux (Neumann) boundaries and a
diffusion coefficient derived from the similarity map. Grid spacing is one
pixel, so coefficients behave identically across image sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import (
    InteractionMask,
    Params,
    PenetrationMap,
    FACE_INTERP_MODES,
    field_values,
)
from .errors import SolverError

RUNNING = "running"
AUTO_STOPPED = "auto-stopped"
MANUALLY_STOPPED = "manually-stopped"
STEP_CAPPED = "step-capped"

# Hull tolerances for the implicit step: a solve whose output strays from
# [min rhs, max rhs] by more than _REFINE_SLACK is re-solved at tighter
# tolerance; _HARD_SLACK violations after refinement are a solver failure.
_REFINE_SLACK = 1e-13
_HARD_SLACK = 1e-12
_REFINE_TOLERANCES = (1e-11, 1e-13, 1e-15)


@dataclass(frozen=True)
class DiffusionField:
    """Cell-centered diffusion coefficients with staggered face values.

    face_v[i, j] sits between cells (i, j) and (i+1, j); face_h[i, j]
    between (i, j) and (i, j+1). Faces hold the min (default) of the two
    adjacent cell values.
    """

    cells: np.ndarray  # (H, W), > 0
    face_v: np.ndarray  # (H-1, W)
    face_h: np.ndarray  # (H, W-1)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]


def diffusion_coefficients(similarity, v: float, r: float,
                           face_interp: str = "min") -> DiffusionField:
    """Map similarity G to coefficients D = v * exp(-r * (1 - G))."""
    g = field_values(similarity)
    if g.ndim != 2:
        raise ValueError(f"similarity must be 2-D, got shape {g.shape}")
    if not np.isfinite(g).all():
        raise ValueError("similarity values must be finite")
    if g.min() < 0.0 or g.max() > 1.0:
        raise ValueError("similarity values must lie in [0, 1]")
    if not v > 0:
        raise ValueError("v must be positive")
    if not r >= 0:
        raise ValueError("r must be non-negative")
    if face_interp not in FACE_INTERP_MODES:
        raise ValueError(f"face_interp must be one of {FACE_INTERP_MODES}")

    cells = v * np.exp(-r * (1.0 - g))
    if face_interp == "min":
        face_v = np.minimum(cells[:-1, :], cells[1:, :])
        face_h = np.minimum(cells[:, :-1], cells[:, 1:])
    elif face_interp == "max":
        face_v = np.maximum(cells[:-1, :], cells[1:, :])
        face_h = np.maximum(cells[:, :-1], cells[:, 1:])
    else:
        face_v = 0.5 * (cells[:-1, :] + cells[1:, :])
        face_h = 0.5 * (cells[:, :-1] + cells[:, 1:])
    return DiffusionField(cells=cells, face_v=face_v, face_h=face_h)


@dataclass(frozen=True)
class StencilSystem:
    """The implicit-step operator A = I - dt * div(D grad), matrix-free.

    Face weights already include dt. Each face weight is stored once and
    shared by its two cells, so the operator is symmetric by construction;
    zero-flux boundaries arise from simply having no outward faces.
    """

    wv: np.ndarray  # (H-1, W): dt * D on vertical-neighbor faces
    wh: np.ndarray  # (H, W-1): dt * D on horizontal-neighbor faces
    height: int
    width: int

    def apply(self, x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """Compute A @ x. Uniform fields are preserved exactly because the
        flux differences vanish before any rounding can occur."""
        if out is None:
            out = x.copy()
        else:
            np.copyto(out, x)
        fv = self.wv * (x[1:, :] - x[:-1, :])
        fh = self.wh * (x[:, 1:] - x[:, :-1])
        out[:-1, :] -= fv
        out[1:, :] += fv
        out[:, :-1] -= fh
        out[:, 1:] += fh
        return out

    def diagonal(self) -> np.ndarray:
        d = np.ones((self.height, self.width))
        d[:-1, :] += self.wv
        d[1:, :] += self.wv
        d[:, :-1] += self.wh
        d[:, 1:] += self.wh
        return d

    def to_dense(self) -> np.ndarray:
        """Dense (H*W, H*W) form in row-major cell order, for small grids."""
        h, w = self.height, self.width
        n = h * w
        a = np.zeros((n, n))
        a[np.arange(n), np.arange(n)] = self.diagonal().ravel()
        for i in range(h - 1):
            for j in range(w):
                p, q = i * w + j, (i + 1) * w + j
                a[p, q] = a[q, p] = -self.wv[i, j]
        for i in range(h):
            for j in range(w - 1):
                p, q = i * w + j, i * w + j + 1
                a[p, q] = a[q, p] = -self.wh[i, j]
        return a


def assemble_system(field: DiffusionField, dt: float) -> StencilSystem:
    if not dt > 0:
        raise ValueError("dt must be positive")
    return StencilSystem(
        wv=dt * field.face_v,
        wh=dt * field.face_h,
        height=field.height,
        width=field.width,
    )


def cg_solve(system: StencilSystem, rhs, tol: float = 1e-8,
             max_iters: int | None = None,
             x0: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """Plain conjugate gradients on the SPD stencil system.

    Returns (solution, iterations). The relative residual on return is
    ||b - A x|| / ||b|| <= tol. The default initial guess is the rhs
    itself, which keeps every iterate's total mass equal to the rhs mass
    in exact arithmetic (the residual is then orthogonal to the constant
    vector, and A maps constants to constants).
    """
    b = np.asarray(rhs, dtype=np.float64)
    if b.shape != (system.height, system.width):
        raise ValueError(
            f"rhs shape {b.shape} does not match system "
            f"{(system.height, system.width)}"
        )
    if max_iters is None:
        max_iters = 10 * (system.height + system.width)
    bnorm = math.sqrt(float(np.dot(b.ravel(), b.ravel())))
    if bnorm == 0.0:
        return np.zeros_like(b), 0

    x = b.copy() if x0 is None else np.array(x0, dtype=np.float64)
    ap = np.empty_like(b)
    r = b - system.apply(x, out=ap)
    rs = float(np.dot(r.ravel(), r.ravel()))
    if math.sqrt(rs) <= tol * bnorm:
        return x, 0
    p = r.copy()
    for k in range(1, max_iters + 1):
        system.apply(p, out=ap)
        denom = float(np.dot(p.ravel(), ap.ravel()))
        if denom <= 0.0:
            raise SolverError(
                "conjugate gradients hit a non-positive curvature direction",
                residual=math.sqrt(rs) / bnorm,
                iterations=k,
            )
        alpha = rs / denom
        x += alpha * p
        r -= alpha * ap
        rs_new = float(np.dot(r.ravel(), r.ravel()))
        if math.sqrt(rs_new) <= tol * bnorm:
            return x, k
        p *= rs_new / rs
        p += r
        rs = rs_new
    raise SolverError(
        f"conjugate gradients did not converge in {max_iters} iterations",
        residual=math.sqrt(rs) / bnorm,
        iterations=max_iters,
    )


def _advance(p: np.ndarray, system: StencilSystem, tol: float,
             max_iters: int | None) -> tuple[np.ndarray, int]:
    """One implicit step with a discrete maximum-principle guarantee.

    The exact solution of A x = b lies within [min b, max b]; if the CG
    output strays further than _REFINE_SLACK the solve is repeated at
    tighter tolerances (warm-started), and a residual violation beyond
    _HARD_SLACK is reported as a solver failure rather than clamped.
    """
    lo = float(p.min())
    hi = float(p.max())
    x, iters = cg_solve(system, p, tol=tol, max_iters=max_iters)
    for tighter in _REFINE_TOLERANCES:
        if x.min() >= lo - _REFINE_SLACK and x.max() <= hi + _REFINE_SLACK:
            break
        if tighter >= tol:
            continue
        x, extra = cg_solve(system, p, tol=tighter, max_iters=max_iters, x0=x)
        iters += extra
        tol = tighter
    if x.min() < lo - _HARD_SLACK or x.max() > hi + _HARD_SLACK:
        raise SolverError(
            "implicit step violated the discrete maximum principle "
            f"(range [{x.min():.3e}, {x.max():.3e}] vs [{lo:.3e}, {hi:.3e}])",
            residual=max(lo - float(x.min()), float(x.max()) - hi),
            iterations=iters,
        )
    return x, iters


def step(p, field: DiffusionField, dt: float, tol: float = 1e-8,
         max_iters: int | None = None) -> tuple[np.ndarray, int]:
    """Advance P by one implicit step; returns (P_next, cg_iterations)."""
    pa = field_values(p)
    if pa.shape != (field.height, field.width):
        raise ValueError(
            f"P shape {pa.shape} does not match field "
            f"{(field.height, field.width)}"
        )
    system = assemble_system(field, dt)
    return _advance(pa, system, tol, max_iters)


def init_penetration(interaction: InteractionMask) -> PenetrationMap:
    """Initial concentration: 1 on interaction pixels, 0 elsewhere."""
    return PenetrationMap(interaction.to_field())


@dataclass(frozen=True)
class RunFrame:
    """One emitted state of a diffusion run. A non-running state marks the
    final frame; a manual stop that lands between steps repeats the last
    concentration (step stays at the last executed step), and a manual stop
    that was already set before the first step reports step 0."""

    p: np.ndarray
    step: int
    rate: float
    cg_iterations: int
    state: str

    @property
    def terminal(self) -> bool:
        return self.state != RUNNING


def normalize_penetration(p: np.ndarray) -> PenetrationMap:
    """Rescale a terminal concentration by its maximum for use as an action
    scope; rounding-level excursions are snapped back into [0, 1]."""
    m = float(p.max())
    if m > 0.0:
        out = np.clip(p / m, 0.0, 1.0)
    else:
        out = np.clip(p, 0.0, 1.0)
    return PenetrationMap(out)


def run(interaction: InteractionMask, similarity, params: Params,
        mode: str = "auto", stop_signal=None) -> Iterator[RunFrame]:
    """Iterate implicit steps, yielding one RunFrame per step.

    Auto mode stops when the change rate sum|P_next - P| / sum P drops to
    params.epsilon or the step cap is hit. Manual mode stops when the stop
    signal is set (checked before each step) or at the cap; a signal
    already set before the first step aborts with a step-0 frame.
    """
    if mode not in ("auto", "manual"):
        raise ValueError(f"mode must be 'auto' or 'manual', got {mode!r}")
    g = field_values(similarity)
    if g.shape != interaction.mask.shape:
        raise ValueError("similarity and interaction extents differ")
    field = diffusion_coefficients(g, params.v, params.r, params.face_interp)
    system = assemble_system(field, params.dt)
    p = interaction.to_field()
    last_rate = math.inf
    for n in range(1, params.max_steps + 1):
        if stop_signal is not None and stop_signal.is_set():
            if n == 1:
                yield RunFrame(p=p.copy(), step=0, rate=math.inf,
                               cg_iterations=0, state=MANUALLY_STOPPED)
            else:
                yield RunFrame(p=p.copy(), step=n - 1, rate=last_rate,
                               cg_iterations=0, state=MANUALLY_STOPPED)
            return
        total = float(p.sum())
        p_next, iters = _advance(p, system, params.cg_tolerance,
                                 params.cg_max_iters)
        rate = float(np.abs(p_next - p).sum()) / total
        p = p_next
        last_rate = rate
        if mode == "auto" and rate <= params.epsilon:
            state = AUTO_STOPPED
        elif n == params.max_steps:
            state = STEP_CAPPED
        else:
            state = RUNNING
        yield RunFrame(p=p.copy(), step=n, rate=rate,
                       cg_iterations=iters, state=state)
        if state != RUNNING:
            return
