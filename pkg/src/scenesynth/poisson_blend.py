"""Seamless cloning by solving a discrete Poisson equation over a mask.

For every unknown pixel p in the pasted region Omega::

    4 f_p - sum_{q in N_p, q in Omega} f_q
        = sum_{q in N_p, q not in Omega} t_q + sum_{q in N_p} (g_p - g_q)

where t is the target image and g the source. Only the source's own
gradients drive the interior (no gradient mixing). Mask pixels that sit on
the raster edge have a neighbor off-image; they are copied verbatim instead
of joining Omega.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from scenesynth.errors import DimensionError, SolverError

log = logging.getLogger(__name__)

_NEIGHBORS = ((-1, 0), (1, 0), (0, -1), (0, 1))


class BlendMethod(str, enum.Enum):
    POISSON = "poisson"
    DIRECT = "direct"


@dataclass(frozen=True)
class SolverParams:
    rel_tol: float = 1e-6
    max_iters: int | None = None
    iter_cap: int = 10_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")

    def iterations_for(self, n_unknowns: int) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return max(1, min(10 * n_unknowns, self.iter_cap))


@dataclass(eq=False)
class BlendProblem:
    """Sparse system for one paste.

    ``omega`` and ``direct`` hold target (y, x) coordinates. ``index_of`` is
    patch-local: the unknown number of each patch pixel, -1 if not unknown.
    ``boundary`` lists one ``(unknown, y, x)`` row per boundary term, so a
    boundary pixel adjacent to two unknowns appears twice.
    """

    omega: np.ndarray
    index_of: np.ndarray
    offset: tuple[int, int]
    matrix: sp.csr_matrix
    rhs: np.ndarray
    boundary: np.ndarray
    direct: np.ndarray
    initial: np.ndarray

    @property
    def n_unknowns(self) -> int:
        return len(self.omega)


def _check_placement(target_shape, mask_shape, offset):
    H, W = target_shape[:2]
    h, w = mask_shape
    x0, y0 = offset
    if x0 < 0 or y0 < 0 or x0 + w > W or y0 + h > H:
        raise DimensionError(f"{w}x{h} patch at ({x0}, {y0}) exceeds {W}x{H} target")


def assemble(target: np.ndarray, source: np.ndarray, mask: np.ndarray,
             offset: tuple[int, int] = (0, 0)) -> BlendProblem:
    """Build the Poisson system for pasting ``source`` (masked) at ``offset``.

    ``source`` and ``mask`` share shape (h, w); ``offset`` is the (x, y) of the
    patch's top-left corner in the target. Source values just outside the
    patch are unknown, so the target stands in for them there.
    """
    mask = np.asarray(mask, dtype=bool)
    if source.shape[:2] != mask.shape:
        raise DimensionError(f"source {source.shape[:2]} and mask {mask.shape} differ")
    if not mask.any():
        raise ValueError("empty mask: nothing to blend")
    _check_placement(target.shape, mask.shape, offset)
    H, W = target.shape[:2]
    h, w = mask.shape
    x0, y0 = offset
    C = target.shape[2] if target.ndim == 3 else 1
    tgt = target.reshape(H, W, C).astype(np.float64)

    # padded source window: target values around the patch, patch values inside
    win = np.zeros((h + 2, w + 2, C))
    ya, yb = max(y0 - 1, 0), min(y0 + h + 1, H)
    xa, xb = max(x0 - 1, 0), min(x0 + w + 1, W)
    win[ya - y0 + 1:yb - y0 + 1, xa - x0 + 1:xb - x0 + 1] = tgt[ya:yb, xa:xb]
    win[1:h + 1, 1:w + 1] = source.reshape(h, w, C)

    ys, xs = np.nonzero(mask)
    ty, tx = ys + y0, xs + x0
    inner = (ty > 0) & (ty < H - 1) & (tx > 0) & (tx < W - 1)
    ly, lx = ys[inner], xs[inner]
    n = len(ly)

    index_pad = np.full((h + 2, w + 2), -1, dtype=np.int64)
    index_pad[ly + 1, lx + 1] = np.arange(n)

    rows, cols = [np.arange(n)], [np.arange(n)]
    vals = [np.full(n, 4.0)]
    rhs = np.zeros((n, C))
    bnd = []
    g_p = win[ly + 1, lx + 1]
    for dy, dx in _NEIGHBORS:
        qy, qx = ly + 1 + dy, lx + 1 + dx
        q_idx = index_pad[qy, qx]
        rhs += g_p - win[qy, qx]
        inside = q_idx >= 0
        rows.append(np.flatnonzero(inside))
        cols.append(q_idx[inside])
        vals.append(np.full(int(inside.sum()), -1.0))
        out = np.flatnonzero(~inside)
        by, bx = qy[out] - 1 + y0, qx[out] - 1 + x0
        rhs[out] += tgt[by, bx]
        bnd.append(np.stack([out, by, bx], axis=1))

    matrix = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return BlendProblem(
        omega=np.stack([ly + y0, lx + x0], axis=1),
        index_of=index_pad[1:h + 1, 1:w + 1].copy(),
        offset=(x0, y0),
        matrix=matrix,
        rhs=rhs,
        boundary=np.concatenate(bnd) if bnd else np.zeros((0, 3), dtype=np.int64),
        direct=np.stack([ys[~inner] + y0, xs[~inner] + x0], axis=1),
        initial=g_p.copy(),
    )


def conjugate_gradient(A, b: np.ndarray, x0: np.ndarray | None = None,
                       rel_tol: float = 1e-6, max_iters: int = 1000):
    """CG on an SPD matrix for one or more right-hand sides (columns of ``b``).

    Each column runs its own recurrence and stops once
    ``||b - A x|| <= rel_tol * ||b||``. Returns ``(x, rel_residuals, iters)``;
    raises SolverError if some column is still above tolerance at the cap.
    """
    b = np.asarray(b, dtype=np.float64)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64).reshape(b.shape)
    bnorm = np.linalg.norm(b, axis=0)
    x[:, bnorm == 0] = 0.0
    goal = rel_tol * bnorm

    it = 0
    while True:
        # (re)start from the true residual; the recursive one drifts
        r = b - A @ x
        rr = np.einsum("ij,ij->j", r, r)
        done = np.sqrt(rr) <= goal
        if done.all() or it >= max_iters:
            break
        p = r.copy()
        while not done.all() and it < max_iters:
            Ap = A @ p
            pAp = np.einsum("ij,ij->j", p, Ap)
            active = ~done & (pAp > 0)
            alpha = np.where(active, rr / np.where(active, pAp, 1.0), 0.0)
            x += alpha * p
            r -= alpha * Ap
            rr_new = np.einsum("ij,ij->j", r, r)
            beta = np.where(active, rr_new / np.where(rr > 0, rr, 1.0), 0.0)
            p = r + beta * p
            rr = rr_new
            done |= (np.sqrt(rr) <= goal) | ~active
            it += 1

    rel = np.linalg.norm(b - A @ x, axis=0) / np.where(bnorm > 0, bnorm, 1.0)
    if not (rel <= rel_tol).all():
        raise SolverError(
            f"CG stopped after {it} iterations at relative residual {rel.max():.3e} "
            f"(target {rel_tol:.1e})", residual=float(rel.max()), iterations=it)
    if squeeze:
        return x[:, 0], rel, it
    return x, rel, it


def solve_cg(problem: BlendProblem, params: SolverParams | None = None) -> np.ndarray:
    """Solve all channels; returns float values over Omega, shape (n, C), unrounded."""
    params = params or SolverParams()
    if problem.n_unknowns == 0:
        return np.zeros((0, problem.rhs.shape[1]))
    x, _, _ = conjugate_gradient(problem.matrix, problem.rhs, problem.initial,
                                 rel_tol=params.rel_tol,
                                 max_iters=params.iterations_for(problem.n_unknowns))
    return x


def round_half_away(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def to_uint8(values: np.ndarray) -> np.ndarray:
    return np.clip(round_half_away(values), 0, 255).astype(np.uint8)


def paste_direct(target: np.ndarray, source: np.ndarray, mask: np.ndarray,
                 offset: tuple[int, int]) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    _check_placement(target.shape, mask.shape, offset)
    x0, y0 = offset
    h, w = mask.shape
    out = target.copy()
    region = out[y0:y0 + h, x0:x0 + w]
    region[mask] = source[mask]
    return out


def blend(target: np.ndarray, source: np.ndarray, mask: np.ndarray, offset: tuple[int, int] = (0, 0),
          method: BlendMethod | str = BlendMethod.POISSON,
          params: SolverParams | None = None) -> tuple[np.ndarray, bool]:
    """Paste ``source`` into ``target`` under ``mask``.

    Returns ``(image, fell_back)``; ``fell_back`` is True when the Poisson
    solve failed to converge and a direct copy was used instead. Pixels
    outside the mask are never modified.
    """
    method = BlendMethod(method)
    if method is BlendMethod.DIRECT:
        return paste_direct(target, source, mask, offset), False

    problem = assemble(target, source, mask, offset)
    try:
        values = solve_cg(problem, params)
    except SolverError as exc:
        log.warning("Poisson solve failed (%s); falling back to direct paste", exc)
        return paste_direct(target, source, mask, offset), True

    out = paste_direct(target, source, mask, offset)
    if problem.n_unknowns:
        solved = to_uint8(values).reshape(-1, *target.shape[2:]) if target.ndim == 3 \
            else to_uint8(values)[:, 0]
        out[problem.omega[:, 0], problem.omega[:, 1]] = solved
    return out, False
