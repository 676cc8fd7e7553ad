"""Levi-Civita connection, curvature, divergences and quadrature.

Curvature sign convention used throughout (pinned by a round-sphere
self-test in the test suite):

    R_{X,Y} = [nabla_Y, nabla_X] + nabla_{[X,Y]}

so in coordinates R_{d_i,d_j} d_k = R^l_{kij} d_l with

    R^l_{kij} = d_j Gamma^l_{ik} - d_i Gamma^l_{jk}
                + Gamma^l_{jm} Gamma^m_{ik} - Gamma^l_{im} Gamma^m_{jk}.

With this convention <R_{X,Y} X, Y> is the sectional curvature of the
plane (X, Y) for orthonormal X, Y (equal to +1 on the round unit sphere).

The affine connection of interest is nabla-bar = nabla + K where K is the
contorsion; its curvature differs from R by

    Rbar_{X,Y} = R_{X,Y} + (nabla_Y K)_X - (nabla_X K)_Y + [K_Y, K_X].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import NonPeriodicAxis, SingularMetric
from .geometry_core import (
    AdaptedFrame,
    Box,
    ChartAtlas,
    CoefficientField,
    JetConfig,
    adapted_frame,
    differentiate,
    fd_directional,
)

__all__ = [
    "ConnectionSample",
    "QuadratureGrid",
    "christoffel",
    "riemann",
    "riemann_lowered",
    "bar_riemann",
    "nabla_contorsion",
    "cov_deriv",
    "divergence",
    "divergence_tensor",
    "integrate",
    "metric_inverse",
    "connection_sample",
]

FieldLike = Union[CoefficientField, Callable[[np.ndarray], np.ndarray]]


def metric_inverse(g: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    det = np.linalg.det(g)
    if np.min(np.abs(det)) < tol:
        raise SingularMetric(f"|det g| = {np.min(np.abs(det)):.3e} below {tol}")
    return np.linalg.inv(g)


def _metric_d1(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig) -> np.ndarray:
    """dg[..., l, i, j] = d_l g_ij."""
    return np.stack(
        [differentiate(atlas.metric, x, l, cfg, atlas.box) for l in range(atlas.dim_total)],
        axis=-3,
    )


def _metric_d2(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig) -> np.ndarray:
    """ddg[..., k, l, i, j] = d_k d_l g_ij."""
    m = atlas.dim_total
    if cfg.mode == "analytic":
        rows = [
            np.stack([atlas.metric.derivative(l).derivative(k).eval(x) for l in range(m)], axis=-3)
            for k in range(m)
        ]
        return np.stack(rows, axis=-4)
    rows = []
    for k in range(m):
        h = cfg.step(atlas.box, k)
        rows.append(fd_directional(lambda y: _metric_d1(atlas, y, cfg), x, k, h, cfg.fd_order))
    return np.stack(rows, axis=-4)


def christoffel(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig()) -> np.ndarray:
    """Gamma[..., k, i, j] with nabla_{d_i} d_j = Gamma^k_ij d_k."""
    x = np.asarray(x, dtype=float)
    g = atlas.metric_at(atlas.box.wrap(x))
    ginv = metric_inverse(g)
    dg = _metric_d1(atlas, x, cfg)
    # 1/2 g^{kl} (d_i g_lj + d_j g_il - d_l g_ij)
    return 0.5 * (
        np.einsum("...kl,...ilj->...kij", ginv, dg)
        + np.einsum("...kl,...jil->...kij", ginv, dg)
        - np.einsum("...kl,...lij->...kij", ginv, dg)
    )


def _christoffel_d(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig) -> np.ndarray:
    """dGamma[..., l, k, i, j] = d_l Gamma^k_ij."""
    m = atlas.dim_total
    g = atlas.metric_at(atlas.box.wrap(x))
    ginv = metric_inverse(g)
    dg = _metric_d1(atlas, x, cfg)
    ddg = _metric_d2(atlas, x, cfg)
    dginv = -np.einsum("...ka,...lab,...bq->...lkq", ginv, dg, ginv)
    # bracket_{lij} = d_i g_lj + d_j g_il - d_l g_ij  (value index l)
    bracket = (
        np.einsum("...ilj->...lij", dg)
        + np.einsum("...jil->...lij", dg)
        - dg
    )
    dbracket = (
        np.einsum("...milj->...mlij", ddg)
        + np.einsum("...mjil->...mlij", ddg)
        - np.einsum("...mlij->...mlij", ddg)
    )
    return 0.5 * (
        np.einsum("...mkl,...lij->...mkij", dginv, bracket)
        + np.einsum("...kl,...mlij->...mkij", ginv, dbracket)
    )


def riemann(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig()) -> np.ndarray:
    """R[..., l, k, i, j]: value slot l, argument k, directions (i, j)."""
    Gam = christoffel(atlas, x, cfg)
    dGam = _christoffel_d(atlas, x, cfg)
    R = (
        np.einsum("...jlik->...lkij", dGam)
        - np.einsum("...iljk->...lkij", dGam)
        + np.einsum("...ljm,...mik->...lkij", Gam, Gam)
        - np.einsum("...lim,...mjk->...lkij", Gam, Gam)
    )
    return R


def riemann_lowered(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                    R: Optional[np.ndarray] = None) -> np.ndarray:
    """R_low[..., l, k, i, j] = <R_{d_i, d_j} d_k, d_l>."""
    if R is None:
        R = riemann(atlas, x, cfg)
    g = atlas.metric_at(atlas.box.wrap(np.asarray(x, dtype=float)))
    return np.einsum("...lq,...qkij->...lkij", g, R)


def nabla_contorsion(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                     Gam: Optional[np.ndarray] = None) -> np.ndarray:
    """(nabla K)[..., l, k, i, j] = (nabla_{d_l} K)^k_ij."""
    m = atlas.dim_total
    x = np.asarray(x, dtype=float)
    if Gam is None:
        Gam = christoffel(atlas, x, cfg)
    if atlas.contorsion is None:
        return np.zeros(x.shape[:-1] + (m, m, m, m))
    K = atlas.contorsion_at(atlas.box.wrap(x))
    dK = np.stack(
        [differentiate(atlas.contorsion, x, l, cfg, atlas.box) for l in range(m)], axis=-4
    )
    return (
        dK
        + np.einsum("...klm,...mij->...lkij", Gam, K)
        - np.einsum("...mli,...kmj->...lkij", Gam, K)
        - np.einsum("...mlj,...kim->...lkij", Gam, K)
    )


def bar_riemann(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig()) -> np.ndarray:
    """Curvature of nabla + K, same index layout as riemann()."""
    R = riemann(atlas, x, cfg)
    if atlas.contorsion is None:
        return R
    x = np.asarray(x, dtype=float)
    K = atlas.contorsion_at(atlas.box.wrap(x))
    nK = nabla_contorsion(atlas, x, cfg)
    return (
        R
        + np.einsum("...jlik->...lkij", nK)
        - np.einsum("...iljk->...lkij", nK)
        + np.einsum("...ljm,...mik->...lkij", K, K)
        - np.einsum("...lim,...mjk->...lkij", K, K)
    )


@dataclass
class ConnectionSample:
    """Christoffel symbols and curvature at one batch of points."""

    point: np.ndarray
    christoffel: np.ndarray
    curvature: np.ndarray


def connection_sample(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig()) -> ConnectionSample:
    return ConnectionSample(np.asarray(x, dtype=float), christoffel(atlas, x, cfg),
                            riemann(atlas, x, cfg))


# ---------------------------------------------------------------------------
# covariant derivatives of pointwise-evaluable tensors
# ---------------------------------------------------------------------------

def _partials(atlas: ChartAtlas, x: np.ndarray, comp: FieldLike, cfg: JetConfig) -> np.ndarray:
    """d[..., l, *shape]: coordinate partials of the component map."""
    m = atlas.dim_total
    if isinstance(comp, CoefficientField):
        return np.stack([differentiate(comp, x, l, cfg, atlas.box) for l in range(m)], axis=-1 - len(comp.shape))
    outs = []
    for l in range(m):
        h = cfg.step(atlas.box, l)
        outs.append(fd_directional(comp, x, l, h, cfg.fd_order))
    sample = outs[0]
    rank = sample.ndim - (np.asarray(x).ndim - 1)
    return np.stack(outs, axis=-1 - rank)


def cov_deriv(atlas: ChartAtlas, x: np.ndarray, comp: FieldLike, variance: str,
              cfg: JetConfig = JetConfig(), Gam: Optional[np.ndarray] = None) -> np.ndarray:
    """nabla of a tensor given by coordinate components.

    Returns shape (..., m, *comp_shape) with the derivative index first.
    ``variance`` is a string over {'u','d'} matching the component indices.
    """
    x = np.asarray(x, dtype=float)
    if Gam is None:
        Gam = christoffel(atlas, x, cfg)
    vals_rank = len(variance)
    d = _partials(atlas, x, comp, cfg)
    t = comp.eval(x) if isinstance(comp, CoefficientField) else comp(x)
    letters = "abcdefgh"[:vals_rank]
    out = d
    for slot, kind in enumerate(variance):
        idx = letters
        if kind == "u":
            # + Gamma^a_{l m} t^{... m ...}
            src = letters[:slot] + "m" + letters[slot + 1:]
            out = out + np.einsum(f"...{letters[slot]}lm,...{src}->...l{idx}", Gam, t)
        else:
            # - Gamma^m_{l a} t_{... m ...}
            src = letters[:slot] + "m" + letters[slot + 1:]
            out = out - np.einsum(f"...ml{letters[slot]},...{src}->...l{idx}", Gam, t)
    return out


# ---------------------------------------------------------------------------
# divergences
# ---------------------------------------------------------------------------

def _frame_projector(frame: AdaptedFrame, part: str) -> np.ndarray:
    """Pi^{lm} = sum_subset eps e^l e^m; 'full' gives the inverse metric."""
    if part == "top":
        return np.einsum("...a,...al,...am->...lm", frame.eps_top, frame.top, frame.top)
    if part == "perp":
        return np.einsum("...i,...il,...im->...lm", frame.eps_perp, frame.perp, frame.perp)
    if part == "full":
        e, eps = frame.vectors, frame.eps
        return np.einsum("...a,...al,...am->...lm", eps, e, e)
    raise ValueError(f"unknown part {part!r}")


def divergence(atlas: ChartAtlas, x: np.ndarray, X: FieldLike, part: str = "full",
               cfg: JetConfig = JetConfig(), frame: Optional[AdaptedFrame] = None) -> np.ndarray:
    """div X, or its tangent/orthogonal partial trace.

    div X = sum_lambda eps_lambda <nabla_{e_lambda} X, e_lambda>, restricted
    to the frame vectors of one distribution for part in {'top', 'perp'}.
    """
    x = np.asarray(x, dtype=float)
    nX = cov_deriv(atlas, x, X, "u", cfg)  # (..., l, k)
    if part == "full":
        return np.einsum("...ll->...", nX)
    if frame is None:
        frame = adapted_frame(atlas, x)
    Pi = _frame_projector(frame, part)
    g = frame.g
    return np.einsum("...lm,...mk,...lk->...", Pi, g, nX)


def divergence_tensor(atlas: ChartAtlas, x: np.ndarray, P: FieldLike, part: str = "full",
                      cfg: JetConfig = JetConfig(), frame: Optional[AdaptedFrame] = None) -> np.ndarray:
    """(div P)_ij for a (1,2)-tensor P^k_ij: trace of nabla P over value slot.

    (div P)_ij = sum_lambda eps_lambda <(nabla_{e_lambda} P)(d_i, d_j), e_lambda>.
    """
    x = np.asarray(x, dtype=float)
    nP = cov_deriv(atlas, x, P, "udd", cfg)  # (..., l, k, i, j)
    if part == "full":
        return np.einsum("...llij->...ij", nP)
    if frame is None:
        frame = adapted_frame(atlas, x)
    Pi = _frame_projector(frame, part)
    g = frame.g
    return np.einsum("...lm,...mk,...lkij->...ij", Pi, g, nP)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product trapezoid nodes on a fully periodic box.

    On periodic smooth data the trapezoid rule is spectrally accurate; 32
    nodes per axis integrates the trig-polynomial test data exactly.
    """

    nodes_per_axis: int = 32

    def points_and_weight(self, box: Box) -> tuple[np.ndarray, float]:
        if not all(box.periodic):
            raise NonPeriodicAxis("integration requires all axes periodic")
        N = self.nodes_per_axis
        axes = [np.linspace(lo, hi, N, endpoint=False) for lo, hi in zip(box.lows, box.highs)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([mm.reshape(-1) for mm in mesh], axis=-1)
        w = math.prod(wd / N for wd in box.widths)
        return pts, w


def integrate(atlas: ChartAtlas, f: FieldLike, grid: QuadratureGrid = QuadratureGrid(),
              chunk: int = 16384, with_volume_density: bool = True) -> float:
    """Integral of a scalar over the chart, against dvol_g = sqrt|det g| dx."""
    pts, w = grid.points_and_weight(atlas.box)
    total = 0.0
    for start in range(0, pts.shape[0], chunk):
        xs = pts[start:start + chunk]
        vals = f.eval(xs) if isinstance(f, CoefficientField) else f(xs)
        if with_volume_density:
            g = atlas.metric_at(xs)
            vals = vals * np.sqrt(np.abs(np.linalg.det(g)))
        total += float(np.sum(vals))
    return w * total
