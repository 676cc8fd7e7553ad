"""Charts, closed-form coefficient fields and adapted orthonormal frames.

Coordinates live in a rectangular box, periodic axis by axis.  Coefficient
fields (metric, distribution spanning vectors, contorsion) are closed-form
expression trees in the coordinates ``x1 .. xm``, so analytic jets are
available everywhere; an order-2/4 central finite-difference fallback covers
fields known only pointwise.

Everything is batched: coordinate arguments have shape ``(..., m)`` and all
results carry the leading batch axes through unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import sympy as sy

from .errors import (
    DegenerateDistribution,
    NonFinite,
    StepTooLarge,
)

__all__ = [
    "Box",
    "ChartAtlas",
    "CoefficientField",
    "JetConfig",
    "AdaptedFrame",
    "coordinates",
    "parse_scalar",
    "eval_field",
    "differentiate",
    "adapted_frame",
    "frame_field",
    "split",
]


# ---------------------------------------------------------------------------
# symbols and expression parsing
# ---------------------------------------------------------------------------

def coordinates(m: int) -> tuple[sy.Symbol, ...]:
    """The coordinate symbols x1..xm."""
    return sy.symbols(f"x1:{m + 1}", real=True)


_ALLOWED_FUNCS = {
    "sin": sy.sin,
    "cos": sy.cos,
    "tan": sy.tan,
    "exp": sy.exp,
    "log": sy.log,
    "sqrt": sy.sqrt,
    "sinh": sy.sinh,
    "cosh": sy.cosh,
    "tanh": sy.tanh,
    "pi": sy.pi,
}


def parse_scalar(text, m: int) -> sy.Expr:
    """Parse one closed-form coefficient expression in x1..xm.

    Only elementary functions are allowed; unknown symbols are rejected so a
    typo in a config file fails loudly instead of evaluating to garbage.
    """
    xs = coordinates(m)
    local = dict(_ALLOWED_FUNCS)
    local.update({s.name: s for s in xs})
    try:
        expr = sy.sympify(text, locals=local)
    except (sy.SympifyError, SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot parse coefficient expression {text!r}: {exc}") from None
    extra = expr.free_symbols - set(xs)
    if extra:
        raise ValueError(f"unknown symbols {sorted(map(str, extra))} in {text!r}")
    return expr


# ---------------------------------------------------------------------------
# coefficient fields
# ---------------------------------------------------------------------------

class CoefficientField:
    """A dense array of closed-form component expressions in x1..xm.

    ``variance`` is a string over {'u','d'} giving the tensor index types,
    e.g. ``"dd"`` for a metric, ``"udd"`` for connection-like coefficients,
    ``"u"`` for a vector field, ``""`` for a scalar.
    """

    def __init__(self, exprs, dim: int, variance: str = ""):
        arr = np.empty(np.shape(exprs) or (), dtype=object)
        flat_in = np.asarray(exprs, dtype=object).reshape(-1)
        flat = arr.reshape(-1)
        # pin strings to the canonical real coordinate symbols, otherwise
        # sympify would mint its own x1..xm and jets would vanish silently
        subs = {s.name: s for s in coordinates(dim)}
        for k, e in enumerate(flat_in):
            e = sy.sympify(e, locals=subs) if isinstance(e, str) else sy.sympify(e)
            ren = {s: subs[s.name] for s in e.free_symbols if s.name in subs}
            flat[k] = e.xreplace(ren) if ren else e
        self.exprs = arr
        self.dim = dim
        self.variance = variance
        if variance and len(variance) != arr.ndim:
            raise ValueError("variance length does not match component shape")
        self._lambdas: Optional[list] = None
        self._jets: dict[int, "CoefficientField"] = {}

    @property
    def shape(self) -> tuple[int, ...]:
        return self.exprs.shape

    def _compiled(self):
        if self._lambdas is None:
            xs = coordinates(self.dim)
            self._lambdas = [sy.lambdify(xs, e, "numpy") for e in self.exprs.reshape(-1)]
        return self._lambdas

    def eval(self, x: np.ndarray) -> np.ndarray:
        """Components at x, shape x.shape[:-1] + self.shape."""
        x = np.asarray(x, dtype=float)
        cols = [x[..., k] for k in range(self.dim)]
        base = x.shape[:-1]
        out = np.empty(base + self.shape, dtype=float)
        flat = out.reshape(base + (-1,)) if self.shape else out[..., None]
        for k, f in enumerate(self._compiled()):
            flat[..., k] = np.broadcast_to(f(*cols), base)
        return out

    def derivative(self, axis: int) -> "CoefficientField":
        """Analytic jet: componentwise d/dx_axis (cached)."""
        if axis not in self._jets:
            xs = coordinates(self.dim)
            d = np.empty(self.shape, dtype=object)
            df = d.reshape(-1)
            for k, e in enumerate(self.exprs.reshape(-1)):
                df[k] = sy.diff(e, xs[axis])
            self._jets[axis] = CoefficientField(d, self.dim, self.variance)
        return self._jets[axis]

    def __add__(self, other: "CoefficientField") -> "CoefficientField":
        if self.shape != other.shape or self.dim != other.dim:
            raise ValueError("field shapes differ")
        return CoefficientField(self.exprs + other.exprs, self.dim, self.variance)

    def scaled(self, c) -> "CoefficientField":
        return CoefficientField(self.exprs * sy.sympify(c), self.dim, self.variance)

    @classmethod
    def zeros(cls, shape: tuple[int, ...], dim: int, variance: str = "") -> "CoefficientField":
        return cls(np.full(shape, sy.Integer(0), dtype=object), dim, variance)


# ---------------------------------------------------------------------------
# boxes and charts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """A coordinate box, periodic axis by axis."""

    lows: tuple[float, ...]
    highs: tuple[float, ...]
    periodic: tuple[bool, ...]

    def __post_init__(self):
        if not (len(self.lows) == len(self.highs) == len(self.periodic)):
            raise ValueError("box axis lists must have equal lengths")
        if any(h <= l for l, h in zip(self.lows, self.highs)):
            raise ValueError("box has empty axis")

    @property
    def dim(self) -> int:
        return len(self.lows)

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(h - l for l, h in zip(self.lows, self.highs))

    @classmethod
    def torus(cls, m: int, width: float = 2 * math.pi) -> "Box":
        return cls((0.0,) * m, (width,) * m, (True,) * m)

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Map periodic coordinates back into the box; others untouched."""
        x = np.array(x, dtype=float, copy=True)
        for k in range(self.dim):
            if self.periodic[k]:
                w = self.highs[k] - self.lows[k]
                x[..., k] = self.lows[k] + np.mod(x[..., k] - self.lows[k], w)
        return x

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ok = np.ones(x.shape[:-1], dtype=bool)
        for k in range(self.dim):
            if not self.periodic[k]:
                ok &= (x[..., k] >= self.lows[k]) & (x[..., k] <= self.highs[k])
        return ok


@dataclass(frozen=True)
class JetConfig:
    """How to take coordinate derivatives of coefficient fields.

    ``fd_step = None`` means the default 1e-3 x (box width of the axis).
    """

    fd_step: Optional[float] = None
    fd_order: int = 4
    mode: str = "analytic"  # "analytic" (jet if available) or "fd"

    def __post_init__(self):
        if self.fd_step is not None and self.fd_step <= 0:
            raise ValueError("fd_step must be positive")
        if self.fd_order not in (2, 4):
            raise ValueError("fd_order must be 2 or 4")
        if self.mode not in ("analytic", "fd"):
            raise ValueError("mode must be 'analytic' or 'fd'")

    def step(self, box: Optional[Box], axis: int) -> float:
        if self.fd_step is not None:
            return self.fd_step
        if box is None:
            return 1e-3 * 2 * math.pi
        return 1e-3 * box.widths[axis]


@dataclass(frozen=True)
class ChartAtlas:
    """One periodic chart carrying all coefficient fields.

    * ``metric``: g_ij, shape (m, m), variance "dd".
    * ``distribution``: n spanning vector fields of the tangent
      distribution, each shape (m,), variance "u".
    * ``contorsion``: K[k, i, j] = (T_{d_i} d_j)^k, shape (m, m, m),
      variance "udd"; None means the Levi-Civita connection itself.
    """

    dim_tangent_dist: int
    box: Box
    metric: CoefficientField
    distribution: tuple[CoefficientField, ...]
    contorsion: Optional[CoefficientField] = None
    signature_index: int = 0

    def __post_init__(self):
        m = self.box.dim
        if self.metric.shape != (m, m):
            raise ValueError("metric shape must be (m, m)")
        if len(self.distribution) != self.dim_tangent_dist:
            raise ValueError("need exactly n spanning vector fields")
        for v in self.distribution:
            if v.shape != (m,):
                raise ValueError("distribution vectors must have shape (m,)")
        if self.contorsion is not None and self.contorsion.shape != (m, m, m):
            raise ValueError("contorsion shape must be (m, m, m)")

    @property
    def dim_total(self) -> int:
        return self.box.dim

    @property
    def n(self) -> int:
        return self.dim_tangent_dist

    @property
    def p(self) -> int:
        return self.dim_total - self.dim_tangent_dist

    def metric_at(self, x: np.ndarray) -> np.ndarray:
        return self.metric.eval(x)

    def distribution_at(self, x: np.ndarray) -> np.ndarray:
        """Spanning vectors, shape (..., n, m)."""
        return np.stack([v.eval(x) for v in self.distribution], axis=-2)

    def contorsion_at(self, x: np.ndarray) -> np.ndarray:
        m = self.dim_total
        if self.contorsion is None:
            x = np.asarray(x, dtype=float)
            return np.zeros(x.shape[:-1] + (m, m, m))
        return self.contorsion.eval(x)

    def with_fields(self, metric=None, distribution=None, contorsion=None) -> "ChartAtlas":
        return ChartAtlas(
            self.dim_tangent_dist,
            self.box,
            metric if metric is not None else self.metric,
            tuple(distribution) if distribution is not None else self.distribution,
            contorsion if contorsion is not None else self.contorsion,
            self.signature_index,
        )

    def swapped(self) -> "ChartAtlas":
        """The dual atlas: roles of the two distributions exchanged.

        The new tangent distribution is the g-orthogonal complement of the
        old one, spanned by closed-form fields obtained by projecting the
        coordinate basis (symbolically) and dropping dependent columns.
        """
        m, n = self.dim_total, self.dim_tangent_dist
        xs = coordinates(m)
        g = sy.Matrix(m, m, lambda i, j: self.metric.exprs[i, j])
        D = sy.Matrix(m, n, lambda i, a: self.distribution[a].exprs[i])
        gram = (D.T * g * D)
        proj = D * gram.inv() * (D.T * g)  # projector onto the old tangent distribution
        comp = sy.eye(m) - proj
        cols = [comp[:, j] for j in range(m)]
        # greedy symbolic rank selection at a generic sample point
        sample = {s: 0.41 + 0.13 * k for k, s in enumerate(xs)}
        chosen: list[sy.Matrix] = []
        chosen_num: list[np.ndarray] = []
        for c in cols:
            v = np.array([float(ci.subs(sample)) for ci in c])
            resid = v.copy()
            for u in chosen_num:
                resid = resid - (resid @ u) / (u @ u) * u
            if np.linalg.norm(resid) > 1e-8:
                chosen.append(c)
                chosen_num.append(v)
            if len(chosen) == m - n:
                break
        if len(chosen) != m - n:
            raise DegenerateDistribution("could not span the orthogonal complement")
        fields = tuple(
            CoefficientField(np.array([c[i] for i in range(m)], dtype=object), m, "u")
            for c in chosen
        )
        return ChartAtlas(m - n, self.box, self.metric, fields,
                          self.contorsion, self.signature_index)


# ---------------------------------------------------------------------------
# field evaluation and differentiation
# ---------------------------------------------------------------------------

def eval_field(field: CoefficientField, x: np.ndarray, box: Optional[Box] = None) -> np.ndarray:
    """Evaluate with periodic wrapping and a finiteness check."""
    x = np.asarray(x, dtype=float)
    if box is not None:
        x = box.wrap(x)
    out = field.eval(x)
    if not np.all(np.isfinite(out)):
        raise NonFinite("field evaluation produced NaN/Inf")
    return out


_STENCILS = {
    2: ((1, 0.5), (-1, -0.5)),
    4: ((1, 2 / 3), (-1, -2 / 3), (2, -1 / 12), (-2, 1 / 12)),
}


def differentiate(
    field: CoefficientField,
    x: np.ndarray,
    axis: int,
    cfg: JetConfig = JetConfig(),
    box: Optional[Box] = None,
) -> np.ndarray:
    """d(field)/dx_axis at x: analytic jet when available, else central FD."""
    x = np.asarray(x, dtype=float)
    if cfg.mode == "analytic":
        return eval_field(field.derivative(axis), x, box)
    h = cfg.step(box, axis)
    if box is not None and not box.periodic[axis]:
        reach = (2 if cfg.fd_order == 4 else 1) * h
        lo = np.min(x[..., axis]) - reach
        hi = np.max(x[..., axis]) + reach
        if lo < box.lows[axis] or hi > box.highs[axis]:
            raise StepTooLarge(f"stencil leaves non-periodic axis {axis}")
    acc = None
    for offset, w in _STENCILS[cfg.fd_order]:
        xo = x.copy()
        xo[..., axis] += offset * h
        term = w * eval_field(field, xo, box)
        acc = term if acc is None else acc + term
    return acc / h


def fd_directional(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, axis: int,
                   h: float, order: int = 4) -> np.ndarray:
    """Central FD of an arbitrary pointwise-evaluable map (batched)."""
    x = np.asarray(x, dtype=float)
    acc = None
    for offset, w in _STENCILS[order]:
        xo = x.copy()
        xo[..., axis] += offset * h
        term = w * fn(xo)
        acc = term if acc is None else acc + term
    return acc / h


# ---------------------------------------------------------------------------
# adapted frames
# ---------------------------------------------------------------------------

@dataclass
class AdaptedFrame:
    """Pointwise orthonormal frame adapted to the splitting.

    ``top`` has shape (..., n, m) and spans the tangent distribution,
    ``perp`` has shape (..., p, m).  Signs eps are +-1.  The metric at the
    point(s) is kept so inner products need no re-evaluation.
    """

    point: np.ndarray
    top: np.ndarray
    perp: np.ndarray
    eps_top: np.ndarray
    eps_perp: np.ndarray
    g: np.ndarray
    pivot: tuple[tuple[int, ...], tuple[int, ...]] = ((), ())

    @property
    def n(self) -> int:
        return self.top.shape[-2]

    @property
    def p(self) -> int:
        return self.perp.shape[-2]

    @property
    def vectors(self) -> np.ndarray:
        """All m frame vectors stacked, tangent ones first: (..., m, m)."""
        return np.concatenate([self.top, self.perp], axis=-2)

    @property
    def eps(self) -> np.ndarray:
        return np.concatenate([self.eps_top, self.eps_perp], axis=-1)

    def inner(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.einsum("...i,...ij,...j->...", u, self.g, v)

    def gram_defect(self) -> float:
        e = self.vectors
        gram = np.einsum("...ai,...ij,...bj->...ab", e, self.g, e)
        m = e.shape[-2]
        target = np.zeros_like(gram)
        idx = np.arange(m)
        target[..., idx, idx] = self.eps
        return float(np.max(np.abs(gram - target)))


def _orthogonalize(g, v, basis, eps):
    """v minus its projections onto the accepted orthonormal vectors."""
    if basis:
        for e, s in zip(basis, eps):
            coeff = np.einsum("...i,...ij,...j->...", v, g, e)
            v = v - (s * coeff)[..., None] * e
    return v


def adapted_frame(atlas: ChartAtlas, x: np.ndarray,
                  pivot: Optional[tuple[tuple[int, ...], tuple[int, ...]]] = None,
                  tol: float = 1e-10) -> AdaptedFrame:
    """Pivoted Gram-Schmidt frame: tangent distribution first, then the
    coordinate basis completes the orthogonal complement.

    Pivot rule: at each step take the remaining candidate whose
    orthogonalized self-inner-product has the largest magnitude (ties broken
    by index), which is deterministic and stable in indefinite signature.  A
    frozen ``pivot`` order makes the frame a smooth function of x near a
    base point, which finite-difference derivatives rely on.
    """
    x = atlas.box.wrap(np.asarray(x, dtype=float))
    g = atlas.metric_at(x)
    m, n = atlas.dim_total, atlas.n
    base = x.shape[:-1]

    cand_top = [atlas.distribution_at(x)[..., a, :] for a in range(n)]
    eye = np.broadcast_to(np.eye(m), base + (m, m))
    cand_perp = [eye[..., k, :] for k in range(m)]

    basis: list[np.ndarray] = []
    eps: list[np.ndarray] = []
    chosen: tuple[list[int], list[int]] = ([], [])

    for stage, (cands, want) in enumerate([(cand_top, n), (cand_perp, m - n)]):
        remaining = list(range(len(cands)))
        for step in range(want):
            if pivot is not None:
                pick = pivot[stage][step]
                u = _orthogonalize(g, cands[pick], basis, eps)
            else:
                best_pick, best_u, best_norm = None, None, None
                for k in remaining:
                    u = _orthogonalize(g, cands[k], basis, eps)
                    nrm = np.abs(np.einsum("...i,...ij,...j->...", u, g, u))
                    score = float(np.min(nrm))
                    if best_norm is None or score > best_norm:
                        best_pick, best_u, best_norm = k, u, score
                pick, u = best_pick, best_u
                remaining.remove(pick)
            sq = np.einsum("...i,...ij,...j->...", u, g, u)
            if np.min(np.abs(sq)) < tol:
                raise DegenerateDistribution(
                    f"orthogonalized vector has |<v,v>| < {tol} (stage {stage}, step {step})")
            s = np.sign(sq)
            basis.append(u / np.sqrt(np.abs(sq))[..., None])
            eps.append(s)
            chosen[stage].append(pick)

    top = np.stack(basis[:n], axis=-2)
    perp = np.stack(basis[n:], axis=-2)
    eps_top = np.stack(eps[:n], axis=-1)
    eps_perp = np.stack(eps[n:], axis=-1)
    return AdaptedFrame(x, top, perp, eps_top, eps_perp, g,
                        (tuple(chosen[0]), tuple(chosen[1])))


def frame_field(atlas: ChartAtlas, base_point: np.ndarray) -> Callable[[np.ndarray], AdaptedFrame]:
    """A smooth single-valued frame map near base_point (pivot order frozen)."""
    ref = adapted_frame(atlas, np.asarray(base_point, dtype=float))
    piv = ref.pivot

    def at(x: np.ndarray) -> AdaptedFrame:
        return adapted_frame(atlas, x, pivot=piv)

    return at


def split(frame: AdaptedFrame, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """g-orthogonal decomposition v = v_top + v_perp along the frame."""
    v = np.asarray(v, dtype=float)
    coeff = np.einsum("...i,...ij,...aj->...a", v, frame.g, frame.top)
    v_top = np.einsum("...a,...a,...aj->...j", frame.eps_top, coeff, frame.top)
    return v_top, v - v_top
