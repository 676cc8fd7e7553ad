"""First variations of the action functionals.

Two independent routes are provided for d/dt of each integral functional at
t = 0: a finite-difference route (deform the atlas, integrate, difference in
t) and closed-form routes assembled term by term from the variation formulas
of the adapted-frame calculus.  The closed-form routes return a ledger so a
mismatch against the FD oracle localizes to a single named term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (ClassViolation, Degenerate, DimensionGuard,
                     NonPeriodicAxis, UnsupportedPair)
from .geometry_core import (AdaptedFrame, Box, ChartAtlas, CoefficientField,
                            JetConfig, adapted_frame)
from .extrinsic import FrameData, mixed_tensors, upsilon, _quad_block
from .levi_civita import QuadratureGrid, integrate
from .invariants import (ContorsionOps, Q_value, bar_s_mix_pointwise,
                         div_of_t12, div_of_vector, s_T, s_mix)
from .euler_lagrange import _odot, _pair_vec, _sym, s_T_variation_coefficients

__all__ = [
    "METRIC_CLASSES", "CONTORSION_CLASSES", "ACTION_IDS", "Q_COMPONENTS",
    "VariationField", "FDDerivative", "VariationReport", "FramePath",
    "validate_variation", "deform", "evolve_frame", "action_integral",
    "fd_action_derivative", "q_components", "analytic_first_variation",
    "contorsion_gradient_check", "volume_derivative_defect",
    "div_x_identity_defect", "div_variation_defect",
]

METRIC_CLASSES = ("g_pitchfork", "adapted", "g_top", "g_perp")
CONTORSION_CLASSES = ("unrestricted-contorsion", "statistical-contorsion",
                      "metric-contorsion", "semi-symmetric-contorsion")

#: the nine scalar summands of the contorsion potential Q, each of which has
#: its own closed-form first-variation display for mixed+orthogonal metric
#: variations
Q_COMPONENTS = (
    "ts_wedge",        # <T*, T^>|V
    "theta_A",         # <Theta, A>
    "theta_T",         # <Theta, T^sharp>
    "theta_Tt",        # <Theta, Ttilde^sharp>
    "theta_At",        # <Theta, Atilde>
    "trace_top",       # <Tr^top T, Tr^perp T*>
    "trace_perp",      # <Tr^top T*, Tr^perp T>
    "trace_mix_top",   # <Tr^top(T* - T), Htilde - H>
    "trace_mix_perp",  # <Tr^perp(T* - T), Htilde - H>
)

ACTION_IDS = ("total_s_mix", "total_s_T", "total_bar_s_mix", "total_Q",
              "volume", "div_integral") + tuple(
                  "q_component:" + c for c in Q_COMPONENTS)


# ---------------------------------------------------------------------------
# variation fields
# ---------------------------------------------------------------------------

@dataclass
class VariationField:
    """An admissible direction of deformation.

    ``kind == "metric"``: ``b_field`` is a symmetric (0,2) coefficient field
    B = dg/dt.  ``kind == "contorsion"``: ``b_field`` is a (1,2) coefficient
    field S = dT/dt (coordinate components, value index first).

    ``support`` restricts the deformation to a sub-box; the field must vanish
    outside it.  A non-periodic chart requires a support strictly inside.
    """

    kind: str
    b_field: CoefficientField
    variation_class: str
    support: Optional[Box] = None

    def __post_init__(self):
        if self.kind not in ("metric", "contorsion"):
            raise ClassViolation(f"unknown variation kind {self.kind!r}")
        allowed = METRIC_CLASSES if self.kind == "metric" else CONTORSION_CLASSES
        if self.variation_class not in allowed:
            raise ClassViolation(
                f"class {self.variation_class!r} not valid for kind {self.kind!r}")
        want = "dd" if self.kind == "metric" else "udd"
        if self.b_field.variance != want:
            raise ClassViolation(
                f"{self.kind} variation needs variance {want!r}, got "
                f"{self.b_field.variance!r}")


def _lattice(box: Box, per_axis: int = 4) -> np.ndarray:
    """A small deterministic sample lattice, offset from symmetry points."""
    axes = [np.linspace(lo, hi, per_axis, endpoint=False) + 0.137 * (hi - lo) / per_axis
            for lo, hi in zip(box.lows, box.highs)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([mm.reshape(-1) for mm in mesh], axis=-1)


def _frame_t2(frame: AdaptedFrame, S_coord: np.ndarray) -> np.ndarray:
    e = frame.vectors
    return np.einsum("...ak,...bl,...kl->...ab", e, e, S_coord)


def _frame_t12(frame: AdaptedFrame, P_coord: np.ndarray) -> np.ndarray:
    e = frame.vectors
    low = np.einsum("...kl,...al->...ak", frame.g, e)
    return np.einsum("...mi,...lj,...kij,...rk->...mlr", e, e, P_coord, low)


def validate_variation(atlas: ChartAtlas, v: VariationField,
                       x: Optional[np.ndarray] = None,
                       tol: float = 1e-12) -> dict:
    """Check the pointwise class constraints (and the support rule).

    Returns a report dict with the sup-norm defect per constraint; raises
    ClassViolation if any exceeds ``tol``.
    """
    if x is None:
        x = _lattice(atlas.box)
    x = np.asarray(x, dtype=float)
    frame = adapted_frame(atlas, x)
    n = atlas.n
    vals = v.b_field.eval(x)
    defects: dict[str, float] = {}
    sup = lambda t: float(np.max(np.abs(t))) if t.size else 0.0
    if v.kind == "metric":
        Bf = _frame_t2(frame, vals)
        if v.variation_class in ("g_pitchfork", "g_perp"):
            defects["top-block"] = sup(Bf[..., :n, :n])
        if v.variation_class in ("adapted", "g_top", "g_perp"):
            defects["mixed-block"] = max(sup(Bf[..., :n, n:]), sup(Bf[..., n:, :n]))
        if v.variation_class == "g_top":
            defects["perp-block"] = sup(Bf[..., n:, n:])
        defects["symmetry"] = sup(vals - np.swapaxes(vals, -2, -1))
    else:
        Sf = _frame_t12(frame, vals)
        if v.variation_class == "statistical-contorsion":
            defects["first-pair-symmetry"] = sup(Sf - np.swapaxes(Sf, -3, -2))
            defects["last-pair-symmetry"] = sup(Sf - np.swapaxes(Sf, -2, -1))
        elif v.variation_class == "metric-contorsion":
            defects["value-antisymmetry"] = sup(Sf + np.swapaxes(Sf, -2, -1))
        elif v.variation_class == "semi-symmetric-contorsion":
            m = atlas.dim_total
            tr = (np.einsum("...a,...aan->...n", frame.eps[..., :n], Sf[..., :n, :n, :])
                  + np.einsum("...i,...iin->...n", frame.eps[..., n:], Sf[..., n:, n:, :]))
            U = -tr / (m - 1)
            eye = np.zeros(x.shape[:-1] + (m, m))
            idx = np.arange(m)
            eye[..., idx, idx] = frame.eps
            model = (np.einsum("...m,...ln->...lmn", U, eye)
                     - np.einsum("...lm,...n->...lmn", eye, U))
            defects["semi-symmetric-shape"] = sup(Sf - model)
    if v.support is not None:
        if not all(atlas.box.periodic):
            inside = all(sl > bl and sh < bh for sl, sh, bl, bh in zip(
                v.support.lows, v.support.highs, atlas.box.lows, atlas.box.highs))
            if not inside:
                raise ClassViolation("support must lie strictly inside a "
                                     "non-periodic chart")
        # on fully periodic axes "contains" is all-true; mask by raw bounds
        raw = np.ones(x.shape[:-1], dtype=bool)
        for k in range(atlas.box.dim):
            raw &= (x[..., k] >= v.support.lows[k]) & (x[..., k] <= v.support.highs[k])
        outside = ~raw
        if np.any(outside):
            defects["support"] = sup(vals[outside])
    bad = {k: d for k, d in defects.items() if d > tol}
    if bad:
        raise ClassViolation(f"variation violates its class: {bad}")
    return defects


def deform(atlas: ChartAtlas, v: VariationField, t: float,
           check_tol: float = 1e-12) -> ChartAtlas:
    """The deformed atlas g + tB (metric kind) or T + tS (contorsion kind)."""
    validate_variation(atlas, v, tol=check_tol)
    if t == 0.0:
        return atlas
    if v.kind == "metric":
        gt = atlas.metric + v.b_field.scaled(t)
        out = atlas.with_fields(metric=gt)
        x = _lattice(atlas.box)
        g = out.metric_at(x)
        if np.min(np.abs(np.linalg.det(g))) < 1e-12:
            raise Degenerate("deformed metric is singular at a sample point")
        D = out.distribution_at(x)
        gram = np.einsum("...ak,...kl,...bl->...ab", D, g, D)
        if np.min(np.abs(np.linalg.det(gram))) < 1e-12:
            raise Degenerate("deformed metric degenerates on the tangent "
                             "distribution")
        return out
    base = atlas.contorsion
    if base is None:
        base = CoefficientField.zeros((atlas.dim_total,) * 3, atlas.dim_total, "udd")
    return atlas.with_fields(contorsion=base + v.b_field.scaled(t))


# ---------------------------------------------------------------------------
# frame evolution
# ---------------------------------------------------------------------------

@dataclass
class FramePath:
    """A frame trajectory at one point: t-samples of the adapted frame and of
    the metric realized along the variation."""

    times: np.ndarray          # (steps + 1,)
    top: np.ndarray            # (n, m), constant
    perp: np.ndarray           # (steps + 1, p, m)
    metric: np.ndarray         # (steps + 1, m, m)
    eps: np.ndarray            # (m,)

    def orthonormality_defect(self) -> float:
        n = self.top.shape[0]
        fr = np.concatenate([np.broadcast_to(self.top, self.perp.shape[:1]
                                             + self.top.shape), self.perp], axis=1)
        gram = np.einsum("tak,tkl,tbl->tab", fr, self.metric, fr)
        target = np.diag(self.eps)
        return float(np.max(np.abs(gram - target)))


def evolve_frame(atlas: ChartAtlas, v: VariationField, t: float,
                 x: np.ndarray, steps: int = 64) -> FramePath:
    """Evolve the adapted frame at the point x along the variation.

    The tangent frame is constant; each orthogonal frame vector follows

        d/dt Ee_i = -1/2 (B^sharp Ee_i)^perp - (B^sharp Ee_i)^top,

    integrated with classical RK4 jointly with the metric path.  The metric
    path holds the frame components of B fixed (its t = 0 derivative is B, so
    all first-variation quantities are unaffected), which keeps the evolved
    frame exactly g_t-orthonormal up to integrator error.
    """
    if v.kind != "metric" or v.variation_class not in ("g_pitchfork", "g_perp"):
        raise ClassViolation("frame evolution is defined for metric variations "
                             "that fix the tangent block")
    validate_variation(atlas, v)
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("evolve_frame expects a single point")
    frame = adapted_frame(atlas, x)
    n, m = atlas.n, atlas.dim_total
    g0 = frame.g
    B0 = v.b_field.eval(x)
    Bf = _frame_t2(frame, B0)        # frame components, held fixed
    D = frame.top                     # (n, m) tangent spanning rows
    top = frame.top.copy()

    def rhs(state):
        perp, g = state
        fr = np.concatenate([top, perp], axis=0)        # rows e_nu
        co = np.linalg.inv(fr)                          # co[k, nu] = theta^nu_k
        B = co @ Bf @ co.T                              # coordinate comps
        ginv = np.linalg.inv(g)
        # column-action g-orthogonal projector onto the tangent distribution
        P_top = D.T @ np.linalg.inv(D @ g @ D.T) @ (D @ g)
        P_perp = np.eye(m) - P_top
        # vectors are rows here, so projectors act transposed
        Bsh = perp @ B @ ginv                           # rows B^sharp Ee_i
        d_perp = -0.5 * Bsh @ P_perp.T - Bsh @ P_top.T
        return d_perp, B

    h = t / steps if steps else 0.0
    times = [0.0]
    perp = frame.perp.copy()
    g = g0.copy()
    perps = [perp.copy()]
    gs = [g.copy()]
    for _ in range(steps):
        k1 = rhs((perp, g))
        k2 = rhs((perp + 0.5 * h * k1[0], g + 0.5 * h * k1[1]))
        k3 = rhs((perp + 0.5 * h * k2[0], g + 0.5 * h * k2[1]))
        k4 = rhs((perp + h * k3[0], g + h * k3[1]))
        perp = perp + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        g = g + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        times.append(times[-1] + h)
        perps.append(perp.copy())
        gs.append(g.copy())
    return FramePath(times=np.array(times), top=top, perp=np.stack(perps),
                     metric=np.stack(gs), eps=frame.eps)


def _perp_projection(top, g, m):
    P_top = top.T @ np.linalg.inv(top @ g @ top.T) @ (top @ g)
    return np.eye(m) - P_top


# ---------------------------------------------------------------------------
# action functionals
# ---------------------------------------------------------------------------

def _component_scalar(fd: FrameData, ops: ContorsionOps, name: str) -> np.ndarray:
    K, Ks, Th = ops.K, ops.K_star, ops.Theta
    if name == "ts_wedge":
        return fd.inner_t12(fd.restrict_V(Ks, rank=3), ops.K_wedge)
    if name in ("theta_A", "theta_T", "theta_Tt", "theta_At"):
        src = {"theta_A": fd.hF, "theta_T": fd.TF,
               "theta_At": fd.htF, "theta_Tt": fd.TtF}[name]
        W = np.moveaxis(src, -1, -3)
        return fd.inner_t12(Th, W)
    if name == "trace_top":
        return fd.inner_vec(ops.tr_top, ops.tr_perp_star)
    if name == "trace_perp":
        return fd.inner_vec(ops.tr_top_star, ops.tr_perp)
    if name == "trace_mix_top":
        return fd.inner_vec(ops.tr_top_star - ops.tr_top, fd.Htc - fd.Hc)
    if name == "trace_mix_perp":
        return fd.inner_vec(ops.tr_perp_star - ops.tr_perp, fd.Htc - fd.Hc)
    raise UnsupportedPair(f"unknown Q component {name!r}")


def q_components(fd: FrameData, ops: Optional[ContorsionOps] = None) -> dict:
    """All nine Q summands, plus their signed recombination into Q.

    The combination Q = -trace_top - trace_perp + ts_wedge - trace_mix_top
    + trace_mix_perp - theta_At + theta_Tt - theta_A + theta_T agrees with
    the direct Q evaluator and is checked by the tests.
    """
    if ops is None:
        ops = ContorsionOps(fd)
    out = {c: _component_scalar(fd, ops, c) for c in Q_COMPONENTS}
    out["Q_assembled"] = (-out["trace_top"] - out["trace_perp"] + out["ts_wedge"]
                          - out["trace_mix_top"] + out["trace_mix_perp"]
                          - out["theta_At"] + out["theta_Tt"]
                          - out["theta_A"] + out["theta_T"])
    return out


def action_integral(atlas: ChartAtlas, action: str,
                    grid: QuadratureGrid = QuadratureGrid(),
                    cfg: JetConfig = JetConfig(),
                    aux_field: Optional[CoefficientField] = None) -> float:
    """The value of the named functional on the atlas."""
    if action not in ACTION_IDS:
        raise UnsupportedPair(f"unknown action {action!r}")

    def integrand(y):
        fd = FrameData(atlas, y, cfg)
        if action == "volume":
            return np.ones(y.shape[:-1])
        if action == "total_s_mix":
            return s_mix(atlas, y, cfg, data=fd)
        if action == "total_s_T":
            return s_T(atlas, y, cfg, data=fd)
        if action == "total_bar_s_mix":
            return bar_s_mix_pointwise(atlas, y, cfg, data=fd)["A"]
        if action == "total_Q":
            return Q_value(atlas, y, cfg, data=fd)
        if action == "div_integral":
            if aux_field is None:
                raise UnsupportedPair("div_integral needs an aux vector field")
            return div_of_vector(fd, lambda d: aux_field.eval(d.x))
        name = action.split(":", 1)[1]
        return _component_scalar(fd, ContorsionOps(fd), name)

    return integrate(atlas, integrand, grid)


@dataclass
class FDDerivative:
    value: float
    error_estimate: float
    step: float
    samples: dict[float, float] = field(default_factory=dict)


def fd_action_derivative(atlas: ChartAtlas, action: str, v: VariationField,
                         grid: QuadratureGrid = QuadratureGrid(),
                         cfg: JetConfig = JetConfig(),
                         step: float = 1e-3,
                         aux_field: Optional[CoefficientField] = None) -> FDDerivative:
    """d/dt of the functional at t = 0 along v.

    Five-point central stencil: the two-point slopes at steps h and 2h are
    Richardson-combined to fourth order, and their spread gives the error
    estimate.  The step adapts downward if the deformed metric degenerates.
    """
    if not all(atlas.box.periodic):
        raise NonPeriodicAxis("the FD action derivative integrates over a "
                              "fully periodic chart")
    h = step
    for _ in range(8):
        try:
            deform(atlas, v, 2.0 * h)
            deform(atlas, v, -2.0 * h)
            break
        except Degenerate:
            h *= 0.5
    else:
        raise Degenerate("no admissible FD step found")
    samples = {}
    for c in (-2.0, -1.0, 1.0, 2.0):
        samples[c * h] = action_integral(deform(atlas, v, c * h), action,
                                         grid, cfg, aux_field)
    d1 = (samples[h] - samples[-h]) / (2.0 * h)
    d2 = (samples[2 * h] - samples[-2 * h]) / (4.0 * h)
    value = (4.0 * d1 - d2) / 3.0
    return FDDerivative(value=value, error_estimate=abs(d1 - d2) / 3.0,
                        step=h, samples=samples)


# ---------------------------------------------------------------------------
# closed-form first variations: helper contractions
# ---------------------------------------------------------------------------

def _theta_mixed_t(Th, n):
    """M[a, i, b] = <Theta_a Ee_i + Theta_i E_a, E_b>."""
    return Th[..., :n, n:, :n] + np.swapaxes(Th[..., n:, :n, :n], -3, -2)


def _theta_mixed_p(Th, n):
    """N[a, j, i] = <Theta_a Ee_j + Theta_j E_a, Ee_i>."""
    return Th[..., :n, n:, n:] + np.swapaxes(Th[..., n:, :n, n:], -3, -2)


def _b_frame(fd: FrameData, b_field: CoefficientField) -> np.ndarray:
    return fd.t2_frame(b_field.eval(fd.x))


def _restrict_V2(fd: FrameData, Bf: np.ndarray) -> np.ndarray:
    return fd.restrict_V(Bf, rank=2)


def _pair_t2_t12(fd: FrameData, Bf: np.ndarray, P: np.ndarray) -> np.ndarray:
    """vector v_nu = sum eps eps B[l, m] P[l, m, nu] (lowered frame comps)."""
    return np.einsum("...l,...m,...lm,...lmn->...n", fd.eps, fd.eps, Bf, P)


def _tr_g(fd: FrameData, Bf: np.ndarray) -> np.ndarray:
    return np.einsum("...n,...nn->...", fd.eps, Bf)


def _nabla_vec_frame(fd: FrameData, build: Callable[[FrameData], np.ndarray]) -> np.ndarray:
    """nz[lam, mu] = <nabla_lam Z, e_mu> for a frame-built coordinate field."""
    from .extrinsic import _nabla_Z_frame
    return _nabla_Z_frame(fd, lambda y: build(fd.at(y)))


def _div_scalar_of_vec(fd: FrameData, build, part="full"):
    return div_of_vector(fd, build, part=part)


# ---------------------------------------------------------------------------
# closed-form first variations of the Q components (mixed+orthogonal metric
# variations, arbitrary contorsion)
# ---------------------------------------------------------------------------

def _ldt3_terms(fd: FrameData, ops: ContorsionOps, which: str,
                b_field: CoefficientField) -> dict:
    """Named terms of one Q-component's first variation.

    Returns {"pp": {name: (p,p) array}, "V": {name: (p,n) array},
             "couplings": {name: scalar array}, "divergences": {name: scalar
             array}, "c_pp": sum of pp, "c_V": sum of V}.  The pp arrays
    multiply B(Ee_i, Ee_j) with eps_i eps_j weights, the V arrays multiply
    B(Ee_i, E_b) with eps_i eps_b weights; couplings and divergences are
    complete scalars.  Divergence entries integrate to zero on a closed
    chart and are kept separate for bookkeeping.
    """
    K, Ks, Th = ops.K, ops.K_star, ops.Theta
    n, p, m = fd.n, fd.p, fd.m
    e = fd.eps
    et, ep = e[..., :n], e[..., n:]
    h, T, ht, Tt = fd.hF, fd.TF, fd.htF, fd.TtF
    pp: dict[str, np.ndarray] = {}
    vv: dict[str, np.ndarray] = {}
    couplings: dict[str, np.ndarray] = {}
    divergences: dict[str, np.ndarray] = {}
    # contorsion blocks in lowered frame comps
    Ktt = K[..., :n, :n, :]
    Ktp = K[..., :n, n:, :]
    Kpt = K[..., n:, :n, :]
    Kpp = K[..., n:, n:, :]
    hs, Ts = h[..., :n, :n, n:], T[..., :n, :n, n:]
    hts, Tts = ht[..., n:, n:, :n], Tt[..., n:, n:, :n]
    # <Theta_a Ee_i + Theta_i E_a, E_b> and its perp-valued sibling
    M = Th[..., :n, n:, :n] + np.swapaxes(Th[..., n:, :n, :n], -3, -2)
    N = Th[..., :n, n:, n:] + np.swapaxes(Th[..., n:, :n, n:], -3, -2)
    # <Theta_k E_a + Theta_a Ee_k, Ee_i>
    QP = Th[..., n:, :n, n:] + np.swapaxes(Th[..., :n, n:, n:], -3, -2)
    # <Theta_a E_b + Theta_b E_a, E_c>
    W = Th[..., :n, :n, :n] + np.swapaxes(Th[..., :n, :n, :n], -3, -2)
    # <Theta_a E_b + Theta_b E_a, Ee_j>
    Wp = Th[..., :n, :n, n:] + np.swapaxes(Th[..., :n, :n, n:], -3, -2)

    if which == "ts_wedge":
        pp["Ks(j,a)K(a,i)"] = -np.einsum("...a,...n,...jan,...ain->...ij",
                                         et, e, Ks[..., n:, :n, :], Ktp)
        vv["Ks(j,i)K(b,j)"] = np.einsum("...j,...n,...jin,...bjn->...ib",
                                        ep, e, Ks[..., n:, n:, :], Ktp)
        vv["Ks(a,i)K(b,a)"] = -np.einsum("...a,...n,...ain,...ban->...ib",
                                         et, e, Ks[..., :n, n:, :], Ktt)
        vv["Ks(b,a)K(a,i)"] = -np.einsum("...a,...n,...ban,...ain->...ib",
                                         et, e, Ks[..., :n, :n, :], Ktp)
        vv["Ks(i,a)K(a,b)"] = -np.einsum("...a,...n,...ian,...abn->...ib",
                                         et, e, Ks[..., n:, :n, :], Ktt)

    elif which in ("theta_A", "theta_T"):
        F2 = hs if which == "theta_A" else Ts
        pp["F(a,b,i)K(a,b,j)"] = -2.0 * np.einsum(
            "...a,...b,...abi,...abj->...ij", et, et, F2, Ktt[..., n:])
        if which == "theta_A":
            pp["h(a,b,j)M(.,i,.)"] = (
                np.einsum("...a,...b,...abj,...aib->...ij", et, et, F2, M)
                + np.einsum("...a,...b,...abj,...bia->...ij", et, et, F2, M))
        vv["N(a,j,i)F(a,b,j)"] = np.einsum("...a,...j,...aji,...abj->...ib",
                                           et, ep, N, F2)
        vv["W(a,b,c)F(a,c,i)"] = -np.einsum("...a,...c,...abc,...aci->...ib",
                                            et, et, W, F2)
        vv["F(a,b,j)K(a,i,j)"] = 2.0 * np.einsum(
            "...a,...j,...abj,...aij->...ib", et, ep, F2, Ktp[..., n:])
        vv["F(b,a,j)K(j,a,i)"] = -2.0 * np.einsum(
            "...a,...j,...baj,...jai->...ib", et, ep, F2, Kpt[..., n:])
        vv["F(a,b,j)K(j,i,a)"] = 2.0 * np.einsum(
            "...a,...j,...abj,...jia->...ib", et, ep, F2, Kpp[..., :n])
        vv["F(a,c,i)K(a,c,b)"] = -2.0 * np.einsum(
            "...a,...c,...aci,...acb->...ib", et, et, F2, Ktt[..., :n])
        if which == "theta_A":
            AT = hts - Tts
            vv["(At-Tt)(i,j,a)M(.,j,.)"] = -0.5 * (
                np.einsum("...a,...j,...ija,...ajb->...ib", et, ep, AT, M)
                + np.einsum("...a,...j,...ija,...bja->...ib", et, ep, AT, M))
            Bf = _b_frame(fd, b_field)
            BV = _restrict_V2(fd, Bf)

            def bg_vec(d: FrameData) -> np.ndarray:
                Bd = _restrict_V2(d, _b_frame(d, b_field))
                Gd = ContorsionOps(d).LGF[1]
                return d.vec_coord(_pair_t2_t12(d, Bd, Gd))

            couplings["div_top<B|V,G>"] = _div_scalar_of_vec(fd, bg_vec, "top")
            divG = div_of_t12(fd, lambda d: ContorsionOps(d).LGF[1], part="top")
            couplings["-<B|V,div_top G>"] = -fd.inner_t2(BV, divG)

    elif which == "theta_Tt":
        pp["Tt(k,j,a)K(a,i,k)"] = 2.0 * np.einsum(
            "...k,...a,...kja,...aik->...ij", ep, et, Tts, Ktp[..., n:])
        pp["Tt(i,k,a)K(a,k,j)"] = -2.0 * np.einsum(
            "...k,...a,...ika,...akj->...ij", ep, et, Tts, Ktp[..., n:])
        pp["Tt(k,j,a)K(k,i,a)"] = 2.0 * np.einsum(
            "...k,...a,...kja,...kia->...ij", ep, et, Tts, Kpp[..., :n])
        pp["N(a,j,k)Tt(i,k,a)"] = -0.5 * np.einsum(
            "...a,...k,...ajk,...ika->...ij", et, ep, N, Tts)
        pp["N(a,k,i)Tt(k,j,a)"] = 0.5 * np.einsum(
            "...a,...k,...aki,...kja->...ij", et, ep, N, Tts)
        pp["(N(a,i,k)-N(a,k,i))Tt(j,k,a)"] = -0.5 * (
            np.einsum("...a,...k,...aik,...jka->...ij", et, ep, N, Tts)
            - np.einsum("...a,...k,...aki,...jka->...ij", et, ep, N, Tts))
        hTs = hs + Ts
        vv["(N(a,i,j)-N(a,j,i))(h+T)(b,a,j)"] = 0.5 * (
            np.einsum("...a,...j,...aij,...baj->...ib", et, ep, N, hTs)
            - np.einsum("...a,...j,...aji,...baj->...ib", et, ep, N, hTs))
        vv["Tt(i,j,a)K(a,j,b)"] = -2.0 * np.einsum(
            "...a,...j,...ija,...ajb->...ib", et, ep, Tts, Ktp[..., :n])
        vv["Tt(j,i,a)K(j,b,a)"] = 2.0 * np.einsum(
            "...a,...j,...jia,...jba->...ib", et, ep, Tts, Kpt[..., :n])
        vv["Tt(j,i,a)K(a,b,j)"] = 2.0 * np.einsum(
            "...a,...j,...jia,...abj->...ib", et, ep, Tts, Ktt[..., n:])
        vv["Tt(k,j,b)K(k,j,i)"] = -2.0 * np.einsum(
            "...k,...j,...kjb,...kji->...ib", ep, ep, Tts, Kpp[..., n:])
        vv["Wp(a,b,j)Tt(i,j,a)"] = -np.einsum(
            "...a,...j,...abj,...ija->...ib", et, ep, Wp, Tts)
        Bf = _b_frame(fd, b_field)
        BV = _restrict_V2(fd, Bf)

        def bf_vec(d: FrameData) -> np.ndarray:
            Bd = _restrict_V2(d, _b_frame(d, b_field))
            Fd = ContorsionOps(d).LGF[2]
            return d.vec_coord(_pair_t2_t12(d, Bd, Fd))

        couplings["div_perp<B|V,F>"] = _div_scalar_of_vec(fd, bf_vec, "perp")
        divF = div_of_t12(fd, lambda d: ContorsionOps(d).LGF[2], part="perp")
        couplings["-<B|V,div_perp F>"] = -fd.inner_t2(BV, divF)

    elif which == "theta_At":
        pp["QP(k,a,i)ht(k,j,a)"] = 0.5 * np.einsum(
            "...k,...a,...kai,...kja->...ij", ep, et, QP, hts)
        pp["QP(j,a,k)ht(i,k,a)"] = -0.5 * np.einsum(
            "...k,...a,...jak,...ika->...ij", ep, et, QP, hts)
        pp["ht(i,k,a)K(a,k,j)"] = -2.0 * np.einsum(
            "...k,...a,...ika,...akj->...ij", ep, et, hts, Ktp[..., n:])
        pp["(QP(i,a,k)+QP(k,a,i))ht(j,k,a)"] = -(
            np.einsum("...k,...a,...iak,...jka->...ij", ep, et, QP, hts)
            + np.einsum("...k,...a,...kai,...jka->...ij", ep, et, QP, hts))
        pp["(QP(k,a,j)+QP(j,a,k))(At-Tt)(i,k,a)"] = (
            np.einsum("...k,...a,...kaj,...ika->...ij", ep, et, QP, hts - Tts)
            + np.einsum("...k,...a,...jak,...ika->...ij", ep, et, QP, hts - Tts))
        pp["ht(k,j,a)K(a,i,k)"] = 2.0 * np.einsum(
            "...k,...a,...kja,...aik->...ij", ep, et, hts, Ktp[..., n:])
        pp["ht(k,j,a)K(k,i,a)"] = 2.0 * np.einsum(
            "...k,...a,...kja,...kia->...ij", ep, et, hts, Kpp[..., :n])
        hTs, hmTs = hs + Ts, hs - Ts
        vv["(QP(j,a,i)+QP(i,a,j))(h+T)(b,a,j)"] = (
            np.einsum("...j,...a,...jai,...baj->...ib", ep, et, QP, hTs)
            + np.einsum("...j,...a,...iaj,...baj->...ib", ep, et, QP, hTs))
        vv["(QP(i,a,j)+QP(j,a,i))(h-T)(b,a,j)"] = -(
            np.einsum("...j,...a,...iaj,...baj->...ib", ep, et, QP, hmTs)
            + np.einsum("...j,...a,...jai,...baj->...ib", ep, et, QP, hmTs))
        vv["ht(i,j,a)K(a,j,b)"] = -2.0 * np.einsum(
            "...j,...a,...ija,...ajb->...ib", ep, et, hts, Ktp[..., :n])
        vv["ht(j,i,a)K(j,b,a)"] = 2.0 * np.einsum(
            "...j,...a,...jia,...jba->...ib", ep, et, hts, Kpt[..., :n])
        vv["ht(j,i,a)K(a,b,j)"] = 2.0 * np.einsum(
            "...j,...a,...jia,...abj->...ib", ep, et, hts, Ktt[..., n:])
        vv["ht(k,j,b)K(k,j,i)"] = -2.0 * np.einsum(
            "...k,...j,...kjb,...kji->...ib", ep, ep, hts, Kpp[..., n:])
        vv["Wp(b,a,j)ht(i,j,a)"] = -np.einsum(
            "...j,...a,...baj,...ija->...ib", ep, et, Wp, hts)
        Bf = _b_frame(fd, b_field)

        def bl_vec(d: FrameData) -> np.ndarray:
            Bd = _b_frame(d, b_field)
            Ld = ContorsionOps(d).LGF[0]
            return d.vec_coord(_pair_t2_t12(d, Bd, Ld))

        couplings["-2div_top<B,L>"] = -2.0 * _div_scalar_of_vec(fd, bl_vec, "top")
        divL = div_of_t12(fd, lambda d: ContorsionOps(d).LGF[0], part="top")
        couplings["+2<B,div_top L>"] = 2.0 * fd.inner_t2(Bf, divL)

    elif which == "trace_top":
        trt = ops.tr_top
        pp["trt.(Ks(i,j)-Ks(j,i))"] = 0.5 * (
            np.einsum("...n,...n,...ijn->...ij", e, trt, Ks[..., n:, n:, :])
            - np.einsum("...n,...n,...jin->...ij", e, trt, Ks[..., n:, n:, :]))
        vv["trt.Ks(b,i)"] = -np.einsum("...n,...n,...bin->...ib", e, trt,
                                       Ks[..., :n, n:, :])

    elif which == "trace_perp":
        trts = ops.tr_top_star
        pp["(K(j,i)+K(i,j)).trts"] = -0.5 * (
            np.einsum("...n,...jin,...n->...ij", e, Kpp, trts)
            + np.einsum("...n,...ijn,...n->...ij", e, Kpp, trts))
        vv["trp.Ks(b,i)"] = np.einsum("...n,...n,...bin->...ib", e,
                                      ops.tr_perp, Ks[..., :n, n:, :])
        vv["(K(b,i)+K(i,b)).trts"] = -(
            np.einsum("...n,...bin,...n->...ib", e, Ktp, trts)
            + np.einsum("...n,...ibn,...n->...ib", e, Kpt, trts))

    elif which in ("trace_mix_top", "trace_mix_perp"):
        top_case = which == "trace_mix_top"

        def trace_diff(o: ContorsionOps) -> np.ndarray:
            return (o.tr_top_star - o.tr_top) if top_case \
                else (o.tr_perp_star - o.tr_perp)

        Dv = trace_diff(ops)
        trs = ops.tr_top_star if top_case else ops.tr_perp_star
        Hc, Htc = fd.Hc, fd.Htc

        def d_top_coord(d: FrameData) -> np.ndarray:
            w = trace_diff(ContorsionOps(d)).copy()
            w[..., d.n:] = 0.0
            return d.vec_coord(w)

        def d_perp_coord(d: FrameData) -> np.ndarray:
            w = trace_diff(ContorsionOps(d)).copy()
            w[..., : d.n] = 0.0
            return d.vec_coord(w)

        div_Dt = _div_scalar_of_vec(fd, d_top_coord, "full")
        gp = np.einsum("...i,ij->...ij", ep, np.eye(p))
        pp["div(D_top).g_perp"] = -0.5 * div_Dt[..., None, None] * gp
        pp["H(j)D(i)"] = -2.0 * np.einsum("...j,...i->...ij",
                                          Hc[..., n:], Dv[..., n:])
        pp["trs(j)H(i)"] = np.einsum("...j,...i->...ij",
                                     trs[..., n:], Hc[..., n:])
        if not top_case:
            pp["Ks(j,i).(Ht-H)"] = np.einsum(
                "...n,...jin,...n->...ij", e, Ks[..., n:, n:, :], Htc - Hc)
        nD = _nabla_vec_frame(fd, d_perp_coord)
        vv["Ht(b)D(i)"] = 2.0 * np.einsum("...b,...i->...ib",
                                          Htc[..., :n], Dv[..., n:])
        vv["H(i)D(b)"] = -2.0 * np.einsum("...i,...b->...ib",
                                          Hc[..., n:], Dv[..., :n])
        vv["trs(b)H(i)"] = np.einsum("...b,...i->...ib",
                                     trs[..., :n], Hc[..., n:])
        vv["T(b,c,i)D(c)"] = 2.0 * np.einsum("...c,...bci,...c->...ib",
                                             et, Ts, Dv[..., :n])
        vv["nabla_b(D_perp)(i)"] = -np.einsum("...bi->...ib", nD[..., :n, n:])
        vv["(At-Tt)(i,k,b)D(k)"] = -np.einsum(
            "...k,...ikb,...k->...ib", ep, hts - Tts, Dv[..., n:])
        vv["trs(i)Ht(b)"] = -np.einsum("...i,...b->...ib",
                                       trs[..., n:], Htc[..., :n])
        if top_case:
            vv["Ks(b,i).(Ht-H)"] = np.einsum(
                "...n,...bin,...n->...ib", e, Ks[..., :n, n:, :], Htc - Hc)
        else:
            vv["Ks(i,b).(Ht-H)"] = np.einsum(
                "...n,...ibn,...n->...ib", e, Ks[..., n:, :n, :], Htc - Hc)

        def div_payload(d: FrameData) -> np.ndarray:
            Bd = _b_frame(d, b_field)
            w = trace_diff(ContorsionOps(d))
            wp = w.copy()
            wp[..., : d.n] = 0.0
            bsharp = np.einsum("...n,...ln,...n->...l", d.eps, Bd, wp)
            bsharp[..., d.n:] = 0.0
            trD = np.einsum("...i,...ii->...",
                            d.eps[..., d.n:], Bd[..., d.n:, d.n:])
            wt = w.copy()
            wt[..., d.n:] = 0.0
            return d.vec_coord(bsharp - 0.5 * trD[..., None] * wt)

        divergences["div((B#D_perp)_top-(Tr_perp B)D_top/2)"] = \
            _div_scalar_of_vec(fd, div_payload, "full")

    else:
        raise UnsupportedPair(f"no closed-form variation for component {which!r}")

    zero_pp = np.zeros(fd.x.shape[:-1] + (p, p))
    zero_V = np.zeros(fd.x.shape[:-1] + (p, n))
    return {"pp": pp, "V": vv, "couplings": couplings,
            "divergences": divergences,
            "c_pp": sum(pp.values(), zero_pp), "c_V": sum(vv.values(), zero_V)}


# ---------------------------------------------------------------------------
# closed-form first variation dispatcher
# ---------------------------------------------------------------------------

@dataclass
class VariationReport:
    value: float
    route: str
    ledger: dict

    def to_dict(self) -> dict:
        return {"value": self.value, "route": self.route, "ledger": self.ledger}


def _integrate_pointwise(atlas, grid, f):
    return integrate(atlas, f, grid)


def _component_variation_value(atlas, name, v, grid, cfg) -> VariationReport:
    ledger: dict = {"terms": {}, "divergence_checks": {}}

    def f(y):
        fd = FrameData(atlas, y, cfg)
        ops = ContorsionOps(fd)
        parts = _ldt3_terms(fd, ops, name, v.b_field)
        Bf = _b_frame(fd, v.b_field)
        n = fd.n
        ep = fd.eps[..., n:]
        et = fd.eps[..., :n]
        val = np.einsum("...i,...j,...ij,...ij->...", ep, ep,
                        parts["c_pp"], Bf[..., n:, n:])
        val = val + np.einsum("...i,...b,...ib,...ib->...", ep, et,
                              parts["c_V"], Bf[..., n:, :n])
        for cname, arr in parts["couplings"].items():
            val = val + arr
        for dname, arr in parts["divergences"].items():
            val = val + arr
        base = _component_scalar(fd, ops, name)
        val = val + 0.5 * _tr_g(fd, Bf) * base
        return val

    value = _integrate_pointwise(atlas, grid, f)

    # bookkeeping: integrate the full-divergence terms by themselves
    def g(y):
        fd = FrameData(atlas, y, cfg)
        ops = ContorsionOps(fd)
        parts = _ldt3_terms(fd, ops, name, v.b_field)
        out = np.zeros(y.shape[:-1])
        for dname, arr in parts["divergences"].items():
            out = out + arr
        return out

    has_div = name in ("trace_mix_top", "trace_mix_perp")
    if has_div:
        ledger["divergence_checks"]["closed-chart integral"] = \
            _integrate_pointwise(atlas, grid, g)
    ledger["terms"]["component"] = name
    return VariationReport(value=value, route="component-displays", ledger=ledger)


def _semi_symmetric_q_variation(atlas, v, grid, cfg, Uc_build) -> VariationReport:
    """dQ/dt for a semi-symmetric contorsion under mixed+orthogonal metric
    variations.  The closed form is stated for the reduced potential; the
    general-definition evaluator used for the action is exactly twice it, so
    the assembled tensor carries an overall factor 2 (pinned by the FD oracle
    and the tests)."""
    n, p = atlas.n, atlas.p
    ledger: dict = {"terms": {"scale": 2.0}}

    def f(y):
        fd = FrameData(atlas, y, cfg)
        Uc = Uc_build(fd)                       # lowered frame comps
        Ut = Uc.copy(); Ut[..., n:] = 0.0
        Up = Uc.copy(); Up[..., :n] = 0.0

        def up_coord(d):
            U = Uc_build(d).copy()
            U[..., : d.n] = 0.0
            return d.vec_coord(U)

        def ut_coord(d):
            U = Uc_build(d).copy()
            U[..., d.n:] = 0.0
            return d.vec_coord(U)

        mt = mixed_tensors(atlas, y, Z_field=lambda z: up_coord(fd.at(z)),
                           cfg=cfg, data=fd)
        theta_Ut = _pair_vec(fd, mt.theta, Ut)
        ta_Up = _pair_vec(fd, mt.alpha_dual - mt.theta_dual, Up)
        divUt = div_of_vector(fd, ut_coord)
        tens = (-(n - p) * mt.delta_Z
                - (n - p) * fd.restrict_V(_sym(ta_Up), rank=2)
                + 2.0 * (p - n) * fd.restrict_V(_sym(theta_Ut), rank=2)
                - 0.5 * (p - n) * divUt[..., None, None] * fd.g_perp()
                + n * (p - 1) * np.einsum("...a,...b->...ab", Up, Up)
                + 2.0 * p * (n - 1) * _odot(Ut, Up))
        Bf = _b_frame(fd, v.b_field)
        val = 2.0 * fd.inner_t2(tens, Bf)
        q = Q_value(atlas, y, cfg, data=fd)
        return val + 0.5 * _tr_g(fd, Bf) * q

    value = _integrate_pointwise(atlas, grid, f)
    return VariationReport(value=value, route="semi-symmetric-closed-form",
                           ledger=ledger)


def _metric_critical_q_variation(atlas, v, grid, cfg) -> VariationReport:
    """-dQ/dt for a critical metric contorsion on a pair of umbilical
    distributions, under orthogonal-block metric variations."""
    n, p = atlas.n, atlas.p
    ledger: dict = {"terms": {}}

    def f(y):
        fd = FrameData(atlas, y, cfg)
        ops = ContorsionOps(fd)
        phi = ops.phi
        trt = ops.tr_top
        phi_pair = _pair_vec(fd, phi, (p + 2) / (2.0 * p) * fd.Htc
                             - 0.5 * fd.Hc + 0.5 * trt)

        def phi_top(d):
            o = ContorsionOps(d)
            out = o.phi.copy()
            out[..., d.n:] = 0.0
            return out

        div_phi_t = div_of_t12(fd, phi_top)

        def trp_top_coord(d):
            o = ContorsionOps(d)
            w = o.tr_perp.copy()
            w[..., d.n:] = 0.0
            return d.vec_coord(w)

        div_trp_t = div_of_vector(fd, trp_top_coord)
        div_Ht = div_of_vector(fd, lambda d: d.vec_coord(d.Htc))
        _, Tfl_d, _, _ = _quad_block(fd, dual=True)
        upsTT = upsilon(fd.TF, fd.TF, fd.eps)
        trt_perp = trt.copy(); trt_perp[..., :n] = 0.0
        tens = (phi_pair - 2.0 * div_phi_t + 7.0 * ops.chi
                + (3.0 * n + 2.0) / n * _odot(fd.Hc, trt_perp)
                - div_trp_t[..., None, None] * fd.g_perp()
                + (p - 1.0) / p * div_Ht[..., None, None] * fd.g_perp()
                - 3.0 * (n - 1.0) / n * np.einsum("...a,...b->...ab", fd.Hc, fd.Hc)
                + 2.0 * Tfl_d + 1.5 * upsTT)
        Bf = _b_frame(fd, v.b_field)
        val = -fd.inner_t2(tens, Bf)
        q = Q_value(atlas, y, cfg, data=fd, ops=ops)
        return val + 0.5 * _tr_g(fd, Bf) * q

    value = _integrate_pointwise(atlas, grid, f)
    return VariationReport(value=value, route="metric-critical-closed-form",
                           ledger=ledger)


def analytic_first_variation(atlas: ChartAtlas, action: str, v: VariationField,
                             grid: QuadratureGrid = QuadratureGrid(),
                             cfg: JetConfig = JetConfig()) -> VariationReport:
    """Closed-form d/dt of the functional at t = 0 along a metric variation.

    Supported pairs:
      * ``total_s_T`` with a mixed+orthogonal variation — algebraic
        coefficient arrays of the contorsion-curvature action;
      * ``q_component:*`` with a mixed+orthogonal variation — the component
        displays (with their G/F/L couplings and divergence bookkeeping);
      * ``total_Q`` with a mixed+orthogonal variation and a semi-symmetric
        contorsion — closed form in the structure vector U;
      * ``total_Q`` with an orthogonal-block variation and a critical metric
        contorsion on umbilical distributions.
    Everything else raises UnsupportedPair.
    """
    if v.kind != "metric":
        raise UnsupportedPair("closed-form routes cover metric variations; "
                              "use contorsion_gradient_check for contorsion "
                              "directions")
    validate_variation(atlas, v)
    pitchfork = v.variation_class in ("g_pitchfork", "g_perp")

    if action == "total_s_T" and pitchfork:
        def f(y):
            fd = FrameData(atlas, y, cfg)
            ops = ContorsionOps(fd)
            c_pp, c_V = s_T_variation_coefficients(fd, ops)
            Bf = _b_frame(fd, v.b_field)
            n = fd.n
            ep, et = fd.eps[..., n:], fd.eps[..., :n]
            # the coefficient arrays multiply 2 dS_T/dt
            val = 0.5 * np.einsum("...i,...j,...ij,...ij->...", ep, ep,
                                  c_pp, Bf[..., n:, n:])
            val = val + 0.5 * np.einsum("...i,...b,...ib,...ib->...", ep, et,
                                        c_V, Bf[..., n:, :n])
            return val + 0.5 * _tr_g(fd, Bf) * s_T(atlas, y, cfg, data=fd)

        value = _integrate_pointwise(atlas, grid, f)
        return VariationReport(value=value, route="s_T-coefficients",
                               ledger={"terms": {"coefficient-arrays": True}})

    if action.startswith("q_component:") and pitchfork:
        return _component_variation_value(atlas, action.split(":", 1)[1],
                                          v, grid, cfg)

    if action == "total_Q":
        probe = _lattice(atlas.box)
        fd0 = FrameData(atlas, probe, cfg)
        ops0 = ContorsionOps(fd0)
        defects = ops0.class_defects()
        if defects["semi_symmetric"] < 1e-10 and pitchfork:
            from .invariants import recover_semi_symmetric_U

            def Uc_build(d: FrameData) -> np.ndarray:
                return recover_semi_symmetric_U(ContorsionOps(d))

            return _semi_symmetric_q_variation(atlas, v, grid, cfg, Uc_build)
        if v.variation_class == "g_perp" and defects["metric"] < 1e-10:
            return _metric_critical_q_variation(atlas, v, grid, cfg)
        if pitchfork:
            # general route: signed sum of the component displays
            signs = {"trace_top": -1.0, "trace_perp": -1.0, "ts_wedge": 1.0,
                     "trace_mix_top": -1.0, "trace_mix_perp": 1.0,
                     "theta_At": -1.0, "theta_Tt": 1.0,
                     "theta_A": -1.0, "theta_T": 1.0}
            total = 0.0
            ledger: dict = {"terms": {}}
            for comp, s in signs.items():
                rep = _component_variation_value(atlas, comp, v, grid, cfg)
                total += s * rep.value
                ledger["terms"][comp] = s * rep.value
            return VariationReport(value=total, route="component-sum",
                                   ledger=ledger)

    raise UnsupportedPair(f"no closed-form route for ({action!r}, "
                          f"{v.variation_class!r})")


# ---------------------------------------------------------------------------
# contorsion gradient check
# ---------------------------------------------------------------------------

def contorsion_gradient_check(atlas: ChartAtlas, S: VariationField,
                              grid: QuadratureGrid = QuadratureGrid(),
                              cfg: JetConfig = JetConfig(),
                              fd_step: float = 1e-3) -> dict:
    """Compare the FD derivative of the total mixed scalar curvature of
    nabla + T under T + tS with the half-pairing of S against the assembled
    coefficient blocks of the algebraic criticality system."""
    if S.kind != "contorsion":
        raise ClassViolation("the gradient check takes a contorsion direction")
    from .euler_lagrange import contorsion_el_residuals

    fd_val = fd_action_derivative(atlas, "total_bar_s_mix", S, grid, cfg,
                                  step=fd_step)

    def f(y):
        fd = FrameData(atlas, y, cfg)
        blocks = {b.name: b.tensor for b in
                  contorsion_el_residuals(atlas, y, cfg, data=fd)}
        n, m = fd.n, fd.m
        base = y.shape[:-1]
        C = np.zeros(base + (m, m, m))
        C[..., :n, :n, :n] = blocks["contorsion-el-1"]
        C[..., :n, :n, n:] = blocks["contorsion-el-3"]
        C[..., :n, n:, :n] = blocks["contorsion-el-5"]
        C[..., :n, n:, n:] = -blocks["contorsion-el-7"]
        C[..., n:, n:, n:] = blocks["contorsion-el-2"]
        C[..., n:, n:, :n] = blocks["contorsion-el-4"]
        C[..., n:, :n, n:] = blocks["contorsion-el-6"]
        C[..., n:, :n, :n] = -blocks["contorsion-el-8"]
        frame = fd.frame
        Sf = _frame_t12(frame, S.b_field.eval(y))
        return 0.5 * np.einsum("...m,...l,...r,...mlr,...mlr->...",
                               fd.eps, fd.eps, fd.eps, Sf, C)

    pairing = _integrate_pointwise(atlas, grid, f)
    denom = max(1.0, abs(fd_val.value))
    return {
        "fd_derivative": fd_val.value,
        "fd_error_estimate": fd_val.error_estimate,
        "pairing": pairing,
        "relative_error": abs(fd_val.value - pairing) / denom,
    }


# ---------------------------------------------------------------------------
# pointwise identities used as module invariants
# ---------------------------------------------------------------------------

def volume_derivative_defect(atlas: ChartAtlas, v: VariationField,
                             x: np.ndarray, step: float = 1e-4) -> float:
    """Pointwise residual of d/dt sqrt|det g_t| = (Tr_g B / 2) sqrt|det g|."""
    x = np.asarray(x, dtype=float)
    dens = lambda a: np.sqrt(np.abs(np.linalg.det(a.metric_at(x))))
    lhs = (dens(deform(atlas, v, step)) - dens(deform(atlas, v, -step))) / (2 * step)
    g = atlas.metric_at(x)
    B = v.b_field.eval(x)
    tr = np.einsum("...kl,...lk->...", np.linalg.inv(g), B)
    return float(np.max(np.abs(lhs - 0.5 * tr * dens(atlas))))


def div_x_identity_defect(atlas: ChartAtlas, v: VariationField,
                          X: CoefficientField, x: np.ndarray,
                          cfg: JetConfig = JetConfig(),
                          step: float = 1e-4) -> float:
    """Pointwise residual of d/dt(div X) = X(Tr_g B)/2 for t-independent X."""
    x = np.asarray(x, dtype=float)

    def divx(a):
        return div_of_vector(FrameData(a, x, cfg), lambda d: X.eval(d.x))

    lhs = (divx(deform(atlas, v, step)) - divx(deform(atlas, v, -step))) / (2 * step)

    def tr_field(y):
        g = atlas.metric_at(y)
        B = v.b_field.eval(y)
        return np.einsum("...kl,...lk->...", np.linalg.inv(g), B)

    Xv = X.eval(x)
    hx = 1e-5
    rhs = np.zeros(x.shape[:-1])
    for k in range(atlas.dim_total):
        dx = np.zeros_like(x)
        dx[..., k] = hx
        rhs = rhs + Xv[..., k] * (tr_field(x + dx) - tr_field(x - dx)) / (2 * hx)
    return float(np.max(np.abs(lhs - 0.5 * rhs)))


def div_variation_defect(atlas: ChartAtlas, v: VariationField,
                         X: CoefficientField,
                         grid: QuadratureGrid = QuadratureGrid(),
                         cfg: JetConfig = JetConfig(),
                         step: float = 1e-3) -> float:
    """Integrated residual of the deformation-stability of the divergence
    theorem: d/dt of the closed-chart integral of (div X) dvol must vanish,
    because the integrand stays a divergence for every metric along the
    path."""
    d = fd_action_derivative(atlas, "div_integral", v, grid, cfg,
                             step=step, aux_field=X)
    return abs(d.value)
