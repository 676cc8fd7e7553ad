"""Euler-Lagrange residual systems for the mixed Einstein-Hilbert action.

Every first-order criticality condition of the pair (metric, contorsion) is
evaluated as a named :class:`ResidualBlock`: a tensor in adapted-frame
components together with its sup norm, an optional best-fit multiple of
g^perp / g^top (volume-preserving mode) and a pass/fail verdict.  The module
covers

* the mixed Ricci tensor, its trace identity and the n = 1 space-time form,
* the Einstein-type equation of the metric with contorsion frozen,
* the algebraic system for arbitrary contorsion variations (vacuum spin),
* the systems for variations inside the statistical / metric / adapted /
  semi-symmetric classes, including the explicit semi-symmetric mixed Ricci
  tensor.

Nothing here solves the systems; the functions only evaluate residuals of a
supplied pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionGuard, NotMetric, NotSemiSymmetric, NotStatistical
from .extrinsic import FrameData, _quad_block, mixed_tensors, upsilon
from .geometry_core import ChartAtlas, JetConfig
from .invariants import (
    ContorsionOps,
    Q_value,
    div_of_t12,
    div_of_vector,
    recover_semi_symmetric_U,
    s_mix,
    partial_ricci,
)

__all__ = [
    "ResidualBlock",
    "ConnectionClassFlags",
    "MixedRicci",
    "mixed_ricci",
    "space_time_ricci",
    "einstein_mixed_residual",
    "contorsion_el_residuals",
    "st_action_el_residuals",
    "statistical_criticality",
    "metric_connection_el",
    "semi_symmetric_el",
    "connection_class_flags",
]


# ---------------------------------------------------------------------------
# residual plumbing
# ---------------------------------------------------------------------------

@dataclass
class ResidualBlock:
    """One named residual tensor with its norm and verdict."""

    name: str
    tensor: np.ndarray
    sup_norm: float
    tolerance: float
    verdict: bool
    best_fit_lambda: Optional[float] = None

    @classmethod
    def from_tensor(cls, name: str, tensor: np.ndarray, tol: float = 1e-8,
                    lam: Optional[float] = None) -> "ResidualBlock":
        tensor = np.asarray(tensor, dtype=float)
        sup = float(np.max(np.abs(tensor))) if tensor.size else 0.0
        return cls(name=name, tensor=tensor, sup_norm=sup, tolerance=tol,
                   verdict=bool(sup < tol), best_fit_lambda=lam)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "sup_norm": self.sup_norm,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
        }
        if self.best_fit_lambda is not None:
            out["lambda"] = self.best_fit_lambda
        return out


@dataclass
class ConnectionClassFlags:
    is_metric: bool
    is_statistical: bool
    is_adapted: bool
    is_semi_symmetric: bool
    defects: dict = field(default_factory=dict)
    recovered_U: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        return {
            "is_metric": self.is_metric,
            "is_statistical": self.is_statistical,
            "is_adapted": self.is_adapted,
            "is_semi_symmetric": self.is_semi_symmetric,
            "defects": {k: float(v) for k, v in self.defects.items()},
        }


def connection_class_flags(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                           tol: float = 1e-9,
                           data: Optional[FrameData] = None) -> ConnectionClassFlags:
    fd = data if data is not None else FrameData(atlas, x, cfg)
    ops = ContorsionOps(fd)
    d = ops.class_defects()
    return ConnectionClassFlags(
        is_metric=d["metric"] < tol,
        is_statistical=d["statistical"] < tol,
        is_adapted=d["adapted"] < tol,
        is_semi_symmetric=d["semi_symmetric"] < tol,
        defects=d,
        recovered_U=recover_semi_symmetric_U(ops),
    )


# ---------------------------------------------------------------------------
# small frame-comp helpers
# ---------------------------------------------------------------------------

def _sym(S: np.ndarray) -> np.ndarray:
    return 0.5 * (S + np.swapaxes(S, -2, -1))


def _odot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """u^flat odot v^flat for lowered frame comps."""
    outer = np.einsum("...a,...b->...ab", u, v)
    return _sym(outer)


def _pair_vec(fd: FrameData, P: np.ndarray, v: np.ndarray) -> np.ndarray:
    """<P, v>(X,Y) = <P(X,Y), v>: contract the value slot with a vector."""
    return np.einsum("...c,...abc,...c->...ab", fd.eps, P, v)


def _top_part(fd: FrameData, v: np.ndarray) -> np.ndarray:
    out = v.copy()
    out[..., fd.n:] = 0.0
    return out


def _perp_part(fd: FrameData, v: np.ndarray) -> np.ndarray:
    out = v.copy()
    out[..., : fd.n] = 0.0
    return out


def _fit_lambda(fd: FrameData, T: np.ndarray, G: np.ndarray) -> float:
    """Least-squares coefficient of G in T (shared across a batch)."""
    num = fd.inner_t2(T, G)
    den = fd.inner_t2(G, G)
    return float(np.sum(num) / np.sum(den))


def _U_build(d: FrameData, part: Optional[str] = None) -> np.ndarray:
    """Coordinate comps of the semi-symmetric U recovered from the contorsion."""
    u = recover_semi_symmetric_U(ContorsionOps(d))
    if part == "top":
        u = _top_part(d, u)
    elif part == "perp":
        u = _perp_part(d, u)
    return d.vec_coord(u)


def ricci_frame(fd: FrameData) -> np.ndarray:
    """Ricci tensor of the Levi-Civita connection, frame comps."""
    ric = np.einsum("...l,...mllk->...km", fd.eps, fd.Rf)
    return _sym(ric)


# ---------------------------------------------------------------------------
# mixed Ricci tensor
# ---------------------------------------------------------------------------

@dataclass
class MixedRicci:
    block_perp: np.ndarray      # restriction to the orthogonal-distribution block
    block_V: np.ndarray         # mixed block
    block_top: np.ndarray       # tangent-distribution block
    ric: np.ndarray             # sum of the three blocks, frame comps
    s_D: np.ndarray             # trace (pointwise scalar)
    trace_residual: float       # |Tr ric - (S_mix + c div(H - Ht))|


def _delta_def_blocks(fd: FrameData, Z_build: Callable[[FrameData], np.ndarray]):
    """(delta~_Z, Def_perp Z, Def_top Z) for a frame-built vector field."""
    from .extrinsic import _nabla_Z_frame

    nz = _nabla_Z_frame(fd, lambda y: (lambda d: d.vec_coord(Z_build(d)))(fd.at(y)))
    n = fd.n
    mixed = np.zeros_like(nz)
    mixed[..., :n, n:] = nz[..., :n, n:]
    pp = np.zeros_like(nz)
    pp[..., n:, n:] = nz[..., n:, n:]
    tt = np.zeros_like(nz)
    tt[..., :n, :n] = nz[..., :n, :n]
    return _sym(mixed), _sym(pp), _sym(tt)


def _ric_perp_block(fd: FrameData, div_coeff: np.ndarray) -> np.ndarray:
    """The orthogonal-block of the mixed Ricci tensor, with the div-term
    coefficient supplied by the caller (scalar multiplying g^perp)."""
    r, _ = partial_ricci(fd.atlas, fd.x, fd.cfg, data=fd, with_residual=False)
    ht_Ht = np.einsum("...c,...ijc,...c->...ij", fd.eps, fd.htF, fd.Htc)
    Afl_d, Tfl_d, psi_d, kap_d = _quad_block(fd, dual=True)
    _, _, psi, _ = _quad_block(fd, dual=False)
    _, defp, _ = _delta_def_blocks(fd, lambda d: d.Hc)
    HH = _odot(fd.Hc, fd.Hc)
    ups_hh = upsilon(fd.hF, fd.hF, fd.eps)
    ups_TT = upsilon(fd.TF, fd.TF, fd.eps)
    block = (r - ht_Ht + Afl_d - Tfl_d + psi - defp + kap_d
             + HH - 0.5 * ups_hh - 0.5 * ups_TT
             + div_coeff[..., None, None] * fd.g_perp())
    mask = np.zeros((fd.m, fd.m))
    mask[fd.n:, fd.n:] = 1.0
    return block * mask


def _ric_top_block(fd: FrameData, div_coeff: np.ndarray) -> np.ndarray:
    """Dual block: swap the roles of the two distributions."""
    ei = fd.eps[..., fd.n:]
    n, m = fd.n, fd.m
    r = np.zeros(fd.x.shape[:-1] + (m, m))
    r[..., :n, :n] = np.einsum("...i,...biia->...ab", ei, fd.Rf[..., :n, n:, n:, :n])
    h_H = np.einsum("...c,...abc,...c->...ab", fd.eps, fd.hF, fd.Hc)
    Afl, Tfl, psi, kap = _quad_block(fd, dual=False)
    _, _, psi_d, _ = _quad_block(fd, dual=True)
    _, _, deft = _delta_def_blocks(fd, lambda d: d.Htc)
    HH = _odot(fd.Htc, fd.Htc)
    ups_hh = upsilon(fd.htF, fd.htF, fd.eps)
    ups_TT = upsilon(fd.TtF, fd.TtF, fd.eps)
    block = (r - h_H + Afl - Tfl + psi_d - deft + kap
             + HH - 0.5 * ups_hh - 0.5 * ups_TT
             + div_coeff[..., None, None] * fd.g_top())
    mask = np.zeros((m, m))
    mask[:n, :n] = 1.0
    return block * mask


def _ric_V_block(fd: FrameData) -> np.ndarray:
    """The mixed (V) block of the mixed Ricci tensor."""
    mt = mixed_tensors(fd.atlas, fd.x, Z_field=lambda y: fd.at(y).vec_coord(fd.at(y).Hc),
                       cfg=fd.cfg, data=fd)
    alpha, theta, alpha_d, theta_d = mt.alpha, mt.theta, mt.alpha_dual, mt.theta_dual
    theta_Ht = _pair_vec(fd, theta, fd.Htc)
    div_at = div_of_t12(fd, lambda d: (lambda m_: m_.alpha - m_.theta_dual)(
        mixed_tensors(d.atlas, d.x, cfg=d.cfg, data=d)))
    div_at = fd.restrict_V(div_at, rank=2)
    td_ta_H = _pair_vec(fd, theta_d - alpha_d, fd.Hc)
    HHt = _odot(fd.Hc, fd.Htc)
    block = (-4.0 * theta_Ht - 2.0 * div_at - 2.0 * td_ta_H - 2.0 * HHt
             + 2.0 * mt.delta_Z
             - 4.0 * upsilon(alpha_d, theta, fd.eps)
             - 2.0 * upsilon(alpha, alpha_d, fd.eps)
             - 2.0 * upsilon(theta, theta_d, fd.eps))
    return fd.restrict_V(_sym(block), rank=2)


def mixed_ricci(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                data: Optional[FrameData] = None) -> MixedRicci:
    """The three-block mixed Ricci tensor and its trace.

    For n + p = 2 the terms with the n+p-2 denominator are set to zero (they
    carry vanishing numerators in that dimension)."""
    fd = data if data is not None else FrameData(atlas, x, cfg)
    n, p = fd.n, fd.p
    if n + p > 2:
        divHtH = div_of_vector(fd, lambda d: d.vec_coord(d.Htc - d.Hc))
        c_perp = -(n - 1) / (p + n - 2) * divHtH
        c_top = (p - 1) / (p + n - 2) * divHtH
    else:
        divHtH = np.zeros(fd.x.shape[:-1])
        c_perp = np.zeros(fd.x.shape[:-1])
        c_top = np.zeros(fd.x.shape[:-1])
    bp = _ric_perp_block(fd, c_perp)
    bt = _ric_top_block(fd, c_top)
    bv = _ric_V_block(fd)
    ric = bp + bt + bv
    tr = np.einsum("...a,...aa->...", fd.eps, ric)
    sm = s_mix(atlas, fd.x, cfg, data=fd)
    if n + p > 2:
        s_D = sm + (p - n) / (n + p - 2) * divHtH
    else:
        s_D = sm
    return MixedRicci(block_perp=bp, block_V=bv, block_top=bt, ric=ric, s_D=s_D,
                      trace_residual=float(np.max(np.abs(tr - s_D))))


def space_time_ricci(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                     data: Optional[FrameData] = None) -> MixedRicci:
    """The n = 1 (unit-normal) form of the mixed Ricci tensor, assembled from
    the shape operator of the orthogonal distribution; raises DimensionGuard
    unless the tangent distribution is one-dimensional."""
    fd = data if data is not None else FrameData(atlas, x, cfg)
    n, m = fd.n, fd.m
    if n != 1:
        raise DimensionGuard("the space-time form needs a line field")
    epsN = fd.eps[..., 0]
    base = fd.x.shape[:-1]
    # operators of the orthogonal distribution with respect to the normal
    At = fd.htF[..., 1:, 1:, 0]              # <Atilde_N Ee_i, Ee_j>
    Tt = fd.TtF[..., 1:, 1:, 0]
    eps_p = fd.eps[..., 1:]
    comp = lambda P, Q: np.einsum("...k,...ik,...kj->...ij", eps_p, P, Q)
    # Rf[sigma, N, N, rho] = <R_{N, e_rho} N, e_sigma>
    RN = np.swapaxes(fd.Rf[..., 1:, 0, 0, 1:], -2, -1)
    tau1 = np.einsum("...i,...ii->...", eps_p, At)
    hsc = epsN[..., None, None] * At
    _, defp, _ = _delta_def_blocks(fd, lambda d: d.Hc)
    bp = np.zeros(base + (m, m))
    bp[..., 1:, 1:] = (epsN[..., None, None]
                       * (RN + comp(At, At) - comp(Tt, Tt) + comp(At, Tt) - comp(Tt, At))
                       + np.einsum("...i,...j->...ij", fd.Hc[..., 1:], fd.Hc[..., 1:])
                       - tau1[..., None, None] * hsc
                       - defp[..., 1:, 1:])
    # V block: Ric(Ee_i, N) = (div^perp Ttilde^sharp_N)(Ee_i) + 2 <Ttilde^sharp_N H, Ee_i>
    nTt = div_of_t12(fd, lambda d: _tsharpN_12(d), part="perp")
    TtH = np.einsum("...k,...ik,...k->...i",
                    eps_p, Tt, fd.Hc[..., 1:])
    bv = np.zeros(base + (m, m))
    bv[..., 1:, 0] = nTt[..., 1:, 0] + 2.0 * TtH
    bv[..., 0, 1:] = bv[..., 1:, 0]
    # NN block
    ric = ricci_frame(fd)
    Tt_norm = fd.inner_t12(fd.TtF, fd.TtF)
    divH = div_of_vector(fd, lambda d: d.vec_coord(d.Hc))
    bt = np.zeros(base + (m, m))
    bt[..., 0, 0] = epsN * ric[..., 0, 0] - 2.0 * Tt_norm - divH
    tr = np.einsum("...a,...aa->...", fd.eps, bp + bv + bt)
    s_D = epsN * ric[..., 0, 0] + div_of_vector(
        fd, lambda d: d.vec_coord(_spacetime_vec(d)))
    return MixedRicci(block_perp=bp, block_V=bv, block_top=bt, ric=bp + bv + bt,
                      s_D=s_D, trace_residual=float(np.max(np.abs(tr - s_D))))


def _spacetime_vec(d: FrameData) -> np.ndarray:
    eps_p = d.eps[..., 1:]
    tau1 = np.einsum("...i,...ii->...", eps_p, d.htF[..., 1:, 1:, 0])
    v = -d.Hc.copy()
    v[..., 0] += d.eps[..., 0] * tau1 * d.eps[..., 0]
    return v


def _tsharpN_12(d: FrameData) -> np.ndarray:
    """(1,2)-tensor (X, Y) -> <Ttilde^sharp_N X^perp, Y^perp> e_value with the
    normal in the last Weingarten slot; value slot arranged so the full-m
    array has entries P[i, j, 0-free] = Ttilde comps."""
    m = d.m
    out = np.zeros(d.x.shape[:-1] + (m, m, m))
    # value must be the vector Ttilde^sharp_N Ee_i so that tracing the
    # derivative against the perp frame yields div^perp; store
    # P[lam, i, j] = delta(lam free)  -- we only need the (0,2) result of
    # div, so encode P(Ee_i) = Ttilde^sharp_N Ee_i as P[i, 0, j]:
    out[..., 1:, 0, 1:] = d.TtF[..., 1:, 1:, 0]
    return out


# ---------------------------------------------------------------------------
# Einstein-form residuals (metric variations, contorsion frozen)
# ---------------------------------------------------------------------------

def einstein_mixed_residual(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                            tol: float = 1e-8) -> list[ResidualBlock]:
    """Residuals of the vacuum Einstein-type equation with the mixed Ricci
    tensor, and of the volume-preserving criticality system for orthogonal
    metric variations (and its dual)."""
    fd = FrameData(atlas, x, cfg)
    mr = mixed_ricci(atlas, x, cfg, data=fd)
    g_frame = np.zeros(fd.x.shape[:-1] + (fd.m, fd.m))
    idx = np.arange(fd.m)
    g_frame[..., idx, idx] = fd.eps
    E = mr.ric - 0.5 * mr.s_D[..., None, None] * g_frame
    lam = -_fit_lambda(fd, E, g_frame)
    blocks = [
        ResidualBlock.from_tensor("einstein-mixed", E + lam * g_frame, tol, lam=lam),
        ResidualBlock.from_tensor("mixed-ricci-trace",
                                  np.asarray(mr.trace_residual), 1e-7),
    ]
    # volume-preserving system for orthogonal-block variations
    n, p = fd.n, fd.p
    divHtH = div_of_vector(fd, lambda d: d.vec_coord(d.Htc - d.Hc))
    sm = s_mix(atlas, fd.x, cfg, data=fd)
    coeff = -0.5 * (sm + divHtH)
    lhs = _ric_perp_block(fd, np.zeros_like(sm)) + coeff[..., None, None] * fd.g_perp()
    lamp = _fit_lambda(fd, lhs, fd.g_perp())
    blocks.append(ResidualBlock.from_tensor(
        "metric-el-perp", lhs - lamp * fd.g_perp(), tol, lam=lamp))
    blocks.append(ResidualBlock.from_tensor("metric-el-mixed", _ric_V_block(fd), tol))
    coeff_t = -0.5 * (sm - divHtH)
    lhs_t = _ric_top_block(fd, np.zeros_like(sm)) + coeff_t[..., None, None] * fd.g_top()
    lamt = _fit_lambda(fd, lhs_t, fd.g_top())
    blocks.append(ResidualBlock.from_tensor(
        "metric-el-top", lhs_t - lamt * fd.g_top(), tol, lam=lamt))
    return blocks


# ---------------------------------------------------------------------------
# arbitrary contorsion variations (vacuum spin tensor)
# ---------------------------------------------------------------------------

def contorsion_el_residuals(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                            tol: float = 1e-9,
                            s_field: Optional[np.ndarray] = None,
                            data: Optional[FrameData] = None) -> list[ResidualBlock]:
    """The eight-block algebraic system for unconstrained contorsion
    variations, plus its vacuum reduction (umbilicity and ten linear
    equations, with the dimension guards applied exactly).

    ``s_field`` is an optional spin-tensor hook in all-lowered frame comps
    s[mu, nu, c]; it defaults to zero (vacuum).
    """
    fd = data if data is not None else FrameData(atlas, x, cfg)
    ops = ContorsionOps(fd)
    K, Ks = ops.K, ops.K_star
    n, p, m = fd.n, fd.p, fd.m
    base = fd.x.shape[:-1]
    eps = fd.eps
    s = np.zeros(base + (m, m, m)) if s_field is None else np.asarray(s_field, float)
    sl = lambda v, k: v[..., :n] if k == "t" else v[..., n:]
    h, T, ht, Tt = fd.hF, fd.TF, fd.htF, fd.TtF
    Hc, Htc = fd.Hc, fd.Htc
    gt = np.einsum("...a,ab->...ab", eps[..., :n], np.eye(n))
    gp = np.einsum("...i,ij->...ij", eps[..., n:], np.eye(p))

    def outer_g(v, g, order):
        # order "cZ": v[..c] placed on the 3rd index etc.
        if order == "Zbc":   # <v, Z> <X, Y> with pattern res[a,b,c]
            return np.einsum("...c,...ab->...abc", v, g)
        if order == "Ybc":   # <v, Y> <X, Z>
            return np.einsum("...b,...ac->...abc", v, g)
        raise ValueError(order)

    blocks: list[ResidualBlock] = []
    # (1): X,Y,Z tangent
    e1 = (outer_g(sl(ops.tr_perp_star - Htc, "t"), gt, "Zbc")
          + outer_g(sl(ops.tr_perp + Htc, "t"), gt, "Ybc")
          + 0.5 * s[..., :n, :n, :n])
    blocks.append(ResidualBlock.from_tensor("contorsion-el-1", e1, tol))
    # (2): U,V,W orthogonal
    e2 = (outer_g(sl(ops.tr_top_star - Hc, "p"), gp, "Zbc")
          + outer_g(sl(ops.tr_top + Hc, "p"), gp, "Ybc")
          + 0.5 * s[..., n:, n:, n:])
    blocks.append(ResidualBlock.from_tensor("contorsion-el-2", e2, tol))
    # (3): res[a,b,i] = <tr^perp T* + H, Ee_i><E_a,E_b> - <(A_i - Tsharp_i + T_i)E_a, E_b>
    e3 = (np.einsum("...i,...ab->...abi", sl(ops.tr_perp_star + Hc, "p"), gt)
          - np.einsum("...abi->...abi", h[..., :n, :n, n:])
          + T[..., :n, :n, n:]
          - np.einsum("...iab->...abi", K[..., n:, :n, :n])
          + 0.5 * s[..., :n, :n, n:])
    blocks.append(ResidualBlock.from_tensor("contorsion-el-3", e3, tol))
    # (4): res[i,j,a]
    e4 = (np.einsum("...a,...ij->...ija", sl(ops.tr_top_star + Htc, "t"), gp)
          - np.einsum("...ija->...ija", ht[..., n:, n:, :n])
          + Tt[..., n:, n:, :n]
          - np.einsum("...aij->...ija", K[..., :n, n:, n:])
          + 0.5 * s[..., n:, n:, :n])
    blocks.append(ResidualBlock.from_tensor("contorsion-el-4", e4, tol))
    # (5): res[a,i,b] = <tr^perp T - H, Ee_i><E_a,E_b> + <(A_i + Tsharp_i - T_i)E_b, E_a>
    e5 = (np.einsum("...i,...ab->...aib", sl(ops.tr_perp - Hc, "p"), gt)
          + np.einsum("...bai->...aib", h[..., :n, :n, n:])
          + np.einsum("...bai->...aib", T[..., :n, :n, n:])
          - np.einsum("...iba->...aib", K[..., n:, :n, :n])
          + 0.5 * s[..., :n, n:, :n])
    blocks.append(ResidualBlock.from_tensor("contorsion-el-5", e5, tol))
    # (6): res[i,a,j]
    e6 = (np.einsum("...a,...ij->...iaj", sl(ops.tr_top - Htc, "t"), gp)
          + np.einsum("...jia->...iaj", ht[..., n:, n:, :n])
          + np.einsum("...jia->...iaj", Tt[..., n:, n:, :n])
          - np.einsum("...aji->...iaj", K[..., :n, n:, n:])
          + 0.5 * s[..., n:, :n, n:])
    blocks.append(ResidualBlock.from_tensor("contorsion-el-6", e6, tol))
    # (7): res[a,i,j] = 2<Ttilde^sharp_a Ee_i, Ee_j> + <T_i Ee_j + T*_j Ee_i, E_a>
    e7 = (2.0 * np.einsum("...ija->...aij", Tt[..., n:, n:, :n])
          + np.einsum("...ija->...aij", K[..., n:, n:, :n])
          + np.einsum("...jia->...aij", Ks[..., n:, n:, :n])
          - 0.5 * s[..., :n, n:, n:])
    blocks.append(ResidualBlock.from_tensor("contorsion-el-7", e7, tol))
    # (8): res[i,a,b]
    e8 = (2.0 * np.einsum("...abi->...iab", T[..., :n, :n, n:])
          + np.einsum("...abi->...iab", K[..., :n, :n, n:])
          + np.einsum("...bai->...iab", Ks[..., :n, :n, n:])
          - 0.5 * s[..., n:, :n, :n])
    blocks.append(ResidualBlock.from_tensor("contorsion-el-8", e8, tol))

    # vacuum reduction: umbilicity + ten linear equations
    umb_t = h - np.einsum("...ab,...c->...abc", fd.g_top(), Hc) / n
    umb_p = ht - np.einsum("...ab,...c->...abc", fd.g_perp(), Htc) / p
    blocks.append(ResidualBlock.from_tensor("vacuum-umbilical-top", umb_t, tol))
    blocks.append(ResidualBlock.from_tensor("vacuum-umbilical-perp", umb_p, tol))
    r1 = (K[..., n:, n:, :n]
          + np.einsum("...jia->...ija", Ks[..., n:, n:, :n])
          + 2.0 * Tt[..., n:, n:, :n])
    blocks.append(ResidualBlock.from_tensor("vacuum-1", r1, tol))
    if n > 1:
        blocks.append(ResidualBlock.from_tensor(
            "vacuum-2", np.stack([sl(ops.tr_perp_star - Htc, "t"),
                                  sl(ops.tr_perp + Htc, "t")], axis=-1), tol))
    r3 = K[..., n:, :n, :n] - Ks[..., n:, :n, :n] \
        - 2.0 * np.einsum("...abi->...iab", T[..., :n, :n, n:])
    blocks.append(ResidualBlock.from_tensor("vacuum-3", r3, tol))
    tr_pp = ops.tr_perp + ops.tr_perp_star
    scal = tr_pp[..., n:]
    r4 = (K[..., n:, :n, :n] + Ks[..., n:, :n, :n]
          - np.einsum("...i,...ab->...iab", scal, gt))
    blocks.append(ResidualBlock.from_tensor("vacuum-4", r4, tol))
    r5 = sl(ops.tr_perp - ops.tr_perp_star, "p") - (2.0 - 2.0 / n) * sl(Hc, "p")
    blocks.append(ResidualBlock.from_tensor("vacuum-5", r5, tol))
    r6 = (K[..., :n, :n, n:]
          + np.einsum("...bai->...abi", Ks[..., :n, :n, n:])
          + 2.0 * T[..., :n, :n, n:])
    blocks.append(ResidualBlock.from_tensor("vacuum-6", r6, tol))
    if p > 1:
        blocks.append(ResidualBlock.from_tensor(
            "vacuum-7", np.stack([sl(ops.tr_top_star - Hc, "p"),
                                  sl(ops.tr_top + Hc, "p")], axis=-1), tol))
    r8 = K[..., :n, n:, n:] - Ks[..., :n, n:, n:] \
        - 2.0 * np.einsum("...ija->...aij", Tt[..., n:, n:, :n])
    blocks.append(ResidualBlock.from_tensor("vacuum-8", r8, tol))
    tr_tt = ops.tr_top + ops.tr_top_star
    scal_t = tr_tt[..., :n]
    r9 = (K[..., :n, n:, n:] + Ks[..., :n, n:, n:]
          - np.einsum("...a,...ij->...aij", scal_t, gp))
    blocks.append(ResidualBlock.from_tensor("vacuum-9", r9, tol))
    r10 = sl(ops.tr_top - ops.tr_top_star, "t") - (2.0 - 2.0 / p) * sl(Htc, "t")
    blocks.append(ResidualBlock.from_tensor("vacuum-10", r10, tol))
    return blocks


# ---------------------------------------------------------------------------
# the algebraic S_T action: metric-variation coefficients
# ---------------------------------------------------------------------------

def s_T_variation_coefficients(fd: FrameData, ops: Optional[ContorsionOps] = None
                               ) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient arrays of B(Ee_i, Ee_j) and B(Ee_i, E_b) in the first
    variation of 2 S_T under metric variations that fix the tangent block.

    Returns (coeff_pp, coeff_V) with coeff_pp of shape (p, p) (not yet
    symmetrized) and coeff_V of shape (p, n).
    """
    if ops is None:
        ops = ContorsionOps(fd)
    K, Ks = ops.K, ops.K_star
    n = fd.n
    eps = fd.eps
    ea, ei = eps[..., :n], eps[..., n:]
    trt, trts = ops.tr_top, ops.tr_top_star
    trp = ops.tr_perp
    inner = fd.inner_vec
    # coeff_pp[i,j]: 1/2 ( <tr^top T, T*_i Ee_j - T*_j Ee_i>
    #                     - <T_j Ee_i + T_i Ee_j, tr^top T*>
    #                     + 2 <T*_j E_a, T_a Ee_i> ), with (T*_i Ee_j) = Ks[i, j, :]
    A1 = (np.einsum("...n,...n,...ijn->...ij", eps, trt, Ks[..., n:, n:, :])
          - np.einsum("...n,...n,...jin->...ij", eps, trt, Ks[..., n:, n:, :]))
    A2 = (np.einsum("...n,...jin,...n->...ij", eps, K[..., n:, n:, :], trts)
          + np.einsum("...n,...ijn,...n->...ij", eps, K[..., n:, n:, :], trts))
    A3 = 2.0 * np.einsum("...a,...n,...jan,...ain->...ij",
                         ea, eps, Ks[..., n:, :n, :], K[..., :n, n:, :])
    coeff_pp = 0.5 * (A1 - A2 + A3)
    # coeff_V[i,b]:
    B1 = np.einsum("...n,...n,...bin->...ib", eps, ops.tr_perp - trt, Ks[..., :n, n:, :])
    B2 = np.einsum("...n,...bin,...n->...ib", eps, K[..., :n, n:, :], trts) \
        + np.einsum("...n,...ibn,...n->...ib", eps, K[..., n:, :n, :], trts)
    B3 = np.einsum("...a,...n,...ain,...ban->...ib", ea, eps,
                   Ks[..., :n, n:, :], K[..., :n, :n, :])
    B4 = np.einsum("...a,...n,...ban,...ain->...ib", ea, eps,
                   Ks[..., :n, :n, :], K[..., :n, n:, :])
    B5 = np.einsum("...a,...n,...ian,...abn->...ib", ea, eps,
                   Ks[..., n:, :n, :], K[..., :n, :n, :])
    B6 = np.einsum("...j,...n,...jin,...bjn->...ib", ei, eps,
                   Ks[..., n:, n:, :], K[..., :n, n:, :])
    coeff_V = B1 - B2 + B3 + B4 + B5 - B6
    return coeff_pp, coeff_V


def st_action_el_residuals(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                           tol: float = 1e-8,
                           data: Optional[FrameData] = None) -> list[ResidualBlock]:
    """Criticality system of the purely algebraic contorsion-curvature action
    under all metric and contorsion variations."""
    fd = data if data is not None else FrameData(atlas, x, cfg)
    ops = ContorsionOps(fd)
    K, Ks = ops.K, ops.K_star
    n, p = fd.n, fd.p
    eps = fd.eps
    ea, ei = eps[..., :n], eps[..., n:]
    blocks: list[ResidualBlock] = []
    coeff_pp, coeff_V = s_T_variation_coefficients(fd, ops)
    blocks.append(ResidualBlock.from_tensor("st-el-adapted", _sym(coeff_pp), tol))
    blocks.append(ResidualBlock.from_tensor("st-el-mixed", coeff_V, tol))
    # dual of the orthogonal-block equation (swap the distributions)
    D1 = (np.einsum("...n,...n,...abn->...ab", eps, ops.tr_perp, Ks[..., :n, :n, :])
          - np.einsum("...n,...n,...ban->...ab", eps, ops.tr_perp, Ks[..., :n, :n, :]))
    D2 = (np.einsum("...n,...ban,...n->...ab", eps, K[..., :n, :n, :], ops.tr_perp_star)
          + np.einsum("...n,...abn,...n->...ab", eps, K[..., :n, :n, :], ops.tr_perp_star))
    D3 = 2.0 * np.einsum("...i,...n,...bin,...ain->...ab",
                         ei, eps, Ks[..., :n, n:, :], K[..., n:, :n, :])
    blocks.append(ResidualBlock.from_tensor(
        "st-el-adapted-dual", _sym(0.5 * (D1 - D2 + D3)), tol))
    # algebraic system from contorsion variations
    e34a = (Ks[..., :n, :n, n:]
            + np.einsum("...ban->...abn", K[..., :n, :n, n:]))
    blocks.append(ResidualBlock.from_tensor("st-el-34a", e34a, tol))
    e34b = (Ks[..., n:, n:, :n] + np.einsum("...jin->...ijn", K[..., n:, n:, :n]))
    blocks.append(ResidualBlock.from_tensor("st-el-34b", e34b, tol))
    gt = np.einsum("...a,ab->...ab", ea, np.eye(n))
    gp = np.einsum("...i,ij->...ij", ei, np.eye(p))
    e34c = (np.einsum("...ac,...b->...abc", gt, ops.tr_perp[..., :n])
            + np.einsum("...ab,...c->...abc", gt, ops.tr_perp_star[..., :n]))
    blocks.append(ResidualBlock.from_tensor("st-el-34c", e34c, tol))
    e34d = (np.einsum("...ij,...k->...ijk", gp, ops.tr_top_star[..., n:])
            + np.einsum("...ik,...j->...ijk", gp, ops.tr_top[..., n:]))
    blocks.append(ResidualBlock.from_tensor("st-el-34d", e34d, tol))
    scal_p = ops.tr_perp[..., n:]
    e34e = K[..., n:, :n, :n] - np.einsum("...i,...ab->...iab", scal_p, gt)
    blocks.append(ResidualBlock.from_tensor("st-el-34e", e34e, tol))
    scal_t = ops.tr_top_star[..., :n]
    e34f = K[..., :n, n:, n:] - np.einsum("...a,...ij->...aij", scal_t, gp)
    blocks.append(ResidualBlock.from_tensor("st-el-34f", e34f, tol))
    e34g = np.concatenate([
        (ops.tr_perp - ops.tr_perp_star)[..., n:],
        (ops.tr_top - ops.tr_top_star)[..., :n]], axis=-1)
    blocks.append(ResidualBlock.from_tensor("st-el-34g", e34g, tol))
    if n > 1 and p > 1:
        big = np.concatenate([
            ops.tr_perp[..., :n], ops.tr_perp_star[..., :n],
            ops.tr_top[..., n:], ops.tr_top_star[..., n:]], axis=-1)
        blocks.append(ResidualBlock.from_tensor("st-el-traces-large-dim", big, tol))
    return blocks


# ---------------------------------------------------------------------------
# statistical criticality
# ---------------------------------------------------------------------------

def statistical_criticality(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                            tol: float = 1e-8,
                            class_tol: float = 1e-9) -> list[ResidualBlock]:
    """Criticality of a statistical pair for the affine action under
    volume-preserving metric variations and unconstrained contorsion
    variations: integrability, trace and invariance conditions, mean-curvature
    conditions, umbilicity, and the three lambda-equations with one shared
    best-fit lambda."""
    fd = FrameData(atlas, x, cfg)
    ops = ContorsionOps(fd)
    if ops.class_defects()["statistical"] >= class_tol:
        raise NotStatistical("contorsion is not statistical within tolerance")
    n, p = fd.n, fd.p
    K = ops.K
    blocks = [
        ResidualBlock.from_tensor("stat-1-integrable",
                                  np.stack([np.max(np.abs(fd.TF)), np.max(np.abs(fd.TtF))]),
                                  tol),
        ResidualBlock.from_tensor("stat-2-traces",
                                  np.concatenate([ops.tr_top[..., :n],
                                                  ops.tr_perp[..., n:]], axis=-1), tol),
        ResidualBlock.from_tensor("stat-3-top-invariant", K[..., :n, :n, n:], tol),
        ResidualBlock.from_tensor("stat-4-perp-invariant", K[..., n:, n:, :n], tol),
    ]
    if n > 1:
        blocks.append(ResidualBlock.from_tensor("stat-5-Ht-zero", fd.Htc, tol))
    if p > 1:
        blocks.append(ResidualBlock.from_tensor("stat-6-H-zero", fd.Hc, tol))
    umb_t = fd.hF - np.einsum("...ab,...c->...abc", fd.g_top(), fd.Hc) / n
    umb_p = fd.htF - np.einsum("...ab,...c->...abc", fd.g_perp(), fd.Htc) / p
    blocks.append(ResidualBlock.from_tensor(
        "stat-7-umbilical", np.stack([np.max(np.abs(umb_t)), np.max(np.abs(umb_p))]), tol))
    # lambda-equations
    H2 = fd.inner_vec(fd.Hc, fd.Hc)
    Ht2 = fd.inner_vec(fd.Htc, fd.Htc)
    divHt = div_of_vector(fd, lambda d: d.vec_coord(d.Htc))
    divH = div_of_vector(fd, lambda d: d.vec_coord(d.Hc))
    HH = _odot(fd.Hc, fd.Hc)
    HtHt = _odot(fd.Htc, fd.Htc)
    cn, cp = (n - 1) / n, (p - 1) / p
    lhs1 = (cn * HH
            - 0.5 * (cn * H2 + cp * Ht2 + 2 * cp * divHt)[..., None, None] * fd.g_perp())
    lhs3 = (cp * HtHt
            - 0.5 * (cp * Ht2 + cn * H2 + 2 * cn * divH)[..., None, None] * fd.g_top())
    gperp, gtop = fd.g_perp(), fd.g_top()
    num = np.sum(fd.inner_t2(lhs1, gperp) + fd.inner_t2(lhs3, gtop))
    den = np.sum(fd.inner_t2(gperp, gperp) + fd.inner_t2(gtop, gtop))
    lam = float(num / den)
    blocks.append(ResidualBlock.from_tensor(
        "stat-lambda-perp", lhs1 - lam * gperp, tol, lam=lam))
    mt = mixed_tensors(atlas, fd.x, Z_field=lambda y: fd.at(y).vec_coord(fd.at(y).Hc),
                       cfg=cfg, data=fd)
    lhs2 = cn * (mt.delta_Z - cp * _odot(fd.Hc, fd.Htc))
    blocks.append(ResidualBlock.from_tensor("stat-lambda-mixed", lhs2, tol))
    blocks.append(ResidualBlock.from_tensor(
        "stat-lambda-top", lhs3 - lam * gtop, tol, lam=lam))
    return blocks


# ---------------------------------------------------------------------------
# metric-class criticality
# ---------------------------------------------------------------------------

def metric_connection_el(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                         tol: float = 1e-8,
                         class_tol: float = 1e-9,
                         volume_preserving: bool = True,
                         adapted: Optional[bool] = None) -> list[ResidualBlock]:
    """Criticality blocks for a metric-class contorsion: the quadratic-action
    conditions, the linear system for contorsion criticality, the
    orthogonal-variation metric equation (with best-fit lambda in
    volume-preserving mode), its trace, the adapted-connection reductions and
    the umbilical closed form of the potential Q."""
    fd = FrameData(atlas, x, cfg)
    ops = ContorsionOps(fd)
    defects = ops.class_defects()
    if defects["metric"] >= class_tol:
        raise NotMetric("contorsion is not metric-compatible within tolerance")
    if adapted is None:
        adapted = defects["adapted"] < class_tol
    n, p = fd.n, fd.p
    K, Ks = ops.K, ops.K_star
    h, T, ht, Tt = fd.hF, fd.TF, fd.htF, fd.TtF
    blocks: list[ResidualBlock] = []
    # quadratic-action criticality (metric class)
    q1 = np.stack([
        np.max(np.abs(np.einsum("...abi->...abi", Ks[..., :n, :n, n:])
                      + np.einsum("...ban->...abn", K[..., :n, :n, n:]))),
        np.max(np.abs(K[..., n:, n:, :n] + np.einsum("...jin->...ijn", Ks[..., n:, n:, :n]))),
    ])
    blocks.append(ResidualBlock.from_tensor("metricT-quad-a", q1, tol))
    blocks.append(ResidualBlock.from_tensor(
        "metricT-quad-b",
        np.concatenate([ops.tr_top[..., :n], ops.tr_perp[..., n:]], axis=-1), tol))
    blocks.append(ResidualBlock.from_tensor(
        "metricT-quad-c",
        np.stack([np.max(np.abs(K[..., :n, n:, n:])), np.max(np.abs(K[..., n:, :n, :n]))]),
        tol))
    if n > 1:
        blocks.append(ResidualBlock.from_tensor(
            "metricT-quad-d-top", ops.tr_perp[..., :n], tol))
    if p > 1:
        blocks.append(ResidualBlock.from_tensor(
            "metricT-quad-d-perp", ops.tr_top[..., n:], tol))
    eb, ec = fd.eps[..., :n], fd.eps[..., :n]
    ej = fd.eps[..., n:]
    quad_e = (np.einsum("...b,...j,...baj,...ijb->...ai",
                        eb, ej, K[..., :n, :n, n:], K[..., n:, n:, :n])
              + 2.0 * np.einsum("...b,...c,...abc,...cib->...ai",
                                eb, ec, K[..., :n, :n, :n], K[..., :n, n:, :n])
              - np.einsum("...j,...c,...ajc,...cij->...ai",
                          ej, ec, K[..., :n, n:, :n], K[..., :n, n:, n:])
              + np.einsum("...c,...c,...aic->...ai",
                          fd.eps[..., :n], ops.tr_perp[..., :n], K[..., :n, n:, :n]))
    blocks.append(ResidualBlock.from_tensor("metricT-quad-e", quad_e, tol))
    # linear system for full-action contorsion criticality
    c1 = (np.einsum("...jin->...ijn", K[..., n:, n:, :n])
          - K[..., n:, n:, :n] - 2.0 * Tt[..., n:, n:, :n])
    blocks.append(ResidualBlock.from_tensor("metric-crit-a", c1, tol))
    c2 = K[..., n:, :n, :n] - np.einsum("...abi->...iab", T[..., :n, :n, n:])
    blocks.append(ResidualBlock.from_tensor("metric-crit-b", c2, tol))
    c3 = ops.tr_perp[..., n:] - (n - 1) / n * fd.Hc[..., n:]
    blocks.append(ResidualBlock.from_tensor("metric-crit-c", c3, tol))
    c4 = (np.einsum("...ban->...abn", K[..., :n, :n, n:])
          - K[..., :n, :n, n:] - 2.0 * T[..., :n, :n, n:])
    blocks.append(ResidualBlock.from_tensor("metric-crit-d", c4, tol))
    c5 = K[..., :n, n:, n:] - np.einsum("...ija->...aij", Tt[..., n:, n:, :n])
    blocks.append(ResidualBlock.from_tensor("metric-crit-e", c5, tol))
    c6 = ops.tr_top[..., :n] - (p - 1) / p * fd.Htc[..., :n]
    blocks.append(ResidualBlock.from_tensor("metric-crit-f", c6, tol))
    if p > 1:
        blocks.append(ResidualBlock.from_tensor(
            "metric-crit-spec-perp", ops.tr_top[..., n:] + fd.Hc[..., n:], tol))
    if n > 1:
        blocks.append(ResidualBlock.from_tensor(
            "metric-crit-spec-top", ops.tr_perp[..., :n] + fd.Htc[..., :n], tol))
    # main metric equation for orthogonal variations
    HH = _odot(fd.Hc, fd.Hc)
    ups_TT = upsilon(T, T, fd.eps)
    _, Tfl_d, _, _ = _quad_block(fd, dual=True)
    divHt = div_of_vector(fd, lambda d: d.vec_coord(d.Htc))
    trtH = fd.inner_vec(ops.tr_top, fd.Hc)
    trpHt = fd.inner_vec(ops.tr_perp, fd.Htc)
    div_trp_top = div_of_vector(
        fd, lambda d: d.vec_coord(_top_part(d, ContorsionOps(d).tr_perp)))
    div_phi_top = div_of_t12(fd, lambda d: ContorsionOps(d).phi_top)
    vvec = 1.5 * fd.Htc - 0.5 * fd.Hc + 0.5 * _perp_part(fd, ops.tr_top)
    scal = ((3 * p - 3) / p * divHt - (2 * n - 1) / n * trtH
            - (2 * p - 1) / p * trpHt - div_trp_top)
    mask_pp = np.zeros((fd.m, fd.m))
    mask_pp[n:, n:] = 1.0
    lhs = (-(5 * n - 5) / n * HH - 0.5 * ups_TT + 2.0 * Tfl_d
           + scal[..., None, None] * fd.g_perp()
           - 2.0 * _sym(div_phi_top) + _pair_vec(fd, ops.phi, vvec) + 7.0 * ops.chi
           + (3 * n + 2) / n * _odot(fd.Hc, _perp_part(fd, ops.tr_top))) * mask_pp
    lam = _fit_lambda(fd, lhs, fd.g_perp()) if volume_preserving else 0.0
    blocks.append(ResidualBlock.from_tensor(
        "metric-el", lhs - lam * fd.g_perp(), tol, lam=lam))
    # trace form (n, p > 1)
    if n > 1 and p > 1:
        T2 = fd.inner_t12(T, T)
        Tt2 = fd.inner_t12(Tt, Tt)
        H2 = fd.inner_vec(fd.Hc, fd.Hc)
        Ht2 = fd.inner_vec(fd.Htc, fd.Htc)
        tr_chi = np.einsum("...i,...ii->...", fd.eps[..., n:], ops.chi[..., n:, n:])
        tr_lhs = ((2 * n - 1) * (p - 5) / n * H2 - T2 - 2 * Tt2
                  + (4 * p - 1) * divHt + 2 * (p - 2) * Ht2 + 7 * tr_chi)
        tr_g = np.einsum("...i->...", fd.eps[..., n:])
        blocks.append(ResidualBlock.from_tensor(
            "metric-el-trace", tr_lhs - lam * tr_g, max(tol, 1e-7), lam=lam))
    if adapted:
        a1 = K[..., n:, :n, :n] - np.einsum("...abi->...iab", T[..., :n, :n, n:])
        a2 = ops.tr_perp[..., n:] - (n - 1) / n * fd.Hc[..., n:]
        a3 = K[..., :n, n:, n:] - np.einsum("...ija->...aij", Tt[..., n:, n:, :n])
        a4 = ops.tr_top[..., :n] - (p - 1) / p * fd.Htc[..., :n]
        blocks.append(ResidualBlock.from_tensor(
            "adapted-crit-a", a1, tol))
        blocks.append(ResidualBlock.from_tensor("adapted-crit-b", a2, tol))
        blocks.append(ResidualBlock.from_tensor("adapted-crit-c", a3, tol))
        blocks.append(ResidualBlock.from_tensor("adapted-crit-d", a4, tol))
        H2 = fd.inner_vec(fd.Hc, fd.Hc)
        Ht2 = fd.inner_vec(fd.Htc, fd.Htc)
        scal_a = ((4 * p + 1) / p * divHt + (2 * p - 4) / p * Ht2
                  + (2 * n - 1) / n * H2)
        lhs_a = ((3 - 8 * n) / n * HH - 0.5 * ups_TT - 5.0 * Tfl_d
                 - _pair_vec(fd, ops.phi, fd.Hc)
                 + scal_a[..., None, None] * fd.g_perp()) * mask_pp
        lam_a = _fit_lambda(fd, lhs_a, fd.g_perp()) if volume_preserving else 0.0
        blocks.append(ResidualBlock.from_tensor(
            "adapted-metric-el", lhs_a - lam_a * fd.g_perp(), tol, lam=lam_a))
        T2 = fd.inner_t12(T, T)
        Tt2 = fd.inner_t12(Tt, Tt)
        tr_a = ((5 - 10 * n + 2 * n * p - p) / n * H2 - T2 + 5 * Tt2
                + (4 * p + 1) * divHt + (2 * p - 4) * Ht2)
        tr_g = np.einsum("...i->...", fd.eps[..., n:])
        blocks.append(ResidualBlock.from_tensor(
            "adapted-metric-el-trace", tr_a - lam_a * tr_g, max(tol, 1e-7), lam=lam_a))
    # umbilical closed form of Q for critical metric contorsion
    qv = Q_value(atlas, fd.x, cfg, data=fd, ops=ops)
    T2 = fd.inner_t12(T, T)
    Tt2 = fd.inner_t12(Tt, Tt)
    H2 = fd.inner_vec(fd.Hc, fd.Hc)
    Ht2 = fd.inner_vec(fd.Htc, fd.Htc)
    rhs = ((2 * n - 1) / n * trtH + (2 * p - 1) / p * trpHt
           + (p - 1) / p * Ht2 + (n - 1) / n * H2 + T2 + Tt2)
    blocks.append(ResidualBlock.from_tensor(
        "metric-Q-umbilical", 0.5 * qv - rhs, max(tol, 1e-7)))
    return blocks


# ---------------------------------------------------------------------------
# semi-symmetric criticality and explicit mixed Ricci tensor
# ---------------------------------------------------------------------------

def semi_symmetric_el(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                      tol: float = 1e-8,
                      class_tol: float = 1e-9) -> dict:
    """Criticality blocks for a semi-symmetric contorsion and the explicit
    affine mixed Ricci tensor built from the recovered U.

    Returns {"blocks": [...], "ric_bar": ..., "s_D_bar": ..., "einstein": block}.
    """
    fd = FrameData(atlas, x, cfg)
    ops = ContorsionOps(fd)
    if ops.class_defects()["semi_symmetric"] >= class_tol:
        raise NotSemiSymmetric("contorsion is not semi-symmetric within tolerance")
    n, p = fd.n, fd.p
    if n + p <= 2:
        raise DimensionGuard("the trace-correction terms need n + p > 2")
    U = recover_semi_symmetric_U(ops)                    # lowered frame comps
    Ut, Up = _top_part(fd, U), _perp_part(fd, U)
    blocks: list[ResidualBlock] = []
    # algebraic trace conditions
    cr1 = 2 * p * (n - 1) * Ut - (n - p) * fd.Htc * _mask_vec(fd, "t")
    cr2 = 2 * n * (p - 1) * Up - (p - n) * fd.Hc * _mask_vec(fd, "p")
    blocks.append(ResidualBlock.from_tensor("semi-crit-top", cr1, tol))
    blocks.append(ResidualBlock.from_tensor("semi-crit-perp", cr2, tol))
    # big orthogonal-block equation
    divUt = div_of_vector(fd, lambda d: _U_build(d, "top"))
    divUp = div_of_vector(fd, lambda d: _U_build(d, "perp"))
    sm = s_mix(atlas, fd.x, cfg, data=fd)
    divHtH = div_of_vector(fd, lambda d: d.vec_coord(d.Htc - d.Hc))
    coeff = -0.5 * (sm + divHtH) - 0.25 * (p - n) * divUt
    lhs = (_ric_perp_block(fd, np.zeros_like(sm))
           + coeff[..., None, None] * fd.g_perp()
           + 0.5 * n * (p - 1) * np.einsum("...a,...b->...ab", Up, Up))
    lam = _fit_lambda(fd, lhs, fd.g_perp())
    blocks.append(ResidualBlock.from_tensor(
        "semi-el-perp", lhs - lam * fd.g_perp(), tol, lam=lam))
    # mixed-block equation
    mt_U = mixed_tensors(atlas, fd.x, Z_field=lambda y: _U_build(fd.at(y), "perp"), cfg=cfg, data=fd)
    alpha, theta = mt_U.alpha, mt_U.theta
    alpha_d, theta_d = mt_U.alpha_dual, mt_U.theta_dual
    v_block = _ric_V_block(fd)
    at_U = _pair_vec(fd, alpha_d - theta_d, Up)
    th_Ut = _pair_vec(fd, theta, Ut)
    lhs_v = (-v_block
             + 0.5 * (n - p) * mt_U.delta_Z
             + 0.5 * (n - p) * fd.restrict_V(_sym(at_U), rank=2)
             - (p - n) * fd.restrict_V(_sym(th_Ut), rank=2)
             - p * (n - 1) * fd.restrict_V(_odot(Ut, Up), rank=2))
    blocks.append(ResidualBlock.from_tensor("semi-el-mixed", lhs_v, tol))
    # explicit affine mixed Ricci tensor
    mr = mixed_ricci(atlas, fd.x, cfg, data=fd)
    Z = (0.5 * n * (p - 1) * fd.inner_vec(Up, Up)
         + 0.5 * p * (n - 1) * fd.inner_vec(Ut, Ut)
         - 0.25 * p * (p - n) * divUt
         - 0.25 * n * (n - p) * divUp)
    corr_p = (0.5 * n * (p - 1) * np.einsum("...a,...b->...ab", Up, Up)
              - 0.25 * (p - n) * divUt[..., None, None] * fd.g_perp()
              + (Z / (2 - n - p))[..., None, None] * fd.g_perp())
    corr_t = (0.5 * p * (n - 1) * np.einsum("...a,...b->...ab", Ut, Ut)
              - 0.25 * (n - p) * divUp[..., None, None] * fd.g_top()
              + (Z / (2 - n - p))[..., None, None] * fd.g_top())
    corr_v = fd.restrict_V(
        -0.5 * (n - p) * (mt_U.delta_Z + _sym(at_U))
        + (p - n) * _sym(th_Ut)
        + p * (n - 1) * _odot(Ut, Up), rank=2)
    ric_bar = mr.ric + corr_p + corr_t + corr_v
    s_D_bar = mr.s_D + 2.0 * Z / (2 - n - p)
    g_frame = np.zeros(fd.x.shape[:-1] + (fd.m, fd.m))
    idx = np.arange(fd.m)
    g_frame[..., idx, idx] = fd.eps
    tr_bar = np.einsum("...a,...aa->...", fd.eps, ric_bar)
    E = ric_bar - 0.5 * tr_bar[..., None, None] * g_frame
    einstein = ResidualBlock.from_tensor("semi-einstein-bar", E, tol)
    blocks.append(ResidualBlock.from_tensor(
        "semi-trace-bar", tr_bar - s_D_bar, max(tol, 1e-7)))
    return {"blocks": blocks, "ric_bar": ric_bar, "s_D_bar": s_D_bar,
            "einstein": einstein, "U": U, "Z": Z}


def _mask_vec(fd: FrameData, part: str) -> np.ndarray:
    out = np.zeros(fd.x.shape[:-1] + (fd.m,))
    if part == "t":
        out[..., : fd.n] = 1.0
    else:
        out[..., fd.n:] = 1.0
    return out
