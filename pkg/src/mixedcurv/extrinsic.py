"""Extrinsic geometry of the orthogonal splitting: fundamental forms,
Weingarten operators, quadratic invariants and the mixed (1,2)-tensors.

Frame-component conventions
---------------------------

All multilinear objects are sampled in the adapted orthonormal frame
``e_0..e_{m-1}`` (tangent-distribution vectors first) and stored with every
slot *lowered*::

    S[lam, mu, nu] = < S(e_lam, e_mu), e_nu >

so a frame index is raised by multiplying with its sign eps.  Sums over the
frame always carry the eps factors, which is the only difference between the
Riemannian and pseudo-Riemannian cases.  Tensors that only live on one
bundle (like the second fundamental form) are stored as full (m, m, m)
arrays that vanish outside their block; this keeps the contraction helpers
uniform.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import ShapeMismatch, WrongBundle
from .geometry_core import AdaptedFrame, ChartAtlas, JetConfig, adapted_frame
from .levi_civita import (
    bar_riemann,
    christoffel,
    cov_deriv,
    nabla_contorsion,
    riemann_lowered,
)

__all__ = [
    "FrameData",
    "FundamentalForms",
    "QuadraticInvariants",
    "MixedTensors",
    "fundamental_forms",
    "weingarten",
    "quadratic_invariants",
    "mixed_tensors",
    "upsilon",
]


class FrameData:
    """Everything the invariant formulas need at one batch of points.

    Expensive pieces (curvature, frame derivatives) are computed lazily and
    cached.  ``pivot`` freezes the Gram-Schmidt order so that instances at
    nearby points describe one smooth frame field - required whenever this
    object is finite-differenced in x.
    """

    def __init__(self, atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                 pivot=None):
        self.atlas = atlas
        self.cfg = cfg
        self.x = np.asarray(x, dtype=float)
        self.frame = adapted_frame(atlas, self.x, pivot=pivot)

    def at(self, y: np.ndarray) -> "FrameData":
        """Same frame field, different points (pivot order frozen)."""
        return FrameData(self.atlas, y, self.cfg, pivot=self.frame.pivot)

    # -- basic pieces ------------------------------------------------------

    @property
    def n(self) -> int:
        return self.atlas.n

    @property
    def p(self) -> int:
        return self.atlas.p

    @property
    def m(self) -> int:
        return self.atlas.dim_total

    @property
    def g(self) -> np.ndarray:
        return self.frame.g

    @property
    def e(self) -> np.ndarray:
        """Frame vectors (..., lam, coord)."""
        return self.frame.vectors

    @property
    def eps(self) -> np.ndarray:
        return self.frame.eps

    @cached_property
    def e_low(self) -> np.ndarray:
        """Lowered frame vectors (e_lam)_i = g_ij e_lam^j."""
        return np.einsum("...ai,...ij->...aj", self.e, self.g)

    @cached_property
    def Gam(self) -> np.ndarray:
        return christoffel(self.atlas, self.x, self.cfg)

    @cached_property
    def Rf(self) -> np.ndarray:
        """Rf[nu,kap,lam,mu] = <R_{e_lam, e_mu} e_kap, e_nu>."""
        Rlow = riemann_lowered(self.atlas, self.x, self.cfg)
        return np.einsum("...al,...bk,...ci,...dj,...lkij->...abcd",
                         self.e, self.e, self.e, self.e, Rlow)

    @cached_property
    def Rbarf(self) -> np.ndarray:
        """Same layout as Rf, for the affine connection nabla + K."""
        Rb = bar_riemann(self.atlas, self.x, self.cfg)
        Rb_low = np.einsum("...lq,...qkij->...lkij", self.g, Rb)
        return np.einsum("...al,...bk,...ci,...dj,...lkij->...abcd",
                         self.e, self.e, self.e, self.e, Rb_low)

    @cached_property
    def dframe(self) -> np.ndarray:
        """d_l (e_mu)^k by central FD of the frozen-pivot frame field."""
        from .geometry_core import fd_directional

        outs = []
        for l in range(self.m):
            h = self.cfg.step(self.atlas.box, l)
            outs.append(fd_directional(lambda y: self.at(y).e, self.x, l, h, self.cfg.fd_order))
        return np.stack(outs, axis=-3)

    @cached_property
    def w(self) -> np.ndarray:
        """Frame connection coefficients w[lam,mu,nu] = <nabla_{e_lam} e_mu, e_nu>."""
        # nabla_l e_mu^k = d_l e_mu^k + Gamma^k_{lq} e_mu^q
        nab = self.dframe + np.einsum("...klq,...mq->...lmk", self.Gam, self.e)
        return np.einsum("...ai,...imk,...zk->...amz", self.e, nab, self.e_low)

    # -- contorsion in the frame -------------------------------------------

    @cached_property
    def K(self) -> np.ndarray:
        """KF[lam,mu,nu] = <T_{e_lam} e_mu, e_nu> (contorsion)."""
        Kc = self.atlas.contorsion_at(self.x)
        Klow = np.einsum("...lk,...kij->...lij", self.g, Kc)
        return np.einsum("...ai,...bj,...cl,...lij->...abc", self.e, self.e, self.e, Klow)

    @cached_property
    def nK(self) -> np.ndarray:
        """nKF[kap,lam,mu,nu] = <(nabla_{e_kap} T)_{e_lam} e_mu, e_nu>."""
        nKc = nabla_contorsion(self.atlas, self.x, self.cfg, Gam=self.Gam)
        low = np.einsum("...sk,...lkij->...lsij", self.g, nKc)
        return np.einsum("...dl,...ai,...bj,...cs,...lsij->...dabc",
                         self.e, self.e, self.e, self.e, low)

    # -- second fundamental forms ------------------------------------------

    @cached_property
    def hF(self) -> np.ndarray:
        """Second fundamental form of the tangent distribution, block (t,t,p)."""
        out = np.zeros_like(self.w)
        sym = 0.5 * (self.w + np.swapaxes(self.w, -3, -2))
        out[..., : self.n, : self.n, self.n:] = sym[..., : self.n, : self.n, self.n:]
        return out

    @cached_property
    def TF(self) -> np.ndarray:
        """Integrability tensor of the tangent distribution, block (t,t,p)."""
        out = np.zeros_like(self.w)
        alt = 0.5 * (self.w - np.swapaxes(self.w, -3, -2))
        out[..., : self.n, : self.n, self.n:] = alt[..., : self.n, : self.n, self.n:]
        return out

    @cached_property
    def htF(self) -> np.ndarray:
        """Dual second fundamental form, block (p,p,t)."""
        out = np.zeros_like(self.w)
        sym = 0.5 * (self.w + np.swapaxes(self.w, -3, -2))
        out[..., self.n:, self.n:, : self.n] = sym[..., self.n:, self.n:, : self.n]
        return out

    @cached_property
    def TtF(self) -> np.ndarray:
        """Dual integrability tensor, block (p,p,t)."""
        out = np.zeros_like(self.w)
        alt = 0.5 * (self.w - np.swapaxes(self.w, -3, -2))
        out[..., self.n:, self.n:, : self.n] = alt[..., self.n:, self.n:, : self.n]
        return out

    @cached_property
    def Hc(self) -> np.ndarray:
        """Mean curvature of the tangent distribution, lowered frame comps (m,)."""
        return np.einsum("...a,...aan->...n", self.eps[..., : self.n], self.hF[..., : self.n, : self.n, :])

    @cached_property
    def Htc(self) -> np.ndarray:
        """Dual mean curvature, lowered frame comps (m,)."""
        return np.einsum("...i,...iin->...n", self.eps[..., self.n:], self.htF[..., self.n:, self.n:, :])

    # -- conversions & contractions ----------------------------------------

    def vec_coord(self, vc: np.ndarray) -> np.ndarray:
        """Coordinate components of a vector given by lowered frame comps."""
        return np.einsum("...a,...a,...ak->...k", self.eps, vc, self.e)

    def vec_frame(self, v: np.ndarray) -> np.ndarray:
        """Lowered frame comps <v, e_lam> of coordinate components v."""
        return np.einsum("...k,...ak->...a", v, self.e_low)

    def t2_coord(self, S: np.ndarray) -> np.ndarray:
        """Covariant coordinate components of a (0,2) tensor in frame comps."""
        return np.einsum("...a,...b,...ab,...ai,...bj->...ij",
                         self.eps, self.eps, S, self.e_low, self.e_low)

    def t2_frame(self, S_coord: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...ai,...bj->...ab", S_coord, self.e, self.e)

    def t12_coord(self, P: np.ndarray) -> np.ndarray:
        """P[lam,mu,nu] -> coordinate components P^k_ij (value slot raised)."""
        low = np.einsum("...a,...b,...c,...abc,...ai,...bj,...cl->...lij",
                        self.eps, self.eps, self.eps, P, self.e_low, self.e_low, self.e_low)
        ginv = np.linalg.inv(self.g)
        return np.einsum("...kl,...lij->...kij", ginv, low)

    def inner_t2(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """<A, B> of (0,2) tensors in frame comps, with eps factors."""
        return np.einsum("...a,...b,...ab,...ab->...", self.eps, self.eps, A, B)

    def inner_t12(self, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
        return np.einsum("...a,...b,...c,...abc,...abc->...",
                         self.eps, self.eps, self.eps, P, Q)

    def inner_vec(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """<u, v> for lowered frame comps."""
        return np.einsum("...a,...a,...a->...", self.eps, u, v)

    def restrict_V(self, S: np.ndarray, rank: int = 2) -> np.ndarray:
        """Zero out all but the mixed (t,p)+(p,t) blocks of the first two slots.

        ``rank`` is the total number of trailing frame indices of S.
        """
        n, m = self.n, self.m
        mask = np.zeros((m, m))
        mask[:n, n:] = 1.0
        mask[n:, :n] = 1.0
        return S * mask.reshape((m, m) + (1,) * (rank - 2))

    # -- spec-facing bundles -------------------------------------------------

    def g_perp(self) -> np.ndarray:
        """g restricted to the orthogonal distribution, frame comps."""
        out = np.zeros(self.x.shape[:-1] + (self.m, self.m))
        idx = np.arange(self.n, self.m)
        out[..., idx, idx] = self.eps[..., self.n:]
        return out

    def g_top(self) -> np.ndarray:
        out = np.zeros(self.x.shape[:-1] + (self.m, self.m))
        idx = np.arange(self.n)
        out[..., idx, idx] = self.eps[..., : self.n]
        return out


# ---------------------------------------------------------------------------
# spec-facing dataclasses and operations
# ---------------------------------------------------------------------------

@dataclass
class FundamentalForms:
    h: np.ndarray
    T: np.ndarray
    H: np.ndarray      # lowered frame comps
    h_dual: np.ndarray
    T_dual: np.ndarray
    H_dual: np.ndarray
    top_umbilical: bool
    top_geodesic: bool
    top_minimal: bool
    top_integrable: bool
    perp_umbilical: bool
    perp_geodesic: bool
    perp_minimal: bool
    perp_integrable: bool


def fundamental_forms(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                      tol: float = 1e-8, data: Optional[FrameData] = None) -> FundamentalForms:
    fd = data if data is not None else FrameData(atlas, x, cfg)
    # classification flags use the sup norm over the batch
    sup = lambda t: float(np.max(np.abs(t)))
    n, p = fd.n, fd.p
    umb_top = sup(fd.hF - np.einsum("...ab,...c->...abc", fd.g_top(), fd.Hc) / n)
    umb_perp = sup(fd.htF - np.einsum("...ab,...c->...abc", fd.g_perp(), fd.Htc) / p)
    return FundamentalForms(
        h=fd.hF, T=fd.TF, H=fd.Hc,
        h_dual=fd.htF, T_dual=fd.TtF, H_dual=fd.Htc,
        top_umbilical=umb_top < tol,
        top_geodesic=sup(fd.hF) < tol,
        top_minimal=sup(fd.Hc) < tol,
        top_integrable=sup(fd.TF) < tol,
        perp_umbilical=umb_perp < tol,
        perp_geodesic=sup(fd.htF) < tol,
        perp_minimal=sup(fd.Htc) < tol,
        perp_integrable=sup(fd.TtF) < tol,
    )


def weingarten(atlas: ChartAtlas, x: np.ndarray, Z: np.ndarray, cfg: JetConfig = JetConfig(),
               dual: bool = False, tol: float = 1e-10,
               data: Optional[FrameData] = None) -> tuple[np.ndarray, np.ndarray]:
    """(A_Z, Tsharp_Z) as bilinear forms on the tangent distribution
    (or on the orthogonal one, with dual=True), frame comps.

    Z is in coordinate components and must lie in the orthogonal
    distribution (tangent one for dual=True) up to ``tol``.
    """
    fd = data if data is not None else FrameData(atlas, x, cfg)
    zc = fd.vec_frame(np.asarray(Z, dtype=float))
    good = zc[..., fd.n:] if not dual else zc[..., : fd.n]
    bad = zc[..., : fd.n] if not dual else zc[..., fd.n:]
    scale = max(1.0, float(np.max(np.abs(good))))
    if float(np.max(np.abs(bad))) > tol * scale:
        raise WrongBundle("Z has a component in the wrong distribution")
    h = fd.htF if dual else fd.hF
    T = fd.TtF if dual else fd.TF
    A = np.einsum("...c,...abc,...c->...ab", fd.eps, h, zc)
    Ts = np.einsum("...c,...abc,...c->...ab", fd.eps, T, zc)
    return A, Ts


@dataclass
class QuadraticInvariants:
    casorati: np.ndarray       # A^flat, frame comps of the (0,2) form
    integrability_sq: np.ndarray   # T^flat
    psi: np.ndarray
    kappa: np.ndarray          # K^flat = sum eps_i [Tsharp_i, A_i] lowered
    casorati_dual: np.ndarray
    integrability_sq_dual: np.ndarray
    psi_dual: np.ndarray
    kappa_dual: np.ndarray


def _quad_block(fd: FrameData, dual: bool):
    h = fd.htF if dual else fd.hF
    T = fd.TtF if dual else fd.TF
    eps = fd.eps
    # A^flat_{ab} = sum_{i,c} eps_i eps_c h[a,c,i] h[c,b,i]
    Afl = np.einsum("...i,...c,...aci,...cbi->...ab", eps, eps, h, h)
    Tfl = np.einsum("...i,...c,...aci,...cbi->...ab", eps, eps, T, T)
    psi = np.einsum("...a,...b,...abi,...abj->...ij", eps, eps, h, h) \
        + np.einsum("...a,...b,...abi,...baj->...ij", eps, eps, T, T)
    kap = np.einsum("...i,...c,...aci,...cbi->...ab", eps, eps, h, T) \
        - np.einsum("...i,...c,...aci,...cbi->...ab", eps, eps, T, h)
    return Afl, Tfl, psi, kap


def quadratic_invariants(atlas: ChartAtlas, x: np.ndarray, cfg: JetConfig = JetConfig(),
                         data: Optional[FrameData] = None) -> QuadraticInvariants:
    fd = data if data is not None else FrameData(atlas, x, cfg)
    A, T2, psi, kap = _quad_block(fd, dual=False)
    Ad, T2d, psid, kapd = _quad_block(fd, dual=True)
    return QuadraticInvariants(A, T2, psi, kap, Ad, T2d, psid, kapd)


@dataclass
class MixedTensors:
    alpha: np.ndarray
    theta: np.ndarray
    alpha_dual: np.ndarray
    theta_dual: np.ndarray
    delta_Z: np.ndarray
    def_perp_Z: np.ndarray


def _mixed_alpha_theta(fd: FrameData):
    """alpha/theta and duals as full (m,m,m) frame-comp arrays."""
    m, n = fd.m, fd.n
    base = fd.x.shape[:-1]
    alpha = np.zeros(base + (m, m, m))
    theta = np.zeros(base + (m, m, m))
    alpha_d = np.zeros(base + (m, m, m))
    theta_d = np.zeros(base + (m, m, m))
    # alpha(E_a, Ee_i) = 1/2 A_i(E_a): <alpha(E_a,Ee_i), E_b> = h[a,b,i]/2
    h, T, ht, Tt = fd.hF, fd.TF, fd.htF, fd.TtF
    alpha[..., :n, n:, :n] = 0.5 * np.swapaxes(h[..., :n, :n, n:], -2, -1)
    alpha[..., n:, :n, :n] = np.swapaxes(alpha[..., :n, n:, :n], -3, -2)
    theta[..., :n, n:, :n] = 0.5 * np.swapaxes(T[..., :n, :n, n:], -2, -1)
    theta[..., n:, :n, :n] = np.swapaxes(theta[..., :n, n:, :n], -3, -2)
    alpha_d[..., n:, :n, n:] = 0.5 * np.swapaxes(ht[..., n:, n:, :n], -2, -1)
    alpha_d[..., :n, n:, n:] = np.swapaxes(alpha_d[..., n:, :n, n:], -3, -2)
    theta_d[..., n:, :n, n:] = 0.5 * np.swapaxes(Tt[..., n:, n:, :n], -2, -1)
    theta_d[..., :n, n:, n:] = np.swapaxes(theta_d[..., n:, :n, n:], -3, -2)
    return alpha, theta, alpha_d, theta_d


def _nabla_Z_frame(fd: FrameData, Z_field: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """nz[lam, mu] = <nabla_{e_lam} Z, e_mu> for a coordinate vector field."""
    nZ = cov_deriv(fd.atlas, fd.x, Z_field, "u", fd.cfg, Gam=fd.Gam)  # (..., l, k)
    return np.einsum("...al,...lk,...bk->...ab", fd.e, nZ, fd.e_low)


def mixed_tensors(atlas: ChartAtlas, x: np.ndarray,
                  Z_field: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  cfg: JetConfig = JetConfig(),
                  data: Optional[FrameData] = None) -> MixedTensors:
    fd = data if data is not None else FrameData(atlas, x, cfg)
    alpha, theta, alpha_d, theta_d = _mixed_alpha_theta(fd)
    m, n = fd.m, fd.n
    base = fd.x.shape[:-1]
    if Z_field is None:
        delta = np.zeros(base + (m, m))
        defp = np.zeros(base + (m, m))
    else:
        nz = _nabla_Z_frame(fd, Z_field)
        # delta_Z(X,Y) = 1/2 (<nabla_{X^top} Z, Y^perp> + <nabla_{Y^top} Z, X^perp>)
        block = np.zeros_like(nz)
        block[..., :n, n:] = nz[..., :n, n:]
        delta = 0.5 * (block + np.swapaxes(block, -2, -1))
        pblock = np.zeros_like(nz)
        pblock[..., n:, n:] = nz[..., n:, n:]
        defp = 0.5 * (pblock + np.swapaxes(pblock, -2, -1))
    return MixedTensors(alpha, theta, alpha_d, theta_d, delta, defp)


def upsilon(P: np.ndarray, Q: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Upsilon_{P,Q}[nu,rho] = sum_{lam,mu} eps_lam eps_mu
    (P[lam,mu,nu] Q[lam,mu,rho] + Q[lam,mu,nu] P[lam,mu,rho])."""
    if P.shape != Q.shape:
        raise ShapeMismatch(f"{P.shape} vs {Q.shape}")
    up = np.einsum("...a,...b,...abn,...abr->...nr", eps, eps, P, Q)
    return up + np.swapaxes(up, -2, -1)
