"""Named geometric configurations with machine-checkable expected properties.

Each builder returns a :class:`Scenario`: a chart atlas plus a list of
expected properties that were evaluated on a deterministic sample lattice at
construction time.  A scenario whose expectations fail is a broken fixture,
so tests assert ``all(p.passed for p in scenario.properties)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import sympy as sy

from .errors import BadParameters, NotSymmetric
from .geometry_core import Box, ChartAtlas, CoefficientField, JetConfig, coordinates
from .extrinsic import FrameData
from .invariants import ContorsionOps, recover_semi_symmetric_U, s_mix
from .euler_lagrange import metric_connection_el

SCENARIO_NAMES = (
    "flat_product",
    "warped_torus",
    "random_torus",
    "doubly_twisted",
    "semi_symmetric",
    "statistical_cubic",
    "hopf_sasaki_s3",
    "schouten_van_kampen",
)


@dataclass(frozen=True)
class ScenarioSpec:
    """Name plus name-specific parameters for a scenario builder."""

    name: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise BadParameters(f"unknown scenario {self.name!r}")


@dataclass(frozen=True)
class ExpectedProperty:
    """A named residual evaluated at construction, with its tolerance."""

    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tol

    def to_dict(self) -> dict:
        return {"name": self.name, "residual": self.residual,
                "tol": self.tol, "passed": self.passed}


@dataclass(frozen=True)
class Scenario:
    spec: ScenarioSpec
    atlas: ChartAtlas
    properties: tuple[ExpectedProperty, ...]
    notes: dict = field(default_factory=dict)

    def failures(self) -> list[ExpectedProperty]:
        return [p for p in self.properties if not p.passed]


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------

def sample_lattice(box: Box, per_axis: int = 3) -> np.ndarray:
    """Deterministic interior lattice, shape (per_axis**m, m)."""
    axes = [
        np.linspace(lo + 0.171 * (hi - lo), hi - 0.093 * (hi - lo), per_axis)
        for lo, hi in zip(box.lows, box.highs)
    ]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=-1)


def _sup(arr: np.ndarray) -> float:
    return float(np.max(np.abs(arr)))


def _trig_scalar(rng: np.random.Generator, m: int, bandlimit: int,
                 amplitude: float, axes: Optional[list[int]] = None) -> str:
    """A random trig polynomial expression in the chosen coordinate axes."""
    axes = list(range(m)) if axes is None else axes
    terms = []
    for _ in range(2):
        k = rng.integers(1, bandlimit + 1, size=len(axes))
        a = rng.uniform(-amplitude, amplitude)
        b = rng.uniform(-amplitude, amplitude)
        phase = "+".join(f"{int(k[j])}*x{axes[j] + 1}" for j in range(len(axes)))
        terms.append(f"({a:.6f})*sin({phase})+({b:.6f})*cos({phase})")
    return "(" + "+".join(terms) + ")"


def _coordinate_split(n: int, m: int) -> tuple[CoefficientField, ...]:
    return tuple(
        CoefficientField(["1" if k == a else "0" for k in range(m)], m, "u")
        for a in range(n)
    )


def _christoffel_symbolic(g: sy.Matrix, xs) -> list:
    """Gamma[k][i][j] for a symbolic metric matrix."""
    m = g.shape[0]
    ginv = g.inv()
    dg = [[[sy.diff(g[i, j], xs[k]) for j in range(m)] for i in range(m)]
          for k in range(m)]
    gamma = [[[sy.S.Zero] * m for _ in range(m)] for _ in range(m)]
    for k in range(m):
        for i in range(m):
            for j in range(m):
                s = sy.S.Zero
                for l in range(m):
                    s += ginv[k, l] * (dg[i][l][j] + dg[j][l][i] - dg[l][i][j])
                gamma[k][i][j] = sy.simplify(s / 2)
    return gamma


# ---------------------------------------------------------------------------
# contorsion constructors
# ---------------------------------------------------------------------------

def contorsion_from_cubic(atlas: ChartAtlas, C: CoefficientField) -> CoefficientField:
    """Raise the last index: the (1,2) field with <T_X Y, Z> = C(X, Y, Z)."""
    m = atlas.dim_total
    if C.shape != (m, m, m):
        raise BadParameters("cubic form must have shape (m, m, m)")
    g = sy.Matrix(m, m, lambda i, j: atlas.metric.exprs[i, j])
    ginv = g.inv()
    K = np.empty((m, m, m), dtype=object)
    for k in range(m):
        for i in range(m):
            for j in range(m):
                K[k, i, j] = sy.simplify(
                    sum(ginv[k, l] * C.exprs[i, j, l] for l in range(m)))
    return CoefficientField(K, m, "udd")


def statistical_from_cubic(atlas: ChartAtlas, C: CoefficientField,
                           symmetry_tol: float = 1e-10) -> CoefficientField:
    """Contorsion with <T_X Y, Z> = C(X, Y, Z) for a totally symmetric C.

    The result is of statistical class (T = T* = T-wedge) by construction.
    """
    m = atlas.dim_total
    if C.shape != (m, m, m):
        raise NotSymmetric("cubic form must have shape (m, m, m)")
    x = sample_lattice(atlas.box, 2)
    Cv = C.eval(x)
    defect = max(_sup(Cv - np.swapaxes(Cv, -2, -1)),
                 _sup(Cv - np.swapaxes(Cv, -3, -2)))
    if defect > symmetry_tol:
        raise NotSymmetric(f"cubic form symmetry defect {defect:.2e}")
    return contorsion_from_cubic(atlas, C)


def semi_symmetric_from(atlas: ChartAtlas, U: CoefficientField) -> CoefficientField:
    """Contorsion of the semi-symmetric connection T_X Y = <U,Y>X - <X,Y>U."""
    m = atlas.dim_total
    if U.shape != (m,):
        raise BadParameters("U must be a vector field of shape (m,)")
    g = sy.Matrix(m, m, lambda i, j: atlas.metric.exprs[i, j])
    Uvec = [U.exprs[k] for k in range(m)]
    Uflat = [sum(g[j, l] * Uvec[l] for l in range(m)) for j in range(m)]
    K = np.empty((m, m, m), dtype=object)
    for k in range(m):
        for i in range(m):
            for j in range(m):
                K[k, i, j] = sy.expand(
                    Uflat[j] * (1 if k == i else 0) - g[i, j] * Uvec[k])
    return CoefficientField(K, m, "udd")


def schouten_van_kampen(atlas: ChartAtlas) -> CoefficientField:
    """Contorsion of the bundle-adapted connection obtained by projecting the
    Levi-Civita derivative back onto each distribution:

        T_X Y = -(nabla_X Y^perp)^top - (nabla_X Y^top)^perp.
    """
    m, n = atlas.dim_total, atlas.dim_tangent_dist
    xs = coordinates(m)
    g = sy.Matrix(m, m, lambda i, j: atlas.metric.exprs[i, j])
    D = sy.Matrix(m, n, lambda i, a: atlas.distribution[a].exprs[i])
    gram = D.T * g * D
    P = sy.simplify(D * gram.inv() * (D.T * g))  # projector onto the tangent distribution
    Q = sy.eye(m) - P
    gamma = _christoffel_symbolic(g, xs)
    K = np.empty((m, m, m), dtype=object)
    for i in range(m):
        for j in range(m):
            # cov[k] = (nabla_{d_i} (Q d_j))^k and (nabla_{d_i} (P d_j))^k
            covQ = [sy.diff(Q[k, j], xs[i])
                    + sum(gamma[k][i][l] * Q[l, j] for l in range(m))
                    for k in range(m)]
            covP = [sy.diff(P[k, j], xs[i])
                    + sum(gamma[k][i][l] * P[l, j] for l in range(m))
                    for k in range(m)]
            for k in range(m):
                K[k, i, j] = -sum(P[k, l] * covQ[l] for l in range(m)) \
                             - sum(Q[k, l] * covP[l] for l in range(m))
    return CoefficientField(K, m, "udd")


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _extrinsic_props(fd: FrameData, tol: float = 1e-9) -> list[ExpectedProperty]:
    return [
        ExpectedProperty("frame-orthonormality", fd.frame.gram_defect(), tol),
    ]


def _build_flat_product(params: dict) -> Scenario:
    n = int(params.get("n", 2))
    p = int(params.get("p", 2))
    m = n + p
    atlas = ChartAtlas(
        n, Box.torus(m),
        CoefficientField([["1" if i == j else "0" for j in range(m)]
                          for i in range(m)], m, "dd"),
        _coordinate_split(n, m))
    x = sample_lattice(atlas.box)
    fd = FrameData(atlas, x)
    props = _extrinsic_props(fd) + [
        ExpectedProperty("second-fundamental-forms", max(
            _sup(fd.hF), _sup(fd.htF)), 1e-11),
        ExpectedProperty("integrability-tensors", max(
            _sup(fd.TF), _sup(fd.TtF)), 1e-11),
        ExpectedProperty("mixed-scalar-curvature", _sup(s_mix(atlas, x, data=fd)), 1e-9),
    ]
    return Scenario(ScenarioSpec("flat_product", params), atlas, tuple(props),
                    notes={"n": n, "p": p, "critical": True})


def _build_warped_torus(params: dict) -> Scenario:
    n = int(params.get("n", 1))
    p = int(params.get("p", 2))
    m = n + p
    u = params.get("u", "0.3*sin(x1)" if n >= 1 else "0")
    gexp = [["0"] * m for _ in range(m)]
    for a in range(n):
        gexp[a][a] = "1"
    for i in range(n, m):
        gexp[i][i] = f"exp(2*({u}))"
    atlas = ChartAtlas(n, Box.torus(m),
                       CoefficientField(gexp, m, "dd"), _coordinate_split(n, m))
    # check the warping is a function of the tangent coordinates only
    xs = coordinates(m)
    ue = sy.sympify(u, locals={s.name: s for s in xs})
    if any(sy.diff(ue, xs[i]) != 0 for i in range(n, m)):
        raise BadParameters("warping function must depend on the tangent "
                            "coordinates only")
    x = sample_lattice(atlas.box)
    fd = FrameData(atlas, x)
    umb = fd.htF[..., n:, n:, :n] - np.einsum(
        "...i,ij,...a->...ija", fd.eps[..., n:], np.eye(p), fd.Htc[..., :n]) / p
    props = _extrinsic_props(fd) + [
        ExpectedProperty("tangent-totally-geodesic", _sup(fd.hF), 1e-9),
        ExpectedProperty("integrability-tensors", max(
            _sup(fd.TF), _sup(fd.TtF)), 1e-9),
        ExpectedProperty("orthogonal-umbilicity", _sup(umb), 1e-9),
    ]
    return Scenario(ScenarioSpec("warped_torus", params), atlas, tuple(props),
                    notes={"n": n, "p": p})


def random_torus_atlas(seed: int = 0, n: int = 2, p: int = 2,
                       bandlimit: int = 3, amplitude: float = 0.15,
                       with_contorsion: bool = True) -> ChartAtlas:
    """A random trig-polynomial perturbation of the flat product on a torus."""
    if bandlimit > 4 or amplitude > 0.2:
        raise BadParameters("bandlimit <= 4 and amplitude <= 0.2 keep the "
                            "metric nondegenerate")
    rng = np.random.default_rng(seed)
    m = n + p
    gexp = [["0"] * m for _ in range(m)]
    for i in range(m):
        gexp[i][i] = f"1+{_trig_scalar(rng, m, bandlimit, amplitude)}"
        for j in range(i + 1, m):
            od = f"0.5*({_trig_scalar(rng, m, bandlimit, amplitude)})"
            gexp[i][j] = od
            gexp[j][i] = od
    dist = []
    for a in range(n):
        comp = ["0"] * m
        comp[a] = "1"
        for i in range(n, m):
            comp[i] = _trig_scalar(rng, m, bandlimit, amplitude)
        dist.append(CoefficientField(comp, m, "u"))
    contorsion = None
    if with_contorsion:
        K = [[[_trig_scalar(rng, m, bandlimit, amplitude) for _ in range(m)]
              for _ in range(m)] for _ in range(m)]
        contorsion = CoefficientField(K, m, "udd")
    return ChartAtlas(n, Box.torus(m), CoefficientField(gexp, m, "dd"),
                      tuple(dist), contorsion)


def _build_random_torus(params: dict) -> Scenario:
    seed = int(params.get("seed", 0))
    n = int(params.get("n", 2))
    p = int(params.get("p", 2))
    atlas = random_torus_atlas(
        seed=seed, n=n, p=p,
        bandlimit=int(params.get("bandlimit", 3)),
        amplitude=float(params.get("amplitude", 0.15)),
        with_contorsion=bool(params.get("with_contorsion", True)))
    x = sample_lattice(atlas.box)
    fd = FrameData(atlas, x)
    gv = atlas.metric_at(x)
    props = _extrinsic_props(fd) + [
        ExpectedProperty("metric-nondegeneracy",
                         float(1.0 / np.min(np.abs(np.linalg.det(gv)))), 1e3),
    ]
    return Scenario(ScenarioSpec("random_torus", params), atlas, tuple(props),
                    notes={"seed": seed, "n": n, "p": p})


def _traceless_cubic_block(rng: np.random.Generator, m: int, idx: list[int],
                           axes: list[int], bandlimit: int,
                           amplitude: float) -> np.ndarray:
    """Random (1,2) coefficients on a coordinate block with zero (1,1)-trace."""
    d = len(idx)
    K = np.full((m, m, m), sy.S.Zero, dtype=object)
    subs = {s.name: s for s in coordinates(m)}
    raw = [[[sy.sympify(_trig_scalar(rng, m, bandlimit, amplitude), locals=subs)
             for _ in range(d)] for _ in range(d)] for _ in range(d)]
    for c in range(d):
        tr = sum(raw[c][a][a] for a in range(d)) / d
        for a in range(d):
            raw[c][a][a] = sy.expand(raw[c][a][a] - tr)
    for c in range(d):
        for a in range(d):
            for b in range(d):
                K[idx[c], idx[a], idx[b]] = raw[c][a][b]
    return K


def _build_doubly_twisted(params: dict) -> Scenario:
    n = int(params.get("n", 2))
    p = int(params.get("p", 2))
    m = n + p
    critical = bool(params.get("critical", True))
    seed = int(params.get("seed", 0))
    rng = np.random.default_rng(seed)
    top_axes = list(range(n))
    perp_axes = list(range(n, m))
    # the two conformal factors: v on the tangent block, u on the orthogonal
    # block; criticality needs u constant along the tangent distribution and
    # v constant along the orthogonal one
    if critical:
        v = params.get("v", f"exp({_trig_scalar(rng, m, 2, 0.2, top_axes)})")
        u = params.get("u", f"exp({_trig_scalar(rng, m, 2, 0.2, perp_axes)})")
    else:
        v = params.get("v", f"exp({_trig_scalar(rng, m, 2, 0.2)})")
        u = params.get("u", f"exp({_trig_scalar(rng, m, 2, 0.2)})")
    gexp = [["0"] * m for _ in range(m)]
    for a in top_axes:
        gexp[a][a] = f"({v})**2"
    for i in perp_axes:
        gexp[i][i] = f"({u})**2"
    # block contorsions with zero trace, scaled by the opposite factor
    KB = _traceless_cubic_block(rng, m, top_axes, top_axes, 2, 0.1)
    KF = _traceless_cubic_block(rng, m, perp_axes, perp_axes, 2, 0.1)
    subs = {s.name: s for s in coordinates(m)}
    u2 = sy.sympify(f"({u})**2", locals=subs)
    v2 = sy.sympify(f"({v})**2", locals=subs)
    K = KB * u2 + KF * v2
    atlas = ChartAtlas(n, Box.torus(m), CoefficientField(gexp, m, "dd"),
                       _coordinate_split(n, m), CoefficientField(K, m, "udd"))
    x = sample_lattice(atlas.box)
    fd = FrameData(atlas, x)
    ops = ContorsionOps(fd)
    props = _extrinsic_props(fd) + [
        ExpectedProperty("integrability-tensors", max(
            _sup(fd.TF), _sup(fd.TtF)), 1e-9),
        ExpectedProperty("block-contorsion-traces", max(
            _sup(ops.tr_top), _sup(ops.tr_perp)), 1e-9),
    ]
    if critical:
        props.append(ExpectedProperty(
            "totally-geodesic-both", max(_sup(fd.hF), _sup(fd.htF)), 1e-9))
    return Scenario(ScenarioSpec("doubly_twisted", params), atlas, tuple(props),
                    notes={"n": n, "p": p, "critical": critical})


def _build_semi_symmetric(params: dict) -> Scenario:
    n = int(params.get("n", 2))
    p = int(params.get("p", 2))
    m = n + p
    seed = int(params.get("seed", 0))
    rng = np.random.default_rng(seed)
    base = random_torus_atlas(seed=seed, n=n, p=p, with_contorsion=False,
                              bandlimit=int(params.get("bandlimit", 2)),
                              amplitude=float(params.get("amplitude", 0.1)))
    if "U" in params:
        U = CoefficientField(params["U"], m, "u")
    else:
        U = CoefficientField([_trig_scalar(rng, m, 2, 0.2) for _ in range(m)],
                             m, "u")
    atlas = base.with_fields(contorsion=semi_symmetric_from(base, U))
    x = sample_lattice(atlas.box)
    fd = FrameData(atlas, x)
    ops = ContorsionOps(fd)
    defects = ops.class_defects()
    # Tr^top T = U^top - n U in lowered frame comps
    Uf = fd.vec_frame(U.eval(x))
    Utop = Uf.copy()
    Utop[..., n:] = 0.0
    trtop_model = Utop - n * Uf
    # recovered-U round trip, coordinate comps
    Urec = fd.vec_coord(recover_semi_symmetric_U(ops))
    ts_wedge_V = fd.inner_t12(fd.restrict_V(ops.K, rank=3), ops.K_wedge)
    props = _extrinsic_props(fd) + [
        ExpectedProperty("semi-symmetric-class", defects["semi_symmetric"], 1e-12),
        ExpectedProperty("metric-class", defects["metric"], 1e-12),
        ExpectedProperty("trace-top-model", _sup(ops.tr_top - trtop_model), 1e-12),
        ExpectedProperty("wedge-pairing-V", _sup(ts_wedge_V), 1e-12),
        ExpectedProperty("U-roundtrip", _sup(Urec - U.eval(x)), 1e-10),
    ]
    return Scenario(ScenarioSpec("semi_symmetric", params), atlas, tuple(props),
                    notes={"n": n, "p": p, "seed": seed})


def symmetric_cubic_field(seed: int, m: int, n: int, bandlimit: int = 2,
                          amplitude: float = 0.1,
                          projected: bool = True) -> CoefficientField:
    """A totally symmetric cubic form; with ``projected`` the mixed components
    vanish and the partial traces of the pure blocks are removed (valid on a
    flat coordinate-split product)."""
    rng = np.random.default_rng(seed)
    subs = {s.name: s for s in coordinates(m)}
    C = np.full((m, m, m), sy.S.Zero, dtype=object)
    raw = {}
    for i in range(m):
        for j in range(i, m):
            for k in range(j, m):
                raw[(i, j, k)] = sy.sympify(
                    _trig_scalar(rng, m, bandlimit, amplitude), locals=subs)
    import itertools
    for (i, j, k), e in raw.items():
        for perm in set(itertools.permutations((i, j, k))):
            C[perm] = e
    if not projected:
        return CoefficientField(C, m, "ddd")
    # keep only the pure blocks and remove their partial traces
    P = np.full((m, m, m), sy.S.Zero, dtype=object)
    for block in (range(n), range(n, m)):
        idx = list(block)
        d = len(idx)
        t = {c: sum(C[a, a, c] for a in idx) for c in idx}
        for i in idx:
            for j in idx:
                for k in idx:
                    corr = ((t[k] if i == j else 0)
                            + (t[j] if i == k else 0)
                            + (t[i] if j == k else 0))
                    P[i, j, k] = sy.expand(C[i, j, k] - corr / (d + 2))
    return CoefficientField(P, m, "ddd")


def _build_statistical_cubic(params: dict) -> Scenario:
    n = int(params.get("n", 2))
    p = int(params.get("p", 2))
    m = n + p
    seed = int(params.get("seed", 0))
    projected = bool(params.get("projected", True))
    base = _build_flat_product({"n": n, "p": p}).atlas
    C = symmetric_cubic_field(seed, m, n, projected=projected)
    atlas = base.with_fields(contorsion=statistical_from_cubic(base, C))
    x = sample_lattice(atlas.box)
    fd = FrameData(atlas, x)
    ops = ContorsionOps(fd)
    props = _extrinsic_props(fd) + [
        ExpectedProperty("statistical-class",
                         ops.class_defects()["statistical"], 1e-12),
    ]
    if projected:
        K = ops.K
        props += [
            ExpectedProperty("stat-crit-traces", max(
                _sup(ops.tr_top[..., :n]), _sup(ops.tr_perp[..., n:])), 1e-10),
            ExpectedProperty("stat-crit-mixed-values", max(
                _sup(K[..., :n, :n, n:]), _sup(K[..., n:, n:, :n]),
                _sup(K[..., :n, n:, :]), _sup(K[..., n:, :n, :])), 1e-10),
        ]
    return Scenario(ScenarioSpec("statistical_cubic", params), atlas,
                    tuple(props), notes={"n": n, "p": p, "seed": seed,
                                         "projected": projected})


def _build_hopf_sasaki_s3(params: dict) -> Scenario:
    """The unit 3-sphere in Euler-angle coordinates (x1, x2, x3) =
    (fiber angle, polar angle, azimuth), with the one-dimensional tangent
    distribution spanned by the Reeb field and the metric-compatible
    contorsion <T_X Y, Z> = (eta ^ d eta)(X, Y, Z) / 2."""
    # quarter of the bi-invariant round metric: g = (s1^2 + s2^2 + s3^2)/4
    gexp = [["1/4", "0", "cos(x2)/4"],
            ["0", "1/4", "0"],
            ["cos(x2)/4", "0", "1/4"]]
    # eta = (dx1 + cos(x2) dx3)/2, eta ^ d eta = -sin(x2)/2 dx1^dx2^dx3
    c = "(-sin(x2)/4)"
    zero = "0"
    Cex = [[[zero] * 3 for _ in range(3)] for _ in range(3)]
    for (i, j, k), s in (((0, 1, 2), "+"), ((1, 2, 0), "+"), ((2, 0, 1), "+"),
                         ((0, 2, 1), "-"), ((2, 1, 0), "-"), ((1, 0, 2), "-")):
        Cex[i][j][k] = f"{s}{c}"
    box = Box((0.0, 0.6, 0.0), (2 * np.pi, np.pi - 0.6, 2 * np.pi),
              (True, False, True))
    base = ChartAtlas(1, box, CoefficientField(gexp, 3, "dd"),
                      (CoefficientField(["1", "0", "0"], 3, "u"),))
    atlas = base.with_fields(
        contorsion=contorsion_from_cubic(base, CoefficientField(Cex, 3, "ddd")))
    x = sample_lattice(atlas.box)
    fd = FrameData(atlas, x)
    ops = ContorsionOps(fd)
    n = 1
    Tt2 = fd.inner_t12(fd.TtF, fd.TtF)
    from .extrinsic import _quad_block
    Tfl_d = _quad_block(fd, dual=True)[1]
    chi_pp = ops.chi[..., n:, n:]
    blocks = metric_connection_el(atlas, x, tol=1e-6)
    el = {b.name: b for b in blocks}
    lam = el["metric-el"].best_fit_lambda
    props = _extrinsic_props(fd) + [
        ExpectedProperty("phi-vanishes", _sup(ops.phi), 1e-9),
        ExpectedProperty("chi-is-minus-Ttilde-flat",
                         _sup(chi_pp + Tfl_d[..., n:, n:]), 1e-9),
        ExpectedProperty("torsion-norm-2", abs(float(np.max(Tt2)) - 2.0)
                         + abs(float(np.min(Tt2)) - 2.0), 1e-9),
        ExpectedProperty("metric-el-residual", el["metric-el"].sup, 1e-6),
        ExpectedProperty("lambda-is-5", abs(lam - 5.0), 1e-6),
    ]
    return Scenario(ScenarioSpec("hopf_sasaki_s3", params), atlas, tuple(props),
                    notes={"lambda": lam, "n": 1, "p": 2})


def _build_schouten_van_kampen(params: dict) -> Scenario:
    base_name = params.get("base", "warped_torus")
    if base_name == "warped_torus":
        base = _build_warped_torus(params.get("base_params", {})).atlas
    elif base_name == "flat_product":
        base = _build_flat_product(params.get("base_params", {})).atlas
    elif base_name == "random_torus":
        bp = dict(params.get("base_params", {}))
        bp.setdefault("bandlimit", 1)
        bp.setdefault("amplitude", 0.05)
        atlas_s = _build_random_torus(bp)
        base = atlas_s.atlas.with_fields(contorsion=None)
    else:
        raise BadParameters(f"unknown base scenario {base_name!r}")
    atlas = base.with_fields(contorsion=schouten_van_kampen(base))
    x = sample_lattice(atlas.box)
    fd = FrameData(atlas, x)
    ops = ContorsionOps(fd)
    n, p = fd.n, fd.p
    defects = ops.class_defects()
    props = _extrinsic_props(fd) + [
        ExpectedProperty("adapted-class", defects["adapted"], 1e-8),
    ]
    if base_name == "flat_product":
        props.append(ExpectedProperty("contorsion-vanishes", _sup(ops.K), 1e-9))
    # umbilical orthogonal distribution: phi^top = -2 htilde
    umb = fd.htF[..., n:, n:, :n] - np.einsum(
        "...i,ij,...a->...ija", fd.eps[..., n:], np.eye(p), fd.Htc[..., :n]) / p
    if _sup(umb) < 1e-9:
        phi_top = ops.phi_top[..., n:, n:, :n]
        props.append(ExpectedProperty(
            "umbilical-phi-top", _sup(phi_top + 2.0 * fd.htF[..., n:, n:, :n]),
            1e-8))
    return Scenario(ScenarioSpec("schouten_van_kampen", params), atlas,
                    tuple(props), notes={"base": base_name, "n": n, "p": p})


_BUILDERS = {
    "flat_product": _build_flat_product,
    "warped_torus": _build_warped_torus,
    "random_torus": _build_random_torus,
    "doubly_twisted": _build_doubly_twisted,
    "semi_symmetric": _build_semi_symmetric,
    "statistical_cubic": _build_statistical_cubic,
    "hopf_sasaki_s3": _build_hopf_sasaki_s3,
    "schouten_van_kampen": _build_schouten_van_kampen,
}


def build(spec: ScenarioSpec) -> Scenario:
    """Construct the named scenario and evaluate its expected properties."""
    try:
        builder = _BUILDERS[spec.name]
    except KeyError:
        raise BadParameters(f"unknown scenario {spec.name!r}") from None
    return builder(dict(spec.parameters))
