import sys
import numpy as np
from mixedcurv.geometry_core import ChartAtlas, CoefficientField, Box
from mixedcurv.extrinsic import FrameData
from mixedcurv.invariants import ContorsionOps
from mixedcurv import variations as V
from mixedcurv.variations import _ldt3_terms, _b_frame, _component_scalar

rng = np.random.default_rng(7)

box = Box.torus(4)
gexp = [[f"1+0.2*sin(x{i+1}+x{(i+1)%4+1})" if i == j else "0" for j in range(4)] for i in range(4)]
g = CoefficientField(gexp, 4, "dd")
dist = (CoefficientField(["1","0","0.2*sin(x4)","0.15*cos(x2)"],4,"u"),
        CoefficientField(["0","1","0.1*cos(x3)","0.2*sin(x1)"],4,"u"))
def trig():
    a, b = rng.uniform(-0.15,0.15,2)
    k = rng.integers(1,5,4)
    s = "+".join(f"x{j+1}*{k[j]}" for j in range(4))
    return f"({a:.4f}*sin({s})+{b:.4f}*cos({s})+{rng.uniform(-0.1,0.1):.4f})"
K = [[[trig() for _ in range(4)] for _ in range(4)] for _ in range(4)]
atlas = ChartAtlas(2, box, g, dist, CoefficientField(K, 4, "udd"))
n = 2

x = np.array([[0.4,1.3,2.6,0.9],[2.1,0.6,1.9,4.0],[5.1,3.3,0.2,1.1]])
npts = x.shape[0]

gsym = __import__("sympy")

def perp_covector():
    # annihilates d1, d2
    w3, w4 = trig(), trig()
    w1 = f"-(0.2*sin(x4)*({w3})+0.15*cos(x2)*({w4}))"
    w2 = f"-(0.1*cos(x3)*({w3})+0.2*sin(x1)*({w4}))"
    return [w1, w2, w3, w4]

def top_covector():
    # rho = g(v, .) with v in span(d1, d2): annihilates the perp frame
    f1, f2 = trig(), trig()
    d1 = ["1", "0", "0.2*sin(x4)", "0.15*cos(x2)"]
    d2 = ["0", "1", "0.1*cos(x3)", "0.2*sin(x1)"]
    v = [f"(({f1})*({d1[k]})+({f2})*({d2[k]}))" for k in range(4)]
    return [f"(1+0.2*sin(x{k+1}+x{(k+1)%4+1}))*({v[k]})" for k in range(4)]

def random_B(mode):
    om = perp_covector()
    if mode == "perp":
        rho = perp_covector()
    elif mode == "vonly":
        rho = top_covector()
    else:
        rho = [trig() for _ in range(4)]
    Bexpr = [[f"0.5*(({om[i]})*({rho[j]})+({om[j]})*({rho[i]}))" for j in range(4)] for i in range(4)]
    return V.VariationField("metric", CoefficientField(Bexpr, 4, "dd"), "g_pitchfork")

name = sys.argv[1]
ndraw = int(sys.argv[2]) if len(sys.argv) > 2 else 25
mode = sys.argv[3] if len(sys.argv) > 3 else "pitch"
h = 1e-4

fd0 = FrameData(atlas, x)
ops0 = ContorsionOps(fd0)

rows = []
rhs = []
keys = None
for d in range(ndraw):
    v = random_B(mode)
    def s_at(t):
        a = V.deform(atlas, v, t)
        fdt = FrameData(a, x)
        return _component_scalar(fdt, ContorsionOps(fdt), name)
    d1 = (s_at(h) - s_at(-h)) / (2*h)
    d2 = (s_at(2*h) - s_at(-2*h)) / (4*h)
    fdv = (4*d1 - d2) / 3
    parts = _ldt3_terms(fd0, ops0, name, v.b_field)
    Bf = _b_frame(fd0, v.b_field)
    ep, et = fd0.eps[..., n:], fd0.eps[..., :n]
    cols = {}
    for k, arr in parts["pp"].items():
        cols["pp:" + k] = np.einsum("...i,...j,...ij,...ij->...", ep, ep, arr, Bf[..., n:, n:])
    for k, arr in parts["V"].items():
        cols["V:" + k] = np.einsum("...i,...b,...ib,...ib->...", ep, et, arr, Bf[..., n:, :n])
    for k, arr in parts["couplings"].items():
        cols["cp:" + k] = arr
    for k, arr in parts["divergences"].items():
        cols["dv:" + k] = arr
    if keys is None:
        keys = list(cols)
    rows.append(np.stack([cols[k] for k in keys], axis=-1))  # (pts, terms)
    rhs.append(fdv)

A = np.concatenate(rows, axis=0)
b = np.concatenate(rhs, axis=0)
live = np.max(np.abs(A), axis=0) > 1e-13
dropped = [k for k, ok in zip(keys, live) if not ok]
if dropped:
    print(f"dropped zero columns: {dropped}")
    A = A[:, live]
    keys = [k for k, ok in zip(keys, live) if ok]
coef, res, rank, sv = np.linalg.lstsq(A, b, rcond=None)
pred = A @ coef
print(f"{name}: eqs={A.shape[0]} terms={A.shape[1]} rank={rank} "
      f"resid={np.max(np.abs(pred-b)):.2e} cond={sv[0]/sv[-1]:.1e}")
for k, c in zip(keys, coef):
    flag = "" if abs(c-1) < 5e-3 else "   <-- expected 1"
    print(f"  {c:+9.4f}  {k}{flag}")
# also report residual with all-ones coefficients
pred1 = A @ np.ones(A.shape[1])
print(f"  all-ones residual: {np.max(np.abs(pred1-b)):.2e}")
