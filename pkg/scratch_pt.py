import numpy as np
from mixedcurv.geometry_core import ChartAtlas, CoefficientField, Box
from mixedcurv.extrinsic import FrameData
from mixedcurv.invariants import ContorsionOps
from mixedcurv import variations as V
from mixedcurv.variations import _ldt3_terms, _b_frame, _component_scalar

def pointwise_check(atlas, v, x, names):
    h = 1e-4
    for name in names:
        def s_at(t):
            a = V.deform(atlas, v, t)
            fd = FrameData(a, x)
            return _component_scalar(fd, ContorsionOps(fd), name)
        d1 = (s_at(h) - s_at(-h)) / (2*h)
        d2 = (s_at(2*h) - s_at(-2*h)) / (4*h)
        fdv = (4*d1 - d2) / 3
        fd0 = FrameData(atlas, x)
        ops = ContorsionOps(fd0)
        parts = _ldt3_terms(fd0, ops, name, v.b_field)
        Bf = _b_frame(fd0, v.b_field)
        n = fd0.n
        ep, et = fd0.eps[..., n:], fd0.eps[..., :n]
        val = np.einsum("...i,...j,...ij,...ij->...", ep, ep, parts["c_pp"], Bf[..., n:, n:])
        val = val + np.einsum("...i,...b,...ib,...ib->...", ep, et, parts["c_V"], Bf[..., n:, :n])
        for arr in parts["couplings"].values():
            val = val + arr
        for arr in parts["divergences"].values():
            val = val + arr
        err = np.abs(fdv - val)
        rel = err / np.maximum(1.0, np.abs(fdv))
        print(f"{name:18s} fd={fdv} cf={val} rel={np.max(rel):.2e}")

box = Box.torus(3)
gA = CoefficientField([["1+0.2*sin(x1+x3)","0","0"],["0","1+0.1*cos(x2)","0"],["0","0","1+0.15*sin(x3+x2)"]], 3, "dd")
distA = (CoefficientField(["1","0","0.2*sin(x2)"],3,"u"), CoefficientField(["0","1","0.1*cos(x1+x3)"],3,"u"))
K = [[[f"0.1*sin(x2+{i})" if (i+j+k)%2 else f"0.07*cos(x3+x1+{j})" for k in range(3)] for j in range(3)] for i in range(3)]
kA = CoefficientField(K, 3, "udd")
A = ChartAtlas(2, box, gA, distA, kA)
om = ["-0.2*sin(x2)*(1+0.3*cos(x1))", "-0.1*cos(x1+x3)*(1+0.3*cos(x1))", "1*(1+0.3*cos(x1))"]
rho = ["0.4*sin(x3)", "0.3*cos(x1+x2)", "0.5+0.2*sin(x1)"]
Bexpr = [[f"0.5*(({om[i]})*({rho[j]}) + ({om[j]})*({rho[i]}))" for j in range(3)] for i in range(3)]
vA = V.VariationField("metric", CoefficientField(Bexpr, 3, "dd"), "g_pitchfork")
x = np.array([[0.4,1.3,2.6],[2.1,0.6,1.9]])
names = ["theta_T", "theta_A", "theta_Tt", "theta_At", "trace_mix_top", "trace_mix_perp"]
print("== A: n=2,p=1 ==")
pointwise_check(A, vA, x, names)

distB = (CoefficientField(["1","0.15*sin(x3)","0.2*cos(x2)"],3,"u"),)
B3 = ChartAtlas(1, box, gA, distB, kA)
bb, cc = "0.4+0.1*sin(x1)", "0.3*cos(x2+x3)"
aa = f"-(0.15*sin(x3)*({bb}) + 0.2*cos(x2)*({cc}))"
bb2, cc2 = "0.2*cos(x3)", "0.5+0.1*sin(x2)"
aa2 = f"-(0.15*sin(x3)*({bb2}) + 0.2*cos(x2)*({cc2}))"
om2, om3 = [aa,bb,cc], [aa2,bb2,cc2]
Bexpr2 = [[f"0.5*(({om2[i]})*({om3[j]}) + ({om2[j]})*({om3[i]}))" for j in range(3)] for i in range(3)]
vB = V.VariationField("metric", CoefficientField(Bexpr2, 3, "dd"), "g_pitchfork")
print("== B: n=1,p=2 ==")
pointwise_check(B3, vB, x, names)
