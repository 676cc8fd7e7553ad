import numpy as np, time
from mixedcurv.geometry_core import ChartAtlas, CoefficientField, Box
from mixedcurv.levi_civita import QuadratureGrid
from mixedcurv import variations as V

def check(atlas, v, actions, grid):
    for a in actions:
        t0 = time.time()
        fd = V.fd_action_derivative(atlas, a, v, grid)
        an = V.analytic_first_variation(atlas, a, v, grid)
        denom = max(1.0, abs(fd.value))
        print(f"{a:28s} fd={fd.value:+.8e} an={an.value:+.8e} "
              f"rel={abs(fd.value-an.value)/denom:.2e} fd_err={fd.error_estimate:.1e} "
              f"({time.time()-t0:.1f}s)")

acts = ["total_s_T", "total_Q"] + ["q_component:" + c for c in V.Q_COMPONENTS]

# scenario A: 3D, n=2, p=1
box = Box.torus(3)
gA = CoefficientField([["1+0.2*sin(x1+x3)","0","0"],["0","1+0.1*cos(x2)","0"],["0","0","1+0.15*sin(x3+x2)"]], 3, "dd")
distA = (CoefficientField(["1","0","0.2*sin(x2)"],3,"u"), CoefficientField(["0","1","0.1*cos(x1+x3)"],3,"u"))
K = [[[f"0.1*sin(x2+{i})" if (i+j+k)%2 else f"0.07*cos(x3+x1+{j})" for k in range(3)] for j in range(3)] for i in range(3)]
kA = CoefficientField(K, 3, "udd")
A = ChartAtlas(2, box, gA, distA, kA)
# omega annihilating d1,d2: omega = u*(-0.2*sin(x2), -0.1*cos(x1+x3), 1)
om = ["-0.2*sin(x2)*(1+0.3*cos(x1))", "-0.1*cos(x1+x3)*(1+0.3*cos(x1))", "1*(1+0.3*cos(x1))"]
rho = ["0.4*sin(x3)", "0.3*cos(x1+x2)", "0.5+0.2*sin(x1)"]
Bexpr = [[f"0.5*(({om[i]})*({rho[j]}) + ({om[j]})*({rho[i]}))" for j in range(3)] for i in range(3)]
vA = V.VariationField("metric", CoefficientField(Bexpr, 3, "dd"), "g_pitchfork")
print("== scenario A: n=2, p=1 ==")
check(A, vA, acts, QuadratureGrid(10))

# scenario B: 3D, n=1, p=2
distB = (CoefficientField(["1","0.15*sin(x3)","0.2*cos(x2)"],3,"u"),)
B3 = ChartAtlas(1, box, gA, distB, kA)
# omega annihilating d1: choose omega = u*( -0.15*sin(x3)*g22... ) easier: omega covector with omega(d1)=0:
# omega = (a, b, c) with a + 0.15*sin(x3)*b + 0.2*cos(x2)*c = 0 -> a = -(0.15*sin(x3)*b + 0.2*cos(x2)*c)
bb, cc = "0.4+0.1*sin(x1)", "0.3*cos(x2+x3)"
aa = f"-(0.15*sin(x3)*({bb}) + 0.2*cos(x2)*({cc}))"
om2 = [aa, bb, cc]
bb2, cc2 = "0.2*cos(x3)", "0.5+0.1*sin(x2)"
aa2 = f"-(0.15*sin(x3)*({bb2}) + 0.2*cos(x2)*({cc2}))"
om3 = [aa2, bb2, cc2]
Bexpr2 = [[f"0.5*(({om2[i]})*({om3[j]}) + ({om2[j]})*({om3[i]}))" for j in range(3)] for i in range(3)]
vB = V.VariationField("metric", CoefficientField(Bexpr2, 3, "dd"), "g_pitchfork")
print("== scenario B: n=1, p=2 ==")
check(B3, vB, acts, QuadratureGrid(10))
