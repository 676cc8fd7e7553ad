import numpy as np
from mixedcurv.geometry_core import Box, ChartAtlas, CoefficientField, JetConfig
from mixedcurv import euler_lagrange as el

cfg = JetConfig()

def atlas_flat(n=2, p=2):
    m = n + p
    g = CoefficientField(np.eye(m).tolist(), m, "dd")
    dist = tuple(CoefficientField([1 if i == a else 0 for i in range(m)], m, "u")
                 for a in range(n))
    return ChartAtlas(n, Box.torus(m), g, dist)

x = np.array([0.3, 1.1, 2.0, 0.7])
A = atlas_flat()
mr = el.mixed_ricci(A, x, cfg)
print("flat mixed_ricci max:", np.max(np.abs(mr.ric)), "trace res:", mr.trace_residual)
for b in el.einstein_mixed_residual(A, x, cfg):
    print("flat", b.name, b.sup_norm, b.best_fit_lambda)
for b in el.contorsion_el_residuals(A, x, cfg):
    assert b.sup_norm < 1e-9, (b.name, b.sup_norm)
for b in el.st_action_el_residuals(A, x, cfg):
    assert b.sup_norm < 1e-9, (b.name, b.sup_norm)
for b in el.statistical_criticality(A, x, cfg):
    assert b.sup_norm < 1e-8, (b.name, b.sup_norm)
for b in el.metric_connection_el(A, x, cfg):
    assert b.sup_norm < 1e-8, (b.name, b.sup_norm)
out = el.semi_symmetric_el(A, x, cfg)
for b in out["blocks"] + [out["einstein"]]:
    assert b.sup_norm < 1e-8, (b.name, b.sup_norm)
print("flat all-zero OK")

# warped torus, n=1: compare assembled blocks against the space-time form
import sympy as sy
m = 3
f = "0.2*sin(x1) + 0.1*cos(x2)"
g = [[1, 0, 0], [0, f"exp(2*({f}))", 0], [0, 0, f"exp(-2*0.5*({f}) + 1)"]]
gfield = CoefficientField(g, m, "dd")
dist = (CoefficientField([1, 0, 0], m, "u"),)
W = ChartAtlas(1, Box.torus(m), gfield, dist)
xw = np.array([0.4, 1.3, 2.2])
mrw = el.mixed_ricci(W, xw, cfg)
stw = el.space_time_ricci(W, xw, cfg)
print("warped trace res:", mrw.trace_residual, stw.trace_residual)
print("block diff perp:", np.max(np.abs(mrw.block_perp - stw.block_perp)))
print("block diff V:", np.max(np.abs(mrw.block_V - stw.block_V)))
print("block diff top:", np.max(np.abs(mrw.block_top - stw.block_top)))
print("s_D diff:", np.max(np.abs(mrw.s_D - stw.s_D)))
