import numpy as np, time, sympy as sy
from mixedcurv.geometry_core import Box, ChartAtlas, CoefficientField, JetConfig
from mixedcurv.extrinsic import FrameData
from mixedcurv.levi_civita import QuadratureGrid
from mixedcurv.invariants import s_mix
from mixedcurv import euler_lagrange as el

t0=time.time()
cfg = JetConfig(); m = 4
L = {s.name: s for s in sy.symbols("x1:5", real=True)}
S = lambda e: sy.sympify(e, locals=L)
g = [[S("1.3+0.2*cos(x3)"),0,0,0],[0,S("1.1+0.1*sin(x1+x4)"),0,0],
     [0,0,S("0.9+0.15*sin(x2)"),0],[0,0,0,S("1.0+0.1*cos(x1)")]]
gsym = sy.Matrix(g)
sfun, cfun = S("0.2*sin(x4)"), S("0.15*cos(x3)")
d1e = [1,0,sfun,0]; d2e = [0,1,0,cfun]
d1 = CoefficientField(d1e, m, "u"); d2 = CoefficientField(d2e, m, "u")
box = Box.torus(m)
A0 = ChartAtlas(2, box, CoefficientField(np.array(gsym.tolist(),dtype=object), m, "dd"), (d1,d2))
grid = QuadratureGrid(nodes_per_axis=6)
pts, w = grid.points_and_weight(box)
rng = np.random.default_rng(5)
def rand_scalar(rng):
    c = rng.uniform(-0.5,0.5,4)
    return S(f"{c[0]:.4f}+{c[1]:.4f}*sin(x1)+{c[2]:.4f}*cos(x2)+{c[3]:.4f}*sin(x3+x4)")
def makeB(rng, pure_V=True):
    u3, u4 = rand_scalar(rng), rand_scalar(rng)
    om = sy.Matrix([-sfun*u3, -cfun*u4, u3, u4])
    if pure_V:
        c1, c2 = rand_scalar(rng), rand_scalar(rng)
        vvec = sy.Matrix([c1*d1e[k] + c2*d2e[k] for k in range(m)])
        rho = gsym*vvec
        return (om*rho.T + rho*om.T)/2
    else:
        v3, v4 = rand_scalar(rng), rand_scalar(rng)
        om2 = sy.Matrix([-sfun*v3, -cfun*v4, v3, v4])
        return (om*om2.T + om2*om.T)/2
def action(gt):
    At = ChartAtlas(2, box, CoefficientField(np.array(gt.tolist(),dtype=object), m, "dd"), (d1,d2))
    fd = FrameData(At, pts, cfg)
    sm = s_mix(At, pts, cfg, data=fd)
    dens = np.sqrt(np.abs(np.linalg.det(At.metric_at(pts))))
    return np.sum(sm*dens)*w
fd = FrameData(A0, pts, cfg)
mr = el.mixed_ricci(A0, pts, cfg, data=fd)
sm = s_mix(A0, pts, cfg, data=fd)
from mixedcurv.invariants import div_of_vector
divHtH = div_of_vector(fd, lambda d: d.vec_coord(d.Htc - d.Hc))
# Einstein-form LHS blocks (coefficient conventions as in einstein_mixed_residual)
Rperp = mr.block_perp - 0.5*(sm + divHtH)[..., None, None]*fd.g_perp()
Rv = mr.block_V
dens = np.sqrt(np.abs(np.linalg.det(A0.metric_at(pts))))
h = 1e-3
print("setup", time.time()-t0, flush=True)
for k, pure in [(0,True),(1,True),(2,False)]:
    Bs = makeB(rng, pure)
    dI = (action(gsym + h*Bs) - action(gsym - h*Bs))/(2*h)
    Bf = fd.t2_frame(CoefficientField(np.array(Bs.tolist(),dtype=object), m, "dd").eval(pts))
    pair_p = np.sum(fd.inner_t2(Rperp,Bf)*dens)*w
    pair_v = np.sum(fd.inner_t2(Rv,Bf)*dens)*w
    pred = -(pair_p+pair_v)
    print(f"sample {k} pureV={pure} dI={dI:.10f} pred={pred:.10f} rel={abs(dI-pred)/max(1,abs(dI)):.3e}", flush=True)
print("t", time.time()-t0)
