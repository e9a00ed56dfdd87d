"""Reference-resolution calibration: T=1 conservation, duality, drift orders."""
import math
import time as clock

import numpy as np

from rnls.basis import BasisSpec, build_basis, gaussian_field, b1_distance
from rnls.propagators import apply_V
from rnls.nonlinearity import (
    NonlinearityParams,
    theta_quadrature,
    theta_exactness_threshold,
)
from rnls.functionals import report
from rnls.evolution import SchemeConfig, evolve

REF = BasisSpec(N_hermite=16, M_quad=24, N_z=128, L_z=40.0 * math.pi)
table = build_basis(REF)
params = NonlinearityParams(sigma=2.0, lam=-1.0)
quad = theta_quadrature(64)
print("exactness threshold sigma=2, N_h=16:", theta_exactness_threshold(16, 2.0), flush=True)

phi0 = gaussian_field(table, amplitude=0.8, y_width=1.0, z_width=3.0, z_velocity=0.25)
r0 = report(phi0, params, quad)
print(f"datum: M={r0.M:.6f} E={r0.E:.6f} G={r0.G:.6f} K={r0.K:.6f} S={r0.S:.6f} I={r0.I:.6f}", flush=True)

def drifts(traj, keys=("M", "K", "E", "G", "S")):
    out = {}
    for k in keys:
        vals = np.array([getattr(r, k) for r in traj.reports])
        ref = abs(vals[0]) if abs(vals[0]) > 0 else 1.0
        out[k] = float(np.abs(vals - vals[0]).max() / ref)
    return out

# --- C6 main run: T=1, lawson, dt=1e-3 ----------------------------------
t0 = clock.time()
cfg = SchemeConfig(scheme="lawson_rk4", dt=1e-3, T=1.0, conservation_check_every=100)
traj = evolve(phi0, cfg, params, quad)
t1 = clock.time()
print(f"C6 main run: {t1-t0:.1f}s termination={traj.termination}", flush=True)
print("C6 drifts:", {k: f"{v:.3e}" for k, v in drifts(traj).items()}, flush=True)

# --- C7 duality: psi-run under the full linear flow ---------------------
t0 = clock.time()
traj2 = evolve(phi0, cfg, params, quad, model="nls2")
t1 = clock.time()
print(f"C7 psi run: {t1-t0:.1f}s termination={traj2.termination}", flush=True)
d = b1_distance(apply_V(traj.final, traj.final.time), traj2.final)
print(f"C7 duality B1 distance at T=1: {d:.3e}", flush=True)

# --- C6 order sub-check: drifts at T=0.1 under dt halving ---------------
for scheme in ("strang_rk4", "lawson_rk4"):
    rows = []
    for dt in (2e-3, 1e-3, 5e-4):
        c = SchemeConfig(scheme=scheme, dt=dt, T=0.1,
                         conservation_check_every=max(1, int(round(0.1 / dt)) // 2))
        tr = evolve(phi0, c, params, quad)
        dd = drifts(tr)
        rows.append((dt, dd))
        print(f"{scheme} dt={dt:.1e}: " + " ".join(f"{k}={v:.3e}" for k, v in dd.items()), flush=True)
    for k in ("E", "G"):
        e = [r[1][k] for r in rows]
        if min(e) > 0:
            s1 = math.log2(e[0] / e[1])
            s2 = math.log2(e[1] / e[2])
            print(f"{scheme} {k}-drift slopes: {s1:.2f}, {s2:.2f}", flush=True)
print("DONE", flush=True)
