"""Find a K- datum whose discrete blow-up detection lands before T*."""
import math
import time as clock

import numpy as np

from rnls.basis import BasisSpec, build_basis, SpectralField, norms
from rnls.nonlinearity import NonlinearityParams, theta_quadrature, theta_exactness_threshold
from rnls.functionals import report
from rnls.ground_state import petviashvili_solve, gap_check
from rnls.evolution import SchemeConfig, evolve
from rnls.virial import build_weight, W_and_derivatives, concavity_monitor

spec = BasisSpec(N_hermite=6, M_quad=10, N_z=96, L_z=24.0 * math.pi)
table = build_basis(spec)
params = NonlinearityParams(sigma=2.5, lam=-1.0)
quad = theta_quadrature(theta_exactness_threshold(spec.N_hermite, 2.5))

gs = petviashvili_solve(table, params, quad, tol=1e-10)
d = gs.d
print(f"d = {d:.8f} converged={gs.converged}", flush=True)
w = build_weight(table, "untruncated_z2")

for amp in (1.2, 1.35, 1.5):
    phi = SpectralField(coeffs=amp * gs.Q.coeffs, basis=table, time=0.0)
    r = report(phi, params, quad)
    ok = r.S < d and r.I < 0
    g = gap_check(phi, d, params, quad) if ok else float("nan")
    dw = W_and_derivatives(phi, w, params, quad)
    C1 = 0.25 * (d - r.S)
    Tstar = (dw["Wp"] + math.sqrt(dw["Wp"] ** 2 + 4.0 * C1 * dw["W"])) / (2.0 * C1)
    print(f"amp={amp}: S={r.S:.4f} I={r.I:.2f} K-={ok} gap={g:.3e} "
          f"W0={dw['W']:.3f} C1={C1:.3f} T*={Tstar:.3f}", flush=True)
    t0 = clock.time()
    T_run = min(4.0, 2e-3 * math.ceil(2.0 * Tstar / 2e-3))
    cfg = SchemeConfig(scheme="lawson_rk4", dt=2e-3, T=T_run,
                       conservation_check_every=50, blowup_factor=25.0)
    tr = evolve(phi, cfg, params, quad,
                extra_diagnostics=lambda f: W_and_derivatives(f, w, params, quad))
    t1 = clock.time()
    grad0 = norms(phi)["grad_z_sq"]
    grads = [norms(f)["grad_z_sq"] / grad0 for f in (tr.final,)]
    Ws = [e["W"] for e in tr.extras]
    print(f"  run {t1-t0:.0f}s: termination={tr.termination} t_final={tr.final.time:.3f} "
          f"grad_ratio_final={grads[0]:.1f} detect<=T*: {tr.final.time <= Tstar}", flush=True)
    print(f"  W records: " + " ".join(f"{v:.2f}" for v in Ws[:18]), flush=True)
    if tr.termination == "blowup_detected" and len(tr.reports) >= 3:
        mon = concavity_monitor(tr, d, params)
        print(f"  monitor T*={mon['predicted_vanishing_time']:.3f} concave={mon['concave']} "
              f"margin={mon['max_concavity_margin']:.2e}", flush=True)
print("DONE", flush=True)
