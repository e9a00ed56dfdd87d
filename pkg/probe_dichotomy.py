"""Calibrate the sigma=2.5 dichotomy: K+ scattering run and K- blow-up run."""
import math
import time as clock

from rnls.basis import BasisSpec, build_basis, gaussian_field, SpectralField
from rnls.nonlinearity import NonlinearityParams, theta_quadrature, theta_exactness_threshold
from rnls.functionals import report
from rnls.ground_state import petviashvili_solve, gap_check
from rnls.evolution import SchemeConfig, evolve
from rnls.scattering import asymptotic_profile
from rnls.virial import build_weight, W_and_derivatives, concavity_monitor

spec = BasisSpec(N_hermite=6, M_quad=10, N_z=96, L_z=32.0 * math.pi)
table = build_basis(spec)
params = NonlinearityParams(sigma=2.5, lam=-1.0)
quad = theta_quadrature(theta_exactness_threshold(spec.N_hermite, 2.5))
print("N_theta:", quad.nodes.size, flush=True)

gs = petviashvili_solve(table, params, quad, tol=1e-10)
d = gs.d
print(f"d = {d:.8f} converged={gs.converged}", flush=True)

# ---- K+ small datum, T=20 ------------------------------------------------
phi0 = gaussian_field(table, amplitude=0.3, y_width=1.0, z_width=2.5, z_velocity=0.0)
r0 = report(phi0, params, quad)
print(f"K+ datum: M={r0.M:.4f} S={r0.S:.6f} I={r0.I:.6f} (S<d: {r0.S < d}, I>0: {r0.I > 0})", flush=True)

t0 = clock.time()
cfg = SchemeConfig(scheme="lawson_rk4", dt=5e-3, T=20.0,
                   conservation_check_every=400, checkpoint_every=500)
traj = evolve(phi0, cfg, params, quad)
t1 = clock.time()
print(f"K+ run: {t1-t0:.1f}s termination={traj.termination} n_ckpts={len(traj.checkpoints)}", flush=True)
rep = asymptotic_profile(traj.checkpoints)
print("checkpoint times:", [f"{t:.1f}" for t in rep.profile_times], flush=True)
print("cauchy defects:", [f"{v:.3e}" for v in rep.cauchy_defects], flush=True)
print("monotone:", rep.monotone_cauchy, flush=True)

# drift sanity on the long run
Ms = [r.M for r in traj.reports]
Es = [r.E for r in traj.reports]
print(f"M drift {max(abs(m-Ms[0]) for m in Ms)/Ms[0]:.2e}  E drift {max(abs(e-Es[0]) for e in Es)/abs(Es[0]):.2e}", flush=True)

# ---- K- datum: 1.2 Q ------------------------------------------------------
phi1 = SpectralField(coeffs=1.2 * gs.Q.coeffs, basis=table, time=0.0)
r1 = report(phi1, params, quad)
print(f"K- datum: S={r1.S:.6f} I={r1.I:.6f} P={r1.P:.6f} (S<d: {r1.S < d}, I<0: {r1.I < 0})", flush=True)
g = gap_check(phi1, d, params, quad)
print(f"gap_check = {g:.6e} (<=1e-8: {g <= 1e-8})", flush=True)

w = build_weight(table, "untruncated_z2")
extras = lambda f: W_and_derivatives(f, w, params, quad)
for factor in (25.0, 100.0):
    t0 = clock.time()
    cfgb = SchemeConfig(scheme="lawson_rk4", dt=2e-3, T=3.0,
                        conservation_check_every=25, blowup_factor=factor)
    trb = evolve(phi1, cfgb, params, quad, extra_diagnostics=extras)
    t1 = clock.time()
    t_detect = trb.final.time
    print(f"K- run factor={factor}: {t1-t0:.1f}s termination={trb.termination} t_final={t_detect:.4f}", flush=True)
    if trb.termination == "blowup_detected":
        mon = concavity_monitor(trb, d, params)
        print(f"  monitor: T*={mon['predicted_vanishing_time']:.4f} C1={mon['C1']:.4f} "
              f"W0={mon['W0']:.4f} Wp0={mon['Wp0']:.2e} concave={mon['concave']} "
              f"detect<=T*: {t_detect <= mon['predicted_vanishing_time']}", flush=True)
print("DONE", flush=True)
