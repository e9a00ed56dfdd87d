"""Does S >= d hold on the boundary manifold {P = 0} ((1,2) at sigma=2)?"""
import math

from rnls.basis import BasisSpec, build_basis, random_field, packet_field
from rnls.nonlinearity import NonlinearityParams, theta_quadrature, theta_exactness_threshold
from rnls.functionals import report
from rnls.ground_state import petviashvili_solve, nehari_amplitude

spec = BasisSpec(N_hermite=10, M_quad=14, N_z=96, L_z=24.0 * math.pi)
table = build_basis(spec)

for sigma in (2.0, 2.5, 3.0):
    params = NonlinearityParams(sigma=sigma, lam=-1.0)
    quad = theta_quadrature(theta_exactness_threshold(spec.N_hermite, sigma))
    gs = petviashvili_solve(table, params, quad, tol=1e-10)
    d = gs.d
    print(f"sigma={sigma}: d={d:.8f} converged={gs.converged}", flush=True)
    for (a, b) in ((1.0, 0.0), (1.0, 2.0)):
        worst = math.inf
        for seed in range(50):
            f = random_field(table, seed) if seed % 2 == 0 else packet_field(table, seed)
            proj, r = nehari_amplitude(f, a, b, params, quad)
            S = report(proj, params, quad).S
            worst = min(worst, S / d)
        print(f"  (a,b)=({a},{b}): min S/d over 50 fields = {worst:.6f}", flush=True)
