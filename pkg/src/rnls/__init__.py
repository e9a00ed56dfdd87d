"""rnls: spectral simulation and variational toolkit for the 3D nonlinear
Schrodinger equation with an angle-averaged nonlinearity under partial
harmonic confinement.

Subpackages are organized by concern: basis construction and transforms
(`basis`), linear flows (`propagators`), the averaged nonlinearity
(`nonlinearity`), conserved/variational functionals (`functionals`), time
integration (`evolution`), ground states and the action threshold
(`ground_state`), localized virial monitors (`virial`), scattering
diagnostics (`scattering`), and I/O (`config`, `checkpoint`, `cli`).
"""

__version__ = "0.1.0"
