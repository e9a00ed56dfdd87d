"""Binary checkpoint files for spectral fields.

Layout (little-endian):
    magic   4 bytes  b"RNLS"
    version u32      currently 1
    N_hermite, M_quad, N_z   u32 each
    L_z, sigma, lambda, time f64 each
    payload  (N_hermite+1)^2 * N_z complex coefficients as interleaved
             f64 (re, im), n1-major, then n2, then k — i.e. C-ordered
             complex128 of shape (N_hermite+1, N_hermite+1, N_z).

The theta-quadrature size is a runtime choice, not state, so it is not
stored.  A checkpoint therefore pins the basis, the model parameters
(sigma, lambda), and the field at one time.
"""

from __future__ import annotations

import struct

import numpy as np

from .basis import BasisSpec, HermiteTable, SpectralField, build_basis
from .nonlinearity import NonlinearityParams

__all__ = ["CheckpointError", "write_checkpoint", "read_checkpoint", "FORMAT_VERSION"]

_MAGIC = b"RNLS"
_HEADER = struct.Struct("<4s4I4d")  # magic, version, 3 sizes, 4 reals
FORMAT_VERSION = 1


class CheckpointError(IOError):
    """Malformed or truncated checkpoint file."""


def write_checkpoint(path, field: SpectralField, params: NonlinearityParams) -> None:
    spec = field.basis.spec
    header = _HEADER.pack(
        _MAGIC,
        FORMAT_VERSION,
        spec.N_hermite,
        spec.M_quad,
        spec.N_z,
        spec.L_z,
        params.sigma,
        params.lam,
        field.time,
    )
    payload = np.ascontiguousarray(field.coeffs, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_checkpoint(path, table: HermiteTable | None = None):
    """Load a checkpoint -> (SpectralField, NonlinearityParams).

    table, if given, must match the stored basis (avoids rebuilding the
    Hermite table when the caller already has it); otherwise one is built
    from the stored BasisSpec.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"{path}: truncated header")
    magic, version, n_h, m_q, n_z, L_z, sigma, lam, time = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    try:
        spec = BasisSpec(N_hermite=n_h, M_quad=m_q, N_z=n_z, L_z=L_z)
        params = NonlinearityParams(sigma=sigma, lam=lam)
    except ValueError as exc:
        raise CheckpointError(f"{path}: invalid header fields: {exc}") from exc
    a = n_h + 1
    expected = _HEADER.size + a * a * n_z * 16
    if len(raw) != expected:
        raise CheckpointError(
            f"{path}: payload size {len(raw) - _HEADER.size} bytes, "
            f"expected {expected - _HEADER.size}"
        )
    coeffs = (
        np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
        .reshape(a, a, n_z)
        .astype(np.complex128)
    )
    if table is None:
        table = build_basis(spec)
    elif table.spec != spec:
        raise CheckpointError(
            f"{path}: stored basis {spec} does not match the supplied table {table.spec}"
        )
    return SpectralField(coeffs=coeffs, basis=table, time=time), params
