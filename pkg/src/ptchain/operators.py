"""Spin operators and small dense-operator helpers shared across modules."""
from __future__ import annotations

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=np.complex128)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=np.complex128)

# Spin-1/2 operators.
SX = SIGMA_X / 2.0
SY = SIGMA_Y / 2.0
SZ = SIGMA_Z / 2.0

_NAMED = {
    "sx": SX,
    "sy": SY,
    "sz": SZ,
    "sigma_x": SIGMA_X,
    "sigma_y": SIGMA_Y,
    "sigma_z": SIGMA_Z,
    "sigma_plus": SIGMA_PLUS,
    "sigma_minus": SIGMA_MINUS,
    "identity": np.eye(2, dtype=np.complex128),
}


def named_operator(name: str) -> np.ndarray:
    """Look up a qubit operator by name (used by configs and the CLI)."""
    try:
        return _NAMED[name].copy()
    except KeyError:
        raise ValueError(
            f"unknown operator {name!r}; known: {sorted(_NAMED)}"
        ) from None


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def kron_all(*ops: np.ndarray) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def site_operator(op: np.ndarray, site: int, dims: list[int]) -> np.ndarray:
    """Embed a single-site operator into the full tensor-product space."""
    facs = [np.eye(d, dtype=np.complex128) for d in dims]
    facs[site] = op
    return kron_all(*facs)
