"""Vectorization conventions and Liouville-space index shuffles.

Everything in the package uses column stacking: ``vec(rho)[i + d*j] = rho[i, j]``,
so ``vec(A rho B) = (B^T kron A) vec(rho)``.  Each MPS physical leg carries one
site's Liouville index with the same per-site convention.
"""
from __future__ import annotations

import numpy as np


def vec_density(rho: np.ndarray) -> np.ndarray:
    """Column-stack a density matrix into a Liouville vector."""
    return np.asarray(rho, dtype=np.complex128).flatten(order="F")


def unvec_density(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v, dtype=np.complex128).reshape((d, d), order="F")


def sandwich_superop(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho @ b``."""
    return np.kron(b.T, a)


def left_superop(a: np.ndarray) -> np.ndarray:
    """Superoperator of left multiplication ``rho -> a @ rho``."""
    d = a.shape[0]
    return np.kron(np.eye(d, dtype=np.complex128), a)


def right_superop(b: np.ndarray) -> np.ndarray:
    """Superoperator of right multiplication ``rho -> rho @ b``."""
    d = b.shape[0]
    return np.kron(b.T, np.eye(d, dtype=np.complex128))


def hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator of ``-i [h, .]``."""
    return -1.0j * (left_superop(h) - right_superop(h))


def dissipator_superop(L: np.ndarray) -> np.ndarray:
    """GKSL dissipator ``rho -> L rho L^dag - (1/2){L^dag L, rho}``."""
    LdL = L.conj().T @ L
    return (
        sandwich_superop(L, L.conj().T)
        - 0.5 * left_superop(LdL)
        - 0.5 * right_superop(LdL)
    )


def trace_vector(d: int) -> np.ndarray:
    """Row vector ``t`` with ``t @ vec(rho) = Tr[rho]``."""
    return vec_density(np.eye(d, dtype=np.complex128)).conj()


def op_weight_vector(op: np.ndarray) -> np.ndarray:
    """Row vector ``w`` with ``w @ vec(rho) = Tr[op @ rho]``."""
    return np.asarray(op, dtype=np.complex128).flatten(order="C")


def pair_superop_to_gate(mat: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """Rewire a two-site superoperator into a TEBD gate tensor.

    Input: superoperator on the pair Liouville space (column stacking over the
    pair Hilbert space, site 1 the slow kron factor).  Output tensor has legs
    ``(out_1, out_2, in_1, in_2)``, each a per-site Liouville leg.
    """
    D = d1 * d2
    t = mat.reshape(d1, d2, d1, d2, d1, d2, d1, d2)
    # axes: (j1 j2 i1 i2 | j1' j2' i1' i2') -> (j1 i1)(j2 i2)(j1' i1')(j2' i2')
    t = t.transpose(0, 2, 1, 3, 4, 6, 5, 7)
    return np.ascontiguousarray(t.reshape(d1 * d1, d2 * d2, d1 * d1, d2 * d2))


def gate_to_pair_superop(gate: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """Inverse of :func:`pair_superop_to_gate` (test utility)."""
    t = gate.reshape(d1, d1, d2, d2, d1, d1, d2, d2)
    t = t.transpose(0, 2, 1, 3, 4, 6, 5, 7)
    D = d1 * d2
    return np.ascontiguousarray(t.reshape(D * D, D * D))


def site_legs_to_vec(tensor: np.ndarray, dims: list[int]) -> np.ndarray:
    """Merge per-site Liouville legs into one column-stacked chain vector."""
    n = len(dims)
    split = []
    for d in dims:
        split.extend([d, d])
    t = tensor.reshape(split)  # (j1 i1 j2 i2 ...)
    perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    t = t.transpose(perm)  # (j1..jN i1..iN)
    D = int(np.prod(dims))
    return np.ascontiguousarray(t.reshape(D * D))


def vec_to_site_legs(v: np.ndarray, dims: list[int]) -> np.ndarray:
    """Split a column-stacked chain vector into per-site Liouville legs."""
    n = len(dims)
    t = v.reshape([d for d in dims] + [d for d in dims])  # (j1..jN i1..iN)
    perm = []
    for k in range(n):
        perm.extend([k, n + k])
    t = t.transpose(perm)  # (j1 i1 j2 i2 ...)
    return np.ascontiguousarray(t.reshape([d * d for d in dims]))


def vec_to_density(v: np.ndarray, dims: list[int]) -> np.ndarray:
    """Reshape a column-stacked chain vector into the chain density matrix."""
    D = int(np.prod(dims))
    return v.reshape((D, D), order="F")


def choi_matrix(superop: np.ndarray, d: int) -> np.ndarray:
    """Choi matrix of a superoperator in the column-stacking convention."""
    s4 = superop.reshape(d, d, d, d)  # (j_out, i_out, j_in, i_in)
    return s4.transpose(1, 3, 0, 2).reshape(d * d, d * d)
