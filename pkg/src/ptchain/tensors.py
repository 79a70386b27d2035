"""Dense complex tensors, pairwise contraction, and relative-threshold truncated SVD.

Data layout convention: every tensor stores its values in C (row-major) order
over the declared leg order.  All serialization (see :func:`write_tensor_blob`)
relies on this layout, so it must not change.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericsError

__all__ = [
    "Tensor",
    "SvdResult",
    "contract",
    "truncated_svd",
    "split_matrix",
    "write_tensor_blob",
    "read_tensor_blob",
]

# Singular values closer than this (relative to the largest one) are treated
# as a degenerate multiplet and are kept or dropped together.
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class Tensor:
    """Dense complex tensor with optionally named legs.

    Immutable after construction; safe to share between threads.
    """

    data: np.ndarray
    legs: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.complex128)
        object.__setattr__(self, "data", arr)
        if self.legs is not None:
            legs = tuple(self.legs)
            if len(legs) != arr.ndim:
                raise ValueError(
                    f"{len(legs)} leg labels for a {arr.ndim}-leg tensor"
                )
            object.__setattr__(self, "legs", legs)
        if not np.all(np.isfinite(arr)):
            raise NumericsError("tensor contains NaN or Inf entries")
        arr.setflags(write=False)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def reshape(self, *shape: int) -> "Tensor":
        return Tensor(self.data.reshape(*shape))

    def transpose(self, *axes: int) -> "Tensor":
        return Tensor(self.data.transpose(*axes))


@dataclass(frozen=True)
class SvdResult:
    """Truncated SVD ``m = u @ diag(sigma) @ vdag`` plus truncation metadata.

    ``discarded_weight`` is the 2-norm of the dropped singular values, i.e.
    the Frobenius norm of ``m - u @ diag(sigma) @ vdag``.
    """

    u: Tensor
    sigma: np.ndarray
    vdag: Tensor
    chi: int
    discarded_weight: float

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=np.float64)
        object.__setattr__(self, "sigma", sig)
        sig.setflags(write=False)


def contract(a: Tensor, b: Tensor, pairs: list[tuple[int, int]]) -> Tensor:
    """Contract tensors ``a`` and ``b`` over the given leg index pairs.

    ``pairs`` lists ``(leg_of_a, leg_of_b)`` index pairs.  The result carries
    the unpaired legs of ``a`` followed by the unpaired legs of ``b``, in
    their original order.
    """
    if not pairs:
        return Tensor(np.multiply.outer(a.data, b.data))
    ax_a, ax_b = zip(*pairs)
    for ia, ib in pairs:
        if not (-a.ndim <= ia < a.ndim) or not (-b.ndim <= ib < b.ndim):
            raise IndexError(f"contraction pair ({ia}, {ib}) out of range")
        if a.shape[ia] != b.shape[ib]:
            raise ValueError(
                f"leg dimension mismatch: a.shape[{ia}]={a.shape[ia]} vs "
                f"b.shape[{ib}]={b.shape[ib]}"
            )
    return Tensor(np.tensordot(a.data, b.data, axes=(ax_a, ax_b)))


def split_matrix(
    m: np.ndarray, epsilon_rel: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Truncated SVD of a 2D array; ndarray-level workhorse of the package.

    The retained rank ``chi`` is the smallest rank such that the 2-norm of the
    discarded singular values stays below ``epsilon_rel * sigma_max``.  The
    cut never splits a degenerate multiplet (values equal within
    ``DEGENERACY_TOL * sigma_max``) and at least one value is always kept.

    Returns ``(u, sigma, vdag, discarded_weight)``.
    """
    if m.ndim != 2:
        raise ValueError("split_matrix expects a 2D array")
    if m.size == 0:
        raise ValueError("cannot decompose an empty matrix")
    if not (0.0 < epsilon_rel < 1.0):
        raise ValueError("epsilon_rel must lie in (0, 1)")
    if not np.all(np.isfinite(m)):
        raise NumericsError("matrix contains NaN or Inf entries")
    try:
        u, sigma, vdag = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare LAPACK failure
        raise NumericsError(f"SVD failed to converge: {exc}") from exc

    smax = sigma[0] if sigma.size else 0.0
    if smax == 0.0:
        # Exactly zero matrix: keep a single null direction.
        chi = 1
        return u[:, :1], sigma[:1], vdag[:1], 0.0

    # Cumulative tail 2-norms: tail[k] = ||sigma[k:]||_2.
    tail = np.sqrt(np.cumsum(sigma[::-1] ** 2))[::-1]
    threshold = epsilon_rel * smax
    keep = tail >= threshold
    chi = int(np.count_nonzero(keep))
    chi = max(chi, 1)
    # Extend through a degenerate multiplet at the cut so chi is reproducible
    # across platforms.  Values at zero scale are exempt: dropping part of a
    # zero multiplet changes nothing.
    while (
        chi < sigma.size
        and sigma[chi] >= DEGENERACY_TOL * smax
        and sigma[chi - 1] - sigma[chi] <= DEGENERACY_TOL * smax
    ):
        chi += 1
    discarded = float(np.linalg.norm(sigma[chi:]))
    return u[:, :chi], sigma[:chi], vdag[:chi], discarded


def truncated_svd(m: Tensor, epsilon_rel: float) -> SvdResult:
    """Relative-threshold truncated SVD of a 2-leg tensor.

    The truncation rule keeps the smallest rank for which the 2-norm of the
    dropped singular values is below ``epsilon_rel`` times the largest
    singular value.
    """
    if m.ndim != 2:
        raise ValueError("truncated_svd expects a tensor with exactly 2 legs")
    u, sigma, vdag, discarded = split_matrix(m.data, epsilon_rel)
    return SvdResult(
        u=Tensor(u),
        sigma=sigma,
        vdag=Tensor(vdag),
        chi=int(sigma.size),
        discarded_weight=discarded,
    )


# ---------------------------------------------------------------------------
# Binary tensor blob format
#
#   uint64 LE   number of legs
#   uint64 LE   leg dimension, repeated once per leg
#   complex128  payload, little-endian, C order over the declared legs
# ---------------------------------------------------------------------------

def write_tensor_blob(fh, array: np.ndarray) -> None:
    """Append one tensor in the binary blob format to a file handle."""
    arr = np.ascontiguousarray(array, dtype=np.complex128)
    fh.write(struct.pack("<Q", arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
    fh.write(arr.astype("<c16", copy=False).tobytes(order="C"))


def read_tensor_blob(fh) -> np.ndarray:
    """Read one tensor written by :func:`write_tensor_blob`."""
    head = fh.read(8)
    if len(head) != 8:
        raise ValueError("truncated tensor blob: missing leg count")
    (ndim,) = struct.unpack("<Q", head)
    if ndim > 64:
        raise ValueError(f"implausible tensor rank {ndim}")
    raw = fh.read(8 * ndim)
    if len(raw) != 8 * ndim:
        raise ValueError("truncated tensor blob: missing shape")
    shape = struct.unpack(f"<{ndim}Q", raw)
    count = int(np.prod(shape)) if ndim else 1
    payload = fh.read(16 * count)
    if len(payload) != 16 * count:
        raise ValueError("truncated tensor blob: missing payload")
    arr = np.frombuffer(payload, dtype="<c16").reshape(shape)
    return arr.astype(np.complex128)
