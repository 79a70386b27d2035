"""Chain models: on-site/bond Hamiltonians, GKSL terms, and Trotter gate schedules.

The chain generator splits into bond generators by absorbing on-site terms into
the nearest-neighbor couplings: edge bonds take the full on-site term of their
outer site, every interior appearance carries weight 1/2.  Dissipative on-site
terms are split with the same weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .liouville import (
    dissipator_superop,
    hamiltonian_superop,
    pair_superop_to_gate,
)
from .operators import SX, SY, SZ, is_hermitian, kron_all, site_operator

__all__ = [
    "SiteModel",
    "ChainModel",
    "GateEntry",
    "GateSchedule",
    "vectorize_liouvillian",
    "absorb_onsite",
    "bond_liouvillian",
    "trotter_gates",
    "builtin_models",
    "xyz_chain",
    "xy_chain",
    "chain_hamiltonian",
    "chain_liouvillian",
]

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class SiteModel:
    """One chain site: local dimension, on-site Hamiltonian, GKSL operators.

    Rates are folded into the operators, i.e. a damping channel with rate
    ``gamma`` enters as ``sqrt(gamma) * op``.
    """

    d: int
    h_s: np.ndarray
    lindblad_ops: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("site dimension must be >= 2")
        h = np.asarray(self.h_s, dtype=np.complex128)
        if h.shape != (self.d, self.d):
            raise ValueError(f"h_s must be {self.d}x{self.d}")
        if not is_hermitian(h, HERMITICITY_TOL):
            raise ValueError("on-site Hamiltonian is not Hermitian")
        object.__setattr__(self, "h_s", h)
        ops = [np.asarray(L, dtype=np.complex128) for L in self.lindblad_ops]
        for L in ops:
            if L.shape != (self.d, self.d):
                raise ValueError("Lindblad operator has wrong shape")
        object.__setattr__(self, "lindblad_ops", ops)


@dataclass(frozen=True)
class ChainModel:
    """N sites plus N-1 nearest-neighbor Hermitian bond couplings.

    ``bond_dissipators[n]`` holds optional GKSL operators acting on the pair
    ``(n, n+1)``, e.g. for driving terms added directly to a bond generator.
    """

    sites: list[SiteModel]
    bonds: list[np.ndarray]
    bond_dissipators: dict[int, list[np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.sites)
        if n < 1:
            raise ValueError("chain needs at least one site")
        if len(self.bonds) != max(n - 1, 0):
            raise ValueError(f"expected {n - 1} bond operators, got {len(self.bonds)}")
        bonds = []
        for i, k in enumerate(self.bonds):
            dpair = self.sites[i].d * self.sites[i + 1].d
            k = np.asarray(k, dtype=np.complex128)
            if k.shape != (dpair, dpair):
                raise ValueError(f"bond {i} operator must be {dpair}x{dpair}")
            if not is_hermitian(k, HERMITICITY_TOL):
                raise ValueError(f"bond {i} coupling is not Hermitian")
            bonds.append(k)
        object.__setattr__(self, "bonds", bonds)
        for i in self.bond_dissipators:
            if not 0 <= i < n - 1:
                raise ValueError(f"bond dissipator index {i} out of range")

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def dims(self) -> list[int]:
        return [s.d for s in self.sites]


@dataclass(frozen=True)
class GateEntry:
    bond: int
    gate: np.ndarray  # (d_l^2, d_r^2, d_l^2, d_r^2) superoperator gate tensor
    frac: float  # fraction of dt this gate exponentiates


@dataclass(frozen=True)
class GateSchedule:
    """Ordered two-site gates implementing exp(L_chain * dt/2)."""

    order: int
    dt: float
    entries: list[GateEntry]


def vectorize_liouvillian(site: SiteModel) -> np.ndarray:
    """Column-stacked GKSL generator of one site.

    Returns ``-i(I kron H - H^T kron I) + sum_k D[L_k]`` acting on
    ``vec(rho)``; the generated semigroup is trace preserving and completely
    positive.
    """
    L = hamiltonian_superop(site.h_s)
    for op in site.lindblad_ops:
        L = L + dissipator_superop(op)
    return L


def _onsite_weights(n_sites: int, bond: int) -> tuple[float, float]:
    """Weights with which sites (bond, bond+1) enter this bond generator."""
    if n_sites == 2:
        return 1.0, 1.0
    w_l = 1.0 if bond == 0 else 0.5
    w_r = 1.0 if bond == n_sites - 2 else 0.5
    return w_l, w_r


def absorb_onsite(chain: ChainModel) -> list[np.ndarray]:
    """Absorb on-site Hamiltonians into the bond couplings.

    Returns the list of K' bond operators; their lifted sum reproduces the
    full chain Hamiltonian exactly.
    """
    n = chain.n_sites
    if n < 2:
        raise ValueError("absorb_onsite needs at least two sites")
    out = []
    for b, k in enumerate(chain.bonds):
        dl, dr = chain.sites[b].d, chain.sites[b + 1].d
        w_l, w_r = _onsite_weights(n, b)
        kp = (
            k
            + w_l * np.kron(chain.sites[b].h_s, np.eye(dr))
            + w_r * np.kron(np.eye(dl), chain.sites[b + 1].h_s)
        )
        out.append(kp)
    return out


def bond_liouvillian(chain: ChainModel, bond: int) -> np.ndarray:
    """Full generator of one bond: K' Hamiltonian plus weighted GKSL terms."""
    dl, dr = chain.sites[bond].d, chain.sites[bond + 1].d
    kp = absorb_onsite(chain)[bond]
    L = hamiltonian_superop(kp)
    w_l, w_r = _onsite_weights(chain.n_sites, bond)
    for op in chain.sites[bond].lindblad_ops:
        L = L + dissipator_superop(np.sqrt(w_l) * np.kron(op, np.eye(dr)))
    for op in chain.sites[bond + 1].lindblad_ops:
        L = L + dissipator_superop(np.sqrt(w_r) * np.kron(np.eye(dl), op))
    for op in chain.bond_dissipators.get(bond, []):
        L = L + dissipator_superop(np.asarray(op, dtype=np.complex128))
    return L


def trotter_gates(chain: ChainModel, dt: float, order: int) -> GateSchedule:
    """Gate schedule for one half time step exp(L_chain * dt/2).

    Order 1: even-index bonds at dt/2, then odd-index bonds at dt/2.
    Order 2: even at dt/4, odd at dt/2, even at dt/4 (symmetric).
    Gates are exact matrix exponentials of the bond generators.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if order not in (1, 2):
        raise ValueError(f"unsupported Trotter order {order}")
    n_bonds = chain.n_sites - 1
    even = list(range(0, n_bonds, 2))
    odd = list(range(1, n_bonds, 2))
    if order == 1:
        plan = [(even, 0.5), (odd, 0.5)]
    else:
        plan = [(even, 0.25), (odd, 0.5), (even, 0.25)]

    gates: dict[tuple[int, float], np.ndarray] = {}
    entries = []
    for bonds_group, frac in plan:
        for b in bonds_group:
            key = (b, frac)
            if key not in gates:
                L = bond_liouvillian(chain, b)
                g = expm(L * (frac * dt))
                dl, dr = chain.sites[b].d, chain.sites[b + 1].d
                gates[key] = pair_superop_to_gate(g, dl, dr)
            entries.append(GateEntry(bond=b, gate=gates[key], frac=frac))
    return GateSchedule(order=order, dt=dt, entries=entries)


# ---------------------------------------------------------------------------
# Built-in models
# ---------------------------------------------------------------------------

def xyz_chain(
    n_sites: int,
    j: tuple[float, float, float] = (1.3, 0.7, 1.2),
    onsite=1.0,
    disorder=None,
) -> ChainModel:
    """XYZ Heisenberg chain: sum_n eps_n s^z_n + sum_n sum_g J^g s^g_n s^g_{n+1}."""
    eps = np.broadcast_to(np.asarray(onsite, dtype=float), (n_sites,)).copy()
    if disorder is not None:
        x = np.asarray(disorder, dtype=float)
        if x.shape != (n_sites,):
            raise ValueError(f"disorder vector must have length {n_sites}")
        eps = eps + x
    sites = [SiteModel(d=2, h_s=e * SZ) for e in eps]
    jx, jy, jz = j
    k = jx * np.kron(SX, SX) + jy * np.kron(SY, SY) + jz * np.kron(SZ, SZ)
    bonds = [k.copy() for _ in range(n_sites - 1)]
    return ChainModel(sites=sites, bonds=bonds)


def xy_chain(n_sites: int, anisotropy: float = 0.0) -> ChainModel:
    """(An)isotropic XY chain: sum_n s^z_n + sum_n [(1-eta) s^x s^x + (1+eta) s^y s^y]."""
    sites = [SiteModel(d=2, h_s=SZ.copy()) for _ in range(n_sites)]
    eta = float(anisotropy)
    k = (1.0 - eta) * np.kron(SX, SX) + (1.0 + eta) * np.kron(SY, SY)
    bonds = [k.copy() for _ in range(n_sites - 1)]
    return ChainModel(sites=sites, bonds=bonds)


def builtin_models(name: str, params: dict) -> ChainModel:
    """Construct a named built-in model from a parameter dictionary."""
    p = dict(params)
    try:
        n = int(p.pop("sites"))
    except KeyError:
        raise ValueError("builtin model parameters must include 'sites'") from None
    if name == "xyz":
        j = p.pop("j", (1.3, 0.7, 1.2))
        if len(j) != 3:
            raise ValueError("xyz coupling 'j' must have three entries")
        onsite = p.pop("onsite", 1.0)
        disorder = p.pop("disorder", None)
        if p:
            raise ValueError(f"unknown xyz parameters: {sorted(p)}")
        return xyz_chain(n, j=tuple(float(x) for x in j), onsite=onsite, disorder=disorder)
    if name == "xy":
        eta = float(p.pop("anisotropy", 0.0))
        if p:
            raise ValueError(f"unknown xy parameters: {sorted(p)}")
        return xy_chain(n, anisotropy=eta)
    raise ValueError(f"unknown builtin model {name!r}")


# ---------------------------------------------------------------------------
# Dense references (small chains)
# ---------------------------------------------------------------------------

def chain_hamiltonian(chain: ChainModel) -> np.ndarray:
    """Full chain Hamiltonian as a dense matrix."""
    dims = chain.dims
    D = int(np.prod(dims))
    h = np.zeros((D, D), dtype=np.complex128)
    for n, site in enumerate(chain.sites):
        h += site_operator(site.h_s, n, dims)
    for b, k in enumerate(chain.bonds):
        left = [np.eye(d, dtype=np.complex128) for d in dims[:b]]
        right = [np.eye(d, dtype=np.complex128) for d in dims[b + 2 :]]
        h += kron_all(*left, k, *right)
    return h


def chain_liouvillian(chain: ChainModel) -> np.ndarray:
    """Full chain GKSL generator on the chain Liouville space."""
    dims = chain.dims
    L = hamiltonian_superop(chain_hamiltonian(chain))
    for n, site in enumerate(chain.sites):
        for op in site.lindblad_ops:
            L = L + dissipator_superop(site_operator(op, n, dims))
    for b, ops in chain.bond_dissipators.items():
        left = [np.eye(d, dtype=np.complex128) for d in dims[:b]]
        right = [np.eye(d, dtype=np.complex128) for d in dims[b + 2 :]]
        for op in ops:
            L = L + dissipator_superop(kron_all(*left, op, *right))
    return L
