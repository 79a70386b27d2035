"""Brute-force references: dense propagation, explicit few-mode baths, and the
exact independent-boson dephasing solution.

Everything here is deliberately written along a different route than the
production code so the two can cross-check each other.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm

from .errors import ResourceLimitError
from .liouville import unvec_density, vec_density
from .operators import is_hermitian, kron_all, site_operator

DEFAULT_LIOUVILLE_CAP = 2**14
BOSON_LEVEL_FLOOR = 4
THERMAL_TAIL_TOL = 1e-6


@dataclass(frozen=True)
class DenseState:
    """Vectorized density matrix over the chain and any explicit bath modes."""

    vector: np.ndarray
    dims: list[int]

    @property
    def dimension(self) -> int:
        return self.vector.size

    def density(self) -> np.ndarray:
        D = int(np.prod(self.dims))
        return unvec_density(self.vector, D)


def _check_cap(liouville_dim: int, cap: int) -> None:
    if liouville_dim > cap:
        raise ResourceLimitError(
            f"Liouville dimension {liouville_dim} exceeds cap {cap}"
        )


def dense_propagate(
    generator: np.ndarray,
    rho0: np.ndarray,
    t: float,
    dims: list[int] | None = None,
    cap: int = DEFAULT_LIOUVILLE_CAP,
) -> DenseState:
    """Propagate a density matrix with a dense matrix exponential.

    ``generator`` is either a Hermitian Hamiltonian of the same dimension as
    ``rho0`` (unitary evolution, computed as ``U rho U^dag``), or a Liouvillian
    superoperator of the squared dimension.
    """
    rho0 = np.asarray(rho0, dtype=np.complex128)
    D = rho0.shape[0]
    if dims is None:
        dims = [D]
    _check_cap(D * D, cap)
    gen = np.asarray(generator, dtype=np.complex128)
    if gen.shape == (D, D):
        if not is_hermitian(gen, 1e-10):
            raise ValueError("Hamiltonian generator must be Hermitian")
        u = expm(-1.0j * gen * t)
        rho = u @ rho0 @ u.conj().T
        return DenseState(vector=vec_density(rho), dims=list(dims))
    if gen.shape == (D * D, D * D):
        v = expm(gen * t) @ vec_density(rho0)
        return DenseState(vector=v, dims=list(dims))
    raise ValueError(
        f"generator shape {gen.shape} matches neither H ({D},{D}) nor L ({D*D},{D*D})"
    )


def rk4_lindblad(
    liouvillian: np.ndarray, rho0: np.ndarray, t: float, steps: int
) -> np.ndarray:
    """Classical RK4 integration of dvec/dt = L vec; independent of expm."""
    v = vec_density(rho0)
    h = t / steps
    L = liouvillian
    for _ in range(steps):
        k1 = L @ v
        k2 = L @ (v + 0.5 * h * k1)
        k3 = L @ (v + 0.5 * h * k2)
        k4 = L @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return unvec_density(v, rho0.shape[0])


def partial_trace(rho: np.ndarray, dims: list[int], keep: list[int]) -> np.ndarray:
    """Partial trace over all subsystems not listed in ``keep``."""
    n = len(dims)
    keep = sorted(keep)
    t = rho.reshape(dims + dims)
    # Trace out the others one at a time, from the highest index down.
    for idx in reversed([i for i in range(n) if i not in keep]):
        nd = t.ndim // 2
        t = np.trace(t, axis1=idx, axis2=idx + nd)
    Dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(Dk, Dk)


# ---------------------------------------------------------------------------
# Explicit few-mode bath
# ---------------------------------------------------------------------------

def thermal_occupation(omega: float, temperature: float) -> float:
    if temperature <= 0.0:
        return 0.0
    return 1.0 / np.expm1(omega / temperature)


def _boson_levels(omega: float, temperature: float) -> int:
    """Fewest levels keeping the thermal tail below THERMAL_TAIL_TOL."""
    if temperature <= 0.0:
        return BOSON_LEVEL_FLOOR
    x = np.exp(-omega / temperature)
    if x <= 0.0:
        return BOSON_LEVEL_FLOOR
    levels = int(np.ceil(np.log(THERMAL_TAIL_TOL) / np.log(x)))
    return max(BOSON_LEVEL_FLOOR, levels)


@dataclass(frozen=True)
class FewModeModel:
    """A chain plus explicitly discretized bath modes on one site."""

    h_total: np.ndarray
    dims: list[int]  # chain site dims followed by mode level counts
    n_chain: int
    site: int
    frequencies: np.ndarray
    couplings_sq: np.ndarray  # g_i^2
    temperature: float
    levels: list[int]

    def initial_state(self, rho_chain: np.ndarray) -> np.ndarray:
        """Chain state tensored with thermal mode states."""
        facs = [np.asarray(rho_chain, dtype=np.complex128)]
        for omega, L in zip(self.frequencies, self.levels):
            if self.temperature > 0:
                p = np.exp(-omega * np.arange(L) / self.temperature)
            else:
                p = np.zeros(L)
                p[0] = 1.0
            facs.append(np.diag(p / p.sum()).astype(np.complex128))
        return kron_all(*facs)

    def correlation_function(self, tau) -> np.ndarray:
        """Exact bath correlation function of the discrete modes."""
        tau = np.asarray(tau, dtype=float)
        coth = np.array(
            [1.0 / np.tanh(w / (2 * self.temperature)) if self.temperature > 0 else 1.0
             for w in self.frequencies]
        )
        re = np.einsum("i,i,it->t", self.couplings_sq, coth,
                       np.cos(np.multiply.outer(self.frequencies, tau)))
        im = np.einsum("i,it->t", self.couplings_sq,
                       np.sin(np.multiply.outer(self.frequencies, tau)))
        return re - 1.0j * im

    def reduced_chain(self, rho_total: np.ndarray) -> np.ndarray:
        return partial_trace(rho_total, self.dims, list(range(self.n_chain)))

    def tail_population(self, rho_total: np.ndarray) -> float:
        """Largest occupation of any mode's top level; truncation monitor."""
        worst = 0.0
        for k in range(len(self.levels)):
            mode = partial_trace(rho_total, self.dims, [self.n_chain + k])
            worst = max(worst, float(mode[-1, -1].real))
        return worst

    def eigensystem(self):
        """Cached eigendecomposition of the total Hamiltonian."""
        if not hasattr(self, "_eig"):
            evals, vecs = np.linalg.eigh(self.h_total)
            object.__setattr__(self, "_eig", (evals, vecs))
        return self._eig

    def evolve_total(self, rho_total: np.ndarray, t: float) -> np.ndarray:
        """Unitary evolution of the full density matrix via eigendecomposition."""
        evals, vecs = self.eigensystem()
        rho_e = vecs.conj().T @ rho_total @ vecs
        phase = np.exp(-1.0j * np.subtract.outer(evals, evals) * t)
        return vecs @ (rho_e * phase) @ vecs.conj().T

    def reduced_at_times(self, rho_total: np.ndarray, times) -> list[np.ndarray]:
        """Reduced chain states at several times from one eigendecomposition.

        Precomputes the mode-traced projectors in the eigenbasis, so each time
        point costs only an elementwise phase sum.
        """
        evals, vecs = self.eigensystem()
        rho_e = vecs.conj().T @ rho_total @ vecs
        c = int(np.prod(self.dims[: self.n_chain]))
        nm = int(np.prod(self.dims[self.n_chain :])) if self.levels else 1
        D = evals.size
        vr = vecs.reshape(c, nm, D)
        proj = np.einsum("iax,jay->ijxy", vr, vr.conj())
        gaps = np.subtract.outer(evals, evals)
        out = []
        for t in times:
            rt = rho_e * np.exp(-1.0j * gaps * t)
            out.append(np.einsum("xy,ijxy->ij", rt, proj))
        return out


def few_mode_bath(
    chain_dims: list[int],
    site: int,
    coupling_op: np.ndarray,
    spectral_density,
    temperature: float,
    num_modes: int,
    h_chain: np.ndarray | None = None,
    omega_max: float | None = None,
    cap: int = DEFAULT_LIOUVILLE_CAP,
) -> FewModeModel:
    """Discretize a bath into ``num_modes`` oscillators coupled to one site.

    Modes sit at Gauss-Legendre nodes of [0, omega_max] with couplings
    ``g_i^2 = J(omega_i) w_i``; each mode is truncated so its thermal tail
    population stays below ``THERMAL_TAIL_TOL`` (hard floor of 4 levels).
    """
    if omega_max is None:
        omega_max = 3.0 * spectral_density.omega_c
    if num_modes == 0:
        freqs = np.zeros(0)
        g2 = np.zeros(0)
    else:
        x, w = np.polynomial.legendre.leggauss(num_modes)
        freqs = 0.5 * omega_max * (x + 1.0)
        weights = 0.5 * omega_max * w
        g2 = np.array([spectral_density(f) for f in freqs]) * weights
    levels = [_boson_levels(f, temperature) for f in freqs]

    dims = list(chain_dims) + levels
    D = int(np.prod(dims))
    _check_cap(D * D, cap)

    n_chain = len(chain_dims)
    if h_chain is None:
        h_chain = np.zeros((int(np.prod(chain_dims)),) * 2, dtype=np.complex128)
    h = np.kron(h_chain, np.eye(int(np.prod(levels)) if levels else 1))
    h = h.astype(np.complex128)
    for k, (omega, g2k, L) in enumerate(zip(freqs, g2, levels)):
        n_op = np.diag(np.arange(L, dtype=np.complex128))
        a = np.diag(np.sqrt(np.arange(1, L, dtype=np.complex128)), 1)
        x_op = a + a.conj().T
        h += omega * site_operator(n_op, n_chain + k, dims)
        h += np.sqrt(g2k) * (
            site_operator(coupling_op, site, dims)
            @ site_operator(x_op, n_chain + k, dims)
        )
    return FewModeModel(
        h_total=h,
        dims=dims,
        n_chain=n_chain,
        site=site,
        frequencies=freqs,
        couplings_sq=g2,
        temperature=temperature,
        levels=levels,
    )


# ---------------------------------------------------------------------------
# Independent-boson (pure dephasing) exact solution
# ---------------------------------------------------------------------------

def independent_boson_coherence(
    spectral_density, temperature: float, t: float
) -> float:
    """Exact dephasing exponent Gamma(t) for a commuting bath coupling.

    ``|<sigma^+>(t)| = exp(-Gamma(t)) |<sigma^+>(0)|`` for a qubit coupled
    through s^z.  Computed by adaptive quadrature.
    """
    if t == 0.0:
        return 0.0

    def integrand(omega):
        if omega < 1e-12:
            # J ~ 2 alpha omega, coth ~ 2T/omega, (1-cos)/omega^2 ~ t^2/2
            return spectral_density.slope_at_zero() * (
                (2.0 * temperature) if temperature > 0 else omega
            ) * 0.5 * t * t
        c = 1.0 / np.tanh(omega / (2.0 * temperature)) if temperature > 0 else 1.0
        return spectral_density(omega) * c * (1.0 - np.cos(omega * t)) / omega**2

    upper = spectral_density.support_cutoff()
    val, _ = quad(integrand, 0.0, upper, limit=500, epsabs=1e-12, epsrel=1e-12)
    return float(val)


def independent_boson_coherence_grid(
    spectral_density, temperature: float, t: float, n_grid: int = 200_001
) -> float:
    """Same exponent by dense trapezoidal quadrature; dual-rule cross-check."""
    if t == 0.0:
        return 0.0
    upper = spectral_density.support_cutoff()
    omega = np.linspace(1e-9, upper, n_grid)
    coth = 1.0 / np.tanh(omega / (2.0 * temperature)) if temperature > 0 else 1.0
    j = np.array([spectral_density(w) for w in omega])
    vals = j * coth * (1.0 - np.cos(omega * t)) / omega**2
    return float(np.trapezoid(vals, omega))
