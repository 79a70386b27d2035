"""Multi-time correlations, steady-state spectra, effective temperature, MSD,
and the exact-diagonalization density of states of closed chains.

The two-time protocol evolves the full augmented MPS to the steady state,
applies one left-acting superoperator, and keeps propagating the same state;
capping only happens at readout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .chains import ChainModel, chain_hamiltonian
from .engine import PtTebdEngine, apply_site_superop
from .liouville import left_superop, right_superop
from .operators import site_operator

__all__ = [
    "Insertion",
    "CorrelationRequest",
    "CorrelationSeries",
    "SpectrumResult",
    "multi_time_correlation",
    "steady_state_autocorrelations",
    "spectra_from_autocorrelation",
    "effective_temperature",
    "mean_squared_displacement",
    "closed_chain_dos",
    "gibbs_distance",
    "trace_distance",
]

SUPPORT_MASK_FRACTION = 1e-3
ARTANH_CLAMP = 1.0 - 1e-12


@dataclass(frozen=True)
class Insertion:
    """One superoperator insertion: ``op`` acting at ``site`` and time step
    ``step``; left side is ``op @ rho``, right side ``rho @ op`` (OTOCs)."""

    operator: np.ndarray
    site: int
    step: int
    side: str = "left"

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")


@dataclass(frozen=True)
class CorrelationRequest:
    insertions: list[Insertion]
    readout_operator: np.ndarray | None = None
    readout_site: int = 0
    readout_step: int | None = None

    def __post_init__(self):
        steps = [ins.step for ins in self.insertions]
        if any(b < a for a, b in zip(steps, steps[1:])):
            raise ValueError("insertion steps must be non-decreasing")


@dataclass
class CorrelationSeries:
    """A two-time correlation sampled on a uniform tau grid."""

    tau: np.ndarray
    values: np.ndarray
    dt: float
    site: int | None = None
    label: str = ""
    t_ss: float | None = None


@dataclass
class SpectrumResult:
    """Fluctuation/dissipation spectra on a symmetric frequency grid."""

    omega: np.ndarray
    s_omega: np.ndarray
    chi2_omega: np.ndarray
    t_eff: np.ndarray
    support_mask: np.ndarray


def _advance(engine: PtTebdEngine, step: int) -> None:
    if step < engine.state.step_index:
        raise ValueError("cannot rewind the engine to an earlier step")
    while engine.state.step_index < step:
        engine.step()


def multi_time_correlation(
    engine: PtTebdEngine, request: CorrelationRequest
) -> complex:
    """Evaluate a time-ordered product of operator insertions.

    Evolves the engine (mutating it), multiplying each insertion into the
    physical leg of its site at its step, then closes with the trace
    functional (or with the optional readout operator).
    """
    for ins in request.insertions:
        _advance(engine, ins.step)
        if ins.side == "left":
            sop = left_superop(ins.operator)
        else:
            sop = right_superop(ins.operator)
        apply_site_superop(engine.state, ins.site, sop)
    if request.readout_operator is None:
        return engine.trace()
    final_step = (
        request.readout_step
        if request.readout_step is not None
        else engine.state.step_index
    )
    _advance(engine, final_step)
    return engine.expectation(request.readout_operator, request.readout_site)


def steady_state_autocorrelations(
    engine: PtTebdEngine,
    site: int,
    op: np.ndarray,
    t_ss: float,
    tau_max: float,
) -> CorrelationSeries:
    """<A(t_ss + tau) A(t_ss)> for all tau in [0, tau_max] in one propagation.

    The first operator is applied to the full augmented MPS (environment
    correlations included); the continued propagation is never restarted from
    a capped state.
    """
    dt = engine.config.dt
    steps_ss = int(round(t_ss / dt))
    n_tau = int(round(tau_max / dt))
    if abs(steps_ss * dt - t_ss) > 1e-9 or abs(n_tau * dt - tau_max) > 1e-9:
        raise ValueError("t_ss and tau_max must be integer multiples of dt")
    for s, pt in engine.config.pt_mpos.items():
        if steps_ss + n_tau > pt.num_steps:
            raise ValueError(
                f"PT-MPO at site {s} has {pt.num_steps} steps, but "
                f"t_ss + tau_max needs {steps_ss + n_tau}"
            )
    _advance(engine, steps_ss)
    apply_site_superop(engine.state, site, left_superop(op))
    values = [engine.expectation(op, site)]
    for _ in range(n_tau):
        engine.step()
        values.append(engine.expectation(op, site))
    return CorrelationSeries(
        tau=np.arange(n_tau + 1) * dt,
        values=np.array(values),
        dt=dt,
        site=site,
        t_ss=t_ss,
    )


def spectra_from_autocorrelation(
    series: CorrelationSeries | np.ndarray,
    dt: float | None = None,
    hann_window: bool = False,
) -> SpectrumResult:
    """Fluctuation and dissipation spectra from <A(tau) A(0)> on tau >= 0.

    Extends to negative tau by conjugate symmetry, builds the symmetrized
    series S(tau) and the response chi(tau) = i Theta(tau) <[A(tau), A(0)]>
    with half weight at tau = 0, and Fourier transforms with the convention
    f(omega) = int dtau e^{i omega tau} f(tau) using trapezoidal end weights.
    No window is applied by default; a Hann window is available for short
    noisy series.
    """
    if isinstance(series, CorrelationSeries):
        values = series.values
        dt = series.dt
    else:
        values = np.asarray(series)
        if dt is None:
            raise ValueError("dt is required when passing a bare array")
    K = values.size - 1
    if values.size < 8:
        raise ValueError("series too short for a meaningful spectrum (< 8 points)")

    # symmetric grid j = -K..K; S even, chi causal with Theta(0) = 1/2
    s_sym = np.concatenate([values.real[:0:-1], values.real])
    chi = np.zeros(2 * K + 1)
    chi[K + 1 :] = -2.0 * values.imag[1:]
    chi[K] = -values.imag[0]
    if hann_window:
        w = np.hanning(2 * K + 1)
        s_sym = s_sym * w
        chi = chi * w

    def ft(f):
        # fold the +tau_max endpoint onto -tau_max with trapezoid half weights
        x = f[: 2 * K].astype(np.complex128)
        x[0] = 0.5 * (f[0] + f[2 * K])
        n = 2 * K
        spec = n * np.fft.ifft(x)
        m = np.arange(n)
        spec = spec * dt * (-1.0) ** m
        return spec

    omega = 2.0 * np.pi * np.fft.fftfreq(2 * K, d=dt)
    order = np.argsort(omega)
    omega = omega[order]
    s_omega = ft(s_sym).real[order]
    chi2_omega = ft(chi).imag[order]

    support = np.abs(s_omega) > SUPPORT_MASK_FRACTION * np.max(np.abs(s_omega))
    support &= omega != 0.0  # T(omega) is a 0/0 limit at omega = 0
    result = SpectrumResult(
        omega=omega,
        s_omega=s_omega,
        chi2_omega=chi2_omega,
        t_eff=np.full(omega.size, np.nan),
        support_mask=support,
    )
    result.t_eff = effective_temperature(result)
    return result


def effective_temperature(spectrum: SpectrumResult) -> np.ndarray:
    """T(omega) = omega / (2 artanh[chi''(omega)/S(omega)]) on the support mask.

    The ratio is clamped just inside (-1, 1); outside the mask the value is
    NaN (undefined marker).
    """
    out = np.full(spectrum.omega.size, np.nan)
    mask = spectrum.support_mask
    ratio = np.clip(
        spectrum.chi2_omega[mask] / spectrum.s_omega[mask],
        -ARTANH_CLAMP,
        ARTANH_CLAMP,
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        out[mask] = spectrum.omega[mask] / (2.0 * np.arctanh(ratio))
    return out


def mean_squared_displacement(
    probabilities: np.ndarray, positions: np.ndarray | None = None
) -> np.ndarray:
    """MSD(t) = sum_n p_n(t) n^2 / sum_n p_n(t).

    ``probabilities`` has shape (n_times, n_sites) or (n_sites,).  Sites are
    indexed symmetrically about the center unless ``positions`` is given.
    Small negative probabilities (>= -1e-9) are clipped to zero.
    """
    p = np.asarray(probabilities, dtype=float)
    single = p.ndim == 1
    if single:
        p = p[None, :]
    if np.min(p) < -1e-9:
        raise ValueError("probabilities below -1e-9; not a probability vector")
    p = np.clip(p, 0.0, None)
    n_sites = p.shape[1]
    if positions is None:
        positions = np.arange(n_sites) - (n_sites - 1) / 2.0
    norms = p.sum(axis=1)
    if np.any(norms == 0.0):
        raise ValueError("all-zero probability vector")
    msd = (p @ (positions**2)) / norms
    return msd[0] if single else msd


def closed_chain_dos(
    chain: ChainModel,
    ops: list[np.ndarray],
    broadening: float = 0.1,
    temperature: float = 0.0,
    omega: np.ndarray | None = None,
    max_dim: int = 4096,
) -> tuple[np.ndarray, np.ndarray]:
    """chi''(omega) of the closed chain by exact diagonalization.

    Each transition is broadened by a Lorentzian of half width ``broadening``.
    Weights are Boltzmann factors at ``temperature`` (ground state at T = 0).
    Returns (omega, chi2) with chi2 indexed [op, site, omega].
    """
    dims = chain.dims
    D = int(np.prod(dims))
    if D > max_dim:
        raise ValueError(f"Hilbert dimension {D} too large for exact diagonalization")
    h = chain_hamiltonian(chain)
    evals, vecs = np.linalg.eigh(h)
    if temperature > 0:
        w = np.exp(-(evals - evals.min()) / temperature)
    else:
        w = (evals == evals.min()).astype(float)
    w = w / w.sum()
    if omega is None:
        span = evals.max() - evals.min()
        omega = np.linspace(-(span + 1.0), span + 1.0, 2001)
    gaps = np.subtract.outer(evals, evals)  # gaps[i, j] = E_i - E_j
    pdiff = np.subtract.outer(w, w)  # p_i - p_j
    gamma = broadening
    chi2 = np.zeros((len(ops), chain.n_sites, omega.size))
    for a, op in enumerate(ops):
        for n in range(chain.n_sites):
            A = vecs.conj().T @ site_operator(op, n, dims) @ vecs
            weight = pdiff * np.abs(A) ** 2  # transition i -> j
            wji = -gaps  # omega_ji = E_j - E_i
            flat_w = weight.ravel()
            flat_f = wji.ravel()
            keep = np.abs(flat_w) > 1e-14
            fw, ff = flat_w[keep], flat_f[keep]
            lor = gamma / np.pi / ((omega[None, :] - ff[:, None]) ** 2 + gamma**2)
            chi2[a, n] = np.pi * fw @ lor
    return omega, chi2


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) ||a - b||_1 for Hermitian matrices."""
    diff = (a - b + (a - b).conj().T) / 2.0
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def gibbs_distance(
    chain: ChainModel,
    steady_state: np.ndarray,
    bath_temperatures: list[float],
    max_dim: int = 4096,
) -> float:
    """Trace distance between a reduced chain state and the chain Gibbs state
    at the temperature of the single attached bath.

    Refuses when more than one bath temperature is supplied: a Gibbs
    reference is then undefined.
    """
    temps = list(bath_temperatures)
    if len(temps) != 1:
        raise ValueError(
            "gibbs_distance needs exactly one bath; with several baths the "
            "reference Gibbs state is undefined"
        )
    T = float(temps[0])
    if T <= 0:
        raise ValueError("bath temperature must be positive")
    dims = chain.dims
    D = int(np.prod(dims))
    if D > max_dim:
        raise ValueError(f"Hilbert dimension {D} too large for a dense Gibbs state")
    h = chain_hamiltonian(chain)
    evals, vecs = np.linalg.eigh(h)
    w = np.exp(-(evals - evals.min()) / T)
    gibbs = (vecs * (w / w.sum())[None, :]) @ vecs.conj().T
    return trace_distance(steady_state, gibbs)
