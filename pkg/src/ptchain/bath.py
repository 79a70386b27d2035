"""Bath correlation functions, discretized influence coefficients, and the
compressed process-tensor MPO for a Gaussian bosonic environment.

The influence network is contracted one time column at a time: the column's
factors are multiplied into the growing MPO, the affected window is
right-orthogonalized, then recompressed in a single left-to-right truncated
SVD sweep.  This fixed schedule makes bond dimensions deterministic.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import rq

from .errors import ResourceLimitError
from .operators import is_hermitian
from .tensors import split_matrix

__all__ = [
    "SpectralDensity",
    "BathSpec",
    "PTMPO",
    "InfluenceCoefficients",
    "correlation_function",
    "correlation_function_grid",
    "influence_coefficients",
    "influence_factor",
    "build_pt_mpo",
]

# |C(tau)| is considered decayed once it drops below this fraction of |C(0)|.
MEMORY_DECAY_FRACTION = 1e-3
# Documented absolute tolerance of all adaptive quadratures in this module.
QUAD_ABS_TOL = 1e-10
_QUAD_OPTS = dict(limit=500, epsabs=1e-12, epsrel=1e-11)


@dataclass(frozen=True)
class SpectralDensity:
    """Bath spectral density J(omega).

    ``ohmic_gaussian``: J = 2 alpha omega exp(-omega^2/omega_c^2).
    ``discrete``: a finite comb sum_i g_i^2 delta(omega - omega_i); frequency
    integrals become exact sums, which is what the few-mode oracle needs.
    """

    kind: str = "ohmic_gaussian"
    alpha: float = 0.0
    omega_c: float = 1.0
    mode_frequencies: np.ndarray | None = None
    mode_weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "ohmic_gaussian":
            if self.alpha < 0:
                raise ValueError("coupling strength alpha must be >= 0")
            if self.omega_c <= 0:
                raise ValueError("cutoff frequency omega_c must be > 0")
        elif self.kind == "discrete":
            f = np.asarray(self.mode_frequencies, dtype=float)
            w = np.asarray(self.mode_weights, dtype=float)
            if f.shape != w.shape or f.ndim != 1:
                raise ValueError("discrete modes need matching 1D arrays")
            if np.any(f <= 0) or np.any(w < 0):
                raise ValueError("discrete mode frequencies must be > 0, weights >= 0")
            object.__setattr__(self, "mode_frequencies", f)
            object.__setattr__(self, "mode_weights", w)
        else:
            raise ValueError(f"unknown spectral density kind {self.kind!r}")

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    def __call__(self, omega: float) -> float:
        if self.is_discrete:
            raise TypeError("a discrete spectral density has no pointwise values")
        return 2.0 * self.alpha * omega * np.exp(-(omega / self.omega_c) ** 2)

    def slope_at_zero(self) -> float:
        if self.is_discrete:
            raise TypeError("a discrete spectral density has no slope at zero")
        return 2.0 * self.alpha

    def support_cutoff(self, temperature: float = 0.0) -> float:
        """Frequency beyond which J(omega) coth(omega/2T) is negligible."""
        if self.is_discrete:
            return float(np.max(self.mode_frequencies)) * 1.001
        grid = np.linspace(1e-6, 60.0 * self.omega_c, 8192)
        vals = np.array([self(w) for w in grid]) * _coth_factor(grid, temperature)
        peak = vals.max()
        above = np.nonzero(vals >= 1e-14 * peak)[0]
        return float(grid[min(above[-1] + 1, grid.size - 1)])


def _coth_factor(omega, temperature: float):
    if temperature <= 0:
        return np.ones_like(omega)
    x = omega / (2.0 * temperature)
    with np.errstate(over="ignore"):
        out = 1.0 / np.tanh(np.where(x < 1e-8, 1e-8, x))
    # below x ~ 1e-8 use the 1/x limit explicitly
    return np.where(x < 1e-8, 1.0 / np.where(x < 1e-300, 1e-300, x), out)


@dataclass(frozen=True)
class BathSpec:
    """One bath: spectral density, temperature, coupling operator, and the
    discretization parameters of its process tensor."""

    spectral_density: SpectralDensity
    temperature: float
    coupling_operator: np.ndarray
    dt: float
    dkmax: int
    epsilon_pt: float = 1e-6

    def __post_init__(self):
        op = np.asarray(self.coupling_operator, dtype=np.complex128)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError("coupling operator must be square")
        if not is_hermitian(op, 1e-12):
            raise ValueError("coupling operator must be Hermitian (tol 1e-12)")
        object.__setattr__(self, "coupling_operator", op)
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.dkmax < 1:
            raise ValueError("dkmax must be >= 1")
        if not (0.0 < self.epsilon_pt < 1.0):
            raise ValueError("epsilon_pt must lie in (0, 1)")
        self._warn_short_memory()

    def _warn_short_memory(self):
        horizon = self.dt * self.dkmax
        taus = np.linspace(0.9 * horizon, horizon, 8)
        c0 = abs(correlation_function_grid(self, np.array([0.0]))[0])
        if c0 == 0.0:
            return
        tail = np.abs(correlation_function_grid(self, taus))
        if tail.min() >= MEMORY_DECAY_FRACTION * c0:
            warnings.warn(
                f"dt*dkmax = {horizon:g} does not cover the bath memory: "
                f"|C| has not dropped below {MEMORY_DECAY_FRACTION:g} of |C(0)| "
                "inside the retained window",
                stacklevel=3,
            )

    @property
    def dim(self) -> int:
        return self.coupling_operator.shape[0]


# ---------------------------------------------------------------------------
# Correlation function and influence coefficients
# ---------------------------------------------------------------------------

def _bath_integral(bath: BathSpec, kernel_cos, kernel_sin) -> complex:
    """integral J(w) [coth(w/2T) kernel_cos(w) - i kernel_sin(w)] dw.

    For discrete densities the integral is an exact sum over modes.
    """
    sd = bath.spectral_density
    T = bath.temperature
    if sd.is_discrete:
        w = sd.mode_frequencies
        g2 = sd.mode_weights
        coth = _coth_factor(w, T)
        re = float(np.sum(g2 * coth * np.array([kernel_cos(x) for x in w])))
        im = float(np.sum(g2 * np.array([kernel_sin(x) for x in w])))
        return re - 1.0j * im

    upper = sd.support_cutoff(T)
    slope = sd.slope_at_zero()

    def re_integrand(w):
        if w < 1e-10:
            jc = slope * 2.0 * T if T > 0 else sd(w)
            return jc * kernel_cos(w)
        return sd(w) * float(_coth_factor(np.array(w), T)) * kernel_cos(w)

    def im_integrand(w):
        return sd(w) * kernel_sin(w)

    re, _ = quad(re_integrand, 0.0, upper, **_QUAD_OPTS)
    im, _ = quad(im_integrand, 0.0, upper, **_QUAD_OPTS)
    return re - 1.0j * im


def correlation_function(bath: BathSpec, tau: float) -> complex:
    """Bath autocorrelation C(tau) by adaptive quadrature (abs tol 1e-10).

    C(tau) = integral_0^inf J(w)[cos(w tau) coth(w/2T) - i sin(w tau)] dw.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0 (use C(-tau) = conj(C(tau)))")
    return _bath_integral(
        bath, lambda w: np.cos(w * tau), lambda w: np.sin(w * tau)
    )


def correlation_function_grid(bath: BathSpec, taus: np.ndarray) -> np.ndarray:
    """Vectorized C(tau) on a tau grid via dense trapezoidal quadrature.

    Cheap screening tool (memory-time scans); accuracy ~1e-6 relative, far
    looser than :func:`correlation_function`.
    """
    sd = bath.spectral_density
    T = bath.temperature
    taus = np.asarray(taus, dtype=float)
    if sd.is_discrete:
        w = sd.mode_frequencies
        g2 = sd.mode_weights * np.ones_like(w)
        coth = _coth_factor(w, T)
        phases = np.multiply.outer(taus, w)
        return (np.cos(phases) * (g2 * coth) - 1.0j * np.sin(phases) * g2).sum(axis=1)
    upper = sd.support_cutoff(T)
    w = np.linspace(1e-9, upper, 4001)
    j = 2.0 * sd.alpha * w * np.exp(-(w / sd.omega_c) ** 2)
    jc = j * _coth_factor(w, T)
    phases = np.multiply.outer(taus, w)
    vals = np.cos(phases) * jc - 1.0j * np.sin(phases) * j
    return np.trapezoid(vals, w, axis=1)


def _triangle_kernels(dt: float):
    """Frequency kernels of the same-step (triangle) influence cell."""

    def kc(w):
        x = w * dt
        if x < 1e-4:
            return dt * dt * (0.5 - x * x / 24.0)
        return (1.0 - np.cos(x)) / (w * w)

    def ks(w):
        x = w * dt
        if x < 1e-4:
            return dt * dt * (x / 6.0 - x**3 / 120.0)
        return (x - np.sin(x)) / (w * w)

    return kc, ks


def _band_kernels(dt: float, dk: int):
    """Frequency kernels of the dk-step (square cell) influence band."""

    def base(w):
        x = w * dt
        if x < 1e-4:
            return dt * dt * (1.0 - x * x / 12.0)
        return 4.0 * np.sin(0.5 * x) ** 2 / (w * w)

    shift = dk * dt
    return (lambda w: np.cos(w * shift) * base(w),
            lambda w: np.sin(w * shift) * base(w))


@dataclass(frozen=True)
class InfluenceCoefficients:
    """Discretized memory coefficients eta for one bath."""

    eta_kk: complex
    eta_dk: np.ndarray  # entry [k] is eta for dk = k+1

    def eta(self, dk: int) -> complex:
        if dk == 0:
            return self.eta_kk
        return complex(self.eta_dk[dk - 1])


def influence_coefficients(bath: BathSpec, dkmax: int | None = None) -> InfluenceCoefficients:
    """Double-time-integrated correlation coefficients.

    eta_kk integrates C over the triangle 0 < t'' < t' < dt; eta_dk over the
    square [dk dt, (dk+1) dt] x [0, dt].  Both reduce to single frequency
    integrals done by adaptive quadrature (abs tol 1e-10).
    """
    if dkmax is None:
        dkmax = bath.dkmax
    kc, ks = _triangle_kernels(bath.dt)
    eta_kk = _bath_integral(bath, kc, ks)
    etas = np.empty(dkmax, dtype=np.complex128)
    for dk in range(1, dkmax + 1):
        kc, ks = _band_kernels(bath.dt, dk)
        etas[dk - 1] = _bath_integral(bath, kc, ks)
    return InfluenceCoefficients(eta_kk=complex(eta_kk), eta_dk=etas)


def _coupling_eigensystem(bath: BathSpec):
    evals, vecs = np.linalg.eigh(bath.coupling_operator)
    return evals, vecs


def _liouville_diff_sum(evals: np.ndarray):
    """Per Liouville index (l = ket + d*bra): eigenvalue difference and sum."""
    d = evals.size
    ket = np.tile(evals, d)          # index l = a + d*b -> a = l % d
    bra = np.repeat(evals, d)        # -> b = l // d
    return ket - bra, ket + bra


def influence_factor(bath: BathSpec, dk: int, j: int, jp: int,
                     coeffs: InfluenceCoefficients | None = None) -> complex:
    """Influence weight linking Liouville index ``j`` (later time) with ``jp``
    (dk steps earlier); dk = 0 is the same-step self interaction (j == jp).
    """
    d = bath.dim
    if not (0 <= j < d * d and 0 <= jp < d * d):
        raise IndexError("Liouville index out of range")
    if coeffs is None:
        coeffs = influence_coefficients(bath, dkmax=max(dk, 1))
    evals, _ = _coupling_eigensystem(bath)
    diff, ssum = _liouville_diff_sum(evals)
    eta = coeffs.eta(dk)
    return complex(np.exp(
        -diff[j] * (eta.real * diff[jp] + 1.0j * eta.imag * ssum[jp])
    ))


# ---------------------------------------------------------------------------
# PT-MPO construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PTMPO:
    """Matrix-product form of one bath's process tensor.

    ``steps[k]`` has legs (bond_in, system_out, system_in, bond_out), system
    legs in the computational basis.  ``caps[m]`` closes the open bond of a
    state that has absorbed m steps; caps[0] is the trivial [1.0].
    """

    steps: list[np.ndarray]
    caps: list[np.ndarray]
    dt: float
    d: int
    bath: BathSpec | None = None

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    @property
    def max_bond(self) -> int:
        return max(s.shape[3] for s in self.steps)

    @property
    def bond_dims(self) -> list[int]:
        return [s.shape[3] for s in self.steps]


def _influence_matrices(diff, ssum, coeffs, dk_eff):
    """I0 diagonal plus the dk = 1..dk_eff coupling matrices [later, earlier]."""
    i0 = np.exp(-diff * (coeffs.eta_kk.real * diff + 1.0j * coeffs.eta_kk.imag * ssum))
    mats = []
    for dk in range(1, dk_eff + 1):
        eta = coeffs.eta(dk)
        mats.append(np.exp(
            -np.outer(diff, eta.real * diff + 1.0j * eta.imag * ssum)
        ))
    return i0, mats


def build_pt_mpo(
    bath: BathSpec,
    num_steps: int,
    bond_cap: int = 4096,
) -> PTMPO:
    """Build the compressed PT-MPO of one bath for ``num_steps`` time steps.

    Influence spanning more than ``bath.dkmax`` steps is dropped.  Every
    intermediate bond is compressed with the relative threshold
    ``bath.epsilon_pt``; growing any bond beyond ``bond_cap`` raises
    ResourceLimitError.
    """
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    d = bath.dim
    dd = d * d
    M = num_steps
    dk_eff = min(bath.dkmax, M - 1)

    evals, vecs = _coupling_eigensystem(bath)
    diff, ssum = _liouville_diff_sum(evals)
    coeffs = influence_coefficients(bath, dkmax=dk_eff if dk_eff >= 1 else 1)
    i0, mats = _influence_matrices(diff, ssum, coeffs, dk_eff)

    eps = bath.epsilon_pt
    tens: list[np.ndarray] = [np.ones((1, dd, 1), dtype=np.complex128) for _ in range(M)]

    idx = np.arange(dd)
    for col in range(M):
        end = min(col + dk_eff, M - 1)
        # Column strip: the diagonal self factor starts a rail carrying this
        # step's Liouville index; each later site multiplies its band factor.
        strip: list[np.ndarray] = []
        if end == col:
            strip.append(i0.reshape(1, dd, 1))
        else:
            s0 = np.zeros((1, dd, dd), dtype=np.complex128)
            s0[0, idx, idx] = i0
            strip.append(s0)
            for m in range(1, end - col):
                sm = np.zeros((dd, dd, dd), dtype=np.complex128)
                sm[idx, :, idx] = mats[m - 1].T
                strip.append(sm)
            strip.append(np.ascontiguousarray(mats[end - col - 1].T)[:, :, None])

        for off, s in enumerate(strip):
            t = tens[col + off]
            merged = np.einsum("apb,cpd->acpbd", t, s)
            tens[col + off] = merged.reshape(
                t.shape[0] * s.shape[0], dd, t.shape[2] * s.shape[2]
            )

        # Right-to-left orthogonalization of the touched window.
        for site in range(end, col, -1):
            t = tens[site]
            r, q = rq(t.reshape(t.shape[0], dd * t.shape[2]), mode="economic")
            k = q.shape[0]
            tens[site] = q.reshape(k, dd, t.shape[2])
            tens[site - 1] = np.einsum("apb,bc->apc", tens[site - 1], r)

        # Left-to-right truncating sweep.
        for site in range(col, end):
            t = tens[site]
            u, sig, vd, _ = split_matrix(t.reshape(t.shape[0] * dd, t.shape[2]), eps)
            chi = sig.size
            if chi > bond_cap:
                raise ResourceLimitError(
                    f"PT-MPO bond dimension {chi} exceeds cap {bond_cap} "
                    f"at step {site} (needed for the requested accuracy)"
                )
            tens[site] = u.reshape(t.shape[0], dd, chi)
            carry = sig[:, None] * vd
            tens[site + 1] = np.einsum("ab,bpc->apc", carry, tens[site + 1])

    # Cap tensors: close every later slot with the trace of an identity
    # evolution (weight 1/d on diagonal Liouville indices).
    wdiag = np.zeros(dd)
    wdiag[(np.arange(d) * (d + 1))] = 1.0 / d
    caps: list[np.ndarray] = [np.ones(1, dtype=np.complex128) for _ in range(M + 1)]
    for m in range(M - 1, -1, -1):
        caps[m] = np.einsum("apb,p,b->a", tens[m], wdiag, caps[m + 1])

    # Gauge fixing: the sweeps leave orthonormal tensors and push all weight
    # to the chain end.  Rescaling each internal bond by its dominant cap
    # entry balances the weights and makes every alpha=0 step the identity.
    scales = np.ones(M + 1, dtype=np.complex128)
    for m in range(1, M):
        lead = caps[m][np.argmax(np.abs(caps[m]))]
        if lead != 0:
            scales[m] = 1.0 / lead
    for k in range(M):
        tens[k] = tens[k] * (scales[k] / scales[k + 1])
        caps[k] = caps[k] * scales[k]

    # Conjugate the system legs back to the computational basis.
    w_mat = np.kron(vecs.T, vecs.conj().T)
    w_inv = np.kron(vecs.conj(), vecs)
    steps = [
        np.ascontiguousarray(np.einsum("ol,alb,li->aoib", w_inv, g, w_mat))
        for g in tens
    ]
    return PTMPO(steps=steps, caps=caps, dt=bath.dt, d=d, bath=bath)
