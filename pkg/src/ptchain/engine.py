"""PT-TEBD engine: Vidal-form augmented MPS in Liouville space and the full
second-order time step (half chain sweep, bath absorption, half chain sweep).

Every site tensor carries an extra "augmented" leg tied to its bath's PT-MPO
bond; bath-free sites keep a permanent dimension-1 leg so one code path serves
all sites.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .bath import PTMPO
from .chains import ChainModel, GateSchedule, trotter_gates, vectorize_liouvillian
from .errors import NumericsError
from .liouville import (
    op_weight_vector,
    site_legs_to_vec,
    trace_vector,
    vec_density,
    vec_to_density,
)
from .tensors import split_matrix

__all__ = [
    "AugmentedMPS",
    "EngineConfig",
    "Trajectory",
    "init_state",
    "apply_two_site_gate",
    "absorb_pt_step",
    "apply_site_superop",
    "PtTebdEngine",
]

LAMBDA_FLOOR = 1e-14


@dataclass
class AugmentedMPS:
    """Vidal-form MPS: Gamma tensors with legs (augmented, left, phys, right)
    and positive bond weight vectors; lambdas[0] and lambdas[N] are the
    trivial edges."""

    gammas: list[np.ndarray]
    lambdas: list[np.ndarray]
    step_index: int = 0
    truncation_weight: float = 0.0  # accumulated discarded SVD weight

    @property
    def n_sites(self) -> int:
        return len(self.gammas)

    @property
    def bond_dims(self) -> list[int]:
        return [lam.size for lam in self.lambdas[1:-1]]

    @property
    def aug_dims(self) -> list[int]:
        return [g.shape[0] for g in self.gammas]

    def copy(self) -> "AugmentedMPS":
        return AugmentedMPS(
            gammas=[g.copy() for g in self.gammas],
            lambdas=[l.copy() for l in self.lambdas],
            step_index=self.step_index,
            truncation_weight=self.truncation_weight,
        )


def _check_density_matrix(rho: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError("density matrix must have unit trace")
    if np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)) < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def init_state(chain: ChainModel, product_state: list[np.ndarray]) -> AugmentedMPS:
    """Product-state augmented MPS with all bond and augmented legs of size 1."""
    if len(product_state) != chain.n_sites:
        raise ValueError("need one local density matrix per site")
    gammas = []
    for site, rho in zip(chain.sites, product_state):
        rho = _check_density_matrix(rho)
        if rho.shape[0] != site.d:
            raise ValueError("local state dimension does not match the site")
        gammas.append(vec_density(rho).reshape(1, 1, site.d * site.d, 1))
    lambdas = [np.ones(1) for _ in range(chain.n_sites + 1)]
    return AugmentedMPS(gammas=gammas, lambdas=lambdas)


def _safe_inverse(lam: np.ndarray) -> np.ndarray:
    floor = max(lam.max(), 0.0) * LAMBDA_FLOOR
    if floor == 0.0:
        raise NumericsError("cannot invert an all-zero bond weight vector")
    return 1.0 / np.maximum(lam, floor)


def apply_two_site_gate(
    state: AugmentedMPS, bond: int, gate: np.ndarray, epsilon_tebd: float
) -> None:
    """Apply a two-site superoperator gate at ``bond`` (sites bond, bond+1).

    Follows the contraction sequence that keeps the central SVD small: the
    outer tensors are pre-split so their augmented legs stay out of the
    central contraction.  All three SVDs truncate at ``epsilon_tebd``.
    """
    n = bond
    gl = state.gammas[n]
    gr = state.gammas[n + 1]
    lam_l = state.lambdas[n]
    lam_c = state.lambdas[n + 1]
    lam_r = state.lambdas[n + 2]
    a_l, _, p_l, _ = gl.shape
    a_r, _, p_r, _ = gr.shape

    # (c-d) attach the outer bond weights
    b_left = gl * lam_l[None, :, None, None]  # (a, l, p, m)
    b_right = gr * lam_r[None, None, None, :]  # (a', m, p', r)

    # (d-e) pre-split both tensors, isolating the augmented legs
    ml = b_left.reshape(a_l * lam_l.size, p_l * lam_c.size)
    u_l, s_l, vd_l, w1 = split_matrix(ml, epsilon_tebd)
    k_l = s_l.size
    mr = b_right.transpose(1, 2, 3, 0).reshape(lam_c.size * p_r, lam_r.size * a_r)
    u_r, s_r, vd_r, w2 = split_matrix(mr, epsilon_tebd)
    k_r = s_r.size

    # (e-f) central contraction D = S_L V_L^dag lambda G U_R S_R
    left = (s_l[:, None] * vd_l).reshape(k_l, p_l, lam_c.size) * lam_c[None, None, :]
    right = (u_r * s_r[None, :]).reshape(lam_c.size, p_r, k_r)
    theta = np.einsum("apm,mbk->apbk", left, right)
    theta = np.einsum("apbk,xypb->axyk", theta, gate)

    # (f-g) central SVD defines the new bond weights
    u_d, s_d, vd_d, w3 = split_matrix(
        theta.reshape(k_l * p_l, p_r * k_r), epsilon_tebd
    )
    chi = s_d.size

    # (g-h) rebuild the Gamma tensors, stripping the outer bond weights
    inv_l = _safe_inverse(lam_l)
    inv_r = _safe_inverse(lam_r)
    new_gl = np.einsum(
        "ax,xc->ac", u_l, u_d.reshape(k_l, p_l * chi)
    ).reshape(a_l, lam_l.size, p_l, chi) * inv_l[None, :, None, None]
    right_block = np.einsum(
        "cx,xr->cr", vd_d.reshape(chi * p_r, k_r), vd_r
    ).reshape(chi, p_r, lam_r.size, a_r)
    new_gr = right_block.transpose(3, 0, 1, 2) * inv_r[None, None, None, :]

    state.gammas[n] = np.ascontiguousarray(new_gl)
    state.gammas[n + 1] = np.ascontiguousarray(new_gr)
    state.lambdas[n + 1] = s_d
    state.truncation_weight += w1 + w2 + w3


def absorb_pt_step(state: AugmentedMPS, site: int, pt_tensor: np.ndarray) -> None:
    """Contract one PT-MPO tensor into a site; its out bond becomes the new
    augmented leg.  Bond weights are untouched."""
    g = state.gammas[site]
    if g.shape[0] != pt_tensor.shape[0]:
        raise ValueError(
            f"augmented leg {g.shape[0]} does not match PT bond {pt_tensor.shape[0]}"
        )
    state.gammas[site] = np.einsum("alir,aoib->blor", g, pt_tensor)


def apply_site_superop(state: AugmentedMPS, site: int, superop: np.ndarray) -> None:
    """Multiply one site's physical leg by a d^2 x d^2 superoperator."""
    g = state.gammas[site]
    if superop.shape != (g.shape[2], g.shape[2]):
        raise ValueError("superoperator dimension does not match the site leg")
    state.gammas[site] = np.einsum("alir,oi->alor", g, superop)


@dataclass
class EngineConfig:
    """Run parameters of one PT-TEBD propagation."""

    dt: float
    num_steps: int
    epsilon_tebd: float = 1e-6
    trotter_order: int = 2
    pt_mpos: dict[int, PTMPO] = field(default_factory=dict)
    record_every: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if not (0.0 < self.epsilon_tebd < 1.0):
            raise ValueError("epsilon_tebd must lie in (0, 1)")
        for site, pt in self.pt_mpos.items():
            if pt.dt != self.dt:
                raise ValueError(
                    f"PT-MPO at site {site} was built for dt={pt.dt}, run uses dt={self.dt}"
                )


@dataclass
class Trajectory:
    """Per-step records of a propagation."""

    times: np.ndarray
    observables: dict[str, np.ndarray]  # name -> (n_records, n_sites)
    bond_dims: np.ndarray  # (n_records, n_bonds)
    aug_dims: np.ndarray  # (n_records, n_sites)
    traces: np.ndarray  # (n_records,) complex


class PtTebdEngine:
    """Owns an augmented MPS and executes PT-TEBD time steps."""

    def __init__(
        self,
        chain: ChainModel,
        config: EngineConfig,
        initial_state: list[np.ndarray] | AugmentedMPS,
    ):
        self.chain = chain
        self.config = config
        for site in config.pt_mpos:
            if not 0 <= site < chain.n_sites:
                raise ValueError(f"PT-MPO attached to invalid site {site}")
            if config.pt_mpos[site].d != chain.sites[site].d:
                raise ValueError(f"PT-MPO at site {site} has wrong local dimension")
        if isinstance(initial_state, AugmentedMPS):
            self.state = initial_state
        else:
            self.state = init_state(chain, initial_state)
        if chain.n_sites >= 2:
            self.schedule: GateSchedule | None = trotter_gates(
                chain, config.dt, config.trotter_order
            )
            self._site_half = None
        else:
            # single-site chain: the site Liouvillian is exponentiated directly
            self.schedule = None
            L = vectorize_liouvillian(chain.sites[0])
            self._site_half = expm(L * (config.dt / 2.0))

    # -- propagation -------------------------------------------------------

    def _half_sweep(self):
        if self.schedule is None:
            apply_site_superop(self.state, 0, self._site_half)
            return
        for entry in self.schedule.entries:
            apply_two_site_gate(
                self.state, entry.bond, entry.gate, self.config.epsilon_tebd
            )

    def step(self) -> None:
        """One full time step: half chain sweep, PT absorption, half sweep."""
        m = self.state.step_index
        for site, pt in self.config.pt_mpos.items():
            if m >= pt.num_steps:
                raise ValueError(
                    f"PT-MPO at site {site} has only {pt.num_steps} steps; "
                    f"cannot propagate past step {m}"
                )
        self._half_sweep()
        for site, pt in self.config.pt_mpos.items():
            absorb_pt_step(self.state, site, pt.steps[m])
        self._half_sweep()
        self.state.step_index = m + 1

    def run(
        self,
        num_steps: int | None = None,
        observables: dict[str, np.ndarray] | None = None,
        callback=None,
    ) -> Trajectory:
        """Propagate and record observables every ``record_every`` steps."""
        if num_steps is None:
            num_steps = self.config.num_steps
        if observables is None:
            observables = {}
        times = [self.state.step_index * self.config.dt]
        obs = {name: [self.site_expectations(op)] for name, op in observables.items()}
        chis = [self.state.bond_dims]
        augs = [self.state.aug_dims]
        traces = [self.trace()]
        if callback is not None:
            callback(self)
        for k in range(num_steps):
            self.step()
            if (k + 1) % self.config.record_every == 0 or k == num_steps - 1:
                times.append(self.state.step_index * self.config.dt)
                for name, op in observables.items():
                    obs[name].append(self.site_expectations(op))
                chis.append(self.state.bond_dims)
                augs.append(self.state.aug_dims)
                traces.append(self.trace())
                if callback is not None:
                    callback(self)
        return Trajectory(
            times=np.array(times),
            observables={k: np.array(v) for k, v in obs.items()},
            bond_dims=np.array(chis),
            aug_dims=np.array(augs),
            traces=np.array(traces),
        )

    # -- readout -----------------------------------------------------------

    def _cap(self, site: int) -> np.ndarray:
        pt = self.config.pt_mpos.get(site)
        if pt is None:
            return np.ones(1, dtype=np.complex128)
        m = self.state.step_index
        if m >= len(pt.caps):
            raise ValueError(f"no cap available at step {m} for site {site}")
        return pt.caps[m]

    def _site_blocks(self) -> list[np.ndarray]:
        """Per-site tensors (left, phys, right) with caps and right bond
        weights folded in."""
        blocks = []
        for n, g in enumerate(self.state.gammas):
            cap = self._cap(n)
            if cap.size != g.shape[0]:
                raise ValueError(
                    f"cap dimension {cap.size} does not match augmented leg "
                    f"{g.shape[0]} at site {n}"
                )
            b = np.einsum("alpr,a->lpr", g, cap)
            b = b * self.state.lambdas[n + 1][None, None, :]
            blocks.append(b)
        return blocks

    def capped_reduced_state(self, sites: list[int] | None = None) -> np.ndarray:
        """Reduced density matrix of the requested sites (all if None).

        Augmented legs are closed with the current cap tensors; the other
        sites are traced out.  The engine state itself is untouched.
        """
        if sites is None:
            sites = list(range(self.chain.n_sites))
        sites = sorted(sites)
        blocks = self._site_blocks()
        acc = np.ones((1, 1))  # (open-leg block, right bond)
        open_dims = []
        for n, b in enumerate(blocks):
            if n in sites:
                acc = np.einsum("xl,lpr->xpr", acc, b)
                acc = acc.reshape(acc.shape[0] * b.shape[1], b.shape[2])
                open_dims.append(b.shape[1])
            else:
                t = trace_vector(self.chain.sites[n].d)
                acc = acc @ np.einsum("lpr,p->lr", b, t)
        v = site_legs_to_vec(acc.reshape(open_dims), [self.chain.sites[n].d for n in sites])
        return vec_to_density(v, [self.chain.sites[n].d for n in sites])

    def site_expectations(self, op: np.ndarray) -> np.ndarray:
        """<op> on every site of the capped state (one left/right sweep)."""
        blocks = self._site_blocks()
        n = self.chain.n_sites
        traced = []
        for k, b in enumerate(blocks):
            t = trace_vector(self.chain.sites[k].d)
            traced.append(np.einsum("lpr,p->lr", b, t))
        lefts = [np.ones((1,))]
        for k in range(n):
            lefts.append(lefts[-1] @ traced[k])
        rights = [np.ones((1,))] * (n + 1)
        for k in range(n - 1, -1, -1):
            rights[k] = traced[k] @ rights[k + 1]
        w = op_weight_vector(op)
        out = np.empty(n, dtype=np.complex128)
        for k in range(n):
            mk = np.einsum("lpr,p->lr", blocks[k], w)
            out[k] = lefts[k] @ mk @ rights[k + 1]
        return out

    def expectation(self, op: np.ndarray, site: int) -> complex:
        return complex(self.site_expectations(op)[site])

    def trace(self) -> complex:
        blocks = self._site_blocks()
        acc = np.ones((1,))
        for k, b in enumerate(blocks):
            t = trace_vector(self.chain.sites[k].d)
            acc = acc @ np.einsum("lpr,p->lr", b, t)
        return complex(acc[0])

    def snapshot(self) -> AugmentedMPS:
        return self.state.copy()
