"""Closed and open single-excitation dynamics on a ring with an absorbing sink.

Everything here is dimensionless: energies and rates in units of the
effective coupling J, time in units of 1/J, hbar = 1.

The master equation is

    drho/dt = -i[H, rho]
              + Gamma (2 S rho S^+ - {S^+ S, rho})                 S = |s><q|
              + gamma sum_j (2 P_j rho P_j - {P_j, rho})            P_j = |j><j|, ring sites only

with the explicit factors of 2 kept, so the sink fills at rate 2 Gamma from
the source site q and ring coherences decay at rate 2 gamma.

The density matrix has dimension n + 1; the sink is the last basis state and
carries no Hamiltonian matrix elements.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .integrate import IntegrationError, IntegrationStats, IntegratorConfig, propagate


@dataclass(frozen=True)
class NoiseParams:
    """Dephasing rate ``gamma`` and sink rate ``Gamma_sink`` (units of J); ``sink_source`` is 1-based.

    ``sink_source=None`` means the site opposite to site 1, N/2 + 1.
    """

    gamma: float = 0.0
    Gamma_sink: float = 0.0
    sink_source: Optional[int] = None

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.Gamma_sink >= 0:
            raise ValueError(f"Gamma_sink must be >= 0, got {self.Gamma_sink}")

    def source_index(self, n_sites: int) -> int:
        """0-based index of the site feeding the sink."""
        site = n_sites // 2 + 1 if self.sink_source is None else self.sink_source
        if not 1 <= site <= n_sites:
            raise ValueError(f"sink_source must lie in 1..{n_sites}, got {site}")
        return site - 1


@dataclass(frozen=True)
class Trajectory:
    """Observables sampled at ``times``.

    ``site_populations`` has shape (T, n); ``states`` is kept only on request.
    For closed evolution the sink population is identically zero.
    """

    times: np.ndarray
    site_populations: np.ndarray
    sink_population: np.ndarray
    coherence_l1: np.ndarray
    states: Optional[np.ndarray] = None

    @property
    def n_sites(self) -> int:
        return self.site_populations.shape[1]

    def population(self, site: int) -> np.ndarray:
        """Population of 1-based ``site`` over time."""
        return self.site_populations[:, site - 1]

    @property
    def norm(self) -> np.ndarray:
        return self.site_populations.sum(axis=1) + self.sink_population


def _check_times(times) -> np.ndarray:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.ndim != 1 or len(times) == 0 or times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a non-empty, strictly increasing sequence starting at >= 0")
    return times


def _check_site(site: int, n: int) -> int:
    if not 1 <= site <= n:
        raise ValueError(f"site must lie in 1..{n}, got {site}")
    return site - 1


def evolve_closed(H: np.ndarray, initial_site: int, times) -> Trajectory:
    """Schroedinger evolution of |initial_site> via the eigendecomposition of ``H``."""
    times = _check_times(times)
    H = np.asarray(H)
    if not np.allclose(H, H.conj().T, atol=1e-12):
        raise ValueError("H must be Hermitian")
    i0 = _check_site(initial_site, H.shape[0])
    w, v = np.linalg.eigh(H)
    # psi(t) = V exp(-i w t) V^+ |i0>
    coeffs = v[i0].conj()
    amps = (np.exp(-1j * np.outer(times, w)) * coeffs) @ v.T
    pops = np.abs(amps) ** 2
    coh = np.abs(amps).sum(axis=1) ** 2 - pops.sum(axis=1)
    return Trajectory(times, pops, np.zeros(len(times)), coh)


def embed_hamiltonian(H: np.ndarray) -> np.ndarray:
    """Ring Hamiltonian padded with a zero row and column for the sink."""
    n = H.shape[0]
    out = np.zeros((n + 1, n + 1), dtype=complex)
    out[:n, :n] = H
    return out


class MasterEquation:
    """Right-hand side of the sink + dephasing master equation for one ring Hamiltonian.

    The dissipators are diagonal in the matrix-element basis, so they are
    applied as an elementwise decay-rate mask plus the single 2 Gamma rho_qq
    feed into the sink population.
    """

    def __init__(self, H: np.ndarray, noise: NoiseParams):
        H = np.asarray(H)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"H must be square, got shape {H.shape}")
        if not np.allclose(H, H.conj().T, atol=1e-12):
            raise ValueError("H must be Hermitian")
        n = H.shape[0]
        self.n_sites = n
        self.dim = n + 1
        self.noise = noise
        self.source = noise.source_index(n)
        self.H = embed_hamiltonian(H)
        g, G, q = noise.gamma, noise.Gamma_sink, self.source
        rates = np.zeros((self.dim, self.dim))
        rates[:n, :n] = 2.0 * g
        rates[np.arange(n), np.arange(n)] = 0.0
        rates[:n, n] = rates[n, :n] = g
        rates[q, :] += G
        rates[:, q] += G
        self.rates = rates
        self._rates = rates.astype(complex)
        self._feed = 2.0 * G
        # a real H multiplies the float view of rho: one real GEMM instead of a complex one
        self._H_real = np.ascontiguousarray(self.H.real) if not np.any(self.H.imag) else None

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.ascontiguousarray(rho, dtype=complex)
        if self._H_real is not None:
            Y = (self._H_real @ rho.view(np.float64)).view(complex)
        else:
            Y = self.H @ rho
        Y *= -1j
        # H and rho are Hermitian, so -i[H, rho] = Y + Y^+ with Y = -i H rho
        out = Y + Y.conj().T
        out -= np.multiply(self._rates, rho, out=Y)
        out[-1, -1] += self._feed * rho[self.source, self.source]
        return out

    def initial_state(self, site: int) -> np.ndarray:
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        i0 = _check_site(site, self.n_sites)
        rho[i0, i0] = 1.0
        return rho


class StackedMasterEquation:
    """Master equations sharing one Hamiltonian, advanced together as a (k, d, d) state.

    Used for parameter scans: one integration with a common step size replaces
    k separate ones, so the per-step overhead is paid once.
    """

    def __init__(self, H: np.ndarray, noises: Sequence[NoiseParams]):
        if len(noises) == 0:
            raise ValueError("need at least one set of noise parameters")
        self.members = [MasterEquation(H, noise) for noise in noises]
        first = self.members[0]
        self.n_sites, self.dim = first.n_sites, first.dim
        self.H, self._H_real = first.H, first._H_real
        self._rates = np.stack([m._rates for m in self.members])
        self._feed = np.array([m._feed for m in self.members])
        self._source = np.array([m.source for m in self.members])
        self._index = np.arange(len(self.members))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.ascontiguousarray(rho, dtype=complex)
        if self._H_real is not None:
            Y = np.matmul(self._H_real, rho.view(np.float64)).view(complex)
        else:
            Y = np.matmul(self.H, rho)
        Y *= -1j
        out = Y + Y.conj().swapaxes(-1, -2)
        out -= np.multiply(self._rates, rho, out=Y)
        out[:, -1, -1] += self._feed * rho[self._index, self._source, self._source]
        return out

    def initial_state(self, site: int) -> np.ndarray:
        return np.stack([m.initial_state(site) for m in self.members])


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, noise: NoiseParams) -> np.ndarray:
    """drho/dt for a state on the n ring sites plus the sink."""
    rho = np.asarray(rho)
    if rho.shape != (H.shape[0] + 1,) * 2:
        raise ValueError(f"rho of shape {rho.shape} does not match {H.shape[0]} sites plus the sink")
    return MasterEquation(H, noise)(rho.astype(complex))


def hermitize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + rho.conj().swapaxes(-1, -2))


def sink_population(rho: np.ndarray, clamp: bool = True) -> float:
    p = float(np.real(rho[-1, -1]))
    return min(max(p, 0.0), 1.0) if clamp else p


def coherence_l1(rho: np.ndarray) -> float:
    """Sum of |rho_ij| over all i != j."""
    a = np.abs(np.asarray(rho))
    return float(a.sum() - np.trace(a))


def observables(states: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Site populations, raw sink population and l1 coherence for a stack of states."""
    diag = np.real(np.diagonal(states, axis1=1, axis2=2))
    a = np.abs(states)
    coh = a.sum(axis=(1, 2)) - np.abs(diag).sum(axis=1)
    return diag[:, :-1].copy(), diag[:, -1].copy(), coh


def evolve_open(
    H: np.ndarray,
    noise: NoiseParams,
    initial_site: int,
    times,
    integrator: IntegratorConfig = IntegratorConfig(),
    keep_states: bool = False,
    stats: Optional[IntegrationStats] = None,
) -> Trajectory:
    """Integrate the master equation from rho(0) = |initial_site><initial_site|."""
    times = _check_times(times)
    eq = MasterEquation(H, noise)
    rho0 = eq.initial_state(initial_site)
    states = propagate(eq, rho0, times, integrator, t0=0.0, post_step=hermitize, stats=stats)
    pops, sink, coh = observables(states)
    return Trajectory(times, pops, sink, coh, states if keep_states else None)


def optimize_sink_rate(
    H: np.ndarray,
    Gamma_grid: Sequence[float],
    t_eval: float,
    gamma: float = 0.0,
    initial_site: int = 1,
    sink_source: Optional[int] = None,
    integrator: IntegratorConfig = IntegratorConfig(),
) -> tuple[float, np.ndarray]:
    """Sink population at ``t_eval`` for each sink rate; returns (best rate, curve).

    All rates are integrated as one stacked system, so every member takes the
    smallest step any of them needs. Ties go to the smaller rate.
    """
    grid = np.asarray(Gamma_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0 or np.any(grid <= 0):
        raise ValueError("Gamma_grid must be a non-empty list of positive rates")
    times = _check_times([t_eval])
    eq = StackedMasterEquation(H, [NoiseParams(gamma, G, sink_source) for G in grid])
    states = propagate(eq, eq.initial_state(initial_site), times, integrator, post_step=hermitize)
    curve = np.real(states[-1, :, -1, -1]).copy()
    best = max(curve)
    candidates = [G for G, p in zip(grid, curve) if p == best]
    return float(min(candidates)), curve


__all__ = [
    "IntegrationError",
    "IntegratorConfig",
    "MasterEquation",
    "NoiseParams",
    "StackedMasterEquation",
    "Trajectory",
    "coherence_l1",
    "embed_hamiltonian",
    "evolve_closed",
    "evolve_open",
    "hermitize",
    "lindblad_rhs",
    "optimize_sink_rate",
    "sink_population",
]
