"""Vectorized Liouvillian and exact propagation by matrix exponentiation.

Built term by term from the jump operators with Kronecker products, so it
shares no code with :class:`ringdat.dynamics.MasterEquation` and serves as
its reference. Row-major vectorization: vec(A X B) = (A kron B^T) vec(X).
"""
import numpy as np
import scipy.linalg

from .dynamics import NoiseParams, embed_hamiltonian


def left(A):
    return np.kron(A, np.eye(A.shape[0]))


def right(B):
    return np.kron(np.eye(B.shape[0]), B.T)


def dissipator(L, rate):
    """rate * (2 L . L^+ - {L^+ L, .}) as a superoperator."""
    LdL = L.conj().T @ L
    return rate * (2.0 * np.kron(L, L.conj()) - left(LdL) - right(LdL))


def liouvillian(H, noise: NoiseParams):
    n = H.shape[0]
    d = n + 1
    Hs = embed_hamiltonian(H)
    sup = -1j * (left(Hs) - right(Hs))
    S = np.zeros((d, d))
    S[n, noise.source_index(n)] = 1.0
    sup = sup + dissipator(S, noise.Gamma_sink)
    for j in range(n):
        P = np.zeros((d, d))
        P[j, j] = 1.0
        sup = sup + dissipator(P, noise.gamma)
    return sup


def evolve_exact(H, noise: NoiseParams, initial_site: int, times) -> np.ndarray:
    """Density matrices exp(L t) rho(0) at each time, shape (T, n+1, n+1)."""
    n = H.shape[0]
    d = n + 1
    L = liouvillian(H, noise)
    rho0 = np.zeros((d, d), dtype=complex)
    rho0[initial_site - 1, initial_site - 1] = 1.0
    v0 = rho0.ravel()
    return np.stack([(scipy.linalg.expm(L * t) @ v0).reshape(d, d) for t in np.atleast_1d(times)])
