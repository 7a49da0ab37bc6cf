"""Ring Hamiltonians, static on-site disorder and their spectra.

Energies passed to the builders are in cm^-1. Dynamics work in units of the
effective coupling ``J`` (see :attr:`RingTopology.effective_J`), so the
helper :func:`hamiltonian_in_units_of_J` is what the rest of the package uses.

Sites are 1-based in the documentation and 0-based in every array.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

Kind = Literal["isotropic", "dimerized"]

# Philox counter words reserved per realization index; the low 128 bits
# advance with each draw so streams for different indices never overlap.
_INDEX_SHIFT = 128


class InvalidTopology(ValueError):
    pass


class InvalidParameter(ValueError):
    pass


@dataclass(frozen=True)
class RingTopology:
    """N-site ring with isotropic coupling ``J`` or alternating ``J1``/``J2``.

    For a dimerized ring the edges (1,2), (3,4), ... carry the intra-dimer
    coupling ``J1`` and the edges (2,3), ..., (N,1) the inter-dimer ``J2``.
    """

    n_sites: int
    kind: Kind = "isotropic"
    J: Optional[float] = None
    J1: Optional[float] = None
    J2: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("isotropic", "dimerized"):
            raise InvalidTopology(f"unknown coupling kind {self.kind!r}")
        if int(self.n_sites) != self.n_sites or self.n_sites < 3:
            raise InvalidTopology(f"n_sites must be an integer >= 3, got {self.n_sites}")
        if self.kind == "isotropic":
            if self.J is None or not self.J > 0:
                raise InvalidTopology(f"isotropic ring needs J > 0, got {self.J}")
        else:
            if self.n_sites % 2:
                raise InvalidTopology(f"dimerized ring needs an even n_sites, got {self.n_sites}")
            for name in ("J1", "J2"):
                value = getattr(self, name)
                if value is None or not value > 0:
                    raise InvalidTopology(f"dimerized ring needs {name} > 0, got {value}")

    @classmethod
    def isotropic(cls, n_sites: int, J: float) -> "RingTopology":
        return cls(n_sites=n_sites, kind="isotropic", J=J)

    @classmethod
    def dimerized(cls, n_sites: int, J1: float, J2: float) -> "RingTopology":
        return cls(n_sites=n_sites, kind="dimerized", J1=J1, J2=J2)

    @property
    def effective_J(self) -> float:
        """Energy unit for every dimensionless ratio (Jt, sigma/J, gamma/J, Gamma/J)."""
        if self.kind == "isotropic":
            return float(self.J)
        return 0.5 * (self.J1 + self.J2)

    @property
    def beta(self) -> float:
        """Dimerization degree J1/J2 (1 for an isotropic ring)."""
        if self.kind == "isotropic":
            return 1.0
        return self.J1 / self.J2

    @property
    def default_sink_source(self) -> int:
        """1-based site opposite to site 1."""
        return self.n_sites // 2 + 1


@dataclass(frozen=True)
class DisorderRealization:
    sigma: float
    offsets: np.ndarray
    seed: int
    realization_index: int


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    source: Literal["analytic", "numeric"] = "numeric"
    labels: np.ndarray = field(default=None, repr=False)


def _ring_from_edges(weights: np.ndarray) -> np.ndarray:
    n = len(weights)
    H = np.zeros((n, n))
    idx = np.arange(n)
    nxt = (idx + 1) % n
    H[idx, nxt] = weights
    H[nxt, idx] = weights
    return H


def build_isotropic(topology: RingTopology) -> np.ndarray:
    if topology.kind != "isotropic":
        raise InvalidTopology("build_isotropic needs an isotropic topology")
    return _ring_from_edges(np.full(topology.n_sites, float(topology.J)))


def build_dimerized(topology: RingTopology) -> np.ndarray:
    if topology.kind != "dimerized":
        raise InvalidTopology("build_dimerized needs a dimerized topology")
    # edge j joins 0-based sites (j, j+1); even j is intra-dimer
    weights = np.where(np.arange(topology.n_sites) % 2 == 0, topology.J1, topology.J2)
    return _ring_from_edges(weights.astype(float))


def build_hamiltonian(topology: RingTopology) -> np.ndarray:
    if topology.kind == "isotropic":
        return build_isotropic(topology)
    return build_dimerized(topology)


def hamiltonian_in_units_of_J(topology: RingTopology, offsets: Optional[np.ndarray] = None) -> np.ndarray:
    """Ring Hamiltonian divided by ``effective_J``, plus diagonal ``offsets`` (already in units of J)."""
    H = build_hamiltonian(topology) / topology.effective_J
    if offsets is not None:
        H = apply_disorder(H, offsets)
    return H


def _standard_normals(n: int, seed: int, index: int) -> np.ndarray:
    bitgen = np.random.Philox(key=int(seed) % (1 << 128), counter=int(index) << _INDEX_SHIFT)
    return np.random.Generator(bitgen).standard_normal(n)


def sample_disorder(n: int, sigma: float, seed: int, index: int) -> DisorderRealization:
    """Draw ``n`` i.i.d. N(0, sigma^2) on-site offsets keyed by ``(seed, index)``.

    The generator is counter based, so realization ``index`` can be produced
    on its own in any order and is always bit-identical. All sigma values
    share the same underlying standard normals for a given key.
    """
    if not sigma >= 0:
        raise InvalidParameter(f"sigma must be >= 0, got {sigma}")
    if index < 0:
        raise InvalidParameter(f"realization index must be >= 0, got {index}")
    if sigma == 0:
        offsets = np.zeros(n)
    else:
        offsets = sigma * _standard_normals(n, seed, index)
    offsets.setflags(write=False)
    return DisorderRealization(float(sigma), offsets, int(seed), int(index))


def apply_disorder(H: np.ndarray, disorder) -> np.ndarray:
    """Return a copy of ``H`` with the offsets added to its diagonal."""
    offsets = getattr(disorder, "offsets", disorder)
    offsets = np.asarray(offsets, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or offsets.shape != (H.shape[0],):
        raise ValueError(f"disorder of shape {offsets.shape} does not fit a {H.shape} Hamiltonian")
    out = np.array(H, dtype=float, copy=True)
    out[np.diag_indices_from(out)] += offsets
    return out


def numeric_spectrum(H: np.ndarray, vectors: bool = True) -> SpectrumResult:
    if vectors:
        w, v = np.linalg.eigh(H)
        return SpectrumResult(w, v, "numeric", np.arange(len(w)))
    w = np.linalg.eigvalsh(H)
    return SpectrumResult(w, None, "numeric", np.arange(len(w)))


def fourier_basis(n: int) -> np.ndarray:
    """Columns are the plane waves exp(i 2 pi k j / n)/sqrt(n), k = 1..n, j = 1..n."""
    k = np.arange(1, n + 1)
    j = np.arange(1, n + 1)
    return np.exp(2j * np.pi * np.outer(j, k) / n) / np.sqrt(n)


def analytic_spectrum_isotropic(topology: RingTopology, vectors: bool = False) -> SpectrumResult:
    """Closed-form spectrum of the isotropic ring.

    The plane wave with momentum k has energy 2J cos(2 pi k / N) for the
    ring Hamiltonian with +J hopping. For even N this multiset equals
    {-2J cos(2 pi k / N)} since k -> k + N/2 flips the sign.
    """
    if topology.kind != "isotropic":
        raise InvalidTopology("analytic_spectrum_isotropic needs an isotropic topology")
    n, J = topology.n_sites, float(topology.J)
    k = np.arange(1, n + 1)
    energies = 2.0 * J * np.cos(2.0 * np.pi * k / n)
    order = np.argsort(energies, kind="stable")
    vecs = fourier_basis(n)[:, order] if vectors else None
    return SpectrumResult(energies[order], vecs, "analytic", k[order])


def dimer_band(topology: RingTopology) -> np.ndarray:
    """Positive band energies e_k = J2 sqrt(beta^2 + 1 + 2 beta cos alpha_k), k = 0..K-1."""
    K = topology.n_sites // 2
    alpha = 2.0 * np.pi * np.arange(K) / K
    b = topology.beta
    radicand = np.maximum(b * b + 1.0 + 2.0 * b * np.cos(alpha), 0.0)
    return topology.J2 * np.sqrt(radicand)


def analytic_spectrum_dimerized(topology: RingTopology) -> SpectrumResult:
    if topology.kind != "dimerized":
        raise InvalidTopology("analytic_spectrum_dimerized needs a dimerized topology")
    e = dimer_band(topology)
    K = len(e)
    energies = np.concatenate([-e, e])
    labels = np.concatenate([np.arange(K), np.arange(K)])
    order = np.argsort(energies, kind="stable")
    return SpectrumResult(energies[order], None, "analytic", labels[order])


def analytic_spectrum(topology: RingTopology) -> SpectrumResult:
    if topology.kind == "isotropic":
        return analytic_spectrum_isotropic(topology)
    return analytic_spectrum_dimerized(topology)


def dimer_block(k: int, topology: RingTopology, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray, bool]:
    """Bloch block ``h_k`` of the dimerized ring and the unitary ``U_k`` diagonalizing it.

    ``U_k^dagger h_k U_k = diag(+e_k, -e_k)``. The third return value flags
    the degenerate case e_k = 0 (only for beta = 1 at alpha_k = pi), where
    ``U_k`` falls back to the identity.
    """
    if topology.kind != "dimerized":
        raise InvalidTopology("dimer_block needs a dimerized topology")
    K = topology.n_sites // 2
    if not 0 <= k < K:
        raise InvalidParameter(f"block index must satisfy 0 <= k < {K}, got {k}")
    alpha = 2.0 * np.pi * k / K
    J1, J2, b = topology.J1, topology.J2, topology.beta
    off = J1 + np.exp(-1j * alpha) * J2
    h = np.array([[0.0, off], [np.conj(off), 0.0]], dtype=complex)
    # band energy in units of J2, so eta is a pure phase
    e = np.sqrt(max(b * b + 1.0 + 2.0 * b * np.cos(alpha), 0.0))
    if e * J2 <= tol * (J1 + J2):
        return h, np.eye(2, dtype=complex), True
    eta = (b + np.exp(-1j * alpha)) / e
    U = np.array([[eta, -eta], [1.0, 1.0]], dtype=complex) / np.sqrt(2.0)
    return h, U, False


def dimer_fourier_basis(n: int) -> np.ndarray:
    """Unitary whose column 2k+s is the Bloch state |k, s> (s = 0 for sites 1, 3, ...)."""
    K = n // 2
    cells = np.arange(K)
    out = np.zeros((n, n), dtype=complex)
    for k in range(K):
        phase = np.exp(2j * np.pi * k * cells / K) / np.sqrt(K)
        for s in range(2):
            out[2 * cells + s, 2 * k + s] = phase
    return out


def spectral_gap(eigenvalues: np.ndarray) -> float:
    """Width of the band gap around zero for a spectrum symmetric about 0."""
    ev = np.asarray(eigenvalues)
    pos = ev[ev > 0]
    neg = ev[ev < 0]
    if len(pos) == 0 or len(neg) == 0 or np.any(np.isclose(ev, 0.0, atol=1e-9 * max(1.0, np.abs(ev).max()))):
        return 0.0
    return float(pos.min() - neg.max())
