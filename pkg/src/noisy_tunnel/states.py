"""Qubit state algebra: Bloch/density conversions and information measures.

Conventions used throughout the package:

* Matrix index 0 is ``|1>``, the +1 eigenstate of sigma_z, and index 1 is
  ``|0>``; hence the Bloch vector (0, 0, 1) is the projector ``|1><1|``.
* ``rho = (I + Px sx + Py sy + Pz sz) / 2`` with the standard Pauli matrices.
* Coherences are always taken in the sigma_z eigenbasis; entropies use
  base-2 logarithms.
"""
from __future__ import annotations

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# construction-time physicality tolerances
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10

_CANONICAL_BLOCH = {
    "rho1": np.array([0.0, 0.0, 1.0]),   # |1><1|, incoherent
    "rho2": np.array([0.0, 1.0, 0.0]),   # (|1> + i|0>)/sqrt(2), maximally coherent
    "rho3": np.array([0.0, 0.0, -1.0]),  # |0><0|, incoherent
}


def bloch_to_density(p) -> np.ndarray:
    """Density matrix for a Bloch vector (Px, Py, Pz).

    No physicality check: vectors with norm slightly above 1 (integrator
    drift) are accepted. The result has unit trace by construction.
    """
    px, py, pz = np.asarray(p, dtype=float)
    rho = np.array([
        [0.5 * (1.0 + pz), 0.5 * (px - 1j * py)],
        [0.5 * (px + 1j * py), 0.5 * (1.0 - pz)],
    ])
    rho.flags.writeable = False
    return rho


def density_to_bloch(rho) -> np.ndarray:
    """Bloch vector ``Pi = Tr(rho sigma_i)``; exact inverse of bloch_to_density.

    Rejects matrices that are not Hermitian with unit trace (tolerance 1e-10).
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("density matrix must be 2x2")
    if np.abs(rho[0, 1] - np.conj(rho[1, 0])) > HERMITIAN_TOL or \
            abs(rho[0, 0].imag) > HERMITIAN_TOL or abs(rho[1, 1].imag) > HERMITIAN_TOL:
        raise ValueError("density matrix must be Hermitian")
    if abs(rho[0, 0] + rho[1, 1] - 1.0) > TRACE_TOL:
        raise ValueError("density matrix must have unit trace")
    return np.array([
        2.0 * rho[0, 1].real,
        -2.0 * rho[0, 1].imag,
        (rho[0, 0] - rho[1, 1]).real,
    ])


def canonical_state(tag: str) -> np.ndarray:
    """One of the reference initial states ``rho1``, ``rho2`` or ``rho3``."""
    try:
        return bloch_to_density(_CANONICAL_BLOCH[tag])
    except KeyError:
        raise ValueError(f"unknown state tag {tag!r}; expected rho1, rho2 or rho3")


def canonical_bloch(tag: str) -> np.ndarray:
    """Bloch vector of a canonical state tag."""
    try:
        p = _CANONICAL_BLOCH[tag].copy()
    except KeyError:
        raise ValueError(f"unknown state tag {tag!r}; expected rho1, rho2 or rho3")
    p.flags.writeable = False
    return p


def l1_coherence(rho) -> float:
    """l1-norm coherence ``sum_{i != j} |rho_ij| = 2 |rho01|``."""
    rho = np.asarray(rho)
    return float(2.0 * np.abs(rho[0, 1]))


def l1_coherence_bloch(p) -> np.ndarray | float:
    """l1 coherence ``sqrt(Px^2 + Py^2)`` from Bloch components.

    Accepts a single vector or an (..., 3) array of vectors.
    """
    p = np.asarray(p, dtype=float)
    return np.hypot(p[..., 0], p[..., 1])


def binary_entropy(x) -> np.ndarray | float:
    """Base-2 entropy ``-x log2 x - (1-x) log2(1-x)`` with 0 log 0 := 0."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.zeros_like(x)
    inner = (x > 0.0) & (x < 1.0)
    xi = x[inner]
    out[inner] = -xi * np.log2(xi) - (1.0 - xi) * np.log2(1.0 - xi)
    return float(out[0]) if scalar else out


def relative_entropy_coherence(rho) -> float:
    """Relative entropy of coherence ``S(rho_diag) - S(rho)`` (base 2)."""
    rho = np.asarray(rho)
    return relative_entropy_coherence_bloch(density_to_bloch(rho))


def relative_entropy_coherence_bloch(p) -> np.ndarray | float:
    """Relative entropy of coherence from Bloch components.

    For a qubit, S(rho_diag) is the binary entropy of (1 + Pz)/2 and S(rho)
    the binary entropy of (1 + |P|)/2. Accepts (..., 3) arrays.
    """
    p = np.asarray(p, dtype=float)
    pop = 0.5 * (1.0 + p[..., 2])
    radius = np.sqrt(np.sum(np.square(p), axis=-1))
    return binary_entropy(pop) - binary_entropy(0.5 * (1.0 + radius))


def trace_distance(rho_a, rho_b) -> float:
    """Trace distance ``(1/2) Tr |rho_a - rho_b|``.

    Uses the closed-form 2x2 Hermitian eigenvalues; bitwise symmetric under
    swapping the arguments.
    """
    diff = np.asarray(rho_a, dtype=complex) - np.asarray(rho_b, dtype=complex)
    mid = 0.5 * (diff[0, 0].real + diff[1, 1].real)
    radius = np.sqrt((0.5 * (diff[0, 0].real - diff[1, 1].real)) ** 2
                     + diff[0, 1].real ** 2 + diff[0, 1].imag ** 2)
    return float(0.5 * (abs(mid + radius) + abs(mid - radius)))


def trace_distance_bloch(pa, pb) -> np.ndarray | float:
    """Qubit trace distance: half the Euclidean distance of Bloch vectors."""
    diff = np.asarray(pa, dtype=float) - np.asarray(pb, dtype=float)
    return 0.5 * np.sqrt(np.sum(np.square(diff), axis=-1))
