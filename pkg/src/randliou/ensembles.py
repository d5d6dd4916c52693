"""Random-matrix inputs for the Lindblad ensemble.

The model is parameterised by the Hilbert-space dimension ``n``, the Dyson
index ``beta`` (1 = real/orthogonal class, 2 = complex/unitary class), the
number of jump operators ``r`` and the dissipation strength ``g``.

The Hamiltonian is drawn from the Gaussian ensemble with weight
``exp(-Tr(H^2)/2)``: unit variance on the diagonal, mean square 1 (beta=2)
or 1/2 (beta=1) per off-diagonal entry.  Each jump operator is a traceless
Gaussian (Ginibre) matrix whose entries carry ``beta`` real degrees of
freedom of variance ``g^2`` each.  Sampling the entries directly and
projecting out the trace is measure-equivalent to expanding in a traceless
orthonormal operator basis with Ginibre coefficients ``w`` (Gaussian
measures are invariant under the unitary basis change); the basis route is
kept for cross-checks via :func:`sample_coefficients` and
:func:`jumps_from_coefficients`.

Randomness is organised in named streams: each (master seed, realization,
stream tag) triple seeds an independent counter-based Philox generator, so
ensemble members can be produced in any order or in parallel and still be
bit-reproducible.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "BasisSet",
    "STREAM_HAMILTONIAN",
    "STREAM_JUMP",
    "stream_rng",
    "make_basis",
    "sample_hamiltonian",
    "sample_jump_operators",
    "sample_coefficients",
    "jumps_from_coefficients",
    "dissipation_matrix",
]

# Stream tags for stream_rng. Jump operator l uses STREAM_JUMP + l.
STREAM_HAMILTONIAN = 0
STREAM_JUMP = 1


@dataclass(frozen=True)
class ModelParams:
    """Ensemble coordinates (n, beta, r, g) plus the seeding identity.

    ``g_eff = (2 r beta n)**(1/4) g`` is the effective dissipation strength
    in which all regime boundaries are expressed.
    """

    n: int
    beta: int
    r: int
    g: float
    seed: int
    realization: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.beta not in (1, 2):
            raise ValueError(f"beta must be 1 or 2, got {self.beta}")
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if not self.g > 0:
            raise ValueError(f"g must be > 0, got {self.g}")
        if self.realization < 0:
            raise ValueError(f"realization must be >= 0, got {self.realization}")

    @property
    def g_eff(self):
        return (2.0 * self.r * self.beta * self.n) ** 0.25 * self.g

    @classmethod
    def from_geff(cls, n, beta, r, g_eff, seed, realization=0):
        """Build params from the effective strength (inverse of ``g_eff``)."""
        g = g_eff / (2.0 * r * beta * n) ** 0.25
        return cls(n=n, beta=beta, r=r, g=g, seed=seed, realization=realization)

    def with_realization(self, realization):
        return ModelParams(self.n, self.beta, self.r, self.g, self.seed, realization)


def stream_rng(params, tag):
    """Independent Philox generator for one (seed, realization, tag) stream."""
    ss = np.random.SeedSequence(
        entropy=params.seed, spawn_key=(params.realization, tag)
    )
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class BasisSet:
    """Orthonormal operator basis: G_0 = 1/sqrt(n) plus n^2 - 1 traceless G_j.

    The traceless part is the matrix-unit construction: all off-diagonal
    units E_ab (a != b) in row-major order, followed by the n - 1 diagonal
    traceless matrices diag(1, ..., 1, -k, 0, ...) / sqrt(k (k+1)).
    """

    n: int
    identity_element: np.ndarray = field(repr=False)
    traceless: list = field(repr=False)

    def __len__(self):
        return 1 + len(self.traceless)

    @property
    def elements(self):
        """All n^2 elements, G_0 first."""
        return [self.identity_element] + list(self.traceless)


def make_basis(n):
    """Matrix-unit orthonormal basis of n x n operators.

    Satisfies Tr[G_i^dag G_j] = delta_ij exactly (up to rounding in the
    diagonal normalisers) and the completeness relation
    sum_{j>=1} |(G_j)_ab|^2 = 1 - delta_ab / n.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    traceless = []
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            unit = np.zeros((n, n), dtype=complex)
            unit[a, b] = 1.0
            traceless.append(unit)
    for k in range(1, n):
        diag = np.zeros(n)
        diag[:k] = 1.0
        diag[k] = -float(k)
        mat = np.diag(diag / np.sqrt(k * (k + 1.0))).astype(complex)
        traceless.append(mat)
    identity_element = np.eye(n, dtype=complex) / np.sqrt(n)
    return BasisSet(n=n, identity_element=identity_element, traceless=traceless)


def sample_hamiltonian(params, rng=None):
    """Draw H from exp(-Tr(H^2)/2), Hermitian (symmetric for beta=1).

    Returns a real array for beta=1 and a complex one for beta=2.  The
    generator defaults to the dedicated Hamiltonian stream of ``params``.
    """
    if rng is None:
        rng = stream_rng(params, STREAM_HAMILTONIAN)
    n, beta = params.n, params.beta
    diag = rng.normal(size=n)
    if beta == 2:
        off = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2.0)
    else:
        off = rng.normal(size=(n, n)) / np.sqrt(2.0)
    ham = np.triu(off, 1)
    ham = ham + ham.conj().T
    ham[np.diag_indices(n)] = diag
    return ham


def _sample_one_jump(n, beta, g, rng):
    if beta == 2:
        jump = g * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    else:
        jump = g * rng.normal(size=(n, n))
    # Traceless projection; leaves the Gaussian measure basis-equivalent to
    # the expansion W = g sum_j G_j w_j with Ginibre w.
    jump = jump - (np.trace(jump) / n) * np.eye(n, dtype=jump.dtype)
    return jump


def sample_jump_operators(params, rngs=None):
    """Draw the r traceless jump operators W_l, strength g absorbed.

    Each operator comes from its own stream (tag ``STREAM_JUMP + l``) unless
    explicit generators are passed.
    """
    if rngs is None:
        rngs = [stream_rng(params, STREAM_JUMP + ell) for ell in range(params.r)]
    if len(rngs) != params.r:
        raise ValueError(f"need {params.r} generators, got {len(rngs)}")
    return [
        _sample_one_jump(params.n, params.beta, params.g, rng) for rng in rngs
    ]


def sample_coefficients(params, rng=None):
    """Ginibre coefficient matrix w of shape (n^2 - 1, r), exp(-Tr(w^dag w)/2).

    Reference construction for the basis-expansion route; per complex entry
    the mean square is beta (beta real degrees of freedom of unit variance).
    """
    if rng is None:
        rng = stream_rng(params, STREAM_JUMP)
    m = params.n * params.n - 1
    if params.beta == 2:
        return rng.normal(size=(m, params.r)) + 1j * rng.normal(size=(m, params.r))
    return rng.normal(size=(m, params.r)).astype(float)


def jumps_from_coefficients(coeffs, basis, g):
    """Assemble W_l = g sum_j G_j w_jl from the traceless basis."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] != len(basis.traceless):
        raise ValueError(
            f"coefficient rows {coeffs.shape[0]} != basis size {len(basis.traceless)}"
        )
    stack = np.stack(basis.traceless)  # (n^2-1, n, n)
    return [g * np.tensordot(coeffs[:, ell], stack, axes=1) for ell in range(coeffs.shape[1])]


def dissipation_matrix(coeffs):
    """d = w w^dag, the (n^2-1) x (n^2-1) Hermitian PSD dissipation kernel."""
    coeffs = np.asarray(coeffs)
    if coeffs.ndim != 2:
        raise ValueError(f"w must be 2-d (n^2-1, r), got shape {coeffs.shape}")
    return coeffs @ coeffs.conj().T
