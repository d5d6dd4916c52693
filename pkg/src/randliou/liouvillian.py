"""Assembly of the vectorized Lindblad superoperator.

Vectorization is fixed to row-stacking, ``vec(rho)[a*n + b] = rho[a, b]``,
for which ``vec(A rho B) = (A kron B^T) vec(rho)``.  With that convention

    L = -i (H kron 1 - 1 kron H^T)
        + sum_l [ W_l kron conj(W_l)
                  - 1/2 (W_l^dag W_l) kron 1
                  - 1/2  1 kron (W_l^dag W_l)^T ].

L preserves the trace (the row vector vec(1)^dag annihilates it from the
left) and preserves Hermiticity.  The latter means L is unitarily similar
to a *real* matrix: in an orthonormal basis of Hermitian matrices the
matrix elements Tr[h_i L(h_j)] are real.  :func:`real_representation`
performs that basis change; the downstream eigensolves run on the real
form, which is both faster and makes the conjugation symmetry of the
spectrum exact.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "VECTORIZATION",
    "Superoperator",
    "vec",
    "devec",
    "build_liouvillian",
    "apply_direct",
    "build_from_dissipation_matrix",
    "hermitian_basis_indices",
    "real_representation",
    "coords_to_matrix",
    "matrix_to_coords",
    "dump_superoperator",
    "load_superoperator",
]

VECTORIZATION = "row-stacking"

_HERMITICITY_RTOL = 1e-10
_TRACELESS_RTOL = 1e-9


def vec(rho):
    """Row-stacking vectorization of an n x n matrix."""
    return np.asarray(rho).reshape(-1)


def devec(v, n):
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape(n, n)


@dataclass
class Superoperator:
    """Dense n^2 x n^2 Liouvillian plus the pieces it was built from.

    The Hamiltonian and jump operators are retained so that residuals can
    be checked against the vectorization-free action :func:`apply_direct`.
    """

    matrix: np.ndarray = field(repr=False)
    n: int
    hamiltonian: np.ndarray = field(repr=False)
    jumps: list = field(repr=False)
    params: object = None
    convention: str = VECTORIZATION

    def __post_init__(self):
        self._fro = None

    @property
    def frobenius_norm(self):
        if self._fro is None:
            self._fro = float(np.linalg.norm(self.matrix))
        return self._fro

    @property
    def tol_zero(self):
        """Zero-mode tolerance, 1e-10 * ||L||_F (scales with conditioning)."""
        return 1e-10 * self.frobenius_norm

    def trace_defect(self):
        """||vec(1)^dag L|| / ||L||_F; zero for exact trace preservation."""
        identity = np.eye(self.n, dtype=complex).reshape(-1)
        return float(np.linalg.norm(identity @ self.matrix) / self.frobenius_norm)


def _check_square(mat, name):
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square, got shape {mat.shape}")
    return mat


def _kron_accumulate(out, a, b):
    # out += kron(a, b) without np.kron's intermediate reshuffles
    n = a.shape[0]
    m = b.shape[0]
    view = out.reshape(n, m, n, m)
    view += a[:, None, :, None] * b[None, :, None, :]


def build_liouvillian(hamiltonian, jumps, params=None):
    """Assemble the row-stacked superoperator from H and the jump operators.

    Parameters
    ----------
    hamiltonian : (n, n) array, Hermitian within 1e-10 relative tolerance.
    jumps : sequence of (n, n) arrays, each traceless.
    params : optional ModelParams snapshot stored on the result.
    """
    ham = _check_square(hamiltonian, "hamiltonian").astype(complex)
    n = ham.shape[0]
    defect = np.linalg.norm(ham - ham.conj().T)
    if defect > _HERMITICITY_RTOL * max(np.linalg.norm(ham), 1e-300):
        raise ValueError(f"hamiltonian is not Hermitian (defect {defect:.2e})")
    jumps = [np.asarray(w, dtype=complex) for w in jumps]
    for ell, w in enumerate(jumps):
        if w.shape != (n, n):
            raise ValueError(f"jump {ell} has shape {w.shape}, expected {(n, n)}")
        if abs(np.trace(w)) > _TRACELESS_RTOL * max(np.linalg.norm(w), 1e-300):
            raise ValueError(f"jump {ell} is not traceless (Tr = {np.trace(w):.2e})")

    eye = np.eye(n, dtype=complex)
    out = np.zeros((n * n, n * n), dtype=complex)
    _kron_accumulate(out, -1j * ham, eye)
    _kron_accumulate(out, 1j * eye, ham.T)
    for w in jumps:
        anchor = w.conj().T @ w
        _kron_accumulate(out, w, w.conj())
        _kron_accumulate(out, -0.5 * anchor, eye)
        _kron_accumulate(out, -0.5 * eye, anchor.T)
    return Superoperator(matrix=out, n=n, hamiltonian=ham, jumps=jumps, params=params)


def apply_direct(hamiltonian, jumps, rho):
    """Lindblad action -i[H, rho] + sum_l (W rho W^dag - {W^dag W, rho}/2).

    Computed without vectorization; serves as the independent oracle for
    the Kronecker assembly.
    """
    ham = np.asarray(hamiltonian)
    rho = np.asarray(rho)
    if rho.shape != ham.shape:
        raise ValueError(f"rho shape {rho.shape} != H shape {ham.shape}")
    out = -1j * (ham @ rho - rho @ ham)
    for w in jumps:
        anchor = w.conj().T @ w
        out = out + w @ rho @ w.conj().T - 0.5 * (anchor @ rho + rho @ anchor)
    return out


def build_from_dissipation_matrix(hamiltonian, basis, dmat, g, params=None):
    """Assemble L from the dissipation kernel d = w w^dag (double-sum form).

    Dissipator: g^2 sum_jk d_jk [G_j rho G_k^dag - {G_k^dag G_j, rho}/2]
    over the traceless basis elements.  Agrees with the jump-operator
    builder for W_l = g sum_j G_j w_jl up to rounding.  Cost is O(n^6);
    intended for cross-checks at small n.
    """
    ham = _check_square(hamiltonian, "hamiltonian").astype(complex)
    n = ham.shape[0]
    if basis.n != n:
        raise ValueError(f"basis dimension {basis.n} != hamiltonian dimension {n}")
    dmat = np.asarray(dmat)
    m = len(basis.traceless)
    if dmat.shape != (m, m):
        raise ValueError(f"d has shape {dmat.shape}, expected {(m, m)}")

    eye = np.eye(n, dtype=complex)
    out = np.zeros((n * n, n * n), dtype=complex)
    _kron_accumulate(out, -1j * ham, eye)
    _kron_accumulate(out, 1j * eye, ham.T)
    gsq = g * g
    for j in range(m):
        gj = basis.traceless[j]
        for k in range(m):
            w_jk = dmat[j, k]
            if w_jk == 0.0:
                continue
            gk = basis.traceless[k]
            anchor = gk.conj().T @ gj
            _kron_accumulate(out, gsq * w_jk * gj, gk.conj())
            _kron_accumulate(out, -0.5 * gsq * w_jk * anchor, eye)
            _kron_accumulate(out, -0.5 * gsq * w_jk * eye, anchor.T)
    return Superoperator(matrix=out, n=n, hamiltonian=ham, jumps=[], params=params)


def hermitian_basis_indices(n):
    """Vec positions used by the Hermitian-basis change of coordinates.

    Returns (diag, upper, lower): positions of the diagonal entries and of
    the (a < b) upper/lower off-diagonal pairs in the row-stacked vector.
    """
    a, b = np.triu_indices(n, k=1)
    return np.arange(n) * (n + 1), a * n + b, b * n + a


def real_representation(superop):
    """Similarity-transform L into the orthonormal Hermitian-operator basis.

    The basis is {E_aa} + {(E_ab + E_ba)/sqrt(2)} + {i(E_ab - E_ba)/sqrt(2)};
    hermiticity preservation makes the transformed matrix real.  Returns a
    float64 array with the same spectrum as ``superop.matrix``.
    """
    mat = superop.matrix if isinstance(superop, Superoperator) else np.asarray(superop)
    nsq = mat.shape[0]
    n = int(round(np.sqrt(nsq)))
    if n * n != nsq:
        raise ValueError(f"matrix size {nsq} is not a perfect square")
    diag, upper, lower = hermitian_basis_indices(n)
    npair = upper.size
    s = 1.0 / np.sqrt(2.0)

    cols = np.empty((nsq, nsq), dtype=complex)
    cols[:, :n] = mat[:, diag]
    cols[:, n:n + npair] = (mat[:, upper] + mat[:, lower]) * s
    cols[:, n + npair:] = 1j * (mat[:, upper] - mat[:, lower]) * s

    out = np.empty((nsq, nsq))
    out[:n, :] = cols[diag, :].real
    out[n:n + npair, :] = (cols[upper, :] + cols[lower, :]).real * s
    out[n + npair:, :] = (cols[upper, :] - cols[lower, :]).imag * s
    return out


def coords_to_matrix(coords, n):
    """Map Hermitian-basis coordinates back to an n x n matrix.

    Real coordinates yield an exactly Hermitian matrix; complex ones are
    supported for transforming general eigenvectors.
    """
    coords = np.asarray(coords)
    diag, upper, lower = hermitian_basis_indices(n)
    npair = upper.size
    s = 1.0 / np.sqrt(2.0)
    flat = np.zeros(n * n, dtype=complex)
    flat[diag] = coords[:n]
    sym = coords[n:n + npair] * s
    asym = coords[n + npair:] * s
    flat[upper] = sym + 1j * asym
    flat[lower] = sym - 1j * asym
    return flat.reshape(n, n)


def matrix_to_coords(rho):
    """Inverse of :func:`coords_to_matrix` (real for Hermitian input)."""
    rho = np.asarray(rho)
    n = rho.shape[0]
    flat = rho.reshape(-1)
    diag, upper, lower = hermitian_basis_indices(n)
    s = 1.0 / np.sqrt(2.0)
    coords = np.empty(n * n, dtype=complex)
    coords[:n] = flat[diag]
    coords[n:n + upper.size] = (flat[upper] + flat[lower]) * s
    coords[n + upper.size:] = 1j * (flat[lower] - flat[upper]) * s
    if np.max(np.abs(coords.imag), initial=0.0) < 1e-12 * max(
        np.max(np.abs(coords), initial=0.0), 1e-300
    ):
        return coords.real.copy()
    return coords


# Binary dump layout (all little-endian):
#   magic   4s   b"RLSO"
#   version u32  1
#   n       u32
#   beta    u32  (0 when params unknown)
#   r       u32  (0 when params unknown)
#   g       f64  (0 when params unknown)
#   seed    u64
#   real.   u32  realization index
#   tag     16s  vectorization convention, NUL-padded ASCII
# followed by n^2 * n^2 complex128 values, row-major, interleaved (re, im).
_DUMP_MAGIC = b"RLSO"
_DUMP_VERSION = 1
_DUMP_HEADER = struct.Struct("<4sIIIIdQI16s")


def dump_superoperator(superop, path):
    """Write the documented binary dump of L (header + row-major complex128)."""
    params = superop.params
    header = _DUMP_HEADER.pack(
        _DUMP_MAGIC,
        _DUMP_VERSION,
        superop.n,
        getattr(params, "beta", 0) or 0,
        getattr(params, "r", 0) or 0,
        float(getattr(params, "g", 0.0) or 0.0),
        int(getattr(params, "seed", 0) or 0),
        int(getattr(params, "realization", 0) or 0),
        superop.convention.encode("ascii"),
    )
    data = np.ascontiguousarray(superop.matrix, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def load_superoperator(path):
    """Read a dump back; returns (matrix, header dict)."""
    with open(path, "rb") as fh:
        raw = fh.read(_DUMP_HEADER.size)
        magic, version, n, beta, r, g, seed, realization, tag = _DUMP_HEADER.unpack(raw)
        if magic != _DUMP_MAGIC:
            raise ValueError(f"not a superoperator dump (magic {magic!r})")
        if version != _DUMP_VERSION:
            raise ValueError(f"unsupported dump version {version}")
        mat = np.frombuffer(fh.read(), dtype="<c16").reshape(n * n, n * n).copy()
    header = {
        "n": n,
        "beta": beta,
        "r": r,
        "g": g,
        "seed": seed,
        "realization": realization,
        "convention": tag.rstrip(b"\x00").decode("ascii"),
    }
    return mat, header
