"""Hermite functions, coherent states, and operator matrices in the Fock basis.

The computational representation of every operator is its matrix in the
truncated Hermite (harmonic oscillator) basis h_0..h_{N-1} per mode, with
entry (j, k) = <A h_k, h_j> under the convention <f, g> = int f conj(g)
(linear in the first argument).

Coherent states are the Gaussian wave packets

    Psi_{x,xi}(u) = pi^{-n/4} exp(-|u-x|^2/2 + i u.xi - i x.xi/2)

whose Fock coefficients have the closed form
<Psi_X, h_k> = exp(-|X|^2/4) z^k / sqrt(k!) with z = (x + i xi)/sqrt(2)
per mode; the form is validated against direct quadrature in the tests.

Unitary translation matrices are matrix exponentials of their skew-Hermitian
generators.  The generator xi.U - x.P is a rotated position operator
(exp(i th n) U exp(-i th n) scaled by |X|), so a single eigendecomposition of
U per cutoff serves every translation; exponentials are computed at an
enlarged internal cutoff and cropped, which keeps the retained block accurate
for displacements up to the internal cutoff's phase-space radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .phase import PhasePoint, sq_norm, symplectic_form


class BasisMismatchError(ValueError):
    """Operands built over different Fock bases were combined."""


@dataclass(frozen=True)
class FockBasisSpec:
    """Truncated Fock basis: n modes, cutoff N per mode, dimension N^n.

    Multi-indices (k_1..k_n) are enumerated row-major (last index fastest),
    matching numpy's kron ordering.
    """

    n: int
    cutoff: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("n must be 1 or 2")
        if self.cutoff < 2:
            raise ValueError("cutoff must be at least 2")

    @property
    def dim(self) -> int:
        return self.cutoff ** self.n

    @property
    def low_block(self) -> int:
        """Index bound of the truncation-trusted block, k <= N/4 per mode."""
        return self.cutoff // 4

    def multi_indices(self) -> np.ndarray:
        """All multi-indices, shape (dim, n), row-major."""
        grids = np.meshgrid(*[np.arange(self.cutoff)] * self.n, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class FockMatrix:
    basis: FockBasisSpec
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != (self.basis.dim, self.basis.dim):
            raise BasisMismatchError(
                f"matrix shape {self.data.shape} != basis dim {self.basis.dim}"
            )

    def check_same_basis(self, other: "FockMatrix") -> None:
        if self.basis != other.basis:
            raise BasisMismatchError(f"bases differ: {self.basis} vs {other.basis}")


@dataclass(frozen=True)
class CoherentAmplitudes:
    """Truncated Fock coefficients of a coherent state Psi_X."""

    X: PhasePoint
    basis: FockBasisSpec
    coeffs: np.ndarray


def hermite_values(u, N: int) -> np.ndarray:
    """L2-normalized Hermite functions h_0..h_{N-1} at points u.

    Returns shape (len(u), N).  Uses the stable three-term recurrence
    h_{k+1} = sqrt(2/(k+1)) u h_k - sqrt(k/(k+1)) h_{k-1} starting from
    h_0(u) = pi^{-1/4} exp(-u^2/2).
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    H = np.empty((u.size, N))
    H[:, 0] = np.pi ** -0.25 * np.exp(-0.5 * u * u)
    if N > 1:
        H[:, 1] = math.sqrt(2.0) * u * H[:, 0]
    for k in range(1, N - 1):
        H[:, k + 1] = math.sqrt(2.0 / (k + 1)) * u * H[:, k] - math.sqrt(
            k / (k + 1.0)
        ) * H[:, k - 1]
    return H


def _mode_amplitudes(x: float, xi: float, N: int) -> np.ndarray:
    z = (x + 1j * xi) / math.sqrt(2.0)
    k = np.arange(N)
    if z == 0:
        c = np.zeros(N, dtype=complex)
        c[0] = 1.0
        return c
    return np.exp(-(x * x + xi * xi) / 4.0) * z ** k * np.exp(-0.5 * gammaln(k + 1))


def coherent_amplitudes(X: PhasePoint, basis: FockBasisSpec) -> CoherentAmplitudes:
    """Fock coefficients <Psi_X, h_k>, one closed-form factor per mode."""
    if X.n != basis.n:
        raise BasisMismatchError(f"point has n={X.n}, basis n={basis.n}")
    c = _mode_amplitudes(X.x[0], X.xi[0], basis.cutoff)
    for j in range(1, basis.n):
        c = np.kron(c, _mode_amplitudes(X.x[j], X.xi[j], basis.cutoff))
    return CoherentAmplitudes(X, basis, c)


def coherent_amplitudes_many(pts: np.ndarray, basis: FockBasisSpec) -> np.ndarray:
    """Coefficient matrix of shape (dim, P) for points of shape (P, 2n)."""
    pts = np.asarray(pts, dtype=float)
    n, N = basis.n, basis.cutoff
    k = np.arange(N)
    cols = None
    lg = np.exp(-0.5 * gammaln(k + 1))
    for j in range(n):
        x, xi = pts[:, j], pts[:, n + j]
        z = (x + 1j * xi) / math.sqrt(2.0)
        pref = np.exp(-(x * x + xi * xi) / 4.0)
        zk = z[None, :] ** k[:, None]  # 0**0 == 1 covers z = 0
        mode = (pref[None, :] * zk) * lg[:, None]
        cols = mode if cols is None else np.einsum("ap,bp->abp", cols, mode).reshape(
            -1, pts.shape[0]
        )
    return cols


def coherent_overlap(X: PhasePoint, Z: PhasePoint) -> complex:
    """Exact overlap <Psi_X, Psi_Z> = exp(-|X-Z|^2/4 + (i/2) sigma(X,Z))."""
    d = X - Z
    return complex(np.exp(-sq_norm(d) / 4.0 + 0.5j * symplectic_form(X, Z)))


def position_matrix(basis: FockBasisSpec, mode: int = 0) -> FockMatrix:
    """Matrix of the coordinate u_j; tridiagonal with <h_{k+1}|u|h_k> = sqrt((k+1)/2)."""
    return FockMatrix(basis, _lift(_position_1d(basis.cutoff), basis, mode))


def derivative_matrix(basis: FockBasisSpec, mode: int = 0) -> FockMatrix:
    """Matrix of d/du_j; antisymmetric tridiagonal."""
    return FockMatrix(basis, _lift(_derivative_1d(basis.cutoff), basis, mode))


def annihilation_matrix(basis: FockBasisSpec, mode: int = 0) -> FockMatrix:
    """Matrix of u_j + d/du_j, the lowering combination: maps h_k to sqrt(2k) h_{k-1}."""
    a = _position_1d(basis.cutoff) + _derivative_1d(basis.cutoff)
    return FockMatrix(basis, _lift(a, basis, mode))


def _position_1d(N: int) -> np.ndarray:
    U = np.zeros((N, N))
    for k in range(N - 1):
        U[k + 1, k] = U[k, k + 1] = math.sqrt((k + 1) / 2.0)
    return U


def _derivative_1d(N: int) -> np.ndarray:
    D = np.zeros((N, N))
    for k in range(N - 1):
        D[k, k + 1] = math.sqrt((k + 1) / 2.0)
        D[k + 1, k] = -math.sqrt((k + 1) / 2.0)
    return D


def _lift(op1d: np.ndarray, basis: FockBasisSpec, mode: int) -> np.ndarray:
    if not 0 <= mode < basis.n:
        raise ValueError(f"mode {mode} out of range for n={basis.n}")
    if basis.n == 1:
        return op1d.astype(complex)
    N = basis.cutoff
    eye = np.eye(N)
    return (np.kron(op1d, eye) if mode == 0 else np.kron(eye, op1d)).astype(complex)


def field_operator_matrix(Z: PhasePoint, basis: FockBasisSpec) -> FockMatrix:
    """Matrix of sum_j z_j u_j + zeta_j (1/i) d/du_j; Hermitian by construction."""
    if Z.n != basis.n:
        raise BasisMismatchError(f"point has n={Z.n}, basis n={basis.n}")
    M = np.zeros((basis.dim, basis.dim), dtype=complex)
    for j in range(basis.n):
        M += Z.x[j] * _lift(_position_1d(basis.cutoff), basis, j)
        M += Z.xi[j] * (-1j) * _lift(_derivative_1d(basis.cutoff), basis, j)
    return FockMatrix(basis, M)


# ---------------------------------------------------------------------------
# Translations.  One eigendecomposition of the 1-d position matrix per
# internal cutoff serves every translation: the generator of W_{(x,xi)} per
# mode is i*r*exp(i th n) U exp(-i th n) with r = |(x,xi)|, th = atan2(-x, xi).

@lru_cache(maxsize=16)
def _position_eig(total: int) -> tuple[np.ndarray, np.ndarray]:
    lam, Q = np.linalg.eigh(_position_1d(total))
    Q.setflags(write=False)
    lam.setflags(write=False)
    return lam, Q


def internal_cutoff(N: int) -> int:
    """Default enlarged cutoff for translation exponentials."""
    return 2 * N


def _w_matrix_1d(x: float, xi: float, N: int, total: int) -> np.ndarray:
    lam, Q = _position_eig(total)
    r = math.hypot(x, xi)
    if r == 0.0:
        return np.eye(N, dtype=complex)
    th = math.atan2(-x, xi)
    A = Q[:N, :]
    core = (A * np.exp(1j * r * lam)) @ A.T
    ph = np.exp(1j * th * np.arange(N))
    return (ph[:, None] * core) * ph.conj()[None, :]


def weyl_translation_matrix(
    X: PhasePoint, basis: FockBasisSpec, total: int | None = None
) -> FockMatrix:
    """Truncated matrix of the translation (W_X f)(u) = f(u-x) e^{i u.xi - (i/2) x.xi}.

    Computed as the matrix exponential of the skew-Hermitian generator
    i xi.U - x.D at the enlarged internal cutoff ``total`` (default 2N per
    mode), then cropped to the basis.  Column 0 reproduces the coherent
    amplitudes of X and columns are unitary up to truncation.
    """
    if X.n != basis.n:
        raise BasisMismatchError(f"point has n={X.n}, basis n={basis.n}")
    N = basis.cutoff
    total = internal_cutoff(N) if total is None else total
    W = _w_matrix_1d(X.x[0], X.xi[0], N, total)
    for j in range(1, basis.n):
        W = np.kron(W, _w_matrix_1d(X.x[j], X.xi[j], N, total))
    return FockMatrix(basis, W)


def parity_vector(basis: FockBasisSpec) -> np.ndarray:
    """Diagonal of the parity operator, (-1)^{|k|}."""
    return (-1.0) ** basis.multi_indices().sum(axis=1)


def reflection_matrix(
    Z: PhasePoint, basis: FockBasisSpec, total: int | None = None
) -> FockMatrix:
    """Fock matrix of the point reflection about Z.

    Built as translation by 2Z composed with parity, W_{2Z} P, which carries
    no extra phase; the composition is pinned against the closed-form
    coherent brackets in the tests.
    """
    W = weyl_translation_matrix(2.0 * Z, basis, total=total)
    return FockMatrix(basis, W.data * parity_vector(basis)[None, :])


def reflection_bracket(Z: PhasePoint, X: PhasePoint, Y: PhasePoint) -> complex:
    """Closed form <Sigma_Z Psi_X, Psi_Y> = e^{i sigma(X,Z)} <Psi_{2Z-X}, Psi_Y>."""
    return complex(
        np.exp(1j * symplectic_form(X, Z)) * coherent_overlap(2.0 * Z - X, Y)
    )


def expm_hermitian(M: FockMatrix, scale: complex = 1.0) -> FockMatrix:
    """exp(scale * M) for Hermitian M via eigendecomposition."""
    w, V = np.linalg.eigh(M.data)
    return FockMatrix(M.basis, (V * np.exp(scale * w)) @ V.conj().T)
