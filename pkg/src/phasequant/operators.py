"""Operator representations and the central quantity <A Psi_X, Psi_Y>.

Three interchangeable providers expose ``bracket(X, Y) -> complex``:

* ``WeylSymbolOperator``: A = Op^W(F) for a closed-form symbol F, evaluated
  through the reflection-operator average
  <A Psi_X, Psi_Y> = pi^{-n} int F(Z) <Sigma_Z Psi_X, Psi_Y> dZ.
  The reflection bracket has modulus exp(-|Z - (X+Y)/2|^2), so the rule is
  recentered at (X+Y)/2 and only a bounded phase remains in the integrand.
* ``AWSymbolOperator``: A = Op^AW(G), evaluated through the coherent-state
  average with Gaussian factor exp(-|Z - (X+Y)/2|^2/2) (scale sqrt(2)).
* ``MatrixOperator``: a dense matrix in the truncated Fock basis, contracted
  against closed-form coherent amplitudes.

``quantize_weyl`` and ``quantize_aw`` convert symbols to matrices;
``kernel_oracle`` computes Weyl matrix elements from the integral kernel by
brute-force quadrature and is the independent cross-check used in tests.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

from .fock import (
    BasisMismatchError,
    FockBasisSpec,
    FockMatrix,
    coherent_amplitudes_many,
    coherent_overlap,
    hermite_values,
    parity_vector,
    _position_eig,
    _w_matrix_1d,
    weyl_translation_matrix,
)
from .phase import PhasePoint, sigma_arr, sq_norm_arr
from .quadrature import BoxRule, GaussHermiteRule, default_nodes_per_axis
from .symbols import SymbolExpr, evaluate_many


class OracleUnavailableError(ValueError):
    """The kernel oracle does not cover this symbol class."""


@runtime_checkable
class BracketProvider(Protocol):
    n: int
    provenance: str

    def bracket(self, X: PhasePoint, Y: PhasePoint) -> complex: ...

    def bracket_many(self, Xs: np.ndarray, Ys: np.ndarray) -> np.ndarray: ...


def _as_vecs(Xs) -> np.ndarray:
    arr = np.asarray(Xs, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


def overlap_many(Xs: np.ndarray, Ys: np.ndarray) -> np.ndarray:
    d2 = sq_norm_arr(Xs - Ys)
    return np.exp(-0.25 * d2 + 0.5j * sigma_arr(Xs, Ys))


class _PhaseCache:
    """Tiny FIFO cache for pair-offset phase matrices."""

    def __init__(self, maxsize: int = 4):
        self.maxsize = maxsize
        self._store: dict[bytes, np.ndarray] = {}

    def get(self, key: bytes):
        return self._store.get(key)

    def put(self, key: bytes, value: np.ndarray):
        if len(self._store) >= self.maxsize:
            self._store.pop(next(iter(self._store)))
        self._store[key] = value


@dataclass
class WeylSymbolOperator:
    """A = Op^W(F) for a parsed symbol F."""

    symbol: SymbolExpr
    m: int | None = None
    provenance: str = field(default="weyl-symbol", init=False)
    _cache: _PhaseCache = field(default_factory=_PhaseCache, repr=False)

    @property
    def n(self) -> int:
        return self.symbol.n

    def _m(self) -> int:
        return self.m if self.m is not None else default_nodes_per_axis(self.n)

    def bracket(self, X: PhasePoint, Y: PhasePoint) -> complex:
        return complex(self.bracket_many(X.vec[None, :], Y.vec[None, :])[0])

    def bracket_many(self, Xs, Ys) -> np.ndarray:
        Xs, Ys = _as_vecs(Xs), _as_vecs(Ys)
        centers = 0.5 * (Xs + Ys)
        if np.allclose(centers, centers[0], atol=1e-12):
            return self._bracket_common_center(centers[0], 0.5 * (Xs - Ys))
        return np.array(
            [
                self._bracket_common_center(c, d[None, :])[0]
                for c, d in zip(centers, 0.5 * (Xs - Ys))
            ]
        )

    def _bracket_common_center(self, c: np.ndarray, D: np.ndarray) -> np.ndarray:
        """Brackets of the pairs (c+D_p, c-D_p)."""
        rule = GaussHermiteRule.build(2 * self.n, self._m(), center=c, scale=1.0)
        offs = rule.nodes - c[None, :]
        key = D.tobytes() + offs.tobytes()
        Phi = self._cache.get(key)
        if Phi is None:
            # reflection bracket with its Gaussian divided into the rule:
            # remaining phase exp(i [2 sigma(D_p, W_i) + sigma(D_p, c)])
            Phi = np.exp(2j * sigma_arr(D[:, None, :], offs[None, :, :]))
            self._cache.put(key, Phi)
        f = rule.weights * evaluate_many(self.symbol, rule.nodes)
        vals = Phi @ f
        return np.pi ** (-self.n) * np.exp(1j * sigma_arr(D, c[None, :])) * vals


@dataclass
class AWSymbolOperator:
    """A = Op^AW(G) for a parsed symbol G."""

    symbol: SymbolExpr
    m: int | None = None
    provenance: str = field(default="aw-symbol", init=False)
    _cache: _PhaseCache = field(default_factory=_PhaseCache, repr=False)

    @property
    def n(self) -> int:
        return self.symbol.n

    def _m(self) -> int:
        return self.m if self.m is not None else default_nodes_per_axis(self.n)

    def bracket(self, X: PhasePoint, Y: PhasePoint) -> complex:
        return complex(self.bracket_many(X.vec[None, :], Y.vec[None, :])[0])

    def bracket_many(self, Xs, Ys) -> np.ndarray:
        Xs, Ys = _as_vecs(Xs), _as_vecs(Ys)
        centers = 0.5 * (Xs + Ys)
        if np.allclose(centers, centers[0], atol=1e-12):
            return self._bracket_common_center(centers[0], 0.5 * (Xs - Ys))
        return np.array(
            [
                self._bracket_common_center(c, d[None, :])[0]
                for c, d in zip(centers, 0.5 * (Xs - Ys))
            ]
        )

    def _bracket_common_center(self, c: np.ndarray, D: np.ndarray) -> np.ndarray:
        rule = GaussHermiteRule.build(
            2 * self.n, self._m(), center=c, scale=math.sqrt(2.0)
        )
        offs = rule.nodes - c[None, :]
        key = D.tobytes() + offs.tobytes()
        Phi = self._cache.get(key)
        if Phi is None:
            Phi = np.exp(1j * sigma_arr(D[:, None, :], offs[None, :, :]))
            self._cache.put(key, Phi)
        f = rule.weights * evaluate_many(self.symbol, rule.nodes)
        vals = Phi @ f
        pref = np.exp(-0.5 * sq_norm_arr(D) + 1j * sigma_arr(D, c[None, :]))
        return (2.0 * np.pi) ** (-self.n) * pref * vals


@dataclass
class MatrixOperator:
    """Operator given by its dense matrix in the truncated Fock basis."""

    matrix: FockMatrix
    provenance: str = field(default="fock-matrix", init=False)

    @property
    def n(self) -> int:
        return self.matrix.basis.n

    @property
    def basis(self) -> FockBasisSpec:
        return self.matrix.basis

    def bracket(self, X: PhasePoint, Y: PhasePoint) -> complex:
        if X.n != self.n or Y.n != self.n:
            raise BasisMismatchError("point dimension does not match basis")
        return complex(self.bracket_many(X.vec[None, :], Y.vec[None, :])[0])

    def bracket_many(self, Xs, Ys) -> np.ndarray:
        Xs, Ys = _as_vecs(Xs), _as_vecs(Ys)
        trust = math.sqrt(self.basis.cutoff) / 2.0
        r = math.sqrt(max(np.max(sq_norm_arr(Xs)), np.max(sq_norm_arr(Ys))))
        if r > trust:
            warnings.warn(
                f"coherent contraction at |X|={r:.2f} beyond the truncation "
                f"trust radius sqrt(N)/2={trust:.2f}",
                stacklevel=2,
            )
        CX = coherent_amplitudes_many(Xs, self.basis)
        CY = coherent_amplitudes_many(Ys, self.basis)
        return np.einsum("dp,dp->p", CY.conj(), self.matrix.data @ CX)


def matrix_bracket(op: MatrixOperator, X: PhasePoint, Y: PhasePoint) -> complex:
    return op.bracket(X, Y)


def weyl_bracket(
    F: SymbolExpr, X: PhasePoint, Y: PhasePoint, m: int | None = None
) -> complex:
    return WeylSymbolOperator(F, m=m).bracket(X, Y)


def aw_bracket(
    G: SymbolExpr, X: PhasePoint, Y: PhasePoint, m: int | None = None
) -> complex:
    return AWSymbolOperator(G, m=m).bracket(X, Y)


def normalized_bracket(provider: BracketProvider, X: PhasePoint, Y: PhasePoint) -> complex:
    """<A Psi_X, Psi_Y> / <Psi_X, Psi_Y>; the overlap never vanishes."""
    return provider.bracket(X, Y) / coherent_overlap(X, Y)


def normalized_bracket_many(provider, Xs: np.ndarray, Ys: np.ndarray) -> np.ndarray:
    return provider.bracket_many(Xs, Ys) / overlap_many(_as_vecs(Xs), _as_vecs(Ys))


# Spec alias: the holomorphic interpolant of the normalized brackets.
bisymbol_ratio = normalized_bracket


# ---------------------------------------------------------------------------
# Quantization: symbol -> Fock matrix

QUANTIZE_INTERNAL_FACTOR = 4  # translation exponentials run at 4N internally


def _quantize_m(n: int) -> int:
    # 48 nodes/axis resolve the Laguerre-type oscillation of the diagonal
    # reflection matrix elements up to the trusted block at N = 64
    return 48 if n == 1 else 10


def quantize_weyl(
    F: SymbolExpr,
    basis: FockBasisSpec,
    m: int | None = None,
    total: int | None = None,
) -> MatrixOperator:
    """Matrix of Op^W(F): pi^{-n} int F(Z) Sigma_Z dZ by Gauss-Hermite quadrature.

    The Z rule is Gauss-Hermite (scale 1, centered at 0) because the matrix
    elements of Sigma_Z decay like exp(-|Z|^2) times an oscillating
    polynomial factor.  Matrix exponentials run at an internal cutoff of 4N
    so the retained block stays accurate over the rule's full extent.
    """
    n, N = basis.n, basis.cutoff
    if F.n != n:
        raise BasisMismatchError("symbol and basis disagree on n")
    m = _quantize_m(n) if m is None else m
    total = QUANTIZE_INTERNAL_FACTOR * N if total is None else total
    rule = GaussHermiteRule.build(2 * n, m, scale=1.0)
    fvals = evaluate_many(F, rule.nodes) * rule.lebesgue_weights
    par = parity_vector(basis)
    if n == 1:
        M = _weyl_sum_1mode(fvals, rule.nodes, N, total)
    else:
        M = np.zeros((basis.dim, basis.dim), dtype=complex)
        for c, Z in zip(fvals, rule.nodes):
            W = weyl_translation_matrix(
                PhasePoint(2 * Z[:n], 2 * Z[n:]), basis, total=total
            )
            M += c * W.data
    M = (M * par[None, :]) * np.pi ** (-n)
    return MatrixOperator(FockMatrix(basis, M))


def _weyl_sum_1mode(coeffs: np.ndarray, nodes: np.ndarray, N: int, total: int) -> np.ndarray:
    """sum_i coeffs_i W_{2 Z_i} for n = 1, in node chunks."""
    lam, Q = _position_eig(total)
    A = Q[:N, :]
    x, xi = 2 * nodes[:, 0], 2 * nodes[:, 1]
    r = np.hypot(x, xi)
    th = np.arctan2(-x, xi)
    k = np.arange(N)
    M = np.zeros((N, N), dtype=complex)
    chunk = 128
    for i0 in range(0, len(coeffs), chunk):
        sl = slice(i0, min(i0 + chunk, len(coeffs)))
        E = np.exp(1j * np.outer(r[sl], lam))          # (c, total)
        T = E[:, None, :] * A[None, :, :]              # (c, N, total)
        cores = T @ A.T                                # (c, N, N)
        ph = np.exp(1j * np.outer(th[sl], k))          # (c, N)
        W = ph[:, :, None] * cores * ph[:, None, :].conj()
        M += np.tensordot(coeffs[sl], W, axes=(0, 0))
    return M


def quantize_aw(
    G: SymbolExpr,
    basis: FockBasisSpec,
    m: int | None = None,
) -> MatrixOperator:
    """Matrix of Op^AW(G): the coherent-projector average of Eq.-style form.

    M[j,k] = (2 pi)^{-n} int G(Z) c_Z[j] conj(c_Z[k]) dZ with c_Z the
    closed-form coherent amplitudes; convention pinned so that
    matrix_bracket(quantize_aw(G), X, Y) reproduces aw_bracket(G, X, Y).
    Positive G yields a positive semidefinite matrix because the rule's
    weights are positive.
    """
    n, N = basis.n, basis.cutoff
    if G.n != n:
        raise BasisMismatchError("symbol and basis disagree on n")
    if m is None:
        m = 64 if n == 1 else 20
    rule = GaussHermiteRule.build(2 * n, m, scale=math.sqrt(2.0))
    gv = evaluate_many(G, rule.nodes) * rule.lebesgue_weights
    C = coherent_amplitudes_many(rule.nodes, basis)
    M = (2 * np.pi) ** (-n) * ((C * gv[None, :]) @ C.conj().T)
    return MatrixOperator(FockMatrix(basis, M))


def identity_operator(basis: FockBasisSpec) -> MatrixOperator:
    return MatrixOperator(FockMatrix(basis, np.eye(basis.dim, dtype=complex)))


def ground_projector(basis: FockBasisSpec) -> MatrixOperator:
    M = np.zeros((basis.dim, basis.dim), dtype=complex)
    M[0, 0] = 1.0
    return MatrixOperator(FockMatrix(basis, M))


# ---------------------------------------------------------------------------
# Kernel oracle (n = 1 only, test-side cross check)

def kernel_oracle(
    F: SymbolExpr,
    j: int,
    k: int,
    m_xy: int = 80,
    m_xi: int = 160,
    xi_box: float = 12.0,
) -> complex:
    """Weyl matrix element <Op^W(F) h_k, h_j> from the integral kernel.

    Computes K(x, y) = (2 pi)^{-1} int F((x+y)/2, xi) e^{i (x-y) xi} d xi by
    Gauss-Legendre quadrature and contracts with Hermite functions by
    Gauss-Hermite quadrature.  Requires n = 1 and Gaussian decay of F in xi;
    anything slower raises OracleUnavailableError.
    """
    if F.n != 1:
        raise OracleUnavailableError("kernel oracle supports n = 1 only")
    probe_u = np.array([0.0, 0.7, 1.3])
    for u in probe_u:
        pts = np.array([[u, xi_box - 2.0], [u, -(xi_box - 2.0)]])
        if np.max(np.abs(evaluate_many(F, pts))) > 1e-10:
            raise OracleUnavailableError(
                "kernel oracle needs Gaussian decay of F in xi"
            )
    t, w = np.polynomial.legendre.leggauss(m_xi)
    xi = xi_box * t
    wxi = xi_box * w
    xy = GaussHermiteRule.build(2, m_xy, scale=1.0)
    x, y = xy.nodes[:, 0], xy.nodes[:, 1]
    u = 0.5 * (x + y)
    pts = np.stack(
        [np.repeat(u, m_xi), np.tile(xi, u.size)], axis=1
    )
    fv = evaluate_many(F, pts).reshape(u.size, m_xi)
    K = (fv * wxi[None, :] * np.exp(1j * np.outer(x - y, xi))).sum(axis=1) / (
        2 * np.pi
    )
    hj = hermite_values(x, j + 1)[:, j]
    hk = hermite_values(y, k + 1)[:, k]
    return complex(np.sum(xy.lebesgue_weights * hj * hk * K))


# ---------------------------------------------------------------------------
# Serialization

def matrix_to_json_dict(op: MatrixOperator, meta: dict | None = None) -> dict:
    basis = op.basis
    data = [
        [_r17(v.real), _r17(v.imag)]
        for v in op.matrix.data.ravel(order="C")
    ]
    out = {
        "n": basis.n,
        "cutoff": basis.cutoff,
        "ordering": "row-major",
        "data": data,
    }
    if meta is not None:
        out["meta"] = meta
    return out


def matrix_from_json_dict(d: dict) -> MatrixOperator:
    basis = FockBasisSpec(int(d["n"]), int(d["cutoff"]))
    if d.get("ordering", "row-major") != "row-major":
        raise ValueError(f"unsupported ordering {d.get('ordering')!r}")
    raw = np.asarray(d["data"], dtype=float)
    if raw.shape != (basis.dim ** 2, 2):
        raise ValueError(
            f"data has shape {raw.shape}, expected ({basis.dim ** 2}, 2)"
        )
    data = (raw[:, 0] + 1j * raw[:, 1]).reshape(basis.dim, basis.dim)
    return MatrixOperator(FockMatrix(basis, data))


def save_matrix(op: MatrixOperator, path: str, meta: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(matrix_to_json_dict(op, meta), fh, indent=None, separators=(",", ":"))
        fh.write("\n")


def load_matrix(path: str) -> MatrixOperator:
    with open(path) as fh:
        return matrix_from_json_dict(json.load(fh))


def _r17(v: float) -> float:
    """Round-trip through a 17-significant-digit decimal (identity on doubles)."""
    return float(f"{v:.17g}")
