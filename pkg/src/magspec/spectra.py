"""Dense window restrictions and eigenvalue counting.

Two counting backends share one contract: full diagonalization for
moderate windows, and LDL-inertia counting (Sylvester's law under the
Bunch-Kaufman factorization) for large ones.  When the counting point
essentially hits an eigenvalue the inertia backend brackets it with a
small shift and returns the upper count, matching the right-continuity of
the eigenvalue counting function.

Jumps and kernel dimensions are floating-point notions here, so both are
defined through clusters with a validated gap: the caller gets an error
("unresolved cluster") instead of a silently wrong multiplicity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exhaustion import InteriorSplit, Window
from .operators import LocalOperator, WeightFunction

MAX_DENSE_DIM = 5000
INERTIA_DIM_THRESHOLD = 2000
SHIFT_SCALE = 1e-10       # bracketing shift, relative to the norm bound
ZERO_PIVOT_SCALE = 5e-14  # relative block-eigenvalue size treated as singular


class WindowTooLargeError(ValueError):
    """Window whose dense matrix would exceed the supported dimension."""


class UnresolvedClusterError(RuntimeError):
    """Eigenvalue or singular-value cluster without the required gap."""


def _check_dim(n: int) -> None:
    if n > MAX_DENSE_DIM:
        raise WindowTooLargeError(
            f"dense restriction of dimension {n} exceeds the cap {MAX_DENSE_DIM}; "
            "choose a smaller window"
        )


def assemble_dirichlet(op: LocalOperator, window: Window) -> np.ndarray:
    """Compression of the operator to functions supported on the window:
    entry (u, v) = <A delta_v, delta_u> for window vertices u, v, read off
    the stencil exactly.  Hermitian by construction (asserted)."""
    n = len(window.verts)
    _check_dim(n)
    M = np.zeros((n, n), dtype=complex)
    for j, v in enumerate(window.verts):
        for u, c in op.column(v).items():
            i = window.index.get(u)
            if i is not None:
                M[i, j] += c
    _assert_hermitian(M)
    return M


def assemble_neumann(
    graph, weights: WeightFunction, window: Window
) -> np.ndarray:
    """Magnetic Laplacian of the induced finite subgraph: diagonal counts
    the valence inside the window, off-diagonal entries are the negated
    sigma phases of inner edges.  Only defined for Laplacian-type
    operators, which is why this takes the graph and weights directly."""
    n = len(window.verts)
    _check_dim(n)
    M = np.zeros((n, n), dtype=complex)
    for e in window.inner_edges():
        i = window.index[e.origin]
        j = window.index[e.terminus]
        p = weights.positive_phase(e.template, e.origin.shift)
        # (Delta f)(t) picks up -sigma(e) f(o) and (Delta f)(o) the conjugate
        M[j, i] -= p
        M[i, j] -= p.conjugate()
        M[i, i] += 1.0
        M[j, j] += 1.0
    _assert_hermitian(M)
    return M


def _assert_hermitian(M: np.ndarray, tol: float = 1e-12) -> None:
    if M.size == 0:
        return
    scale = max(1.0, float(np.abs(M).max()))
    resid = float(np.abs(M - M.conj().T).max())
    if resid > tol * scale:
        raise AssertionError(f"restriction matrix is not Hermitian: residual {resid:.3e}")


def gershgorin_bound(M: np.ndarray) -> float:
    """Row-sum bound on the spectral radius; cheap and rigorous."""
    if M.size == 0:
        return 0.0
    return float(np.abs(M).sum(axis=1).max())


def count_leq(M: np.ndarray, lam: float, method: str = "auto") -> int:
    """Number of eigenvalues <= lam, counting multiplicity.

    method 'eigh' diagonalizes; 'inertia' factors M - lam I and counts
    negative inertia plus nullity, bracketing exact singularities; 'auto'
    picks by dimension (inertia above 2000).
    """
    if method == "auto":
        method = "inertia" if M.shape[0] > INERTIA_DIM_THRESHOLD else "eigh"
    if method == "eigh":
        if M.shape[0] == 0:
            return 0
        evals = np.linalg.eigvalsh(M)
        return int(np.count_nonzero(evals <= lam))
    if method == "inertia":
        return inertia_count_leq(M, lam)
    raise ValueError(f"unknown counting method {method!r}")


def _block_eigenvalues(d: np.ndarray) -> np.ndarray:
    """Eigenvalues of the block-diagonal factor of an LDL^* factorization
    (1x1 and 2x2 Hermitian blocks)."""
    n = d.shape[0]
    out = np.empty(n, dtype=float)
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0:
            a = d[i, i].real
            c = d[i + 1, i + 1].real
            b = d[i + 1, i]
            half = 0.5 * (a + c)
            disc = np.hypot(0.5 * (a - c), abs(b))
            out[i] = half - disc
            out[i + 1] = half + disc
            i += 2
        else:
            out[i] = d[i, i].real
            i += 1
    return out


def _inertia(M: np.ndarray, lam: float, zero_tol: float) -> tuple[int, int, int]:
    B = M - lam * np.eye(M.shape[0], dtype=complex)
    _, d, _ = scipy.linalg.ldl(B, hermitian=True)
    eigs = _block_eigenvalues(d)
    neg = int(np.count_nonzero(eigs < -zero_tol))
    zero = int(np.count_nonzero(np.abs(eigs) <= zero_tol))
    return neg, zero, M.shape[0] - neg - zero


def inertia_bracket(M: np.ndarray, lam: float) -> tuple[int, int]:
    """Counts at lam -/+ the bracketing shift (1e-10 of the norm bound).
    The two agree except when lam sits essentially on an eigenvalue."""
    norm = gershgorin_bound(M)
    eps = max(SHIFT_SCALE * norm, 1e-14)
    zero_tol = ZERO_PIVOT_SCALE * max(norm, 1e-300)
    lo_neg, lo_zero, _ = _inertia(M, lam - eps, zero_tol)
    hi_neg, hi_zero, _ = _inertia(M, lam + eps, zero_tol)
    if lo_zero or hi_zero:
        raise UnresolvedClusterError(
            f"factorization breakdown persists at {lam} +- {eps:.3e}"
        )
    return lo_neg, hi_neg + hi_zero


def inertia_count_leq(M: np.ndarray, lam: float) -> int:
    if M.shape[0] == 0:
        return 0
    norm = gershgorin_bound(M)
    zero_tol = ZERO_PIVOT_SCALE * max(norm, 1e-300)
    neg, zero, _ = _inertia(M, lam, zero_tol)
    if zero == 0:
        return neg
    # lam is numerically an eigenvalue: bracket and take the upper count,
    # which is the right-continuous reading of "eigenvalues <= lam"
    _, hi = inertia_bracket(M, lam)
    return hi


@dataclass(eq=False)
class WindowSpectrum:
    """Sorted spectrum of one window restriction plus the Folner
    normalization; evaluates the normalized counting function and its
    jumps."""

    eigenvalues: np.ndarray
    normalization: int

    def count_leq(self, lam: float) -> int:
        return int(np.searchsorted(self.eigenvalues, lam, side="right"))

    def ids(self, lam: float) -> float:
        """F_m(lam) = #{eigenvalues <= lam} / #Lambda_m."""
        return self.count_leq(lam) / self.normalization

    def jump_count(self, lam: float, tol: float) -> int:
        """Multiplicity of the eigenvalue cluster at lam.  The nearest
        eigenvalue outside [lam - tol, lam + tol] must be more than
        10 tol away, otherwise the cluster is unresolved."""
        if tol <= 0:
            raise ValueError("cluster tolerance must be positive")
        dist = np.abs(self.eigenvalues - lam)
        inside = dist <= tol
        outside = dist[~inside]
        if outside.size and outside.min() <= 10 * tol:
            raise UnresolvedClusterError(
                f"unresolved cluster at {lam}: nearest outside eigenvalue at "
                f"distance {outside.min():.3e} <= 10 tol"
            )
        return int(inside.sum())

    def jump(self, lam: float, tol: float) -> float:
        """D_m(lam) = cluster multiplicity / #Lambda_m."""
        return self.jump_count(lam, tol) / self.normalization


def spectral_density(M: np.ndarray, window: Window) -> WindowSpectrum:
    """Diagonalize once and wrap the sorted spectrum with the window's
    Folner normalization."""
    if M.shape[0] == 0:
        evals = np.zeros(0)
    else:
        evals = np.sort(np.linalg.eigvalsh(M))
    return WindowSpectrum(evals, len(window.elements))


def default_cluster_tol(M: np.ndarray) -> float:
    return 1e-8 * max(gershgorin_bound(M), 1e-4)


def jump_dim(M: np.ndarray, window: Window, lam: float, tol: float) -> float:
    return spectral_density(M, window).jump(lam, tol)


def interior_restriction(
    op: LocalOperator, window: Window, split: InteriorSplit, lam: float
) -> np.ndarray:
    """Matrix of (A' - lam i'): functions on the interior -> functions on
    the window, in window coordinates.

    The interior radius must dominate the operator's propagation bound so
    that no column can leak outside the window; leakage is checked exactly
    during assembly.
    """
    if split.radius < op.propagation:
        raise ValueError(
            f"interior radius {split.radius} is below the propagation bound "
            f"{op.propagation}"
        )
    n = len(window.verts)
    _check_dim(n)
    R = np.zeros((n, len(split.interior)), dtype=complex)
    for j, y in enumerate(split.interior):
        for u, c in op.column(y).items():
            i = window.index.get(u)
            if i is None:
                raise AssertionError(
                    f"finite propagation violated: column at {y} leaks outside the window"
                )
            R[i, j] += c
        R[window.index[y], j] -= lam
    return R


def rect_kernel_dim(R: np.ndarray, tol: float) -> int:
    """Kernel dimension of a rectangular matrix: singular values below
    tol * (largest singular value), with the same cluster-gap validation
    as jumps.  Rank-nullity holds by construction: kernel + rank = #cols."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    cols = R.shape[1]
    if cols == 0:
        return 0
    s = np.linalg.svd(R, compute_uv=False)
    smax = float(s[0]) if s.size else 0.0
    if smax == 0.0:
        return cols
    small = s < tol * smax
    kept = s[~small]
    if kept.size and kept.min() <= 10 * tol * smax:
        raise UnresolvedClusterError(
            f"unresolved singular-value cluster: smallest kept value "
            f"{kept.min():.3e} <= 10 tol smax"
        )
    return int(small.sum())


def projection_window_dim(
    P: np.ndarray, outer: Window, inner: Window, tol: float = 1e-10
) -> float:
    """Window-normalized dimension of a subspace given by its orthogonal
    projection matrix over the (possibly padded) outer window:
    (1/#Lambda) sum over inner-window vertices of the projection diagonal.
    """
    n = P.shape[0]
    if P.shape != (n, n) or n != len(outer.verts):
        raise ValueError("projection must be square over the outer window")
    scale = max(1.0, float(np.abs(P).max()) if P.size else 1.0)
    if float(np.abs(P - P.conj().T).max()) > tol * scale:
        raise ValueError("input fails the projection test: not self-adjoint")
    if float(np.abs(P @ P - P).max()) > tol * scale:
        raise ValueError("input fails the projection test: not idempotent")
    idx = [outer.index[v] for v in inner.verts]
    diag = np.real(np.diag(P)[idx])
    return float(diag.sum() / len(inner.elements))
