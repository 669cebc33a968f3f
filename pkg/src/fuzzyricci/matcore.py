"""Dense complex matrix algebra and Hermitian functional calculus.

Everything operates on square numpy arrays of complex128. Matrices are
plain ndarrays; the only structured value is :class:`EigDecomp`, the cached
eigendecomposition used by the functional calculus. All functions are pure.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

# Validation and tolerance constants. These are deliberate, fixed choices:
# loosening them hides bugs, tightening them trips over float64 roundoff.
HERM_TOL = 1e-10     # relative entrywise Hermiticity budget for inputs
EIG_TOL = 1e-12      # relative residual budget for eigendecompositions
POS_FLOOR = 1e-13    # relative floor under which log/inverse are refused
DK_TOL = 1e-8        # relative switch to the equal-eigenvalue branch of
                     # the divided-difference kernel
FN_TOL = 1e-10       # default functional-calculus tolerance used in checks


class MatrixShapeError(ValueError):
    """Operands are not square matrices of matching dimension."""


class HermiticityError(ValueError):
    """Input fails the Hermiticity validation budget."""


class PositivityError(ValueError):
    """Matrix logarithm / inverse requested outside the strictly positive cone."""

    def __init__(self, message: str, lam_min: float):
        super().__init__(message)
        self.lam_min = lam_min


class EigenSolverError(RuntimeError):
    """Eigendecomposition failed or produced an unacceptable residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def as_matrix(a) -> np.ndarray:
    """Coerce to a square complex128 array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise MatrixShapeError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise MatrixShapeError(f"dimension mismatch: {a.shape} vs {b.shape}")


def mul(a, b) -> np.ndarray:
    """Matrix product with a dimension check."""
    a, b = as_matrix(a), as_matrix(b)
    _check_same_dim(a, b)
    return a @ b


def adjoint(a) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(a).conj().T


def trace(a) -> complex:
    """Sum of the diagonal."""
    return complex(np.trace(as_matrix(a)))


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product trace(a* b)."""
    a, b = as_matrix(a), as_matrix(b)
    _check_same_dim(a, b)
    return complex(np.sum(a.conj() * b))


def hs_norm(a) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(np.asarray(a)))


def hermitian_part(a) -> np.ndarray:
    """(a + a*) / 2."""
    a = as_matrix(a)
    return (a + a.conj().T) / 2


def herm_defect(a) -> float:
    """Largest entrywise deviation from Hermiticity, relative to max |entry|."""
    a = as_matrix(a)
    dev = float(np.max(np.abs(a - a.conj().T)))
    return dev / max(1.0, float(np.max(np.abs(a))))


def require_hermitian(a, tol: float = HERM_TOL) -> np.ndarray:
    """Validate Hermiticity within `tol` and return the re-Hermitized matrix."""
    a = as_matrix(a)
    defect = herm_defect(a)
    if defect > tol:
        raise HermiticityError(
            f"matrix is not Hermitian: relative defect {defect:.3e} exceeds {tol:.1e}"
        )
    return hermitian_part(a)


class EigDecomp(NamedTuple):
    """Eigendecomposition of a Hermitian matrix.

    eigenvalues are real and ascending; eigenvector columns form a unitary
    matrix, so a = U diag(lam) U*.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def lam_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lam_max(self) -> float:
        return float(self.eigenvalues[-1])


def eigh(a) -> EigDecomp:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input is re-Hermitized before factorization; callers are expected to
    have validated Hermiticity where that matters. Raises EigenSolverError
    if the solver fails or the reconstruction residual exceeds the budget.
    """
    h = hermitian_part(a)
    try:
        lam, vec = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigendecomposition failed: {exc}", float("inf")) from exc
    scale = max(float(np.linalg.norm(h)), 1e-300)
    residual = float(np.linalg.norm((vec * lam) @ vec.conj().T - h)) / scale
    if residual > EIG_TOL * 100:
        # 100x headroom: the residual bound is checked exactly in tests,
        # this guard only catches a genuinely broken factorization.
        raise EigenSolverError(
            f"eigendecomposition residual {residual:.3e} out of budget", residual
        )
    return EigDecomp(lam, vec)


def mat_fn(a, f: Callable[[np.ndarray], np.ndarray], eig: EigDecomp | None = None,
           hermitize: bool = False) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    `f` maps the (real, ascending) eigenvalue array to new diagonal values;
    complex-valued f is allowed, in which case the result is normal rather
    than Hermitian and `hermitize` must stay False.
    """
    if eig is None:
        eig = eigh(a)
    lam, vec = eig
    out = (vec * f(lam)) @ vec.conj().T
    return hermitian_part(out) if hermitize else out


def _require_positive(eig: EigDecomp, what: str) -> None:
    floor = POS_FLOOR * max(1.0, eig.lam_max)
    if eig.lam_min <= floor:
        raise PositivityError(
            f"{what} requires a strictly positive matrix: "
            f"lam_min {eig.lam_min:.3e} is below the floor {floor:.3e}",
            eig.lam_min,
        )


def mat_exp(a, eig: EigDecomp | None = None) -> np.ndarray:
    """exp of a Hermitian matrix."""
    return mat_fn(a, np.exp, eig=eig, hermitize=True)


def mat_log(a, eig: EigDecomp | None = None) -> np.ndarray:
    """log of a strictly positive Hermitian matrix."""
    if eig is None:
        eig = eigh(a)
    _require_positive(eig, "mat_log")
    return mat_fn(a, np.log, eig=eig, hermitize=True)


def mat_inv(a, eig: EigDecomp | None = None) -> np.ndarray:
    """Inverse of a strictly positive Hermitian matrix."""
    if eig is None:
        eig = eigh(a)
    _require_positive(eig, "mat_inv")
    return mat_fn(a, lambda lam: 1.0 / lam, eig=eig, hermitize=True)


def log_det(a, eig: EigDecomp | None = None) -> float:
    """log(det a) for strictly positive a, computed as the sum of log eigenvalues.

    The determinant itself is never formed; this stays finite where det a
    would overflow or underflow.
    """
    if eig is None:
        eig = eigh(a)
    _require_positive(eig, "log_det")
    return float(np.sum(np.log(eig.eigenvalues)))


def frechet_log(c, h, eig: EigDecomp | None = None) -> np.ndarray:
    """Directional derivative of the matrix log at c along h.

    In the eigenbasis of c the derivative acts entrywise through the
    divided-difference kernel of log:

        phi(li, lj) = (log li - log lj) / (li - lj),

    replaced by 2 / (li + lj) when li and lj coincide to relative
    precision DK_TOL. The result is Hermitian whenever h is.
    """
    if eig is None:
        eig = eigh(c)
    _require_positive(eig, "frechet_log")
    h = as_matrix(h)
    _check_same_dim(np.asarray(c), h)
    lam, vec = eig
    li = lam[:, None]
    lj = lam[None, :]
    diff = li - lj
    mean_scale = li + lj
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(
            np.abs(diff) > DK_TOL * mean_scale,
            (np.log(li) - np.log(lj)) / diff,
            2.0 / mean_scale,
        )
    h_tilde = vec.conj().T @ h @ vec
    return vec @ (h_tilde * phi) @ vec.conj().T
