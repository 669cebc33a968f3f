"""Fuzzy torus geometry: clock/shift generators, derivations and Laplacian.

The algebra is M_n with unitary generators satisfying shift @ clock =
q * clock @ shift for the primitive root q = exp(2 pi i m / n). Coordinate
matrices x, y exponentiate to the generators, and the two derivations are
the commutators d1 = [y, .] and d2 = -[x, .]. Their squares sum to the
Laplacian, a positive operator on M_n whose kernel is exactly the scalars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matcore
from .matcore import FN_TOL, as_matrix, hermitian_part, hs_norm

X_CHOICES = ("standard", "mod-n", "custom")


class TorusParameterError(ValueError):
    """Invalid (n, m) pair or coordinate choice."""


@dataclass(frozen=True)
class TorusParams:
    """Construction parameters: dimension n >= 2, twist m coprime to n."""

    n: int
    m: int
    x_choice: str = "standard"
    custom_x: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 2:
            raise TorusParameterError(f"n must be >= 2, got {self.n}")
        if not 1 <= self.m <= self.n - 1:
            raise TorusParameterError(f"m must lie in 1..{self.n - 1}, got {self.m}")
        if math.gcd(self.m, self.n) != 1:
            raise TorusParameterError(
                f"m and n must be coprime, got gcd({self.m}, {self.n}) = "
                f"{math.gcd(self.m, self.n)}"
            )
        choice = self.x_choice.replace("_", "-")
        if choice not in X_CHOICES:
            raise TorusParameterError(
                f"x_choice must be one of {X_CHOICES}, got {self.x_choice!r}"
            )
        object.__setattr__(self, "x_choice", choice)
        if (choice == "custom") != (self.custom_x is not None):
            raise TorusParameterError("custom_x must be given exactly when x_choice='custom'")

    @property
    def q(self) -> complex:
        return complex(np.exp(2j * np.pi * self.m / self.n))


@dataclass(frozen=True)
class FuzzyTorus:
    """Immutable geometry context; arrays are frozen read-only at build time."""

    params: TorusParams
    clock: np.ndarray        # diagonal of powers of q
    shift: np.ndarray        # cyclic shift
    fourier: np.ndarray      # F_jk = q^(-jk) / sqrt(n)
    x: np.ndarray            # Hermitian, exp(2 pi i x / n) = clock
    y: np.ndarray            # Hermitian, exp(2 pi i y / n) = shift; y = F* x F

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def q(self) -> complex:
        return self.params.q


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def build_torus(params, m: int | None = None, x_choice: str = "standard",
                custom_x: np.ndarray | None = None) -> FuzzyTorus:
    """Construct the torus for given parameters.

    Accepts either a TorusParams or the pair (n, m) plus options. Validates
    the full generator algebra: unitarity, the q-commutation relation, the
    Fourier conjugacy of the generators, and that the coordinate matrices
    exponentiate onto them.
    """
    if not isinstance(params, TorusParams):
        params = TorusParams(int(params), int(m), x_choice, custom_x)
    n, q = params.n, params.q

    j = np.arange(n)
    clock = np.diag(q ** j).astype(np.complex128)
    shift = np.zeros((n, n), dtype=np.complex128)
    shift[j[:-1], j[:-1] + 1] = 1.0
    shift[n - 1, 0] = 1.0
    fourier = (q ** (-np.outer(j, j))) / math.sqrt(n)

    if params.x_choice == "standard":
        xdiag = (j * params.m).astype(float)
    elif params.x_choice == "mod-n":
        xdiag = ((j * params.m) % n).astype(float)
    else:
        xdiag = None
    if xdiag is not None:
        x = np.diag(xdiag).astype(np.complex128)
    else:
        x = matcore.require_hermitian(params.custom_x)
        if x.shape != (n, n):
            raise TorusParameterError(f"custom x has shape {x.shape}, expected {(n, n)}")
    y = hermitian_part(fourier.conj().T @ x @ fourier)

    torus = FuzzyTorus(
        params=params,
        clock=_freeze(clock),
        shift=_freeze(shift),
        fourier=_freeze(fourier),
        x=_freeze(x),
        y=_freeze(y),
    )
    _validate(torus)
    return torus


def _validate(t: FuzzyTorus) -> None:
    n, q = t.n, t.q
    eye = np.eye(n)
    checks = {
        "clock unitarity": hs_norm(t.clock @ t.clock.conj().T - eye),
        "shift unitarity": hs_norm(t.shift @ t.shift.conj().T - eye),
        "fourier unitarity": hs_norm(t.fourier @ t.fourier.conj().T - eye),
        "q-commutation": hs_norm(t.shift @ t.clock - q * (t.clock @ t.shift)),
        "clock^n = 1": hs_norm(np.linalg.matrix_power(t.clock, n) - eye),
        "shift^n = 1": hs_norm(np.linalg.matrix_power(t.shift, n) - eye),
        "fourier conjugacy": hs_norm(t.fourier.conj().T @ t.clock @ t.fourier - t.shift),
    }
    scale = 2j * np.pi / n
    checks["exp(x) = clock"] = hs_norm(
        matcore.mat_fn(t.x, lambda lam: np.exp(scale * lam)) - t.clock
    )
    checks["exp(y) = shift"] = hs_norm(
        matcore.mat_fn(t.y, lambda lam: np.exp(scale * lam)) - t.shift
    )
    # exp checks go through an eigendecomposition, so give them headroom
    # proportional to the coordinate norm; the algebraic checks are exact.
    for name, resid in checks.items():
        budget = FN_TOL * max(1.0, hs_norm(t.x)) if name.startswith("exp") else FN_TOL
        if resid > budget:
            raise TorusParameterError(
                f"torus validation failed: {name} residual {resid:.3e} exceeds {budget:.1e}"
            )


def delta1(t: FuzzyTorus, a) -> np.ndarray:
    """First derivation: commutator with y."""
    a = as_matrix(a)
    if a.shape != t.x.shape:
        raise matcore.MatrixShapeError(f"dimension mismatch: {a.shape} vs {t.x.shape}")
    return t.y @ a - a @ t.y


def delta2(t: FuzzyTorus, a) -> np.ndarray:
    """Second derivation: negated commutator with x."""
    a = as_matrix(a)
    if a.shape != t.x.shape:
        raise matcore.MatrixShapeError(f"dimension mismatch: {a.shape} vs {t.x.shape}")
    return a @ t.x - t.x @ a


def laplacian(t: FuzzyTorus, a) -> np.ndarray:
    """delta1^2 + delta2^2. Maps Hermitian to Hermitian."""
    return delta1(t, delta1(t, a)) + delta2(t, delta2(t, a))


def laplacian_superop(t: FuzzyTorus) -> np.ndarray:
    """The Laplacian as a dense n^2 x n^2 matrix on row-major vec(a).

    Hermitian and positive semidefinite with a one-dimensional kernel
    spanned by vec(identity). Row-major vectorization means
    superop @ a.reshape(-1) == laplacian(t, a).reshape(-1).
    """
    n = t.n
    eye = np.eye(n)
    s1 = np.kron(t.y, eye) - np.kron(eye, t.y.T)
    s2 = np.kron(eye, t.x.T) - np.kron(t.x, eye)
    return hermitian_part(s1 @ s1 + s2 @ s2)


def laplacian_spectrum(t: FuzzyTorus) -> np.ndarray:
    """Ascending eigenvalues of the Laplacian superoperator."""
    return np.linalg.eigvalsh(laplacian_superop(t))


def spectral_gap(t: FuzzyTorus) -> float:
    """Smallest nonzero Laplacian eigenvalue (the second one: the kernel is 1-dim)."""
    return float(laplacian_spectrum(t)[1])
