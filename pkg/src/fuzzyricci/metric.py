"""Metrics: strictly positive Hermitian matrices, constructors and file IO.

A metric carries its eigendecomposition, computed once at construction;
the flow and the diagnostics reuse it for every spectral quantity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import matcore
from .matcore import EigDecomp, HermiticityError, PositivityError, hermitian_part


@dataclass(frozen=True)
class Metric:
    """Strictly positive Hermitian matrix with cached eigendecomposition."""

    mat: np.ndarray
    eig: EigDecomp

    @classmethod
    def from_matrix(cls, a, what: str = "metric") -> "Metric":
        """Validate Hermiticity, re-Hermitize, and validate strict positivity."""
        h = matcore.require_hermitian(a)
        return cls.from_eig(h, matcore.eigh(h), what=what)

    @classmethod
    def from_eig(cls, mat: np.ndarray, eig: EigDecomp, what: str = "metric") -> "Metric":
        floor = matcore.POS_FLOOR * max(1.0, eig.lam_max)
        if eig.lam_min <= floor:
            raise PositivityError(
                f"{what} violates strict positivity: lam_min {eig.lam_min:.3e} "
                f"is below the floor {floor:.3e}",
                eig.lam_min,
            )
        mat = mat.copy()
        mat.setflags(write=False)
        return cls(mat, eig)

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    @property
    def lam_min(self) -> float:
        return self.eig.lam_min

    @property
    def lam_max(self) -> float:
        return self.eig.lam_max

    @property
    def flat_level(self) -> float:
        """trace / n, the level of the flat metric with the same trace."""
        return self.trace / self.n

    @cached_property
    def log_mat(self) -> np.ndarray:
        return matcore.mat_log(self.mat, eig=self.eig)

    @cached_property
    def log_det(self) -> float:
        return matcore.log_det(self.mat, eig=self.eig)

    def dist_flat(self, level: float | None = None) -> float:
        """Squared Hilbert-Schmidt distance to level * identity (default: own level)."""
        lev = self.flat_level if level is None else level
        return float(np.sum((self.eig.eigenvalues - lev) ** 2))


def flat(n: int, alpha: float) -> Metric:
    """alpha times the identity; the fixed point of the flow at its trace."""
    if alpha <= 0:
        raise ValueError(f"flat level must be positive, got {alpha}")
    lam = np.full(n, float(alpha))
    return Metric.from_eig(
        np.eye(n, dtype=np.complex128) * alpha,
        EigDecomp(lam, np.eye(n, dtype=np.complex128)),
    )


def cigar(torus, mass: float) -> Metric:
    """Inverse of (mass + x^2 + y^2); strictly positive for any mass > 0."""
    if mass <= 0:
        raise ValueError(f"cigar mass must be positive, got {mass}")
    n = torus.n
    core = hermitian_part(mass * np.eye(n) + torus.x @ torus.x + torus.y @ torus.y)
    return Metric.from_matrix(matcore.mat_inv(core))


def random_metric(n: int, spread: float, seed: int) -> Metric:
    """exp of a Gaussian Hermitian matrix; spread controls the condition number.

    The generator draws a full complex Gaussian with entrywise standard
    deviation `spread` and keeps its Hermitian part, so the diagonal is real
    Gaussian and off-diagonal entries are symmetrized complex Gaussians.
    Deterministic in the seed.
    """
    if spread < 0:
        raise ValueError(f"spread must be nonnegative, got {spread}")
    rng = np.random.default_rng(seed)
    g = rng.normal(0.0, spread, size=(n, n)) + 1j * rng.normal(0.0, spread, size=(n, n))
    h = hermitian_part(g)
    return Metric.from_matrix(matcore.mat_exp(h))


def diag_ladder(n: int) -> Metric:
    """diag(1, 2, ..., n), a simple anisotropic test metric."""
    lam = np.arange(1.0, n + 1.0)
    return Metric.from_eig(
        np.diag(lam).astype(np.complex128),
        EigDecomp(lam, np.eye(n, dtype=np.complex128)),
    )


def normalize_density(metric: Metric) -> tuple[Metric, float]:
    """Rescale to unit trace. Returns (density, kappa) with density = kappa * metric.

    Flowing the density is the original flow with time rescaled by kappa.
    """
    kappa = 1.0 / metric.trace
    rho = Metric.from_eig(
        metric.mat * kappa,
        EigDecomp(metric.eig.eigenvalues * kappa, metric.eig.eigenvectors),
    )
    return rho, kappa


# --- file format -----------------------------------------------------------
#
# A matrix file is a JSON object {"n": int, "entries": [[re, im], ...]} with
# n^2 row-major pairs. The writer renders floats at 17 significant digits,
# which round-trips float64 exactly.


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def matrix_to_jsonable(a: np.ndarray) -> dict:
    return {
        "n": int(a.shape[0]),
        "entries": [[float(z.real), float(z.imag)] for z in a.reshape(-1)],
    }


def matrix_json_text(a: np.ndarray) -> str:
    entries = ",\n    ".join(
        f"[{_fmt(z.real)}, {_fmt(z.imag)}]" for z in a.reshape(-1)
    )
    return '{\n  "n": %d,\n  "entries": [\n    %s\n  ]\n}\n' % (a.shape[0], entries)


def matrix_from_jsonable(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "n" not in obj or "entries" not in obj:
        raise ValueError('matrix JSON must be an object with keys "n" and "entries"')
    n = obj["n"]
    if not isinstance(n, int) or n < 1:
        raise ValueError(f'"n" must be a positive integer, got {n!r}')
    entries = obj["entries"]
    if len(entries) != n * n:
        raise ValueError(f'"entries" must hold {n * n} pairs, got {len(entries)}')
    flat_entries = np.asarray(entries, dtype=float)
    if flat_entries.shape != (n * n, 2):
        raise ValueError('"entries" must be [re, im] pairs')
    return (flat_entries[:, 0] + 1j * flat_entries[:, 1]).reshape(n, n)


def write_metric(metric: Metric, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(matrix_json_text(metric.mat))


def read_metric(path) -> Metric:
    """Read and validate a metric file.

    Rejects matrices that fail Hermiticity or strict positivity, naming the
    violated invariant in the error.
    """
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return Metric.from_matrix(matrix_from_jsonable(obj), what=f"metric file {path}")


def read_hermitian(path) -> np.ndarray:
    """Read a Hermitian matrix file (no positivity requirement)."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        return matcore.require_hermitian(matrix_from_jsonable(obj))
    except HermiticityError as exc:
        raise HermiticityError(f"{path}: {exc}") from exc
