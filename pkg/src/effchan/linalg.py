"""Complex linear-algebra kernel and seeded random sampling.

Everything here operates on plain numpy complex128 arrays: vectors are 1-D,
matrices are 2-D (rows, cols).  Problem sizes are tiny (a handful of antennas),
so the per-call routines favor clarity; the Monte Carlo layers batch where
throughput matters.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# A Gram-Schmidt pivot below this is treated as a rank drop.
RANK_TOL = 1e-12
# Condition-number estimate above this refuses inversion.
COND_LIMIT = 1e8

# Stream purposes (fourth component of a stream id).  Keeping them in one
# registry guarantees distinct draws never share a (seed, trial, user, purpose).
PURPOSE_CHANNEL = 0
PURPOSE_CODEBOOK = 1
PURPOSE_BENCHMARK = 2
PURPOSE_FIXED_CODEBOOK = 3
PURPOSE_PROBE = 4
PURPOSE_VALIDATION = 5


class DegenerateChannelError(ValueError):
    """Matrix is numerically rank deficient where full rank is required."""


class IllConditionedError(ValueError):
    """Square matrix is too ill-conditioned to invert reliably.

    Carries the condition estimate that triggered the refusal so callers can
    log it or count the event (trial-drop accounting).
    """

    def __init__(self, message: str, condition_estimate: float):
        super().__init__(f"{message} (condition estimate {condition_estimate:.3e})")
        self.condition_estimate = float(condition_estimate)


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by (seed, trial, user, purpose).

    Equal ids reproduce identical samples; distinct ids give statistically
    independent streams.  Backed by numpy's Philox counter-based generator
    seeded through SeedSequence, which is stable across platforms and is part
    of this package's reproducibility contract.
    """

    seed: int
    trial: int = 0
    user: int = 0
    purpose: int = 0

    def __post_init__(self):
        for field in ("seed", "trial", "user", "purpose"):
            value = getattr(self, field)
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise ValueError(f"stream {field} must be a nonnegative integer, got {value!r}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence([self.seed, self.trial, self.user, self.purpose])
        return np.random.Generator(np.random.Philox(ss))

    def derive(self, *, trial: int | None = None, user: int | None = None,
               purpose: int | None = None) -> "RngStream":
        """Copy of this stream with some id components replaced."""
        updates = {}
        if trial is not None:
            updates["trial"] = trial
        if user is not None:
            updates["user"] = user
        if purpose is not None:
            updates["purpose"] = purpose
        return replace(self, **updates)


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hermitian inner product <a, b> = sum_k conj(a_k) b_k (conjugate-linear in a)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"inner expects 1-D vectors of equal length, got {a.shape} and {b.shape}")
    return complex(np.vdot(a, b))


def complex_normal(gen: np.random.Generator, shape) -> np.ndarray:
    """iid circularly-symmetric complex Gaussian entries, unit variance.

    Real and imaginary parts are N(0, 1/2) so E|h|^2 = 1.  Draw order (real
    block then imaginary block) is fixed; it is part of the determinism
    contract relied on by tests that replay streams.
    """
    re = gen.standard_normal(shape)
    im = gen.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(0.5)


def sample_gaussian(stream: RngStream, dim: int) -> np.ndarray:
    """One complex Gaussian vector CN(0, I_dim) from the given stream."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    return complex_normal(stream.generator(), dim)


def sample_isotropic_unit(stream: RngStream, dim: int) -> np.ndarray:
    """Uniform random unit vector on the complex sphere in C^dim."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    gen = stream.generator()
    while True:
        v = complex_normal(gen, dim)
        norm = np.linalg.norm(v)
        if norm > RANK_TOL:  # zero draw has probability 0; guard anyway
            return v / norm


def _gram_schmidt_pivots(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Modified Gram-Schmidt on columns with one re-orthogonalization pass.

    Returns (q, pivots) where q has orthonormal columns spanning the column
    space and pivots[k] is the residual norm at step k (the R diagonal in QR
    terms).  Raises DegenerateChannelError when a pivot falls below RANK_TOL.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    m, n = a.shape
    if n < 1 or n > m:
        raise ValueError(f"need 1 <= cols <= rows, got shape {a.shape}")
    q = np.zeros((m, n), dtype=np.complex128)
    pivots = np.zeros(n)
    for k in range(n):
        v = a[:, k].copy()
        # second pass restores orthogonality lost to cancellation
        for _ in range(2):
            for j in range(k):
                v -= q[:, j] * np.vdot(q[:, j], v)
        norm = np.linalg.norm(v)
        if norm < RANK_TOL:
            raise DegenerateChannelError(
                f"column {k} is numerically dependent on earlier columns (pivot {norm:.3e})")
        pivots[k] = norm
        q[:, k] = v / norm
    return q, pivots


def gram_schmidt(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis for the column space of a (columns of the result)."""
    q, _ = _gram_schmidt_pivots(a)
    return q


def condition_estimate(a: np.ndarray) -> float:
    """Cheap conditioning proxy: max/min Gram-Schmidt pivot ratio over columns."""
    try:
        _, pivots = _gram_schmidt_pivots(a)
    except DegenerateChannelError:
        return np.inf
    return float(pivots.max() / pivots.min())


def invert_square(a: np.ndarray) -> np.ndarray:
    """Inverse of a square matrix, refusing near-singular inputs.

    Raises IllConditionedError when the pivot-ratio condition estimate
    exceeds COND_LIMIT (or the matrix is outright rank deficient).
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    cond = condition_estimate(a)
    if cond > COND_LIMIT:
        raise IllConditionedError("matrix too ill-conditioned to invert", cond)
    return np.linalg.inv(a)


def normal_solve(h: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Solve the normal equations (H^H H) v = H^H s.

    For full-column-rank H this is the least-squares coefficient vector of s
    in the columns of H; when s lies in the column span, H v reconstructs s
    exactly.
    """
    h = np.asarray(h, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    if h.ndim != 2 or s.ndim != 1 or h.shape[0] != s.shape[0]:
        raise ValueError(f"shape mismatch: H {h.shape}, s {s.shape}")
    gram = h.conj().T @ h
    rhs = h.conj().T @ s
    try:
        v = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateChannelError(f"normal equations are singular: {exc}") from exc
    if not np.all(np.isfinite(v)):
        raise DegenerateChannelError("normal equations produced non-finite solution")
    return v
