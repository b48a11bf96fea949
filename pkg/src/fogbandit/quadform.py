"""Dense positive-definite matrix bookkeeping for small dimensions.

Maintains a PD matrix together with its inverse and log-determinant under
rank-one updates, and provides Mahalanobis quadratic forms plus projection
onto the Euclidean unit ball under the matrix metric.  Everything here is
dense and tuned for d <= 16; there is no sparse or large-d path.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["NumericsError", "PsdMatrix"]

# Full inverse recomputation cadence.  Rank-one inverse updates drift at
# roundoff rate; a periodic refresh keeps ||m @ m_inv - I|| ~ 1e-15 even
# over 10^5 updates, at negligible cost for d <= 16.
_REFRESH_EVERY = 1024

# Bisection budget for the ball projection root-find.
_PROJECT_MAX_BISECT = 200
_PROJECT_MAX_BRACKET = 200
_PROJECT_NORM_TOL = 1e-10


class NumericsError(RuntimeError):
    """Internal numerical state is corrupted beyond recovery."""


class PsdMatrix:
    """Symmetric positive-definite matrix with maintained inverse and log-det.

    The matrix starts as ``lam * I`` and only ever grows by non-negative
    rank-one terms ``scale * x x^T``, so positive definiteness (smallest
    eigenvalue >= lam) holds by construction.  The inverse is maintained
    by the Sherman-Morrison formula and the log-determinant by the matrix
    determinant lemma; neither is recomputed by factorization in the hot
    path.
    """

    __slots__ = ("dim", "m", "m_inv", "logdet", "logdet0", "_updates")

    def __init__(self, dim: int, lam: float):
        if int(dim) != dim or dim < 1:
            raise ValueError(f"dim must be a positive integer, got {dim!r}")
        if not (lam > 0.0):
            raise ValueError(f"lam must be positive, got {lam!r}")
        dim = int(dim)
        lam = float(lam)
        self.dim = dim
        self.m = np.eye(dim) * lam
        self.m_inv = np.eye(dim) / lam
        self.logdet = dim * math.log(lam)
        self.logdet0 = self.logdet
        self._updates = 0

    @classmethod
    def scaled_identity(cls, dim: int, lam: float) -> "PsdMatrix":
        """Fresh matrix ``lam * I`` with inverse ``I / lam``."""
        return cls(dim, lam)

    def _check_vector(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ValueError(f"expected vector of shape ({self.dim},), got {v.shape}")
        return v

    def rank_one_update(self, x, scale: float) -> None:
        """Add ``scale * x x^T``, keeping inverse and log-det in sync.

        The log-det increment is log(1 + scale * x^T m_inv x) per the
        determinant lemma, evaluated with the pre-update inverse.
        """
        x = self._check_vector(x)
        scale = float(scale)
        if scale < 0.0:
            raise ValueError(f"scale must be non-negative, got {scale!r}")
        if scale == 0.0:
            return
        mx = self.m_inv @ x
        q = float(x @ mx)
        self.m += scale * np.outer(x, x)
        self.m_inv -= (scale / (1.0 + scale * q)) * np.outer(mx, mx)
        self.logdet += math.log1p(scale * q)
        self._updates += 1
        if self._updates % _REFRESH_EVERY == 0:
            self._refresh_inverse()

    def _refresh_inverse(self) -> None:
        inv = np.linalg.inv(self.m)
        self.m_inv = 0.5 * (inv + inv.T)

    def quad_inv(self, x) -> float:
        """Quadratic form x^T m_inv x (the squared inverse-metric norm)."""
        x = self._check_vector(x)
        mx = self.m_inv @ x
        return max(float(x @ mx), 0.0)

    def quad(self, v) -> float:
        """Quadratic form v^T m v (the squared metric norm)."""
        v = self._check_vector(v)
        mv = self.m @ v
        return max(float(v @ mv), 0.0)

    def logdet_ratio(self) -> float:
        """log det(m) - log det(initial m); non-negative by construction."""
        return self.logdet - self.logdet0

    def project_unit_ball(self, w_raw) -> np.ndarray:
        """Closest point of the Euclidean unit ball in the m-metric.

        Returns argmin over {||w||_2 <= 1} of (w - w_raw)^T m (w - w_raw).
        Interior points are returned unchanged.  Otherwise the KKT system
        gives w(mu) = (m + mu I)^{-1} m w_raw with ||w(mu)||_2 strictly
        decreasing in mu >= 0, so a bisection on ||w(mu)|| = 1 is robust.
        One symmetric eigendecomposition turns every ||w(mu)|| evaluation
        into an O(d) secular expression, so no per-mu linear solves.
        """
        w = self._check_vector(w_raw).copy()
        nrm = math.sqrt(float(w @ w))
        # Tolerant interior test keeps re-projection an exact no-op even
        # when the snapped boundary point rounds a few ulp past 1.
        if nrm <= 1.0 + 1e-12:
            return w
        if self._updates == 0:
            # Matrix is still a scaled identity: the metric is Euclidean
            # up to scale, so the projection is exactly radial.
            return w / nrm
        try:
            evals, evecs = np.linalg.eigh(self.m)
        except np.linalg.LinAlgError as e:
            raise NumericsError(f"ball projection eigendecomposition failed: {e}") from e
        c = evecs.T @ (self.m @ w)

        def norm_at(mu: float) -> float:
            r = c / (evals + mu)
            return math.sqrt(float(r @ r))

        # Bracket: at mu=0 the norm exceeds 1; double mu from a trace-based
        # eigenvalue scale until the norm falls below 1.
        hi = max(float(np.trace(self.m)), 1.0)
        brackets = 0
        while not norm_at(hi) < 1.0:
            hi *= 2.0
            brackets += 1
            if brackets > _PROJECT_MAX_BRACKET or not math.isfinite(hi):
                raise NumericsError(
                    "ball projection failed to bracket the KKT multiplier; "
                    "matrix state is likely corrupted"
                )

        lo = 0.0
        mu_best = hi
        for _ in range(_PROJECT_MAX_BISECT):
            mid = 0.5 * (lo + hi)
            n_mid = norm_at(mid)
            if n_mid < 1.0:
                hi = mid
                mu_best = mid
            else:
                lo = mid
            if abs(n_mid - 1.0) <= _PROJECT_NORM_TOL:
                mu_best = mid
                break
        best = evecs @ (c / (evals + mu_best))
        # Snap to the ball so repeated projection is an exact no-op.
        nrm = math.sqrt(float(best @ best))
        if nrm > 1.0:
            best = best / nrm
        return best
