"""Dominance checks for symmetric quadratic forms.

Cross terms in twisted moments are controlled by comparing an off-diagonal
form R against a non-negative diagonal form Z.  Two devices make this
tractable: a tensor-product reduction (dominance of each factor pair gives
dominance of the Kronecker product, because the mixed-form eigenvalues are
exactly the products of factor eigenvalues), and a rank-one-plus-constant
closed form for the prime-local blocks, where both sides collapse to two
scalars per vector.

Everything here is real symmetric.  The Hermitian variant is not needed
and not implemented.
"""

from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import BadTheta, DimensionBlowup, DimMismatch, NotPSD
from .moments import theta_defaults


@dataclass(frozen=True)
class SymForm:
    """A symmetric bilinear form as a dense matrix."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        a = self.entries
        if a.ndim != 2 or a.shape != (self.dim, self.dim):
            raise ValueError("entries must be a dim x dim matrix")
        if not np.array_equal(a, a.T):
            raise ValueError("entries must be exactly symmetric")

    def apply(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (self.dim,) or y.shape != (self.dim,):
            raise DimMismatch("vector length does not match form dimension")
        return float(x @ self.entries @ y)


def sym_form(entries) -> SymForm:
    """Build a SymForm from the upper triangle of an arbitrary square array."""
    a = np.asarray(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("need a square array")
    upper = np.triu(a)
    sym = upper + upper.T - np.diag(np.diag(a))
    return SymForm(a.shape[0], sym)


def _inverse_sqrt(entries: np.ndarray, tol: float) -> np.ndarray:
    # eigenvalue floor -tol admits roundoff-negative spectra, nothing worse
    w, U = np.linalg.eigh(entries)
    if w[0] < -tol:
        raise NotPSD("diagonal form has eigenvalue %.3e below -tol" % w[0])
    if w[0] < tol:
        # singular diagonal form: shift by tol*I before taking the root
        w = w + tol
    return (U / np.sqrt(w)) @ U.T


def _whitened_eigs(Z: SymForm, R: SymForm, tol: float) -> np.ndarray:
    if Z.dim != R.dim:
        raise DimMismatch("forms have dimensions %d and %d" % (Z.dim, R.dim))
    Cinv = _inverse_sqrt(Z.entries, tol)
    M = Cinv @ R.entries @ Cinv
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def check_dominance(Z: SymForm, R: SymForm, tol: float = 1e-9) -> bool:
    """True iff |R(a,f)| <= (Z(a,a) + Z(f,f)) / 2 for all vectors.

    Equivalent to the whitened matrix C^-1 R C^-1 having spectrum inside
    [-1, 1], with C the symmetric square root of Z.  Z must be positive
    semidefinite up to -tol; a singular Z is shifted by tol*I first.
    """
    lam = _whitened_eigs(Z, R, tol)
    return bool(np.max(np.abs(lam)) <= 1.0 + tol)


@dataclass(frozen=True)
class DominanceReport:
    """Outcome of a tensor-product dominance verification."""

    dims: Tuple[int, ...]
    total_dim: int
    factor_ok: Tuple[bool, ...]
    max_eigenvalue: float
    eig_margin: float
    worst_sample_margin: float
    samples: int
    passed: bool


def tensor_dominance_test(Zs: Sequence[SymForm], Rs: Sequence[SymForm],
                          samples: int = 200, seed: int = 0,
                          tol: float = 1e-9) -> DominanceReport:
    """Verify dominance of the Kronecker products of the given factor pairs.

    Checks each factor pair, builds the explicit product forms, and tests
    the product-level inequality both spectrally and on random vector
    pairs.  Sample margins are relative to the diagonal scale.
    """
    if len(Zs) != len(Rs):
        raise DimMismatch("factor lists have different lengths")
    if not Zs:
        raise ValueError("need at least one factor pair")
    dims = tuple(Z.dim for Z in Zs)
    total = 1
    for d in dims:
        total *= d
    if total > 4096:
        raise DimensionBlowup("product dimension %d exceeds 4096" % total)

    factor_ok = tuple(check_dominance(Z, R, tol) for Z, R in zip(Zs, Rs))

    bigZ = sym_form(reduce(np.kron, [Z.entries for Z in Zs]))
    bigR = sym_form(reduce(np.kron, [R.entries for R in Rs]))
    lam = _whitened_eigs(bigZ, bigR, tol)
    max_abs = float(np.max(np.abs(lam)))
    eig_margin = 1.0 + tol - max_abs

    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(samples):
        a = rng.normal(size=total)
        f = rng.normal(size=total)
        diag = 0.5 * (bigZ.apply(a, a) + bigZ.apply(f, f))
        margin = diag - abs(bigR.apply(a, f))
        worst = min(worst, margin / max(1.0, diag))

    passed = all(factor_ok) and max_abs <= 1.0 + tol and worst >= -tol
    return DominanceReport(dims, total, factor_ok, max_abs, eig_margin,
                           float(worst), samples, passed)


def random_dominated_pair(rng, dim: int) -> Tuple[SymForm, SymForm]:
    """Draw a positive definite Z and an R it dominates.

    R is built as C S C with C the square root of Z and S symmetric with
    spectrum squashed into (-1, 1), so the dominance inequality holds by
    construction with strictly positive margin.
    """
    G = rng.normal(size=(dim, dim))
    A = G @ G.T + 0.05 * np.eye(dim)
    w, U = np.linalg.eigh(0.5 * (A + A.T))
    C = (U * np.sqrt(w)) @ U.T
    H = rng.normal(size=(dim, dim))
    s, V = np.linalg.eigh(0.5 * (H + H.T))
    S = (V * np.tanh(s)) @ V.T
    B = C @ S @ C
    return sym_form(0.5 * (A + A.T)), sym_form(0.5 * (B + B.T))


@dataclass(frozen=True)
class RankStructured:
    """Form pair that is constant except at one distinguished basis vector.

    Z takes theta_Z[0] at (v0, v0) and theta_Z[1] elsewhere; R likewise
    with theta_R.  The weight inequalities below are exactly what makes
    Z non-negative and R dominated, so they are enforced at construction.
    """

    dim: int
    v0_index: int
    theta_Z: Tuple[float, float]
    theta_R: Tuple[float, float]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if not 0 <= self.v0_index < self.dim:
            raise ValueError("v0_index out of range")
        t1, t2 = self.theta_Z
        t3, t4 = self.theta_R
        if not t1 >= t2 >= 0.0:
            raise BadTheta("need theta_Z[0] >= theta_Z[1] >= 0")
        if not t3 >= t4 >= 0.0:
            raise BadTheta("need theta_R[0] >= theta_R[1] >= 0")
        if not t2 >= t4:
            raise BadTheta("need theta_Z[1] >= theta_R[1]")
        if not t1 - t2 >= t3 - t4:
            raise BadTheta("need theta_Z gap >= theta_R gap")


def rank_structured_eval(rs: RankStructured, x, y):
    """Closed-form (Zxx, Zyy, Rxy) for a rank-structured pair.

    Both forms reduce to the distinguished coefficient and the coordinate
    sum: Z(x,x) = gap * x[v0]^2 + theta_Z[1] * (sum x)^2, and R mixes the
    same two scalars of each argument.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (rs.dim,) or y.shape != (rs.dim,):
        raise DimMismatch("vector length does not match form dimension")
    t1, t2 = rs.theta_Z
    t3, t4 = rs.theta_R
    sx = float(np.sum(x))
    sy = float(np.sum(y))
    x0 = float(x[rs.v0_index])
    y0 = float(y[rs.v0_index])
    Zxx = (t1 - t2) * x0 * x0 + t2 * sx * sx
    Zyy = (t1 - t2) * y0 * y0 + t2 * sy * sy
    Rxy = (t3 - t4) * x0 * y0 + t4 * sx * sy
    return Zxx, Zyy, Rxy


def dense_forms(rs: RankStructured) -> Tuple[SymForm, SymForm]:
    """Materialize a rank-structured pair as dense matrices."""
    t1, t2 = rs.theta_Z
    t3, t4 = rs.theta_R
    Z = np.full((rs.dim, rs.dim), t2)
    Z[rs.v0_index, rs.v0_index] = t1
    R = np.full((rs.dim, rs.dim), t4)
    R[rs.v0_index, rs.v0_index] = t3
    return sym_form(Z), sym_form(R)


def local_twist_form(p: int, odd_twist: bool = True,
                     max_exponent: int = 8) -> RankStructured:
    """Prime-local form pair over twists at powers of p, truncated in degree.

    Basis vector i stands for the twist at p^i; the distinguished vector
    is the trivial twist p^0.  With an odd cross twist the off-diagonal
    weights are flat; otherwise the trivial-trivial cell keeps full mass.
    Truncation error beyond max_exponent decays geometrically in 1/p.
    """
    if max_exponent < 1:
        raise ValueError("max_exponent must be at least 1")
    t1, t2, t3, t4, _ = theta_defaults(p, twisted_start=1 if odd_twist else 0)
    return RankStructured(max_exponent + 1, 0, (t1, t2), (t3, t4))
