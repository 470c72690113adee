"""Truncated multivariate polynomial arithmetic ("jets").

A jet is a polynomial in x_0 .. x_{m-1} kept only up to a fixed total
degree.  Products silently drop every coefficient whose total degree
exceeds the truncation order, which is exactly the O(r^{N+1}) arithmetic
the local curvature expansions need.  Coefficients live in a flat numpy
vector indexed by a canonical monomial list, so jet products reduce to a
precomputed gather/scatter and stay fast even for matrices of jets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "JetSpace",
    "Jet",
    "jet_space",
    "jmat_mul",
    "jmat_det",
    "jmat_inverse",
]


@dataclass(frozen=True)
class JetSpace:
    """Monomial bookkeeping for jets in ``m`` variables up to ``degree``.

    monomials are canonical tuples of variable indices, sorted, so x0^2*x3
    is (0, 0, 3).  ``product_table`` holds every coefficient triple
    (i, j, k) with monomial_i * monomial_j = monomial_k inside the degree
    cap; multiplication is one fused multiply plus np.add.at.
    """

    m: int
    degree: int
    monomials: tuple
    index: dict
    exponents: np.ndarray          # (n_monomials, m) integer exponent rows
    product_table: tuple           # (ii, jj, kk) index arrays

    @property
    def n(self):
        return len(self.monomials)

    def degree_slice(self, d):
        """Index array of the monomials of exact total degree d."""
        return np.flatnonzero(self.exponents.sum(axis=1) == d)


@lru_cache(maxsize=None)
def jet_space(m: int, degree: int) -> JetSpace:
    monos = []
    for d in range(degree + 1):
        monos.extend(sorted(itertools.combinations_with_replacement(range(m), d)))
    monos = tuple(monos)
    index = {mono: k for k, mono in enumerate(monos)}
    expo = np.zeros((len(monos), m), dtype=np.int64)
    for k, mono in enumerate(monos):
        for v in mono:
            expo[k, v] += 1
    ii, jj, kk = [], [], []
    for i, a in enumerate(monos):
        for j, b in enumerate(monos):
            if len(a) + len(b) <= degree:
                ii.append(i)
                jj.append(j)
                kk.append(index[tuple(sorted(a + b))])
    table = (np.asarray(ii), np.asarray(jj), np.asarray(kk))
    return JetSpace(m, degree, monos, index, expo, table)


class Jet:
    """One truncated polynomial over a shared JetSpace."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs=None):
        self.space = space
        if coeffs is None:
            self.coeffs = np.zeros(space.n)
        else:
            self.coeffs = np.asarray(coeffs, dtype=float).copy()
            if self.coeffs.shape != (space.n,):
                raise ValueError("coefficient vector has wrong length")

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, space):
        return cls(space)

    @classmethod
    def constant(cls, space, value):
        j = cls(space)
        j.coeffs[0] = value
        return j

    @classmethod
    def variable(cls, space, i):
        if not 0 <= i < space.m:
            raise ValueError("variable index out of range")
        j = cls(space)
        j.coeffs[space.index[(i,)]] = 1.0
        return j

    # -- ring operations ----------------------------------------------
    def _like(self, coeffs):
        out = Jet.__new__(Jet)
        out.space = self.space
        out.coeffs = coeffs
        return out

    def __add__(self, other):
        if isinstance(other, Jet):
            return self._like(self.coeffs + other.coeffs)
        c = self.coeffs.copy()
        c[0] += other
        return self._like(c)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return self._like(self.coeffs - other.coeffs)
        c = self.coeffs.copy()
        c[0] -= other
        return self._like(c)

    def __rsub__(self, other):
        c = -self.coeffs
        c[0] += other
        return self._like(c)

    def __mul__(self, other):
        if isinstance(other, Jet):
            ii, jj, kk = self.space.product_table
            out = np.zeros(self.space.n)
            np.add.at(out, kk, self.coeffs[ii] * other.coeffs[jj])
            return self._like(out)
        return self._like(self.coeffs * other)

    __rmul__ = __mul__

    # -- queries --------------------------------------------------------
    def coefficient(self, mono) -> float:
        """Coefficient of the monomial given as a tuple of variable indices."""
        return float(self.coeffs[self.space.index[tuple(sorted(mono))]])

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max())

    def homogeneous_part(self, d):
        """New jet keeping only the total-degree-d coefficients."""
        out = np.zeros(self.space.n)
        sel = self.space.degree_slice(d)
        out[sel] = self.coeffs[sel]
        return self._like(out)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        mono_vals = np.prod(x[:, None, :] ** self.space.exponents[None, :, :], axis=2)
        vals = mono_vals @ self.coeffs
        return vals if vals.size > 1 else float(vals[0])

    def __repr__(self):
        nz = int(np.count_nonzero(self.coeffs))
        return f"Jet(m={self.space.m}, degree={self.space.degree}, nonzero={nz})"


# -- matrices of jets ----------------------------------------------------
# A jet matrix is an (n, n, n_monomials) array: entry (i, j) is the
# coefficient vector of one jet.

def _coeffs_mul(space, a, b):
    ii, jj, kk = space.product_table
    out = np.zeros(space.n)
    np.add.at(out, kk, a[ii] * b[jj])
    return out


def jmat_identity(space, n):
    out = np.zeros((n, n, space.n))
    for i in range(n):
        out[i, i, 0] = 1.0
    return out


def jmat_mul(space, A, B):
    """Matrix product of two jet matrices under truncation."""
    n = A.shape[0]
    ii, jj, kk = space.product_table
    contrib = np.einsum("ikp,kjq->ijpq", A, B)
    out = np.zeros((n, n, space.n))
    np.add.at(out, (slice(None), slice(None), kk), contrib[:, :, ii, jj])
    return out


def jmat_det(space, A):
    """Determinant of a jet matrix by Laplace expansion with memoised minors.

    Exact under truncation and independent of any closed-form expansion,
    so it can serve as an oracle against displayed determinant formulas.
    """
    n = A.shape[0]
    full = (1 << n) - 1

    memo = {}

    def minor(rows_mask, col):
        # determinant of the submatrix with the rows in rows_mask and the
        # first (popcount) columns starting at column index col
        key = rows_mask
        if key in memo:
            return memo[key]
        rows = [r for r in range(n) if rows_mask & (1 << r)]
        if len(rows) == 1:
            memo[key] = A[rows[0], col].copy()
            return memo[key]
        acc = np.zeros(space.n)
        sign = 1.0
        for r in rows:
            sub = minor(rows_mask & ~(1 << r), col + 1)
            acc += sign * _coeffs_mul(space, A[r, col], sub)
            sign = -sign
        memo[key] = acc
        return acc

    return Jet(space, minor(full, 0))


def jmat_inverse(space, A):
    """Inverse of I + E with E of vanishing constant term, by Neumann series."""
    n = A.shape[0]
    I = jmat_identity(space, n)
    E = A - I
    if np.abs(E[:, :, 0]).max() > 1e-13:
        raise ValueError("jet matrix must be a unipotent perturbation of the identity")
    out = I.copy()
    term = I.copy()
    # E has no constant term, so the series truncates after `degree` steps
    for _ in range(space.degree):
        term = -jmat_mul(space, term, E)
        out = out + term
    return out
