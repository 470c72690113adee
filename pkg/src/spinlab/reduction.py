"""Ground states of strongly indefinite functionals by reduction.

The object of study is

    L(z) = (|Pz|^2 - |(I - P)z|^2) / 2 - Psi(z)

on R^n, where P projects orthogonally onto the positive subspace X and
Psi is a convex superquadratic nonlinearity supplied through callbacks.
Because L is strictly concave along the negative subspace Y, each
X-component phi owns a unique fiber maximizer beta(phi); eliminating Y
this way leaves a reduced functional J on X whose critical points are
exactly those of L.  Ground states are then found by minimizing J over
its Nehari set {K = <grad J, phi> = 0}.

The module exposes the hypothesis checker for the structural conditions
the reduction needs (labelled H1 to H5 throughout), the inner maximizer,
the reduced functional, Nehari projection and minimization, and an audit
of the quadratic energy envelope gamma <= L(z) + C |grad L(z)|^2 that
approximate critical points must satisfy.

All constants (p, K, mu, kappa) are part of the problem statement and
are validated, never inferred.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, cg

__all__ = [
    "IndefiniteProblem",
    "ReductionState",
    "HypothesisReport",
    "NehariResult",
    "EnvelopeAudit",
    "toy_problem",
    "diagonal_quartic_problem",
    "check_hypotheses",
    "beta",
    "reduced",
    "reduction_state",
    "nehari_project",
    "minimize_nehari",
    "energy_bound_audit",
]

HYPOTHESES = ("H1", "H2", "H3", "H4", "H5", "positivity")


@dataclass(frozen=True)
class IndefiniteProblem:
    """Splitting, nonlinearity callbacks and structural constants.

    ``P`` may be a dense (n, n) projector or a callable applying it.
    ``hess_psi(z, v)`` applies the Hessian of Psi at z to v; the solver
    never needs the dense matrix.
    """

    n: int
    P: object
    psi: Callable[[np.ndarray], float]
    grad_psi: Callable[[np.ndarray], np.ndarray]
    hess_psi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    p: float
    K: float
    mu: float
    kappa: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need an ambient dimension of at least 2")
        if not self.p > 2.0:
            raise ValueError("superquadraticity needs p > 2")
        if not self.K > 0.0:
            raise ValueError("growth constant K must be positive")
        if not 0.5 < self.mu < 1.0:
            raise ValueError("growth exponent mu must lie in (1/2, 1)")
        if not self.kappa > 1.0:
            raise ValueError("curvature constant kappa must exceed 1")
        if not callable(self.P):
            mat = np.asarray(self.P, dtype=float)
            if mat.shape != (self.n, self.n):
                raise ValueError("projector shape does not match n")
            if np.abs(mat - mat.T).max() > 1e-12:
                raise ValueError("projector must be symmetric")
            if np.abs(mat @ mat - mat).max() > 1e-12:
                raise ValueError("projector must be idempotent")
            object.__setattr__(self, "P", mat)
        else:
            rng = np.random.default_rng(0)
            for _ in range(3):
                v, w = rng.standard_normal((2, self.n))
                pv, pw = self.P(v), self.P(w)
                if np.linalg.norm(self.P(pv) - pv) > 1e-10 * (1 + np.linalg.norm(pv)):
                    raise ValueError("projector callback is not idempotent")
                if abs(pv @ w - v @ pw) > 1e-10 * (1 + abs(pv @ w)):
                    raise ValueError("projector callback is not symmetric")
        zero = np.zeros(self.n)
        if abs(self.psi(zero)) > 1e-12:
            raise ValueError("Psi must vanish at the origin")
        if np.linalg.norm(self.grad_psi(zero)) > 1e-12:
            raise ValueError("grad Psi must vanish at the origin")

    # -- splitting helpers ------------------------------------------------

    def project(self, z: np.ndarray) -> np.ndarray:
        return self.P(z) if callable(self.P) else self.P @ z

    def complement(self, z: np.ndarray) -> np.ndarray:
        return z - self.project(z)

    def energy(self, z: np.ndarray) -> float:
        zx = self.project(z)
        zy = z - zx
        return 0.5 * (zx @ zx - zy @ zy) - self.psi(z)

    def energy_gradient(self, z: np.ndarray) -> np.ndarray:
        zx = self.project(z)
        return zx - (z - zx) - self.grad_psi(z)


def toy_problem(n: int = 2) -> IndefiniteProblem:
    """X = span(e1), Y its complement, Psi = |z|^4 / 4.

    The reduced functional along X is x^2/2 - x^4/4 in closed form, with
    ground level 1/4 at x = +-1.  The curvature constant 5/3 is sharp for
    this quartic.
    """
    P = np.zeros((n, n))
    P[0, 0] = 1.0
    return IndefiniteProblem(
        n=n, P=P,
        psi=lambda z: 0.25 * float(z @ z) ** 2,
        grad_psi=lambda z: float(z @ z) * z,
        hess_psi=lambda z, v: float(z @ z) * v + 2.0 * float(z @ v) * z,
        p=4.0, K=1.0, mu=0.75, kappa=5.0 / 3.0,
    )


def diagonal_quartic_problem(spectrum) -> IndefiniteProblem:
    """Quartic problem whose quadratic part has the given diagonal.

    A quadratic form sum d_i z_i^2 / 2 with nonzero entries rescales to
    the unit indefinite form by z_i -> z_i / sqrt(|d_i|); the |z|^4 / 4
    nonlinearity becomes |S z|^4 / 4 with S the scaling.  The curvature
    constant is unchanged by the linear substitution; the growth constant
    picks up the largest scaling factor.
    """
    d = np.asarray(spectrum, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise ValueError("spectrum must be a vector of length >= 2")
    if np.any(d == 0.0):
        raise ValueError("spectrum entries must be nonzero")
    if not (np.any(d > 0.0) and np.any(d < 0.0)):
        raise ValueError("spectrum must be indefinite (both signs)")
    s = 1.0 / np.sqrt(np.abs(d))
    P = np.diag((d > 0.0).astype(float))
    s2 = s * s

    def psi(z):
        w = s * z
        return 0.25 * float(w @ w) ** 2

    def grad(z):
        w2 = float((s * z) @ (s * z))
        return w2 * s2 * z

    def hess(z, v):
        w2 = float((s * z) @ (s * z))
        return w2 * s2 * v + 2.0 * float((s2 * z) @ v) * s2 * z

    return IndefiniteProblem(
        n=d.size, P=P, psi=psi, grad_psi=grad, hess_psi=hess,
        p=4.0, K=max(1.0, float(s.max())), mu=0.75, kappa=5.0 / 3.0,
    )


# ---------------------------------------------------------------------------
# hypothesis checking

@dataclass(frozen=True)
class HypothesisReport:
    """Worst normalized margins per hypothesis; negative means violated."""

    n_samples: int
    margins: dict
    violations: dict
    psi_nonzero: bool
    failures: tuple
    ok: bool

    def summary(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "margins": {k: float(v) for k, v in self.margins.items()},
            "violations": {k: int(v) for k, v in self.violations.items()},
            "psi_nonzero": self.psi_nonzero,
            "failures": list(self.failures),
            "ok": self.ok,
        }


def check_hypotheses(problem: IndefiniteProblem, n_samples: int = 1000,
                     seed: int = 0, tol: float = 1e-12) -> HypothesisReport:
    """Sample the structural conditions and report worst margins.

    Margins are normalized by the magnitude of the quantities involved,
    so a margin below -tol is a genuine violation rather than float
    noise.  The nonvanishing part of H3 is reported as an H3 failure
    when every sampled value of Psi is zero.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    n = problem.n
    worst = {k: math.inf for k in HYPOTHESES}
    counts = {k: 0 for k in HYPOTHESES}
    psi_max = 0.0

    def record(name, margin):
        worst[name] = min(worst[name], margin)
        if not margin >= -tol:
            counts[name] += 1

    for _ in range(n_samples):
        scale = 10.0 ** rng.uniform(-1.0, 0.7)
        z = scale * rng.standard_normal(n)
        w = 10.0 ** rng.uniform(-1.0, 0.7) * rng.standard_normal(n)
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)

        psi_z = float(problem.psi(z))
        psi_w = float(problem.psi(w))
        g = problem.grad_psi(z)
        ip = float(g @ z)
        psi_max = max(psi_max, abs(psi_z), abs(psi_w))

        hv = problem.hess_psi(z, v)
        record("H1", 0.0 if np.all(np.isfinite(hv)) else -math.inf)

        record("H2", (ip - problem.p * psi_z)
               / (1.0 + abs(ip) + problem.p * abs(psi_z)))

        mid = float(problem.psi(0.5 * (z + w)))
        avg = 0.5 * (psi_z + psi_w)
        record("H3", (avg - mid) / (1.0 + abs(avg) + abs(mid)))

        bound = problem.K * max(ip, 0.0) ** problem.mu \
            + problem.mu * float(np.linalg.norm(z))
        gn = float(np.linalg.norm(g))
        record("H4", (bound - gn) / (1.0 + bound + gn))

        hz = problem.hess_psi(z, z + w)
        quad = float(hz @ (z + w))
        cross = 2.0 * float(g @ w)
        lhs = quad - cross
        rhs = problem.kappa * ip
        record("H5", (lhs - rhs) / (1.0 + abs(lhs) + abs(rhs)))

        record("positivity", psi_z / (1.0 + abs(psi_z)))

    failures = [k for k in HYPOTHESES if counts[k] > 0]
    if psi_max == 0.0 and "H3" not in failures:
        failures.append("H3")
    failures = tuple(failures)
    return HypothesisReport(n_samples, worst, counts, psi_max > 0.0,
                            failures, not failures)


# ---------------------------------------------------------------------------
# the inner maximizer

def beta(problem: IndefiniteProblem, phi: np.ndarray, tol: float = 1e-12,
         max_iter: int = 50, w0: np.ndarray = None) -> np.ndarray:
    """Unique fiber maximizer: solve w + (I - P) grad Psi(phi + w) = 0.

    Damped Newton with Armijo backtracking on the residual norm.  The
    Newton operator v -> v + (I - P) hess Psi (I - P) v dominates the
    identity, so each step is a well-conditioned CG solve.
    """
    if not tol > 0.0:
        raise ValueError("tolerance must be positive")
    phi = np.asarray(phi, dtype=float)
    w = np.zeros(problem.n) if w0 is None else np.array(w0, dtype=float)
    history = []

    def residual(wv):
        return wv + problem.complement(problem.grad_psi(phi + wv))

    F = residual(w)
    nrm = float(np.linalg.norm(F))
    for _ in range(max_iter):
        history.append(nrm)
        if nrm <= tol:
            break
        z = phi + w

        def apply(v):
            return v + problem.complement(problem.hess_psi(z, problem.complement(v)))

        op = LinearOperator((problem.n, problem.n), matvec=apply)
        forcing = min(1e-2, math.sqrt(nrm))
        step, info = cg(op, -F, rtol=max(forcing, 1e-12), atol=0.0)
        if info != 0:
            raise RuntimeError(f"inner CG stalled (info={info}); "
                               f"residual history {history}")
        lam = 1.0
        while lam > 2.0 ** -30:
            cand = w + lam * step
            Fc = residual(cand)
            nc = float(np.linalg.norm(Fc))
            if nc <= (1.0 - 1e-4 * lam) * nrm:
                w, F, nrm = cand, Fc, nc
                break
            lam *= 0.5
        else:
            raise RuntimeError(f"Armijo stalled at residual {nrm:.3e}; "
                               f"history {history}")
    else:
        raise RuntimeError(f"inner maximizer did not converge in {max_iter} "
                           f"steps; residual history {history}")

    bound = 2.0 * float(problem.psi(phi)) + tol
    if float(w @ w) > bound + 1e-9 * (1.0 + float(w @ w)):
        raise RuntimeError("maximizer bound |w|^2 <= 2 Psi(phi) violated")
    return w


def reduced(problem: IndefiniteProblem, phi: np.ndarray, tol: float = 1e-12):
    """Value, gradient and Nehari functional of the reduced problem.

    J(phi) = L(phi + beta(phi)), grad J(phi) = phi - P grad Psi, and
    K(phi) = <grad J(phi), phi>.
    """
    phi = np.asarray(phi, dtype=float)
    w = beta(problem, phi, tol=tol)
    z = phi + w
    value = problem.energy(z)
    grad = phi - problem.project(problem.grad_psi(z))
    return value, grad, float(grad @ phi)


@dataclass(frozen=True)
class ReductionState:
    """One solver iterate: the X-point with its fiber data."""

    phi: np.ndarray
    w: np.ndarray
    residual: float
    j_value: float
    j_grad: np.ndarray
    k_value: float
    t_phi: float
    tol: float


def reduction_state(problem: IndefiniteProblem, phi: np.ndarray,
                    tol: float = 1e-12, t_phi: float = None) -> ReductionState:
    """Assemble the full iterate record at phi, validating its invariants."""
    phi = np.asarray(phi, dtype=float)
    w = beta(problem, phi, tol=tol)
    res = float(np.linalg.norm(w + problem.complement(problem.grad_psi(phi + w))))
    z = phi + w
    value = problem.energy(z)
    grad = phi - problem.project(problem.grad_psi(z))
    if t_phi is None:
        try:
            t_phi = nehari_project(problem, phi, tol=max(tol, 1e-12),
                                   check_slope=False)
        except ValueError:
            t_phi = math.nan
    return ReductionState(phi, w, res, value, grad, float(grad @ phi),
                          float(t_phi), tol)


# ---------------------------------------------------------------------------
# Nehari projection and minimization

def nehari_project(problem: IndefiniteProblem, phi: np.ndarray,
                   tol: float = 1e-12, t0: float = 1.0,
                   max_doublings: int = 40, check_slope: bool = True) -> float:
    """Scale t > 0 placing t phi on the Nehari set K = 0.

    K(t phi) is positive near t = 0, so the root is bracketed by
    geometric expansion and then polished by bisection.  A ray along
    which the nonlinearity vanishes keeps K = t^2 |phi|^2 > 0 forever
    and is reported as degenerate.
    """
    phi = np.asarray(phi, dtype=float)
    if float(phi @ phi) == 0.0:
        raise ValueError("cannot project the zero direction")
    warm = {"w": None}

    def k_of(t):
        w = beta(problem, t * phi, tol=max(min(tol, 1e-12), tol * 1e-3),
                 w0=warm["w"])
        warm["w"] = w
        g = t * phi - problem.project(problem.grad_psi(t * phi + w))
        return float(g @ (t * phi))

    t = float(t0)
    k = k_of(t)
    if k > 0.0:
        lo, hi = t, t
        for _ in range(max_doublings):
            hi *= 2.0
            k_hi = k_of(hi)
            if k_hi <= 0.0:
                break
            lo = hi
        else:
            raise ValueError("ray degenerate: K stays positive along the ray")
        if k_hi == 0.0:
            root = hi
        else:
            root = brentq(k_of, lo, hi, xtol=tol)
    elif k < 0.0:
        lo, hi = t, t
        for _ in range(max_doublings):
            lo *= 0.5
            k_lo = k_of(lo)
            if k_lo >= 0.0:
                break
            hi = lo
        else:
            raise RuntimeError("no positive bracket found near t = 0")
        root = lo if k_lo == 0.0 else brentq(k_of, lo, hi, xtol=tol)
    else:
        root = t

    if check_slope:
        h = max(1e-6 * root, 1e-9)
        slope = (k_of(root + h) - k_of(root - h)) / (2.0 * h)
        if not slope < 0.0:
            raise RuntimeError(f"K slope at the Nehari point is {slope:.3e}, "
                               "expected negative")
    return float(root)


@dataclass(frozen=True)
class NehariResult:
    """Ground-state search outcome; iterates as (gamma, minimizer)."""

    gamma: float
    minimizer: np.ndarray
    grad_norm: float
    nehari_scale: float
    iterations: int
    converged_starts: int
    degenerate_starts: int
    history: tuple = field(repr=False, default=())

    def __iter__(self):
        yield self.gamma
        yield self.minimizer

    def summary(self) -> dict:
        return {
            "gamma": float(self.gamma),
            "grad_norm": float(self.grad_norm),
            "nehari_scale": float(self.nehari_scale),
            "iterations": int(self.iterations),
        }


def minimize_nehari(problem: IndefiniteProblem, starts: int = 8,
                    tol: float = 1e-10, seed: int = 0,
                    max_iter: int = 300,
                    initial: np.ndarray = None) -> NehariResult:
    """Minimize the reduced functional over the Nehari set.

    Steepest descent on the unit sphere of X with Barzilai-Borwein step
    lengths, rescaling onto the Nehari set every iterate; on the set the
    reduced gradient is automatically tangent to the ray, so the sphere
    step needs no extra projection.  Runs from several random directions
    and keeps the lowest converged level.  ``initial`` replaces the first
    random direction, which lets a coarse solution warm start a finer
    one.  The inner tolerances follow the current gradient norm down, so
    early iterates are cheap and converged ones are exact.
    """
    if starts < 1:
        raise ValueError("need at least one start")
    rng = np.random.default_rng(seed)
    inner = min(tol * 1e-2, 1e-12)
    best = None
    total = 0
    degenerate = 0
    converged = 0
    history = []

    for start_idx in range(starts):
        if start_idx == 0 and initial is not None:
            u = problem.project(np.asarray(initial, dtype=float))
        else:
            u = problem.project(rng.standard_normal(problem.n))
        nu = np.linalg.norm(u)
        while nu < 1e-8:
            u = problem.project(rng.standard_normal(problem.n))
            nu = np.linalg.norm(u)
        u = u / nu
        try:
            t = nehari_project(problem, u, tol=1e-6, check_slope=False)
        except ValueError:
            degenerate += 1
            continue

        w = None
        prev_u = None
        prev_g = None
        value = math.inf
        gn = math.inf
        for _ in range(max_iter):
            total += 1
            phi = t * u
            w = beta(problem, phi,
                     tol=max(inner, min(1e-8, 1e-3 * gn)), w0=w)
            z = phi + w
            g = phi - problem.project(problem.grad_psi(z))
            gn = float(np.linalg.norm(g))
            value = problem.energy(z)
            if gn <= tol:
                break
            if prev_u is None:
                alpha = 1.0 / (1.0 + gn)
            else:
                du = u - prev_u
                dg = g - prev_g
                denom = float(du @ dg)
                alpha = float(du @ du) / denom if denom > 1e-300 \
                    else 1.0 / (1.0 + gn)
                alpha = min(max(alpha, 1e-8), 1e4)
            prev_u, prev_g = u, g
            u = u - alpha * g
            u = u / np.linalg.norm(u)
            t = nehari_project(problem, u,
                               tol=max(1e-12, min(1e-6, 1e-2 * gn)), t0=t,
                               check_slope=False)

        history.append((value, gn))
        if gn <= tol:
            converged += 1
            if best is None or value < best[0]:
                best = (value, t * u, gn, t)

    if degenerate == starts:
        raise RuntimeError("all starts hit degenerate rays")
    if best is None:
        raise RuntimeError(f"no start converged to tolerance {tol}; "
                           f"history {history}")
    gamma, phi_star, gn, t = best
    if not gamma > 0.0:
        raise RuntimeError(f"ground level {gamma} is not positive")
    if not problem.psi(phi_star) > 0.0:
        raise RuntimeError("nonlinearity vanishes at the reported minimizer")
    return NehariResult(float(gamma), phi_star, gn, float(t), total,
                        converged, degenerate, tuple(history))


# ---------------------------------------------------------------------------
# quadratic envelope audit

@dataclass(frozen=True)
class EnvelopeAudit:
    """gamma <= L(z) + C |grad L(z)|^2 over a perturbation family."""

    gamma: float
    bound_ok: bool
    C: float
    s_grid: np.ndarray
    deficits: np.ndarray
    grad_sq: np.ndarray
    energy_at_z: float
    grad_norm_at_z: float

    def __iter__(self):
        yield self.gamma
        yield self.bound_ok

    def summary(self) -> dict:
        return {
            "gamma": float(self.gamma),
            "bound_ok": self.bound_ok,
            "C": float(self.C),
            "energy_at_z": float(self.energy_at_z),
            "grad_norm_at_z": float(self.grad_norm_at_z),
        }


def energy_bound_audit(problem: IndefiniteProblem, z: np.ndarray,
                       tol: float = 1e-10, s_grid=None, directions: int = 4,
                       seed: int = 0, result: NehariResult = None) -> EnvelopeAudit:
    """Fit the envelope constant over perturbations z + s * noise.

    The minimal admissible C is the largest ratio of the level deficit
    gamma - L to the squared gradient across the family; the envelope
    holds when that ratio stays finite (a positive deficit with a zero
    gradient would break it).
    """
    z = np.asarray(z, dtype=float)
    base = problem.energy(z)
    if not base > 0.0:
        raise ValueError("audit point must carry positive energy")
    if result is None:
        result = minimize_nehari(problem, seed=seed)
    gamma = result.gamma
    if s_grid is None:
        s_grid = np.geomspace(1e-3, 1e-1, 7)
    s_grid = np.asarray(s_grid, dtype=float)

    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((directions, z.size))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]

    points = [z] + [z + s * d for s in s_grid for d in dirs]
    deficits = np.array([gamma - problem.energy(q) for q in points])
    grad_sq = np.array([float(np.linalg.norm(problem.energy_gradient(q)) ** 2)
                        for q in points])

    C = 0.0
    ok = True
    for d, g2 in zip(deficits, grad_sq):
        if d <= tol:
            continue
        if g2 == 0.0:
            C = math.inf
            ok = False
            break
        C = max(C, d / g2)
    return EnvelopeAudit(float(gamma), ok and math.isfinite(C), float(C),
                         s_grid, deficits, grad_sq, float(base),
                         float(math.sqrt(grad_sq[0])))
