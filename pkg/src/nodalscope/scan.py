"""Certified maximization of field quantities over balls, annuli, and the torus.

The engine is a branch-and-bound over offset cells. Every cell carries an
upper bound of the objective over the cell,

    f(center) + |grad f(center)| rho + (1/2) B2 rho^2,

with B2 a global bound on the Hessian norm (Bernstein-type, from the lattice
mode radius and the coefficient l1 norm). Cells that cannot beat the incumbent
by more than the relative tolerance are pruned, survivors are subdivided, and
the incumbent is polished by projected pattern search. The returned value is a
lower bound of the true supremum within the requested relative tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError
from .spectrum import EigenfunctionSpec

__all__ = [
    "ScanResult",
    "RadialDomain",
    "TorusDomain",
    "SquaredAmplitude",
    "GradientSquared",
    "EnergyDensity",
    "LiftedSquared",
    "certified_max",
]

TOL_FLOOR = 1e-9
NODE_BUDGET = 4_000_000
TWO_PI = 2.0 * math.pi


@dataclass
class ScanResult:
    value: float        # certified lower bound, within rel. tol of the sup
    offset: np.ndarray  # offset (from the query center) achieving value
    rel_gap: float      # certified relative gap to the true sup
    nodes: int          # total objective evaluations


class RadialDomain:
    """Offsets d with lo <= |d| <= hi (ball when lo == 0, annulus otherwise)."""

    def __init__(self, lo: float, hi: float):
        if not 0.0 <= lo < hi:
            raise ValueError(f"invalid radial band [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    def contains(self, norms: np.ndarray) -> np.ndarray:
        eps = 1e-14
        return (norms >= self.lo - eps) & (norms <= self.hi + eps)

    def band_mask(self, norms: np.ndarray, rho: float) -> np.ndarray:
        return (norms >= self.lo - rho) & (norms <= self.hi + rho)

    def project(self, d: np.ndarray) -> np.ndarray:
        r = float(np.linalg.norm(d))
        if r > self.hi:
            return d * (self.hi / r)
        if r < self.lo:
            if r == 0.0:
                out = np.zeros_like(d)
                out[0] = self.lo
                return out
            return d * (self.lo / r)
        return d

    def initial_offsets(self, h0: float, dim: int) -> np.ndarray:
        count = max(2, int(math.ceil(2.0 * self.hi / h0)))
        axis = (np.arange(count) + 0.5) * (2.0 * self.hi / count) - self.hi
        mesh = np.meshgrid(*([axis] * dim), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, dim)

    def initial_spacing(self, h0: float) -> float:
        count = max(2, int(math.ceil(2.0 * self.hi / h0)))
        return 2.0 * self.hi / count


class TorusDomain:
    """All offsets; used for full-torus suprema."""

    def contains(self, norms):
        return np.ones_like(norms, dtype=bool)

    def band_mask(self, norms, rho):
        return np.ones_like(norms, dtype=bool)

    def project(self, d):
        return d

    def initial_offsets(self, h0: float, dim: int) -> np.ndarray:
        count = max(2, int(math.ceil(1.0 / h0)))
        axis = (np.arange(count) + 0.5) / count
        mesh = np.meshgrid(*([axis] * dim), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, dim)

    def initial_spacing(self, h0: float) -> float:
        count = max(2, int(math.ceil(1.0 / h0)))
        return 1.0 / count


def _trig_parts(spec: EigenfunctionSpec, pts: np.ndarray):
    """Per-mode cosine/sine mixes: w sums to psi, u drives the gradient."""
    ph = TWO_PI * (pts @ spec.k.T.astype(float))
    c = np.cos(ph)
    s = np.sin(ph)
    w = c * spec.a + s * spec.b
    u = c * spec.b - s * spec.a
    return w, u


class _SpectralObjective:
    """Shared machinery: f, |grad f| and the quadratic cell bound."""

    def __init__(self, spec: EigenfunctionSpec, center):
        self.spec = spec
        self.center = np.asarray(center, dtype=float)
        self.kf = spec.k.astype(float)
        self.dim = spec.model.dim
        self.A1sq = spec.coeff_l1() ** 2

    def values(self, offsets: np.ndarray) -> np.ndarray:
        v, _ = self._f_and_grad(np.atleast_2d(offsets))
        return v

    def evaluate_cells(self, offsets: np.ndarray, rho: float):
        vals, grad_norm = self._f_and_grad(offsets)
        ubs = vals + grad_norm * rho + 0.5 * self.hess_bound * rho * rho
        return vals, ubs


class SquaredAmplitude(_SpectralObjective):
    """Objective |psi|^2; Hessian norm bound 4 lambda A1^2."""

    def __init__(self, spec, center):
        super().__init__(spec, center)
        self.hess_bound = 4.0 * spec.lam * self.A1sq

    def suggested_h0(self) -> float:
        return 1.0 / (6.0 * math.sqrt(self.spec.m))

    def _f_and_grad(self, offsets):
        w, u = _trig_parts(self.spec, self.center + offsets)
        psi = w.sum(axis=-1)
        g = TWO_PI * (u @ self.kf)
        gn = np.linalg.norm(g, axis=-1)
        return psi * psi, 2.0 * np.abs(psi) * gn


class GradientSquared(_SpectralObjective):
    """Objective |grad psi|^2; Hessian norm bound 6 lambda^2 A1^2."""

    def __init__(self, spec, center):
        super().__init__(spec, center)
        self.hess_bound = 6.0 * spec.lam**2 * self.A1sq

    def suggested_h0(self) -> float:
        return 1.0 / (8.0 * math.sqrt(self.spec.m))

    def _f_and_grad(self, offsets):
        w, u = _trig_parts(self.spec, self.center + offsets)
        g = TWO_PI * (u @ self.kf)
        f = np.sum(g * g, axis=-1)
        # grad f = 2 H g with H = -(2 pi)^2 K^T diag(w) K
        kg = g @ self.kf.T
        hg = -(TWO_PI**2) * ((w * kg) @ self.kf)
        return f, 2.0 * np.linalg.norm(hg, axis=-1)


class EnergyDensity(_SpectralObjective):
    """Objective q = |grad psi|^2 + (lambda/2)|psi|^2; Hessian bound 8 lam^2 A1^2."""

    def __init__(self, spec, center):
        super().__init__(spec, center)
        self.hess_bound = 8.0 * spec.lam**2 * self.A1sq

    def suggested_h0(self) -> float:
        return 1.0 / (8.0 * math.sqrt(self.spec.m))

    def _f_and_grad(self, offsets):
        lam = self.spec.lam
        w, u = _trig_parts(self.spec, self.center + offsets)
        psi = w.sum(axis=-1)
        g = TWO_PI * (u @ self.kf)
        gsq = np.sum(g * g, axis=-1)
        f = gsq + 0.5 * lam * psi * psi
        kg = g @ self.kf.T
        hg = -(TWO_PI**2) * ((w * kg) @ self.kf)
        grad = 2.0 * hg + lam * psi[:, None] * g
        return f, np.linalg.norm(grad, axis=-1)


class LiftedSquared(_SpectralObjective):
    """sup of H^2 = psi(x)^2 exp(2 t sqrt(lambda)) over an (n+1)-ball.

    The t maximization is closed form (exp is increasing), reducing the
    (n+1)-dimensional ball of radius s at (x0, t0) to the n-dimensional
    objective psi(x0+d)^2 exp(2 sqrt(lambda)(t0 + sqrt(s^2-|d|^2))). Cell
    bounds multiply the quadratic psi^2 bound by the exact cell maximum of
    the monotone t-factor.
    """

    def __init__(self, spec, x_center, t_center: float, s: float):
        super().__init__(spec, x_center)
        self.t0 = float(t_center)
        self.s = float(s)
        self.sqrt_lam = math.sqrt(spec.lam)
        self.hess_bound = 4.0 * spec.lam * self.A1sq  # for the psi^2 factor

    def suggested_h0(self) -> float:
        return 1.0 / (6.0 * math.sqrt(self.spec.m))

    def _t_factor(self, norms: np.ndarray) -> np.ndarray:
        g = np.sqrt(np.maximum(self.s**2 - norms**2, 0.0))
        return np.exp(2.0 * self.sqrt_lam * (self.t0 + g))

    def _psi_parts(self, offsets):
        w, u = _trig_parts(self.spec, self.center + offsets)
        psi = w.sum(axis=-1)
        g = TWO_PI * (u @ self.kf)
        gn = np.linalg.norm(g, axis=-1)
        return psi * psi, 2.0 * np.abs(psi) * gn

    def values(self, offsets: np.ndarray) -> np.ndarray:
        offsets = np.atleast_2d(offsets)
        psi_sq, _ = self._psi_parts(offsets)
        norms = np.linalg.norm(offsets, axis=-1)
        return psi_sq * self._t_factor(norms)

    def evaluate_cells(self, offsets: np.ndarray, rho: float):
        psi_sq, grad_norm = self._psi_parts(offsets)
        norms = np.linalg.norm(offsets, axis=-1)
        vals = psi_sq * self._t_factor(norms)
        psi_ub = psi_sq + grad_norm * rho + 0.5 * self.hess_bound * rho * rho
        factor_max = self._t_factor(np.maximum(norms - rho, 0.0))
        return vals, psi_ub * factor_max


def _pattern_refine(objective, domain, d0, v0, step0, max_evals=600):
    d = np.array(d0, dtype=float)
    v = float(v0)
    step = float(step0)
    dim = d.shape[0]
    evals = 0
    while step > 1e-13 and evals < max_evals:
        improved = False
        for axis in range(dim):
            for sgn in (1.0, -1.0):
                cand = d.copy()
                cand[axis] += sgn * step
                cand = domain.project(cand)
                cv = float(objective.values(cand[None, :])[0])
                evals += 1
                if cv > v:
                    d, v = cand, cv
                    improved = True
        if not improved:
            step *= 0.5
    return d, v, evals


def certified_max(objective, domain, tol: float, h0: float | None = None,
                  node_budget: int = NODE_BUDGET) -> ScanResult:
    """Max of the objective over the domain, within relative tolerance tol.

    Raises BudgetError when tol is below the certification floor or the node
    budget is exhausted before the bound gap closes.
    """
    if tol < TOL_FLOOR:
        raise BudgetError(
            f"tolerance {tol} below certification floor {TOL_FLOOR}"
        )
    dim = objective.center.shape[0]
    if h0 is None:
        h0 = objective.suggested_h0()
    if isinstance(domain, RadialDomain):
        h0 = min(h0, max((domain.hi - domain.lo) / 2.0, 1e-8), domain.hi)
    offsets = domain.initial_offsets(h0, dim)
    spacing = domain.initial_spacing(h0)
    rho = spacing * math.sqrt(dim) / 2.0
    norms = np.linalg.norm(offsets, axis=-1)
    offsets = offsets[domain.band_mask(norms, rho)]

    best_val = -math.inf
    best_off = None
    nodes = 0
    child_shifts = np.array(
        np.meshgrid(*([[-0.25, 0.25]] * dim), indexing="ij")
    ).reshape(dim, -1).T

    while True:
        nodes += len(offsets)
        if nodes > node_budget:
            raise BudgetError(
                f"scan exceeded node budget {node_budget} (tol={tol})"
            )
        vals, ubs = objective.evaluate_cells(offsets, rho)
        norms = np.linalg.norm(offsets, axis=-1)
        inside = domain.contains(norms)
        if np.any(inside):
            idx = int(np.argmax(np.where(inside, vals, -math.inf)))
            if vals[idx] > best_val:
                d, v, used = _pattern_refine(
                    objective, domain, offsets[idx], vals[idx], 2.0 * rho
                )
                nodes += used
                if v > best_val:
                    best_val, best_off = v, d
        threshold = best_val * (1.0 + tol) if best_val > 0 else best_val
        survivors = ubs > threshold
        if not np.any(survivors) and best_off is not None:
            return ScanResult(
                value=best_val, offset=best_off, rel_gap=tol, nodes=nodes
            )
        parents = offsets[survivors]
        children = (
            parents[:, None, :] + child_shifts[None, :, :] * spacing
        ).reshape(-1, dim)
        spacing *= 0.5
        rho *= 0.5
        cnorm = np.linalg.norm(children, axis=-1)
        children = children[domain.band_mask(cnorm, rho)]
        if len(children) == 0:
            if best_off is None:
                raise BudgetError("scan found no admissible sample points")
            return ScanResult(
                value=best_val, offset=best_off, rel_gap=tol, nodes=nodes
            )
        offsets = children
