"""Exact Laplacian eigenfunctions on the unit torus.

An eigenfunction with eigenvalue lambda = 4 pi^2 m is a finite expansion

    psi(x) = sum_j a_j cos(2 pi k_j . x) + b_j sin(2 pi k_j . x)

over canonical lattice modes k_j with |k_j|^2 = m (one representative per
antipodal pair {k, -k}, first nonzero coordinate positive). The L^2 norm over
the torus is (1/2) sum (a^2 + b^2), held equal to 1.

Random coefficient draws are a desk-scale random-wave surrogate for
high-density eigenbasis subsequences; the correspondence is heuristic and not
asserted anywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import NoModesError
from .geometry import TorusModel, wrap_point

__all__ = [
    "EigenfunctionSpec",
    "enumerate_lattice",
    "random_eigenfunction",
    "mode_spec",
    "evaluate",
    "evaluate_gradient",
    "evaluate_hessian",
    "evaluate_grid",
    "laplacian_residual",
    "translate",
    "spec_to_json",
    "spec_from_json",
]

TWO_PI = 2.0 * math.pi


def enumerate_lattice(m: int, n: int) -> list[tuple[int, ...]]:
    """All canonical representatives k with |k|^2 = m, lexicographic order.

    Canonical means the first nonzero coordinate is positive; the empty list
    is returned when m is not a sum of n squares.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    kmax = math.isqrt(m)
    reps = []
    for k in product(range(-kmax, kmax + 1), repeat=n):
        if sum(c * c for c in k) != m:
            continue
        first = next(c for c in k if c != 0)
        if first > 0:
            reps.append(k)
    reps.sort()
    return reps


@dataclass(frozen=True)
class EigenfunctionSpec:
    """Finite lattice-mode expansion with exact eigenvalue 4 pi^2 m."""

    model: TorusModel
    m: int
    k: np.ndarray  # (M, n) integer canonical modes
    a: np.ndarray  # (M,) cosine coefficients
    b: np.ndarray  # (M,) sine coefficients
    seed: int | None = None

    def __post_init__(self):
        k = np.asarray(self.k, dtype=int)
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if k.ndim != 2 or k.shape[1] != self.model.dim:
            raise ValueError("mode array must be (M, dim)")
        if not np.all((k * k).sum(axis=1) == self.m):
            raise ValueError("every mode must satisfy |k|^2 = m")
        norm = 0.5 * float(np.sum(a * a + b * b))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"L2 norm {norm} != 1")

    @property
    def lam(self) -> float:
        """Eigenvalue, always derived from m."""
        return 4.0 * math.pi**2 * self.m

    @property
    def n_modes(self) -> int:
        return len(self.a)

    def coeff_l1(self) -> float:
        """sum_j sqrt(a_j^2 + b_j^2): bounds sup|psi|."""
        return float(np.sum(np.hypot(self.a, self.b)))


def random_eigenfunction(m: int, model: TorusModel, seed: int) -> EigenfunctionSpec:
    """Gaussian coefficients on the canonical modes, normalized to unit L2 norm.

    Deterministic in (m, seed); raises NoModesError when the spectrum at m is
    empty.
    """
    reps = enumerate_lattice(m, model.dim)
    if not reps:
        raise NoModesError(m, model.dim)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(len(reps))
    b = rng.standard_normal(len(reps))
    scale = math.sqrt(0.5 * float(np.sum(a * a + b * b)))
    return EigenfunctionSpec(
        model=model, m=m, k=np.array(reps, dtype=int), a=a / scale, b=b / scale,
        seed=seed,
    )


def mode_spec(modes, model: TorusModel) -> EigenfunctionSpec:
    """Spec from explicit (k, a, b) triples, e.g. single sin modes or products.

    Coefficients are taken as given and must already satisfy the unit-norm
    convention (1/2) sum(a^2 + b^2) = 1.
    """
    k = np.array([mk for mk, _, _ in modes], dtype=int)
    a = np.array([ak for _, ak, _ in modes], dtype=float)
    b = np.array([bk for _, _, bk in modes], dtype=float)
    m = int((k[0] * k[0]).sum())
    return EigenfunctionSpec(model=model, m=m, k=k, a=a, b=b)


def _phases(spec: EigenfunctionSpec, x: np.ndarray) -> np.ndarray:
    # x: (..., n) -> (..., M)
    return TWO_PI * (x @ spec.k.T.astype(float))


def evaluate(spec: EigenfunctionSpec, x) -> float | np.ndarray:
    """psi(x) by exact trigonometric summation; x may be a batch (..., n)."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    ph = _phases(spec, np.atleast_2d(x))
    vals = np.cos(ph) @ spec.a + np.sin(ph) @ spec.b
    return float(vals[0]) if scalar else vals.reshape(x.shape[:-1])


def evaluate_gradient(spec: EigenfunctionSpec, x) -> np.ndarray:
    """grad psi(x), term-wise differentiated closed form."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    xb = np.atleast_2d(x)
    ph = _phases(spec, xb)
    kf = spec.k.astype(float)
    w = -np.sin(ph) * spec.a + np.cos(ph) * spec.b  # (..., M)
    grad = TWO_PI * (w @ kf)
    return grad[0] if scalar else grad.reshape(x.shape)


def evaluate_hessian(spec: EigenfunctionSpec, x) -> np.ndarray:
    """Hessian of psi at a single point (n, n)."""
    x = np.asarray(x, dtype=float)
    ph = _phases(spec, x[None, :])[0]
    kf = spec.k.astype(float)
    w = -(np.cos(ph) * spec.a + np.sin(ph) * spec.b)  # (M,)
    return TWO_PI**2 * (kf.T * w) @ kf


def evaluate_grid(spec: EigenfunctionSpec, N: int) -> np.ndarray:
    """psi on the uniform N^n grid of nodes i/N, via per-axis outer phases."""
    n = spec.model.dim
    t = TWO_PI * (np.arange(N) / N)
    out = np.zeros((N,) * n)
    for j in range(spec.n_modes):
        k = spec.k[j]
        ph = t * k[0]
        for d in range(1, n):
            ph = ph.reshape(ph.shape + (1,)) + t * k[d]
        out += spec.a[j] * np.cos(ph) + spec.b[j] * np.sin(ph)
    return out


def evaluate_gradient_grid(spec: EigenfunctionSpec, N: int) -> np.ndarray:
    """grad psi on the N^n grid; returns array (N, ..., N, n)."""
    n = spec.model.dim
    t = TWO_PI * (np.arange(N) / N)
    out = np.zeros((N,) * n + (n,))
    for j in range(spec.n_modes):
        k = spec.k[j]
        ph = t * k[0]
        for d in range(1, n):
            ph = ph.reshape(ph.shape + (1,)) + t * k[d]
        w = TWO_PI * (-spec.a[j] * np.sin(ph) + spec.b[j] * np.cos(ph))
        for d in range(n):
            out[..., d] += k[d] * w
    return out


def laplacian_residual(spec: EigenfunctionSpec, x, h: float) -> float:
    """|Delta_h psi + lambda psi| for the (2n+1)-point second-difference stencil.

    Delta_h is the plain sum of per-axis second differences, so that the
    eigen-equation for the positive Laplacian reads Delta_h psi + lambda psi
    -> 0. The residual is O(h^2 lambda^2) (fourth-derivative Taylor term).
    """
    if not 0.0 < h < 1e-2:
        raise ValueError(f"h must be in (0, 1e-2), got {h}")
    x = wrap_point(x)
    n = spec.model.dim
    center = evaluate(spec, x)
    acc = -2.0 * n * center
    for d in range(n):
        e = np.zeros(n)
        e[d] = h
        acc += evaluate(spec, x + e) + evaluate(spec, x - e)
    return abs(acc / (h * h) + spec.lam * center)


def translate(spec: EigenfunctionSpec, tau) -> EigenfunctionSpec:
    """Spec of x -> psi(x - tau) via the closed-form coefficient phase shift."""
    tau = np.asarray(tau, dtype=float)
    theta = TWO_PI * (spec.k.astype(float) @ tau)
    ct, st = np.cos(theta), np.sin(theta)
    a_new = spec.a * ct - spec.b * st
    b_new = spec.a * st + spec.b * ct
    return EigenfunctionSpec(
        model=spec.model, m=spec.m, k=spec.k.copy(), a=a_new, b=b_new,
        seed=spec.seed,
    )


def spec_to_json(spec: EigenfunctionSpec) -> str:
    """Serialize; lambda is never stored, always derived from m."""
    payload = {
        "dim": spec.model.dim,
        "m": spec.m,
        "seed": spec.seed,
        "modes": [
            {"k": [int(c) for c in spec.k[j]], "a": float(spec.a[j]),
             "b": float(spec.b[j])}
            for j in range(spec.n_modes)
        ],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def spec_from_json(text: str) -> EigenfunctionSpec:
    payload = json.loads(text)
    model = TorusModel(payload["dim"])
    modes = payload["modes"]
    k = np.array([mo["k"] for mo in modes], dtype=int)
    a = np.array([mo["a"] for mo in modes], dtype=float)
    b = np.array([mo["b"] for mo in modes], dtype=float)
    return EigenfunctionSpec(
        model=model, m=payload["m"], k=k, a=a, b=b, seed=payload.get("seed"),
    )
