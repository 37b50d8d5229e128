"""Manufactured test problems with separable exact solutions.

Both built-in problems have exact velocity v(x, t) = g(t) V(x) with
g(t) = e^{-t} and V vanishing on the boundary of the unit square.  Because
the solution separates, the weak-form load factors into three fixed dof
vectors scaled by g'(t), g(t), and the kernel convolution factor
I(t) = int_0^t beta(t - s) e^{-s} ds, so per-step load assembly is a linear
combination rather than a fresh quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import exprel

from .errors import QuadratureFailure
from .fem import DofMap, Material, elastic_load, l2_error, mass_load
from .mesh import Mesh
from .mlf import kernel_beta

QUAD_ABS_TOL = 1e-11
QUAD_LIMIT = 10_000


# ---------------------------------------------------------------------------
# exact fields

def _field_ex61(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    s = np.sin(np.pi * x) * np.sin(np.pi * y)
    return np.stack([s, s], axis=-1)


def _grad_ex61(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    dx = np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)
    dy = np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)
    g = np.empty(np.broadcast(x, y).shape + (2, 2))
    g[..., 0, 0] = dx
    g[..., 0, 1] = dy
    g[..., 1, 0] = dx
    g[..., 1, 1] = dy
    return g


def _p(x: np.ndarray) -> np.ndarray:
    return x ** 4 - 2.0 * x ** 3 + x ** 2


def _dp(x: np.ndarray) -> np.ndarray:
    return 4.0 * x ** 3 - 6.0 * x ** 2 + 2.0 * x


def _ddp(x: np.ndarray) -> np.ndarray:
    return 12.0 * x ** 2 - 12.0 * x + 2.0


def _field_ex62(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.stack([_p(x) * _dp(y), _p(y) * _dp(x)], axis=-1)


def _grad_ex62(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    g = np.empty(np.broadcast(x, y).shape + (2, 2))
    g[..., 0, 0] = _dp(x) * _dp(y)
    g[..., 0, 1] = _p(x) * _ddp(y)
    g[..., 1, 0] = _p(y) * _ddp(x)
    g[..., 1, 1] = _dp(y) * _dp(x)
    return g


@dataclass(frozen=True)
class ManufacturedProblem:
    """Separable exact solution v(x, t) = g(t) V(x), g(t) = e^{-t}."""

    name: str
    spatial_value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    spatial_gradient: Callable[[np.ndarray, np.ndarray], np.ndarray]
    material: Material = field(default_factory=Material)
    final_time: float = 1.0

    @staticmethod
    def g(t: float) -> float:
        return math.exp(-t)

    @staticmethod
    def g_prime(t: float) -> float:
        return -math.exp(-t)

    def exact_at(self, t: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
        gt = self.g(t)
        return lambda x, y: gt * np.asarray(self.spatial_value(x, y))


_PROBLEMS = {
    "ex61": (_field_ex61, _grad_ex61),
    "ex62": (_field_ex62, _grad_ex62),
}


def get_problem(name: str, material: Material | None = None,
                final_time: float = 1.0) -> ManufacturedProblem:
    key = name.lower()
    if key not in _PROBLEMS:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(_PROBLEMS)}")
    value, grad = _PROBLEMS[key]
    return ManufacturedProblem(name=key, spatial_value=value,
                               spatial_gradient=grad,
                               material=material or Material(),
                               final_time=final_time)


# ---------------------------------------------------------------------------
# load precomputation and assembly

@dataclass(frozen=True)
class LoadPrecomputation:
    """The three fixed vectors of the separable weak-form load."""

    p_mass: np.ndarray   # <V, phi_i>
    p_a: np.ndarray      # a(V, phi_i)
    p_b: np.ndarray      # b(V, phi_i)


def precompute_loads(mesh: Mesh, dofs: DofMap,
                     problem: ManufacturedProblem) -> LoadPrecomputation:
    mat = problem.material
    p_mass = mass_load(mesh, dofs, problem.spatial_value)
    p_a = elastic_load(mesh, dofs, problem.spatial_gradient,
                       mat.mu_c, mat.lambda_c, 1.0 / mat.rho)
    p_b = (elastic_load(mesh, dofs, problem.spatial_gradient,
                        mat.mu_c, mat.lambda_c, 1.0)
           - mat.ratio_alpha
           * elastic_load(mesh, dofs, problem.spatial_gradient,
                          mat.mu_d, mat.lambda_d, 1.0)) / mat.rho
    return LoadPrecomputation(p_mass=p_mass, p_a=p_a, p_b=p_b)


def conv_factor(alpha: float, tau_sigma: float, t: float) -> float:
    """I(t) = int_0^t E_alpha(-((t-s)/tau_sigma)^alpha) e^{-s} ds.

    Swapping the kernel's integral representation with the time integral
    gives I(t) = int_0^inf f(x) * t e^{-t} exprel((1 - r) t) dx with
    r = x^{-1/alpha} / tau_sigma, which is a single smooth quadrature instead
    of a nested one (the inner time integral is exponential and closes in
    exprel form, stable for r near 1).
    """
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return 0.0
    if alpha == 1.0:
        r = 1.0 / tau_sigma
        return t * math.exp(-t) * exprel((1.0 - r) * t)
    c = math.cos(alpha * math.pi)
    front = math.sin(alpha * math.pi) / (alpha * math.pi)

    def integrand(x: float) -> float:
        with np.errstate(over="ignore"):
            rate = min(x ** (-1.0 / alpha), 1e300) / tau_sigma
        f0 = front / (x * x + 2.0 * x * c + 1.0)
        return f0 * t * math.exp(-t) * exprel((1.0 - rate) * t)

    total = 0.0
    for lo, hi in ((0.0, 1.0), (1.0, np.inf)):
        val, err = quad(integrand, lo, hi, epsabs=QUAD_ABS_TOL,
                        epsrel=1e-12, limit=QUAD_LIMIT)
        if err > 1e-9:
            raise QuadratureFailure(
                f"convolution factor quadrature error {err:.2e} on "
                f"[{lo}, {hi}] at t={t}")
        total += val
    return total


def conv_factor_grid(alpha: float, tau_sigma: float,
                     times: np.ndarray) -> np.ndarray:
    """I(t) on a grid of times (cached per run; shared by both schemes)."""
    return np.array([conv_factor(alpha, tau_sigma, float(t)) for t in times])


def assemble_load(pre: LoadPrecomputation, t: float, alpha: float,
                  tau_sigma: float, conv_value: float | None = None) -> np.ndarray:
    """Weak-form load g'(t) p_mass + g(t) p_a - I(t) p_b.

    conv_value overrides the kernel convolution factor I(t) when it has
    already been tabulated for the run's time grid.
    """
    g = math.exp(-t)
    it = conv_factor(alpha, tau_sigma, t) if conv_value is None else conv_value
    return -g * pre.p_mass + g * pre.p_a - it * pre.p_b


def exact_error(mesh: Mesh, dofs: DofMap, coeffs: np.ndarray,
                problem: ManufacturedProblem, t: float) -> float:
    """L2 distance between the FE coefficients and the exact field at time t."""
    return l2_error(mesh, dofs, coeffs, problem.exact_at(t))


# ---------------------------------------------------------------------------
# stress reconstruction (off-by-default post-processing)

class StressReconstructor:
    """Quadrature-point stress via the constitutive law in relaxation form.

    sigma(t) = C eps(v(t)) - conv(t) + iota0(t), where conv is the kernel
    convolution of (C - (tau_eps/tau_sigma)^alpha D) eps(v) and
    iota0(t) = beta(t) (sigma0 - C eps(u0)).  The convolution is carried by
    the same per-exponential recursion as the velocity memory variables,
    applied to Voigt strains (xx, yy, xy) at every quadrature point.

    Strains must be supplied by the caller per step via update(); the class
    is agnostic to how they were sampled as long as the array shape is
    fixed (n_points, 3).
    """

    def __init__(self, material: Material, soe_nodes: np.ndarray,
                 soe_weights: np.ndarray, dt: float, n_points: int,
                 sigma0_minus_c_eps_u0: np.ndarray | None = None):
        self.material = material
        self.dt = dt
        tau = material.tau_sigma
        self.decay = np.exp(-soe_nodes * dt / tau)
        self.gain = soe_weights * tau / soe_nodes * (1.0 - self.decay)
        self.hist = np.zeros((soe_nodes.size, n_points, 3))
        self.iota_base = (np.zeros((n_points, 3))
                          if sigma0_minus_c_eps_u0 is None
                          else np.asarray(sigma0_minus_c_eps_u0, dtype=float))
        self.time = 0.0
        self.prev_strain: np.ndarray | None = None

    @staticmethod
    def _apply_isotropic(mu: float, lam: float, strain: np.ndarray) -> np.ndarray:
        """Voigt (xx, yy, xy) image of 2 mu eps + lam tr(eps) I."""
        tr = strain[..., 0] + strain[..., 1]
        out = np.empty_like(strain)
        out[..., 0] = 2.0 * mu * strain[..., 0] + lam * tr
        out[..., 1] = 2.0 * mu * strain[..., 1] + lam * tr
        out[..., 2] = 2.0 * mu * strain[..., 2]
        return out

    def update(self, strain: np.ndarray) -> None:
        """Advance one step with the velocity strain of the completed level."""
        strain = np.asarray(strain, dtype=float)
        if self.prev_strain is not None:
            self.hist *= self.decay[:, None, None]
            self.hist += self.gain[:, None, None] * self.prev_strain
        self.prev_strain = strain
        self.time += self.dt

    def stress(self) -> np.ndarray:
        """Voigt stress at the current level (call after update)."""
        if self.prev_strain is None:
            raise ValueError("no strain data supplied yet")
        mat = self.material
        strain = self.prev_strain
        c_part = self._apply_isotropic(mat.mu_c, mat.lambda_c, strain)
        conv_strain = self.hist.sum(axis=0)
        b_part = (self._apply_isotropic(mat.mu_c, mat.lambda_c, conv_strain)
                  - mat.ratio_alpha
                  * self._apply_isotropic(mat.mu_d, mat.lambda_d, conv_strain))
        iota = kernel_beta(mat.alpha, mat.tau_sigma, self.time) * self.iota_base
        return c_part - b_part + iota
