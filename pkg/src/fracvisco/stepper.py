"""Backward-Euler time stepping for the velocity-form viscoelastic equation.

Each step solves the SPD system (M/dt + A) v^n = M v^{n-1}/dt + history + load.
Three interchangeable history treatments are provided:

- fast: sum-of-exponentials memory variables, one recursion per exponential
  (O(N_exp) work and storage per step);
- theta: the mathematically equivalent explicit lag-weight convolution
  sum_{i<n} theta_{n-i} B v^i (test reference for the fast scheme);
- direct: product-quadrature weights from the exact kernel antiderivative,
  w_{n,i} = A_beta(t_n - t_i) - A_beta(t_n - t_{i+1}) (O(n) work per step,
  O(N) storage; the accuracy baseline).

The system matrix is constant, so its Jacobi preconditioner is built once
and CG warm-starts from the previous level.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolveFailure
from .fem import (DofMap, Material, a_form_matrix, assemble_mass,
                  b_form_matrix, build_dof_map, ritz_project)
from .mesh import Mesh
from .mlf import kernel_antiderivative
from .problems import (LoadPrecomputation, ManufacturedProblem, assemble_load,
                       conv_factor_grid, precompute_loads)
from .soe import SoeApprox, build_soe


class Scheme(str, Enum):
    FAST = "fast"
    DIRECT = "direct"
    THETA = "theta"


@dataclass
class Timings:
    wall_total: float = 0.0
    wall_history: float = 0.0
    wall_solve: float = 0.0


@dataclass
class RunResult:
    coeffs: np.ndarray
    timings: Timings
    peak_history_bytes: int
    n_exp: int
    n_steps: int
    dt: float


class MemoryState:
    """Per-exponential history vectors H_j with the one-step recursion

    H_j(v^n) = decay_j H_j(v^{n-1}) + gain_j v^{n-1},  H_j(v^0) = 0,

    where decay_j = e^{-a_j dt / tau_sigma} and
    gain_j = (b_j tau_sigma / a_j)(1 - decay_j).
    """

    def __init__(self, soe: SoeApprox, dt: float, tau_sigma: float,
                 n_dofs: int):
        self.decay = np.exp(-soe.nodes * dt / tau_sigma)
        self.gain = soe.weights * tau_sigma / soe.nodes * (1.0 - self.decay)
        self.h = np.zeros((soe.n_exp, n_dofs))

    def advance(self, v_prev: np.ndarray) -> None:
        self.h *= self.decay[:, None]
        self.h += self.gain[:, None] * v_prev

    def total(self) -> np.ndarray:
        return self.h.sum(axis=0)

    @property
    def nbytes(self) -> int:
        return self.h.nbytes


def theta_weights(soe: SoeApprox, dt: float, tau_sigma: float,
                  n_max: int) -> np.ndarray:
    """Lag weights theta_1..theta_{n_max} of the equivalent convolution form.

    theta_l = sum_j (b_j tau_sigma / a_j)(e^{-(l-1) dt a_j/tau_sigma}
                                          - e^{-l dt a_j/tau_sigma}),
    so that sum_j H_j(v^n) = sum_{i=0}^{n-1} theta_{n-i} v^i.
    """
    decay = np.exp(-soe.nodes * dt / tau_sigma)
    gain = soe.weights * tau_sigma / soe.nodes * (1.0 - decay)
    lags = np.arange(n_max)[:, None]                 # l - 1
    return (gain[None, :] * decay[None, :] ** lags).sum(axis=1)


def direct_weights(material: Material, dt: float, n_max: int) -> np.ndarray:
    """Exact product-quadrature lag weights w_l = B(l dt) - B((l-1) dt)
    with B the kernel antiderivative; w_{n,i} = w_{n-i}."""
    anti = np.array([kernel_antiderivative(material.alpha, material.tau_sigma,
                                           l * dt) for l in range(n_max + 1)])
    return np.diff(anti)


class TimeStepSystem:
    """Constant backward-Euler system matrix with reusable preconditioner."""

    def __init__(self, mass: sp.csr_matrix, a_mat: sp.csr_matrix, dt: float,
                 rel_tol: float = 1e-10):
        self.mass = mass
        self.dt = dt
        self.rel_tol = rel_tol
        self.lhs = (mass / dt + a_mat).tocsr()
        n = self.lhs.shape[0]
        inv_diag = 1.0 / self.lhs.diagonal()
        self.precond = spla.LinearOperator((n, n),
                                           matvec=lambda r: inv_diag * r)

    def solve(self, rhs: np.ndarray, x0: np.ndarray) -> np.ndarray:
        x, info = spla.cg(self.lhs, rhs, x0=x0, rtol=self.rel_tol, atol=0.0,
                          maxiter=10 * self.lhs.shape[0], M=self.precond)
        if info != 0:
            raise SolveFailure(f"CG returned info = {info}")
        return x


def step_fast(system: TimeStepSystem, b_mat: sp.csr_matrix, mem: MemoryState,
              v_prev: np.ndarray, load: np.ndarray) -> np.ndarray:
    """One backward-Euler step with SOE memory (mem already at level n)."""
    rhs = system.mass @ v_prev / system.dt + b_mat @ mem.total() + load
    return system.solve(rhs, v_prev)


def step_direct(system: TimeStepSystem, b_mat: sp.csr_matrix,
                history: np.ndarray, weights_rev: np.ndarray,
                load: np.ndarray) -> np.ndarray:
    """One step with explicit history: history rows are v^0..v^{n-1} and
    weights_rev[i] multiplies v^i (already reversed lag weights)."""
    v_prev = history[-1]
    hist = weights_rev @ history
    rhs = system.mass @ v_prev / system.dt + b_mat @ hist + load
    return system.solve(rhs, v_prev)


def run(problem: ManufacturedProblem, mesh: Mesh, scheme: Scheme,
        n_steps: int, dofs: DofMap | None = None, eps: float | None = None,
        q: int = 10, soe: SoeApprox | None = None,
        pre: LoadPrecomputation | None = None,
        conv_values: np.ndarray | None = None,
        rel_tol: float = 1e-10) -> RunResult:
    """Execute a full run and return the final-time coefficients.

    eps defaults to dt/10 for the SOE-based schemes; a prebuilt soe overrides
    it.  conv_values may carry the kernel convolution factors I(t_n) for
    n = 1..n_steps if already tabulated.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    mat = problem.material
    if dofs is None:
        dofs = build_dof_map(mesh)
    a_mat = a_form_matrix(mesh, dofs, mat)
    v = ritz_project(mesh, dofs, a_mat, mat, problem.spatial_gradient)
    timings = Timings()
    if n_steps == 0:
        return RunResult(coeffs=v, timings=timings, peak_history_bytes=0,
                         n_exp=0, n_steps=0, dt=0.0)

    dt = problem.final_time / n_steps
    mass = assemble_mass(mesh, dofs)
    b_mat = b_form_matrix(mesh, dofs, mat)
    system = TimeStepSystem(mass, a_mat, dt, rel_tol=rel_tol)
    if pre is None:
        pre = precompute_loads(mesh, dofs, problem)
    times = dt * np.arange(1, n_steps + 1)
    if conv_values is None:
        conv_values = conv_factor_grid(mat.alpha, mat.tau_sigma, times)

    n_exp = 0
    if scheme in (Scheme.FAST, Scheme.THETA):
        if soe is None:
            target = eps if eps is not None else dt / 10.0
            soe = build_soe(mat.alpha, target, q,
                            t_min=dt / (10.0 * mat.tau_sigma),
                            t_max=problem.final_time / mat.tau_sigma)
        n_exp = soe.n_exp

    mem: MemoryState | None = None
    history: np.ndarray | None = None
    weights: np.ndarray | None = None
    if scheme is Scheme.FAST:
        mem = MemoryState(soe, dt, mat.tau_sigma, dofs.n_dofs)
        peak_bytes = mem.nbytes
    else:
        history = np.zeros((n_steps, dofs.n_dofs))
        history[0] = v
        peak_bytes = history.nbytes
        if scheme is Scheme.THETA:
            weights = theta_weights(soe, dt, mat.tau_sigma, n_steps)
        else:
            weights = direct_weights(mat, dt, n_steps)
        # store the reversal contiguously: a negative-stride vector forces
        # the history matvec off the fast BLAS path
        weights_rev = weights[::-1].copy()

    t_start = time.perf_counter()
    for n in range(1, n_steps + 1):
        load = assemble_load(pre, times[n - 1], mat.alpha, mat.tau_sigma,
                             conv_value=conv_values[n - 1])
        h0 = time.perf_counter()
        if scheme is Scheme.FAST:
            mem.advance(v)
            rhs_hist = b_mat @ mem.total()
        else:
            # weights[l-1] is the lag-l weight; v^i gets lag n - i, so the
            # contiguous suffix weights_rev[n_steps - n:] lines up with v^0..v^{n-1}
            rhs_hist = b_mat @ (weights_rev[n_steps - n:] @ history[:n])
        h1 = time.perf_counter()
        rhs = system.mass @ v / dt + rhs_hist + load
        v_new = system.solve(rhs, v)
        h2 = time.perf_counter()
        timings.wall_history += h1 - h0
        timings.wall_solve += h2 - h1
        if history is not None and n < n_steps:
            history[n] = v_new
        v = v_new
    timings.wall_total = time.perf_counter() - t_start
    return RunResult(coeffs=v, timings=timings, peak_history_bytes=peak_bytes,
                     n_exp=n_exp, n_steps=n_steps, dt=dt)
