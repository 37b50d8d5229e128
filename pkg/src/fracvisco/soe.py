"""Sum-of-exponentials compression of the Mittag-Leffler kernel.

Builds a certified approximation

    E_alpha(-t**alpha) ~= sum_j b_j * exp(-a_j * t),   t in [t_min, t_max],

by splitting the integral representation into dyadic panels [0,1], [1,q],
..., [q^(K-1), q^K] and applying Gauss-Legendre quadrature with J points per
panel.  Nodes and weights are all strictly positive, which the time stepper's
telescoping memory update relies on.

The number of panels K and points J are chosen by an escalation loop that
keeps enlarging the rule until the measured deviation from the reference
kernel drops below the requested tolerance; the measured value is recorded on
the result.  The tail beyond q^K is dropped and absorbed into certification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mlf
from .errors import BudgetExceeded

MAX_NODES = 4096


@dataclass
class Panel:
    """One dyadic integration panel, stored as center/radius."""

    c: float
    r: float


@dataclass
class SoeApprox:
    """Certified exponential-sum representation of E_alpha(-t**alpha)."""

    alpha: float
    q: float
    big_k: int
    j_per_panel: int
    nodes: np.ndarray
    weights: np.ndarray
    eps_target: float
    eps_certified: float = field(default=math.inf)
    down_panels: int = 0

    @property
    def n_exp(self) -> int:
        return self.nodes.size


def build_panels(q: float, big_k: int) -> list[Panel]:
    """Panels covering [0, q^K]: [0,1] then [q^(k-1), q^k] for k = 1..K."""
    if q <= 1.0:
        raise ValueError(f"q must exceed 1, got {q}")
    if big_k < 0:
        raise ValueError(f"K must be nonnegative, got {big_k}")
    panels = [Panel(0.5, 0.5)]
    for k in range(1, big_k + 1):
        panels.append(Panel((q + 1.0) * q ** (k - 1) / 2.0,
                            (q - 1.0) * q ** (k - 1) / 2.0))
    return panels


def _extended_panels(q: float, big_k: int, down: int) -> list[Panel]:
    """Panel ladder with `down` extra refinements of [0,1].

    [0,1] is split into [0, q^-down] and [q^-m, q^-m+1] for m = down..1 so
    Gauss points can resolve the kernel's fast-rate content at small times;
    down = 0 recovers the plain ladder of :func:`build_panels`.
    """
    panels = [Panel(0.5 * q ** -down, 0.5 * q ** -down)]
    for m in range(down, 0, -1):
        lo, hi = q ** -m, q ** (-m + 1)
        panels.append(Panel((lo + hi) / 2.0, (hi - lo) / 2.0))
    return panels + build_panels(q, big_k)[1:]


def gauss_legendre(j: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on (-1, 1), exact to degree 2j-1."""
    if not 1 <= j <= 64:
        raise ValueError(f"need 1 <= j <= 64, got {j}")
    return np.polynomial.legendre.leggauss(j)


def _assemble(alpha: float, q: float, big_k: int, j: int,
              down: int = 0) -> tuple[np.ndarray, np.ndarray]:
    xi, omega = gauss_legendre(j)
    c_ap = math.cos(alpha * math.pi)
    pref = math.sin(alpha * math.pi) / (alpha * math.pi)
    nodes = []
    weights = []
    for panel in _extended_panels(q, big_k, down):
        x = panel.r * xi + panel.c
        with np.errstate(over="ignore"):
            rate = np.minimum(x ** (-1.0 / alpha), 1e300)
        nodes.append(rate)
        weights.append(pref * omega * panel.r / (x * x + 2.0 * x * c_ap + 1.0))
    return np.concatenate(nodes), np.concatenate(weights)


def eval_soe(soe: SoeApprox, t) -> np.ndarray | float:
    """Evaluate the exponential sum at (normalized) time t."""
    t_arr = np.asarray(t, dtype=float)
    val = np.exp(-np.multiply.outer(t_arr, soe.nodes)) @ soe.weights
    return float(val) if np.isscalar(t) or t_arr.ndim == 0 else val


def _reference(alpha: float, grid: np.ndarray) -> np.ndarray:
    return np.array([mlf.ml_integral(alpha, float(t)) for t in grid])


def certify_soe(soe: SoeApprox, t_min: float, t_max: float,
                samples: int = 512, _ref: np.ndarray | None = None) -> float:
    """Measure max |SOE - E_alpha(-t**alpha)| on a log grid; record it."""
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    grid = np.geomspace(t_min, t_max, samples)
    ref = _reference(soe.alpha, grid) if _ref is None else _ref
    dev = float(np.max(np.abs(eval_soe(soe, grid) - ref)))
    soe.eps_certified = dev
    return dev


def build_soe(alpha: float, eps: float, q: float, t_min: float, t_max: float,
              samples: int = 512) -> SoeApprox:
    """Construct an exponential sum certified to eps on [t_min, t_max].

    Escalation: start from K estimated from the range/tolerance, J = 8;
    certify; on failure raise J by 4 up to 48, then K by 2, until the node
    budget would be exceeded.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    if not 0.0 < t_min < t_max:
        raise ValueError(f"need 0 < t_min < t_max, got [{t_min}, {t_max}]")

    grid = np.geomspace(t_min, t_max, samples)
    ref = _reference(alpha, grid)

    k0 = math.ceil(math.log(max(t_max / t_min, 10.0) / eps, q))
    k0 = min(max(k0, 2), 40)
    # Depth below 1 needed so some panel resolves rates up to ~1/t_min.
    down = max(math.ceil(alpha * math.log(1.0 / min(t_min, 1.0), q)), 0) + 1
    big_k = k0
    while True:
        for j in range(8, 49, 4):
            n_panels = big_k + down + 1
            if n_panels * j > MAX_NODES:
                raise BudgetExceeded(
                    f"{n_panels} panels x J = {j} exceeds {MAX_NODES} nodes "
                    f"before certification at eps = {eps:g}")
            nodes, weights = _assemble(alpha, q, big_k, j, down=down)
            soe = SoeApprox(alpha=alpha, q=q, big_k=big_k, j_per_panel=j,
                            nodes=nodes, weights=weights, eps_target=eps,
                            down_panels=down)
            dev = certify_soe(soe, t_min, t_max, samples=samples, _ref=ref)
            if dev <= eps:
                return soe
        big_k += 2
        if (big_k + down + 1) * 8 > MAX_NODES:
            raise BudgetExceeded(
                f"panel count K = {big_k} exceeds node budget at eps = {eps:g}")


def write_table(soe: SoeApprox, path: str) -> None:
    """Dump the (rate, weight) pairs as plain text, 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in zip(soe.nodes, soe.weights):
            fh.write(f"{a:.17g} {b:.17g}\n")
