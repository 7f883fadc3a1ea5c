"""
FEM Core
Continuous problem -(p u')' + q u = f with Dirichlet ends, its mesh, the
hat-function basis, the element vectors S_i and the discrete functional.
Also holds the classical tridiagonal solve used as the reference answer.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy import integrate, special

from config import QUAD_ORDER
from modules.errors import ArgumentError, NumericalError, ProblemError

logger = logging.getLogger(__name__)

# Number of entries in S_i / A_i
ELEMENT_VECTOR_SIZE = 5


# =============================================================================
# Coefficients
# =============================================================================

@dataclass(frozen=True)
class PiecewiseLinear:
    """Coefficient given as a table, linearly interpolated between points"""
    x: Tuple[float, ...]
    y: Tuple[float, ...]

    def __post_init__(self):
        if len(self.x) != len(self.y) or len(self.x) < 1:
            raise ProblemError('table needs matching, non-empty x and y lists')
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ProblemError('table x values must be strictly increasing')

    def __call__(self, x):
        return np.interp(x, self.x, self.y)

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return self.x


@dataclass(frozen=True)
class PiecewiseConstant:
    """One value per element of a uniform mesh on [x_l, x_r]"""
    values: Tuple[float, ...]
    x_l: float = 0.0
    x_r: float = 1.0

    def __post_init__(self):
        if len(self.values) < 1:
            raise ProblemError('per-element values need at least one entry')

    def __call__(self, x):
        n = len(self.values)
        position = (np.asarray(x, dtype=float) - self.x_l) / (self.x_r - self.x_l) * n
        index = np.clip(np.floor(position).astype(int), 0, n - 1)
        return np.asarray(self.values, dtype=float)[index]

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(np.linspace(self.x_l, self.x_r, len(self.values) + 1)[1:-1])


Coefficient = Union[float, Callable, PiecewiseLinear, PiecewiseConstant]


def as_callable(coefficient: Coefficient) -> Callable:
    """Wrap a number, a table or a function into a vectorised callable"""
    if callable(coefficient):
        def evaluate(x):
            x = np.asarray(x, dtype=float)
            return np.broadcast_to(np.asarray(coefficient(x), dtype=float), x.shape)
        return evaluate

    value = float(coefficient)
    return lambda x: np.full(np.shape(x), value)


@dataclass(frozen=True)
class Problem1D:
    """-(p u')' + q u = f on (x_l, x_r), u(x_l) = u_l, u(x_r) = u_r"""
    x_l: float
    x_r: float
    p: Coefficient
    q: Coefficient
    f: Coefficient
    u_l: float
    u_r: float

    def __post_init__(self):
        if not self.x_l < self.x_r:
            raise ProblemError(f'x_l ({self.x_l}) must be less than x_r ({self.x_r})')


@dataclass(frozen=True, eq=False)
class Mesh1D:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ProblemError('mesh needs at least two nodes (one element)')
        gaps = np.diff(nodes)
        if np.any(gaps <= 0):
            bad = int(np.argmax(gaps <= 0)) + 1
            raise ProblemError(f'mesh nodes must be strictly increasing (node {bad})')
        nodes.flags.writeable = False
        object.__setattr__(self, 'nodes', nodes)

    @classmethod
    def uniform(cls, x_l: float, x_r: float, n_elements: int) -> 'Mesh1D':
        if n_elements < 1:
            raise ProblemError(f'element count must be at least 1, got {n_elements}')
        return cls(np.linspace(x_l, x_r, n_elements + 1))

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    def fits(self, problem: Problem1D) -> bool:
        return self.nodes[0] == problem.x_l and self.nodes[-1] == problem.x_r


# =============================================================================
# Basis
# =============================================================================

def hat_function(mesh: Mesh1D, i: int, x) -> np.ndarray:
    """phi_i(x): 1 at node i, 0 at every other node, linear in between"""
    unit = np.zeros(mesh.nodes.size)
    unit[i] = 1.0
    return np.interp(x, mesh.nodes, unit)


def interpolate(mesh: Mesh1D, a: Sequence[float], x) -> np.ndarray:
    """u_N(x) = sum_i a_i phi_i(x)"""
    a = np.asarray(a, dtype=float)
    if a.size != mesh.nodes.size:
        raise ArgumentError(f'state has {a.size} values for {mesh.nodes.size} nodes')
    return np.interp(x, mesh.nodes, a)


def _quadrature(mesh: Mesh1D, quad_order: int):
    """Gauss points (n_elements, order) and weights scaled to each element"""
    if quad_order < 2:
        raise ArgumentError(f'quadrature order must be at least 2, got {quad_order}')
    xi, w = special.roots_legendre(quad_order)
    left = mesh.nodes[:-1, None]
    right = mesh.nodes[1:, None]
    h = right - left
    x = 0.5 * (left + right) + 0.5 * h * xi
    return x, 0.5 * h * w, left, right, h


def check_coefficients(problem: Problem1D, mesh: Mesh1D,
                       quad_order: int = QUAD_ORDER) -> Optional[Tuple[str, int, float, float]]:
    """
    Look for p <= 0 or q < 0 at the quadrature points.

    Returns (coefficient name, 1-based element, x, value) for the first
    violation, or None when the well-posedness conditions hold.
    """
    x, _, _, _, _ = _quadrature(mesh, quad_order)
    p = as_callable(problem.p)(x)
    q = as_callable(problem.q)(x)
    for element in range(mesh.n_elements):
        bad_p = np.flatnonzero(~(p[element] > 0))
        if bad_p.size:
            k = bad_p[0]
            return 'p', element + 1, float(x[element, k]), float(p[element, k])
        bad_q = np.flatnonzero(~(q[element] >= 0))
        if bad_q.size:
            k = bad_q[0]
            return 'q', element + 1, float(x[element, k]), float(q[element, k])
    return None


# =============================================================================
# Element vectors and the discrete functional
# =============================================================================

def compute_element_vectors(problem: Problem1D, mesh: Mesh1D,
                            quad_order: int = QUAD_ORDER) -> np.ndarray:
    """
    S_i for every element, shape (N, 5):
    [int p/2 phi'_{i-1}^2 + q/2 phi_{i-1}^2,  int p/2 phi'_i^2 + q/2 phi_i^2,
     int p phi'_{i-1} phi'_i + q phi_{i-1} phi_i,  -int f phi_{i-1},  -int f phi_i]
    """
    if not mesh.fits(problem):
        raise ProblemError(
            f'mesh spans [{mesh.nodes[0]}, {mesh.nodes[-1]}] but the problem '
            f'is posed on [{problem.x_l}, {problem.x_r}]')

    violation = check_coefficients(problem, mesh, quad_order)
    if violation is not None:
        name, element, x_bad, value = violation
        rule = 'positive' if name == 'p' else 'non-negative'
        raise ProblemError(f'element {element}: {name}({x_bad:g}) = {value:g} must be {rule}')

    x, wx, left, right, h = _quadrature(mesh, quad_order)
    p = as_callable(problem.p)(x)
    q = as_callable(problem.q)(x)
    f = as_callable(problem.f)(x)

    phi_left = (right - x) / h
    phi_right = (x - left) / h
    dphi_left = -1.0 / h
    dphi_right = 1.0 / h

    S = np.empty((mesh.n_elements, ELEMENT_VECTOR_SIZE))
    S[:, 0] = np.sum(wx * (0.5 * p * dphi_left ** 2 + 0.5 * q * phi_left ** 2), axis=1)
    S[:, 1] = np.sum(wx * (0.5 * p * dphi_right ** 2 + 0.5 * q * phi_right ** 2), axis=1)
    S[:, 2] = np.sum(wx * (p * dphi_left * dphi_right + q * phi_left * phi_right), axis=1)
    S[:, 3] = -np.sum(wx * f * phi_left, axis=1)
    S[:, 4] = -np.sum(wx * f * phi_right, axis=1)
    logger.debug(f'Computed {mesh.n_elements} element vectors (Gauss order {quad_order})')
    return S


def truss_functional_vectors(EA: Sequence[float], f: Sequence[float], N: int) -> np.ndarray:
    """
    Element vectors of the bar potential energy on the unit domain:
    sum_i N/2 EA_i (a_i - a_{i-1})^2 - f_i/(2N) (a_i + a_{i-1})
    """
    EA = np.asarray(EA, dtype=float)
    f = np.asarray(f, dtype=float)
    if EA.shape != (N,) or f.shape != (N,):
        raise ArgumentError(f'need {N} EA and f values, got {EA.size} and {f.size}')
    bad = np.flatnonzero(~(EA > 0))
    if bad.size:
        raise ProblemError(f'element {bad[0] + 1}: EA = {EA[bad[0]]:g} must be positive')

    S = np.empty((N, ELEMENT_VECTOR_SIZE))
    S[:, 0] = 0.5 * N * EA
    S[:, 1] = 0.5 * N * EA
    S[:, 2] = -N * EA
    S[:, 3] = -f / (2 * N)
    S[:, 4] = -f / (2 * N)
    return S


def truss_profile_vectors(EA: Coefficient, f: Coefficient, N: int) -> np.ndarray:
    """Truss vectors with EA and f sampled at the element centers"""
    centers = (np.arange(N) + 0.5) / N
    return truss_functional_vectors(as_callable(EA)(centers), as_callable(f)(centers), N)


def build_A_vector(a_left: float, a_right: float) -> np.ndarray:
    return np.array([a_left * a_left, a_right * a_right, a_left * a_right, a_left, a_right])


def _state_products(a: np.ndarray) -> np.ndarray:
    left, right = a[:-1], a[1:]
    return np.stack([left * left, right * right, left * right, left, right], axis=1)


def functional_value(S: np.ndarray, a: Sequence[float]) -> float:
    """Pi_N(a) = sum_i A_i(a_{i-1}, a_i) . S_i"""
    S = np.asarray(S, dtype=float)
    a = np.asarray(a, dtype=float)
    if a.shape != (S.shape[0] + 1,):
        raise ArgumentError(f'state has {a.size} values, expected {S.shape[0] + 1}')
    return float(np.sum(_state_products(a) * S))


def continuous_functional(problem: Problem1D, mesh: Mesh1D, a: Sequence[float],
                          quad_order: int = QUAD_ORDER) -> float:
    """Quadrature of int p/2 u'^2 + q/2 u^2 - f u dx with u = u_N"""
    a = np.asarray(a, dtype=float)
    x, wx, _, _, h = _quadrature(mesh, quad_order)
    u = interpolate(mesh, a, x)
    du = (np.diff(a)[:, None]) / h
    p = as_callable(problem.p)(x)
    q = as_callable(problem.q)(x)
    f = as_callable(problem.f)(x)
    return float(np.sum(wx * (0.5 * p * du ** 2 + 0.5 * q * u ** 2 - f * u)))


# =============================================================================
# Reference solve
# =============================================================================

def stiffness_system(S: np.ndarray, u_l: float, u_r: float):
    """
    Stationarity of Pi_N in the interior unknowns a_1..a_{N-1}:
    returns (diagonal, off-diagonal, rhs) of the symmetric tridiagonal system
    with the Dirichlet values moved to the right-hand side.
    """
    S = np.asarray(S, dtype=float)
    N = S.shape[0]
    if N < 1:
        raise ArgumentError('need at least one element')

    diagonal = 2.0 * (S[:-1, 1] + S[1:, 0])
    off_diagonal = S[1:-1, 2].copy()
    rhs = -(S[:-1, 4] + S[1:, 3])
    if N > 1:
        rhs[0] -= S[0, 2] * u_l
        rhs[-1] -= S[-1, 2] * u_r
    return diagonal, off_diagonal, rhs


def classical_fem_solve(S: np.ndarray, u_l: float, u_r: float) -> np.ndarray:
    """Exact discrete minimiser of Pi_N with a_0 = u_l and a_N = u_r"""
    diagonal, off_diagonal, rhs = stiffness_system(S, u_l, u_r)
    n = diagonal.size
    a = np.empty(n + 2)
    a[0], a[-1] = u_l, u_r
    if n == 0:
        return a

    banded = np.zeros((3, n))
    banded[0, 1:] = off_diagonal
    banded[1] = diagonal
    banded[2, :-1] = off_diagonal
    try:
        a[1:-1] = scipy.linalg.solve_banded((1, 1), banded, rhs)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f'reduced stiffness system is singular: {e}') from e
    if not np.all(np.isfinite(a)):
        raise NumericalError('reduced stiffness system is singular')
    return a


def exact_solution(problem: Problem1D, x) -> np.ndarray:
    """
    Continuous solution of -(p u')' = f by quadrature (q must be zero):
    u(x) = u_l + C G(x) - H(x) with G = int 1/p, H = int F/p, F = int f,
    and C fixed by u(x_r) = u_r.
    """
    if callable(problem.q) or float(problem.q) != 0.0:
        raise ProblemError('the quadrature solution needs q = 0')
    p = as_callable(problem.p)
    f = as_callable(problem.f)
    kinks = sorted({float(k) for c in (problem.p, problem.f) for k in getattr(c, 'breakpoints', ())})

    def integral(g, upper: float) -> float:
        points = [k for k in kinks if problem.x_l < k < upper] or None
        value, _ = integrate.quad(lambda s: float(g(s)), problem.x_l, upper, points=points, limit=200)
        return value

    def G(upper):
        return integral(lambda s: 1.0 / p(s), upper)

    def H(upper):
        return integral(lambda s: integral(f, s) / p(s), upper)

    C = (problem.u_r - problem.u_l + H(problem.x_r)) / G(problem.x_r)
    return np.array([problem.u_l + C * G(b) - H(b) for b in np.atleast_1d(np.asarray(x, dtype=float))])
