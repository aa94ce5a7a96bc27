"""
Pointwise exterior algebra on charts

Forms are stored as coefficient functions on the lexicographic basis of index
combinations, so a degree-k form in dimension n is evaluated as

    sum_I c_I(p) * det(V[:, I])

for a stack of k tangent vectors V. All evaluators are vectorized over points.
"""

import itertools
import logging
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

try:
    from ..config import Config
except ImportError:
    from config import Config

logger = logging.getLogger(__name__)

Coefficients = Callable[[np.ndarray], np.ndarray]
DerivativeSource = Union["FormField", Callable[[], Optional["FormField"]], None]


@lru_cache(maxsize=None)
def basis_combinations(dim: int, degree: int) -> Tuple[Tuple[int, ...], ...]:
    """Lexicographically ordered index combinations spanning degree-forms in dim"""
    return tuple(itertools.combinations(range(dim), degree))


def _permutation_sign(sequence: Sequence[int]) -> int:
    inversions = sum(
        1 for i in range(len(sequence)) for j in range(i + 1, len(sequence))
        if sequence[i] > sequence[j]
    )
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=None)
def _wedge_table(dim: int, k: int, l: int) -> Tuple[Tuple[int, int, int, int], ...]:
    left = basis_combinations(dim, k)
    right = basis_combinations(dim, l)
    target = {combo: idx for idx, combo in enumerate(basis_combinations(dim, k + l))}
    table = []
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            if set(a) & set(b):
                continue
            merged = a + b
            table.append((i, j, target[tuple(sorted(merged))], _permutation_sign(merged)))
    return tuple(table)


def _as_points(points: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(points, dtype=float))


class FormField:
    """Differential form of fixed degree given by coefficient functions"""

    def __init__(self, degree: int, ambient_dim: int, coefficients: Coefficients,
                 analytic_derivative: DerivativeSource = None, name: str = "form"):
        if ambient_dim not in (3, 4):
            raise ValueError(f"ambient dimension must be 3 or 4, got {ambient_dim}")
        if degree < 0:
            raise ValueError(f"degree must be non-negative, got {degree}")
        if degree > ambient_dim:
            raise ValueError("degree exceeds dimension")
        self.degree = degree
        self.ambient_dim = ambient_dim
        self.name = name
        self._coefficients = coefficients
        self._derivative = analytic_derivative

    def __repr__(self) -> str:
        return f"FormField({self.name!r}, degree={self.degree}, ambient_dim={self.ambient_dim})"

    @property
    def n_components(self) -> int:
        return len(basis_combinations(self.ambient_dim, self.degree))

    @property
    def analytic_derivative(self) -> Optional["FormField"]:
        """Closed-form exterior derivative, built lazily when given as a factory"""
        if self._derivative is not None and not isinstance(self._derivative, FormField):
            self._derivative = self._derivative()
        return self._derivative

    def coefficients(self, points: np.ndarray) -> np.ndarray:
        """Coefficient array of shape (N, n_components)"""
        pts = _as_points(points)
        values = np.asarray(self._coefficients(pts), dtype=float)
        return np.broadcast_to(values, (len(pts), self.n_components))

    def eval(self, points: np.ndarray, vectors: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Evaluate the form on stacks of tangent vectors.

        Args:
            points: Chart coordinates, shape (N, d)
            vectors: Tangent components, shape (N, ..., degree, ambient_dim);
                a single stack (degree, ambient_dim) is broadcast to every point

        Returns:
            Values of shape (N, ...)
        """
        pts = _as_points(points)
        coeffs = self.coefficients(pts)
        if self.degree == 0:
            if vectors is None:
                return coeffs[:, 0].copy()
            extra = np.asarray(vectors).shape[1:-2] if np.asarray(vectors).ndim > 2 else ()
            return np.broadcast_to(
                coeffs[:, 0].reshape((-1,) + (1,) * len(extra)), (len(pts),) + tuple(extra)
            ).copy()

        stack = np.asarray(vectors, dtype=float)
        if stack.ndim == 2:
            stack = np.broadcast_to(stack, (len(pts),) + stack.shape)
        if stack.shape[-2:] != (self.degree, self.ambient_dim):
            raise ValueError(
                f"{self.name}: expected vectors (..., {self.degree}, {self.ambient_dim}), "
                f"got {stack.shape}"
            )
        idx = np.array(basis_combinations(self.ambient_dim, self.degree))
        minors = stack[..., idx]                      # (N, ..., k, m, k)
        minors = np.moveaxis(minors, -2, -3)          # (N, ..., m, k, k)
        dets = np.linalg.det(minors)                  # (N, ..., m)
        extra = dets.ndim - 2
        weights = coeffs.reshape((len(pts),) + (1,) * extra + (coeffs.shape[1],))
        return np.sum(dets * weights, axis=-1)

    def __add__(self, other: "FormField") -> "FormField":
        self._check_compatible(other)
        da, db = self._derivative, other._derivative

        def derivative():
            if self.analytic_derivative is None or other.analytic_derivative is None:
                return None
            return self.analytic_derivative + other.analytic_derivative

        has_derivative = (da is not None and db is not None and self.degree < self.ambient_dim)
        return FormField(
            self.degree, self.ambient_dim,
            lambda p: self.coefficients(p) + other.coefficients(p),
            analytic_derivative=derivative if has_derivative else None,
            name=f"({self.name} + {other.name})",
        )

    def __neg__(self) -> "FormField":
        return self.scaled(-1.0)

    def __sub__(self, other: "FormField") -> "FormField":
        return self + (-other)

    def scaled(self, factor: float) -> "FormField":
        """Constant multiple, keeping any analytic derivative"""

        def derivative():
            d = self.analytic_derivative
            return None if d is None else d.scaled(factor)

        return FormField(
            self.degree, self.ambient_dim,
            lambda p: factor * self.coefficients(p),
            analytic_derivative=derivative if self._derivative is not None else None,
            name=f"{factor:g}*{self.name}",
        )

    def multiplied(self, function: Callable[[np.ndarray], np.ndarray], name: str = "g") -> "FormField":
        """Pointwise product with a function (no analytic derivative)"""
        return FormField(
            self.degree, self.ambient_dim,
            lambda p: self.coefficients(p) * np.asarray(function(_as_points(p)))[:, None],
            name=f"{name}*{self.name}",
        )

    def _check_compatible(self, other: "FormField") -> None:
        if self.degree != other.degree or self.ambient_dim != other.ambient_dim:
            raise ValueError(
                f"incompatible forms: {self.name} (degree {self.degree}, dim {self.ambient_dim}) "
                f"and {other.name} (degree {other.degree}, dim {other.ambient_dim})"
            )

    @classmethod
    def constant(cls, degree: int, ambient_dim: int, values: Sequence[float],
                 name: str = "const") -> "FormField":
        coeffs = np.asarray(values, dtype=float)
        zero = (lambda: cls.zero(degree + 1, ambient_dim)) if degree < ambient_dim else None
        return cls(degree, ambient_dim, lambda p: coeffs, analytic_derivative=zero, name=name)

    @classmethod
    def zero(cls, degree: int, ambient_dim: int) -> "FormField":
        m = len(basis_combinations(ambient_dim, degree)) if degree <= ambient_dim else 0
        return cls.constant(degree, ambient_dim, np.zeros(m), name="0")

    @classmethod
    def coordinate(cls, ambient_dim: int, index: int, name: Optional[str] = None) -> "FormField":
        """The coordinate 1-form dx_index"""
        values = np.zeros(ambient_dim)
        values[index] = 1.0
        return cls.constant(1, ambient_dim, values, name=name or f"dx{index}")

    @classmethod
    def function(cls, ambient_dim: int, fn: Callable[[np.ndarray], np.ndarray],
                 gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 name: str = "f") -> "FormField":
        """A 0-form; with a gradient its differential is available in closed form"""
        derivative = None
        if gradient is not None:
            derivative = lambda: cls(  # noqa: E731
                1, ambient_dim, gradient,
                analytic_derivative=lambda: cls.zero(2, ambient_dim), name=f"d{name}",
            )
        return cls(0, ambient_dim, lambda p: np.asarray(fn(p))[:, None],
                   analytic_derivative=derivative, name=name)


def wedge(a: FormField, b: FormField) -> FormField:
    """Wedge product as a new FormField (symbolic sign table)"""
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("wedge factors live in different dimensions")
    k, l, n = a.degree, b.degree, a.ambient_dim
    if k + l > n:
        raise ValueError("degree exceeds dimension")
    table = _wedge_table(n, k, l)
    m = len(basis_combinations(n, k + l))

    def coefficients(points: np.ndarray) -> np.ndarray:
        ca = a.coefficients(points)
        cb = b.coefficients(points)
        out = np.zeros((len(ca), m))
        for i, j, target, sign in table:
            out[:, target] += sign * ca[:, i] * cb[:, j]
        return out

    def derivative() -> Optional[FormField]:
        da, db = a.analytic_derivative, b.analytic_derivative
        if da is None or db is None:
            return None
        return wedge(da, b) + wedge(a, db).scaled((-1.0) ** k)

    has_derivative = k + l < n and a._derivative is not None and b._derivative is not None
    return FormField(k + l, n, coefficients,
                     analytic_derivative=derivative if has_derivative else None,
                     name=f"{a.name}^{b.name}")


def wedge_eval(a: FormField, b: FormField, points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """
    Evaluate a∧b through the alternating shuffle sum.

    (a∧b)(v_1..v_{k+l}) = sum over (k,l)-shuffles s of sign(s) a(v_s(1..k)) b(v_s(k+1..k+l))
    """
    k, l, n = a.degree, b.degree, a.ambient_dim
    if k + l > n or b.ambient_dim != n:
        raise ValueError("degree exceeds dimension")
    pts = _as_points(points)
    stack = np.asarray(vectors, dtype=float)
    if stack.ndim == 2:
        stack = np.broadcast_to(stack, (len(pts),) + stack.shape)
    total = np.zeros(len(pts))
    for chosen in itertools.combinations(range(k + l), k):
        rest = tuple(i for i in range(k + l) if i not in chosen)
        sign = _permutation_sign(chosen + rest)
        left = a.eval(pts, stack[:, list(chosen)]) if k else a.eval(pts)
        right = b.eval(pts, stack[:, list(rest)]) if l else b.eval(pts)
        total += sign * left * right
    return total


class Chart:
    """Linear coordinate chart: steps are p + h v and coordinate fields commute"""

    name = "linear"
    abelian = True

    def __init__(self, tangent_dim: int):
        self.tangent_dim = tangent_dim

    def shift(self, points: np.ndarray, vectors: np.ndarray, h: float) -> np.ndarray:
        return points + h * vectors

    def bracket(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.zeros_like(u)

    def velocity(self, points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        """Coordinate velocity of tangent components"""
        return vectors


class BoxChart(Chart):
    """Periodic box; forms are periodic so shifts need no wrapping"""

    name = "periodic_box"

    def __init__(self, periods: Sequence[float]):
        super().__init__(len(periods))
        self.periods = np.asarray(periods, dtype=float)

    def wrap(self, points: np.ndarray) -> np.ndarray:
        return np.mod(points, self.periods)


# sl(2, R) basis: [A, B] = R, [A, R] = B, [B, R] = -A
SL2_BASIS = np.array([
    [[0.5, 0.0], [0.0, -0.5]],
    [[0.0, 0.5], [0.5, 0.0]],
    [[0.0, 0.5], [-0.5, 0.0]],
])


def sl2_hat(components: np.ndarray) -> np.ndarray:
    """Lie algebra components (..., 3) to traceless matrices (..., 2, 2)"""
    return np.tensordot(np.asarray(components, dtype=float), SL2_BASIS, axes=([-1], [0]))


def sl2_components(matrices: np.ndarray) -> np.ndarray:
    """Traceless matrices [[p, q], [s, -p]] to components (2p, q + s, q - s)"""
    p = matrices[..., 0, 0]
    q = matrices[..., 0, 1]
    s = matrices[..., 1, 0]
    return np.stack([2.0 * p, q + s, q - s], axis=-1)


def sl2_exp(matrices: np.ndarray) -> np.ndarray:
    """Exponential of traceless 2x2 matrices via M^2 = -det(M) I"""
    delta = -np.linalg.det(matrices)
    root = np.sqrt(np.abs(delta))
    small = root < 1e-8
    safe = np.where(small, 1.0, root)
    cos_part = np.where(delta >= 0, np.cosh(root), np.cos(root))
    sin_part = np.where(delta >= 0, np.sinh(safe), np.sin(safe)) / safe
    sin_part = np.where(small, 1.0 + delta / 6.0, sin_part)
    eye = np.broadcast_to(np.eye(2), matrices.shape)
    return cos_part[..., None, None] * eye + sin_part[..., None, None] * matrices


class GroupChart(Chart):
    """
    Group-element coordinates on SL(2, R), points stored as flattened 2x2 matrices.

    Tangent vectors are components in the left-invariant frame (A, B, R); a step
    along v is g exp(h v) and the frame fields bracket as the Lie algebra does.
    """

    name = "group"
    abelian = False

    def __init__(self):
        super().__init__(3)

    def shift(self, points: np.ndarray, vectors: np.ndarray, h: float) -> np.ndarray:
        g = points.reshape(-1, 2, 2)
        step = sl2_exp(h * sl2_hat(vectors))
        return np.matmul(g, step).reshape(points.shape)

    def bracket(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        U, V = sl2_hat(u), sl2_hat(v)
        return sl2_components(U @ V - V @ U)

    def velocity(self, points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        g = points.reshape(-1, 2, 2)
        return np.matmul(g, sl2_hat(vectors)).reshape(points.shape)


def exterior_derivative_eval(form: FormField, points: np.ndarray, vectors: np.ndarray,
                             chart: Optional[Chart] = None, h: Optional[float] = None,
                             analytic: bool = True) -> np.ndarray:
    """
    Evaluate dθ on k+1 tangent vectors.

    Uses the analytic derivative when present (and analytic is True), else central
    differences of step h along the chart:

        dθ(v_0..v_k) = Σ_i (-1)^i D_{v_i} θ(..^i..) + Σ_{i<j} (-1)^{i+j} θ([v_i, v_j], ..^i..^j..)

    with the vectors extended as chart frame fields.
    """
    if form.degree >= form.ambient_dim:
        raise ValueError("degree exceeds dimension")
    pts = _as_points(points)
    stack = np.asarray(vectors, dtype=float)
    if stack.ndim == 2:
        stack = np.broadcast_to(stack, (len(pts),) + stack.shape)
    k = form.degree

    if analytic and form.analytic_derivative is not None:
        return form.analytic_derivative.eval(pts, stack)

    chart = chart or Chart(form.ambient_dim)
    step = Config.FD_STEP if h is None else h
    total = np.zeros(len(pts))
    for i in range(k + 1):
        others = np.delete(stack, i, axis=1)
        args = others if k else None
        forward = form.eval(chart.shift(pts, stack[:, i], step), args)
        backward = form.eval(chart.shift(pts, stack[:, i], -step), args)
        total += (-1) ** i * (forward - backward) / (2.0 * step)

    if not chart.abelian and k >= 1:
        for i in range(k + 1):
            for j in range(i + 1, k + 1):
                bracket = chart.bracket(stack[:, i], stack[:, j])
                rest = np.delete(stack, [i, j], axis=1)
                args = np.concatenate([bracket[:, None, :], rest], axis=1)
                total += (-1) ** (i + j) * form.eval(pts, args)
    return total


def exterior_derivative(form: FormField, chart: Optional[Chart] = None,
                        h: Optional[float] = None) -> FormField:
    """dθ as a FormField (analytic when available, finite differences otherwise)"""
    if form.degree >= form.ambient_dim:
        raise ValueError("degree exceeds dimension")
    if form.analytic_derivative is not None:
        return form.analytic_derivative
    n, k = form.ambient_dim, form.degree
    eye = np.eye(n)
    frames = np.array([eye[list(combo)] for combo in basis_combinations(n, k + 1)])

    def coefficients(points: np.ndarray) -> np.ndarray:
        pts = _as_points(points)
        columns = [
            exterior_derivative_eval(form, pts, frame, chart=chart, h=h, analytic=False)
            for frame in frames
        ]
        return np.stack(columns, axis=1)

    return FormField(k + 1, n, coefficients, name=f"d{form.name}")


class VolumeForm:
    """Top-degree form positive on the model's oriented frame"""

    def __init__(self, form: FormField, degree: int = 3, positive: bool = True):
        if form.degree != degree:
            raise ValueError(f"volume form must have degree {degree}, got {form.degree}")
        self.form = form
        self.positive = positive

    @property
    def degree(self) -> int:
        return self.form.degree

    def density(self, points: np.ndarray, frames: np.ndarray) -> np.ndarray:
        """μ evaluated on oriented frames"""
        return self.form.eval(points, frames)

    def is_positive(self, points: np.ndarray, frames: np.ndarray) -> bool:
        values = self.density(points, frames)
        return bool(np.all(values > 0)) if self.positive else bool(np.all(values < 0))

    def rescaled(self, log_density: Callable[[np.ndarray], np.ndarray]) -> "VolumeForm":
        """e^g μ for a smooth function g"""
        form = self.form.multiplied(lambda p: np.exp(log_density(p)), name="exp(g)")
        return VolumeForm(form, degree=self.degree, positive=self.positive)


def frame_stack(frames: np.ndarray, pairs: List[Tuple[int, ...]]) -> np.ndarray:
    """Select vector tuples from frames (N, 3, n) into (N, len(pairs), k, n)"""
    return np.stack([frames[:, list(pair)] for pair in pairs], axis=1)
