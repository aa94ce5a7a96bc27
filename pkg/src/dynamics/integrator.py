"""
Adaptive Dormand-Prince 8(5,3) stepping for batches of states
"""

import logging
from dataclasses import dataclass, asdict
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from scipy.integrate import DOP853

try:
    from ..config import Config
except ImportError:
    from config import Config

logger = logging.getLogger(__name__)

VectorField = Callable[[np.ndarray], np.ndarray]
Projection = Callable[[np.ndarray], np.ndarray]
StopCallback = Callable[[int, float, np.ndarray], None]

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
MAX_CONSECUTIVE_REJECTIONS = 60


class IntegrationError(RuntimeError):
    """Step-size underflow or step budget exhausted"""


@dataclass
class StepStats:
    """Counters of one integration run"""
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0
    min_step: float = np.inf
    max_step: float = 0.0

    def to_dict(self) -> Dict[str, float]:
        """Convert to dictionary"""
        data = asdict(self)
        if not np.isfinite(data["min_step"]):
            data["min_step"] = 0.0
        return data


class DOP853Stepper:
    """
    Embedded 8th order Runge-Kutta with the 5th/3rd order error pair.

    The tableau comes from scipy's DOP853. The whole batch (N, d) shares one step
    size and one error norm, so seeds integrated together follow identical time
    grids. An optional projection is applied after every accepted step.
    """

    A = DOP853.A
    B = DOP853.B
    C = DOP853.C
    E3 = DOP853.E3
    E5 = DOP853.E5
    n_stages = DOP853.n_stages
    error_exponent = -1.0 / (DOP853.error_estimator_order + 1)

    def __init__(self, fun: VectorField, rtol: float, atol: Optional[float] = None,
                 max_steps: Optional[int] = None, project: Optional[Projection] = None,
                 max_step: float = np.inf):
        if rtol <= 0:
            raise ValueError("tolerance must be positive")
        self.fun = fun
        self.rtol = max(rtol, 100 * np.finfo(float).eps)
        self.atol = rtol if atol is None else atol
        self.max_steps = max_steps or Config.MAX_STEPS
        self.project = project
        self.max_step = max_step
        self.stats = StepStats()

    def _eval(self, y: np.ndarray) -> np.ndarray:
        self.stats.evaluations += 1
        return np.asarray(self.fun(y), dtype=float)

    def _scale(self, y: np.ndarray, y_new: np.ndarray) -> np.ndarray:
        return self.atol + np.maximum(np.abs(y), np.abs(y_new)) * self.rtol

    def _error_norm(self, K: np.ndarray, h: float, scale: np.ndarray) -> float:
        err5 = np.tensordot(self.E5, K, axes=(0, 0)) / scale
        err3 = np.tensordot(self.E3, K, axes=(0, 0)) / scale
        err5_sq = float(np.sum(err5 ** 2))
        err3_sq = float(np.sum(err3 ** 2))
        if err5_sq == 0.0 and err3_sq == 0.0:
            return 0.0
        return abs(h) * err5_sq / np.sqrt((err5_sq + 0.01 * err3_sq) * scale.size)

    def _initial_step(self, y0: np.ndarray, f0: np.ndarray, direction: float, span: float) -> float:
        scale = self.atol + np.abs(y0) * self.rtol
        d0 = np.sqrt(np.mean((y0 / scale) ** 2))
        d1 = np.sqrt(np.mean((f0 / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, span)
        y1 = y0 + direction * h0 * f0
        f1 = self._eval(y1)
        d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
        return min(100 * h0, h1, span)

    def _rk_step(self, y: np.ndarray, f: np.ndarray, h: float):
        K = np.empty((self.n_stages + 1,) + y.shape)
        K[0] = f
        for s in range(1, self.n_stages):
            dy = np.tensordot(self.A[s, :s], K[:s], axes=(0, 0)) * h
            K[s] = self._eval(y + dy)
        y_new = y + h * np.tensordot(self.B, K[:-1], axes=(0, 0))
        K[-1] = self._eval(y_new)
        return y_new, K

    def integrate(self, y0: np.ndarray, t_end: float, stops: Optional[Sequence[float]] = None,
                  on_stop: Optional[StopCallback] = None,
                  on_step: Optional[Callable[[float, np.ndarray], None]] = None) -> np.ndarray:
        """
        Integrate from t = 0 to t_end, landing exactly on every stop time.

        Args:
            y0: Initial states, shape (N, d)
            t_end: Final time (negative integrates backwards)
            stops: Monotone output times between 0 and t_end (t_end is always a stop)
            on_stop: Called with (stop index, time, states) at each stop
            on_step: Called with (time, states) after every accepted step

        Returns:
            States at t_end

        Raises:
            IntegrationError: Step-size underflow ("stiff segment at t=...") or step budget
        """
        y = np.array(y0, dtype=float, copy=True)
        if t_end == 0:
            return y
        direction = float(np.sign(t_end))
        targets = [float(s) for s in (stops if stops is not None else [])]
        if not targets or targets[-1] != t_end:
            targets.append(float(t_end))

        t = 0.0
        f = self._eval(y)
        h = self._initial_step(y, f, direction, abs(t_end))
        rejections = 0
        for index, target in enumerate(targets):
            while direction * (target - t) > 0:
                remaining = abs(target - t)
                spacing = 10 * np.abs(np.nextafter(t, direction * np.inf) - t)
                if h < spacing:
                    raise IntegrationError(f"stiff segment at t={t:.6g}")
                if self.stats.accepted + self.stats.rejected >= self.max_steps:
                    raise IntegrationError(f"step budget of {self.max_steps} exhausted at t={t:.6g}")

                step = min(h, remaining, self.max_step)
                landing = step >= remaining * (1 - 1e-12)
                y_new, K = self._rk_step(y, f, direction * step)
                if np.all(np.isfinite(y_new)):
                    norm = self._error_norm(K, step, self._scale(y, y_new))
                else:
                    norm = np.inf

                if norm < 1.0:
                    factor = MAX_FACTOR if norm == 0 else min(MAX_FACTOR, SAFETY * norm ** self.error_exponent)
                    if rejections:
                        factor = min(1.0, factor)
                    rejections = 0
                    t = target if landing else t + direction * step
                    if self.project is not None:
                        y = self.project(y_new)
                        f = self._eval(y)
                    else:
                        y, f = y_new, K[-1]
                    self.stats.accepted += 1
                    self.stats.min_step = min(self.stats.min_step, step)
                    self.stats.max_step = max(self.stats.max_step, step)
                    if on_step is not None:
                        on_step(t, y)
                    h = step * factor if not landing or step * factor > h else h
                else:
                    rejections += 1
                    self.stats.rejected += 1
                    if rejections > MAX_CONSECUTIVE_REJECTIONS:
                        raise IntegrationError(f"stiff segment at t={t:.6g}")
                    shrink = MIN_FACTOR if not np.isfinite(norm) else max(MIN_FACTOR, SAFETY * norm ** self.error_exponent)
                    h = step * shrink
            if on_stop is not None:
                on_stop(index, t, y)

        logger.debug(f"DOP853 finished at t={t:.6g}: {self.stats.to_dict()}")
        return y
