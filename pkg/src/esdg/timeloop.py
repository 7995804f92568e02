"""Explicit adaptive time integration (Dormand-Prince 5(4)) with monitors.

The embedded pair propagates the 5th-order solution; the step-size
controller is the proportional-integral form

    dt_new = dt * safety * err^(-beta1) * err_prev^(-beta2),

a digital-filter style controller with gains beta1 = 0.7/5, beta2 = -0.4/5
(configurable).  The error measure is the weighted RMS norm

    err = sqrt(mean((e / (atol + rtol * max(|y|, |y_new|)))^2)),

accepted when err <= 1.  A fixed-step mode is available for convergence
isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])


@dataclass
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-8
    safety: float = 0.9
    beta1: float = 0.7 / 5.0
    beta2: float = -0.4 / 5.0
    dt_min: float = 1e-14
    dt_max: float = np.inf
    dt_initial: float | None = None
    fixed_dt: float | None = None
    max_steps: int = 10_000_000
    monitor_interval: float = 0.0       # 0 -> record every accepted step

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.dt_min > self.dt_max:
            raise ValueError("dt_min must not exceed dt_max")


@dataclass
class StepResult:
    y: np.ndarray
    dt_used: float
    error: float
    accepted: bool
    dt_next: float


class StepFailure(RuntimeError):
    pass


def _error_norm(err, y0, y1, atol, rtol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_dt(f, t0, y0, cfg):
    f0 = f(t0, y0)
    scale = cfg.atol + cfg.rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    dmax = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dmax <= 1e-15 else (0.01 / dmax) ** 0.2
    return min(100 * h0, h1, cfg.dt_max)


def dp54_step(f, t, y, dt):
    """One embedded Dormand-Prince step: (y5, error_vector, stages)."""
    k = [f(t, y)]
    for s in range(1, 7):
        acc = y + dt * sum(a * kk for a, kk in zip(_A[s], k))
        k.append(f(t + _C[s] * dt, acc))
    y5 = y + dt * sum(b * kk for b, kk in zip(_B5, k) if b != 0.0)
    err = dt * sum((b5 - b4) * kk for b5, b4, kk in zip(_B5, _B4, k)
                   if b5 != b4)
    return y5, err, k


def adaptive_step(f, t, y, dt, cfg: IntegratorConfig, err_prev: float = 1.0) -> StepResult:
    """Attempt one adaptive step; the caller retries on rejection.

    A trial step that leaves the admissible state set (or produces
    non-finite data) counts as a rejection with a hard step cut.
    """
    from .physics import AdmissibilityError

    try:
        y5, err_vec, _ = dp54_step(f, t, y, dt)
        err = _error_norm(err_vec, y, y5, cfg.atol, cfg.rtol)
    except (AdmissibilityError, FloatingPointError):
        return StepResult(y=y, dt_used=dt, error=np.inf, accepted=False,
                          dt_next=max(cfg.dt_min, 0.25 * dt))
    if not np.isfinite(err):
        return StepResult(y=y, dt_used=dt, error=np.inf, accepted=False,
                          dt_next=max(cfg.dt_min, 0.25 * dt))
    accepted = err <= 1.0
    err_c = max(err, 1e-10)
    fac = cfg.safety * err_c ** (-cfg.beta1) * max(err_prev, 1e-10) ** (-cfg.beta2)
    fac = min(5.0, max(0.2, fac))
    dt_next = min(cfg.dt_max, max(cfg.dt_min, dt * fac))
    return StepResult(y=y5 if accepted else y, dt_used=dt, error=err,
                      accepted=accepted, dt_next=dt_next)


@dataclass
class MonitorLog:
    """Time series of integral diagnostics recorded during integration."""

    t: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    kinetic_energy: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    momentum: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    entropy_rate: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    rejected: int = 0
    steps: int = 0

    def dke_dt(self) -> np.ndarray:
        """Centered-difference rate of change of the kinetic energy series."""
        t = np.asarray(self.t)
        ke = np.asarray(self.kinetic_energy)
        if t.size < 2:
            return np.zeros(0)
        return np.gradient(ke, t)

    def as_columns(self):
        dke = self.dke_dt()
        cols = {
            "t": np.asarray(self.t),
            "entropy": np.asarray(self.entropy),
            "kinetic_energy": np.asarray(self.kinetic_energy),
            "dke_dt": dke if dke.size else np.zeros(len(self.t)),
            "mass": np.asarray(self.mass),
            "momentum_x": np.asarray([m[0] for m in self.momentum]),
            "momentum_y": np.asarray([m[1] for m in self.momentum]),
            "momentum_z": np.asarray([m[2] for m in self.momentum]),
            "energy": np.asarray(self.energy),
            "entropy_rate": np.asarray(self.entropy_rate),
            "dt": np.asarray(self.dt),
        }
        return cols

    def write_csv(self, path):
        cols = self.as_columns()
        names = list(cols)
        data = np.column_stack([cols[n] for n in names])
        header = ",".join(names)
        np.savetxt(path, data, delimiter=",", header=header, comments="")


class _NsMonitor:
    """Default monitor set for the compressible solver."""

    def __init__(self, system):
        self.system = system

    def record(self, log: MonitorLog, t, q, dt):
        sysm = self.system
        log.t.append(t)
        log.entropy.append(sysm.total_entropy(q))
        log.kinetic_energy.append(sysm.kinetic_energy(q))
        wgt = sysm.mass * sysm.geom.jac
        log.mass.append(float(wgt @ q[:, 0]))
        log.momentum.append([float(wgt @ q[:, 1 + i]) for i in range(3)])
        log.energy.append(float(wgt @ q[:, 4]))
        log.entropy_rate.append(sysm.entropy_contraction(t, q))
        log.dt.append(dt)


def integrate_with_monitors(system, q0: np.ndarray, t_end: float,
                            cfg: IntegratorConfig,
                            t0: float = 0.0, monitor=None,
                            progress=None) -> tuple[np.ndarray, MonitorLog]:
    """Integrate dq/dt = rhs(t, q) to t_end, recording integral monitors.

    ``system`` must expose rhs(t, q); the default monitor set additionally
    uses total_entropy / kinetic_energy / entropy_contraction.  Non-finite
    states abort with the last accepted state attached to the exception.
    """
    shape = q0.shape
    flat = q0.reshape(-1)

    def f(t, y):
        return system.rhs(t, y.reshape(shape)).reshape(-1)

    if monitor is None:
        monitor = _NsMonitor(system)
    log = MonitorLog()
    t = t0
    y = flat.copy()
    fixed = cfg.fixed_dt is not None
    dt = cfg.fixed_dt if fixed else (cfg.dt_initial or _initial_dt(f, t0, y, cfg))
    monitor.record(log, t, y.reshape(shape), dt)
    next_monitor = t0 + cfg.monitor_interval
    err_prev = 1.0
    for _ in range(cfg.max_steps):
        if t >= t_end - 1e-14 * max(1.0, abs(t_end)):
            break
        dt = min(dt, t_end - t)
        if fixed:
            y, _, _ = dp54_step(f, t, y, dt)
            t += dt
            res_err, res_dt = 0.0, dt
        else:
            res = adaptive_step(f, t, y, dt, cfg, err_prev)
            log.steps += 1
            if not res.accepted:
                log.rejected += 1
                if res.dt_next <= cfg.dt_min:
                    raise StepFailure(
                        f"step size underflow at t={t:.6e} (err={res.error:.3e})")
                dt = res.dt_next
                continue
            y = res.y
            t += res.dt_used
            err_prev = max(res.error, 1e-10)
            dt, res_dt = res.dt_next, res.dt_used
        if not np.all(np.isfinite(y)):
            raise StepFailure(f"non-finite state at t={t:.6e}")
        if cfg.monitor_interval <= 0.0 or t >= next_monitor - 1e-12 or t >= t_end:
            monitor.record(log, t, y.reshape(shape), res_dt)
            while next_monitor <= t:
                next_monitor += cfg.monitor_interval or np.inf
        if progress is not None:
            progress(t, t_end)
    else:
        raise StepFailure("max step count exceeded")
    return y.reshape(shape), log
