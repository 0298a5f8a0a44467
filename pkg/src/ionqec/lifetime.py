"""Closed-form storage-time optimisation.

Times are in units of 1/gamma_Z and frequencies in units of gamma_Z.  The
X-failure bound is the first-order ``n t / (2 eta)``; the Z-failure bound
is the binomial tail from :func:`ionqec.noise.logical_z_failure` with the
selected lower-limit convention.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import bisect, curve_fit

from .noise import DEFAULT_Z_MODE, NoiseParams, is_degenerate, logical_x_failure, logical_z_failure

K_BRACKET = (1e-3, 1e3)
K_TOL = 1e-4
FIT_ETAS = tuple(10.0 ** np.linspace(2, 6, 17))
HORIZON = 1e12


def high_fidelity_time(failure_fn: Callable[[float], float], epsilon: float,
                       horizon: float = HORIZON, rtol: float = 1e-8) -> float:
    """Earliest t with failure_fn(t) = epsilon, for nondecreasing failure_fn."""
    if failure_fn(0.0) >= epsilon:
        raise ValueError("failure probability already reaches epsilon at t = 0")
    hi = 1.0
    while failure_fn(hi) < epsilon:
        hi *= 2.0
        if hi > horizon:
            raise ValueError(f"failure probability never reaches {epsilon} before t = {horizon:g}")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    return bisect(lambda t: failure_fn(t) - epsilon, lo, hi, xtol=1e-15, rtol=min(rtol, 1e-10) * 0.5)


def tau0(epsilon: float) -> float:
    """Unencoded qubit: -ln(1 - 2 epsilon)."""
    return -math.log1p(-2.0 * epsilon)


def tau_x(n: int, eta: float, epsilon: float) -> float:
    params = NoiseParams(eta=eta, epsilon=epsilon)
    return high_fidelity_time(lambda t: float(logical_x_failure(t, n, params)), epsilon)


@lru_cache(maxsize=65536)
def tau_z(n: int, epsilon: float, mode: str = DEFAULT_Z_MODE) -> float:
    """High-fidelity time of the Z channel; 0 for degenerate sizes."""
    if is_degenerate(n, mode):
        return 0.0
    return high_fidelity_time(lambda t: float(logical_z_failure(t, n, mode)), epsilon)


def _crossing(parity: int, eta: float, epsilon: float, mode: str, n_cap: int) -> list[int]:
    """Sizes of one parity that bracket tau_Z(n) = tau_X(n).

    tau_Z grows with n inside a parity class while tau_X = 2 eta eps / n
    shrinks, so binary search finds the last n with tau_Z <= tau_X.
    """
    start = 1 if parity else 2
    lo, hi = 0, (n_cap - start) // 2  # index m -> n = start + 2m
    f = lambda m: tau_z(start + 2 * m, epsilon, mode) <= 2.0 * eta * epsilon / (start + 2 * m)
    if not f(lo):
        return [start]
    if f(hi):
        return [start + 2 * hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(mid):
            lo = mid
        else:
            hi = mid
    return [start + 2 * lo, start + 2 * hi]


def storage_time(n: int, eta: float, epsilon: float, mode: str = DEFAULT_Z_MODE) -> float:
    """min(tau_X, tau_Z) for an n-qubit code."""
    return min(2.0 * eta * epsilon / n, tau_z(n, epsilon, mode))


def optimal_code_size(eta: float, epsilon: float, mode: str = DEFAULT_Z_MODE, n_cap: int | None = None):
    """Code size maximising min(tau_X, tau_Z); returns ``(n_opt, tau1)``.

    Ties go to the smaller n.
    """
    if eta <= 1:
        raise ValueError("eta must exceed 1")
    if n_cap is None:
        n_cap = max(64, int(8 * eta**0.85) + 64)
    cands = sorted(set(_crossing(1, eta, epsilon, mode, n_cap) + _crossing(0, eta, epsilon, mode, n_cap)))
    best_n, best_t = None, -1.0
    for n in cands:
        t = storage_time(n, eta, epsilon, mode)
        if t > best_t:
            best_n, best_t = n, t
    return best_n, best_t


def _power(eta, a, b, c):
    return a * np.power(eta, b) + c


def fit_power_law_data(etas: Sequence[float], n_values: Sequence[float], relative: bool = True):
    """Least-squares fit of n = a eta**b + c.

    With ``relative=True`` residuals are weighted by 1/n, i.e. relative
    errors are minimised so the small-eta end is not drowned out.
    """
    x = np.asarray(etas, dtype=float)
    y = np.asarray(n_values, dtype=float)
    if x.size < 5:
        raise ValueError("need at least 5 samples")
    if np.log10(x.max() / x.min()) < 2:
        raise ValueError("samples must span at least two decades of eta")
    sigma = y if relative else None
    try:
        popt, _ = curve_fit(_power, x, y, p0=(0.1, 0.8, 5.0), sigma=sigma, maxfev=20000)
    except RuntimeError as exc:
        raise ValueError(f"power-law fit did not converge: {exc}") from None
    return tuple(float(v) for v in popt)


def fit_power_law(eta_samples: Sequence[float] = FIT_ETAS, epsilon: float = 0.01,
                  mode: str = DEFAULT_Z_MODE, relative: bool = True):
    n_opt = [optimal_code_size(e, epsilon, mode)[0] for e in eta_samples]
    return fit_power_law_data(eta_samples, n_opt, relative)


def _upper_crossing(g: Callable[[float], float]) -> float:
    """Smallest K above which g stays negative, for g < 0 at the top of the bracket.

    g is negative at both ends of the bracket, so walk down a log grid from the
    top to the first non-negative point and bisect the last sign change.
    """
    lo_k, hi_k = K_BRACKET
    grid = np.logspace(math.log10(hi_k), math.log10(lo_k), 601)
    if g(grid[0]) >= 0:
        raise ValueError(f"inequality fails even at K = {hi_k:g}")
    for prev, k in zip(grid[:-1], grid[1:]):
        if g(k) >= 0:
            return bisect(g, k, prev, xtol=K_TOL / 10)
    raise ValueError(f"no frequency in [{lo_k:g}, {hi_k:g}] reaches the bound")


def _z_tele(t: float, k: float, n: int, mode: str) -> float:
    return k * t * float(logical_z_failure(1.0 / k, n, mode))


def k_min(n_two: int, eta: float, epsilon: float, mode: str = DEFAULT_Z_MODE) -> float:
    """Lowest teleport rate that keeps Z failures below the standard protocol's X bound at tau1."""
    if n_two < 1:
        raise ValueError("n_two must be >= 1")
    n_opt, t1 = optimal_code_size(eta, epsilon, mode)
    bound = float(logical_x_failure(t1, n_opt, NoiseParams(eta=eta, epsilon=epsilon)))
    return _upper_crossing(lambda k: _z_tele(t1, k, n_two, mode) - bound)


def tau2(n_two: int, eta: float, epsilon: float) -> float:
    return tau_x(n_two, eta, epsilon)


def k_max(n_two: int, eta: float, epsilon: float, mode: str = DEFAULT_Z_MODE):
    """Teleport rate matching Z failures to the code's own X bound at tau2; returns ``(K, tau2)``."""
    if n_two < 1:
        raise ValueError("n_two must be >= 1")
    t2 = tau2(n_two, eta, epsilon)
    bound = float(logical_x_failure(t2, n_two, NoiseParams(eta=eta, epsilon=epsilon)))
    return _upper_crossing(lambda k: _z_tele(t2, k, n_two, mode) - bound), t2


def _k_or_inf(fn, *args) -> float:
    try:
        out = fn(*args)
    except ValueError:
        return math.inf
    return out[0] if isinstance(out, tuple) else out


def frequency_curves(n_values: Sequence[int], eta: float, epsilon: float, mode: str = DEFAULT_Z_MODE):
    """K_min and K_max per code size (inf where no rate in the bracket works)."""
    kmin = np.array([_k_or_inf(k_min, n, eta, epsilon, mode) for n in n_values])
    kmax = np.array([_k_or_inf(k_max, n, eta, epsilon, mode) for n in n_values])
    return kmin, kmax


def feasible_sizes(k_lab: float, eta: float, epsilon: float, mode: str = DEFAULT_Z_MODE, n_scan: int = 400):
    """(n_min, n_max): the first sizes whose K_min, resp. K_max, drop to k_lab."""
    if k_lab <= 0:
        raise ValueError("k_lab must be positive")
    n_min = n_max = None
    for n in range(1, n_scan + 1):
        if n_min is None and _k_or_inf(k_min, n, eta, epsilon, mode) <= k_lab:
            n_min = n
        if n_max is None and _k_or_inf(k_max, n, eta, epsilon, mode) <= k_lab:
            n_max = n
        if n_min is not None and n_max is not None:
            return n_min, n_max
    raise ValueError(f"no code size up to {n_scan} is feasible at K_lab = {k_lab:g}")


def tau2_imperfect(n_two: int, k_freq: float, d_tele: float, eta: float, epsilon: float) -> float:
    """Storage time when each teleport adds a spin flip with probability d_tele."""
    if not 0 <= d_tele < 1:
        raise ValueError("d_tele must lie in [0, 1)")
    denom = n_two / (2.0 * eta) + k_freq * d_tele
    if denom <= 0:
        raise ValueError("non-positive denominator")
    return epsilon / denom


@dataclass
class LifetimeReport:
    eta: float
    epsilon: float
    n_opt: int
    tau0: float
    tau1: float
    tau2: float
    tau2_prime: float
    improvement_ratio: float
    k_min: float
    k_max: float
    n_min: int
    n_max: int
    fit_coeffs: tuple
    n_two: int
    k_lab: float
    d_tele: float
    k_tele: float
    z_mode: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit_coeffs"] = list(self.fit_coeffs)
        return d


def lifetime_report(eta: float = 1e4, epsilon: float = 0.01, n_two: int = 26, k_lab: float = 3.0,
                    d_tele: float = 0.0, k_tele: float | None = None, mode: str = DEFAULT_Z_MODE,
                    fit_etas: Sequence[float] = FIT_ETAS) -> LifetimeReport:
    """Every headline quantity for one parameter point.

    ``k_tele`` is the teleport rate used for tau2_prime; it defaults to K_max.
    """
    n_opt, t1 = optimal_code_size(eta, epsilon, mode)
    t0 = tau0(epsilon)
    kmin = k_min(n_two, eta, epsilon, mode)
    kmax, t2 = k_max(n_two, eta, epsilon, mode)
    n_min, n_max = feasible_sizes(k_lab, eta, epsilon, mode)
    k_used = kmax if k_tele is None else k_tele
    return LifetimeReport(
        eta=eta, epsilon=epsilon, n_opt=n_opt, tau0=t0, tau1=t1, tau2=t2,
        tau2_prime=tau2_imperfect(n_two, k_used, d_tele, eta, epsilon),
        improvement_ratio=t1 / t0, k_min=kmin, k_max=kmax, n_min=n_min, n_max=n_max,
        fit_coeffs=fit_power_law(fit_etas, epsilon, mode), n_two=n_two, k_lab=k_lab,
        d_tele=d_tele, k_tele=k_used, z_mode=mode,
    )
