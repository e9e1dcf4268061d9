"""Validated runtime view of a system configuration.

``validate`` turns a :class:`gridmkt.config.SystemConfig` into an immutable
:class:`ValidatedSystem` in canonical internal units (W, Wh, hours,
currency/Wh), with every per-step bound broadcast to a length-T array.
It also precomputes, per battery, the backward-reachable SOC tube: the
interval of SOC values at each step from which the remaining horizon
(including an optional terminal pin) stays feasible under the rate limits.
Folding the tube into each step's action box is what lets the projection
guarantee hard constraint satisfaction for arbitrary policies.

Battery power is a single signed coordinate (positive = discharge), which
enforces charge/discharge complementarity structurally. Nonzero minimum
charge/discharge rates would make the per-battery action set a disjoint
union of intervals; the projection operates on the convex hull, so minimum
rates above zero are accepted by the schema but not enforced (zero minimums,
the default, are exact).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig

# currency/MWh (file boundary) -> currency/Wh (internal)
PRICE_PER_MWH_TO_PER_WH = 1e-6


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class InvalidSystemError(Exception):
    """Raised by validate() with the full list of invariant violations."""

    def __init__(self, violations: list[Violation]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


def signed_split(p: float) -> tuple[float, float]:
    """Split a signed battery power into (charge, discharge), both >= 0.

    Exactly one of the two is nonzero (or both zero), so the
    charge * discharge = 0 complementarity condition holds by construction,
    and discharge - charge == p.
    """
    if not np.isfinite(p):
        raise ValueError(f"battery power must be finite, got {p}")
    if p >= 0.0:
        return 0.0, float(p)
    return float(-p), 0.0


def _per_step(value, T: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(T, float(arr))
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class BatteryRuntime:
    name: str
    soc_min: np.ndarray          # Wh, length T
    soc_max: np.ndarray
    charge_min: np.ndarray       # W
    charge_max: np.ndarray
    discharge_min: np.ndarray
    discharge_max: np.ndarray
    eta_charge: float
    eta_discharge: float
    initial_soc: float
    terminal_soc: float | None
    cost_per_throughput: float   # currency/Wh
    tube_lo: np.ndarray          # Wh, length T+1 (index T = post-horizon state)
    tube_hi: np.ndarray


@dataclass(frozen=True)
class RenewableRuntime:
    name: str
    nameplate: float
    curtailable: bool
    curtail_penalty_a: float     # currency/(W^2 h)


@dataclass(frozen=True)
class ControllableRuntime:
    name: str
    inject_min: np.ndarray       # W, length T
    inject_max: np.ndarray


@dataclass(frozen=True)
class MarketRuntime:
    lt_price: np.ndarray         # currency/Wh, length T
    lt_cap: np.ndarray           # Wh, length T
    lt_shortfall_mode: str
    lt_penalty_rate: float       # currency/Wh
    allow_rt_purchase: bool


@dataclass(frozen=True)
class ValidatedSystem:
    """Immutable internal-unit system; safe to share across workers."""

    T: int
    dt: float                    # hours
    batteries: tuple[BatteryRuntime, ...]
    renewables: tuple[RenewableRuntime, ...]
    controllables: tuple[ControllableRuntime, ...]
    market: MarketRuntime
    config: SystemConfig = field(repr=False)

    @property
    def n_batteries(self) -> int:
        return len(self.batteries)

    @property
    def n_renewables(self) -> int:
        return len(self.renewables)

    @property
    def n_controllables(self) -> int:
        return len(self.controllables)

    # Flattened action layout: [battery powers | renewable setpoints |
    # controllable setpoints | lt quantity]. Shared by projection, env,
    # oracle and the PPO action head.
    @property
    def action_dim(self) -> int:
        return self.n_batteries + self.n_renewables + self.n_controllables + 1

    @property
    def battery_slice(self) -> slice:
        return slice(0, self.n_batteries)

    @property
    def renewable_slice(self) -> slice:
        nb = self.n_batteries
        return slice(nb, nb + self.n_renewables)

    @property
    def controllable_slice(self) -> slice:
        n = self.n_batteries + self.n_renewables
        return slice(n, n + self.n_controllables)

    @property
    def lt_index(self) -> int:
        return self.action_dim - 1

    def hour_of_day(self, t: int) -> float:
        return (t * self.dt) % 24.0


def _battery_tube(
    soc_min: np.ndarray,
    soc_max: np.ndarray,
    charge_max: np.ndarray,
    discharge_max: np.ndarray,
    eta_c: float,
    eta_d: float,
    dt: float,
    terminal_soc: float | None,
) -> tuple[np.ndarray, np.ndarray]:
    """Backward-reachable SOC interval per step, including index T.

    The post-horizon state is bounded by the last step's SOC bounds, or
    pinned to terminal_soc when set.
    """
    T = len(soc_min)
    lo = np.empty(T + 1)
    hi = np.empty(T + 1)
    if terminal_soc is not None:
        lo[T] = hi[T] = terminal_soc
    else:
        lo[T], hi[T] = soc_min[T - 1], soc_max[T - 1]
    for t in range(T - 1, -1, -1):
        reach_lo = lo[t + 1] - eta_c * charge_max[t] * dt
        reach_hi = hi[t + 1] + discharge_max[t] * dt / eta_d
        lo[t] = max(soc_min[t], reach_lo)
        hi[t] = min(soc_max[t], reach_hi)
    lo.setflags(write=False)
    hi.setflags(write=False)
    return lo, hi


def collect_violations(config: SystemConfig) -> list[Violation]:
    """Every violated system invariant, each with the offending field path."""
    v: list[Violation] = []
    T = config.time.horizon_steps

    def check_len(path: str, value) -> np.ndarray | None:
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 0:
            return np.full(T, float(arr))
        if len(arr) != T:
            v.append(Violation(path, f"per-step array has length {len(arr)}, expected T={T}"))
            return None
        return arr

    names = [b.name for b in config.batteries] + [r.name for r in config.renewables] + [
        c.name for c in config.controllables
    ]
    if not names:
        v.append(Violation("(root)", "at least one battery, renewable or controllable required"))
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        v.append(Violation("(root)", f"duplicate device names: {dupes}"))

    for i, b in enumerate(config.batteries):
        p = f"batteries[{i}]"
        soc_min = check_len(f"{p}.soc_min", b.soc_min)
        soc_max = check_len(f"{p}.soc_max", b.soc_max)
        ch_min = check_len(f"{p}.charge_min", b.charge_min)
        ch_max = check_len(f"{p}.charge_max", b.charge_max)
        dis_min = check_len(f"{p}.discharge_min", b.discharge_min)
        dis_max = check_len(f"{p}.discharge_max", b.discharge_max)
        if soc_min is not None and np.any(soc_min < 0):
            v.append(Violation(f"{p}.soc_min", "soc_min must be >= 0"))
        if soc_min is not None and soc_max is not None and np.any(soc_min > soc_max):
            t = int(np.argmax(soc_min > soc_max))
            v.append(Violation(f"{p}.soc_min", f"soc_min <= soc_max violated at step {t}"))
        for lo, hi, name in ((ch_min, ch_max, "charge"), (dis_min, dis_max, "discharge")):
            if lo is None or hi is None:
                continue
            if np.any(lo < 0):
                v.append(Violation(f"{p}.{name}_min", f"{name}_min must be >= 0"))
            if np.any(lo > hi):
                t = int(np.argmax(lo > hi))
                v.append(Violation(f"{p}.{name}_min", f"{name}_min <= {name}_max violated at step {t}"))
        if soc_min is not None and soc_max is not None:
            if b.initial_soc < soc_min[0] or b.initial_soc > soc_max[0]:
                v.append(Violation(f"{p}.initial_soc", "initial_soc outside [soc_min, soc_max] at step 0"))
            if b.terminal_soc is not None and (
                b.terminal_soc < soc_min[T - 1] or b.terminal_soc > soc_max[T - 1]
            ):
                v.append(Violation(f"{p}.terminal_soc", "terminal_soc outside final SOC bounds"))
            if ch_max is not None and dis_max is not None and not np.any(soc_min > soc_max):
                lo, hi = _battery_tube(
                    soc_min, soc_max, ch_max, dis_max,
                    b.eta_charge, b.eta_discharge, config.time.step_duration, b.terminal_soc,
                )
                if np.any(lo > hi):
                    t = int(np.argmax(lo > hi))
                    v.append(Violation(p, f"SOC bounds unreachable at step {t} (terminal/per-step constraints conflict)"))
                elif not (lo[0] <= b.initial_soc <= hi[0]):
                    v.append(Violation(
                        f"{p}.initial_soc",
                        "horizon constraints unreachable from initial_soc under rate limits",
                    ))

    for i, c in enumerate(config.controllables):
        p = f"controllables[{i}]"
        imin = check_len(f"{p}.inject_min", c.inject_min)
        imax = check_len(f"{p}.inject_max", c.inject_max)
        if imin is not None and imax is not None and np.any(imin > imax):
            t = int(np.argmax(imin > imax))
            v.append(Violation(f"{p}.inject_min", f"inject_min <= inject_max violated at step {t}"))

    lt_cap = check_len("market.lt_cap", config.market.lt_cap)
    if lt_cap is not None and np.any(lt_cap < 0):
        v.append(Violation("market.lt_cap", "lt_cap must be >= 0"))
    check_len("market.lt_price", config.market.lt_price)
    return v


def validate(config: SystemConfig) -> ValidatedSystem:
    """Build the immutable internal-unit system, or raise with all violations."""
    violations = collect_violations(config)
    if violations:
        raise InvalidSystemError(violations)

    T = config.time.horizon_steps
    dt = config.time.step_duration

    batteries = []
    for b in config.batteries:
        soc_min = _per_step(b.soc_min, T)
        soc_max = _per_step(b.soc_max, T)
        ch_max = _per_step(b.charge_max, T)
        dis_max = _per_step(b.discharge_max, T)
        tube_lo, tube_hi = _battery_tube(
            soc_min, soc_max, ch_max, dis_max,
            b.eta_charge, b.eta_discharge, dt, b.terminal_soc,
        )
        batteries.append(BatteryRuntime(
            name=b.name,
            soc_min=soc_min,
            soc_max=soc_max,
            charge_min=_per_step(b.charge_min, T),
            charge_max=ch_max,
            discharge_min=_per_step(b.discharge_min, T),
            discharge_max=dis_max,
            eta_charge=b.eta_charge,
            eta_discharge=b.eta_discharge,
            initial_soc=b.initial_soc,
            terminal_soc=b.terminal_soc,
            cost_per_throughput=b.cost_per_throughput * PRICE_PER_MWH_TO_PER_WH,
            tube_lo=tube_lo,
            tube_hi=tube_hi,
        ))

    renewables = [
        RenewableRuntime(
            name=r.name,
            nameplate=r.nameplate,
            curtailable=r.curtailable,
            curtail_penalty_a=r.curtail_penalty_a,
        )
        for r in config.renewables
    ]
    controllables = [
        ControllableRuntime(
            name=c.name,
            inject_min=_per_step(c.inject_min, T),
            inject_max=_per_step(c.inject_max, T),
        )
        for c in config.controllables
    ]
    m = config.market
    market = MarketRuntime(
        lt_price=_per_step(np.asarray(m.lt_price, dtype=float) * PRICE_PER_MWH_TO_PER_WH, T),
        lt_cap=_per_step(m.lt_cap, T),
        lt_shortfall_mode=m.lt_shortfall_mode,
        lt_penalty_rate=m.lt_penalty_rate * PRICE_PER_MWH_TO_PER_WH,
        allow_rt_purchase=m.allow_rt_purchase,
    )
    return ValidatedSystem(
        T=T,
        dt=dt,
        batteries=tuple(batteries),
        renewables=tuple(renewables),
        controllables=tuple(controllables),
        market=market,
        config=config,
    )
