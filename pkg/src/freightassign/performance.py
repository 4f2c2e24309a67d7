"""Link performance functions: travel time, derivative and integral.

Road links use the BPR curve ``t0 * (1 + 0.15 (x/C)^4)``. Rail links use
``t0 * (1 + ((x + x')/C)^beta)`` where ``x'`` is the flow on the opposite
direction of the same track. Terminals and connectors have a fixed delay.
"""

from __future__ import annotations

from dataclasses import dataclass

BPR_COEFFICIENT = 0.15
BPR_EXPONENT = 4
DEFAULT_BETA = 4.0
TESTED_BETAS = (2.0, 4.0, 7.0, 15.0)

# flows above SATURATION_RATIO * capacity are rejected instead of overflowing
SATURATION_RATIO = 1e6


class SaturationError(OverflowError):
    pass


def _check_flow(x, capacity):
    if not x >= 0:
        raise ValueError(f"flow must be non-negative, got {x}")
    if x > SATURATION_RATIO * capacity:
        raise SaturationError(f"flow {x} exceeds {SATURATION_RATIO:g} x capacity {capacity}")


@dataclass(frozen=True)
class RoadLpf:
    t0: float
    capacity: float

    def __post_init__(self):
        if not (self.t0 > 0 and self.capacity > 0):
            raise ValueError(f"RoadLpf needs t0 > 0 and capacity > 0, got {self}")


@dataclass(frozen=True)
class RailLpf:
    t0: float
    capacity: float
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if not (self.t0 > 0 and self.capacity > 0):
            raise ValueError(f"RailLpf needs t0 > 0 and capacity > 0, got {self}")
        if not self.beta >= 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")


@dataclass(frozen=True)
class FixedDelay:
    t0: float

    def __post_init__(self):
        if not self.t0 >= 0:
            raise ValueError(f"fixed delay must be >= 0, got {self.t0}")


def road_time(lpf: RoadLpf, x: float) -> float:
    _check_flow(x, lpf.capacity)
    return lpf.t0 * (1.0 + BPR_COEFFICIENT * (x / lpf.capacity) ** BPR_EXPONENT)


def road_time_deriv(lpf: RoadLpf, x: float) -> float:
    _check_flow(x, lpf.capacity)
    return lpf.t0 * BPR_COEFFICIENT * BPR_EXPONENT * x**3 / lpf.capacity**4


def road_time_integral(lpf: RoadLpf, x: float) -> float:
    """Closed-form integral of :func:`road_time` from 0 to ``x``."""
    _check_flow(x, lpf.capacity)
    coef = BPR_COEFFICIENT / (BPR_EXPONENT + 1)
    return lpf.t0 * (x + coef * x**5 / lpf.capacity**4)


def rail_time(lpf: RailLpf, x: float, x_opp: float = 0.0) -> float:
    _check_flow(x, lpf.capacity)
    _check_flow(x_opp, lpf.capacity)
    y = x + x_opp
    _check_flow(y, lpf.capacity)
    return lpf.t0 * (1.0 + (y / lpf.capacity) ** lpf.beta)


def rail_time_deriv(lpf: RailLpf, x: float, x_opp: float = 0.0) -> float:
    """Partial derivative of :func:`rail_time` with respect to own-direction flow."""
    _check_flow(x, lpf.capacity)
    _check_flow(x_opp, lpf.capacity)
    y = x + x_opp
    _check_flow(y, lpf.capacity)
    return lpf.t0 * lpf.beta * y ** (lpf.beta - 1) / lpf.capacity**lpf.beta


def rail_time_integral(lpf: RailLpf, y: float) -> float:
    """Integral of the rail time over combined twin flow, from 0 to ``y``."""
    _check_flow(y, lpf.capacity)
    b = lpf.beta
    return lpf.t0 * (y + y ** (b + 1) / ((b + 1) * lpf.capacity**b))


def lpf_for(link, beta: float = DEFAULT_BETA):
    """Performance function object for a network link.

    A link-level ``beta`` overrides the network-wide one.
    """
    if link.kind == "road":
        return RoadLpf(link.free_flow_time, link.capacity)
    if link.kind == "rail":
        return RailLpf(link.free_flow_time, link.capacity, link.beta if link.beta is not None else beta)
    return FixedDelay(link.free_flow_time)
