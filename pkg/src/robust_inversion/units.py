"""Parsing of quantities with unit suffixes; everything is converted to SI angular units."""

from __future__ import annotations

import argparse
import math
import re

TWO_PI = 2.0 * math.pi

TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "μs": 1e-6, "ns": 1e-9}
FREQUENCY_UNITS = {
    "rad/s": 1.0,
    "rad/ms": 1e3,
    "rad/us": 1e6,
    "2pi-Hz": TWO_PI,
    "2pi-kHz": TWO_PI * 1e3,
    "2pi-MHz": TWO_PI * 1e6,
}
RATE_UNITS = {
    "1/s": 1.0, "/s": 1.0, "rad/s": 1.0,
    "1/ms": 1e3, "/ms": 1e3,
    "1/us": 1e6, "/us": 1e6, "rad/us": 1e6,
}
SQRT_RATE_UNITS = {"1/sqrt(s)": 1.0, "1/sqrt(ms)": math.sqrt(1e3), "1/sqrt(us)": 1e3}

_QUANTITY = re.compile(
    r"^\s*(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(?:[*x]\s*)?(?P<unit>\S*)\s*$"
)


def parse_quantity(text: str, units: dict[str, float], default: float = 1.0) -> float:
    """``"3us"`` -> 3e-06 with ``TIME_UNITS``; a bare number is scaled by ``default``."""
    m = _QUANTITY.match(str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse quantity {text!r}")
    value = float(m["num"])
    unit = m["unit"]
    if not unit:
        return value * default
    if unit not in units:
        raise argparse.ArgumentTypeError(f"unknown unit {unit!r}; expected one of {', '.join(units)}")
    return value * units[unit]


def parse_time(text: str) -> float:
    return parse_quantity(text, TIME_UNITS)


def parse_frequency(text: str) -> float:
    return parse_quantity(text, FREQUENCY_UNITS)


def parse_rate(text: str) -> float:
    return parse_quantity(text, RATE_UNITS)


def parse_sqrt_rate(text: str) -> float:
    return parse_quantity(text, SQRT_RATE_UNITS)
