"""Arithmetic and ordering on the extended real line [-inf, +inf].

Scalar values are :class:`ExtReal` objects. Vectorized code works on float
arrays where ``np.inf`` and ``-np.inf`` encode the two infinite variants;
the ``*_array`` helpers enforce the same contract as the scalar operations.
"""
import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Union

import numpy as np

from nlperspective.exceptions import IndeterminateForm, ScaleNotPositive

POS_INF_TEXT = "+inf"
NEG_INF_TEXT = "-inf"
_NEG_INF_ALIASES = ("-inf", "−inf", "-infinity", "-Infinity")
_POS_INF_ALIASES = ("+inf", "inf", "infinity", "+Infinity", "Infinity")


@total_ordering
@dataclass(frozen=True)
class ExtReal:
    """A value in [-inf, +inf]; the payload is never NaN."""

    value: float

    def __post_init__(self):
        value = float(self.value)
        if math.isnan(value):
            raise IndeterminateForm("NaN is not an extended real")
        object.__setattr__(self, "value", value)

    @classmethod
    def finite(cls, value: float) -> "ExtReal":
        if not math.isfinite(value):
            raise IndeterminateForm(f"Finite payload expected, got {value}")
        return cls(value)

    @classmethod
    def pos_inf(cls) -> "ExtReal":
        return cls(math.inf)

    @classmethod
    def neg_inf(cls) -> "ExtReal":
        return cls(-math.inf)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    @property
    def is_pos_inf(self) -> bool:
        return self.value == math.inf

    @property
    def is_neg_inf(self) -> bool:
        return self.value == -math.inf

    def __lt__(self, other) -> bool:
        return self.value < to_ext(other).value

    def __eq__(self, other) -> bool:
        if not isinstance(other, (ExtReal, int, float)):
            return NotImplemented
        return self.value == to_ext(other).value

    def __hash__(self) -> int:
        return hash(self.value)

    def __add__(self, other) -> "ExtReal":
        return add(self, to_ext(other))

    __radd__ = __add__

    def __neg__(self) -> "ExtReal":
        return ExtReal(-self.value)

    def __float__(self) -> float:
        return self.value

    def __str__(self) -> str:
        return render(self.value)

    def __repr__(self) -> str:
        return f"ExtReal({render(self.value)})"


POS_INF = ExtReal.pos_inf()
NEG_INF = ExtReal.neg_inf()


def to_ext(value: Union[ExtReal, float, int]) -> ExtReal:
    if isinstance(value, ExtReal):
        return value
    return ExtReal(float(value))


def add(a: ExtReal, b: ExtReal) -> ExtReal:
    if (a.is_pos_inf and b.is_neg_inf) or (a.is_neg_inf and b.is_pos_inf):
        raise IndeterminateForm("(+inf) + (-inf) is undefined")
    return ExtReal(a.value + b.value)


def scale(c: float, a: ExtReal) -> ExtReal:
    """Multiply by a finite, strictly positive scalar."""
    if not (math.isfinite(c) and c > 0):
        raise ScaleNotPositive(f"Cannot scale by {c}")
    return ExtReal(c * a.value)


def render(value: Union[ExtReal, float]) -> str:
    value = float(value)
    if value == math.inf:
        return POS_INF_TEXT
    if value == -math.inf:
        return NEG_INF_TEXT
    return repr(value)


def parse(text: str) -> ExtReal:
    token = text.strip()
    if token in _POS_INF_ALIASES:
        return POS_INF
    if token in _NEG_INF_ALIASES:
        return NEG_INF
    try:
        return ExtReal(float(token))
    except ValueError as exc:
        raise IndeterminateForm(f"Not an extended real literal: {text!r}") from exc


def check_no_nan(values: np.ndarray, context: str = "evaluation") -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if np.isnan(values).any():
        raise IndeterminateForm(f"NaN produced during {context}")
    return values


def add_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    clash = (np.isposinf(a) & np.isneginf(b)) | (np.isneginf(a) & np.isposinf(b))
    if clash.any():
        raise IndeterminateForm("(+inf) + (-inf) is undefined")
    return a + b


def scale_array(c: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Elementwise c*a with c finite and > 0 wherever it is used."""
    c = np.asarray(c, dtype=float)
    if not (np.isfinite(c).all() and (c > 0).all()):
        raise ScaleNotPositive("Cannot scale by a non-positive or infinite factor")
    return c * np.asarray(a, dtype=float)
