"""Input states of the two waveguide modes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Coherent:
    """Product of coherent states |alpha1> |alpha2>."""

    alpha1: complex
    alpha2: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha1", complex(self.alpha1))
        object.__setattr__(self, "alpha2", complex(self.alpha2))
        if not all(math.isfinite(v) for v in (self.alpha1.real, self.alpha1.imag,
                                               self.alpha2.real, self.alpha2.imag)):
            raise ValueError("coherent amplitudes must be finite")

    def swapped(self) -> "Coherent":
        return Coherent(self.alpha2, self.alpha1)


@dataclass(frozen=True)
class Fock:
    """Product of number states |n> |m>."""

    n: int
    m: int

    def __post_init__(self):
        for v in (self.n, self.m):
            if isinstance(v, bool) or int(v) != v or v < 0:
                raise ValueError("Fock occupations must be nonnegative integers")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))

    def swapped(self) -> "Fock":
        return Fock(self.m, self.n)


@dataclass(frozen=True)
class Thermal:
    """Product of thermal states with mean occupations nbar1, nbar2."""

    nbar1: float
    nbar2: float

    def __post_init__(self):
        for v in (self.nbar1, self.nbar2):
            if not math.isfinite(v) or v < 0:
                raise ValueError("thermal mean occupations must be finite and >= 0")
        object.__setattr__(self, "nbar1", float(self.nbar1))
        object.__setattr__(self, "nbar2", float(self.nbar2))

    def swapped(self) -> "Thermal":
        return Thermal(self.nbar2, self.nbar1)


InputState = Union[Coherent, Fock, Thermal]


def check_mode(mode: int) -> int:
    if mode not in (1, 2):
        raise ValueError(f"mode must be 1 or 2, got {mode!r}")
    return mode
