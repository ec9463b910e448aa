# src/besov/paralinear.py

from dataclasses import dataclass
from typing import Callable
import numpy as np

from src.spectral.core import apply_pointwise, dealiased_product
from src.besov.paraproducts import paraproduct, resonant
from src.utils.errors import ArgumentError


@dataclass(frozen=True)
class Nonlinearity:
    """A scalar function F together with its first three derivatives."""
    name: str
    value: Callable
    d1: Callable
    d2: Callable
    d3: Callable

    def __call__(self, x):
        return self.value(x)

    @property
    def is_zero(self):
        return self.name == "zero"

    @classmethod
    def zero(cls):
        z = lambda x: np.zeros_like(x)
        return cls("zero", z, z, z, z)

    @classmethod
    def constant(cls, c):
        z = lambda x: np.zeros_like(x)
        return cls(f"constant:{c}", lambda x: np.full_like(x, c), z, z, z)

    @classmethod
    def linear(cls, a=1.0):
        z = lambda x: np.zeros_like(x)
        return cls(f"linear:{a}" if a != 1.0 else "linear", lambda x: a * x, lambda x: np.full_like(x, a), z, z)

    @classmethod
    def sine(cls, a=1.0):
        return cls(f"sine:{a}", lambda x: a * np.sin(x), lambda x: a * np.cos(x),
                   lambda x: -a * np.sin(x), lambda x: -a * np.cos(x))

    @classmethod
    def square(cls):
        z = lambda x: np.zeros_like(x)
        return cls("square", lambda x: x ** 2, lambda x: 2 * x, lambda x: np.full_like(x, 2.0), z)

    @classmethod
    def parse(cls, text):
        """Parse 'zero', 'linear', 'linear:a', 'sine:a' or 'square'."""
        name, _, arg = str(text).partition(":")
        try:
            if name == "zero":
                return cls.zero()
            if name == "linear":
                return cls.linear(float(arg) if arg else 1.0)
            if name == "sine":
                return cls.sine(float(arg) if arg else 1.0)
            if name == "square":
                return cls.square()
            if name == "constant":
                return cls.constant(float(arg))
        except ValueError as e:
            raise ArgumentError(f"Bad nonlinearity parameter in {text!r}") from e
        raise ArgumentError(f"Unknown nonlinearity {text!r}")


def paralinearize(F, f, partition):
    """
    R_F(f) = F(f) - F'(f) < f, with F(f) and F'(f) evaluated at the grid points.
    """
    value = apply_pointwise(F.value, f)
    slope = apply_pointwise(F.d1, f)
    return value - paraproduct(slope, f, partition)


def resonant_remainder(F, f, g, partition):
    """Pi_F(f, g) = F(f) o g - F'(f) (f o g)."""
    value = apply_pointwise(F.value, f)
    slope = apply_pointwise(F.d1, f)
    return resonant(value, g, partition) - dealiased_product(slope, resonant(f, g, partition))
