"""Closed vocabulary of real functions used for drives E(t) and potentials V(x).

Each descriptor has a canonical string form, e.g. ``gaussian(0.1, 1)``,
which round-trips through :func:`parse_function`.
"""
import json
import re
from dataclasses import dataclass

import numpy as np


class DescriptorError(ValueError):
    pass


KINDS = ("zero", "constant", "sin", "gaussian", "bump", "tabulated")


def _fmt(v):
    return repr(float(v))


@dataclass(frozen=True)
class Func:
    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DescriptorError("unknown function kind %r" % self.kind)
        nargs = {"zero": (0,), "constant": (1,), "sin": (2, 3), "gaussian": (2,), "bump": (2,)}
        if self.kind in nargs and len(self.params) not in nargs[self.kind]:
            raise DescriptorError("%s takes %s parameters" % (self.kind, " or ".join(map(str, nargs[self.kind]))))
        if self.kind == "gaussian" and self.params[1] <= 0:
            raise DescriptorError("gaussian width must be positive")
        if self.kind == "bump" and self.params[1] <= 0:
            raise DescriptorError("bump half-width must be positive")
        if self.kind == "tabulated":
            x0, dx, vals = self.params
            if dx <= 0 or len(vals) < 2:
                raise DescriptorError("tabulated needs dx > 0 and at least two samples")

    @property
    def shift(self):
        """Phase offset of sin(a, b, c) = a sin(b x + c); zero otherwise."""
        return self.params[2] if self.kind == "sin" and len(self.params) == 3 else 0.0

    # evaluation

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        if k == "zero":
            return np.zeros_like(x)
        if k == "constant":
            return np.full_like(x, p[0])
        if k == "sin":
            return p[0] * np.sin(p[1] * x + self.shift)
        if k == "gaussian":
            return p[0] * np.exp(-(x / p[1]) ** 2)
        if k == "bump":
            u = x / p[1]
            inside = np.abs(u) < 1
            out = np.zeros_like(x)
            out[inside] = p[0] * np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
            return out
        x0, dx, vals = p
        grid = x0 + dx * np.arange(len(vals))
        return np.interp(x, grid, np.asarray(vals), left=vals[0], right=vals[-1])

    @property
    def has_derivative(self):
        return self.kind != "tabulated"

    def derivative(self, x):
        """Analytic first derivative; None for tabulated data."""
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        if k in ("zero", "constant"):
            return np.zeros_like(x)
        if k == "sin":
            return p[0] * p[1] * np.cos(p[1] * x + self.shift)
        if k == "gaussian":
            return -2.0 * x / p[1] ** 2 * self(x)
        if k == "bump":
            u = x / p[1]
            inside = np.abs(u) < 1
            out = np.zeros_like(x)
            ui = u[inside]
            out[inside] = self(x[inside]) * (-2.0 * ui / (1.0 - ui ** 2) ** 2) / p[1]
            return out
        return None

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        if k in ("zero", "constant"):
            return np.zeros_like(x)
        if k == "sin":
            return -p[0] * p[1] ** 2 * np.sin(p[1] * x + self.shift)
        if k == "gaussian":
            s2 = p[1] ** 2
            return (4.0 * x * x / s2 ** 2 - 2.0 / s2) * self(x)
        return None

    def sup_derivative(self):
        """Closed-form sup |f'| where one exists."""
        k, p = self.kind, self.params
        if k in ("zero", "constant"):
            return 0.0
        if k == "sin":
            return abs(p[0] * p[1])
        if k == "gaussian":
            # max of |2x/s^2 a e^{-x^2/s^2}| sits at x = s/sqrt(2)
            return abs(p[0]) * np.sqrt(2.0 / np.e) / p[1]
        return None

    # serialization

    def __str__(self):
        if self.kind == "zero":
            return "zero"
        if self.kind == "tabulated":
            x0, dx, vals = self.params
            return "tabulated(%s, %s, %s)" % (_fmt(x0), _fmt(dx), json.dumps([float(v) for v in vals]))
        return "%s(%s)" % (self.kind, ", ".join(_fmt(v) for v in self.params))


_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$", re.S)


def parse_function(text):
    """Parse a descriptor string such as ``sin(1, 2)`` or ``zero``."""
    if isinstance(text, Func):
        return text
    m = _CALL.match(str(text))
    if not m:
        raise DescriptorError("cannot parse function descriptor %r" % text)
    kind, body = m.group(1), m.group(2)
    if kind not in KINDS:
        raise DescriptorError("unknown function kind %r" % kind)
    if kind == "zero":
        if body not in (None, ""):
            raise DescriptorError("zero takes no parameters")
        return Func("zero")
    if body is None:
        raise DescriptorError("%s needs parameters" % kind)
    if kind == "tabulated":
        try:
            head, _, tail = body.partition("[")
            x0, dx = [float(v) for v in head.strip().rstrip(",").split(",")]
            vals = tuple(float(v) for v in json.loads("[" + tail))
        except (ValueError, json.JSONDecodeError) as exc:
            raise DescriptorError("bad tabulated descriptor: %s" % exc) from None
        return Func("tabulated", (x0, dx, vals))
    try:
        params = tuple(float(v) for v in body.split(","))
    except ValueError:
        raise DescriptorError("non-numeric parameter in %r" % text) from None
    if not all(np.isfinite(params)):
        raise DescriptorError("non-finite parameter in %r" % text)
    return Func(kind, params)


def tabulate(f, x0, dx, n):
    """Sample f on a uniform grid and return a tabulated descriptor."""
    xs = x0 + dx * np.arange(n)
    return Func("tabulated", (float(x0), float(dx), tuple(float(v) for v in f(xs))))


ZERO = Func("zero")


def cosine(a, b):
    """a cos(b x) written in the vocabulary as a phase-shifted sine."""
    return Func("sin", (float(a), float(b), np.pi / 2))
