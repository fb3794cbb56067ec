"""Truncated multivariate Taylor arithmetic ("jets") up to third order.

A :class:`Jet` carries a value array together with its first, second and
third partial derivatives with respect to ``n`` independent variables.
The derivative axes are stored *leading*: the order-``k`` coefficient has
shape ``(n,) * k + shape``.  Because the element axes trail, negative axis
arguments, ellipsis indexing and numpy broadcasting act on every
coefficient in the same way, which keeps chart formulas readable.

Derivatives are exact up to rounding; this is the hyper-dual backend of
the curvature engine.

Examples
--------
>>> import numpy as np
>>> x = Jet.variables(np.array([[1.0, 2.0]]), order=2)
>>> f = x[..., 0] ** 2 * x[..., 1]
>>> float(f.value[0]), f.grad[:, 0].tolist()
(2.0, [4.0, 1.0])
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Jet",
    "exp",
    "expm1",
    "log",
    "log1p",
    "sqrt",
    "sin",
    "cos",
    "power",
    "stack",
    "concatenate",
    "zeros_like_jet",
]

MAX_ORDER = 3


def _sym3(a2, b1):
    """Return A_ij B_k + A_ik B_j + A_jk B_i with derivative axes leading."""
    t = a2[:, :, None] * b1[None, None, :]
    return t + np.swapaxes(t, 1, 2) + np.moveaxis(t, 2, 0)


class Jet:
    """Value plus partial derivatives to a fixed order.

    Parameters
    ----------
    coeffs : list of ndarray
        ``coeffs[k]`` has shape ``(n,) * k + shape``.
    nvar : int
        Number of independent variables ``n``.
    """

    __slots__ = ("c", "nvar")
    __array_priority__ = 1000

    def __init__(self, coeffs, nvar):
        self.c = [np.asarray(ck, dtype=float) for ck in coeffs]
        self.nvar = int(nvar)
        if not 1 <= len(self.c) <= MAX_ORDER + 1:
            raise ValueError("jet order must lie in 0..3")

    # construction -------------------------------------------------------
    @classmethod
    def variables(cls, points, order=3):
        """Seed independent variables at ``points`` of shape ``(..., n)``."""
        points = np.asarray(points, dtype=float)
        n = points.shape[-1]
        shape = points.shape
        coeffs = [points.copy()]
        if order >= 1:
            eye = np.eye(n).reshape((n,) + (1,) * (len(shape) - 1) + (n,))
            coeffs.append(np.broadcast_to(eye, (n,) + shape).copy())
        for k in range(2, order + 1):
            coeffs.append(np.zeros((n,) * k + shape))
        return cls(coeffs, n)

    @classmethod
    def constant(cls, value, nvar, order):
        value = np.asarray(value, dtype=float)
        coeffs = [value] + [np.zeros((nvar,) * k + value.shape) for k in range(1, order + 1)]
        return cls(coeffs, nvar)

    # basic properties ---------------------------------------------------
    @property
    def order(self):
        return len(self.c) - 1

    @property
    def shape(self):
        return self.c[0].shape

    @property
    def ndim(self):
        return self.c[0].ndim

    @property
    def value(self):
        return self.c[0]

    @property
    def grad(self):
        return self.c[1]

    def __repr__(self):
        return f"Jet(order={self.order}, nvar={self.nvar}, shape={self.shape})"

    def trailing(self, k):
        """Order-``k`` coefficient with derivative axes moved to the end."""
        ck = self.c[k]
        if k == 0:
            return ck
        return np.moveaxis(ck, tuple(range(k)), tuple(range(-k, 0)))

    # shape helpers -------------------------------------------------------
    def _expanded(self, ndim):
        """Coefficients reshaped so the element part has ``ndim`` axes."""
        extra = ndim - self.ndim
        if extra <= 0:
            return self.c
        out = []
        for k, ck in enumerate(self.c):
            out.append(ck.reshape(ck.shape[:k] + (1,) * extra + ck.shape[k:]))
        return out

    @staticmethod
    def _align(a, b):
        ndim = max(a.ndim, b.ndim)
        order = min(a.order, b.order)
        return a._expanded(ndim)[: order + 1], b._expanded(ndim)[: order + 1]

    def _const_ndim(self, other):
        return max(self.ndim, np.ndim(other))

    def _map(self, func):
        return Jet([func(ck, k) for k, ck in enumerate(self.c)], self.nvar)

    # arithmetic ----------------------------------------------------------
    def __neg__(self):
        return Jet([-ck for ck in self.c], self.nvar)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(self, other)
            return Jet([x + y for x, y in zip(a, b)], self.nvar)
        other = np.asarray(other, dtype=float)
        cs = self._expanded(self._const_ndim(other))
        shape = np.broadcast_shapes(cs[0].shape, other.shape)
        out = [cs[0] + other]
        for k, ck in enumerate(cs[1:], start=1):
            out.append(np.broadcast_to(ck, ck.shape[:k] + shape))
        return Jet(out, self.nvar)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            cs = self._expanded(self._const_ndim(other))
            return Jet([ck * other for ck in cs], self.nvar)
        a, b = self._align(self, other)
        out = [a[0] * b[0]]
        if len(a) > 1:
            out.append(a[1] * b[0] + a[0] * b[1])
        if len(a) > 2:
            cross = a[1][:, None] * b[1][None, :]
            out.append(a[2] * b[0] + cross + np.swapaxes(cross, 0, 1) + a[0] * b[2])
        if len(a) > 3:
            out.append(a[3] * b[0] + _sym3(a[2], b[1]) + _sym3(b[2], a[1]) + a[0] * b[3])
        return Jet(out, self.nvar)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, (int, np.integer)) and 0 <= exponent <= 4:
            if exponent == 0:
                return Jet.constant(np.ones(self.shape), self.nvar, self.order)
            out = self
            for _ in range(int(exponent) - 1):
                out = out * self
            return out
        return power(self, exponent)

    def reciprocal(self):
        v = self.c[0]
        inv = 1.0 / v
        return self.compose([inv, -inv**2, 2 * inv**3, -6 * inv**4])

    # composition with univariate functions ------------------------------
    def compose(self, f):
        """Apply a univariate function given its derivatives ``f[0..3]``.

        ``f[k]`` are arrays broadcastable to ``self.shape`` holding
        ``d^k f / dt^k`` evaluated at the value of this jet.
        """
        a = self.c
        out = [np.asarray(f[0], dtype=float) * np.ones_like(a[0])]
        if len(a) > 1:
            out.append(f[1] * a[1])
        if len(a) > 2:
            out.append(f[2] * (a[1][:, None] * a[1][None, :]) + f[1] * a[2])
        if len(a) > 3:
            a111 = a[1][:, None, None] * a[1][None, :, None] * a[1][None, None, :]
            out.append(f[3] * a111 + f[2] * _sym3(a[2], a[1]) + f[1] * a[3])
        return Jet(out, self.nvar)

    # indexing and reductions --------------------------------------------
    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return Jet([ck[(slice(None),) * k + key] for k, ck in enumerate(self.c)], self.nvar)

    def sum(self, axis):
        if axis >= 0:
            axis -= self.ndim
        return Jet([ck.sum(axis=axis) for ck in self.c], self.nvar)

    def swapaxes(self, a1, a2):
        if a1 >= 0:
            a1 -= self.ndim
        if a2 >= 0:
            a2 -= self.ndim
        return Jet([np.swapaxes(ck, a1, a2) for ck in self.c], self.nvar)


def zeros_like_jet(jet, shape=None):
    shape = jet.shape if shape is None else shape
    return Jet.constant(np.zeros(shape), jet.nvar, jet.order)


def _as_jets(items):
    jets = [t for t in items if isinstance(t, Jet)]
    if not jets:
        return None
    ref = jets[0]
    order = min(t.order for t in jets)
    out = []
    for t in items:
        if not isinstance(t, Jet):
            t = Jet.constant(t, ref.nvar, order)
        out.append(t)
    ndim = max(t.ndim for t in out)
    shape = np.broadcast_shapes(*(t.shape for t in out))
    aligned = []
    for t in out:
        cs = t._expanded(ndim)[: order + 1]
        aligned.append([np.broadcast_to(ck, ck.shape[:k] + shape) for k, ck in enumerate(cs)])
    return aligned, ref.nvar, order


def stack(items, axis=-1):
    """Stack jets (or constants) along a new element axis."""
    res = _as_jets(items)
    if res is None:
        return np.stack(items, axis=axis)
    aligned, nvar, order = res
    if axis >= 0:
        axis -= aligned[0][0].ndim + 1
    return Jet([np.stack([t[k] for t in aligned], axis=axis) for k in range(order + 1)], nvar)


def concatenate(items, axis=-1):
    """Concatenate jets along an existing element axis (negative axes)."""
    if axis >= 0:
        raise ValueError("use a negative axis for jet concatenation")
    jets = [t for t in items if isinstance(t, Jet)]
    if not jets:
        return np.concatenate(items, axis=axis)
    order = min(t.order for t in jets)
    nvar = jets[0].nvar
    items = [t if isinstance(t, Jet) else Jet.constant(t, nvar, order) for t in items]
    ndim = max(t.ndim for t in items)
    cs = [t._expanded(ndim)[: order + 1] for t in items]
    return Jet([np.concatenate([c[k] for c in cs], axis=axis) for k in range(order + 1)], nvar)


# univariate elementary functions -------------------------------------------
def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    e = np.exp(x.value)
    return x.compose([e, e, e, e])


def expm1(x):
    if not isinstance(x, Jet):
        return np.expm1(x)
    e = np.exp(x.value)
    return x.compose([np.expm1(x.value), e, e, e])


def log(x):
    if not isinstance(x, Jet):
        return np.log(x)
    v = x.value
    return x.compose([np.log(v), 1 / v, -1 / v**2, 2 / v**3])


def log1p(x):
    if not isinstance(x, Jet):
        return np.log1p(x)
    w = 1 + x.value
    return x.compose([np.log1p(x.value), 1 / w, -1 / w**2, 2 / w**3])


def power(x, p):
    """``x ** p`` for real ``p`` and positive ``x``."""
    if not isinstance(x, Jet):
        return np.power(x, p)
    v = x.value
    return x.compose([v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2), p * (p - 1) * (p - 2) * v ** (p - 3)])


def sqrt(x):
    return power(x, 0.5)


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(x)
    s, c = np.sin(x.value), np.cos(x.value)
    return x.compose([s, c, -s, -c])


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(x)
    s, c = np.sin(x.value), np.cos(x.value)
    return x.compose([c, -s, -c, s])
