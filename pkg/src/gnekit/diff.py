"""Forward-mode automatic differentiation on dual scalars.

A ``Dual`` carries a value and a single tangent component.  Gradients and
Jacobians are obtained by one forward pass per input coordinate, seeding a
unit tangent.  Nesting is supported (a ``Dual`` whose components are again
``Dual``), which is how mixed second derivatives are computed.  Central
finite differences are provided as an independent cross-check.
"""

import math

import numpy as np


class NonFiniteDerivative(ValueError):
    """A derivative component evaluated to NaN or infinity."""


class Dual:
    """Scalar a + b*eps with eps^2 = 0; obeys the chain rule under +,-,*,/."""

    __slots__ = ("val", "dot")

    def __init__(self, val, dot=0.0):
        self.val = val
        self.dot = dot

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.dot + other.dot)
        return Dual(self.val + other, self.dot)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.dot - other.dot)
        return Dual(self.val - other, self.dot)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.dot)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.val * other.dot + self.dot * other.val)
        return Dual(self.val * other, self.dot * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            return Dual(self.val * inv,
                        (self.dot - self.val * inv * other.dot) * inv)
        inv = 1.0 / other
        return Dual(self.val * inv, self.dot * inv)

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        return Dual(other * inv, -other * inv * inv * self.dot)

    def __pow__(self, k):
        if isinstance(k, Dual):
            # a^b = exp(b log a); requires a > 0
            return exp(k * log(self))
        if k == 2:
            return Dual(self.val * self.val, 2.0 * self.val * self.dot)
        return Dual(self.val ** k, k * self.val ** (k - 1) * self.dot)

    def __rpow__(self, base):
        return exp(self * math.log(base))

    # -- comparisons on the value part ------------------------------------
    def __lt__(self, other):
        return self.val < (other.val if isinstance(other, Dual) else other)

    def __le__(self, other):
        return self.val <= (other.val if isinstance(other, Dual) else other)

    def __gt__(self, other):
        return self.val > (other.val if isinstance(other, Dual) else other)

    def __ge__(self, other):
        return self.val >= (other.val if isinstance(other, Dual) else other)

    def __abs__(self):
        # subgradient choice at 0: derivative 0 (documented kink behavior)
        s = 1.0 if self.val > 0 else (-1.0 if self.val < 0 else 0.0)
        return Dual(abs(self.val), s * self.dot)

    def __float__(self):
        return float(value(self))

    def __repr__(self):
        return f"Dual({self.val!r}, {self.dot!r})"


def value(x):
    """Strip all tangent components, returning the underlying float."""
    while isinstance(x, Dual):
        x = x.val
    return x


def sqrt(x):
    if isinstance(x, Dual):
        r = sqrt(x.val)
        if value(r) == 0.0:
            raise NonFiniteDerivative(
                "sqrt is non-differentiable at 0; use a smoothed form")
        return Dual(r, x.dot / (2.0 * r))
    if x < 0:
        raise NonFiniteDerivative(f"sqrt of negative value {x}")
    return math.sqrt(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.val)
        return Dual(e, e * x.dot)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.val), x.dot / x.val)
    return math.log(x)


def _seed(vec, direction, lift=float):
    out = np.empty(len(vec), dtype=object)
    for k in range(len(vec)):
        out[k] = Dual(lift(vec[k]), 1.0 if k == direction else 0.0)
    return out


def _as_object(vec):
    out = np.empty(len(vec), dtype=object)
    for k in range(len(vec)):
        out[k] = vec[k]
    return out


def grad(f, x, p=None):
    """Gradient of scalar f(x, p) with respect to x, one pass per coordinate."""
    x = np.asarray(x, dtype=float)
    n = x.size
    g = np.empty(n)
    for k in range(n):
        fx = f(_seed(x, k), p) if p is not None else f(_seed(x, k))
        g[k] = fx.dot if isinstance(fx, Dual) else 0.0
    if not np.all(np.isfinite(g)):
        raise NonFiniteDerivative(f"gradient has non-finite entries: {g}")
    return g


def jacobian(F, x, p=None):
    """Dense Jacobian of vector-valued F(x, p) with respect to x."""
    x = np.asarray(x, dtype=float)
    n = x.size
    cols = []
    for k in range(n):
        fx = F(_seed(x, k), p) if p is not None else F(_seed(x, k))
        cols.append([e.dot if isinstance(e, Dual) else 0.0 for e in fx])
    J = np.array(cols).T
    if J.size and not np.all(np.isfinite(J)):
        raise NonFiniteDerivative("Jacobian has non-finite entries")
    return J


def mixed_second(f, w, inner_idx):
    """Rows of the Hessian of scalar f(w).

    Returns the ``len(inner_idx) x len(w)`` matrix of second partials
    d^2 f / dw_i dw_j for i in ``inner_idx``, computed by nested forward
    passes (one per (i, j) pair).
    """
    w = np.asarray(w, dtype=float)
    n = w.size
    H = np.empty((len(inner_idx), n))
    for a, i in enumerate(inner_idx):
        for j in range(n):
            seeded = np.empty(n, dtype=object)
            for k in range(n):
                seeded[k] = Dual(Dual(w[k], 1.0 if k == i else 0.0),
                                 Dual(1.0 if k == j else 0.0, 0.0))
            fx = f(seeded)
            if isinstance(fx, Dual) and isinstance(fx.dot, Dual):
                H[a, j] = fx.dot.dot
            else:
                H[a, j] = 0.0
    if H.size and not np.all(np.isfinite(H)):
        raise NonFiniteDerivative("second derivatives have non-finite entries")
    return H


def fd_jacobian(F, x, p=None, base_step=1e-6):
    """Central finite-difference Jacobian, step 1e-6*max(1, |x_k|)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    cols = []
    for k in range(n):
        h = base_step * max(1.0, abs(x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        if p is not None:
            fp, fm = np.asarray(F(xp, p), float), np.asarray(F(xm, p), float)
        else:
            fp, fm = np.asarray(F(xp), float), np.asarray(F(xm), float)
        cols.append((fp - fm) / (2.0 * h))
    return np.array(cols).T


class CheckReport:
    """Outcome of an AD vs finite-difference comparison."""

    def __init__(self, max_discrepancy, tol, nonsmooth=False):
        self.max_discrepancy = max_discrepancy
        self.tol = tol
        self.nonsmooth = nonsmooth
        self.passed = max_discrepancy <= tol

    def __repr__(self):
        flag = "pass" if self.passed else "FAIL"
        return f"CheckReport({flag}, max={self.max_discrepancy:.3e}, tol={self.tol:.1e})"


def fd_check(F, x, p=None, tol=1e-6):
    """Compare the AD Jacobian of F against central finite differences."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    try:
        J_ad = jacobian(F, x, p)
    except NonFiniteDerivative:
        return CheckReport(np.inf, tol, nonsmooth=True)
    J_fd = fd_jacobian(F, x, p)
    disc = float(np.max(np.abs(J_ad - J_fd))) if J_ad.size else 0.0
    return CheckReport(disc, tol)
