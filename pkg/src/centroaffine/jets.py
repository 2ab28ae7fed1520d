"""
Truncated multivariate Taylor series ("jets").

A jet in ``nvars`` variables of order ``order`` (4 throughout the package)
stores one coefficient per multi-index ``alpha`` with ``|alpha| <= order``;
the coefficient of ``alpha`` is ``d^alpha f / alpha!`` at the base point.
Coefficients live in a dense array whose slots follow graded lexicographic
order: degree ascending, and inside one degree the exponent tuples in
descending lexicographic order, so for two variables the layout is

    1, u1, u2, u1^2, u1 u2, u2^2, u1^3, ...

Two layers are exposed:

* :class:`JetSpace` works on raw ``ndarray`` stacks of shape ``(..., size)``
  and is what the geometry code uses (batched, no Python object per entry);
* :class:`TaylorJet` is an immutable scalar wrapper with operator overloading,
  used by the expression evaluator and the surface catalog.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import DomainError, SingularJetError, SingularSystemError

ORDER = 4
PIVOT_RTOL = 1e-12


def multi_indices(nvars, order=ORDER):
    """All exponent tuples of total degree <= ``order`` in graded lex order."""
    out = []
    for d in range(order + 1):
        block = [
            alpha
            for alpha in itertools.product(range(d, -1, -1), repeat=nvars)
            if sum(alpha) == d
        ]
        out.extend(block)
    return out


class JetSpace:
    """Index tables and batched arithmetic for jets of a fixed shape."""

    def __init__(self, nvars, order=ORDER):
        if nvars < 1:
            raise ValueError("nvars must be >= 1")
        self.nvars = nvars
        self.order = order
        self.alphas = multi_indices(nvars, order)
        self.size = len(self.alphas)
        assert self.size == math.comb(nvars + order, order)
        self.index = {a: k for k, a in enumerate(self.alphas)}
        self.degree = np.array([sum(a) for a in self.alphas])
        self.alpha_factorial = np.array(
            [math.prod(math.factorial(e) for e in a) for a in self.alphas], dtype=float
        )

        pairs = []
        for i, a in enumerate(self.alphas):
            for j, b in enumerate(self.alphas):
                if sum(a) + sum(b) <= order:
                    c = tuple(x + y for x, y in zip(a, b))
                    pairs.append((self.index[c], i, j))
        pairs.sort()
        ic, ia, ib = (np.array(col, dtype=np.int64) for col in zip(*pairs))
        self._ia, self._ib, self._ic = ia, ib, ic
        self._starts = np.searchsorted(ic, np.arange(self.size)).astype(np.int64)

        # d/du_i: coefficient of alpha comes from alpha + e_i times (alpha_i + 1)
        self._dsrc = np.zeros((nvars, self.size), dtype=np.int64)
        self._dfac = np.zeros((nvars, self.size))
        for i in range(nvars):
            for k, a in enumerate(self.alphas):
                if sum(a) < order:
                    up = list(a)
                    up[i] += 1
                    self._dsrc[i, k] = self.index[tuple(up)]
                    self._dfac[i, k] = a[i] + 1

    def __repr__(self):
        return f"JetSpace(nvars={self.nvars}, order={self.order})"

    # construction -------------------------------------------------------

    def zeros(self, shape=()):
        return np.zeros(tuple(shape) + (self.size,))

    def constant(self, value):
        value = np.asarray(value, dtype=float)
        out = np.zeros(value.shape + (self.size,))
        out[..., 0] = value
        return out

    def variable(self, index, value=0.0):
        if not 0 <= index < self.nvars:
            raise IndexError(f"variable index {index} out of range for nvars={self.nvars}")
        out = self.zeros()
        out[0] = value
        out[1 + index] = 1.0
        return out

    def slot(self, alpha):
        alpha = tuple(int(e) for e in alpha)
        if len(alpha) != self.nvars or any(e < 0 for e in alpha):
            raise ValueError(f"bad multi-index {alpha}")
        if sum(alpha) > self.order:
            raise ValueError(f"multi-index {alpha} exceeds order {self.order}")
        return self.index[alpha]

    # arithmetic ---------------------------------------------------------

    def mul(self, a, b):
        """Truncated product, broadcasting over leading axes."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        a2 = np.ascontiguousarray(np.broadcast_to(a, shape + (self.size,))).reshape(-1, self.size)
        b2 = np.ascontiguousarray(np.broadcast_to(b, shape + (self.size,))).reshape(-1, self.size)
        out = _kernels.truncated_mul(a2, b2, self._ia, self._ib, self._ic, self._starts)
        return out.reshape(shape + (self.size,))

    def recip(self, a):
        a = np.asarray(a, dtype=float)
        a0 = a[..., :1]
        if np.any(a0 == 0.0):
            raise SingularJetError("reciprocal of a jet with zero constant term")
        # 1/(a0 (1 + t)) = (1/a0) sum (-t)^k, t nilpotent of index order+1
        t = a / a0
        t[..., 0] = 0.0
        acc = self.constant(np.ones(a.shape[:-1]))
        for _ in range(self.order):
            acc = self.constant(np.ones(a.shape[:-1])) - self.mul(t, acc)
        return acc / a0

    def div(self, a, b):
        return self.mul(a, self.recip(b))

    def compose(self, a, derivs):
        """``f(a)`` given ``derivs[k] = f^(k)(a0)`` for k = 0..order (Horner in a - a0)."""
        a = np.asarray(a, dtype=float)
        t = a.copy()
        t[..., 0] = 0.0
        derivs = [np.asarray(d, dtype=float) for d in derivs]
        acc = self.constant(derivs[self.order] / math.factorial(self.order))
        for k in range(self.order - 1, -1, -1):
            acc = self.mul(t, acc)
            acc[..., 0] += derivs[k] / math.factorial(k)
        return acc

    def deriv(self, a, i):
        """Partial derivative in variable ``i``; top-degree coefficients become 0.

        The result is exact through degree ``order - 1`` only.
        """
        a = np.asarray(a, dtype=float)
        return a[..., self._dsrc[i]] * self._dfac[i]

    def grad(self, a):
        """Stack of all partial derivatives along a new axis just before the coefficients."""
        return np.stack([self.deriv(a, i) for i in range(self.nvars)], axis=-2)

    def truncate(self, a, degree):
        a = np.array(a, dtype=float)
        a[..., self.degree > degree] = 0.0
        return a

    def partials(self, a):
        """Raw partial derivatives ``d^alpha f`` for every slot."""
        return np.asarray(a, dtype=float) * self.alpha_factorial

    # jet-valued linear algebra -------------------------------------------

    def matmul(self, A, B):
        """Jet matrix product over the axis pair (-3 of A, -3 of B)."""
        return self.mul(A[..., :, :, None, :], B[..., None, :, :, :]).sum(axis=-3)

    def solve(self, A, b):
        """Solve ``A x = b`` for jet matrices.

        ``A`` has shape (k, k, size); ``b`` has shape (k, size) or (k, r, size).
        Gaussian elimination with partial pivoting on the constant terms.
        """
        A = np.array(A, dtype=float)
        b = np.array(b, dtype=float)
        k = A.shape[0]
        if A.shape[:2] != (k, k):
            raise ValueError("jet matrix must be square")
        vector = b.ndim == 2
        if vector:
            b = b[:, None, :]
        if b.shape[0] != k:
            raise ValueError("right-hand side has wrong length")

        rowmax = np.abs(A[:, :, 0]).max(axis=1)
        for col in range(k):
            piv = col + int(np.argmax(np.abs(A[col:, col, 0])))
            if not abs(A[piv, col, 0]) > PIVOT_RTOL * rowmax[piv]:
                raise SingularSystemError(f"constant-term matrix is singular at column {col}")
            if piv != col:
                A[[col, piv]] = A[[piv, col]]
                b[[col, piv]] = b[[piv, col]]
                rowmax[[col, piv]] = rowmax[[piv, col]]
            if col + 1 == k:
                break
            f = self.div(A[col + 1:, col], A[col, col])
            A[col + 1:, col:] -= self.mul(f[:, None, :], A[col, col:][None])
            b[col + 1:] -= self.mul(f[:, None, :], b[col][None])

        x = np.zeros_like(b)
        for row in range(k - 1, -1, -1):
            rhs = b[row]
            if row + 1 < k:
                rhs = rhs - self.mul(A[row, row + 1:, None, :], x[row + 1:]).sum(axis=0)
            x[row] = self.div(rhs, A[row, row])
        return x[:, 0] if vector else x

    def inv(self, A):
        k = A.shape[0]
        eye = self.constant(np.eye(k))
        return self.solve(A, eye)


@lru_cache(maxsize=None)
def space(nvars, order=ORDER):
    return JetSpace(nvars, order)


# --------------------------------------------------------------------------
# scalar wrapper


class TaylorJet:
    """Immutable order-4 jet of a scalar function at a point.

    Supports ``+ - * /`` with other jets or real numbers, unary minus, and
    ``**`` with a real exponent. Elementary functions are the module-level
    :func:`sqrt`, :func:`log`, :func:`exp`, :func:`sin`, :func:`cos`, :func:`power`.
    """

    __slots__ = ("space", "coeffs")

    def __init__(self, jspace, coeffs):
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.shape != (jspace.size,):
            raise ValueError(f"expected {jspace.size} coefficients, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("jet coefficients must be finite")
        coeffs.flags.writeable = False
        object.__setattr__(self, "space", jspace)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("TaylorJet is immutable")

    @classmethod
    def const(cls, value, nvars, order=ORDER):
        sp = space(nvars, order)
        return cls(sp, sp.constant(value))

    @property
    def nvars(self):
        return self.space.nvars

    @property
    def order(self):
        return self.space.order

    @property
    def value(self):
        return float(self.coeffs[0])

    def coeff(self, alpha):
        return float(self.coeffs[self.space.slot(alpha)])

    def partial(self, alpha):
        return extract_partial(self, alpha)

    def __repr__(self):
        terms = []
        for a, c in zip(self.space.alphas, self.coeffs):
            if c != 0.0:
                mono = "*".join(
                    f"u{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(a) if e
                )
                terms.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return f"TaylorJet({' + '.join(terms) or '0'})"

    def _lift(self, other):
        if isinstance(other, TaylorJet):
            if other.space is not self.space:
                raise ValueError("jets live in different spaces")
            return other.coeffs
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self.space.constant(float(other))
        return NotImplemented

    def _wrap(self, coeffs):
        return TaylorJet(self.space, coeffs)

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.coeffs + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.coeffs - o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self._wrap(o - self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self._wrap(self.coeffs * float(other))
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.space.mul(self.coeffs, o))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            if other == 0:
                raise SingularJetError("division by zero")
            return self._wrap(self.coeffs / float(other))
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.space.div(self.coeffs, o))

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.space.div(o, self.coeffs))

    def __neg__(self):
        return self._wrap(-self.coeffs)

    def __pos__(self):
        return self

    def __pow__(self, r):
        return power(self, r)


def seed_variable(index, value, nvars, order=ORDER):
    """Jet of the coordinate function ``u_{index}`` at ``value``."""
    sp = space(nvars, order)
    return TaylorJet(sp, sp.variable(index, value))


def extract_partial(a, alpha):
    """Raw partial derivative ``d^alpha f`` (``alpha! * coeff(alpha)``)."""
    k = a.space.slot(alpha)
    return float(a.coeffs[k] * a.space.alpha_factorial[k])


def jet_arith(a, b, op):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


# --------------------------------------------------------------------------
# elementary functions on floats and jets


def _is_jet(x):
    return isinstance(x, TaylorJet)


def _series(x, derivs):
    return x._wrap(x.space.compose(x.coeffs, derivs))


def exp(x):
    if not _is_jet(x):
        return math.exp(x)
    e = math.exp(x.value)
    return _series(x, [e] * (x.order + 1))


def log(x):
    if not _is_jet(x):
        if x <= 0:
            raise DomainError(f"ln of non-positive value {x!r}")
        return math.log(x)
    a = x.value
    if not a > 0:
        raise DomainError(f"ln of jet with non-positive constant term {a!r}")
    derivs = [math.log(a)] + [
        (-1) ** (k - 1) * math.factorial(k - 1) / a**k for k in range(1, x.order + 1)
    ]
    return _series(x, derivs)


def _falling_power_derivs(a, r, order):
    out = []
    c = 1.0
    for k in range(order + 1):
        out.append(c * a ** (r - k))
        c *= r - k
    return out


def sqrt(x):
    if not _is_jet(x):
        if x < 0:
            raise DomainError(f"sqrt of negative value {x!r}")
        return math.sqrt(x)
    a = x.value
    if not a > 0:
        raise DomainError(f"sqrt of jet with non-positive constant term {a!r}")
    return _series(x, _falling_power_derivs(a, 0.5, x.order))


def sin(x):
    if not _is_jet(x):
        return math.sin(x)
    s, c = math.sin(x.value), math.cos(x.value)
    return _series(x, [(s, c, -s, -c)[k % 4] for k in range(x.order + 1)])


def cos(x):
    if not _is_jet(x):
        return math.cos(x)
    s, c = math.sin(x.value), math.cos(x.value)
    return _series(x, [(c, -s, -c, s)[k % 4] for k in range(x.order + 1)])


def _int_power(x, k):
    if k < 0:
        return _int_power(1.0 / x, -k)
    result = None
    base = x
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    if result is None:
        return TaylorJet(x.space, x.space.constant(1.0)) if _is_jet(x) else 1.0
    return result


def power(x, r):
    """``x ** r``. Integer exponents multiply out; others go through exp(r ln x)."""
    r = float(r)
    if r.is_integer():
        if not _is_jet(x):
            if r < 0 and x == 0:
                raise DomainError("zero raised to a negative power")
            return float(x) ** int(r)
        return _int_power(x, int(r))
    if not _is_jet(x):
        if x <= 0:
            raise DomainError(f"non-integer power of non-positive value {x!r}")
        return math.exp(r * math.log(x))
    if not x.value > 0:
        raise DomainError(f"non-integer power of jet with non-positive constant term {x.value!r}")
    return exp(r * log(x))


ELEMENTARY = {"sqrt": sqrt, "ln": log, "exp": exp, "sin": sin, "cos": cos}


def jet_elementary(a, fn, r=None):
    if fn == "pow":
        if r is None:
            raise ValueError("pow needs an exponent")
        return power(a, r)
    try:
        return ELEMENTARY[fn](a)
    except KeyError:
        raise ValueError(f"unknown function {fn!r}") from None


def jet_linear_solve(A, b):
    """Solve a square system of :class:`TaylorJet` entries; returns a list of jets."""
    k = len(A)
    if any(len(row) != k for row in A) or len(b) != k:
        raise ValueError("jet system must be square with matching right-hand side")
    sp = A[0][0].space
    Am = np.array([[entry.coeffs for entry in row] for row in A])
    bm = np.array([entry.coeffs for entry in b])
    x = sp.solve(Am, bm)
    return [TaylorJet(sp, row) for row in x]
