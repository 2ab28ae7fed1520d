"""Shared test utilities: transformed surfaces and well-conditioned random matrices."""

import numpy as np

SCALAR_KEYS = (
    "epsilon",
    "normK2",
    "normKtilde2",
    "normT2",
    "normNablaK2",
    "normNablaT2",
    "slack",
    "slack_difference",
    "mu",
    "scalar_curvature",
    "normR2",
)


def random_matrix(rng, size, max_cond=10.0):
    """Random square matrix with condition number <= ``max_cond``."""
    while True:
        M = rng.normal(size=(size, size))
        if np.linalg.cond(M) <= max_cond:
            return M


class AmbientTransformed:
    """``A @ x`` for a surface ``x``."""

    def __init__(self, base, A):
        self.base = base
        self.A = np.asarray(A, dtype=float)
        self.n = base.n

    def evaluate(self, args):
        comps = self.base.evaluate(args)
        out = []
        for row in self.A:
            acc = 0.0
            for a, c in zip(row, comps):
                acc = acc + float(a) * c
            out.append(acc)
        return out

    def guard_ok(self, point):
        return self.base.guard_ok(point)


class Reparametrized:
    """``x(B v + c)``; chart point ``v`` maps to base point ``B v + c``."""

    def __init__(self, base, B, c):
        self.base = base
        self.B = np.asarray(B, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.n = base.n

    def to_base(self, v):
        return self.B @ np.asarray(v, dtype=float) + self.c

    def from_base(self, p):
        return np.linalg.solve(self.B, np.asarray(p, dtype=float) - self.c)

    def evaluate(self, args):
        u = []
        for row, ci in zip(self.B, self.c):
            acc = float(ci)
            for b, a in zip(row, args):
                acc = acc + float(b) * a
            u.append(acc)
        return self.base.evaluate(u)

    def guard_ok(self, point):
        return self.base.guard_ok(self.to_base(point))


def assert_scalars_close(a, b, rtol=1e-8):
    """Scalar outputs agree to ``rtol`` relative to ``1 + |value|``."""
    for key in SCALAR_KEYS:
        x, y = a[key], b[key]
        assert abs(x - y) <= rtol * (1 + abs(x)), f"{key}: {x!r} vs {y!r}"
