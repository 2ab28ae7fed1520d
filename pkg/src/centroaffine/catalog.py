"""
Built-in hypersurfaces.

Each entry is defined twice: as surface-file text (parsed by :mod:`.dsl`,
this is what the pipeline evaluates) and as a native Python function built
from the same jet-aware primitives, used to cross-check the parser.

Families (``n`` is the chart dimension):

    unit_sphere_n          x_{n+1} = sqrt(1 - |u|^2)
    ellipsoid_n            axes (1.5, 0.7, 1.2, ...), last axis 2
    hyperboloid_n          x_{n+1} = sqrt(1 + |u|^2)
    shifted_paraboloid_n   x_{n+1} = 1 + |u|^2 / 2
    canonical_viii_n       x_{n+1} = (x_2^2 + ... + x_n^2) / (2 x_1) + x_1 ln x_1
    perturbed_graph_n      shifted paraboloid + amp * random cubic/quartic terms
    sl3_so3                unimodular SPD 3x3 matrices, n = 5
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional

import numpy as np

from . import dsl
from .errors import DomainError, UnknownSurfaceError
from .jets import log, sqrt

TAGS = frozenset(
    {"K_zero", "Ktilde_zero", "nablaK_zero", "flat_metric", "equality", "strict", "T_zero"}
)

_QUADRIC_CENTERED = ("K_zero", "Ktilde_zero", "nablaK_zero", "T_zero", "equality")

ELLIPSOID_AXES = (1.5, 0.7, 1.2, 0.9, 1.1, 1.3, 0.8, 1.4)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    n: int
    text: str
    box: tuple
    tags: frozenset
    native: Optional[Callable] = field(default=None, compare=False, repr=False)
    description: str = ""

    @property
    def spec(self):
        return _parsed(self.text)

    def evaluate(self, args):
        return self.spec.evaluate(args)

    def guard_ok(self, point):
        return self.spec.guard_ok(point)

    def sample_points(self, count, seed=0):
        """``count`` uniform points of the sample box (fixed seed)."""
        rng = np.random.default_rng(seed)
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        return lo + (hi - lo) * rng.random((count, self.n))

    def grid(self, counts):
        """Tensor grid over the sample box; ``counts`` per axis (int or sequence)."""
        if np.isscalar(counts):
            counts = [int(counts)] * self.n
        if len(counts) != self.n or min(counts) < 1:
            raise ValueError(f"grid needs {self.n} counts >= 1")
        axes = [
            np.linspace(lo, hi, c) if c > 1 else np.array([(lo + hi) / 2])
            for (lo, hi), c in zip(self.box, counts)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


_PARSE_CACHE = {}


def _parsed(text):
    spec = _PARSE_CACHE.get(text)
    if spec is None:
        spec = _PARSE_CACHE[text] = dsl.parse_surface(text)
    return spec


def _sumsq(args):
    total = 0.0
    for a in args:
        total = total + a * a
    return total


def _sumsq_text(vars_):
    return " + ".join(f"{v}^2" for v in vars_)


def _uvars(n, start=1):
    return [f"u{i}" for i in range(start, n + 1)]


def _coords(n):
    return "\n".join(f"x{i}=u{i}" for i in range(1, n + 1))


# --------------------------------------------------------------------------
# native evaluators


def _native_sphere(args):
    return list(args) + [sqrt(1.0 - _sumsq(args))]


def _native_ellipsoid(args, axes):
    last = axes[len(args)] * sqrt(1.0 - _sumsq(args))
    return [a * u for a, u in zip(axes, args)] + [last]


def _native_hyperboloid(args):
    return list(args) + [sqrt(1.0 + _sumsq(args))]


def _native_paraboloid(args):
    return list(args) + [1.0 + _sumsq(args) / 2.0]


def _native_canonical(args):
    u1 = args[0]
    return list(args) + [_sumsq(args[1:]) / (2.0 * u1) + u1 * log(u1)]


def _native_perturbed(args, terms, amplitude):
    pert = 0.0
    for coef, alpha in terms:
        mono = coef
        for u, e in zip(args, alpha):
            if e:
                mono = mono * u**e
        pert = pert + mono
    return list(args) + [1.0 + _sumsq(args) / 2.0 + amplitude * pert]


def sl3_so3_chart(params):
    """Point of SL(3)/SO(3) in R^6 from unit-LDL parameters.

    ``params = (l21, l31, l32, d1, d2)``; returns the independent entries of
    ``A = L diag(d1, d2, 1/(d1 d2)) L^T`` in the order
    (A11, A22, A33, A12, A13, A23). Works on floats and jets.
    """
    l21, l31, l32, d1, d2 = params
    c1, c2 = getattr(d1, "value", d1), getattr(d2, "value", d2)
    if not (c1 > 0 and c2 > 0):
        raise DomainError(f"d1 and d2 must be positive, got {c1!r}, {c2!r}")
    d3 = 1.0 / (d1 * d2)
    return [
        d1,
        l21 * l21 * d1 + d2,
        l31 * l31 * d1 + l32 * l32 * d2 + d3,
        l21 * d1,
        l31 * d1,
        l21 * l31 * d1 + l32 * d2,
    ]


def _native_sl3(args):
    return sl3_so3_chart(list(args))


# --------------------------------------------------------------------------
# constructors


def _cube(n, half):
    return tuple((-half, half) for _ in range(n))


def unit_sphere(n):
    u = _uvars(n)
    text = (
        f"name=unit_sphere_{n}\nn={n}\n{_coords(n)}\n"
        f"x{n + 1}=sqrt(1 - ({_sumsq_text(u)}))\nguard=1 - ({_sumsq_text(u)})\n"
    )
    return CatalogEntry(
        f"unit_sphere_{n}", n, text, _cube(n, 0.5), frozenset(_QUADRIC_CENTERED),
        _native_sphere, "upper hemisphere of the unit sphere as a graph",
    )


def ellipsoid(n, axes=None):
    axes = tuple(ELLIPSOID_AXES[:n]) + (2.0,) if axes is None else tuple(axes)
    if len(axes) != n + 1:
        raise ValueError(f"ellipsoid_{n} needs {n + 1} axes")
    u = _uvars(n)
    lines = [f"x{i}={axes[i - 1]!r}*u{i}" for i in range(1, n + 1)]
    text = (
        f"name=ellipsoid_{n}\nn={n}\n" + "\n".join(lines) + "\n"
        f"x{n + 1}={axes[n]!r}*sqrt(1 - ({_sumsq_text(u)}))\nguard=1 - ({_sumsq_text(u)})\n"
    )
    return CatalogEntry(
        f"ellipsoid_{n}", n, text, _cube(n, 0.5), frozenset(_QUADRIC_CENTERED),
        partial(_native_ellipsoid, axes=axes), f"ellipsoid with semi-axes {axes}",
    )


def hyperboloid(n):
    u = _uvars(n)
    text = f"name=hyperboloid_{n}\nn={n}\n{_coords(n)}\nx{n + 1}=sqrt(1 + {_sumsq_text(u)})\n"
    return CatalogEntry(
        f"hyperboloid_{n}", n, text, _cube(n, 1.0), frozenset(_QUADRIC_CENTERED),
        _native_hyperboloid, "upper sheet of the two-sheeted hyperboloid",
    )


def shifted_paraboloid(n):
    u = _uvars(n)
    text = (
        f"name=shifted_paraboloid_{n}\nn={n}\n{_coords(n)}\n"
        f"x{n + 1}=1 + ({_sumsq_text(u)})/2\nguard=2 - ({_sumsq_text(u)})\n"
    )
    return CatalogEntry(
        f"shifted_paraboloid_{n}", n, text, _cube(n, 0.8), frozenset({"Ktilde_zero", "equality"}),
        _native_paraboloid, "paraboloid lifted off the origin (quadric without center)",
    )


def canonical_viii(n):
    if n < 2:
        raise ValueError("canonical_viii needs n >= 2")
    rest = _sumsq_text(_uvars(n, start=2))
    text = (
        f"name=canonical_viii_{n}\nn={n}\n{_coords(n)}\n"
        f"x{n + 1}=({rest})/(2*u1) + u1*ln(u1)\nguard=u1\n"
    )
    box = ((0.5, 2.0),) + _cube(n - 1, 1.0)
    return CatalogEntry(
        f"canonical_viii_{n}", n, text, box,
        frozenset({"nablaK_zero", "flat_metric", "equality"}),
        _native_canonical, "canonical centroaffine hypersurface (flat metric, parallel C)",
    )


def sl3_so3():
    text = (
        "name=sl3_so3\nn=5\n"
        "# u1=l21 u2=l31 u3=l32 u4=d1 u5=d2\n"
        "x1=u4\n"
        "x2=u1*u1*u4 + u5\n"
        "x3=u2*u2*u4 + u3*u3*u5 + 1/(u4*u5)\n"
        "x4=u1*u4\n"
        "x5=u2*u4\n"
        "x6=u1*u2*u4 + u3*u5\n"
        "guard=sqrt(u4)*sqrt(u5)\n"
    )
    box = _cube(3, 0.5) + ((0.5, 2.0), (0.5, 2.0))
    return CatalogEntry(
        "sl3_so3", 5, text, box, frozenset({"nablaK_zero", "T_zero", "equality"}),
        _native_sl3, "SL(3,R)/SO(3) as unimodular SPD matrices",
    )


def _quartic_terms(n, seed):
    rng = np.random.default_rng(seed)
    from .jets import multi_indices

    alphas = [a for a in multi_indices(n, 4) if sum(a) >= 3]
    coefs = rng.uniform(-1.0, 1.0, len(alphas))
    return tuple((float(c), a) for c, a in zip(coefs, alphas))


def perturbed_graph(n, seed=7, amplitude=0.05):
    terms = _quartic_terms(n, seed)
    monos = []
    for coef, alpha in terms:
        factors = [f"u{i + 1}^{e}" for i, e in enumerate(alpha) if e]
        monos.append(f"{abs(coef)!r}*{'*'.join(factors)}")
        monos[-1] = ("- " if coef < 0 else "+ ") + monos[-1]
    pert = " ".join(monos).lstrip("+ ")
    if pert.startswith("- "):
        pert = "-" + pert[2:]
    u = _uvars(n)
    name = f"perturbed_graph_{n}" + ("" if (seed, amplitude) == (7, 0.05) else f"_s{seed}_a{amplitude!r}")
    text = (
        f"name={name}\nn={n}\n{_coords(n)}\n"
        f"x{n + 1}=1 + ({_sumsq_text(u)})/2 + {amplitude!r}*({pert})\n"
        f"guard=2 - ({_sumsq_text(u)})\n"
    )
    return CatalogEntry(
        name, n, text, _cube(n, 0.5), frozenset({"strict"}),
        partial(_native_perturbed, terms=terms, amplitude=amplitude),
        f"shifted paraboloid plus {amplitude} x random cubic/quartic (seed {seed})",
    )


_FAMILIES = {
    "unit_sphere": unit_sphere,
    "ellipsoid": ellipsoid,
    "hyperboloid": hyperboloid,
    "shifted_paraboloid": shifted_paraboloid,
    "canonical_viii": canonical_viii,
    "perturbed_graph": perturbed_graph,
}

DEFAULT_NAMES = tuple(
    f"{fam}_{n}"
    for fam in ("unit_sphere", "ellipsoid", "hyperboloid", "shifted_paraboloid",
                "canonical_viii", "perturbed_graph")
    for n in (2, 3)
) + ("sl3_so3",)


def catalog_entries():
    """The default catalog, in a fixed order."""
    return [get(name) for name in DEFAULT_NAMES]


def get(name):
    """Entry by name: ``sl3_so3``, ``<family>_<n>`` (1 <= n <= 8), or
    ``perturbed_graph_<n>_s<seed>_a<amplitude>``."""
    if name == "sl3_so3":
        return sl3_so3()
    m = re.fullmatch(r"perturbed_graph_(\d+)_s(\d+)_a([0-9.eE+-]+)", name)
    if m:
        return perturbed_graph(int(m.group(1)), int(m.group(2)), float(m.group(3)))
    m = re.fullmatch(r"([a-z_]+?)_(\d+)", name)
    if m and m.group(1) in _FAMILIES and 1 <= int(m.group(2)) <= 8:
        try:
            return _FAMILIES[m.group(1)](int(m.group(2)))
        except ValueError as exc:
            raise UnknownSurfaceError(f"unknown surface {name!r}: {exc}") from None
    raise UnknownSurfaceError(f"unknown surface {name!r}")
