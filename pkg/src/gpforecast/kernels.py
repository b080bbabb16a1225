"""Covariance functions for seasonal incidence series and Gram assembly.

Inputs are 4-vectors ``(t, rainfall, humidity, temperature)`` where ``t`` is
the running month index and the climate columns are z-scores. Distances:

* Matern 5/2, squared-exponential, rational quadratic and the correlated
  part of the noise model use the Euclidean distance over all 4 columns.
* The periodic factor uses ``|t_i - t_j|`` only.

The composite covariance is

    k = matern52 + squared_exp * periodic + rational_quadratic + noise

with twelve hyperparameters, all carried as natural logarithms (see
:class:`HyperParams`). The white-noise delta fires on identical *index*
within one Gram matrix, never on coordinate equality and never between
train and test rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import _backend

SQRT5 = math.sqrt(5.0)


class HyperParams(NamedTuple):
    """Log-hyperparameters of the composite kernel, in slot order."""

    log_sigma1: float
    log_l1: float
    log_sigma2: float
    log_l2: float
    log_p: float
    log_lper: float
    log_sigma3: float
    log_alpha: float
    log_l3: float
    log_sigmaf: float
    log_l4: float
    log_sigman: float

    @classmethod
    def from_natural(cls, **values: float) -> "HyperParams":
        """Build from natural-scale values, e.g. ``sigma1=1.0, p=12.0``."""
        missing = set(NATURAL_NAMES) - set(values)
        extra = set(values) - set(NATURAL_NAMES)
        if missing or extra:
            raise ValueError(f"missing {sorted(missing)}, unexpected {sorted(extra)}")
        return cls(*(math.log(values[name]) for name in NATURAL_NAMES))

    @classmethod
    def from_array(cls, theta) -> "HyperParams":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (N_PARAMS,):
            raise ValueError(f"expected {N_PARAMS} log-hyperparameters, got shape {theta.shape}")
        return cls(*(float(v) for v in theta))

    def natural(self) -> dict:
        return {name: math.exp(v) for name, v in zip(NATURAL_NAMES, self)}


N_PARAMS = 12
NATURAL_NAMES = tuple(name[len("log_"):] for name in HyperParams._fields)
SLOT = {name: i for i, name in enumerate(NATURAL_NAMES)}


def as_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (N_PARAMS,):
        raise ValueError(f"expected {N_PARAMS} log-hyperparameters, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("log-hyperparameters must be finite")
    return theta


def as_points(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != 4 or X.shape[0] == 0:
        raise ValueError(f"expected a nonempty (n, 4) array of input points, got shape {X.shape}")
    return np.ascontiguousarray(X)


# -- scalar covariance functions -------------------------------------------

def _dist(a, b) -> float:
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return math.sqrt(float(d @ d))


def _dt(a, b) -> float:
    return abs(float(a[0]) - float(b[0]))


def matern52(a, b, sigma1: float, l1: float) -> float:
    s = SQRT5 * _dist(a, b) / l1
    return sigma1**2 * (1.0 + s + s * s / 3.0) * math.exp(-s)


def squared_exp(a, b, sigma: float, l: float) -> float:
    r = _dist(a, b)
    return sigma**2 * math.exp(-r * r / (2.0 * l * l))


def periodic(a, b, p: float, lper: float) -> float:
    s = math.sin(math.pi * _dt(a, b) / p)
    return math.exp(-2.0 * s * s / lper**2)


def seasonal(a, b, sigma2: float, l2: float, p: float, lper: float) -> float:
    return squared_exp(a, b, sigma2, l2) * periodic(a, b, p, lper)


def rational_quadratic(a, b, sigma3: float, alpha: float, l3: float) -> float:
    # magnitude enters unsquared
    r = _dist(a, b)
    return sigma3 * math.exp(-alpha * math.log1p(r * r / (2.0 * alpha * l3 * l3)))


def noise_kernel(a, b, same_index: bool, sigmaf: float, l4: float, sigman: float) -> float:
    return squared_exp(a, b, sigmaf, l4) + (sigman**2 if same_index else 0.0)


def composite(a, b, same_index: bool, theta) -> float:
    """Full covariance between two input points under log-hyperparameters ``theta``."""
    v = dict(zip(NATURAL_NAMES, np.exp(as_theta(theta))))
    return (
        matern52(a, b, v["sigma1"], v["l1"])
        + seasonal(a, b, v["sigma2"], v["l2"], v["p"], v["lper"])
        + rational_quadratic(a, b, v["sigma3"], v["alpha"], v["l3"])
        + noise_kernel(a, b, same_index, v["sigmaf"], v["l4"], v["sigman"])
    )


# -- composition tree --------------------------------------------------------

@dataclass(frozen=True)
class Distances:
    """Pairwise quantities every leaf needs, computed once per Gram matrix."""

    r2: np.ndarray  # squared Euclidean distance over all columns
    dt: np.ndarray  # absolute time difference
    same: np.ndarray  # boolean, identical dataset index

    @classmethod
    def between(cls, A: np.ndarray, B: np.ndarray | None = None) -> "Distances":
        symmetric = B is None
        B = A if symmetric else B
        diff = A[:, None, :] - B[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        dt = np.abs(diff[:, :, 0])
        if symmetric:
            same = np.eye(A.shape[0], dtype=bool)
        else:
            same = np.zeros((A.shape[0], B.shape[0]), dtype=bool)
        return cls(r2, dt, same)


@dataclass(frozen=True)
class KernelNode:
    """A covariance function as a tree of leaves joined by Sum and Product.

    Leaves read their natural-scale parameters from ``param_slots`` of the
    log-hyperparameter vector. ``evaluate`` returns the covariance matrix and,
    on request, its derivative with respect to every log-hyperparameter.
    """

    variant: str
    children: tuple = ()
    param_slots: tuple = ()

    LEAVES = ("Matern52", "SquaredExp", "Periodic", "RationalQuadratic", "WhiteNoise")

    def __post_init__(self):
        if self.variant in ("Sum", "Product"):
            if len(self.children) < 2 or self.param_slots:
                raise ValueError(f"{self.variant} needs >= 2 children and no slots of its own")
        elif self.variant in self.LEAVES:
            if self.children:
                raise ValueError("leaf kernels take no children")
        else:
            raise ValueError(f"unknown kernel variant {self.variant!r}")

    def leaves(self):
        if self.children:
            for child in self.children:
                yield from child.leaves()
        else:
            yield self

    def evaluate(self, D: Distances, theta: np.ndarray, want_grads: bool = False):
        """Return ``(K, grads)`` where ``grads`` maps slot -> dK/dlog(theta[slot])."""
        if self.variant == "Sum":
            K = 0.0
            grads = {}
            for child in self.children:
                Kc, gc = child.evaluate(D, theta, want_grads)
                K = K + Kc
                grads.update(gc)
            return K, grads
        if self.variant == "Product":
            parts = [child.evaluate(D, theta, want_grads) for child in self.children]
            K = 1.0
            for Kc, _ in parts:
                K = K * Kc
            grads = {}
            if want_grads:
                for c, (_, gc) in enumerate(parts):
                    others = 1.0
                    for o, (Ko, _) in enumerate(parts):
                        if o != c:
                            others = others * Ko
                    for slot, g in gc.items():
                        grads[slot] = g * others
            return K, grads
        return _LEAF_EVAL[self.variant](D, np.exp(theta[list(self.param_slots)]), self.param_slots, want_grads)


def _matern_leaf(D, nat, slots, want_grads):
    sigma, l = nat
    s = SQRT5 * np.sqrt(D.r2) / l
    e = np.exp(-s)
    K = sigma**2 * (1.0 + s + s * s / 3.0) * e
    grads = {}
    if want_grads:
        grads[slots[0]] = 2.0 * K
        grads[slots[1]] = sigma**2 * e * s * s * (1.0 + s) / 3.0
    return K, grads


def _se_leaf(D, nat, slots, want_grads):
    sigma, l = nat
    q = D.r2 / (l * l)
    K = sigma**2 * np.exp(-0.5 * q)
    grads = {}
    if want_grads:
        grads[slots[0]] = 2.0 * K
        grads[slots[1]] = K * q
    return K, grads


def _periodic_leaf(D, nat, slots, want_grads):
    p, lper = nat
    u = np.pi * D.dt / p
    sn = np.sin(u)
    K = np.exp(-2.0 * sn * sn / lper**2)
    grads = {}
    if want_grads:
        grads[slots[0]] = K * 2.0 * np.sin(2.0 * u) * u / lper**2
        grads[slots[1]] = K * 4.0 * sn * sn / lper**2
    return K, grads


def _rq_leaf(D, nat, slots, want_grads):
    sigma, alpha, l = nat
    z = D.r2 / (2.0 * alpha * l * l)
    logB = np.log1p(z)
    K = sigma * np.exp(-alpha * logB)
    grads = {}
    if want_grads:
        zB = z / (1.0 + z)
        grads[slots[0]] = K
        grads[slots[1]] = alpha * K * (zB - logB)
        grads[slots[2]] = 2.0 * alpha * K * zB
    return K, grads


def _white_leaf(D, nat, slots, want_grads):
    (sigma,) = nat
    K = np.where(D.same, sigma**2, 0.0)
    grads = {}
    if want_grads:
        grads[slots[0]] = 2.0 * K
    return K, grads


_LEAF_EVAL = {
    "Matern52": _matern_leaf,
    "SquaredExp": _se_leaf,
    "Periodic": _periodic_leaf,
    "RationalQuadratic": _rq_leaf,
    "WhiteNoise": _white_leaf,
}


def _leaf(variant, *names):
    return KernelNode(variant, param_slots=tuple(SLOT[n] for n in names))


def composite_tree() -> KernelNode:
    """The twelve-parameter seasonal covariance as a kernel tree."""
    return KernelNode(
        "Sum",
        (
            _leaf("Matern52", "sigma1", "l1"),
            KernelNode("Product", (_leaf("SquaredExp", "sigma2", "l2"), _leaf("Periodic", "p", "lper"))),
            _leaf("RationalQuadratic", "sigma3", "alpha", "l3"),
            _leaf("SquaredExp", "sigmaf", "l4"),
            _leaf("WhiteNoise", "sigman"),
        ),
    )


COMPOSITE = composite_tree()


# -- Gram assembly -----------------------------------------------------------

@dataclass(frozen=True)
class GramResult:
    matrix: np.ndarray
    grads: np.ndarray = field(default_factory=lambda: np.empty((0, 0, 0)))


def gram(points, theta, want_grads: bool = False) -> GramResult:
    """Covariance matrix of ``points`` with itself, noise on the diagonal.

    With ``want_grads`` the result also carries a ``(12, n, n)`` stack of
    derivatives with respect to each log-hyperparameter.
    """
    X = as_points(points)
    theta = as_theta(theta)
    K, G = _backend.gram(X, theta, want_grads)
    if G is None:
        G = np.empty((0,) + K.shape)
    return GramResult(K, G)


def cross_gram(rows, cols, theta) -> np.ndarray:
    """Covariance between two point sets; the white-noise term never fires."""
    return _backend.cross_gram(as_points(rows), as_points(cols), as_theta(theta))


def prior_variance(theta) -> float:
    """Noise-free prior variance ``k(x, x)`` shared by every input point."""
    v = np.exp(as_theta(theta))
    s = dict(zip(NATURAL_NAMES, v))
    return s["sigma1"] ** 2 + s["sigma2"] ** 2 + s["sigma3"] + s["sigmaf"] ** 2


def tree_gram(X: np.ndarray, theta: np.ndarray, want_grads: bool, tree: KernelNode = COMPOSITE):
    """Pure numpy Gram assembly by walking the kernel tree."""
    K, grads = tree.evaluate(Distances.between(X), theta, want_grads)
    K = np.array(K, dtype=float)
    if not want_grads:
        return K, None
    G = np.empty((N_PARAMS,) + K.shape)
    for slot in range(N_PARAMS):
        G[slot] = grads[slot]
    return K, G


def tree_cross_gram(A: np.ndarray, B: np.ndarray, theta: np.ndarray, tree: KernelNode = COMPOSITE):
    K, _ = tree.evaluate(Distances.between(A, B), theta, False)
    return np.array(K, dtype=float)


def check_slots(tree: KernelNode = COMPOSITE) -> None:
    """Raise unless every hyperparameter slot is owned by exactly one leaf."""
    used = [s for leaf in tree.leaves() for s in leaf.param_slots]
    if sorted(used) != list(range(N_PARAMS)):
        raise ValueError(f"kernel tree slots {sorted(used)} do not cover 0..{N_PARAMS - 1} exactly once")


check_slots()

__all__: Sequence[str] = (
    "HyperParams", "KernelNode", "GramResult", "composite_tree", "matern52", "squared_exp",
    "periodic", "seasonal", "rational_quadratic", "noise_kernel", "composite", "gram",
    "cross_gram", "prior_variance",
)
