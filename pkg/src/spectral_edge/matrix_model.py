"""Simulation of the weighted data matrix Y = Sigma^{1/2} X D.

Two model classes share this shape. In the elliptical model the columns of X
are i.i.d. uniform on the unit sphere of R^p and D carries the random radii.
In the separable model X has i.i.d. entries of mean zero and variance 1/n and
D carries i.i.d. column weights. Either way the nonzero eigenvalues of
Q = YY^T coincide with those of the companion Gram matrix D X^T Sigma X D, so
the spectrum is always computed on the smaller side.
"""

import numpy as np

from .population import PopulationSpec


class DomainError(ValueError):
    pass


class EigensolverError(RuntimeError):
    pass


# eigenvalues below this fraction of the largest are treated as exact zeros
_CLIP_REL = 1e-12


class ModelKind:
    """Which sampling mechanism generates X.

    Elliptical has no parameters. Separable i.i.d. carries the entry
    distribution and the fourth moment m4 of sqrt(n) times an entry
    (gaussian: 3, rademacher: 1, student_t with nu dof: 3(nu-2)/(nu-4)).
    """

    def __init__(self, name, entry_dist=None, nu=None):
        if name not in ("elliptical", "separable"):
            raise DomainError(f"unknown model kind {name!r}")
        self.name = name
        self.entry_dist = None
        self.nu = None
        if name == "separable":
            if entry_dist not in ("gaussian", "rademacher", "student_t"):
                raise DomainError(f"unknown entry distribution {entry_dist!r}")
            if entry_dist == "student_t":
                if nu is None or nu < 9:
                    raise DomainError("student_t entries need nu >= 9")
                self.nu = float(nu)
            self.entry_dist = entry_dist

    @classmethod
    def elliptical(cls):
        return cls("elliptical")

    @classmethod
    def separable(cls, entry_dist="gaussian", nu=None):
        return cls("separable", entry_dist, nu)

    @property
    def is_elliptical(self):
        return self.name == "elliptical"

    @property
    def m4(self):
        """Fourth moment of sqrt(n) * entry; None for the elliptical model."""
        if self.is_elliptical:
            return None
        if self.entry_dist == "gaussian":
            return 3.0
        if self.entry_dist == "rademacher":
            # m4 = 1 sits on the boundary of the bootstrap CLT's variance
            # positivity requirement; allowed here, flagged downstream
            return 1.0
        nu = self.nu
        return 3.0 * (nu - 2.0) / (nu - 4.0)

    def __repr__(self):
        if self.is_elliptical:
            return "ModelKind.elliptical()"
        extra = f", nu={self.nu:g}" if self.nu else ""
        return f"ModelKind.separable({self.entry_dist!r}{extra})"

    def __eq__(self, other):
        return (isinstance(other, ModelKind)
                and (self.name, self.entry_dist, self.nu)
                == (other.name, other.entry_dist, other.nu))


class DataSample:
    """A realized draw: the data matrix plus everything that generated it.

    ``extra`` carries generator metadata that has no structural slot, e.g.
    the true factor count of a synthetic factor-model draw.
    """

    def __init__(self, Y, weights, kind, pop, law, extra=None):
        self.Y = Y
        self.weights = weights
        self.kind = kind
        self.pop = pop
        self.law = law
        self.extra = {} if extra is None else dict(extra)
        self.p, self.n = Y.shape


class Spectrum:
    """Descending nonnegative eigenvalues of Q = YY^T."""

    def __init__(self, values, p, n):
        self.values = np.asarray(values, dtype=float)
        self.p = int(p)
        self.n = int(n)

    def __len__(self):
        return self.values.size

    def __getitem__(self, i):
        return self.values[i]

    @property
    def largest(self):
        return float(self.values[0])


def _sample_x(kind, p, n, rng):
    if kind.is_elliptical:
        g = rng.standard_normal((p, n))
        g /= np.linalg.norm(g, axis=0, keepdims=True)
        return g
    if kind.entry_dist == "gaussian":
        return rng.standard_normal((p, n)) / np.sqrt(n)
    if kind.entry_dist == "rademacher":
        return (2.0 * rng.integers(0, 2, size=(p, n)) - 1.0) / np.sqrt(n)
    nu = kind.nu
    scale = np.sqrt(nu / (nu - 2.0)) * np.sqrt(n)
    return rng.standard_t(nu, size=(p, n)) / scale


def sample_data(kind, pop, law, p, n, seed):
    """Draw Y = Sigma^{1/2} X D, deterministic given the seed.

    Weights are drawn first, then X, so the weight vector for a given seed
    does not depend on the model kind.
    """
    if pop.p != p:
        raise DomainError(f"population has p={pop.p}, requested p={p}")
    rng = seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(seed)
    w = law.sample(n, rng)
    x = _sample_x(kind, p, n, rng)
    y = np.sqrt(pop.sigmas)[:, None] * x * np.sqrt(w)[None, :]
    return DataSample(y, w, kind, pop, law)


def eigenvalues(data, dtype=None):
    """Spectrum of Q = YY^T via the smaller-side Gram matrix.

    Optionally computes in a reduced dtype (e.g. float32) for Monte Carlo
    throughput; results are returned as float64 either way.
    """
    y = data.Y if dtype is None else data.Y.astype(dtype)
    p, n = y.shape
    gram = y.T @ y if n <= p else y @ y.T
    try:
        vals = np.linalg.eigvalsh(gram)
    except np.linalg.LinAlgError as e:
        raise EigensolverError(
            f"eigensolver failed on {gram.shape[0]}x{gram.shape[0]} Gram "
            f"matrix (fro norm {np.linalg.norm(gram):.3e}): {e}") from e
    vals = np.asarray(vals[::-1], dtype=float)
    if vals.size and vals[0] > 0:
        vals[vals < _CLIP_REL * vals[0]] = 0.0
    else:
        vals[:] = 0.0
    return Spectrum(vals, p, n)


def empirical_stieltjes(spec, z, side="Q"):
    """Empirical Stieltjes transform at z (Im z > 0).

    side "Q" averages over all p eigenvalues of YY^T (padding with the
    p - min(p,n) exact zeros); side "companion" averages over the n
    eigenvalues of the companion matrix.
    """
    if np.imag(z) <= 0:
        raise DomainError("z must lie in the upper half plane")
    if side not in ("Q", "companion"):
        raise DomainError(f"side must be 'Q' or 'companion', got {side!r}")
    dim = spec.p if side == "Q" else spec.n
    k = spec.values.size
    total = np.sum(1.0 / (spec.values - z))
    if dim > k:
        total += (dim - k) * (1.0 / (0.0 - z))
    return complex(total / dim)
