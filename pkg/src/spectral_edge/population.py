"""Population covariance spectra, plain and spiked.

The population covariance is diagonal without loss of generality, so a
spectrum is just a descending vector of positive eigenvalues. A spiked
population replaces the leading r entries of a base spectrum with larger
values; the spikes are allowed to grow with dimension and are therefore
exempt from the boundedness band that constrains the base.
"""

import numpy as np


class PopulationError(ValueError):
    pass


class PopulationSpec:
    """Descending positive eigenvalues of the population covariance."""

    def __init__(self, sigmas):
        s = np.asarray(sigmas, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise PopulationError("sigmas must be a nonempty vector")
        if np.any(s <= 0):
            raise PopulationError("sigmas must be positive")
        if np.any(np.diff(s) > 0):
            raise PopulationError("sigmas must be descending")
        self.sigmas = s
        self.p = s.size

    @classmethod
    def identity(cls, p):
        return cls(np.ones(p))

    def sigma_bar(self):
        """Arithmetic mean of the eigenvalues."""
        return float(np.mean(self.sigmas))

    def validate(self, tau):
        """Indices (0-based) violating the [tau, 1/tau] band or ordering."""
        return validate(self, tau)

    def __eq__(self, other):
        return (isinstance(other, PopulationSpec)
                and np.array_equal(self.sigmas, other.sigmas))

    def __repr__(self):
        return f"PopulationSpec(p={self.p}, mean={self.sigma_bar():.4g})"


class SpikedPopulation:
    """Base spectrum with its leading r entries replaced by spikes."""

    def __init__(self, base, spike_values):
        if not isinstance(base, PopulationSpec):
            base = PopulationSpec(base)
        sv = np.asarray(spike_values, dtype=float)
        if sv.ndim != 1:
            raise PopulationError("spike_values must be a vector")
        if sv.size >= base.p:
            raise PopulationError("need fewer spikes than dimensions")
        if sv.size and np.any(np.diff(sv) > 0):
            raise PopulationError("spikes must be descending")
        if sv.size and sv[-1] <= base.sigmas[sv.size - 1]:
            raise PopulationError(
                "smallest spike must exceed the base eigenvalue it replaces")
        self.base = base
        self.spike_values = sv
        self.r = sv.size
        full = base.sigmas.copy()
        full[:self.r] = sv
        self.sigmas = full
        self.p = base.p

    def sigma_bar(self):
        return float(np.mean(self.sigmas))

    def validate(self, tau):
        """Spikes are exempt; only the base spectrum is checked."""
        return validate(self.base, tau)

    def __repr__(self):
        return (f"SpikedPopulation(p={self.p}, r={self.r}, "
                f"spikes={self.spike_values.tolist()})")


def johnstone_spiked(p, spikes):
    """Identity base of dimension p with the given descending spikes (> 1)."""
    spikes = np.asarray(spikes, dtype=float)
    if spikes.size and np.any(spikes <= 1.0):
        raise PopulationError("spikes must exceed the unit base eigenvalue")
    return SpikedPopulation(PopulationSpec.identity(p), spikes)


def sigma_bar(pop):
    return pop.sigma_bar()


def validate(pop, tau):
    """List of violations of Assumption-style bounds; empty when ok.

    Each entry is (index, message). Spiked populations are validated on
    their base only.
    """
    if isinstance(pop, SpikedPopulation):
        return validate(pop.base, tau)
    if not 0 < tau < 1:
        raise PopulationError("tau must lie in (0, 1)")
    out = []
    s = pop.sigmas
    for i, v in enumerate(s):
        if not tau <= v <= 1.0 / tau:
            out.append((i, f"sigma[{i}]={v:g} outside [{tau:g}, {1 / tau:g}]"))
    bad = np.nonzero(np.diff(s) > 0)[0]
    for i in bad:
        out.append((int(i), f"ordering violated at index {i}"))
    return out
