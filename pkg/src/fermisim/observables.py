"""Site-resolved observables and seeded sampling estimates.

Every readout accepts either encoding and dispatches on the layout object: a
ModeLayout means one qubit per (site, spin) mode, a FirstQuantizedLayout means
one word per particle.  Exact values are Born-rule expectations over the
support; sampled values draw basis strings with QuantumState.sample, so a
(seed, n_trials) pair fully determines every estimate.  Each readout takes an
optional SamplingPlan: omitted means exact mode, present means one seeded shot
batch.

Densities and correlations use the 0/1 indicator that a site is occupied at
all, i.e. the probability a measurement finds at least one particle there.  A
doubly occupied site therefore contributes 1, not 2, and the density only sums
to the particle number when no site can hold two.  The energy estimator is the
exception: its potential part needs the up-count times down-count product, not
the indicator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fermisim import oracle
from fermisim.fq import FirstQuantizedLayout
from fermisim.sq import SPINS, HubbardParams, LatticeSpec, ModeLayout, jw_parity
from fermisim.state import InvariantViolation, QuantumState

MAX_CORRELATION_POINTS = 3
FREQUENCY_TOL = 1e-12
ENERGY_SPLIT_TOL = 1e-8


@dataclass(frozen=True)
class SamplingPlan:
    """Seed, shot count, and accuracy targets for a reproducible measurement run.

    epsilon is the accuracy the shot count was planned for (see
    required_trials) and delta the bin density used when budgeting joint
    correlations, whose trial demand grows like delta**k per correlated point.
    Both are bookkeeping for planning; the estimates themselves only consume
    (seed, n_trials).
    """

    seed: int
    n_trials: int
    epsilon: float = 0.1
    delta: float = 1.0

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed < (1 << 64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not isinstance(self.n_trials, int) or self.n_trials < 1:
            raise ValueError(f"n_trials must be a positive integer, got {self.n_trials!r}")
        if not (self.epsilon > 0) or not math.isfinite(self.epsilon):
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        if not (self.delta > 0) or not math.isfinite(self.delta):
            raise ValueError(f"delta must be positive, got {self.delta!r}")


@dataclass(frozen=True)
class Estimate:
    """Exact expectation next to its sampled estimate and standard error."""

    exact: float
    sampled: float
    stderr: float


@dataclass(frozen=True)
class Histogram:
    """Distribution over integer-keyed bins, exact or from a finite shot batch.

    frequencies always form a probability distribution.  counts is present
    only for sampled histograms, where the frequencies are counts/n_trials.
    """

    frequencies: dict[int, float]
    counts: dict[int, int] | None = None
    n_trials: int | None = None

    def __post_init__(self):
        total = sum(self.frequencies.values())
        if abs(total - 1.0) > FREQUENCY_TOL:
            raise InvariantViolation(f"histogram frequencies sum to {total}, expected 1")
        if any(f < 0 for f in self.frequencies.values()):
            raise InvariantViolation("histogram frequencies must be nonnegative")
        if (self.counts is None) != (self.n_trials is None):
            raise ValueError("counts and n_trials must be supplied together")
        if self.counts is not None and sum(self.counts.values()) != self.n_trials:
            raise InvariantViolation("histogram counts do not add up to the trial count")


@dataclass(frozen=True)
class EnergyReport:
    """Total energy with its potential/kinetic estimator decomposition."""

    potential: float
    kinetic: float
    total: float


def required_trials(epsilon: float) -> int:
    """Shots needed to push the error of a [0, 1] observable below epsilon.

    Planning rule N = ceil(1/epsilon**2), not a statistical guarantee: the
    constant in front is pinned to 1.
    """
    if not (0 < epsilon < 1) or not math.isfinite(epsilon):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    return math.ceil(1.0 / (epsilon * epsilon))


# ------------------------------------------------------------- basis readouts


def _site_counts(basis: int, layout) -> list[int]:
    """Particles per site for one basis string, under either encoding."""
    if isinstance(layout, ModeLayout):
        return [
            sum((basis >> layout.mode(site, spin)) & 1 for spin in SPINS)
            for site in range(1, layout.m + 1)
        ]
    counts = [0] * layout.m
    w = layout.word_bits
    mask = (1 << w) - 1
    for k in range(layout.n):
        counts[((basis >> (k * w)) & mask) >> 1] += 1
    return counts


def _check_layout(state: QuantumState, layout) -> None:
    if not isinstance(layout, (ModeLayout, FirstQuantizedLayout)):
        raise ValueError(f"unsupported layout type {type(layout).__name__}")
    if state.layout != layout.register_layout():
        raise ValueError("state register layout does not match the given encoding")


def charge_density(
    state: QuantumState, layout, plan: SamplingPlan | None = None
) -> np.ndarray | list[Estimate]:
    """Per-site occupancy probability: P(at least one particle on the site).

    Without a plan, returns the exact length-m vector.  With one, returns
    per-site Estimates from a single seeded shot batch.
    """
    _check_layout(state, layout)
    if plan is not None:
        return _sampled_density(state, layout, plan)
    density = np.zeros(layout.m)
    for b in state.support():
        p = abs(state.amplitude(b)) ** 2
        occupied = np.asarray([1.0 if c > 0 else 0.0 for c in _site_counts(b, layout)])
        density += p * occupied
    return density


def k_point_correlation(
    state: QuantumState, layout, sites, plan: SamplingPlan | None = None
) -> float | Estimate:
    """Probability that every listed site is occupied by at least one particle."""
    _check_layout(state, layout)
    sites = tuple(int(s) for s in sites)
    if not 1 <= len(sites) <= MAX_CORRELATION_POINTS:
        raise ValueError(f"correlations support 1..{MAX_CORRELATION_POINTS} sites, got {len(sites)}")
    if len(set(sites)) != len(sites):
        raise ValueError(f"sites must be distinct, got {sites}")
    for s in sites:
        if not 1 <= s <= layout.m:
            raise ValueError(f"site {s} out of range 1..{layout.m}")
    total = 0.0
    for b in state.support():
        counts = _site_counts(b, layout)
        if all(counts[s - 1] > 0 for s in sites):
            total += abs(state.amplitude(b)) ** 2
    if plan is None:
        return total

    def indicator(b):
        counts = _site_counts(b, layout)
        return [1.0 if all(counts[s - 1] > 0 for s in sites) else 0.0]

    mean, stderr = _sampled_vector(state, plan, indicator, 1)
    return Estimate(float(total), float(mean[0]), float(stderr[0]))


def pair_correlation(
    state: QuantumState, layout, site_a: int, site_b: int, plan: SamplingPlan | None = None
) -> float | Estimate:
    if site_a == site_b:
        raise ValueError("pair correlation needs two distinct sites")
    return k_point_correlation(state, layout, (site_a, site_b), plan)


def momentum_distribution(
    state: QuantumState, layout, particle: int, plan: SamplingPlan | None = None
) -> Histogram:
    """Momentum histogram of one particle, via a Fourier transform on a copy.

    Bin k of the m bins carries the weight of register value k after the
    transform, i.e. physical momentum 2*pi*k/m.  The input state is left
    untouched.  Only per-particle encodings are supported; the mode-number
    encoding has no per-particle register to transform.
    """
    _check_layout(state, layout)
    if not isinstance(layout, FirstQuantizedLayout):
        raise ValueError("momentum readout needs the per-particle encoding")
    if not 0 <= particle < layout.n:
        raise ValueError(f"particle index {particle} out of range 0..{layout.n - 1}")
    transformed = state.copy()
    transformed.qft_register(f"pos{particle}")
    w = layout.word_bits
    shift = particle * w + 1  # skip the spin bit
    pos_mask = layout.m - 1

    if plan is None:
        freqs = {k: 0.0 for k in range(layout.m)}
        for b in transformed.support():
            freqs[(b >> shift) & pos_mask] += abs(transformed.amplitude(b)) ** 2
        # The state norm is only held to 1e-10, looser than the histogram
        # invariant, so renormalize the Born weights explicitly.
        weight = sum(freqs.values())
        return Histogram(frequencies={k: f / weight for k, f in freqs.items()})

    counts = {k: 0 for k in range(layout.m)}
    for b, c in transformed.sample(plan.seed, plan.n_trials).items():
        counts[(b >> shift) & pos_mask] += c
    freqs = {k: c / plan.n_trials for k, c in counts.items()}
    return Histogram(frequencies=freqs, counts=counts, n_trials=plan.n_trials)


# ------------------------------------------------------------------- energies


def expected_energy(
    state: QuantumState, layout, params: HubbardParams, lattice: LatticeSpec | None = None
) -> EnergyReport:
    """<H> from the dense reference Hamiltonian, with its estimator split.

    The total is the Rayleigh quotient against the independently built dense
    matrix; potential and kinetic come from amplitude-level estimators.  The
    two paths must agree, and a drift beyond rounding is reported as an
    invariant violation rather than silently returned.
    """
    _check_layout(state, layout)
    if lattice is None:
        lattice = LatticeSpec.chain(layout.m)
    if lattice.m != layout.m:
        raise ValueError("lattice and layout disagree on the site count")
    if isinstance(layout, ModeLayout):
        h = oracle.build_sq_hamiltonian(lattice, params)
        potential, kinetic = _sq_energy(state, layout, params, lattice)
    else:
        h = oracle.build_fq_hamiltonian(layout, params, lattice)
        potential, kinetic = _fq_energy(state, layout, params, lattice)
    vec = state.to_vector()
    total = float(np.real(vec.conj() @ (h @ vec)))
    scale = max(1.0, abs(total))
    if abs(total - (potential + kinetic)) > ENERGY_SPLIT_TOL * scale:
        raise InvariantViolation(
            f"energy split {potential} + {kinetic} drifted from the dense value {total}"
        )
    return EnergyReport(potential=potential, kinetic=kinetic, total=total)


def _sq_energy(state, layout, params, lattice) -> tuple[float, float]:
    potential = 0.0
    for b in state.support():
        p = abs(state.amplitude(b)) ** 2
        doubly = sum(1 for c in _site_counts(b, layout) if c == 2)
        potential += params.v0 * p * doubly

    kinetic = 0.0
    for i, j in lattice.adjacency:
        for spin in SPINS:
            mode_a = layout.mode(min(i, j), spin)
            mode_b = layout.mode(max(i, j), spin)
            mask = (1 << mode_a) | (1 << mode_b)
            for b in state.support():
                occ = b & mask
                if occ == 0 or occ == mask:
                    continue
                partner = b ^ mask
                if b > partner:
                    continue  # count each unordered pair once
                sign = -1.0 if jw_parity(b, mode_a, mode_b) else 1.0
                overlap = state.amplitude(b).conjugate() * state.amplitude(partner)
                kinetic += 2.0 * params.t0 * sign * overlap.real
    return potential, kinetic


def _fq_energy(state, layout, params, lattice) -> tuple[float, float]:
    w = layout.word_bits
    mask = (1 << w) - 1
    neighbors: dict[int, list[int]] = {s: [] for s in range(1, layout.m + 1)}
    for i, j in lattice.adjacency:
        neighbors[i].append(j)
        neighbors[j].append(i)

    potential = 0.0
    kinetic = 0j
    for b in state.support():
        amp = state.amplitude(b)
        p = abs(amp) ** 2
        words = [(b >> (k * w)) & mask for k in range(layout.n)]
        coincidences = sum(
            1
            for k in range(layout.n)
            for l in range(k + 1, layout.n)
            if words[k] >> 1 == words[l] >> 1 and (words[k] ^ words[l]) & 1
        )
        potential += params.v0 * p * coincidences
        for k, word in enumerate(words):
            for target_site in neighbors[(word >> 1) + 1]:
                moved = ((target_site - 1) << 1) | (word & 1)
                partner = b ^ ((word ^ moved) << (k * w))
                kinetic += params.t0 * amp.conjugate() * state.amplitude(partner)
    return potential, float(kinetic.real)


# ------------------------------------------------------------------- sampling


def _sampled_vector(state, plan, per_basis, length) -> tuple[np.ndarray, np.ndarray]:
    counts = state.sample(plan.seed, plan.n_trials)
    total = plan.n_trials
    mean = np.zeros(length)
    second = np.zeros(length)
    for b, c in counts.items():
        vals = np.asarray(per_basis(b), dtype=float)
        mean += c * vals
        second += c * vals * vals
    mean /= total
    variance = np.maximum(second / total - mean * mean, 0.0)
    stderr = np.sqrt(variance / total)
    return mean, stderr


def _sampled_density(state, layout, plan) -> list[Estimate]:
    exact = charge_density(state, layout)

    def indicators(b):
        return [1.0 if c > 0 else 0.0 for c in _site_counts(b, layout)]

    mean, stderr = _sampled_vector(state, plan, indicators, layout.m)
    return [Estimate(float(e), float(s), float(se)) for e, s, se in zip(exact, mean, stderr)]
