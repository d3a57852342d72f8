"""Dishonest readers.

Everything here acts on the public quantum state only. The estimator at the
bottom drives full seal -> attack -> check rounds through the protocol
module and never looks at Alice's records itself.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import protocol
from . import quantum as qc
from .rng import Rng
from .stats import Estimate


@dataclass(frozen=True)
class IndividualAttack:
    """Measure ``read_indices`` in the computational basis, then leave or fake.

    ``theta_prime`` is None for measure-and-leave. A float fakes every read
    qubit with the same angle; a sequence gives one angle per read index.
    """

    read_indices: tuple[int, ...]
    theta_prime: float | tuple[float, ...] | None = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.read_indices)
        if len(set(idx)) != len(idx):
            raise ValueError("read indices must be distinct")
        object.__setattr__(self, "read_indices", idx)
        if isinstance(self.theta_prime, Sequence):
            tp = tuple(float(t) for t in self.theta_prime)
            if len(tp) != len(idx):
                raise ValueError("need one theta_prime per read index")
            object.__setattr__(self, "theta_prime", tp)

    @classmethod
    def first(cls, k: int, theta_prime=None) -> "IndividualAttack":
        return cls(tuple(range(k)), theta_prime)

    @property
    def k(self) -> int:
        return len(self.read_indices)

    @property
    def fakes(self) -> bool:
        return self.theta_prime is not None

    def validate(self, params: protocol.ProtocolParams) -> None:
        if any(i < 0 or i >= params.n for i in self.read_indices):
            raise ValueError(f"read indices must lie in [0, {params.n})")
        if self.fakes and np.any(np.abs(self.theta_prime) > params.half_width):
            raise ValueError(f"|theta_prime| <= Theta/n^alpha = {params.half_width:g} violated")


class Policy(str, enum.Enum):
    RANDOM = "random"
    PREFIX = "prefix"
    PARITY = "parity"
    EXPLICIT = "explicit"


@dataclass(frozen=True, eq=False)
class CollectiveAttack:
    """Confine the whole register to a span of computational basis vectors.

    RANDOM(m) and EXPLICIT(V) are two-outcome measurements {P_V, 1 - P_V}.
    PREFIX(j) measures the first j qubits and PARITY measures the parity of
    the string; for those the outcome picks V, so the state always
    collapses into the reported subspace. ``fake_rotation`` optionally
    rotates every qubit afterwards by the given angle.
    """

    policy: Policy
    m: int | None = None
    j: int | None = None
    subspace: qc.Subspace | None = None
    fake_rotation: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy(self.policy))
        if self.policy is Policy.RANDOM and (self.m is None or self.m < 1):
            raise ValueError("RANDOM policy needs m >= 1")
        if self.policy is Policy.PREFIX and (self.j is None or self.j < 0):
            raise ValueError("PREFIX policy needs j >= 0")
        if self.policy is Policy.EXPLICIT and self.subspace is None:
            raise ValueError("EXPLICIT policy needs a subspace")

    def target_dim(self, n: int) -> int:
        """Dimension of the subspace the attack aims at."""
        if self.policy is Policy.RANDOM:
            return self.m
        if self.policy is Policy.PREFIX:
            return 2 ** (n - self.j)
        if self.policy is Policy.PARITY:
            return 2 ** (n - 1)
        return self.subspace.dim

    def validate(self, n: int) -> None:
        if self.policy is Policy.RANDOM and self.m > 2 ** n:
            raise ValueError(f"m={self.m} exceeds 2**n={2 ** n}")
        if self.policy is Policy.PREFIX and self.j > n:
            raise ValueError(f"prefix length j={self.j} exceeds n={n}")
        if self.policy is Policy.EXPLICIT and self.subspace.n_qubits != n:
            raise ValueError("explicit subspace has the wrong qubit count")


class CollectiveOutcome(NamedTuple):
    subspace: qc.Subspace
    collapsed: bool
    state: qc.StateVector
    info_bits: float
    norm_in_v: float


def apply_individual(factors, attack: IndividualAttack, rng: Rng):
    """Attack on raw single-qubit amplitude arrays of shape (..., n, 2).

    Returns ``(learned_bits, new_factors)`` with learned bits in read order.
    """
    factors = np.asarray(factors, dtype=np.float64)
    idx = np.asarray(attack.read_indices, dtype=np.intp)
    new = factors.copy()
    if idx.size == 0:
        return np.zeros(factors.shape[:-2] + (0,), dtype=np.int8), new
    outcome, post = qc.measure_computational(factors[..., idx, :], rng)
    if attack.fakes:
        post = qc.make_qubit(outcome, np.broadcast_to(np.asarray(attack.theta_prime), outcome.shape))
    new[..., idx, :] = post
    return outcome, new


def attack_individual(public_state: qc.ProductState, attack: IndividualAttack, rng: Rng):
    """Measure the indexed qubits; leave them collapsed or replace them with fakes."""
    if not isinstance(public_state, qc.ProductState):
        raise TypeError("individual attacks act on a product state")
    if any(i >= public_state.n_qubits for i in attack.read_indices):
        raise ValueError("read index out of range")
    learned, new = apply_individual(public_state.factors, attack, rng)
    return learned, qc.ProductState(new)


def _parity(indices: np.ndarray, n: int) -> np.ndarray:
    par = np.zeros(indices.shape, dtype=np.int64)
    for s in range(n):
        par ^= (indices >> s) & 1
    return par


def _measure_partition(state: qc.StateVector, labels: np.ndarray, n_labels: int, rng: Rng):
    """Projective measurement whose outcomes are the classes of ``labels``."""
    weights = np.bincount(labels, weights=state.probabilities(), minlength=n_labels)
    cdf = np.cumsum(weights)
    u = rng.random() * cdf[-1]
    outcome = min(int(np.searchsorted(cdf, u, side="right")), n_labels - 1)
    while weights[outcome] <= qc.TINY:
        # only reachable through rounding at the edge of the cdf
        outcome -= 1
    return np.flatnonzero(labels == outcome)


def _rotate_all(state: qc.StateVector, angle: float) -> qc.StateVector:
    n = state.n_qubits
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    t = state.amplitudes.reshape((2,) * n)
    for q in range(n):
        t = np.moveaxis(np.tensordot(rot, t, axes=([1], [q])), 0, q)
    return qc.StateVector(t.reshape(-1))


def attack_collective(public_state, attack: CollectiveAttack, rng: Rng,
                      max_qubits: int = qc.MAX_DENSE_QUBITS) -> CollectiveOutcome:
    """Collapse the register into a computational-basis subspace.

    ``info_bits`` is n - log2(dim) of the subspace the state ended up in,
    which for two-outcome policies may be the complement of the target.
    """
    n = public_state.n_qubits
    if n > max_qubits:
        raise qc.ResourceLimitError(f"collective attack on {n} qubits exceeds the dense cap {max_qubits}")
    attack.validate(n)
    dense = public_state if isinstance(public_state, qc.StateVector) else qc.expand(public_state, max_qubits)
    dim = dense.dim
    pol = attack.policy

    if pol in (Policy.RANDOM, Policy.EXPLICIT):
        if pol is Policy.RANDOM:
            target = qc.Subspace(n, rng.choice(dim, size=attack.m, replace=False))
        else:
            target = attack.subspace
        collapsed, post, norm_in_v = qc.project_onto_subspace(dense, target, rng)
        landed = target if collapsed else target.complement()
    else:
        all_idx = np.arange(dim, dtype=np.int64)
        if pol is Policy.PREFIX:
            labels, n_labels = all_idx >> (n - attack.j), 2 ** attack.j
        else:
            labels, n_labels = _parity(all_idx, n), 2
        landed = qc.Subspace(n, _measure_partition(dense, labels, n_labels, rng))
        norm_in_v, post = qc.restrict(dense, landed.basis_indices)
        collapsed = True

    if attack.fake_rotation:
        post = _rotate_all(post, attack.fake_rotation)
    info = n - math.log2(landed.dim)
    return CollectiveOutcome(landed, collapsed, post, info, norm_in_v)


def run_round(strategy, params: protocol.ProtocolParams, bits, rng: Rng, pin_theta=None):
    """One seal -> attack -> check round. Returns ``(report, attack_result)``."""
    sealed = protocol.seal(params, bits, rng, pin_theta=pin_theta)
    result = None
    if strategy == "honest":
        result, state = protocol.read_public(sealed.public_state, rng)
        sealed = sealed.with_public_state(state)
    elif isinstance(strategy, IndividualAttack):
        result, state = attack_individual(sealed.public_state, strategy, rng)
        sealed = sealed.with_public_state(state)
    elif isinstance(strategy, CollectiveAttack):
        result = attack_collective(sealed.public_state, strategy, rng)
        sealed = sealed.with_public_state(result.state)
    elif strategy not in (None, "none"):
        raise ValueError(f"unknown strategy {strategy!r}")
    report, _ = protocol.check(sealed, rng)
    return report, result


def evasion_probability_empirical(strategy, params: protocol.ProtocolParams, trials: int, rng: Rng,
                                  pin_theta: float | None = None) -> Estimate:
    """Fraction of rounds Alice's check reports UNREAD, with a Wilson 95% interval.

    Bits are drawn uniformly per round. For two-outcome collective
    policies only rounds that collapsed into the target subspace count.
    The no-op strategy is certain to pass and returns a zero-width interval.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if isinstance(strategy, IndividualAttack):
        strategy.validate(params)
    passes = counted = 0
    for _ in range(trials):
        bits = rng.integers(0, 2, params.n)
        report, result = run_round(strategy, params, bits, rng, pin_theta)
        if isinstance(result, CollectiveOutcome) and not result.collapsed:
            continue
        counted += 1
        passes += report.verdict is protocol.Verdict.UNREAD
    if strategy in (None, "none") and passes == counted:
        return Estimate.certain(counted)
    return Estimate.from_counts(passes, counted)
