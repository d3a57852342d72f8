"""Real-amplitude qubit states and the measurements the protocol needs.

Single-qubit states are amplitude pairs ``(c0, c1)`` stored in the last axis
of an array, so every single-qubit routine here also works on whole batches
(shape ``(..., 2)``). Multi-qubit states come in two forms: ``ProductState``
keeps one pair per qubit and scales to very long strings, ``StateVector``
holds all ``2**n`` amplitudes and is capped at ``MAX_DENSE_QUBITS``.

Basis index convention: qubit 0 is the most significant bit of the index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import Rng

MAX_DENSE_QUBITS = 20
NORM_TOL = 1e-12
TINY = 1e-300
QUARTER_PI = np.pi / 4


class ResourceLimitError(ValueError):
    """A dense operation was requested above the configured qubit cap."""


def _check_dense_size(n: int, max_qubits: int) -> None:
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    if n > max_qubits:
        raise ResourceLimitError(
            f"dense state over {n} qubits exceeds the cap of {max_qubits} "
            f"({8 * 2 ** n} bytes); raise max_qubits explicitly if intended"
        )


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be one-dimensional")
        size = amps.shape[0]
        if size < 2 or size & (size - 1):
            raise ValueError(f"length {size} is not 2**n for n >= 1")
        norm = float(amps @ amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (sum of squares {norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return int(self.amplitudes.shape[0]).bit_length() - 1

    @property
    def dim(self) -> int:
        return int(self.amplitudes.shape[0])

    def probabilities(self) -> np.ndarray:
        return self.amplitudes ** 2


@dataclass(frozen=True, eq=False)
class ProductState:
    """Unentangled n-qubit state, one ``(c0, c1)`` row per qubit."""

    factors: np.ndarray

    def __post_init__(self):
        f = _frozen(self.factors)
        if f.ndim != 2 or f.shape[1] != 2 or f.shape[0] < 1:
            raise ValueError(f"factors must have shape (n, 2) with n >= 1, got {f.shape}")
        bad = np.flatnonzero(np.abs(np.einsum("ij,ij->i", f, f) - 1.0) > NORM_TOL)
        if bad.size:
            raise ValueError(f"factor {int(bad[0])} is not normalized")
        object.__setattr__(self, "factors", f)

    @property
    def n_qubits(self) -> int:
        return int(self.factors.shape[0])

    def replace(self, indices, new_factors) -> "ProductState":
        f = np.array(self.factors)
        f[np.asarray(indices, dtype=np.intp)] = new_factors
        return ProductState(f)

    def expand(self, max_qubits: int = MAX_DENSE_QUBITS) -> StateVector:
        return expand(self, max_qubits)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Span of a set of computational basis vectors."""

    n_qubits: int
    basis_indices: np.ndarray

    def __post_init__(self):
        idx = np.unique(np.asarray(self.basis_indices, dtype=np.int64))
        if idx.size != np.asarray(self.basis_indices).size:
            raise ValueError("basis indices contain duplicates")
        dim = 2 ** self.n_qubits
        if idx.size < 1:
            raise ValueError("subspace must contain at least one basis vector")
        if idx[0] < 0 or idx[-1] >= dim:
            raise ValueError(f"basis indices must lie in [0, {dim})")
        idx.setflags(write=False)
        object.__setattr__(self, "basis_indices", idx)

    @property
    def dim(self) -> int:
        return int(self.basis_indices.size)

    @classmethod
    def full(cls, n_qubits: int) -> "Subspace":
        return cls(n_qubits, np.arange(2 ** n_qubits))

    def complement(self) -> "Subspace":
        mask = np.ones(2 ** self.n_qubits, dtype=bool)
        mask[self.basis_indices] = False
        return Subspace(self.n_qubits, np.flatnonzero(mask))


def make_qubit(bit, theta) -> np.ndarray:
    """Encode ``bit`` as cos(theta)|bit> + sin(theta)|not bit>.

    Broadcasts over arrays of bits and angles; the result has a trailing
    axis of length 2 holding the amplitudes of |0> and |1>.
    """
    theta = np.asarray(theta, dtype=np.float64)
    bit = np.asarray(bit)
    if np.any(np.abs(theta) >= QUARTER_PI):
        raise ValueError("encoding angle must satisfy |theta| < pi/4")
    if not np.all((bit == 0) | (bit == 1)):
        raise ValueError("bits must be 0 or 1")
    c, s = np.cos(theta), np.sin(theta)
    one = bit.astype(bool)
    c0 = np.where(one, s, c)
    c1 = np.where(one, c, s)
    return np.stack(np.broadcast_arrays(c0, c1), axis=-1)


def basis_qubit(bit) -> np.ndarray:
    bit = np.asarray(bit)
    return np.stack([(bit == 0).astype(np.float64), (bit == 1).astype(np.float64)], axis=-1)


def orthogonal(state) -> np.ndarray:
    """The real single-qubit state orthogonal to ``state``: (c0, c1) -> (-c1, c0)."""
    state = np.asarray(state, dtype=np.float64)
    return np.stack([-state[..., 1], state[..., 0]], axis=-1)


def expand(product: ProductState, max_qubits: int = MAX_DENSE_QUBITS) -> StateVector:
    """Tensor product of the factors, qubit 0 most significant."""
    _check_dense_size(product.n_qubits, max_qubits)
    vec = np.ones(1)
    for f in product.factors:
        vec = np.outer(vec, f).ravel()
    return StateVector(vec)


def contract(state: StateVector, tol: float = 1e-10) -> ProductState:
    """Recover product factors from a dense vector, or raise if it is entangled."""
    n = state.n_qubits
    amps = state.amplitudes
    pivot = int(np.argmax(np.abs(amps)))
    factors = np.empty((n, 2))
    for q in range(n):
        shift = n - 1 - q
        base = pivot & ~(1 << shift)
        pair = np.array([amps[base], amps[base | (1 << shift)]])
        factors[q] = pair / np.linalg.norm(pair)
    # factors are fixed up to sign; match the pivot amplitude's sign on qubit 0
    sign = np.sign(amps[pivot]) * np.prod([np.sign(factors[q, (pivot >> (n - 1 - q)) & 1]) for q in range(n)])
    factors[0] *= sign
    out = ProductState(factors)
    if np.max(np.abs(expand(out, max_qubits=max(n, MAX_DENSE_QUBITS)).amplitudes - amps)) > tol:
        raise ValueError("state is entangled; it has no product decomposition")
    return out


def measure_computational(state, rng: Rng):
    """Measure qubit(s) in {|0>, |1>}.

    Returns ``(outcome, post_state)``. Outcome is 1 with probability c1**2.
    One uniform draw is consumed per qubit.
    """
    state = np.asarray(state, dtype=np.float64)
    p1 = state[..., 1] ** 2
    outcome = (rng.random(p1.shape) < p1).astype(np.int8)
    return outcome, basis_qubit(outcome)


def project_onto_pure(state, target, rng: Rng):
    """Two-outcome projective test {|target><target|, 1 - |target><target|}.

    Returns ``(passed, post_state)``: on a pass the qubit is left in
    ``target``, otherwise in the orthogonal state.
    """
    state = np.asarray(state, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    p = np.einsum("...i,...i->...", state, target) ** 2
    # a state equal to the target up to rounding must pass with certainty
    p = np.where(p > 1.0 - NORM_TOL, 1.0, p)
    passed = rng.random(p.shape) < p
    post = np.where(passed[..., None], target, orthogonal(target))
    return passed, post


def restrict(state: StateVector, indices) -> tuple[float, StateVector | None]:
    """Norm of ``state`` inside span(indices) and the renormalized restriction.

    The restriction is ``None`` when the weight is below ``TINY``.
    """
    indices = np.asarray(indices, dtype=np.int64)
    part = state.amplitudes[indices]
    weight = float(part @ part)
    if weight < TINY:
        return 0.0, None
    out = np.zeros_like(state.amplitudes)
    out[indices] = part / np.sqrt(weight)
    # renormalize once more; the division above can leave ~1e-16 drift
    out /= np.linalg.norm(out)
    return weight, StateVector(out)


def project_onto_subspace(state: StateVector, subspace: Subspace, rng: Rng):
    """Projective measurement {P_V, 1 - P_V} on a dense state.

    Returns ``(collapsed_into_v, post_state, norm_in_v)`` where ``norm_in_v``
    is the exact weight sum over v in V of <v|psi>**2.
    """
    if subspace.n_qubits != state.n_qubits:
        raise ValueError("subspace and state have different qubit counts")
    norm_in_v, inside = restrict(state, subspace.basis_indices)
    collapsed = bool(rng.random() < norm_in_v)
    if collapsed:
        return True, inside, norm_in_v
    _, outside = restrict(state, subspace.complement().basis_indices)
    if outside is None:
        # all weight is in V but the draw still fell outside (norm_in_v rounded below 1)
        return True, inside, norm_in_v
    return False, outside, norm_in_v


def overlap_sq(a: StateVector, b: StateVector) -> float:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(np.dot(a.amplitudes, b.amplitudes) ** 2)
