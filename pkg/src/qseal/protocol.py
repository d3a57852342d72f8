"""Alice's sealing and checking, and the honest reader.

``SealedString`` keeps Alice's secret angles and bits next to the public
quantum state. Readers and attackers are handed ``sealed.public_state`` only;
the secrets are consulted by ``check`` alone.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import quantum as qc
from .rng import Rng

RECORD_VERSION = 1
PRIVATE_FIELDS = ("bits", "thetas")


class ParamError(ValueError):
    pass


class Verdict(str, enum.Enum):
    UNREAD = "UNREAD"
    READ = "READ"


@dataclass(frozen=True)
class ProtocolParams:
    n: int
    Theta: float
    alpha: float
    seed: int | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParamError(f"n >= 1 violated: n={self.n!r}")
        if not 0 < self.Theta < math.pi / 4:
            raise ParamError(f"0 < Theta < pi/4 violated: Theta={self.Theta!r}")
        if not 0 < self.alpha < 0.5:
            raise ParamError(f"0 < alpha < 1/2 violated: alpha={self.alpha!r}")
        if self.Theta > math.pi / 8:
            warnings.warn(f"Theta={self.Theta:.4g} exceeds pi/8; the protocol assumes Theta << pi/4",
                          stacklevel=3)

    @property
    def half_width(self) -> float:
        """Largest allowed |theta_i|, Theta / n**alpha."""
        return self.Theta / self.n ** self.alpha


@dataclass(frozen=True, eq=False)
class SealedString:
    params: ProtocolParams
    private_bits: np.ndarray
    private_thetas: np.ndarray
    public_state: qc.ProductState | qc.StateVector
    pinned: bool = False

    def __post_init__(self):
        bits = np.array(self.private_bits, dtype=np.int8)
        thetas = np.array(self.private_thetas, dtype=np.float64)
        n = self.params.n
        if bits.shape != (n,) or thetas.shape != (n,):
            raise ParamError(f"expected {n} bits and {n} angles")
        if np.any(np.abs(thetas) > self.params.half_width):
            raise ParamError("|theta_i| <= Theta / n**alpha violated")
        if self.public_state.n_qubits != n:
            raise ParamError("public state has the wrong number of qubits")
        bits.setflags(write=False)
        thetas.setflags(write=False)
        object.__setattr__(self, "private_bits", bits)
        object.__setattr__(self, "private_thetas", thetas)

    def target_factors(self) -> np.ndarray:
        return qc.make_qubit(self.private_bits, self.private_thetas)

    def with_public_state(self, state) -> "SealedString":
        return replace(self, public_state=state)

    def to_record(self, public: bool = False) -> dict:
        rec = {
            "version": RECORD_VERSION,
            "params": {"n": self.params.n, "theta": self.params.Theta,
                       "alpha": self.params.alpha, "seed": self.params.seed},
            "pinned": self.pinned,
            "state": state_to_record(self.public_state),
        }
        if public:
            rec["public_view"] = True
        else:
            rec["bits"] = bits_to_hex(self.private_bits)
            rec["thetas"] = [float(t) for t in self.private_thetas]
            rec["private_fields"] = list(PRIVATE_FIELDS)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "SealedString":
        if rec.get("version") != RECORD_VERSION:
            raise ParamError(f"unsupported record version {rec.get('version')!r}")
        if rec.get("public_view"):
            raise ParamError("record is a public view; Alice's private fields are missing")
        p = rec["params"]
        params = ProtocolParams(int(p["n"]), float(p["theta"]), float(p["alpha"]), p.get("seed"))
        return cls(params, hex_to_bits(rec["bits"], params.n), rec["thetas"],
                   state_from_record(rec["state"]), bool(rec.get("pinned", False)))


@dataclass(frozen=True)
class CheckReport:
    per_qubit_pass: tuple[bool, ...]
    mode: str = "product"
    stream: str | None = None
    verdict: Verdict = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "verdict", Verdict.UNREAD if all(self.per_qubit_pass) else Verdict.READ)

    def to_record(self) -> dict:
        return {"verdict": self.verdict.value, "mode": self.mode, "stream": self.stream,
                "per_qubit_pass": list(self.per_qubit_pass)}


def bits_to_hex(bits) -> str:
    bits = [int(b) for b in bits]
    value = int("".join(map(str, bits)), 2) if bits else 0
    return format(value, "0{}x".format(max(1, -(-len(bits) // 4))))


def hex_to_bits(text: str, n: int) -> np.ndarray:
    value = int(text, 16)
    if value >> n:
        raise ParamError(f"hex bit string does not fit in {n} bits")
    return np.array([int(c) for c in format(value, f"0{n}b")], dtype=np.int8)


def state_to_record(state) -> dict:
    if isinstance(state, qc.ProductState):
        return {"kind": "product", "factors": state.factors.tolist()}
    return {"kind": "dense", "amplitudes": state.amplitudes.tolist()}


def state_from_record(rec: dict):
    if rec["kind"] == "product":
        return qc.ProductState(np.array(rec["factors"], dtype=float))
    if rec["kind"] == "dense":
        return qc.StateVector(np.array(rec["amplitudes"], dtype=float))
    raise ParamError(f"unknown state kind {rec['kind']!r}")


def seal(params: ProtocolParams, bits, rng: Rng, pin_theta: float | None = None) -> SealedString:
    """Encode ``bits`` with angles drawn uniformly from [-Theta/n^alpha, Theta/n^alpha].

    ``pin_theta`` replaces the random angles with one fixed value. That is a
    diagnostic mode, not the protocol, and the result is flagged ``pinned``.
    """
    bits = np.asarray(bits, dtype=np.int8)
    if bits.shape != (params.n,):
        raise ParamError(f"expected {params.n} bits, got {bits.size}")
    a = params.half_width
    if pin_theta is None:
        thetas = rng.uniform(-a, a, params.n)
    else:
        if abs(pin_theta) > a:
            raise ParamError(f"pinned theta {pin_theta!r} outside [-{a:g}, {a:g}]")
        thetas = np.full(params.n, float(pin_theta))
    state = qc.ProductState(qc.make_qubit(bits, thetas))
    return SealedString(params, bits, thetas, state, pinned=pin_theta is not None)


def read_public(state: qc.ProductState, rng: Rng, indices=None):
    """Measure the given qubits (all by default) in the computational basis.

    Returns ``(bits, new_state)``; ``bits`` follows the order of ``indices``.
    """
    if not isinstance(state, qc.ProductState):
        raise TypeError("qubit-wise reading needs a product state")
    idx = np.arange(state.n_qubits) if indices is None else np.asarray(indices, dtype=np.intp)
    outcome, post = qc.measure_computational(state.factors[idx], rng)
    return outcome, state.replace(idx, post)


def read_honest(sealed: SealedString, rng: Rng):
    """Bob's reading: every qubit in the computational basis. Returns ``(bits, sealed_after)``."""
    bits, state = read_public(sealed.public_state, rng)
    return bits, sealed.with_public_state(state)


def check(sealed: SealedString, rng: Rng, early_exit: bool = False, stream: str | None = None):
    """Alice projects each qubit onto her encoding state.

    Returns ``(CheckReport, sealed_after)``. A dense public state (left by a
    collective attack) is tested as a whole against the n-fold product
    target, giving a single pass/fail entry.
    """
    targets = sealed.target_factors()
    state = sealed.public_state
    if isinstance(state, qc.StateVector):
        target = qc.expand(qc.ProductState(targets), max_qubits=max(qc.MAX_DENSE_QUBITS, state.n_qubits))
        ov = float(np.dot(target.amplitudes, state.amplitudes))
        passed = bool(rng.random() < ov * ov)
        rest = state.amplitudes - ov * target.amplitudes
        rest_norm = float(np.linalg.norm(rest))
        if rest_norm < 1e-12:
            # no orthogonal component beyond rounding; a failure here is a rounding artifact
            passed = True
        post = target if passed else qc.StateVector(rest / rest_norm)
        return CheckReport((passed,), mode="dense", stream=stream), sealed.with_public_state(post)

    passed, post = qc.project_onto_pure(state.factors, targets, rng)
    if early_exit and not passed.all():
        stop = int(np.argmin(passed)) + 1
        passed, post = passed[:stop], post[:stop]
    new_state = state.replace(np.arange(passed.size), post)
    report = CheckReport(tuple(bool(p) for p in passed), stream=stream)
    return report, sealed.with_public_state(new_state)


def check_is_repeatable(sealed: SealedString, rng: Rng) -> bool:
    """Check twice in a row; the second outcome must repeat the first qubit by qubit."""
    first, after = check(sealed, rng)
    second, _ = check(after, rng)
    return first.per_qubit_pass == second.per_qubit_pass
