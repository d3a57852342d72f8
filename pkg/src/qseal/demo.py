"""Sealing one bit behind a sealed instruction string.

Register layout handed to the reader, in order:

* the instruction text, 8-bit ASCII, most significant bit first, sealed with
  the string protocol;
* ``dummy_count`` qubits in random computational basis states, never checked;
* two payload qubits, each an eigenstate of the basis
  {cos a|0> + sin a|1>, -sin a|0> + cos a|1>} with labels 0/1 such that
  label1 XOR label2 equals the secret bit.

An honest reader reads the instruction, then measures the last two qubits
in the rotated basis and XORs the labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytics, protocol
from . import quantum as qc
from .rng import Rng

DEFAULT_ANGLE = math.pi / 12
DEFAULT_INSTRUCTION = (
    "Measure the final two qubits in the basis rotated by 15 degrees from the "
    "computational basis. The secret bit is the XOR of the two outcome labels. "
    "All qubits between this text and those two are dummies; leave them alone."
)


@dataclass(frozen=True)
class DemoSpec:
    secret_bit: int
    instruction_text: str = DEFAULT_INSTRUCTION
    dummy_count: int = 32
    payload_basis_angle: float = DEFAULT_ANGLE

    def __post_init__(self):
        if self.secret_bit not in (0, 1):
            raise ValueError("secret_bit must be 0 or 1")
        if not self.instruction_text.isascii():
            raise ValueError("instruction text must be ASCII")
        if not self.instruction_text:
            raise ValueError("instruction text must not be empty")
        if self.dummy_count < 0:
            raise ValueError("dummy_count must be >= 0")
        if not 0 < self.payload_basis_angle < math.pi / 4:
            raise ValueError("payload basis angle must lie in (0, pi/4)")


def text_to_bits(text: str) -> np.ndarray:
    return np.unpackbits(np.frombuffer(text.encode("ascii"), dtype=np.uint8)).astype(np.int8)


def bits_to_text(bits) -> str:
    raw = np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()
    return raw.decode("ascii", errors="replace")


def rotated_state(label, angle: float) -> np.ndarray:
    """Rotated-basis eigenstate for ``label``: 0 -> (cos a, sin a), 1 -> (-sin a, cos a)."""
    c, s = math.cos(angle), math.sin(angle)
    label = np.asarray(label)
    return np.where(label[..., None] == 0, np.array([c, s]), np.array([-s, c]))


def measure_rotated(qubits, angle: float, rng: Rng) -> np.ndarray:
    """Label of a rotated-basis measurement: 0 when the qubit projects onto the label-0 state."""
    target = np.broadcast_to(rotated_state(0, angle), np.shape(qubits))
    passed, _ = qc.project_onto_pure(qubits, target, rng)
    return (~passed).astype(np.int8)


@dataclass
class DemoTranscript:
    spec: DemoSpec
    params: protocol.ProtocolParams
    sealed: protocol.SealedString
    payload_labels: tuple[int, int]
    dummy_bits: np.ndarray
    register: qc.ProductState
    steps: list[str] = field(default_factory=list)
    decoded_text: str | None = None
    decoded_bit: int | None = None
    instruction_bit_errors: int | None = None
    check: protocol.CheckReport | None = None

    @property
    def n_instruction(self) -> int:
        return self.params.n

    def detection_probability(self) -> float:
        """Chance Alice sees READ once every instruction qubit has been measured."""
        return 1.0 - analytics.evade_prob_individual(self.sealed.private_thetas)

    def to_dict(self) -> dict:
        return {
            "secret_bit": self.spec.secret_bit,
            "payload_basis_angle": self.spec.payload_basis_angle,
            "instruction_qubits": self.n_instruction,
            "dummy_qubits": self.spec.dummy_count,
            "register_qubits": self.register.n_qubits,
            "params": {"n": self.params.n, "theta": self.params.Theta, "alpha": self.params.alpha,
                       "seed": self.params.seed},
            "instruction_bits": protocol.bits_to_hex(self.sealed.private_bits),
            "thetas": [float(t) for t in self.sealed.private_thetas],
            "payload_labels": list(self.payload_labels),
            "decoded_text": self.decoded_text,
            "instruction_bit_errors": self.instruction_bit_errors,
            "decoded_bit": self.decoded_bit,
            "check": None if self.check is None else self.check.to_record(),
            "predicted_detection_if_read": self.detection_probability(),
            "steps": list(self.steps),
        }


def prepare(spec: DemoSpec, Theta: float, alpha: float, rng: Rng, seed: int | None = None) -> DemoTranscript:
    """Alice's side: seal the instruction and assemble the full register."""
    bits = text_to_bits(spec.instruction_text)
    params = protocol.ProtocolParams(bits.size, Theta, alpha, seed)
    sealed = protocol.seal(params, bits, rng)
    first = int(rng.integers(0, 2))
    labels = (first, first ^ spec.secret_bit)
    dummies = rng.integers(0, 2, spec.dummy_count, dtype=np.int8)
    register = qc.ProductState(np.concatenate([
        sealed.public_state.factors,
        qc.basis_qubit(dummies).reshape(-1, 2),
        rotated_state(np.array(labels), spec.payload_basis_angle),
    ]))
    t = DemoTranscript(spec, params, sealed, labels, dummies, register)
    t.steps.append(f"sealed {bits.size} instruction qubits (8-bit ASCII, MSB first) "
                   f"with thetas in [-{params.half_width:.6g}, {params.half_width:.6g}]")
    t.steps.append(f"appended {spec.dummy_count} dummy qubits in random computational states; "
                   "they carry nothing and are never checked")
    t.steps.append(f"appended 2 payload qubits in the basis rotated by {math.degrees(spec.payload_basis_angle):.6g} deg; "
                   "label parity encodes the secret bit")
    return t


def honest_decode(t: DemoTranscript, rng: Rng) -> DemoTranscript:
    """Bob's side: read the instruction qubits, then measure the payload in the rotated basis."""
    n = t.n_instruction
    reg = t.register
    text_bits, after = protocol.read_public(reg, rng, indices=np.arange(n))
    t.decoded_text = bits_to_text(text_bits)
    t.instruction_bit_errors = int(np.count_nonzero(text_bits != t.sealed.private_bits))
    labels = measure_rotated(after.factors[-2:], t.spec.payload_basis_angle, rng)
    t.decoded_bit = int(labels[0] ^ labels[1])
    t.register = after
    t.steps.append(f"reader measured the {n} instruction qubits in the computational basis")
    t.steps.append(f"reader measured the payload qubits in the rotated basis: labels {labels.tolist()}, "
                   f"parity {t.decoded_bit}")
    return t


def alice_check(t: DemoTranscript, rng: Rng) -> DemoTranscript:
    """Check the instruction qubits of the current register against Alice's records."""
    n = t.n_instruction
    sealed = t.sealed.with_public_state(qc.ProductState(t.register.factors[:n]))
    report, after = protocol.check(sealed, rng)
    t.check = report
    t.register = t.register.replace(np.arange(n), after.public_state.factors)
    t.steps.append(f"Alice checked the instruction qubits: {report.verdict.value}")
    return t


def run_demo(spec: DemoSpec, Theta: float = 0.2, alpha: float = 0.25, rng: Rng | None = None,
             seed: int | None = None, read: bool = True) -> DemoTranscript:
    rng = rng if rng is not None else np.random.default_rng(seed)
    t = prepare(spec, Theta, alpha, rng, seed)
    if read:
        honest_decode(t, rng)
    return alice_check(t, rng)
