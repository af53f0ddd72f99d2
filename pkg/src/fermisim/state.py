"""Quantum state backends and the elementary operations shared by every simulator module.

Basis strings are plain ints; bit 0 is the least significant bit and belongs to
the first register of the layout.  Two interchangeable backends are provided: a
dense complex vector of length 2**Q and a sparse amplitude map that stores only
nonzero entries.  Entries are removed from the sparse map only when they are
exactly zero; small amplitudes are never thresholded away.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

# Squared-norm drift tolerated after any public mutating operation.
NORM_TOL = 1e-10
# Max deviation of U'U from the identity for accepted 2x2 gate matrices.
UNITARY_TOL = 1e-12
# Dense statevectors refuse to allocate beyond this many qubits.
DENSE_QUBIT_LIMIT = 26
# Exhaustive bijection checks in validation mode are capped at this width.
BIJECTION_CHECK_LIMIT = 20

BACKENDS = ("dense", "sparse")


class InvariantViolation(RuntimeError):
    """An internal consistency guarantee broke: a simulator bug, not a user error."""


_validation_enabled = False


def set_validation_mode(enabled: bool) -> None:
    """Toggle the global validation mode (exhaustive, exponential-cost checks)."""
    global _validation_enabled
    _validation_enabled = bool(enabled)


def validation_enabled() -> bool:
    return _validation_enabled


@contextmanager
def validation_mode(enabled: bool = True):
    """Temporarily force validation mode on (or off) within a block."""
    previous = _validation_enabled
    set_validation_mode(enabled)
    try:
        yield
    finally:
        set_validation_mode(previous)


@dataclass(frozen=True)
class RegisterLayout:
    """Named contiguous qubit registers, listed in order of increasing qubit index.

    The first register occupies the least significant bits of the basis string,
    the next register the bits directly above it, and so on.
    """

    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        seen = set()
        for name, width in self.registers:
            if not name or not isinstance(name, str):
                raise ValueError(f"register name {name!r} must be a non-empty string")
            if not isinstance(width, int) or width < 0:
                raise ValueError(f"register {name!r} has invalid width {width!r}")
            if name in seen:
                raise ValueError(f"duplicate register name {name!r}")
            seen.add(name)

    @classmethod
    def of(cls, *registers: tuple[str, int]) -> RegisterLayout:
        return cls(tuple((str(n), int(w)) for n, w in registers))

    @property
    def width(self) -> int:
        """Total number of qubits."""
        return sum(w for _, w in self.registers)

    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.registers)

    def offset(self, name: str) -> int:
        off = 0
        for reg, width in self.registers:
            if reg == name:
                return off
            off += width
        raise KeyError(f"no register named {name!r}")

    def register_width(self, name: str) -> int:
        for reg, width in self.registers:
            if reg == name:
                return width
        raise KeyError(f"no register named {name!r}")

    def qubits(self, name: str) -> range:
        off = self.offset(name)
        return range(off, off + self.register_width(name))

    def field(self, basis: int, name: str) -> int:
        """Value held by the named register within a basis string."""
        off = self.offset(name)
        return (basis >> off) & ((1 << self.register_width(name)) - 1)

    def with_field(self, basis: int, name: str, value: int) -> int:
        off = self.offset(name)
        width = self.register_width(name)
        if not 0 <= value < (1 << width):
            raise ValueError(f"value {value} does not fit register {name!r} ({width} bits)")
        mask = ((1 << width) - 1) << off
        return (basis & ~mask) | (value << off)

    def check_basis(self, basis: int) -> None:
        if not isinstance(basis, (int, np.integer)):
            raise ValueError(f"basis string must be an int, got {type(basis).__name__}")
        if not 0 <= basis < (1 << self.width):
            raise ValueError(f"basis string {basis} out of range for {self.width} qubits")


def _as_gate(matrix) -> np.ndarray:
    gate = np.asarray(matrix, dtype=complex)
    if gate.shape != (2, 2):
        raise ValueError(f"gate must be 2x2, got shape {gate.shape}")
    if np.abs(gate.conj().T @ gate - np.eye(2)).max() > UNITARY_TOL:
        raise ValueError("gate matrix is not unitary within 1e-12")
    return gate


class QuantumState:
    """Normalized amplitudes over fixed-width basis strings, dense or sparse.

    All mutating operations preserve the norm and verify it afterwards; a
    failed check raises InvariantViolation because it can only come from a
    simulator defect.
    """

    __slots__ = ("layout", "_vec", "_amps")

    def __init__(self, layout: RegisterLayout, backend: str = "dense"):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}, expected one of {BACKENDS}")
        if backend == "dense" and layout.width > DENSE_QUBIT_LIMIT:
            raise ValueError(
                f"dense backend limited to {DENSE_QUBIT_LIMIT} qubits, layout has {layout.width}"
            )
        self.layout = layout
        if backend == "dense":
            self._vec = np.zeros(1 << layout.width, dtype=complex)
            self._vec[0] = 1.0
            self._amps = None
        else:
            self._vec = None
            self._amps = {0: 1.0 + 0.0j}

    @property
    def backend(self) -> str:
        return "dense" if self._vec is not None else "sparse"

    @property
    def num_qubits(self) -> int:
        return self.layout.width

    # ------------------------------------------------------------------ access

    def amplitude(self, basis: int) -> complex:
        self.layout.check_basis(basis)
        if self._vec is not None:
            return complex(self._vec[basis])
        return complex(self._amps.get(basis, 0.0))

    def support(self) -> list[int]:
        """Basis strings with nonzero amplitude, in increasing order."""
        if self._vec is not None:
            return [int(b) for b in np.flatnonzero(self._vec)]
        return sorted(self._amps)

    def to_map(self) -> dict[int, complex]:
        return {b: self.amplitude(b) for b in self.support()}

    def to_vector(self) -> np.ndarray:
        if self._vec is not None:
            return self._vec.copy()
        if self.layout.width > DENSE_QUBIT_LIMIT:
            raise ValueError("state too wide to densify")
        vec = np.zeros(1 << self.layout.width, dtype=complex)
        for b, a in self._amps.items():
            vec[b] = a
        return vec

    def norm(self) -> float:
        if self._vec is not None:
            return float(np.linalg.norm(self._vec))
        return math.sqrt(sum(abs(a) ** 2 for a in self._amps.values()))

    def copy(self) -> QuantumState:
        dup = object.__new__(QuantumState)
        dup.layout = self.layout
        dup._vec = None if self._vec is None else self._vec.copy()
        dup._amps = None if self._amps is None else dict(self._amps)
        return dup

    def __repr__(self) -> str:
        terms = []
        for b in self.support()[:4]:
            a = self.amplitude(b)
            terms.append(f"({a:.3g})|{b:0{max(self.layout.width, 1)}b}>")
        if len(self.support()) > 4:
            terms.append("...")
        body = " + ".join(terms) if terms else "0"
        return f"QuantumState({self.backend}, {self.layout.width} qubits, {body})"

    # ------------------------------------------------------------------ gates

    def apply_single_qubit_unitary(self, qubit: int, matrix) -> None:
        """Apply a 2x2 unitary to one qubit."""
        self.apply_controlled_unitary((), qubit, matrix)

    def apply_controlled_unitary(self, controls, target: int, matrix) -> None:
        """Apply a 2x2 unitary to `target` where every (qubit, value) control matches."""
        gate = _as_gate(matrix)
        controls = tuple((int(q), int(v)) for q, v in controls)
        qubits = [q for q, _ in controls] + [target]
        if len(set(qubits)) != len(qubits):
            raise ValueError("control and target qubits must be distinct")
        for q, v in controls:
            self._check_qubit(q)
            if v not in (0, 1):
                raise ValueError(f"control value must be 0 or 1, got {v}")
        self._check_qubit(target)
        tbit = 1 << target

        if self._vec is not None:
            idx = np.arange(self._vec.size)
            keep = np.ones(self._vec.size, dtype=bool)
            for q, v in controls:
                keep &= ((idx >> q) & 1) == v
            i0 = idx[keep & ((idx & tbit) == 0)]
            i1 = i0 | tbit
            a0 = self._vec[i0]
            a1 = self._vec[i1]
            self._vec[i0] = gate[0, 0] * a0 + gate[0, 1] * a1
            self._vec[i1] = gate[1, 0] * a0 + gate[1, 1] * a1
        else:
            amps = self._amps
            new = dict(amps)
            seen = set()
            for b in amps:
                if any(((b >> q) & 1) != v for q, v in controls):
                    continue
                b0 = b & ~tbit
                if b0 in seen:
                    continue
                seen.add(b0)
                b1 = b0 | tbit
                a0 = amps.get(b0, 0j)
                a1 = amps.get(b1, 0j)
                for bb, aa in ((b0, gate[0, 0] * a0 + gate[0, 1] * a1),
                               (b1, gate[1, 0] * a0 + gate[1, 1] * a1)):
                    if aa == 0:
                        new.pop(bb, None)
                    else:
                        new[bb] = aa
            self._amps = new
        self._check_norm()

    def apply_phase_if(self, predicate: Callable[[int], bool], theta: float) -> None:
        """Multiply amplitudes of basis strings satisfying `predicate` by exp(i*theta)."""
        if not math.isfinite(theta):
            raise ValueError(f"phase angle must be finite, got {theta}")
        factor = complex(math.cos(theta), math.sin(theta))
        self._scale_if(predicate, factor)

    def apply_sign_if(self, predicate: Callable[[int], bool]) -> None:
        """Multiply amplitudes of matching basis strings by exactly -1.

        Dedicated sign flip so reversible pipelines stay exact; exp(i*pi)
        carries a stray 1e-16 imaginary part.
        """
        self._scale_if(predicate, -1.0)

    def _scale_if(self, predicate, factor) -> None:
        if self._vec is not None:
            for b in np.flatnonzero(self._vec):
                if predicate(int(b)):
                    self._vec[b] *= factor
        else:
            for b, a in list(self._amps.items()):
                if predicate(b):
                    self._amps[b] = a * factor
        self._check_norm()

    def apply_basis_permutation(self, mapping: Callable[[int], int]) -> None:
        """Relabel basis strings: amplitude at b moves to mapping(b).

        `mapping` must be a bijection on the full basis; production mode checks
        injectivity on the support, validation mode checks the whole domain
        (up to 20 qubits).
        """
        dim = 1 << self.layout.width
        if validation_enabled() and self.layout.width <= BIJECTION_CHECK_LIMIT:
            image = np.fromiter((mapping(b) for b in range(dim)), dtype=np.int64, count=dim)
            order = np.sort(image)
            if not np.array_equal(order, np.arange(dim)):
                raise ValueError("mapping is not a bijection on the basis")
        self._move_support(mapping)

    def apply_two_level_mix(self, pairs: Iterable[tuple[int, int]], matrix) -> None:
        """Mix the amplitudes of each pair of basis strings by a 2x2 unitary.

        Pairs must not overlap; basis strings outside every pair are untouched.
        """
        gate = _as_gate(matrix)
        seen = set()
        pair_list = []
        for b0, b1 in pairs:
            self.layout.check_basis(b0)
            self.layout.check_basis(b1)
            if b0 == b1 or b0 in seen or b1 in seen:
                raise ValueError("two-level pairs overlap")
            seen.add(b0)
            seen.add(b1)
            pair_list.append((b0, b1))

        if self._vec is not None:
            if pair_list:
                i0 = np.array([p[0] for p in pair_list])
                i1 = np.array([p[1] for p in pair_list])
                a0 = self._vec[i0]
                a1 = self._vec[i1]
                self._vec[i0] = gate[0, 0] * a0 + gate[0, 1] * a1
                self._vec[i1] = gate[1, 0] * a0 + gate[1, 1] * a1
        else:
            amps = self._amps
            for b0, b1 in pair_list:
                a0 = amps.get(b0, 0j)
                a1 = amps.get(b1, 0j)
                if a0 == 0 and a1 == 0:
                    continue
                for bb, aa in ((b0, gate[0, 0] * a0 + gate[0, 1] * a1),
                               (b1, gate[1, 0] * a0 + gate[1, 1] * a1)):
                    if aa == 0:
                        amps.pop(bb, None)
                    else:
                        amps[bb] = aa
        self._check_norm()

    def qft_register(self, name: str) -> None:
        """Quantum Fourier transform of one register, other registers untouched.

        Convention: amplitude'(k) = 2**(-w/2) * sum_x exp(2*pi*i*k*x/2**w) * amplitude(x)
        per fixed setting of the remaining registers.
        """
        width = self.layout.register_width(name)
        offset = self.layout.offset(name)
        if width == 0:
            return
        inv_sqrt2 = 1.0 / math.sqrt(2.0)
        hadamard = np.array([[inv_sqrt2, inv_sqrt2], [inv_sqrt2, -inv_sqrt2]])
        for j in range(width - 1, -1, -1):
            self.apply_single_qubit_unitary(offset + j, hadamard)
            for l in range(j - 1, -1, -1):
                angle = 2.0 * math.pi / (1 << (j - l + 1))
                phase = np.array([[1.0, 0.0], [0.0, complex(math.cos(angle), math.sin(angle))]])
                self.apply_controlled_unitary(((offset + l, 1),), offset + j, phase)
        # The cascade leaves the output bits in reversed significance order.
        table = [0] * (1 << width)
        for x in range(1 << width):
            rev = 0
            for p in range(width):
                if x & (1 << p):
                    rev |= 1 << (width - 1 - p)
            table[x] = rev
        self.apply_basis_permutation(self._lift_field_map(name, table))

    # ------------------------------------------------------------------ readout

    def sample(self, seed: int, n_trials: int) -> dict[int, int]:
        """Draw `n_trials` basis strings from the Born distribution.

        The stream is fully determined by the 64 bit seed (and the backend,
        which fixes the enumeration order of the support).
        """
        if not isinstance(seed, (int, np.integer)) or not 0 <= seed < (1 << 64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not isinstance(n_trials, (int, np.integer)) or n_trials < 1:
            raise ValueError("n_trials must be a positive integer")
        keys = self.support()
        probs = np.array([abs(self.amplitude(b)) ** 2 for b in keys])
        total = probs.sum()
        if abs(total - 1.0) > NORM_TOL:
            raise InvariantViolation(f"sampling a state with squared norm {total}")
        probs /= total
        rng = np.random.default_rng(int(seed))
        draws = rng.choice(len(keys), size=int(n_trials), p=probs)
        counts: dict[int, int] = {}
        for d in draws:
            counts[keys[d]] = counts.get(keys[d], 0) + 1
        return counts

    def inner_product(self, other: QuantumState) -> complex:
        """<self|other>; both states must share the same register layout."""
        if self.layout != other.layout:
            raise ValueError("inner product requires identical register layouts")
        return sum(
            (self.amplitude(b).conjugate() * other.amplitude(b) for b in self.support()),
            start=0j,
        )

    # ------------------------------------------------------------------ plumbing

    def _check_qubit(self, q: int) -> None:
        if not isinstance(q, (int, np.integer)) or not 0 <= q < self.layout.width:
            raise ValueError(f"qubit index {q} out of range for {self.layout.width} qubits")

    def _check_norm(self) -> None:
        if self._vec is not None:
            total = float(np.vdot(self._vec, self._vec).real)
        else:
            total = sum(abs(a) ** 2 for a in self._amps.values())
        if abs(total - 1.0) > NORM_TOL:
            raise InvariantViolation(f"squared norm drifted to {total!r}")

    def _lift_field_map(self, name: str, table: Sequence[int]) -> Callable[[int], int]:
        """Turn a bijection on one register's values into a full basis mapping."""
        layout = self.layout
        return lambda b: layout.with_field(b, name, table[layout.field(b, name)])

    def _move_support(self, mapping: Callable[[int], int]) -> None:
        """Relocate amplitudes along `mapping`, requiring injectivity on the support."""
        dim = 1 << self.layout.width
        if self._vec is not None:
            new = np.zeros_like(self._vec)
            count = 0
            for b in np.flatnonzero(self._vec):
                t = mapping(int(b))
                if not 0 <= t < dim:
                    raise ValueError(f"mapping sent {int(b)} out of range ({t})")
                new[t] = self._vec[b]
                count += 1
            if int(np.count_nonzero(new)) != count:
                raise ValueError("mapping is not injective on the support")
            self._vec = new
        else:
            new_amps = {}
            for b, a in self._amps.items():
                t = mapping(b)
                if not 0 <= t < dim:
                    raise ValueError(f"mapping sent {b} out of range ({t})")
                if t in new_amps:
                    raise ValueError("mapping is not injective on the support")
                new_amps[t] = a
            self._amps = new_amps
        self._check_norm()

    def _scatter_support(self, expand: Callable[[int], Iterable[tuple[int, complex]]]) -> None:
        """Replace each support string b by the weighted strings expand(b) yields.

        Used for isometric branch splitting (rank-superposition preparation);
        the norm check after the rewrite is the isometry guard.
        """
        if self._vec is not None:
            new = np.zeros_like(self._vec)
            for b in np.flatnonzero(self._vec):
                a = self._vec[b]
                for t, coeff in expand(int(b)):
                    self.layout.check_basis(t)
                    new[t] += a * coeff
            self._vec = new
        else:
            new_amps: dict[int, complex] = {}
            for b, a in self._amps.items():
                for t, coeff in expand(b):
                    self.layout.check_basis(t)
                    val = new_amps.get(t, 0j) + a * coeff
                    if val == 0:
                        new_amps.pop(t, None)
                    else:
                        new_amps[t] = val
            self._amps = new_amps
        self._check_norm()

    def _set_map(self, amplitudes: Mapping[int, complex]) -> None:
        if self._vec is not None:
            self._vec[:] = 0.0
            for b, a in amplitudes.items():
                self._vec[b] = a
        else:
            self._amps = {b: complex(a) for b, a in amplitudes.items() if a != 0}
        self._check_norm()


def init_basis_state(layout: RegisterLayout, bits: int, backend: str = "dense") -> QuantumState:
    """State with amplitude 1 on the given basis string and 0 elsewhere."""
    layout.check_basis(bits)
    state = QuantumState(layout, backend)
    if state._vec is not None:
        state._vec[0] = 0.0
        state._vec[bits] = 1.0
    else:
        state._amps = {int(bits): 1.0 + 0.0j}
    return state


def inject_state(
    layout: RegisterLayout, amplitudes: Mapping[int, complex], backend: str = "dense"
) -> QuantumState:
    """Build a state from an explicit amplitude map, which must be normalized."""
    total = 0.0
    for b, a in amplitudes.items():
        layout.check_basis(b)
        total += abs(a) ** 2
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"amplitude map has squared norm {total}, expected 1 within 1e-10")
    state = QuantumState(layout, backend)
    state._set_map(amplitudes)
    return state


def inner_product(a: QuantumState, b: QuantumState) -> complex:
    return a.inner_product(b)
