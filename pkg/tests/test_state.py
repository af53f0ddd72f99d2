import math

import numpy as np
import pytest
from conftest import (
    dft_matrix,
    embed_controlled,
    embed_register,
    embed_single,
    make_state,
    random_program,
    random_state_map,
    random_unitary,
    run_program,
    states_agree,
)

from fermisim.state import (
    InvariantViolation,
    QuantumState,
    RegisterLayout,
    init_basis_state,
    inject_state,
    inner_product,
    validation_mode,
)

X = np.array([[0, 1], [1, 0]], dtype=float)
H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)

TWO = RegisterLayout.of(("q", 2))
THREE = RegisterLayout.of(("q", 3))
BACKENDS = ("dense", "sparse")


class TestRegisterLayout:
    def test_offsets_follow_declaration_order(self):
        layout = RegisterLayout.of(("a", 3), ("b", 2), ("c", 4))
        assert layout.width == 9
        assert layout.offset("a") == 0
        assert layout.offset("b") == 3
        assert layout.offset("c") == 5
        assert list(layout.qubits("b")) == [3, 4]

    def test_field_round_trip(self):
        layout = RegisterLayout.of(("a", 3), ("b", 2))
        basis = layout.with_field(0, "a", 5)
        basis = layout.with_field(basis, "b", 2)
        assert layout.field(basis, "a") == 5
        assert layout.field(basis, "b") == 2
        assert basis == 5 | (2 << 3)

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            RegisterLayout.of(("a", 2), ("a", 1))

    def test_field_value_must_fit(self):
        layout = RegisterLayout.of(("a", 2))
        with pytest.raises(ValueError):
            layout.with_field(0, "a", 4)


class TestInit:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_basis_state(self, backend):
        state = init_basis_state(TWO, 0b00, backend)
        assert state.norm() == 1.0
        assert state.amplitude(0) == 1.0
        assert state.support() == [0]

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_bits_out_of_range(self, backend):
        with pytest.raises(ValueError):
            init_basis_state(TWO, 4, backend)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_inject_normalized(self, backend):
        s = 1 / math.sqrt(2)
        state = inject_state(TWO, {0b00: s, 0b11: s}, backend)
        assert abs(state.amplitude(3) - s) < 1e-15

    def test_inject_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            inject_state(TWO, {0: 0.9, 3: 0.5})

    def test_dense_width_cap(self):
        wide = RegisterLayout.of(("w", 27))
        with pytest.raises(ValueError):
            QuantumState(wide, "dense")
        assert QuantumState(wide, "sparse").norm() == 1.0

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            QuantumState(TWO, "lazy")


class TestSingleQubit:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_x_flips_bit_zero(self, backend):
        state = init_basis_state(TWO, 0b00, backend)
        state.apply_single_qubit_unitary(0, X)
        assert abs(state.amplitude(0b01) - 1.0) < 1e-15

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_against_kronecker_oracle(self, backend):
        rng = np.random.default_rng(11)
        for width in (3, 4):
            layout = RegisterLayout.of(("q", width))
            for _ in range(20):
                amps = random_state_map(rng, width, 1 << width)
                state = make_state(layout, amps, backend)
                qubit = int(rng.integers(width))
                gate = random_unitary(rng)
                state.apply_single_qubit_unitary(qubit, gate)
                vec = embed_single(width, qubit, gate) @ _to_vec(amps, width)
                _assert_matches_vector(state, vec, 1e-12)

    def test_non_unitary_rejected(self):
        state = init_basis_state(TWO, 0)
        with pytest.raises(ValueError):
            state.apply_single_qubit_unitary(0, [[1, 1], [0, 1]])

    def test_qubit_out_of_range(self):
        state = init_basis_state(TWO, 0)
        with pytest.raises(ValueError):
            state.apply_single_qubit_unitary(2, X)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_hadamard_twice_is_identity(self, backend):
        state = init_basis_state(THREE, 0b101, backend)
        state.apply_single_qubit_unitary(1, H)
        state.apply_single_qubit_unitary(1, H)
        assert abs(state.amplitude(0b101) - 1.0) < 1e-12


class TestControlled:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_cnot_truth_table(self, backend):
        for control_val, flipped in ((0, False), (1, True)):
            state = init_basis_state(TWO, control_val << 1, backend)
            state.apply_controlled_unitary(((1, 1),), 0, X)
            expect = (control_val << 1) | (1 if flipped else 0)
            assert abs(state.amplitude(expect) - 1.0) < 1e-15

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_against_oracle(self, backend):
        rng = np.random.default_rng(7)
        width = 4
        layout = RegisterLayout.of(("q", width))
        for _ in range(20):
            amps = random_state_map(rng, width, 12)
            state = make_state(layout, amps, backend)
            qubits = rng.choice(width, size=3, replace=False)
            controls = tuple((int(q), int(rng.integers(2))) for q in qubits[1:])
            gate = random_unitary(rng)
            state.apply_controlled_unitary(controls, int(qubits[0]), gate)
            vec = embed_controlled(width, controls, int(qubits[0]), gate) @ _to_vec(amps, width)
            _assert_matches_vector(state, vec, 1e-12)

    def test_control_target_overlap_rejected(self):
        state = init_basis_state(TWO, 0)
        with pytest.raises(ValueError):
            state.apply_controlled_unitary(((0, 1),), 0, X)

    def test_bad_control_value(self):
        state = init_basis_state(TWO, 0)
        with pytest.raises(ValueError):
            state.apply_controlled_unitary(((1, 2),), 0, X)


class TestPhase:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_phase_on_selected_strings(self, backend):
        s = 1 / math.sqrt(2)
        state = inject_state(TWO, {0b00: s, 0b11: s}, backend)
        state.apply_phase_if(lambda b: b == 0b11, math.pi / 2)
        assert abs(state.amplitude(0b11) - s * 1j) < 1e-15
        assert abs(state.amplitude(0b00) - s) < 1e-15

    def test_zero_angle_is_identity(self):
        state = init_basis_state(TWO, 3)
        state.apply_phase_if(lambda b: True, 0.0)
        assert state.amplitude(3) == 1.0

    def test_sign_flip_is_exact(self):
        s = 1 / math.sqrt(2)
        state = inject_state(TWO, {0: s, 3: s}, "sparse")
        state.apply_sign_if(lambda b: b == 3)
        assert state.amplitude(3) == -s

    def test_nonfinite_angle_rejected(self):
        state = init_basis_state(TWO, 0)
        with pytest.raises(ValueError):
            state.apply_phase_if(lambda b: True, math.inf)


class TestBasisPermutation:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_cyclic_shift(self, backend):
        dim = 4
        s = 1 / math.sqrt(2)
        state = inject_state(TWO, {0: s, 3: s}, backend)
        state.apply_basis_permutation(lambda b: (b + 1) % dim)
        assert abs(state.amplitude(1) - s) < 1e-15
        assert abs(state.amplitude(0) - s) < 1e-15

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_round_trip_is_exact(self, backend):
        rng = np.random.default_rng(3)
        amps = random_state_map(rng, 3, 6)
        state = make_state(THREE, amps, backend)
        table = [int(t) for t in rng.permutation(8)]
        inverse = [0] * 8
        for i, t in enumerate(table):
            inverse[t] = i
        state.apply_basis_permutation(lambda b: table[b])
        state.apply_basis_permutation(lambda b: inverse[b])
        assert state.to_map() == amps

    def test_non_injective_on_support_rejected(self):
        s = 1 / math.sqrt(2)
        state = inject_state(TWO, {0: s, 3: s})
        with pytest.raises(ValueError):
            state.apply_basis_permutation(lambda b: 0)

    def test_validation_mode_checks_whole_domain(self):
        state = init_basis_state(TWO, 0)
        # injective on the support {0} but not on the full basis
        with validation_mode():
            with pytest.raises(ValueError):
                state.apply_basis_permutation(lambda b: min(b, 2))


class TestTwoLevelMix:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_swap_pair(self, backend):
        state = init_basis_state(TWO, 0b01, backend)
        state.apply_two_level_mix([(0b01, 0b10)], X)
        assert abs(state.amplitude(0b10) - 1.0) < 1e-15

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_unpaired_strings_untouched(self, backend):
        s = 1 / math.sqrt(2)
        state = inject_state(TWO, {0b00: s, 0b11: s}, backend)
        state.apply_two_level_mix([(0b01, 0b10)], random_unitary(np.random.default_rng(0)))
        assert abs(state.amplitude(0b00) - s) < 1e-15
        assert abs(state.amplitude(0b11) - s) < 1e-15

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_against_oracle(self, backend):
        rng = np.random.default_rng(21)
        width = 4
        layout = RegisterLayout.of(("q", width))
        for _ in range(10):
            amps = random_state_map(rng, width, 10)
            state = make_state(layout, amps, backend)
            flat = [int(b) for b in rng.permutation(1 << width)[:8]]
            pairs = list(zip(flat[0::2], flat[1::2]))
            gate = random_unitary(rng)
            state.apply_two_level_mix(pairs, gate)
            mat = np.eye(1 << width, dtype=complex)
            for b0, b1 in pairs:
                mat[b0, b0] = gate[0, 0]
                mat[b0, b1] = gate[0, 1]
                mat[b1, b0] = gate[1, 0]
                mat[b1, b1] = gate[1, 1]
            _assert_matches_vector(state, mat @ _to_vec(amps, width), 1e-12)

    def test_overlapping_pairs_rejected(self):
        state = init_basis_state(TWO, 0)
        with pytest.raises(ValueError):
            state.apply_two_level_mix([(0, 1), (1, 2)], X)

    def test_degenerate_pair_rejected(self):
        state = init_basis_state(TWO, 0)
        with pytest.raises(ValueError):
            state.apply_two_level_mix([(2, 2)], X)


class TestQft:
    @pytest.mark.parametrize("backend", BACKENDS)
    @pytest.mark.parametrize("width", (1, 2, 3))
    def test_matches_dft_matrix(self, backend, width):
        layout = RegisterLayout.of(("low", 1), ("r", width), ("high", 2))
        rng = np.random.default_rng(width)
        oracle = embed_register(layout, "r", dft_matrix(width))
        for _ in range(5):
            amps = random_state_map(rng, layout.width, 10)
            state = make_state(layout, amps, backend)
            state.qft_register("r")
            _assert_matches_vector(state, oracle @ _to_vec(amps, layout.width), 1e-10)

    def test_plane_wave_collapses_to_single_bin(self):
        width = 3
        dim = 8
        layout = RegisterLayout.of(("r", width))
        k = 3
        amps = {x: np.exp(-2j * np.pi * k * x / dim) / math.sqrt(dim) for x in range(dim)}
        state = inject_state(layout, amps)
        state.qft_register("r")
        assert abs(state.amplitude(k)) > 1 - 1e-12

    def test_preserves_other_registers(self):
        layout = RegisterLayout.of(("r", 2), ("tag", 2))
        state = init_basis_state(layout, 0b10_01, "sparse")
        state.qft_register("r")
        for b in state.support():
            assert layout.field(b, "tag") == 0b10


class TestSampling:
    def test_counts_sum_and_determinism(self):
        s = 1 / math.sqrt(2)
        state = inject_state(TWO, {0: s, 3: s})
        first = state.sample(seed=42, n_trials=1000)
        second = state.sample(seed=42, n_trials=1000)
        assert first == second
        assert sum(first.values()) == 1000
        assert set(first) <= {0, 3}

    def test_different_seeds_differ(self):
        s = 1 / math.sqrt(2)
        state = inject_state(TWO, {0: s, 3: s})
        assert state.sample(seed=1, n_trials=500) != state.sample(seed=2, n_trials=500)

    def test_frequencies_near_born_rule(self):
        s = 1 / math.sqrt(2)
        state = inject_state(TWO, {0: s, 3: s})
        counts = state.sample(seed=2024, n_trials=10_000)
        assert 0.48 <= counts[3] / 10_000 <= 0.52

    def test_seed_validation(self):
        state = init_basis_state(TWO, 0)
        with pytest.raises(ValueError):
            state.sample(seed=-1, n_trials=10)
        with pytest.raises(ValueError):
            state.sample(seed=1 << 64, n_trials=10)
        with pytest.raises(ValueError):
            state.sample(seed=0, n_trials=0)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_deterministic_for_backend(self, backend):
        rng = np.random.default_rng(5)
        amps = random_state_map(rng, 3, 5)
        a = make_state(THREE, amps, backend).sample(seed=9, n_trials=200)
        b = make_state(THREE, amps, backend).sample(seed=9, n_trials=200)
        assert a == b


class TestInnerProduct:
    def test_orthogonal_and_self(self):
        a = init_basis_state(TWO, 0)
        b = init_basis_state(TWO, 3)
        assert inner_product(a, b) == 0
        assert abs(inner_product(a, a) - 1.0) < 1e-15

    def test_mixed_backends(self):
        s = 1 / math.sqrt(2)
        a = inject_state(TWO, {0: s, 3: s}, "dense")
        b = inject_state(TWO, {0: s, 3: -s}, "sparse")
        assert abs(inner_product(a, b)) < 1e-15

    def test_layout_mismatch_rejected(self):
        a = init_basis_state(TWO, 0)
        b = init_basis_state(RegisterLayout.of(("p", 2)), 0)
        with pytest.raises(ValueError):
            inner_product(a, b)


class TestBackendEquivalence:
    def test_random_programs_agree(self):
        layout = RegisterLayout.of(("r0", 3), ("r1", 3))
        rng = np.random.default_rng(1234)
        for trial in range(100):
            amps = random_state_map(rng, layout.width, int(rng.integers(1, 20)))
            program = random_program(rng, layout, n_ops=8)
            dense = make_state(layout, amps, "dense")
            sparse = make_state(layout, amps, "sparse")
            run_program(dense, program)
            run_program(sparse, program)
            assert states_agree(dense, sparse, 1e-12), f"trial {trial} diverged"

    def test_norm_drift_stays_small(self):
        layout = RegisterLayout.of(("r0", 3), ("r1", 3))
        rng = np.random.default_rng(77)
        state = init_basis_state(layout, 0, "dense")
        for _ in range(1000):
            state.apply_single_qubit_unitary(int(rng.integers(6)), random_unitary(rng))
        assert abs(state.norm() - 1.0) < 1e-9


def _to_vec(amps: dict[int, complex], width: int) -> np.ndarray:
    vec = np.zeros(1 << width, dtype=complex)
    for b, a in amps.items():
        vec[b] = a
    return vec


def _assert_matches_vector(state: QuantumState, vec: np.ndarray, atol: float) -> None:
    np.testing.assert_allclose(state.to_vector(), vec, atol=atol, rtol=0)
