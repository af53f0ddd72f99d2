"""Occupation-number Trotter evolution tested against dense operator oracles."""

import numpy as np
import pytest

from conftest import random_state_map

from fermisim.oracle import build_sq_hamiltonian, hopping_term, propagator
from fermisim.sq import (
    DOWN,
    UP,
    HubbardParams,
    LatticeSpec,
    ModeLayout,
    TrotterPlan,
    encode_occupation,
    evolve_hopping_pair,
    evolve_potential,
    jw_parity,
    op_count,
    trotter_evolve,
    trotter_step,
)
from fermisim.state import init_basis_state, inject_state

PARAMS = HubbardParams(v0=4.0, t0=1.0)


def dense_state(m, amplitudes):
    return inject_state(ModeLayout(m).register_layout(), amplitudes, "dense")


def random_dense_state(rng, m, support=12):
    layout = ModeLayout(m).register_layout()
    return inject_state(layout, random_state_map(rng, layout.width, support), "dense")


class TestLatticeSpec:
    def test_chain_adjacency(self):
        assert LatticeSpec.chain(4).adjacency == ((1, 2), (2, 3), (3, 4))
        assert LatticeSpec.chain(1).adjacency == ()

    def test_rejects_bad_pairs(self):
        with pytest.raises(ValueError):
            LatticeSpec(3, ((1, 4),))
        with pytest.raises(ValueError):
            LatticeSpec(3, ((1, 2), (2, 1)))
        with pytest.raises(ValueError):
            LatticeSpec(3, ((2, 2),))


class TestModeLayout:
    def test_mode_indices(self):
        layout = ModeLayout(3)
        assert layout.mode(1, UP) == 0
        assert layout.mode(1, DOWN) == 1
        assert layout.mode(3, DOWN) == 5
        assert layout.n_modes == 6

    def test_register_layout(self):
        assert ModeLayout(2).register_layout().width == 4

    def test_encode_occupation(self):
        layout = ModeLayout(2)
        assert encode_occupation(layout, ()) == 0
        assert encode_occupation(layout, ((1, UP), (2, DOWN))) == 0b1001
        with pytest.raises(ValueError):
            encode_occupation(layout, ((1, UP), (1, UP)))


class TestJwParity:
    def test_counts_strictly_between(self):
        assert jw_parity(0b0110, 0, 3) == 0
        assert jw_parity(0b0010, 0, 2) == 1
        assert jw_parity(0b0100, 0, 2) == 0  # endpoint occupancy is ignored
        assert jw_parity(0b1001, 0, 3) == 0
        assert jw_parity(0b111111, 1, 4) == 0
        assert jw_parity(0b111111, 1, 5) == 1

    def test_requires_ordered_modes(self):
        with pytest.raises(ValueError):
            jw_parity(0, 2, 2)


class TestPotential:
    def test_phase_only_on_double_occupancy(self):
        lattice = LatticeSpec.chain(2)
        layout = ModeLayout(2)
        both = encode_occupation(layout, ((1, UP), (1, DOWN)))
        single = encode_occupation(layout, ((1, UP), (2, DOWN)))
        state = dense_state(2, {both: np.sqrt(0.5), single: np.sqrt(0.5)})
        evolve_potential(state, lattice, PARAMS, dt=0.3)
        expected = np.exp(-1j * PARAMS.v0 * 0.3) * np.sqrt(0.5)
        assert state.amplitude(both) == pytest.approx(expected, abs=1e-12)
        assert state.amplitude(single) == pytest.approx(np.sqrt(0.5), abs=1e-12)

    def test_matches_diagonal_oracle(self):
        rng = np.random.default_rng(7)
        lattice = LatticeSpec.chain(2)
        h_v = build_sq_hamiltonian(lattice, HubbardParams(v0=PARAMS.v0, t0=0.0))
        state = random_dense_state(rng, 2)
        want = propagator(h_v, 0.17) @ state.to_vector()
        evolve_potential(state, lattice, PARAMS, dt=0.17)
        np.testing.assert_allclose(state.to_vector(), want, atol=1e-12)


class TestHoppingPair:
    @pytest.mark.parametrize("spin", (UP, DOWN))
    @pytest.mark.parametrize("sites", ((1, 2), (2, 3)))
    def test_every_basis_string_matches_single_term_propagator(self, sites, spin):
        m, dt = 3, 0.37
        layout = ModeLayout(m)
        a = layout.mode(sites[0], spin)
        b = layout.mode(sites[1], spin)
        u = propagator(PARAMS.t0 * hopping_term(2 * m, a, b), dt)
        for bits in range(1 << (2 * m)):
            state = init_basis_state(layout.register_layout(), bits)
            evolve_hopping_pair(state, sites[0], sites[1], spin, PARAMS, dt)
            np.testing.assert_allclose(state.to_vector(), u[:, bits], atol=1e-12)

    def test_sign_string_changes_the_mix(self):
        # Hop (1, 2) at spin up skips mode (1, down); occupying it flips the
        # sign of the generator, which shows up as a conjugated off-diagonal.
        m, dt = 2, 0.25
        layout = ModeLayout(m)
        empty_between = encode_occupation(layout, ((1, UP),))
        occupied_between = encode_occupation(layout, ((1, UP), (1, DOWN)))
        s0 = init_basis_state(layout.register_layout(), empty_between)
        s1 = init_basis_state(layout.register_layout(), occupied_between)
        evolve_hopping_pair(s0, 1, 2, UP, PARAMS, dt)
        evolve_hopping_pair(s1, 1, 2, UP, PARAMS, dt)
        partner0 = empty_between ^ 0b0101
        partner1 = occupied_between ^ 0b0101
        assert s0.amplitude(partner0) == pytest.approx(-1j * np.sin(dt * PARAMS.t0), abs=1e-12)
        assert s1.amplitude(partner1) == pytest.approx(+1j * np.sin(dt * PARAMS.t0), abs=1e-12)

    def test_superposition_input(self):
        rng = np.random.default_rng(21)
        m, dt = 3, 0.41
        layout = ModeLayout(m)
        u = propagator(
            PARAMS.t0 * hopping_term(2 * m, layout.mode(2, DOWN), layout.mode(3, DOWN)), dt
        )
        state = random_dense_state(rng, m, support=20)
        want = u @ state.to_vector()
        evolve_hopping_pair(state, 2, 3, DOWN, PARAMS, dt)
        np.testing.assert_allclose(state.to_vector(), want, atol=1e-12)

    def test_rejects_non_adjacent_sites(self):
        state = init_basis_state(ModeLayout(3).register_layout(), 0)
        with pytest.raises(ValueError):
            evolve_hopping_pair(state, 1, 3, UP, PARAMS, 0.1)


class TestTrotterStep:
    def test_equals_product_of_term_propagators(self):
        # A single step is an exact product of the term propagators in the
        # documented order, so it must match to machine precision.
        rng = np.random.default_rng(3)
        m, dt = 2, 0.19
        lattice = LatticeSpec.chain(m)
        layout = ModeLayout(m)
        state = random_dense_state(rng, m)
        vec = state.to_vector()
        h_v = build_sq_hamiltonian(lattice, HubbardParams(v0=PARAMS.v0, t0=0.0))
        vec = propagator(h_v, dt) @ vec
        for spin in (UP, DOWN):
            term = PARAMS.t0 * hopping_term(2 * m, layout.mode(1, spin), layout.mode(2, spin))
            vec = propagator(term, dt) @ vec
        trotter_step(state, lattice, PARAMS, dt)
        np.testing.assert_allclose(state.to_vector(), vec, atol=1e-12)

    def test_number_and_spin_conservation(self):
        lattice = LatticeSpec.chain(3)
        layout = ModeLayout(3)
        bits = encode_occupation(layout, ((1, UP), (2, UP), (2, DOWN)))
        state = init_basis_state(layout.register_layout(), bits)
        trotter_evolve(state, lattice, PARAMS, TrotterPlan(t=0.9, r=7))
        up_mask = sum(1 << layout.mode(s, UP) for s in range(1, 4))
        for b in state.support():
            assert (b & up_mask).bit_count() == 2
            assert (b & ~up_mask).bit_count() == 1

    def test_layout_mismatch_rejected(self):
        state = init_basis_state(ModeLayout(2).register_layout(), 0)
        with pytest.raises(ValueError):
            trotter_evolve(state, LatticeSpec.chain(3), PARAMS, TrotterPlan(t=0.1, r=1))


class TestTrotterConvergence:
    def test_first_order_error_halves_with_r(self):
        lattice = LatticeSpec.chain(2)
        layout = ModeLayout(2)
        bits = encode_occupation(layout, ((1, UP), (1, DOWN)))
        h = build_sq_hamiltonian(lattice, PARAMS)
        exact = propagator(h, 1.0)[:, bits]

        def error(r):
            state = init_basis_state(layout.register_layout(), bits)
            trotter_evolve(state, lattice, PARAMS, TrotterPlan(t=1.0, r=r))
            return np.linalg.norm(state.to_vector() - exact)

        e16, e32 = error(16), error(32)
        assert 1.7 < e16 / e32 < 2.3
        assert error(128) < 4e-3


class TestOpCount:
    def test_exact_tally_small_chain(self):
        counts = op_count(LatticeSpec.chain(2), TrotterPlan(t=1.0, r=3))
        assert counts == {
            "potential_phase": 6,
            "parity_scan": 12,
            "pair_mix": 6,
            "total": 24,
        }

    def test_linear_in_r(self):
        one = op_count(LatticeSpec.chain(5), TrotterPlan(t=1.0, r=1))["total"]
        ten = op_count(LatticeSpec.chain(5), TrotterPlan(t=1.0, r=10))["total"]
        assert ten == 10 * one

    @pytest.mark.parametrize("m", (4, 8, 16))
    def test_doubling_sites_stays_under_quadratic_bound(self, m):
        plan = TrotterPlan(t=1.0, r=4)
        small = op_count(LatticeSpec.chain(m), plan)["total"]
        large = op_count(LatticeSpec.chain(2 * m), plan)["total"]
        assert large / small <= 4.5


class TestParamValidation:
    def test_non_finite_params_rejected(self):
        with pytest.raises(ValueError):
            HubbardParams(v0=float("nan"), t0=1.0)
        with pytest.raises(ValueError):
            HubbardParams(v0=0.0, t0=float("inf"))

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            TrotterPlan(t=1.0, r=0)
        with pytest.raises(ValueError):
            TrotterPlan(t=float("nan"), r=4)
        assert TrotterPlan(t=2.0, r=8).dt == pytest.approx(0.25)
