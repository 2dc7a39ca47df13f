"""
Tests for the precoder/combiner updates and the BCD loop.
"""

import unittest

import numpy as np
from numpy.testing import assert_allclose

from models.config import RisConfig, SolverOptions
from models.state import TransceiverState
from optimization.bcd import (
    initial_state,
    normalize_combiner,
    run_bcd,
    solve_combiner,
    update_combiner,
    update_precoder,
)
from optimization.fp_transforms import f_tau_nats, update_iota, update_tau
from simulation.channel_model import generate_channel_set
from tests.helpers import random_channel_set, random_state, small_scenario


def _fixed_point(seed, **kwargs):
    rng = np.random.default_rng(seed)
    ch = random_channel_set(rng, **kwargs)
    ris = RisConfig()
    state = random_state(rng, ch)
    aux = update_tau(state, ch, ris, update_iota(state, ch, ris))
    return ch, ris, state, aux


def _central_gradient(func, matrix, row, col, step=1e-6):
    grads = []
    for direction in (1.0, 1j):
        plus, minus = matrix.copy(), matrix.copy()
        plus[row, col] += step * direction
        minus[row, col] -= step * direction
        grads.append((func(plus) - func(minus)) / (2 * step))
    return np.array(grads)


class PrecoderTestCase(unittest.TestCase):
    def test_interior_solution_is_stationary(self):
        for seed in range(50):
            ch, ris, state, aux = _fixed_point(seed, m=4, n=2, k=2, i=2)
            alpha = 0.5
            p, mu = update_precoder(state, ch, ris, aux, alpha, p_budget=1e12)
            self.assertEqual(mu, 0.0)

            def objective(candidate):
                return f_tau_nats(TransceiverState(candidate, state.combiner, state.scattering), ch, ris, aux, alpha)

            scale = max(1.0, abs(objective(p)))
            for row in range(p.shape[0]):
                for col in range(p.shape[1]):
                    grad = _central_gradient(objective, p, row, col)
                    self.assertLess(np.max(np.abs(grad)) / scale, 1e-6)

    def test_budget_is_respected(self):
        for seed in range(20):
            ch, ris, state, aux = _fixed_point(seed, m=4, n=3, k=2, i=1)
            budget = 1e-3
            p, mu = update_precoder(state, ch, ris, aux, 0.7, p_budget=budget)
            power = np.linalg.norm(p) ** 2
            self.assertGreater(mu, 0.0)
            self.assertLessEqual(power, budget * (1 + 1e-9))
            self.assertAlmostEqual(power / budget, 1.0, delta=1e-6)

    def test_update_does_not_decrease_surrogate(self):
        for seed in range(20):
            ch, ris, state, aux = _fixed_point(seed)
            before = f_tau_nats(state, ch, ris, aux, 0.5)
            p, _ = update_precoder(state, ch, ris, aux, 0.5, ch.p_dl_linear)
            after = f_tau_nats(TransceiverState(p, state.combiner, state.scattering), ch, ris, aux, 0.5)
            self.assertGreaterEqual(after, before - 1e-10)

    def test_zero_dl_weight_gives_zero_precoder(self):
        ch, ris, state, aux = _fixed_point(3)
        p, mu = update_precoder(state, ch, ris, aux, 0.0, ch.p_dl_linear)
        assert_allclose(p, 0.0)
        self.assertEqual(mu, 0.0)


class CombinerTestCase(unittest.TestCase):
    def test_unnormalized_combiner_is_stationary(self):
        for seed in range(50):
            ch, ris, state, aux = _fixed_point(100 + seed, m=4, n=3, k=2, i=2)
            w = solve_combiner(state, ch, ris, aux)

            def objective(candidate):
                return f_tau_nats(TransceiverState(state.precoder, candidate, state.scattering), ch, ris, aux, 0.5)

            scale = max(1.0, abs(objective(w)))
            for row in range(w.shape[0]):
                for col in range(w.shape[1]):
                    grad = _central_gradient(objective, w, row, col)
                    self.assertLess(np.max(np.abs(grad)) / scale, 1e-6)

    def test_normalization_preserves_surrogate(self):
        ch, ris, state, aux = _fixed_point(7)
        w = solve_combiner(state, ch, ris, aux)
        before = f_tau_nats(TransceiverState(state.precoder, w, state.scattering), ch, ris, aux, 0.5)
        w_unit, scale = normalize_combiner(w)
        self.assertAlmostEqual(np.linalg.norm(w_unit), 1.0, delta=1e-12)
        aux.tau_ul = aux.tau_ul * scale
        after = f_tau_nats(TransceiverState(state.precoder, w_unit, state.scattering), ch, ris, aux, 0.5)
        self.assertAlmostEqual(after / before, 1.0, delta=1e-10)

    def test_update_combiner_is_normalized(self):
        ch, ris, state, aux = _fixed_point(9)
        self.assertAlmostEqual(np.linalg.norm(update_combiner(state, ch, ris, aux)), 1.0, delta=1e-12)

    def test_normalize_empty(self):
        w, scale = normalize_combiner(np.zeros((2, 0), dtype=complex))
        self.assertEqual(w.shape, (2, 0))
        self.assertEqual(scale, 1.0)


class InitialStateTestCase(unittest.TestCase):
    def test_feasible_and_deterministic(self):
        cfg = small_scenario(n_antennas=2, n_dl_users=2, n_ul_users=2, n_ris_elements=8)
        for ris in (RisConfig(), RisConfig(reciprocal=True), RisConfig(architecture="group", group_size=2)):
            ch = generate_channel_set(cfg, ris)
            a = initial_state(ch, ris, cfg)
            b = initial_state(ch, ris, cfg)
            assert_allclose(a.scattering, b.scattering)
            self.assertAlmostEqual(np.linalg.norm(a.precoder) ** 2 / cfg.p_dl_linear, 1.0, places=10)
            self.assertAlmostEqual(np.linalg.norm(a.combiner), 1.0, places=12)
            assert_allclose(a.scattering.conj().T @ a.scattering, np.eye(8), atol=1e-10)
            if ris.reciprocal:
                self.assertTrue(np.array_equal(a.scattering, a.scattering.T))
            if ris.architecture == "group":
                self.assertFalse(np.any(a.scattering[:2, 2:]))


class RunBcdTestCase(unittest.TestCase):
    def setUp(self):
        self.cfg = small_scenario(n_antennas=2, n_dl_users=1, n_ul_users=1, rng_seed=3)
        self.opts = SolverOptions(max_bcd_iters=15)

    def _solve(self, ris, cfg=None):
        cfg = cfg or self.cfg
        ch = generate_channel_set(cfg, ris)
        return ch, run_bcd(ch, ris, cfg, self.opts)

    def test_objective_is_non_decreasing(self):
        for ris in (RisConfig(), RisConfig(reciprocal=True), RisConfig(architecture="single")):
            _, result = self._solve(ris)
            trace = np.array(result.objective_trace)
            self.assertTrue(np.all(np.diff(trace) >= -1e-8 * np.max(np.abs(trace))))
            self.assertEqual(len(trace), result.iters_used)

    def test_feasible_at_exit(self):
        for ris in (RisConfig(), RisConfig(reciprocal=True), RisConfig(architecture="group", group_size=2)):
            _, result = self._solve(ris)
            state = result.final_state
            m_g = ris.group_size_for(4)
            self.assertLessEqual(np.linalg.norm(state.precoder) ** 2, self.cfg.p_dl_linear * (1 + 1e-9))
            self.assertAlmostEqual(np.linalg.norm(state.combiner), 1.0, delta=1e-12)
            for s in range(0, 4, m_g):
                block = state.scattering[s : s + m_g, s : s + m_g]
                self.assertLessEqual(np.max(np.abs(block.conj().T @ block - np.eye(m_g))), 1e-6)
            if ris.reciprocal:
                self.assertTrue(np.array_equal(state.scattering, state.scattering.T))
            self.assertLessEqual(result.trace[-1].pdd_violation, 1e-4)
            self.assertLessEqual(result.pdd_violation, 1e-4)

    def test_rates_match_trace(self):
        _, result = self._solve(RisConfig())
        last = result.trace[-1]
        self.assertAlmostEqual(last.dl_rate, result.dl_rate, places=12)
        self.assertAlmostEqual(last.ul_rate, result.ul_rate, places=12)
        self.assertAlmostEqual(result.sum_rate, result.dl_rate + result.ul_rate)
        self.assertTrue(result.pdd_trace)

    def test_trace_can_be_disabled(self):
        self.opts = SolverOptions(max_bcd_iters=3, record_trace=False)
        _, result = self._solve(RisConfig())
        self.assertEqual(result.trace, [])
        self.assertEqual(result.pdd_trace, [])
        self.assertEqual(len(result.objective_trace), result.iters_used)

    def test_deterministic(self):
        _, a = self._solve(RisConfig())
        _, b = self._solve(RisConfig())
        assert_allclose(a.objective_trace, b.objective_trace)

    def test_explicit_starting_state_is_not_mutated(self):
        ris = RisConfig()
        ch = generate_channel_set(self.cfg, ris)
        start = initial_state(ch, ris, self.cfg)
        snapshot = start.copy()
        run_bcd(ch, ris, self.cfg, SolverOptions(max_bcd_iters=2), state=start)
        assert_allclose(start.scattering, snapshot.scattering)
        assert_allclose(start.precoder, snapshot.precoder)


if __name__ == "__main__":
    unittest.main()
