"""
Tests for the Lagrangian-dual and quadratic transforms.
"""

import unittest
import warnings

import numpy as np
from numpy.testing import assert_allclose

from models.config import RisConfig
from models.state import AuxVars
from optimization.fp_transforms import (
    LN2,
    eval_f_iota,
    eval_f_tau,
    f_tau_nats,
    update_iota,
    update_tau,
)
from simulation.metrics import sinr_vectors, weighted_sum_rate
from tests.helpers import random_aux, random_channel_set, random_state


def _instance(rng):
    m = int(rng.choice([2, 4, 8]))
    k, i = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    ch = random_channel_set(rng, m=m, n=2, k=k, i=i, blocked=bool(rng.integers(0, 2)))
    m_g = int(rng.choice([g for g in (1, 2, m) if m % g == 0]))
    ris = RisConfig(architecture="group", group_size=m_g)
    return ch, ris, random_state(rng, ch, m_g=m_g)


class TightnessTestCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(101)

    def test_closed_form_updates_are_tight(self):
        for _ in range(100):
            ch, ris, state = _instance(self.rng)
            alpha = float(self.rng.uniform())
            f_o = weighted_sum_rate(state, ch, ris, alpha)
            iota = update_iota(state, ch, ris)
            aux = update_tau(state, ch, ris, iota)
            self.assertAlmostEqual(eval_f_iota(state, ch, ris, iota, alpha) / f_o, 1.0, delta=1e-10)
            self.assertAlmostEqual(eval_f_tau(state, ch, ris, aux, alpha) / f_o, 1.0, delta=1e-10)

    def test_iota_equals_sinr(self):
        ch, ris, state = _instance(self.rng)
        iota = update_iota(state, ch, ris)
        gamma_dl, gamma_ul = sinr_vectors(state, ch, ris)
        assert_allclose(iota.iota_dl, gamma_dl)
        assert_allclose(iota.iota_ul, gamma_ul)
        assert_allclose(iota.tau_dl, 0.0)

    def test_update_tau_keeps_iota(self):
        ch, ris, state = _instance(self.rng)
        iota = update_iota(state, ch, ris)
        aux = update_tau(state, ch, ris, iota)
        assert_allclose(aux.iota_dl, iota.iota_dl)
        self.assertTrue(aux.is_finite())

    def test_complex_budgets_divide_without_warning(self):
        for _ in range(20):
            ch, ris, state = _instance(self.rng)
            with warnings.catch_warnings():
                warnings.simplefilter("error", np.exceptions.ComplexWarning)
                iota = update_iota(state, ch, ris)
                aux = update_tau(state, ch, ris, iota)
                value = eval_f_iota(state, ch, ris, iota, 0.5)
            self.assertTrue(np.isfinite(value))
            self.assertTrue(np.iscomplexobj(aux.tau_dl))

    def test_units_are_bits(self):
        ch, ris, state = _instance(self.rng)
        aux = random_aux(self.rng, ch.n_dl_users, ch.n_ul_users)
        self.assertAlmostEqual(eval_f_tau(state, ch, ris, aux, 0.5) * LN2, f_tau_nats(state, ch, ris, aux, 0.5), places=12)


class BoundTestCase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(202)

    def test_quadratic_transform_never_exceeds_dual(self):
        for _ in range(30):
            ch, ris, state = _instance(self.rng)
            aux = random_aux(self.rng, ch.n_dl_users, ch.n_ul_users)
            iota = AuxVars(aux.iota_dl, aux.iota_ul, aux.tau_dl * 0, aux.tau_ul * 0)
            self.assertLessEqual(eval_f_tau(state, ch, ris, aux, 0.4), eval_f_iota(state, ch, ris, iota, 0.4) + 1e-12)

    def test_dual_never_exceeds_rate(self):
        for _ in range(30):
            ch, ris, state = _instance(self.rng)
            aux = random_aux(self.rng, ch.n_dl_users, ch.n_ul_users)
            self.assertLessEqual(eval_f_iota(state, ch, ris, aux, 0.6), weighted_sum_rate(state, ch, ris, 0.6) + 1e-12)


class TauStationarityTestCase(unittest.TestCase):
    """Central differences of f_tau in the real and imaginary parts of tau vanish at tau*."""

    def test_gradient_vanishes(self):
        rng = np.random.default_rng(303)
        step = 1e-6
        for _ in range(50):
            ch, ris, state = _instance(rng)
            alpha = float(rng.uniform(0.2, 0.8))
            aux = update_tau(state, ch, ris, update_iota(state, ch, ris))
            scale = max(1.0, abs(f_tau_nats(state, ch, ris, aux, alpha)))
            for name in ("tau_dl", "tau_ul"):
                for j in range(len(getattr(aux, name))):
                    for direction in (1.0, 1j):
                        plus, minus = self._shifted(aux, name, j, step * direction)
                        grad = (
                            f_tau_nats(state, ch, ris, plus, alpha) - f_tau_nats(state, ch, ris, minus, alpha)
                        ) / (2 * step)
                        self.assertLess(abs(grad) / scale, 1e-6)

    @staticmethod
    def _shifted(aux, name, j, delta):
        out = []
        for sign in (1.0, -1.0):
            copy = AuxVars(aux.iota_dl.copy(), aux.iota_ul.copy(), aux.tau_dl.copy(), aux.tau_ul.copy())
            getattr(copy, name)[j] += sign * delta
            out.append(copy)
        return out


if __name__ == "__main__":
    unittest.main()
