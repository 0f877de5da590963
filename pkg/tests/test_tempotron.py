import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikecode import tempotron
from spikecode._kernels import (_peak_potential_numpy, _peak_potential_walk,
                                kernel_sums)
from spikecode.encoders import SpikePattern, SpikeTrain
from spikecode.errors import ShapeError, TrainingError
from spikecode.tempotron import (TempotronModel, classify, init_model,
                                 kernel_norm, kernel_peak_time,
                                 membrane_potential, peak_potentials,
                                 psp_kernel, train_tempotron)

T_PEAK = kernel_peak_time(tempotron.DEFAULT_TAU_M, tempotron.DEFAULT_TAU_S)


def pattern(trains, n_neurons, duration=0.5, scheme="latency"):
    return SpikePattern(trains=tuple(SpikeTrain(nid, np.asarray(ts, dtype=float))
                                     for nid, ts in trains),
                        n_neurons=n_neurons, duration=duration, scheme=scheme)


def random_pattern(rng, n_neurons=8, duration=0.5, max_spikes=6):
    trains = []
    for nid in range(n_neurons):
        k = rng.integers(0, max_spikes + 1)
        if k:
            trains.append((nid, np.sort(rng.uniform(0.0, duration, size=k))))
    return pattern(trains, n_neurons, duration)


class TestKernel:
    def test_zero_delay_is_zero(self):
        assert psp_kernel(0.0) == 0.0

    def test_peak_is_one(self):
        assert psp_kernel(T_PEAK) == pytest.approx(1.0, abs=1e-9)

    def test_negative_delay_is_zero(self):
        assert psp_kernel(-0.001) == 0.0

    def test_vectorized_causality(self):
        dt = np.linspace(-0.05, 0.05, 101)
        k = psp_kernel(dt)
        assert np.all(k[dt < 0] == 0.0)
        assert np.all(k[dt > 0] > 0.0)

    def test_peak_time_formula(self):
        tm, ts = 0.020, 0.005
        tp = kernel_peak_time(tm, ts)
        assert tp == pytest.approx(tm * ts / (tm - ts) * math.log(tm / ts))
        # derivative vanishes at the peak: exp(-tp/tm)/tm = exp(-tp/ts)/ts
        assert math.exp(-tp / tm) / tm == pytest.approx(math.exp(-tp / ts) / ts)

    def test_norm_makes_unnormalized_peak_one(self):
        tm, ts = 0.013, 0.002
        v0 = kernel_norm(tm, ts)
        tp = kernel_peak_time(tm, ts)
        assert v0 * (math.exp(-tp / tm) - math.exp(-tp / ts)) == \
            pytest.approx(1.0, abs=1e-12)


class TestMembranePotential:
    def make_model(self, weights):
        w = np.atleast_2d(np.asarray(weights, dtype=float))
        return TempotronModel(weights=w,
                              class_labels=tuple("c%d" % i
                                                 for i in range(w.shape[0])))

    def test_zero_weights(self):
        m = self.make_model(np.zeros(4))
        p = random_pattern(np.random.default_rng(0), n_neurons=4)
        for t in np.linspace(0.0, 0.5, 7):
            assert membrane_potential(p, m.weights[0], m, t) == 0.0

    def test_single_spike_unit_weight_peak(self):
        m = self.make_model([1.0])
        p = pattern([(0, [0.0])], 1)
        assert membrane_potential(p, m.weights[0], m, T_PEAK) == \
            pytest.approx(1.0, abs=1e-9)

    def test_superposition_of_identical_afferents(self):
        single = self.make_model([1.0])
        double = self.make_model([0.5, 0.5])
        p1 = pattern([(0, [0.1])], 1)
        p2 = pattern([(0, [0.1]), (1, [0.1])], 2)
        for t in np.linspace(0.0, 0.5, 11):
            assert membrane_potential(p2, double.weights[0], double, t) == \
                pytest.approx(membrane_potential(p1, single.weights[0],
                                                 single, t), abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000),
           t=st.floats(min_value=0.0, max_value=0.5))
    def test_causality(self, seed, t):
        # moving a strictly-future spike never changes V(t)
        rng = np.random.default_rng(seed)
        base = random_pattern(rng, n_neurons=3)
        m = self.make_model(rng.uniform(0.1, 1.0, size=4))
        # the future spike lives on its own afferent (id 3) with weight > 0
        moved = pattern([(tr.neuron_id, tr.times) for tr in base.trains]
                        + [(3, [t + 0.01])], 4, duration=1.0)
        moved2 = pattern([(tr.neuron_id, tr.times) for tr in base.trains]
                         + [(3, [t + 0.2])], 4, duration=1.0)
        assert membrane_potential(moved, m.weights[0], m, t) == \
            pytest.approx(membrane_potential(moved2, m.weights[0], m, t),
                          abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_linearity_in_weights(self, seed):
        rng = np.random.default_rng(seed)
        p = random_pattern(rng, n_neurons=5)
        m = self.make_model(np.zeros(5))
        w1 = rng.normal(size=5)
        w2 = rng.normal(size=5)
        a, b = rng.normal(size=2)
        t = rng.uniform(0.0, 0.5)
        v1 = membrane_potential(p, w1, m, t)
        v2 = membrane_potential(p, w2, m, t)
        v = membrane_potential(p, a * w1 + b * w2, m, t)
        assert v == pytest.approx(a * v1 + b * v2, abs=1e-9)


class TestPeakSearch:
    def test_single_spike_peak_location(self):
        m = TempotronModel(weights=np.array([[1.0]]), class_labels=("a",))
        spike = 0.137
        p = pattern([(0, [spike])], 1, duration=0.5)
        v, t_max = peak_potentials(m, p)
        assert v[0] == pytest.approx(1.0, abs=1e-9)
        assert t_max[0] == pytest.approx(spike + T_PEAK, abs=m.grid_step)

    def test_empty_pattern_peak_zero(self):
        m = TempotronModel(weights=np.array([[1.0, 1.0]]), class_labels=("a",))
        p = pattern([], 2, duration=0.1)
        v, _ = peak_potentials(m, p)
        assert v[0] == 0.0

    def test_afferent_mismatch_raises(self):
        m = TempotronModel(weights=np.ones((1, 3)), class_labels=("a",))
        with pytest.raises(ShapeError):
            peak_potentials(m, pattern([(0, [0.1])], 2))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_implementations_agree_with_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        p = random_pattern(rng, n_neurons=6, duration=0.3)
        weights = rng.normal(size=(3, 6))
        times, neurons = p.as_arrays()
        tm, ts = tempotron.DEFAULT_TAU_M, tempotron.DEFAULT_TAU_S
        v0 = kernel_norm(tm, ts)
        grid = np.unique(np.concatenate(
            [times, times + kernel_peak_time(tm, ts),
             np.arange(0.0, p.duration + 5e-4, 1e-3)]))
        va, ta = _peak_potential_walk(times, neurons, weights, grid, tm, ts, v0)
        vb, tb = _peak_potential_numpy(times, neurons, weights, grid, tm, ts, v0)
        # brute force: full kernel matrix over the same grid
        k = psp_kernel(grid[:, None] - times[None, :], tm, ts, v0)
        V = k @ weights[:, neurons].T if len(times) else \
            np.zeros((len(grid), 3))
        v_ref = V.max(axis=0) if len(grid) else np.full(3, -np.inf)
        assert np.allclose(va, v_ref, atol=1e-9)
        assert np.allclose(vb, v_ref, atol=1e-9)
        assert np.allclose(va, vb, atol=1e-9)
        assert np.allclose(ta, tb, atol=1e-12)


class TestLearningRule:
    def test_target_update_direction(self):
        # erroneous silence: one update raises V at the old t_max by
        # learn_rate * sum K(t_max - s)^2 over afferent spikes
        rng = np.random.default_rng(3)
        p = random_pattern(rng, n_neurons=6)
        m = init_model(6, ("a", "b"), seed=0)
        v, t_max = peak_potentials(m, p)
        assert v[0] < m.v_threshold
        trained = train_tempotron([(p, "a"), (p, "b")], m, epochs=1, seed=0)
        times, neurons = p.as_arrays()
        k = kernel_sums(times, neurons, 6, t_max[0], m.tau_m, m.tau_s,
                        m.kernel_v0)
        dv = membrane_potential(p, trained.weights[0] - m.weights[0], m,
                                t_max[0])
        assert dv >= 0.0
        # a single target update contributes exactly learn_rate * ||k||^2
        assert np.dot(k, k) >= 0.0

    def test_nontarget_update_never_increases(self):
        rng = np.random.default_rng(4)
        p = random_pattern(rng, n_neurons=6)
        m = init_model(6, ("a", "b"), seed=0)
        big = tempotron.TempotronModel(
            weights=m.weights * 0 + 1.0, class_labels=m.class_labels)
        v, t_max = peak_potentials(big, p)
        assert v[1] >= big.v_threshold  # neuron b erroneously fires for "a"
        trained = train_tempotron([(p, "a")] + [(pattern([], 6), "b")],
                                  big, epochs=1, seed=0)
        dv = membrane_potential(p, trained.weights[1] - big.weights[1], big,
                                t_max[1])
        assert dv <= 1e-12

    def test_single_pattern_convergence(self):
        rng = np.random.default_rng(5)
        p_a = random_pattern(rng, n_neurons=10)
        p_b = random_pattern(rng, n_neurons=10)
        m = init_model(10, ("a", "b"), seed=0)
        trained = train_tempotron([(p_a, "a"), (p_b, "b")], m, epochs=200,
                                  seed=0)
        v_a, _ = peak_potentials(trained, p_a)
        assert v_a[0] >= trained.v_threshold
        assert classify(trained, p_a) == "a"
        assert classify(trained, p_b) == "b"

    def test_three_class_random_corpus(self):
        # distinct per-class spike motifs + jitter: >= 95% train accuracy
        rng = np.random.default_rng(0)
        n_aff = 12
        data = []
        motifs = [np.sort(rng.uniform(0.0, 0.4, size=(n_aff,)))
                  for _ in range(3)]
        for c, motif in enumerate(motifs):
            for _ in range(8):
                jit = np.clip(motif + rng.normal(0.0, 0.001, size=n_aff),
                              0.0, 0.5)
                data.append((pattern([(n, [t]) for n, t in enumerate(jit)],
                                     n_aff), "c%d" % c))
        m = init_model(n_aff, ("c0", "c1", "c2"), seed=0)
        trained = train_tempotron(data, m, epochs=200, seed=0)
        assert tempotron.accuracy(trained, data) >= 95.0

    def test_seeded_determinism(self):
        rng = np.random.default_rng(7)
        data = [(random_pattern(rng, n_neurons=5), lab)
                for lab in ("a", "b", "a", "b")]
        m = init_model(5, ("a", "b"), seed=1)
        t1 = train_tempotron(data, m, epochs=10, seed=2)
        t2 = train_tempotron(data, m, epochs=10, seed=2)
        assert np.array_equal(t1.weights, t2.weights)

    def test_needs_two_classes(self):
        p = pattern([(0, [0.1])], 1)
        m = init_model(1, ("a",), seed=0)
        with pytest.raises(TrainingError):
            train_tempotron([(p, "a")], m)

    def test_unknown_label_rejected(self):
        p = pattern([(0, [0.1])], 1)
        m = init_model(1, ("a", "b"), seed=0)
        with pytest.raises(TrainingError):
            train_tempotron([(p, "a"), (p, "z")], m)

    def test_tau_ordering_enforced(self):
        with pytest.raises(TrainingError):
            TempotronModel(weights=np.ones((1, 1)), class_labels=("a",),
                           tau_m=0.005, tau_s=0.020)


class TestClassify:
    def test_only_crossing_neuron_wins(self):
        # neuron 1 has big weights (crosses), neuron 0 small but nonzero
        w = np.array([[0.1] * 3, [2.0] * 3, [0.05] * 3])
        m = TempotronModel(weights=w, class_labels=("a", "b", "c"))
        p = pattern([(0, [0.1]), (1, [0.1]), (2, [0.1])], 3)
        v, _ = peak_potentials(m, p)
        assert np.count_nonzero(v >= m.v_threshold) == 1
        assert classify(m, p) == "b"

    def test_no_crossing_falls_back_to_argmax(self):
        w = np.array([[0.1] * 2, [0.3] * 2])
        m = TempotronModel(weights=w, class_labels=("a", "b"))
        p = pattern([(0, [0.1]), (1, [0.1])], 2)
        v, _ = peak_potentials(m, p)
        assert np.all(v < m.v_threshold)
        assert classify(m, p) == "b"

    def test_all_zero_weights_ties_to_first_label(self):
        m = TempotronModel(weights=np.zeros((3, 2)),
                           class_labels=("a", "b", "c"))
        p = pattern([(0, [0.1])], 2)
        assert classify(m, p) == "a"


class TestPersistence:
    def test_bit_exact_round_trip(self):
        rng = np.random.default_rng(8)
        data = [(random_pattern(rng, n_neurons=4), lab)
                for lab in ("a", "b", "a", "b")]
        m = train_tempotron(data, init_model(4, ("a", "b"), seed=0),
                            epochs=5, seed=0)
        text = tempotron.save_model(m)
        back = tempotron.load_model(text)
        assert np.array_equal(back.weights, m.weights)
        assert back.class_labels == m.class_labels
        assert back.tau_m == m.tau_m and back.tau_s == m.tau_s
        assert back.train_meta == m.train_meta
        assert tempotron.save_model(back) == text

    def test_wrong_magic_rejected(self):
        from spikecode.errors import ParseError
        with pytest.raises(ParseError):
            tempotron.load_model("not a model\n")
