"""Model assembly, forward/predict semantics, training, serialization."""

import numpy as np
import pytest

from qincident import data, model, nn, qsim


def zeroed(net):
    model.set_parameters(net, [np.zeros_like(p) for p in model.get_parameters(net)])
    return net


def separable_rows(n_rows=200, seed=0):
    """Two tight clusters: slow congested positives vs free-flow negatives."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_rows):
        positive = i % 2 == 0
        if positive:
            feats = rng.normal([0.05, 0.3, 0.15, 0.8, 0.9, 0.05], 0.03)
        else:
            feats = rng.normal([0.85, 0.3, 0.85, 0.3, 0.85, 0.3], 0.03)
        rows.append(
            data.FeatureRow(
                bucket_start=i,
                zone_id=0,
                avg_speed_zone=feats[0],
                count_zone=feats[1],
                avg_speed_up=feats[2],
                count_up=feats[3],
                avg_speed_down=feats[4],
                count_down=feats[5],
                label=1 if positive else 0,
            )
        )
    return rows


class TestBuildModel:
    def test_hybrid_parameter_count(self):
        net = model.build_model(model.HybridModelConfig(kind="hybrid", n_qubits=4), seed=0)
        # (6*48+48)+(48*32+32)+(32*4+4)+(1*4)+(4*4+4)+(4*1+1)
        assert model.parameter_count(net) == 2065

    def test_classical_parameter_count(self):
        net = model.build_model(model.HybridModelConfig(kind="classical"), seed=0)
        assert model.parameter_count(net) == 1937  # 336 + 1568 + 33

    def test_two_qubit_parameter_count(self):
        net = model.build_model(model.HybridModelConfig(kind="hybrid", n_qubits=2), seed=0)
        assert model.parameter_count(net) == 336 + 1568 + 66 + 2 + 6 + 3

    def test_same_seed_identical(self):
        a = model.build_model(model.HybridModelConfig(kind="hybrid"), seed=3)
        b = model.build_model(model.HybridModelConfig(kind="hybrid"), seed=3)
        for pa, pb in zip(model.get_parameters(a), model.get_parameters(b)):
            assert np.array_equal(pa, pb)

    def test_quantum_weights_in_natural_domain(self):
        net = model.build_model(model.HybridModelConfig(kind="hybrid"), seed=1)
        qw = [e for e in net.layers if isinstance(e, qsim.QuantumLayerParams)][0]
        assert np.all((qw.weights >= 0) & (qw.weights < 2 * np.pi))

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            model.HybridModelConfig(kind="quantumish")
        with pytest.raises(ValueError):
            model.HybridModelConfig(kind="hybrid", n_qubits=0)
        with pytest.raises(ValueError):
            model.HybridModelConfig(hidden_widths=(48,))


class TestForward:
    def test_zero_parameter_hybrid_gives_half(self):
        # zeros -> quantum sees zero angles -> all-one expectations -> zero head -> sigmoid(0)
        net = zeroed(model.build_model(model.HybridModelConfig(kind="hybrid"), seed=0))
        assert model.forward(net, np.zeros(6)) == pytest.approx(0.5)

    def test_zero_parameter_classical_gives_half(self):
        net = zeroed(model.build_model(model.HybridModelConfig(kind="classical"), seed=0))
        assert model.forward(net, np.zeros(6)) == pytest.approx(0.5)

    def test_output_in_open_unit_interval(self):
        rng = np.random.default_rng(2)
        net = model.build_model(model.HybridModelConfig(kind="hybrid"), seed=2)
        probs = model.forward(net, rng.uniform(0, 1, (50, 6)))
        assert np.all((probs > 0) & (probs < 1))

    def test_wrong_feature_length(self):
        net = model.build_model(model.HybridModelConfig(kind="classical"), seed=0)
        with pytest.raises(ValueError):
            model.forward(net, np.zeros(5))


class TestPredict:
    def test_threshold_inclusive(self):
        net = zeroed(model.build_model(model.HybridModelConfig(kind="classical"), seed=0))
        # zero parameters give exactly 0.5, the inclusive boundary
        assert model.predict(net, np.zeros(6)) == 1

    def test_monotone_in_probability(self):
        net = model.build_model(model.HybridModelConfig(kind="classical"), seed=4)
        rng = np.random.default_rng(4)
        feats = rng.uniform(0, 1, (100, 6))
        probs = model.forward(net, feats)
        preds = model.predict(net, feats)
        # raising the probability never flips a predicted 1 to 0
        order = np.argsort(probs)
        assert np.all(np.diff(preds[order]) >= 0)


class TestTrain:
    @pytest.mark.parametrize("kind", ["classical", "hybrid"])
    def test_separable_set_reaches_95_percent(self, kind):
        rows = separable_rows()
        net = model.build_model(model.HybridModelConfig(kind=kind, n_qubits=4), seed=0)
        model.train(net, rows, nn.TrainConfig(epochs=20, batch_size=16, seed=0))
        assert max(net.history["train_accuracy"]) >= 0.95

    def test_loss_history_finite(self):
        rows = separable_rows(60)
        net = model.build_model(model.HybridModelConfig(kind="classical"), seed=1)
        model.train(net, rows, nn.TrainConfig(epochs=5, batch_size=16, seed=1))
        assert len(net.history["loss"]) == 5
        assert all(np.isfinite(v) for v in net.history["loss"])

    def test_deterministic_training(self):
        rows = separable_rows(80)
        nets = []
        for _ in range(2):
            net = model.build_model(model.HybridModelConfig(kind="hybrid", n_qubits=2), seed=5)
            model.train(net, rows, nn.TrainConfig(epochs=3, batch_size=16, seed=5))
            nets.append(net)
        for pa, pb in zip(model.get_parameters(nets[0]), model.get_parameters(nets[1])):
            assert np.array_equal(pa, pb)
        assert nets[0].history == nets[1].history

    def test_empty_training_set(self):
        net = model.build_model(model.HybridModelConfig(kind="classical"), seed=0)
        with pytest.raises(ValueError):
            model.train(net, [], nn.TrainConfig())

    def test_shuffle_changes_trajectory_but_stays_deterministic(self):
        rows = separable_rows(80)
        outs = []
        for _ in range(2):
            net = model.build_model(model.HybridModelConfig(kind="classical"), seed=6)
            model.train(net, rows, nn.TrainConfig(epochs=2, seed=6, shuffle=True))
            outs.append(model.get_parameters(net))
        for pa, pb in zip(*outs):
            assert np.array_equal(pa, pb)


class TestGradients:
    def test_batch_mean_permutation_invariant(self):
        rng = np.random.default_rng(7)
        net = model.build_model(model.HybridModelConfig(kind="hybrid"), seed=7)
        feats = rng.uniform(0, 1, (16, 6))
        labels = rng.integers(0, 2, 16).astype(float)
        _, grads = model.loss_and_gradients(net, feats, labels)
        perm = rng.permutation(16)
        _, grads_perm = model.loss_and_gradients(net, feats[perm], labels[perm])
        for a, b in zip(grads, grads_perm):
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_quantum_identity_parity(self, monkeypatch):
        """With the quantum layer patched to a pass-through, the hybrid stack
        must equal the plain dense composition of the same weights."""
        net = model.build_model(model.HybridModelConfig(kind="hybrid", n_qubits=4), seed=8)
        monkeypatch.setattr(model, "_QUANTUM_FORWARD", lambda x, w: x)
        rng = np.random.default_rng(8)
        feats = rng.uniform(0, 1, (5, 6))
        got = model.forward(net, feats)
        h = feats
        for entry in net.layers:
            if isinstance(entry, nn.DenseLayer):
                _, h = nn.dense_forward(entry, h)
        np.testing.assert_allclose(got, h[:, 0], atol=1e-12)


class TestSerialization:
    @pytest.mark.parametrize("kind", ["classical", "hybrid"])
    def test_round_trip(self, tmp_path, kind):
        rows = separable_rows(40)
        net = model.build_model(model.HybridModelConfig(kind=kind), seed=9)
        model.train(net, rows, nn.TrainConfig(epochs=2, seed=9))
        net.normalization = (np.zeros(6), np.ones(6))
        path = tmp_path / "model.json"
        model.save_model(net, path)
        loaded = model.load_model(path)
        for pa, pb in zip(model.get_parameters(net), model.get_parameters(loaded)):
            np.testing.assert_array_equal(pa, pb)
        assert loaded.history == net.history
        assert loaded.config == net.config
        rng = np.random.default_rng(10)
        feats = rng.uniform(0, 1, (8, 6))
        np.testing.assert_array_equal(model.forward(net, feats), model.forward(loaded, feats))

    def test_identical_seeds_serialize_identically(self, tmp_path):
        paths = []
        for name in ("a.json", "b.json"):
            net = model.build_model(model.HybridModelConfig(kind="hybrid"), seed=11)
            path = tmp_path / name
            model.save_model(net, path)
            paths.append(path.read_bytes())
        assert paths[0] == paths[1]
