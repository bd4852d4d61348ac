import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ffagent.qnet import (
    QNetwork,
    QNetworkConfig,
    WeightsFormatError,
    bellman_target,
    build_target,
    greedy_action,
    load_weights,
    save_weights,
    train_batch,
)


def numeric_grads(net, x, y, h=1e-5):
    out = []
    for p in net.params:
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            plus, _ = net.loss_and_grads(x, y)
            p[idx] = old - h
            minus, _ = net.loss_and_grads(x, y)
            p[idx] = old
            g[idx] = (plus - minus) / (2 * h)
        out.append(g)
    return out


def rel_error(a, b):
    return np.abs(a - b) / np.maximum(1e-8, np.abs(a) + np.abs(b))


class TestForward:
    def test_zero_network(self):
        net = QNetwork(QNetworkConfig(input_dim=3, output_dim=4, hidden_dims=(5, 2)))
        for p in net.params:
            p[:] = 0
        assert net.forward(np.array([1.0, -2.0, 3.0])).tolist() == [0.0] * 4

    def test_hand_evaluated(self, hand_net):
        x = np.array([0.5, -1.0])
        # layer 1: [0.5*1 - 1*0.25 + 0.1, 0.5*-0.5 - 1*2 - 0.2] = [0.35, -2.45] -> relu [0.35, 0]
        # layer 2: [0.35*0.5 + 0, 0.35*1 + 0.3] = [0.175, 0.65] -> relu same
        # output: [0.175*2 + 0.65*1 - 0.5, 0 - 0.65 + 0.25] = [0.5, -0.4]
        assert np.allclose(hand_net.forward(x), [0.5, -0.4], atol=1e-9)

    def test_deterministic(self, hand_net):
        x = np.array([0.3, 0.7])
        assert hand_net.forward(x).tobytes() == hand_net.forward(x).tobytes()

    def test_dimension_mismatch(self, hand_net):
        with pytest.raises(ValueError, match="dimension mismatch"):
            hand_net.forward(np.zeros(3))

    def test_batch_matches_single(self):
        net = QNetwork(QNetworkConfig(input_dim=4, output_dim=3, seed=1))
        x = np.random.default_rng(0).normal(size=(6, 4))
        assert np.allclose(net.forward(x), np.stack([net.forward(r) for r in x]), atol=1e-12)

    def test_seeded_init(self):
        a = QNetwork(QNetworkConfig(input_dim=4, seed=9))
        b = QNetwork(QNetworkConfig(input_dim=4, seed=9))
        assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))
        assert all(np.abs(w).max() <= 1 / np.sqrt(w.shape[0]) for w in a.weights)

    def test_output_bias_shift_keeps_argmax(self):
        net = QNetwork(QNetworkConfig(input_dim=4, output_dim=6, seed=2))
        x = np.random.default_rng(1).normal(size=(20, 4))
        before = [greedy_action(q) for q in net.forward(x)]
        net.biases[-1] += 3.7
        assert [greedy_action(q) for q in net.forward(x)] == before


class TestTargets:
    def test_bellman(self):
        assert bellman_target(0.5, 1.0, 0.8) == pytest.approx(1.3)
        assert bellman_target(0.7, 123.0, 0.0) == 0.7
        assert bellman_target(0, 0, 0.8) == 0

    def test_build_target(self):
        # action index 1 is the second action
        assert build_target([0.1, 0.2, 0.3], 1, 0.9).tolist() == [0.1, 0.9, 0.3]

    def test_fixed_point(self):
        q = [0.1, 0.2, 0.3]
        assert build_target(q, 2, 0.3).tolist() == q

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            build_target([0.1], 1, 0.0)

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=30), st.data(), st.floats(-10, 10))
    def test_exactly_one_coordinate_changes(self, q, data, value):
        chosen = data.draw(st.integers(0, len(q) - 1))
        t = build_target(q, chosen, value)
        diff = [j for j in range(len(q)) if t[j] != q[j]]
        assert diff in ([], [chosen])
        assert t[chosen] == value

    def test_unchosen_coordinates_carry_no_gradient(self):
        net = QNetwork(QNetworkConfig(input_dim=3, output_dim=4, hidden_dims=(5, 5), seed=0))
        x = np.array([[0.2, -0.4, 1.0]])
        q = net.forward(x[0])
        target = build_target(q, 2, q[2] + 0.5)
        loss, grads = net.loss_and_grads(x, target[None])
        assert loss == pytest.approx(0.5 ** 2 / 4)
        # output-layer gradient is zero in every column except the chosen one
        dW_out = grads[-2]
        assert np.all(dW_out[:, [0, 1, 3]] == 0) and np.any(dW_out[:, 2] != 0)
        assert np.all(grads[-1][[0, 1, 3]] == 0)

    def test_greedy(self):
        assert greedy_action([0.1, 0.9, 0.3]) == 1
        assert greedy_action([0.5, 0.5]) == 0

    @given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=25), st.integers(-1000, 1000))
    def test_greedy_shift_invariant(self, q, c):
        # integer-valued floats shift without rounding
        q = np.array(q, dtype=np.float64)
        assert greedy_action(q + c) == greedy_action(q)


class TestTraining:
    def test_fixed_point_batch(self, hand_net):
        x = np.array([0.2, 0.9])
        before = [p.copy() for p in hand_net.params]
        loss = train_batch(hand_net, [(x, hand_net.forward(x))], 1e-3)
        assert loss == 0
        assert all(np.array_equal(a, b) for a, b in zip(before, hand_net.params))

    def test_empty_batch(self, hand_net):
        with pytest.raises(ValueError):
            train_batch(hand_net, [], 1e-3)

    def test_hand_net_gradient(self, hand_net):
        x = np.array([[0.5, -1.0]])
        y = np.array([[1.0, 0.0]])
        _, grads = hand_net.loss_and_grads(x, y)
        for a, n in zip(grads, numeric_grads(hand_net, x, y)):
            assert np.all(rel_error(a, n) < 1e-4)

    @pytest.mark.parametrize("activation", ["relu", "tanh"])
    def test_random_nets_gradient(self, activation):
        rng = np.random.default_rng(3)
        for trial in range(5):
            cfg = QNetworkConfig(input_dim=3, output_dim=4, hidden_dims=(5, 4), activation=activation, seed=trial)
            net = QNetwork(cfg)
            x, y = rng.normal(size=(6, 3)), rng.normal(size=(6, 4))
            _, grads = net.loss_and_grads(x, y)
            for a, n in zip(grads, numeric_grads(net, x, y)):
                assert np.all(rel_error(a, n) < 1e-4)

    def test_descent_on_fixed_batch(self, small_synthetic):
        v = small_synthetic[0]
        net = QNetwork(QNetworkConfig(input_dim=v.feature_dim, output_dim=25, seed=0))
        rng = np.random.default_rng(0)
        targets = net.forward(v.features[:64]) + rng.normal(scale=0.5, size=(64, 25))
        batch = list(zip(v.features[:64], targets))
        losses = [train_batch(net, batch, 1e-3) for _ in range(100)]
        assert all(b <= a for a, b in zip(losses, losses[1:]))
        assert all(np.isfinite(p).all() for p in net.params)

    def test_same_seed_same_trajectory(self, small_synthetic):
        v = small_synthetic[0]
        runs = []
        for _ in range(2):
            net = QNetwork(QNetworkConfig(input_dim=v.feature_dim, output_dim=3, seed=4))
            for _ in range(10):
                train_batch(net, list(zip(v.features[:20], np.ones((20, 3)))), 1e-2)
            runs.append(b"".join(p.tobytes() for p in net.params))
        assert runs[0] == runs[1]


class TestWeightsFile:
    def test_round_trip(self, tmp_path):
        net = QNetwork(QNetworkConfig(input_dim=5, output_dim=7, hidden_dims=(6, 3), seed=8))
        save_weights(net, tmp_path / "w.bin")
        loaded = load_weights(tmp_path / "w.bin")
        x = np.random.default_rng(0).normal(size=(4, 5))
        assert loaded.forward(x).tobytes() == net.forward(x).tobytes()
        assert loaded.config.layer_dims == (5, 6, 3, 7)

    def test_header_layout(self, tmp_path):
        net = QNetwork(QNetworkConfig(input_dim=2, output_dim=3, hidden_dims=(4, 5)))
        save_weights(net, tmp_path / "w.bin")
        data = (tmp_path / "w.bin").read_bytes()
        assert data[:4] == b"FFQN"
        assert struct.unpack_from("<III", data, 4) == (1, 2, 3)
        assert struct.unpack_from("<6I", data, 16) == (2, 4, 4, 5, 5, 3)
        n_floats = 2 * 4 + 4 + 4 * 5 + 5 + 5 * 3 + 3
        assert len(data) == 16 + 24 + 8 * n_floats + 4

    def test_truncated(self, tmp_path):
        net = QNetwork(QNetworkConfig(input_dim=2, output_dim=3))
        save_weights(net, tmp_path / "w.bin")
        data = (tmp_path / "w.bin").read_bytes()
        for cut in (3, 20, len(data) - 10, len(data) - 2):
            (tmp_path / "t.bin").write_bytes(data[:cut])
            with pytest.raises(WeightsFormatError, match="unexpected end of weights file"):
                load_weights(tmp_path / "t.bin")

    def test_wrong_input_dim(self, tmp_path):
        net = QNetwork(QNetworkConfig(input_dim=2, output_dim=3))
        save_weights(net, tmp_path / "w.bin")
        data = bytearray((tmp_path / "w.bin").read_bytes())
        struct.pack_into("<I", data, 8, 9)
        (tmp_path / "bad.bin").write_bytes(bytes(data))
        with pytest.raises(WeightsFormatError, match="dimension mismatch"):
            load_weights(tmp_path / "bad.bin")
        with pytest.raises(WeightsFormatError, match="dimension mismatch"):
            load_weights(tmp_path / "w.bin", expected_input_dim=5)

    def test_bad_magic_and_checksum(self, tmp_path):
        net = QNetwork(QNetworkConfig(input_dim=2, output_dim=3))
        save_weights(net, tmp_path / "w.bin")
        data = bytearray((tmp_path / "w.bin").read_bytes())
        (tmp_path / "m.bin").write_bytes(b"XXXX" + bytes(data[4:]))
        with pytest.raises(WeightsFormatError, match="magic"):
            load_weights(tmp_path / "m.bin")
        data[60] ^= 0xFF
        (tmp_path / "c.bin").write_bytes(bytes(data))
        with pytest.raises(WeightsFormatError, match="checksum"):
            load_weights(tmp_path / "c.bin")
