import numpy as np
import pytest

from mograft.denoiser import (
    AdamState,
    DenoiserError,
    TrainingDiverged,
    forward,
    init_embeddings,
    init_model,
    loss_and_grads,
    loss_and_grads_fixed,
    optimizer_step,
    pretrain,
    time_embedding,
)
from mograft.diffusion import make_schedule
from mograft.motion import FeatureLayout, Motion, layout_dims
from mograft.synth import CorpusSpec, gen_motion


@pytest.fixture
def tiny_model():
    return init_model(4, layout_dims(2), embed_dim=8, hidden=(16, 16), seed=1)


@pytest.fixture
def schedule():
    return make_schedule(5, 0.05, 0.3)


class TestTimeEmbedding:
    def test_t_zero_interleaves_sin_cos(self):
        emb = time_embedding(0)
        np.testing.assert_array_equal(emb[0::2], np.zeros(16))
        np.testing.assert_array_equal(emb[1::2], np.ones(16))

    def test_width(self):
        assert time_embedding(7).shape == (32,)

    def test_distinct_steps_distinct_codes(self):
        assert not np.array_equal(time_embedding(1), time_embedding(2))


class TestForward:
    def test_zero_parameters_give_zero_output(self, tiny_model):
        for p in tiny_model.params().values():
            p[:] = 0.0
        out = forward(tiny_model, np.ones((4, 23)), 2, np.ones(8))
        np.testing.assert_array_equal(out, np.zeros((4, 23)))

    def test_deterministic(self, tiny_model):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((4, 23))
        e = rng.standard_normal(8)
        np.testing.assert_array_equal(
            forward(tiny_model, x, 3, e), forward(tiny_model, x, 3, e)
        )

    def test_shape_checks(self, tiny_model):
        with pytest.raises(DenoiserError):
            forward(tiny_model, np.zeros((3, 23)), 1, np.zeros(8))
        with pytest.raises(DenoiserError):
            forward(tiny_model, np.zeros((4, 23)), 1, np.zeros(7))

    def test_dims_reported(self, tiny_model):
        assert tiny_model.input_dim == 4 * 23 + 32 + 8
        assert tiny_model.output_dim == 4 * 23
        want = (tiny_model.input_dim * 16 + 16 + 16 * 16 + 16
                + 16 * tiny_model.output_dim + tiny_model.output_dim)
        assert tiny_model.param_count == want


class TestLossAndGrads:
    def test_perfect_prediction_zero_loss(self, tiny_model, schedule):
        # zero weights and zero target: the prediction is exact
        x0 = np.zeros((4, 23))
        for p in tiny_model.params().values():
            p[:] = 0.0
        loss, grads, _ = loss_and_grads_fixed(
            tiny_model, [x0], [np.zeros(8)], [2], [np.zeros((4, 23))], schedule
        )
        assert loss == 0.0
        assert all(np.all(g == 0.0) for g in grads.values())

    def test_zero_weight_annihilates(self, tiny_model, schedule):
        rng = np.random.default_rng(4)
        x0 = rng.standard_normal((4, 23))
        loss, grads, egrads = loss_and_grads_fixed(
            tiny_model, [x0], [rng.standard_normal(8)], [3],
            [rng.standard_normal((4, 23))], schedule,
            weight=np.zeros((4, 23)),
        )
        assert loss == 0.0
        assert all(np.all(g == 0.0) for g in grads.values())
        assert np.all(egrads == 0.0)

    def test_gradients_match_finite_differences(self, tiny_model, schedule):
        rng = np.random.default_rng(2)
        x0 = rng.standard_normal((4, 23))
        e = rng.standard_normal(8)
        ts = [3]
        epss = [rng.standard_normal((4, 23))]
        weight = rng.choice([0.0, 1.0, 5.0], size=(4, 23))

        def loss_at():
            value, _, _ = loss_and_grads_fixed(
                tiny_model, [x0], [e], ts, epss, schedule, weight=weight,
                want_theta=False, want_embed=False,
            )
            return value

        _, grads, egrads = loss_and_grads_fixed(
            tiny_model, [x0], [e], ts, epss, schedule, weight=weight
        )
        h = 1e-6
        probe = np.random.default_rng(7)
        params = tiny_model.params()
        for _ in range(32):
            key = probe.choice(sorted(params))
            arr = params[key]
            idx = tuple(int(probe.integers(0, s)) for s in arr.shape)
            keep = arr[idx]
            arr[idx] = keep + h
            up = loss_at()
            arr[idx] = keep - h
            down = loss_at()
            arr[idx] = keep
            fd = (up - down) / (2 * h)
            assert abs(grads[key][idx] - fd) / max(1e-8, abs(grads[key][idx])) < 1e-4
        for i in range(8):
            keep = e[i]
            e[i] = keep + h
            up = loss_at()
            e[i] = keep - h
            down = loss_at()
            e[i] = keep
            fd = (up - down) / (2 * h)
            assert abs(egrads[0][i] - fd) / max(1e-8, abs(egrads[0][i])) < 1e-4

    def test_empty_batch_rejected(self, tiny_model, schedule):
        table = init_embeddings(["a"], embed_dim=8, seed=0)
        with pytest.raises(DenoiserError, match="empty"):
            loss_and_grads(tiny_model, [], table, schedule, np.random.default_rng(0))

    def test_embedding_grads_land_on_batch_labels(self, tiny_model, schedule):
        table = init_embeddings(["a", "b", "c"], embed_dim=8, seed=0)
        rng = np.random.default_rng(1)
        batch = [(rng.standard_normal((4, 23)), "b")]
        _, _, table_grads = loss_and_grads(tiny_model, batch, table, schedule, rng)
        assert np.all(table_grads[0] == 0.0)
        assert np.any(table_grads[1] != 0.0)
        assert np.all(table_grads[2] == 0.0)


class TestOptimizerStep:
    def test_zero_gradient_is_fixed_point(self):
        params = {"p": np.array([1.0, -2.0])}
        state = AdamState(lr=0.1)
        optimizer_step(state, params, {"p": np.zeros(2)})
        np.testing.assert_array_equal(params["p"], [1.0, -2.0])

    def test_first_step_magnitude_is_learning_rate(self):
        # bias-corrected first step: lr * g / (|g| + eps) ~= lr * sign(g)
        params = {"p": np.array([0.0])}
        state = AdamState(lr=1e-3)
        optimizer_step(state, params, {"p": np.array([0.37])})
        assert params["p"][0] == pytest.approx(-1e-3, rel=1e-6)
        assert state.step == 1

    def test_equal_gradients_equal_updates(self):
        params = {"p": np.array([5.0, 5.0])}
        state = AdamState(lr=0.01)
        optimizer_step(state, params, {"p": np.array([0.2, 0.2])})
        assert params["p"][0] == params["p"][1]

    def test_shape_mismatch_rejected(self):
        state = AdamState(lr=0.1)
        with pytest.raises(DenoiserError, match="shape"):
            optimizer_step(state, {"p": np.zeros(2)}, {"p": np.zeros(3)})

    def test_hand_checked_second_step(self):
        # follow the update rule by hand for two steps on a scalar
        lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
        g1, g2 = 0.5, -0.25
        m = (1 - b1) * g1
        v = (1 - b2) * g1 * g1
        p = 0.0 - lr * (m / (1 - b1)) / (np.sqrt(v / (1 - b2)) + eps)
        m = b1 * m + (1 - b1) * g2
        v = b2 * v + (1 - b2) * g2 * g2
        p = p - lr * (m / (1 - b1 ** 2)) / (np.sqrt(v / (1 - b2 ** 2)) + eps)
        params = {"p": np.array([0.0])}
        state = AdamState(lr=lr)
        optimizer_step(state, params, {"p": np.array([g1])})
        optimizer_step(state, params, {"p": np.array([g2])})
        assert params["p"][0] == pytest.approx(p, rel=1e-12)


def _tiny_corpus(n_frames=4, joints=2, count=6):
    layout = FeatureLayout(joints)
    rng = np.random.default_rng(9)
    labels = ["a", "b"]
    out = []
    for i in range(count):
        label = labels[i % 2]
        base = 0.5 if label == "a" else -0.5
        frames = base + 0.1 * rng.standard_normal((n_frames, layout.frame_dim))
        out.append(Motion(fps=20.0, layout=layout, frames=frames, label=label))
    return out


class TestPretrain:
    def test_zero_steps_is_identity(self, tiny_model, schedule):
        table = init_embeddings(["a", "b"], embed_dim=8, seed=0)
        dataset = _tiny_corpus()
        model2, table2, losses = pretrain(
            dataset, tiny_model, table, schedule, steps=0, seed=0
        )
        assert losses == []
        for key, val in tiny_model.params().items():
            np.testing.assert_array_equal(model2.params()[key], val)
        np.testing.assert_array_equal(table2.vectors, table.vectors)

    def test_same_seed_identical_parameters(self, tiny_model, schedule):
        table = init_embeddings(["a", "b"], embed_dim=8, seed=0)
        dataset = _tiny_corpus()
        runs = [
            pretrain(dataset, tiny_model, table, schedule, steps=25, seed=3)
            for _ in range(2)
        ]
        for key in runs[0][0].params():
            np.testing.assert_array_equal(
                runs[0][0].params()[key], runs[1][0].params()[key]
            )
        np.testing.assert_array_equal(runs[0][1].vectors, runs[1][1].vectors)
        assert runs[0][2] == runs[1][2]

    def test_inputs_left_untouched(self, tiny_model, schedule):
        table = init_embeddings(["a", "b"], embed_dim=8, seed=0)
        before = {k: v.copy() for k, v in tiny_model.params().items()}
        pretrain(_tiny_corpus(), tiny_model, table, schedule, steps=10, seed=0)
        for key, val in before.items():
            np.testing.assert_array_equal(tiny_model.params()[key], val)

    def test_loss_decreases_on_small_corpus(self, tiny_model, schedule):
        table = init_embeddings(["a", "b"], embed_dim=8, seed=0)
        _, _, losses = pretrain(
            _tiny_corpus(), tiny_model, table, schedule, steps=400, seed=0
        )
        assert np.mean(losses[-50:]) < 0.5 * np.mean(losses[:50])

    def test_shape_mismatch_rejected(self, tiny_model, schedule):
        table = init_embeddings(["walk"], embed_dim=8, seed=0)
        bad = [gen_motion("walk", 0, CorpusSpec())]
        with pytest.raises(DenoiserError, match="shape"):
            pretrain(bad, tiny_model, table, schedule, steps=1)

    def test_divergence_aborts_with_diagnostic(self, tiny_model, schedule):
        table = init_embeddings(["a", "b"], embed_dim=8, seed=0)
        for p in tiny_model.params().values():
            p[:] = 1e200  # forces an overflowing forward pass
        with np.errstate(all="ignore"), pytest.raises(TrainingDiverged):
            pretrain(_tiny_corpus(), tiny_model, table, schedule, steps=2, seed=0)
