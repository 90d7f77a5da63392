import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import codebook
from channel import sample_channel
from codebook import (
    assign_coders, build_pool, channel_gain_coders, deploy_codebook, distance_table, distortion, load_codebook,
    nested_codebooks, random_codebook, save_codebook, siso_gain_sum, train_codebook, update_centers,
)
from config import CodebookConfig, OptimizerConfig, QuasiNewtonConfig, SeboConfig
from errors import EmptyCodebook, InvalidAntennaData
from models import Assignment, Codebook, CoderMatrix, CoderPool, PoolObjective, Scheme, join_bits
from schemes import zero_coders
from schemes import deployment_score

FAST = OptimizerConfig(qn=QuasiNewtonConfig(restarts=2, max_iters=60))

pools = st.integers(min_value=1, max_value=40).flatmap(
    lambda rows: st.lists(st.lists(st.integers(0, 1), min_size=6, max_size=6), min_size=rows, max_size=rows)
)


def _hamming(a, b) -> int:
    return int(np.count_nonzero(np.asarray(a) != np.asarray(b)))


def test_build_pool_collects_every_column(ctx, params, power):
    channels = [sample_channel(s, 3 * ctx.n_eff, 2 * ctx.n_eff, 10 ** (-66 / 20)) for s in range(3)]
    pool = build_pool(ctx, channels, Scheme.RFC_SVD, power, params, FAST, m=2, n=3)
    assert pool.size == (2 + 3) * 3
    assert pool.q == ctx.q
    assert set(np.unique(pool.entries)) <= {0, 1}


def test_channel_gain_pool_maximizes_siso_gain(ctx, params, power):
    channels = [sample_channel(s, 2 * ctx.n_eff, ctx.n_eff, 10 ** (-66 / 20)) for s in range(3)]
    pool = build_pool(ctx, channels, Scheme.RFC_SVD, power, params, FAST, m=1, n=2,
                      objective=PoolObjective.CHANNEL_GAIN)
    assert pool.size == (1 + 2) * 3

    for i, ch in enumerate(channels):
        b_t, b_r = channel_gain_coders(ctx, ch, FAST.sebo, 1, 2)
        assert np.array_equal(pool.entries[3 * i:3 * i + 3], np.vstack([c.b for c in b_t.columns + b_r.columns]))

        # один блок на все биты: SEBO превращается в полный перебор
        b_t, b_r = channel_gain_coders(ctx, ch, SeboConfig(block_size=3 * ctx.q, rounds=1), 1, 2)
        objective = ctx.bits_objective(ch, 1, 2, siso_gain_sum)
        best = max(objective(np.array(bits)) for bits in itertools.product((0, 1), repeat=3 * ctx.q))
        assert objective(join_bits(b_t, b_r)) == pytest.approx(best, rel=1e-12)
        assert best >= objective(join_bits(*zero_coders(ctx.q, 1, 2)))


def test_distance_is_root_hamming():
    pool = CoderPool(np.array([[0, 0, 0, 0], [1, 1, 0, 0], [1, 1, 1, 1]]))
    cb = Codebook(np.array([[0, 0, 0, 0], [1, 1, 1, 0]]))
    table = distance_table(pool, cb)
    expected = [[np.sqrt(_hamming(p, c)) for c in cb.codewords] for p in pool.entries]
    np.testing.assert_allclose(table, expected, rtol=1e-15)

    with pytest.raises(InvalidAntennaData):
        distance_table(pool, Codebook(np.zeros((1, 5))))


def test_assignment_ties_go_to_lowest_index():
    pool = CoderPool(np.array([[1, 0], [0, 1]]))
    cb = Codebook(np.array([[0, 0], [1, 1]]))
    asg = assign_coders(pool, cb)
    assert asg.labels.tolist() == [0, 0]
    assert asg.r.tolist() == [[1, 0], [1, 0]]
    assert distortion(pool, cb, asg) == pytest.approx(2.0)


def test_update_center_single_member():
    member = np.array([1, 0, 1, 1, 0, 0, 1, 0])
    pool = CoderPool(member[None, :])
    previous = Codebook(np.zeros((1, 8)))
    cb = update_centers(pool, Assignment(labels=[0], clusters=1), previous, SeboConfig())
    assert cb.codewords[0].tolist() == member.tolist()


def test_update_center_is_exhaustive_minimizer(rng):
    for _ in range(20):
        q = int(rng.integers(2, 8))
        members = rng.integers(0, 2, (int(rng.integers(2, 9)), q))
        pool = CoderPool(members)
        previous = Codebook(rng.integers(0, 2, (1, q)))
        cb = update_centers(pool, Assignment(labels=np.zeros(len(members)), clusters=1), previous,
                            SeboConfig(block_size=10))

        def cost(c):
            return sum(np.sqrt(_hamming(m, c)) for m in members)

        best = min(cost(np.array(c)) for c in itertools.product((0, 1), repeat=q))
        assert cost(cb.codewords[0]) == pytest.approx(best, rel=1e-12)


@given(pools, st.integers(min_value=1, max_value=5))
@settings(max_examples=40, deadline=None)
def test_distortion_never_increases(rows, size):
    pool = CoderPool(np.array(rows))
    history = []
    cb = train_codebook(pool, size, CodebookConfig(max_iter=10), history)
    assert cb.size == size and cb.q == 6
    for a, b in zip(history, history[1:]):
        assert b <= a + 1e-12


def test_zero_distortion_when_codebook_covers_pool():
    pool = CoderPool(np.array([[0, 1, 1], [0, 1, 1], [1, 0, 0], [1, 1, 1], [1, 0, 0]]))
    for size in (3, 4):
        cb = train_codebook(pool, size, CodebookConfig())
        assert distortion(pool, cb, assign_coders(pool, cb)) == 0.0


def test_single_codeword_codebook():
    pool = CoderPool(np.array([[1, 1, 0, 0], [1, 1, 0, 1], [1, 1, 1, 0]]))
    cb = train_codebook(pool, 1, CodebookConfig())
    assert cb.size == 1
    assert cb.codewords[0].tolist() == [1, 1, 0, 0]
    assert assign_coders(pool, cb).labels.tolist() == [0, 0, 0]


def test_training_is_deterministic_and_checked(rng):
    pool = CoderPool(rng.integers(0, 2, (30, 5)))
    cfg = CodebookConfig(rng_seed=4)
    assert np.array_equal(train_codebook(pool, 4, cfg).codewords, train_codebook(pool, 4, cfg).codewords)
    with pytest.raises(EmptyCodebook):
        train_codebook(pool, 0, cfg)
    with pytest.raises(EmptyCodebook):
        train_codebook(CoderPool(np.zeros((0, 5))), 2, cfg)


def test_nested_codebooks_share_prefix(rng):
    pool = CoderPool(rng.integers(0, 2, (40, 6)))
    books = nested_codebooks(pool, [2, 4, 8], CodebookConfig())
    assert sorted(books) == [2, 4, 8]
    for small, large in ((2, 4), (4, 8)):
        assert np.array_equal(books[large].codewords[:small], books[small].codewords)
    assert nested_codebooks(pool, [], CodebookConfig()) == {}


def test_random_codebook_is_seeded():
    a = random_codebook(6, 5, seed=1)
    assert a.size == 5 and a.q == 6
    assert np.array_equal(a.codewords, random_codebook(6, 5, seed=1).codewords)


def test_empty_codebook_rejected():
    with pytest.raises(EmptyCodebook):
        Codebook(np.zeros((0, 4)))
    with pytest.raises(EmptyCodebook):
        Codebook.from_bits([])


def test_deploy_counts_evaluations_and_is_monotone(ctx, channel_2x2, params, power, rng, monkeypatch):
    cb = Codebook(rng.integers(0, 2, (5, ctx.q)))
    calls = []

    def counted(*args, **kwargs):
        calls.append(1)
        return deployment_score(*args, **kwargs)

    monkeypatch.setattr(codebook, "deployment_score", counted)
    evaluations = []
    result = deploy_codebook(ctx, channel_2x2, cb, Scheme.RFC_SVD, power, params, FAST, 2, 2,
                             evaluations=evaluations)
    assert evaluations and all(e == (2 + 2) * cb.size for e in evaluations)
    # одна стартовая оценка плюс (M+N)·D на каждый проход
    assert len(calls) == 1 + sum(evaluations)
    assert result.iterations == len(evaluations)
    assert all(b > a for a, b in zip(result.history, result.history[1:]))
    start = deployment_score(Scheme.RFC_SVD, ctx, channel_2x2, CoderMatrix.uniform(cb.coder(0), 2),
                             CoderMatrix.uniform(cb.coder(0), 2), power, params, FAST)
    assert result.history[0] == start


def test_deploy_ends_at_coordinate_optimum(ctx, params, power, rng):
    cb = Codebook(rng.integers(0, 2, (6, ctx.q)))
    ch = sample_channel(21, ctx.n_eff, ctx.n_eff, 10 ** (-66 / 20))
    result = deploy_codebook(ctx, ch, cb, Scheme.RFC_SVD, power, params, FAST, 1, 1)
    best = result.history[-1]

    def score(d_t, d_r):
        return deployment_score(Scheme.RFC_SVD, ctx, ch, CoderMatrix((cb.coder(d_t),)),
                                CoderMatrix((cb.coder(d_r),)), power, params, FAST)

    d_t = next(d for d in range(cb.size) if np.array_equal(cb.codewords[d], result.b_t.columns[0].b))
    d_r = next(d for d in range(cb.size) if np.array_equal(cb.codewords[d], result.b_r.columns[0].b))
    assert score(d_t, d_r) == pytest.approx(best, rel=1e-12)
    for d in range(cb.size):
        assert score(d, d_r) <= best * (1 + 1e-12)
        assert score(d_t, d) <= best * (1 + 1e-12)
    assert best <= max(score(a, b) for a in range(cb.size) for b in range(cb.size))


def test_deploy_single_codeword_returns_it(ctx, channel_2x2, params, power):
    cb = Codebook(np.array([[1, 0, 1, 0]]))
    evaluations = []
    result = deploy_codebook(ctx, channel_2x2, cb, Scheme.DCC_SVD, power, params, FAST, 2, 2,
                             evaluations=evaluations)
    assert evaluations == [4]
    assert result.b_t.as_matrix().T.tolist() == [[1, 0, 1, 0]] * 2
    with pytest.raises(InvalidAntennaData):
        deploy_codebook(ctx, channel_2x2, Codebook(np.zeros((2, 3))), Scheme.DCC_SVD, power, params, FAST, 2, 2)


def test_codebook_file_round_trip(tmp_path):
    cb = Codebook(np.array([[0, 1, 1, 0], [1, 1, 1, 1], [0, 0, 0, 1]]))
    path = tmp_path / "cb.json"
    save_codebook(cb, path)
    assert np.array_equal(load_codebook(path).codewords, cb.codewords)

    (tmp_path / "bad.json").write_text('{"q": 5, "d": 1, "codewords": ["0110"]}', encoding="utf-8")
    with pytest.raises(InvalidAntennaData):
        load_codebook(tmp_path / "bad.json")
    with pytest.raises(InvalidAntennaData):
        load_codebook(tmp_path / "missing.json")
