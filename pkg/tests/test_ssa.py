import numpy as np
import pytest

from hsikelm import kelm
from hsikelm.errors import ConfigError, NumericalError
from hsikelm.ssa import (
    SsaConfig,
    SsaState,
    begin_iteration,
    default_tuning_config,
    optimize,
    stratified_fold_ids,
    tune_kelm,
    update_joiners,
    update_producers,
    update_scouts,
    write_trace_csv,
)


def make_state(positions, fitness):
    pos = np.asarray(positions, dtype=float)
    fit = np.asarray(fitness, dtype=float)
    b, w = int(np.argmin(fit)), int(np.argmax(fit))
    state = SsaState(
        positions=pos,
        fitness=fit,
        candidates=pos.copy(),
        cand_fitness=fit.copy(),
        best_pos=pos[b].copy(),
        best_fit=float(fit[b]),
        worst_pos=pos[w].copy(),
        worst_fit=float(fit[w]),
    )
    begin_iteration(state)
    return state


def wide_cfg(d=1, **kw):
    defaults = dict(pop_size=2, max_iter=20, seed=0)
    defaults.update(kw)
    return SsaConfig(lower=np.full(d, -1e6), upper=np.full(d, 1e6), **defaults)


# -- producer update ----------------------------------------------------------

def test_producer_multiplicative_contraction(scripted_rng):
    state = make_state([[2.0], [5.0]], [1.0, 2.0])
    rng = scripted_rng(uniforms=[0.5, 0.5])  # R2 < ST, then alpha
    update_producers(state, wide_cfg(), rng)
    assert state.candidates[0, 0] == pytest.approx(2.0 * np.exp(-0.1), abs=1e-9)
    assert state.candidates[1, 0] == 5.0  # joiners untouched


def test_producer_zero_fixed_point(scripted_rng):
    state = make_state([[0.0], [5.0]], [1.0, 2.0])
    rng = scripted_rng(uniforms=[0.5, 0.7])
    update_producers(state, wide_cfg(), rng)
    assert state.candidates[0, 0] == 0.0


def test_producer_additive_branch_zero_step(scripted_rng):
    state = make_state([[2.0], [5.0]], [1.0, 2.0])
    rng = scripted_rng(uniforms=[0.9], normals=[0.0])  # R2 >= ST, Q = 0
    update_producers(state, wide_cfg(), rng)
    assert state.candidates[0, 0] == 2.0


# -- joiner update ------------------------------------------------------------

def test_joiner_worse_half_at_worst(scripted_rng):
    state = make_state([[1.0], [4.0]], [1.0, 2.0])  # joiner rank 2 > n/2, at the worst
    rng = scripted_rng(normals=[0.5])
    update_joiners(state, wide_cfg(), rng)
    assert state.candidates[1, 0] == pytest.approx(0.5 * np.exp(0.0))


def test_joiner_better_half_at_best_producer(scripted_rng):
    # ranks: row0 producer, row1 rank-2 joiner (better half), rows 2-3 worse half
    state = make_state([[3.0], [3.0], [7.0], [9.0]], [1.0, 2.0, 3.0, 4.0])
    rng = scripted_rng(int_rows=[[1]], normals=[0.0, 0.0])
    update_joiners(state, wide_cfg(pop_size=4), rng)
    assert state.candidates[1, 0] == 3.0  # |D_c - D_F| = 0 keeps it at D_F


def test_joiner_pseudo_inverse_displacement(scripted_rng):
    state = make_state(
        [[0.0, 0.0], [0.2, 0.4], [5.0, 5.0], [6.0, 6.0]], [1.0, 2.0, 3.0, 4.0]
    )
    rng = scripted_rng(int_rows=[[1, 0]], normals=[0.0, 0.0])  # A = (+1, -1)
    update_joiners(state, wide_cfg(d=2, pop_size=4), rng)
    # displacement = (0.2*1 + 0.4*(-1)) / 2 = -0.1 added to each coordinate of D_F
    assert np.allclose(state.candidates[1], [-0.1, -0.1])


# -- scout update -------------------------------------------------------------

def test_scout_jumps_to_best(scripted_rng):
    state = make_state([[1.0], [7.0]], [1.0, 2.0])
    rng = scripted_rng(perm=[1, 0], normals=[np.array([0.0])])
    update_scouts(state, wide_cfg(), rng)
    assert state.candidates[1, 0] == 1.0  # V = 0 lands exactly on the best
    assert state.scout_rows.tolist() == [1]


def test_scout_best_zero_step_unchanged(scripted_rng):
    state = make_state([[1.0], [7.0]], [1.0, 2.0])
    rng = scripted_rng(perm=[0, 1], uniforms=[0.0])  # the best sparrow, O = 0
    update_scouts(state, wide_cfg(), rng)
    assert state.candidates[0, 0] == 1.0


def test_scout_best_fitness_scaled_step(scripted_rng):
    # D_c = 4, D_worst = 1, f_c - f_w = -2, O = 1 -> 4 + 3/(-2) = 2.5
    state = make_state([[4.0], [1.0]], [1.0, 3.0])
    rng = scripted_rng(perm=[0, 1], uniforms=[1.0])
    update_scouts(state, wide_cfg(), rng)
    assert state.candidates[0, 0] == pytest.approx(2.5, abs=1e-12)


def test_scout_paper_literal_v(scripted_rng):
    state = make_state([[1.0], [7.0]], [1.0, 2.0])
    rng = scripted_rng(perm=[1, 0], int_rows=[[1]])
    update_scouts(state, wide_cfg(paper_literal_v=True), rng)
    assert state.candidates[1, 0] == pytest.approx(1.0 + 1.0 * abs(7.0 - 1.0))


# -- config and loop ----------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        SsaConfig(lower=np.array([0.0]), upper=np.array([-1.0]))
    with pytest.raises(ConfigError):
        SsaConfig(lower=np.array([0.0]), upper=np.array([1.0]), pop_size=1)
    with pytest.raises(ConfigError):
        SsaConfig(lower=np.array([0.0]), upper=np.array([1.0]), producer_ratio=0.0)
    with pytest.raises(ConfigError):
        SsaConfig(lower=np.array([0.0]), upper=np.array([1.0]), safety_threshold=1.0)
    with pytest.raises(ConfigError):
        SsaConfig(lower=np.array([0.0]), upper=np.array([1.0, 2.0]))


def test_constant_objective():
    cfg = SsaConfig(lower=np.array([-1.0]), upper=np.array([1.0]), pop_size=5, max_iter=6, seed=0)
    result = optimize(lambda x: 7.0, cfg)
    assert result.best_fit == 7.0
    assert result.trace_best == [7.0] * 6


def test_quadratic_1d_statistics():
    finals = []
    for seed in range(10):
        cfg = SsaConfig(lower=np.array([0.0]), upper=np.array([10.0]),
                        pop_size=30, max_iter=50, seed=seed)
        finals.append(optimize(lambda x: float((x[0] - 3.0) ** 2), cfg).best_fit)
    assert np.median(finals) < 1e-4


def test_trace_monotone_and_bounds_respected():
    lo, hi = np.full(3, -2.0), np.full(3, 2.0)
    cfg = SsaConfig(lower=lo, upper=hi, pop_size=10, max_iter=25, seed=5)

    def check(state):
        assert np.all(state.positions >= lo - 1e-12) and np.all(state.positions <= hi + 1e-12)
        assert np.all(state.candidates >= lo - 1e-12) and np.all(state.candidates <= hi + 1e-12)

    result = optimize(lambda x: float(np.sum(x**2)), cfg, on_iteration=check)
    assert all(a >= b for a, b in zip(result.trace_best, result.trace_best[1:]))


def test_deterministic_given_seed():
    cfg = SsaConfig(lower=np.array([-4.0, -4.0]), upper=np.array([4.0, 4.0]),
                    pop_size=8, max_iter=12, seed=9)
    obj = lambda x: float(np.sum(x**2))
    a = optimize(obj, cfg)
    b = optimize(obj, cfg)
    assert a.trace_best == b.trace_best
    assert np.array_equal(a.best_pos, b.best_pos)
    other = optimize(obj, SsaConfig(lower=cfg.lower, upper=cfg.upper,
                                    pop_size=8, max_iter=12, seed=10))
    assert a.trace_best != other.trace_best


def test_nan_objective_aborts():
    cfg = SsaConfig(lower=np.array([0.0]), upper=np.array([1.0]), pop_size=4, max_iter=2, seed=0)
    with pytest.raises(NumericalError, match="NaN"):
        optimize(lambda x: float("nan"), cfg)


def test_degenerate_bounds_return_the_point():
    cfg = SsaConfig(lower=np.array([2.0, -1.0]), upper=np.array([2.0, -1.0]),
                    pop_size=4, max_iter=3, seed=0)
    result = optimize(lambda x: float(np.sum(x**2)), cfg)
    assert np.array_equal(result.best_pos, [2.0, -1.0])


def test_trace_csv(tmp_path):
    path = tmp_path / "trace.csv"
    write_trace_csv(path, [3.0, 1.0], [5.0, 2.5])
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,best_fit,mean_fit"
    assert lines[1].startswith("1,3.0")
    assert len(lines) == 3


# -- tuning -------------------------------------------------------------------

def _blobs(n_per_class=20, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_per_class, 2)) * 0.3 + np.array([2.0, 2.0])
    b = rng.normal(size=(n_per_class, 2)) * 0.3 + np.array([-2.0, -2.0])
    x = np.vstack([a, b])
    y = np.array([1] * n_per_class + [2] * n_per_class)
    return x, y


def _cv_objective(x, y, folds, seed):
    effective, fold_of = stratified_fold_ids(y, folds, seed)
    class_ids = np.unique(y)

    def objective(z):
        hyper = kelm.KelmHyperparams(c=10.0 ** z[0], gamma=10.0 ** z[1])
        errors = []
        for f in range(effective):
            held = fold_of == f
            model = kelm.train(x[~held], y[~held], hyper)
            scores, _ = kelm.predict(model, x[held])
            errors.append(kelm.mse_fitness(scores, kelm.one_hot(y[held], class_ids)))
        return float(np.mean(errors))

    return objective


def test_tune_kelm_separable_blobs():
    x, y = _blobs()
    cfg = default_tuning_config(seed=0, pop_size=10, max_iter=8)
    result = tune_kelm(x, y, cfg, folds=3)
    assert result.best_fitness < 0.05
    # independent grid oracle: a sub-0.05 region exists inside the same bounds
    objective = _cv_objective(x, y, folds=3, seed=0)
    grid = [objective(np.array([lc, lg]))
            for lc in np.linspace(-2, 4, 7) for lg in np.linspace(-3, 3, 7)]
    assert min(grid) < 0.05
    assert result.best_fitness <= min(grid) + 0.05


def test_tune_kelm_single_fold_is_training_mse():
    x, y = _blobs(n_per_class=10, seed=1)
    cfg = default_tuning_config(seed=1, pop_size=6, max_iter=4)
    result = tune_kelm(x, y, cfg, folds=1)
    hyper = result.hyper
    model = kelm.train(x, y, hyper)
    scores, _ = kelm.predict(model, x)
    training_mse = kelm.mse_fitness(scores, kelm.one_hot(y, model.class_ids))
    assert result.best_fitness == pytest.approx(training_mse, rel=1e-12)
    assert result.folds_used == 1


def test_tune_kelm_degenerate_bounds():
    x, y = _blobs(n_per_class=6, seed=2)
    cfg = SsaConfig(lower=np.array([1.0, 0.0]), upper=np.array([1.0, 0.0]),
                    pop_size=4, max_iter=2, seed=0)
    result = tune_kelm(x, y, cfg, folds=2)
    assert result.hyper.c == 10.0
    assert result.hyper.gamma == 1.0


def test_fold_reduction_warns():
    y = np.array([1, 1, 1, 1, 2])  # class 2 is a singleton
    with pytest.warns(UserWarning, match="reducing folds"):
        effective, _ = stratified_fold_ids(y, folds=5, seed=0)
    assert effective == 1
    with pytest.warns(UserWarning, match="reducing folds"):
        effective, fold_of = stratified_fold_ids(np.array([1, 1, 1, 2, 2, 2]), folds=5, seed=0)
    assert effective == 3
    # every training side keeps both classes
    for f in range(3):
        assert set(np.array([1, 1, 1, 2, 2, 2])[fold_of != f]) == {1, 2}
