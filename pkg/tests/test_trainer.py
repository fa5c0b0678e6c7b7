import numpy as np
import pandas as pd
import pytest

from beamforming.codebook import PhaseCodebook
from learning.agent import TD3Agent, TD3Hyper
from orchestration.environment import ModuleEnvironment, build_scene
from orchestration.trainer import (
    CURVE_COLUMNS,
    CurveWriter,
    TrainingSchedule,
    read_curve,
    train_all,
    train_module,
)
from utils.exceptions import ExperimentError
from utils.seeding import SeedStreams

HYPER = TD3Hyper(batch_size=4, buffer_capacity=100, knn_k=4)


def make_agents(env, seed=7):
    streams = SeedStreams(seed)
    return {
        m: TD3Agent(env.module_size, env.scene.codebook, HYPER, streams=streams, module=m)
        for m in sorted(env.scene.active)
    }


@pytest.fixture
def env(small_config):
    return ModuleEnvironment(build_scene(small_config))


class TestTrainingSchedule:
    def test_window_must_be_smaller_than_max_steps(self):
        with pytest.raises(ExperimentError):
            TrainingSchedule(max_steps=10, window=10)

    def test_negative_threshold(self):
        with pytest.raises(ExperimentError):
            TrainingSchedule(max_steps=10, window=5, threshold=-0.1)

    def test_snapshot_steps_sorted_and_unique(self):
        schedule = TrainingSchedule(max_steps=10, window=5, snapshot_steps=(8, 2, 8))
        assert schedule.snapshot_steps == (2, 8)


class TestCurveWriter:
    def test_rows_are_appended(self, tmp_path):
        path = tmp_path / "curves" / "module_0.csv"
        row = dict.fromkeys(CURVE_COLUMNS, 1.0)
        with CurveWriter(path, flush_every=2) as writer:
            for step in range(5):
                writer.append({**row, "step": step})
        curve = read_curve(path)
        assert curve["step"].tolist() == [0, 1, 2, 3, 4]

    def test_header_written_before_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        CurveWriter(path)
        assert list(pd.read_csv(path).columns) == CURVE_COLUMNS

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        pd.DataFrame({"step": [0]}).to_csv(path, index=False)
        with pytest.raises(ExperimentError):
            read_curve(path)


class TestTrainModule:
    def test_constant_power_converges_after_window(self):
        agent = TD3Agent(3, PhaseCodebook(2), HYPER, streams=SeedStreams(1))
        schedule = TrainingSchedule(max_steps=50, window=10, threshold=0.01)
        outcome = train_module(agent, lambda w: 1.0, schedule, target=2.0)
        assert outcome.converged
        assert outcome.steps == 11
        assert outcome.power_fraction == pytest.approx(0.5)

    def test_runs_to_max_steps_without_convergence(self):
        agent = TD3Agent(3, PhaseCodebook(2), HYPER, streams=SeedStreams(1))
        powers = iter(range(1, 1000))
        schedule = TrainingSchedule(max_steps=15, window=10, threshold=0.01)
        outcome = train_module(agent, lambda w: float(next(powers)), schedule, target=1.0)
        assert not outcome.converged
        assert outcome.steps == 15

    def test_snapshots_filled(self, env):
        agent = make_agents(env)[0]
        schedule = TrainingSchedule(max_steps=12, window=10, snapshot_steps=(3, 6, 500))
        outcome = train_module(agent, env.meter(0), schedule, env.module_target(0))
        assert set(outcome.snapshots) == {3, 6, 500}
        assert outcome.snapshots[500] == outcome.best_action

    def test_curve_rows(self, env, tmp_path):
        agent = make_agents(env)[0]
        schedule = TrainingSchedule(max_steps=8, window=4, threshold=0.0)
        with CurveWriter(tmp_path / "c.csv") as writer:
            outcome = train_module(agent, env.meter(0), schedule, env.module_target(0), writer)
        curve = read_curve(tmp_path / "c.csv")
        assert len(curve) == outcome.steps
        assert curve["step"].tolist() == list(range(outcome.steps))
        assert (curve["power_frac_of_target"] <= 1.0 + 1e-9).all()
        assert set(curve["reward"]) <= {-1.0, 1.0}


class TestTrainAll:
    def test_parallel_equals_sequential(self, env, tmp_path):
        sequential = train_all(
            make_agents(env), env, TrainingSchedule(max_steps=12, window=6, parallel=False), tmp_path / "seq"
        )
        parallel = train_all(
            make_agents(env), env, TrainingSchedule(max_steps=12, window=6, parallel=True, workers=3), tmp_path / "par"
        )
        assert list(sequential) == list(parallel) == [0, 1, 2, 3]
        for m in sequential:
            assert sequential[m].best_action == parallel[m].best_action
            assert sequential[m].best_power == parallel[m].best_power
            seq_curve = read_curve(tmp_path / "seq" / f"module_{m}.csv")
            par_curve = read_curve(tmp_path / "par" / f"module_{m}.csv")
            pd.testing.assert_frame_equal(seq_curve, par_curve)

    def test_curve_names(self, env, tmp_path):
        agents = make_agents(env)
        names = {m: f"td3_module_{m}.csv" for m in agents}
        train_all(agents, env, TrainingSchedule(max_steps=3, window=2, parallel=False), tmp_path, names)
        assert sorted(p.name for p in tmp_path.iterdir()) == sorted(names.values())

    def test_no_agents(self, env):
        with pytest.raises(ExperimentError):
            train_all({}, env, TrainingSchedule(max_steps=3, window=2))

    def test_failing_module_reported(self, env):
        agents = make_agents(env)

        def broken(meter, step=None):
            raise RuntimeError("falha simulada")

        agents[2].train_step = broken
        with pytest.raises(ExperimentError):
            train_all(agents, env, TrainingSchedule(max_steps=3, window=2, parallel=True, workers=2))

    def test_modules_are_independent(self, env):
        agents = make_agents(env)
        alone = make_agents(env)[1]
        outcomes = train_all(agents, env, TrainingSchedule(max_steps=8, window=4, parallel=False))
        single = train_module(alone, env.meter(1), TrainingSchedule(max_steps=8, window=4), env.module_target(1))
        assert outcomes[1].best_action == single.best_action
        assert np.isclose(outcomes[1].best_power, single.best_power)
