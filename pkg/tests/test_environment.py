from config.loader import config_from_dict
from orchestration.environment import ModuleEnvironment, build_scene


def single_element_config(enforce):
    return config_from_dict({
        "bits": 2,
        "array": {"rows": 2, "cols": 2, "module_rows": 2, "module_cols": 2},
        "room": {"enabled": False},
        "ue": {"distance": 0.05},
        "zone": {"enforce": enforce},
    })


class TestSingleElementModules:
    def test_scene_builds_without_zone_enforcement(self):
        scene = build_scene(single_element_config(False))
        assert scene.layout.module_size == 1
        assert scene.active == frozenset(range(4))
        assert not scene.enforce_zone

    def test_environment_measures_each_module(self):
        env = ModuleEnvironment(build_scene(single_element_config(False)))
        for m in range(env.n_modules):
            oracle = env.module_oracle(m)
            assert len(oracle) == 1
            assert env.measure(m, oracle) <= env.module_target(m) * (1 + 1e-12)

    def test_bounds_are_degenerate_not_an_error(self):
        scene = build_scene(single_element_config(False))
        assert scene.bounds.sub_lower == 0.0


    def test_enforced_zone_only_warns_about_modules(self):
        env = ModuleEnvironment(build_scene(single_element_config(True)))
        assert env.scene.enforce_zone
        assert env.n_modules == 4
