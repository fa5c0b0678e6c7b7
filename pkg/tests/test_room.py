import numpy as np
import pytest

from channel.room import SURFACES, RoomEnv, free_space, image_reflection_paths
from utils.exceptions import ChannelError


class TestImageReflectionPaths:
    """Caminhos de primeira ordem pelo método das imagens"""

    def test_floor_image_length(self):
        paths = image_reflection_paths(RoomEnv(), (1.0, 1.0, 1.0), (3.0, 1.0, 1.0))
        floor = paths.surfaces.index("floor")
        assert paths.lengths[floor] == pytest.approx(np.sqrt(8.0), abs=1e-3)
        assert paths.lengths[floor] == pytest.approx(2.828, abs=1e-3)

    def test_six_paths_between_interior_points(self):
        paths = image_reflection_paths(RoomEnv(), (1.0, 1.0, 1.0), (3.0, 2.0, 2.0))
        assert len(paths) == len(SURFACES)
        assert set(paths.surfaces) == {name for name, _, _ in SURFACES}

    def test_reflected_paths_longer_than_direct(self):
        r_n, r_u = np.array([1.0, 0.5, 1.0]), np.array([2.5, 3.0, 2.0])
        paths = image_reflection_paths(RoomEnv(), r_n, r_u)
        assert np.all(paths.lengths > np.linalg.norm(r_u - r_n))

    def test_amplitudes_and_phases_per_surface(self):
        room = RoomEnv(surface_reflection=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6), surface_phase_shift=(1, 2, 3, 4, 5, 6))
        paths = image_reflection_paths(room, (1.0, 1.0, 1.0), (3.0, 2.0, 2.0))
        ceiling = paths.surfaces.index("ceiling")
        assert paths.amplitudes[ceiling] == pytest.approx(0.6)
        assert paths.phases[ceiling] == pytest.approx(6.0)

    def test_element_on_wall_has_no_image_in_that_wall(self):
        paths = image_reflection_paths(RoomEnv(), (1.0, 0.0, 1.5), (1.0, 1.4, 1.5))
        assert "y_min" not in paths.surfaces
        assert len(paths) == len(SURFACES) - 1

    def test_disabled_room_has_no_reflections(self):
        paths = image_reflection_paths(free_space(), (1.0, 1.0, 1.0), (3.0, 1.0, 1.0))
        assert len(paths) == 0

    def test_point_outside_room(self):
        with pytest.raises(ChannelError):
            image_reflection_paths(RoomEnv(), (1.0, 1.0, 1.0), (5.0, 1.0, 1.0))


class TestRoomEnv:
    def test_scalar_reflection_broadcast(self):
        room = RoomEnv(surface_reflection=0.2)
        assert room.surface_reflection == (0.2,) * 6

    def test_reflection_out_of_range(self):
        with pytest.raises(ChannelError):
            RoomEnv(surface_reflection=1.5)

    def test_wrong_number_of_phases(self):
        with pytest.raises(ChannelError):
            RoomEnv(surface_phase_shift=(0.0, 1.0))

    def test_nonpositive_dimensions(self):
        with pytest.raises(ChannelError):
            RoomEnv(dimensions=(4.0, 0.0, 3.0))

    def test_random_phases_reproducible(self):
        first = RoomEnv().with_random_phases(np.random.default_rng(3))
        second = RoomEnv().with_random_phases(np.random.default_rng(3))
        assert first.surface_phase_shift == second.surface_phase_shift
        assert all(0.0 <= p < 2 * np.pi for p in first.surface_phase_shift)

    def test_contains(self):
        room = RoomEnv()
        mask = room.contains(np.array([[0.0, 0.0, 0.0], [4.0, 4.0, 3.0], [2.0, 2.0, 3.1]]))
        np.testing.assert_array_equal(mask, [True, True, False])
