import numpy as np
from numpy.testing import assert_allclose

from masolver import imageio


def test_gray_round_trip_is_bit_exact(tmp_path):
    img = np.round(np.random.default_rng(0).uniform(0, 1, (1, 6, 5)) * 255) / 255
    path = tmp_path / "g.pgm"
    imageio.write_image(path, img)
    back = imageio.read_image(path)
    assert back.shape == (1, 6, 5)
    assert_allclose(back, img, atol=1e-12)


def test_rgb_round_trip_is_bit_exact(tmp_path):
    img = np.round(np.random.default_rng(1).uniform(0, 1, (3, 4, 7)) * 255) / 255
    path = tmp_path / "c.ppm"
    imageio.write_image(path, img)
    back = imageio.read_image(path)
    assert back.shape == (3, 4, 7)
    assert_allclose(back, img, atol=1e-12)


def test_values_clipped_on_write(tmp_path):
    img = np.array([[[-0.5, 1.5]]])
    path = tmp_path / "clip.pgm"
    imageio.write_image(path, img)
    back = imageio.read_image(path)
    assert back[0, 0, 0] == 0.0 and back[0, 0, 1] == 1.0


def test_two_d_input_promoted(tmp_path):
    img = np.zeros((4, 4))
    path = tmp_path / "p.pgm"
    imageio.write_image(path, img)
    assert imageio.read_image(path).shape == (1, 4, 4)
