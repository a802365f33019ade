import numpy as np
import pytest

import masolver as ms


def make_catalog(rng):
    """One representative operator per structure, small enough to densify."""
    ops = [
        ("identity", ms.build_identity(2, 3, 3)),
        ("mask_random", ms.build_mask((1, 4, 6), ms.random_mask((1, 4, 6), 0.4, rng))),
        ("mask_box", ms.build_mask((1, 8, 8), ms.box_mask((1, 8, 8), 2, 2, 4, 4))),
        ("block_f2", ms.build_block_downsample(2, 4, 4, 2)),
        ("block_f4", ms.build_block_downsample(1, 8, 8, 4)),
        ("blur_uniform3", ms.build_circular_blur(2, 8, 8, ms.uniform_kernel(3))),
        ("blur_asym", ms.build_circular_blur(1, 8, 8, np.array([0.2, 0.5, 0.3]))),
        ("channel_average", ms.build_channel_average(4, 5)),
        ("dense_wide", ms.build_dense(rng.standard_normal((5, 7)))),
        ("dense_tall", ms.build_dense(rng.standard_normal((7, 4)))),
    ]
    return ops


@pytest.fixture(scope="session")
def catalog():
    return make_catalog(np.random.default_rng(99))
