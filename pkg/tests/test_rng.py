import numpy as np
from scipy import stats

from cpcgarch.rng import BLOCK, block_normals, path_normals


def test_deterministic():
    assert np.array_equal(block_normals(3, 0, 10), block_normals(3, 0, 10))
    assert not np.array_equal(block_normals(3, 0, 10), block_normals(4, 0, 10))


def test_path_draws_do_not_depend_on_batch_or_horizon():
    big = path_normals(9, 0, 3 * BLOCK + 17, 40)
    part = path_normals(9, BLOCK - 5, 30, 25)
    assert np.array_equal(big[:25, BLOCK - 5 : BLOCK + 25], part)


def test_blocks_are_distinct_streams():
    a = block_normals(1, 0, 50)
    b = block_normals(1, 1, 50)
    assert abs(np.corrcoef(a.ravel(), b.ravel())[0, 1]) < 0.01


def test_normality():
    z = block_normals(123, 7, 100).ravel()
    assert stats.kstest(z, "norm").pvalue > 1e-3
    assert abs(z.mean()) < 0.01 and abs(z.var() - 1) < 0.02
