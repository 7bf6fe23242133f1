import numpy as np
import pytest

from zkdamp.grid import GridSpec


@pytest.fixture
def grid64() -> GridSpec:
    """Small 2D grid for fast structural tests (not resolution-critical)."""
    return GridSpec(dim=2, half_length=(16 * np.pi,) * 2, points=(64, 64))


@pytest.fixture
def grid128() -> GridSpec:
    return GridSpec(dim=2, half_length=(16 * np.pi,) * 2, points=(128, 128))


@pytest.fixture
def grid256() -> GridSpec:
    """The 2D default: resolves a unit Gaussian to spectral accuracy."""
    return GridSpec(dim=2, half_length=(16 * np.pi,) * 2, points=(256, 256))


@pytest.fixture
def grid3d() -> GridSpec:
    return GridSpec(dim=3, half_length=(16 * np.pi,) * 3, points=(32, 32, 32))


def random_band_limited(grid: GridSpec, seed: int, band: int = 6) -> np.ndarray:
    """Band-limited random values (plain array), for round-trip style tests."""
    import scipy.fft as sfft

    rng = np.random.default_rng(seed)
    w = rng.standard_normal(grid.shape)
    W = sfft.fftn(w)
    for ax in range(grid.dim):
        k = grid.wavevectors(ax + 1)
        shape = [1] * grid.dim
        shape[ax] = grid.shape[ax]
        W = np.where(np.abs(k).reshape(shape) <= band, W, 0.0)
    return sfft.ifftn(W).real
