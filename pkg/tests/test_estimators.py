import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from rectixform.estimators import (
    DHTTransformer,
    FCFSTransformer,
    FFTTransformer,
    PCHTTransformer,
    check_images,
    check_tiles,
    make_transformer,
    transform_tiles,
)
from rectixform.geometry import Tile, rasterize

from conftest import generated_tiles


@pytest.fixture(scope="module")
def tiles16():
    return generated_tiles("staircase_mix", 16, 0)[:5]


def test_pcht_matches_dht(tiles16):
    a = PCHTTransformer().fit_transform(tiles16)
    b = DHTTransformer().fit_transform(tiles16)
    assert a.shape == (len(tiles16), 256)
    np.testing.assert_allclose(a, b, atol=1e-12)
    imgs = np.stack([rasterize(t) for t in tiles16])
    np.testing.assert_allclose(DHTTransformer().fit(imgs).transform(imgs), b, atol=1e-12)


def test_fcfs_backends_and_fft_shape(tiles16):
    outs = [FCFSTransformer(backend=b).fit_transform(tiles16) for b in ("pruned", "dense", "goertzel")]
    for o in outs[1:]:
        np.testing.assert_allclose(o, outs[0], atol=1e-12)
    f = FFTTransformer().fit(tiles16)
    assert f.transform(tiles16).shape == outs[0].shape == (len(tiles16), f.n_features_out_)


def test_params_and_clone():
    t = PCHTTransformer(levels=2)
    assert t.get_params() == {"levels": 2}
    c = clone(FCFSTransformer(backend="dense", plan="model"))
    assert c.get_params() == {"backend": "dense", "plan": "model"}
    t.set_params(levels=1)
    assert t.levels == 1


def test_levels(tiles16):
    t = PCHTTransformer(levels=2).fit(tiles16)
    assert t.levels_ == 2 and t.n_features_out_ == 16
    assert t.transform(tiles16).shape == (len(tiles16), 16)
    with pytest.raises(ValueError):
        PCHTTransformer(levels=5).fit(tiles16)


def test_not_fitted_and_shape_checks(tiles16):
    with pytest.raises(NotFittedError):
        PCHTTransformer().transform(tiles16)
    t = PCHTTransformer().fit(tiles16)
    with pytest.raises(ValueError):
        t.transform([Tile(32, 32)])
    with pytest.raises(ValueError):
        PCHTTransformer().fit([Tile(16, 8)])
    with pytest.raises(ValueError):
        PCHTTransformer().fit([Tile(12, 12)])
    with pytest.raises(ValueError):
        FCFSTransformer(backend="magic").fit(tiles16)


def test_validation_helpers():
    with pytest.raises(ValueError):
        check_tiles([])
    with pytest.raises(TypeError):
        check_tiles([Tile(4, 4), "tile"])
    with pytest.raises(ValueError):
        check_tiles([Tile(4, 4), Tile(8, 8)])
    tiles, shape = check_tiles(Tile(4, 8))
    assert shape == (4, 8) and len(tiles) == 1
    assert check_images(np.zeros((4, 4))).shape == (1, 4, 4)
    with pytest.raises(ValueError):
        check_images(np.zeros(4))


def test_pipeline(tiles16):
    pipe = make_pipeline(FCFSTransformer(), FunctionTransformer(np.abs))
    out = pipe.fit_transform(tiles16)
    assert out.dtype == float and out.shape == (len(tiles16), 256)


def test_factory(tiles16):
    assert isinstance(make_transformer("fft"), FFTTransformer)
    np.testing.assert_allclose(transform_tiles("pcht", tiles16, levels=1),
                               PCHTTransformer(levels=1).fit_transform(tiles16))
    with pytest.raises(ValueError):
        make_transformer("wavelet")
