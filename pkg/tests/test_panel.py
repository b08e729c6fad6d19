import numpy as np
import pytest

from ribforge.core.errors import DatasetIOError
from ribforge.data.panel import PALETTE, encode_ppm, overlay, render_panel, write_panel


def test_panel_layout(small_dataset):
    panel = render_panel(small_dataset[0])
    assert panel.shape == (32, 3 * 32 + 4, 3)
    assert panel.dtype == np.uint8
    gray = panel[:, :32]
    assert np.all(gray[..., 0] == gray[..., 1])
    assert np.all(panel[:, 32:34] == 0)


def test_overlay_tints_only_masked_pixels():
    gray = np.full((2, 2), 100, dtype=np.uint8)
    mask = np.array([[[1, 0], [0, 0]]], dtype=np.uint8)
    rgb = overlay(gray, mask)
    np.testing.assert_array_equal(rgb[0, 0], np.rint(0.5 * 100 + 0.5 * PALETTE[0]).astype(np.uint8))
    np.testing.assert_array_equal(rgb[1, 1], [100, 100, 100])


def test_write_panel_emits_binary_ppm(tmp_path, small_dataset):
    path = write_panel(small_dataset[1], tmp_path / "panels" / "p.ppm")
    blob = path.read_bytes()
    assert blob.startswith(b"P6\n100 32\n255\n")
    assert len(blob) == len(b"P6\n100 32\n255\n") + 32 * 100 * 3


def test_ppm_needs_rgb_bytes():
    with pytest.raises(DatasetIOError):
        encode_ppm(np.zeros((2, 2), dtype=np.uint8))
