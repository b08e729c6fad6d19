import numpy as np
import pytest

from ribforge.core.errors import DatasetIOError, IntegrityError
from ribforge.data.dataset_io import (
    dequantize_image,
    encode_pgm,
    has_split,
    load_dataset,
    quantize_image,
    read_sample,
    write_sample,
    write_splits,
)
from ribforge.data.types import PhantomDataset
from ribforge.utils.helpers import crc32_hex, read_json, write_json


def test_sample_roundtrip(tmp_path, small_dataset):
    sample = small_dataset[0]
    directory = write_sample(sample, tmp_path / "s0")
    assert (directory / "masks" / "rib_00.pgm").is_file()
    assert (directory / "masks" / "clav_1.pgm").is_file()
    manifest = read_json(directory / "manifest.json")
    assert manifest["groups"] == {"ribs": 12, "lungs": 2, "clavicles": 2}
    assert manifest["height"] == manifest["width"] == 32

    back = read_sample(directory)
    assert back.masks.equals(sample.masks)
    assert back.sample_id == "s0"
    assert back.provenance == "real"
    np.testing.assert_allclose(back.image, sample.image, atol=0.5 / 255 + 1e-7)


def test_quantization_is_round_to_nearest():
    pixels = quantize_image(np.array([0.0, 0.6 / 255, 0.4 / 255, 1.0, 1.3, -0.2]))
    np.testing.assert_array_equal(pixels, [0, 1, 0, 255, 255, 0])
    assert dequantize_image(np.array([255], dtype=np.uint8))[0] == 1.0


def test_tampered_file_fails_integrity(tmp_path, small_dataset):
    directory = write_sample(small_dataset[1], tmp_path / "s1")
    blob = bytearray((directory / "image.pgm").read_bytes())
    blob[-1] ^= 0x01
    (directory / "image.pgm").write_bytes(bytes(blob))
    with pytest.raises(IntegrityError):
        read_sample(directory)


def test_non_binary_mask_fails_integrity(tmp_path, small_dataset):
    directory = write_sample(small_dataset[2], tmp_path / "s2")
    blob = encode_pgm(np.full((32, 32), 128, dtype=np.uint8))
    (directory / "masks" / "lung_0.pgm").write_bytes(blob)
    manifest = read_json(directory / "manifest.json")
    manifest["crc32"]["masks/lung_0.pgm"] = crc32_hex(blob)
    write_json(directory / "manifest.json", manifest)
    with pytest.raises(IntegrityError, match="binary"):
        read_sample(directory)


def test_missing_files_raise_io_errors(tmp_path, small_dataset):
    directory = write_sample(small_dataset[3], tmp_path / "s3")
    (directory / "masks" / "rib_05.pgm").unlink()
    with pytest.raises(DatasetIOError):
        read_sample(directory)
    with pytest.raises(DatasetIOError):
        read_sample(tmp_path / "nowhere")
    with pytest.raises(DatasetIOError):
        load_dataset(tmp_path / "nowhere")


def test_integrity_errors_are_io_errors():
    assert issubclass(IntegrityError, DatasetIOError)
    assert issubclass(DatasetIOError, OSError)


def test_split_tree(tmp_path, small_dataset):
    splits = {
        "train": PhantomDataset(small_dataset.samples[:4], name="train"),
        "val": PhantomDataset(small_dataset.samples[4:5], name="val"),
        "test": PhantomDataset(small_dataset.samples[5:], name="test"),
    }
    write_splits(tmp_path, splits)
    assert read_json(tmp_path / "splits.json")["val"] == [small_dataset[4].sample_id]
    assert has_split(tmp_path, "val")
    assert not has_split(tmp_path, "holdout")
    assert not has_split(tmp_path / "train", "val")

    train = load_dataset(tmp_path, "train")
    assert [s.sample_id for s in train] == [s.sample_id for s in small_dataset.samples[:4]]
    assert len(load_dataset(tmp_path)) == 6
    assert len(load_dataset(tmp_path / "test")) == 1
    with pytest.raises(DatasetIOError):
        load_dataset(tmp_path, "holdout")
