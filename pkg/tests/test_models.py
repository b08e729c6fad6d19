import numpy as np
import pytest

from ribforge.core.errors import NormStateError, ShapeError, WeightsMismatchError
from ribforge.core.rng import make_rng
from ribforge.models import (
    ASPP,
    GuidanceUNet,
    Generator,
    MTUNet,
    PatchDiscriminator,
    load_module_weights,
    module_weights,
    sinusoidal_position_encoding,
)
from ribforge.nn import BatchNorm2d
from ribforge.presets import resolve_stage_config
from ribforge.schemas.configs import GROUP_NAMES, DiscriminatorConfig, GeneratorConfig, GuidanceUNetConfig, MTUNetConfig
from ribforge.tensor import Tensor, backward, no_grad

SIZE = 32


@pytest.fixture(scope="module")
def masks():
    rng = np.random.default_rng(0)
    return (rng.random((2, 16, SIZE, SIZE)) < 0.2).astype(np.float32)


@pytest.fixture(scope="module")
def images():
    return np.random.default_rng(1).uniform(-1, 1, size=(2, 1, SIZE, SIZE)).astype(np.float32)


def test_generator_maps_masks_to_bounded_image(masks):
    gen = Generator(GeneratorConfig(), make_rng(0, "generator"))
    out = gen(masks)
    assert out.shape == (2, 1, SIZE, SIZE)
    assert np.all(np.abs(out.data) < 1.0)


def test_generator_encoders_check_their_group(masks):
    gen = Generator(GeneratorConfig(), make_rng(0, "generator"))
    feats = gen.encode("lungs", masks[:, 12:14])
    assert feats.shape == (2, GeneratorConfig().feature_channels, SIZE // 16, SIZE // 16)
    with pytest.raises(ShapeError):
        gen.encode("lungs", masks[:, :3])
    with pytest.raises(ShapeError):
        gen.encode("heart", masks[:, 12:14])
    with pytest.raises(ShapeError):
        gen(masks[:, :10])
    with pytest.raises(ShapeError):
        gen(np.zeros((1, 16, 24, 24), dtype=np.float32))


def test_same_seed_builds_identical_networks():
    a = Generator(GeneratorConfig(), make_rng(3, "generator"))
    b = Generator(GeneratorConfig(), make_rng(3, "generator"))
    for (na, xa), (nb, xb) in zip(a.named_state(), b.named_state()):
        assert na == nb
        np.testing.assert_array_equal(xa, xb)


def test_discriminator_patch_map(images):
    disc = PatchDiscriminator(DiscriminatorConfig(), make_rng(0, "discriminator"))
    out = disc(images)
    side = disc.output_extent(SIZE)
    assert side == 6
    assert out.shape == (2, 1, side, side)
    with pytest.raises(ShapeError):
        disc(np.zeros((1, 1, 4, 4), dtype=np.float32))
    with pytest.raises(ShapeError):
        disc(np.zeros((1, 2, SIZE, SIZE), dtype=np.float32))


def test_guidance_outputs_probabilities(images):
    net = GuidanceUNet(GuidanceUNetConfig(), make_rng(0, "guidance"))
    out = net(images)
    assert out.shape == (2, 16, SIZE, SIZE)
    assert np.all((out.data >= 0) & (out.data <= 1))
    with pytest.raises(ShapeError):
        net(np.zeros((1, 1, 20, 20), dtype=np.float32))


@pytest.mark.parametrize("use_aspp", [True, False])
def test_mtunet_shapes(images, use_aspp):
    net = MTUNet(MTUNetConfig(use_aspp=use_aspp), make_rng(0, "mtunet"))
    out = net(images)
    assert out.shape == (2, 16, SIZE, SIZE)
    assert np.all((out.data >= 0) & (out.data <= 1))
    assert (net.aspp is None) == (not use_aspp)


def test_mtunet_attention_rows_are_distributions(images):
    cfg = MTUNetConfig()
    net = MTUNet(cfg, make_rng(0, "mtunet"))
    with no_grad():
        net(images)
    maps = net.attention_maps
    assert len(maps) == cfg.n_transformer_layers
    tokens = (SIZE // 16) ** 2
    assert maps[0].shape[-2:] == (tokens, tokens)
    np.testing.assert_allclose(maps[0].sum(axis=-1), 1.0, rtol=1e-5)


def test_position_encoding_is_bounded_and_distinct():
    enc = sinusoidal_position_encoding(4, 4, 16)
    assert enc.shape == (16, 16)
    assert np.all(np.abs(enc) <= 1.0)
    assert len({row.tobytes() for row in enc}) == 16


def test_mtunet_config_rejects_bad_shapes():
    with pytest.raises(ValueError):
        MTUNetConfig(cnn_stage_channels=[8, 16, 32])
    with pytest.raises(ValueError):
        MTUNetConfig(patch_embed_dim=66, n_heads=4)
    with pytest.raises(ValueError):
        MTUNetConfig(aspp_dilations=[2, 4, 6, 8])


def test_batchnorm_eval_needs_running_statistics():
    bn = BatchNorm2d(3)
    x = Tensor(np.random.default_rng(0).normal(size=(4, 3, 2, 2)).astype(np.float32))
    with pytest.raises(NormStateError):
        bn.eval()(x)
    bn.train()(x)
    assert bn.tracked[0] == 1
    out = bn.eval()(x)
    assert out.shape == x.shape


def test_freeze_blocks_gradients(images):
    net = GuidanceUNet(GuidanceUNetConfig(depth=1, base_channels=2), make_rng(0, "guidance"))
    net.train()(images)
    net.freeze()
    assert not net.training
    assert all(not p.requires_grad for p in net.parameters())
    x = Tensor(images, requires_grad=True)
    backward(net(x).sum())
    assert x.grad is not None
    assert all(p.grad is None for p in net.parameters())


def _record_features(gen, monkeypatch):
    seen = {}
    for name in GROUP_NAMES:
        encoder = gen.encoder(name)

        def recording(x, _forward=encoder.forward, _name=name):
            out = _forward(x)
            seen[_name] = out.data.copy()
            return out

        monkeypatch.setattr(encoder, "forward", recording)
    return seen


def test_rib_masks_only_reach_the_rib_encoder(masks, monkeypatch):
    gen = Generator(GeneratorConfig(), make_rng(0, "generator"))
    seen = _record_features(gen, monkeypatch)
    perturbed = masks.copy()
    perturbed[:, :12, 8:16, 8:16] = 1.0 - perturbed[:, :12, 8:16, 8:16]

    with no_grad():
        gen(masks)
        before = dict(seen)
        gen(perturbed)
    assert not np.array_equal(before["ribs"], seen["ribs"])
    assert before["lungs"].tobytes() == seen["lungs"].tobytes()
    assert before["clavicles"].tobytes() == seen["clavicles"].tobytes()


def test_encoders_hold_disjoint_parameters():
    gen = Generator(GeneratorConfig(), make_rng(0, "generator"))
    params = {name: gen.encoder(name).parameters() for name in GROUP_NAMES}
    for i, a in enumerate(GROUP_NAMES):
        for b in GROUP_NAMES[i + 1:]:
            assert not {id(p) for p in params[a]} & {id(p) for p in params[b]}
            assert not any(np.shares_memory(p.data, q.data) for p in params[a] for q in params[b])


def test_every_generator_parameter_receives_gradient(masks):
    gen = Generator(GeneratorConfig(), make_rng(0, "generator"))
    weights = np.random.default_rng(2).normal(size=(2, 1, SIZE, SIZE)).astype(np.float32)
    backward((gen(masks) * Tensor(weights)).sum())
    missing = [name for name, p in gen.named_parameters() if p.grad is None or not np.any(p.grad != 0)]
    assert missing == []


@pytest.mark.parametrize("height,width", [
    tuple(int(v) for v in np.random.default_rng(seed).choice([16, 32, 48, 64], size=2)) for seed in range(4)
])
def test_generator_preserves_mask_extent(height, width):
    gen = Generator(GeneratorConfig(), make_rng(0, "generator"))
    masks = (np.random.default_rng(height * width).random((2, 16, height, width)) < 0.2).astype(np.float32)
    with no_grad():
        out = gen(masks)
    assert out.shape == (2, 1, height, width)


def test_discriminator_on_constant_image():
    disc = PatchDiscriminator(DiscriminatorConfig(), make_rng(0, "discriminator"))
    with no_grad():
        out = disc(np.full((1, 1, 64, 64), 0.3, dtype=np.float32)).data
    assert out.shape == (1, 1, 14, 14)
    centre = out[0, 0, 6:8, 6:8]
    assert np.abs(centre - centre[0, 0]).max() < 1e-5


def test_aspp_keeps_constant_fields_constant():
    aspp = ASPP(6, 4, [1, 2, 4, 6], make_rng(0, "aspp"))
    levels = np.linspace(-1.0, 1.0, 12, dtype=np.float32).reshape(2, 6, 1, 1)
    with no_grad():
        out = aspp(Tensor(np.broadcast_to(levels, (2, 6, 5, 5)).copy())).data
    assert out.shape == (2, 4, 5, 5)
    assert np.abs(out - out[:, :, :1, :1]).max() < 1e-5
    assert aspp.last_concat_channels == 5 * aspp.branch_channels


def test_aspp_flag_changes_mtunet_output(images):
    with no_grad():
        with_aspp = MTUNet(MTUNetConfig(use_aspp=True), make_rng(0, "mtunet"))(images).data
        without = MTUNet(MTUNetConfig(use_aspp=False), make_rng(0, "mtunet"))(images).data
    assert with_aspp.shape == without.shape
    assert not np.allclose(with_aspp, without)


@pytest.mark.parametrize("stage,build,attr", [
    ("sdgan", PatchDiscriminator, "discriminator"),
    ("guidance", GuidanceUNet, "guidance"),
])
def test_desk_weights_do_not_load_into_full_config(stage, build, attr):
    desk = getattr(resolve_stage_config(stage, "desk"), attr)
    full = getattr(resolve_stage_config(stage, "full"), attr)
    weights = module_weights(build(desk, make_rng(0, attr)))
    with pytest.raises(WeightsMismatchError, match="first mismatched tensor"):
        load_module_weights(build(full, make_rng(0, attr)), weights)


def test_guidance_channels_are_not_normalised(images):
    net = GuidanceUNet(GuidanceUNetConfig(), make_rng(0, "guidance"))
    with no_grad():
        out = net(images).data
    assert np.all((out > 0) & (out < 1))
    assert (out.sum(axis=1) > 1.0).any()


def test_empty_masks_and_images_give_finite_outputs():
    zero_masks = np.zeros((2, 16, SIZE, SIZE), dtype=np.float32)
    zero_images = np.zeros((2, 1, SIZE, SIZE), dtype=np.float32)
    gen = Generator(GeneratorConfig(), make_rng(0, "generator"))
    with no_grad():
        outputs = [
            gen.encode("ribs", zero_masks[:, :12]),
            gen(zero_masks),
            GuidanceUNet(GuidanceUNetConfig(), make_rng(0, "guidance"))(zero_images),
            MTUNet(MTUNetConfig(), make_rng(0, "mtunet"))(zero_images),
            PatchDiscriminator(DiscriminatorConfig(), make_rng(0, "discriminator"))(zero_images),
        ]
    assert all(np.all(np.isfinite(out.data)) for out in outputs)
