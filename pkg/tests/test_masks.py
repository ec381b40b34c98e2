import numpy as np
import pytest

from argus_forge.masked_models import InvalidMaskSpec, MaskSpec, build_mask
from argus_forge.masked_models.masks import channel_groups, masked_conv2d


def test_type_a_1x1_single_group_is_zero():
    assert build_mask(MaskSpec("A", 1, 1)).sum() == 0


def test_type_b_1x1_single_group_is_one():
    np.testing.assert_array_equal(build_mask(MaskSpec("B", 1, 1)), np.ones((1, 1, 1, 1)))


def test_type_a_3x3_enumeration():
    m = build_mask(MaskSpec("A", 3, 3))[0, 0]
    np.testing.assert_array_equal(m, [[1, 1, 1], [1, 0, 0], [0, 0, 0]])


def test_type_b_3x3_enumeration():
    m = build_mask(MaskSpec("B", 3, 3))[0, 0]
    np.testing.assert_array_equal(m, [[1, 1, 1], [1, 1, 0], [0, 0, 0]])


@pytest.mark.parametrize("kh,kw", [(2, 3), (3, 4), (0, 1)])
def test_even_kernel_rejected(kh, kw):
    with pytest.raises(InvalidMaskSpec):
        MaskSpec("A", kh, kw)


def test_bad_type_rejected():
    with pytest.raises(InvalidMaskSpec):
        MaskSpec("C", 3, 3)


@pytest.mark.parametrize("mask_type", ["A", "B"])
def test_rgb_center_tap_groups(mask_type):
    m = build_mask(MaskSpec(mask_type, 5, 5, 3, 3, 6, 9))
    g_out, g_in = channel_groups(9, 3), channel_groups(6, 3)
    center = m[:, :, 2, 2]
    for o in range(9):
        for i in range(6):
            allowed = g_out[o] > g_in[i] if mask_type == "A" else g_out[o] >= g_in[i]
            assert center[o, i] == allowed
    # spatial structure is the same for every channel pair
    assert np.all(m[:, :, :2, :] == 1)
    assert np.all(m[:, :, 2, :2] == 1)
    assert np.all(m[:, :, 2, 3:] == 0)
    assert np.all(m[:, :, 3:, :] == 0)


def test_channel_groups_contiguous():
    np.testing.assert_array_equal(channel_groups(6, 3), [0, 0, 1, 1, 2, 2])
    np.testing.assert_array_equal(channel_groups(3, 3), [0, 1, 2])


def test_masked_conv2d_matches_direct_sum(rng):
    x = rng.normal(size=(4, 5, 2))
    w = rng.normal(size=(3, 2, 3, 3))
    y = masked_conv2d(x, w)
    xp = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    direct = np.zeros((4, 5, 3))
    for r in range(4):
        for c in range(5):
            patch = xp[r : r + 3, c : c + 3, :]
            direct[r, c] = np.einsum("oiab,abi->o", w, patch)
    np.testing.assert_allclose(y, direct, atol=1e-12)
