"""图像基本操作与 SSIM 统计量测试。"""

from fractions import Fraction

import numpy as np
import pytest
import torch

from thermcal.core.errors import DimensionError, ShapeError
from thermcal.models import ImageTensor, SsimParams
from thermcal.services.imaging import (
    gaussian_window,
    pixel_shuffle,
    pixel_unshuffle,
    resize,
    ssim_map,
    target_size,
)
from thermcal.services.losses import ssim_loss


def naive_ssim(x: np.ndarray, y: np.ndarray, p: SsimParams) -> float:
    """逐窗口双重循环的 SSIM，作为向量化实现的对照。"""
    w = gaussian_window(p.window_size, p.sigma, dtype=torch.float64).numpy()
    k = p.window_size
    channels, height, width = x.shape
    values = []
    for c in range(channels):
        for i in range(height - k + 1):
            for j in range(width - k + 1):
                px = x[c, i : i + k, j : j + k]
                py = y[c, i : i + k, j : j + k]
                mx = (w * px).sum()
                my = (w * py).sum()
                vx = (w * px * px).sum() - mx * mx
                vy = (w * py * py).sum() - my * my
                cov = (w * px * py).sum() - mx * my
                values.append(
                    ((2 * mx * my + p.c1) * (2 * cov + p.c2))
                    / ((mx * mx + my * my + p.c1) * (vx + vy + p.c2))
                )
    return float(np.mean(values))


class TestImageTensor:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            ImageTensor(data=torch.full((3, 8, 8), 1.5))

    def test_rejects_nan(self):
        data = torch.zeros(3, 8, 8)
        data[0, 0, 0] = float("nan")
        with pytest.raises(ValueError):
            ImageTensor(data=data)

    def test_rejects_bad_channels_and_tiny_sides(self):
        with pytest.raises(ValueError):
            ImageTensor(data=torch.zeros(2, 8, 8))
        with pytest.raises(ValueError):
            ImageTensor(data=torch.zeros(3, 3, 8))

    def test_custom_range(self):
        img = ImageTensor(data=torch.full((1, 4, 4), -0.5), value_range=(-1.0, 1.0))
        assert img.size == (4, 4)
        assert img.channels == 1


class TestSsimParams:
    def test_even_window_rejected(self):
        with pytest.raises(ValueError):
            SsimParams(window_size=10)

    def test_constants(self):
        p = SsimParams(dynamic_range=2.0)
        assert p.c1 == pytest.approx((0.01 * 2.0) ** 2)
        assert p.c2 == pytest.approx((0.03 * 2.0) ** 2)

    def test_fitted_to_small_maps(self):
        p = SsimParams()
        assert p.fitted_to(32, 32) is p
        assert p.fitted_to(4, 6).window_size == 3
        assert p.fitted_to(1, 1).window_size == 1


class TestSsim:
    def test_matches_naive_loop(self):
        p = SsimParams()
        gen = torch.Generator().manual_seed(0)
        for _ in range(20):
            x = torch.rand(1, 16, 16, generator=gen, dtype=torch.float64)
            y = torch.rand(1, 16, 16, generator=gen, dtype=torch.float64)
            expected = naive_ssim(x.numpy(), y.numpy(), p)
            assert abs(float(ssim_map(x, y, p)) - expected) < 1e-6

    def test_identical_images_give_one(self):
        x = torch.rand(3, 16, 16, dtype=torch.float64)
        assert float(ssim_map(x, x)) == pytest.approx(1.0, abs=1e-12)
        assert float(ssim_loss(x, x)) == pytest.approx(0.0, abs=1e-12)

    def test_black_versus_white(self):
        p = SsimParams()
        x = torch.zeros(1, 16, 16, dtype=torch.float64)
        y = torch.ones(1, 16, 16, dtype=torch.float64)
        expected = p.c1 / (1 + p.c1)
        assert float(ssim_map(x, y, p)) == pytest.approx(expected, rel=1e-9)
        assert float(ssim_loss(x, y, p)) == pytest.approx(1 - expected, rel=1e-9)

    def test_symmetric_and_bounded(self):
        gen = torch.Generator().manual_seed(1)
        x = torch.rand(2, 3, 20, 24, generator=gen, dtype=torch.float64)
        y = torch.rand(2, 3, 20, 24, generator=gen, dtype=torch.float64)
        forward = float(ssim_map(x, y))
        assert forward == pytest.approx(float(ssim_map(y, x)), abs=1e-12)
        assert -1.0 <= forward <= 1.0

    def test_per_item_reduction(self):
        x = torch.rand(2, 3, 16, 16, dtype=torch.float64)
        y = x.clone()
        y[1] = torch.rand(3, 16, 16, dtype=torch.float64)
        per_item = ssim_map(x, y, reduction="none")
        assert per_item.shape == (2,)
        assert float(per_item[0]) == pytest.approx(1.0)
        assert float(per_item[1]) < 1.0

    def test_window_larger_than_image(self):
        x = torch.rand(3, 8, 8)
        with pytest.raises(ShapeError):
            ssim_map(x, x)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ssim_map(torch.rand(3, 16, 16), torch.rand(3, 16, 18))

    def test_gradcheck(self):
        p = SsimParams(window_size=5)
        gen = torch.Generator().manual_seed(2)
        for _ in range(5):
            x = torch.rand(1, 1, 8, 8, generator=gen, dtype=torch.float64)
            y = torch.rand(1, 1, 8, 8, generator=gen, dtype=torch.float64)
            x.requires_grad_(True)
            y.requires_grad_(True)
            assert torch.autograd.gradcheck(
                lambda a, b: ssim_loss(a, b, p), (x, y), eps=1e-4, atol=1e-5, rtol=1e-3
            )

    def test_accepts_image_tensor(self):
        img = ImageTensor(data=torch.rand(3, 16, 16))
        assert float(ssim_map(img, img)) == pytest.approx(1.0, abs=1e-5)


class TestResize:
    def test_target_size(self):
        assert target_size((128, 160), 2) == (256, 320)
        assert target_size((128, 160), Fraction(1, 2)) == (64, 80)
        assert target_size((16, 16), 0.25) == (4, 4)

    def test_non_integer_target(self):
        with pytest.raises(DimensionError):
            target_size((15, 16), 0.5)
        with pytest.raises(DimensionError):
            target_size((16, 16), -1)

    def test_scale_one_is_identity(self):
        x = torch.rand(3, 8, 12)
        assert torch.equal(resize(x, 1), x)

    def test_downscale_of_constant_is_constant(self):
        x = torch.full((3, 16, 16), 0.3)
        out = resize(x, 0.5)
        assert out.shape == (3, 8, 8)
        assert torch.allclose(out, x[:, :8, :8])

    def test_area_downscale_averages_blocks(self):
        x = torch.tensor([[[0.0, 1.0], [1.0, 0.0]]]).repeat(1, 2, 2)
        out = resize(x, 0.5)
        assert torch.allclose(out, torch.full((1, 2, 2), 0.5))

    def test_upscale_preserves_range_for_image_tensor(self):
        img = ImageTensor(data=torch.rand(3, 8, 8))
        out = resize(img, 2)
        assert isinstance(out, ImageTensor)
        assert out.size == (16, 16)


class TestPixelShuffle:
    def test_index_law(self):
        r = 2
        x = torch.arange(8 * 3 * 5, dtype=torch.float32).view(8, 3, 5)
        out = pixel_shuffle(x, r)
        assert out.shape == (2, 6, 10)
        for c in range(2):
            for h in range(3):
                for w in range(5):
                    for i in range(r):
                        for j in range(r):
                            assert out[c, r * h + i, r * w + j] == x[c * r * r + i * r + j, h, w]

    @pytest.mark.parametrize("r", [1, 2, 4])
    def test_round_trip(self, r: int):
        gen = torch.Generator().manual_seed(r)
        for _ in range(34):
            c = int(torch.randint(1, 4, (1,), generator=gen)) * r * r
            h = int(torch.randint(1, 6, (1,), generator=gen))
            w = int(torch.randint(1, 6, (1,), generator=gen))
            x = torch.rand(c, h, w, generator=gen)
            assert torch.equal(pixel_unshuffle(pixel_shuffle(x, r), r), x)

    def test_channel_count_must_divide(self):
        with pytest.raises(ShapeError):
            pixel_shuffle(torch.rand(3, 4, 4), 2)
        with pytest.raises(ShapeError):
            pixel_unshuffle(torch.rand(4, 5, 4), 2)
