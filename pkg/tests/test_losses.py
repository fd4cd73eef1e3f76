"""损失函数测试：闭式取值、循环对照、梯度检查与总目标组合。"""

import math

import pytest
import torch

from thermcal.core.errors import ContractViolation, NonFiniteLossError, ShapeError
from thermcal.models import LossWeights
from thermcal.networks import FeatureExtractor
from thermcal.services.losses import (
    adversarial_loss,
    check_finite,
    cycle_loss,
    discriminator_adversarial_loss,
    dssim_deep,
    generator_adversarial_loss,
    identity_loss,
    perceptual_components,
    perceptual_loss,
    ssim_loss,
    total_objectives,
)


@pytest.fixture(scope="module")
def fe():
    return FeatureExtractor("resnet18", "layer2", pretrained=False).double()


class TestAdversarial:
    def test_half_scores(self):
        half = torch.full((2, 1, 4, 4), 0.5)
        d_loss, g_loss = adversarial_loss(half, half)
        assert float(d_loss) == pytest.approx(2 * math.log(2), rel=1e-5)
        assert float(g_loss) == pytest.approx(math.log(2), rel=1e-5)

    def test_confident_discriminator(self):
        d_loss = discriminator_adversarial_loss(torch.ones(1, 1, 2, 2), torch.zeros(1, 1, 2, 2))
        assert float(d_loss) == pytest.approx(0.0, abs=1e-5)
        assert float(generator_adversarial_loss(torch.ones(1, 1, 2, 2))) == pytest.approx(
            0.0, abs=1e-5
        )

    def test_matches_loop(self):
        gen = torch.Generator().manual_seed(0)
        real = torch.rand(2, 1, 3, 3, generator=gen, dtype=torch.float64) * 0.9 + 0.05
        fake = torch.rand(2, 1, 3, 3, generator=gen, dtype=torch.float64) * 0.9 + 0.05
        expected_d = -sum(math.log(v) for v in real.flatten().tolist()) / real.numel()
        expected_d -= sum(math.log(1 - v) for v in fake.flatten().tolist()) / fake.numel()
        expected_g = -sum(math.log(v) for v in fake.flatten().tolist()) / fake.numel()
        d_loss, g_loss = adversarial_loss(real, fake)
        assert float(d_loss) == pytest.approx(expected_d, rel=1e-9)
        assert float(g_loss) == pytest.approx(expected_g, rel=1e-9)

    def test_scores_outside_unit_interval(self):
        ok = torch.full((1, 1, 2, 2), 0.5)
        with pytest.raises(ContractViolation):
            adversarial_loss(torch.full((1, 1, 2, 2), 1.5), ok)
        with pytest.raises(ContractViolation):
            generator_adversarial_loss(torch.full((1, 1, 2, 2), -0.1))

    def test_generator_side_gradcheck(self):
        gen = torch.Generator().manual_seed(1)
        for _ in range(5):
            fake = torch.rand(1, 1, 3, 3, generator=gen, dtype=torch.float64) * 0.8 + 0.1
            fake.requires_grad_(True)
            assert torch.autograd.gradcheck(
                generator_adversarial_loss, (fake,), eps=1e-4, atol=1e-5, rtol=1e-3
            )


class TestCycleAndIdentity:
    def test_examples(self):
        a = torch.zeros(1, 3, 4, 4)
        b = torch.zeros(1, 3, 8, 8)
        assert float(cycle_loss(a, a, b, b)) == 0.0
        assert float(cycle_loss(a, a + 0.25, b, b + 0.5)) == pytest.approx(0.75)

    def test_identity_examples(self):
        x = torch.full((1, 3, 8, 8), 0.2)
        y = torch.full((1, 3, 4, 4), 0.6)
        assert float(identity_loss(x, x, y, y)) == 0.0
        assert float(identity_loss(x + 0.1, x, y, y - 0.3)) == pytest.approx(0.4)

    def test_shape_mismatch(self):
        small, large, unused = torch.zeros(1, 3, 4, 4), torch.zeros(1, 3, 8, 8), torch.zeros(1)
        with pytest.raises(ShapeError):
            cycle_loss(small, large, unused, unused)
        with pytest.raises(ShapeError):
            identity_loss(large, small, unused, unused)

    def test_permutation_invariant(self):
        gen = torch.Generator().manual_seed(2)
        a, ra = torch.rand(4, 3, 4, 4, generator=gen), torch.rand(4, 3, 4, 4, generator=gen)
        b, rb = torch.rand(4, 3, 8, 8, generator=gen), torch.rand(4, 3, 8, 8, generator=gen)
        perm = torch.tensor([2, 0, 3, 1])
        assert float(cycle_loss(a, ra, b, rb)) == pytest.approx(
            float(cycle_loss(a[perm], ra[perm], b[perm], rb[perm])), rel=1e-6
        )

    def test_gradcheck(self):
        gen = torch.Generator().manual_seed(3)
        for _ in range(5):
            a = torch.rand(1, 3, 4, 4, generator=gen, dtype=torch.float64)
            b = torch.rand(1, 3, 8, 8, generator=gen, dtype=torch.float64)
            # 重建与原图至少相差 0.1，有限差分不会跨过 L1 的不可导点
            ra = a + 0.1 + 0.5 * torch.rand(a.shape, generator=gen, dtype=torch.float64)
            rb = b - 0.1 - 0.5 * torch.rand(b.shape, generator=gen, dtype=torch.float64)
            inputs = tuple(t.requires_grad_(True) for t in (a, ra, b, rb))
            assert torch.autograd.gradcheck(
                cycle_loss, inputs, eps=1e-4, atol=1e-5, rtol=1e-3
            )


class TestSsimLoss:
    def test_range(self):
        gen = torch.Generator().manual_seed(4)
        x = torch.rand(2, 3, 16, 16, generator=gen)
        y = torch.rand(2, 3, 16, 16, generator=gen)
        value = float(ssim_loss(x, y))
        assert 0.0 <= value <= 2.0
        assert float(ssim_loss(x, x)) == pytest.approx(0.0, abs=1e-6)


class TestPerceptual:
    def test_dssim_deep_zero_on_equal_inputs(self, fe):
        x = torch.rand(2, 3, 32, 32, dtype=torch.float64)
        assert float(dssim_deep(x, x, fe)) == pytest.approx(0.0, abs=1e-9)
        y = torch.rand(2, 3, 32, 32, dtype=torch.float64)
        assert 0.0 <= float(dssim_deep(x, y, fe)) <= 2.0

    def test_zero_when_translations_reproduce_targets(self, fe):
        real_a = torch.rand(2, 3, 16, 16, dtype=torch.float64)
        real_b = torch.rand(2, 3, 32, 32, dtype=torch.float64)
        value = perceptual_loss(real_a, real_b, real_a.clone(), real_b.clone(), fe)
        assert float(value) == pytest.approx(0.0, abs=1e-9)

    def test_lambda_zero_is_pure_feature_l1(self, fe):
        gen = torch.Generator().manual_seed(5)
        real_a = torch.rand(1, 3, 16, 16, generator=gen, dtype=torch.float64)
        real_b = torch.rand(1, 3, 32, 32, generator=gen, dtype=torch.float64)
        fake_a = torch.rand(1, 3, 16, 16, generator=gen, dtype=torch.float64)
        fake_b = torch.rand(1, 3, 32, 32, generator=gen, dtype=torch.float64)
        expected = (fe(fake_a) - fe(real_a)).abs().mean() + (fe(fake_b) - fe(real_b)).abs().mean()
        value = perceptual_loss(real_a, real_b, fake_a, fake_b, fe, lambda_dssim=0.0)
        assert float(value) == pytest.approx(float(expected), rel=1e-9)

    def test_composition(self, fe):
        gen = torch.Generator().manual_seed(6)
        real_a = torch.rand(1, 3, 16, 16, generator=gen, dtype=torch.float64)
        real_b = torch.rand(1, 3, 32, 32, generator=gen, dtype=torch.float64)
        fake_a = torch.rand(1, 3, 16, 16, generator=gen, dtype=torch.float64)
        fake_b = torch.rand(1, 3, 32, 32, generator=gen, dtype=torch.float64)
        l1, dssim = perceptual_components(real_a, real_b, fake_a, fake_b, fe)
        value = perceptual_loss(real_a, real_b, fake_a, fake_b, fe, lambda_dssim=0.5)
        assert float(value) == pytest.approx(float(l1 + 0.5 * dssim), rel=1e-9)

    def test_batch_mismatch(self, fe):
        with pytest.raises(ShapeError):
            perceptual_components(
                torch.rand(2, 3, 16, 16),
                torch.rand(1, 3, 32, 32),
                torch.rand(2, 3, 16, 16),
                torch.rand(1, 3, 32, 32),
                fe,
            )


class TestTotalObjectives:
    TERMS = {
        "gan_ab": 0.7,
        "gan_ba": 0.3,
        "cyc": 0.2,
        "id": 0.1,
        "ssim": 0.4,
        "perc": 0.5,
        "dssim": 0.25,
        "d_a": 1.2,
        "d_b": 1.3,
    }

    def test_default_weights(self):
        report = total_objectives(self.TERMS, LossWeights())
        # 1·(0.7+0.3) + 10·0.2 + 5·0.1 + 1·0.4 + 1·0.5
        assert report.total_g == pytest.approx(4.4)
        assert report.total_d_a == pytest.approx(1.2)
        assert report.total_d_b == pytest.approx(1.3)

    def test_zero_terms(self):
        zeros = {name: 0.0 for name in self.TERMS}
        assert total_objectives(zeros, LossWeights()).total_g == 0.0

    def test_linear_in_weights(self):
        w1 = LossWeights(w_gan=1, w_cyc=2, w_id=0, w_ssim=1, w_perc=0)
        w2 = LossWeights(w_gan=0, w_cyc=1, w_id=3, w_ssim=0, w_perc=2)
        both = LossWeights(w_gan=1, w_cyc=3, w_id=3, w_ssim=1, w_perc=2)
        total = total_objectives(self.TERMS, both).total_g
        parts = total_objectives(self.TERMS, w1).total_g + total_objectives(self.TERMS, w2).total_g
        assert total == pytest.approx(parts)

    def test_non_finite_term(self):
        terms = dict(self.TERMS, cyc=float("nan"))
        with pytest.raises(NonFiniteLossError) as info:
            total_objectives(terms, LossWeights(), step=7)
        assert info.value.term == "cyc"
        assert info.value.step == 7
        assert info.value.exit_code == 3

    def test_check_finite_tensor(self):
        with pytest.raises(NonFiniteLossError):
            check_finite({"perc": torch.tensor(float("inf"))}, step=1)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            LossWeights(w_cyc=-1.0)
        with pytest.raises(ValueError):
            LossWeights(w_gan=0, w_cyc=0, w_id=0, w_ssim=0, w_perc=0, lambda_dssim=0)

    def test_record_key_order(self):
        record = total_objectives(self.TERMS, LossWeights()).to_record(3, 0, 0.0)
        assert list(record) == [
            "step",
            "epoch",
            "gan_ab",
            "gan_ba",
            "cyc",
            "id",
            "ssim",
            "perc",
            "total_g",
            "total_d_a",
            "total_d_b",
            "wall_time_s",
        ]
