"""回放缓冲区测试。"""

import pytest
import torch

from thermcal.models import ImageTensor
from thermcal.services.replay import ReplayBuffer, buffer_draw


def _image(value: float) -> torch.Tensor:
    return torch.full((3, 4, 4), value)


def test_zero_capacity_passes_through():
    buf = ReplayBuffer(0)
    rng = torch.Generator().manual_seed(0)
    for i in range(5):
        assert torch.equal(buf.draw(_image(i / 10), rng), _image(i / 10))
    assert len(buf) == 0


def test_fills_before_sampling():
    buf = ReplayBuffer(3)
    rng = torch.Generator().manual_seed(0)
    for i in range(3):
        assert torch.equal(buf.draw(_image(i / 10), rng), _image(i / 10))
    assert len(buf) == 3


def test_capacity_one_returns_the_previous_image_when_swapping():
    buf = ReplayBuffer(1)
    rng = torch.Generator().manual_seed(0)
    buf.draw(_image(0.0), rng)
    stored = 0.0
    for i in range(1, 50):
        fresh = i / 100
        out = buf.draw(_image(fresh), rng)
        value = float(out[0, 0, 0])
        if value != pytest.approx(fresh):
            assert value == pytest.approx(stored)
            stored = fresh
        assert len(buf) == 1


def test_fresh_return_frequency_is_half():
    buf = ReplayBuffer(5)
    rng = torch.Generator().manual_seed(123)
    for i in range(5):
        buf.draw(_image(0.0), rng)
    draws = 10_000
    fresh_count = 0
    for i in range(draws):
        fresh = torch.full((1, 4, 4), float(i + 1))
        out = buf.draw(fresh, rng)
        fresh_count += int(out[0, 0, 0].item() == i + 1)
    assert abs(fresh_count / draws - 0.5) < 0.02


def test_output_is_detached():
    buf = ReplayBuffer(2)
    rng = torch.Generator().manual_seed(0)
    fresh = torch.rand(3, 4, 4, requires_grad=True)
    assert not buf.draw(fresh, rng).requires_grad


def test_same_seed_same_sequence():
    def run() -> list[float]:
        buf = ReplayBuffer(4)
        rng = torch.Generator().manual_seed(9)
        return [float(buf.draw(_image(i / 40), rng)[0, 0, 0]) for i in range(40)]

    assert run() == run()


def test_state_round_trip():
    buf = ReplayBuffer(2)
    rng = torch.Generator().manual_seed(0)
    buf.draw_batch(torch.rand(2, 3, 4, 4), rng)
    restored = ReplayBuffer(7)
    restored.load_state_dict(buf.state_dict())
    assert restored.capacity == 2
    assert all(torch.equal(a, b) for a, b in zip(buf.images, restored.images))


def test_image_tensor_variant():
    buf = ReplayBuffer(1)
    rng = torch.Generator().manual_seed(0)
    img = ImageTensor(data=torch.rand(3, 4, 4))
    out = buffer_draw(buf, img, rng)
    assert isinstance(out, ImageTensor)
    assert torch.equal(out.data, img.data)


def test_negative_capacity():
    with pytest.raises(ValueError):
        ReplayBuffer(-1)
