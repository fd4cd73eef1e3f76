"""
判别器训练用的生成图像回放缓冲区。

未满时存入并返回新图像；已满后以 0.5 的概率返回新图像，
否则返回随机抽取的旧图像并用新图像替换它。
"""

import torch

from ..models import ImageTensor


class ReplayBuffer:
    """
    单个判别器的历史生成图像池。

    随机性全部来自调用方传入的 torch.Generator，便于检查点恢复后复现。
    """

    def __init__(self, capacity: int = 50):
        if capacity < 0:
            raise ValueError(f"回放缓冲区容量不能为负，实际 {capacity}")
        self.capacity = capacity
        self.images: list[torch.Tensor] = []

    def __len__(self) -> int:
        return len(self.images)

    def draw(self, fresh: torch.Tensor, rng: torch.Generator) -> torch.Tensor:
        """
        抽取一张 (C, H, W) 图像送入判别器。

        Args:
            fresh: 刚生成的图像（会被分离出计算图）
            rng: 随机数生成器

        Returns:
            torch.Tensor: fresh 本身或一张旧图像
        """
        fresh = fresh.detach()
        if self.capacity == 0:
            return fresh
        if len(self.images) < self.capacity:
            self.images.append(fresh.clone())
            return fresh
        if torch.rand((), generator=rng).item() < 0.5:
            return fresh
        index = int(torch.randint(len(self.images), (), generator=rng).item())
        stored = self.images[index]
        self.images[index] = fresh.clone()
        return stored

    def draw_batch(self, fresh: torch.Tensor, rng: torch.Generator) -> torch.Tensor:
        """对 (B, C, H, W) 批量逐张调用 draw。"""
        return torch.stack([self.draw(image, rng) for image in fresh])

    def state_dict(self) -> dict:
        return {"capacity": self.capacity, "images": [img.cpu() for img in self.images]}

    def load_state_dict(self, state: dict) -> None:
        self.capacity = int(state["capacity"])
        self.images = [img.clone() for img in state["images"]]


def buffer_draw(
    buf: ReplayBuffer, fresh: ImageTensor, rng: torch.Generator
) -> ImageTensor:
    """ReplayBuffer.draw 的 ImageTensor 版本。"""
    return ImageTensor(data=buf.draw(fresh.data, rng), value_range=fresh.value_range)
