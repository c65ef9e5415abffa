"""Service configuration, read from the environment."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Mapping

DEFAULT_VQA_MODEL = "zhiqiulin/clip-flant5-xl"
DEFAULT_CAPTION_MODEL = "Salesforce/blip2-opt-2.7b"

_TRUTHY = {"1", "true", "yes", "on"}
_FALSY = {"0", "false", "no", "off"}


class SidecarConfigError(ValueError):
    pass


def _parse_bool(name: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in _TRUTHY:
        return True
    if lowered in _FALSY:
        return False
    raise SidecarConfigError(f"{name} must be a boolean flag, got {raw!r}")


def _parse_int(name: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise SidecarConfigError(f"{name} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class SidecarConfig:
    bind: str = "127.0.0.1:8200"
    vqa_model: str = DEFAULT_VQA_MODEL
    caption_model: str = DEFAULT_CAPTION_MODEL
    device: str = "cpu"
    max_image_dim: int = 1024
    # Greedy decoding with a fixed seed so repeated requests return
    # byte-identical responses; turn off to let the caption model sample.
    deterministic: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_image_dim < 1:
            raise SidecarConfigError(f"max_image_dim must be >= 1, got {self.max_image_dim}")
        if not self.vqa_model:
            raise SidecarConfigError("vqa_model must be non-empty")
        if not self.caption_model:
            raise SidecarConfigError("caption_model must be non-empty")
        self.host_port()

    @classmethod
    def from_env(cls, env: Mapping[str, str] | None = None) -> "SidecarConfig":
        env = os.environ if env is None else env
        kwargs: dict = {}
        if "VQA_BIND" in env:
            kwargs["bind"] = env["VQA_BIND"]
        if "VQA_MODEL" in env:
            kwargs["vqa_model"] = env["VQA_MODEL"]
        if "CAPTION_MODEL" in env:
            kwargs["caption_model"] = env["CAPTION_MODEL"]
        if "VQA_DEVICE" in env:
            kwargs["device"] = env["VQA_DEVICE"]
        if "VQA_MAX_IMAGE_DIM" in env:
            kwargs["max_image_dim"] = _parse_int("VQA_MAX_IMAGE_DIM", env["VQA_MAX_IMAGE_DIM"])
        if "VQA_DETERMINISTIC" in env:
            kwargs["deterministic"] = _parse_bool("VQA_DETERMINISTIC", env["VQA_DETERMINISTIC"])
        if "VQA_SEED" in env:
            kwargs["seed"] = _parse_int("VQA_SEED", env["VQA_SEED"])
        return cls(**kwargs)

    def host_port(self) -> tuple[str, int]:
        host, sep, port = self.bind.rpartition(":")
        if not sep or not host:
            raise SidecarConfigError(f"bind must look like host:port, got {self.bind!r}")
        return host, _parse_int("bind port", port)
