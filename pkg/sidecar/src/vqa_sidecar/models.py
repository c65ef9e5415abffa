"""Model interfaces and the hermetic fakes used for tests and desk demos.

A VQA backend answers a yes/no question about an image by reporting the
unnormalized probability mass it assigns to "yes" and to "no"; the service
normalizes over the pair. A caption backend describes the image in one string.
Backends that expose ``reseed(seed)`` are reseeded before every request when
the service runs in deterministic mode.
"""

from __future__ import annotations

import hashlib
import random
from typing import Protocol, runtime_checkable

from PIL import Image


@runtime_checkable
class VqaModel(Protocol):
    def yes_no_mass(self, image: Image.Image, question: str) -> tuple[float, float]: ...


@runtime_checkable
class CaptionModel(Protocol):
    def caption(self, image: Image.Image) -> str: ...


def _digest(image: Image.Image, extra: str = "") -> bytes:
    h = hashlib.sha256()
    h.update(image.tobytes())
    h.update(extra.encode("utf-8"))
    return h.digest()


class FakeVqaModel:
    """Deterministic stand-in: mass derived from a hash of (image, question).

    Pass explicit ``yes_mass``/``no_mass`` to script the output, e.g. to test
    pair normalization. Every call is recorded on ``calls``.
    """

    def __init__(self, yes_mass: float | None = None, no_mass: float | None = None):
        self._scripted = (yes_mass, no_mass) if yes_mass is not None else None
        if self._scripted and no_mass is None:
            raise ValueError("scripted mass needs both yes_mass and no_mass")
        self.calls: list[tuple[tuple[int, int], str]] = []

    def yes_no_mass(self, image: Image.Image, question: str) -> tuple[float, float]:
        self.calls.append((image.size, question))
        if self._scripted:
            return self._scripted
        word = int.from_bytes(_digest(image, question)[:4], "big")
        yes = (word % 1000) / 1000.0
        return yes, 1.0 - yes


class FakeCaptionModel:
    """Caption fake whose wording drifts unless the service reseeds it.

    The nonce comes from an internal RNG, so deterministic mode (which calls
    ``reseed`` before each request) yields identical captions for identical
    requests, while non-deterministic mode lets consecutive captions differ.
    """

    def __init__(self, text: str | None = None):
        self._text = text
        self._rng = random.Random()
        self.calls: list[tuple[int, int]] = []

    def reseed(self, seed: int) -> None:
        self._rng.seed(seed)

    def caption(self, image: Image.Image) -> str:
        self.calls.append(image.size)
        if self._text is not None:
            return self._text
        w, h = image.size
        nonce = self._rng.randrange(16**8)
        return f"a rendered {w}x{h} part (take {nonce:08x})"
