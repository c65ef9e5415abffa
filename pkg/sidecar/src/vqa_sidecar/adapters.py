"""Transformers-backed model adapters.

Imported lazily so the service (and its test suite) never needs torch or
model weights unless a real checkpoint is configured. ``vqa_model`` /
``caption_model`` set to ``"fake"`` select the hermetic fakes instead.
"""

from __future__ import annotations

from PIL import Image

from .config import SidecarConfig
from .models import CaptionModel, FakeCaptionModel, FakeVqaModel, VqaModel

FAKE_MODEL_ID = "fake"


def _require_torch():
    try:
        import torch
        import transformers
    except ImportError as exc:  # pragma: no cover - environment dependent
        raise RuntimeError(
            "real checkpoints need the 'models' extra (pip install 'vqa-sidecar[models]')"
        ) from exc
    return torch, transformers


class TransformersVqaModel:
    """Yes/no mass from the first generated token of a vision seq2seq model."""

    def __init__(self, model_id: str, device: str):
        torch, transformers = _require_torch()
        self._torch = torch
        self._processor = transformers.AutoProcessor.from_pretrained(model_id)
        self._model = transformers.AutoModelForVision2Seq.from_pretrained(model_id).to(device)
        self._model.eval()
        self._device = device
        tokenizer = self._processor.tokenizer
        self._yes_id = tokenizer.encode("yes", add_special_tokens=False)[0]
        self._no_id = tokenizer.encode("no", add_special_tokens=False)[0]

    def reseed(self, seed: int) -> None:
        self._torch.manual_seed(seed)

    def yes_no_mass(self, image: Image.Image, question: str) -> tuple[float, float]:
        torch = self._torch
        inputs = self._processor(images=image, text=question, return_tensors="pt").to(self._device)
        with torch.no_grad():
            out = self._model.generate(
                **inputs, max_new_tokens=1, do_sample=False,
                output_scores=True, return_dict_in_generate=True,
            )
        probs = torch.softmax(out.scores[0][0], dim=-1)
        return float(probs[self._yes_id]), float(probs[self._no_id])


class TransformersCaptionModel:
    """Greedy image captioning via a BLIP2-class checkpoint."""

    def __init__(self, model_id: str, device: str, max_new_tokens: int = 40):
        torch, transformers = _require_torch()
        self._torch = torch
        self._processor = transformers.AutoProcessor.from_pretrained(model_id)
        self._model = transformers.AutoModelForVision2Seq.from_pretrained(model_id).to(device)
        self._model.eval()
        self._device = device
        self._max_new_tokens = max_new_tokens

    def reseed(self, seed: int) -> None:
        self._torch.manual_seed(seed)

    def caption(self, image: Image.Image) -> str:
        torch = self._torch
        inputs = self._processor(images=image, return_tensors="pt").to(self._device)
        with torch.no_grad():
            ids = self._model.generate(
                **inputs, max_new_tokens=self._max_new_tokens, do_sample=False
            )
        return self._processor.batch_decode(ids, skip_special_tokens=True)[0].strip()


def load_vqa_model(config: SidecarConfig) -> VqaModel:
    if config.vqa_model == FAKE_MODEL_ID:
        return FakeVqaModel()
    return TransformersVqaModel(config.vqa_model, config.device)


def load_caption_model(config: SidecarConfig) -> CaptionModel:
    if config.caption_model == FAKE_MODEL_ID:
        return FakeCaptionModel()
    return TransformersCaptionModel(config.caption_model, config.device)
