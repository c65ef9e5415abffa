"""VQA scoring sidecar: hosts the render-scoring and captioning models."""

from .config import SidecarConfig, SidecarConfigError
from .models import CaptionModel, FakeCaptionModel, FakeVqaModel, VqaModel
from .service import ModelHost, QUESTION_TEMPLATE, create_app, decode_image

__version__ = "0.1.0"

__all__ = [
    "CaptionModel",
    "FakeCaptionModel",
    "FakeVqaModel",
    "ModelHost",
    "QUESTION_TEMPLATE",
    "SidecarConfig",
    "SidecarConfigError",
    "VqaModel",
    "create_app",
    "decode_image",
    "__version__",
]
