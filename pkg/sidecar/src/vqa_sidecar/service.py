"""HTTP service: /v1/score, /v1/caption, /healthz.

Scoring asks the VQA model "Does this figure show {query}? Please answer yes
or no." and reports the yes-mass normalized over the {yes, no} pair, clamped
to [0, 1]. Both models load in the background after startup; every endpoint
answers 503 until both are ready. Inference is serialized per model.
"""

from __future__ import annotations

import base64
import binascii
import io
import logging
import threading
from contextlib import asynccontextmanager
from typing import Callable

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel

from .config import SidecarConfig
from .models import CaptionModel, VqaModel

log = logging.getLogger(__name__)

QUESTION_TEMPLATE = "Does this figure show {query}? Please answer yes or no."

VqaLoader = Callable[[SidecarConfig], VqaModel]
CaptionLoader = Callable[[SidecarConfig], CaptionModel]


class ScoreBody(BaseModel):
    image_png_base64: str
    query: str


class CaptionBody(BaseModel):
    image_png_base64: str


class ModelHost:
    """Owns the two models, their load state, and one inference lock each."""

    def __init__(self, config: SidecarConfig, vqa_loader: VqaLoader, caption_loader: CaptionLoader):
        self.config = config
        self._vqa_loader = vqa_loader
        self._caption_loader = caption_loader
        self.vqa: VqaModel | None = None
        self.captioner: CaptionModel | None = None
        self.load_error: str | None = None
        self._ready = threading.Event()
        self._vqa_lock = threading.Lock()
        self._caption_lock = threading.Lock()

    @property
    def loaded(self) -> bool:
        return self._ready.is_set()

    def load(self) -> None:
        try:
            self.vqa = self._vqa_loader(self.config)
            self.captioner = self._caption_loader(self.config)
        except Exception as exc:
            self.load_error = str(exc)
            log.error("model load failed: %s", exc)
            return
        self._ready.set()
        log.info("models loaded: vqa=%s caption=%s", self.config.vqa_model, self.config.caption_model)

    def load_in_background(self) -> None:
        if self.loaded:
            return
        threading.Thread(target=self.load, name="model-load", daemon=True).start()

    def _prepare(self, model) -> None:
        if self.config.deterministic and hasattr(model, "reseed"):
            model.reseed(self.config.seed)

    def score(self, image: Image.Image, query: str) -> float:
        question = QUESTION_TEMPLATE.format(query=query)
        assert self.vqa is not None
        with self._vqa_lock:
            self._prepare(self.vqa)
            yes, no = self.vqa.yes_no_mass(image, question)
        total = yes + no
        if total <= 0:
            return 0.0
        return min(max(yes / total, 0.0), 1.0)

    def caption(self, image: Image.Image) -> str:
        assert self.captioner is not None
        with self._caption_lock:
            self._prepare(self.captioner)
            text = self.captioner.caption(image)
        if not text:
            raise HTTPException(500, detail="caption model returned an empty string")
        return text


def decode_image(image_png_base64: str, max_dim: int) -> Image.Image:
    try:
        raw = base64.b64decode(image_png_base64, validate=True)
    except (binascii.Error, ValueError):
        raise HTTPException(400, detail="image_png_base64 is not valid base64") from None
    if not raw:
        raise HTTPException(400, detail="image payload is empty")
    try:
        image = Image.open(io.BytesIO(raw))
        image.load()
    except (UnidentifiedImageError, OSError):
        raise HTTPException(400, detail="image payload is not a decodable image") from None
    image = image.convert("RGB")
    if max(image.size) > max_dim:
        image.thumbnail((max_dim, max_dim))
    return image


def create_app(
    config: SidecarConfig | None = None,
    vqa_loader: VqaLoader | None = None,
    caption_loader: CaptionLoader | None = None,
    host: ModelHost | None = None,
) -> FastAPI:
    if host is None:
        from . import adapters

        config = config or SidecarConfig.from_env()
        host = ModelHost(
            config,
            vqa_loader or adapters.load_vqa_model,
            caption_loader or adapters.load_caption_model,
        )
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        host.load_in_background()
        yield

    app = FastAPI(title="vqa-sidecar", version="0.1.0", lifespan=lifespan)
    app.state.host = host

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc.errors()[:1])})

    def require_ready() -> None:
        if not host.loaded:
            detail = (
                f"model load failed: {host.load_error}"
                if host.load_error else "models are still loading"
            )
            raise HTTPException(503, detail=detail)

    @app.get("/healthz")
    def healthz() -> dict:
        require_ready()
        return {
            "status": "ok",
            "vqa_model": host.config.vqa_model,
            "caption_model": host.config.caption_model,
        }

    @app.post("/v1/score")
    def score(body: ScoreBody) -> dict:
        require_ready()
        if not body.query:
            raise HTTPException(400, detail="query must be non-empty")
        image = decode_image(body.image_png_base64, host.config.max_image_dim)
        return {"score": host.score(image, body.query)}

    @app.post("/v1/caption")
    def caption(body: CaptionBody) -> dict:
        require_ready()
        image = decode_image(body.image_png_base64, host.config.max_image_dim)
        return {"caption": host.caption(image)}

    return app
