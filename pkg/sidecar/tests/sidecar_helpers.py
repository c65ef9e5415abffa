"""Shared fixtures for the sidecar tests (imported, not a conftest)."""

import base64
import io

from fastapi.testclient import TestClient
from PIL import Image

from vqa_sidecar import FakeCaptionModel, FakeVqaModel, ModelHost, SidecarConfig, create_app


def png_bytes(size=(32, 24), color=(200, 30, 30)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, format="PNG")
    return buf.getvalue()


def b64_png(size=(32, 24), color=(200, 30, 30)) -> str:
    return base64.b64encode(png_bytes(size, color)).decode("ascii")


def loaded_host(config=None, vqa=None, captioner=None) -> ModelHost:
    """A host whose fakes are already loaded; no background thread involved."""
    vqa = vqa or FakeVqaModel()
    captioner = captioner or FakeCaptionModel()
    host = ModelHost(config or SidecarConfig(), lambda c: vqa, lambda c: captioner)
    host.load()
    assert host.loaded
    return host


def make_client(config=None, vqa=None, captioner=None) -> TestClient:
    return TestClient(create_app(host=loaded_host(config, vqa, captioner)))
