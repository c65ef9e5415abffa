import base64
import threading
import time

import pytest
from fastapi.testclient import TestClient

from vqa_sidecar import FakeCaptionModel, FakeVqaModel, SidecarConfig, create_app
from sidecar_helpers import b64_png, make_client


def wait_for_ok(client, path="/healthz", timeout=5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if client.get(path).status_code == 200:
            return
        time.sleep(0.01)
    pytest.fail(f"{path} never became ready")


def test_healthz_503_until_both_models_load():
    gate = threading.Event()

    def slow_caption_loader(config):
        gate.wait(5)
        return FakeCaptionModel()

    app = create_app(
        config=SidecarConfig(),
        vqa_loader=lambda c: FakeVqaModel(),
        caption_loader=slow_caption_loader,
    )
    with TestClient(app) as client:
        assert client.get("/healthz").status_code == 503
        body = {"image_png_base64": b64_png(), "query": "a cube"}
        assert client.post("/v1/score", json=body).status_code == 503
        assert client.post("/v1/caption", json=body).status_code == 503
        gate.set()
        wait_for_ok(client)
        payload = client.get("/healthz").json()
        assert payload["status"] == "ok"
        assert payload["vqa_model"] and payload["caption_model"]


def test_load_failure_keeps_returning_503_with_cause():
    def broken_loader(config):
        raise RuntimeError("checkpoint not found")

    app = create_app(
        config=SidecarConfig(),
        vqa_loader=broken_loader,
        caption_loader=lambda c: FakeCaptionModel(),
    )
    with TestClient(app) as client:
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline and app.state.host.load_error is None:
            time.sleep(0.01)
        response = client.get("/healthz")
        assert response.status_code == 503
        assert "checkpoint not found" in response.json()["detail"]


def test_score_normalizes_over_the_yes_no_pair():
    client = make_client(vqa=FakeVqaModel(yes_mass=3.0, no_mass=1.0))
    response = client.post("/v1/score", json={"image_png_base64": b64_png(), "query": "a cube"})
    assert response.status_code == 200
    assert response.json() == {"score": 0.75}


@pytest.mark.parametrize("yes,no,expected", [(5.0, 0.0, 1.0), (0.0, 3.0, 0.0), (0.0, 0.0, 0.0)])
def test_score_clamped_and_degenerate_mass(yes, no, expected):
    client = make_client(vqa=FakeVqaModel(yes_mass=yes, no_mass=no))
    response = client.post("/v1/score", json={"image_png_base64": b64_png(), "query": "a cube"})
    assert response.json()["score"] == expected


def test_model_is_asked_the_yes_no_question():
    vqa = FakeVqaModel()
    client = make_client(vqa=vqa)
    client.post("/v1/score", json={"image_png_base64": b64_png(), "query": "a star-shaped plate"})
    _, question = vqa.calls[-1]
    assert question == "Does this figure show a star-shaped plate? Please answer yes or no."


def test_score_is_in_unit_interval_for_arbitrary_images():
    client = make_client()
    for color in [(0, 0, 0), (255, 255, 255), (12, 200, 99)]:
        response = client.post(
            "/v1/score", json={"image_png_base64": b64_png(color=color), "query": "a cube"})
        assert 0.0 <= response.json()["score"] <= 1.0


def test_caption_returns_non_empty_string():
    client = make_client()
    response = client.post("/v1/caption", json={"image_png_base64": b64_png()})
    assert response.status_code == 200
    caption = response.json()["caption"]
    assert isinstance(caption, str) and caption


@pytest.mark.parametrize("path,body", [
    ("/v1/score", {"image_png_base64": "not-base64!!", "query": "a cube"}),
    ("/v1/caption", {"image_png_base64": "not-base64!!"}),
])
def test_corrupt_base64_is_400(path, body):
    response = make_client().post(path, json=body)
    assert response.status_code == 400
    assert "base64" in response.json()["detail"]


def test_valid_base64_of_garbage_is_400():
    garbage = base64.b64encode(b"definitely not a png").decode()
    response = make_client().post(
        "/v1/score", json={"image_png_base64": garbage, "query": "a cube"})
    assert response.status_code == 400
    assert "decodable" in response.json()["detail"]


def test_empty_image_payload_is_400():
    response = make_client().post("/v1/score", json={"image_png_base64": "", "query": "a cube"})
    assert response.status_code == 400


def test_zero_byte_body_is_400():
    client = make_client()
    for path in ("/v1/score", "/v1/caption"):
        response = client.post(path, content=b"", headers={"content-type": "application/json"})
        assert response.status_code == 400


def test_missing_field_is_400():
    response = make_client().post("/v1/score", json={"query": "a cube"})
    assert response.status_code == 400


def test_empty_query_is_400():
    response = make_client().post(
        "/v1/score", json={"image_png_base64": b64_png(), "query": ""})
    assert response.status_code == 400
    assert "query" in response.json()["detail"]


def test_oversized_image_is_downscaled_before_inference():
    vqa = FakeVqaModel()
    client = make_client(config=SidecarConfig(max_image_dim=256), vqa=vqa)
    client.post(
        "/v1/score",
        json={"image_png_base64": b64_png(size=(3000, 600)), "query": "a cube"})
    size, _ = vqa.calls[-1]
    assert max(size) == 256
    assert size == (256, 51)  # aspect preserved


def test_small_image_is_not_resized():
    vqa = FakeVqaModel()
    client = make_client(config=SidecarConfig(max_image_dim=256), vqa=vqa)
    client.post("/v1/score", json={"image_png_base64": b64_png(size=(100, 50)), "query": "a cube"})
    assert vqa.calls[-1][0] == (100, 50)


def test_identical_requests_get_identical_bodies():
    client = make_client()
    score_body = {"image_png_base64": b64_png(), "query": "a cube"}
    caption_body = {"image_png_base64": b64_png()}
    assert client.post("/v1/score", json=score_body).content == \
        client.post("/v1/score", json=score_body).content
    assert client.post("/v1/caption", json=caption_body).content == \
        client.post("/v1/caption", json=caption_body).content


def test_non_deterministic_mode_lets_captions_drift():
    client = make_client(config=SidecarConfig(deterministic=False))
    body = {"image_png_base64": b64_png()}
    first = client.post("/v1/caption", json=body).json()["caption"]
    second = client.post("/v1/caption", json=body).json()["caption"]
    assert first != second


class OverlapDetectingVqa:
    def __init__(self):
        self._lock = threading.Lock()
        self._inside = 0
        self.max_inside = 0

    def yes_no_mass(self, image, question):
        with self._lock:
            self._inside += 1
            self.max_inside = max(self.max_inside, self._inside)
        time.sleep(0.002)
        with self._lock:
            self._inside -= 1
        return 0.6, 0.4


def test_inference_is_serialized_across_concurrent_requests():
    vqa = OverlapDetectingVqa()
    client = make_client(vqa=vqa)
    body = {"image_png_base64": b64_png(), "query": "a cube"}

    def hammer():
        for _ in range(5):
            assert client.post("/v1/score", json=body).status_code == 200

    threads = [threading.Thread(target=hammer) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert vqa.max_inside == 1
