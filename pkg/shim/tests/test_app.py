import numpy as np
import pytest
from fastapi.testclient import TestClient

from qax_shim.app import create_app
from qax_shim.config import ShimConfig
from qax_shim.encoders import HashNgramEncoder, make_encoder
from qax_shim.translators import IdentityTranslator, MTBackendError, make_translator


def client(**kwargs) -> TestClient:
    return TestClient(create_app(**kwargs))


class TestConfig:
    def test_rejects_unknown_backend(self):
        with pytest.raises(ValueError):
            ShimConfig(translation_backend="carrier-pigeon")

    def test_rejects_batching(self):
        with pytest.raises(ValueError):
            ShimConfig(max_batch=8)


class TestEncoders:
    def test_hash_encoder_selected_by_prefix(self):
        enc = make_encoder("hash:64")
        assert isinstance(enc, HashNgramEncoder)
        assert enc.dim == 64
        assert enc.ready

    def test_hash_encoder_unit_norm_and_determinism(self):
        enc = HashNgramEncoder(256)
        a = enc.encode("ሰላም ዓለም hello")
        b = enc.encode("ሰላም ዓለም hello")
        assert a == b
        assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-9)

    def test_hash_encoder_empty_convention(self):
        enc = HashNgramEncoder(16)
        v = enc.encode("   ")
        assert v[0] == 1.0 and sum(v) == 1.0

    def test_transformers_encoder_selected_otherwise(self):
        enc = make_encoder("some-org/some-model")
        assert not enc.ready


class TestTranslators:
    def test_identity(self):
        t = make_translator("identity")
        assert t.translate("the cat", "en", "am") == "the cat"

    def test_external_mt_unavailable_raises(self):
        # without the deep-translator package (or network) this must fail
        # as MTBackendError, which the app maps to 502
        t = make_translator("external-mt")
        with pytest.raises(MTBackendError):
            t.translate("the cat", "en", "am")


class TestRoutes:
    def test_healthz(self):
        c = client(config=ShimConfig(encoder_model="hash:256"))
        resp = c.get("/healthz")
        assert resp.status_code == 200
        assert resp.text == "ok"

    def test_translate_identity_echo(self):
        c = client(config=ShimConfig(encoder_model="hash:256"))
        resp = c.post(
            "/translate", json={"text": "the cat", "source": "en", "target": "am"}
        )
        assert resp.status_code == 200
        assert resp.json() == {"translation": "the cat"}

    def test_embed_shape(self):
        c = client(config=ShimConfig(encoder_model="hash:256"))
        resp = c.post("/embed", json={"text": "hello"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["dim"] == 256
        assert len(body["vector"]) == 256

    def test_empty_text_is_400(self):
        c = client(config=ShimConfig(encoder_model="hash:256"))
        for route, payload in [
            ("/translate", {"text": "  "}),
            ("/embed", {"text": ""}),
        ]:
            resp = c.post(route, json=payload)
            assert resp.status_code == 400
            assert "error" in resp.json()

    def test_missing_field_is_400(self):
        c = client(config=ShimConfig(encoder_model="hash:256"))
        resp = c.post("/embed", json={})
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_encoder_not_ready_is_503(self):
        class NeverReady:
            ready = False
            load_error = None
            dim = 0

            def encode(self, text):
                raise AssertionError("must not be called")

        c = client(config=ShimConfig(encoder_model="hash:256"), encoder=NeverReady())
        resp = c.post("/embed", json={"text": "hello"})
        assert resp.status_code == 503
        assert "error" in resp.json()
        # translation does not need the encoder
        assert c.post("/translate", json={"text": "hi"}).status_code == 200

    def test_mt_backend_failure_is_502(self):
        class Broken(IdentityTranslator):
            def translate(self, text, source, target):
                raise MTBackendError("upstream unavailable")

        c = client(config=ShimConfig(encoder_model="hash:256"), translator=Broken())
        resp = c.post("/translate", json={"text": "hello"})
        assert resp.status_code == 502
        assert resp.json() == {"error": "upstream unavailable"}
