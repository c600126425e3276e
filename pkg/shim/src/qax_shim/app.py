"""FastAPI service implementing the qax provider wire protocol.

POST /translate {"text", "source", "target"} -> {"translation": str}
POST /embed     {"text"}                     -> {"vector": [...], "dim": int}
GET  /healthz                                -> "ok"

Error bodies are always {"error": str}: 400 on empty text, 503 while the
encoder is loading (or failed to load), 502 when the MT backend fails.
"""

from __future__ import annotations

from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .config import ShimConfig
from .encoders import EncoderNotReady, load_in_background, make_encoder
from .translators import MTBackendError, make_translator


class TranslateRequest(BaseModel):
    text: str
    source: str = ""
    target: str = ""


class EmbedRequest(BaseModel):
    text: str


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


def create_app(
    config: ShimConfig | None = None, encoder=None, translator=None
) -> FastAPI:
    config = config or ShimConfig()
    encoder = encoder if encoder is not None else make_encoder(config.encoder_model)
    translator = (
        translator
        if translator is not None
        else make_translator(config.translation_backend)
    )

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        load_in_background(encoder)
        yield

    app = FastAPI(title="qax provider shim", lifespan=lifespan)
    app.state.config = config
    app.state.encoder = encoder
    app.state.translator = translator

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return _error(400, f"malformed request: {exc.errors()[0]['msg']}")

    @app.get("/healthz")
    async def healthz():
        return PlainTextResponse("ok")

    @app.post("/translate")
    async def translate(req: TranslateRequest):
        if not req.text.strip():
            return _error(400, "empty text")
        try:
            translation = translator.translate(req.text, req.source, req.target)
        except MTBackendError as e:
            return _error(502, str(e))
        return {"translation": translation}

    @app.post("/embed")
    async def embed(req: EmbedRequest):
        if not req.text.strip():
            return _error(400, "empty text")
        if not encoder.ready:
            return _error(503, encoder.load_error or "encoder still loading")
        try:
            vector = encoder.encode(req.text)
        except EncoderNotReady as e:
            return _error(503, str(e))
        return {"vector": vector, "dim": encoder.dim}

    return app
