"""FastAPI application exposing the embedding wire protocol.

POST /embed  {"text": ..., "spans": [[s, e], ...]}
             -> {"dim": d, "vectors": [[...], ...]}
GET  /health -> {"status": "ok", "model": ..., "dim": d}

Status codes: 422 invalid spans, 413 text over the length limit,
503 model not loaded. Configuration via environment variables MODEL,
DEVICE, PORT, MAX_TEXT_CHARS.
"""

from __future__ import annotations

import logging
import os
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .encoder import SpanAlignmentError, TextTooLong, TokenEncoder

logger = logging.getLogger(__name__)

DEFAULT_MODEL = "microsoft/deberta-v3-large"


class EmbedIn(BaseModel):
    text: str = Field(min_length=1)
    spans: list[tuple[int, int]] = Field(min_length=1)


class EmbedOut(BaseModel):
    dim: int
    vectors: list[list[float]]


def create_app(model_path: str | None = None, device: str | None = None,
               max_text_chars: int | None = None) -> FastAPI:
    model_path = model_path or os.environ.get("MODEL", DEFAULT_MODEL)
    device = device or os.environ.get("DEVICE", "cpu")
    max_text_chars = max_text_chars or int(os.environ.get("MAX_TEXT_CHARS", "8000"))

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        try:
            app.state.encoder = TokenEncoder(model_path, device, max_text_chars)
            logger.info("loaded %s (dim=%d) on %s", model_path,
                        app.state.encoder.dim, device)
        except Exception:
            logger.exception("failed to load model %s", model_path)
            app.state.encoder = None
        yield

    app = FastAPI(title="token-embed-service", lifespan=lifespan)
    app.state.encoder = None

    @app.get("/health")
    def health():
        enc = app.state.encoder
        if enc is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        return {"status": "ok", "model": enc.model_id, "dim": enc.dim}

    @app.post("/embed", response_model=EmbedOut)
    def embed(body: EmbedIn):
        enc = app.state.encoder
        if enc is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        try:
            vectors = enc.embed(body.text, body.spans)
        except SpanAlignmentError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except TextTooLong as exc:
            raise HTTPException(status_code=413, detail=str(exc))
        return EmbedOut(dim=enc.dim, vectors=vectors)

    return app


def serve():
    import uvicorn

    port = int(os.environ.get("PORT", "8080"))
    uvicorn.run(create_app(), host="0.0.0.0", port=port)


if __name__ == "__main__":
    serve()
