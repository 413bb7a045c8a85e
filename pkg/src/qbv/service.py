"""HTTP search service: upload a vocal imitation, get ranked references.

Endpoints:
    POST /api/query        multipart (audio, k, backend) -> QueryResponse
    GET  /api/references   ids served by the index, with audio URLs
    GET  /api/audio/{id}   reference audio as WAV
    GET  /api/health       liveness + served backends

Indices and parameters are immutable after startup, so concurrent
requests are safe and identical requests return identical results.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import retrieval
from .audio_io import conform_length, load_audio_bytes, wav_bytes
from .exceptions import DegenerateInputError


@dataclass
class ServedBackend:
    index: retrieval.EmbeddingIndex
    featurizer: Callable
    sample_rate: int
    duration: float


def create_app(backends: dict, store) -> FastAPI:
    """backends: name -> ServedBackend; store provides get(id) -> AudioClip
    for playback."""
    if not backends:
        raise ValueError("need at least one backend to serve")
    app = FastAPI(title="qbv search service")
    default_backend = next(iter(backends))

    @app.get("/api/health")
    def health():
        return {"status": "ok", "backends": sorted(backends)}

    @app.get("/api/references")
    def references():
        ids = sorted({rid for b in backends.values() for rid in b.index.ids})
        return {"references": [{"id": rid, "audio_url": f"/api/audio/{rid}"} for rid in ids]}

    @app.get("/api/audio/{clip_id}")
    def audio(clip_id: str):
        try:
            clip = store.get(clip_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown audio id {clip_id!r}")
        return Response(content=wav_bytes(clip), media_type="audio/wav")

    @app.post("/api/query")
    async def handle_query(audio: UploadFile = File(...), k: int = Form(5),
                           backend: str = Form(default_backend)):
        if backend not in backends:
            raise HTTPException(status_code=404, detail=f"unknown backend {backend!r}")
        served = backends[backend]
        start = time.perf_counter()
        payload = await audio.read()
        try:
            clip = load_audio_bytes(payload, target_rate=served.sample_rate)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=f"undecodable audio: {exc}")
        clip = conform_length(clip, served.duration)
        k = max(1, min(k, len(served.index.ids)))
        try:
            result = retrieval.query(served.index, clip, k, served.featurizer)
        except DegenerateInputError as exc:
            raise HTTPException(status_code=422, detail=f"zero-signal query: {exc}")
        latency_ms = (time.perf_counter() - start) * 1000.0
        return JSONResponse({
            "results": [{"id": rid, "score": score, "audio_url": f"/api/audio/{rid}"}
                        for rid, score in result.entries],
            "backend": backend,
            "latency_ms": latency_ms,
        })

    return app


def mount_ui(app: FastAPI, ui_dir: str) -> None:
    app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
