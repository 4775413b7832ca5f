"""HTTP service implementing the reader wire protocol.

POST /answer: {"question", "top_k", "contexts": [{"id", "text"}]} ->
{"answers": [{"context_id", "text", "start", "end", "score"}]}.
GET /healthz reports model readiness. 422 when the request is unusable
(empty contexts, context exceeding the window without sliding inference),
503 while no model is loaded.
"""

from __future__ import annotations

import argparse
import logging

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import ServiceConfig
from .qa_model import ContextTooLong, ExtractiveQaModel

logger = logging.getLogger(__name__)


class ContextIn(BaseModel):
    id: str
    text: str


class AnswerRequest(BaseModel):
    question: str
    top_k: int = 10
    contexts: list[ContextIn]


def create_app(config: ServiceConfig | None = None, model: ExtractiveQaModel | None = None) -> FastAPI:
    app = FastAPI(title="reader-service")
    if model is None and config is not None:
        try:
            model = ExtractiveQaModel(config)
        except Exception:
            logger.exception("model load failed; serving 503s")
            model = None
    app.state.model = model

    @app.get("/healthz")
    def healthz():
        ready = app.state.model is not None
        return JSONResponse(
            status_code=200 if ready else 503,
            content={"status": "ok" if ready else "model not loaded"},
        )

    @app.post("/answer")
    def answer(req: AnswerRequest):
        if app.state.model is None:
            return JSONResponse(status_code=503, content={"detail": "model not loaded"})
        if not req.contexts:
            return JSONResponse(status_code=422, content={"detail": "contexts must be non-empty"})
        if req.top_k < 1:
            return JSONResponse(status_code=422, content={"detail": "top_k must be >= 1"})
        if not req.question.strip():
            return JSONResponse(status_code=422, content={"detail": "question must be non-empty"})
        try:
            answers = app.state.model.predict(
                req.question, [(c.id, c.text) for c in req.contexts], req.top_k
            )
        except ContextTooLong as exc:
            return JSONResponse(status_code=422, content={"detail": str(exc)})
        return {
            "answers": [
                {
                    "context_id": a.context_id,
                    "text": a.text,
                    "start": a.start,
                    "end": a.end,
                    "score": a.score,
                }
                for a in answers
            ]
        }

    return app


def main():
    import uvicorn

    parser = argparse.ArgumentParser(description="extractive QA reader service")
    parser.add_argument("--config", required=True, help="ServiceConfig JSON path")
    parser.add_argument("--port", type=int, default=8300)
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args()
    config = ServiceConfig.load(args.config)
    uvicorn.run(create_app(config), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
