"""HTTP/JSON API over a :class:`SessionStore`.  Errors are ``{code, stage, message}``."""
from __future__ import annotations

import numpy as np
from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .. import colorspace
from ..composition import CompositionError
from ..pipeline import PipelineError
from .sessions import EDIT_ACTIONS, SessionNotFound

MAX_UPLOAD_BYTES = 20 * 1024 * 1024


class ApiError(Exception):
    def __init__(self, status, code, stage, message):
        super().__init__(message)
        self.status = status
        self.body = {"code": code, "stage": stage, "message": message}


class EditRequest(BaseModel):
    segment_id: int
    action: str
    reference: int | None = None
    version: int | None = None


def _png(data):
    return Response(content=data, media_type="image/png")


def create_app(store) -> FastAPI:
    app = FastAPI(title="imaginecolor")

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(exc.body, status_code=exc.status)

    @app.exception_handler(SessionNotFound)
    async def _not_found(request: Request, exc: SessionNotFound):
        return JSONResponse({"code": "not_found", "stage": "session", "message": f"no session {exc.args[0]}"},
                            status_code=404)

    @app.exception_handler(PipelineError)
    async def _pipeline(request: Request, exc: PipelineError):
        return JSONResponse(exc.to_dict(), status_code=422)

    @app.get("/api/sessions")
    def list_sessions():
        return {"sessions": store.list_ids()}

    @app.post("/api/sessions")
    async def create_session(image: UploadFile = File(...), n: int = Form(6), seeds: str | None = Form(None)):
        data = await image.read()
        if len(data) > MAX_UPLOAD_BYTES:
            raise ApiError(413, "too_large", "input", "upload exceeds size limit")
        try:
            img = colorspace.read_image(data)
        except Exception as exc:
            raise ApiError(400, "bad_image", "input", f"cannot decode image: {exc}") from exc
        try:
            seed_list = None if not seeds else [int(s) for s in seeds.replace(",", " ").split()]
        except ValueError as exc:
            raise ApiError(400, "bad_request", "input", "seeds must be integers") from exc
        if seed_list is not None:
            n = len(seed_list)
        if n < 1:
            raise ApiError(400, "bad_request", "input", "n must be positive")
        session = store.create(img, n=n, seeds=seed_list)
        return store.describe(session)

    @app.get("/api/sessions/{sid}")
    def get_session(sid: str):
        return store.describe(store.get(sid))

    @app.get("/api/sessions/{sid}/segments")
    def get_segments(sid: str):
        return {"version": store.get(sid).version, "segments": store.segments(sid)}

    @app.get("/api/sessions/{sid}/segments/{segment_id}/candidates/{index}.png")
    def get_thumbnail(sid: str, segment_id: int, index: int):
        try:
            return _png(store.thumbnail(sid, segment_id, index))
        except KeyError as exc:
            if isinstance(exc, SessionNotFound):
                raise
            raise ApiError(404, "not_found", "composition", str(exc.args[0])) from exc

    @app.post("/api/sessions/{sid}/edits")
    def post_edit(sid: str, edit: EditRequest):
        if edit.action not in EDIT_ACTIONS:
            raise ApiError(400, "invalid_edit", "composition", f"unknown action {edit.action!r}")
        try:
            session, conflict = store.apply_edit(sid, edit.segment_id, edit.action, edit.reference, edit.version)
        except CompositionError as exc:
            raise ApiError(400, "invalid_edit", "composition", str(exc)) from exc
        body = store.describe(session)
        body["conflict"] = conflict
        return body

    @app.post("/api/sessions/{sid}/recolorize")
    def post_recolorize(sid: str):
        return store.describe(store.recolorize(sid))

    @app.get("/api/sessions/{sid}/result.png")
    def get_result(sid: str):
        return _png(store.get(sid).result_png)

    @app.get("/api/sessions/{sid}/input.png")
    def get_input(sid: str):
        return _png(colorspace.encode_png(store.get(sid).image))

    @app.get("/api/sessions/{sid}/segmentation.png")
    def get_segmentation(sid: str):
        return _png(colorspace.encode_label_png(store.get(sid).segmentation.segments))

    @app.get("/api/sessions/{sid}/refs/{index}.png")
    def get_reference(sid: str, index: int):
        refs = store.get(sid).references.references
        if not 0 <= index < len(refs):
            raise ApiError(404, "not_found", "imagination", f"no reference {index}")
        return _png(colorspace.encode_png(np.asarray(refs[index])))

    return app
