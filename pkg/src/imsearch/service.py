"""REST frontend: visual search, text search, fusion and a global
endpoint composing them, plus asynchronous index administration.

All payloads are JSON.  Query images travel as base64 strings (10 MB
cap after decoding).  Every endpoint is a thin wrapper over the public
library calls, so an embedding application can skip HTTP entirely and
call the same functions.

The global search flow: an optional text query is answered first and
its top results become the shortlist for the visual searches (otherwise
the per-index ANN structure provides the shortlist); each requested
index is searched concurrently with modality filtering; visual lists
are fused with combMNZ, the fused list with the text list via
reciprocal rank, and the final ranking is enriched from the image info
table.
"""
from __future__ import annotations

import base64
import io
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from PIL import Image as PILImage
from pydantic import BaseModel, Field, model_validator

from .core import ImageRecord, IndexConfig, ScoredList
from .errors import ImageSearchError, IndexNotFound, MalformedConfig
from .fusion import DEFAULT_RRF_C, FusionRule, fuse
from .indexing import IndexJob, run_index
from .seek import IndexHandle, QuerySpec, search_modality_filtered
from .text import (
    TextIndex,
    fuse_multimodal,
    index_captions,
    negated_terms_from_captions,
    search_text,
)

logger = logging.getLogger("imsearch.service")

MAX_IMAGE_BYTES = 10 * 2**20
TEXT_SHORTLIST_SIZE = 1000
VISUAL_LIST_DEPTH = 1000


class ImageRef(BaseModel):
    """Either a reference to an indexed image or an inline payload."""

    imageId: str | None = None
    data: str | None = None

    @model_validator(mode="after")
    def _exactly_one(self) -> "ImageRef":
        if (self.imageId is None) == (self.data is None):
            raise ValueError("exactly one of imageId or data must be set")
        return self


class ApiQuery(BaseModel):
    positives: list[ImageRef] = Field(default_factory=list)
    negatives: list[ImageRef] = Field(default_factory=list)
    text: str | None = None
    modalities: list[str] | None = None
    topN: int = Field(default=30, ge=1, le=1000)
    indexNames: list[str] = Field(default_factory=list)


class SerializedList(BaseModel):
    entries: list[tuple[str, float]]
    polarity: str = "similarity"
    source: str = ""


class FuseBody(BaseModel):
    lists: list[SerializedList]
    rule: str
    weights: list[float] | None = None
    c: float = DEFAULT_RRF_C
    topN: int | None = Field(default=None, ge=1)
    normalize: bool = True


class IndexImage(BaseModel):
    imageId: str
    uri: str
    caption: str | None = None
    modality: str | None = None
    articleUri: str | None = None


class IndexJobBody(BaseModel):
    name: str
    config: dict
    images: list[IndexImage]
    workers: int = Field(default=1, ge=1)
    shardSize: int = Field(default=50, ge=1)


class ResultRow(BaseModel):
    imageId: str
    score: float
    rank: int
    uri: str | None = None
    caption: str | None = None
    modality: str | None = None
    articleUri: str | None = None


class SearchResponse(BaseModel):
    results: list[ResultRow]


def decode_image(data: str) -> np.ndarray:
    try:
        blob = base64.b64decode(data, validate=True)
    except Exception as exc:
        raise HTTPException(status_code=422, detail=f"undecodable image payload: {exc}")
    if len(blob) > MAX_IMAGE_BYTES:
        raise HTTPException(status_code=422, detail="image payload exceeds 10 MB")
    try:
        with PILImage.open(io.BytesIO(blob)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise HTTPException(status_code=422, detail=f"undecodable image payload: {exc}")


class EngineState:
    """Registered indices, caption indexes and running jobs."""

    def __init__(self, index_root: Path) -> None:
        self.index_root = Path(index_root)
        self._handles: dict[str, IndexHandle] = {}
        self._text_indexes: dict[tuple[str, ...], TextIndex] = {}
        self._lock = threading.Lock()
        self._name_locks: dict[str, threading.Lock] = {}
        self.jobs: dict[str, dict] = {}
        self._job_counter = 0

    def index_names(self) -> list[str]:
        return sorted(
            p.name for p in self.index_root.iterdir() if (p / "config.json").is_file()
        ) if self.index_root.is_dir() else []

    def handle(self, name: str) -> IndexHandle:
        with self._lock:
            if name not in self._handles:
                try:
                    self._handles[name] = IndexHandle(self.index_root / name)
                except (IndexNotFound, FileNotFoundError):
                    raise HTTPException(status_code=404, detail=f"unknown index: {name}")
            return self._handles[name]

    def invalidate(self, name: str) -> None:
        with self._lock:
            self._handles.pop(name, None)
            self._text_indexes = {k: v for k, v in self._text_indexes.items() if name not in k}

    def text_index(self, names: tuple[str, ...]) -> TextIndex:
        key = tuple(sorted(set(names)))
        with self._lock:
            cached = self._text_indexes.get(key)
        if cached is not None:
            return cached
        records: dict[str, ImageRecord] = {}
        for name in key:
            records.update(self.handle(name).records)
        built = index_captions(records[i] for i in sorted(records))
        with self._lock:
            self._text_indexes[key] = built
        return built

    def name_lock(self, name: str) -> threading.Lock:
        with self._lock:
            return self._name_locks.setdefault(name, threading.Lock())

    def next_job_id(self) -> str:
        with self._lock:
            self._job_counter += 1
            return f"job-{self._job_counter}"


def _resolve_examples(state: EngineState, refs: list[ImageRef]) -> list:
    out = []
    for ref in refs:
        if ref.imageId is not None:
            out.append(ref.imageId)
        else:
            out.append(decode_image(ref.data))
    return out


def _records_for(state: EngineState, names: list[str], image_id: str) -> ImageRecord | None:
    for name in names:
        record = state.handle(name).records.get(image_id)
        if record is not None:
            return record
    return None


def _enrich(state: EngineState, names: list[str], scored: ScoredList) -> list[dict]:
    rows = []
    for rank, (image_id, score) in enumerate(scored.entries, start=1):
        record = _records_for(state, names, image_id)
        rows.append(
            ResultRow(
                imageId=image_id,
                score=score,
                rank=rank,
                uri=record.uri if record else None,
                caption=record.caption if record else None,
                modality=record.modality if record else None,
                articleUri=record.article_uri if record else None,
            ).model_dump()
        )
    return rows


def _caption_of(state: EngineState, names: list[str], ref: ImageRef) -> str | None:
    if ref.imageId is None:
        return None
    record = _records_for(state, names, ref.imageId)
    return record.caption if record else None


def _visual_searches(
    state: EngineState,
    names: list[str],
    spec: QuerySpec,
    shortlist: set[str] | None,
) -> list[ScoredList]:
    handles = [state.handle(n) for n in names]

    def run_one(handle: IndexHandle) -> ScoredList:
        return search_modality_filtered(handle, spec, shortlist=shortlist)

    if len(handles) > 1:
        with ThreadPoolExecutor(max_workers=min(8, len(handles))) as pool:
            return list(pool.map(run_one, handles))
    return [run_one(handles[0])]


def _global_search(state: EngineState, query: ApiQuery) -> ScoredList:
    if not query.indexNames:
        raise HTTPException(status_code=400, detail="indexNames must name at least one index")
    has_text = bool(query.text and query.text.strip())
    positives = _resolve_examples(state, query.positives)
    negatives = _resolve_examples(state, query.negatives)
    if not positives and not has_text:
        raise HTTPException(status_code=400, detail="query needs text or a positive example")

    text_list: ScoredList | None = None
    shortlist: set[str] | None = None
    if has_text:
        tindex = state.text_index(tuple(query.indexNames))
        positive_captions = [
            c for c in (_caption_of(state, query.indexNames, r) for r in query.positives) if c
        ]
        negative_captions = [
            c for c in (_caption_of(state, query.indexNames, r) for r in query.negatives) if c
        ]
        negated = negated_terms_from_captions(negative_captions, positive_captions)
        text_list = search_text(
            query.text, tindex, top_n=TEXT_SHORTLIST_SIZE, negated_terms=negated
        )
        shortlist = set(text_list.ids())

    visual_lists: list[ScoredList] = []
    if positives:
        spec = QuerySpec(
            positives=tuple(positives),
            negatives=tuple(negatives),
            modalities=frozenset(query.modalities) if query.modalities else None,
            top_n=VISUAL_LIST_DEPTH,
        )
        try:
            visual_lists = _visual_searches(state, query.indexNames, spec, shortlist)
        except ImageSearchError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    return fuse_multimodal(text_list, visual_lists, top_n=query.topN)


def create_app(index_root: str | Path) -> FastAPI:
    state = EngineState(Path(index_root))
    app = FastAPI(title="imsearch", version="0.1.0")
    app.state.engine = state

    @app.exception_handler(RequestValidationError)
    async def malformed_query(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": jsonable_encoder(exc.errors())})

    @app.middleware("http")
    async def request_log(request: Request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        logger.info(
            "%s %s -> %d (%.1f ms)",
            request.method,
            request.url.path,
            response.status_code,
            (time.perf_counter() - started) * 1e3,
        )
        return response

    @app.get("/indices")
    def indices() -> dict:
        return {"indices": state.index_names()}

    @app.post("/search")
    def global_search(query: ApiQuery) -> dict:
        fused = _global_search(state, query)
        return {"results": _enrich(state, query.indexNames, fused)}

    @app.post("/visual-search")
    def visual_search(query: ApiQuery) -> dict:
        if not query.indexNames:
            raise HTTPException(status_code=400, detail="indexNames must name at least one index")
        positives = _resolve_examples(state, query.positives)
        if not positives:
            raise HTTPException(status_code=400, detail="visual search needs a positive example")
        spec = QuerySpec(
            positives=tuple(positives),
            negatives=tuple(_resolve_examples(state, query.negatives)),
            modalities=frozenset(query.modalities) if query.modalities else None,
            top_n=query.topN if len(query.indexNames) == 1 else VISUAL_LIST_DEPTH,
        )
        try:
            lists = _visual_searches(state, query.indexNames, spec, None)
        except ImageSearchError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if len(lists) == 1:
            fused = lists[0].to_similarity().truncated(query.topN)
        else:
            fused = fuse(lists, "combMNZ", top_n=query.topN)
        return {"results": _enrich(state, query.indexNames, fused)}

    @app.post("/text-search")
    def text_search(query: ApiQuery) -> dict:
        if not query.indexNames:
            raise HTTPException(status_code=400, detail="indexNames must name at least one index")
        if not (query.text and query.text.strip()):
            raise HTTPException(status_code=400, detail="text search needs a text query")
        tindex = state.text_index(tuple(query.indexNames))
        negative_captions = [
            c for c in (_caption_of(state, query.indexNames, r) for r in query.negatives) if c
        ]
        positive_captions = [
            c for c in (_caption_of(state, query.indexNames, r) for r in query.positives) if c
        ]
        negated = negated_terms_from_captions(negative_captions, positive_captions)
        scored = search_text(query.text, tindex, top_n=query.topN, negated_terms=negated)
        return {"results": _enrich(state, query.indexNames, scored)}

    @app.post("/fuse")
    def fuse_lists(body: FuseBody) -> dict:
        try:
            lists = [
                ScoredList.from_pairs(sl.entries, sl.polarity, sl.source) for sl in body.lists
            ]
            rule = FusionRule(
                body.rule,
                weights=tuple(body.weights) if body.weights is not None else None,
                c=body.c,
            )
            fused = fuse(lists, rule, top_n=body.topN, normalize=body.normalize)
        except ImageSearchError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "entries": [[i, s] for i, s in fused.entries],
            "polarity": fused.polarity,
            "source": fused.source,
        }

    @app.post("/admin/index", status_code=202)
    def submit_index(body: IndexJobBody) -> dict:
        target = state.index_root / body.name
        if target.exists():
            raise HTTPException(status_code=409, detail=f"index already exists: {body.name}")
        name_lock = state.name_lock(body.name)
        if not name_lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail=f"index job already running: {body.name}")
        try:
            config = IndexConfig.from_dict(body.config)
        except MalformedConfig as exc:
            name_lock.release()
            raise HTTPException(status_code=400, detail=f"invalid config: {exc}")
        records = tuple(
            ImageRecord(
                image_id=i.imageId,
                uri=i.uri,
                caption=i.caption,
                modality=i.modality,
                article_uri=i.articleUri,
            )
            for i in body.images
        )
        job = IndexJob(
            images=records,
            config=config,
            output_dir=target,
            workers=body.workers,
            shard_size=body.shardSize,
        )
        job_id = state.next_job_id()
        state.jobs[job_id] = {"status": "running", "name": body.name}

        def run() -> None:
            try:
                report = run_index(job)
                state.jobs[job_id] = {
                    "status": "done",
                    "name": body.name,
                    "report": report.to_json_dict(),
                }
                state.invalidate(body.name)
            except Exception as exc:
                state.jobs[job_id] = {
                    "status": "failed",
                    "name": body.name,
                    "error": f"{type(exc).__name__}: {exc}",
                }
            finally:
                name_lock.release()

        threading.Thread(target=run, daemon=True).start()
        return {"jobId": job_id}

    @app.get("/admin/index/{job_id}")
    def job_status(job_id: str) -> dict:
        job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job: {job_id}")
        return job

    return app
