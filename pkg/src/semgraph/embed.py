"""Uniform source of token-level contextual embeddings.

Two providers share one contract: a remote HTTP client speaking the
``POST /embed`` protocol, and a deterministic synthetic encoder that lets
the whole engine run and test offline. Every emitted vector is unit-norm;
the same request to the same provider instance returns bit-identical
vectors.

The synthetic encoder maps each surface to a fixed pseudo-random unit
vector (hash-to-sphere), then nudges it toward the mean vector of the
other terms in its chunk, so planted polysemy is linearly separable.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .textpipe import _WORD_RE, normalize_surface

DEFAULT_DIM = 64


@dataclass(frozen=True)
class EmbedRequest:
    chunk_text: str
    spans: tuple[tuple[int, int], ...]


@dataclass
class EmbedResponse:
    dim: int
    vectors: np.ndarray  # float32, shape (len(spans), dim), unit rows


@dataclass
class ProviderMeta:
    """Provider settings persisted inside an index so queries can rebuild
    the identical encoder."""

    kind: str = "synthetic"  # "synthetic" | "http"
    seed: int = 42
    dim: int = DEFAULT_DIM
    gamma: float = 1.0
    url: str = ""


def _validate_spans(text: str, spans) -> None:
    if not spans:
        raise errors.InvalidSpan("request contains no spans")
    n = len(text)
    for s, e in spans:
        if not (0 <= s < e <= n):
            raise errors.InvalidSpan(f"span ({s}, {e}) out of bounds for text of length {n}")


def hash_to_sphere(surface: str, seed: int, dim: int) -> np.ndarray:
    """Pseudo-random unit vector fully determined by (seed, surface)."""
    digest = hashlib.blake2b(
        surface.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "little", signed=False)
    ).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def synthetic_encode(
    surface: str,
    context_surfaces,
    gamma: float,
    dim: int = DEFAULT_DIM,
    seed: int = 42,
) -> np.ndarray:
    """normalize(v(surface) + gamma * mean of v(w) over the context bag).

    ``context_surfaces`` is a bag (repeats weigh more). With an empty bag
    or gamma 0 the result is exactly v(surface). Pure and deterministic.
    """
    if dim < 8:
        raise ValueError("dim must be >= 8")
    v = hash_to_sphere(surface, seed, dim)
    bag = list(context_surfaces)
    if bag and gamma != 0.0:
        ctx = np.zeros(dim)
        for w in bag:
            ctx += hash_to_sphere(w, seed, dim)
        v = v + gamma * (ctx / len(bag))
    return v / np.linalg.norm(v)


class SyntheticEncoder:
    """Deterministic offline provider.

    The context bag for a span is every word token in the chunk whose
    case-folded form differs from the span's surface; occurrences of the
    surface itself are excluded so repeated mentions do not wash out the
    contextual signal.
    """

    def __init__(self, seed: int = 42, dim: int = DEFAULT_DIM, gamma: float = 1.0):
        if dim < 8:
            raise ValueError("dim must be >= 8")
        self.seed = seed
        self.dim = dim
        self.gamma = gamma
        self._cache: dict[str, np.ndarray] = {}

    def meta(self) -> ProviderMeta:
        return ProviderMeta("synthetic", self.seed, self.dim, self.gamma)

    def _vec(self, surface: str) -> np.ndarray:
        v = self._cache.get(surface)
        if v is None:
            v = hash_to_sphere(surface, self.seed, self.dim)
            self._cache[surface] = v
        return v

    def embed_spans(self, req: EmbedRequest) -> EmbedResponse:
        _validate_spans(req.chunk_text, req.spans)
        tokens = [m.group(0).casefold() for m in _WORD_RE.finditer(req.chunk_text)]
        out = np.empty((len(req.spans), self.dim), dtype=np.float32)
        for i, (s, e) in enumerate(req.spans):
            surface = normalize_surface(req.chunk_text[s:e])
            v = self._vec(surface).copy()
            bag = [t for t in tokens if t != surface]
            if bag and self.gamma != 0.0:
                ctx = np.zeros(self.dim)
                for w in bag:
                    ctx += self._vec(w)
                v = v + self.gamma * (ctx / len(bag))
            out[i] = (v / np.linalg.norm(v)).astype(np.float32)
        return EmbedResponse(self.dim, out)


class HttpEmbedClient:
    """Client for a remote token-level encoder speaking the wire protocol.

    POST {url}/embed with body {"text": ..., "spans": [[s, e], ...]};
    expects {"dim": d, "vectors": [[...], ...]}. 422 maps to InvalidSpan,
    connection failures and 5xx to ProviderUnavailable (retryable), and a
    change of dimension across calls to DimensionMismatch (fatal).
    """

    def __init__(self, url: str, timeout: float = 30.0, max_inflight: int = 8):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self._sem = threading.BoundedSemaphore(max_inflight)
        self._dim: int | None = None
        self._dim_lock = threading.Lock()

    def meta(self) -> ProviderMeta:
        return ProviderMeta("http", 0, self._dim or 0, 0.0, self.url)

    @property
    def dim(self) -> int | None:
        return self._dim

    def embed_spans(self, req: EmbedRequest) -> EmbedResponse:
        import requests

        _validate_spans(req.chunk_text, req.spans)
        body = {"text": req.chunk_text, "spans": [list(s) for s in req.spans]}
        try:
            with self._sem:
                resp = requests.post(f"{self.url}/embed", json=body, timeout=self.timeout)
        except requests.RequestException as exc:
            raise errors.ProviderUnavailable(f"embed service unreachable: {exc}") from exc
        if resp.status_code == 422:
            raise errors.InvalidSpan(f"service rejected spans: {resp.text[:200]}")
        if resp.status_code >= 500:
            raise errors.ProviderUnavailable(
                f"embed service returned {resp.status_code}")
        if resp.status_code != 200:
            raise errors.ProviderUnavailable(
                f"unexpected status {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
            dim = int(payload["dim"])
            vectors = np.asarray(payload["vectors"], dtype=np.float32)
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise errors.ProviderUnavailable(f"malformed embed response: {exc}") from exc
        if vectors.ndim != 2 or vectors.shape != (len(req.spans), dim):
            raise errors.ProviderUnavailable(
                f"embed response shape {vectors.shape} does not match request")
        with self._dim_lock:
            if self._dim is None:
                self._dim = dim
            elif dim != self._dim:
                raise errors.DimensionMismatch(
                    f"provider dim drifted from {self._dim} to {dim}")
        return EmbedResponse(dim, vectors)


def provider_from_meta(meta: ProviderMeta, url_override: str | None = None):
    if meta.kind == "synthetic":
        return SyntheticEncoder(seed=meta.seed, dim=meta.dim, gamma=meta.gamma)
    if meta.kind == "http":
        return HttpEmbedClient(url_override or meta.url)
    raise errors.ConfigError(f"unknown provider kind {meta.kind!r}")
