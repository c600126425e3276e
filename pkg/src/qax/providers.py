"""Translation and embedding providers.

Backends are selected by endpoint scheme:

* ``http://`` / ``https://``: the wire protocol.
  POST {translate_endpoint} ``{"text", "source", "target"}`` -> ``{"translation"}``
  POST {embed_endpoint}     ``{"text"}``                     -> ``{"vector", "dim"}``
  429/5xx responses and transport errors are retried with exponential
  backoff (retry_base_ms * 2^attempt, jittered); other 4xx are permanent.
* ``identity:``: translator that returns its input unchanged.  First-class
  configuration for tests and same-language dry runs.
* ``test:``: deterministic offline embedder (hashed character n-grams).

Every successful result is cached on disk, one file per entry named by a
sha256 digest of (kind, provider-id, source_lang, target_lang, text), so a
warm run issues zero provider requests.  In-flight requests per provider
are bounded process-globally by ``max_in_flight``.

Environment: QAX_TRANSLATE_URL and QAX_EMBED_URL supply default endpoints;
QAX_API_KEY, when set, is sent as a bearer token.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import tempfile
import threading
import time
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import requests

from .text_primitives import normalize_text

IDENTITY_TRANSLATE = "identity:"
TEST_EMBED = "test:"

TEST_EMBED_DIM = 256
# Keyed blake2b makes the bucket assignment stable across runs and platforms;
# Python's built-in hash() is salted per process and must not be used here.
_NGRAM_HASH_KEY = b"qax-ngram-embedder-v1"


class ProviderError(Exception):
    pass


class ProviderUnavailable(ProviderError):
    """Provider kept failing after all retries."""


class ProviderRejected(ProviderError):
    """Permanent 4xx-class refusal; retrying would loop on quota errors."""


class EmptyInput(ProviderError):
    pass


class DimensionMismatch(ProviderError):
    pass


class ZeroVector(ProviderError):
    pass


class TransportError(ProviderError):
    """Network-level failure (connect/timeout); always retryable."""


def default_cache_dir() -> Path:
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(Path.home(), ".cache")
    return Path(base) / "qax"


@dataclass(frozen=True)
class ProviderConfig:
    cache_dir: Path
    translate_endpoint: str = IDENTITY_TRANSLATE
    embed_endpoint: str = TEST_EMBED
    source_lang: str = "en"
    target_lang: str = "am"
    max_in_flight: int = 8
    retry_max: int = 5
    retry_base_ms: int = 250

    def __post_init__(self):
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.retry_base_ms <= 0:
            raise ValueError("retry_base_ms must be > 0")

    @classmethod
    def from_env(cls, cache_dir: Path | None = None, **kwargs) -> "ProviderConfig":
        kwargs.setdefault(
            "translate_endpoint", os.environ.get("QAX_TRANSLATE_URL", IDENTITY_TRANSLATE)
        )
        kwargs.setdefault("embed_endpoint", os.environ.get("QAX_EMBED_URL", TEST_EMBED))
        return cls(cache_dir=cache_dir or default_cache_dir(), **kwargs)


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    values: np.ndarray
    dim: int

    def __post_init__(self):
        if len(self.values) != self.dim:
            raise DimensionMismatch(
                f"vector has {len(self.values)} values, declared dim {self.dim}"
            )
        self.values.setflags(write=False)

    def __eq__(self, other):
        return (
            isinstance(other, EmbeddingVector)
            and self.dim == other.dim
            and np.array_equal(self.values, other.values)
        )


def cache_key(kind: str, provider_id: str, source_lang: str, target_lang: str, text: str) -> str:
    """Collision-resistant digest of the full request tuple (64 hex digits)."""
    h = hashlib.sha256()
    for part in (kind, provider_id, source_lang, target_lang, text):
        raw = part.encode("utf-8")
        h.update(str(len(raw)).encode("ascii"))
        h.update(b":")
        h.update(raw)
    return h.hexdigest()


class DiskCache:
    """One JSON file per entry under root, named by the cache key.

    Writes go through a temp file + rename, so a crash never leaves a
    half-written entry.  Concurrent writers of the same key are harmless:
    payloads are deterministic per key, last write wins.
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / key

    def get(self, key: str):
        path = self._path(key)
        try:
            with open(path, encoding="utf-8") as f:
                return json.load(f)
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError):
            return None

    def put(self, key: str, kind: str, payload) -> None:
        entry = {"key": key, "kind": kind, "payload": payload, "created_at": time.time()}
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".tmp-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(entry, f, ensure_ascii=False)
            os.replace(tmp, self._path(key))
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise

    def entries(self):
        for p in sorted(self.root.iterdir()):
            if p.name.startswith("."):
                continue
            entry = self.get(p.name)
            if entry is not None:
                yield entry

    def clear(self) -> int:
        n = 0
        for p in list(self.root.iterdir()):
            if p.name.startswith("."):
                continue
            p.unlink()
            n += 1
        return n


@lru_cache(maxsize=1 << 16)
def _ngram_bucket(gram: str) -> int:
    h = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=_NGRAM_HASH_KEY)
    return int.from_bytes(h.digest(), "big") % TEST_EMBED_DIM


@lru_cache(maxsize=1 << 14)
def test_embedder(text: str) -> EmbeddingVector:
    """Deterministic offline embedder: hashed character n-gram profile.

    Counts 1/2/3-grams of the normalized text into 256 buckets (keyed
    blake2b, fixed key) and L2-normalizes.  Empty text maps to the unit
    vector e_0 by convention.  Vectors are immutable and memoized; the
    aligner re-embeds identical window texts constantly.
    """
    t = normalize_text(text)
    counts = np.zeros(TEST_EMBED_DIM, dtype=np.float64)
    if not t:
        counts[0] = 1.0
        return EmbeddingVector(counts, TEST_EMBED_DIM)
    for n in (1, 2, 3):
        for i in range(len(t) - n + 1):
            counts[_ngram_bucket(t[i : i + n])] += 1.0
    counts /= np.linalg.norm(counts)
    return EmbeddingVector(counts, TEST_EMBED_DIM)


def cosine_similarity(u: EmbeddingVector, v: EmbeddingVector) -> float:
    if u.dim != v.dim:
        raise DimensionMismatch(f"dim {u.dim} vs {v.dim}")
    nu = float(np.linalg.norm(u.values))
    nv = float(np.linalg.norm(v.values))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for zero-norm vector")
    return float(np.dot(u.values, v.values) / (nu * nv))


def _requests_session() -> requests.Session:
    global _SESSION
    if _SESSION is None:
        _SESSION = requests.Session()
    return _SESSION


_SESSION: requests.Session | None = None


def _requests_transport(url: str, payload: dict, headers: dict, timeout: float = 60.0):
    try:
        resp = _requests_session().post(url, json=payload, headers=headers, timeout=timeout)
    except requests.RequestException as e:
        raise TransportError(str(e)) from e
    try:
        body = resp.json()
    except ValueError:
        body = {}
    if not isinstance(body, dict):
        body = {}
    return resp.status_code, body


_SEMAPHORES: dict[str, threading.BoundedSemaphore] = {}
_SEM_LOCK = threading.Lock()


def _semaphore_for(provider_id: str, limit: int) -> threading.BoundedSemaphore:
    # Process-global per provider: the first limit seen for an endpoint wins.
    with _SEM_LOCK:
        sem = _SEMAPHORES.get(provider_id)
        if sem is None:
            sem = threading.BoundedSemaphore(limit)
            _SEMAPHORES[provider_id] = sem
        return sem


class ProviderClient:
    """Cache-backed client over one translate and one embed endpoint.

    Safe to share across threads.  ``transport`` is injectable for tests:
    a callable (url, payload, headers) -> (status_code, body_dict).
    """

    _EMBED_MEMO_MAX = 8192

    def __init__(self, cfg: ProviderConfig, transport=None, sleeper=time.sleep, rng=None):
        self.cfg = cfg
        self.cache = DiskCache(cfg.cache_dir)
        self._transport = transport or _requests_transport
        self._sleep = sleeper
        self._rng = rng or random.Random()
        self._lock = threading.Lock()
        # hot in-process layer over the disk cache; the aligner embeds the
        # same window texts over and over
        self._embed_memo: dict[str, EmbeddingVector] = {}
        self.requests_made = 0

    def _count_request(self):
        with self._lock:
            self.requests_made += 1

    def _headers(self) -> dict:
        headers = {}
        api_key = os.environ.get("QAX_API_KEY")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        return headers

    def _request(self, url: str, payload: dict) -> dict:
        headers = self._headers()
        base = self.cfg.retry_base_ms / 1000.0
        last_error = "no attempt made"
        for attempt in range(self.cfg.retry_max + 1):
            if attempt:
                self._sleep(base * 2 ** (attempt - 1) * self._rng.uniform(0.5, 1.5))
            sem = _semaphore_for(url, self.cfg.max_in_flight)
            with sem:
                self._count_request()
                try:
                    status, body = self._transport(url, payload, headers)
                except TransportError as e:
                    last_error = f"transport: {e}"
                    continue
            if status == 200:
                return body
            message = body.get("error", f"HTTP {status}")
            if status == 429 or status >= 500:
                last_error = f"HTTP {status}: {message}"
                continue
            raise ProviderRejected(f"HTTP {status}: {message}")
        raise ProviderUnavailable(
            f"{url} failed after {self.cfg.retry_max + 1} attempts ({last_error})"
        )

    def translate(self, text: str) -> str:
        if not normalize_text(text):
            raise EmptyInput("cannot translate empty text")
        cfg = self.cfg
        key = cache_key(
            "translate", cfg.translate_endpoint, cfg.source_lang, cfg.target_lang, text
        )
        entry = self.cache.get(key)
        if entry is not None:
            return entry["payload"]
        if cfg.translate_endpoint == IDENTITY_TRANSLATE:
            result = text
        else:
            body = self._request(
                cfg.translate_endpoint,
                {"text": text, "source": cfg.source_lang, "target": cfg.target_lang},
            )
            result = body.get("translation")
            if not isinstance(result, str):
                raise ProviderUnavailable(
                    f"{cfg.translate_endpoint} returned no 'translation' field"
                )
        self.cache.put(key, "translate", result)
        return result

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise EmptyInput("cannot embed empty text")
        cfg = self.cfg
        key = cache_key("embed", cfg.embed_endpoint, cfg.source_lang, cfg.target_lang, text)
        with self._lock:
            memo = self._embed_memo.get(key)
        if memo is not None:
            return memo
        entry = self.cache.get(key)
        if entry is not None:
            payload = entry["payload"]
            vec = EmbeddingVector(
                np.asarray(payload["vector"], dtype=np.float64), payload["dim"]
            )
            return self._memoize(key, vec)
        if cfg.embed_endpoint == TEST_EMBED:
            vec = test_embedder(text)
        else:
            body = self._request(cfg.embed_endpoint, {"text": text})
            values = body.get("vector")
            dim = body.get("dim")
            if not isinstance(values, list) or not isinstance(dim, int):
                raise ProviderUnavailable(
                    f"{cfg.embed_endpoint} returned no 'vector'/'dim' fields"
                )
            if len(values) != dim:
                raise DimensionMismatch(
                    f"provider returned {len(values)} values, declared dim {dim}"
                )
            vec = EmbeddingVector(np.asarray(values, dtype=np.float64), dim)
        self.cache.put(key, "embed", {"vector": vec.values.tolist(), "dim": vec.dim})
        return self._memoize(key, vec)

    def _memoize(self, key: str, vec: EmbeddingVector) -> EmbeddingVector:
        with self._lock:
            if len(self._embed_memo) >= self._EMBED_MEMO_MAX:
                self._embed_memo.clear()
            self._embed_memo[key] = vec
        return vec


_CLIENTS: dict[ProviderConfig, ProviderClient] = {}
_CLIENTS_LOCK = threading.Lock()


def get_client(cfg: ProviderConfig) -> ProviderClient:
    with _CLIENTS_LOCK:
        client = _CLIENTS.get(cfg)
        if client is None:
            client = ProviderClient(cfg)
            _CLIENTS[cfg] = client
        return client


def translate_text(cfg: ProviderConfig, text: str) -> str:
    return get_client(cfg).translate(text)


def embed_text(cfg: ProviderConfig, text: str) -> EmbeddingVector:
    return get_client(cfg).embed(text)
