import hashlib
import logging
import os
import struct
import tempfile
import threading
from abc import ABC, abstractmethod
from pathlib import Path
from typing import List, Optional

import numpy as np
import requests

from app.exceptions import DimensionMismatch, EmptyInput, RemoteUnavailable
from app.schemas.document import Sentence
from app.schemas.pipeline import EmbedderConfig, EmbedderProvider
from app.schemas.summary import EmbeddingVector

logger = logging.getLogger(__name__)

FNV_OFFSET_64 = 0xCBF29CE484222325
FNV_PRIME_64 = 0x100000001B3
MASK_64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET_64
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME_64) & MASK_64
    return h


def char_trigrams(token: str) -> List[str]:
    padded = f"<{token}>"
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


def _unit(values: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(values))
    if norm == 0.0 or not np.isfinite(norm):
        basis = np.zeros(values.shape[0], dtype=np.float64)
        basis[0] = 1.0
        return basis
    return values / norm


def reference_embed(tokens: List[str], dim: int = 256) -> EmbeddingVector:
    """Hashed character-trigram bag, signed by bit 63, L2-normalized"""
    if dim < 16:
        raise ValueError(f"reference embedder needs dim >= 16, got {dim}")
    acc = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        for trigram in char_trigrams(token):
            h = fnv1a_64(trigram.encode("utf-8"))
            acc[h % dim] += -1.0 if (h >> 63) & 1 else 1.0
    return EmbeddingVector.from_array(_unit(acc))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.dot(a, b) / denom) if denom > 0 else 0.0


# ==================== PROVIDERS ====================


class EmbeddingProvider(ABC):
    name: str = "abstract"
    # False means the service serializes calls through a lock
    concurrent_safe: bool = True

    def __init__(self, dim: int):
        self.dim = dim

    @abstractmethod
    def content_key(self, sentence: Sentence) -> str:
        """The exact content the provider embeds"""

    @abstractmethod
    def embed_batch(self, sentences: List[Sentence]) -> List[np.ndarray]:
        """One vector per sentence, same order"""


class ReferenceEmbedder(EmbeddingProvider):
    """Deterministic offline stand-in for the encoder; embeds clean_tokens"""

    name = "reference"

    def content_key(self, sentence: Sentence) -> str:
        return "\x1f".join(sentence.clean_tokens)

    def embed_batch(self, sentences: List[Sentence]) -> List[np.ndarray]:
        return [reference_embed(s.clean_tokens, self.dim).values for s in sentences]


class RemoteEmbedder(EmbeddingProvider):
    """HTTP client for POST {endpoint}/embed"""

    name = "remote"
    concurrent_safe = False

    def __init__(self, dim: int, endpoint_url: str, timeout_ms: int, session: Optional[requests.Session] = None):
        super().__init__(dim)
        self.url = f"{endpoint_url.rstrip('/')}/embed"
        self.timeout = timeout_ms / 1000
        self.session = session or requests.Session()

    def content_key(self, sentence: Sentence) -> str:
        return sentence.text

    def embed_batch(self, sentences: List[Sentence]) -> List[np.ndarray]:
        try:
            response = self.session.post(
                self.url, json={"sentences": [s.text for s in sentences]}, timeout=self.timeout
            )
        except requests.RequestException as e:
            logger.error(f"Embedding request to {self.url} failed: {e}")
            raise RemoteUnavailable(f"embedding service unreachable: {e}")
        if response.status_code != 200:
            raise RemoteUnavailable(f"embedding service returned HTTP {response.status_code}")
        try:
            body = response.json()
            vectors = body["vectors"]
            dim = int(body["dim"])
        except (ValueError, KeyError, TypeError) as e:
            raise RemoteUnavailable(f"malformed embedding response: {e}")

        if dim != self.dim:
            raise DimensionMismatch(f"service dim {dim} != configured dim {self.dim}")
        if len(vectors) != len(sentences):
            raise RemoteUnavailable(f"expected {len(sentences)} vectors, got {len(vectors)}")

        result = []
        for vector in vectors:
            arr = np.asarray(vector, dtype=np.float64)
            if arr.shape != (self.dim,):
                raise DimensionMismatch(f"vector of shape {arr.shape} for dim {self.dim}")
            if not np.all(np.isfinite(arr)):
                raise RemoteUnavailable("embedding service returned non-finite values")
            result.append(_unit(arr))
        return result


# ==================== CACHE ====================


class EmbeddingCache:
    """One file per content hash: 4-byte LE dim header, then LE float32 values"""

    def __init__(self, cache_dir: str):
        self.root = Path(cache_dir)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, provider: str, dim: int, content: str) -> Path:
        digest = hashlib.sha256(f"{provider}\x00{dim}\x00{content}".encode("utf-8")).hexdigest()
        return self.root / f"{digest}.bin"

    def get(self, path: Path, dim: int) -> Optional[np.ndarray]:
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            return None
        if len(data) != 4 + 4 * dim or struct.unpack("<I", data[:4])[0] != dim:
            logger.warning(f"Ignoring corrupt cache entry {path.name}")
            return None
        return np.frombuffer(data[4:], dtype="<f4").astype(np.float32)

    def put(self, path: Path, values: np.ndarray) -> None:
        payload = struct.pack("<I", values.shape[0]) + values.astype("<f4").tobytes()
        fd, tmp_path = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(payload)
            os.replace(tmp_path, path)
        except OSError:
            if os.path.exists(tmp_path):
                os.unlink(tmp_path)
            raise


# ==================== SERVICE ====================


class EmbeddingService:
    """Provider + optional cache; safe to share across chapter workers"""

    def __init__(self, cfg: EmbedderConfig, session: Optional[requests.Session] = None):
        self.cfg = cfg
        if cfg.provider == EmbedderProvider.REMOTE:
            self.provider: EmbeddingProvider = RemoteEmbedder(
                cfg.dim, cfg.endpoint_url, cfg.timeout_ms, session=session
            )
        else:
            self.provider = ReferenceEmbedder(cfg.dim)
        self.cache = EmbeddingCache(cfg.cache_dir) if cfg.cache_dir else None
        self._lock = threading.Lock()

    def _embed_uncached(self, sentences: List[Sentence]) -> List[np.ndarray]:
        if self.provider.concurrent_safe:
            return self.provider.embed_batch(sentences)
        with self._lock:
            return self.provider.embed_batch(sentences)

    def embed_sentences(self, sentences: List[Sentence]) -> List[EmbeddingVector]:
        if not sentences:
            raise EmptyInput("no sentences to embed")

        dim = self.cfg.dim
        vectors: List[Optional[np.ndarray]] = [None] * len(sentences)
        paths = [None] * len(sentences)
        if self.cache:
            for i, sentence in enumerate(sentences):
                paths[i] = self.cache.path_for(self.provider.name, dim, self.provider.content_key(sentence))
                vectors[i] = self.cache.get(paths[i], dim)

        misses = [i for i, v in enumerate(vectors) if v is None]
        if misses:
            fresh = self._embed_uncached([sentences[i] for i in misses])
            for i, values in zip(misses, fresh):
                values = np.asarray(values, dtype=np.float32)
                if values.shape != (dim,):
                    raise DimensionMismatch(f"provider returned shape {values.shape} for dim {dim}")
                vectors[i] = values
                if self.cache:
                    self.cache.put(paths[i], values)
        logger.debug(f"Embedded {len(sentences)} sentences ({len(misses)} cache misses)")
        return [EmbeddingVector.from_array(v) for v in vectors]


def embed_sentences(
    sentences: List[Sentence], cfg: EmbedderConfig, session: Optional[requests.Session] = None
) -> List[EmbeddingVector]:
    return EmbeddingService(cfg, session=session).embed_sentences(sentences)
