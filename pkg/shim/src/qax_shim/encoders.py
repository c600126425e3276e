"""Sentence encoders behind the /embed endpoint.

Two backends:

* ``hash:<dim>``: keyed-blake2b character n-gram counts, L2-normalized.
  Fully offline and deterministic; the default for tests and dry runs
  without model weights.
* anything else: a HuggingFace model id, loaded lazily with transformers.
  Sentence vector = mean pooling over the final hidden states (masked),
  then L2 normalization.

Encoders load in a background thread; until ``ready`` the service answers
503.  A failed load leaves the encoder permanently not-ready (and the
failure reason in ``load_error``).
"""

from __future__ import annotations

import hashlib
import threading

import numpy as np

from .config import HASH_ENCODER_PREFIX

_HASH_KEY = b"qax-shim-encoder-v1"


class EncoderNotReady(Exception):
    pass


class HashNgramEncoder:
    """Deterministic offline encoder: hashed 1..3-gram counts of the text."""

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.ready = True
        self.load_error = None

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=_HASH_KEY)
        return int.from_bytes(digest.digest(), "big") % self.dim

    def encode(self, text: str) -> list[float]:
        counts = np.zeros(self.dim, dtype=np.float64)
        normalized = " ".join(text.split()).lower()
        if not normalized:
            counts[0] = 1.0
            return counts.tolist()
        for n in (1, 2, 3):
            for i in range(len(normalized) - n + 1):
                counts[self._bucket(normalized[i : i + n])] += 1.0
        counts /= np.linalg.norm(counts)
        return counts.tolist()


class TransformersEncoder:
    """Mean-pooled, L2-normalized sentence vectors from a HuggingFace model."""

    def __init__(self, model_id: str):
        self.model_id = model_id
        self.ready = False
        self.load_error: str | None = None
        self.dim = 0
        self._tokenizer = None
        self._model = None
        self._lock = threading.Lock()

    def load(self):
        try:
            import torch  # noqa: F401
            from transformers import AutoModel, AutoTokenizer

            tokenizer = AutoTokenizer.from_pretrained(self.model_id)
            model = AutoModel.from_pretrained(self.model_id)
            model.eval()
        except Exception as e:  # stays not-ready; callers see 503
            self.load_error = f"{type(e).__name__}: {e}"
            return
        self._tokenizer = tokenizer
        self._model = model
        self.dim = int(model.config.hidden_size)
        self.ready = True

    def encode(self, text: str) -> list[float]:
        if not self.ready:
            raise EncoderNotReady(self.load_error or "model still loading")
        import torch

        # Model inference is serialized; concurrent callers only see latency.
        with self._lock, torch.no_grad():
            tokens = self._tokenizer(
                text, return_tensors="pt", truncation=True, max_length=512
            )
            hidden = self._model(**tokens).last_hidden_state
            mask = tokens["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1)
            vector = pooled[0]
            vector = vector / vector.norm()
        return [float(x) for x in vector]


def make_encoder(model_id: str):
    if model_id.startswith(HASH_ENCODER_PREFIX):
        dim = int(model_id[len(HASH_ENCODER_PREFIX) :] or "256")
        return HashNgramEncoder(dim)
    return TransformersEncoder(model_id)


def load_in_background(encoder) -> None:
    if isinstance(encoder, HashNgramEncoder) or encoder.ready:
        return
    threading.Thread(target=encoder.load, daemon=True).start()
