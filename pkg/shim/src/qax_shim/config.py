from __future__ import annotations

from dataclasses import dataclass

# Multilingual BERT encoder fine-tuned on Amharic text; mean-pooled
# sentence vectors.  Requires the [encoder] extra and downloadable weights.
DEFAULT_ENCODER_MODEL = "Davlan/bert-base-multilingual-cased-finetuned-amharic"

# Offline deterministic encoder, loadable anywhere: "hash:<dim>".
HASH_ENCODER_PREFIX = "hash:"

TRANSLATION_BACKENDS = ("identity", "external-mt")


@dataclass(frozen=True)
class ShimConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    encoder_model: str = DEFAULT_ENCODER_MODEL
    translation_backend: str = "identity"
    max_batch: int = 1  # wire protocol is single-text

    def __post_init__(self):
        if self.translation_backend not in TRANSLATION_BACKENDS:
            raise ValueError(
                f"translation_backend must be one of {TRANSLATION_BACKENDS}"
            )
        if self.max_batch != 1:
            raise ValueError("only single-text requests are supported")
