"""Translation backends behind the /translate endpoint.

``identity`` echoes its input and ships as a first-class mode so the whole
pipeline can be exercised end to end without MT credentials.  ``external-mt``
calls Google Translate through the deep-translator library when it is
installed; any failure there surfaces as MTBackendError (the service maps
it to 502).
"""

from __future__ import annotations


class MTBackendError(Exception):
    pass


class IdentityTranslator:
    name = "identity"

    def translate(self, text: str, source: str, target: str) -> str:
        return text


class ExternalMTTranslator:
    name = "external-mt"

    def translate(self, text: str, source: str, target: str) -> str:
        try:
            from deep_translator import GoogleTranslator
        except ImportError as e:
            raise MTBackendError(
                "external-mt backend needs the deep-translator package"
            ) from e
        try:
            result = GoogleTranslator(source=source or "auto", target=target).translate(
                text
            )
        except Exception as e:
            raise MTBackendError(f"{type(e).__name__}: {e}") from e
        if not isinstance(result, str) or not result:
            raise MTBackendError("MT backend returned no translation")
        return result


def make_translator(backend: str):
    if backend == "identity":
        return IdentityTranslator()
    if backend == "external-mt":
        return ExternalMTTranslator()
    raise ValueError(f"unknown translation backend {backend!r}")
