"""Run the shim: qax-shim [--host H] [--port P] [--encoder-model M] [--mt-backend B]"""

import argparse

import uvicorn

from .app import create_app
from .config import DEFAULT_ENCODER_MODEL, TRANSLATION_BACKENDS, ShimConfig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qax-shim", description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8787)
    parser.add_argument(
        "--encoder-model",
        default=DEFAULT_ENCODER_MODEL,
        help="HuggingFace model id, or 'hash:<dim>' for the offline encoder "
        f"(default: {DEFAULT_ENCODER_MODEL})",
    )
    parser.add_argument(
        "--mt-backend",
        default="identity",
        choices=TRANSLATION_BACKENDS,
        help="translation backend (default: identity)",
    )
    args = parser.parse_args(argv)

    config = ShimConfig(
        host=args.host,
        port=args.port,
        encoder_model=args.encoder_model,
        translation_backend=args.mt_backend,
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
