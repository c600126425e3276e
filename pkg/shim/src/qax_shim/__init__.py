"""Reference HTTP service for the qax translation/embedding wire protocol."""

from .app import create_app
from .config import ShimConfig

__version__ = "0.1.0"
