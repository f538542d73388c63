"""File-exchange segmentation worker for BEV images."""

from .config import AdapterConfig
from .server import process_request, serve

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "process_request", "serve"]
