"""HTTP/WebSocket service wrapping the captive game server."""

from .app import create_app

__all__ = ["create_app"]
