"""HTTP front end: the command layer behind a small JSON API."""

from .app import create_app

__all__ = ["create_app"]
