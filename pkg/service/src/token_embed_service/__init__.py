from .app import create_app
from .encoder import SpanAlignmentError, TextTooLong, TokenEncoder

__all__ = ["create_app", "TokenEncoder", "SpanAlignmentError", "TextTooLong"]
