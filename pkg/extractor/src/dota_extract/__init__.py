"""Export tooling that turns a vision-language checkpoint and an image folder
into classifier (.dcls) and embedding stream (.demb) files for the streaming
adaptation engine."""

from .encoders import ClipEncoder, ToyEncoder, make_encoder
from .jobs import export_classifier, export_stream

__all__ = ["ClipEncoder", "ToyEncoder", "export_classifier", "export_stream",
           "make_encoder"]
