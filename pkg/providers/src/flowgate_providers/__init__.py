"""Offline exporters producing the flow, embedding, and saliency files the
flowgate pipeline consumes. The pipeline is reached only through those files
and its CLI; nothing here imports it."""

__version__ = "0.1.0"
