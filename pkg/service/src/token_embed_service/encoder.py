"""Span-level contextual embeddings from a transformer encoder.

For each requested character span the encoder mean-pools the final-layer
hidden states of every subword overlapping the span, then L2-normalizes.
Texts that exceed the configured character budget or the model's position
limit are rejected outright; silent truncation would corrupt span
alignment.
"""

from __future__ import annotations

import threading

import torch
from transformers import AutoModel, AutoTokenizer


class SpanAlignmentError(ValueError):
    """A span is out of bounds or covers no subword tokens."""


class TextTooLong(ValueError):
    """Input text exceeds the configured or architectural limit."""


class TokenEncoder:
    def __init__(self, model_path: str, device: str = "cpu",
                 max_text_chars: int = 8000):
        self.tokenizer = AutoTokenizer.from_pretrained(model_path)
        self.model = AutoModel.from_pretrained(model_path).to(device).eval()
        self.model_id = model_path
        self.device = device
        self.dim = int(self.model.config.hidden_size)
        self.max_positions = int(getattr(self.model.config,
                                         "max_position_embeddings", 512))
        self.max_text_chars = max_text_chars
        self._lock = threading.Lock()

    def embed(self, text: str, spans: list[tuple[int, int]]) -> list[list[float]]:
        if len(text) > self.max_text_chars:
            raise TextTooLong(
                f"text of {len(text)} chars exceeds limit {self.max_text_chars}")
        n = len(text)
        if not spans:
            raise SpanAlignmentError("request contains no spans")
        for s, e in spans:
            if not (0 <= s < e <= n):
                raise SpanAlignmentError(f"span ({s}, {e}) out of bounds for length {n}")

        enc = self.tokenizer(text, return_offsets_mapping=True,
                             return_special_tokens_mask=True,
                             return_tensors="pt")
        if enc["input_ids"].shape[1] > self.max_positions:
            raise TextTooLong(
                f"text tokenizes to {enc['input_ids'].shape[1]} pieces, "
                f"model limit is {self.max_positions}")
        offsets = enc["offset_mapping"][0].tolist()
        special = enc["special_tokens_mask"][0].tolist()

        with self._lock, torch.inference_mode():
            hidden = self.model(
                input_ids=enc["input_ids"].to(self.device),
                attention_mask=enc["attention_mask"].to(self.device),
            ).last_hidden_state[0]

        vectors = []
        for s, e in spans:
            idx = [i for i, ((ts, te), sp) in enumerate(zip(offsets, special))
                   if not sp and ts < e and te > s]
            if not idx:
                raise SpanAlignmentError(
                    f"span ({s}, {e}) covers no subword tokens")
            pooled = hidden[idx].mean(dim=0)
            norm = pooled.norm()
            if norm > 0:
                pooled = pooled / norm
            vectors.append(pooled.cpu().tolist())
        return vectors
