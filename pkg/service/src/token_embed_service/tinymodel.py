"""Build a tiny deterministic transformer encoder for offline runs.

A character-level WordPiece vocabulary covering printable ASCII plus a
small randomly initialized BERT give a genuine contextual encoder (the
attention layers mix surrounding tokens into every position) without any
checkpoint download. Fixed seed, so the saved weights are reproducible.
"""

from __future__ import annotations

import string

import torch
from tokenizers import Tokenizer, models, pre_tokenizers, processors
from transformers import BertConfig, BertModel, PreTrainedTokenizerFast


def build_tiny_encoder(path: str, seed: int = 0, hidden_size: int = 32,
                       num_layers: int = 2) -> str:
    chars = list(string.ascii_lowercase + string.ascii_uppercase +
                 string.digits + string.punctuation)
    vocab_list = (["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
                  + chars + ["##" + c for c in chars])
    vocab = {tok: i for i, tok in enumerate(vocab_list)}

    wordpiece = models.WordPiece(vocab=vocab, unk_token="[UNK]",
                                 max_input_chars_per_word=200)
    tok = Tokenizer(wordpiece)
    tok.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    tok.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])])
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok, unk_token="[UNK]", pad_token="[PAD]",
        cls_token="[CLS]", sep_token="[SEP]", mask_token="[MASK]")

    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab_list),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=2,
        intermediate_size=hidden_size * 2,
        max_position_embeddings=512,
    )
    model = BertModel(config)
    model.eval()
    model.save_pretrained(path)
    fast.save_pretrained(path)
    return path


if __name__ == "__main__":
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else "./tiny-encoder"
    print(build_tiny_encoder(target))
