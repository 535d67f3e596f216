"""Base model construction.

`tiny-random-llama` builds a randomly initialized sub-1B decoder sized for
desk-scale checks (byte vocabulary, ~0.4M parameters). Any other id is treated
as a local Hugging Face checkpoint directory and loaded with its own
tokenizer.
"""

import torch

from gskgc_trainer import TrainerError
from gskgc_trainer.data import ByteTokenizer

BUILTIN_TINY = "tiny-random-llama"


def build_model_and_tokenizer(base_model: str, max_seq_len: int, seed: int):
    if base_model == BUILTIN_TINY:
        from transformers import LlamaConfig, LlamaForCausalLM

        torch.manual_seed(seed)
        config = LlamaConfig(
            vocab_size=ByteTokenizer.vocab_size,
            hidden_size=128,
            intermediate_size=256,
            num_hidden_layers=2,
            num_attention_heads=4,
            num_key_value_heads=4,
            max_position_embeddings=max_seq_len,
            pad_token_id=ByteTokenizer.pad_id,
            bos_token_id=ByteTokenizer.bos_id,
            eos_token_id=ByteTokenizer.eos_id,
        )
        return LlamaForCausalLM(config), ByteTokenizer()

    from pathlib import Path

    if not Path(base_model).exists():
        raise TrainerError(
            f"base model {base_model!r} is neither {BUILTIN_TINY!r} nor a "
            f"local checkpoint directory")
    from transformers import AutoModelForCausalLM, AutoTokenizer

    model = AutoModelForCausalLM.from_pretrained(base_model)
    hf_tok = AutoTokenizer.from_pretrained(base_model)
    return model, _HfTokenizerAdapter(hf_tok)


class _HfTokenizerAdapter:
    """Adapts a Hugging Face tokenizer to the byte-tokenizer surface."""

    def __init__(self, tok):
        self._tok = tok
        self.eos_id = tok.eos_token_id
        self.bos_id = tok.bos_token_id if tok.bos_token_id is not None else self.eos_id
        self.pad_id = tok.pad_token_id if tok.pad_token_id is not None else self.eos_id
        self.vocab_size = len(tok)

    def encode(self, text):
        return self._tok.encode(text, add_special_tokens=False)

    def decode(self, ids):
        return self._tok.decode(ids)
