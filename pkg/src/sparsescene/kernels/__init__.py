from .attention import (AttentionWeights, attention_backward,
                        attention_forward, concat_captions, op_counter)
from .blocks import (CondWeights, s_avg_block_backward, s_avg_block_forward,
                     s_block_backward, s_block_forward)
from .embeddings import (apply_contextualized, apply_contextualized_backward,
                         attribute_embed, attribute_embed_backward,
                         class_embed, class_embed_backward)
from .encoder import (load_token_embeddings, pseudo_encode_sentence,
                      save_token_embeddings)
from .schedule import alpha_loss_weight
from .toy import ToyWeights, toy_backward, toy_forward

__all__ = [
    "AttentionWeights", "CondWeights", "ToyWeights",
    "attention_forward", "attention_backward", "concat_captions",
    "op_counter", "s_block_forward", "s_block_backward",
    "s_avg_block_forward", "s_avg_block_backward",
    "class_embed", "class_embed_backward",
    "attribute_embed", "attribute_embed_backward",
    "apply_contextualized", "apply_contextualized_backward",
    "alpha_loss_weight", "toy_forward", "toy_backward",
    "pseudo_encode_sentence", "save_token_embeddings",
    "load_token_embeddings",
]
