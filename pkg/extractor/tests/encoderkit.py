"""Offline tiny encoder and the 20-sentence extraction fixture."""
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordPiece
from tokenizers.normalizers import BertNormalizer
from tokenizers.pre_tokenizers import BertPreTokenizer
from tokenizers.processors import TemplateProcessing
from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

HIDDEN_SIZE = 32

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "a", "on", "near", "deep", "old", "little",
    "bank", "river", "##bank", "money", "water", "flows", "steep", "grass",
    "mouse", "cat", "sat", "field", "ran", "clicks", "button", "screen",
    "pad", "moved", "cursor", "quietly", "opened", "account",
]


def build_tiny_encoder(directory):
    """A small public-architecture contextual encoder usable fully offline."""
    vocab = {token: i for i, token in enumerate(VOCAB)}
    backend = Tokenizer(WordPiece(vocab=vocab, unk_token="[UNK]"))
    backend.normalizer = BertNormalizer(lowercase=True)
    backend.pre_tokenizer = BertPreTokenizer()
    backend.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]",
        sep_token="[SEP]", mask_token="[MASK]",
    )
    torch.manual_seed(7)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=HIDDEN_SIZE,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    model = BertModel(config)
    model.eval()
    tokenizer.save_pretrained(directory)
    model.save_pretrained(directory)
    return directory


# 20 period-tagged occurrences of two target lemmas; token_index marks the
# 0-based whitespace position of the occurrence
FIXTURE_ROWS = [
    ("old", "bank", 1, "the bank of the river flows deep"),
    ("old", "bank", 3, "water near the bank flows quietly"),
    ("old", "bank", 2, "the steep bank near the water"),
    ("old", "bank", 1, "a bank of deep grass near the river"),
    ("old", "bank", 4, "the cat sat on bank grass"),
    ("old", "bank", 1, "the riverbank flows deep"),
    ("new", "bank", 1, "the bank opened a money account"),
    ("new", "bank", 2, "a little bank account"),
    ("new", "bank", 0, "bank money moved quietly"),
    ("new", "bank", 3, "the money sat on bank screen"),
    ("new", "bank", 1, "a bank button on the screen"),
    ("old", "mouse", 1, "a mouse ran on the field"),
    ("old", "mouse", 2, "the little mouse sat near the grass"),
    ("old", "mouse", 1, "the mouse ran near the water"),
    ("old", "mouse", 3, "the cat sat mouse quietly"),
    ("new", "mouse", 1, "the mouse clicks the button"),
    ("new", "mouse", 1, "a mouse cursor moved on the screen"),
    ("new", "mouse", 2, "clicks the mouse on the pad"),
    ("new", "mouse", 0, "mouse moved the cursor"),
    ("new", "mouse", 1, "the mouse button opened the screen"),
]


def write_sentences(path, rows=FIXTURE_ROWS):
    lines = ["period\tlemma\ttoken_index\tsentence"]
    lines += [f"{p}\t{l}\t{i}\t{s}" for p, l, i, s in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
