"""Shared fixtures: a miniature seq2seq checkpoint trained in-process.

The probe is exercised against a real (if tiny) encoder-decoder model rather
than mocks, so the tests cover the same tokenizer/model loading path that
production checkpoints go through.  The model is trained for a few hundred CPU
steps on a lead-extraction task (summary = first words of the article), which
is enough for source conditioning to show up clearly in the scores.
"""

import numpy as np
import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers, processors
from transformers import BartConfig, BartForConditionalGeneration, PreTrainedTokenizerFast

WORDS = (
    "the a on in city council mayor storm river bridge traffic report plan "
    "budget school team game season player coach vote election market price "
    "company deal factory workers strike union health hospital doctor study "
    "results flood rain week month officials said announced new won lost"
).split()


def make_example(rng):
    """Random article of 8-15 words and its leading-words summary."""
    n = int(rng.integers(8, 16))
    words = [WORDS[i] for i in rng.integers(0, len(WORDS), n)]
    k = int(rng.integers(4, 7))
    return " ".join(words), " ".join(words[:k])


def _build_tokenizer(vocab):
    tok = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    tok.post_processor = processors.TemplateProcessing(
        single="<s> $A </s>",
        special_tokens=[("<s>", vocab["<s>"]), ("</s>", vocab["</s>"])],
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=tok,
        bos_token="<s>",
        eos_token="</s>",
        pad_token="<pad>",
        unk_token="<unk>",
        model_max_length=64,
    )


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    """Train the tiny checkpoint once per session and save it to disk."""
    vocab = {tok: i for i, tok in enumerate(["<pad>", "<s>", "</s>", "<unk>"] + WORDS)}
    tokenizer = _build_tokenizer(vocab)

    config = BartConfig(
        vocab_size=len(vocab),
        d_model=32,
        encoder_layers=1,
        decoder_layers=1,
        encoder_attention_heads=2,
        decoder_attention_heads=2,
        encoder_ffn_dim=64,
        decoder_ffn_dim=64,
        max_position_embeddings=128,
        pad_token_id=vocab["<pad>"],
        bos_token_id=vocab["<s>"],
        eos_token_id=vocab["</s>"],
        decoder_start_token_id=vocab["</s>"],
        forced_eos_token_id=None,
    )
    torch.manual_seed(0)
    model = BartForConditionalGeneration(config)

    rng = np.random.default_rng(0)
    data = [make_example(rng) for _ in range(256)]
    optimizer = torch.optim.AdamW(model.parameters(), lr=3e-3)
    model.train()
    for _ in range(300):
        idx = rng.integers(0, len(data), 16)
        enc = tokenizer([data[i][0] for i in idx], padding=True, return_tensors="pt")
        lab = tokenizer([data[i][1] for i in idx], padding=True, return_tensors="pt")["input_ids"]
        labels = lab.masked_fill(lab == config.pad_token_id, -100)
        loss = model(
            input_ids=enc["input_ids"],
            attention_mask=enc["attention_mask"],
            labels=labels,
        ).loss
        loss.backward()
        optimizer.step()
        optimizer.zero_grad()
    model.eval()

    out = tmp_path_factory.mktemp("checkpoint") / "tiny"
    tokenizer.save_pretrained(str(out))
    model.save_pretrained(str(out))
    return str(out)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                status = "PASS" if outcome == "passed" else "FAIL"
                rows.append((nodeid.split("::")[-1], status))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(rows):
            terminalreporter.write_line(f"{status}  {name}")


@pytest.fixture(scope="session")
def grounded_pairs():
    """Twenty articles whose summaries are genuine leads of the article."""
    from harim_probe.probing import PairText

    rng = np.random.default_rng(7)
    pairs = []
    for i in range(20):
        article, summary = make_example(rng)
        pairs.append(PairText(f"g{i:02d}", article, summary))
    return pairs
