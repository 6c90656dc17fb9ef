import pytest
import torch

from polycode.nn import CodeModel
from polycode.training import build_model, collate

from conftest import tiny_config

VARIANTS = [("vanilla", "none"), ("abs_pos", "none"), ("rel_pos", "none"), ("path", "none"),
            ("path", "alpha"), ("path", "beta"), ("path", "gamma")]


@pytest.mark.parametrize("variant,scheme", VARIANTS)
def test_encoder_shape_and_determinism(completion_ds, variant, scheme):
    train = completion_ds.split("train")
    torch.manual_seed(0)
    model = build_model(tiny_config("completion", f"model.variant={variant}", f"meta.scheme={scheme}"), train)
    model.eval()
    batch = collate([train[i] for i in range(4)])
    enc = model.encoder(batch)
    assert enc.shape == (*batch.tokens.shape, 16)
    assert torch.equal(enc, model.encoder(batch))
    assert model(batch).shape == (4, len(train.vocab))


def test_zero_layers_pass_embeddings_through(completion_ds):
    train = completion_ds.split("train")
    model = build_model(tiny_config("completion", "model.layers=0", "meta.scheme=none"), train).eval()
    batch = collate([train[0]])
    expected = model.encoder.embed_proj(model.encoder.embedding(batch.tokens))
    assert torch.equal(model.encoder(batch), expected)


def test_same_seed_same_model(completion_ds):
    train = completion_ds.split("train")
    cfg = tiny_config("completion")
    batch = collate([train[i] for i in range(3)])
    outs = []
    for _ in range(2):
        torch.manual_seed(7)
        outs.append(build_model(cfg, train).eval()(batch))
    assert torch.equal(*outs)


def test_padding_does_not_change_real_positions(completion_ds):
    train = completion_ds.split("train")
    model = build_model(tiny_config("completion"), train).eval()
    lengths = [len(train[i]) for i in range(len(train))]
    short = min(range(len(train)), key=lambda i: lengths[i])
    long = max(range(len(train)), key=lambda i: lengths[i])
    assert lengths[short] < lengths[long]
    alone = model.encoder(collate([train[short]]))
    padded = model.encoder(collate([train[short], train[long]]))
    assert torch.allclose(alone[0], padded[0, :lengths[short]], atol=1e-5)


def test_language_conditioning(completion_ds):
    train = completion_ds.split("train")
    batch = collate([train[0]])
    other = collate([train[0]])
    other.language = 1 - other.language
    static = build_model(tiny_config("completion", "meta.scheme=none"), train).eval()
    assert torch.equal(static.encoder(batch), static.encoder(other))
    meta = build_model(tiny_config("completion", "meta.scheme=alpha"), train).eval()
    assert not torch.allclose(meta.encoder(batch), meta.encoder(other))


def test_generated_slots_have_no_static_copy(completion_ds):
    train = completion_ds.split("train")
    counts = {}
    for scheme in ("none", "alpha", "beta", "gamma"):
        model = build_model(tiny_config("completion", f"meta.scheme={scheme}"), train)
        layer = model.encoder.layers[0]
        counts[scheme] = model.parameter_counts()
        generated = set(model.encoder.generators.slots(0)) if model.encoder.generators is not None else set()
        assert set(layer.static.keys()) == {"Q", "K", "V", "rK", "rV", "aQ", "aK"} - generated
    d, d_P, layers = 16, 8, 2
    assert counts["alpha"]["generators"] == layers * 3 * 2 * d * d_P
    assert counts["gamma"]["generators"] == layers * 7 * 2 * d * d_P


def test_summarization_forward_and_decode(summarization_ds):
    train = summarization_ds.split("train")
    model = build_model(tiny_config("summarization"), train).eval()
    batch = collate([train[i] for i in range(3)])
    dists = model(batch)
    assert dists.shape == (3, batch.target.shape[1], len(train.vocab))
    assert torch.allclose(dists.sum(-1), torch.ones(3, batch.target.shape[1]), atol=1e-5)
    out = model.decode(batch)
    assert len(out) == 3 and all(len(s) <= model.max_decode_len for s in out)
    assert model.embed(batch).shape == (3, 16)


def test_embed_ignores_padding(completion_ds):
    train = completion_ds.split("train")
    model = build_model(tiny_config("completion"), train).eval()
    lengths = [len(s) for s in train]
    short = lengths.index(min(lengths))
    long = lengths.index(max(lengths))
    alone = model.embed(collate([train[short]]))
    padded = model.embed(collate([train[short], train[long]]))
    assert torch.allclose(alone[0], padded[0], atol=1e-5)


def test_direct_construction_requires_path_table(completion_ds):
    train = completion_ds.split("train")
    cfg = tiny_config("completion")
    model = CodeModel(cfg, len(train.vocab), train.vocab.n_node_types, len(train.languages))
    with pytest.raises(IndexError):
        model(collate([train[0]]))
