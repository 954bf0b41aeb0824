import pytest
from hypothesis import given
from hypothesis import strategies as st

from hlsep.configfile import format_config, load_config, parse_config
from hlsep.pipeline import MIXTURES_ONLY, SOURCES_AVAILABLE, PipelineConfig


def test_defaults_round_trip():
    assert parse_config(format_config(PipelineConfig())) == PipelineConfig()


def test_every_field_listed():
    text = format_config(PipelineConfig())
    keys = {line.split("=")[0].strip() for line in text.splitlines() if "=" in line}
    for prefix in ("heart", "lung"):
        for name in ("alpha", "num_layers", "lambda1", "lambda2", "epsilon", "max_iterations", "inner_rank", "seed"):
            assert f"{prefix}.{name}" in keys
    for prefix in ("heart_band", "lung_band"):
        assert f"{prefix}.low_cut_hz" in keys and f"{prefix}.transition_width_hz" in keys
    assert {"mode", "parallel", "period_search_min_s", "period_search_max_s"} <= keys


def test_partial_override(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# comment\nheart.alpha = 2   # inline\n\nlung.num_layers=3\nmode = sources-available\n")
    cfg = load_config(p)
    assert cfg.heart_nmf.alpha == 2.0 and cfg.lung_nmf.num_layers == 3
    assert cfg.mode == SOURCES_AVAILABLE
    assert cfg.heart_nmf.num_layers == PipelineConfig().heart_nmf.num_layers


@pytest.mark.parametrize(
    "text,match",
    [
        ("bogus = 1", "unknown key"),
        ("heart.bogus = 1", "unknown key"),
        ("heart.alpha", "expected"),
        ("heart.num_layers = two", "bad value"),
        ("heart.alpha = 1\nheart.alpha = 2", "duplicate"),
        ("parallel = maybe", "boolean"),
        ("heart.lambda1 = -1", "lambda1"),
        ("mode = sometimes", "mode"),
    ],
)
def test_errors(text, match):
    with pytest.raises(ValueError, match=match):
        parse_config(text)


@given(st.floats(-5, 10).filter(lambda a: a != 0), st.integers(1, 5), st.booleans())
def test_random_round_trip(alpha, layers, parallel):
    from dataclasses import replace

    base = PipelineConfig()
    cfg = replace(
        base,
        heart_nmf=replace(base.heart_nmf, alpha=alpha, num_layers=layers),
        parallel=parallel,
        mode=MIXTURES_ONLY,
    )
    assert parse_config(format_config(cfg)) == cfg
