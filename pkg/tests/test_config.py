"""Config parsing and digest tests."""
import hashlib
import json

import pytest

from bindkit.config import (
    ConfigError,
    PipelineConfig,
    config_from_mapping,
    load_config,
    parse_toml,
)

FULL_TOML = """
# screening pipeline settings
seed = 7

[split]
ratios = [0.7, 0.2, 0.1]

[curation]
ki_min_nm = 0.01
ki_max_nm = 1e9

[fingerprint]
radius = 3
nbits = 1024

[gbdt]
n_trees = 50
max_depth = 4
learning_rate = 0.1
min_samples_leaf = 5
n_histogram_bins = 64
subsample = 0.8
early_stopping_rounds = 10
splitter = "exact"

[evaluation]
bin_start = 0.0
bin_stop = 10.0
bin_width = 1.0
threshold = 5.0

[paths]
property_table = "custom.csv"
fasta = "receptors.fasta"

[featurize]
workers = 2
"""


def test_parse_toml_value_types():
    doc = parse_toml(
        'name = "abc"\n'
        "count = 3\n"
        "rate = 0.25\n"
        "big = 1e6\n"
        "on = true\n"
        "off = false\n"
        "items = [1, 2, 3]\n"
        "mixed = [0.5, 2]\n"
        "empty = []\n")
    assert doc == {"name": "abc", "count": 3, "rate": 0.25, "big": 1e6,
                   "on": True, "off": False, "items": [1, 2, 3],
                   "mixed": [0.5, 2], "empty": []}
    assert isinstance(doc["count"], int) and isinstance(doc["rate"], float)


def test_parse_toml_sections_and_comments():
    doc = parse_toml(
        "# leading comment\n"
        "top = 1   # trailing comment\n"
        "\n"
        "[alpha]\n"
        'label = "a # not a comment"\n'
        "[beta.gamma]\n"
        "x = 2\n")
    assert doc["top"] == 1
    assert doc["alpha"]["label"] == "a # not a comment"
    assert doc["beta"]["gamma"]["x"] == 2


def test_parse_toml_rejects_malformed_lines():
    for text in ("just words\n",
                 "[unclosed\n",
                 "[]\n",
                 "key =\n",
                 'key = "unterminated\n',
                 "key = [1, 2\n",
                 "key = what\n"):
        with pytest.raises(ConfigError):
            parse_toml(text)


def test_parse_toml_rejects_duplicates():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_toml("a = 1\na = 2\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_toml("[s]\nx = 1\nx = 2\n")


def test_defaults():
    cfg = load_config(None)
    assert cfg.seed == 2024
    assert cfg.ratios == (0.8, 0.1, 0.1)
    assert cfg.bounds.min_nm == 1e-3 and cfg.bounds.max_nm == 1e10
    assert cfg.radius == 2 and cfg.nbits == 2048
    assert cfg.bin_start == -2.0 and cfg.bin_stop == 12.0
    assert cfg.bin_width == 0.5 and cfg.threshold == 4.0
    assert cfg.workers == 1
    assert cfg.property_table is None and cfg.fasta is None
    # the training seed follows the pipeline seed
    assert cfg.gbdt.seed == 2024


def test_full_config_round_trip(tmp_path):
    path = tmp_path / "pipeline.toml"
    path.write_text(FULL_TOML)
    cfg = load_config(path)
    assert cfg.seed == 7
    assert cfg.ratios == (0.7, 0.2, 0.1)
    assert cfg.bounds.min_nm == 0.01 and cfg.bounds.max_nm == 1e9
    assert cfg.radius == 3 and cfg.nbits == 1024
    assert cfg.gbdt.n_trees == 50
    assert cfg.gbdt.splitter == "exact"
    assert cfg.gbdt.early_stopping_rounds == 10
    assert cfg.gbdt.subsample == 0.8
    assert cfg.gbdt.seed == 7
    assert cfg.bin_width == 1.0 and cfg.threshold == 5.0
    assert cfg.property_table == "custom.csv"
    assert cfg.fasta == "receptors.fasta"
    assert cfg.workers == 2


def test_unknown_names_fail_loudly():
    with pytest.raises(ConfigError, match="unknown config section"):
        config_from_mapping({"fancy": {"x": 1}})
    with pytest.raises(ConfigError, match="unknown key"):
        config_from_mapping({"fingerprint": {"radois": 2}})
    with pytest.raises(ConfigError, match="unknown top-level"):
        config_from_mapping({"sede": 3})


def test_type_checking():
    with pytest.raises(ConfigError, match="expected int"):
        config_from_mapping({"seed": "7"})
    with pytest.raises(ConfigError, match="boolean"):
        config_from_mapping({"seed": True})
    with pytest.raises(ConfigError, match="expected str"):
        config_from_mapping({"gbdt": {"splitter": 3}})
    with pytest.raises(ConfigError, match="expected list"):
        config_from_mapping({"split": {"ratios": 0.8}})


def test_value_constraints():
    with pytest.raises(ConfigError, match="power of two"):
        config_from_mapping({"fingerprint": {"nbits": 1000}})
    with pytest.raises(ConfigError, match="radius"):
        config_from_mapping({"fingerprint": {"radius": -1}})
    with pytest.raises(ConfigError, match="sum to 1"):
        config_from_mapping({"split": {"ratios": [0.7, 0.2, 0.2]}})
    with pytest.raises(ConfigError, match="three entries"):
        config_from_mapping({"split": {"ratios": [0.5, 0.5]}})
    with pytest.raises(ConfigError, match="workers"):
        config_from_mapping({"featurize": {"workers": 0}})
    with pytest.raises(ConfigError):
        config_from_mapping({"gbdt": {"learning_rate": 2.0}})
    with pytest.raises(ConfigError):
        config_from_mapping({"curation": {"ki_min_nm": -1.0}})


def test_canonical_json_and_digest():
    cfg = load_config(None)
    text = cfg.canonical_json()
    doc = json.loads(text)
    assert text == json.dumps(doc, sort_keys=True, separators=(",", ":"))
    assert cfg.digest() == hashlib.sha256(text.encode()).hexdigest()
    assert cfg.digest() == load_config(None).digest()
    assert config_from_mapping({"seed": 9}).digest() != cfg.digest()


def test_digest_ignores_formatting(tmp_path):
    a = tmp_path / "a.toml"
    b = tmp_path / "b.toml"
    a.write_text("seed = 5\n[fingerprint]\nradius = 2\n[featurize]\nworkers = 1\n")
    b.write_text("# different layout\nseed = 5   # same\n\n"
                 "[featurize]\nworkers = 1\n[fingerprint]\nradius = 2\n")
    # same resolved settings, same digest, despite different text
    assert load_config(a).digest() == load_config(b).digest()


def test_with_seed_rewrites_both_seeds():
    cfg = load_config(None).with_seed(99)
    assert cfg.seed == 99 and cfg.gbdt.seed == 99
    assert cfg.digest() != load_config(None).digest()


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.toml")
