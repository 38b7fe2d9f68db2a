import pytest

from riscap.config import ExperimentConfig, dump_config, load_config, parse_config, with_overrides
from riscap.errors import ConfigError


def test_parse_with_comments_and_bare_words():
    cfg = parse_config(
        """
        # system
        n_tx = 3   # transmit antennas
        snr_grid_db = [0, 10, 20]
        phase_mode = optimized
        ga_generations = 7
        los_power_r = 0.5
        """
    )
    assert cfg.system.n_tx == 3 and cfg.snr_grid_db == (0, 10, 20)
    assert cfg.phase_mode == "optimized" and cfg.ga.generations == 7
    assert cfg.system.los_power_r == 0.5


def test_round_trip():
    cfg = parse_config("n_rx = 2\nm_grid = [4, 8]\nseed = 9\nga_mutation_rate = 0.2\n")
    assert parse_config(dump_config(cfg)) == cfg


@pytest.mark.parametrize(
    "text",
    [
        "bogus = 1",
        "n_tx 3",
        "n_tx = -1",
        "snr_grid_db = [10, 0]",
        "phase_mode = best",
        "mc_trials = 0",
        "ga_population = 0",
    ],
)
def test_invalid(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_overrides():
    cfg = with_overrides(ExperimentConfig(), seed=3, trials=50, out="x.csv", threads=2)
    assert (cfg.seed, cfg.mc_trials, cfg.output_path, cfg.threads) == (3, 50, "x.csv", 2)
    with pytest.raises(ConfigError):
        with_overrides(ExperimentConfig(), threads=0)
