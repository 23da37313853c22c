import pytest

from mecsfc import config as cfgmod
from mecsfc.config import ExperimentConfig
from mecsfc.errors import ConfigurationError


def test_defaults_table():
    c = ExperimentConfig().validate()
    assert c.topology.n_stations == 10 and c.topology.compute_ghz == (2.0, 6.0)
    assert c.topology.bandwidth_mbps == (20.0, 100.0) and c.topology.distance_m == (100.0, 800.0)
    assert c.workload.data_kbits == (800.0, 1000.0) and c.workload.n_vnfs == (3, 5)
    assert c.device.kappa == 1e-26 and c.channel.bandwidth_hz == 20e6
    assert c.td3.buffer_size == 2000 and c.td3.batch_size == 128 and c.td3.lr == 1e-3
    assert c.ddqn.eps_decay == 0.9995 and c.ddqn.eps_min == 0.01
    assert c.run.episodes == 3000 and c.run.slots == 20


def test_text_round_trip(tmp_path):
    c = ExperimentConfig().replace(**{"run.seed": 7, "device.compute_ghz": 1.2, "run.schemes": ("local", "edge")})
    assert cfgmod.loads(cfgmod.dumps(c)) == c
    cfgmod.dump(c, tmp_path / "c.ini")
    assert cfgmod.load(tmp_path / "c.ini") == c


def test_partial_file_keeps_defaults():
    c = cfgmod.loads("[run]\nepisodes = 5\n[topology]\ncompute_ghz = 3, 3\n")
    assert c.run.episodes == 5 and c.topology.compute_ghz == (3.0, 3.0)
    assert c.workload == ExperimentConfig().workload


@pytest.mark.parametrize("text", [
    "[nope]\na = 1\n",
    "[run]\nbogus = 1\n",
    "[run]\nepisodes = many\n",
    "[run]\nscheme = nope\n",
    "[run]\nepisodes = 0\n",
    "[cost]\nweights = 0.5, 0.5, 0.5\n",
])
def test_invalid_files(text):
    with pytest.raises(ConfigurationError):
        cfgmod.loads(text)
