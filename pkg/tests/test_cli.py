import json

import pytest

from udec.cli import main


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


SIMULATE = {
    "n": 10,
    "rate": 0.25,
    "trials": 200,
    "seed": 3,
    "ensemble": {"kind": "uniform", "alphabet_size": 2},
    "channel": {"kind": "bsc", "p": 0.1},
    "family": {"kind": "additive"},
    "decoders": [
        {"kind": "universal"},
        {"kind": "ml"},
        {"kind": "metric", "theta": [[1, 0], [0, 1]], "label": "match"},
    ],
}


class TestSimulate:
    def test_exit_code_and_output(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", SIMULATE)
        out = str(tmp_path / "r.csv")
        assert main(["simulate", "--config", cfg, "--out", out]) == 0
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == (
            "decoder,n,R,trials,errors,estimate,ci_lo,ci_hi,bound_rhs,pass,"
            "config_hash,seed"
        )
        assert len(lines) == 4
        assert (tmp_path / "r.csv.manifest.json").exists()
        assert (tmp_path / "r.plot.csv").exists()

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", SIMULATE)
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["simulate", "--config", cfg, "--seed", "7", "--out", a]) == 0
        assert main(["simulate", "--config", cfg, "--seed", "7", "--out", b]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", SIMULATE)
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        main(["simulate", "--config", cfg, "--out", a])
        main(["simulate", "--config", cfg, "--seed", "12345", "--out", b])
        assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()

    def test_mac_channel(self, tmp_path):
        payload = {
            "n": 10,
            "rate1": 0.15,
            "rate2": 0.15,
            "trials": 100,
            "channel": {"kind": "mac_xor", "inner": {"kind": "bsc", "p": 0.1}},
            "family": {"kind": "mac_xor_additive"},
            "decoders": [{"kind": "universal"}, {"kind": "ml"}],
        }
        cfg = write_config(tmp_path, "m.json", payload)
        out = str(tmp_path / "m.csv")
        assert main(["simulate", "--config", cfg, "--out", out]) == 0
        header = (tmp_path / "m.csv").read_text().splitlines()[0]
        assert header.endswith("errors_both,errors_user1,errors_user2")


class TestAudit:
    def test_exact_mode(self, tmp_path):
        payload = {
            "audit_mode": "exact",
            "n": 5,
            "rate": 0.25,
            "theta_grid_size": 6,
            "ensemble": {"kind": "iid", "probs": [0.5, 0.5]},
            "channel": {"kind": "bsc", "p": 0.1},
            "family": {"kind": "additive"},
        }
        cfg = write_config(tmp_path, "a.json", payload)
        out = str(tmp_path / "a.csv")
        assert main(["audit", "--config", cfg, "--out", out]) == 0
        rows = (tmp_path / "a.csv").read_text().splitlines()
        assert rows[1].startswith("universal,")
        assert any(r.startswith("theta0,") for r in rows)

    def test_mc_mode(self, tmp_path):
        payload = {
            "audit_mode": "mc",
            "n": 12,
            "rate": 0.25,
            "trials": 1500,
            "theta_grid_size": 3,
            "shifted_trials": 400,
            "channel": {"kind": "bsc", "p": 0.1},
            "family": {"kind": "additive"},
        }
        cfg = write_config(tmp_path, "a.json", payload)
        out = str(tmp_path / "a.csv")
        assert main(["audit", "--config", cfg, "--out", out]) == 0

    def test_unknown_mode_is_config_error(self, tmp_path):
        cfg = write_config(tmp_path, "a.json", {"audit_mode": "bogus"})
        assert main(["audit", "--config", cfg]) == 2


class TestOtherSubcommands:
    def test_count_classes(self, tmp_path):
        cfg = write_config(
            tmp_path, "c.json", {"family": {"kind": "additive"}, "n_values": [2, 4]}
        )
        out = str(tmp_path / "c.csv")
        assert main(["count-classes", "--config", cfg, "--out", out]) == 0
        rows = (tmp_path / "c.csv").read_text().splitlines()
        assert rows[1].split(",")[1] == "4"  # K_2

    def test_shulman(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "s.json",
            {"families": [{"kind": "xor_parity", "num_bits": 4}], "random_families": 3},
        )
        out = str(tmp_path / "s.csv")
        assert main(["shulman", "--config", cfg, "--out", out]) == 0

    def test_surrogate(self, tmp_path):
        cfg = write_config(tmp_path, "k.json", {"n_values": [6, 8], "samples_per_y": 5})
        out = str(tmp_path / "k.csv")
        assert main(["surrogate-check", "--config", cfg, "--out", out]) == 0


class TestErrorHandling:
    def test_missing_config(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.json")
        assert main(["simulate", "--config", missing]) == 2
        assert "nope.json" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["simulate", "--config", str(path)]) == 2

    def test_unknown_subcommand(self, tmp_path):
        assert main(["frobnicate", "--config", "x.json"]) == 2

    def test_missing_required_key(self, tmp_path):
        payload = dict(SIMULATE)
        del payload["channel"]
        cfg = write_config(tmp_path, "c.json", payload)
        assert main(["simulate", "--config", cfg]) == 2

    def test_negative_rate_rejected(self, tmp_path):
        payload = dict(SIMULATE)
        payload["rate"] = -0.5
        cfg = write_config(tmp_path, "c.json", payload)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2

    def test_bad_decoder_kind(self, tmp_path):
        payload = dict(SIMULATE)
        payload["decoders"] = [{"kind": "oracle"}]
        cfg = write_config(tmp_path, "c.json", payload)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2

    def test_config_round_trip(self, tmp_path):
        text = json.dumps(SIMULATE, sort_keys=True)
        assert json.dumps(json.loads(text), sort_keys=True) == text
