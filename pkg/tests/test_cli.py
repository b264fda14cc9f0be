import json

from eqmatch.cli import main


def test_gen_and_match_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "c.eqmz"
    assert main(["gen", "--dim", "2", "--side", "32", "--geometry", "torus", "--seed", "3", "--out", str(cfg)]) == 0
    out = tmp_path / "m"
    assert main(["match", "--input", str(cfg), "--out", str(out), "--format", "csv,json"]) == 0
    summary = json.loads((tmp_path / "m.json").read_text())
    assert summary["summary"]["n_sites"] == 1024 and summary["version"]
    first = (tmp_path / "m.csv").read_text().splitlines()[0]
    assert first.startswith("# ") and json.loads(first[2:])["command"] == "match"


def test_match_is_byte_deterministic(tmp_path):
    args = ["match", "--dim", "2", "--side", "48", "--seed", "5", "--kmax", "6"]
    out = tmp_path / "a"
    main(args + ["--out", str(out)])
    first = out.with_suffix(".csv").read_bytes(), out.with_suffix(".json").read_bytes()
    main(args + ["--out", str(out)])
    assert (out.with_suffix(".csv").read_bytes(), out.with_suffix(".json").read_bytes()) == first


def test_tail_outputs(tmp_path):
    out = tmp_path / "t"
    code = main(["tail", "--rule", "meshalkin", "--dim", "1", "--side", "20000", "--trials", "2",
                 "--radii", "4..64", "--out", str(out), "--format", "csv,json,svg"])
    assert code == 0
    fit = json.loads((tmp_path / "t.json").read_text())
    assert -0.8 < fit["fit"]["slope"] < -0.2
    assert (tmp_path / "t.svg").read_text().startswith("<?xml")


def test_verify_exit_zero(tmp_path):
    assert main(["verify", "--side", "16", "--trials", "3", "--out", str(tmp_path / "v")]) == 0


def test_events_table(tmp_path):
    out = tmp_path / "e"
    assert main(["events", "--k", "2,3", "--s", "2", "--trials", "200", "--out", str(out)]) == 0
    table = json.loads((tmp_path / "e.json").read_text())
    assert any(row["event"] == "enclosed_complement" for row in table["rows"])


def test_usage_errors(capsys):
    assert main(["match", "--side", "0"]) == 2
    assert main(["match", "--kmax", "4", "--margin", "100"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["tail", "--format", "png"]) == 2
    assert main(["tail", "--rule", "meshalkin", "--dim", "1", "--side", "64", "--geometry", "window",
                 "--radii", "4,8,40"]) == 2
    assert "error" in capsys.readouterr().err


def test_undecidable_exit(tmp_path):
    cfg = tmp_path / "w.eqmz"
    assert main(["gen", "--dim", "1", "--side", "8", "--out", str(cfg)]) == 0
    # a stored window has no field to extend, so cutters outside it are unknowable
    data = cfg.read_bytes()
    from eqmatch.lattice import Configuration, loads_configuration, write_configuration
    c = loads_configuration(data)
    bare = Configuration.from_array(c.array, c.geometry)
    write_configuration(bare, cfg)
    assert main(["match", "--input", str(cfg), "--kmax", "3", "--out", str(tmp_path / "m")]) == 3


def test_config_file(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("# defaults\nside = 24\nseed = 9\n")
    main(["--config", str(conf), "match", "--kmax", "5", "--out", str(tmp_path / "a")])
    main(["match", "--side", "24", "--seed", "9", "--kmax", "5", "--out", str(tmp_path / "b")])
    assert json.loads((tmp_path / "a.json").read_text())["summary"] == json.loads((tmp_path / "b.json").read_text())["summary"]
    # the command line wins over the file
    main(["--config", str(conf), "match", "--seed", "1", "--kmax", "5", "--out", str(tmp_path / "c")])
    assert json.loads((tmp_path / "c.json").read_text())["spec"]["seed"] == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("side 24\n")
    assert main(["--config", str(bad), "match"]) == 2
